//! Bit-stable CSV output: time series of diagnostics, field snapshots, and
//! scenario summaries. Numbers are printed with Rust's shortest round-trip
//! formatting, lines end in LF, files end with a newline.

use nsch_core::{chemical_potential, DiagnosticsRecord, Grid, Params, State};
use std::io;
use std::path::Path;

pub const TIMESERIES_HEADER: &str = "time,mass,momentum,chi_mass,energy,sup_rho,sup_u,sup_chi,chi_min,chi_max,rho_min,rho_max,psi_min,psi_max,picard_iters";

fn io_context(path: &Path, e: io::Error) -> io::Error {
    io::Error::new(e.kind(), format!("{}: {}", path.display(), e))
}

/// One CSV row per record, in time order, fixed column order.
pub fn write_timeseries(records: &[DiagnosticsRecord], path: &Path) -> io::Result<()> {
    let mut out = String::new();
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.time,
            r.mass,
            r.momentum,
            r.chi_mass,
            r.energy,
            r.sup_dev.0,
            r.sup_dev.1,
            r.sup_dev.2,
            r.chi_range.0,
            r.chi_range.1,
            r.rho_range.0,
            r.rho_range.1,
            r.psi_range.0,
            r.psi_range.1,
            r.picard_iters,
        ));
    }
    std::fs::write(path, out).map_err(|e| io_context(path, e))
}

/// Cell-centered snapshot `x,rho,u,chi,mu` with mu recomputed from the
/// constitutive relation.
pub fn write_snapshot(
    state: &State,
    params: &Params,
    grid: &Grid,
    path: &Path,
) -> io::Result<()> {
    let mu = chemical_potential(state, params, grid)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let mut out = String::from("x,rho,u,chi,mu\n");
    for j in 0..grid.cells() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            grid.center(j),
            state.rho[j],
            state.u[j],
            state.chi[j],
            mu[j],
        ));
    }
    std::fs::write(path, out).map_err(|e| io_context(path, e))
}

/// Parse a snapshot back into columns; the round-trip partner of
/// [`write_snapshot`].
pub fn read_snapshot(path: &Path) -> io::Result<Vec<[f64; 5]>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_context(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            if line != "x,rho,u,chi,mu" {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("unexpected snapshot header `{line}`"),
                ));
            }
            continue;
        }
        let mut row = [0.0; 5];
        let mut fields = line.split(',');
        for slot in &mut row {
            let f = fields.next().ok_or_else(|| {
                io::Error::new(io::ErrorKind::InvalidData, format!("short row {i}"))
            })?;
            *slot = f.parse().map_err(|_| {
                io::Error::new(io::ErrorKind::InvalidData, format!("bad number `{f}`"))
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One line per assertion: name, measured, threshold, pass/fail.
pub fn render_summary(outcome: &nsch_core::ScenarioOutcome) -> String {
    let mut out = String::new();
    for a in &outcome.assertions {
        let status = if a.pass {
            match a.note {
                Some(note) => format!("pass ({note})"),
                None => "pass".into(),
            }
        } else {
            "fail".into()
        };
        out.push_str(&format!("{},{},{},{}\n", a.name, a.measured, a.threshold, status));
    }
    out
}

pub fn write_summary(outcome: &nsch_core::ScenarioOutcome, path: &Path) -> io::Result<()> {
    std::fs::write(path, render_summary(outcome)).map_err(|e| io_context(path, e))
}
