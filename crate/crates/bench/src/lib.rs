//! Benchmark fixtures shared by the criterion targets.

use nsch_core::*;

/// A mid-coarsening spinodal state: the most expensive regime for the
/// per-step fixed point (active interfaces, nontrivial velocity).
pub fn spinodal_state(n: usize) -> (Grid, Params, State) {
    let grid = Grid::new(1.0, n, BcMode::Periodic).unwrap();
    let params = Params::default();
    let spec = InitialSpec::SeededNoise {
        rho: 1.0,
        u: 0.0,
        chi: 0.0,
        amplitude: 1e-4,
        seed: 42,
    };
    let state0 = make_initial(&grid, &spec).unwrap();
    let controls = StepControls { dt: 2e-4, ..StepControls::default() };
    let mut sinks: Vec<Sink> = vec![];
    let summary = run(&state0, &params, &grid, &controls, 0.04, usize::MAX, &mut sinks)
        .expect("warmup run");
    (grid, params, summary.final_state)
}
