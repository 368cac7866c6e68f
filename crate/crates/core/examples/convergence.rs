//! Sequential and Newton iterations side by side, measured against a
//! converged reference.

use selfconsistent::solvers::{newton_solve, sequential_solve, uncoupled_fixed_density, SolverConfig, StopRule};
use selfconsistent::{make_bump_kernel, CircleMap, MeanFieldSystem};

fn main() -> selfconsistent::Result<()> {
    let n = 64;
    let system = MeanFieldSystem::new(CircleMap::pinched_doubling(0.9)?, make_bump_kernel(0.45, 0.2, true, n)?, 0.025)?;
    let h0 = uncoupled_fixed_density(&system)?;
    let (reference, _) = newton_solve(&system, &h0, &SolverConfig::default())?;
    let cfg = SolverConfig {
        max_iter: 20,
        stop: StopRule::FixedCount,
        reference: Some(reference),
        ..SolverConfig::default()
    };
    let (_, seq) = sequential_solve(&system, &h0, &cfg)?;
    let (_, newton) = newton_solve(&system, &h0, &SolverConfig { max_iter: 6, ..cfg.clone() })?;
    println!("{:>3} {:>12} {:>12}", "n", "sequential", "newton");
    for (i, s) in seq.errors().iter().enumerate() {
        let nw = newton.errors().get(i).map_or(String::new(), |e| format!("{e:12.3e}"));
        println!("{i:3} {s:12.3e} {nw}");
    }
    Ok(())
}
