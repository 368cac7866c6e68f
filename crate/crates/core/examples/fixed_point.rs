//! Uncoupled and coupled invariant densities of the pinched doubling map
//! with the translation kernel.

use selfconsistent::experiments::profile_peak;
use selfconsistent::solvers::{newton_solve, uncoupled_fixed_density, SolverConfig};
use selfconsistent::{make_bump_kernel, CircleMap, MeanFieldSystem};

fn main() -> selfconsistent::Result<()> {
    let n = 128;
    let system = MeanFieldSystem::new(CircleMap::pinched_doubling(0.9)?, make_bump_kernel(0.45, 1.0, false, n)?, 0.025)?;
    let h0 = uncoupled_fixed_density(&system)?;
    let (h, trace) = newton_solve(&system, &h0, &SolverConfig::default())?;
    let (x0, v0) = profile_peak(&h0);
    let (x1, v1) = profile_peak(&h);
    println!("Newton: {} iterations, final residual {:.2e}", trace.len(), trace.final_residual());
    println!("uncoupled peak {v0:.4} at x={x0:.4}");
    println!("coupled   peak {v1:.4} at x={x1:.4} (shift {:+.4})", x1 - x0);
    Ok(())
}
