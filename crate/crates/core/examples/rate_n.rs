//! Distance of low-order fixed points to a high-order reference.

use selfconsistent::fourier::l1_distance;
use selfconsistent::solvers::{fit_line, newton_solve, uncoupled_fixed_density, SolverConfig};
use selfconsistent::{make_bump_kernel, CircleMap, FourierDensity, MeanFieldSystem};

fn solve(n: usize) -> selfconsistent::Result<FourierDensity> {
    let system = MeanFieldSystem::new(CircleMap::pinched_doubling(0.9)?, make_bump_kernel(0.45, 1.0, false, n)?, 0.025)?;
    let h0 = uncoupled_fixed_density(&system)?;
    Ok(newton_solve(&system, &h0, &SolverConfig::default())?.0)
}

fn main() -> selfconsistent::Result<()> {
    let reference = solve(256)?;
    let orders = [4, 8, 16, 32, 64];
    let mut x = Vec::new();
    let mut y = Vec::new();
    for n in orders {
        let d = l1_distance(&solve(n)?, &reference)?;
        println!("N={n:3} distance {d:.4e}");
        x.push((n as f64).log10());
        y.push(d.log10());
    }
    let fit = fit_line(&x, &y)?;
    println!("log-log slope {:.3}", fit.slope);
    Ok(())
}
