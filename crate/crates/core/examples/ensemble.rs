//! Particle simulation of the coupled system compared with the spectral
//! fixed point.

use selfconsistent::ensemble::{empirical_density, evolve, ParticleEnsemble};
use selfconsistent::fourier::l1_distance;
use selfconsistent::solvers::{newton_solve, uncoupled_fixed_density, SolverConfig};
use selfconsistent::{make_bump_kernel, CircleMap, MeanFieldSystem};

fn main() -> selfconsistent::Result<()> {
    let map = CircleMap::pinched_doubling(0.9)?;
    let particles = MeanFieldSystem::new(map.clone(), make_bump_kernel(0.45, 0.2, true, 64)?, 0.025)?;
    let spectral = MeanFieldSystem::new(map, make_bump_kernel(0.45, 0.2, true, 512)?, 0.025)?;
    let h0 = uncoupled_fixed_density(&spectral)?;
    let (h, _) = newton_solve(&spectral, &h0, &SolverConfig::default())?;
    let p = evolve(&ParticleEnsemble::uniform(100_000, 7)?, &particles, 40);
    let empirical = empirical_density(&p, 64)?;
    println!("M={} after {} steps", p.len(), p.steps());
    println!("L¹ distance to the fixed point: {:.4}", l1_distance(&empirical, &h.resample(64)?)?);
    Ok(())
}
