//! Checks the assembled derivative against central finite differences of
//! one self-consistent step.

use num_complex::Complex64;
use selfconsistent::fourier::{self, FourierDensity};
use selfconsistent::frechet::{self_consistent_step, DerivativeMode, FrechetAssembler};
use selfconsistent::solvers::uncoupled_fixed_density;
use selfconsistent::{make_bump_kernel, CircleMap, MeanFieldSystem};

fn main() -> selfconsistent::Result<()> {
    let n = 32;
    let system = MeanFieldSystem::new(CircleMap::pinched_doubling(0.9)?, make_bump_kernel(0.45, 0.2, true, n)?, 0.025)?;
    let f = uncoupled_fixed_density(&system)?;
    let mut v = FourierDensity::zeros(n)?;
    for k in 1..4 {
        let c = Complex64::new(0.3 / k as f64, 0.1);
        v.set_coeff(k, c)?;
        v.set_coeff(-k, c.conj())?;
    }
    v.set_real(true);
    for mode in [DerivativeMode::Spectral, DerivativeMode::Truncated] {
        let d = FrechetAssembler::new(&system, mode)?.assemble(&f)?;
        let dv = FourierDensity::new(n, d.matrix().matvec(v.coeffs()), false)?;
        let mut prev = f64::NAN;
        print!("{mode:?}:");
        for t in [1e-2, 1e-3, 1e-4] {
            let plus = self_consistent_step(&system, &f.checked_add(&v.scaled(t.into()))?)?;
            let minus = self_consistent_step(&system, &f.checked_sub(&v.scaled(t.into()))?)?;
            let fd = plus.checked_sub(&minus)?.scaled((0.5 / t).into());
            let err = fourier::l1_norm(&fd.checked_sub(&dv)?);
            print!("  t={t:.0e} err={err:.3e} ratio={:.2}", prev / err);
            prev = err;
        }
        println!();
    }
    Ok(())
}
