//! Fejér projection of a kinked density: contraction in L¹ and the
//! approximation error as the order doubles.

use std::f64::consts::PI;

use selfconsistent::fourier::{self, FourierDensity};

fn main() -> selfconsistent::Result<()> {
    let fine = 512;
    let h = FourierDensity::from_fn(fine, |x| (2.0 * PI * x).cos().abs() - 2.0 / PI + (4.0 * PI * x).sin())?;
    let m = fourier::grid_size(fine);
    let l1 = |f: &FourierDensity| fourier::grid_l1(&fourier::to_grid_with(f, m).unwrap());
    println!("‖h‖₁ = {:.6}", l1(&h));
    for n in [8, 16, 32, 64, 128] {
        let p = fourier::project_fejer_to(&h, n)?;
        let err = l1(&p.resample(fine)?.checked_sub(&h)?);
        println!("N={n:4} ‖Π_N h‖₁ = {:.6}  ‖Π_N h - h‖₁ = {err:.3e}", l1(&p));
    }
    Ok(())
}
