use num_complex::Complex64;
use proptest::prelude::*;

use selfconsistent::dynamics::{build_coupled_map, CircleMap};
use selfconsistent::ensemble::{step_ensemble, ParticleEnsemble};
use selfconsistent::fourier::{self, fejer_weight, frequencies, grid_size, FourierDensity, GridFunction};
use selfconsistent::frechet::{DerivativeMode, FrechetAssembler};
use selfconsistent::linalg::{CMatrix, Lu};
use selfconsistent::operator::{apply_operator, assemble_transfer};
use selfconsistent::{make_bump_kernel, MeanFieldSystem};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

/// Real density of order `n` with `ĥ(0) = 1` and `ĥ(N) = 0`.
fn real_density(n: usize) -> impl Strategy<Value = FourierDensity> {
    prop::collection::vec(complex(), n - 1).prop_map(move |cs| {
        let mut h = FourierDensity::uniform(n).unwrap();
        for (k, c) in (1..n as i64).zip(cs) {
            let c = c / (1.0 + k as f64);
            h.set_coeff(k, c).unwrap();
            h.set_coeff(-k, c.conj()).unwrap();
        }
        h
    })
}

/// Positive density: `1 + Re Σ c_k e_k` with `Σ |c_k| < 1`.
fn positive_density(n: usize) -> impl Strategy<Value = FourierDensity> {
    prop::collection::vec(complex(), 4).prop_map(move |cs| {
        let mut h = FourierDensity::uniform(n).unwrap();
        for (k, c) in (1..=4i64).zip(cs) {
            let c = c * 0.1;
            h.set_coeff(k, c).unwrap();
            h.set_coeff(-k, c.conj()).unwrap();
        }
        h
    })
}

fn any_density(n: usize) -> impl Strategy<Value = FourierDensity> {
    prop::collection::vec(complex(), 2 * n).prop_map(move |cs| FourierDensity::new(n, cs, false).unwrap())
}

fn system(n: usize, a: f64, derivative: bool, eps: f64) -> MeanFieldSystem {
    let scale = if derivative { 0.2 } else { 1.0 };
    MeanFieldSystem::new(
        CircleMap::pinched_doubling(a).unwrap(),
        make_bump_kernel(0.45, scale, derivative, n).unwrap(),
        eps,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_round_trip(h in any_density(12)) {
        let back = fourier::from_grid(&fourier::to_grid(&h), 12).unwrap();
        prop_assert!(back.max_coeff_diff(&h).unwrap() <= 1e-12);
    }

    #[test]
    fn symmetrize_gives_hermitian_pairs(h in any_density(9)) {
        let mut s = h.clone();
        s.symmetrize();
        for k in 1..9i64 {
            prop_assert!((s.coeff(-k) - s.coeff(k).conj()).norm() <= 1e-12);
        }
        prop_assert_eq!(s.coeff(0).im, 0.0);
    }

    #[test]
    fn projection_kills_top_mode_and_squares_on_repeat(h in any_density(10)) {
        let p = fourier::project_fejer(&h);
        prop_assert_eq!(p.coeff(10), Complex64::new(0.0, 0.0));
        let pp = fourier::project_fejer(&p);
        for k in frequencies(10) {
            let w = fejer_weight(10, k);
            prop_assert!((pp.coeff(k) - h.coeff(k) * w * w).norm() <= 1e-15);
        }
    }

    #[test]
    fn differentiation_commutes_with_projection(h in any_density(16)) {
        let a = fourier::differentiate(&fourier::project_fejer(&h));
        let b = fourier::project_fejer(&fourier::differentiate(&h));
        prop_assert!(a.max_coeff_diff(&b).unwrap() <= 1e-13);
    }

    #[test]
    fn fejer_projection_contracts(h in real_density(24), n in 2usize..24) {
        let p = fourier::project_fejer_to(&h, n).unwrap();
        let m = grid_size(24);
        let l1 = |f: &FourierDensity| fourier::grid_l1(&fourier::to_grid_with(f, m).unwrap());
        prop_assert!(l1(&p) <= l1(&h) + 1e-10);
        let w11 = |f: &FourierDensity| l1(f) + l1(&fourier::differentiate(f));
        prop_assert!(w11(&p) <= w11(&h) + 1e-10);
    }

    #[test]
    fn norms_are_homogeneous_and_ordered(h in real_density(8), c in complex()) {
        let l1 = fourier::l1_norm(&h);
        prop_assert!((fourier::l1_norm(&h.scaled(c)) - c.norm() * l1).abs() <= 1e-12 * (1.0 + l1));
        prop_assert!(fourier::w11_norm(&h) >= l1);
    }

    #[test]
    fn convolution_matches_quadrature(f in real_density(6), g in real_density(6)) {
        let conv = fourier::convolve(&f, &g).unwrap();
        let m = grid_size(6);
        let xs: Vec<f64> = (0..m).map(|j| j as f64 / m as f64).collect();
        let fv = f.eval_many(&xs);
        let gv = g.eval_many(&xs);
        for (i, x) in xs.iter().enumerate().step_by(7) {
            let direct: Complex64 = (0..m).map(|j| fv[(i + m - j) % m] * gv[j]).sum::<Complex64>() / m as f64;
            prop_assert!((conv.eval(*x) - direct).norm() <= 1e-8);
        }
    }

    #[test]
    fn operator_rows_and_real_output(a in 0.0..0.95f64, h in real_density(12)) {
        let n = 12;
        let t = CircleMap::pinched_doubling(a).unwrap();
        let op = assemble_transfer(&t.sample(grid_size(n)), n, "T").unwrap();
        for i in frequencies(n) {
            let unit = if i == 0 { 1.0 } else { 0.0 };
            prop_assert!((op.entry(0, i) - unit).norm() <= 1e-12);
            prop_assert_eq!(op.entry(n as i64, i), Complex64::new(0.0, 0.0));
        }
        let out = apply_operator(&op, &h).unwrap();
        prop_assert!(out.hermitian_defect() <= 1e-11);
        prop_assert_eq!(out.coeff(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn coupled_map_consistency(f in positive_density(16), derivative in any::<bool>(), eps in 0.0..0.03f64) {
        let sys = system(16, 0.9, derivative, eps);
        let grid = build_coupled_map(&sys, &f).unwrap();
        prop_assert!(grid.max_imag() <= 1e-11);
        // I'_f against spectral differentiation of I_f(x) - x
        let m = grid_size(16);
        let offset: Vec<f64> = grid.coupling().iter().enumerate().map(|(j, v)| v - j as f64 / m as f64).collect();
        let spec = fourier::from_grid(&GridFunction::from_real(offset), 16).unwrap();
        let d = fourier::to_grid(&fourier::differentiate(&spec));
        for (j, v) in d.values().iter().enumerate() {
            prop_assert!((1.0 + v.re - grid.coupling_derivative()[j]).abs() <= 1e-8);
        }
        let bound = eps * sys.kernel().sup_norm() + 1e-9;
        for (s, t) in grid.coupled_map().iter().zip(sys.base_samples()) {
            prop_assert!((s - t).abs() <= bound);
        }
    }

    #[test]
    fn derivative_structure(f in positive_density(12), v in real_density(12), derivative in any::<bool>()) {
        let n = 12;
        let sys = system(n, 0.9, derivative, 0.025);
        for mode in [DerivativeMode::Spectral, DerivativeMode::Truncated] {
            let d = FrechetAssembler::new(&sys, mode).unwrap().assemble(&f).unwrap();
            let mut zero_mean = v.clone();
            zero_mean.set_coeff(0, Complex64::new(0.0, 0.0)).unwrap();
            let dv = d.matrix().matvec(zero_mean.coeffs());
            prop_assert!(dv[fourier::index_of(n, 0).unwrap()].norm() <= 1e-10);
            if mode == DerivativeMode::Spectral {
                // frequency N has no conjugate partner when its weight is kept
                continue;
            }
            for k in 1..n as i64 {
                let ck = d.matrix().column(fourier::index_of(n, k).unwrap());
                let cm = d.matrix().column(fourier::index_of(n, -k).unwrap());
                for j in 1..n as i64 {
                    let a = ck[fourier::index_of(n, j).unwrap()];
                    let b = cm[fourier::index_of(n, -j).unwrap()];
                    prop_assert!((a - b.conj()).norm() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn lu_solves_random_systems(seed in any::<u64>()) {
        let n = 9;
        let mut state = seed | 1;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = CMatrix::identity(n);
        a.scale_in_place(Complex64::new(4.0, 0.0));
        for v in a.as_mut_slice() {
            *v += Complex64::new(next(), next());
        }
        let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
        let b = a.matvec(&x);
        let lu = Lu::new(&a).unwrap();
        let y = lu.solve(&b);
        for (u, w) in x.iter().zip(&y) {
            prop_assert!((u - w).norm() <= 1e-12);
        }
        prop_assert!(lu.condition_estimate() >= 1.0);
    }

    #[test]
    fn ensemble_positions_stay_in_unit_interval(seed in any::<u64>(), eps in 0.0..0.03f64) {
        let sys = system(16, 0.9, true, eps);
        let mut p = ParticleEnsemble::uniform(500, seed).unwrap();
        for _ in 0..5 {
            p = step_ensemble(&p, &sys);
            prop_assert!(p.positions().iter().all(|x| (0.0..1.0).contains(x)));
        }
    }
}

#[test]
fn bump_kernel_profile() {
    let sys = system(64, 0.9, false, 0.0);
    assert!((sys.kernel().value(0.5) - 1.0).abs() < 1e-15);
    assert_eq!(sys.kernel().value(0.02), 0.0);
    let att = system(64, 0.9, true, 0.0);
    assert!(att.kernel().coeff(0).norm() < 1e-10);
}
