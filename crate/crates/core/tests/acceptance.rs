//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --release --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use selfconsistent::dynamics::{build_coupled_map, CircleMap};
use selfconsistent::ensemble::{empirical_density, evolve, ParticleEnsemble};
use selfconsistent::experiments::{
    cmd_convergence, cmd_rate_n, fejer_test_function, newton_digit_ratios, random_density, ConvergenceRun,
    ExperimentConfig, KernelKind, SEQUENTIAL_FIT_WINDOW,
};
use selfconsistent::fourier::{self, fejer_weight, frequencies, grid_size, FourierDensity};
use selfconsistent::frechet::{DerivativeMode, FrechetAssembler};
use selfconsistent::operator::{apply_operator, assemble_transfer};
use selfconsistent::solvers::{
    newton_solve, rate_fit, reflection_asymmetry, sequential_solve, uncoupled_fixed_density, Scheme, SolverConfig,
};
use selfconsistent::{make_bump_kernel, MeanFieldSystem};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn config(kind: KernelKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.kernel.kind = kind;
    cfg
}

fn same_grid_l1(h: &FourierDensity, m: usize) -> f64 {
    fourier::grid_l1(&fourier::to_grid_with(h, m).unwrap())
}

fn fejer_lemma() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut excess = f64::NEG_INFINITY;
    for i in 0..200 {
        let n = 4 + i % 29;
        let h = random_density(2 * n, &mut rng).unwrap();
        let p = fourier::project_fejer_to(&h, n).unwrap();
        let m = grid_size(2 * n);
        excess = excess.max(same_grid_l1(&p, m) - same_grid_l1(&h, m));
    }
    let mut ratios = Vec::new();
    for i in 3..=9 {
        let n = 1usize << i;
        let f = fejer_test_function(n).unwrap();
        let err = fourier::l1_distance(&fourier::project_fejer(&f), &f).unwrap();
        let df = fourier::l1_norm(&fourier::differentiate(&f));
        ratios.push(err / ((n as f64).ln() / n as f64 * df));
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let last = *ratios.last().unwrap();
    outcome(
        excess <= 1e-10 && last <= 2.0 * median,
        format!("max contraction excess {excess:.2e}, rate ratios {ratios:.4?}, last/median {:.3}", last / median),
    )
}

fn analytic_operators() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=8usize {
        let op = assemble_transfer(&CircleMap::doubling().sample(grid_size(n)), n, "doubling").unwrap();
        for k in frequencies(n) {
            for i in frequencies(n) {
                let expect = if i == 2 * k { fejer_weight(n, k) } else { 0.0 };
                worst = worst.max((op.entry(k, i) - expect).norm());
            }
        }
    }
    let alpha = 0.3;
    for n in 1..=8usize {
        let op = assemble_transfer(&CircleMap::rotation(alpha).sample(grid_size(n)), n, "rotation").unwrap();
        for k in frequencies(n) {
            for i in frequencies(n) {
                let expect = if i == k {
                    Complex64::from_polar(fejer_weight(n, k), -2.0 * PI * k as f64 * alpha)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((op.entry(k, i) - expect).norm());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max entry deviation {worst:.2e}"))
}

fn duality_pairing() -> Outcome {
    let n = 32;
    let fine = 1 << 14;
    let xs: Vec<f64> = (0..fine).map(|j| j as f64 / fine as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let degree = 2.0 + (rng.random::<f64>() * 2.0).floor();
        let c = 0.8 * rng.random::<f64>();
        let phase = rng.random::<f64>();
        let lift = move |x: f64| degree * x + c * (2.0 * PI * (x + phase)).sin() / (2.0 * PI);
        let samples: Vec<f64> = (0..grid_size(n)).map(|j| lift(j as f64 / grid_size(n) as f64)).collect();
        let h = random_density(n, &mut rng).unwrap();
        let out = apply_operator(&assemble_transfer(&samples, n, "S").unwrap(), &h).unwrap();
        let hv = h.eval_many(&xs);
        for k in frequencies(n) {
            // w(k) ⟨h, e_k ∘ S⟩ by a rectangle rule on 2^14 points
            let pairing: Complex64 = xs
                .iter()
                .zip(&hv)
                .map(|(&x, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * lift(x)))
                .sum::<Complex64>()
                / fine as f64;
            worst = worst.max((out.coeff(k) - pairing * fejer_weight(n, k)).norm());
        }
    }
    outcome(worst <= 1e-8, format!("max deviation over 20 pairs {worst:.2e}"))
}

fn ltilde(system: &MeanFieldSystem, f: &FourierDensity) -> FourierDensity {
    let coupled = build_coupled_map(system, f).unwrap();
    let op = assemble_transfer(coupled.coupled_map(), system.order(), "T_eps_f").unwrap();
    apply_operator(&op, f).unwrap()
}

fn fd_ratios(mode: DerivativeMode, configs: usize) -> Vec<(f64, f64)> {
    let n = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut out = Vec::new();
    for c in 0..configs {
        let derivative = c % 2 == 1;
        let kernel = make_bump_kernel(0.45, if derivative { 0.2 } else { 1.0 }, derivative, n).unwrap();
        let system = MeanFieldSystem::new(CircleMap::pinched_doubling(0.9).unwrap(), kernel, 0.02).unwrap();
        let mut f = uncoupled_fixed_density(&system).unwrap();
        let mut e = FourierDensity::zeros(n).unwrap();
        for k in 1..6i64 {
            let s = 1.0 / (k * k) as f64;
            let a = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.3 * s;
            f.set_coeff(k, f.coeff(k) + a).unwrap();
            f.set_coeff(-k, f.coeff(-k) + a.conj()).unwrap();
            let b = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * s;
            e.set_coeff(k, b).unwrap();
            e.set_coeff(-k, b.conj()).unwrap();
        }
        let d = FrechetAssembler::new(&system, mode).unwrap().assemble(&f).unwrap();
        let de = FourierDensity::new(n, d.matrix().matvec(e.coeffs()), false).unwrap();
        let base = ltilde(&system, &f);
        let r: Vec<f64> = [1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&t| {
                let ft = f.checked_add(&e.scaled(Complex64::new(t, 0.0))).unwrap();
                let quotient = ltilde(&system, &ft).checked_sub(&base).unwrap().scaled(Complex64::new(1.0 / t, 0.0));
                fourier::l1_norm(&quotient.checked_sub(&de).unwrap())
            })
            .collect();
        out.push((r[0] / r[1], r[1] / r[2]));
    }
    out
}

fn frechet_fd() -> Outcome {
    let ratios = fd_ratios(DerivativeMode::default(), 6);
    let pass = ratios.iter().all(|&(a, b)| (5.0..=20.0).contains(&a) && (5.0..=20.0).contains(&b));
    let truncated = fd_ratios(DerivativeMode::Truncated, 2);
    outcome(
        pass,
        format!("ratios {ratios:.3?} (fully truncated bracket, for comparison: {truncated:.3?})"),
    )
}

fn figure_runs(runs: &[(&str, &ConvergenceRun)]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, run) in runs {
        let min_res = run.newton.residuals().into_iter().fold(f64::INFINITY, f64::min);
        let fit = rate_fit(&run.sequential.errors(), SEQUENTIAL_FIT_WINDOW).unwrap();
        let gap = run.report.gap_orders;
        let ok = min_res <= 1e-12 && fit.slope < 0.0 && fit.r_squared > 0.95 && gap >= 10.0;
        pass &= ok;
        detail.push(format!(
            "{name}: newton min residual {min_res:.2e}, sequential slope {:.4} r2 {:.5}, gap {gap:.1} orders, {:.1}s seq / {:.1}s newton",
            fit.slope, fit.r_squared, run.sequential.total_seconds(), run.newton.total_seconds()
        ));
    }
    outcome(pass, detail.join("; "))
}

fn order_two(runs: &[(&str, &ConvergenceRun)]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, run) in runs {
        let ratios = newton_digit_ratios(&run.newton.errors());
        let in_range = |r: f64| (1.5..=2.5).contains(&r);
        let ok = ratios.windows(2).any(|w| in_range(w[0]) && in_range(w[1]));
        pass &= ok;
        detail.push(format!("{name}: {ratios:.3?}"));
    }
    outcome(pass, detail.join("; "))
}

fn rate_in_n() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let report = cmd_rate_n(&cfg, dir.path()).unwrap();
    let slope = report.slope.unwrap_or(f64::NAN);
    let pass = (-1.3..=-0.7).contains(&slope) && report.all_converged;
    let mut detail = format!(
        "translation kernel vs N={}: distances {}, slope {slope:.3}",
        report.reference_order,
        report.distances.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(" ")
    );
    let attraction = cmd_rate_n(&config(KernelKind::Attraction), dir.path()).unwrap();
    detail.push_str(&format!(
        "; attraction kernel (informational): slope {:.3}",
        attraction.slope.unwrap_or(f64::NAN)
    ));
    outcome(pass, detail)
}

fn conservation(runs: &[(&str, &ConvergenceRun)], attraction: &FourierDensity) -> Outcome {
    let exact = runs.iter().all(|(_, run)| {
        run.sequential
            .records
            .iter()
            .chain(&run.newton.records)
            .all(|r| r.mass_defect == 0.0)
    });
    let asym = reflection_asymmetry(attraction);
    outcome(
        exact && asym <= 1e-8,
        format!("mass exactly 1 on every iterate: {exact}; attraction asymmetry {asym:.2e}"),
    )
}

fn ensemble_oracle() -> Outcome {
    let cfg = config(KernelKind::Attraction);
    let e = &cfg.ensemble;
    let system = cfg.system(e.reference_order).unwrap();
    let h0 = uncoupled_fixed_density(&system).unwrap();
    let (h, _) = newton_solve(&system, &h0, &cfg.solver_config()).unwrap();
    let target = fourier::project_fejer_to(&h, e.density_order).unwrap();
    let particle_system = cfg.system(e.kernel_order).unwrap();
    let run = || {
        let p = evolve(&ParticleEnsemble::uniform(e.particles, cfg.seed).unwrap(), &particle_system, e.burn_in);
        empirical_density(&p, e.density_order).unwrap()
    };
    let first = run();
    let second = run();
    let bit_exact = first
        .coeffs()
        .iter()
        .zip(second.coeffs())
        .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    let distance = fourier::l1_distance(&first, &target).unwrap();
    outcome(
        distance <= 0.05 && bit_exact,
        format!(
            "M={} burn-in {}: L1 distance {distance:.4} to the N={} fixed point, repeat bit-exact: {bit_exact}",
            e.particles, e.burn_in, e.reference_order
        ),
    )
}

fn scheme_agreement() -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for kind in [KernelKind::Translation, KernelKind::Attraction] {
        let cfg = config(kind);
        let system = cfg.system(cfg.solver.order).unwrap();
        let h0 = uncoupled_fixed_density(&system).unwrap();
        let (hn, tn) = newton_solve(&system, &h0, &cfg.solver_config()).unwrap();
        let seq_cfg = SolverConfig {
            scheme: Scheme::Sequential,
            max_iter: 5000,
            ..cfg.solver_config()
        };
        let (hs, ts) = sequential_solve(&system, &h0, &seq_cfg).unwrap();
        let d = fourier::l1_distance(&hs, &hn).unwrap();
        pass &= d <= 1e-10 && tn.converged && ts.converged;
        detail.push(format!("{kind:?}: distance {d:.2e} after {} sequential steps", ts.len() - 1));
    }
    outcome(pass, detail.join("; "))
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!("[{}] {id:2} {name}: {} ({secs:.1}s)", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((id, name, o, secs));
    };

    record(1, "Fejér contraction and approximation rate", &mut fejer_lemma);
    record(2, "analytic doubling and rotation operators", &mut analytic_operators);
    record(3, "duality pairing against quadrature", &mut duality_pairing);
    record(4, "Fréchet finite-difference ratios", &mut frechet_fd);

    let dir = tempfile::tempdir().unwrap();
    let translation = cmd_convergence(&config(KernelKind::Translation), &dir.path().join("t")).unwrap();
    let attraction = cmd_convergence(&config(KernelKind::Attraction), &dir.path().join("a")).unwrap();
    let runs = [("translation", &translation), ("attraction", &attraction)];
    record(5, "reference convergence experiment at N=256", &mut || figure_runs(&runs));
    record(6, "Newton order-2 digit ratios", &mut || order_two(&runs));
    record(7, "fixed-point error rate in N", &mut rate_in_n);
    record(8, "mass conservation and reflection symmetry", &mut || {
        conservation(&runs, &attraction.reference)
    });
    record(9, "particle ensemble oracle", &mut ensemble_oracle);
    record(10, "sequential and Newton limits agree", &mut scheme_agreement);

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
