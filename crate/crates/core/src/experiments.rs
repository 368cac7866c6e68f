//! Experiment configuration and the drivers behind the `sctool` commands.
//!
//! Every driver writes CSV files with a one-line header and floats printed
//! with 17 significant digits, plus a TOML summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{make_bump_kernel, CircleMap, MeanFieldSystem};
use crate::ensemble::{empirical_density, evolve, ParticleEnsemble};
use crate::error::{Error, Result};
use crate::fourier::{self, FourierDensity};
use crate::frechet::DerivativeMode;
use crate::solvers::{
    digit_ratios, fit_line, newton_solve, rate_fit, reflection_asymmetry, sequential_solve, solve,
    uncoupled_fixed_density, Scheme, SolveTrace, SolverConfig, StopRule,
};

/// Points of the profile CSVs.
pub const PROFILE_POINTS: usize = 1024;
/// Floor used when an error is exactly zero on a log scale.
pub const ERROR_FLOOR: f64 = f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    #[default]
    Pinched,
    Doubling,
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    /// `g = scale · b`
    #[default]
    Translation,
    /// `g = -scale · b'`
    Attraction,
}

impl KernelKind {
    pub fn default_scale(self) -> f64 {
        match self {
            KernelKind::Translation => 1.0,
            KernelKind::Attraction => 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    Sequential,
    #[default]
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StopKind {
    #[default]
    Tolerance,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeKind {
    #[default]
    Spectral,
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapSection {
    pub family: MapKind,
    pub a: f64,
    pub alpha: f64,
}

impl Default for MapSection {
    fn default() -> Self {
        Self {
            family: MapKind::Pinched,
            a: 0.9,
            alpha: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelKind,
    pub delta: f64,
    /// Defaults to 1 for translation and 1/5 for attraction.
    pub scale: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            kind: KernelKind::Translation,
            delta: 0.45,
            scale: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub order: usize,
    pub epsilon: f64,
    pub scheme: SchemeKind,
    pub max_iter: usize,
    pub tolerance: f64,
    pub stop: StopKind,
    pub derivative: DerivativeKind,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            order: 256,
            epsilon: 0.025,
            scheme: SchemeKind::Newton,
            max_iter: 35,
            tolerance: 1e-13,
            stop: StopKind::Tolerance,
            derivative: DerivativeKind::Spectral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    pub orders: Vec<usize>,
    pub reference_order: usize,
    pub newton_iterations: usize,
}

impl Default for RateSection {
    fn default() -> Self {
        Self {
            orders: vec![2, 4, 8, 16, 32, 64, 128],
            reference_order: 1024,
            newton_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub particles: usize,
    pub burn_in: usize,
    /// Order of the Fejér-smoothed empirical density.
    pub density_order: usize,
    /// Fourier modes of `g` used for the particle coupling.
    pub kernel_order: usize,
    /// Order of the spectral fixed point the ensemble is compared with.
    pub reference_order: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self {
            particles: 1_000_000,
            burn_in: 100,
            density_order: 64,
            kernel_order: 64,
            reference_order: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub map: MapSection,
    pub kernel: KernelSection,
    pub solver: SolverSection,
    pub rate: RateSection,
    pub ensemble: EnsembleSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            map: MapSection::default(),
            kernel: KernelSection::default(),
            solver: SolverSection::default(),
            rate: RateSection::default(),
            ensemble: EnsembleSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML; unknown keys are rejected with their location.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: String| Err(Error::Config(format!("{name}: {reason}")));
        if self.solver.order == 0 {
            return bad("solver.order", "must be positive".into());
        }
        if self.solver.max_iter == 0 {
            return bad("solver.max_iter", "must be at least 1".into());
        }
        if !(self.solver.tolerance > 0.0) {
            return bad("solver.tolerance", "must be positive".into());
        }
        if !(self.kernel.delta > 0.0 && self.kernel.delta <= 0.5) {
            return bad("kernel.delta", format!("must lie in (0, 1/2], got {}", self.kernel.delta));
        }
        if self.rate.orders.iter().any(|&n| n == 0) || self.rate.reference_order == 0 {
            return bad("rate.orders", "orders must be positive".into());
        }
        if self.ensemble.particles == 0 || self.ensemble.density_order == 0 || self.ensemble.kernel_order == 0 {
            return bad("ensemble", "particles and orders must be positive".into());
        }
        Ok(())
    }

    pub fn circle_map(&self) -> Result<CircleMap> {
        match self.map.family {
            MapKind::Pinched => CircleMap::pinched_doubling(self.map.a),
            MapKind::Doubling => Ok(CircleMap::doubling()),
            MapKind::Rotation => Ok(CircleMap::rotation(self.map.alpha)),
        }
    }

    /// The mean-field system at the given order.
    pub fn system(&self, order: usize) -> Result<MeanFieldSystem> {
        let scale = self.kernel.scale.unwrap_or(self.kernel.kind.default_scale());
        let derivative = self.kernel.kind == KernelKind::Attraction;
        let kernel = make_bump_kernel(self.kernel.delta, scale, derivative, order)?;
        MeanFieldSystem::new(self.circle_map()?, kernel, self.solver.epsilon)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            max_iter: self.solver.max_iter,
            tolerance: self.solver.tolerance,
            scheme: match self.solver.scheme {
                SchemeKind::Sequential => Scheme::Sequential,
                SchemeKind::Newton => Scheme::Newton,
            },
            stop: match self.solver.stop {
                StopKind::Tolerance => StopRule::Tolerance,
                StopKind::Fixed => StopRule::FixedCount,
            },
            derivative: match self.solver.derivative {
                DerivativeKind::Spectral => DerivativeMode::Spectral,
                DerivativeKind::Truncated => DerivativeMode::Truncated,
            },
            reference: None,
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn write_summary<T: Serialize>(path: &Path, summary: &T) -> Result<()> {
    let text = toml::to_string(summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn profile_grid() -> Vec<f64> {
    (0..PROFILE_POINTS).map(|j| j as f64 / PROFILE_POINTS as f64).collect()
}

fn real_profile(h: &FourierDensity, xs: &[f64]) -> Vec<f64> {
    h.eval_many(xs).into_iter().map(|z| z.re).collect()
}

/// Location and value of the largest profile sample.
pub fn profile_peak(h: &FourierDensity) -> (f64, f64) {
    let xs = profile_grid();
    real_profile(h, &xs)
        .into_iter()
        .zip(xs)
        .fold((0.0, f64::NEG_INFINITY), |best, (v, x)| if v > best.1 { (x, v) } else { best })
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_residual_l1: f64,
    pub seconds: f64,
    pub assembly_seconds: f64,
    pub derivative_seconds: f64,
    pub solve_seconds: f64,
}

impl From<&SolveTrace> for TraceSummary {
    fn from(t: &SolveTrace) -> Self {
        Self {
            iterations: t.len().saturating_sub(1),
            converged: t.converged,
            final_residual_l1: t.final_residual(),
            seconds: t.total_seconds(),
            assembly_seconds: t.records.iter().map(|r| r.assembly_seconds).sum(),
            derivative_seconds: t.records.iter().map(|r| r.derivative_seconds).sum(),
            solve_seconds: t.records.iter().map(|r| r.solve_seconds).sum(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointReport {
    pub order: usize,
    pub epsilon: f64,
    pub peak_uncoupled: f64,
    pub peak_coupled: f64,
    pub peak_shift: f64,
    pub max_uncoupled: f64,
    pub max_coupled: f64,
    pub reflection_asymmetry: f64,
    pub solve: TraceSummary,
}

pub struct FixedPointRun {
    pub uncoupled: FourierDensity,
    pub coupled: FourierDensity,
    pub trace: SolveTrace,
    pub report: FixedPointReport,
}

/// Uncoupled and coupled fixed points; writes `fixed_point.csv` with
/// columns `x,h0,h_eps` and `fixed_point_summary.toml`.
pub fn cmd_fixed_point(cfg: &ExperimentConfig, out: &Path) -> Result<FixedPointRun> {
    fs::create_dir_all(out)?;
    let system = cfg.system(cfg.solver.order)?;
    let h0 = uncoupled_fixed_density(&system)?;
    let (h, trace) = solve(&system, &h0, &cfg.solver_config())?;

    let xs = profile_grid();
    let p0 = real_profile(&h0, &xs);
    let p1 = real_profile(&h, &xs);
    write_csv(
        &out.join("fixed_point.csv"),
        "x,h0,h_eps",
        xs.iter().zip(&p0).zip(&p1).map(|((x, a), b)| vec![sci(*x), sci(*a), sci(*b)]),
    )?;
    let (x0, m0) = profile_peak(&h0);
    let (x1, m1) = profile_peak(&h);
    let mut shift = x1 - x0;
    if shift > 0.5 {
        shift -= 1.0;
    } else if shift < -0.5 {
        shift += 1.0;
    }
    let report = FixedPointReport {
        order: system.order(),
        epsilon: system.epsilon(),
        peak_uncoupled: x0,
        peak_coupled: x1,
        peak_shift: shift,
        max_uncoupled: m0,
        max_coupled: m1,
        reflection_asymmetry: reflection_asymmetry(&h),
        solve: TraceSummary::from(&trace),
    };
    write_summary(&out.join("fixed_point_summary.toml"), &report)?;
    Ok(FixedPointRun {
        uncoupled: h0,
        coupled: h,
        trace,
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub order: usize,
    pub steps: usize,
    pub sequential_slope: Option<f64>,
    pub sequential_r_squared: Option<f64>,
    pub sequential_rate: Option<f64>,
    /// `log10(e_{n+1}) / log10(e_n)` of the Newton errors above `1e-13`.
    pub newton_digit_ratios: Vec<f64>,
    /// `log10` of sequential over Newton error after the last step; zero
    /// errors are floored at machine epsilon.
    pub gap_orders: f64,
    pub sequential: TraceSummary,
    pub newton: TraceSummary,
}

pub struct ConvergenceRun {
    pub reference: FourierDensity,
    pub sequential: SolveTrace,
    pub newton: SolveTrace,
    pub report: ConvergenceReport,
}

/// Window of the sequential rate fit.
pub const SEQUENTIAL_FIT_WINDOW: std::ops::Range<usize> = 5..31;

/// Both schemes from `h*_{0,N}` for `max_iter` steps, measured against the
/// Newton result after the same number of steps. Writes `convergence.csv`
/// (`n,err_seq,err_newton,res_seq,res_newton`) and its summary.
pub fn cmd_convergence(cfg: &ExperimentConfig, out: &Path) -> Result<ConvergenceRun> {
    fs::create_dir_all(out)?;
    let system = cfg.system(cfg.solver.order)?;
    let h0 = uncoupled_fixed_density(&system)?;
    let base = SolverConfig {
        stop: StopRule::FixedCount,
        ..cfg.solver_config()
    };
    let (reference, _) = newton_solve(&system, &h0, &base)?;
    let traced = SolverConfig {
        reference: Some(reference.clone()),
        ..base
    };
    let (_, seq) = sequential_solve(&system, &h0, &traced)?;
    let (_, newton) = newton_solve(&system, &h0, &traced)?;

    let rows = seq.records.iter().zip(&newton.records).map(|(s, n)| {
        vec![
            s.n.to_string(),
            sci(s.error_l1.unwrap_or(f64::NAN)),
            sci(n.error_l1.unwrap_or(f64::NAN)),
            sci(s.residual_l1),
            sci(n.residual_l1),
        ]
    });
    write_csv(&out.join("convergence.csv"), "n,err_seq,err_newton,res_seq,res_newton", rows)?;

    let seq_err = seq.errors();
    let newton_err = newton.errors();
    let fit = rate_fit(&seq_err, SEQUENTIAL_FIT_WINDOW).ok();
    let last_seq = seq_err.last().copied().unwrap_or(f64::NAN).max(ERROR_FLOOR);
    let last_newton = newton_err.last().copied().unwrap_or(f64::NAN).max(ERROR_FLOOR);
    let report = ConvergenceReport {
        order: system.order(),
        steps: cfg.solver.max_iter,
        sequential_slope: fit.map(|f| f.slope),
        sequential_r_squared: fit.map(|f| f.r_squared),
        sequential_rate: fit.map(|f| 10f64.powf(f.slope)),
        newton_digit_ratios: newton_digit_ratios(&newton_err),
        gap_orders: last_seq.log10() - last_newton.log10(),
        sequential: TraceSummary::from(&seq),
        newton: TraceSummary::from(&newton),
    };
    write_summary(&out.join("convergence_summary.toml"), &report)?;
    Ok(ConvergenceRun {
        reference,
        sequential: seq,
        newton,
        report,
    })
}

/// Digit ratios of a Newton error sequence, restricted to steps whose
/// new error is still above `1e-13`.
pub fn newton_digit_ratios(errors: &[f64]) -> Vec<f64> {
    digit_ratios(errors)
        .into_iter()
        .filter(|&(n, _)| errors[n + 1] > 1e-13)
        .map(|(_, r)| r)
        .collect()
}

/// `rate_fit` on the exact sequence `0.5^n`, as a check of the fitting path.
pub fn synthetic_rate_check() -> Result<(f64, f64)> {
    let errors: Vec<f64> = (0..36).map(|n| 0.5f64.powi(n)).collect();
    let fit = rate_fit(&errors, SEQUENTIAL_FIT_WINDOW)?;
    Ok((fit.slope, fit.r_squared))
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub reference_order: usize,
    pub orders: Vec<usize>,
    pub distances: Vec<f64>,
    pub slope: Option<f64>,
    pub r_squared: Option<f64>,
    pub all_converged: bool,
}

/// `‖h*_{ε,N} - h*_{ε,N_ref}‖_{L¹}` over the configured orders. Writes
/// `rate_n.csv` (`N,distance`) and its summary.
pub fn cmd_rate_n(cfg: &ExperimentConfig, out: &Path) -> Result<RateReport> {
    fs::create_dir_all(out)?;
    let solve_at = |n: usize| -> Result<(FourierDensity, bool)> {
        let system = cfg.system(n)?;
        let h0 = uncoupled_fixed_density(&system)?;
        let sc = SolverConfig {
            max_iter: cfg.rate.newton_iterations,
            scheme: Scheme::Newton,
            ..cfg.solver_config()
        };
        let (h, trace) = newton_solve(&system, &h0, &sc)?;
        Ok((h, trace.converged || sc.stop == StopRule::FixedCount))
    };
    let (reference, ref_ok) = solve_at(cfg.rate.reference_order)?;
    let sweep: Vec<Result<(FourierDensity, bool)>> = cfg.rate.orders.par_iter().map(|&n| solve_at(n)).collect();
    let mut distances = Vec::with_capacity(sweep.len());
    let mut all_converged = ref_ok;
    for r in sweep {
        let (h, ok) = r?;
        all_converged &= ok;
        distances.push(fourier::l1_distance(&h, &reference)?);
    }
    write_csv(
        &out.join("rate_n.csv"),
        "N,distance",
        cfg.rate.orders.iter().zip(&distances).map(|(n, d)| vec![n.to_string(), sci(*d)]),
    )?;
    let (x, y): (Vec<f64>, Vec<f64>) = cfg
        .rate
        .orders
        .iter()
        .zip(&distances)
        .filter(|(_, d)| **d > 0.0)
        .map(|(n, d)| ((*n as f64).log10(), d.log10()))
        .unzip();
    let fit = fit_line(&x, &y).ok();
    let report = RateReport {
        reference_order: cfg.rate.reference_order,
        orders: cfg.rate.orders.clone(),
        distances,
        slope: fit.map(|f| f.slope),
        r_squared: fit.map(|f| f.r_squared),
        all_converged,
    };
    write_summary(&out.join("rate_n_summary.toml"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleReport {
    pub particles: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub density_order: usize,
    pub reference_order: usize,
    pub l1_distance: f64,
    pub spectral_converged: bool,
    pub seconds: f64,
}

/// Particle oracle against the spectral fixed point. Writes `ensemble.csv`
/// (`x,empirical,spectral`) and its summary.
pub fn cmd_ensemble(cfg: &ExperimentConfig, out: &Path) -> Result<EnsembleReport> {
    fs::create_dir_all(out)?;
    let start = Instant::now();
    let e = &cfg.ensemble;
    let system = cfg.system(e.reference_order)?;
    let h0 = uncoupled_fixed_density(&system)?;
    let (h, trace) = solve(&system, &h0, &cfg.solver_config())?;
    let target = fourier::project_fejer_to(&h, e.density_order)?;

    let particle_system = cfg.system(e.kernel_order)?;
    let p = evolve(&ParticleEnsemble::uniform(e.particles, cfg.seed)?, &particle_system, e.burn_in);
    let empirical = empirical_density(&p, e.density_order)?;
    let distance = fourier::l1_distance(&empirical, &target)?;

    let xs = profile_grid();
    let pe = real_profile(&empirical, &xs);
    let ps = real_profile(&target, &xs);
    write_csv(
        &out.join("ensemble.csv"),
        "x,empirical,spectral",
        xs.iter().zip(&pe).zip(&ps).map(|((x, a), b)| vec![sci(*x), sci(*a), sci(*b)]),
    )?;
    let report = EnsembleReport {
        particles: e.particles,
        burn_in: e.burn_in,
        seed: cfg.seed,
        density_order: e.density_order,
        reference_order: e.reference_order,
        l1_distance: distance,
        spectral_converged: trace.converged || cfg.solver.stop == StopKind::Fixed,
        seconds: start.elapsed().as_secs_f64(),
    };
    write_summary(&out.join("ensemble_summary.toml"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct FejerReport {
    pub samples: usize,
    pub max_contraction_excess_l1: f64,
    pub max_contraction_excess_w11: f64,
    pub orders: Vec<usize>,
    pub errors: Vec<f64>,
    pub ratios: Vec<f64>,
    pub last_over_median: f64,
}

/// `1 + cos 2πx + 0.3 sin 6πx`, the smooth test function of the rate table.
pub fn fejer_test_function(order: usize) -> Result<FourierDensity> {
    use std::f64::consts::PI;
    FourierDensity::from_fn(order, |x| 1.0 + (2.0 * PI * x).cos() + 0.3 * (6.0 * PI * x).sin())
}

/// Random real density with coefficients at up to `2N` and ĥ(0)=1.
pub fn random_density(order: usize, rng: &mut impl rand::Rng) -> Result<FourierDensity> {
    use num_complex::Complex64;
    let mut h = FourierDensity::zeros(order)?;
    h.set_coeff(0, Complex64::new(1.0, 0.0))?;
    for k in 1..order as i64 {
        let decay = 1.0 / (1.0 + k as f64);
        let c = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * decay;
        h.set_coeff(k, c)?;
        h.set_coeff(-k, c.conj())?;
    }
    h.set_real(true);
    Ok(h)
}

/// Contraction of `Π_N` on random densities and the `ln N / N` rate table.
/// Writes `fejer_rate.csv` (`N,error,ratio`) and its summary.
pub fn cmd_fejer_check(cfg: &ExperimentConfig, out: &Path) -> Result<FejerReport> {
    use rand::SeedableRng;
    fs::create_dir_all(out)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let samples = 200;
    let (mut ex1, mut ex2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..samples {
        let n = 4 + (i % 29);
        let h = random_density(2 * n, &mut rng)?;
        let p = fourier::project_fejer_to(&h, n)?;
        // both norms on the grid of the finer density
        let m = fourier::grid_size(2 * n);
        let l1 = |f: &FourierDensity| -> Result<f64> { Ok(fourier::grid_l1(&fourier::to_grid_with(f, m)?)) };
        let w11 = |f: &FourierDensity| -> Result<f64> { Ok(l1(f)? + l1(&fourier::differentiate(f))?) };
        ex1 = ex1.max(l1(&p)? - l1(&h)?);
        ex2 = ex2.max(w11(&p)? - w11(&h)?);
    }
    let orders: Vec<usize> = (3..=9).map(|i| 1usize << i).collect();
    let mut errors = Vec::new();
    let mut ratios = Vec::new();
    for &n in &orders {
        let f = fejer_test_function(n)?;
        let err = fourier::l1_distance(&fourier::project_fejer(&f), &f)?;
        let scale = (n as f64).ln() / n as f64 * fourier::l1_norm(&fourier::differentiate(&f));
        errors.push(err);
        ratios.push(err / scale);
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    write_csv(
        &out.join("fejer_rate.csv"),
        "N,error,ratio",
        orders.iter().zip(&errors).zip(&ratios).map(|((n, e), r)| vec![n.to_string(), sci(*e), sci(*r)]),
    )?;
    let report = FejerReport {
        samples,
        max_contraction_excess_l1: ex1,
        max_contraction_excess_w11: ex2,
        orders,
        errors,
        last_over_median: ratios.last().copied().unwrap_or(f64::NAN) / median,
        ratios,
    };
    write_summary(&out.join("fejer_summary.toml"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_reference_setup() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.map.a, 0.9);
        assert_eq!(cfg.kernel.delta, 0.45);
        assert_eq!(cfg.solver.epsilon, 0.025);
        assert_eq!(cfg.solver.order, 256);
        assert_eq!(cfg.solver.max_iter, 35);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn partial_config_and_diagnostics() {
        let cfg = ExperimentConfig::from_toml("[kernel]\nkind = \"attraction\"\n[solver]\norder = 32\n").unwrap();
        assert_eq!(cfg.kernel.kind, KernelKind::Attraction);
        assert_eq!(cfg.solver.order, 32);
        assert_eq!(cfg.solver.epsilon, 0.025);
        let err = ExperimentConfig::from_toml("[solver]\norder = 32\nbogus = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("line 3"), "{msg}");
        assert!(ExperimentConfig::from_toml("[solver]\ntolerance = -1.0\n").is_err());
    }

    #[test]
    fn uncoupled_fixed_point_columns_agree() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.solver.order = 16;
        cfg.solver.epsilon = 0.0;
        let run = cmd_fixed_point(&cfg, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("fixed_point.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,h0,h_eps"));
        for line in lines {
            let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((v[1] - v[2]).abs() <= 1e-12);
        }
        assert!(run.trace.converged);
    }

    #[test]
    fn rate_sweep_of_doubling_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.map.family = MapKind::Doubling;
        cfg.solver.epsilon = 0.0;
        cfg.rate.orders = vec![2, 4, 8, 8];
        cfg.rate.reference_order = 32;
        let report = cmd_rate_n(&cfg, dir.path()).unwrap();
        assert!(report.distances.iter().all(|&d| d <= 1e-12));
        assert!(report.all_converged);
    }

    #[test]
    fn synthetic_rate_is_recovered() {
        let (slope, r2) = synthetic_rate_check().unwrap();
        assert!((slope - 0.5f64.log10()).abs() < 1e-6);
        assert!(r2 > 0.999999);
    }

    #[test]
    fn uncoupled_convergence_errors_vanish() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::default();
        cfg.solver.order = 16;
        cfg.solver.epsilon = 0.0;
        cfg.solver.max_iter = 5;
        let run = cmd_convergence(&cfg, dir.path()).unwrap();
        for (s, n) in run.sequential.errors().iter().zip(run.newton.errors()).skip(1) {
            assert!(*s <= 1e-13 && n <= 1e-13, "{s:e} {n:e}");
        }
    }

    #[test]
    fn fejer_check_passes() {
        let dir = tempfile::tempdir().unwrap();
        let report = cmd_fejer_check(&ExperimentConfig::default(), dir.path()).unwrap();
        assert!(report.max_contraction_excess_l1 <= 1e-10);
        assert!(report.max_contraction_excess_w11 <= 1e-10);
        assert!(report.last_over_median <= 2.0);
    }
}
