//! Fixed points of `f ↦ Π_N L_{T_{ε,f}} f` by sequential iteration and by
//! Newton's method over the nonzero frequencies.

use std::ops::Range;
use std::time::Instant;

use num_complex::Complex64;

use crate::dynamics::{build_coupled_map, MeanFieldSystem};
use crate::error::{Error, Result};
use crate::fourier::{self, frequencies, index_of, FourierDensity};
use crate::frechet::{DerivativeMode, FrechetAssembler};
use crate::linalg::{CMatrix, Lu};
use crate::operator::{
    apply_operator, assemble_transfer, leading_fixed_density, DEFAULT_EIGEN_MAX_ITER, DEFAULT_EIGEN_TOL,
};

pub const DEFAULT_MAX_ITER: usize = 35;
pub const DEFAULT_TOLERANCE: f64 = 1e-13;
/// Largest acceptable condition estimate of the Newton block.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    Sequential,
    #[default]
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// Stop once the L¹ residual is at most the tolerance.
    #[default]
    Tolerance,
    /// Always run `max_iter` updates.
    FixedCount,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iter: usize,
    pub tolerance: f64,
    pub scheme: Scheme,
    pub stop: StopRule,
    pub derivative: DerivativeMode,
    /// Density the error column of the trace is measured against.
    pub reference: Option<FourierDensity>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iter: DEFAULT_MAX_ITER,
            tolerance: DEFAULT_TOLERANCE,
            scheme: Scheme::default(),
            stop: StopRule::default(),
            derivative: DerivativeMode::default(),
            reference: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter {
                name: "max_iter",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: format!("must be positive, got {}", self.tolerance),
            });
        }
        Ok(())
    }
}

/// One row of a [`SolveTrace`]; `residual_*` and `error_l1` describe the
/// iterate `h^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub residual_l1: f64,
    pub residual_w11: f64,
    pub residual_max: f64,
    pub error_l1: Option<f64>,
    /// `|ĥⁿ(0) - 1|`.
    pub mass_defect: f64,
    pub seconds: f64,
    pub assembly_seconds: f64,
    pub derivative_seconds: f64,
    pub solve_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
    pub scheme: Option<Scheme>,
}

impl SolveTrace {
    fn push(&mut self, record: IterationRecord) {
        debug_assert!(self.records.last().is_none_or(|r| r.n < record.n));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_l1).collect()
    }

    /// Errors to the reference; `NaN` where no reference was given.
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error_l1.unwrap_or(f64::NAN)).collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.residual_l1)
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.iter().map(|r| r.seconds).sum()
    }
}

/// Fixed point of the uncoupled `Π_N L_T`, the usual starting density.
pub fn uncoupled_fixed_density(system: &MeanFieldSystem) -> Result<FourierDensity> {
    let op = assemble_transfer(system.base_samples(), system.order(), "T")?;
    leading_fixed_density(&op, DEFAULT_EIGEN_TOL, DEFAULT_EIGEN_MAX_ITER)
}

fn check_start(system: &MeanFieldSystem, h0: &FourierDensity) -> Result<()> {
    if h0.order() != system.order() {
        return Err(Error::OrderMismatch {
            expected: system.order(),
            actual: h0.order(),
        });
    }
    if h0.coeff(0) != Complex64::new(1.0, 0.0) {
        return Err(Error::InvalidParameter {
            name: "h0",
            reason: format!("initial density must have unit mass, got {}", h0.coeff(0)),
        });
    }
    Ok(())
}

fn measure(residual: &FourierDensity, h: &FourierDensity, reference: Option<&FourierDensity>) -> Result<(f64, f64, f64, Option<f64>)> {
    let l1 = fourier::l1_norm(residual);
    let w11 = l1 + fourier::l1_norm(&fourier::differentiate(residual));
    let max = residual.max_coeff_abs();
    let err = reference.map(|r| fourier::l1_distance(h, r)).transpose()?;
    Ok((l1, w11, max, err))
}

/// Runs the configured scheme.
pub fn solve(system: &MeanFieldSystem, h0: &FourierDensity, cfg: &SolverConfig) -> Result<(FourierDensity, SolveTrace)> {
    match cfg.scheme {
        Scheme::Sequential => sequential_solve(system, h0, cfg),
        Scheme::Newton => newton_solve(system, h0, cfg),
    }
}

/// `h^n = Π_N L_{T_{ε,h^{n-1}}} h^{n-1}`.
///
/// Reaching `max_iter` without meeting the tolerance is not an error: the
/// trace comes back with `converged = false`.
pub fn sequential_solve(
    system: &MeanFieldSystem,
    h0: &FourierDensity,
    cfg: &SolverConfig,
) -> Result<(FourierDensity, SolveTrace)> {
    cfg.validate()?;
    check_start(system, h0)?;
    let n_order = system.order();
    let mut trace = SolveTrace {
        scheme: Some(Scheme::Sequential),
        ..Default::default()
    };
    let mut h = h0.clone();
    for n in 0..=cfg.max_iter {
        let start = Instant::now();
        let coupled = build_coupled_map(system, &h)?;
        let op = assemble_transfer(coupled.coupled_map(), n_order, "T_eps_f")?;
        let mut next = apply_operator(&op, &h)?;
        next.symmetrize();
        let assembly_seconds = start.elapsed().as_secs_f64();

        let residual = h.checked_sub(&next)?;
        let (l1, w11, max, err) = measure(&residual, &h, cfg.reference.as_ref())?;
        trace.push(IterationRecord {
            n,
            residual_l1: l1,
            residual_w11: w11,
            residual_max: max,
            error_l1: err,
            mass_defect: (h.coeff(0) - 1.0).norm(),
            seconds: start.elapsed().as_secs_f64(),
            assembly_seconds,
            derivative_seconds: 0.0,
            solve_seconds: 0.0,
        });
        if l1 <= cfg.tolerance {
            trace.converged = true;
            if cfg.stop == StopRule::Tolerance {
                break;
            }
        }
        if n == cfg.max_iter {
            break;
        }
        h = next;
    }
    Ok((h, trace))
}

/// Newton iteration `ĥ ← ĥ - (I - D̂_{N,h})⁻¹ (ĥ - L̂_{N,h} ĥ)` restricted to
/// the nonzero frequencies, so `ĥ(0) = 1` throughout.
pub fn newton_solve(
    system: &MeanFieldSystem,
    h0: &FourierDensity,
    cfg: &SolverConfig,
) -> Result<(FourierDensity, SolveTrace)> {
    cfg.validate()?;
    check_start(system, h0)?;
    let n_order = system.order();
    let assembler = FrechetAssembler::new(system, cfg.derivative)?;
    let zero_idx = index_of(n_order, 0).unwrap();
    let nonzero: Vec<usize> = (0..2 * n_order).filter(|&i| i != zero_idx).collect();

    let mut trace = SolveTrace {
        scheme: Some(Scheme::Newton),
        ..Default::default()
    };
    let mut h = h0.clone();
    for n in 0..=cfg.max_iter {
        let start = Instant::now();
        let coupled = build_coupled_map(system, &h)?;
        let transfer_coupled = assemble_transfer(coupled.coupled_map(), n_order, "T_eps_f")?;
        let mut image = apply_operator(&transfer_coupled, &h)?;
        image.symmetrize();
        let assembly_seconds = start.elapsed().as_secs_f64();
        let residual = h.checked_sub(&image)?;
        let (l1, w11, max, err) = measure(&residual, &h, cfg.reference.as_ref())?;

        let mut record = IterationRecord {
            n,
            residual_l1: l1,
            residual_w11: w11,
            residual_max: max,
            error_l1: err,
            mass_defect: (h.coeff(0) - 1.0).norm(),
            seconds: 0.0,
            assembly_seconds,
            derivative_seconds: 0.0,
            solve_seconds: 0.0,
        };
        let done = (l1 <= cfg.tolerance && cfg.stop == StopRule::Tolerance) || n == cfg.max_iter;
        if l1 <= cfg.tolerance {
            trace.converged = true;
        }
        if done {
            record.seconds = start.elapsed().as_secs_f64();
            trace.push(record);
            break;
        }
        divergence_guard(&trace, n, l1)?;

        let t_deriv = Instant::now();
        let transfer_coupling = assemble_transfer(coupled.coupling(), n_order, "I_f")?;
        let asm = assembler.assemble_from_parts(coupled, transfer_coupled, transfer_coupling, system.epsilon())?;
        record.derivative_seconds = t_deriv.elapsed().as_secs_f64();

        let t_solve = Instant::now();
        let d = asm.into_matrix();
        let block = identity_minus(&d).select(&nonzero, &nonzero);
        let lu = Lu::new(&block).map_err(|_| Error::IllConditioned {
            iteration: n,
            condition: f64::INFINITY,
        })?;
        let condition = lu.condition_estimate();
        if !(condition <= MAX_CONDITION) {
            return Err(Error::IllConditioned { iteration: n, condition });
        }
        let rhs: Vec<Complex64> = nonzero.iter().map(|&i| residual.coeffs()[i]).collect();
        let delta = lu.solve(&rhs);
        let coeffs = h.coeffs_mut();
        for (&i, d) in nonzero.iter().zip(&delta) {
            coeffs[i] -= d;
        }
        h.symmetrize();
        h.set_coeff(0, Complex64::new(1.0, 0.0))?;
        record.solve_seconds = t_solve.elapsed().as_secs_f64();
        record.seconds = start.elapsed().as_secs_f64();
        trace.push(record);
    }
    Ok((h, trace))
}

fn identity_minus(d: &CMatrix) -> CMatrix {
    let mut a = d.clone();
    a.scale_in_place(Complex64::new(-1.0, 0.0));
    for i in 0..a.rows() {
        a[(i, i)] += 1.0;
    }
    a
}

const DIVERGENCE_FLOOR: f64 = 1e-12;

// Residual up tenfold over three consecutive increases means the start was
// outside the basin of attraction. Rounding noise below DIVERGENCE_FLOOR is
// exempt.
fn divergence_guard(trace: &SolveTrace, n: usize, current: f64) -> Result<()> {
    let rs = trace.residuals();
    if rs.len() >= 3 {
        let r3 = rs[rs.len() - 3];
        let r2 = rs[rs.len() - 2];
        let r1 = rs[rs.len() - 1];
        if current > DIVERGENCE_FLOOR && r2 > r3 && r1 > r2 && current > r1 && current >= 10.0 * r3 {
            return Err(Error::Divergence {
                iteration: n,
                residual: current,
            });
        }
    }
    if !current.is_finite() {
        return Err(Error::Divergence {
            iteration: n,
            residual: current,
        });
    }
    Ok(())
}

/// Least-squares line `y = slope · x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    assert_eq!(x.len(), y.len());
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable points, need 3", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: pts.len(),
    })
}

/// Fits `log10(error_n)` against `n` over `window`; the slope is the
/// log10 of the geometric contraction rate. Nonpositive errors are skipped.
pub fn rate_fit(errors: &[f64], window: Range<usize>) -> Result<LineFit> {
    let end = window.end.min(errors.len());
    let (x, y): (Vec<f64>, Vec<f64>) = (window.start..end)
        .filter(|&n| errors[n] > 0.0)
        .map(|n| (n as f64, errors[n].log10()))
        .unzip();
    fit_line(&x, &y)
}

/// `log10(e_{n+1}) / log10(e_n)` for consecutive positive errors below one;
/// values near 2 indicate quadratic convergence.
pub fn digit_ratios(errors: &[f64]) -> Vec<(usize, f64)> {
    errors
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] > 0.0 && w[1] > 0.0 && w[0] < 1.0 && w[1] < 1.0)
        .map(|(n, w)| (n, w[1].log10() / w[0].log10()))
        .collect()
}

/// `‖h(x) - h(-x)‖_{L¹}`.
pub fn reflection_asymmetry(h: &FourierDensity) -> f64 {
    let mut mirrored = h.clone();
    for k in frequencies(h.order()) {
        let _ = mirrored.set_coeff(k, h.coeff(-k));
    }
    fourier::l1_distance(h, &mirrored).unwrap_or(f64::INFINITY)
}
