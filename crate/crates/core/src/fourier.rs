//! Trigonometric polynomials on the unit circle.
//!
//! A [`FourierDensity`] of order `N` stores the coefficients `ĥ(k)` for the
//! logical frequencies `k = -N+1, ..., N` in ascending order, so index `0`
//! holds `ĥ(-N+1)` and index `2N-1` holds `ĥ(N)`. Code outside this module
//! addresses coefficients by frequency through [`FourierDensity::coeff`] and
//! [`FourierDensity::index`], never by raw offset.
//!
//! Physical-space work happens on an equispaced grid of `16N` points
//! `x_j = j / M`, bridged to coefficient space with FFTs.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Oversampling factor between the spectral order and the physical grid.
pub const GRID_FACTOR: usize = 16;

/// Tolerance on Hermitian symmetry for real-flagged densities.
pub const HERMITIAN_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Number of grid points used for order `n`.
pub fn grid_size(order: usize) -> usize {
    GRID_FACTOR * order
}

/// `e_k(x) = exp(2πikx)`.
#[inline]
pub fn mode_at(k: i64, x: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * (k as f64) * x).sin_cos();
    Complex64::new(c, s)
}

// rustfft plans are Send + Sync; the planner itself is not, so it lives
// behind a lock and hands out shared plans.
fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    type Cache = Mutex<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)>;
    static PLANS: OnceLock<Cache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    let key = (len, direction == FftDirection::Forward);
    if let Some(p) = guard.1.get(&key) {
        return Arc::clone(p);
    }
    let p = guard.0.plan_fft(len, direction);
    guard.1.insert(key, Arc::clone(&p));
    p
}

/// Unnormalised forward FFT in place: `X[m] = Σ_j x[j] exp(-2πi m j / M)`.
pub fn fft_forward(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Forward).process(buf);
}

/// Unnormalised inverse FFT in place: `x[j] = Σ_m X[m] exp(2πi m j / M)`.
pub fn fft_inverse(buf: &mut [Complex64]) {
    plan(buf.len(), FftDirection::Inverse).process(buf);
}

/// FFT bin holding frequency `k` on a grid of size `m`.
#[inline]
pub fn bin(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Coefficients of a trigonometric polynomial `Σ_{k=-N+1}^{N} ĥ(k) e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDensity {
    order: usize,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl FourierDensity {
    pub fn new(order: usize, coeffs: Vec<Complex64>, real: bool) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        if coeffs.len() != 2 * order {
            return Err(Error::OrderMismatch {
                expected: 2 * order,
                actual: coeffs.len(),
            });
        }
        Ok(Self {
            order,
            coeffs,
            real,
        })
    }

    pub fn zeros(order: usize) -> Result<Self> {
        Self::new(order, vec![ZERO; 2 * order], true)
    }

    /// The uniform density `e_0`.
    pub fn uniform(order: usize) -> Result<Self> {
        let mut h = Self::zeros(order)?;
        h.set_coeff(0, Complex64::new(1.0, 0.0))?;
        Ok(h)
    }

    /// The single mode `e_k`; real-flagged only for `k = 0`.
    pub fn mode(order: usize, k: i64) -> Result<Self> {
        let mut h = Self::zeros(order)?;
        h.set_coeff(k, Complex64::new(1.0, 0.0))?;
        h.real = k == 0;
        Ok(h)
    }

    /// Samples a real function on the `16N` grid and transforms it.
    pub fn from_fn(order: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let m = grid_size(order);
        let values = (0..m).map(|j| f(j as f64 / m as f64)).collect();
        from_grid(&GridFunction::from_real(values), order)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn set_real(&mut self, real: bool) {
        self.real = real;
    }

    /// Frequencies `-N+1 ..= N` in storage order.
    pub fn frequencies(&self) -> RangeInclusive<i64> {
        frequencies(self.order)
    }

    /// Storage offset of frequency `k`, if it is represented.
    pub fn index(&self, k: i64) -> Option<usize> {
        index_of(self.order, k)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// `ĥ(k)`, or zero when `k` is outside the stored band.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.index(k).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, k: i64, value: Complex64) -> Result<()> {
        let i = self.index(k).ok_or(Error::FrequencyOutOfRange {
            k,
            order: self.order,
        })?;
        self.coeffs[i] = value;
        Ok(())
    }

    /// Replaces `ĥ(k)` and `ĥ(-k)` by the average of `ĥ(k)` and `conj(ĥ(-k))`
    /// for `|k| ≤ N-1`, forcing `ĥ(0)` real.
    pub fn symmetrize(&mut self) {
        let n = self.order as i64;
        let c0 = self.index(0).unwrap();
        self.coeffs[c0].im = 0.0;
        for k in 1..n {
            let ip = self.index(k).unwrap();
            let im = self.index(-k).unwrap();
            let avg = 0.5 * (self.coeffs[ip] + self.coeffs[im].conj());
            self.coeffs[ip] = avg;
            self.coeffs[im] = avg.conj();
        }
    }

    /// Largest violation of `ĥ(-k) = conj(ĥ(k))` over `|k| ≤ N-1`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.order as i64;
        (0..n)
            .map(|k| (self.coeff(-k) - self.coeff(k).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Direct evaluation of the series at `x`.
    pub fn eval(&self, x: f64) -> Complex64 {
        self.frequencies()
            .zip(&self.coeffs)
            .map(|(k, c)| c * mode_at(k, x))
            .sum()
    }

    /// Evaluates the series at arbitrary points by Horner's rule in
    /// `z = exp(2πix)`; stable because `|z| = 1`.
    pub fn eval_many(&self, points: &[f64]) -> Vec<Complex64> {
        let n = self.order as i64;
        points
            .iter()
            .map(|&x| {
                let z = mode_at(1, x);
                let mut s = ZERO;
                for c in self.coeffs.iter().rev() {
                    s = s * z + c;
                }
                s * mode_at(-n + 1, x)
            })
            .collect()
    }

    /// Copy at another order: truncates the band or pads it with zeros.
    pub fn resample(&self, order: usize) -> Result<Self> {
        let mut out = Self::zeros(order)?;
        out.real = self.real;
        for k in out.frequencies() {
            out.set_coeff(k, self.coeff(k))?;
        }
        Ok(out)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                expected: self.order,
                actual: other.order,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self::new(self.order, coeffs, self.real && other.real)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Self::new(self.order, coeffs, self.real && other.real)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            order: self.order,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            real: self.real && c.im == 0.0,
        }
    }

    /// Max-norm distance between coefficient vectors.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        self.check_order(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

pub fn frequencies(order: usize) -> RangeInclusive<i64> {
    let n = order as i64;
    (-n + 1)..=n
}

pub fn index_of(order: usize, k: i64) -> Option<usize> {
    let n = order as i64;
    if k > -n && k <= n {
        Some((k + n - 1) as usize)
    } else {
        None
    }
}

/// Samples of a function at `x_j = j / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
    real: bool,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>, real: bool) -> Self {
        Self { values, real }
    }

    pub fn from_real(values: Vec<f64>) -> Self {
        Self {
            values: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            real: true,
        }
    }

    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Grid point `x_j`.
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / self.values.len() as f64
    }
}

/// Triangular Fejér weights `w(k) = max(0, 1 - |k|/N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FejerWeights {
    order: usize,
    weights: Vec<f64>,
}

impl FejerWeights {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, k: i64) -> f64 {
        index_of(self.order, k).map_or(0.0, |i| self.weights[i])
    }
}

pub fn fejer_weights(order: usize) -> Result<FejerWeights> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let weights = frequencies(order).map(|k| fejer_weight(order, k)).collect();
    Ok(FejerWeights { order, weights })
}

#[inline]
pub fn fejer_weight(order: usize, k: i64) -> f64 {
    (1.0 - k.unsigned_abs() as f64 / order as f64).max(0.0)
}

/// Convolution with the Fejér kernel `K_N`.
pub fn project_fejer(h: &FourierDensity) -> FourierDensity {
    let n = h.order;
    let coeffs = h
        .frequencies()
        .zip(&h.coeffs)
        .map(|(k, c)| c * fejer_weight(n, k))
        .collect();
    FourierDensity {
        order: n,
        coeffs,
        real: h.real,
    }
}

/// `Π_N h` for an `h` stored at any order, returned at order `N`.
pub fn project_fejer_to(h: &FourierDensity, order: usize) -> Result<FourierDensity> {
    Ok(project_fejer(&h.resample(order)?))
}

/// Band-limited synthesis on the default `16N` grid.
pub fn to_grid(h: &FourierDensity) -> GridFunction {
    to_grid_with(h, grid_size(h.order)).expect("default grid is large enough")
}

/// Band-limited synthesis on a grid of `m ≥ 2N` points.
pub fn to_grid_with(h: &FourierDensity, m: usize) -> Result<GridFunction> {
    if m < 2 * h.order {
        return Err(Error::GridMismatch {
            expected: 2 * h.order,
            actual: m,
        });
    }
    let mut buf = vec![ZERO; m];
    for (k, c) in h.frequencies().zip(&h.coeffs) {
        buf[bin(k, m)] = *c;
    }
    fft_inverse(&mut buf);
    if h.real {
        for v in &mut buf {
            v.im = 0.0;
        }
    }
    Ok(GridFunction::new(buf, h.real))
}

/// Analysis on the default grid; `v` must hold exactly `16N` samples.
pub fn from_grid(v: &GridFunction, order: usize) -> Result<FourierDensity> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let m = grid_size(order);
    if v.size() != m {
        return Err(Error::GridMismatch {
            expected: m,
            actual: v.size(),
        });
    }
    from_grid_any(v, order)
}

/// Analysis from any grid of at least `2N` samples. Frequencies above `N`
/// are discarded.
pub fn from_grid_any(v: &GridFunction, order: usize) -> Result<FourierDensity> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    let m = v.size();
    if m < 2 * order {
        return Err(Error::GridMismatch {
            expected: 2 * order,
            actual: m,
        });
    }
    let mut buf = v.values.clone();
    fft_forward(&mut buf);
    let scale = 1.0 / m as f64;
    let coeffs = frequencies(order).map(|k| buf[bin(k, m)] * scale).collect();
    let mut h = FourierDensity {
        order,
        coeffs,
        real: v.real,
    };
    if h.real {
        h.symmetrize();
    }
    Ok(h)
}

/// Spectral derivative: coefficient `k` becomes `2πik ĥ(k)`.
pub fn differentiate(h: &FourierDensity) -> FourierDensity {
    let coeffs = h
        .frequencies()
        .zip(&h.coeffs)
        .map(|(k, c)| c * Complex64::new(0.0, 2.0 * PI * k as f64))
        .collect();
    FourierDensity {
        order: h.order,
        coeffs,
        real: h.real,
    }
}

/// Circular convolution `∫ f(x-y) g(y) dy`, i.e. coefficientwise product.
pub fn convolve(f: &FourierDensity, g: &FourierDensity) -> Result<FourierDensity> {
    f.check_order(g)?;
    let coeffs = f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b).collect();
    FourierDensity::new(f.order, coeffs, f.real && g.real)
}

/// Rectangle-rule `∫|h|` on the `16N` grid.
pub fn l1_norm(h: &FourierDensity) -> f64 {
    grid_l1(&to_grid(h))
}

/// Rectangle-rule `∫|v|` for grid samples.
pub fn grid_l1(v: &GridFunction) -> f64 {
    v.values.iter().map(|z| z.norm()).sum::<f64>() / v.size() as f64
}

/// `‖h‖_{L¹} + ‖h'‖_{L¹}`.
pub fn w11_norm(h: &FourierDensity) -> f64 {
    l1_norm(h) + l1_norm(&differentiate(h))
}

/// `‖f - g‖_{L¹}` for two densities of possibly different order, evaluated
/// on the grid of the larger one.
pub fn l1_distance(f: &FourierDensity, g: &FourierDensity) -> Result<f64> {
    let order = f.order.max(g.order);
    let diff = f.resample(order)?.checked_sub(&g.resample(order)?)?;
    Ok(l1_norm(&diff))
}
