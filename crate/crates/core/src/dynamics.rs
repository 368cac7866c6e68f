//! Base circle maps, convolution kernels and the density-dependent coupled
//! map `T_{ε,f} = I_{ε,f} ∘ T` with `I_{ε,f}(x) = x + ε (g * f)(x)`.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::{self, grid_size, FourierDensity, GridFunction};

/// Smallest admissible value of `I'_f` on the grid.
pub const MIN_COUPLING_DERIVATIVE: f64 = 1e-8;

/// Minimum number of samples used when estimating sup-norms.
const NORM_GRID: usize = 1 << 14;

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapFamily {
    /// `T(x) = 2x - (a/2π) sin(2πx)`.
    PinchedDoubling { a: f64 },
    Doubling,
    /// `T(x) = x + α`.
    Rotation { alpha: f64 },
    Custom,
}

/// A circle map given by its lift `T: R -> R` (with `T(x+1) = T(x) + deg`)
/// and derivative.
#[derive(Clone)]
pub struct CircleMap {
    family: MapFamily,
    lift: ScalarFn,
    derivative: ScalarFn,
}

impl fmt::Debug for CircleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleMap").field("family", &self.family).finish()
    }
}

impl CircleMap {
    pub fn pinched_doubling(a: f64) -> Result<Self> {
        if !a.is_finite() || a.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "a",
                reason: format!("pinched doubling needs |a| < 1 for expansion, got {a}"),
            });
        }
        Ok(Self {
            family: MapFamily::PinchedDoubling { a },
            lift: Arc::new(move |x| 2.0 * x - a / (2.0 * PI) * (2.0 * PI * x).sin()),
            derivative: Arc::new(move |x| 2.0 - a * (2.0 * PI * x).cos()),
        })
    }

    pub fn doubling() -> Self {
        Self {
            family: MapFamily::Doubling,
            lift: Arc::new(|x| 2.0 * x),
            derivative: Arc::new(|_| 2.0),
        }
    }

    pub fn rotation(alpha: f64) -> Self {
        Self {
            family: MapFamily::Rotation { alpha },
            lift: Arc::new(move |x| x + alpha),
            derivative: Arc::new(|_| 1.0),
        }
    }

    pub fn custom(
        lift: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            family: MapFamily::Custom,
            lift: Arc::new(lift),
            derivative: Arc::new(derivative),
        }
    }

    pub fn family(&self) -> MapFamily {
        self.family
    }

    /// Unreduced lift value.
    pub fn lift(&self, x: f64) -> f64 {
        (self.lift)(x)
    }

    /// `T(x) mod 1`.
    pub fn apply(&self, x: f64) -> f64 {
        (self.lift)(x).rem_euclid(1.0)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }

    /// Lift values at `x_j = j/m`.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        (0..m).map(|j| self.lift(j as f64 / m as f64)).collect()
    }

    pub fn min_derivative(&self) -> f64 {
        (0..NORM_GRID)
            .map(|j| self.derivative(j as f64 / NORM_GRID as f64).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `sup 1/|T'|`; below one for uniformly expanding maps.
    pub fn contraction_bound(&self) -> f64 {
        1.0 / self.min_derivative()
    }
}

/// The bump `b(x) = e · exp(1/(u² - 1))`, `u = (x - 1/2)/δ`, supported on
/// `|x - 1/2| < δ`, together with its first two derivatives.
pub fn bump(x: f64, delta: f64) -> (f64, f64, f64) {
    let u = (x.rem_euclid(1.0) - 0.5) / delta;
    if u.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = u * u - 1.0;
    let b = E * (1.0 / q).exp();
    let phi = -2.0 * u / (q * q);
    let dphi = -2.0 / (q * q) + 8.0 * u * u / (q * q * q);
    (b, b * phi / delta, b * (phi * phi + dphi) / (delta * delta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    /// `g = scale · b`.
    Bump { delta: f64 },
    /// `g = -scale · b'`.
    BumpDerivative { delta: f64 },
    Custom,
}

/// Convolution kernel `g(x - y)` with its Fourier coefficients at a fixed
/// order.
#[derive(Clone)]
pub struct Kernel {
    shape: KernelShape,
    scale: f64,
    profile: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
    coeffs: FourierDensity,
    sup_norm: f64,
    c1_norm: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("shape", &self.shape)
            .field("scale", &self.scale)
            .field("order", &self.coeffs.order())
            .field("c1_norm", &self.c1_norm)
            .finish()
    }
}

pub fn make_bump_kernel(delta: f64, scale: f64, derivative: bool, order: usize) -> Result<Kernel> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("bump width must lie in (0, 0.5], got {delta}"),
        });
    }
    let (shape, profile): (_, Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>) = if derivative {
        (
            KernelShape::BumpDerivative { delta },
            Arc::new(move |x| {
                let (_, d1, d2) = bump(x, delta);
                (-scale * d1, -scale * d2)
            }),
        )
    } else {
        (
            KernelShape::Bump { delta },
            Arc::new(move |x| {
                let (b, d1, _) = bump(x, delta);
                (scale * b, scale * d1)
            }),
        )
    };
    Kernel::build(shape, scale, profile, order)
}

impl Kernel {
    /// Kernel from a closure returning `(g(x), g'(x))` on `[0, 1)`.
    pub fn custom(
        profile: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        order: usize,
    ) -> Result<Self> {
        Self::build(KernelShape::Custom, 1.0, Arc::new(profile), order)
    }

    fn build(
        shape: KernelShape,
        scale: f64,
        profile: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
        order: usize,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder(order));
        }
        let m = grid_size(order);
        let samples = (0..m).map(|j| profile(j as f64 / m as f64).0).collect();
        let coeffs = fourier::from_grid(&GridFunction::from_real(samples), order)?;
        let fine = NORM_GRID.max(m);
        let (mut sup, mut dsup) = (0.0f64, 0.0f64);
        for j in 0..fine {
            let (v, d) = profile(j as f64 / fine as f64);
            sup = sup.max(v.abs());
            dsup = dsup.max(d.abs());
        }
        Ok(Self {
            shape,
            scale,
            profile,
            coeffs,
            sup_norm: sup,
            c1_norm: sup + dsup,
        })
    }

    /// Same kernel with coefficients recomputed at another order.
    pub fn at_order(&self, order: usize) -> Result<Self> {
        Self::build(self.shape, self.scale, Arc::clone(&self.profile), order)
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn order(&self) -> usize {
        self.coeffs.order()
    }

    /// `ĝ` as a density of the kernel's order.
    pub fn coeffs(&self) -> &FourierDensity {
        &self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs.coeff(k)
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.profile)(x.rem_euclid(1.0)).0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        (self.profile)(x.rem_euclid(1.0)).1
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    /// `‖g‖_∞ + ‖g'‖_∞`, estimated on a fine grid.
    pub fn c1_norm(&self) -> f64 {
        self.c1_norm
    }
}

/// A base map, a kernel and a coupling strength at a fixed spectral order.
#[derive(Debug, Clone)]
pub struct MeanFieldSystem {
    map: CircleMap,
    kernel: Kernel,
    epsilon: f64,
    base_samples: Vec<f64>,
}

impl MeanFieldSystem {
    /// Checks the stability precondition `ε ‖g‖_{C¹} < 1`.
    pub fn new(map: CircleMap, kernel: Kernel, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("coupling strength must be finite and nonnegative, got {epsilon}"),
            });
        }
        let bound = epsilon * kernel.c1_norm();
        if bound >= 1.0 {
            return Err(Error::CouplingTooStrong { bound });
        }
        let base_samples = map.sample(grid_size(kernel.order()));
        Ok(Self {
            map,
            kernel,
            epsilon,
            base_samples,
        })
    }

    /// The same system with the kernel re-expanded at another order.
    pub fn at_order(&self, order: usize) -> Result<Self> {
        Self::new(self.map.clone(), self.kernel.at_order(order)?, self.epsilon)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.map.clone(), self.kernel.clone(), epsilon)
    }

    pub fn order(&self) -> usize {
        self.kernel.order()
    }

    pub fn map(&self) -> &CircleMap {
        &self.map
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `ε ‖g‖_{C¹}`.
    pub fn stability_bound(&self) -> f64 {
        self.epsilon * self.kernel.c1_norm()
    }

    /// `T(x_j)` on the `16N` grid (unreduced).
    pub fn base_samples(&self) -> &[f64] {
        &self.base_samples
    }
}

/// Grid samples of the coupled map and of the coupling diffeomorphism.
#[derive(Debug, Clone)]
pub struct CoupledMapGrid {
    density: FourierDensity,
    epsilon: f64,
    coupled: Vec<f64>,
    coupling: Vec<f64>,
    coupling_d1: Vec<f64>,
    coupling_d2: Vec<f64>,
    max_imag: f64,
}

impl CoupledMapGrid {
    /// The density the maps were built from.
    pub fn density(&self) -> &FourierDensity {
        &self.density
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn order(&self) -> usize {
        self.density.order()
    }

    /// `T_{ε,f}(x_j)`, unreduced.
    pub fn coupled_map(&self) -> &[f64] {
        &self.coupled
    }

    /// `I_f(x_j)`, unreduced.
    pub fn coupling(&self) -> &[f64] {
        &self.coupling
    }

    /// `I'_f(x_j)`.
    pub fn coupling_derivative(&self) -> &[f64] {
        &self.coupling_d1
    }

    /// `I''_f(x_j)`.
    pub fn coupling_second_derivative(&self) -> &[f64] {
        &self.coupling_d2
    }

    /// Largest imaginary part discarded while synthesising the samples.
    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    pub fn min_coupling_derivative(&self) -> f64 {
        self.coupling_d1.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Builds `T_{ε,f}` and `I_f, I'_f, I''_f` on the `16N` grid.
///
/// The mean field `g * f` has coefficients `ĝ(k) f̂(k)`; `I_f` and its
/// derivatives are synthesised by FFT, while `T_{ε,f}(x_j) = T(x_j) +
/// ε (g * f)(T(x_j))` evaluates the same series at the points `T(x_j)`.
pub fn build_coupled_map(system: &MeanFieldSystem, f: &FourierDensity) -> Result<CoupledMapGrid> {
    let n = system.order();
    if f.order() != n {
        return Err(Error::OrderMismatch {
            expected: n,
            actual: f.order(),
        });
    }
    let eps = system.epsilon();
    let m = grid_size(n);
    let mut field = fourier::convolve(system.kernel().coeffs(), f)?;
    field.set_real(false);

    let d1 = fourier::differentiate(&field);
    let d2 = fourier::differentiate(&d1);
    let grid0 = fourier::to_grid(&field);
    let grid1 = fourier::to_grid(&d1);
    let grid2 = fourier::to_grid(&d2);
    let at_base = field.eval_many(system.base_samples());

    let mut max_imag = 0.0f64;
    let mut take_re = |z: Complex64| {
        max_imag = max_imag.max(eps * z.im.abs());
        z.re
    };
    let mut coupling = Vec::with_capacity(m);
    let mut coupling_d1 = Vec::with_capacity(m);
    let mut coupling_d2 = Vec::with_capacity(m);
    let mut coupled = Vec::with_capacity(m);
    for j in 0..m {
        let x = j as f64 / m as f64;
        coupling.push(x + eps * take_re(grid0.values()[j]));
        coupling_d1.push(1.0 + eps * take_re(grid1.values()[j]));
        coupling_d2.push(eps * take_re(grid2.values()[j]));
        coupled.push(system.base_samples()[j] + eps * take_re(at_base[j]));
    }

    let out = CoupledMapGrid {
        density: f.clone(),
        epsilon: eps,
        coupled,
        coupling,
        coupling_d1,
        coupling_d2,
        max_imag,
    };
    let min_derivative = out.min_coupling_derivative();
    if min_derivative < MIN_COUPLING_DERIVATIVE {
        return Err(Error::NonInvertibleCoupling { min_derivative });
    }
    Ok(out)
}
