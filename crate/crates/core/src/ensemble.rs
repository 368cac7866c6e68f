//! Finite-particle mean-field simulation, used as an independent check of
//! the spectral fixed points.
//!
//! Each step moves every particle by `x ← T(x) + ε (g * μ)(T(x)) mod 1`,
//! where `μ` is the empirical measure of the positions before the step. The
//! convolution is evaluated through the Fourier coefficients of `g` and the
//! characteristic sums `ĉ(k) = (1/M) Σ_j e_{-k}(x_j)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::MeanFieldSystem;
use crate::error::{Error, Result};
use crate::fourier::{fejer_weight, FourierDensity};

/// Particles per block of the characteristic-sum reduction. Blocks are
/// summed in index order, so results do not depend on the thread count.
const REDUCTION_BLOCK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    seed: u64,
    steps: usize,
}

impl ParticleEnsemble {
    /// `count` independent uniform positions drawn with ChaCha8 from `seed`.
    pub fn uniform(count: usize, seed: u64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter {
                name: "particles",
                reason: "need at least one particle".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..count).map(|_| rng.random::<f64>()).collect();
        Ok(Self {
            positions,
            seed,
            steps: 0,
        })
    }

    pub fn from_positions(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParameter {
                name: "particles",
                reason: "need at least one particle".into(),
            });
        }
        let positions = positions.into_iter().map(wrap).collect();
        Ok(Self {
            positions,
            seed: 0,
            steps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// `ĉ(k) = (1/M) Σ_j e_{-k}(x_j)` for `k = 0..=max_k`.
pub fn characteristic_sums(positions: &[f64], max_k: usize) -> Vec<Complex64> {
    let partial: Vec<Vec<Complex64>> = positions
        .par_chunks(REDUCTION_BLOCK)
        .map(|block| {
            let mut acc = vec![Complex64::new(0.0, 0.0); max_k + 1];
            for &x in block {
                let (s, c) = (-2.0 * PI * x).sin_cos();
                let step = Complex64::new(c, s);
                let mut z = Complex64::new(1.0, 0.0);
                for a in acc.iter_mut() {
                    *a += z;
                    z *= step;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Complex64::new(0.0, 0.0); max_k + 1];
    for block in &partial {
        for (t, b) in total.iter_mut().zip(block) {
            *t += b;
        }
    }
    let inv = 1.0 / positions.len() as f64;
    total.iter_mut().for_each(|t| *t *= inv);
    total
}

/// Advances the ensemble one step. The coupling uses the kernel's Fourier
/// coefficients for `|k| < N` at the system's order `N`.
pub fn step_ensemble(p: &ParticleEnsemble, system: &MeanFieldSystem) -> ParticleEnsemble {
    let n = system.order();
    let max_k = n - 1;
    let sums = characteristic_sums(&p.positions, max_k);
    // field(y) = Re Σ_{|k|<N} ĝ(k) ĉ(k) e_k(y) = a_0 + 2 Re Σ_{k≥1} a_k e_k(y)
    let amps: Vec<Complex64> = (0..=max_k).map(|k| system.kernel().coeff(k as i64) * sums[k]).collect();
    let eps = system.epsilon();
    let map = system.map();
    let positions = p
        .positions
        .par_iter()
        .map(|&x| {
            let y = map.lift(x);
            let (s, c) = (2.0 * PI * y).sin_cos();
            let step = Complex64::new(c, s);
            let mut z = step;
            let mut field = amps[0].re;
            for a in &amps[1..] {
                field += 2.0 * (a * z).re;
                z *= step;
            }
            wrap(y + eps * field)
        })
        .collect();
    ParticleEnsemble {
        positions,
        seed: p.seed,
        steps: p.steps + 1,
    }
}

/// Runs `steps` updates.
pub fn evolve(p: &ParticleEnsemble, system: &MeanFieldSystem, steps: usize) -> ParticleEnsemble {
    let mut cur = p.clone();
    for _ in 0..steps {
        cur = step_ensemble(&cur, system);
    }
    cur
}

/// Fejér projection of the empirical measure: `ĥ(k) = w(k) ĉ(k)`.
pub fn empirical_density(p: &ParticleEnsemble, order: usize) -> Result<FourierDensity> {
    let mut h = FourierDensity::zeros(order)?;
    let sums = characteristic_sums(&p.positions, order);
    for k in 0..=order as i64 {
        let w = fejer_weight(order, k);
        h.set_coeff(k, sums[k as usize] * w)?;
        if k > 0 && k < order as i64 {
            h.set_coeff(-k, (sums[k as usize] * w).conj())?;
        }
    }
    h.set_coeff(0, Complex64::new(1.0, 0.0))?;
    h.set_real(true);
    Ok(h)
}
