//! Frequency-space derivative of the discretised self-consistent operator
//! `f ↦ Π_N L_{T_{ε,f}} f`.
//!
//! Column `m` of the matrix is
//!
//! ```text
//! Π_N L_{T_{ε,f}} e_m - ε Π_N L_{I_f} Comb_m,
//! Comb_m = [p' G_m + p G_m' - p G_m J'/J] / J,
//! ```
//!
//! with `p = Π_N L_T f`, `G_m = Π_N G(e_m) = w(m) ĝ(m) e_m` and
//! `J = Π_N I'_f`; in [`DerivativeMode::Truncated`] every bracket term is
//! projected once more by `Π_N` before `L_{I_f}` acts.
//!
//! Because `G_m` is a single mode, `Comb_m(x) = w(m) ĝ(m) e_m(x) [A(x) + 2πim B(x)]`
//! with `A = p'/J - p J'/J²` and `B = p/J` independent of `m`. The
//! coefficients of every column are therefore shifts of the two spectra
//! `Â`, `B̂`, which needs two FFTs instead of one per column.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::{build_coupled_map, CoupledMapGrid, MeanFieldSystem, MIN_COUPLING_DERIVATIVE};
use crate::error::{Error, Result};
use crate::fourier::{self, bin, fejer_weight, frequencies, grid_size, FourierDensity};
use crate::linalg::CMatrix;
use crate::operator::{apply_operator, assemble_transfer, transfer_rows, OperatorMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the bracket terms of the derivative are discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMode {
    /// Fejér projections on `L_T f`, `G(e)`, `I'_f` and on each bracket
    /// term (the fully truncated `D_{N,f}`). Newton with this matrix
    /// converges only linearly, at a rate set by the truncation bias.
    Truncated,
    /// Bracket terms kept at full spectral accuracy: `L_T f`, `G(e)` and
    /// `I'_f` are expanded without Fejér weights and the bracket is not
    /// re-projected. `Π_N` is applied only through `L_{T_{ε,f}}` and
    /// `L_{I_f}`. This is the exact derivative of the discretised operator
    /// up to the spectral tail of the bracket, so Newton is order 2.
    #[default]
    Spectral,
}

/// `ĝ(k) e_k` as a density of the kernel's order.
pub fn g_column_action(system: &MeanFieldSystem, k: i64) -> Result<FourierDensity> {
    let n = system.order();
    let mut out = FourierDensity::zeros(n)?;
    out.set_coeff(k, system.kernel().coeff(k))?;
    out.set_real(k == 0);
    Ok(out)
}

/// Intermediate objects and the assembled derivative matrix.
#[derive(Debug, Clone)]
pub struct DerivativeAssembly {
    coupled: CoupledMapGrid,
    transfer_coupled: OperatorMatrix,
    transfer_coupling: OperatorMatrix,
    pushed: Vec<f64>,
    pushed_derivative: Vec<f64>,
    jacobian: Vec<f64>,
    jacobian_derivative: Vec<f64>,
    correction: CMatrix,
    matrix: CMatrix,
}

impl DerivativeAssembly {
    pub fn order(&self) -> usize {
        self.transfer_coupled.order()
    }

    pub fn coupled_grid(&self) -> &CoupledMapGrid {
        &self.coupled
    }

    /// `Π_N L_{T_{ε,f}}`.
    pub fn transfer_coupled(&self) -> &OperatorMatrix {
        &self.transfer_coupled
    }

    /// `Π_N L_{I_f}`.
    pub fn transfer_coupling(&self) -> &OperatorMatrix {
        &self.transfer_coupling
    }

    /// Grid samples of `p = Π_N L_T f`.
    pub fn pushed_samples(&self) -> &[f64] {
        &self.pushed
    }

    /// Grid samples of `p'`.
    pub fn pushed_derivative_samples(&self) -> &[f64] {
        &self.pushed_derivative
    }

    /// Grid samples of `J = Π_N I'_f` (or `I'_f` in spectral mode).
    pub fn coupling_derivative_samples(&self) -> &[f64] {
        &self.jacobian
    }

    /// Grid samples of `J'`.
    pub fn coupling_second_derivative_samples(&self) -> &[f64] {
        &self.jacobian_derivative
    }

    /// `-ε Π_N L_{I_f} [Comb]`, the part of the derivative beyond `Π_N L_{T_{ε,f}}`.
    pub fn correction(&self) -> &CMatrix {
        &self.correction
    }

    /// The derivative matrix `D̂_{N,f}`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Reusable assembler: holds `Π_N L_T` for a fixed system.
#[derive(Debug, Clone)]
pub struct FrechetAssembler {
    system: MeanFieldSystem,
    mode: DerivativeMode,
    base_transfer: OperatorMatrix,
    base_sharp: Option<CMatrix>,
}

impl FrechetAssembler {
    pub fn new(system: &MeanFieldSystem, mode: DerivativeMode) -> Result<Self> {
        let n = system.order();
        let base_transfer = assemble_transfer(system.base_samples(), n, "T")?;
        let base_sharp = match mode {
            DerivativeMode::Truncated => None,
            DerivativeMode::Spectral => {
                let rows = transfer_rows(system.base_samples(), n, false)?;
                let mut m = CMatrix::zeros(2 * n, 2 * n);
                for (r, row) in rows.into_iter().enumerate() {
                    m.row_mut(r).copy_from_slice(&row);
                }
                Some(m)
            }
        };
        Ok(Self {
            system: system.clone(),
            mode,
            base_transfer,
            base_sharp,
        })
    }

    pub fn system(&self) -> &MeanFieldSystem {
        &self.system
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    /// `Π_N L_T` of the uncoupled map.
    pub fn base_transfer(&self) -> &OperatorMatrix {
        &self.base_transfer
    }

    pub fn assemble(&self, f: &FourierDensity) -> Result<DerivativeAssembly> {
        let coupled = build_coupled_map(&self.system, f)?;
        let n = self.system.order();
        let transfer_coupled = assemble_transfer(coupled.coupled_map(), n, "T_eps_f")?;
        let transfer_coupling = assemble_transfer(coupled.coupling(), n, "I_f")?;
        self.assemble_from_parts(coupled, transfer_coupled, transfer_coupling, self.system.epsilon())
    }

    /// Assembles from an existing coupled grid and its transfer matrices,
    /// using `epsilon` as the factor in front of the correction.
    pub fn assemble_from_parts(
        &self,
        coupled: CoupledMapGrid,
        transfer_coupled: OperatorMatrix,
        transfer_coupling: OperatorMatrix,
        epsilon: f64,
    ) -> Result<DerivativeAssembly> {
        let n = self.system.order();
        let f = coupled.density();
        if f.order() != n {
            return Err(Error::OrderMismatch {
                expected: n,
                actual: f.order(),
            });
        }
        let m = grid_size(n);
        let dim = 2 * n;
        let truncated = self.mode == DerivativeMode::Truncated;
        let weight = |k: i64| if truncated { fejer_weight(n, k) } else { 1.0 };

        // p = Π_N L_T f and p'
        let mut pushed = match &self.base_sharp {
            Some(sharp) => FourierDensity::new(n, sharp.matvec(f.coeffs()), false)?,
            None => apply_operator(&self.base_transfer, f)?,
        };
        pushed.set_real(false);
        let pushed_d = fourier::differentiate(&pushed);

        // J = Π_N I'_f with Î'_f(k) = δ_{0k} + ε (2πik) ĝ(k) f̂(k), and J'
        let eps = coupled.epsilon();
        let mut jac = FourierDensity::zeros(n)?;
        jac.set_real(false);
        for k in frequencies(n) {
            let ik = Complex64::new(0.0, 2.0 * PI * k as f64);
            let mut v = eps * ik * self.system.kernel().coeff(k) * f.coeff(k);
            if k == 0 {
                v += 1.0;
            }
            jac.set_coeff(k, v * weight(k))?;
        }
        let jac_d = fourier::differentiate(&jac);

        let re = |h: &FourierDensity| -> Vec<f64> { fourier::to_grid(h).values().iter().map(|z| z.re).collect() };
        let p0 = re(&pushed);
        let p1 = re(&pushed_d);
        let j1 = re(&jac);
        let j2 = re(&jac_d);
        let min_j = j1.iter().copied().fold(f64::INFINITY, f64::min);
        if min_j < MIN_COUPLING_DERIVATIVE {
            return Err(Error::NonInvertibleCoupling { min_derivative: min_j });
        }

        // A = p'/J - p J'/J², B = p/J, then their spectra on the grid.
        let mut a_hat: Vec<Complex64> = (0..m)
            .map(|j| Complex64::new(p1[j] / j1[j] - p0[j] * j2[j] / (j1[j] * j1[j]), 0.0))
            .collect();
        let mut b_hat: Vec<Complex64> = (0..m).map(|j| Complex64::new(p0[j] / j1[j], 0.0)).collect();
        fourier::fft_forward(&mut a_hat);
        fourier::fft_forward(&mut b_hat);
        let inv_m = 1.0 / m as f64;

        // Comb coefficients: column m_idx, row j.
        let mut comb = CMatrix::zeros(dim, dim);
        for (col, mf) in frequencies(n).enumerate() {
            let gm = self.system.kernel().coeff(mf) * weight(mf);
            if gm == ZERO {
                continue;
            }
            let twopi_im = Complex64::new(0.0, 2.0 * PI * mf as f64);
            for (row, jf) in frequencies(n).enumerate() {
                let shift = bin(jf - mf, m);
                comb[(row, col)] = weight(jf) * gm * (a_hat[shift] + twopi_im * b_hat[shift]) * inv_m;
            }
        }

        let mut correction = transfer_coupling.entries().matmul(&comb);
        correction.scale_in_place(Complex64::new(-epsilon, 0.0));
        let mut matrix = transfer_coupled.entries().clone();
        for (d, c) in matrix.as_mut_slice().iter_mut().zip(correction.as_slice()) {
            *d += c;
        }

        Ok(DerivativeAssembly {
            coupled,
            transfer_coupled,
            transfer_coupling,
            pushed: p0,
            pushed_derivative: p1,
            jacobian: j1,
            jacobian_derivative: j2,
            correction,
            matrix,
        })
    }
}

/// One-shot assembly of the truncated derivative `D̂_{N,f}`.
pub fn assemble_frechet(system: &MeanFieldSystem, f: &FourierDensity) -> Result<DerivativeAssembly> {
    FrechetAssembler::new(system, DerivativeMode::Truncated)?.assemble(f)
}

/// The discretised self-consistent operator `f ↦ Π_N L_{T_{ε,f}} f`.
pub fn self_consistent_step(system: &MeanFieldSystem, f: &FourierDensity) -> Result<FourierDensity> {
    let coupled = build_coupled_map(system, f)?;
    let op = assemble_transfer(coupled.coupled_map(), system.order(), "T_eps_f")?;
    apply_operator(&op, f)
}
