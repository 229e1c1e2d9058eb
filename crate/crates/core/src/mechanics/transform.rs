//! Input normalization and the constant canonical transform to simply
//! actuated coordinates.

use nalgebra::{DMatrix, DVector};

use super::linalg::{jacobi_svd, max_abs};
use super::system::{FullState, MechanicalSystem, Period};
use crate::error::{Error, Result};

const RANK_TOL: f64 = 1e-12;
const ORTHO_TOL: f64 = 1e-10;

/// Result of [`normalize_input_matrix`]: the feedback `τ = T̂ τ̂` and the new
/// left semi-orthogonal input matrix `B̂ = B T̂`.
#[derive(Debug, Clone)]
pub struct InputNormalization {
    pub t_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
}

/// Find a nonsingular `T̂` with `(B T̂)ᵀ (B T̂) = I_k`, using `T̂ = V diag(1/σ)`
/// from the SVD `B = U Σ Vᵀ`.
pub fn normalize_input_matrix(b: &DMatrix<f64>) -> Result<InputNormalization> {
    let (n, k) = b.shape();
    if k == 0 || k > n {
        return Err(Error::Dimension(format!("input matrix must be n x k with 0 < k <= n, got {n}x{k}")));
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let svd = jacobi_svd(b);
    let sigma_max = svd.sigma.max();
    let sigma_min = svd.sigma.min();
    if sigma_min <= RANK_TOL * sigma_max.max(1.0) {
        return Err(Error::RankDeficient { sigma_min });
    }
    let inv_sigma = DMatrix::from_diagonal(&svd.sigma.map(|s| 1.0 / s));
    let t_hat = &svd.v * inv_sigma;
    let b_hat = b * &t_hat;
    Ok(InputNormalization { t_hat, b_hat })
}

/// A system expressed in simply actuated coordinates
/// `(q̃, p̃) = ((𝐁ᵀ)⁻¹ q, 𝐁 p)` with `𝐁 = [B⊥; Bᵀ]`.
///
/// The transformed inertia is `M(q̃) = 𝐁 D(𝐁ᵀq̃) 𝐁ᵀ`, i.e.
/// `M⁻¹ = (𝐁ᵀ)⁻¹ D⁻¹ 𝐁⁻¹`, and the potential is `V(q̃) = P(𝐁ᵀ q̃)`.
#[derive(Debug, Clone)]
pub struct SimplyActuated<S> {
    inner: S,
    big_b: DMatrix<f64>,
    big_b_t: DMatrix<f64>,
    big_b_t_inv: DMatrix<f64>,
    input: DMatrix<f64>,
}

/// Build the simply actuated form of `sys`. The system's input matrix must
/// already be left semi-orthogonal and `b_perp` must be a full-rank left
/// annihilator of it.
pub fn simply_actuated_transform<S: MechanicalSystem>(
    sys: S,
    b_perp: &DMatrix<f64>,
) -> Result<SimplyActuated<S>> {
    let b = sys.input_matrix();
    let (n, k) = b.shape();
    if b_perp.shape() != (n - k, n) {
        return Err(Error::Dimension(format!(
            "B_perp must be {}x{n}, got {}x{}",
            n - k,
            b_perp.nrows(),
            b_perp.ncols()
        )));
    }
    let semi = max_abs(&(b.transpose() * &b - DMatrix::identity(k, k)));
    if semi > ORTHO_TOL {
        return Err(Error::NotSemiOrthogonal { residual: semi });
    }
    let annihilation = max_abs(&(b_perp * &b));
    if annihilation > ORTHO_TOL * max_abs(b_perp).max(1.0) {
        return Err(Error::NotAnnihilator { residual: annihilation });
    }

    let mut big_b = DMatrix::zeros(n, n);
    big_b.view_mut((0, 0), (n - k, n)).copy_from(b_perp);
    big_b.view_mut((n - k, 0), (k, n)).copy_from(&b.transpose());
    let big_b_t = big_b.transpose();
    let big_b_t_inv = big_b_t.clone().try_inverse().ok_or(Error::RankDeficient { sigma_min: 0.0 })?;
    let svd = jacobi_svd(&big_b);
    if svd.sigma.min() <= RANK_TOL * svd.sigma.max().max(1.0) {
        return Err(Error::RankDeficient { sigma_min: svd.sigma.min() });
    }
    let input = &big_b * &b;
    Ok(SimplyActuated { inner: sys, big_b, big_b_t, big_b_t_inv, input })
}

impl<S> SimplyActuated<S> {
    /// The coordinate matrix `𝐁`.
    pub fn coordinate_matrix(&self) -> &DMatrix<f64> {
        &self.big_b
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    /// `(q, p) ↦ ((𝐁ᵀ)⁻¹ q, 𝐁 p)`.
    pub fn to_simply_actuated(&self, x: &FullState) -> FullState {
        FullState::new(&self.big_b_t_inv * &x.q, &self.big_b * &x.p)
    }

    /// Inverse of [`Self::to_simply_actuated`].
    pub fn from_simply_actuated(&self, x: &FullState) -> FullState {
        let p = self
            .big_b
            .clone()
            .lu()
            .solve(&x.p)
            .expect("coordinate matrix is invertible by construction");
        FullState::new(&self.big_b_t * &x.q, p)
    }
}

impl<S: MechanicalSystem> MechanicalSystem for SimplyActuated<S> {
    fn dof(&self) -> usize {
        self.inner.dof()
    }

    fn input_matrix(&self) -> DMatrix<f64> {
        self.input.clone()
    }

    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let q_orig = &self.big_b_t * q;
        &self.big_b * self.inner.inertia(&q_orig) * &self.big_b_t
    }

    fn potential(&self, q: &DVector<f64>) -> f64 {
        self.inner.potential(&(&self.big_b_t * q))
    }

    fn potential_gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        &self.big_b * self.inner.potential_gradient(&(&self.big_b_t * q))
    }

    fn inertia_gradient(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let n = self.dof();
        let inner_grad = self.inner.inertia_gradient(&(&self.big_b_t * q));
        let mut out = DMatrix::zeros(n * n, n);
        for j in 0..n {
            // ∂D(𝐁ᵀq̃)/∂q̃_j = Σ_i ∂D/∂q_i (𝐁ᵀ)_{ij}
            let mut dj = DMatrix::zeros(n, n);
            for i in 0..n {
                let w = self.big_b_t[(i, j)];
                if w != 0.0 {
                    dj += inner_grad.view((i * n, 0), (n, n)) * w;
                }
            }
            let block = &self.big_b * dj * &self.big_b_t;
            out.view_mut((j * n, 0), (n, n)).copy_from(&block);
        }
        out
    }

    fn periods(&self) -> Vec<Period> {
        // A new coordinate keeps its period only when it is a signed copy of
        // a single original coordinate.
        let inner = self.inner.periods();
        (0..self.dof())
            .map(|j| {
                let row = self.big_b_t_inv.row(j);
                let nonzero: Vec<usize> = (0..row.len()).filter(|&i| row[i].abs() > 1e-14).collect();
                match nonzero.as_slice() {
                    [i] if (row[*i].abs() - 1.0).abs() < 1e-14 => inner[*i],
                    _ => Period::Displacement,
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_input_is_rejected() {
        let b = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 0.5, 1.0]);
        match normalize_input_matrix(&b) {
            Err(Error::RankDeficient { .. }) => {}
            other => panic!("expected rank error, got {other:?}"),
        }
        assert!(normalize_input_matrix(&DMatrix::zeros(2, 1)).is_err());
    }
}
