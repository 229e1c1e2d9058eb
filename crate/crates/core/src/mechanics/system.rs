use nalgebra::{DMatrix, DVector};

use super::linalg::kron;
use crate::error::{Error, Result};

/// Step used by the finite-difference fallbacks for gradients.
pub const FD_GRADIENT_STEP: f64 = 1e-7;

/// Period of a generalized coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Period {
    /// Angle on the circle, period 2π.
    Angle,
    /// Displacement on the real line.
    Displacement,
}

impl Period {
    pub fn length(self) -> f64 {
        match self {
            Period::Angle => std::f64::consts::TAU,
            Period::Displacement => f64::INFINITY,
        }
    }
}

/// Wrap an angle to `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

/// Configurations and conjugate momenta of an `n`-DOF system.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
}

impl FullState {
    pub fn new(q: DVector<f64>, p: DVector<f64>) -> Self {
        assert_eq!(q.len(), p.len(), "q and p must have equal length");
        Self { q, p }
    }

    pub fn from_slices(q: &[f64], p: &[f64]) -> Self {
        Self::new(DVector::from_column_slice(q), DVector::from_column_slice(p))
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|x| x.is_finite())
    }

    /// Copy with every angular coordinate wrapped to `(-π, π]`.
    pub fn wrapped(&self, periods: &[Period]) -> Self {
        let mut q = self.q.clone();
        for (qi, period) in q.iter_mut().zip(periods) {
            if *period == Period::Angle {
                *qi = wrap_angle(*qi);
            }
        }
        Self { q, p: self.p.clone() }
    }
}

/// A Hamiltonian mechanical system with constant input matrix.
///
/// Gradients follow the stacked convention: `inertia_gradient` returns the
/// `n·n x n` block matrix `[∂M/∂q_1; …; ∂M/∂q_n]` of partials of the inertia
/// matrix itself (not its inverse). [`inverse_inertia_gradient`] converts it.
pub trait MechanicalSystem: Send + Sync {
    fn dof(&self) -> usize;

    fn input_matrix(&self) -> DMatrix<f64>;

    fn actuators(&self) -> usize {
        self.input_matrix().ncols()
    }

    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64>;

    fn potential(&self, q: &DVector<f64>) -> f64;

    fn potential_gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        let n = q.len();
        let mut grad = DVector::zeros(n);
        for i in 0..n {
            let h = FD_GRADIENT_STEP * q[i].abs().max(1.0);
            let mut fwd = q.clone();
            let mut bwd = q.clone();
            fwd[i] += h;
            bwd[i] -= h;
            grad[i] = (self.potential(&fwd) - self.potential(&bwd)) / (2.0 * h);
        }
        grad
    }

    fn inertia_gradient(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let n = q.len();
        let mut out = DMatrix::zeros(n * n, n);
        for i in 0..n {
            let h = FD_GRADIENT_STEP * q[i].abs().max(1.0);
            let mut fwd = q.clone();
            let mut bwd = q.clone();
            fwd[i] += h;
            bwd[i] -= h;
            let d = (self.inertia(&fwd) - self.inertia(&bwd)) / (2.0 * h);
            out.view_mut((i * n, 0), (n, n)).copy_from(&d);
        }
        out
    }

    fn periods(&self) -> Vec<Period> {
        vec![Period::Displacement; self.dof()]
    }
}

impl<S: MechanicalSystem + ?Sized> MechanicalSystem for &S {
    fn dof(&self) -> usize {
        (**self).dof()
    }
    fn input_matrix(&self) -> DMatrix<f64> {
        (**self).input_matrix()
    }
    fn inertia(&self, q: &DVector<f64>) -> DMatrix<f64> {
        (**self).inertia(q)
    }
    fn potential(&self, q: &DVector<f64>) -> f64 {
        (**self).potential(q)
    }
    fn potential_gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        (**self).potential_gradient(q)
    }
    fn inertia_gradient(&self, q: &DVector<f64>) -> DMatrix<f64> {
        (**self).inertia_gradient(q)
    }
    fn periods(&self) -> Vec<Period> {
        (**self).periods()
    }
}

pub(crate) fn invert_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::InvalidParameter {
            name: "inertia",
            reason: "inertia matrix is not positive definite".into(),
        })
}

/// `[∂M⁻¹/∂q_1; …; ∂M⁻¹/∂q_n]` from `∂M⁻¹/∂q_i = -M⁻¹ (∂M/∂q_i) M⁻¹`.
pub fn inverse_inertia_gradient<S: MechanicalSystem + ?Sized>(
    sys: &S,
    q: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let n = sys.dof();
    let minv = invert_spd(&sys.inertia(q))?;
    let grad = sys.inertia_gradient(q);
    let mut out = DMatrix::zeros(n * n, n);
    for i in 0..n {
        let block = grad.view((i * n, 0), (n, n));
        let d = -(&minv * block * &minv);
        out.view_mut((i * n, 0), (n, n)).copy_from(&d);
    }
    Ok(out)
}

fn check_state<S: MechanicalSystem + ?Sized>(sys: &S, x: &FullState) -> Result<()> {
    if x.dof() != sys.dof() {
        return Err(Error::Dimension(format!(
            "state has {} coordinates, system has {}",
            x.dof(),
            sys.dof()
        )));
    }
    if !x.is_finite() {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// Hamiltonian vector field `(q̇, ṗ)` with
/// `q̇ = M⁻¹p` and `ṗ = -½ (I ⊗ pᵀ) ∇M⁻¹ p - ∇V + B τ`.
pub fn full_vector_field<S: MechanicalSystem + ?Sized>(
    sys: &S,
    x: &FullState,
    tau: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_state(sys, x)?;
    let n = sys.dof();
    let b = sys.input_matrix();
    if tau.len() != b.ncols() {
        return Err(Error::Dimension(format!(
            "torque has {} entries, input matrix has {} columns",
            tau.len(),
            b.ncols()
        )));
    }
    if tau.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let minv = invert_spd(&sys.inertia(&x.q))?;
    let qdot = &minv * &x.p;
    let grad_minv = inverse_inertia_gradient(sys, &x.q)?;
    let ident = DMatrix::<f64>::identity(n, n);
    let pt = DMatrix::from_row_slice(1, n, x.p.as_slice());
    let coupling = kron(&ident, &pt) * grad_minv * &x.p;
    let pdot = -0.5 * coupling - sys.potential_gradient(&x.q) + b * tau;

    let mut out = DVector::zeros(2 * n);
    out.rows_mut(0, n).copy_from(&qdot);
    out.rows_mut(n, n).copy_from(&pdot);
    Ok(out)
}

/// `½ pᵀM⁻¹(q)p + V(q)`.
pub fn total_energy<S: MechanicalSystem + ?Sized>(sys: &S, x: &FullState) -> Result<f64> {
    check_state(sys, x)?;
    let minv = invert_spd(&sys.inertia(&x.q))?;
    Ok(0.5 * x.p.dot(&(&minv * &x.p)) + sys.potential(&x.q))
}

/// Cholesky test of positive definiteness.
pub fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0) && m.clone().cholesky().is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrapping_is_half_open() {
        use std::f64::consts::PI;
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(0.25), 0.25);
    }

    #[test]
    fn period_lengths() {
        assert_eq!(Period::Angle.length(), std::f64::consts::TAU);
        assert!(Period::Displacement.length().is_infinite());
    }
}
