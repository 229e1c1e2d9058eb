use super::system::FullState;

/// Relative step of the central differences used by [`poisson_bracket`].
pub const BRACKET_STEP: f64 = 1e-6;

/// Finite-difference Poisson bracket
/// `[f, g] = Σ_i ∂f/∂p_i ∂g/∂q_i - ∂f/∂q_i ∂g/∂p_i` at `x`.
pub fn poisson_bracket<F, G>(f: F, g: G, x: &FullState) -> f64
where
    F: Fn(&FullState) -> f64,
    G: Fn(&FullState) -> f64,
{
    let n = x.dof();
    let mut sum = 0.0;
    for i in 0..n {
        let dq = |h: &dyn Fn(&FullState) -> f64| {
            let step = BRACKET_STEP * x.q[i].abs().max(1.0);
            let mut fwd = x.clone();
            let mut bwd = x.clone();
            fwd.q[i] += step;
            bwd.q[i] -= step;
            (h(&fwd) - h(&bwd)) / (2.0 * step)
        };
        let dp = |h: &dyn Fn(&FullState) -> f64| {
            let step = BRACKET_STEP * x.p[i].abs().max(1.0);
            let mut fwd = x.clone();
            let mut bwd = x.clone();
            fwd.p[i] += step;
            bwd.p[i] -= step;
            (h(&fwd) - h(&bwd)) / (2.0 * step)
        };
        sum += dp(&f) * dq(&g) - dq(&f) * dp(&g);
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pairs() {
        let x = FullState::from_slices(&[0.3, -1.1], &[2.0, 0.4]);
        let b = poisson_bracket(|s| s.p[0], |s| s.q[0], &x);
        assert!((b - 1.0).abs() < 1e-9);
        let b = poisson_bracket(|s| s.q[0], |s| s.q[1], &x);
        assert!(b.abs() < 1e-12);
        let b = poisson_bracket(|s| s.p[1], |s| s.q[0], &x);
        assert!(b.abs() < 1e-12);
    }
}
