//! Central finite differences for gradient checking.

/// Central-difference gradient of `f` at `x`: entry `i` is
/// `(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut grad = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let hi = f(&probe);
        probe[i] = x[i] - eps;
        let lo = f(&probe);
        probe[i] = x[i];
        grad[i] = (hi - lo) / (2.0 * eps);
    }
    grad
}

/// Relative error with an absolute floor: `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Largest elementwise [`rel_err`] between two gradient vectors.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &b)| rel_err(a, b, floor))
        .fold(0.0, f64::max)
}

/// Deterministic pseudo-random values in [-0.5, 0.5) for building test
/// inputs without pulling in an RNG dependency.
pub fn lcg_values(seed: u64, n: usize) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_matches_closed_form() {
        let x = vec![1.0, -2.0, 0.5];
        let grad = central_diff(&mut |v| v.iter().map(|t| t * t).sum(), &x, 1e-5);
        for (g, xi) in grad.iter().zip(&x) {
            assert!(rel_err(*g, 2.0 * xi, 1e-9) < 1e-8);
        }
    }

    #[test]
    fn lcg_is_deterministic_and_bounded() {
        let a = lcg_values(7, 100);
        let b = lcg_values(7, 100);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (-0.5..0.5).contains(v)));
        assert_ne!(lcg_values(8, 100), a);
    }
}
