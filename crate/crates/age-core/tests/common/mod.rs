//! Central-difference gradient oracle, independent of the autodiff engine
//! it is used to check.

/// d f / d x_i by central differences at step h, one entry at a time.
pub fn finite_difference_gradient(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &[f64],
    h: f64,
) -> Vec<f64> {
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let fp = f(&probe);
        probe[i] = x[i] - h;
        let fm = f(&probe);
        probe[i] = x[i];
        grad.push((fp - fm) / (2.0 * h));
    }
    grad
}

/// Relative agreement: |a - b| <= 1e-7 absolute near zero, else 1e-4 relative.
pub fn gradients_agree(analytic: &[f64], numeric: &[f64]) -> Result<(), String> {
    if analytic.len() != numeric.len() {
        return Err(format!("length mismatch {} vs {}", analytic.len(), numeric.len()));
    }
    for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let diff = (a - n).abs();
        if diff <= 1e-7 {
            continue;
        }
        let rel = diff / a.abs().max(n.abs());
        if rel > 1e-4 {
            return Err(format!("entry {i}: analytic {a} vs numeric {n} (rel err {rel:.3e})"));
        }
    }
    Ok(())
}
