//! Batch-level divergence statistics against the latent prior.
//!
//! Two routes measure how far an encoded batch sits from the prior:
//! a differentiable diagonal-Gaussian KL (the training signal) and a
//! nonparametric k-NN estimator (monitoring only).

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::latent::Prior;
use crate::tensor::Tensor;

/// Floor applied to fitted standard deviations so the log term stays
/// finite on collapsed batches.
pub const STD_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EstimateMethod {
    #[serde(rename = "parametric-kl")]
    ParametricKl,
    #[serde(rename = "knn-kl")]
    KnnKl,
}

/// Which parametric formula drives the objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Deserialize, Serialize)]
pub enum DivergenceMethod {
    /// Exact KL of the fitted diagonal Gaussian from N(0, I); zero at (m=0, s=1).
    #[serde(rename = "parametric-kl")]
    ParametricKl,
    /// Dimension-averaged variant; differs from the exact KL only by
    /// affine constants at fixed M, so optimizer argmins coincide.
    #[serde(rename = "paper-normalization")]
    PaperNormalization,
}

/// A scalar divergence value plus the statistics it was computed from.
#[derive(Debug, Clone)]
pub struct DivergenceEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    pub per_dim_mean: Vec<f64>,
    /// Fitted per-dimension standard deviations; parametric route only.
    pub per_dim_std: Option<Vec<f64>>,
    /// Neighbor count; k-NN route only.
    pub k: Option<usize>,
}

// ---------------------------------------------------------------------------
// Differentiable route
// ---------------------------------------------------------------------------

/// Fits a diagonal Gaussian to the batch: per-column mean and population
/// standard deviation, floored at [`STD_FLOOR`]. Differentiable.
pub fn fit_diag_gaussian(batch: &Tensor) -> Result<(Tensor, Tensor)> {
    let n = batch.rows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "diagonal Gaussian fit needs at least 2 rows, got {n}"
        )));
    }
    let cols = batch.cols();
    let ones = Tensor::ones_row(n);
    let m = ones.matmul(batch)?.scalar_mul(1.0 / n as f64);
    let centered = batch.sub(&m.broadcast_row(n)?)?;
    let var = ones.matmul(&centered.square())?.scalar_mul(1.0 / n as f64);
    // var + floor^2 inside the sqrt keeps both the value and the gradient
    // finite when every row is identical.
    let floor = Tensor::from_vec(1, cols, vec![STD_FLOOR * STD_FLOOR; cols])?;
    let s = var.add(&floor)?.sqrt()?;
    Ok((m, s))
}

/// Exact KL( prod_j N(m_j, s_j^2) || N(0, I) ) as a differentiable scalar:
/// sum_j [ (s_j^2 + m_j^2)/2 - 1/2 - ln s_j ].
pub fn kl_vs_unit_gaussian(m: &Tensor, s: &Tensor) -> Result<Tensor> {
    let dim = m.len() as f64;
    let moments = m.square().add(&s.square())?.sum().scalar_mul(0.5);
    let logs = s.log()?.sum();
    moments.sub(&logs)?.sub(&Tensor::scalar(dim / 2.0))
}

/// The dimension-averaged normalization: -M/2 + (1/M) sum_j [ (s_j^2 + m_j^2)/2 - ln s_j ].
pub fn kl_paper_normalized(m: &Tensor, s: &Tensor) -> Result<Tensor> {
    let dim = m.len() as f64;
    let moments = m.square().add(&s.square())?.sum().scalar_mul(0.5);
    let logs = s.log()?.sum();
    moments
        .sub(&logs)?
        .scalar_mul(1.0 / dim)
        .sub(&Tensor::scalar(dim / 2.0))
}

/// Parametric divergence of a batch per the chosen formula, as a graph node.
pub fn parametric_divergence_graph(batch: &Tensor, method: DivergenceMethod) -> Result<Tensor> {
    let (m, s) = fit_diag_gaussian(batch)?;
    match method {
        DivergenceMethod::ParametricKl => kl_vs_unit_gaussian(&m, &s),
        DivergenceMethod::PaperNormalization => kl_paper_normalized(&m, &s),
    }
}

// ---------------------------------------------------------------------------
// Evaluation route (plain f64, order-independent)
// ---------------------------------------------------------------------------

/// Sums a multiset of values independently of their original order.
fn stable_sum(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Permutation-invariant fit: identical row multisets give bit-identical
/// statistics regardless of row order.
pub fn fit_diag_gaussian_stats(batch: &Tensor) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, cols) = (batch.rows(), batch.cols());
    if n < 2 {
        return Err(Error::invalid(format!(
            "diagonal Gaussian fit needs at least 2 rows, got {n}"
        )));
    }
    let data = batch.value();
    let mut means = Vec::with_capacity(cols);
    let mut stds = Vec::with_capacity(cols);
    let mut buf = Vec::with_capacity(n);
    for j in 0..cols {
        buf.clear();
        buf.extend((0..n).map(|i| data[i * cols + j]));
        let mean = stable_sum(&mut buf) / n as f64;
        buf.clear();
        buf.extend((0..n).map(|i| (data[i * cols + j] - mean).powi(2)));
        let var = stable_sum(&mut buf) / n as f64;
        means.push(mean);
        stds.push((var + STD_FLOOR * STD_FLOOR).sqrt());
    }
    Ok((means, stds))
}

/// Exact KL from fitted statistics.
pub fn exact_kl_from_stats(m: &[f64], s: &[f64]) -> f64 {
    m.iter()
        .zip(s)
        .map(|(m_j, s_j)| (s_j * s_j + m_j * m_j) / 2.0 - 0.5 - s_j.ln())
        .sum()
}

/// Raw parametric estimate of a batch's divergence from N(0, I).
pub fn parametric_kl_estimate(batch: &Tensor) -> Result<DivergenceEstimate> {
    let (m, s) = fit_diag_gaussian_stats(batch)?;
    Ok(DivergenceEstimate {
        value: exact_kl_from_stats(&m, &s),
        method: EstimateMethod::ParametricKl,
        per_dim_mean: m,
        per_dim_std: Some(s),
        k: None,
    })
}

/// Smallest exact-KL value any distribution supported on the unit sphere
/// S^{M-1} can score, attained by the uniform distribution (m = 0,
/// s_j^2 = 1/M): 1/2 - M/2 + (M/2) ln M.
pub fn sphere_class_floor(m_dim: usize) -> f64 {
    let m = m_dim as f64;
    0.5 - m / 2.0 + (m / 2.0) * m.ln()
}

/// Offset that zeroes the parametric statistic at the prior itself.
pub fn prior_floor(prior: Prior, m_dim: usize) -> f64 {
    match prior {
        Prior::Sphere => sphere_class_floor(m_dim),
        Prior::Gaussian => 0.0,
    }
}

/// Divergence of a batch from the prior: the raw parametric KL minus the
/// in-class floor, so batches drawn from the prior itself score near zero.
pub fn divergence_from_prior(batch: &Tensor, prior: Prior) -> Result<DivergenceEstimate> {
    let mut est = parametric_kl_estimate(batch)?;
    est.value -= prior_floor(prior, batch.cols());
    Ok(est)
}

// ---------------------------------------------------------------------------
// Kozachenko-Leonenko route
// ---------------------------------------------------------------------------

/// Digamma via upward recurrence into the asymptotic series; accurate to
/// 1e-10 for arguments >= 1.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma needs a positive argument");
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)))
}

/// ln Gamma(twice/2) for positive half-integers.
fn ln_gamma_half_integer(twice: usize) -> f64 {
    assert!(twice >= 1);
    let mut t = twice;
    let mut acc = 0.0;
    while t > 2 {
        t -= 2;
        acc += (t as f64 / 2.0).ln();
    }
    if t == 1 {
        acc + 0.5 * PI.ln()
    } else {
        acc
    }
}

/// ln of the unit-ball volume in M dimensions.
fn ln_unit_ball_volume(m: usize) -> f64 {
    (m as f64 / 2.0) * PI.ln() - ln_gamma_half_integer(m + 2)
}

/// Deduplicates exactly-equal rows by a deterministic 1e-9 offset so the
/// k-th neighbor distance is never zero.
fn jitter_duplicates(data: &mut [f64], n: usize, cols: usize) {
    use std::collections::HashMap;
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    for i in 0..n {
        let key: Vec<u64> = data[i * cols..(i + 1) * cols].iter().map(|x| x.to_bits()).collect();
        let count = seen.entry(key).or_insert(0);
        if *count > 0 {
            let shift = *count as f64 * 1e-9;
            for x in &mut data[i * cols..(i + 1) * cols] {
                *x += shift;
            }
        }
        *count += 1;
    }
}

fn kth_neighbor_distances(data: &[f64], n: usize, cols: usize, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut dists = Vec::with_capacity(n - 1);
    for i in 0..n {
        dists.clear();
        let a = &data[i * cols..(i + 1) * cols];
        for j in 0..n {
            if j == i {
                continue;
            }
            let b = &data[j * cols..(j + 1) * cols];
            let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            dists.push(d2);
        }
        let (_, kth, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
        out.push(kth.sqrt());
    }
    out
}

/// Kozachenko-Leonenko differential entropy estimate:
/// H = psi(n) - psi(k) + ln V_M + (M/n) * sum_i ln rho_{i,k}.
pub fn knn_entropy(batch: &Tensor, k: usize) -> Result<f64> {
    let (n, cols) = (batch.rows(), batch.cols());
    if k < 1 || n <= k {
        return Err(Error::invalid(format!(
            "k-NN entropy needs n > k >= 1, got n={n}, k={k}"
        )));
    }
    let mut data = batch.value();
    jitter_duplicates(&mut data, n, cols);
    let rho = kth_neighbor_distances(&data, n, cols, k);
    let mut logs: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let log_sum = stable_sum(&mut logs);
    Ok(digamma(n as f64) - digamma(k as f64)
        + ln_unit_ball_volume(cols)
        + (cols as f64 / n as f64) * log_sum)
}

/// Nonparametric KL from N(0, I): cross-entropy under the analytic Gaussian
/// density minus the k-NN entropy estimate. Monitoring only, not differentiable.
pub fn knn_kl_vs_unit_gaussian(batch: &Tensor, k: usize) -> Result<DivergenceEstimate> {
    let (n, cols) = (batch.rows(), batch.cols());
    let entropy = knn_entropy(batch, k)?;
    let data = batch.value();
    let mut sq_norms: Vec<f64> = data.chunks(cols).map(|row| row.iter().map(|x| x * x).sum()).collect();
    let cross_entropy =
        (cols as f64 / 2.0) * (2.0 * PI).ln() + stable_sum(&mut sq_norms) / (2.0 * n as f64);
    let mut means = Vec::with_capacity(cols);
    let mut buf = Vec::with_capacity(n);
    for j in 0..cols {
        buf.clear();
        buf.extend((0..n).map(|i| data[i * cols + j]));
        means.push(stable_sum(&mut buf) / n as f64);
    }
    Ok(DivergenceEstimate {
        value: cross_entropy - entropy,
        method: EstimateMethod::KnnKl,
        per_dim_mean: means,
        per_dim_std: None,
        k: Some(k),
    })
}

/// Closed-form KL between two fitted diagonal Gaussians.
pub fn diag_gaussian_kl(m1: &[f64], s1: &[f64], m2: &[f64], s2: &[f64]) -> f64 {
    m1.iter()
        .zip(s1)
        .zip(m2.iter().zip(s2))
        .map(|((m1j, s1j), (m2j, s2j))| {
            (s2j / s1j).ln() + (s1j * s1j + (m1j - m2j) * (m1j - m2j)) / (2.0 * s2j * s2j) - 0.5
        })
        .sum()
}
