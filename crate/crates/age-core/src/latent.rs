//! Latent prior geometry: uniform sampling on the unit sphere, sphere
//! projection, and great-circle interpolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// The easy-to-sample reference distribution in latent space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    /// Uniform on the unit sphere S^{M-1} (the default).
    Sphere,
    /// Standard Gaussian in R^M; no sphere projection anywhere.
    Gaussian,
}

/// Batch of latent codes, one per row.
pub struct LatentBatch {
    points: Tensor,
}

impl LatentBatch {
    /// Wraps an n x M tensor whose rows are expected to be unit length.
    pub fn from_unit_rows(points: Tensor) -> Result<LatentBatch> {
        let data = points.value();
        let m = points.cols();
        for (i, row) in data.chunks(m).enumerate() {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "latent row {i} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(LatentBatch { points })
    }

    pub fn points(&self) -> &Tensor {
        &self.points
    }

    pub fn count(&self) -> usize {
        self.points.rows()
    }

    pub fn dim(&self) -> usize {
        self.points.cols()
    }
}

/// Draws n i.i.d. points uniformly from S^{M-1} by normalizing standard
/// Gaussian vectors. Deterministic per seed.
pub fn sample_uniform_sphere(n: usize, m: usize, seed: u64) -> Result<LatentBatch> {
    if m < 2 {
        return Err(Error::invalid(format!(
            "sphere latent dimension must be >= 2, got {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = sample_uniform_sphere_with(n, m, &mut rng)?;
    LatentBatch::from_unit_rows(points)
}

pub(crate) fn sample_uniform_sphere_with(n: usize, m: usize, rng: &mut impl Rng) -> Result<Tensor> {
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n {
        let start = data.len();
        loop {
            data.truncate(start);
            for _ in 0..m {
                data.push(rng.sample::<f64, _>(StandardNormal));
            }
            let norm = data[start..].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                for x in &mut data[start..] {
                    *x /= norm;
                }
                break;
            }
        }
    }
    Tensor::from_vec(n, m, data)
}

/// Draws n rows from the configured prior.
pub fn sample_prior(prior: Prior, n: usize, m: usize, rng: &mut impl Rng) -> Result<Tensor> {
    match prior {
        Prior::Sphere => sample_uniform_sphere_with(n, m, rng),
        Prior::Gaussian => {
            let data = (0..n * m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            Tensor::from_vec(n, m, data)
        }
    }
}

/// Differentiable projection of every row onto the unit sphere.
pub fn project_to_sphere(x: &Tensor) -> Result<Tensor> {
    x.normalize_rows()
}

/// Constant-speed interpolation along the great circle from z1 to z2.
///
/// Both inputs must be unit vectors; antipodal endpoints are rejected
/// because the connecting arc is not unique.
pub fn slerp(z1: &[f64], z2: &[f64], t: f64) -> Result<Vec<f64>> {
    if z1.len() != z2.len() {
        return Err(Error::invalid(format!(
            "slerp endpoints have different dimensions {} vs {}",
            z1.len(),
            z2.len()
        )));
    }
    for (name, z) in [("z1", z1), ("z2", z2)] {
        let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("slerp endpoint {name} has norm {norm}")));
        }
    }
    let dot: f64 = z1.iter().zip(z2).map(|(a, b)| a * b).sum();
    let dot = dot.clamp(-1.0, 1.0);
    if dot < -1.0 + 1e-9 {
        return Err(Error::AntipodalEndpoints);
    }
    let omega = dot.acos();
    let out: Vec<f64> = if omega < 1e-9 {
        // Nearly identical endpoints: interpolate linearly, renormalize.
        z1.iter().zip(z2).map(|(a, b)| (1.0 - t) * a + t * b).collect()
    } else {
        let sin_omega = omega.sin();
        let c1 = ((1.0 - t) * omega).sin() / sin_omega;
        let c2 = (t * omega).sin() / sin_omega;
        z1.iter().zip(z2).map(|(a, b)| c1 * a + c2 * b).collect()
    };
    let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(out.iter().map(|x| x / norm).collect())
}
