//! The adversarial generator-encoder game: reconstruction losses, the two
//! practical objectives, the diagnostic two-sample objective, and the
//! alternating training loop.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::Dataset;
use crate::divergence::{
    self, parametric_divergence_graph, prior_floor, DivergenceMethod,
};
use crate::error::{Error, Result};
use crate::latent::{sample_prior, Prior};
use crate::nets::{Activation, MlpSpec, Network, OutputTransform};
use crate::optim::Adam;
use crate::tensor::Tensor;

/// Rows used for the per-iteration metric estimates; larger than the
/// training batch so the logged divergences carry little sampling bias.
const METRICS_BATCH: usize = 512;

#[derive(Clone, Debug)]
pub struct GameConfig {
    /// Latent dimension M.
    pub latent_dim: usize,
    /// Weight of the latent reconstruction term in the generator objective.
    pub lambda: f64,
    /// Weight of the data reconstruction term in the encoder objective.
    pub mu: f64,
    pub gen_updates_per_enc: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub divergence_method: DivergenceMethod,
    pub prior: Prior,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            latent_dim: 2,
            lambda: 1000.0,
            mu: 10.0,
            gen_updates_per_enc: 2,
            batch_size: 64,
            lr: 2e-4,
            divergence_method: DivergenceMethod::ParametricKl,
            prior: Prior::Sphere,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 || self.mu < 0.0 {
            return Err(Error::invalid("lambda and mu must be non-negative"));
        }
        if self.gen_updates_per_enc < 1 {
            return Err(Error::invalid("gen_updates_per_enc must be >= 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size must be >= 2 to fit batch statistics"));
        }
        if self.latent_dim < 2 {
            return Err(Error::invalid("latent_dim must be >= 2"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Network shapes and conditioning, separate from the game hyperparameters.
#[derive(Clone, Debug)]
pub struct ModelConfig {
    pub encoder_hidden: Vec<usize>,
    pub generator_hidden: Vec<usize>,
    pub activation: Activation,
    pub leaky_slope: f64,
    /// When set, one-hot class labels are appended to both networks' inputs.
    pub condition: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder_hidden: vec![64, 64],
            generator_hidden: vec![64, 64],
            activation: Activation::LeakyRelu,
            leaky_slope: 0.2,
            condition: false,
        }
    }
}

/// One row of the training log.
#[derive(Clone, Copy, Debug)]
pub struct TrainMetrics {
    pub iter: usize,
    pub div_real: f64,
    pub div_fake: f64,
    pub loss_latent: f64,
    pub loss_data: f64,
    pub v2: f64,
}

#[derive(Clone, Debug)]
pub struct AbortInfo {
    pub iter: usize,
    pub reason: String,
}

pub struct TrainResult {
    pub generator: Network,
    pub encoder: Network,
    pub metrics: Vec<TrainMetrics>,
    /// Set when training stopped on a non-finite loss; the networks carry
    /// the last finite iteration's parameters.
    pub aborted: Option<AbortInfo>,
}

/// Offset that zeroes the chosen formula on batches matching the prior;
/// a constant in the parameters, so gradients are untouched.
fn method_floor(method: DivergenceMethod, prior: Prior, m_dim: usize) -> f64 {
    let exact = prior_floor(prior, m_dim);
    match method {
        DivergenceMethod::ParametricKl => exact,
        DivergenceMethod::PaperNormalization => {
            let m = m_dim as f64;
            (exact + m / 2.0) / m - m / 2.0
        }
    }
}

fn divergence_graph(codes: &Tensor, cfg: &GameConfig) -> Result<Tensor> {
    let raw = parametric_divergence_graph(codes, cfg.divergence_method)?;
    let floor = method_floor(cfg.divergence_method, cfg.prior, codes.cols());
    raw.sub(&Tensor::scalar(floor))
}

/// Mean L1 reconstruction error in data space: E || x - g(e(x)) ||_1.
pub fn loss_data_reconstruction(
    generator: &Network,
    encoder: &Network,
    x: &Tensor,
    condition: Option<&Tensor>,
) -> Result<Tensor> {
    let codes = encoder.forward(x, condition)?;
    let recon = generator.forward(&codes, condition)?;
    let n = x.rows() as f64;
    Ok(x.sub(&recon)?.abs().sum().scalar_mul(1.0 / n))
}

/// Mean squared latent reconstruction error: E || z - e(g(z)) ||_2^2.
pub fn loss_latent_reconstruction(
    generator: &Network,
    encoder: &Network,
    z: &Tensor,
    condition: Option<&Tensor>,
) -> Result<Tensor> {
    let fake = generator.forward(z, condition)?;
    let codes = encoder.forward(&fake, condition)?;
    let n = z.rows() as f64;
    Ok(z.sub(&codes)?.square().sum().scalar_mul(1.0 / n))
}

/// Generator loss: divergence of the encoded fake batch from the prior,
/// plus the weighted latent reconstruction. The encoder must be frozen by
/// the caller; the divergence-of-real term is constant in the generator
/// parameters and therefore omitted.
pub fn generator_objective(
    generator: &Network,
    encoder: &Network,
    z: &Tensor,
    condition: Option<&Tensor>,
    cfg: &GameConfig,
) -> Result<Tensor> {
    if z.rows() < 2 {
        return Err(Error::invalid("generator objective needs a batch of >= 2 latent rows"));
    }
    let fake = generator.forward(z, condition)?;
    let codes = encoder.forward(&fake, condition)?;
    let div_fake = divergence_graph(&codes, cfg)?;
    let n = z.rows() as f64;
    let latent_recon = z.sub(&codes)?.square().sum().scalar_mul(1.0 / n);
    div_fake.add(&latent_recon.scalar_mul(cfg.lambda))
}

/// Encoder score to MAXIMIZE: divergence of encoded fakes minus divergence
/// of encoded reals, minus the weighted data reconstruction. The generator
/// must be frozen by the caller.
pub fn encoder_objective(
    generator: &Network,
    encoder: &Network,
    x: &Tensor,
    x_condition: Option<&Tensor>,
    z: &Tensor,
    z_condition: Option<&Tensor>,
    cfg: &GameConfig,
) -> Result<Tensor> {
    if x.rows() < 2 || z.rows() < 2 {
        return Err(Error::invalid("encoder objective needs batches of >= 2 rows"));
    }
    let fake = generator.forward(z, z_condition)?;
    let codes_fake = encoder.forward(&fake, z_condition)?;
    let div_fake = divergence_graph(&codes_fake, cfg)?;

    let codes_real = encoder.forward(x, x_condition)?;
    let div_real = divergence_graph(&codes_real, cfg)?;

    let recon = generator.forward(&codes_real, x_condition)?;
    let n = x.rows() as f64;
    let data_recon = x.sub(&recon)?.abs().sum().scalar_mul(1.0 / n);

    div_fake.sub(&div_real)?.sub(&data_recon.scalar_mul(cfg.mu))
}

/// Diagnostic two-sample objective: closed-form KL between the diagonal
/// Gaussians fitted to the encoded fake and encoded real batches. Not used
/// for training.
pub fn v1_objective(
    generator: &Network,
    encoder: &Network,
    z: &Tensor,
    x: &Tensor,
    condition: Option<&Tensor>,
) -> Result<f64> {
    let fake = generator.forward(z, condition)?;
    let codes_fake = encoder.forward(&fake, condition)?;
    let codes_real = encoder.forward(x, condition)?;
    let (mf, sf) = divergence::fit_diag_gaussian_stats(&codes_fake)?;
    let (mr, sr) = divergence::fit_diag_gaussian_stats(&codes_real)?;
    Ok(divergence::diag_gaussian_kl(&mf, &sf, &mr, &sr))
}

/// One-hot encoding of class labels as a differentiation-inert tensor.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Tensor> {
    let mut data = vec![0.0; labels.len() * classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::invalid(format!("label {l} out of range for {classes} classes")));
        }
        data[i * classes + l] = 1.0;
    }
    Tensor::from_vec(labels.len(), classes, data)
}

struct EpochSampler {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl EpochSampler {
    fn new(n: usize, seed: u64) -> EpochSampler {
        let mut s = EpochSampler {
            order: (0..n).collect(),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        s.reshuffle();
        s
    }

    fn reshuffle(&mut self) {
        // Fisher-Yates on the index vector.
        for i in (1..self.order.len()).rev() {
            let j = self.rng.gen_range(0..=i);
            self.order.swap(i, j);
        }
        self.cursor = 0;
    }

    /// Next minibatch of indices without replacement; reshuffles when the
    /// remaining tail is shorter than the batch.
    fn next_batch(&mut self, batch: usize) -> &[usize] {
        if self.cursor + batch > self.order.len() {
            self.reshuffle();
        }
        let out = &self.order[self.cursor..self.cursor + batch];
        self.cursor += batch;
        out
    }
}

fn gather_rows(data: &[f64], dim: usize, indices: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(indices.len() * dim);
    for &i in indices {
        out.extend_from_slice(&data[i * dim..(i + 1) * dim]);
    }
    out
}

struct BatchSource<'a> {
    data: Vec<f64>,
    dim: usize,
    labels: Option<&'a [usize]>,
    classes: usize,
}

impl<'a> BatchSource<'a> {
    fn batch(&self, indices: &[usize], conditional: bool) -> Result<(Tensor, Option<Tensor>)> {
        let x = Tensor::from_vec(indices.len(), self.dim, gather_rows(&self.data, self.dim, indices))?;
        let cond = if conditional {
            let labels = self.labels.expect("conditional training requires labels");
            let batch_labels: Vec<usize> = indices.iter().map(|&i| labels[i]).collect();
            Some(one_hot(&batch_labels, self.classes)?)
        } else {
            None
        };
        Ok((x, cond))
    }
}

fn random_labels(rng: &mut ChaCha8Rng, n: usize, classes: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..classes)).collect()
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

/// Alternating optimization: per outer iteration, one encoder ascent step
/// followed by `gen_updates_per_enc` generator descent steps, each on fresh
/// minibatches. Deterministic per seed. A non-finite loss aborts with the
/// last finite iteration's parameters restored.
pub fn train(
    dataset: &Dataset,
    model: &ModelConfig,
    cfg: &GameConfig,
    iters: usize,
    seed: u64,
) -> Result<TrainResult> {
    train_with_progress(dataset, model, cfg, iters, seed, |_| {})
}

/// [`train`] with a per-iteration metrics callback for progress reporting.
pub fn train_with_progress(
    dataset: &Dataset,
    model: &ModelConfig,
    cfg: &GameConfig,
    iters: usize,
    seed: u64,
    mut on_metrics: impl FnMut(&TrainMetrics),
) -> Result<TrainResult> {
    cfg.validate()?;
    if dataset.len() < cfg.batch_size {
        return Err(Error::invalid(format!(
            "dataset of {} rows is smaller than batch_size {}",
            dataset.len(),
            cfg.batch_size
        )));
    }
    let classes = if model.condition {
        match dataset.n_classes() {
            Some(c) if c >= 1 => c,
            _ => return Err(Error::invalid("conditional training requires labeled data")),
        }
    } else {
        0
    };

    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let enc_seed: u64 = master.gen();
    let gen_seed: u64 = master.gen();
    let shuffle_seed: u64 = master.gen();
    let mut prior_rng = ChaCha8Rng::seed_from_u64(master.gen());
    let mut metrics_rng = ChaCha8Rng::seed_from_u64(master.gen());

    let data_dim = dataset.dim();
    let encoder_transform = match cfg.prior {
        Prior::Sphere => OutputTransform::SphereProjection,
        Prior::Gaussian => OutputTransform::Identity,
    };
    let encoder = Network::init(
        MlpSpec::new(
            data_dim,
            &model.encoder_hidden,
            cfg.latent_dim,
            classes,
            model.activation,
            encoder_transform,
            model.leaky_slope,
        )?,
        enc_seed,
    )?;
    let generator = Network::init(
        MlpSpec::new(
            cfg.latent_dim,
            &model.generator_hidden,
            data_dim,
            classes,
            model.activation,
            OutputTransform::Identity,
            model.leaky_slope,
        )?,
        gen_seed,
    )?;

    let mut adam_enc = Adam::new(encoder.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut adam_gen = Adam::new(generator.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);

    let source = BatchSource {
        data: dataset.samples.value(),
        dim: data_dim,
        labels: dataset.labels.as_deref(),
        classes,
    };
    let mut sampler = EpochSampler::new(dataset.len(), shuffle_seed);

    let mut metrics = Vec::with_capacity(iters);
    let mut snapshot: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = None;

    let finish = |generator: Network, encoder: Network, metrics, aborted| {
        generator.set_trainable(true);
        encoder.set_trainable(true);
        Ok(TrainResult { generator, encoder, metrics, aborted })
    };

    for iter in 0..iters {
        let abort = |reason: String,
                     generator: Network,
                     encoder: Network,
                     metrics: Vec<TrainMetrics>,
                     snapshot: &Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)>|
         -> Result<TrainResult> {
            if let Some((enc_vals, gen_vals)) = snapshot {
                encoder.restore_param_values(enc_vals)?;
                generator.restore_param_values(gen_vals)?;
            }
            finish(generator, encoder, metrics, Some(AbortInfo { iter, reason }))
        };

        // Encoder ascent on fresh real and prior batches.
        {
            generator.set_trainable(false);
            encoder.set_trainable(true);
            encoder.zero_grads();
            let (x, x_cond) = source.batch(sampler.next_batch(cfg.batch_size), model.condition)?;
            let z = sample_prior(cfg.prior, cfg.batch_size, cfg.latent_dim, &mut prior_rng)?;
            let z_cond = if model.condition {
                Some(one_hot(&random_labels(&mut prior_rng, cfg.batch_size, classes), classes)?)
            } else {
                None
            };
            let score = encoder_objective(&generator, &encoder, &x, x_cond.as_ref(), &z, z_cond.as_ref(), cfg)?;
            if !finite(score.item()) {
                return abort(
                    format!("encoder objective became {}", score.item()),
                    generator,
                    encoder,
                    metrics,
                    &snapshot,
                );
            }
            score.scalar_mul(-1.0).backward()?;
            adam_enc.step(encoder.params())?;
        }

        // Generator descent steps, each on a fresh prior batch.
        encoder.set_trainable(false);
        generator.set_trainable(true);
        for _ in 0..cfg.gen_updates_per_enc {
            generator.zero_grads();
            let z = sample_prior(cfg.prior, cfg.batch_size, cfg.latent_dim, &mut prior_rng)?;
            let z_cond = if model.condition {
                Some(one_hot(&random_labels(&mut prior_rng, cfg.batch_size, classes), classes)?)
            } else {
                None
            };
            let loss = generator_objective(&generator, &encoder, &z, z_cond.as_ref(), cfg)?;
            if !finite(loss.item()) {
                return abort(
                    format!("generator objective became {}", loss.item()),
                    generator,
                    encoder,
                    metrics,
                    &snapshot,
                );
            }
            loss.backward()?;
            adam_gen.step(generator.params())?;
        }

        // Metric pass on larger held-aside batches, gradients off.
        generator.set_trainable(false);
        encoder.set_trainable(false);
        let row = {
            let indices: Vec<usize> =
                (0..METRICS_BATCH).map(|_| metrics_rng.gen_range(0..dataset.len())).collect();
            let (x, x_cond) = source.batch(&indices, model.condition)?;
            let z = sample_prior(cfg.prior, METRICS_BATCH, cfg.latent_dim, &mut metrics_rng)?;
            let z_cond = if model.condition {
                Some(one_hot(&random_labels(&mut metrics_rng, METRICS_BATCH, classes), classes)?)
            } else {
                None
            };
            let floor = prior_floor(cfg.prior, cfg.latent_dim);

            let fake = generator.forward(&z, z_cond.as_ref())?;
            let codes_fake = encoder.forward(&fake, z_cond.as_ref())?;
            let div_fake = divergence::parametric_kl_estimate(&codes_fake)?.value - floor;
            let loss_latent =
                z.sub(&codes_fake)?.square().sum().item() / METRICS_BATCH as f64;

            let codes_real = encoder.forward(&x, x_cond.as_ref())?;
            let div_real = divergence::parametric_kl_estimate(&codes_real)?.value - floor;
            let recon = generator.forward(&codes_real, x_cond.as_ref())?;
            let loss_data = x.sub(&recon)?.abs().sum().item() / METRICS_BATCH as f64;

            TrainMetrics {
                iter,
                div_real,
                div_fake,
                loss_latent,
                loss_data,
                v2: div_fake - div_real,
            }
        };
        if ![row.div_real, row.div_fake, row.loss_latent, row.loss_data].iter().all(|v| finite(*v)) {
            return abort("non-finite metrics".into(), generator, encoder, metrics, &snapshot);
        }
        on_metrics(&row);
        metrics.push(row);
        snapshot = Some((encoder.param_values(), generator.param_values()));
    }

    finish(generator, encoder, metrics, None)
}

/// Metric log as CSV: one row per iteration, 9 significant digits.
pub fn write_metrics_csv(metrics: &[TrainMetrics], w: &mut impl Write) -> Result<()> {
    writeln!(w, "iter,div_real,div_fake,loss_latent,loss_data,v2")?;
    for m in metrics {
        writeln!(
            w,
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            m.iter, m.div_real, m.div_fake, m.loss_latent, m.loss_data, m.v2
        )?;
    }
    Ok(())
}
