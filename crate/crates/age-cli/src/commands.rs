//! Subcommand implementations. Every command is deterministic given its
//! config and seed and communicates failure through typed exit codes.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use age_core::data;
use age_core::divergence;
use age_core::game::{self, one_hot};
use age_core::latent::{sample_prior, slerp, Prior};
use age_core::nets::{
    load_checkpoint, save_checkpoint, CheckpointHeader, Network,
};
use age_core::tensor::Tensor;

use crate::config::RunConfig;
use crate::{exit_code_for, info, CliError, EXIT_BAD_INPUT, EXIT_NUMERIC};

pub struct RasterOpts {
    pub height: usize,
    pub width: usize,
    pub grid_cols: usize,
}

fn write_file(path: &Path, body: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, body)
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn csv_bytes(samples: &Tensor, labels: Option<&[usize]>) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    data::write_csv(&mut out, samples, labels)
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
    Ok(out)
}

pub fn cmd_train(config_path: &Path, seed_override: Option<u64>, out_override: Option<PathBuf>) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(config_path).map_err(|e| CliError::new(EXIT_BAD_INPUT, e))?;
    if let Some(seed) = seed_override {
        cfg.train.seed = seed;
    }
    if let Some(out) = out_override {
        cfg.out_dir = out;
    }
    let dataset = cfg
        .build_dataset()
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, format!("data: {e}")))?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, format!("out_dir: {e}")))?;

    let game_cfg = cfg.game_config();
    let model_cfg = cfg.model_config();
    info(&format!(
        "training {} iters on {} ({} samples, dim {})",
        cfg.train.iters,
        cfg.data.kind,
        dataset.len(),
        dataset.dim()
    ));

    let result = game::train_with_progress(
        &dataset,
        &model_cfg,
        &game_cfg,
        cfg.train.iters,
        cfg.train.seed,
        |m| {
            if m.iter % 500 == 0 {
                info(&format!(
                    "iter {:6}  div_real {:8.4}  div_fake {:8.4}  L_Z {:7.4}  L_X {:7.4}",
                    m.iter, m.div_real, m.div_fake, m.loss_latent, m.loss_data
                ));
            }
        },
    )
    .map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?;

    let mut metrics_bytes = Vec::new();
    game::write_metrics_csv(&result.metrics, &mut metrics_bytes)
        .map_err(|e| CliError::new(EXIT_NUMERIC, e.to_string()))?;
    write_file(&cfg.out_dir.join("metrics.csv"), &metrics_bytes)?;

    let enc_header = CheckpointHeader {
        role: "encoder".into(),
        prior: game_cfg.prior,
        latent_dim: game_cfg.latent_dim,
        spec: result.encoder.spec.clone(),
    };
    save_checkpoint(&cfg.out_dir.join("encoder.age"), &result.encoder, &enc_header)
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
    let gen_header = CheckpointHeader {
        role: "generator".into(),
        prior: game_cfg.prior,
        latent_dim: game_cfg.latent_dim,
        spec: result.generator.spec.clone(),
    };
    save_checkpoint(&cfg.out_dir.join("generator.age"), &result.generator, &gen_header)
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;

    let resolved = serde_json::to_vec_pretty(&cfg)
        .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
    write_file(&cfg.out_dir.join("config.resolved.json"), &resolved)?;

    if let Some(abort) = result.aborted {
        return Err(CliError::new(
            EXIT_NUMERIC,
            format!(
                "aborted at iteration {}: {}; last-good checkpoints written to {}",
                abort.iter,
                abort.reason,
                cfg.out_dir.display()
            ),
        ));
    }
    info(&format!("artifacts written to {}", cfg.out_dir.display()));
    Ok(())
}

fn load_role(path: &Path, role: &str) -> Result<(Network, CheckpointHeader), CliError> {
    let (net, header) =
        load_checkpoint(path).map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
    if header.role != role {
        return Err(CliError::new(
            EXIT_BAD_INPUT,
            format!("{} holds a {:?} checkpoint, expected {role:?}", path.display(), header.role),
        ));
    }
    net.set_trainable(false);
    Ok((net, header))
}

fn condition_rows(
    net_condition_dim: usize,
    label: Option<usize>,
    n: usize,
) -> Result<Option<Tensor>, CliError> {
    match (net_condition_dim, label) {
        (0, None) => Ok(None),
        (0, Some(_)) => Err(CliError::new(EXIT_BAD_INPUT, "model is unconditional; --label is not applicable".into())),
        (_, None) => Err(CliError::new(EXIT_BAD_INPUT, "conditional model requires --label".into())),
        (c, Some(l)) => {
            if l >= c {
                return Err(CliError::new(
                    EXIT_BAD_INPUT,
                    format!("label {l} out of range for {c} classes"),
                ));
            }
            let cond = one_hot(&vec![l; n], c)
                .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
            Ok(Some(cond))
        }
    }
}

pub fn cmd_sample(
    generator: &Path,
    n: usize,
    seed: u64,
    out: &Path,
    label: Option<usize>,
    raster: Option<RasterOpts>,
) -> Result<(), CliError> {
    let (gen, header) = load_role(generator, "generator")?;
    if gen.spec.input_dim != header.latent_dim {
        return Err(CliError::new(
            EXIT_BAD_INPUT,
            format!(
                "checkpoint inconsistency: generator input {} vs latent dim {}",
                gen.spec.input_dim, header.latent_dim
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = if n == 0 {
        Tensor::zeros(0, gen.spec.output_dim)
    } else {
        let z = sample_prior(header.prior, n, header.latent_dim, &mut rng)
            .map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?;
        let cond = condition_rows(gen.spec.condition_dim, label, n)?;
        gen.forward(&z, cond.as_ref())
            .map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?
    };
    match raster {
        Some(r) => {
            let body = data::render_raster_grid(&samples, r.height, r.width, r.grid_cols)
                .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
            write_file(out, &body)?;
        }
        None => {
            let labels: Option<Vec<usize>> = label.map(|l| vec![l; n]);
            write_file(out, &csv_bytes(&samples, labels.as_deref())?)?;
        }
    }
    info(&format!("wrote {} samples to {}", n, out.display()));
    Ok(())
}

pub fn cmd_reconstruct(
    encoder: &Path,
    generator: &Path,
    data_path: &Path,
    out: &Path,
    raster: Option<RasterOpts>,
) -> Result<(), CliError> {
    let (enc, _) = load_role(encoder, "encoder")?;
    let (gen, _) = load_role(generator, "generator")?;
    let ds = data::load_csv(data_path).map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
    if ds.dim() != enc.spec.input_dim || gen.spec.output_dim != ds.dim() {
        return Err(CliError::new(
            EXIT_BAD_INPUT,
            format!(
                "dimension mismatch: data {} vs encoder input {} / generator output {}",
                ds.dim(),
                enc.spec.input_dim,
                gen.spec.output_dim
            ),
        ));
    }
    let cond = match enc.spec.condition_dim {
        0 => None,
        c => {
            let labels = ds.labels.as_ref().ok_or_else(|| {
                CliError::new(EXIT_BAD_INPUT, "conditional model requires a label column".into())
            })?;
            Some(one_hot(labels, c).map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?)
        }
    };
    let run = || -> age_core::Result<(Tensor, f64)> {
        let codes = enc.forward(&ds.samples, cond.as_ref())?;
        let recon = gen.forward(&codes, cond.as_ref())?;
        let n = ds.len();
        let mean_l1 =
            ds.samples.sub(&recon)?.abs().sum().item() / n as f64;

        // Interleave: real row, reconstructed row.
        let dim = ds.dim();
        let (real, fake) = (ds.samples.value(), recon.value());
        let mut rows = Vec::with_capacity(2 * n * dim);
        for i in 0..n {
            rows.extend_from_slice(&real[i * dim..(i + 1) * dim]);
            rows.extend_from_slice(&fake[i * dim..(i + 1) * dim]);
        }
        Ok((Tensor::from_vec(2 * n, dim, rows)?, mean_l1))
    };
    let (interleaved, mean_l1) =
        run().map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?;
    match raster {
        Some(r) => {
            let body = data::render_raster_grid(&interleaved, r.height, r.width, r.grid_cols)
                .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
            write_file(out, &body)?;
        }
        None => write_file(out, &csv_bytes(&interleaved, None)?)?,
    }
    println!("mean L1 reconstruction error: {mean_l1:.9e}");
    Ok(())
}

fn parse_point(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| CliError::new(EXIT_BAD_INPUT, format!("bad coordinate {f:?}")))
        })
        .collect()
}

pub fn cmd_interpolate(
    encoder: &Path,
    generator: &Path,
    x1: &str,
    x2: &str,
    steps: usize,
    out: &Path,
    label: Option<usize>,
) -> Result<(), CliError> {
    if steps < 2 {
        return Err(CliError::new(EXIT_BAD_INPUT, "steps must be >= 2".into()));
    }
    let (enc, header) = load_role(encoder, "encoder")?;
    let (gen, _) = load_role(generator, "generator")?;
    if header.prior != Prior::Sphere {
        return Err(CliError::new(
            EXIT_BAD_INPUT,
            "interpolation walks the great circle and needs the sphere prior".into(),
        ));
    }
    let (p1, p2) = (parse_point(x1)?, parse_point(x2)?);
    if p1.len() != enc.spec.input_dim || p2.len() != enc.spec.input_dim {
        return Err(CliError::new(
            EXIT_BAD_INPUT,
            format!("endpoints must have dimension {}", enc.spec.input_dim),
        ));
    }
    let run = || -> age_core::Result<Tensor> {
        let dim = p1.len();
        let mut both = p1.clone();
        both.extend_from_slice(&p2);
        let x = Tensor::from_vec(2, dim, both)?;
        let cond2 = match label {
            Some(l) => Some(one_hot(&[l, l], enc.spec.condition_dim)?),
            None => None,
        };
        let codes = enc.forward(&x, cond2.as_ref())?.value();
        let m = header.latent_dim;
        let (z1, z2) = (&codes[..m], &codes[m..]);
        let mut path_rows = Vec::with_capacity(steps * m);
        for i in 0..steps {
            let t = i as f64 / (steps - 1) as f64;
            path_rows.extend(slerp(z1, z2, t)?);
        }
        let path = Tensor::from_vec(steps, m, path_rows)?;
        let cond_path = match label {
            Some(l) => Some(one_hot(&vec![l; steps], gen.spec.condition_dim)?),
            None => None,
        };
        gen.forward(&path, cond_path.as_ref())
    };
    let decoded = run().map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?;
    write_file(out, &csv_bytes(&decoded, None)?)?;
    info(&format!("wrote {steps} interpolation steps to {}", out.display()));
    Ok(())
}

pub fn cmd_eval_divergence(input: &Path, method: &str, k: usize) -> Result<(), CliError> {
    let ds = data::load_csv(input).map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?;
    let (n, m) = (ds.len(), ds.dim());
    let value = match method {
        "parametric" => divergence::parametric_kl_estimate(&ds.samples)
            .map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?
            .value,
        "knn" => divergence::knn_kl_vs_unit_gaussian(&ds.samples, k)
            .map_err(|e| CliError::new(exit_code_for(&e), e.to_string()))?
            .value,
        other => {
            return Err(CliError::new(
                EXIT_BAD_INPUT,
                format!("unknown method {other:?}, expected parametric | knn"),
            ))
        }
    };
    #[derive(serde::Serialize)]
    struct Report<'a> {
        method: &'a str,
        value: f64,
        n: usize,
        #[serde(rename = "M")]
        dim: usize,
    }
    let label = if method == "knn" { "knn-kl" } else { "parametric-kl" };
    println!(
        "{}",
        serde_json::to_string(&Report { method: label, value, n, dim: m })
            .map_err(|e| CliError::new(EXIT_BAD_INPUT, e.to_string()))?
    );
    Ok(())
}

