//! Encoder and generator networks: plain MLPs over the autodiff tensors,
//! with an optional condition vector concatenated to the input and a
//! configurable output transform (the encoder ends in sphere projection).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::Prior;
use crate::tensor::Tensor;

const CHECKPOINT_MAGIC: &[u8; 4] = b"AGE1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Tanh,
    LeakyRelu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputTransform {
    /// Normalize output rows onto the unit sphere (encoders).
    SphereProjection,
    /// Raw affine output (generators on unbounded data).
    Identity,
    /// Tanh squashing for raster data scaled to [-1, 1].
    Tanh,
}

/// Architecture description; `layer_widths` runs from the (condition-augmented)
/// input width to the output width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub output_transform: OutputTransform,
    pub input_dim: usize,
    pub output_dim: usize,
    pub condition_dim: usize,
    /// Negative-side slope for leaky-relu layers.
    pub leaky_slope: f64,
}

impl MlpSpec {
    pub fn new(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        condition_dim: usize,
        activation: Activation,
        output_transform: OutputTransform,
        leaky_slope: f64,
    ) -> Result<MlpSpec> {
        let mut layer_widths = Vec::with_capacity(hidden.len() + 2);
        layer_widths.push(input_dim + condition_dim);
        layer_widths.extend_from_slice(hidden);
        layer_widths.push(output_dim);
        let spec = MlpSpec {
            layer_widths,
            activation,
            output_transform,
            input_dim,
            output_dim,
            condition_dim,
            leaky_slope,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid("zero-width layer in MLP spec"));
        }
        if self.layer_widths.len() < 2 {
            return Err(Error::invalid("MLP spec needs at least input and output widths"));
        }
        if self.layer_widths[0] != self.input_dim + self.condition_dim {
            return Err(Error::invalid(format!(
                "first width {} must equal input_dim + condition_dim = {}",
                self.layer_widths[0],
                self.input_dim + self.condition_dim
            )));
        }
        if *self.layer_widths.last().unwrap() != self.output_dim {
            return Err(Error::invalid(format!(
                "last width {} must equal output_dim {}",
                self.layer_widths.last().unwrap(),
                self.output_dim
            )));
        }
        Ok(())
    }

    /// Number of affine layers.
    pub fn n_layers(&self) -> usize {
        self.layer_widths.len() - 1
    }
}

/// A parametric mapping: spec plus weight/bias tensors in layer order.
pub struct Network {
    pub spec: MlpSpec,
    params: Vec<Tensor>,
}

impl Network {
    /// He-scaled Gaussian weights, zero biases; deterministic per seed.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Network> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(spec.n_layers() * 2);
        for layer in 0..spec.n_layers() {
            let fan_in = spec.layer_widths[layer];
            let fan_out = spec.layer_widths[layer + 1];
            let scale = (2.0 / fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            params.push(Tensor::param(fan_in, fan_out, w)?);
            params.push(Tensor::param(1, fan_out, vec![0.0; fan_out])?);
        }
        Ok(Network { spec, params })
    }

    /// Builds a network from explicit parameter tensors (checkpoint load,
    /// identity stubs in pipeline tests).
    pub fn from_params(spec: MlpSpec, params: Vec<Tensor>) -> Result<Network> {
        spec.validate()?;
        if params.len() != spec.n_layers() * 2 {
            return Err(Error::invalid(format!(
                "expected {} parameter tensors, got {}",
                spec.n_layers() * 2,
                params.len()
            )));
        }
        for layer in 0..spec.n_layers() {
            let (fi, fo) = (spec.layer_widths[layer], spec.layer_widths[layer + 1]);
            if params[2 * layer].shape() != [fi, fo] || params[2 * layer + 1].shape() != [1, fo] {
                return Err(Error::invalid(format!("parameter shape mismatch at layer {layer}")));
            }
        }
        Ok(Network { spec, params })
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    /// Freeze or unfreeze all parameters for gradient tracking.
    pub fn set_trainable(&self, on: bool) {
        for p in &self.params {
            p.set_requires_grad(on);
        }
    }

    pub fn zero_grads(&self) {
        for p in &self.params {
            p.zero_grad();
        }
    }

    /// Snapshot of all parameter values, for last-good checkpoints.
    pub fn param_values(&self) -> Vec<Vec<f64>> {
        self.params.iter().map(|p| p.value()).collect()
    }

    pub fn restore_param_values(&self, values: &[Vec<f64>]) -> Result<()> {
        if values.len() != self.params.len() {
            return Err(Error::invalid("restore: parameter count mismatch"));
        }
        for (p, v) in self.params.iter().zip(values) {
            p.set_data(v)?;
        }
        Ok(())
    }

    /// Forward pass over a batch, with the condition columns appended to the
    /// input when the spec calls for them. Fully differentiable.
    pub fn forward(&self, input: &Tensor, condition: Option<&Tensor>) -> Result<Tensor> {
        if input.cols() != self.spec.input_dim {
            return Err(Error::ShapeMismatch {
                op: "forward",
                lhs: vec![input.rows(), input.cols()],
                rhs: vec![input.rows(), self.spec.input_dim],
            });
        }
        let mut x = match (self.spec.condition_dim, condition) {
            (0, None) => input.clone(),
            (0, Some(_)) => {
                return Err(Error::invalid("network takes no condition, but one was supplied"))
            }
            (_, None) => {
                return Err(Error::invalid("conditional network called without a condition"))
            }
            (c, Some(cond)) => {
                if cond.cols() != c || cond.rows() != input.rows() {
                    return Err(Error::ShapeMismatch {
                        op: "forward-condition",
                        lhs: vec![cond.rows(), cond.cols()],
                        rhs: vec![input.rows(), c],
                    });
                }
                input.concat_cols(cond)?
            }
        };
        let n = input.rows();
        let layers = self.spec.n_layers();
        for layer in 0..layers {
            let w = &self.params[2 * layer];
            let b = &self.params[2 * layer + 1];
            x = x.matmul(w)?.add(&b.broadcast_row(n)?)?;
            if layer + 1 < layers {
                x = match self.spec.activation {
                    Activation::Tanh => x.tanh(),
                    Activation::LeakyRelu => x.leaky_relu(self.spec.leaky_slope),
                };
            }
        }
        match self.spec.output_transform {
            OutputTransform::SphereProjection => x.normalize_rows(),
            OutputTransform::Identity => Ok(x),
            OutputTransform::Tanh => Ok(x.tanh()),
        }
    }
}

/// Checkpoint header: everything needed to rebuild and drive the network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub role: String,
    pub prior: Prior,
    pub latent_dim: usize,
    pub spec: MlpSpec,
}

/// Writes `AGE1`, a JSON header line, then every parameter tensor as
/// little-endian f64 in declaration order. Round-trips bit-exactly.
pub fn save_checkpoint(path: &Path, net: &Network, header: &CheckpointHeader) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    let mut json = serde_json::to_vec(header)?;
    json.push(b'\n');
    w.write_all(&json)?;
    for p in net.params() {
        for v in p.value() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Network, CheckpointHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::BadCheckpoint(format!(
            "bad magic {:?}, expected {:?}",
            magic, CHECKPOINT_MAGIC
        )));
    }
    let mut header_line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        header_line.push(byte[0]);
        if header_line.len() > 1 << 20 {
            return Err(Error::BadCheckpoint("unterminated header".into()));
        }
    }
    let header: CheckpointHeader = serde_json::from_slice(&header_line)?;
    header.spec.validate().map_err(|e| Error::BadCheckpoint(e.to_string()))?;

    let mut params = Vec::with_capacity(header.spec.n_layers() * 2);
    for layer in 0..header.spec.n_layers() {
        let (fi, fo) = (header.spec.layer_widths[layer], header.spec.layer_widths[layer + 1]);
        for (rows, cols) in [(fi, fo), (1, fo)] {
            let mut buf = vec![0u8; rows * cols * 8];
            r.read_exact(&mut buf).map_err(|_| {
                Error::BadCheckpoint(format!("truncated parameters at layer {layer}"))
            })?;
            let data: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            params.push(Tensor::param(rows, cols, data)?);
        }
    }
    let mut trailing = Vec::new();
    r.read_to_end(&mut trailing)?;
    if !trailing.is_empty() {
        return Err(Error::BadCheckpoint(format!(
            "{} unexpected trailing bytes",
            trailing.len()
        )));
    }
    let net = Network::from_params(header.spec.clone(), params)?;
    Ok((net, header))
}

/// An exact-identity stub: one affine layer with unit weights and zero
/// biases, no activation. Used to test pipeline plumbing without training.
pub fn identity_network(dim: usize, output_transform: OutputTransform) -> Result<Network> {
    let spec = MlpSpec::new(dim, &[], dim, 0, Activation::Tanh, output_transform, 0.2)?;
    let mut eye = vec![0.0; dim * dim];
    for i in 0..dim {
        eye[i * dim + i] = 1.0;
    }
    let params = vec![Tensor::param(dim, dim, eye)?, Tensor::param(1, dim, vec![0.0; dim])?];
    Network::from_params(spec, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_2_16_16_2() -> MlpSpec {
        MlpSpec::new(2, &[16, 16], 2, 0, Activation::LeakyRelu, OutputTransform::Identity, 0.2)
            .unwrap()
    }

    #[test]
    fn init_shapes_for_hidden_stack() {
        let net = Network::init(spec_2_16_16_2(), 0).unwrap();
        let shapes: Vec<[usize; 2]> = net.params().iter().map(|p| p.shape()).collect();
        assert_eq!(
            shapes,
            vec![[2, 16], [1, 16], [16, 16], [1, 16], [16, 2], [1, 2]]
        );
    }

    #[test]
    fn init_is_deterministic() {
        let a = Network::init(spec_2_16_16_2(), 7).unwrap();
        let b = Network::init(spec_2_16_16_2(), 7).unwrap();
        for (pa, pb) in a.params().iter().zip(b.params()) {
            assert_eq!(pa.value(), pb.value());
        }
        let c = Network::init(spec_2_16_16_2(), 8).unwrap();
        assert_ne!(a.params()[0].value(), c.params()[0].value());
    }

    #[test]
    fn init_variance_matches_he_scaling() {
        let spec =
            MlpSpec::new(64, &[64], 4, 0, Activation::LeakyRelu, OutputTransform::Identity, 0.2)
                .unwrap();
        let net = Network::init(spec, 3).unwrap();
        let w = net.params()[0].value();
        let mean: f64 = w.iter().sum::<f64>() / w.len() as f64;
        let var: f64 = w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / w.len() as f64;
        let expect = 2.0 / 64.0;
        assert!((var - expect).abs() < 0.2 * expect, "var {var} vs {expect}");
        // Biases start at zero.
        assert!(net.params()[1].value().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn zero_width_layer_rejected() {
        assert!(MlpSpec::new(2, &[0], 2, 0, Activation::Tanh, OutputTransform::Identity, 0.2)
            .is_err());
    }

    #[test]
    fn encoder_outputs_unit_rows_for_any_parameters() {
        let spec =
            MlpSpec::new(3, &[8], 4, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2)
                .unwrap();
        for seed in 0..5 {
            let net = Network::init(spec.clone(), seed).unwrap();
            let x = crate::latent::sample_uniform_sphere(6, 3, seed).unwrap();
            let y = net.forward(x.points(), None).unwrap();
            for row in y.value().chunks(4) {
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn identity_network_is_exact() {
        let net = identity_network(3, OutputTransform::Identity).unwrap();
        let x = Tensor::from_vec(2, 3, vec![0.5, -1.0, 2.0, 0.0, 3.0, -0.25]).unwrap();
        assert_eq!(net.forward(&x, None).unwrap().value(), x.value());
    }

    #[test]
    fn forward_is_batch_order_equivariant() {
        let spec =
            MlpSpec::new(2, &[8], 3, 0, Activation::Tanh, OutputTransform::Identity, 0.2).unwrap();
        let net = Network::init(spec, 5).unwrap();
        let x = Tensor::from_vec(3, 2, vec![0.1, 0.2, -0.3, 0.4, 0.9, -0.8]).unwrap();
        let y = net.forward(&x, None).unwrap().value();
        // Swap rows 0 and 2.
        let xp = Tensor::from_vec(3, 2, vec![0.9, -0.8, -0.3, 0.4, 0.1, 0.2]).unwrap();
        let yp = net.forward(&xp, None).unwrap().value();
        assert_eq!(&y[0..3], &yp[6..9]);
        assert_eq!(&y[3..6], &yp[3..6]);
        assert_eq!(&y[6..9], &yp[0..3]);
    }

    #[test]
    fn condition_contract_is_enforced() {
        let cond_spec =
            MlpSpec::new(2, &[8], 2, 3, Activation::Tanh, OutputTransform::Identity, 0.2).unwrap();
        let net = Network::init(cond_spec, 1).unwrap();
        let x = Tensor::from_vec(2, 2, vec![0.0; 4]).unwrap();
        assert!(net.forward(&x, None).is_err());
        let cond = Tensor::from_vec(2, 3, vec![0.0; 6]).unwrap();
        assert!(net.forward(&x, Some(&cond)).is_ok());
        let bad_cond = Tensor::from_vec(2, 2, vec![0.0; 4]).unwrap();
        assert!(net.forward(&x, Some(&bad_cond)).is_err());

        let plain = Network::init(spec_2_16_16_2(), 1).unwrap();
        assert!(plain.forward(&x, Some(&cond)).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.age");
        let spec = MlpSpec::new(2, &[8], 4, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2)
            .unwrap();
        let net = Network::init(spec, 42).unwrap();
        let header = CheckpointHeader {
            role: "encoder".into(),
            prior: Prior::Sphere,
            latent_dim: 4,
            spec: net.spec.clone(),
        };
        save_checkpoint(&path, &net, &header).unwrap();
        let (loaded, header2) = load_checkpoint(&path).unwrap();
        assert_eq!(header2.role, "encoder");
        assert_eq!(header2.spec, net.spec);
        for (a, b) in net.params().iter().zip(loaded.params()) {
            let (va, vb) = (a.value(), b.value());
            assert_eq!(va.len(), vb.len());
            for (x, y) in va.iter().zip(&vb) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        // Saving the loaded network reproduces the file byte for byte.
        let path2 = dir.path().join("net2.age");
        save_checkpoint(&path2, &loaded, &header2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn corrupt_checkpoints_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.age");
        std::fs::write(&path, b"NOPE{}\n").unwrap();
        assert!(load_checkpoint(&path).is_err());

        let spec = MlpSpec::new(2, &[4], 2, 0, Activation::Tanh, OutputTransform::Identity, 0.2)
            .unwrap();
        let net = Network::init(spec, 0).unwrap();
        let header = CheckpointHeader {
            role: "generator".into(),
            prior: Prior::Sphere,
            latent_dim: 2,
            spec: net.spec.clone(),
        };
        let good = dir.path().join("good.age");
        save_checkpoint(&good, &net, &header).unwrap();
        let bytes = std::fs::read(&good).unwrap();
        let truncated = dir.path().join("trunc.age");
        std::fs::write(&truncated, &bytes[..bytes.len() - 4]).unwrap();
        assert!(load_checkpoint(&truncated).is_err());
    }
}
