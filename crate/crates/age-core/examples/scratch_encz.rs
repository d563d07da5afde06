// Probe: encoder step with a larger prior batch than the generator's.
use age_core::data::{make_gaussian_ring, mode_coverage};
use age_core::divergence;
use age_core::game::{encoder_objective, generator_objective, one_hot as _, GameConfig};
use age_core::latent::sample_prior;
use age_core::nets::{Activation, MlpSpec, Network, OutputTransform};
use age_core::optim::Adam;
use age_core::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let enc_zbatch: usize = args[1].parse().unwrap();
    let iters: usize = args[2].parse().unwrap();
    let seed: u64 = args[3].parse().unwrap();

    let ds = make_gaussian_ring(8, 2.0, 0.02, 8000, 5).unwrap();
    let data = ds.samples.value();
    let cfg = GameConfig { latent_dim: 2, ..GameConfig::default() };
    let enc = Network::init(MlpSpec::new(2, &[64, 64], 2, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2).unwrap(), seed.wrapping_add(1)).unwrap();
    let gen = Network::init(MlpSpec::new(2, &[64, 64], 2, 0, Activation::LeakyRelu, OutputTransform::Identity, 0.2).unwrap(), seed.wrapping_add(2)).unwrap();
    let mut adam_e = Adam::new(enc.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut adam_g = Adam::new(gen.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for it in 0..iters {
        // encoder step with the large z batch
        gen.set_trainable(false);
        enc.set_trainable(true);
        enc.zero_grads();
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| rng.gen_range(0..8000)).collect();
        let mut xb = Vec::new();
        for &i in &idx { xb.extend_from_slice(&data[i * 2..i * 2 + 2]); }
        let x = Tensor::from_vec(cfg.batch_size, 2, xb).unwrap();
        let z = sample_prior(cfg.prior, enc_zbatch, cfg.latent_dim, &mut rng).unwrap();
        let score = encoder_objective(&gen, &enc, &x, None, &z, None, &cfg).unwrap();
        score.scalar_mul(-1.0).backward().unwrap();
        adam_e.step(enc.params()).unwrap();

        enc.set_trainable(false);
        gen.set_trainable(true);
        for _ in 0..2 {
            gen.zero_grads();
            let z = sample_prior(cfg.prior, cfg.batch_size, cfg.latent_dim, &mut rng).unwrap();
            let loss = generator_objective(&gen, &enc, &z, None, &cfg).unwrap();
            loss.backward().unwrap();
            adam_g.step(gen.params()).unwrap();
        }
        if it % 2000 == 0 || it == iters - 1 {
            gen.set_trainable(false);
            enc.set_trainable(false);
            let z_eval = sample_prior(cfg.prior, 1024, 2, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let codes = enc.forward(&gen.forward(&z_eval, None).unwrap(), None).unwrap();
            let df = divergence::parametric_kl_estimate(&codes).unwrap().value - divergence::prior_floor(cfg.prior, 2);
            let lz = z_eval.sub(&codes).unwrap().square().sum().item() / 1024.0;
            let samples = gen.forward(&z_eval, None).unwrap();
            let centers = ds.meta.mode_centers.clone().unwrap();
            let (cov, hq) = mode_coverage(&samples, &centers, 0.02, 5);
            println!("encz={enc_zbatch} it {it}: df={df:.4} L_Z={lz:.4} cov={cov}/8 hq={hq:.3}");
        }
    }
}
