// Criterion-4 dry run: frozen random encoder, 500 generator-only steps.
use age_core::divergence::{self, fit_diag_gaussian_stats, parametric_kl_estimate};
use age_core::game::{generator_objective, GameConfig};
use age_core::latent::{sample_prior, sample_uniform_sphere};
use age_core::nets::{Activation, MlpSpec, Network, OutputTransform};
use age_core::optim::Adam;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let cfg = GameConfig { latent_dim: 2, lambda: 0.0, lr: 2e-5, ..GameConfig::default() };
    let m = cfg.latent_dim;
    for seed in [11u64, 12, 13] {
        let enc = Network::init(MlpSpec::new(2, &[64,64], m, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2).unwrap(), seed).unwrap();
        let gen = Network::init(MlpSpec::new(m, &[64,64], 2, 0, Activation::LeakyRelu, OutputTransform::Identity, 0.2).unwrap(), seed + 100).unwrap();
        enc.set_trainable(false);
        let mut adam = Adam::new(gen.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eval_z = sample_uniform_sphere(1024, m, 999).unwrap();
        let floor = divergence::prior_floor(cfg.prior, m);
        let mut trace = Vec::new();
        for _ in 0..500 {
            gen.set_trainable(false);
            let codes = enc.forward(&gen.forward(eval_z.points(), None).unwrap(), None).unwrap();
            trace.push(parametric_kl_estimate(&codes).unwrap().value - floor);
            gen.set_trainable(true);
            gen.zero_grads();
            let z = sample_prior(cfg.prior, cfg.batch_size, m, &mut rng).unwrap();
            let loss = generator_objective(&gen, &enc, &z, None, &cfg).unwrap();
            loss.backward().unwrap();
            adam.step(gen.params()).unwrap();
        }
        let means: Vec<f64> = trace.chunks(50).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
        let monotone = means.windows(2).all(|w| w[1] < w[0]);
        gen.set_trainable(false);
        let codes = enc.forward(&gen.forward(eval_z.points(), None).unwrap(), None).unwrap();
        let (_, s) = fit_diag_gaussian_stats(&codes).unwrap();
        let min_s = s.iter().cloned().fold(f64::INFINITY, f64::min);
        println!("seed {seed}: monotone={monotone} min_s={min_s:.3} means={:?}", means.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>());
    }
}
