use age_core::data::make_point_mass;
use age_core::game::{train, GameConfig, ModelConfig};
use age_core::latent::sample_prior;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run(latent_dim: usize, lambda: f64, mu: f64, iters: usize) {
    let x0 = [1.0, -0.5];
    let ds = make_point_mass(&x0, 256).unwrap();
    let cfg = GameConfig { batch_size: 32, latent_dim, lambda, mu, ..GameConfig::default() };
    let model = ModelConfig::default();
    let result = train(&ds, &model, &cfg, iters, 1).unwrap();
    let last = result.metrics.last().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let z = sample_prior(cfg.prior, 512, cfg.latent_dim, &mut rng).unwrap();
    result.generator.set_trainable(false);
    let out = result.generator.forward(&z, None).unwrap().value();
    let mean_l1: f64 = out.chunks(2).map(|r| (r[0] - x0[0]).abs() + (r[1] - x0[1]).abs()).sum::<f64>() / 512.0;
    println!("M={latent_dim} lambda={lambda} mu={mu} iters={iters}: sample L1={mean_l1:.4} | div_fake {:-8.3} L_Z {:-7.4} L_X {:-7.4}", last.div_fake, last.loss_latent, last.loss_data);
}

fn main() {
    for (m, l) in [(8usize, 0.0f64), (3, 0.0), (3, 1.0), (3, 100.0), (3, 1000.0), (2, 1000.0), (2, 100.0)] {
        run(m, l, 10.0, 2000);
    }
}
