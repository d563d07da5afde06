use age_core::data::{make_gaussian_ring, mode_coverage};
use age_core::game::{train, GameConfig, ModelConfig};
use age_core::latent::sample_prior;
use age_core::nets::Activation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: usize = args[1].parse().unwrap();
    let iters: usize = args[2].parse().unwrap();
    let seed: u64 = args[3].parse().unwrap();
    let lambda: f64 = args[4].parse().unwrap();
    let mu: f64 = args[5].parse().unwrap();
    let batch: usize = args[6].parse().unwrap();
    let beta1: f64 = args[7].parse().unwrap();
    let width: usize = args[8].parse().unwrap();
    let act = if args.get(9).map(|s| s.as_str()) == Some("tanh") { Activation::Tanh } else { Activation::LeakyRelu };

    let t0 = Instant::now();
    let ds = make_gaussian_ring(8, 2.0, 0.02, 8000, 5).unwrap();
    let cfg = GameConfig { latent_dim: m, lambda, mu, batch_size: batch, beta1, ..GameConfig::default() };
    let model = ModelConfig {
        encoder_hidden: vec![width, width],
        generator_hidden: vec![width, width],
        activation: act,
        ..ModelConfig::default()
    };
    let result = train(&ds, &model, &cfg, iters, seed).unwrap();
    let tail: Vec<_> = result.metrics.iter().rev().take(100).collect();
    let dr: f64 = tail.iter().map(|r| r.div_real).sum::<f64>() / tail.len() as f64;
    let df: f64 = tail.iter().map(|r| r.div_fake).sum::<f64>() / tail.len() as f64;
    let lz: f64 = tail.iter().map(|r| r.loss_latent).sum::<f64>() / tail.len() as f64;
    let lx: f64 = tail.iter().map(|r| r.loss_data).sum::<f64>() / tail.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let z = sample_prior(cfg.prior, 4000, cfg.latent_dim, &mut rng).unwrap();
    result.generator.set_trainable(false);
    let samples = result.generator.forward(&z, None).unwrap();
    let centers = ds.meta.mode_centers.clone().unwrap();
    let (covered, hq) = mode_coverage(&samples, &centers, 0.02, 20);
    println!(
        "M={m} s={seed} it={iters} lam={lambda} mu={mu} b={batch} b1={beta1} w={width} {act:?}: cov={covered}/8 hq={hq:.3} dr={dr:.4} df={df:.4} L_Z={lz:.4} L_X={lx:.4} [{:.0}s]",
        t0.elapsed().as_secs_f64()
    );
}
