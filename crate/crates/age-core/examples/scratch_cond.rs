// Conditional ring-8: per-label nearest-center accuracy and diversity.
use age_core::data::{make_gaussian_ring, ring_centers};
use age_core::game::{one_hot, train, GameConfig, ModelConfig};
use age_core::latent::sample_prior;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: usize = args[1].parse().unwrap();
    let iters: usize = args[2].parse().unwrap();
    let seed: u64 = args[3].parse().unwrap();
    let t0 = Instant::now();
    let ds = make_gaussian_ring(8, 2.0, 0.02, 8000, 5).unwrap();
    let cfg = GameConfig { latent_dim: m, ..GameConfig::default() };
    let model = ModelConfig { condition: true, ..ModelConfig::default() };
    let result = train(&ds, &model, &cfg, iters, seed).unwrap();
    let centers = ring_centers(8, 2.0);
    result.generator.set_trainable(false);

    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut min_acc: f64 = 1.0;
    let mut min_spread_ratio: f64 = f64::INFINITY;
    for label in 0..8 {
        let z = sample_prior(cfg.prior, 500, m, &mut rng).unwrap();
        let cond = one_hot(&vec![label; 500], 8).unwrap();
        let out = result.generator.forward(&z, Some(&cond)).unwrap().value();
        let mut hits = 0;
        let mut mean = [0.0f64; 2];
        for row in out.chunks(2) {
            let nearest = centers
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    let da: f64 = row.iter().zip(a.1).map(|(x, c)| (x - c) * (x - c)).sum();
                    let db: f64 = row.iter().zip(b.1).map(|(x, c)| (x - c) * (x - c)).sum();
                    da.total_cmp(&db)
                })
                .unwrap()
                .0;
            if nearest == label { hits += 1; }
            mean[0] += row[0] / 500.0;
            mean[1] += row[1] / 500.0;
        }
        let var: f64 = out
            .chunks(2)
            .map(|r| (r[0] - mean[0]).powi(2) + (r[1] - mean[1]).powi(2))
            .sum::<f64>() / 500.0;
        let spread = (var / 2.0).sqrt();
        min_acc = min_acc.min(hits as f64 / 500.0);
        min_spread_ratio = min_spread_ratio.min(spread / 0.02);
    }
    let tail: Vec<_> = result.metrics.iter().rev().take(100).collect();
    let lx: f64 = tail.iter().map(|r| r.loss_data).sum::<f64>() / tail.len() as f64;
    println!(
        "COND M={m} it={iters} seed={seed}: min_acc={min_acc:.3} min_spread_ratio={min_spread_ratio:.3} L_X={lx:.4} [{:.0}s]",
        t0.elapsed().as_secs_f64()
    );
}
