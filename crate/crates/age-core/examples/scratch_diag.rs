use age_core::divergence;
use age_core::game::{encoder_objective, generator_objective, GameConfig};
use age_core::latent::{sample_prior, Prior};
use age_core::nets::{Activation, MlpSpec, Network, OutputTransform};
use age_core::optim::Adam;
use age_core::tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fd_check_encoder() {
    // Tiny nets, finite-difference the encoder objective w.r.t. every encoder param.
    let cfg = GameConfig { latent_dim: 2, batch_size: 6, lambda: 3.0, mu: 2.0, ..GameConfig::default() };
    let enc_spec = MlpSpec::new(2, &[5], 2, 0, Activation::Tanh, OutputTransform::SphereProjection, 0.2).unwrap();
    let gen_spec = MlpSpec::new(2, &[5], 2, 0, Activation::Tanh, OutputTransform::Identity, 0.2).unwrap();
    let enc = Network::init(enc_spec, 1).unwrap();
    let gen = Network::init(gen_spec, 2).unwrap();
    gen.set_trainable(false);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = sample_prior(Prior::Sphere, 6, 2, &mut rng).unwrap();
    let x = Tensor::from_vec(6, 2, (0..12).map(|i| (i as f64 * 0.37).sin() * 1.5).collect()).unwrap();

    enc.zero_grads();
    let score = encoder_objective(&gen, &enc, &x, None, &z, None, &cfg).unwrap();
    score.backward().unwrap();

    let mut worst: f64 = 0.0;
    for p in enc.params() {
        let grad = p.grad().unwrap();
        let base = p.value();
        for i in 0..base.len() {
            let h = 1e-5;
            let mut plus = base.clone(); plus[i] += h;
            let mut minus = base.clone(); minus[i] -= h;
            p.set_data(&plus).unwrap();
            let fp = encoder_objective(&gen, &enc, &x, None, &z, None, &cfg).unwrap().item();
            p.set_data(&minus).unwrap();
            let fm = encoder_objective(&gen, &enc, &x, None, &z, None, &cfg).unwrap().item();
            p.set_data(&base).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let denom = grad[i].abs().max(fd.abs()).max(1e-7);
            let rel = (grad[i] - fd).abs() / denom;
            if rel > worst { worst = rel; }
        }
    }
    println!("encoder objective fd worst rel err: {worst:.3e}");
}

fn encoder_alone() {
    // Frozen random generator; does pure encoder ascent push div_fake up?
    let cfg = GameConfig { latent_dim: 2, batch_size: 64, lambda: 10.0, mu: 10.0, ..GameConfig::default() };
    let enc_spec = MlpSpec::new(2, &[64, 64], 2, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2).unwrap();
    let gen_spec = MlpSpec::new(2, &[64, 64], 2, 0, Activation::LeakyRelu, OutputTransform::Identity, 0.2).unwrap();
    let enc = Network::init(enc_spec, 11).unwrap();
    let gen = Network::init(gen_spec, 12).unwrap();
    gen.set_trainable(false);
    let ds = age_core::data::make_gaussian_ring(8, 2.0, 0.02, 2048, 5).unwrap();
    let data = ds.samples.value();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut adam = Adam::new(enc.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    for step in 0..2001 {
        enc.zero_grads();
        let z = sample_prior(cfg.prior, cfg.batch_size, cfg.latent_dim, &mut rng).unwrap();
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| rand::Rng::gen_range(&mut rng, 0..2048)).collect();
        let mut xb = Vec::with_capacity(cfg.batch_size * 2);
        for &i in &idx { xb.extend_from_slice(&data[i * 2..i * 2 + 2]); }
        let x = Tensor::from_vec(cfg.batch_size, 2, xb).unwrap();
        let score = encoder_objective(&gen, &enc, &x, None, &z, None, &cfg).unwrap();
        score.scalar_mul(-1.0).backward().unwrap();
        adam.step(enc.params()).unwrap();
        if step % 400 == 0 {
            enc.set_trainable(false);
            let z_eval = sample_prior(cfg.prior, 1024, cfg.latent_dim, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let codes = enc.forward(&gen.forward(&z_eval, None).unwrap(), None).unwrap();
            let est = divergence::parametric_kl_estimate(&codes).unwrap();
            let div_fake = est.value - divergence::prior_floor(cfg.prior, 2);
            println!("  enc-only step {step}: score={:.4} div_fake={div_fake:.4}", score.item());
            enc.set_trainable(true);
        }
    }
}

fn generator_alone() {
    // Frozen random encoder; 500 generator steps should drive div_fake down.
    let cfg = GameConfig { latent_dim: 2, batch_size: 64, ..GameConfig::default() };
    let enc_spec = MlpSpec::new(2, &[64, 64], 2, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2).unwrap();
    let gen_spec = MlpSpec::new(2, &[64, 64], 2, 0, Activation::LeakyRelu, OutputTransform::Identity, 0.2).unwrap();
    let enc = Network::init(enc_spec, 21).unwrap();
    let gen = Network::init(gen_spec, 22).unwrap();
    enc.set_trainable(false);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut adam = Adam::new(gen.params(), cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon);
    for step in 0..501 {
        gen.zero_grads();
        let z = sample_prior(cfg.prior, cfg.batch_size, cfg.latent_dim, &mut rng).unwrap();
        let loss = generator_objective(&gen, &enc, &z, None, &cfg).unwrap();
        loss.backward().unwrap();
        adam.step(gen.params()).unwrap();
        if step % 100 == 0 {
            gen.set_trainable(false);
            let z_eval = sample_prior(cfg.prior, 1024, cfg.latent_dim, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            let codes = enc.forward(&gen.forward(&z_eval, None).unwrap(), None).unwrap();
            let est = divergence::parametric_kl_estimate(&codes).unwrap();
            let div_fake = est.value - divergence::prior_floor(cfg.prior, 2);
            let (_, s) = divergence::fit_diag_gaussian_stats(&codes).unwrap();
            println!("  gen-only step {step}: loss={:.4} div_fake={div_fake:.4} min_s={:.3}", loss.item(), s.iter().cloned().fold(f64::INFINITY, f64::min));
            gen.set_trainable(true);
        }
    }
}

fn main() {
    fd_check_encoder();
    generator_alone();
    encoder_alone();
}
