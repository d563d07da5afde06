// Can a lone encoder spread the ring's 8 atoms over the sphere (div_real -> 0)?
use age_core::divergence::{self, parametric_divergence_graph, DivergenceMethod};
use age_core::nets::{Activation, MlpSpec, Network, OutputTransform};
use age_core::optim::Adam;
use age_core::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let m: usize = args[1].parse().unwrap();
    let beta1: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let ds = age_core::data::make_gaussian_ring(8, 2.0, 0.02, 2048, 5).unwrap();
    let data = ds.samples.value();
    let enc = Network::init(
        MlpSpec::new(2, &[64, 64], m, 0, Activation::LeakyRelu, OutputTransform::SphereProjection, 0.2).unwrap(),
        11,
    ).unwrap();
    let mut adam = Adam::new(enc.params(), 2e-4, beta1, 0.999, 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let floor = divergence::prior_floor(age_core::latent::Prior::Sphere, m);
    for step in 0..4001 {
        enc.zero_grads();
        let idx: Vec<usize> = (0..64).map(|_| rng.gen_range(0..2048)).collect();
        let mut xb = Vec::with_capacity(128);
        for &i in &idx { xb.extend_from_slice(&data[i * 2..i * 2 + 2]); }
        let x = Tensor::from_vec(64, 2, xb).unwrap();
        let codes = enc.forward(&x, None).unwrap();
        let loss = parametric_divergence_graph(&codes, DivergenceMethod::ParametricKl).unwrap();
        loss.backward().unwrap();
        adam.step(enc.params()).unwrap();
        if step % 500 == 0 {
            enc.set_trainable(false);
            let full = Tensor::from_vec(2048, 2, data.clone()).unwrap();
            let codes = enc.forward(&full, None).unwrap();
            let dr = divergence::parametric_kl_estimate(&codes).unwrap().value - floor;
            println!("M={m} b1={beta1} step {step}: div_real={dr:.4}");
            enc.set_trainable(true);
        }
    }
}
