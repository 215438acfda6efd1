use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use tda_core::dataset::normalize;
use tda_core::seed::{derive_seed, rng_from};
use tda_core::transcoder::{crossover, ds_diff, init_transcoder, train, TranscoderConfig};
use tda_core::TabularDataset;

/// prv: rank-3 signal in 10 features, light noise.
/// pub: the same 3 latents plus 5 of its own, 20 features, heavier noise.
fn contrasting_pair(n: usize, seed: u64) -> (TabularDataset, TabularDataset) {
    let shared = 3usize;
    let own = 5usize;
    let (d_a, d_b) = (10usize, 20usize);
    let (noise_a, noise_b) = (0.3f64, 0.6f64);
    let mut mix_rng = rng_from(derive_seed(seed, "mix"));
    let mut mk_mix = |rows: usize, cols: usize, scale: f64| {
        Array2::from_shape_fn((rows, cols), |_| {
            let g: f64 = mix_rng.sample(StandardNormal);
            g * scale
        })
    };
    let mix_a = mk_mix(shared, d_a, 1.0 / (shared as f64).sqrt());
    let mix_b_shared = mk_mix(shared, d_b, 1.0 / ((shared + own) as f64).sqrt());
    let mix_b_own = mk_mix(own, d_b, 1.0 / ((shared + own) as f64).sqrt());
    let mut rng = rng_from(derive_seed(seed, "samples"));
    let mut xa = Array2::zeros((n, d_a));
    let mut xb = Array2::zeros((n, d_b));
    for i in 0..n {
        let z: Vec<f64> = (0..shared).map(|_| rng.sample(StandardNormal)).collect();
        let w: Vec<f64> = (0..own).map(|_| rng.sample(StandardNormal)).collect();
        for j in 0..d_a {
            let s: f64 = (0..shared).map(|r| z[r] * mix_a[[r, j]]).sum();
            let e: f64 = rng.sample(StandardNormal);
            xa[[i, j]] = s + noise_a * e;
        }
        for j in 0..d_b {
            let s: f64 = (0..shared).map(|r| z[r] * mix_b_shared[[r, j]]).sum::<f64>()
                + (0..own).map(|r| w[r] * mix_b_own[[r, j]]).sum::<f64>();
            let e: f64 = rng.sample(StandardNormal);
            xb[[i, j]] = s + noise_b * e;
        }
    }
    (
        TabularDataset::new("prv", xa, None, None).unwrap(),
        TabularDataset::new("pub", xb, None, None).unwrap(),
    )
}

#[test]
#[ignore]
fn criterion6_style_success_rate() {
    let mut wins = 0;
    for seed in 0..10u64 {
        let (prv, pub_) = contrasting_pair(500, seed);
        let (_, prv_n) = normalize(&prv).unwrap();
        let (_, pub_n) = normalize(&pub_).unwrap();
        let cfg = TranscoderConfig {
            epochs: 200,
            seed,
            ..TranscoderConfig::default()
        };
        let mut model = init_transcoder(&cfg, 10, 20, seed).unwrap();
        train(&mut model, &prv_n, &pub_n).unwrap();
        let co = crossover(&model, &prv_n.x).unwrap();
        let co_ds = TabularDataset::new("co", co, None, None).unwrap();
        let d_pub = ds_diff(&prv_n, &pub_n).unwrap();
        let d_co = ds_diff(&prv_n, &co_ds).unwrap();
        let ok = d_pub > d_co;
        wins += ok as usize;
        println!("seed={seed}: ds_diff(prv,pub)={d_pub:.4} ds_diff(prv,co)={d_co:.4} success={ok}");
    }
    println!("successes: {wins}/10");
}
