use dynwarp::baseline::fixed_window_znorm;
use dynwarp::engine::{Matcher, MatcherConfig, Mode};
use dynwarp::prefix_norm::{znormalize, PreparedQuery};
use dynwarp::eval::overlap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn run(m: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape: Vec<f64> = (0..m)
        .map(|i| {
            let x = i as f64 / (m - 1) as f64;
            (8.0 * std::f64::consts::TAU * x).sin() + 0.25 * (19.0 * std::f64::consts::TAU * x).sin()
        })
        .collect();
    let query = znormalize(&shape).unwrap();
    let mut stream: Vec<f64> = (0..600).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let start = stream.len();
    stream.extend_from_slice(&query);
    let end = stream.len() - 1;
    stream.extend((0..600).map(|_| rng.sample::<f64, _>(StandardNormal)));

    let q = PreparedQuery::new(query.clone()).unwrap();
    let cfg = MatcherConfig::new(Mode::TopK { k: 1 }).trace_window(8 * m);
    let mut dyn_matcher = Matcher::new(q, cfg).unwrap();
    for &s in &stream {
        dyn_matcher.step(s).unwrap();
    }
    dyn_matcher.finalize();
    let ev = dyn_matcher.top_events().first().unwrap().clone();
    assert!(overlap((ev.start, ev.end), (start, end)).unwrap() > 0.95);
    let dyn_values = dyn_matcher.reconstruct_normalized(&ev).unwrap();
    let baseline_values = fixed_window_znorm(&stream, m).unwrap();
    let cum: f64 = dyn_values.iter().enumerate()
        .map(|(i, &d)| { let b = baseline_values[ev.start + i]; (d - b) * (d - b) })
        .sum();
    (cum / dyn_values.len() as f64).sqrt()
}

fn main() {
    for m in [256usize, 384, 512] {
        for seed in [31u64, 7, 42, 99] {
            println!("m={m} seed={seed:3} rms={:.4}", run(m, seed));
        }
    }
}
