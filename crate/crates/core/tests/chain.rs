use critical_tree::chain::{
    hitting_replicates, sample_passage, sample_tn, trace_path, Caps, ExcursionSampler, ModelSpec, Variant,
};
use critical_tree::renewal::model_b_cdf;
use critical_tree::rng::{exp_variate, StreamKey};
use critical_tree::stats::{dkw_epsilon, ks_critical_value, ks_two_sample, Ecdf};

fn critical_a() -> ModelSpec {
    ModelSpec::critical(Variant::A)
}

#[test]
fn model_b_ecdf_inside_dkw_band() {
    let model = ModelSpec::critical(Variant::B);
    let caps = Caps { time: 50.0, events: 10_000_000 };
    let n = 100_000;
    let samples =
        hitting_replicates(&model, 1, 0, n, StreamKey::new(11), &caps, ExcursionSampler::Clocks).unwrap();
    let observed: Vec<f64> = samples.iter().filter(|s| !s.censored).map(|s| s.time).collect();
    let ecdf = Ecdf::with_censored(observed, samples.len());
    assert!((ecdf.eval(1.0) - 0.5).abs() <= dkw_epsilon(n as usize, 0.01));
    let grid: Vec<f64> = (0..=5000).map(|i| i as f64 * 0.01).collect();
    let sup = ecdf.sup_distance_on(&grid, model_b_cdf);
    assert!(sup <= dkw_epsilon(n as usize, 0.01), "{sup}");
}

#[test]
fn excursions_are_identically_distributed() {
    // H_1 and H_5 as drawn inside T_n: excursion i of replicate r uses key.child(r).child(i).
    let model = critical_a();
    let caps = Caps::default();
    let key = StreamKey::new(5);
    let draw = |r: u64, i: u64| {
        let mut rng = key.child(r).child(i).stream();
        let _x = exp_variate(&mut rng, 1.0);
        sample_passage(&model, 2, 1, &mut rng, &caps, ExcursionSampler::Levels)
            .unwrap()
            .time
    };
    let n = 10_000u64;
    let h1: Vec<f64> = (0..n).map(|r| draw(r, 0)).collect();
    let h5: Vec<f64> = (0..n).map(|r| draw(r, 4)).collect();
    let d = ks_two_sample(&h1, &h5);
    assert!(d < ks_critical_value(n as usize, n as usize, 0.01), "{d}");
}

#[test]
fn level_sampler_matches_clocks() {
    // Both samplers cap at the same time, so min(H, cap) has one law.
    let caps = Caps { time: 1e3, events: 100_000_000 };
    let n = 10_000u64;
    for (variant, start, target, lambda) in [(Variant::A, 2, 1, 1.0), (Variant::A, 4, 1, 0.7), (Variant::B, 1, 0, 1.0)] {
        let model = ModelSpec::new(variant, lambda).unwrap();
        let clocks =
            hitting_replicates(&model, start, target, n, StreamKey::new(1), &caps, ExcursionSampler::Clocks).unwrap();
        let levels =
            hitting_replicates(&model, start, target, n, StreamKey::new(2), &caps, ExcursionSampler::Levels).unwrap();
        let a: Vec<f64> = clocks.iter().map(|s| s.time).collect();
        let b: Vec<f64> = levels.iter().map(|s| s.time).collect();
        let d = ks_two_sample(&a, &b);
        assert!(d < ks_critical_value(n as usize, n as usize, 0.01), "{variant:?} {start}->{target}: {d}");
    }
}

#[test]
fn replicates_do_not_depend_on_worker_count() {
    let model = critical_a();
    let caps = Caps::default();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| hitting_replicates(&model, 2, 1, 2000, StreamKey::new(9), &caps, ExcursionSampler::Clocks))
            .unwrap()
    };
    let one = run(1);
    let many = run(4);
    assert!(one.iter().zip(&many).all(|(a, b)| a.time.to_bits() == b.time.to_bits() && a.events == b.events));
}

#[test]
fn trajectories_respect_the_state_space() {
    let caps = Caps { time: 1e4, events: 100_000 };
    for variant in [Variant::A, Variant::B] {
        let model = ModelSpec::critical(variant);
        let target = variant.floor();
        for r in 0..200 {
            let mut rng = StreamKey::new(3).child(r).stream();
            let path = trace_path(&model, 3, target, &mut rng, &caps).unwrap();
            assert!(path.times.windows(2).all(|w| w[1] > w[0]));
            assert!(path.states.windows(2).all(|w| w[0].abs_diff(w[1]) == 1));
            assert!(path.states.iter().all(|&s| s >= target));
        }
    }
}

#[test]
fn sojourn_part_of_tn_has_unit_mean() {
    let model = critical_a();
    let caps = Caps { time: 1.0, events: 1 };
    let n = 100_000u64;
    let key = StreamKey::new(21);
    // Caps this tight censor the hitting part immediately; the sojourn is drawn first.
    let mean = (0..n)
        .map(|r| sample_tn(&model, 1, key.child(r), &caps, ExcursionSampler::Levels).unwrap().sojourn_time)
        .sum::<f64>()
        / n as f64;
    assert!((mean - 1.0).abs() < 0.01, "{mean}");
}
