use ridgenet::rng::SplitMix64;
use ridgenet::simbench::{
    eval_target, normalizer, rate_experiment, run_benchmark, summarize, uniform_inputs,
    BenchConfig, Method, RateConfig, TargetId, TargetSpec,
};

fn constant_only(targets: Vec<TargetId>, reps: usize) -> BenchConfig {
    let mut c = BenchConfig::full(7);
    c.targets = targets;
    c.methods = vec![Method::Constant];
    c.reps = reps;
    c.normalizer_reps = reps;
    c.eval_n = 2000;
    c
}

#[test]
fn constant_method_scales_to_about_one() {
    let report = run_benchmark(&constant_only(vec![TargetId::M1, TargetId::M3], 30)).unwrap();
    assert_eq!(report.failure_count(), 0);
    for c in &report.cells {
        let m = c.summary.unwrap().median;
        assert!((0.8..=1.2).contains(&m), "{:?} {}: {m}", c.target, c.noise);
    }
}

#[test]
fn methods_share_samples_and_reps_are_prefix_stable() {
    let mut small = constant_only(vec![TargetId::M2], 4);
    small.noises = vec![0.05];
    let mut wide = small.clone();
    wide.methods = vec![Method::Kernel, Method::Constant];
    wide.reps = 6;
    let a = run_benchmark(&small).unwrap();
    let b = run_benchmark(&wide).unwrap();
    let ca = a.cell(TargetId::M2, 0.05, Method::Constant).unwrap();
    let cb = b.cell(TargetId::M2, 0.05, Method::Constant).unwrap();
    assert_eq!(ca.scaled_errors[..], cb.scaled_errors[..4]);
}

#[test]
fn csv_is_identical_across_thread_counts() {
    let mut cfg = constant_only(vec![TargetId::M1], 5);
    cfg.methods = vec![Method::Constant, Method::Neighbor];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_benchmark(&cfg).unwrap().to_csv())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn normalizer_matches_variance_estimate() {
    // ε̄ ≈ Var m + median(χ²₁)·(Var m + (σλ)²)/n for the constant predictor
    let t = TargetSpec::new(TargetId::M4);
    let xs = uniform_inputs(200_000, t.dim, &mut SplitMix64::new(123_456));
    let v: Vec<f64> = xs.iter().map(|x| eval_target(&t, x)).collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / v.len() as f64;
    let (n, noise) = (100usize, 0.10);
    let sl = noise * t.lambda;
    let want = var + 0.4549 * (var + sl * sl) / n as f64;
    let got = normalizer(&t, noise, n, 4000, 201, 9).unwrap();
    assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
}

#[test]
fn targets_are_finite_on_awkward_points() {
    let m1 = TargetSpec::new(TargetId::M1);
    for x in [[0.0, 0.0], [-0.9, 0.2], [0.6, -0.2], [1.0, 1.0]] {
        assert!(eval_target(&m1, &x).is_finite(), "{x:?}");
    }
    let m3 = TargetSpec::new(TargetId::M3);
    assert!(eval_target(&m3, &[0.0; 5]).is_finite());
    let mut rng = SplitMix64::new(1);
    for id in TargetId::ALL {
        let t = TargetSpec::new(id);
        for x in uniform_inputs(2000, t.dim, &mut rng) {
            assert!(eval_target(&t, &x).is_finite());
        }
    }
}

#[test]
fn quartiles_interpolate() {
    let s = summarize(&[4.0, 1.0, 3.0, 2.0]);
    assert_eq!(s.median, 2.5);
    assert_eq!(s.iqr, 1.5);
    let s = summarize(&[5.0]);
    assert_eq!((s.median, s.iqr), (5.0, 0.0));
}

#[test]
fn constant_target_is_flagged_degenerate() {
    let cfg = RateConfig {
        n_grid: vec![20, 40, 80, 160],
        seeds_per_n: 2,
        trials: 3,
        eval_n: 200,
        constant_target: true,
        ..RateConfig::default()
    };
    let r = rate_experiment(&cfg).unwrap();
    assert!(r.degenerate);
    assert!(r.slope.is_none());
    assert!(r.points.iter().all(|p| p.mean_error < 1e-12));
}

#[test]
fn rate_grid_is_validated() {
    let cfg = RateConfig {
        n_grid: vec![50, 40, 80, 160],
        ..RateConfig::default()
    };
    assert!(rate_experiment(&cfg).is_err());
}
