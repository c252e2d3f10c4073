use ridgenet::baselines::{
    constant_avg, fit_baseline, knn, nadaraya_watson, rbf_interpolant, select_by_split,
    split_indices, Baseline, BaselineModel, Predictor,
};
use ridgenet::data::Dataset;
use ridgenet::rng::SplitMix64;

fn cloud(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = SplitMix64::new(seed);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
        .collect();
    let y = x.iter().map(|v| v[0] + 0.1 * rng.normal()).collect();
    Dataset::new(x, y).unwrap()
}

#[test]
fn full_neighborhood_equals_constant() {
    let data = cloud(37, 3, 1);
    let c = constant_avg(&data).unwrap();
    let k = knn(&data, 37).unwrap();
    for x in cloud(10, 3, 2).x() {
        assert_eq!(
            k.predict(x).unwrap().to_bits(),
            c.predict(x).unwrap().to_bits()
        );
    }
}

#[test]
fn neighbor_ties_prefer_lower_index() {
    let data = Dataset::new(
        vec![vec![1.0], vec![-1.0], vec![1.0]],
        vec![10.0, 20.0, 30.0],
    )
    .unwrap();
    assert_eq!(knn(&data, 1).unwrap().predict(&[0.0]).unwrap(), 10.0);
    assert_eq!(knn(&data, 2).unwrap().predict(&[0.0]).unwrap(), 15.0);
}

#[test]
fn splits_partition_every_small_sample() {
    for n in 2..60 {
        for seed in 0..5 {
            let s = split_indices(n, seed);
            let want = ((0.8 * n as f64).round() as usize).clamp(1, n - 1);
            assert_eq!(s.learn.len(), want);
            let mut all: Vec<usize> = s.learn.iter().chain(&s.test).copied().collect();
            assert!(s.learn.windows(2).all(|w| w[0] < w[1]));
            assert!(s.test.windows(2).all(|w| w[0] < w[1]));
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            assert_eq!(s, split_indices(n, seed));
        }
    }
}

#[test]
fn selection_matches_manual_loop() {
    let data = cloud(60, 2, 3);
    let grid = [0.05, 0.2, 0.5, 1.0, 3.0];
    let sel = select_by_split(&data, &grid, 11, |d, &h| nadaraya_watson(d, h)).unwrap();

    let s = split_indices(60, 11);
    let learn = data.subset(&s.learn);
    let risks: Vec<f64> = grid
        .iter()
        .map(|&h| {
            let m = nadaraya_watson(&learn, h).unwrap();
            s.test
                .iter()
                .map(|&i| (m.predict(&data.x()[i]).unwrap() - data.y()[i]).powi(2))
                .sum::<f64>()
                / s.test.len() as f64
        })
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| risks[a].total_cmp(&risks[b]))
        .unwrap();
    assert_eq!(sel.index, best);
    assert_eq!(sel.parameter, grid[best]);
    for (got, want) in sel.test_risks.iter().zip(&risks) {
        assert!((got.unwrap() - want).abs() <= 1e-12 * want.max(1.0));
    }
}

#[test]
fn interpolant_reproduces_training_values() {
    let data = cloud(40, 2, 4);
    let m = rbf_interpolant(&data, 0.5).unwrap();
    for (x, y) in data.x().iter().zip(data.y()) {
        assert!((m.predict(x).unwrap() - y).abs() < 1e-6);
    }
}

#[test]
fn narrow_window_returns_own_label() {
    let data = Dataset::new(vec![vec![0.0], vec![1.0]], vec![3.0, 7.0]).unwrap();
    let m = nadaraya_watson(&data, 0.1).unwrap();
    assert_eq!(m.predict(&[1.0]).unwrap(), 7.0);
    // nobody in the window: global mean
    assert_eq!(m.predict(&[0.5]).unwrap(), 5.0);
}

#[test]
fn tuned_baselines_beat_constant_on_linear_signal() {
    let data = cloud(150, 2, 5);
    let test = cloud(500, 2, 6);
    let mse = |m: &BaselineModel| {
        let p = m.predict_many(test.x()).unwrap();
        test.x()
            .iter()
            .zip(&p)
            .map(|(x, p)| (p - x[0]).powi(2))
            .sum::<f64>()
            / 500.0
    };
    let (c, none) = fit_baseline(Baseline::Constant, &data, 7).unwrap();
    assert!(none.is_none());
    let base = mse(&c);
    for method in [Baseline::Kernel, Baseline::Neighbor, Baseline::Rbf] {
        let (m, p) = fit_baseline(method, &data, 7).unwrap();
        assert!(p.is_some());
        let e = mse(&m);
        assert!(e < 0.2 * base, "{method:?}: {e} vs {base}");
    }
}
