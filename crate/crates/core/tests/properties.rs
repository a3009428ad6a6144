use proptest::prelude::*;

use tsoc::clm::LogisticAtModel;
use tsoc::data::{parse_ts_file, serialize_ts, stratified_resample, OrdinalDataset, TimeSeriesInstance};
use tsoc::head::{build_thresholds, clm_forward, qwk_loss};
use tsoc::metrics::{ccr, mae, one_off, qwk_with_classes};
use tsoc::stats::{build_cliques, mcm, pairwise_tests, wilcoxon_signed_rank, ScoreTable, EXACT_LIMIT};
use tsoc::transform::{convolve, generate_rocket_kernels, minirocket_kernel_indices, ppv, Kernel};
use tsoc::Matrix;

fn dataset(values: Vec<Vec<f64>>, labels: Vec<usize>, q: usize) -> OrdinalDataset {
    let instances = values.into_iter().map(|v| TimeSeriesInstance::univariate(v).unwrap()).collect();
    OrdinalDataset::new("Prop", instances, labels, (1..=q).map(|c| format!("c{c}")).collect()).unwrap()
}

fn labelled_series(max_n: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, usize)> {
    (2usize..5, 1usize..12, 4..max_n).prop_flat_map(|(q, t, n)| {
        (
            proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, t), n),
            proptest::collection::vec(1..=q, n),
            Just(q),
        )
    })
}

fn label_pairs() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, usize)> {
    (2usize..7, 1usize..40).prop_flat_map(|(q, n)| {
        (proptest::collection::vec(1..=q, n), proptest::collection::vec(1..=q, n), Just(q))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ts_round_trip((values, labels, q) in labelled_series(20)) {
        let d = dataset(values, labels, q);
        let back = parse_ts_file(&serialize_ts(&d).unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn resample_keeps_class_counts((values, labels, q) in labelled_series(30), split in 1usize..20, id in 0u64..1000) {
        let n = labels.len();
        let cut = split.min(n - 1).max(1);
        let mut all = labels.clone();
        // every class in both parts so the layouts agree
        for (i, l) in all.iter_mut().take(q).enumerate() {
            *l = i + 1;
        }
        let train = dataset(values[..cut].to_vec(), all[..cut].to_vec(), q);
        let test = dataset(values[cut..].to_vec(), all[cut..].to_vec(), q);
        let s = stratified_resample(&train, &test, id).unwrap();
        prop_assert_eq!(s.train.class_counts(), train.class_counts());
        prop_assert_eq!(s.train.len() + s.test.len(), n);
    }

    #[test]
    fn ppv_bounded_and_antisymmetric(z in proptest::collection::vec(-5.0f64..5.0, 1..80)) {
        let p = ppv(&z).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if z.iter().all(|v| *v != 0.0) {
            let neg: Vec<f64> = z.iter().map(|v| -v).collect();
            prop_assert!((ppv(&neg).unwrap() - (1.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn rocket_dilations_within_law(t in 12usize..300, seed in 0u64..1000) {
        for k in generate_rocket_kernels(t, 1, 50, seed, true).unwrap() {
            let bound = 2f64.powf(((t - 1) as f64 / (k.len() - 1) as f64).log2());
            prop_assert!(k.dilation >= 1 && k.dilation as f64 <= bound + 1e-9);
        }
    }

    #[test]
    fn minirocket_kernels_ignore_offsets(s in proptest::collection::vec(-10.0f64..10.0, 20..60), c in -100.0f64..100.0, d in 1usize..3) {
        let shifted: Vec<f64> = s.iter().map(|v| v + c).collect();
        for idx in minirocket_kernel_indices() {
            let mut weights = vec![-1.0; 9];
            for i in idx {
                weights[i] = 2.0;
            }
            let k = Kernel { weights, dilation: d, padding: 0, bias: 0.0, channels: vec![0] };
            let (a, b) = (convolve(&s, &k).unwrap(), convolve(&shifted, &k).unwrap());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9 * (1.0 + c.abs()));
            }
        }
    }

    #[test]
    fn logistic_at_monotone_and_proportional_odds(
        w in proptest::collection::vec(-2.0f64..2.0, 1..5),
        mut theta in proptest::collection::vec(-3.0f64..3.0, 1..5),
        x1 in proptest::collection::vec(-1.0f64..1.0, 5),
        x2 in proptest::collection::vec(-1.0f64..1.0, 5),
    ) {
        theta.sort_by(f64::total_cmp);
        let f = w.len();
        let m = LogisticAtModel::new(w.clone(), theta.clone(), 1.0);
        let x = Matrix::from_rows(&[x1[..f].to_vec(), x2[..f].to_vec()]).unwrap();
        let latent = m.decision_function(&x).unwrap();
        let classes = m.predict(&x).unwrap();
        if latent[0] <= latent[1] {
            prop_assert!(classes[0] <= classes[1]);
        }
        let cum = m.predict_cumulative(&x).unwrap();
        let logit = |p: f64| (p / (1.0 - p)).ln();
        for q in 0..theta.len() {
            let ratio = logit(cum.get(1, q)) - logit(cum.get(0, q));
            prop_assert!((ratio - (latent[0] - latent[1])).abs() < 1e-10, "{} vs {}", ratio, latent[0] - latent[1]);
        }
        let p = m.predict_proba(&x).unwrap();
        for row in p.iter_rows() {
            prop_assert!(row.iter().all(|v| *v >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn head_thresholds_and_simplex(theta1 in -10.0f64..10.0, alphas in proptest::collection::vec(-4.0f64..4.0, 0..8), latent in -80.0f64..80.0) {
        let t = build_thresholds(theta1, &alphas);
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1]));
        let p = clm_forward(latent, &t);
        prop_assert_eq!(p.len(), alphas.len() + 2);
        prop_assert!(p.iter().all(|v| *v >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_hot_qwk_loss_is_zero((y, _, q) in label_pairs()) {
        prop_assume!(y.iter().any(|&l| l != y[0]));
        let mut p = Matrix::zeros(y.len(), q);
        for (i, &l) in y.iter().enumerate() {
            p.set(i, l - 1, 1.0);
        }
        prop_assert_eq!(qwk_loss(&p, &y).unwrap(), 0.0);
    }

    #[test]
    fn metrics_ignore_sample_order((y, p, q) in label_pairs(), seed in 0u64..1000) {
        let n = y.len();
        let perm: Vec<usize> = (0..n).map(|i| (i * (2 * seed as usize + 1) + seed as usize) % n).collect();
        // an odd multiplier is only a bijection modulo n when coprime; fall back to reversal
        let perm = if { let mut s = perm.clone(); s.sort_unstable(); s.dedup(); s.len() == n } { perm } else { (0..n).rev().collect() };
        let (yp, pp): (Vec<usize>, Vec<usize>) = perm.iter().map(|&i| (y[i], p[i])).unzip();
        prop_assert_eq!(ccr(&y, &p).unwrap(), ccr(&yp, &pp).unwrap());
        prop_assert!((mae(&y, &p).unwrap() - mae(&yp, &pp).unwrap()).abs() < 1e-12);
        prop_assert_eq!(one_off(&y, &p).unwrap(), one_off(&yp, &pp).unwrap());
        match (qwk_with_classes(&y, &p, q), qwk_with_classes(&yp, &pp, q)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a.is_err(), b.is_err()),
        }
    }

    #[test]
    fn wilcoxon_symmetric_and_bounded(a in proptest::collection::vec(0u8..6, 1..30), b in proptest::collection::vec(0u8..6, 1..30)) {
        let n = a.len().min(b.len());
        let a: Vec<f64> = a[..n].iter().map(|&v| f64::from(v)).collect();
        let b: Vec<f64> = b[..n].iter().map(|&v| f64::from(v)).collect();
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
        prop_assert_eq!(ab.exact, ab.n <= EXACT_LIMIT);
    }

    #[test]
    fn comparison_invariants(values in proptest::collection::vec(proptest::collection::vec(0u8..20, 12), 2..5), higher in any::<bool>()) {
        let m = values.len();
        let table = ScoreTable::new(
            (0..m).map(|i| format!("m{i}")).collect(),
            (0..12).map(|i| format!("d{i}")).collect(),
            values.iter().map(|r| r.iter().map(|&v| Some(f64::from(v) / 20.0)).collect()).collect(),
            higher,
        ).unwrap();
        for cell in mcm(&table).unwrap() {
            prop_assert_eq!(cell.wins + cell.ties + cell.losses, 12);
            prop_assert!((0.0..=1.0).contains(&cell.p_value));
        }
        let tests = pairwise_tests(&table, 0.05).unwrap();
        let cliques = build_cliques(&table, 0.05).unwrap();
        for name in &table.methods {
            prop_assert!(cliques.iter().any(|c| c.contains(name)));
        }
        for c in &cliques {
            for t in &tests {
                if c.contains(&t.a) && c.contains(&t.b) {
                    prop_assert!(t.p_holm >= 0.05);
                }
            }
        }
    }
}
