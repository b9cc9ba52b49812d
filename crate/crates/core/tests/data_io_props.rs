use lst_core::data_io::{load_csv, ranks, robust_correlation, train_size, train_test_split_rows, write_csv, CsvOptions, RawTable};
use lst_core::seed::rng_for;
use lst_core::simulation::{contaminate, contaminated_count, gen_design, Scheme, SimulationSpec};
use proptest::prelude::*;

fn table(cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..20).prop_flat_map(move |rows| prop::collection::vec(prop::collection::vec(-1e6f64..1e6, rows), cols))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(cols in table(3)) {
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let t = RawTable::new(names.clone(), cols.clone()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&t, &path).unwrap();
        let back = load_csv(&path, CsvOptions::default()).unwrap();
        prop_assert_eq!(back.names, names);
        prop_assert_eq!(back.columns, cols);
        prop_assert!(back.rejected.is_empty());
    }

    #[test]
    fn split_partitions_rows(n in 2usize..300, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let Ok(k) = train_size(n, ratio) else { return Ok(()) };
        let (train, test) = train_test_split_rows(n, ratio, None, &mut rng_for(seed, &[])).unwrap();
        prop_assert_eq!(train.len(), k);
        prop_assert_eq!(train.len() + test.len(), n);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let again = train_test_split_rows(n, ratio, None, &mut rng_for(seed, &[])).unwrap();
        prop_assert_eq!(again.0, train);
    }

    #[test]
    fn ranks_sum_to_triangular_number(v in prop::collection::vec(-10i32..10, 1..50)) {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let r = ranks(&v);
        let n = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn rank_correlation_ignores_monotone_maps(v in prop::collection::vec(-5.0f64..5.0, 3..40)) {
        let w: Vec<f64> = v.iter().map(|x| x.exp() * 3.0 + 1.0).collect();
        if let Ok(c) = robust_correlation(&v, &w) {
            prop_assert!((c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn contamination_touches_exactly_the_chosen_rows(n in 10usize..80, eps in 0.0f64..0.49, seed in any::<u64>()) {
        let spec = SimulationSpec { n, p: 4, eps, scheme: Scheme::II, ..Default::default() };
        let mut rng = rng_for(seed, &[]);
        let clean = gen_design(&spec, &mut rng).unwrap();
        let dirty = contaminate(&clean, Scheme::II, eps, &mut rng).unwrap();
        prop_assert_eq!(dirty.contaminated_rows.len(), contaminated_count(n, eps));
        for i in 0..n {
            let hit = dirty.contaminated_rows.contains(&i);
            prop_assert_eq!(hit, dirty.data.y()[i] == 1e10);
            if !hit {
                prop_assert_eq!(dirty.data.y()[i], clean.data.y()[i]);
            }
        }
    }
}

#[test]
fn split_sizes_follow_rounding() {
    assert_eq!(train_size(59, 0.7).unwrap(), 41);
    assert_eq!(train_size(10, 0.5).unwrap(), 5);
    assert!(train_size(1, 0.5).is_err());
    assert!(train_size(10, 1.0).is_err());
}
