use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stacktree::observers::Predicate;
use stacktree::{Instance, LearnerVariant, StreamSchema, Tree, TreeConfig, Value};

fn dominant_feature_stream(seed: u64, n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..4).map(|_| rng.random()).collect();
            let noise: f64 = rng.random_range(-0.1..0.1);
            let y = if x[2] <= 0.3 { -5.0 } else { 5.0 } + noise;
            Instance::numeric(&x, &[y, 2.0 * y])
        })
        .collect()
}

#[test]
fn dominant_feature_splits_within_a_few_attempts() {
    let schema = StreamSchema::numeric(4, 2).unwrap();
    for variant in LearnerVariant::ALL {
        let mut tree = Tree::new(schema.clone(), TreeConfig::new(variant)).unwrap();
        let mut split_at = None;
        for (i, x) in dominant_feature_stream(3, 34 * 200).iter().enumerate() {
            tree.learn(x).unwrap();
            if tree.n_splits() > 0 {
                split_at = Some(i + 1);
                break;
            }
        }
        let at = split_at.unwrap_or_else(|| panic!("{variant} did not split"));
        assert_eq!(at % 200, 0, "splits only happen at grace-period boundaries");
        let root = tree.splits().next().unwrap();
        assert_eq!(root.feature, 2);
        let Predicate::Threshold(t) = root.predicate else {
            panic!()
        };
        assert!((t - 0.3).abs() < 0.02, "threshold {t}");
    }
}

#[test]
fn missing_values_route_left_and_do_not_poison_predictions() {
    let schema = StreamSchema::numeric(4, 2).unwrap();
    let mut tree = Tree::new(schema, TreeConfig::new(LearnerVariant::SsthtAdaptive)).unwrap();
    for x in dominant_feature_stream(4, 4_000) {
        tree.learn(&x).unwrap();
    }
    assert!(tree.n_splits() > 0);
    let holey = Instance::new(vec![Value::Missing; 4], vec![0.0, 0.0]);
    let p = tree.predict(&holey).unwrap();
    assert!(p.values.iter().all(|v| v.is_finite()));
    let left = Instance::numeric(&[0.5, 0.5, 0.0, 0.5], &[0.0, 0.0]);
    assert!(std::ptr::eq(tree.route(&holey), tree.route(&left)));
}

#[test]
fn non_finite_targets_are_skipped() {
    let schema = StreamSchema::numeric(4, 2).unwrap();
    let mut tree = Tree::new(schema, TreeConfig::default()).unwrap();
    tree.learn(&Instance::numeric(&[0.1, 0.2, 0.3, 0.4], &[f64::NAN, 1.0]))
        .unwrap();
    assert_eq!(tree.rejected(), 1);
    assert_eq!(tree.leaves().next().unwrap().examples_seen(), 0);
}
