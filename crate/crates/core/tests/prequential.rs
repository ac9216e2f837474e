use stacktree::eval::{armse, run_prequential_with, PrequentialConfig};
use stacktree::{Family, GeneratorSpec, Instance, LearnerVariant, Tree, TreeConfig};

#[test]
fn windows_match_a_batch_recomputation() {
    let spec = GeneratorSpec::new(Family::PlaneMt, 2_345, 3, 8);
    let cfg = PrequentialConfig {
        window: 150,
        warm_start: 100,
        ..Default::default()
    };
    let mut evaluated: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut src = spec.stream().unwrap();
    let report = run_prequential_with(&TreeConfig::default(), &mut src, &cfg, "plane", |x, p| {
        evaluated.push((x.targets.clone(), p.values.clone()));
    })
    .unwrap();

    assert_eq!(evaluated.len(), 2_345 - 100);
    assert_eq!(report.windows.len(), (2_345 - 100usize).div_ceil(150));
    for (w, chunk) in report.windows.iter().zip(evaluated.chunks(150)) {
        let sq: Vec<f64> = (0..3)
            .map(|t| chunk.iter().map(|(y, p)| (y[t] - p[t]).powi(2)).sum())
            .collect();
        let expected = armse(&sq, chunk.len() as u64).unwrap();
        assert!(
            (w.armse - expected).abs() <= 1e-9 * expected.max(1.0),
            "window {}",
            w.index
        );
    }
}

#[test]
fn predictions_are_made_before_learning() {
    // replaying the same stream by hand gives the same predictions
    let spec = GeneratorSpec::new(Family::FriedmanMt, 800, 2, 5);
    let cfg = PrequentialConfig::default();
    let mut seen = Vec::new();
    let mut src = spec.stream().unwrap();
    run_prequential_with(&TreeConfig::new(LearnerVariant::Sstht), &mut src, &cfg, "f", |_, p| {
        seen.push(p.values.clone());
    })
    .unwrap();

    let mut tree = Tree::new(spec.schema(), TreeConfig::new(LearnerVariant::Sstht)).unwrap();
    let stream: Vec<Instance> = spec.stream().unwrap().map(Result::unwrap).collect();
    let mut manual = Vec::new();
    for (i, x) in stream.iter().enumerate() {
        if i >= cfg.warm_start {
            manual.push(tree.predict(x).unwrap().values);
        }
        tree.learn(x).unwrap();
    }
    assert_eq!(seen, manual);
}
