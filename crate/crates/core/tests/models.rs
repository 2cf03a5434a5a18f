use obfuskit::attacks::inversion::{invert_class, InversionParams};
use obfuskit::dataset::gen_blobs;
use obfuskit::metrics::cosine_similarity;
use obfuskit::{seed, Activation, Domain, Model, ModelSpec, TrainConfig};
use rand::Rng;

fn domain() -> Domain {
    Domain::new(0.0, 255.0).unwrap()
}

#[test]
fn learners_separate_well_spaced_blobs() {
    let data = gen_blobs(4, 8, 60, 10, 11, 20.0, domain()).unwrap();
    let (train, val) = data.split(0.5, 3).unwrap();
    // the small uniform init leaves ReLU nets on a plateau for the first few
    // dozen epochs, sigmoid nets for longer
    let cfg = TrainConfig::new(300, 16, 0.1, 9);
    for spec in [
        ModelSpec::softmax(8, 4),
        ModelSpec::mlp(8, 16, 4),
        ModelSpec::mlp(8, 16, 4).with_activation(Activation::Sigmoid),
    ] {
        let spec = spec.with_domain(domain());
        let model = Model::init(spec.clone(), 1).unwrap().train(&train, &cfg).unwrap();
        let acc = model.accuracy(&val).unwrap();
        assert!(acc > 0.95, "{:?} {:?}: {acc}", spec.architecture, spec.activation);
    }
}

#[test]
fn training_is_reproducible() {
    let data = gen_blobs(3, 5, 30, 1, 2, 40.0, domain()).unwrap();
    let spec = ModelSpec::mlp(5, 8, 3).with_domain(domain());
    let cfg = TrainConfig::new(5, 8, 0.1, 4);
    let a = Model::init(spec.clone(), 1).unwrap().train(&data, &cfg).unwrap();
    let b = Model::init(spec, 1).unwrap().train(&data, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn save_load_preserves_every_bit() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ModelSpec::mlp(6, 5, 3).with_domain(domain());
    let m = Model::init(spec, 77).unwrap();
    let mut rng = seed::rng(1, "params", 0);
    let params: Vec<f64> = (0..m.parameter_count()).map(|_| rng.random::<f64>() * 1e-3 - 5e-4).collect();
    let m = m.set_parameters(&params).unwrap();
    let path = dir.path().join("m.json");
    m.save(&path).unwrap();
    let back = Model::load(&path).unwrap();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(back.get_parameters()), bits(m.get_parameters()));
}

#[test]
fn input_gradient_matches_finite_differences() {
    for case in 0..50u64 {
        let mut rng = seed::rng(3, "input-grad", case);
        let d = rng.random_range(1..6);
        let spec = match case % 2 {
            0 => ModelSpec::softmax(d, 3),
            _ => ModelSpec::mlp(d, 4, 3).with_activation(Activation::Sigmoid),
        }
        .with_domain(domain());
        let base = Model::init(spec, case).unwrap();
        let params: Vec<f64> = (0..base.parameter_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = base.set_parameters(&params).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(10.0..245.0)).collect();
        let class = rng.random_range(0..3);
        let (_, grad) = model.log_prob_input_gradient(&x, class).unwrap();
        let eps = 1e-4;
        for j in 0..d {
            let f = |delta: f64| {
                let mut y = x.clone();
                y[j] += delta;
                model.predict_proba(&y).unwrap()[class].ln()
            };
            let numeric = (f(eps) - f(-eps)) / (2.0 * eps);
            let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(1e-8);
            assert!(rel <= 1e-4, "case {case} coord {j}: {} vs {numeric}", grad[j]);
        }
    }
}

#[test]
fn inversion_recovers_a_linear_class_template() {
    let data = gen_blobs(2, 16, 100, 5, 6, 25.0, domain()).unwrap();
    let spec = ModelSpec::softmax(16, 2).with_domain(domain());
    let model = Model::init(spec, 1).unwrap().train(&data, &TrainConfig::new(50, 16, 0.1, 2)).unwrap();
    let inv = invert_class(&model, 0, &InversionParams::default()).unwrap();
    assert!(inv.features.iter().all(|&x| domain().contains(x)));
    assert!(inv.final_confidence > inv.initial_confidence);
    let mid = domain().midpoint();
    let target: Vec<f64> = data.class_mean(0).unwrap().iter().zip(data.class_mean(1).unwrap()).map(|(a, b)| a - b).collect();
    let got: Vec<f64> = inv.features.iter().map(|x| x - mid).collect();
    assert!(cosine_similarity(&got, &target).unwrap() > 0.7);
}
