mod common;

use marginmetric::cli::{dispatch, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use marginmetric::data::{self, StandardizationParams};
use marginmetric::persist::SavedModel;
use marginmetric::rng;

fn run(args: &[&str]) -> i32 {
    let mut argv = vec!["marginmetric"];
    argv.extend_from_slice(args);
    dispatch(argv)
}

fn toy_file(dir: &std::path::Path) -> String {
    let mut r = rng::seeded(3);
    let d = common::blobs(&mut r, 40, 3, 1.0);
    let p = dir.join("toy.libsvm");
    std::fs::write(&p, d.to_libsvm_string()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn usage_errors() {
    assert_eq!(run(&[]), EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]), EXIT_USAGE);
    assert_eq!(run(&["train", "--algo", "svm", "--bogus"]), EXIT_USAGE);
    assert_eq!(run(&["verify", "--dataset", "x.csv", "--mode", "nope"]), EXIT_USAGE);
    assert_eq!(run(&["--help"]), EXIT_OK);
}

#[test]
fn runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.txt");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["train", "--algo", "svm", "--dataset", "/nonexistent.csv", "--out", out]), EXIT_RUNTIME);
    let toy = toy_file(dir.path());
    assert_eq!(run(&["train", "--algo", "svm", "--dataset", &toy, "--kernel", "rbf", "--out", out]), EXIT_USAGE);
}

#[test]
fn train_save_load_predict_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let toy = toy_file(dir.path());
    for (algo, kernel) in [("svm", "linear"), ("esvm", "gauss:1.0"), ("lmnn", "linear")] {
        let model = dir.path().join(format!("{algo}.model"));
        let model_s = model.to_str().unwrap();
        let code = run(&[
            "train", "--algo", algo, "--dataset", &toy, "--kernel", kernel, "--C", "10", "--lambda", "3.3333333333333335",
            "--lmnn-iters", "20", "--out", model_s,
        ]);
        assert_eq!(code, EXIT_OK, "{algo}");
        let loaded = SavedModel::load(&model).unwrap();
        let d = data::load_auto(&toy).unwrap();
        let again = SavedModel::from_text(&loaded.to_text()).unwrap();
        assert_eq!(again, loaded);
        assert_eq!(loaded.predict(d.x()).unwrap(), again.predict(d.x()).unwrap());

        // In-memory model predicts the same labels.
        let p = StandardizationParams::fit(&d);
        assert_eq!(loaded.standardization(), Some(&p));
        if let SavedModel::Margin { model, .. } = &loaded {
            let fresh = marginmetric::maxmargin::fit_esvm(&p.apply_dataset(&d).unwrap(), &kernel.parse().unwrap(), 10.0, model.lambda).unwrap();
            let a = fresh.predict_all(&p.apply(d.x()).unwrap()).unwrap();
            assert_eq!(a, loaded.predict(d.x()).unwrap());
            for (x, y) in fresh.support_vectors.iter().zip(model.support_vectors.iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(fresh.bias.to_bits(), model.bias.to_bits());
        }

        let preds = dir.path().join(format!("{algo}.pred"));
        assert_eq!(run(&["predict", "--model", model_s, "--dataset", &toy, "--out", preds.to_str().unwrap()]), EXIT_OK);
        assert_eq!(std::fs::read_to_string(&preds).unwrap().lines().count(), d.n());
    }
}

#[test]
fn verify_modes() {
    let dir = tempfile::tempdir().unwrap();
    let toy = toy_file(dir.path());
    let tsv = dir.path().join("lin.tsv");
    assert_eq!(
        run(&["verify", "--dataset", &toy, "--mode", "linearization", "--lmnn-iters", "10", "--out", tsv.to_str().unwrap()]),
        EXIT_OK
    );
    let body = std::fs::read_to_string(&tsv).unwrap();
    assert!(body.starts_with("center\tradius\tband\tmax_residual"));
    assert_eq!(run(&["verify", "--dataset", &toy, "--mode", "local-vote", "--lmnn-iters", "5", "--folds", "3"]), EXIT_OK);
    assert_eq!(run(&["verify", "--dataset", &toy, "--mode", "reductions"]), EXIT_OK);

    let mut r = rng::seeded(8);
    let sep = common::blobs(&mut r, 20, 2, 4.0);
    let sep_path = dir.path().join("sep.libsvm");
    std::fs::write(&sep_path, sep.to_libsvm_string()).unwrap();
    assert_eq!(
        run(&["verify", "--dataset", sep_path.to_str().unwrap(), "--mode", "metric-equivalence", "--trials", "5000"]),
        EXIT_OK
    );
}

#[test]
fn bench_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    toy_file(dir.path());
    let manifest = dir.path().join("m.txt");
    std::fs::write(&manifest, "dataset toy toy.libsvm\nkernel linear\nalgo svm esvm\ngrid 1\nfolds 3 2\n").unwrap();
    let out = dir.path().join("results");
    let code = run(&["bench", "--manifest", manifest.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let first = std::fs::read_to_string(out.join("errors.tsv")).unwrap();
    assert!(out.join("scores.tsv").exists());
    run(&["bench", "--manifest", manifest.to_str().unwrap(), "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(first, std::fs::read_to_string(out.join("errors.tsv")).unwrap());
}
