mod common;

use marginmetric::data::{self, Dataset, Label, StandardizationParams};
use marginmetric::error::Error;
use ndarray::{array, Array2};
use proptest::prelude::*;

#[test]
fn bundled_datasets_have_expected_shapes() {
    let expect = [("sonar", 208, 60), ("ionosphere", 351, 33), ("wdbc", 569, 30), ("bupa", 345, 6)];
    for (name, n, d) in expect {
        let ds = common::load(name);
        assert_eq!((ds.n(), ds.d()), (n, d), "{name}");
        assert!(ds.class_count(Label::Positive) > 0 && ds.class_count(Label::Negative) > 0);
        assert!(ds.x().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn label_sets_are_remapped() {
    let pm = data::parse_csv("1,-1\n2,1\n", 1, false).unwrap();
    assert_eq!(pm.labels(), &[Label::Negative, Label::Positive]);
    let zo = data::parse_csv("1,0\n2,1\n", 1, false).unwrap();
    assert_eq!(zo.labels(), &[Label::Negative, Label::Positive]);
    let ot = data::parse_csv("1,1\n2,2\n", 1, false).unwrap();
    assert_eq!(ot.labels(), &[Label::Positive, Label::Negative]);
    assert!(matches!(data::parse_csv("1,1\n2,3\n", 1, false), Err(Error::LabelSet { .. })));
    assert!(matches!(data::parse_csv("1,1\n2,1\n", 1, false), Err(Error::InvalidDataset(_))));
    assert!(matches!(data::parse_csv("1,0.5\n2,1\n", 1, false), Err(Error::Parse { line: 1, .. })));
}

#[test]
fn csv_errors_carry_line_numbers() {
    let err = data::parse_csv("a,b,label\n1,2,1\n3,x,0\n", 2, true).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    let err = data::parse_csv("1,2,1\n3,0\n", 2, false).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    let ds = data::parse_csv("a,b,label\n1,2,1\n3,4,0\n", 2, true).unwrap();
    assert_eq!(ds.feature_names().unwrap(), &["a".to_string(), "b".to_string()]);
}

#[test]
fn libsvm_parsing() {
    let ds = data::parse_libsvm("+1 1:0.5 3:2\n-1 2:1 # comment\n\n").unwrap();
    assert_eq!(ds.x(), &array![[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]]);
    assert_eq!(ds.labels(), &[Label::Positive, Label::Negative]);
    assert!(matches!(data::parse_libsvm("1 2:1 1:3\n-1 1:1\n"), Err(Error::Parse { line: 1, .. })));
    assert!(matches!(data::parse_libsvm("1 0:1\n-1 1:1\n"), Err(Error::Parse { .. })));
    let back = data::parse_libsvm(&ds.to_libsvm_string()).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn missing_file_is_an_io_error() {
    assert!(matches!(data::load_auto("/definitely/not/here.csv"), Err(Error::Io { .. })));
}

#[test]
fn constant_feature_standardizes_to_zero() {
    let d = Dataset::new(array![[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], vec![Label::Positive, Label::Negative, Label::Positive]).unwrap();
    let p = StandardizationParams::fit(&d);
    assert_eq!(p.std[1], 0.0);
    let z = p.apply(d.x()).unwrap();
    assert!(z.column(1).iter().all(|&v| v == 0.0));
    assert!(matches!(p.apply(&Array2::zeros((1, 3))), Err(Error::DimensionMismatch { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardized_columns_have_zero_mean_unit_spread(seed in any::<u64>(), n in 3usize..40, d in 1usize..6) {
        let mut r = marginmetric::rng::seeded(seed);
        let x = common::gaussian_matrix(&mut r, n, d) * 7.0 + 3.0;
        let p = StandardizationParams::fit_matrix(&x);
        let z = p.apply(&x).unwrap();
        for col in z.columns() {
            let m = col.sum() / n as f64;
            let v = col.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n as f64;
            prop_assert!(m.abs() <= 1e-10);
            prop_assert!((v - 1.0).abs() <= 1e-9);
        }
        for i in 0..n {
            let row = p.apply_row(x.row(i)).unwrap();
            prop_assert_eq!(row, z.row(i).to_owned());
        }
    }

    #[test]
    fn libsvm_round_trip(seed in any::<u64>(), n in 2usize..20, d in 1usize..6) {
        let mut r = marginmetric::rng::seeded(seed);
        let x = common::gaussian_matrix(&mut r, n, d).mapv(|v| if v.abs() < 0.5 { 0.0 } else { v });
        let ds = Dataset::new(x, common::random_labels(&mut r, n)).unwrap();
        prop_assert_eq!(data::parse_libsvm(&ds.to_libsvm_string()).unwrap(), ds);
    }
}
