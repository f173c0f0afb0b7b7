mod common;

use marginmetric::boxqp::{self, BoxQpProblem, SolverOptions};
use marginmetric::data::StandardizationParams;
use marginmetric::kernel::{self, KernelSpec};
use marginmetric::maxmargin;
use marginmetric::rng;
use ndarray::Array2;
use proptest::prelude::*;

fn random_problem(seed: u64, n: usize, gaussian: bool) -> (Array2<f64>, Vec<f64>) {
    let mut r = rng::seeded(seed);
    let x = common::gaussian_matrix(&mut r, n, 3);
    let spec = if gaussian {
        KernelSpec::gaussian(1.0).unwrap().raw()
    } else {
        KernelSpec::linear().raw()
    };
    let k = kernel::gram_of_rows(&spec, &x).unwrap().matrix().clone();
    let y = common::random_labels(&mut r, n).iter().map(|l| l.sign()).collect();
    (k, y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feasibility_and_oracle(seed in any::<u64>(), n in 2usize..16, gaussian in any::<bool>(),
                              c in 0.1f64..10.0, frac in 0.0f64..1.0) {
        let (k, y) = random_problem(seed, n, gaussian);
        let lambda = c * frac;
        let problem = BoxQpProblem::uniform(&k, &y, -lambda, c).unwrap();
        let sol = boxqp::solve(&problem, &SolverOptions::default()).unwrap();
        prop_assert!(sol.converged);
        let eq: f64 = sol.delta.iter().zip(&y).map(|(d, s)| d * s).sum();
        prop_assert!(eq.abs() <= 1e-10);
        for &d in &sol.delta {
            prop_assert!(d >= -lambda - 1e-12 && d <= c + 1e-12);
        }
        let lo = vec![-lambda; n];
        let hi = vec![c; n];
        let (_, oracle) = common::projected_gradient_oracle(&k, &y, &lo, &hi, 20_000);
        prop_assert!(sol.objective >= oracle - 1e-6 * oracle.abs().max(1.0));
        prop_assert!((sol.objective - common::dual_objective(&k, &y, &sol.delta)).abs() <= 1e-9 * sol.objective.abs().max(1.0));
    }

    #[test]
    fn wider_box_never_lowers_objective(seed in any::<u64>(), n in 2usize..12, c in 0.1f64..5.0) {
        let (k, y) = random_problem(seed, n, true);
        let narrow = boxqp::solve(&BoxQpProblem::uniform(&k, &y, 0.0, c).unwrap(), &SolverOptions::default()).unwrap();
        let wide = boxqp::solve(&BoxQpProblem::uniform(&k, &y, -c / 3.0, c).unwrap(), &SolverOptions::default()).unwrap();
        prop_assert!(wide.objective >= narrow.objective - 1e-6 * narrow.objective.abs().max(1.0));
    }
}

#[test]
fn primal_dual_gap_closes() {
    let mut r = rng::seeded(11);
    let d = common::blobs(&mut r, 40, 3, 1.0);
    let d = StandardizationParams::fit(&d).apply_dataset(&d).unwrap();
    let gram = kernel::gram(&KernelSpec::linear(), &d).unwrap();
    let opts = SolverOptions { tol: 1e-10, ..Default::default() };
    for (c, lambda) in [(1.0, 0.0), (10.0, 10.0 / 3.0), (100.0, 5.0)] {
        let m = maxmargin::train_esvm_with(&d, &gram, c, lambda, &opts).unwrap();
        let primal = m.primal_objective(&gram, d.labels());
        assert!((primal - m.objective).abs() <= 1e-6 * primal.abs().max(1.0), "{primal} vs {}", m.objective);
    }
}

#[test]
fn bundled_datasets_train_on_every_kernel() {
    for name in common::DATASETS {
        let raw = common::load(name);
        let d = StandardizationParams::fit(&raw).apply_dataset(&raw).unwrap();
        for spec in KernelSpec::benchmark_set() {
            let m = maxmargin::fit_esvm(&d, &spec, 10.0, 10.0 / 3.0).unwrap();
            assert!(m.converged, "{name} {spec}");
            let eq: f64 = m.delta.iter().zip(d.signs()).map(|(a, s)| a * s).sum();
            assert!(eq.abs() <= 1e-10, "{name} {spec} {eq}");
        }
    }
}
