use std::sync::Arc;

use hilfer_core::solver::solve_from;
use hilfer_core::{
    apply_omega, estimate_k, solve_fixed_point, uniform_distance, weighted_distance, DelayProblem,
    FracOrder, InitialTermMode, Path, PsiMap, SolveOptions, TimeGrid, WeightFn,
};
use proptest::prelude::*;

fn problem(alpha: f64, beta: f64, l1: f64, l2: f64, psi: PsiMap, steps: usize) -> DelayProblem {
    let (t0, t1) = match psi {
        PsiMap::Identity => (0.0, 1.0),
        _ => (1.0, 2.0),
    };
    let grid = Arc::new(TimeGrid::new(t0, t1, 0.5, steps).unwrap());
    DelayProblem::new(
        move |t, y, yd| l1 * (y + t).sin() + l2 * yd.tanh(),
        l1,
        l2,
        |t| 1.0 + 0.1 * t,
        FracOrder::new(alpha, beta).unwrap(),
        psi,
        grid,
    )
    .unwrap()
}

type Metric<'a> = &'a dyn Fn(&Path, &Path) -> f64;

fn psi_strategy() -> impl Strategy<Value = PsiMap> {
    prop_oneof![
        Just(PsiMap::Identity),
        Just(PsiMap::Log),
        Just(PsiMap::power(0.5).unwrap())
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn picard_contracts_no_faster_than_predicted(
        alpha in 0.4f64..=1.0,
        beta in 0.0f64..=1.0,
        l in 0.05f64..0.3,
        psi in psi_strategy(),
    ) {
        let p = problem(alpha, beta, l, l, psi, 64);
        let phi = WeightFn::new(|t| 1.0 + t);
        let k = estimate_k(&phi, alpha, &psi, p.grid()).unwrap();
        prop_assume!(k * 2.0 * l < 1.0);
        let opts = SolveOptions { weight: Some(phi.clone()), ..Default::default() };
        let r = solve_fixed_point(&p, InitialTermMode::PaperLiteral, &opts).unwrap();
        prop_assert!(r.converged);
        prop_assert!(r.contraction_observed <= k * 2.0 * l + 0.1);

        let again = apply_omega(&r.solution, &p, InitialTermMode::PaperLiteral).unwrap();
        prop_assert!(weighted_distance(&again, &r.solution, &phi).unwrap() <= 2.0 * opts.tol);

        let other = solve_from(&p, InitialTermMode::PaperLiteral, p.ramp_candidate(), &opts).unwrap();
        prop_assert!(uniform_distance(&other.solution, &r.solution).unwrap() <= 5.0 * opts.tol);

        let grid = p.grid();
        for i in 0..=grid.t0_index() {
            prop_assert_eq!(r.solution.get(i), p.history(grid.node(i)));
        }
    }

    #[test]
    fn weighted_mode_shares_the_history_branch(alpha in 0.4f64..1.0, beta in 0.0f64..1.0) {
        let p = problem(alpha, beta, 0.1, 0.1, PsiMap::Identity, 32);
        let r = solve_fixed_point(&p, InitialTermMode::WeightedHilfer, &SolveOptions::default()).unwrap();
        let grid = p.grid();
        for i in 0..=grid.t0_index() {
            prop_assert_eq!(r.solution.get(i), p.history(grid.node(i)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn grid_distances_are_generalized_metrics(
        a in prop::collection::vec(-1e3f64..1e3, 21),
        b in prop::collection::vec(-1e3f64..1e3, 21),
        c in prop::collection::vec(-1e3f64..1e3, 21),
        decay in 0.0f64..5.0,
    ) {
        let grid = Arc::new(TimeGrid::new(0.0, 1.0, 0.25, 4).unwrap());
        let p = Path::new(grid.clone(), a).unwrap();
        let q = Path::new(grid.clone(), b).unwrap();
        let r = Path::new(grid.clone(), c).unwrap();
        let w = WeightFn::new(move |t| (-decay * t).exp());
        let uniform = |x: &Path, y: &Path| uniform_distance(x, y).unwrap();
        let weighted = |x: &Path, y: &Path| weighted_distance(x, y, &w).unwrap();
        let metrics: [Metric; 2] = [&uniform, &weighted];
        for d in metrics {
            prop_assert_eq!(d(&p, &p), 0.0);
            prop_assert_eq!(d(&p, &q), d(&q, &p));
            prop_assert!(d(&p, &r) <= (d(&p, &q) + d(&q, &r)) * (1.0 + 1e-15));
        }
    }
}
