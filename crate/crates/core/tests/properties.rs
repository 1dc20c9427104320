mod common;

use common::*;
use ged_core::bench::{aggregate, BenchRow};
use ged_core::kernel::{
    convexity_lambda_bound, gradient, objective, penalized_objective, quasi_perm_residual, relabel_transform,
};
use ged_core::solver::{adam_step, AdamState};
use ged_core::{
    build_cost_matrix, exact_ged, extract_edit_path, ged_under_mapping, pad_pair, round_to_permutation,
    solve_assignment, BuiltinCost, CostMatrix, CostModel, Matrix, ObjectiveParams, ScaledPair, Sense, SolverConfig,
};
use proptest::prelude::*;
use rand::Rng;

fn setting() -> impl Strategy<Value = BuiltinCost> {
    prop::sample::select(BuiltinCost::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_at_permutation_equals_mapping_cost(seed in any::<u64>(), s in setting()) {
        let mut r = rng(seed);
        let (g1, g2) = random_graphs(&mut r, 6);
        let pair = pad_pair(&g1, &g2).unwrap();
        let pi = random_permutation(&mut r, pair.order());
        let cm = CostModel::builtin(s);
        let sp = ScaledPair::from_pair(&pair, cm.kappa());
        let d = build_cost_matrix(&pair, &cm).unwrap();
        let lambda = r.gen_range(0.0..5.0);
        let value = objective(&sp, &d, &pi.to_matrix(), &ObjectiveParams::new(1.0, lambda, 0.0)).unwrap();
        let accounted = ged_under_mapping(&pair, &pi, &cm).unwrap();
        prop_assert!((value - accounted).abs() <= 1e-9, "{value} vs {accounted}");
        prop_assert_eq!(accounted, reference_mapping_cost(s, &pair, &pi));
    }

    #[test]
    fn adjacency_residual_counts_edge_edits(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (g1, g2) = random_graphs(&mut r, 7);
        let pair = pad_pair(&g1, &g2).unwrap();
        let pi = random_permutation(&mut r, pair.order());
        let p = pi.to_matrix();
        let (a, b) = (pair.g1().adjacency().into_matrix(), pair.g2().adjacency().into_matrix());
        let lhs = (&a * &p - &p * &b).norm_squared();
        let cm = CostModel::uniform(0.0, 0.0, 0.0, 2.0);
        let path = extract_edit_path(&pair, &pi, &cm).unwrap();
        prop_assert_eq!(lhs, path.total_cost);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let sp = ScaledPair::from_matrices(random_symmetric(&mut r, n), random_symmetric(&mut r, n)).unwrap();
        let d = CostMatrix::from_matrix(random_matrix(&mut r, n, 0.0, 3.0)).unwrap();
        let p = random_matrix(&mut r, n, 0.0, 1.0);
        let params = ObjectiveParams::new(r.gen_range(0.1..2.0), r.gen_range(0.1..2.0), r.gen_range(0.1..10.0));
        let g = gradient(&sp, &d, &p, &params).unwrap();
        let fd = finite_difference(&p, 1e-5, |q| penalized_objective(&sp, &d, q, &params).unwrap());
        for (x, y) in g.iter().zip(fd.iter()) {
            prop_assert!((x - y).abs() / y.abs().max(1.0) <= 1e-5, "{x} vs {y}");
        }
    }

    #[test]
    fn relabeling_preserves_objective(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let sp = ScaledPair::from_matrices(random_symmetric(&mut r, n), random_symmetric(&mut r, n)).unwrap();
        let d = CostMatrix::from_matrix(random_matrix(&mut r, n, 0.0, 3.0)).unwrap();
        let p = random_matrix(&mut r, n, 0.0, 1.0);
        let h = random_permutation(&mut r, n);
        let params = ObjectiveParams::new(1.0, r.gen_range(0.0..3.0), r.gen_range(0.0..10.0));
        let (sp2, d2) = relabel_transform(&sp, &d, &h).unwrap();
        let p2 = h.to_matrix().transpose() * &p;
        let before = penalized_objective(&sp, &d, &p, &params).unwrap();
        let after = penalized_objective(&sp2, &d2, &p2, &params).unwrap();
        prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
        let (back, d_back) = relabel_transform(&sp2, &d2, &h.inverse()).unwrap();
        prop_assert_eq!(back.a(), sp.a());
        prop_assert_eq!(d_back.as_matrix(), d.as_matrix());
    }

    #[test]
    fn spectral_bound_is_relabel_invariant(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let sp = ScaledPair::from_matrices(random_symmetric(&mut r, n), random_symmetric(&mut r, n)).unwrap();
        let d = CostMatrix::from_matrix(Matrix::zeros(n, n)).unwrap();
        let h = random_permutation(&mut r, n);
        let (sp2, _) = relabel_transform(&sp, &d, &h).unwrap();
        let (x, y) = (convexity_lambda_bound(&sp).unwrap(), convexity_lambda_bound(&sp2).unwrap());
        prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0));
    }

    #[test]
    fn rounding_yields_zero_residual_permutations(seed in any::<u64>(), n in 1usize..8) {
        let mut r = rng(seed);
        let h = round_to_permutation(&random_matrix(&mut r, n, 0.0, 1.0)).unwrap();
        let m = h.to_matrix();
        for k in 0..n {
            prop_assert_eq!(m.row(k).sum(), 1.0);
            prop_assert_eq!(m.column(k).sum(), 1.0);
        }
        prop_assert_eq!(quasi_perm_residual(&m), 0.0);
    }

    #[test]
    fn fractional_doubly_stochastic_has_positive_residual(seed in any::<u64>(), n in 2usize..7) {
        let mut r = rng(seed);
        let m = birkhoff_mixture(&mut r, n, 3);
        let fractional = m.iter().any(|&x| x > 1e-9 && x < 1.0 - 1e-9);
        prop_assert_eq!(quasi_perm_residual(&m) > 1e-12, fractional);
    }

    #[test]
    fn hungarian_matches_enumeration(seed in any::<u64>(), n in 1usize..7, integral in any::<bool>()) {
        let mut r = rng(seed);
        let cost = if integral {
            Matrix::from_fn(n, n, |_, _| r.gen_range(0..4) as f64)
        } else {
            random_matrix(&mut r, n, -5.0, 5.0)
        };
        let pi = solve_assignment(&cost, Sense::Min).unwrap();
        prop_assert_eq!(pi.total(&cost), brute_force_assignment(&cost));
    }

    #[test]
    fn edit_path_accounts_and_replays(seed in any::<u64>(), s in setting()) {
        let mut r = rng(seed);
        let (g1, g2) = random_graphs(&mut r, 6);
        let pair = pad_pair(&g1, &g2).unwrap();
        let pi = random_permutation(&mut r, pair.order());
        let cm = CostModel::builtin(s);
        let path = extract_edit_path(&pair, &pi, &cm).unwrap();
        let summed: f64 = path.ops.iter().map(|op| op.cost()).sum();
        prop_assert_eq!(path.total_cost, ged_under_mapping(&pair, &pi, &cm).unwrap());
        prop_assert!((summed - path.total_cost).abs() <= 1e-12);
        prop_assert_eq!(path.replay(&pair, &pi).unwrap(), g2);
    }

    #[test]
    fn oracle_is_the_minimum(seed in any::<u64>(), s in setting()) {
        let mut r = rng(seed);
        let (g1, g2) = random_graphs(&mut r, 5);
        let cm = CostModel::builtin(s);
        let pair = pad_pair(&g1, &g2).unwrap();
        let exact = exact_ged(&g1, &g2, &cm, 9).unwrap();
        prop_assert_eq!(exact.ged, brute_force_ged(s, &pair));
        prop_assert_eq!(exact.ged, ged_under_mapping(&pair, &exact.optimal_mapping, &cm).unwrap());
        let pi = random_permutation(&mut r, pair.order());
        prop_assert!(exact.ged <= ged_under_mapping(&pair, &pi, &cm).unwrap());
    }

    #[test]
    fn adam_keeps_entries_in_unit_box(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let mut p = random_matrix(&mut r, n, 0.0, 1.0);
        let mut state = AdamState::new(n);
        let hp = SolverConfig { alpha: 0.3, ..SolverConfig::default() }.adam();
        for _ in 0..20 {
            let g = random_matrix(&mut r, n, -10.0, 10.0);
            adam_step(&mut p, &g, &mut state, &hp).unwrap();
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }

    #[test]
    fn aggregates_ignore_row_order(seed in any::<u64>(), k in 1usize..20) {
        let mut r = rng(seed);
        let mut rows: Vec<BenchRow> = (0..k)
            .map(|i| {
                let t = r.gen_range(0..5) as f64;
                let e = t + r.gen_range(0..3) as f64;
                BenchRow {
                    id: format!("p{i}"),
                    n1: 3,
                    n2: 3,
                    true_ged: Some(t),
                    estimated_ged: Some(e),
                    abs_err: Some(e - t),
                    exact_match: Some(e == t),
                    rounds: 1,
                    wall_ms: 0.0,
                    error: None,
                }
            })
            .collect();
        let a = aggregate(&rows);
        let mae = rows.iter().map(|row| row.abs_err.unwrap()).sum::<f64>() / k as f64;
        let si = rows.iter().filter(|row| row.exact_match.unwrap()).count() as f64 / k as f64;
        prop_assert!((a.mae.unwrap() - mae).abs() <= 1e-12);
        prop_assert_eq!(a.si.unwrap(), si);
        rows.reverse();
        let b = aggregate(&rows);
        prop_assert!((a.mae.unwrap() - b.mae.unwrap()).abs() <= 1e-12);
        prop_assert_eq!(a.si, b.si);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_upper_bounds_and_is_self_consistent(seed in any::<u64>(), s in setting(), reg in any::<bool>(), relabel in any::<bool>()) {
        let mut r = rng(seed);
        let (g1, g2) = random_graphs(&mut r, 5);
        let cm = CostModel::builtin(s);
        let cfg = SolverConfig { enable_regularizer: reg, enable_inverse_relabel: relabel, ..SolverConfig::default() };
        let report = ged_core::estimate_ged(&g1, &g2, &cm, &cfg).unwrap();
        let pair = pad_pair(&g1, &g2).unwrap();
        let exact = exact_ged(&g1, &g2, &cm, 9).unwrap().ged;
        prop_assert!(report.estimated_ged >= exact - 1e-9);
        prop_assert_eq!(report.estimated_ged, ged_under_mapping(&pair, &report.permutation, &cm).unwrap());
        let best = report.trace.iter().map(|t| t.candidate_ged).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(report.estimated_ged, best);
        prop_assert_eq!(report.edit_path.replay(&pair, &report.permutation).unwrap(), g2.clone());
        let again = ged_core::estimate_ged(&g1, &g2, &cm, &cfg).unwrap();
        prop_assert_eq!(again, report);
    }
}
