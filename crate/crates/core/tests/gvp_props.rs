use freeutil::conjugate::Temperature;
use freeutil::finite_prob::{Alphabet, CausalModel, IoType, VariableSpec, VpMode};
use freeutil::gvp::{GvpProblem, UtilityTable};
use freeutil::numeric::max_abs_diff;
use freeutil::oracle;
use freeutil::transform::{control_solution, TransformProblem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solver_beats_random_candidates_and_coordinate_ascent(seed in any::<u64>(), len in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = oracle::random_gvp_problem(len, &mut rng).unwrap();
        let exact = problem.solve().unwrap().objective();
        prop_assert!(oracle::best_random_objective(&problem, 5_000, &mut rng).unwrap() <= exact + 1e-6);
        let (_, ascent) = oracle::coordinate_ascent(&problem, 500, 1e-10).unwrap();
        prop_assert!(ascent <= exact + 1e-6);
    }

    #[test]
    fn objective_decomposes_per_variable(seed in any::<u64>(), len in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = oracle::random_gvp_problem(len, &mut rng).unwrap();
        let candidate = oracle::random_candidate(&problem, &mut rng).unwrap();
        let whole = problem.objective(&candidate).unwrap();
        let parts = problem.objective_from_terms(&candidate).unwrap();
        prop_assert!((whole - parts).abs() < 1e-9);
    }

    #[test]
    fn single_controlled_variable_is_the_closed_form(w in prop::collection::vec(0.01f64..1.0, 2..=5), u in prop::collection::vec(-2.0f64..2.0, 5), alpha in 0.1f64..10.0) {
        let s: f64 = w.iter().sum();
        let prior: Vec<f64> = w.iter().map(|x| x / s).collect();
        let n = prior.len();
        let alpha = Temperature::new(alpha).unwrap();
        let var = VariableSpec::new("a", Alphabet::indexed(n), IoType::Output, VpMode::Controlled);
        let reference = CausalModel::from_rows(vec![var.clone()], vec![vec![prior.clone()]]).unwrap();
        let utility = UtilityTable::from_rows(&[var], vec![vec![u[..n].to_vec()]]).unwrap();
        let solved = GvpProblem::new(reference, utility, alpha).unwrap().solve().unwrap();
        let closed = control_solution(&TransformProblem::new(prior, u[..n].to_vec(), alpha).unwrap()).unwrap();
        prop_assert!(max_abs_diff(solved.candidate.row(&[]), &closed) < 1e-9);
    }

    #[test]
    fn single_estimated_variable_is_the_reference(w in prop::collection::vec(0.01f64..1.0, 2..=5), u in prop::collection::vec(-2.0f64..2.0, 5)) {
        let s: f64 = w.iter().sum();
        let prior: Vec<f64> = w.iter().map(|x| x / s).collect();
        let n = prior.len();
        let var = VariableSpec::input("o", Alphabet::indexed(n));
        let reference = CausalModel::from_rows(vec![var.clone()], vec![vec![prior.clone()]]).unwrap();
        let utility = UtilityTable::from_rows(&[var], vec![vec![u[..n].to_vec()]]).unwrap();
        let solved = GvpProblem::new(reference, utility, Temperature::new(1.0).unwrap()).unwrap().solve().unwrap();
        prop_assert!(max_abs_diff(solved.candidate.row(&[]), &prior) < 1e-12);
    }
}
