use freeutil::finite_prob::{Alphabet, CausalModel, IoType, Observation, UpdateKind, VariableSpec, VpMode};
use freeutil::numeric::max_abs_diff;
use proptest::prelude::*;

fn binary_inputs(len: usize) -> Vec<VariableSpec> {
    (0..len)
        .map(|t| VariableSpec::input(format!("x{t}"), Alphabet::binary()))
        .collect()
}

/// Binary model of length `len` with rows `(1 - q, q)` drawn from `qs` in order.
fn model_from(len: usize, qs: &[f64]) -> CausalModel {
    let mut k = 0;
    CausalModel::from_fn(binary_inputs(len), |_, _| {
        let q = qs[k % qs.len()];
        k += 1;
        vec![1.0 - q, q]
    })
    .unwrap()
}

fn model_strategy() -> impl Strategy<Value = CausalModel> {
    (1usize..=4, prop::collection::vec(0.0f64..=1.0, 15)).prop_map(|(len, qs)| model_from(len, &qs))
}

fn positive_model_strategy() -> impl Strategy<Value = CausalModel> {
    (1usize..=4, prop::collection::vec(0.05f64..0.95, 15)).prop_map(|(len, qs)| model_from(len, &qs))
}

proptest! {
    #[test]
    fn joint_sums_to_one(model in model_strategy()) {
        let total: f64 = model.joint().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn intervention_leaves_the_past_alone(model in model_strategy(), t_seed in 0usize..4, v in 0usize..2) {
        let t = t_seed % model.len();
        let after = model.intervene(t, v).unwrap();
        for s in 0..=t {
            prop_assert!(max_abs_diff(&model.prefix_masses(s), &after.prefix_masses(s)) < 1e-12);
        }
        for s in 0..t {
            prop_assert!(max_abs_diff(&model.marginal(s).unwrap(), &after.marginal(s).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn intervene_then_condition_matches_joint_enumeration(
        model in positive_model_strategy(),
        t_seed in 0usize..4,
        s_seed in 0usize..4,
        v in 0usize..2,
        w in 0usize..2,
    ) {
        prop_assume!(model.len() >= 2);
        let t = t_seed % (model.len() - 1);
        let s = t + 1 + s_seed % (model.len() - t - 1);
        let updated = model.intervene(t, v).unwrap().condition(s, w).unwrap();

        // replace factor t by a point mass on v, then filter on x_s = w, directly on the joint
        let layout = model.layout();
        let n = layout.len();
        let mut joint: Vec<f64> = (0..layout.num_sequences())
            .map(|i| {
                let seq = layout.decode(n, i);
                let mut p = 1.0;
                for k in 0..n {
                    p *= if k == t {
                        if seq[k] == v { 1.0 } else { 0.0 }
                    } else {
                        model.row(&seq[..k])[seq[k]]
                    };
                }
                if seq[s] == w { p } else { 0.0 }
            })
            .collect();
        let z: f64 = joint.iter().sum();
        joint.iter_mut().for_each(|p| *p /= z);
        prop_assert!(max_abs_diff(&updated.joint(), &joint) < 1e-12);
    }

    #[test]
    fn obs_ignores_probabilities(qs in prop::collection::vec(0.0f64..=1.0, 7), realized in prop::collection::vec(0usize..2, 3)) {
        let vars = vec![
            VariableSpec::new("theta", Alphabet::binary(), IoType::UndisclosedInput, VpMode::Estimated),
            VariableSpec::new("a", Alphabet::binary(), IoType::Output, VpMode::Controlled),
            VariableSpec::input("o", Alphabet::binary()),
        ];
        let mut k = 0;
        let a = CausalModel::from_fn(vars.clone(), |_, _| { k += 1; vec![1.0 - qs[k - 1], qs[k - 1]] }).unwrap();
        let b = CausalModel::from_fn(vars, |_, _| vec![0.5, 0.5]).unwrap();
        let ra = a.obs(&realized).unwrap();
        prop_assert_eq!(&ra, &b.obs(&realized).unwrap());
        prop_assert_eq!(ra, vec![
            Observation { variable: 1, value: realized[1], kind: UpdateKind::Causal },
            Observation { variable: 2, value: realized[2], kind: UpdateKind::Logical },
        ]);
    }

    #[test]
    fn behavior_of_fully_disclosed_model_is_itself(model in positive_model_strategy()) {
        let b = model.behavior_from_beliefs().unwrap();
        prop_assert!(max_abs_diff(&b.joint(), &model.joint()) < 1e-12);
    }
}

#[test]
fn conditioning_moves_the_past_where_intervening_does_not() {
    let model = CausalModel::from_rows(
        binary_inputs(2),
        vec![vec![vec![0.5, 0.5]], vec![vec![0.9, 0.1], vec![0.1, 0.9]]],
    )
    .unwrap();
    let before = model.marginal(0).unwrap()[1];
    let logical = model.condition(1, 1).unwrap().marginal(0).unwrap()[1];
    let causal = model.intervene(1, 1).unwrap().marginal(0).unwrap()[1];
    assert!((logical - before).abs() >= 0.05);
    assert!((causal - before).abs() < 1e-12);
}
