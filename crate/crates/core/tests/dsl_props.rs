mod common;

use common::gen::{case, sketch};
use proptest::prelude::*;

use sketchreward::dsl::{eval_program, parse_sketch, partial_eval, print_sketch, total_reward};

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn output_has_one_reward_per_step((s, h, tau) in case()) {
        prop_assert_eq!(eval_program(&s, &h, &tau).unwrap().len(), tau.len());
    }

    #[test]
    fn residual_matches_direct_evaluation_bitwise((s, h, tau) in case()) {
        let direct = eval_program(&s, &h, &tau).unwrap();
        let residual = partial_eval(&s, &tau);
        prop_assert_eq!(residual.len(), tau.len());
        prop_assert_eq!(bits(&residual.apply(&h).unwrap()), bits(&direct));
    }

    #[test]
    fn rewards_depend_only_on_the_prefix((s, h, tau) in case()) {
        let full = eval_program(&s, &h, &tau).unwrap();
        for t in 0..tau.len() {
            let part = eval_program(&s, &h, &tau.truncated(t + 1)).unwrap();
            prop_assert_eq!(bits(&part), bits(&full[..=t]));
        }
    }

    #[test]
    fn evaluation_is_deterministic((s, h, tau) in case()) {
        let a = eval_program(&s, &h, &tau).unwrap();
        let b = eval_program(&s, &h, &tau).unwrap();
        prop_assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn holes_are_numbered_one_to_n(s in sketch()) {
        prop_assert_eq!(s.holes(), (1..=s.n_holes()).collect::<Vec<_>>());
    }

    #[test]
    fn printed_sketch_parses_to_the_same_rewards((s, h, tau) in case()) {
        let text = print_sketch(&s);
        let back = parse_sketch(&text, common::vocab_abc()).unwrap();
        prop_assert_eq!(back.n_holes(), s.n_holes());
        prop_assert_eq!(
            bits(&eval_program(&back, &h, &tau).unwrap()),
            bits(&eval_program(&s, &h, &tau).unwrap())
        );
    }

    #[test]
    fn substitution_agrees_with_evaluation((s, h, tau) in case()) {
        let done = s.substitute(&h).unwrap();
        prop_assert_eq!(done.n_holes(), 0);
        prop_assert_eq!(
            bits(&eval_program(&done, &[], &tau).unwrap()),
            bits(&eval_program(&s, &h, &tau).unwrap())
        );
    }

    #[test]
    fn total_is_the_sum((s, h, tau) in case()) {
        let r = eval_program(&s, &h, &tau).unwrap();
        prop_assert_eq!(total_reward(&s, &h, &tau).unwrap().to_bits(), r.iter().sum::<f64>().to_bits());
    }
}

#[test]
fn wrong_assignment_length_is_rejected() {
    let env = common::doorkey_env();
    let s = common::doorkey_sketch(&env);
    let tau = common::expert_demos(&env, 1, 0).remove(0);
    assert!(eval_program(&s, &[1.0; 4], &tau).is_err());
    assert!(eval_program(&s, &[1.0; 6], &tau).is_err());
}

#[test]
fn doorkey_demo_total() {
    // pickup (0.2) + unlock (0.5) + goal (1.0); the planner never closes the
    // door or drops the key
    let env = common::doorkey_env();
    let s = common::doorkey_sketch(&env);
    let tau = common::expert_demos(&env, 1, 0).remove(0);
    let total = total_reward(&s, &[1.0, 0.5, -0.6, 0.2, -0.3], &tau).unwrap();
    assert!((total - 1.7).abs() < 1e-12, "{total}");
}
