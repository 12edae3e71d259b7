mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sketchreward::env::{
    enumerate_trajectories, load_demos, rollout, save_demos, DemoSet, Env, MdpSpec, TabularMdp,
    DEFAULT_ENUMERATION_CAP,
};
use sketchreward::policy::PolicyTable;

fn distribution(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn mdp() -> impl Strategy<Value = TabularMdp> {
    (1usize..4, 1usize..3, 1usize..4).prop_flat_map(|(s, a, horizon)| {
        (
            proptest::collection::vec(proptest::collection::vec(distribution(s), a), s),
            distribution(s),
        )
            .prop_map(move |(transition, d0)| {
                TabularMdp::new(MdpSpec {
                    transition,
                    d0,
                    horizon,
                    costs: None,
                    tokens: None,
                })
                .unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn enumerated_masses_sum_to_one(m in mdp()) {
        let all = enumerate_trajectories(&m, None, DEFAULT_ENUMERATION_CAP).unwrap();
        let n = m.n_actions() as f64;
        let total: f64 = all.iter().map(|(t, p)| p * n.powi(-(t.len() as i32))).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "{}", total);
    }

    #[test]
    fn grid_steps_are_deterministic(seed in any::<u64>(), a in 0u32..7) {
        let env = common::doorkey_env();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // walk somewhere random first
        let tau = common::uniform_rollouts(&env, 1, seed).remove(0);
        let s = tau.steps().last().unwrap().state;
        let x = env.step(s, a, &mut rng);
        let y = env.step(s, a, &mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(1)));
        prop_assert_eq!(x, y);
    }

    #[test]
    fn pred_replays_stored_tokens(seed in any::<u64>()) {
        let env = common::doorkey_env();
        let tau = common::uniform_rollouts(&env, 1, seed).remove(0);
        for t in 0..tau.len() {
            prop_assert_eq!(env.pred(&tau.steps()[..=t]), tau.tokens()[t]);
        }
    }
}

#[test]
fn rollouts_respect_horizon_and_log_pi() {
    let env = common::doorkey_env();
    let p = PolicyTable::uniform(env.n_states(), env.n_actions(), 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let t = rollout(&p, &env, &mut rng);
        assert!(!t.is_empty() && t.len() <= env.horizon());
        let want = -(t.len() as f64) * 7f64.ln();
        assert!((t.log_pi() - want).abs() < 1e-9);
    }
}

#[test]
fn demo_file_round_trip() {
    let env = common::doorkey_env();
    let set = DemoSet {
        env: "doorkey-6x6".into(),
        seed: 0,
        expert: "planner".into(),
        trajectories: common::expert_demos(&env, 10, 0),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("demos.jsonl");
    save_demos(&set, env.vocabulary(), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines = text.lines().filter(|l| l.contains("\"steps\"")).count();
    assert_eq!(lines, 10);
    let back = load_demos(&path, env.vocabulary()).unwrap();
    assert_eq!(back.trajectories, set.trajectories);

    // cutting the file mid-record is an error, not a shorter set
    std::fs::write(&path, &text[..text.len() - 20]).unwrap();
    assert!(load_demos(&path, env.vocabulary()).is_err());
}
