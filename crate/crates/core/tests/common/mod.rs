#![allow(dead_code)]

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sketchreward::constraint::{parse_constraints, Constraint};
use sketchreward::dsl::{parse_sketch, total_reward, Sketch};
use sketchreward::env::{rollout, rollout_with_outcome, Env, GridConfig, GridEnv, TabularMdp};
use sketchreward::policy::PolicyTable;
use sketchreward::trajectory::Trajectory;

pub const DOORKEY_SKETCH: &str = include_str!("../../../../data/doorkey.rsk");
pub const DOORKEY_CONSTRAINT: &str = include_str!("../../../../data/doorkey.rsc");
pub const TOY_SKETCH: &str = include_str!("../../../../data/toy.rsk");
pub const TOY_HOLES: [f64; 2] = [0.5, -0.8];

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn doorkey_env() -> GridEnv {
    GridEnv::new(GridConfig::doorkey_6x6()).unwrap()
}

pub fn doorkey_sketch(env: &GridEnv) -> Sketch {
    parse_sketch(DOORKEY_SKETCH, env.vocabulary().clone()).unwrap()
}

pub fn doorkey_constraint() -> Constraint {
    parse_constraints(DOORKEY_CONSTRAINT)
        .unwrap()
        .link(5)
        .unwrap()
}

/// `n` planner demonstrations; every one reaches the goal.
pub fn expert_demos(env: &GridEnv, n: usize, seed: u64) -> Vec<Trajectory> {
    let expert = env.expert();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (t, ok) = rollout_with_outcome(&expert, env, &mut rng);
            assert!(ok, "planner failed");
            t
        })
        .collect()
}

pub fn uniform_rollouts(env: &dyn Env, n: usize, seed: u64) -> Vec<Trajectory> {
    let p = PolicyTable::uniform(env.n_states(), env.n_actions(), 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rollout(&p, env, &mut rng)).collect()
}

pub fn toy_program(mdp: &TabularMdp) -> impl Fn(&Trajectory) -> f64 + Sync {
    let s = parse_sketch(TOY_SKETCH, mdp.vocabulary().clone()).unwrap();
    move |t: &Trajectory| total_reward(&s, &TOY_HOLES, t).unwrap()
}

pub fn vocab_abc() -> Arc<sketchreward::dsl::Vocabulary> {
    Arc::new(sketchreward::dsl::Vocabulary::new(["a", "b", "c"]).unwrap())
}
pub mod gen;
pub mod oracles;

/// Hole vectors with the DoorKey predicates (c1..c5) each satisfies.
pub const DOORKEY_CASES: [([f64; 5], [bool; 5]); 7] = [
    // a sensible assignment
    ([1.0, 0.5, -0.6, 0.2, -0.3], [true; 5]),
    // unlock pays more than the goal
    ([1.0, 1.5, -1.6, 0.2, -0.3], [false, true, true, true, true]),
    // dropping the key after picking it up pays
    ([1.0, 0.5, -0.6, 0.4, -0.3], [true, false, true, true, true]),
    // pickup beats unlock
    ([1.0, 0.5, -0.6, 0.7, -0.8], [true, true, false, true, true]),
    // closing the door is rewarded
    ([1.0, 0.5, 0.1, 0.2, -0.3], [true, true, true, false, false]),
    // closing is penalised less than unlocking pays
    ([1.0, 0.5, -0.2, 0.2, -0.3], [true, true, true, true, false]),
    // all zero sits on every boundary, which counts as satisfied
    ([0.0; 5], [true; 5]),
];

/// Which DoorKey predicates hold at `h`, in file order.
pub fn doorkey_predicates(h: &[f64]) -> Vec<bool> {
    let file = parse_constraints(DOORKEY_CONSTRAINT).unwrap();
    file.predicates
        .iter()
        .map(|p| sketchreward::constraint::is_satisfied(&p.to_constraint().padded(5), h))
        .collect()
}
