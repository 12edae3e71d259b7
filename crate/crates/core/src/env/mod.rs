//! Environments: the DoorKey gridworld and small explicit MDPs.

mod demos;
mod grid;
mod tabular;

use std::sync::Arc;

use rand::RngCore;

use crate::dsl::{Token, Vocabulary};
use crate::policy::Policy;
use crate::trajectory::{Step, Trajectory};

pub use demos::{load_demos, save_demos, DemoError, DemoSet};
pub use grid::{Action, Dir, DoorState, GridConfig, GridEnv, GridError, GridState};
pub use tabular::{enumerate_trajectories, MdpError, MdpSpec, TabularMdp, DEFAULT_ENUMERATION_CAP};

/// Result of one environment step.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub next: u32,
    pub token: Token,
    pub done: bool,
}

/// A finite-state episodic environment emitting one event token per step.
pub trait Env: Sync {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn vocabulary(&self) -> &Arc<Vocabulary>;
    /// Maximum number of steps per episode.
    fn horizon(&self) -> usize;
    fn reset(&self, rng: &mut dyn RngCore) -> u32;
    fn step(&self, state: u32, action: u32, rng: &mut dyn RngCore) -> Transition;
}

/// Runs one episode of `policy`; stops at the horizon or when the
/// environment reports the episode done.
pub fn rollout(policy: &dyn Policy, env: &dyn Env, rng: &mut dyn RngCore) -> Trajectory {
    rollout_with_outcome(policy, env, rng).0
}

/// Like [`rollout`], also reporting whether the episode ended because the
/// environment said so (reaching the goal, for the gridworld).
pub fn rollout_with_outcome(
    policy: &dyn Policy,
    env: &dyn Env,
    rng: &mut dyn RngCore,
) -> (Trajectory, bool) {
    let mut steps = Vec::new();
    let mut tokens = Vec::new();
    let mut log_pi = 0.0;
    let mut done = false;
    let mut s = env.reset(rng);
    for _ in 0..env.horizon() {
        let (a, lp) = policy.act(s, rng);
        let tr = env.step(s, a, rng);
        steps.push(Step::new(s, a));
        tokens.push(tr.token);
        log_pi += lp;
        s = tr.next;
        if tr.done {
            done = true;
            break;
        }
    }
    let t = Trajectory::new(steps, tokens, log_pi).expect("rollout builds consistent trajectories");
    (t, done)
}
