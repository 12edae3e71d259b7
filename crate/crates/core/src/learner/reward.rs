use crate::trajectory::Step;

/// Per-state score table; `f(s, a) = log softmax(scores[s])[a]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardModel {
    n_states: usize,
    n_actions: usize,
    scores: Vec<f64>,
}

impl RewardModel {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            scores: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn scores_mut(&mut self) -> &mut [f64] {
        &mut self.scores
    }

    fn row(&self, s: usize) -> &[f64] {
        &self.scores[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn softmax(&self, s: usize) -> Vec<f64> {
        let row = self.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = row.iter().map(|x| (x - max).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }

    pub fn f(&self, s: usize, a: usize) -> f64 {
        let row = self.row(s);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        row[a] - lse
    }

    pub fn f_steps(&self, steps: &[Step]) -> Vec<f64> {
        steps
            .iter()
            .map(|st| self.f(st.state as usize, st.action as usize))
            .collect()
    }

    /// Adds `coef * grad_scores f(s, a)` into `grad`, which is laid out like
    /// the score table.
    pub fn accumulate_grad(&self, grad: &mut [f64], s: usize, a: usize, coef: f64) {
        if coef == 0.0 {
            return;
        }
        let p = self.softmax(s);
        let row = &mut grad[s * self.n_actions..(s + 1) * self.n_actions];
        for (b, g) in row.iter_mut().enumerate() {
            *g += coef * (f64::from(u8::from(b == a)) - p[b]);
        }
    }

    /// `scores += step * grad`.
    pub fn ascend(&mut self, grad: &[f64], step: f64) {
        for (s, g) in self.scores.iter_mut().zip(grad) {
            *s += step * g;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.scores.iter().all(|x| x.is_finite())
    }
}
