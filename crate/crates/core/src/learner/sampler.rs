use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::LearnerError;
use crate::dsl::{HoleAssignment, Program, Sketch};

const LN_2PI_E: f64 = 2.837_877_066_409_345_3; // ln(2 pi e)

/// Diagonal Gaussian over hole assignments plus a learned log-normaliser.
#[derive(Clone, Debug, PartialEq)]
pub struct HoleSampler {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
    pub log_z_hat: f64,
}

/// Score-function gradient with respect to `(mean, log_var)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerGrad {
    pub mean: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl SamplerGrad {
    pub fn zeros(n: usize) -> Self {
        Self {
            mean: vec![0.0; n],
            log_var: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len() + self.log_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn add_scaled(&mut self, other: &SamplerGrad, k: f64) {
        for (a, b) in self.mean.iter_mut().zip(&other.mean) {
            *a += k * b;
        }
        for (a, b) in self.log_var.iter_mut().zip(&other.log_var) {
            *a += k * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(&self.log_var).all(|x| x.is_finite())
    }
}

impl HoleSampler {
    /// Zero mean, unit variance, `log z_hat = 0`.
    pub fn new(n_holes: usize) -> Self {
        Self {
            mean: vec![0.0; n_holes],
            log_var: vec![0.0; n_holes],
            log_z_hat: 0.0,
        }
    }

    pub fn n_holes(&self) -> usize {
        self.mean.len()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.log_var)
            .map(|(m, lv)| {
                let z: f64 = StandardNormal.sample(rng);
                m + (0.5 * lv).exp() * z
            })
            .collect()
    }

    pub fn log_q(&self, h: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(&self.log_var)
            .zip(h)
            .map(|((m, lv), x)| {
                -0.5 * ((x - m).powi(2) / lv.exp() + lv + std::f64::consts::TAU.ln())
            })
            .sum()
    }

    /// `H(q) = sum_j (log_var_j + ln(2 pi e)) / 2`.
    pub fn entropy(&self) -> f64 {
        self.log_var.iter().map(|lv| 0.5 * (lv + LN_2PI_E)).sum()
    }

    /// `grad_{mean, log_var} log q(h)`.
    pub fn grad_log_q(&self, h: &[f64]) -> SamplerGrad {
        let mut g = SamplerGrad::zeros(self.n_holes());
        for j in 0..self.n_holes() {
            let var = self.log_var[j].exp();
            let d = h[j] - self.mean[j];
            g.mean[j] = d / var;
            g.log_var[j] = 0.5 * (d * d / var - 1.0);
        }
        g
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(&self.log_var).all(|x| x.is_finite()) && self.log_z_hat.is_finite()
    }
}

/// The mode of the sampler substituted into the sketch.
pub fn most_likely_program(
    sampler: &HoleSampler,
    sketch: &Sketch,
) -> Result<Program, LearnerError> {
    if sampler.n_holes() != sketch.n_holes() {
        return Err(LearnerError::Dimension {
            expected: sketch.n_holes(),
            found: sampler.n_holes(),
        });
    }
    let holes = HoleAssignment::new(sampler.mean.clone())?;
    Ok(Program::new(sketch.clone(), holes)?)
}

/// Score-function estimate `(1/K) sum_k grad log q(h_k) (v_k - b_k)` with
/// the leave-one-out baseline `b_k = mean_{j != k} v_j`.
pub fn grad_q_logtrick(
    sampler: &HoleSampler,
    samples: &[Vec<f64>],
    values: &[f64],
) -> Result<SamplerGrad, LearnerError> {
    let k = samples.len();
    if k < 2 {
        return Err(LearnerError::TooFewSamples(k));
    }
    if values.len() != k {
        return Err(LearnerError::Dimension {
            expected: k,
            found: values.len(),
        });
    }
    let total: f64 = values.iter().sum();
    let mut g = SamplerGrad::zeros(sampler.n_holes());
    for (h, v) in samples.iter().zip(values) {
        let baseline = (total - v) / (k - 1) as f64;
        g.add_scaled(&sampler.grad_log_q(h), (v - baseline) / k as f64);
    }
    Ok(g)
}
