//! Symbolic constraints over hole assignments: linear atoms `u(h) <= 0`
//! combined with not/and/or, plus the smooth penalty used during learning.

mod parse;

pub use parse::{parse_constraints, ConstraintFile, Predicate};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintError {
    #[error("{line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("line {line}: ?{id} is not a hole of the sketch (it has {n_holes})")]
    UnknownHole {
        line: usize,
        id: usize,
        n_holes: usize,
    },
    #[error("the soft penalty needs a conjunction of atoms")]
    NotConjunctive,
    #[error("hole assignment has {found} values, constraint expects {expected}")]
    AssignmentLength { expected: usize, found: usize },
}

/// Linear predicate `coeffs . h + offset <= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Atom {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    /// `u(h)`; missing trailing coefficients count as zero.
    pub fn u(&self, h: &[f64]) -> f64 {
        self.coeffs.iter().zip(h).map(|(c, x)| c * x).sum::<f64>() + self.offset
    }

    pub fn holds(&self, h: &[f64]) -> bool {
        self.u(h) <= 0.0
    }

    fn padded(&self, n: usize) -> Atom {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(n, 0.0);
        Atom {
            coeffs,
            offset: self.offset,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Atom(Atom),
    Not(Box<Constraint>),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
}

impl Constraint {
    pub fn and(cs: impl IntoIterator<Item = Constraint>) -> Self {
        Constraint::And(cs.into_iter().collect())
    }

    pub fn or(cs: impl IntoIterator<Item = Constraint>) -> Self {
        Constraint::Or(cs.into_iter().collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Constraint) -> Self {
        Constraint::Not(Box::new(c))
    }

    /// Highest hole id any atom gives a nonzero coefficient to.
    pub fn max_hole(&self) -> usize {
        match self {
            Constraint::Atom(a) => a
                .coeffs
                .iter()
                .rposition(|c| *c != 0.0)
                .map_or(0, |i| i + 1),
            Constraint::Not(c) => c.max_hole(),
            Constraint::And(cs) | Constraint::Or(cs) => {
                cs.iter().map(Constraint::max_hole).max().unwrap_or(0)
            }
        }
    }

    /// Atoms of a (possibly nested) conjunction, or `None` if a `Not` or
    /// `Or` appears anywhere.
    pub fn conjunctive_atoms(&self) -> Option<Vec<&Atom>> {
        fn walk<'a>(c: &'a Constraint, out: &mut Vec<&'a Atom>) -> bool {
            match c {
                Constraint::Atom(a) => {
                    out.push(a);
                    true
                }
                Constraint::And(cs) => cs.iter().all(|c| walk(c, out)),
                Constraint::Not(_) | Constraint::Or(_) => false,
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out).then_some(out)
    }

    /// Rewrites every atom to exactly `n` coefficients.
    pub fn padded(&self, n: usize) -> Constraint {
        match self {
            Constraint::Atom(a) => Constraint::Atom(a.padded(n)),
            Constraint::Not(c) => Constraint::not(c.padded(n)),
            Constraint::And(cs) => Constraint::And(cs.iter().map(|c| c.padded(n)).collect()),
            Constraint::Or(cs) => Constraint::Or(cs.iter().map(|c| c.padded(n)).collect()),
        }
    }
}

/// `+1` when the constraint holds at `h`, `-1` otherwise. `And` takes the
/// minimum of its children (vacuously `+1`), `Or` the maximum (`-1` when
/// empty).
pub fn eval_constraint(c: &Constraint, h: &[f64]) -> f64 {
    match c {
        Constraint::Atom(a) => {
            if a.holds(h) {
                1.0
            } else {
                -1.0
            }
        }
        Constraint::Not(inner) => -eval_constraint(inner, h),
        Constraint::And(cs) => cs.iter().map(|c| eval_constraint(c, h)).fold(1.0, f64::min),
        Constraint::Or(cs) => cs
            .iter()
            .map(|c| eval_constraint(c, h))
            .fold(-1.0, f64::max),
    }
}

pub fn is_satisfied(c: &Constraint, h: &[f64]) -> bool {
    eval_constraint(c, h) >= 0.0
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of `sigmoid(relu(u_i))` against target 0, summed
/// over the atoms. Each satisfied atom contributes `ln 2`.
pub fn soft_penalty(c: &Constraint, h: &[f64]) -> Result<f64, ConstraintError> {
    let atoms = c
        .conjunctive_atoms()
        .ok_or(ConstraintError::NotConjunctive)?;
    Ok(atoms.iter().map(|a| softplus(a.u(h).max(0.0))).sum())
}

/// Gradient of [`soft_penalty`] with respect to `h`. At the relu kink
/// (`u = 0`) the zero subgradient is used.
pub fn grad_soft_penalty(c: &Constraint, h: &[f64]) -> Result<Vec<f64>, ConstraintError> {
    let atoms = c
        .conjunctive_atoms()
        .ok_or(ConstraintError::NotConjunctive)?;
    let mut g = vec![0.0; h.len()];
    for a in atoms {
        let u = a.u(h);
        if u > 0.0 {
            let s = sigmoid(u);
            for (gi, ci) in g.iter_mut().zip(&a.coeffs) {
                *gi += s * ci;
            }
        }
    }
    Ok(g)
}

/// `sum_i relu(u_i(h))`: zero exactly on the feasible set.
pub fn violation(c: &Constraint, h: &[f64]) -> Result<f64, ConstraintError> {
    let atoms = c
        .conjunctive_atoms()
        .ok_or(ConstraintError::NotConjunctive)?;
    Ok(atoms.iter().map(|a| a.u(h).max(0.0)).sum())
}

/// `max_i u_i(h)`; nonpositive iff every atom holds. `-inf` for an empty
/// conjunction.
pub fn margin(c: &Constraint, h: &[f64]) -> Result<f64, ConstraintError> {
    let atoms = c
        .conjunctive_atoms()
        .ok_or(ConstraintError::NotConjunctive)?;
    Ok(atoms
        .iter()
        .map(|a| a.u(h))
        .fold(f64::NEG_INFINITY, f64::max))
}
