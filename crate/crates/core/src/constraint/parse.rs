//! `.rsc` constraint files. One predicate per line; the file is the
//! conjunction of its lines.
//!
//! ```text
//! line  := [label ":"] ineq ("&&" ineq)*
//! ineq  := lin ("<=" | ">=") lin
//! lin   := ["-"] term (("+" | "-") term)*
//! term  := NUMBER ["*" HOLE] | HOLE ["*" NUMBER]
//! ```
//!
//! `#` starts a comment. Each inequality is normalised to `u(h) <= 0`.

use super::{Atom, Constraint, ConstraintError};

#[derive(Clone, Debug, PartialEq)]
pub struct Predicate {
    pub label: Option<String>,
    pub line: usize,
    pub atoms: Vec<Atom>,
}

impl Predicate {
    pub fn to_constraint(&self) -> Constraint {
        match self.atoms.as_slice() {
            [a] => Constraint::Atom(a.clone()),
            atoms => Constraint::And(atoms.iter().cloned().map(Constraint::Atom).collect()),
        }
    }
}

/// A parsed constraint file, not yet bound to a sketch.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintFile {
    pub predicates: Vec<Predicate>,
}

impl ConstraintFile {
    pub fn n_predicates(&self) -> usize {
        self.predicates.len()
    }

    pub fn n_atoms(&self) -> usize {
        self.predicates.iter().map(|p| p.atoms.len()).sum()
    }

    /// Highest hole id mentioned with a nonzero coefficient.
    pub fn max_hole(&self) -> usize {
        self.predicates
            .iter()
            .map(|p| p.to_constraint().max_hole())
            .max()
            .unwrap_or(0)
    }

    /// Binds the file to a sketch with `n_holes` holes.
    pub fn link(&self, n_holes: usize) -> Result<Constraint, ConstraintError> {
        let mut preds = Vec::with_capacity(self.predicates.len());
        for p in &self.predicates {
            let c = p.to_constraint();
            let id = c.max_hole();
            if id > n_holes {
                return Err(ConstraintError::UnknownHole {
                    line: p.line,
                    id,
                    n_holes,
                });
            }
            preds.push(c.padded(n_holes));
        }
        Ok(Constraint::And(preds))
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Hole(usize),
    Plus,
    Minus,
    Star,
    Le,
    Ge,
    AndAnd,
}

struct LineParser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl LineParser {
    fn err<T>(&self, col: usize, msg: impl Into<String>) -> Result<T, ConstraintError> {
        Err(ConstraintError::Syntax {
            line: self.line,
            col,
            msg: msg.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    /// Returns sparse `(hole -> coeff)` plus a constant.
    fn lin(&mut self) -> Result<(Vec<f64>, f64), ConstraintError> {
        let mut coeffs = Vec::new();
        let mut offset = 0.0;
        let mut sign = 1.0;
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            sign = -1.0;
        }
        loop {
            self.term(sign, &mut coeffs, &mut offset)?;
            sign = match self.peek() {
                Some(Tok::Plus) => 1.0,
                Some(Tok::Minus) => -1.0,
                _ => return Ok((coeffs, offset)),
            };
            self.pos += 1;
        }
    }

    fn term(
        &mut self,
        sign: f64,
        coeffs: &mut Vec<f64>,
        offset: &mut f64,
    ) -> Result<(), ConstraintError> {
        let col = self.col();
        let add = |coeffs: &mut Vec<f64>, id: usize, k: f64| {
            if coeffs.len() < id {
                coeffs.resize(id, 0.0);
            }
            coeffs[id - 1] += k;
        };
        match self.peek().cloned() {
            Some(Tok::Num(k)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Star) {
                    self.pos += 1;
                    match self.peek().cloned() {
                        Some(Tok::Hole(id)) => {
                            self.pos += 1;
                            add(coeffs, id, sign * k);
                        }
                        _ => return self.err(self.col(), "expected a hole after `*`"),
                    }
                } else {
                    *offset += sign * k;
                }
            }
            Some(Tok::Hole(id)) => {
                self.pos += 1;
                let mut k = 1.0;
                if self.peek() == Some(&Tok::Star) {
                    self.pos += 1;
                    match self.peek().cloned() {
                        Some(Tok::Num(n)) => {
                            self.pos += 1;
                            k = n;
                        }
                        _ => return self.err(self.col(), "expected a number after `*`"),
                    }
                }
                add(coeffs, id, sign * k);
            }
            _ => return self.err(col, "expected a number or a hole"),
        }
        Ok(())
    }

    fn ineq(&mut self) -> Result<Atom, ConstraintError> {
        let (lc, lo) = self.lin()?;
        let col = self.col();
        let flip = match self.peek() {
            Some(Tok::Le) => false,
            Some(Tok::Ge) => true,
            _ => return self.err(col, "expected `<=` or `>=`"),
        };
        self.pos += 1;
        let (rc, ro) = self.lin()?;
        let n = lc.len().max(rc.len());
        let get = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        // lhs <= rhs  ->  lhs - rhs <= 0;  lhs >= rhs  ->  rhs - lhs <= 0
        let s = if flip { -1.0 } else { 1.0 };
        let coeffs = (0..n).map(|i| s * (get(&lc, i) - get(&rc, i))).collect();
        Ok(Atom::new(coeffs, s * (lo - ro)))
    }
}

fn lex_line(
    text: &str,
    line: usize,
    base_col: usize,
) -> Result<Vec<(Tok, usize)>, ConstraintError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ConstraintError::Syntax { line, col, msg };
    while i < chars.len() {
        let c = chars[i];
        let col = base_col + i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let two = chars.get(i + 1).copied();
        let (tok, width) = match (c, two) {
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('<', _) | ('>', _) => {
                return Err(err(
                    col,
                    "strict comparisons are not supported; use `<=` or `>=`".into(),
                ))
            }
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('?', _) => {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let text: String = chars[i + 1..j].iter().collect();
                match text.parse::<usize>() {
                    Ok(id) if id >= 1 => (Tok::Hole(id), j - i),
                    _ => return Err(err(col, "expected a hole id like `?1`".into())),
                }
            }
            (c, _) if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text: String = chars[i..j].iter().collect();
                match text.parse::<f64>() {
                    Ok(v) if v.is_finite() => (Tok::Num(v), j - i),
                    _ => return Err(err(col, format!("bad number `{text}`"))),
                }
            }
            (c, _) => return Err(err(col, format!("unexpected character `{c}`"))),
        };
        out.push((tok, col));
        i += width;
    }
    Ok(out)
}

pub fn parse_constraints(src: &str) -> Result<ConstraintFile, ConstraintError> {
    let mut predicates = Vec::new();
    for (idx, raw) in src.lines().enumerate() {
        let line = idx + 1;
        let text = raw.split('#').next().unwrap_or("");
        if text.trim().is_empty() {
            continue;
        }
        let (label, body, base_col) = match text.find(':') {
            Some(p) => {
                let label = text[..p].trim();
                let ok = !label.is_empty()
                    && label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !ok {
                    return Err(ConstraintError::Syntax {
                        line,
                        col: 1,
                        msg: format!("bad label `{label}`"),
                    });
                }
                (Some(label.to_string()), &text[p + 1..], p + 2)
            }
            None => (None, text, 1),
        };
        let toks = lex_line(body, line, base_col)?;
        let mut p = LineParser {
            toks,
            pos: 0,
            line,
            end_col: base_col + body.chars().count(),
        };
        let mut atoms = vec![p.ineq()?];
        while p.peek() == Some(&Tok::AndAnd) {
            p.pos += 1;
            atoms.push(p.ineq()?);
        }
        if p.pos < p.toks.len() {
            return p.err(p.col(), "unexpected input after inequality");
        }
        predicates.push(Predicate { label, line, atoms });
    }
    Ok(ConstraintFile { predicates })
}
