//! Lexer and recursive-descent parser for `.rsk` sketch sources.
//!
//! ```text
//! sketch   := "fn" "(" IDENT ")" "{" expr "}"
//! expr     := "if" cmp "then" expr "else" expr
//!           | "match" "token" "{" arm ("," arm)* ","? "}"
//!           | additive
//! cmp      := additive ("<=" | "<" | ">=" | ">" | "==") additive
//! additive := term (("+" | "-") term)*
//! term     := unary ("*" unary)*
//! unary    := "-" NUMBER | "-" unary | atom
//! atom     := NUMBER | HOLE | "count" "(" IDENT ")" | "count_inclusive" "(" IDENT ")"
//!           | "step" | "len" | "(" expr ")" | "if" ... | "match" ...
//! arm      := (IDENT | "_") "=>" expr          // "_" must be the last arm
//! ```

use std::sync::Arc;

use super::ast::{BinOp, CmpOp, Expr, Sketch};
use super::vocab::Vocabulary;
use super::DslError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Hole(usize),
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    FatArrow,
    Plus,
    Minus,
    Star,
    Cmp(CmpOp),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number {n}"),
            Tok::Hole(h) => format!("hole ?{h}"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Cmp(op) => format!("`{}`", op.symbol()),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Spanned>, DslError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| DslError::Syntax { line, col, msg };

    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                advance(1, &mut i, &mut col);
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            _ => {}
        }
        let tok = match c {
            '(' => {
                advance(1, &mut i, &mut col);
                Tok::LParen
            }
            ')' => {
                advance(1, &mut i, &mut col);
                Tok::RParen
            }
            '{' => {
                advance(1, &mut i, &mut col);
                Tok::LBrace
            }
            '}' => {
                advance(1, &mut i, &mut col);
                Tok::RBrace
            }
            ',' => {
                advance(1, &mut i, &mut col);
                Tok::Comma
            }
            '+' => {
                advance(1, &mut i, &mut col);
                Tok::Plus
            }
            '-' => {
                advance(1, &mut i, &mut col);
                Tok::Minus
            }
            '*' => {
                advance(1, &mut i, &mut col);
                Tok::Star
            }
            '=' if chars.get(i + 1) == Some(&'>') => {
                advance(2, &mut i, &mut col);
                Tok::FatArrow
            }
            '=' if chars.get(i + 1) == Some(&'=') => {
                advance(2, &mut i, &mut col);
                Tok::Cmp(CmpOp::Eq)
            }
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                let op = match (c, eq) {
                    ('<', true) => CmpOp::Le,
                    ('<', false) => CmpOp::Lt,
                    ('>', true) => CmpOp::Ge,
                    _ => CmpOp::Gt,
                };
                advance(if eq { 2 } else { 1 }, &mut i, &mut col);
                Tok::Cmp(op)
            }
            '?' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j == start {
                    return Err(err(line, col, "expected hole number after `?`".into()));
                }
                let text: String = chars[start..j].iter().collect();
                let id: usize = text
                    .parse()
                    .map_err(|_| err(line, col, format!("hole number `{text}` out of range")))?;
                if id == 0 {
                    return Err(err(line, col, "hole ids start at ?1".into()));
                }
                advance(j - i, &mut i, &mut col);
                Tok::Hole(id)
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '-' || chars[k] == '+') {
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
                let value: f64 = text
                    .parse()
                    .map_err(|_| err(line, col, format!("bad number `{text}`")))?;
                if !value.is_finite() {
                    return Err(err(line, col, format!("number `{text}` is not finite")));
                }
                advance(j - i, &mut i, &mut col);
                Tok::Number(value)
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                advance(j - i, &mut i, &mut col);
                Tok::Ident(text)
            }
            other => return Err(err(line, col, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned {
            tok,
            line: start_line,
            col: start_col,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    pos: usize,
    vocab: &'a Vocabulary,
    next_hole: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> Result<T, DslError> {
        let (line, col) = self.here();
        Err(DslError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), DslError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            ))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), DslError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            other => self.error(format!("expected `{kw}`, found {}", other.describe())),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn sketch(&mut self) -> Result<Expr, DslError> {
        self.expect_keyword("fn")?;
        self.expect(Tok::LParen)?;
        match self.bump() {
            Tok::Ident(_) => {}
            other => {
                self.pos -= 1;
                return self.error(format!(
                    "expected parameter name, found {}",
                    other.describe()
                ));
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let body = self.expr()?;
        self.expect(Tok::RBrace)?;
        if *self.peek() != Tok::Eof {
            return self.error(format!(
                "unexpected {} after sketch body",
                self.peek().describe()
            ));
        }
        Ok(body)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        if self.at_keyword("if") {
            self.if_expr()
        } else if self.at_keyword("match") {
            self.match_expr()
        } else {
            self.additive()
        }
    }

    fn if_expr(&mut self) -> Result<Expr, DslError> {
        self.expect_keyword("if")?;
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::Cmp(op) => *op,
            other => return self.error(format!("expected comparison, found {}", other.describe())),
        };
        self.bump();
        let rhs = self.additive()?;
        self.expect_keyword("then")?;
        let then = self.expr()?;
        self.expect_keyword("else")?;
        let els = self.expr()?;
        Ok(Expr::if_then_else(op, lhs, rhs, then, els))
    }

    fn match_expr(&mut self) -> Result<Expr, DslError> {
        self.expect_keyword("match")?;
        self.expect_keyword("token")?;
        self.expect(Tok::LBrace)?;
        let mut arms = Vec::new();
        let mut default = None;
        loop {
            if *self.peek() == Tok::RBrace {
                break;
            }
            if default.is_some() {
                return self.error("the `_` arm must be the last arm");
            }
            let (line, col) = self.here();
            let name = match self.bump() {
                Tok::Ident(s) => s,
                other => {
                    self.pos -= 1;
                    return self.error(format!(
                        "expected token name or `_`, found {}",
                        other.describe()
                    ));
                }
            };
            self.expect(Tok::FatArrow)?;
            let body = self.expr()?;
            if name == "_" {
                default = Some(body);
            } else {
                let token = self.vocab.lookup(&name).ok_or(DslError::UnknownToken {
                    line,
                    col,
                    name: name.clone(),
                })?;
                if arms.iter().any(|(t, _)| *t == token) {
                    return Err(DslError::DuplicateArm { line, col, name });
                }
                arms.push((token, body));
            }
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(Expr::TokenMatch {
            arms,
            default: Box::new(default.unwrap_or(Expr::Const(0.0))),
        })
    }

    fn additive(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(BinOp::Mul, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            if let Tok::Number(n) = *self.peek() {
                self.bump();
                return Ok(Expr::Const(-n));
            }
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn token_arg(&mut self) -> Result<super::Token, DslError> {
        self.expect(Tok::LParen)?;
        let (line, col) = self.here();
        let name = match self.bump() {
            Tok::Ident(s) => s,
            other => {
                self.pos -= 1;
                return self.error(format!("expected token name, found {}", other.describe()));
            }
        };
        let token = self
            .vocab
            .lookup(&name)
            .ok_or(DslError::UnknownToken { line, col, name })?;
        self.expect(Tok::RParen)?;
        Ok(token)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::Hole(id) => {
                if id == self.next_hole {
                    self.next_hole += 1;
                } else if id > self.next_hole {
                    return Err(DslError::HoleOrder {
                        line,
                        col,
                        found: id,
                        expected: self.next_hole,
                    });
                }
                self.bump();
                Ok(Expr::Hole(id))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                "count" | "count_inclusive" => {
                    self.bump();
                    let token = self.token_arg()?;
                    Ok(Expr::Count {
                        token,
                        inclusive: s == "count_inclusive",
                    })
                }
                "step" => {
                    self.bump();
                    Ok(Expr::StepIndex)
                }
                "len" => {
                    self.bump();
                    Ok(Expr::Len)
                }
                "if" => self.if_expr(),
                "match" => self.match_expr(),
                _ => self.error(format!("unexpected `{s}` in expression")),
            },
            other => self.error(format!("unexpected {} in expression", other.describe())),
        }
    }
}

/// Parses sketch source against a token vocabulary.
pub fn parse_sketch(src: &str, vocab: Arc<Vocabulary>) -> Result<Sketch, DslError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        vocab: &vocab,
        next_hole: 1,
    };
    let body = p.sketch()?;
    Sketch::new(body, vocab)
}
