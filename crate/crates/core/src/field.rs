//! A small text format for polynomial vector fields:
//!
//! ```text
//! # x' = y, y' = x y
//! vars x y
//! dx = y
//! dy = x*y
//! at 0 0        # optional equilibrium
//! line 1 0      # optional line direction
//! ```
//!
//! Right-hand sides use `+ - * ^`, parentheses, decimal constants and the
//! declared variables; `^` takes a nonnegative integer exponent. The
//! Jacobian is computed exactly by forward-mode differentiation.

use nalgebra::{DMatrix, DVector};

use crate::analysis::VectorField;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    /// Value and gradient at `x`.
    fn eval<T: Scalar>(&self, x: &DVector<T>) -> (T, DVector<T>) {
        let n = x.len();
        match self {
            Expr::Const(c) => (T::lit(*c), DVector::zeros(n)),
            Expr::Var(k) => {
                let mut g = DVector::zeros(n);
                g[*k] = T::one();
                (x[*k], g)
            }
            Expr::Neg(a) => {
                let (v, g) = a.eval(x);
                (-v, -g)
            }
            Expr::Add(a, b) => {
                let ((va, ga), (vb, gb)) = (a.eval(x), b.eval(x));
                (va + vb, ga + gb)
            }
            Expr::Sub(a, b) => {
                let ((va, ga), (vb, gb)) = (a.eval(x), b.eval(x));
                (va - vb, ga - gb)
            }
            Expr::Mul(a, b) => {
                let ((va, ga), (vb, gb)) = (a.eval(x), b.eval(x));
                (va * vb, ga * vb + gb * va)
            }
            Expr::Pow(a, e) => {
                let (v, g) = a.eval(x);
                if *e == 0 {
                    return (T::one(), DVector::zeros(n));
                }
                let lower = v.powi(*e as i32 - 1);
                (lower * v, g * (lower * T::from_usize_lossy(*e as usize)))
            }
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
    line: usize,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
            let e = digits
                .parse::<u32>()
                .map_err(|_| self.err("exponent must be a nonnegative integer"))?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    let exp_sign =
                        (c == b'+' || c == b'-') && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                text.parse::<f64>()
                    .map(Expr::Const)
                    .map_err(|_| self.err(format!("invalid number `{text}`")))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                self.vars
                    .iter()
                    .position(|v| v == name)
                    .map(Expr::Var)
                    .ok_or_else(|| self.err(format!("unknown variable `{name}`")))
            }
            Some(c) => Err(self.err(format!("unexpected `{}`", c as char))),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

/// A parsed polynomial vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyField {
    vars: Vec<String>,
    rhs: Vec<Expr>,
    /// Point given by an `at` line.
    pub point: Option<Vec<f64>>,
    /// Direction given by a `line` line.
    pub line_direction: Option<Vec<f64>>,
}

impl PolyField {
    pub fn vars(&self) -> &[String] {
        &self.vars
    }
}

fn numbers(rest: &str, n: usize, line: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = rest
        .split_whitespace()
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Syntax {
            line,
            message: format!("`{what}` expects numbers"),
        })?;
    if v.len() != n {
        return Err(Error::Syntax {
            line,
            message: format!("`{what}` expects {n} numbers, got {}", v.len()),
        });
    }
    Ok(v)
}

pub fn parse_field(text: &str) -> Result<PolyField> {
    let mut vars: Option<Vec<String>> = None;
    let mut rhs: Vec<Option<Expr>> = Vec::new();
    let mut point = None;
    let mut line_direction = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (head, rest) = content
            .split_once(char::is_whitespace)
            .unwrap_or((content, ""));
        match (head, &vars) {
            ("vars", None) => {
                let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if names.is_empty() {
                    return Err(Error::Syntax {
                        line,
                        message: "`vars` needs at least one name".into(),
                    });
                }
                for (k, name) in names.iter().enumerate() {
                    let valid = name
                        .chars()
                        .next()
                        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                    if !valid || names[..k].contains(name) {
                        return Err(Error::Syntax {
                            line,
                            message: format!("invalid or repeated variable `{name}`"),
                        });
                    }
                }
                rhs = vec![None; names.len()];
                vars = Some(names);
            }
            ("vars", Some(_)) => {
                return Err(Error::Syntax {
                    line,
                    message: "`vars` given twice".into(),
                })
            }
            (_, None) => {
                return Err(Error::Syntax {
                    line,
                    message: "`vars` must come first".into(),
                })
            }
            ("at", Some(v)) => point = Some(numbers(rest, v.len(), line, "at")?),
            ("line", Some(v)) => line_direction = Some(numbers(rest, v.len(), line, "line")?),
            (_, Some(v)) => {
                let (lhs, expr) = content.split_once('=').ok_or_else(|| Error::Syntax {
                    line,
                    message: "expected `d<var> = <expression>`".into(),
                })?;
                let lhs = lhs.trim();
                let k = lhs
                    .strip_prefix('d')
                    .and_then(|name| v.iter().position(|x| x == name))
                    .ok_or_else(|| Error::Syntax {
                        line,
                        message: format!("`{lhs}` is not d<var> for a declared variable"),
                    })?;
                if rhs[k].is_some() {
                    return Err(Error::Syntax {
                        line,
                        message: format!("`{lhs}` defined twice"),
                    });
                }
                let mut p = Parser {
                    src: expr.as_bytes(),
                    pos: 0,
                    vars: v,
                    line,
                };
                let e = p.expr()?;
                if p.peek().is_some() {
                    return Err(p.err("trailing input after expression"));
                }
                rhs[k] = Some(e);
            }
        }
    }
    let vars = vars.ok_or(Error::Syntax {
        line: 1,
        message: "missing `vars` line".into(),
    })?;
    let rhs = rhs
        .into_iter()
        .zip(&vars)
        .map(|(e, name)| {
            e.ok_or_else(|| Error::Syntax {
                line: text.lines().count().max(1),
                message: format!("missing equation `d{name} = ...`"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PolyField {
        vars,
        rhs,
        point,
        line_direction,
    })
}

impl<T: Scalar> VectorField<T> for PolyField {
    fn dim(&self) -> usize {
        self.vars.len()
    }

    fn eval(&self, x: &DVector<T>) -> Result<DVector<T>> {
        check_len(x, self.vars.len())?;
        Ok(DVector::from_iterator(
            self.rhs.len(),
            self.rhs.iter().map(|e| e.eval(x).0),
        ))
    }

    fn jacobian(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        check_len(x, self.vars.len())?;
        let n = self.vars.len();
        let mut j = DMatrix::zeros(n, n);
        for (i, e) in self.rhs.iter().enumerate() {
            j.set_row(i, &e.eval(x).1.transpose());
        }
        Ok(j)
    }
}

fn check_len<T: Scalar>(x: &DVector<T>, n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Dimension(format!(
            "field has {n} variables, point has {}",
            x.len()
        )));
    }
    Ok(())
}
