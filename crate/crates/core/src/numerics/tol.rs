use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Central registry of numerical thresholds. Every report records the
/// registry it was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Eigenvalues with modulus below `zero_tol * ||A||` form the zero cluster;
    /// also the relative singular-value threshold for corank decisions.
    pub zero_tol: f64,
    /// Real parts within `realpart_tol * ||A||` of zero count as critical.
    pub realpart_tol: f64,
    /// Relative threshold for transversality scalars and tree-sum vanishing.
    pub trans_tol: f64,
    /// Relative residual bound for the generalized eigenvector solve.
    pub lsq_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Residual bound when sampling the equilibrium line.
    pub line_tol: f64,
    /// Half-width of the symmetric sampling grid along the equilibrium line.
    pub line_halfwidth: f64,
    pub line_samples: usize,
    /// Width in decades of the inconclusive band centred on each threshold.
    pub margin_decades: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero_tol: 1e-7,
            realpart_tol: 1e-7,
            trans_tol: 1e-6,
            lsq_tol: 1e-8,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            line_tol: 1e-9,
            line_halfwidth: 0.1,
            line_samples: 9,
            margin_decades: 1.0,
        }
    }
}

/// Outcome of comparing a nonnegative magnitude against a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Below,
    Marginal,
    Above,
}

impl Tolerances {
    /// Multiplicative half-width of the inconclusive band.
    pub fn margin_factor(&self) -> f64 {
        10f64.powf(self.margin_decades / 2.0)
    }

    /// Places `value` relative to `threshold` with the margin band applied.
    pub fn band(&self, value: f64, threshold: f64) -> Band {
        let f = self.margin_factor();
        if !value.is_finite() {
            Band::Above
        } else if value <= threshold / f {
            Band::Below
        } else if value >= threshold * f {
            Band::Above
        } else {
            Band::Marginal
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::Evaluation(format!("invalid value `{value}` for tolerance `{key}`"));
        let real = || {
            value
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(bad)
        };
        let count = || value.trim().parse::<usize>().map_err(|_| bad());
        match key.trim() {
            "zero_tol" => self.zero_tol = real()?,
            "realpart_tol" => self.realpart_tol = real()?,
            "trans_tol" => self.trans_tol = real()?,
            "lsq_tol" => self.lsq_tol = real()?,
            "newton_tol" => self.newton_tol = real()?,
            "newton_max_iter" => self.newton_max_iter = count()?,
            "line_tol" => self.line_tol = real()?,
            "line_halfwidth" => self.line_halfwidth = real()?,
            "line_samples" => self.line_samples = count()?,
            "margin_decades" => self.margin_decades = real()?,
            other => return Err(Error::Evaluation(format!("unknown tolerance `{other}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Syntax {
                line: idx + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(key, value).map_err(|e| Error::Syntax {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }
}
