//! Bayesian confirmation and causal confirmation from 2x2 contingency data.
//!
//! A rule y1 -> x1 decomposes into a crisp truth function weighted by a
//! credibility b1 plus a tautology remainder 1 - |b1|. Maximizing the
//! semantic KL information over b1 gives closed forms in the conditionals:
//! the channel confirmation b1* = (R+ - 1)/max(R+, 1) with R+ the positive
//! likelihood ratio, and the prediction confirmation c1* = (a - c)/max(a, c).
//! Negative degrees express inhibiting rules (the negated-rule credibility).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{semantic_bayes, Source};

/// Counts of a 2x2 contingency table. `a` pairs (x1, y1), `b` pairs (x1, y0),
/// `c` pairs (x0, y1), `d` pairs (x0, y0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Result<Self> {
        if a + b + c + d == 0 {
            return Err(Error::InvalidDistribution("empty contingency table".into()));
        }
        Ok(ContingencyTable { a, b, c, d })
    }

    pub fn total(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Sensitivity P(y1|x1) = a / (a + b).
    pub fn p_y1_given_x1(&self) -> Result<f64> {
        let n = self.a + self.b;
        if n == 0 {
            return Err(Error::UndefinedConditional("no x1 rows (a + b = 0)".into()));
        }
        Ok(self.a as f64 / n as f64)
    }

    /// False-positive rate P(y1|x0) = c / (c + d).
    pub fn p_y1_given_x0(&self) -> Result<f64> {
        let n = self.c + self.d;
        if n == 0 {
            return Err(Error::UndefinedConditional("no x0 rows (c + d = 0)".into()));
        }
        Ok(self.c as f64 / n as f64)
    }

    /// The prior over (x1, x0) from the table margins.
    pub fn x_prior(&self) -> Result<Source> {
        let n = self.total() as f64;
        Source::new(
            vec!["x1".into(), "x0".into()],
            vec![(self.a + self.b) as f64 / n, (self.c + self.d) as f64 / n],
        )
    }

    /// Positive likelihood ratio R+ = P(y1|x1) / P(y1|x0); `+inf` when the
    /// false-positive rate is zero.
    pub fn likelihood_ratio(&self) -> Result<f64> {
        let p1 = self.p_y1_given_x1()?;
        let p0 = self.p_y1_given_x0()?;
        if p0 == 0.0 && p1 == 0.0 {
            return Err(Error::UndefinedConditional("y1 never occurs".into()));
        }
        Ok(if p0 == 0.0 { f64::INFINITY } else { p1 / p0 })
    }
}

/// A rule's truth function as credibility times a crisp part plus a
/// tautology remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefTruthFunction {
    /// Crisp truth column T(y1|x) with entries in {0, 1}.
    pub crisp: Vec<f64>,
    /// Credibility b1 in [-1, 1]; negative values represent the negated rule.
    pub credibility: f64,
}

impl BeliefTruthFunction {
    pub fn new(crisp: Vec<f64>, credibility: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&credibility) {
            return Err(Error::BadConfig(format!(
                "credibility {credibility} outside [-1, 1]"
            )));
        }
        if crisp.iter().any(|&t| t != 0.0 && t != 1.0) {
            return Err(Error::BadConfig("crisp column must be 0/1".into()));
        }
        Ok(BeliefTruthFunction { crisp, credibility })
    }

    /// The degree of disbelief b1' = 1 - |b1|.
    pub fn disbelief(&self) -> f64 {
        1.0 - self.credibility.abs()
    }

    /// Composed truth function b1 T(y1|x) + b1', clipped into [0, 1].
    pub fn composed(&self) -> Vec<f64> {
        let bp = self.disbelief();
        self.crisp
            .iter()
            .map(|&t| (self.credibility * t + bp).clamp(0.0, 1.0))
            .collect()
    }
}

/// Channel confirmation degree b1* = (P(y1|x1) - P(y1|x0)) / max of the two
/// = (R+ - 1)/max(R+, 1).
pub fn channel_confirmation(t: &ContingencyTable) -> Result<f64> {
    let p1 = t.p_y1_given_x1()?;
    let p0 = t.p_y1_given_x0()?;
    let denom = p1.max(p0);
    if denom == 0.0 {
        return Err(Error::UndefinedConditional("y1 never occurs".into()));
    }
    Ok((p1 - p0) / denom)
}

/// Prediction confirmation degree c1* = (a - c)/max(a, c).
pub fn prediction_confirmation(t: &ContingencyTable) -> Result<f64> {
    if t.a + t.c == 0 {
        return Err(Error::UndefinedConditional(
            "no y1 columns (a + c = 0)".into(),
        ));
    }
    let (a, c) = (t.a as f64, t.c as f64);
    Ok((a - c) / a.max(c))
}

/// Causal probability P_d = max(0, (R+ - 1)/R+), the probability of
/// necessity in causal inference.
pub fn causal_probability(t: &ContingencyTable) -> Result<f64> {
    let p1 = t.p_y1_given_x1()?;
    let p0 = t.p_y1_given_x0()?;
    if p1 == 0.0 && p0 == 0.0 {
        return Err(Error::UndefinedConditional("y1 never occurs".into()));
    }
    if p1 == 0.0 {
        return Ok(0.0);
    }
    Ok(((p1 - p0) / p1).max(0.0))
}

/// Channel causal confirmation degree Cc = (R+ - 1)/max(R+, 1).
///
/// Arithmetically identical to [`channel_confirmation`]; the causal reading
/// requires the caller to supply interventional conditionals P(y1|do(x)) in
/// the table. Unlike P_d it goes negative for inhibiting causes.
pub fn causal_confirmation(t: &ContingencyTable) -> Result<f64> {
    channel_confirmation(t)
}

/// Probability prediction from a confirmation degree: semantic Bayes with the
/// composed truth function at b1 = degree. `base` orders its two points as
/// (x1, x0), matching [`ContingencyTable::x_prior`].
pub fn predict_with_confirmation(degree: f64, base: &Source) -> Result<Vec<f64>> {
    if base.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "confirmation prediction needs a 2-point base, got {}",
            base.len()
        )));
    }
    let belief = BeliefTruthFunction::new(vec![1.0, 0.0], degree)?;
    let (posterior, _) = semantic_bayes(base, &belief.composed())?;
    Ok(posterior)
}
