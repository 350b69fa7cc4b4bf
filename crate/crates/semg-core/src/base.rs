//! Numeric conventions shared across the crate: log base handling, the zero
//! threshold for probabilities inside logarithms, and safe log/entropy helpers.
//!
//! All quantities are computed internally in bits (base-2 logs). [`LogBase`]
//! converts finished values to natural-log units at the reporting boundary.

use serde::{Deserialize, Serialize};

/// Probabilities below this are treated as exactly zero inside log expressions.
pub const EPS: f64 = 1e-12;

/// Default tolerance for "sums to one" validation.
pub const NORM_TOL: f64 = 1e-9;

/// ln(2), used to convert between bits and nats.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Unit for reported logarithmic quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LogBase {
    /// Base-2 logs; information in bits. The default everywhere.
    #[default]
    #[serde(rename = "2")]
    Bits,
    /// Natural logs; information in nats.
    #[serde(rename = "e")]
    Nats,
}

impl LogBase {
    /// Parse from the `SEMG_LOG_BASE` environment-variable convention (`2` or `e`).
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "2" => Some(LogBase::Bits),
            "e" | "E" => Some(LogBase::Nats),
            _ => None,
        }
    }

    /// Multiplier converting a value measured in bits into this base.
    pub fn factor_from_bits(self) -> f64 {
        match self {
            LogBase::Bits => 1.0,
            LogBase::Nats => LN_2,
        }
    }

    /// Convert a quantity measured in bits (possibly infinite) into this base.
    pub fn from_bits(self, bits: f64) -> f64 {
        match self {
            LogBase::Bits => bits,
            LogBase::Nats => bits * LN_2,
        }
    }

    /// log of `x` in this base; `x <= EPS` maps to `-inf`.
    pub fn log(self, x: f64) -> f64 {
        if x <= EPS {
            return f64::NEG_INFINITY;
        }
        match self {
            LogBase::Bits => x.log2(),
            LogBase::Nats => x.ln(),
        }
    }

    /// Inverse of [`LogBase::log`]; `-inf` maps to 0.
    pub fn exp(self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match self {
            LogBase::Bits => x.exp2(),
            LogBase::Nats => x.exp(),
        }
    }
}

/// log2(x) with the crate's zero convention: `x <= EPS` gives `-inf`.
pub fn log2z(x: f64) -> f64 {
    if x <= EPS {
        f64::NEG_INFINITY
    } else {
        x.log2()
    }
}

/// log2(a/b) with zero conventions: both the numerator and the denominator are
/// clamped to zero below [`EPS`]. `a = 0` gives `-inf`; `b = 0` with `a > 0`
/// gives `+inf`; `0/0` gives `-inf` (the caller decides whether that cell is
/// weighted at all).
pub fn log2_ratio(a: f64, b: f64) -> f64 {
    let az = a <= EPS;
    let bz = b <= EPS;
    match (az, bz) {
        (true, _) => f64::NEG_INFINITY,
        (false, true) => f64::INFINITY,
        (false, false) => (a / b).log2(),
    }
}

/// `w * log2(a/b)` with the convention that a zero weight kills the term even
/// when the log is infinite.
pub fn wlog2_ratio(w: f64, a: f64, b: f64) -> f64 {
    if w <= EPS {
        0.0
    } else {
        w * log2_ratio(a, b)
    }
}

/// Shannon entropy of a probability vector, in bits.
pub fn entropy_bits(p: &[f64]) -> f64 {
    p.iter()
        .map(|&pi| if pi <= EPS { 0.0 } else { -pi * pi.log2() })
        .sum()
}

/// KL divergence KL(p || q) in bits. Returns `+inf` when p has mass where q
/// does not.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| wlog2_ratio(pi, pi, qi))
        .sum()
}

/// Normalize a nonnegative vector in place to sum to one. Returns the original
/// sum; a sum of zero leaves the vector untouched.
pub fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
    s
}
