//! Capital growth entropy, the generalized Kelly ratio, risk and
//! investment-capacity measures, and the information value of probability
//! forecasts.
//!
//! The growth entropy H_g = sum_i P(x_i) log2 R_i(q) is the doubling rate of
//! a portfolio with output ratios R_i(q) = sum_k q_k R_ik; asset 0 is cash at
//! the risk-free ratio R_0 = 1 + r_0. An attainable outcome with R_i(q) <= 0
//! means ruin: H_g is then the `-inf` sentinel, never an error. Simplex
//! optimization is deterministic projected pairwise ascent; no RNG anywhere.

use serde::{Deserialize, Serialize};

use crate::base::{entropy_bits, log2z, EPS, NORM_TOL};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Outcome probabilities and the W x (N+1) return matrix; column 0 is the
/// risk-free asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    probs: Vec<f64>,
    returns: Mat,
    labels: Vec<String>,
}

impl PortfolioSpec {
    pub fn new(probs: Vec<f64>, returns: Mat, labels: Vec<String>) -> Result<Self> {
        if probs.len() != returns.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{} outcome probabilities, {} return rows",
                probs.len(),
                returns.rows()
            )));
        }
        if labels.len() != returns.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} asset labels, {} return columns",
                labels.len(),
                returns.cols()
            )));
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "outcome probabilities sum to {sum}"
            )));
        }
        if let Some((i, j, v)) = returns.check_entries(|v| v >= 0.0 && v.is_finite()) {
            return Err(Error::BadConfig(format!(
                "return ({i},{j}) = {v} negative or non-finite"
            )));
        }
        Ok(PortfolioSpec {
            probs,
            returns,
            labels,
        })
    }

    pub fn n_outcomes(&self) -> usize {
        self.probs.len()
    }

    pub fn n_assets(&self) -> usize {
        self.returns.cols()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn returns(&self) -> &Mat {
        &self.returns
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Total output ratios R_i(q) = sum_k q_k R_ik.
    pub fn total_returns(&self, ratios: &[f64]) -> Result<Vec<f64>> {
        validate_ratios(ratios, self.n_assets())?;
        Ok(self
            .returns
            .iter_rows()
            .map(|row| row.iter().zip(ratios).map(|(&r, &q)| q * r).sum())
            .collect())
    }
}

fn validate_ratios(ratios: &[f64], n_assets: usize) -> Result<()> {
    if ratios.len() != n_assets {
        return Err(Error::DimensionMismatch(format!(
            "{} ratios for {} assets",
            ratios.len(),
            n_assets
        )));
    }
    let sum: f64 = ratios.iter().sum();
    if ratios.iter().any(|&q| q < -NORM_TOL) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::BadConfig(format!(
            "ratios must be long-only and sum to 1 (sum = {sum})"
        )));
    }
    Ok(())
}

/// Capital growth entropy H_g = sum_i P_i log2 R_i(q), bits (the doubling
/// rate). Any attainable outcome with R_i(q) <= 0 gives `-inf`.
pub fn growth_entropy(spec: &PortfolioSpec, ratios: &[f64]) -> Result<f64> {
    let totals = spec.total_returns(ratios)?;
    Ok(growth_from_returns(&spec.probs, &totals))
}

fn growth_from_returns(probs: &[f64], totals: &[f64]) -> f64 {
    probs
        .iter()
        .zip(totals)
        .map(|(&p, &r)| {
            if p <= EPS {
                0.0
            } else if r <= 0.0 {
                f64::NEG_INFINITY
            } else {
                p * r.log2()
            }
        })
        .sum()
}

/// A two-outcome bet: lose fraction r1 or gain fraction r2 on the wagered
/// part, with the rest at the risk-free rate r0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetSpec {
    /// Probability of winning (P2).
    pub win_prob: f64,
    /// Loss fraction r1 > 0 on the wager when losing.
    pub loss_frac: f64,
    /// Gain fraction r2 > 0 on the wager when winning.
    pub gain_frac: f64,
    /// Risk-free rate r0 >= 0 on the unwagered part.
    pub risk_free: f64,
}

impl BetSpec {
    /// Limited-liability bet: requires r1 <= 1.
    pub fn new(win_prob: f64, loss_frac: f64, gain_frac: f64, risk_free: f64) -> Result<Self> {
        if loss_frac > 1.0 {
            return Err(Error::BadConfig(format!(
                "loss fraction {loss_frac} exceeds 1; use with_unlimited_liability"
            )));
        }
        BetSpec::with_unlimited_liability(win_prob, loss_frac, gain_frac, risk_free)
    }

    /// Same, but allows losing more than the wager (r1 > 1).
    pub fn with_unlimited_liability(
        win_prob: f64,
        loss_frac: f64,
        gain_frac: f64,
        risk_free: f64,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&win_prob) {
            return Err(Error::InvalidDistribution(format!(
                "win probability {win_prob}"
            )));
        }
        if !(loss_frac > 0.0) || !(gain_frac > 0.0) || risk_free < 0.0 {
            return Err(Error::BadConfig(format!(
                "need r1 > 0, r2 > 0, r0 >= 0 (got {loss_frac}, {gain_frac}, {risk_free})"
            )));
        }
        Ok(BetSpec {
            win_prob,
            loss_frac,
            gain_frac,
            risk_free,
        })
    }

    /// R0 = 1 + r0.
    pub fn risk_free_ratio(&self) -> f64 {
        1.0 + self.risk_free
    }

    /// d1 = r1 + r0: the loss spread against cash.
    pub fn d1(&self) -> f64 {
        self.loss_frac + self.risk_free
    }

    /// d2 = r2 - r0: the gain spread against cash.
    pub fn d2(&self) -> f64 {
        self.gain_frac - self.risk_free
    }

    /// Expected income E = P2 r2 - P1 r1 of the full bet.
    pub fn expected_income(&self) -> f64 {
        self.win_prob * self.gain_frac - (1.0 - self.win_prob) * self.loss_frac
    }

    /// Growth entropy at wager fraction q:
    /// P1 log2(R0 - q d1) + P2 log2(R0 + q d2), bits.
    pub fn growth_entropy_at(&self, q: f64) -> f64 {
        let p2 = self.win_prob;
        let p1 = 1.0 - p2;
        let lose = self.risk_free_ratio() - q * self.d1();
        let win = self.risk_free_ratio() + q * self.d2();
        let mut h = 0.0;
        if p1 > 0.0 {
            h += p1 * log2z(lose.max(0.0));
        }
        if p2 > 0.0 {
            h += p2 * log2z(win.max(0.0));
        }
        h
    }

    /// The full-bet (q = 1) output ratios and probabilities.
    pub fn full_bet_returns(&self) -> ([f64; 2], [f64; 2]) {
        (
            [1.0 - self.loss_frac, 1.0 + self.gain_frac],
            [1.0 - self.win_prob, self.win_prob],
        )
    }
}

/// Outcome of the closed-form Kelly optimization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KellyResult {
    /// Optimal wager fraction clipped into [0, 1].
    pub ratio: f64,
    /// The unclipped stationary point of the growth entropy.
    pub unclipped: f64,
    /// Set when there is no positive edge (the clipped ratio is 0).
    pub no_edge: bool,
}

/// Generalized Kelly ratio. With r0 = 0 this is q* = E / (r1 r2); with
/// r0 > 0 it is q* = (P2 d2 - P1 d1) R0 / (d1 d2). The returned ratio
/// maximizes the growth entropy over q in [0, 1].
pub fn kelly_optimal(bet: &BetSpec) -> KellyResult {
    let p2 = bet.win_prob;
    let p1 = 1.0 - p2;
    let (d1, d2) = (bet.d1(), bet.d2());
    let unclipped = if d2 <= 0.0 {
        // Winning pays no more than cash: never bet.
        f64::NEG_INFINITY
    } else {
        (p2 * d2 - p1 * d1) * bet.risk_free_ratio() / (d1 * d2)
    };
    let ratio = unclipped.clamp(0.0, 1.0);
    KellyResult {
        ratio,
        unclipped,
        no_edge: ratio <= 0.0,
    }
}

/// Arithmetic/geometric returns and the risk split R_a^2 = R_g^2 + R_r^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskMeasures {
    /// Arithmetic mean output ratio R_a = 1 + E.
    pub arithmetic: f64,
    /// Geometric mean output ratio R_g = 2^{H_g}.
    pub geometric: f64,
    /// Risk radius R_r = sqrt(R_a^2 - R_g^2).
    pub risk: f64,
    /// sin(alpha) = R_r / R_a in [0, 1]; 1 is the bankruptcy boundary.
    pub sin_alpha: f64,
}

/// Risk measures of a realized return distribution {(P_i, R_i)}.
pub fn risk_measures(probs: &[f64], total_returns: &[f64]) -> Result<RiskMeasures> {
    if probs.len() != total_returns.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities vs {} returns",
            probs.len(),
            total_returns.len()
        )));
    }
    let arithmetic: f64 = probs.iter().zip(total_returns).map(|(&p, &r)| p * r).sum();
    if arithmetic <= 0.0 {
        return Err(Error::BadConfig(
            "arithmetic mean return must be positive".into(),
        ));
    }
    let h_g = growth_from_returns(probs, total_returns);
    let geometric = if h_g == f64::NEG_INFINITY {
        0.0
    } else {
        h_g.exp2()
    };
    let risk = (arithmetic * arithmetic - geometric * geometric).max(0.0).sqrt();
    Ok(RiskMeasures {
        arithmetic,
        geometric,
        risk,
        sin_alpha: risk / arithmetic,
    })
}

/// Exact and approximate investment capacity of a bet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    /// H_C* = growth entropy at the Kelly ratio, bits.
    pub exact: f64,
    /// The coin identity (1/2) log2 [1 / (1 - E^2/R_r^2)], with R_r the
    /// standard deviation of the full-bet return. Exact for the symmetric
    /// coin with r0 = 0; reported for reference otherwise.
    pub coin_formula: f64,
    /// The small-edge approximation (1/2) log2 (1 + E^2/R_r^2).
    pub approximation: f64,
    pub optimal_ratio: f64,
    pub no_edge: bool,
}

/// Investment capacity: the maximum growth entropy over the wager fraction.
pub fn investment_capacity(bet: &BetSpec) -> CapacityReport {
    let kelly = kelly_optimal(bet);
    let exact = bet.growth_entropy_at(kelly.ratio);
    let e = bet.expected_income();
    // Standard deviation of the q = 1 bet return.
    let (returns, probs) = bet.full_bet_returns();
    let mean = probs[0] * returns[0] + probs[1] * returns[1];
    let var = probs[0] * (returns[0] - mean).powi(2) + probs[1] * (returns[1] - mean).powi(2);
    let rr2 = var.max(EPS * EPS);
    let ratio2 = e * e / rr2;
    let coin_formula = if ratio2 >= 1.0 {
        f64::INFINITY
    } else {
        0.5 * (1.0 / (1.0 - ratio2)).log2()
    };
    CapacityReport {
        exact,
        coin_formula,
        approximation: 0.5 * (1.0 + ratio2).log2(),
        optimal_ratio: kelly.ratio,
        no_edge: kelly.no_edge,
    }
}

/// Box constraints for the simplex optimizer; the long-only default is
/// [0, 1] per asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for RatioBounds {
    fn default() -> Self {
        RatioBounds { min: 0.0, max: 1.0 }
    }
}

fn golden_max(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Maximize the growth entropy over the ratio simplex by deterministic
/// pairwise coordinate ascent (golden-section line search on every ordered
/// asset pair until no transfer improves).
pub fn optimal_ratios(
    probs: &[f64],
    returns: &Mat,
    bounds: Option<RatioBounds>,
) -> Result<Vec<f64>> {
    let w = returns.rows();
    let m = returns.cols();
    if probs.len() != w {
        return Err(Error::DimensionMismatch(format!(
            "{} probabilities vs {} return rows",
            probs.len(),
            w
        )));
    }
    let bounds = bounds.unwrap_or_default();
    if !(bounds.min <= bounds.max) || bounds.max * (m as f64) < 1.0 - 1e-12 {
        return Err(Error::BadConfig("infeasible ratio bounds".into()));
    }
    let h = |q: &[f64]| -> f64 {
        let totals: Vec<f64> = returns
            .iter_rows()
            .map(|row| row.iter().zip(q).map(|(&r, &qk)| qk * r).sum())
            .collect();
        growth_from_returns(probs, &totals)
    };
    // Start from uniform; fall back to all-cash when uniform is ruinous.
    let mut q = vec![1.0 / m as f64; m];
    if h(&q) == f64::NEG_INFINITY {
        q = vec![0.0; m];
        q[0] = 1.0;
    }
    let mut best = h(&q);
    for _ in 0..500 {
        let mut improved = false;
        for from in 0..m {
            for to in 0..m {
                if from == to || q[from] <= bounds.min + 1e-15 {
                    continue;
                }
                let headroom = (q[from] - bounds.min).min(bounds.max - q[to]);
                if headroom <= 1e-15 {
                    continue;
                }
                let (t, val) = golden_max(
                    |t| {
                        let mut cand = q.clone();
                        cand[from] -= t;
                        cand[to] += t;
                        h(&cand)
                    },
                    0.0,
                    headroom,
                    1e-12,
                );
                if val > best + 1e-14 {
                    q[from] -= t;
                    q[to] += t;
                    best = val;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(q)
}

/// Information value of a probability forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoValueReport {
    /// V = sum_i P(x_i|y_j) log2 [R_i(q**) / R_i(q*)], bits; negative for
    /// misleading forecasts.
    pub value: f64,
    /// Ratios optimal under the prior.
    pub prior_ratios: Vec<f64>,
    /// Ratios optimal under the forecast.
    pub forecast_ratios: Vec<f64>,
}

/// The growth-entropy increment a forecast produces, scored against what was
/// realized. `prior` fixes q*, `posterior_pred` fixes q**, and
/// `realized_weights` average the per-outcome log ratio.
pub fn information_value(
    prior: &[f64],
    posterior_pred: &[f64],
    realized_weights: &[f64],
    returns: &Mat,
) -> Result<InfoValueReport> {
    let w = returns.rows();
    if prior.len() != w || posterior_pred.len() != w || realized_weights.len() != w {
        return Err(Error::DimensionMismatch(format!(
            "prior {}, forecast {}, realized {}, returns rows {w}",
            prior.len(),
            posterior_pred.len(),
            realized_weights.len()
        )));
    }
    let q_star = optimal_ratios(prior, returns, None)?;
    let q_double = optimal_ratios(posterior_pred, returns, None)?;
    let r_star: Vec<f64> = returns
        .iter_rows()
        .map(|row| row.iter().zip(&q_star).map(|(&r, &q)| q * r).sum())
        .collect();
    let r_double: Vec<f64> = returns
        .iter_rows()
        .map(|row| row.iter().zip(&q_double).map(|(&r, &q)| q * r).sum())
        .collect();
    let value = realized_weights
        .iter()
        .zip(r_double.iter().zip(&r_star))
        .map(|(&p, (&num, &den))| {
            if p <= EPS {
                0.0
            } else {
                p * crate::base::log2_ratio(num, den)
            }
        })
        .sum();
    Ok(InfoValueReport {
        value,
        prior_ratios: q_star,
        forecast_ratios: q_double,
    })
}

/// Arrow's information value: the Shannon entropy of the outcome
/// distribution, bits. Reported for comparison; it ignores both the non-bet
/// proportion and the odds.
pub fn arrow_value(probs: &[f64]) -> f64 {
    entropy_bits(probs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_spec() -> PortfolioSpec {
        // Cash plus a coin-toss bet: lose everything wagered or win double.
        PortfolioSpec::new(
            vec![0.5, 0.5],
            Mat::from_rows(vec![vec![1.0, 0.0], vec![1.0, 3.0]]).unwrap(),
            vec!["cash".into(), "coin".into()],
        )
        .unwrap()
    }

    #[test]
    fn all_cash_grows_nothing() {
        let spec = coin_spec();
        assert_eq!(growth_entropy(&spec, &[1.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn quarter_kelly_coin_value() {
        let spec = coin_spec();
        let h = growth_entropy(&spec, &[0.75, 0.25]).unwrap();
        let expected = 0.5 * 0.75f64.log2() + 0.5 * 1.5f64.log2();
        assert!((h - expected).abs() < 1e-12);
        assert!((h - 0.08496250072115619).abs() < 1e-9);
    }

    #[test]
    fn full_bet_hits_the_ruin_sentinel() {
        let spec = coin_spec();
        assert_eq!(
            growth_entropy(&spec, &[0.0, 1.0]).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn kelly_quarter_for_double_or_nothing() {
        let bet = BetSpec::new(0.5, 1.0, 2.0, 0.0).unwrap();
        let k = kelly_optimal(&bet);
        assert_eq!(k.ratio, 0.25);
        assert!(!k.no_edge);
    }

    #[test]
    fn kelly_with_risk_free_reduces_to_simple_form() {
        // Eq (43) with r0 = 0 collapses to E/(r1 r2).
        for (p, r1, r2) in [(0.55, 0.8, 1.5), (0.6, 1.0, 1.0), (0.5, 0.4, 0.9)] {
            let bet = BetSpec::new(p, r1, r2, 0.0).unwrap();
            let k = kelly_optimal(&bet);
            let e = p * r2 - (1.0 - p) * r1;
            assert!((k.unclipped - e / (r1 * r2)).abs() < 1e-12);
        }
    }

    #[test]
    fn kelly_matches_golden_section_oracle() {
        // Deterministic sweep of bet shapes; the closed form must sit at the
        // numeric maximum of the growth entropy.
        let mut cases = Vec::new();
        for i in 1..6 {
            for j in 1..6 {
                for p in [0.3, 0.45, 0.55, 0.7] {
                    for r0 in [0.0, 0.02, 0.1] {
                        cases.push((p, i as f64 * 0.2, j as f64 * 0.5, r0));
                    }
                }
            }
        }
        for (p, r1, r2, r0) in cases {
            let bet = BetSpec::new(p, r1, r2, r0).unwrap();
            let k = kelly_optimal(&bet);
            let (q_num, _) = golden_max(|q| bet.growth_entropy_at(q), 0.0, 1.0, 1e-10);
            assert!(
                (k.ratio - q_num).abs() < 1e-6,
                "bet ({p},{r1},{r2},{r0}): closed {} vs numeric {q_num}",
                k.ratio
            );
        }
    }

    #[test]
    fn no_edge_returns_zero_with_flag() {
        let bet = BetSpec::new(0.3, 1.0, 1.0, 0.0).unwrap();
        let k = kelly_optimal(&bet);
        assert_eq!(k.ratio, 0.0);
        assert!(k.no_edge);
        let cap = investment_capacity(&bet);
        assert_eq!(cap.exact, 0.0);
        assert!(cap.no_edge);
    }

    #[test]
    fn riskless_portfolio_has_zero_risk() {
        let r = risk_measures(&[0.4, 0.6], &[1.05, 1.05]).unwrap();
        assert!((r.risk).abs() < 1e-9);
        assert!((r.sin_alpha).abs() < 1e-9);
    }

    #[test]
    fn full_coin_bet_sits_on_the_bankruptcy_boundary() {
        let r = risk_measures(&[0.5, 0.5], &[0.0, 3.0]).unwrap();
        assert!((r.arithmetic - 1.5).abs() < 1e-12);
        assert_eq!(r.geometric, 0.0);
        assert!((r.risk - 1.5).abs() < 1e-12);
        assert!((r.sin_alpha - 1.0).abs() < 1e-12);
    }

    #[test]
    fn risk_split_reproduces_growth_entropy() {
        // The equivalent-coin identity: H_g = 0.5 log(R_a - R_r) + 0.5 log(R_a + R_r).
        let probs = [0.5, 0.5];
        let totals = [0.75, 1.5];
        let r = risk_measures(&probs, &totals).unwrap();
        let h = growth_from_returns(&probs, &totals);
        let recon = 0.5 * (r.arithmetic - r.risk).log2() + 0.5 * (r.arithmetic + r.risk).log2();
        assert!((h - recon).abs() < 1e-9);
    }

    #[test]
    fn capacity_closed_form_matches_growth_at_kelly() {
        let bet = BetSpec::new(0.5, 1.0, 2.0, 0.0).unwrap();
        let cap = investment_capacity(&bet);
        let expected = 0.5 * (9.0f64 / 8.0).log2();
        assert!((cap.exact - expected).abs() < 1e-12);
        assert!((cap.coin_formula - expected).abs() < 1e-12);
        assert!((cap.exact - bet.growth_entropy_at(0.25)).abs() < 1e-15);
    }

    #[test]
    fn capacity_approximation_is_tight_for_small_edges() {
        // E/R_r = 0.05: Eq-48 approximation within 0.2% of the exact identity.
        // Symmetric coin with r1 = 0.95, r2 = 1.05: E = 0.05, R_r = 1.
        let bet = BetSpec::new(0.5, 0.95, 1.05, 0.0).unwrap();
        let cap = investment_capacity(&bet);
        assert!((bet.expected_income() - 0.05).abs() < 1e-12);
        // First-order relative error of log(1+x) vs log(1/(1-x)) is x
        // itself = (E/R_r)^2 = 0.25% here.
        let rel = (cap.approximation - cap.coin_formula).abs() / cap.coin_formula;
        assert!(rel < 0.003, "relative error {rel}");
        // And the coin identity matches the exact capacity.
        assert!((cap.exact - cap.coin_formula).abs() < 1e-9);
    }

    #[test]
    fn simplex_optimizer_matches_kelly_on_the_coin() {
        let spec = coin_spec();
        let q = optimal_ratios(spec.probs(), spec.returns(), None).unwrap();
        assert!((q[1] - 0.25).abs() < 1e-6, "q = {q:?}");
        let h = growth_entropy(&spec, &q).unwrap();
        assert!((h - 0.5 * (9.0f64 / 8.0).log2()).abs() < 1e-9);
    }

    #[test]
    fn growth_entropy_is_concave_along_chords() {
        let spec = PortfolioSpec::new(
            vec![0.3, 0.4, 0.3],
            Mat::from_rows(vec![
                vec![1.0, 0.2, 1.8],
                vec![1.0, 1.1, 0.9],
                vec![1.0, 2.2, 0.4],
            ])
            .unwrap(),
            vec!["cash".into(), "a".into(), "b".into()],
        )
        .unwrap();
        let qs = [
            vec![0.5, 0.25, 0.25],
            vec![0.2, 0.6, 0.2],
            vec![0.1, 0.2, 0.7],
            vec![0.8, 0.1, 0.1],
        ];
        for a in &qs {
            for b in &qs {
                let ha = growth_entropy(&spec, a).unwrap();
                let hb = growth_entropy(&spec, b).unwrap();
                for lam in [0.25, 0.5, 0.75] {
                    let mix: Vec<f64> = a
                        .iter()
                        .zip(b)
                        .map(|(&x, &y)| lam * x + (1.0 - lam) * y)
                        .collect();
                    let hm = growth_entropy(&spec, &mix).unwrap();
                    assert!(hm >= lam * ha + (1.0 - lam) * hb - 1e-12);
                }
            }
        }
    }

    #[test]
    fn diversification_limit_approaches_arithmetic_growth() {
        // n independent coins (r1 = 0.5, r2 = 1), full investment split
        // evenly: H_g rises toward log2(1 + E) = log2(1.25).
        let target = 1.25f64.log2();
        let mut last = f64::NEG_INFINITY;
        for n in [1usize, 4, 16, 64] {
            // Binomial aggregation of the 2^n outcomes.
            let mut h = 0.0;
            for k in 0..=n {
                let mut log_c = 0.0;
                for t in 0..k {
                    log_c += ((n - t) as f64).ln() - ((t + 1) as f64).ln();
                }
                let p = (log_c + (n as f64) * 0.5f64.ln()).exp();
                let r = (k as f64 * 2.0 + (n - k) as f64 * 0.5) / n as f64;
                h += p * r.log2();
            }
            assert!(h > last);
            last = h;
        }
        assert!((last - target).abs() < 0.01, "H_g(64) = {last} vs {target}");
    }

    #[test]
    fn information_value_examples() {
        // Two outcomes: cash plus an asset paying 3x in outcome 2.
        let returns = Mat::from_rows(vec![vec![1.0, 0.2], vec![1.0, 3.0]]).unwrap();
        let prior = [0.5, 0.5];
        // Forecast equal to the prior changes nothing.
        let report = information_value(&prior, &prior, &prior, &returns).unwrap();
        assert!(report.value.abs() < 1e-9);
        // A confident correct forecast of outcome 2 pays off.
        let report = information_value(&prior, &[0.02, 0.98], &[0.0, 1.0], &returns).unwrap();
        assert!(report.value > 0.0);
        // The same confident forecast scored against the opposite realization
        // is misleading: negative value.
        let report = information_value(&prior, &[0.02, 0.98], &[1.0, 0.0], &returns).unwrap();
        assert!(report.value < 0.0);
    }

    #[test]
    fn truthful_forecasts_dominate_on_average() {
        let returns = Mat::from_rows(vec![vec![1.0, 0.3], vec![1.0, 2.4]]).unwrap();
        let prior = [0.6, 0.4];
        let realized = [0.25, 0.75];
        let truthful = information_value(&prior, &realized, &realized, &returns)
            .unwrap()
            .value;
        for pred in [[0.9, 0.1], [0.5, 0.5], [0.1, 0.9], [0.75, 0.25]] {
            let v = information_value(&prior, &pred, &realized, &returns)
                .unwrap()
                .value;
            assert!(truthful >= v - 1e-9, "pred {pred:?} beat the truth");
        }
    }

    #[test]
    fn arrow_value_examples() {
        assert!((arrow_value(&[0.5, 0.5]) - 1.0).abs() < 1e-12);
        assert_eq!(arrow_value(&[1.0, 0.0]), 0.0);
        assert!((arrow_value(&[0.25, 0.75]) - 0.8112781244591328).abs() < 1e-12);
    }
}
