//! Symmetric binary hypothesis testing: the single-trial Chernoff bound, the
//! Chernoff distance, the closed form for two-outcome tests, the visibility
//! distance and their M-trial exponentials, plus a maximum-likelihood
//! decision rule.
//!
//! All distances are in nats.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::minimize::scan_then_refine;
use crate::state_evolution::Hypothesis;

/// Tolerance on a distribution's total mass.
pub const MASS_TOLERANCE: f64 = 1e-9;

const COARSE_POINTS: usize = 101;
const S_TOLERANCE: f64 = 1e-10;

/// Outcome labels: `A`/`B`/`D` for the interferometer ports (absorbed,
/// bright, dark) and `One`/`Two` for two-outcome tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    A,
    B,
    D,
    One,
    Two,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::A => "A",
            Outcome::B => "B",
            Outcome::D => "D",
            Outcome::One => "1",
            Outcome::Two => "2",
        })
    }
}

/// Probabilities over a set of outcomes under one hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    probs: BTreeMap<Outcome, f64>,
}

impl OutcomeDistribution {
    pub fn new<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Outcome, f64)>,
    {
        let mut probs = BTreeMap::new();
        for (outcome, p) in entries {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(format!("probability of {outcome} is {p}, outside [0, 1]")));
            }
            if probs.insert(outcome, p).is_some() {
                return Err(invalid(format!("outcome {outcome} listed twice")));
            }
        }
        if probs.is_empty() {
            return Err(invalid("distribution has no outcomes"));
        }
        let total: f64 = probs.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// `{One: p, Two: 1 - p}`.
    pub fn binary(p: f64) -> Result<Self> {
        Self::new([(Outcome::One, p), (Outcome::Two, 1.0 - p)])
    }

    pub fn get(&self, outcome: Outcome) -> Option<f64> {
        self.probs.get(&outcome).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Outcome, f64)> + '_ {
        self.probs.iter().map(|(&o, &p)| (o, p))
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        self.probs.keys().copied()
    }

    fn same_support_labels(&self, other: &Self) -> bool {
        self.probs.keys().eq(other.probs.keys())
    }
}

/// Two-outcome test on photon transmission: `p` with the object, `q` without.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoOutcomeModel {
    pub p: f64,
    pub q: f64,
}

impl TwoOutcomeModel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for (name, x) in [("p", p), ("q", q)] {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidInput(format!("{name} = {x} must lie strictly inside (0, 1)")));
            }
        }
        if p == q {
            return Err(Error::Degenerate(format!("p = q = {p}: hypotheses are indistinguishable")));
        }
        Ok(Self { p, q })
    }

    /// Exponent weight xi of the optimal tilted distribution.
    pub fn xi(&self) -> f64 {
        let (p, q) = (self.p, self.q);
        let (pb, qb) = (1.0 - p, 1.0 - q);
        (qb / pb).ln() / ((p / pb).ln() + (qb / q).ln())
    }

    /// Distribution under the object-present hypothesis.
    pub fn present(&self) -> OutcomeDistribution {
        OutcomeDistribution::binary(self.p).expect("validated p")
    }

    /// Distribution under the object-absent hypothesis.
    pub fn absent(&self) -> OutcomeDistribution {
        OutcomeDistribution::binary(self.q).expect("validated q")
    }
}

/// Chernoff and visibility distances for an M-trial campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialScaling {
    pub m_trials: u64,
    pub chernoff_distance: f64,
    pub visibility_distance: f64,
}

impl TrialScaling {
    pub fn new(m_trials: u64, chernoff_distance: f64, visibility_distance: f64) -> Result<Self> {
        if !(chernoff_distance >= 0.0 && visibility_distance >= 0.0) {
            return Err(invalid("distances must be non-negative"));
        }
        Ok(Self { m_trials, chernoff_distance, visibility_distance })
    }
}

/// Minimizer of the Chernoff coefficient `sum_b P0(b)^s P1(b)^(1-s)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChernoffMinimum {
    pub s: f64,
    pub coefficient: f64,
}

impl ChernoffMinimum {
    pub fn bound(&self) -> f64 {
        0.5 * self.coefficient
    }

    pub fn distance(&self) -> f64 {
        -self.coefficient.ln()
    }
}

/// Chernoff coefficient at `s`, extended continuously to the endpoints.
///
/// On the open interval a term with `P0(b) = 0` or `P1(b) = 0` vanishes, so
/// at `s = 0` only outcomes possible under `P0` contribute `P1(b)`, and at
/// `s = 1` only outcomes possible under `P1` contribute `P0(b)`.
pub fn chernoff_coefficient(p0: &OutcomeDistribution, p1: &OutcomeDistribution, s: f64) -> f64 {
    p0.probs
        .iter()
        .zip(p1.probs.values())
        .map(|((_, &a), &b)| {
            if a == 0.0 || b == 0.0 {
                0.0
            } else if s <= 0.0 {
                b
            } else if s >= 1.0 {
                a
            } else {
                (s * a.ln() + (1.0 - s) * b.ln()).exp()
            }
        })
        .sum()
}

/// Minimizes the Chernoff coefficient over `s in [0, 1]`.
///
/// A coarse grid brackets the minimum and golden-section search refines it;
/// the coefficient is log-convex in `s`, so one bracket is enough.
pub fn chernoff_minimum(p0: &OutcomeDistribution, p1: &OutcomeDistribution) -> Result<ChernoffMinimum> {
    if !p0.same_support_labels(p1) {
        return Err(invalid("distributions are over different outcome sets"));
    }
    let f = |s: f64| chernoff_coefficient(p0, p1, s);
    let m = scan_then_refine(f, 0.0, 1.0, COARSE_POINTS, S_TOLERANCE);
    Ok(ChernoffMinimum { s: m.x, coefficient: m.value.clamp(0.0, 1.0) })
}

/// Single-trial error bound `1/2 min_s sum_b P0^s P1^(1-s)`.
pub fn chernoff_bound(p0: &OutcomeDistribution, p1: &OutcomeDistribution) -> Result<f64> {
    Ok(chernoff_minimum(p0, p1)?.bound())
}

/// Chernoff distance `-min_s ln sum_b P0^s P1^(1-s)`. Infinite when the
/// hypotheses are perfectly distinguishable.
pub fn chernoff_distance(p0: &OutcomeDistribution, p1: &OutcomeDistribution) -> Result<f64> {
    Ok(chernoff_minimum(p0, p1)?.distance().max(0.0))
}

/// Closed-form Chernoff distance of a two-outcome test:
/// `xi ln(xi/p) + (1-xi) ln((1-xi)/(1-p))`.
pub fn chernoff_distance_two_outcome(model: &TwoOutcomeModel) -> Result<f64> {
    let m = TwoOutcomeModel::new(model.p, model.q)?;
    let xi = m.xi();
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Numerical(format!("xi = {xi} left (0, 1) for p = {}, q = {}", m.p, m.q)));
    }
    let xb = 1.0 - xi;
    let c = xi * (xi / m.p).ln() + xb * (xb / (1.0 - m.p)).ln();
    Ok(c.max(0.0))
}

/// Visibility distance `-ln(1 - p_str)`.
pub fn visibility_distance(p_str: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_str) {
        return Err(invalid(format!("strike probability {p_str} outside [0, 1]")));
    }
    if p_str == 1.0 {
        return Err(Error::Infinite("photon always strikes the object".into()));
    }
    Ok(-(-p_str).ln_1p())
}

/// Probability of never striking the object in M trials, `exp(-M C_vis)`.
pub fn invisibility_probability(scaling: &TrialScaling) -> f64 {
    (-(scaling.m_trials as f64) * scaling.visibility_distance).exp()
}

/// Upper bound on the M-trial decision error, `1/2 exp(-M C)`.
pub fn max_error_bound(scaling: &TrialScaling) -> f64 {
    0.5 * (-(scaling.m_trials as f64) * scaling.chernoff_distance).exp()
}

/// Maximum-likelihood choice between `p0` (object absent) and `p1` (object
/// present) given i.i.d. outcome counts. Exact ties go to a fair coin drawn
/// from `rng`.
pub fn decide<R: Rng + ?Sized>(
    counts: &BTreeMap<Outcome, u64>,
    p0: &OutcomeDistribution,
    p1: &OutcomeDistribution,
    rng: &mut R,
) -> Result<Hypothesis> {
    let log_likelihood = |dist: &OutcomeDistribution| -> f64 {
        counts
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&o, &n)| match dist.get(o) {
                Some(p) if p > 0.0 => n as f64 * p.ln(),
                _ => f64::NEG_INFINITY,
            })
            .sum()
    };
    let l0 = log_likelihood(p0);
    let l1 = log_likelihood(p1);
    if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
        return Err(Error::InconsistentData("observed an outcome that is impossible under both hypotheses".into()));
    }
    Ok(if l1 > l0 {
        Hypothesis::ObjectPresent
    } else if l0 > l1 {
        Hypothesis::ObjectAbsent
    } else if rng.random_bool(0.5) {
        Hypothesis::ObjectPresent
    } else {
        Hypothesis::ObjectAbsent
    })
}
