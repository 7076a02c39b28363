//! Single-pass lossless Mach-Zehnder interaction-free measurement.
//!
//! The photon meets beam splitter `theta1`, travels both arms (an object may
//! block the V arm) and recombines at `theta2`. With `theta1 + theta2 = pi/2`
//! the H output is dark when the arm is clear, so a click there proves the
//! object is present without it having absorbed the photon.
//!
//! Outcome labels: `A` absorbed by the object, `B` bright (V) port, `D` dark
//! (H) port.

use std::f64::consts::FRAC_PI_2;

use crate::error::{invalid, Result};
use crate::hypothesis_stats::{Outcome, OutcomeDistribution};
use crate::state_evolution::Hypothesis;

/// Tolerance for the dark-port condition `theta1 + theta2 = pi/2`.
pub const DARK_PORT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleMziConfig {
    pub theta1: f64,
    pub theta2: f64,
}

impl SimpleMziConfig {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        let cfg = Self { theta1, theta2 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Dark-port arrangement with `theta2 = pi/2 - theta1`.
    pub fn dark_port(theta1: f64) -> Result<Self> {
        Self::new(theta1, FRAC_PI_2 - theta1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("theta1", self.theta1), ("theta2", self.theta2)] {
            if !(0.0..=FRAC_PI_2 + DARK_PORT_TOLERANCE).contains(&t) {
                return Err(invalid(format!("{name} = {t} outside [0, pi/2]")));
            }
        }
        Ok(())
    }

    pub fn is_dark_port(&self) -> bool {
        (self.theta1 + self.theta2 - FRAC_PI_2).abs() <= DARK_PORT_TOLERANCE
    }
}

/// `(sin^2 t, cos^2 t)`, exact at a quarter turn. `cos(pi/2)` rounds to
/// ~6e-17, and even that residue would hand a dark port a spurious weight in
/// likelihood and distance computations.
fn split(t: f64) -> (f64, f64) {
    if (t - FRAC_PI_2).abs() <= DARK_PORT_TOLERANCE {
        return (1.0, 0.0);
    }
    let (s, c) = t.sin_cos();
    (s * s, c * c)
}

/// Outcome probabilities together with the dark-port check.
#[derive(Debug, Clone, PartialEq)]
pub struct MziOutcomes {
    pub distribution: OutcomeDistribution,
    /// False when `theta1 + theta2 != pi/2`; the formulas still apply.
    pub dark_port: bool,
}

pub fn outcome_distribution(cfg: &SimpleMziConfig, h: Hypothesis) -> Result<MziOutcomes> {
    cfg.validate()?;
    let (s1, c1) = split(cfg.theta1);
    let (s2, c2) = split(cfg.theta2);
    let (a, b, d) = match h {
        Hypothesis::ObjectPresent => (s1, c1 * s2, c1 * c2),
        // Both arms interfere; the two splitters compose to one rotation.
        Hypothesis::ObjectAbsent => {
            let (s, c) = split(cfg.theta1 + cfg.theta2);
            (0.0, s, c)
        }
    };
    let distribution = OutcomeDistribution::new([(Outcome::A, a), (Outcome::B, b), (Outcome::D, d)])?;
    Ok(MziOutcomes { distribution, dark_port: cfg.is_dark_port() })
}

/// Fraction of object detections that are interaction free,
/// `P1(D) / (P1(D) + P1(A)) = cos^2 theta1 / (1 + cos^2 theta1)`.
///
/// Requires the dark-port arrangement. At `theta1 = 0` this returns the
/// limiting value 1/2.
pub fn ifm_efficiency(cfg: &SimpleMziConfig) -> Result<f64> {
    cfg.validate()?;
    if !cfg.is_dark_port() {
        return Err(invalid(format!("efficiency needs theta1 + theta2 = pi/2, got {}", cfg.theta1 + cfg.theta2)));
    }
    let c = cfg.theta1.cos().powi(2);
    Ok(c / (1.0 + c))
}
