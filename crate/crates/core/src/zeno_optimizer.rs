//! Partial-Zeno operating points.
//!
//! Without an object the transmission `q(lambda)` falls from 1 at zero loss,
//! reaches an interior minimum and climbs back to the Zeno value
//! `cos^{2N} theta` at full loss. The tripwire runs at that minimum, where an
//! object (which pins transmission at `cos^{2N} theta`) is most conspicuous.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::hypothesis_stats::{chernoff_distance_two_outcome, visibility_distance, TwoOutcomeModel};
use crate::minimize::scan_then_refine;
use crate::state_evolution::{
    check_probability, object_transmission, strike_probability, transmission_probability, Hypothesis, PassConfig,
};

/// Number of equally spaced loss values scanned before refinement.
pub const SCAN_POINTS: usize = 1001;
/// Final bracket width on the optimal loss.
pub const LOSS_TOLERANCE: f64 = 1e-9;
const BOUNDARY_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub n_passes: u32,
    /// Total rotation `N * theta_N` in radians.
    pub theta_total: f64,
    pub lambda_opt: f64,
    /// Minimized transmission without the object.
    pub q_min: f64,
    /// Transmission with the object.
    pub p: f64,
    /// Minimum sits on the edge of `[0, 1]` (e.g. a single quarter-turn pass).
    pub boundary: bool,
}

impl OperatingPoint {
    pub fn theta_per_pass(&self) -> f64 {
        self.theta_total / self.n_passes as f64
    }

    pub fn pass_config(&self) -> PassConfig {
        PassConfig {
            n_passes: self.n_passes,
            theta_per_pass: self.theta_per_pass(),
            loss: self.lambda_opt,
            phase_v: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub point: OperatingPoint,
    pub c2: f64,
    pub c_vis: f64,
    /// `c2 / c_vis`; above 1 the error bound shrinks faster than invisibility.
    pub ratio: f64,
}

fn no_object_transmission(n: u32, theta: f64, lambda: f64) -> f64 {
    let cfg = PassConfig { n_passes: n, theta_per_pass: theta, loss: lambda.clamp(0.0, 1.0), phase_v: 0.0 };
    transmission_probability(&cfg, Hypothesis::ObjectAbsent).unwrap_or(f64::NAN)
}

/// Loss minimizing the object-free transmission for `n` passes of
/// `theta_per_pass` each.
pub fn optimize_loss(n: u32, theta_per_pass: f64) -> Result<OperatingPoint> {
    PassConfig::new(n, theta_per_pass, 0.0)?;
    if theta_per_pass > std::f64::consts::FRAC_PI_2 + 1e-12 {
        return Err(invalid(format!("theta_per_pass = {theta_per_pass} exceeds pi/2")));
    }
    let m =
        scan_then_refine(|lam| no_object_transmission(n, theta_per_pass, lam), 0.0, 1.0, SCAN_POINTS, LOSS_TOLERANCE);
    if !m.value.is_finite() {
        return Err(Error::Numerical(format!("optimizer diverged for N = {n}, theta = {theta_per_pass}")));
    }
    Ok(OperatingPoint {
        n_passes: n,
        theta_total: theta_per_pass * n as f64,
        lambda_opt: m.x,
        q_min: m.value,
        p: object_transmission(n, theta_per_pass),
        boundary: m.x < BOUNDARY_EPS || m.x > 1.0 - BOUNDARY_EPS,
    })
}

/// Chernoff and visibility distances at an operating point.
pub fn distance_report(point: &OperatingPoint) -> Result<DistanceReport> {
    let model = TwoOutcomeModel::new(point.p, point.q_min)?;
    let c2 = chernoff_distance_two_outcome(&model)?;
    let c_vis = visibility_distance(strike_probability(&point.pass_config())?)?;
    if c_vis == 0.0 {
        return Err(Error::Degenerate(format!("N = {}: the photon never reaches the object", point.n_passes)));
    }
    Ok(DistanceReport { point: *point, c2, c_vis, ratio: c2 / c_vis })
}

/// `(lambda, q(lambda))` pairs for `theta_total / n` rotation per pass.
pub fn transmission_curve(n: u32, theta_total: f64, lambda_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let base = PassConfig::from_total_angle(n, theta_total, 0.0)?;
    lambda_grid
        .iter()
        .map(|&lam| {
            check_probability("lambda", lam)?;
            let q = transmission_probability(&base.with_loss(lam)?, Hypothesis::ObjectAbsent)?;
            Ok((lam, q))
        })
        .collect()
}

/// Evenly spaced loss grid over `[0, 1]` with both endpoints.
pub fn loss_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(invalid("loss grid needs at least two points"));
    }
    let last = points - 1;
    Ok((0..points).map(|i| if i == last { 1.0 } else { i as f64 / last as f64 }).collect())
}

/// Operating point for `n` passes with total rotation `theta_total`.
pub fn operating_point(n: u32, theta_total: f64) -> Result<OperatingPoint> {
    if n == 0 {
        return Err(invalid("n_passes must be at least 1"));
    }
    let mut point = optimize_loss(n, theta_total / n as f64)?;
    point.theta_total = theta_total;
    Ok(point)
}

/// Distance reports for each pass count, ordered by N.
pub fn sweep(n_values: &[u32], theta_total: f64) -> Result<Vec<DistanceReport>> {
    if n_values.is_empty() {
        return Err(invalid("sweep needs at least one pass count"));
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    ns.par_iter().map(|&n| distance_report(&operating_point(n, theta_total)?)).collect()
}

/// Smallest N whose Chernoff distance exceeds its visibility distance.
pub fn crossover(reports: &[DistanceReport]) -> Option<u32> {
    reports.iter().filter(|r| r.ratio > 1.0).map(|r| r.point.n_passes).min()
}
