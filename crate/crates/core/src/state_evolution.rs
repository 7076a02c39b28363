//! Pass-by-pass evolution of a single photon's polarization amplitudes.
//!
//! One pass is `object · loss · rotation` applied to the (H, V) amplitudes:
//! rotate by the per-pass angle, damp V by the controlled loss (plus an
//! optional phase), then remove V entirely when the object is present. Loss
//! makes the evolution non-unitary, so the squared norm of the final ket is
//! the probability that the photon survives all passes.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on the squared norm exceeding 1 through round-off.
pub const NORM_SLACK: f64 = 1e-12;

/// Which hypothesis the photon is evolved under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    /// h0: the V arm is clear.
    ObjectAbsent,
    /// h1: an object blocks the V arm and absorbs whatever reaches it.
    ObjectPresent,
}

impl Hypothesis {
    /// Loss the object applies to V on each pass.
    pub fn object_loss(self) -> f64 {
        match self {
            Hypothesis::ObjectAbsent => 0.0,
            Hypothesis::ObjectPresent => 1.0,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Hypothesis::ObjectAbsent => Hypothesis::ObjectPresent,
            Hypothesis::ObjectPresent => Hypothesis::ObjectAbsent,
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::ObjectAbsent => "absent",
            Hypothesis::ObjectPresent => "present",
        })
    }
}

/// Linear polarization basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    H,
    V,
}

/// Unnormalized single-photon polarization ket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonState {
    pub amp_h: Complex64,
    pub amp_v: Complex64,
}

impl PhotonState {
    pub fn new(amp_h: Complex64, amp_v: Complex64) -> Self {
        Self { amp_h, amp_v }
    }

    /// |H>, the input state of every trial.
    pub fn horizontal() -> Self {
        Self::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn from_real(h: f64, v: f64) -> Self {
        Self::new(Complex64::new(h, 0.0), Complex64::new(v, 0.0))
    }

    /// Squared norm: the survival probability so far.
    pub fn norm_sqr(&self) -> f64 {
        self.amp_h.norm_sqr() + self.amp_v.norm_sqr()
    }

    pub fn probability(&self, basis: Polarization) -> f64 {
        match basis {
            Polarization::H => self.amp_h.norm_sqr(),
            Polarization::V => self.amp_v.norm_sqr(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amp_h.is_finite() && self.amp_v.is_finite()
    }

    fn check(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(invalid("photon amplitudes must be finite"));
        }
        Ok(())
    }
}

impl Default for PhotonState {
    fn default() -> Self {
        Self::horizontal()
    }
}

/// Operating point of the N-pass apparatus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassConfig {
    pub n_passes: u32,
    /// Rotation per pass in radians.
    pub theta_per_pass: f64,
    /// Controlled loss probability applied to V on each pass.
    pub loss: f64,
    /// Phase picked up by V on each pass, in radians.
    pub phase_v: f64,
}

impl PassConfig {
    pub fn new(n_passes: u32, theta_per_pass: f64, loss: f64) -> Result<Self> {
        let cfg = Self { n_passes, theta_per_pass, loss, phase_v: 0.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration with `theta_total / n_passes` rotation per pass.
    pub fn from_total_angle(n_passes: u32, theta_total: f64, loss: f64) -> Result<Self> {
        if n_passes == 0 {
            return Err(invalid("n_passes must be at least 1"));
        }
        Self::new(n_passes, theta_total / n_passes as f64, loss)
    }

    pub fn with_phase(mut self, phase_v: f64) -> Result<Self> {
        self.phase_v = phase_v;
        self.validate()?;
        Ok(self)
    }

    pub fn with_loss(mut self, loss: f64) -> Result<Self> {
        self.loss = loss;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_passes == 0 {
            return Err(invalid("n_passes must be at least 1"));
        }
        if !(self.theta_per_pass.is_finite() && self.theta_per_pass > 0.0) {
            return Err(invalid(format!("theta_per_pass must be finite and positive, got {}", self.theta_per_pass)));
        }
        check_probability("loss", self.loss)?;
        if !self.phase_v.is_finite() {
            return Err(invalid("phase_v must be finite"));
        }
        Ok(())
    }
}

pub(crate) fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// Rotates the polarization by `theta`: H -> cos H + sin V.
pub fn rotate(state: PhotonState, theta: f64) -> Result<PhotonState> {
    state.check()?;
    if !theta.is_finite() {
        return Err(invalid("rotation angle must be finite"));
    }
    let (c, s, c_lo, s_lo) = unit_pair(theta);
    let mix = |a: f64, b: f64, ca: f64, cb: f64, ca_lo: f64, cb_lo: f64| {
        ca.mul_add(a, cb.mul_add(b, ca_lo.mul_add(a, cb_lo * b)))
    };
    let (h, v) = (state.amp_h, state.amp_v);
    Ok(PhotonState {
        amp_h: Complex64::new(mix(h.re, v.re, c, -s, c_lo, -s_lo), mix(h.im, v.im, c, -s, c_lo, -s_lo)),
        amp_v: Complex64::new(mix(h.re, v.re, s, c, s_lo, c_lo), mix(h.im, v.im, s, c, s_lo, c_lo)),
    })
}

/// `(cos, sin)` of `theta` plus a low-order correction on the larger of the
/// two, chosen so that `cos^2 + sin^2 = 1` to well below one ulp. Rounded
/// `sin_cos` pairs miss unit length by up to ~1e-16, which compounds to 1e-12
/// over 10^4 lossless passes.
fn unit_pair(theta: f64) -> (f64, f64, f64, f64) {
    let (s, c) = theta.sin_cos();
    let (pc, ps) = (c * c, s * s);
    let (ec, es) = (c.mul_add(c, -pc), s.mul_add(s, -ps));
    let t = pc + ps;
    let bb = t - pc;
    let et = (pc - (t - bb)) + (ps - bb);
    let residual = (t - 1.0) + et + ec + es;
    if c.abs() >= s.abs() {
        (c, s, -residual / (2.0 * c), 0.0)
    } else {
        (c, s, 0.0, -residual / (2.0 * s))
    }
}

/// Damps the V amplitude by `sqrt(1 - lam)` and applies `phase_v` to it.
pub fn apply_loss(state: PhotonState, lam: f64, phase_v: f64) -> Result<PhotonState> {
    state.check()?;
    check_probability("loss", lam)?;
    if !phase_v.is_finite() {
        return Err(invalid("phase must be finite"));
    }
    let factor = Complex64::from_polar((1.0 - lam).sqrt(), phase_v);
    Ok(PhotonState { amp_h: state.amp_h, amp_v: state.amp_v * factor })
}

/// One pass: rotation, then controlled loss, then the object if present.
pub fn single_pass(state: PhotonState, cfg: &PassConfig, h: Hypothesis) -> Result<PhotonState> {
    let rotated = rotate(state, cfg.theta_per_pass)?;
    let damped = apply_loss(rotated, cfg.loss, cfg.phase_v)?;
    match h {
        Hypothesis::ObjectAbsent => Ok(damped),
        Hypothesis::ObjectPresent => apply_loss(damped, 1.0, 0.0),
    }
}

/// Final ket after `cfg.n_passes` passes starting from |H>.
pub fn evolve(cfg: &PassConfig, h: Hypothesis) -> Result<PhotonState> {
    cfg.validate()?;
    (0..cfg.n_passes).try_fold(PhotonState::horizontal(), |state, _| single_pass(state, cfg, h))
}

/// Probability that the photon survives all passes.
pub fn transmission_probability(cfg: &PassConfig, h: Hypothesis) -> Result<f64> {
    Ok(evolve(cfg, h)?.norm_sqr().min(1.0))
}

/// Probability of detecting the surviving photon with polarization `basis`.
pub fn polarization_probability(cfg: &PassConfig, h: Hypothesis, basis: Polarization) -> Result<f64> {
    Ok(evolve(cfg, h)?.probability(basis))
}

/// Transmission with the object present, `cos^{2N} theta`.
pub fn object_transmission(n_passes: u32, theta_per_pass: f64) -> f64 {
    theta_per_pass.cos().powi(2 * n_passes as i32)
}

/// Per-trial probability that the photon strikes the object:
/// `(1 - loss) (1 - cos^{2N} theta)`.
pub fn strike_probability(cfg: &PassConfig) -> Result<f64> {
    cfg.validate()?;
    let p = object_transmission(cfg.n_passes, cfg.theta_per_pass);
    Ok(((1.0 - cfg.loss) * (1.0 - p)).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    type Mat = [[Complex64; 2]; 2];

    // Independent oracle: explicit 2x2 complex matrices multiplied left to right.
    fn matmul(a: &Mat, b: &Mat) -> Mat {
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    fn oracle_chain(n: u32, theta: f64, lam: f64, phase: f64, object: bool) -> (Complex64, Complex64) {
        let c = |x: f64| Complex64::new(x, 0.0);
        let u = [[c(theta.cos()), c(-theta.sin())], [c(theta.sin()), c(theta.cos())]];
        let l = [[c(1.0), c(0.0)], [c(0.0), Complex64::from_polar((1.0 - lam).sqrt(), phase)]];
        let o = [[c(1.0), c(0.0)], [c(0.0), c(if object { 0.0 } else { 1.0 })]];
        let pass = matmul(&o, &matmul(&l, &u));
        let mut total = [[c(1.0), c(0.0)], [c(0.0), c(1.0)]];
        for _ in 0..n {
            total = matmul(&pass, &total);
        }
        (total[0][0], total[1][0])
    }

    fn assert_state(s: PhotonState, h: f64, v: f64, tol: f64) {
        assert_abs_diff_eq!(s.amp_h.re, h, epsilon = tol);
        assert_abs_diff_eq!(s.amp_v.re, v, epsilon = tol);
        assert_abs_diff_eq!(s.amp_h.im, 0.0, epsilon = tol);
        assert_abs_diff_eq!(s.amp_v.im, 0.0, epsilon = tol);
    }

    #[test]
    fn rotate_examples() {
        assert_state(rotate(PhotonState::horizontal(), 0.0).unwrap(), 1.0, 0.0, 1e-15);
        assert_state(rotate(PhotonState::horizontal(), FRAC_PI_2).unwrap(), 0.0, 1.0, 1e-15);
        assert_state(rotate(PhotonState::horizontal(), FRAC_PI_4).unwrap(), FRAC_1_SQRT_2, FRAC_1_SQRT_2, 1e-15);
    }

    #[test]
    fn rotate_rejects_non_finite() {
        let bad = PhotonState::from_real(f64::NAN, 0.0);
        assert!(rotate(bad, 0.1).is_err());
        assert!(rotate(PhotonState::horizontal(), f64::INFINITY).is_err());
    }

    #[test]
    fn apply_loss_examples() {
        assert_state(apply_loss(PhotonState::vertical(), 1.0, 0.0).unwrap(), 0.0, 0.0, 1e-15);
        assert_state(apply_loss(PhotonState::horizontal(), 0.5, 0.0).unwrap(), 1.0, 0.0, 1e-15);
        assert_state(apply_loss(PhotonState::vertical(), 0.575, 0.0).unwrap(), 0.0, 0.65192, 5e-6);
    }

    #[test]
    fn apply_loss_rejects_out_of_range() {
        assert!(apply_loss(PhotonState::vertical(), -0.1, 0.0).is_err());
        assert!(apply_loss(PhotonState::vertical(), 1.1, 0.0).is_err());
    }

    #[test]
    fn single_pass_examples() {
        let cfg = PassConfig::new(1, FRAC_PI_2, 0.0).unwrap();
        let s = single_pass(PhotonState::horizontal(), &cfg, Hypothesis::ObjectPresent).unwrap();
        assert_state(s, 0.0, 0.0, 1e-15);

        let cfg = PassConfig::new(1, PI / 10.0, 0.0).unwrap();
        let s = single_pass(PhotonState::horizontal(), &cfg, Hypothesis::ObjectPresent).unwrap();
        assert_state(s, 0.95106, 0.0, 5e-6);

        let cfg = PassConfig::new(1, PI / 10.0, 0.575).unwrap();
        let s = single_pass(PhotonState::horizontal(), &cfg, Hypothesis::ObjectAbsent).unwrap();
        assert_state(s, 0.95106, 0.20145, 5e-6);
    }

    #[test]
    fn evolve_examples() {
        let cfg = PassConfig::new(1, FRAC_PI_2, 0.0).unwrap();
        assert_state(evolve(&cfg, Hypothesis::ObjectAbsent).unwrap(), 0.0, 1.0, 1e-15);

        let cfg = PassConfig::new(5, PI / 10.0, 0.0).unwrap();
        assert_state(evolve(&cfg, Hypothesis::ObjectPresent).unwrap(), 0.778_093, 0.0, 1e-6);

        let cfg = PassConfig::new(2, FRAC_PI_4, 0.0).unwrap();
        assert_state(evolve(&cfg, Hypothesis::ObjectAbsent).unwrap(), 0.0, 1.0, 1e-15);
    }

    #[test]
    fn transmission_examples() {
        let cfg = PassConfig::new(7, 0.3, 0.0).unwrap();
        assert_abs_diff_eq!(transmission_probability(&cfg, Hypothesis::ObjectAbsent).unwrap(), 1.0, epsilon = 1e-12);

        // cos^10(pi/10) = 0.605429...
        for lam in [0.0, 0.3, 0.575, 1.0] {
            let cfg = PassConfig::new(5, PI / 10.0, lam).unwrap();
            let p = transmission_probability(&cfg, Hypothesis::ObjectPresent).unwrap();
            assert_abs_diff_eq!(p, 0.605_429_05, epsilon = 1e-8);
        }
        let cfg = PassConfig::new(5, PI / 10.0, 1.0).unwrap();
        assert_abs_diff_eq!(
            transmission_probability(&cfg, Hypothesis::ObjectAbsent).unwrap(),
            0.605_429_05,
            epsilon = 1e-8
        );
    }

    #[test]
    fn polarization_examples() {
        let cfg = PassConfig::new(1, FRAC_PI_2, 0.0).unwrap();
        let pv = polarization_probability(&cfg, Hypothesis::ObjectAbsent, Polarization::V).unwrap();
        let ph = polarization_probability(&cfg, Hypothesis::ObjectAbsent, Polarization::H).unwrap();
        assert_abs_diff_eq!(pv, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ph, 0.0, epsilon = 1e-15);

        let cfg = PassConfig::new(5, PI / 10.0, 0.575).unwrap();
        let ph = polarization_probability(&cfg, Hypothesis::ObjectAbsent, Polarization::H).unwrap();
        let (oh, _) = oracle_chain(5, PI / 10.0, 0.575, 0.0, false);
        assert_abs_diff_eq!(ph, oh.norm_sqr(), epsilon = 1e-14);
    }

    #[test]
    fn strike_examples() {
        let cfg = PassConfig::new(5, PI / 10.0, 1.0).unwrap();
        assert_eq!(strike_probability(&cfg).unwrap(), 0.0);

        let cfg = PassConfig::new(5, PI / 10.0, 0.575).unwrap();
        let ps = strike_probability(&cfg).unwrap();
        assert_abs_diff_eq!(ps, 0.167_693, epsilon = 1e-6);
        assert_abs_diff_eq!(-(1.0 - ps).ln(), 0.184, epsilon = 5e-4);

        let cfg = PassConfig::new(50, PI / 100.0, 0.084).unwrap();
        let ps = strike_probability(&cfg).unwrap();
        assert_abs_diff_eq!(ps, 0.044_113, epsilon = 1e-6);
        assert_abs_diff_eq!(-(1.0 - ps).ln(), 0.045, epsilon = 5e-4);
    }

    // Strike bookkeeping: after the controlled loss, whatever V amplitude
    // remains is absorbed by the object.
    fn bookkept_strike(cfg: &PassConfig) -> f64 {
        let mut state = PhotonState::horizontal();
        let mut struck = 0.0;
        for _ in 0..cfg.n_passes {
            state = rotate(state, cfg.theta_per_pass).unwrap();
            state = apply_loss(state, cfg.loss, cfg.phase_v).unwrap();
            struck += state.amp_v.norm_sqr();
            state = apply_loss(state, 1.0, 0.0).unwrap();
        }
        struck
    }

    #[test]
    fn config_validation() {
        assert!(PassConfig::new(0, 0.1, 0.1).is_err());
        assert!(PassConfig::new(3, 0.0, 0.1).is_err());
        assert!(PassConfig::new(3, f64::NAN, 0.1).is_err());
        assert!(PassConfig::new(3, 0.1, 1.5).is_err());
        assert!(PassConfig::new(3, 0.1, 0.5).unwrap().with_phase(f64::INFINITY).is_err());
    }

    #[test]
    fn unitary_for_large_n() {
        for n in [1u32, 10, 100, 1000, 3333, 10_000] {
            for total in [0.1, 1.0, FRAC_PI_2, 3.0, n as f64 * FRAC_PI_2] {
                let cfg = PassConfig::from_total_angle(n, total, 0.0).unwrap();
                let t = transmission_probability(&cfg, Hypothesis::ObjectAbsent).unwrap();
                assert_abs_diff_eq!(t, 1.0, epsilon = 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn matches_matrix_chain_oracle(
            n in 1u32..200,
            theta in 1e-3..FRAC_PI_2,
            lam in 0.0..=1.0f64,
            phase in -PI..PI,
            object in any::<bool>(),
        ) {
            let cfg = PassConfig::new(n, theta, lam).unwrap().with_phase(phase).unwrap();
            let h = if object { Hypothesis::ObjectPresent } else { Hypothesis::ObjectAbsent };
            let s = evolve(&cfg, h).unwrap();
            let (oh, ov) = oracle_chain(n, theta, lam, phase, object);
            prop_assert!((s.amp_h - oh).norm() < 1e-12);
            prop_assert!((s.amp_v - ov).norm() < 1e-12);
        }

        #[test]
        fn object_transmission_is_analytic_and_phase_free(
            n in 1u32..500,
            theta in 1e-3..FRAC_PI_2,
            lam in 0.0..=1.0f64,
            phase in -PI..PI,
        ) {
            let cfg = PassConfig::new(n, theta, lam).unwrap();
            let phased = cfg.with_phase(phase).unwrap();
            let p = transmission_probability(&cfg, Hypothesis::ObjectPresent).unwrap();
            let p_phased = transmission_probability(&phased, Hypothesis::ObjectPresent).unwrap();
            prop_assert!((p - object_transmission(n, theta)).abs() < 1e-12);
            prop_assert!((p - p_phased).abs() < 1e-15);
            let full_loss = cfg.with_loss(1.0).unwrap();
            let q = transmission_probability(&full_loss, Hypothesis::ObjectAbsent).unwrap();
            prop_assert!((p - q).abs() < 1e-12);
        }

        #[test]
        fn norm_never_grows(
            n in 1u32..100,
            theta in 1e-3..FRAC_PI_2,
            lam in 0.0..=1.0f64,
            phase in -PI..PI,
            object in any::<bool>(),
        ) {
            let cfg = PassConfig::new(n, theta, lam).unwrap().with_phase(phase).unwrap();
            let h = if object { Hypothesis::ObjectPresent } else { Hypothesis::ObjectAbsent };
            let mut state = PhotonState::horizontal();
            let mut prev = state.norm_sqr();
            for _ in 0..n {
                state = single_pass(state, &cfg, h).unwrap();
                let now = state.norm_sqr();
                prop_assert!(now <= prev + NORM_SLACK);
                prev = now;
            }
            let ph = state.probability(Polarization::H);
            let pv = state.probability(Polarization::V);
            prop_assert!((ph + pv - transmission_probability(&cfg, h).unwrap()).abs() < 1e-14);
        }

        #[test]
        fn strike_closed_form_matches_bookkeeping(
            n in 1u32..300,
            theta in 1e-3..FRAC_PI_2,
            lam in 0.0..=1.0f64,
        ) {
            let cfg = PassConfig::new(n, theta, lam).unwrap();
            prop_assert!((strike_probability(&cfg).unwrap() - bookkept_strike(&cfg)).abs() < 1e-12);
        }
    }
}
