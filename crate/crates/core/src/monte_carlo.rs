//! Event-level simulation of interrogation trials and campaigns.
//!
//! Each trial sends one photon through the N passes. Absorption events are
//! located pass by pass: a single survival draw `u ~ U[0, 1)` is compared
//! with the squared norm after every loss element, and the photon is absorbed
//! at the first element that pushes the norm to `u` or below. This is the
//! same law as drawing a conditional absorption at each element, but keeps
//! paired runs (for example feedback on/off) on common random numbers.
//!
//! Environmental noise comes from a separate stream seeded by
//! [`NoiseModel::drift_seed`], so the photon draws and the channel noise can
//! be replayed independently.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::hypothesis_stats::{decide, Outcome, OutcomeDistribution};
use crate::state_evolution::{apply_loss, object_transmission, rotate, Hypothesis, PassConfig, PhotonState};
use crate::zeno_optimizer::optimize_loss;

/// Trials between feedback adjustments.
pub const DEFAULT_BLOCK_LEN: u64 = 100;
/// Weight of the newest block in the controller's moving averages.
pub const DEFAULT_EMA_WEIGHT: f64 = 0.1;

/// Parametric channel noise acting on the V arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Loss probability per pass on top of the controlled loss.
    pub extra_loss: f64,
    /// Standard deviation of the zero-mean Gaussian phase added to V per pass.
    pub phase_sigma: f64,
    pub drift_seed: u64,
}

impl NoiseModel {
    pub fn none() -> Self {
        Self { extra_loss: 0.0, phase_sigma: 0.0, drift_seed: 0 }
    }

    pub fn new(extra_loss: f64, phase_sigma: f64, drift_seed: u64) -> Result<Self> {
        let noise = Self { extra_loss, phase_sigma, drift_seed };
        noise.validate(0.0)?;
        Ok(noise)
    }

    /// Checks the noise against a controlled loss `loss`.
    pub fn validate(&self, loss: f64) -> Result<()> {
        if !(self.extra_loss >= 0.0 && self.extra_loss <= 1.0 - loss + 1e-12) {
            return Err(invalid(format!(
                "extra_loss = {} must lie in [0, 1 - loss] with loss = {loss}",
                self.extra_loss
            )));
        }
        if !(self.phase_sigma >= 0.0 && self.phase_sigma.is_finite()) {
            return Err(invalid(format!("phase_sigma = {} must be finite and >= 0", self.phase_sigma)));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.extra_loss == 0.0 && self.phase_sigma == 0.0
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

/// What the controller's monitor saw over one block of trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentReading {
    pub mean_phase: f64,
    pub extra_loss: f64,
    pub samples: u64,
}

/// The noisy channel: a seeded phase-noise stream plus running statistics of
/// the phases it has produced since the last reading.
#[derive(Debug, Clone)]
pub struct Environment {
    noise: NoiseModel,
    rng: ChaCha8Rng,
    normal: Option<Normal<f64>>,
    phase_sum: f64,
    phase_count: u64,
}

impl Environment {
    /// Environment for campaign `stream`, seeded from the noise model's
    /// `drift_seed`.
    pub fn new(noise: NoiseModel, stream: u64) -> Result<Self> {
        noise.validate(0.0)?;
        let mut rng = ChaCha8Rng::seed_from_u64(noise.drift_seed);
        rng.set_stream(stream);
        let normal = (noise.phase_sigma > 0.0)
            .then(|| Normal::new(0.0, noise.phase_sigma).map_err(|e| invalid(e.to_string())))
            .transpose()?;
        Ok(Self { noise, rng, normal, phase_sum: 0.0, phase_count: 0 })
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    fn fill_phases(&mut self, out: &mut Vec<f64>, n: usize) {
        out.clear();
        match &self.normal {
            Some(normal) => {
                for _ in 0..n {
                    let phi = normal.sample(&mut self.rng);
                    self.phase_sum += phi;
                    self.phase_count += 1;
                    out.push(phi);
                }
            }
            None => out.resize(n, 0.0),
        }
    }

    /// Returns the block statistics and starts a new block.
    pub fn take_reading(&mut self) -> EnvironmentReading {
        let reading = EnvironmentReading {
            mean_phase: if self.phase_count > 0 { self.phase_sum / self.phase_count as f64 } else { 0.0 },
            extra_loss: self.noise.extra_loss,
            samples: self.phase_count,
        };
        self.phase_sum = 0.0;
        self.phase_count = 0;
        reading
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    /// The photon left the apparatus after all passes.
    Transmitted,
    /// Absorbed by the controlled or environmental loss.
    Lost,
    /// Absorbed by the object.
    Struck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub outcome: TrialOutcome,
    pub hypothesis_truth: Hypothesis,
}

/// Runs one photon through the apparatus.
///
/// The controlled loss and compensating phase come from `cfg`; the
/// environment adds its extra loss and a fresh random phase on every pass.
pub fn run_trial<R: Rng + ?Sized>(
    trial_index: u64,
    cfg: &PassConfig,
    truth: Hypothesis,
    env: &mut Environment,
    rng: &mut R,
) -> Result<TrialRecord> {
    let mut phases = Vec::with_capacity(cfg.n_passes as usize);
    run_trial_with_buffer(trial_index, cfg, truth, env, rng, &mut phases)
}

fn run_trial_with_buffer<R: Rng + ?Sized>(
    trial_index: u64,
    cfg: &PassConfig,
    truth: Hypothesis,
    env: &mut Environment,
    rng: &mut R,
    phases: &mut Vec<f64>,
) -> Result<TrialRecord> {
    cfg.validate()?;
    env.noise.validate(cfg.loss)?;
    let loss = (cfg.loss + env.noise.extra_loss).min(1.0);
    let u: f64 = rng.random();
    // Phases for every pass are drawn up front so the noise stream advances
    // identically whatever happens to the photon.
    env.fill_phases(phases, cfg.n_passes as usize);

    let mut state = PhotonState::horizontal();
    let mut outcome = TrialOutcome::Transmitted;
    for &phi in phases.iter() {
        state = rotate(state, cfg.theta_per_pass)?;
        state = apply_loss(state, loss, cfg.phase_v + phi)?;
        if u >= state.norm_sqr() {
            outcome = TrialOutcome::Lost;
            break;
        }
        if truth == Hypothesis::ObjectPresent {
            state = apply_loss(state, 1.0, 0.0)?;
            if u >= state.norm_sqr() {
                outcome = TrialOutcome::Struck;
                break;
            }
        }
    }
    Ok(TrialRecord { trial_index, outcome, hypothesis_truth: truth })
}

/// Where the object-absent transmission `q` used by the decision comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QSource {
    /// The controller's current prediction at its setting and estimated loss.
    #[default]
    Running,
    /// The noise-free partial-Zeno minimum.
    Optimum,
}

/// Everything that defines a campaign except its random streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub cfg: PassConfig,
    pub truth: Hypothesis,
    pub noise: NoiseModel,
    pub m_trials: u64,
    pub feedback: bool,
    pub q_source: QSource,
    pub block_len: u64,
    pub ema_weight: f64,
}

impl CampaignSpec {
    pub fn new(cfg: PassConfig, truth: Hypothesis, noise: NoiseModel, m_trials: u64, feedback: bool) -> Self {
        Self {
            cfg,
            truth,
            noise,
            m_trials,
            feedback,
            q_source: QSource::Running,
            block_len: DEFAULT_BLOCK_LEN,
            ema_weight: DEFAULT_EMA_WEIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.noise.validate(self.cfg.loss)?;
        if self.m_trials == 0 {
            return Err(invalid("a campaign needs at least one trial"));
        }
        if self.block_len == 0 {
            return Err(invalid("feedback block length must be positive"));
        }
        if !(self.ema_weight > 0.0 && self.ema_weight <= 1.0) {
            return Err(invalid("ema_weight must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub campaign_index: u64,
    pub m_trials: u64,
    pub truth: Hypothesis,
    pub transmitted: u64,
    pub lost: u64,
    pub strikes: u64,
    pub empirical_transmission: f64,
    pub p: f64,
    pub q_used: f64,
    pub decision: Hypothesis,
    pub decision_error: bool,
    pub stayed_invisible: bool,
    /// Controlled loss in effect when the campaign ended.
    pub final_loss: f64,
}

/// Keeps the apparatus at the partial-Zeno point of the *effective* loss by
/// subtracting the estimated environmental loss from the controlled loss and
/// cancelling the estimated mean phase.
#[derive(Debug, Clone)]
struct Controller {
    n_passes: u32,
    theta: f64,
    target_loss: f64,
    loss: f64,
    phase: f64,
    est_extra_loss: Option<f64>,
    est_phase: Option<f64>,
    weight: f64,
}

impl Controller {
    fn new(cfg: &PassConfig, weight: f64, feedback: bool) -> Result<Self> {
        // The object-free optimum depends only on (N, theta); with the
        // environmental loss folded in, re-optimizing reduces to shifting the
        // controlled loss by the estimate.
        let target_loss = if feedback { optimize_loss(cfg.n_passes, cfg.theta_per_pass)?.lambda_opt } else { cfg.loss };
        Ok(Self {
            n_passes: cfg.n_passes,
            theta: cfg.theta_per_pass,
            target_loss,
            loss: cfg.loss,
            phase: cfg.phase_v,
            est_extra_loss: None,
            est_phase: None,
            weight,
        })
    }

    fn update(&mut self, reading: EnvironmentReading) {
        // Moving averages start from the first reading.
        let ema = |prev: Option<f64>, x: f64| prev.map_or(x, |p| (1.0 - self.weight) * p + self.weight * x);
        self.est_extra_loss = Some(ema(self.est_extra_loss, reading.extra_loss));
        if reading.samples > 0 {
            self.est_phase = Some(ema(self.est_phase, reading.mean_phase));
        }
        self.loss = (self.target_loss - self.est_extra_loss.unwrap_or(0.0)).clamp(0.0, 1.0);
        self.phase = -self.est_phase.unwrap_or(0.0);
    }

    fn config(&self) -> PassConfig {
        PassConfig { n_passes: self.n_passes, theta_per_pass: self.theta, loss: self.loss, phase_v: self.phase }
    }

    /// Predicted object-free transmission at the current setting.
    fn predicted_q(&self) -> Result<f64> {
        let effective = (self.loss + self.est_extra_loss.unwrap_or(0.0)).min(1.0);
        let cfg = PassConfig { loss: effective, phase_v: 0.0, ..self.config() };
        crate::state_evolution::transmission_probability(&cfg, Hypothesis::ObjectAbsent)
    }
}

/// Runs `spec.m_trials` trials and decides between the hypotheses from the
/// transmitted count.
pub fn run_campaign<R: Rng + ?Sized>(
    spec: &CampaignSpec,
    campaign_index: u64,
    env: &mut Environment,
    rng: &mut R,
) -> Result<CampaignResult> {
    spec.validate()?;
    let mut controller = Controller::new(&spec.cfg, spec.ema_weight, spec.feedback)?;
    let mut phases = Vec::with_capacity(spec.cfg.n_passes as usize);
    let (mut transmitted, mut lost, mut strikes) = (0u64, 0u64, 0u64);

    for t in 0..spec.m_trials {
        if spec.feedback && t > 0 && t % spec.block_len == 0 {
            controller.update(env.take_reading());
        }
        let cfg = controller.config();
        let record = run_trial_with_buffer(t, &cfg, spec.truth, env, rng, &mut phases)?;
        match record.outcome {
            TrialOutcome::Transmitted => transmitted += 1,
            TrialOutcome::Lost => lost += 1,
            TrialOutcome::Struck => strikes += 1,
        }
    }

    let p = object_transmission(spec.cfg.n_passes, spec.cfg.theta_per_pass);
    let q = match spec.q_source {
        QSource::Running => controller.predicted_q()?,
        QSource::Optimum => optimize_loss(spec.cfg.n_passes, spec.cfg.theta_per_pass)?.q_min,
    };
    let counts = BTreeMap::from([(Outcome::One, transmitted), (Outcome::Two, spec.m_trials - transmitted)]);
    let decision = decide(&counts, &OutcomeDistribution::binary(q)?, &OutcomeDistribution::binary(p)?, rng)?;

    Ok(CampaignResult {
        campaign_index,
        m_trials: spec.m_trials,
        truth: spec.truth,
        transmitted,
        lost,
        strikes,
        empirical_transmission: transmitted as f64 / spec.m_trials as f64,
        p,
        q_used: q,
        decision,
        decision_error: decision != spec.truth,
        stayed_invisible: strikes == 0,
        final_loss: controller.loss,
    })
}

/// Photon-draw stream for campaign `index` under master seed `seed`.
pub fn campaign_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `count` independent campaigns in parallel. Campaign `i` uses photon
/// stream `i` of `seed` and environment stream `i` of the noise model's
/// drift seed; results come back ordered by index.
pub fn run_campaigns(spec: &CampaignSpec, seed: u64, count: u64) -> Result<Vec<CampaignResult>> {
    spec.validate()?;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut env = Environment::new(spec.noise, i)?;
            run_campaign(spec, i, &mut env, &mut campaign_rng(seed, i))
        })
        .collect()
}

/// Fraction of object-present campaigns in which the photon never struck.
pub fn empirical_visibility(results: &[CampaignResult]) -> Result<f64> {
    let first = results.first().ok_or_else(|| invalid("no campaigns to summarize"))?;
    for r in results {
        if r.truth != Hypothesis::ObjectPresent {
            return Err(invalid("invisibility is only defined for object-present campaigns"));
        }
        if r.m_trials != first.m_trials {
            return Err(invalid("campaigns have different trial counts"));
        }
    }
    let unseen = results.iter().filter(|r| r.strikes == 0).count();
    Ok(unseen as f64 / results.len() as f64)
}

/// Fraction of campaigns that chose the wrong hypothesis.
pub fn empirical_error_rate(results: &[CampaignResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(invalid("no campaigns to summarize"));
    }
    Ok(results.iter().filter(|r| r.decision_error).count() as f64 / results.len() as f64)
}

/// Writes one JSON object per campaign, one per line.
pub fn write_transcript<W: std::io::Write>(mut out: W, results: &[CampaignResult]) -> Result<()> {
    for r in results {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
