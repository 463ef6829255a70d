//! Visible-layer distributions for the optimizer.
//!
//! Three backends produce `P(x)`:
//!
//! * `exact` enumerates all `2ⁿ` visible configurations with the hidden
//!   units summed out;
//! * `circuit-analytic` reads the post-selected statevector of the
//!   preparation circuit, which holds the flattened distribution
//!   `Q(y) ∝ P(y)^{1/k}` over joint configurations `y = (σᶻ, h)`;
//! * `circuit-shots` accumulates accepted measurement shots of the same
//!   circuit into an empirical `Q̂(y)`.
//!
//! Circuit backends undo the regulation by raising the joint table to the
//! power `k` and renormalizing before the hidden units are marginalized.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{plan_circuit, CircuitError, GateMode, GibbsCircuit};
use crate::rbm::RbmParameters;
use crate::spin::SpinConfiguration;

/// Enumeration limit on `n + m` for the exact backend.
pub const EXACT_ENUMERATION_LIMIT: usize = 30;
/// Accepted samples per call in shot mode unless configured otherwise.
pub const DEFAULT_SHOTS: usize = 8192;
pub const DEFAULT_SEED: u64 = 20_190_517;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("n + m = {0} exceeds the exact enumeration limit of {EXACT_ENUMERATION_LIMIT}")]
    TooLarge(usize),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("no shot can succeed: per-attempt success probability is {0:e}")]
    ZeroSuccess(f64),
    #[error("success rate is undefined without shot attempts")]
    NoAttempts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Exact,
    CircuitAnalytic,
    CircuitShots,
}

impl std::str::FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Backend::Exact),
            "circuit-analytic" => Ok(Backend::CircuitAnalytic),
            "circuit-shots" => Ok(Backend::CircuitShots),
            other => Err(format!(
                "unknown sampler `{other}` (expected exact, circuit-analytic or circuit-shots)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KPolicy {
    Fixed(f64),
    /// `k = max(½ Σ|w_ij|, 1)`, recomputed for every parameter set.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub backend: Backend,
    pub shots: usize,
    pub k_policy: KPolicy,
    pub rng_seed: u64,
    #[serde(default)]
    pub gate_mode: GateMode,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Exact,
            shots: DEFAULT_SHOTS,
            k_policy: KPolicy::Adaptive,
            rng_seed: DEFAULT_SEED,
            gate_mode: GateMode::Direct,
        }
    }
}

impl SamplerConfig {
    pub fn with_backend(backend: Backend) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        if self.backend == Backend::CircuitShots && self.shots == 0 {
            return Err(SamplerError::InvalidConfig("shots must be at least 1".into()));
        }
        if let KPolicy::Fixed(k) = self.k_policy {
            if !(k > 0.0 && k.is_finite()) {
                return Err(SamplerError::InvalidConfig(format!("fixed k must be positive, got {k}")));
            }
        }
        Ok(())
    }

    pub fn k_for(&self, p: &RbmParameters) -> f64 {
        match self.k_policy {
            KPolicy::Fixed(k) => k,
            KPolicy::Adaptive => adaptive_k(p),
        }
    }
}

/// Visible-layer probabilities plus sampling metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledDistribution {
    pub n_visible: usize,
    /// `(x, P(x))` with `P(x) > 0`, ordered by basis index.
    pub probabilities: Vec<(SpinConfiguration, f64)>,
    /// Shot attempts, including rejected ones.
    pub attempts: u64,
    /// Accepted shots.
    pub successes: u64,
    pub k_used: f64,
    /// Log normalizer, exact backend only.
    pub log_z: Option<f64>,
    /// Analytic per-attempt success probability of the circuit.
    pub success_probability: Option<f64>,
    /// `e^{−(2/k) Σ|w|}` for circuit backends.
    pub success_bound: Option<f64>,
}

impl SampledDistribution {
    fn from_dense(n_visible: usize, dense: &[f64]) -> Vec<(SpinConfiguration, f64)> {
        dense
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (SpinConfiguration::from_index(i as u64, n_visible), p))
            .collect()
    }

    /// Dense `2ⁿ` table, zero for unobserved configurations.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.n_visible];
        for (x, p) in &self.probabilities {
            out[x.index() as usize] = *p;
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().map(|(_, p)| p).sum()
    }

    pub fn telemetry(&self) -> SamplerTelemetry {
        SamplerTelemetry {
            k: self.k_used,
            attempts: self.attempts,
            successes: self.successes,
            success_bound: self.success_bound,
            success_probability: self.success_probability,
        }
    }
}

/// Per-iteration sampler record for trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerTelemetry {
    pub k: f64,
    pub attempts: u64,
    pub successes: u64,
    pub success_bound: Option<f64>,
    pub success_probability: Option<f64>,
}

/// `max(½ Σ_ij |w_ij|, 1)`.
pub fn adaptive_k(p: &RbmParameters) -> f64 {
    (0.5 * p.sum_abs_w()).max(1.0)
}

/// `e^{−(2/k) Σ_ij |w_ij|}`, a lower bound on the per-attempt success
/// probability of the circuit.
pub fn success_lower_bound(p: &RbmParameters, k: f64) -> f64 {
    (-(2.0 / k) * p.sum_abs_w()).exp()
}

/// Exact visible marginal and its log normalizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    /// `P(x)` indexed by basis index.
    pub probabilities: Vec<f64>,
    pub log_z: f64,
}

pub fn exact_joint_distribution(p: &RbmParameters) -> Result<ExactDistribution, SamplerError> {
    let size = p.n_visible() + p.n_hidden();
    if size > EXACT_ENUMERATION_LIMIT {
        return Err(SamplerError::TooLarge(size));
    }
    let logs: Vec<f64> = SpinConfiguration::enumerate(p.n_visible())
        .map(|x| p.unnormalized_log_prob(&x))
        .collect();
    let log_z = log_sum_exp(&logs);
    let probabilities = logs.iter().map(|l| (l - log_z).exp()).collect();
    Ok(ExactDistribution { probabilities, log_z })
}

fn log_sum_exp(logs: &[f64]) -> f64 {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln()
}

/// Raise a joint `(σᶻ, h)` table to the power `k`, renormalize, and sum
/// out the hidden units. `joint` is indexed by joint spin configuration
/// with the visible spins in the low `n_visible` bits; it need not be
/// normalized. Returns the dense visible marginal.
pub fn power_k_marginal(joint: &[f64], n_visible: usize, k: f64) -> Vec<f64> {
    let logs: Vec<f64> = joint
        .iter()
        .map(|&q| if q > 0.0 { k * q.ln() } else { f64::NEG_INFINITY })
        .collect();
    let norm = log_sum_exp(&logs);
    let visible_mask = (1usize << n_visible) - 1;
    let mut marginal = vec![0.0; 1 << n_visible];
    for (y, l) in logs.iter().enumerate() {
        if *l > f64::NEG_INFINITY {
            marginal[y & visible_mask] += (l - norm).exp();
        }
    }
    marginal
}

/// Stateful sampler: owns the RNG stream across optimizer iterations.
#[derive(Debug, Clone)]
pub struct Sampler {
    config: SamplerConfig,
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(config: SamplerConfig) -> Result<Self, SamplerError> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        Ok(Self { config, rng })
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    pub fn sample(&mut self, p: &RbmParameters) -> Result<SampledDistribution, SamplerError> {
        let n = p.n_visible();
        match self.config.backend {
            Backend::Exact => {
                let exact = exact_joint_distribution(p)?;
                Ok(SampledDistribution {
                    n_visible: n,
                    probabilities: SampledDistribution::from_dense(n, &exact.probabilities),
                    attempts: 0,
                    successes: 0,
                    k_used: 1.0,
                    log_z: Some(exact.log_z),
                    success_probability: None,
                    success_bound: None,
                })
            }
            Backend::CircuitAnalytic => {
                let k = self.config.k_for(p);
                let circuit = GibbsCircuit::prepare_with(plan_circuit(p, k)?, self.config.gate_mode)?;
                let marginal = power_k_marginal(&circuit.joint_distribution(), n, k);
                Ok(SampledDistribution {
                    n_visible: n,
                    probabilities: SampledDistribution::from_dense(n, &marginal),
                    attempts: 0,
                    successes: 0,
                    k_used: k,
                    log_z: None,
                    success_probability: Some(circuit.success_probability()),
                    success_bound: Some(success_lower_bound(p, k)),
                })
            }
            Backend::CircuitShots => {
                let k = self.config.k_for(p);
                let circuit = GibbsCircuit::prepare_with(plan_circuit(p, k)?, self.config.gate_mode)?;
                let success = circuit.success_probability();
                if !(success > 0.0) {
                    return Err(SamplerError::ZeroSuccess(success));
                }
                // Attempts are independent, so the failures before each
                // accepted shot are geometric in the per-attempt success rate.
                let failures = Geometric::new(success.min(1.0)).map_err(|_| SamplerError::ZeroSuccess(success))?;
                let reader = circuit.shot_reader();
                let mut joint = vec![0.0; 1 << (n + p.n_hidden())];
                let mut attempts = 0u64;
                for _ in 0..self.config.shots {
                    let restarts = failures.sample(&mut self.rng);
                    attempts = attempts.saturating_add(restarts + 1);
                    let shot = reader.read(restarts, &mut self.rng);
                    joint[shot.joint.index() as usize] += 1.0;
                }
                let marginal = power_k_marginal(&joint, n, k);
                Ok(SampledDistribution {
                    n_visible: n,
                    probabilities: SampledDistribution::from_dense(n, &marginal),
                    attempts,
                    successes: self.config.shots as u64,
                    k_used: k,
                    log_z: None,
                    success_probability: Some(success),
                    success_bound: Some(success_lower_bound(p, k)),
                })
            }
        }
    }
}

/// One-off sampling with a fresh RNG stream seeded from `cfg`.
pub fn sample_distribution(p: &RbmParameters, cfg: &SamplerConfig) -> Result<SampledDistribution, SamplerError> {
    Sampler::new(cfg.clone())?.sample(p)
}

/// Accepted shots per attempt.
pub fn empirical_success_rate(dist: &SampledDistribution) -> Result<f64, SamplerError> {
    if dist.attempts == 0 {
        return Err(SamplerError::NoAttempts);
    }
    Ok(dist.successes as f64 / dist.attempts as f64)
}

/// Total-variation distance between two dense distributions.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}
