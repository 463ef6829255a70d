//! Gradient-descent minimization of `⟨H⟩` over RBM parameters.
//!
//! Expectations are taken under `π(x) ∝ P(x) s(x)²`, the distribution of
//! `|Φ(x)|²`. With local energy `E_loc(x) = Σ_{x′} H_{x,x′} Φ(x′)/Φ(x)` and
//! log-derivatives `D_p(x) = ∂_p Φ(x) / Φ(x)`,
//!
//! ```text
//!   ⟨H⟩ = ⟨E_loc⟩_π,     ∂_p ⟨H⟩ = 2⟨E_loc D_p⟩_π − 2⟨E_loc⟩_π ⟨D_p⟩_π.
//! ```

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::PauliHamiltonian;
use crate::rbm::{RbmError, RbmParameters, SIGN_EPSILON};
use crate::sampler::{SampledDistribution, Sampler, SamplerConfig, SamplerError, SamplerTelemetry};
use crate::spin::SpinConfiguration;

pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_INIT_RANGE: f64 = 0.02;
pub const DEFAULT_ITERATIONS: usize = 20_000;
/// Budget for warm-started points: 1/40 of the cold-start default.
pub const DEFAULT_WARM_ITERATIONS: usize = DEFAULT_ITERATIONS / TRANSFER_BUDGET_DIVISOR;
pub const TRANSFER_BUDGET_DIVISOR: usize = 40;
pub const DEFAULT_SEED: u64 = 1_812_433_253;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Rbm(#[from] RbmError),
    #[error("invalid optimizer configuration: {0}")]
    InvalidConfig(String),
    #[error("distribution has no configuration with non-zero weight")]
    EmptyDistribution,
    #[error("Hamiltonian has {hamiltonian} qubits but the parameters have {parameters} visible units")]
    DimensionMismatch { hamiltonian: usize, parameters: usize },
    #[error("iteration {iteration}: gradient entry {index} is {value}")]
    NonFiniteGradient { iteration: usize, index: usize, value: f64 },
    #[error("iteration {iteration}: energy estimate is {value}")]
    NonFiniteEnergy { iteration: usize, value: f64 },
}

/// Handling of configurations where the sign layer vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignGuardPolicy {
    /// Drop such configurations from the averages and freeze the `d`, `c`
    /// blocks for that iteration.
    SkipUpdate,
    /// Evaluate with `s(x)` replaced by `±ε`.
    Clamp(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    pub init_range: f64,
    pub rng_seed: u64,
    pub sign_guard_policy: SignGuardPolicy,
    pub warm_start: Option<PathBuf>,
}

impl OptimizerConfig {
    pub fn new(hidden_units: usize) -> Self {
        Self {
            hidden_units,
            learning_rate: DEFAULT_LEARNING_RATE,
            iterations: DEFAULT_ITERATIONS,
            init_range: DEFAULT_INIT_RANGE,
            rng_seed: DEFAULT_SEED,
            sign_guard_policy: SignGuardPolicy::SkipUpdate,
            warm_start: None,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(OptimizeError::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.init_range > 0.0 && self.init_range.is_finite()) {
            return Err(OptimizeError::InvalidConfig(format!(
                "init range must be positive, got {}",
                self.init_range
            )));
        }
        if self.iterations == 0 {
            return Err(OptimizeError::InvalidConfig("iterations must be at least 1".into()));
        }
        if let SignGuardPolicy::Clamp(eps) = self.sign_guard_policy {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(OptimizeError::InvalidConfig(format!("clamp ε must lie in (0, 1), got {eps}")));
            }
        }
        Ok(())
    }
}

/// `Φ(x′)/Φ(x)` from log amplitudes; the normalizer cancels.
fn weight_ratio(p: &RbmParameters, log_x: f64, sign_x: f64, xp: &SpinConfiguration) -> f64 {
    (0.5 * (p.unnormalized_log_prob(xp) - log_x)).exp() * p.sign_value(xp) / sign_x
}

/// `E_loc(x) = Σ_{x′} H_{x,x′} Φ(x′)/Φ(x)`.
///
/// The amplitude normalizer cancels in the ratio; `log_z` is accepted for
/// symmetry with [`RbmParameters::amplitude`] and unused.
pub fn local_energy(
    h: &PauliHamiltonian,
    p: &RbmParameters,
    x: &SpinConfiguration,
    _log_z: f64,
) -> Result<f64, RbmError> {
    let s = p.sign_value(x);
    if s.abs() < SIGN_EPSILON {
        return Err(RbmError::SignSingularity { config: *x, sign: s });
    }
    Ok(local_energy_with_sign(h, p, x, s))
}

fn local_energy_with_sign(h: &PauliHamiltonian, p: &RbmParameters, x: &SpinConfiguration, s: f64) -> f64 {
    let log_x = p.unnormalized_log_prob(x);
    let mut e = 0.0;
    h.for_each_connected(x, |xp, amp| {
        e += if xp == *x { amp } else { amp * weight_ratio(p, log_x, s, &xp) };
    });
    e
}

/// Energy estimate and gradient under one distribution estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    pub energy: f64,
    /// Flat parameter layout, see [`crate::rbm::ParamLayout`].
    pub gradient: Vec<f64>,
    /// Whether the `d`, `c` blocks were frozen by the sign guard.
    pub sign_blocks_skipped: bool,
}

pub fn energy_and_gradient(
    h: &PauliHamiltonian,
    p: &RbmParameters,
    dist: &SampledDistribution,
    policy: SignGuardPolicy,
) -> Result<EnergyGradient, OptimizeError> {
    if h.n_qubits() != p.n_visible() {
        return Err(OptimizeError::DimensionMismatch {
            hamiltonian: h.n_qubits(),
            parameters: p.n_visible(),
        });
    }
    let layout = p.layout();
    let dim = layout.len();
    let mut skipped = false;

    let mut samples = Vec::with_capacity(dist.probabilities.len());
    for (x, px) in &dist.probabilities {
        let s = p.sign_value(x);
        let s = if s.abs() >= SIGN_EPSILON {
            s
        } else {
            match policy {
                SignGuardPolicy::SkipUpdate => {
                    skipped = true;
                    continue;
                }
                SignGuardPolicy::Clamp(eps) => {
                    if s < 0.0 {
                        -eps
                    } else {
                        eps
                    }
                }
            }
        };
        let weight = px * s * s;
        if weight > 0.0 {
            samples.push((weight, *x, s));
        }
    }
    let total: f64 = samples.iter().map(|(w, _, _)| w).sum();
    if samples.is_empty() || !(total > 0.0) {
        return Err(OptimizeError::EmptyDistribution);
    }

    let mut mean_e = 0.0;
    let mut mean_d = vec![0.0; dim];
    let mut mean_ed = vec![0.0; dim];
    for (w, x, s) in &samples {
        let pi = w / total;
        let e = local_energy_with_sign(h, p, x, *s);
        let d = p.log_derivatives_with_sign(x, *s);
        mean_e += pi * e;
        for k in 0..dim {
            mean_d[k] += pi * d[k];
            mean_ed[k] += pi * e * d[k];
        }
    }
    let mut gradient: Vec<f64> = (0..dim)
        .map(|k| 2.0 * (mean_ed[k] - mean_e * mean_d[k]))
        .collect();
    if skipped {
        for k in layout.d() {
            gradient[k] = 0.0;
        }
        gradient[layout.c()] = 0.0;
    }
    Ok(EnergyGradient {
        energy: mean_e,
        gradient,
        sign_blocks_skipped: skipped,
    })
}

/// `p ← p − lr · ∇`.
pub fn step(p: &RbmParameters, grad: &[f64], lr: f64) -> RbmParameters {
    let mut next = p.clone();
    for (v, g) in next.as_flat_mut().iter_mut().zip(grad) {
        *v -= lr * g;
    }
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub energy: f64,
    pub gradient_max_norm: f64,
    pub sampler: SamplerTelemetry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrajectory {
    pub optimizer: OptimizerConfig,
    pub sampler: SamplerConfig,
    pub records: Vec<IterationRecord>,
    pub min_energy: f64,
    pub argmin_iteration: usize,
    pub argmin_parameters: crate::rbm::ParameterFile,
    pub final_parameters: crate::rbm::ParameterFile,
}

impl OptimizationTrajectory {
    /// Parameters at which the minimum energy was recorded.
    pub fn best_parameters(&self) -> RbmParameters {
        self.argmin_parameters
            .clone()
            .try_into()
            .expect("trajectory stores consistent parameters")
    }

    pub fn final_parameters(&self) -> RbmParameters {
        self.final_parameters
            .clone()
            .try_into()
            .expect("trajectory stores consistent parameters")
    }

    /// Running minimum after each iteration.
    pub fn running_min(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::INFINITY, |m, r| {
                *m = m.min(r.energy);
                Some(*m)
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectory serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `iteration,energy` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,energy\n");
        for r in &self.records {
            out.push_str(&format!("{},{}\n", r.iteration, r.energy));
        }
        out
    }

    pub fn save_json(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

/// Parameters drawn uniformly from `(−init_range, init_range)`.
pub fn initial_parameters(n_visible: usize, cfg: &OptimizerConfig) -> RbmParameters {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    RbmParameters::random_uniform(n_visible, cfg.hidden_units, cfg.init_range, &mut rng)
}

/// Train from a cold start, or from `cfg.warm_start` when set.
pub fn train(
    h: &PauliHamiltonian,
    cfg: &OptimizerConfig,
    sampler: &SamplerConfig,
) -> Result<OptimizationTrajectory, OptimizeError> {
    cfg.validate()?;
    let initial = match &cfg.warm_start {
        Some(path) => RbmParameters::load(path)?,
        None => initial_parameters(h.n_qubits(), cfg),
    };
    train_from(h, cfg, sampler, initial)
}

/// Train starting from explicit parameters.
pub fn train_from(
    h: &PauliHamiltonian,
    cfg: &OptimizerConfig,
    sampler_cfg: &SamplerConfig,
    initial: RbmParameters,
) -> Result<OptimizationTrajectory, OptimizeError> {
    cfg.validate()?;
    if initial.n_visible() != h.n_qubits() {
        return Err(OptimizeError::DimensionMismatch {
            hamiltonian: h.n_qubits(),
            parameters: initial.n_visible(),
        });
    }
    if initial.n_hidden() != cfg.hidden_units {
        return Err(OptimizeError::InvalidConfig(format!(
            "initial parameters have {} hidden units, configuration asks for {}",
            initial.n_hidden(),
            cfg.hidden_units
        )));
    }
    let mut sampler = Sampler::new(sampler_cfg.clone())?;
    let mut params = initial;
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut best = (f64::INFINITY, 0usize, params.clone());

    for iteration in 0..cfg.iterations {
        let dist = sampler.sample(&params)?;
        let eg = energy_and_gradient(h, &params, &dist, cfg.sign_guard_policy)?;
        if !eg.energy.is_finite() {
            return Err(OptimizeError::NonFiniteEnergy {
                iteration,
                value: eg.energy,
            });
        }
        if let Some((index, &value)) = eg.gradient.iter().enumerate().find(|(_, g)| !g.is_finite()) {
            return Err(OptimizeError::NonFiniteGradient { iteration, index, value });
        }
        if eg.energy < best.0 {
            best = (eg.energy, iteration, params.clone());
        }
        records.push(IterationRecord {
            iteration,
            energy: eg.energy,
            gradient_max_norm: eg.gradient.iter().fold(0.0, |m, g| m.max(g.abs())),
            sampler: dist.telemetry(),
        });
        params = step(&params, &eg.gradient, cfg.learning_rate);
    }

    Ok(OptimizationTrajectory {
        optimizer: cfg.clone(),
        sampler: sampler_cfg.clone(),
        records,
        min_energy: best.0,
        argmin_iteration: best.1,
        argmin_parameters: (&best.2).into(),
        final_parameters: (&params).into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{parse_hamiltonian, PauliOperator, PauliTerm};
    use crate::sampler::{exact_joint_distribution, sample_distribution, Backend};
    use rand::Rng;

    fn exact_dist(p: &RbmParameters) -> SampledDistribution {
        sample_distribution(p, &SamplerConfig::default()).unwrap()
    }

    fn random_params(n: usize, m: usize, seed: u64) -> RbmParameters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RbmParameters::random_uniform(n, m, 0.5, &mut rng)
    }

    #[test]
    fn diagonal_hamiltonian_local_energy_is_diagonal_entry() {
        let h = parse_hamiltonian("qubits 3\n0.3 Z0\n-0.7 Z1 Z2\n0.2 I").unwrap();
        let p = random_params(3, 2, 1);
        for x in SpinConfiguration::enumerate(3) {
            let diag = h.connected_configurations(&x)[0].1;
            assert!((local_energy(&h, &p, &x, 0.0).unwrap() - diag).abs() < 1e-15);
        }
    }

    #[test]
    fn off_diagonal_vanishes_when_neighbour_weight_vanishes() {
        // Φ concentrated on |0⟩: a large bias starves the flipped state.
        let mut p = RbmParameters::zeros(1, 0);
        p.as_flat_mut()[0] = 200.0;
        p.set_c(3.0);
        let h = parse_hamiltonian("qubits 1\n1.0 X0").unwrap();
        let e = local_energy(&h, &p, &SpinConfiguration::all_up(1), 0.0).unwrap();
        assert!(e.abs() < 1e-80);
    }

    #[test]
    fn local_energy_rejects_vanishing_sign() {
        let p = RbmParameters::zeros(1, 1);
        let h = parse_hamiltonian("qubits 1\n1.0 X0").unwrap();
        assert!(local_energy(&h, &p, &SpinConfiguration::all_up(1), 0.0).is_err());
    }

    #[test]
    fn mean_local_energy_is_rayleigh_quotient() {
        let h = parse_hamiltonian("qubits 3\n0.4 X0 X1\n-0.3 Y1 Y2\n0.5 Z0\n0.2 X2\n-0.1 Z0 Z2").unwrap();
        for seed in 0..5 {
            let p = random_params(3, 4, seed);
            let exact = exact_joint_distribution(&p).unwrap();
            let phi: Vec<f64> = SpinConfiguration::enumerate(3)
                .map(|x| p.joint_weight(&x, exact.log_z))
                .collect();
            let mut hphi = vec![0.0; 8];
            h.apply_vector(&phi, &mut hphi);
            let rq = phi.iter().zip(&hphi).map(|(a, b)| a * b).sum::<f64>()
                / phi.iter().map(|a| a * a).sum::<f64>();
            let eg = energy_and_gradient(&h, &p, &exact_dist(&p), SignGuardPolicy::SkipUpdate).unwrap();
            assert!((eg.energy - rq).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_hamiltonian_has_zero_gradient() {
        let h = parse_hamiltonian("qubits 2\n1.7 I").unwrap();
        let p = random_params(2, 3, 4);
        let eg = energy_and_gradient(&h, &p, &exact_dist(&p), SignGuardPolicy::SkipUpdate).unwrap();
        assert!((eg.energy - 1.7).abs() < 1e-14);
        assert!(eg.gradient.iter().all(|g| g.abs() < 1e-13), "{:?}", eg.gradient);
    }

    #[test]
    fn gradient_vanishes_at_representable_eigenstate() {
        // Ground state of Z0 + Z1 is |00⟩; an all-up configuration with
        // saturated bias and sign is representable to machine precision.
        let h = parse_hamiltonian("qubits 2\n1.0 Z0\n1.0 Z1").unwrap();
        let mut p = RbmParameters::zeros(2, 1);
        p.as_flat_mut()[0] = -30.0;
        p.as_flat_mut()[1] = -30.0;
        p.set_c(20.0);
        let eg = energy_and_gradient(&h, &p, &exact_dist(&p), SignGuardPolicy::SkipUpdate).unwrap();
        assert!((eg.energy + 2.0).abs() < 1e-12);
        assert!(eg.gradient.iter().all(|g| g.abs() < 1e-12));
    }

    #[test]
    fn sign_guard_policies() {
        let h = parse_hamiltonian("qubits 2\n1.0 X0\n0.5 Z1").unwrap();
        let mut p = random_params(2, 2, 9);
        // d = (1, 1), c = 0 makes s vanish on the two mixed configurations.
        let l = p.layout();
        p.as_flat_mut()[l.d().start] = 1.0;
        p.as_flat_mut()[l.d().start + 1] = 1.0;
        p.set_c(0.0);
        let dist = exact_dist(&p);
        let skip = energy_and_gradient(&h, &p, &dist, SignGuardPolicy::SkipUpdate).unwrap();
        assert!(skip.sign_blocks_skipped);
        assert!(skip.gradient[l.d()].iter().all(|&g| g == 0.0));
        assert_eq!(skip.gradient[l.c()], 0.0);
        let clamp = energy_and_gradient(&h, &p, &dist, SignGuardPolicy::Clamp(1e-6)).unwrap();
        assert!(!clamp.sign_blocks_skipped);
        assert!(clamp.gradient.iter().all(|g| g.is_finite()));
    }

    #[test]
    fn step_is_identity_for_zero_gradient_or_rate() {
        let p = random_params(2, 2, 3);
        let zero = vec![0.0; p.layout().len()];
        assert_eq!(step(&p, &zero, 0.1), p);
        let g: Vec<f64> = (0..p.layout().len()).map(|i| i as f64).collect();
        assert_eq!(step(&p, &g, 0.0), p);
    }

    #[test]
    fn step_descends_a_quadratic() {
        // ⟨H⟩ = (c − 1)² on the single c parameter.
        let mut p = RbmParameters::zeros(1, 0);
        for _ in 0..2000 {
            let c = p.c();
            let mut g = vec![0.0; p.layout().len()];
            g[p.layout().c()] = 2.0 * (c - 1.0);
            p = step(&p, &g, 0.01);
        }
        assert!((p.c() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zz_converges_to_ground_energy() {
        let h = PauliHamiltonian::new(
            2,
            vec![PauliTerm::new(1.0, [PauliOperator::z(0), PauliOperator::z(1)]).unwrap()],
        )
        .unwrap();
        let mut cfg = OptimizerConfig::new(4);
        cfg.iterations = 2000;
        let traj = train(&h, &cfg, &SamplerConfig::default()).unwrap();
        assert!((traj.min_energy + 1.0).abs() < 1e-3, "min {}", traj.min_energy);
        let running = traj.running_min();
        assert!(running.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*running.last().unwrap(), traj.min_energy);
    }

    #[test]
    fn warm_start_resumes_at_same_energy() {
        let h = parse_hamiltonian("qubits 2\n0.5 Z0\n0.3 Z1\n0.2 X0 X1").unwrap();
        let mut cfg = OptimizerConfig::new(4);
        cfg.iterations = 1500;
        let traj = train(&h, &cfg, &SamplerConfig::default()).unwrap();
        let mut warm = cfg.clone();
        warm.iterations = 1;
        let best = traj.best_parameters();
        let again = train_from(&h, &warm, &SamplerConfig::default(), best).unwrap();
        assert!((again.records[0].energy - traj.min_energy).abs() < 1e-6);
    }

    #[test]
    fn exact_training_is_deterministic() {
        let h = parse_hamiltonian("qubits 2\n0.5 Z0\n0.3 Z1 X0\n0.2 X0 X1").unwrap();
        let mut cfg = OptimizerConfig::new(3);
        cfg.iterations = 200;
        let a = train(&h, &cfg, &SamplerConfig::default()).unwrap();
        let b = train(&h, &cfg, &SamplerConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shot_training_is_reproducible_for_fixed_seed() {
        let h = parse_hamiltonian("qubits 2\n0.5 Z0\n0.2 X1").unwrap();
        let mut cfg = OptimizerConfig::new(2);
        cfg.iterations = 20;
        let mut s = SamplerConfig::with_backend(Backend::CircuitShots);
        s.shots = 256;
        assert_eq!(train(&h, &cfg, &s).unwrap(), train(&h, &cfg, &s).unwrap());
    }

    #[test]
    fn invalid_configs() {
        let h = parse_hamiltonian("qubits 1\n1.0 Z0").unwrap();
        let mut cfg = OptimizerConfig::new(1);
        cfg.iterations = 0;
        assert!(matches!(train(&h, &cfg, &SamplerConfig::default()), Err(OptimizeError::InvalidConfig(_))));
        let mut cfg = OptimizerConfig::new(1);
        cfg.learning_rate = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = OptimizerConfig::new(1);
        let wrong = RbmParameters::zeros(2, 1);
        assert!(matches!(
            train_from(&h, &cfg, &SamplerConfig::default(), wrong),
            Err(OptimizeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exact_energies_respect_variational_bound() {
        let h = parse_hamiltonian("qubits 2\n0.5 Z0\n-0.3 Z1 X0\n0.2 Y0 Y1").unwrap();
        let e0 = h.exact_ground_energy().unwrap();
        let mut cfg = OptimizerConfig::new(4);
        cfg.iterations = 500;
        let traj = train(&h, &cfg, &SamplerConfig::default()).unwrap();
        assert!(traj.records.iter().all(|r| r.energy >= e0 - 1e-12));
    }

    #[test]
    fn trajectory_json_round_trip() {
        let h = parse_hamiltonian("qubits 2\n0.5 Z0\n0.2 X1").unwrap();
        let mut cfg = OptimizerConfig::new(2);
        cfg.iterations = 30;
        let traj = train(&h, &cfg, &SamplerConfig::default()).unwrap();
        let back = OptimizationTrajectory::from_json(&traj.to_json()).unwrap();
        assert_eq!(back, traj);
        let csv = traj.to_csv();
        assert_eq!(csv.lines().count(), 31);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let row = rng.random_range(1..31);
        let fields: Vec<&str> = csv.lines().nth(row).unwrap().split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), traj.records[row - 1].energy);
    }
}
