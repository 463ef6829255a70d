//! Statevector simulation of the Gibbs-state preparation circuit.
//!
//! Register layout for an RBM with `n` visible and `m` hidden units:
//! qubits `0..n` hold the visible spins, `n..n+m` the hidden spins, and
//! qubit `n+m` is a single scratchpad ancilla that is measured and reset
//! after every visible–hidden pair.
//!
//! The preparation angles make `|1⟩` the `σ = +1` state of each register
//! qubit: `R_y(θ_i)|0⟩` puts weight `e^{a_i/k}/(e^{a_i/k}+e^{−a_i/k})` on `|1⟩`.
//! [`register_to_joint`] converts a measured register word to the
//! `σᶻ`-basis convention used elsewhere (`|0⟩ ↔ +1`).

use std::fmt;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rbm::RbmParameters;
use crate::spin::{mask, SpinConfiguration};

/// Largest register simulated (amplitudes are 16 bytes each).
pub const MAX_QUBITS: usize = 24;
/// Tolerance on the statevector norm after every gate.
pub const NORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("{0} qubits exceeds the simulator limit of {MAX_QUBITS}")]
    TooManyQubits(usize),
    #[error("regulation constant k must be positive and finite, got {0}")]
    InvalidK(f64),
    #[error("parameter {index} is not finite")]
    NonFiniteParameter { index: usize },
    #[error("post-selecting qubit {qubit} on |1⟩ has zero probability")]
    ZeroNormPostSelection { qubit: usize },
    #[error("qubit {0} used twice in one gate")]
    RepeatedQubit(usize),
}

/// Calls `f` on every basis index whose bits at `fixed` equal the matching
/// entries of `values`, visiting only those `2^{n − |fixed|}` indices.
fn for_each_index<const K: usize>(n_qubits: usize, fixed: [usize; K], values: [bool; K], mut f: impl FnMut(usize)) {
    let pattern = fixed
        .iter()
        .zip(values)
        .fold(0usize, |acc, (&q, v)| if v { acc | 1 << q } else { acc });
    let full = (1usize << n_qubits) - 1;
    let free = fixed.iter().fold(full, |m, &q| m & !(1 << q));
    // Carry-rippler walk over the subsets of the free bits.
    let mut sub = 0usize;
    loop {
        f(sub | pattern);
        sub = (sub | !free).wrapping_add(1) & free;
        if sub == 0 {
            break;
        }
    }
}

/// Which computational-basis values of the two controls fire a gate:
/// the first digit is control₁, the second control₂.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    P00,
    P01,
    P10,
    P11,
}

impl Polarity {
    pub const ALL: [Polarity; 4] = [Polarity::P00, Polarity::P01, Polarity::P10, Polarity::P11];

    fn bits(self) -> (bool, bool) {
        match self {
            Polarity::P00 => (false, false),
            Polarity::P01 => (false, true),
            Polarity::P10 => (true, false),
            Polarity::P11 => (true, true),
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.bits();
        write!(f, "{}{}", a as u8, b as u8)
    }
}

/// The gate set this circuit needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Ry { qubit: usize, angle: f64 },
    X { qubit: usize },
    Cnot { control: usize, target: usize },
    /// `R_y(angle)` on `target` when `control` is `|1⟩`.
    CRy { control: usize, target: usize, angle: f64 },
    /// `R_y(angle)` on `target` when the controls match `polarity`.
    CCRy {
        control1: usize,
        control2: usize,
        target: usize,
        angle: f64,
        polarity: Polarity,
    },
}

/// How two-controlled rotations are executed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateMode {
    /// One native two-controlled rotation.
    #[default]
    Direct,
    /// Five-gate `C-V, CNOT, C-V†, CNOT, C-V` sequence with `V² = R_y(θ)`.
    Decomposed,
}

/// Decompose a two-controlled `R_y(θ)` into single-controlled rotations
/// and CNOTs, with `X` conjugations on the controls that must read `|0⟩`.
pub fn decompose_ccry(
    angle: f64,
    control1: usize,
    control2: usize,
    target: usize,
    polarity: Polarity,
) -> Vec<Gate> {
    let (want1, want2) = polarity.bits();
    let mut flips = Vec::new();
    if !want1 {
        flips.push(Gate::X { qubit: control1 });
    }
    if !want2 {
        flips.push(Gate::X { qubit: control2 });
    }
    let half = 0.5 * angle;
    let mut gates = flips.clone();
    gates.extend([
        Gate::CRy {
            control: control2,
            target,
            angle: half,
        },
        Gate::Cnot {
            control: control1,
            target: control2,
        },
        Gate::CRy {
            control: control2,
            target,
            angle: -half,
        },
        Gate::Cnot {
            control: control1,
            target: control2,
        },
        Gate::CRy {
            control: control1,
            target,
            angle: half,
        },
    ]);
    gates.extend(flips);
    gates
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits > MAX_QUBITS {
            return Err(CircuitError::TooManyQubits(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// The computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, CircuitError> {
        let mut s = Self::new(n_qubits)?;
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn num_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check(&self, qubit: usize) -> Result<(), CircuitError> {
        if qubit >= self.n_qubits {
            Err(CircuitError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_distinct(qubits: &[usize]) -> Result<(), CircuitError> {
        for (k, q) in qubits.iter().enumerate() {
            if qubits[..k].contains(q) {
                return Err(CircuitError::RepeatedQubit(*q));
            }
        }
        Ok(())
    }

    /// Probability of reading `|1⟩` on `qubit`.
    pub fn probability_one(&self, qubit: usize) -> Result<f64, CircuitError> {
        self.check(qubit)?;
        let mut p = 0.0;
        for_each_index(self.n_qubits, [qubit], [true], |i| p += self.amplitudes[i].norm_sqr());
        Ok(p)
    }

    /// Rotate `target` on the subspace where the bits at `fixed` read
    /// `values`; `fixed` must include the target itself, pinned to `false`.
    fn rotate_on<const K: usize>(&mut self, target: usize, angle: f64, fixed: [usize; K], values: [bool; K]) {
        let (s, c) = (0.5 * angle).sin_cos();
        let bit = 1usize << target;
        let amps = &mut self.amplitudes;
        for_each_index(self.n_qubits, fixed, values, |i| {
            let a0 = amps[i];
            let a1 = amps[i | bit];
            amps[i] = a0 * c - a1 * s;
            amps[i | bit] = a0 * s + a1 * c;
        });
    }

    /// `R_y(angle)`: `|0⟩ → cos(angle/2)|0⟩ + sin(angle/2)|1⟩`.
    pub fn apply_ry(&mut self, qubit: usize, angle: f64) -> Result<(), CircuitError> {
        self.check(qubit)?;
        self.rotate_on(qubit, angle, [qubit], [false]);
        Ok(())
    }

    pub fn apply_x(&mut self, qubit: usize) -> Result<(), CircuitError> {
        self.check(qubit)?;
        let bit = 1usize << qubit;
        let amps = &mut self.amplitudes;
        for_each_index(self.n_qubits, [qubit], [false], |i| amps.swap(i, i | bit));
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<(), CircuitError> {
        self.check(control)?;
        self.check(target)?;
        Self::check_distinct(&[control, target])?;
        let tb = 1usize << target;
        let amps = &mut self.amplitudes;
        for_each_index(self.n_qubits, [control, target], [true, false], |i| amps.swap(i, i | tb));
        Ok(())
    }

    pub fn apply_cry(&mut self, control: usize, target: usize, angle: f64) -> Result<(), CircuitError> {
        self.check(control)?;
        self.check(target)?;
        Self::check_distinct(&[control, target])?;
        self.rotate_on(target, angle, [control, target], [true, false]);
        Ok(())
    }

    pub fn apply_ccry(
        &mut self,
        control1: usize,
        control2: usize,
        target: usize,
        angle: f64,
        polarity: Polarity,
    ) -> Result<(), CircuitError> {
        self.check(control1)?;
        self.check(control2)?;
        self.check(target)?;
        Self::check_distinct(&[control1, control2, target])?;
        let (want1, want2) = polarity.bits();
        self.rotate_on(target, angle, [control1, control2, target], [want1, want2, false]);
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<(), CircuitError> {
        match *gate {
            Gate::Ry { qubit, angle } => self.apply_ry(qubit, angle),
            Gate::X { qubit } => self.apply_x(qubit),
            Gate::Cnot { control, target } => self.apply_cnot(control, target),
            Gate::CRy {
                control,
                target,
                angle,
            } => self.apply_cry(control, target, angle),
            Gate::CCRy {
                control1,
                control2,
                target,
                angle,
                polarity,
            } => self.apply_ccry(control1, control2, target, angle, polarity),
        }
    }

    pub fn apply_gates(&mut self, gates: &[Gate]) -> Result<(), CircuitError> {
        gates.iter().try_for_each(|g| self.apply_gate(g))
    }

    fn apply_ccry_mode(
        &mut self,
        control1: usize,
        control2: usize,
        target: usize,
        angle: f64,
        polarity: Polarity,
        mode: GateMode,
    ) -> Result<(), CircuitError> {
        match mode {
            GateMode::Direct => self.apply_ccry(control1, control2, target, angle, polarity),
            GateMode::Decomposed => {
                self.apply_gates(&decompose_ccry(angle, control1, control2, target, polarity))
            }
        }
    }

    /// Rotate the ancilla by `θ₁` when the two controls agree and by `θ₂`
    /// when they differ, as four two-controlled rotations (`11`, `01`, `10`,
    /// `00`).
    pub fn apply_controlled_pair_rotation(
        &mut self,
        qubit_i: usize,
        qubit_j: usize,
        ancilla: usize,
        theta_equal: f64,
        theta_differ: f64,
    ) -> Result<(), CircuitError> {
        self.apply_controlled_pair_rotation_with(
            qubit_i,
            qubit_j,
            ancilla,
            theta_equal,
            theta_differ,
            GateMode::Direct,
        )
    }

    pub fn apply_controlled_pair_rotation_with(
        &mut self,
        qubit_i: usize,
        qubit_j: usize,
        ancilla: usize,
        theta_equal: f64,
        theta_differ: f64,
        mode: GateMode,
    ) -> Result<(), CircuitError> {
        for (polarity, angle) in [
            (Polarity::P11, theta_equal),
            (Polarity::P01, theta_differ),
            (Polarity::P10, theta_differ),
            (Polarity::P00, theta_equal),
        ] {
            self.apply_ccry_mode(qubit_i, qubit_j, ancilla, angle, polarity, mode)?;
        }
        Ok(())
    }

    /// Project `qubit` onto `|1⟩`, renormalize, and reset it to `|0⟩`.
    /// Returns the probability of the `|1⟩` outcome.
    pub fn postselect_one_and_reset(&mut self, qubit: usize) -> Result<f64, CircuitError> {
        let p = self.probability_one(qubit)?;
        self.postselect_known(qubit, p)
    }

    fn postselect_known(&mut self, qubit: usize, p: f64) -> Result<f64, CircuitError> {
        if p <= 0.0 {
            return Err(CircuitError::ZeroNormPostSelection { qubit });
        }
        let bit = 1usize << qubit;
        let scale = 1.0 / p.sqrt();
        let amps = &mut self.amplitudes;
        for_each_index(self.n_qubits, [qubit], [false], |i| {
            amps[i] = amps[i | bit] * scale;
            amps[i | bit] = Complex64::new(0.0, 0.0);
        });
        Ok(p)
    }

    /// Projective measurement of one qubit. Collapses and renormalizes.
    pub fn measure_qubit<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<bool, CircuitError> {
        let p1 = self.probability_one(qubit)?;
        let outcome = rng.random::<f64>() < p1;
        let bit = 1usize << qubit;
        let norm = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / norm.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    /// Sample a computational basis index from `|amplitude|²`.
    pub fn sample_basis<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let dist = WeightedIndex::new(self.probabilities()).expect("normalized state");
        dist.sample(rng)
    }
}

/// Outcome of measuring the ancilla after one pair rotation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub success_prob: f64,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accepted,
    Rejected,
}

/// Measure the ancilla.
///
/// With `rng = None` the accepted branch is taken unconditionally (analytic
/// post-selection). With an RNG, the outcome is drawn; a `|0⟩` result is
/// reported as [`Outcome::Rejected`] and the state should be discarded.
/// An accepted ancilla is reset to `|0⟩` for reuse.
pub fn measure_ancilla_postselect<R: Rng + ?Sized>(
    state: &mut StateVector,
    ancilla: usize,
    rng: Option<&mut R>,
) -> Result<Measurement, CircuitError> {
    let success_prob = state.probability_one(ancilla)?;
    if success_prob <= 0.0 {
        return Err(CircuitError::ZeroNormPostSelection { qubit: ancilla });
    }
    let accepted = match rng {
        Some(rng) => rng.random::<f64>() < success_prob,
        None => true,
    };
    if !accepted {
        return Ok(Measurement {
            success_prob,
            outcome: Outcome::Rejected,
        });
    }
    state.postselect_known(ancilla, success_prob)?;
    Ok(Measurement {
        success_prob,
        outcome: Outcome::Accepted,
    })
}

/// Register qubit assignment for one RBM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registers {
    pub n_visible: usize,
    pub n_hidden: usize,
}

impl Registers {
    pub fn visible(&self, i: usize) -> usize {
        i
    }
    pub fn hidden(&self, j: usize) -> usize {
        self.n_visible + j
    }
    pub fn ancilla(&self) -> usize {
        self.n_visible + self.n_hidden
    }
    pub fn system_qubits(&self) -> usize {
        self.n_visible + self.n_hidden
    }
    /// System register plus the one reusable ancilla.
    pub fn total_qubits(&self) -> usize {
        self.system_qubits() + 1
    }
}

/// Convert a measured system-register word (`|1⟩ ↔ σ = +1`) to the joint
/// `(σᶻ, h)` configuration in the `|0⟩ ↔ +1` convention, visible spins first.
pub fn register_to_joint(register: u64, registers: Registers) -> SpinConfiguration {
    let len = registers.system_qubits();
    SpinConfiguration::from_index(!register & mask(len), len)
}

pub fn joint_to_register(joint: &SpinConfiguration) -> u64 {
    !joint.index() & mask(joint.len())
}

/// Rotation angles for preparing the `k`-regulated Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsCircuitPlan {
    pub registers: Registers,
    pub k: f64,
    pub visible_angles: Vec<f64>,
    pub hidden_angles: Vec<f64>,
    /// `(θ_{ij,1}, θ_{ij,2})` in `i`-major, `j`-minor order.
    pub pair_angles: Vec<(f64, f64)>,
}

/// `2·arcsin(√(e^{v/k} / (e^{v/k} + e^{−v/k})))`.
fn bias_angle(v: f64, k: f64) -> f64 {
    let p = 1.0 / (1.0 + (-2.0 * v / k).exp());
    2.0 * p.sqrt().asin()
}

/// `2·arcsin(√(e^{e/k} · e^{−|w|/k}))` with `e = ±w`; the argument never exceeds 1.
fn coupling_angle(exponent: f64, w_abs: f64, k: f64) -> f64 {
    let p = ((exponent - w_abs) / k).exp().min(1.0);
    2.0 * p.sqrt().asin()
}

pub fn plan_circuit(p: &RbmParameters, k: f64) -> Result<GibbsCircuitPlan, CircuitError> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(CircuitError::InvalidK(k));
    }
    if let Some(index) = p.as_flat().iter().position(|v| !v.is_finite()) {
        return Err(CircuitError::NonFiniteParameter { index });
    }
    let registers = Registers {
        n_visible: p.n_visible(),
        n_hidden: p.n_hidden(),
    };
    let mut pair_angles = Vec::with_capacity(p.n_visible() * p.n_hidden());
    for i in 0..p.n_visible() {
        for j in 0..p.n_hidden() {
            let w = p.w_at(i, j);
            pair_angles.push((coupling_angle(w, w.abs(), k), coupling_angle(-w, w.abs(), k)));
        }
    }
    Ok(GibbsCircuitPlan {
        registers,
        k,
        visible_angles: p.a().iter().map(|&a| bias_angle(a, k)).collect(),
        hidden_angles: p.b().iter().map(|&b| bias_angle(b, k)).collect(),
        pair_angles,
    })
}

impl GibbsCircuitPlan {
    fn pairs(&self) -> impl Iterator<Item = (usize, usize, (f64, f64))> + '_ {
        let m = self.registers.n_hidden;
        self.pair_angles
            .iter()
            .enumerate()
            .map(move |(idx, &angles)| (idx / m, idx % m, angles))
    }

    fn prepared_state(&self) -> Result<StateVector, CircuitError> {
        let r = self.registers;
        let mut state = StateVector::new(r.total_qubits())?;
        for (i, &theta) in self.visible_angles.iter().enumerate() {
            state.apply_ry(r.visible(i), theta)?;
        }
        for (j, &gamma) in self.hidden_angles.iter().enumerate() {
            state.apply_ry(r.hidden(j), gamma)?;
        }
        Ok(state)
    }
}

/// One accepted shot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shot {
    /// Joint `(σᶻ, h)` configuration, `n + m` spins.
    pub joint: SpinConfiguration,
    /// Attempts rejected before this one succeeded.
    pub restarts: u64,
}

/// A plan executed along its accepted branch.
///
/// Every accepted measurement leaves the system in the same post-selected
/// state, so one pass through the gates yields each step's success
/// probability and the final distribution `Q(y)`. Shots drawn from this
/// cache are distributed exactly as shots of the full measure-and-restart
/// protocol.
#[derive(Debug, Clone)]
pub struct GibbsCircuit {
    plan: GibbsCircuitPlan,
    step_success: Vec<f64>,
    register_probabilities: Vec<f64>,
    qubits_allocated: usize,
}

impl GibbsCircuit {
    pub fn prepare(plan: GibbsCircuitPlan) -> Result<Self, CircuitError> {
        Self::prepare_with(plan, GateMode::Direct)
    }

    pub fn prepare_with(plan: GibbsCircuitPlan, mode: GateMode) -> Result<Self, CircuitError> {
        let r = plan.registers;
        let mut state = plan.prepared_state()?;
        let qubits_allocated = state.num_qubits();
        let mut step_success = Vec::with_capacity(plan.pair_angles.len());
        for (i, j, (t1, t2)) in plan.pairs() {
            state.apply_controlled_pair_rotation_with(r.visible(i), r.hidden(j), r.ancilla(), t1, t2, mode)?;
            let m = measure_ancilla_postselect::<rand_chacha::ChaCha8Rng>(&mut state, r.ancilla(), None)?;
            step_success.push(m.success_prob);
        }
        let system = 1usize << r.system_qubits();
        // The ancilla was reset, so all weight sits on indices below 2^{n+m}.
        let register_probabilities = state.amplitudes()[..system]
            .iter()
            .map(|a| a.norm_sqr())
            .collect();
        Ok(Self {
            plan,
            step_success,
            register_probabilities,
            qubits_allocated,
        })
    }

    pub fn plan(&self) -> &GibbsCircuitPlan {
        &self.plan
    }

    /// Number of simulated qubits, `n + m + 1`.
    pub fn qubits_allocated(&self) -> usize {
        self.qubits_allocated
    }

    /// Per-pair probability of the ancilla reading `|1⟩`, in pair order.
    pub fn step_success_probabilities(&self) -> &[f64] {
        &self.step_success
    }

    /// Probability that one attempt passes every measurement.
    pub fn success_probability(&self) -> f64 {
        self.step_success.iter().product()
    }

    /// Post-selected distribution indexed by system-register word.
    pub fn register_probabilities(&self) -> &[f64] {
        &self.register_probabilities
    }

    /// `Q(y)` indexed by joint spin configuration (see [`register_to_joint`]).
    pub fn joint_distribution(&self) -> Vec<f64> {
        let r = self.plan.registers;
        let mut q = vec![0.0; self.register_probabilities.len()];
        for (reg, &p) in self.register_probabilities.iter().enumerate() {
            q[register_to_joint(reg as u64, r).index() as usize] = p;
        }
        q
    }

    /// Run attempts until one passes every ancilla measurement, then read
    /// the system register.
    pub fn run_sampling_shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Shot {
        let reader = ShotReader::new(self);
        reader.shot(rng)
    }

    /// A reusable sampler over this circuit's accepted-branch statistics.
    pub fn shot_reader(&self) -> ShotReader<'_> {
        ShotReader::new(self)
    }
}

/// Samples shots from a prepared circuit.
pub struct ShotReader<'a> {
    circuit: &'a GibbsCircuit,
    readout: WeightedIndex<f64>,
}

impl<'a> ShotReader<'a> {
    fn new(circuit: &'a GibbsCircuit) -> Self {
        let readout = WeightedIndex::new(&circuit.register_probabilities).expect("normalized distribution");
        Self { circuit, readout }
    }

    pub fn shot<R: Rng + ?Sized>(&self, rng: &mut R) -> Shot {
        let mut restarts = 0u64;
        'attempt: loop {
            for &p in &self.circuit.step_success {
                if rng.random::<f64>() >= p {
                    restarts += 1;
                    continue 'attempt;
                }
            }
            break;
        }
        self.read(restarts, rng)
    }

    /// Final system readout after `restarts` failed attempts.
    pub fn read<R: Rng + ?Sized>(&self, restarts: u64, rng: &mut R) -> Shot {
        let reg = self.readout.sample(rng) as u64;
        Shot {
            joint: register_to_joint(reg, self.circuit.plan.registers),
            restarts,
        }
    }
}

/// One shot simulated gate by gate on a fresh statevector per attempt, with
/// stochastic ancilla measurements and a full restart on every `|0⟩`.
pub fn run_sampling_shot_statevector<R: Rng + ?Sized>(
    plan: &GibbsCircuitPlan,
    mode: GateMode,
    rng: &mut R,
) -> Result<Shot, CircuitError> {
    let r = plan.registers;
    let mut restarts = 0u64;
    'attempt: loop {
        let mut state = plan.prepared_state()?;
        for (i, j, (t1, t2)) in plan.pairs() {
            state.apply_controlled_pair_rotation_with(r.visible(i), r.hidden(j), r.ancilla(), t1, t2, mode)?;
            let m = measure_ancilla_postselect(&mut state, r.ancilla(), Some(&mut *rng))?;
            if m.outcome == Outcome::Rejected {
                restarts += 1;
                continue 'attempt;
            }
        }
        let mut reg = 0u64;
        for q in 0..r.system_qubits() {
            if state.measure_qubit(q, rng)? {
                reg |= 1 << q;
            }
        }
        return Ok(Shot {
            joint: register_to_joint(reg, r),
            restarts,
        });
    }
}
