//! Pauli-string Hamiltonians.
//!
//! A Hamiltonian is a real-weighted sum of Pauli strings,
//!
//! ```text
//!   H = Σ_k h_k · P_k,    P_k = σ_{α₁}^{i₁} ⊗ σ_{α₂}^{i₂} ⊗ …
//! ```
//!
//! Every accepted Hamiltonian is a real symmetric matrix in the `σᶻ` basis;
//! terms carrying an odd number of `Y` factors are rejected at construction.
//! Matrix elements are produced without building the matrix: a Pauli string
//! maps `|x⟩` to a single `|x′⟩` with a `±1` phase.

mod eigen;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::spin::SpinConfiguration;

pub use eigen::{dense_ground_energy, lanczos_ground_energy, DENSE_LIMIT, EXACT_LIMIT};
pub use parse::parse_hamiltonian;

/// Amplitudes of merged connected states below this magnitude are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("missing `qubits <n>` header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("qubit {qubit} appears more than once in a term")]
    DuplicateQubit { qubit: usize },
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit Hamiltonian")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("term `{term}` has {count} Y operators; an odd count gives imaginary matrix elements")]
    OddYCount { term: String, count: usize },
    #[error("coefficient {0} is not finite")]
    NonFiniteCoefficient(f64),
    #[error("a Hamiltonian needs at least one qubit")]
    NoQubits,
    #[error("{n_qubits} qubits exceeds the exact-diagonalization limit of {max}")]
    TooLarge { n_qubits: usize, max: usize },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<HamiltonianError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    fn symbol(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    pub axis: PauliAxis,
    pub qubit: usize,
}

impl PauliOperator {
    pub fn new(axis: PauliAxis, qubit: usize) -> Self {
        Self { axis, qubit }
    }

    pub fn x(qubit: usize) -> Self {
        Self::new(PauliAxis::X, qubit)
    }

    pub fn y(qubit: usize) -> Self {
        Self::new(PauliAxis::Y, qubit)
    }

    pub fn z(qubit: usize) -> Self {
        Self::new(PauliAxis::Z, qubit)
    }
}

/// A weighted Pauli string. Identity factors are dropped; the remaining
/// operators are kept sorted by qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    coefficient: f64,
    operators: Vec<PauliOperator>,
}

impl PauliTerm {
    pub fn new(
        coefficient: f64,
        operators: impl IntoIterator<Item = PauliOperator>,
    ) -> Result<Self, HamiltonianError> {
        if !coefficient.is_finite() {
            return Err(HamiltonianError::NonFiniteCoefficient(coefficient));
        }
        let mut ops: Vec<PauliOperator> = operators
            .into_iter()
            .filter(|op| op.axis != PauliAxis::I)
            .collect();
        ops.sort_by_key(|op| op.qubit);
        if let Some(w) = ops.windows(2).find(|w| w[0].qubit == w[1].qubit) {
            return Err(HamiltonianError::DuplicateQubit { qubit: w[0].qubit });
        }
        Ok(Self {
            coefficient,
            operators: ops,
        })
    }

    /// `coefficient · I`.
    pub fn identity(coefficient: f64) -> Result<Self, HamiltonianError> {
        Self::new(coefficient, [])
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn operators(&self) -> &[PauliOperator] {
        &self.operators
    }

    pub fn is_identity(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn y_count(&self) -> usize {
        self.operators
            .iter()
            .filter(|op| op.axis == PauliAxis::Y)
            .count()
    }

    fn max_qubit(&self) -> Option<usize> {
        self.operators.last().map(|op| op.qubit)
    }

    /// Same Pauli string with the coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, HamiltonianError> {
        Self::new(self.coefficient * factor, self.operators.iter().copied())
    }

    fn masks(&self) -> (u64, u64) {
        let mut flip = 0u64;
        let mut phase = 0u64;
        for op in &self.operators {
            let bit = 1u64 << op.qubit;
            match op.axis {
                PauliAxis::X => flip |= bit,
                PauliAxis::Y => {
                    flip |= bit;
                    phase |= bit;
                }
                PauliAxis::Z => phase |= bit,
                PauliAxis::I => {}
            }
        }
        (flip, phase)
    }

    /// `i^{#Y}` for an even `Y` count.
    fn y_phase(&self) -> f64 {
        if (self.y_count() / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Act on `|x⟩`: returns `x′` and the real amplitude `⟨x′|term|x⟩`.
    ///
    /// `X` flips a spin with factor 1, `Z` keeps it with factor `±1`, and
    /// `Y` flips it with factor `±i` (`Y|0⟩ = i|1⟩`, `Y|1⟩ = −i|0⟩`). The
    /// imaginary units cancel in pairs, which callers must guarantee by
    /// only applying terms with an even `Y` count.
    pub fn apply(&self, x: &SpinConfiguration) -> (SpinConfiguration, f64) {
        debug_assert!(self.y_count().is_multiple_of(2), "odd Y count");
        let (flip, phase) = self.masks();
        let sign = if (x.index() & phase).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        (
            x.flipped_mask(flip),
            self.coefficient * self.y_phase() * sign,
        )
    }
}

impl fmt::Display for PauliTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        if self.operators.is_empty() {
            return f.write_str(" I");
        }
        for op in &self.operators {
            write!(f, " {}{}", op.axis.symbol(), op.qubit)?;
        }
        Ok(())
    }
}

/// Apply one term to a configuration. See [`PauliTerm::apply`].
pub fn apply_term(term: &PauliTerm, x: &SpinConfiguration) -> (SpinConfiguration, f64) {
    term.apply(x)
}

/// All terms sharing a flip pattern reach the same `x′`.
#[derive(Debug, Clone, PartialEq)]
struct FlipGroup {
    flip: u64,
    /// `(phase mask, coefficient · i^{#Y})` per term.
    diagonal_factors: Vec<(u64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    groups: Vec<FlipGroup>,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self, HamiltonianError> {
        if n_qubits == 0 {
            return Err(HamiltonianError::NoQubits);
        }
        if n_qubits > crate::spin::MAX_SPINS {
            return Err(HamiltonianError::TooLarge {
                n_qubits,
                max: crate::spin::MAX_SPINS,
            });
        }
        for term in &terms {
            if let Some(q) = term.max_qubit().filter(|&q| q >= n_qubits) {
                return Err(HamiltonianError::QubitOutOfRange { qubit: q, n_qubits });
            }
            let count = term.y_count();
            if count % 2 == 1 {
                return Err(HamiltonianError::OddYCount {
                    term: term.to_string(),
                    count,
                });
            }
        }

        let mut groups: Vec<FlipGroup> = Vec::new();
        for term in &terms {
            let (flip, phase) = term.masks();
            let factor = (phase, term.coefficient * term.y_phase());
            match groups.iter_mut().find(|g| g.flip == flip) {
                Some(g) => g.diagonal_factors.push(factor),
                None => groups.push(FlipGroup {
                    flip,
                    diagonal_factors: vec![factor],
                }),
            }
        }

        Ok(Self {
            n_qubits,
            terms,
            groups,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Hilbert-space dimension `2ⁿ`.
    pub fn dimension(&self) -> usize {
        1usize << self.n_qubits
    }

    /// `factor · H`.
    pub fn scaled(&self, factor: f64) -> Result<Self, HamiltonianError> {
        let terms = self
            .terms
            .iter()
            .map(|t| t.scaled(factor))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(self.n_qubits, terms)
    }

    /// Whether every term is built from `I` and `Z` only.
    pub fn is_diagonal(&self) -> bool {
        self.groups.iter().all(|g| g.flip == 0)
    }

    /// Non-zero row entries `(x′, H_{x,x′})`, one per distinct `x′`, in
    /// order of first appearance among the terms.
    pub fn connected_configurations(&self, x: &SpinConfiguration) -> Vec<(SpinConfiguration, f64)> {
        debug_assert_eq!(x.len(), self.n_qubits);
        let mut out = Vec::with_capacity(self.groups.len());
        self.for_each_connected(x, |xp, amp| out.push((xp, amp)));
        out
    }

    /// Visit `(x′, H_{x,x′})` without allocating.
    pub fn for_each_connected(
        &self,
        x: &SpinConfiguration,
        mut visit: impl FnMut(SpinConfiguration, f64),
    ) {
        let bits = x.index();
        for group in &self.groups {
            let amp: f64 = group
                .diagonal_factors
                .iter()
                .map(|&(phase, c)| {
                    if (bits & phase).count_ones().is_multiple_of(2) {
                        c
                    } else {
                        -c
                    }
                })
                .sum();
            if amp.abs() >= PRUNE_THRESHOLD {
                visit(x.flipped_mask(group.flip), amp);
            }
        }
    }

    /// `out = H · v` over the full computational basis.
    pub fn apply_vector(&self, v: &[f64], out: &mut [f64]) {
        let dim = self.dimension();
        assert_eq!(v.len(), dim);
        assert_eq!(out.len(), dim);
        // H is symmetric, so the row view gives (Hv)_x = Σ H_{x,x′} v_{x′}.
        for (idx, slot) in out.iter_mut().enumerate() {
            let x = SpinConfiguration::from_index(idx as u64, self.n_qubits);
            let mut acc = 0.0;
            self.for_each_connected(&x, |xp, amp| acc += amp * v[xp.index() as usize]);
            *slot = acc;
        }
    }

    /// Dense row-major `2ⁿ × 2ⁿ` matrix. Intended for small systems.
    pub fn dense_matrix(&self) -> Vec<f64> {
        let dim = self.dimension();
        let mut m = vec![0.0; dim * dim];
        for row in 0..dim {
            let x = SpinConfiguration::from_index(row as u64, self.n_qubits);
            self.for_each_connected(&x, |xp, amp| m[row * dim + xp.index() as usize] += amp);
        }
        m
    }

    /// Minimum eigenvalue.
    ///
    /// Dense diagonalization up to [`DENSE_LIMIT`] qubits, matrix-free Lanczos
    /// up to [`EXACT_LIMIT`].
    pub fn exact_ground_energy(&self) -> Result<f64, HamiltonianError> {
        exact_ground_energy(self)
    }
}

impl fmt::Display for PauliHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for term in &self.terms {
            writeln!(f, "{term}")?;
        }
        Ok(())
    }
}

pub fn connected_configurations(
    h: &PauliHamiltonian,
    x: &SpinConfiguration,
) -> Vec<(SpinConfiguration, f64)> {
    h.connected_configurations(x)
}

pub fn exact_ground_energy(h: &PauliHamiltonian) -> Result<f64, HamiltonianError> {
    let n = h.n_qubits();
    if n > EXACT_LIMIT {
        return Err(HamiltonianError::TooLarge {
            n_qubits: n,
            max: EXACT_LIMIT,
        });
    }
    if n <= DENSE_LIMIT {
        Ok(dense_ground_energy(h))
    } else {
        Ok(lanczos_ground_energy(h))
    }
}
