//! Three-layer RBM wave function.
//!
//! The visible layer `σᶻ` couples to `m` hidden `±1` units; summing them out
//! gives the unnormalized probability
//!
//! ```text
//!   ln P̃(x) = Σ_i a_i σᶻᵢ + Σ_j ln 2cosh θ_j,   θ_j = Σ_i w_ij σᶻᵢ + b_j
//! ```
//!
//! with amplitude `φ(x) = √P(x)`. A sign layer `s(x) = tanh(Σ_i d_i σᶻᵢ + c)`
//! supplies the coefficient signs, and the wave function is `Φ(x) = φ(x) s(x)`.
//!
//! Parameters are addressed through one flat layout: `a` (n), `b` (m), `w`
//! (n·m, row-major by visible index), `d` (n), then `c`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spin::SpinConfiguration;

/// `|s(x)|` below this is treated as a degenerate sign layer.
pub const SIGN_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RbmError {
    #[error("parameter dimensions disagree: {0}")]
    DimensionMismatch(String),
    #[error("parameter {index} is not finite")]
    NonFinite { index: usize },
    #[error("sign layer vanishes at {config}: s(x) = {sign:e}")]
    SignSingularity { config: SpinConfiguration, sign: f64 },
    #[error("parameter file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Offsets of each parameter block in the flat vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub n: usize,
    pub m: usize,
}

impl ParamLayout {
    pub fn a(&self) -> std::ops::Range<usize> {
        0..self.n
    }
    pub fn b(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.m
    }
    pub fn w(&self) -> std::ops::Range<usize> {
        let s = self.n + self.m;
        s..s + self.n * self.m
    }
    pub fn w_index(&self, i: usize, j: usize) -> usize {
        self.n + self.m + i * self.m + j
    }
    pub fn d(&self) -> std::ops::Range<usize> {
        let s = self.n + self.m + self.n * self.m;
        s..s + self.n
    }
    pub fn c(&self) -> usize {
        2 * self.n + self.m + self.n * self.m
    }
    pub fn len(&self) -> usize {
        self.c() + 1
    }
    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters {
    layout: ParamLayout,
    values: Vec<f64>,
}

/// `θ_j = Σ_i w_ij σᶻᵢ + b_j` for one visible configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenActivation {
    pub theta: Vec<f64>,
}

/// `ln(2 cosh θ)` without overflow.
#[inline]
pub fn log_2cosh(theta: f64) -> f64 {
    let t = theta.abs();
    t + (-2.0 * t).exp().ln_1p()
}

impl RbmParameters {
    pub fn zeros(n: usize, m: usize) -> Self {
        let layout = ParamLayout { n, m };
        Self {
            layout,
            values: vec![0.0; layout.len()],
        }
    }

    /// Every entry drawn uniformly from `(−half_width, half_width)`.
    pub fn random_uniform<R: Rng + ?Sized>(n: usize, m: usize, half_width: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(n, m);
        for v in &mut p.values {
            *v = rng.random_range(-half_width..half_width);
        }
        p
    }

    pub fn from_flat(n: usize, m: usize, values: Vec<f64>) -> Result<Self, RbmError> {
        let layout = ParamLayout { n, m };
        if values.len() != layout.len() {
            return Err(RbmError::DimensionMismatch(format!(
                "n={n}, m={m} needs {} values, got {}",
                layout.len(),
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(RbmError::NonFinite { index });
        }
        Ok(Self { layout, values })
    }

    pub fn from_blocks(
        a: Vec<f64>,
        b: Vec<f64>,
        w: Vec<Vec<f64>>,
        d: Vec<f64>,
        c: f64,
    ) -> Result<Self, RbmError> {
        let n = a.len();
        let m = b.len();
        if w.len() != n || w.iter().any(|row| row.len() != m) {
            return Err(RbmError::DimensionMismatch(format!("w must be {n}×{m}")));
        }
        if d.len() != n {
            return Err(RbmError::DimensionMismatch(format!(
                "d has {} entries, expected {n}",
                d.len()
            )));
        }
        let mut values = a;
        values.extend(b);
        values.extend(w.into_iter().flatten());
        values.extend(d);
        values.push(c);
        Self::from_flat(n, m, values)
    }

    pub fn n_visible(&self) -> usize {
        self.layout.n
    }

    pub fn n_hidden(&self) -> usize {
        self.layout.m
    }

    pub fn layout(&self) -> ParamLayout {
        self.layout
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }

    pub fn as_flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn a(&self) -> &[f64] {
        &self.values[self.layout.a()]
    }

    pub fn b(&self) -> &[f64] {
        &self.values[self.layout.b()]
    }

    /// Row-major `n × m` couplings.
    pub fn w(&self) -> &[f64] {
        &self.values[self.layout.w()]
    }

    pub fn w_at(&self, i: usize, j: usize) -> f64 {
        self.values[self.layout.w_index(i, j)]
    }

    pub fn d(&self) -> &[f64] {
        &self.values[self.layout.d()]
    }

    pub fn c(&self) -> f64 {
        self.values[self.layout.c()]
    }

    pub fn set_c(&mut self, c: f64) {
        let i = self.layout.c();
        self.values[i] = c;
    }

    pub fn sum_abs_w(&self) -> f64 {
        self.w().iter().map(|w| w.abs()).sum()
    }

    /// Copy with the sign-layer weights `(d, c)` negated.
    pub fn with_negated_sign_layer(&self) -> Self {
        let mut p = self.clone();
        for i in self.layout.d() {
            p.values[i] = -p.values[i];
        }
        let c = self.layout.c();
        p.values[c] = -p.values[c];
        p
    }

    pub fn hidden_activation(&self, x: &SpinConfiguration) -> HiddenActivation {
        debug_assert_eq!(x.len(), self.layout.n);
        let m = self.layout.m;
        let mut theta = self.b().to_vec();
        let w = self.w();
        for i in 0..self.layout.n {
            let s = x.spin(i);
            let row = &w[i * m..(i + 1) * m];
            for (t, &wij) in theta.iter_mut().zip(row) {
                *t += wij * s;
            }
        }
        HiddenActivation { theta }
    }

    /// `Σ_i a_i σᶻᵢ + Σ_j ln 2cosh θ_j`.
    pub fn unnormalized_log_prob(&self, x: &SpinConfiguration) -> f64 {
        let visible: f64 = self.a().iter().zip(x.spins()).map(|(a, s)| a * s).sum();
        let hidden: f64 = self
            .hidden_activation(x)
            .theta
            .iter()
            .map(|&t| log_2cosh(t))
            .sum();
        visible + hidden
    }

    /// `φ(x) = exp(½(ln P̃(x) − ln Z))`.
    pub fn amplitude(&self, x: &SpinConfiguration, log_z: f64) -> f64 {
        (0.5 * (self.unnormalized_log_prob(x) - log_z)).exp()
    }

    /// `s(x) = tanh(Σ_i d_i σᶻᵢ + c)`.
    pub fn sign_value(&self, x: &SpinConfiguration) -> f64 {
        let arg: f64 = self.d().iter().zip(x.spins()).map(|(d, s)| d * s).sum::<f64>() + self.c();
        arg.tanh()
    }

    /// `Φ(x) = φ(x) s(x)`.
    pub fn joint_weight(&self, x: &SpinConfiguration, log_z: f64) -> f64 {
        self.amplitude(x, log_z) * self.sign_value(x)
    }

    /// `∂ ln Φ(x) / ∂p` for every parameter, in flat layout. The
    /// configuration-independent `⟨·⟩_RBM` offsets of the RBM blocks are
    /// left out; they cancel in covariance-form gradients.
    pub fn log_derivatives(&self, x: &SpinConfiguration) -> Result<Vec<f64>, RbmError> {
        let s = self.sign_value(x);
        if s.abs() < SIGN_EPSILON {
            return Err(RbmError::SignSingularity { config: *x, sign: s });
        }
        Ok(self.log_derivatives_with_sign(x, s))
    }

    /// As [`log_derivatives`](Self::log_derivatives) with a caller-supplied
    /// sign value, for clamping policies.
    pub fn log_derivatives_with_sign(&self, x: &SpinConfiguration, s: f64) -> Vec<f64> {
        let l = self.layout;
        let mut out = vec![0.0; l.len()];
        let tanh_theta: Vec<f64> = self
            .hidden_activation(x)
            .theta
            .iter()
            .map(|t| t.tanh())
            .collect();
        for i in 0..l.n {
            out[i] = 0.5 * x.spin(i);
        }
        for j in 0..l.m {
            out[l.n + j] = 0.5 * tanh_theta[j];
        }
        for i in 0..l.n {
            let si = x.spin(i);
            for j in 0..l.m {
                out[l.w_index(i, j)] = 0.5 * tanh_theta[j] * si;
            }
        }
        let dc = 1.0 / s - s;
        let d0 = l.d().start;
        for i in 0..l.n {
            out[d0 + i] = x.spin(i) * dc;
        }
        out[l.c()] = dc;
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ParameterFile::from(self)).expect("parameters serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, RbmError> {
        let file: ParameterFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RbmError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RbmError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RbmError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| RbmError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// On-disk parameter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterFile {
    pub n: usize,
    pub m: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub c: f64,
}

impl From<&RbmParameters> for ParameterFile {
    fn from(p: &RbmParameters) -> Self {
        let m = p.n_hidden();
        Self {
            n: p.n_visible(),
            m,
            a: p.a().to_vec(),
            b: p.b().to_vec(),
            w: (0..p.n_visible())
                .map(|i| p.w()[i * m..(i + 1) * m].to_vec())
                .collect(),
            d: p.d().to_vec(),
            c: p.c(),
        }
    }
}

impl TryFrom<ParameterFile> for RbmParameters {
    type Error = RbmError;

    fn try_from(f: ParameterFile) -> Result<Self, RbmError> {
        if f.a.len() != f.n || f.b.len() != f.m {
            return Err(RbmError::DimensionMismatch(format!(
                "header says n={}, m={} but a has {} and b has {} entries",
                f.n,
                f.m,
                f.a.len(),
                f.b.len()
            )));
        }
        RbmParameters::from_blocks(f.a, f.b, f.w, f.d, f.c)
    }
}
