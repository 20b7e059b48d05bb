//! Ising problem containers, the perturbed-ferromagnetic-chain builder, and
//! annealing schedules.
//!
//! Conventions used throughout the crate:
//! * spin value `+1` corresponds to the computational `|0>` state, so the
//!   all-up configuration is the all-`+1` configuration;
//! * a chain instance orders its qubits as `(a_1..a_M, b_1..b_M)`, auxiliary
//!   qubits first, then backbone qubits;
//! * basis-state indices use bit `j` for qubit `j`, with bit value `0`
//!   meaning spin `+1`;
//! * energies are in GHz (linear frequency).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exhaustive enumeration bound for [`low_energy_census`] and the Gibbs
/// oracle in [`crate::thermo`].
pub const ENUMERATION_LIMIT: usize = 24;

/// Parameters of a perturbed ferromagnetic chain.
///
/// `subsystems` is the number of two-qubit frustrated units (M),
/// `energy_scale` the overall scale in GHz (R), and `perturbation` the
/// dimensionless offset (d) that splits the degenerate ground level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfcParams {
    pub subsystems: usize,
    pub energy_scale: f64,
    pub perturbation: f64,
}

impl PfcParams {
    pub fn new(subsystems: usize, energy_scale: f64, perturbation: f64) -> Result<Self> {
        let p = Self {
            subsystems,
            energy_scale,
            perturbation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsystems < 2 {
            return Err(Error::InvalidParams(format!(
                "PfcParams.subsystems must be >= 2, got {}",
                self.subsystems
            )));
        }
        if !(self.energy_scale > 0.0) || !self.energy_scale.is_finite() {
            return Err(Error::InvalidParams(format!(
                "PfcParams.energy_scale must be positive and finite, got {}",
                self.energy_scale
            )));
        }
        if !(self.perturbation > 0.0 && self.perturbation < 1.0) {
            return Err(Error::InvalidParams(format!(
                "PfcParams.perturbation must lie in (0, 1), got {}",
                self.perturbation
            )));
        }
        Ok(())
    }

    /// Total number of qubits, `2 M`.
    pub fn n_qubits(&self) -> usize {
        2 * self.subsystems
    }

    /// Classical gap between the unique ground state and the degenerate
    /// first-excited manifold, `2 R M d` (valid while `d < 1/(M-1)`).
    pub fn classical_gap(&self) -> f64 {
        2.0 * self.energy_scale * self.subsystems as f64 * self.perturbation
    }
}

/// A spin configuration: one `+1`/`-1` entry per qubit.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig {
    spins: Vec<i8>,
}

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParams(
                "spin entries must be +1 or -1".into(),
            ));
        }
        Ok(Self { spins })
    }

    pub fn all_up(n: usize) -> Self {
        Self { spins: vec![1; n] }
    }

    pub fn all_down(n: usize) -> Self {
        Self { spins: vec![-1; n] }
    }

    /// Decode a basis-state index: bit `j` clear means spin `+1`.
    pub fn from_index(index: usize, n: usize) -> Self {
        let spins = (0..n)
            .map(|j| if index >> j & 1 == 0 { 1 } else { -1 })
            .collect();
        Self { spins }
    }

    /// Basis-state index of this configuration (inverse of [`from_index`]).
    ///
    /// [`from_index`]: SpinConfig::from_index
    pub fn index(&self) -> usize {
        self.spins
            .iter()
            .enumerate()
            .fold(0, |acc, (j, &s)| if s < 0 { acc | 1 << j } else { acc })
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }
}

/// Number of differing spins between two equal-length configurations.
pub fn hamming(a: &SpinConfig, b: &SpinConfig) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::SizeMismatch(format!(
            "hamming distance needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.spins
        .iter()
        .zip(&b.spins)
        .filter(|(x, y)| x != y)
        .count())
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    n_qubits: usize,
    h: Vec<(usize, f64)>,
    #[serde(rename = "J")]
    j: Vec<(usize, usize, f64)>,
    label: String,
}

/// A general Ising problem: biases `h_i` and couplers `J_ij` in GHz.
///
/// Couplers are stored with normalized pair order (`i < j`); self-pairs are
/// rejected. Instances are immutable once built and safe to share across
/// threads.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingProblem {
    n_qubits: usize,
    h: BTreeMap<usize, f64>,
    j: BTreeMap<(usize, usize), f64>,
    label: String,
}

impl IsingProblem {
    pub fn new(n_qubits: usize, label: impl Into<String>) -> Self {
        Self {
            n_qubits,
            h: BTreeMap::new(),
            j: BTreeMap::new(),
            label: label.into(),
        }
    }

    pub fn with_bias(mut self, qubit: usize, value: f64) -> Result<Self> {
        if qubit >= self.n_qubits {
            return Err(Error::IndexOutOfRange(format!(
                "bias qubit {} out of range for {} qubits",
                qubit, self.n_qubits
            )));
        }
        self.h.insert(qubit, value);
        Ok(self)
    }

    pub fn with_coupling(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidParams(format!(
                "self-coupling on qubit {i} is not allowed"
            )));
        }
        if i >= self.n_qubits || j >= self.n_qubits {
            return Err(Error::IndexOutOfRange(format!(
                "coupler ({i}, {j}) out of range for {} qubits",
                self.n_qubits
            )));
        }
        let key = (i.min(j), i.max(j));
        self.j.insert(key, value);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bias(&self, qubit: usize) -> f64 {
        self.h.get(&qubit).copied().unwrap_or(0.0)
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.j.get(&key).copied().unwrap_or(0.0)
    }

    pub fn biases(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.h.iter().map(|(&i, &v)| (i, v))
    }

    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.j.iter().map(|(&(i, j), &v)| (i, j, v))
    }

    /// Classical energy `sum_i h_i s_i + sum_{ij} J_ij s_i s_j`.
    pub fn classical_energy(&self, config: &SpinConfig) -> Result<f64> {
        if config.len() != self.n_qubits {
            return Err(Error::SizeMismatch(format!(
                "configuration has {} spins, problem has {} qubits",
                config.len(),
                self.n_qubits
            )));
        }
        let s = config.spins();
        let mut e = 0.0;
        for (&i, &v) in &self.h {
            e += v * f64::from(s[i]);
        }
        for (&(i, j), &v) in &self.j {
            e += v * f64::from(s[i]) * f64::from(s[j]);
        }
        Ok(e)
    }

    /// Classical energy of the basis state with the given index.
    pub fn energy_by_index(&self, index: usize) -> f64 {
        let spin = |q: usize| if index >> q & 1 == 0 { 1.0 } else { -1.0 };
        let mut e = 0.0;
        for (&i, &v) in &self.h {
            e += v * spin(i);
        }
        for (&(i, j), &v) in &self.j {
            e += v * spin(i) * spin(j);
        }
        e
    }

    pub fn to_json(&self) -> String {
        let repr = ProblemJson {
            n_qubits: self.n_qubits,
            h: self.h.iter().map(|(&i, &v)| (i, v)).collect(),
            j: self.j.iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            label: self.label.clone(),
        };
        serde_json::to_string_pretty(&repr).expect("problem serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: ProblemJson = serde_json::from_str(text)?;
        let mut p = IsingProblem::new(repr.n_qubits, repr.label);
        for (i, v) in repr.h {
            p = p.with_bias(i, v)?;
        }
        for (i, j, v) in repr.j {
            p = p.with_coupling(i, j, v)?;
        }
        Ok(p)
    }
}

/// Build the perturbed-chain instance for the given parameters.
///
/// Qubits `0..M` are the auxiliary qubits with bias `-R`; qubits `M..2M` are
/// the backbone qubits with bias `R (1 - d)`. Each subsystem carries an
/// `a_i - b_i` coupler of `-R` and consecutive backbone qubits are coupled
/// with `-R`.
pub fn build_pfc(params: &PfcParams) -> Result<IsingProblem> {
    params.validate()?;
    let m = params.subsystems;
    let r = params.energy_scale;
    let d = params.perturbation;
    let mut problem = IsingProblem::new(
        2 * m,
        format!("pfc(M={m}, R={r}, d={d})"),
    );
    for i in 0..m {
        problem = problem
            .with_bias(i, -r)?
            .with_bias(m + i, r * (1.0 - d))?
            .with_coupling(i, m + i, -r)?;
    }
    for i in 0..m - 1 {
        problem = problem.with_coupling(m + i, m + i + 1, -r)?;
    }
    Ok(problem)
}

/// Result of an exhaustive low-energy enumeration.
#[derive(Debug, Clone)]
pub struct LowEnergyCensus {
    pub ground: SpinConfig,
    pub ground_energy: f64,
    pub ground_degeneracy: usize,
    pub first_excited: Vec<SpinConfig>,
    pub gap: f64,
}

/// Enumerate all `2^N` configurations and report the ground state, the set of
/// first-excited states, and the gap between the two levels.
///
/// Energies within `1e-9` (relative to the spectral scale) are grouped into
/// one level. Bounded at [`ENUMERATION_LIMIT`] qubits.
pub fn low_energy_census(problem: &IsingProblem) -> Result<LowEnergyCensus> {
    let n = problem.n_qubits();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "census enumerates 2^{n} states; limit is 2^{ENUMERATION_LIMIT}"
        )));
    }
    let states = 1usize << n;

    let mut e0 = f64::INFINITY;
    let mut scale: f64 = 1.0;
    for x in 0..states {
        let e = problem.energy_by_index(x);
        e0 = e0.min(e);
        scale = scale.max(e.abs());
    }
    let tol = 1e-9 * scale;

    let mut e1 = f64::INFINITY;
    for x in 0..states {
        let e = problem.energy_by_index(x);
        if e > e0 + tol && e < e1 {
            e1 = e;
        }
    }

    let mut ground = None;
    let mut ground_degeneracy = 0;
    let mut first_excited = Vec::new();
    for x in 0..states {
        let e = problem.energy_by_index(x);
        if (e - e0).abs() <= tol {
            ground_degeneracy += 1;
            if ground.is_none() {
                ground = Some(SpinConfig::from_index(x, n));
            }
        } else if e1.is_finite() && (e - e1).abs() <= tol {
            first_excited.push(SpinConfig::from_index(x, n));
        }
    }

    Ok(LowEnergyCensus {
        ground: ground.expect("at least one state exists"),
        ground_energy: e0,
        ground_degeneracy,
        first_excited,
        gap: e1 - e0,
    })
}

/// Annealing schedule: a decreasing transverse coefficient `A(s)` and an
/// increasing problem coefficient `B(s)`, both in GHz, with `A(1) = 0` and
/// `B(0) = 0`.
#[derive(Clone)]
pub struct AnnealSchedule {
    a: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    b: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl AnnealSchedule {
    /// The linear schedule `A(s) = 3 (1 - s)`, `B(s) = 3 s`.
    pub fn linear() -> Self {
        Self {
            a: Arc::new(|s| 3.0 * (1.0 - s)),
            b: Arc::new(|s| 3.0 * s),
        }
    }

    /// Build a schedule from arbitrary coefficient functions, checking the
    /// endpoint and monotonicity invariants on a sample grid.
    pub fn from_fns<A, B>(a: A, b: B) -> Result<Self>
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if a(1.0).abs() > 1e-12 {
            return Err(Error::InvalidParams("schedule requires A(1) = 0".into()));
        }
        if b(0.0).abs() > 1e-12 {
            return Err(Error::InvalidParams("schedule requires B(0) = 0".into()));
        }
        let samples = 101;
        for k in 1..samples {
            let s0 = (k - 1) as f64 / (samples - 1) as f64;
            let s1 = k as f64 / (samples - 1) as f64;
            if a(s1) > a(s0) + 1e-12 {
                return Err(Error::InvalidParams(
                    "schedule requires A monotonically decreasing".into(),
                ));
            }
            if b(s1) < b(s0) - 1e-12 {
                return Err(Error::InvalidParams(
                    "schedule requires B monotonically increasing".into(),
                ));
            }
        }
        Ok(Self {
            a: Arc::new(a),
            b: Arc::new(b),
        })
    }

    pub fn a(&self, s: f64) -> f64 {
        (self.a)(s)
    }

    pub fn b(&self, s: f64) -> f64 {
        (self.b)(s)
    }
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self::linear()
    }
}

impl fmt::Debug for AnnealSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AnnealSchedule {{ A(0)={}, A(1)={}, B(0)={}, B(1)={} }}",
            self.a(0.0),
            self.a(1.0),
            self.b(0.0),
            self.b(1.0)
        )
    }
}
