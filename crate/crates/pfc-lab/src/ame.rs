//! Closed-system (von-Neumann) and open-system density-matrix evolution.
//!
//! The open-system model is a Davies-style adiabatic master equation: every
//! qubit dephases independently through an Ohmic bath, the Lindblad operators
//! are built from sigma-z matrix elements between instantaneous eigenstates,
//! and operators whose transition gaps agree within a tolerance are summed
//! before entering the dissipator, so the generator is well defined on the
//! chain's degenerate manifolds.
//!
//! Unit convention: statics carry GHz; at this module's boundary Hamiltonians
//! are scaled by 2 pi into rad/ns, times are in ns, and the bath's inverse
//! temperature and cutoff use the matching angular units.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ising::{AnnealSchedule, IsingProblem};
use crate::ode::Dopri5;
use crate::spectral::{self, spin_at, SpectralSnapshot};
use crate::units;

/// A complex Hermitian, unit-trace matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    /// The pure state `|+><+|` on `n` qubits: every entry `1 / 2^n`.
    pub fn plus_state(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let amp = Complex64::new(1.0 / dim as f64, 0.0);
        Self {
            matrix: DMatrix::from_element(dim, dim, amp),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diagonal().sum()
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                let dev = (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm();
                worst = worst.max(dev);
            }
        }
        worst
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        let dim = self.dim();
        let mut total = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                total += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        total
    }

    /// Smallest eigenvalue of the Hermitian part (numerical positivity check).
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Ohmic dephasing bath: temperature in mK, cutoff in GHz, dimensionless
/// coupling strength.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BathParams {
    pub temperature_mk: f64,
    pub cutoff_ghz: f64,
    pub coupling: f64,
}

impl Default for BathParams {
    fn default() -> Self {
        Self {
            temperature_mk: 12.0,
            cutoff_ghz: 4.0,
            coupling: 1e-3,
        }
    }
}

impl BathParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_mk > 0.0 && self.cutoff_ghz > 0.0 && self.coupling >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "bath parameters must be positive (T = {} mK, cutoff = {} GHz, coupling = {})",
                self.temperature_mk, self.cutoff_ghz, self.coupling
            )));
        }
        Ok(())
    }

    /// Spectral density `gamma(omega) = 2 pi eta g^2 omega e^{-|omega|/omega_c}
    /// / (1 - e^{-beta omega})` with `omega` in rad/ns; the removable
    /// singularity at zero evaluates to `2 pi eta g^2 / beta`. Rates come out
    /// in 1/ns.
    pub fn gamma_angular(&self, omega: f64) -> f64 {
        let beta = units::inverse_temperature_angular(self.temperature_mk);
        let cutoff = units::ghz_to_angular(self.cutoff_ghz);
        if omega == 0.0 {
            TAU * self.coupling / beta
        } else {
            // 1 - e^{-x} via expm1 keeps small gaps fully accurate.
            TAU * self.coupling * omega * (-omega.abs() / cutoff).exp()
                / -(-beta * omega).exp_m1()
        }
    }
}

/// Bath rate for a transition frequency quoted in GHz.
pub fn bath_gamma(omega_ghz: f64, bath: &BathParams) -> f64 {
    bath.gamma_angular(units::ghz_to_angular(omega_ghz))
}

/// One bin of transition gaps: ordered level pairs `(from, to)` whose gaps
/// `E_from - E_to` agree within the binning tolerance.
#[derive(Debug, Clone)]
pub struct GapBin {
    pub omega_ghz: f64,
    pub pairs: Vec<(usize, usize)>,
}

/// The binned transition structure of one spectral snapshot.
#[derive(Debug, Clone)]
pub struct LindbladSet {
    pub bins: Vec<GapBin>,
    pub gap_tol: f64,
}

/// Bin every ordered level pair of the snapshot by its gap. Pairs within
/// `gap_tol` (GHz) share a bin and their operators are summed when the
/// dissipator is built.
pub fn lindblad_set(snapshot: &SpectralSnapshot, gap_tol: f64) -> LindbladSet {
    LindbladSet {
        bins: bin_level_pairs(&snapshot.eigenvalues[..snapshot.k], gap_tol),
        gap_tol,
    }
}

fn bin_level_pairs(energies: &[f64], gap_tol: f64) -> Vec<GapBin> {
    let n = energies.len();
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for from in 0..n {
        for to in 0..n {
            entries.push((energies[from] - energies[to], from, to));
        }
    }
    entries.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut bins: Vec<GapBin> = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end].0 - entries[end - 1].0 <= gap_tol {
            end += 1;
        }
        let slice = &entries[start..end];
        let omega = slice.iter().map(|e| e.0).sum::<f64>() / slice.len() as f64;
        bins.push(GapBin {
            omega_ghz: omega,
            pairs: slice.iter().map(|&(_, from, to)| (from, to)).collect(),
        });
        start = end;
    }
    bins
}

/// Sigma-z matrix of every qubit in the snapshot's eigenbasis:
/// `A_j[l, k] = <E_l| Z_j |E_k>`.
pub fn qubit_couplings(snapshot: &SpectralSnapshot) -> Vec<DMatrix<f64>> {
    let dim = snapshot.dim();
    let n = dim.trailing_zeros() as usize;
    let v = &snapshot.eigenvectors;
    (0..n)
        .map(|j| {
            let mut scaled = v.clone();
            for x in 0..dim {
                let z = spin_at(x, j);
                for col in 0..snapshot.k {
                    scaled[(x, col)] *= z;
                }
            }
            v.transpose() * scaled
        })
        .collect()
}

impl LindbladSet {
    /// Dense Lindblad operator for `(qubit, bin)` in the eigenbasis:
    /// nonzero entries `L[to, from] = A_qubit[to, from]` over the bin's pairs.
    pub fn operator(
        &self,
        couplings: &[DMatrix<f64>],
        bin: usize,
        qubit: usize,
    ) -> DMatrix<f64> {
        let a = &couplings[qubit];
        let k = a.nrows();
        let mut op = DMatrix::zeros(k, k);
        for &(from, to) in &self.bins[bin].pairs {
            op[(to, from)] = a[(to, from)];
        }
        op
    }
}

/// The Davies dissipator of one instantaneous eigenframe, in apply-ready
/// form: binned rates plus the precomputed loss matrix
/// `K = sum_bins gamma L^dag L` (summed over qubits).
pub struct DaviesDissipator {
    bins: Vec<(f64, Vec<(u32, u32)>)>,
    loss: DMatrix<f64>,
    couplings: Vec<DMatrix<f64>>,
    retained: usize,
}

impl DaviesDissipator {
    /// Build from eigenvalues (GHz) and per-qubit eigenbasis couplings.
    /// Only the lowest `retained` levels enter the dissipator.
    pub fn new(
        energies_ghz: &[f64],
        couplings: Vec<DMatrix<f64>>,
        bath: &BathParams,
        gap_tol: f64,
        retained: usize,
    ) -> Self {
        let retained = retained.min(energies_ghz.len());
        let raw_bins = bin_level_pairs(&energies_ghz[..retained], gap_tol);
        let dim = couplings.first().map_or(retained, |a| a.nrows());

        let mut loss = DMatrix::zeros(dim, dim);
        let mut bins = Vec::with_capacity(raw_bins.len());
        for bin in &raw_bins {
            let rate = bath.gamma_angular(units::ghz_to_angular(bin.omega_ghz));
            // Loss term K[k1, k2] accumulates over pairs sharing a target
            // level within one bin: (L^dag L)[k1, k2] = sum_l A[l,k1] A[l,k2].
            for (i, &(from1, to1)) in bin.pairs.iter().enumerate() {
                for &(from2, to2) in &bin.pairs[i..] {
                    if to1 != to2 {
                        continue;
                    }
                    let mut weight = 0.0;
                    for a in &couplings {
                        weight += a[(to1, from1)] * a[(to2, from2)];
                    }
                    let value = rate * weight;
                    loss[(from1, from2)] += value;
                    if from1 != from2 {
                        loss[(from2, from1)] += value;
                    }
                }
            }
            bins.push((
                rate,
                bin.pairs
                    .iter()
                    .map(|&(from, to)| (from as u32, to as u32))
                    .collect(),
            ));
        }
        Self {
            bins,
            loss,
            couplings,
            retained,
        }
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    /// Accumulate the dissipator action on `rho` (given in the eigenbasis as
    /// real and imaginary parts) into `out_re`/`out_im`:
    /// `sum_bins gamma [L rho L^dag - (K rho + rho K) / 2]`.
    pub fn accumulate(
        &self,
        rho_re: &DMatrix<f64>,
        rho_im: &DMatrix<f64>,
        out_re: &mut DMatrix<f64>,
        out_im: &mut DMatrix<f64>,
    ) {
        // Gain: cross terms run over pair combinations inside each bin.
        for (rate, pairs) in &self.bins {
            for &(from1, to1) in pairs {
                let (k1, l1) = (from1 as usize, to1 as usize);
                for &(from2, to2) in pairs {
                    let (k2, l2) = (from2 as usize, to2 as usize);
                    let mut weight = 0.0;
                    for a in &self.couplings {
                        weight += a[(l1, k1)] * a[(l2, k2)];
                    }
                    let w = rate * weight;
                    out_re[(l1, l2)] += w * rho_re[(k1, k2)];
                    out_im[(l1, l2)] += w * rho_im[(k1, k2)];
                }
            }
        }
        // Loss: -(K rho + rho K) / 2 with K real symmetric.
        let k_rho_re = &self.loss * rho_re;
        let rho_k_re = rho_re * &self.loss;
        let k_rho_im = &self.loss * rho_im;
        let rho_k_im = rho_im * &self.loss;
        *out_re -= 0.5 * (k_rho_re + rho_k_re);
        *out_im -= 0.5 * (k_rho_im + rho_k_im);
    }
}

/// Per-output-point health of an evolving density matrix.
#[derive(Debug, Clone, Copy)]
pub struct StateDiagnostics {
    pub trace_deviation: f64,
    pub hermiticity_error: f64,
    pub purity: f64,
}

/// Populations of the instantaneous eigenstates along an anneal.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Normalized times of the output points.
    pub s_values: Vec<f64>,
    /// `populations[i][j] = <E_j | rho(s_i) | E_j>` for the retained levels.
    pub populations: Vec<Vec<f64>>,
    pub diagnostics: Vec<StateDiagnostics>,
    pub final_rho: DensityMatrix,
}

impl Trajectory {
    /// Population trace of one level across the run.
    pub fn level(&self, j: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[j]).collect()
    }

    /// Population of level `j` at the output point closest to `s`.
    pub fn population_at(&self, s: f64, j: usize) -> f64 {
        let idx = self
            .s_values
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - s).abs().total_cmp(&(*b - s).abs()))
            .map(|(i, _)| i)
            .expect("trajectory has output points");
        self.populations[idx][j]
    }
}

/// Options for [`evolve_ame`].
#[derive(Debug, Clone, Copy)]
pub struct AmeOptions {
    /// Gap binning tolerance in GHz.
    pub gap_tol_ghz: f64,
    /// Levels fed to the dissipator. `None` keeps the full spectrum, which
    /// is the default up to dimension 64; beyond that a truncation must be
    /// chosen explicitly (transitions through dropped levels are lost).
    pub retained_levels: Option<usize>,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for AmeOptions {
    fn default() -> Self {
        Self {
            gap_tol_ghz: 1e-6,
            retained_levels: None,
            rtol: 1e-8,
            atol: 1e-10,
        }
    }
}

/// Full dissipator dimension cap: beyond this, callers must truncate.
pub const FULL_SPECTRUM_LIMIT: usize = 64;

struct SplitState {
    re: DMatrix<f64>,
    im: DMatrix<f64>,
}

impl SplitState {
    fn zeros(dim: usize) -> Self {
        Self {
            re: DMatrix::zeros(dim, dim),
            im: DMatrix::zeros(dim, dim),
        }
    }

    fn load(&mut self, rho: &DMatrix<Complex64>) {
        for (slot_re, (slot_im, value)) in self
            .re
            .iter_mut()
            .zip(self.im.iter_mut().zip(rho.iter()))
        {
            *slot_re = value.re;
            *slot_im = value.im;
        }
    }

    fn store(&self, out: &mut DMatrix<Complex64>) {
        for (value, (re, im)) in out
            .iter_mut()
            .zip(self.re.iter().zip(self.im.iter()))
        {
            *value = Complex64::new(*re, *im);
        }
    }
}

fn assemble_hamiltonian_ghz(
    hx: &DMatrix<f64>,
    diag: &[f64],
    schedule: &AnnealSchedule,
    s: f64,
    out: &mut DMatrix<f64>,
) {
    let a = schedule.a(s);
    let b = schedule.b(s);
    out.zip_apply(hx, |slot, x| *slot = -a * x);
    for (x, &e) in diag.iter().enumerate() {
        out[(x, x)] += b * e;
    }
}

fn transverse_matrix(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut hx = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        for j in 0..n {
            hx[(x, x ^ (1 << j))] = 1.0;
        }
    }
    hx
}

fn observe_populations(
    h_ghz: &DMatrix<f64>,
    s: f64,
    rho: &DMatrix<Complex64>,
    retained: usize,
) -> Result<(Vec<f64>, StateDiagnostics)> {
    let (_, vectors) = spectral::sorted_symmetric_eigen(h_ghz, s)?;
    let dim = h_ghz.nrows();
    let mut populations = Vec::with_capacity(retained);
    for j in 0..retained {
        let v = vectors.column(j);
        let mut p = Complex64::new(0.0, 0.0);
        for x in 0..dim {
            let mut row = Complex64::new(0.0, 0.0);
            for y in 0..dim {
                row += rho[(x, y)] * v[y];
            }
            p += v[x] * row;
        }
        populations.push(p.re);
    }
    let wrapped = DensityMatrix::new(rho.clone());
    let diagnostics = StateDiagnostics {
        trace_deviation: (wrapped.trace().re - 1.0).abs() + wrapped.trace().im.abs(),
        hermiticity_error: wrapped.hermiticity_error(),
        purity: wrapped.purity(),
    };
    Ok((populations, diagnostics))
}

fn check_output_grid(output_s: &[f64]) -> Result<()> {
    if output_s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams(
            "output grid must be strictly ascending".into(),
        ));
    }
    if output_s
        .iter()
        .any(|&s| !(0.0..=1.0 + 1e-12).contains(&s))
    {
        return Err(Error::InvalidParams(
            "output grid must lie within [0, 1]".into(),
        ));
    }
    Ok(())
}

/// Integrate the von-Neumann equation `d rho / dt = -i [H(t), rho]` from
/// `s = 0` to `s = 1` over `t_anneal` nanoseconds, reporting instantaneous
/// eigenstate populations on the output grid.
pub fn evolve_closed(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    t_anneal_ns: f64,
    output_s: &[f64],
) -> Result<Trajectory> {
    evolve_closed_with(problem, schedule, t_anneal_ns, output_s, 1e-8, 1e-10)
}

pub fn evolve_closed_with(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    t_anneal_ns: f64,
    output_s: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<Trajectory> {
    if !(t_anneal_ns > 0.0) {
        return Err(Error::InvalidParams(format!(
            "anneal time must be positive, got {t_anneal_ns} ns"
        )));
    }
    check_output_grid(output_s)?;
    let n = problem.n_qubits();
    let dim = 1usize << n;
    if dim > spectral::DENSE_DIM_LIMIT {
        return Err(Error::TooLarge(format!(
            "dense evolution handles at most {} states",
            spectral::DENSE_DIM_LIMIT
        )));
    }

    let hx = transverse_matrix(n);
    let diag = spectral::problem_diagonal(problem);
    let mut h_buf = DMatrix::zeros(dim, dim);
    let mut split = SplitState::zeros(dim);
    let mut out_split = SplitState::zeros(dim);

    let mut populations = Vec::with_capacity(output_s.len());
    let mut diagnostics = Vec::with_capacity(output_s.len());
    let mut observe_error = None;

    let solver = Dopri5 {
        rtol,
        atol,
        ..Dopri5::default()
    };
    let rho0 = DensityMatrix::plus_state(n).matrix;
    let final_rho = solver.integrate(
        |s, rho, out| {
            assemble_hamiltonian_ghz(&hx, &diag, schedule, s, &mut h_buf);
            split.load(rho);
            // -i [H, rho] in angular units, folded with dt/ds = t_anneal.
            let commut_re = &h_buf * &split.re - &split.re * &h_buf;
            let commut_im = &h_buf * &split.im - &split.im * &h_buf;
            let scale = TAU * t_anneal_ns;
            out_split.re.zip_apply(&commut_im, |slot, x| *slot = scale * x);
            out_split.im.zip_apply(&commut_re, |slot, x| *slot = -scale * x);
            out_split.store(out);
        },
        0.0,
        1.0,
        rho0,
        output_s,
        |idx, s, rho| {
            let mut h = DMatrix::zeros(dim, dim);
            assemble_hamiltonian_ghz(&hx, &diag, schedule, s, &mut h);
            match observe_populations(&h, s, rho, dim) {
                Ok((p, d)) => {
                    populations.push(p);
                    diagnostics.push(d);
                }
                Err(e) => observe_error = Some((idx, e)),
            }
        },
    )?;
    if let Some((_, e)) = observe_error {
        return Err(e);
    }

    Ok(Trajectory {
        s_values: output_s.to_vec(),
        populations,
        diagnostics,
        final_rho: DensityMatrix::new(final_rho),
    })
}

/// Integrate the adiabatic master equation over `t_anneal` nanoseconds: the
/// von-Neumann commutator plus the Davies dissipator rebuilt from a fresh
/// eigendecomposition at every right-hand-side evaluation.
pub fn evolve_ame(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    bath: &BathParams,
    t_anneal_ns: f64,
    output_s: &[f64],
    options: &AmeOptions,
) -> Result<Trajectory> {
    evolve_ame_schedule(
        problem,
        schedule,
        bath,
        t_anneal_ns,
        output_s,
        options,
        |s| s,
    )
}

/// Adiabatic master equation with the anneal frozen at `s_frozen`: the
/// Hamiltonian is pinned while the dissipator drives the state toward the
/// Gibbs fixed point. Output grid is in normalized run time.
pub fn evolve_ame_frozen(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    bath: &BathParams,
    s_frozen: f64,
    duration_ns: f64,
    output_fractions: &[f64],
    options: &AmeOptions,
) -> Result<Trajectory> {
    evolve_ame_schedule(
        problem,
        schedule,
        bath,
        duration_ns,
        output_fractions,
        options,
        move |_| s_frozen,
    )
}

fn evolve_ame_schedule<S>(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    bath: &BathParams,
    t_anneal_ns: f64,
    output_s: &[f64],
    options: &AmeOptions,
    s_of: S,
) -> Result<Trajectory>
where
    S: Fn(f64) -> f64,
{
    if !(t_anneal_ns > 0.0) {
        return Err(Error::InvalidParams(format!(
            "anneal time must be positive, got {t_anneal_ns} ns"
        )));
    }
    check_output_grid(output_s)?;
    bath.validate()?;
    let n = problem.n_qubits();
    let dim = 1usize << n;
    if dim > spectral::DENSE_DIM_LIMIT {
        return Err(Error::TooLarge(format!(
            "dense evolution handles at most {} states",
            spectral::DENSE_DIM_LIMIT
        )));
    }
    let retained = match options.retained_levels {
        Some(k) => {
            if k == 0 || k > dim {
                return Err(Error::InvalidParams(format!(
                    "retained_levels must lie in 1..={dim}"
                )));
            }
            k
        }
        None => {
            if dim > FULL_SPECTRUM_LIMIT {
                return Err(Error::TooLarge(format!(
                    "full-spectrum dissipator is limited to dimension \
                     {FULL_SPECTRUM_LIMIT}; set retained_levels to truncate"
                )));
            }
            dim
        }
    };

    let hx = transverse_matrix(n);
    let diag = spectral::problem_diagonal(problem);
    let mut h_buf = DMatrix::zeros(dim, dim);
    let mut split = SplitState::zeros(dim);
    let mut eig_split = SplitState::zeros(dim);
    let mut out_split = SplitState::zeros(dim);
    let mut rhs_error: Option<Error> = None;

    let mut populations = Vec::with_capacity(output_s.len());
    let mut diagnostics = Vec::with_capacity(output_s.len());
    let mut observe_error = None;

    let solver = Dopri5 {
        rtol: options.rtol,
        atol: options.atol,
        ..Dopri5::default()
    };
    let rho0 = DensityMatrix::plus_state(n).matrix;
    let final_rho = solver.integrate(
        |s_run, rho, out| {
            if rhs_error.is_some() {
                out.fill(Complex64::new(f64::NAN, 0.0));
                return;
            }
            let s = s_of(s_run);
            assemble_hamiltonian_ghz(&hx, &diag, schedule, s, &mut h_buf);
            let (energies, vectors) = match spectral::sorted_symmetric_eigen(&h_buf, s) {
                Ok(pair) => pair,
                Err(e) => {
                    rhs_error = Some(e);
                    out.fill(Complex64::new(f64::NAN, 0.0));
                    return;
                }
            };

            // Rotate rho into the eigenbasis.
            split.load(rho);
            let vt = vectors.transpose();
            eig_split.re = &vt * &split.re * &vectors;
            eig_split.im = &vt * &split.im * &vectors;

            // Commutator, elementwise in the eigenframe, in rad/ns.
            for a in 0..dim {
                for b in 0..dim {
                    let omega = TAU * (energies[a] - energies[b]);
                    out_split.re[(a, b)] = omega * eig_split.im[(a, b)];
                    out_split.im[(a, b)] = -omega * eig_split.re[(a, b)];
                }
            }

            // Davies dissipator over the binned transition structure.
            let couplings: Vec<DMatrix<f64>> = (0..n)
                .map(|j| {
                    let mut scaled = vectors.clone();
                    for x in 0..dim {
                        let z = spin_at(x, j);
                        for col in 0..dim {
                            scaled[(x, col)] *= z;
                        }
                    }
                    &vt * scaled
                })
                .collect();
            let dissipator = DaviesDissipator::new(
                &energies,
                couplings,
                bath,
                options.gap_tol_ghz,
                retained,
            );
            dissipator.accumulate(
                &eig_split.re,
                &eig_split.im,
                &mut out_split.re,
                &mut out_split.im,
            );

            // Rotate back, fold in dt/ds.
            split.re = &vectors * &out_split.re * &vt;
            split.im = &vectors * &out_split.im * &vt;
            let scale = t_anneal_ns;
            for (slot, (re, im)) in out
                .iter_mut()
                .zip(split.re.iter().zip(split.im.iter()))
            {
                *slot = Complex64::new(scale * re, scale * im);
            }
        },
        0.0,
        1.0,
        rho0,
        output_s,
        |idx, s_run, rho| {
            let s = s_of(s_run);
            let mut h = DMatrix::zeros(dim, dim);
            assemble_hamiltonian_ghz(&hx, &diag, schedule, s, &mut h);
            match observe_populations(&h, s, rho, retained) {
                Ok((p, d)) => {
                    populations.push(p);
                    diagnostics.push(d);
                }
                Err(e) => observe_error = Some((idx, e)),
            }
        },
    )?;
    if let Some(e) = rhs_error {
        return Err(e);
    }
    if let Some((_, e)) = observe_error {
        return Err(e);
    }

    Ok(Trajectory {
        s_values: output_s.to_vec(),
        populations,
        diagnostics,
        final_rho: DensityMatrix::new(final_rho),
    })
}

/// Thermal relaxation rate `gamma(omega_10) sum_j |<E_0| Z_j |E_1>|^2` on a
/// grid of `s` values (1/ns).
pub fn transition_rate_profile(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    bath: &BathParams,
    s_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    bath.validate()?;
    s_grid
        .iter()
        .map(|&s| {
            let snap = spectral::snapshot(problem, schedule, s, 2)?;
            let omega = snap.eigenvalues[1] - snap.eigenvalues[0];
            let n = snap.dim().trailing_zeros() as usize;
            let mut element = 0.0;
            for j in 0..n {
                let mut me = 0.0;
                for x in 0..snap.dim() {
                    me += snap.eigenvectors[(x, 0)] * spin_at(x, j) * snap.eigenvectors[(x, 1)];
                }
                element += me * me;
            }
            Ok((s, bath_gamma(omega, bath) * element))
        })
        .collect()
}

/// Calibration constant for [`adiabatic_time_estimate`]: run time
/// `c / gap^2` with `c` anchored so the chain at M=3, R=1, d=0.3 maps to
/// 20 ns (its measured minimum gap is 0.509131 GHz).
pub const ADIABATIC_TIME_CONSTANT_NS_GHZ2: f64 = 20.0 * 0.509131 * 0.509131;

/// Order-of-magnitude adiabatic run time estimate `c / gap_min^2` in ns.
/// A diagnostic, not a guarantee.
pub fn adiabatic_time_estimate(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
) -> Result<f64> {
    let result = spectral::min_gap(problem, schedule)?;
    Ok(ADIABATIC_TIME_CONSTANT_NS_GHZ2 / (result.gap * result.gap))
}

/// Uniform output grid refined around a focus point: `base` points across
/// `[0, 1]` plus `extra` points in `focus +- half_width` (used to resolve
/// population traces near the minimum gap).
pub fn refined_grid(base: usize, focus: f64, half_width: f64, extra: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..base).map(|i| i as f64 / (base - 1) as f64).collect();
    let lo = (focus - half_width).max(0.0);
    let hi = (focus + half_width).min(1.0);
    for i in 0..extra {
        grid.push(lo + (hi - lo) * i as f64 / (extra - 1) as f64);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{build_pfc, PfcParams};
    use crate::units::inverse_temperature_ghz;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pfc_problem(m: usize, d: f64) -> IsingProblem {
        build_pfc(&PfcParams::new(m, 1.0, d).unwrap()).unwrap()
    }

    #[test]
    fn plus_state_is_pure_unit_trace() {
        let rho = DensityMatrix::plus_state(3);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert_eq!(rho.hermiticity_error(), 0.0);
        assert!(rho.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn bath_zero_frequency_limit() {
        let bath = BathParams::default();
        let beta = units::inverse_temperature_angular(12.0);
        assert_relative_eq!(
            bath.gamma_angular(0.0),
            TAU * 1e-3 / beta,
            max_relative = 1e-12
        );
        // Continuity across the removable singularity.
        let eps = 1e-9;
        assert_relative_eq!(
            bath.gamma_angular(eps),
            bath.gamma_angular(0.0),
            max_relative = 1e-6
        );
    }

    #[test]
    fn bath_kms_identity() {
        let bath = BathParams::default();
        let beta = units::inverse_temperature_angular(12.0);
        for &omega_ghz in &[0.01, 0.1, 0.25, 1.0, 3.0, 7.5] {
            let omega = units::ghz_to_angular(omega_ghz);
            let ratio = bath.gamma_angular(-omega) / bath.gamma_angular(omega);
            assert_relative_eq!(ratio, (-beta * omega).exp(), max_relative = 1e-12);
        }
    }

    #[test]
    fn bath_ratio_at_quarter_gigahertz() {
        // beta * omega is about 1.0 at 0.25 GHz and 12 mK, so the
        // detailed-balance ratio is about e.
        let bath = BathParams::default();
        let ratio = bath_gamma(0.25, &bath) / bath_gamma(-0.25, &bath);
        let expected = (inverse_temperature_ghz(12.0) * 0.25).exp();
        assert_relative_eq!(ratio, expected, max_relative = 1e-12);
        assert!((ratio - std::f64::consts::E).abs() < 0.01);
    }

    #[test]
    fn lindblad_set_diagonal_limit() {
        // At s=1 the Hamiltonian is diagonal: every operator in a bin with
        // nonzero gap vanishes, only omega = 0 dephasing blocks remain.
        let problem = pfc_problem(2, 0.3);
        let snap = spectral::snapshot(&problem, &AnnealSchedule::linear(), 1.0, 16).unwrap();
        let set = lindblad_set(&snap, 1e-6);
        let couplings = qubit_couplings(&snap);
        for (b, bin) in set.bins.iter().enumerate() {
            if bin.omega_ghz.abs() < 1e-6 {
                continue;
            }
            for qubit in 0..4 {
                let op = set.operator(&couplings, b, qubit);
                assert!(
                    op.abs().max() < 1e-9,
                    "nonzero operator at gap {} GHz",
                    bin.omega_ghz
                );
            }
        }
    }

    #[test]
    fn coupling_columns_are_normalized() {
        // sum_l |<E_l| Z_j |E_k>|^2 = 1 for every j, k since Z^2 = I.
        let problem = pfc_problem(2, 0.09);
        let snap = spectral::snapshot(&problem, &AnnealSchedule::linear(), 0.6, 16).unwrap();
        let couplings = qubit_couplings(&snap);
        for a in &couplings {
            for k in 0..16 {
                let total: f64 = (0..16).map(|l| a[(l, k)] * a[(l, k)]).sum();
                assert_relative_eq!(total, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn relaxation_element_positive_at_gap() {
        let problem = pfc_problem(3, 0.1);
        let snap =
            spectral::snapshot(&problem, &AnnealSchedule::linear(), 0.8227, 2).unwrap();
        let couplings = qubit_couplings(&snap);
        let total: f64 = couplings.iter().map(|a| a[(0, 1)] * a[(0, 1)]).sum();
        assert!(total > 1e-6, "relaxation element {total}");
    }

    #[test]
    fn dissipator_matches_dense_lindblad_form() {
        // Dual route: the apply-ready dissipator against the naive dense
        // sum gamma (L rho L^dag - {L^dag L, rho} / 2) built from the
        // materialized operators.
        let problem = pfc_problem(2, 0.09);
        let snap = spectral::snapshot(&problem, &AnnealSchedule::linear(), 0.7, 16).unwrap();
        let couplings = qubit_couplings(&snap);
        let set = lindblad_set(&snap, 1e-6);
        let bath = BathParams::default();

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let dim = 16;
        let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            for j in i..dim {
                let v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                rho[(i, j)] = v;
                rho[(j, i)] = v.conj();
            }
        }

        // Naive route.
        let mut expected = DMatrix::<Complex64>::zeros(dim, dim);
        for (b, bin) in set.bins.iter().enumerate() {
            let rate = bath.gamma_angular(units::ghz_to_angular(bin.omega_ghz));
            for qubit in 0..4 {
                let l = set.operator(&couplings, b, qubit).map(|x| Complex64::new(x, 0.0));
                let l_dag = l.adjoint();
                let ldl = &l_dag * &l;
                expected += (&l * &rho * &l_dag
                    - (&ldl * &rho + &rho * &ldl) * Complex64::new(0.5, 0.0))
                    * Complex64::new(rate, 0.0);
            }
        }

        // Production route.
        let dissipator =
            DaviesDissipator::new(&snap.eigenvalues, couplings, &bath, 1e-6, dim);
        let mut rho_re = DMatrix::zeros(dim, dim);
        let mut rho_im = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                rho_re[(i, j)] = rho[(i, j)].re;
                rho_im[(i, j)] = rho[(i, j)].im;
            }
        }
        let mut out_re = DMatrix::zeros(dim, dim);
        let mut out_im = DMatrix::zeros(dim, dim);
        dissipator.accumulate(&rho_re, &rho_im, &mut out_re, &mut out_im);

        for i in 0..dim {
            for j in 0..dim {
                assert_relative_eq!(out_re[(i, j)], expected[(i, j)].re, epsilon = 1e-10);
                assert_relative_eq!(out_im[(i, j)], expected[(i, j)].im, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn frozen_hamiltonian_keeps_populations() {
        // With s pinned and the bath switched off the evolution is
        // rho(t) = e^{-iHt} rho(0) e^{+iHt}: eigenbasis populations are
        // constants of motion.
        let problem = pfc_problem(2, 0.3);
        let schedule = AnnealSchedule::linear();
        let bath = BathParams {
            coupling: 0.0,
            ..BathParams::default()
        };
        let outputs: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let trajectory = evolve_ame_frozen(
            &problem,
            &schedule,
            &bath,
            0.6,
            8.0,
            &outputs,
            &AmeOptions::default(),
        )
        .unwrap();
        let first = &trajectory.populations[0];
        for p in &trajectory.populations {
            for (a, b) in p.iter().zip(first) {
                assert!((a - b).abs() < 1e-6, "population drift {a} vs {b}");
            }
        }
    }

    #[test]
    fn ame_with_zero_coupling_matches_closed() {
        let problem = pfc_problem(2, 0.09);
        let schedule = AnnealSchedule::linear();
        let outputs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let t = 5.0;
        let closed = evolve_closed(&problem, &schedule, t, &outputs).unwrap();
        let bath = BathParams {
            coupling: 0.0,
            ..BathParams::default()
        };
        let open = evolve_ame(
            &problem,
            &schedule,
            &bath,
            t,
            &outputs,
            &AmeOptions::default(),
        )
        .unwrap();
        for (pc, po) in closed.populations.iter().zip(&open.populations) {
            for (a, b) in pc.iter().zip(po) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn trajectory_diagnostics_within_bounds() {
        let problem = pfc_problem(2, 0.09);
        let schedule = AnnealSchedule::linear();
        let outputs: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
        let trajectory = evolve_closed(&problem, &schedule, 10.0, &outputs).unwrap();
        for d in &trajectory.diagnostics {
            assert!(d.trace_deviation < 1e-6);
            assert!(d.hermiticity_error < 1e-8);
            assert!((d.purity - 1.0).abs() < 1e-6);
        }
        assert!(trajectory.final_rho.min_eigenvalue() > -1e-7);
    }

    #[test]
    fn rate_profile_properties() {
        let problem = pfc_problem(2, 0.09);
        let schedule = AnnealSchedule::linear();
        let bath = BathParams::default();
        let grid: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
        let profile = transition_rate_profile(&problem, &schedule, &bath, &grid).unwrap();
        for &(s, rate) in &profile {
            assert!(rate >= 0.0, "negative rate at s={s}");
        }
        // Sigma-z is diagonal at s=1: the off-diagonal element vanishes.
        assert!(profile.last().unwrap().1 < 1e-9);
    }

    #[test]
    fn adiabatic_estimate_scaling() {
        // Quartering under a doubled gap, and the calibration anchor.
        let problem = pfc_problem(3, 0.3);
        let schedule = AnnealSchedule::linear();
        let estimate = adiabatic_time_estimate(&problem, &schedule).unwrap();
        assert_relative_eq!(estimate, 20.0, max_relative = 1e-2);
    }

    #[test]
    fn output_grid_validation() {
        let problem = pfc_problem(2, 0.3);
        let schedule = AnnealSchedule::linear();
        assert!(evolve_closed(&problem, &schedule, 1.0, &[0.5, 0.4]).is_err());
        assert!(evolve_closed(&problem, &schedule, 1.0, &[0.5, 1.4]).is_err());
        assert!(evolve_closed(&problem, &schedule, -1.0, &[0.5]).is_err());
    }

    #[test]
    fn refined_grid_covers_focus() {
        let grid = refined_grid(100, 0.82, 0.05, 200);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
        let dense = grid
            .iter()
            .filter(|&&s| (s - 0.82).abs() <= 0.05)
            .count();
        assert!(dense >= 200, "only {dense} points near the focus");
    }
}
