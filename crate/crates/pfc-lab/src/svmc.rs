//! Spin-vector Monte Carlo: Metropolis-Hastings annealing over classical
//! rotors, in four variants.
//!
//! Planar variants keep each spin in the XZ plane of the Bloch sphere with a
//! polar angle `theta in [0, pi]`; spherical variants add an azimuthal angle
//! `phi in [-pi, pi]` that weights the transverse energy term by `cos phi`.
//! Uniform variants redraw angles from scratch, while the transverse-field
//! (TF) variants scale local steps by `min(A(s)/B(s), 1)` so the dynamics
//! freeze as the transverse field vanishes.
//!
//! Energies are in GHz against the inverse temperature `beta = h / (k_B T)`
//! in 1/GHz. Campaigns draw per-sample random streams deterministically from
//! `(seed, repeat, sample)` and bootstrap the per-repeat success fractions.

use std::collections::HashSet;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ising::{low_energy_census, AnnealSchedule, IsingProblem, SpinConfig};
use crate::units::inverse_temperature_ghz;

/// The four update/energy rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SvmcVariant {
    #[serde(rename = "svmc")]
    Svmc,
    #[serde(rename = "svmc-tf")]
    SvmcTf,
    #[serde(rename = "spherical-svmc")]
    SphericalSvmc,
    #[serde(rename = "spherical-svmc-tf")]
    SphericalSvmcTf,
}

impl SvmcVariant {
    pub const ALL: [SvmcVariant; 4] = [
        SvmcVariant::Svmc,
        SvmcVariant::SvmcTf,
        SvmcVariant::SphericalSvmc,
        SvmcVariant::SphericalSvmcTf,
    ];

    pub fn is_spherical(self) -> bool {
        matches!(self, SvmcVariant::SphericalSvmc | SvmcVariant::SphericalSvmcTf)
    }

    pub fn is_transverse_field(self) -> bool {
        matches!(self, SvmcVariant::SvmcTf | SvmcVariant::SphericalSvmcTf)
    }

    pub fn name(self) -> &'static str {
        match self {
            SvmcVariant::Svmc => "svmc",
            SvmcVariant::SvmcTf => "svmc-tf",
            SvmcVariant::SphericalSvmc => "spherical-svmc",
            SvmcVariant::SphericalSvmcTf => "spherical-svmc-tf",
        }
    }
}

/// Per-qubit rotor angles. `phi` is present only for spherical variants.
///
/// `theta` stays in `[0, pi]` and `phi` wraps to `[-pi, pi]` after every
/// update; a cosine cache is kept in sync for the local energy evaluations.
#[derive(Debug, Clone)]
pub struct RotorState {
    theta: Vec<f64>,
    phi: Option<Vec<f64>>,
    cos_theta: Vec<f64>,
}

impl RotorState {
    /// The annealing start state: every rotor on the equator (`theta = pi/2`,
    /// `phi = 0`), the classical image of the transverse ground state.
    pub fn initial(n: usize, variant: SvmcVariant) -> Self {
        Self {
            theta: vec![FRAC_PI_2; n],
            phi: variant.is_spherical().then(|| vec![0.0; n]),
            cos_theta: vec![FRAC_PI_2.cos(); n],
        }
    }

    pub fn from_angles(theta: Vec<f64>, phi: Option<Vec<f64>>) -> Result<Self> {
        if theta.iter().any(|&t| !(0.0..=PI).contains(&t)) {
            return Err(Error::InvalidParams(
                "polar angles must lie in [0, pi]".into(),
            ));
        }
        if let Some(p) = &phi {
            if p.len() != theta.len() {
                return Err(Error::SizeMismatch(format!(
                    "{} polar angles but {} azimuthal angles",
                    theta.len(),
                    p.len()
                )));
            }
            if p.iter().any(|&x| !(-PI..=PI).contains(&x)) {
                return Err(Error::InvalidParams(
                    "azimuthal angles must lie in [-pi, pi]".into(),
                ));
            }
        }
        let cos_theta = theta.iter().map(|t| t.cos()).collect();
        Ok(Self {
            theta,
            phi,
            cos_theta,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phi(&self) -> Option<&[f64]> {
        self.phi.as_deref()
    }

    fn set(&mut self, j: usize, theta: f64, cos_theta: f64, phi: Option<f64>) {
        self.theta[j] = theta;
        self.cos_theta[j] = cos_theta;
        if let (Some(phis), Some(p)) = (self.phi.as_mut(), phi) {
            phis[j] = p;
        }
    }
}

/// Campaign sizing: paper-scale defaults are 20,000 samples repeated 50
/// times at 12 mK.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CampaignSpec {
    pub sweeps: usize,
    pub n_samples: usize,
    pub repeats: usize,
    pub temperature_mk: f64,
    pub seed: u64,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        Self {
            sweeps: 1000,
            n_samples: 20_000,
            repeats: 50,
            temperature_mk: 12.0,
            seed: 0,
        }
    }
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.n_samples == 0 || self.repeats == 0 {
            return Err(Error::InvalidParams(
                "campaign counts must all be positive".into(),
            ));
        }
        if !(self.temperature_mk > 0.0) {
            return Err(Error::InvalidParams(format!(
                "campaign temperature must be positive, got {} mK",
                self.temperature_mk
            )));
        }
        Ok(())
    }
}

/// Rotor energy of a full state, in GHz.
///
/// Planar: `-A(s) sum sin(theta_j) + B(s) [sum h_j cos(theta_j)
/// + sum J_jk cos(theta_j) cos(theta_k)]`; spherical variants weight the
/// transverse sum by `cos(phi_j)`.
pub fn svmc_energy(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    s: f64,
    state: &RotorState,
    variant: SvmcVariant,
) -> Result<f64> {
    let n = problem.n_qubits();
    if state.len() != n {
        return Err(Error::SizeMismatch(format!(
            "state has {} rotors, problem has {n} qubits",
            state.len()
        )));
    }
    let phi = if variant.is_spherical() {
        Some(state.phi().ok_or_else(|| {
            Error::SizeMismatch("spherical variant requires azimuthal angles".into())
        })?)
    } else {
        None
    };
    let mut transverse = 0.0;
    for j in 0..n {
        let weight = phi.map_or(1.0, |p| p[j].cos());
        transverse += weight * state.theta[j].sin();
    }
    let mut problem_term = 0.0;
    for (i, v) in problem.biases() {
        problem_term += v * state.cos_theta[i];
    }
    for (i, j, v) in problem.couplings() {
        problem_term += v * state.cos_theta[i] * state.cos_theta[j];
    }
    Ok(-schedule.a(s) * transverse + schedule.b(s) * problem_term)
}

/// Step scale `min(A(s)/B(s), 1)` of the TF variants, defined as 1 where
/// `B(s) = 0`.
pub fn tf_step_scale(schedule: &AnnealSchedule, s: f64) -> f64 {
    let b = schedule.b(s);
    if b <= 0.0 {
        1.0
    } else {
        (schedule.a(s) / b).min(1.0)
    }
}

/// A proposed single-qubit move.
#[derive(Debug, Clone, Copy)]
pub struct Proposal {
    pub theta: f64,
    pub phi: Option<f64>,
}

fn reflect_theta(theta: f64) -> f64 {
    if theta < 0.0 {
        -theta
    } else if theta > PI {
        2.0 * PI - theta
    } else {
        theta
    }
}

fn wrap_phi(phi: f64) -> f64 {
    if phi > PI {
        phi - 2.0 * PI
    } else if phi < -PI {
        phi + 2.0 * PI
    } else {
        phi
    }
}

/// Draw new angles for qubit `j`.
///
/// Uniform variants redraw `theta` from `[0, pi]` (and `phi` from
/// `[-pi, pi]`); TF variants take a scaled step, reflecting `theta` at the
/// poles and wrapping `phi` periodically.
pub fn propose<R: Rng + ?Sized>(
    variant: SvmcVariant,
    state: &RotorState,
    j: usize,
    s: f64,
    schedule: &AnnealSchedule,
    rng: &mut R,
) -> Proposal {
    let theta = if variant.is_transverse_field() {
        let scale = tf_step_scale(schedule, s);
        reflect_theta(state.theta[j] + scale * rng.gen_range(-PI..PI))
    } else {
        rng.gen_range(0.0..PI)
    };
    let phi = if variant.is_spherical() {
        Some(if variant.is_transverse_field() {
            let scale = tf_step_scale(schedule, s);
            wrap_phi(state.phi().expect("spherical state")[j] + scale * rng.gen_range(-PI..PI))
        } else {
            rng.gen_range(-PI..PI)
        })
    } else {
        None
    };
    Proposal { theta, phi }
}

/// Prepared adjacency view of a problem plus fixed run settings; the hot
/// loops of sweeps and anneals live here.
#[derive(Debug, Clone)]
pub struct SvmcRunner {
    bias: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
    schedule: AnnealSchedule,
    variant: SvmcVariant,
    pub beta: f64,
}

impl SvmcRunner {
    pub fn new(
        problem: &IsingProblem,
        schedule: &AnnealSchedule,
        variant: SvmcVariant,
        temperature_mk: f64,
    ) -> Self {
        let n = problem.n_qubits();
        let mut bias = vec![0.0; n];
        for (i, v) in problem.biases() {
            bias[i] = v;
        }
        let mut neighbors = vec![Vec::new(); n];
        for (i, j, v) in problem.couplings() {
            neighbors[i].push((j, v));
            neighbors[j].push((i, v));
        }
        Self {
            bias,
            neighbors,
            schedule: schedule.clone(),
            variant,
            beta: inverse_temperature_ghz(temperature_mk),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.bias.len()
    }

    /// One Metropolis sweep at fixed `s`: every qubit visited once in a
    /// fresh random permutation, with one accept/reject decision per rotor
    /// angle. Returns the number of accepted moves.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut RotorState, s: f64, rng: &mut R) -> usize {
        let mut order: Vec<usize> = (0..self.n_qubits()).collect();
        self.sweep_with(state, s, rng, &mut order, false)
    }

    fn sweep_with<R: Rng + ?Sized>(
        &self,
        state: &mut RotorState,
        s: f64,
        rng: &mut R,
        order: &mut [usize],
        freeze_phi: bool,
    ) -> usize {
        let a = self.schedule.a(s);
        let b = self.schedule.b(s);
        let spherical = self.variant.is_spherical();
        let tf = self.variant.is_transverse_field();
        let scale = if tf { tf_step_scale(&self.schedule, s) } else { 1.0 };

        // Fisher-Yates permutation, redrawn every sweep.
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }

        // Each rotor angle gets its own Metropolis decision: a polar move,
        // then (for spherical variants) an azimuthal move at the updated
        // polar angle.
        let mut accepted = 0;
        for &j in order.iter() {
            let theta_old = state.theta[j];
            let cos_old = state.cos_theta[j];
            let phi_old = state.phi.as_ref().map(|p| p[j]);
            let cos_phi = phi_old.map_or(1.0, f64::cos);

            let theta_new = if tf {
                reflect_theta(theta_old + scale * rng.gen_range(-PI..PI))
            } else {
                rng.gen_range(0.0..PI)
            };
            let (sin_new, cos_new) = theta_new.sin_cos();
            let mut field = self.bias[j];
            for &(k, v) in &self.neighbors[j] {
                field += v * state.cos_theta[k];
            }
            let delta = -a * cos_phi * (sin_new - theta_old.sin())
                + b * field * (cos_new - cos_old);
            if delta <= 0.0 || rng.gen::<f64>() < (-self.beta * delta).exp() {
                state.set(j, theta_new, cos_new, None);
                accepted += 1;
            }

            if spherical && !freeze_phi {
                let old = phi_old.expect("spherical state carries phi");
                let phi_new = if tf {
                    wrap_phi(old + scale * rng.gen_range(-PI..PI))
                } else {
                    rng.gen_range(-PI..PI)
                };
                let delta = -a * state.theta[j].sin() * (phi_new.cos() - old.cos());
                if delta <= 0.0 || rng.gen::<f64>() < (-self.beta * delta).exp() {
                    state.phi.as_mut().expect("spherical state carries phi")[j] = phi_new;
                    accepted += 1;
                }
            }
        }
        accepted
    }

    /// Full anneal: `sweeps` Metropolis sweeps with `s` advancing linearly
    /// from 0 to 1 (a single sweep runs at `s = 0`).
    pub fn anneal<R: Rng + ?Sized>(&self, sweeps: usize, rng: &mut R) -> RotorState {
        let mut state = RotorState::initial(self.n_qubits(), self.variant);
        let mut order: Vec<usize> = (0..self.n_qubits()).collect();
        for k in 0..sweeps {
            let s = if sweeps == 1 {
                0.0
            } else {
                k as f64 / (sweeps - 1) as f64
            };
            self.sweep_with(&mut state, s, rng, &mut order, false);
        }
        state
    }

    #[cfg(test)]
    fn anneal_frozen_phi<R: Rng + ?Sized>(&self, sweeps: usize, rng: &mut R) -> RotorState {
        let mut state = RotorState::initial(self.n_qubits(), self.variant);
        let mut order: Vec<usize> = (0..self.n_qubits()).collect();
        for k in 0..sweeps {
            let s = if sweeps == 1 {
                0.0
            } else {
                k as f64 / (sweeps - 1) as f64
            };
            self.sweep_with(&mut state, s, rng, &mut order, true);
        }
        state
    }
}

/// One Metropolis sweep over all qubits at fixed `s` (contract form; builds
/// the adjacency view on the fly, so prefer [`SvmcRunner`] in loops).
pub fn metropolis_sweep<R: Rng + ?Sized>(
    problem: &IsingProblem,
    schedule: &AnnealSchedule,
    s: f64,
    state: &mut RotorState,
    variant: SvmcVariant,
    beta: f64,
    rng: &mut R,
) -> Result<usize> {
    if state.len() != problem.n_qubits() {
        return Err(Error::SizeMismatch(format!(
            "state has {} rotors, problem has {} qubits",
            state.len(),
            problem.n_qubits()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let mut runner = SvmcRunner::new(problem, schedule, variant, 1.0);
    runner.beta = beta;
    Ok(runner.sweep(state, s, rng))
}

/// Run one anneal from `s = 0` to `s = 1` and return the final rotor state.
pub fn run_anneal<R: Rng + ?Sized>(
    problem: &IsingProblem,
    variant: SvmcVariant,
    sweeps: usize,
    temperature_mk: f64,
    rng: &mut R,
) -> Result<RotorState> {
    if sweeps == 0 {
        return Err(Error::InvalidParams("sweeps must be >= 1".into()));
    }
    let runner = SvmcRunner::new(problem, &AnnealSchedule::linear(), variant, temperature_mk);
    Ok(runner.anneal(sweeps, rng))
}

/// Project a rotor state onto the computational basis: spin `+1` where
/// `cos(theta) > 0`, `-1` where it is negative, fair coin on exact ties.
pub fn readout<R: Rng + ?Sized>(state: &RotorState, rng: &mut R) -> SpinConfig {
    let spins = state
        .theta
        .iter()
        .map(|&t| {
            if t < FRAC_PI_2 {
                1
            } else if t > FRAC_PI_2 {
                -1
            } else if rng.gen::<bool>() {
                1
            } else {
                -1
            }
        })
        .collect();
    SpinConfig::new(spins).expect("readout yields +-1 spins")
}

/// Median with a bootstrap 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    percentile(values, 0.5)
}

/// Bootstrap the median of `values` with `resamples` draws; returns the
/// median of the bootstrap distribution and its 2.5/97.5 percentiles.
pub fn bootstrap_median<R: Rng + ?Sized>(
    values: &[f64],
    resamples: usize,
    rng: &mut R,
) -> Estimate {
    let mut medians = Vec::with_capacity(resamples);
    let mut draw = vec![0.0; values.len()];
    for _ in 0..resamples {
        for slot in draw.iter_mut() {
            *slot = values[rng.gen_range(0..values.len())];
        }
        medians.push(median_of(&mut draw));
    }
    medians.sort_by(f64::total_cmp);
    Estimate {
        median: percentile(&medians, 0.5),
        lower: percentile(&medians, 0.025),
        upper: percentile(&medians, 0.975),
    }
}

/// Campaign output: ground-state and first-excited-manifold probabilities
/// with bootstrap confidence intervals, plus the raw per-repeat fractions.
#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub p_ground: Estimate,
    pub p_manifold: Estimate,
    pub ground_fractions: Vec<f64>,
    pub manifold_fractions: Vec<f64>,
}

fn sample_rng(seed: u64, repeat: u64, sample: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&repeat.to_le_bytes());
    key[16..24].copy_from_slice(&sample.to_le_bytes());
    key[24..32].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Run `repeats x n_samples` independent anneals and estimate the
/// probability that a readout hits the ground state or lands anywhere in the
/// first-excited manifold.
///
/// Samples are distributed over a thread pool; every sample's random stream
/// comes from `(seed, repeat, sample)`, so results are independent of the
/// execution order.
pub fn campaign(
    problem: &IsingProblem,
    variant: SvmcVariant,
    spec: &CampaignSpec,
) -> Result<CampaignResult> {
    spec.validate()?;
    let census = low_energy_census(problem)?;
    let ground_index = census.ground.index();
    let manifold: HashSet<usize> = census
        .first_excited
        .iter()
        .map(|config| config.index())
        .collect();
    let runner = SvmcRunner::new(
        problem,
        &AnnealSchedule::linear(),
        variant,
        spec.temperature_mk,
    );

    let totals: Vec<(u64, u64)> = (0..spec.repeats as u64)
        .into_par_iter()
        .map(|repeat| {
            (0..spec.n_samples as u64)
                .into_par_iter()
                .map(|sample| {
                    let mut rng = sample_rng(spec.seed, repeat, sample);
                    let state = runner.anneal(spec.sweeps, &mut rng);
                    let index = readout(&state, &mut rng).index();
                    (
                        u64::from(index == ground_index),
                        u64::from(manifold.contains(&index)),
                    )
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
        })
        .collect();

    let ground_fractions: Vec<f64> = totals
        .iter()
        .map(|&(g, _)| g as f64 / spec.n_samples as f64)
        .collect();
    let manifold_fractions: Vec<f64> = totals
        .iter()
        .map(|&(_, m)| m as f64 / spec.n_samples as f64)
        .collect();

    let mut rng = sample_rng(spec.seed, u64::MAX, u64::MAX);
    let p_ground = bootstrap_median(&ground_fractions, BOOTSTRAP_RESAMPLES, &mut rng);
    let p_manifold = bootstrap_median(&manifold_fractions, BOOTSTRAP_RESAMPLES, &mut rng);

    Ok(CampaignResult {
        p_ground,
        p_manifold,
        ground_fractions,
        manifold_fractions,
    })
}

pub const CAMPAIGN_CSV_HEADER: &str = "variant,M,R,d,sweeps,P_ground_median,P_ground_lo,\
P_ground_hi,P_manifold_median,P_manifold_lo,P_manifold_hi,n_samples,repeats,seed";

/// Readout counts over all basis states from `n_samples` independent
/// anneals (a histogram of final classical measurements).
pub fn readout_histogram(
    problem: &IsingProblem,
    variant: SvmcVariant,
    sweeps: usize,
    n_samples: usize,
    temperature_mk: f64,
    seed: u64,
) -> Result<Vec<u64>> {
    let n = problem.n_qubits();
    if n > crate::ising::ENUMERATION_LIMIT {
        return Err(Error::TooLarge(format!(
            "histogram over 2^{n} states exceeds the enumeration limit"
        )));
    }
    if sweeps == 0 || n_samples == 0 {
        return Err(Error::InvalidParams(
            "histogram needs positive sweeps and samples".into(),
        ));
    }
    let runner = SvmcRunner::new(problem, &AnnealSchedule::linear(), variant, temperature_mk);
    let states = 1usize << n;
    let histogram = (0..n_samples as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; states],
            |mut acc, sample| {
                // A separate stream domain from campaign repeats.
                let mut rng = sample_rng(seed, 1 << 32, sample);
                let state = runner.anneal(sweeps, &mut rng);
                acc[readout(&state, &mut rng).index()] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; states],
            |mut a, b| {
                for (slot, value) in a.iter_mut().zip(b) {
                    *slot += value;
                }
                a
            },
        );
    Ok(histogram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{build_pfc, PfcParams};
    use crate::thermo::gibbs_probabilities;
    use approx::assert_relative_eq;

    fn pfc_problem(m: usize, d: f64) -> IsingProblem {
        build_pfc(&PfcParams::new(m, 1.0, d).unwrap()).unwrap()
    }

    #[test]
    fn energy_reference_values() {
        let problem = pfc_problem(2, 0.09);
        let schedule = AnnealSchedule::linear();
        let n = 4;

        // Equator at s=0: pure transverse term, -3N for every variant.
        for variant in SvmcVariant::ALL {
            let state = RotorState::initial(n, variant);
            let e = svmc_energy(&problem, &schedule, 0.0, &state, variant).unwrap();
            assert_relative_eq!(e, -12.0, epsilon = 1e-12);
        }

        // Poles at s=1: three times the classical configuration energy.
        let theta = vec![0.0, PI, 0.0, PI];
        let config = SpinConfig::new(vec![1, -1, 1, -1]).unwrap();
        let classical = problem.classical_energy(&config).unwrap();
        for variant in SvmcVariant::ALL {
            let phi = variant.is_spherical().then(|| vec![0.3; n]);
            let state = RotorState::from_angles(theta.clone(), phi).unwrap();
            let e = svmc_energy(&problem, &schedule, 1.0, &state, variant).unwrap();
            assert_relative_eq!(e, 3.0 * classical, epsilon = 1e-12);
        }
    }

    #[test]
    fn spherical_energy_reduces_to_planar_at_zero_phi() {
        let problem = pfc_problem(3, 0.1);
        let schedule = AnnealSchedule::linear();
        let theta = vec![0.3, 1.1, 2.9, 0.7, 1.9, 2.2];
        let planar = RotorState::from_angles(theta.clone(), None).unwrap();
        let spherical = RotorState::from_angles(theta, Some(vec![0.0; 6])).unwrap();
        for &s in &[0.0, 0.4, 0.9] {
            let e_planar =
                svmc_energy(&problem, &schedule, s, &planar, SvmcVariant::Svmc).unwrap();
            let e_spherical =
                svmc_energy(&problem, &schedule, s, &spherical, SvmcVariant::SphericalSvmc)
                    .unwrap();
            assert_relative_eq!(e_planar, e_spherical, epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_dimension_mismatch() {
        let problem = pfc_problem(2, 0.1);
        let state = RotorState::initial(6, SvmcVariant::Svmc);
        assert!(svmc_energy(
            &problem,
            &AnnealSchedule::linear(),
            0.5,
            &state,
            SvmcVariant::Svmc
        )
        .is_err());
    }

    #[test]
    fn tf_step_scale_values() {
        let schedule = AnnealSchedule::linear();
        assert_eq!(tf_step_scale(&schedule, 0.0), 1.0);
        assert_eq!(tf_step_scale(&schedule, 0.3), 1.0);
        assert_eq!(tf_step_scale(&schedule, 0.5), 1.0);
        assert_relative_eq!(tf_step_scale(&schedule, 0.9), 1.0 / 9.0, epsilon = 1e-12);
    }

    #[test]
    fn proposals_respect_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let schedule = AnnealSchedule::linear();
        for variant in SvmcVariant::ALL {
            let mut state = RotorState::initial(4, variant);
            // Push a rotor near a pole so reflection gets exercised.
            state.set(2, 0.05, 0.05f64.cos(), Some(3.1));
            for &s in &[0.0, 0.5, 0.97] {
                for _ in 0..500 {
                    let p = propose(variant, &state, 2, s, &schedule, &mut rng);
                    assert!((0.0..=PI).contains(&p.theta), "theta {}", p.theta);
                    assert_eq!(p.phi.is_some(), variant.is_spherical());
                    if let Some(phi) = p.phi {
                        assert!((-PI..=PI).contains(&phi), "phi {phi}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_temperature_limit_accepts_everything() {
        // beta -> 0 accepts all proposals: acceptance count equals N.
        let problem = pfc_problem(2, 0.1);
        let schedule = AnnealSchedule::linear();
        let mut state = RotorState::initial(4, SvmcVariant::Svmc);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let accepted = metropolis_sweep(
                &problem,
                &schedule,
                0.7,
                &mut state,
                SvmcVariant::Svmc,
                1e-12,
                &mut rng,
            )
            .unwrap();
            assert_eq!(accepted, 4);
        }
    }

    #[test]
    fn boundary_safety_after_many_sweeps() {
        let problem = pfc_problem(3, 0.1);
        let runner = SvmcRunner::new(
            &problem,
            &AnnealSchedule::linear(),
            SvmcVariant::SphericalSvmcTf,
            12.0,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let state = runner.anneal(2000, &mut rng);
        assert!(state.theta().iter().all(|&t| (0.0..=PI).contains(&t)));
        assert!(state
            .phi()
            .unwrap()
            .iter()
            .all(|&p| (-PI..=PI).contains(&p)));
        for (j, &t) in state.theta().iter().enumerate() {
            assert_relative_eq!(state.cos_theta[j], t.cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn readout_reference_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let up = RotorState::from_angles(vec![0.0; 4], None).unwrap();
        assert_eq!(readout(&up, &mut rng), SpinConfig::all_up(4));
        let down = RotorState::from_angles(vec![PI; 4], None).unwrap();
        assert_eq!(readout(&down, &mut rng), SpinConfig::all_down(4));
    }

    #[test]
    fn readout_breaks_exact_ties_fairly() {
        let state = RotorState::from_angles(vec![FRAC_PI_2], None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = 10_000;
        let ups: usize = (0..draws)
            .filter(|_| readout(&state, &mut rng).spins()[0] == 1)
            .count();
        let frequency = ups as f64 / draws as f64;
        assert!((frequency - 0.5).abs() < 0.02, "tie frequency {frequency}");
    }

    #[test]
    fn single_sweep_reads_out_uniformly() {
        // One sweep at s=0 leaves each rotor symmetric about the equator, so
        // readout is uniform over the 2^N configurations.
        let problem = pfc_problem(2, 0.1);
        let runner =
            SvmcRunner::new(&problem, &AnnealSchedule::linear(), SvmcVariant::Svmc, 12.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ground = SpinConfig::all_up(4);
        let samples = 20_000;
        let hits = (0..samples)
            .filter(|_| {
                let state = runner.anneal(1, &mut rng);
                readout(&state, &mut rng) == ground
            })
            .count();
        let p = hits as f64 / samples as f64;
        assert!((p - 1.0 / 16.0).abs() < 0.006, "P(ground) = {p}");
    }

    #[test]
    fn fixed_s_chain_matches_gibbs_oracle() {
        // Frozen chain at s=1 for (M=2, d=0.3) at 12 mK. The effective
        // classical distribution is over B(1) * H_P, i.e. Gibbs at 3 beta.
        // Long chains with generous burn-in escape the manifold basin and
        // the readout histogram converges on the oracle.
        let problem = pfc_problem(2, 0.3);
        let schedule = AnnealSchedule::linear();
        let runner = SvmcRunner::new(&problem, &schedule, SvmcVariant::Svmc, 12.0);
        let beta_eff = runner.beta * schedule.b(1.0);
        let oracle = gibbs_probabilities(&problem, beta_eff).unwrap();

        let chains = 4;
        let burn_in = 300_000;
        let samples_per_chain = 300_000;
        let mut histogram = vec![0u64; 16];
        for chain in 0..chains {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + chain);
            let mut state = RotorState::initial(4, SvmcVariant::Svmc);
            let mut order: Vec<usize> = (0..4).collect();
            for _ in 0..burn_in {
                runner.sweep_with(&mut state, 1.0, &mut rng, &mut order, false);
            }
            for _ in 0..samples_per_chain {
                runner.sweep_with(&mut state, 1.0, &mut rng, &mut order, false);
                histogram[readout(&state, &mut rng).index()] += 1;
            }
        }
        let total = (chains as u64 * samples_per_chain as u64) as f64;
        let tv: f64 = histogram
            .iter()
            .zip(&oracle)
            .map(|(&count, &p)| (count as f64 / total - p).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv <= 0.02, "total variation {tv}");
    }

    #[test]
    fn campaign_degenerate_spec() {
        let problem = pfc_problem(2, 0.1);
        let spec = CampaignSpec {
            sweeps: 10,
            n_samples: 1,
            repeats: 1,
            temperature_mk: 12.0,
            seed: 9,
        };
        let result = campaign(&problem, SvmcVariant::Svmc, &spec).unwrap();
        assert!(result.p_ground.median == 0.0 || result.p_ground.median == 1.0);
        assert_eq!(result.p_ground.lower, result.p_ground.upper);
    }

    #[test]
    fn campaign_is_deterministic() {
        let problem = pfc_problem(2, 0.1);
        let spec = CampaignSpec {
            sweeps: 50,
            n_samples: 200,
            repeats: 4,
            temperature_mk: 12.0,
            seed: 11,
        };
        let a = campaign(&problem, SvmcVariant::SphericalSvmcTf, &spec).unwrap();
        let b = campaign(&problem, SvmcVariant::SphericalSvmcTf, &spec).unwrap();
        assert_eq!(a.ground_fractions, b.ground_fractions);
        assert_eq!(a.p_ground, b.p_ground);
        assert_eq!(a.p_manifold, b.p_manifold);
    }

    #[test]
    fn frozen_phi_reduces_spherical_to_planar() {
        // With phi pinned at zero the spherical chains sample the planar
        // distribution: compare ground-state hit rates.
        let problem = pfc_problem(2, 0.2);
        let schedule = AnnealSchedule::linear();
        let sweeps = 300;
        let samples = 4000;
        let ground = SpinConfig::all_up(4);

        let hit_rate = |variant: SvmcVariant, frozen: bool, seed: u64| {
            let runner = SvmcRunner::new(&problem, &schedule, variant, 12.0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hits = (0..samples)
                .filter(|_| {
                    let state = if frozen {
                        runner.anneal_frozen_phi(sweeps, &mut rng)
                    } else {
                        runner.anneal(sweeps, &mut rng)
                    };
                    readout(&state, &mut rng) == ground
                })
                .count();
            hits as f64 / samples as f64
        };

        let planar = hit_rate(SvmcVariant::Svmc, false, 21);
        let reduced = hit_rate(SvmcVariant::SphericalSvmc, true, 22);
        // Three-sigma band for the difference of two binomial rates.
        let sigma = (2.0 * planar.max(0.01) * (1.0 - planar) / samples as f64).sqrt();
        assert!(
            (planar - reduced).abs() < 3.0 * sigma.max(0.01),
            "planar {planar} vs frozen-phi spherical {reduced}"
        );
    }

    #[test]
    fn bootstrap_collapses_on_constant_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let estimate = bootstrap_median(&[0.25; 20], 1000, &mut rng);
        assert_eq!(estimate.median, 0.25);
        assert_eq!(estimate.lower, 0.25);
        assert_eq!(estimate.upper, 0.25);
    }
}
