//! Spin-coherent product states, the two-angle semi-classical potential of
//! the perturbed chain, trace-norm distances to the instantaneous ground
//! state, and landscape scans.
//!
//! The reduced Ansatz gives every auxiliary qubit the polar angle `theta_a`
//! and every backbone qubit `theta_b`, with zero azimuth, so the potential
//! `V(s, theta_a, theta_b) = <theta|H(s)|theta>` collapses to a closed form
//! in the two angles.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ising::{AnnealSchedule, PfcParams};
use crate::spectral::SpectralSnapshot;

/// Reduced two-angle coherent state: shared auxiliary and backbone polar
/// angles in the XZ plane, azimuth fixed at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAngles {
    pub theta_aux: f64,
    pub theta_backbone: f64,
}

impl CoherentAngles {
    pub fn new(theta_aux: f64, theta_backbone: f64) -> Self {
        Self {
            theta_aux,
            theta_backbone,
        }
    }

    /// Expand to a per-qubit state on `2 M` qubits with zero azimuth.
    pub fn to_full(&self, subsystems: usize) -> FullCoherentState {
        let mut thetas = vec![self.theta_aux; subsystems];
        thetas.extend(std::iter::repeat(self.theta_backbone).take(subsystems));
        FullCoherentState {
            phis: vec![0.0; thetas.len()],
            thetas,
        }
    }
}

/// Per-qubit spin-coherent product state
/// `prod_j [cos(theta_j/2)|0> + e^{i phi_j} sin(theta_j/2)|1>]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCoherentState {
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
}

impl FullCoherentState {
    pub fn n_qubits(&self) -> usize {
        self.thetas.len()
    }
}

/// Dense state vector of a per-qubit coherent product state.
pub fn coherent_vector(state: &FullCoherentState) -> Result<DVector<Complex64>> {
    let n = state.n_qubits();
    if state.phis.len() != n {
        return Err(Error::SizeMismatch(format!(
            "{} polar angles but {} azimuthal angles",
            n,
            state.phis.len()
        )));
    }
    let dim = 1usize << n;
    let up: Vec<Complex64> = state
        .thetas
        .iter()
        .map(|t| Complex64::new((t / 2.0).cos(), 0.0))
        .collect();
    let down: Vec<Complex64> = state
        .thetas
        .iter()
        .zip(&state.phis)
        .map(|(t, p)| Complex64::from_polar((t / 2.0).sin(), *p))
        .collect();
    let mut psi = DVector::from_element(dim, Complex64::new(1.0, 0.0));
    for x in 0..dim {
        let mut amp = Complex64::new(1.0, 0.0);
        for j in 0..n {
            amp *= if x >> j & 1 == 0 { up[j] } else { down[j] };
        }
        psi[x] = amp;
    }
    Ok(psi)
}

/// Real state vector of the reduced two-angle Ansatz.
pub fn reduced_coherent_vector(angles: &CoherentAngles, subsystems: usize) -> DVector<f64> {
    let n = 2 * subsystems;
    let dim = 1usize << n;
    let amp_of = |theta: f64, bit: usize| {
        if bit == 0 {
            (theta / 2.0).cos()
        } else {
            (theta / 2.0).sin()
        }
    };
    let mut psi = DVector::zeros(dim);
    for x in 0..dim {
        let mut amp = 1.0;
        for j in 0..n {
            let theta = if j < subsystems {
                angles.theta_aux
            } else {
                angles.theta_backbone
            };
            amp *= amp_of(theta, x >> j & 1);
        }
        psi[x] = amp;
    }
    psi
}

/// Closed-form two-angle semi-classical potential of the perturbed chain, in
/// GHz. Verified against the dense expectation value `<theta|H(s)|theta>` in
/// the oracle tests.
pub fn potential(
    params: &PfcParams,
    schedule: &AnnealSchedule,
    s: f64,
    angles: &CoherentAngles,
) -> f64 {
    let m = params.subsystems as f64;
    let r = params.energy_scale;
    let d = params.perturbation;
    let (sin_a, cos_a) = angles.theta_aux.sin_cos();
    let (sin_b, cos_b) = angles.theta_backbone.sin_cos();
    let transverse = -schedule.a(s) * m * (sin_a + sin_b);
    let problem = schedule.b(s)
        * r
        * (m * (1.0 - d) * cos_b - m * cos_a - m * cos_a * cos_b - (m - 1.0) * cos_b * cos_b);
    transverse + problem
}

/// A sampled two-angle landscape with its grid argmin and the strict local
/// minima found by 8-neighbor comparison (periodic in both angles).
#[derive(Debug, Clone)]
pub struct Landscape {
    pub theta_aux: Vec<f64>,
    pub theta_backbone: Vec<f64>,
    /// `values[ia][ib]`.
    pub values: Vec<Vec<f64>>,
    pub argmin: CoherentAngles,
    pub minimum: f64,
    pub local_minima: Vec<(CoherentAngles, f64)>,
}

/// Uniform grid of `points` angles spanning `[-pi, pi]`.
pub fn angle_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -std::f64::consts::PI + std::f64::consts::TAU * i as f64 / (points - 1) as f64)
        .collect()
}

fn scan_grid<F>(grid_a: &[f64], grid_b: &[f64], f: F) -> Landscape
where
    F: Fn(f64, f64) -> f64,
{
    let values: Vec<Vec<f64>> = grid_a
        .iter()
        .map(|&ta| grid_b.iter().map(|&tb| f(ta, tb)).collect())
        .collect();

    let mut argmin = (0, 0);
    let mut minimum = f64::INFINITY;
    for (ia, row) in values.iter().enumerate() {
        for (ib, &v) in row.iter().enumerate() {
            if v < minimum {
                minimum = v;
                argmin = (ia, ib);
            }
        }
    }

    // The grids span [-pi, pi] with duplicated endpoints, so neighbor lookups
    // wrap with period n-1.
    let na = grid_a.len() - 1;
    let nb = grid_b.len() - 1;
    let mut local_minima = Vec::new();
    for ia in 0..na {
        for ib in 0..nb {
            let v = values[ia][ib];
            let mut strict = true;
            'search: for da in [-1i64, 0, 1] {
                for db in [-1i64, 0, 1] {
                    if da == 0 && db == 0 {
                        continue;
                    }
                    let wa = (ia as i64 + da).rem_euclid(na as i64) as usize;
                    let wb = (ib as i64 + db).rem_euclid(nb as i64) as usize;
                    if values[wa][wb] <= v {
                        strict = false;
                        break 'search;
                    }
                }
            }
            if strict {
                local_minima.push((CoherentAngles::new(grid_a[ia], grid_b[ib]), v));
            }
        }
    }
    local_minima.sort_by(|a, b| a.1.total_cmp(&b.1));

    Landscape {
        theta_aux: grid_a.to_vec(),
        theta_backbone: grid_b.to_vec(),
        argmin: CoherentAngles::new(grid_a[argmin.0], grid_b[argmin.1]),
        minimum,
        values,
        local_minima,
    }
}

/// Sample the semi-classical potential on an angle grid (default 201x201
/// over `[-pi, pi]^2` via [`angle_grid`]).
pub fn landscape(
    params: &PfcParams,
    schedule: &AnnealSchedule,
    s: f64,
    grid: &[f64],
) -> Landscape {
    scan_grid(grid, grid, |ta, tb| {
        potential(params, schedule, s, &CoherentAngles::new(ta, tb))
    })
}

/// Trace-norm distance `sqrt(1 - |<E_0|theta_a, theta_b>|^2)` between the
/// snapshot's ground state and the reduced coherent state.
pub fn trace_norm_distance(snap: &SpectralSnapshot, angles: &CoherentAngles) -> f64 {
    let n = snap.dim().trailing_zeros() as usize;
    let psi = reduced_coherent_vector(angles, n / 2);
    let overlap: f64 = snap
        .eigenvectors
        .column(0)
        .iter()
        .zip(psi.iter())
        .map(|(a, b)| a * b)
        .sum();
    let radicand = 1.0 - overlap * overlap;
    debug_assert!(radicand >= -1e-12);
    radicand.max(0.0).sqrt()
}

/// Sample the trace-norm distance on an angle grid.
pub fn distance_landscape(snap: &SpectralSnapshot, grid: &[f64]) -> Landscape {
    scan_grid(grid, grid, |ta, tb| {
        trace_norm_distance(snap, &CoherentAngles::new(ta, tb))
    })
}

/// Refine a landscape minimum by coordinate descent (golden-section line
/// searches alternating between the two angles).
pub fn refine_minimum<F>(f: F, start: CoherentAngles, span: f64, rounds: usize) -> CoherentAngles
where
    F: Fn(&CoherentAngles) -> f64,
{
    let golden = |lo: f64, hi: f64, eval: &dyn Fn(f64) -> f64| -> f64 {
        let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (lo, hi);
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        while hi - lo > 1e-10 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = eval(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = eval(x2);
            }
        }
        0.5 * (lo + hi)
    };

    let mut current = start;
    let mut width = span;
    for _ in 0..rounds {
        let tb = current.theta_backbone;
        current.theta_aux = golden(current.theta_aux - width, current.theta_aux + width, &|x| {
            f(&CoherentAngles::new(x, tb))
        });
        let ta = current.theta_aux;
        current.theta_backbone = golden(
            current.theta_backbone - width,
            current.theta_backbone + width,
            &|x| f(&CoherentAngles::new(ta, x)),
        );
        width *= 0.5;
    }
    current
}

/// Potential sampled along the straight segment between two angle pairs;
/// returns `(t, V)` with `t` in `[0, 1]`.
pub fn hyperplane_scan(
    params: &PfcParams,
    schedule: &AnnealSchedule,
    s: f64,
    endpoints: (CoherentAngles, CoherentAngles),
    n_points: usize,
) -> Vec<(f64, f64)> {
    let (from, to) = endpoints;
    (0..n_points)
        .map(|i| {
            let t = if n_points == 1 {
                0.0
            } else {
                i as f64 / (n_points - 1) as f64
            };
            let angles = CoherentAngles::new(
                from.theta_aux + t * (to.theta_aux - from.theta_aux),
                from.theta_backbone + t * (to.theta_backbone - from.theta_backbone),
            );
            (t, potential(params, schedule, s, &angles))
        })
        .collect()
}

/// CSV text for an angle-grid landscape, with an `s` header row.
pub fn landscape_csv(landscape: &Landscape, s: f64, value_name: &str) -> String {
    let mut out = format!("# s = {s}\ntheta_a,theta_b,{value_name}\n");
    for (ia, &ta) in landscape.theta_aux.iter().enumerate() {
        for (ib, &tb) in landscape.theta_backbone.iter().enumerate() {
            out.push_str(&format!("{ta},{tb},{}\n", landscape.values[ia][ib]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{build_pfc, PfcParams};
    use crate::spectral::{build_hamiltonian, min_gap, snapshot};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn params_m2() -> PfcParams {
        PfcParams::new(2, 1.0, 0.09).unwrap()
    }

    #[test]
    fn coherent_vector_reference_states() {
        // theta = 0 everywhere: the all-up basis state.
        let psi = reduced_coherent_vector(&CoherentAngles::new(0.0, 0.0), 2);
        assert_relative_eq!(psi[0], 1.0, epsilon = 1e-15);
        assert!(psi.iter().skip(1).all(|&x| x == 0.0));

        // theta = pi/2: the uniform superposition.
        let psi = reduced_coherent_vector(&CoherentAngles::new(FRAC_PI_2, FRAC_PI_2), 2);
        for x in 0..16 {
            assert_relative_eq!(psi[x], 0.25, epsilon = 1e-12);
        }

        // theta = pi: the all-down basis state up to sign.
        let psi = reduced_coherent_vector(&CoherentAngles::new(PI, PI), 2);
        assert_relative_eq!(psi[15].abs(), 1.0, epsilon = 1e-12);
        for x in 0..15 {
            assert!(psi[x].abs() < 1e-12);
        }
    }

    #[test]
    fn full_state_normalized_and_matches_reduced() {
        let angles = CoherentAngles::new(0.7, -2.1);
        let full = angles.to_full(3);
        let psi = coherent_vector(&full).unwrap();
        assert_relative_eq!(psi.norm(), 1.0, epsilon = 1e-12);
        let reduced = reduced_coherent_vector(&angles, 3);
        for x in 0..64 {
            assert_relative_eq!(psi[x].re, reduced[x], epsilon = 1e-12);
            assert_eq!(psi[x].im, 0.0);
        }
    }

    #[test]
    fn coherent_vector_angle_count_mismatch() {
        let state = FullCoherentState {
            thetas: vec![0.1, 0.2],
            phis: vec![0.0],
        };
        assert!(coherent_vector(&state).is_err());
    }

    #[test]
    fn potential_reference_values() {
        let params = params_m2();
        let schedule = AnnealSchedule::linear();
        // Pure transverse term at s=0: -A(0) * N = -3 * 4.
        let v = potential(
            &params,
            &schedule,
            0.0,
            &CoherentAngles::new(FRAC_PI_2, FRAC_PI_2),
        );
        assert_relative_eq!(v, -12.0, epsilon = 1e-12);
        // Classical limit at s=1: B(1) times the ground energy.
        let v = potential(&params, &schedule, 1.0, &CoherentAngles::new(0.0, 0.0));
        assert_relative_eq!(v, 3.0 * -3.18, epsilon = 1e-12);
    }

    #[test]
    fn potential_matches_dense_expectation() {
        // Seeded random sweep of (s, theta_a, theta_b) at M=2 and M=3,
        // checked against <psi|H|psi> with dense matrices.
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let schedule = AnnealSchedule::linear();
        for m in [2usize, 3] {
            let params = PfcParams::new(m, 1.0, 0.09).unwrap();
            let problem = build_pfc(&params).unwrap();
            for _ in 0..100 {
                let s = rng.gen_range(0.0..1.0);
                let angles = CoherentAngles::new(
                    rng.gen_range(-PI..PI),
                    rng.gen_range(-PI..PI),
                );
                let closed = potential(&params, &schedule, s, &angles);
                let h = build_hamiltonian(&problem, &schedule, s).unwrap();
                let psi = reduced_coherent_vector(&angles, m);
                let dense = psi.dot(&(&h * &psi));
                assert_relative_eq!(closed, dense, max_relative = 1e-10, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn landscape_minimum_at_transverse_point() {
        let params = params_m2();
        let schedule = AnnealSchedule::linear();
        let grid = angle_grid(101);
        let scan = landscape(&params, &schedule, 0.0, &grid);
        assert!((scan.argmin.theta_aux - FRAC_PI_2).abs() < 0.05);
        assert!((scan.argmin.theta_backbone - FRAC_PI_2).abs() < 0.05);
    }

    #[test]
    fn argmin_jumps_across_minimum_gap() {
        let params = params_m2();
        let problem = build_pfc(&params).unwrap();
        let schedule = AnnealSchedule::linear();
        let s_min = min_gap(&problem, &schedule).unwrap().s_min;
        let grid = angle_grid(201);

        let before = landscape(&params, &schedule, s_min - 0.02, &grid);
        let after = landscape(&params, &schedule, s_min + 0.02, &grid);
        assert!(
            (before.argmin.theta_backbone.abs() - PI).abs() < 0.3,
            "false minimum expected near theta_b = +-pi, got {}",
            before.argmin.theta_backbone
        );
        assert!(
            after.argmin.theta_backbone.abs() < 0.3,
            "true minimum expected near theta_b = 0, got {}",
            after.argmin.theta_backbone
        );
    }

    #[test]
    fn landscape_bimodal_before_gap() {
        // Between s ~ 0.7 and the gap the potential holds two separated
        // local minima along theta_b.
        let params = params_m2();
        let schedule = AnnealSchedule::linear();
        let grid = angle_grid(201);
        let scan = landscape(&params, &schedule, 0.78, &grid);
        let near_pi = scan
            .local_minima
            .iter()
            .any(|(a, _)| (a.theta_backbone.abs() - PI).abs() < 0.5);
        let near_zero = scan
            .local_minima
            .iter()
            .any(|(a, _)| a.theta_backbone.abs() < 0.5);
        assert!(
            near_pi && near_zero,
            "expected bi-modal landscape, minima: {:?}",
            scan.local_minima
        );
    }

    #[test]
    fn trace_norm_limits() {
        let params = params_m2();
        let problem = build_pfc(&params).unwrap();
        let schedule = AnnealSchedule::linear();

        // At s=1 the ground state is the all-up basis state, reproduced
        // exactly by theta = 0: distance 0. An orthogonal coherent state
        // (all-down) has distance 1.
        let snap = snapshot(&problem, &schedule, 1.0, 1).unwrap();
        let d0 = trace_norm_distance(&snap, &CoherentAngles::new(0.0, 0.0));
        assert!(d0 < 1e-7, "distance {d0}");
        let d1 = trace_norm_distance(&snap, &CoherentAngles::new(PI, PI));
        assert_relative_eq!(d1, 1.0, epsilon = 1e-12);

        // Bounds hold across a scan.
        let snap = snapshot(&problem, &schedule, 0.835, 1).unwrap();
        for &ta in &[-PI, -1.0, 0.0, 1.0, PI] {
            for &tb in &[-PI, -1.0, 0.0, 1.0, PI] {
                let d = trace_norm_distance(&snap, &CoherentAngles::new(ta, tb));
                assert!((0.0..=1.0).contains(&d));
            }
        }
    }

    #[test]
    fn trace_norm_structure_near_gap() {
        // At s=0.835 the distance minimum tracks the false minimum near
        // theta_b = pi, and a trace-norm valley extends along the
        // hyper-plane into the true-minimum basin near theta_b = 0:
        // tunneling places finite amplitude in both wells.
        let params = params_m2();
        let problem = build_pfc(&params).unwrap();
        let schedule = AnnealSchedule::linear();
        let s = 0.835;
        let snap = snapshot(&problem, &schedule, s, 1).unwrap();
        let grid = angle_grid(201);
        let scan = distance_landscape(&snap, &grid);

        // Global distance minimum lands in the false-minimum basin, close
        // to the potential's global minimum.
        let potential_scan = landscape(&params, &schedule, s, &grid);
        let false_min = potential_scan.argmin;
        assert!(
            (false_min.theta_backbone.abs() - PI).abs() < 0.3,
            "potential global minimum not near theta_b = pi"
        );
        assert!(
            (scan.argmin.theta_backbone - false_min.theta_backbone).abs() < 0.6,
            "distance argmin theta_b = {} vs potential minimum {}",
            scan.argmin.theta_backbone,
            false_min.theta_backbone
        );

        // Valley check along the hyper-plane through the two potential
        // minima: near the theta_b = 0 well, points on the plane beat
        // points displaced perpendicular to it.
        let true_min = potential_scan
            .local_minima
            .iter()
            .map(|(a, _)| *a)
            .find(|a| a.theta_backbone.abs() < 0.5)
            .expect("secondary potential minimum near theta_b = 0");
        let dir = (
            false_min.theta_aux - true_min.theta_aux,
            false_min.theta_backbone - true_min.theta_backbone,
        );
        let norm = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        let perp = (-dir.1 / norm, dir.0 / norm);
        for t in [0.0, 0.1, 0.2] {
            let base = (
                true_min.theta_aux + t * dir.0,
                true_min.theta_backbone + t * dir.1,
            );
            let on_plane = trace_norm_distance(&snap, &CoherentAngles::new(base.0, base.1));
            for off in [-0.3, 0.3] {
                let displaced = trace_norm_distance(
                    &snap,
                    &CoherentAngles::new(base.0 + off * perp.0, base.1 + off * perp.1),
                );
                assert!(
                    on_plane < displaced,
                    "no trace-norm valley at t={t}: {on_plane} vs {displaced}"
                );
            }
        }
    }

    #[test]
    fn hyperplane_profiles() {
        let params = params_m2();
        let schedule = AnnealSchedule::linear();

        // Constant segment: constant energy.
        let fixed = CoherentAngles::new(0.3, 0.3);
        let scan = hyperplane_scan(&params, &schedule, 0.5, (fixed, fixed), 11);
        let v0 = scan[0].1;
        assert!(scan.iter().all(|&(_, v)| (v - v0).abs() < 1e-12));

        // Two wells separated by a barrier at s=0.80.
        let scan = hyperplane_scan(
            &params,
            &schedule,
            0.80,
            (
                CoherentAngles::new(FRAC_PI_2 * 0.5, 0.0),
                CoherentAngles::new(FRAC_PI_2 * 0.5, PI),
            ),
            201,
        );
        let values: Vec<f64> = scan.iter().map(|&(_, v)| v).collect();
        let interior_max = values[20..180].iter().cloned().fold(f64::MIN, f64::max);
        let left_min = values[..100].iter().cloned().fold(f64::MAX, f64::min);
        let right_min = values[100..].iter().cloned().fold(f64::MAX, f64::min);
        assert!(
            interior_max > left_min && interior_max > right_min,
            "no barrier: max {interior_max}, wells {left_min}/{right_min}"
        );

        // Single well with minimum near theta_b = 0 at s=0.90.
        let grid = angle_grid(201);
        let scan = landscape(&params, &schedule, 0.90, &grid);
        assert!(scan.argmin.theta_backbone.abs() < 0.3);
    }

    #[test]
    fn refine_narrows_grid_argmin() {
        let params = params_m2();
        let schedule = AnnealSchedule::linear();
        let grid = angle_grid(101);
        let scan = landscape(&params, &schedule, 0.9, &grid);
        let refined = refine_minimum(
            |a| potential(&params, &schedule, 0.9, a),
            scan.argmin,
            0.1,
            20,
        );
        let v_refined = potential(&params, &schedule, 0.9, &refined);
        assert!(v_refined <= scan.minimum + 1e-12);
    }
}
