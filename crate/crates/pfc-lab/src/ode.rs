//! Adaptive embedded Runge-Kutta integration (Dormand-Prince 5(4)) for
//! complex matrix-valued states.
//!
//! The stepper is FSAL with a standard error-per-step controller; steps are
//! clipped onto requested output times so observers see the state exactly
//! there. Reference: Hairer, Norsett, Wanner, "Solving Ordinary Differential
//! Equations I", Sec. II.4-II.5.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// Fifth-order weights (also the last stage row: first-same-as-last).
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Hard cap on a single step; defaults to the full interval.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: f64::INFINITY,
            max_steps: 200_000_000,
        }
    }
}

impl Dopri5 {
    /// Integrate `dy/dt = f(t, y)` from `t0` to `t1` (`t1 > t0`), invoking
    /// `observe(index, t, y)` at each requested output time. Output times
    /// must be ascending and lie within `[t0, t1]`. Returns the final state.
    pub fn integrate<F, O>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: DMatrix<Complex64>,
        output_times: &[f64],
        mut observe: O,
    ) -> Result<DMatrix<Complex64>>
    where
        F: FnMut(f64, &DMatrix<Complex64>, &mut DMatrix<Complex64>),
        O: FnMut(usize, f64, &DMatrix<Complex64>),
    {
        let span = t1 - t0;
        if !(span > 0.0) {
            return Err(Error::InvalidParams(format!(
                "integration span must be positive, got [{t0}, {t1}]"
            )));
        }
        let (rows, cols) = y0.shape();
        let mut y = y0;
        let mut t = t0;

        let mut k: Vec<DMatrix<Complex64>> =
            (0..7).map(|_| DMatrix::zeros(rows, cols)).collect();
        let mut y_stage = DMatrix::zeros(rows, cols);
        let mut y_new = DMatrix::zeros(rows, cols);

        let mut next_output = 0;
        while next_output < output_times.len() && output_times[next_output] <= t0 {
            observe(next_output, t0, &y);
            next_output += 1;
        }

        f(t, &y, &mut k[0]);
        let mut h = (span * 1e-6).min(self.max_step);
        let h_floor = span * 1e-14;

        fn stage(
            y_stage: &mut DMatrix<Complex64>,
            y: &DMatrix<Complex64>,
            k: &[DMatrix<Complex64>],
            coeffs: &[f64],
            h: f64,
        ) {
            let ys = y_stage.as_mut_slice();
            ys.copy_from_slice(y.as_slice());
            for (i, &c) in coeffs.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let ki = k[i].as_slice();
                let w = h * c;
                for (slot, &kv) in ys.iter_mut().zip(ki) {
                    *slot += w * kv;
                }
            }
        }

        let mut steps = 0usize;
        while t < t1 {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::StepUnderflow { s: t });
            }
            // Clip onto the next output time or the interval end.
            let mut target = t1;
            if next_output < output_times.len() {
                target = target.min(output_times[next_output]);
            }
            let h_attempt = h.min(self.max_step).min(target - t).max(h_floor);

            stage(&mut y_stage, &y, &k, &A2, h_attempt);
            f(t + h_attempt / 5.0, &y_stage, &mut k[1]);
            stage(&mut y_stage, &y, &k, &A3, h_attempt);
            f(t + 0.3 * h_attempt, &y_stage, &mut k[2]);
            stage(&mut y_stage, &y, &k, &A4, h_attempt);
            f(t + 0.8 * h_attempt, &y_stage, &mut k[3]);
            stage(&mut y_stage, &y, &k, &A5, h_attempt);
            f(t + 8.0 / 9.0 * h_attempt, &y_stage, &mut k[4]);
            stage(&mut y_stage, &y, &k, &A6, h_attempt);
            f(t + h_attempt, &y_stage, &mut k[5]);
            // Fifth-order solution, then the FSAL stage at the new point.
            stage(&mut y_new, &y, &k, &B, h_attempt);
            f(t + h_attempt, &y_new, &mut k[6]);

            // Weighted RMS of the embedded error estimate.
            let mut err_sq = 0.0;
            {
                let yo = y.as_slice();
                let yn = y_new.as_slice();
                let ks: Vec<&[Complex64]> = k.iter().map(|m| m.as_slice()).collect();
                for idx in 0..yo.len() {
                    let mut e = Complex64::new(0.0, 0.0);
                    for (stage_idx, &w) in E.iter().enumerate() {
                        if w != 0.0 {
                            e += h_attempt * w * ks[stage_idx][idx];
                        }
                    }
                    let scale = self.atol + self.rtol * yo[idx].norm().max(yn[idx].norm());
                    err_sq += (e.norm() / scale).powi(2);
                }
                err_sq /= yo.len() as f64;
            }
            let err = err_sq.sqrt();

            if err.is_finite() && err <= 1.0 {
                t += h_attempt;
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                while next_output < output_times.len()
                    && t >= output_times[next_output] - 1e-12 * span
                {
                    observe(next_output, t, &y);
                    next_output += 1;
                }
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                h = h_attempt * factor;
            } else {
                let factor = if err.is_finite() {
                    (0.9 * err.powf(-0.2)).clamp(0.1, 1.0)
                } else {
                    0.1
                };
                h = h_attempt * factor;
                if h < h_floor {
                    return Err(Error::StepUnderflow { s: t });
                }
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar(value: Complex64) -> DMatrix<Complex64> {
        DMatrix::from_element(1, 1, value)
    }

    #[test]
    fn exponential_decay() {
        let solver = Dopri5::default();
        let y = solver
            .integrate(
                |_, y, out| out.copy_from(&(-y)),
                0.0,
                1.0,
                scalar(Complex64::new(1.0, 0.0)),
                &[],
                |_, _, _| {},
            )
            .unwrap();
        assert_relative_eq!(y[(0, 0)].re, (-1.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn phase_rotation_preserves_norm() {
        let solver = Dopri5::default();
        let omega = 25.0;
        let y = solver
            .integrate(
                |_, y, out| out.copy_from(&(y * Complex64::new(0.0, -omega))),
                0.0,
                10.0,
                scalar(Complex64::new(1.0, 0.0)),
                &[],
                |_, _, _| {},
            )
            .unwrap();
        let value = y[(0, 0)];
        assert_relative_eq!(value.norm(), 1.0, max_relative = 2e-6);
        let expected = Complex64::from_polar(1.0, -omega * 10.0);
        assert!((value - expected).norm() < 1e-5);
    }

    #[test]
    fn observer_hits_requested_times() {
        let solver = Dopri5::default();
        let outputs = [0.0, 0.25, 0.5, 0.75, 1.0];
        let mut seen = Vec::new();
        solver
            .integrate(
                |_, y, out| out.copy_from(&(-y)),
                0.0,
                1.0,
                scalar(Complex64::new(1.0, 0.0)),
                &outputs,
                |i, t, y| seen.push((i, t, y[(0, 0)].re)),
            )
            .unwrap();
        assert_eq!(seen.len(), outputs.len());
        for (idx, (i, t, value)) in seen.iter().enumerate() {
            assert_eq!(*i, idx);
            assert_relative_eq!(*t, outputs[idx], epsilon = 1e-9);
            assert_relative_eq!(*value, (-outputs[idx]).exp(), max_relative = 1e-8);
        }
    }

    #[test]
    fn bad_rhs_reports_underflow() {
        let solver = Dopri5::default();
        let result = solver.integrate(
            |_, _, out| out.fill(Complex64::new(f64::NAN, 0.0)),
            0.0,
            1.0,
            scalar(Complex64::new(1.0, 0.0)),
            &[],
            |_, _, _| {},
        );
        assert!(matches!(result, Err(Error::StepUnderflow { .. })));
    }
}
