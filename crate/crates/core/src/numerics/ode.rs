//! Adaptive Dormand–Prince 5(4) integration of scalar initial-value problems.

use crate::error::{Error, Result};
use crate::numerics::interp::MonotoneTable;
use crate::real::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct StepControl<T> {
    /// Bound on the embedded per-step error estimate.
    pub abs_tol: T,
    pub initial_step: T,
    pub max_step: T,
    /// Steps shorter than this abort with [`Error::Stiffness`].
    pub min_step: T,
    /// Largest tolerated decrease of the solution between accepted steps.
    pub monotone_slack: T,
    /// Points the integrator must land on exactly (sorted, inside the interval).
    pub stops: Vec<T>,
    pub max_steps: usize,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        Self {
            abs_tol: T::tol(1e-10),
            initial_step: T::c(1e-4),
            max_step: T::c(1.0 / 64.0),
            min_step: T::c(1e-12),
            monotone_slack: T::tol(1e-10),
            stops: Vec::new(),
            max_steps: 1_000_000,
        }
    }
}

/// Accepted steps of an integration: abscissae, values and right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct IvpSolution<T> {
    pub vs: Vec<T>,
    pub ks: Vec<T>,
    pub slopes: Vec<T>,
}

impl<T: Real> IvpSolution<T> {
    pub fn into_table(self) -> Result<MonotoneTable<T>> {
        MonotoneTable::with_slopes(self.vs, self.ks, self.slopes)
    }
}

// Dormand–Prince tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `k' = rhs(v, k)` from `(v0, k0)` to `v1`, keeping every accepted step.
///
/// A right-hand side that is not finite at some stage rejects the step and
/// halves it. The solution must be nondecreasing up to `monotone_slack`.
pub fn integrate_ivp<T: Real, F: Fn(T, T) -> T>(
    rhs: F,
    v0: T,
    k0: T,
    v1: T,
    ctrl: &StepControl<T>,
) -> Result<IvpSolution<T>> {
    if !(v0 < v1) {
        return Err(Error::Domain(format!(
            "empty integration interval [{v0}, {v1}]"
        )));
    }
    let f0 = rhs(v0, k0);
    if !f0.is_finite() || !k0.is_finite() {
        return Err(Error::Domain(format!(
            "right-hand side not finite at start v = {v0}"
        )));
    }
    let mut stops: Vec<T> = ctrl
        .stops
        .iter()
        .copied()
        .filter(|&s| s > v0 && s < v1)
        .collect();
    stops.push(v1);

    let mut sol = IvpSolution {
        vs: vec![v0],
        ks: vec![k0],
        slopes: vec![f0],
    };
    let (mut v, mut k, mut fk) = (v0, k0, f0);
    let mut h = ctrl.initial_step.min(ctrl.max_step);
    let mut next_stop = 0;
    let mut steps = 0;

    while next_stop < stops.len() {
        steps += 1;
        if steps > ctrl.max_steps {
            return Err(Error::Stiffness { at: v.as_f64() });
        }
        let target = stops[next_stop];
        let lands = v + h >= target;
        let step = if lands { target - v } else { h };
        if step < ctrl.min_step && !lands {
            return Err(Error::Stiffness { at: v.as_f64() });
        }

        let mut stages = [T::zero(); 7];
        stages[0] = fk;
        let mut finite = true;
        for s in 1..7 {
            let mut acc = k;
            for (r, &a) in A[s].iter().enumerate().take(s) {
                acc = acc + step * T::c(a) * stages[r];
            }
            stages[s] = rhs(v + step * T::c(C[s]), acc);
            if !stages[s].is_finite() {
                finite = false;
                break;
            }
        }
        if !finite {
            h = step * T::c(0.5);
            if h < ctrl.min_step {
                return Err(Error::Stiffness { at: v.as_f64() });
            }
            continue;
        }
        let mut k5 = k;
        let mut k4 = k;
        for s in 0..7 {
            k5 = k5 + step * T::c(B5[s]) * stages[s];
            k4 = k4 + step * T::c(B4[s]) * stages[s];
        }
        let err = (k5 - k4).abs();
        let tol = ctrl.abs_tol;
        if err <= tol {
            if k5 < k - ctrl.monotone_slack {
                return Err(Error::NonMonotone {
                    at: (v + step).as_f64(),
                    drop: (k - k5).as_f64(),
                });
            }
            v = if lands { target } else { v + step };
            k = k5.max(k);
            fk = stages[6];
            sol.vs.push(v);
            sol.ks.push(k);
            sol.slopes.push(fk);
            if lands {
                next_stop += 1;
            }
        }
        let factor = if err == T::zero() {
            T::c(5.0)
        } else {
            (T::c(0.9) * (tol / err).powf(T::c(0.2)))
                .max(T::c(0.2))
                .min(T::c(5.0))
        };
        // After a landing step keep the pre-landing step length as the proposal.
        let base = if lands && err <= tol {
            h.max(step)
        } else {
            step
        };
        h = (base * factor).min(ctrl.max_step);
        if h < ctrl.min_step {
            return Err(Error::Stiffness { at: v.as_f64() });
        }
    }
    Ok(sol)
}

/// Integrates `k' = rhs(v, k)` and returns the solution as a monotone table.
pub fn solve_ivp<T: Real, F: Fn(T, T) -> T>(
    rhs: F,
    v0: T,
    k0: T,
    v1: T,
    ctrl: &StepControl<T>,
) -> Result<MonotoneTable<T>> {
    integrate_ivp(rhs, v0, k0, v1, ctrl)?.into_table()
}
