//! Dormand–Prince 5(4) integrator with embedded error control.
//!
//! The right-hand side is fallible. An [`GeomError::OutOfDomain`] raised while
//! evaluating a stage is treated as "step too long": the step is retried with
//! a shorter length until it lands inside, and once the step length collapses
//! the integration stops with [`Termination::Boundary`]. Any other error is
//! returned as is.

use nalgebra::DVector;

use crate::error::{GeomError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |step|; `f64::INFINITY` for none.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        OdeOptions {
            rtol: tol,
            atol: tol * 1e-3,
            ..Default::default()
        }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Reached the requested end of the interval.
    Completed,
    /// Stopped early because the solution reached the edge of the domain.
    Boundary,
}

/// Every accepted step, including the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub ts: Vec<f64>,
    pub ys: Vec<DVector<f64>>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn last(&self) -> (f64, &DVector<f64>) {
        (*self.ts.last().expect("nonempty"), self.ys.last().expect("nonempty"))
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
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B_LOW: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One Dormand–Prince step: returns (5th-order solution, error estimate).
fn dp_step<F>(f: &F, t: f64, y: &DVector<f64>, k1: &DVector<f64>, h: f64) -> Result<(DVector<f64>, DVector<f64>)>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
    k.push(k1.clone());
    for s in 1..7 {
        let mut ys = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if A[s][j] != 0.0 {
                ys.axpy(h * A[s][j], kj, 1.0);
            }
        }
        k.push(f(t + C[s] * h, &ys)?);
    }
    let mut y_new = y.clone();
    let mut err = DVector::zeros(y.len());
    for s in 0..7 {
        if B[s] != 0.0 {
            y_new.axpy(h * B[s], &k[s], 1.0);
        }
        let e = B[s] - B_LOW[s];
        if e != 0.0 {
            err.axpy(h * e, &k[s], 1.0);
        }
    }
    Ok((y_new, err))
}

fn error_norm(err: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>, opts: &OdeOptions) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// `project` is applied to every accepted state before it is stored; it is
/// where invariants such as unit tangents get re-imposed.
pub fn integrate<F, P>(
    f: F,
    t0: f64,
    y0: DVector<f64>,
    t_end: f64,
    opts: &OdeOptions,
    mut project: P,
) -> Result<Trajectory>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
    P: FnMut(&mut DVector<f64>),
{
    let span = t_end - t0;
    let mut ts = vec![t0];
    let mut ys = vec![y0.clone()];
    if span == 0.0 {
        return Ok(Trajectory {
            ts,
            ys,
            termination: Termination::Completed,
        });
    }
    let dir = span.signum();
    let scale = t0.abs().max(t_end.abs()).max(1.0);
    let h_floor = 1e-13 * scale;
    let boundary_floor = 1e-10 * scale;

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;

    // initial step guess
    let d0 = y.norm();
    let d1 = k1.norm();
    let mut h = if d0 > 1e-5 && d1 > 1e-5 { 0.01 * d0 / d1 } else { 1e-4 * scale };
    h = h.min(opts.max_step).min(span.abs()).max(h_floor);

    let mut hit_domain = false;
    for _ in 0..opts.max_steps {
        let remaining = (t_end - t) * dir;
        if remaining <= h_floor {
            return Ok(Trajectory {
                ts,
                ys,
                termination: Termination::Completed,
            });
        }
        let h_try = h.min(remaining).min(opts.max_step);
        match dp_step(&f, t, &y, &k1, dir * h_try) {
            Ok((mut y_new, err)) => {
                let en = error_norm(&err, &y, &y_new, opts);
                if en <= 1.0 {
                    project(&mut y_new);
                    match f(t + dir * h_try, &y_new) {
                        Ok(k_new) => {
                            t = if h_try == remaining { t_end } else { t + dir * h_try };
                            y = y_new;
                            k1 = k_new;
                            ts.push(t);
                            ys.push(y.clone());
                            let grow = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                            h = if hit_domain { h_try } else { h_try * grow };
                            hit_domain = false;
                            continue;
                        }
                        Err(e) if e.is_domain() => {
                            hit_domain = true;
                            h = h_try * 0.5;
                        }
                        Err(e) => return Err(e),
                    }
                } else {
                    h = h_try * (0.9 * en.powf(-0.2)).clamp(0.2, 1.0);
                }
            }
            Err(e) if e.is_domain() => {
                hit_domain = true;
                h = h_try * 0.5;
            }
            Err(e) => return Err(e),
        }
        if hit_domain && h < boundary_floor {
            return Ok(Trajectory {
                ts,
                ys,
                termination: Termination::Boundary,
            });
        }
        if h < h_floor {
            return Err(GeomError::Stiffness {
                t,
                state: y.as_slice().to_vec(),
            });
        }
    }
    Err(GeomError::Stiffness {
        t,
        state: y.as_slice().to_vec(),
    })
}
