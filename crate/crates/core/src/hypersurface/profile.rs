//! Rotationally symmetric solitons in Euclidean `ℝ^{n+1}`.
//!
//! The hypersurface is swept by a profile `(r(s), z(s))` in the half plane
//! spanned by `e_1` and the axis `e_{n+1}`, with angle `θ`:
//! `r' = cos θ`, `z' = sin θ` and
//! `θ' = −n·g(X, ν) − (n−1)·sin θ / r`, `ν = (−sin θ, cos θ)`,
//! which is `nH = −n·g(X, ν)` with the rotational principal curvature
//! `sin θ / r` counted `n − 1` times.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use super::{sphere_point, ImmersedPatch};
use crate::chart::{MetricChart, Point};
use crate::error::{GeomError, Result};
use crate::fields::VectorFieldSpec;
use crate::ode::{self, OdeOptions, Termination};

/// Integration stops this close to the axis.
const AXIS: f64 = 1e-3;
/// Arclength covered by the series expansion when starting on the axis.
const SERIES: f64 = 1e-4;
/// Knot spacing of the fixed-step table behind the reconstructed patch.
const KNOT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileStart {
    pub r: f64,
    pub z: f64,
    pub theta: f64,
}

impl ProfileStart {
    /// On the axis at height `z`, leaving it perpendicularly.
    pub fn on_axis(z: f64) -> Self {
        ProfileStart { r: 0.0, z, theta: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileCurve {
    pub n: usize,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub theta: Vec<f64>,
    pub termination: Termination,
    /// The profile closed up smoothly on the axis.
    pub reached_axis: bool,
}

#[derive(Clone)]
struct Reduced {
    n: usize,
    field: VectorFieldSpec,
}

impl Reduced {
    /// `(X·e_r, X·e_z)` at the point `r e_1 + z e_{n+1}`.
    fn components(&self, r: f64, z: f64) -> Result<(f64, f64)> {
        let mut q = Point::zeros(self.n + 1);
        q[0] = r;
        q[self.n] = z;
        let x = self.field.eval(&q)?;
        let off = (1..self.n).map(|k| x[k].abs()).fold(0.0, f64::max);
        if off > 1e-12 * (1.0 + x.norm()) {
            return Err(GeomError::Config(format!(
                "field {} is not symmetric about the x{} axis",
                self.field.name(),
                self.n + 1
            )));
        }
        Ok((x[0], x[self.n]))
    }

    fn rhs(&self, y: &[f64]) -> Result<[f64; 3]> {
        let (r, z, th) = (y[0], y[1], y[2]);
        let (xr, xz) = self.components(r, z)?;
        let xnu = -th.sin() * xr + th.cos() * xz;
        let n = self.n as f64;
        Ok([th.cos(), th.sin(), -n * xnu - (n - 1.0) * th.sin() / r])
    }
}

/// A profile may only meet the axis perpendicularly.
fn check_axis_arrival(s: f64, theta: f64) -> Result<()> {
    if theta.sin().abs() >= 0.1 {
        return Err(GeomError::CoordinateSingularity { s, slope: theta.tan() });
    }
    Ok(())
}

fn rk4(sys: &Reduced, y: [f64; 3], h: f64) -> Result<[f64; 3]> {
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = sys.rhs(&y)?;
    let k2 = sys.rhs(&add(y, k1, 0.5 * h))?;
    let k3 = sys.rhs(&add(y, k2, 0.5 * h))?;
    let k4 = sys.rhs(&add(y, k3, h))?;
    Ok([0, 1, 2].map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])))
}

/// Integrate the profile ODE for arclength `length` and build the swept
/// patch over the part of the profile away from the axis.
pub fn rotational_profile(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    start: ProfileStart,
    length: f64,
    tol: f64,
) -> Result<(ProfileCurve, ImmersedPatch)> {
    let d = metric.dim();
    if !(3..=4).contains(&d) {
        return Err(GeomError::UnsupportedDimension {
            required: "3 or 4".into(),
            got: d,
        });
    }
    if field.dim() != d {
        return Err(GeomError::DimensionMismatch {
            expected: d,
            got: field.dim(),
        });
    }
    let probe = metric.domain().center();
    let eye = nalgebra::DMatrix::<f64>::identity(d, d);
    if (metric.metric_at(&probe)? - eye).amax() > 1e-12 || metric.christoffel(&probe)?.max_abs() > 1e-9 {
        return Err(GeomError::Config("rotational profiles need the Euclidean metric".into()));
    }
    if !(length > 0.0) {
        return Err(GeomError::Config("profile length must be positive".into()));
    }
    let n = d - 1;
    let sys = Reduced {
        n,
        field: field.clone(),
    };

    // series start on the axis: θ'(0) = −g(X, ν)
    let (s0, y0) = if start.r == 0.0 {
        if start.theta.cos() < 1.0 - 1e-12 {
            return Err(GeomError::Config("a profile starting on the axis must leave it along +e_r".into()));
        }
        let (xr, xz) = sys.components(0.0, start.z)?;
        let k0 = -(-start.theta.sin() * xr + start.theta.cos() * xz);
        (SERIES, [SERIES, start.z + 0.5 * k0 * SERIES * SERIES, k0 * SERIES])
    } else if start.r > 0.0 {
        (0.0, [start.r, start.z, start.theta])
    } else {
        return Err(GeomError::Config(format!("profile radius must be non-negative, got {}", start.r)));
    };

    let guarded = |_: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        if y[0] < AXIS && y[2].cos() < 0.0 {
            return Err(GeomError::OutOfDomain {
                point: y.as_slice().to_vec(),
                margin: AXIS,
            });
        }
        Ok(DVector::from_row_slice(&sys.rhs(y.as_slice())?))
    };
    let opts = OdeOptions {
        rtol: tol,
        atol: tol * 1e-3,
        max_step: 1e-2,
        ..Default::default()
    };
    let traj = ode::integrate(guarded, s0, DVector::from_row_slice(&y0), s0 + length, &opts, |_| {})?;
    let (s_end, y_end) = traj.last();
    let reached_axis = traj.termination == Termination::Boundary;
    if reached_axis {
        check_axis_arrival(s_end, y_end[2])?;
    }
    let curve = ProfileCurve {
        n,
        s: traj.ts.clone(),
        r: traj.ys.iter().map(|y| y[0]).collect(),
        z: traj.ys.iter().map(|y| y[1]).collect(),
        theta: traj.ys.iter().map(|y| y[2]).collect(),
        termination: traj.termination,
        reached_axis,
    };

    // fixed-step table; between knots one partial RK4 step keeps f smooth
    let steps = ((s_end - s0) / KNOT).ceil().max(1.0) as usize;
    let h0 = (s_end - s0) / steps as f64;
    let mut knots = Vec::with_capacity(steps + 1);
    knots.push(y0);
    for k in 0..steps {
        knots.push(rk4(&sys, knots[k], h0)?);
    }
    let knots = Arc::new(knots);
    let margin = 0.05 * (s_end - s0);
    let s_lo = if start.r == 0.0 { s0 + margin } else { s0 };
    let s_hi = if reached_axis { s_end - margin } else { s_end };

    let tau = std::f64::consts::PI * 2.0;
    let mut bounds = vec![(s_lo, s_hi)];
    for _ in 0..n - 2 {
        bounds.push((0.3, std::f64::consts::PI - 0.3));
    }
    bounds.push((0.1, tau - 0.1));

    let eval_profile = {
        let knots = knots.clone();
        let sys = sys.clone();
        move |s: f64| -> Result<[f64; 3]> {
            let k = (((s - s0) / h0).floor().max(0.0) as usize).min(steps - 1);
            rk4(&sys, knots[k], s - (s0 + k as f64 * h0))
        }
    };
    let sweep = move |y: [f64; 3], angles: &[f64]| -> (Point, Point) {
        let w = sphere_point(angles);
        let mut p = Point::zeros(n + 1);
        let mut nu = Point::zeros(n + 1);
        for i in 0..n {
            p[i] = y[0] * w[i];
            nu[i] = -y[2].sin() * w[i];
        }
        p[n] = y[1];
        nu[n] = y[2].cos();
        (p, nu)
    };
    let center: Vec<f64> = bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect();
    let (_, reference) = sweep(eval_profile(center[0])?, &center[1..]);
    let patch = ImmersedPatch::new(
        format!("rotational({}, n={n})", field.name()),
        d,
        bounds,
        reference,
        move |t| Ok(sweep(eval_profile(t[0])?, &t[1..]).0),
    )?;
    Ok((curve, patch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypersurface::soliton_residual;

    #[test]
    fn unit_sphere_profile() {
        let m = MetricChart::euclidean(3);
        let x = VectorFieldSpec::radial(3, 1.0);
        let start = ProfileStart {
            r: 1.0,
            z: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
        };
        let (c, patch) = rotational_profile(&m, &x, start, 2.0, 1e-10).unwrap();
        for (r, z) in c.r.iter().zip(&c.z) {
            assert!((r.hypot(*z) - 1.0).abs() < 1e-8);
        }
        assert!(c.reached_axis);
        let res = soliton_residual(&m, &x, &patch, &patch.grid(5, 0.05)).unwrap();
        assert!(res.sup <= 1e-6, "{res:?}");
    }

    #[test]
    fn sphere_from_the_axis_in_r4() {
        let m = MetricChart::euclidean(4);
        let x = VectorFieldSpec::radial(4, 1.0);
        let (c, patch) = rotational_profile(&m, &x, ProfileStart::on_axis(-1.0), 4.0, 1e-10).unwrap();
        assert!(c.reached_axis);
        assert!((c.s.last().unwrap() - std::f64::consts::PI).abs() < 1e-2);
        let res = soliton_residual(&m, &x, &patch, &patch.grid(3, 0.05)).unwrap();
        assert!(res.sup <= 1e-6, "{res:?}");
    }

    #[test]
    fn catenoid() {
        let a = 0.7f64;
        let m = MetricChart::euclidean(3);
        let x = VectorFieldSpec::zero(3);
        let start = ProfileStart {
            r: a,
            z: 0.0,
            theta: std::f64::consts::FRAC_PI_2,
        };
        let (c, patch) = rotational_profile(&m, &x, start, 1.5, 1e-10).unwrap();
        for (r, z) in c.r.iter().zip(&c.z) {
            assert!((r - a * (z / a).cosh()).abs() < 1e-7);
        }
        let res = soliton_residual(&m, &x, &patch, &patch.grid(5, 0.05)).unwrap();
        assert!(res.sup <= 1e-6, "{res:?}");
    }

    #[test]
    fn bowl_translator() {
        let m = MetricChart::euclidean(3);
        let x = VectorFieldSpec::translation(Point::from_vec(vec![0.0, 0.0, -1.0]));
        let (c, patch) = rotational_profile(&m, &x, ProfileStart::on_axis(0.0), 3.0, 1e-10).unwrap();
        assert!(!c.reached_axis);
        // convex and rising
        assert!(c.z.windows(2).all(|w| w[1] >= w[0]));
        let res = soliton_residual(&m, &x, &patch, &patch.grid(5, 0.05)).unwrap();
        assert!(res.sup <= 1e-5, "{res:?}");
    }

    #[test]
    fn axis_arrival() {
        // a horizontal line to the axis sweeps a disc
        let m = MetricChart::euclidean(3);
        let start = ProfileStart {
            r: 1.0,
            z: 0.0,
            theta: std::f64::consts::PI,
        };
        let (c, _) = rotational_profile(&m, &VectorFieldSpec::zero(3), start, 2.0, 1e-10).unwrap();
        assert!(c.reached_axis);
        assert!(check_axis_arrival(1.0, std::f64::consts::PI + 0.05).is_ok());
        assert!(matches!(
            check_axis_arrival(1.0, 2.5),
            Err(GeomError::CoordinateSingularity { .. })
        ));
    }

    #[test]
    fn non_symmetric_field_rejected() {
        let m = MetricChart::euclidean(3);
        let x = VectorFieldSpec::translation(Point::from_vec(vec![0.0, 1.0, 0.0]));
        assert!(matches!(
            rotational_profile(&m, &x, ProfileStart::on_axis(0.0), 1.0, 1e-10),
            Err(GeomError::Config(_))
        ));
    }
}
