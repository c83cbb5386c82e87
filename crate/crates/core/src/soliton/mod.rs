//! Pseudosoliton curves on oriented surfaces.
//!
//! A curve solves `H + X^⊥ = 0` when its geodesic curvature satisfies
//! `κ_g = σ·g(X, ν)`, with `ν` the unit normal obtained by turning the unit
//! tangent through +90° in the `g`-orthonormal sense and `H = κ_g ν` the
//! curvature vector. The single chart-level sign is [`SIGMA`] `= −1`: with it
//! the counterclockwise unit circle solves the equation for `X(p) = p`.
//! Every other module uses the same constant.

mod intersect;

pub use intersect::{count_intersections, hausdorff_distance, Crossing, IntersectionReport};

use nalgebra::DVector;
use serde::Serialize;

use crate::chart::{MetricChart, Point};
use crate::error::{GeomError, Result};
use crate::fields::{self, VectorFieldSpec};
use crate::ode::{self, OdeOptions, Termination};
use crate::stencil;

/// Global sign relating curvature and the normal component of `X`:
/// solitons satisfy `H = σ·g(X, ν)`.
pub const SIGMA: f64 = -1.0;

/// Position, unit tangent and arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveState {
    pub x: Point,
    pub tangent: Point,
    pub s: f64,
}

impl CurveState {
    pub fn new(x: Point, tangent: Point) -> Self {
        CurveState { x, tangent, s: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub x: Vec<f64>,
    pub tangent: Vec<f64>,
    pub normal: Vec<f64>,
    /// Geodesic curvature measured from the sampled tangents.
    pub kappa: f64,
    /// `|κ_g − σ·g(X, ν)|`.
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolitonCurve {
    pub samples: Vec<CurveSample>,
    pub field_name: String,
    pub metric_name: String,
    pub termination: Termination,
    pub rtol: f64,
}

impl SolitonCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn params(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.s).collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.samples.iter().map(|s| Point::from_column_slice(&s.x)).collect()
    }

    pub fn length(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.s - a.s,
            _ => 0.0,
        }
    }

    pub fn is_partial(&self) -> bool {
        self.termination == Termination::Boundary
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.residual))
    }

    pub fn start_state(&self) -> CurveState {
        let a = &self.samples[0];
        CurveState {
            x: Point::from_column_slice(&a.x),
            tangent: Point::from_column_slice(&a.tangent),
            s: a.s,
        }
    }

    pub fn end_state(&self) -> CurveState {
        let a = self.samples.last().expect("nonempty curve");
        CurveState {
            x: Point::from_column_slice(&a.x),
            tangent: Point::from_column_slice(&a.tangent),
            s: a.s,
        }
    }

    /// Uniform resampling by cubic Hermite interpolation, using the stored
    /// unit tangents as derivatives. Curvature data are re-measured.
    pub fn resample(&self, metric: &MetricChart, field: &VectorFieldSpec, spacing: f64) -> Result<SolitonCurve> {
        if self.len() < 2 || !(spacing > 0.0) {
            return Err(GeomError::InsufficientData("need two samples and a positive spacing".into()));
        }
        let s0 = self.samples[0].s;
        let n = (self.length() / spacing).ceil() as usize;
        let mut seg = 0;
        let mut s_out = Vec::with_capacity(n + 1);
        let mut xs = Vec::with_capacity(n + 1);
        let mut ts = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let s = (s0 + k as f64 * spacing).min(self.samples.last().unwrap().s);
            while seg + 2 < self.len() && self.samples[seg + 1].s < s {
                seg += 1;
            }
            let (a, b) = (&self.samples[seg], &self.samples[seg + 1]);
            let h = b.s - a.s;
            let u = (s - a.s) / h;
            let (xa, xb) = (Point::from_column_slice(&a.x), Point::from_column_slice(&b.x));
            let (ta, tb) = (Point::from_column_slice(&a.tangent), Point::from_column_slice(&b.tangent));
            let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
            let h10 = u.powi(3) - 2.0 * u * u + u;
            let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
            let h11 = u.powi(3) - u * u;
            let x = &xa * h00 + &ta * (h10 * h) + &xb * h01 + &tb * (h11 * h);
            let d00 = (6.0 * u * u - 6.0 * u) / h;
            let d10 = 3.0 * u * u - 4.0 * u + 1.0;
            let d01 = (-6.0 * u * u + 6.0 * u) / h;
            let d11 = 3.0 * u * u - 2.0 * u;
            let mut t = &xa * d00 + &ta * d10 + &xb * d01 + &tb * d11;
            t /= metric.norm(&x, &t)?;
            s_out.push(s);
            xs.push(x);
            ts.push(t);
        }
        let samples = measure_samples(metric, field, &s_out, &xs, &ts)?;
        Ok(SolitonCurve {
            samples,
            ..self.clone()
        })
    }
}

fn require_surface(metric: &MetricChart, field: &VectorFieldSpec) -> Result<()> {
    if metric.dim() != 2 {
        return Err(GeomError::UnsupportedDimension {
            required: "2".into(),
            got: metric.dim(),
        });
    }
    if field.dim() != 2 {
        return Err(GeomError::DimensionMismatch {
            expected: 2,
            got: field.dim(),
        });
    }
    Ok(())
}

/// Unit normal `ν` with `(T, ν)` positively oriented and `g`-orthonormal.
pub fn unit_normal(metric: &MetricChart, x: &Point, tangent: &Point) -> Result<Point> {
    if metric.dim() != 2 {
        return Err(GeomError::UnsupportedDimension {
            required: "2".into(),
            got: metric.dim(),
        });
    }
    let g = metric.metric_at(x)?;
    let vol = g.determinant().sqrt();
    let t_norm = tangent.dot(&(&g * tangent)).sqrt();
    let rotated = Point::from_vec(vec![-tangent[1], tangent[0]]) * (vol / t_norm);
    let ginv = metric.inverse_at(x)?;
    Ok(ginv * rotated)
}

/// Derivative of `(x, T)` along arclength.
pub fn soliton_rhs(metric: &MetricChart, field: &VectorFieldSpec, state: &CurveState) -> Result<(Point, Point)> {
    let gamma = metric.christoffel(&state.x)?;
    let nu = unit_normal(metric, &state.x, &state.tangent)?;
    let kappa = SIGMA * metric.inner(&state.x, &field.eval(&state.x)?, &nu)?;
    let dt = -gamma.contract(&state.tangent, &state.tangent) + nu * kappa;
    Ok((state.tangent.clone(), dt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Longest stored step; keeps the curve dense enough for differencing.
    pub max_step: f64,
}

impl Default for SolitonOptions {
    fn default() -> Self {
        SolitonOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: 1e-2,
        }
    }
}

impl SolitonOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            ..Default::default()
        }
    }
}

/// Integrate the soliton equation for arclength `length` from `initial`.
///
/// The tangent is renormalised after every accepted step. Reaching the edge
/// of the chart ends the curve early and marks it partial.
pub fn integrate_soliton(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    initial: &CurveState,
    length: f64,
    opts: &SolitonOptions,
) -> Result<SolitonCurve> {
    require_surface(metric, field)?;
    if !(length >= 0.0) {
        return Err(GeomError::Config(format!("curve length must be non-negative, got {length}")));
    }
    let (ss, xs, ts, termination) = raw_trace(metric, field, initial, length, opts)?;
    let samples = measure_samples(metric, field, &ss, &xs, &ts)?;
    Ok(SolitonCurve {
        samples,
        field_name: field.name().to_string(),
        metric_name: metric.name().to_string(),
        termination,
        rtol: opts.rtol,
    })
}

/// Trace through `initial` in both directions, `length` each way, and join
/// the halves into one curve oriented along the initial tangent.
pub fn integrate_soliton_both_ways(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    initial: &CurveState,
    length: f64,
    opts: &SolitonOptions,
) -> Result<SolitonCurve> {
    require_surface(metric, field)?;
    let (fs, fx, ft, fterm) = raw_trace(metric, field, initial, length, opts)?;
    let back = CurveState {
        x: initial.x.clone(),
        tangent: -&initial.tangent,
        s: initial.s,
    };
    let (bs, bx, bt, bterm) = raw_trace(metric, field, &back, length, opts)?;
    let mut ss = Vec::with_capacity(fs.len() + bs.len());
    let mut xs = Vec::with_capacity(ss.capacity());
    let mut ts = Vec::with_capacity(ss.capacity());
    for k in (1..bs.len()).rev() {
        ss.push(2.0 * initial.s - bs[k]);
        xs.push(bx[k].clone());
        ts.push(-&bt[k]);
    }
    ss.extend(fs);
    xs.extend(fx);
    ts.extend(ft);
    let samples = measure_samples(metric, field, &ss, &xs, &ts)?;
    let termination = if fterm == Termination::Boundary || bterm == Termination::Boundary {
        Termination::Boundary
    } else {
        Termination::Completed
    };
    Ok(SolitonCurve {
        samples,
        field_name: field.name().to_string(),
        metric_name: metric.name().to_string(),
        termination,
        rtol: opts.rtol,
    })
}

type RawTrace = (Vec<f64>, Vec<Point>, Vec<Point>, Termination);

fn raw_trace(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    initial: &CurveState,
    length: f64,
    opts: &SolitonOptions,
) -> Result<RawTrace> {
    let t_norm = metric.norm(&initial.x, &initial.tangent)?;
    if !(t_norm > 0.0) {
        return Err(GeomError::Degenerate("initial tangent is zero".into()));
    }
    let mut y0 = DVector::zeros(4);
    y0.rows_mut(0, 2).copy_from(&initial.x);
    y0.rows_mut(2, 2).copy_from(&(&initial.tangent / t_norm));

    let rhs = |_: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let state = CurveState {
            x: y.rows(0, 2).into_owned(),
            tangent: y.rows(2, 2).into_owned(),
            s: 0.0,
        };
        let (dx, dt) = soliton_rhs(metric, field, &state)?;
        let mut out = DVector::zeros(4);
        out.rows_mut(0, 2).copy_from(&dx);
        out.rows_mut(2, 2).copy_from(&dt);
        Ok(out)
    };
    let renormalise = |y: &mut DVector<f64>| {
        let x: Point = y.rows(0, 2).into_owned();
        let t: Point = y.rows(2, 2).into_owned();
        if let Ok(n) = metric.norm(&x, &t) {
            if n > 0.0 {
                y.rows_mut(2, 2).copy_from(&(t / n));
            }
        }
    };
    let traj = ode::integrate(rhs, initial.s, y0, initial.s + length, &opts.ode(), renormalise)?;
    let xs = traj.ys.iter().map(|y| y.rows(0, 2).into_owned()).collect();
    let ts = traj.ys.iter().map(|y| y.rows(2, 2).into_owned()).collect();
    Ok((traj.ts, xs, ts, traj.termination))
}

/// Normal, measured geodesic curvature and soliton residual per sample.
/// `∇_T T` is formed from a five-point derivative of the stored tangents.
fn measure_samples(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    ss: &[f64],
    xs: &[Point],
    ts: &[Point],
) -> Result<Vec<CurveSample>> {
    let n = ss.len();
    (0..n)
        .map(|i| {
            let x = &xs[i];
            let t = &ts[i];
            let nu = unit_normal(metric, x, t)?;
            let kappa = if n >= 3 {
                let win = stencil::window(i, n, 5);
                let w = stencil::fornberg(ss[i], &ss[win.clone()], 1);
                let mut dt = Point::zeros(2);
                for (c, k) in w[1].iter().zip(win) {
                    dt += &ts[k] * *c;
                }
                let acc = dt + metric.christoffel(x)?.contract(t, t);
                metric.inner(x, &acc, &nu)?
            } else {
                0.0
            };
            let xn = metric.inner(x, &field.eval(x)?, &nu)?;
            Ok(CurveSample {
                s: ss[i],
                x: x.as_slice().to_vec(),
                tangent: t.as_slice().to_vec(),
                normal: nu.as_slice().to_vec(),
                kappa,
                residual: (kappa - SIGMA * xn).abs(),
            })
        })
        .collect()
}

/// Check that the `X`-flow moves the curve with the mean curvature flow
/// normal speed. For each sample the symmetric displacement
/// `(φ(p, dt) − φ(p, −dt)) / 2` is projected on `ν` and compared with
/// `σ·κ_g·dt`; the result is the sup of the mismatch divided by `dt`.
pub fn stationarity_check(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    curve: &SolitonCurve,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(GeomError::Config("dt must be positive".into()));
    }
    let domain = metric.domain();
    let flow_tol = 1e-12;
    let mut worst = 0.0f64;
    for sample in &curve.samples {
        let p = Point::from_column_slice(&sample.x);
        let nu = Point::from_column_slice(&sample.normal);
        let fwd = fields::flow(field, domain, &p, dt, flow_tol)?;
        let bwd = fields::flow(field, domain, &p, -dt, flow_tol)?;
        let disp = (fwd - bwd) * 0.5;
        let normal_disp = metric.inner(&p, &disp, &nu)?;
        let expected = SIGMA * sample.kappa * dt;
        worst = worst.max((normal_disp - expected).abs() / dt);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Domain;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn unit_normal_is_orthonormal_and_positive() {
        for metric in [MetricChart::half_plane(), MetricChart::sphere_stereographic(2)] {
            let x = p(&[0.3, 0.8]);
            let t0 = p(&[0.7, -0.2]);
            let t = &t0 / metric.norm(&x, &t0).unwrap();
            let nu = unit_normal(&metric, &x, &t).unwrap();
            assert!((metric.inner(&x, &nu, &nu).unwrap() - 1.0).abs() < 1e-12);
            assert!(metric.inner(&x, &nu, &t).unwrap().abs() < 1e-12);
            assert!(t[0] * nu[1] - t[1] * nu[0] > 0.0);
        }
        let nu = unit_normal(&MetricChart::euclidean(2), &p(&[0.0, 0.0]), &p(&[1.0, 0.0])).unwrap();
        assert!((nu - p(&[0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn sign_pinned_by_unit_circle() {
        // counterclockwise unit circle at (1, 0): T = (0, 1), ν = (−1, 0) inward,
        // κ_g = 1 and g(X, ν) = −1 for X(p) = p, so the equation forces σ = −1.
        let metric = MetricChart::euclidean(2);
        let field = VectorFieldSpec::radial(2, 1.0);
        let state = CurveState::new(p(&[1.0, 0.0]), p(&[0.0, 1.0]));
        let (dx, dt) = soliton_rhs(&metric, &field, &state).unwrap();
        assert_eq!(dx, p(&[0.0, 1.0]));
        // circle: T' = −x
        assert!((dt - p(&[-1.0, 0.0])).norm() <= 1e-9);
        assert_eq!(SIGMA, -1.0);
    }

    #[test]
    fn zero_field_gives_straight_lines() {
        let metric = MetricChart::euclidean(2);
        let field = VectorFieldSpec::zero(2);
        let state = CurveState::new(p(&[0.0, 0.0]), p(&[1.0, 0.0]));
        let (_, dt) = soliton_rhs(&metric, &field, &state).unwrap();
        assert_eq!(dt.norm(), 0.0);
        let c = integrate_soliton(&metric, &field, &state, 2.0, &Default::default()).unwrap();
        let end = c.end_state();
        assert!((end.x - p(&[2.0, 0.0])).norm() < 1e-8);
        assert!(c.max_residual() < 1e-12);
    }

    #[test]
    fn unit_circle_stays_on_circle() {
        let metric = MetricChart::euclidean(2);
        let field = VectorFieldSpec::radial(2, 1.0);
        let state = CurveState::new(p(&[1.0, 0.0]), p(&[0.0, 1.0]));
        let c = integrate_soliton(&metric, &field, &state, 2.0 * std::f64::consts::PI, &Default::default()).unwrap();
        for s in &c.samples {
            assert!((p(&s.x).norm() - 1.0).abs() < 1e-9);
            assert!((s.kappa - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn grim_reaper_apex_curvature() {
        // y = −ln cos x has κ = cos x; at the apex κ = 1 and ν = (0, 1).
        let metric = MetricChart::euclidean(2);
        let field = VectorFieldSpec::translation(p(&[0.0, -1.0]));
        let x0 = 0.3f64;
        let state = CurveState::new(p(&[x0, -(x0.cos()).ln()]), p(&[x0.cos(), x0.sin()]));
        let (_, dt) = soliton_rhs(&metric, &field, &state).unwrap();
        let nu = p(&[-x0.sin(), x0.cos()]);
        assert!((dt.dot(&nu) - x0.cos()).abs() < 1e-12);
    }

    #[test]
    fn unit_tangent_is_preserved() {
        let metric = MetricChart::sphere_stereographic(2);
        let field = VectorFieldSpec::rotation(2, 1.0);
        let state = CurveState::new(p(&[0.5, 0.1]), p(&[0.3, 1.0]));
        let c = integrate_soliton(&metric, &field, &state, 6.0, &Default::default()).unwrap();
        for s in &c.samples {
            let t = metric.norm(&p(&s.x), &p(&s.tangent)).unwrap();
            assert!((t - 1.0).abs() <= 1e-9 * (1.0 + s.s.abs()));
        }
    }

    #[test]
    fn partial_at_boundary() {
        let metric = MetricChart::euclidean(2).with_domain(Domain::cube(2, -1.0, 1.0));
        let field = VectorFieldSpec::zero(2);
        let state = CurveState::new(p(&[0.0, 0.0]), p(&[1.0, 0.0]));
        let c = integrate_soliton(&metric, &field, &state, 5.0, &Default::default()).unwrap();
        assert!(c.is_partial());
        assert!(c.end_state().x[0] > 0.999 && c.end_state().x[0] < 1.0);
    }

    #[test]
    fn resample_keeps_geometry() {
        let metric = MetricChart::euclidean(2);
        let field = VectorFieldSpec::radial(2, 1.0);
        let state = CurveState::new(p(&[1.0, 0.0]), p(&[0.0, 1.0]));
        let c = integrate_soliton(&metric, &field, &state, 3.0, &Default::default()).unwrap();
        let r = c.resample(&metric, &field, 0.05).unwrap();
        for s in &r.samples {
            assert!((p(&s.x).norm() - 1.0).abs() < 1e-8);
        }
        assert!((r.samples.last().unwrap().s - 3.0).abs() < 1e-12);
    }

    #[test]
    fn requires_a_surface() {
        let metric = MetricChart::euclidean(3);
        let field = VectorFieldSpec::zero(3);
        let state = CurveState::new(p(&[0.0, 0.0, 0.0]), p(&[1.0, 0.0, 0.0]));
        assert!(matches!(
            integrate_soliton(&metric, &field, &state, 1.0, &Default::default()),
            Err(GeomError::UnsupportedDimension { .. })
        ));
    }
}
