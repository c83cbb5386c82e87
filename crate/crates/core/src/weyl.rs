//! Weyl connections and unparametrised geodesic residuals.
//!
//! `∇_{g,X}` acts on `(Y₁, Y₂)` as
//! `D_{Y₁}Y₂ − g(Y₁,Y₂)X + g(X,Y₁)Y₂ + g(X,Y₂)Y₁`.
//! Its geodesics have geodesic curvature `+g(X, ν)`, so curves solving the
//! soliton equation (curvature `σ·g(X, ν)`) are unparametrised geodesics of
//! `∇_{g,σX}`; [`AffineConnection::soliton`] builds that one.
//! For `X = ∇u` the soliton connection is the Levi-Civita connection of
//! `e^{−2u}g`.

use nalgebra::DVector;
use serde::Serialize;

use crate::chart::{MetricChart, Point};
use crate::error::{GeomError, Result};
use crate::fields::VectorFieldSpec;
use crate::ode::{self, OdeOptions, Termination};
use crate::soliton::{SolitonCurve, SIGMA};
use crate::stencil;

#[derive(Clone)]
pub struct AffineConnection {
    metric: MetricChart,
    field: VectorFieldSpec,
    label: String,
}

impl AffineConnection {
    pub fn levi_civita(metric: &MetricChart) -> Self {
        AffineConnection {
            metric: metric.clone(),
            field: VectorFieldSpec::zero(metric.dim()),
            label: format!("levi-civita({})", metric.name()),
        }
    }

    /// `∇_{g,X}` exactly as displayed above.
    pub fn weyl(metric: &MetricChart, field: &VectorFieldSpec) -> Result<Self> {
        if field.dim() != metric.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: metric.dim(),
                got: field.dim(),
            });
        }
        Ok(AffineConnection {
            metric: metric.clone(),
            field: field.clone(),
            label: format!("weyl({}, {})", metric.name(), field.name()),
        })
    }

    /// `∇_{g,σX}`: the connection whose geodesics are the `X`-soliton curves.
    pub fn soliton(metric: &MetricChart, field: &VectorFieldSpec) -> Result<Self> {
        let mut c = Self::weyl(metric, &field.scaled(SIGMA))?;
        c.label = format!("soliton-weyl({}, {})", metric.name(), field.name());
        Ok(c)
    }

    pub fn metric(&self) -> &MetricChart {
        &self.metric
    }

    pub fn field(&self) -> &VectorFieldSpec {
        &self.field
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }
}

/// Non-derivative part of `∇_v w` at `x`:
/// `Γ(v,w) − g(v,w)X + g(X,v)w + g(X,w)v`.
pub fn weyl_apply(conn: &AffineConnection, x: &Point, v: &Point, w: &Point) -> Result<Point> {
    let m = &conn.metric;
    let g = m.metric_at(x)?;
    let xf = conn.field.eval(x)?;
    let gx = &g * &xf;
    let gvw = v.dot(&(&g * w));
    let mut out = m.christoffel(x)?.contract(v, w);
    out -= &xf * gvw;
    out += w * gx.dot(v);
    out += v * gx.dot(w);
    Ok(out)
}

/// Sampled curve with its parameter grid.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    pub ts: Vec<f64>,
    pub xs: Vec<Point>,
    pub termination: Termination,
}

impl SampledCurve {
    pub fn from_soliton(curve: &SolitonCurve) -> Self {
        SampledCurve {
            ts: curve.params(),
            xs: curve.positions(),
            termination: curve.termination,
        }
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }
}

/// Integrate `c'' = −∇(c', c')` in its affine parameter for `length`.
pub fn integrate_weyl_geodesic(
    conn: &AffineConnection,
    x0: &Point,
    v0: &Point,
    length: f64,
    opts: &OdeOptions,
) -> Result<SampledCurve> {
    let d = conn.dim();
    for p in [x0, v0] {
        if p.len() != d {
            return Err(GeomError::DimensionMismatch {
                expected: d,
                got: p.len(),
            });
        }
    }
    conn.metric.metric_at(x0)?;
    let mut y0 = DVector::zeros(2 * d);
    y0.rows_mut(0, d).copy_from(x0);
    y0.rows_mut(d, d).copy_from(v0);
    let rhs = |_: f64, y: &DVector<f64>| -> Result<DVector<f64>> {
        let x: Point = y.rows(0, d).into_owned();
        let v: Point = y.rows(d, d).into_owned();
        let a = weyl_apply(conn, &x, &v, &v)?;
        let mut out = DVector::zeros(2 * d);
        out.rows_mut(0, d).copy_from(&v);
        out.rows_mut(d, d).copy_from(&(-a));
        Ok(out)
    };
    let traj = ode::integrate(rhs, 0.0, y0, length, opts, |_| {})?;
    Ok(SampledCurve {
        xs: traj.ys.iter().map(|y| y.rows(0, d).into_owned()).collect(),
        ts: traj.ts,
        termination: traj.termination,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub connection: String,
    pub sup: f64,
    pub mean: f64,
    /// Sample index and chart point of the sup.
    pub argmax: usize,
    pub argmax_point: Vec<f64>,
    pub samples: usize,
}

/// Transverse geodesic defect of a sampled curve.
///
/// At each interior sample `a = c'' + ∇(c', c')` is formed from centred
/// five-point differences on the (non-uniform) parameter grid; the part of `a`
/// g-orthogonal to `c'`, measured in `g` and divided by `|c'|²_g`, is
/// reparametrisation covariant and vanishes exactly on unparametrised
/// geodesics.
pub fn unparam_residual(conn: &AffineConnection, curve: &SampledCurve) -> Result<ResidualReport> {
    let n = curve.len();
    if n < 5 {
        return Err(GeomError::InsufficientData(format!("need at least 5 samples, got {n}")));
    }
    let m = &conn.metric;
    let mut vals = Vec::with_capacity(n - 4);
    for i in 2..n - 2 {
        let win = i - 2..i + 3;
        let w = stencil::fornberg(curve.ts[i], &curve.ts[win.clone()], 2);
        let mut d1 = Point::zeros(conn.dim());
        let mut d2 = Point::zeros(conn.dim());
        for (k, j) in win.enumerate() {
            d1 += &curve.xs[j] * w[1][k];
            d2 += &curve.xs[j] * w[2][k];
        }
        let x = &curve.xs[i];
        let a = d2 + weyl_apply(conn, x, &d1, &d1)?;
        let vv = m.inner(x, &d1, &d1)?;
        if !(vv > 0.0) {
            return Err(GeomError::Degenerate(format!("curve is stationary at sample {i}")));
        }
        let transverse = &a - &d1 * (m.inner(x, &a, &d1)? / vv);
        vals.push(m.norm(x, &transverse)? / vv);
    }
    let (k, sup) = vals
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bk, bv), (k, v)| if *v > bv { (k, *v) } else { (bk, bv) });
    Ok(ResidualReport {
        connection: conn.label.clone(),
        sup,
        mean: vals.iter().sum::<f64>() / vals.len() as f64,
        argmax: k + 2,
        argmax_point: curve.xs[k + 2].as_slice().to_vec(),
        samples: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::{integrate_soliton, CurveState};

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    #[test]
    fn apply_examples() {
        let m = MetricChart::euclidean(2);
        let lc = AffineConnection::levi_civita(&m);
        let v = p(&[0.3, -1.2]);
        assert_eq!(weyl_apply(&lc, &p(&[0.5, 0.5]), &v, &v).unwrap().norm(), 0.0);

        let w = AffineConnection::weyl(&m, &VectorFieldSpec::rotation(2, 1.0)).unwrap();
        let e1 = p(&[1.0, 0.0]);
        assert_eq!(weyl_apply(&w, &e1, &e1, &e1).unwrap(), p(&[0.0, -1.0]));

        let w = AffineConnection::weyl(&MetricChart::half_plane(), &VectorFieldSpec::radial(2, 0.7)).unwrap();
        let x = p(&[0.2, 1.3]);
        let (a, b) = (p(&[0.4, -0.9]), p(&[1.1, 0.25]));
        let d = weyl_apply(&w, &x, &a, &b).unwrap() - weyl_apply(&w, &x, &b, &a).unwrap();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn levi_civita_matches_christoffel() {
        let m = MetricChart::sphere_stereographic(2);
        let lc = AffineConnection::levi_civita(&m);
        let x = p(&[0.4, -0.2]);
        let (a, b) = (p(&[1.0, 0.5]), p(&[-0.3, 0.8]));
        let d = weyl_apply(&lc, &x, &a, &b).unwrap() - m.christoffel(&x).unwrap().contract(&a, &b);
        assert!(d.norm() <= 1e-8);
    }

    #[test]
    fn great_circle_through_origin() {
        // the stereographic image of a great circle through the south pole is
        // a line through the origin; the chart radius is tan(|v|_e t)
        let m = MetricChart::sphere_stereographic(2);
        let lc = AffineConnection::levi_civita(&m);
        let dir = p(&[0.6, 0.8]);
        let c = integrate_weyl_geodesic(&lc, &p(&[0.0, 0.0]), &(&dir * 0.5), 1.2, &OdeOptions::default()).unwrap();
        for (t, x) in c.ts.iter().zip(&c.xs) {
            let want = &dir * (0.5 * t).tan();
            assert!((x - &want).norm() <= 1e-6 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn radial_field_keeps_rays() {
        let m = MetricChart::euclidean(2);
        let w = AffineConnection::weyl(&m, &VectorFieldSpec::radial(2, 1.0)).unwrap();
        let c = integrate_weyl_geodesic(&w, &p(&[1.0, 0.0]), &p(&[0.3, 0.0]), 2.0, &OdeOptions::default()).unwrap();
        assert!(c.xs.iter().all(|x| x[1].abs() < 1e-12));
    }

    #[test]
    fn residual_examples() {
        let m = MetricChart::euclidean(2);
        let lc = AffineConnection::levi_civita(&m);
        let ts: Vec<f64> = (0..20).map(|i| (i as f64 * 0.1).powi(2)).collect();
        let line = SampledCurve {
            xs: ts.iter().map(|t| p(&[1.0 + t, 2.0 - 3.0 * t])).collect(),
            ts: ts.clone(),
            termination: Termination::Completed,
        };
        assert!(unparam_residual(&lc, &line).unwrap().sup < 1e-12);

        let short = SampledCurve {
            ts: ts[..4].to_vec(),
            xs: line.xs[..4].to_vec(),
            termination: Termination::Completed,
        };
        assert!(matches!(unparam_residual(&lc, &short), Err(GeomError::InsufficientData(_))));

        let w = AffineConnection::weyl(&MetricChart::half_plane(), &VectorFieldSpec::rotation(2, 0.5)).unwrap();
        let g = integrate_weyl_geodesic(&w, &p(&[0.1, 1.0]), &p(&[0.8, 0.3]), 1.0, &OdeOptions::default().max_step(0.01))
            .unwrap();
        let r = unparam_residual(&w, &g).unwrap();
        assert!(r.sup <= 1e-6, "{r:?}");
    }

    #[test]
    fn solitons_are_soliton_weyl_geodesics() {
        let m = MetricChart::euclidean(2);
        let x = VectorFieldSpec::rotation(2, 1.0);
        let c = integrate_soliton(&m, &x, &CurveState::new(p(&[1.0, 0.0]), p(&[0.0, 1.0])), 8.0, &Default::default())
            .unwrap();
        let sc = SampledCurve::from_soliton(&c);
        let good = unparam_residual(&AffineConnection::soliton(&m, &x).unwrap(), &sc).unwrap();
        assert!(good.sup <= 1e-5, "{}", good.sup);
        // the displayed connection has the opposite curvature sign
        let bad = unparam_residual(&AffineConnection::weyl(&m, &x).unwrap(), &sc).unwrap();
        assert!(bad.sup > 1e-2);
    }
}
