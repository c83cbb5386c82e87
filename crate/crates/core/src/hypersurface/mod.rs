//! Parametric hypersurface patches: fundamental forms, mean curvature and
//! the soliton residual `|H + g(X, ν)|`.
//!
//! `h_ab = g(∇_{∂_a f} ∂_b f, ν)` and `H = tr(I⁻¹h)/n`, so `H` is the
//! averaged normal curvature with respect to the chosen normal; for the
//! unit sphere with outward normal `H = −1`. The soliton equation
//! `Hν + X^⊥ = 0` then reads `H + g(X, ν) = 0` for every `n`, which is the
//! curve equation `κ_g = σ·g(X, ν)` when `n = 1`.

mod profile;

pub use profile::{rotational_profile, ProfileCurve, ProfileStart};

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{ConformalFactor, MetricChart, Point};
use crate::error::{GeomError, Result};
use crate::expr::{Expr, Variables};
use crate::fields::VectorFieldSpec;

type PatchFn = Arc<dyn Fn(&[f64]) -> Result<Point> + Send + Sync>;

/// Relative step for finite differences of `f`, times the box width.
const PATCH_STEP: f64 = 1e-4;

/// `f : box ⊂ ℝⁿ → chart`, oriented by a reference direction at the centre.
#[derive(Clone)]
pub struct ImmersedPatch {
    name: String,
    n: usize,
    ambient: usize,
    bounds: Vec<(f64, f64)>,
    f: PatchFn,
    reference: Point,
}

impl fmt::Debug for ImmersedPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImmersedPatch")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("ambient", &self.ambient)
            .field("bounds", &self.bounds)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapeData {
    pub position: Vec<f64>,
    pub normal: Vec<f64>,
    pub first_form: Vec<Vec<f64>>,
    pub second_form: Vec<Vec<f64>>,
    pub mean_curvature: f64,
}

impl ImmersedPatch {
    /// `reference` fixes the normal at the box centre: `g(ν, reference) > 0`.
    pub fn new<F>(
        name: impl Into<String>,
        ambient: usize,
        bounds: Vec<(f64, f64)>,
        reference: Point,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> Result<Point> + Send + Sync + 'static,
    {
        let n = bounds.len();
        if n + 1 != ambient {
            return Err(GeomError::DimensionMismatch {
                expected: ambient - 1,
                got: n,
            });
        }
        if reference.len() != ambient {
            return Err(GeomError::DimensionMismatch {
                expected: ambient,
                got: reference.len(),
            });
        }
        if bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(GeomError::Config(format!("empty parameter box {bounds:?}")));
        }
        Ok(ImmersedPatch {
            name: name.into(),
            n,
            ambient,
            bounds,
            f: Arc::new(f),
            reference,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn eval(&self, t: &[f64]) -> Result<Point> {
        if t.len() != self.n {
            return Err(GeomError::DimensionMismatch {
                expected: self.n,
                got: t.len(),
            });
        }
        let p = (self.f)(t)?;
        if p.len() != self.ambient {
            return Err(GeomError::DimensionMismatch {
                expected: self.ambient,
                got: p.len(),
            });
        }
        Ok(p)
    }

    /// Same map with the opposite orientation.
    pub fn flipped(&self) -> Self {
        ImmersedPatch {
            reference: -&self.reference,
            ..self.clone()
        }
    }

    /// Precompose with a map of parameter boxes `φ : new → old`.
    pub fn reparametrised<F>(&self, bounds: Vec<(f64, f64)>, phi: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let inner = self.f.clone();
        let mut out = ImmersedPatch::new(
            format!("{}∘φ", self.name),
            self.ambient,
            bounds,
            self.reference.clone(),
            move |t| inner(&phi(t)),
        )?;
        // keep the orientation of the original patch
        out.reference = self.reference.clone();
        Ok(out)
    }

    fn steps(&self) -> Vec<f64> {
        self.bounds.iter().map(|(a, b)| PATCH_STEP * (b - a)).collect()
    }

    /// Sample points: `per_axis` nodes per direction, inset by `inset` of
    /// the box width on each side.
    pub fn grid(&self, per_axis: usize, inset: f64) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|(a, b)| {
                let (lo, hi) = (a + inset * (b - a), b - inset * (b - a));
                if per_axis <= 1 {
                    vec![0.5 * (lo + hi)]
                } else {
                    (0..per_axis).map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64).collect()
                }
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out
    }

    /// `f[i] = expr(t1..tn)`.
    pub fn parse(name: impl Into<String>, bounds: Vec<(f64, f64)>, comps: &[String], reference: Point) -> Result<Self> {
        let vars = Variables::params(bounds.len());
        let exprs = comps.iter().map(|c| Expr::parse(c, &vars)).collect::<Result<Vec<_>, _>>()?;
        let ambient = exprs.len();
        ImmersedPatch::new(name, ambient, bounds, reference, move |t| {
            Ok(Point::from_iterator(ambient, exprs.iter().map(|e| e.eval(t))))
        })
    }

    /// Affine plane `p0 + t1·a + t2·b + …` through `origin`.
    pub fn plane(origin: Point, spans: Vec<Point>, half_width: f64, reference: Point) -> Result<Self> {
        let n = spans.len();
        ImmersedPatch::new("plane", origin.len(), vec![(-half_width, half_width); n], reference, move |t| {
            let mut p = origin.clone();
            for (s, ti) in spans.iter().zip(t) {
                p += s * *ti;
            }
            Ok(p)
        })
    }

    /// Round sphere `S^n(radius)` about `center` in hyperspherical angles,
    /// with outward normal. Poles and the angular seam are cut off.
    pub fn sphere(center: Point, radius: f64) -> Result<Self> {
        let ambient = center.len();
        if !(2..=4).contains(&ambient) {
            return Err(GeomError::UnsupportedDimension {
                required: "2, 3 or 4".into(),
                got: ambient,
            });
        }
        let n = ambient - 1;
        let cut = 0.3;
        let mut bounds = vec![(cut, std::f64::consts::PI - cut); n - 1];
        bounds.push((0.1, 2.0 * std::f64::consts::PI - 0.1));
        let c = center.clone();
        let probe = ImmersedPatch::new("probe", ambient, bounds.clone(), Point::zeros(ambient), {
            let c = c.clone();
            move |t| Ok(&c + sphere_point(t) * radius)
        })?;
        let reference = probe.eval(&probe.center())? - &center;
        ImmersedPatch::new(format!("sphere(r={radius})"), ambient, bounds, reference, move |t| {
            Ok(&c + sphere_point(t) * radius)
        })
    }

    /// Unit-speed circle of radius `radius` about `center` in the plane,
    /// outward normal.
    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        if center.len() != 2 {
            return Err(GeomError::UnsupportedDimension {
                required: "2".into(),
                got: center.len(),
            });
        }
        ImmersedPatch::sphere(center, radius).map(|p| p.renamed(format!("circle(r={radius})")))
    }

    /// `x1² + x2² = radius²` in ℝ³, outward normal.
    pub fn cylinder(radius: f64, height: f64) -> Result<Self> {
        let reference = Point::from_vec(vec![-1.0, 0.0, 0.0]);
        ImmersedPatch::new(
            format!("cylinder(r={radius})"),
            3,
            vec![(0.1, 2.0 * std::f64::consts::PI - 0.1), (-height, height)],
            reference,
            move |t| Ok(Point::from_vec(vec![radius * t[0].cos(), radius * t[0].sin(), t[1]])),
        )
    }

    /// Graph `x_{n+1} = h(x_1..x_n)` with upward normal.
    pub fn graph<H>(name: impl Into<String>, bounds: Vec<(f64, f64)>, h: H) -> Result<Self>
    where
        H: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
    {
        let n = bounds.len();
        let mut reference = Point::zeros(n + 1);
        reference[n] = 1.0;
        ImmersedPatch::new(name, n + 1, bounds, reference, move |t| {
            let mut p = Point::zeros(n + 1);
            p.rows_mut(0, n).copy_from_slice(t);
            p[n] = h(t)?;
            Ok(p)
        })
    }

    /// Grim reaper `y = −ln cos x` times a line in ℝ³, normal towards +y.
    pub fn grim_reaper_cylinder(half_width: f64, height: f64) -> Result<Self> {
        ImmersedPatch::new(
            "grim-reaper-cylinder",
            3,
            vec![(-half_width, half_width), (-height, height)],
            Point::from_vec(vec![0.0, 1.0, 0.0]),
            |t| Ok(Point::from_vec(vec![t[0], -t[0].cos().ln(), t[1]])),
        )
    }
}

/// Unit vector from hyperspherical angles `(θ_1..θ_{n−1}, φ)`.
fn sphere_point(t: &[f64]) -> Point {
    let n = t.len();
    let mut p = Point::zeros(n + 1);
    let mut s = 1.0;
    for (k, a) in t[..n - 1].iter().enumerate() {
        p[n - k] = s * a.cos();
        s *= a.sin();
    }
    let phi = t[n - 1];
    p[0] = s * phi.cos();
    p[1] = s * phi.sin();
    p
}

// fourth-order central weights for the first derivative at ±h, ±2h
const D1: [(f64, f64); 4] = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
const D2: [(f64, f64); 5] = [
    (-2.0, -1.0 / 12.0),
    (-1.0, 16.0 / 12.0),
    (0.0, -30.0 / 12.0),
    (1.0, 16.0 / 12.0),
    (2.0, -1.0 / 12.0),
];

struct Jet {
    x: Point,
    d1: Vec<Point>,
    d2: Vec<Vec<Point>>,
}

fn jet(patch: &ImmersedPatch, t: &[f64]) -> Result<Jet> {
    let n = patch.n;
    let h = patch.steps();
    for (a, ((lo, hi), ha)) in patch.bounds.iter().zip(&h).enumerate() {
        if t[a] - 2.0 * ha < *lo || t[a] + 2.0 * ha > *hi {
            return Err(GeomError::Config(format!(
                "parameter {t:?} is within the difference margin of the box edge"
            )));
        }
    }
    let at = |shift: &[(usize, f64)]| {
        let mut s = t.to_vec();
        for (a, k) in shift {
            s[*a] += k * h[*a];
        }
        patch.eval(&s)
    };
    let x = patch.eval(t)?;
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = vec![vec![Point::zeros(patch.ambient); n]; n];
    for a in 0..n {
        let mut v = Point::zeros(patch.ambient);
        for (k, w) in D1 {
            v += at(&[(a, k)])? * w;
        }
        d1.push(v / h[a]);
        let mut v = Point::zeros(patch.ambient);
        for (k, w) in D2 {
            v += if k == 0.0 { &x * w } else { at(&[(a, k)])? * w };
        }
        d2[a][a] = v / (h[a] * h[a]);
    }
    for a in 0..n {
        for b in a + 1..n {
            let mut v = Point::zeros(patch.ambient);
            for (ka, wa) in D1 {
                for (kb, wb) in D1 {
                    v += at(&[(a, ka), (b, kb)])? * (wa * wb);
                }
            }
            v /= h[a] * h[b];
            d2[b][a] = v.clone();
            d2[a][b] = v;
        }
    }
    Ok(Jet { x, d1, d2 })
}

/// Unit normal by modified Gram–Schmidt in `g`, sign by `sign`.
fn normal(g: &DMatrix<f64>, tangents: &[Point], sign: f64) -> Option<Point> {
    let ip = |u: &Point, v: &Point| u.dot(&(g * v));
    let mut basis: Vec<Point> = Vec::with_capacity(tangents.len());
    for t in tangents {
        let mut v = t.clone();
        for e in &basis {
            v -= e * ip(e, &v);
        }
        let nv = ip(&v, &v).sqrt();
        if !(nv > 1e-10 * ip(t, t).sqrt()) {
            return None;
        }
        basis.push(v / nv);
    }
    let dim = g.nrows();
    let mut best: Option<Point> = None;
    let mut best_norm = 0.0;
    for k in 0..dim {
        let mut v = Point::zeros(dim);
        v[k] = 1.0;
        for e in &basis {
            v -= e * ip(e, &v);
        }
        let nv = ip(&v, &v).sqrt();
        if nv > best_norm {
            best_norm = nv;
            best = Some(v / nv);
        }
    }
    best.map(|v| v * sign)
}

fn orientation_det(tangents: &[Point], nu: &Point) -> f64 {
    let d = nu.len();
    let mut m = DMatrix::zeros(d, d);
    for (c, t) in tangents.iter().enumerate() {
        m.set_column(c, t);
    }
    m.set_column(d - 1, nu);
    m.determinant()
}

/// Orientation sign: `det[∂f | ν]` at the centre when `ν` points along the
/// reference direction.
fn reference_sign(metric: &MetricChart, patch: &ImmersedPatch) -> Result<f64> {
    let c = patch.center();
    let j = jet(patch, &c)?;
    let g = metric.metric_at(&j.x)?;
    let nu = normal(&g, &j.d1, 1.0).ok_or_else(|| GeomError::Immersion { param: c.clone() })?;
    let along = nu.dot(&(&g * &patch.reference));
    let det = orientation_det(&j.d1, &nu);
    if along == 0.0 || det == 0.0 {
        return Err(GeomError::Degenerate("reference direction is tangent at the patch centre".into()));
    }
    Ok((along * det).signum())
}

fn shape_with_sign(metric: &MetricChart, patch: &ImmersedPatch, t: &[f64], orient: f64) -> Result<ShapeData> {
    if metric.dim() != patch.ambient {
        return Err(GeomError::DimensionMismatch {
            expected: metric.dim(),
            got: patch.ambient,
        });
    }
    let n = patch.n;
    let j = jet(patch, t)?;
    let g = metric.metric_at(&j.x)?;
    let immersion = || GeomError::Immersion { param: t.to_vec() };
    let raw = normal(&g, &j.d1, 1.0).ok_or_else(immersion)?;
    let nu = &raw * (orientation_det(&j.d1, &raw).signum() * orient);
    let first = DMatrix::from_fn(n, n, |a, b| j.d1[a].dot(&(&g * &j.d1[b])));
    let gamma = metric.christoffel(&j.x)?;
    let gnu = &g * &nu;
    let second = DMatrix::from_fn(n, n, |a, b| {
        (&j.d2[a][b] + gamma.contract(&j.d1[a], &j.d1[b])).dot(&gnu)
    });
    let chol = first.clone().cholesky().ok_or_else(immersion)?;
    let shape_op = chol.solve(&second);
    let rows = |m: &DMatrix<f64>| (0..n).map(|a| m.row(a).iter().copied().collect()).collect();
    Ok(ShapeData {
        position: j.x.as_slice().to_vec(),
        normal: nu.as_slice().to_vec(),
        first_form: rows(&first),
        second_form: rows(&second),
        mean_curvature: shape_op.trace() / n as f64,
    })
}

/// First and second fundamental forms, normal and mean curvature at `t`.
pub fn shape_data(metric: &MetricChart, patch: &ImmersedPatch, t: &[f64]) -> Result<ShapeData> {
    let orient = reference_sign(metric, patch)?;
    shape_with_sign(metric, patch, t, orient)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchResidual {
    pub patch: String,
    pub sup: f64,
    pub mean: f64,
    pub argmax: Vec<f64>,
    pub samples: usize,
}

fn sup_report(patch: &ImmersedPatch, grid: &[Vec<f64>], vals: Vec<f64>) -> PatchResidual {
    let (k, sup) = vals
        .iter()
        .enumerate()
        .fold((0, 0.0), |(bk, bv), (k, v)| if *v > bv { (k, *v) } else { (bk, bv) });
    PatchResidual {
        patch: patch.name.clone(),
        sup,
        mean: vals.iter().sum::<f64>() / vals.len().max(1) as f64,
        argmax: grid.get(k).cloned().unwrap_or_default(),
        samples: vals.len(),
    }
}

/// Pointwise `|H + g(X∘f, ν)|`.
pub fn soliton_residual_at(metric: &MetricChart, field: &VectorFieldSpec, patch: &ImmersedPatch, t: &[f64]) -> Result<f64> {
    let s = shape_data(metric, patch, t)?;
    residual_of(metric, field, &s)
}

fn residual_of(metric: &MetricChart, field: &VectorFieldSpec, s: &ShapeData) -> Result<f64> {
    let x = Point::from_column_slice(&s.position);
    let nu = Point::from_column_slice(&s.normal);
    Ok((s.mean_curvature + metric.inner(&x, &field.eval(&x)?, &nu)?).abs())
}

/// Sup of `|H + g(X∘f, ν)|` over `grid`.
pub fn soliton_residual(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    patch: &ImmersedPatch,
    grid: &[Vec<f64>],
) -> Result<PatchResidual> {
    if field.dim() != metric.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: metric.dim(),
            got: field.dim(),
        });
    }
    let orient = reference_sign(metric, patch)?;
    let vals = grid
        .par_iter()
        .map(|t| residual_of(metric, field, &shape_with_sign(metric, patch, t, orient)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(sup_report(patch, grid, vals))
}

/// Mean curvature of the patch for `e^{−2u}g`, recomputed from scratch.
pub fn conformal_mean_curvature(metric: &MetricChart, u: &ConformalFactor, patch: &ImmersedPatch, t: &[f64]) -> Result<f64> {
    Ok(shape_data(&metric.conformal_rescale(u), patch, t)?.mean_curvature)
}

/// Sup of `|H̄|` over `grid` for `ḡ = e^{−2u}g`.
pub fn conformal_mean_curvature_sup(
    metric: &MetricChart,
    u: &ConformalFactor,
    patch: &ImmersedPatch,
    grid: &[Vec<f64>],
) -> Result<PatchResidual> {
    let gbar = metric.conformal_rescale(u);
    let orient = reference_sign(&gbar, patch)?;
    let vals = grid
        .par_iter()
        .map(|t| Ok(shape_with_sign(&gbar, patch, t, orient)?.mean_curvature.abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(sup_report(patch, grid, vals))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn e3() -> MetricChart {
        MetricChart::euclidean(3)
    }

    #[test]
    fn plane_is_flat_and_normal_is_unit() {
        let patch = ImmersedPatch::plane(p(&[0.0, 0.0, 0.0]), vec![p(&[1.0, 0.0, 0.0]), p(&[0.0, 1.0, 1.0])], 1.0, p(&[0.0, -1.0, 1.0]))
            .unwrap();
        let s = shape_data(&e3(), &patch, &[0.2, -0.3]).unwrap();
        assert!(s.mean_curvature.abs() < 1e-9);
        assert!(s.second_form.iter().flatten().all(|v| v.abs() < 1e-8));
        let nu = p(&s.normal);
        assert!((nu.norm() - 1.0).abs() < 1e-12);
        assert!(nu[2] > 0.0);
        let r = soliton_residual(&e3(), &VectorFieldSpec::radial(3, 1.0), &patch, &patch.grid(5, 0.1)).unwrap();
        assert!(r.sup <= 1e-9);
    }

    #[test]
    fn unit_sphere_examples() {
        let patch = ImmersedPatch::sphere(p(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        for t in patch.grid(4, 0.05) {
            let s = shape_data(&e3(), &patch, &t).unwrap();
            assert!((s.mean_curvature + 1.0).abs() <= 1e-6, "{}", s.mean_curvature);
            let x = p(&s.position);
            assert!((p(&s.normal) - &x).norm() < 1e-9);
            for a in 0..2 {
                for b in 0..2 {
                    assert!((s.second_form[a][b] + s.first_form[a][b]).abs() <= 1e-6);
                }
            }
        }
        let grid = patch.grid(6, 0.05);
        let x = VectorFieldSpec::radial(3, 1.0);
        assert!(soliton_residual(&e3(), &x, &patch, &grid).unwrap().sup <= 1e-6);
        let big = ImmersedPatch::sphere(p(&[0.0, 0.0, 0.0]), 2.0).unwrap();
        let r = soliton_residual(&e3(), &x, &big, &grid).unwrap();
        assert!((r.sup - 1.5).abs() <= 1e-6 && (r.mean - 1.5).abs() <= 1e-6);
    }

    #[test]
    fn cylinder_and_circle() {
        let patch = ImmersedPatch::cylinder(2.0, 1.0).unwrap();
        let s = shape_data(&e3(), &patch, &[1.0, 0.3]).unwrap();
        assert!((s.mean_curvature.abs() - 0.25).abs() <= 1e-6);
        let circle = ImmersedPatch::circle(p(&[0.0, 0.0]), 1.0).unwrap();
        let s = shape_data(&MetricChart::euclidean(2), &circle, &[2.0]).unwrap();
        assert!((s.mean_curvature + 1.0).abs() <= 1e-6);
    }

    #[test]
    fn flipping_orientation() {
        let patch = ImmersedPatch::sphere(p(&[0.0, 0.0, 0.0]), 1.5).unwrap();
        let t = [1.0, 2.0];
        let a = shape_data(&e3(), &patch, &t).unwrap();
        let b = shape_data(&e3(), &patch.flipped(), &t).unwrap();
        assert!((a.mean_curvature + b.mean_curvature).abs() < 1e-12);
        let x = VectorFieldSpec::translation(p(&[0.3, -0.2, 0.5]));
        let ra = soliton_residual_at(&e3(), &x, &patch, &t).unwrap();
        let rb = soliton_residual_at(&e3(), &x, &patch.flipped(), &t).unwrap();
        assert!((ra - rb).abs() < 1e-9);
    }

    #[test]
    fn conformal_examples() {
        let patch = ImmersedPatch::sphere(p(&[0.0, 0.0, 0.0]), 1.0).unwrap();
        let t = [0.9, 1.7];
        let h = shape_data(&e3(), &patch, &t).unwrap().mean_curvature;
        assert!((conformal_mean_curvature(&e3(), &ConformalFactor::zero(), &patch, &t).unwrap() - h).abs() < 1e-12);
        let u = ConformalFactor::parse("(x^2 + y^2 + z^2)/2", 3).unwrap();
        let grid = patch.grid(5, 0.05);
        assert!(conformal_mean_curvature_sup(&e3(), &u, &patch, &grid).unwrap().sup <= 1e-6);

        let reaper = ImmersedPatch::grim_reaper_cylinder(1.3, 1.0).unwrap();
        let u = ConformalFactor::parse("-y/2", 3).unwrap();
        let grid = reaper.grid(5, 0.05);
        assert!(conformal_mean_curvature_sup(&e3(), &u, &reaper, &grid).unwrap().sup <= 1e-5);
        let x = VectorFieldSpec::translation(p(&[0.0, -0.5, 0.0]));
        assert!(soliton_residual(&e3(), &x, &reaper, &grid).unwrap().sup <= 1e-6);
    }

    #[test]
    fn three_sphere_in_r4() {
        let e4 = MetricChart::euclidean(4);
        let patch = ImmersedPatch::sphere(p(&[0.0; 4]), 1.0).unwrap();
        let grid = patch.grid(3, 0.05);
        let r = soliton_residual(&e4, &VectorFieldSpec::radial(4, 1.0), &patch, &grid).unwrap();
        assert!(r.sup <= 1e-6, "{r:?}");
        let u = ConformalFactor::parse("(x1^2 + x2^2 + x3^2 + x4^2)/2", 4).unwrap();
        assert!(conformal_mean_curvature_sup(&e4, &u, &patch, &grid).unwrap().sup <= 1e-6);
    }

    #[test]
    fn reparametrisation_invariance() {
        let patch = ImmersedPatch::graph("paraboloid", vec![(-1.0, 1.0), (-1.0, 1.0)], |t| Ok(t[0] * t[0] + 0.5 * t[1] * t[1]))
            .unwrap();
        let re = patch
            .reparametrised(vec![(-1.0, 1.0), (-1.0, 1.0)], |s| vec![(s[0] * 0.8).sinh() / 0.8f64.sinh(), s[1].powi(3) * 0.5 + 0.5 * s[1]])
            .unwrap();
        let s = [0.3, -0.4];
        let t = [(s[0] * 0.8f64).sinh() / 0.8f64.sinh(), s[1].powi(3) * 0.5 + 0.5 * s[1]];
        let a = shape_data(&e3(), &re, &s).unwrap();
        let b = shape_data(&e3(), &patch, &t).unwrap();
        assert!((a.mean_curvature - b.mean_curvature).abs() <= 1e-7);
        assert!((p(&a.normal) - p(&b.normal)).norm() <= 1e-7);
    }

    #[test]
    fn immersion_failure() {
        let patch = ImmersedPatch::new("pinched", 3, vec![(-1.0, 1.0), (-1.0, 1.0)], p(&[0.0, 0.0, 1.0]), |t| {
            Ok(p(&[t[0], t[0], 0.0]))
        })
        .unwrap();
        assert!(matches!(
            shape_data(&e3(), &patch, &[0.0, 0.0]),
            Err(GeomError::Immersion { .. })
        ));
    }

    #[test]
    fn expression_patch_matches_preset() {
        let a = ImmersedPatch::parse(
            "cyl",
            vec![(0.1, 6.0), (-1.0, 1.0)],
            &["2*cos(t1)".into(), "2*sin(t1)".into(), "t2".into()],
            p(&[-1.0, 0.0, 0.0]),
        )
        .unwrap();
        let s = shape_data(&e3(), &a, &[1.0, 0.3]).unwrap();
        assert!((s.mean_curvature.abs() - 0.25).abs() <= 1e-6);
    }
}
