//! Vector fields on charts, the flat operator and the closedness test.
//!
//! On a box chart a 1-form is exact as soon as it is closed, so the gradient
//! criterion reduces to checking `d(X♭) = 0` on a sample grid. The
//! staircase potential built by [`recover_potential`] is the constructive half
//! of that statement. The proof-side relation `du = n·X♭` differs from the
//! normalisation used here (`X = ∇u`) by a constant factor only.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{ConformalFactor, Domain, MetricChart, Point};
use crate::error::{GeomError, Result};
use crate::expr::{Expr, Variables};
use crate::ode::{self, OdeOptions, Termination};
use crate::quad;

type FieldFn = Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>;

/// A vector field `X` given by its chart components.
#[derive(Clone)]
pub struct VectorFieldSpec {
    name: String,
    dim: usize,
    x: FieldFn,
}

impl fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorFieldSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl VectorFieldSpec {
    pub fn new<F>(name: impl Into<String>, dim: usize, x: F) -> Self
    where
        F: Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    {
        VectorFieldSpec {
            name: name.into(),
            dim,
            x: Arc::new(x),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn eval(&self, p: &Point) -> Result<Point> {
        if p.len() != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        let v = (self.x)(p)?;
        if v.len() != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(v)
    }

    pub fn scaled(&self, c: f64) -> Self {
        let base = self.clone();
        VectorFieldSpec::new(format!("{c}*({})", self.name), self.dim, move |p| {
            Ok(base.eval(p)? * c)
        })
    }

    pub fn plus(&self, other: &VectorFieldSpec) -> Result<Self> {
        if other.dim != self.dim {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (a, b) = (self.clone(), other.clone());
        Ok(VectorFieldSpec::new(
            format!("{}+{}", self.name, other.name),
            self.dim,
            move |p| Ok(a.eval(p)? + b.eval(p)?),
        ))
    }

    pub fn zero(dim: usize) -> Self {
        VectorFieldSpec::new("zero", dim, move |_| Ok(Point::zeros(dim)))
    }

    /// Rotation `ω(−x2, x1, 0, …)` about the origin in the `x1x2`-plane.
    pub fn rotation(dim: usize, omega: f64) -> Self {
        VectorFieldSpec::new(format!("rotation(omega={omega})"), dim, move |p| {
            let mut v = Point::zeros(dim);
            v[0] = -omega * p[1];
            v[1] = omega * p[0];
            Ok(v)
        })
    }

    /// Constant field.
    pub fn translation(direction: Point) -> Self {
        let dim = direction.len();
        let label = direction.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        VectorFieldSpec::new(format!("translation({label})"), dim, move |_| Ok(direction.clone()))
    }

    /// `X(p) = c·p`.
    pub fn radial(dim: usize, scale: f64) -> Self {
        VectorFieldSpec::new(format!("radial(c={scale})"), dim, move |p| Ok(p * scale))
    }

    pub fn from_exprs(name: impl Into<String>, comps: Vec<Expr>) -> Result<Self> {
        let dim = comps.len();
        if comps.iter().any(|e| e.arity() > dim) {
            return Err(GeomError::Config("field component uses too many variables".into()));
        }
        Ok(VectorFieldSpec::new(name, dim, move |p| {
            Ok(Point::from_iterator(dim, comps.iter().map(|e| e.eval(p.as_slice()))))
        }))
    }

    pub fn parse(name: impl Into<String>, comps: &[String]) -> Result<Self> {
        let vars = Variables::chart(comps.len());
        let exprs = comps
            .iter()
            .map(|s| Expr::parse(s, &vars))
            .collect::<Result<Vec<_>, _>>()?;
        VectorFieldSpec::from_exprs(name, exprs)
    }

    /// Metric gradient `∇_g u`, i.e. `X^i = g^{ij} ∂_j u`.
    pub fn gradient_of(metric: &MetricChart, u: &ConformalFactor) -> Self {
        let (m, u2) = (metric.clone(), u.clone());
        VectorFieldSpec::new(format!("grad({})", u.name()), metric.dim(), move |p| {
            Ok(m.inverse_at(p)? * u2.gradient(p)?)
        })
    }

    /// Built-in presets: `zero`, `rotation`, `translation`, `radial`.
    pub fn preset(name: &str, dim: usize, params: &PresetParams) -> Result<Self> {
        match name {
            "zero" => Ok(VectorFieldSpec::zero(dim)),
            "rotation" => {
                if dim < 2 {
                    return Err(GeomError::UnsupportedDimension {
                        required: ">= 2".into(),
                        got: dim,
                    });
                }
                Ok(VectorFieldSpec::rotation(dim, params.omega.unwrap_or(1.0)))
            }
            "translation" => {
                let dir = params
                    .direction
                    .clone()
                    .ok_or_else(|| GeomError::Config("translation preset needs `direction`".into()))?;
                if dir.len() != dim {
                    return Err(GeomError::DimensionMismatch {
                        expected: dim,
                        got: dir.len(),
                    });
                }
                Ok(VectorFieldSpec::translation(Point::from_vec(dir)))
            }
            "radial" => Ok(VectorFieldSpec::radial(dim, params.scale.unwrap_or(1.0))),
            other => Err(GeomError::Config(format!("unknown field preset `{other}`"))),
        }
    }
}

/// Optional numeric parameters for field presets.
#[derive(Debug, Clone, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PresetParams {
    pub omega: Option<f64>,
    pub direction: Option<Vec<f64>>,
    pub scale: Option<f64>,
}

/// A 1-form `ω` given by its chart components.
#[derive(Clone)]
pub struct Covector {
    dim: usize,
    w: FieldFn,
}

impl Covector {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &Point) -> Result<Point> {
        (self.w)(p)
    }
}

/// `(X♭)_j = Σ_i g_ij X^i`.
pub fn flat(metric: &MetricChart, field: &VectorFieldSpec) -> Result<Covector> {
    if metric.dim() != field.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: metric.dim(),
            got: field.dim(),
        });
    }
    let (m, f) = (metric.clone(), field.clone());
    Ok(Covector {
        dim: metric.dim(),
        w: Arc::new(move |p| Ok(m.metric_at(p)? * f.eval(p)?)),
    })
}

/// Inverse contraction `(ω♯)^i = Σ_j g^{ij} ω_j`.
pub fn sharp(metric: &MetricChart, form: &Covector) -> Result<VectorFieldSpec> {
    if metric.dim() != form.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: metric.dim(),
            got: form.dim(),
        });
    }
    let (m, w) = (metric.clone(), form.clone());
    Ok(VectorFieldSpec::new("sharp", metric.dim(), move |p| {
        Ok(m.inverse_at(p)? * w.eval(p)?)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosednessOptions {
    /// Grid nodes per axis.
    pub resolution: usize,
    pub tol: f64,
}

impl Default for ClosednessOptions {
    fn default() -> Self {
        ClosednessOptions {
            resolution: 33,
            tol: 1e-6,
        }
    }
}

/// Circulation of `X♭` around an axis-aligned rectangle, with the flux of
/// `d(X♭)` through it. Green's theorem says the two agree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopIntegral {
    pub plane: (usize, usize),
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub circulation: f64,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosednessReport {
    pub field: String,
    pub metric: String,
    pub resolution: usize,
    pub tol: f64,
    pub max_curl_residual: f64,
    pub worst_point: Vec<f64>,
    pub loop_integrals: Vec<LoopIntegral>,
    pub is_closed: bool,
}

/// Components `∂_i ω_j − ∂_j ω_i` (i < j) of `d(X♭)` at `p`, by central differences.
pub fn curl_components(metric: &MetricChart, form: &Covector, p: &Point) -> Result<Vec<f64>> {
    let d = p.len();
    let h = metric.steps().first_at(p);
    let mut partials = Vec::with_capacity(d);
    for i in 0..d {
        let mut xp = p.clone();
        let mut xm = p.clone();
        xp[i] += h;
        xm[i] -= h;
        partials.push((form.eval(&xp)? - form.eval(&xm)?) / (2.0 * h));
    }
    let mut out = Vec::with_capacity(d * (d - 1) / 2);
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(partials[i][j] - partials[j][i]);
        }
    }
    Ok(out)
}

fn grid_axes(domain: &Domain, resolution: usize) -> Vec<Vec<f64>> {
    domain
        .bounds
        .iter()
        .map(|(lo, hi)| {
            (0..resolution)
                .map(|k| lo + (hi - lo) * k as f64 / (resolution - 1) as f64)
                .collect()
        })
        .collect()
}

fn grid_points(axes: &[Vec<f64>]) -> Vec<Point> {
    let total: usize = axes.iter().map(|a| a.len()).product();
    (0..total)
        .map(|mut idx| {
            Point::from_iterator(
                axes.len(),
                axes.iter().map(|a| {
                    let v = a[idx % a.len()];
                    idx /= a.len();
                    v
                }),
            )
        })
        .collect()
}

/// Box of grid nodes: the chart domain inset so every stencil stays inside.
pub(crate) fn sample_box(metric: &MetricChart) -> Result<Domain> {
    let inset = 2.0 * metric.steps().first * metric.domain().max_norm().max(1.0);
    metric.domain().shrink(inset)
}

/// Sup-norm of `d(X♭)` over a grid, plus rectangle circulations as witnesses.
pub fn closedness_test(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    opts: &ClosednessOptions,
) -> Result<ClosednessReport> {
    if opts.resolution < 3 {
        return Err(GeomError::Config(format!(
            "grid resolution must be at least 3 per axis, got {}",
            opts.resolution
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(GeomError::Config("closedness tolerance must be positive".into()));
    }
    let form = flat(metric, field)?;
    let region = sample_box(metric)?;
    let points = grid_points(&grid_axes(&region, opts.resolution));

    let values: Vec<f64> = points
        .par_iter()
        .map(|p| {
            curl_components(metric, &form, p).map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        })
        .collect::<Result<_>>()?;
    // sequential reduction, first maximum wins
    let (mut worst, mut worst_idx) = (0.0f64, 0usize);
    for (i, v) in values.iter().enumerate() {
        if *v > worst {
            worst = *v;
            worst_idx = i;
        }
    }

    let mut loops = Vec::new();
    let dim = metric.dim();
    for i in 0..dim {
        for j in (i + 1)..dim {
            loops.push(loop_integral(metric, &form, &region, (i, j), opts.resolution)?);
        }
    }

    Ok(ClosednessReport {
        field: field.name().to_string(),
        metric: metric.name().to_string(),
        resolution: opts.resolution,
        tol: opts.tol,
        max_curl_residual: worst,
        worst_point: points[worst_idx].as_slice().to_vec(),
        loop_integrals: loops,
        is_closed: worst <= opts.tol,
    })
}

fn loop_integral(
    metric: &MetricChart,
    form: &Covector,
    region: &Domain,
    (i, j): (usize, usize),
    resolution: usize,
) -> Result<LoopIntegral> {
    let center = region.center();
    let (a0, a1) = region.bounds[i];
    let (b0, b1) = region.bounds[j];
    let at = |u: f64, v: f64| {
        let mut p = center.clone();
        p[i] = u;
        p[j] = v;
        p
    };
    let tol = 1e-12;
    // counterclockwise in the (i, j) plane
    let bottom = quad::integrate(|s| Ok(form.eval(&at(s, b0))?[i]), a0, a1, tol)?;
    let right = quad::integrate(|s| Ok(form.eval(&at(a1, s))?[j]), b0, b1, tol)?;
    let top = quad::integrate(|s| Ok(form.eval(&at(s, b1))?[i]), a1, a0, tol)?;
    let left = quad::integrate(|s| Ok(form.eval(&at(a0, s))?[j]), b1, b0, tol)?;
    let circulation = bottom + right + top + left;

    // composite Simpson (odd node count) or trapezoid of the curl component
    let n = resolution;
    let weights = |k: usize| -> f64 {
        if n % 2 == 1 {
            if k == 0 || k == n - 1 {
                1.0 / 3.0
            } else if k % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            }
        } else if k == 0 || k == n - 1 {
            0.5
        } else {
            1.0
        }
    };
    let du = (a1 - a0) / (n - 1) as f64;
    let dv = (b1 - b0) / (n - 1) as f64;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|kv| {
            let v = b0 + dv * kv as f64;
            let mut row = 0.0;
            for ku in 0..n {
                let u = a0 + du * ku as f64;
                let c = curl_components(metric, form, &at(u, v))?;
                row += weights(ku) * c[pair_index(metric.dim(), i, j)];
            }
            Ok(row * weights(kv))
        })
        .collect::<Result<_>>()?;
    let flux = rows.iter().sum::<f64>() * du * dv;

    Ok(LoopIntegral {
        plane: (i, j),
        lower: vec![a0, b0],
        upper: vec![a1, b1],
        circulation,
        flux,
    })
}

/// Position of the pair (i, j), i < j, in the lexicographic list of pairs.
fn pair_index(dim: usize, i: usize, j: usize) -> usize {
    (0..i).map(|r| dim - 1 - r).sum::<usize>() + (j - i - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialOptions {
    pub closedness: ClosednessOptions,
    /// Absolute tolerance of each line integral.
    pub quad_tol: f64,
}

impl Default for PotentialOptions {
    fn default() -> Self {
        PotentialOptions {
            closedness: ClosednessOptions::default(),
            quad_tol: 1e-11,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RecoveredPotential {
    pub factor: ConformalFactor,
    pub base_point: Point,
    /// Sup over check points of |∇u − X♭| for the recovered `u`.
    pub verification_residual: f64,
    pub verification_bound: f64,
    pub closedness: ClosednessReport,
}

/// Line integral of `X♭` along the axis-ordered staircase from `base` to `x`.
fn staircase(form: &Covector, base: &Point, x: &Point, tol: f64) -> Result<f64> {
    let mut corner = base.clone();
    let mut total = 0.0;
    for k in 0..x.len() {
        if corner[k] != x[k] {
            let c = corner.clone();
            total += quad::integrate(
                |s| {
                    let mut p = c.clone();
                    p[k] = s;
                    Ok(form.eval(&p)?[k])
                },
                c[k],
                x[k],
                tol,
            )?;
            corner[k] = x[k];
        }
    }
    Ok(total)
}

/// Recover `u` with `du = X♭` and `u(base) = 0`. Refuses unless the field
/// passes the closedness test.
pub fn recover_potential(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    base: &Point,
    opts: &PotentialOptions,
) -> Result<RecoveredPotential> {
    let report = closedness_test(metric, field, &opts.closedness)?;
    potential_from_report(metric, field, base, opts, report)
}

pub(crate) fn potential_from_report(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    base: &Point,
    opts: &PotentialOptions,
    report: ClosednessReport,
) -> Result<RecoveredPotential> {
    if !report.is_closed {
        return Err(GeomError::NotClosed {
            residual: report.max_curl_residual,
            tol: report.tol,
        });
    }
    if !metric.domain().contains(base.as_slice()) {
        return Err(GeomError::outside(base.as_slice(), 0.0));
    }
    let form = flat(metric, field)?;
    let domain = metric.domain().clone();
    let (b, f, tol) = (base.clone(), form.clone(), opts.quad_tol);
    let grad_form = form.clone();
    let factor = ConformalFactor::new(format!("potential({})", field.name()), move |x| {
        if !domain.contains(x.as_slice()) {
            return Err(GeomError::outside(x.as_slice(), 0.0));
        }
        staircase(&f, &b, x, tol)
    })
    .with_gradient(move |x| grad_form.eval(x));

    // check ∇u = X♭ at interior points with a fourth-order stencil
    let region = sample_box(metric)?.shrink_fraction(0.1)?;
    let checks = grid_points(&grid_axes(&region, 3));
    let h = 1e-3 * region.diameter().max(1e-3);
    let defects: Vec<f64> = checks
        .par_iter()
        .map(|p| {
            let w = form.eval(p)?;
            let mut worst = 0.0f64;
            for k in 0..p.len() {
                let at = |s: f64| {
                    let mut q = p.clone();
                    q[k] += s;
                    factor.value(&q)
                };
                let d = (at(-2.0 * h)? - 8.0 * at(-h)? + 8.0 * at(h)? - at(2.0 * h)?) / (12.0 * h);
                worst = worst.max((d - w[k]).abs());
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let defect = defects.iter().fold(0.0f64, |m, v| m.max(*v));
    let bound = 10.0 * opts.quad_tol / h + 1e-9 + report.max_curl_residual * metric.domain().diameter();
    if defect > bound {
        return Err(GeomError::PotentialVerification { defect, bound });
    }
    Ok(RecoveredPotential {
        factor,
        base_point: base.clone(),
        verification_residual: defect,
        verification_bound: bound,
        closedness: report,
    })
}

impl Domain {
    /// Shrink each axis by `frac` of its length on both sides.
    pub fn shrink_fraction(&self, frac: f64) -> Result<Domain> {
        Domain::new(
            self.bounds
                .iter()
                .map(|(lo, hi)| (lo + frac * (hi - lo), hi - frac * (hi - lo)))
                .collect(),
        )
    }
}

/// `φ(p, t)`: follow `X` for time `t` (negative allowed) inside `domain`.
pub fn flow(field: &VectorFieldSpec, domain: &Domain, p: &Point, t: f64, tol: f64) -> Result<Point> {
    if !domain.contains(p.as_slice()) {
        return Err(GeomError::outside(p.as_slice(), 0.0));
    }
    let rhs = |_: f64, y: &DVector<f64>| {
        if !domain.contains(y.as_slice()) {
            return Err(GeomError::outside(y.as_slice(), 0.0));
        }
        field.eval(y)
    };
    let traj = ode::integrate(rhs, 0.0, p.clone(), t, &OdeOptions::with_tol(tol), |_| {})?;
    let (t_end, y) = traj.last();
    match traj.termination {
        Termination::Completed => Ok(y.clone()),
        Termination::Boundary => Err(GeomError::DomainExit {
            exit_time: t_end,
            point: y.as_slice().to_vec(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn unit_square() -> MetricChart {
        MetricChart::euclidean(2).with_domain(Domain::cube(2, -1.0, 1.0))
    }

    #[test]
    fn flat_examples() {
        let rot = VectorFieldSpec::rotation(2, 1.0);
        let w = flat(&MetricChart::euclidean(2), &rot).unwrap();
        assert_eq!(w.eval(&p(&[0.3, 0.7])).unwrap(), p(&[-0.7, 0.3]));

        let w = flat(&MetricChart::half_plane(), &VectorFieldSpec::translation(p(&[1.0, 0.0]))).unwrap();
        assert!((w.eval(&p(&[0.0, 2.0])).unwrap() - p(&[0.25, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn sharp_inverts_flat() {
        let g = MetricChart::sphere_stereographic(2);
        let x = VectorFieldSpec::parse("x", &["sin(y) + x".into(), "x*y - 1".into()]).unwrap();
        let back = sharp(&g, &flat(&g, &x).unwrap()).unwrap();
        for k in 0..100 {
            let t = k as f64 * 0.1;
            let q = p(&[t.cos() * 1.5, (1.3 * t).sin()]);
            assert!((back.eval(&q).unwrap() - x.eval(&q).unwrap()).amax() <= 1e-10);
        }
    }

    #[test]
    fn closedness_examples() {
        let g = unit_square();
        let radial = closedness_test(&g, &VectorFieldSpec::radial(2, 1.0), &Default::default()).unwrap();
        assert!(radial.is_closed && radial.max_curl_residual <= 1e-8);

        let rot = closedness_test(&g, &VectorFieldSpec::rotation(2, 1.0), &Default::default()).unwrap();
        assert!(!rot.is_closed);
        assert!((rot.max_curl_residual - 2.0).abs() < 1e-6);

        // X = ∇(sin x cos y)
        let grad = VectorFieldSpec::parse("g", &["cos(x)*cos(y)".into(), "-sin(x)*sin(y)".into()]).unwrap();
        let r = closedness_test(&g, &grad, &ClosednessOptions { resolution: 33, tol: 1e-6 }).unwrap();
        assert!(r.is_closed, "{}", r.max_curl_residual);

        assert!(matches!(
            closedness_test(&g, &grad, &ClosednessOptions { resolution: 2, tol: 1e-6 }),
            Err(GeomError::Config(_))
        ));
    }

    #[test]
    fn green_theorem_witness() {
        let g = unit_square();
        for field in [
            VectorFieldSpec::rotation(2, 1.0),
            VectorFieldSpec::parse("w", &["y^3 + sin(x*y)".into(), "x*exp(y)".into()]).unwrap(),
        ] {
            let r = closedness_test(&g, &field, &ClosednessOptions { resolution: 65, tol: 1e-6 }).unwrap();
            let l = &r.loop_integrals[0];
            assert!(
                (l.circulation - l.flux).abs() <= 1e-4 * l.circulation.abs(),
                "{} vs {}",
                l.circulation,
                l.flux
            );
        }
    }

    #[test]
    fn potential_examples() {
        let g = unit_square();
        let origin = p(&[0.0, 0.0]);
        let pot = recover_potential(&g, &VectorFieldSpec::radial(2, 1.0), &origin, &Default::default()).unwrap();
        for q in [p(&[0.5, -0.3]), p(&[-0.9, 0.9]), p(&[0.1, 0.0])] {
            let oracle = 0.5 * q.norm_squared();
            assert!((pot.factor.value(&q).unwrap() - oracle).abs() < 1e-8);
        }
        let zero = recover_potential(&g, &VectorFieldSpec::zero(2), &origin, &Default::default()).unwrap();
        assert_eq!(zero.factor.value(&p(&[0.4, 0.4])).unwrap(), 0.0);

        let err = recover_potential(&g, &VectorFieldSpec::rotation(2, 1.0), &origin, &Default::default());
        assert!(matches!(err, Err(GeomError::NotClosed { .. })));

        assert!(pot.factor.value(&p(&[2.0, 0.0])).unwrap_err().is_domain());
    }

    #[test]
    fn potential_of_metric_gradient_in_curved_chart() {
        // X = ∇_g u on the sphere chart: X♭ = du, so the potential is u up to a constant.
        let g = MetricChart::sphere_stereographic(2).with_domain(Domain::cube(2, -1.0, 1.0));
        let u = ConformalFactor::parse("x^2*y + cos(y)", 2).unwrap();
        let x = VectorFieldSpec::gradient_of(&g, &u);
        let base = p(&[0.2, -0.1]);
        let pot = recover_potential(&g, &x, &base, &Default::default()).unwrap();
        let u0 = u.value(&base).unwrap();
        for q in [p(&[0.5, 0.5]), p(&[-0.8, 0.3]), p(&[0.0, -0.9])] {
            let diff = pot.factor.value(&q).unwrap() - (u.value(&q).unwrap() - u0);
            assert!(diff.abs() < 1e-6);
        }
    }

    #[test]
    fn flow_examples() {
        let d = Domain::cube(2, -10.0, 10.0);
        let rot = VectorFieldSpec::rotation(2, 1.0);
        let q = flow(&rot, &d, &p(&[1.0, 0.0]), FRAC_PI_2, 1e-10).unwrap();
        assert!((q - p(&[0.0, 1.0])).norm() < 1e-8);

        let q = flow(&VectorFieldSpec::zero(2), &d, &p(&[0.3, 0.4]), 5.0, 1e-10).unwrap();
        assert_eq!(q, p(&[0.3, 0.4]));

        let down = VectorFieldSpec::translation(p(&[0.0, -1.0]));
        let q = flow(&down, &d, &p(&[0.0, 0.0]), 2.0, 1e-10).unwrap();
        assert!((q - p(&[0.0, -2.0])).norm() < 1e-12);

        match flow(&down, &Domain::cube(2, -1.0, 1.0), &p(&[0.0, 0.0]), 2.0, 1e-10) {
            Err(GeomError::DomainExit { exit_time, .. }) => assert!((exit_time - 1.0).abs() < 1e-6),
            other => panic!("expected exit, got {other:?}"),
        }
    }

    #[test]
    fn pair_indices() {
        assert_eq!(pair_index(3, 0, 1), 0);
        assert_eq!(pair_index(3, 0, 2), 1);
        assert_eq!(pair_index(3, 1, 2), 2);
        assert_eq!(pair_index(4, 2, 3), 5);
    }
}
