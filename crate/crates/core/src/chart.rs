//! Riemannian metrics on box-shaped coordinate charts.
//!
//! A [`MetricChart`] is a single coordinate patch: an axis-aligned box together
//! with a pointwise metric `g(x)`. Derivatives of `g` are taken from an
//! analytic callback when one is supplied and by central differences
//! otherwise. Every evaluation checks positive definiteness with a Cholesky
//! factorisation.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{GeomError, Result};
use crate::expr::{Expr, Variables};

pub type Point = DVector<f64>;

type MetricFn = Arc<dyn Fn(&Point) -> Result<DMatrix<f64>> + Send + Sync>;
type MetricDerivFn = Arc<dyn Fn(&Point) -> Result<Vec<DMatrix<f64>>> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&Point) -> Result<f64> + Send + Sync>;
type GradFn = Arc<dyn Fn(&Point) -> Result<Point> + Send + Sync>;

/// Axis-aligned box `[lo_0, hi_0] × … × [lo_{d-1}, hi_{d-1}]`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Domain {
    pub bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(GeomError::Config("domain has no axes".into()));
        }
        for (i, (lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeomError::Config(format!(
                    "domain axis {i}: need finite lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Domain { bounds })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Domain {
            bounds: vec![(lo, hi); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_with_margin(x, 0.0)
    }

    pub fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.bounds.len()
            && x
                .iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= lo + margin && *v <= hi - margin)
    }

    pub fn center(&self) -> Point {
        Point::from_iterator(self.dim(), self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)))
    }

    pub fn diameter(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| (hi - lo).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest Euclidean norm of any point of the box.
    pub fn max_norm(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn shrink(&self, margin: f64) -> Result<Domain> {
        Domain::new(
            self.bounds
                .iter()
                .map(|(lo, hi)| (lo + margin, hi - margin))
                .collect(),
        )
    }

    pub fn intersect(&self, other: &Domain) -> Result<Domain> {
        if self.dim() != other.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Domain::new(
            self.bounds
                .iter()
                .zip(&other.bounds)
                .map(|(a, b)| (a.0.max(b.0), a.1.min(b.1)))
                .collect(),
        )
    }
}

/// Finite-difference step policy: `h = base · max(1, |x|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        FdSteps {
            first: 1e-5,
            second: 1e-4,
        }
    }
}

impl FdSteps {
    pub fn first_at(&self, x: &Point) -> f64 {
        self.first * x.norm().max(1.0)
    }

    pub fn second_at(&self, x: &Point) -> f64 {
        self.second * x.norm().max(1.0)
    }
}

/// Christoffel symbols `Γ^i_jk` at one point, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.dim + j) * self.dim + k]
    }

    fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let d = self.dim;
        self.data[(i * d + j) * d + k] = v;
    }

    /// `Γ(v, w)^i = Σ_jk Γ^i_jk v^j w^k`.
    pub fn contract(&self, v: &Point, w: &Point) -> Point {
        let d = self.dim;
        Point::from_fn(d, |i, _| {
            let mut acc = 0.0;
            for j in 0..d {
                for k in 0..d {
                    acc += self.get(i, j, k) * v[j] * w[k];
                }
            }
            acc
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A Riemannian metric on a box chart.
#[derive(Clone)]
pub struct MetricChart {
    name: String,
    domain: Domain,
    g: MetricFn,
    dg: Option<MetricDerivFn>,
    steps: FdSteps,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("analytic_dg", &self.dg.is_some())
            .finish()
    }
}

impl MetricChart {
    pub fn new<F>(name: impl Into<String>, domain: Domain, g: F) -> Self
    where
        F: Fn(&Point) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    {
        MetricChart {
            name: name.into(),
            domain,
            g: Arc::new(g),
            dg: None,
            steps: FdSteps::default(),
        }
    }

    /// Attach analytic first partials: `dg(x)[k] = ∂_k g(x)`.
    pub fn with_derivatives<F>(mut self, dg: F) -> Self
    where
        F: Fn(&Point) -> Result<Vec<DMatrix<f64>>> + Send + Sync + 'static,
    {
        self.dg = Some(Arc::new(dg));
        self
    }

    /// Drop analytic derivatives so every derivative goes through finite differences.
    pub fn without_derivatives(mut self) -> Self {
        self.dg = None;
        self
    }

    pub fn with_steps(mut self, steps: FdSteps) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn steps(&self) -> FdSteps {
        self.steps
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.dg.is_some()
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_inside(&self, x: &Point, margin: f64) -> Result<()> {
        self.check_dim(x)?;
        if !self.domain.contains_with_margin(x.as_slice(), margin) {
            return Err(GeomError::outside(x.as_slice(), margin));
        }
        Ok(())
    }

    /// Raw metric evaluation: no domain or definiteness checks.
    pub(crate) fn eval_raw(&self, x: &Point) -> Result<DMatrix<f64>> {
        (self.g)(x)
    }

    /// `g(x)`, checked for domain membership and positive definiteness.
    pub fn metric_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        self.check_inside(x, 0.0)?;
        let g = self.eval_raw(x)?;
        if g.nrows() != self.dim() || g.ncols() != self.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: self.dim(),
                got: g.nrows(),
            });
        }
        let asym = (&g - g.transpose()).amax();
        if !g.iter().all(|v| v.is_finite())
            || asym > 1e-12 * g.amax().max(1.0)
            || g.clone().cholesky().is_none()
        {
            return Err(GeomError::DegenerateMetric {
                point: x.as_slice().to_vec(),
            });
        }
        Ok(g)
    }

    pub fn inverse_at(&self, x: &Point) -> Result<DMatrix<f64>> {
        let g = self.metric_at(x)?;
        g.cholesky()
            .map(|c| c.inverse())
            .ok_or_else(|| GeomError::DegenerateMetric {
                point: x.as_slice().to_vec(),
            })
    }

    /// First partials `∂_k g` at `x`.
    pub fn derivatives_at(&self, x: &Point) -> Result<Vec<DMatrix<f64>>> {
        match &self.dg {
            Some(dg) => {
                self.check_inside(x, 0.0)?;
                dg(x)
            }
            None => self.fd_derivatives(x),
        }
    }

    /// Central-difference partials, ignoring any analytic derivative data.
    pub fn fd_derivatives(&self, x: &Point) -> Result<Vec<DMatrix<f64>>> {
        let h = self.steps.first_at(x);
        self.check_inside(x, h)?;
        (0..self.dim())
            .map(|k| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                Ok((self.eval_raw(&xp)? - self.eval_raw(&xm)?) / (2.0 * h))
            })
            .collect()
    }

    pub fn inner(&self, x: &Point, v: &Point, w: &Point) -> Result<f64> {
        self.check_dim(v)?;
        self.check_dim(w)?;
        let g = self.metric_at(x)?;
        Ok(v.dot(&(g * w)))
    }

    pub fn norm(&self, x: &Point, v: &Point) -> Result<f64> {
        Ok(self.inner(x, v, v)?.max(0.0).sqrt())
    }

    /// Levi-Civita Christoffel symbols by the Koszul formula
    /// `Γ^i_jk = ½ g^{il} (∂_j g_lk + ∂_k g_lj − ∂_l g_jk)`.
    pub fn christoffel(&self, x: &Point) -> Result<Christoffel> {
        let ginv = self.inverse_at(x)?;
        let dg = self.derivatives_at(x)?;
        Ok(koszul(&ginv, &dg))
    }

    /// Gaussian curvature of a 2-dimensional chart via the Brioschi formula.
    pub fn gauss_curvature(&self, x: &Point) -> Result<f64> {
        if self.dim() != 2 {
            return Err(GeomError::UnsupportedDimension {
                required: "2".into(),
                got: self.dim(),
            });
        }
        let h = self.steps.second_at(x);
        self.check_inside(x, h)?;
        let _ = self.metric_at(x)?;
        let at = |du: f64, dv: f64| -> Result<DMatrix<f64>> {
            let mut p = x.clone();
            p[0] += du;
            p[1] += dv;
            self.eval_raw(&p)
        };
        let c = at(0.0, 0.0)?;
        let (up, um, vp, vm) = (at(h, 0.0)?, at(-h, 0.0)?, at(0.0, h)?, at(0.0, -h)?);
        let (pp, pm, mp, mm) = (at(h, h)?, at(h, -h)?, at(-h, h)?, at(-h, -h)?);

        let (e, f, g) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
        let d1 = |a: &DMatrix<f64>, b: &DMatrix<f64>, i, j| (a[(i, j)] - b[(i, j)]) / (2.0 * h);
        let e_u = d1(&up, &um, 0, 0);
        let e_v = d1(&vp, &vm, 0, 0);
        let f_u = d1(&up, &um, 0, 1);
        let f_v = d1(&vp, &vm, 0, 1);
        let g_u = d1(&up, &um, 1, 1);
        let g_v = d1(&vp, &vm, 1, 1);
        let e_vv = (vp[(0, 0)] - 2.0 * e + vm[(0, 0)]) / (h * h);
        let g_uu = (up[(1, 1)] - 2.0 * g + um[(1, 1)]) / (h * h);
        let f_uv = (pp[(0, 1)] - pm[(0, 1)] - mp[(0, 1)] + mm[(0, 1)]) / (4.0 * h * h);

        let a = Matrix3::new(
            -0.5 * e_vv + f_uv - 0.5 * g_uu,
            0.5 * e_u,
            f_u - 0.5 * e_v,
            f_v - 0.5 * g_u,
            e,
            f,
            0.5 * g_v,
            f,
            g,
        );
        let b = Matrix3::new(0.0, 0.5 * e_v, 0.5 * g_u, 0.5 * e_v, e, f, 0.5 * g_u, f, g);
        let det = e * g - f * f;
        Ok((a.determinant() - b.determinant()) / (det * det))
    }

    /// `ḡ = e^{-2u} g`.
    pub fn conformal_rescale(&self, u: &ConformalFactor) -> MetricChart {
        let base = self.clone();
        let factor = u.clone();
        let g = move |x: &Point| -> Result<DMatrix<f64>> {
            Ok(base.eval_raw(x)? * (-2.0 * factor.value(x)?).exp())
        };
        let mut out = MetricChart {
            name: format!("exp(-2*({}))*{}", u.name(), self.name),
            domain: self.domain.clone(),
            g: Arc::new(g),
            dg: None,
            steps: self.steps,
        };
        if let (Some(dg), true) = (self.dg.clone(), u.has_analytic_gradient()) {
            let base = self.clone();
            let factor = u.clone();
            out.dg = Some(Arc::new(move |x: &Point| {
                let g = base.eval_raw(x)?;
                let d = dg(x)?;
                let scale = (-2.0 * factor.value(x)?).exp();
                let du = factor.gradient(x)?;
                Ok(d.iter()
                    .enumerate()
                    .map(|(k, dk)| (dk - &g * (2.0 * du[k])) * scale)
                    .collect())
            }));
        }
        out
    }

    // ---- presets -------------------------------------------------------

    /// Flat metric `δ` on `[-100, 100]^dim`.
    pub fn euclidean(dim: usize) -> Self {
        MetricChart::new("euclidean", Domain::cube(dim, -100.0, 100.0), move |_| {
            Ok(DMatrix::identity(dim, dim))
        })
        .with_derivatives(move |_| Ok(vec![DMatrix::zeros(dim, dim); dim]))
    }

    /// Polar coordinates `(r, θ)` of the plane: `diag(1, r²)`.
    pub fn polar() -> Self {
        let domain = Domain::new(vec![(1e-3, 100.0), (-10.0, 10.0)]).expect("valid domain");
        MetricChart::new("polar", domain, |x| {
            Ok(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, x[0] * x[0]])))
        })
        .with_derivatives(|x| {
            let mut dr = DMatrix::zeros(2, 2);
            dr[(1, 1)] = 2.0 * x[0];
            Ok(vec![dr, DMatrix::zeros(2, 2)])
        })
    }

    /// Poincaré half-plane `(dx² + dy²) / y²`.
    pub fn half_plane() -> Self {
        let domain = Domain::new(vec![(-100.0, 100.0), (1e-3, 100.0)]).expect("valid domain");
        MetricChart::new("half-plane", domain, |x| {
            Ok(DMatrix::identity(2, 2) / (x[1] * x[1]))
        })
        .with_derivatives(|x| {
            let y = x[1];
            Ok(vec![
                DMatrix::zeros(2, 2),
                DMatrix::identity(2, 2) * (-2.0 / (y * y * y)),
            ])
        })
    }

    /// Round unit sphere in stereographic coordinates: `4δ / (1 + |x|²)²`.
    pub fn sphere_stereographic(dim: usize) -> Self {
        MetricChart::new(
            "sphere-stereographic",
            Domain::cube(dim, -100.0, 100.0),
            move |x| {
                let q = 1.0 + x.norm_squared();
                Ok(DMatrix::identity(dim, dim) * (4.0 / (q * q)))
            },
        )
        .with_derivatives(move |x| {
            let q = 1.0 + x.norm_squared();
            let c = -16.0 / (q * q * q);
            Ok((0..dim)
                .map(|k| DMatrix::identity(dim, dim) * (c * x[k]))
                .collect())
        })
    }

    /// Metric given by coefficient expressions `g[i][j]` in the chart variables.
    /// Only the upper triangle is read; the lower triangle mirrors it.
    /// Derivatives come from forward-mode differentiation of the expressions.
    pub fn from_exprs(name: impl Into<String>, domain: Domain, entries: Vec<Vec<Expr>>) -> Result<Self> {
        let dim = domain.dim();
        if entries.len() != dim || entries.iter().any(|row| row.len() != dim) {
            return Err(GeomError::Config(format!(
                "metric needs a {dim}x{dim} coefficient array"
            )));
        }
        if entries.iter().flatten().any(|e| e.arity() > dim) {
            return Err(GeomError::Config("metric coefficient uses too many variables".into()));
        }
        let entries = Arc::new(entries);
        let ev = entries.clone();
        let metric = MetricChart::new(name, domain, move |x| {
            Ok(DMatrix::from_fn(dim, dim, |i, j| {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                ev[a][b].eval(x.as_slice())
            }))
        })
        .with_derivatives(move |x| {
            let mut out = vec![DMatrix::zeros(dim, dim); dim];
            for i in 0..dim {
                for j in i..dim {
                    let (_, grad) = entries[i][j].eval_grad(x.as_slice());
                    for (k, dk) in out.iter_mut().enumerate() {
                        let v = grad.get(k).copied().unwrap_or(0.0);
                        dk[(i, j)] = v;
                        dk[(j, i)] = v;
                    }
                }
            }
            Ok(out)
        });
        Ok(metric)
    }

    /// Parse coefficient strings against the chart variables of `domain`.
    pub fn parse(name: impl Into<String>, domain: Domain, entries: &[Vec<String>]) -> Result<Self> {
        let vars = Variables::chart(domain.dim());
        let parsed = entries
            .iter()
            .map(|row| row.iter().map(|s| Expr::parse(s, &vars)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        MetricChart::from_exprs(name, domain, parsed)
    }

    /// Look up a built-in preset by name.
    pub fn preset(name: &str, dim: usize) -> Result<Self> {
        match name {
            "euclidean" => Ok(MetricChart::euclidean(dim)),
            "polar" if dim == 2 => Ok(MetricChart::polar()),
            "half-plane" if dim == 2 => Ok(MetricChart::half_plane()),
            "sphere-stereographic" | "sphere" => Ok(MetricChart::sphere_stereographic(dim)),
            "polar" | "half-plane" => Err(GeomError::UnsupportedDimension {
                required: "2".into(),
                got: dim,
            }),
            other => Err(GeomError::Config(format!("unknown metric preset `{other}`"))),
        }
    }
}

pub(crate) fn koszul(ginv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Christoffel {
    let d = ginv.nrows();
    let mut gamma = Christoffel::zeros(d);
    for i in 0..d {
        for j in 0..d {
            for k in j..d {
                let mut acc = 0.0;
                for l in 0..d {
                    acc += ginv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
                }
                gamma.set(i, j, k, 0.5 * acc);
                gamma.set(i, k, j, 0.5 * acc);
            }
        }
    }
    gamma
}

/// A scalar function `u` on a chart, the exponent of a conformal change.
#[derive(Clone)]
pub struct ConformalFactor {
    name: String,
    u: ScalarFn,
    grad: Option<GradFn>,
    step: f64,
}

impl fmt::Debug for ConformalFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalFactor")
            .field("name", &self.name)
            .field("analytic_grad", &self.grad.is_some())
            .finish()
    }
}

impl ConformalFactor {
    pub fn new<F>(name: impl Into<String>, u: F) -> Self
    where
        F: Fn(&Point) -> Result<f64> + Send + Sync + 'static,
    {
        ConformalFactor {
            name: name.into(),
            u: Arc::new(u),
            grad: None,
            step: 1e-5,
        }
    }

    pub fn with_gradient<F>(mut self, grad: F) -> Self
    where
        F: Fn(&Point) -> Result<Point> + Send + Sync + 'static,
    {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn without_gradient(mut self) -> Self {
        self.grad = None;
        self
    }

    pub fn zero() -> Self {
        ConformalFactor::new("0", |_| Ok(0.0)).with_gradient(|x| Ok(Point::zeros(x.len())))
    }

    /// `u` from an expression; the gradient is differentiated in forward mode.
    pub fn from_expr(expr: Expr) -> Self {
        let e2 = expr.clone();
        ConformalFactor::new(expr.source().to_string(), move |x| Ok(expr.eval(x.as_slice())))
            .with_gradient(move |x| {
                let (_, g) = e2.eval_grad(x.as_slice());
                Ok(Point::from_iterator(
                    x.len(),
                    (0..x.len()).map(|k| g.get(k).copied().unwrap_or(0.0)),
                ))
            })
    }

    pub fn parse(src: &str, dim: usize) -> Result<Self> {
        Ok(ConformalFactor::from_expr(Expr::parse(src, &Variables::chart(dim))?))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        (self.u)(x)
    }

    /// Chart gradient `∂_k u`; central differences when no analytic gradient is attached.
    pub fn gradient(&self, x: &Point) -> Result<Point> {
        match &self.grad {
            Some(g) => g(x),
            None => self.fd_gradient(x),
        }
    }

    pub fn fd_gradient(&self, x: &Point) -> Result<Point> {
        let h = self.step * x.norm().max(1.0);
        let mut out = Point::zeros(x.len());
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            out[k] = (self.value(&xp)? - self.value(&xm)?) / (2.0 * h);
        }
        Ok(out)
    }

    /// `c·u`.
    pub fn scaled(&self, c: f64) -> Self {
        let base = self.clone();
        let mut out = ConformalFactor::new(format!("{c}*({})", self.name), move |x| {
            Ok(c * base.value(x)?)
        });
        out.step = self.step;
        if self.grad.is_some() {
            let base = self.clone();
            out = out.with_gradient(move |x| Ok(base.gradient(x)? * c));
        }
        out
    }
}
