//! The gradient criterion as a decision procedure, and certification runs.
//!
//! A field `X` on a box chart is a gradient exactly when `X♭` is closed.
//! For `X = ∇u` the `X`-solitons are the minimal hypersurfaces of
//! `ḡ = e^{−2u}g`; [`certify_proposition`] measures both sides of that
//! statement on seeded samples. On surfaces the equivalence fails, but
//! soliton curves remain unparametrised geodesics of a Weyl connection;
//! [`demonstrate_surface_gap`] records that for non-gradient fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::chart::{ConformalFactor, Domain, MetricChart, Point};
use crate::error::{GeomError, Result};
use crate::fields::{self, ClosednessOptions, ClosednessReport, PotentialOptions, VectorFieldSpec};
use crate::hypersurface::{self, ImmersedPatch};
use crate::ode::Termination;
use crate::soliton::{integrate_soliton, CurveState, SolitonOptions};
use crate::weyl::{self, AffineConnection, SampledCurve};

pub const REPORT_SCHEMA: &str = "solitonlab.certification/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictKind {
    Gradient,
    NotGradient,
}

/// What a verdict means: an equivalence statement needs ambient dimension
/// at least 3; on surfaces only the criterion itself is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictScope {
    EquivalenceVerdict,
    CriterionValue,
}

impl VerdictScope {
    pub fn for_dim(dim: usize) -> Self {
        if dim >= 3 {
            VerdictScope::EquivalenceVerdict
        } else {
            VerdictScope::CriterionValue
        }
    }
}

#[derive(Clone)]
pub struct EquivalenceVerdict {
    pub kind: VerdictKind,
    pub scope: VerdictScope,
    pub potential: Option<ConformalFactor>,
    pub rescaled_metric: Option<MetricChart>,
    pub witness: ClosednessReport,
    /// `|∇u − X♭|` check of the recovered potential and its bound.
    pub potential_check: Option<(f64, f64)>,
}

/// Serialisable view of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub kind: VerdictKind,
    pub scope: VerdictScope,
    pub field: String,
    pub metric: String,
    pub potential: Option<String>,
    pub rescaled_metric: Option<String>,
    pub potential_check: Option<(f64, f64)>,
    pub witness: ClosednessReport,
}

impl EquivalenceVerdict {
    pub fn summary(&self) -> VerdictSummary {
        VerdictSummary {
            kind: self.kind,
            scope: self.scope,
            field: self.witness.field.clone(),
            metric: self.witness.metric.clone(),
            potential: self.potential.as_ref().map(|u| u.name().to_string()),
            rescaled_metric: self.rescaled_metric.as_ref().map(|m| m.name().to_string()),
            potential_check: self.potential_check,
            witness: self.witness.clone(),
        }
    }
}

/// Run the closedness test; when it passes, recover `u` with `u(centre) = 0`
/// and build `e^{−2u}g`.
pub fn decide(metric: &MetricChart, field: &VectorFieldSpec, opts: &PotentialOptions) -> Result<EquivalenceVerdict> {
    let witness = fields::closedness_test(metric, field, &opts.closedness)?;
    let scope = VerdictScope::for_dim(metric.dim());
    if !witness.is_closed {
        return Ok(EquivalenceVerdict {
            kind: VerdictKind::NotGradient,
            scope,
            potential: None,
            rescaled_metric: None,
            witness,
            potential_check: None,
        });
    }
    let base = metric.domain().center();
    let rec = fields::potential_from_report(metric, field, &base, opts, witness)?;
    let rescaled = metric.conformal_rescale(&rec.factor);
    Ok(EquivalenceVerdict {
        kind: VerdictKind::Gradient,
        scope,
        potential: Some(rec.factor),
        rescaled_metric: Some(rescaled),
        potential_check: Some((rec.verification_residual, rec.verification_bound)),
        witness: rec.closedness,
    })
}

/// Seeded curve sampling: stream `index` of a ChaCha8 generator keyed by
/// `seed` draws a start point uniformly in `region` and a tangent angle.
pub fn seeded_start(seed: u64, index: u64, region: &Domain) -> CurveState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let x = Point::from_iterator(region.dim(), region.bounds.iter().map(|(lo, hi)| rng.random_range(*lo..*hi)));
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut t = Point::zeros(region.dim());
    t[0] = angle.cos();
    t[1] = angle.sin();
    CurveState::new(x, t)
}

/// Parameter points drawn uniformly from the inner 90% of a patch box.
pub fn seeded_parameters(seed: u64, index: u64, patch: &ImmersedPatch, count: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..count)
        .map(|_| {
            patch
                .bounds()
                .iter()
                .map(|(a, b)| {
                    let w = b - a;
                    rng.random_range(a + 0.05 * w..b - 0.05 * w)
                })
                .collect()
        })
        .collect()
}

/// Default sampling box: the chart domain cut to `[−1, 1]^d`, shrunk by 10%.
pub fn default_region(metric: &MetricChart) -> Result<Domain> {
    metric
        .domain()
        .intersect(&Domain::cube(metric.dim(), -1.0, 1.0))?
        .shrink_fraction(0.1)
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub n_samples: usize,
    pub seed: u64,
    /// Arclength of each sampled curve.
    pub length: f64,
    pub region: Option<Domain>,
    pub soliton: SolitonOptions,
    /// Patches tested when the chart has dimension at least 3.
    pub patches: Vec<ImmersedPatch>,
    /// Random parameter points per patch.
    pub points_per_patch: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            n_samples: 5,
            seed: 0,
            length: 3.0,
            region: None,
            soliton: SolitonOptions::default(),
            patches: Vec::new(),
            points_per_patch: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecondaryKind {
    /// Transverse geodesic defect against the Levi-Civita connection of `ḡ`.
    GbarGeodesic,
    /// Sup of `|H̄|` over the sampled parameters.
    GbarMeanCurvature,
    /// Transverse geodesic defect against the soliton Weyl connection.
    WeylGeodesic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleRow {
    pub index: usize,
    pub id: String,
    /// Curve start point and tangent, or empty for patches.
    pub start: Vec<f64>,
    pub soliton_residual: f64,
    pub secondary_residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportInputs {
    pub metric: String,
    pub field: String,
    pub potential: Option<String>,
    pub seed: u64,
    pub n_samples: usize,
    pub length: f64,
    pub rtol: f64,
    pub atol: f64,
    pub closedness_tol: f64,
    pub closedness_resolution: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub max_soliton_residual: f64,
    pub mean_soliton_residual: f64,
    pub max_secondary_residual: f64,
    pub mean_secondary_residual: f64,
    pub evaluated: usize,
    pub dropped: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub schema: String,
    pub procedure: String,
    pub inputs: ReportInputs,
    pub verdict: VerdictSummary,
    pub secondary: SecondaryKind,
    pub rows: Vec<SampleRow>,
    pub dropped: Vec<usize>,
    pub summary: ReportSummary,
}

fn summarise(rows: &[SampleRow], dropped: usize, total: usize) -> ReportSummary {
    let n = rows.len().max(1) as f64;
    ReportSummary {
        max_soliton_residual: rows.iter().fold(0.0, |m, r| m.max(r.soliton_residual)),
        mean_soliton_residual: rows.iter().map(|r| r.soliton_residual).sum::<f64>() / n,
        max_secondary_residual: rows.iter().fold(0.0, |m, r| m.max(r.secondary_residual)),
        mean_secondary_residual: rows.iter().map(|r| r.secondary_residual).sum::<f64>() / n,
        evaluated: rows.len(),
        dropped,
        total,
    }
}

/// Sample outcome: a row, or `None` when the sample left the chart.
type Outcome = Result<Option<SampleRow>>;

fn collect(outcomes: Vec<Outcome>) -> Result<(Vec<SampleRow>, Vec<usize>)> {
    let total = outcomes.len();
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o? {
            Some(r) => rows.push(r),
            None => dropped.push(i),
        }
    }
    if 2 * dropped.len() > total {
        return Err(GeomError::TooManyDropped {
            dropped: dropped.len(),
            total,
        });
    }
    Ok((rows, dropped))
}

fn curve_rows(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    against: &AffineConnection,
    opts: &CertifyOptions,
) -> Result<(Vec<SampleRow>, Vec<usize>)> {
    let region = match &opts.region {
        Some(r) => r.clone(),
        None => default_region(metric)?,
    };
    let outcomes: Vec<Outcome> = (0..opts.n_samples)
        .into_par_iter()
        .map(|i| {
            let start = seeded_start(opts.seed, i as u64, &region);
            let curve = match integrate_soliton(metric, field, &start, opts.length, &opts.soliton) {
                Ok(c) if c.termination == Termination::Completed => c,
                Ok(_) => return Ok(None),
                Err(e) if e.is_domain() => return Ok(None),
                Err(e) => return Err(e),
            };
            let rep = weyl::unparam_residual(against, &SampledCurve::from_soliton(&curve))?;
            let mut s = start.x.as_slice().to_vec();
            s.extend_from_slice(start.tangent.as_slice());
            Ok(Some(SampleRow {
                index: i,
                id: format!("curve-{i}"),
                start: s,
                soliton_residual: curve.max_residual(),
                secondary_residual: rep.sup,
                samples: curve.len(),
            }))
        })
        .collect();
    collect(outcomes)
}

fn inputs(metric: &MetricChart, field: &VectorFieldSpec, potential: Option<&ConformalFactor>, opts: &CertifyOptions, closed: &ClosednessOptions) -> ReportInputs {
    ReportInputs {
        metric: metric.name().to_string(),
        field: field.name().to_string(),
        potential: potential.map(|u| u.name().to_string()),
        seed: opts.seed,
        n_samples: opts.n_samples,
        length: opts.length,
        rtol: opts.soliton.rtol,
        atol: opts.soliton.atol,
        closedness_tol: closed.tol,
        closedness_resolution: closed.resolution,
    }
}

/// With `X = ∇u`, measure soliton residuals next to minimality in
/// `ḡ = e^{−2u}g`: geodesic defects for seeded curves on surfaces, `|H̄|`
/// for the given patches in higher dimension.
pub fn certify_proposition(
    metric: &MetricChart,
    u: &ConformalFactor,
    opts: &CertifyOptions,
    closedness: &ClosednessOptions,
) -> Result<CertificationReport> {
    let field = VectorFieldSpec::gradient_of(metric, u);
    let witness = fields::closedness_test(metric, &field, closedness)?;
    let gbar = metric.conformal_rescale(u);
    let verdict = EquivalenceVerdict {
        kind: if witness.is_closed {
            VerdictKind::Gradient
        } else {
            VerdictKind::NotGradient
        },
        scope: VerdictScope::for_dim(metric.dim()),
        potential: Some(u.clone()),
        rescaled_metric: Some(gbar.clone()),
        witness,
        potential_check: None,
    };
    let (rows, dropped, secondary) = if metric.dim() == 2 {
        let lc = AffineConnection::levi_civita(&gbar);
        let (r, d) = curve_rows(metric, &field, &lc, opts)?;
        (r, d, SecondaryKind::GbarGeodesic)
    } else {
        if opts.patches.is_empty() {
            return Err(GeomError::InsufficientData("no patches given for a chart of dimension ≥ 3".into()));
        }
        let outcomes: Vec<Outcome> = opts
            .patches
            .par_iter()
            .enumerate()
            .map(|(i, patch)| {
                let params = seeded_parameters(opts.seed, i as u64, patch, opts.points_per_patch);
                let sol = match hypersurface::soliton_residual(metric, &field, patch, &params) {
                    Ok(r) => r,
                    Err(e) if e.is_domain() => return Ok(None),
                    Err(e) => return Err(e),
                };
                let hbar = hypersurface::conformal_mean_curvature_sup(metric, u, patch, &params)?;
                Ok(Some(SampleRow {
                    index: i,
                    id: patch.name().to_string(),
                    start: Vec::new(),
                    soliton_residual: sol.sup,
                    secondary_residual: hbar.sup,
                    samples: params.len(),
                }))
            })
            .collect();
        let (r, d) = collect(outcomes)?;
        (r, d, SecondaryKind::GbarMeanCurvature)
    };
    let total = rows.len() + dropped.len();
    Ok(CertificationReport {
        schema: REPORT_SCHEMA.into(),
        procedure: "certify-proposition".into(),
        inputs: inputs(metric, &field, Some(u), opts, closedness),
        verdict: verdict.summary(),
        secondary,
        summary: summarise(&rows, dropped.len(), total),
        rows,
        dropped,
    })
}

/// For a non-gradient field on a surface: seeded soliton curves with their
/// Weyl-geodesic defects, next to the closedness witness. Gradient fields
/// are refused.
pub fn demonstrate_surface_gap(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    opts: &CertifyOptions,
    closedness: &ClosednessOptions,
) -> Result<CertificationReport> {
    if metric.dim() != 2 {
        return Err(GeomError::UnsupportedDimension {
            required: "2".into(),
            got: metric.dim(),
        });
    }
    let witness = fields::closedness_test(metric, field, closedness)?;
    if witness.is_closed {
        return Err(GeomError::Refused(format!(
            "{} is a gradient field (sup |d(X♭)| = {:e}); use certify-proposition",
            field.name(),
            witness.max_curl_residual
        )));
    }
    let verdict = EquivalenceVerdict {
        kind: VerdictKind::NotGradient,
        scope: VerdictScope::CriterionValue,
        potential: None,
        rescaled_metric: None,
        witness,
        potential_check: None,
    };
    let conn = AffineConnection::soliton(metric, field)?;
    let (rows, dropped) = curve_rows(metric, field, &conn, opts)?;
    let total = rows.len() + dropped.len();
    Ok(CertificationReport {
        schema: REPORT_SCHEMA.into(),
        procedure: "surface-gap".into(),
        inputs: inputs(metric, field, None, opts, closedness),
        verdict: verdict.summary(),
        secondary: SecondaryKind::WeylGeodesic,
        summary: summarise(&rows, dropped.len(), total),
        rows,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> Point {
        Point::from_column_slice(v)
    }

    fn unit_square() -> MetricChart {
        MetricChart::euclidean(2).with_domain(Domain::cube(2, -1.0, 1.0))
    }

    #[test]
    fn decide_examples() {
        let m = unit_square();
        let opts = PotentialOptions::default();
        let v = decide(&m, &VectorFieldSpec::zero(2), &opts).unwrap();
        assert_eq!(v.kind, VerdictKind::Gradient);
        assert_eq!(v.scope, VerdictScope::CriterionValue);
        let x = p(&[0.3, -0.6]);
        assert!(v.potential.as_ref().unwrap().value(&x).unwrap().abs() < 1e-14);
        assert_eq!(v.rescaled_metric.unwrap().metric_at(&x).unwrap(), m.metric_at(&x).unwrap());

        let v = decide(&m, &VectorFieldSpec::radial(2, 1.0), &opts).unwrap();
        assert_eq!(v.kind, VerdictKind::Gradient);
        let u = v.potential.unwrap();
        assert!((u.value(&x).unwrap() - 0.5 * x.norm_squared()).abs() <= 1e-8);
        let g = v.rescaled_metric.unwrap().metric_at(&x).unwrap();
        assert!((g[(0, 0)] - (-x.norm_squared()).exp()).abs() <= 1e-8);

        let v = decide(&m, &VectorFieldSpec::rotation(2, 1.0), &opts).unwrap();
        assert_eq!(v.kind, VerdictKind::NotGradient);
        assert!(v.potential.is_none() && v.rescaled_metric.is_none());
        assert!((v.witness.max_curl_residual - 2.0).abs() <= 1e-6);
    }

    #[test]
    fn scope_labels() {
        let m = MetricChart::euclidean(3).with_domain(Domain::cube(3, -1.0, 1.0));
        let opts = PotentialOptions {
            closedness: ClosednessOptions {
                resolution: 9,
                ..Default::default()
            },
            ..Default::default()
        };
        let v = decide(&m, &VectorFieldSpec::radial(3, 1.0), &opts).unwrap();
        assert_eq!(v.scope, VerdictScope::EquivalenceVerdict);
        assert_eq!(v.summary().kind, VerdictKind::Gradient);
    }

    #[test]
    fn grim_reaper_certification() {
        let m = MetricChart::euclidean(2);
        let u = ConformalFactor::parse("-y", 2).unwrap();
        let rep = certify_proposition(&m, &u, &CertifyOptions::default(), &ClosednessOptions::default()).unwrap();
        assert_eq!(rep.rows.len(), 5);
        assert_eq!(rep.verdict.kind, VerdictKind::Gradient);
        assert!(rep.summary.max_secondary_residual <= 1e-5);
        assert!(rep.rows.iter().all(|r| r.soliton_residual < 1e-6));
    }

    #[test]
    fn zero_potential_gives_geodesics() {
        // curves run close to the north pole, where chart-relative error
        // control needs a tighter tolerance
        let m = MetricChart::sphere_stereographic(2);
        let opts = CertifyOptions {
            soliton: SolitonOptions {
                rtol: 1e-11,
                atol: 1e-14,
                ..Default::default()
            },
            ..Default::default()
        };
        let rep = certify_proposition(&m, &ConformalFactor::zero(), &opts, &ClosednessOptions::default()).unwrap();
        assert!(rep.summary.max_secondary_residual <= 1e-5, "{:?}", rep.summary);
        assert!(rep.summary.max_soliton_residual <= 1e-5);
    }

    #[test]
    fn sphere_patch_certification() {
        let m = MetricChart::euclidean(3);
        let u = ConformalFactor::parse("(x^2 + y^2 + z^2)/2", 3).unwrap();
        let opts = CertifyOptions {
            patches: vec![ImmersedPatch::sphere(p(&[0.0, 0.0, 0.0]), 1.0).unwrap()],
            ..Default::default()
        };
        let closed = ClosednessOptions {
            resolution: 9,
            ..Default::default()
        };
        let rep = certify_proposition(&m, &u, &opts, &closed).unwrap();
        assert_eq!(rep.verdict.scope, VerdictScope::EquivalenceVerdict);
        assert!(rep.summary.max_secondary_residual <= 1e-6);
        assert!(rep.summary.max_soliton_residual <= 1e-6);
    }

    #[test]
    fn surface_gap() {
        let m = MetricChart::euclidean(2);
        let rep = demonstrate_surface_gap(&m, &VectorFieldSpec::rotation(2, 1.0), &CertifyOptions::default(), &ClosednessOptions::default())
            .unwrap();
        assert!(rep.summary.max_secondary_residual <= 1e-5);
        assert!((rep.verdict.witness.max_curl_residual - 2.0).abs() <= 1e-6);
        assert!(matches!(
            demonstrate_surface_gap(&m, &VectorFieldSpec::radial(2, 1.0), &CertifyOptions::default(), &ClosednessOptions::default()),
            Err(GeomError::Refused(_))
        ));
    }

    #[test]
    fn drops_are_counted() {
        // a small chart: most length-3 curves leave it
        let m = MetricChart::euclidean(2).with_domain(Domain::cube(2, -0.5, 0.5));
        let u = ConformalFactor::parse("-y", 2).unwrap();
        let r = certify_proposition(&m, &u, &CertifyOptions::default(), &ClosednessOptions::default());
        assert!(matches!(r, Err(GeomError::TooManyDropped { .. })));
    }

    #[test]
    fn seeding_is_reproducible() {
        let region = Domain::cube(2, -1.0, 1.0);
        assert_eq!(seeded_start(9, 3, &region), seeded_start(9, 3, &region));
        assert_ne!(seeded_start(9, 3, &region), seeded_start(9, 4, &region));
    }
}
