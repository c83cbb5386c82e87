//! Built-in verification suites.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use solitonlab::equivalence::{certify_proposition, decide, demonstrate_surface_gap, seeded_start, CertifyOptions, VerdictKind};
use solitonlab::fields::{ClosednessOptions, PotentialOptions};
use solitonlab::hypersurface::{self, rotational_profile, ImmersedPatch, ProfileStart};
use solitonlab::soliton::{
    count_intersections, integrate_soliton, integrate_soliton_both_ways, stationarity_check, SolitonOptions,
};
use solitonlab::{ConformalFactor, CurveState, Domain, MetricChart, Point, SolitonCurve, VectorFieldSpec};

use crate::error::CliError;

pub const VERIFY_SCHEMA: &str = "solitonlab.verify/1";

/// Preset for the two interleaved yin-yang curves.
pub const FIGURE1_PRESET: &str = include_str!("../presets/figure1.toml");

pub const SUITES: &[(&str, u32, &str)] = &[
    ("gradient-criterion", 1, "rotation is not a gradient, the radial field is"),
    ("sign-pin", 2, "circle and spheres under X(p) = p"),
    ("grim-reaper", 3, "translating curve against y = -ln cos x"),
    ("proposition-bridge", 4, "solitons of grad u are minimal for exp(-2u)g"),
    ("weyl-geodesics", 5, "yin-yang curves are Weyl geodesics"),
    ("figure1", 6, "two yin-yang curves meet at most once"),
    ("stationarity", 7, "the X-flow moves the curve with MCF normal speed"),
    ("dimension-4", 8, "criterion and residual suites in R^4"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub seed: u64,
    /// Tolerances are divided by this.
    pub tighten: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { seed: 0, tighten: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bound {
    /// `value ≤ limit`, tightened.
    AtMost { limit: f64 },
    /// `|value − target| ≤ tol`, tol tightened.
    Near { target: f64, tol: f64 },
    /// `value == expected` for counts and flags; not tightened.
    Exact { expected: f64 },
    /// `value ≤ max` for counts; not tightened.
    CountAtMost { max: f64 },
}

impl Bound {
    fn tightened(self, f: f64) -> Bound {
        match self {
            Bound::AtMost { limit } => Bound::AtMost { limit: limit / f },
            Bound::Near { target, tol } => Bound::Near { target, tol: tol / f },
            b => b,
        }
    }

    fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost { limit } => v <= limit,
            Bound::Near { target, tol } => (v - target).abs() <= tol,
            Bound::Exact { expected } => v == expected,
            Bound::CountAtMost { max } => v <= max,
        }
    }

    fn describe(&self) -> String {
        match *self {
            Bound::AtMost { limit } => format!("<= {limit:e}"),
            Bound::Near { target, tol } => format!("{target} ± {tol:e}"),
            Bound::Exact { expected } => format!("== {expected}"),
            Bound::CountAtMost { max } => format!("<= {max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub check: String,
    /// `None` when the computation failed.
    pub value: Option<f64>,
    pub bound: Bound,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub criterion: u32,
    pub description: String,
    pub pass: bool,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub schema: String,
    pub seed: u64,
    pub tighten: f64,
    pub pass: bool,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn human(&self) -> String {
        let mut s = String::new();
        for suite in &self.suites {
            let _ = writeln!(
                s,
                "[{}] criterion {} {}: {}",
                if suite.pass { "pass" } else { "FAIL" },
                suite.criterion,
                suite.name,
                suite.description
            );
            for r in &suite.rows {
                let v = r.value.map_or("error".into(), |v| format!("{v:e}"));
                let _ = writeln!(
                    s,
                    "    {} {}: {} (want {}){}",
                    if r.pass { "pass" } else { "fail" },
                    r.check,
                    v,
                    r.bound.describe(),
                    r.note.as_ref().map_or(String::new(), |n| format!(" [{n}]"))
                );
            }
        }
        let failed = self.suites.iter().filter(|s| !s.pass).count();
        let _ = writeln!(
            s,
            "{} of {} suites passed{}",
            self.suites.len() - failed,
            self.suites.len(),
            if self.tighten != 1.0 {
                format!(" (tolerances tightened {}x)", self.tighten)
            } else {
                String::new()
            }
        );
        s
    }
}

/// Suite names with `all` expanded; unknown names are a usage error.
pub fn expand(names: &[String]) -> Result<Vec<&'static str>, CliError> {
    let mut out: Vec<&'static str> = Vec::new();
    for n in names {
        if n == "all" {
            for (s, _, _) in SUITES {
                if !out.contains(s) {
                    out.push(s);
                }
            }
            continue;
        }
        let hit = SUITES
            .iter()
            .find(|(s, c, _)| s == n || *n == format!("c{c}") || *n == c.to_string())
            .ok_or_else(|| {
                let known: Vec<&str> = SUITES.iter().map(|s| s.0).collect();
                CliError::Usage(format!("unknown suite `{n}`; known suites: all, {}", known.join(", ")))
            })?;
        if !out.contains(&hit.0) {
            out.push(hit.0);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no suites selected".into()));
    }
    Ok(out)
}

pub fn run_all(names: &[&str], settings: &Settings) -> Result<VerifyReport, CliError> {
    let suites = names
        .par_iter()
        .map(|n| run_suite(n, settings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VerifyReport {
        schema: VERIFY_SCHEMA.into(),
        seed: settings.seed,
        tighten: settings.tighten,
        pass: suites.iter().all(|s| s.pass),
        suites,
    })
}

/// Rows collected by a suite body.
struct Rows {
    tighten: f64,
    rows: Vec<Row>,
}

impl Rows {
    fn push(&mut self, check: impl Into<String>, value: solitonlab::Result<f64>, bound: Bound) {
        let bound = bound.tightened(self.tighten);
        let row = match value {
            Ok(v) => Row {
                check: check.into(),
                value: Some(v),
                bound,
                pass: bound.holds(v),
                note: None,
            },
            Err(e) => Row {
                check: check.into(),
                value: None,
                bound,
                pass: false,
                note: Some(e.to_string()),
            },
        };
        self.rows.push(row);
    }

    fn flag(&mut self, check: impl Into<String>, value: solitonlab::Result<bool>) {
        self.push(check, value.map(|b| if b { 1.0 } else { 0.0 }), Bound::Exact { expected: 1.0 });
    }
}

pub fn run_suite(name: &str, settings: &Settings) -> Result<SuiteResult, CliError> {
    let (name, criterion, description) = *SUITES
        .iter()
        .find(|(s, _, _)| *s == name)
        .ok_or_else(|| CliError::Usage(format!("unknown suite `{name}`")))?;
    let mut rows = Rows {
        tighten: settings.tighten,
        rows: Vec::new(),
    };
    match name {
        "gradient-criterion" => gradient_criterion(&mut rows, 2, 65),
        "sign-pin" => sign_pin(&mut rows, 3),
        "grim-reaper" => grim_reaper(&mut rows),
        "proposition-bridge" => proposition_bridge(&mut rows, settings.seed),
        "weyl-geodesics" => weyl_geodesics(&mut rows, settings.seed),
        "figure1" => figure1(&mut rows, settings.seed)?,
        "stationarity" => stationarity(&mut rows),
        "dimension-4" => dimension_4(&mut rows),
        _ => unreachable!("suite table and dispatch agree"),
    }
    Ok(SuiteResult {
        name: name.into(),
        criterion,
        description: description.into(),
        pass: rows.rows.iter().all(|r| r.pass),
        rows: rows.rows,
    })
}

fn p(v: &[f64]) -> Point {
    Point::from_column_slice(v)
}

fn origin(d: usize) -> Point {
    Point::zeros(d)
}

/// Sup over a grid of `|u − q − c|` with `c` the mean offset.
fn potential_error(u: &ConformalFactor, domain: &Domain, per_axis: usize) -> solitonlab::Result<f64> {
    let mut grid = vec![Vec::new()];
    for &(a, b) in &domain.bounds {
        grid = grid
            .into_iter()
            .flat_map(|pre: Vec<f64>| {
                (0..per_axis).map(move |i| {
                    let mut q = pre.clone();
                    q.push(a + (b - a) * i as f64 / (per_axis - 1) as f64);
                    q
                })
            })
            .collect();
    }
    let diffs = grid
        .par_iter()
        .map(|x| {
            let x = p(x);
            Ok(u.value(&x)? - 0.5 * x.norm_squared())
        })
        .collect::<solitonlab::Result<Vec<f64>>>()?;
    let c = diffs.iter().sum::<f64>() / diffs.len() as f64;
    Ok(diffs.iter().fold(0.0f64, |m, d| m.max((d - c).abs())))
}

// criterion 1 (and its dimension-4 rerun)
fn gradient_criterion(rows: &mut Rows, dim: usize, resolution: usize) {
    let m = MetricChart::euclidean(dim).with_domain(Domain::cube(dim, -1.0, 1.0));
    let opts = PotentialOptions {
        closedness: ClosednessOptions {
            resolution,
            tol: 1e-6,
        },
        ..Default::default()
    };
    let tag = format!("R^{dim}, grid {resolution}^{dim}");
    match decide(&m, &VectorFieldSpec::rotation(dim, 1.0), &opts) {
        Ok(v) => {
            rows.flag(format!("rotation is NOT_GRADIENT ({tag})"), Ok(v.kind == VerdictKind::NotGradient));
            rows.push(
                format!("rotation witness residual ({tag})"),
                Ok(v.witness.max_curl_residual),
                Bound::Near { target: 2.0, tol: 1e-5 },
            );
        }
        Err(e) => rows.flag(format!("rotation is NOT_GRADIENT ({tag})"), Err(e)),
    }
    match decide(&m, &VectorFieldSpec::radial(dim, 1.0), &opts) {
        Ok(v) => {
            rows.flag(format!("radial field is GRADIENT ({tag})"), Ok(v.kind == VerdictKind::Gradient));
            let err = match &v.potential {
                Some(u) => potential_error(u, m.domain(), resolution),
                None => Err(solitonlab::GeomError::InsufficientData("no potential recovered".into())),
            };
            rows.push(
                format!("potential vs |p|^2/2 after constant alignment ({tag})"),
                err,
                Bound::AtMost { limit: 1e-6 },
            );
        }
        Err(e) => rows.flag(format!("radial field is GRADIENT ({tag})"), Err(e)),
    }
}

fn sphere_rows(rows: &mut Rows, dim: usize, per_axis: usize) {
    let m = MetricChart::euclidean(dim);
    let x = VectorFieldSpec::radial(dim, 1.0);
    let res = |r: f64| -> solitonlab::Result<f64> {
        let patch = ImmersedPatch::sphere(origin(dim), r)?;
        Ok(hypersurface::soliton_residual(&m, &x, &patch, &patch.grid(per_axis, 0.02))?.sup)
    };
    rows.push(
        format!("unit sphere S^{} residual", dim - 1),
        res(1.0),
        Bound::AtMost { limit: 1e-6 },
    );
    rows.push(
        format!("radius-2 sphere S^{} residual", dim - 1),
        res(2.0),
        Bound::Near { target: 1.5, tol: 1e-3 },
    );
}

// criterion 2
fn sign_pin(rows: &mut Rows, sphere_dim: usize) {
    let m = MetricChart::euclidean(2);
    let x = VectorFieldSpec::radial(2, 1.0);
    rows.push(
        "unit circle patch residual",
        ImmersedPatch::circle(origin(2), 1.0)
            .and_then(|c| hypersurface::soliton_residual(&m, &x, &c, &c.grid(65, 0.02)))
            .map(|r| r.sup),
        Bound::AtMost { limit: 1e-6 },
    );
    let traced = integrate_soliton(
        &m,
        &x,
        &CurveState::new(p(&[1.0, 0.0]), p(&[0.0, 1.0])),
        2.0 * PI,
        &SolitonOptions::default(),
    )
    .map(|c| c.samples.iter().fold(0.0f64, |e, s| e.max((p(&s.x).norm() - 1.0).abs())));
    rows.push("traced curve stays on the unit circle", traced, Bound::AtMost { limit: 1e-6 });
    sphere_rows(rows, sphere_dim, 9);
}

fn grim_reaper_curve() -> solitonlab::Result<SolitonCurve> {
    let m = MetricChart::euclidean(2);
    let x = VectorFieldSpec::translation(p(&[0.0, -1.0]));
    let start = CurveState::new(p(&[0.0, 0.0]), p(&[1.0, 0.0]));
    integrate_soliton_both_ways(&m, &x, &start, 2.6, &SolitonOptions::default())
}

// criterion 3
fn grim_reaper(rows: &mut Rows) {
    let curve = grim_reaper_curve();
    let err = curve.as_ref().map_err(Clone::clone).map(|c| {
        c.samples
            .iter()
            .filter(|s| s.x[0].abs() <= 1.4)
            .fold(0.0f64, |e, s| e.max((s.x[1] + s.x[0].cos().ln()).abs()))
    });
    let covered = curve.as_ref().map_err(Clone::clone).map(|c| {
        let lo = c.samples.iter().map(|s| s.x[0]).fold(f64::INFINITY, f64::min);
        let hi = c.samples.iter().map(|s| s.x[0]).fold(f64::NEG_INFINITY, f64::max);
        lo <= -1.4 && hi >= 1.4
    });
    rows.flag("curve covers |x| <= 1.4", covered);
    rows.push("sup |y + ln cos x| over |x| <= 1.4 (rtol 1e-9)", err, Bound::AtMost { limit: 1e-6 });
}

// criterion 4
fn proposition_bridge(rows: &mut Rows, seed: u64) {
    let m = MetricChart::euclidean(2);
    let u = ConformalFactor::parse("-y", 2);
    let opts = CertifyOptions {
        seed,
        ..Default::default()
    };
    match u.and_then(|u| certify_proposition(&m, &u, &opts, &ClosednessOptions::default())) {
        Ok(rep) => {
            rows.push("curves evaluated", Ok(rep.rows.len() as f64), Bound::Exact { expected: 5.0 });
            for r in &rep.rows {
                rows.push(
                    format!("curve {} g-bar geodesic residual (u = -y)", r.index),
                    Ok(r.secondary_residual),
                    Bound::AtMost { limit: 1e-5 },
                );
            }
        }
        Err(e) => rows.push("certify u = -y", Err(e), Bound::Exact { expected: 5.0 }),
    }
    conformal_sphere_row(rows, 3, 9);
}

fn conformal_sphere_row(rows: &mut Rows, dim: usize, per_axis: usize) {
    let m = MetricChart::euclidean(dim);
    let src = (1..=dim).map(|k| format!("x{k}^2")).collect::<Vec<_>>().join(" + ");
    let hbar = ConformalFactor::parse(&format!("({src})/2"), dim).and_then(|u| {
        let patch = ImmersedPatch::sphere(origin(dim), 1.0)?;
        Ok(hypersurface::conformal_mean_curvature_sup(&m, &u, &patch, &patch.grid(per_axis, 0.02))?.sup)
    });
    rows.push(
        format!("|H-bar| on the unit sphere in R^{dim}, u = |p|^2/2"),
        hbar,
        Bound::AtMost { limit: 1e-6 },
    );
}

// criterion 5
fn weyl_geodesics(rows: &mut Rows, seed: u64) {
    let x = VectorFieldSpec::rotation(2, 1.0);
    let flat = CertifyOptions {
        seed,
        ..Default::default()
    };
    // curves near the north pole need the tighter tolerance
    let sphere = CertifyOptions {
        seed,
        soliton: SolitonOptions {
            rtol: 1e-11,
            atol: 1e-14,
            ..Default::default()
        },
        ..Default::default()
    };
    for (label, m, opts, limit) in [
        ("flat plane", MetricChart::euclidean(2), flat, 1e-5),
        ("sphere chart", MetricChart::sphere_stereographic(2), sphere, 1e-4),
    ] {
        match demonstrate_surface_gap(&m, &x, &opts, &ClosednessOptions::default()) {
            Ok(rep) => {
                rows.push(
                    format!("{label}: curves evaluated"),
                    Ok(rep.rows.len() as f64),
                    Bound::Exact { expected: 5.0 },
                );
                for r in &rep.rows {
                    rows.push(
                        format!("{label}: curve {} Weyl residual", r.index),
                        Ok(r.secondary_residual),
                        Bound::AtMost { limit },
                    );
                }
            }
            Err(e) => rows.push(format!("{label}: surface gap"), Err(e), Bound::Exact { expected: 5.0 }),
        }
    }
}

// criterion 6
fn figure1(rows: &mut Rows, seed: u64) -> Result<(), CliError> {
    let loaded = crate::config::from_str("presets/figure1.toml", FIGURE1_PRESET.to_string())?;
    let presets = crate::config::Presets::default();
    let resolver = crate::config::Resolver {
        source: loaded.source.clone(),
        presets: &presets,
    };
    let (m, _) = resolver.metric(&loaded.config.metric)?;
    let (x, _) = resolver.field(&loaded.config.field, &m)?;
    let spec = &loaded.config.trace;
    let count = crate::commands::trace_curves(&m, &x, spec).and_then(|c| {
        if c.len() != 2 {
            return Err(CliError::Config("figure 1 preset must have two starts".into()));
        }
        Ok(count_intersections(&c[0], &c[1], spec.intersect_tol)?.count as f64)
    });
    match count {
        Ok(v) => rows.push("preset pair: intersections", Ok(v), Bound::Exact { expected: 1.0 }),
        Err(CliError::Geom(e)) => rows.push("preset pair: intersections", Err(e), Bound::Exact { expected: 1.0 }),
        Err(e) => return Err(e),
    }

    let opts = SolitonOptions {
        rtol: spec.rtol,
        atol: spec.atol,
        max_step: spec.max_step,
    };
    let region = Domain::cube(2, -2.0, 2.0);
    let counts: Vec<solitonlab::Result<f64>> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let trace = |k: u64| integrate_soliton(&m, &x, &seeded_start(seed, k, &region), spec.length, &opts);
            let (a, b) = (trace(2 * i)?, trace(2 * i + 1)?);
            Ok(count_intersections(&a, &b, spec.intersect_tol)?.count as f64)
        })
        .collect();
    for (i, c) in counts.into_iter().enumerate() {
        rows.push(format!("seeded pair {i}: intersections"), c, Bound::CountAtMost { max: 1.0 });
    }
    Ok(())
}

// criterion 7
fn stationarity(rows: &mut Rows) {
    let m = MetricChart::euclidean(2);
    let rot = VectorFieldSpec::rotation(2, 1.0);
    let yin = integrate_soliton(
        &m,
        &rot,
        &CurveState::new(p(&[1.0, 0.0]), p(&[0.0, 1.0])),
        12.0,
        &SolitonOptions::default(),
    )
    .and_then(|c| stationarity_check(&m, &rot, &c, 1e-4));
    rows.push("yin-yang under the rotation flow, dt = 1e-4", yin, Bound::AtMost { limit: 1e-5 });
    let tr = VectorFieldSpec::translation(p(&[0.0, -1.0]));
    let grim = grim_reaper_curve().and_then(|c| stationarity_check(&m, &tr, &c, 1e-4));
    rows.push("grim reaper under the translation flow, dt = 1e-4", grim, Bound::AtMost { limit: 1e-5 });
}

// criterion 8
fn dimension_4(rows: &mut Rows) {
    gradient_criterion(rows, 4, 9);
    sphere_rows(rows, 4, 5);
    conformal_sphere_row(rows, 4, 5);
    let m = MetricChart::euclidean(4);
    let x = VectorFieldSpec::radial(4, 1.0);
    let prof = rotational_profile(&m, &x, ProfileStart::on_axis(-1.0), 4.0, 1e-10)
        .and_then(|(_, patch)| Ok(hypersurface::soliton_residual(&m, &x, &patch, &patch.grid(3, 0.05))?.sup));
    rows.push("rotational profile of S^3 in R^4, residual", prof, Bound::AtMost { limit: 1e-6 });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expand_names() {
        assert_eq!(expand(&["all".into()]).unwrap().len(), SUITES.len());
        assert_eq!(expand(&["c3".into(), "grim-reaper".into()]).unwrap(), vec!["grim-reaper"]);
        assert!(matches!(expand(&["nope".into()]), Err(CliError::Usage(_))));
    }

    #[test]
    fn tightening_scales_tolerances_only() {
        let b = Bound::Near { target: 2.0, tol: 1e-5 }.tightened(100.0);
        assert_eq!(b, Bound::Near { target: 2.0, tol: 1e-5 / 100.0 });
        assert_eq!(Bound::Exact { expected: 1.0 }.tightened(100.0), Bound::Exact { expected: 1.0 });
        assert!(!Bound::AtMost { limit: 1e-6 }.tightened(100.0).holds(1e-7));
    }

    #[test]
    fn failed_computation_is_a_failing_row() {
        let mut r = Rows {
            tighten: 1.0,
            rows: Vec::new(),
        };
        r.push("x", Err(solitonlab::GeomError::Degenerate("d".into())), Bound::AtMost { limit: 1.0 });
        assert!(!r.rows[0].pass);
        assert!(r.rows[0].value.is_none());
    }

    #[test]
    fn figure1_preset_parses() {
        let l = crate::config::from_str("figure1", FIGURE1_PRESET.into()).unwrap();
        assert_eq!(l.config.trace.starts.len(), 2);
        assert_eq!(l.config.trace.length, 12.0);
    }
}
