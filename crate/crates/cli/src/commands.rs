//! Subcommand implementations. Each returns an exit code or an error.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use solitonlab::equivalence::{
    self, certify_proposition, decide, demonstrate_surface_gap, CertificationReport, CertifyOptions, VerdictKind,
};
use solitonlab::fields::{ClosednessOptions, PotentialOptions};
use solitonlab::hypersurface::{self, rotational_profile, ProfileStart};
use solitonlab::io::{self, PatchRow};
use solitonlab::ode::OdeOptions;
use solitonlab::soliton::{
    count_intersections, integrate_soliton, integrate_soliton_both_ways, CurveSample, SolitonOptions,
};
use solitonlab::weyl::{integrate_weyl_geodesic, unparam_residual, AffineConnection, ResidualReport, SampledCurve};
use solitonlab::{CurveState, GeomError, MetricChart, Point, SolitonCurve, VectorFieldSpec};

use crate::config::{ConnectionKind, Format, Presets, Resolver, RunConfig, Source};
use crate::error::{CliError, EXIT_CRITERION_FALSE, EXIT_OK, EXIT_VERIFY};
use crate::svg::{self, Figure, Polyline};

pub const OUTPUT_SCHEMA: &str = "solitonlab.output/1";

/// Everything a command needs: the resolved config and where to write.
pub struct Ctx {
    pub config: RunConfig,
    pub source: Arc<Source>,
    pub presets: Presets,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

impl Ctx {
    fn resolver(&self) -> Resolver<'_> {
        Resolver {
            source: self.source.clone(),
            presets: &self.presets,
        }
    }

    /// Build the metric, recording the resolved spec in the config.
    pub fn metric(&mut self) -> Result<MetricChart, CliError> {
        let (m, spec) = self.resolver().metric(&self.config.metric)?;
        self.config.metric = spec;
        Ok(m)
    }

    pub fn field(&mut self, metric: &MetricChart) -> Result<VectorFieldSpec, CliError> {
        let (x, spec) = self.resolver().field(&self.config.field, metric)?;
        self.config.field = spec;
        Ok(x)
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.output.dir
    }

    pub fn format(&self) -> Format {
        self.config.output.format
    }

    pub fn config_toml(&self) -> String {
        toml::to_string(&self.config).unwrap_or_default()
    }

    fn metadata(&self, command: &str) -> String {
        format!("solitonlab {command}\nresolved config:\n{}", self.config_toml())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| CliError::io(&p, e))?;
        log::info!("wrote {}", p.display());
        Ok(p)
    }

    fn write_json<T: Serialize>(&self, name: &str, command: &str, result: &T) -> Result<PathBuf, CliError> {
        let env = Envelope {
            schema: OUTPUT_SCHEMA,
            command,
            config: &self.config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::io(&self.path(name), e))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_with<F>(&self, name: &str, f: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> solitonlab::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn figure(&self, title: String, caption: Vec<String>, axes: [&str; 2]) -> Figure {
        Figure {
            width: self.config.render.width,
            height: self.config.render.height,
            title,
            caption,
            axis_labels: axes.map(String::from),
            metadata: self.config_toml(),
        }
    }
}

fn point(v: &[f64], dim: usize, what: &str) -> Result<Point, CliError> {
    if v.len() != dim {
        return Err(CliError::Config(format!(
            "{what} has {} entries, chart has dimension {dim}",
            v.len()
        )));
    }
    Ok(Point::from_column_slice(v))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Indices kept by Douglas–Peucker simplification at chart distance `tol`.
pub fn simplify(xs: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let n = xs.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let dist = |p: &[f64], a: &[f64], b: &[f64]| -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(a, b)| b - a).collect();
        let len2: f64 = d.iter().map(|v| v * v).sum();
        let t = if len2 > 0.0 {
            (p.iter().zip(a).zip(&d).map(|((p, a), d)| (p - a) * d).sum::<f64>() / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        p.iter()
            .zip(a)
            .zip(&d)
            .map(|((p, a), d)| (p - a - t * d).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[n - 1] = true;
    let mut stack = vec![(0, n - 1)];
    while let Some((i, j)) = stack.pop() {
        if j <= i + 1 {
            continue;
        }
        let (k, d) = (i + 1..j)
            .map(|k| (k, dist(&xs[k], &xs[i], &xs[j])))
            .fold((i, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if d > tol {
            keep[k] = true;
            stack.push((i, k));
            stack.push((k, j));
        }
    }
    (0..n).filter(|&k| keep[k]).collect()
}

// ---- trace-soliton -----------------------------------------------------------

#[derive(Serialize)]
struct CurveSummary {
    index: usize,
    file: String,
    start: Vec<f64>,
    tangent: Vec<f64>,
    length: f64,
    samples: usize,
    written_samples: usize,
    termination: solitonlab::ode::Termination,
    max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    data: Option<Vec<CurveSample>>,
}

#[derive(Serialize)]
struct PairSummary {
    a: usize,
    b: usize,
    count: Option<usize>,
    crossings: Vec<[f64; 2]>,
    error: Option<String>,
}

#[derive(Serialize)]
struct TraceResult {
    curves: Vec<CurveSummary>,
    intersections: Vec<PairSummary>,
}

pub fn trace_curves(
    metric: &MetricChart,
    field: &VectorFieldSpec,
    spec: &crate::config::TraceSpec,
) -> Result<Vec<SolitonCurve>, CliError> {
    if spec.starts.is_empty() {
        return Err(CliError::Config("trace.starts is empty: give at least one {point, tangent}".into()));
    }
    let opts = SolitonOptions {
        rtol: spec.rtol,
        atol: spec.atol,
        max_step: spec.max_step,
    };
    let d = metric.dim();
    let states = spec
        .starts
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let x = point(&s.point, d, &format!("trace.starts[{i}].point"))?;
            let t = point(&s.tangent, d, &format!("trace.starts[{i}].tangent"))?;
            let len = metric.norm(&x, &t)?;
            if !(len > 0.0) {
                return Err(CliError::Config(format!("trace.starts[{i}].tangent is zero")));
            }
            Ok(CurveState::new(x, t / len))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    states
        .par_iter()
        .map(|st| {
            if spec.both_ways {
                integrate_soliton_both_ways(metric, field, st, spec.length, &opts)
            } else {
                integrate_soliton(metric, field, st, spec.length, &opts)
            }
        })
        .collect::<solitonlab::Result<Vec<_>>>()
        .map_err(CliError::from)
}

pub fn trace_soliton(ctx: &mut Ctx) -> Result<i32, CliError> {
    let metric = ctx.metric()?;
    let field = ctx.field(&metric)?;
    let spec = ctx.config.trace.clone();
    let curves = trace_curves(&metric, &field, &spec)?;
    let meta = ctx.metadata("trace-soliton");

    let mut summaries = Vec::new();
    for (i, c) in curves.iter().enumerate() {
        let keep = simplify(&c.samples.iter().map(|s| s.x.clone()).collect::<Vec<_>>(), spec.simplify_tol);
        let mut kept = c.clone();
        kept.samples = keep.iter().map(|&k| c.samples[k].clone()).collect();
        let name = format!("curve-{i}.csv");
        ctx.write_with(&name, |w| io::write_curve_csv(w, &kept, &meta))?;
        let st = c.start_state();
        summaries.push(CurveSummary {
            index: i,
            file: name,
            start: spec.starts[i].point.clone(),
            tangent: spec.starts[i].tangent.clone(),
            length: c.length(),
            samples: c.len(),
            written_samples: kept.len(),
            termination: c.termination,
            max_residual: c.max_residual(),
            data: (ctx.format() == Format::Json).then(|| c.samples.clone()),
        });
        println!(
            "curve {i}: start {:?}, length {:.6}, {} samples ({} written), max residual {:e}{}",
            st.x.as_slice(),
            c.length(),
            c.len(),
            kept.len(),
            c.max_residual(),
            if c.is_partial() { ", stopped at the chart boundary" } else { "" }
        );
    }

    let mut pairs = Vec::new();
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            let ps = match count_intersections(&curves[a], &curves[b], spec.intersect_tol) {
                Ok(r) => PairSummary {
                    a,
                    b,
                    count: Some(r.count),
                    crossings: r.crossings.iter().map(|c| c.point).collect(),
                    error: None,
                },
                Err(e @ (GeomError::Degenerate(_) | GeomError::DimensionMismatch { .. })) => PairSummary {
                    a,
                    b,
                    count: None,
                    crossings: Vec::new(),
                    error: Some(e.to_string()),
                },
                Err(e) => return Err(e.into()),
            };
            match (&ps.count, &ps.error) {
                (Some(n), _) => println!("curves {a} and {b}: {n} intersection(s)"),
                (None, Some(e)) => println!("curves {a} and {b}: {e}"),
                _ => {}
            }
            pairs.push(ps);
        }
    }

    if ctx.format() == Format::Svg && metric.dim() == 2 {
        let lines: Vec<Polyline> = curves
            .iter()
            .enumerate()
            .map(|(i, c)| Polyline {
                label: format!("curve {i}"),
                points: c.samples.iter().map(|s| [s.x[0], s.x[1]]).collect(),
            })
            .collect();
        let mut caption = vec![
            format!("soliton curves of {} on {}", field.name(), metric.name()),
            format!("arclength {} per curve, rtol {:e}", spec.length, spec.rtol),
        ];
        if let Some(p) = pairs.iter().find(|p| p.count.is_some()) {
            let counts: Vec<String> = pairs
                .iter()
                .map(|p| format!("{}-{}: {}", p.a, p.b, p.count.map_or("n/a".into(), |c| c.to_string())))
                .collect();
            let _ = p;
            caption.push(format!("intersections {}", counts.join(", ")));
        }
        let fig = ctx.figure("soliton curves".into(), caption, ["x1", "x2"]);
        ctx.write("trace-soliton.svg", svg::render(&lines, &fig).as_bytes())?;
    }
    ctx.write_json(
        "trace-soliton.json",
        "trace-soliton",
        &TraceResult {
            curves: summaries,
            intersections: pairs,
        },
    )?;
    Ok(EXIT_OK)
}

// ---- trace-weyl --------------------------------------------------------------

#[derive(Serialize)]
struct CurveCheck {
    file: String,
    residual: Option<ResidualReport>,
    error: Option<String>,
}

#[derive(Serialize)]
struct WeylResult {
    connection: String,
    file: String,
    samples: usize,
    termination: solitonlab::ode::Termination,
    end_point: Vec<f64>,
    residual: Option<ResidualReport>,
    curves: Vec<CurveCheck>,
}

pub fn connection(kind: ConnectionKind, metric: &MetricChart, field: &VectorFieldSpec) -> Result<AffineConnection, CliError> {
    Ok(match kind {
        ConnectionKind::Soliton => AffineConnection::soliton(metric, field)?,
        ConnectionKind::Weyl => AffineConnection::weyl(metric, field)?,
        ConnectionKind::LeviCivita => AffineConnection::levi_civita(metric),
    })
}

pub fn trace_weyl(ctx: &mut Ctx) -> Result<i32, CliError> {
    let metric = ctx.metric()?;
    let field = ctx.field(&metric)?;
    let spec = ctx.config.weyl.clone();
    let conn = connection(spec.connection, &metric, &field)?;
    let d = metric.dim();
    let checks = spec
        .curves
        .iter()
        .map(|p| {
            let f = fs::File::open(p).map_err(|e| CliError::io(p, e))?;
            let table = io::read_curve_csv(f)?;
            Ok(match unparam_residual(&conn, &table.curve) {
                Ok(r) => {
                    println!("{}: residual sup {:e}, mean {:e}", p.display(), r.sup, r.mean);
                    CurveCheck {
                        file: p.display().to_string(),
                        residual: Some(r),
                        error: None,
                    }
                }
                Err(e) => {
                    println!("{}: {e}", p.display());
                    CurveCheck {
                        file: p.display().to_string(),
                        residual: None,
                        error: Some(e.to_string()),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if spec.point.is_empty() && checks.is_empty() {
        return Err(CliError::Config("weyl.point and weyl.velocity are required (or weyl.curves)".into()));
    }
    let mut result = WeylResult {
        connection: conn.label().to_string(),
        file: String::new(),
        samples: 0,
        termination: solitonlab::ode::Termination::Completed,
        end_point: Vec::new(),
        residual: None,
        curves: checks,
    };
    if !spec.point.is_empty() {
        let x0 = point(&spec.point, d, "weyl.point")?;
        let v0 = point(&spec.velocity, d, "weyl.velocity")?;
        let opts = OdeOptions {
            rtol: spec.rtol,
            atol: spec.atol,
            max_step: spec.max_step,
            ..Default::default()
        };
        let geo = integrate_weyl_geodesic(&conn, &x0, &v0, spec.length, &opts)?;
        let meta = ctx.metadata("trace-weyl");
        ctx.write_with("weyl-geodesic.csv", |w| io::write_sampled_csv(w, &geo, &meta))?;
        let residual = if geo.len() >= 5 { Some(unparam_residual(&conn, &geo)?) } else { None };
        println!(
            "geodesic of {}: {} samples, residual {}",
            conn.label(),
            geo.len(),
            residual.as_ref().map_or("n/a".into(), |r| format!("{:e}", r.sup))
        );
        if ctx.format() == Format::Svg && d == 2 {
            let fig = ctx.figure(
                "affine geodesic".into(),
                vec![format!("{} on {}", conn.label(), metric.name())],
                ["x1", "x2"],
            );
            let line = Polyline {
                label: conn.label().into(),
                points: geo.xs.iter().map(|x| [x[0], x[1]]).collect(),
            };
            ctx.write("trace-weyl.svg", svg::render(&[line], &fig).as_bytes())?;
        }
        result.file = "weyl-geodesic.csv".into();
        result.samples = geo.len();
        result.termination = geo.termination;
        result.end_point = geo.xs.last().map(|x| x.as_slice().to_vec()).unwrap_or_default();
        result.residual = residual;
    }
    ctx.write_json("trace-weyl.json", "trace-weyl", &result)?;
    Ok(EXIT_OK)
}

// ---- gradient-check ------------------------------------------------------------

#[derive(Serialize)]
struct GradientResult {
    verdict: equivalence::VerdictSummary,
    potential_file: Option<String>,
}

fn axis_grid(domain: &solitonlab::Domain, per_axis: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for &(a, b) in &domain.bounds {
        let nodes: Vec<f64> = if per_axis <= 1 {
            vec![0.5 * (a + b)]
        } else {
            (0..per_axis).map(|i| a + (b - a) * i as f64 / (per_axis - 1) as f64).collect()
        };
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn gradient_check(ctx: &mut Ctx) -> Result<i32, CliError> {
    let metric = ctx.metric()?;
    let field = ctx.field(&metric)?;
    let spec = ctx.config.gradient.clone();
    let opts = PotentialOptions {
        closedness: ClosednessOptions {
            resolution: spec.resolution,
            tol: spec.tol,
        },
        quad_tol: spec.quad_tol,
    };
    let verdict = decide(&metric, &field, &opts)?;
    let summary = verdict.summary();
    println!(
        "{}: {:?} (sup |d(X♭)| = {:e}, tolerance {:e})",
        field.name(),
        summary.kind,
        summary.witness.max_curl_residual,
        spec.tol
    );
    let mut potential_file = None;
    if let Some(u) = &verdict.potential {
        let grid = axis_grid(metric.domain(), spec.potential_grid);
        let rows = grid
            .par_iter()
            .map(|x| {
                let v = u.value(&Point::from_column_slice(x))?;
                let mut row = x.clone();
                row.push(v);
                Ok(row)
            })
            .collect::<solitonlab::Result<Vec<_>>>()?;
        let mut header: Vec<String> = (1..=metric.dim()).map(|k| format!("x{k}")).collect();
        header.push("u".into());
        let header: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let meta = ctx.metadata("gradient-check");
        ctx.write_with("potential.csv", |w| io::write_table_csv(w, &header, &rows, &meta))?;
        potential_file = Some("potential.csv".to_string());
    }
    ctx.write_json(
        "gradient-check.json",
        "gradient-check",
        &GradientResult {
            verdict: summary.clone(),
            potential_file,
        },
    )?;
    Ok(match summary.kind {
        VerdictKind::Gradient => EXIT_OK,
        VerdictKind::NotGradient => EXIT_CRITERION_FALSE,
    })
}

// ---- certify / surface-gap -----------------------------------------------------

fn report_rows(report: &CertificationReport) -> Vec<Vec<f64>> {
    report
        .rows
        .iter()
        .map(|r| vec![r.index as f64, r.soliton_residual, r.secondary_residual, r.samples as f64])
        .collect()
}

fn emit_report(ctx: &Ctx, command: &str, report: &CertificationReport, threshold: Option<f64>) -> Result<i32, CliError> {
    let meta = ctx.metadata(command);
    let rows = report_rows(report);
    ctx.write_with(&format!("{command}.csv"), |w| {
        io::write_table_csv(w, &["index", "soliton_residual", "secondary_residual", "samples"], &rows, &meta)
    })?;
    ctx.write_json(&format!("{command}.json"), command, report)?;
    for r in &report.rows {
        println!(
            "{:>3} {}: soliton {:e}, {} {:e}",
            r.index,
            r.id,
            r.soliton_residual,
            serde_json::to_value(report.secondary).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            r.secondary_residual
        );
    }
    println!(
        "max soliton residual {:e}, max secondary residual {:e}, {} evaluated, {} dropped",
        report.summary.max_soliton_residual,
        report.summary.max_secondary_residual,
        report.summary.evaluated,
        report.summary.dropped
    );
    if let Some(t) = threshold {
        let worst = report.summary.max_secondary_residual.max(report.summary.max_soliton_residual);
        if !(worst <= t) {
            return Err(CliError::Verification(format!("residual {worst:e} exceeds threshold {t:e}")));
        }
    }
    Ok(EXIT_OK)
}

pub fn certify(ctx: &mut Ctx) -> Result<i32, CliError> {
    let metric = ctx.metric()?;
    let spec = ctx.config.certify.clone();
    let closed = ClosednessOptions {
        resolution: spec.resolution,
        tol: spec.closed_tol,
    };
    let u = match &spec.potential {
        Some(t) => ctx.resolver().potential(t, metric.dim())?,
        None => {
            let field = ctx.field(&metric)?;
            let v = decide(
                &metric,
                &field,
                &PotentialOptions {
                    closedness: closed,
                    ..Default::default()
                },
            )?;
            match v.potential {
                Some(u) => u,
                None => {
                    println!(
                        "{} is not a gradient field (sup |d(X♭)| = {:e}); nothing to certify",
                        field.name(),
                        v.witness.max_curl_residual
                    );
                    return Ok(EXIT_CRITERION_FALSE);
                }
            }
        }
    };
    let patches = spec
        .patches
        .iter()
        .map(|p| ctx.resolver().patch(p, metric.dim()))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = CertifyOptions {
        n_samples: spec.samples,
        seed: ctx.config.seed,
        length: spec.length,
        region: crate::config::region(&spec.region)?,
        soliton: SolitonOptions {
            rtol: spec.rtol,
            atol: spec.atol,
            max_step: spec.max_step,
        },
        patches,
        points_per_patch: spec.points_per_patch,
    };
    let report = certify_proposition(&metric, &u, &opts, &closed)?;
    emit_report(ctx, "certify", &report, spec.threshold)
}

pub fn surface_gap(ctx: &mut Ctx) -> Result<i32, CliError> {
    let metric = ctx.metric()?;
    let field = ctx.field(&metric)?;
    let spec = ctx.config.surface_gap.clone();
    let closed = ClosednessOptions {
        resolution: spec.resolution,
        tol: spec.closed_tol,
    };
    let opts = CertifyOptions {
        n_samples: spec.samples,
        seed: ctx.config.seed,
        length: spec.length,
        region: crate::config::region(&spec.region)?,
        soliton: SolitonOptions {
            rtol: spec.rtol,
            atol: spec.atol,
            max_step: spec.max_step,
        },
        ..Default::default()
    };
    let report = demonstrate_surface_gap(&metric, &field, &opts, &closed)?;
    emit_report(ctx, "surface-gap", &report, spec.threshold)
}

// ---- profile -------------------------------------------------------------------

#[derive(Serialize)]
struct ProfileResult {
    n: usize,
    samples: usize,
    length: f64,
    termination: solitonlab::ode::Termination,
    reached_axis: bool,
    end: [f64; 3],
    residual: hypersurface::PatchResidual,
}

pub fn profile(ctx: &mut Ctx) -> Result<i32, CliError> {
    let metric = ctx.metric()?;
    let field = ctx.field(&metric)?;
    let spec = ctx.config.profile.clone();
    let start = ProfileStart {
        r: spec.r,
        z: spec.z,
        theta: spec.theta,
    };
    let (curve, patch) = rotational_profile(&metric, &field, start, spec.length, spec.tol)?;
    let grid = patch.grid(spec.grid.max(1), 0.02);
    let residual = hypersurface::soliton_residual(&metric, &field, &patch, &grid)?;
    let rows = grid
        .par_iter()
        .map(|t| {
            let s = hypersurface::shape_data(&metric, &patch, t)?;
            let res = hypersurface::soliton_residual_at(&metric, &field, &patch, t)?;
            Ok(PatchRow {
                params: t.clone(),
                position: s.position,
                normal: s.normal,
                mean_curvature: s.mean_curvature,
                residual: res,
            })
        })
        .collect::<solitonlab::Result<Vec<_>>>()?;
    let meta = ctx.metadata("profile");
    let table: Vec<Vec<f64>> = (0..curve.s.len())
        .map(|i| vec![curve.s[i], curve.r[i], curve.z[i], curve.theta[i]])
        .collect();
    ctx.write_with("profile.csv", |w| io::write_table_csv(w, &["s", "r", "z", "theta"], &table, &meta))?;
    ctx.write_with("profile-patch.csv", |w| io::write_patch_csv(w, &rows, &meta))?;
    let last = curve.s.len() - 1;
    if ctx.format() == Format::Svg {
        let fig = ctx.figure(
            "rotational profile".into(),
            vec![format!(
                "{} in dimension {}; sup residual {:e}",
                field.name(),
                metric.dim(),
                residual.sup
            )],
            ["r", "z"],
        );
        let line = Polyline {
            label: "profile".into(),
            points: curve.r.iter().zip(&curve.z).map(|(r, z)| [*r, *z]).collect(),
        };
        ctx.write("profile.svg", svg::render(&[line], &fig).as_bytes())?;
    }
    println!(
        "profile: {} samples, arclength {:.6}, {}; residual sup {:e} over {} points",
        curve.s.len(),
        curve.s[last],
        if curve.reached_axis { "closes on the axis" } else { "open" },
        residual.sup,
        residual.samples
    );
    let threshold = spec.threshold;
    let sup = residual.sup;
    ctx.write_json(
        "profile.json",
        "profile",
        &ProfileResult {
            n: curve.n,
            samples: curve.s.len(),
            length: curve.s[last],
            termination: curve.termination,
            reached_axis: curve.reached_axis,
            end: [curve.r[last], curve.z[last], curve.theta[last]],
            residual,
        },
    )?;
    match threshold {
        Some(t) if !(sup <= t) => Err(CliError::Verification(format!("profile residual {sup:e} exceeds {t:e}"))),
        _ => Ok(EXIT_OK),
    }
}

// ---- render --------------------------------------------------------------------

pub fn render(ctx: &mut Ctx) -> Result<i32, CliError> {
    let spec = ctx.config.render.clone();
    if spec.inputs.is_empty() {
        return Err(CliError::Usage("render needs at least one curve CSV".into()));
    }
    let mut lines = Vec::new();
    for p in &spec.inputs {
        let f = fs::File::open(p).map_err(|e| CliError::io(p, e))?;
        let table = io::read_curve_csv(f)?;
        let SampledCurve { xs, .. } = table.curve;
        if xs.first().is_some_and(|x| x.len() < 2) {
            return Err(CliError::Config(format!("{}: need at least two coordinates", p.display())));
        }
        lines.push(Polyline {
            label: file_name(p),
            points: xs.iter().map(|x| [x[0], x[1]]).collect(),
        });
    }
    let caption = vec![format!(
        "{}",
        lines.iter().map(|l| format!("{} ({} points)", l.label, l.points.len())).collect::<Vec<_>>().join(", ")
    )];
    let title = spec.title.clone().unwrap_or_else(|| "curves".into());
    let fig = ctx.figure(title, caption, ["x1", "x2"]);
    let p = ctx.write(&spec.output, svg::render(&lines, &fig).as_bytes())?;
    println!("wrote {}", p.display());
    Ok(EXIT_OK)
}

pub fn verify(ctx: &mut Ctx) -> Result<i32, CliError> {
    let spec = ctx.config.verify.clone();
    let names = crate::verify::expand(&spec.suites)?;
    let settings = crate::verify::Settings {
        seed: ctx.config.seed,
        tighten: spec.tighten,
    };
    let report = crate::verify::run_all(&names, &settings)?;
    print!("{}", report.human());
    ctx.write_json("verify.json", "verify", &report)?;
    Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY })
}
