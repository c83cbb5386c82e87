//! Run configuration: one TOML file per run, overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use solitonlab::chart::Domain;
use solitonlab::expr::{Expr, ParseError, Variables};
use solitonlab::fields::PresetParams;
use solitonlab::hypersurface::ImmersedPatch;
use solitonlab::{ConformalFactor, MetricChart, Point, VectorFieldSpec};
use toml::Spanned;

use crate::error::CliError;

pub const PRESETS_ENV: &str = "SOLITONLAB_PRESETS";

/// An expression string that remembers where it came from.
pub type ExprText = Spanned<String>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output: OutputSpec,
    pub metric: MetricSpec,
    pub field: FieldSpec,
    pub trace: TraceSpec,
    pub weyl: WeylSpec,
    pub gradient: GradientSpec,
    pub certify: CertifySpec,
    pub surface_gap: SurfaceGapSpec,
    pub profile: ProfileSpec,
    pub verify: VerifySpec,
    pub render: RenderSpec,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub format: Format,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct MetricSpec {
    /// Built-in name or a name from the extra preset files.
    pub preset: Option<String>,
    pub dim: Option<usize>,
    /// Coefficients `g[i][j]` in the chart variables; upper triangle is read.
    pub g: Option<Vec<Vec<ExprText>>>,
    pub domain: Option<Vec<[f64; 2]>>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct FieldSpec {
    pub preset: Option<String>,
    pub omega: Option<f64>,
    pub direction: Option<Vec<f64>>,
    pub scale: Option<f64>,
    /// Components `X^i` in the chart variables.
    pub components: Option<Vec<ExprText>>,
    /// `X = ∇_g u` for this `u`.
    pub potential: Option<ExprText>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    pub point: Vec<f64>,
    pub tangent: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSpec {
    pub starts: Vec<StartSpec>,
    pub length: f64,
    pub both_ways: bool,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub intersect_tol: f64,
    /// Collinear samples closer than this to the chord are dropped from CSV.
    pub simplify_tol: f64,
}

impl Default for TraceSpec {
    fn default() -> Self {
        TraceSpec {
            starts: Vec::new(),
            length: 6.0,
            both_ways: false,
            rtol: 1e-9,
            atol: 1e-12,
            max_step: 1e-2,
            intersect_tol: 1e-3,
            simplify_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionKind {
    /// Weyl connection of `σX`, whose geodesics are the soliton curves.
    #[default]
    Soliton,
    /// Weyl connection of `X` as written.
    Weyl,
    LeviCivita,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct WeylSpec {
    pub connection: ConnectionKind,
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    pub length: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Curve CSV files whose residual against the connection is reported.
    pub curves: Vec<PathBuf>,
}

impl Default for WeylSpec {
    fn default() -> Self {
        WeylSpec {
            connection: ConnectionKind::Soliton,
            point: Vec::new(),
            velocity: Vec::new(),
            length: 3.0,
            rtol: 1e-10,
            atol: 1e-13,
            max_step: 1e-2,
            curves: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GradientSpec {
    pub resolution: usize,
    pub tol: f64,
    pub quad_tol: f64,
    /// Nodes per axis of the emitted potential table.
    pub potential_grid: usize,
}

impl Default for GradientSpec {
    fn default() -> Self {
        GradientSpec {
            resolution: 33,
            tol: 1e-6,
            quad_tol: 1e-11,
            potential_grid: 17,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PatchSpec {
    /// `sphere`, `circle`, `cylinder`, `grim-reaper-cylinder` or `custom`.
    pub kind: String,
    pub name: Option<String>,
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub height: Option<f64>,
    pub half_width: Option<f64>,
    pub bounds: Option<Vec<[f64; 2]>>,
    pub components: Option<Vec<ExprText>>,
    pub reference: Option<Vec<f64>>,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            kind: "sphere".into(),
            name: None,
            center: None,
            radius: None,
            height: None,
            half_width: None,
            bounds: None,
            components: None,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySpec {
    /// The potential `u`; when absent, the field is classified and its
    /// recovered potential is used.
    pub potential: Option<ExprText>,
    pub samples: usize,
    pub length: f64,
    pub region: Option<Vec<[f64; 2]>>,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub patches: Vec<PatchSpec>,
    pub points_per_patch: usize,
    pub resolution: usize,
    pub closed_tol: f64,
    /// Fail (exit 1) when a secondary residual exceeds this.
    pub threshold: Option<f64>,
}

impl Default for CertifySpec {
    fn default() -> Self {
        CertifySpec {
            potential: None,
            samples: 5,
            length: 3.0,
            region: None,
            rtol: 1e-9,
            atol: 1e-12,
            max_step: 1e-2,
            patches: Vec::new(),
            points_per_patch: 16,
            resolution: 33,
            closed_tol: 1e-6,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceGapSpec {
    pub samples: usize,
    pub length: f64,
    pub region: Option<Vec<[f64; 2]>>,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub resolution: usize,
    pub closed_tol: f64,
    pub threshold: Option<f64>,
}

impl Default for SurfaceGapSpec {
    fn default() -> Self {
        SurfaceGapSpec {
            samples: 5,
            length: 3.0,
            region: None,
            rtol: 1e-9,
            atol: 1e-12,
            max_step: 1e-2,
            resolution: 33,
            closed_tol: 1e-6,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSpec {
    pub r: f64,
    pub z: f64,
    /// Angle of the profile tangent with the `r` axis.
    pub theta: f64,
    pub length: f64,
    pub tol: f64,
    /// Residual grid nodes per patch axis.
    pub grid: usize,
    pub threshold: Option<f64>,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            r: 0.0,
            z: 1.0,
            theta: 0.0,
            length: 10.0,
            tol: 1e-10,
            grid: 9,
            threshold: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    pub suites: Vec<String>,
    /// Divide every tolerance by this factor.
    pub tighten: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec {
            suites: vec!["all".into()],
            tighten: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RenderSpec {
    pub inputs: Vec<PathBuf>,
    pub title: Option<String>,
    pub output: String,
    pub width: u32,
    pub height: u32,
}

impl Default for RenderSpec {
    fn default() -> Self {
        RenderSpec {
            inputs: Vec::new(),
            title: None,
            output: "render.svg".into(),
            width: 640,
            height: 640,
        }
    }
}

// ---- sources and locations -------------------------------------------------

/// Text of a config or preset file, kept for error locations.
#[derive(Debug, Clone)]
pub struct Source {
    pub label: String,
    pub text: String,
}

impl Source {
    pub fn inline(label: &str) -> Arc<Source> {
        Arc::new(Source {
            label: label.into(),
            text: String::new(),
        })
    }

    /// 1-based line and column of a byte offset.
    pub fn locate(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.text.len());
        let before = &self.text[..offset];
        let line = before.matches('\n').count() + 1;
        let col = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
        (line, col)
    }

    fn expr_error(&self, what: &str, span: Range<usize>, src: &str, e: &ParseError) -> CliError {
        if self.text.is_empty() {
            return CliError::Config(format!("{}: {what}: {e} in `{src}`", self.label));
        }
        let (line, col) = self.locate(span.start);
        // the opening quote sits at `col`
        CliError::Config(format!(
            "{}:{}:{}: {what}: {} near token `{}` in `{src}`",
            self.label,
            line,
            col + e.column,
            e.message,
            e.token
        ))
    }

    pub fn parse_expr(&self, what: &str, text: &ExprText, vars: &Variables) -> Result<Expr, CliError> {
        Expr::parse(text.get_ref(), vars).map_err(|e| self.expr_error(what, text.span(), text.get_ref(), &e))
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(source: &Source) -> Result<T, CliError> {
    toml::from_str(&source.text).map_err(|e| {
        let loc = e
            .span()
            .map(|s| {
                let (l, c) = source.locate(s.start);
                format!(":{l}:{c}")
            })
            .unwrap_or_default();
        CliError::Config(format!("{}{loc}: {}", source.label, e.message()))
    })
}

// ---- presets ---------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct PresetFile {
    metric: BTreeMap<String, MetricSpec>,
    field: BTreeMap<String, FieldSpec>,
}

/// Extra named metrics and fields from the files listed in `SOLITONLAB_PRESETS`.
#[derive(Debug, Clone, Default)]
pub struct Presets {
    metrics: BTreeMap<String, (MetricSpec, Arc<Source>)>,
    fields: BTreeMap<String, (FieldSpec, Arc<Source>)>,
}

const BUILTIN_METRICS: &[&str] = &["euclidean", "polar", "half-plane", "sphere-stereographic", "sphere"];
const BUILTIN_FIELDS: &[&str] = &["zero", "rotation", "translation", "radial"];

impl Presets {
    pub fn from_env() -> Result<Presets, CliError> {
        match std::env::var_os(PRESETS_ENV) {
            Some(v) if !v.is_empty() => {
                let paths: Vec<PathBuf> = std::env::split_paths(&v).collect();
                Presets::from_files(&paths)
            }
            _ => Ok(Presets::default()),
        }
    }

    pub fn from_files(paths: &[PathBuf]) -> Result<Presets, CliError> {
        let mut out = Presets::default();
        for path in paths {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{PRESETS_ENV}: cannot read {}: {e}", path.display())))?;
            let src = Arc::new(Source {
                label: path.display().to_string(),
                text,
            });
            let file: PresetFile = parse_toml(&src)?;
            for (name, spec) in file.metric {
                if BUILTIN_METRICS.contains(&name.as_str()) {
                    log::warn!("preset metric `{name}` in {} shadows a built-in and is ignored", src.label);
                    continue;
                }
                out.metrics.insert(name, (spec, src.clone()));
            }
            for (name, spec) in file.field {
                if BUILTIN_FIELDS.contains(&name.as_str()) {
                    log::warn!("preset field `{name}` in {} shadows a built-in and is ignored", src.label);
                    continue;
                }
                out.fields.insert(name, (spec, src.clone()));
            }
        }
        Ok(out)
    }
}

// ---- loading ---------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub source: Arc<Source>,
}

pub fn load(path: Option<&Path>) -> Result<Loaded, CliError> {
    match path {
        None => Ok(Loaded {
            config: RunConfig::default(),
            source: Source::inline("<defaults>"),
        }),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
            from_str(&p.display().to_string(), text)
        }
    }
}

pub fn from_str(label: &str, text: String) -> Result<Loaded, CliError> {
    let source = Arc::new(Source {
        label: label.into(),
        text,
    });
    let config = parse_toml(&source)?;
    Ok(Loaded { config, source })
}

fn domain_of(bounds: &[[f64; 2]], what: &str) -> Result<Domain, CliError> {
    Domain::new(bounds.iter().map(|b| (b[0], b[1])).collect())
        .map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be a positive number, got {v}")))
    }
}

impl RunConfig {
    /// Tolerances strictly positive, lengths non-negative.
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.trace;
        for (n, v) in [
            ("trace.rtol", t.rtol),
            ("trace.atol", t.atol),
            ("trace.max_step", t.max_step),
            ("trace.intersect_tol", t.intersect_tol),
            ("trace.simplify_tol", t.simplify_tol),
            ("weyl.rtol", self.weyl.rtol),
            ("weyl.atol", self.weyl.atol),
            ("weyl.max_step", self.weyl.max_step),
            ("gradient.tol", self.gradient.tol),
            ("gradient.quad_tol", self.gradient.quad_tol),
            ("certify.rtol", self.certify.rtol),
            ("certify.atol", self.certify.atol),
            ("certify.max_step", self.certify.max_step),
            ("certify.closed_tol", self.certify.closed_tol),
            ("surface_gap.rtol", self.surface_gap.rtol),
            ("surface_gap.atol", self.surface_gap.atol),
            ("surface_gap.max_step", self.surface_gap.max_step),
            ("surface_gap.closed_tol", self.surface_gap.closed_tol),
            ("profile.tol", self.profile.tol),
            ("verify.tighten", self.verify.tighten),
        ] {
            positive(n, v)?;
        }
        for (n, v) in [
            ("certify.threshold", self.certify.threshold),
            ("surface_gap.threshold", self.surface_gap.threshold),
            ("profile.threshold", self.profile.threshold),
        ] {
            if let Some(v) = v {
                positive(n, v)?;
            }
        }
        for (n, v) in [
            ("trace.length", t.length),
            ("weyl.length", self.weyl.length),
            ("certify.length", self.certify.length),
            ("surface_gap.length", self.surface_gap.length),
            ("profile.length", self.profile.length),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{n} must be non-negative, got {v}")));
            }
        }
        for (n, v) in [
            ("gradient.resolution", self.gradient.resolution),
            ("certify.resolution", self.certify.resolution),
            ("surface_gap.resolution", self.surface_gap.resolution),
        ] {
            if v < 3 {
                return Err(CliError::Config(format!("{n} must be at least 3, got {v}")));
            }
        }
        Ok(())
    }
}

/// Create the output directory and check that files can be written to it.
pub fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
    let probe = dir.join(".solitonlab-probe");
    fs::write(&probe, b"")
        .and_then(|_| fs::remove_file(&probe))
        .map_err(|e| CliError::Config(format!("output directory {} is not writable: {e}", dir.display())))
}

// ---- building geometry -------------------------------------------------------

/// Turns specs into geometry, resolving named presets.
pub struct Resolver<'a> {
    pub source: Arc<Source>,
    pub presets: &'a Presets,
}

impl Resolver<'_> {
    /// The metric and the spec with any extra preset inlined.
    pub fn metric(&self, spec: &MetricSpec) -> Result<(MetricChart, MetricSpec), CliError> {
        self.metric_at(spec, &self.source, 0)
    }

    fn metric_at(&self, spec: &MetricSpec, src: &Arc<Source>, depth: usize) -> Result<(MetricChart, MetricSpec), CliError> {
        if depth > 8 {
            return Err(CliError::Config("metric presets nest too deeply".into()));
        }
        let (chart, mut resolved) = if let Some(g) = &spec.g {
            if spec.preset.is_some() {
                return Err(CliError::Config(format!("{}: metric: give either `preset` or `g`", src.label)));
            }
            let dim = g.len();
            if spec.dim.is_some_and(|d| d != dim) {
                return Err(CliError::Config(format!("{}: metric.dim disagrees with the size of g", src.label)));
            }
            let vars = Variables::chart(dim);
            let exprs = g
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, e)| src.parse_expr(&format!("metric.g[{i}][{j}]"), e, &vars))
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let domain = match &spec.domain {
                Some(b) => domain_of(b, "metric.domain")?,
                None => Domain::cube(dim, -100.0, 100.0),
            };
            let name = spec.name.clone().unwrap_or_else(|| "custom".into());
            (MetricChart::from_exprs(name, domain, exprs)?, spec.clone())
        } else {
            let name = spec.preset.clone().unwrap_or_else(|| "euclidean".into());
            if BUILTIN_METRICS.contains(&name.as_str()) {
                let dim = spec.dim.unwrap_or(2);
                let mut m = MetricChart::preset(&name, dim)?;
                if let Some(b) = &spec.domain {
                    m = m.with_domain(domain_of(b, "metric.domain")?);
                }
                let mut r = spec.clone();
                r.preset = Some(name);
                r.dim = Some(dim);
                (m, r)
            } else if let Some((inner, isrc)) = self.presets.metrics.get(&name) {
                let (m, mut r) = self.metric_at(inner, isrc, depth + 1)?;
                if spec.dim.is_some_and(|d| d != m.dim()) {
                    return Err(CliError::Config(format!(
                        "{}: metric preset `{name}` has dimension {}",
                        src.label,
                        m.dim()
                    )));
                }
                let m = match &spec.domain {
                    Some(b) => {
                        r.domain = Some(b.clone());
                        m.with_domain(domain_of(b, "metric.domain")?)
                    }
                    None => m,
                };
                r.name = Some(spec.name.clone().unwrap_or(name.clone()));
                (m.renamed(r.name.clone().unwrap()), r)
            } else {
                return Err(CliError::Config(format!("{}: unknown metric preset `{name}`", src.label)));
            }
        };
        if let Some(n) = &spec.name {
            resolved.name = Some(n.clone());
            return Ok((chart.renamed(n.clone()), resolved));
        }
        Ok((chart, resolved))
    }

    pub fn field(&self, spec: &FieldSpec, metric: &MetricChart) -> Result<(VectorFieldSpec, FieldSpec), CliError> {
        self.field_at(spec, metric, &self.source, 0)
    }

    fn field_at(
        &self,
        spec: &FieldSpec,
        metric: &MetricChart,
        src: &Arc<Source>,
        depth: usize,
    ) -> Result<(VectorFieldSpec, FieldSpec), CliError> {
        if depth > 8 {
            return Err(CliError::Config("field presets nest too deeply".into()));
        }
        let dim = metric.dim();
        let given = [spec.preset.is_some(), spec.components.is_some(), spec.potential.is_some()];
        if given.iter().filter(|g| **g).count() > 1 {
            return Err(CliError::Config(format!(
                "{}: field: give only one of `preset`, `components`, `potential`",
                src.label
            )));
        }
        let vars = Variables::chart(dim);
        let (field, resolved) = if let Some(comps) = &spec.components {
            if comps.len() != dim {
                return Err(CliError::Config(format!(
                    "{}: field has {} components, chart has dimension {dim}",
                    src.label,
                    comps.len()
                )));
            }
            let exprs = comps
                .iter()
                .enumerate()
                .map(|(i, c)| src.parse_expr(&format!("field.components[{i}]"), c, &vars))
                .collect::<Result<Vec<_>, _>>()?;
            let label = spec.name.clone().unwrap_or_else(|| {
                format!("({})", comps.iter().map(|c| c.get_ref().as_str()).collect::<Vec<_>>().join(", "))
            });
            (VectorFieldSpec::from_exprs(label, exprs)?, spec.clone())
        } else if let Some(u) = &spec.potential {
            let e = src.parse_expr("field.potential", u, &vars)?;
            let u = ConformalFactor::from_expr(e);
            (VectorFieldSpec::gradient_of(metric, &u), spec.clone())
        } else {
            let name = spec.preset.clone().unwrap_or_else(|| "zero".into());
            if BUILTIN_FIELDS.contains(&name.as_str()) {
                let params = PresetParams {
                    omega: spec.omega,
                    direction: spec.direction.clone(),
                    scale: spec.scale,
                };
                let mut r = spec.clone();
                r.preset = Some(name.clone());
                (VectorFieldSpec::preset(&name, dim, &params)?, r)
            } else if let Some((inner, isrc)) = self.presets.fields.get(&name) {
                self.field_at(inner, metric, isrc, depth + 1)?
            } else {
                return Err(CliError::Config(format!("{}: unknown field preset `{name}`", src.label)));
            }
        };
        match &spec.name {
            Some(n) => Ok((field.renamed(n.clone()), FieldSpec {
                name: Some(n.clone()),
                ..resolved
            })),
            None => Ok((field, resolved)),
        }
    }

    pub fn potential(&self, text: &ExprText, dim: usize) -> Result<ConformalFactor, CliError> {
        let e = self.source.parse_expr("potential", text, &Variables::chart(dim))?;
        Ok(ConformalFactor::from_expr(e))
    }

    pub fn patch(&self, spec: &PatchSpec, ambient: usize) -> Result<ImmersedPatch, CliError> {
        let center = Point::from_vec(spec.center.clone().unwrap_or_else(|| vec![0.0; ambient]));
        if center.len() != ambient {
            return Err(CliError::Config(format!(
                "patch center has {} entries, chart has dimension {ambient}",
                center.len()
            )));
        }
        let radius = spec.radius.unwrap_or(1.0);
        let patch = match spec.kind.as_str() {
            "sphere" => ImmersedPatch::sphere(center, radius)?,
            "circle" => ImmersedPatch::circle(center, radius)?,
            "cylinder" => ImmersedPatch::cylinder(radius, spec.height.unwrap_or(1.0))?,
            "grim-reaper-cylinder" => {
                ImmersedPatch::grim_reaper_cylinder(spec.half_width.unwrap_or(1.2), spec.height.unwrap_or(1.0))?
            }
            "custom" => {
                let comps = spec
                    .components
                    .as_ref()
                    .ok_or_else(|| CliError::Config("custom patch needs `components`".into()))?;
                let bounds: Vec<(f64, f64)> = spec
                    .bounds
                    .as_ref()
                    .ok_or_else(|| CliError::Config("custom patch needs `bounds`".into()))?
                    .iter()
                    .map(|b| (b[0], b[1]))
                    .collect();
                let vars = Variables::params(bounds.len());
                for (i, c) in comps.iter().enumerate() {
                    self.source.parse_expr(&format!("patch.components[{i}]"), c, &vars)?;
                }
                let reference = Point::from_vec(
                    spec.reference
                        .clone()
                        .ok_or_else(|| CliError::Config("custom patch needs a `reference` normal".into()))?,
                );
                let texts: Vec<String> = comps.iter().map(|c| c.get_ref().clone()).collect();
                ImmersedPatch::parse(spec.name.clone().unwrap_or_else(|| "custom".into()), bounds, &texts, reference)?
            }
            other => return Err(CliError::Config(format!("unknown patch kind `{other}`"))),
        };
        if patch.ambient_dim() != ambient {
            return Err(CliError::Config(format!(
                "patch `{}` lives in dimension {}, chart has dimension {ambient}",
                patch.name(),
                patch.ambient_dim()
            )));
        }
        Ok(match &spec.name {
            Some(n) => patch.renamed(n.clone()),
            None => patch,
        })
    }
}

pub fn region(bounds: &Option<Vec<[f64; 2]>>) -> Result<Option<Domain>, CliError> {
    bounds.as_ref().map(|b| domain_of(b, "region")).transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_key_has_a_line_number() {
        let err = from_str("run.toml", "seed = 1\n[trace]\nlenght = 3\n".into()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("run.toml:3"), "{msg}");
    }

    #[test]
    fn expression_error_names_token_and_line() {
        let l = from_str("run.toml", "[field]\ncomponents = [\"-y\", \"x +* 2\"]\n".into()).unwrap();
        let presets = Presets::default();
        let r = Resolver {
            source: l.source.clone(),
            presets: &presets,
        };
        let (m, _) = r.metric(&l.config.metric).unwrap();
        let msg = r.field(&l.config.field, &m).unwrap_err().to_string();
        assert!(msg.contains("run.toml:2:"), "{msg}");
        assert!(msg.contains("`*`"), "{msg}");
    }

    #[test]
    fn tolerances_must_be_positive() {
        let mut c = RunConfig::default();
        c.trace.rtol = 0.0;
        assert!(c.validate().is_err());
        c.trace.rtol = 1e-9;
        c.certify.threshold = Some(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn extra_presets_resolve() {
        let dir = std::env::temp_dir().join(format!("solitonlab-presets-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let file = dir.join("extra.toml");
        fs::write(
            &file,
            "[metric.disk]\npreset = \"euclidean\"\ndomain = [[-1, 1], [-1, 1]]\n[field.spin]\ncomponents = [\"-2*y\", \"2*x\"]\n",
        )
        .unwrap();
        let presets = Presets::from_files(&[file]).unwrap();
        let r = Resolver {
            source: Source::inline("t"),
            presets: &presets,
        };
        let spec = MetricSpec {
            preset: Some("disk".into()),
            ..Default::default()
        };
        let (m, resolved) = r.metric(&spec).unwrap();
        assert_eq!(m.domain().diameter(), Domain::cube(2, -1.0, 1.0).diameter());
        assert_eq!(resolved.domain, Some(vec![[-1.0, 1.0], [-1.0, 1.0]]));
        let f = FieldSpec {
            preset: Some("spin".into()),
            ..Default::default()
        };
        let (x, _) = r.field(&f, &m).unwrap();
        assert_eq!(x.eval(&Point::from_vec(vec![1.0, 0.0])).unwrap(), Point::from_vec(vec![0.0, 2.0]));
        fs::remove_dir_all(dir).unwrap();
    }
}
