//! Command-line front end for solitonlab.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::Ctx;
use crate::config::{Format, Presets};
use crate::error::{CliError, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "solitonlab", version, about = "Soliton curves and hypersurfaces of mean curvature flow")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Main tolerance of the command (integration rtol, closedness tolerance, ...).
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate soliton curves on a surface chart.
    TraceSoliton,
    /// Integrate an affine geodesic and measure unparametrised residuals.
    TraceWeyl,
    /// Decide whether the field is a gradient; exit 3 when it is not.
    GradientCheck,
    /// Soliton residuals next to minimality in the rescaled metric.
    Certify,
    /// Seeded curves of a non-gradient field against the Weyl connection.
    SurfaceGap,
    /// Rotationally symmetric soliton hypersurface from its profile curve.
    Profile,
    /// Run verification suites.
    Verify {
        /// Suite name (repeatable); `all` runs everything.
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
        /// Divide every tolerance by this factor.
        #[arg(long)]
        tighten: Option<f64>,
    },
    /// Draw curve CSV files as SVG.
    Render {
        inputs: Vec<PathBuf>,
        #[arg(long)]
        title: Option<String>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::TraceSoliton => "trace-soliton",
            Command::TraceWeyl => "trace-weyl",
            Command::GradientCheck => "gradient-check",
            Command::Certify => "certify",
            Command::SurfaceGap => "surface-gap",
            Command::Profile => "profile",
            Command::Verify { .. } => "verify",
            Command::Render { .. } => "render",
        }
    }
}

/// Apply flags over the loaded config; flags win.
fn apply_flags(ctx: &mut Ctx, cli: &Cli) {
    let c = &mut ctx.config;
    if let Some(o) = &cli.out {
        c.output.dir = o.clone();
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(f) = cli.format {
        c.output.format = f;
    }
    if let Some(t) = cli.tol {
        match &cli.command {
            Command::TraceSoliton => c.trace.rtol = t,
            Command::TraceWeyl => c.weyl.rtol = t,
            Command::GradientCheck => c.gradient.tol = t,
            Command::Certify => c.certify.rtol = t,
            Command::SurfaceGap => c.surface_gap.rtol = t,
            Command::Profile => c.profile.tol = t,
            Command::Verify { .. } | Command::Render { .. } => {
                log::warn!("--tol has no effect on {}", cli.command.name())
            }
        }
    }
    match &cli.command {
        Command::Verify { suites, tighten } => {
            if !suites.is_empty() {
                c.verify.suites = suites.clone();
            }
            if let Some(t) = tighten {
                c.verify.tighten = *t;
            }
        }
        Command::Render { inputs, title } => {
            if !inputs.is_empty() {
                c.render.inputs = inputs.clone();
            }
            if title.is_some() {
                c.render.title = title.clone();
            }
        }
        _ => {}
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let loaded = config::load(cli.config.as_deref())?;
    let presets = Presets::from_env()?;
    let mut ctx = Ctx {
        config: loaded.config,
        source: loaded.source,
        presets,
    };
    apply_flags(&mut ctx, cli);
    ctx.config.validate()?;
    config::ensure_writable(ctx.out_dir())?;
    match cli.command {
        Command::TraceSoliton => commands::trace_soliton(&mut ctx),
        Command::TraceWeyl => commands::trace_weyl(&mut ctx),
        Command::GradientCheck => commands::gradient_check(&mut ctx),
        Command::Certify => commands::certify(&mut ctx),
        Command::SurfaceGap => commands::surface_gap(&mut ctx),
        Command::Profile => commands::profile(&mut ctx),
        Command::Verify { .. } => commands::verify(&mut ctx),
        Command::Render { .. } => commands::render(&mut ctx),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let jobs = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        j => j,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return EXIT_USAGE;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
