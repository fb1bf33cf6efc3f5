//! The `psurf` command line: `build`, `verify` and `sweep` over a TOML run config.
//!
//! Exit codes: 0 all requested checks pass, 1 a verification failed,
//! 2 configuration error, 3 numerical failure.

mod config;
mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::{Format, Kind, RunConfig, Suite, DEFAULT_SEED};
pub use report::Report;

use crate::error::{PsError, Result};
use crate::oracle::{goursat_solve, GoursatProblem};
use crate::potentials::{PotentialKind, PotentialPair, ScalarFunction};
use crate::surface::{
    associated_family, geometry_report, reconstruct_frames, write_csv, write_obj, FrameGrid, GeometryReport,
    ObjOptions, PipelineOptions, SurfaceGrid,
};
use crate::symmetry::certify_with_frames;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "psurf", version, about = "Pseudospherical surfaces from loop-group potentials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory for meshes and reports (overrides `outputs.dir`).
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads for per-node work; 0 or absent uses all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Birkhoff truncation degree (overrides `trunc`).
    #[arg(long, global = true)]
    pub trunc: Option<usize>,
    /// Seed for `builtin:random` functions and exponential gauges (overrides `seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Build the surface for every λ, write meshes and the report, run the `verify` suites.
    Build { config: PathBuf },
    /// Run the `verify` suites and write the report only.
    Verify { config: PathBuf },
    /// Meshes for every λ plus a family summary table.
    Sweep { config: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Build { .. } => "build",
            Command::Verify { .. } => "verify",
            Command::Sweep { .. } => "sweep",
        }
    }

    fn config(&self) -> &Path {
        match self {
            Command::Build { config } | Command::Verify { config } | Command::Sweep { config } => config,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub passed: bool,
    pub output_dir: PathBuf,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_PASS
        } else {
            EXIT_VERIFY
        }
    }
}

pub fn exit_code_for(e: &PsError) -> i32 {
    if e.is_numerical() || matches!(e, PsError::Registration(_)) {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Parse `args`, run, print diagnostics to stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let verdict = if out.passed { "pass" } else { "FAIL" };
            eprintln!("{}: {verdict} (report in {})", cli.command.name(), out.output_dir.display());
            out.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PsError::config("--threads", e.to_string()))?;
    pool.install(|| run_in_pool(cli))
}

fn run_in_pool(cli: &Cli) -> Result<Outcome> {
    let (cfg, base) = RunConfig::load(cli.command.config())?;
    let seed = cli.seed.unwrap_or_else(|| cfg.seed());
    let out_dir = cli.output_dir.clone().unwrap_or_else(|| cfg.outputs.dir.clone());
    if matches!(cli.command, Command::Verify { .. }) && cfg.verify.is_empty() {
        return Err(PsError::config("verify", "no suites requested"));
    }
    let pair = cfg.build_pair(&base, seed)?;
    let grid = cfg.grid_spec()?;
    let opts = cfg.pipeline_options(cli.trunc, seed)?;

    let mut report = Report::new();
    report.set("command", cli.command.name());
    report.set("kind", kind_name(cfg.potential.kind));
    report.set("nx", grid.nx);
    report.set("ny", grid.ny);
    report.set("trunc", opts.birkhoff.trunc);
    report.set_f64("radius", opts.radius);
    report.set("seed", seed);

    let frames = reconstruct_frames(&pair, &grid, &opts)?;
    report.set_f64("max_split_residual", frames.max_split_residual);
    report.set("max_trunc_used", frames.max_trunc);
    let surfaces = associated_family(&frames, &cfg.lambdas)?;
    let all_degenerate = surfaces.first().is_some_and(SurfaceGrid::all_degenerate);
    report.set("all_degenerate", all_degenerate);
    report.set("degenerate_nodes", surfaces.first().map_or(0, SurfaceGrid::degenerate_count));

    let needs_geometry = !matches!(cli.command, Command::Verify { .. }) || cfg.verify.contains(&Suite::Geometry);
    let mut family = Vec::new();
    if needs_geometry {
        for s in &surfaces {
            let g = geometry_report(s, &frames)?;
            let ok = geometry_passes(&g, &cfg);
            add_geometry(&mut report, &g, ok);
            family.push((g, ok));
        }
        let worst = family.iter().filter_map(|(g, _)| g.curvature_max_dev).fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))));
        report.set_opt("curvature_max_dev", worst);
    }

    let mut passed = true;
    for suite in &cfg.verify {
        let ok = match suite {
            Suite::Geometry => family.iter().all(|(_, ok)| *ok),
            Suite::Invariants => invariants_suite(&mut report, &pair, &frames, &cfg),
            Suite::Oracle => oracle_suite(&mut report, &pair, &frames, &cfg)?,
            Suite::Symmetry => symmetry_suite(&mut report, &pair, &frames, &opts, &cfg)?,
        };
        report.set(format!("verify.{}", suite.name()), if ok { "pass" } else { "fail" });
        passed &= ok;
    }

    std::fs::create_dir_all(&out_dir)?;
    if !matches!(cli.command, Command::Verify { .. }) {
        write_meshes(&surfaces, &cfg, &out_dir)?;
    }
    if matches!(cli.command, Command::Sweep { .. }) {
        write_family(&family, &out_dir.join("family.csv"))?;
        passed &= family.iter().all(|(_, ok)| *ok);
    }
    report.set("verdict", if passed { "pass" } else { "fail" });
    report.write(&out_dir)?;
    Ok(Outcome {
        report,
        passed,
        output_dir: out_dir,
    })
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Normalized => "normalized",
        Kind::Generalized => "generalized",
        Kind::Amsler3 => "amsler3",
    }
}

fn geometry_passes(g: &GeometryReport, cfg: &RunConfig) -> bool {
    let t = &cfg.tolerances;
    g.curvature_max_dev.is_none_or(|k| k <= t.curvature)
        && g.speed_x_max_dev <= t.speed
        && g.speed_y_max_dev <= t.speed
        && g.asymptotic_max <= t.asymptotic
        && g.sine_gordon_max <= t.sine_gordon
        && g.rank_mismatch_nodes == 0
}

fn add_geometry(r: &mut Report, g: &GeometryReport, ok: bool) {
    let p = format!("lambda_{}", g.lambda);
    r.set_opt(format!("{p}.curvature_max_dev"), g.curvature_max_dev);
    r.set(format!("{p}.curvature_nodes"), g.curvature_nodes);
    r.set_f64(format!("{p}.speed_x_max_dev"), g.speed_x_max_dev);
    r.set_f64(format!("{p}.speed_y_max_dev"), g.speed_y_max_dev);
    r.set_f64(format!("{p}.asymptotic_max"), g.asymptotic_max);
    r.set_f64(format!("{p}.sine_gordon_max"), g.sine_gordon_max);
    r.set_f64(format!("{p}.tangent_mismatch_max"), g.tangent_mismatch_max);
    r.set(format!("{p}.interior_degenerate_nodes"), g.interior_degenerate_nodes);
    r.set(format!("{p}.rank_mismatch_nodes"), g.rank_mismatch_nodes);
    r.set(format!("{p}.pass"), ok);
}

/// Potential twist/su(2) defects, frame unitarity, splitting residual and,
/// for normalized pairs based at the origin, the boundary contract
/// `φ(x, 0) = α(x) + β(0)`, `φ(0, y) = β(y)`.
fn invariants_suite(r: &mut Report, pair: &PotentialPair, f: &FrameGrid, cfg: &RunConfig) -> bool {
    let t = &cfg.tolerances;
    let pot = pair.invariant_defect(33);
    let frame = f.frame_defect();
    r.set_f64("potential_invariant_defect", pot);
    r.set_f64("frame_defect", frame);
    let mut ok = pot <= t.potential_invariants && frame <= t.frame_defect && f.max_split_residual <= t.birkhoff_residual;
    let (i0, j0) = f.basepoint;
    let at_origin = f.grid.x(i0).abs() < 1e-12 && f.grid.y(j0).abs() < 1e-12;
    if pair.kind == PotentialKind::Normalized && at_origin {
        let bx = (0..f.grid.nx).map(|i| (f.phi_at(i, j0) - f.alpha[i] - f.beta[j0]).abs()).fold(0.0, f64::max);
        let by = (0..f.grid.ny).map(|j| (f.phi_at(i0, j) - f.beta[j]).abs()).fold(0.0, f64::max);
        r.set_f64("boundary_x_max_dev", bx);
        r.set_f64("boundary_y_max_dev", by);
        ok &= bx <= t.boundary && by <= t.boundary;
    } else {
        r.set("boundary_x_max_dev", "skipped");
        r.set("boundary_y_max_dev", "skipped");
    }
    ok
}

/// `φ` from the loop-group pipeline against the Goursat solution with the
/// same data along the row and column through the basepoint.
fn oracle_suite(r: &mut Report, pair: &PotentialPair, f: &FrameGrid, cfg: &RunConfig) -> Result<bool> {
    let (i0, j0) = f.basepoint;
    let g = f.grid;
    let (px, py) = (pair.clone(), pair.clone());
    let problem = GoursatProblem {
        grid: g,
        base: (i0, j0),
        boundary_x: (0..g.nx).map(|i| f.phi_at(i, j0)).collect(),
        boundary_y: (0..g.ny).map(|j| f.phi_at(i0, j)).collect(),
        a: ScalarFunction::new(move |x| px.x_leading(x).map_or(f64::NAN, |v| v.1)),
        b: ScalarFunction::new(move |y| py.y_leading(y).map_or(f64::NAN, |v| v.1)),
    };
    let phi = goursat_solve(&problem)?;
    let diff = phi.iter().zip(&f.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.set_f64("goursat_max_diff", diff);
    Ok(diff <= cfg.tolerances.goursat)
}

/// Certification chain; a candidate that cannot even be evaluated (γ leaving
/// the domain everywhere, say) counts as a failed verification.
fn symmetry_suite(
    r: &mut Report,
    pair: &PotentialPair,
    f: &FrameGrid,
    opts: &PipelineOptions,
    cfg: &RunConfig,
) -> Result<bool> {
    let d = cfg.symmetry_descriptor().ok_or_else(|| PsError::config("symmetry", "missing [symmetry] section"))?;
    match certify_with_frames(pair, f, &d, opts, &cfg.thresholds()) {
        Ok(c) => {
            for (k, v) in c.key_values() {
                r.set_text(format!("symmetry.{k}"), &v);
            }
            Ok(c.certified)
        }
        Err(e) if e.is_numerical() => Err(e),
        Err(e) => {
            r.set("symmetry.error", e.to_string());
            r.set("symmetry.certified", false);
            Ok(false)
        }
    }
}

fn mesh_stem(lambda: f64) -> String {
    format!("surface_lambda_{lambda}")
}

fn write_meshes(surfaces: &[SurfaceGrid], cfg: &RunConfig, dir: &Path) -> Result<()> {
    for s in surfaces {
        let stem = mesh_stem(s.lambda);
        for fmt in &cfg.outputs.formats {
            match fmt {
                Format::Obj => {
                    let opts = ObjOptions {
                        drop_degenerate_faces: cfg.outputs.drop_degenerate_faces,
                    };
                    write_obj(s, opts, BufWriter::new(File::create(dir.join(format!("{stem}.obj")))?))?;
                }
                Format::Csv => write_csv(s, BufWriter::new(File::create(dir.join(format!("{stem}.csv")))?))?,
            }
        }
    }
    Ok(())
}

fn write_family(family: &[(GeometryReport, bool)], path: &Path) -> Result<()> {
    let io = |e: csv::Error| PsError::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["lambda", "curvature_max_dev", "speed_x_max_dev", "speed_y_max_dev", "pass"])
        .map_err(io)?;
    for (g, ok) in family {
        w.write_record([
            g.lambda.to_string(),
            g.curvature_max_dev.map_or("nan".to_string(), |v| v.to_string()),
            g.speed_x_max_dev.to_string(),
            g.speed_y_max_dev.to_string(),
            ok.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
