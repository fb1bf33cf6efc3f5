//! Run configuration: a TOML file with `[potential]`, `[grid]`, `[tolerances]`,
//! `[outputs]` and `[symmetry]` sections. Grammar and defaults are listed in the README.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{PsError, Result};
use crate::grid::GridSpec;
use crate::loop_algebra::{random::twisted_generator, LaurentLoop, Mat2};
use crate::potentials::{
    builtin_angle, gauge_transform, generalized_amsler_with, normalized_from_boundary, BoundaryAngles, CubicSpline,
    GaugeLoop, PotentialPair, ScalarFunction, AMSLER_DOMAIN,
};
use crate::surface::PipelineOptions;
use crate::symmetry::{CertifyThresholds, Interpolation, SymmetryDescriptor};

/// Seed used when neither the config nor the command line gives one.
pub const DEFAULT_SEED: u64 = 20240917;

/// Knots of a `builtin:random` spline.
const RANDOM_KNOTS: usize = 9;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    pub trunc: Option<usize>,
    /// Working annulus `1/radius ≤ |λ| ≤ radius`.
    pub radius: Option<f64>,
    /// Largest RK4 step along an axis.
    pub step: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub verify: Vec<Suite>,
    pub potential: PotentialSpec,
    pub grid: GridSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub outputs: Outputs,
    pub symmetry: Option<SymmetrySpec>,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Geometry,
    Oracle,
    Symmetry,
    Invariants,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Oracle => "oracle",
            Suite::Symmetry => "symmetry",
            Suite::Invariants => "invariants",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Normalized,
    Generalized,
    Amsler3,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub kind: Kind,
    pub x: Option<AxisSpec>,
    pub y: Option<AxisSpec>,
    /// Gauge applied to the normalized pair for `kind = "generalized"`.
    #[serde(default)]
    pub gauge: GaugeName,
    /// Axis interval of both coordinates for `kind = "amsler3"`.
    pub domain: Option<[f64; 2]>,
    /// Constant added to `p` for `kind = "amsler3"`; nonzero breaks the symmetry.
    #[serde(default)]
    pub shift: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    /// `builtin:<name>` or `table:<csv path>`.
    pub function: String,
    pub domain: [f64; 2],
    pub speed: Option<SpeedSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SpeedSpec {
    Constant(f64),
    Function(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeName {
    #[default]
    Identity,
    /// `qx = diag(e^{0.3i}, e^{−0.3i})`, `qy = I`.
    Constant,
    /// `qx = exp(x X)`, `qy = exp(y Y)` with seeded twisted generators of degrees `[−2, 0]` and `[0, 2]`.
    Exponential,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub basepoint: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub curvature: f64,
    pub speed: f64,
    pub sine_gordon: f64,
    pub asymptotic: f64,
    pub boundary: f64,
    pub frame_defect: f64,
    pub potential_invariants: f64,
    pub goursat: f64,
    pub birkhoff_tail: f64,
    pub birkhoff_residual: f64,
    pub equivariance: f64,
    pub monodromy_spread: f64,
    pub surface_residual: f64,
    pub interpolation: InterpolationName,
}

impl Default for Tolerances {
    fn default() -> Self {
        let th = CertifyThresholds::default();
        Tolerances {
            curvature: 5e-3,
            speed: 1e-3,
            sine_gordon: 5e-3,
            asymptotic: 5e-3,
            boundary: 1e-7,
            frame_defect: 1e-8,
            potential_invariants: 1e-10,
            goursat: 1e-5,
            birkhoff_tail: 1e-8,
            birkhoff_residual: 1e-8,
            equivariance: th.equivariance,
            monodromy_spread: th.monodromy_spread,
            surface_residual: th.surface_residual,
            interpolation: InterpolationName::Bilinear,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolationName {
    #[default]
    Bilinear,
    Cubic,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub drop_degenerate_faces: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            dir: PathBuf::from("out"),
            formats: vec![Format::Obj, Format::Csv],
            drop_degenerate_faces: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Obj,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetrySpec {
    pub kind: SymmetryKind,
    /// `(γ₁, γ₂) = (x + s₀, y + s₁)` for `kind = "shift"`.
    pub shift: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    Identity,
    Shift,
    Swap,
    Amsler3,
}

impl RunConfig {
    /// Parse and validate TOML text.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PsError::Config {
            key: None,
            message: e.to_string().trim_end().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file; the second value is its directory, against which table paths resolve.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PsError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, base))
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.nx < 2 {
            return Err(PsError::config("grid.nx", "need at least 2 nodes"));
        }
        if g.ny < 2 {
            return Err(PsError::config("grid.ny", "need at least 2 nodes"));
        }
        check_interval("grid.x_range", g.x_range)?;
        check_interval("grid.y_range", g.y_range)?;
        if self.lambdas.is_empty() {
            return Err(PsError::config("lambdas", "list of spectral parameters is empty"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(PsError::config("lambdas", format!("values must be positive, got {l}")));
        }
        if self.trunc == Some(0) {
            return Err(PsError::config("trunc", "must be positive"));
        }
        if let Some(r) = self.radius {
            if !(r > 1.0 && r.is_finite()) {
                return Err(PsError::config("radius", format!("must exceed 1, got {r}")));
            }
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(PsError::config("step", format!("must be positive, got {s}")));
            }
        }
        let p = &self.potential;
        match p.kind {
            Kind::Normalized | Kind::Generalized => {
                for (name, axis) in [("potential.x", &p.x), ("potential.y", &p.y)] {
                    let axis = axis.as_ref().ok_or_else(|| PsError::config(name, "missing axis section"))?;
                    check_interval(&format!("{name}.domain"), axis.domain)?;
                }
                if p.kind == Kind::Normalized && p.gauge != GaugeName::Identity {
                    return Err(PsError::config("potential.gauge", "only generalized potentials take a gauge"));
                }
                let dx = p.x.as_ref().map(|a| a.domain).unwrap_or_default();
                let dy = p.y.as_ref().map(|a| a.domain).unwrap_or_default();
                if !contains(dx, g.x_range) {
                    return Err(PsError::config("grid.x_range", "lies outside potential.x.domain"));
                }
                if !contains(dy, g.y_range) {
                    return Err(PsError::config("grid.y_range", "lies outside potential.y.domain"));
                }
                if p.kind == Kind::Normalized && !(g.x_range[0] <= 0.0 && 0.0 <= g.x_range[1]) {
                    return Err(PsError::config("grid.x_range", "normalized potentials need x = 0 in range"));
                }
                if p.kind == Kind::Normalized && !(g.y_range[0] <= 0.0 && 0.0 <= g.y_range[1]) {
                    return Err(PsError::config("grid.y_range", "normalized potentials need y = 0 in range"));
                }
            }
            Kind::Amsler3 => {
                if p.x.is_some() || p.y.is_some() {
                    return Err(PsError::config("potential.x", "amsler3 potentials take no axis functions"));
                }
                let d = p.domain.unwrap_or([AMSLER_DOMAIN.0, AMSLER_DOMAIN.1]);
                check_interval("potential.domain", d)?;
                if !contains(d, g.x_range) || !contains(d, g.y_range) {
                    return Err(PsError::config("grid", "ranges lie outside potential.domain"));
                }
            }
        }
        if let Some([bx, by]) = g.basepoint {
            if !(g.x_range[0] <= bx && bx <= g.x_range[1] && g.y_range[0] <= by && by <= g.y_range[1]) {
                return Err(PsError::config("grid.basepoint", "must lie inside the grid ranges"));
            }
        }
        if let Some(s) = &self.symmetry {
            if s.kind == SymmetryKind::Shift && s.shift.is_none() {
                return Err(PsError::config("symmetry.shift", "shift symmetry needs shift = [sx, sy]"));
            }
            if s.kind != SymmetryKind::Shift && s.shift.is_some() {
                return Err(PsError::config("symmetry.shift", "only shift symmetries take a shift"));
            }
        }
        if self.verify.contains(&Suite::Symmetry) && self.symmetry.is_none() && p.kind != Kind::Amsler3 {
            return Err(PsError::config("symmetry", "the symmetry suite needs a [symmetry] section"));
        }
        let t = &self.tolerances;
        for (k, v) in [
            ("curvature", t.curvature),
            ("speed", t.speed),
            ("sine_gordon", t.sine_gordon),
            ("asymptotic", t.asymptotic),
            ("boundary", t.boundary),
            ("frame_defect", t.frame_defect),
            ("potential_invariants", t.potential_invariants),
            ("goursat", t.goursat),
            ("birkhoff_tail", t.birkhoff_tail),
            ("birkhoff_residual", t.birkhoff_residual),
            ("equivariance", t.equivariance),
            ("monodromy_spread", t.monodromy_spread),
            ("surface_residual", t.surface_residual),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PsError::config(format!("tolerances.{k}"), format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        GridSpec::new((g.x_range[0], g.x_range[1]), (g.y_range[0], g.y_range[1]), g.nx, g.ny)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Pipeline options; `trunc` overrides the config value.
    pub fn pipeline_options(&self, trunc: Option<usize>, seed: u64) -> Result<PipelineOptions> {
        let amsler = self.potential.kind == Kind::Amsler3;
        let trunc = trunc.or(self.trunc).unwrap_or(24);
        let radius = self.radius.unwrap_or(if amsler { 1.25 } else { 2.0 });
        let mut opts = PipelineOptions::with_trunc(trunc).with_radius(radius);
        opts.birkhoff.tail_tol = self.tolerances.birkhoff_tail;
        opts.birkhoff.residual_tol = self.tolerances.birkhoff_residual;
        opts.max_step = self.step.or(if amsler { Some(1.0 / 2048.0) } else { None });
        opts.basepoint = self.grid.basepoint.map(|[x, y]| (x, y));
        if self.potential.kind == Kind::Generalized {
            let (qx, qy) = self.gauges(seed);
            let (x0, y0) = match opts.basepoint {
                Some(b) => b,
                None => self.grid_spec()?.default_basepoint(),
            };
            opts = opts.with_inits(qx.at(x0), qy.at(y0));
        }
        Ok(opts)
    }

    pub fn thresholds(&self) -> CertifyThresholds {
        let t = &self.tolerances;
        CertifyThresholds {
            equivariance: t.equivariance,
            monodromy_spread: t.monodromy_spread,
            surface_residual: t.surface_residual,
            interpolation: match t.interpolation {
                InterpolationName::Bilinear => Interpolation::Bilinear,
                InterpolationName::Cubic => Interpolation::Cubic,
            },
        }
    }

    fn gauges(&self, seed: u64) -> (GaugeLoop, GaugeLoop) {
        match self.potential.gauge {
            GaugeName::Identity => (GaugeLoop::identity(), GaugeLoop::identity()),
            GaugeName::Constant => (
                GaugeLoop::constant(LaurentLoop::constant(Mat2::diag_phase(0.3))),
                GaugeLoop::identity(),
            ),
            GaugeName::Exponential => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = twisted_generator(&mut rng, -2, 0, 0.4);
                let y = twisted_generator(&mut rng, 0, 2, 0.4);
                (
                    GaugeLoop::exponential(x, ScalarFunction::identity(), -40, 0),
                    GaugeLoop::exponential(y, ScalarFunction::identity(), 0, 40),
                )
            }
        }
    }

    /// The potential pair described by `[potential]`.
    pub fn build_pair(&self, base: &Path, seed: u64) -> Result<PotentialPair> {
        let p = &self.potential;
        if p.kind == Kind::Amsler3 {
            let d = p.domain.unwrap_or([AMSLER_DOMAIN.0, AMSLER_DOMAIN.1]);
            return Ok(generalized_amsler_with((d[0], d[1]), p.shift).0);
        }
        let (ax, ay) = (p.x.as_ref().unwrap(), p.y.as_ref().unwrap());
        let mut alpha = load_function("potential.x.function", &ax.function, ax.domain, base, seed)?;
        let beta = load_function("potential.y.function", &ay.function, ay.domain, base, seed.wrapping_add(1))?;
        if ax.function == "builtin:random" {
            // α must vanish at the origin
            let a0 = alpha.eval(0.0);
            let (f, g) = (alpha.clone(), alpha);
            alpha = ScalarFunction::with_derivative(move |t| f.eval(t) - a0, move |t| g.derivative(t));
        }
        let mut b = BoundaryAngles::new(alpha, beta, (ax.domain[0], ax.domain[1]), (ay.domain[0], ay.domain[1]));
        let sa = load_speed("potential.x.speed", &ax.speed, ax.domain, base, seed)?;
        let sb = load_speed("potential.y.speed", &ay.speed, ay.domain, base, seed)?;
        if let Some(k) = check_speed(&sa, ax.domain) {
            return Err(PsError::config("potential.x.speed", format!("speed must be positive, found {k}")));
        }
        if let Some(k) = check_speed(&sb, ay.domain) {
            return Err(PsError::config("potential.y.speed", format!("speed must be positive, found {k}")));
        }
        b = b.with_speeds(sa, sb);
        let pair = normalized_from_boundary(&b).map_err(|e| match e {
            PsError::Domain(m) => PsError::config("potential.x.function", m),
            other => other,
        })?;
        if p.kind == Kind::Normalized {
            return Ok(pair);
        }
        let (qx, qy) = self.gauges(seed);
        gauge_transform(&pair, &qx, &qy)
    }

    /// The candidate symmetry for the symmetry suite.
    pub fn symmetry_descriptor(&self) -> Option<SymmetryDescriptor> {
        let kind = match &self.symmetry {
            Some(s) => s.kind,
            None if self.potential.kind == Kind::Amsler3 => SymmetryKind::Amsler3,
            None => return None,
        };
        Some(match kind {
            SymmetryKind::Identity => SymmetryDescriptor::identity(),
            SymmetryKind::Swap => SymmetryDescriptor::axis_swap(),
            SymmetryKind::Amsler3 => {
                let (_, sym) = generalized_amsler_with(AMSLER_DOMAIN, 0.0);
                SymmetryDescriptor::from_axis_symmetry(&sym)
            }
            SymmetryKind::Shift => {
                let [sx, sy] = self.symmetry.as_ref().and_then(|s| s.shift).unwrap_or_default();
                let mut d = SymmetryDescriptor::identity();
                d.gamma1 = ScalarFunction::identity().shifted(sx);
                d.gamma2 = ScalarFunction::identity().shifted(sy);
                d
            }
        })
    }
}

fn check_interval(key: &str, r: [f64; 2]) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
        return Err(PsError::config(key, format!("need lo < hi, got [{}, {}]", r[0], r[1])));
    }
    Ok(())
}

fn contains(outer: [f64; 2], inner: [f64; 2]) -> bool {
    outer[0] <= inner[0] && inner[1] <= outer[1]
}

/// Smallest sampled value when it is not positive.
fn check_speed(s: &ScalarFunction, d: [f64; 2]) -> Option<f64> {
    let m = (0..=64)
        .map(|k| s.eval(d[0] + (d[1] - d[0]) * k as f64 / 64.0))
        .fold(f64::INFINITY, f64::min);
    (!(m > 0.0)).then_some(m)
}

fn load_speed(key: &str, s: &Option<SpeedSpec>, d: [f64; 2], base: &Path, seed: u64) -> Result<ScalarFunction> {
    match s {
        None => Ok(ScalarFunction::constant(1.0)),
        Some(SpeedSpec::Constant(v)) => Ok(ScalarFunction::constant(*v)),
        Some(SpeedSpec::Function(f)) => load_function(key, f, d, base, seed),
    }
}

/// Resolve `builtin:<name>`, `builtin:random` (seeded spline) or `table:<path>`.
fn load_function(key: &str, spec: &str, domain: [f64; 2], base: &Path, seed: u64) -> Result<ScalarFunction> {
    let len = domain[1] - domain[0];
    if let Some(name) = spec.strip_prefix("builtin:") {
        if name == "random" {
            return Ok(random_spline(domain, seed));
        }
        return builtin_angle(name)
            .map(|f| f.with_domain_length(len))
            .ok_or_else(|| PsError::config(key, format!("unknown builtin function `{name}`")));
    }
    if let Some(path) = spec.strip_prefix("table:") {
        let path = base.join(path);
        return read_table(&path).map_err(|m| PsError::config(key, format!("{}: {m}", path.display())));
    }
    Err(PsError::config(key, format!("expected builtin:<name> or table:<path>, got `{spec}`")))
}

fn random_spline(domain: [f64; 2], seed: u64) -> ScalarFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = RANDOM_KNOTS;
    let t: Vec<f64> = (0..n).map(|k| domain[0] + (domain[1] - domain[0]) * k as f64 / (n - 1) as f64).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    ScalarFunction::from_spline(CubicSpline::new(t, v).expect("uniform knots"))
}

fn read_table(path: &Path) -> std::result::Result<ScalarFunction, String> {
    let mut r = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    if headers.len() != 2 || headers[0].trim() != "t" || headers[1].trim() != "value" {
        return Err("header row must be `t,value`".into());
    }
    let (mut t, mut v) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", line + 2));
        t.push(parse(&rec[0])?);
        v.push(parse(&rec[1])?);
    }
    CubicSpline::new(t, v).map(ScalarFunction::from_spline).map_err(|e| e.to_string())
}
