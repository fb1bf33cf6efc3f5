//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so the lines always reach stdout.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use psurf::birkhoff::{split_minus_star_plus, split_plus_minusfree, split_plus_star_minus, BirkhoffOptions};
use psurf::frames::{direct_frame_solve, integrate_axis, Axis};
use psurf::grid::GridSpec;
use psurf::loop_algebra::random::{twisted_generator, twisted_unitary};
use psurf::loop_algebra::{LaurentLoop, Mat2};
use psurf::oracle::{goursat_solve, register_rigid, GoursatProblem};
use psurf::potentials::{
    builtin_angle, extract_diagonal_potentials, gauge_transform, generalized_amsler_example, generalized_amsler_with,
    normalized_from_boundary, BoundaryAngles, CubicSpline, DiagonalDerivative, GaugeLoop, PotentialPair,
    ScalarFunction,
};
use psurf::surface::{
    associated_family, geometry_report, reconstruct_frames, sym_immersion, FrameGrid, PipelineOptions, SurfaceGrid,
};
use psurf::symmetry::{certify_from_potentials, CertifyThresholds, Interpolation, SymmetryDescriptor};
use psurf::Result;

const SEED: u64 = 20240917;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { passed, detail })
}

fn unit() -> (f64, f64) {
    (0.0, 1.0)
}

fn soliton_pair(d: (f64, f64)) -> PotentialPair {
    normalized_from_boundary(&BoundaryAngles::soliton(d, d)).expect("soliton pair")
}

fn kink(x: f64, y: f64) -> f64 {
    4.0 * (x + y).exp().atan()
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, v| m.max(v.abs()))
}

fn leading(p: &PotentialPair) -> (ScalarFunction, ScalarFunction) {
    let (px, py) = (p.clone(), p.clone());
    (
        ScalarFunction::new(move |x| px.x_leading(x).map_or(f64::NAN, |v| v.1)),
        ScalarFunction::new(move |y| py.y_leading(y).map_or(f64::NAN, |v| v.1)),
    )
}

/// Loop-group `φ` against the Goursat solution from the same data lines.
fn goursat_gap(p: &PotentialPair, f: &FrameGrid) -> Result<f64> {
    let (i0, j0) = f.basepoint;
    let g = f.grid;
    let (a, b) = leading(p);
    let problem = GoursatProblem {
        grid: g,
        base: (i0, j0),
        boundary_x: (0..g.nx).map(|i| f.phi_at(i, j0)).collect(),
        boundary_y: (0..g.ny).map(|j| f.phi_at(i0, j)).collect(),
        a,
        b,
    };
    let phi = goursat_solve(&problem)?;
    Ok(max_abs(phi.iter().zip(&f.phi).map(|(a, b)| a - b)))
}

/// `max ‖U(1) − C·D‖` with `C` fixed at the basepoint, `D` the direct λ = 1 frames.
fn direct_gap(p: &PotentialPair, f: &FrameGrid) -> Result<(f64, f64)> {
    let (a, b) = leading(p);
    let d = direct_frame_solve(&f.grid, &f.phi, &a, &b, 1.0, f.basepoint, 2, 1e-4)?;
    let k0 = f.grid.idx(f.basepoint.0, f.basepoint.1);
    let c = f.u[k0].eval_real(1.0) * d.u[k0].adjoint();
    let gap = (0..f.grid.len())
        .map(|k| (f.u[k].eval_real(1.0) - c * d.u[k]).norm())
        .fold(0.0, f64::max);
    Ok((gap, d.path_residual))
}

fn rms_after_registration(a: &SurfaceGrid, b: &SurfaceGrid) -> Result<f64> {
    Ok(register_rigid(&a.points, &b.points)?.rms)
}

fn c1_soliton_round_trip() -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
    let t = Instant::now();
    let (f, g) = pool.install(|| -> Result<_> {
        let grid = GridSpec::square(unit(), 65)?;
        let f = reconstruct_frames(&soliton_pair(unit()), &grid, &PipelineOptions::with_trunc(24))?;
        let s = sym_immersion(&f, 1.0)?;
        let g = geometry_report(&s, &f)?;
        Ok((f, g))
    })?;
    let secs = t.elapsed().as_secs_f64();
    let err = max_abs((0..f.grid.len()).map(|k| {
        let (i, j) = f.grid.ij(k);
        f.phi[k] - kink(f.grid.x(i), f.grid.y(j))
    }));
    let k = g.curvature_max_dev.unwrap_or(f64::INFINITY);
    outcome(
        err < 1e-5 && k < 5e-3 && secs < 60.0,
        format!("phi err {err:.2e} (<1e-5), max|K+1| {k:.2e} (<5e-3), {secs:.2} s single-threaded (<60)"),
    )
}

fn c2_birkhoff_suite() -> Result<Outcome> {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let opts = BirkhoffOptions::default();
    let (mut res, mut star, mut twist): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..200 {
        let g = twisted_unitary(&mut rng, -4, 4, 0.5, 300);
        for (split, plus_normalized) in [
            (split_plus_star_minus as fn(&LaurentLoop, &BirkhoffOptions) -> Result<_>, true),
            (split_minus_star_plus, false),
            (split_plus_minusfree, false),
        ] {
            let s = split(&g, &opts)?;
            res = res.max(s.residual);
            let normalized = if plus_normalized { &s.plus } else { &s.minus };
            star = star.max((normalized.coeff(0) - Mat2::IDENTITY).norm());
            twist = twist.max(s.plus.check_twist()).max(s.minus.check_twist());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        res < 1e-9 && star < 1e-10 && twist < 1e-10 && secs < 30.0,
        format!("200 loops x 3 splits, seed {SEED}: residual {res:.2e} (<1e-9), star {star:.2e}, twist {twist:.2e} (<1e-10), {secs:.2} s"),
    )
}

fn random_spline(rng: &mut ChaCha8Rng, d: (f64, f64), vanish_at_zero: bool) -> ScalarFunction {
    let t: Vec<f64> = (0..9).map(|k| d.0 + (d.1 - d.0) * k as f64 / 8.0).collect();
    let v: Vec<f64> = (0..9).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = ScalarFunction::from_spline(CubicSpline::new(t, v).expect("spline"));
    if !vanish_at_zero {
        return s;
    }
    let (f, df, z) = (s.clone(), s.clone(), s.eval(0.0));
    ScalarFunction::with_derivative(move |t| f.eval(t) - z, move |t| df.derivative(t))
}

fn c3_boundary_contract() -> Result<Outcome> {
    let b = |n: &str| builtin_angle(n).expect("builtin");
    let sym = (-0.5, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases: Vec<(&str, BoundaryAngles)> = vec![
        ("soliton", BoundaryAngles::soliton(unit(), unit())),
        ("sine/cubic", BoundaryAngles::new(b("sine"), b("cubic"), sym, sym)),
        ("zero/sine", BoundaryAngles::new(b("zero"), b("sine"), sym, sym)),
        ("sine/offset, speeds", BoundaryAngles::new(b("sine"), b("offset"), sym, sym).with_speeds(b("offset"), b("offset"))),
        ("random spline", BoundaryAngles::new(random_spline(&mut rng, sym, true), random_spline(&mut rng, sym, false), sym, sym)),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, angles) in cases {
        let grid = GridSpec::square(angles.domain_x, 33)?;
        let f = reconstruct_frames(&normalized_from_boundary(&angles)?, &grid, &PipelineOptions::default())?;
        let (i0, j0) = f.basepoint;
        assert!(grid.x(i0) == 0.0 && grid.y(j0) == 0.0, "basepoint off the origin");
        let b0 = angles.beta.eval(0.0);
        let ex = max_abs((0..grid.nx).map(|i| f.phi_at(i, j0) - angles.alpha.eval(grid.x(i)) - b0));
        let ey = max_abs((0..grid.ny).map(|j| f.phi_at(i0, j) - angles.beta.eval(grid.y(j))));
        worst = worst.max(ex).max(ey);
        parts.push(format!("{name} {:.1e}", ex.max(ey)));
    }
    outcome(worst < 1e-7, format!("max {worst:.2e} (<1e-7): {}", parts.join(", ")))
}

fn c4_gauge_invariance() -> Result<Outcome> {
    let p = soliton_pair(unit());
    let grid = GridSpec::square(unit(), 21)?;
    let base = reconstruct_frames(&p, &grid, &PipelineOptions::default())?;
    let s0 = sym_immersion(&base, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let xm = twisted_generator(&mut rng, -2, 0, 0.4);
    let xp = twisted_generator(&mut rng, 0, 2, 0.4);
    let sine = ScalarFunction::with_derivative(f64::sin, f64::cos);
    let gauges = [
        ("constant diag", GaugeLoop::constant(LaurentLoop::constant(Mat2::diag_phase(0.3))), GaugeLoop::identity()),
        ("exp(x X), X in Λ⁻", GaugeLoop::exponential(xm.clone(), ScalarFunction::identity(), -40, 0), GaugeLoop::identity()),
        (
            "exp(sin x X) and exp(y Y)",
            GaugeLoop::exponential(xm, sine, -40, 0),
            GaugeLoop::exponential(xp, ScalarFunction::identity(), 0, 40),
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, qx, qy) in gauges {
        let q = gauge_transform(&p, &qx, &qy)?;
        let opts = PipelineOptions::default().with_inits(qx.at(0.0), qy.at(0.0));
        let s = sym_immersion(&reconstruct_frames(&q, &grid, &opts)?, 1.0)?;
        let rms = rms_after_registration(&s, &s0)?;
        worst = worst.max(rms);
        parts.push(format!("{name} {rms:.1e}"));
    }
    outcome(worst < 1e-5, format!("21x21 rms max {worst:.2e} (<1e-5): {}", parts.join(", ")))
}

fn c5_diagonal_corollary() -> Result<Outcome> {
    let grid = GridSpec::square(unit(), 65)?;
    let opts = PipelineOptions::default();
    let f = reconstruct_frames(&soliton_pair(unit()), &grid, &opts)?;
    let d = extract_diagonal_potentials(&f, DiagonalDerivative::Total)?;
    let rebuilt = reconstruct_frames(&d.pair, &grid, &opts)?;
    let rms = rms_after_registration(&sym_immersion(&rebuilt, 1.0)?, &sym_immersion(&f, 1.0)?)?;
    outcome(rms < 1e-5, format!("soliton 65x65 rebuild rms {rms:.2e} (<1e-5)"))
}

fn c6_oracle_equivalence() -> Result<Outcome> {
    let grid = GridSpec::square(unit(), 65)?;
    let sol = soliton_pair(unit());
    let fs = reconstruct_frames(&sol, &grid, &PipelineOptions::default())?;
    let gs = goursat_gap(&sol, &fs)?;
    let (ds, ps) = direct_gap(&sol, &fs)?;

    // pole-free Amsler patch where the speeds stay moderate
    let patch = (4.0, 5.0);
    let (ams, _) = generalized_amsler_with(patch, 0.0);
    let fa = reconstruct_frames(&ams, &GridSpec::square(patch, 65)?, &PipelineOptions::default())?;
    let ga = goursat_gap(&ams, &fa)?;
    let (da, pa) = direct_gap(&ams, &fa)?;
    let worst = gs.max(ds).max(ga).max(da);
    outcome(
        worst < 1e-5,
        format!(
            "h=1/64: Goursat soliton {gs:.2e}, Amsler [4,5]^2 {ga:.2e}; direct frames soliton {ds:.2e} (path {ps:.1e}), Amsler {da:.2e} (path {pa:.1e}) (<1e-5)"
        ),
    )
}

fn c7_amsler_symmetry() -> Result<Outcome> {
    let (p, sym) = generalized_amsler_example();
    let d = SymmetryDescriptor::from_axis_symmetry(&sym);
    let grid = GridSpec::square(p.domain_x(), 129)?;
    let mut opts = PipelineOptions::with_trunc(24).with_radius(1.25);
    opts.max_step = Some(1.0 / 2048.0);
    let th = CertifyThresholds {
        equivariance: 1e-8,
        interpolation: Interpolation::Cubic,
        ..Default::default()
    };
    let c = certify_from_potentials(&p, &d, &grid, &opts, &th)?;
    let v = |s: Option<psurf::symmetry::Stage>| s.map_or(f64::NAN, |s| s.value);
    let cone = c.cone.as_ref();
    let cone_ok = cone.is_some_and(|c| c.passed);
    let angle = c.rotation_angle_measured_rad.unwrap_or(f64::NAN);
    outcome(
        c.equivariance_x.passed && c.equivariance_y.passed && c.certified && cone_ok,
        format!(
            "equivariance {:.1e}/{:.1e} (<1e-8), spread {:.2e} (<1e-4), surface {:.2e} (<1e-3, cubic, 129 nodes), angle {angle:.4} rad (pi/3 = {:.4}), cone line distance {:.1e} (<{:.3})",
            c.equivariance_x.value,
            c.equivariance_y.value,
            v(c.monodromy_spread),
            v(c.surface_residual),
            PI / 3.0,
            cone.map_or(f64::NAN, |c| c.max_line_distance),
            cone.map_or(f64::NAN, |c| c.threshold),
        ),
    )
}

fn c8_associated_family() -> Result<Outcome> {
    let grid = GridSpec::square(unit(), 65)?;
    let f = reconstruct_frames(&soliton_pair(unit()), &grid, &PipelineOptions::default())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for s in associated_family(&f, &[0.5, 1.0, 2.0])? {
        let g = geometry_report(&s, &f)?;
        let k = g.curvature_max_dev.unwrap_or(f64::INFINITY);
        ok &= g.speed_x_max_dev < 1e-3 && g.speed_y_max_dev < 1e-3 && k < 5e-3;
        parts.push(format!("λ={}: speeds {:.1e}/{:.1e}, K {k:.1e}", s.lambda, g.speed_x_max_dev, g.speed_y_max_dev));
    }
    outcome(ok, format!("{} (speeds <1e-3, K <5e-3)", parts.join("; ")))
}

fn c9_degeneracy() -> Result<Outcome> {
    let grid = GridSpec::square(unit(), 33)?;
    let opts = PipelineOptions::default();
    let flat = reconstruct_frames(&normalized_from_boundary(&BoundaryAngles::zero(unit(), unit()))?, &grid, &opts)?;
    let sf = sym_immersion(&flat, 1.0)?;
    let gf = geometry_report(&sf, &flat)?;
    let sol = reconstruct_frames(&soliton_pair(unit()), &grid, &opts)?;
    let gs = geometry_report(&sym_immersion(&sol, 1.0)?, &sol)?;
    outcome(
        sf.all_degenerate() && gs.interior_degenerate_nodes == 0 && gf.rank_mismatch_nodes == 0 && gs.rank_mismatch_nodes == 0,
        format!(
            "flat: {}/{} flagged, soliton: {} interior flagged, rank mismatches {} + {}",
            sf.degenerate_count(),
            grid.len(),
            gs.interior_degenerate_nodes,
            gf.rank_mismatch_nodes,
            gs.rank_mismatch_nodes
        ),
    )
}

fn c10_convergence_orders() -> Result<Outcome> {
    let p = soliton_pair(unit());
    let end = |h: f64| integrate_axis(&p.eta_y, Axis::Y, unit(), &LaurentLoop::identity(), h).map(|a| a.end().clone());
    let (g1, g2, g3) = (end(1.0 / 8.0)?, end(1.0 / 16.0)?, end(1.0 / 32.0)?);
    let rk4 = (g1.distance(&g2) / g2.distance(&g3)).log2();

    let kink_err = |n: usize| -> Result<f64> {
        let g = GridSpec::square(unit(), n)?;
        let bx = g.xs().iter().map(|&x| kink(x, 0.0)).collect();
        let by = g.ys().iter().map(|&y| kink(0.0, y)).collect();
        let phi = goursat_solve(&GoursatProblem::corner(g, bx, by))?;
        Ok(max_abs((0..g.len()).map(|k| {
            let (i, j) = g.ij(k);
            phi[k] - kink(g.x(i), g.y(j))
        })))
    };
    let goursat = (kink_err(33)? / kink_err(65)?).log2();

    let curvature = |n: usize| -> Result<f64> {
        let f = reconstruct_frames(&p, &GridSpec::square(unit(), n)?, &PipelineOptions::default())?;
        Ok(geometry_report(&sym_immersion(&f, 1.0)?, &f)?.curvature_max_dev.unwrap_or(f64::NAN))
    };
    let k_order = (curvature(33)? / curvature(65)?).log2();
    let near = |v: f64, want: f64| (v - want).abs() <= 0.3;
    outcome(
        near(rk4, 4.0) && near(goursat, 2.0) && near(k_order, 2.0),
        format!("RK4 {rk4:.2} (4±0.3), Goursat {goursat:.2} (2±0.3), curvature {k_order:.2} (2±0.3)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 10] = [
        ("soliton round trip", c1_soliton_round_trip),
        ("Birkhoff suite", c2_birkhoff_suite),
        ("boundary contract", c3_boundary_contract),
        ("gauge invariance", c4_gauge_invariance),
        ("diagonal potentials", c5_diagonal_corollary),
        ("oracle equivalence", c6_oracle_equivalence),
        ("generalized Amsler symmetry", c7_amsler_symmetry),
        ("associated family", c8_associated_family),
        ("degeneracy detection", c9_degeneracy),
        ("convergence orders", c10_convergence_orders),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (verdict, detail) = match run() {
            Ok(o) => (if o.passed { "PASS" } else { "FAIL" }, o.detail),
            Err(e) => ("FAIL", format!("error: {e}")),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!("criterion {:>2} {name:<28} {verdict}  {detail}", k + 1);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
