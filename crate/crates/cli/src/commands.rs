use std::fmt;
use std::io;
use std::path::Path;

use inclusion_core::dynamics::{simulate_with, SimOptions};
use inclusion_core::lyapunov::{check_pair_condition, CheckTolerances, Quadrature, Variant};
use inclusion_core::omega::{
    check_a2, check_decrease, check_h2, check_h3, estimate_omega, verify_chain, verify_connected_component,
    verify_invariance_thm41, verify_location_thm31, H2Options, InvarianceCheckOptions, LocationReport, OmegaEstimate,
    OmegaOptions, Outcome,
};
use inclusion_core::setcalc::{
    e_s_set, e_set, largest_invariant_subset, m_alpha, qi_set, sublevel_band, BandOptions, GridSet, MAlphaOptions,
};
use inclusion_core::sysconfig::{builtin_catalog, builtin_source, load_system, LoadedSystem};
use inclusion_core::{Error, Point};
use serde::Serialize;

use crate::output::{to_json, Run};
use crate::{Cli, Command, SetKind, SystemArgs, Theorem};

/// Samples kept per trajectory in reports.
const RECORDED_SAMPLES: f64 = 1e4;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(io::Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::DecreaseViolation { .. } | Error::UnboundedTrajectory { .. }) => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

struct Loaded {
    sys: LoadedSystem,
    text: String,
    overrides: Vec<String>,
}

fn load(args: &SystemArgs, extra: &[String]) -> Result<Loaded> {
    let path = Path::new(&args.system);
    let text = if path.is_file() {
        std::fs::read_to_string(path)?
    } else {
        builtin_source(&args.system)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "`{}` is neither a file nor a built-in system (see `inclusion catalog`)",
                    args.system
                ))
            })?
            .to_string()
    };
    let mut overrides = args.params.clone();
    overrides.extend_from_slice(extra);
    let sys = load_system(&text, &overrides)?;
    Ok(Loaded { sys, text, overrides })
}

fn parse_point(s: &str, dim: usize) -> Result<Point> {
    let coords = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(format!("bad point `{s}`: {e}")))?;
    if coords.len() != dim {
        return Err(CliError::Usage(format!(
            "point `{s}` has {} coordinates, system has dimension {dim}",
            coords.len()
        )));
    }
    Ok(Point::from_vec(coords))
}

fn parse_points(s: &str, dim: usize) -> Result<Vec<Point>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(|p| parse_point(p, dim)).collect()
}

fn initial_conditions(l: &LoadedSystem, x0: Option<&str>) -> Result<Vec<Point>> {
    let pts = match x0 {
        Some(s) => parse_points(s, l.system.dim)?,
        None => l.initial_conditions(),
    };
    if pts.is_empty() {
        return Err(CliError::Usage("no initial condition: pass --x0 or set analysis.x0".into()));
    }
    Ok(pts)
}

fn stride(t: f64, h: f64) -> usize {
    ((t / h) / RECORDED_SAMPLES).floor().max(1.0) as usize
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn fmt_point(p: &Point) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x:.6e}")).collect();
    format!("({})", parts.join(", "))
}

pub fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Catalog { json } => catalog(*json),
        Command::Simulate { sys, x0, t, h } => simulate(cli, sys, x0, *t, *h),
        Command::Omega { sys, x0, t, burn, h, eps } => omega(cli, sys, x0.as_deref(), *t, *burn, *h, *eps),
        Command::CheckLyapunov {
            sys,
            variant,
            grid,
            points,
        } => check_lyapunov(cli, sys, variant, *grid, points.as_deref()),
        Command::Locate { sys, theorem, x0 } => locate(cli, sys, *theorem, x0.as_deref()),
        Command::Sets {
            sys,
            set,
            alpha,
            beta,
            tau,
            v,
        } => sets(cli, sys, *set, *alpha, *beta, *tau, v.as_deref()),
    }
}

fn catalog(json: bool) -> Result<bool> {
    let cat = builtin_catalog();
    if json {
        print!("{}", to_json(&cat));
    } else {
        for c in &cat {
            println!("{:<18} dim {}  {}", c.name, c.dim, c.description);
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct SimulateReport {
    system: String,
    x0: Vec<f64>,
    t: f64,
    h: f64,
    scheme: &'static str,
    final_time: f64,
    final_state: Vec<f64>,
    samples: usize,
    reached_t: bool,
    left_box: bool,
    stalled: bool,
    equilibrium_certified: Option<bool>,
    reference_max_error: Option<f64>,
}

fn simulate(cli: &Cli, args: &SystemArgs, x0: &str, t: Option<f64>, h: Option<f64>) -> Result<bool> {
    let l = load(args, &[])?;
    let sys = &l.sys;
    let x0 = parse_point(x0, sys.system.dim)?;
    let t = t.unwrap_or(sys.analysis().t);
    let h = h.unwrap_or(sys.analysis().h);
    let traj = simulate_with(&sys.system, &x0, &SimOptions::new(t, h).with_bounds(sys.guard()))?;
    let reference_max_error = sys.system.reference.as_ref().map(|r| {
        traj.times
            .iter()
            .zip(&traj.states)
            .map(|(t, x)| (r.state(&x0, *t) - x).amax())
            .fold(0.0, f64::max)
    });
    let mut run = Run::new(&cli.out, "simulate", &sys.system.name, &l.text, &l.overrides)?;
    run.write("-trajectory.csv", &traj.to_csv())?;
    let report = SimulateReport {
        system: sys.system.name.clone(),
        x0: x0.as_slice().to_vec(),
        t,
        h,
        scheme: "semi-implicit",
        final_time: traj.final_time(),
        final_state: traj.last().as_slice().to_vec(),
        samples: traj.states.len(),
        reached_t: traj.flags.reached_t,
        left_box: traj.flags.left_box,
        stalled: traj.flags.stalled,
        equilibrium_certified: traj.flags.equilibrium_certified,
        reference_max_error,
    };
    run.write("-report.json", &to_json(&report))?;
    println!(
        "{}: x({:.6}) = {}",
        sys.system.name,
        traj.final_time(),
        fmt_point(traj.last())
    );
    if traj.flags.left_box {
        println!("warning: trajectory left the guard box");
    }
    if let Some(e) = reference_max_error {
        println!("max deviation from the exact solution: {e:.3e}");
    }
    run.finish("ok")?;
    Ok(true)
}

fn omega_options(l: &LoadedSystem, t: Option<f64>, burn: Option<f64>, h: Option<f64>, eps: Option<f64>) -> OmegaOptions {
    let t_total = t.unwrap_or(l.analysis().t);
    let h = h.unwrap_or(l.analysis().h);
    OmegaOptions {
        t_total,
        t_burn: burn.unwrap_or(if t.is_some() { t_total / 2.0 } else { l.t_burn() }),
        h,
        eps: eps.unwrap_or(l.eps()),
        bounds: l.guard(),
        stride: stride(t_total, h),
    }
}

fn omega_points_csv(e: &OmegaEstimate) -> String {
    let dim = e.points.first().map_or(0, Vec::len);
    let mut out = (1..=dim).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for p in &e.points {
        let row: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn omega(
    cli: &Cli,
    args: &SystemArgs,
    x0: Option<&str>,
    t: Option<f64>,
    burn: Option<f64>,
    h: Option<f64>,
    eps: Option<f64>,
) -> Result<bool> {
    let l = load(args, &[])?;
    let x0 = initial_conditions(&l.sys, x0)?.remove(0);
    let opts = omega_options(&l.sys, t, burn, h, eps);
    let e = estimate_omega(&l.sys.system, &x0, &opts)?;
    let mut run = Run::new(&cli.out, "omega", &l.sys.system.name, &l.text, &l.overrides)?;
    run.write("-omega.json", &to_json(&e))?;
    run.write("-omega-points.csv", &omega_points_csv(&e))?;
    println!(
        "{}: {} representatives, diameter {:.3e}, radius {:.3e}",
        l.sys.system.name,
        e.points.len(),
        e.diameter,
        e.radius
    );
    if !e.stable {
        println!(
            "warning: not converged (doubling T moves the estimate by {:.3e})",
            e.stability_distance
        );
    }
    run.finish(if e.stable { "stable" } else { "not-converged" })?;
    Ok(true)
}

fn check_grid(l: &LoadedSystem, n: usize) -> Vec<Point> {
    let (lo, hi) = (l.s.lo(), l.s.hi());
    let d = l.system.dim;
    let n = n.max(1);
    let total = n.pow(d as u32);
    (0..total)
        .map(|mut k| {
            Point::from_fn(d, |a, _| {
                let i = k % n;
                k /= n;
                if n == 1 {
                    0.5 * (lo[a] + hi[a])
                } else {
                    lo[a] + (hi[a] - lo[a]) * i as f64 / (n - 1) as f64
                }
            })
        })
        .collect()
}

fn check_lyapunov(cli: &Cli, args: &SystemArgs, variant: &str, grid: usize, points: Option<&str>) -> Result<bool> {
    let variant: Variant = variant.parse()?;
    let l = load(args, &[])?;
    let pair = l
        .sys
        .pair
        .as_ref()
        .ok_or_else(|| CliError::Usage("system has no Lyapunov pair".into()))?;
    let pts = match points {
        Some(s) => parse_points(s, l.sys.system.dim)?,
        None => check_grid(&l.sys, grid),
    };
    let report = check_pair_condition(&l.sys.system, pair, &pts, variant, CheckTolerances::default())?;
    let mut run = Run::new(&cli.out, "check-lyapunov", &l.sys.system.name, &l.text, &l.overrides)?;
    run.write("-report.json", &to_json(&report))?;
    println!(
        "{} ({}): {} verified, {} sampled-pass, {} failed, {} skipped; worst margin {:.3e}",
        l.sys.system.name,
        report.method,
        report.verified,
        report.sampled_pass,
        report.failed,
        report.skipped,
        report.worst_margin
    );
    let passed = report.passed();
    run.finish(verdict(passed))?;
    Ok(passed)
}

fn invariance_options(l: &LoadedSystem) -> InvarianceCheckOptions {
    let a = l.analysis();
    let mut o = InvarianceCheckOptions::new(a.t, a.h, l.guard());
    o.eps = l.eps();
    o.malpha = MAlphaOptions {
        invariance: l.invariance_options(),
        ..MAlphaOptions::default()
    };
    o.tol_decrease = a.tol_decrease;
    o.tol_slope = a.tol_slope;
    o.check_s_invariance = a.check_s_invariance;
    o.stride = stride(a.t, a.h);
    o
}

fn export(run: &mut Run, name: &str, g: &GridSet) -> Result<()> {
    run.write(&format!("-{name}.gridset"), &g.to_text())?;
    run.write(&format!("-{name}-centers.csv"), &g.centers_csv())?;
    Ok(())
}

fn locate(cli: &Cli, args: &SystemArgs, theorem: Theorem, x0: Option<&str>) -> Result<bool> {
    let l = load(args, &[])?;
    let sys = &l.sys;
    let x0s = initial_conditions(sys, x0)?;
    let v = sys.v()?;
    let mut run = Run::new(&cli.out, &format!("locate-{}", theorem.id()), &sys.system.name, &l.text, &l.overrides)?;
    let tol = 2.0 * sys.s.max_cell_width();
    let report = match theorem {
        Theorem::Thm31 | Theorem::Cor34 => {
            let w = sys.w()?;
            let pair = sys.pair.as_ref().expect("pair present");
            let opts = omega_options(sys, None, None, None, None);
            let mut combined: Option<LocationReport> = None;
            let mut target_set = None;
            for x0 in &x0s {
                let e = estimate_omega(&sys.system, x0, &opts)?;
                let (mut r, target) = verify_location_thm31(&e, &sys.s, w, sys.analysis().tol_w, tol)?;
                if theorem == Theorem::Cor34 {
                    let c = verify_connected_component(&e, &target);
                    r.outcome = if r.passed() && c.passed() { Outcome::Pass } else { Outcome::Fail };
                    r.theorem = "cor34".into();
                    r.warnings.extend(c.warnings);
                }
                if !e.stable {
                    r.warnings.push("ω estimate not converged under doubling".into());
                }
                r.hypotheses.push(check_a2(&e, &sys.s, v, tol)?);
                r.hypotheses.push(check_h3(v, &sys.s, w, sys.analysis().tol_w)?);
                r.hypotheses
                    .push(check_h2(|x| v.value(x), &sys.system.operator, &e.representatives(), &H2Options::default())?);
                let traj = simulate_with(
                    &sys.system,
                    x0,
                    &SimOptions::new(opts.t_total, opts.h).with_bounds(sys.guard()),
                )?;
                // right-endpoint sums match the implicit step; the trapezoid rule adds an O(h) bias
                r.hypotheses.push(check_decrease(&traj, pair, Quadrature::RightEndpoint, 1e-4)?);
                if !sys.config.assumptions.a1 {
                    r.assumption_a1 = "not declared".into();
                }
                combined = Some(match combined {
                    None => r,
                    Some(mut acc) => {
                        acc.max_violation = acc.max_violation.max(r.max_violation);
                        if !r.passed() {
                            acc.outcome = Outcome::Fail;
                        }
                        acc.hypotheses.extend(r.hypotheses);
                        acc.warnings.extend(r.warnings);
                        acc
                    }
                });
                target_set = Some(target);
            }
            let target = target_set.expect("at least one x0");
            export(&mut run, "s-minus", &target)?;
            combined.expect("at least one x0")
        }
        Theorem::Thm41 => {
            let (r, sets) = verify_invariance_thm41(&sys.system, v, &sys.s, &x0s, &invariance_options(sys))?;
            for (i, g) in sets.iter().enumerate() {
                export(&mut run, &format!("m-alpha-{i}"), g)?;
            }
            r
        }
        Theorem::Chain => {
            let (r, sets) = verify_chain(&sys.system, v, &sys.s, &x0s[0], sys.tau(), &invariance_options(sys))?;
            for (name, g) in &sets {
                export(&mut run, name, g)?;
            }
            r
        }
    };
    let mut report = report;
    report.artifacts = run_outputs(&run);
    run.write("-report.json", &to_json(&report))?;
    println!("{}: {}", sys.system.name, report.summary());
    let passed = report.passed();
    run.finish(verdict(passed))?;
    Ok(passed)
}

fn run_outputs(run: &Run) -> Vec<String> {
    run.outputs()
        .filter(|n| n.ends_with(".gridset") || n.ends_with(".csv"))
        .collect()
}

#[derive(Serialize)]
struct SetReport {
    system: String,
    set: &'static str,
    cells: usize,
    of: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    tau: Option<f64>,
    sweeps: Option<usize>,
}

#[allow(clippy::too_many_arguments)]
fn sets(
    cli: &Cli,
    args: &SystemArgs,
    kind: SetKind,
    alpha: Option<f64>,
    beta: Option<f64>,
    tau: Option<f64>,
    v_expr: Option<&str>,
) -> Result<bool> {
    let extra: Vec<String> = v_expr.map(|e| format!("lyapunov.v={e}")).into_iter().collect();
    let l = load(args, &extra)?;
    let sys = &l.sys;
    let need_alpha = || alpha.ok_or_else(|| CliError::Usage(format!("--alpha is required for --set {}", kind.id())));
    let tau_used = tau.unwrap_or(sys.tau());
    let mut sweeps = None;
    let (g, a, b, t) = match kind {
        SetKind::Band => {
            let a = need_alpha()?;
            let b = beta.unwrap_or(a);
            (sublevel_band(sys.v()?, &sys.s, a, b, BandOptions::default())?, Some(a), Some(b), None)
        }
        SetKind::Invariant => {
            let (g, trace) = largest_invariant_subset(&sys.system, &sys.s, &sys.invariance_options())?;
            sweeps = Some(trace.sweeps);
            (g, None, None, None)
        }
        SetKind::E => (e_set(&sys.system, sys.v()?, &sys.s, tau_used)?, None, None, Some(tau_used)),
        SetKind::Es => (e_s_set(&sys.system, sys.v()?, &sys.s, tau_used)?, None, None, Some(tau_used)),
        SetKind::Qi => (qi_set(&sys.system, sys.v()?, &sys.s, tau_used)?, None, None, Some(tau_used)),
        SetKind::Malpha => {
            let a = need_alpha()?;
            let opts = MAlphaOptions {
                invariance: sys.invariance_options(),
                ..MAlphaOptions::default()
            };
            let (g, trace) = m_alpha(&sys.system, sys.v()?, &sys.s, a, &opts)?;
            sweeps = Some(trace.sweeps);
            (g, Some(a), None, None)
        }
    };
    let mut run = Run::new(&cli.out, &format!("sets-{}", kind.id()), &sys.system.name, &l.text, &l.overrides)?;
    run.write(".gridset", &g.to_text())?;
    run.write("-centers.csv", &g.centers_csv())?;
    let report = SetReport {
        system: sys.system.name.clone(),
        set: kind.id(),
        cells: g.count(),
        of: sys.s.count(),
        alpha: a,
        beta: b,
        tau: t,
        sweeps,
    };
    run.write("-report.json", &to_json(&report))?;
    println!("{}: {} set has {} of {} cells", sys.system.name, kind.id(), g.count(), sys.s.count());
    run.finish("ok")?;
    Ok(true)
}
