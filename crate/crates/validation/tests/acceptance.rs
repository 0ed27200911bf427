//! Acceptance suite: one PASS/FAIL line per criterion, tolerances pinned.
//!
//! Runs without the libtest harness so every line is printed; the process exits
//! nonzero if any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::Instant;

use inclusion_core::convex::{ConvexFunction, ConvexSet};
use inclusion_core::dynamics::{simulate_with, SimOptions};
use inclusion_core::linalg::{matrix_from_rows, point, Point};
use inclusion_core::lyapunov::{check_decrease_along, check_pair_condition, CheckTolerances, Quadrature, Variant};
use inclusion_core::omega::{
    estimate_omega, verify_chain, verify_connected_component, verify_invariance_thm41, verify_location_thm31,
    InvarianceCheckOptions, OmegaOptions,
};
use inclusion_core::operators::MonotoneOperator;
use inclusion_core::setcalc::{largest_invariant_subset, GridSet, MAlphaOptions};
use inclusion_core::sysconfig::{builtin_catalog, load_builtin, parse_expression, LoadedSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn builtin(name: &str) -> LoadedSystem {
    load_builtin(name, &[]).expect("built-in loads")
}

fn stride(t: f64, h: f64) -> usize {
    ((t / h) / 1e4).floor().max(1.0) as usize
}

fn omega_options(l: &LoadedSystem) -> OmegaOptions {
    let a = l.analysis();
    OmegaOptions {
        t_total: a.t,
        t_burn: l.t_burn(),
        h: a.h,
        eps: l.eps(),
        bounds: l.guard(),
        stride: stride(a.t, a.h),
    }
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

/// RLD closed form `x(t) = (x₀+1)e^{−t} − 1` until absorption at `ln(1+x₀)`.
fn c1_rld() -> Outcome {
    let l = builtin("rld");
    let start = Instant::now();
    let mut worst_state = 0.0f64;
    let mut worst_time = 0.0f64;
    for x0 in [0.5, 1.0, 2.0, 0.1] {
        let traj = simulate_with(&l.system, &point(&[x0]), &SimOptions::new(2.0, 1e-4)).unwrap();
        for (t, x) in traj.times.iter().zip(&traj.states) {
            let exact = ((x0 + 1.0) * (-t).exp() - 1.0).max(0.0);
            worst_state = worst_state.max((x[0] - exact).abs());
        }
        let t_star = traj.settling_time(&point(&[0.0]), 0.0).unwrap_or(f64::INFINITY);
        worst_time = worst_time.max((t_star - (1.0 + x0).ln()).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_time <= 2e-3 && worst_state <= 1e-3 && secs < 1.0,
        format!(
            "|t* - ln(1+x0)| max {worst_time:.3e} (tol 2e-3), state error max {worst_state:.3e} (tol 1e-3), {secs:.3} s (limit 1 s)"
        ),
    )
}

/// Prox against a brute-force grid argmin.
fn c2_prox() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let quad_a = 3.0;
    let quad_b = -1.5;
    let cases: Vec<(&str, ConvexFunction, Box<dyn Fn(f64) -> f64>, f64, f64)> = vec![
        ("abs", ConvexFunction::abs(), Box::new(|y: f64| y.abs()), -8.0, 8.0),
        ("box indicator", ConvexFunction::indicator(ConvexSet::interval(-1.0, 0.5)), Box::new(|_| 0.0), -1.0, 0.5),
        (
            "quadratic",
            ConvexFunction::Quadratic {
                hessian: matrix_from_rows(&[vec![quad_a]]).unwrap(),
                linear: point(&[quad_b]),
                constant: 0.0,
            },
            Box::new(move |y: f64| 0.5 * quad_a * y * y + quad_b * y),
            -8.0,
            8.0,
        ),
    ];
    let mut worst = 0.0f64;
    for (_, f, phi, lo, hi) in &cases {
        for _ in 0..100 {
            let lambda = rng.gen_range(0.05..2.0);
            let x = rng.gen_range(-3.0..3.0);
            let p = f.prox(lambda, &point(&[x])).unwrap()[0];
            let brute = oracles::brute_prox_1d(phi, lambda, x, *lo, *hi);
            worst = worst.max((p - brute).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 2e-6 && secs < 10.0,
        format!(
            "{} functions x 100 cases, max |prox - grid argmin| {worst:.3e} (tol 2e-6), {secs:.2} s (limit 10 s)",
            cases.len()
        ),
    )
}

/// Firm nonexpansiveness and the resolvent identity for every built-in operator.
fn c3_resolvents() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut seen: Vec<(String, MonotoneOperator)> = Vec::new();
    for c in builtin_catalog() {
        let l = builtin(&c.name);
        if !seen.iter().any(|(_, op)| *op == l.system.operator) {
            seen.push((c.name.clone(), l.system.operator.clone()));
        }
    }
    let pairs = 10_000;
    let mut worst_fne = f64::NEG_INFINITY;
    let mut worst_id = 0.0f64;
    let mut per_op = Vec::new();
    for (name, op) in &seen {
        let d = op.dim();
        let mut op_id = 0.0f64;
        for _ in 0..pairs {
            let x = Point::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
            let y = Point::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
            let lambda = rng.gen_range(0.05..2.0);
            let mu = rng.gen_range(0.05..2.0);
            let jx = op.resolvent(lambda, &x).unwrap();
            let jy = op.resolvent(lambda, &y).unwrap();
            let dj = &jx - &jy;
            worst_fne = worst_fne.max(dj.norm_squared() - dj.dot(&(&x - &y)));
            let inner = &x * (mu / lambda) + &jx * (1.0 - mu / lambda);
            let rhs = op.resolvent(mu, &inner).unwrap();
            op_id = op_id.max((&jx - rhs).norm());
        }
        worst_id = worst_id.max(op_id);
        let label = if op.is_zero() { "zero" } else { name.as_str() };
        per_op.push(format!("{label} {}:{op_id:.1e}", op.kind()));
    }
    outcome(
        worst_fne <= 1e-10 && worst_id <= 1e-10,
        format!(
            "{} operators x {pairs} pairs: max FNE excess {worst_fne:.3e}, max identity residual {worst_id:.3e} (tol 1e-10) [{}]",
            seen.len(),
            per_op.join(", ")
        ),
    )
}

/// The pair `(φ, ‖(∂φ)°‖²)` for `φ = ‖x‖²/2`.
fn c4_pair() -> Outcome {
    let l = builtin("gradient-flow");
    let pair = l.pair.as_ref().unwrap();
    let n = 40;
    let grid: Vec<Point> = (0..n * n)
        .map(|k| {
            let (i, j) = (k % n, k / n);
            point(&[-1.0 + 2.0 * i as f64 / (n - 1) as f64, -1.0 + 2.0 * j as f64 / (n - 1) as f64])
        })
        .collect();
    let report = check_pair_condition(&l.system, pair, &grid, Variant::FullInfimum, CheckTolerances::default()).unwrap();
    let worst_margin = report
        .points
        .iter()
        .map(|p| p.margin.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    let mut worst_trap = 0.0f64;
    let mut worst_right = 0.0f64;
    for k in 0..10 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 10.0;
        let x0 = point(&[th.cos(), th.sin()]);
        let traj = simulate_with(&l.system, &x0, &SimOptions::new(2.0, 1e-3)).unwrap();
        let trap = check_decrease_along(&traj, pair, Quadrature::Trapezoid, 1e-4).unwrap();
        let right = check_decrease_along(&traj, pair, Quadrature::RightEndpoint, 1e-4).unwrap();
        worst_trap = worst_trap.max(trap.worst_violation);
        worst_right = worst_right.max(right.worst_violation);
    }
    outcome(
        worst_margin <= 1e-10 && worst_trap <= 1e-4,
        format!(
            "40x40 grid max |margin| {worst_margin:.3e} (tol 1e-10); 10 trajectories |x0|=1, T=2, h=1e-3: trapezoid worst violation {worst_trap:.3e} (tol 1e-4) [right-endpoint rule: {worst_right:.3e}]"
        ),
    )
}

fn thm31_distance(name: &str) -> (bool, f64, f64, GridSet, inclusion_core::omega::OmegaEstimate) {
    let l = builtin(name);
    let x0 = l.initial_conditions().remove(0);
    let e = estimate_omega(&l.system, &x0, &omega_options(&l)).unwrap();
    let tol = 2.0 * l.s.max_cell_width();
    let (r, target) = verify_location_thm31(&e, &l.s, l.w().unwrap(), l.analysis().tol_w, tol).unwrap();
    (r.passed(), r.max_violation, tol, target, e)
}

fn c5_thm31() -> Outcome {
    let (p_dw, d_dw, tol_dw, target, e) = thm31_distance("double-well");
    let (p_rld, d_rld, tol_rld, _, _) = thm31_distance("rld");
    let res = builtin("double-well").s.resolution()[0];
    let comp = verify_connected_component(&e, &target);
    let comps = target.connected_components().len();
    outcome(
        p_dw && p_rld && comp.passed() && d_dw <= tol_dw && d_rld <= tol_rld,
        format!(
            "{res} cells/axis; double-well distance {d_dw:.3e} (tol {tol_dw:.3e}), rld distance {d_rld:.3e} (tol {tol_rld:.3e}); single component among {comps}: {}",
            comp.passed()
        ),
    )
}

fn c6_thm41() -> Outcome {
    let start = Instant::now();
    let rot = builtin("rotation");
    let x0 = rot.initial_conditions();
    let (r, sets) = verify_invariance_thm41(&rot.system, rot.v().unwrap(), &rot.s, &x0, &invariance_options(&rot)).unwrap();
    let band = &sets[0];
    let w = rot.s.max_cell_width();
    let to_circle = band
        .members()
        .map(|c| (band.center(c).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    let from_circle = (0..10_000)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / 10_000.0;
            band.distance(&point(&[th.cos(), th.sin()])).unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    let hausdorff = to_circle.max(from_circle);
    let case = &r.cases[0];
    let rot_ok = r.passed() && hausdorff <= w && case.max_distance <= 2.0 * w && (case.alpha - 0.5).abs() <= w;

    let gf = builtin("gradient-flow");
    let gx0 = gf.initial_conditions();
    let (gr, gsets) = verify_invariance_thm41(&gf.system, gf.v().unwrap(), &gf.s, &gx0, &invariance_options(&gf)).unwrap();
    let m0 = &gsets[0];
    let origin_cells = m0.count() > 0
        && m0.members().all(|c| {
            let (lo, hi) = m0.cell_bounds(c);
            (0..2).all(|a| lo[a] <= 1e-12 && hi[a] >= -1e-12)
        });
    let gcase = &gr.cases[0];
    let rate = gcase.log_decay_rate.unwrap_or(f64::NAN);
    let gf_ok = gr.passed() && origin_cells && gcase.monotone && (rate - 1.0).abs() <= 0.05;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rot_ok && gf_ok,
        format!(
            "rotation: alpha {:.5}, Hausdorff(M_alpha, circle) {hausdorff:.3e} (tol {w:.3e}), max d(x(t),M_alpha) {:.3e} (tol {:.3e}); gradient flow: M_0 {} cells at origin {origin_cells}, monotone {}, log decay rate {rate:.4} (1 +/- 0.05); {secs:.1} s",
            case.alpha,
            case.max_distance,
            2.0 * w,
            m0.count(),
            gcase.monotone
        ),
    )
}

fn c7_chains() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["damped-oscillator", "rld"] {
        let l = builtin(name);
        let start = Instant::now();
        let x0 = l.initial_conditions().remove(0);
        let (r, _) = verify_chain(&l.system, l.v().unwrap(), &l.s, &x0, l.tau(), &invariance_options(&l)).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let links: Vec<String> = r
            .chain
            .iter()
            .map(|c| format!("{}<={}:{}", c.subset, c.superset, if c.holds { "ok" } else { "no" }))
            .collect();
        ok &= r.passed() && r.chain.iter().all(|c| c.holds) && secs < 30.0;
        lines.push(format!("{name} [{}] {secs:.1} s", links.join(" ")));
    }
    outcome(ok, format!("{} (limit 30 s each)", lines.join("; ")))
}

fn c8_saddle() -> Outcome {
    let l = builtin("saddle");
    let opts = l.invariance_options();
    let (m, _) = largest_invariant_subset(&l.system, &l.s, &opts).unwrap();
    let w = l.s.cell_width(1);
    let mut outside = 0;
    let mut missing = 0;
    for c in 0..l.s.len() {
        let (lo, hi) = l.s.cell_bounds(c);
        let touches_axis = lo[1] <= 1e-12 && hi[1] >= -1e-12;
        let near_axis = lo[1] <= w + 1e-12 && hi[1] >= -w - 1e-12;
        if m.get(c) && !near_axis {
            outside += 1;
        }
        if touches_axis && !m.get(c) {
            missing += 1;
        }
    }
    let (again, trace) = largest_invariant_subset(&l.system, &m, &opts).unwrap();
    let removed: usize = trace.removed_per_sweep.iter().sum();
    outcome(
        outside == 0 && missing == 0 && again == m,
        format!(
            "{} retained cells; {outside} farther than one cell from x2=0, {missing} axis cells dropped; re-run removed {removed}",
            m.count()
        ),
    )
}

fn c9_omega_invariance() -> Outcome {
    let l = builtin("rotation");
    let x0 = l.initial_conditions().remove(0);
    let e = estimate_omega(&l.system, &x0, &omega_options(&l)).unwrap();
    let reps = e.representatives();
    let h = l.analysis().h;
    let mut worst = 0.0f64;
    for r in &reps {
        let traj = simulate_with(&l.system, r, &SimOptions::new(1.0, h)).unwrap();
        for x in &traj.states {
            let d = reps.iter().map(|p| (p - x).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    let tol = e.radius + 1e-3;
    outcome(
        worst <= tol,
        format!(
            "{} representatives (diameter {:.4}), max distance after Delta=1: {worst:.4e} (tol radius+1e-3 = {tol:.4e})",
            reps.len(),
            e.diameter
        ),
    )
}

fn c10_parser() -> Outcome {
    let params: BTreeMap<String, f64> = [("a".to_string(), 1.25), ("b".to_string(), -0.75)].into();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let empty = BTreeMap::new();
    let precedence = [("2+3*4^2", 50.0), ("-2^2", -4.0), ("2^3^2", 512.0), ("8/4/2", 1.0), ("2^-1", 0.5)];
    let prec_ok = precedence
        .iter()
        .all(|(s, v)| parse_expression(s, 0, &empty).and_then(|e| e.eval(&[])).ok() == Some(*v));
    let mut roundtrip_fail = 0;
    for _ in 0..10_000 {
        let t = oracles::random_tree(&mut rng, 6, 3, &params);
        let printed = t.to_string();
        match parse_expression(&printed, 3, &params) {
            Ok(back) if back == t => {}
            _ => roundtrip_fail += 1,
        }
    }
    let mut mismatches = 0;
    let mut compared = 0;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let src = oracles::random_source(&mut rng, 5, 3);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lib = parse_expression(&src, 3, &params).and_then(|e| e.eval(&x)).ok();
        let reference = oracles::reference_eval(&src, &x, &params);
        match (lib, reference) {
            (Some(a), Some(b)) => {
                compared += 1;
                let err = (a - b).abs() / (1.0 + b.abs());
                worst = worst.max(err);
                if err > 1e-12 {
                    mismatches += 1;
                }
            }
            (None, None) => {}
            _ => mismatches += 1,
        }
    }
    outcome(
        prec_ok && roundtrip_fail == 0 && mismatches == 0,
        format!(
            "precedence suite {}; round-trip failures {roundtrip_fail}/10000; reference interpreter: {mismatches} mismatches in 1000 ({compared} finite, max rel err {worst:.1e}, tol 1e-12)",
            if prec_ok { "ok" } else { "FAILED" }
        ),
    )
}

fn c11_cli() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let Some(bin) = inclusion_validation::cli_binary() else {
        return outcome(false, "inclusion binary not built; run `cargo build -p inclusion-cli` first".to_string());
    };
    let code = |args: &[&str]| {
        Command::new(&bin)
            .args(args)
            .env("INCLUSION_OUT_DIR", dir.path())
            .output()
            .unwrap()
            .status
            .code()
    };
    let cases: [(&[&str], i32); 5] = [
        (&["check-lyapunov", "rld"], 0),
        (&["check-lyapunov", "expanding"], 1),
        (&["check-lyapunov", "rld", "--variant", "bogus"], 2),
        (&["simulate", "rld"], 2),
        (&["simulate", "rld", "--x0", "0.5", "--T", "1"], 0),
    ];
    let mut wrong = Vec::new();
    for (args, want) in cases {
        let got = code(args);
        if got != Some(want) {
            wrong.push(format!("{} -> {got:?} (want {want})", args.join(" ")));
        }
    }
    outcome(
        wrong.is_empty(),
        if wrong.is_empty() {
            format!("{} invocations returned the expected 0/1/2 codes", cases.len())
        } else {
            wrong.join("; ")
        },
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("RLD closed form and absorption time", c1_rld),
        ("prox vs brute-force argmin", c2_prox),
        ("resolvent firm nonexpansiveness and identity", c3_resolvents),
        ("Lyapunov pair margin and decrease", c4_pair),
        ("location in S minus S+_W, single component", c5_thm31),
        ("invariance principle on rotation and gradient flow", c6_thm41),
        ("inclusion chains", c7_chains),
        ("saddle invariant strip", c8_saddle),
        ("omega estimate invariance", c9_omega_invariance),
        ("parser conformance", c10_parser),
        ("CLI exit codes", c11_cli),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {} [{:.1} s]",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
