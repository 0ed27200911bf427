//! ω-limit set estimation and location checks.
//!
//! Verdicts concern the numerical estimate of ω(x₀) built from a finite trajectory
//! tail, not the true limit set. Blanket assumption A1 cannot be checked for arbitrary
//! oracles; reports carry it as declared.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex::ConvexSet;
use crate::dynamics::{simulate_with, SimOptions, SystemSpec, Trajectory};
use crate::linalg::{hausdorff, ls_slope, Point};
use crate::lyapunov::{check_decrease_along, LyapunovPair, Quadrature, ScalarFunction};
use crate::operators::MonotoneOperator;
use crate::setcalc::{
    e_s_set, e_set, largest_invariant_subset, m_alpha, qi_set, w_zero_set, GridSet, InvarianceOptions,
    MAlphaOptions,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OmegaOptions {
    pub t_total: f64,
    pub t_burn: f64,
    pub h: f64,
    pub eps: f64,
    /// Trajectories leaving this box are treated as unbounded.
    pub bounds: ConvexSet,
    /// Keep every `stride`-th sample of the tail.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub points: Vec<Vec<f64>>,
    pub radius: f64,
    pub window: (f64, f64),
    pub tail_samples: usize,
    pub diameter: f64,
    /// Hausdorff distance between the nets for `T_total` and `2·T_total`.
    pub stability_distance: f64,
    pub stable: bool,
}

impl OmegaEstimate {
    pub fn representatives(&self) -> Vec<Point> {
        self.points.iter().map(|p| Point::from_column_slice(p)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Greedy ε-net in sample order.
pub fn greedy_net(samples: &[Point], eps: f64) -> Vec<Point> {
    let mut reps: Vec<Point> = Vec::new();
    for x in samples {
        if !reps.iter().any(|r| (r - x).norm() <= eps) {
            reps.push(x.clone());
        }
    }
    reps
}

fn diameter(points: &[Point]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

fn tail(traj: &Trajectory, from: f64, to: f64, stride: usize) -> Vec<Point> {
    traj.times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= from - 1e-12 && **t <= to + 1e-12)
        .map(|(_, x)| x.clone())
        .step_by(stride.max(1))
        .collect()
}

/// ε-net of the tail `x([T_burn, T_total])`, plus a doubling-time stability check
/// against the tail `x([2·T_burn, 2·T_total])`.
pub fn estimate_omega(sys: &SystemSpec, x0: &Point, opts: &OmegaOptions) -> Result<OmegaEstimate> {
    if !(opts.t_burn < opts.t_total) || opts.t_burn < 0.0 {
        return Err(Error::InvalidArgument("need 0 ≤ T_burn < T_total".into()));
    }
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidArgument("ε must be positive".into()));
    }
    let sim = SimOptions::new(2.0 * opts.t_total, opts.h).with_bounds(opts.bounds.clone());
    let traj = simulate_with(sys, x0, &sim)?;
    if traj.flags.left_box {
        return Err(Error::UnboundedTrajectory { time: traj.final_time() });
    }
    let first = tail(&traj, opts.t_burn, opts.t_total, opts.stride);
    let second = tail(&traj, 2.0 * opts.t_burn, 2.0 * opts.t_total, opts.stride);
    let net = greedy_net(&first, opts.eps);
    let net2 = greedy_net(&second, opts.eps);
    let stability_distance = hausdorff(&net, &net2);
    Ok(OmegaEstimate {
        diameter: diameter(&net),
        points: net.iter().map(|p| p.as_slice().to_vec()).collect(),
        radius: opts.eps,
        window: (opts.t_burn, opts.t_total),
        tail_samples: first.len(),
        stability_distance,
        stable: stability_distance <= opts.eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub outcome: Outcome,
    /// Sampling-based checks are labelled as such.
    pub sampled: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainLink {
    pub subset: String,
    pub superset: String,
    pub holds: bool,
    /// Retained cells (or ω points) of the subset outside the dilated superset.
    pub excess: usize,
}

/// Per-initial-condition record of an invariance check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceCase {
    pub x0: Vec<f64>,
    pub alpha: f64,
    pub m_alpha_cells: usize,
    pub max_distance: f64,
    pub final_distance: f64,
    pub tail_slope: f64,
    /// `−slope` of `ln d(x(t), 𝔐_α)` where the distance exceeds one hundred half-diagonals.
    pub log_decay_rate: Option<f64>,
    /// No increase of the distance by more than one half-diagonal.
    pub monotone: bool,
    pub omega_distance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationReport {
    pub theorem: String,
    pub outcome: Outcome,
    pub max_violation: f64,
    pub tolerance: f64,
    pub subject: String,
    pub assumption_a1: String,
    pub hypotheses: Vec<HypothesisCheck>,
    pub chain: Vec<ChainLink>,
    pub cases: Vec<InvarianceCase>,
    pub warnings: Vec<String>,
    pub artifacts: Vec<String>,
}

impl LocationReport {
    fn new(theorem: &str, max_violation: f64, tolerance: f64) -> Self {
        LocationReport {
            theorem: theorem.into(),
            outcome: if max_violation <= tolerance { Outcome::Pass } else { Outcome::Fail },
            max_violation,
            tolerance,
            subject: "numerical omega-limit estimate".into(),
            assumption_a1: "declared".into(),
            hypotheses: vec![],
            chain: vec![],
            cases: vec![],
            warnings: vec![],
            artifacts: vec![],
        }
    }

    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// One-paragraph human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {:?} (max violation {:.3e}, tolerance {:.3e})",
            self.theorem, self.outcome, self.max_violation, self.tolerance
        );
        for l in &self.chain {
            s.push_str(&format!(
                "\n  {} ⊆ {}: {}",
                l.subset,
                l.superset,
                if l.holds { "ok" } else { "FAILS" }
            ));
        }
        for h in &self.hypotheses {
            s.push_str(&format!("\n  {}: {:?} ({})", h.name, h.outcome, h.detail));
        }
        for w in &self.warnings {
            s.push_str(&format!("\n  warning: {w}"));
        }
        s
    }
}

fn max_distance_to(points: &[Point], set: &GridSet) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    if set.is_empty() {
        return f64::INFINITY;
    }
    points
        .iter()
        .map(|p| set.closure_distance(p).expect("nonempty set"))
        .fold(0.0, f64::max)
}

/// `ω(x₀) ⊂ S ∖ S⁺_W`: every representative within `tol` of the cells of `S` where
/// `W ≤ tol_w`.
pub fn verify_location_thm31(
    omega: &OmegaEstimate,
    s: &GridSet,
    w: &ScalarFunction,
    tol_w: f64,
    tol: f64,
) -> Result<(LocationReport, GridSet)> {
    let target = w_zero_set(w, s, tol_w)?;
    let reps = omega.representatives();
    let viol = max_distance_to(&reps, &target);
    let mut report = LocationReport::new("thm31", viol, tol);
    if target.is_empty() && !reps.is_empty() {
        report.outcome = Outcome::Fail;
        report.warnings.push("S ∖ S⁺_W is empty".into());
    }
    Ok((report, target))
}

fn label_of(set: &GridSet, labels: &[Option<usize>], p: &Point) -> Option<usize> {
    if let Some(c) = set.cell_of(p) {
        if let Some(l) = labels[c] {
            return Some(l);
        }
    }
    // nearest retained cell
    set.members()
        .min_by(|a, b| {
            let da = (set.center(*a) - p).norm();
            let db = (set.center(*b) - p).norm();
            da.partial_cmp(&db).unwrap()
        })
        .and_then(|c| labels[c])
}

/// All representatives belong to one connected component of `S ∖ S⁺_W`.
pub fn verify_connected_component(omega: &OmegaEstimate, s_minus: &GridSet) -> LocationReport {
    let reps = omega.representatives();
    if reps.is_empty() {
        let mut r = LocationReport::new("cor34", 0.0, 0.0);
        r.warnings.push("empty ω estimate: vacuous pass".into());
        return r;
    }
    let labels = s_minus.component_labels();
    let found: Vec<Option<usize>> = reps.iter().map(|p| label_of(s_minus, &labels, p)).collect();
    let mut distinct: Vec<usize> = found.iter().flatten().copied().collect();
    distinct.sort_unstable();
    distinct.dedup();
    let ok = found.iter().all(Option::is_some) && distinct.len() == 1;
    let mut r = LocationReport::new("cor34", if ok { 0.0 } else { distinct.len().max(2) as f64 - 1.0 }, 0.0);
    if !ok {
        r.warnings.push(format!("representatives touch {} components", distinct.len()));
    }
    r
}

/// Options for the invariance-based location checks.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceCheckOptions {
    pub t_total: f64,
    pub h: f64,
    pub bounds: ConvexSet,
    pub eps: f64,
    pub malpha: MAlphaOptions,
    /// Allowed increase of `V` along the trajectory.
    pub tol_decrease: f64,
    pub tol_slope: f64,
    /// Distance tolerance, in cell widths.
    pub cells_tol: f64,
    /// Run the (costly) `S` invariance pre-check.
    pub check_s_invariance: bool,
    pub stride: usize,
}

impl InvarianceCheckOptions {
    pub fn new(t_total: f64, h: f64, bounds: ConvexSet) -> Self {
        InvarianceCheckOptions {
            t_total,
            h,
            bounds,
            eps: 0.05,
            malpha: MAlphaOptions::default(),
            tol_decrease: 1e-3,
            tol_slope: 1e-3,
            cells_tol: 2.0,
            check_s_invariance: true,
            stride: 10,
        }
    }
}

fn s_invariance_warning(sys: &SystemSpec, s: &GridSet, inv: &InvarianceOptions) -> Result<Option<String>> {
    let (m, _) = largest_invariant_subset(sys, s, inv)?;
    let missing = s.excess_over(&m.dilate(inv.dilation))?;
    Ok((missing > 0).then(|| format!("S is not invariant at grid level ({missing} cells pruned)")))
}

struct TrajectoryView {
    traj: Trajectory,
    alpha: f64,
}

fn run_case(sys: &SystemSpec, v: &ScalarFunction, x0: &Point, opts: &InvarianceCheckOptions) -> Result<TrajectoryView> {
    let sim = SimOptions::new(opts.t_total, opts.h)
        .with_bounds(opts.bounds.clone())
        .with_stride(opts.stride);
    let traj = simulate_with(sys, x0, &sim)?;
    if traj.flags.left_box {
        return Err(Error::UnboundedTrajectory { time: traj.final_time() });
    }
    let values = traj.states.iter().map(|x| v.value(x)).collect::<Result<Vec<_>>>()?;
    let mut running_min = f64::INFINITY;
    let mut increase = 0.0f64;
    for &val in &values {
        increase = increase.max(val - running_min);
        running_min = running_min.min(val);
    }
    if increase > opts.tol_decrease {
        return Err(Error::DecreaseViolation { increase });
    }
    let n = values.len();
    let k = (n / 10).max(1);
    let alpha = values[n - k..].iter().sum::<f64>() / k as f64;
    Ok(TrajectoryView { traj, alpha })
}

/// Invariance-principle check: for each `x₀`, `α = lim V(x(t))`, the
/// distance from `x(t)` to `𝔐_α` becomes small and trends downwards, and the ω
/// estimate lies in `𝔐_α`.
pub fn verify_invariance_thm41(
    sys: &SystemSpec,
    v: &ScalarFunction,
    s: &GridSet,
    x0s: &[Point],
    opts: &InvarianceCheckOptions,
) -> Result<(LocationReport, Vec<GridSet>)> {
    let tol = opts.cells_tol * s.max_cell_width();
    let mut warnings = Vec::new();
    if opts.check_s_invariance {
        if let Some(w) = s_invariance_warning(sys, s, &opts.malpha.invariance)? {
            warnings.push(w);
        }
    }
    let results = x0s
        .par_iter()
        .map(|x0| -> Result<(InvarianceCase, GridSet)> {
            let view = run_case(sys, v, x0, opts)?;
            let (malpha, _) = m_alpha(sys, v, s, view.alpha, &opts.malpha)?;
            let times = &view.traj.times;
            let dists: Vec<f64> = if malpha.is_empty() {
                vec![f64::INFINITY; times.len()]
            } else {
                view.traj.states.iter().map(|x| malpha.closure_distance(x).expect("nonempty")).collect()
            };
            let n = dists.len();
            let half = n / 2;
            let tail_slope = if malpha.is_empty() {
                f64::INFINITY
            } else {
                ls_slope(&times[half..], &dists[half..])
            };
            // Only where the grid offset of the cell boundaries is below about 1% of `d`.
            let threshold = 100.0 * s.half_diagonal();
            let (lt, ld): (Vec<f64>, Vec<f64>) = times
                .iter()
                .zip(&dists)
                .filter(|(_, d)| **d > threshold && d.is_finite())
                .map(|(t, d)| (*t, d.ln()))
                .unzip();
            let log_decay_rate = (lt.len() >= 10).then(|| -ls_slope(&lt, &ld));
            let tail_start = (n * 9) / 10;
            let omega_net = greedy_net(&view.traj.states[tail_start..], opts.eps);
            let omega_distance = max_distance_to(&omega_net, &malpha.dilate(1));
            let final_distance = *dists.last().unwrap();
            let max_distance = dists.iter().cloned().fold(0.0, f64::max);
            let mut running = f64::INFINITY;
            let mut monotone = true;
            for &d in &dists {
                monotone &= d <= running + s.half_diagonal();
                running = running.min(d);
            }
            let passed = final_distance <= tol && tail_slope <= opts.tol_slope && omega_distance <= tol;
            Ok((
                InvarianceCase {
                    x0: x0.as_slice().to_vec(),
                    alpha: view.alpha,
                    m_alpha_cells: malpha.count(),
                    max_distance,
                    final_distance,
                    tail_slope,
                    log_decay_rate,
                    monotone,
                    omega_distance,
                    passed,
                },
                malpha,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = results
        .iter()
        .map(|(c, _)| c.final_distance.max(c.omega_distance))
        .fold(0.0, f64::max);
    let mut report = LocationReport::new("thm41", worst, tol);
    if results.iter().any(|(c, _)| !c.passed) {
        report.outcome = Outcome::Fail;
    }
    report.warnings = warnings;
    let (cases, sets): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    report.cases = cases;
    Ok((report, sets))
}

/// Chain of grid-level inclusions with one-cell dilation slack.
///
/// With `A = 0`: `ω ⊂ 𝔐_α ⊂ M ⊂ E ⊂ S` where `M` is the largest invariant subset of
/// `E`. With `A = ∂φ`: `ω ⊂ 𝔐_α ⊂ M_S ⊂ 𝔈_S ⊂ S`, plus the qi set (`M_qi ⊆ M_S`,
/// `𝔐_α ⊆ M_qi`). The raw link `qi ⊆ 𝔈_S` is reported but not part of the verdict.
pub fn verify_chain(
    sys: &SystemSpec,
    v: &ScalarFunction,
    s: &GridSet,
    x0: &Point,
    tau: f64,
    opts: &InvarianceCheckOptions,
) -> Result<(LocationReport, Vec<(String, GridSet)>)> {
    let tol = opts.cells_tol * s.max_cell_width();
    let inv = &opts.malpha.invariance;
    let view = run_case(sys, v, x0, opts)?;
    let (malpha, _) = m_alpha(sys, v, s, view.alpha, &opts.malpha)?;
    let n = view.traj.states.len();
    let omega = greedy_net(&view.traj.states[(n * 9) / 10..], opts.eps);
    let mut sets: Vec<(String, GridSet)> = vec![("m_alpha".into(), malpha.clone())];
    let mut links = Vec::new();
    let omega_excess = omega
        .iter()
        .filter(|p| malpha.is_empty() || malpha.closure_distance(p).expect("nonempty") > tol)
        .count();
    links.push(ChainLink {
        subset: "omega".into(),
        superset: "M_alpha".into(),
        holds: omega_excess == 0,
        excess: omega_excess,
    });
    let link = |a: &GridSet, an: &str, b: &GridSet, bn: &str| -> Result<ChainLink> {
        let excess = a.excess_over(&b.dilate(1))?;
        Ok(ChainLink {
            subset: an.into(),
            superset: bn.into(),
            holds: excess == 0,
            excess,
        })
    };
    let mut warnings = Vec::new();
    if sys.operator.is_zero() {
        let e = e_set(sys, v, s, tau)?;
        let (m, _) = largest_invariant_subset(sys, &e, inv)?;
        links.push(link(&malpha, "M_alpha", &m, "M")?);
        links.push(link(&m, "M", &e, "E")?);
        links.push(link(&e, "E", s, "S")?);
        sets.push(("e".into(), e));
        sets.push(("m".into(), m));
    } else {
        match &sys.operator {
            MonotoneOperator::Subdifferential(_) | MonotoneOperator::NormalCone(_) => {}
            other => {
                return Err(Error::Unsupported(format!(
                    "no inclusion chain for a {} operator",
                    other.kind()
                )))
            }
        }
        let es = e_s_set(sys, v, s, tau)?;
        let (ms, _) = largest_invariant_subset(sys, &es, inv)?;
        let qi = qi_set(sys, v, s, tau)?;
        let (mq, _) = largest_invariant_subset(sys, &qi, inv)?;
        links.push(link(&malpha, "M_alpha", &mq, "M_qi")?);
        links.push(link(&mq, "M_qi", &ms, "M_S")?);
        links.push(link(&malpha, "M_alpha", &ms, "M_S")?);
        links.push(link(&ms, "M_S", &es, "E_S")?);
        links.push(link(&es, "E_S", s, "S")?);
        let raw = link(&qi, "qi", &es, "E_S")?;
        if !raw.holds {
            warnings.push(format!(
                "raw Qi set exceeds E_S by {} cells; the verdict uses the invariant parts only",
                raw.excess
            ));
        }
        links.push(raw);
        sets.push(("es".into(), es));
        sets.push(("m_s".into(), ms));
        sets.push(("qi".into(), qi));
        sets.push(("m_qi".into(), mq));
    }
    // the raw qi link is informational: the inclusion is asserted for invariant parts
    let failed = links.iter().filter(|l| !l.holds && l.subset != "qi").count();
    let mut report = LocationReport::new("chain", failed as f64, 0.0);
    report.chain = links;
    report.warnings = warnings;
    Ok((report, sets))
}

/// Options for [`check_h2`].
#[derive(Debug, Clone, PartialEq)]
pub struct H2Options {
    pub radii: Vec<f64>,
    pub samples: usize,
    pub tol: f64,
}

impl Default for H2Options {
    fn default() -> Self {
        H2Options {
            radii: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            samples: 200,
            tol: 1e-4,
        }
    }
}

/// `V(x) = liminf_{w → x, w ∈ dom A} V(w)`, probed with samples projected onto
/// `cl(dom A)` inside shrinking balls.
pub fn check_h2(
    v: impl Fn(&Point) -> Result<f64>,
    op: &MonotoneOperator,
    xs: &[Point],
    opts: &H2Options,
) -> Result<HypothesisCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x42);
    let mut worst = 0.0f64;
    let mut inconclusive = 0;
    for x in xs {
        let vx = v(x)?;
        let d = x.len();
        let mut last_min = None;
        for &r in &opts.radii {
            let mut m = f64::INFINITY;
            for _ in 0..opts.samples {
                let dir = Point::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                let y = op.project_domain(&(x + dir * (r / d as f64).min(r)));
                if op.value_set(&y).is_err() {
                    continue;
                }
                if let Ok(val) = v(&y) {
                    m = m.min(val);
                }
            }
            if m.is_finite() {
                last_min = Some(m);
            }
        }
        match last_min {
            None => inconclusive += 1,
            Some(m) => {
                let gap = if vx.is_finite() { (m - vx).abs() } else { f64::INFINITY };
                worst = worst.max(gap);
            }
        }
    }
    let outcome = if worst > opts.tol {
        Outcome::Fail
    } else if inconclusive > 0 {
        Outcome::Inconclusive
    } else {
        Outcome::Pass
    };
    Ok(HypothesisCheck {
        name: "H2".into(),
        outcome,
        sampled: true,
        value: worst,
        detail: format!("max |liminf − V(x)| = {worst:.3e}; {inconclusive} points without dom A samples"),
    })
}

/// Density of `V(S⁺_W) ∖ V(S ∖ S⁺_W)` in `V(S⁺_W)` at resolution
/// `δ = (max V − min V)/1000`, using cell centers.
pub fn check_h3(v: &ScalarFunction, s: &GridSet, w: &ScalarFunction, tol_w: f64) -> Result<HypothesisCheck> {
    let mut plus = Vec::new();
    let mut zero = Vec::new();
    for c in s.centers() {
        let vv = v.value(&c)?;
        if !vv.is_finite() {
            continue;
        }
        if w.value(&c)? > tol_w {
            plus.push(vv);
        } else {
            zero.push(vv);
        }
    }
    if plus.is_empty() {
        return Ok(HypothesisCheck {
            name: "H3".into(),
            outcome: Outcome::Pass,
            sampled: true,
            value: 0.0,
            detail: "S⁺_W is empty: vacuous".into(),
        });
    }
    let lo = plus.iter().chain(&zero).cloned().fold(f64::INFINITY, f64::min);
    let hi = plus.iter().chain(&zero).cloned().fold(f64::NEG_INFINITY, f64::max);
    let delta = (hi - lo) / 1000.0;
    let same = (delta * 1e-3).max(1e-12);
    zero.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let exceptional = |u: f64| {
        let i = zero.partition_point(|z| *z < u - same);
        i < zero.len() && zero[i] <= u + same
    };
    let mut regular: Vec<f64> = plus.iter().cloned().filter(|u| !exceptional(*u)).collect();
    regular.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let gap = plus
        .iter()
        .map(|v| {
            if regular.is_empty() {
                return f64::INFINITY;
            }
            let i = regular.partition_point(|u| u < v);
            let mut best = f64::INFINITY;
            if i < regular.len() {
                best = best.min(regular[i] - v);
            }
            if i > 0 {
                best = best.min(v - regular[i - 1]);
            }
            best
        })
        .fold(0.0, f64::max);
    Ok(HypothesisCheck {
        name: "H3".into(),
        outcome: if gap <= delta { Outcome::Pass } else { Outcome::Fail },
        sampled: true,
        value: gap,
        detail: format!("largest gap {gap:.3e} at resolution {delta:.3e}"),
    })
}

/// `ω(x₀) ⊂ S ⊂ dom V` at grid level.
pub fn check_a2(omega: &OmegaEstimate, s: &GridSet, v: &ScalarFunction, tol: f64) -> Result<HypothesisCheck> {
    let d = max_distance_to(&omega.representatives(), s);
    let mut offending = Vec::new();
    for i in s.members() {
        if !v.value(&s.center(i))?.is_finite() {
            offending.push(i);
        }
    }
    let ok = d <= tol && offending.is_empty();
    let mut detail = format!("max ω distance to S {d:.3e}");
    if !offending.is_empty() {
        let shown: Vec<String> = offending.iter().take(20).map(|c| c.to_string()).collect();
        detail.push_str(&format!("; {} cells outside dom V: {}", offending.len(), shown.join(" ")));
    }
    Ok(HypothesisCheck {
        name: "A2".into(),
        outcome: if ok { Outcome::Pass } else { Outcome::Fail },
        sampled: false,
        value: d,
        detail,
    })
}

/// Decrease along a trajectory, summarised as a hypothesis check.
pub fn check_decrease(
    traj: &Trajectory,
    pair: &LyapunovPair,
    quadrature: Quadrature,
    tol: f64,
) -> Result<HypothesisCheck> {
    let r = check_decrease_along(traj, pair, quadrature, tol)?;
    let rule = match quadrature {
        Quadrature::Trapezoid => "trapezoid",
        Quadrature::RightEndpoint => "right endpoint",
    };
    Ok(HypothesisCheck {
        name: "decrease".into(),
        outcome: if r.holds { Outcome::Pass } else { Outcome::Fail },
        sampled: true,
        value: r.worst_violation,
        detail: format!("worst window violation {:.3e} ({rule})", r.worst_violation),
    })
}
