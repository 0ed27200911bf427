//! Lyapunov pairs `(V, W)` and their decrease conditions.
//!
//! The pair condition at `x` is
//! `sup_{ζ ∈ ∂V(x)} inf_{v ∈ A(x)} <ζ, f(x) − v> ≤ −W(x)`.
//! The inner infimum equals `<ζ, f(x)> − σ_{A(x)}(ζ)` and is exact whenever the value
//! set has a support function. Verdicts are `verified` only when the subgradient
//! sample is exhaustive and every inner value is exact.

use rayon::prelude::*;
use serde::Serialize;

use crate::convex::{ConvexFunction, ConvexSet, SubgradientSample};
use crate::dynamics::{SystemSpec, Trajectory};
use crate::linalg::{zeros, Point};
use crate::operators::MonotoneOperator;
use crate::sysconfig::Expr;
use crate::{Error, Result};

pub const TOL_EXACT: f64 = 1e-8;
pub const TOL_SAMPLED: f64 = 1e-4;
pub const SAMPLE_BUDGET: usize = 16;
/// Ray parameters scanned for unbounded subgradient sets.
const RAY_SCAN: [f64; 8] = [0.0, 1.0, 10.0, 1e2, 1e3, 1e4, 1e5, 1e6];
pub const CONTINGENT_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// A scalar function used as `V` or `W`.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFunction {
    Convex(ConvexFunction),
    /// Continuously differentiable expression; gradients by forward-mode differentiation.
    Smooth { dim: usize, expr: Expr },
}

impl ScalarFunction {
    pub fn smooth(dim: usize, expr: Expr) -> Self {
        ScalarFunction::Smooth { dim, expr }
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarFunction::Convex(f) => f.dim(),
            ScalarFunction::Smooth { dim, .. } => *dim,
        }
    }

    pub fn value(&self, x: &Point) -> Result<f64> {
        match self {
            ScalarFunction::Convex(f) => f.value(x),
            ScalarFunction::Smooth { expr, .. } => expr.eval(x.as_slice()),
        }
    }

    pub fn gradient(&self, x: &Point) -> Result<Option<Point>> {
        match self {
            ScalarFunction::Convex(f) => f.gradient(x),
            ScalarFunction::Smooth { expr, .. } => Ok(Some(Point::from_vec(expr.gradient(x.as_slice())?))),
        }
    }

    pub fn subgradient_sample(&self, x: &Point, budget: usize) -> Result<SubgradientSample> {
        match self {
            ScalarFunction::Convex(f) => f.subgradient_sample(x, budget),
            ScalarFunction::Smooth { .. } => Ok(SubgradientSample {
                base: x.clone(),
                vectors: vec![self.gradient(x)?.expect("smooth")],
                rays: vec![],
                exhaustive: true,
            }),
        }
    }

    pub fn horizon_subgradient_sample(&self, x: &Point) -> Result<SubgradientSample> {
        match self {
            ScalarFunction::Convex(f) => f.horizon_subgradient_sample(x),
            ScalarFunction::Smooth { .. } => Ok(SubgradientSample {
                base: x.clone(),
                vectors: vec![zeros(x.len())],
                rays: vec![],
                exhaustive: true,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Smoothness {
    C1,
    ConvexNonsmooth,
    LscWithOracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovPair {
    pub v: ScalarFunction,
    pub w: ScalarFunction,
    pub smoothness: Smoothness,
}

impl LyapunovPair {
    pub fn new(v: ScalarFunction, w: ScalarFunction) -> Result<Self> {
        if v.dim() != w.dim() {
            return Err(Error::dim(v.dim(), w.dim(), "lyapunov pair"));
        }
        let smoothness = match &v {
            ScalarFunction::Smooth { .. } => Smoothness::C1,
            ScalarFunction::Convex(
                ConvexFunction::Quadratic { .. } | ConvexFunction::Zero { .. },
            ) => Smoothness::C1,
            ScalarFunction::Convex(ConvexFunction::Custom(c)) if c.smooth && c.domain.is_none() => Smoothness::C1,
            ScalarFunction::Convex(_) => Smoothness::ConvexNonsmooth,
        };
        Ok(LyapunovPair { v, w, smoothness })
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `inf` over the full value set `A(x)`.
    FullInfimum,
    /// `v` fixed to the minimal-norm selection: `<ζ, (f(x) − A(x))°>`.
    MinNorm,
    /// Subgradients `∂V(x) ∪ ∂_∞V(x)`.
    Horizon,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "full-infimum" => Ok(Variant::FullInfimum),
            "min-norm" | "minnorm" => Ok(Variant::MinNorm),
            "horizon" => Ok(Variant::Horizon),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant {other:?} (expected full, min-norm or horizon)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Verified,
    SampledPass,
    Fail,
    /// Outside `dom V` or `dom A`; nothing to check.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointRecord {
    pub index: usize,
    pub x: Vec<f64>,
    pub sup_inf: Option<f64>,
    pub w: Option<f64>,
    pub margin: Option<f64>,
    pub verdict: Verdict,
    pub exhaustive: bool,
    pub exact_inner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheckReport {
    pub method: String,
    pub tol_exact: f64,
    pub tol_sampled: f64,
    pub worst_margin: f64,
    pub verified: usize,
    pub sampled_pass: usize,
    pub failed: usize,
    pub skipped: usize,
    pub points: Vec<PointRecord>,
}

impl PairCheckReport {
    fn assemble(method: String, tol_exact: f64, tol_sampled: f64, points: Vec<PointRecord>) -> Self {
        let count = |v: Verdict| points.iter().filter(|p| p.verdict == v).count();
        let worst_margin = points
            .iter()
            .filter_map(|p| p.margin)
            .fold(f64::NEG_INFINITY, f64::max);
        PairCheckReport {
            method,
            tol_exact,
            tol_sampled,
            worst_margin,
            verified: count(Verdict::Verified),
            sampled_pass: count(Verdict::SampledPass),
            failed: count(Verdict::Fail),
            skipped: count(Verdict::Skipped),
            points,
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

/// Tolerances of a pair check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckTolerances {
    pub exact: f64,
    pub sampled: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances {
            exact: TOL_EXACT,
            sampled: TOL_SAMPLED,
        }
    }
}

fn classify(margin: f64, certified: bool, tol: CheckTolerances) -> Verdict {
    let limit = if certified { tol.exact } else { tol.sampled };
    if margin > limit {
        Verdict::Fail
    } else if certified {
        Verdict::Verified
    } else {
        Verdict::SampledPass
    }
}

fn skipped(index: usize, x: &Point) -> PointRecord {
    PointRecord {
        index,
        x: x.as_slice().to_vec(),
        sup_inf: None,
        w: None,
        margin: None,
        verdict: Verdict::Skipped,
        exhaustive: false,
        exact_inner: false,
    }
}

/// `(inf_{v ∈ A(x)} <ζ, f − v>, exact)`.
fn inner_infimum(zeta: &Point, fx: &Point, value_set: Option<&ConvexSet>, fallback: &Point) -> (f64, bool) {
    if let Some(s) = value_set {
        if let Some(sigma) = s.support(zeta) {
            return (zeta.dot(fx) - sigma, true);
        }
    }
    (zeta.dot(fallback), false)
}

/// Supremum of the inner value over `vectors + t·rays` (rays scanned on a log grid).
fn sup_inner(
    sample: &SubgradientSample,
    fx: &Point,
    value_set: Option<&ConvexSet>,
    fallback: &Point,
) -> (f64, bool) {
    let mut best = f64::NEG_INFINITY;
    let mut exact = true;
    for z in &sample.vectors {
        let (v, e) = inner_infimum(z, fx, value_set, fallback);
        best = best.max(v);
        exact &= e;
        for r in &sample.rays {
            for &t in &RAY_SCAN[1..] {
                let (vr, er) = inner_infimum(&(z + r * t), fx, value_set, fallback);
                // a finite value along a ray is only sampled
                exact &= er && vr == f64::NEG_INFINITY;
                best = best.max(vr);
            }
        }
    }
    (best, exact)
}

/// Checks the pair condition at each point, in parallel; records stay in point order.
pub fn check_pair_condition(
    sys: &SystemSpec,
    pair: &LyapunovPair,
    points: &[Point],
    variant: Variant,
    tol: CheckTolerances,
) -> Result<PairCheckReport> {
    if pair.dim() != sys.dim {
        return Err(Error::dim(sys.dim, pair.dim(), "lyapunov pair vs system"));
    }
    let records = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| check_point(sys, pair, i, x, variant, tol))
        .collect::<Result<Vec<_>>>()?;
    let method = match variant {
        Variant::FullInfimum => "full-infimum",
        Variant::MinNorm => "min-norm",
        Variant::Horizon => "horizon",
    };
    Ok(PairCheckReport::assemble(method.into(), tol.exact, tol.sampled, records))
}

fn check_point(
    sys: &SystemSpec,
    pair: &LyapunovPair,
    index: usize,
    x: &Point,
    variant: Variant,
    tol: CheckTolerances,
) -> Result<PointRecord> {
    if x.len() != sys.dim {
        return Err(Error::dim(sys.dim, x.len(), "check point"));
    }
    let v_x = pair.v.value(x)?;
    if !v_x.is_finite() {
        return Ok(skipped(index, x));
    }
    let value_set = match sys.operator.value_set(x) {
        Ok(s) => s,
        Err(Error::EmptySubdifferential) => return Ok(skipped(index, x)),
        Err(e) => return Err(e),
    };
    let fx = sys.f(x)?;
    let rd = match sys.right_derivative(x) {
        Ok(v) => v,
        Err(Error::OutsideDomain(_)) => return Ok(skipped(index, x)),
        Err(e) => return Err(e),
    };
    let mut sample = match pair.v.subgradient_sample(x, SAMPLE_BUDGET) {
        Ok(s) => s,
        Err(Error::EmptySubdifferential) => return Ok(skipped(index, x)),
        Err(e) => return Err(e),
    };
    if variant == Variant::Horizon {
        let h = pair.v.horizon_subgradient_sample(x)?;
        sample.rays.extend(h.rays);
        sample.exhaustive &= h.exhaustive;
    }
    let (sup_inf, exact) = match variant {
        Variant::FullInfimum | Variant::Horizon => sup_inner(&sample, &fx, value_set.as_ref(), &rd),
        Variant::MinNorm => {
            let only = ConvexSet::Point(sys.f(x)? - &rd);
            let (v, _) = sup_inner(&sample, &fx, Some(&only), &rd);
            (v, value_set.is_some() && !sample.rays.iter().any(|r| r.dot(&rd) > 0.0))
        }
    };
    let w = pair.w.value(x)?;
    let margin = sup_inf + w;
    Ok(PointRecord {
        index,
        x: x.as_slice().to_vec(),
        sup_inf: Some(sup_inf),
        w: Some(w),
        margin: Some(margin),
        verdict: classify(margin, sample.exhaustive && exact, tol),
        exhaustive: sample.exhaustive,
        exact_inner: exact,
    })
}

/// `max_{v ∈ −∂φ(x)} <∇V(x), f(x) + v> ≤ 0` for smooth `V` and `A = ∂φ`.
pub fn check_c1_condition(
    sys: &SystemSpec,
    v: &ScalarFunction,
    points: &[Point],
    tol: CheckTolerances,
) -> Result<PairCheckReport> {
    match &sys.operator {
        MonotoneOperator::Subdifferential(_) | MonotoneOperator::NormalCone(_) | MonotoneOperator::Zero { .. } => {}
        other => {
            return Err(Error::Unsupported(format!(
                "C1 condition needs a subdifferential operator, got {}",
                other.kind()
            )))
        }
    }
    let records = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<PointRecord> {
            let Some(g) = v.gradient(x)? else {
                return Err(Error::Unsupported("C1 condition needs a differentiable V".into()));
            };
            let set = match sys.operator.value_set(x) {
                Ok(Some(s)) => s,
                Ok(None) => return Err(Error::Unsupported("no value-set descriptor for ∂φ".into())),
                Err(Error::EmptySubdifferential) => return Ok(skipped(i, x)),
                Err(e) => return Err(e),
            };
            let fx = sys.f(x)?;
            let (sigma, exact) = match set.support(&-&g) {
                Some(s) => (s, true),
                None => (-g.dot(&set.project(&-&g)), false),
            };
            let value = g.dot(&fx) + sigma;
            Ok(PointRecord {
                index: i,
                x: x.as_slice().to_vec(),
                sup_inf: Some(value),
                w: Some(0.0),
                margin: Some(value),
                verdict: classify(value, exact, tol),
                exhaustive: true,
                exact_inner: exact,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairCheckReport::assemble("c1".into(), tol.exact, tol.sampled, records))
}

/// Numerical contingent derivative `liminf_{t↓0, w→v} (V(x + tw) − V(x))/t`.
///
/// Probes `w ∈ {v, v ± t e_i}` at each scale and returns the smallest quotient at the
/// finest scale that has a finite probe. `+∞` means every probe left `dom V`.
pub fn contingent_derivative(v: &ScalarFunction, x: &Point, dir: &Point, schedule: &[f64]) -> Result<f64> {
    let vx = v.value(x)?;
    if !vx.is_finite() {
        return Err(Error::OutsideDomain("contingent derivative outside dom V".into()));
    }
    let d = x.len();
    let mut result = f64::INFINITY;
    for &t in schedule {
        let mut best = f64::INFINITY;
        let mut probe = |w: Point| -> Result<()> {
            let val = match v.value(&(x + w * t)) {
                Ok(val) => val,
                Err(Error::Evaluation(_)) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            if val.is_finite() {
                best = best.min((val - vx) / t);
            }
            Ok(())
        };
        probe(dir.clone())?;
        for i in 0..d {
            for s in [-1.0, 1.0] {
                let mut w = dir.clone();
                w[i] += s * t;
                probe(w)?;
            }
        }
        if best.is_finite() {
            result = best;
        }
    }
    Ok(result)
}

/// Integration rule for `∫ W` along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quadrature {
    Trapezoid,
    /// `Σ h W(x_{j+1})`, the rule matched to the implicit step.
    RightEndpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecreaseReport {
    pub holds: bool,
    /// `max_{k < m} V(x_m) − V(x_k) + ∫_{t_k}^{t_m} W`, clamped below at 0.
    pub worst_violation: f64,
    /// Window `(k, m)` attaining the worst violation.
    pub worst_window: (usize, usize),
    pub tol_int: f64,
    pub quadrature: Quadrature,
}

/// Checks `V(x_m) ≤ V(x_k) − ∫_{t_k}^{t_m} W + tol_int` for every window `k < m`.
pub fn check_decrease_along(
    traj: &Trajectory,
    pair: &LyapunovPair,
    quadrature: Quadrature,
    tol_int: f64,
) -> Result<DecreaseReport> {
    let vs = traj.states.iter().map(|x| pair.v.value(x)).collect::<Result<Vec<_>>>()?;
    let ws = traj.states.iter().map(|x| pair.w.value(x)).collect::<Result<Vec<_>>>()?;
    let mut integral = 0.0;
    let mut min_g = vs[0];
    let mut arg_min = 0;
    let mut worst = 0.0f64;
    let mut window = (0, 0);
    for m in 1..vs.len() {
        let h = traj.times[m] - traj.times[m - 1];
        integral += match quadrature {
            Quadrature::Trapezoid => 0.5 * h * (ws[m - 1] + ws[m]),
            Quadrature::RightEndpoint => h * ws[m],
        };
        let g = vs[m] + integral;
        if g - min_g > worst {
            worst = g - min_g;
            window = (arg_min, m);
        }
        if g < min_g {
            min_g = g;
            arg_min = m;
        }
    }
    Ok(DecreaseReport {
        holds: worst <= tol_int,
        worst_violation: worst,
        worst_window: window,
        tol_int,
        quadrature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, VectorField};
    use crate::linalg::{matrix_from_rows, point};
    use std::collections::BTreeMap;

    fn expr(src: &str, dim: usize) -> Expr {
        crate::sysconfig::parse_expression(src, dim, &BTreeMap::new()).unwrap()
    }

    fn gradient_flow() -> (SystemSpec, LyapunovPair) {
        let phi = ConvexFunction::half_norm_squared(1, 1.0);
        let sys = SystemSpec::new(
            "gf",
            VectorField::Zero { dim: 1 },
            MonotoneOperator::Subdifferential(phi.clone()),
        )
        .unwrap();
        let pair = LyapunovPair::new(ScalarFunction::Convex(phi), ScalarFunction::smooth(1, expr("x1^2", 1))).unwrap();
        (sys, pair)
    }

    fn rld() -> (SystemSpec, LyapunovPair) {
        let sys = SystemSpec::new(
            "rld",
            VectorField::linear(matrix_from_rows(&[vec![-1.0]]).unwrap()),
            MonotoneOperator::Subdifferential(ConvexFunction::abs()),
        )
        .unwrap();
        let pair = LyapunovPair::new(
            ScalarFunction::smooth(1, expr("x1^2/2", 1)),
            ScalarFunction::smooth(1, expr("x1^2 + abs(x1)", 1)),
        )
        .unwrap();
        (sys, pair)
    }

    #[test]
    fn pair_condition_examples() {
        let (sys, pair) = gradient_flow();
        let r = check_pair_condition(&sys, &pair, &[point(&[1.0]), point(&[0.0])], Variant::FullInfimum, Default::default())
            .unwrap();
        assert_eq!(r.points[0].sup_inf, Some(-1.0));
        assert_eq!(r.points[0].margin, Some(0.0));
        assert_eq!(r.points[0].verdict, Verdict::Verified);
        assert_eq!(r.points[1].margin, Some(0.0));
        let (sys, pair) = rld();
        let r = check_pair_condition(&sys, &pair, &[point(&[0.5])], Variant::FullInfimum, Default::default()).unwrap();
        assert!((r.points[0].sup_inf.unwrap() + 0.75).abs() < 1e-15);
        assert!(r.points[0].margin.unwrap().abs() < 1e-15);
        assert_eq!(r.points[0].verdict, Verdict::Verified);
    }

    #[test]
    fn variants_agree_at_singletons() {
        let (sys, pair) = rld();
        let pts: Vec<Point> = [-0.8, -0.3, 0.2, 0.7].iter().map(|v| point(&[*v])).collect();
        let full = check_pair_condition(&sys, &pair, &pts, Variant::FullInfimum, Default::default()).unwrap();
        let mn = check_pair_condition(&sys, &pair, &pts, Variant::MinNorm, Default::default()).unwrap();
        let hz = check_pair_condition(&sys, &pair, &pts, Variant::Horizon, Default::default()).unwrap();
        let c1 = check_c1_condition(&sys, &pair.v, &pts, Default::default()).unwrap();
        for i in 0..pts.len() {
            let a = full.points[i].sup_inf.unwrap();
            assert!((a - mn.points[i].sup_inf.unwrap()).abs() < 1e-10);
            assert!((a - hz.points[i].sup_inf.unwrap()).abs() < 1e-10);
            assert!((a - c1.points[i].sup_inf.unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn rld_kink_uses_full_interval() {
        let (sys, pair) = rld();
        let r = check_pair_condition(&sys, &pair, &[point(&[0.0])], Variant::FullInfimum, Default::default()).unwrap();
        assert_eq!(r.points[0].margin, Some(0.0));
    }

    #[test]
    fn c1_examples() {
        let (sys, pair) = rld();
        let r = check_c1_condition(&sys, &pair.v, &[point(&[0.5]), point(&[0.0])], Default::default()).unwrap();
        assert!((r.points[0].margin.unwrap() + 0.75).abs() < 1e-15);
        assert_eq!(r.points[1].margin, Some(0.0));
        let grow = SystemSpec::new(
            "grow",
            VectorField::linear(matrix_from_rows(&[vec![2.0]]).unwrap()),
            MonotoneOperator::Subdifferential(ConvexFunction::abs()),
        )
        .unwrap();
        let r = check_c1_condition(&grow, &pair.v, &[point(&[1.0])], Default::default()).unwrap();
        assert_eq!(r.points[0].margin, Some(1.0));
        assert_eq!(r.points[0].verdict, Verdict::Fail);
        let linear = SystemSpec::new(
            "lin",
            VectorField::Zero { dim: 1 },
            MonotoneOperator::Linear(matrix_from_rows(&[vec![1.0]]).unwrap()),
        )
        .unwrap();
        assert!(check_c1_condition(&linear, &pair.v, &[point(&[1.0])], Default::default()).is_err());
    }

    #[test]
    fn contingent_examples() {
        let abs = ScalarFunction::Convex(ConvexFunction::abs());
        let d = contingent_derivative(&abs, &point(&[0.0]), &point(&[1.0]), &CONTINGENT_SCHEDULE).unwrap();
        assert!((d - 1.0).abs() < 1e-5);
        let q = ScalarFunction::Convex(ConvexFunction::half_norm_squared(2, 1.0));
        let d = contingent_derivative(&q, &point(&[1.0, 0.0]), &point(&[0.0, 1.0]), &CONTINGENT_SCHEDULE).unwrap();
        assert!(d.abs() < 1e-5);
        let ind = ScalarFunction::Convex(ConvexFunction::indicator(ConvexSet::interval(0.0, 1.0)));
        let d = contingent_derivative(&ind, &point(&[0.0]), &point(&[-1.0]), &CONTINGENT_SCHEDULE).unwrap();
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn decrease_along_trajectories() {
        let (sys, pair) = gradient_flow();
        let traj = simulate(&sys, &point(&[1.0]), 2.0, 1e-3, None).unwrap();
        let r = check_decrease_along(&traj, &pair, Quadrature::RightEndpoint, 1e-4).unwrap();
        assert!(r.holds);
        let zero_w = LyapunovPair::new(pair.v.clone(), ScalarFunction::Convex(ConvexFunction::zero(1))).unwrap();
        assert!(check_decrease_along(&traj, &zero_w, Quadrature::Trapezoid, 0.0).unwrap().holds);
        let grow = SystemSpec::new(
            "grow",
            VectorField::linear(matrix_from_rows(&[vec![1.0]]).unwrap()),
            MonotoneOperator::Zero { dim: 1 },
        )
        .unwrap();
        let short = simulate(&grow, &point(&[1.0]), 1.0, 1e-3, None).unwrap();
        let long = simulate(&grow, &point(&[1.0]), 2.0, 1e-3, None).unwrap();
        let a = check_decrease_along(&short, &zero_w, Quadrature::Trapezoid, 1e-4).unwrap();
        let b = check_decrease_along(&long, &zero_w, Quadrature::Trapezoid, 1e-4).unwrap();
        assert!(!a.holds && b.worst_violation > a.worst_violation);
    }

    #[test]
    fn shrinking_tolerance_never_certifies_a_failure() {
        let (sys, pair) = rld();
        let pts: Vec<Point> = (-9..=9).map(|k| point(&[k as f64 * 0.1])).collect();
        let loose = check_pair_condition(&sys, &pair, &pts, Variant::FullInfimum, Default::default()).unwrap();
        let tight = check_pair_condition(
            &sys,
            &pair,
            &pts,
            Variant::FullInfimum,
            CheckTolerances { exact: 1e-14, sampled: 1e-12 },
        )
        .unwrap();
        for (a, b) in loose.points.iter().zip(&tight.points) {
            if a.verdict == Verdict::Fail {
                assert_eq!(b.verdict, Verdict::Fail);
            }
        }
    }
}
