//! Time integration of `ẋ ∈ f(x) − A(x)` by forward-f / backward-A splitting.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex::{ConvexSet, ACTIVE_TOL};
use crate::linalg::{zeros, Point};
use crate::operators::{MonotoneOperator, YOSIDA_SCHEDULE};
use crate::sysconfig::Expr;
use crate::{Error, Result};

/// Consecutive tiny steps that mark a stalled trajectory.
pub const STALL_STEPS: usize = 10;
pub const STALL_TOL: f64 = 1e-14;
/// Membership tolerance for `cl(dom A)`.
pub const DOMAIN_TOL: f64 = 1e-9;
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Single-valued Lipschitz part `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorField {
    Zero { dim: usize },
    /// `f(x) = Mx + b`
    Affine { matrix: DMatrix<f64>, offset: Point },
    /// One expression per coordinate.
    Exprs(Vec<Expr>),
}

impl VectorField {
    pub fn linear(matrix: DMatrix<f64>) -> Self {
        let n = matrix.nrows();
        VectorField::Affine {
            matrix,
            offset: zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            VectorField::Zero { dim } => *dim,
            VectorField::Affine { offset, .. } => offset.len(),
            VectorField::Exprs(e) => e.len(),
        }
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len(), "vector field argument"));
        }
        match self {
            VectorField::Zero { dim } => Ok(zeros(*dim)),
            VectorField::Affine { matrix, offset } => Ok(matrix * x + offset),
            VectorField::Exprs(e) => {
                let v = e.iter().map(|ei| ei.eval(x.as_slice())).collect::<Result<Vec<_>>>()?;
                Ok(Point::from_vec(v))
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VectorField::Zero { .. } => true,
            VectorField::Affine { matrix, offset } => matrix.iter().all(|v| *v == 0.0) && offset.iter().all(|v| *v == 0.0),
            VectorField::Exprs(_) => false,
        }
    }

    /// Lipschitz constant: exact spectral norm for affine fields, sampled otherwise.
    pub fn estimate_lipschitz(&self, bounds: &ConvexSet, samples: usize) -> Result<f64> {
        match self {
            VectorField::Zero { .. } => Ok(0.0),
            VectorField::Affine { matrix, .. } => Ok(matrix.clone().svd(false, false).singular_values.max()),
            VectorField::Exprs(_) => {
                let mut rng = ChaCha8Rng::seed_from_u64(0x11f);
                let mut best = 0.0f64;
                for i in 0..samples {
                    let x = sample_in(bounds, self.dim(), &mut rng);
                    let y = if i % 2 == 0 {
                        let dir = Point::from_fn(self.dim(), |_, _| rng.gen_range(-1.0..1.0));
                        bounds.project(&(&x + dir * 1e-4))
                    } else {
                        sample_in(bounds, self.dim(), &mut rng)
                    };
                    let d = (&x - &y).norm();
                    if d == 0.0 {
                        continue;
                    }
                    let (Ok(fx), Ok(fy)) = (self.eval(&x), self.eval(&y)) else { continue };
                    best = best.max((fx - fy).norm() / d);
                }
                Ok(best)
            }
        }
    }
}

/// Uniform sample of a bounded box (infinite sides clamp to `[-1, 1]`).
pub(crate) fn sample_in(bounds: &ConvexSet, dim: usize, rng: &mut impl Rng) -> Point {
    match bounds {
        ConvexSet::Box { lo, hi } => Point::from_fn(dim, |i, _| {
            let a = if lo[i].is_finite() { lo[i] } else { -1.0 };
            let b = if hi[i].is_finite() { hi[i] } else { 1.0 };
            if a < b {
                rng.gen_range(a..=b)
            } else {
                a
            }
        }),
        other => {
            let raw = Point::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
            other.project(&raw)
        }
    }
}

/// Known exact flow, used as an oracle in diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSolution {
    /// `x(t) = exp(Mt) x₀`
    Linear(DMatrix<f64>),
    /// `ẋ ∈ −r x − ∂|·|(x)` in one dimension.
    DiodeCircuit { rate: f64 },
}

impl ReferenceSolution {
    pub fn state(&self, x0: &Point, t: f64) -> Point {
        match self {
            ReferenceSolution::Linear(m) => (m * t).exp() * x0,
            ReferenceSolution::DiodeCircuit { rate } => {
                let v = x0[0];
                let s = v.signum();
                let a = v.abs();
                let u = (a + 1.0 / rate) * (-rate * t).exp() - 1.0 / rate;
                Point::from_element(1, s * u.max(0.0))
            }
        }
    }

    /// Finite absorption time into the equilibrium, when there is one.
    pub fn absorption_time(&self, x0: &Point) -> Option<f64> {
        match self {
            ReferenceSolution::DiodeCircuit { rate } => Some((1.0 + rate * x0[0].abs()).ln() / rate),
            ReferenceSolution::Linear(_) => None,
        }
    }
}

/// A dynamics instance `ẋ ∈ f(x) − A(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    pub field: VectorField,
    pub operator: MonotoneOperator,
    /// Lipschitz estimate `L_f` of the field.
    pub lipschitz: f64,
    pub reference: Option<ReferenceSolution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    SemiImplicit,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::SemiImplicit => "semi-implicit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub h: f64,
    pub scheme: Scheme,
    pub resolvent_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TrajectoryFlags {
    pub reached_t: bool,
    pub left_box: bool,
    pub stalled: bool,
    /// `0 ∈ f(x) − A(x)` at the stall point, when a stall occurred.
    pub equilibrium_certified: Option<bool>,
}

/// Discrete solution; `steps[k]` leads from `states[k]` to `states[k + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    pub steps: Vec<StepRecord>,
    pub flags: TrajectoryFlags,
}

impl Trajectory {
    pub fn last(&self) -> &Point {
        self.states.last().expect("trajectory has an initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has an initial time")
    }

    /// First recorded time from which the state stays within `tol` of `target`.
    pub fn settling_time(&self, target: &Point, tol: f64) -> Option<f64> {
        let mut idx = None;
        for (k, x) in self.states.iter().enumerate().rev() {
            if (x - target).norm() <= tol {
                idx = Some(k);
            } else {
                break;
            }
        }
        idx.map(|k| self.times[k])
    }

    /// CSV with header `t,x1..xn,step_scheme` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, |x| x.len());
        let mut out = String::from("t");
        for i in 1..=dim {
            let _ = write!(out, ",x{i}");
        }
        out.push_str(",step_scheme\n");
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{t:.16e}");
            for v in x.iter() {
                let _ = write!(out, ",{v:.16e}");
            }
            let scheme = if k == 0 { "initial" } else { self.steps[k - 1].scheme.name() };
            let _ = writeln!(out, ",{scheme}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::config(path.display().to_string(), e.to_string()))
    }
}

/// Options for [`simulate_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub t_end: f64,
    pub h: f64,
    /// Integration stops early once the state leaves this set.
    pub bounds: Option<ConvexSet>,
    /// Record every `stride`-th state (the final state is always recorded).
    pub stride: usize,
}

impl SimOptions {
    pub fn new(t_end: f64, h: f64) -> Self {
        SimOptions {
            t_end,
            h,
            bounds: None,
            stride: 1,
        }
    }

    pub fn with_bounds(mut self, bounds: ConvexSet) -> Self {
        self.bounds = Some(bounds);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }
}

impl SystemSpec {
    pub fn new(name: impl Into<String>, field: VectorField, operator: MonotoneOperator) -> Result<Self> {
        if field.dim() != operator.dim() {
            return Err(Error::dim(operator.dim(), field.dim(), "vector field vs operator"));
        }
        let dim = field.dim();
        let bounds = ConvexSet::Box {
            lo: Point::from_element(dim, -1.0),
            hi: Point::from_element(dim, 1.0),
        };
        let lipschitz = field.estimate_lipschitz(&bounds, 2000)?;
        Ok(SystemSpec {
            name: name.into(),
            dim,
            field,
            operator,
            lipschitz,
            reference: None,
        })
    }

    pub fn with_reference(mut self, reference: ReferenceSolution) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn f(&self, x: &Point) -> Result<Point> {
        self.field.eval(x)
    }

    /// `J_{hA}(x + h f(x))`.
    pub fn step_semi_implicit(&self, x: &Point, h: f64) -> Result<Point> {
        Ok(self.step_with_stats(x, h)?.0)
    }

    pub fn step_with_stats(&self, x: &Point, h: f64) -> Result<(Point, usize)> {
        if !(h > 0.0) {
            return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
        }
        let fx = self.f(x)?;
        let out = self.operator.resolvent_with_stats(h, &(x + fx * h))?;
        Ok((out.point, out.iterations))
    }

    /// `n` steps of size `h` without recording.
    pub fn advance(&self, x: &Point, h: f64, n: usize) -> Result<Point> {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.step_semi_implicit(&y, h)?;
        }
        Ok(y)
    }

    /// Numerical flow `Φ_t(x0)`: fixed steps of size `h`, the last one shortened to end at `t`.
    pub fn flow(&self, x0: &Point, t: f64, h: f64) -> Result<Point> {
        if t == 0.0 {
            return Ok(x0.clone());
        }
        let (n, last) = step_count(t, h);
        let y = self.advance(x0, h, n - 1)?;
        self.step_semi_implicit(&y, last)
    }

    /// `0 ∈ f(x) − A(x)` within `tol`.
    pub fn is_equilibrium(&self, x: &Point, tol: f64) -> bool {
        let Ok(fx) = self.f(x) else { return false };
        match self.operator.project_value_set(x, &fx) {
            Ok(p) => (p - &fx).norm() <= tol,
            Err(_) => self.right_derivative(x).is_ok_and(|v| v.norm() <= tol),
        }
    }

    /// Minimal-norm right derivative `(f(x) − A(x))° = f(x) − proj_{A(x)} f(x)`.
    ///
    /// Without a value-set descriptor this falls back to the limit of
    /// `(J_λ(x + λf(x)) − x)/λ` along the Yosida schedule.
    pub fn right_derivative(&self, x: &Point) -> Result<Point> {
        let fx = self.f(x)?;
        match self.operator.value_set(x) {
            Ok(Some(s)) => return Ok(&fx - s.project(&fx)),
            Ok(None) => {}
            Err(Error::EmptySubdifferential) => {
                return Err(Error::OutsideDomain("right derivative outside dom A".into()))
            }
            Err(e) => return Err(e),
        }
        let mut prev: Option<Point> = None;
        for lambda in YOSIDA_SCHEDULE {
            let p = self.operator.resolvent(lambda, &(x + &fx * lambda))?;
            let v = (p - x) / lambda;
            if let Some(q) = &prev {
                if (&v - q).norm() <= crate::operators::MIN_NORM_CAUCHY_TOL * (1.0 + v.norm()) {
                    return Ok(v);
                }
            }
            prev = Some(v);
        }
        Err(Error::NotConverged {
            iterations: YOSIDA_SCHEDULE.len(),
            context: "right-derivative difference quotients".into(),
        })
    }

    /// `‖Φ_s(Φ_t(x0)) − Φ_{s+t}(x0)‖` for the numerical flow with step `h`.
    pub fn semigroup_residual(&self, x0: &Point, s: f64, t: f64, h: f64) -> Result<f64> {
        if s < 0.0 || t < 0.0 {
            return Err(Error::InvalidArgument("semigroup times must be nonnegative".into()));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        let composed = self.flow(&self.flow(x0, t, h)?, s, h)?;
        let direct = self.flow(x0, s + t, h)?;
        Ok((composed - direct).norm())
    }

    /// Sampled check of `‖f(x) − f(y)‖ ≤ (L_f + tol)‖x − y‖`; returns the worst ratio.
    pub fn check_lipschitz(&self, bounds: &ConvexSet, samples: usize, tol: f64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(0xabc);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = sample_in(bounds, self.dim, &mut rng);
            let y = sample_in(bounds, self.dim, &mut rng);
            let d = (&x - &y).norm();
            if d == 0.0 {
                continue;
            }
            worst = worst.max((self.f(&x)? - self.f(&y)?).norm() / d);
        }
        if worst > self.lipschitz + tol {
            return Err(Error::InvalidArgument(format!(
                "sampled Lipschitz ratio {worst} exceeds the declared estimate {}",
                self.lipschitz
            )));
        }
        Ok(worst)
    }
}

/// Number of steps covering `[0, t]` with step `h`, and the length of the last one.
fn step_count(t: f64, h: f64) -> (usize, f64) {
    let ratio = t / h;
    let n = if (ratio - ratio.round()).abs() <= 1e-9 * ratio.max(1.0) {
        ratio.round() as usize
    } else {
        ratio.ceil() as usize
    };
    let n = n.max(1);
    let last = t - (n - 1) as f64 * h;
    (n, last)
}

/// Fixed-step semi-implicit trajectory on `[0, t_end]`.
pub fn simulate(sys: &SystemSpec, x0: &Point, t_end: f64, h: f64, bounds: Option<&ConvexSet>) -> Result<Trajectory> {
    let mut opts = SimOptions::new(t_end, h);
    opts.bounds = bounds.cloned();
    simulate_with(sys, x0, &opts)
}

pub fn simulate_with(sys: &SystemSpec, x0: &Point, opts: &SimOptions) -> Result<Trajectory> {
    if x0.len() != sys.dim {
        return Err(Error::dim(sys.dim, x0.len(), "initial condition"));
    }
    if !(opts.t_end > 0.0) || !(opts.h > 0.0) {
        return Err(Error::InvalidArgument("T and h must be positive".into()));
    }
    if !sys.operator.in_closed_domain(x0, DOMAIN_TOL * (1.0 + x0.norm())) {
        return Err(Error::InvalidInitialCondition(format!(
            "x0 = {:?} is not in cl(dom A)",
            x0.as_slice()
        )));
    }
    let (n, last) = step_count(opts.t_end, opts.h);
    let cap = n / opts.stride + 2;
    let mut times = Vec::with_capacity(cap);
    let mut states = Vec::with_capacity(cap);
    let mut steps = Vec::with_capacity(cap);
    let mut flags = TrajectoryFlags::default();
    times.push(0.0);
    states.push(x0.clone());
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut quiet = 0usize;
    let mut iters = 0usize;
    let mut pending_h = 0.0;
    for k in 0..n {
        let h = if k + 1 == n { last } else { opts.h };
        let (next, it) = sys.step_with_stats(&x, h)?;
        iters += it;
        pending_h += h;
        t = if k + 1 == n { opts.t_end } else { (k + 1) as f64 * opts.h };
        if (&next - &x).norm() <= STALL_TOL {
            quiet += 1;
            if quiet == STALL_STEPS && !flags.stalled {
                flags.stalled = true;
                flags.equilibrium_certified = Some(sys.is_equilibrium(&next, EQUILIBRIUM_TOL));
            }
        } else {
            quiet = 0;
        }
        x = next;
        let outside = opts
            .bounds
            .as_ref()
            .is_some_and(|b| !b.contains(&x, 0.0) || x.iter().any(|v| !v.is_finite()));
        if (k + 1) % opts.stride == 0 || k + 1 == n || outside {
            times.push(t);
            states.push(x.clone());
            steps.push(StepRecord {
                h: pending_h,
                scheme: Scheme::SemiImplicit,
                resolvent_iterations: iters,
            });
            iters = 0;
            pending_h = 0.0;
        }
        if outside {
            flags.left_box = true;
            break;
        }
    }
    flags.reached_t = !flags.left_box && (t - opts.t_end).abs() <= 1e-12 * opts.t_end.max(1.0);
    Ok(Trajectory {
        times,
        states,
        steps,
        flags,
    })
}

/// Independent trajectories from many initial conditions, in parallel.
pub fn simulate_batch(sys: &SystemSpec, x0s: &[Point], opts: &SimOptions) -> Vec<Result<Trajectory>> {
    x0s.par_iter().map(|x0| simulate_with(sys, x0, opts)).collect()
}

/// Step-halving diagnostic: differences `‖x_h − x_{h/2}‖`, `‖x_{h/2} − x_{h/4}‖` at `T`
/// and the observed order `log₂` of their ratio.
pub fn step_halving_order(sys: &SystemSpec, x0: &Point, t_end: f64, h: f64) -> Result<(f64, f64, f64)> {
    let a = sys.flow(x0, t_end, h)?;
    let b = sys.flow(x0, t_end, h / 2.0)?;
    let c = sys.flow(x0, t_end, h / 4.0)?;
    let d1 = (&a - &b).norm();
    let d2 = (&b - &c).norm();
    Ok((d1, d2, (d1 / d2).log2()))
}

/// `true` when all states stay in `cl(dom A)` within `tol`.
pub fn trajectory_feasible(sys: &SystemSpec, traj: &Trajectory, tol: f64) -> bool {
    traj.states
        .iter()
        .skip(1)
        .all(|x| sys.operator.in_closed_domain(x, tol.max(ACTIVE_TOL)))
}
