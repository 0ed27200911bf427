use rayon::prelude::*;

use super::grid::GridSet;
use super::invariant::{largest_invariant_subset, InvariancePruneTrace, InvarianceOptions};
use crate::convex::ConvexFunction;
use crate::dynamics::SystemSpec;
use crate::linalg::Point;
use crate::lyapunov::ScalarFunction;
use crate::operators::MonotoneOperator;
use crate::{Error, Result};

pub const TOL_LEVEL: f64 = 1e-9;

/// Range `[min lo, max hi]` of an interval-valued function over a cell's test points
/// (center and corners). `None` if the function is undefined at every test point.
type Interval = (f64, f64);

pub(crate) fn cell_ranges<F>(g: &GridSet, eval: F) -> Vec<Option<Interval>>
where
    F: Fn(&Point) -> Option<Interval> + Sync,
{
    let d = g.dim();
    let vres: Vec<usize> = g.resolution().iter().map(|r| r + 1).collect();
    let nv: usize = vres.iter().product();
    let mut needed = vec![false; nv];
    for c in g.members() {
        let m = g.multi_index(c);
        for corner in 0..(1usize << d) {
            let mut idx = 0;
            for a in (0..d).rev() {
                idx = idx * vres[a] + m[a] + ((corner >> a) & 1);
            }
            needed[idx] = true;
        }
    }
    let vertex_values: Vec<Option<Interval>> = (0..nv)
        .into_par_iter()
        .map(|v| {
            if !needed[v] {
                return None;
            }
            let mut rem = v;
            let x = Point::from_fn(d, |a, _| {
                let k = rem % vres[a];
                rem /= vres[a];
                if k == g.resolution()[a] {
                    g.hi()[a]
                } else {
                    g.lo()[a] + k as f64 * g.cell_width(a)
                }
            });
            eval(&x)
        })
        .collect();
    (0..g.len())
        .into_par_iter()
        .map(|c| {
            if !g.get(c) {
                return None;
            }
            let m = g.multi_index(c);
            let mut acc: Option<Interval> = None;
            let mut merge = |v: Option<Interval>| {
                if let Some((lo, hi)) = v {
                    acc = Some(match acc {
                        None => (lo, hi),
                        Some((a, b)) => (a.min(lo), b.max(hi)),
                    });
                }
            };
            merge(eval(&g.center(c)));
            for corner in 0..(1usize << d) {
                let mut idx = 0;
                for a in (0..d).rev() {
                    idx = idx * vres[a] + m[a] + ((corner >> a) & 1);
                }
                merge(vertex_values[idx]);
            }
            acc
        })
        .collect()
}

fn scalar(v: Result<f64>) -> Option<Interval> {
    match v {
        Ok(x) if !x.is_nan() => Some((x, x)),
        _ => None,
    }
}

/// Cells whose range meets `[lo, hi]`.
fn select(g: &GridSet, ranges: &[Option<Interval>], lo: f64, hi: f64) -> GridSet {
    let mask = ranges
        .iter()
        .map(|r| r.is_some_and(|(a, b)| a <= hi && b >= lo))
        .collect();
    g.with_mask(mask).expect("same layout")
}

/// Options shared by the band and zero-set builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandOptions {
    pub tol: f64,
    /// Dilate the result by one cell to stand in for the closure.
    pub closure_dilation: bool,
}

impl Default for BandOptions {
    fn default() -> Self {
        BandOptions {
            tol: TOL_LEVEL,
            closure_dilation: false,
        }
    }
}

/// `[α ≤ V ≤ β]|S`: cells of `S` where the range of `V` over the test points meets
/// `[α − tol, β + tol]`.
pub fn sublevel_band(v: &ScalarFunction, s: &GridSet, alpha: f64, beta: f64, opts: BandOptions) -> Result<GridSet> {
    if alpha > beta {
        return Err(Error::InvalidArgument(format!("band needs α ≤ β, got [{alpha}, {beta}]")));
    }
    check_dim(v.dim(), s)?;
    let ranges = cell_ranges(s, |x| scalar(v.value(x)));
    let band = select(s, &ranges, alpha - opts.tol, beta + opts.tol);
    Ok(if opts.closure_dilation {
        band.dilate(1).intersect(s)?
    } else {
        band
    })
}

fn check_dim(d: usize, s: &GridSet) -> Result<()> {
    if d != s.dim() {
        return Err(Error::dim(s.dim(), d, "function vs grid"));
    }
    Ok(())
}

/// Cells of `S` where `|g| ≤ tau` at a test point or `g` changes sign across them.
pub fn zero_set(s: &GridSet, tau: f64, g: impl Fn(&Point) -> Result<f64> + Sync) -> GridSet {
    let ranges = cell_ranges(s, |x| scalar(g(x)));
    select(s, &ranges, -tau, tau)
}

/// `S ∖ S⁺_W = {x ∈ S : W(x) ≤ tol}`.
pub fn w_zero_set(w: &ScalarFunction, s: &GridSet, tol: f64) -> Result<GridSet> {
    check_dim(w.dim(), s)?;
    let ranges = cell_ranges(s, |x| scalar(w.value(x)));
    Ok(select(s, &ranges, f64::NEG_INFINITY, tol))
}

fn grad(v: &ScalarFunction, x: &Point) -> Result<Point> {
    v.gradient(x)?
        .ok_or_else(|| Error::Unsupported("set needs a differentiable V".into()))
}

/// Classical `E = {x ∈ S : <∇V(x), f(x)> = 0}` (requires `A = 0`).
pub fn e_set(sys: &SystemSpec, v: &ScalarFunction, s: &GridSet, tau: f64) -> Result<GridSet> {
    if !sys.operator.is_zero() {
        return Err(Error::Unsupported(
            "E needs A = 0; use the subdifferential set for nonzero operators".into(),
        ));
    }
    check_dim(sys.dim, s)?;
    Ok(zero_set(s, tau, |x| Ok(grad(v, x)?.dot(&sys.f(x)?))))
}

/// `{x ∈ S : <∇V(x), f(x) + v> = 0 for some v ∈ −∂φ(x)}`.
///
/// The achievable values form `[<∇V, f> − σ(∇V), <∇V, f> + σ(−∇V)]` with `σ` the
/// support function of `∂φ(x)`.
pub fn e_s_set(sys: &SystemSpec, v: &ScalarFunction, s: &GridSet, tau: f64) -> Result<GridSet> {
    match &sys.operator {
        MonotoneOperator::Subdifferential(_) | MonotoneOperator::NormalCone(_) | MonotoneOperator::Zero { .. } => {}
        other => {
            return Err(Error::Unsupported(format!(
                "subdifferential set needs A = ∂φ, got {}",
                other.kind()
            )))
        }
    }
    check_dim(sys.dim, s)?;
    let probe = s.center(s.members().next().unwrap_or(0));
    if let Ok(None) = sys.operator.value_set(&probe) {
        return Err(Error::Unsupported("∂φ has no value-set descriptor".into()));
    }
    let interval = |x: &Point| -> Option<Interval> {
        let g = grad(v, x).ok()?;
        let set = sys.operator.value_set(x).ok()??;
        let base = g.dot(&sys.f(x).ok()?);
        let up = set.support(&g)?;
        let down = set.support(&-&g)?;
        Some((base - up, base + down))
    };
    let ranges = cell_ranges(s, interval);
    Ok(select(s, &ranges, -tau, tau))
}

/// The convex potential behind `A`.
pub fn potential_of(op: &MonotoneOperator) -> Result<ConvexFunction> {
    match op {
        MonotoneOperator::Subdifferential(f) => Ok(f.clone()),
        MonotoneOperator::NormalCone(c) => Ok(ConvexFunction::indicator(c.clone())),
        MonotoneOperator::Zero { dim } => Ok(ConvexFunction::zero(*dim)),
        other => Err(Error::Unsupported(format!("{} operator has no potential", other.kind()))),
    }
}

/// `{x ∈ S : <f(x), ∇V(x)> + φ(x) − φ(x − ∇V(x)) = 0}` with `A = ∂φ`.
pub fn qi_set(sys: &SystemSpec, v: &ScalarFunction, s: &GridSet, tau: f64) -> Result<GridSet> {
    let phi = potential_of(&sys.operator)?;
    check_dim(sys.dim, s)?;
    Ok(zero_set(s, tau, |x| {
        let g = grad(v, x)?;
        Ok(sys.f(x)?.dot(&g) + phi.value(x)? - phi.value(&(x - &g))?)
    }))
}

/// Options for [`m_alpha`].
#[derive(Debug, Clone, PartialEq)]
pub struct MAlphaOptions {
    /// Strictly decreasing `β_j → α`; `None` uses the limit band `[α, α]` directly.
    pub beta_schedule: Option<Vec<f64>>,
    pub band: BandOptions,
    pub invariance: InvarianceOptions,
}

impl Default for MAlphaOptions {
    fn default() -> Self {
        MAlphaOptions {
            beta_schedule: None,
            band: BandOptions::default(),
            invariance: InvarianceOptions::default(),
        }
    }
}

/// `β_j = α + 2^{−j}`, `j = 1..=count`.
pub fn halving_schedule(alpha: f64, count: usize) -> Vec<f64> {
    (1..=count).map(|j| alpha + 0.5f64.powi(j as i32)).collect()
}

/// Largest invariant subset of `⋂_β cl([α ≤ V ≤ β]|S)`.
pub fn m_alpha(
    sys: &SystemSpec,
    v: &ScalarFunction,
    s: &GridSet,
    alpha: f64,
    opts: &MAlphaOptions,
) -> Result<(GridSet, InvariancePruneTrace)> {
    let inter = match &opts.beta_schedule {
        None => sublevel_band(v, s, alpha, alpha, opts.band)?,
        Some(betas) => {
            if betas.is_empty() || betas.windows(2).any(|w| w[1] >= w[0]) || betas.iter().any(|b| *b < alpha) {
                return Err(Error::InvalidArgument(
                    "β schedule must be nonempty, strictly decreasing and above α".into(),
                ));
            }
            let mut acc = s.clone();
            for &b in betas {
                acc = acc.intersect(&sublevel_band(v, s, alpha, b, opts.band)?)?;
            }
            acc
        }
    };
    largest_invariant_subset(sys, &inter, &opts.invariance)
}
