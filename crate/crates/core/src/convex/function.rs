use nalgebra::{DMatrix, DVector};

use super::set::{ConvexSet, ACTIVE_TOL};
use crate::linalg::{solve, zeros, Point};
use crate::sysconfig::Expr;
use crate::{Error, Result};

/// Relative stopping tolerance of the iterative proximal solvers.
pub const PROX_TOL: f64 = 1e-10;
pub const PROX_MAX_ITER: usize = 100_000;
/// Tolerance of the gradient solver for custom functions; its stopping test is
/// exact up to rounding, so it can be much tighter than the splitting solvers.
pub const CUSTOM_PROX_TOL: f64 = 1e-14;
/// A guarded subgradient piece applies where `guard(x) >= -GUARD_TOL`.
pub const GUARD_TOL: f64 = 1e-12;

const MAX_SAMPLE_VECTORS: usize = 4096;

/// One branch of a piecewise subgradient description.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientPiece {
    /// Piece applies where the guard is nonnegative; `None` applies everywhere.
    pub guard: Option<Expr>,
    pub gradient: Vec<Expr>,
}

/// A user-supplied function given by expressions.
///
/// Convexity is not verified. Subgradients come from the guarded pieces when any
/// apply, from forward-mode differentiation when the function is tagged smooth, and
/// from finite differences otherwise (reported as non-exhaustive).
#[derive(Debug, Clone, PartialEq)]
pub struct CustomFunction {
    pub dim: usize,
    pub value: Expr,
    pub pieces: Vec<SubgradientPiece>,
    pub smooth: bool,
    pub domain: Option<ConvexSet>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    Zero { dim: usize },
    /// `½ xᵀQx + bᵀx + c` with `Q` symmetric positive semidefinite.
    Quadratic {
        hessian: DMatrix<f64>,
        linear: Point,
        constant: f64,
    },
    /// `weight · ‖x‖₁`
    L1 { dim: usize, weight: f64 },
    Indicator(ConvexSet),
    /// `max_i <slopes[i], x> + offsets[i]`
    MaxAffine { slopes: Vec<Point>, offsets: Vec<f64> },
    /// `Σ c_i f_i` with `c_i >= 0`.
    Sum(Vec<(f64, ConvexFunction)>),
    Custom(CustomFunction),
}

/// A finite description of part of a subdifferential.
///
/// Every `vectors[i] + t · rays[j]` (`t >= 0`) is a subgradient at `base`. When
/// `exhaustive` is set, the vectors contain all extreme points and the rays generate
/// the recession cone, so suprema of linear functionals over the sample are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientSample {
    pub base: Point,
    pub vectors: Vec<Point>,
    pub rays: Vec<Point>,
    pub exhaustive: bool,
}

impl SubgradientSample {
    /// Vectors followed by ray generators.
    pub fn generators(&self) -> impl Iterator<Item = &Point> {
        self.vectors.iter().chain(self.rays.iter())
    }

    fn fill(mut self, budget: usize) -> Self {
        if self.vectors.len() < 2 {
            return self;
        }
        let extremes = self.vectors.clone();
        let centroid = extremes.iter().fold(zeros(self.base.len()), |a, v| a + v) / extremes.len() as f64;
        if !self.vectors.iter().any(|v| (v - &centroid).norm() < 1e-15) && self.vectors.len() < budget {
            self.vectors.push(centroid);
        }
        let mut i = 0;
        while self.vectors.len() < budget && i + 1 < extremes.len() {
            self.vectors.push((&extremes[i] + &extremes[i + 1]) * 0.5);
            i += 1;
        }
        self
    }
}

/// Result of a proximal evaluation with the inner iteration count (0 for closed forms).
#[derive(Debug, Clone, PartialEq)]
pub struct ProxOutcome {
    pub point: Point,
    pub iterations: usize,
}

fn closed(point: Point) -> ProxOutcome {
    ProxOutcome { point, iterations: 0 }
}

impl ConvexFunction {
    pub fn zero(dim: usize) -> Self {
        ConvexFunction::Zero { dim }
    }

    /// `|x|` on the real line.
    pub fn abs() -> Self {
        ConvexFunction::L1 { dim: 1, weight: 1.0 }
    }

    /// `scale/2 · ‖x‖²`
    pub fn half_norm_squared(dim: usize, scale: f64) -> Self {
        ConvexFunction::Quadratic {
            hessian: DMatrix::identity(dim, dim) * scale,
            linear: zeros(dim),
            constant: 0.0,
        }
    }

    pub fn indicator(set: ConvexSet) -> Self {
        ConvexFunction::Indicator(set)
    }

    /// Checks parameters (PSD Hessian, nonnegative weights, consistent dimensions).
    pub fn validated(self) -> Result<Self> {
        match &self {
            ConvexFunction::Quadratic { hessian, linear, .. } => {
                if !hessian.is_square() || hessian.nrows() != linear.len() {
                    return Err(Error::dim(linear.len(), hessian.nrows(), "quadratic hessian"));
                }
                if (hessian - hessian.transpose()).abs().max() > 1e-12 * (1.0 + hessian.abs().max()) {
                    return Err(Error::InvalidFunction("quadratic hessian must be symmetric".into()));
                }
                if crate::linalg::min_sym_eigenvalue(hessian) < -1e-10 {
                    return Err(Error::InvalidFunction("quadratic hessian must be PSD".into()));
                }
            }
            ConvexFunction::L1 { weight, .. } => {
                if !(*weight >= 0.0) {
                    return Err(Error::InvalidFunction("l1 weight must be nonnegative".into()));
                }
            }
            ConvexFunction::MaxAffine { slopes, offsets } => {
                if slopes.is_empty() || slopes.len() != offsets.len() {
                    return Err(Error::InvalidFunction("max-affine needs matching slopes/offsets".into()));
                }
                let d = slopes[0].len();
                if slopes.iter().any(|s| s.len() != d) {
                    return Err(Error::InvalidFunction("max-affine slopes must share a dimension".into()));
                }
            }
            ConvexFunction::Sum(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidFunction("empty sum".into()));
                }
                let d = terms[0].1.dim();
                for (c, f) in terms {
                    if !(*c >= 0.0) {
                        return Err(Error::InvalidFunction("sum scales must be nonnegative".into()));
                    }
                    if f.dim() != d {
                        return Err(Error::dim(d, f.dim(), "sum term"));
                    }
                }
            }
            ConvexFunction::Custom(c) => {
                if c.value.min_dim() > c.dim {
                    return Err(Error::dim(c.dim, c.value.min_dim(), "custom function variables"));
                }
                if let Some(dom) = &c.domain {
                    if dom.dim() != c.dim {
                        return Err(Error::dim(c.dim, dom.dim(), "custom function domain"));
                    }
                }
                for p in &c.pieces {
                    if p.gradient.len() != c.dim {
                        return Err(Error::dim(c.dim, p.gradient.len(), "subgradient piece"));
                    }
                }
            }
            ConvexFunction::Zero { .. } | ConvexFunction::Indicator(_) => {}
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Zero { dim } | ConvexFunction::L1 { dim, .. } => *dim,
            ConvexFunction::Quadratic { linear, .. } => linear.len(),
            ConvexFunction::Indicator(s) => s.dim(),
            ConvexFunction::MaxAffine { slopes, .. } => slopes[0].len(),
            ConvexFunction::Sum(terms) => terms[0].1.dim(),
            ConvexFunction::Custom(c) => c.dim,
        }
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len(), "function argument"));
        }
        Ok(())
    }

    /// Function value; `+∞` is returned as `f64::INFINITY`.
    pub fn value(&self, x: &Point) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexFunction::Zero { .. } => 0.0,
            ConvexFunction::Quadratic {
                hessian,
                linear,
                constant,
            } => 0.5 * x.dot(&(hessian * x)) + linear.dot(x) + constant,
            ConvexFunction::L1 { weight, .. } => weight * x.lp_norm(1),
            ConvexFunction::Indicator(s) => {
                if s.contains(x, ACTIVE_TOL * (1.0 + x.norm())) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexFunction::MaxAffine { slopes, offsets } => slopes
                .iter()
                .zip(offsets)
                .map(|(a, b)| a.dot(x) + b)
                .fold(f64::NEG_INFINITY, f64::max),
            ConvexFunction::Sum(terms) => {
                let mut total = 0.0;
                for (c, f) in terms {
                    if *c == 0.0 {
                        continue;
                    }
                    let v = f.value(x)?;
                    if v == f64::INFINITY {
                        return Ok(f64::INFINITY);
                    }
                    total += c * v;
                }
                total
            }
            ConvexFunction::Custom(c) => {
                if let Some(dom) = &c.domain {
                    if !dom.contains(x, ACTIVE_TOL * (1.0 + x.norm())) {
                        return Ok(f64::INFINITY);
                    }
                }
                c.value.eval(x.as_slice())?
            }
        })
    }

    pub fn in_domain(&self, x: &Point) -> Result<bool> {
        Ok(self.value(x)?.is_finite())
    }

    /// Closed convex sets whose intersection is `cl(dom φ)`; empty means the whole space.
    pub fn domain_sets(&self) -> Vec<ConvexSet> {
        match self {
            ConvexFunction::Indicator(s) => vec![s.clone()],
            ConvexFunction::Custom(c) => c.domain.iter().cloned().collect(),
            ConvexFunction::Sum(terms) => terms
                .iter()
                .filter(|(c, _)| *c > 0.0)
                .flat_map(|(_, f)| f.domain_sets())
                .collect(),
            _ => vec![],
        }
    }

    /// Gradient when the function is differentiable at `x` (smooth kinds only).
    pub fn gradient(&self, x: &Point) -> Result<Option<Point>> {
        self.check_dim(x)?;
        Ok(match self {
            ConvexFunction::Zero { dim } => Some(zeros(*dim)),
            ConvexFunction::Quadratic { hessian, linear, .. } => Some(hessian * x + linear),
            ConvexFunction::Custom(c) if c.pieces.is_empty() && c.smooth => {
                Some(DVector::from_vec(c.value.gradient(x.as_slice())?))
            }
            ConvexFunction::Sum(terms) => {
                let mut g = zeros(x.len());
                for (c, f) in terms {
                    if *c == 0.0 {
                        continue;
                    }
                    match f.gradient(x)? {
                        Some(gi) => g += gi * *c,
                        None => return Ok(None),
                    }
                }
                Some(g)
            }
            _ => {
                let s = self.subgradient_sample(x, 1)?;
                if s.exhaustive && s.vectors.len() == 1 && s.rays.is_empty() {
                    Some(s.vectors[0].clone())
                } else {
                    None
                }
            }
        })
    }

    /// Unique minimiser of `u ↦ φ(u) + ‖u − x‖²/(2λ)`.
    pub fn prox(&self, lambda: f64, x: &Point) -> Result<Point> {
        Ok(self.prox_with_stats(lambda, x)?.point)
    }

    pub fn prox_with_stats(&self, lambda: f64, x: &Point) -> Result<ProxOutcome> {
        self.check_dim(x)?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("prox parameter must be positive, got {lambda}")));
        }
        match self {
            ConvexFunction::Zero { .. } => Ok(closed(x.clone())),
            ConvexFunction::Quadratic { hessian, linear, .. } => {
                let n = x.len();
                let m = DMatrix::identity(n, n) + hessian * lambda;
                Ok(closed(solve(&m, &(x - linear * lambda))?))
            }
            ConvexFunction::L1 { weight, .. } => {
                let t = lambda * weight;
                Ok(closed(x.map(|v| v.signum() * (v.abs() - t).max(0.0))))
            }
            ConvexFunction::Indicator(s) => Ok(closed(s.project(x))),
            ConvexFunction::MaxAffine { slopes, offsets } => prox_max_affine(slopes, offsets, lambda, x),
            ConvexFunction::Sum(terms) => prox_sum(terms, lambda, x),
            ConvexFunction::Custom(c) => prox_custom(self, c, lambda, x),
        }
    }

    /// Finite description of `∂φ(x)`.
    ///
    /// `budget` caps the number of convex-combination fill vectors; extreme points are
    /// always returned. Points outside `dom φ` have an empty subdifferential.
    pub fn subgradient_sample(&self, x: &Point, budget: usize) -> Result<SubgradientSample> {
        if !self.in_domain(x)? {
            return Err(Error::EmptySubdifferential);
        }
        let base = x.clone();
        let d = x.len();
        let sample = match self {
            ConvexFunction::Zero { .. } | ConvexFunction::Quadratic { .. } => SubgradientSample {
                vectors: vec![self.gradient(x)?.expect("smooth kind")],
                base,
                rays: vec![],
                exhaustive: true,
            },
            ConvexFunction::L1 { weight, .. } => {
                let mut vectors = vec![x.map(|v| if v > 0.0 { *weight } else if v < 0.0 { -*weight } else { 0.0 })];
                for i in 0..d {
                    if x[i] == 0.0 && *weight > 0.0 {
                        let mut next = Vec::with_capacity(vectors.len() * 2);
                        for v in &vectors {
                            for s in [-1.0, 1.0] {
                                let mut w = v.clone();
                                w[i] = s * weight;
                                next.push(w);
                            }
                        }
                        vectors = next;
                    }
                }
                SubgradientSample {
                    base,
                    vectors,
                    rays: vec![],
                    exhaustive: true,
                }
                .fill(budget)
            }
            ConvexFunction::Indicator(s) => SubgradientSample {
                base,
                vectors: vec![zeros(d)],
                rays: s.normal_generators(x),
                exhaustive: true,
            },
            ConvexFunction::MaxAffine { slopes, offsets } => {
                let vals: Vec<f64> = slopes.iter().zip(offsets).map(|(a, b)| a.dot(x) + b).collect();
                let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let vectors = slopes
                    .iter()
                    .zip(&vals)
                    .filter(|(_, v)| top - **v <= 1e-12 * (1.0 + top.abs()))
                    .map(|(a, _)| a.clone())
                    .collect();
                SubgradientSample {
                    base,
                    vectors,
                    rays: vec![],
                    exhaustive: true,
                }
                .fill(budget)
            }
            ConvexFunction::Sum(terms) => {
                let mut acc = SubgradientSample {
                    base: base.clone(),
                    vectors: vec![zeros(d)],
                    rays: vec![],
                    exhaustive: true,
                };
                for (c, f) in terms {
                    if *c == 0.0 {
                        continue;
                    }
                    let s = f.subgradient_sample(x, 1)?;
                    let mut vectors = Vec::with_capacity(acc.vectors.len() * s.vectors.len());
                    'outer: for a in &acc.vectors {
                        for b in &s.vectors {
                            if vectors.len() >= MAX_SAMPLE_VECTORS {
                                acc.exhaustive = false;
                                break 'outer;
                            }
                            vectors.push(a + b * *c);
                        }
                    }
                    acc.vectors = vectors;
                    acc.rays.extend(s.rays);
                    acc.exhaustive &= s.exhaustive;
                }
                acc.fill(budget)
            }
            ConvexFunction::Custom(c) => custom_subgradients(c, x)?.fill(budget),
        };
        Ok(sample)
    }

    /// Horizon subgradients: for convex φ, generators of the normal cone to `cl(dom φ)`.
    pub fn horizon_subgradient_sample(&self, x: &Point) -> Result<SubgradientSample> {
        if !self.in_domain(x)? {
            return Err(Error::EmptySubdifferential);
        }
        let rays = self
            .domain_sets()
            .iter()
            .flat_map(|s| s.normal_generators(x))
            .collect();
        Ok(SubgradientSample {
            base: x.clone(),
            vectors: vec![zeros(x.len())],
            rays,
            exhaustive: true,
        })
    }
}

fn custom_subgradients(c: &CustomFunction, x: &Point) -> Result<SubgradientSample> {
    let mut vectors = Vec::new();
    let mut exhaustive = true;
    for piece in &c.pieces {
        let applies = match &piece.guard {
            None => true,
            Some(g) => g.eval(x.as_slice())? >= -GUARD_TOL,
        };
        if applies {
            let g = piece
                .gradient
                .iter()
                .map(|e| e.eval(x.as_slice()))
                .collect::<Result<Vec<_>>>()?;
            vectors.push(DVector::from_vec(g));
        }
    }
    if vectors.is_empty() {
        if c.smooth && c.pieces.is_empty() {
            vectors.push(DVector::from_vec(c.value.gradient(x.as_slice())?));
        } else {
            vectors = finite_difference_gradients(c, x)?;
            exhaustive = false;
        }
    }
    let rays = c.domain.as_ref().map(|d| d.normal_generators(x)).unwrap_or_default();
    Ok(SubgradientSample {
        base: x.clone(),
        vectors,
        rays,
        exhaustive,
    })
}

/// Central-difference gradients at `x` and at `x ± δ e_i`.
fn finite_difference_gradients(c: &CustomFunction, x: &Point) -> Result<Vec<Point>> {
    let d = x.len();
    let delta = 1e-6 * (1.0 + x.norm());
    let grad_at = |y: &Point| -> Result<Point> {
        let mut g = zeros(d);
        for i in 0..d {
            let mut p = y.clone();
            let mut m = y.clone();
            p[i] += delta * 1e-2;
            m[i] -= delta * 1e-2;
            g[i] = (c.value.eval(p.as_slice())? - c.value.eval(m.as_slice())?) / (2.0 * delta * 1e-2);
        }
        Ok(g)
    };
    let mut out = vec![grad_at(x)?];
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut y = x.clone();
            y[i] += s * delta;
            out.push(grad_at(&y)?);
        }
    }
    Ok(out)
}

/// Dual projected gradient on the simplex:
/// `max_μ Σ μ_i (<a_i, x> + b_i) − λ/2 ‖Σ μ_i a_i‖²`, then `u = x − λ Σ μ_i a_i`.
fn prox_max_affine(slopes: &[Point], offsets: &[f64], lambda: f64, x: &Point) -> Result<ProxOutcome> {
    let m = slopes.len();
    if m == 1 {
        return Ok(closed(x - &slopes[0] * lambda));
    }
    let c: Vec<f64> = slopes.iter().zip(offsets).map(|(a, b)| a.dot(x) + b).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| slopes[i].dot(&slopes[j]));
    let lip = lambda * gram.trace().max(1e-300);
    let mut mu = vec![1.0 / m as f64; m];
    let mut y = mu.clone();
    let mut t = 1.0f64;
    let ascend = |v: &[f64]| -> Vec<f64> {
        let kv = &gram * DVector::from_column_slice(v);
        crate::linalg::project_simplex(&(0..m).map(|i| v[i] + (c[i] - lambda * kv[i]) / lip).collect::<Vec<_>>())
    };
    for it in 1..=PROX_MAX_ITER {
        // projected-gradient residual at the current iterate, not at the extrapolated point
        let residual: f64 = ascend(&mu).iter().zip(&mu).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let size: f64 = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
        if residual <= PROX_TOL * 1e-2 * (1.0 + size) {
            let mut u = x.clone();
            for (mi, a) in mu.iter().zip(slopes) {
                u -= a * (lambda * mi);
            }
            return Ok(ProxOutcome { point: u, iterations: it });
        }
        let next = ascend(&y);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = next
            .iter()
            .zip(&mu)
            .map(|(n, o)| n + (t - 1.0) / t_next * (n - o))
            .collect();
        mu = next;
        t = t_next;
    }
    Err(Error::NotConverged {
        iterations: PROX_MAX_ITER,
        context: "max-affine prox".into(),
    })
}

/// Proximal map of a nonnegative combination.
///
/// Quadratic parts are merged; a single remaining term with an isotropic quadratic
/// reduces to a rescaled prox of that term. Anything else is split by Douglas-Rachford.
fn prox_sum(terms: &[(f64, ConvexFunction)], lambda: f64, x: &Point) -> Result<ProxOutcome> {
    let d = x.len();
    let mut flat: Vec<(f64, ConvexFunction)> = Vec::new();
    flatten(terms, 1.0, &mut flat);
    let mut hess = DMatrix::zeros(d, d);
    let mut lin = zeros(d);
    let mut rest: Vec<(f64, ConvexFunction)> = Vec::new();
    for (c, f) in flat {
        match f {
            ConvexFunction::Zero { .. } => {}
            ConvexFunction::Quadratic { hessian, linear, .. } => {
                hess += hessian * c;
                lin += linear * c;
            }
            other => rest.push((c, other)),
        }
    }
    let quad = ConvexFunction::Quadratic {
        hessian: hess.clone(),
        linear: lin.clone(),
        constant: 0.0,
    };
    match rest.len() {
        0 => quad.prox_with_stats(lambda, x),
        1 => {
            let (c, g) = &rest[0];
            let mu = hess[(0, 0)];
            let isotropic = (&hess - DMatrix::identity(d, d) * mu).abs().max() <= 1e-14 * (1.0 + mu.abs());
            if isotropic {
                let scale = 1.0 + lambda * mu;
                let z = (x - &lin * lambda) / scale;
                return g.prox_with_stats(lambda * c / scale, &z);
            }
            split_prox(&rest[0], &[(1.0, quad)], lambda, x)
        }
        _ => {
            let mut tail: Vec<(f64, ConvexFunction)> = rest[1..].to_vec();
            if hess.abs().max() > 0.0 || lin.norm() > 0.0 {
                tail.push((1.0, quad));
            }
            split_prox(&rest[0], &tail, lambda, x)
        }
    }
}

fn flatten(terms: &[(f64, ConvexFunction)], scale: f64, out: &mut Vec<(f64, ConvexFunction)>) {
    for (c, f) in terms {
        let c = c * scale;
        if c == 0.0 {
            continue;
        }
        match f {
            ConvexFunction::Sum(inner) => flatten(inner, c, out),
            other => out.push((c, other.clone())),
        }
    }
}

fn split_prox(
    head: &(f64, ConvexFunction),
    tail: &[(f64, ConvexFunction)],
    lambda: f64,
    x: &Point,
) -> Result<ProxOutcome> {
    let (c, f) = head;
    let rest = if tail.len() == 1 && tail[0].0 == 1.0 {
        tail[0].1.clone()
    } else {
        ConvexFunction::Sum(tail.to_vec())
    };
    let (point, iterations) = super::douglas_rachford(
        lambda,
        x,
        |mu, z| f.prox(mu * c, z),
        |mu, z| rest.prox(mu, z),
        "prox of a sum",
    )?;
    Ok(ProxOutcome { point, iterations })
}

/// Projected gradient descent with Barzilai-Borwein steps and Armijo backtracking.
fn prox_custom(phi: &ConvexFunction, c: &CustomFunction, lambda: f64, x: &Point) -> Result<ProxOutcome> {
    let project = |u: &Point| match &c.domain {
        Some(dom) => dom.project(u),
        None => u.clone(),
    };
    let objective = |u: &Point| -> f64 {
        match phi.value(u) {
            Ok(v) => v + (u - x).norm_squared() / (2.0 * lambda),
            Err(_) => f64::INFINITY,
        }
    };
    let grad = |u: &Point| -> Result<Point> {
        let s = custom_subgradients(c, u)?;
        Ok(&s.vectors[0] + (u - x) / lambda)
    };
    let mut u = project(x);
    let mut fu = objective(&u);
    if !fu.is_finite() {
        return Err(Error::InvalidFunction("custom prox: start point outside the domain".into()));
    }
    let mut g = grad(&u)?;
    let mut step = lambda;
    for it in 1..=PROX_MAX_ITER {
        // Strong convexity with modulus 1/λ bounds the error by λ times the gradient mapping.
        let mapped = project(&(&u - &g * lambda));
        if (&u - mapped).norm() <= CUSTOM_PROX_TOL * (1.0 + u.norm() + x.norm()) {
            return Ok(ProxOutcome { point: u, iterations: it });
        }
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project(&(&u - &g * step));
            let fc = objective(&cand);
            let diff = &cand - &u;
            if fc <= fu + g.dot(&diff) + diff.norm_squared() / (2.0 * step) + 1e-14 * (1.0 + fu.abs()) {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            return Err(Error::NotConverged {
                iterations: it,
                context: "custom prox line search".into(),
            });
        };
        let gnext = grad(&next)?;
        let su = &next - &u;
        let sg = &gnext - &g;
        let curv = su.dot(&sg);
        step = if curv > 0.0 { su.norm_squared() / curv } else { lambda };
        u = next;
        fu = fnext;
        g = gnext;
    }
    Err(Error::NotConverged {
        iterations: PROX_MAX_ITER,
        context: "custom prox".into(),
    })
}

/// Quadratic inf-convolution `inf_u W(u) + k/2 ‖u − x‖²`, attained at `prox(W, 1/k, x)`.
pub fn moreau_regularize(w: &ConvexFunction, k: f64, x: &Point) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("moreau parameter must be positive, got {k}")));
    }
    let p = w.prox(1.0 / k, x)?;
    let value = w.value(&p)? + 0.5 * k * (&p - x).norm_squared();
    if !value.is_finite() {
        return Err(Error::InvalidFunction("regularization is not finite".into()));
    }
    if value < -1e-12 {
        return Err(Error::InvalidFunction(format!(
            "regularized function must be nonnegative, got {value}"
        )));
    }
    Ok(value.max(0.0))
}
