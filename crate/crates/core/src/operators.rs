//! Maximally monotone operators described by kind.
//!
//! Every operator exposes its resolvent `J_λ = (I + λA)^{-1}`, the Yosida approximation
//! `(I − J_λ)/λ`, and, where a closed form exists, the value set `A(x)` as a
//! [`ConvexSet`].

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::convex::{douglas_rachford, ConvexFunction, ConvexSet, ProxOutcome, ACTIVE_TOL};
use crate::linalg::{min_sym_eigenvalue, solve, zeros, Point};
use crate::{Error, Result};

/// λ-schedule for Yosida limits.
pub const YOSIDA_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
pub const MIN_NORM_CAUCHY_TOL: f64 = 1e-7;
pub const MIN_NORM_DIVERGENCE_BOUND: f64 = 1e8;

#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneOperator {
    Zero { dim: usize },
    Subdifferential(ConvexFunction),
    NormalCone(ConvexSet),
    /// `x ↦ Mx` with `M + Mᵀ` positive semidefinite.
    Linear(DMatrix<f64>),
    /// `Σ c_i A_i` with `c_i > 0`.
    ScaledSum(Vec<(f64, MonotoneOperator)>),
}

/// Outcome of [`MonotoneOperator::local_bound_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum BoundClass {
    /// `x` is interior to `dom A` and the minimal-norm section stayed below `m` nearby.
    Bounded { m: f64 },
    /// `A` fails to be locally bounded: `x` lies on `bd(dom A)` or `A(x)` is unbounded.
    UnboundedEvidence { min_norm_max: f64, on_boundary: bool },
    /// `x` is on the boundary but no unbounded value set was observed.
    Boundary { min_norm_max: f64 },
}

/// Both local-boundedness signals: the set-valued one and the minimal-norm one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundProbe {
    pub class: BoundClass,
    pub interior: bool,
    /// Largest `‖A°(y)‖` over the samples in `B(x, r) ∩ dom A`.
    pub min_norm_max: f64,
    /// Whether every sampled `A(y)` had a bounded descriptor (`None` if unknown).
    pub value_sets_bounded: Option<bool>,
    pub samples_used: usize,
}

impl MonotoneOperator {
    pub fn validated(self) -> Result<Self> {
        match &self {
            MonotoneOperator::Subdifferential(f) => {
                f.clone().validated()?;
            }
            MonotoneOperator::NormalCone(s) => {
                s.clone().validated()?;
            }
            MonotoneOperator::Linear(m) => {
                if !m.is_square() {
                    return Err(Error::InvalidOperator("linear operator must be square".into()));
                }
                let sym = (m + m.transpose()) * 0.5;
                if min_sym_eigenvalue(&sym) < -1e-10 {
                    return Err(Error::InvalidOperator(
                        "linear operator must have a positive semidefinite symmetric part".into(),
                    ));
                }
            }
            MonotoneOperator::ScaledSum(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidOperator("empty operator sum".into()));
                }
                let d = terms[0].1.dim();
                for (c, a) in terms {
                    if !(*c > 0.0) {
                        return Err(Error::InvalidOperator("sum scales must be positive".into()));
                    }
                    if a.dim() != d {
                        return Err(Error::dim(d, a.dim(), "operator sum term"));
                    }
                    a.clone().validated()?;
                }
            }
            MonotoneOperator::Zero { .. } => {}
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match self {
            MonotoneOperator::Zero { dim } => *dim,
            MonotoneOperator::Subdifferential(f) => f.dim(),
            MonotoneOperator::NormalCone(s) => s.dim(),
            MonotoneOperator::Linear(m) => m.nrows(),
            MonotoneOperator::ScaledSum(terms) => terms[0].1.dim(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, MonotoneOperator::Zero { .. })
    }

    /// Short kind label for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            MonotoneOperator::Zero { .. } => "zero",
            MonotoneOperator::Subdifferential(_) => "subdifferential",
            MonotoneOperator::NormalCone(_) => "normal-cone",
            MonotoneOperator::Linear(_) => "linear",
            MonotoneOperator::ScaledSum(_) => "scaled-sum",
        }
    }

    /// Closed convex sets whose intersection is `cl(dom A)`; empty means the whole space.
    pub fn domain_sets(&self) -> Vec<ConvexSet> {
        match self {
            MonotoneOperator::Zero { .. } | MonotoneOperator::Linear(_) => vec![],
            MonotoneOperator::Subdifferential(f) => f.domain_sets(),
            MonotoneOperator::NormalCone(s) => vec![s.clone()],
            MonotoneOperator::ScaledSum(terms) => terms.iter().flat_map(|(_, a)| a.domain_sets()).collect(),
        }
    }

    pub fn in_closed_domain(&self, x: &Point, tol: f64) -> bool {
        self.domain_sets().iter().all(|s| s.contains(x, tol))
    }

    /// Projection onto `cl(dom A)`.
    pub fn project_domain(&self, x: &Point) -> Point {
        let sets = self.domain_sets();
        match sets.len() {
            0 => x.clone(),
            1 => sets[0].project(x),
            _ => crate::convex::dykstra(&sets, x),
        }
    }

    /// True when `x` is in the interior of `cl(dom A)` by more than `tol`.
    pub fn in_domain_interior(&self, x: &Point, tol: f64) -> bool {
        self.domain_sets().iter().all(|s| s.is_interior(x, tol))
    }

    fn check_dim(&self, x: &Point) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim(self.dim(), x.len(), "operator argument"));
        }
        Ok(())
    }

    /// `J_λ(x)`: the unique `p` with `x − p ∈ λA(p)`.
    pub fn resolvent(&self, lambda: f64, x: &Point) -> Result<Point> {
        Ok(self.resolvent_with_stats(lambda, x)?.point)
    }

    pub fn resolvent_with_stats(&self, lambda: f64, x: &Point) -> Result<ProxOutcome> {
        self.check_dim(x)?;
        if !(lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "resolvent parameter must be positive, got {lambda}"
            )));
        }
        let closed = |point| ProxOutcome { point, iterations: 0 };
        match self {
            MonotoneOperator::Zero { .. } => Ok(closed(x.clone())),
            MonotoneOperator::Subdifferential(f) => f.prox_with_stats(lambda, x),
            MonotoneOperator::NormalCone(s) => Ok(closed(s.project(x))),
            MonotoneOperator::Linear(m) => {
                let n = m.nrows();
                Ok(closed(solve(&(DMatrix::identity(n, n) + m * lambda), x)?))
            }
            MonotoneOperator::ScaledSum(terms) => {
                if terms.len() == 1 {
                    return terms[0].1.resolvent_with_stats(lambda * terms[0].0, x);
                }
                let (c, head) = &terms[0];
                let tail = MonotoneOperator::ScaledSum(terms[1..].to_vec());
                let (point, iterations) = douglas_rachford(
                    lambda,
                    x,
                    |mu, z| head.resolvent(mu * c, z),
                    |mu, z| tail.resolvent(mu, z),
                    "resolvent of an operator sum",
                )?;
                Ok(ProxOutcome { point, iterations })
            }
        }
    }

    /// Yosida approximation `(x − J_λ(x))/λ`, an element of `A(J_λ(x))`.
    pub fn yosida(&self, lambda: f64, x: &Point) -> Result<Point> {
        let p = self.resolvent(lambda, x)?;
        Ok((x - p) / lambda)
    }

    /// Closed convex descriptor of `A(x)`.
    ///
    /// `Ok(None)` means no finite descriptor is available at this point. Points outside
    /// `dom A` give [`Error::EmptySubdifferential`].
    pub fn value_set(&self, x: &Point) -> Result<Option<ConvexSet>> {
        self.check_dim(x)?;
        let d = x.len();
        Ok(match self {
            MonotoneOperator::Zero { .. } => Some(ConvexSet::Point(zeros(d))),
            MonotoneOperator::Linear(m) => Some(ConvexSet::Point(m * x)),
            MonotoneOperator::NormalCone(s) => Some(s.normal_cone(x)?),
            MonotoneOperator::Subdifferential(f) => subdifferential_set(f, x)?,
            MonotoneOperator::ScaledSum(terms) => {
                let mut acc = ConvexSet::Point(zeros(d));
                for (c, a) in terms {
                    let Some(s) = a.value_set(x)? else { return Ok(None) };
                    match acc.minkowski_sum(&s.scaled(*c)) {
                        Some(next) => acc = next,
                        None => return Ok(None),
                    }
                }
                Some(acc)
            }
        })
    }

    /// `A°(x) = proj_{A(x)}(0)`.
    ///
    /// Exact when a value set is available; otherwise the Yosida values along
    /// [`YOSIDA_SCHEDULE`] must become Cauchy within [`MIN_NORM_CAUCHY_TOL`].
    pub fn min_norm_section(&self, x: &Point) -> Result<Point> {
        match self.value_set(x) {
            Ok(Some(s)) => return Ok(s.min_norm()),
            Ok(None) => {}
            Err(Error::EmptySubdifferential) => {
                return Err(Error::OutsideDomain("minimal-norm section outside dom A".into()))
            }
            Err(e) => return Err(e),
        }
        Self::yosida_limit(|lambda| self.yosida(lambda, x))
    }

    pub(crate) fn yosida_limit(eval: impl Fn(f64) -> Result<Point>) -> Result<Point> {
        let mut prev: Option<Point> = None;
        for lambda in YOSIDA_SCHEDULE {
            let y = eval(lambda)?;
            if y.norm() > MIN_NORM_DIVERGENCE_BOUND {
                return Err(Error::OutsideDomain(format!(
                    "Yosida values diverge (norm {:.3e} at λ = {lambda:e})",
                    y.norm()
                )));
            }
            if let Some(p) = &prev {
                if (&y - p).norm() <= MIN_NORM_CAUCHY_TOL * (1.0 + y.norm()) {
                    return Ok(y);
                }
            }
            prev = Some(y);
        }
        Err(Error::NotConverged {
            iterations: YOSIDA_SCHEDULE.len(),
            context: "Yosida limit".into(),
        })
    }

    /// `proj_{A(x)}(w)`.
    pub fn project_value_set(&self, x: &Point, w: &Point) -> Result<Point> {
        match self.value_set(x)? {
            Some(s) => Ok(s.project(w)),
            None => Err(Error::Unsupported(format!(
                "no value-set descriptor for {} operator at this point",
                self.kind()
            ))),
        }
    }

    /// Deterministic probe of local boundedness at `x` using `samples` points of
    /// `B(x, r) ∩ dom A`.
    pub fn local_bound_probe(&self, x: &Point, r: f64, samples: usize) -> BoundProbe {
        let d = x.len();
        let tol = ACTIVE_TOL * (1.0 + x.norm());
        let interior = self.in_domain_interior(x, tol);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut worst = 0.0f64;
        let mut bounded: Option<bool> = Some(true);
        let mut used = 0;
        let probe = |y: &Point, worst: &mut f64, bounded: &mut Option<bool>| -> bool {
            if !self.in_closed_domain(y, tol) {
                return false;
            }
            match self.value_set(y) {
                Ok(Some(s)) => {
                    *worst = worst.max(s.min_norm().norm());
                    if !s.is_bounded() {
                        *bounded = bounded.map(|_| false);
                    }
                    true
                }
                Ok(None) => {
                    *bounded = None;
                    match self.min_norm_section(y) {
                        Ok(m) => {
                            *worst = worst.max(m.norm());
                            true
                        }
                        Err(_) => false,
                    }
                }
                Err(_) => false,
            }
        };
        if probe(x, &mut worst, &mut bounded) {
            used += 1;
        }
        for _ in 0..samples {
            let dir = Point::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let n = dir.norm();
            if n == 0.0 {
                continue;
            }
            let radius = r * rng.gen::<f64>().powf(1.0 / d as f64);
            let y = x + dir * (radius / n);
            if probe(&y, &mut worst, &mut bounded) {
                used += 1;
            }
        }
        let class = if interior && bounded.unwrap_or(true) {
            BoundClass::Bounded { m: worst }
        } else if !interior && bounded != Some(true) {
            BoundClass::UnboundedEvidence {
                min_norm_max: worst,
                on_boundary: true,
            }
        } else if !interior {
            BoundClass::Boundary { min_norm_max: worst }
        } else {
            BoundClass::UnboundedEvidence {
                min_norm_max: worst,
                on_boundary: false,
            }
        };
        BoundProbe {
            class,
            interior,
            min_norm_max: worst,
            value_sets_bounded: bounded,
            samples_used: used,
        }
    }
}

fn subdifferential_set(f: &ConvexFunction, x: &Point) -> Result<Option<ConvexSet>> {
    let d = x.len();
    Ok(match f {
        ConvexFunction::Zero { .. } | ConvexFunction::Quadratic { .. } => {
            Some(ConvexSet::Point(f.gradient(x)?.expect("smooth kind")))
        }
        ConvexFunction::L1 { weight, .. } => {
            let lo = Point::from_fn(d, |i, _| if x[i] > 0.0 { *weight } else { -*weight });
            let hi = Point::from_fn(d, |i, _| if x[i] < 0.0 { -*weight } else { *weight });
            Some(ConvexSet::Box { lo, hi })
        }
        ConvexFunction::Indicator(s) => Some(s.normal_cone(x)?),
        ConvexFunction::Sum(terms) => {
            let mut acc = ConvexSet::Point(zeros(d));
            for (c, g) in terms {
                if *c == 0.0 {
                    continue;
                }
                let Some(s) = subdifferential_set(g, x)? else { return Ok(None) };
                match acc.minkowski_sum(&s.scaled(*c)) {
                    Some(next) => acc = next,
                    None => return Ok(None),
                }
            }
            Some(acc)
        }
        ConvexFunction::MaxAffine { .. } | ConvexFunction::Custom(_) => {
            let s = f.subgradient_sample(x, 1)?;
            if !s.exhaustive {
                return Ok(None);
            }
            if s.vectors.len() == 1 && s.rays.is_empty() {
                Some(ConvexSet::Point(s.vectors[0].clone()))
            } else {
                Some(ConvexSet::Generated {
                    points: s.vectors,
                    rays: s.rays,
                })
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::point;

    fn abs_op() -> MonotoneOperator {
        MonotoneOperator::Subdifferential(ConvexFunction::abs())
    }

    fn unit_interval() -> MonotoneOperator {
        MonotoneOperator::NormalCone(ConvexSet::interval(0.0, 1.0))
    }

    #[test]
    fn resolvent_examples() {
        let grid = (0..=1_000_000)
            .map(|i| -0.5 + i as f64 * 1e-6)
            .min_by(|a, b| {
                let fa = a.abs() + (a - 0.45f64).powi(2) / 0.2;
                let fb = b.abs() + (b - 0.45f64).powi(2) / 0.2;
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        assert!((grid - 0.35).abs() < 2e-6);
        assert!((abs_op().resolvent(0.1, &point(&[0.45])).unwrap()[0] - 0.35).abs() < 1e-15);
        let z = MonotoneOperator::Zero { dim: 2 };
        assert_eq!(z.resolvent(3.0, &point(&[1.0, 2.0])).unwrap(), point(&[1.0, 2.0]));
        assert_eq!(unit_interval().resolvent(7.0, &point(&[-3.0])).unwrap(), point(&[0.0]));
    }

    #[test]
    fn yosida_examples() {
        let y = abs_op().yosida(0.1, &point(&[0.5])).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-14);
        let z = MonotoneOperator::Zero { dim: 1 };
        assert_eq!(z.yosida(0.5, &point(&[4.0])).unwrap(), point(&[0.0]));
        let m = crate::linalg::matrix_from_rows(&[vec![2.0, 1.0], vec![-1.0, 3.0]]).unwrap();
        let lin = MonotoneOperator::Linear(m.clone()).validated().unwrap();
        let x = point(&[1.0, 0.0]);
        let y = lin.yosida(1e-6, &x).unwrap();
        assert!((y - &m * &x).norm() < 1e-5);
    }

    #[test]
    fn min_norm_examples() {
        assert_eq!(abs_op().min_norm_section(&point(&[0.0])).unwrap(), point(&[0.0]));
        assert_eq!(abs_op().min_norm_section(&point(&[0.5])).unwrap(), point(&[1.0]));
        assert_eq!(unit_interval().min_norm_section(&point(&[0.5])).unwrap(), point(&[0.0]));
        assert!(matches!(
            unit_interval().min_norm_section(&point(&[2.0])),
            Err(Error::OutsideDomain(_))
        ));
    }

    #[test]
    fn yosida_limit_matches_value_set() {
        let a = abs_op();
        let x = point(&[0.5]);
        let lim = MonotoneOperator::yosida_limit(|l| a.yosida(l, &x)).unwrap();
        assert!((lim[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_value_sets() {
        let a = abs_op();
        assert_eq!(a.project_value_set(&point(&[0.0]), &point(&[2.0])).unwrap(), point(&[1.0]));
        assert_eq!(a.project_value_set(&point(&[0.0]), &point(&[0.5])).unwrap(), point(&[0.5]));
        let n = unit_interval();
        assert_eq!(n.project_value_set(&point(&[1.0]), &point(&[-3.0])).unwrap(), point(&[0.0]));
    }

    #[test]
    fn bound_probe_examples() {
        let n = unit_interval();
        let p = n.local_bound_probe(&point(&[0.5]), 0.1, 50);
        assert_eq!(p.class, BoundClass::Bounded { m: 0.0 });
        let p = n.local_bound_probe(&point(&[1.0]), 0.1, 50);
        assert!(matches!(
            p.class,
            BoundClass::UnboundedEvidence { on_boundary: true, .. }
        ));
        assert_eq!(p.min_norm_max, 0.0);
        let p = abs_op().local_bound_probe(&point(&[0.0]), 1.0, 50);
        assert_eq!(p.class, BoundClass::Bounded { m: 1.0 });
    }

    #[test]
    fn sum_resolvent_by_splitting() {
        // ∂|·| + N_[0.5, 3]: for x = 2, λ = 0.3 the resolvent is 1.7.
        let a = MonotoneOperator::ScaledSum(vec![
            (1.0, abs_op()),
            (1.0, MonotoneOperator::NormalCone(ConvexSet::interval(0.5, 3.0))),
        ]);
        let p = a.resolvent(0.3, &point(&[2.0])).unwrap();
        assert!((p[0] - 1.7).abs() < 1e-8);
        let p = a.resolvent(0.3, &point(&[0.6])).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-8);
        let v = a.value_set(&point(&[0.5])).unwrap().unwrap();
        assert!(v.contains(&point(&[-4.0]), 1e-12));
        assert!(!v.contains(&point(&[1.5]), 1e-12));
    }

    #[test]
    fn linear_operator_validation() {
        let bad = crate::linalg::matrix_from_rows(&[vec![-1.0]]).unwrap();
        assert!(MonotoneOperator::Linear(bad).validated().is_err());
        let rot = crate::linalg::matrix_from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        assert!(MonotoneOperator::Linear(rot).validated().is_ok());
    }
}
