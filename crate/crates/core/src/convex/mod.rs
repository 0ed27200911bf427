//! Convex analysis oracles: closed convex sets and proper lsc convex functions.

mod function;
mod set;

pub use function::{
    moreau_regularize, ConvexFunction, CustomFunction, ProxOutcome, SubgradientPiece,
    SubgradientSample, GUARD_TOL, PROX_MAX_ITER, PROX_TOL,
};
pub use set::{dykstra, ConvexSet, ACTIVE_TOL};

use crate::linalg::Point;
use crate::Result;

/// Douglas-Rachford solve of `x ∈ p + λ(A + B)(p)` given the resolvents of `A` and `B`.
///
/// `resolvent_a(μ, z)` must return `(I + μA)^{-1}(z)`; the same for `B`. Each half is
/// handed the shifted operator `λA + (I - x)/2`, whose unit resolvent reduces to a
/// resolvent of `A` with parameter `λ/1.5` at `(z + x/2)/1.5`.
pub(crate) fn douglas_rachford<FA, FB>(
    lambda: f64,
    x: &Point,
    resolvent_a: FA,
    resolvent_b: FB,
    context: &str,
) -> Result<(Point, usize)>
where
    FA: Fn(f64, &Point) -> Result<Point>,
    FB: Fn(f64, &Point) -> Result<Point>,
{
    let mu = lambda / 1.5;
    let shifted = |z: &Point| (z + x * 0.5) / 1.5;
    let mut z = x.clone();
    for it in 1..=PROX_MAX_ITER {
        let p = resolvent_a(mu, &shifted(&z))?;
        let reflected = &p * 2.0 - &z;
        let q = resolvent_b(mu, &shifted(&reflected))?;
        let gap = (&q - &p).norm();
        z += &q - &p;
        if gap <= PROX_TOL * 1e-2 * (1.0 + p.norm()) {
            return Ok((q, it));
        }
    }
    Err(crate::Error::NotConverged {
        iterations: PROX_MAX_ITER,
        context: context.to_string(),
    })
}
