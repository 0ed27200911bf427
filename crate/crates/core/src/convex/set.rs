//! Closed convex sets with projection, support function and normal cones.

use nalgebra::DMatrix;

use crate::linalg::{point, unit, zeros, Point};
use crate::{Error, Result};

/// Relative tolerance used to decide whether a constraint is active.
pub const ACTIVE_TOL: f64 = 1e-9;

const MAX_ENUMERATED_GENERATORS: usize = 10;
const DYKSTRA_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Point(Point),
    /// Product of intervals; infinite bounds are allowed.
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    /// `{ y : <normal, y> <= offset }`
    Halfspace { normal: Point, offset: f64 },
    /// `{ y : <rows[i], y> <= rhs[i] for all i }`
    Polyhedron { rows: Vec<Point>, rhs: Vec<f64> },
    /// Conic hull of finitely many generators.
    Cone { generators: Vec<Point> },
    /// `conv(points) + cone(rays)`, the vertex description of a polyhedron.
    Generated { points: Vec<Point>, rays: Vec<Point> },
}

fn active(value: f64, bound: f64) -> bool {
    (value - bound).abs() <= ACTIVE_TOL * (1.0 + bound.abs())
}

impl ConvexSet {
    pub fn interval(lo: f64, hi: f64) -> ConvexSet {
        ConvexSet::Box {
            lo: point(&[lo]),
            hi: point(&[hi]),
        }
    }

    pub fn unit_box(dim: usize) -> ConvexSet {
        ConvexSet::Box {
            lo: zeros(dim),
            hi: Point::from_element(dim, 1.0),
        }
    }

    pub fn whole_space(dim: usize) -> ConvexSet {
        ConvexSet::Box {
            lo: Point::from_element(dim, f64::NEG_INFINITY),
            hi: Point::from_element(dim, f64::INFINITY),
        }
    }

    /// Checks the representation and returns the set unchanged.
    pub fn validated(self) -> Result<ConvexSet> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match &self {
            ConvexSet::Box { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::dim(lo.len(), hi.len(), "box bounds"));
                }
                if lo.iter().zip(hi.iter()).any(|(l, h)| l > h || l.is_nan() || h.is_nan()) {
                    return bad("box requires lo <= hi");
                }
            }
            ConvexSet::Ball { radius, .. } => {
                if !(*radius >= 0.0) {
                    return bad("ball radius must be nonnegative");
                }
            }
            ConvexSet::Halfspace { normal, .. } => {
                if normal.norm() == 0.0 {
                    return bad("halfspace normal must be nonzero");
                }
            }
            ConvexSet::Polyhedron { rows, rhs } => {
                if rows.len() != rhs.len() || rows.is_empty() {
                    return bad("polyhedron needs matching nonempty rows and rhs");
                }
                let d = rows[0].len();
                if rows.iter().any(|r| r.len() != d) {
                    return bad("polyhedron rows must share a dimension");
                }
            }
            ConvexSet::Cone { generators } => {
                if generators.is_empty() {
                    return bad("cone needs at least one generator");
                }
            }
            ConvexSet::Generated { points, .. } => {
                if points.is_empty() {
                    return bad("generated set needs at least one point");
                }
            }
            ConvexSet::Point(_) => {}
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Point(p) => p.len(),
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::Polyhedron { rows, .. } => rows[0].len(),
            ConvexSet::Cone { generators } => generators[0].len(),
            ConvexSet::Generated { points, .. } => points[0].len(),
        }
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        match self {
            ConvexSet::Box { lo, hi } => (0..x.len()).all(|i| x[i] >= lo[i] - tol && x[i] <= hi[i] + tol),
            ConvexSet::Ball { center, radius } => (x - center).norm() <= radius + tol,
            ConvexSet::Halfspace { normal, offset } => normal.dot(x) <= offset + tol * normal.norm(),
            ConvexSet::Polyhedron { rows, rhs } => rows
                .iter()
                .zip(rhs)
                .all(|(a, b)| a.dot(x) <= b + tol * a.norm()),
            _ => (self.project(x) - x).norm() <= tol,
        }
    }

    /// True when `x` lies in the set at distance more than `tol` from its boundary.
    pub fn is_interior(&self, x: &Point, tol: f64) -> bool {
        match self {
            ConvexSet::Box { lo, hi } => (0..x.len()).all(|i| x[i] > lo[i] + tol && x[i] < hi[i] - tol),
            ConvexSet::Ball { center, radius } => (x - center).norm() < radius - tol,
            ConvexSet::Halfspace { normal, offset } => normal.dot(x) < offset - tol * normal.norm(),
            ConvexSet::Polyhedron { rows, rhs } => rows
                .iter()
                .zip(rhs)
                .all(|(a, b)| a.dot(x) < b - tol * a.norm()),
            ConvexSet::Point(_) => false,
            ConvexSet::Cone { .. } | ConvexSet::Generated { .. } => false,
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::Point(_) | ConvexSet::Ball { .. } => true,
            ConvexSet::Box { lo, hi } => lo.iter().chain(hi.iter()).all(|v| v.is_finite()),
            ConvexSet::Halfspace { .. } | ConvexSet::Cone { .. } => false,
            ConvexSet::Generated { rays, .. } => rays.iter().all(|r| r.norm() == 0.0),
            ConvexSet::Polyhedron { .. } => {
                let d = self.dim();
                (0..d).all(|i| {
                    [1.0, -1.0].iter().all(|s| {
                        self.support(&unit(d, i, *s))
                            .is_some_and(f64::is_finite)
                    })
                })
            }
        }
    }

    /// Euclidean projection of `w` onto the set.
    pub fn project(&self, w: &Point) -> Point {
        match self {
            ConvexSet::Point(p) => p.clone(),
            ConvexSet::Box { lo, hi } => Point::from_fn(w.len(), |i, _| w[i].clamp(lo[i], hi[i])),
            ConvexSet::Ball { center, radius } => {
                let d = w - center;
                let n = d.norm();
                if n <= *radius {
                    w.clone()
                } else {
                    center + d * (radius / n)
                }
            }
            ConvexSet::Halfspace { normal, offset } => project_halfspace(normal, *offset, w),
            ConvexSet::Polyhedron { rows, rhs } => {
                let halves: Vec<ConvexSet> = rows
                    .iter()
                    .zip(rhs)
                    .map(|(a, b)| ConvexSet::Halfspace {
                        normal: a.clone(),
                        offset: *b,
                    })
                    .collect();
                dykstra(&halves, w)
            }
            ConvexSet::Cone { generators } => project_generated(&[zeros(w.len())], generators, w),
            ConvexSet::Generated { points, rays } => project_generated(points, rays, w),
        }
    }

    /// Element of minimal norm.
    pub fn min_norm(&self) -> Point {
        self.project(&zeros(self.dim()))
    }

    /// `sup { <d, s> : s in set }`; `None` when no exact formula is available.
    pub fn support(&self, d: &Point) -> Option<f64> {
        let pos_inf = |v: f64| v > 1e-14;
        match self {
            ConvexSet::Point(p) => Some(p.dot(d)),
            ConvexSet::Box { lo, hi } => {
                let mut s = 0.0;
                for i in 0..d.len() {
                    if d[i] > 0.0 {
                        s += d[i] * hi[i];
                    } else if d[i] < 0.0 {
                        s += d[i] * lo[i];
                    }
                }
                Some(s)
            }
            ConvexSet::Ball { center, radius } => Some(center.dot(d) + radius * d.norm()),
            ConvexSet::Halfspace { normal, offset } => {
                if d.norm() == 0.0 {
                    return Some(0.0);
                }
                let t = d.dot(normal) / normal.norm_squared();
                let residual = (d - normal * t).norm();
                if t >= 0.0 && residual <= 1e-12 * d.norm() {
                    Some(t * offset)
                } else {
                    Some(f64::INFINITY)
                }
            }
            ConvexSet::Polyhedron { .. } => {
                if d.norm() == 0.0 {
                    Some(0.0)
                } else {
                    None
                }
            }
            ConvexSet::Cone { generators } => {
                if generators.iter().any(|g| pos_inf(g.dot(d))) {
                    Some(f64::INFINITY)
                } else {
                    Some(0.0)
                }
            }
            ConvexSet::Generated { points, rays } => {
                if rays.iter().any(|r| pos_inf(r.dot(d))) {
                    return Some(f64::INFINITY);
                }
                Some(points.iter().map(|p| p.dot(d)).fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    /// Recession-free vertex description `(points, rays)` when one exists.
    pub fn to_generated(&self) -> Option<(Vec<Point>, Vec<Point>)> {
        match self {
            ConvexSet::Point(p) => Some((vec![p.clone()], vec![])),
            ConvexSet::Box { lo, hi } => {
                let d = lo.len();
                let mut rays = Vec::new();
                let mut choices: Vec<Vec<f64>> = Vec::with_capacity(d);
                for i in 0..d {
                    let mut c = Vec::new();
                    match (lo[i].is_finite(), hi[i].is_finite()) {
                        (true, true) => {
                            c.push(lo[i]);
                            if hi[i] != lo[i] {
                                c.push(hi[i]);
                            }
                        }
                        (true, false) => {
                            c.push(lo[i]);
                            rays.push(unit(d, i, 1.0));
                        }
                        (false, true) => {
                            c.push(hi[i]);
                            rays.push(unit(d, i, -1.0));
                        }
                        (false, false) => {
                            c.push(0.0);
                            rays.push(unit(d, i, 1.0));
                            rays.push(unit(d, i, -1.0));
                        }
                    }
                    choices.push(c);
                }
                let mut points = vec![zeros(d)];
                for (i, c) in choices.iter().enumerate() {
                    let mut next = Vec::with_capacity(points.len() * c.len());
                    for p in &points {
                        for v in c {
                            let mut q = p.clone();
                            q[i] = *v;
                            next.push(q);
                        }
                    }
                    points = next;
                }
                Some((points, rays))
            }
            ConvexSet::Halfspace { normal, offset } => {
                let d = normal.len();
                let base = normal * (offset / normal.norm_squared());
                let mut rays = vec![-normal.clone()];
                for v in orthogonal_complement(normal) {
                    rays.push(-v.clone());
                    rays.push(v);
                }
                debug_assert_eq!(rays.len(), 2 * d - 1);
                Some((vec![base], rays))
            }
            ConvexSet::Cone { generators } => Some((vec![zeros(generators[0].len())], generators.clone())),
            ConvexSet::Generated { points, rays } => Some((points.clone(), rays.clone())),
            ConvexSet::Ball { .. } | ConvexSet::Polyhedron { .. } => None,
        }
    }

    pub fn translate(&self, v: &Point) -> ConvexSet {
        match self {
            ConvexSet::Point(p) => ConvexSet::Point(p + v),
            ConvexSet::Box { lo, hi } => ConvexSet::Box { lo: lo + v, hi: hi + v },
            ConvexSet::Ball { center, radius } => ConvexSet::Ball {
                center: center + v,
                radius: *radius,
            },
            ConvexSet::Halfspace { normal, offset } => ConvexSet::Halfspace {
                normal: normal.clone(),
                offset: offset + normal.dot(v),
            },
            ConvexSet::Polyhedron { rows, rhs } => ConvexSet::Polyhedron {
                rows: rows.clone(),
                rhs: rows.iter().zip(rhs).map(|(a, b)| b + a.dot(v)).collect(),
            },
            ConvexSet::Cone { generators } => ConvexSet::Generated {
                points: vec![v.clone()],
                rays: generators.clone(),
            },
            ConvexSet::Generated { points, rays } => ConvexSet::Generated {
                points: points.iter().map(|p| p + v).collect(),
                rays: rays.clone(),
            },
        }
    }

    /// `c * set` for `c >= 0`.
    pub fn scaled(&self, c: f64) -> ConvexSet {
        debug_assert!(c >= 0.0);
        if c == 0.0 {
            return ConvexSet::Point(zeros(self.dim()));
        }
        let mul = |v: f64| if v.is_infinite() { v } else { v * c };
        match self {
            ConvexSet::Point(p) => ConvexSet::Point(p * c),
            ConvexSet::Box { lo, hi } => ConvexSet::Box {
                lo: lo.map(mul),
                hi: hi.map(mul),
            },
            ConvexSet::Ball { center, radius } => ConvexSet::Ball {
                center: center * c,
                radius: radius * c,
            },
            ConvexSet::Halfspace { normal, offset } => ConvexSet::Halfspace {
                normal: normal.clone(),
                offset: offset * c,
            },
            ConvexSet::Polyhedron { rows, rhs } => ConvexSet::Polyhedron {
                rows: rows.clone(),
                rhs: rhs.iter().map(|b| b * c).collect(),
            },
            ConvexSet::Cone { .. } => self.clone(),
            ConvexSet::Generated { points, rays } => ConvexSet::Generated {
                points: points.iter().map(|p| p * c).collect(),
                rays: rays.clone(),
            },
        }
    }

    /// Minkowski sum; `None` when the result has no finite representation here.
    pub fn minkowski_sum(&self, other: &ConvexSet) -> Option<ConvexSet> {
        match (self, other) {
            (ConvexSet::Point(p), s) | (s, ConvexSet::Point(p)) => Some(s.translate(p)),
            (ConvexSet::Box { lo: l1, hi: h1 }, ConvexSet::Box { lo: l2, hi: h2 }) => {
                Some(ConvexSet::Box { lo: l1 + l2, hi: h1 + h2 })
            }
            _ => {
                let (p1, r1) = self.to_generated()?;
                let (p2, r2) = other.to_generated()?;
                let mut points = Vec::with_capacity(p1.len() * p2.len());
                for a in &p1 {
                    for b in &p2 {
                        points.push(a + b);
                    }
                }
                let mut rays = r1;
                rays.extend(r2);
                Some(ConvexSet::Generated { points, rays })
            }
        }
    }

    /// Normal cone at `x`.
    pub fn normal_cone(&self, x: &Point) -> Result<ConvexSet> {
        let d = x.len();
        if !self.contains(x, ACTIVE_TOL * (1.0 + x.norm())) {
            return Err(Error::EmptySubdifferential);
        }
        match self {
            ConvexSet::Box { lo, hi } => {
                let mut nlo = zeros(d);
                let mut nhi = zeros(d);
                for i in 0..d {
                    if lo[i].is_finite() && active(x[i], lo[i]) {
                        nlo[i] = f64::NEG_INFINITY;
                    }
                    if hi[i].is_finite() && active(x[i], hi[i]) {
                        nhi[i] = f64::INFINITY;
                    }
                }
                Ok(ConvexSet::Box { lo: nlo, hi: nhi })
            }
            ConvexSet::Point(_) => Ok(ConvexSet::whole_space(d)),
            ConvexSet::Cone { .. } | ConvexSet::Generated { .. } => Err(Error::Unsupported(
                "normal cone of a generator-described set".into(),
            )),
            _ => {
                let gens = self.normal_generators(x);
                if gens.is_empty() {
                    Ok(ConvexSet::Point(zeros(d)))
                } else {
                    Ok(ConvexSet::Cone { generators: gens })
                }
            }
        }
    }

    /// Ray generators of the normal cone at a point of the set.
    pub fn normal_generators(&self, x: &Point) -> Vec<Point> {
        let d = x.len();
        match self {
            ConvexSet::Box { lo, hi } => {
                let mut g = Vec::new();
                for i in 0..d {
                    if lo[i].is_finite() && active(x[i], lo[i]) {
                        g.push(unit(d, i, -1.0));
                    }
                    if hi[i].is_finite() && active(x[i], hi[i]) {
                        g.push(unit(d, i, 1.0));
                    }
                }
                g
            }
            ConvexSet::Ball { center, radius } => {
                let v = x - center;
                if *radius > 0.0 && active(v.norm(), *radius) {
                    vec![v / *radius]
                } else if *radius == 0.0 {
                    (0..d).flat_map(|i| [unit(d, i, 1.0), unit(d, i, -1.0)]).collect()
                } else {
                    vec![]
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                if active(normal.dot(x), *offset) {
                    vec![normal.clone()]
                } else {
                    vec![]
                }
            }
            ConvexSet::Polyhedron { rows, rhs } => rows
                .iter()
                .zip(rhs)
                .filter(|(a, b)| active(a.dot(x), **b))
                .map(|(a, _)| a.clone())
                .collect(),
            ConvexSet::Point(_) => (0..d).flat_map(|i| [unit(d, i, 1.0), unit(d, i, -1.0)]).collect(),
            ConvexSet::Cone { .. } | ConvexSet::Generated { .. } => vec![],
        }
    }
}

fn project_halfspace(normal: &Point, offset: f64, w: &Point) -> Point {
    let excess = normal.dot(w) - offset;
    if excess <= 0.0 {
        w.clone()
    } else {
        w - normal * (excess / normal.norm_squared())
    }
}

/// Orthonormal basis of the complement of `v` (Gram-Schmidt on the unit vectors).
fn orthogonal_complement(v: &Point) -> Vec<Point> {
    let d = v.len();
    let mut basis = vec![v.normalize()];
    for i in 0..d {
        let mut e = unit(d, i, 1.0);
        for b in &basis {
            e -= b * b.dot(&e);
        }
        if e.norm() > 1e-10 {
            basis.push(e.normalize());
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Dykstra's alternating projections onto an intersection of closed convex sets.
pub fn dykstra(sets: &[ConvexSet], w: &Point) -> Point {
    match sets.len() {
        0 => return w.clone(),
        1 => return sets[0].project(w),
        _ => {}
    }
    let mut x = w.clone();
    let mut incr: Vec<Point> = sets.iter().map(|_| zeros(w.len())).collect();
    for _ in 0..DYKSTRA_MAX_ITER {
        let prev = x.clone();
        // `x` can repeat for a sweep while the increments still move, so both count
        let mut change = 0.0;
        for (s, inc) in sets.iter().zip(incr.iter_mut()) {
            let y = s.project(&(&x + &*inc));
            let next_inc = &x + &*inc - &y;
            change += (&next_inc - &*inc).norm();
            *inc = next_inc;
            x = y;
        }
        change += (&x - &prev).norm();
        if change <= 1e-14 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

/// Projection onto `conv(points) + cone(rays)`.
///
/// Small descriptions are solved exactly by enumerating supports: the projection is
/// the unconstrained least-squares point over the affine hull of some affinely
/// independent support with nonnegative weights. Larger ones use accelerated projected
/// gradient on the weights.
fn project_generated(points: &[Point], rays: &[Point], w: &Point) -> Point {
    let rays: Vec<&Point> = rays.iter().filter(|r| r.norm() > 0.0).collect();
    if points.len() == 1 && rays.is_empty() {
        return points[0].clone();
    }
    if points.len() + rays.len() <= MAX_ENUMERATED_GENERATORS {
        project_generated_exact(points, &rays, w)
    } else {
        project_generated_iterative(points, &rays, w)
    }
}

fn project_generated_exact(points: &[Point], rays: &[&Point], w: &Point) -> Point {
    let d = w.len();
    let m = points.len();
    let k = rays.len();
    let mut best: Option<(f64, Point)> = None;
    for pmask in 1u32..(1 << m) {
        let pidx: Vec<usize> = (0..m).filter(|i| pmask & (1 << i) != 0).collect();
        if pidx.len() > d + 1 {
            continue;
        }
        for rmask in 0u32..(1 << k) {
            let ridx: Vec<usize> = (0..k).filter(|j| rmask & (1 << j) != 0).collect();
            if pidx.len() - 1 + ridx.len() > d {
                continue;
            }
            let anchor = &points[pidx[0]];
            let ncols = pidx.len() - 1 + ridx.len();
            let candidate = if ncols == 0 {
                Some(anchor.clone())
            } else {
                let mut cols = DMatrix::zeros(d, ncols);
                for (c, i) in pidx[1..].iter().enumerate() {
                    cols.set_column(c, &(&points[*i] - anchor));
                }
                for (c, j) in ridx.iter().enumerate() {
                    cols.set_column(pidx.len() - 1 + c, rays[*j]);
                }
                let rhs = w - anchor;
                let svd = cols.clone().svd(true, true);
                svd.solve(&rhs, 1e-13).ok().and_then(|coef| {
                    let np = pidx.len() - 1;
                    let mu_sum: f64 = coef.iter().take(np).sum();
                    let feasible = coef.iter().take(np).all(|c| *c >= -1e-12)
                        && coef.iter().skip(np).all(|c| *c >= -1e-12)
                        && mu_sum <= 1.0 + 1e-12;
                    feasible.then(|| anchor + &cols * coef)
                })
            };
            if let Some(y) = candidate {
                let dist = (&y - w).norm_squared();
                if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                    best = Some((dist, y));
                }
            }
        }
    }
    best.map(|(_, p)| p).unwrap_or_else(|| points[0].clone())
}

fn project_generated_iterative(points: &[Point], rays: &[&Point], w: &Point) -> Point {
    let m = points.len();
    let cols: Vec<Point> = points.iter().cloned().chain(rays.iter().map(|r| (*r).clone())).collect();
    let lip: f64 = cols.iter().map(|c| c.norm_squared()).sum::<f64>().max(1e-300);
    let combine = |c: &[f64]| -> Point {
        let mut y = zeros(w.len());
        for (ci, col) in c.iter().zip(&cols) {
            y += col * *ci;
        }
        y
    };
    let project = |c: &mut Vec<f64>| {
        let mu = crate::linalg::project_simplex(&c[..m]);
        c[..m].copy_from_slice(&mu);
        for v in c[m..].iter_mut() {
            *v = v.max(0.0);
        }
    };
    let mut c = vec![0.0; cols.len()];
    c[0] = 1.0;
    let mut z = c.clone();
    let mut t = 1.0f64;
    for _ in 0..200_000 {
        let r = combine(&z) - w;
        let mut next: Vec<f64> = z.iter().zip(&cols).map(|(zi, col)| zi - col.dot(&r) / lip).collect();
        project(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let delta: f64 = next.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        z = next
            .iter()
            .zip(&c)
            .map(|(n, o)| n + (t - 1.0) / t_next * (n - o))
            .collect();
        c = next;
        t = t_next;
        if delta <= 1e-15 {
            break;
        }
    }
    combine(&c)
}
