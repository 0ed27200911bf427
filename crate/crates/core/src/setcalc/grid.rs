use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::linalg::Point;
use crate::{Error, Result};

pub const MAX_GRID_DIM: usize = 3;
pub const MAX_CELLS: usize = 10_000_000;

/// Boolean cell mask over an axis-aligned box.
///
/// Cells are indexed with axis 0 varying fastest. Cell `i` along an axis covers
/// `(lo + i·w, lo + (i+1)·w]`, except cell 0 which also holds `lo`: points on a shared
/// face belong to the lower cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSet {
    lo: Vec<f64>,
    hi: Vec<f64>,
    res: Vec<usize>,
    mask: Vec<bool>,
}

impl GridSet {
    /// Grid over `[lo, hi]` with every cell retained.
    pub fn full(lo: &[f64], hi: &[f64], res: &[usize]) -> Result<Self> {
        let d = lo.len();
        if d == 0 || hi.len() != d || res.len() != d {
            return Err(Error::InvalidGrid("bounds and resolution must share a positive dimension".into()));
        }
        if d > MAX_GRID_DIM {
            return Err(Error::InvalidGrid(format!(
                "grid computations support dimension ≤ {MAX_GRID_DIM}, got {d}"
            )));
        }
        for a in 0..d {
            if !(lo[a].is_finite() && hi[a].is_finite() && lo[a] < hi[a]) {
                return Err(Error::InvalidGrid(format!("axis {a}: need finite lo < hi")));
            }
            if res[a] == 0 {
                return Err(Error::InvalidGrid(format!("axis {a}: resolution must be positive")));
            }
        }
        let cells = res.iter().try_fold(1usize, |acc, r| acc.checked_mul(*r));
        match cells {
            Some(n) if n <= MAX_CELLS => Ok(GridSet {
                lo: lo.to_vec(),
                hi: hi.to_vec(),
                res: res.to_vec(),
                mask: vec![true; n],
            }),
            _ => Err(Error::InvalidGrid(format!("more than {MAX_CELLS} cells"))),
        }
    }

    /// Uniform resolution on every axis.
    pub fn cube(lo: &[f64], hi: &[f64], res: usize) -> Result<Self> {
        GridSet::full(lo, hi, &vec![res; lo.len()])
    }

    pub fn empty_like(&self) -> Self {
        GridSet {
            mask: vec![false; self.mask.len()],
            ..self.clone()
        }
    }

    pub fn with_mask(&self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.mask.len() {
            return Err(Error::dim(self.mask.len(), mask.len(), "grid mask"));
        }
        Ok(GridSet { mask, ..self.clone() })
    }

    /// Retains the cells of `self` whose center satisfies `pred`.
    pub fn filter_centers(&self, pred: impl Fn(&Point) -> bool + Sync) -> Self {
        let mask = (0..self.len())
            .into_par_iter()
            .map(|i| self.mask[i] && pred(&self.center(i)))
            .collect();
        GridSet { mask, ..self.clone() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn resolution(&self) -> &[usize] {
        &self.res
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Total number of cells (retained or not).
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|m| *m)
    }

    pub fn get(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        self.mask[idx] = value;
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.res[axis] as f64
    }

    /// Largest cell width over the axes.
    pub fn max_cell_width(&self) -> f64 {
        (0..self.dim()).map(|a| self.cell_width(a)).fold(0.0, f64::max)
    }

    pub fn half_diagonal(&self) -> f64 {
        0.5 * (0..self.dim()).map(|a| self.cell_width(a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; MAX_GRID_DIM] {
        let mut out = [0; MAX_GRID_DIM];
        for (a, r) in self.res.iter().enumerate() {
            out[a] = idx % r;
            idx /= r;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0;
        for a in (0..self.dim()).rev() {
            idx = idx * self.res[a] + multi[a];
        }
        idx
    }

    pub fn center(&self, idx: usize) -> Point {
        let m = self.multi_index(idx);
        Point::from_fn(self.dim(), |a, _| self.lo[a] + (m[a] as f64 + 0.5) * self.cell_width(a))
    }

    /// Lower and upper corner of a cell.
    pub fn cell_bounds(&self, idx: usize) -> (Point, Point) {
        let m = self.multi_index(idx);
        let lo = Point::from_fn(self.dim(), |a, _| self.lo[a] + m[a] as f64 * self.cell_width(a));
        let hi = Point::from_fn(self.dim(), |a, _| self.lo[a] + (m[a] + 1) as f64 * self.cell_width(a));
        (lo, hi)
    }

    pub fn centers(&self) -> Vec<Point> {
        self.members().map(|i| self.center(i)).collect()
    }

    /// Index along `axis` of the cell holding coordinate `v`, if inside the box.
    fn axis_cell(&self, axis: usize, v: f64) -> Option<usize> {
        if !(v >= self.lo[axis] && v <= self.hi[axis]) {
            return None;
        }
        let mut r = (v - self.lo[axis]) / self.cell_width(axis);
        let near = r.round();
        if (r - near).abs() <= 1e-9 * near.max(1.0) {
            r = near;
        }
        let k = (r.ceil() as usize).saturating_sub(1);
        Some(k.min(self.res[axis] - 1))
    }

    /// Cell of the box holding `x` (regardless of the mask).
    pub fn cell_of(&self, x: &Point) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut m = [0; MAX_GRID_DIM];
        for a in 0..self.dim() {
            m[a] = self.axis_cell(a, x[a])?;
        }
        Some(self.flat_index(&m[..self.dim()]))
    }

    /// `x` lies in a retained cell.
    pub fn contains_point(&self, x: &Point) -> bool {
        self.cell_of(x).is_some_and(|i| self.mask[i])
    }

    fn check_layout(&self, other: &GridSet) -> Result<()> {
        if self.lo != other.lo || self.hi != other.hi || self.res != other.res {
            return Err(Error::InvalidGrid("grid sets have different layouts".into()));
        }
        Ok(())
    }

    pub fn intersect(&self, other: &GridSet) -> Result<GridSet> {
        self.check_layout(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect();
        Ok(GridSet { mask, ..self.clone() })
    }

    pub fn union(&self, other: &GridSet) -> Result<GridSet> {
        self.check_layout(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect();
        Ok(GridSet { mask, ..self.clone() })
    }

    pub fn difference(&self, other: &GridSet) -> Result<GridSet> {
        self.check_layout(other)?;
        let mask = self.mask.iter().zip(&other.mask).map(|(a, b)| *a && !*b).collect();
        Ok(GridSet { mask, ..self.clone() })
    }

    pub fn is_subset_of(&self, other: &GridSet) -> Result<bool> {
        self.check_layout(other)?;
        Ok(self.mask.iter().zip(&other.mask).all(|(a, b)| !*a || *b))
    }

    /// Number of retained cells of `self` missing from `other`.
    pub fn excess_over(&self, other: &GridSet) -> Result<usize> {
        self.check_layout(other)?;
        Ok(self.mask.iter().zip(&other.mask).filter(|(a, b)| **a && !**b).count())
    }

    /// Chebyshev dilation by `k` cells (clipped to the box).
    pub fn dilate(&self, k: usize) -> GridSet {
        if k == 0 {
            return self.clone();
        }
        let mut mask = self.mask.clone();
        for axis in 0..self.dim() {
            let stride: usize = self.res[..axis].iter().product();
            let r = self.res[axis];
            let prev = mask.clone();
            for (i, m) in mask.iter_mut().enumerate() {
                if *m {
                    continue;
                }
                let pos = (i / stride) % r;
                let lo = pos.saturating_sub(k);
                let hi = (pos + k).min(r - 1);
                *m = (lo..=hi).any(|p| prev[i - pos * stride + p * stride]);
            }
        }
        GridSet { mask, ..self.clone() }
    }

    /// Face-adjacent neighbours of a cell.
    pub fn face_neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let m = self.multi_index(idx);
        (0..self.dim()).flat_map(move |a| {
            let stride: usize = self.res[..a].iter().product();
            let down = (m[a] > 0).then(|| idx - stride);
            let up = (m[a] + 1 < self.res[a]).then(|| idx + stride);
            down.into_iter().chain(up)
        })
    }

    /// Face-adjacency components, ordered by their smallest cell index.
    pub fn connected_components(&self) -> Vec<GridSet> {
        let mut label = vec![usize::MAX; self.len()];
        let mut comps = Vec::new();
        for start in self.members() {
            if label[start] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut mask = vec![false; self.len()];
            let mut queue = VecDeque::from([start]);
            label[start] = id;
            while let Some(c) = queue.pop_front() {
                mask[c] = true;
                for n in self.face_neighbors(c) {
                    if self.mask[n] && label[n] == usize::MAX {
                        label[n] = id;
                        queue.push_back(n);
                    }
                }
            }
            comps.push(GridSet { mask, ..self.clone() });
        }
        comps
    }

    /// Component label of every cell (`None` for cells outside the set).
    pub fn component_labels(&self) -> Vec<Option<usize>> {
        let mut labels = vec![None; self.len()];
        for (k, comp) in self.connected_components().iter().enumerate() {
            for i in comp.members() {
                labels[i] = Some(k);
            }
        }
        labels
    }

    /// `min` over retained cell centers of `‖x − center‖`.
    ///
    /// The true distance to the union of retained cells differs by at most
    /// [`GridSet::half_diagonal`]. Searched ring by ring around the cell nearest `x`.
    pub fn distance(&self, x: &Point) -> Result<f64> {
        self.nearest(x, |idx| (x - self.center(idx)).norm())
    }

    /// Distance from `x` to the union of retained closed cells; zero inside them.
    pub fn closure_distance(&self, x: &Point) -> Result<f64> {
        self.nearest(x, |idx| {
            let (lo, hi) = self.cell_bounds(idx);
            (0..x.len())
                .map(|a| (lo[a] - x[a]).max(x[a] - hi[a]).max(0.0).powi(2))
                .sum::<f64>()
                .sqrt()
        })
    }

    /// Minimum of `metric` over retained cells, for metrics no smaller than the
    /// distance to the cell's closure.
    fn nearest(&self, x: &Point, metric: impl Fn(usize) -> f64) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::UndefinedDistance);
        }
        let d = self.dim();
        let mut home = [0usize; MAX_GRID_DIM];
        for a in 0..d {
            let clamped = x[a].clamp(self.lo[a], self.hi[a]);
            home[a] = self.axis_cell(a, clamped).unwrap_or(0);
        }
        let wmin = (0..d).map(|a| self.cell_width(a)).fold(f64::INFINITY, f64::min);
        // distance from x to the box of the home cell bounds the ring lower bound
        let outside = (0..d)
            .map(|a| (self.lo[a] - x[a]).max(x[a] - self.hi[a]).max(0.0).powi(2))
            .sum::<f64>()
            .sqrt();
        let max_ring = self.res.iter().max().copied().unwrap_or(1);
        let mut best = f64::INFINITY;
        for ring in 0..=max_ring {
            let lower = outside.max((ring as f64 - 1.0).max(0.0) * wmin);
            if lower > best {
                break;
            }
            self.for_each_ring_cell(&home[..d], ring, |idx| {
                if self.mask[idx] {
                    best = best.min(metric(idx));
                }
            });
        }
        Ok(best)
    }

    fn for_each_ring_cell(&self, home: &[usize], ring: usize, mut visit: impl FnMut(usize)) {
        let d = self.dim();
        let lo: Vec<usize> = (0..d).map(|a| home[a].saturating_sub(ring)).collect();
        let hi: Vec<usize> = (0..d).map(|a| (home[a] + ring).min(self.res[a] - 1)).collect();
        let mut m = lo.clone();
        loop {
            let on_ring = (0..d).any(|a| m[a].abs_diff(home[a]) == ring);
            if on_ring {
                visit(self.flat_index(&m));
            }
            let mut a = 0;
            loop {
                if a == d {
                    return;
                }
                if m[a] < hi[a] {
                    m[a] += 1;
                    break;
                }
                m[a] = lo[a];
                a += 1;
            }
        }
    }

    /// Text export: header lines then run lengths of alternating `0`/`1` runs,
    /// starting with a (possibly empty) run of excluded cells.
    pub fn to_text(&self) -> String {
        let mut out = String::from("gridset 1\n");
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "dim {}", self.dim());
        let _ = writeln!(out, "lo {}", join(&self.lo));
        let _ = writeln!(out, "hi {}", join(&self.hi));
        let _ = writeln!(
            out,
            "res {}",
            self.res.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        );
        let _ = writeln!(out, "count {}", self.count());
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &m in &self.mask {
            if m == current {
                len += 1;
            } else {
                runs.push(len);
                current = m;
                len = 1;
            }
        }
        runs.push(len);
        let _ = writeln!(
            out,
            "rle {}",
            runs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        );
        out
    }

    pub fn from_text(text: &str) -> Result<GridSet> {
        let bad = |line: usize, msg: &str| Error::Syntax {
            line,
            column: 1,
            message: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
            let (n, l) = lines.next().ok_or_else(|| bad(0, &format!("missing {key:?} line")))?;
            let mut parts = l.split_whitespace();
            if parts.next() != Some(key) {
                return Err(bad(n + 1, &format!("expected {key:?}")));
            }
            Ok((n + 1, parts.map(str::to_string).collect()))
        };
        let (n, v) = field("gridset")?;
        if v != ["1"] {
            return Err(bad(n, "unsupported gridset version"));
        }
        let floats = |n: usize, v: Vec<String>| -> Result<Vec<f64>> {
            v.iter().map(|s| s.parse::<f64>().map_err(|_| bad(n, "bad number"))).collect()
        };
        let ints = |n: usize, v: Vec<String>| -> Result<Vec<usize>> {
            v.iter().map(|s| s.parse::<usize>().map_err(|_| bad(n, "bad integer"))).collect()
        };
        let (n, v) = field("dim")?;
        let dim = ints(n, v)?.first().copied().ok_or_else(|| bad(n, "missing dim"))?;
        let (n, v) = field("lo")?;
        let lo = floats(n, v)?;
        let (n, v) = field("hi")?;
        let hi = floats(n, v)?;
        let (n, v) = field("res")?;
        let res = ints(n, v)?;
        if lo.len() != dim || hi.len() != dim || res.len() != dim {
            return Err(bad(n, "header dimension mismatch"));
        }
        let (n, v) = field("count")?;
        let count = ints(n, v)?.first().copied().ok_or_else(|| bad(n, "missing count"))?;
        let (n, v) = field("rle")?;
        let runs = ints(n, v)?;
        let mut grid = GridSet::full(&lo, &hi, &res)?;
        let mut mask = Vec::with_capacity(grid.len());
        for (k, r) in runs.iter().enumerate() {
            mask.extend(std::iter::repeat(k % 2 == 1).take(*r));
        }
        if mask.len() != grid.len() {
            return Err(bad(n, "run lengths do not cover the grid"));
        }
        grid.mask = mask;
        if grid.count() != count {
            return Err(bad(n, "cell count does not match the mask"));
        }
        Ok(grid)
    }

    /// CSV of retained cell centers with header `x1..xn`.
    pub fn centers_csv(&self) -> String {
        let mut out = (1..=self.dim()).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
        out.push('\n');
        for i in self.members() {
            let c = self.center(i);
            let row: Vec<String> = c.iter().map(|v| format!("{v:.16e}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}
