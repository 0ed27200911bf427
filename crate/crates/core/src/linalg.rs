//! Small dense helpers shared by the numerical modules.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// A point (or vector) of the state space.
pub type Point = DVector<f64>;

pub fn point(coords: &[f64]) -> Point {
    DVector::from_column_slice(coords)
}

pub fn zeros(dim: usize) -> Point {
    DVector::zeros(dim)
}

pub fn unit(dim: usize, axis: usize, sign: f64) -> Point {
    let mut e = DVector::zeros(dim);
    e[axis] = sign;
    e
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    (a - b).norm()
}

/// Builds a square matrix from row-major rows.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// Solves `m x = b` for a small square system.
pub fn solve(m: &DMatrix<f64>, b: &Point) -> Result<Point> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::InvalidArgument("singular linear system".into()))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_sym_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|vi| (vi - theta).max(0.0)).collect()
}

/// Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |p: &[Point], q: &[Point]| {
        p.iter()
            .map(|x| q.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_sums_to_one() {
        let p = project_simplex(&[0.3, 2.0, -1.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let q = project_simplex(&[0.5, 0.5]);
        assert!((q[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn slope_of_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert!((ls_slope(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_of_shifted_sets() {
        let a = vec![point(&[0.0]), point(&[1.0])];
        let b = vec![point(&[0.5])];
        assert!((hausdorff(&a, &b) - 0.5).abs() < 1e-15);
    }
}
