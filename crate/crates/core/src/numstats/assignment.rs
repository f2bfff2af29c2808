//! Maximum-weight one-to-one assignment (Hungarian method with potentials).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assignment {
    /// `(code index, factor index)`, ordered by the index on the shorter side.
    pub pairs: Vec<(usize, usize)>,
    /// Sum of the selected entries, accumulated in `pairs` order.
    pub objective: f64,
}

/// Minimum-cost perfect matching on a square cost matrix; returns row -> column.
fn min_cost_square(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    let inf = f64::INFINITY;
    // 1-based arrays with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Assignment of size `min(m, d)` maximizing the sum of selected entries of the
/// `m x d` similarity matrix. Rectangular inputs are padded to square with
/// `min - 1`, which never beats a real entry.
pub fn hungarian_max(sim: &DMatrix<f64>) -> Result<Assignment> {
    let (m, d) = sim.shape();
    if m == 0 || d == 0 {
        return Err(Error::Empty);
    }
    if sim.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("sim", "entries must be finite"));
    }
    let size = m.max(d);
    let pad = sim.min() - 1.0;
    let cost = DMatrix::from_fn(size, size, |i, j| {
        if i < m && j < d {
            -sim[(i, j)]
        } else {
            -pad
        }
    });
    let row_to_col = min_cost_square(&cost);
    let mut pairs: Vec<(usize, usize)> = row_to_col
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < m && j < d)
        .map(|(i, &j)| (i, j))
        .collect();
    if d <= m {
        pairs.sort_by_key(|&(_, j)| j);
    } else {
        pairs.sort_by_key(|&(i, _)| i);
    }
    let objective = pairs.iter().map(|&(i, j)| sim[(i, j)]).sum();
    Ok(Assignment { pairs, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let s = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8]);
        let a = hungarian_max(&s).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert!((a.objective - 1.7).abs() < 1e-15);
    }

    #[test]
    fn identity_like() {
        let s = DMatrix::<f64>::identity(6, 6);
        let a = hungarian_max(&s).unwrap();
        assert_eq!(a.pairs, (0..6).map(|i| (i, i)).collect::<Vec<_>>());
        assert_eq!(a.objective, 6.0);
    }

    #[test]
    fn rectangular_both_ways() {
        let tall = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, 0.9, 0.3, 0.4, 0.8]);
        let a = hungarian_max(&tall).unwrap();
        assert_eq!(a.pairs, vec![(1, 0), (2, 1)]);
        let wide = tall.transpose();
        let b = hungarian_max(&wide).unwrap();
        assert_eq!(b.pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn negative_entries() {
        let s = DMatrix::from_row_slice(2, 3, &[-5.0, -1.0, -3.0, -2.0, -4.0, -9.0]);
        let a = hungarian_max(&s).unwrap();
        assert_eq!(a.pairs, vec![(0, 1), (1, 0)]);
        assert_eq!(a.objective, -3.0);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(hungarian_max(&DMatrix::<f64>::zeros(0, 3)), Err(Error::Empty)));
    }
}
