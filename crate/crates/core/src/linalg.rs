//! Small dense linear algebra used by the projection polish step and the
//! boundary hyperplane fit. Systems here are at most a few dozen rows.

use crate::scalar::Real;

/// Solves `m * x = rhs` by Gaussian elimination with partial pivoting.
/// Returns `None` when a pivot falls below `pivot_tol` (relative to the
/// largest entry of `m`).
pub fn solve<T: Real>(mut m: Vec<Vec<T>>, mut rhs: Vec<T>, pivot_tol: T) -> Option<Vec<T>> {
    let n = rhs.len();
    debug_assert!(m.len() == n && m.iter().all(|row| row.len() == n));
    let scale = m
        .iter()
        .flat_map(|row| row.iter())
        .fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return if n == 0 { Some(Vec::new()) } else { None };
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot_row][col].abs() <= pivot_tol * scale {
            return None;
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == T::zero() {
                continue;
            }
            #[allow(clippy::needless_range_loop)]
            for k in col..n {
                let v = m[col][k];
                m[row][k] = m[row][k] - factor * v;
            }
            rhs[row] = rhs[row] - factor * rhs[col];
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail: T = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Some(x)
}

/// Unit eigenvector for the smallest eigenvalue of a symmetric positive
/// semidefinite matrix, by shifted inverse iteration.
pub fn smallest_eigenvector<T: Real>(m: &[Vec<T>]) -> Option<Vec<T>> {
    let n = m.len();
    let trace: T = (0..n).map(|i| m[i][i]).sum();
    let shift =
        (trace / T::lit(n as f64)).max(T::one()) * T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
    let shifted: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { m[i][j] + shift } else { m[i][j] })
                .collect()
        })
        .collect();
    // Deterministic, not orthogonal to any coordinate axis.
    let mut v: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.1 * i as f64)).collect();
    normalize(&mut v)?;
    for _ in 0..64 {
        let mut next = solve(shifted.clone(), v.clone(), T::epsilon())?;
        normalize(&mut next)?;
        let align: T = next.iter().zip(&v).map(|(a, b)| *a * *b).sum();
        v = next;
        if T::one() - align.abs() < T::epsilon() * T::lit(16.0) {
            break;
        }
    }
    Some(v)
}

fn normalize<T: Real>(v: &mut [T]) -> Option<()> {
    let norm = v.iter().map(|c| *c * *c).sum::<T>().sqrt();
    if !(norm > T::zero()) || !norm.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|c| *c = *c / norm);
    Some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn solves_small_system() {
        let m = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve(m, vec![3.0, 5.0], 1e-14).unwrap();
        assert_relative_eq!(x[0], 0.8, epsilon = 1e-12);
        assert_relative_eq!(x[1], 1.4, epsilon = 1e-12);
    }

    #[test]
    fn singular_system_is_rejected() {
        let m = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve(m, vec![1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn smallest_eigenvector_of_diagonal() {
        let m = vec![
            vec![4.0f64, 0.0, 0.0],
            vec![0.0, 1e-3, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let v = smallest_eigenvector(&m).unwrap();
        assert_relative_eq!(v[1].abs(), 1.0, epsilon = 1e-9);
    }
}
