//! Dense Gaussian elimination with partial pivoting, generic over the scalar mode.
//!
//! Over rationals every step is exact, so the pivot test reduces to a nonzero check.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `a x = b` in place. `a` is square and row-major.
pub fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>, pivot_tol: f64) -> Result<Vec<T>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    let tol = T::tolerance(pivot_tol);

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .fold(None, |best: Option<(usize, T)>, (r, v)| match best {
                Some((_, ref bv)) if *bv >= v => best,
                _ => Some((r, v)),
            })
            .expect("nonempty pivot range");
        if pivot_abs <= tol {
            return Err(Error::SingularSystem {
                column: col,
                pivot: pivot_abs.to_f64(),
            });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);

        let pivot = a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone() / pivot.clone();
            a[r][col] = T::zero();
            let (upper, lower) = a.split_at_mut(r);
            for (target, source) in lower[0][col + 1..].iter_mut().zip(&upper[col][col + 1..]) {
                *target = target.clone() - factor.clone() * source.clone();
            }
            let delta = factor * b[col].clone();
            b[r] = b[r].clone() - delta;
        }
    }

    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc = acc - a[r][c].clone() * x[c].clone();
        }
        x[r] = acc / a[r][r].clone();
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn float_solve_needs_pivoting() {
        let a = vec![vec![0.0, 1.0], vec![2.0, 1.0]];
        let x = solve_dense(a, vec![1.0, 3.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_solve() {
        let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        // (I - P) x = v with P = [[1/2, 1/4], [0, 1/2]], v = [1/4, 1/2]
        let a = vec![vec![r(1, 2), r(-1, 4)], vec![r(0, 1), r(1, 2)]];
        let x = solve_dense(a, vec![r(1, 4), r(1, 2)], 1e-12).unwrap();
        assert_eq!(x, vec![r(1, 1), r(1, 1)]);
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(
            solve_dense(a, vec![1.0, 2.0], 1e-12).unwrap_err().code(),
            "SingularSystem"
        );
        let r = |n: i64| BigRational::from_integer(n.into());
        let a = vec![vec![r(1), r(2)], vec![r(2), r(4)]];
        assert!(solve_dense(a, vec![r(1), r(2)], 1e-12).is_err());
    }

    #[test]
    fn empty_system() {
        assert!(solve_dense::<f64>(vec![], vec![], 1e-12)
            .unwrap()
            .is_empty());
    }
}
