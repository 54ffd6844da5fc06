use super::{LinalgError, Matrix, Vector};
use crate::scalar::Scalar;

/// Pivots smaller than this multiple of `‖A‖∞` are treated as zero.
const PIVOT_RTOL: f64 = 1e-13;

/// LU factorization with partial pivoting, `P·A = L·U` stored compactly.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self, LinalgError> {
        if !a.is_square() {
            return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
        }
        let n = a.rows();
        let threshold = T::lit(PIVOT_RTOL) * a.inf_norm();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= threshold || pivot == T::zero() {
                return Err(LinalgError::SingularMatrix { column: k, pivot: pivot.to_f64_lossy() });
            }
            lu.swap_rows(k, p);
            perm.swap(k, p);
            let d = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / d;
                lu[(i, k)] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &Vector<T>) -> Result<Vector<T>, LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(Vector::from_vec(x))
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.dim();
        let mut inv = Matrix::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = T::one();
            let col = self.solve(&e).expect("dimension checked");
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Solves `a·x = b` by partial-pivoted LU.
pub fn lu_solve<T: Scalar>(a: &Matrix<T>, b: &Vector<T>) -> Result<Vector<T>, LinalgError> {
    Lu::factor(a)?.solve(b)
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    Ok(Lu::factor(a)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn solves_trivial_systems() {
        let x = lu_solve(&Matrix::<f64>::identity(2), &Vector::from_vec(vec![3.0, 4.0])).unwrap();
        assert_eq!(x.into_vec(), vec![3.0, 4.0]);
        let a = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]);
        let x = lu_solve(&a, &Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_eq!(x.into_vec(), vec![1.0, 1.0]);
    }

    #[test]
    fn random_well_conditioned_residual() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = 4;
            let a = Matrix::from_fn(n, n, |i, j| {
                let off: f64 = rng.gen_range(-1.0..1.0);
                if i == j {
                    5.0 + off
                } else {
                    off
                }
            });
            let b: Vector<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let x = lu_solve(&a, &b).unwrap();
            let r = (&a.mul_vec(&x) - &b).inf_norm();
            assert!(r <= 1e-12 * (a.inf_norm() * x.inf_norm() + b.inf_norm()), "residual {r}");
        }
    }

    #[test]
    fn inverses() {
        assert_eq!(inverse(&Matrix::<f64>::identity(4)).unwrap(), Matrix::identity(4));
        let p = Matrix::from_rows(&[[0.0, 1.0], [1.0, -1.0]]);
        let inv = inverse(&p).unwrap();
        assert_eq!(inv, Matrix::from_rows(&[[1.0, 1.0], [1.0, 0.0]]));
        assert_eq!(p.matmul(&inv), Matrix::identity(2));
        let d = inverse(&Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]])).unwrap();
        assert_eq!(d, Matrix::from_rows(&[[0.5, 0.0], [0.0, 0.25]]));
    }

    #[test]
    fn singular_is_reported() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]);
        assert!(matches!(lu_solve(&a, &Vector::from_vec(vec![1.0, 1.0])), Err(LinalgError::SingularMatrix { .. })));
        assert!(matches!(inverse(&Matrix::<f64>::zeros(3, 3)), Err(LinalgError::SingularMatrix { .. })));
    }

    #[test]
    fn f32_solve() {
        let a = Matrix::from_rows(&[[4.0_f32, 1.0], [1.0, 3.0]]);
        let x = lu_solve(&a, &Vector::from_vec(vec![1.0, 2.0])).unwrap();
        let r = (&a.mul_vec(&x) - &Vector::from_vec(vec![1.0, 2.0])).inf_norm();
        assert!(r < 1e-6);
    }
}
