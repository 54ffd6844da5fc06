//! Real-spectrum eigendecomposition `A = P·diag(λ)·P⁻¹`.
//!
//! The matrix is reduced to upper Hessenberg form by Householder reflections,
//! then driven to real Schur form by Francis double-shift QR sweeps with the
//! orthogonal transformations accumulated. Eigenvectors of the triangular
//! factor come from back-substitution and are mapped back through the
//! accumulated basis. This is the classical EISPACK `orthes`/`hqr2` pipeline
//! restricted to real spectra: any converged 2×2 block with complex roots is
//! rejected.

use super::{inverse, LinalgError, Matrix};
use crate::scalar::Scalar;

/// Relative imaginary-part threshold above which a 2×2 block counts as complex.
pub const DEFAULT_COMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition<T> {
    /// Eigenvalues, sorted descending.
    pub lambdas: Vec<T>,
    /// Eigenvectors as columns, each with unit infinity norm. Column `i` pairs with `lambdas[i]`.
    pub p: Matrix<T>,
    pub p_inv: Matrix<T>,
}

impl<T: Scalar> EigenDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambda_max(&self) -> T {
        self.lambdas[0]
    }

    pub fn sigma(&self) -> Matrix<T> {
        Matrix::from_diag(&self.lambdas)
    }

    /// `P·diag(λ)·P⁻¹`
    pub fn reconstruct(&self) -> Matrix<T> {
        self.p.matmul(&self.sigma()).matmul(&self.p_inv)
    }

    /// `‖P‖∞·‖P⁻¹‖∞`
    pub fn condition(&self) -> T {
        self.p.inf_norm() * self.p_inv.inf_norm()
    }
}

/// Computes a real eigendecomposition of a square matrix.
///
/// `tol` is the relative threshold (against `‖a‖∞`) on the imaginary part of
/// a converged 2×2 block; see [`DEFAULT_COMPLEX_TOL`].
pub fn real_eigen<T: Scalar>(a: &Matrix<T>, tol: T) -> Result<EigenDecomposition<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare { rows: a.rows(), cols: a.cols() });
    }
    let n = a.rows();
    let anorm = a.inf_norm();

    let mut h = a.clone();
    let mut v = hessenberg(&mut h);
    let d = schur(&mut h, &mut v, tol * anorm.max(T::min_positive_value()))?;
    let vecs = triangular_eigenvectors(&mut h, &v, &d);

    // stable sort keeps encounter order on ties
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));

    let lambdas: Vec<T> = order.iter().map(|&i| d[i]).collect();
    let mut p = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        // normalize to unit infinity norm, first largest entry positive
        let mut big = T::zero();
        let mut big_val = T::zero();
        for i in 0..n {
            let x = vecs[(i, src)];
            if x.abs() > big {
                big = x.abs();
                big_val = x;
            }
        }
        if big == T::zero() || !big.is_finite() {
            return Err(LinalgError::DefectiveMatrix(format!("null eigenvector for eigenvalue {}", d[src])));
        }
        for i in 0..n {
            p[(i, col)] = vecs[(i, src)] / big_val;
        }
    }

    let p_inv = inverse(&p).map_err(|_| {
        LinalgError::DefectiveMatrix("eigenvector matrix is singular to working precision".into())
    })?;
    Ok(EigenDecomposition { lambdas, p, p_inv })
}

/// Reduces `h` in place to upper Hessenberg form and returns the orthogonal basis `V`
/// with `A = V·H·Vᵀ`.
fn hessenberg<T: Scalar>(h: &mut Matrix<T>) -> Matrix<T> {
    let n = h.rows();
    let mut ort = vec![T::zero(); n];
    let high = n - 1;

    for m in 1..high {
        let scale = (m..=high).fold(T::zero(), |s, i| s + h[(i, m - 1)].abs());
        if scale == T::zero() {
            continue;
        }
        let mut hh = T::zero();
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > T::zero() {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        for j in m..n {
            let mut f = T::zero();
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = T::zero();
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] = scale * ort[m];
        h[(m, m - 1)] = scale * g;
    }

    let mut v = Matrix::identity(n);
    for m in (1..high).rev() {
        if h[(m, m - 1)] == T::zero() {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h[(i, m - 1)];
        }
        for j in m..=high {
            let mut g = T::zero();
            for i in m..=high {
                g += ort[i] * v[(i, j)];
            }
            g = (g / ort[m]) / h[(m, m - 1)];
            for i in m..=high {
                v[(i, j)] += g * ort[i];
            }
        }
    }

    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            h[(i, j)] = T::zero();
        }
    }
    v
}

/// Francis double-shift QR on the Hessenberg matrix `h`, accumulating into `v`.
/// On success `h` is upper triangular and the returned vector holds its diagonal.
fn schur<T: Scalar>(h: &mut Matrix<T>, v: &mut Matrix<T>, complex_abs_tol: T) -> Result<Vec<T>, LinalgError> {
    let nn = h.rows();
    let eps = T::epsilon();
    let half = T::lit(0.5);
    let max_sweeps = 100 * nn;

    let mut d = vec![T::zero(); nn];
    let mut exshift = T::zero();
    let mut norm = T::zero();
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }

    let (mut p, mut q, mut r, mut s, mut z): (T, T, T, T, T);
    let (mut w, mut x, mut y);
    let mut iter = 0usize;
    let mut sweeps = 0usize;
    let mut n = nn as isize - 1;

    while n >= 0 {
        let nu = n as usize;
        // look for a single small subdiagonal element
        let mut l = nu;
        while l > 0 {
            s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == T::zero() {
                s = norm;
            }
            if h[(l, l - 1)].abs() <= eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // one root
            h[(nu, nu)] += exshift;
            d[nu] = h[(nu, nu)];
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // two roots
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];
            p = (h[(nu - 1, nu - 1)] - h[(nu, nu)]) * half;
            q = p * p + w;
            z = q.abs().sqrt();
            h[(nu, nu)] += exshift;
            h[(nu - 1, nu - 1)] += exshift;
            x = h[(nu, nu)];

            if q < T::zero() {
                if z > complex_abs_tol {
                    return Err(LinalgError::ComplexSpectrum { re: (x + p).to_f64_lossy(), im: z.to_f64_lossy() });
                }
                return Err(LinalgError::DefectiveMatrix(format!(
                    "near-coincident eigenvalue pair at {} cannot be separated",
                    x + p
                )));
            }

            z = if p >= T::zero() { p + z } else { p - z };
            d[nu - 1] = x + z;
            d[nu] = d[nu - 1];
            if z != T::zero() {
                d[nu] = x - w / z;
            }
            x = h[(nu, nu - 1)];
            s = x.abs() + z.abs();
            p = x / s;
            q = z / s;
            r = (p * p + q * q).sqrt();
            p /= r;
            q /= r;

            for j in nu - 1..nn {
                z = h[(nu - 1, j)];
                h[(nu - 1, j)] = q * z + p * h[(nu, j)];
                h[(nu, j)] = q * h[(nu, j)] - p * z;
            }
            for i in 0..=nu {
                z = h[(i, nu - 1)];
                h[(i, nu - 1)] = q * z + p * h[(i, nu)];
                h[(i, nu)] = q * h[(i, nu)] - p * z;
            }
            for i in 0..nn {
                z = v[(i, nu - 1)];
                v[(i, nu - 1)] = q * z + p * v[(i, nu)];
                v[(i, nu)] = q * v[(i, nu)] - p * z;
            }
            h[(nu, nu - 1)] = T::zero();
            n -= 2;
            iter = 0;
        } else {
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(LinalgError::DefectiveMatrix(format!(
                    "QR iteration did not converge within {max_sweeps} sweeps"
                )));
            }
            // form shift
            x = h[(nu, nu)];
            y = h[(nu - 1, nu - 1)];
            w = h[(nu, nu - 1)] * h[(nu - 1, nu)];

            // exceptional shifts
            if iter == 10 {
                exshift += x;
                for i in 0..=nu {
                    h[(i, i)] -= x;
                }
                s = h[(nu, nu - 1)].abs() + h[(nu - 1, nu - 2)].abs();
                x = T::lit(0.75) * s;
                y = x;
                w = T::lit(-0.4375) * s * s;
            }
            if iter == 30 {
                s = (y - x) * half;
                s = s * s + w;
                if s > T::zero() {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) * half + s);
                    for i in 0..=nu {
                        h[(i, i)] -= s;
                    }
                    exshift += s;
                    x = T::lit(0.964);
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            loop {
                z = h[(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[(m + 1, m)] + h[(m, m + 1)];
                q = h[(m + 1, m + 1)] - z - r - s;
                r = h[(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps * (p.abs() * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[(i, i - 2)] = T::zero();
                if i > m + 2 {
                    h[(i, i - 3)] = T::zero();
                }
            }

            // double QR step on rows l..=n, columns m..=n
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[(k, k - 1)];
                    q = h[(k + 1, k - 1)];
                    r = if notlast { h[(k + 2, k - 1)] } else { T::zero() };
                    x = p.abs() + q.abs() + r.abs();
                    if x == T::zero() {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < T::zero() {
                    s = -s;
                }
                if s == T::zero() {
                    continue;
                }
                if k != m {
                    h[(k, k - 1)] = -s * x;
                } else if l != m {
                    h[(k, k - 1)] = -h[(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..nn {
                    p = h[(k, j)] + q * h[(k + 1, j)];
                    if notlast {
                        p += r * h[(k + 2, j)];
                        h[(k + 2, j)] -= p * z;
                    }
                    h[(k, j)] -= p * x;
                    h[(k + 1, j)] -= p * y;
                }
                for i in 0..=nu.min(k + 3) {
                    p = x * h[(i, k)] + y * h[(i, k + 1)];
                    if notlast {
                        p += z * h[(i, k + 2)];
                        h[(i, k + 2)] -= p * r;
                    }
                    h[(i, k)] -= p;
                    h[(i, k + 1)] -= p * q;
                }
                for i in 0..nn {
                    p = x * v[(i, k)] + y * v[(i, k + 1)];
                    if notlast {
                        p += z * v[(i, k + 2)];
                        v[(i, k + 2)] -= p * r;
                    }
                    v[(i, k)] -= p;
                    v[(i, k + 1)] -= p * q;
                }
            }
        }
    }
    Ok(d)
}

/// Eigenvectors of the triangular Schur factor by back-substitution, mapped back
/// through `v`. Columns are not normalized.
fn triangular_eigenvectors<T: Scalar>(h: &mut Matrix<T>, v: &Matrix<T>, d: &[T]) -> Matrix<T> {
    let nn = h.rows();
    let eps = T::epsilon();
    let mut norm = T::zero();
    for i in 0..nn {
        for j in i..nn {
            norm += h[(i, j)].abs();
        }
    }
    if norm == T::zero() {
        return Matrix::identity(nn);
    }

    for n in (0..nn).rev() {
        let p = d[n];
        h[(n, n)] = T::one();
        for i in (0..n).rev() {
            let w = h[(i, i)] - p;
            let mut r = T::zero();
            for j in i + 1..=n {
                r += h[(i, j)] * h[(j, n)];
            }
            h[(i, n)] = if w != T::zero() { -r / w } else { -r / (eps * norm) };
            let t = h[(i, n)].abs();
            if (eps * t) * t > T::one() {
                for j in i..=n {
                    h[(j, n)] /= t;
                }
            }
        }
    }

    // back-transform: X = V·Y with Y upper triangular
    let mut x = Matrix::zeros(nn, nn);
    for j in 0..nn {
        for i in 0..nn {
            let mut acc = T::zero();
            for k in 0..=j {
                acc += v[(i, k)] * h[(k, j)];
            }
            x[(i, j)] = acc;
        }
    }
    x
}
