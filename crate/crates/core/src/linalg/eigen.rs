//! Symmetric eigensolver (Householder + implicit QL) and the generalized
//! problem `A v = lambda B v` by Cholesky congruence.

use super::{Matrix, SymMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues in non-decreasing order; eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: Option<Matrix<T>>,
}

/// Full symmetric eigendecomposition.
pub fn eigen_sym<T: Real>(a: &SymMatrix<T>, want_vectors: bool) -> Result<Eigen<T>> {
    if a.n() == 0 {
        return Err(Error::invalid("eigen_sym needs n >= 1"));
    }
    if !a.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = a.n();
    let mut v = a.to_matrix();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e, want_vectors);
    implicit_ql(&mut d, &mut e, want_vectors.then_some(&mut v));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = want_vectors.then(|| Matrix::from_fn(n, n, |i, j| v[(i, order[j])]));
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, non-decreasing.
pub fn eigenvalues_sym<T: Real>(a: &SymMatrix<T>) -> Result<Vec<T>> {
    eigen_sym(a, false).map(|e| e.values)
}

// Householder reduction to tridiagonal form (EISPACK tred2 ordering).
// On return `d` is the diagonal and `e[1..]` the subdiagonal; `v` holds the
// accumulated orthogonal transform when `accumulate` is set.
fn tridiagonalize<T: Real>(v: &mut Matrix<T>, d: &mut [T], e: &mut [T], accumulate: bool) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = T::zero();
        let mut h = T::zero();
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == T::zero() {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
                v[(j, i)] = T::zero();
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > T::zero() {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = T::zero();
            }
            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in j + 1..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = T::zero();
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = T::zero();
            }
        }
        d[i] = h;
    }

    if !accumulate {
        for (i, di) in d.iter_mut().enumerate() {
            *di = v[(i, i)];
        }
        e[0] = T::zero();
        return;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != T::zero() {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = T::zero();
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = T::zero();
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = T::zero();
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = T::zero();
}

// Implicit QL on the tridiagonal (d, e). Eigenvalues are left unsorted.
fn implicit_ql<T: Real>(d: &mut [T], e: &mut [T], mut v: Option<&mut Matrix<T>>) {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = T::zero();

    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (T::lit(2.0) * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let h = v[(k, i + 1)];
                            v[(k, i + 1)] = s * v[(k, i)] + c * h;
                            v[(k, i)] = c * v[(k, i)] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter >= 100 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }
}

/// Lower-triangular Cholesky factor `B = L L^T`.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn n(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [T]) {
        let n = self.n();
        for i in 0..n {
            let row = self.l.row(i);
            let s: T = row[..i].iter().zip(&b[..i]).map(|(&a, &x)| a * x).sum();
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward(&self, b: &mut [T]) {
        let n = self.n();
        for i in (0..n).rev() {
            b[i] /= self.l[(i, i)];
            let bi = b[i];
            for k in 0..i {
                b[k] -= self.l[(i, k)] * bi;
            }
        }
    }

    pub fn solve(&self, b: &mut [T]) {
        self.forward(b);
        self.backward(b);
    }

    /// `B^{-1}` as a symmetric matrix.
    pub fn inverse(&self) -> SymMatrix<T> {
        let n = self.n();
        let mut inv = SymMatrix::zeros(n);
        for j in 0..n {
            let mut col = vec![T::zero(); n];
            col[j] = T::one();
            self.solve(&mut col);
            for i in j..n {
                inv.set(i, j, col[i]);
            }
        }
        inv
    }
}

/// Cholesky factorization; a non-positive pivot yields a degenerate-metric
/// error carrying the eigenvector of `B` with the smallest eigenvalue.
pub fn cholesky<T: Real>(b: &SymMatrix<T>) -> Result<Cholesky<T>> {
    let n = b.n();
    let mut l = Matrix::zeros(n, n);
    let scale = b.norm_inf().max(T::min_positive_value());
    for j in 0..n {
        let mut s = b.get(j, j);
        for k in 0..j {
            s -= l[(j, k)] * l[(j, k)];
        }
        if !(s > T::epsilon() * scale * T::lit(n as f64)) {
            return Err(degenerate(b, j, s));
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = b.get(i, j);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(Cholesky { l })
}

fn degenerate<T: Real>(b: &SymMatrix<T>, index: usize, pivot: T) -> Error {
    let direction = eigen_sym(b, true)
        .ok()
        .and_then(|e| e.vectors)
        .map(|v| v.column(0).iter().map(|x| x.to_f64_lossy()).collect())
        .unwrap_or_default();
    Error::DegenerateMetric {
        index,
        pivot: pivot.to_f64_lossy(),
        direction,
    }
}

/// Generalized symmetric-definite eigenproblem `A v = lambda B v`.
///
/// Eigenvalues are those of `L^{-1} A L^{-T}` with `B = L L^T`; eigenvectors
/// (if requested) are `B`-orthonormal.
pub fn eigen_gen<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>, want_vectors: bool) -> Result<Eigen<T>> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = a.n();
    let chol = cholesky(b)?;
    // X = L^{-1} A, then C = L^{-1} X^T.
    let mut x = a.to_matrix();
    for j in 0..n {
        let mut col = x.column(j);
        chol.forward(&mut col);
        for i in 0..n {
            x[(i, j)] = col[i];
        }
    }
    let xt = x.transpose();
    let mut c = Matrix::zeros(n, n);
    for j in 0..n {
        let mut col = xt.column(j);
        chol.forward(&mut col);
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    let c = SymMatrix::symmetrized(&c);
    let mut eig = eigen_sym(&c, want_vectors)?;
    if let Some(y) = eig.vectors.as_mut() {
        for j in 0..n {
            let mut col = y.column(j);
            chol.backward(&mut col);
            for i in 0..n {
                y[(i, j)] = col[i];
            }
        }
    }
    Ok(eig)
}
