//! Symmetric banded matrices and their unpivoted `L D L^T` factorization.

use super::SymMatrix;
use crate::scalar::Real;

/// Symmetric matrix with half-bandwidth `bw`: `a_ij = 0` whenever `|i - j| > bw`.
///
/// Storage is the upper band by rows: row `k` holds `a_{k,k}, ..., a_{k,k+bw}`,
/// which keeps the elimination inner loop contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedSym<T> {
    n: usize,
    bw: usize,
    data: Vec<T>,
}

/// Pivot that was zero or numerically negligible during factorization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LdlBreakdown {
    pub index: usize,
    pub pivot: f64,
}

impl<T: Real> BandedSym<T> {
    pub fn zeros(n: usize, bw: usize) -> Self {
        BandedSym {
            n,
            bw,
            data: vec![T::zero(); n * (bw + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        (hi - lo <= self.bw && hi < self.n).then(|| lo * (self.bw + 1) + (hi - lo))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] += v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn shifted(&self, shift: T) -> Self {
        let mut m = self.clone();
        for k in 0..self.n {
            m.data[k * (self.bw + 1)] -= shift;
        }
        m
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= c);
        m
    }

    pub fn norm_inf(&self) -> T {
        let mut rows = vec![T::zero(); self.n];
        for i in 0..self.n {
            for off in 0..=self.bw.min(self.n - 1 - i) {
                let a = self.data[i * (self.bw + 1) + off].abs();
                rows[i] += a;
                if off > 0 {
                    rows[i + off] += a;
                }
            }
        }
        rows.into_iter().fold(T::zero(), |a, b| a.max(b))
    }

    pub fn to_dense(&self) -> SymMatrix<T> {
        SymMatrix::from_fn(self.n, |i, j| self.get(i, j))
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            y[i] += row[0] * x[i];
            for off in 1..=self.bw.min(self.n - 1 - i) {
                y[i] += row[off] * x[i + off];
                y[i + off] += row[off] * x[i];
            }
        }
        y
    }

    /// `A = U^T D U` with unit upper-triangular banded `U`, no pivoting.
    ///
    /// Fails on a pivot below `eps * ||A||_inf` in magnitude (or non-finite).
    pub fn ldl(&self) -> Result<BandedLdl<T>, LdlBreakdown> {
        let tol = T::epsilon() * self.norm_inf();
        self.factor(Some(tol))
    }

    /// Factorization that never stops; only exact zero pivots are replaced
    /// by a signed epsilon so the sweep can continue.
    pub(crate) fn ldl_unchecked(&self) -> BandedLdl<T> {
        self.factor(None).expect("unchecked factorization does not fail")
    }

    fn factor(&self, tol: Option<T>) -> Result<BandedLdl<T>, LdlBreakdown> {
        let (n, w) = (self.n, self.bw + 1);
        let mut a = self.data.clone();
        let mut d = vec![T::zero(); n];
        let mut scaled = vec![T::zero(); w];
        for k in 0..n {
            let mut piv = a[k * w];
            match tol {
                Some(t) if !(piv.abs() > t) || !piv.is_finite() => {
                    return Err(LdlBreakdown {
                        index: k,
                        pivot: piv.to_f64_lossy(),
                    })
                }
                None if piv == T::zero() => piv = T::min_positive_value(),
                _ => {}
            }
            d[k] = piv;
            let reach = self.bw.min(n - 1 - k);
            for j in 1..=reach {
                scaled[j] = a[k * w + j] / piv;
            }
            for i in 1..=reach {
                let f = a[k * w + i];
                if f == T::zero() {
                    continue;
                }
                let dst = &mut a[(k + i) * w..(k + i) * w + (reach - i + 1)];
                for (t, &s) in dst.iter_mut().zip(&scaled[i..=reach]) {
                    *t -= f * s;
                }
            }
            a[k * w] = T::one();
            a[k * w + 1..k * w + 1 + reach].copy_from_slice(&scaled[1..=reach]);
        }
        Ok(BandedLdl {
            n,
            bw: self.bw,
            d,
            u: a,
        })
    }
}

/// Factor `A = U^T D U` of a [`BandedSym`].
#[derive(Clone, Debug)]
pub struct BandedLdl<T> {
    n: usize,
    bw: usize,
    d: Vec<T>,
    u: Vec<T>,
}

impl<T: Real> BandedLdl<T> {
    pub fn pivots(&self) -> &[T] {
        &self.d
    }

    /// Sign counts of the pivots `(negative, zero, positive)`.
    pub fn pivot_signs(&self) -> (usize, usize, usize) {
        let neg = self.d.iter().filter(|&&p| p < T::zero()).count();
        let zero = self.d.iter().filter(|&&p| p == T::zero()).count();
        (neg, zero, self.n - neg - zero)
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [T]) {
        let w = self.bw + 1;
        // U^T y = b
        for k in 0..self.n {
            let bk = b[k];
            let reach = self.bw.min(self.n - 1 - k);
            for off in 1..=reach {
                b[k + off] -= self.u[k * w + off] * bk;
            }
        }
        for k in 0..self.n {
            b[k] /= self.d[k];
        }
        // U x = z
        for k in (0..self.n).rev() {
            let reach = self.bw.min(self.n - 1 - k);
            let mut s = b[k];
            for off in 1..=reach {
                s -= self.u[k * w + off] * b[k + off];
            }
            b[k] = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(rng: &mut ChaCha8Rng, n: usize, bw: usize, diag: f64) -> BandedSym<f64> {
        let mut m = BandedSym::zeros(n, bw);
        for i in 0..n {
            m.set(i, i, diag + rng.gen_range(-1.0..1.0));
            for j in i + 1..(i + bw + 1).min(n) {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn matvec_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_banded(&mut rng, 17, 4, 0.0);
        let x: Vec<f64> = (0..17).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = m.mul_vec(&x);
        let z = m.to_dense().mul_vec(&x);
        for (a, b) in y.iter().zip(&z) {
            assert!((a - b).abs() < 1e-13);
        }
        assert_eq!(m.get(0, 10), 0.0);
    }

    #[test]
    fn solve_recovers_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &(n, bw) in &[(1usize, 0usize), (5, 1), (30, 3), (40, 39), (50, 7)] {
            let m = random_banded(&mut rng, n, bw, 4.0 * bw as f64 + 3.0);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut b = m.mul_vec(&x);
            m.ldl().unwrap().solve(&mut b);
            for (a, c) in b.iter().zip(&x) {
                assert!((a - c).abs() < 1e-10, "n={n} bw={bw}");
            }
        }
    }

    #[test]
    fn indefinite_factorization_solves_too() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = random_banded(&mut rng, 25, 2, 0.0).shifted(-0.1234);
        if let Ok(f) = m.ldl() {
            let x: Vec<f64> = (0..25).map(|i| (i as f64).sin()).collect();
            let mut b = m.mul_vec(&x);
            f.solve(&mut b);
            let r: f64 = b.iter().zip(&x).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
            assert!(r < 1e-6);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut m = BandedSym::<f64>::zeros(2, 1);
        m.set(0, 1, 1.0);
        let err = m.ldl().unwrap_err();
        assert_eq!(err.index, 0);
        let f = m.ldl_unchecked();
        assert_eq!(f.pivots().len(), 2);
    }
}
