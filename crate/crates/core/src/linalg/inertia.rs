//! Eigenvalue sign counts by Sylvester's law of inertia.

use super::{eigenvalues_sym, BandedSym, SymMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of eigenvalues below, at, and above a shift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
}

impl Inertia {
    pub fn n(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }

    fn from_split(n: usize, n_minus: usize, n_plus: usize) -> Self {
        Inertia {
            n_minus,
            n_zero: n - n_minus - n_plus,
            n_plus,
        }
    }
}

/// Default zero tolerance: `1e-9 * ||A||_inf`.
pub fn default_zero_tol<T: Real>(a: &SymMatrix<T>) -> T {
    T::lit(1e-9) * a.norm_inf()
}

/// Inertia of `A - shift I`. Eigenvalues within `zero_tol` of `shift` are
/// counted as zero.
///
/// With `zero_tol > 0` two Bunch-Kaufman factorizations are made, at
/// `shift - zero_tol` and `shift + zero_tol`; with `zero_tol = 0` one.
/// Should a factorization produce non-finite pivots the count is taken from
/// the eigenvalues instead.
pub fn inertia<T: Real>(a: &SymMatrix<T>, shift: T, zero_tol: T) -> Result<Inertia> {
    if !a.is_finite() || !shift.is_finite() || !(zero_tol >= T::zero()) {
        return Err(Error::invalid("inertia needs finite entries, shift and zero_tol >= 0"));
    }
    let n = a.n();
    if zero_tol == T::zero() {
        if let Some(i) = bunch_kaufman(a.shifted(shift)) {
            return Ok(i);
        }
    } else if let (Some(lo), Some(hi)) = (
        bunch_kaufman(a.shifted(shift - zero_tol)),
        bunch_kaufman(a.shifted(shift + zero_tol)),
    ) {
        return Ok(Inertia::from_split(n, lo.n_minus, hi.n_plus));
    }
    let vals = eigenvalues_sym(a)?;
    let n_minus = vals.iter().filter(|&&v| v < shift - zero_tol).count();
    let n_plus = vals.iter().filter(|&&v| v > shift + zero_tol).count();
    Ok(Inertia::from_split(n, n_minus, n_plus))
}

// Symmetric indefinite factorization with Bunch-Kaufman partial pivoting,
// counting pivot signs only. Returns None on non-finite pivots.
fn bunch_kaufman<T: Real>(mut a: SymMatrix<T>) -> Option<Inertia> {
    let n = a.n();
    let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
    let (mut neg, mut zero, mut pos) = (0, 0, 0);
    let mut k = 0;
    while k < n {
        let akk = a.get(k, k).abs();
        let (r, colmax) = (k + 1..n)
            .map(|i| (i, a.get(i, k).abs()))
            .fold((k, T::zero()), |best, c| if c.1 > best.1 { c } else { best });
        if akk.max(colmax) == T::zero() {
            zero += 1;
            k += 1;
            continue;
        }
        let two_by_two = if akk >= alpha * colmax {
            false
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != r)
                .map(|j| a.get(r, j).abs())
                .fold(T::zero(), |m, v| m.max(v));
            if akk * rowmax >= alpha * colmax * colmax {
                false
            } else if a.get(r, r).abs() >= alpha * rowmax {
                swap_sym(&mut a, k, r);
                false
            } else {
                swap_sym(&mut a, k + 1, r);
                true
            }
        };

        if !two_by_two {
            let d = a.get(k, k);
            if !d.is_finite() {
                return None;
            }
            match d.partial_cmp(&T::zero()) {
                Some(std::cmp::Ordering::Less) => neg += 1,
                Some(std::cmp::Ordering::Greater) => pos += 1,
                _ => zero += 1,
            }
            if d != T::zero() {
                for i in k + 1..n {
                    let f = a.get(i, k) / d;
                    if f == T::zero() {
                        continue;
                    }
                    for j in i..n {
                        let v = a.get(j, k);
                        a.add(i, j, -f * v);
                    }
                }
            }
            k += 1;
        } else {
            let (p, q, s) = (a.get(k, k), a.get(k + 1, k + 1), a.get(k, k + 1));
            let det = p * q - s * s;
            if !det.is_finite() {
                return None;
            }
            if det < T::zero() {
                neg += 1;
                pos += 1;
            } else if det > T::zero() {
                if p + q > T::zero() {
                    pos += 2;
                } else {
                    neg += 2;
                }
            } else {
                zero += 1;
                if p + q > T::zero() {
                    pos += 1;
                } else if p + q < T::zero() {
                    neg += 1;
                } else {
                    zero += 1;
                }
            }
            if det != T::zero() {
                // Trailing update with D^{-1} = [[q, -s], [-s, p]] / det.
                for i in k + 2..n {
                    let (ai, bi) = (a.get(i, k), a.get(i, k + 1));
                    let wi = (q * ai - s * bi) / det;
                    let xi = (p * bi - s * ai) / det;
                    for j in i..n {
                        let (aj, bj) = (a.get(j, k), a.get(j, k + 1));
                        a.add(i, j, -(wi * aj + xi * bj));
                    }
                }
            }
            k += 2;
        }
    }
    Some(Inertia {
        n_minus: neg,
        n_zero: zero,
        n_plus: pos,
    })
}

fn swap_sym<T: Real>(a: &mut SymMatrix<T>, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.n();
    let (aii, ajj) = (a.get(i, i), a.get(j, j));
    for k in 0..n {
        if k != i && k != j {
            let t = a.get(i, k);
            a.set(i, k, a.get(j, k));
            a.set(j, k, t);
        }
    }
    a.set(i, i, ajj);
    a.set(j, j, aii);
}

/// Dense fallback order limit for [`banded_inertia`].
const DENSE_FALLBACK_MAX: usize = 4000;

/// Inertia of a banded `A - shift I` by unpivoted `L D L^T`.
///
/// A breakdown is retried with dense Bunch-Kaufman if the order allows, then
/// with a slightly nudged shift, and finally with a factorization that replaces exact
/// zero pivots; the call never aborts on numerical grounds.
pub fn banded_inertia<T: Real>(a: &BandedSym<T>, shift: T, zero_tol: T) -> Result<Inertia> {
    if !a.is_finite() || !shift.is_finite() || !(zero_tol >= T::zero()) {
        return Err(Error::invalid("inertia needs finite entries, shift and zero_tol >= 0"));
    }
    let n = a.n();
    if zero_tol == T::zero() {
        Ok(banded_count(a, shift, zero_tol))
    } else {
        let lo = banded_count(a, shift - zero_tol, zero_tol);
        let hi = banded_count(a, shift + zero_tol, zero_tol);
        Ok(Inertia::from_split(n, lo.n_minus, hi.n_plus))
    }
}

fn banded_count<T: Real>(a: &BandedSym<T>, shift: T, zero_tol: T) -> Inertia {
    let from_pivots = |f: super::BandedLdl<T>| {
        let (neg, zero, pos) = f.pivot_signs();
        Inertia {
            n_minus: neg,
            n_zero: zero,
            n_plus: pos,
        }
    };
    if let Ok(f) = a.shifted(shift).ldl() {
        return from_pivots(f);
    }
    if a.n() <= DENSE_FALLBACK_MAX {
        if let Ok(i) = inertia(&a.to_dense(), shift, T::zero()) {
            return i;
        }
    }
    let scale = a.norm_inf().max(T::one());
    let nudge = if zero_tol > T::zero() {
        zero_tol * T::lit(0.25)
    } else {
        T::lit(1e-12) * scale
    };
    for s in [shift - nudge, shift + nudge] {
        if let Ok(f) = a.shifted(s).ldl() {
            return from_pivots(f);
        }
    }
    from_pivots(a.shifted(shift - nudge).ldl_unchecked())
}
