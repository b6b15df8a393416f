//! Sharpness example: test functions whose Fourier transforms are indicators
//! of small boxes near the origin, and their Rayleigh quotients against the
//! weight `|x|^{-2} (log|x|)^{-1/q}`.
//!
//! `u_n(x) = (2 pi)^{-d/2} e^{3 i h x_1} prod_j 2 sin(h x_j) / x_j`, `h = 4^{-n}`,
//! truncated to the cube `|x|_inf <= R_n = R_mult / h`. Every quadratic form
//! factorizes over coordinates except the weighted sum, which runs over the
//! hyperoctahedral fundamental domain.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_INDEX: u32 = 4;
pub const DEFAULT_R_MULT: f64 = 8.0;

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction52 {
    pub n: u32,
    pub h: f64,
    pub dim: usize,
    pub q: f64,
    pub r_mult: f64,
    pub radius: i64,
}

pub fn build_test_function(n: u32, dim: usize, q: f64, r_mult: f64) -> Result<TestFunction52> {
    if dim < 3 {
        return Err(Error::domain(format!("the example needs d >= 3, got {dim}")));
    }
    if !(2.0 * q > dim as f64) {
        return Err(Error::domain(format!("the example needs 2q > d, got q = {q}")));
    }
    if n == 0 || n > MAX_INDEX {
        return Err(Error::invalid(format!("n must be in 1..={MAX_INDEX}")));
    }
    if !(r_mult > 0.0) || !r_mult.is_finite() {
        return Err(Error::invalid("R_mult must be positive"));
    }
    let h = 4f64.powi(-(n as i32));
    Ok(TestFunction52 {
        n,
        h,
        dim,
        q,
        r_mult,
        radius: (r_mult / h).round() as i64,
    })
}

/// `2 sin(h t) / t`, with value `2h` at `t = 0`.
pub fn sinc_factor(h: f64, t: i64) -> f64 {
    if t == 0 {
        2.0 * h
    } else {
        2.0 * (h * t as f64).sin() / t as f64
    }
}

/// `|x|^{-2} (log|x|)^{-1/q}` for `|x| > 1`, zero otherwise.
fn weight_from_r2(r2: f64, q: f64) -> f64 {
    if r2 <= 1.0 {
        0.0
    } else {
        (0.5 * r2.ln()).powf(-1.0 / q) / r2
    }
}

impl TestFunction52 {
    fn phase_freq(&self, axis: usize) -> f64 {
        if axis == 0 {
            3.0 * self.h
        } else {
            0.0
        }
    }

    /// One-dimensional factor along `axis` (zero outside the cube).
    fn factor(&self, axis: usize, t: i64) -> Complex64 {
        if t.abs() > self.radius {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(sinc_factor(self.h, t), self.phase_freq(axis) * t as f64)
    }

    pub fn value(&self, x: &[i64]) -> Result<Complex64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let norm = (2.0 * PI).powf(-(self.dim as f64) / 2.0);
        Ok(x.iter()
            .enumerate()
            .fold(Complex64::new(norm, 0.0), |acc, (a, &t)| acc * self.factor(a, t)))
    }

    pub fn site_count(&self) -> u128 {
        (2 * self.radius as u128 + 1).pow(self.dim as u32)
    }

    /// All values on the cube in lexicographic order, refused above the budget.
    pub fn materialize(&self, budget_bytes: u64) -> Result<Vec<Complex64>> {
        let bytes = self.site_count() * std::mem::size_of::<Complex64>() as u128;
        if bytes > budget_bytes as u128 {
            return Err(Error::MemoryBudget {
                required_bytes: bytes.min(u64::MAX as u128) as u64,
                limit_bytes: budget_bytes,
            });
        }
        let side = 2 * self.radius + 1;
        let mut out = Vec::with_capacity(self.site_count() as usize);
        let mut x = vec![-self.radius; self.dim];
        for _ in 0..self.site_count() {
            out.push(self.value(&x)?);
            for a in (0..self.dim).rev() {
                x[a] += 1;
                if x[a] - -self.radius < side {
                    break;
                }
                x[a] = -self.radius;
            }
        }
        Ok(out)
    }

    /// `Q_0` of the untruncated function: `sum_j (4h - 4 cos c_j sin h) (2h)^{d-1}`.
    pub fn q0_exact(&self) -> f64 {
        let h = self.h;
        (0..self.dim)
            .map(|a| (4.0 * h - 4.0 * self.phase_freq(a).cos() * h.sin()) * (2.0 * h).powi(self.dim as i32 - 1))
            .sum()
    }

    /// `int over the Fourier box of omega(z) = 4 sum sin^2(z_j/2)` by a
    /// product midpoint rule with `nodes` points per axis.
    pub fn q0_fourier(&self, nodes: usize) -> f64 {
        let h = self.h;
        let w = 2.0 * h / nodes as f64;
        (0..self.dim)
            .map(|a| {
                let c = self.phase_freq(a);
                let line: f64 = (0..nodes)
                    .map(|k| {
                        let z = c - h + (k as f64 + 0.5) * w;
                        4.0 * (0.5 * z).sin().powi(2) * w
                    })
                    .sum();
                line * (2.0 * h).powi(self.dim as i32 - 1)
            })
            .sum()
    }

    /// `sum_x |u(x)|^2` over the cube.
    pub fn norm_sq_truncated(&self) -> f64 {
        let norm = (2.0 * PI).powi(-(self.dim as i32));
        (0..self.dim).map(|a| line_inner(self, self, a).re).product::<f64>() * norm
    }

    /// `Q_0` of the truncated function by direct differencing.
    pub fn q0_truncated(&self) -> f64 {
        h1_inner(self, self).map_or(f64::NAN, |z| z.re)
    }

    /// `b_V[u] = sum V |u|^2` over the cube, summed over the fundamental
    /// domain `x_1 >= ... >= x_d >= 0` with orbit multiplicities.
    pub fn b_v(&self) -> f64 {
        let r = self.radius as usize;
        let f2: Vec<f64> = (0..=r).map(|t| sinc_factor(self.h, t as i64).powi(2)).collect();
        let fact: f64 = (1..=self.dim).map(|k| k as f64).product();
        let mut total = 0.0;
        fundamental_sum(
            &f2,
            self.q,
            self.dim,
            r,
            State {
                run: 0,
                denom: 1.0,
                nonzero: 0,
                r2: 0.0,
                prod: 1.0,
            },
            &mut total,
        );
        total * fact * (2.0 * PI).powi(-(self.dim as i32))
    }

    /// Upper bound for the part of `b_V[u]` outside the cube:
    /// `sup V * sum_outside |u|^2 <= R^{-2} (log R)^{-1/q} d (2h)^{d-1} 8 / (2 pi R)`.
    pub fn b_v_tail_bound(&self) -> f64 {
        let r = self.radius as f64;
        let sup_v = weight_from_r2(r * r, self.q);
        let line_tail = 8.0 / r;
        sup_v * self.dim as f64 * (2.0 * self.h).powi(self.dim as i32 - 1) * line_tail / (2.0 * PI)
    }
}

struct State {
    run: usize,
    denom: f64,
    nonzero: i32,
    r2: f64,
    prod: f64,
}

fn fundamental_sum(f2: &[f64], q: f64, left: usize, max: usize, s: State, total: &mut f64) {
    if left == 0 {
        let mult = 2f64.powi(s.nonzero) / s.denom;
        *total += mult * s.prod * weight_from_r2(s.r2, q);
        return;
    }
    for t in 0..=max {
        let run = if t == max && s.run > 0 { s.run + 1 } else { 1 };
        let denom = if run > 1 { s.denom * run as f64 } else { s.denom };
        let tf = t as f64;
        fundamental_sum(
            f2,
            q,
            left - 1,
            t,
            State {
                run,
                denom,
                nonzero: s.nonzero + (t > 0) as i32,
                r2: s.r2 + tf * tf,
                prod: s.prod * f2[t],
            },
            total,
        );
    }
}

/// `sum_t g_a(t) conj(g_b(t))` along `axis`.
fn line_inner(a: &TestFunction52, b: &TestFunction52, axis: usize) -> Complex64 {
    let r = a.radius.max(b.radius);
    (-r..=r).map(|t| a.factor(axis, t) * b.factor(axis, t).conj()).sum()
}

/// `sum_t (g_a(t+1) - g_a(t)) conj(g_b(t+1) - g_b(t))` along `axis`.
fn line_diff_inner(a: &TestFunction52, b: &TestFunction52, axis: usize) -> Complex64 {
    let r = a.radius.max(b.radius);
    (-r - 1..=r)
        .map(|t| (a.factor(axis, t + 1) - a.factor(axis, t)) * (b.factor(axis, t + 1) - b.factor(axis, t)).conj())
        .sum()
}

/// `(u_a, u_b)_{H^1} = sum_j sum_x D_j u_a conj(D_j u_b)` for the truncated functions.
pub fn h1_inner(a: &TestFunction52, b: &TestFunction52) -> Result<Complex64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let d = a.dim;
    let s: Vec<Complex64> = (0..d).map(|k| line_inner(a, b, k)).collect();
    let norm = (2.0 * PI).powi(-(d as i32));
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..d {
        let mut term = line_diff_inner(a, b, j);
        for (k, sk) in s.iter().enumerate() {
            if k != j {
                term *= sk;
            }
        }
        total += term;
    }
    Ok(total * norm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RhoRow {
    pub n: u32,
    pub radius: i64,
    pub b_v: f64,
    pub q0: f64,
    pub rho: f64,
    /// `n^{1/q} rho_n`.
    pub scaled: f64,
    /// `rho_n` with the truncation multiplier doubled.
    pub rho_doubled: f64,
    pub tail_bound: f64,
}

impl RhoRow {
    pub fn truncation_change(&self) -> f64 {
        (self.rho_doubled - self.rho).abs() / self.rho
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example52Report {
    pub dim: usize,
    pub q: f64,
    pub rows: Vec<RhoRow>,
    /// `(n, m, |(u_n, u_m)| / (||u_n|| ||u_m||))`.
    pub cross: Vec<(u32, u32, f64)>,
}

impl Example52Report {
    pub fn min_scaled(&self) -> f64 {
        self.rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min)
    }

    pub fn max_over_min(&self) -> f64 {
        let max = self.rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
        max / self.min_scaled()
    }

    pub fn max_truncation_change(&self) -> f64 {
        self.rows.iter().map(|r| r.truncation_change()).fold(0.0, f64::max)
    }

    /// `n,radius,b_v,q0,rho,scaled,rho_doubled,truncation_change,tail_bound`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,radius,b_v,q0,rho,scaled,rho_doubled,truncation_change,tail_bound\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.n,
                r.radius,
                r.b_v,
                r.q0,
                r.rho,
                r.scaled,
                r.rho_doubled,
                r.truncation_change(),
                r.tail_bound
            ));
        }
        out
    }
}

// The function itself is not truncated, so Q_0 is exact; only the weighted
// sum is cut at the cube, with `b_v_tail_bound` covering the remainder.
fn rho(f: &TestFunction52) -> (f64, f64, f64) {
    let b = f.b_v();
    let q0 = f.q0_exact();
    (b, q0, b / q0)
}

/// `rho_n = b_V[u_n] / Q_0[u_n]` for `n = 1..n_max`, at `r_mult` and `2 r_mult`,
/// with normalized cross inner products of consecutive functions.
pub fn rayleigh_lower_check(q: f64, n_max: u32, dim: usize, r_mult: f64) -> Result<Example52Report> {
    let mut rows = Vec::new();
    let mut funcs = Vec::new();
    for n in 1..=n_max {
        let f = build_test_function(n, dim, q, r_mult)?;
        let g = build_test_function(n, dim, q, 2.0 * r_mult)?;
        let (b, q0, r) = rho(&f);
        rows.push(RhoRow {
            n,
            radius: f.radius,
            b_v: b,
            q0,
            rho: r,
            scaled: (n as f64).powf(1.0 / q) * r,
            rho_doubled: rho(&g).2,
            tail_bound: f.b_v_tail_bound() / q0,
        });
        funcs.push(f);
    }
    let mut cross = Vec::new();
    for w in funcs.windows(2) {
        let ip = h1_inner(&w[0], &w[1])?.norm();
        let norm = (w[0].q0_truncated() * w[1].q0_truncated()).sqrt();
        cross.push((w[0].n, w[1].n, ip / norm));
    }
    Ok(Example52Report { dim, q, rows, cross })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(n: u32) -> TestFunction52 {
        build_test_function(n, 3, 2.0, 4.0).unwrap()
    }

    #[test]
    fn value_at_origin_and_symmetry() {
        let u = f(1);
        let v = u.value(&[0, 0, 0]).unwrap();
        let expect = (2.0 * PI).powf(-1.5) * (2.0 * u.h).powi(3);
        assert!((v.re - expect).abs() < 1e-16 && v.im == 0.0);
        for x in [[3, -2, 5], [1, 0, 0], [7, 7, -1]] {
            let m = [-x[0], -x[1], -x[2]];
            assert!((u.value(&x).unwrap().norm() - u.value(&m).unwrap().norm()).abs() < 1e-16);
        }
    }

    #[test]
    fn preconditions() {
        assert!(matches!(build_test_function(1, 2, 2.0, 8.0), Err(Error::TheoryDomain(_))));
        assert!(matches!(build_test_function(1, 3, 1.5, 8.0), Err(Error::TheoryDomain(_))));
        assert!(build_test_function(5, 3, 2.0, 8.0).is_err());
        let big = build_test_function(4, 3, 2.0, 8.0).unwrap();
        assert!(matches!(big.materialize(1 << 20), Err(Error::MemoryBudget { .. })));
    }

    // Oracle: brute-force sums over the materialized cube.
    #[test]
    fn factorized_forms_match_brute_force() {
        let u = build_test_function(1, 3, 2.0, 2.0).unwrap();
        let vals = u.materialize(1 << 26).unwrap();
        let r = u.radius;
        let side = (2 * r + 1) as usize;
        let idx = |x: [i64; 3]| -> Option<usize> {
            if x.iter().any(|c| c.abs() > r) {
                return None;
            }
            let k = |c: i64| (c + r) as usize;
            Some((k(x[0]) * side + k(x[1])) * side + k(x[2]))
        };
        let (mut q0, mut b, mut nrm) = (0.0, 0.0, 0.0);
        for a in -r - 1..=r {
            for bb in -r - 1..=r {
                for c in -r - 1..=r {
                    let x = [a, bb, c];
                    let ux = idx(x).map_or(Complex64::new(0.0, 0.0), |i| vals[i]);
                    if let Some(i) = idx(x) {
                        b += weight_from_r2((a * a + bb * bb + c * c) as f64, 2.0) * vals[i].norm_sqr();
                        nrm += vals[i].norm_sqr();
                    }
                    for j in 0..3 {
                        let mut y = x;
                        y[j] += 1;
                        let uy = idx(y).map_or(Complex64::new(0.0, 0.0), |i| vals[i]);
                        q0 += (uy - ux).norm_sqr();
                    }
                }
            }
        }
        assert!((u.q0_truncated() - q0).abs() < 1e-12 * q0);
        assert!((u.b_v() - b).abs() < 1e-12 * b);
        assert!((u.norm_sq_truncated() - nrm).abs() < 1e-12 * nrm);
    }

    #[test]
    fn q0_lattice_vs_fourier() {
        let fourier = f(1).q0_fourier(4096);
        assert!((fourier - f(1).q0_exact()).abs() < 1e-6 * fourier);
        // Truncation error decays like 1/R; R = 1024 here.
        let u = build_test_function(1, 3, 2.0, 256.0).unwrap();
        assert!((u.q0_truncated() - fourier).abs() < 1e-2 * fourier);
    }

    #[test]
    fn sinc_square_sum_identity() {
        let h = 0.25;
        let s: f64 = (-20000i64..=20000).map(|t| sinc_factor(h, t).powi(2)).sum();
        assert!((s - 4.0 * PI * h).abs() < 1e-3);
    }

    #[test]
    fn near_orthogonality() {
        let ip = h1_inner(&f(1), &f(2)).unwrap().norm();
        let norm = (f(1).q0_truncated() * f(2).q0_truncated()).sqrt();
        assert!(ip / norm < 0.05);
    }

    #[test]
    fn rho_trend_small() {
        let r = rayleigh_lower_check(2.0, 2, 3, 8.0).unwrap();
        assert!(r.min_scaled() > 0.0 && r.max_over_min() < 3.0);
        assert!(r.max_truncation_change() < 1e-2);
        assert!(r.rows.iter().all(|row| row.tail_bound < 1e-2 * row.rho));
        assert!(r.cross[0].2 < 0.05);
    }
}
