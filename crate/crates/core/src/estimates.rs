//! Weak-l_q quasi-norms and numerical checks of the eigenvalue estimates:
//! the CLC bound and its o-trend, the weak-Schatten upper bound, the
//! constant-free lower bound, the weighted functional bound for `q > d/2`,
//! and the `limsup / liminf` spectral functionals.

use crate::birman_schwinger::{bs_spectrum_gram, n_plus};
use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::lattice::{sorted_non_increasing, Potential};
use crate::report::{BoundReport, Verdict};
use crate::scalar::Real;

/// Weak-l_q data of a finite non-negative sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakNormReport {
    pub q: f64,
    /// `sup_j j^{1/q} V_j*`.
    pub quasi_norm: f64,
    /// Distinct values `s` with `nu(s-0) = #{V >= s}`, descending in `s`.
    pub breakpoints: Vec<(f64, usize)>,
    /// Same quantity from the staircase `sup_s s nu(s-0)^{1/q}`.
    pub staircase_norm: f64,
    /// `sup_{j > n/2} j^{1/q} V_j*` divided by the quasi-norm; small values
    /// suggest membership in the separable subclass.
    pub tail_ratio: f64,
}

impl WeakNormReport {
    pub fn in_weak_class(&self) -> bool {
        self.quasi_norm.is_finite()
    }

    /// Empirical flag for the o-class: the tail ratio is below one half.
    pub fn looks_separable(&self) -> bool {
        self.tail_ratio < 0.5
    }
}

pub fn weak_norm<T: Real>(values: &[T], q: f64) -> Result<WeakNormReport> {
    if !(q > 0.0) {
        return Err(Error::invalid("q must be positive"));
    }
    if values.iter().any(|v| !(*v >= T::zero()) || !v.is_finite()) {
        return Err(Error::invalid("values must be finite and non-negative"));
    }
    let sorted: Vec<f64> = sorted_non_increasing(values.to_vec())
        .into_iter()
        .map(|v| v.to_f64_lossy())
        .filter(|&v| v > 0.0)
        .collect();
    let term = |j: usize, v: f64| (j as f64).powf(1.0 / q) * v;
    let quasi_norm = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| term(i + 1, v))
        .fold(0.0, f64::max);
    let mut breakpoints = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if sorted.get(i + 1) != Some(&v) {
            breakpoints.push((v, i + 1));
        }
    }
    let staircase_norm = breakpoints.iter().map(|&(s, n)| term(n, s)).fold(0.0, f64::max);
    let half = sorted.len() / 2;
    let tail = sorted
        .iter()
        .enumerate()
        .skip(half)
        .map(|(i, &v)| term(i + 1, v))
        .fold(0.0, f64::max);
    Ok(WeakNormReport {
        q,
        quasi_norm,
        breakpoints,
        staircase_norm,
        tail_ratio: if quasi_norm > 0.0 { tail / quasi_norm } else { 0.0 },
    })
}

/// `sup_j j^{1/q} lambda_j`: the weak-Schatten quasi-norm over the available j.
pub fn sigma_quasi_norm<T: Real>(eigenvalues: &[T], q: f64) -> Result<f64> {
    Ok(weak_norm(eigenvalues, q)?.quasi_norm)
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 3 {
        return Err(Error::domain(format!("the estimates need d >= 3, got {dim}")));
    }
    Ok(())
}

fn eigen_f64<T: Real>(v: &Potential<T>, green: &GreenTable<T>) -> Result<Vec<f64>> {
    Ok(bs_spectrum_gram(v, green)?
        .eigenvalues
        .iter()
        .map(|x| x.to_f64_lossy())
        .collect())
}

/// `N_-(H_{alpha V})` for each alpha through the Gram spectrum and duality.
pub fn counts_via_gram<T: Real>(v: &Potential<T>, alphas: &[f64], green: &GreenTable<T>) -> Result<Vec<usize>> {
    let spec = eigen_f64(v, green)?;
    alphas
        .iter()
        .map(|&a| {
            if !(a > 0.0) {
                return Err(Error::invalid("coupling constants must be positive"));
            }
            n_plus(&spec, 1.0 / a)
        })
        .collect()
}

/// Trend of `N_-(alpha) / alpha^{d/2}` over an increasing coupling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ClcTrend {
    pub alphas: Vec<f64>,
    pub counts: Vec<usize>,
    pub ratios: Vec<f64>,
    /// Index from which the ratio never increases again.
    pub non_increasing_from: usize,
    /// Last ratio divided by the largest one (0 if all vanish).
    pub last_over_max: f64,
}

impl ClcTrend {
    /// Non-increasing on at least the final two grid points and after the
    /// count reached its plateau.
    pub fn eventually_non_increasing(&self) -> bool {
        let n = self.ratios.len();
        let plateau_from = self
            .counts
            .iter()
            .position(|&c| Some(&c) == self.counts.last())
            .unwrap_or(0);
        n >= 2 && self.non_increasing_from <= plateau_from.min(n - 2)
    }
}

/// `N_- <= C alpha^{d/2} sum V^{d/2}`, with `C` fitted as the supremum of the
/// ratio over the grid, plus the o-trend of `N_- / alpha^{d/2}`.
pub fn clc_bound_check<T: Real>(
    v: &Potential<T>,
    alphas: &[f64],
    green: &GreenTable<T>,
) -> Result<(BoundReport, ClcTrend)> {
    let d = v.dim();
    check_dim(d)?;
    let half_d = d as f64 / 2.0;
    let mass = v.power_sum(T::lit(half_d)).to_f64_lossy();
    let counts = counts_via_gram(v, alphas, green)?;
    let mut report = BoundReport::new("clc", &["alpha"]);
    let rhs: Vec<f64> = alphas.iter().map(|a| a.powf(half_d) * mass).collect();
    let fitted = counts
        .iter()
        .zip(&rhs)
        .filter(|(_, &r)| r > 0.0)
        .map(|(&c, &r)| c as f64 / r)
        .fold(0.0, f64::max);
    for ((&a, &c), &r) in alphas.iter().zip(&counts).zip(&rhs) {
        report.push_le(vec![a], c as f64, fitted * r, 1e-12 * fitted * r);
    }
    report.fitted_constant = Some(fitted);
    if mass == 0.0 {
        report.note("sum V^{d/2} = 0: trivial");
    }
    let ratios: Vec<f64> = alphas.iter().zip(&counts).map(|(a, &c)| c as f64 / a.powf(half_d)).collect();
    let mut from = ratios.len().saturating_sub(1);
    while from > 0 && ratios[from - 1] >= ratios[from] {
        from -= 1;
    }
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let trend = ClcTrend {
        alphas: alphas.to_vec(),
        last_over_max: if max > 0.0 { ratios.last().copied().unwrap_or(0.0) / max } else { 0.0 },
        counts,
        ratios,
        non_increasing_from: from,
    };
    Ok((report, trend))
}

/// `n_+(s, B_V) >= 2^{-d} nu(2 s d, V)` for every `s`, with zero tolerance.
pub fn thm32_lower_check<T: Real>(v: &Potential<T>, s_grid: &[f64], green: &GreenTable<T>) -> Result<BoundReport> {
    let d = v.dim();
    check_dim(d)?;
    let spec = eigen_f64(v, green)?;
    let values: Vec<f64> = v.values().iter().map(|x| x.to_f64_lossy()).collect();
    let mut report = BoundReport::new("thm32", &["s"]);
    let scale = 0.5f64.powi(d as i32);
    for &s in s_grid {
        if !(s > 0.0) {
            return Err(Error::invalid("s must be positive"));
        }
        let nu = values.iter().filter(|&&x| x > 2.0 * s * d as f64).count();
        let rhs = n_plus(&spec, s)? as f64;
        report.push_le(vec![s], scale * nu as f64, rhs, 0.0);
    }
    Ok(report)
}

/// One row of the weak-Schatten comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thm31Row {
    pub sigma_norm: f64,
    pub weak_norm: f64,
    pub ratio: f64,
}

pub fn thm31_ratio<T: Real>(v: &Potential<T>, q: f64, green: &GreenTable<T>) -> Result<Thm31Row> {
    let d = v.dim();
    check_dim(d)?;
    if !(q > 0.0 && q < d as f64 / 2.0) {
        return Err(Error::domain(format!("the weak-Schatten bound needs 0 < q < d/2, got q = {q}")));
    }
    let sigma_norm = sigma_quasi_norm(&eigen_f64(v, green)?, q)?;
    let weak = weak_norm(&v.values(), q)?.quasi_norm;
    Ok(Thm31Row {
        sigma_norm,
        weak_norm: weak,
        ratio: if weak > 0.0 { sigma_norm / weak } else { 0.0 },
    })
}

/// Two-sided check `lo <= ||B_V||_{Sigma_q} / ||V||_{l_{q,w}} <= hi` over a
/// family of potentials. Rows have `side` 0 for the upper and 1 for the lower
/// inequality; the fitted constant is the largest ratio.
pub fn thm31_upper_check<T: Real>(
    family: &[Potential<T>],
    q: f64,
    band: (f64, f64),
    green: &GreenTable<T>,
) -> Result<BoundReport> {
    let mut report = BoundReport::new("thm31", &["index", "side"]);
    let mut fitted: f64 = 0.0;
    for (i, v) in family.iter().enumerate() {
        let row = thm31_ratio(v, q, green)?;
        fitted = fitted.max(row.ratio);
        report.push_le(vec![i as f64, 0.0], row.ratio, band.1, 0.0);
        report.push_le(vec![i as f64, 1.0], band.0, row.ratio, 0.0);
    }
    report.fitted_constant = Some(fitted);
    Ok(report)
}

/// Value of `sup_t t^q sum_{(|x|^2+1) V(x) > t} (|x|^2+1)^{-d/2}` for a
/// finite potential, with an optional analytic tail allowance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cor53Functional {
    pub truncated: f64,
    /// Upper bound for the contribution of the discarded region, if known.
    pub tail_bound: Option<f64>,
}

impl Cor53Functional {
    /// Upper estimate of the untruncated functional (infinite without a tail bound).
    pub fn upper(&self) -> f64 {
        self.tail_bound.map_or(f64::INFINITY, |t| self.truncated + t)
    }
}

/// The supremum is attained just below one of the values `(|x|^2+1) V(x)`,
/// since the sum is a right-continuous step function of `t`.
pub fn cor53_functional<T: Real>(v: &Potential<T>, q: f64) -> Result<f64> {
    let d = v.dim() as i32;
    let mut pts: Vec<(f64, f64)> = v
        .iter()
        .filter(|(_, val)| *val > T::zero())
        .map(|(x, val)| {
            let r = x.norm_sq() as f64 + 1.0;
            (r * val.to_f64_lossy(), r.powf(-(d as f64) / 2.0))
        })
        .collect();
    pts.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best: f64 = 0.0;
    let mut acc = 0.0;
    for (i, &(w, rho)) in pts.iter().enumerate() {
        acc += rho;
        if pts.get(i + 1).is_none_or(|n| n.0 < w) {
            best = best.max(w.powf(q) * acc);
        }
    }
    if !best.is_finite() {
        return Err(Error::invalid("functional diverges"));
    }
    Ok(best)
}

/// Tail allowance for `V(x) = |x|^{-2} (log|x|)^{-1/q}` in d=3 restricted
/// to `|x| > radius`, from comparing the lattice sum with
/// `int 4 pi r^2 (r - a)^{-3} dr`, `a = sqrt(3)/2`.
pub fn logpow_tail_bound(q: f64, radius: f64) -> Result<f64> {
    let a = 3f64.sqrt() / 2.0;
    if !(radius > 2.0 * a + 1.0) || !(q > 1.5) {
        return Err(Error::invalid("tail bound needs radius > 1 + sqrt 3 and q > 3/2"));
    }
    let c = (1.0 + radius.powi(-2)).powf(q);
    let u0 = radius - 2.0 * a;
    let k = -u0.ln() + 2.0 * a / u0 + a * a / (2.0 * u0 * u0);
    let t_max_q = c / radius.ln();
    Ok(4.0 * std::f64::consts::PI * (c + (t_max_q * k).max(0.0)))
}

/// `N_- <= C alpha^q F(V)` for `q > d/2`; `v` is the potential whose negative
/// eigenvalues are counted (a restriction of the one defining `functional`
/// gives a lower proxy for the left side). `C` is fitted.
pub fn cor53_bound<T: Real>(
    v: &Potential<T>,
    functional: &Cor53Functional,
    q: f64,
    alphas: &[f64],
    green: &GreenTable<T>,
) -> Result<BoundReport> {
    let d = v.dim();
    check_dim(d)?;
    if !(2.0 * q > d as f64) {
        return Err(Error::domain(format!("the weighted bound needs 2q > d, got q = {q}")));
    }
    let f = functional.upper();
    let mut report = BoundReport::new("cor53", &["alpha"]);
    if !f.is_finite() {
        report.note("functional not certified finite: membership unverified");
    }
    let counts = counts_via_gram(v, alphas, green)?;
    let rhs: Vec<f64> = alphas.iter().map(|a| a.powf(q) * f).collect();
    let fitted = counts
        .iter()
        .zip(&rhs)
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(&c, r)| c as f64 / r)
        .fold(0.0, f64::max);
    for ((&a, &c), &r) in alphas.iter().zip(&counts).zip(&rhs) {
        if r.is_finite() {
            report.push_le(vec![a], c as f64, fitted * r, 1e-12 * fitted * r);
        } else {
            report.push(vec![a], c as f64, r, r, Verdict::Skip);
        }
    }
    report.fitted_constant = Some(fitted);
    report.note(format!(
        "functional {:.6e} (truncated {:.6e}, tail {})",
        f,
        functional.truncated,
        functional.tail_bound.map_or("unbounded".into(), |t| format!("{t:.6e}"))
    ));
    Ok(report)
}

/// Finite-sample estimates of `limsup` and `liminf` of `s^q n_+(s)` as
/// `s -> 0`, taken over the window `[s_lo, 10 s_lo]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SigmaEstimates {
    pub upper: f64,
    pub lower: f64,
    pub window: (f64, f64),
}

/// `s_lo` defaults to the smallest eigenvalue. On each gap between
/// breakpoints `s^q n_+(s)` increases, so extremes sit at breakpoint limits.
pub fn sigma_functionals<T: Real>(eigenvalues: &[T], q: f64, s_lo: Option<f64>) -> Result<SigmaEstimates> {
    if !(q > 0.0) {
        return Err(Error::invalid("q must be positive"));
    }
    let lam: Vec<f64> = sorted_non_increasing(eigenvalues.to_vec())
        .into_iter()
        .map(|x| x.to_f64_lossy())
        .filter(|&x| x > 0.0)
        .collect();
    if lam.is_empty() {
        return Err(Error::invalid("spectrum is empty"));
    }
    let lo = s_lo.unwrap_or(*lam.last().expect("non-empty"));
    if !(lo > 0.0) {
        return Err(Error::invalid("window start must be positive"));
    }
    let hi = 10.0 * lo;
    let count_gt = |s: f64| lam.iter().filter(|&&x| x > s).count() as f64;
    let count_ge = |s: f64| lam.iter().filter(|&&x| x >= s).count() as f64;
    let mut upper = hi.powf(q) * count_gt(hi);
    let mut lower = lo.powf(q) * count_gt(lo);
    for &x in lam.iter().filter(|&&x| x > lo && x <= hi) {
        upper = upper.max(x.powf(q) * count_ge(x));
        lower = lower.min(x.powf(q) * count_gt(x));
    }
    Ok(SigmaEstimates {
        upper,
        lower,
        window: (lo, hi),
    })
}
