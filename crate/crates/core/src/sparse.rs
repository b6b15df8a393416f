//! Sparse point sets, their normalized Green Gram matrices, and spectra of
//! potentials carried by them.

use std::fmt;

use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::hardy::hardy_lower_bound;
use crate::lattice::{BoxDomain, LatticePoint, Potential, WeightFamily};
use crate::linalg::{eigenvalues_sym, SymMatrix};
use crate::report::BoundReport;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pattern {
    /// Points `r e_1`.
    Ray,
    /// Points `(c, ..., c)` with `c = round(r / sqrt d)`.
    Diagonal,
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pattern::Ray => "ray",
            Pattern::Diagonal => "diagonal",
        })
    }
}

impl std::str::FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ray" => Ok(Pattern::Ray),
            "diagonal" => Ok(Pattern::Diagonal),
            _ => Err(Error::Parse(format!("unknown pattern '{s}' (ray | diagonal)"))),
        }
    }
}

/// A finite point set with its separation data.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSet {
    pub dim: usize,
    pub points: Vec<LatticePoint>,
    /// Euclidean distance to the nearest other point (`+inf` for a singleton).
    pub r: Vec<f64>,
    /// `[y] = #{x in Y : |x| <= |y|}`, counting `y` itself.
    pub rank: Vec<usize>,
    /// `sum_y r_y^{-(d-2)}`.
    pub a_sum: f64,
    /// `sup_y [y] r_y^{-(d-2)}`.
    pub a_sup: f64,
    /// Collision fixes applied by the generator.
    pub adjustments: Vec<String>,
}

impl SparseSet {
    pub fn from_points(points: Vec<LatticePoint>) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.dim());
        if dim < 3 {
            return Err(Error::domain("sparse sets need d >= 3 and at least one point"));
        }
        if points.iter().any(|p| p.dim() != dim) {
            return Err(Error::invalid("points have mixed dimensions"));
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(Error::invalid(format!("duplicate point {p:?}")));
            }
        }
        let r: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                points
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, q)| p.sub(q).euclidean_norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let rank: Vec<usize> = points
            .iter()
            .map(|p| points.iter().filter(|q| q.norm_sq() <= p.norm_sq()).count())
            .collect();
        let e = dim as i32 - 2;
        let a_sum = r.iter().map(|x| x.powi(-e)).sum();
        let a_sup = r
            .iter()
            .zip(&rank)
            .map(|(x, &k)| k as f64 * x.powi(-e))
            .fold(0.0, f64::max);
        Ok(SparseSet {
            dim,
            points,
            r,
            rank,
            a_sum,
            a_sup,
            adjustments: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether `a_sum <= target`, with the margin `target - a_sum`.
    pub fn meets_target(&self, target: f64) -> (bool, f64) {
        (self.a_sum <= target, target - self.a_sum)
    }

    /// `y,x1..xd,r_y,rank` rows.
    pub fn to_csv(&self) -> String {
        let coords: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        let mut out = format!("j,{},r_y,rank\n", coords.join(","));
        for (j, p) in self.points.iter().enumerate() {
            let xs: Vec<String> = p.0.iter().map(|c| c.to_string()).collect();
            out.push_str(&format!("{},{},{:e},{}\n", j + 1, xs.join(","), self.r[j], self.rank[j]));
        }
        out
    }
}

/// `n` points at radii `round(gamma^j)`, `j = 1..n`. A radius that rounds
/// onto its predecessor is pushed one step out and recorded.
pub fn generate_sparse_set(dim: usize, n: usize, gamma: f64, pattern: Pattern) -> Result<SparseSet> {
    if dim < 3 {
        return Err(Error::domain(format!("sparse sets need d >= 3, got {dim}")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::invalid("growth ratio must exceed 1"));
    }
    let scale = match pattern {
        Pattern::Ray => 1.0,
        Pattern::Diagonal => (dim as f64).sqrt(),
    };
    let mut coords: Vec<i64> = Vec::with_capacity(n);
    let mut adjustments = Vec::new();
    for j in 1..=n {
        let target = gamma.powi(j as i32) / scale;
        if !(target < 1e15) {
            return Err(Error::invalid("radii overflow the lattice coordinate range"));
        }
        let mut c = (target.round() as i64).max(1);
        if let Some(&prev) = coords.last() {
            if c <= prev {
                adjustments.push(format!("j={j}: coordinate {c} collided, moved to {}", prev + 1));
                c = prev + 1;
            }
        }
        coords.push(c);
    }
    let points = coords
        .iter()
        .map(|&c| match pattern {
            Pattern::Ray => LatticePoint::on_axis(dim, 0, c),
            Pattern::Diagonal => LatticePoint::new(vec![c; dim]),
        })
        .collect();
    let mut set = SparseSet::from_points(points)?;
    set.adjustments = adjustments;
    Ok(set)
}

/// `G_{xy} = h_0(x - y) / mu^2` and its distance from the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct GramDiagnostics<T> {
    pub g: SymMatrix<T>,
    /// Largest off-diagonal absolute row sum (Schur test bound).
    pub delta_schur: f64,
    /// `||G - I||_2`.
    pub delta_spec: f64,
    /// Frobenius bound on the perturbation of `G` from quadrature errors.
    pub delta_error: f64,
}

impl<T> GramDiagnostics<T> {
    pub fn is_sparse(&self) -> bool {
        self.delta_spec < 1.0
    }
}

pub fn gram_diagnostics<T: Real>(set: &SparseSet, green: &GreenTable<T>) -> Result<GramDiagnostics<T>> {
    if green.dim() != set.dim {
        return Err(Error::DimensionMismatch {
            expected: set.dim,
            found: green.dim(),
        });
    }
    let n = set.len();
    let mu2 = green.entry(&LatticePoint::origin(set.dim))?;
    let mut g = SymMatrix::identity(n);
    let mut err_sq = 0.0;
    let mut rows = vec![0.0; n];
    for a in 0..n {
        for b in a + 1..n {
            let e = green.entry(&set.points[a].sub(&set.points[b]))?;
            let val = e.value / mu2.value;
            g.set(a, b, T::lit(val));
            rows[a] += val.abs();
            rows[b] += val.abs();
            err_sq += 2.0 * (e.error.unwrap_or(0.0) / mu2.value).powi(2);
        }
    }
    let mut off = g.clone();
    for i in 0..n {
        off.set(i, i, T::zero());
    }
    let ev = eigenvalues_sym(&off)?;
    let delta_spec = ev
        .iter()
        .map(|x| x.abs().to_f64_lossy())
        .fold(0.0, f64::max);
    Ok(GramDiagnostics {
        g,
        delta_schur: rows.into_iter().fold(0.0, f64::max),
        delta_spec,
        delta_error: err_sq.sqrt(),
    })
}

/// Spectrum of a potential carried by a sparse set against its values.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseComparison {
    /// Values `p_j` (non-increasing).
    pub values: Vec<f64>,
    /// Sorted eigenvalues of `D^{1/2} G D^{1/2}`.
    pub normalized: Vec<f64>,
    /// `mu^2` times `normalized`: the Birman-Schwinger eigenvalues.
    pub lambda: Vec<f64>,
    pub mu_squared: f64,
    pub delta: f64,
}

impl SparseComparison {
    /// `max_j |lambda_j / (mu^2 p_j) - 1|`.
    pub fn deviation(&self) -> f64 {
        self.normalized
            .iter()
            .zip(&self.values)
            .map(|(l, p)| (l / p - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `(1 - delta) p_j <= normalized_j <= (1 + delta) p_j` for every `j`.
    /// Rows carry `side` 0 for the lower and 1 for the upper inequality.
    pub fn sandwich_report(&self, rel_tol: f64) -> BoundReport {
        let mut rep = BoundReport::new("sparse-sandwich", &["j", "side"]);
        for (j, (&l, &p)) in self.normalized.iter().zip(&self.values).enumerate() {
            let tol = rel_tol * p;
            rep.push_le(vec![(j + 1) as f64, 0.0], (1.0 - self.delta) * p, l, tol);
            rep.push_le(vec![(j + 1) as f64, 1.0], l, (1.0 + self.delta) * p, tol);
        }
        rep.note(format!("delta = {:.6e}", self.delta));
        rep
    }

    /// `j,p,lambda,lambda_over_p,lambda_over_mu2p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,p,lambda,lambda_over_p,lambda_over_mu2p\n");
        for (j, ((&p, &l), &nl)) in self.values.iter().zip(&self.lambda).zip(&self.normalized).enumerate() {
            out.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", j + 1, p, l, l / p, nl / p));
        }
        out
    }
}

/// Assigns `values[j]` to `set.points[j]`; values must be positive and
/// non-increasing.
pub fn sparse_spectrum_vs_values<T: Real>(
    set: &SparseSet,
    values: &[f64],
    green: &GreenTable<T>,
) -> Result<SparseComparison> {
    if values.len() != set.len() {
        return Err(Error::DimensionMismatch {
            expected: set.len(),
            found: values.len(),
        });
    }
    if values.iter().any(|&v| !(v > 0.0)) || values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("values must be positive and non-increasing"));
    }
    let diag = gram_diagnostics(set, green)?;
    let sq: Vec<f64> = values.iter().map(|v| v.sqrt()).collect();
    let m = SymMatrix::<f64>::from_fn(set.len(), |a, b| {
        sq[a] * diag.g.get(a, b).to_f64_lossy() * sq[b]
    });
    let mut normalized = eigenvalues_sym(&m)?;
    normalized.reverse();
    let mu2 = green.mu_squared()?.to_f64_lossy();
    Ok(SparseComparison {
        values: values.to_vec(),
        lambda: normalized.iter().map(|x| mu2 * x).collect(),
        normalized,
        mu_squared: mu2,
        delta: diag.delta_spec,
    })
}

/// A moderately varying value sequence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ValueLaw {
    /// `p_j = j^{-q}`.
    Power { q: f64 },
    /// `p_j = (1 + log j)^{-1}`.
    Log,
}

impl ValueLaw {
    pub fn value(&self, j: usize) -> f64 {
        let j = j as f64;
        match *self {
            ValueLaw::Power { q } => j.powf(-q),
            ValueLaw::Log => 1.0 / (1.0 + j.ln()),
        }
    }

    pub fn values(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|j| self.value(j)).collect()
    }

    /// `p_{j+1} / p_j` for `j = 1..n`; moderate variation means this tends
    /// to one, checked here as a monotone increase.
    pub fn ratio_trend(&self, n: usize) -> (Vec<f64>, bool) {
        let r: Vec<f64> = (1..=n).map(|j| self.value(j + 1) / self.value(j)).collect();
        let monotone = r.windows(2).all(|w| w[1] >= w[0]) && r.iter().all(|&x| x <= 1.0);
        (r, monotone)
    }

    pub fn name(&self) -> String {
        match self {
            ValueLaw::Power { q } => format!("power(q={q})"),
            ValueLaw::Log => "log".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Thm68Row {
    pub n: usize,
    pub gamma: f64,
    pub delta_spec: f64,
    pub deviation: f64,
}

/// Deviation `max_j |lambda_j / (mu^2 p_j) - 1|` over a grid of sizes and
/// growth ratios; sparser sets should give smaller deviations.
pub fn thm68_experiment<T: Real>(
    dim: usize,
    n_list: &[usize],
    gamma_list: &[f64],
    law: ValueLaw,
    pattern: Pattern,
    green: &GreenTable<T>,
) -> Result<Vec<Thm68Row>> {
    let mut rows = Vec::new();
    for &n in n_list {
        for &gamma in gamma_list {
            let set = generate_sparse_set(dim, n, gamma, pattern)?;
            let cmp = sparse_spectrum_vs_values(&set, &law.values(n), green)?;
            rows.push(Thm68Row {
                n,
                gamma,
                delta_spec: cmp.delta,
                deviation: cmp.deviation(),
            });
        }
    }
    Ok(rows)
}

pub fn thm68_csv(rows: &[Thm68Row]) -> String {
    let mut out = String::from("n,gamma,delta_spec,deviation\n");
    for r in rows {
        out.push_str(&format!("{},{},{:e},{:e}\n", r.n, r.gamma, r.delta_spec, r.deviation));
    }
    out
}

/// Both sides of the bounded-potential criterion on a sparse set:
/// `lambda_1 <= mu^2 (1 + delta) max V` from the Gram spectrum and
/// `mu^2 (1 - delta) max V <= H_R(V)` from the box Hardy bound at `radius`.
pub fn bounded_criterion_check<T: Real>(
    set: &SparseSet,
    values: &[f64],
    green: &GreenTable<T>,
    radius: i64,
) -> Result<BoundReport> {
    let cmp = sparse_spectrum_vs_values(set, values, green)?;
    let vmax = values[0];
    let mu2 = cmp.mu_squared;
    let domain = BoxDomain::new(set.dim, radius)?;
    let v = Potential::from_entries(
        set.dim,
        set.points.iter().cloned().zip(values.iter().map(|&x| T::lit(x))),
    )?;
    v.check_inside(&domain)?;
    let hardy = hardy_lower_bound(&WeightFamily::Custom(v), set.dim, &[radius])?.lower_bounds[0];
    let mut rep = BoundReport::new("sparse-bounded", &["side"]);
    let tol = 1e-9 * mu2 * vmax;
    rep.push_le(vec![0.0], cmp.lambda[0], mu2 * (1.0 + cmp.delta) * vmax, tol);
    rep.push_le(vec![1.0], mu2 * (1.0 - cmp.delta) * vmax, hardy, tol);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birman_schwinger::bs_spectrum_gram;

    fn green3() -> GreenTable<f64> {
        GreenTable::new(3, 64).unwrap()
    }

    #[test]
    fn singleton_set() {
        let s = generate_sparse_set(3, 1, 4.0, Pattern::Ray).unwrap();
        assert_eq!(s.r, vec![f64::INFINITY]);
        assert_eq!((s.a_sum, s.a_sup), (0.0, 0.0));
        let d = gram_diagnostics(&s, &green3()).unwrap();
        assert_eq!((d.delta_schur, d.delta_spec), (0.0, 0.0));
        let c = sparse_spectrum_vs_values(&s, &[2.0], &green3()).unwrap();
        assert!((c.lambda[0] - 2.0 * c.mu_squared).abs() < 1e-14);
        assert!(c.deviation() < 1e-15);
    }

    #[test]
    fn six_point_ray_arithmetic() {
        let s = generate_sparse_set(3, 6, 4.0, Pattern::Ray).unwrap();
        let radii: Vec<i64> = s.points.iter().map(|p| p.0[0]).collect();
        assert_eq!(radii, vec![4, 16, 64, 256, 1024, 4096]);
        assert_eq!(s.r, vec![12.0, 12.0, 48.0, 192.0, 768.0, 3072.0]);
        assert_eq!(s.rank, vec![1, 2, 3, 4, 5, 6]);
        let expect: f64 = s.r.iter().map(|r| 1.0 / r).sum();
        assert!((s.a_sum - expect).abs() < 1e-15 && s.a_sum < 0.34);
        assert!(s.adjustments.is_empty());
    }

    #[test]
    fn collisions_and_monotone_a_sum() {
        let s = generate_sparse_set(3, 6, 1.1, Pattern::Ray).unwrap();
        assert!(!s.adjustments.is_empty());
        let tight = generate_sparse_set(3, 6, 2.0, Pattern::Ray).unwrap();
        let loose = generate_sparse_set(3, 6, 4.0, Pattern::Ray).unwrap();
        assert!(tight.a_sum > loose.a_sum);
        assert!(!s.meets_target(0.1).0);
        assert!(generate_sparse_set(3, 3, 1.0, Pattern::Ray).is_err());
        assert!(matches!(generate_sparse_set(2, 3, 4.0, Pattern::Ray), Err(Error::TheoryDomain(_))));
    }

    #[test]
    fn two_points_closed_form() {
        let g = GreenTable::<f64>::with_default_grid(3).unwrap();
        let s = SparseSet::from_points(vec![LatticePoint::origin(3), LatticePoint::on_axis(3, 0, 10)]).unwrap();
        let d = gram_diagnostics(&s, &g).unwrap();
        let gv = 0.007978261913260487 / 0.25273100985585695;
        assert!((d.delta_spec - gv).abs() < 1e-6);
        assert!((d.delta_spec - gv).abs() <= d.delta_error + 1e-8);
        assert!((d.delta_schur - d.delta_spec).abs() < 1e-14);
        let c = sparse_spectrum_vs_values(&s, &[1.0, 1.0], &g).unwrap();
        assert!((c.normalized[0] - (1.0 + d.delta_spec)).abs() < 1e-12);
        assert!((c.normalized[1] - (1.0 - d.delta_spec)).abs() < 1e-12);
    }

    #[test]
    fn six_point_sandwich_and_gram_agreement() {
        let g = green3();
        let s = generate_sparse_set(3, 6, 4.0, Pattern::Ray).unwrap();
        let diag = gram_diagnostics(&s, &g).unwrap();
        assert!(diag.delta_spec < 0.05 && diag.delta_spec <= diag.delta_schur);
        let p = ValueLaw::Power { q: 1.0 }.values(6);
        let c = sparse_spectrum_vs_values(&s, &p, &g).unwrap();
        assert!(c.sandwich_report(1e-12).passed());
        let v = Potential::from_entries(3, s.points.iter().cloned().zip(p.iter().copied())).unwrap();
        let bs = bs_spectrum_gram(&v, &g).unwrap();
        for (a, b) in bs.eigenvalues.iter().zip(&c.lambda) {
            assert!((a - b).abs() < 1e-12 * a.max(1e-3));
        }
    }

    #[test]
    fn relabeling_invariance() {
        let g = green3();
        let s = generate_sparse_set(3, 4, 3.0, Pattern::Diagonal).unwrap();
        let mut rev = s.points.clone();
        rev.reverse();
        let r = SparseSet::from_points(rev).unwrap();
        let a = gram_diagnostics(&s, &g).unwrap();
        let b = gram_diagnostics(&r, &g).unwrap();
        assert!((a.delta_spec - b.delta_spec).abs() < 1e-14);
    }

    #[test]
    fn gamma_trend_for_both_laws() {
        let g = green3();
        for law in [ValueLaw::Power { q: 1.0 }, ValueLaw::Log] {
            let rows = thm68_experiment(3, &[6], &[4.0, 8.0], law, Pattern::Ray, &g).unwrap();
            assert!(rows[1].deviation < rows[0].deviation, "{law:?}");
        }
        let rows = thm68_experiment(3, &[8], &[6.0], ValueLaw::Log, Pattern::Ray, &g).unwrap();
        assert!(rows[0].deviation < rows[0].delta_spec);
        assert!(ValueLaw::Log.ratio_trend(20).1);
        assert!(ValueLaw::Power { q: 1.0 }.ratio_trend(20).1);
    }
}
