//! Positive spectrum of the Birman-Schwinger operator `B_V`, computed by two
//! independent routes, and the duality `N_-(H_{alpha V}) = n_+(1/alpha, B_V)`.
//!
//! * Gram route: for finitely supported `V` the nonzero spectrum of `B_V` is
//!   that of `K_{xy} = sqrt(V(x) V(y)) h_0(x - y)` on the support, using the
//!   reproducing kernel of the `H^1` metric. No lattice truncation enters.
//! * Box route: the form `b_V` against the Dirichlet Laplacian of a box,
//!   i.e. `diag(V) u = lambda L u`, a lower approximation that increases with R.

use std::fmt;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::lattice::{BoxDomain, Potential};
use crate::linalg::{eigen_gen, eigenvalues_sym, SymMatrix};
use crate::operator::{laplacian, reduced_box_kernel, stabilized_count, CountRoute, DirichletGreen, DENSE_SPECTRUM_MAX};
use crate::report::{BoundReport, Verdict};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BsMethod {
    GramReduction,
    BoxTruncation,
    BoxExtrapolated,
}

impl fmt::Display for BsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BsMethod::GramReduction => "gram-reduction",
            BsMethod::BoxTruncation => "box-truncation",
            BsMethod::BoxExtrapolated => "box-extrapolated",
        })
    }
}

/// Positive eigenvalues of `B_V`, non-increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct BsSpectrum<T> {
    pub eigenvalues: Vec<T>,
    pub method: BsMethod,
    /// Grid size or radius description, e.g. `m=128` or `R=16`.
    pub resolution: String,
}

impl<T: Real> BsSpectrum<T> {
    fn from_values(values: Vec<T>, method: BsMethod, resolution: String) -> Self {
        let mut eigenvalues: Vec<T> = values.into_iter().filter(|&v| v > T::zero()).collect();
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        BsSpectrum {
            eigenvalues,
            method,
            resolution,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `n_+(s) = #{lambda_j > s}`.
    pub fn n_plus(&self, s: T) -> Result<usize> {
        n_plus(&self.eigenvalues, s)
    }

    /// `j,lambda,method,resolution`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,lambda,method,resolution\n");
        for (j, l) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(out, "{},{:e},{},{}", j + 1, l.to_f64_lossy(), self.method, self.resolution);
        }
        out
    }
}

/// Strict count of values above `s > 0`.
pub fn n_plus<T: Real>(values: &[T], s: T) -> Result<usize> {
    if !(s > T::zero()) {
        return Err(Error::invalid("n_plus needs s > 0"));
    }
    Ok(values.iter().filter(|&&v| v > s).count())
}

/// `K_{xy} = sqrt(V(x) V(y)) h_0(x - y)` on the support of `V`.
pub fn gram_kernel<T: Real>(v: &Potential<T>, green: &GreenTable<T>) -> Result<SymMatrix<T>> {
    if v.dim() != green.dim() {
        return Err(Error::DimensionMismatch {
            expected: green.dim(),
            found: v.dim(),
        });
    }
    let support = v.support();
    let sqrt_v: Vec<T> = v.values().into_iter().map(|x| x.sqrt()).collect();
    let mut k = SymMatrix::zeros(support.len());
    for a in 0..support.len() {
        for b in a..support.len() {
            let h = green.between(&support[a], &support[b])?;
            k.set(a, b, sqrt_v[a] * h * sqrt_v[b]);
        }
    }
    Ok(k)
}

pub fn bs_spectrum_gram<T: Real>(v: &Potential<T>, green: &GreenTable<T>) -> Result<BsSpectrum<T>> {
    let resolution = format!("m={}", green.grid());
    if v.is_empty() {
        return Ok(BsSpectrum::from_values(vec![], BsMethod::GramReduction, resolution));
    }
    let k = gram_kernel(v, green)?;
    Ok(BsSpectrum::from_values(
        eigenvalues_sym(&k)?,
        BsMethod::GramReduction,
        resolution,
    ))
}

/// Box route reduced onto the support: eigenvalues of `sqrt(V) G_S sqrt(V)`
/// with `G = L^{-1}` the Dirichlet Green function of the box.
pub fn bs_spectrum_box<T: Real>(v: &Potential<T>, domain: &BoxDomain) -> Result<BsSpectrum<T>> {
    let resolution = format!("R={}", domain.radius());
    if v.is_empty() {
        v.check_inside(domain)?;
        return Ok(BsSpectrum::from_values(vec![], BsMethod::BoxTruncation, resolution));
    }
    let k = reduced_box_kernel(&DirichletGreen::new(*domain), v)?;
    Ok(BsSpectrum::from_values(
        eigenvalues_sym(&k)?,
        BsMethod::BoxTruncation,
        resolution,
    ))
}

/// Box route on the full box: generalized eigenvalues of `diag(V)` against
/// the Dirichlet Laplacian. Limited to small boxes.
pub fn bs_spectrum_box_full<T: Real>(v: &Potential<T>, domain: &BoxDomain) -> Result<BsSpectrum<T>> {
    v.check_inside(domain)?;
    let n = domain.site_count();
    if n > DENSE_SPECTRUM_MAX {
        return Err(Error::MemoryBudget {
            required_bytes: (n * n * 16) as u64,
            limit_bytes: (DENSE_SPECTRUM_MAX * DENSE_SPECTRUM_MAX * 16) as u64,
        });
    }
    let l = laplacian::<T>(domain).to_dense();
    let mut diag = vec![T::zero(); n];
    for (x, val) in v.iter() {
        diag[domain.index_of(&x.0).expect("inside")] = val;
    }
    let e = eigen_gen(&SymMatrix::diagonal(&diag), &l, false)?;
    // Zero eigenvalues from sites off the support come out at rounding level.
    let cutoff = T::lit(1e-10) * v.max_value();
    let vals = e.values.into_iter().filter(|&x| x > cutoff).collect();
    Ok(BsSpectrum::from_values(
        vals,
        BsMethod::BoxTruncation,
        format!("R={}", domain.radius()),
    ))
}

/// Default radii for [`bs_spectrum_box_extrapolated`].
pub const EXTRAPOLATION_RADII: [i64; 5] = [16, 24, 32, 40, 48];

/// Box spectra at several radii, extrapolated per index to `R = infinity` by
/// polynomial interpolation in `1/(R+1)` (the box deficit is `O(1/R)` in d = 3).
pub fn bs_spectrum_box_extrapolated<T: Real>(v: &Potential<T>, radii: &[i64]) -> Result<BsSpectrum<T>> {
    if radii.len() < 2 {
        return Err(Error::invalid("extrapolation needs at least two radii"));
    }
    let resolution = format!(
        "R={}",
        radii.iter().map(|r| r.to_string()).collect::<Vec<_>>().join("+")
    );
    if v.is_empty() {
        return Ok(BsSpectrum::from_values(vec![], BsMethod::BoxExtrapolated, resolution));
    }
    let spectra = radii
        .iter()
        .map(|&r| bs_spectrum_box(v, &BoxDomain::new(v.dim(), r)?))
        .collect::<Result<Vec<_>>>()?;
    let count = spectra.iter().map(|s| s.len()).min().unwrap_or(0);
    let hs: Vec<f64> = radii.iter().map(|&r| 1.0 / (r + 1) as f64).collect();
    let values = (0..count)
        .map(|j| {
            let ys: Vec<f64> = spectra.iter().map(|s| s.eigenvalues[j].to_f64_lossy()).collect();
            T::lit(neville_at_zero(&hs, &ys))
        })
        .collect();
    Ok(BsSpectrum::from_values(values, BsMethod::BoxExtrapolated, resolution))
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)`.
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (xs[i + k] * p[i] - xs[i] * p[i + 1]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

/// Options for [`duality_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct DualityOptions {
    pub r0: i64,
    pub step: i64,
    pub r_max: i64,
    /// Couplings with `|1/alpha - lambda_j| < margin_tol * lambda_j` are skipped.
    pub margin_tol: f64,
    pub route: CountRoute,
}

impl Default for DualityOptions {
    fn default() -> Self {
        DualityOptions {
            r0: 16,
            step: 4,
            r_max: 64,
            margin_tol: 1e-6,
            route: CountRoute::Reduced,
        }
    }
}

/// Relative distance from `1/alpha` to the nearest eigenvalue.
pub fn threshold_gap(spectrum: &[f64], alpha: f64) -> f64 {
    let s = 1.0 / alpha;
    spectrum
        .iter()
        .map(|&l| (l - s).abs() / l)
        .fold(f64::INFINITY, f64::min)
}

/// `N_-(H_{alpha V})` (R-stabilized) against `n_+(1/alpha)` from the Gram
/// spectrum. Params per row: `alpha, stabilized_radius`; margin is the
/// absolute gap `min_j |lambda_j - 1/alpha|`.
pub fn duality_check<T: Real>(
    v: &Potential<T>,
    alphas: &[T],
    green: &GreenTable<T>,
    opts: &DualityOptions,
) -> Result<BoundReport> {
    let spec = bs_spectrum_gram(v, green)?;
    let lambdas: Vec<f64> = spec.eigenvalues.iter().map(|l| l.to_f64_lossy()).collect();
    let mut report = BoundReport::new("duality", &["alpha", "radius"]);
    for &alpha in alphas {
        if !(alpha > T::zero()) {
            return Err(Error::invalid("duality couplings must be positive"));
        }
        let a = alpha.to_f64_lossy();
        let right = spec.n_plus(T::one() / alpha)?;
        let gap = lambdas
            .iter()
            .map(|&l| (l - 1.0 / a).abs())
            .fold(f64::INFINITY, f64::min);
        let near = threshold_gap(&lambdas, a) < opts.margin_tol;
        let left = stabilized_count(alpha, v, opts.r0, opts.step, opts.r_max, opts.route)?;
        let verdict = if near {
            Verdict::Skip
        } else if left.stabilized && left.count == right {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let radius = *left.radii.last().expect("at least one radius") as f64;
        report.push(vec![a, radius], left.count as f64, right as f64, gap, verdict);
        if !left.stabilized {
            report.note(format!("alpha={a}: counts {:?} did not stabilize", left.counts));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{random_potential, LatticePoint};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const MU2: f64 = 0.25273100985585695;

    fn table() -> GreenTable<f64> {
        GreenTable::new(3, 64).unwrap()
    }

    fn delta0(c: f64) -> Potential<f64> {
        Potential::delta(LatticePoint::origin(3), c).unwrap()
    }

    #[test]
    fn rank_one_and_empty() {
        let g = table();
        let s = bs_spectrum_gram(&delta0(1.0), &g).unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.eigenvalues[0] - MU2).abs() < 1e-6);
        assert!(bs_spectrum_gram(&Potential::<f64>::new(3), &g).unwrap().is_empty());
        let b = BoxDomain::new(3, 3).unwrap();
        assert!(bs_spectrum_box(&Potential::<f64>::new(3), &b).unwrap().is_empty());
    }

    #[test]
    fn two_distant_sites() {
        let g = table();
        let l = 40;
        let mut v = delta0(1.0);
        v.insert(LatticePoint::new(vec![l, 0, 0]), 1.0).unwrap();
        let s = bs_spectrum_gram(&v, &g).unwrap();
        let mu2 = g.mu_squared().unwrap();
        let hl = g.get(&LatticePoint::new(vec![l, 0, 0])).unwrap();
        assert!((s.eigenvalues[0] - (mu2 + hl)).abs() < 1e-12);
        assert!((s.eigenvalues[1] - (mu2 - hl)).abs() < 1e-12);
    }

    #[test]
    fn n_plus_examples() {
        assert_eq!(n_plus(&[0.5, 0.2], 0.3).unwrap(), 1);
        assert_eq!(n_plus(&[0.5, 0.2], 0.6).unwrap(), 0);
        assert_eq!(n_plus(&[0.5, 0.2], 1e-12).unwrap(), 2);
        assert!(n_plus(&[0.5], 0.0).is_err());
    }

    #[test]
    fn box_spectrum_increases_toward_gram() {
        let v = delta0(1.0);
        let a = bs_spectrum_box(&v, &BoxDomain::new(3, 10).unwrap()).unwrap().eigenvalues[0];
        let b = bs_spectrum_box(&v, &BoxDomain::new(3, 14).unwrap()).unwrap().eigenvalues[0];
        assert!(a < b && b < MU2);
    }

    #[test]
    fn reduced_box_matches_full_generalized_problem() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v: Potential<f64> = random_potential(&mut rng, 3, 2, 4, 5.0).unwrap();
        let b = BoxDomain::new(3, 4).unwrap();
        let reduced = bs_spectrum_box(&v, &b).unwrap();
        let full = bs_spectrum_box_full(&v, &b).unwrap();
        assert_eq!(reduced.len(), full.len());
        for (x, y) in reduced.eigenvalues.iter().zip(&full.eigenvalues) {
            assert!((x - y).abs() < 1e-10 * y.max(1.0));
        }
    }

    #[test]
    fn extrapolated_box_agrees_with_gram() {
        let g = GreenTable::new(3, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..3 {
            let count = rng.gen_range(1..5);
            let v: Potential<f64> = random_potential(&mut rng, 3, 3, count, 5.0).unwrap();
            let gram = bs_spectrum_gram(&v, &g).unwrap();
            let bx = bs_spectrum_box_extrapolated(&v, &EXTRAPOLATION_RADII).unwrap();
            assert_eq!(gram.len(), bx.len());
            for (x, y) in gram.eigenvalues.iter().zip(&bx.eigenvalues) {
                assert!((x - y).abs() < 1e-3 * x, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn scaling_covariance_and_monotonicity() {
        let g = table();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v: Potential<f64> = random_potential(&mut rng, 3, 3, 6, 5.0).unwrap();
        let s1 = bs_spectrum_gram(&v, &g).unwrap();
        let s3 = bs_spectrum_gram(&v.scaled(3.0).unwrap(), &g).unwrap();
        for (a, b) in s1.eigenvalues.iter().zip(&s3.eigenvalues) {
            assert!((3.0 * a - b).abs() < 1e-12 * b);
        }
        let mut w = v.clone();
        for (x, val) in v.iter() {
            w.insert(x.clone(), val + rng.gen_range(0.0..1.0)).unwrap();
        }
        let sw = bs_spectrum_gram(&w, &g).unwrap();
        for (a, b) in s1.eigenvalues.iter().zip(&sw.eigenvalues) {
            assert!(a <= &(b + 1e-12));
        }
        assert!(s1.len() <= v.len());
    }

    #[test]
    fn duality_single_site() {
        let g = table();
        let r = duality_check(&delta0(1.0), &[5.0, 3.0, 0.01], &g, &DualityOptions::default()).unwrap();
        let lhs: Vec<f64> = r.rows.iter().map(|row| row.lhs).collect();
        assert_eq!(lhs, vec![1.0, 0.0, 0.0]);
        assert!(r.passed());
        assert_eq!(r.skipped(), 0);
    }

    #[test]
    fn duality_skips_exact_threshold() {
        let g = table();
        let a = 1.0 / g.mu_squared().unwrap();
        let r = duality_check(&delta0(1.0), &[a], &g, &DualityOptions::default()).unwrap();
        assert_eq!(r.rows[0].verdict, Verdict::Skip);
    }

    #[test]
    fn neville_reproduces_polynomials() {
        let xs = [0.1, 0.2, 0.3, 0.5];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - x + 3.0 * x * x - x * x * x).collect();
        assert!((neville_at_zero(&xs, &ys) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn csv_dump() {
        let g = table();
        let s = bs_spectrum_gram(&delta0(1.0), &g).unwrap();
        let csv = s.to_csv();
        assert!(csv.starts_with("j,lambda,method,resolution\n1,"));
        assert!(csv.trim_end().ends_with("gram-reduction,m=64"));
    }
}
