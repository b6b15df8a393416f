//! Truncated Laplacian, the Hamiltonian `-Delta - alpha V`, the form `Q_0`,
//! and negative-eigenvalue counts.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::lattice::{BoxDomain, LatticePoint, Potential};
use crate::linalg::{banded_inertia, eigenvalues_sym, inertia, BandedSym, SymMatrix};
use crate::scalar::Real;

/// Largest order for which dense spectra of box operators are formed.
pub const DENSE_SPECTRUM_MAX: usize = 3000;

/// Dirichlet Laplacian of the box: `2d` on the diagonal, `-1` between
/// nearest neighbors inside the box.
pub fn laplacian<T: Real>(domain: &BoxDomain) -> BandedSym<T> {
    let n = domain.site_count();
    let mut m = BandedSym::zeros(n, domain.bandwidth());
    let two_d = T::from_count(2 * domain.dim());
    for i in 0..n {
        m.set(i, i, two_d);
        for axis in 0..domain.dim() {
            if let Some(j) = domain.neighbor(i, axis, true) {
                m.set(i, j, -T::one());
            }
        }
    }
    m
}

/// `H = -Delta - alpha V` restricted to a box with Dirichlet truncation.
#[derive(Clone, Debug)]
pub struct Hamiltonian<T> {
    pub domain: BoxDomain,
    pub alpha: T,
    pub potential: Potential<T>,
    pub matrix: BandedSym<T>,
}

impl<T: Real> Hamiltonian<T> {
    /// Dense copy; refused beyond [`DENSE_SPECTRUM_MAX`] sites.
    pub fn dense(&self) -> Result<SymMatrix<T>> {
        check_dense_budget(self.matrix.n())?;
        Ok(self.matrix.to_dense())
    }

    /// Full spectrum, non-decreasing.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        eigenvalues_sym(&self.dense()?)
    }

    /// Count of eigenvalues below `-zero_tol`.
    pub fn count_negative(&self, zero_tol: T) -> Result<usize> {
        Ok(banded_inertia(&self.matrix, T::zero(), zero_tol)?.n_minus)
    }
}

fn check_dense_budget(n: usize) -> Result<()> {
    if n > DENSE_SPECTRUM_MAX {
        let bytes = |k: usize| (k * k * 8 * 2) as u64;
        return Err(Error::MemoryBudget {
            required_bytes: bytes(n),
            limit_bytes: bytes(DENSE_SPECTRUM_MAX),
        });
    }
    Ok(())
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha >= T::zero()) || !alpha.is_finite() {
        return Err(Error::invalid("coupling alpha must be finite and nonnegative"));
    }
    Ok(())
}

fn check_dim<T: Real>(domain: &BoxDomain, v: &Potential<T>) -> Result<()> {
    if v.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: v.dim(),
        });
    }
    Ok(())
}

pub fn assemble_hamiltonian<T: Real>(
    domain: &BoxDomain,
    alpha: T,
    v: &Potential<T>,
) -> Result<Hamiltonian<T>> {
    check_alpha(alpha)?;
    check_dim(domain, v)?;
    v.check_inside(domain)?;
    let mut matrix = laplacian(domain);
    for (x, val) in v.iter() {
        let i = domain.index_of(&x.0).expect("support checked");
        matrix.add(i, i, -alpha * val);
    }
    Ok(Hamiltonian {
        domain: *domain,
        alpha,
        potential: v.clone(),
        matrix,
    })
}

/// Default strictness tolerance for negative counts: `1e-9 * ||H||_inf`.
pub fn default_count_tol<T: Real>(h: &Hamiltonian<T>) -> T {
    T::lit(1e-9) * h.matrix.norm_inf()
}

/// `N_-` of the box Hamiltonian via banded `L D L^T` inertia at shift 0.
pub fn count_negative<T: Real>(domain: &BoxDomain, alpha: T, v: &Potential<T>) -> Result<usize> {
    let h = assemble_hamiltonian(domain, alpha, v)?;
    h.count_negative(default_count_tol(&h))
}

/// `Q_0[u] = sum_x sum_j |u(x + 1_j) - u(x)|^2` for real `u` extended by zero.
pub fn q0_form<T: Real>(domain: &BoxDomain, u: &[T]) -> Result<T> {
    q0_generic(domain, u, |a, b| (a - b) * (a - b), T::zero())
}

/// Complex-valued variant of [`q0_form`].
pub fn q0_form_complex<T: Real>(domain: &BoxDomain, u: &[Complex<T>]) -> Result<T> {
    q0_generic(domain, u, |a, b| (a - b).norm_sqr(), Complex::new(T::zero(), T::zero()))
}

fn q0_generic<T: Real, U: Copy>(
    domain: &BoxDomain,
    u: &[U],
    diff_sq: impl Fn(U, U) -> T,
    zero: U,
) -> Result<T> {
    if u.len() != domain.site_count() {
        return Err(Error::DimensionMismatch {
            expected: domain.site_count(),
            found: u.len(),
        });
    }
    let mut total = T::zero();
    for (i, &ui) in u.iter().enumerate() {
        for axis in 0..domain.dim() {
            let fwd = domain.neighbor(i, axis, true).map_or(zero, |j| u[j]);
            total += diff_sq(fwd, ui);
            if domain.neighbor(i, axis, false).is_none() {
                total += diff_sq(ui, zero);
            }
        }
    }
    Ok(total)
}

/// Green function of the box Dirichlet Laplacian, `(L^{-1})_{xy}`, by the
/// separable sine eigenbasis.
#[derive(Clone, Debug)]
pub struct DirichletGreen {
    domain: BoxDomain,
    // modes[k][i] = sqrt(2/(N+1)) sin(pi (k+1)(i+1)/(N+1))
    modes: Vec<Vec<f64>>,
    eig: Vec<f64>,
}

impl DirichletGreen {
    pub fn new(domain: BoxDomain) -> Self {
        let side = domain.side();
        let h = std::f64::consts::PI / (side + 1) as f64;
        let norm = (2.0 / (side + 1) as f64).sqrt();
        let modes = (0..side)
            .map(|k| {
                (0..side)
                    .map(|i| norm * (h * ((k + 1) * (i + 1)) as f64).sin())
                    .collect()
            })
            .collect();
        let eig = (0..side)
            .map(|k| 2.0 - 2.0 * (h * (k + 1) as f64).cos())
            .collect();
        DirichletGreen { domain, modes, eig }
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// `(L^{-1})_{xy}`; both points must lie in the box.
    pub fn value(&self, x: &[i64], y: &[i64]) -> f64 {
        assert!(self.domain.contains(x) && self.domain.contains(y));
        let r = self.domain.radius();
        let side = self.domain.side();
        let factors: Vec<Vec<f64>> = x
            .iter()
            .zip(y)
            .map(|(&a, &b)| {
                let (ia, ib) = ((a + r) as usize, (b + r) as usize);
                (0..side).map(|k| self.modes[k][ia] * self.modes[k][ib]).collect()
            })
            .collect();
        self.mode_sum(&factors, 0, 1.0, 0.0)
    }

    fn mode_sum(&self, factors: &[Vec<f64>], axis: usize, prod: f64, lam: f64) -> f64 {
        let f = &factors[axis];
        if axis + 1 == factors.len() {
            return f
                .iter()
                .zip(&self.eig)
                .map(|(&a, &e)| a / (lam + e))
                .sum::<f64>()
                * prod;
        }
        let mut s = 0.0;
        for (k, &a) in f.iter().enumerate() {
            if a != 0.0 {
                s += self.mode_sum(factors, axis + 1, prod * a, lam + self.eig[k]);
            }
        }
        s
    }

    /// `G_S = (L^{-1})_{SS}` for the listed points.
    pub fn restricted<T: Real>(&self, points: &[LatticePoint]) -> SymMatrix<T> {
        SymMatrix::from_fn(points.len(), |a, b| {
            T::lit(self.value(&points[a].0, &points[b].0))
        })
    }
}

/// `sqrt(V) G_S sqrt(V)` on the support `S` of `v` inside `domain`: the
/// nonzero part of the box Birman-Schwinger operator.
pub fn reduced_box_kernel<T: Real>(green: &DirichletGreen, v: &Potential<T>) -> Result<SymMatrix<T>> {
    check_dim(green.domain(), v)?;
    v.check_inside(green.domain())?;
    let support = v.support();
    let sqrt_v: Vec<T> = v.values().into_iter().map(|x| x.sqrt()).collect();
    let g: SymMatrix<T> = green.restricted(&support);
    Ok(SymMatrix::from_fn(support.len(), |a, b| {
        sqrt_v[a] * g.get(a, b) * sqrt_v[b]
    }))
}

/// `N_-(H_{alpha V})` on the box by block elimination onto the support of `V`.
///
/// With `L` positive definite, `N_-(L - alpha V) = N_-(G_S^{-1} - alpha V_S)`,
/// which equals the number of eigenvalues of `sqrt(V) G_S sqrt(V)` above
/// `1/alpha`. Exact for any box; cost depends on `#supp V`, not on `N`.
pub fn count_negative_reduced<T: Real>(green: &DirichletGreen, alpha: T, v: &Potential<T>) -> Result<usize> {
    check_alpha(alpha)?;
    if alpha == T::zero() || v.is_empty() {
        check_dim(green.domain(), v)?;
        return Ok(0);
    }
    let k = reduced_box_kernel(green, v)?;
    let tol = T::lit(1e-12) * k.norm_inf();
    Ok(inertia(&k, T::one() / alpha, tol)?.n_plus)
}

/// How a single-radius count is produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountRoute {
    /// Banded inertia of the assembled Hamiltonian.
    Banded,
    /// Support-reduced block elimination.
    Reduced,
}

/// Counts over radii `r0, r0 + step, ...` until three consecutive agree.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizedCount {
    pub count: usize,
    pub radii: Vec<i64>,
    pub counts: Vec<usize>,
    pub stabilized: bool,
}

pub fn stabilized_count<T: Real>(
    alpha: T,
    v: &Potential<T>,
    r0: i64,
    step: i64,
    r_max: i64,
    route: CountRoute,
) -> Result<StabilizedCount> {
    if step <= 0 || r0 < 0 || r_max < r0 {
        return Err(Error::invalid("need r0 >= 0, step > 0, r_max >= r0"));
    }
    let r0 = r0.max(v.support_radius());
    let mut radii = Vec::new();
    let mut counts = Vec::new();
    let mut r = r0;
    while r <= r_max.max(r0) {
        let domain = BoxDomain::new(v.dim(), r)?;
        let c = match route {
            CountRoute::Banded => count_negative(&domain, alpha, v)?,
            CountRoute::Reduced => count_negative_reduced(&DirichletGreen::new(domain), alpha, v)?,
        };
        radii.push(r);
        counts.push(c);
        let k = counts.len();
        if k >= 3 && counts[k - 1] == counts[k - 2] && counts[k - 2] == counts[k - 3] {
            return Ok(StabilizedCount {
                count: c,
                radii,
                counts,
                stabilized: true,
            });
        }
        r += step;
    }
    Ok(StabilizedCount {
        count: *counts.last().expect("at least one radius"),
        radii,
        counts,
        stabilized: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::random_potential;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn delta0(d: usize, c: f64) -> Potential<f64> {
        Potential::delta(LatticePoint::origin(d), c).unwrap()
    }

    #[test]
    fn assembly_examples() {
        let b = BoxDomain::new(3, 0).unwrap();
        let h = assemble_hamiltonian(&b, 0.0, &Potential::new(3)).unwrap();
        assert_eq!(h.dense().unwrap().get(0, 0), 6.0);
        let h = assemble_hamiltonian(&b, 5.0, &delta0(3, 1.0)).unwrap();
        assert_eq!(h.dense().unwrap().get(0, 0), 1.0);

        let b = BoxDomain::new(1, 1).unwrap();
        let h = assemble_hamiltonian(&b, 0.0, &Potential::new(1)).unwrap();
        let expect = SymMatrix::from_rows(&[
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ])
        .unwrap();
        assert_eq!(h.dense().unwrap(), expect);
    }

    #[test]
    fn support_outside_box_is_named() {
        let b = BoxDomain::new(2, 1).unwrap();
        let v = Potential::delta(LatticePoint::new(vec![0, 2]), 1.0).unwrap();
        match assemble_hamiltonian(&b, 1.0, &v) {
            Err(Error::SupportOverflow { point, radius }) => {
                assert_eq!(point, vec![0, 2]);
                assert_eq!(radius, 1);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(assemble_hamiltonian(&b, -1.0, &Potential::new(2)).is_err());
    }

    #[test]
    fn off_diagonal_pattern_is_nearest_neighbor() {
        let b = BoxDomain::new(2, 2).unwrap();
        let m = laplacian::<f64>(&b).to_dense();
        for i in 0..b.site_count() {
            for j in 0..b.site_count() {
                let d: i64 = b
                    .coords_of(i)
                    .iter()
                    .zip(b.coords_of(j))
                    .map(|(a, c)| (a - c).abs())
                    .sum();
                let expect = match d {
                    0 => 4.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert_eq!(m.get(i, j), expect);
            }
        }
    }

    #[test]
    fn q0_examples() {
        let b = BoxDomain::new(3, 2).unwrap();
        let mut u = vec![0.0; b.site_count()];
        u[b.index_of(&[1, 0, -1]).unwrap()] = 1.0;
        assert_eq!(q0_form(&b, &u).unwrap(), 6.0);

        let b1 = BoxDomain::new(1, 1).unwrap();
        assert_eq!(q0_form(&b1, &[1.0, 1.0, 1.0]).unwrap(), 2.0);

        let c: Vec<Complex<f64>> = u.iter().map(|&x| Complex::new(0.0, x)).collect();
        assert_eq!(q0_form_complex(&b, &c).unwrap(), 6.0);
    }

    #[test]
    fn q0_equals_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = BoxDomain::new(2, 2).unwrap();
        let l = laplacian::<f64>(&b);
        for _ in 0..10 {
            let u: Vec<f64> = (0..b.site_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let direct = q0_form(&b, &u).unwrap();
            let matrix: f64 = l.mul_vec(&u).iter().zip(&u).map(|(a, c)| a * c).sum();
            assert!((direct - matrix).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_spectrum_in_open_band() {
        // The symbol 4 sum sin^2(z_j / 2) ranges over [0, 4d].
        let b = BoxDomain::new(2, 3).unwrap();
        let h = assemble_hamiltonian(&b, 0.0, &Potential::new(2)).unwrap();
        let e = h.eigenvalues().unwrap();
        assert!(e[0] > 0.0 && *e.last().unwrap() < 8.0);
        assert!(*e.last().unwrap() > 4.0);
        assert_eq!(count_negative(&b, 0.0, &Potential::new(2)).unwrap(), 0);
    }

    #[test]
    fn single_site_counts_at_r12() {
        let b = BoxDomain::new(3, 12).unwrap();
        assert_eq!(count_negative(&b, 5.0, &delta0(3, 1.0)).unwrap(), 1);
        assert_eq!(count_negative(&b, 3.0, &delta0(3, 1.0)).unwrap(), 0);
    }

    #[test]
    fn dirichlet_green_inverts_laplacian() {
        let b = BoxDomain::new(3, 2).unwrap();
        let g = DirichletGreen::new(b);
        let l = laplacian::<f64>(&b);
        let y = [1i64, -2, 0];
        let col: Vec<f64> = (0..b.site_count()).map(|i| g.value(&b.coords_of(i), &y)).collect();
        let lg = l.mul_vec(&col);
        let yi = b.index_of(&y).unwrap();
        for (i, v) in lg.iter().enumerate() {
            let expect = if i == yi { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12);
        }
    }

    // Oracle: banded inertia of the full Hamiltonian and the dense eigenvalue count.
    #[test]
    fn reduced_count_matches_full_factorization() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..12 {
            let count = rng.gen_range(1..6);
            let v: Potential<f64> = random_potential(&mut rng, 3, 2, count, 5.0).unwrap();
            let alpha = rng.gen_range(0.5f64..40.0);
            let b = BoxDomain::new(3, 4).unwrap();
            let banded = count_negative(&b, alpha, &v).unwrap();
            let reduced = count_negative_reduced(&DirichletGreen::new(b), alpha, &v).unwrap();
            let h = assemble_hamiltonian(&b, alpha, &v).unwrap();
            let dense = h.eigenvalues().unwrap().iter().filter(|&&e| e < 0.0).count();
            assert_eq!(banded, dense);
            assert_eq!(reduced, dense);
            assert!(banded <= v.len());
        }
    }

    #[test]
    fn monotone_in_radius_and_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let v: Potential<f64> = random_potential(&mut rng, 3, 2, 6, 5.0).unwrap();
        let mut prev = 0;
        for r in [2, 4, 6, 8] {
            let g = DirichletGreen::new(BoxDomain::new(3, r).unwrap());
            let c = count_negative_reduced(&g, 2.0, &v).unwrap();
            assert!(c >= prev);
            prev = c;
        }
        let g = DirichletGreen::new(BoxDomain::new(3, 6).unwrap());
        let mut prev = 0;
        for k in 0..20 {
            let c = count_negative_reduced(&g, 0.5 * 1.3f64.powi(k), &v).unwrap();
            assert!(c >= prev && c <= v.len());
            prev = c;
        }
    }

    #[test]
    fn stabilization_protocol() {
        let s = stabilized_count(5.0, &delta0(3, 1.0), 4, 4, 40, CountRoute::Reduced).unwrap();
        assert!(s.stabilized);
        assert_eq!(s.count, 1);
        assert_eq!(s.radii, vec![4, 8, 12]);
        assert!(stabilized_count(5.0, &delta0(3, 1.0), 4, 0, 40, CountRoute::Reduced).is_err());
    }
}
