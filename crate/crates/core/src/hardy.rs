//! Poly-linear interpolation forms on the unit cell, the weight-transfer
//! inequality, and box lower bounds for Hardy constants.
//!
//! Cell vertices `v in {0,1}^d` are numbered with axis 0 as the most
//! significant bit, matching the Kronecker products used below.

use std::collections::HashMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{BoxDomain, LatticePoint, Potential, WeightFamily};
use crate::linalg::{banded_inertia, eigen_gen, eigen_sym, Matrix, SymMatrix};
use crate::operator::{laplacian, reduced_box_kernel, DirichletGreen};
use crate::scalar::Real;

/// Largest cell dimension handled (`2^d` vertices).
pub const MAX_CELL_DIM: usize = 6;

fn kron<T: Real>(a: &SymMatrix<T>, b: &SymMatrix<T>) -> SymMatrix<T> {
    let (na, nb) = (a.n(), b.n());
    SymMatrix::from_fn(na * nb, |i, j| a.get(i / nb, j / nb) * b.get(i % nb, j % nb))
}

fn kron_chain<T: Real>(factors: &[&SymMatrix<T>]) -> SymMatrix<T> {
    factors[1..]
        .iter()
        .fold(factors[0].clone(), |acc, f| kron(&acc, f))
}

/// 1-D element stiffness `[[1, -1], [-1, 1]]`.
pub fn stiffness_1d<T: Real>() -> SymMatrix<T> {
    SymMatrix::from_fn(2, |i, j| if i == j { T::one() } else { -T::one() })
}

/// 1-D element mass `[[1/3, 1/6], [1/6, 1/3]]`.
pub fn mass_1d<T: Real>() -> SymMatrix<T> {
    SymMatrix::from_fn(2, |i, j| if i == j { T::lit(1.0 / 3.0) } else { T::lit(1.0 / 6.0) })
}

/// `M (x) ... (x) M`: the cell Gram matrix of poly-linear functions.
pub fn cell_mass<T: Real>(dim: usize) -> SymMatrix<T> {
    let m = mass_1d::<T>();
    kron_chain(&vec![&m; dim])
}

/// Edge-difference and Dirichlet forms on one cell with their equivalence
/// constants.
#[derive(Clone, Debug)]
pub struct CellForms<T> {
    pub dim: usize,
    /// `sum over the d 2^{d-1} cell edges of |U(x) - U(y)|^2`.
    pub q_cell: SymMatrix<T>,
    /// `int_C |grad U|^2` for the poly-linear interpolant.
    pub d_cell: SymMatrix<T>,
    /// Extreme generalized eigenvalues of `d_cell` against `q_cell` off constants.
    pub c: T,
    pub c_prime: T,
    /// Vertex vectors attaining `c` and `c'`.
    pub c_vector: Vec<T>,
    pub c_prime_vector: Vec<T>,
}

impl<T: Real> CellForms<T> {
    /// Each lattice edge lies in `2^{d-1}` cells, so summing the cell
    /// inequality gives `2^{d-1} c Q_0 <= D[I u] <= 2^{d-1} c' Q_0`.
    pub fn global_constants(&self) -> (T, T) {
        let k = T::from_count(1 << (self.dim - 1));
        (k * self.c, k * self.c_prime)
    }
}

/// Basis of the complement of constants in `R^n`: columns `e_i - e_{n-1}`.
fn off_constants_basis<T: Real>(n: usize) -> Matrix<T> {
    Matrix::from_fn(n, n - 1, |i, j| {
        if i == j {
            T::one()
        } else if i == n - 1 {
            -T::one()
        } else {
            T::zero()
        }
    })
}

pub fn cell_forms<T: Real>(dim: usize) -> Result<CellForms<T>> {
    if dim == 0 || dim > MAX_CELL_DIM {
        return Err(Error::invalid(format!("cell dimension must be in 1..={MAX_CELL_DIM}")));
    }
    let k = stiffness_1d::<T>();
    let m = mass_1d::<T>();
    let id = SymMatrix::<T>::identity(2);
    let n = 1 << dim;
    let mut q_cell = SymMatrix::zeros(n);
    let mut d_cell = SymMatrix::zeros(n);
    for j in 0..dim {
        let qf: Vec<&SymMatrix<T>> = (0..dim).map(|i| if i == j { &k } else { &id }).collect();
        let df: Vec<&SymMatrix<T>> = (0..dim).map(|i| if i == j { &k } else { &m }).collect();
        let (qj, dj) = (kron_chain(&qf), kron_chain(&df));
        for a in 0..n {
            for b in a..n {
                q_cell.add(a, b, qj.get(a, b));
                d_cell.add(a, b, dj.get(a, b));
            }
        }
    }
    if n == 2 {
        let v = vec![T::lit(0.5), -T::lit(0.5)];
        return Ok(CellForms {
            dim,
            q_cell,
            d_cell,
            c: T::one(),
            c_prime: T::one(),
            c_vector: v.clone(),
            c_prime_vector: v,
        });
    }
    let p = off_constants_basis::<T>(n);
    let e = eigen_gen(&d_cell.congruence(&p), &q_cell.congruence(&p), true)?;
    let vecs = e.vectors.expect("requested");
    let lift = |col: usize| p.mul_vec(&vecs.column(col));
    Ok(CellForms {
        dim,
        c: e.values[0],
        c_prime: *e.values.last().expect("non-empty"),
        c_vector: lift(0),
        c_prime_vector: lift(n - 2),
        q_cell,
        d_cell,
    })
}

/// Closed forms `c = 6^{-(d-1)}`, `c' = 2^{-(d-1)}` of the cell constants.
pub fn cell_constants_closed_form(dim: usize) -> (f64, f64) {
    let e = dim as i32 - 1;
    (6f64.powi(-e), 2f64.powi(-e))
}

fn cell_values<T: Real>(domain: &BoxDomain, u: &[T], corner: &[i64]) -> Vec<T> {
    let d = corner.len();
    (0..1usize << d)
        .map(|v| {
            let x: Vec<i64> = (0..d)
                .map(|a| corner[a] + ((v >> (d - 1 - a)) & 1) as i64)
                .collect();
            domain.index_of(&x).map_or(T::zero(), |i| u[i])
        })
        .collect()
}

/// `D[I u]`: exact Dirichlet integral of the poly-linear interpolant of `u`
/// (given on the box, zero outside). `u` must vanish on the boundary layer.
pub fn interpolate_dirichlet<T: Real>(domain: &BoxDomain, u: &[T], forms: &CellForms<T>) -> Result<T> {
    if u.len() != domain.site_count() {
        return Err(Error::DimensionMismatch {
            expected: domain.site_count(),
            found: u.len(),
        });
    }
    if forms.dim != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            found: forms.dim,
        });
    }
    if let Some(i) = (0..u.len()).find(|&i| u[i] != T::zero() && domain.is_boundary(i)) {
        return Err(Error::invalid(format!(
            "u is nonzero on the boundary site {:?}",
            domain.coords_of(i)
        )));
    }
    if domain.radius() == 0 {
        return Ok(T::zero());
    }
    let inner = BoxDomain::new(domain.dim(), domain.radius())?;
    let mut total = T::zero();
    for i in 0..inner.site_count() {
        let corner = inner.coords_of(i);
        if corner.iter().any(|&c| c == domain.radius()) {
            continue;
        }
        let vals = cell_values(domain, u, &corner);
        if vals.iter().all(|&v| v == T::zero()) {
            continue;
        }
        total += forms.d_cell.quad_form(&vals);
    }
    Ok(total)
}

/// Both sides of `sum W |u|^2 <= C int J(W) |I u|^2` for one `(W, u)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightTransfer {
    pub left: f64,
    pub right: f64,
}

impl WeightTransfer {
    /// `left / right`, 0 when both vanish, infinite if only `right` does.
    pub fn ratio(&self) -> f64 {
        if self.left == 0.0 {
            0.0
        } else if self.right == 0.0 {
            f64::INFINITY
        } else {
            self.left / self.right
        }
    }
}

/// Evaluates both sides exactly; `u` is a finitely supported lattice function
/// given as a map. The right side integrates `|I u|^2` over the cell with
/// lower corner `x` against `W(x)`.
pub fn weight_transfer_check<T: Real>(
    w: &Potential<T>,
    u: &HashMap<LatticePoint, T>,
) -> Result<WeightTransfer> {
    let d = w.dim();
    let mass = cell_mass::<T>(d);
    let get = |x: &[i64]| u.get(&LatticePoint(x.to_vec())).copied().unwrap_or(T::zero());
    let mut left = T::zero();
    let mut right = T::zero();
    for (x, wx) in w.iter() {
        let ux = get(&x.0);
        left += wx * ux * ux;
        let vals: Vec<T> = (0..1usize << d)
            .map(|v| {
                let y: Vec<i64> = (0..d).map(|a| x.0[a] + ((v >> (d - 1 - a)) & 1) as i64).collect();
                get(&y)
            })
            .collect();
        right += wx * mass.quad_form(&vals);
    }
    Ok(WeightTransfer {
        left: left.to_f64_lossy(),
        right: right.to_f64_lossy(),
    })
}

/// The sharp single-site transfer constant `((M^{-1})_{00})^d = 4^d`.
pub fn weight_transfer_constant(dim: usize) -> f64 {
    4f64.powi(dim as i32)
}

/// Maximum ratio over `samples` random `(W, u)` pairs supported in a box of
/// radius `radius`.
pub fn weight_transfer_sample<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: i64, samples: usize) -> Result<f64> {
    let domain = BoxDomain::new(dim, radius)?;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut w = Potential::<f64>::new(dim);
        let mut u = HashMap::new();
        for _ in 0..rng.gen_range(1..=4) {
            let x = domain.point(rng.gen_range(0..domain.site_count()));
            w.insert(x, rng.gen_range(0.1..2.0))?;
        }
        for i in 0..domain.site_count() {
            u.insert(domain.point(i), rng.gen_range(-1.0..1.0));
        }
        worst = worst.max(weight_transfer_check(&w, &u)?.ratio());
    }
    Ok(worst)
}

/// How a box Hardy bound was computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HardyMethod {
    /// Reduction to the hyperoctahedral-invariant subspace.
    OrbitReduction,
    /// Block elimination onto a finite support.
    SupportReduction,
    /// Bisection on inertia counts of `lambda L - W`.
    InertiaBisection,
}

/// Box lower bounds for the Hardy constant `H(W)` over increasing radii.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyEstimate {
    pub weight: String,
    pub radii: Vec<i64>,
    pub lower_bounds: Vec<f64>,
    pub method: HardyMethod,
}

impl HardyEstimate {
    pub fn is_non_decreasing(&self, tol: f64) -> bool {
        self.lower_bounds.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    /// `(b_k - b_{k-1}) / (b_{k-1} - b_{k-2})` for the last three bounds.
    pub fn last_increment_ratio(&self) -> Option<f64> {
        let b = &self.lower_bounds;
        let k = b.len();
        (k >= 3).then(|| (b[k - 1] - b[k - 2]) / (b[k - 2] - b[k - 3]))
    }
}

/// `max b_W[u] / Q_0[u]` over `u` supported in each box. Non-decreasing in R.
pub fn hardy_lower_bound<T: Real>(w: &WeightFamily<T>, dim: usize, radii: &[i64]) -> Result<HardyEstimate> {
    if dim < 3 {
        return Err(Error::domain(format!("Hardy weights need d >= 3, got {dim}")));
    }
    if let WeightFamily::Custom(v) = w {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.dim(),
            });
        }
    }
    let method = match w {
        WeightFamily::Delta { .. } => HardyMethod::SupportReduction,
        WeightFamily::Custom(_) if w.is_hyperoctahedral() => HardyMethod::OrbitReduction,
        WeightFamily::Custom(_) => HardyMethod::SupportReduction,
        _ => HardyMethod::OrbitReduction,
    };
    let mut bounds = Vec::with_capacity(radii.len());
    for &r in radii {
        let domain = BoxDomain::new(dim, r)?;
        let restricted = w.restrict(&domain);
        let b = if restricted.is_empty() {
            0.0
        } else {
            match method {
                HardyMethod::SupportReduction => support_bound(&restricted, &domain)?,
                HardyMethod::OrbitReduction => orbit_bound(&restricted, &domain)?,
                HardyMethod::InertiaBisection => unreachable!("not selected automatically"),
            }
        };
        bounds.push(b);
    }
    Ok(HardyEstimate {
        weight: w.name().to_string(),
        radii: radii.to_vec(),
        lower_bounds: bounds,
        method,
    })
}

fn support_bound<T: Real>(w: &Potential<T>, domain: &BoxDomain) -> Result<f64> {
    let k = reduced_box_kernel(&DirichletGreen::new(*domain), w)?;
    let e = eigen_sym(&k, false)?;
    Ok(e.values.last().expect("non-empty").to_f64_lossy())
}

/// Site-to-orbit map of the box under the hyperoctahedral group.
fn orbits(domain: &BoxDomain) -> (Vec<usize>, Vec<LatticePoint>) {
    let mut index: HashMap<LatticePoint, usize> = HashMap::new();
    let mut reps = Vec::new();
    let map = (0..domain.site_count())
        .map(|i| {
            let key = domain.point(i).canonical();
            *index.entry(key.clone()).or_insert_with(|| {
                reps.push(key);
                reps.len() - 1
            })
        })
        .collect();
    (map, reps)
}

// The top generalized eigenvector of (diag W, L) can be taken nonnegative
// (L^{-1} is entrywise positive); averaging it over the symmetry group keeps
// it an eigenvector, so the maximum is attained on invariant vectors.
fn orbit_bound<T: Real>(w: &Potential<T>, domain: &BoxDomain) -> Result<f64> {
    let (map, reps) = orbits(domain);
    let k = reps.len();
    let mut l_red = SymMatrix::<f64>::zeros(k);
    let mut w_red = vec![0.0; k];
    let two_d = (2 * domain.dim()) as f64;
    for i in 0..domain.site_count() {
        let oi = map[i];
        l_red.add(oi, oi, two_d);
        w_red[oi] += w.get(&domain.coords_of(i)).to_f64_lossy();
        for axis in 0..domain.dim() {
            for fwd in [true, false] {
                if let Some(j) = domain.neighbor(i, axis, fwd) {
                    let oj = map[j];
                    if oi == oj {
                        l_red.add(oi, oi, -1.0);
                    } else if oi < oj {
                        // Each unordered edge pair is met twice over the sweep.
                        l_red.add(oi, oj, -0.5);
                    } else {
                        l_red.add(oj, oi, -0.5);
                    }
                }
            }
        }
    }
    let e = eigen_gen(&SymMatrix::diagonal(&w_red), &l_red, false)?;
    Ok(*e.values.last().expect("non-empty"))
}

/// Largest generalized eigenvalue of `(diag W, L)` on a box by bisection on
/// `N_-(lambda L - W)`, to relative accuracy `rel_tol`.
pub fn hardy_bound_bisection<T: Real>(w: &Potential<T>, domain: &BoxDomain, rel_tol: f64) -> Result<f64> {
    w.check_inside(domain)?;
    if w.is_empty() {
        return Ok(0.0);
    }
    let l = laplacian::<f64>(domain);
    let n_side = domain.side() as f64;
    let lmin = domain.dim() as f64 * (2.0 - 2.0 * (std::f64::consts::PI / (n_side + 1.0)).cos());
    let (mut lo, mut hi) = (0.0, w.max_value().to_f64_lossy() / lmin * 1.01);
    let above = |lam: f64| -> Result<bool> {
        let mut m = l.scaled(lam);
        for (x, val) in w.iter() {
            let i = domain.index_of(&x.0).expect("inside");
            m.add(i, i, -val.to_f64_lossy());
        }
        Ok(banded_inertia(&m, 0.0, 0.0)?.n_minus > 0)
    };
    while hi - lo > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if above(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Scale `1 / H_R(W)` that normalizes a weight by its box Hardy bound at the
/// largest radius (an upper proxy for the normalizing factor).
pub fn normalizing_scale<T: Real>(w: &WeightFamily<T>, dim: usize, radius: i64) -> Result<f64> {
    let est = hardy_lower_bound(w, dim, &[radius])?;
    let b = est.lower_bounds[0];
    if b <= 0.0 {
        return Err(Error::invalid("weight vanishes on the box"));
    }
    Ok(1.0 / b)
}
