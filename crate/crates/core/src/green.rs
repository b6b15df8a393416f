//! Lattice Green function `h_0 = (-Delta)^{-1} delta_0` on Z^d, d >= 3.
//!
//! `h_0(x) = (2 pi)^{-d} \int_{T^d} e^{i x z} / omega(z) dz`,
//! `omega(z) = 4 sum_j sin^2(z_j / 2)`, evaluated by the midpoint rule on the
//! shifted grid `z_k = 2 pi (k + 1/2) / m - pi`. Because the grid is symmetric
//! under every `z_j -> -z_j`, the sum folds onto one octant with
//! `cos(x_1 z_1) ... cos(x_d z_d)` in place of `e^{i x z}`.
//!
//! The midpoint sum equals the alternating alias sum
//! `sum_k (-1)^{|k|} h_0(x + m k)`, so its error is `O(m^{-(d-2)})`; Richardson
//! extrapolation in `m` removes the leading term.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::scalar::Real;

/// Default base resolution per dimension.
pub fn default_grid(dim: usize) -> usize {
    match dim {
        0..=3 => 128,
        4 => 32,
        _ => 16,
    }
}

/// Sup-norm radius from which the d = 3 asymptotic expansion replaces quadrature.
pub const FAR_FIELD_RADIUS: f64 = 16.0;

fn check_dim(dim: usize) -> Result<()> {
    if dim <= 2 {
        return Err(Error::domain(format!(
            "the lattice Green function diverges for d = {dim}; need d >= 3"
        )));
    }
    Ok(())
}

fn check_grid(m: usize) -> Result<()> {
    if m < 8 || !m.is_multiple_of(2) {
        return Err(Error::invalid(format!("grid size must be even and >= 8, got {m}")));
    }
    Ok(())
}

/// `1 / omega` on the positive octant of the shifted grid, last axis fastest.
#[derive(Debug)]
struct OctantTable {
    half: usize,
    nodes: Vec<f64>,
    inv_omega: Vec<f64>,
}

impl OctantTable {
    fn new(dim: usize, m: usize) -> Self {
        let half = m / 2;
        let nodes: Vec<f64> = (0..half)
            .map(|i| std::f64::consts::PI * (2 * i + 1) as f64 / m as f64)
            .collect();
        let s2: Vec<f64> = nodes.iter().map(|z| 4.0 * (z / 2.0).sin().powi(2)).collect();
        let len = half.pow(dim as u32);
        let mut inv_omega = Vec::with_capacity(len);
        let mut idx = vec![0usize; dim];
        for _ in 0..len {
            let w: f64 = idx.iter().map(|&i| s2[i]).sum();
            inv_omega.push(1.0 / w);
            for a in (0..dim).rev() {
                idx[a] += 1;
                if idx[a] < half {
                    break;
                }
                idx[a] = 0;
            }
        }
        OctantTable {
            half,
            nodes,
            inv_omega,
        }
    }

    fn integrate(&self, x: &[i64]) -> f64 {
        let cosines: Vec<Vec<f64>> = x
            .iter()
            .map(|&c| self.nodes.iter().map(|z| (c as f64 * z).cos()).collect())
            .collect();
        let m = 2 * self.half;
        let sum = fold(&cosines, &self.inv_omega, self.half);
        sum * (2.0 / m as f64).powi(x.len() as i32)
    }
}

fn fold(cosines: &[Vec<f64>], table: &[f64], half: usize) -> f64 {
    if cosines.len() == 1 {
        return cosines[0].iter().zip(table).map(|(c, w)| c * w).sum();
    }
    let block = table.len() / half;
    cosines[0]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * fold(&cosines[1..], &table[i * block..(i + 1) * block], half))
        .sum()
}

/// Midpoint quadrature `h^{(m)}(x)` on the shifted `m^d` grid.
pub fn green_value<T: Real>(dim: usize, x: &LatticePoint, m: usize) -> Result<T> {
    check_dim(dim)?;
    check_grid(m)?;
    check_point(dim, x)?;
    Ok(T::lit(OctantTable::new(dim, m).integrate(&x.canonical().0)))
}

fn check_point(dim: usize, x: &LatticePoint) -> Result<()> {
    if x.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.dim(),
        });
    }
    Ok(())
}

/// Unfolded complex midpoint sum `(re, im)`, for checking the folding.
pub fn green_value_complex(dim: usize, x: &LatticePoint, m: usize) -> Result<(f64, f64)> {
    check_dim(dim)?;
    check_grid(m)?;
    check_point(dim, x)?;
    let nodes: Vec<f64> = (0..m)
        .map(|k| 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / m as f64 - std::f64::consts::PI)
        .collect();
    let total = m.pow(dim as u32);
    let (mut re, mut im) = (0.0, 0.0);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let mut phase = 0.0;
        let mut w = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            let z = nodes[i];
            phase += x.0[a] as f64 * z;
            w += 4.0 * (z / 2.0).sin().powi(2);
        }
        re += phase.cos() / w;
        im += phase.sin() / w;
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < m {
                break;
            }
            idx[a] = 0;
        }
    }
    let scale = 1.0 / total as f64;
    Ok((re * scale, im * scale))
}

/// Two-term asymptotic expansion of `h_0` in d = 3 with its error bar.
///
/// `h_0(x) ~ 1/(4 pi r) + (5 sum x_j^4 / r^4 - 3) / (32 pi r^3)`; the next
/// order is bounded by `8 / (32 pi r^5)`.
pub fn far_field_3d(x: &[i64]) -> (f64, f64) {
    let r2 = x.iter().map(|&c| (c * c) as f64).sum::<f64>();
    let r = r2.sqrt();
    let quartic = x.iter().map(|&c| (c as f64).powi(4)).sum::<f64>() / (r2 * r2);
    let pi = std::f64::consts::PI;
    let value = 1.0 / (4.0 * pi * r) + (5.0 * quartic - 3.0) / (32.0 * pi * r * r2);
    (value, 8.0 / (32.0 * pi * r.powi(5)))
}

/// How a tabulated value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GreenMethod {
    Richardson,
    FarField,
    Loaded,
}

/// A tabulated `h_0(x)` with its error bar (absent for loaded values).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    pub error: Option<f64>,
    pub m: usize,
    pub method: GreenMethod,
}

/// Cached lattice Green function for one dimension.
///
/// Values are keyed by the canonical representative (sorted absolute
/// coordinates). Near-field values are Richardson extrapolations over
/// `m_eff, 2 m_eff` with `|R(m_eff, 2m_eff) - R(m_eff/2, m_eff)|` as error
/// bar, where `m_eff` is the base grid, raised for points far from the origin.
#[derive(Debug)]
pub struct GreenTable<T> {
    dim: usize,
    m: usize,
    far_field: bool,
    cache: Mutex<HashMap<LatticePoint, GreenValue>>,
    tables: Mutex<HashMap<usize, Arc<OctantTable>>>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> GreenTable<T> {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        check_dim(dim)?;
        check_grid(m)?;
        Ok(GreenTable {
            dim,
            m,
            far_field: dim == 3,
            cache: Mutex::new(HashMap::new()),
            tables: Mutex::new(HashMap::new()),
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn with_default_grid(dim: usize) -> Result<Self> {
        Self::new(dim, default_grid(dim))
    }

    /// Disables the d = 3 asymptotic branch (quadrature everywhere).
    pub fn without_far_field(mut self) -> Self {
        self.far_field = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> usize {
        self.m
    }

    fn table(&self, m: usize) -> Arc<OctantTable> {
        let mut tables = self.tables.lock().expect("green table lock");
        tables
            .entry(m)
            .or_insert_with(|| Arc::new(OctantTable::new(self.dim, m)))
            .clone()
    }

    fn effective_grid(&self, key: &[i64]) -> usize {
        let reach = key.iter().copied().max().unwrap_or(0) as usize;
        let mut m = self.m;
        while m < 4 * reach {
            m *= 2;
        }
        m
    }

    fn compute(&self, key: &LatticePoint) -> GreenValue {
        if self.far_field && key.sup_norm() as f64 >= FAR_FIELD_RADIUS {
            let (value, err) = far_field_3d(&key.0);
            return GreenValue {
                value,
                error: Some(err),
                m: 0,
                method: GreenMethod::FarField,
            };
        }
        let m = self.effective_grid(&key.0);
        let p = (self.dim - 2) as i32;
        let f = 2f64.powi(p);
        let h = |mm: usize| self.table(mm).integrate(&key.0);
        let (h_half, h1, h2) = (h(m / 2), h(m), h(2 * m));
        let r_hi = (f * h2 - h1) / (f - 1.0);
        let r_lo = (f * h1 - h_half) / (f - 1.0);
        GreenValue {
            value: r_hi,
            error: Some((r_hi - r_lo).abs()),
            m,
            method: GreenMethod::Richardson,
        }
    }

    /// Tabulated value with metadata.
    pub fn entry(&self, x: &LatticePoint) -> Result<GreenValue> {
        check_point(self.dim, x)?;
        let key = x.canonical();
        if let Some(v) = self.cache.lock().expect("green cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.compute(&key);
        self.cache
            .lock()
            .expect("green cache lock")
            .insert(key, v);
        Ok(v)
    }

    pub fn get(&self, x: &LatticePoint) -> Result<T> {
        Ok(T::lit(self.entry(x)?.value))
    }

    /// `h_0(x - y)`.
    pub fn between(&self, x: &LatticePoint, y: &LatticePoint) -> Result<T> {
        self.get(&x.sub(y))
    }

    /// `mu^2 = h_0(0)`.
    pub fn mu_squared(&self) -> Result<T> {
        self.get(&LatticePoint::origin(self.dim))
    }

    pub fn mu(&self) -> Result<T> {
        Ok(self.mu_squared()?.sqrt())
    }

    /// `(-Delta h_0)(x)`; equals 1 at the origin and 0 elsewhere.
    pub fn laplacian_residual(&self, x: &LatticePoint) -> Result<T> {
        let mut total = T::from_count(2 * self.dim) * self.get(x)?;
        for j in 0..self.dim {
            for s in [-1, 1] {
                let mut y = x.0.clone();
                y[j] += s;
                total -= self.get(&LatticePoint(y))?;
            }
        }
        Ok(total)
    }

    pub fn cached_len(&self) -> usize {
        self.cache.lock().expect("green cache lock").len()
    }

    /// CSV with rows `x1,...,xd,value,m` (m = 0 for far-field values).
    pub fn to_csv(&self) -> String {
        let cache = self.cache.lock().expect("green cache lock");
        let mut keys: Vec<&LatticePoint> = cache.keys().collect();
        keys.sort();
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim).map(|j| format!("x{j}")).collect();
        let _ = writeln!(out, "{},value,m", header.join(","));
        for k in keys {
            let v = &cache[k];
            let coords: Vec<String> = k.0.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(out, "{},{:.17e},{}", coords.join(","), v.value, v.m);
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Loads rows computed at this table's base grid; other rows are skipped.
    /// Returns the number of values taken over.
    pub fn load_csv(&self, text: &str) -> Result<usize> {
        let mut loaded = 0;
        let mut cache = self.cache.lock().expect("green cache lock");
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('x') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != self.dim + 2 {
                return Err(Error::Parse(format!("line {}: expected {} fields", lineno + 1, self.dim + 2)));
            }
            let parse_err = |e: String| Error::Parse(format!("line {}: {e}", lineno + 1));
            let coords = fields[..self.dim]
                .iter()
                .map(|f| f.parse::<i64>().map_err(|e| parse_err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let value: f64 = fields[self.dim].parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            let m: usize = fields[self.dim + 1].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
            let key = LatticePoint(coords).canonical();
            let expected_m = if self.far_field && key.sup_norm() as f64 >= FAR_FIELD_RADIUS {
                0
            } else {
                self.effective_grid(&key.0)
            };
            if m != expected_m {
                continue;
            }
            cache.insert(
                key,
                GreenValue {
                    value,
                    error: None,
                    m,
                    method: GreenMethod::Loaded,
                },
            );
            loaded += 1;
        }
        Ok(loaded)
    }
}

/// `mu = sqrt(h_0(0))` at the default grid.
pub fn mu(dim: usize) -> Result<f64> {
    GreenTable::<f64>::with_default_grid(dim)?.mu()
}

/// One row of [`decay_report`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayRow {
    pub r: i64,
    pub value: f64,
    pub error: Option<f64>,
    pub rescaled: f64,
}

/// `h_0(r e_1)` and `h_0(r e_1) r^{d-2}` for each radius.
pub fn decay_report<T: Real>(table: &GreenTable<T>, radii: &[i64]) -> Result<Vec<DecayRow>> {
    radii
        .iter()
        .map(|&r| {
            let e = table.entry(&LatticePoint::on_axis(table.dim(), 0, r))?;
            Ok(DecayRow {
                r,
                value: e.value,
                error: e.error,
                rescaled: e.value * (r as f64).powi(table.dim() as i32 - 2),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent oracle: h_0(x) = \int_0^\infty prod_j e^{-2t} I_{x_j}(2t) dt,
    // evaluated to ~1e-15 with a one-dimensional Bessel quadrature.
    const H0_ORIGIN: f64 = 0.25273100985585695;
    const H0_E1: f64 = 0.08606434319293169;
    const H0_10: f64 = 0.007978261913260487;
    const H0_20: f64 = 0.003981380066756513;
    const H0_666: f64 = 0.007645483169707721;
    const H0_840: f64 = 0.008902578733805112;
    const H0_12: f64 = 0.006643211865107649;
    const H0_531: f64 = 0.013444802358575014;

    fn p(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec())
    }

    #[test]
    fn low_dimensions_are_rejected() {
        assert!(matches!(green_value::<f64>(2, &p(&[0, 0]), 16), Err(Error::TheoryDomain(_))));
        assert!(matches!(GreenTable::<f64>::new(1, 16), Err(Error::TheoryDomain(_))));
        assert!(green_value::<f64>(3, &p(&[0, 0, 0]), 7).is_err());
    }

    #[test]
    fn folding_matches_complex_grid_and_imaginary_part_cancels() {
        for x in [[0i64, 0, 0], [1, 0, 0], [2, -1, 3]] {
            let folded: f64 = green_value(3, &p(&x), 16).unwrap();
            let (re, im) = green_value_complex(3, &p(&x), 16).unwrap();
            assert!((folded - re).abs() < 1e-13);
            assert!(im.abs() <= 1e-12);
        }
    }

    #[test]
    fn values_against_bessel_oracle() {
        let t = GreenTable::<f64>::new(3, 128).unwrap();
        for (x, want, tol) in [
            (vec![0, 0, 0], H0_ORIGIN, 1e-6),
            (vec![1, 0, 0], H0_E1, 1e-6),
            (vec![10, 0, 0], H0_10, 1e-6),
            (vec![0, 0, 20], H0_20, 1e-6),
            (vec![6, -6, 6], H0_666, 1e-6),
            (vec![4, 0, 8], H0_840, 1e-6),
            (vec![12, 0, 0], H0_12, 1e-6),
            (vec![1, 3, 5], H0_531, 1e-6),
        ] {
            let e = t.entry(&p(&x)).unwrap();
            assert!((e.value - want).abs() < tol, "{x:?}: {} vs {want}", e.value);
            assert!(e.error.unwrap() < 1e-5);
        }
    }

    #[test]
    fn far_field_matches_oracle() {
        let (v, err) = far_field_3d(&[20, 0, 0]);
        assert!((v - H0_20).abs() <= err);
        let (v, err) = far_field_3d(&[12, 0, 0]);
        assert!((v - H0_12).abs() <= err);
    }

    #[test]
    fn unit_step_relation() {
        // (-Delta h0)(0) = 1 with cubic symmetry gives h0(e1) = mu^2 - 1/6.
        let t = GreenTable::<f64>::new(3, 64).unwrap();
        let mu2 = t.mu_squared().unwrap();
        let h1 = t.get(&p(&[1, 0, 0])).unwrap();
        assert!((h1 - (mu2 - 1.0 / 6.0)).abs() < 1e-12);
    }

    #[test]
    fn harmonic_away_from_origin() {
        let t = GreenTable::<f64>::new(3, 64).unwrap();
        assert!((t.laplacian_residual(&p(&[0, 0, 0])).unwrap() - 1.0).abs() < 1e-12);
        for x in [[1, 2, 3], [4, 0, 0], [2, 2, 2], [5, -1, 0], [0, 3, -3]] {
            assert!(t.laplacian_residual(&p(&x)).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn symmetries_and_bounds() {
        let t = GreenTable::<f64>::new(3, 32).unwrap();
        let mu2 = t.mu_squared().unwrap();
        let a = t.get(&p(&[1, -2, 3])).unwrap();
        assert_eq!(a, t.get(&p(&[-1, 2, -3])).unwrap());
        assert_eq!(a, t.get(&p(&[3, 1, -2])).unwrap());
        assert!(a > 0.0 && a <= mu2);
    }

    #[test]
    fn quadrature_error_decreases_with_grid() {
        for x in [[0i64, 0, 0], [2, 1, 0]] {
            let h: Vec<f64> = [16, 32, 64, 128]
                .iter()
                .map(|&m| green_value(3, &p(&x), m).unwrap())
                .collect();
            let diffs: Vec<f64> = h.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{diffs:?}");
        }
    }

    #[test]
    fn higher_dimensions() {
        let mu4 = mu(4).unwrap();
        let mu3 = mu(3).unwrap();
        assert!((mu3 - H0_ORIGIN.sqrt()).abs() < 1e-6);
        assert!(mu4 > 0.0 && mu4 < mu3);
        let t = GreenTable::<f64>::with_default_grid(4).unwrap();
        let rows = decay_report(&t, &[5, 10]).unwrap();
        let ratio = rows[0].rescaled / rows[1].rescaled;
        assert!((ratio - 1.0).abs() < 0.2, "{rows:?}");
        assert!(t.laplacian_residual(&p(&[1, 1, 0, 2])).unwrap().abs() < 1e-10);
    }

    #[test]
    fn decay_approaches_continuum_constant() {
        let t = GreenTable::<f64>::with_default_grid(3).unwrap();
        let rows = decay_report(&t, &[10, 20, 40]).unwrap();
        let target = 1.0 / (4.0 * std::f64::consts::PI);
        let errs: Vec<f64> = rows.iter().map(|r| (r.rescaled - target).abs()).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]));
        assert!(errs[2] < 1e-3);
        let max = rows.iter().map(|r| r.rescaled).fold(0.0, f64::max);
        assert!(max <= 1.5 * rows[2].rescaled);
    }

    #[test]
    fn csv_round_trip() {
        let t = GreenTable::<f64>::new(3, 16).unwrap();
        t.get(&p(&[1, 2, 0])).unwrap();
        t.get(&p(&[0, 0, 30])).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("x1,x2,x3,value,m\n"));
        let u = GreenTable::<f64>::new(3, 16).unwrap();
        assert_eq!(u.load_csv(&csv).unwrap(), 2);
        assert_eq!(u.get(&p(&[2, 1, 0])).unwrap(), t.get(&p(&[0, 1, 2])).unwrap());
        let other = GreenTable::<f64>::new(3, 32).unwrap();
        assert_eq!(other.load_csv(&csv).unwrap(), 1);
        assert!(u.load_csv("1,2\n").is_err());
    }
}
