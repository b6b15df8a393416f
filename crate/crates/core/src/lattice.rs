//! Integer-lattice geometry: points, truncation boxes and potentials.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        LatticePoint(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        LatticePoint(vec![0; dim])
    }

    /// `r * 1_axis`.
    pub fn on_axis(dim: usize, axis: usize, r: i64) -> Self {
        let mut c = vec![0; dim];
        c[axis] = r;
        LatticePoint(c)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn norm_sq(&self) -> i64 {
        norm_sq(&self.0)
    }

    pub fn euclidean_norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn sup_norm(&self) -> i64 {
        sup_norm(&self.0)
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn neg(&self) -> LatticePoint {
        LatticePoint(self.0.iter().map(|a| -a).collect())
    }

    /// Representative of the orbit under coordinate permutations and sign
    /// flips: sorted absolute values.
    pub fn canonical(&self) -> LatticePoint {
        let mut c: Vec<i64> = self.0.iter().map(|a| a.abs()).collect();
        c.sort_unstable();
        LatticePoint(c)
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint(v)
    }
}

impl From<&[i64]> for LatticePoint {
    fn from(v: &[i64]) -> Self {
        LatticePoint(v.to_vec())
    }
}

/// Exact squared Euclidean norm.
pub fn norm_sq(x: &[i64]) -> i64 {
    x.iter().map(|a| a * a).sum()
}

pub fn sup_norm(x: &[i64]) -> i64 {
    x.iter().map(|a| a.abs()).max().unwrap_or(0)
}

/// The window `{x : max_j |x_j| <= R}` of Z^d.
///
/// Sites are enumerated lexicographically with the first coordinate most
/// significant and each coordinate running from `-R` to `R`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxDomain {
    dim: usize,
    radius: i64,
}

impl BoxDomain {
    pub fn new(dim: usize, radius: i64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("box dimension must be positive"));
        }
        if radius < 0 {
            return Err(Error::invalid("box radius must be nonnegative"));
        }
        let b = BoxDomain { dim, radius };
        if b.checked_site_count().is_none() {
            return Err(Error::invalid("box site count overflows usize"));
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// Points per axis, `2R + 1`.
    pub fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    fn checked_site_count(&self) -> Option<usize> {
        let mut n: usize = 1;
        for _ in 0..self.dim {
            n = n.checked_mul(self.side())?;
        }
        Some(n)
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Index offset between neighbors along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.side().pow((self.dim - 1 - axis) as u32)
    }

    /// Half-bandwidth of any nearest-neighbor operator in this enumeration.
    pub fn bandwidth(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.stride(0)
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim && x.iter().all(|c| c.abs() <= self.radius)
    }

    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side() as i64;
        let mut idx = 0i64;
        for &c in x {
            idx = idx * side + (c + self.radius);
        }
        Some(idx as usize)
    }

    pub fn coords_of(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let mut c = vec![0i64; self.dim];
        for j in (0..self.dim).rev() {
            c[j] = (index % side) as i64 - self.radius;
            index /= side;
        }
        c
    }

    pub fn point(&self, index: usize) -> LatticePoint {
        LatticePoint(self.coords_of(index))
    }

    /// All sites in enumeration order.
    pub fn enumerate(&self) -> Vec<LatticePoint> {
        (0..self.site_count()).map(|i| self.point(i)).collect()
    }

    /// Neighbor `x + sign * 1_axis` of the site `index`, or `None` when it
    /// falls outside the box.
    pub fn neighbor(&self, index: usize, axis: usize, forward: bool) -> Option<usize> {
        let stride = self.stride(axis);
        let side = self.side();
        let coord = (index / stride) % side;
        if forward {
            (coord + 1 < side).then(|| index + stride)
        } else {
            (coord > 0).then(|| index - stride)
        }
    }

    /// Whether the site sits on the boundary layer (`|x_j| = R` for some j).
    pub fn is_boundary(&self, index: usize) -> bool {
        let side = self.side();
        (0..self.dim).any(|j| {
            let c = (index / self.stride(j)) % side;
            c == 0 || c + 1 == side
        })
    }
}

/// A finitely supported nonnegative function on Z^d.
///
/// Only strictly positive values are stored; every other site carries zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential<T> {
    dim: usize,
    entries: BTreeMap<LatticePoint, T>,
}

impl<T: Real> Potential<T> {
    pub fn new(dim: usize) -> Self {
        Potential {
            dim,
            entries: BTreeMap::new(),
        }
    }

    /// `c * delta_x`.
    pub fn delta(x: LatticePoint, c: T) -> Result<Self> {
        let mut v = Potential::new(x.dim());
        v.insert(x, c)?;
        Ok(v)
    }

    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = (LatticePoint, T)>,
    ) -> Result<Self> {
        let mut v = Potential::new(dim);
        for (x, val) in entries {
            v.insert(x, val)?;
        }
        Ok(v)
    }

    /// Sets `V(x) = value`; zero removes the entry.
    pub fn insert(&mut self, x: LatticePoint, value: T) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.dim(),
            });
        }
        if !value.is_finite() || value < T::zero() {
            return Err(Error::invalid(format!(
                "potential value at {:?} must be finite and nonnegative, got {}",
                x, value
            )));
        }
        if value == T::zero() {
            self.entries.remove(&x);
        } else {
            self.entries.insert(x, value);
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: &[i64]) -> T {
        self.entries
            .get(&LatticePoint::from(x))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Support points with their values, in lexicographic point order.
    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, T)> + '_ {
        self.entries.iter().map(|(k, v)| (k, *v))
    }

    pub fn support(&self) -> Vec<LatticePoint> {
        self.entries.keys().cloned().collect()
    }

    pub fn values(&self) -> Vec<T> {
        self.entries.values().copied().collect()
    }

    /// Largest sup-norm over the support (0 for the empty potential).
    pub fn support_radius(&self) -> i64 {
        self.entries.keys().map(|x| x.sup_norm()).max().unwrap_or(0)
    }

    pub fn max_value(&self) -> T {
        self.entries
            .values()
            .copied()
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// The rearrangement `V_1* >= V_2* >= ...` of the positive values.
    pub fn sorted_values(&self) -> Vec<T> {
        sorted_non_increasing(self.values())
    }

    /// `nu(s, V) = #{x : V(x) > s}`.
    pub fn distribution_function(&self, s: T) -> Result<usize> {
        if !(s > T::zero()) {
            return Err(Error::invalid("distribution function level must be positive"));
        }
        Ok(self.entries.values().filter(|&&v| v > s).count())
    }

    /// `sum_x V(x)^p`.
    pub fn power_sum(&self, p: T) -> T {
        self.entries.values().map(|v| v.powf(p)).sum()
    }

    pub fn scaled(&self, c: T) -> Result<Self> {
        Potential::from_entries(self.dim, self.iter().map(|(x, v)| (x.clone(), v * c)))
    }

    /// First support point outside `domain`, if any.
    pub fn first_outside(&self, domain: &BoxDomain) -> Option<&LatticePoint> {
        self.entries.keys().find(|x| !domain.contains(&x.0))
    }

    pub fn check_inside(&self, domain: &BoxDomain) -> Result<()> {
        if self.dim != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: self.dim,
            });
        }
        match self.first_outside(domain) {
            Some(x) => Err(Error::SupportOverflow {
                point: x.0.clone(),
                radius: domain.radius(),
            }),
            None => Ok(()),
        }
    }

    /// Whether `V(g x) = V(x)` for every coordinate permutation and sign flip `g`.
    pub fn is_hyperoctahedral(&self) -> bool {
        let mut by_orbit: BTreeMap<LatticePoint, (usize, T)> = BTreeMap::new();
        for (x, v) in self.iter() {
            let e = by_orbit.entry(x.canonical()).or_insert((0, v));
            if e.1 != v {
                return false;
            }
            e.0 += 1;
        }
        by_orbit
            .iter()
            .all(|(rep, (count, _))| *count == orbit_size(&rep.0))
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: PotentialFile =
            serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_potential()
    }

    pub fn to_json_string(&self) -> String {
        let file = PotentialFile {
            dim: self.dim,
            entries: self
                .iter()
                .map(|(x, v)| PotentialEntry {
                    x: x.0.clone(),
                    v: v.to_f64_lossy(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("potential serializes")
    }
}

/// Number of distinct images of `x` under the hyperoctahedral group.
pub fn orbit_size(x: &[i64]) -> usize {
    let d = x.len();
    let nonzero = x.iter().filter(|&&c| c != 0).count();
    let mut abs: Vec<i64> = x.iter().map(|c| c.abs()).collect();
    abs.sort_unstable();
    let mut perms = factorial(d);
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j < d && abs[j] == abs[i] {
            j += 1;
        }
        perms /= factorial(j - i);
        i = j;
    }
    perms << nonzero
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

pub(crate) fn sorted_non_increasing<T: Real>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| b.partial_cmp(a).expect("finite values"));
    v
}

/// On-disk potential: `{"dim": d, "entries": [{"x": [..], "v": number}, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialFile {
    pub dim: usize,
    pub entries: Vec<PotentialEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialEntry {
    pub x: Vec<i64>,
    pub v: f64,
}

impl PotentialFile {
    pub fn into_potential<T: Real>(self) -> Result<Potential<T>> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        let mut pot = Potential::new(self.dim);
        for e in self.entries {
            if pot.entries.contains_key(&LatticePoint(e.x.clone())) {
                return Err(Error::invalid(format!("duplicate entry at {:?}", e.x)));
            }
            pot.insert(LatticePoint(e.x), T::lit(e.v))?;
        }
        Ok(pot)
    }
}

/// Weights given by a formula on all of Z^d, plus explicit finite ones.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightFamily<T> {
    /// `c * delta_0`.
    Delta { scale: T },
    /// `c (|x|^2 + 1)^{-1}`.
    Coulomb { scale: T },
    /// `c (|x|^2 + 1)^{-p}`.
    PowerDecay { scale: T, exponent: T },
    /// `|x|^{-2} (log |x|)^{-1/q}` for `|x| > 1`, zero otherwise.
    LogPow { q: T },
    Custom(Potential<T>),
}

impl<T: Real> WeightFamily<T> {
    pub fn name(&self) -> &'static str {
        match self {
            WeightFamily::Delta { .. } => "delta",
            WeightFamily::Coulomb { .. } => "coulomb",
            WeightFamily::PowerDecay { .. } => "powerdecay",
            WeightFamily::LogPow { .. } => "logpow",
            WeightFamily::Custom(_) => "custom",
        }
    }

    pub fn value(&self, x: &[i64]) -> T {
        let r2 = T::lit(norm_sq(x) as f64);
        match self {
            WeightFamily::Delta { scale } => {
                if x.iter().all(|&c| c == 0) {
                    *scale
                } else {
                    T::zero()
                }
            }
            WeightFamily::Coulomb { scale } => *scale / (r2 + T::one()),
            WeightFamily::PowerDecay { scale, exponent } => {
                *scale * (r2 + T::one()).powf(-*exponent)
            }
            WeightFamily::LogPow { q } => logpow_value(x, *q),
            WeightFamily::Custom(v) => v.get(x),
        }
    }

    pub fn is_hyperoctahedral(&self) -> bool {
        match self {
            WeightFamily::Custom(v) => v.is_hyperoctahedral(),
            _ => true,
        }
    }

    pub fn finite_support(&self) -> Option<&Potential<T>> {
        match self {
            WeightFamily::Custom(v) => Some(v),
            _ => None,
        }
    }

    /// The weight restricted to `domain`, as a finitely supported potential.
    pub fn restrict(&self, domain: &BoxDomain) -> Potential<T> {
        if let WeightFamily::Delta { scale } = self {
            return Potential::delta(LatticePoint::origin(domain.dim()), *scale)
                .expect("delta scale is nonnegative");
        }
        if let WeightFamily::Custom(v) = self {
            let mut out = Potential::new(domain.dim());
            for (x, val) in v.iter() {
                if domain.contains(&x.0) {
                    out.insert(x.clone(), val).expect("copied value is valid");
                }
            }
            return out;
        }
        let mut out = Potential::new(domain.dim());
        for i in 0..domain.site_count() {
            let x = domain.point(i);
            let val = self.value(&x.0);
            if val > T::zero() {
                out.entries.insert(x, val);
            }
        }
        out
    }
}

/// `V(x) = |x|^{-2} (log |x|)^{-1/q}` for `|x| > 1`, 0 otherwise.
pub fn logpow_value<T: Real>(x: &[i64], q: T) -> T {
    let r2 = norm_sq(x);
    if r2 <= 1 {
        return T::zero();
    }
    let r2 = T::lit(r2 as f64);
    let log_r = r2.ln() / T::lit(2.0);
    log_r.powf(-T::one() / q) / r2
}

/// A random finitely supported potential: `count` distinct sites drawn
/// uniformly from the box of radius `support_radius`, values uniform in
/// `(0, vmax]`.
pub fn random_potential<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    support_radius: i64,
    count: usize,
    vmax: f64,
) -> Result<Potential<T>> {
    let domain = BoxDomain::new(dim, support_radius)?;
    if count > domain.site_count() {
        return Err(Error::invalid("more support points than sites in the box"));
    }
    let mut v = Potential::new(dim);
    while v.len() < count {
        let idx = rng.gen_range(0..domain.site_count());
        let x = domain.point(idx);
        if v.entries.contains_key(&x) {
            continue;
        }
        let val: f64 = vmax * (1.0 - rng.gen::<f64>());
        v.insert(x, T::lit(val))?;
    }
    Ok(v)
}
