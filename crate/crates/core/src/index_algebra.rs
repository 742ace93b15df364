//! Integer lattice algebra on multi-indices.
//!
//! The index functions are
//!
//! * `M_m(i) = n*i + m` and its iterate `M_m^k(i) = n^k*i + m*(n^k-1)/(n-1)`,
//! * `D_m(i) = floor((i-m)/n)` and its iterate
//!   `D_m^k(i) = floor((i - m*(n^k-1)/(n-1)) / n^k)`,
//! * `L(i) = D_0^g(i) - p` and `R(i) = D_0^g(i+p)`.
//!
//! All arithmetic is checked; an overflow is reported instead of wrapping.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Signed lattice coordinates, one per axis.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(pub SmallVec<[i64; 4]>);

impl MultiIndex {
    pub fn new(coords: &[i64]) -> Self {
        MultiIndex(SmallVec::from_slice(coords))
    }

    /// Scalar broadcast: the constant tuple `(v, .., v)`.
    pub fn splat(d: usize, v: i64) -> Self {
        MultiIndex(SmallVec::from_elem(v, d))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    pub fn map(&self, f: impl FnMut(&i64) -> i64) -> MultiIndex {
        MultiIndex(self.0.iter().map(f).collect())
    }

    pub fn try_map(&self, mut f: impl FnMut(i64) -> Result<i64>) -> Result<MultiIndex> {
        let mut out = SmallVec::with_capacity(self.0.len());
        for &c in &self.0 {
            out.push(f(c)?);
        }
        Ok(MultiIndex(out))
    }

    /// Adds the scalar `v` to every coordinate.
    pub fn offset(&self, v: i64) -> Result<MultiIndex> {
        self.try_map(|c| c.checked_add(v).ok_or(Error::Overflow("offset")))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(SmallVec::from_vec(v))
    }
}

/// The lattice box `[lo : hi]`. Empty whenever some `lo_k > hi_k`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LatticeBox {
    pub lo: MultiIndex,
    pub hi: MultiIndex,
}

impl LatticeBox {
    pub fn new(lo: MultiIndex, hi: MultiIndex) -> Self {
        debug_assert_eq!(lo.dim(), hi.dim());
        LatticeBox { lo, hi }
    }

    /// The canonical empty box of dimension `d`.
    pub fn empty(d: usize) -> Self {
        LatticeBox {
            lo: MultiIndex::splat(d, 0),
            hi: MultiIndex::splat(d, -1),
        }
    }

    /// The box `[lo : hi]^d` from scalar corners.
    pub fn cube(d: usize, lo: i64, hi: i64) -> Self {
        LatticeBox::new(MultiIndex::splat(d, lo), MultiIndex::splat(d, hi))
    }

    pub fn point(i: &MultiIndex) -> Self {
        LatticeBox::new(i.clone(), i.clone())
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.0.iter().zip(self.hi.0.iter()).any(|(a, b)| a > b)
    }

    /// Number of lattice points, `prod(hi_k - lo_k + 1)`.
    pub fn cardinality(&self) -> u128 {
        if self.is_empty() {
            return 0;
        }
        self.lo
            .0
            .iter()
            .zip(self.hi.0.iter())
            .map(|(a, b)| (b - a + 1) as u128)
            .product()
    }

    pub fn contains(&self, i: &MultiIndex) -> bool {
        !self.is_empty() && self.lo.le(i) && i.le(&self.hi)
    }

    /// `self` is a subset of `other` as point sets.
    pub fn is_subset(&self, other: &LatticeBox) -> bool {
        self.is_empty() || (other.lo.le(&self.lo) && self.hi.le(&other.hi) && !other.is_empty())
    }

    pub fn intersect(&self, other: &LatticeBox) -> LatticeBox {
        if self.is_empty() || other.is_empty() {
            return LatticeBox::empty(self.dim());
        }
        let lo = MultiIndex(self.lo.0.iter().zip(other.lo.0.iter()).map(|(a, b)| *a.max(b)).collect());
        let hi = MultiIndex(self.hi.0.iter().zip(other.hi.0.iter()).map(|(a, b)| *a.min(b)).collect());
        let r = LatticeBox::new(lo, hi);
        if r.is_empty() {
            LatticeBox::empty(self.dim())
        } else {
            r
        }
    }

    /// Points in lexicographic order.
    pub fn iter(&self) -> BoxIter {
        BoxIter {
            next: if self.is_empty() { None } else { Some(self.lo.clone()) },
            bx: self.clone(),
        }
    }
}

impl fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "[]")
        } else {
            write!(f, "[{}:{}]", self.lo, self.hi)
        }
    }
}

/// Lexicographic iterator over the points of a box.
pub struct BoxIter {
    bx: LatticeBox,
    next: Option<MultiIndex>,
}

impl Iterator for BoxIter {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        let d = nxt.dim();
        let mut axis = d;
        while axis > 0 {
            axis -= 1;
            if nxt.0[axis] < self.bx.hi.0[axis] {
                nxt.0[axis] += 1;
                for later in axis + 1..d {
                    nxt.0[later] = self.bx.lo.0[later];
                }
                self.next = Some(nxt);
                return Some(cur);
            }
        }
        Some(cur)
    }
}

/// Global parameters of the multilevel structure.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct SpaceConfig {
    /// Order of the B-splines (degree `p = m - 1`).
    pub m: i64,
    /// Arity: every cell splits into `n` per axis.
    pub n: i64,
    /// Dimension of the domain.
    pub d: usize,
    /// Gap bound used by gap-controlled refinement.
    pub g: u32,
    /// Largest admissible level.
    #[serde(skip)]
    pub max_level: u32,
}

#[derive(Deserialize)]
struct RawSpaceConfig {
    m: i64,
    n: i64,
    d: usize,
    g: u32,
    max_level: Option<u32>,
}

impl<'de> Deserialize<'de> for SpaceConfig {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSpaceConfig::deserialize(de)?;
        let cfg = match raw.max_level {
            Some(ml) => SpaceConfig::with_max_level(raw.m, raw.n, raw.d, raw.g, ml),
            None => SpaceConfig::new(raw.m, raw.n, raw.d, raw.g),
        };
        cfg.map_err(serde::de::Error::custom)
    }
}

/// Budget on `n^level` so that every derived index fits comfortably in `i64`.
const LEVEL_BUDGET_BITS: u32 = 40;

impl SpaceConfig {
    /// Builds a configuration with the default level cap (`n^max_level <= 2^40`).
    pub fn new(m: i64, n: i64, d: usize, g: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("arity n must be at least 2, got {n}")));
        }
        let mut ml = 0u32;
        let mut pw: i64 = 1;
        while let Some(next) = pw.checked_mul(n) {
            if next > 1i64 << LEVEL_BUDGET_BITS {
                break;
            }
            pw = next;
            ml += 1;
        }
        Self::with_max_level(m, n, d, g, ml)
    }

    pub fn with_max_level(m: i64, n: i64, d: usize, g: u32, max_level: u32) -> Result<Self> {
        if m < 2 {
            return Err(Error::Config(format!("order m must be at least 2, got {m}")));
        }
        if n < 2 {
            return Err(Error::Config(format!("arity n must be at least 2, got {n}")));
        }
        if d < 1 {
            return Err(Error::Config("dimension d must be at least 1".into()));
        }
        if g < 1 {
            return Err(Error::Config("gap bound g must be at least 1".into()));
        }
        if m > 64 {
            return Err(Error::Config(format!("order m = {m} is unreasonably large")));
        }
        // n^(max_level+1) * 2m must stay representable.
        let top = pow(n, max_level + 1)
            .and_then(|v| v.checked_mul(2 * m).ok_or(Error::Overflow("level cap")))
            .map_err(|_| Error::Config(format!("max_level {max_level} overflows 64-bit indices for n = {n}")))?;
        if top > i64::MAX / 4 {
            return Err(Error::Config(format!("max_level {max_level} overflows 64-bit indices for n = {n}")));
        }
        Ok(SpaceConfig { m, n, d, g, max_level })
    }

    /// Degree `p = m - 1`.
    pub fn p(&self) -> i64 {
        self.m - 1
    }

    /// `s = n - 1`.
    pub fn s(&self) -> i64 {
        self.n - 1
    }

    pub fn check_level(&self, level: u32) -> Result<()> {
        if level > self.max_level {
            Err(Error::DepthCap { level, max_level: self.max_level })
        } else {
            Ok(())
        }
    }

    /// `n^level`, checked.
    pub fn scale(&self, level: u32) -> Result<i64> {
        pow(self.n, level)
    }
}

/// Floor division for a positive divisor, exact for negative numerators.
pub fn floor_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

/// Ceiling division for a positive divisor.
pub fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    -((-a).div_euclid(b))
}

/// `n^k`, checked.
pub fn pow(n: i64, k: u32) -> Result<i64> {
    n.checked_pow(k).ok_or(Error::Overflow("power"))
}

/// `(n^k - 1) / (n - 1)`, i.e. `1 + n + .. + n^(k-1)`.
fn geometric(n: i64, k: u32) -> Result<i64> {
    Ok((pow(n, k)? - 1) / (n - 1))
}

/// Scalar `M_m^k(i)`.
pub fn m_iter1(n: i64, m: i64, k: u32, i: i64) -> Result<i64> {
    let nk = pow(n, k)?;
    let shift = m.checked_mul(geometric(n, k)?).ok_or(Error::Overflow("M shift"))?;
    nk.checked_mul(i)
        .and_then(|v| v.checked_add(shift))
        .ok_or(Error::Overflow("M iterate"))
}

/// Scalar `D_m^k(i)`.
pub fn d_iter1(n: i64, m: i64, k: u32, i: i64) -> Result<i64> {
    let nk = pow(n, k)?;
    let shift = m.checked_mul(geometric(n, k)?).ok_or(Error::Overflow("D shift"))?;
    let num = i.checked_sub(shift).ok_or(Error::Overflow("D iterate"))?;
    Ok(floor_div(num, nk))
}

/// `M_m^k(i)` componentwise.
pub fn m_iter(cfg: &SpaceConfig, m: i64, k: u32, i: &MultiIndex) -> Result<MultiIndex> {
    i.try_map(|c| m_iter1(cfg.n, m, k, c))
}

/// `D_m^k(i)` componentwise.
pub fn d_iter(cfg: &SpaceConfig, m: i64, k: u32, i: &MultiIndex) -> Result<MultiIndex> {
    i.try_map(|c| d_iter1(cfg.n, m, k, c))
}

/// Selects `L` or `R`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    L,
    R,
}

/// Scalar `L^k(i)` or `R^k(i)` for gap `g` and degree `p`.
pub fn lr_iter1(n: i64, g: u32, p: i64, which: Side, k: u32, i: i64) -> Result<i64> {
    let mut v = i;
    for _ in 0..k {
        v = match which {
            Side::L => d_iter1(n, 0, g, v)?.checked_sub(p).ok_or(Error::Overflow("L"))?,
            Side::R => d_iter1(n, 0, g, v.checked_add(p).ok_or(Error::Overflow("R"))?)?,
        };
    }
    Ok(v)
}

/// `L^k(i)` or `R^k(i)` componentwise, using `g` and `p` from the configuration.
pub fn lr_iter(cfg: &SpaceConfig, which: Side, k: u32, i: &MultiIndex) -> Result<MultiIndex> {
    i.try_map(|c| lr_iter1(cfg.n, cfg.g, cfg.p(), which, k, c))
}

/// Kind of an iterated index function.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum MapKind {
    M,
    D,
}

/// The index function `M_m^k` or `D_m^k`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct IndexMap {
    pub kind: MapKind,
    pub m: i64,
    pub k: u32,
}

impl IndexMap {
    pub fn mk(m: i64, k: u32) -> Self {
        IndexMap { kind: MapKind::M, m, k }
    }

    pub fn dk(m: i64, k: u32) -> Self {
        IndexMap { kind: MapKind::D, m, k }
    }

    pub fn apply1(&self, n: i64, i: i64) -> Result<i64> {
        match self.kind {
            MapKind::M => m_iter1(n, self.m, self.k, i),
            MapKind::D => d_iter1(n, self.m, self.k, i),
        }
    }

    pub fn apply(&self, cfg: &SpaceConfig, i: &MultiIndex) -> Result<MultiIndex> {
        i.try_map(|c| self.apply1(cfg.n, c))
    }
}

/// Image of a box under the box function `i -> [P(i) : Q(i)]`, which must be
/// box preserving: `m' - m >= n - 1` for an M-pair, `m - m' >= 0` for a D-pair.
pub fn box_image(cfg: &SpaceConfig, bx: &LatticeBox, lo_map: IndexMap, hi_map: IndexMap) -> Result<LatticeBox> {
    if lo_map.kind != hi_map.kind || lo_map.k != hi_map.k {
        return Err(Error::Contract("box image maps must be of the same kind and iteration count".into()));
    }
    let ok = match lo_map.kind {
        MapKind::M => hi_map.m - lo_map.m >= cfg.n - 1,
        MapKind::D => lo_map.m - hi_map.m >= 0,
    };
    if !ok {
        return Err(Error::Contract(format!(
            "map pair ({:?}, m={}) / ({:?}, m={}) is not box preserving for n = {}",
            lo_map.kind, lo_map.m, hi_map.kind, hi_map.m, cfg.n
        )));
    }
    if bx.is_empty() {
        return Ok(LatticeBox::empty(bx.dim()));
    }
    Ok(LatticeBox::new(lo_map.apply(cfg, &bx.lo)?, hi_map.apply(cfg, &bx.hi)?))
}

/// All `j` with `M_m^k(j) <= i <= M_{m'}^k(j)` for some `i` in `target`,
/// namely `[D^k_{m'-(n-1)}(lo) : D^k_m(hi)]`.
pub fn dual_box(cfg: &SpaceConfig, k: u32, m: i64, m_prime: i64, target: &LatticeBox) -> Result<LatticeBox> {
    if k < 1 {
        return Err(Error::Contract("dual_box requires k >= 1".into()));
    }
    if target.is_empty() {
        return Ok(LatticeBox::empty(target.dim()));
    }
    let lo = d_iter(cfg, m_prime - (cfg.n - 1), k, &target.lo)?;
    let hi = d_iter(cfg, m, k, &target.hi)?;
    let r = LatticeBox::new(lo, hi);
    Ok(if r.is_empty() { LatticeBox::empty(target.dim()) } else { r })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: i64) -> SpaceConfig {
        SpaceConfig::new(2, n, 1, 1).unwrap()
    }

    #[test]
    fn floor_semantics() {
        assert_eq!(floor_div(-1, 3), -1);
        assert_eq!(floor_div(-3, 3), -1);
        assert_eq!(floor_div(-4, 3), -2);
        assert_eq!(ceil_div(-4, 3), -1);
        assert_eq!(ceil_div(4, 3), 2);
    }

    #[test]
    fn box_iteration_order() {
        let b = LatticeBox::new(MultiIndex::new(&[0, 1]), MultiIndex::new(&[1, 2]));
        let pts: Vec<_> = b.iter().map(|p| p.0.to_vec()).collect();
        assert_eq!(pts, vec![vec![0, 1], vec![0, 2], vec![1, 1], vec![1, 2]]);
        assert_eq!(LatticeBox::empty(2).iter().count(), 0);
    }

    #[test]
    fn box_image_rejects_non_preserving() {
        let c = cfg(2);
        let b = LatticeBox::cube(1, 0, 1);
        assert!(box_image(&c, &b, IndexMap::mk(0, 1), IndexMap::mk(0, 1)).is_err());
        assert!(box_image(&c, &b, IndexMap::dk(0, 1), IndexMap::dk(1, 1)).is_err());
        assert!(box_image(&c, &b, IndexMap::mk(0, 1), IndexMap::dk(0, 1)).is_err());
    }

    #[test]
    fn default_level_cap() {
        assert_eq!(cfg(2).max_level, 40);
        assert_eq!(cfg(3).max_level, 25);
    }
}
