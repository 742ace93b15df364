//! Multilevel cardinal B-splines.
//!
//! `phi^l_i(x) = Q(n^l x - i)` tensorized over axes, where `Q` is the
//! normalized cardinal B-spline of order `m` supported on `[0, m]`. The valid
//! indices of level `l` form `[-p : n^l - 1]^d`.
//!
//! Ancestry, support and overlap queries are box arithmetic only. Results are
//! clamped to the valid index ranges; members dropped by the clamp vanish on
//! the domain.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::index_algebra::{box_image, lr_iter, IndexMap, LatticeBox, MultiIndex, Side, SpaceConfig};
use crate::linalg::{integer_row, Echelon};
use crate::mesh::{CellBox, CellRef};
use crate::Rational;

/// Handle of one B-spline `phi^level_index`. Ordered level-major, then
/// lexicographically by index.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct SplineRef {
    pub level: u32,
    pub index: MultiIndex,
}

impl SplineRef {
    pub fn new(level: u32, index: MultiIndex) -> Self {
        SplineRef { level, index }
    }

    /// 1-D shorthand.
    pub fn at(level: u32, i: i64) -> Self {
        SplineRef { level, index: MultiIndex::new(&[i]) }
    }
}

impl fmt::Display for SplineRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "phi^{}_{}", self.level, self.index)
    }
}

/// A box of B-splines of one level.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SplineBox {
    pub level: u32,
    pub bx: LatticeBox,
}

impl SplineBox {
    pub fn clamped(cfg: &SpaceConfig, level: u32, bx: LatticeBox) -> Result<Self> {
        let range = spline_range(cfg, level)?;
        Ok(SplineBox { level, bx: bx.intersect(&range) })
    }

    pub fn single(phi: &SplineRef) -> Self {
        SplineBox { level: phi.level, bx: LatticeBox::point(&phi.index) }
    }

    pub fn is_empty(&self) -> bool {
        self.bx.is_empty()
    }

    pub fn contains(&self, phi: &SplineRef) -> bool {
        phi.level == self.level && self.bx.contains(&phi.index)
    }

    pub fn members(&self) -> impl Iterator<Item = SplineRef> + '_ {
        self.bx.iter().map(move |i| SplineRef::new(self.level, i))
    }
}

impl fmt::Display for SplineBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "B^{}{}", self.level, self.bx)
    }
}

/// `[-p : n^level - 1]^d`.
pub fn spline_range(cfg: &SpaceConfig, level: u32) -> Result<LatticeBox> {
    cfg.check_level(level)?;
    Ok(LatticeBox::cube(cfg.d, -cfg.p(), cfg.scale(level)? - 1))
}

/// Whether `phi` lies in the valid range of its level.
pub fn is_valid(cfg: &SpaceConfig, phi: &SplineRef) -> bool {
    phi.index.dim() == cfg.d && spline_range(cfg, phi.level).map(|r| r.contains(&phi.index)).unwrap_or(false)
}

/// Per-level sorted sets of spline indices.
#[derive(Clone, Default, Debug)]
pub struct SplineSet {
    levels: Vec<BTreeSet<MultiIndex>>,
}

static EMPTY_LEVEL: BTreeSet<MultiIndex> = BTreeSet::new();

impl SplineSet {
    pub fn new() -> Self {
        SplineSet::default()
    }

    pub fn level(&self, level: u32) -> &BTreeSet<MultiIndex> {
        self.levels.get(level as usize).unwrap_or(&EMPTY_LEVEL)
    }

    /// Number of stored level slots (some may be empty).
    pub fn num_levels(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn contains(&self, phi: &SplineRef) -> bool {
        self.level(phi.level).contains(&phi.index)
    }

    pub fn insert(&mut self, phi: SplineRef) -> bool {
        let l = phi.level as usize;
        if self.levels.len() <= l {
            self.levels.resize_with(l + 1, BTreeSet::new);
        }
        self.levels[l].insert(phi.index)
    }

    pub fn remove(&mut self, phi: &SplineRef) -> bool {
        let l = phi.level as usize;
        let hit = self.levels.get_mut(l).map(|s| s.remove(&phi.index)).unwrap_or(false);
        while self.levels.last().map(|s| s.is_empty()).unwrap_or(false) {
            self.levels.pop();
        }
        hit
    }

    pub fn insert_box(&mut self, sb: &SplineBox) {
        for phi in sb.members() {
            self.insert(phi);
        }
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(|s| s.is_empty())
    }

    /// Smallest level whose set is empty.
    pub fn first_empty_level(&self) -> u32 {
        self.levels.iter().position(|s| s.is_empty()).unwrap_or(self.levels.len()) as u32
    }

    /// Level-major, lexicographic iteration.
    pub fn iter(&self) -> impl Iterator<Item = SplineRef> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(l, s)| s.iter().map(move |i| SplineRef::new(l as u32, i.clone())))
    }

    pub fn is_subset(&self, other: &SplineSet) -> bool {
        self.iter().all(|phi| other.contains(&phi))
    }

    pub fn difference(&self, other: &SplineSet) -> SplineSet {
        self.iter().filter(|phi| !other.contains(phi)).collect()
    }

    pub fn intersection(&self, other: &SplineSet) -> SplineSet {
        self.iter().filter(|phi| other.contains(phi)).collect()
    }

    pub fn union(&self, other: &SplineSet) -> SplineSet {
        let mut out = self.clone();
        for phi in other.iter() {
            out.insert(phi);
        }
        out
    }

    /// Members of the level set of `sb.level` that lie in the box.
    pub fn members_in_box(&self, sb: &SplineBox) -> Vec<SplineRef> {
        let set = self.level(sb.level);
        if sb.is_empty() || set.is_empty() {
            return Vec::new();
        }
        if sb.bx.cardinality() <= set.len() as u128 {
            sb.members().filter(|phi| set.contains(&phi.index)).collect()
        } else {
            set.range(sb.bx.lo.clone()..=sb.bx.hi.clone())
                .filter(|i| sb.bx.contains(i))
                .map(|i| SplineRef::new(sb.level, i.clone()))
                .collect()
        }
    }
}

impl PartialEq for SplineSet {
    fn eq(&self, other: &Self) -> bool {
        let n = self.levels.len().max(other.levels.len()) as u32;
        (0..n).all(|l| self.level(l) == other.level(l))
    }
}

impl Eq for SplineSet {}

impl FromIterator<SplineRef> for SplineSet {
    fn from_iter<T: IntoIterator<Item = SplineRef>>(iter: T) -> Self {
        let mut s = SplineSet::new();
        for phi in iter {
            s.insert(phi);
        }
        s
    }
}

/// The family a query result is intersected with.
#[derive(Clone, Copy, Debug)]
pub enum Family<'a> {
    /// All multilevel B-splines (valid ranges).
    All,
    Set(&'a SplineSet),
    /// Members of the first set that are not in the second.
    Difference(&'a SplineSet, &'a SplineSet),
}

impl Family<'_> {
    fn members_in_box(&self, sb: &SplineBox) -> Vec<SplineRef> {
        match self {
            Family::All => sb.members().collect(),
            Family::Set(s) => s.members_in_box(sb),
            Family::Difference(a, b) => a.members_in_box(sb).into_iter().filter(|phi| !b.contains(phi)).collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation

fn binomial(m: i64, j: i64) -> BigInt {
    let mut r = BigInt::one();
    for t in 0..j {
        r = r * BigInt::from(m - t) / BigInt::from(t + 1);
    }
    r
}

fn factorial(k: i64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, t| acc * BigInt::from(t))
}

/// Master spline `Q(x) = sum_j (-1)^j C(m,j) (x-j)_+^(m-1) / (m-1)!`, exact.
pub fn master_rational(m: i64, x: &Rational) -> Rational {
    if !x.is_positive() && !(m == 1 && x.is_zero()) {
        return Rational::zero();
    }
    if *x >= Rational::from_integer(BigInt::from(m)) {
        return Rational::zero();
    }
    let mut acc = Rational::zero();
    for j in 0..=m {
        let t = x - Rational::from_integer(BigInt::from(j));
        if t.is_negative() {
            break;
        }
        let mut term = Rational::one();
        for _ in 0..m - 1 {
            term *= &t;
        }
        let c = Rational::from_integer(binomial(m, j));
        if j % 2 == 0 {
            acc += c * term;
        } else {
            acc -= c * term;
        }
    }
    acc / Rational::from_integer(factorial(m - 1))
}

/// Master spline by the uniform Cox-de Boor recurrence, in floating point.
pub fn master_f64(m: i64, x: f64) -> f64 {
    if !(0.0..m as f64).contains(&x) {
        return 0.0;
    }
    let m = m as usize;
    let seg = x.floor() as usize;
    let mut b = vec![0.0; m];
    b[seg] = 1.0;
    for k in 2..=m {
        for j in 0..=m - k {
            let t = x - j as f64;
            b[j] = (t * b[j] + (k as f64 - t) * b[j + 1]) / (k - 1) as f64;
        }
    }
    b[0]
}

/// Exact value of `phi` at `x`.
pub fn evaluate(cfg: &SpaceConfig, phi: &SplineRef, x: &[Rational]) -> Result<Rational> {
    let scale = Rational::from_integer(BigInt::from(cfg.scale(phi.level)?));
    let mut v = Rational::one();
    for (xk, &ik) in x.iter().zip(phi.index.coords()) {
        let t = xk * &scale - Rational::from_integer(BigInt::from(ik));
        let q = master_rational(cfg.m, &t);
        if q.is_zero() {
            return Ok(q);
        }
        v *= q;
    }
    Ok(v)
}

/// Floating-point value of `phi` at `x`.
pub fn evaluate_f64(cfg: &SpaceConfig, phi: &SplineRef, x: &[f64]) -> Result<f64> {
    let scale = cfg.scale(phi.level)? as f64;
    let mut v = 1.0;
    for (xk, &ik) in x.iter().zip(phi.index.coords()) {
        v *= master_f64(cfg.m, xk * scale - ik as f64);
        if v == 0.0 {
            break;
        }
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Two-scale relation

/// One-axis coefficients `c_0 .. c_{sm}` of the two-scale relation
/// `phi^l_i = sum_k c_k phi^{l+1}_{n i + k}`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SubdivisionMask {
    pub m: i64,
    pub n: i64,
    pub coeffs: Vec<Rational>,
}

impl SubdivisionMask {
    /// Tensor coefficient for the offset `k` in `[0 : sm]^d`.
    pub fn coeff(&self, k: &MultiIndex) -> Rational {
        k.coords().iter().map(|&c| self.coeffs[c as usize].clone()).product()
    }
}

/// Coefficients of `n^(1-m) (1 + z + .. + z^(n-1))^m`.
pub fn mask_closed_form(m: i64, n: i64) -> Vec<Rational> {
    let mut poly = vec![BigInt::one()];
    for _ in 0..m {
        let mut next = vec![BigInt::zero(); poly.len() + n as usize - 1];
        for (a, c) in poly.iter().enumerate() {
            for b in 0..n as usize {
                next[a + b] += c;
            }
        }
        poly = next;
    }
    let den = BigInt::from(n).pow((m - 1) as u32);
    poly.into_iter().map(|c| Rational::new(c, den.clone())).collect()
}

/// Solves the two-scale identity `Q(x) = sum_k c_k Q(n x - k)` exactly by
/// collocation on a rational grid inside `(0, m)`.
pub fn mask_by_collocation(m: i64, n: i64) -> Result<Vec<Rational>> {
    let unknowns = ((n - 1) * m + 1) as usize;
    let mut ech = Echelon::new(unknowns + 1);
    let nn = Rational::from_integer(BigInt::from(n));
    for j in 0..n * m {
        for t in 0..=m {
            let x = (Rational::from_integer(BigInt::from(j)) + Rational::new(BigInt::from(2 * t + 1), BigInt::from(2 * (m + 1)))) / &nn;
            let mut row: Vec<(usize, Rational)> = (0..unknowns)
                .map(|k| (k, master_rational(m, &(&x * &nn - Rational::from_integer(BigInt::from(k as i64))))))
                .collect();
            row.push((unknowns, master_rational(m, &x)));
            ech.insert(integer_row(&row));
        }
    }
    if ech.rank() != unknowns {
        return Err(Error::Internal(format!("two-scale collocation for m={m}, n={n} has rank {} of {unknowns}", ech.rank())));
    }
    ech.solve_last_column()
        .ok_or_else(|| Error::Internal(format!("two-scale identity inconsistent for m={m}, n={n}")))
}

fn mask_cache() -> &'static Mutex<HashMap<(i64, i64), Vec<Rational>>> {
    static CACHE: OnceLock<Mutex<HashMap<(i64, i64), Vec<Rational>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Mask for arbitrary `m >= 1`, `n >= 2`: collocation solve cross-checked
/// against the closed form, positivity and axis sum `n`.
pub fn mask_for(m: i64, n: i64) -> Result<SubdivisionMask> {
    if m < 1 || n < 2 {
        return Err(Error::Config(format!("no mask for m={m}, n={n}")));
    }
    if let Some(c) = mask_cache().lock().expect("mask cache").get(&(m, n)) {
        return Ok(SubdivisionMask { m, n, coeffs: c.clone() });
    }
    let solved = mask_by_collocation(m, n)?;
    let closed = mask_closed_form(m, n);
    if solved != closed {
        return Err(Error::Internal(format!("mask mismatch for m={m}, n={n}")));
    }
    if solved.iter().any(|c| !c.is_positive()) {
        return Err(Error::Internal("non-positive mask coefficient".into()));
    }
    let sum: Rational = solved.iter().cloned().sum();
    if sum != Rational::from_integer(BigInt::from(n)) {
        return Err(Error::Internal(format!("mask sums to {sum}, expected {n}")));
    }
    mask_cache().lock().expect("mask cache").insert((m, n), solved.clone());
    Ok(SubdivisionMask { m, n, coeffs: solved })
}

pub fn subdivision_mask(cfg: &SpaceConfig) -> Result<SubdivisionMask> {
    mask_for(cfg.m, cfg.n)
}

// ---------------------------------------------------------------------------
// Ancestry

/// `ch^k`: `[M_0^k(lo) : M_{sm}^k(hi)]` at level `l + k`, clamped.
pub fn spline_children_box(cfg: &SpaceConfig, f: &SplineBox, k: u32) -> Result<SplineBox> {
    if k < 1 {
        return Err(Error::Contract("spline_children_box requires k >= 1".into()));
    }
    let level = f.level.checked_add(k).ok_or(Error::Overflow("level"))?;
    cfg.check_level(level)?;
    let bx = box_image(cfg, &f.bx, IndexMap::mk(0, k), IndexMap::mk(cfg.s() * cfg.m, k))?;
    SplineBox::clamped(cfg, level, bx)
}

/// Children of a single spline.
pub fn children(cfg: &SpaceConfig, phi: &SplineRef) -> Result<SplineBox> {
    spline_children_box(cfg, &SplineBox::single(phi), 1)
}

/// `ch^-k`: `[D_{sp}^k(lo) : D_0^k(hi)]` at level `l - k`, clamped.
pub fn spline_ancestor_box(cfg: &SpaceConfig, f: &SplineBox, k: u32) -> Result<SplineBox> {
    if k < 1 {
        return Err(Error::Contract("spline_ancestor_box requires k >= 1".into()));
    }
    if k > f.level {
        return Err(Error::Level(format!("cannot go {k} levels up from level {}", f.level)));
    }
    let bx = box_image(cfg, &f.bx, IndexMap::dk(cfg.s() * cfg.p(), k), IndexMap::dk(0, k))?;
    SplineBox::clamped(cfg, f.level - k, bx)
}

/// Parents of a single spline.
pub fn parents(cfg: &SpaceConfig, phi: &SplineRef) -> Result<SplineBox> {
    spline_ancestor_box(cfg, &SplineBox::single(phi), 1)
}

// ---------------------------------------------------------------------------
// Cells and splines

/// Cell support `I^l[i : i + p]`, clamped to the domain.
pub fn cell_support(cfg: &SpaceConfig, phi: &SplineRef) -> Result<CellBox> {
    cells_overlapping_box(cfg, &SplineBox::single(phi), 0)
}

/// Union of cell supports of a spline box moved `k` levels.
pub fn cells_overlapping_box(cfg: &SpaceConfig, f: &SplineBox, k: i64) -> Result<CellBox> {
    let level = shifted(f.level, k)?;
    let p = cfg.p();
    let hi_p = f.bx.hi.offset(p)?;
    if f.is_empty() {
        return CellBox::clamped(cfg, level, LatticeBox::empty(cfg.d));
    }
    let bx = match k.signum() {
        0 => LatticeBox::new(f.bx.lo.clone(), hi_p),
        1 => {
            let k = k as u32;
            LatticeBox::new(IndexMap::mk(0, k).apply(cfg, &f.bx.lo)?, IndexMap::mk(cfg.s(), k).apply(cfg, &hi_p)?)
        }
        _ => {
            let k = (-k) as u32;
            LatticeBox::new(IndexMap::dk(0, k).apply(cfg, &f.bx.lo)?, IndexMap::dk(0, k).apply(cfg, &hi_p)?)
        }
    };
    CellBox::clamped(cfg, level, bx)
}

/// `I^k(phi)`.
pub fn cells_overlapping(cfg: &SpaceConfig, phi: &SplineRef, k: i64) -> Result<CellBox> {
    cells_overlapping_box(cfg, &SplineBox::single(phi), k)
}

/// `B^k(cells)`: splines of level `l + k` whose support overlaps the cells.
pub fn splines_over_cells(cfg: &SpaceConfig, cells: &CellBox, k: i64) -> Result<SplineBox> {
    let level = shifted(cells.level, k)?;
    if cells.is_empty() {
        return SplineBox::clamped(cfg, level, LatticeBox::empty(cfg.d));
    }
    let p = cfg.p();
    let (lo, hi) = match k.signum() {
        0 => (cells.bx.lo.clone(), cells.bx.hi.clone()),
        1 => {
            let k = k as u32;
            (IndexMap::mk(0, k).apply(cfg, &cells.bx.lo)?, IndexMap::mk(cfg.s(), k).apply(cfg, &cells.bx.hi)?)
        }
        _ => {
            let k = (-k) as u32;
            (IndexMap::dk(0, k).apply(cfg, &cells.bx.lo)?, IndexMap::dk(0, k).apply(cfg, &cells.bx.hi)?)
        }
    };
    SplineBox::clamped(cfg, level, LatticeBox::new(lo.offset(-p)?, hi))
}

fn shifted(level: u32, k: i64) -> Result<u32> {
    let t = level as i64 + k;
    if t < 0 {
        return Err(Error::Level(format!("level {level} shifted by {k} is negative")));
    }
    u32::try_from(t).map_err(|_| Error::Overflow("level"))
}

// ---------------------------------------------------------------------------
// Distance and balls

/// Oriented distance `rho(phi1, phi2) = i1 / n^(l1 - l2) - i2`, exact.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RhoVector(pub Vec<Rational>);

impl RhoVector {
    /// `max_k |rho_k|`.
    pub fn max_abs(&self) -> Rational {
        self.0.iter().map(|r| r.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// Componentwise `|rho_k| <= bound`.
    pub fn within(&self, bound: &Rational) -> bool {
        self.0.iter().all(|r| r.abs() <= *bound)
    }
}

pub fn rho(cfg: &SpaceConfig, phi1: &SplineRef, phi2: &SplineRef) -> Result<RhoVector> {
    let (num_scale, den_scale) = if phi1.level >= phi2.level {
        (1, cfg.scale(phi1.level - phi2.level)?)
    } else {
        (cfg.scale(phi2.level - phi1.level)?, 1)
    };
    Ok(RhoVector(
        phi1.index
            .coords()
            .iter()
            .zip(phi2.index.coords())
            .map(|(&a, &b)| Rational::new(BigInt::from(a) * num_scale, BigInt::from(den_scale)) - Rational::from_integer(BigInt::from(b)))
            .collect(),
    ))
}

/// `B(phi, D, k)`: splines of level `l + k` with `|rho(phi, psi)| <= D`.
pub fn ball(cfg: &SpaceConfig, phi: &SplineRef, radius: &Rational, k: i64) -> Result<Vec<SplineRef>> {
    let level = shifted(phi.level, k)?;
    let mut lo = Vec::with_capacity(cfg.d);
    let mut hi = Vec::with_capacity(cfg.d);
    for &i in phi.index.coords() {
        // rho = c - j with c = i * n^k
        let c = if k >= 0 {
            Rational::from_integer(BigInt::from(i) * cfg.scale(k as u32)?)
        } else {
            Rational::new(BigInt::from(i), BigInt::from(cfg.scale((-k) as u32)?))
        };
        let a = (&c - radius).ceil().to_integer();
        let b = (&c + radius).floor().to_integer();
        lo.push(a.to_i64().ok_or(Error::Overflow("ball"))?);
        hi.push(b.to_i64().ok_or(Error::Overflow("ball"))?);
    }
    let sb = SplineBox::clamped(cfg, level, LatticeBox::new(lo.into(), hi.into()))?;
    Ok(sb.members().collect())
}

// ---------------------------------------------------------------------------
// Overlap sets

/// `O(F, shift, H) = B^shift(I(F)) ∩ H`.
pub fn overlap_set(cfg: &SpaceConfig, f: &[SplineRef], shift: i64, h: Family<'_>) -> Result<BTreeSet<SplineRef>> {
    let mut out = BTreeSet::new();
    for phi in f {
        if phi.level as i64 + shift < 0 {
            continue;
        }
        let sb = splines_over_cells(cfg, &cell_support(cfg, phi)?, shift)?;
        out.extend(h.members_in_box(&sb));
    }
    Ok(out)
}

/// `O^k(F, shift, H)`, the `k`-fold composition.
pub fn overlap_chain(cfg: &SpaceConfig, f: &[SplineRef], shift: i64, h: Family<'_>, k: u32) -> Result<BTreeSet<SplineRef>> {
    let mut cur: BTreeSet<SplineRef> = f.iter().cloned().collect();
    for _ in 0..k {
        let v: Vec<_> = cur.into_iter().collect();
        cur = overlap_set(cfg, &v, shift, h)?;
    }
    Ok(cur)
}

/// Closed form of the chain over all splines:
/// `O^k(B^l[i:j], -g, B) = B^{l-gk}[L^k(i) : R^k(j)]`, clamped.
pub fn overlap_chain_box(cfg: &SpaceConfig, f: &SplineBox, k: u32) -> Result<SplineBox> {
    let drop = cfg.g.checked_mul(k).ok_or(Error::Overflow("chain level"))?;
    if drop > f.level {
        return Err(Error::Level(format!("chain of length {k} from level {} leaves the hierarchy", f.level)));
    }
    if f.is_empty() {
        return SplineBox::clamped(cfg, f.level - drop, LatticeBox::empty(cfg.d));
    }
    let lo = lr_iter(cfg, Side::L, k, &f.bx.lo)?;
    let hi = lr_iter(cfg, Side::R, k, &f.bx.hi)?;
    SplineBox::clamped(cfg, f.level - drop, LatticeBox::new(lo, hi))
}

/// Clamped in-domain support volume `prod (cells_k) / n^(l d)` of `phi`, in
/// floating point.
pub fn support_volume(cfg: &SpaceConfig, phi: &SplineRef) -> Result<f64> {
    let cells = cell_support(cfg, phi)?;
    let scale = cfg.scale(phi.level)? as f64;
    Ok(cells.bx.cardinality() as f64 / scale.powi(cfg.d as i32))
}

/// Splines of level `level` that are nonzero somewhere in the interior of
/// `cell` (same or coarser level than the spline).
pub fn splines_on_cell(cfg: &SpaceConfig, cell: &CellRef, level: u32) -> Result<SplineBox> {
    splines_over_cells(cfg, &CellBox::single(cell), level as i64 - cell.level as i64)
}

/// Index range of level-`level` splines nonzero near the coordinate `t` of
/// one axis (floating-point helper for sampling).
pub fn active_range_1d(cfg: &SpaceConfig, level: u32, t: f64) -> Result<(i64, i64)> {
    let s = cfg.scale(level)?;
    let u = t * s as f64;
    let c = (u.floor() as i64).clamp(0, s - 1);
    Ok((c - cfg.p(), c))
}

/// Exact one-axis support interval of `phi` in units of level `level >= l_phi`,
/// intersected with the domain: `[i n^(level-l), (i+m) n^(level-l)] ∩ [0, n^level]`.
pub fn support_interval_1d(cfg: &SpaceConfig, level: u32, phi_level: u32, i: i64) -> Result<(i64, i64)> {
    let f = cfg.scale(level - phi_level)?;
    let top = cfg.scale(level)?;
    let a = (i * f).max(0);
    let b = ((i + cfg.m) * f).min(top);
    Ok((a, b))
}

/// Map from splines to exact coefficients.
pub type Coefficients = BTreeMap<SplineRef, Rational>;
