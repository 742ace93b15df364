//! Lineages and the hierarchical generators they determine.
//!
//! A lineage `L` is a finite set of multilevel B-splines with
//! `L ⊆ B^0 ∪ ch(L)`. Its candidate set is `C = B^0 ∪ ch(L)` and its generator
//! is `H = C \ L`. The lineage is the only mutable state; generators, active
//! cells and coefficients are derived snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::bspline_space::{
    cell_support, children, parents, spline_range, subdivision_mask, Coefficients, Family, SplineBox,
    SplineRef, SplineSet, overlap_set,
};
use crate::error::{Error, Result};
use crate::index_algebra::{MultiIndex, SpaceConfig};
use crate::Rational;

/// The refined set `L` together with its cached candidate set `C`.
#[derive(Clone, Debug)]
pub struct Lineage {
    cfg: SpaceConfig,
    refined: SplineSet,
    candidates: SplineSet,
    version: u64,
    pou: OnceLock<Coefficients>,
}

impl PartialEq for Lineage {
    fn eq(&self, other: &Self) -> bool {
        self.cfg == other.cfg && self.refined == other.refined
    }
}

impl Eq for Lineage {}

impl Lineage {
    /// The empty lineage; its generator is `B^0`.
    pub fn new(cfg: SpaceConfig) -> Self {
        let mut candidates = SplineSet::new();
        let b0 = SplineBox { level: 0, bx: spline_range(&cfg, 0).expect("level 0 is always valid") };
        candidates.insert_box(&b0);
        Lineage { cfg, refined: SplineSet::new(), candidates, version: 0, pou: OnceLock::new() }
    }

    pub fn cfg(&self) -> &SpaceConfig {
        &self.cfg
    }

    /// `L`.
    pub fn refined(&self) -> &SplineSet {
        &self.refined
    }

    /// `C = B^0 ∪ ch(L)`.
    pub fn candidates(&self) -> &SplineSet {
        &self.candidates
    }

    /// Incremented on every mutation.
    pub fn version(&self) -> u64 {
        self.version
    }

    /// `min { l : L^l = ∅ }`.
    pub fn depth(&self) -> u32 {
        self.refined.first_empty_level()
    }

    pub fn is_refined(&self, phi: &SplineRef) -> bool {
        self.refined.contains(phi)
    }

    /// Membership in `H = C \ L`.
    pub fn in_generator(&self, phi: &SplineRef) -> bool {
        self.candidates.contains(phi) && !self.refined.contains(phi)
    }

    /// `#H`.
    pub fn generator_len(&self) -> usize {
        self.candidates.len() - self.refined.len()
    }

    /// The generator as a query family.
    pub fn generator_family(&self) -> Family<'_> {
        Family::Difference(&self.candidates, &self.refined)
    }

    /// `H^level`, sorted.
    pub fn generator_level(&self, level: u32) -> impl Iterator<Item = SplineRef> + '_ {
        self.candidates
            .level(level)
            .iter()
            .filter(move |i| !self.refined.level(level).contains(*i))
            .map(move |i| SplineRef::new(level, i.clone()))
    }

    /// All of `H` in canonical order.
    pub fn generator_iter(&self) -> impl Iterator<Item = SplineRef> + '_ {
        self.candidates.iter().filter(|phi| !self.refined.contains(phi))
    }

    /// Moves `phi` from `H` into `L` and adds its children to `C`. Returns
    /// the children that were not candidates before.
    ///
    /// The caller guarantees `phi ∈ H`.
    pub(crate) fn refine_member(&mut self, phi: &SplineRef) -> Result<Vec<SplineRef>> {
        debug_assert!(self.in_generator(phi));
        let ch = children(&self.cfg, phi)?;
        self.refined.insert(phi.clone());
        let mut added = Vec::new();
        for c in ch.members() {
            if self.candidates.insert(c.clone()) {
                added.push(c);
            }
        }
        self.touch();
        Ok(added)
    }

    /// Replaces the contents by `other`, keeping the version monotone.
    pub(crate) fn replace_with(&mut self, other: Lineage) {
        let v = self.version;
        *self = other;
        self.version = v + 1;
        self.pou = OnceLock::new();
    }

    fn touch(&mut self) {
        self.version += 1;
        self.pou = OnceLock::new();
    }

    /// Immutable snapshot of the generator.
    pub fn generator(&self) -> GeneratorView {
        GeneratorView { set: self.generator_iter().collect(), depth: self.depth() }
    }

    /// Partition-of-unity coefficients, cached per version.
    pub fn partition_of_unity(&self) -> Result<&Coefficients> {
        if let Some(c) = self.pou.get() {
            return Ok(c);
        }
        let c = partition_of_unity(self)?;
        Ok(self.pou.get_or_init(|| c))
    }
}

/// Snapshot of `H` with per-level sets.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneratorView {
    set: SplineSet,
    depth: u32,
}

impl GeneratorView {
    pub fn set(&self) -> &SplineSet {
        &self.set
    }

    pub fn level(&self, level: u32) -> &BTreeSet<MultiIndex> {
        self.set.level(level)
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn contains(&self, phi: &SplineRef) -> bool {
        self.set.contains(phi)
    }

    pub fn iter(&self) -> impl Iterator<Item = SplineRef> + '_ {
        self.set.iter()
    }

    pub fn to_vec(&self) -> Vec<SplineRef> {
        self.set.iter().collect()
    }
}

/// Builds a lineage from raw per-level sets, checking `L ⊆ B^0 ∪ ch(L)`.
pub fn validate_lineage(cfg: &SpaceConfig, raw: &SplineSet) -> Result<Lineage> {
    for phi in raw.iter() {
        if phi.index.dim() != cfg.d {
            return Err(Error::OutOfRange(format!("{phi} has dimension {}, expected {}", phi.index.dim(), cfg.d)));
        }
        cfg.check_level(phi.level)?;
        if !spline_range(cfg, phi.level)?.contains(&phi.index) {
            return Err(Error::OutOfRange(phi.to_string()));
        }
        if phi.level > 0 {
            let pb = parents(cfg, &phi)?;
            if raw.members_in_box(&pb).is_empty() {
                return Err(Error::Orphan(phi));
            }
        }
    }
    let mut lin = Lineage::new(*cfg);
    for phi in raw.iter() {
        // Level-major order puts every parent first, so phi is in H here.
        lin.refine_member(&phi)?;
    }
    Ok(lin)
}

/// Active cells per level.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ActiveCellSet {
    pub levels: Vec<BTreeSet<MultiIndex>>,
}

impl ActiveCellSet {
    pub fn level(&self, level: u32) -> Option<&BTreeSet<MultiIndex>> {
        self.levels.get(level as usize)
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Union of the cell supports of a level set.
pub fn support_cells(cfg: &SpaceConfig, level: u32, set: &BTreeSet<MultiIndex>) -> Result<BTreeSet<MultiIndex>> {
    let mut out = BTreeSet::new();
    for i in set {
        let cb = cell_support(cfg, &SplineRef::new(level, i.clone()))?;
        out.extend(cb.bx.iter());
    }
    Ok(out)
}

/// `A = I(C) \ I(L)`, level by level.
pub fn active_cells(lin: &Lineage) -> Result<ActiveCellSet> {
    let cfg = lin.cfg();
    let mut levels = Vec::new();
    for l in 0..lin.candidates().num_levels() {
        let c = support_cells(cfg, l, lin.candidates().level(l))?;
        let r = support_cells(cfg, l, lin.refined().level(l))?;
        levels.push(c.difference(&r).cloned().collect());
    }
    Ok(ActiveCellSet { levels })
}

/// Result of the absorbing test.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Absorbing {
    Yes,
    /// A generator function whose cell support is covered by refined
    /// functions of its own level.
    No(SplineRef),
}

impl Absorbing {
    pub fn holds(&self) -> bool {
        matches!(self, Absorbing::Yes)
    }
}

/// Members of `H^level` totally overlapped by `L^level`, given `L^level`
/// explicitly (used by the absorbing test and by AbsRefine).
pub fn covered_members<'a>(
    cfg: &SpaceConfig,
    level: u32,
    pool: impl Iterator<Item = &'a MultiIndex>,
    refined: &BTreeSet<MultiIndex>,
) -> Result<Vec<SplineRef>> {
    let cover = support_cells(cfg, level, refined)?;
    let mut out = Vec::new();
    if cover.is_empty() {
        return Ok(out);
    }
    for i in pool {
        if refined.contains(i) {
            continue;
        }
        let phi = SplineRef::new(level, i.clone());
        let cb = cell_support(cfg, &phi)?;
        if cb.bx.iter().all(|c| cover.contains(&c)) {
            out.push(phi);
        }
    }
    Ok(out)
}

/// No `phi ∈ H` has `I(phi) ⊆ I(L^{l_phi})`.
pub fn is_absorbing(lin: &Lineage) -> Result<Absorbing> {
    let cfg = lin.cfg();
    for l in 0..lin.depth() {
        let hit = covered_members(cfg, l, lin.candidates().level(l).iter(), lin.refined().level(l))?;
        if let Some(w) = hit.into_iter().next() {
            return Ok(Absorbing::No(w));
        }
    }
    Ok(Absorbing::Yes)
}

/// Positive coefficients `c` with `Σ c_phi phi = 1` on the domain, obtained
/// by pushing the unit coefficients of `B^0` down through the refined
/// functions with the subdivision mask.
pub fn partition_of_unity(lin: &Lineage) -> Result<Coefficients> {
    let cfg = lin.cfg();
    let mask = subdivision_mask(cfg)?;
    let mut acc: BTreeMap<SplineRef, Rational> = BTreeMap::new();
    for i in lin.candidates().level(0) {
        acc.insert(SplineRef::new(0, i.clone()), Rational::one());
    }
    for l in 0..lin.depth() {
        for i in lin.refined().level(l) {
            let phi = SplineRef::new(l, i.clone());
            let c = acc.remove(&phi).ok_or_else(|| Error::Internal(format!("{phi} received no coefficient")))?;
            for child in children(cfg, &phi)?.members() {
                let k = MultiIndex::from(
                    child.index.coords().iter().zip(phi.index.coords()).map(|(a, b)| a - cfg.n * b).collect::<Vec<_>>(),
                );
                let w = &c * mask.coeff(&k);
                let e = acc.entry(child).or_insert_with(Rational::zero);
                *e += w;
            }
        }
    }
    Ok(acc)
}

/// Largest `k` with `O(phi, -k, H) ≠ ∅`.
pub fn gap_of_function(lin: &Lineage, phi: &SplineRef) -> Result<u32> {
    if !lin.in_generator(phi) {
        return Err(Error::NotInGenerator(phi.clone()));
    }
    let fam = lin.generator_family();
    for k in (1..=phi.level).rev() {
        if !overlap_set(lin.cfg(), std::slice::from_ref(phi), -(k as i64), fam)?.is_empty() {
            return Ok(k);
        }
    }
    Ok(0)
}

/// Maximum gap over `H`, with a function attaining it.
pub fn gap_of_generator(lin: &Lineage) -> Result<(u32, Option<SplineRef>)> {
    let mut best = (0, None);
    for phi in lin.generator_iter() {
        if phi.level <= best.0 {
            continue;
        }
        let g = gap_of_function(lin, &phi)?;
        if g > best.0 {
            best = (g, Some(phi));
        }
    }
    Ok(best)
}

/// `Some(R)` with `R = L* \ L` when `L ⊆ L*`.
pub fn is_refinement(l_star: &Lineage, l: &Lineage) -> Option<SplineSet> {
    if l.refined().is_subset(l_star.refined()) {
        Some(l_star.refined().difference(l.refined()))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Serialize, Deserialize)]
struct ConfigDoc {
    m: i64,
    n: i64,
    d: usize,
    g: u32,
}

#[derive(Serialize, Deserialize)]
struct LevelDoc {
    level: u32,
    indices: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct LineageDoc {
    #[serde(default = "default_format")]
    format: u32,
    config: ConfigDoc,
    lineage: Vec<LevelDoc>,
}

/// Current lineage file format.
pub const LINEAGE_FORMAT: u32 = 1;

fn default_format() -> u32 {
    LINEAGE_FORMAT
}

/// Canonical compact JSON of a lineage.
pub fn lineage_to_json(lin: &Lineage) -> String {
    let cfg = lin.cfg();
    let doc = LineageDoc {
        format: LINEAGE_FORMAT,
        config: ConfigDoc { m: cfg.m, n: cfg.n, d: cfg.d, g: cfg.g },
        lineage: (0..lin.depth())
            .map(|l| LevelDoc {
                level: l,
                indices: lin.refined().level(l).iter().map(|i| i.coords().to_vec()).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("lineage documents always serialize")
}

/// Parses and validates a lineage document. `max_level` overrides the
/// default level cap of the configuration.
pub fn lineage_from_json(text: &str, max_level: Option<u32>) -> Result<Lineage> {
    let doc: LineageDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if doc.format != LINEAGE_FORMAT {
        return Err(Error::Parse(format!("unsupported lineage format {}", doc.format)));
    }
    let c = &doc.config;
    let cfg = match max_level {
        Some(ml) => SpaceConfig::with_max_level(c.m, c.n, c.d, c.g, ml)?,
        None => SpaceConfig::new(c.m, c.n, c.d, c.g)?,
    };
    let mut raw = SplineSet::new();
    for lv in doc.lineage {
        for idx in lv.indices {
            raw.insert(SplineRef::new(lv.level, MultiIndex::from(idx)));
        }
    }
    validate_lineage(&cfg, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_lineage_generator_is_level_zero() {
        let cfg = SpaceConfig::new(2, 2, 1, 1).unwrap();
        let lin = Lineage::new(cfg);
        let h = lin.generator().to_vec();
        assert_eq!(h, vec![SplineRef::at(0, -1), SplineRef::at(0, 0)]);
        assert_eq!(lin.depth(), 0);
    }

    #[test]
    fn orphan_is_reported() {
        let cfg = SpaceConfig::new(2, 2, 1, 1).unwrap();
        let raw: SplineSet = [SplineRef::at(1, 0)].into_iter().collect();
        assert_eq!(validate_lineage(&cfg, &raw).unwrap_err(), Error::Orphan(SplineRef::at(1, 0)));
    }
}
