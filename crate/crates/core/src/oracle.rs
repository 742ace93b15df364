//! Exact verification by brute force.
//!
//! Nothing here reuses the box formulas of the fast paths: linear algebra
//! runs on exact collocation matrices, gaps are computed from support
//! intervals, and least elements come from exhaustive enumeration.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_traits::Zero;
use serde::Serialize;

use crate::bspline_space::{cell_support, master_rational, SplineRef, SplineSet};
use crate::error::{Error, Result};
use crate::hierarchy::Lineage;
use crate::index_algebra::{floor_div, LatticeBox, MultiIndex, SpaceConfig};
use crate::linalg::{integer_row, Echelon};
use crate::mesh::{cell_ancestor_box, CellBox, CellRef};
use crate::Rational;

// ---------------------------------------------------------------------------
// Collocation

/// Collocation matrix of a function set: rows are points inside the leaves
/// of the coarsest cell tree on whose leaves every column is polynomial.
pub struct CollocationSystem {
    cfg: SpaceConfig,
    columns: Vec<SplineRef>,
    leaves: Vec<CellRef>,
    per_axis: usize,
    lookup: HashMap<SplineRef, usize>,
}

impl CollocationSystem {
    /// `m + 1` points per axis and leaf.
    pub fn new(cfg: &SpaceConfig, columns: &[SplineRef]) -> Result<Self> {
        Self::with_points(cfg, columns, cfg.m as usize + 1)
    }

    pub fn with_points(cfg: &SpaceConfig, columns: &[SplineRef], per_axis: usize) -> Result<Self> {
        if per_axis < cfg.m as usize {
            return Err(Error::Contract(format!("{per_axis} points per axis cannot resolve order {}", cfg.m)));
        }
        let mut lookup = HashMap::new();
        for (c, phi) in columns.iter().enumerate() {
            if lookup.insert(phi.clone(), c).is_some() {
                return Err(Error::Contract(format!("duplicate column {phi}")));
            }
        }
        let leaves = leaves_for(cfg, columns)?;
        Ok(CollocationSystem { cfg: *cfg, columns: columns.to_vec(), leaves, per_axis, lookup })
    }

    pub fn columns(&self) -> &[SplineRef] {
        &self.columns
    }

    pub fn leaves(&self) -> &[CellRef] {
        &self.leaves
    }

    /// Feeds every row into `sink`; stops early when `sink` returns `false`.
    fn for_each_row(&self, mut sink: impl FnMut(Vec<(usize, Rational)>) -> bool) -> Result<()> {
        let cfg = &self.cfg;
        let d = cfg.d;
        let q = self.per_axis as i64;
        for leaf in &self.leaves {
            // Columns alive on this leaf, with their one-axis value tables.
            let mut alive: Vec<(usize, Vec<Vec<Rational>>)> = Vec::new();
            let leaf_scale = cfg.scale(leaf.level)?;
            for lam in 0..=leaf.level {
                let f = cfg.scale(leaf.level - lam)?;
                let anc = leaf.index.map(|&c| floor_div(c, f));
                let bx = LatticeBox::new(anc.offset(-cfg.p())?, anc.clone());
                for j in bx.iter() {
                    let phi = SplineRef::new(lam, j);
                    let Some(&col) = self.lookup.get(&phi) else { continue };
                    let lam_scale = BigInt::from(cfg.scale(lam)?);
                    let mut table = Vec::with_capacity(d);
                    for a in 0..d {
                        let mut vals = Vec::with_capacity(self.per_axis);
                        for t in 0..q {
                            // x = (c + (2t+1)/(2q)) / n^L
                            let x = Rational::new(
                                BigInt::from(leaf.index.coords()[a]) * (2 * q) + (2 * t + 1),
                                BigInt::from(2 * q) * leaf_scale,
                            );
                            let u = x * Rational::from_integer(lam_scale.clone())
                                - Rational::from_integer(BigInt::from(phi.index.coords()[a]));
                            vals.push(master_rational(cfg.m, &u));
                        }
                        table.push(vals);
                    }
                    alive.push((col, table));
                }
            }
            if alive.is_empty() {
                continue;
            }
            let pts = LatticeBox::cube(d, 0, q - 1);
            for pt in pts.iter() {
                let mut row = Vec::with_capacity(alive.len());
                for (col, table) in &alive {
                    let mut v = table[0][pt.coords()[0] as usize].clone();
                    for a in 1..d {
                        if v.is_zero() {
                            break;
                        }
                        v *= &table[a][pt.coords()[a] as usize];
                    }
                    if !v.is_zero() {
                        row.push((*col, v));
                    }
                }
                row.sort_by_key(|e| e.0);
                if !sink(row) {
                    return Ok(());
                }
            }
        }
        Ok(())
    }

    /// Exact echelon form of the matrix.
    fn echelon(&self, stop_at_full_rank: bool) -> Result<Echelon> {
        let mut ech = Echelon::new(self.columns.len());
        self.for_each_row(|row| {
            if !row.is_empty() {
                ech.insert(integer_row(&row));
            }
            !(stop_at_full_rank && ech.is_full_rank())
        })?;
        Ok(ech)
    }

    /// Exact rank of the matrix.
    pub fn rank(&self) -> Result<usize> {
        Ok(self.echelon(true)?.rank())
    }
}

/// Leaves of the tree obtained from `I^0_0` by splitting every strict
/// ancestor of a support cell of some column at its own level.
fn leaves_for(cfg: &SpaceConfig, columns: &[SplineRef]) -> Result<Vec<CellRef>> {
    let mut split: HashSet<CellRef> = HashSet::new();
    for phi in columns {
        let sup = cell_support(cfg, phi)?;
        for k in 1..=phi.level {
            let anc = cell_ancestor_box(cfg, &sup, k)?;
            for c in anc.cells() {
                split.insert(c);
            }
        }
    }
    let mut leaves = Vec::new();
    let mut stack = vec![CellRef::new(0, MultiIndex::splat(cfg.d, 0))];
    while let Some(c) = stack.pop() {
        if split.contains(&c) {
            let kids = crate::mesh::cell_children_box(cfg, &CellBox::single(&c), 1)?;
            let mut v: Vec<_> = kids.cells().collect();
            v.reverse();
            stack.extend(v);
        } else {
            leaves.push(c);
        }
    }
    Ok(leaves)
}

/// Result of the rank test.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Independence {
    pub rank: usize,
    pub len: usize,
    /// Nonzero coefficients of a vanishing combination, when dependent.
    pub kernel: Option<Vec<(SplineRef, Rational)>>,
}

impl Independence {
    pub fn independent(&self) -> bool {
        self.rank == self.len
    }
}

/// Exact linear independence test on the domain.
pub fn is_linearly_independent(cfg: &SpaceConfig, funcs: &[SplineRef]) -> Result<Independence> {
    let sys = CollocationSystem::new(cfg, funcs)?;
    let ech = sys.echelon(true)?;
    let kernel = if ech.is_full_rank() {
        None
    } else {
        let v = ech.kernel_vector().ok_or_else(|| Error::Internal("rank deficient without kernel".into()))?;
        Some(
            funcs
                .iter()
                .cloned()
                .zip(v)
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        )
    };
    Ok(Independence { rank: ech.rank(), len: funcs.len(), kernel })
}

/// Coefficients expressing `psi` on the domain in terms of `funcs`, or
/// `None` when `psi` is not in their span.
pub fn span_contains(cfg: &SpaceConfig, funcs: &[SplineRef], psi: &SplineRef) -> Result<Option<Vec<(SplineRef, Rational)>>> {
    let mut cols = funcs.to_vec();
    if let Some(pos) = cols.iter().position(|f| f == psi) {
        let mut coeffs: Vec<_> = funcs.iter().map(|f| (f.clone(), Rational::zero())).collect();
        coeffs[pos].1 = Rational::from_integer(BigInt::from(1));
        return Ok(Some(coeffs));
    }
    cols.push(psi.clone());
    let sys = CollocationSystem::new(cfg, &cols)?;
    let ech = sys.echelon(false)?;
    Ok(ech.solve_last_column().map(|x| funcs.iter().cloned().zip(x).collect()))
}

// ---------------------------------------------------------------------------
// Gaps by definition

/// Open support intervals of `a` (level `la`) and `b` (level `lb <= la`)
/// intersect inside the domain on every axis.
fn supports_meet(cfg: &SpaceConfig, a: &SplineRef, b: &SplineRef) -> Result<bool> {
    let la = a.level;
    let top = cfg.scale(la)?;
    let f = cfg.scale(la - b.level)?;
    for (&i, &j) in a.index.coords().iter().zip(b.index.coords()) {
        let lo = i.max(j * f).max(0);
        let hi = (i + cfg.m).min((j + cfg.m) * f).min(top);
        if lo >= hi {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest `k` such that some member of `h` of level `l_phi - k` shares
/// support with `phi`, scanning every member.
pub fn brute_gap_of_function(cfg: &SpaceConfig, h: &SplineSet, phi: &SplineRef) -> Result<u32> {
    for k in (1..=phi.level).rev() {
        let lvl = phi.level - k;
        for j in h.level(lvl) {
            if supports_meet(cfg, phi, &SplineRef::new(lvl, j.clone()))? {
                return Ok(k);
            }
        }
    }
    Ok(0)
}

/// Maximum of [`brute_gap_of_function`] over `h`.
pub fn brute_gap(cfg: &SpaceConfig, h: &SplineSet) -> Result<u32> {
    let mut best = 0;
    for phi in h.iter() {
        if phi.level > best {
            best = best.max(brute_gap_of_function(cfg, h, &phi)?);
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Exhaustive least elements

/// Family searched by [`brute_force_least_element`].
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SearchFamily {
    /// Absorbing refinements.
    Absorbing,
    /// Refinements that refine `phi` and have gap at most `g`.
    GapWith(SplineRef),
}

/// Outcome of the exhaustive search.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LeastElement {
    Unique(SplineSet),
    Multiple(Vec<SplineSet>),
    None,
}

/// Maximum number of search nodes visited.
pub const SEARCH_CAP: u64 = 1 << 20;
/// Maximum number of free functions on one level.
pub const LEVEL_BITS_CAP: usize = 20;

struct Search<'a> {
    cfg: SpaceConfig,
    base: &'a Lineage,
    family: &'a SearchFamily,
    max_refined_level: u32,
    visited: u64,
    minimal: Vec<SplineSet>,
}

impl Search<'_> {
    fn level_ok(&self, cur: &Lineage, level: u32) -> Result<bool> {
        let refined = cur.refined().level(level);
        let h: Vec<SplineRef> = cur.generator_level(level).collect();
        if matches!(self.family, SearchFamily::Absorbing) && !refined.is_empty() {
            // No generator member of this level may have its whole cell
            // support inside the refined supports.
            let mut cover = HashSet::new();
            for i in refined {
                for c in cell_support(&self.cfg, &SplineRef::new(level, i.clone()))?.bx.iter() {
                    cover.insert(c);
                }
            }
            for phi in &h {
                if cell_support(&self.cfg, phi)?.bx.iter().all(|c| cover.contains(&c)) {
                    return Ok(false);
                }
            }
        }
        if matches!(self.family, SearchFamily::GapWith(_)) {
            let g = self.cfg.g;
            for eta in &h {
                for k in (g + 1)..=level {
                    let lvl = level - k;
                    for xi in cur.generator_level(lvl) {
                        if supports_meet(&self.cfg, eta, &xi)? {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    fn visit(&mut self, cur: Lineage, level: u32) -> Result<()> {
        self.visited += 1;
        if self.visited > SEARCH_CAP {
            return Err(Error::SearchCap(SEARCH_CAP));
        }
        // Everything below contains the current refined set.
        if self.minimal.iter().any(|m| m.is_subset(cur.refined())) {
            return Ok(());
        }
        if level > self.max_refined_level + 1 {
            self.record(cur.refined().clone());
            return Ok(());
        }
        let pool: Vec<SplineRef> = cur.candidates().level(level).iter().map(|i| SplineRef::new(level, i.clone())).collect();
        let mut required: Vec<SplineRef> = self.base.refined().level(level).iter().map(|i| SplineRef::new(level, i.clone())).collect();
        if let SearchFamily::GapWith(phi) = self.family {
            if phi.level == level && !required.contains(phi) {
                required.push(phi.clone());
            }
        }
        for r in &required {
            if !cur.in_generator(r) {
                return Err(Error::Internal(format!("{r} unavailable during search")));
            }
        }
        let optional: Vec<SplineRef> = if level > self.max_refined_level {
            Vec::new()
        } else {
            pool.into_iter().filter(|p| !required.contains(p)).collect()
        };
        if optional.len() > LEVEL_BITS_CAP {
            return Err(Error::SearchCap(1u64 << LEVEL_BITS_CAP));
        }
        for mask in 0u64..(1u64 << optional.len()) {
            let mut next = cur.clone();
            for r in &required {
                next.refine_member(r)?;
            }
            for (b, o) in optional.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    next.refine_member(o)?;
                }
            }
            if self.level_ok(&next, level)? {
                self.visit(next, level + 1)?;
            }
        }
        Ok(())
    }

    fn record(&mut self, x: SplineSet) {
        if self.minimal.iter().any(|m| m.is_subset(&x)) {
            return;
        }
        self.minimal.retain(|m| !x.is_subset(m));
        self.minimal.push(x);
    }
}

/// Least refinement of `lin` in the family, found by enumerating every
/// lineage containing `lin` whose refined levels do not exceed `depth(lin)`.
pub fn brute_force_least_element(family: &SearchFamily, lin: &Lineage) -> Result<LeastElement> {
    if let SearchFamily::GapWith(phi) = family {
        if !lin.in_generator(phi) {
            return Err(Error::NotInGenerator(phi.clone()));
        }
    }
    let mut s = Search {
        cfg: *lin.cfg(),
        base: lin,
        family,
        max_refined_level: lin.depth(),
        visited: 0,
        minimal: Vec::new(),
    };
    s.visit(Lineage::new(*lin.cfg()), 0)?;
    Ok(match s.minimal.len() {
        0 => LeastElement::None,
        1 => LeastElement::Unique(s.minimal.pop().expect("one element")),
        _ => {
            s.minimal.sort_by_key(|m| m.iter().collect::<Vec<_>>());
            LeastElement::Multiple(s.minimal)
        }
    })
}

// ---------------------------------------------------------------------------
// Complexity audit

/// Prefix check of the complexity bound over a run.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct ComplexityAudit {
    /// `C_U / C_L`.
    pub bound: f64,
    /// Largest observed `(#H_R - #H_0) / Σ #M_r`.
    pub worst_ratio: f64,
    /// Prefix length attaining it.
    pub worst_prefix: usize,
    /// Prefixes violating the bound.
    pub violations: Vec<usize>,
    pub passed: bool,
}

/// `steps[r] = (#M_r, #H_{r+1})`.
pub fn complexity_audit(bound: f64, initial_size: usize, steps: &[(usize, usize)]) -> ComplexityAudit {
    let mut marked = 0usize;
    let mut worst = (0.0, 0);
    let mut violations = Vec::new();
    for (r, &(m, size)) in steps.iter().enumerate() {
        marked += m;
        let growth = size as f64 - initial_size as f64;
        if growth > bound * marked as f64 {
            violations.push(r + 1);
        }
        if marked > 0 {
            let ratio = growth / marked as f64;
            if ratio > worst.0 {
                worst = (ratio, r + 1);
            }
        }
    }
    ComplexityAudit {
        bound,
        worst_ratio: worst.0,
        worst_prefix: worst.1,
        passed: violations.is_empty(),
        violations,
    }
}
