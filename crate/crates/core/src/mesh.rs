//! Multilevel n-adic cells of the unit cube.
//!
//! The cell `I^l_i` is the product of `[i_k / n^l, (i_k + 1) / n^l)`, closed on
//! the right at the domain boundary. Valid indices of level `l` form the box
//! `[0 : n^l - 1]^d`, and every cell box produced here is clamped to it.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::index_algebra::{box_image, IndexMap, LatticeBox, MultiIndex, SpaceConfig};
use crate::Rational;

/// A single cell `I^level_index`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CellRef {
    pub level: u32,
    pub index: MultiIndex,
}

impl CellRef {
    pub fn new(level: u32, index: MultiIndex) -> Self {
        CellRef { level, index }
    }
}

impl fmt::Display for CellRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I^{}_{}", self.level, self.index)
    }
}

/// A box of cells of one level.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CellBox {
    pub level: u32,
    pub bx: LatticeBox,
}

impl CellBox {
    /// Builds the box after clamping to the valid range of the level.
    pub fn clamped(cfg: &SpaceConfig, level: u32, bx: LatticeBox) -> Result<Self> {
        let range = cell_range(cfg, level)?;
        Ok(CellBox { level, bx: bx.intersect(&range) })
    }

    pub fn single(cell: &CellRef) -> Self {
        CellBox { level: cell.level, bx: LatticeBox::point(&cell.index) }
    }

    pub fn is_empty(&self) -> bool {
        self.bx.is_empty()
    }

    pub fn cells(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.bx.iter().map(move |i| CellRef::new(self.level, i))
    }
}

impl fmt::Display for CellBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "I^{}{}", self.level, self.bx)
    }
}

/// `[0 : n^level - 1]^d`.
pub fn cell_range(cfg: &SpaceConfig, level: u32) -> Result<LatticeBox> {
    cfg.check_level(level)?;
    Ok(LatticeBox::cube(cfg.d, 0, cfg.scale(level)? - 1))
}

/// `ch^k` of a cell box: `[M_0^k(lo) : M_s^k(hi)]` at level `l + k`.
pub fn cell_children_box(cfg: &SpaceConfig, cells: &CellBox, k: u32) -> Result<CellBox> {
    if k < 1 {
        return Err(Error::Contract("cell_children_box requires k >= 1".into()));
    }
    let level = cells.level.checked_add(k).ok_or(Error::Overflow("level"))?;
    cfg.check_level(level)?;
    let bx = box_image(cfg, &cells.bx, IndexMap::mk(0, k), IndexMap::mk(cfg.s(), k))?;
    CellBox::clamped(cfg, level, bx)
}

/// `ch^-k` of a cell box: `[D_0^k(lo) : D_0^k(hi)]` at level `l - k`.
pub fn cell_ancestor_box(cfg: &SpaceConfig, cells: &CellBox, k: u32) -> Result<CellBox> {
    if k < 1 {
        return Err(Error::Contract("cell_ancestor_box requires k >= 1".into()));
    }
    if k > cells.level {
        return Err(Error::Level(format!("cannot go {k} levels up from level {}", cells.level)));
    }
    let bx = box_image(cfg, &cells.bx, IndexMap::dk(0, k), IndexMap::dk(0, k))?;
    CellBox::clamped(cfg, cells.level - k, bx)
}

/// The cell of `level` containing `x` (half-open, closed at 1).
pub fn cell_of_point(cfg: &SpaceConfig, level: u32, x: &[Rational]) -> Result<CellRef> {
    if x.len() != cfg.d {
        return Err(Error::Contract(format!("point has {} coordinates, expected {}", x.len(), cfg.d)));
    }
    let scale = cfg.scale(level)?;
    let zero = Rational::zero();
    let one = Rational::one();
    let mut idx = Vec::with_capacity(cfg.d);
    for c in x {
        if *c < zero || *c > one {
            return Err(Error::Domain);
        }
        let t = (c * Rational::from_integer(BigInt::from(scale))).floor().to_integer();
        let t: i64 = i64::try_from(t).map_err(|_| Error::Overflow("cell of point"))?;
        idx.push(t.min(scale - 1));
    }
    Ok(CellRef::new(level, MultiIndex::from(idx)))
}

/// Exact coordinate bounds `(lo_k, hi_k)` of a cell.
pub fn cell_bounds(cfg: &SpaceConfig, cell: &CellRef) -> Result<Vec<(Rational, Rational)>> {
    let scale = BigInt::from(cfg.scale(cell.level)?);
    Ok(cell
        .index
        .coords()
        .iter()
        .map(|&i| {
            (
                Rational::new(BigInt::from(i), scale.clone()),
                Rational::new(BigInt::from(i + 1), scale.clone()),
            )
        })
        .collect())
}
