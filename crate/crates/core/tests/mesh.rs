mod common;

use std::collections::BTreeSet;

use common::{cfg, rat};
use hspline::index_algebra::{LatticeBox, MultiIndex, SpaceConfig};
use hspline::mesh::{cell_ancestor_box, cell_bounds, cell_children_box, cell_of_point, CellBox, CellRef};
use hspline::{Error, Rational};
use proptest::prelude::*;

fn cbox(level: u32, lo: &[i64], hi: &[i64]) -> CellBox {
    CellBox { level, bx: LatticeBox::new(MultiIndex::new(lo), MultiIndex::new(hi)) }
}

fn cell(level: u32, i: &[i64]) -> CellRef {
    CellRef::new(level, MultiIndex::new(i))
}

fn cells_of(b: &CellBox) -> BTreeSet<CellRef> {
    b.cells().collect()
}

/// Children by geometry: cells of level `l + 1` inside the parent.
fn geometric_children(c: &SpaceConfig, parent: &CellRef) -> BTreeSet<CellRef> {
    let pb = cell_bounds(c, parent).unwrap();
    let level = parent.level + 1;
    let all = cbox(level, &vec![0; c.d], &vec![c.scale(level).unwrap() - 1; c.d]);
    all.cells()
        .filter(|j| {
            cell_bounds(c, j).unwrap().iter().zip(&pb).all(|((lo, hi), (plo, phi))| plo <= lo && hi <= phi)
        })
        .collect()
}

#[test]
fn children_examples() {
    let c = cfg(2, 2, 1, 1);
    assert_eq!(cell_children_box(&c, &cbox(0, &[0], &[0]), 1).unwrap(), cbox(1, &[0], &[1]));
    assert_eq!(cell_children_box(&c, &cbox(1, &[0], &[1]), 1).unwrap(), cbox(2, &[0], &[3]));

    let c3 = cfg(2, 3, 2, 1);
    let got = cell_children_box(&c3, &cbox(0, &[0, 0], &[0, 0]), 2).unwrap();
    assert_eq!(got, cbox(2, &[0, 0], &[8, 8]));
    let mut stepwise = BTreeSet::new();
    for j in cells_of(&cell_children_box(&c3, &cbox(0, &[0, 0], &[0, 0]), 1).unwrap()) {
        stepwise.extend(cells_of(&cell_children_box(&c3, &CellBox::single(&j), 1).unwrap()));
    }
    assert_eq!(cells_of(&got), stepwise);
}

#[test]
fn children_respect_depth_cap() {
    let c = SpaceConfig::with_max_level(2, 2, 1, 1, 2).unwrap();
    let e = cell_children_box(&c, &cbox(2, &[0], &[0]), 1).unwrap_err();
    assert!(matches!(e, Error::DepthCap { .. }));
    assert!(cell_children_box(&c, &cbox(0, &[0], &[0]), 0).is_err());
}

#[test]
fn ancestor_examples() {
    let c = cfg(2, 2, 1, 1);
    assert_eq!(cell_ancestor_box(&c, &cbox(2, &[1], &[2]), 1).unwrap(), cbox(1, &[0], &[1]));
    assert_eq!(cell_ancestor_box(&c, &cbox(2, &[0], &[3]), 2).unwrap(), cbox(0, &[0], &[0]));
    assert!(matches!(cell_ancestor_box(&c, &cbox(1, &[0], &[1]), 2).unwrap_err(), Error::Level(_)));
}

#[test]
fn ancestors_match_brute_force_ternary_2d() {
    let c = cfg(2, 3, 2, 1);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
    use rand::Rng;
    for _ in 0..60 {
        let level = rng.random_range(1..=3u32);
        let k = rng.random_range(1..=level);
        let top = c.scale(level).unwrap() - 1;
        let (a, b) = (rng.random_range(0..=top), rng.random_range(0..=top));
        let (w, v) = (rng.random_range(0..=3), rng.random_range(0..=3));
        let input = CellBox::clamped(&c, level, LatticeBox::new(MultiIndex::new(&[a, b]), MultiIndex::new(&[a + w, b + v]))).unwrap();
        let got = cells_of(&cell_ancestor_box(&c, &input, k).unwrap());
        let inside = cells_of(&input);
        let coarse = level - k;
        let ctop = c.scale(coarse).unwrap() - 1;
        let want: BTreeSet<CellRef> = cbox(coarse, &[0, 0], &[ctop, ctop])
            .cells()
            .filter(|j| cells_of(&cell_children_box(&c, &CellBox::single(j), k).unwrap()).iter().any(|x| inside.contains(x)))
            .collect();
        assert_eq!(got, want);
    }
}

#[test]
fn cell_of_point_examples() {
    let c = cfg(2, 2, 1, 1);
    assert_eq!(cell_of_point(&c, 1, &[rat(1, 2)]).unwrap(), cell(1, &[1]));
    assert_eq!(cell_of_point(&c, 1, &[rat(1, 1)]).unwrap(), cell(1, &[1]));
    assert_eq!(cell_of_point(&c, 1, &[rat(0, 1)]).unwrap(), cell(1, &[0]));
    let c3 = cfg(2, 3, 1, 1);
    assert_eq!(cell_of_point(&c3, 2, &[rat(4, 9)]).unwrap(), cell(2, &[4]));
}

#[test]
fn cell_of_point_errors() {
    let c = cfg(2, 2, 1, 1);
    assert_eq!(cell_of_point(&c, 1, &[rat(-1, 4)]).unwrap_err(), Error::Domain);
    assert_eq!(cell_of_point(&c, 1, &[rat(5, 4)]).unwrap_err(), Error::Domain);
    assert!(matches!(cell_of_point(&c, 1, &[rat(1, 4), rat(1, 4)]).unwrap_err(), Error::Contract(_)));
}

#[test]
fn clamping_drops_outside_indices() {
    let c = cfg(2, 2, 1, 1);
    let b = CellBox::clamped(&c, 1, LatticeBox::new(MultiIndex::new(&[-3]), MultiIndex::new(&[5]))).unwrap();
    assert_eq!(b, cbox(1, &[0], &[1]));
    assert!(CellBox::clamped(&c, 1, LatticeBox::new(MultiIndex::new(&[2]), MultiIndex::new(&[5]))).unwrap().is_empty());
}

#[test]
fn children_partition_parent() {
    for &(n, d) in &[(2, 1), (3, 1), (2, 2), (3, 2)] {
        let c = cfg(2, n, d, 1);
        for level in 0..=2u32 {
            let top = c.scale(level).unwrap() - 1;
            for p in cbox(level, &vec![0; d], &vec![top; d]).cells() {
                let ch = cells_of(&cell_children_box(&c, &CellBox::single(&p), 1).unwrap());
                assert_eq!(ch, geometric_children(&c, &p));
                // Volumes add up, so together with containment the children tile the parent.
                let vol = |x: &CellRef| -> Rational {
                    cell_bounds(&c, x).unwrap().iter().fold(rat(1, 1), |acc, (lo, hi)| acc * (hi - lo))
                };
                let sum = ch.iter().fold(rat(0, 1), |acc, x| acc + vol(x));
                assert_eq!(sum, vol(&p));
            }
        }
    }
}

#[test]
fn ancestry_duality_exhaustive() {
    for &(n, d) in &[(2, 1), (3, 1), (2, 2)] {
        let c = cfg(2, n, d, 1);
        for coarse in 0..=3u32 {
            for fine in coarse + 1..=3u32 {
                let k = fine - coarse;
                let ct = c.scale(coarse).unwrap() - 1;
                let ft = c.scale(fine).unwrap() - 1;
                for i in cbox(coarse, &vec![0; d], &vec![ct; d]).cells() {
                    let ch = cells_of(&cell_children_box(&c, &CellBox::single(&i), k).unwrap());
                    for j in cbox(fine, &vec![0; d], &vec![ft; d]).cells() {
                        let up = cells_of(&cell_ancestor_box(&c, &CellBox::single(&j), k).unwrap());
                        assert_eq!(ch.contains(&j), up.contains(&i), "{i} vs {j}");
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn children_then_ancestor(n in 2i64..=3, level in 0u32..=3, k in 1u32..=3, a in 0i64..27, w in 0i64..4, single in any::<bool>()) {
        let c = cfg(2, n, 1, 1);
        let top = c.scale(level).unwrap() - 1;
        let lo = a.min(top);
        let hi = if single { lo } else { (lo + w).min(top) };
        let input = cbox(level, &[lo], &[hi]);
        let back = cell_ancestor_box(&c, &cell_children_box(&c, &input, k).unwrap(), k).unwrap();
        prop_assert!(input.bx.is_subset(&back.bx));
        if single {
            prop_assert_eq!(back, input);
        }
    }

    #[test]
    fn point_lies_in_its_cell(n in 2i64..=3, level in 0u32..=4, num in 0i64..=200, den in 1i64..=200) {
        let c = cfg(2, n, 1, 1);
        let x = rat(num.min(den), den);
        let cl = cell_of_point(&c, level, &[x.clone()]).unwrap();
        let (lo, hi) = cell_bounds(&c, &cl).unwrap()[0].clone();
        prop_assert!(lo <= x);
        prop_assert!(x < hi || hi == rat(1, 1));
    }
}
