#![allow(dead_code)]

use hspline::bspline_space::{SplineRef, SplineSet};
use hspline::hierarchy::Lineage;
use hspline::index_algebra::{MultiIndex, SpaceConfig};
use hspline::refinement::{abs_refine, ga_refine, single_refine};
use hspline::Rational;
use num_bigint::BigInt;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn s(l: u32, i: i64) -> SplineRef {
    SplineRef::at(l, i)
}

pub fn s2(l: u32, i: i64, j: i64) -> SplineRef {
    SplineRef::new(l, MultiIndex::new(&[i, j]))
}

pub fn set(v: &[(u32, i64)]) -> SplineSet {
    v.iter().map(|&(l, i)| s(l, i)).collect()
}

pub fn rat(a: i64, b: i64) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

pub fn cfg(m: i64, n: i64, d: usize, g: u32) -> SpaceConfig {
    SpaceConfig::new(m, n, d, g).unwrap()
}

/// Point in `[0,1]^d` with coordinates `k/den`, `den` random in `1..=max_den`.
pub fn random_point(rng: &mut ChaCha8Rng, d: usize, max_den: i64) -> Vec<Rational> {
    (0..d)
        .map(|_| {
            let den = rng.random_range(1..=max_den);
            rat(rng.random_range(0..=den), den)
        })
        .collect()
}

/// A lineage built from `steps` single refinements of random generator
/// members below `max_refined_level`.
pub fn random_lineage(c: SpaceConfig, rng: &mut ChaCha8Rng, steps: usize, max_refined_level: u32) -> Lineage {
    let mut lin = Lineage::new(c);
    for _ in 0..steps {
        let pool: Vec<SplineRef> = lin.generator_iter().filter(|p| p.level <= max_refined_level).collect();
        if pool.is_empty() {
            break;
        }
        let phi = pool[rng.random_range(0..pool.len())].clone();
        single_refine(&mut lin, &phi).unwrap();
    }
    lin
}

/// A random lineage made absorbing.
pub fn random_absorbing(c: SpaceConfig, rng: &mut ChaCha8Rng, steps: usize, max_refined_level: u32) -> Lineage {
    let mut lin = random_lineage(c, rng, steps, max_refined_level);
    abs_refine(&mut lin).unwrap();
    lin
}

/// Random GARefine steps from `B^0`, marking up to `k` functions below
/// `max_refined_level` per step.
pub fn random_ga_lineage(c: SpaceConfig, rng: &mut ChaCha8Rng, steps: usize, k: usize, max_refined_level: u32) -> Lineage {
    let mut lin = Lineage::new(c);
    for _ in 0..steps {
        let marks = random_marks(&lin, rng, k, max_refined_level);
        if marks.is_empty() {
            break;
        }
        ga_refine(&mut lin, &marks).unwrap();
    }
    lin
}

pub fn random_marks(lin: &Lineage, rng: &mut ChaCha8Rng, k: usize, max_refined_level: u32) -> Vec<SplineRef> {
    let pool: Vec<SplineRef> = lin.generator_iter().filter(|p| p.level <= max_refined_level).collect();
    if pool.is_empty() {
        return Vec::new();
    }
    let take = k.min(pool.len());
    let mut idx = rand::seq::index::sample(rng, pool.len(), take).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| pool[i].clone()).collect()
}
