//! Refinement algorithms on lineages.
//!
//! Every operation mutates the lineage in place and returns a
//! [`RefinementReport`]. On error the lineage may be partially refined;
//! callers that need atomicity work on a clone.

use std::collections::BTreeSet;

use num_bigint::BigInt;

use crate::bspline_space::{overlap_set, rho, SplineRef, SplineSet};
use crate::error::{Error, Result};
use crate::hierarchy::{covered_members, is_refinement, Lineage};
use crate::index_algebra::SpaceConfig;
use crate::Rational;

/// Outcome of one refinement call, relative to the lineage before it.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct RefinementReport {
    /// `R = L* \ L`.
    pub refiner: SplineSet,
    /// The functions the caller asked to refine.
    pub marked: SplineSet,
    /// `H* \ H`.
    pub new_functions: SplineSet,
    /// `H \ H*`.
    pub removed: SplineSet,
    pub size_before: usize,
    pub size_after: usize,
    pub depth_before: u32,
    pub depth_after: u32,
}

/// Accumulates a report from the refine calls of one operation.
struct Journal {
    refiner: SplineSet,
    added: SplineSet,
    size_before: usize,
    depth_before: u32,
}

impl Journal {
    fn start(lin: &Lineage) -> Self {
        Journal {
            refiner: SplineSet::new(),
            added: SplineSet::new(),
            size_before: lin.generator_len(),
            depth_before: lin.depth(),
        }
    }

    fn refine(&mut self, lin: &mut Lineage, phi: &SplineRef) -> Result<()> {
        for c in lin.refine_member(phi)? {
            self.added.insert(c);
        }
        self.refiner.insert(phi.clone());
        Ok(())
    }

    fn finish(self, lin: &Lineage, marked: SplineSet) -> RefinementReport {
        // H* \ H = (C* \ C) \ L*, and H \ H* = R minus whatever entered C
        // during this call.
        let new_functions = self.added.iter().filter(|c| !lin.is_refined(c)).collect();
        let removed = self.refiner.iter().filter(|r| !self.added.contains(r)).collect();
        RefinementReport {
            refiner: self.refiner,
            marked,
            new_functions,
            removed,
            size_before: self.size_before,
            size_after: lin.generator_len(),
            depth_before: self.depth_before,
            depth_after: lin.depth(),
        }
    }
}

fn require_members(lin: &Lineage, m: &[SplineRef]) -> Result<()> {
    let bad: Vec<_> = m.iter().filter(|phi| !lin.in_generator(phi)).cloned().collect();
    match bad.len() {
        0 => Ok(()),
        1 => Err(Error::NotInGenerator(bad.into_iter().next().expect("one element"))),
        _ => Err(Error::NotInGeneratorMany(bad)),
    }
}

/// `L <- L ∪ {phi}`.
pub fn single_refine(lin: &mut Lineage, phi: &SplineRef) -> Result<RefinementReport> {
    require_members(lin, std::slice::from_ref(phi))?;
    let mut j = Journal::start(lin);
    j.refine(lin, phi)?;
    Ok(j.finish(lin, [phi.clone()].into_iter().collect()))
}

/// `L <- L ∪ M`.
pub fn refine(lin: &mut Lineage, m: &[SplineRef]) -> Result<RefinementReport> {
    require_members(lin, m)?;
    let mut j = Journal::start(lin);
    for phi in m {
        if !lin.is_refined(phi) {
            j.refine(lin, phi)?;
        }
    }
    Ok(j.finish(lin, m.iter().cloned().collect()))
}

/// Replaces the lineage by the least absorbing refinement of its generator.
pub fn abs_refine(lin: &mut Lineage) -> Result<RefinementReport> {
    let cfg = *lin.cfg();
    let size_before = lin.generator_len();
    let depth = lin.depth();
    let mut tilde = Lineage::new(cfg);
    for l in 0..depth {
        let orig = lin.refined().level(l);
        let mut batch = covered_members(&cfg, l, tilde.candidates().level(l).iter(), orig)?;
        batch.extend(orig.iter().map(|i| SplineRef::new(l, i.clone())));
        batch.sort();
        for phi in &batch {
            if !tilde.in_generator(phi) {
                return Err(Error::Internal(format!("{phi} is not refinable while absorbing level {l}")));
            }
            tilde.refine_member(phi)?;
        }
    }
    let refiner = is_refinement(&tilde, lin)
        .ok_or_else(|| Error::Internal("absorbing refinement lost a refined function".into()))?;
    let new_functions = tilde.candidates().difference(lin.candidates()).difference(tilde.refined());
    let removed = refiner.intersection(lin.candidates());
    let depth_after = tilde.depth();
    lin.replace_with(tilde);
    Ok(RefinementReport {
        refiner,
        marked: SplineSet::new(),
        new_functions,
        removed,
        size_before,
        size_after: lin.generator_len(),
        depth_before: depth,
        depth_after,
    })
}

/// Which formulation of gap-controlled single refinement to run.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum GcVersion {
    /// Overlap set fixed on entry, explicit work stack.
    #[default]
    Stack,
    /// Overlap set recomputed after each recursive call.
    WhileLoop,
}

fn coarse_overlaps(lin: &Lineage, phi: &SplineRef) -> Result<BTreeSet<SplineRef>> {
    let g = lin.cfg().g;
    if phi.level < g {
        return Ok(BTreeSet::new());
    }
    overlap_set(lin.cfg(), std::slice::from_ref(phi), -(g as i64), lin.generator_family())
}

enum Frame {
    Enter(SplineRef),
    Finish(SplineRef),
}

fn gc_single_stack(lin: &mut Lineage, phi: &SplineRef, j: &mut Journal) -> Result<()> {
    let mut stack = vec![Frame::Enter(phi.clone())];
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Enter(psi) => {
                // An earlier branch may already have refined psi.
                if lin.is_refined(&psi) {
                    continue;
                }
                let o = coarse_overlaps(lin, &psi)?;
                stack.push(Frame::Finish(psi));
                stack.extend(o.into_iter().rev().map(Frame::Enter));
            }
            Frame::Finish(psi) => {
                if lin.in_generator(&psi) {
                    j.refine(lin, &psi)?;
                }
            }
        }
    }
    Ok(())
}

fn gc_single_while(lin: &mut Lineage, phi: &SplineRef, j: &mut Journal) -> Result<()> {
    while let Some(first) = coarse_overlaps(lin, phi)?.into_iter().next() {
        gc_single_while(lin, &first, j)?;
    }
    j.refine(lin, phi)
}

/// Least refinement with `phi` refined and gap at most `g`, assuming the
/// input gap is at most `g`.
pub fn gc_single_refine(lin: &mut Lineage, phi: &SplineRef) -> Result<RefinementReport> {
    gc_single_refine_with(lin, phi, GcVersion::Stack)
}

pub fn gc_single_refine_with(lin: &mut Lineage, phi: &SplineRef, version: GcVersion) -> Result<RefinementReport> {
    require_members(lin, std::slice::from_ref(phi))?;
    let mut j = Journal::start(lin);
    match version {
        GcVersion::Stack => gc_single_stack(lin, phi, &mut j)?,
        GcVersion::WhileLoop => gc_single_while(lin, phi, &mut j)?,
    }
    Ok(j.finish(lin, [phi.clone()].into_iter().collect()))
}

/// Gap-controlled refinement of every member of `m`.
pub fn gc_refine(lin: &mut Lineage, m: &[SplineRef]) -> Result<RefinementReport> {
    gc_refine_with(lin, m, GcVersion::Stack)
}

pub fn gc_refine_with(lin: &mut Lineage, m: &[SplineRef], version: GcVersion) -> Result<RefinementReport> {
    require_members(lin, m)?;
    let marked: SplineSet = m.iter().cloned().collect();
    let mut j = Journal::start(lin);
    for phi in marked.iter() {
        if lin.in_generator(&phi) {
            match version {
                GcVersion::Stack => gc_single_stack(lin, &phi, &mut j)?,
                GcVersion::WhileLoop => gc_single_while(lin, &phi, &mut j)?,
            }
        }
    }
    Ok(j.finish(lin, marked))
}

/// Gap-controlled refinement followed by absorbing refinement.
pub fn ga_refine(lin: &mut Lineage, m: &[SplineRef]) -> Result<RefinementReport> {
    let before = lin.clone();
    let gc = gc_refine(lin, m)?;
    abs_refine(lin)?;
    let refiner = is_refinement(lin, &before)
        .ok_or_else(|| Error::Internal("refinement lost a refined function".into()))?;
    let new_functions = lin.candidates().difference(before.candidates()).difference(lin.refined());
    let removed = refiner.intersection(before.candidates());
    Ok(RefinementReport {
        refiner,
        marked: gc.marked,
        new_functions,
        removed,
        size_before: gc.size_before,
        size_after: lin.generator_len(),
        depth_before: gc.depth_before,
        depth_after: lin.depth(),
    })
}

/// Absorbing gap-controlled lineage containing `target`, built level by
/// level from `B^0`.
pub fn to_absorbing_gap_controlled(target: &Lineage) -> Result<Lineage> {
    let mut lin = Lineage::new(*target.cfg());
    for l in 0..target.depth() {
        let m: Vec<SplineRef> = target
            .refined()
            .level(l)
            .iter()
            .map(|i| SplineRef::new(l, i.clone()))
            .filter(|phi| lin.in_generator(phi))
            .collect();
        ga_refine(&mut lin, &m)?;
    }
    Ok(lin)
}

// ---------------------------------------------------------------------------
// Report identities and locality

/// Checks the set identities relating a report to the lineages before and
/// after, computing each side independently. Returns the first failure.
pub fn check_report_identities(before: &Lineage, after: &Lineage, rep: &RefinementReport) -> std::result::Result<(), String> {
    let h0 = before.generator();
    let h1 = after.generator();
    let r = is_refinement(after, before).ok_or("output is not a refinement of the input")?;
    if r != rep.refiner {
        return Err("reported refiner differs from L* \\ L".into());
    }
    let new_direct = h1.set().difference(h0.set());
    let removed_direct = h0.set().difference(h1.set());
    if new_direct != rep.new_functions {
        return Err("reported new functions differ from H* \\ H".into());
    }
    if removed_direct != rep.removed {
        return Err("reported removed functions differ from H \\ H*".into());
    }
    // H* \ H = ch(R) \ (C ∪ R)
    let mut ch_r = SplineSet::new();
    for phi in r.iter() {
        let cb = crate::bspline_space::children(before.cfg(), &phi).map_err(|e| e.to_string())?;
        ch_r.insert_box(&cb);
    }
    if new_direct != ch_r.difference(before.candidates()).difference(&r) {
        return Err("H* \\ H != ch(R) \\ (C ∪ R)".into());
    }
    if h1.set().intersection(h0.set()) != h0.set().difference(&r) {
        return Err("H* ∩ H != H \\ R".into());
    }
    let m = r.intersection(h0.set());
    if removed_direct != m {
        return Err("H \\ H* != R ∩ H".into());
    }
    if !r.is_subset(&ch_r.difference(before.candidates()).union(&m)) {
        return Err("R is not contained in (ch(R) \\ C) ∪ M".into());
    }
    if rep.size_before != h0.len() || rep.size_after != h1.len() {
        return Err("reported sizes are wrong".into());
    }
    if rep.depth_before != before.depth() || rep.depth_after != after.depth() {
        return Err("reported depths are wrong".into());
    }
    Ok(())
}

/// The locality constant of gap- and absorbing-controlled refinement.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LocalityConstant {
    /// `max(n^g (3n+1) m, 4 m n^g)`, used for all checks.
    pub proof_value: i64,
    /// `4 m^g`, the simpler value quoted alongside the result.
    pub remark_value: i64,
}

pub fn locality_constant(cfg: &SpaceConfig) -> Result<LocalityConstant> {
    let ng = cfg.scale(cfg.g)?;
    let a = ng
        .checked_mul(3 * cfg.n + 1)
        .and_then(|v| v.checked_mul(cfg.m))
        .ok_or(Error::Overflow("locality constant"))?;
    let b = ng.checked_mul(4 * cfg.m).ok_or(Error::Overflow("locality constant"))?;
    let remark = cfg.m.checked_pow(cfg.g).and_then(|v| v.checked_mul(4)).ok_or(Error::Overflow("locality constant"))?;
    Ok(LocalityConstant { proof_value: a.max(b), remark_value: remark })
}

/// Every new function has a marked function within distance `c` that is at
/// most `g` levels finer. Returns the first function without one.
pub fn check_locality(cfg: &SpaceConfig, marked: &SplineSet, new_functions: &SplineSet, c: i64) -> Result<Option<SplineRef>> {
    let bound = Rational::from_integer(BigInt::from(c));
    'outer: for star in new_functions.iter() {
        for phi in marked.iter() {
            if phi.level as i64 - star.level as i64 >= -(cfg.g as i64) && rho(cfg, &phi, &star)?.within(&bound) {
                continue 'outer;
            }
        }
        return Ok(Some(star));
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Complexity constants

/// A nonnegative sequence indexed by `k >= -g`, with two-sided bounds on its
/// tails `Σ_{k > K} x(k)`.
pub trait Series {
    fn term(&self, k: i64) -> f64;
    /// `(lower, upper)` bounds on the tail after `k`, or `None` if the series
    /// diverges.
    fn tail_bounds(&self, k: i64) -> Option<(f64, f64)>;
}

/// `a(k) = (k + g + 1)^-2`.
#[derive(Clone, Copy, Debug)]
pub struct InverseSquare {
    pub g: i64,
}

impl Series for InverseSquare {
    fn term(&self, k: i64) -> f64 {
        let j = (k + self.g + 1) as f64;
        1.0 / (j * j)
    }

    fn tail_bounds(&self, k: i64) -> Option<(f64, f64)> {
        // Σ_{j > J} j^-2 lies in [1/(J+1), 1/J].
        let j = (k + self.g + 1) as f64;
        Some((1.0 / (j + 1.0), 1.0 / j))
    }
}

/// `b(k) = n^(k/2)`.
#[derive(Clone, Copy, Debug)]
pub struct HalfPower {
    pub n: i64,
}

impl HalfPower {
    pub fn value(&self, k: i64) -> f64 {
        (self.n as f64).powf(k as f64 / 2.0)
    }
}

/// The weighted series `b(k) n^-k` of a growth sequence `b`.
pub trait Growth {
    fn value(&self, k: i64) -> f64;
    /// Bounds on `Σ_{j > k} b(j) n^-j`.
    fn weighted_tail_bounds(&self, n: i64, k: i64) -> Option<(f64, f64)>;
}

impl Growth for HalfPower {
    fn value(&self, k: i64) -> f64 {
        HalfPower::value(self, k)
    }

    fn weighted_tail_bounds(&self, n: i64, k: i64) -> Option<(f64, f64)> {
        // b(j) n^-j = r^j with r = n^(1/2) / n
        let r = (self.n as f64).sqrt() / n as f64;
        if r >= 1.0 {
            return None;
        }
        let t = r.powf((k + 1) as f64) / (1.0 - r);
        Some((t, t))
    }
}

/// Constants of the complexity bound.
#[derive(Clone, Copy, PartialEq, Debug, serde::Serialize)]
pub struct ComplexityConstants {
    /// `Σ_{k >= -g} a(k)`.
    pub a_sum: f64,
    /// `Σ_{k >= -g} b(k) n^-k`.
    pub b_sum: f64,
    /// Locality constant `C`.
    pub c: f64,
    /// Alternative locality constant `4 m^g`.
    pub c_remark: f64,
    /// `D = C B`.
    pub d: f64,
    /// `C_U = (2D + 1)^dim A`.
    pub c_upper: f64,
    /// `C_L = inf_{k >= -g} a(k) b(k)`.
    pub c_lower: f64,
    /// Index attaining `C_L`.
    pub c_lower_at: i64,
    /// `C_U / C_L`.
    pub ratio: f64,
}

const SERIES_RTOL: f64 = 1e-9;
const SERIES_MAX_TERMS: i64 = 50_000_000;

fn sum_series(start: i64, term: impl Fn(i64) -> f64, tail: impl Fn(i64) -> Option<(f64, f64)>) -> Result<f64> {
    let mut s = 0.0;
    let mut k = start;
    loop {
        s += term(k);
        let (lo, hi) = tail(k).ok_or_else(|| Error::Config("series diverges".into()))?;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
            return Err(Error::Config("invalid tail bounds".into()));
        }
        if (hi - lo) / 2.0 <= SERIES_RTOL * (s + lo) {
            return Ok(s + (lo + hi) / 2.0);
        }
        k += 1;
        if k - start > SERIES_MAX_TERMS {
            return Err(Error::Config("series converges too slowly".into()));
        }
    }
}

/// `C_U`, `C_L` and intermediate sums for sequences `a` and `b`.
pub fn complexity_constants(cfg: &SpaceConfig, a: &dyn Series, b: &dyn Growth) -> Result<ComplexityConstants> {
    let g = cfg.g as i64;
    let n = cfg.n;
    // Preconditions, checked on a finite window.
    if b.value(0) < 1.0 {
        return Err(Error::Config("b(0) must be at least 1".into()));
    }
    for k in -g..(64 - g) {
        if a.term(k + 1) > a.term(k) || a.term(k) < 0.0 {
            return Err(Error::Config(format!("a is not nonnegative and decreasing at k = {k}")));
        }
        if b.value(k + 1) < b.value(k) {
            return Err(Error::Config(format!("b is not increasing at k = {k}")));
        }
    }
    let a_sum = sum_series(-g, |k| a.term(k), |k| a.tail_bounds(k))?;
    let b_sum = sum_series(
        -g,
        |k| b.value(k) * (n as f64).powf(-(k as f64)),
        |k| b.weighted_tail_bounds(n, k),
    )?;
    let lc = locality_constant(cfg)?;
    let c = lc.proof_value as f64;
    let d = c * b_sum;
    let c_upper = (2.0 * d + 1.0).powi(cfg.d as i32) * a_sum;
    let (c_lower, c_lower_at) = infimum(|k| a.term(k) * b.value(k), -g)?;
    Ok(ComplexityConstants {
        a_sum,
        b_sum,
        c,
        c_remark: lc.remark_value as f64,
        d,
        c_upper,
        c_lower,
        c_lower_at,
        ratio: c_upper / c_lower,
    })
}

/// Scans `f(k)` for `k >= start` until it has increased for 256 consecutive
/// steps past the running minimum.
fn infimum(f: impl Fn(i64) -> f64, start: i64) -> Result<(f64, i64)> {
    let mut best = (f(start), start);
    let mut prev = best.0;
    let mut rising = 0;
    let mut k = start + 1;
    while rising < 256 {
        let v = f(k);
        if !v.is_finite() {
            break;
        }
        if v < best.0 {
            best = (v, k);
        }
        rising = if v > prev { rising + 1 } else { 0 };
        prev = v;
        k += 1;
        if k - start > 1_000_000 {
            return Err(Error::Config("a(k) b(k) does not settle".into()));
        }
    }
    if best.0 <= 0.0 {
        return Err(Error::Config("inf a(k) b(k) is not positive".into()));
    }
    Ok(best)
}

/// Constants for the default sequences `a(k) = (k+g+1)^-2`, `b(k) = n^(k/2)`.
pub fn default_complexity_constants(cfg: &SpaceConfig) -> Result<ComplexityConstants> {
    complexity_constants(cfg, &InverseSquare { g: cfg.g as i64 }, &HalfPower { n: cfg.n })
}
