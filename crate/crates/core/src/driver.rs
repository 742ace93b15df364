//! Adaptive refinement loops, grid sampling and lineage verification.
//!
//! A run starts from `B^0` and applies GARefine to the functions chosen by a
//! marking strategy at every step. Runs are fully determined by their
//! configuration: the random strategy uses `ChaCha8` seeded from the config,
//! and wall times are only recorded on request.

use std::fmt::Write as _;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bspline_space::{active_range_1d, cell_support, evaluate_f64, SplineRef};
use crate::error::{Error, Result};
use crate::hierarchy::{gap_of_generator, is_absorbing, validate_lineage, Absorbing, Lineage};
use crate::index_algebra::{LatticeBox, MultiIndex, SpaceConfig};
use crate::oracle::{brute_gap, complexity_audit, is_linearly_independent, ComplexityAudit};
use crate::refinement::{
    check_locality, check_report_identities, default_complexity_constants, ga_refine, locality_constant,
    single_refine, ComplexityConstants, LocalityConstant, RefinementReport,
};

/// How much checking happens after each step.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditLevel {
    None,
    #[default]
    Fast,
    Oracle,
}

impl std::str::FromStr for AuditLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AuditLevel::None),
            "fast" => Ok(AuditLevel::Fast),
            "oracle" => Ok(AuditLevel::Oracle),
            other => Err(Error::Config(format!("unknown audit level '{other}'"))),
        }
    }
}

/// A spline as it appears in configuration and log files.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineDoc {
    pub level: u32,
    pub index: Vec<i64>,
}

impl From<&SplineRef> for SplineDoc {
    fn from(s: &SplineRef) -> Self {
        SplineDoc { level: s.level, index: s.index.coords().to_vec() }
    }
}

impl From<&SplineDoc> for SplineRef {
    fn from(s: &SplineDoc) -> Self {
        SplineRef::new(s.level, MultiIndex::from(s.index.clone()))
    }
}

/// Marking strategy.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Strategy {
    /// `k` distinct generator functions chosen uniformly.
    RandomK { k: usize, seed: u64 },
    /// The `k` functions of largest in-domain support on the finest
    /// refinable level.
    GreedySupport { k: usize },
    /// Explicit marks per step.
    Scripted { steps: Vec<Vec<SplineDoc>> },
}

/// Configuration of an adaptive run.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub m: i64,
    pub n: i64,
    pub d: usize,
    pub g: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<u32>,
    /// Number of steps; scripted runs default to the script length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub strategy: Strategy,
    #[serde(default)]
    pub audit: AuditLevel,
    /// Adds per-step wall time to the log (makes logs nondeterministic).
    #[serde(default)]
    pub record_timing: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.space()?;
        c.steps()?;
        match &c.strategy {
            Strategy::RandomK { k, .. } | Strategy::GreedySupport { k } if *k == 0 => {
                return Err(Error::Config("strategy k must be positive".into()))
            }
            _ => {}
        }
        Ok(c)
    }

    pub fn space(&self) -> Result<SpaceConfig> {
        match self.max_level {
            Some(ml) => SpaceConfig::with_max_level(self.m, self.n, self.d, self.g, ml),
            None => SpaceConfig::new(self.m, self.n, self.d, self.g),
        }
    }

    /// Number of steps to run.
    pub fn steps(&self) -> Result<usize> {
        match (&self.strategy, self.iterations) {
            (Strategy::Scripted { steps }, None) => Ok(steps.len()),
            (Strategy::Scripted { steps }, Some(r)) if r > steps.len() => Err(Error::Config(format!(
                "{r} iterations requested but the script has {} steps",
                steps.len()
            ))),
            (_, Some(r)) => Ok(r),
            (_, None) => Err(Error::Config("iterations is required for this strategy".into())),
        }
    }
}

/// Per-step audit verdict.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct StepAudit {
    pub passed: bool,
    pub failures: Vec<String>,
}

/// One line of the run log.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub marked: Vec<SplineDoc>,
    pub refiner: Vec<SplineDoc>,
    pub marked_count: usize,
    pub refiner_count: usize,
    pub new_count: usize,
    pub generator_size: usize,
    pub depth: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_gap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audit: Option<StepAudit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

/// How a run ended.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// No refinable function remained below the level cap.
    DepthCap,
    AuditFailed,
}

/// Summary document of a run.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub status: RunStatus,
    pub iterations_requested: usize,
    pub iterations_completed: usize,
    pub initial_size: usize,
    pub final_size: usize,
    pub final_depth: u32,
    pub total_marked: usize,
    pub locality_constant: i64,
    pub locality_constant_remark: i64,
    pub constants: ComplexityConstants,
    pub complexity: ComplexityAudit,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct RunLog {
    pub steps: Vec<StepRecord>,
    pub summary: RunSummary,
    pub lineage: Lineage,
}

impl RunLog {
    /// JSON lines, one step per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            out.push_str(&serde_json::to_string(s).expect("step records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summaries serialize") + "\n"
    }
}

/// Refinable generator members: their children stay within the level cap.
fn refinable(lin: &Lineage) -> Vec<SplineRef> {
    let cap = lin.cfg().max_level;
    lin.generator_iter().filter(|phi| phi.level < cap).collect()
}

struct Marker {
    strategy: Strategy,
    rng: Option<ChaCha8Rng>,
}

impl Marker {
    fn new(strategy: &Strategy) -> Self {
        let rng = match strategy {
            Strategy::RandomK { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Marker { strategy: strategy.clone(), rng }
    }

    /// Marks for `step` (1-based), or `None` when nothing is refinable.
    fn mark(&mut self, lin: &Lineage, step: usize) -> Result<Option<Vec<SplineRef>>> {
        match &self.strategy {
            Strategy::RandomK { k, .. } => {
                let pool = refinable(lin);
                if pool.is_empty() {
                    return Ok(None);
                }
                let rng = self.rng.as_mut().expect("random strategy owns an rng");
                let take = (*k).min(pool.len());
                let mut idx = rand::seq::index::sample(rng, pool.len(), take).into_vec();
                idx.sort_unstable();
                Ok(Some(idx.into_iter().map(|i| pool[i].clone()).collect()))
            }
            Strategy::GreedySupport { k } => {
                let pool = refinable(lin);
                let Some(finest) = pool.iter().map(|p| p.level).max() else {
                    return Ok(None);
                };
                let mut scored = Vec::new();
                for phi in pool.into_iter().filter(|p| p.level == finest) {
                    let cells = cell_support(lin.cfg(), &phi)?.bx.cardinality();
                    scored.push((std::cmp::Reverse(cells), phi));
                }
                scored.sort();
                Ok(Some(scored.into_iter().take(*k).map(|(_, p)| p).collect()))
            }
            Strategy::Scripted { steps } => {
                let marks: Vec<SplineRef> = steps[step - 1].iter().map(SplineRef::from).collect();
                for phi in &marks {
                    if !lin.in_generator(phi) {
                        return Err(Error::Config(format!("step {step}: {phi} is not in the generator")));
                    }
                }
                Ok(Some(marks))
            }
        }
    }
}

fn docs(set: impl Iterator<Item = SplineRef>) -> Vec<SplineDoc> {
    set.map(|s| SplineDoc::from(&s)).collect()
}

/// Post-step checks. Returns failures and the observed generator gap.
fn audit_step(
    before: &Lineage,
    after: &Lineage,
    rep: &RefinementReport,
    level: AuditLevel,
    locality: &LocalityConstant,
) -> Result<(Vec<String>, Option<u32>)> {
    if level == AuditLevel::None {
        return Ok((Vec::new(), None));
    }
    let cfg = after.cfg();
    let mut fail = Vec::new();
    match validate_lineage(cfg, after.refined()) {
        Ok(v) if v == *after && v.candidates() == after.candidates() => {}
        Ok(_) => fail.push("candidate cache disagrees with a rebuilt lineage".to_string()),
        Err(e) => fail.push(format!("invalid lineage: {e}")),
    }
    if let Err(e) = check_report_identities(before, after, rep) {
        fail.push(format!("report: {e}"));
    }
    if let Absorbing::No(w) = is_absorbing(after)? {
        fail.push(format!("not absorbing: {w}"));
    }
    if !rep.marked.is_subset(&rep.refiner) {
        fail.push("marked set not refined".into());
    }
    if let Some(w) = check_locality(cfg, &rep.marked, &rep.new_functions, locality.proof_value)? {
        fail.push(format!("locality violated by {w}"));
    }
    let (gap, _) = gap_of_generator(after)?;
    if gap > cfg.g {
        fail.push(format!("gap {gap} exceeds {}", cfg.g));
    }
    if level == AuditLevel::Oracle {
        let h = after.generator();
        let bg = brute_gap(cfg, h.set())?;
        if bg != gap {
            fail.push(format!("gap by definition {bg} differs from box gap {gap}"));
        }
        let ind = is_linearly_independent(cfg, &h.to_vec())?;
        if !ind.independent() {
            fail.push(format!("dependent generator: rank {} of {}", ind.rank, ind.len));
        }
    }
    Ok((fail, Some(gap)))
}

/// Runs the adaptive loop. An audit failure or the level cap stops the run
/// early; the log then covers the completed steps.
pub fn run(config: &RunConfig) -> Result<RunLog> {
    let cfg = config.space()?;
    let requested = config.steps()?;
    let locality = locality_constant(&cfg)?;
    let constants = default_complexity_constants(&cfg)?;
    let mut marker = Marker::new(&config.strategy);
    let mut lin = Lineage::new(cfg);
    let initial_size = lin.generator_len();
    let mut steps = vec![StepRecord {
        step: 0,
        marked: Vec::new(),
        refiner: Vec::new(),
        marked_count: 0,
        refiner_count: 0,
        new_count: 0,
        generator_size: initial_size,
        depth: 0,
        max_gap: if config.audit == AuditLevel::None { None } else { Some(0) },
        audit: None,
        wall_ms: None,
    }];
    let mut status = RunStatus::Completed;
    let mut history = Vec::new();
    for step in 1..=requested {
        let t0 = Instant::now();
        let Some(marks) = marker.mark(&lin, step)? else {
            status = RunStatus::DepthCap;
            break;
        };
        let mut next = lin.clone();
        let rep = match ga_refine(&mut next, &marks) {
            Ok(r) => r,
            Err(Error::DepthCap { .. }) => {
                status = RunStatus::DepthCap;
                break;
            }
            Err(e) => return Err(e),
        };
        let wall = t0.elapsed().as_secs_f64() * 1e3;
        let (failures, gap) = audit_step(&lin, &next, &rep, config.audit, &locality)?;
        let audit = (config.audit != AuditLevel::None)
            .then(|| StepAudit { passed: failures.is_empty(), failures: failures.clone() });
        history.push((rep.marked.len(), next.generator_len()));
        steps.push(StepRecord {
            step,
            marked: docs(rep.marked.iter()),
            refiner: docs(rep.refiner.iter()),
            marked_count: rep.marked.len(),
            refiner_count: rep.refiner.len(),
            new_count: rep.new_functions.len(),
            generator_size: next.generator_len(),
            depth: next.depth(),
            max_gap: gap,
            audit,
            wall_ms: config.record_timing.then_some(wall),
        });
        lin = next;
        if !failures.is_empty() {
            status = RunStatus::AuditFailed;
            break;
        }
    }
    let complexity = complexity_audit(constants.ratio, initial_size, &history);
    let summary = RunSummary {
        config: config.clone(),
        status,
        iterations_requested: requested,
        iterations_completed: history.len(),
        initial_size,
        final_size: lin.generator_len(),
        final_depth: lin.depth(),
        total_marked: history.iter().map(|h| h.0).sum(),
        locality_constant: locality.proof_value,
        locality_constant_remark: locality.remark_value,
        constants,
        complexity,
    };
    Ok(RunLog { steps, summary, lineage: lin })
}

// ---------------------------------------------------------------------------
// Sampling

/// CSV of `Σ c_phi phi(x)` and the number of nonzero generator functions on
/// a uniform grid with `resolution` points per axis.
pub fn sample_grid(lin: &Lineage, resolution: usize) -> Result<String> {
    if resolution == 0 {
        return Err(Error::Config("resolution must be positive".into()));
    }
    let cfg = lin.cfg();
    let coeffs: Vec<(SplineRef, f64)> = lin
        .partition_of_unity()?
        .iter()
        .map(|(k, v)| (k.clone(), num_traits::ToPrimitive::to_f64(v).unwrap_or(f64::NAN)))
        .collect();
    let lookup: std::collections::HashMap<SplineRef, f64> = coeffs.into_iter().collect();
    let levels = lin.candidates().num_levels();
    let coord = |t: i64| if resolution == 1 { 0.5 } else { t as f64 / (resolution - 1) as f64 };
    let mut out = String::new();
    for a in 1..=cfg.d {
        write!(out, "x{a},").expect("write to string");
    }
    out.push_str("unity,active\n");
    let grid = LatticeBox::cube(cfg.d, 0, resolution as i64 - 1);
    for pt in grid.iter() {
        let x: Vec<f64> = pt.coords().iter().map(|&t| coord(t)).collect();
        let mut sum = 0.0;
        let mut active = 0usize;
        for l in 0..levels {
            let mut lo = Vec::with_capacity(cfg.d);
            let mut hi = Vec::with_capacity(cfg.d);
            for &xa in &x {
                let (a, b) = active_range_1d(cfg, l, xa)?;
                lo.push(a);
                hi.push(b);
            }
            let bx = LatticeBox::new(lo.into(), hi.into());
            for i in bx.iter() {
                let phi = SplineRef::new(l, i);
                let Some(c) = lookup.get(&phi) else { continue };
                let v = evaluate_f64(cfg, &phi, &x)?;
                if v > 0.0 {
                    active += 1;
                    sum += c * v;
                }
            }
        }
        for xa in &x {
            write!(out, "{xa},").expect("write to string");
        }
        writeln!(out, "{sum},{active}").expect("write to string");
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Verification

/// One named check of a verdict.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Report of [`verify`].
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct Verdict {
    pub level: AuditLevel,
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

/// Structural checks (`fast`), plus rank and gap by definition (`oracle`).
pub fn verify(lin: &Lineage, level: AuditLevel) -> Result<Verdict> {
    let cfg = lin.cfg();
    let mut checks = Vec::new();

    // Rebuild by single refinements in level order.
    let mut rebuilt = Lineage::new(*cfg);
    let mut report_failure = None;
    for phi in lin.refined().iter() {
        let before = rebuilt.clone();
        let rep = single_refine(&mut rebuilt, &phi)?;
        if let Err(e) = check_report_identities(&before, &rebuilt, &rep) {
            report_failure.get_or_insert(format!("refining {phi}: {e}"));
        }
    }
    let same = rebuilt == *lin && rebuilt.candidates() == lin.candidates();
    checks.push(check(
        "reconstruction",
        same && report_failure.is_none(),
        report_failure.unwrap_or_else(|| {
            if same { format!("{} refined functions, depth {}", lin.refined().len(), lin.depth()) } else { "rebuilt lineage differs".into() }
        }),
    ));

    match is_absorbing(lin)? {
        Absorbing::Yes => checks.push(check("absorbing", true, "no totally overlapped generator function")),
        Absorbing::No(w) => checks.push(check("absorbing", false, format!("{w} is totally overlapped"))),
    }

    let pou = lin.partition_of_unity()?;
    let positive = pou.values().all(|c| *c > crate::Rational::from_integer(0.into()));
    let covers = pou.len() == lin.generator_len() && lin.generator_iter().all(|p| pou.contains_key(&p));
    checks.push(check(
        "partition_of_unity",
        positive && covers,
        format!("{} positive coefficients", pou.len()),
    ));

    let (gap, at) = gap_of_generator(lin)?;
    checks.push(check(
        "gap",
        gap <= cfg.g,
        match at {
            Some(p) => format!("gap {gap} at {p}, bound {}", cfg.g),
            None => format!("gap {gap}, bound {}", cfg.g),
        },
    ));

    if level == AuditLevel::Oracle {
        let h = lin.generator();
        let ind = is_linearly_independent(cfg, &h.to_vec())?;
        let detail = match &ind.kernel {
            None => format!("rank {} of {}", ind.rank, ind.len),
            Some(k) => format!(
                "rank {} of {}; vanishing combination over {}",
                ind.rank,
                ind.len,
                k.iter().map(|(s, _)| s.to_string()).collect::<Vec<_>>().join(", ")
            ),
        };
        checks.push(check("linear_independence", ind.independent(), detail));
        let bg = brute_gap(cfg, h.set())?;
        checks.push(check("gap_by_definition", bg == gap && bg <= cfg.g, format!("gap {bg}")));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(Verdict { level, passed, checks })
}

/// Parses a lineage, reporting configuration problems as such.
pub fn load_lineage(text: &str) -> Result<Lineage> {
    crate::hierarchy::lineage_from_json(text, None)
}

