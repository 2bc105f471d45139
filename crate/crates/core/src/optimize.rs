//! Constrained design search maximizing the compression point.
//!
//! Candidates are ranked by feasibility (gain at least the target, with a
//! small margin), then by P1dB, then by gain, then by fewer junctions. The
//! search seeds from a Latin hypercube, or from the full lattice when it fits
//! in the budget, then runs coordinate descent: ±1 neighbor moves on discrete
//! dimensions and golden-section line searches on continuous ones.

use std::cmp::Ordering;
use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, BlochniumDesign};
use crate::constants::dbm_to_watts;
use crate::gain::{gain_at, SignalProbe};
use crate::metrics::{self, CompressionOptions, PhysicalScale};
use crate::steady_state::{operating_point, BranchPolicy, PumpDrive};
use crate::sweep::{Baseline, Param};
use crate::{Error, Result};

/// Gain may fall this far below the target and still count as feasible.
pub const FEASIBILITY_MARGIN_DB: f64 = 0.1;
/// Golden-section tolerance as a fraction of a continuous range.
pub const GOLDEN_REL_TOL: f64 = 1e-4;
pub const MIN_BUDGET: usize = 27;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum Bounds {
    Integer { lo: u32, hi: u32 },
    Continuous { lo: f64, hi: f64 },
    /// An explicit ascending list of admissible values.
    Lattice { values: Vec<f64> },
}

impl Bounds {
    fn discrete_len(&self) -> Option<usize> {
        match self {
            Bounds::Integer { lo, hi } => Some((hi - lo) as usize + 1),
            Bounds::Lattice { values } => Some(values.len()),
            Bounds::Continuous { .. } => None,
        }
    }

    fn discrete_value(&self, i: usize) -> f64 {
        match self {
            Bounds::Integer { lo, .. } => (*lo as usize + i) as f64,
            Bounds::Lattice { values } => values[i],
            Bounds::Continuous { .. } => unreachable!("continuous bounds have no index"),
        }
    }

    fn discrete_index(&self, v: f64) -> usize {
        match self {
            Bounds::Integer { lo, .. } => (v - *lo as f64) as usize,
            Bounds::Lattice { values } => values.iter().position(|&x| x == v).expect("value on lattice"),
            Bounds::Continuous { .. } => unreachable!("continuous bounds have no index"),
        }
    }

    /// Map a unit-interval sample onto the bounds.
    fn from_unit(&self, u: f64) -> f64 {
        match self {
            Bounds::Continuous { lo, hi } => lo + u * (hi - lo),
            _ => {
                let n = self.discrete_len().unwrap();
                self.discrete_value(((u * n as f64) as usize).min(n - 1))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchDim {
    pub param: Param,
    pub bounds: Bounds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSpec {
    pub baseline: Baseline,
    pub dims: Vec<SearchDim>,
    pub min_gain_db: f64,
    pub budget: usize,
    pub seed: u64,
    pub compression: CompressionOptions,
}

impl OptimizeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.budget < MIN_BUDGET {
            return Err(Error::invalid("budget", format!("must be at least {MIN_BUDGET}")));
        }
        if !self.min_gain_db.is_finite() {
            return Err(Error::invalid("min_gain_db", "must be finite"));
        }
        if self.dims.is_empty() {
            return Err(Error::invalid("bounds", "no search dimensions"));
        }
        for (i, d) in self.dims.iter().enumerate() {
            let name = d.param.name();
            if self.dims[..i].iter().any(|o| o.param == d.param) {
                return Err(Error::invalid(name, "appears twice in bounds"));
            }
            match &d.bounds {
                Bounds::Integer { lo, hi } => {
                    if !d.param.is_integer() {
                        return Err(Error::invalid(name, "integer bounds on a continuous parameter"));
                    }
                    if *lo < 1 || lo > hi {
                        return Err(Error::invalid(name, format!("need 1 <= lo <= hi, got [{lo}, {hi}]")));
                    }
                }
                Bounds::Continuous { lo, hi } => {
                    if d.param.is_integer() {
                        return Err(Error::invalid(name, "continuous bounds on an integer parameter"));
                    }
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(Error::invalid(name, format!("need finite lo <= hi, got [{lo}, {hi}]")));
                    }
                }
                Bounds::Lattice { values } => {
                    if values.is_empty() {
                        return Err(Error::invalid(name, "empty lattice"));
                    }
                    if !values.windows(2).all(|w| w[0] < w[1]) {
                        return Err(Error::invalid(name, "lattice values must be strictly ascending"));
                    }
                    for &v in values {
                        d.param.check_value(v).map_err(|e| Error::invalid(name, e.to_string()))?;
                    }
                }
            }
        }
        self.compression.validate()?;
        self.baseline.design.validate()
    }

    fn lattice_size(&self) -> Option<usize> {
        self.dims
            .iter()
            .try_fold(1usize, |acc, d| d.bounds.discrete_len().and_then(|n| acc.checked_mul(n)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// One value per search dimension, in declaration order.
    pub values: Vec<f64>,
    pub gain_db: f64,
    /// `None` if the point could not be evaluated or did not compress.
    pub p1db_dbm: Option<f64>,
    pub pump_power_dbm: Option<f64>,
    pub feasible: bool,
    pub junctions: u64,
    pub error: Option<String>,
}

impl Candidate {
    fn key(&self) -> (bool, f64, f64, i64) {
        let p = self.p1db_dbm.unwrap_or(f64::NEG_INFINITY);
        let g = if self.gain_db.is_nan() {
            f64::NEG_INFINITY
        } else {
            self.gain_db
        };
        (self.feasible, p, g, -(self.junctions as i64))
    }

    /// Ranking order; `Greater` means `self` is the better design.
    pub fn rank(&self, other: &Candidate) -> Ordering {
        let (a, b) = (self.key(), other.key());
        a.0.cmp(&b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
    }

    fn better_than(&self, other: &Candidate) -> bool {
        self.rank(other) == Ordering::Greater
    }

    /// Scalar used by line searches: P1dB when feasible, otherwise a large
    /// penalty softened by the gain shortfall.
    fn scalar(&self) -> f64 {
        match (self.feasible, self.p1db_dbm) {
            (true, Some(p)) => p,
            _ if self.gain_db.is_finite() => -1e6 + self.gain_db,
            _ => -1e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Seed,
    Neighbor,
    Golden,
}

/// One accepted improvement of the incumbent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// 1-based ordinal of the evaluation that produced the candidate.
    pub evaluation: usize,
    pub phase: Phase,
    pub candidate: Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best: Candidate,
    pub trace: Vec<TraceStep>,
    pub evaluations: usize,
    /// The whole lattice was enumerated.
    pub exhaustive: bool,
}

/// Evaluate one point of the search space.
///
/// When pump power is not a search dimension the pump is set so the resonant
/// gain equals the target, and the P1dB at that pump is the objective.
pub fn evaluate(spec: &OptimizeSpec, values: &[f64]) -> Candidate {
    let mut base = spec.baseline;
    let mut pump_searched = false;
    for (d, &v) in spec.dims.iter().zip(values) {
        base.set(d.param, v);
        pump_searched |= d.param == Param::PumpPowerDbm;
    }
    let design = base.design;
    let junctions = design.junction_count();
    let fail = |gain_db: f64, pump: Option<f64>, e: Error| Candidate {
        values: values.to_vec(),
        gain_db,
        p1db_dbm: None,
        pump_power_dbm: pump,
        feasible: false,
        junctions,
        error: Some(e.to_string()),
    };

    let setup = design
        .validate()
        .and_then(|_| design.charging_energy())
        .and_then(|e_c| Ok((circuit::kerr_coefficient(&design, e_c), PhysicalScale::new(base.omega_p, design.kappa)?)));
    let (k, scale) = match setup {
        Ok(v) => v,
        Err(e) => return fail(f64::NEG_INFINITY, None, e),
    };
    let delta = base.drive.delta;
    let pump = match (pump_searched, base.pump_power_dbm) {
        (true, Some(p)) => p,
        _ => match metrics::find_pump_for_gain(k, &scale, delta, spec.min_gain_db, &spec.compression) {
            Ok(p) => p,
            Err(Error::UnreachableGain { best_db, .. }) => {
                return fail(
                    best_db,
                    None,
                    Error::UnreachableGain {
                        target_db: spec.min_gain_db,
                        best_db,
                        ceiling_dbm: spec.compression.ceiling_dbm,
                    },
                )
            }
            Err(e) => return fail(f64::NEG_INFINITY, None, e),
        },
    };
    let drive = PumpDrive::new(delta, metrics::zeta_from_watts(dbm_to_watts(pump), &scale, k));
    let op = operating_point(&drive, BranchPolicy::LowStable);
    let gain_db = match gain_at(&op, &SignalProbe::new(0.0)) {
        Ok(g) if op.stable => g.g_signal_db,
        Ok(_) => return fail(f64::NEG_INFINITY, Some(pump), Error::UnstableOperatingPoint { n: op.n }),
        Err(e) => return fail(f64::NEG_INFINITY, Some(pump), e),
    };
    let feasible_gain = gain_db >= spec.min_gain_db - FEASIBILITY_MARGIN_DB;
    match metrics::compression_point_with(k, &scale, pump, delta, &spec.compression) {
        Ok(r) => {
            // Open-ended compression ranks at the ceiling it is known to exceed.
            let p1db = r.p1db_dbm.unwrap_or(r.ceiling_dbm);
            Candidate {
                values: values.to_vec(),
                gain_db,
                p1db_dbm: Some(p1db),
                pump_power_dbm: Some(pump),
                feasible: feasible_gain,
                junctions,
                error: None,
            }
        }
        Err(e) => fail(gain_db, Some(pump), e),
    }
}

struct Search<'a> {
    spec: &'a OptimizeSpec,
    /// Evaluated points with the 1-based ordinal of their evaluation.
    cache: HashMap<Vec<u64>, (usize, Candidate)>,
    evaluations: usize,
    best: Option<Candidate>,
    trace: Vec<TraceStep>,
}

fn cache_key(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

impl<'a> Search<'a> {
    fn remaining(&self) -> usize {
        self.spec.budget.saturating_sub(self.evaluations)
    }

    /// Evaluate a batch in parallel, trimmed to the remaining budget, and
    /// offer each result to the incumbent in batch order.
    fn run_batch(&mut self, points: Vec<Vec<f64>>, phase: Phase) -> Vec<Candidate> {
        let mut fresh: Vec<Vec<f64>> = Vec::new();
        for p in &points {
            let k = cache_key(p);
            if !self.cache.contains_key(&k) && !fresh.iter().any(|f| cache_key(f) == k) {
                fresh.push(p.clone());
            }
        }
        fresh.truncate(self.remaining());
        let spec = self.spec;
        let results: Vec<Candidate> = fresh.par_iter().map(|p| evaluate(spec, p)).collect();
        for c in results {
            self.evaluations += 1;
            self.cache.insert(cache_key(&c.values), (self.evaluations, c));
        }
        let out: Vec<(usize, Candidate)> = points
            .iter()
            .filter_map(|p| self.cache.get(&cache_key(p)).cloned())
            .collect();
        for (ordinal, c) in &out {
            self.offer(c, *ordinal, phase);
        }
        out.into_iter().map(|(_, c)| c).collect()
    }

    fn offer(&mut self, c: &Candidate, evaluation: usize, phase: Phase) {
        let improves = match &self.best {
            None => true,
            Some(b) => c.better_than(b),
        };
        if improves {
            self.best = Some(c.clone());
            self.trace.push(TraceStep {
                evaluation,
                phase,
                candidate: c.clone(),
            });
        }
    }

    fn one(&mut self, p: Vec<f64>, phase: Phase) -> Option<Candidate> {
        self.run_batch(vec![p], phase).pop()
    }

    fn seed(&mut self) -> bool {
        match self.spec.lattice_size() {
            Some(n) if n <= self.spec.budget => {
                let points: Vec<Vec<f64>> = (0..n).map(|i| self.lattice_point(i)).collect();
                self.run_batch(points, Phase::Seed);
                true
            }
            _ => {
                let count = (self.spec.budget / 3).max(1);
                let points = latin_hypercube(&self.spec.dims, count, self.spec.seed);
                self.run_batch(points, Phase::Seed);
                false
            }
        }
    }

    fn lattice_point(&self, mut i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.spec.dims.len()];
        for (k, d) in self.spec.dims.iter().enumerate().rev() {
            let n = d.bounds.discrete_len().unwrap();
            out[k] = d.bounds.discrete_value(i % n);
            i /= n;
        }
        out
    }

    fn descend(&mut self) {
        loop {
            let mut improved = false;
            for k in 0..self.spec.dims.len() {
                if self.remaining() == 0 {
                    return;
                }
                let Some(current) = self.best.clone() else { return };
                let bounds = self.spec.dims[k].bounds.clone();
                match bounds.discrete_len() {
                    Some(n) => {
                        let i = bounds.discrete_index(current.values[k]);
                        let mut moves = Vec::new();
                        for j in [i.wrapping_sub(1), i + 1] {
                            if j < n {
                                let mut p = current.values.clone();
                                p[k] = bounds.discrete_value(j);
                                moves.push(p);
                            }
                        }
                        self.run_batch(moves, Phase::Neighbor);
                    }
                    None => {
                        let Bounds::Continuous { lo, hi } = bounds else { unreachable!() };
                        self.line_search(&current, k, lo, hi);
                    }
                }
                if self.best.as_ref().is_some_and(|b| b.better_than(&current)) {
                    improved = true;
                }
            }
            if !improved {
                return;
            }
        }
    }

    /// Golden-section search along dimension `k`, with both ends tried too
    /// since monotone objectives peak at a bound.
    fn line_search(&mut self, current: &Candidate, k: usize, lo: f64, hi: f64) {
        if hi <= lo {
            return;
        }
        let at = |v: f64| {
            let mut p = current.values.clone();
            p[k] = v;
            p
        };
        self.run_batch(vec![at(lo), at(hi)], Phase::Golden);
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let tol = GOLDEN_REL_TOL * (hi - lo);
        let (mut a, mut b) = (lo, hi);
        let mut x1 = b - INV_PHI * (b - a);
        let mut x2 = a + INV_PHI * (b - a);
        let mut f1 = match self.one(at(x1), Phase::Golden) {
            Some(c) => c.scalar(),
            None => return,
        };
        let mut f2 = match self.one(at(x2), Phase::Golden) {
            Some(c) => c.scalar(),
            None => return,
        };
        while b - a > tol {
            if f1 >= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - INV_PHI * (b - a);
                f1 = match self.one(at(x1), Phase::Golden) {
                    Some(c) => c.scalar(),
                    None => return,
                };
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + INV_PHI * (b - a);
                f2 = match self.one(at(x2), Phase::Golden) {
                    Some(c) => c.scalar(),
                    None => return,
                };
            }
        }
    }
}

/// `count` stratified samples: each dimension's unit interval is split into
/// `count` strata, visited in a seeded random order.
pub fn latin_hypercube(dims: &[SearchDim], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dims.len());
    for d in dims {
        let mut strata: Vec<usize> = (0..count).collect();
        strata.shuffle(&mut rng);
        columns.push(
            strata
                .into_iter()
                .map(|s| {
                    let u = (s as f64 + rng.random::<f64>()) / count as f64;
                    d.bounds.from_unit(u)
                })
                .collect(),
        );
    }
    (0..count).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

pub fn optimize_design(spec: &OptimizeSpec) -> Result<OptimizeResult> {
    spec.validate()?;
    let mut s = Search {
        spec,
        cache: HashMap::new(),
        evaluations: 0,
        best: None,
        trace: Vec::new(),
    };
    let exhaustive = s.seed();
    if !exhaustive {
        s.descend();
    }
    let best = s.best.clone().expect("at least one evaluation");
    if !best.feasible {
        let best_gain_db = s
            .cache
            .values()
            .map(|(_, c)| c.gain_db)
            .filter(|g| !g.is_nan())
            .fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::Infeasible {
            evaluations: s.evaluations,
            best_gain_db,
        });
    }
    Ok(OptimizeResult {
        best,
        trace: s.trace,
        evaluations: s.evaluations,
        exhaustive,
    })
}

/// Recompute a trace step from its parameter values.
pub fn replay(spec: &OptimizeSpec, step: &TraceStep) -> Candidate {
    evaluate(spec, &step.candidate.values)
}

/// Design with the search values applied, for reporting.
pub fn design_at(spec: &OptimizeSpec, values: &[f64]) -> BlochniumDesign {
    let mut base = spec.baseline;
    for (d, &v) in spec.dims.iter().zip(values) {
        base.set(d.param, v);
    }
    base.design
}
