//! Grover amplification, BBHT exponential search and Dürr–Høyer threshold
//! minimization.
//!
//! Amplification is simulated in the two-dimensional rotation subspace from
//! exact marked counts. Marked counts come from classical enumeration of
//! the decision space. A small statevector path checks the closed form
//! against real circuits.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Control, Gate, QubitId, STATEVECTOR_CAP};
use crate::instance::{bits_for, Instance, RouteSet};
use crate::oracle::{evaluate, Assignment, ENUMERATION_CAP_BITS, UNBOUNDED};

/// Default growth factor of the BBHT range bound.
pub const DEFAULT_LAMBDA: f64 = 8.0 / 7.0;
/// Default oracle-call budget for one minimization run.
pub const DEFAULT_MAX_ORACLE_CALLS: u64 = 100_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum GroverError {
    #[error("decision space of {bits} bits exceeds the enumeration cap of {cap}")]
    EnumerationCap { bits: usize, cap: usize },
    #[error("marked count {marked} exceeds search space size {size}")]
    MarkedExceedsSpace { marked: u64, size: u64 },
    #[error("lambda must lie strictly between 1 and 4/3, got {0}")]
    Lambda(f64),
    #[error("no feasible solution")]
    NoFeasibleSolution,
    #[error("oracle-call budget of {0} exhausted")]
    BudgetExhausted(u64),
    #[error("{what} has {found} entries, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// The decision registers: `n` tour positions of `b_node` bits plus `n`
/// split bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchSpace {
    pub n: usize,
    pub b_node: usize,
    pub decision_bits: usize,
}

impl SearchSpace {
    pub fn new(inst: &Instance) -> Self {
        let n = inst.n();
        let b_node = bits_for(n as u64);
        Self {
            n,
            b_node,
            decision_bits: n * b_node + n,
        }
    }

    /// `N = 2^decision_bits`, saturating at `u64::MAX`.
    pub fn size(&self) -> u64 {
        if self.decision_bits >= 64 {
            u64::MAX
        } else {
            1 << self.decision_bits
        }
    }

    pub fn decode(&self, index: u64) -> Assignment {
        Assignment::from_index(index, self.n, self.b_node)
    }

    fn check_cap(&self) -> Result<(), GroverError> {
        if self.decision_bits > ENUMERATION_CAP_BITS {
            return Err(GroverError::EnumerationCap {
                bits: self.decision_bits,
                cap: ENUMERATION_CAP_BITS,
            });
        }
        Ok(())
    }

    /// Cost of the assignment at `index` if it is feasible.
    ///
    /// Range and uniqueness are screened on the raw bits first, so most of
    /// the space is rejected without allocating.
    fn feasible_cost(&self, inst: &Instance, index: u64) -> Option<u64> {
        let mask = (1u64 << self.b_node) - 1;
        let mut seen = 0u64;
        for i in 0..self.n {
            let v = (index >> (i * self.b_node)) & mask;
            if v == 0 || v > self.n as u64 || seen & (1 << v) != 0 {
                return None;
            }
            seen |= 1 << v;
        }
        let a = self.decode(index);
        let r = evaluate(inst, UNBOUNDED, &a.tour, &a.splits);
        if r.marked {
            r.cost
        } else {
            None
        }
    }
}

const SCAN_CHUNK: u64 = 1 << 16;

/// Exact marked count at threshold `k` by enumerating the decision space.
/// Up to `keep` marked assignments are returned in index order.
pub fn count_marked(
    inst: &Instance,
    k: u64,
    keep: usize,
) -> Result<(u64, Vec<Assignment>), GroverError> {
    let space = SearchSpace::new(inst);
    space.check_cap()?;
    let size = space.size();
    let chunks: Vec<(u64, Vec<u64>)> = (0..size.div_ceil(SCAN_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut count = 0;
            let mut kept = Vec::new();
            for idx in c * SCAN_CHUNK..((c + 1) * SCAN_CHUNK).min(size) {
                if space.feasible_cost(inst, idx).is_some_and(|cost| cost < k) {
                    count += 1;
                    if kept.len() < keep {
                        kept.push(idx);
                    }
                }
            }
            (count, kept)
        })
        .collect();
    let total = chunks.iter().map(|(c, _)| c).sum();
    let sample = chunks
        .into_iter()
        .flat_map(|(_, kept)| kept)
        .take(keep)
        .map(|idx| space.decode(idx))
        .collect();
    Ok((total, sample))
}

/// Every feasible assignment with its cost, sorted by cost then index.
/// `M(k)` for any threshold is then a prefix length.
#[derive(Debug, Clone)]
pub struct MarkedSpace {
    space: SearchSpace,
    entries: Vec<(u64, u64)>,
}

impl MarkedSpace {
    pub fn scan(inst: &Instance) -> Result<Self, GroverError> {
        let space = SearchSpace::new(inst);
        space.check_cap()?;
        let size = space.size();
        let mut entries: Vec<(u64, u64)> = (0..size.div_ceil(SCAN_CHUNK))
            .into_par_iter()
            .flat_map_iter(|c| {
                (c * SCAN_CHUNK..((c + 1) * SCAN_CHUNK).min(size))
                    .filter_map(move |idx| space.feasible_cost(inst, idx).map(|cost| (cost, idx)))
            })
            .collect();
        entries.sort_unstable();
        Ok(Self { space, entries })
    }

    pub fn space(&self) -> SearchSpace {
        self.space
    }

    /// Number of assignments marked at threshold `k`.
    pub fn count(&self, k: u64) -> u64 {
        self.entries.partition_point(|&(cost, _)| cost < k) as u64
    }

    /// Uniform draw among the assignments marked at `k`.
    pub fn sample(&self, k: u64, rng: &mut impl Rng) -> Option<(u64, u64)> {
        let m = self.count(k) as usize;
        (m > 0).then(|| {
            let (cost, idx) = self.entries[rng.gen_range(0..m)];
            (idx, cost)
        })
    }
}

/// `sin^2((2m + 1) asin(sqrt(M / N)))`.
pub fn success_probability(size: u64, marked: u64, iterations: u64) -> Result<f64, GroverError> {
    if marked > size {
        return Err(GroverError::MarkedExceedsSpace { marked, size });
    }
    if marked == 0 {
        return Ok(0.0);
    }
    let theta = (marked as f64 / size as f64).sqrt().asin();
    Ok(((2 * iterations + 1) as f64 * theta).sin().powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasConfig {
    pub rng_seed: u64,
    pub lambda: f64,
    pub max_oracle_calls: u64,
    /// Starting threshold; `None` uses the identity tour with every route
    /// closed.
    pub initial_k: Option<u64>,
}

impl GasConfig {
    pub fn new(rng_seed: u64) -> Self {
        Self {
            rng_seed,
            lambda: DEFAULT_LAMBDA,
            max_oracle_calls: DEFAULT_MAX_ORACLE_CALLS,
            initial_k: None,
        }
    }

    pub fn validate(&self) -> Result<(), GroverError> {
        if self.lambda > 1.0 && self.lambda < 4.0 / 3.0 {
            Ok(())
        } else {
            Err(GroverError::Lambda(self.lambda))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Trial {
    pub m: u64,
    pub success: bool,
}

/// One BBHT run at a fixed threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ThresholdRecord {
    #[serde(serialize_with = "threshold_value")]
    pub k: u64,
    #[serde(rename = "M")]
    pub marked: u64,
    pub trials: Vec<Trial>,
    /// Cumulative over the whole run.
    pub oracle_calls: u64,
}

fn threshold_value<S: Serializer>(k: &u64, s: S) -> Result<S::Ok, S::Error> {
    if *k == UNBOUNDED {
        s.serialize_str("inf")
    } else {
        s.serialize_u64(*k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BestSolution {
    #[serde(rename = "P")]
    pub tour: Vec<usize>,
    #[serde(rename = "y", serialize_with = "bits_as_ints")]
    pub splits: Vec<bool>,
    pub cost: u64,
    #[serde(serialize_with = "routes_only")]
    pub routes: RouteSet,
}

fn bits_as_ints<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(bits.iter().map(|&b| u8::from(b)))
}

fn routes_only<S: Serializer>(r: &RouteSet, s: S) -> Result<S::Ok, S::Error> {
    r.routes.serialize(s)
}

impl BestSolution {
    fn from_assignment(a: &Assignment, cost: u64) -> Self {
        let tour = a.tour_ids();
        let routes = RouteSet::decode(tour.len(), &tour, &a.splits)
            .expect("feasible assignments close every route");
        Self {
            tour,
            splits: a.splits.clone(),
            cost,
            routes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchTrace {
    pub seed: u64,
    pub thresholds: Vec<ThresholdRecord>,
    pub best: Option<BestSolution>,
    /// True when the last threshold has no marked assignment.
    pub certified: bool,
}

impl SearchTrace {
    pub fn oracle_calls(&self) -> u64 {
        self.thresholds.last().map_or(0, |t| t.oracle_calls)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QsearchOutcome {
    /// Decision index and cost of the measured marked assignment.
    Found {
        index: u64,
        cost: u64,
    },
    /// `M(k) = 0` was certified by the exact count.
    NotFound,
    BudgetExhausted,
}

/// BBHT search at threshold `k`. Each trial draws `m` uniformly from
/// `[0, ceil(r))`, spends `m` oracle calls and succeeds with the closed-form
/// probability; the range bound grows by `lambda` up to `sqrt(N)`.
pub fn qsearch(
    marked: &MarkedSpace,
    k: u64,
    cfg: &GasConfig,
    rng: &mut impl Rng,
    calls: &mut u64,
) -> Result<(QsearchOutcome, ThresholdRecord), GroverError> {
    cfg.validate()?;
    let size = marked.space().size();
    let m_count = marked.count(k);
    let mut record = ThresholdRecord {
        k,
        marked: m_count,
        trials: Vec::new(),
        oracle_calls: *calls,
    };
    if m_count == 0 {
        return Ok((QsearchOutcome::NotFound, record));
    }
    let cap = (size as f64).sqrt();
    let mut r: f64 = 1.0;
    loop {
        let m = rng.gen_range(0..r.ceil() as u64);
        if *calls + m > cfg.max_oracle_calls {
            record.oracle_calls = *calls;
            return Ok((QsearchOutcome::BudgetExhausted, record));
        }
        *calls += m;
        let p = success_probability(size, m_count, m)?;
        let success = rng.gen::<f64>() < p;
        record.trials.push(Trial { m, success });
        record.oracle_calls = *calls;
        if success {
            let (index, cost) = marked.sample(k, rng).expect("M(k) > 0");
            return Ok((QsearchOutcome::Found { index, cost }, record));
        }
        r = (cfg.lambda * r).min(cap);
    }
}

/// Threshold used when none is configured: the identity tour with every
/// route closed, plus one, or unbounded if that tour is infeasible.
pub fn initial_threshold(inst: &Instance) -> (u64, Option<(Assignment, u64)>) {
    let n = inst.n();
    let a = Assignment::new((1..=n as u64).collect(), vec![true; n]);
    let r = evaluate(inst, UNBOUNDED, &a.tour, &a.splits);
    match (r.marked, r.cost) {
        (true, Some(cost)) => (cost + 1, Some((a, cost))),
        _ => (UNBOUNDED, None),
    }
}

/// Dürr–Høyer minimization using a prebuilt marked space.
///
/// Exhausting the oracle-call budget after a solution has been found
/// returns that solution with `certified = false`.
pub fn gas_minimize_in(
    inst: &Instance,
    marked: &MarkedSpace,
    cfg: &GasConfig,
) -> Result<SearchTrace, GroverError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let (mut k, mut best) = match cfg.initial_k {
        Some(k) => (k, None),
        None => {
            let (k, seed) = initial_threshold(inst);
            (
                k,
                seed.map(|(a, cost)| BestSolution::from_assignment(&a, cost)),
            )
        }
    };
    let mut trace = SearchTrace {
        seed: cfg.rng_seed,
        thresholds: Vec::new(),
        best: None,
        certified: false,
    };
    let mut calls = 0;
    loop {
        let (outcome, record) = qsearch(marked, k, cfg, &mut rng, &mut calls)?;
        trace.thresholds.push(record);
        match outcome {
            QsearchOutcome::Found { index, cost } => {
                log::debug!("threshold {k}: found cost {cost} after {calls} oracle calls");
                best = Some(BestSolution::from_assignment(
                    &marked.space().decode(index),
                    cost,
                ));
                k = cost;
            }
            QsearchOutcome::NotFound => {
                trace.certified = true;
                break;
            }
            QsearchOutcome::BudgetExhausted => {
                if best.is_none() {
                    return Err(GroverError::BudgetExhausted(cfg.max_oracle_calls));
                }
                break;
            }
        }
    }
    match best {
        Some(b) => {
            trace.best = Some(b);
            Ok(trace)
        }
        None => Err(GroverError::NoFeasibleSolution),
    }
}

/// Scans the decision space, then runs [`gas_minimize_in`].
pub fn gas_minimize(inst: &Instance, cfg: &GasConfig) -> Result<SearchTrace, GroverError> {
    cfg.validate()?;
    let marked = MarkedSpace::scan(inst)?;
    gas_minimize_in(inst, &marked, cfg)
}

/// Inversion about the uniform state on `qubits`, up to a global phase.
pub fn diffusion_gates(qubits: &[QubitId]) -> Vec<Gate> {
    let (&last, rest) = qubits.split_last().expect("at least one qubit");
    let mut g: Vec<Gate> = qubits.iter().map(|&q| Gate::H(q)).collect();
    g.extend(qubits.iter().map(|&q| Gate::X(q)));
    g.push(Gate::H(last));
    g.push(Gate::mcx(
        rest.iter().map(|&q| Control::pos(q)).collect(),
        last,
    ));
    g.push(Gate::H(last));
    g.extend(qubits.iter().map(|&q| Gate::X(q)));
    g.extend(qubits.iter().map(|&q| Gate::H(q)));
    g
}

/// Decision patterns flagged by a bit oracle (`flag ^= f(x)`), evaluated
/// with every other qubit at zero. Entry `x` has decision qubit `i` equal
/// to bit `i` of `x`.
pub fn oracle_marks(
    oracle: &Circuit,
    decision: &[QubitId],
    flag: QubitId,
) -> Result<Vec<bool>, GroverError> {
    let size = 1usize << decision.len();
    let mut marks = Vec::with_capacity(size);
    for base in (0..size).step_by(64) {
        let lanes_used = (size - base).min(64);
        let mut lanes = vec![0u64; oracle.qubit_count()];
        for (i, &q) in decision.iter().enumerate() {
            lanes[q] =
                (0..lanes_used).fold(0, |acc, l| acc | ((((base + l) >> i) & 1) as u64) << l);
        }
        oracle.eval_lanes(&mut lanes)?;
        marks.extend((0..lanes_used).map(|l| (lanes[flag] >> l) & 1 == 1));
    }
    Ok(marks)
}

/// Full statevector Grover on a bit oracle: uniform superposition over the
/// decision qubits, the flag in `|->`, then `m` rounds of oracle and
/// diffusion. Returns the probability mass on marked decision patterns.
pub fn statevector_grover(
    oracle: &Circuit,
    decision: &[QubitId],
    flag: QubitId,
    m: u64,
) -> Result<f64, GroverError> {
    let qubits = oracle.qubit_count();
    if qubits > STATEVECTOR_CAP {
        return Err(CircuitError::StatevectorCap {
            qubits,
            cap: STATEVECTOR_CAP,
        }
        .into());
    }
    let marks = oracle_marks(oracle, decision, flag)?;
    let mut c = Circuit::new(qubits);
    c.extend(decision.iter().map(|&q| Gate::H(q)))?;
    c.extend([Gate::X(flag), Gate::H(flag)])?;
    let diffusion = diffusion_gates(decision);
    for _ in 0..m {
        c.extend(oracle.gates().iter().cloned())?;
        c.extend(diffusion.iter().cloned())?;
    }
    let mut start = vec![Complex64::new(0.0, 0.0); 1 << qubits];
    start[0] = Complex64::new(1.0, 0.0);
    let out = c.eval_statevector(&start)?;
    Ok(out
        .iter()
        .enumerate()
        .filter(|(idx, _)| {
            let x = decision
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &q)| acc | (((idx >> q) & 1) << i));
            marks[x]
        })
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Grover restricted to the decision register: the oracle acts as the
/// phase pattern `marks`, so circuits far wider than the statevector cap
/// can be amplified once their marks are known.
pub fn reduced_grover(marks: &[bool], m: u64) -> Result<f64, GroverError> {
    let size = marks.len();
    if !size.is_power_of_two() || size.trailing_zeros() as usize > STATEVECTOR_CAP {
        return Err(GroverError::Length {
            what: "mark table",
            expected: size.next_power_of_two(),
            found: size,
        });
    }
    let amp = 1.0 / (size as f64).sqrt();
    let mut state = vec![amp; size];
    for _ in 0..m {
        for (a, &marked) in state.iter_mut().zip(marks) {
            if marked {
                *a = -*a;
            }
        }
        let mean = state.iter().sum::<f64>() / size as f64;
        for a in &mut state {
            *a = 2.0 * mean - *a;
        }
    }
    Ok(state
        .iter()
        .zip(marks)
        .filter(|(_, &marked)| marked)
        .map(|(a, _)| a * a)
        .sum())
}
