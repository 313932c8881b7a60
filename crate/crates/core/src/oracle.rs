//! The CVRPTW marking oracle as an explicit reversible circuit, and its
//! classical twin `mark_predicate`.
//!
//! Decision registers are the tour `P_1..P_n` (each `b_node` bits) and the
//! split bits `y_1..y_n`. Everything else is work space: the compute block
//! writes the constraint flags, one MCX folds them into `q`, and the mirror
//! of the compute block returns all work qubits to 0.
//!
//! Conventions:
//! - `y_{i-1}` decides whether position `i` starts a new route; `y_0 = 1`.
//! - `y_n` must be 1; assignments with `y_n = 0` are unmarked.
//! - Tour values outside `1..=n` are unmarked (range flags folded into AD).
//! - The cost test is strict, `cost < k`. A `k` above every representable
//!   cost makes the test vacuous.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, Control, Gate, QubitId, Register};
use crate::instance::Instance;
use crate::qarith::{self, ArithError, Gates};
use crate::resources::{register_widths, RegisterWidths};

/// Threshold meaning "no cost bound".
pub const UNBOUNDED: u64 = u64::MAX;

/// Largest decision space scanned exhaustively.
pub const ENUMERATION_CAP_BITS: usize = 26;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("decision space of {bits} bits exceeds the enumeration cap of {cap}")]
    EnumerationCap { bits: usize, cap: usize },
}

/// A raw decision assignment: tour values as read from the P registers
/// (possibly out of range) and the split bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Assignment {
    pub tour: Vec<u64>,
    pub splits: Vec<bool>,
}

impl Assignment {
    pub fn new(tour: Vec<u64>, splits: Vec<bool>) -> Self {
        Self { tour, splits }
    }

    /// Decodes a decision index: `P_i` occupies bits `(i-1) b .. i b`, and
    /// `y_i` sits at bit `n b + i - 1`.
    pub fn from_index(index: u64, n: usize, b_node: usize) -> Self {
        let mask = (1u64 << b_node) - 1;
        let tour = (0..n).map(|i| (index >> (i * b_node)) & mask).collect();
        let splits = (0..n)
            .map(|i| (index >> (n * b_node + i)) & 1 == 1)
            .collect();
        Self { tour, splits }
    }

    pub fn to_index(&self, b_node: usize) -> u64 {
        let n = self.tour.len();
        let p = self
            .tour
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &v)| acc | (v << (i * b_node)));
        self.splits
            .iter()
            .enumerate()
            .fold(p, |acc, (i, &y)| acc | (u64::from(y) << (n * b_node + i)))
    }

    /// Tour entries as node ids, without range checks.
    pub fn tour_ids(&self) -> Vec<usize> {
        self.tour.iter().map(|&v| v as usize).collect()
    }
}

/// Constraint family that rejected an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Failure {
    Range,
    Uniqueness,
    /// The last route is left open (`y_n = 0`).
    FinalSplit,
    Capacity,
    Time,
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkPredicateResult {
    pub marked: bool,
    pub cost: Option<u64>,
    pub failure: Option<Failure>,
}

/// Classical evaluation of the oracle definition.
pub fn mark_predicate(inst: &Instance, k: u64, a: &Assignment) -> MarkPredicateResult {
    evaluate(inst, k, &a.tour, &a.splits)
}

fn reject(failure: Failure, cost: Option<u64>) -> MarkPredicateResult {
    MarkPredicateResult {
        marked: false,
        cost,
        failure: Some(failure),
    }
}

pub(crate) fn evaluate(
    inst: &Instance,
    k: u64,
    tour: &[u64],
    splits: &[bool],
) -> MarkPredicateResult {
    let n = inst.n();
    if tour.len() != n || tour.iter().any(|&v| v == 0 || v > n as u64) {
        return reject(Failure::Range, None);
    }
    for i in 1..n {
        if tour[..i].contains(&tour[i]) {
            return reject(Failure::Uniqueness, None);
        }
    }
    let p = |i: usize| tour[i] as usize;
    let mut cost = inst.distance(0, p(0)) + inst.distance(p(n - 1), 0);
    for i in 1..n {
        cost += if splits[i - 1] {
            inst.distance(p(i - 1), 0) + inst.distance(0, p(i))
        } else {
            inst.distance(p(i - 1), p(i))
        };
    }
    if !splits[n - 1] {
        return reject(Failure::FinalSplit, Some(cost));
    }
    let mut load = 0;
    for i in 0..n {
        let carried = if i == 0 || splits[i - 1] { 0 } else { load };
        load = inst.demand(p(i)) + carried;
        if load > inst.c_max() {
            return reject(Failure::Capacity, Some(cost));
        }
    }
    let mut time = 0;
    for i in 0..n {
        let window = inst.window(p(i));
        let arrival = if i == 0 || splits[i - 1] {
            inst.travel_time(0, p(i))
        } else {
            time + inst.travel_time(p(i - 1), p(i))
        };
        time = arrival.max(window.open);
        if time > window.close {
            return reject(Failure::Time, Some(cost));
        }
    }
    if cost >= k {
        return reject(Failure::Threshold, Some(cost));
    }
    MarkPredicateResult {
        marked: true,
        cost: Some(cost),
        failure: None,
    }
}

/// Qubit map of the oracle. Registers are allocated in field order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleLayout {
    pub n: usize,
    pub widths: RegisterWidths,
    pub tour: Vec<Register>,
    pub splits: Register,
    /// One flag per pair `(i, j)`, `i < j`, in row-major order.
    pub neq: Register,
    pub range: Register,
    pub ad: QubitId,
    pub load: Vec<Register>,
    pub kappa: Register,
    pub time: Vec<Register>,
    pub choice: Register,
    pub tau: Register,
    pub cost: Register,
    pub delta: QubitId,
    pub q_out: QubitId,
    /// Candidate arrival time, rebuilt and cleared at every position.
    pub candidate: Register,
    /// Staging area for encoded table values and constants.
    pub scratch: Register,
    pub carry: QubitId,
    shell: Circuit,
}

impl OracleLayout {
    pub fn qubit_count(&self) -> usize {
        self.shell.qubit_count()
    }

    /// Empty circuit carrying the named registers.
    pub fn shell(&self) -> Circuit {
        self.shell.clone()
    }

    pub fn decision_bits(&self) -> usize {
        self.n * self.widths.b_node + self.n
    }

    /// Decision qubits in index-bit order (P registers, then y).
    pub fn decision_qubits(&self) -> Vec<QubitId> {
        (0..self.decision_bits()).collect()
    }

    /// Every qubit except the decision registers and `q`.
    pub fn work_qubits(&self) -> Vec<QubitId> {
        (self.decision_bits()..self.qubit_count())
            .filter(|&q| q != self.q_out)
            .collect()
    }

    fn pair_flag(&self, i: usize, j: usize) -> QubitId {
        debug_assert!(i < j && j < self.n);
        let before: usize = (0..i).map(|r| self.n - 1 - r).sum();
        self.neq.bit(before + (j - i - 1))
    }

    /// Index register for a pair lookup: `P_{i-1}` low bits, `P_i` high bits.
    fn pair_index(&self, i: usize) -> Vec<QubitId> {
        let mut idx = self.tour[i - 1].qubits();
        idx.extend(self.tour[i].qubits());
        idx
    }

    fn pair_table(&self, f: impl Fn(usize, usize) -> u64) -> Vec<u64> {
        let b = self.widths.b_node;
        let mut table = vec![0; 1 << (2 * b)];
        for u in 1..=self.n {
            for v in 1..=self.n {
                table[u | (v << b)] = f(u, v);
            }
        }
        table
    }

    fn node_table(&self, f: impl Fn(usize) -> u64) -> Vec<u64> {
        (0..=self.n)
            .map(|v| if v == 0 { 0 } else { f(v) })
            .collect()
    }
}

/// Allocates the register map for `inst`. Deterministic.
pub fn build_layout(inst: &Instance) -> Result<OracleLayout, OracleError> {
    let n = inst.n();
    let widths = register_widths(inst);
    let mut c = Circuit::new(0);
    let tour = (1..=n)
        .map(|i| c.add_register(&format!("P{i}"), widths.b_node))
        .collect::<Result<Vec<_>, _>>()?;
    let splits = c.add_register("y", n)?;
    let neq = c.add_register("neq", n * (n - 1) / 2)?;
    let range = c.add_register("range", n)?;
    let ad = c.add_register("AD", 1)?.start;
    let load = (1..=n)
        .map(|i| c.add_register(&format!("c{i}"), widths.load_register()))
        .collect::<Result<Vec<_>, _>>()?;
    let kappa = c.add_register("kappa", n)?;
    let time = (1..=n)
        .map(|i| c.add_register(&format!("t{i}"), widths.time_register()))
        .collect::<Result<Vec<_>, _>>()?;
    let choice = c.add_register("choice", n)?;
    let tau = c.add_register("tau", n)?;
    let cost = c.add_register("w", widths.w_cost)?;
    let delta = c.add_register("delta", 1)?.start;
    let q_out = c.add_register("q", 1)?.start;
    let candidate = c.add_register("cand", widths.time_register())?;
    let scratch = c.add_register("scratch", widths.scratch())?;
    let carry = c.add_register("carry", 1)?.start;
    Ok(OracleLayout {
        n,
        widths,
        tour,
        splits,
        neq,
        range,
        ad,
        load,
        kappa,
        time,
        choice,
        tau,
        cost,
        delta,
        q_out,
        candidate,
        scratch,
        carry,
        shell: c,
    })
}

fn into_circuit(layout: &OracleLayout, gates: Gates) -> Result<Circuit, OracleError> {
    let mut c = layout.shell();
    c.extend(gates)?;
    Ok(c)
}

fn uniqueness_gates(layout: &OracleLayout) -> Result<Gates, OracleError> {
    let n = layout.n;
    let mut gates = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            gates.extend(qarith::build_pair_neq(
                &layout.tour[i].qubits(),
                &layout.tour[j].qubits(),
                layout.pair_flag(i, j),
            )?);
        }
    }
    let valid = layout.node_table(|_| 1);
    for i in 0..n {
        gates.extend(qarith::build_conditional_encoder(
            &layout.tour[i].qubits(),
            &valid,
            &[layout.range.bit(i)],
            &[],
        )?);
    }
    let mut flags = layout.neq.qubits();
    flags.extend(layout.range.qubits());
    gates.extend(qarith::build_and_reduce(&flags, layout.ad)?);
    Ok(gates)
}

/// Pairwise inequality and range flags, AND-reduced into AD.
pub fn build_uniqueness(layout: &OracleLayout) -> Result<Circuit, OracleError> {
    into_circuit(layout, uniqueness_gates(layout)?)
}

fn capacity_gates(layout: &OracleLayout, inst: &Instance) -> Result<Gates, OracleError> {
    let demands = layout.node_table(|v| inst.demand(v));
    let width = layout.widths.load_register();
    let tmp = layout.scratch.prefix(width).qubits();
    let mut gates = Vec::new();
    for i in 0..layout.n {
        let load = layout.load[i].qubits();
        gates.extend(qarith::build_conditional_encoder(
            &layout.tour[i].qubits(),
            &demands,
            &load,
            &[],
        )?);
        if i > 0 {
            let carry_over = [Control::neg(layout.splits.bit(i - 1))];
            let copy = qarith::xor_register(&layout.load[i - 1].qubits(), &tmp, &carry_over)?;
            gates.extend(copy.iter().cloned());
            gates.extend(qarith::build_adder(&tmp, &load, layout.carry)?);
            gates.extend(copy);
        }
        gates.extend(qarith::build_leq_const(
            &load,
            inst.c_max(),
            layout.kappa.bit(i),
            &tmp,
            layout.carry,
        )?);
    }
    Ok(gates)
}

/// Loads `c_i = q_{P_i} + c_{i-1} (1 - y_{i-1})` and flags `κ_i = [c_i <= C]`.
pub fn build_capacity_chain(
    layout: &OracleLayout,
    inst: &Instance,
) -> Result<Circuit, OracleError> {
    into_circuit(layout, capacity_gates(layout, inst)?)
}

fn time_gates(layout: &OracleLayout, inst: &Instance) -> Result<Gates, OracleError> {
    let width = layout.widths.time_register();
    // Legs longer than t_max + 1 are infeasible whatever their length, so
    // clamping keeps every encoded value inside the register.
    let clamp = layout.widths.t_max + 1;
    let leg = |u: usize, v: usize| inst.travel_time(u, v).min(clamp);
    let from_depot = layout.node_table(|v| leg(0, v));
    let between = layout.pair_table(leg);
    let opens = layout.node_table(|v| inst.window(v).open);
    let closes = layout.node_table(|v| inst.window(v).close);
    let cand = layout.candidate.qubits();
    let tmp = layout.scratch.prefix(width).qubits();
    let mut gates = Vec::new();
    for i in 0..layout.n {
        let here = layout.tour[i].qubits();
        let mut arrive = Vec::new();
        if i == 0 {
            arrive.extend(qarith::build_conditional_encoder(
                &here,
                &from_depot,
                &cand,
                &[],
            )?);
        } else {
            let split = layout.splits.bit(i - 1);
            arrive.extend(qarith::build_conditional_encoder(
                &here,
                &from_depot,
                &cand,
                &[Control::pos(split)],
            )?);
            let carry_over = [Control::neg(split)];
            arrive.extend(qarith::xor_register(
                &layout.time[i - 1].qubits(),
                &cand,
                &carry_over,
            )?);
            let stage = qarith::build_conditional_encoder(
                &layout.pair_index(i),
                &between,
                &tmp,
                &carry_over,
            )?;
            arrive.extend(stage.iter().cloned());
            arrive.extend(qarith::build_adder(&tmp, &cand, layout.carry)?);
            arrive.extend(stage);
        }
        gates.extend(arrive.iter().cloned());

        let open = qarith::build_conditional_encoder(&here, &opens, &tmp, &[])?;
        gates.extend(open.iter().cloned());
        gates.extend(qarith::build_max_into(
            &cand,
            &tmp,
            &layout.time[i].qubits(),
            layout.choice.bit(i),
            layout.carry,
        )?);
        gates.extend(open);

        gates.extend(arrive.into_iter().rev());

        let close = qarith::build_conditional_encoder(&here, &closes, &tmp, &[])?;
        gates.extend(close.iter().cloned());
        gates.extend(qarith::build_leq(
            &layout.time[i].qubits(),
            &tmp,
            layout.tau.bit(i),
            layout.carry,
        )?);
        gates.extend(close);
    }
    Ok(gates)
}

/// Arrival times `t_i = max(a_{P_i}, T_{0,P_i})` after a split, otherwise
/// `max(a_{P_i}, t_{i-1} + T_{P_{i-1},P_i})`; flags `τ_i = [t_i <= b_{P_i}]`.
pub fn build_time_chain(layout: &OracleLayout, inst: &Instance) -> Result<Circuit, OracleError> {
    into_circuit(layout, time_gates(layout, inst)?)
}

fn cost_gates(layout: &OracleLayout, inst: &Instance, k: u64) -> Result<Gates, OracleError> {
    let w = layout.cost.qubits();
    let tmp = layout.scratch.prefix(w.len()).qubits();
    let d = |u: usize, v: usize| inst.distance(u, v);
    let mut gates = Vec::new();
    let mut accumulate = |stage: Gates| -> Result<(), OracleError> {
        gates.extend(stage.iter().cloned());
        gates.extend(qarith::build_adder(&tmp, &w, layout.carry)?);
        gates.extend(stage);
        Ok(())
    };
    let n = layout.n;
    accumulate(qarith::build_conditional_encoder(
        &layout.tour[0].qubits(),
        &layout.node_table(|v| d(0, v)),
        &tmp,
        &[],
    )?)?;
    let via_depot = layout.pair_table(|u, v| d(u, 0) + d(0, v));
    let direct = layout.pair_table(d);
    for i in 1..n {
        let split = layout.splits.bit(i - 1);
        let idx = layout.pair_index(i);
        let mut stage =
            qarith::build_conditional_encoder(&idx, &via_depot, &tmp, &[Control::pos(split)])?;
        stage.extend(qarith::build_conditional_encoder(
            &idx,
            &direct,
            &tmp,
            &[Control::neg(split)],
        )?);
        accumulate(stage)?;
    }
    accumulate(qarith::build_conditional_encoder(
        &layout.tour[n - 1].qubits(),
        &layout.node_table(|v| d(v, 0)),
        &tmp,
        &[],
    )?)?;
    if k >> w.len() != 0 {
        // Every representable cost is below k.
        gates.push(Gate::X(layout.delta));
    } else {
        gates.extend(qarith::build_lt_const(
            &w,
            k,
            layout.delta,
            &tmp,
            layout.carry,
        )?);
    }
    Ok(gates)
}

/// Accumulates the tour cost into `w` and sets `δ = [w < k]`.
pub fn build_cost_accumulator(
    layout: &OracleLayout,
    inst: &Instance,
    k: u64,
) -> Result<Circuit, OracleError> {
    into_circuit(layout, cost_gates(layout, inst, k)?)
}

/// The full marking oracle: `q ^= O(P, y, k)`, all work qubits restored.
pub fn build_oracle(inst: &Instance, k: u64) -> Result<(OracleLayout, Circuit), OracleError> {
    let layout = build_layout(inst)?;
    let mut compute = uniqueness_gates(&layout)?;
    compute.extend(capacity_gates(&layout, inst)?);
    compute.extend(time_gates(&layout, inst)?);
    compute.extend(cost_gates(&layout, inst, k)?);

    let mut flags = vec![layout.ad];
    flags.extend(layout.kappa.qubits());
    flags.extend(layout.tau.qubits());
    flags.push(layout.delta);
    flags.push(layout.splits.bit(layout.n - 1));

    let mut gates = compute.clone();
    gates.extend(qarith::build_and_reduce(&flags, layout.q_out)?);
    gates.extend(compute.into_iter().rev());
    let circuit = into_circuit(&layout, gates)?;
    Ok((layout, circuit))
}

/// Phase-flip form: `|x> -> (-1)^O(x) |x>` with `q` starting and ending in |0>.
pub fn build_phase_oracle(inst: &Instance, k: u64) -> Result<(OracleLayout, Circuit), OracleError> {
    let (layout, marking) = build_oracle(inst, k)?;
    let q = layout.q_out;
    let mut c = layout.shell();
    c.extend([Gate::X(q), Gate::H(q)])?;
    c.extend(marking.gates().iter().cloned())?;
    c.extend([Gate::H(q), Gate::X(q)])?;
    Ok((layout, c))
}

/// Outcome of comparing the oracle circuit against `mark_predicate`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub assignments_checked: u64,
    pub mismatches: u64,
    /// Assignments after which a work qubit was left set or a decision
    /// bit changed.
    pub dirty_ancillas: u64,
}

impl VerifyReport {
    fn merge(self, other: Self) -> Self {
        Self {
            assignments_checked: self.assignments_checked + other.assignments_checked,
            mismatches: self.mismatches + other.mismatches,
            dirty_ancillas: self.dirty_ancillas + other.dirty_ancillas,
        }
    }

    pub fn is_clean(&self) -> bool {
        self.mismatches == 0 && self.dirty_ancillas == 0
    }
}

/// Runs the oracle on up to 64 decision indices at once and checks each
/// lane against the predicate.
fn check_batch(
    inst: &Instance,
    k: u64,
    layout: &OracleLayout,
    circuit: &Circuit,
    batch: &[u64],
) -> Result<VerifyReport, OracleError> {
    let used = if batch.len() == 64 {
        u64::MAX
    } else {
        (1u64 << batch.len()) - 1
    };
    let mut lanes = vec![0u64; circuit.qubit_count()];
    for q in layout.decision_qubits() {
        lanes[q] = batch
            .iter()
            .enumerate()
            .fold(0, |acc, (l, &idx)| acc | (((idx >> q) & 1) << l));
    }
    let before = lanes.clone();
    circuit.eval_lanes(&mut lanes)?;

    let mut dirty = 0u64;
    for q in layout.decision_qubits() {
        dirty |= lanes[q] ^ before[q];
    }
    for q in layout.work_qubits() {
        dirty |= lanes[q];
    }
    dirty &= used;

    let mut expected = 0u64;
    for (l, &idx) in batch.iter().enumerate() {
        let a = Assignment::from_index(idx, layout.n, layout.widths.b_node);
        if mark_predicate(inst, k, &a).marked {
            expected |= 1 << l;
        }
    }
    Ok(VerifyReport {
        assignments_checked: batch.len() as u64,
        mismatches: u64::from(((lanes[layout.q_out] ^ expected) & used).count_ones()),
        dirty_ancillas: u64::from(dirty.count_ones()),
    })
}

/// Checks the given decision indices against a prebuilt oracle.
pub fn verify_indices(
    inst: &Instance,
    k: u64,
    layout: &OracleLayout,
    circuit: &Circuit,
    indices: &[u64],
) -> Result<VerifyReport, OracleError> {
    indices
        .par_chunks(64)
        .map(|batch| check_batch(inst, k, layout, circuit, batch))
        .try_reduce(VerifyReport::default, |a, b| Ok(a.merge(b)))
}

/// Compares oracle and predicate on every decision assignment.
pub fn verify_exhaustive(inst: &Instance, k: u64) -> Result<VerifyReport, OracleError> {
    let layout = build_layout(inst)?;
    let bits = layout.decision_bits();
    if bits > ENUMERATION_CAP_BITS {
        return Err(OracleError::EnumerationCap {
            bits,
            cap: ENUMERATION_CAP_BITS,
        });
    }
    let (layout, circuit) = build_oracle(inst, k)?;
    let indices: Vec<u64> = (0..1u64 << bits).collect();
    verify_indices(inst, k, &layout, &circuit, &indices)
}

/// Compares oracle and predicate on `samples` seeded random assignments.
/// Half are uniform over the decision space; the other half are random
/// permutations with random splits, so feasible and marked assignments are
/// well represented.
pub fn verify_sampled(
    inst: &Instance,
    k: u64,
    samples: u64,
    seed: u64,
) -> Result<VerifyReport, OracleError> {
    let (layout, circuit) = build_oracle(inst, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<u64> = (0..samples)
        .map(|s| random_index(&mut rng, &layout, s % 2 == 1))
        .collect();
    verify_indices(inst, k, &layout, &circuit, &indices)
}

pub(crate) fn random_index(rng: &mut impl Rng, layout: &OracleLayout, permutation: bool) -> u64 {
    let bits = layout.decision_bits();
    if !permutation {
        return if bits >= 64 {
            rng.gen()
        } else {
            rng.gen_range(0..1u64 << bits)
        };
    }
    let mut tour: Vec<u64> = (1..=layout.n as u64).collect();
    rand::seq::SliceRandom::shuffle(tour.as_mut_slice(), rng);
    let splits = (0..layout.n).map(|_| rng.gen()).collect();
    Assignment::new(tour, splits).to_index(layout.widths.b_node)
}
