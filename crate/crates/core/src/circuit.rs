//! Gate-level IR for reversible circuits over `{X, H, MCX}`.
//!
//! Bit order: qubit 0 of a register is the least significant bit of the
//! integer the register encodes. Basis states print with qubit 0 leftmost.
//! In a statevector, qubit `q` is bit `q` of the amplitude index.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub type QubitId = usize;

/// Default statevector limit: 2^26 amplitudes of 16 bytes is 1 GiB.
pub const STATEVECTOR_CAP: usize = 26;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("qubit {qubit} out of range for a {qubit_count}-qubit circuit")]
    OutOfRange { qubit: QubitId, qubit_count: usize },
    #[error("gate on qubit {0} repeats a qubit among its controls and target")]
    RepeatedQubit(QubitId),
    #[error("register `{0}` already exists")]
    DuplicateRegister(String),
    #[error("basis evaluation supports permutation gates only (H found)")]
    NonPermutation,
    #[error("basis state has {found} bits, circuit has {expected} qubits")]
    StateLength { expected: usize, found: usize },
    #[error("statevector of {qubits} qubits exceeds the cap of {cap}")]
    StatevectorCap { qubits: usize, cap: usize },
    #[error("amplitude vector has length {found}, expected {expected}")]
    AmplitudeLength { expected: usize, found: usize },
    #[error("input state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Control {
    pub qubit: QubitId,
    pub polarity: Polarity,
}

impl Control {
    pub fn pos(qubit: QubitId) -> Self {
        Self {
            qubit,
            polarity: Polarity::Positive,
        }
    }

    pub fn neg(qubit: QubitId) -> Self {
        Self {
            qubit,
            polarity: Polarity::Negative,
        }
    }

    /// Control that fires when `qubit` reads `value`.
    pub fn on(qubit: QubitId, value: bool) -> Self {
        if value {
            Self::pos(qubit)
        } else {
            Self::neg(qubit)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Gate {
    X(QubitId),
    H(QubitId),
    /// Flips `target` iff every positive control reads 1 and every negative
    /// control reads 0. Always has at least one control.
    Mcx {
        controls: Vec<Control>,
        target: QubitId,
    },
}

impl Gate {
    /// X with the given controls; degrades to a plain X when there are none.
    pub fn mcx(controls: Vec<Control>, target: QubitId) -> Self {
        if controls.is_empty() {
            Gate::X(target)
        } else {
            Gate::Mcx { controls, target }
        }
    }

    pub fn cx(control: QubitId, target: QubitId) -> Self {
        Self::mcx(vec![Control::pos(control)], target)
    }

    pub fn ccx(c0: QubitId, c1: QubitId, target: QubitId) -> Self {
        Self::mcx(vec![Control::pos(c0), Control::pos(c1)], target)
    }

    pub fn target(&self) -> QubitId {
        match self {
            Gate::X(t) | Gate::H(t) => *t,
            Gate::Mcx { target, .. } => *target,
        }
    }

    pub fn controls(&self) -> &[Control] {
        match self {
            Gate::Mcx { controls, .. } => controls,
            _ => &[],
        }
    }

    /// Adds `extra` controls. Panics on H, which has no controlled form in
    /// this gate set.
    pub fn controlled_by(self, extra: &[Control]) -> Gate {
        if extra.is_empty() {
            return self;
        }
        match self {
            Gate::X(t) => Gate::mcx(extra.to_vec(), t),
            Gate::Mcx {
                mut controls,
                target,
            } => {
                controls.extend_from_slice(extra);
                Gate::Mcx { controls, target }
            }
            Gate::H(_) => panic!("controlled H is outside the gate set"),
        }
    }

    fn check(&self, qubit_count: usize) -> Result<(), CircuitError> {
        let target = self.target();
        let in_range = |q: QubitId| {
            if q < qubit_count {
                Ok(())
            } else {
                Err(CircuitError::OutOfRange {
                    qubit: q,
                    qubit_count,
                })
            }
        };
        in_range(target)?;
        let controls = self.controls();
        for (i, c) in controls.iter().enumerate() {
            in_range(c.qubit)?;
            if c.qubit == target || controls[..i].iter().any(|d| d.qubit == c.qubit) {
                return Err(CircuitError::RepeatedQubit(c.qubit));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X(t) => write!(f, "X t{t}"),
            Gate::H(t) => write!(f, "H t{t}"),
            Gate::Mcx { controls, target } => {
                f.write_str("MCX")?;
                for c in controls {
                    let sign = match c.polarity {
                        Polarity::Positive => '+',
                        Polarity::Negative => '-',
                    };
                    write!(f, " c{sign}{}", c.qubit)?;
                }
                write!(f, " t{target}")
            }
        }
    }
}

/// Contiguous qubit range `start..start + width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Register {
    pub start: QubitId,
    pub width: usize,
}

impl Register {
    pub fn new(start: QubitId, width: usize) -> Self {
        Self { start, width }
    }

    /// Qubit holding bit `i` (bit 0 is least significant).
    pub fn bit(&self, i: usize) -> QubitId {
        debug_assert!(i < self.width);
        self.start + i
    }

    pub fn qubits(&self) -> Vec<QubitId> {
        (self.start..self.start + self.width).collect()
    }

    /// The first `width` qubits of this register.
    pub fn prefix(&self, width: usize) -> Register {
        assert!(width <= self.width, "prefix wider than register");
        Register::new(self.start, width)
    }

    pub fn end(&self) -> QubitId {
        self.start + self.width
    }
}

/// Gate totals by kind and MCX control arity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ResourceReport {
    pub qubit_count: usize,
    pub gate_total: usize,
    pub x_count: usize,
    pub h_count: usize,
    pub mcx_by_arity: BTreeMap<usize, usize>,
}

impl ResourceReport {
    pub fn mcx_total(&self) -> usize {
        self.mcx_by_arity.values().sum()
    }
}

/// One computational basis state, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisState {
    bits: Vec<bool>,
}

impl BasisState {
    pub fn zeros(len: usize) -> Self {
        Self {
            bits: vec![false; len],
        }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters, qubit 0 first.
    pub fn parse(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self::from_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, q: QubitId) -> bool {
        self.bits[q]
    }

    pub fn set(&mut self, q: QubitId, v: bool) {
        self.bits[q] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Integer held by `reg`, least significant bit first.
    pub fn read(&self, reg: Register) -> u64 {
        (0..reg.width).fold(0, |acc, i| acc | (u64::from(self.bits[reg.bit(i)]) << i))
    }

    pub fn write(&mut self, reg: Register, value: u64) {
        for i in 0..reg.width {
            self.bits[reg.bit(i)] = (value >> i) & 1 == 1;
        }
    }

    /// Statevector index with qubit `q` at bit `q`.
    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (q, &b)| acc | (usize::from(b) << q))
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// A reversible circuit: qubit count, named registers and an ordered gate list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Circuit {
    qubit_count: usize,
    registers: Vec<(String, Register)>,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(qubit_count: usize) -> Self {
        Self {
            qubit_count,
            ..Self::default()
        }
    }

    /// Appends a fresh register after all existing qubits.
    pub fn add_register(&mut self, name: &str, width: usize) -> Result<Register, CircuitError> {
        if self.registers.iter().any(|(n, _)| n == name) {
            return Err(CircuitError::DuplicateRegister(name.to_string()));
        }
        let reg = Register::new(self.qubit_count, width);
        self.qubit_count += width;
        self.registers.push((name.to_string(), reg));
        Ok(reg)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn register(&self, name: &str) -> Option<Register> {
        self.registers
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, r)| r)
    }

    pub fn registers(&self) -> &[(String, Register)] {
        &self.registers
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        gate.check(self.qubit_count)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<(), CircuitError> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    /// Same registers, gates in reverse order. Every gate in the set is
    /// self-inverse.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            qubit_count: self.qubit_count,
            registers: self.registers.clone(),
            gates: self.gates.iter().rev().cloned().collect(),
        }
    }

    /// This circuit followed by the gates of `next`.
    pub fn then(&self, next: &Circuit) -> Result<Circuit, CircuitError> {
        let mut out = self.clone();
        out.qubit_count = out.qubit_count.max(next.qubit_count);
        out.extend(next.gates.iter().cloned())?;
        Ok(out)
    }

    pub fn count_resources(&self) -> ResourceReport {
        let mut report = ResourceReport {
            qubit_count: self.qubit_count,
            gate_total: self.gates.len(),
            ..ResourceReport::default()
        };
        for g in &self.gates {
            match g {
                Gate::X(_) => report.x_count += 1,
                Gate::H(_) => report.h_count += 1,
                Gate::Mcx { controls, .. } => {
                    *report.mcx_by_arity.entry(controls.len()).or_default() += 1
                }
            }
        }
        report
    }

    /// One gate per line, e.g. `MCX c+3 c-5 t7`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Image of `state` under the circuit's permutation.
    pub fn eval_basis(&self, state: &BasisState) -> Result<BasisState, CircuitError> {
        if state.len() != self.qubit_count {
            return Err(CircuitError::StateLength {
                expected: self.qubit_count,
                found: state.len(),
            });
        }
        let mut lanes: Vec<u64> = state.bits.iter().map(|&b| u64::from(b)).collect();
        self.eval_lanes(&mut lanes)?;
        Ok(BasisState::from_bits(
            lanes.iter().map(|&l| l & 1 == 1).collect(),
        ))
    }

    /// Bit-sliced basis evaluation of up to 64 states at once: bit `j` of
    /// `lanes[q]` is qubit `q` of state `j`.
    pub fn eval_lanes(&self, lanes: &mut [u64]) -> Result<(), CircuitError> {
        if lanes.len() != self.qubit_count {
            return Err(CircuitError::StateLength {
                expected: self.qubit_count,
                found: lanes.len(),
            });
        }
        for g in &self.gates {
            match g {
                Gate::X(t) => lanes[*t] = !lanes[*t],
                Gate::H(_) => return Err(CircuitError::NonPermutation),
                Gate::Mcx { controls, target } => {
                    let mut mask = u64::MAX;
                    for c in controls {
                        mask &= match c.polarity {
                            Polarity::Positive => lanes[c.qubit],
                            Polarity::Negative => !lanes[c.qubit],
                        };
                        if mask == 0 {
                            break;
                        }
                    }
                    lanes[*target] ^= mask;
                }
            }
        }
        Ok(())
    }

    pub fn is_permutation(&self) -> bool {
        !self.gates.iter().any(|g| matches!(g, Gate::H(_)))
    }

    /// Applies the circuit to a dense statevector, with the default cap.
    pub fn eval_statevector(
        &self,
        amplitudes: &[Complex64],
    ) -> Result<Vec<Complex64>, CircuitError> {
        self.eval_statevector_capped(amplitudes, STATEVECTOR_CAP)
    }

    pub fn eval_statevector_capped(
        &self,
        amplitudes: &[Complex64],
        cap: usize,
    ) -> Result<Vec<Complex64>, CircuitError> {
        if self.qubit_count > cap {
            return Err(CircuitError::StatevectorCap {
                qubits: self.qubit_count,
                cap,
            });
        }
        let dim = 1usize << self.qubit_count;
        if amplitudes.len() != dim {
            return Err(CircuitError::AmplitudeLength {
                expected: dim,
                found: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(CircuitError::NotNormalized(norm));
        }
        let mut state = amplitudes.to_vec();
        for g in &self.gates {
            apply_gate(&mut state, g);
        }
        Ok(state)
    }
}

/// Applies one gate in place to a statevector.
pub(crate) fn apply_gate(state: &mut [Complex64], gate: &Gate) {
    let bit = 1usize << gate.target();
    match gate {
        Gate::H(_) => {
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..state.len() {
                if i & bit == 0 {
                    let (a, b) = (state[i], state[i | bit]);
                    state[i] = (a + b) * s;
                    state[i | bit] = (a - b) * s;
                }
            }
        }
        Gate::X(_) => {
            for i in 0..state.len() {
                if i & bit == 0 {
                    state.swap(i, i | bit);
                }
            }
        }
        Gate::Mcx { controls, .. } => {
            let (mut ones, mut zeros) = (0usize, 0usize);
            for c in controls {
                match c.polarity {
                    Polarity::Positive => ones |= 1 << c.qubit,
                    Polarity::Negative => zeros |= 1 << c.qubit,
                }
            }
            for i in 0..state.len() {
                if i & bit == 0 && i & ones == ones && i & zeros == 0 {
                    state.swap(i, i | bit);
                }
            }
        }
    }
}
