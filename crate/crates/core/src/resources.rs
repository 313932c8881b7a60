//! Register widths, closed-form qubit and MCX budgets, and plot data.
//!
//! Two qubit counts are reported side by side: the real-valued closed-form
//! expression `n^2 + n log n + 6n + n log d_max + n log t_max + log w_max`,
//! and an integer engineering budget that matches the oracle layout qubit
//! for qubit.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::instance::{bits_for, Instance};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResourceError {
    #[error("empty customer range")]
    EmptyRange,
    #[error("parameter `{0}` must be at least 1")]
    NonPositive(&'static str),
}

/// Bit widths derived from the instance maxima.
///
/// Load and time registers carry one guard bit on top of `w_cap` / `w_time`
/// so that `c_{i-1} + q` and `t_{i-1} + T` cannot wrap while the previous
/// position is still feasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegisterWidths {
    /// Bits per tour position, `ceil(log2(n + 1))`.
    pub b_node: usize,
    /// `ceil(log2(d_max + 1))`.
    pub w_cap: usize,
    /// `ceil(log2(t_max + 1))`.
    pub w_time: usize,
    /// `ceil(log2(w_max + 1))`.
    pub w_cost: usize,
    pub d_max: u64,
    pub t_max: u64,
    pub w_max: u64,
}

impl RegisterWidths {
    pub fn from_maxima(n: usize, d_max: u64, t_max: u64, w_max: u64) -> Self {
        Self {
            b_node: bits_for(n as u64),
            w_cap: bits_for(d_max),
            w_time: bits_for(t_max),
            w_cost: bits_for(w_max),
            d_max,
            t_max,
            w_max,
        }
    }

    pub fn load_register(&self) -> usize {
        self.w_cap + 1
    }

    pub fn time_register(&self) -> usize {
        self.w_time + 1
    }

    /// Width of the shared encoding scratch register.
    pub fn scratch(&self) -> usize {
        self.load_register()
            .max(self.time_register())
            .max(self.w_cost)
    }
}

/// Widths for an instance: `d_max = c_max`, `t_max` is the latest closing
/// time and `w_max = 2 n max(D)` bounds the cost of any tour.
pub fn register_widths(inst: &Instance) -> RegisterWidths {
    let n = inst.n();
    let t_max = inst.latest_close().max(1);
    let w_max = (2 * n as u64 * inst.max_distance()).max(1);
    RegisterWidths::from_maxima(n, inst.c_max(), t_max, w_max)
}

/// Qubit counts per component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitBudget {
    pub tour: usize,
    pub splits: usize,
    /// Pairwise inequality flags, per-position range flags and the AD flag.
    pub all_different: usize,
    /// Load registers plus one capacity flag per position.
    pub capacity: usize,
    /// Time registers plus max-selection and window flags per position.
    pub time: usize,
    /// Cost register plus the threshold flag.
    pub cost: usize,
    pub output: usize,
    /// Shared candidate-time and encoding scratch registers plus one carry.
    pub ancilla: usize,
    pub total: usize,
    /// The closed-form expression, real-valued and without ceilings.
    pub figure: f64,
}

/// The closed-form qubit expression, real-valued and without ceilings.
pub fn figure_qubits(n: f64, d_max: f64, t_max: f64, w_max: f64) -> f64 {
    n * n + n * n.log2() + 6.0 * n + n * d_max.log2() + n * t_max.log2() + w_max.log2()
}

/// Budget for the given widths; `budget.total` equals the qubit count of
/// the oracle layout built with the same widths.
pub fn budget_for(n: usize, w: &RegisterWidths) -> QubitBudget {
    let tour = n * w.b_node;
    let splits = n;
    let all_different = n * (n - 1) / 2 + n + 1;
    let capacity = n * w.load_register() + n;
    let time = n * w.time_register() + 2 * n;
    let cost = w.w_cost + 1;
    let output = 1;
    let ancilla = w.time_register() + w.scratch() + 1;
    QubitBudget {
        tour,
        splits,
        all_different,
        capacity,
        time,
        cost,
        output,
        ancilla,
        total: tour + splits + all_different + capacity + time + cost + output + ancilla,
        figure: figure_qubits(n as f64, w.d_max as f64, w.t_max as f64, w.w_max as f64),
    }
}

/// Budget for generic parameters: `d_max` is the vehicle capacity, `t_max`
/// the latest time, `w_max` the cost bound.
pub fn qubit_budget(
    n: usize,
    d_max: u64,
    t_max: u64,
    w_max: u64,
) -> Result<QubitBudget, ResourceError> {
    for (v, name) in [
        (n as u64, "n"),
        (d_max, "d_max"),
        (t_max, "t_max"),
        (w_max, "w_max"),
    ] {
        if v == 0 {
            return Err(ResourceError::NonPositive(name));
        }
    }
    Ok(budget_for(
        n,
        &RegisterWidths::from_maxima(n, d_max, t_max, w_max),
    ))
}

/// Asymptotic MCX envelopes per constraint family (uncompute not counted).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateBudget {
    pub all_different: f64,
    pub capacity: f64,
    pub time: f64,
    pub cost: f64,
}

impl GateBudget {
    pub fn total(&self) -> f64 {
        self.all_different + self.capacity + self.time + self.cost
    }
}

pub fn gate_budget(n: usize, d_max: u64) -> Result<GateBudget, ResourceError> {
    if n == 0 {
        return Err(ResourceError::NonPositive("n"));
    }
    if d_max == 0 {
        return Err(ResourceError::NonPositive("d_max"));
    }
    let n = n as f64;
    let log_d = (d_max as f64).log2();
    let log_n = n.log2();
    Ok(GateBudget {
        all_different: n * n,
        capacity: n * n * log_d + 12.0 * n * log_d,
        time: 2.0 * n * n * log_d + 24.0 * n * log_d,
        cost: n * n * n * log_n + 6.0 * n * log_n,
    })
}

/// One row of the qubits-versus-customers curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotRow {
    pub n: usize,
    pub figure_qubits: f64,
    pub budget_qubits: usize,
}

pub fn emit_plot_data(
    n_range: RangeInclusive<usize>,
    d_max: u64,
    t_max: u64,
    w_max: u64,
) -> Result<Vec<PlotRow>, ResourceError> {
    if n_range.is_empty() {
        return Err(ResourceError::EmptyRange);
    }
    n_range
        .map(|n| {
            let b = qubit_budget(n, d_max, t_max, w_max)?;
            Ok(PlotRow {
                n,
                figure_qubits: b.figure,
                budget_qubits: b.total,
            })
        })
        .collect()
}

/// CSV with header `n,figure_qubits,budget_qubits`.
pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from("n,figure_qubits,budget_qubits\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.3},{}", r.n, r.figure_qubits, r.budget_qubits);
    }
    out
}
