//! Randomised cross-checks that return a count of disagreements.

use itertools::Itertools;
use qsplit_core::circuit::{Circuit, Control, Gate};
use qsplit_core::classical::*;
use qsplit_core::grover::{statevector_grover, success_probability};
use qsplit_core::Instance;
use rand::seq::SliceRandom;
use rand::Rng;

use super::{random_instance, rng};

/// Cheapest feasible split by trying every interior split vector.
pub fn enumerate_splits(inst: &Instance, tour: &[usize]) -> Option<u64> {
    let n = inst.n();
    (0..1u64 << (n - 1))
        .filter_map(|mask| {
            let mut y: Vec<bool> = (0..n - 1).map(|i| (mask >> i) & 1 == 1).collect();
            y.push(true);
            let r = feasible_and_cost(inst, tour, &y).unwrap();
            r.feasible.then_some(r.cost)
        })
        .min()
}

/// Random instances with `n <= 7`, half with windows, each with a random
/// tour: compares the shortest-path split with enumeration. Also checks
/// that the returned split is feasible at the reported cost.
pub fn split_mismatches(seed: u64, count: usize) -> u64 {
    let mut r = rng(seed);
    let mut bad = 0;
    for i in 0..count {
        let n = r.gen_range(1..=7);
        let inst = random_instance(&mut r, n, i % 2 == 0);
        let mut tour: Vec<usize> = (1..=n).collect();
        tour.shuffle(&mut r);
        let dp = split_tour(&inst, &tour);
        let ok = match (dp, enumerate_splits(&inst, &tour)) {
            (Ok(sol), Some(best)) => {
                let check = feasible_and_cost(&inst, &tour, &sol.splits).unwrap();
                sol.cost == best && check.feasible && check.cost == best
            }
            (Err(ClassicalError::NoFeasibleSplit), None) => true,
            _ => false,
        };
        bad += u64::from(!ok);
    }
    bad
}

/// Minimum over all tours of the optimal split against brute force.
pub fn split_over_tours_mismatches(seed: u64, count: usize) -> u64 {
    let mut r = rng(seed);
    let mut bad = 0;
    for i in 0..count {
        let n = r.gen_range(2..=6);
        let inst = random_instance(&mut r, n, i % 2 == 0);
        let best_split = (1..=n)
            .permutations(n)
            .filter_map(|t| split_tour(&inst, &t).ok().map(|s| s.cost))
            .min();
        let brute = brute_force_optimum(&inst).ok().map(|s| s.cost);
        bad += u64::from(best_split != brute);
    }
    bad
}

/// Instances where route-first cluster-second beats the exact optimum, or
/// where the two disagree on feasibility of an instance the heuristic
/// solved.
pub fn heuristic_violations(seed: u64, count: usize) -> (u64, u64) {
    let mut r = rng(seed);
    let (mut bad, mut compared) = (0, 0);
    for i in 0..count {
        let n = r.gen_range(1..=6);
        let inst = random_instance(&mut r, n, i % 2 == 0);
        let exact = brute_force_optimum(&inst).ok().map(|s| s.cost);
        match (route_first_cluster_second(&inst), exact) {
            (Ok((_, h)), Some(opt)) => {
                compared += 1;
                bad += u64::from(h < opt);
            }
            (Ok(_), None) => bad += 1,
            (Err(_), _) => {}
        }
    }
    (bad, compared)
}

/// Bit oracle on `d` decision qubits (flag at qubit `d`) marking `marked`.
pub fn synthetic_oracle(d: usize, marked: &[usize]) -> Circuit {
    let mut c = Circuit::new(d + 1);
    for &x in marked {
        let controls = (0..d).map(|i| Control::on(i, (x >> i) & 1 == 1)).collect();
        c.push(Gate::mcx(controls, d)).unwrap();
    }
    c
}

/// Largest deviation between statevector Grover and the closed form over
/// 3..=12 decision qubits, `M` in {1, 2, N/4} and `m` in 0..=10.
pub fn grover_closed_form_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for d in 3..=12usize {
        let size = 1usize << d;
        for m_count in [1, 2, size / 4] {
            let mut patterns: Vec<usize> = (0..size).collect();
            patterns.shuffle(&mut r);
            let oracle = synthetic_oracle(d, &patterns[..m_count]);
            let decision: Vec<usize> = (0..d).collect();
            for m in 0..=10 {
                let sim = statevector_grover(&oracle, &decision, d, m).unwrap();
                let exact = success_probability(size as u64, m_count as u64, m).unwrap();
                worst = worst.max((sim - exact).abs());
            }
        }
    }
    worst
}
