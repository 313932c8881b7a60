//! Classical references: the feasibility/cost recurrences, exhaustive
//! search over tours and splits, and route-first cluster-second with the
//! shortest-path split.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::instance::{Instance, RouteSet};

/// Exhaustive search limit: 9! * 2^8 evaluations.
pub const BRUTE_FORCE_MAX_N: usize = 9;
/// Exact giant tours up to this size, nearest neighbour beyond.
pub const HELD_KARP_MAX_N: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ClassicalError {
    #[error("tour is not a permutation of 1..={0}")]
    NotPermutation(usize),
    #[error("split vector must have {0} entries ending in 1")]
    BadSplits(usize),
    #[error("brute force is limited to {max} customers, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("no feasible solution")]
    NoFeasibleSolution,
    #[error("no feasible split of the giant tour")]
    NoFeasibleSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    Capacity { position: usize },
    TimeWindow { position: usize },
}

/// Loads, arrival times and cost of one `(tour, splits)` assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub cost: u64,
    pub loads: Vec<u64>,
    pub times: Vec<u64>,
    /// First violated constraint; positions are 1-based.
    pub violation: Option<Violation>,
}

/// Checks that `tour` is a permutation of `1..=n`.
pub fn check_permutation(n: usize, tour: &[usize]) -> Result<(), ClassicalError> {
    let mut seen = vec![false; n + 1];
    if tour.len() != n {
        return Err(ClassicalError::NotPermutation(n));
    }
    for &c in tour {
        if c == 0 || c > n || std::mem::replace(&mut seen[c], true) {
            return Err(ClassicalError::NotPermutation(n));
        }
    }
    Ok(())
}

/// Evaluates the load and arrival-time recurrences and the tour cost.
pub fn feasible_and_cost(
    inst: &Instance,
    tour: &[usize],
    splits: &[bool],
) -> Result<FeasibilityReport, ClassicalError> {
    let n = inst.n();
    check_permutation(n, tour)?;
    if splits.len() != n || !splits[n - 1] {
        return Err(ClassicalError::BadSplits(n));
    }
    let mut loads = Vec::with_capacity(n);
    let mut times = Vec::with_capacity(n);
    let mut cost = 0;
    let mut violation = None;
    for (i, &node) in tour.iter().enumerate() {
        let fresh = i == 0 || splits[i - 1];
        let (load, arrival) = if fresh {
            if i > 0 {
                cost += inst.distance(tour[i - 1], 0);
            }
            cost += inst.distance(0, node);
            (inst.demand(node), inst.travel_time(0, node))
        } else {
            let prev = tour[i - 1];
            cost += inst.distance(prev, node);
            (
                loads[i - 1] + inst.demand(node),
                times[i - 1] + inst.travel_time(prev, node),
            )
        };
        let window = inst.window(node);
        let time = arrival.max(window.open);
        if violation.is_none() {
            if load > inst.c_max() {
                violation = Some(Violation::Capacity { position: i + 1 });
            } else if time > window.close {
                violation = Some(Violation::TimeWindow { position: i + 1 });
            }
        }
        loads.push(load);
        times.push(time);
    }
    cost += inst.distance(tour[n - 1], 0);
    Ok(FeasibilityReport {
        feasible: violation.is_none(),
        cost,
        loads,
        times,
        violation,
    })
}

/// An optimal assignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Solution {
    pub tour: Vec<usize>,
    pub splits: Vec<bool>,
    pub cost: u64,
}

impl Solution {
    pub fn routes(&self) -> RouteSet {
        RouteSet::decode(self.tour.len(), &self.tour, &self.splits)
            .expect("solutions always close their last route")
    }
}

/// Split vectors with `y_n = 1`, in lexicographic order (`y_1` most significant).
fn split_vectors(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0..1u64 << (n - 1)).map(move |m| {
        let mut y: Vec<bool> = (0..n - 1).map(|i| (m >> (n - 2 - i)) & 1 == 1).collect();
        y.push(true);
        y
    })
}

/// Exact optimum over all tours and splits. Ties go to the
/// lexicographically smallest `(tour, splits)`.
pub fn brute_force_optimum(inst: &Instance) -> Result<Solution, ClassicalError> {
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(ClassicalError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let splits: Vec<Vec<bool>> = split_vectors(n).collect();
    (1..=n)
        .into_par_iter()
        .filter_map(|first| {
            let rest: Vec<usize> = (1..=n).filter(|&c| c != first).collect();
            let mut best: Option<Solution> = None;
            for tail in rest.iter().copied().permutations(n - 1) {
                let mut tour = Vec::with_capacity(n);
                tour.push(first);
                tour.extend(tail);
                for y in &splits {
                    let report = feasible_and_cost(inst, &tour, y).expect("valid by construction");
                    if report.feasible && best.as_ref().is_none_or(|b| report.cost < b.cost) {
                        best = Some(Solution {
                            tour: tour.clone(),
                            splits: y.clone(),
                            cost: report.cost,
                        });
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| (a.cost, &a.tour, &a.splits).cmp(&(b.cost, &b.tour, &b.splits)))
        .ok_or(ClassicalError::NoFeasibleSolution)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub weight: u64,
}

/// DAG over tour positions `0..=n`; arc `(i, j)` is the route serving
/// `P_{i+1}..P_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuxiliaryGraph {
    pub node_count: usize,
    pub arcs: Vec<Arc>,
}

impl AuxiliaryGraph {
    pub fn arc(&self, from: usize, to: usize) -> Option<&Arc> {
        self.arcs.iter().find(|a| a.from == from && a.to == to)
    }
}

/// Adds an arc for every route segment that respects capacity and the time
/// windows, with the clock restarted at the depot.
pub fn build_auxiliary_graph(
    inst: &Instance,
    tour: &[usize],
) -> Result<AuxiliaryGraph, ClassicalError> {
    let n = inst.n();
    check_permutation(n, tour)?;
    let mut arcs = Vec::new();
    for i in 0..n {
        let (mut load, mut time, mut length) = (0, 0, 0);
        for j in i + 1..=n {
            let node = tour[j - 1];
            let (arrival, leg) = if j == i + 1 {
                (inst.travel_time(0, node), inst.distance(0, node))
            } else {
                let prev = tour[j - 2];
                (
                    time + inst.travel_time(prev, node),
                    inst.distance(prev, node),
                )
            };
            load += inst.demand(node);
            let window = inst.window(node);
            time = arrival.max(window.open);
            length += leg;
            // Both load and time only grow along the segment.
            if load > inst.c_max() || time > window.close {
                break;
            }
            arcs.push(Arc {
                from: i,
                to: j,
                weight: length + inst.distance(node, 0),
            });
        }
    }
    Ok(AuxiliaryGraph {
        node_count: n + 1,
        arcs,
    })
}

/// Shortest 0 → n path. Returns the split bits (`y_j = 1` at every path
/// node `j >= 1`) and the path cost. Equal-cost predecessors resolve to
/// the smallest index.
pub fn split_shortest_path(g: &AuxiliaryGraph) -> Result<(Vec<bool>, u64), ClassicalError> {
    let last = g.node_count - 1;
    let mut dist: Vec<Option<u64>> = vec![None; g.node_count];
    let mut pred = vec![0usize; g.node_count];
    dist[0] = Some(0);
    let mut arcs = g.arcs.clone();
    arcs.sort_by_key(|a| (a.to, a.from));
    for a in &arcs {
        if let Some(d) = dist[a.from] {
            let candidate = d + a.weight;
            if dist[a.to].is_none_or(|cur| candidate < cur) {
                dist[a.to] = Some(candidate);
                pred[a.to] = a.from;
            }
        }
    }
    let cost = dist[last].ok_or(ClassicalError::NoFeasibleSplit)?;
    let mut splits = vec![false; last];
    let mut node = last;
    while node > 0 {
        splits[node - 1] = true;
        node = pred[node];
    }
    Ok((splits, cost))
}

/// Optimal split of a fixed giant tour.
pub fn split_tour(inst: &Instance, tour: &[usize]) -> Result<Solution, ClassicalError> {
    let g = build_auxiliary_graph(inst, tour)?;
    let (splits, cost) = split_shortest_path(&g)?;
    Ok(Solution {
        tour: tour.to_vec(),
        splits,
        cost,
    })
}

/// Depot-anchored shortest Hamiltonian cycle by Held–Karp.
pub fn held_karp_tour(inst: &Instance) -> Vec<usize> {
    let n = inst.n();
    let full = (1usize << n) - 1;
    // dp[mask][last]: shortest depot path through `mask` ending at customer last + 1.
    let mut dp = vec![vec![u64::MAX; n]; 1 << n];
    let mut parent = vec![vec![usize::MAX; n]; 1 << n];
    for c in 0..n {
        dp[1 << c][c] = inst.distance(0, c + 1);
    }
    for mask in 1..=full {
        for last in 0..n {
            let cur = dp[mask][last];
            if cur == u64::MAX || mask & (1 << last) == 0 {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m = mask | (1 << next);
                let cand = cur + inst.distance(last + 1, next + 1);
                if cand < dp[m][next] {
                    dp[m][next] = cand;
                    parent[m][next] = last;
                }
            }
        }
    }
    let mut last = (0..n)
        .min_by_key(|&c| (dp[full][c].saturating_add(inst.distance(c + 1, 0)), c))
        .expect("at least one customer");
    let mut mask = full;
    let mut tour = Vec::with_capacity(n);
    loop {
        tour.push(last + 1);
        let p = parent[mask][last];
        mask &= !(1 << last);
        if p == usize::MAX {
            break;
        }
        last = p;
    }
    tour.reverse();
    tour
}

/// Greedy tour from the depot; ties go to the smaller id.
pub fn nearest_neighbor_tour(inst: &Instance) -> Vec<usize> {
    let mut left: Vec<usize> = (1..=inst.n()).collect();
    let mut tour = Vec::with_capacity(left.len());
    let mut at = 0;
    while !left.is_empty() {
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by_key(|&(_, &c)| (inst.distance(at, c), c))
            .expect("non-empty");
        at = left.remove(pos);
        tour.push(at);
    }
    tour
}

/// Giant tour (Held–Karp up to [`HELD_KARP_MAX_N`] customers, nearest
/// neighbour otherwise) followed by the optimal split.
pub fn route_first_cluster_second(inst: &Instance) -> Result<(RouteSet, u64), ClassicalError> {
    let tour = if inst.n() <= HELD_KARP_MAX_N {
        held_karp_tour(inst)
    } else {
        nearest_neighbor_tour(inst)
    };
    let sol = split_tour(inst, &tour)?;
    Ok((sol.routes(), sol.cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::TimeWindow;

    fn single() -> Instance {
        Instance::new(4, vec![vec![0, 7], vec![9, 0]], None, vec![3], None).unwrap()
    }

    #[test]
    fn example_identity_cost() {
        let inst = Instance::six_customer_example();
        let r = feasible_and_cost(&inst, &[1, 2, 3, 4, 5, 6], &[true; 6]).unwrap();
        assert!(r.feasible);
        assert_eq!(r.cost, 272);
        assert_eq!(r.loads, vec![2, 3, 1, 3, 2, 3]);
    }

    #[test]
    fn capacity_violation_position() {
        let inst = Instance::six_customer_example();
        let r = feasible_and_cost(
            &inst,
            &[2, 4, 1, 3, 5, 6],
            &[false, true, true, true, true, true],
        )
        .unwrap();
        assert!(!r.feasible);
        assert_eq!(r.violation, Some(Violation::Capacity { position: 2 }));
        assert_eq!(r.loads[1], 6);
    }

    #[test]
    fn single_customer() {
        let inst = single();
        let r = feasible_and_cost(&inst, &[1], &[true]).unwrap();
        assert_eq!(r.cost, 16);
        let best = brute_force_optimum(&inst).unwrap();
        assert_eq!(
            (best.tour, best.splits, best.cost),
            (vec![1], vec![true], 16)
        );
        let (routes, cost) = route_first_cluster_second(&inst).unwrap();
        assert_eq!((routes.routes, cost), (vec![vec![1]], 16));
    }

    #[test]
    fn rejects_bad_input() {
        let inst = Instance::six_customer_example();
        assert_eq!(
            feasible_and_cost(&inst, &[1, 1, 2, 3, 4, 5], &[true; 6]),
            Err(ClassicalError::NotPermutation(6))
        );
        assert_eq!(
            feasible_and_cost(&inst, &[1, 2, 3, 4, 5, 6], &[false; 6]),
            Err(ClassicalError::BadSplits(6))
        );
    }

    #[test]
    fn example_auxiliary_graph() {
        let inst = Instance::six_customer_example();
        let g = build_auxiliary_graph(&inst, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(g.arc(0, 1).map(|a| a.weight), Some(46));
        assert_eq!(g.arc(0, 2).map(|a| a.weight), Some(70));
        assert!(g.arc(0, 3).is_none());
    }

    #[test]
    fn forced_unit_arcs() {
        let g = AuxiliaryGraph {
            node_count: 4,
            arcs: vec![
                Arc {
                    from: 0,
                    to: 1,
                    weight: 3,
                },
                Arc {
                    from: 1,
                    to: 2,
                    weight: 4,
                },
                Arc {
                    from: 2,
                    to: 3,
                    weight: 5,
                },
            ],
        };
        assert_eq!(split_shortest_path(&g).unwrap(), (vec![true; 3], 12));
    }

    #[test]
    fn unreachable_split() {
        let windows = vec![TimeWindow { open: 0, close: 3 }];
        let inst = Instance::new(
            4,
            vec![vec![0, 7], vec![9, 0]],
            None,
            vec![3],
            Some(windows),
        )
        .unwrap();
        let g = build_auxiliary_graph(&inst, &[1]).unwrap();
        assert_eq!(
            split_shortest_path(&g),
            Err(ClassicalError::NoFeasibleSplit)
        );
        assert_eq!(
            brute_force_optimum(&inst),
            Err(ClassicalError::NoFeasibleSolution)
        );
    }

    #[test]
    fn tie_break_prefers_smallest_predecessor() {
        let g = AuxiliaryGraph {
            node_count: 3,
            arcs: vec![
                Arc {
                    from: 0,
                    to: 1,
                    weight: 2,
                },
                Arc {
                    from: 1,
                    to: 2,
                    weight: 2,
                },
                Arc {
                    from: 0,
                    to: 2,
                    weight: 4,
                },
            ],
        };
        assert_eq!(split_shortest_path(&g).unwrap(), (vec![false, true], 4));
    }

    #[test]
    fn symmetric_customers_swap() {
        // Customers 1 and 2 are interchangeable.
        let d = vec![
            vec![0, 5, 5, 3],
            vec![5, 0, 2, 4],
            vec![5, 2, 0, 4],
            vec![3, 4, 4, 0],
        ];
        let inst = Instance::new(4, d, None, vec![2, 2, 1], None).unwrap();
        let best = brute_force_optimum(&inst).unwrap();
        let swapped: Vec<usize> = best
            .tour
            .iter()
            .map(|&c| match c {
                1 => 2,
                2 => 1,
                c => c,
            })
            .collect();
        let r = feasible_and_cost(&inst, &swapped, &best.splits).unwrap();
        assert_eq!((r.feasible, r.cost), (true, best.cost));
    }

    #[test]
    fn held_karp_matches_enumeration() {
        let inst = Instance::six_customer_example();
        let tour = held_karp_tour(&inst);
        let cycle = |t: &[usize]| {
            inst.distance(0, t[0])
                + t.windows(2).map(|w| inst.distance(w[0], w[1])).sum::<u64>()
                + inst.distance(t[t.len() - 1], 0)
        };
        let best = (1..=6).permutations(6).map(|t| cycle(&t)).min().unwrap();
        assert_eq!(cycle(&tour), best);
    }

    #[test]
    fn nearest_neighbor_visits_all() {
        let inst = Instance::six_customer_example();
        let tour = nearest_neighbor_tour(&inst);
        assert_eq!(tour[0], 4);
        check_permutation(6, &tour).unwrap();
    }
}
