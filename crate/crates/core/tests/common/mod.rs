#![allow(dead_code)]

pub mod arith;
pub mod checks;

use qsplit_core::{Instance, TimeWindow};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with `n` customers. Distances are asymmetric in
/// `1..=20`, travel times equal distances, and windows (if requested) open
/// in `0..30` and stay open for `10..60`.
pub fn random_instance(rng: &mut impl Rng, n: usize, windows: bool) -> Instance {
    let d: Vec<Vec<u64>> = (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| if i == j { 0 } else { rng.gen_range(1..=20) })
                .collect()
        })
        .collect();
    let demands: Vec<u64> = (0..n).map(|_| rng.gen_range(1..=4)).collect();
    let lo = *demands.iter().max().unwrap();
    let hi = demands.iter().sum::<u64>().max(lo);
    let c_max = rng.gen_range(lo..=hi);
    let windows = windows.then(|| {
        (0..n)
            .map(|_| {
                let open = rng.gen_range(0..30);
                TimeWindow {
                    open,
                    close: open + rng.gen_range(10..60),
                }
            })
            .collect()
    });
    Instance::new(c_max, d, None, demands, windows).unwrap()
}

/// Three-customer instance where capacity and windows both bind.
pub fn tight3() -> Instance {
    let d = vec![
        vec![0, 4, 6, 3],
        vec![5, 0, 2, 7],
        vec![6, 3, 0, 4],
        vec![2, 6, 5, 0],
    ];
    let windows = vec![
        TimeWindow { open: 2, close: 9 },
        TimeWindow { open: 0, close: 8 },
        TimeWindow { open: 5, close: 12 },
    ];
    Instance::new(5, d, None, vec![2, 3, 2], Some(windows)).unwrap()
}

/// Three customers with separate travel times and a late window.
pub fn timed3() -> Instance {
    let d = vec![
        vec![0, 3, 5, 2],
        vec![3, 0, 4, 6],
        vec![5, 4, 0, 3],
        vec![2, 6, 3, 0],
    ];
    let t = vec![
        vec![0, 2, 4, 1],
        vec![2, 0, 3, 5],
        vec![4, 3, 0, 2],
        vec![1, 5, 2, 0],
    ];
    let windows = vec![
        TimeWindow { open: 0, close: 6 },
        TimeWindow { open: 4, close: 10 },
        TimeWindow { open: 1, close: 3 },
    ];
    Instance::new(4, d, Some(t), vec![1, 3, 2], Some(windows)).unwrap()
}

/// Four customers, capacity allows at most two per route, one narrow window.
pub fn tight4() -> Instance {
    let d = vec![
        vec![0, 3, 4, 5, 2],
        vec![3, 0, 2, 6, 4],
        vec![4, 2, 0, 3, 5],
        vec![5, 6, 3, 0, 2],
        vec![2, 4, 5, 2, 0],
    ];
    let windows = vec![
        TimeWindow { open: 0, close: 10 },
        TimeWindow { open: 3, close: 9 },
        TimeWindow { open: 0, close: 6 },
        TimeWindow { open: 1, close: 4 },
    ];
    Instance::new(4, d, None, vec![2, 2, 1, 3], Some(windows)).unwrap()
}

/// Cost of some feasible assignment, or 0 if none exists; used to place a
/// threshold strictly inside the cost range.
pub fn mid_threshold(inst: &Instance) -> u64 {
    let best = qsplit_core::classical::brute_force_optimum(inst)
        .map(|s| s.cost)
        .unwrap_or(0);
    let n = inst.n() as u64;
    best + n.max(1)
}
