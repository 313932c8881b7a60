//! Exhaustive integer-semantics checks for the arithmetic builders. Each
//! function returns the number of input cases that disagree.

use qsplit_core::circuit::{BasisState, Circuit, Control, Gate};
use qsplit_core::qarith::*;

/// Consecutive qubit blocks of the given widths.
pub fn blocks(widths: &[usize]) -> (Vec<Vec<usize>>, usize) {
    let mut next = 0;
    let regs = widths
        .iter()
        .map(|&w| {
            let r: Vec<usize> = (next..next + w).collect();
            next += w;
            r
        })
        .collect();
    (regs, next)
}

fn write(s: &mut BasisState, reg: &[usize], v: u64) {
    for (i, &q) in reg.iter().enumerate() {
        s.set(q, (v >> i) & 1 == 1);
    }
}

fn read(s: &BasisState, reg: &[usize]) -> u64 {
    reg.iter()
        .enumerate()
        .fold(0, |acc, (i, &q)| acc | (u64::from(s.get(q)) << i))
}

/// Runs `gates` on a fresh state with the given register values; returns
/// the output state.
fn run(total: usize, gates: &[Gate], init: &[(&[usize], u64)]) -> BasisState {
    let mut c = Circuit::new(total);
    c.extend(gates.iter().cloned()).unwrap();
    let mut s = BasisState::zeros(total);
    for (reg, v) in init {
        write(&mut s, reg, *v);
    }
    c.eval_basis(&s).unwrap()
}

fn mask(w: usize) -> u64 {
    (1u64 << w) - 1
}

pub fn adder(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, w, 1]);
        let gates = build_adder(&r[0], &r[1], r[2][0]).unwrap();
        for a in 0..1 << w {
            for b in 0..1 << w {
                let out = run(total, &gates, &[(&r[0], a), (&r[1], b)]);
                let ok = read(&out, &r[0]) == a
                    && read(&out, &r[1]) == (a + b) & mask(w)
                    && read(&out, &r[2]) == 0;
                bad += u64::from(!ok);
            }
        }
    }
    bad
}

pub fn add_const(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, w, 1]);
        for k in 0..1 << w {
            let gates = build_add_const(&r[0], k, &r[1], r[2][0]).unwrap();
            for b in 0..1 << w {
                let out = run(total, &gates, &[(&r[0], b)]);
                let ok = read(&out, &r[0]) == (b + k) & mask(w)
                    && read(&out, &r[1]) == 0
                    && read(&out, &r[2]) == 0;
                bad += u64::from(!ok);
            }
        }
    }
    bad
}

type Truth = fn(u64, u64, usize) -> bool;

/// Register-register comparators and the carry flag, with the flag
/// starting at both 0 and 1.
pub fn comparators(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, w, 1, 1]);
        let (x, y, flag, carry) = (&r[0], &r[1], r[2][0], r[3][0]);
        let builds: Vec<(Vec<Gate>, Truth)> = vec![
            (build_greater_than(x, y, flag, carry).unwrap(), |a, b, _| {
                a > b
            }),
            (build_leq(x, y, flag, carry).unwrap(), |a, b, _| a <= b),
            (build_carry_flag(x, y, flag, carry).unwrap(), |a, b, w| {
                a + b >= 1 << w
            }),
        ];
        for (gates, truth) in &builds {
            for a in 0..1 << w {
                for b in 0..1 << w {
                    for f in 0..2 {
                        let out = run(total, gates, &[(x, a), (y, b), (&r[2], f)]);
                        let ok = read(&out, x) == a
                            && read(&out, y) == b
                            && read(&out, &r[2]) == f ^ u64::from(truth(a, b, w))
                            && read(&out, &r[3]) == 0;
                        bad += u64::from(!ok);
                    }
                }
            }
        }
    }
    bad
}

/// `<=` and `<` against every classical constant.
pub fn const_comparators(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, 1, w, 1]);
        let (a, flag, scratch, carry) = (&r[0], r[1][0], &r[2], r[3][0]);
        for k in 0..1 << w {
            let leq = build_leq_const(a, k, flag, scratch, carry).unwrap();
            let lt = build_lt_const(a, k, flag, scratch, carry).unwrap();
            for v in 0..1 << w {
                for f in 0..2 {
                    for (gates, truth) in [(&leq, v <= k), (&lt, v < k)] {
                        let out = run(total, gates, &[(a, v), (&r[1], f)]);
                        let ok = read(&out, a) == v
                            && read(&out, &r[1]) == f ^ u64::from(truth)
                            && read(&out, scratch) == 0
                            && read(&out, &r[3]) == 0;
                        bad += u64::from(!ok);
                    }
                }
            }
        }
    }
    bad
}

/// Max of two registers and max with a constant, into a zeroed register.
pub fn max_gadgets(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, w, w, 1, 1]);
        let (src, other, dst, choice, carry) = (&r[0], &r[1], &r[2], r[3][0], r[4][0]);
        let gates = build_max_into(src, other, dst, choice, carry).unwrap();
        for a in 0..1 << w {
            for b in 0..1 << w {
                let out = run(total, &gates, &[(src, a), (other, b)]);
                let ok = read(&out, src) == a
                    && read(&out, other) == b
                    && read(&out, dst) == a.max(b)
                    && read(&out, &r[3]) == u64::from(b > a)
                    && read(&out, &r[4]) == 0;
                bad += u64::from(!ok);
            }
        }
        // `other` doubles as scratch for the constant form.
        for k in 0..1 << w {
            let gates = build_max_with_const(src, k, dst, choice, other, carry).unwrap();
            for a in 0..1 << w {
                let out = run(total, &gates, &[(src, a)]);
                let ok = read(&out, src) == a
                    && read(&out, other) == 0
                    && read(&out, dst) == a.max(k)
                    && read(&out, &r[3]) == u64::from(k > a)
                    && read(&out, &r[4]) == 0;
                bad += u64::from(!ok);
            }
        }
    }
    bad
}

pub fn pair_neq(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, w, 1]);
        let gates = build_pair_neq(&r[0], &r[1], r[2][0]).unwrap();
        for a in 0..1 << w {
            for b in 0..1 << w {
                for f in 0..2 {
                    let out = run(total, &gates, &[(&r[0], a), (&r[1], b), (&r[2], f)]);
                    let ok = read(&out, &r[0]) == a
                        && read(&out, &r[1]) == b
                        && read(&out, &r[2]) == f ^ u64::from(a != b);
                    bad += u64::from(!ok);
                }
            }
        }
    }
    bad
}

pub fn and_reduce(max_flags: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_flags {
        let (r, total) = blocks(&[w, 1]);
        let gates = build_and_reduce(&r[0], r[1][0]).unwrap();
        for v in 0..1 << w {
            for f in 0..2 {
                let out = run(total, &gates, &[(&r[0], v), (&r[1], f)]);
                let ok = read(&out, &r[0]) == v && read(&out, &r[1]) == f ^ u64::from(v == mask(w));
                bad += u64::from(!ok);
            }
        }
    }
    bad
}

/// XOR of constants and registers, plus the table encoder under one
/// positive and one negative control.
pub fn xor_and_encoder(max_w: usize) -> u64 {
    let mut bad = 0;
    for w in 1..=max_w {
        let (r, total) = blocks(&[w, w, 2]);
        let (src, dst, ctl) = (&r[0], &r[1], &r[2]);
        let controls = [Control::pos(ctl[0]), Control::neg(ctl[1])];
        let copy = xor_register(src, dst, &controls).unwrap();
        for c in 0..4u64 {
            let on = c == 1;
            for k in 0..1 << w {
                let gates = xor_const(dst, k, &controls);
                for d in 0..1 << w {
                    let out = run(total, &gates, &[(dst, d), (ctl, c)]);
                    bad += u64::from(read(&out, dst) != if on { d ^ k } else { d });
                }
            }
            for a in 0..1 << w {
                for d in 0..1 << w {
                    let out = run(total, &copy, &[(src, a), (dst, d), (ctl, c)]);
                    let ok = read(&out, src) == a && read(&out, dst) == if on { d ^ a } else { d };
                    bad += u64::from(!ok);
                }
            }
        }
        // Table of the first 2^w - 1 entries: the last index reads as 0.
        let table: Vec<u64> = (0..(1u64 << w) - 1)
            .map(|v| (v * 7 + 3) & mask(w))
            .collect();
        let gates = build_conditional_encoder(src, &table, dst, &controls).unwrap();
        for c in 0..4u64 {
            for a in 0..1 << w {
                for d in [0, mask(w)] {
                    let out = run(total, &gates, &[(src, a), (dst, d), (ctl, c)]);
                    let entry = table.get(a as usize).copied().unwrap_or(0);
                    let want = if c == 1 { d ^ entry } else { d };
                    bad += u64::from(read(&out, src) != a || read(&out, dst) != want);
                }
            }
        }
    }
    bad
}

/// Every basis state on `total` qubits, 64 per lane block.
fn basis_blocks(total: usize) -> Vec<Vec<u64>> {
    let states = 1usize << total;
    (0..states.div_ceil(64))
        .map(|b| {
            (0..total)
                .map(|q| {
                    (0..64.min(states - b * 64))
                        .fold(0u64, |acc, l| acc | ((((b * 64 + l) >> q) & 1) as u64) << l)
                })
                .collect()
        })
        .collect()
}

/// Builder circuits composed with their inverses, over all basis states.
/// Returns the number of (circuit, state) pairs that are not restored.
pub fn inverse_identity(max_total: usize) -> u64 {
    let mut circuits: Vec<(usize, Vec<Gate>)> = Vec::new();
    for w in 1..=6usize {
        let (r, t) = blocks(&[w, w, 1, 1]);
        let (a, b, f, c) = (&r[0], &r[1], r[2][0], r[3][0]);
        circuits.push((t, build_adder(a, b, c).unwrap()));
        circuits.push((t, build_greater_than(a, b, f, c).unwrap()));
        circuits.push((t, build_leq(a, b, f, c).unwrap()));
        circuits.push((t, build_carry_flag(a, b, f, c).unwrap()));
        circuits.push((t, build_pair_neq(a, b, f).unwrap()));
        circuits.push((t, build_add_const(a, mask(w) / 3 + 1, b, c).unwrap()));
        circuits.push((t, build_leq_const(a, mask(w) / 2, f, b, c).unwrap()));
        circuits.push((t, build_lt_const(a, mask(w) / 2 + 1, f, b, c).unwrap()));
        let (r, t) = blocks(&[w, w, w, 1, 1]);
        circuits.push((
            t,
            build_max_into(&r[0], &r[1], &r[2], r[3][0], r[4][0]).unwrap(),
        ));
        circuits.push((
            t,
            build_max_with_const(&r[0], mask(w) / 2, &r[2], r[3][0], &r[1], r[4][0]).unwrap(),
        ));
        let (r, t) = blocks(&[w, 1]);
        circuits.push((t, build_and_reduce(&r[0], r[1][0]).unwrap()));
        let (r, t) = blocks(&[w.min(4), 5, 1]);
        let table: Vec<u64> = (0..1u64 << w.min(4)).map(|v| (v * 11 + 5) % 32).collect();
        circuits.push((
            t,
            build_conditional_encoder(&r[0], &table, &r[1], &[Control::neg(r[2][0])]).unwrap(),
        ));
    }
    let mut bad = 0;
    for (total, gates) in circuits.into_iter().filter(|(t, _)| *t <= max_total) {
        let mut c = Circuit::new(total);
        c.extend(gates).unwrap();
        let round = c.then(&c.inverse()).unwrap();
        for block in basis_blocks(total) {
            let mut lanes = block.clone();
            round.eval_lanes(&mut lanes).unwrap();
            bad += lanes
                .iter()
                .zip(&block)
                .map(|(x, y)| u64::from((x ^ y).count_ones()))
                .sum::<u64>();
        }
    }
    bad
}
