//! Reversible arithmetic blocks built from X and MCX gates.
//!
//! Every builder takes registers as qubit slices (least significant bit
//! first) and returns a gate list to splice into a host circuit. Ancilla
//! arguments must be 0 on entry and are restored to 0.
//!
//! Addition uses the in-place ripple-carry adder of Cuccaro et al. (MAJ/UMA
//! cells with a single carry qubit). Comparisons reuse its MAJ chain: the
//! carry out of `x + (2^w - 1 - y)` is `[x > y]`, copied to the flag before
//! the chain is undone.

use thiserror::Error;

use crate::circuit::{Control, Gate, QubitId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ArithError {
    #[error("register widths differ ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("register is empty")]
    EmptyRegister,
    #[error("constant {value} does not fit in {width} bits")]
    ConstantOutOfRange { value: u64, width: usize },
    #[error("scratch register has {found} qubits, need {needed}")]
    ScratchTooSmall { needed: usize, found: usize },
    #[error("table has {len} entries but the index register addresses {capacity}")]
    TableTooLong { len: usize, capacity: usize },
    #[error("table value {value} at index {index} does not fit in {width} bits")]
    ValueOverflow {
        index: usize,
        value: u64,
        width: usize,
    },
    #[error("AND-reduction over an empty flag list")]
    NoFlags,
}

pub type Gates = Vec<Gate>;

fn check_width(a: &[QubitId], b: &[QubitId]) -> Result<usize, ArithError> {
    if a.len() != b.len() {
        return Err(ArithError::WidthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(ArithError::EmptyRegister);
    }
    Ok(a.len())
}

fn check_const(value: u64, width: usize) -> Result<(), ArithError> {
    if width < 64 && value >> width != 0 {
        return Err(ArithError::ConstantOutOfRange { value, width });
    }
    Ok(())
}

fn scratch_prefix(scratch: &[QubitId], width: usize) -> Result<&[QubitId], ArithError> {
    scratch.get(..width).ok_or(ArithError::ScratchTooSmall {
        needed: width,
        found: scratch.len(),
    })
}

fn maj(c: QubitId, b: QubitId, a: QubitId) -> [Gate; 3] {
    [Gate::cx(a, b), Gate::cx(a, c), Gate::ccx(c, b, a)]
}

fn uma(c: QubitId, b: QubitId, a: QubitId) -> [Gate; 3] {
    [Gate::ccx(c, b, a), Gate::cx(a, c), Gate::cx(c, b)]
}

/// MAJ cascade; afterwards `a[w-1]` holds the carry out of `a + b`.
fn maj_chain(a: &[QubitId], b: &[QubitId], carry: QubitId) -> Gates {
    let mut gates = Vec::with_capacity(3 * a.len());
    for i in 0..a.len() {
        let c = if i == 0 { carry } else { a[i - 1] };
        gates.extend(maj(c, b[i], a[i]));
    }
    gates
}

/// `dst ^= value` on the set bits, each X conditioned on `controls`.
pub fn xor_const(dst: &[QubitId], value: u64, controls: &[Control]) -> Gates {
    dst.iter()
        .enumerate()
        .filter(|&(i, _)| i < 64 && (value >> i) & 1 == 1)
        .map(|(_, &q)| Gate::mcx(controls.to_vec(), q))
        .collect()
}

/// `dst ^= src` bitwise, each CX conditioned on `controls`.
pub fn xor_register(
    src: &[QubitId],
    dst: &[QubitId],
    controls: &[Control],
) -> Result<Gates, ArithError> {
    check_width(src, dst)?;
    Ok(src
        .iter()
        .zip(dst)
        .map(|(&s, &d)| {
            let mut cs = controls.to_vec();
            cs.push(Control::pos(s));
            Gate::mcx(cs, d)
        })
        .collect())
}

/// `b := (b + a) mod 2^w`; `a` and `carry` unchanged.
pub fn build_adder(a: &[QubitId], b: &[QubitId], carry: QubitId) -> Result<Gates, ArithError> {
    let w = check_width(a, b)?;
    let mut gates = maj_chain(a, b, carry);
    for i in (0..w).rev() {
        let c = if i == 0 { carry } else { a[i - 1] };
        gates.extend(uma(c, b[i], a[i]));
    }
    Ok(gates)
}

/// `b := (b + k) mod 2^w`, staging `k` in the first `w` scratch qubits.
pub fn build_add_const(
    b: &[QubitId],
    k: u64,
    scratch: &[QubitId],
    carry: QubitId,
) -> Result<Gates, ArithError> {
    if b.is_empty() {
        return Err(ArithError::EmptyRegister);
    }
    check_const(k, b.len())?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let tmp = scratch_prefix(scratch, b.len())?;
    let load = xor_const(tmp, k, &[]);
    let mut gates = load.clone();
    gates.extend(build_adder(tmp, b, carry)?);
    gates.extend(load);
    Ok(gates)
}

/// `flag ^= [a + b >= 2^w]`; both registers unchanged.
pub fn build_carry_flag(
    a: &[QubitId],
    b: &[QubitId],
    flag: QubitId,
    carry: QubitId,
) -> Result<Gates, ArithError> {
    let w = check_width(a, b)?;
    let chain = maj_chain(a, b, carry);
    let mut gates = chain.clone();
    gates.push(Gate::cx(a[w - 1], flag));
    gates.extend(chain.into_iter().rev());
    Ok(gates)
}

/// `flag ^= [x > y]`; both registers unchanged.
pub fn build_greater_than(
    x: &[QubitId],
    y: &[QubitId],
    flag: QubitId,
    carry: QubitId,
) -> Result<Gates, ArithError> {
    check_width(x, y)?;
    let flip: Gates = y.iter().map(|&q| Gate::X(q)).collect();
    let mut gates = flip.clone();
    gates.extend(build_carry_flag(x, y, flag, carry)?);
    gates.extend(flip);
    Ok(gates)
}

/// `flag ^= [x <= y]`.
pub fn build_leq(
    x: &[QubitId],
    y: &[QubitId],
    flag: QubitId,
    carry: QubitId,
) -> Result<Gates, ArithError> {
    let mut gates = build_greater_than(x, y, flag, carry)?;
    gates.push(Gate::X(flag));
    Ok(gates)
}

/// `flag ^= [a <= k]` for a classical `k`.
pub fn build_leq_const(
    a: &[QubitId],
    k: u64,
    flag: QubitId,
    scratch: &[QubitId],
    carry: QubitId,
) -> Result<Gates, ArithError> {
    if a.is_empty() {
        return Err(ArithError::EmptyRegister);
    }
    let w = a.len();
    check_const(k, w)?;
    let tmp = scratch_prefix(scratch, w)?;
    let complement = !k & (u64::MAX >> (64 - w));
    let load = xor_const(tmp, complement, &[]);
    let mut gates = load.clone();
    gates.extend(build_carry_flag(a, tmp, flag, carry)?);
    gates.extend(load);
    gates.push(Gate::X(flag));
    Ok(gates)
}

/// `flag ^= [a < k]` for a classical `k`.
pub fn build_lt_const(
    a: &[QubitId],
    k: u64,
    flag: QubitId,
    scratch: &[QubitId],
    carry: QubitId,
) -> Result<Gates, ArithError> {
    if a.is_empty() {
        return Err(ArithError::EmptyRegister);
    }
    check_const(k, a.len())?;
    if k == 0 {
        return Ok(Vec::new());
    }
    build_leq_const(a, k - 1, flag, scratch, carry)
}

/// `choice ^= [src < other]`, then `dst ^= (choice ? other : src)`.
/// With `dst` and `choice` at 0 this leaves `dst = max(src, other)`.
pub fn build_max_into(
    src: &[QubitId],
    other: &[QubitId],
    dst: &[QubitId],
    choice: QubitId,
    carry: QubitId,
) -> Result<Gates, ArithError> {
    check_width(src, other)?;
    check_width(src, dst)?;
    let mut gates = build_greater_than(other, src, choice, carry)?;
    for i in 0..src.len() {
        gates.push(Gate::ccx(choice, other[i], dst[i]));
        gates.push(Gate::mcx(
            vec![Control::neg(choice), Control::pos(src[i])],
            dst[i],
        ));
    }
    Ok(gates)
}

/// `choice := [src < k]`, `dst := max(src, k)`.
///
/// The maximum goes to a separate zero-initialised register: overwriting
/// `src` in place would merge every `src < k` onto the same output and is
/// not reversible. `choice` is left set for the caller to uncompute.
pub fn build_max_with_const(
    src: &[QubitId],
    k: u64,
    dst: &[QubitId],
    choice: QubitId,
    scratch: &[QubitId],
    carry: QubitId,
) -> Result<Gates, ArithError> {
    if src.is_empty() {
        return Err(ArithError::EmptyRegister);
    }
    check_const(k, src.len())?;
    let tmp = scratch_prefix(scratch, src.len())?;
    let load = xor_const(tmp, k, &[]);
    let mut gates = load.clone();
    gates.extend(build_max_into(src, tmp, dst, choice, carry)?);
    gates.extend(load);
    Ok(gates)
}

/// `out ^= table[idx]`, optionally conditioned on `controls`.
///
/// One MCX per set bit of each non-zero entry, controlled on the full bit
/// pattern of the index. Indices past the end of the table read as 0.
pub fn build_conditional_encoder(
    idx: &[QubitId],
    table: &[u64],
    out: &[QubitId],
    controls: &[Control],
) -> Result<Gates, ArithError> {
    if idx.is_empty() || out.is_empty() {
        return Err(ArithError::EmptyRegister);
    }
    let capacity = 1usize.checked_shl(idx.len() as u32).unwrap_or(usize::MAX);
    if table.len() > capacity {
        return Err(ArithError::TableTooLong {
            len: table.len(),
            capacity,
        });
    }
    let mut gates = Vec::new();
    for (v, &value) in table.iter().enumerate() {
        if out.len() < 64 && value >> out.len() != 0 {
            return Err(ArithError::ValueOverflow {
                index: v,
                value,
                width: out.len(),
            });
        }
        if value == 0 {
            continue;
        }
        let mut cs = controls.to_vec();
        cs.extend(
            idx.iter()
                .enumerate()
                .map(|(i, &q)| Control::on(q, (v >> i) & 1 == 1)),
        );
        for (j, &q) in out.iter().enumerate() {
            if (value >> j) & 1 == 1 {
                gates.push(Gate::mcx(cs.clone(), q));
            }
        }
    }
    Ok(gates)
}

/// `flag ^= [a != b]`. XORs `a` into `b`, tests for zero, then restores `b`.
pub fn build_pair_neq(a: &[QubitId], b: &[QubitId], flag: QubitId) -> Result<Gates, ArithError> {
    let diff = xor_register(a, b, &[])?;
    let mut gates = diff.clone();
    gates.push(Gate::mcx(
        b.iter().map(|&q| Control::neg(q)).collect(),
        flag,
    ));
    gates.push(Gate::X(flag));
    gates.extend(diff);
    Ok(gates)
}

/// `out ^= AND(flags)` as a single MCX.
pub fn build_and_reduce(flags: &[QubitId], out: QubitId) -> Result<Gates, ArithError> {
    if flags.is_empty() {
        return Err(ArithError::NoFlags);
    }
    Ok(vec![Gate::mcx(
        flags.iter().map(|&q| Control::pos(q)).collect(),
        out,
    )])
}
