//! Delayed-choice CZ: a two-qubit |CZ> resource is parked on the diagonal of
//! a 2x2 slot ahead of time; once a classical bit arrives, the slot is
//! consumed either by joint ZZ couplings that teleport a CZ onto the data
//! (bit set) or by bare X retirements that discard it (bit clear). Both
//! consumption variants are emitted with complementary conditions, so the
//! whole schedule is fixed before the bit is known.

use crate::cost::CostModel;
use crate::isa::{Coord, GridInstr, IsaKind};
use crate::sim::{BitId, Cond, Pauli};

use super::bell::xz_pair;
use super::{BitAlloc, GadgetError, Schedule};

/// A prepared |CZ> resource: `r1` the top-left diagonal cell, `r2` the
/// bottom-right one; the slot's off-diagonal cells stay blank.
#[derive(Clone, Copy, Debug)]
pub struct CzSlot {
    pub r1: Coord,
    pub r2: Coord,
}

/// Prepares the |CZ> resource on the main diagonal of the 2x2 slot whose
/// top-left cell is `top_left`.
pub fn cz_slot_prep(
    cost: &CostModel,
    start: u64,
    top_left: Coord,
    bits: &mut BitAlloc,
) -> Result<(Schedule, CzSlot), GadgetError> {
    let r1 = top_left;
    let r2 = (top_left.0 + 1, top_left.1 + 1);
    let p = xz_pair(cost, start, r1, r2, bits)?;
    Ok((p.sched, CzSlot { r1, r2 }))
}

/// Consumes the slot: CZ lands on (q1, q2) iff `choice` holds. `q1` sits
/// directly above `r1`, `q2` directly below `r2`.
pub fn delayed_choice_cz(
    cost: &CostModel,
    start: u64,
    q1: Coord,
    q2: Coord,
    slot: &CzSlot,
    choice: &Cond,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    if q1 != (slot.r1.0.wrapping_sub(1), slot.r1.1) {
        return Err(GadgetError::AxisViolation(q1, "first operand above the slot"));
    }
    if q2 != (slot.r2.0 + 1, slot.r2.1) {
        return Err(GadgetError::AxisViolation(q2, "second operand below the slot"));
    }
    let on = choice.clone();
    let off = Cond { bits: choice.bits.clone(), value: !choice.value };
    let mut s = Schedule::default();
    let t_x = start + cost.meas_xx_zz;

    // choice set: couple both operands, then retire the resource in X
    let (m1, m2, x1, x2) = (bits.fresh(), bits.fresh(), bits.fresh(), bits.fresh());
    for (cells, out) in [
        (vec![q1, slot.r1], m1),
        (vec![slot.r2, q2], m2),
    ] {
        let mut i = GridInstr::meas(start, IsaKind::MeasZZ, cells, out);
        i.cond = Some(on.clone());
        s.push(i);
    }
    for (cell, out) in [(slot.r1, x1), (slot.r2, x2)] {
        let mut i = GridInstr::meas(t_x, IsaKind::MeasX, vec![cell], out);
        i.cond = Some(on.clone());
        s.push(i);
    }
    // skipped conditional measurements record a clear bit, so these parities
    // are silent in the choice-clear branch
    s.correct(Pauli::Z, q1, Cond { bits: vec![m2, x1], value: true }, t_x);
    s.correct(Pauli::Z, q2, Cond { bits: vec![m1, x2], value: true }, t_x);

    // choice clear: just discard the resource
    for cell in [slot.r1, slot.r2] {
        let mut i = GridInstr::meas(t_x, IsaKind::MeasX, vec![cell], bits.fresh());
        i.cond = Some(off.clone());
        s.push(i);
    }
    Ok(s)
}
