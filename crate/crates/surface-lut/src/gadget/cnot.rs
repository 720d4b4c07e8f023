//! CNOT-family gadgets built on quantum fanout: the control is copied onto a
//! cat-state spine, each copy couples to its target through one joint XX
//! measurement, and the spine retires in a single layer (Z basis for coupled
//! copies, X basis for spares). Includes the masked multi-target variant
//! (CXOR), optional fusion of an S gate onto the shared control, and the
//! standalone |S> injection gadget.

use crate::cost::CostModel;
use crate::isa::{Coord, GridInstr, IsaKind};
use crate::sim::{BitId, Cond, Pauli, PrepState};

use super::cat::fanout;
use super::{hadj, vadj, BitAlloc, GadgetError, Path, Schedule};

/// CNOT from `control` onto every cell of `targets`, each given as
/// (spine index, target cell); the target must be horizontally adjacent to
/// its spine cell and the control vertically adjacent to the spine head.
pub fn multi_target_cnot(
    cost: &CostModel,
    start: u64,
    control: Coord,
    targets: &[(usize, Coord)],
    spine: &Path,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    compile_spine(cost, start, control, targets, spine, None, bits)
}

/// Shared core: fanout, XX couplings, spine retirement. `s_cell` optionally
/// adds an |S>-holding cell as one more coupled target whose Z retirement
/// folds an S gate onto the control.
fn compile_spine(
    cost: &CostModel,
    start: u64,
    control: Coord,
    targets: &[(usize, Coord)],
    spine: &Path,
    s_cell: Option<(usize, Coord)>,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    let n = spine.cells.len();
    let mut coupled: Vec<(usize, Coord, bool)> =
        targets.iter().map(|&(i, t)| (i, t, false)).collect();
    if let Some((i, c)) = s_cell {
        coupled.push((i, c, true));
    }
    let mut seen_idx: Vec<usize> = coupled.iter().map(|&(i, _, _)| i).collect();
    seen_idx.sort_unstable();
    seen_idx.dedup();
    if seen_idx.len() != coupled.len() || seen_idx.iter().any(|&i| i >= n) {
        return Err(GadgetError::BadPath("spine indices must be distinct and in range".into()));
    }
    for &(i, t, _) in &coupled {
        if !hadj(spine.cells[i], t) {
            return Err(GadgetError::AxisViolation(t, "target couples horizontally"));
        }
    }

    let f = fanout(cost, start, control, spine, &[], bits)?;
    let members = f.members;
    let mut s = f.sched;
    let t_xx = s.end_cycle(cost);
    let t_retire = t_xx + cost.meas_xx_zz;

    let mut zc_bits: Vec<BitId> = Vec::new(); // Z correction on the control
    for &(i, t, is_s) in &coupled {
        if !members.contains(&spine.cells[i]) {
            return Err(GadgetError::BadPath(format!(
                "coupling cell {:?} was fused out of the spine",
                spine.cells[i]
            )));
        }
        let u = bits.fresh();
        s.push(GridInstr::meas(t_xx, IsaKind::MeasXX, vec![spine.cells[i], t], u));
        zc_bits.push(u);
        let w = bits.fresh();
        s.push(GridInstr::meas(t_retire, IsaKind::MeasZ, vec![spine.cells[i]], w));
        if is_s {
            // the consumed |S> cell also retires; its Z outcome decides
            // whether the folded phase gate was S or S-dagger
            let z = bits.fresh();
            s.push(GridInstr::meas(t_retire, IsaKind::MeasZ, vec![t], z));
            s.correct(Pauli::X, t, Cond::bit(w), t_retire);
            zc_bits.push(z);
        } else {
            s.correct(Pauli::X, t, Cond::bit(w), t_retire);
        }
    }
    // spare copies leave the cat through X measurements, each feeding the
    // merged phase correction; cells fused out during preparation are
    // already gone and need no retirement
    for (i, &c) in spine.cells.iter().enumerate() {
        if seen_idx.binary_search(&i).is_err() && members.contains(&c) {
            let r = bits.fresh();
            s.push(GridInstr::meas(t_retire, IsaKind::MeasX, vec![c], r));
            zc_bits.push(r);
        }
    }
    if !zc_bits.is_empty() {
        s.correct(Pauli::Z, control, Cond { bits: zc_bits, value: true }, t_retire);
    }
    Ok(s)
}

/// CNOT between two remote cells: a single-target instance whose spine is
/// the connecting path. The control sits above the spine head; the target
/// hangs off the spine tail horizontally.
pub fn remote_cnot(
    cost: &CostModel,
    start: u64,
    control: Coord,
    target: Coord,
    path: &Path,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    if path.cells.is_empty() {
        return Err(GadgetError::BadPath("need at least one spine cell".into()));
    }
    multi_target_cnot(cost, start, control, &[(path.cells.len() - 1, target)], path, bits)
}

/// Masked multi-target CNOT: target j receives the CNOT iff mask bit j is
/// set. With `fuse_s`, the named cell must hold |S> and an S lands on the
/// control in the same schedule.
pub fn cxor(
    cost: &CostModel,
    start: u64,
    control: Coord,
    mask: &[bool],
    targets: &[(usize, Coord)],
    spine: &Path,
    fuse_s: Option<(usize, Coord)>,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    if mask.len() != targets.len() {
        return Err(GadgetError::MaskMismatch(mask.len(), targets.len()));
    }
    let live: Vec<(usize, Coord)> = targets
        .iter()
        .zip(mask)
        .filter(|&(_, &m)| m)
        .map(|(&t, _)| t)
        .collect();
    compile_spine(cost, start, control, &live, spine, fuse_s, bits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InjectMode {
    /// Direct joint ZZ with the resource, then X retirement.
    Zz,
    /// CNOT from the target onto the resource, then Z retirement.
    Cnot,
}

/// Applies S (or S-dagger) to `target` by consuming the |S> state in
/// `resource`. For `Zz` the resource sits directly below the target; for
/// `Cnot` a helper cell right of the target and above the resource carries
/// the intermediate copy.
pub fn s_inject(
    cost: &CostModel,
    start: u64,
    target: Coord,
    resource: Coord,
    mode: InjectMode,
    dagger: bool,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    let mut s = Schedule::default();
    match mode {
        InjectMode::Zz => {
            if !vadj(target, resource) {
                return Err(GadgetError::AxisViolation(resource, "resource couples vertically"));
            }
            let m = bits.fresh();
            s.push(GridInstr::meas(start, IsaKind::MeasZZ, vec![target, resource], m));
            let x = bits.fresh();
            s.push(GridInstr::meas(start + cost.meas_xx_zz, IsaKind::MeasX, vec![resource], x));
            s.correct(
                Pauli::Z,
                target,
                Cond { bits: vec![m, x], value: true },
                start + cost.meas_xx_zz,
            );
        }
        InjectMode::Cnot => {
            // helper spine cell below the target, resource right of it
            let helper = (target.0 + 1, target.1);
            if !hadj(helper, resource) {
                return Err(GadgetError::AxisViolation(resource, "resource right of the helper"));
            }
            let spine = Path::new(vec![helper])?;
            let inner = multi_target_cnot(cost, start, target, &[(0, resource)], &spine, bits)?;
            let t_z = inner.end_cycle(cost);
            s.merge(inner);
            let z = bits.fresh();
            s.push(GridInstr::meas(t_z, IsaKind::MeasZ, vec![resource], z));
            s.correct(Pauli::Z, target, Cond::bit(z), t_z);
        }
    }
    if dagger {
        // S-dagger = Z then S; the extra Z is unconditional
        let t = s.end_cycle(cost);
        s.correct(Pauli::Z, target, Cond { bits: Vec::new(), value: false }, t);
    }
    Ok(s)
}

/// Schedules the |S> resource preparation itself.
pub fn prep_s(start: u64, cell: Coord) -> GridInstr {
    GridInstr::op(start, IsaKind::PrepMagic(PrepState::MagicS), vec![cell])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{BranchPolicy, GateKind, QubitId, SimOp};
    use crate::verify::{channel_equal, Ideal};

    const COLS: usize = 8;

    fn q(c: Coord) -> QubitId {
        crate::isa::qubit_at(COLS, c)
    }

    fn cnot_ideal(c: Coord, ts: &[Coord]) -> Ideal {
        Ideal::Unitary(
            ts.iter()
                .map(|&t| SimOp::Gate { kind: GateKind::Cx, qs: vec![q(c), q(t)], cond: None })
                .collect(),
        )
    }

    #[test]
    fn remote_cnot_over_path_lengths() {
        let cost = CostModel::default();
        let control = (0, 0);
        for len in 1..=3usize {
            let spine: Vec<Coord> = (1..=len).map(|r| (r, 0)).collect();
            let target = (len, 1);
            let mut bits = BitAlloc::new(0);
            let s = remote_cnot(&cost, 0, control, target, &Path::new(spine).unwrap(), &mut bits)
                .unwrap();
            let v = channel_equal(
                &s.sim_ops(COLS),
                &[q(control), q(target)],
                &cnot_ideal(control, &[target]),
                None,
                &BranchPolicy::All,
            )
            .unwrap();
            assert!(v.pass, "len={len}: dev {} at {:?}", v.max_deviation, v.witness);
        }
    }

    #[test]
    fn multi_target_hits_every_target() {
        let cost = CostModel::default();
        let control = (0, 0);
        let spine: Vec<Coord> = (1..=3).map(|r| (r, 0)).collect();
        let targets = [(0usize, (1, 1)), (2usize, (3, 1))];
        let mut bits = BitAlloc::new(0);
        let s = multi_target_cnot(
            &cost,
            0,
            control,
            &targets,
            &Path::new(spine).unwrap(),
            &mut bits,
        )
        .unwrap();
        let tcells: Vec<Coord> = targets.iter().map(|&(_, t)| t).collect();
        let mut operands = vec![q(control)];
        operands.extend(tcells.iter().map(|&t| q(t)));
        let v = channel_equal(
            &s.sim_ops(COLS),
            &operands,
            &cnot_ideal(control, &tcells),
            None,
            &BranchPolicy::All,
        )
        .unwrap();
        assert!(v.pass, "dev {} at {:?}", v.max_deviation, v.witness);
    }

    #[test]
    fn cxor_respects_the_mask() {
        let cost = CostModel::default();
        let control = (0, 0);
        let spine: Vec<Coord> = (1..=3).map(|r| (r, 0)).collect();
        let targets = [(0usize, (1, 1)), (1usize, (2, 1)), (2usize, (3, 1))];
        let mask = [true, false, true];
        let mut bits = BitAlloc::new(0);
        let s = cxor(
            &cost,
            0,
            control,
            &mask,
            &targets,
            &Path::new(spine).unwrap(),
            None,
            &mut bits,
        )
        .unwrap();
        // only masked targets are operands of the ideal; the skipped one is
        // untouched and not part of the schedule at all
        let tcells = [(1, 1), (3, 1)];
        let mut operands = vec![q(control)];
        operands.extend(tcells.iter().map(|&t| q(t)));
        let v = channel_equal(
            &s.sim_ops(COLS),
            &operands,
            &cnot_ideal(control, &tcells),
            None,
            &BranchPolicy::All,
        )
        .unwrap();
        assert!(v.pass, "dev {} at {:?}", v.max_deviation, v.witness);
        assert!(!s.cells().contains(&(2, 1)));
    }

    #[test]
    fn cxor_fuses_s_onto_the_control() {
        let cost = CostModel::default();
        let control = (0, 0);
        let spine: Vec<Coord> = (1..=2).map(|r| (r, 0)).collect();
        let targets = [(0usize, (1, 1))];
        let s_cell = (1usize, (2, 1));
        let mut bits = BitAlloc::new(0);
        let mut s = Schedule::default();
        s.push(prep_s(0, s_cell.1));
        s.merge(
            cxor(
                &cost,
                1,
                control,
                &[true],
                &targets,
                &Path::new(spine).unwrap(),
                Some(s_cell),
                &mut bits,
            )
            .unwrap(),
        );
        let ideal = Ideal::Unitary(vec![
            SimOp::Gate { kind: GateKind::Cx, qs: vec![q(control), q((1, 1))], cond: None },
            SimOp::Gate { kind: GateKind::S, qs: vec![q(control)], cond: None },
        ]);
        let v = channel_equal(
            &s.sim_ops(COLS),
            &[q(control), q((1, 1))],
            &ideal,
            None,
            &BranchPolicy::All,
        )
        .unwrap();
        assert!(v.pass, "dev {} at {:?}", v.max_deviation, v.witness);
    }

    #[test]
    fn s_injection_both_modes() {
        let cost = CostModel::default();
        let target = (0, 0);
        for (mode, resource) in [(InjectMode::Zz, (1, 0)), (InjectMode::Cnot, (1, 1))] {
            for dagger in [false, true] {
                let mut bits = BitAlloc::new(0);
                let mut s = Schedule::default();
                s.push(prep_s(0, resource));
                s.merge(s_inject(&cost, 1, target, resource, mode, dagger, &mut bits).unwrap());
                let kind = if dagger { GateKind::Sdg } else { GateKind::S };
                let ideal =
                    Ideal::Unitary(vec![SimOp::Gate { kind, qs: vec![q(target)], cond: None }]);
                let v = channel_equal(
                    &s.sim_ops(COLS),
                    &[q(target)],
                    &ideal,
                    None,
                    &BranchPolicy::All,
                )
                .unwrap();
                assert!(
                    v.pass,
                    "{mode:?} dagger={dagger}: dev {} at {:?}",
                    v.max_deviation,
                    v.witness
                );
            }
        }
    }

    #[test]
    fn mask_length_must_match() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let spine = Path::new(vec![(1, 0)]).unwrap();
        assert!(matches!(
            cxor(&cost, 0, (0, 0), &[true, false], &[(0, (1, 1))], &spine, None, &mut bits),
            Err(GadgetError::MaskMismatch(2, 1))
        ));
    }
}
