//! Remote two-qubit operations over a path of blank helper cells: joint
//! ZZ/XX/XZ measurements, Bell preparation and Bell measurement, all in
//! constant depth via segment chains (Bell-paired interiors fused by seam
//! measurements), with odd interiors handled by one Move at the endpoint
//! nearest the target.

use std::collections::HashMap;

use crate::cost::CostModel;
use crate::isa::{Coord, GridInstr, IsaKind};
use crate::sim::{BitId, Cond, Pauli};
use crate::verify::ParityExpr;

use super::bell::{bell_meas, bell_prep, bell_prep_raw, move_op, xz_pair_raw};
use super::{adjacent, diag, hadj, vadj, BitAlloc, GadgetError, Path, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JointBasis {
    Zz,
    Xx,
    Xz,
}

/// How interior cells are consumed: Bell-prepared pairs fused by one seam
/// layer (the default), or singleton ancillas with two staggered seam layers
/// (the alternative construction; requires no pair preparation).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChainForm {
    #[default]
    BellPrep,
    BellMeas,
}

pub struct RemoteMeas {
    pub sched: Schedule,
    pub outcome: ParityExpr,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    X,
    Z,
}

enum Seg {
    Singleton(Coord, Region),
    Pair(Coord, Coord, Region),
    /// Transition pair with stabilizers X_u Z_v, Z_u X_v.
    XzPair(Coord, Coord),
}

impl Seg {
    fn first(&self) -> Coord {
        match *self {
            Seg::Singleton(c, _) | Seg::Pair(c, _, _) | Seg::XzPair(c, _) => c,
        }
    }
    fn last(&self) -> Coord {
        match *self {
            Seg::Singleton(c, _) => c,
            Seg::Pair(_, c, _) | Seg::XzPair(_, c) => c,
        }
    }
}

fn pair_up(cells: &[Coord], region: Region, singleton_at_end: bool) -> Vec<Seg> {
    let odd = cells.len() % 2 == 1;
    let mut segs = Vec::new();
    let paired = if odd && !singleton_at_end {
        segs.push(Seg::Singleton(cells[0], region));
        &cells[1..]
    } else if odd {
        &cells[..cells.len() - 1]
    } else {
        cells
    };
    for p in paired.chunks(2) {
        segs.push(Seg::Pair(p[0], p[1], region));
    }
    if odd && singleton_at_end {
        segs.push(Seg::Singleton(cells[cells.len() - 1], region));
    }
    segs
}

fn seam_axis_ok(basis_left: Region, a: Coord, b: Coord) -> bool {
    match basis_left {
        Region::Z => vadj(a, b),
        Region::X => hadj(a, b),
    }
}

/// A joint Pauli measurement of the path endpoints: Z_a Z_b, X_a X_b, or
/// X_a Z_b. The path lists all cells from `a` to `b`; interior cells must be
/// blank and are returned blank. For the XZ basis the path contains exactly
/// one diagonal step marking the 2x2 transition square.
pub fn remote_pauli_meas(
    cost: &CostModel,
    start: u64,
    path: &Path,
    basis: JointBasis,
    form: ChainForm,
    with_move: bool,
    bits: &mut BitAlloc,
) -> Result<RemoteMeas, GadgetError> {
    let cells = &path.cells;
    if cells.len() < 2 {
        return Err(GadgetError::BadPath("need both endpoints".into()));
    }
    let a = cells[0];
    let b = cells[cells.len() - 1];
    let interior = &cells[1..cells.len() - 1];

    if with_move && !interior.is_empty() {
        // relax one endpoint whose link axis does not match its region:
        // move the data into the adjacent path cell, chain to it, move back
        let need = |left: bool, u: Coord, v: Coord| match basis {
            JointBasis::Zz => vadj(u, v),
            JointBasis::Xx => hadj(u, v),
            JointBasis::Xz => {
                if left {
                    hadj(u, v)
                } else {
                    vadj(u, v)
                }
            }
        };
        let relax_b = !need(false, cells[cells.len() - 2], b) && adjacent(cells[cells.len() - 2], b);
        let relax_a = !need(true, a, cells[1]) && adjacent(a, cells[1]);
        if relax_a && relax_b {
            return Err(GadgetError::AxisViolation(a, "at most one relaxed endpoint"));
        }
        if relax_a || relax_b {
            let (data, staging, trimmed) = if relax_b {
                (b, cells[cells.len() - 2], cells[..cells.len() - 1].to_vec())
            } else {
                (a, cells[1], cells[1..].to_vec())
            };
            let mut s = move_op(cost, start, data, staging, bits)?;
            let t1 = s.end_cycle(cost);
            let mut inner = remote_pauli_meas(
                cost,
                t1,
                &Path { cells: trimmed },
                basis,
                form,
                false,
                bits,
            )?;
            let t2 = inner.sched.end_cycle(cost).max(s.end_cycle(cost));
            let back = move_op(cost, t2, staging, data, bits)?;
            let t3 = back.end_cycle(cost);
            // Paulis commute through a move, so corrections aimed at the
            // staging cell land on the data cell after the move back
            for c in inner.sched.corrections.iter_mut() {
                if c.cell == staging {
                    c.cell = data;
                    c.cycle = t3;
                }
            }
            s.merge(inner.sched);
            s.merge(back);
            return Ok(RemoteMeas { sched: s, outcome: inner.outcome });
        }
    }

    // direct case
    if interior.is_empty() {
        let mut s = Schedule::default();
        let m = bits.fresh();
        let kind = match basis {
            JointBasis::Zz if vadj(a, b) => IsaKind::MeasZZ,
            JointBasis::Xx if hadj(a, b) => IsaKind::MeasXX,
            JointBasis::Xz if diag(a, b) => IsaKind::MeasXZ,
            _ => return Err(GadgetError::AxisViolation(a, "endpoint adjacency")),
        };
        s.push(GridInstr::meas(start, kind, vec![a, b], m));
        return Ok(RemoteMeas { sched: s, outcome: ParityExpr { bits: vec![m], invert: false } });
    }

    // segment the interior
    let segs: Vec<Seg> = match basis {
        JointBasis::Zz => segments_uniform(interior, Region::Z, form),
        JointBasis::Xx => segments_uniform(interior, Region::X, form),
        JointBasis::Xz => {
            let d = cells
                .windows(2)
                .position(|w| diag(w[0], w[1]))
                .ok_or_else(|| GadgetError::BadPath("XZ path needs a diagonal step".into()))?;
            if d == 0 || d + 2 == cells.len() {
                return Err(GadgetError::BadPath(
                    "XZ transition square must be interior".into(),
                ));
            }
            let u_idx = d - 1; // interior index of the X-side pair cell
            let left = &interior[..u_idx];
            let right = &interior[u_idx + 2..];
            let mut v = pair_up(left, Region::X, false);
            v.push(Seg::XzPair(interior[u_idx], interior[u_idx + 1]));
            v.extend(pair_up(right, Region::Z, true));
            v
        }
    };

    // regions seen by each seam: the region of the segment boundary it joins
    let mut s = Schedule::default();
    let mut outcome_bits: Vec<BitId> = Vec::new();
    let mut corr_b: Vec<BitId> = Vec::new(); // Z on b (Z-region byproduct)
    let mut corr_a: Vec<BitId> = Vec::new(); // X on a (X-region byproduct)

    // 1. preparations
    let mut seam_t = start + cost.prep_pauli;
    for seg in &segs {
        match *seg {
            Seg::Singleton(c, r) => {
                let kind = if r == Region::Z { IsaKind::PrepPlus } else { IsaKind::PrepZero };
                s.push(GridInstr::op(start, kind, vec![c]));
            }
            Seg::Pair(u, v, r) => {
                let p = bell_prep_raw(cost, start, u, v, bits)?;
                // the chain consumes the pair's ZZ (Z region) or XX (X
                // region) stabilizer; the prep frame bit sits on ZZ for
                // vertical pairs and on XX for horizontal pairs
                match (r, p.vertical) {
                    (Region::Z, true) | (Region::X, false) => outcome_bits.push(p.zz_bit),
                    (Region::Z, false) => corr_b.push(p.zz_bit),
                    (Region::X, true) => corr_a.push(p.zz_bit),
                }
                s.merge(p.sched);
                seam_t = seam_t.max(start + cost.prep_pauli + cost.meas_xx_zz);
            }
            Seg::XzPair(u, v) => {
                let p = xz_pair_raw(cost, start, u, v, bits)?;
                outcome_bits.push(p.bit);
                s.merge(p.sched);
                seam_t = seam_t.max(start + cost.prep_pauli + cost.meas_xz);
            }
        }
    }

    // 2. seam measurements between consecutive nodes (endpoint, segments,
    // endpoint); a singleton's two seams are staggered by one slot
    struct Node {
        first: Coord,
        last: Coord,
        region_out: Region,
    }
    let reg_of_endpoint = |left: bool| match basis {
        JointBasis::Zz => Region::Z,
        JointBasis::Xx => Region::X,
        JointBasis::Xz => {
            if left {
                Region::X
            } else {
                Region::Z
            }
        }
    };
    let mut nodes = vec![Node { first: a, last: a, region_out: reg_of_endpoint(true) }];
    for seg in &segs {
        let ro = match *seg {
            Seg::Singleton(_, r) | Seg::Pair(_, _, r) => r,
            Seg::XzPair(..) => Region::Z,
        };
        nodes.push(Node { first: seg.first(), last: seg.last(), region_out: ro });
    }
    nodes.push(Node { first: b, last: b, region_out: reg_of_endpoint(false) });
    // a cell carrying two seams (a singleton ancilla) needs them in
    // different layers; pick the first layer free on both cells, which
    // alternates even/odd along a singleton chain
    let mut used: HashMap<Coord, Vec<u64>> = HashMap::new();
    let mut max_layer = 0;
    for w in 0..nodes.len() - 1 {
        let (lc, rc) = (nodes[w].last, nodes[w + 1].first);
        let r = nodes[w].region_out;
        if !seam_axis_ok(r, lc, rc) {
            return Err(GadgetError::AxisViolation(lc, "seam axis"));
        }
        let mut layer = 0;
        while used.get(&lc).is_some_and(|v| v.contains(&layer))
            || used.get(&rc).is_some_and(|v| v.contains(&layer))
        {
            layer += 1;
        }
        used.entry(lc).or_default().push(layer);
        used.entry(rc).or_default().push(layer);
        max_layer = max_layer.max(layer);
        let m = bits.fresh();
        let kind = if r == Region::Z { IsaKind::MeasZZ } else { IsaKind::MeasXX };
        s.push(GridInstr::meas(seam_t + layer * cost.meas_xx_zz, kind, vec![lc, rc], m));
        outcome_bits.push(m);
    }
    let retire_t = seam_t + cost.meas_xx_zz * (max_layer + 1);

    // 3. retire interior cells in the conjugate basis of their region
    for seg in &segs {
        let mut retire = |c: Coord, r: Region, s: &mut Schedule| {
            let bit = bits.fresh();
            let kind = if r == Region::Z { IsaKind::MeasX } else { IsaKind::MeasZ };
            s.push(GridInstr::meas(retire_t, kind, vec![c], bit));
            if r == Region::Z {
                corr_b.push(bit);
            } else {
                corr_a.push(bit);
            }
        };
        match *seg {
            Seg::Singleton(c, r) => retire(c, r, &mut s),
            Seg::Pair(u, v, r) => {
                retire(u, r, &mut s);
                retire(v, r, &mut s);
            }
            Seg::XzPair(u, v) => {
                retire(u, Region::X, &mut s);
                retire(v, Region::Z, &mut s);
            }
        }
    }

    if !corr_b.is_empty() {
        s.correct(Pauli::Z, b, Cond { bits: corr_b, value: true }, retire_t);
    }
    if !corr_a.is_empty() {
        s.correct(Pauli::X, a, Cond { bits: corr_a, value: true }, retire_t);
    }
    Ok(RemoteMeas { sched: s, outcome: ParityExpr { bits: outcome_bits, invert: false } })
}

fn segments_uniform(interior: &[Coord], region: Region, form: ChainForm) -> Vec<Seg> {
    match form {
        ChainForm::BellPrep => pair_up(interior, region, false),
        ChainForm::BellMeas => interior.iter().map(|&c| Seg::Singleton(c, region)).collect(),
    }
}

pub struct RemoteBell {
    pub sched: Schedule,
    /// For `measure` mode: the two reported Bell parities.
    pub zz: Option<ParityExpr>,
    pub xx: Option<ParityExpr>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellMode {
    Prepare,
    Measure,
}

/// Bell preparation or Bell-basis measurement between the path endpoints.
/// Even interiors chain directly; odd interiors insert one Move at the
/// endpoint nearest the target.
pub fn remote_bell(
    cost: &CostModel,
    start: u64,
    path: &Path,
    mode: BellMode,
    bits: &mut BitAlloc,
) -> Result<RemoteBell, GadgetError> {
    let cells = &path.cells;
    if cells.len() < 2 {
        return Err(GadgetError::BadPath("need both endpoints".into()));
    }
    let n = cells.len() - 2;
    if n % 2 == 1 {
        // odd interior: run the even construction onto the last interior
        // cell, then move across the final link
        let trimmed = Path::new(cells[..cells.len() - 1].to_vec())?;
        let b = cells[cells.len() - 1];
        let inner_end = cells[cells.len() - 2];
        match mode {
            BellMode::Prepare => {
                let mut r = remote_bell(cost, start, &trimmed, mode, bits)?;
                let end = r.sched.end_cycle(cost);
                r.sched.merge(move_op(cost, end, inner_end, b, bits)?);
                return Ok(r);
            }
            BellMode::Measure => {
                let mut s = move_op(cost, start, b, inner_end, bits)?;
                let end = s.end_cycle(cost);
                let r = remote_bell(cost, end, &trimmed, mode, bits)?;
                s.merge(r.sched);
                return Ok(RemoteBell { sched: s, zz: r.zz, xx: r.xx });
            }
        }
    }
    let a = cells[0];
    let b = cells[cells.len() - 1];
    let mut s = Schedule::default();
    match mode {
        BellMode::Prepare => {
            if n == 0 {
                let p = bell_prep(cost, start, a, b, bits)?;
                return Ok(RemoteBell { sched: p.sched, zz: None, xx: None });
            }
            // pairs (a,i1),(i2,i3),...,(i_n,b); Bell-measure the seams
            let mut t_meas = start;
            for p in cells.chunks(2) {
                let pr = bell_prep(cost, start, p[0], p[1], bits)?;
                t_meas = t_meas.max(pr.sched.end_cycle(cost));
                s.merge(pr.sched);
            }
            let mut xbits = Vec::new();
            let mut zbits = Vec::new();
            for i in (1..cells.len() - 1).step_by(2) {
                let bm = bell_meas(cost, t_meas, cells[i], cells[i + 1], bits)?;
                zbits.extend(bm.zz.bits.clone());
                xbits.extend(bm.xx.bits.clone());
                s.merge(bm.sched);
            }
            let end = s.end_cycle(cost);
            // entanglement swapping byproduct on b: X for seam-ZZ parity,
            // Z for seam-XX parity
            if !zbits.is_empty() {
                s.correct(Pauli::X, b, Cond { bits: zbits, value: true }, end);
            }
            if !xbits.is_empty() {
                s.correct(Pauli::Z, b, Cond { bits: xbits, value: true }, end);
            }
            Ok(RemoteBell { sched: s, zz: None, xx: None })
        }
        BellMode::Measure => {
            if n == 0 {
                let bm = bell_meas(cost, start, a, b, bits)?;
                return Ok(RemoteBell { sched: bm.sched, zz: Some(bm.zz), xx: Some(bm.xx) });
            }
            // pairs (i1,i2),...,(i_{n-1},i_n); Bell-measure the seams
            // (a,i1),(i2,i3),...,(i_n,b)
            let mut t_meas = start;
            for i in (1..cells.len() - 1).step_by(2) {
                let pr = bell_prep(cost, start, cells[i], cells[i + 1], bits)?;
                t_meas = t_meas.max(pr.sched.end_cycle(cost));
                s.merge(pr.sched);
            }
            let mut zz = ParityExpr::default();
            let mut xx = ParityExpr::default();
            let mut i = 0;
            while i < cells.len() {
                let bm = bell_meas(cost, t_meas, cells[i], cells[i + 1], bits)?;
                zz.bits.extend(bm.zz.bits.clone());
                xx.bits.extend(bm.xx.bits.clone());
                s.merge(bm.sched);
                i += 2;
            }
            Ok(RemoteBell { sched: s, zz: Some(zz), xx: Some(xx) })
        }
    }
}

/// Folds an outcome parity into a `Cond`.
pub fn cond_of(p: &ParityExpr) -> Cond {
    Cond { bits: p.bits.clone(), value: !p.invert }
}
