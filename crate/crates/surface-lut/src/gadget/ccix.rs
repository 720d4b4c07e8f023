//! Doubly-controlled iX gadget on a 9x6 region. The unitary factors into
//! four commuting multi-qubit Pauli exponentials; each consumes one |T>
//! state through a joint parity measurement (an x-cat seam) followed by a
//! conditional-basis readout of the ancilla, where the Y-type readout is
//! realized by an |S_x> clone and an XZ measurement. Cat-state copies of the
//! target (5 cells) and of each control (3 cells) let all four exponentials
//! run in parallel; three remote joint measurements (ZZ, ZZ, XZ) connect the
//! interface cells to the real operands, and every byproduct folds into
//! parity-conditioned Pauli corrections on the operands.

use crate::cost::CostModel;
use crate::isa::{op_duration, Coord, GridInstr, IsaKind};
use crate::sim::{BitId, Cond, Pauli, PrepState};
use crate::verify::ParityExpr;

use super::cat::{cat_prep, Cat, CatBasis};
use super::cnot::multi_target_cnot;
use super::remote::{remote_pauli_meas, ChainForm, JointBasis};
use super::{adjacent, diag, hadj, vadj, BitAlloc, GadgetError, Path, Schedule};

/// A 9x6 placement of the gadget. With `mirrored` the column layout is
/// flipped so the target column sits leftmost instead of rightmost.
#[derive(Clone, Copy, Debug)]
pub struct CcixRegion {
    pub origin: Coord,
    pub mirrored: bool,
}

pub const CCIX_ROWS: usize = 9;
pub const CCIX_COLS: usize = 6;

/// One exponential: its seam cat, ancilla couplings, and readout resources.
struct BlockPlan {
    xcat: Path,
    holes: Vec<Coord>,
    /// (seam cell, cell below it) joint ZZ pairs; includes the |T> cell.
    couplings: Vec<(Coord, Coord)>,
    tcell: Coord,
    clone: Coord,
    uses_c1: bool,
    uses_c2: bool,
    /// Sign of the exponent: true for exp(-i pi/8 P).
    negative: bool,
}

impl CcixRegion {
    pub fn new(origin: Coord) -> Self {
        CcixRegion { origin, mirrored: false }
    }

    fn at(&self, r: usize, c: usize) -> Coord {
        let c = if self.mirrored { CCIX_COLS - 1 - c } else { c };
        (self.origin.0 + r, self.origin.1 + c)
    }

    /// Persistent |S_x> cells, seeded once before first use.
    pub fn seed_cells(&self) -> [Coord; 4] {
        [self.at(1, 2), self.at(3, 1), self.at(5, 0), self.at(7, 0)]
    }

    /// Interface cells joined to (target, control 1, control 2).
    pub fn interfaces(&self) -> (Coord, Coord, Coord) {
        (self.at(8, 5), self.at(8, 4), self.at(8, 3))
    }

    /// Every cell of the region, row-major.
    pub fn cells(&self) -> Vec<Coord> {
        (0..CCIX_ROWS)
            .flat_map(|r| (0..CCIX_COLS).map(move |c| (r, c)))
            .map(|(r, c)| self.at(r, c))
            .collect()
    }

    fn col_path(&self, col: usize, rows: std::ops::RangeInclusive<usize>) -> Path {
        Path { cells: rows.map(|r| self.at(r, col)).collect() }
    }

    /// Target copies: 5-member vertical cat, interface at the bottom.
    fn target_cat(&self) -> (Path, Vec<Coord>) {
        (self.col_path(5, 1..=8), vec![self.at(2, 5), self.at(4, 5), self.at(6, 5)])
    }

    fn c1_cat(&self) -> (Path, Vec<Coord>) {
        (self.col_path(4, 3..=8), vec![self.at(4, 4), self.at(5, 4), self.at(6, 4)])
    }

    fn c2_cat(&self) -> (Path, Vec<Coord>) {
        (self.col_path(3, 5..=8), vec![self.at(6, 3)])
    }

    /// (seed, clone target, CNOT helper) per exponential.
    fn stations(&self) -> [(Coord, Coord, Coord); 4] {
        [
            (self.at(1, 2), self.at(0, 3), self.at(0, 2)),
            (self.at(3, 1), self.at(2, 2), self.at(2, 1)),
            (self.at(5, 0), self.at(4, 1), self.at(4, 0)),
            (self.at(7, 0), self.at(6, 1), self.at(6, 0)),
        ]
    }

    fn row_path(&self, row: usize, cols: std::ops::RangeInclusive<usize>) -> Path {
        Path { cells: cols.map(|c| self.at(row, c)).collect() }
    }

    fn blocks(&self) -> [BlockPlan; 4] {
        let st = self.stations();
        let pair = |r: usize, c: usize| (self.at(r, c), self.at(r + 1, c));
        [
            BlockPlan {
                xcat: self.row_path(0, 4..=5),
                holes: vec![],
                couplings: vec![pair(0, 4), pair(0, 5)],
                tcell: self.at(1, 4),
                clone: st[0].1,
                uses_c1: false,
                uses_c2: false,
                negative: false,
            },
            BlockPlan {
                xcat: self.row_path(2, 3..=5),
                holes: vec![],
                couplings: vec![pair(2, 3), pair(2, 4), pair(2, 5)],
                tcell: self.at(3, 3),
                clone: st[1].1,
                uses_c1: true,
                uses_c2: false,
                negative: true,
            },
            BlockPlan {
                xcat: self.row_path(4, 2..=5),
                holes: vec![self.at(4, 4)],
                couplings: vec![pair(4, 2), pair(4, 3), pair(4, 5)],
                tcell: self.at(5, 2),
                clone: st[2].1,
                uses_c1: false,
                uses_c2: true,
                negative: true,
            },
            BlockPlan {
                xcat: self.row_path(6, 2..=5),
                holes: vec![],
                couplings: vec![pair(6, 2), pair(6, 3), pair(6, 4), pair(6, 5)],
                tcell: self.at(7, 2),
                clone: st[3].1,
                uses_c1: true,
                uses_c2: true,
                negative: false,
            },
        ]
    }

    /// Boundary routes along which the four |T> states arrive; every route
    /// cell must be blank for the whole delivery window.
    fn default_deliveries(&self) -> [Vec<Coord>; 4] {
        [
            vec![self.at(0, 4)],
            vec![self.at(0, 3), self.at(1, 3), self.at(2, 3)],
            vec![self.at(4, 0), self.at(4, 1), self.at(5, 1)],
            vec![self.at(6, 0), self.at(6, 1), self.at(7, 1)],
        ]
    }
}

/// Connection of the gadget to its real operands. Each path runs from the
/// operand cell to the matching interface cell; the target path carries the
/// X side of the closing XZ measurement on the operand end.
#[derive(Clone, Debug)]
pub struct CcixOperands {
    pub c1_path: Path,
    pub c2_path: Path,
    pub target_path: Path,
}

#[derive(Clone, Debug)]
pub struct CcixOptions {
    /// The persistent |S_x> seeds are already in place.
    pub seeded: bool,
    /// Measure the seeds out at the end (they are otherwise kept for reuse).
    pub retire_seeds: bool,
    /// Override the |T> delivery routes.
    pub deliveries: Option<[Vec<Coord>; 4]>,
    /// Resolution order of the four exponentials (they commute).
    pub block_order: [usize; 4],
    /// Condition on the first control being |0> instead of |1>.
    pub neg1: bool,
    /// Condition on the second control being |0> instead of |1>.
    pub neg2: bool,
}

impl Default for CcixOptions {
    fn default() -> Self {
        CcixOptions {
            seeded: false,
            retire_seeds: false,
            deliveries: None,
            block_order: [0, 1, 2, 3],
            neg1: false,
            neg2: false,
        }
    }
}

/// The compiled gadget, split into its two preparation and two execution
/// steps. Preparation overlaps preceding work; only the execution steps sit
/// on the critical path.
pub struct CcixGadget {
    pub prepare1: Schedule,
    pub prepare2: Schedule,
    pub execute1: Schedule,
    pub execute2: Schedule,
}

impl CcixGadget {
    pub fn merged(&self) -> Schedule {
        let mut s = Schedule::default();
        for part in [&self.prepare1, &self.prepare2, &self.execute1, &self.execute2] {
            s.merge(part.clone());
        }
        s
    }
}

/// Places the four persistent |S_x> seeds. Runs once per region.
pub fn seed_sx(region: &CcixRegion, start: u64) -> Schedule {
    let mut s = Schedule::default();
    for c in region.seed_cells() {
        s.push(GridInstr::op(start, IsaKind::PrepMagic(PrepState::MagicSx), vec![c]));
    }
    s
}

/// Clones the |S_x> state of `seed` onto the blank cell `f`: prepare |+>,
/// measure joint XZ (X on the seed), CNOT seed -> f through `helper`, and a
/// Z fix-up on the copy when the XZ outcome is 0. The seed survives.
pub fn clone_sx(
    cost: &CostModel,
    start: u64,
    seed: Coord,
    f: Coord,
    helper: Coord,
    bits: &mut BitAlloc,
) -> Result<Schedule, GadgetError> {
    if !diag(seed, f) {
        return Err(GadgetError::BadPath(format!("{seed:?},{f:?} must be diagonal")));
    }
    if !vadj(helper, seed) || !hadj(helper, f) {
        return Err(GadgetError::AxisViolation(helper, "helper joins seed and copy"));
    }
    let mut s = Schedule::default();
    s.push(GridInstr::op(start, IsaKind::PrepPlus, vec![f]));
    let m = bits.fresh();
    s.push(GridInstr::meas(start + cost.prep_pauli, IsaKind::MeasXZ, vec![seed, f], m));
    let spine = Path::new(vec![helper])?;
    let cx = multi_target_cnot(
        cost,
        start + cost.prep_pauli + cost.meas_xz,
        seed,
        &[(0, f)],
        &spine,
        bits,
    )?;
    let t_end = cx.end_cycle(cost);
    s.merge(cx);
    s.correct(Pauli::Z, f, Cond::bit_clear(m), t_end);
    Ok(s)
}

/// Seam half of one exponential: parallel joint ZZ measurements between the
/// x-cat cells and the cells below them (ancilla included), then the x-cat
/// retires in X with a Z fix-up per coupled cell. Returns the seam outcome
/// bits; their parity is the joint Z-parity of the coupled cells.
fn exp_couple(
    cost: &CostModel,
    start: u64,
    couplings: &[(Coord, Coord)],
    s: &mut Schedule,
    bits: &mut BitAlloc,
) -> Vec<BitId> {
    let t_retire = start + cost.meas_xx_zz;
    let mut ms = Vec::with_capacity(couplings.len());
    for &(e, d) in couplings {
        let m = bits.fresh();
        s.push(GridInstr::meas(start, IsaKind::MeasZZ, vec![e, d], m));
        ms.push(m);
        let x = bits.fresh();
        s.push(GridInstr::meas(t_retire, IsaKind::MeasX, vec![e], x));
        s.correct(Pauli::Z, d, Cond::bit(x), t_retire);
    }
    ms
}

/// Readout half of one exponential. When the joint parity selects the phase
/// branch the ancilla is read out through the |S_x> clone (a Z pre-rotation,
/// the joint XZ, then Z on the ancilla and X on the clone); otherwise it is
/// read in plain X and the clone is discarded. The returned bits' parity is
/// the exponent of the block's Pauli correction.
fn exp_resolve(
    cost: &CostModel,
    start: u64,
    tcell: Coord,
    clone: Coord,
    cond_bits: Vec<BitId>,
    phase_when: bool,
    s: &mut Schedule,
    bits: &mut BitAlloc,
) -> Vec<BitId> {
    let cond_y = Cond { bits: cond_bits.clone(), value: phase_when };
    let cond_x = Cond { bits: cond_bits, value: !phase_when };
    s.correct(Pauli::Z, tcell, cond_y.clone(), start);
    let a = bits.fresh();
    let mut xz = GridInstr::meas(start, IsaKind::MeasXZ, vec![tcell, clone], a);
    xz.cond = Some(cond_y.clone());
    s.push(xz);
    let t_r = start + cost.meas_xz;
    let mut push_meas = |kind: IsaKind, cell: Coord, cond: Cond| -> BitId {
        let b = bits.fresh();
        let mut i = GridInstr::meas(t_r, kind, vec![cell], b);
        i.cond = Some(cond);
        s.push(i);
        b
    };
    let b = push_meas(IsaKind::MeasZ, tcell, cond_y.clone());
    let bx = push_meas(IsaKind::MeasX, tcell, cond_x.clone());
    let c = push_meas(IsaKind::MeasX, clone, cond_y);
    let _junk = push_meas(IsaKind::MeasX, clone, cond_x);
    vec![a, b, bx, c]
}

/// First cycle at which every cell touched by `s` is free again; unlike
/// [`Schedule::end_cycle`] this counts instantaneous measurements as
/// occupying their cycle.
fn free_cycle(s: &Schedule, cost: &CostModel) -> u64 {
    s.instrs
        .iter()
        .map(|i| i.cycle + op_duration(i.kind, cost).max(1))
        .max()
        .unwrap_or(0)
}

fn validate_path(path: &Path, interface: Coord, what: &'static str) -> Result<(), GadgetError> {
    if path.cells.len() < 2 {
        return Err(GadgetError::BadPath(format!("{what} path needs both endpoints")));
    }
    if *path.cells.last().unwrap() != interface {
        return Err(GadgetError::BadPath(format!(
            "{what} path must end at the interface cell {interface:?}"
        )));
    }
    Ok(())
}

/// Compiles one use of the gadget. The |S_x> seeds must already be in place
/// (see [`seed_sx`]); |T> states are modeled as magic preparations whose
/// delivery routes are checked blank for the preparation window.
pub fn ccix_gadget(
    cost: &CostModel,
    region: &CcixRegion,
    ops: &CcixOperands,
    start: u64,
    opts: &CcixOptions,
    bits: &mut BitAlloc,
) -> Result<CcixGadget, GadgetError> {
    if !opts.seeded {
        return Err(GadgetError::MissingResource(region.seed_cells()[0]));
    }
    let (a0, b0, c0) = region.interfaces();
    validate_path(&ops.target_path, a0, "target")?;
    validate_path(&ops.c1_path, b0, "control-1")?;
    validate_path(&ops.c2_path, c0, "control-2")?;
    let blocks = region.blocks();
    {
        let mut order = opts.block_order;
        order.sort_unstable();
        if order != [0, 1, 2, 3] {
            return Err(GadgetError::BadPath("block order must permute 0..4".into()));
        }
    }

    // preparation step 1: the three copy cats and all four |T> states
    let p1 = start;
    let mut prepare1 = Schedule::default();
    let mut copy_cat = |spec: (Path, Vec<Coord>), b: &mut BitAlloc| -> Result<Cat, GadgetError> {
        let cat = cat_prep(cost, p1, &spec.0, CatBasis::Z, &spec.1, b)?;
        Ok(cat)
    };
    let cat_a = copy_cat(region.target_cat(), bits)?;
    let cat_b = copy_cat(region.c1_cat(), bits)?;
    let cat_c = copy_cat(region.c2_cat(), bits)?;
    prepare1.merge(cat_a.sched.clone());
    prepare1.merge(cat_b.sched.clone());
    prepare1.merge(cat_c.sched.clone());
    for blk in &blocks {
        prepare1.push(GridInstr::op(p1, IsaKind::PrepMagic(PrepState::MagicT), vec![blk.tcell]));
    }

    // preparation step 2: the seam cats and the four |S_x> clones
    let p2 = free_cycle(&prepare1, cost);
    let mut prepare2 = Schedule::default();
    for blk in &blocks {
        let cat = cat_prep(cost, p2, &blk.xcat, CatBasis::X, &blk.holes, bits)?;
        let want: Vec<Coord> = blk.couplings.iter().map(|&(e, _)| e).collect();
        if cat.members != want {
            return Err(GadgetError::BadPath("seam cat members must match couplings".into()));
        }
        prepare2.merge(cat.sched);
    }
    for (seed, f, helper) in region.stations() {
        prepare2.merge(clone_sx(cost, p2, seed, f, helper, bits)?);
    }

    // execution step 1: remote closings plus every seam measurement
    let e1 = free_cycle(&prepare2, cost).max(p2);
    let mut execute1 = Schedule::default();
    let close_t = remote_pauli_meas(
        cost,
        e1,
        &ops.target_path,
        JointBasis::Xz,
        ChainForm::BellPrep,
        false,
        bits,
    )?;
    let close_b = remote_pauli_meas(
        cost,
        e1,
        &ops.c1_path,
        JointBasis::Zz,
        ChainForm::BellPrep,
        false,
        bits,
    )?;
    let close_c = remote_pauli_meas(
        cost,
        e1,
        &ops.c2_path,
        JointBasis::Zz,
        ChainForm::BellPrep,
        false,
        bits,
    )?;
    let mut block_ms: Vec<Vec<BitId>> = Vec::with_capacity(4);
    for blk in &blocks {
        block_ms.push(exp_couple(cost, e1, &blk.couplings, &mut execute1, bits));
    }
    execute1.merge(close_t.sched);
    execute1.merge(close_b.sched);
    execute1.merge(close_c.sched);

    // execution step 2: conditional readouts, uncompute, operand corrections
    let e2 = free_cycle(&execute1, cost);
    let mut execute2 = Schedule::default();
    let mut block_f: Vec<Vec<BitId>> = vec![Vec::new(); 4];
    for &i in &opts.block_order {
        let blk = &blocks[i];
        let mut cond_bits = block_ms[i].clone();
        let mut invert = false;
        let fold = |pe: &ParityExpr, cb: &mut Vec<BitId>, inv: &mut bool| {
            cb.extend(pe.bits.iter().copied());
            *inv ^= pe.invert;
        };
        fold(&close_t.outcome, &mut cond_bits, &mut invert);
        if blk.uses_c1 {
            fold(&close_b.outcome, &mut cond_bits, &mut invert);
            invert ^= opts.neg1;
        }
        if blk.uses_c2 {
            fold(&close_c.outcome, &mut cond_bits, &mut invert);
            invert ^= opts.neg2;
        }
        block_f[i] = exp_resolve(
            cost,
            e2,
            blk.tcell,
            blk.clone,
            cond_bits,
            blk.negative ^ invert,
            &mut execute2,
            bits,
        );
    }
    let t_u = e2 + cost.meas_xz;
    let uncompute = |cat: &Cat, b: &mut BitAlloc, sched: &mut Schedule| -> Vec<BitId> {
        cat.members
            .iter()
            .map(|&m| {
                let r = b.fresh();
                sched.push(GridInstr::meas(t_u, IsaKind::MeasX, vec![m], r));
                r
            })
            .collect()
    };
    let ua = uncompute(&cat_a, bits, &mut execute2);
    let ub = uncompute(&cat_b, bits, &mut execute2);
    let uc = uncompute(&cat_c, bits, &mut execute2);

    let corr = |base: &[BitId], fs: &[&Vec<BitId>]| -> Cond {
        let mut v = base.to_vec();
        for f in fs {
            v.extend(f.iter().copied());
        }
        Cond { bits: v, value: true }
    };
    let t_real = ops.target_path.cells[0];
    let c1_real = ops.c1_path.cells[0];
    let c2_real = ops.c2_path.cells[0];
    execute2.correct(
        Pauli::X,
        t_real,
        corr(&ua, &[&block_f[0], &block_f[1], &block_f[2], &block_f[3]]),
        t_u,
    );
    execute2.correct(Pauli::Z, c1_real, corr(&ub, &[&block_f[1], &block_f[3]]), t_u);
    execute2.correct(Pauli::Z, c2_real, corr(&uc, &[&block_f[2], &block_f[3]]), t_u);
    if opts.retire_seeds {
        for c in region.seed_cells() {
            let r = bits.fresh();
            execute2.push(GridInstr::meas(t_u, IsaKind::MeasZ, vec![c], r));
        }
    }

    let gadget = CcixGadget { prepare1, prepare2, execute1, execute2 };
    check_deliveries(cost, region, opts, &gadget, p1)?;
    Ok(gadget)
}

/// Every |T> route cell must be adjacent-chained to the boundary side of its
/// ancilla and free of any scheduled activity for the delivery window.
fn check_deliveries(
    cost: &CostModel,
    region: &CcixRegion,
    opts: &CcixOptions,
    gadget: &CcixGadget,
    p1: u64,
) -> Result<(), GadgetError> {
    let routes = opts.deliveries.clone().unwrap_or_else(|| region.default_deliveries());
    let window = (p1, p1 + cost.prep_magic);
    let seeds = region.seed_cells();
    let tcells: Vec<Coord> = region.blocks().iter().map(|b| b.tcell).collect();
    for (i, route) in routes.iter().enumerate() {
        if route.is_empty() {
            return Err(GadgetError::BadPath(format!("empty delivery route {i}")));
        }
        for w in route.windows(2) {
            if !adjacent(w[0], w[1]) {
                return Err(GadgetError::NonAdjacent(w[0], w[1]));
            }
        }
        if !adjacent(*route.last().unwrap(), tcells[i]) {
            return Err(GadgetError::BadPath(format!(
                "delivery route {i} must reach the ancilla cell {:?}",
                tcells[i]
            )));
        }
        for &cell in route {
            if seeds.contains(&cell) {
                return Err(GadgetError::BadPath(format!(
                    "delivery route {i} crosses the seed cell {cell:?}"
                )));
            }
            for part in [&gadget.prepare1, &gadget.prepare2, &gadget.execute1, &gadget.execute2]
            {
                for instr in &part.instrs {
                    let end = instr.cycle + op_duration(instr.kind, cost).max(1);
                    if instr.cells.contains(&cell) && instr.cycle < window.1 && window.0 < end {
                        return Err(GadgetError::BadPath(format!(
                            "delivery route {i} cell {cell:?} busy during the window"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{check_program, trace, Grid, GridProgram};
    use crate::sim::{run, BranchPolicy, GateKind, QState, QubitId, SimOp, C64};
    use crate::verify::{channel_equal, phase_free_deviation, Ideal};

    const COLS: usize = 7;
    const ROWS: usize = 11;

    fn q(c: Coord) -> QubitId {
        crate::isa::qubit_at(COLS, c)
    }

    #[test]
    fn clone_copies_the_phase_state() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let (s, f, h) = ((1, 0), (0, 1), (0, 0));
        let mut sched = Schedule::default();
        sched.push(GridInstr::op(0, IsaKind::PrepMagic(PrepState::MagicSx), vec![s]));
        sched.merge(clone_sx(&cost, cost.prep_magic, s, f, h, &mut bits).unwrap());
        let br = run(&sched.sim_ops(COLS), &QState::new(), &BranchPolicy::All).unwrap();
        assert!(!br.is_empty());
        let sx = PrepState::MagicSx.amps();
        let mut want = vec![C64::new(0.0, 0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                want[j << 1 | i] = sx[i] * sx[j];
            }
        }
        for brch in &br {
            assert_eq!(brch.state.live_qubits().len(), 2);
            let v = brch.state.statevector(&[q(s), q(f)]).unwrap();
            assert!(
                phase_free_deviation(&want, &v) < 1e-9,
                "outcomes {:?}",
                brch.outcomes
            );
        }
    }

    /// One exponential acting on a single data cell is exp(+-i pi/8 Z),
    /// which is T-dagger (plus sign) or T (minus sign) up to global phase.
    fn exp_unit(negative: bool) {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let (seed, f, h) = ((1usize, 0usize), (0usize, 1usize), (0usize, 0usize));
        let tcell = (1, 2);
        let xcat = Path::new(vec![(0, 2), (0, 3)]).unwrap();
        let d = (1, 3);
        let mut sched = Schedule::default();
        sched.push(GridInstr::op(0, IsaKind::PrepMagic(PrepState::MagicSx), vec![seed]));
        sched.merge(clone_sx(&cost, cost.prep_magic, seed, f, h, &mut bits).unwrap());
        let t1 = sched.end_cycle(&cost);
        sched.merge(cat_prep(&cost, t1, &xcat, CatBasis::X, &[], &mut bits).unwrap().sched);
        sched.push(GridInstr::op(t1, IsaKind::PrepMagic(PrepState::MagicT), vec![tcell]));
        let t2 = sched.end_cycle(&cost);
        let ms = exp_couple(&cost, t2, &[((0, 2), tcell), ((0, 3), d)], &mut sched, &mut bits);
        let t3 = sched.end_cycle(&cost);
        let fbits = exp_resolve(&cost, t3, tcell, f, ms, negative, &mut sched, &mut bits);
        let t4 = sched.end_cycle(&cost);
        sched.correct(Pauli::Z, d, Cond { bits: fbits, value: true }, t4);
        let r = bits.fresh();
        sched.push(GridInstr::meas(t4, IsaKind::MeasZ, vec![seed], r));
        let kind = if negative { GateKind::T } else { GateKind::Tdg };
        let ideal = Ideal::Unitary(vec![SimOp::Gate { kind, qs: vec![q(d)], cond: None }]);
        let v = channel_equal(
            &sched.sim_ops(COLS),
            &[q(d)],
            &ideal,
            None,
            &BranchPolicy::Sampled { seed: 5, shots: 24 },
        )
        .unwrap();
        assert!(v.pass, "negative={negative} dev {} {:?}", v.max_deviation, v.witness);
    }

    #[test]
    fn exponential_matches_t_family() {
        exp_unit(false);
        exp_unit(true);
    }

    fn operands(region: &CcixRegion) -> CcixOperands {
        let (a0, b0, c0) = region.interfaces();
        CcixOperands {
            c1_path: Path::new(vec![(10, b0.1), (9, b0.1), b0]).unwrap(),
            c2_path: Path::new(vec![(10, c0.1), (9, c0.1), c0]).unwrap(),
            target_path: Path::with_diag_steps(vec![(9, a0.1 + 1), a0], 1).unwrap(),
        }
    }

    fn full_gadget_sched(opts: &CcixOptions) -> (Schedule, CcixOperands) {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let region = CcixRegion::new((0, 0));
        let ops = operands(&region);
        let mut sched = seed_sx(&region, 0);
        let g = ccix_gadget(&cost, &region, &ops, cost.prep_magic, opts, &mut bits).unwrap();
        sched.merge(g.merged());
        (sched, ops)
    }

    fn check_ccix_channel(opts: &CcixOptions, seed: u64, shots: u32) {
        let (sched, ops) = full_gadget_sched(opts);
        let qs = [
            q(ops.c1_path.cells[0]),
            q(ops.c2_path.cells[0]),
            q(ops.target_path.cells[0]),
        ];
        let ideal = Ideal::Unitary(vec![SimOp::Gate {
            kind: GateKind::CCiX { neg1: opts.neg1, neg2: opts.neg2 },
            qs: qs.to_vec(),
            cond: None,
        }]);
        let v = channel_equal(
            &sched.sim_ops(COLS),
            &qs,
            &ideal,
            None,
            &BranchPolicy::Sampled { seed, shots },
        )
        .unwrap();
        assert!(v.pass, "dev {} witness {:?}", v.max_deviation, v.witness);
    }

    #[test]
    fn matches_doubly_controlled_ix() {
        let opts = CcixOptions { seeded: true, retire_seeds: true, ..Default::default() };
        check_ccix_channel(&opts, 11, 10);
    }

    #[test]
    fn matches_negated_control_variants() {
        let base = CcixOptions { seeded: true, retire_seeds: true, ..Default::default() };
        check_ccix_channel(&CcixOptions { neg1: true, ..base.clone() }, 23, 6);
        check_ccix_channel(&CcixOptions { neg1: true, neg2: true, ..base }, 29, 6);
    }

    #[test]
    fn exponential_order_is_immaterial() {
        let opts = CcixOptions {
            seeded: true,
            retire_seeds: true,
            block_order: [3, 1, 2, 0],
            ..Default::default()
        };
        check_ccix_channel(&opts, 17, 6);
    }

    #[test]
    fn schedule_is_legal_and_bounded() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let region = CcixRegion::new((0, 0));
        let ops = operands(&region);
        let mut sched = seed_sx(&region, 0);
        let opts = CcixOptions { seeded: true, retire_seeds: true, ..Default::default() };
        let g = ccix_gadget(&cost, &region, &ops, cost.prep_magic, &opts, &mut bits).unwrap();
        // each execution step fits in the execution-cycle budget
        for part in [&g.execute1, &g.execute2] {
            let lo = part.instrs.iter().map(|i| i.cycle).min().unwrap();
            let hi = part.end_cycle(&cost);
            assert!(hi - lo <= cost.tau_e, "execution step spans {} cycles", hi - lo);
        }
        sched.merge(g.merged());
        let prog = GridProgram { rows: ROWS, cols: COLS, instrs: sched.instrs.clone() };
        let grid = Grid::with_data(
            ROWS,
            COLS,
            &[ops.c1_path.cells[0], ops.c2_path.cells[0], ops.target_path.cells[0]],
        );
        let end = check_program(&grid, &prog, &cost).unwrap_or_else(|e| {
            panic!("illegal: {e}\n{}", trace(&prog));
        });
        // everything but the operands ends blank
        assert_eq!(end.data_cells().len(), 3);
    }

    #[test]
    fn mirrored_region_compiles() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let region = CcixRegion { origin: (0, 1), mirrored: true };
        let (a0, b0, c0) = region.interfaces();
        let ops = CcixOperands {
            c1_path: Path::new(vec![(10, b0.1), (9, b0.1), b0]).unwrap(),
            c2_path: Path::new(vec![(10, c0.1), (9, c0.1), c0]).unwrap(),
            target_path: Path::with_diag_steps(vec![(9, a0.1 - 1), a0], 1).unwrap(),
        };
        let opts = CcixOptions { seeded: true, ..Default::default() };
        let g = ccix_gadget(&cost, &region, &ops, cost.prep_magic, &opts, &mut bits).unwrap();
        assert!(!g.execute2.corrections.is_empty());
    }

    #[test]
    fn rejects_missing_seed_and_bad_delivery() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let region = CcixRegion::new((0, 0));
        let ops = operands(&region);
        let unseeded = CcixOptions::default();
        assert!(matches!(
            ccix_gadget(&cost, &region, &ops, 0, &unseeded, &mut bits),
            Err(GadgetError::MissingResource(_))
        ));
        // a route through a copy-cat cell is busy during the window
        let mut bad = CcixOptions { seeded: true, ..Default::default() };
        let mut routes = region.default_deliveries();
        routes[0] = vec![(0, 5), (1, 5), (2, 5), (2, 4), (1, 4)];
        bad.deliveries = Some(routes);
        assert!(matches!(
            ccix_gadget(&cost, &region, &ops, 0, &bad, &mut bits),
            Err(GadgetError::BadPath(_))
        ));
    }
}
