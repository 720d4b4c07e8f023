//! The 2D grid model and the minimal lattice-surgery operation set, with
//! legality checking (blank-state discipline, axis constraints, neighbor
//! blocking), per-op durations, and executable semantics.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::cost::CostModel;
use crate::sim::{BitId, Cond, Pauli, PrepState, QubitId, SimOp};

pub type Coord = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellState {
    Blank,
    Data,
}

/// Grid of surface-code patches; row 0 is the top row.
#[derive(Clone, Debug)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    cells: Vec<CellState>,
}

impl Grid {
    pub fn blank(rows: usize, cols: usize) -> Self {
        Grid { rows, cols, cells: vec![CellState::Blank; rows * cols] }
    }

    pub fn with_data(rows: usize, cols: usize, data: &[Coord]) -> Self {
        let mut g = Self::blank(rows, cols);
        for &c in data {
            g.set(c, CellState::Data);
        }
        g
    }

    pub fn get(&self, (r, c): Coord) -> CellState {
        self.cells[r * self.cols + c]
    }

    pub fn set(&mut self, (r, c): Coord, s: CellState) {
        self.cells[r * self.cols + c] = s;
    }

    pub fn in_range(&self, (r, c): Coord) -> bool {
        r < self.rows && c < self.cols
    }

    pub fn data_cells(&self) -> Vec<Coord> {
        (0..self.rows * self.cols)
            .filter(|i| self.cells[*i] == CellState::Data)
            .map(|i| (i / self.cols, i % self.cols))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IsaKind {
    MeasZ,
    MeasX,
    PrepZero,
    PrepPlus,
    /// Joint ZZ of two vertically adjacent patches.
    MeasZZ,
    /// Joint XX of two horizontally adjacent patches.
    MeasXX,
    /// Joint XZ of two diagonal patches; blocks the off-diagonal neighbors.
    MeasXZ,
    /// Magic-state delivery at a boundary cell (distillation out of scope).
    PrepMagic(PrepState),
}

impl IsaKind {
    pub fn arity(self) -> usize {
        match self {
            IsaKind::MeasZZ | IsaKind::MeasXX | IsaKind::MeasXZ => 2,
            _ => 1,
        }
    }

    pub fn is_measure(self) -> bool {
        !matches!(self, IsaKind::PrepZero | IsaKind::PrepPlus | IsaKind::PrepMagic(_))
    }

    pub fn token(self) -> &'static str {
        match self {
            IsaKind::MeasZ => "MEASZ",
            IsaKind::MeasX => "MEASX",
            IsaKind::PrepZero => "PREPZERO",
            IsaKind::PrepPlus => "PREPPLUS",
            IsaKind::MeasZZ => "MEASZZ",
            IsaKind::MeasXX => "MEASXX",
            IsaKind::MeasXZ => "MEASXZ",
            IsaKind::PrepMagic(PrepState::MagicT) => "PREPMAGIC:T",
            IsaKind::PrepMagic(PrepState::MagicS) => "PREPMAGIC:S",
            IsaKind::PrepMagic(PrepState::MagicSdg) => "PREPMAGIC:SDG",
            IsaKind::PrepMagic(PrepState::MagicSx) => "PREPMAGIC:SX",
            IsaKind::PrepMagic(_) => "PREPMAGIC",
        }
    }
}

/// Duration of an op in logical cycles. Single-qubit measurements (and Pauli
/// corrections, which never appear as grid ops) take no time.
pub fn op_duration(kind: IsaKind, cost: &CostModel) -> u64 {
    match kind {
        IsaKind::MeasZ | IsaKind::MeasX => 0,
        IsaKind::PrepZero | IsaKind::PrepPlus => cost.prep_pauli,
        IsaKind::MeasZZ | IsaKind::MeasXX => cost.meas_xx_zz,
        IsaKind::MeasXZ => cost.meas_xz,
        IsaKind::PrepMagic(_) => cost.prep_magic,
    }
}

/// One scheduled grid instruction. `cells[0]` carries the X part of an XZ
/// measurement and `cells[1]` the Z part.
#[derive(Clone, Debug)]
pub struct GridInstr {
    pub cycle: u64,
    pub kind: IsaKind,
    pub cells: Vec<Coord>,
    pub out: Option<BitId>,
    pub cond: Option<Cond>,
}

impl GridInstr {
    pub fn op(cycle: u64, kind: IsaKind, cells: Vec<Coord>) -> Self {
        GridInstr { cycle, kind, cells, out: None, cond: None }
    }

    pub fn meas(cycle: u64, kind: IsaKind, cells: Vec<Coord>, out: BitId) -> Self {
        GridInstr { cycle, kind, cells, out: Some(out), cond: None }
    }

    /// The two off-diagonal neighbors blocked by an XZ measurement.
    pub fn blocked_cells(&self) -> Vec<Coord> {
        if self.kind != IsaKind::MeasXZ {
            return vec![];
        }
        let (a, b) = (self.cells[0], self.cells[1]);
        vec![(a.0, b.1), (b.0, a.1)]
    }
}

#[derive(Clone, Debug, Default)]
pub struct GridProgram {
    pub rows: usize,
    pub cols: usize,
    pub instrs: Vec<GridInstr>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub cell: Coord,
    pub cycle: u64,
    pub detail: String,
}

#[derive(Debug, Error)]
#[error("{} legality violations, first: {} at {:?} cycle {}", .0.len(), .0[0].rule, .0[0].cell, .0[0].cycle)]
pub struct IllegalProgram(pub Vec<Violation>);

fn complementary(a: &Option<Cond>, b: &Option<Cond>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.bits == y.bits && x.value != y.value,
        _ => false,
    }
}

/// Checks one co-scheduled window of ops against the grid and applies their
/// state effects. All ops are taken to start at the same cycle.
pub fn check_legal(grid: &mut Grid, ops: &[GridInstr]) -> Result<(), Vec<Violation>> {
    let mut errs = Vec::new();
    let cycle = ops.first().map(|o| o.cycle).unwrap_or(0);
    let mut claimed: Vec<(Coord, &GridInstr)> = Vec::new();
    let mut blocked: Vec<(Coord, Coord)> = Vec::new();
    for op in ops {
        for &c in &op.cells {
            if !grid.in_range(c) {
                errs.push(Violation {
                    rule: "out-of-range",
                    cell: c,
                    cycle,
                    detail: format!("{} touches {:?}", op.kind.token(), c),
                });
                return Err(errs);
            }
        }
        match op.kind {
            IsaKind::PrepZero | IsaKind::PrepPlus | IsaKind::PrepMagic(_) => {
                let c = op.cells[0];
                if grid.get(c) != CellState::Blank {
                    errs.push(Violation {
                        rule: "expects-blank",
                        cell: c,
                        cycle,
                        detail: format!("{} on data cell", op.kind.token()),
                    });
                }
            }
            IsaKind::MeasZ | IsaKind::MeasX => {
                let c = op.cells[0];
                if grid.get(c) != CellState::Data {
                    errs.push(Violation {
                        rule: "expects-data",
                        cell: c,
                        cycle,
                        detail: format!("{} on blank cell", op.kind.token()),
                    });
                }
            }
            IsaKind::MeasZZ | IsaKind::MeasXX | IsaKind::MeasXZ => {
                let (a, b) = (op.cells[0], op.cells[1]);
                let ok = match op.kind {
                    IsaKind::MeasZZ => a.1 == b.1 && a.0.abs_diff(b.0) == 1,
                    IsaKind::MeasXX => a.0 == b.0 && a.1.abs_diff(b.1) == 1,
                    _ => a.0.abs_diff(b.0) == 1 && a.1.abs_diff(b.1) == 1,
                };
                if !ok {
                    let rule = match op.kind {
                        IsaKind::MeasZZ => "vertical-only",
                        IsaKind::MeasXX => "horizontal-only",
                        _ => "diagonal-only",
                    };
                    errs.push(Violation {
                        rule,
                        cell: a,
                        cycle,
                        detail: format!("{} on {:?},{:?}", op.kind.token(), a, b),
                    });
                }
                for &c in &op.cells {
                    if grid.get(c) != CellState::Data {
                        errs.push(Violation {
                            rule: "expects-data",
                            cell: c,
                            cycle,
                            detail: format!("{} on blank cell", op.kind.token()),
                        });
                    }
                }
                if op.kind == IsaKind::MeasXZ {
                    for n in op.blocked_cells() {
                        if grid.in_range(n) {
                            if grid.get(n) != CellState::Blank {
                                errs.push(Violation {
                                    rule: "blocked-neighbor",
                                    cell: n,
                                    cycle,
                                    detail: "XZ-blocked neighbor not blank".into(),
                                });
                            }
                            blocked.push((n, a));
                        }
                    }
                }
            }
        }
        for &c in &op.cells {
            if let Some((_, other)) = claimed.iter().find(|(cc, _)| *cc == c) {
                if !complementary(&op.cond, &other.cond) {
                    errs.push(Violation {
                        rule: "double-claim",
                        cell: c,
                        cycle,
                        detail: format!(
                            "{} and {} both touch {:?}",
                            op.kind.token(),
                            other.kind.token(),
                            c
                        ),
                    });
                }
            } else {
                claimed.push((c, op));
            }
        }
    }
    for (n, xz_cell) in &blocked {
        if claimed.iter().any(|(c, _)| c == n) {
            errs.push(Violation {
                rule: "blocked-neighbor",
                cell: *n,
                cycle,
                detail: format!("co-scheduled op touches cell blocked by XZ at {xz_cell:?}"),
            });
        }
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    // apply state effects; complementary conditional pairs apply once
    for op in ops {
        match op.kind {
            IsaKind::PrepZero | IsaKind::PrepPlus | IsaKind::PrepMagic(_) => {
                grid.set(op.cells[0], CellState::Data);
            }
            IsaKind::MeasZ | IsaKind::MeasX => grid.set(op.cells[0], CellState::Blank),
            _ => {}
        }
    }
    Ok(())
}

/// Replays a whole program window by window (grouped by start cycle),
/// additionally rejecting temporal overlap of multi-cycle ops on one cell.
pub fn check_program(
    grid: &Grid,
    prog: &GridProgram,
    cost: &CostModel,
) -> Result<Grid, IllegalProgram> {
    let mut g = grid.clone();
    let mut order: Vec<&GridInstr> = prog.instrs.iter().collect();
    order.sort_by_key(|i| (i.cycle, i.cells[0]));
    // busy intervals and blocked intervals from multi-cycle ops
    let mut busy: Vec<(Coord, u64, u64, Option<Cond>)> = Vec::new();
    let mut errs = Vec::new();
    for op in &order {
        let d = op_duration(op.kind, cost).max(1);
        for &c in &op.cells {
            for (bc, s, e, cond) in &busy {
                if *bc == c && op.cycle < *e && *s < op.cycle + d && !complementary(cond, &op.cond)
                {
                    errs.push(Violation {
                        rule: "double-claim",
                        cell: c,
                        cycle: op.cycle,
                        detail: format!("overlaps op running [{s},{e})"),
                    });
                }
            }
        }
        for n in op.blocked_cells() {
            busy.push((n, op.cycle, op.cycle + d, None));
        }
        for &c in &op.cells {
            busy.push((c, op.cycle, op.cycle + d, op.cond.clone()));
        }
    }
    if !errs.is_empty() {
        return Err(IllegalProgram(errs));
    }
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && order[j].cycle == order[i].cycle {
            j += 1;
        }
        let window: Vec<GridInstr> = order[i..j].iter().map(|o| (*o).clone()).collect();
        check_legal(&mut g, &window).map_err(IllegalProgram)?;
        i = j;
    }
    Ok(g)
}

pub fn qubit_at(cols: usize, (r, c): Coord) -> QubitId {
    QubitId((r * cols + c) as u32)
}

/// The projective/preparation channel of one op, as simulator ops.
pub fn op_semantics(op: &GridInstr, cols: usize) -> SimOp {
    let q = |c: Coord| qubit_at(cols, c);
    match op.kind {
        IsaKind::PrepZero => SimOp::Prep { q: q(op.cells[0]), state: PrepState::Zero },
        IsaKind::PrepPlus => SimOp::Prep { q: q(op.cells[0]), state: PrepState::Plus },
        IsaKind::PrepMagic(s) => SimOp::Prep { q: q(op.cells[0]), state: s },
        IsaKind::MeasZ => SimOp::MeasOut {
            q: q(op.cells[0]),
            basis: Pauli::Z,
            out: op.out.expect("measurement without output bit"),
            cond: op.cond.clone(),
        },
        IsaKind::MeasX => SimOp::MeasOut {
            q: q(op.cells[0]),
            basis: Pauli::X,
            out: op.out.expect("measurement without output bit"),
            cond: op.cond.clone(),
        },
        IsaKind::MeasZZ | IsaKind::MeasXX | IsaKind::MeasXZ => {
            let (pa, pb) = match op.kind {
                IsaKind::MeasZZ => (Pauli::Z, Pauli::Z),
                IsaKind::MeasXX => (Pauli::X, Pauli::X),
                _ => (Pauli::X, Pauli::Z),
            };
            SimOp::MeasPauli {
                targets: vec![(q(op.cells[0]), pa), (q(op.cells[1]), pb)],
                out: op.out.expect("measurement without output bit"),
                cond: op.cond.clone(),
            }
        }
    }
}

/// Lowers a program to simulator ops. Within a cycle, single-qubit
/// measurements run first (they retire qubits and keep entangled factors
/// small); co-scheduled ops act on disjoint cells so any intra-cycle order
/// realizes the same channel.
pub fn program_sim_ops(prog: &GridProgram) -> Vec<SimOp> {
    let mut order: Vec<&GridInstr> = prog.instrs.iter().collect();
    let rank = |k: IsaKind| match k {
        IsaKind::MeasZ | IsaKind::MeasX => 0,
        IsaKind::PrepZero | IsaKind::PrepPlus | IsaKind::PrepMagic(_) => 1,
        _ => 2,
    };
    order.sort_by_key(|i| (i.cycle, rank(i.kind), i.cells[0]));
    order.iter().map(|i| op_semantics(i, prog.cols)).collect()
}

/// Deterministic text trace: one line per op, ordered by cycle, row, column.
pub fn trace(prog: &GridProgram) -> String {
    let mut order: Vec<&GridInstr> = prog.instrs.iter().collect();
    order.sort_by_key(|i| (i.cycle, i.cells[0]));
    let mut s = String::new();
    for op in order {
        let cells = op
            .cells
            .iter()
            .map(|(r, c)| format!("({r},{c})"))
            .collect::<Vec<_>>()
            .join(";");
        let _ = write!(s, "C{} {} {}", op.cycle, op.kind.token(), cells);
        if let Some(b) = op.out {
            let _ = write!(s, " -> b{}", b.0);
        }
        if let Some(cond) = &op.cond {
            let bits = cond.bits.iter().map(|b| format!("b{}", b.0)).collect::<Vec<_>>();
            let _ = write!(s, " IF {}{}", if cond.value { "" } else { "!" }, bits.join("^"));
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, BranchPolicy, QState};

    #[test]
    fn prep_on_data_rejected() {
        let mut g = Grid::with_data(2, 2, &[(0, 0)]);
        let err = check_legal(&mut g, &[GridInstr::op(0, IsaKind::PrepPlus, vec![(0, 0)])])
            .unwrap_err();
        assert_eq!(err[0].rule, "expects-blank");
    }

    #[test]
    fn zz_axis_rule() {
        let mut g = Grid::with_data(2, 2, &[(0, 0), (0, 1), (1, 0)]);
        let err = check_legal(
            &mut g,
            &[GridInstr::meas(0, IsaKind::MeasZZ, vec![(0, 0), (0, 1)], BitId(0))],
        )
        .unwrap_err();
        assert_eq!(err[0].rule, "vertical-only");
        assert!(check_legal(
            &mut g,
            &[GridInstr::meas(0, IsaKind::MeasZZ, vec![(0, 0), (1, 0)], BitId(0))]
        )
        .is_ok());
    }

    #[test]
    fn measx_leaves_blank() {
        let mut g = Grid::with_data(1, 1, &[(0, 0)]);
        check_legal(&mut g, &[GridInstr::meas(0, IsaKind::MeasX, vec![(0, 0)], BitId(0))])
            .unwrap();
        assert_eq!(g.get((0, 0)), CellState::Blank);
    }

    #[test]
    fn xz_blocking() {
        // XZ on (0,0),(1,1) blocks (0,1) and (1,0)
        let mut g = Grid::with_data(2, 2, &[(0, 0), (1, 1), (0, 1)]);
        let err = check_legal(
            &mut g,
            &[GridInstr::meas(0, IsaKind::MeasXZ, vec![(0, 0), (1, 1)], BitId(0))],
        )
        .unwrap_err();
        assert_eq!(err[0].rule, "blocked-neighbor");

        let mut g = Grid::with_data(2, 2, &[(0, 0), (1, 1)]);
        let err = check_legal(
            &mut g,
            &[
                GridInstr::meas(0, IsaKind::MeasXZ, vec![(0, 0), (1, 1)], BitId(0)),
                GridInstr::op(0, IsaKind::PrepPlus, vec![(0, 1)]),
            ],
        )
        .unwrap_err();
        assert!(err.iter().any(|v| v.rule == "blocked-neighbor"));
    }

    #[test]
    fn double_claim_and_complementary_exception() {
        let mut g = Grid::with_data(2, 1, &[(0, 0), (1, 0)]);
        let err = check_legal(
            &mut g,
            &[
                GridInstr::meas(0, IsaKind::MeasZ, vec![(0, 0)], BitId(1)),
                GridInstr::meas(0, IsaKind::MeasZZ, vec![(0, 0), (1, 0)], BitId(2)),
            ],
        )
        .unwrap_err();
        assert!(err.iter().any(|v| v.rule == "double-claim"));

        let mut g = Grid::with_data(1, 1, &[(0, 0)]);
        let mut a = GridInstr::meas(0, IsaKind::MeasZ, vec![(0, 0)], BitId(1));
        a.cond = Some(Cond::bit(BitId(0)));
        let mut b = GridInstr::meas(0, IsaKind::MeasX, vec![(0, 0)], BitId(2));
        b.cond = Some(Cond::bit_clear(BitId(0)));
        check_legal(&mut g, &[a, b]).unwrap();
    }

    #[test]
    fn durations() {
        let c = CostModel::default();
        assert_eq!(op_duration(IsaKind::PrepPlus, &c), 1);
        assert_eq!(op_duration(IsaKind::MeasXZ, &c), 3);
        assert_eq!(op_duration(IsaKind::MeasZZ, &c), 2);
        assert_eq!(op_duration(IsaKind::MeasX, &c), 0);
        assert_eq!(op_duration(IsaKind::PrepMagic(PrepState::MagicT), &c), 5);
    }

    #[test]
    fn semantics_zz_eigenstate() {
        let prog = GridProgram {
            rows: 2,
            cols: 1,
            instrs: vec![
                GridInstr::op(0, IsaKind::PrepZero, vec![(0, 0)]),
                GridInstr::op(0, IsaKind::PrepZero, vec![(1, 0)]),
                GridInstr::meas(1, IsaKind::MeasZZ, vec![(0, 0), (1, 0)], BitId(0)),
            ],
        };
        let br = run(&program_sim_ops(&prog), &QState::new(), &BranchPolicy::All).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(br[0].outcomes, vec![(BitId(0), false)]);
    }

    #[test]
    fn semantics_xx_on_zz_basis_uniform() {
        let prog = GridProgram {
            rows: 1,
            cols: 2,
            instrs: vec![
                GridInstr::op(0, IsaKind::PrepZero, vec![(0, 0)]),
                GridInstr::op(0, IsaKind::PrepZero, vec![(0, 1)]),
                GridInstr::meas(1, IsaKind::MeasXX, vec![(0, 0), (0, 1)], BitId(0)),
            ],
        };
        // statistics over 1000 sampled shots: roughly uniform
        let ops = program_sim_ops(&prog);
        let mut ones = 0u32;
        for shot in 0..1000 {
            let br =
                run(&ops, &QState::new(), &BranchPolicy::Sampled { seed: shot, shots: 1 }).unwrap();
            if br[0].outcomes[0].1 {
                ones += 1;
            }
        }
        // chi-squared with 1 dof at p=0.001 is 10.83
        let chi2 = ((ones as f64 - 500.0).powi(2)) / 500.0 * 2.0;
        assert!(chi2 < 10.83, "chi2={chi2} ones={ones}");
        // branch-complete: postselected states are XX eigenstates
        let br = run(&ops, &QState::new(), &BranchPolicy::All).unwrap();
        assert_eq!(br.len(), 2);
        for b in &br {
            let v = b.state.statevector(&[QubitId(0), QubitId(1)]).unwrap();
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let sign = if b.outcomes[0].1 { -1.0 } else { 1.0 };
            assert!((v[0].re - r).abs() < 1e-9);
            assert!((v[3].re - sign * r).abs() < 1e-9);
        }
    }

    #[test]
    fn prep_meas_round_trip() {
        let prog = GridProgram {
            rows: 1,
            cols: 1,
            instrs: vec![
                GridInstr::op(0, IsaKind::PrepZero, vec![(0, 0)]),
                GridInstr::meas(1, IsaKind::MeasZ, vec![(0, 0)], BitId(0)),
            ],
        };
        let br = run(&program_sim_ops(&prog), &QState::new(), &BranchPolicy::All).unwrap();
        assert_eq!(br.len(), 1);
        assert_eq!(br[0].outcomes, vec![(BitId(0), false)]);
        let c = CostModel::default();
        check_program(&Grid::blank(1, 1), &prog, &c).unwrap();
    }

    #[test]
    fn trace_format() {
        let prog = GridProgram {
            rows: 2,
            cols: 2,
            instrs: vec![
                GridInstr::meas(1, IsaKind::MeasZZ, vec![(0, 1), (1, 1)], BitId(3)),
                GridInstr::op(0, IsaKind::PrepPlus, vec![(0, 0)]),
            ],
        };
        assert_eq!(trace(&prog), "C0 PREPPLUS (0,0)\nC1 MEASZZ (0,1);(1,1) -> b3\n");
    }
}
