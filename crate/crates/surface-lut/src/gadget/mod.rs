//! Constant-depth surgery gadgets: each compiler returns a legal grid
//! schedule plus a classical correction plan (conditional Paulis keyed on
//! measurement-bit parities), parameterized by grid paths and regions.

pub mod bell;
pub mod cat;
pub mod ccix;
pub mod cnot;
pub mod cz;
pub mod switch;
pub mod remote;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::cost::CostModel;
use crate::isa::{op_duration, Coord, GridInstr, IsaKind};
use crate::sim::{BitId, Cond, GateKind, Pauli, QubitId, SimOp};
use crate::verify::ParityExpr;

#[derive(Debug, Error)]
pub enum GadgetError {
    #[error("cells {0:?} and {1:?} are not adjacent")]
    NonAdjacent(Coord, Coord),
    #[error("axis constraint violated at {0:?}: {1}")]
    AxisViolation(Coord, &'static str),
    #[error("bad path: {0}")]
    BadPath(String),
    #[error("mask length {0} does not match target count {1}")]
    MaskMismatch(usize, usize),
    #[error("hole set contains the head qubit {0:?}")]
    HoleAtHead(Coord),
    #[error("region too small: {0}")]
    RegionTooSmall(String),
    #[error("resource cell {0:?} is not prepared")]
    MissingResource(Coord),
}

/// Fresh measurement-bit allocator shared across composed gadgets.
#[derive(Clone, Debug)]
pub struct BitAlloc {
    next: u32,
}

impl BitAlloc {
    pub fn new(start: u32) -> Self {
        BitAlloc { next: start }
    }
    pub fn fresh(&mut self) -> BitId {
        let b = BitId(self.next);
        self.next += 1;
        b
    }
}

/// One deferred Pauli correction: applied when the parity condition fires,
/// anchored after the instructions of `cycle`.
#[derive(Clone, Debug)]
pub struct Correction {
    pub pauli: Pauli,
    pub cell: Coord,
    pub cond: Cond,
    pub cycle: u64,
}

/// A compiled gadget: grid instructions plus the correction plan, and for
/// measurement gadgets the parity expression of the reported outcome.
#[derive(Clone, Debug, Default)]
pub struct Schedule {
    pub instrs: Vec<GridInstr>,
    pub corrections: Vec<Correction>,
    pub outcome: Option<ParityExpr>,
}

impl Schedule {
    pub fn push(&mut self, i: GridInstr) {
        self.instrs.push(i);
    }

    pub fn correct(&mut self, pauli: Pauli, cell: Coord, cond: Cond, cycle: u64) {
        self.corrections.push(Correction { pauli, cell, cond, cycle });
    }

    pub fn merge(&mut self, other: Schedule) {
        self.instrs.extend(other.instrs);
        self.corrections.extend(other.corrections);
        if other.outcome.is_some() {
            self.outcome = other.outcome;
        }
    }

    /// First cycle after every instruction has finished.
    pub fn end_cycle(&self, cost: &CostModel) -> u64 {
        self.instrs
            .iter()
            .map(|i| i.cycle + op_duration(i.kind, cost))
            .max()
            .unwrap_or(0)
    }

    /// Number of distinct start cycles among joint (two-cell) measurements —
    /// the depth-relevant layer count; preparations and single-qubit
    /// retirements are free.
    pub fn op_layers(&self) -> usize {
        let mut cycles: Vec<u64> = self
            .instrs
            .iter()
            .filter(|i| i.cells.len() == 2)
            .map(|i| i.cycle)
            .collect();
        cycles.sort_unstable();
        cycles.dedup();
        cycles.len()
    }

    /// All cells the schedule touches.
    pub fn cells(&self) -> Vec<Coord> {
        let mut v: Vec<Coord> = self.instrs.iter().flat_map(|i| i.cells.clone()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Lowers to simulator ops in a cell-respecting order chosen to keep
    /// entangled factors small: per-cell op order is preserved (ops on
    /// disjoint cells commute as channels), retirement measurements are
    /// hoisted as early as their cell history and condition bits allow, and
    /// corrections run after every same-cell instruction of an earlier cycle
    /// and before every same-cell instruction of a later-or-equal cycle.
    pub fn sim_ops(&self, cols: usize) -> Vec<SimOp> {
        // nodes: instructions then corrections; edges: per-cell program
        // order (corrections sort before instructions sharing their cycle)
        // and bit producer -> consumer
        let ni = self.instrs.len();
        let n = ni + self.corrections.len();
        let key = |i: usize| -> (u64, u8, Vec<Coord>) {
            if i < ni {
                (self.instrs[i].cycle, 1, self.instrs[i].cells.clone())
            } else {
                let c = &self.corrections[i - ni];
                (c.cycle, 0, vec![c.cell])
            }
        };
        let cells_of = |i: usize| -> Vec<Coord> {
            if i < ni {
                self.instrs[i].cells.clone()
            } else {
                vec![self.corrections[i - ni].cell]
            }
        };
        let cond_bits = |i: usize| -> Vec<BitId> {
            if i < ni {
                self.instrs[i].cond.as_ref().map(|c| c.bits.clone()).unwrap_or_default()
            } else {
                self.corrections[i - ni].cond.bits.clone()
            }
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| key(i));
        let mut last_on_cell: HashMap<Coord, usize> = HashMap::new();
        let mut bit_src: HashMap<BitId, usize> = HashMap::new();
        for i in 0..ni {
            if let Some(b) = self.instrs[i].out {
                bit_src.insert(b, i);
            }
        }
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &i in &order {
            for c in cells_of(i) {
                if let Some(&p) = last_on_cell.get(&c) {
                    preds[i].push(p);
                }
                last_on_cell.insert(c, i);
            }
            for b in cond_bits(i) {
                if let Some(&p) = bit_src.get(&b) {
                    preds[i].push(p);
                }
            }
        }
        let mut indeg: Vec<usize> = vec![0; n];
        let mut succs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            preds[i].sort_unstable();
            preds[i].dedup();
            preds[i].retain(|&p| p != i);
            indeg[i] = preds[i].len();
            for &p in &preds[i] {
                succs[p].push(i);
            }
        }
        // greedy topological order: prefer corrections and single-qubit
        // measurements (they shrink entangled factors), then preps, then
        // joint measurements; tie-break by schedule position
        let rank = |i: usize| -> u8 {
            if i >= ni {
                return 0;
            }
            match self.instrs[i].kind {
                IsaKind::MeasZ | IsaKind::MeasX => 0,
                IsaKind::PrepZero | IsaKind::PrepPlus | IsaKind::PrepMagic(_) => 1,
                _ => 2,
            }
        };
        let pos_of: HashMap<usize, usize> =
            order.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut out = Vec::with_capacity(n);
        let mut done = vec![false; n];
        while !ready.is_empty() {
            ready.sort_by_key(|&i| (rank(i), pos_of[&i]));
            let i = ready.remove(0);
            done[i] = true;
            out.push(i);
            for &s in &succs[i] {
                indeg[s] -= 1;
                if indeg[s] == 0 && !done[s] {
                    ready.push(s);
                }
            }
        }
        debug_assert_eq!(out.len(), n, "cyclic schedule dependencies");
        out.iter()
            .map(|&i| {
                if i < ni {
                    crate::isa::op_semantics(&self.instrs[i], cols)
                } else {
                    let c = &self.corrections[i - ni];
                    SimOp::Gate {
                        kind: match c.pauli {
                            Pauli::X => GateKind::X,
                            Pauli::Y => GateKind::Y,
                            Pauli::Z => GateKind::Z,
                        },
                        qs: vec![crate::isa::qubit_at(cols, c.cell)],
                        cond: Some(c.cond.clone()),
                    }
                }
            })
            .collect()
    }
}

pub fn vadj(a: Coord, b: Coord) -> bool {
    a.1 == b.1 && a.0.abs_diff(b.0) == 1
}

pub fn hadj(a: Coord, b: Coord) -> bool {
    a.0 == b.0 && a.1.abs_diff(b.1) == 1
}

pub fn diag(a: Coord, b: Coord) -> bool {
    a.0.abs_diff(b.0) == 1 && a.1.abs_diff(b.1) == 1
}

pub fn adjacent(a: Coord, b: Coord) -> bool {
    vadj(a, b) || hadj(a, b)
}

/// An ordered path of grid cells; consecutive cells are adjacent along
/// either axis (one diagonal step is permitted only where a gadget
/// explicitly allows an XZ square).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Path {
    pub cells: Vec<Coord>,
}

impl Path {
    pub fn new(cells: Vec<Coord>) -> Result<Self, GadgetError> {
        Self::with_diag_steps(cells, 0)
    }

    pub fn with_diag_steps(cells: Vec<Coord>, max_diag: usize) -> Result<Self, GadgetError> {
        let mut seen = cells.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != cells.len() {
            return Err(GadgetError::BadPath("repeated cell".into()));
        }
        let mut diags = 0;
        for w in cells.windows(2) {
            if adjacent(w[0], w[1]) {
                continue;
            }
            if diag(w[0], w[1]) {
                diags += 1;
                continue;
            }
            return Err(GadgetError::NonAdjacent(w[0], w[1]));
        }
        if diags > max_diag {
            return Err(GadgetError::BadPath(format!(
                "{diags} diagonal steps, at most {max_diag} allowed"
            )));
        }
        Ok(Path { cells })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Helper shared by tests and the scheduler: qubit ids of a cell list.
pub fn qubits_of(cols: usize, cells: &[Coord]) -> Vec<QubitId> {
    cells.iter().map(|&c| crate::isa::qubit_at(cols, c)).collect()
}

pub(crate) fn parity_cond(bits: Vec<BitId>, value: bool) -> Cond {
    Cond { bits, value }
}
