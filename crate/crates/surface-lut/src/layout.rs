//! Floor planning: places one controlled-lookup instance on the grid as an
//! input patch square, an output column with its fanout snake, doubly-
//! controlled-iX slots with switch boards and routing aprons, delayed-choice
//! CZ slots, and a phase-state delivery strip. The planned cell total equals
//! the closed-form logical-qubit count.

use serde::Serialize;
use thiserror::Error;

use crate::cost::{input_cols, input_rows, qubits_ctl};
use crate::gadget::ccix::{CcixRegion, CCIX_COLS, CCIX_ROWS};
use crate::isa::Coord;

/// Row of the first input-region cell; everything above is the gadget band
/// (rows 0..=11) plus one routing corridor row.
pub const INPUT_ROW: usize = 13;

/// Horizontal pitch between gadget slots: 6 slot columns plus the apron.
const SLOT_PITCH: usize = 8;

#[derive(Clone, Debug, Serialize)]
pub struct CcixSlot {
    #[serde(skip)]
    pub region: CcixRegion,
    pub origin: Coord,
    /// 3x3 switch-board cells below the slot.
    pub board: Vec<Coord>,
    /// Routing-apron cells owned by the slot.
    pub apron: Vec<Coord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridLayout {
    pub k: usize,
    pub m: usize,
    pub n_ccix: usize,
    pub n_cz: usize,
    pub pad: usize,
    pub rows: usize,
    pub cols: usize,
    /// Every input-region cell; data homes sit at the even-even corners.
    pub input_region: Vec<Coord>,
    /// Patch data cells in assignment order (top patch row last, since it
    /// doubles as the preferred routing corridor).
    pub patch_cells: Vec<Coord>,
    pub output_targets: Vec<Coord>,
    pub output_snake: Vec<Coord>,
    pub pad_cells: Vec<Coord>,
    pub ccix_slots: Vec<CcixSlot>,
    /// Top-left corner of each 2x2 delayed-choice CZ slot.
    pub cz_slots: Vec<Coord>,
    pub s_strip: Vec<Coord>,
}

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("k must be at least 1")]
    BadK,
    #[error("m must be at least 1")]
    BadM,
    #[error("planned grid {0}x{1} exceeds the {2}-cell capacity")]
    Capacity(usize, usize, usize),
}

/// Default capacity guard for planned grids.
pub const MAX_GRID_CELLS: usize = 10_000;

pub fn plan_layout(
    k: usize,
    m: usize,
    n_ccix: usize,
    n_cz: usize,
    pad: usize,
) -> Result<GridLayout, LayoutError> {
    if k < 1 {
        return Err(LayoutError::BadK);
    }
    if m < 1 {
        return Err(LayoutError::BadM);
    }
    let n_ccix = n_ccix.max(1).min(k.max(1));
    let (c, r) = (input_cols(k), input_rows(k));
    let (in_rows, in_cols) = (2 * (r + 2), 2 * (c + 2));

    let mut slots = Vec::with_capacity(n_ccix);
    for i in 0..n_ccix {
        let sc = i * SLOT_PITCH;
        let region = CcixRegion::new((0, sc));
        let board: Vec<Coord> =
            (9..12).flat_map(|rr| (sc..sc + 3).map(move |cc| (rr, cc))).collect();
        // the first slot cedes 9 apron cells to the delivery strip
        let mut apron: Vec<Coord> =
            (0..9).flat_map(|rr| [(rr, sc + 6), (rr, sc + 7)]).collect();
        if i > 0 {
            apron.extend((9..12).flat_map(|rr| (sc + 3..sc + 6).map(move |cc| (rr, cc))));
        }
        slots.push(CcixSlot { region, origin: (0, sc), board, apron });
    }

    let input_region: Vec<Coord> = (0..in_rows)
        .flat_map(|dr| (0..in_cols).map(move |dc| (INPUT_ROW + dr, dc)))
        .collect();
    // data homes row-major, starting below the top patch row
    let mut patch_cells: Vec<Coord> = Vec::new();
    for pr in 1..r + 2 {
        for pc in 0..c + 2 {
            patch_cells.push((INPUT_ROW + 2 * pr, 2 * pc));
        }
    }
    for pc in 0..c + 2 {
        patch_cells.push((INPUT_ROW, 2 * pc));
    }

    let snake_col = in_cols + 1;
    let output_snake: Vec<Coord> = (0..m).map(|j| (INPUT_ROW + j, snake_col)).collect();
    let output_targets: Vec<Coord> = (0..m).map(|j| (INPUT_ROW + j, snake_col + 1)).collect();
    let s_strip: Vec<Coord> = (0..9).map(|j| (INPUT_ROW + j, in_cols)).collect();
    let pad_cells: Vec<Coord> = (0..pad).map(|j| (INPUT_ROW + j, snake_col + 2)).collect();

    let cz_row = INPUT_ROW + in_rows + 2;
    let cz_slots: Vec<Coord> = (0..n_cz).map(|j| (cz_row, 1 + 3 * j)).collect();

    let rows = (cz_row + 4)
        .max(INPUT_ROW + in_rows + 1)
        .max(INPUT_ROW + 9 + 1)
        .max(INPUT_ROW + m + 1)
        .max(INPUT_ROW + pad + 1);
    let cols = (n_ccix * SLOT_PITCH).max(snake_col + 3).max(3 * n_cz + 1) + 1;
    if rows * cols > MAX_GRID_CELLS {
        return Err(LayoutError::Capacity(rows, cols, MAX_GRID_CELLS));
    }

    Ok(GridLayout {
        k,
        m,
        n_ccix,
        n_cz,
        pad,
        rows,
        cols,
        input_region,
        patch_cells,
        output_targets,
        output_snake,
        pad_cells,
        ccix_slots: slots,
        cz_slots,
        s_strip,
    })
}

impl GridLayout {
    /// Total planned cells; matches the closed-form qubit count.
    pub fn cell_total(&self) -> u64 {
        let slot_cells: usize = self
            .ccix_slots
            .iter()
            .map(|s| CCIX_ROWS * CCIX_COLS + s.board.len() + s.apron.len())
            .sum();
        (self.input_region.len()
            + self.output_targets.len()
            + self.output_snake.len()
            + self.pad_cells.len()
            + slot_cells
            + self.s_strip.len()
            + 4 * self.cz_slots.len()) as u64
    }

    /// Cells that routing must never claim: slot interiors, boards, CZ
    /// slots, the strip, and the output column.
    pub fn reserved(&self) -> Vec<Coord> {
        let mut v = Vec::new();
        for s in &self.ccix_slots {
            v.extend(s.region.cells());
            v.extend(s.board.iter().copied());
        }
        for &(r, c) in &self.cz_slots {
            v.extend([(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]);
        }
        v.extend(self.s_strip.iter().copied());
        v.extend(self.output_snake.iter().copied());
        v.extend(self.output_targets.iter().copied());
        v
    }

    pub fn assert_disjoint(&self) {
        let mut seen = std::collections::BTreeSet::new();
        let mut claim = |cells: &[Coord]| {
            for &c in cells {
                assert!(seen.insert(c), "layout regions overlap at {c:?}");
            }
        };
        claim(&self.input_region);
        claim(&self.output_targets);
        claim(&self.output_snake);
        claim(&self.pad_cells);
        for s in &self.ccix_slots {
            claim(&s.region.cells());
            claim(&s.board);
            claim(&s.apron);
        }
        for &(r, c) in &self.cz_slots {
            claim(&[(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)]);
        }
        claim(&self.s_strip);
    }
}

/// Area accounting must reproduce the closed-form count for any shape.
pub fn check_area(layout: &GridLayout) -> bool {
    layout.cell_total()
        == qubits_ctl(layout.k, layout.m, layout.ccix_slots.len(), layout.cz_slots.len(), layout.pad)
}
