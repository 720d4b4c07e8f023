//! Lowers a layered logical circuit onto a planned grid layout, producing a
//! legality-checked, cycle-stamped grid program. Gate operands live on fixed
//! home cells; remote interactions are routed on demand over blank cells by
//! a breadth-first router that respects the seam-axis parity rules of the
//! chain constructions. Two barrier modes are offered: `Strict` starts each
//! layer only after every earlier layer has finished, `Free` starts every
//! gate as soon as its own operands, bits, and resources allow.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::circuit::{Gate, LogicalCircuit, MBit, Wire};
use crate::cost::CostModel;
use crate::gadget::ccix::{ccix_gadget, seed_sx, CcixOperands, CcixOptions};
use crate::gadget::cnot::{cxor, prep_s, remote_cnot};
use crate::gadget::cz::{cz_slot_prep, CzSlot};
use crate::gadget::remote::{remote_pauli_meas, ChainForm, JointBasis};
use crate::gadget::{BitAlloc, GadgetError, Path, Schedule};
use crate::isa::{op_duration, Coord, GridInstr, GridProgram, IsaKind};
use crate::layout::{GridLayout, INPUT_ROW};
use crate::sim::{BitId, Cond, Pauli, PrepState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Barrier {
    /// A layer starts only after every previous layer has fully finished.
    Strict,
    /// Pure dataflow: each gate starts as soon as its dependencies allow.
    Free,
}

pub struct SchedOut {
    pub sched: Schedule,
    pub program: GridProgram,
    /// Cycles from the end of the initialization prologue to the last
    /// busy cycle.
    pub measured_cycles: u64,
    /// Length of the initialization prologue (resource seeding and the
    /// first gadget preparation), not counted in `measured_cycles`.
    pub init_cycles: u64,
    /// Span of each core layer.
    pub per_layer_cycles: Vec<u64>,
    /// |T> preparations per cycle.
    pub t_consumption: BTreeMap<u64, u32>,
}

#[derive(Debug, Error)]
pub enum SchedError {
    #[error("circuit has no layer assignment")]
    NoLayers,
    #[error("layer {layer}: no blank route {detail}")]
    Route { layer: usize, detail: String },
    #[error("layout too small: {0}")]
    Capacity(String),
    #[error("unknown measurement bit b{0}")]
    UnknownBit(MBit),
    #[error(transparent)]
    Gadget(#[from] GadgetError),
}

/// First cycle at which every instruction and correction of `s` is done,
/// counting zero-duration measurements as busy for one cycle.
pub fn busy_end(s: &Schedule, cost: &CostModel) -> u64 {
    let i = s
        .instrs
        .iter()
        .map(|i| i.cycle + op_duration(i.kind, cost).max(1))
        .max()
        .unwrap_or(0);
    let c = s.corrections.iter().map(|c| c.cycle).max().unwrap_or(0);
    i.max(c)
}

/// Peak windowed rate of |T> preparations: max over start cycles of
/// (preps within `window` cycles) / window.
pub fn t_profile(out: &SchedOut, window: u64) -> f64 {
    assert!(window >= 1);
    let cycles: Vec<u64> = out.t_consumption.keys().copied().collect();
    let mut peak = 0u32;
    for &s in &cycles {
        let in_window: u32 = out
            .t_consumption
            .range(s..s + window)
            .map(|(_, &n)| n)
            .sum();
        peak = peak.max(in_window);
    }
    peak as f64 / window as f64
}

/// Attaches `on` to every instruction of a compiled chain, making the whole
/// measurement conditional. Sound because every internal correction of a
/// chain fires on an even/odd parity of its own bits with value `true`, so
/// the skipped branch (all bits clear) leaves them silent.
fn gate_on(s: &mut Schedule, on: &Cond) {
    if on.bits.is_empty() && !on.value {
        return; // already unconditional
    }
    for i in s.instrs.iter_mut() {
        debug_assert!(i.cond.is_none(), "chain instructions carry no conditions");
        i.cond = Some(on.clone());
    }
}

struct Engine<'a> {
    cost: &'a CostModel,
    lay: &'a GridLayout,
    circ: &'a LogicalCircuit,
    bits: BitAlloc,
    sched: Schedule,
    /// Per-cell earliest reuse cycle (monotone claims).
    free: BTreeMap<Coord, u64>,
    /// Cells never available to the router.
    blocked: BTreeSet<Coord>,
    homes: BTreeMap<Wire, Coord>,
    /// Circuit bit -> (grid bit, cycle from which it may be consumed).
    mb: BTreeMap<MBit, (BitId, u64)>,
    /// Gadget slot round-robin and per-slot remaining uses.
    and_seq: Vec<usize>,
    and_pos: usize,
    slot_uses: Vec<usize>,
    slot_free: Vec<u64>,
    cz_state: Vec<Option<(CzSlot, u64)>>,
    cz_rr: usize,
    cz_remaining: usize,
    strip_rr: usize,
    prep_off: u64,
    last_p1: i64,
    max_end: u64,
}

const ROUTE_TRIES: u64 = 600;
const STEP_COST: u64 = 16;
const TURN_COST: u64 = 1;

impl<'a> Engine<'a> {
    fn new(
        cost: &'a CostModel,
        lay: &'a GridLayout,
        circ: &'a LogicalCircuit,
    ) -> Result<Self, SchedError> {
        let homes = wire_homes(circ, lay)?;

        let mut blocked: BTreeSet<Coord> = lay.reserved().into_iter().collect();
        blocked.extend(homes.values().copied());
        blocked.extend(lay.pad_cells.iter().copied());

        let n_and = circ
            .all_gates()
            .filter(|g| matches!(g, Gate::Ccix { .. }))
            .count();
        let n_slots = lay.ccix_slots.len();
        let and_seq: Vec<usize> = (0..n_and).map(|i| i % n_slots).collect();
        let mut slot_uses = vec![0usize; n_slots];
        for &s in &and_seq {
            slot_uses[s] += 1;
        }
        let cz_remaining = circ
            .all_gates()
            .filter(|g| matches!(g, Gate::Cz { .. }))
            .count();
        if cz_remaining > 0 && lay.cz_slots.is_empty() {
            return Err(SchedError::Capacity("no CZ slot planned".into()));
        }

        let prep_off = probe_prep_offset(cost);
        Ok(Engine {
            cost,
            lay,
            circ,
            bits: BitAlloc::new(0),
            sched: Schedule::default(),
            free: BTreeMap::new(),
            blocked,
            homes,
            mb: BTreeMap::new(),
            and_seq,
            and_pos: 0,
            slot_uses,
            slot_free: vec![0; n_slots],
            cz_state: vec![None; lay.cz_slots.len()],
            cz_rr: 0,
            cz_remaining,
            strip_rr: 0,
            prep_off,
            last_p1: i64::MIN / 2,
            max_end: 0,
        })
    }

    fn home(&self, w: Wire) -> Coord {
        self.homes[&w]
    }

    fn cell_free(&self, c: Coord) -> u64 {
        self.free.get(&c).copied().unwrap_or(0)
    }

    fn claim(&mut self, c: Coord, until: u64) {
        let e = self.free.entry(c).or_insert(0);
        *e = (*e).max(until);
    }

    fn commit(&mut self, s: Schedule) {
        // each cell is busy only until its own last involvement, so later
        // gates can reuse a control or a retired chain cell while the rest
        // of the gadget is still finishing
        for i in &s.instrs {
            let e = i.cycle + op_duration(i.kind, self.cost).max(1);
            for &c in &i.cells {
                self.claim(c, e);
            }
        }
        for corr in &s.corrections {
            self.claim(corr.cell, corr.cycle);
        }
        self.max_end = self.max_end.max(busy_end(&s, self.cost));
        self.sched.merge(s);
    }

    fn routable(&self, c: Coord, extra: &BTreeSet<Coord>, t: u64) -> bool {
        c.0 < self.lay.rows
            && c.1 < self.lay.cols
            && !self.blocked.contains(&c)
            && !extra.contains(&c)
            && self.cell_free(c) <= t
    }

    /// Cheapest-path search for a chain whose seams must sit on specific
    /// link parities. `req_vert(p)` forces link `p` vertical; `accept(p,
    /// vert)` gates the final move onto `b`. Straight runs are preferred
    /// over turns so chains hug corridors instead of staircasing across
    /// the grid and walling one another in. Returns the full path
    /// including endpoints.
    fn route_parity(
        &self,
        a: Coord,
        b: Coord,
        t: u64,
        extra: &BTreeSet<Coord>,
        start_cells: &[(Coord, usize, u8)],
        req_vert: &dyn Fn(usize) -> bool,
        accept: &dyn Fn(usize, bool) -> bool,
    ) -> Option<Vec<Coord>> {
        // state: (cell, parity of the next link index, incoming direction);
        // the special first links are handed in via `start_cells`
        type Key = (Coord, usize, u8);
        let mut best: BTreeMap<Key, u64> = BTreeMap::new();
        let mut parent: BTreeMap<Key, Key> = BTreeMap::new();
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(u64, Key)>> =
            std::collections::BinaryHeap::new();
        for &(c, p, d) in start_cells {
            let key = (c, p % 2, d);
            best.insert(key, 0);
            parent.insert(key, key);
            heap.push(std::cmp::Reverse((0, key)));
        }
        let mut goal: Option<(u64, Key)> = None;
        while let Some(std::cmp::Reverse((cost, key))) = heap.pop() {
            if goal.is_some_and(|(gc, _)| cost >= gc) {
                break;
            }
            if best.get(&key).is_some_and(|&bc| cost > bc) {
                continue;
            }
            let (c, p, d) = key;
            let neighbors = [
                ((c.0.wrapping_sub(1), c.1), 0u8),
                ((c.0, c.1.wrapping_sub(1)), 1u8),
                ((c.0 + 1, c.1), 2u8),
                ((c.0, c.1 + 1), 3u8),
            ];
            for (n, nd) in neighbors {
                let is_vert = nd % 2 == 0;
                if req_vert(p) && !is_vert {
                    continue;
                }
                let step = STEP_COST + if nd == d { 0 } else { TURN_COST };
                if n == b {
                    if accept(p, is_vert) && goal.is_none_or(|(gc, _)| cost + step < gc) {
                        goal = Some((cost + step, key));
                    }
                    continue;
                }
                if !self.routable(n, extra, t) {
                    continue;
                }
                let nk = (n, (p + 1) % 2, nd);
                let nc = cost + step;
                if best.get(&nk).is_none_or(|&bc| nc < bc) {
                    best.insert(nk, nc);
                    parent.insert(nk, key);
                    heap.push(std::cmp::Reverse((nc, nk)));
                }
            }
        }
        let (_, mut key) = goal?;
        let mut path = vec![b];
        loop {
            path.push(key.0);
            let pk = *parent.get(&key)?;
            if pk == key {
                break;
            }
            key = pk;
        }
        path.push(a);
        path.reverse();
        // the parity/direction state space can in principle fold a path
        // back over itself; treat that as unroutable
        let mut seen = BTreeSet::new();
        if !path.iter().all(|&c| seen.insert(c)) {
            return None;
        }
        Some(path)
    }

    /// Route for a joint ZZ chain: the first link and every seam link must
    /// be vertical. Tried with an even interior (seams on even links) then
    /// an odd interior (seams on link 0 and odd links).
    fn route_zz(&self, a: Coord, b: Coord, t: u64, extra: &BTreeSet<Coord>) -> Option<Vec<Coord>> {
        for case in 0..2usize {
            let req = move |p: usize| p % 2 == case % 2;
            let accept = move |p: usize, _v: bool| p % 2 == case % 2;
            // link 0 is always a vertical seam
            if case == 0 && self.vadj_cells(a, b) {
                return Some(vec![a, b]);
            }
            let mut starts = Vec::new();
            for (n, d) in [((a.0.wrapping_sub(1), a.1), 0u8), ((a.0 + 1, a.1), 2u8)] {
                if self.routable(n, extra, t) {
                    starts.push((n, 1usize, d));
                }
            }
            if let Some(p) = self.route_parity(a, b, t, extra, &starts, &req, &accept) {
                return Some(p);
            }
        }
        None
    }

    fn vadj_cells(&self, a: Coord, b: Coord) -> bool {
        a.1 == b.1 && (a.0 + 1 == b.0 || b.0 + 1 == a.0)
    }

    /// Route for a joint XZ chain: leave `a` horizontally, take the
    /// diagonal transition immediately, then run a Z-region chain into `b`
    /// (entered vertically). Returns the path and the two transition-square
    /// corner cells, which must stay blank.
    fn route_xz(
        &self,
        a: Coord,
        b: Coord,
        t: u64,
        extra: &BTreeSet<Coord>,
    ) -> Option<(Vec<Coord>, [Coord; 2])> {
        let sides = [a.1.wrapping_sub(1), a.1 + 1];
        for h1c in sides {
            let h1 = (a.0, h1c);
            if !self.routable(h1, extra, t) {
                continue;
            }
            let away = 2 * h1c as i64 - a.1 as i64;
            if away < 0 {
                continue;
            }
            for c2r in [a.0.wrapping_sub(1), a.0 + 1] {
                let c2 = (c2r, away as usize);
                let corners = [(h1.0, c2.1), (c2.0, h1.1)];
                if !self.routable(c2, extra, t)
                    || !corners.iter().all(|&c| self.routable(c, extra, t))
                {
                    continue;
                }
                let mut extra2 = extra.clone();
                extra2.insert(h1);
                extra2.extend(corners);
                for case in 0..2usize {
                    let req = move |p: usize| p % 2 == 0;
                    let accept = move |p: usize, v: bool| {
                        if case == 0 {
                            p % 2 == 0
                        } else {
                            p % 2 == 1 && v
                        }
                    };
                    let d0 = if c2.0 > a.0 { 2u8 } else { 0u8 };
                    if let Some(mut path) = self.route_parity(
                        a,
                        b,
                        t,
                        &extra2,
                        &[(c2, 2usize, d0)],
                        &req,
                        &accept,
                    ) {
                        // reinsert the horizontal step the BFS did not see
                        path.insert(1, h1);
                        return Some((path, corners));
                    }
                }
            }
        }
        None
    }

    /// Unconstrained rectilinear route (for cat-state spines), preferring
    /// straight runs over turns.
    fn route_any(
        &self,
        starts: &[Coord],
        goal: Coord,
        t: u64,
        extra: &BTreeSet<Coord>,
    ) -> Option<Vec<Coord>> {
        type Key = (Coord, u8);
        let mut best: BTreeMap<Key, u64> = BTreeMap::new();
        let mut parent: BTreeMap<Key, Key> = BTreeMap::new();
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<(u64, Key)>> =
            std::collections::BinaryHeap::new();
        for &c in starts {
            if c == goal {
                return Some(vec![c]);
            }
            if !self.routable(c, extra, t) {
                continue;
            }
            let key = (c, 4u8);
            best.insert(key, 0);
            parent.insert(key, key);
            heap.push(std::cmp::Reverse((0, key)));
        }
        let mut hit: Option<(u64, Key)> = None;
        while let Some(std::cmp::Reverse((cost, key))) = heap.pop() {
            if hit.is_some_and(|(hc, _)| cost >= hc) {
                break;
            }
            if best.get(&key).is_some_and(|&bc| cost > bc) {
                continue;
            }
            let (c, d) = key;
            let neighbors = [
                ((c.0.wrapping_sub(1), c.1), 0u8),
                ((c.0, c.1.wrapping_sub(1)), 1u8),
                ((c.0 + 1, c.1), 2u8),
                ((c.0, c.1 + 1), 3u8),
            ];
            for (n, nd) in neighbors {
                let step = STEP_COST + if nd == d || d == 4 { 0 } else { TURN_COST };
                if n == goal {
                    if hit.is_none_or(|(hc, _)| cost + step < hc) {
                        hit = Some((cost + step, key));
                    }
                    continue;
                }
                if !self.routable(n, extra, t) {
                    continue;
                }
                let nk = (n, nd);
                let nc = cost + step;
                if best.get(&nk).is_none_or(|&bc| nc < bc) {
                    best.insert(nk, nc);
                    parent.insert(nk, key);
                    heap.push(std::cmp::Reverse((nc, nk)));
                }
            }
        }
        let (_, mut key) = hit?;
        let mut path = vec![goal];
        loop {
            path.push(key.0);
            let pk = *parent.get(&key)?;
            if pk == key {
                break;
            }
            key = pk;
        }
        path.reverse();
        let mut seen = BTreeSet::new();
        if !path.iter().all(|&c| seen.insert(c)) {
            return None;
        }
        Some(path)
    }

    fn bit_of(&self, b: MBit) -> Result<(BitId, u64), SchedError> {
        self.mb.get(&b).copied().ok_or(SchedError::UnknownBit(b))
    }

    fn cond_of(&self, c: Option<MBit>) -> Result<(Cond, u64), SchedError> {
        match c {
            None => Ok((Cond { bits: Vec::new(), value: false }, 0)),
            Some(b) => {
                let (bit, ready) = self.bit_of(b)?;
                Ok((Cond::bit(bit), ready))
            }
        }
    }

    fn emit(&mut self, g: &Gate, layer: usize, floor: u64) -> Result<(u64, u64), SchedError> {
        match *g {
            Gate::X { w, cond } => self.emit_pauli(Pauli::X, w, cond),
            Gate::Z { w, cond } => self.emit_pauli(Pauli::Z, w, cond),
            Gate::S { w } => self.emit_s(w, false, layer, floor),
            Gate::Sdg { w } => self.emit_s(w, true, layer, floor),
            Gate::Ccix { a, na, b, nb, out } => self.emit_ccix(a, na, b, nb, out, layer, floor),
            Gate::Cnot { ctrl, tgt } => self.emit_cnot(ctrl, tgt, layer, floor),
            Gate::Cxor { ctrl, neg, mask, s } => self.emit_cxor(ctrl, neg, mask, s, layer, floor),
            Gate::Cz { a, b, cond } => self.emit_cz(a, b, cond, layer, floor),
            Gate::MeasX { w, bit } => self.emit_meas(IsaKind::MeasX, w, bit, floor),
            Gate::MeasZ { w, bit } => self.emit_meas(IsaKind::MeasZ, w, bit, floor),
            Gate::And { .. } | Gate::AndDag { .. } => Err(SchedError::Capacity(
                "raw AND gates must be expanded before scheduling".into(),
            )),
        }
    }

    fn emit_pauli(&mut self, p: Pauli, w: Wire, cond: Option<MBit>) -> Result<(u64, u64), SchedError> {
        let (c, ready) = self.cond_of(cond)?;
        let cell = self.home(w);
        let t = self.cell_free(cell).max(ready);
        self.sched.correct(p, cell, c, t);
        self.claim(cell, t);
        self.max_end = self.max_end.max(t);
        Ok((t, t))
    }

    fn emit_meas(&mut self, kind: IsaKind, w: Wire, bit: MBit, floor: u64) -> Result<(u64, u64), SchedError> {
        let cell = self.home(w);
        let t = self.cell_free(cell).max(floor);
        let out = self.bits.fresh();
        self.sched.push(GridInstr::meas(t, kind, vec![cell], out));
        self.claim(cell, t + 1);
        self.mb.insert(bit, (out, t + 1));
        self.max_end = self.max_end.max(t + 1);
        Ok((t, t + 1))
    }

    fn emit_ccix(
        &mut self,
        a: Wire,
        na: bool,
        b: Wire,
        nb: bool,
        out: Wire,
        layer: usize,
        floor: u64,
    ) -> Result<(u64, u64), SchedError> {
        let si = self.and_seq[self.and_pos];
        self.and_pos += 1;
        self.slot_uses[si] -= 1;
        let last_use = self.slot_uses[si] == 0;
        let slot = &self.lay.ccix_slots[si];
        let (a0, b0, c0) = slot.region.interfaces();
        let (ha, hb, ho) = (self.home(a), self.home(b), self.home(out));

        // operand homes are only touched by the closing joint measurements,
        // a chain-preparation lead after the execute step begins
        let lead = self.cost.prep_pauli + self.cost.meas_xx_zz;
        let mut e1 = floor
            .max(self.cell_free(ha).saturating_sub(lead))
            .max(self.cell_free(hb).saturating_sub(lead))
            .max(self.cell_free(ho) + self.cost.prep_pauli)
            .max(self.slot_free[si] + self.prep_off)
            .max(self.prep_off)
            .max(
                (self.last_p1 + self.cost.tau_rzz as i64 + self.prep_off as i64).max(0) as u64,
            );
        // each interface is fed through a narrow corridor beside the
        // board, so the three chains can easily seal one another in; try
        // every routing order, guarding the landing cell under each
        // interface that is still to be routed
        // the four cells below each interface form its approach lane
        let lane = |c: Coord| -> Vec<Coord> {
            (1..=4).map(|d| (c.0 + d, c.1)).collect()
        };
        let lanes = [lane(b0), lane(c0), lane(a0)];
        let orders: [[usize; 3]; 6] =
            [[1, 2, 0], [1, 0, 2], [2, 1, 0], [2, 0, 1], [0, 1, 2], [0, 2, 1]];
        let mut routes = None;
        'search: for _ in 0..ROUTE_TRIES {
            // the two control interfaces are interchangeable, so try both
            // assignments of the control wires to them
            for swap in [false, true] {
                let (h1, h2) = if swap { (hb, ha) } else { (ha, hb) };
                for ord in orders {
                    let mut extra = BTreeSet::new();
                    let mut got: [Option<Vec<Coord>>; 3] = [None, None, None];
                    let mut ok = true;
                    for (pos, &ci) in ord.iter().enumerate() {
                        let mut guard = extra.clone();
                        for &cj in &ord[pos + 1..] {
                            guard.extend(lanes[cj].iter().copied());
                        }
                        let found = match ci {
                            0 => self.route_zz(h1, b0, e1, &guard),
                            1 => self.route_zz(h2, c0, e1, &guard),
                            _ => match self.route_xz(ho, a0, e1, &guard) {
                                Some((path, corners)) => {
                                    extra.extend(corners);
                                    Some(path)
                                }
                                None => None,
                            },
                        };
                        match found {
                            Some(path) => {
                                extra.extend(path.iter().skip(1).rev().skip(1));
                                got[ci] = Some(path);
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if ok {
                        let [g0, g1, g2] = got;
                        routes = Some((g0.unwrap(), g1.unwrap(), g2.unwrap(), extra, swap));
                        break 'search;
                    }
                }
            }
            e1 += 1;
        }
        let (p1, p2, pt, extra, swapped) = routes.ok_or_else(|| SchedError::Route {
            layer,
            detail: format!("operand chains to gadget slot {si}"),
        })?;

        let start = e1 - self.prep_off;
        let mut prep = Schedule::default();
        prep.push(GridInstr::op(e1 - self.cost.prep_pauli, IsaKind::PrepZero, vec![ho]));
        self.commit(prep);

        let ops = CcixOperands {
            c1_path: Path::new(p1)?,
            c2_path: Path::new(p2)?,
            target_path: Path::with_diag_steps(pt, 1)?,
        };
        let opts = CcixOptions {
            seeded: true,
            retire_seeds: last_use,
            neg1: if swapped { nb } else { na },
            neg2: if swapped { na } else { nb },
            ..Default::default()
        };
        let g = ccix_gadget(self.cost, &slot.region, &ops, start, &opts, &mut self.bits)?;
        let merged = g.merged();
        let end = busy_end(&merged, self.cost);
        for c in extra {
            self.claim(c, end);
        }
        self.commit(merged);
        self.slot_free[si] = end;
        self.last_p1 = start as i64;
        Ok((e1, end))
    }

    fn spine_heads(&self, home: Coord, extra: &BTreeSet<Coord>, t: u64) -> Vec<Coord> {
        let mut v = Vec::new();
        for n in [(home.0.wrapping_sub(1), home.1), (home.0 + 1, home.1)] {
            if self.routable(n, extra, t) {
                v.push(n);
            }
        }
        v
    }

    fn emit_cnot(&mut self, ctrl: Wire, tgt: Wire, layer: usize, floor: u64) -> Result<(u64, u64), SchedError> {
        let (hc, ht) = (self.home(ctrl), self.home(tgt));
        let lead = self.cost.prep_pauli + self.cost.meas_xx_zz;
        let mut t = floor
            .max(self.cell_free(hc).saturating_sub(lead))
            .max(self.cell_free(ht).saturating_sub(lead));
        let mut found = None;
        for _ in 0..ROUTE_TRIES {
            let extra = BTreeSet::new();
            let heads = self.spine_heads(hc, &extra, t);
            let mut best: Option<Vec<Coord>> = None;
            for tail in [(ht.0, ht.1.wrapping_sub(1)), (ht.0, ht.1 + 1)] {
                if !self.routable(tail, &extra, t) {
                    continue;
                }
                if let Some(p) = self.route_any(&heads, tail, t, &extra) {
                    if best.as_ref().is_none_or(|b| p.len() < b.len()) {
                        best = Some(p);
                    }
                }
            }
            match best {
                Some(p) => {
                    found = Some(p);
                    break;
                }
                None => t += 1,
            }
        }
        let spine = found.ok_or_else(|| SchedError::Route {
            layer,
            detail: format!("spine {hc:?} -> {ht:?}"),
        })?;
        let s = remote_cnot(self.cost, t, hc, ht, &Path::new(spine)?, &mut self.bits)?;
        let end = busy_end(&s, self.cost);
        self.commit(s);
        self.claim(hc, end);
        self.claim(ht, end);
        Ok((t, end))
    }

    fn emit_cxor(
        &mut self,
        ctrl: Wire,
        neg: bool,
        mask: u64,
        s_fused: bool,
        layer: usize,
        floor: u64,
    ) -> Result<(u64, u64), SchedError> {
        let m = self.circ.m;
        let maskv: Vec<bool> = (0..m).map(|j| mask >> j & 1 == 1).collect();
        if !maskv.iter().any(|&x| x) && !s_fused {
            // nothing to write and no fused S: the gate is a no-op
            return Ok((floor, floor));
        }
        let hc = self.home(ctrl);
        let snake = &self.lay.output_snake;
        let entry = (INPUT_ROW - 1, snake[0].1);
        // the fanout cat only touches the control at its closing seam, so
        // its preparation can start ahead of the control becoming free
        let lead = self.cost.prep_pauli + self.cost.meas_xx_zz;
        let mut t = floor.max(self.cell_free(hc).saturating_sub(lead));
        for (j, &on) in maskv.iter().enumerate() {
            if on {
                t = t.max(self.cell_free(self.lay.output_targets[j]));
            }
        }
        for &c in snake {
            t = t.max(self.cell_free(c));
        }
        let mut plan = None;
        for _ in 0..ROUTE_TRIES {
            let mut extra = BTreeSet::new();
            let heads = self.spine_heads(hc, &extra, t);
            let Some(route) = self.route_any(&heads, entry, t, &extra) else {
                t += 1;
                continue;
            };
            extra.extend(route.iter().copied());
            // fused S resource: prefer a strip cell beside an unmasked snake
            // cell; fall back to any free neighbor of the routed spine
            let fuse = if s_fused {
                let prefix = route.len();
                let strip_pick = (0..m)
                    .filter(|&j| !maskv[j])
                    .map(|j| (prefix + j, self.lay.s_strip[j]))
                    .find(|&(_, c)| self.cell_free(c) + self.cost.prep_magic <= t);
                let pick = strip_pick.or_else(|| {
                    route.iter().enumerate().find_map(|(i, &rc)| {
                        [(rc.0, rc.1.wrapping_sub(1)), (rc.0, rc.1 + 1)]
                            .into_iter()
                            .find(|&nc| {
                                self.routable(nc, &extra, t)
                                    && self.cell_free(nc) + self.cost.prep_magic <= t
                            })
                            .map(|nc| (i, nc))
                    })
                });
                match pick {
                    Some(p) => Some(p),
                    None => {
                        t += 1;
                        continue;
                    }
                }
            } else {
                None
            };
            plan = Some((route, fuse));
            break;
        }
        let (route, fuse) = plan.ok_or_else(|| SchedError::Route {
            layer,
            detail: format!("spine {hc:?} -> output column"),
        })?;
        let prefix = route.len();
        let mut spine = route;
        spine.extend(snake.iter().copied());
        let targets: Vec<(usize, Coord)> = (0..m)
            .map(|j| (prefix + j, self.lay.output_targets[j]))
            .collect();
        let mut sch = Schedule::default();
        if let Some((_, cell)) = fuse {
            sch.push(prep_s(t - self.cost.prep_magic, cell));
        }
        let inner = cxor(
            self.cost,
            t,
            hc,
            &maskv,
            &targets,
            &Path::new(spine)?,
            fuse,
            &mut self.bits,
        )?;
        sch.merge(inner);
        let end = busy_end(&sch, self.cost);
        if neg {
            // a negated control equals the plain gate plus an unconditional
            // mask flip, since X on a CNOT target commutes with the CNOT
            for (j, &on) in maskv.iter().enumerate() {
                if on {
                    sch.correct(
                        Pauli::X,
                        self.lay.output_targets[j],
                        Cond { bits: Vec::new(), value: false },
                        end,
                    );
                }
            }
        }
        self.commit(sch);
        Ok((t, end))
    }

    fn emit_s(&mut self, w: Wire, dagger: bool, layer: usize, floor: u64) -> Result<(u64, u64), SchedError> {
        let hw = self.home(w);
        let n_strip = self.lay.s_strip.len();
        let lead = self.cost.prep_pauli + self.cost.meas_xx_zz;
        let mut t = floor
            .max(self.cell_free(hw).saturating_sub(lead))
            .max(self.cost.prep_magic);
        let mut plan = None;
        for _ in 0..ROUTE_TRIES {
            let extra = BTreeSet::new();
            let heads = self.spine_heads(hw, &extra, t);
            let mut found = None;
            for i in 0..n_strip {
                let cell = self.lay.s_strip[(self.strip_rr + i) % n_strip];
                if self.cell_free(cell) + self.cost.prep_magic > t {
                    continue;
                }
                let tail = (cell.0, cell.1 - 1);
                if !self.routable(tail, &extra, t) {
                    continue;
                }
                if let Some(p) = self.route_any(&heads, tail, t, &extra) {
                    found = Some((cell, p));
                    break;
                }
            }
            match found {
                Some(v) => {
                    plan = Some(v);
                    break;
                }
                None => t += 1,
            }
        }
        let (cell, path) = plan.ok_or_else(|| SchedError::Route {
            layer,
            detail: format!("spine {hw:?} -> delivery strip"),
        })?;
        self.strip_rr += 1;
        let mut s = Schedule::default();
        s.push(prep_s(t - self.cost.prep_magic, cell));
        s.merge(remote_cnot(self.cost, t, hw, cell, &Path::new(path)?, &mut self.bits)?);
        let t_z = busy_end(&s, self.cost);
        let z = self.bits.fresh();
        s.push(GridInstr::meas(t_z, IsaKind::MeasZ, vec![cell], z));
        // CNOT onto |S> then Z readout gives S for z=0 and S-dagger for
        // z=1, so Z^z restores S; a surplus unconditional Z turns it into
        // S-dagger
        s.correct(Pauli::Z, hw, Cond::bit(z), t_z);
        if dagger {
            s.correct(Pauli::Z, hw, Cond { bits: Vec::new(), value: false }, t_z);
        }
        let end = busy_end(&s, self.cost);
        self.commit(s);
        self.claim(hw, end);
        Ok((t, end))
    }

    fn ensure_cz_slot(&mut self, j: usize, at: u64) -> Result<u64, SchedError> {
        if let Some((_, ready)) = self.cz_state[j] {
            return Ok(ready);
        }
        let tl = self.lay.cz_slots[j];
        let cells = [tl, (tl.0, tl.1 + 1), (tl.0 + 1, tl.1), (tl.0 + 1, tl.1 + 1)];
        let tp = cells.iter().map(|&c| self.cell_free(c)).max().unwrap().max(at);
        let (s, slot) = cz_slot_prep(self.cost, tp, tl, &mut self.bits)?;
        let ready = busy_end(&s, self.cost);
        self.commit(s);
        for c in cells {
            self.claim(c, ready);
        }
        self.cz_state[j] = Some((slot, ready));
        Ok(ready)
    }

    fn emit_cz(
        &mut self,
        a: Wire,
        b: Wire,
        cond: Option<MBit>,
        layer: usize,
        floor: u64,
    ) -> Result<(u64, u64), SchedError> {
        let j = self.cz_rr % self.lay.cz_slots.len();
        self.cz_rr += 1;
        let (on, ready) = self.cond_of(cond)?;
        let (ha, hb) = (self.home(a), self.home(b));
        let slot_ready = self.ensure_cz_slot(j, 0)?;
        let (slot, _) = self.cz_state[j].unwrap();
        let lead = self.cost.prep_pauli + self.cost.meas_xx_zz;
        let mut t = floor
            .max(ready)
            .max(slot_ready)
            .max(self.cell_free(ha).saturating_sub(lead))
            .max(self.cell_free(hb).saturating_sub(lead));
        let mut routes = None;
        for _ in 0..ROUTE_TRIES {
            let mut extra = BTreeSet::new();
            let r = (|| {
                let p1 = self.route_zz(ha, slot.r1, t, &extra)?;
                extra.extend(p1.iter().skip(1).rev().skip(1));
                let p2 = self.route_zz(hb, slot.r2, t, &extra)?;
                extra.extend(p2.iter().skip(1).rev().skip(1));
                Some((p1, p2, extra))
            })();
            match r {
                Some(v) => {
                    routes = Some(v);
                    break;
                }
                None => t += 1,
            }
        }
        let (p1, p2, extra) = routes.ok_or_else(|| SchedError::Route {
            layer,
            detail: format!("chains to CZ slot {j}"),
        })?;

        let mut ch1 = remote_pauli_meas(
            self.cost,
            t,
            &Path::new(p1)?,
            JointBasis::Zz,
            ChainForm::BellPrep,
            false,
            &mut self.bits,
        )?;
        let mut ch2 = remote_pauli_meas(
            self.cost,
            t,
            &Path::new(p2)?,
            JointBasis::Zz,
            ChainForm::BellPrep,
            false,
            &mut self.bits,
        )?;
        gate_on(&mut ch1.sched, &on);
        gate_on(&mut ch2.sched, &on);
        let t_x = busy_end(&ch1.sched, self.cost).max(busy_end(&ch2.sched, self.cost));
        let mut s = Schedule::default();
        s.merge(ch1.sched);
        s.merge(ch2.sched);
        let (x1, x2) = (self.bits.fresh(), self.bits.fresh());
        let conditional = !(on.bits.is_empty() && !on.value);
        for (cell, out) in [(slot.r1, x1), (slot.r2, x2)] {
            let mut i = GridInstr::meas(t_x, IsaKind::MeasX, vec![cell], out);
            if conditional {
                i.cond = Some(on.clone());
            }
            s.push(i);
        }
        if conditional {
            // the skipped branch still has to blank the resource cells
            let off = Cond { bits: on.bits.clone(), value: !on.value };
            for cell in [slot.r1, slot.r2] {
                let mut i = GridInstr::meas(t_x, IsaKind::MeasX, vec![cell], self.bits.fresh());
                i.cond = Some(off.clone());
                s.push(i);
            }
        }
        let mut c1 = ch2.outcome.bits.clone();
        c1.push(x1);
        s.correct(Pauli::Z, ha, Cond { bits: c1, value: true }, t_x);
        let mut c2 = ch1.outcome.bits.clone();
        c2.push(x2);
        s.correct(Pauli::Z, hb, Cond { bits: c2, value: true }, t_x);

        let end = t_x + 1;
        for c in extra {
            self.claim(c, end);
        }
        self.commit(s);
        self.claim(ha, end);
        self.claim(hb, end);
        self.cz_state[j] = None;
        self.cz_remaining -= 1;
        if self.cz_remaining > 0 {
            self.ensure_cz_slot(j, end)?;
        }
        Ok((t, end))
    }
}

/// Preparation span of the doubly-controlled-iX gadget under `cost`: the
/// offset from its start cycle to the first execution cycle. Measured off a
/// throwaway compilation, since it depends only on the cost model.
fn probe_prep_offset(cost: &CostModel) -> u64 {
    let region = crate::gadget::ccix::CcixRegion::new((0, 0));
    let (a0, b0, c0) = region.interfaces();
    let ops = CcixOperands {
        c1_path: Path::new(vec![(10, b0.1), (9, b0.1), b0]).unwrap(),
        c2_path: Path::new(vec![(10, c0.1), (9, c0.1), c0]).unwrap(),
        target_path: Path::with_diag_steps(vec![(9, a0.1 + 1), a0], 1).unwrap(),
    };
    let mut bits = BitAlloc::new(1 << 24);
    let opts = CcixOptions { seeded: true, ..Default::default() };
    let g = ccix_gadget(cost, &region, &ops, 0, &opts, &mut bits)
        .expect("probe gadget compiles on a blank region");
    busy_end(&g.prepare1, cost).max(busy_end(&g.prepare2, cost))
}

pub fn schedule(
    circ: &LogicalCircuit,
    lay: &GridLayout,
    cost: &CostModel,
    barrier: Barrier,
) -> Result<SchedOut, SchedError> {
    let layers = circ.layers.as_ref().ok_or(SchedError::NoLayers)?;
    let mut eng = Engine::new(cost, lay, circ)?;

    let any_gate = circ.all_gates().next().is_some();
    let uses_and = !eng.and_seq.is_empty();
    let mut init = 0u64;
    if uses_and {
        // seed the persistent |S_x> states of every slot that will run
        let used: BTreeSet<usize> = eng.and_seq.iter().copied().collect();
        for &si in &used {
            let s = seed_sx(&lay.ccix_slots[si].region, 0);
            let end = busy_end(&s, cost);
            eng.slot_free[si] = end;
            eng.commit(s);
        }
        init = cost.prep_magic + eng.prep_off;
    }
    if eng.cz_remaining > 0 {
        for j in 0..lay.cz_slots.len().min(eng.cz_remaining) {
            let ready = eng.ensure_cz_slot(j, 0)?;
            init = init.max(ready);
        }
    }
    if !any_gate {
        init = 0;
    }
    let t0 = init;
    eng.max_end = eng.max_end.max(t0);

    for g in &circ.prologue {
        eng.emit(g, 0, t0)?;
    }
    let mut per_layer = Vec::with_capacity(layers.len());
    for (li, layer) in layers.iter().enumerate() {
        let fl = match barrier {
            Barrier::Strict => eng.max_end,
            Barrier::Free => t0,
        };
        let mut lo = u64::MAX;
        let mut hi = fl;
        for &gi in layer {
            let (s, e) = eng.emit(&circ.gates[gi], li + 1, fl)?;
            lo = lo.min(s);
            hi = hi.max(e);
        }
        per_layer.push(if lo == u64::MAX { 0 } else { hi - lo });
    }
    let ep_floor = match barrier {
        Barrier::Strict => eng.max_end,
        Barrier::Free => t0,
    };
    for g in &circ.epilogue {
        eng.emit(g, layers.len() + 1, ep_floor)?;
    }

    let mut t_consumption: BTreeMap<u64, u32> = BTreeMap::new();
    for i in &eng.sched.instrs {
        if i.kind == IsaKind::PrepMagic(PrepState::MagicT) {
            *t_consumption.entry(i.cycle).or_insert(0) += 1;
        }
    }
    let end = busy_end(&eng.sched, cost);
    let program = GridProgram {
        rows: lay.rows,
        cols: lay.cols,
        instrs: eng.sched.instrs.clone(),
    };
    Ok(SchedOut {
        sched: eng.sched,
        program,
        measured_cycles: end.saturating_sub(t0),
        init_cycles: t0,
        per_layer_cycles: per_layer,
        t_consumption,
    })
}

/// Fixed home cell of every logical wire on the planned grid. Control,
/// addresses, and helpers sit on the input patch corners (spread out to
/// every other corner when the patch has room, so chains can slip past
/// one another); data wires sit on the output target column.
pub fn wire_homes(
    circ: &LogicalCircuit,
    lay: &GridLayout,
) -> Result<BTreeMap<Wire, Coord>, SchedError> {
    let mut wires: Vec<Wire> = Vec::new();
    if circ.controlled {
        wires.push(Wire::Ctl);
    }
    for i in 1..=circ.k {
        wires.push(Wire::Addr(i as u8));
    }
    for t in 0..circ.n_helpers {
        wires.push(Wire::Helper(t as u8));
    }
    if wires.len() > lay.patch_cells.len() {
        return Err(SchedError::Capacity(format!(
            "{} wires, {} patch cells",
            wires.len(),
            lay.patch_cells.len()
        )));
    }
    let sparse: Vec<Coord> = lay.patch_cells.iter().copied().step_by(2).collect();
    let spots: &[Coord] =
        if wires.len() <= sparse.len() { &sparse } else { &lay.patch_cells };
    let mut homes = BTreeMap::new();
    for (w, &c) in wires.iter().zip(spots) {
        homes.insert(*w, c);
    }
    for j in 0..circ.m {
        homes.insert(Wire::Data(j as u8), lay.output_targets[j]);
    }
    Ok(homes)
}

/// Home cells of the externally prepared operands (control, addresses,
/// data register), in the wire order of `LogicalCircuit::operand_qubits`.
pub fn operand_homes(circ: &LogicalCircuit, lay: &GridLayout) -> Vec<Coord> {
    let homes = wire_homes(circ, lay).expect("layout fits the circuit");
    let mut v = Vec::new();
    if circ.controlled {
        v.push(homes[&Wire::Ctl]);
    }
    for i in 1..=circ.k {
        v.push(homes[&Wire::Addr(i as u8)]);
    }
    for j in 0..circ.m {
        v.push(homes[&Wire::Data(j as u8)]);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{cycles_ctl, default_n_ccix, default_pad, DEFAULT_N_CZ};
    use crate::isa::{check_program, qubit_at, Grid};
    use crate::layout::plan_layout;
    use crate::sim::{run, BranchPolicy, QState, C64};
    use crate::synth::{expand_and_gates, layer_assign, synth_ctl, synth_tl_zipper};
    use crate::table::BitTable;
    use crate::verify::phase_free_deviation;

    fn prepared(k: usize, m: usize, seed: u64) -> LogicalCircuit {
        let t = BitTable::random(k, m, seed);
        layer_assign(&expand_and_gates(&synth_ctl(&t))).unwrap()
    }

    fn sched_pair(circ: &LogicalCircuit) -> (SchedOut, SchedOut, GridLayout) {
        let cost = CostModel::default();
        let lay = plan_layout(
            circ.k,
            circ.m,
            default_n_ccix(circ.k),
            DEFAULT_N_CZ,
            default_pad(circ.m),
        )
        .unwrap();
        let free = schedule(circ, &lay, &cost, Barrier::Free).unwrap();
        let strict = schedule(circ, &lay, &cost, Barrier::Strict).unwrap();
        (free, strict, lay)
    }

    fn check_ledger(circ: &LogicalCircuit, lay: &GridLayout, out: &SchedOut) {
        let cost = CostModel::default();
        let homes = operand_homes(circ, lay);
        let start = Grid::with_data(lay.rows, lay.cols, &homes);
        let end = check_program(&start, &out.program, &cost).unwrap();
        let mut left = end.data_cells();
        left.sort_unstable();
        let mut want = homes.clone();
        want.sort_unstable();
        assert_eq!(left, want, "non-operand cells still hold data at program end");
    }

    #[test]
    fn empty_circuit_is_free() {
        let circ = LogicalCircuit {
            k: 1,
            m: 1,
            controlled: false,
            zipper: false,
            n_helpers: 0,
            prologue: vec![],
            gates: vec![],
            epilogue: vec![],
            layers: Some(vec![]),
        };
        let cost = CostModel::default();
        let lay = plan_layout(1, 1, 1, 1, 2).unwrap();
        let out = schedule(&circ, &lay, &cost, Barrier::Free).unwrap();
        assert_eq!(out.measured_cycles, 0);
        assert_eq!(out.init_cycles, 0);
    }

    #[test]
    fn k1_legal_and_within_bound() {
        let circ = prepared(1, 2, 7);
        let (free, strict, lay) = sched_pair(&circ);
        check_ledger(&circ, &lay, &free);
        check_ledger(&circ, &lay, &strict);
        let cost = CostModel::default();
        let bound = cycles_ctl(1, &cost).unwrap();
        assert!(
            free.measured_cycles <= bound,
            "free {} > bound {bound}",
            free.measured_cycles
        );
        assert!(free.measured_cycles < strict.measured_cycles);
    }

    #[test]
    fn k2_legal_and_within_bound() {
        let circ = prepared(2, 7, 11);
        let (free, strict, lay) = sched_pair(&circ);
        check_ledger(&circ, &lay, &free);
        let cost = CostModel::default();
        let bound = cycles_ctl(2, &cost).unwrap();
        assert!(
            free.measured_cycles <= bound,
            "free {} > bound {bound}",
            free.measured_cycles
        );
        assert!(free.measured_cycles < strict.measured_cycles);
        assert_eq!(free.per_layer_cycles.len(), 11);
    }

    #[test]
    fn t_rate_stays_bounded() {
        let circ = prepared(2, 7, 13);
        let (free, _, _) = sched_pair(&circ);
        let cost = CostModel::default();
        let rate = t_profile(&free, cost.tau_rzz);
        assert!(rate <= 4.0 / cost.tau_rzz as f64, "rate {rate}");
        assert!(rate > 0.0);
    }

    #[test]
    fn zipper_schedules_legally() {
        let t = BitTable::random(2, 2, 5);
        let circ =
            layer_assign(&expand_and_gates(&synth_tl_zipper(&t).unwrap())).unwrap();
        let cost = CostModel::default();
        let lay = plan_layout(2, 2, 2, DEFAULT_N_CZ, default_pad(2)).unwrap();
        let out = schedule(&circ, &lay, &cost, Barrier::Free).unwrap();
        check_ledger(&circ, &lay, &out);
        let rate = t_profile(&out, cost.tau_rzz);
        assert!(rate <= 8.0 / cost.tau_rzz as f64);
    }

    /// Replays the grid program as a quantum channel on the operand homes
    /// and checks the lookup map on every basis address, plus one uniform
    /// superposition probe for phase coherence.
    fn replay(k: usize, m: usize, seed: u64, shots: u32) {
        let table = BitTable::random(k, m, seed);
        let circ = layer_assign(&expand_and_gates(&synth_ctl(&table))).unwrap();
        let (out, _, lay) = {
            let cost = CostModel::default();
            let lay = plan_layout(k, m, default_n_ccix(k), DEFAULT_N_CZ, default_pad(m))
                .unwrap();
            let o = schedule(&circ, &lay, &cost, Barrier::Free).unwrap();
            (o, (), lay)
        };
        let homes = operand_homes(&circ, &lay);
        let qs: Vec<_> = homes.iter().map(|&c| qubit_at(lay.cols, c)).collect();
        let ops = out.sched.sim_ops(lay.cols);
        let n = qs.len();

        let expected_index = |c: usize, x: usize| {
            let f = if c == 1 { table.get(x) } else { 0 };
            // operand order: control, addresses (MSB wire first), outputs
            let mut idx = c;
            for i in 0..k {
                idx |= (x >> (k - 1 - i) & 1) << (1 + i);
            }
            idx | (f as usize) << (1 + k)
        };

        // basis probes: y starts at 0
        for c in 0..2usize {
            for x in 0..1usize << k {
                let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
                let mut inidx = c;
                for i in 0..k {
                    inidx |= (x >> (k - 1 - i) & 1) << (1 + i);
                }
                amps[inidx] = C64::new(1.0, 0.0);
                let st = QState::from_amps(&qs, amps);
                let branches =
                    run(&ops, &st, &BranchPolicy::Sampled { seed: seed ^ 0xb0b, shots })
                        .unwrap();
                for br in branches {
                    let sv = br.state.statevector(&qs).unwrap();
                    let mut want = vec![C64::new(0.0, 0.0); 1 << n];
                    want[expected_index(c, x)] = C64::new(1.0, 0.0);
                    let dev = phase_free_deviation(&sv, &want);
                    assert!(dev < 1e-9, "c={c} x={x} dev={dev}");
                }
            }
        }

        // phase probe: uniform over (c, x), y = 0
        let dim_in = 1usize << (1 + k);
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        let norm = 1.0 / (dim_in as f64).sqrt();
        for c in 0..2usize {
            for x in 0..1usize << k {
                let mut inidx = c;
                for i in 0..k {
                    inidx |= (x >> (k - 1 - i) & 1) << (1 + i);
                }
                amps[inidx] = C64::new(norm, 0.0);
            }
        }
        let st = QState::from_amps(&qs, amps);
        let branches =
            run(&ops, &st, &BranchPolicy::Sampled { seed: seed ^ 0xcafe, shots }).unwrap();
        for br in branches {
            let sv = br.state.statevector(&qs).unwrap();
            let mut want = vec![C64::new(0.0, 0.0); 1 << n];
            for c in 0..2usize {
                for x in 0..1usize << k {
                    want[expected_index(c, x)] = C64::new(norm, 0.0);
                }
            }
            let dev = phase_free_deviation(&sv, &want);
            assert!(dev < 1e-9, "superposition probe dev={dev}");
        }
    }

    #[test]
    fn replay_matches_lookup_k1() {
        replay(1, 2, 3, 5);
    }

    #[test]
    fn replay_matches_lookup_k2() {
        replay(2, 2, 9, 3);
    }
}

#[cfg(test)]
mod dbgdump {
    use super::*;
    use crate::cost::CostModel;
    use crate::layout::plan_layout;
    use crate::synth::{expand_and_gates, layer_assign, synth_ctl};
    use crate::table::BitTable;

    #[test]
    #[ignore]
    fn dump_k1() {
        let t = BitTable::random(1, 2, 3);
        let circ = layer_assign(&expand_and_gates(&synth_ctl(&t))).unwrap();
        let cost = CostModel::default();
        let lay = plan_layout(circ.k, circ.m, 1, 2, crate::cost::default_pad(circ.m)).unwrap();
        let lys = circ.layers.clone().unwrap();
        eprintln!("layers: {}", lys.len());
        for (i, l) in lys.iter().enumerate() {
            let gs: Vec<_> = circ.all_gates().collect();
            eprintln!("layer {i}: {:?}", l.iter().map(|&g| gs[g]).collect::<Vec<_>>());
        }
        let out = schedule(&circ, &lay, &cost, Barrier::Free).unwrap();
        eprintln!("init={} measured={} per_layer={:?}", out.init_cycles, out.measured_cycles, out.per_layer_cycles);
        let mut v = out.program.instrs.clone();
        v.sort_by_key(|i| i.cycle);
        for i in &v {
            if i.cycle >= 20 {
                eprintln!("  c{:>3} {:?} {:?} cond={}", i.cycle, i.kind, i.cells, i.cond.is_some());
            }
        }
    }
}
