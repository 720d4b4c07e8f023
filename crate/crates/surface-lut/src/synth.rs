//! Table-lookup synthesis: the unary-iterate recursion, its controlled and
//! zipper variants, AND-gate expansion, and layer assignment.

use thiserror::Error;

use crate::circuit::{Gate, LogicalCircuit, MBit, Wire};
use crate::table::BitTable;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("zipper synthesis requires k >= 2, got {0}")]
    ZipperTooNarrow(usize),
    #[error("circuit still contains unexpanded AND gates")]
    MustExpandFirst,
    #[error("layer assignment found an unexpected gate sequence at index {0}")]
    BadStructure(usize),
}

struct Ctx {
    gates: Vec<Gate>,
    next_helper: u8,
    max_helpers: usize,
}

impl Ctx {
    fn new() -> Self {
        Ctx { gates: Vec::new(), next_helper: 0, max_helpers: 0 }
    }

    fn alloc_helper(&mut self) -> Wire {
        let h = Wire::Helper(self.next_helper);
        self.next_helper += 1;
        self.max_helpers = self.max_helpers.max(self.next_helper as usize);
        h
    }

    fn free_helper(&mut self) {
        self.next_helper -= 1;
    }
}

/// Emits a lookup over `addrs` controlled by `ctrl` (negated if `neg`):
/// `|q⟩|x⟩|y⟩ → |q⟩|x⟩|q ? y⊕f(x) : y⟩`. Splits on the leading address wire,
/// visiting the low half under a fresh helper `ctrl ∧ ¬x_top`, flipping the
/// helper to `ctrl ∧ x_top`, visiting the high half, then uncomputing.
fn ctl_block(ctx: &mut Ctx, ctrl: Wire, neg: bool, addrs: &[Wire], table: &BitTable) {
    if addrs.is_empty() {
        ctx.gates.push(Gate::Cxor { ctrl, neg, mask: table.get(0), s: false });
        return;
    }
    let top = addrs[0];
    let h = ctx.alloc_helper();
    ctx.gates.push(Gate::And { a: ctrl, na: neg, b: top, nb: true, out: h });
    ctl_block(ctx, h, false, &addrs[1..], &table.split_msb(false));
    ctx.gates.push(Gate::Cnot { ctrl, tgt: h });
    if neg {
        // CNOT from a negated control = CNOT then X on the target
        ctx.gates.push(Gate::X { w: h, cond: None });
    }
    ctl_block(ctx, h, false, &addrs[1..], &table.split_msb(true));
    ctx.gates.push(Gate::AndDag { a: ctrl, na: neg, b: top, nb: false, out: h });
    ctx.free_helper();
}

fn addr_wires(k: usize) -> Vec<Wire> {
    (1..=k).map(|i| Wire::Addr(i as u8)).collect()
}

/// Uncontrolled lookup |x⟩|y⟩ → |x⟩|y⊕f(x)⟩.
pub fn synth_tl(table: &BitTable) -> LogicalCircuit {
    let (k, m) = (table.k(), table.m());
    let mut ctx = Ctx::new();
    match k {
        0 => {
            for j in 0..m {
                if table.bit(0, j) {
                    ctx.gates.push(Gate::X { w: Wire::Data(j as u8), cond: None });
                }
            }
        }
        1 => {
            ctx.gates.push(Gate::Cxor {
                ctrl: Wire::Addr(1),
                neg: true,
                mask: table.get(0),
                s: false,
            });
            ctx.gates.push(Gate::Cxor {
                ctrl: Wire::Addr(1),
                neg: false,
                mask: table.get(1),
                s: false,
            });
        }
        _ => {
            let addrs = addr_wires(k);
            ctl_block(&mut ctx, addrs[0], true, &addrs[1..], &table.split_msb(false));
            ctl_block(&mut ctx, addrs[0], false, &addrs[1..], &table.split_msb(true));
        }
    }
    LogicalCircuit {
        k,
        m,
        controlled: false,
        zipper: false,
        n_helpers: ctx.max_helpers,
        prologue: vec![],
        gates: ctx.gates,
        epilogue: vec![],
        layers: None,
    }
}

/// Controlled lookup |c⟩|x⟩|y⟩ → |c⟩|x⟩|c ? y⊕f(x) : y⟩.
pub fn synth_ctl(table: &BitTable) -> LogicalCircuit {
    let (k, m) = (table.k(), table.m());
    let mut ctx = Ctx::new();
    ctl_block(&mut ctx, Wire::Ctl, false, &addr_wires(k), table);
    LogicalCircuit {
        k,
        m,
        controlled: true,
        zipper: false,
        n_helpers: ctx.max_helpers,
        prologue: vec![],
        gates: ctx.gates,
        epilogue: vec![],
        layers: None,
    }
}

/// Zipper lookup: both address halves run as controlled lookups in parallel,
/// interleaving their writes into the shared output register. The low k−1
/// address wires are fanned out so the halves share only the outputs.
pub fn synth_zipper(table: &BitTable, controlled: bool) -> Result<LogicalCircuit, SynthError> {
    let (k, m) = (table.k(), table.m());
    if k < 2 {
        return Err(SynthError::ZipperTooNarrow(k));
    }
    let mut ctx = Ctx::new();
    let mut prologue = Vec::new();
    let mut epilogue = Vec::new();

    // copies of the low address wires for the second half
    let copies: Vec<Wire> = (0..k - 1).map(|_| ctx.alloc_helper()).collect();
    for (i, &cp) in copies.iter().enumerate() {
        prologue.push(Gate::Cnot { ctrl: Wire::Addr(i as u8 + 2), tgt: cp });
    }

    let mut next_bit: MBit = 0;
    let x1 = Wire::Addr(1);
    let (ctrl_a, ctrl_b) = if controlled {
        // halves gated by c∧¬x1 and c∧x1: one extra AND vs the plain lookup
        let ha = ctx.alloc_helper();
        let hb = ctx.alloc_helper();
        prologue.push(Gate::And { a: Wire::Ctl, na: false, b: x1, nb: true, out: ha });
        prologue.push(Gate::And { a: Wire::Ctl, na: false, b: x1, nb: false, out: hb });
        epilogue.push(Gate::AndDag { a: Wire::Ctl, na: false, b: x1, nb: true, out: ha });
        epilogue.push(Gate::AndDag { a: Wire::Ctl, na: false, b: x1, nb: false, out: hb });
        (ha, hb)
    } else {
        // negated copy of x1 drives the low half; x1 itself drives the high half
        let nx1 = ctx.alloc_helper();
        prologue.push(Gate::Cnot { ctrl: x1, tgt: nx1 });
        prologue.push(Gate::X { w: nx1, cond: None });
        epilogue.push(Gate::X { w: nx1, cond: None });
        epilogue.push(Gate::Cnot { ctrl: x1, tgt: nx1 });
        epilogue.push(Gate::MeasZ { w: nx1, bit: next_bit });
        next_bit += 1;
        (nx1, x1)
    };
    // uncompute and retire the address copies
    for (i, &cp) in copies.iter().enumerate() {
        epilogue.push(Gate::Cnot { ctrl: Wire::Addr(i as u8 + 2), tgt: cp });
        epilogue.push(Gate::MeasZ { w: cp, bit: next_bit });
        next_bit += 1;
    }

    let originals = addr_wires(k)[1..].to_vec();
    let half_base = ctx.next_helper;
    ctl_block(&mut ctx, ctrl_a, false, &originals, &table.split_msb(false));
    let split = ctx.gates.len();
    ctx.next_helper = half_base + (k - 1) as u8; // second half gets its own helpers
    ctx.max_helpers = ctx.max_helpers.max(ctx.next_helper as usize + k - 1);
    ctl_block(&mut ctx, ctrl_b, false, &copies, &table.split_msb(true));
    let _ = split;

    Ok(LogicalCircuit {
        k,
        m,
        controlled,
        zipper: true,
        n_helpers: ctx.max_helpers,
        prologue,
        gates: ctx.gates,
        epilogue,
        layers: None,
    })
}

pub fn synth_tl_zipper(table: &BitTable) -> Result<LogicalCircuit, SynthError> {
    synth_zipper(table, false)
}

pub fn synth_ctl_zipper(table: &BitTable) -> Result<LogicalCircuit, SynthError> {
    synth_zipper(table, true)
}

/// Rewrites AND → CCiX + S (fusing the S into an adjacent CXOR on the same
/// control where possible) and AND† → X-measurement + classically controlled
/// CZ in delayed-choice form. Idempotent on AND-free circuits.
pub fn expand_and_gates(circ: &LogicalCircuit) -> LogicalCircuit {
    let mut next_bit: MBit = 0;
    for g in circ.all_gates() {
        if let Gate::MeasX { bit, .. } | Gate::MeasZ { bit, .. } = g {
            next_bit = next_bit.max(bit + 1);
        }
    }
    let expand = |gates: &[Gate], next_bit: &mut MBit| -> Vec<Gate> {
        let mut out: Vec<Gate> = Vec::new();
        for g in gates {
            match *g {
                Gate::And { a, na, b, nb, out: h } => {
                    out.push(Gate::Ccix { a, na, b, nb, out: h });
                    out.push(Gate::S { w: h });
                }
                Gate::AndDag { a, na, b, nb, out: h } => {
                    let bit = *next_bit;
                    *next_bit += 1;
                    out.push(Gate::MeasX { w: h, bit });
                    out.push(Gate::Cz { a, b, cond: Some(bit) });
                    // negated legs of the uncomputed AND shift the CZ by a Z
                    if na {
                        out.push(Gate::Z { w: b, cond: Some(bit) });
                    }
                    if nb {
                        out.push(Gate::Z { w: a, cond: Some(bit) });
                    }
                }
                ref g => out.push(g.clone()),
            }
        }
        // fuse S gates with an adjacent CXOR on the same control wire
        let mut fused: Vec<Gate> = Vec::new();
        for g in out {
            match (fused.last(), &g) {
                (Some(&Gate::S { w }), &Gate::Cxor { ctrl, neg, mask, s: false })
                    if w == ctrl =>
                {
                    fused.pop();
                    fused.push(Gate::Cxor { ctrl, neg, mask, s: true });
                }
                (Some(&Gate::Cxor { ctrl, neg, mask, s: false }), &Gate::S { w })
                    if w == ctrl =>
                {
                    fused.pop();
                    fused.push(Gate::Cxor { ctrl, neg, mask, s: true });
                }
                _ => fused.push(g),
            }
        }
        fused
    };
    LogicalCircuit {
        prologue: expand(&circ.prologue, &mut next_bit),
        gates: expand(&circ.gates, &mut next_bit),
        epilogue: expand(&circ.epilogue, &mut next_bit),
        layers: None,
        ..circ.clone()
    }
}

/// Duration class of a layer: M-layers carry an unfused CXOR (multi-target
/// CNOT on the critical path); everything else fits in the remote-op window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerClass {
    R,
    M,
}

struct Assign<'a> {
    gates: &'a [Gate],
    pos: usize,
    layer_of: Vec<usize>,
}

impl<'a> Assign<'a> {
    /// Assigns one lookup block starting at `self.pos` with its first gate in
    /// `layer0` (1-based); returns the number of layers it occupies and
    /// whether it was a bare CXOR base block.
    fn block(&mut self, layer0: usize) -> Result<(usize, bool), SynthError> {
        match self.gates.get(self.pos) {
            Some(Gate::Cxor { .. }) => {
                self.layer_of[self.pos] = layer0;
                self.pos += 1;
                Ok((1, true))
            }
            Some(Gate::Ccix { out, .. }) => {
                let h = *out;
                self.layer_of[self.pos] = layer0;
                self.pos += 1;
                // semi-transparent S from the enclosing AND rides in the
                // nested block's second layer
                let mut pending_s = None;
                if let Some(Gate::S { w }) = self.gates.get(self.pos) {
                    if *w == h {
                        pending_s = Some(self.pos);
                        self.pos += 1;
                    }
                }
                let (n0, _) = self.block(layer0 + 1)?;
                if let Some(si) = pending_s {
                    self.layer_of[si] = layer0 + 2;
                }
                match self.gates.get(self.pos) {
                    Some(Gate::Cnot { tgt, .. }) if *tgt == h => {
                        self.layer_of[self.pos] = layer0 + 1 + n0;
                        self.pos += 1;
                    }
                    _ => return Err(SynthError::BadStructure(self.pos)),
                }
                // flip correction from a negated block control is layer-free
                if let Some(Gate::X { w, cond: None }) = self.gates.get(self.pos) {
                    if *w == h {
                        self.layer_of[self.pos] = layer0 + 1 + n0;
                        self.pos += 1;
                    }
                }
                let (n1, base1) = self.block(layer0 + 2 + n0)?;
                // the AND† X-measurement co-schedules with a base block's
                // final CXOR on the same helper; otherwise it takes a layer
                let meas_layer =
                    if base1 { layer0 + 1 + n0 + n1 } else { layer0 + 2 + n0 + n1 };
                match self.gates.get(self.pos) {
                    Some(Gate::MeasX { w, .. }) if *w == h => {
                        self.layer_of[self.pos] = meas_layer;
                        self.pos += 1;
                    }
                    _ => return Err(SynthError::BadStructure(self.pos)),
                }
                while let Some(Gate::Cz { cond: Some(_), .. } | Gate::Z { cond: Some(_), .. }) =
                    self.gates.get(self.pos)
                {
                    self.layer_of[self.pos] = meas_layer;
                    self.pos += 1;
                }
                let total = meas_layer - layer0 + 1;
                Ok((total, false))
            }
            _ => Err(SynthError::BadStructure(self.pos)),
        }
    }
}

/// Assigns the expanded gate stream to layers. Non-zipper circuits place
/// their top-level blocks back to back; zipper circuits shift the second
/// half down by one layer, interleaving with the first.
pub fn layer_assign(circ: &LogicalCircuit) -> Result<LogicalCircuit, SynthError> {
    if circ.has_raw_and() {
        return Err(SynthError::MustExpandFirst);
    }
    let mut asg = Assign { gates: &circ.gates, pos: 0, layer_of: vec![0; circ.gates.len()] };
    let mut n_layers = 0usize;
    if circ.zipper {
        let (na, _) = asg.block(1)?;
        let (nb, _) = asg.block(2)?;
        n_layers = (na).max(nb + 1);
    } else {
        while asg.pos < circ.gates.len() {
            // plain X patterns (k=0) occupy a single layer
            if let Some(Gate::X { cond: None, .. }) = asg.gates.get(asg.pos) {
                asg.layer_of[asg.pos] = n_layers + 1;
                while let Some(Gate::X { cond: None, .. }) = asg.gates.get(asg.pos) {
                    asg.layer_of[asg.pos] = n_layers + 1;
                    asg.pos += 1;
                }
                n_layers += 1;
                continue;
            }
            let (n, _) = asg.block(n_layers + 1)?;
            n_layers += n;
        }
    }
    if asg.pos != circ.gates.len() {
        return Err(SynthError::BadStructure(asg.pos));
    }
    let mut layers = vec![Vec::new(); n_layers];
    for (gi, &li) in asg.layer_of.iter().enumerate() {
        layers[li - 1].push(gi);
    }
    Ok(LogicalCircuit { layers: Some(layers), ..circ.clone() })
}

/// Duration class per layer: a layer is M iff it contains an unfused CXOR.
pub fn layer_classes(circ: &LogicalCircuit) -> Result<Vec<LayerClass>, SynthError> {
    let layers = circ.layers.as_ref().ok_or(SynthError::MustExpandFirst)?;
    Ok(layers
        .iter()
        .map(|layer| {
            if layer
                .iter()
                .any(|&gi| matches!(circ.gates[gi], Gate::Cxor { s: false, .. }))
            {
                LayerClass::M
            } else {
                LayerClass::R
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tbl(k: usize, m: usize, seed: u64) -> BitTable {
        BitTable::random(k, m, seed)
    }

    #[test]
    fn and_counts_match_formulas() {
        for k in 1..=10 {
            let t = tbl(k, 2, k as u64);
            assert_eq!(synth_ctl(&t).count_and(), (1 << k) - 1, "ctl k={k}");
            assert_eq!(synth_tl(&t).count_and(), (1 << k) - 2, "tl k={k}");
            if k >= 2 {
                assert_eq!(synth_zipper(&t, true).unwrap().count_and(), 1 << k);
                assert_eq!(synth_zipper(&t, false).unwrap().count_and(), (1 << k) - 2);
            }
        }
    }

    #[test]
    fn ctl_k1_census() {
        let c = synth_ctl(&tbl(1, 3, 9));
        let ands = c.gates.iter().filter(|g| matches!(g, Gate::And { .. })).count();
        let dags = c.gates.iter().filter(|g| matches!(g, Gate::AndDag { .. })).count();
        assert_eq!((ands, dags, c.count_cxor()), (1, 1, 2));
    }

    #[test]
    fn layer_counts() {
        let c1 = layer_assign(&expand_and_gates(&synth_ctl(&tbl(1, 2, 1)))).unwrap();
        assert_eq!(c1.n_layers(), 4);
        let c2 = layer_assign(&expand_and_gates(&synth_ctl(&tbl(2, 2, 2)))).unwrap();
        assert_eq!(c2.n_layers(), 11);
        let c3 = layer_assign(&expand_and_gates(&synth_ctl(&tbl(3, 2, 3)))).unwrap();
        assert_eq!(c3.n_layers(), 25);
        let z3 =
            layer_assign(&expand_and_gates(&synth_zipper(&tbl(3, 2, 4), true).unwrap())).unwrap();
        assert_eq!(z3.n_layers(), 12);
        let t1 = layer_assign(&expand_and_gates(&synth_tl(&tbl(1, 2, 5)))).unwrap();
        assert_eq!(t1.n_layers(), 2);
    }

    #[test]
    fn layer_classes_count_m_layers() {
        // one M layer per unary-iterate base block
        for k in 1..=4 {
            let c = layer_assign(&expand_and_gates(&synth_ctl(&tbl(k, 2, 7)))).unwrap();
            let classes = layer_classes(&c).unwrap();
            let m_layers = classes.iter().filter(|c| **c == LayerClass::M).count();
            assert_eq!(m_layers, 1 << (k - 1), "k={k}");
        }
    }

    #[test]
    fn expand_idempotent_on_and_free() {
        let c = expand_and_gates(&synth_ctl(&tbl(2, 2, 11)));
        let c2 = expand_and_gates(&c);
        assert_eq!(c, c2);
    }

    #[test]
    fn layer_assign_rejects_raw_and() {
        let c = synth_ctl(&tbl(2, 2, 12));
        assert!(matches!(layer_assign(&c), Err(SynthError::MustExpandFirst)));
    }

    #[test]
    fn layer_disjointness() {
        for k in 1..=4 {
            let c = layer_assign(&expand_and_gates(&synth_ctl(&tbl(k, 3, 20 + k as u64)))).unwrap();
            for layer in c.layers.as_ref().unwrap() {
                let mut seen: Vec<Wire> = Vec::new();
                for &gi in layer {
                    for w in c.gates[gi].operands(c.m) {
                        if seen.contains(&w) {
                            // co-scheduling exceptions: the AND† X-measurement
                            // shares its wire with the final CXOR control, and
                            // conditional Paulis ride the measurement layer
                            let ok = layer.iter().any(|&gj| {
                                matches!(c.gates[gj], Gate::MeasX { .. })
                                    || matches!(c.gates[gj], Gate::Cz { cond: Some(_), .. })
                            });
                            assert!(ok, "k={k} overlapping wire {w} in layer");
                        } else {
                            seen.push(w);
                        }
                    }
                }
            }
        }
    }
}
