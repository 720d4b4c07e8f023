//! Logical-level circuit IR for table lookups: abstract wires, gate records
//! with classical conditions, and an optional layer partition.

use std::fmt;

use thiserror::Error;

use crate::sim::{BitId, Cond, GateKind, Pauli, PrepState, QubitId, SimOp};

/// Abstract wire names. Address wires are 1-based with `x1` the most
/// significant bit; helpers cover both recursion ancillas and zipper copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Wire {
    Ctl,
    Addr(u8),
    Data(u8),
    Helper(u8),
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wire::Ctl => write!(f, "c"),
            Wire::Addr(i) => write!(f, "x{i}"),
            Wire::Data(j) => write!(f, "d{j}"),
            Wire::Helper(t) => write!(f, "h{t}"),
        }
    }
}

impl Wire {
    fn parse(tok: &str) -> Option<Wire> {
        if tok == "c" {
            return Some(Wire::Ctl);
        }
        let (head, rest) = tok.split_at(1);
        let n: u8 = rest.parse().ok()?;
        match head {
            "x" => Some(Wire::Addr(n)),
            "d" => Some(Wire::Data(n)),
            "h" => Some(Wire::Helper(n)),
            _ => None,
        }
    }
}

/// A classical measurement bit produced inside the circuit.
pub type MBit = u16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Gate {
    X { w: Wire, cond: Option<MBit> },
    Z { w: Wire, cond: Option<MBit> },
    S { w: Wire },
    Sdg { w: Wire },
    And { a: Wire, na: bool, b: Wire, nb: bool, out: Wire },
    AndDag { a: Wire, na: bool, b: Wire, nb: bool, out: Wire },
    Ccix { a: Wire, na: bool, b: Wire, nb: bool, out: Wire },
    Cnot { ctrl: Wire, tgt: Wire },
    /// Controlled XOR of a constant mask into the data register; `s` marks a
    /// fused S on the control.
    Cxor { ctrl: Wire, neg: bool, mask: u64, s: bool },
    Cz { a: Wire, b: Wire, cond: Option<MBit> },
    MeasX { w: Wire, bit: MBit },
    MeasZ { w: Wire, bit: MBit },
}

impl Gate {
    /// Wires the gate touches (data wires of a CXOR expanded from the mask).
    pub fn operands(&self, m: usize) -> Vec<Wire> {
        match *self {
            Gate::X { w, .. } | Gate::Z { w, .. } | Gate::S { w } | Gate::Sdg { w } => vec![w],
            Gate::And { a, b, out, .. }
            | Gate::AndDag { a, b, out, .. }
            | Gate::Ccix { a, b, out, .. } => vec![a, b, out],
            Gate::Cnot { ctrl, tgt } => vec![ctrl, tgt],
            Gate::Cxor { ctrl, mask, .. } => {
                let mut v = vec![ctrl];
                for j in 0..m {
                    if mask >> j & 1 == 1 {
                        v.push(Wire::Data(j as u8));
                    }
                }
                v
            }
            Gate::Cz { a, b, .. } => vec![a, b],
            Gate::MeasX { w, .. } | Gate::MeasZ { w, .. } => vec![w],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalCircuit {
    pub k: usize,
    pub m: usize,
    pub controlled: bool,
    pub zipper: bool,
    pub n_helpers: usize,
    /// Setup gates outside the layered core (zipper fanout and extra ANDs).
    pub prologue: Vec<Gate>,
    pub gates: Vec<Gate>,
    /// Teardown gates outside the layered core (zipper uncomputation).
    pub epilogue: Vec<Gate>,
    /// Partition of `gates` indices into ordered layers, once assigned.
    pub layers: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("circuit has no layer assignment")]
    NoLayers,
    #[error("line {0}: {1}")]
    Parse(usize, String),
}

impl LogicalCircuit {
    pub fn n_layers(&self) -> usize {
        self.layers.as_ref().map_or(0, |l| l.len())
    }

    pub fn all_gates(&self) -> impl Iterator<Item = &Gate> {
        self.prologue.iter().chain(self.gates.iter()).chain(self.epilogue.iter())
    }

    pub fn count_and(&self) -> usize {
        self.all_gates()
            .filter(|g| matches!(g, Gate::And { .. } | Gate::Ccix { .. }))
            .count()
    }

    pub fn count_cxor(&self) -> usize {
        self.all_gates().filter(|g| matches!(g, Gate::Cxor { .. })).count()
    }

    pub fn count_t(&self) -> usize {
        4 * self.count_and()
    }

    pub fn has_raw_and(&self) -> bool {
        self.all_gates()
            .any(|g| matches!(g, Gate::And { .. } | Gate::AndDag { .. }))
    }

    /// Fixed qubit numbering used by the simulator lowering.
    pub fn qubit_of(&self, w: Wire) -> QubitId {
        let k = self.k as u32;
        let m = self.m as u32;
        match w {
            Wire::Ctl => QubitId(0),
            Wire::Addr(i) => QubitId(i as u32),
            Wire::Data(j) => QubitId(k + 1 + j as u32),
            Wire::Helper(t) => QubitId(k + 1 + m + t as u32),
        }
    }

    /// The externally prepared operand wires: control (if any), addresses,
    /// data register.
    pub fn operand_qubits(&self) -> Vec<QubitId> {
        let mut v = Vec::new();
        if self.controlled {
            v.push(self.qubit_of(Wire::Ctl));
        }
        for i in 1..=self.k {
            v.push(self.qubit_of(Wire::Addr(i as u8)));
        }
        for j in 0..self.m {
            v.push(self.qubit_of(Wire::Data(j as u8)));
        }
        v
    }

    /// Lowers to simulator ops. Helper wires are prepared |0⟩ at first use
    /// (and re-prepared after being measured out); operand wires are assumed
    /// prepared by the caller.
    pub fn to_sim_ops(&self) -> Vec<SimOp> {
        let mut ops = Vec::new();
        let mut live_helpers: Vec<Wire> = Vec::new();
        let mut touch = |ops: &mut Vec<SimOp>, live: &mut Vec<Wire>, w: Wire, me: &Self| {
            if matches!(w, Wire::Helper(_)) && !live.contains(&w) {
                ops.push(SimOp::Prep { q: me.qubit_of(w), state: PrepState::Zero });
                live.push(w);
            }
        };
        for g in self.all_gates() {
            match *g {
                Gate::X { w, cond } => ops.push(SimOp::Gate {
                    kind: GateKind::X,
                    qs: vec![self.qubit_of(w)],
                    cond: cond.map(|b| Cond::bit(BitId(b as u32))),
                }),
                Gate::Z { w, cond } => ops.push(SimOp::Gate {
                    kind: GateKind::Z,
                    qs: vec![self.qubit_of(w)],
                    cond: cond.map(|b| Cond::bit(BitId(b as u32))),
                }),
                Gate::S { w } => ops.push(SimOp::Gate {
                    kind: GateKind::S,
                    qs: vec![self.qubit_of(w)],
                    cond: None,
                }),
                Gate::Sdg { w } => ops.push(SimOp::Gate {
                    kind: GateKind::Sdg,
                    qs: vec![self.qubit_of(w)],
                    cond: None,
                }),
                Gate::And { a, na, b, nb, out } => {
                    touch(&mut ops, &mut live_helpers, out, self);
                    ops.push(SimOp::Gate {
                        kind: GateKind::Ccx { neg1: na, neg2: nb },
                        qs: vec![self.qubit_of(a), self.qubit_of(b), self.qubit_of(out)],
                        cond: None,
                    });
                }
                Gate::AndDag { a, na, b, nb, out } => {
                    // inverse Toffoli = Toffoli
                    ops.push(SimOp::Gate {
                        kind: GateKind::Ccx { neg1: na, neg2: nb },
                        qs: vec![self.qubit_of(a), self.qubit_of(b), self.qubit_of(out)],
                        cond: None,
                    });
                    // helper is back to |0⟩; retire it so ancilla checks see blank
                    ops.push(SimOp::MeasOut {
                        q: self.qubit_of(out),
                        basis: Pauli::Z,
                        out: BitId(u32::MAX - ops.len() as u32),
                        cond: None,
                    });
                    live_helpers.retain(|&w| w != out);
                }
                Gate::Ccix { a, na, b, nb, out } => {
                    touch(&mut ops, &mut live_helpers, out, self);
                    ops.push(SimOp::Gate {
                        kind: GateKind::CCiX { neg1: na, neg2: nb },
                        qs: vec![self.qubit_of(a), self.qubit_of(b), self.qubit_of(out)],
                        cond: None,
                    });
                }
                Gate::Cnot { ctrl, tgt } => {
                    touch(&mut ops, &mut live_helpers, tgt, self);
                    ops.push(SimOp::Gate {
                        kind: GateKind::Cx,
                        qs: vec![self.qubit_of(ctrl), self.qubit_of(tgt)],
                        cond: None,
                    });
                }
                Gate::Cxor { ctrl, neg, mask, s } => {
                    let c = self.qubit_of(ctrl);
                    if neg {
                        ops.push(SimOp::Gate { kind: GateKind::X, qs: vec![c], cond: None });
                    }
                    for j in 0..self.m {
                        if mask >> j & 1 == 1 {
                            ops.push(SimOp::Gate {
                                kind: GateKind::Cx,
                                qs: vec![c, self.qubit_of(Wire::Data(j as u8))],
                                cond: None,
                            });
                        }
                    }
                    if s {
                        ops.push(SimOp::Gate { kind: GateKind::S, qs: vec![c], cond: None });
                    }
                    if neg {
                        ops.push(SimOp::Gate { kind: GateKind::X, qs: vec![c], cond: None });
                    }
                }
                Gate::Cz { a, b, cond } => ops.push(SimOp::Gate {
                    kind: GateKind::Cz,
                    qs: vec![self.qubit_of(a), self.qubit_of(b)],
                    cond: cond.map(|bb| Cond::bit(BitId(bb as u32))),
                }),
                Gate::MeasX { w, bit } => {
                    ops.push(SimOp::MeasOut {
                        q: self.qubit_of(w),
                        basis: Pauli::X,
                        out: BitId(bit as u32),
                        cond: None,
                    });
                    live_helpers.retain(|&x| x != w);
                }
                Gate::MeasZ { w, bit } => {
                    ops.push(SimOp::MeasOut {
                        q: self.qubit_of(w),
                        basis: Pauli::Z,
                        out: BitId(bit as u32),
                        cond: None,
                    });
                    live_helpers.retain(|&x| x != w);
                }
            }
        }
        ops
    }

    /// Line-oriented text dump; requires a layer assignment. Prologue gates
    /// print as layer 0 and epilogue gates as layer n+1.
    pub fn dump(&self) -> Result<String, CircuitError> {
        let layers = self.layers.as_ref().ok_or(CircuitError::NoLayers)?;
        let mut s = format!(
            "# k={} m={} ctl={} zipper={} helpers={} layers={}\n",
            self.k,
            self.m,
            self.controlled as u8,
            self.zipper as u8,
            self.n_helpers,
            layers.len()
        );
        for g in &self.prologue {
            s.push_str(&format_gate(0, g, self.m));
        }
        for (li, layer) in layers.iter().enumerate() {
            for &gi in layer {
                s.push_str(&format_gate(li + 1, &self.gates[gi], self.m));
            }
        }
        for g in &self.epilogue {
            s.push_str(&format_gate(layers.len() + 1, g, self.m));
        }
        Ok(s)
    }

    pub fn parse(text: &str) -> Result<Self, CircuitError> {
        let mut meta: Option<(usize, usize, bool, bool, usize, usize)> = None;
        let mut prologue = Vec::new();
        let mut epilogue = Vec::new();
        let mut layered: Vec<(usize, Gate)> = Vec::new();
        for (ln0, raw) in text.lines().enumerate() {
            let ln = ln0 + 1;
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('#') {
                if meta.is_none() && rest.contains("k=") {
                    meta = Some(parse_meta(rest).map_err(|e| CircuitError::Parse(ln, e))?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (layer, gate) = parse_gate(line).map_err(|e| CircuitError::Parse(ln, e))?;
            let n_layers = meta.map(|m| m.5).unwrap_or(usize::MAX);
            if layer == 0 {
                prologue.push(gate);
            } else if layer == n_layers + 1 {
                epilogue.push(gate);
            } else {
                layered.push((layer, gate));
            }
        }
        let (k, m, controlled, zipper, n_helpers, n_layers) =
            meta.ok_or(CircuitError::Parse(0, "missing metadata comment".into()))?;
        let mut gates = Vec::new();
        let mut layers = vec![Vec::new(); n_layers];
        for (layer, gate) in layered {
            if layer > n_layers {
                return Err(CircuitError::Parse(0, format!("layer {layer} out of range")));
            }
            layers[layer - 1].push(gates.len());
            gates.push(gate);
        }
        Ok(LogicalCircuit {
            k,
            m,
            controlled,
            zipper,
            n_helpers,
            prologue,
            gates,
            epilogue,
            layers: Some(layers),
        })
    }
}

fn parse_meta(rest: &str) -> Result<(usize, usize, bool, bool, usize, usize), String> {
    let mut k = None;
    let mut m = None;
    let mut ctl = None;
    let mut zipper = None;
    let mut helpers = None;
    let mut layers = None;
    for tok in rest.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| format!("bad meta token {tok}"))?;
        let v: usize = val.parse().map_err(|_| format!("bad meta value {tok}"))?;
        match key {
            "k" => k = Some(v),
            "m" => m = Some(v),
            "ctl" => ctl = Some(v != 0),
            "zipper" => zipper = Some(v != 0),
            "helpers" => helpers = Some(v),
            "layers" => layers = Some(v),
            _ => return Err(format!("unknown meta key {key}")),
        }
    }
    Ok((
        k.ok_or("missing k")?,
        m.ok_or("missing m")?,
        ctl.ok_or("missing ctl")?,
        zipper.ok_or("missing zipper")?,
        helpers.ok_or("missing helpers")?,
        layers.ok_or("missing layers")?,
    ))
}

fn fmt_cw(w: Wire, neg: bool) -> String {
    if neg {
        format!("!{w}")
    } else {
        w.to_string()
    }
}

fn fmt_mask(mask: u64, m: usize) -> String {
    let elems: Vec<String> =
        (0..m).filter(|j| mask >> j & 1 == 1).map(|j| format!("d{j}")).collect();
    if elems.is_empty() {
        "-".to_string()
    } else {
        elems.join(",")
    }
}

fn format_gate(layer: usize, g: &Gate, m: usize) -> String {
    let body = match *g {
        Gate::X { w, cond } => cond_str(format!("X {w}"), cond),
        Gate::Z { w, cond } => cond_str(format!("Z {w}"), cond),
        Gate::S { w } => format!("S {w}"),
        Gate::Sdg { w } => format!("SDG {w}"),
        Gate::And { a, na, b, nb, out } => {
            format!("AND {} {} {}", fmt_cw(a, na), fmt_cw(b, nb), out)
        }
        Gate::AndDag { a, na, b, nb, out } => {
            format!("ANDDAG {} {} {}", fmt_cw(a, na), fmt_cw(b, nb), out)
        }
        Gate::Ccix { a, na, b, nb, out } => {
            format!("CCIX {} {} {}", fmt_cw(a, na), fmt_cw(b, nb), out)
        }
        Gate::Cnot { ctrl, tgt } => format!("CNOT {ctrl} {tgt}"),
        Gate::Cxor { ctrl, neg, mask, s } => {
            let kind = if s { "CXORS" } else { "CXOR" };
            format!("{kind} {} {}", fmt_cw(ctrl, neg), fmt_mask(mask, m))
        }
        Gate::Cz { a, b, cond } => cond_str(format!("CZ {a} {b}"), cond),
        Gate::MeasX { w, bit } => format!("MEASX {w} b{bit}"),
        Gate::MeasZ { w, bit } => format!("MEASZ {w} b{bit}"),
    };
    format!("LAYER {layer} {body}\n")
}

fn cond_str(base: String, cond: Option<MBit>) -> String {
    match cond {
        Some(b) => format!("{base} IF b{b}"),
        None => base,
    }
}

fn parse_cw(tok: &str) -> Result<(Wire, bool), String> {
    let (neg, t) = match tok.strip_prefix('!') {
        Some(r) => (true, r),
        None => (false, tok),
    };
    Wire::parse(t).map(|w| (w, neg)).ok_or_else(|| format!("bad wire {tok}"))
}

fn parse_bit(tok: &str) -> Result<MBit, String> {
    tok.strip_prefix('b')
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| format!("bad bit {tok}"))
}

fn parse_gate(line: &str) -> Result<(usize, Gate), String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 3 || toks[0] != "LAYER" {
        return Err("expected LAYER <n> <KIND> ...".into());
    }
    let layer: usize = toks[1].parse().map_err(|_| format!("bad layer {}", toks[1]))?;
    let (args, cond) = match toks.iter().position(|&t| t == "IF") {
        Some(p) => (&toks[3..p], Some(parse_bit(toks[p + 1])?)),
        None => (&toks[3..], None),
    };
    let need = |n: usize| -> Result<(), String> {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("{} expects {n} operands", toks[2]))
        }
    };
    let pos = |t: &str| -> Result<Wire, String> {
        let (w, neg) = parse_cw(t)?;
        if neg {
            Err(format!("unexpected negation on {t}"))
        } else {
            Ok(w)
        }
    };
    let g = match toks[2] {
        "X" => {
            need(1)?;
            Gate::X { w: pos(args[0])?, cond }
        }
        "Z" => {
            need(1)?;
            Gate::Z { w: pos(args[0])?, cond }
        }
        "S" => {
            need(1)?;
            Gate::S { w: pos(args[0])? }
        }
        "SDG" => {
            need(1)?;
            Gate::Sdg { w: pos(args[0])? }
        }
        "AND" | "ANDDAG" | "CCIX" => {
            need(3)?;
            let (a, na) = parse_cw(args[0])?;
            let (b, nb) = parse_cw(args[1])?;
            let out = pos(args[2])?;
            match toks[2] {
                "AND" => Gate::And { a, na, b, nb, out },
                "ANDDAG" => Gate::AndDag { a, na, b, nb, out },
                _ => Gate::Ccix { a, na, b, nb, out },
            }
        }
        "CNOT" => {
            need(2)?;
            Gate::Cnot { ctrl: pos(args[0])?, tgt: pos(args[1])? }
        }
        "CXOR" | "CXORS" => {
            need(2)?;
            let (ctrl, neg) = parse_cw(args[0])?;
            let mut mask = 0u64;
            if args[1] != "-" {
                for t in args[1].split(',') {
                    match Wire::parse(t) {
                        Some(Wire::Data(j)) => mask |= 1 << j,
                        _ => return Err(format!("bad mask element {t}")),
                    }
                }
            }
            Gate::Cxor { ctrl, neg, mask, s: toks[2] == "CXORS" }
        }
        "CZ" => {
            need(2)?;
            Gate::Cz { a: pos(args[0])?, b: pos(args[1])?, cond }
        }
        "MEASX" => {
            need(2)?;
            Gate::MeasX { w: pos(args[0])?, bit: parse_bit(args[1])? }
        }
        "MEASZ" => {
            need(2)?;
            Gate::MeasZ { w: pos(args[0])?, bit: parse_bit(args[1])? }
        }
        other => return Err(format!("unknown gate kind {other}")),
    };
    Ok((layer, g))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_parse_round_trip() {
        let c = LogicalCircuit {
            k: 2,
            m: 3,
            controlled: true,
            zipper: false,
            n_helpers: 2,
            prologue: vec![Gate::Cnot { ctrl: Wire::Addr(2), tgt: Wire::Helper(1) }],
            gates: vec![
                Gate::Ccix {
                    a: Wire::Ctl,
                    na: false,
                    b: Wire::Addr(1),
                    nb: true,
                    out: Wire::Helper(0),
                },
                Gate::Cxor { ctrl: Wire::Helper(0), neg: false, mask: 0b101, s: true },
                Gate::Cxor { ctrl: Wire::Helper(0), neg: false, mask: 0, s: false },
                Gate::MeasX { w: Wire::Helper(0), bit: 0 },
                Gate::Cz { a: Wire::Ctl, b: Wire::Addr(1), cond: Some(0) },
            ],
            epilogue: vec![Gate::X { w: Wire::Addr(1), cond: Some(0) }],
            layers: Some(vec![vec![0], vec![1], vec![2, 3, 4]]),
        };
        let text = c.dump().unwrap();
        let c2 = LogicalCircuit::parse(&text).unwrap();
        assert_eq!(c, c2);
    }

    #[test]
    fn dump_needs_layers() {
        let c = LogicalCircuit {
            k: 0,
            m: 1,
            controlled: false,
            zipper: false,
            n_helpers: 0,
            prologue: vec![],
            gates: vec![Gate::X { w: Wire::Data(0), cond: None }],
            epilogue: vec![],
            layers: None,
        };
        assert!(matches!(c.dump(), Err(CircuitError::NoLayers)));
    }
}
