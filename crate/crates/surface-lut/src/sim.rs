//! Dense statevector simulation with projective measurements and classical
//! feedback.
//!
//! States are kept as a product of entangled factors; operations merge factors
//! on demand and single-qubit measurements split qubits back out. This keeps
//! the live dimension bounded by the largest entangled group rather than the
//! number of non-blank cells, which is what makes replaying grid programs
//! affordable on a desk machine.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Hard cap on the size of one entangled factor.
pub const MAX_FACTOR_QUBITS: usize = 24;

/// Branches below this probability are dropped as numerically zero.
const BRANCH_EPS: f64 = 1e-18;

pub type C64 = Complex64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QubitId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrepState {
    Zero,
    Plus,
    /// T|+> = (|0> + e^{i pi/4}|1>)/sqrt(2)
    MagicT,
    /// S|+> = (|0> + i|1>)/sqrt(2)
    MagicS,
    /// Z S|+> = (|0> - i|1>)/sqrt(2), used for S-dagger injection
    MagicSdg,
    /// H S|+>, the X-basis phase state consumed by the CCiX gadget
    MagicSx,
}

impl PrepState {
    pub fn amps(self) -> [C64; 2] {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let h = C64::new(r, 0.0);
        match self {
            PrepState::Zero => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            PrepState::Plus => [h, h],
            PrepState::MagicT => {
                let p = C64::from_polar(r, std::f64::consts::FRAC_PI_4);
                [h, p]
            }
            PrepState::MagicS => [h, C64::new(0.0, r)],
            PrepState::MagicSdg => [h, C64::new(0.0, -r)],
            PrepState::MagicSx => {
                // H applied to (|0> + i|1>)/sqrt(2)
                let a = C64::new(0.5, 0.5);
                let b = C64::new(0.5, -0.5);
                [a, b]
            }
        }
    }
}

/// Classical parity condition: fires when XOR of `bits` equals `value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cond {
    pub bits: Vec<BitId>,
    pub value: bool,
}

impl Cond {
    pub fn bit(b: BitId) -> Self {
        Cond { bits: vec![b], value: true }
    }
    pub fn bit_clear(b: BitId) -> Self {
        Cond { bits: vec![b], value: false }
    }
    pub fn parity(bits: Vec<BitId>) -> Self {
        Cond { bits, value: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    /// CNOT: qs = [control, target]
    Cx,
    /// CZ: qs = [a, b]
    Cz,
    /// Toffoli with optional negated controls: qs = [c1, c2, target]
    Ccx { neg1: bool, neg2: bool },
    /// Doubly controlled iX: |11>|t> -> i |11> X|t>
    CCiX { neg1: bool, neg2: bool },
}

#[derive(Clone, Debug)]
pub enum SimOp {
    Prep { q: QubitId, state: PrepState },
    Gate { kind: GateKind, qs: Vec<QubitId>, cond: Option<Cond> },
    /// Joint Pauli-product measurement; qubits stay allocated.
    MeasPauli { targets: Vec<(QubitId, Pauli)>, out: BitId, cond: Option<Cond> },
    /// Single-qubit measurement that retires the qubit (cell becomes blank).
    MeasOut { q: QubitId, basis: Pauli, out: BitId, cond: Option<Cond> },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("entangled factor would exceed {MAX_FACTOR_QUBITS} qubits")]
    Capacity,
    #[error("qubit {0:?} is not allocated")]
    UnknownQubit(QubitId),
    #[error("qubit {0:?} is already allocated")]
    DoubleAlloc(QubitId),
    #[error("classical bit {0:?} is unbound")]
    UnboundBit(BitId),
    #[error("classical bit {0:?} written twice")]
    DoubleBit(BitId),
    #[error("state norm drifted: {0}")]
    NormDrift(f64),
}

#[derive(Clone, Copy, Debug)]
struct PauliAction {
    mask: usize,
    zmask: usize,
    ymask: usize,
}

impl PauliAction {
    fn phase(&self, idx: usize) -> C64 {
        // Z sites: sign from bits under zmask. Y|0> = i|1>, Y|1> = -i|0>:
        // overall factor i per Y site, times (-1) per set Y bit.
        let mut ph = if (idx & self.zmask).count_ones() % 2 == 1 {
            -C64::new(1.0, 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        for _ in 0..self.ymask.count_ones() {
            ph *= C64::new(0.0, 1.0);
        }
        if (idx & self.ymask).count_ones() % 2 == 1 {
            ph = -ph;
        }
        ph
    }
}

#[derive(Clone, Debug)]
struct Factor {
    qubits: Vec<QubitId>,
    amps: Vec<C64>,
}

impl Factor {
    fn n(&self) -> usize {
        self.qubits.len()
    }
}

/// A pure state over dynamically allocated qubits plus a classical bit store.
#[derive(Clone, Debug, Default)]
pub struct QState {
    factors: Vec<Factor>,
    loc: HashMap<QubitId, usize>,
    pub bits: BTreeMap<BitId, bool>,
}

impl QState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a state holding `amps` over `qubits` (qubit 0 = least
    /// significant bit of the amplitude index).
    pub fn from_amps(qubits: &[QubitId], amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), 1 << qubits.len());
        let mut st = QState::new();
        for &q in qubits {
            st.loc.insert(q, 0);
        }
        st.factors.push(Factor { qubits: qubits.to_vec(), amps });
        st
    }

    pub fn alloc(&mut self, q: QubitId, amps: [C64; 2]) -> Result<(), SimError> {
        if self.loc.contains_key(&q) {
            return Err(SimError::DoubleAlloc(q));
        }
        let idx = self.factors.len();
        self.factors.push(Factor { qubits: vec![q], amps: amps.to_vec() });
        self.loc.insert(q, idx);
        Ok(())
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.loc.contains_key(&q)
    }

    pub fn live_qubits(&self) -> Vec<QubitId> {
        let mut v: Vec<_> = self.loc.keys().copied().collect();
        v.sort();
        v
    }

    fn factor_of(&self, q: QubitId) -> Result<usize, SimError> {
        self.loc.get(&q).copied().ok_or(SimError::UnknownQubit(q))
    }

    /// Merges the factors containing `qs` into one; returns its index.
    fn merge(&mut self, qs: &[QubitId]) -> Result<usize, SimError> {
        let mut fids: Vec<usize> = Vec::new();
        for &q in qs {
            let f = self.factor_of(q)?;
            if !fids.contains(&f) {
                fids.push(f);
            }
        }
        let mut dst = fids[0];
        for &src in &fids[1..] {
            let total = self.factors[dst].n() + self.factors[src].n();
            if total > MAX_FACTOR_QUBITS {
                return Err(SimError::Capacity);
            }
            let b = std::mem::replace(
                &mut self.factors[src],
                Factor { qubits: Vec::new(), amps: Vec::new() },
            );
            let a = &mut self.factors[dst];
            let na = a.n();
            let mut amps = vec![C64::new(0.0, 0.0); 1 << total];
            for (ib, &bb) in b.amps.iter().enumerate() {
                if bb == C64::new(0.0, 0.0) {
                    continue;
                }
                for (ia, &aa) in a.amps.iter().enumerate() {
                    amps[ia | (ib << na)] = aa * bb;
                }
            }
            a.amps = amps;
            for q in b.qubits {
                a.qubits.push(q);
                self.loc.insert(q, dst);
            }
        }
        // tombstoned source factors stay in place with empty payloads
        Ok(dst)
    }

    fn pos(&self, fid: usize, q: QubitId) -> usize {
        self.factors[fid].qubits.iter().position(|&x| x == q).unwrap()
    }

    fn cond_met(&self, cond: &Option<Cond>) -> Result<bool, SimError> {
        match cond {
            None => Ok(true),
            Some(c) => {
                let mut p = false;
                for b in &c.bits {
                    p ^= *self.bits.get(b).ok_or(SimError::UnboundBit(*b))?;
                }
                Ok(p == c.value)
            }
        }
    }

    fn apply_matrix(&mut self, qs: &[QubitId], m: &[C64]) -> Result<(), SimError> {
        let k = qs.len();
        assert_eq!(m.len(), 1 << (2 * k));
        let fid = self.merge(qs)?;
        let positions: Vec<usize> = qs.iter().map(|&q| self.pos(fid, q)).collect();
        let f = &mut self.factors[fid];
        let n = f.n();
        let mut scratch = vec![C64::new(0.0, 0.0); 1 << k];
        // iterate over all base indices with target positions zeroed
        let masks: Vec<usize> = positions.iter().map(|&p| 1usize << p).collect();
        let full = 1usize << n;
        let sel: usize = masks.iter().sum();
        let mut base = 0usize;
        loop {
            if base & sel == 0 {
                for r in 0..(1 << k) {
                    let mut idx = base;
                    for (j, &mk) in masks.iter().enumerate() {
                        if r >> j & 1 == 1 {
                            idx |= mk;
                        }
                    }
                    scratch[r] = f.amps[idx];
                }
                for r in 0..(1 << k) {
                    let mut acc = C64::new(0.0, 0.0);
                    for c in 0..(1 << k) {
                        acc += m[(r << k) | c] * scratch[c];
                    }
                    let mut idx = base;
                    for (j, &mk) in masks.iter().enumerate() {
                        if r >> j & 1 == 1 {
                            idx |= mk;
                        }
                    }
                    f.amps[idx] = acc;
                }
            }
            base += 1;
            if base >= full {
                break;
            }
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, kind: GateKind, qs: &[QubitId]) -> Result<(), SimError> {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match kind {
            GateKind::X => self.apply_matrix(qs, &[z, o, o, z]),
            GateKind::Y => self.apply_matrix(qs, &[z, -i, i, z]),
            GateKind::Z => self.apply_matrix(qs, &[o, z, z, -o]),
            GateKind::H => self.apply_matrix(qs, &[r, r, r, -r]),
            GateKind::S => self.apply_matrix(qs, &[o, z, z, i]),
            GateKind::Sdg => self.apply_matrix(qs, &[o, z, z, -i]),
            GateKind::T => {
                let t = C64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
                self.apply_matrix(qs, &[o, z, z, t])
            }
            GateKind::Tdg => {
                let t = C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4);
                self.apply_matrix(qs, &[o, z, z, t])
            }
            GateKind::Cx => {
                let mut m = vec![z; 16];
                // qs = [control, target]; index bit 0 = control, bit 1 = target
                for c in 0..2usize {
                    for t in 0..2usize {
                        let col = c | (t << 1);
                        let row = c | ((t ^ c) << 1);
                        m[(row << 2) | col] = o;
                    }
                }
                self.apply_matrix(qs, &m)
            }
            GateKind::Cz => {
                let mut m = vec![z; 16];
                for a in 0..2usize {
                    for b in 0..2usize {
                        let col = a | (b << 1);
                        m[(col << 2) | col] = if a == 1 && b == 1 { -o } else { o };
                    }
                }
                self.apply_matrix(qs, &m)
            }
            GateKind::Ccx { neg1, neg2 } => {
                let mut m = vec![z; 64];
                for c1 in 0..2usize {
                    for c2 in 0..2usize {
                        for t in 0..2usize {
                            let col = c1 | (c2 << 1) | (t << 2);
                            let on = (c1 == usize::from(!neg1)) && (c2 == usize::from(!neg2));
                            let row = c1 | (c2 << 1) | ((t ^ usize::from(on)) << 2);
                            m[(row << 3) | col] = o;
                        }
                    }
                }
                self.apply_matrix(qs, &m)
            }
            GateKind::CCiX { neg1, neg2 } => {
                let mut m = vec![z; 64];
                for c1 in 0..2usize {
                    for c2 in 0..2usize {
                        for t in 0..2usize {
                            let col = c1 | (c2 << 1) | (t << 2);
                            let on = (c1 == usize::from(!neg1)) && (c2 == usize::from(!neg2));
                            let row = c1 | (c2 << 1) | ((t ^ usize::from(on)) << 2);
                            m[(row << 3) | col] = if on { i } else { o };
                        }
                    }
                }
                self.apply_matrix(qs, &m)
            }
        }
    }

    /// Probability that the Pauli product over `targets` yields outcome 0
    /// (the +1 eigenvalue).
    pub fn prob_pauli_zero(&mut self, targets: &[(QubitId, Pauli)]) -> Result<f64, SimError> {
        let qs: Vec<QubitId> = targets.iter().map(|t| t.0).collect();
        let fid = self.merge(&qs)?;
        let act = self.pauli_action(fid, targets);
        let f = &self.factors[fid];
        let mut overlap = C64::new(0.0, 0.0);
        for (idx, &a) in f.amps.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let j = idx ^ act.mask;
            overlap += a.conj() * act.phase(idx) * f.amps[j];
        }
        Ok((1.0 + overlap.re) / 2.0)
    }

    /// Pauli-string action on a factor: P|idx> = phase(idx) |idx ^ mask>.
    fn pauli_action(&self, fid: usize, targets: &[(QubitId, Pauli)]) -> PauliAction {
        let mut mask = 0usize;
        let mut zmask = 0usize;
        let mut ymask = 0usize;
        for &(q, p) in targets {
            let pos = self.pos(fid, q);
            match p {
                Pauli::X => mask |= 1 << pos,
                Pauli::Z => zmask |= 1 << pos,
                Pauli::Y => {
                    mask |= 1 << pos;
                    ymask |= 1 << pos;
                }
            }
        }
        PauliAction { mask, zmask, ymask }
    }

    /// Projects onto the given outcome of the Pauli product and renormalizes.
    /// Returns the probability of that outcome.
    pub fn project_pauli(
        &mut self,
        targets: &[(QubitId, Pauli)],
        outcome: bool,
    ) -> Result<f64, SimError> {
        let qs: Vec<QubitId> = targets.iter().map(|t| t.0).collect();
        let fid = self.merge(&qs)?;
        let act = self.pauli_action(fid, targets);
        let sign = if outcome { -1.0 } else { 1.0 };
        let old = self.factors[fid].amps.clone();
        let f = &mut self.factors[fid];
        let mut norm2 = 0.0;
        for (idx, a) in f.amps.iter_mut().enumerate() {
            let j = idx ^ act.mask;
            // P maps j -> idx with phase(j); project: (old + s P old) / 2
            let contrib = (old[idx] + act.phase(j) * C64::new(sign, 0.0) * old[j]) * 0.5;
            *a = contrib;
            norm2 += contrib.norm_sqr();
        }
        if norm2 > BRANCH_EPS {
            let s = 1.0 / norm2.sqrt();
            for a in &mut f.amps {
                *a *= s;
            }
        }
        Ok(norm2)
    }

    /// Removes a qubit that is in a product eigenstate after measurement.
    /// `keep_bit` is the computational-basis value it was left in (after
    /// basis rotation back to Z).
    fn drop_qubit(&mut self, q: QubitId, basis: Pauli, outcome: bool) -> Result<(), SimError> {
        // rotate measured eigenstate to |0>
        match basis {
            Pauli::Z => {
                if outcome {
                    self.apply_gate(GateKind::X, &[q])?;
                }
            }
            Pauli::X => {
                if outcome {
                    self.apply_gate(GateKind::Z, &[q])?;
                }
                self.apply_gate(GateKind::H, &[q])?;
            }
            Pauli::Y => {
                if outcome {
                    self.apply_gate(GateKind::Z, &[q])?;
                }
                self.apply_gate(GateKind::Sdg, &[q])?;
                self.apply_gate(GateKind::H, &[q])?;
            }
        }
        let fid = self.factor_of(q)?;
        let p = self.pos(fid, q);
        let f = &mut self.factors[fid];
        let n = f.n();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << (n - 1)];
        let low = (1usize << p) - 1;
        for idx in 0..(1usize << n) {
            if idx >> p & 1 == 1 {
                continue;
            }
            let tgt = (idx & low) | ((idx >> (p + 1)) << p);
            amps[tgt] = f.amps[idx];
        }
        f.amps = amps;
        f.qubits.remove(p);
        self.loc.remove(&q);
        if f.qubits.is_empty() {
            // scalar factor: fold global phase away by dropping it (norm 1)
            self.factors[fid] = Factor { qubits: Vec::new(), amps: Vec::new() };
        }
        Ok(())
    }

    pub fn record_bit(&mut self, out: BitId, v: bool) -> Result<(), SimError> {
        if self.bits.insert(out, v).is_some() {
            return Err(SimError::DoubleBit(out));
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        let mut n = 1.0;
        for f in &self.factors {
            if f.amps.is_empty() {
                continue;
            }
            n *= f.amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        }
        n
    }

    /// Assembles the dense statevector over exactly `order` (least significant
    /// first). Errors if other qubits are still live.
    pub fn statevector(&self, order: &[QubitId]) -> Result<Vec<C64>, String> {
        let live = self.live_qubits();
        for q in &live {
            if !order.contains(q) {
                return Err(format!("ancilla qubit {q:?} still live"));
            }
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        let mut have: Vec<QubitId> = Vec::new();
        for f in &self.factors {
            if f.amps.is_empty() {
                continue;
            }
            let na = have.len();
            let mut next = vec![C64::new(0.0, 0.0); amps.len() * f.amps.len()];
            for (ib, &bb) in f.amps.iter().enumerate() {
                for (ia, &aa) in amps.iter().enumerate() {
                    next[ia | (ib << na)] = aa * bb;
                }
            }
            amps = next;
            have.extend(f.qubits.iter().copied());
        }
        // missing qubits (never allocated or already retired): treat as |0>
        for q in order {
            if !have.contains(q) {
                have.push(*q);
                let mut next = vec![C64::new(0.0, 0.0); amps.len() * 2];
                next[..amps.len()].copy_from_slice(&amps);
                amps = next;
            }
        }
        // permute `have` into `order`
        let n = order.len();
        let mut perm = vec![0usize; n];
        for (j, q) in have.iter().enumerate() {
            perm[j] = order.iter().position(|x| x == q).unwrap();
        }
        let mut out = vec![C64::new(0.0, 0.0); 1 << n];
        for (idx, &a) in amps.iter().enumerate() {
            let mut t = 0usize;
            for (j, &pj) in perm.iter().enumerate() {
                if idx >> j & 1 == 1 {
                    t |= 1 << pj;
                }
            }
            out[t] = a;
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub state: QState,
    pub probability: f64,
    pub outcomes: Vec<(BitId, bool)>,
}

#[derive(Clone, Debug)]
pub enum BranchPolicy {
    All,
    Sampled { seed: u64, shots: u32 },
}

/// Runs `ops` from `init`, enumerating or sampling measurement branches.
pub fn run(ops: &[SimOp], init: &QState, policy: &BranchPolicy) -> Result<Vec<Branch>, SimError> {
    match policy {
        BranchPolicy::All => {
            let mut acc = Vec::new();
            run_all(ops, 0, init.clone(), 1.0, Vec::new(), &mut acc)?;
            Ok(acc)
        }
        BranchPolicy::Sampled { seed, shots } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut seen: Vec<Vec<(BitId, bool)>> = Vec::new();
            let mut acc = Vec::new();
            for _ in 0..*shots {
                let b = run_sampled(ops, init.clone(), &mut rng)?;
                if !seen.contains(&b.outcomes) {
                    seen.push(b.outcomes.clone());
                    acc.push(b);
                }
            }
            Ok(acc)
        }
    }
}

fn apply_nonmeas(st: &mut QState, op: &SimOp) -> Result<(), SimError> {
    match op {
        SimOp::Prep { q, state } => st.alloc(*q, state.amps()),
        SimOp::Gate { kind, qs, cond } => {
            if st.cond_met(cond)? {
                st.apply_gate(*kind, qs)?;
            }
            Ok(())
        }
        _ => unreachable!(),
    }
}

const DET_EPS: f64 = 1e-12;

fn run_all(
    ops: &[SimOp],
    mut i: usize,
    mut st: QState,
    mut prob: f64,
    mut outs: Vec<(BitId, bool)>,
    acc: &mut Vec<Branch>,
) -> Result<(), SimError> {
    while i < ops.len() {
        match &ops[i] {
            SimOp::MeasPauli { targets, out, cond } => {
                if st.cond_met(cond)? {
                    let p0 = st.prob_pauli_zero(targets)?;
                    if p0 > DET_EPS && 1.0 - p0 > DET_EPS {
                        let mut other = st.clone();
                        other.project_pauli(targets, true)?;
                        other.record_bit(*out, true)?;
                        let mut o2 = outs.clone();
                        o2.push((*out, true));
                        run_all(ops, i + 1, other, prob * (1.0 - p0), o2, acc)?;
                    }
                    let o = 1.0 - p0 <= DET_EPS;
                    // take the (more) likely-deterministic branch inline
                    let taken = !o && p0 <= DET_EPS;
                    let outcome = taken;
                    let p = st.project_pauli(targets, outcome)?;
                    st.record_bit(*out, outcome)?;
                    outs.push((*out, outcome));
                    prob *= p;
                    if prob <= BRANCH_EPS {
                        return Ok(());
                    }
                } else {
                    // measurement skipped: bit still must exist for later conds
                    st.record_bit(*out, false)?;
                    outs.push((*out, false));
                }
                i += 1;
            }
            SimOp::MeasOut { q, basis, out, cond } => {
                if st.cond_met(cond)? {
                    let targets = [(*q, *basis)];
                    let p0 = st.prob_pauli_zero(&targets)?;
                    if p0 > DET_EPS && 1.0 - p0 > DET_EPS {
                        let mut other = st.clone();
                        other.project_pauli(&targets, true)?;
                        other.drop_qubit(*q, *basis, true)?;
                        other.record_bit(*out, true)?;
                        let mut o2 = outs.clone();
                        o2.push((*out, true));
                        run_all(ops, i + 1, other, prob * (1.0 - p0), o2, acc)?;
                    }
                    let outcome = p0 <= DET_EPS;
                    let p = st.project_pauli(&targets, outcome)?;
                    st.drop_qubit(*q, *basis, outcome)?;
                    st.record_bit(*out, outcome)?;
                    outs.push((*out, outcome));
                    prob *= p;
                    if prob <= BRANCH_EPS {
                        return Ok(());
                    }
                } else {
                    st.record_bit(*out, false)?;
                    outs.push((*out, false));
                }
                i += 1;
            }
            _ => {
                apply_nonmeas(&mut st, &ops[i])?;
                i += 1;
            }
        }
    }
    let n = st.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return Err(SimError::NormDrift(n - 1.0));
    }
    acc.push(Branch { state: st, probability: prob, outcomes: outs });
    Ok(())
}

fn run_sampled(ops: &[SimOp], mut st: QState, rng: &mut ChaCha8Rng) -> Result<Branch, SimError> {
    let mut prob = 1.0;
    let mut outs = Vec::new();
    for op in ops {
        match op {
            SimOp::MeasPauli { targets, out, cond } => {
                if st.cond_met(cond)? {
                    let p0 = st.prob_pauli_zero(targets)?;
                    let outcome = rng.gen::<f64>() >= p0;
                    let p = st.project_pauli(targets, outcome)?;
                    st.record_bit(*out, outcome)?;
                    outs.push((*out, outcome));
                    prob *= p;
                } else {
                    st.record_bit(*out, false)?;
                    outs.push((*out, false));
                }
            }
            SimOp::MeasOut { q, basis, out, cond } => {
                if st.cond_met(cond)? {
                    let targets = [(*q, *basis)];
                    let p0 = st.prob_pauli_zero(&targets)?;
                    let outcome = rng.gen::<f64>() >= p0;
                    let p = st.project_pauli(&targets, outcome)?;
                    st.drop_qubit(*q, *basis, outcome)?;
                    st.record_bit(*out, outcome)?;
                    outs.push((*out, outcome));
                    prob *= p;
                } else {
                    st.record_bit(*out, false)?;
                    outs.push((*out, false));
                }
            }
            _ => apply_nonmeas(&mut st, op)?,
        }
    }
    let n = st.norm_sqr();
    if (n - 1.0).abs() > 1e-9 {
        return Err(SimError::NormDrift(n - 1.0));
    }
    Ok(Branch { state: st, probability: prob, outcomes: outs })
}
