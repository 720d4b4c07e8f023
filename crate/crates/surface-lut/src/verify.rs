//! Channel-equivalence oracles: branch-complete comparison of an implemented
//! schedule against an ideal unitary or joint-measurement channel, and the
//! end-to-end lookup checker.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::circuit::LogicalCircuit;
use crate::sim::{
    run, BitId, BranchPolicy, Pauli, PrepState, QState, QubitId, SimError, SimOp, C64,
};
use crate::table::BitTable;

pub const TOL: f64 = 1e-9;

/// The reference side of a comparison.
pub enum Ideal {
    /// Deterministic unitary given as simulator ops on the operand qubits.
    Unitary(Vec<SimOp>),
    /// A single joint Pauli-product measurement on the operands.
    Meas(Vec<(QubitId, Pauli)>),
}

/// XOR of measurement bits (optionally inverted) that encodes the gadget's
/// reported outcome.
#[derive(Clone, Debug, Default)]
pub struct ParityExpr {
    pub bits: Vec<BitId>,
    pub invert: bool,
}

impl ParityExpr {
    pub fn eval(&self, bits: &std::collections::BTreeMap<BitId, bool>) -> Option<bool> {
        let mut p = self.invert;
        for b in &self.bits {
            p ^= *bits.get(b)?;
        }
        Some(p)
    }
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("ancilla not returned blank: {0}")]
    AncillaNotBlank(String),
    #[error("outcome parity references unbound bit")]
    BadParity,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub max_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub branches_explored: usize,
}

impl Verdict {
    fn pass(dev: f64, branches: usize) -> Self {
        Verdict { pass: true, max_deviation: dev, witness: None, branches_explored: branches }
    }
    fn fail(dev: f64, witness: String, branches: usize) -> Self {
        Verdict {
            pass: false,
            max_deviation: dev,
            witness: Some(witness),
            branches_explored: branches,
        }
    }
}

/// Maximum amplitude deviation between two states after removing global phase.
pub fn phase_free_deviation(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut imax = 0;
    for (i, x) in a.iter().enumerate() {
        if x.norm_sqr() > a[imax].norm_sqr() {
            imax = i;
        }
    }
    if a[imax].norm_sqr() < 1e-20 {
        return b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    }
    let phase = b[imax] / a[imax];
    let phase = if phase.norm() < 1e-20 {
        Complex64::new(1.0, 0.0)
    } else {
        phase / phase.norm()
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (y - phase * x).norm())
        .fold(0.0, f64::max)
}

/// Probe states over `n` qubits: every computational basis state, the uniform
/// superposition, and one seeded random-phase state — enough to pin down the
/// channel on the operands.
pub fn probe_states(n: usize, seed: u64) -> Vec<Vec<C64>> {
    let dim = 1usize << n;
    let mut probes = Vec::new();
    for x in 0..dim {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[x] = C64::new(1.0, 0.0);
        probes.push(v);
    }
    let s = 1.0 / (dim as f64).sqrt();
    probes.push(vec![C64::new(s, 0.0); dim]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    probes.push(
        (0..dim)
            .map(|_| C64::from_polar(s, rng.gen::<f64>() * std::f64::consts::TAU))
            .collect(),
    );
    probes
}

/// Compares the channel realized by `impl_ops` (over all measurement
/// branches, with corrections already part of the op stream) against `ideal`
/// on the given operand qubits. All non-operand qubits touched by `impl_ops`
/// must end blank. For measurement ideals, `outcome` names the parity of
/// implementation bits reported as the joint-measurement result.
pub fn channel_equal(
    impl_ops: &[SimOp],
    operands: &[QubitId],
    ideal: &Ideal,
    outcome: Option<&ParityExpr>,
    policy: &BranchPolicy,
) -> Result<Verdict, VerifyError> {
    let mut max_dev = 0.0f64;
    let mut branches_total = 0usize;
    for (pi, probe) in probe_states(operands.len(), 0xC0FFEE).into_iter().enumerate() {
        let init = QState::from_amps(operands, probe.clone());
        let branches = run(impl_ops, &init, policy)?;
        branches_total += branches.len();

        // reference branches: (target state, probability or None for unitary)
        let ideal_states: Vec<(Option<bool>, Vec<C64>, f64)> = match ideal {
            Ideal::Unitary(ops) => {
                let out = run(ops, &QState::from_amps(operands, probe.clone()), &BranchPolicy::All)?;
                debug_assert_eq!(out.len(), 1);
                vec![(None, out[0].state.statevector(operands).map_err(VerifyError::AncillaNotBlank)?, 1.0)]
            }
            Ideal::Meas(targets) => {
                let mut v = Vec::new();
                for oc in [false, true] {
                    let mut st = QState::from_amps(operands, probe.clone());
                    let p = st.project_pauli(targets, oc)?;
                    if p > 1e-12 {
                        v.push((
                            Some(oc),
                            st.statevector(operands).map_err(VerifyError::AncillaNotBlank)?,
                            p,
                        ));
                    }
                }
                v
            }
        };

        let mut prob_by_outcome = [0.0f64; 2];
        for br in &branches {
            let got = br
                .state
                .statevector(operands)
                .map_err(VerifyError::AncillaNotBlank)?;
            let reference = match ideal {
                Ideal::Unitary(_) => &ideal_states[0],
                Ideal::Meas(_) => {
                    let oc = outcome
                        .ok_or(VerifyError::BadParity)?
                        .eval(&br.state.bits)
                        .ok_or(VerifyError::BadParity)?;
                    prob_by_outcome[oc as usize] += br.probability;
                    match ideal_states.iter().find(|(o, _, _)| *o == Some(oc)) {
                        Some(r) => r,
                        None => {
                            return Ok(Verdict::fail(
                                1.0,
                                format!("probe {pi}: impossible outcome {}", oc as u8),
                                branches_total,
                            ))
                        }
                    }
                }
            };
            let dev = phase_free_deviation(&reference.1, &got);
            max_dev = max_dev.max(dev);
            if dev > TOL {
                return Ok(Verdict::fail(
                    dev,
                    format!("probe {pi}, outcomes {:?}", br.outcomes),
                    branches_total,
                ));
            }
        }
        if let Ideal::Meas(_) = ideal {
            if matches!(policy, BranchPolicy::All) {
                for (oc, _, p) in &ideal_states {
                    let got_p = prob_by_outcome[oc.unwrap() as usize];
                    if (got_p - p).abs() > 1e-7 {
                        return Ok(Verdict::fail(
                            (got_p - p).abs(),
                            format!("probe {pi}: outcome probability mismatch"),
                            branches_total,
                        ));
                    }
                }
            }
        }
    }
    Ok(Verdict::pass(max_dev, branches_total))
}

/// Checks |x⟩|y⟩ → |x⟩|y⊕f(x)⟩ (with the control convention for controlled
/// circuits) on every defined address, for y = 0 and one random y per
/// address, over all measurement branches.
pub fn verify_lookup(circ: &LogicalCircuit, table: &BitTable) -> Result<Verdict, VerifyError> {
    let ops = circ.to_sim_ops();
    let operands = circ.operand_qubits();
    let k = circ.k;
    let m = circ.m;
    let mut rng = ChaCha8Rng::seed_from_u64(0xFEED);
    let mut branches_total = 0usize;
    let mut max_dev = 0.0f64;
    let ctl_vals: &[u64] = if circ.controlled { &[0, 1] } else { &[1] };
    for x in 0..table.len() {
        for &c in ctl_vals {
            let ys = [0u64, rng.gen::<u64>() & ((1u64 << m) - 1)];
            for y in ys {
                // operand ordering: [c,] x1..xk, d0..d{m-1}; x1 is the MSB
                let mut idx_in = 0usize;
                let mut pos = 0;
                if circ.controlled {
                    if c == 1 {
                        idx_in |= 1 << pos;
                    }
                    pos += 1;
                }
                for i in 0..k {
                    if x >> (k - 1 - i) & 1 == 1 {
                        idx_in |= 1 << (pos + i);
                    }
                }
                pos += k;
                for j in 0..m {
                    if y >> j & 1 == 1 {
                        idx_in |= 1 << (pos + j);
                    }
                }
                let dim = 1usize << operands.len();
                let mut amps = vec![C64::new(0.0, 0.0); dim];
                amps[idx_in] = C64::new(1.0, 0.0);
                let init = QState::from_amps(&operands, amps);
                let branches = run(&ops, &init, &BranchPolicy::All)?;
                branches_total += branches.len();
                let y_out = if c == 1 { y ^ table.get(x) } else { y };
                let idx_out = (idx_in & ((1 << pos) - 1))
                    | (0..m)
                        .filter(|j| y_out >> j & 1 == 1)
                        .map(|j| 1usize << (pos + j))
                        .sum::<usize>();
                let mut want = vec![C64::new(0.0, 0.0); dim];
                want[idx_out] = C64::new(1.0, 0.0);
                for br in &branches {
                    let got = br
                        .state
                        .statevector(&operands)
                        .map_err(VerifyError::AncillaNotBlank)?;
                    let dev = phase_free_deviation(&want, &got);
                    max_dev = max_dev.max(dev);
                    if dev > TOL {
                        return Ok(Verdict::fail(
                            dev,
                            format!("x={x} c={c} y={y:#x}"),
                            branches_total,
                        ));
                    }
                }
            }
        }
    }
    Ok(Verdict::pass(max_dev, branches_total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{expand_and_gates, synth_ctl, synth_tl, synth_zipper};

    #[test]
    fn tl_identity_table() {
        let t = BitTable::from_fn(3, 3, |x| x as u64);
        let v = verify_lookup(&synth_tl(&t), &t).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn tl_expanded_branches() {
        let t = BitTable::random(2, 3, 42);
        let c = expand_and_gates(&synth_tl(&t));
        let v = verify_lookup(&c, &t).unwrap();
        assert!(v.pass, "{v:?}");
        assert!(v.branches_explored > 16, "expected measurement branching");
    }

    #[test]
    fn ctl_if_then_else() {
        let t = BitTable::from_fn(2, 2, |x| x as u64);
        let v = verify_lookup(&expand_and_gates(&synth_ctl(&t)), &t).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn zipper_matches_lookup() {
        for controlled in [false, true] {
            let t = BitTable::random(2, 2, 7);
            let c = expand_and_gates(&synth_zipper(&t, controlled).unwrap());
            let v = verify_lookup(&c, &t).unwrap();
            assert!(v.pass, "controlled={controlled} {v:?}");
        }
    }

    #[test]
    fn corrupted_mask_detected() {
        let t = BitTable::random(2, 2, 9);
        let mut c = synth_tl(&t);
        for g in &mut c.gates {
            if let crate::circuit::Gate::Cxor { mask, .. } = g {
                *mask ^= 1;
                break;
            }
        }
        let v = verify_lookup(&c, &t).unwrap();
        assert!(!v.pass);
        assert!(v.witness.is_some());
    }

    #[test]
    fn k0_pauli_pattern() {
        let t = BitTable::parse("101\n").unwrap();
        let v = verify_lookup(&synth_tl(&t), &t).unwrap();
        assert!(v.pass);
    }

    #[test]
    fn channel_equal_cnot_self() {
        use crate::sim::GateKind;
        let q0 = QubitId(0);
        let q1 = QubitId(1);
        // CNOT built from H + CZ + H vs ideal CNOT
        let ops = vec![
            SimOp::Gate { kind: GateKind::H, qs: vec![q1], cond: None },
            SimOp::Gate { kind: GateKind::Cz, qs: vec![q0, q1], cond: None },
            SimOp::Gate { kind: GateKind::H, qs: vec![q1], cond: None },
        ];
        let ideal = Ideal::Unitary(vec![SimOp::Gate {
            kind: GateKind::Cx,
            qs: vec![q0, q1],
            cond: None,
        }]);
        let v = channel_equal(&ops, &[q0, q1], &ideal, None, &BranchPolicy::All).unwrap();
        assert!(v.pass, "{v:?}");
    }

    #[test]
    fn channel_equal_detects_mismatch() {
        use crate::sim::GateKind;
        let q0 = QubitId(0);
        let ops = vec![SimOp::Gate { kind: GateKind::S, qs: vec![q0], cond: None }];
        let ideal = Ideal::Unitary(vec![SimOp::Gate {
            kind: GateKind::Sdg,
            qs: vec![q0],
            cond: None,
        }]);
        let v = channel_equal(&ops, &[q0], &ideal, None, &BranchPolicy::All).unwrap();
        assert!(!v.pass);
    }
}
