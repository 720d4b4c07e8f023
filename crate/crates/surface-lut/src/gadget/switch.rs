//! Switch boards: a (k+1) x (k+1) blank region routes k source cells (top
//! row) to k target cells (left column) under an arbitrary permutation, in
//! two phases. The row phase Bell-prepares each target against the board
//! cell where its row crosses the matching source column; the column phase
//! either teleports source states down onto those crossing cells or extends
//! the entanglement to deliver Bell pairs.

use crate::cost::CostModel;
use crate::sim::Pauli;

use super::bell::{bell_meas, move_op};
use super::remote::{remote_bell, BellMode};
use super::remote::cond_of as cond_of_parity;
use super::{BitAlloc, GadgetError, Path, Schedule};
use crate::isa::Coord;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SwitchMode {
    /// Sources are blank; each (source, permuted target) pair ends up in a
    /// Bell state.
    BellPrep,
    /// Sources hold data; each state is teleported to its permuted target.
    Teleport,
}

pub struct SwitchBoard {
    pub sched: Schedule,
    pub sources: Vec<Coord>,
    pub targets: Vec<Coord>,
}

/// Routes source i to target pi[i]. `origin` is the top-left cell of the
/// region; sources sit at origin + (0, 1..=k), targets at origin + (1..=k, 0),
/// and the k x k board fills the rest.
pub fn switch_board(
    cost: &CostModel,
    start: u64,
    origin: Coord,
    k: usize,
    pi: &[usize],
    mode: SwitchMode,
    bits: &mut BitAlloc,
) -> Result<SwitchBoard, GadgetError> {
    if pi.len() != k {
        return Err(GadgetError::RegionTooSmall(format!(
            "permutation over {} entries for k={k}",
            pi.len()
        )));
    }
    let mut seen = vec![false; k];
    for &p in pi {
        if p >= k || seen[p] {
            return Err(GadgetError::BadPath("not a permutation".into()));
        }
        seen[p] = true;
    }
    let at = |dr: usize, dc: usize| (origin.0 + dr, origin.1 + dc);
    let sources: Vec<Coord> = (1..=k).map(|c| at(0, c)).collect();
    let targets: Vec<Coord> = (1..=k).map(|r| at(r, 0)).collect();

    let mut s = Schedule::default();
    // row phase: Bell between target r and the crossing cell in the column
    // of its source
    let mut t_cols = 0;
    for i in 0..k {
        let row = pi[i] + 1;
        let col = i + 1;
        let cells: Vec<Coord> = (0..=col).map(|c| at(row, c)).collect();
        let g = remote_bell(cost, start, &Path::new(cells)?, BellMode::Prepare, bits)?;
        t_cols = t_cols.max(g.sched.end_cycle(cost));
        s.merge(g.sched);
    }

    // column phase
    for i in 0..k {
        let row = pi[i] + 1;
        let col = i + 1;
        let cross = at(row, col);
        let target = targets[pi[i]];
        match mode {
            SwitchMode::Teleport => {
                let cells: Vec<Coord> = (0..=row).map(|r| at(r, col)).collect();
                let g = remote_bell(cost, t_cols, &Path::new(cells)?, BellMode::Measure, bits)?;
                let (zz, xx) = (g.zz.unwrap(), g.xx.unwrap());
                let t_end = g.sched.end_cycle(cost);
                s.merge(g.sched);
                s.correct(Pauli::X, target, cond_of_parity(&zz), t_end);
                s.correct(Pauli::Z, target, cond_of_parity(&xx), t_end);
            }
            SwitchMode::BellPrep => {
                if row == 1 {
                    // the crossing cell touches the source row: just move
                    s.merge(move_op(cost, t_cols, cross, sources[i], bits)?);
                } else {
                    let cells: Vec<Coord> = (0..row).map(|r| at(r, col)).collect();
                    let g =
                        remote_bell(cost, t_cols, &Path::new(cells)?, BellMode::Prepare, bits)?;
                    let t_swap = g.sched.end_cycle(cost);
                    s.merge(g.sched);
                    let bm = bell_meas(cost, t_swap, at(row - 1, col), cross, bits)?;
                    let t_end = bm.sched.end_cycle(cost);
                    let (zz, xx) = (bm.zz.clone(), bm.xx.clone());
                    s.merge(bm.sched);
                    s.correct(Pauli::X, target, cond_of_parity(&zz), t_end);
                    s.correct(Pauli::Z, target, cond_of_parity(&xx), t_end);
                }
            }
        }
    }
    Ok(SwitchBoard { sched: s, sources, targets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, BranchPolicy, QState, QubitId, C64};
    use crate::verify::phase_free_deviation;

    const COLS: usize = 8;

    fn q(c: Coord) -> QubitId {
        crate::isa::qubit_at(COLS, c)
    }

    fn kron(states: &[[C64; 2]]) -> Vec<C64> {
        let mut v = vec![C64::new(1.0, 0.0)];
        for s in states {
            let mut nv = Vec::with_capacity(v.len() * 2);
            // qubit order: later states are more significant
            for &hi in &s[..] {
                for &lo in &v {
                    nv.push(lo * hi);
                }
            }
            v = nv;
        }
        v
    }

    fn states(k: usize) -> Vec<[C64; 2]> {
        (0..k)
            .map(|i| {
                let t = 0.3 + 0.4 * i as f64;
                [C64::new(t.cos(), 0.0), C64::new(0.0, t.sin())]
            })
            .collect()
    }

    fn check_teleport(k: usize, pi: &[usize], policy: &BranchPolicy) {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let sb = switch_board(&cost, 0, (0, 0), k, pi, SwitchMode::Teleport, &mut bits).unwrap();
        let st = states(k);
        let src_qs: Vec<QubitId> = sb.sources.iter().map(|&c| q(c)).collect();
        let init = QState::from_amps(&src_qs, kron(&st));
        let br = run(&sb.sched.sim_ops(COLS), &init, policy).unwrap();
        assert!(!br.is_empty());
        // target of pi[i] should hold state i: reading targets in source
        // order reproduces the product state
        let tq: Vec<QubitId> = (0..k).map(|i| q(sb.targets[pi[i]])).collect();
        let want = kron(&st);
        for brch in &br {
            let v = brch.state.statevector(&tq).unwrap();
            assert!(
                phase_free_deviation(&want, &v) < 1e-9,
                "pi={pi:?} outcomes {:?}",
                brch.outcomes
            );
        }
    }

    #[test]
    fn teleport_routes_states_small() {
        check_teleport(2, &[0, 1], &BranchPolicy::All);
        check_teleport(2, &[1, 0], &BranchPolicy::All);
    }

    #[test]
    fn teleport_routes_states_k3_sampled() {
        for pi in [[0usize, 1, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            check_teleport(3, &pi, &BranchPolicy::Sampled { seed: 7, shots: 40 });
        }
    }

    #[test]
    fn bell_prep_pairs_up_sources_and_targets() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![
            C64::new(r, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(r, 0.0),
        ];
        let cost = CostModel::default();
        for pi in [[0usize, 1], [1, 0]] {
            let mut bits = BitAlloc::new(0);
            let sb =
                switch_board(&cost, 0, (0, 0), 2, &pi, SwitchMode::BellPrep, &mut bits).unwrap();
            let br = run(
                &sb.sched.sim_ops(COLS),
                &QState::new(),
                &BranchPolicy::Sampled { seed: 3, shots: 40 },
            )
            .unwrap();
            // joint state over both pairs: Bell x Bell
            let mut want = vec![C64::new(0.0, 0.0); 16];
            for hi in [0usize, 3] {
                for lo in [0usize, 3] {
                    want[hi << 2 | lo] = bell[hi] * bell[lo];
                }
            }
            let qs = [
                q(sb.sources[0]),
                q(sb.targets[pi[0]]),
                q(sb.sources[1]),
                q(sb.targets[pi[1]]),
            ];
            for brch in &br {
                let v = brch.state.statevector(&qs).unwrap();
                assert!(
                    phase_free_deviation(&want, &v) < 1e-9,
                    "pi={pi:?} outcomes {:?}",
                    brch.outcomes
                );
            }
        }
    }

    #[test]
    fn rejects_bad_permutations() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        assert!(switch_board(&cost, 0, (0, 0), 2, &[0, 0], SwitchMode::Teleport, &mut bits)
            .is_err());
        assert!(switch_board(&cost, 0, (0, 0), 2, &[0], SwitchMode::Teleport, &mut bits).is_err());
    }
}
