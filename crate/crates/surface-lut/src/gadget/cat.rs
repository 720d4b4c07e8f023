//! GHZ ("cat") state preparation on grid paths in constant depth: one layer
//! of Bell preparations, one layer of joint seam measurements, and at most
//! one layer of single-qubit hole measurements. Horizontally adjacent
//! partition pairs of a Z-basis path (and vertical ones of an X-basis path)
//! cannot be seamed directly and are removed by a Bell measurement instead;
//! all Pauli byproducts are merged into prefix-parity corrections, with the
//! global phase flip applied at the path head.

use crate::cost::CostModel;
use crate::isa::{Coord, GridInstr, IsaKind};
use crate::sim::{BitId, Cond, Pauli};

use super::bell::{bell_meas, bell_prep};
use super::{hadj, vadj, BitAlloc, GadgetError, Path, Schedule};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatBasis {
    /// |0..0> + |1..1>: seams are vertical ZZ, holes retire in X.
    Z,
    /// |+..+> + |-..->: seams are horizontal XX, holes retire in Z.
    X,
}

impl CatBasis {
    fn seam_ok(self, a: Coord, b: Coord) -> bool {
        match self {
            CatBasis::Z => vadj(a, b),
            CatBasis::X => hadj(a, b),
        }
    }
}

pub struct Cat {
    pub sched: Schedule,
    /// Cells carrying the GHZ state, in path order; the first is the head.
    pub members: Vec<Coord>,
}

/// Whether path position `i` (0-based) survives into the cat state before
/// explicit holes: the head always does, the tail does for even lengths, and
/// a partition pair does iff its seam matches the basis axis.
pub fn incat(path: &Path, basis: CatBasis, i: usize) -> bool {
    let n = path.cells.len();
    if i == 0 {
        return true;
    }
    if n % 2 == 0 && i == n - 1 {
        return true;
    }
    // partition pairs are (1,2),(3,4),... in 0-based indexing
    let lo = if i % 2 == 1 { i } else { i - 1 };
    lo + 1 < n && basis.seam_ok(path.cells[lo], path.cells[lo + 1])
}

pub fn cat_prep(
    cost: &CostModel,
    start: u64,
    path: &Path,
    basis: CatBasis,
    holes: &[Coord],
    bits: &mut BitAlloc,
) -> Result<Cat, GadgetError> {
    let cells = &path.cells;
    let n = cells.len();
    if n == 0 {
        return Err(GadgetError::BadPath("empty cat path".into()));
    }
    let head = cells[0];
    if holes.contains(&head) {
        return Err(GadgetError::HoleAtHead(head));
    }
    let single_prep = match basis {
        CatBasis::Z => IsaKind::PrepPlus,
        CatBasis::X => IsaKind::PrepZero,
    };
    let mut s = Schedule::default();
    if n == 1 {
        s.push(GridInstr::op(start, single_prep, vec![head]));
        return Ok(Cat { sched: s, members: vec![head] });
    }

    // layer 1: Bell pairs (0,1),(2,3),... plus a lone prep for odd n
    let seam_t = start + cost.prep_pauli + cost.meas_xx_zz;
    for p in cells.chunks(2) {
        if p.len() == 2 {
            s.merge(bell_prep(cost, start, p[0], p[1], bits)?.sched);
        } else {
            s.push(GridInstr::op(start, single_prep, vec![p[0]]));
        }
    }

    // layer 2: seams on partition pairs (1,2),(3,4),...; an off-axis pair is
    // fused out by a Bell measurement instead. Each link bit flips the ZZ
    // (resp. XX) sign across the link, fixed by a basis-flip correction on
    // every surviving cell to its right; phase-flip bits collect on the head.
    let mut link_bits: Vec<(usize, BitId)> = Vec::new(); // (path index of link, bit)
    let mut phase_bits: Vec<BitId> = Vec::new();
    let mut removed: Vec<Coord> = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        let (u, v) = (cells[i], cells[i + 1]);
        if basis.seam_ok(u, v) {
            let kind = match basis {
                CatBasis::Z => IsaKind::MeasZZ,
                CatBasis::X => IsaKind::MeasXX,
            };
            let m = bits.fresh();
            s.push(GridInstr::meas(seam_t, kind, vec![u, v], m));
            link_bits.push((i, m));
        } else {
            let bm = bell_meas(cost, seam_t, u, v, bits)?;
            match basis {
                CatBasis::Z => {
                    link_bits.extend(bm.zz.bits.iter().map(|&b| (i, b)));
                    phase_bits.extend(bm.xx.bits.iter().copied());
                }
                CatBasis::X => {
                    link_bits.extend(bm.xx.bits.iter().map(|&b| (i, b)));
                    phase_bits.extend(bm.zz.bits.iter().copied());
                }
            }
            s.merge(bm.sched);
            removed.push(u);
            removed.push(v);
        }
        i += 2;
    }

    let members: Vec<Coord> = cells
        .iter()
        .copied()
        .filter(|c| !removed.contains(c) && !holes.contains(c))
        .collect();
    for h in holes {
        if removed.contains(h) || !cells.contains(h) {
            return Err(GadgetError::BadPath(format!("hole {h:?} is not a cat member")));
        }
    }

    // layer 3: explicit holes retire in the conjugate basis; each outcome
    // joins the merged phase correction on the head
    let hole_t = seam_t + cost.meas_xx_zz;
    let hole_kind = match basis {
        CatBasis::Z => IsaKind::MeasX,
        CatBasis::X => IsaKind::MeasZ,
    };
    for &h in holes {
        let r = bits.fresh();
        s.push(GridInstr::meas(hole_t, hole_kind, vec![h], r));
        phase_bits.push(r);
    }

    let (flip, phase) = match basis {
        CatBasis::Z => (Pauli::X, Pauli::Z),
        CatBasis::X => (Pauli::Z, Pauli::X),
    };
    let corr_t = hole_t;
    for (j, &c) in members.iter().enumerate() {
        if j == 0 {
            continue;
        }
        let idx = cells.iter().position(|&x| x == c).unwrap();
        let prefix: Vec<BitId> = link_bits
            .iter()
            .filter(|&&(l, _)| l < idx)
            .map(|&(_, b)| b)
            .collect();
        if !prefix.is_empty() {
            s.correct(flip, c, Cond { bits: prefix, value: true }, corr_t);
        }
    }
    if !phase_bits.is_empty() {
        s.correct(phase, head, Cond { bits: phase_bits, value: true }, corr_t);
    }
    Ok(Cat { sched: s, members })
}

/// Copies the source qubit across the members of a Z-basis cat on `targets`:
/// a|0> + b|1> becomes a|0 0..0> + b|1 1..1> over source plus members. The
/// closing joint ZZ runs in the seam layer, so fanout costs no more than the
/// cat preparation itself.
pub fn fanout(
    cost: &CostModel,
    start: u64,
    source: Coord,
    targets: &Path,
    holes: &[Coord],
    bits: &mut BitAlloc,
) -> Result<Cat, GadgetError> {
    let head = *targets.cells.first().ok_or_else(|| GadgetError::BadPath("no targets".into()))?;
    if !vadj(source, head) {
        return Err(GadgetError::AxisViolation(source, "closing seam is vertical"));
    }
    let mut cat = cat_prep(cost, start, targets, CatBasis::Z, holes, bits)?;
    let seam_t = start + cost.prep_pauli + cost.meas_xx_zz;
    let m = bits.fresh();
    cat.sched.push(GridInstr::meas(seam_t, IsaKind::MeasZZ, vec![source, head], m));
    let corr_t = seam_t + cost.meas_xx_zz;
    for &c in &cat.members {
        cat.sched.correct(Pauli::X, c, Cond::bit(m), corr_t);
    }
    Ok(cat)
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

    fn ghz_z(n: usize) -> Vec<C64> {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut v = vec![C64::new(0.0, 0.0); 1 << n];
        v[0] = C64::new(r, 0.0);
        v[(1 << n) - 1] = C64::new(r, 0.0);
        v
    }

    fn ghz_x(n: usize) -> Vec<C64> {
        // |+..+> + |-..-> up to normalization: amplitude 0 on odd parity
        let norm = ((1usize << n) as f64 / 2.0).sqrt();
        (0..1usize << n)
            .map(|x| {
                if x.count_ones() % 2 == 0 {
                    C64::new(1.0 / norm, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    fn check_cat(path: Path, basis: CatBasis, holes: &[Coord]) {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let cat = cat_prep(&cost, 0, &path, basis, holes, &mut bits).unwrap();
        assert!(cat.sched.op_layers() <= 2, "{} joint layers", cat.sched.op_layers());
        let want = match basis {
            CatBasis::Z => ghz_z(cat.members.len()),
            CatBasis::X => ghz_x(cat.members.len()),
        };
        let br = run(&cat.sched.sim_ops(COLS), &QState::new(), &BranchPolicy::All).unwrap();
        assert!(!br.is_empty());
        for brch in &br {
            assert_eq!(brch.state.live_qubits().len(), cat.members.len());
            let qs: Vec<QubitId> = cat.members.iter().map(|&c| q(c)).collect();
            let v = brch.state.statevector(&qs).unwrap();
            assert!(
                phase_free_deviation(&want, &v) < 1e-9,
                "members {:?} outcomes {:?}",
                cat.members,
                brch.outcomes
            );
        }
    }

    #[test]
    fn straight_z_cats() {
        for n in 1..=6usize {
            let cells: Vec<Coord> = (0..n).map(|r| (r, 0)).collect();
            check_cat(Path::new(cells).unwrap(), CatBasis::Z, &[]);
        }
    }

    #[test]
    fn straight_x_cats() {
        for n in 1..=4usize {
            let cells: Vec<Coord> = (0..n).map(|c| (0, c)).collect();
            check_cat(Path::new(cells).unwrap(), CatBasis::X, &[]);
        }
    }

    #[test]
    fn snake_path_removes_off_axis_pairs() {
        // bends force horizontally adjacent partition pairs out of a Z cat
        let cells = vec![(0, 0), (1, 0), (1, 1), (2, 1)];
        let path = Path::new(cells).unwrap();
        assert_eq!(
            (0..4).map(|i| incat(&path, CatBasis::Z, i)).collect::<Vec<_>>(),
            vec![true, false, false, true]
        );
        check_cat(path, CatBasis::Z, &[]);

        let cells = vec![
            (0, 0),
            (1, 0),
            (2, 0),
            (2, 1),
            (2, 2),
            (3, 2),
            (4, 2),
            (4, 3),
        ];
        let path = Path::new(cells).unwrap();
        let members: Vec<usize> = (0..8).filter(|&i| incat(&path, CatBasis::Z, i)).collect();
        assert_eq!(members, vec![0, 1, 2, 5, 6, 7]);
        check_cat(path, CatBasis::Z, &[]);
    }

    #[test]
    fn holes_shrink_the_cat() {
        let cells: Vec<Coord> = (0..5).map(|r| (r, 0)).collect();
        check_cat(Path::new(cells.clone()).unwrap(), CatBasis::Z, &[(1, 0), (3, 0)]);
        let cells: Vec<Coord> = (0..4).map(|c| (0, c)).collect();
        check_cat(Path::new(cells).unwrap(), CatBasis::X, &[(0, 2)]);
    }

    #[test]
    fn hole_at_head_is_rejected() {
        let cost = CostModel::default();
        let mut bits = BitAlloc::new(0);
        let path = Path::new(vec![(0, 0), (1, 0)]).unwrap();
        assert!(matches!(
            cat_prep(&cost, 0, &path, CatBasis::Z, &[(0, 0)], &mut bits),
            Err(GadgetError::HoleAtHead(_))
        ));
    }

    #[test]
    fn fanout_copies_the_source() {
        let cost = CostModel::default();
        for n in [3usize, 5] {
            let source = (0, 0);
            let cells: Vec<Coord> = (1..=n).map(|r| (r, 0)).collect();
            let mut bits = BitAlloc::new(0);
            let f = fanout(&cost, 0, source, &Path::new(cells).unwrap(), &[], &mut bits).unwrap();
            let amps = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
            let init = QState::from_amps(&[q(source)], amps.clone());
            let br = run(&f.sched.sim_ops(COLS), &init, &BranchPolicy::All).unwrap();
            let mut qs = vec![q(source)];
            qs.extend(f.members.iter().map(|&c| q(c)));
            let dim = 1usize << qs.len();
            let mut want = vec![C64::new(0.0, 0.0); dim];
            want[0] = amps[0];
            want[dim - 1] = amps[1];
            for brch in &br {
                let v = brch.state.statevector(&qs).unwrap();
                assert!(
                    phase_free_deviation(&want, &v) < 1e-9,
                    "n={n} outcomes {:?}",
                    brch.outcomes
                );
            }
        }
    }
}
