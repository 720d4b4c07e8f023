//! Closed-form resource estimates: AND/T counts, logical-cycle bounds,
//! logical-qubit counts, and T-state consumption rates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Timing parameters, all in logical cycles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// remote CNOT
    pub tau_rcx: u64,
    /// remote joint ZZ (or XX) measurement
    pub tau_rzz: u64,
    /// remote joint XZ measurement
    pub tau_rxz: u64,
    /// multi-target CNOT (CXOR)
    pub tau_cxor: u64,
    /// cat-state preparation
    pub tau_cat: u64,
    /// CCiX execution stage
    pub tau_e: u64,
    /// |0⟩ / |+⟩ preparation
    pub prep_pauli: u64,
    /// |S⟩ / |T⟩ preparation
    pub prep_magic: u64,
    /// joint XX / ZZ measurement of neighbors
    pub meas_xx_zz: u64,
    /// joint XZ measurement (diagonal)
    pub meas_xz: u64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            tau_rcx: 5,
            tau_rzz: 5,
            tau_rxz: 6,
            tau_cxor: 7,
            tau_cat: 5,
            tau_e: 5,
            prep_pauli: 1,
            prep_magic: 5,
            meas_xx_zz: 2,
            meas_xz: 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum CostError {
    #[error("duration {0} must be >= 1")]
    BadDuration(&'static str),
    #[error("tau_e ({0}) must not exceed tau_rzz ({1})")]
    ExecTooSlow(u64, u64),
    #[error("cycle formula unsupported for k={0}")]
    UnsupportedK(usize),
}

impl CostModel {
    pub fn validate(&self) -> Result<(), CostError> {
        for (name, v) in [
            ("tau_rcx", self.tau_rcx),
            ("tau_rzz", self.tau_rzz),
            ("tau_rxz", self.tau_rxz),
            ("tau_cxor", self.tau_cxor),
            ("tau_cat", self.tau_cat),
            ("prep_pauli", self.prep_pauli),
            ("prep_magic", self.prep_magic),
            ("meas_xx_zz", self.meas_xx_zz),
            ("meas_xz", self.meas_xz),
        ] {
            if v < 1 {
                return Err(CostError::BadDuration(name));
            }
        }
        if self.tau_e > self.tau_rzz {
            return Err(CostError::ExecTooSlow(self.tau_e, self.tau_rzz));
        }
        Ok(())
    }

    /// Worst-case duration of a non-CXOR layer.
    pub fn tau_r(&self) -> u64 {
        self.tau_rcx.max(self.tau_rzz).max(self.tau_cat)
    }

    /// Worst-case duration of a layer carrying an unfused CXOR.
    pub fn tau_m(&self) -> u64 {
        self.tau_rcx.max(self.tau_cxor)
    }
}

/// AND-gate count of the lookup circuit.
pub fn count_and(k: usize, controlled: bool) -> u64 {
    if controlled {
        (1u64 << k) - 1
    } else if k <= 1 {
        0
    } else {
        (1u64 << k) - 2
    }
}

/// |T⟩ states consumed by the uncontrolled lookup: four per AND gate.
pub fn count_t(k: usize) -> u64 {
    4 * count_and(k, false)
}

/// Cycle bound for the controlled lookup.
pub fn cycles_ctl(k: usize, cost: &CostModel) -> Result<u64, CostError> {
    if k < 1 {
        return Err(CostError::UnsupportedK(k));
    }
    Ok((1u64 << (k - 1)) * (6 * cost.tau_r() + cost.tau_m()) - 3 * cost.tau_r())
}

/// Cycle bound for the uncontrolled lookup.
pub fn cycles_tl(k: usize, cost: &CostModel) -> Result<u64, CostError> {
    if k < 1 {
        return Err(CostError::UnsupportedK(k));
    }
    if k == 1 {
        Ok(2 * cost.tau_m())
    } else {
        Ok(2 * cycles_ctl(k - 1, cost)?)
    }
}

/// Interleaved-layer time of the controlled zipper lookup, excluding the
/// fanout copies and the extra AND/AND† pair.
pub fn cycles_ctl_zipper_core(k: usize, cost: &CostModel) -> Result<u64, CostError> {
    if k < 2 {
        return Err(CostError::UnsupportedK(k));
    }
    Ok((1u64 << k) * (cost.tau_r() + cost.tau_m()) - 2 * cost.tau_r() - cost.tau_m())
}

/// Cycle bound for the controlled zipper lookup including the fixed setup
/// cost; `sqrt_k_overhead` accounts for the O(√k) part of the input-copy
/// fanout and defaults to zero.
pub fn cycles_ctl_zipper(
    k: usize,
    cost: &CostModel,
    sqrt_k_overhead: u64,
) -> Result<u64, CostError> {
    Ok(cycles_ctl_zipper_core(k, cost)? + 2 * cost.tau_r() + sqrt_k_overhead)
}

/// Input-region patch-square columns: c = ⌈√(2k+1)⌉.
pub fn input_cols(k: usize) -> usize {
    let n = 2 * k + 1;
    let mut c = (n as f64).sqrt() as usize;
    while c * c < n {
        c += 1;
    }
    c
}

/// Input-region patch-square rows: r = ⌈(2k+1)/c⌉.
pub fn input_rows(k: usize) -> usize {
    let c = input_cols(k);
    (2 * k + 1).div_ceil(c)
}

/// Logical-qubit count of the controlled lookup layout.
pub fn qubits_ctl(k: usize, m: usize, n_ccix: usize, n_cz: usize, pad: usize) -> u64 {
    let c = input_cols(k) as u64;
    let r = input_rows(k) as u64;
    4 * (c + 2) * (r + 2) + 90 * n_ccix as u64 + 4 * n_cz as u64 + 2 * m as u64 + pad as u64
}

/// Abstract (pre-layout) qubit count: control + addresses + helpers + outputs.
pub fn qubits_abstract(k: usize, m: usize) -> u64 {
    (2 * k + m + 1) as u64
}

/// Peak smoothed |T⟩ consumption rate per parallel instance.
pub fn t_rate(cost: &CostModel, instances: usize) -> f64 {
    instances as f64 * 4.0 / cost.tau_rzz as f64
}

/// Table-2 defaults for the CCiX-slot and CZ-slot counts and the output pad.
pub fn default_n_ccix(k: usize) -> usize {
    k.min(2)
}

pub const DEFAULT_N_CZ: usize = 2;

pub fn default_pad(m: usize) -> usize {
    (4.0 * (m as f64).sqrt()).floor() as usize
}

/// One analytic estimate row, serializable as the JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct ResourceEstimate {
    pub k: usize,
    pub m: usize,
    pub controlled: bool,
    pub zipper: bool,
    pub n_and: u64,
    pub n_t: u64,
    pub tau_cycles: Option<u64>,
    pub sigma_qubits: u64,
    pub abstract_qubits: u64,
    pub t_rate: f64,
    pub cost_model: CostModel,
}

pub fn estimate(
    k: usize,
    m: usize,
    controlled: bool,
    zipper: bool,
    cost: &CostModel,
    n_ccix: usize,
    n_cz: usize,
    pad: usize,
) -> ResourceEstimate {
    let tau_cycles = if zipper {
        cycles_ctl_zipper(k, cost, 0).ok()
    } else if controlled {
        cycles_ctl(k, cost).ok()
    } else {
        cycles_tl(k, cost).ok()
    };
    ResourceEstimate {
        k,
        m,
        controlled,
        zipper,
        n_and: count_and(k, controlled) + if zipper && controlled { 1 } else { 0 },
        n_t: 4 * (count_and(k, controlled) + if zipper && controlled { 1 } else { 0 }),
        tau_cycles,
        sigma_qubits: qubits_ctl(k, m, n_ccix, n_cz, pad),
        abstract_qubits: qubits_abstract(k, m),
        t_rate: t_rate(cost, 1),
        cost_model: cost.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_table_cycles() {
        let c = CostModel::default();
        assert_eq!((c.tau_r(), c.tau_m()), (5, 7));
        let tau: Vec<u64> = (1..=8).map(|k| cycles_ctl(k, &c).unwrap()).collect();
        assert_eq!(tau, [22, 59, 133, 281, 577, 1169, 2353, 4721]);
        let tau_z: Vec<u64> = (2..=8).map(|k| cycles_ctl_zipper(k, &c, 0).unwrap()).collect();
        assert_eq!(tau_z, [41, 89, 185, 377, 761, 1529, 3065]);
    }

    #[test]
    fn results_table_qubits() {
        let sigma: Vec<u64> = (1..=8)
            .map(|k| qubits_ctl(k, 7, default_n_ccix(k), DEFAULT_N_CZ, default_pad(7)))
            .collect();
        assert_eq!(sigma, [186, 292, 312, 312, 332, 356, 356, 380]);
    }

    #[test]
    fn count_formulas() {
        assert_eq!(count_and(3, false), 6);
        assert_eq!(count_and(0, true), 0);
        assert_eq!(count_and(1, true), 1);
        assert_eq!(count_t(3), 24);
        assert_eq!(count_t(1), 0);
        assert_eq!(count_t(8), 1016);
        for k in 0..=12 {
            assert_eq!(count_t(k), 4 * count_and(k, false));
        }
    }

    #[test]
    fn uncontrolled_cycles() {
        let c = CostModel::default();
        assert_eq!(cycles_tl(1, &c).unwrap(), 14);
        assert_eq!(cycles_tl(2, &c).unwrap(), 44);
        assert_eq!(cycles_tl(9, &c).unwrap(), 9442);
    }

    #[test]
    fn recursion_identities() {
        let c = CostModel::default();
        for k in 2..=12 {
            assert_eq!(
                cycles_ctl(k, &c).unwrap(),
                3 * c.tau_r() + 2 * cycles_ctl(k - 1, &c).unwrap()
            );
        }
        assert_eq!(cycles_ctl_zipper_core(2, &c).unwrap(), 2 * c.tau_r() + 3 * c.tau_m());
        for k in 3..=12 {
            assert_eq!(
                cycles_ctl_zipper_core(k, &c).unwrap(),
                2 * c.tau_r() + c.tau_m() + 2 * cycles_ctl_zipper_core(k - 1, &c).unwrap()
            );
        }
    }

    #[test]
    fn input_region_dims() {
        // k=3 and k=4 share a 3×3 patch square
        assert_eq!((input_cols(3), input_rows(3)), (3, 3));
        assert_eq!((input_cols(4), input_rows(4)), (3, 3));
        assert_eq!((input_cols(1), input_rows(1)), (2, 2));
    }

    #[test]
    fn rates_and_validation() {
        let mut c = CostModel::default();
        assert!((t_rate(&c, 1) - 0.8).abs() < 1e-12);
        c.tau_rzz = 4;
        c.tau_e = 4;
        assert!((t_rate(&c, 1) - 1.0).abs() < 1e-12);
        c.tau_rzz = 2;
        assert!((t_rate(&c, 3) - 6.0).abs() < 1e-12);
        assert!(matches!(c.validate(), Err(CostError::ExecTooSlow(4, 2))));
        c.tau_e = 0;
        c.tau_rzz = 5;
        assert!(c.validate().is_ok());
        c.tau_cat = 0;
        assert!(c.validate().is_err());
    }
}
