//! Exact privacy auditing by full enumeration.
//!
//! For every server slot and every candidate target index, the audit runs
//! the query map over *all* `m^k` values of the client randomness `z` and
//! tabulates the exact distribution of that server's query. The report is
//! the maximum total-variation distance between the distributions of any
//! two target indices; a correct scheme gives exactly zero, because
//! `z ↦ z + t·v_τ` is a bijection for every `τ`.

use thiserror::Error;

use crate::family::MvFamily;
use crate::scheme::{Scheme, SchemeError};

/// Enumeration guard: `m^k` may not exceed this.
pub const MAX_AUDIT_STATES: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error(
        "state space m^k = {states} exceeds the audit limit of {limit}; reduce k (or m) to audit exhaustively"
    )]
    StateSpaceTooLarge { states: u128, limit: u64 },
    #[error("need at least one target index")]
    NoTargets,
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub server_slots: usize,
    pub taus: Vec<usize>,
    /// Number of `z` values enumerated per (slot, tau) distribution.
    pub states: u64,
    /// Maximum total-variation distance over all slots and tau pairs;
    /// exactly 0.0 for a private scheme.
    pub max_tv: f64,
}

impl AuditReport {
    pub fn is_private(&self) -> bool {
        self.max_tv == 0.0
    }
}

/// Audit an arbitrary query map `(slot, tau, z) -> query point`; the real
/// schemes go through [`privacy_audit`], and fault-injection tests can pass
/// a deliberately broken map.
pub fn privacy_audit_map(
    m: u8,
    k: usize,
    server_slots: usize,
    taus: &[usize],
    query_map: impl Fn(usize, usize, &[u8]) -> Vec<u8>,
) -> Result<AuditReport, AuditError> {
    if taus.is_empty() {
        return Err(AuditError::NoTargets);
    }
    let states_wide = (m as u128).pow(k as u32);
    if states_wide > MAX_AUDIT_STATES as u128 {
        return Err(AuditError::StateSpaceTooLarge {
            states: states_wide,
            limit: MAX_AUDIT_STATES,
        });
    }
    let states = states_wide as u64;
    let index_of = |point: &[u8]| -> usize {
        point
            .iter()
            .fold(0usize, |acc, &c| acc * m as usize + c as usize)
    };

    let mut max_tv = 0.0f64;
    for slot in 0..server_slots {
        let mut histograms: Vec<Vec<u32>> = Vec::with_capacity(taus.len());
        for &tau in taus {
            let mut hist = vec![0u32; states as usize];
            let mut z = vec![0u8; k];
            loop {
                let q = query_map(slot, tau, &z);
                assert_eq!(q.len(), k, "query map changed the dimension");
                hist[index_of(&q)] += 1;
                // mixed-radix increment of z
                let mut pos = k;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    z[pos] += 1;
                    if z[pos] < m {
                        break;
                    }
                    z[pos] = 0;
                }
                if z.iter().all(|&c| c == 0) {
                    break;
                }
            }
            histograms.push(hist);
        }
        for a in 0..histograms.len() {
            for b in a + 1..histograms.len() {
                let diff: u64 = histograms[a]
                    .iter()
                    .zip(&histograms[b])
                    .map(|(&x, &y)| (x as i64 - y as i64).unsigned_abs())
                    .sum();
                let tv = diff as f64 / (2.0 * states as f64);
                if tv > max_tv {
                    max_tv = tv;
                }
            }
        }
    }
    Ok(AuditReport {
        server_slots,
        taus: taus.to_vec(),
        states,
        max_tv,
    })
}

/// Audit a real scheme against a family: enumerates every `z` and compares
/// the per-server query distributions across the given target indices.
pub fn privacy_audit(
    scheme: &Scheme,
    family: &MvFamily,
    taus: &[usize],
) -> Result<AuditReport, AuditError> {
    scheme.check_family(family)?;
    for &tau in taus {
        if tau >= family.len() {
            return Err(AuditError::Scheme(SchemeError::TauOutOfRange {
                tau,
                n: family.len(),
            }));
        }
    }
    privacy_audit_map(
        scheme.config().m,
        family.k(),
        scheme.config().servers,
        taus,
        |slot, tau, z| {
            scheme
                .query_for_z(family, tau, z.to_vec())
                .expect("tau and family pre-checked")
                .query(slot)
                .to_vec()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{HomTarget, SchemeConfig};

    fn family_k2() -> MvFamily {
        MvFamily::new(
            6,
            2,
            vec![1, 3, 4],
            vec![vec![1, 0], vec![0, 1], vec![1, 1]],
            vec![vec![0, 1], vec![1, 0], vec![3, 3]],
        )
        .unwrap()
    }

    #[test]
    fn every_variant_has_zero_tv_on_the_tiny_family() {
        let fam = family_k2();
        let taus = [0, 1, 2];
        for cfg in [
            SchemeConfig::mv_2server(),
            SchemeConfig::mv_2server_hom(HomTarget::Z6),
            SchemeConfig::mv_2server_hom(HomTarget::F3),
            SchemeConfig::mv_2server_order2(),
            SchemeConfig::mv_kserver(&[2, 3]).unwrap(),
        ] {
            let scheme = Scheme::new(cfg).unwrap();
            let report = privacy_audit(&scheme, &fam, &taus).unwrap();
            assert_eq!(report.states, 36);
            assert_eq!(report.max_tv, 0.0);
            assert!(report.is_private());
        }
    }

    #[test]
    fn single_tau_is_vacuously_private() {
        let fam = family_k2();
        let scheme = Scheme::new(SchemeConfig::mv_2server()).unwrap();
        let report = privacy_audit(&scheme, &fam, &[1]).unwrap();
        assert_eq!(report.max_tv, 0.0);
    }

    #[test]
    fn broken_query_map_is_caught() {
        // a "generator" that leaks: for odd tau it zeroes the first
        // coordinate of the sent point
        let report = privacy_audit_map(6, 2, 1, &[0, 1], |_slot, tau, z| {
            let mut q = z.to_vec();
            if tau % 2 == 1 {
                q[0] = 0;
            }
            q
        })
        .unwrap();
        assert!(report.max_tv > 0.0);
        assert!(!report.is_private());
    }

    #[test]
    fn biased_reuse_of_z_is_caught() {
        // reuse one fixed z for a biased slice of the space
        let report = privacy_audit_map(6, 2, 1, &[0, 1], |_slot, tau, z| {
            if tau == 1 && z[0] < 3 {
                vec![0, 0]
            } else {
                z.to_vec()
            }
        })
        .unwrap();
        assert!(report.max_tv > 0.0);
    }

    #[test]
    fn state_space_guard() {
        let err = privacy_audit_map(6, 9, 1, &[0], |_, _, z| z.to_vec()).unwrap_err();
        match err {
            AuditError::StateSpaceTooLarge { states, .. } => {
                assert_eq!(states, 6u128.pow(9));
            }
            other => panic!("expected guard, got {other:?}"),
        }
    }

    #[test]
    fn empty_tau_list_is_rejected() {
        assert!(matches!(
            privacy_audit_map(6, 2, 1, &[], |_, _, z| z.to_vec()),
            Err(AuditError::NoTargets)
        ));
    }
}
