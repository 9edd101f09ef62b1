//! Built-in sanity checks behind `mvpir selftest`: the algebraic identities
//! the schemes rest on, plus one real loopback retrieval.

use std::net::TcpListener;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::family::{search_family, MvFamily};
use crate::lambda::lambda_vector;
use crate::matrix::RingMatrix;
use crate::net::{retrieve, spawn_server, PirServer};
use crate::ring::RingElem;
use crate::scheme::{build_matrix, SchemeConfig};

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(
    results: &mut Vec<CheckResult>,
    name: &'static str,
    run: impl FnOnce() -> Result<String, String>,
) {
    let (passed, detail) = match run() {
        Ok(detail) => (true, detail),
        Err(detail) => (false, detail),
    };
    results.push(CheckResult {
        name,
        passed,
        detail,
    });
}

/// Run every check; `family_path` adds a validation pass over an on-disk
/// family file.
pub fn run_selftest(family_path: Option<&Path>) -> Vec<CheckResult> {
    let mut results = Vec::new();

    check(&mut results, "determinant-first-order", || {
        let det = build_matrix(&SchemeConfig::mv_2server())
            .map_err(|e| e.to_string())?
            .determinant();
        let expect = RingElem::from_coeffs(6, &[0, 2, 0, 3, 4, 3]);
        if det == expect {
            Ok(format!("det(M) = {det}"))
        } else {
            Err(format!("det(M) = {det}, expected {expect}"))
        }
    });

    check(&mut results, "determinant-second-order", || {
        let det = build_matrix(&SchemeConfig::mv_2server_order2())
            .map_err(|e| e.to_string())?
            .determinant();
        let expect = RingElem::from_coeffs(6, &[4, 0, 0, 2, 0, 0]);
        if det == expect {
            Ok(format!("det(M) = {det}"))
        } else {
            Err(format!("det(M) = {det}, expected {expect}"))
        }
    });

    check(&mut results, "determinant-homomorphisms", || {
        let det = build_matrix(&SchemeConfig::mv_2server())
            .map_err(|e| e.to_string())?
            .determinant();
        let z6 = det.hom_apply(5, 6).map_err(|e| e.to_string())?;
        let f3 = det.hom_apply(2, 3).map_err(|e| e.to_string())?;
        if z6.value() != 2 {
            return Err(format!("image over Z_6 is {}, expected 2", z6.value()));
        }
        if f3.is_zero() {
            return Err("image over F_3 vanishes".into());
        }
        Ok(format!("γ→−1 images: {} over Z_6, {} over F_3", z6.value(), f3.value()))
    });

    check(&mut results, "adjugate-identity", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
        for round in 0..20 {
            let m = RingMatrix::from_fn(4, |_, _| {
                let coeffs: Vec<i64> = (0..6).map(|_| rng.random_range(0..6)).collect();
                RingElem::from_coeffs(6, &coeffs)
            });
            let det = m.determinant();
            let prod = m.mul_matrix(&m.adjugate());
            for i in 0..4 {
                for j in 0..4 {
                    let want = if i == j { det.clone() } else { RingElem::zero(6, 6) };
                    if prod.entry(i, j) != &want {
                        return Err(format!("M·adj(M) ≠ det(M)·I at round {round}"));
                    }
                }
            }
        }
        Ok("M·adj(M) = det(M)·I on 20 random 4×4 matrices over R_{6,6}".into())
    });

    check(&mut results, "lambda-m6", || {
        let cfg = SchemeConfig::mv_kserver(&[2, 3]).map_err(|e| e.to_string())?;
        let lambda = lambda_vector(&cfg).map_err(|e| e.to_string())?;
        Ok(format!("λ·M = (μ, 0, …, 0) with μ = {}", lambda.mu()))
    });

    check(&mut results, "lambda-m30", || {
        let cfg = SchemeConfig::mv_kserver(&[2, 3, 5]).map_err(|e| e.to_string())?;
        let lambda = lambda_vector(&cfg).map_err(|e| e.to_string())?;
        for p in [2u8, 3, 5] {
            if lambda
                .mu()
                .reduce_mod_prime(p)
                .map_err(|e| e.to_string())?
                .is_zero()
            {
                return Err(format!("μ vanishes mod {p}"));
            }
        }
        Ok("λ·M = (μ, 0, …, 0) with μ invertible-enough mod 2, 3, 5".into())
    });

    check(&mut results, "family-search", || {
        let family =
            search_family(6, 4, &[1, 3, 4], 5, 0x5eed, 10_000_000).map_err(|e| e.to_string())?;
        family.validate().map_err(|v| v.to_string())?;
        Ok(format!("searched family: n = {}, k = {}", family.len(), family.k()))
    });

    if let Some(path) = family_path {
        check(&mut results, "family-file", || {
            let family = MvFamily::load(path).map_err(|e| e.to_string())?;
            Ok(format!(
                "{} validates: n = {}, k = {}, m = {}",
                path.display(),
                family.len(),
                family.k(),
                family.m()
            ))
        });
    }

    check(&mut results, "loopback-retrieval", || {
        let family =
            search_family(6, 4, &[1, 3, 4], 6, 0x10ca1, 10_000_000).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
        let symbols: Vec<u8> = (0..family.len()).map(|_| rng.random_range(0..2)).collect();
        let cfg = SchemeConfig::mv_2server();
        let mut handles = Vec::new();
        let mut addrs = Vec::new();
        for _ in 0..2 {
            let server = PirServer::new(cfg.clone(), &family, &symbols)
                .map_err(|e| e.to_string())?;
            let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| e.to_string())?;
            let handle = spawn_server(server, listener).map_err(|e| e.to_string())?;
            addrs.push(handle.addr().to_string());
            handles.push(handle);
        }
        let mut outcome = Ok(String::new());
        for (tau, &want) in symbols.iter().enumerate() {
            match retrieve(&cfg, &family, &addrs, tau, &mut rng) {
                Ok((bit, cost)) => {
                    if bit != want {
                        outcome = Err(format!("recovered {bit} instead of {want}"));
                        break;
                    }
                    let want_down = (family.k() as u64 + 1) * 6;
                    if cost.bytes_down.iter().any(|&b| b != want_down) {
                        outcome = Err(format!(
                            "downlink {:?}, expected {want_down} bytes per server",
                            cost.bytes_down
                        ));
                        break;
                    }
                }
                Err(e) => {
                    outcome = Err(e.to_string());
                    break;
                }
            }
        }
        for h in handles {
            h.stop();
        }
        outcome.map(|_| "2-server retrieval over 127.0.0.1 recovers every bit".into())
    });

    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass_on_a_healthy_build() {
        let results = run_selftest(None);
        assert!(results.len() >= 8);
        for r in &results {
            assert!(r.passed, "{} failed: {}", r.name, r.detail);
        }
    }

    #[test]
    fn corrupt_family_file_fails_the_file_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mvf");
        std::fs::write(&path, "mvf 6 2 1\nS 1 3 4\nu 1 0\nv 1 0\n").unwrap();
        let results = run_selftest(Some(&path));
        let file_check = results.iter().find(|r| r.name == "family-file").unwrap();
        assert!(!file_check.passed);
    }
}
