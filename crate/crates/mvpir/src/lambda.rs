//! The recovery row vector for the k-server scheme.
//!
//! For `m = p_1⋯p_r` and the CRT inner-product set `S`, there is a vector
//! `λ = [α_1, β_1, …, α_q, β_q]` over `R_{m,m}` with `λ·M = (μ, 0, …, 0)`
//! where every `μ mod p_i` is nonzero. It comes from the polynomial
//! `f_i(x) = Π_{ℓ∈S, ℓ≡0 mod p_i} (x − γ^ℓ)` over each `R_{p_i,m}`: each
//! factor list has exactly `q − 1 = 2^{r−1} − 1` members, the lifts glue into
//! one `f` of degree `q − 1` over `R_{m,m}`, and with `t_i = i − 1` the
//! coefficients of `f` are exactly the `α_i`. Taking `β_i = −α_i` makes the
//! column function `h(ℓ) = (1 − ℓ)·f(γ^ℓ)` vanish on all of `S` (mod `p_i`
//! either the factor `(γ^ℓ − γ^ℓ)` or the factor `(1 − ℓ)` dies), while
//! `μ = h(0) = f(1)` stays invertible-enough mod every prime.
//!
//! The construction depends only on `(m, S, t)`, never on the database or a
//! query, so it is built once per scheme and verified on the spot; a failure
//! here is an arithmetic bug, not bad input.

use crate::matrix::RingMatrix;
use crate::poly::{crt_lift_poly, RingPoly};
use crate::ring::RingElem;
use crate::scheme::{build_matrix, SchemeConfig, SchemeError, Variant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaVector {
    entries: Vec<RingElem>, // [α_1, β_1, …, α_q, β_q]
    mu: RingElem,
}

impl LambdaVector {
    /// The interleaved `[α_1, β_1, …, α_q, β_q]`, matching the row order of
    /// the recovery matrix.
    pub fn entries(&self) -> &[RingElem] {
        &self.entries
    }

    pub fn alpha(&self, server: usize) -> &RingElem {
        &self.entries[2 * server]
    }

    pub fn beta(&self, server: usize) -> &RingElem {
        &self.entries[2 * server + 1]
    }

    /// `μ = h(0) = f(1)`; nonzero mod every prime factor of `m`.
    pub fn mu(&self) -> &RingElem {
        &self.mu
    }
}

pub fn lambda_vector(cfg: &SchemeConfig) -> Result<LambdaVector, SchemeError> {
    if cfg.variant != Variant::MvKServer {
        return Err(SchemeError::Config(format!(
            "λ recovery only applies to {}, not {}",
            Variant::MvKServer,
            cfg.variant
        )));
    }
    cfg.validate()?;
    let q = cfg.servers;
    let m = cfg.m;
    let r = m as usize;

    let parts: Vec<RingPoly> = cfg
        .primes
        .iter()
        .map(|&p| {
            let mut f = RingPoly::constant(RingElem::one(p, r));
            for &l in &cfg.s {
                if l % p == 0 {
                    f = f.mul(&RingPoly::monic_linear(&RingElem::gamma_power(l as i64, p, r)));
                }
            }
            f
        })
        .collect();
    for (part, &p) in parts.iter().zip(&cfg.primes) {
        if part.degree() != Some(q - 1) {
            return Err(SchemeError::Internal(format!(
                "factor polynomial mod {p} has degree {:?}, expected {}",
                part.degree(),
                q - 1
            )));
        }
    }
    let f = crt_lift_poly(&parts)?;

    let mut entries = Vec::with_capacity(2 * q);
    for i in 0..q {
        let alpha = f.coeff(i);
        entries.push(alpha.clone());
        entries.push(-&alpha);
    }
    let mu = f.eval(&RingElem::one(m, r));

    // verify λ·M = (μ, 0, …, 0): the columns are ℓ ∈ {0} ∪ S, so this is
    // exactly h(0) = μ and h(ℓ) = 0 on S
    let matrix = build_matrix(cfg)?;
    let product = RingMatrix::row_vec_mul(&entries, &matrix);
    if product[0] != mu {
        return Err(SchemeError::Internal(
            "λ·M does not produce μ in the first coordinate".into(),
        ));
    }
    if let Some(pos) = product[1..].iter().position(|e| !e.is_zero()) {
        return Err(SchemeError::Internal(format!(
            "λ·M is nonzero at column ℓ = {}",
            cfg.s[pos]
        )));
    }
    for &p in &cfg.primes {
        if mu.reduce_mod_prime(p)?.is_zero() {
            return Err(SchemeError::Internal(format!("μ vanishes mod {p}")));
        }
    }
    Ok(LambdaVector { entries, mu })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::RingMatrix;

    #[test]
    fn two_prime_lambda_matches_hand_computation() {
        let cfg = SchemeConfig::mv_kserver(&[2, 3]).unwrap();
        let lambda = lambda_vector(&cfg).unwrap();
        // f(x) = x + 3γ^4 + 2γ^3, so α_1 = 3γ^4 + 2γ^3, α_2 = 1
        let alpha1 = RingElem::from_coeffs(6, &[0, 0, 0, 2, 3, 0]);
        assert_eq!(lambda.alpha(0), &alpha1);
        assert_eq!(lambda.beta(0), &-&alpha1);
        assert_eq!(lambda.alpha(1), &RingElem::one(6, 6));
        assert_eq!(lambda.beta(1), &RingElem::from_coeffs(6, &[5, 0, 0, 0, 0, 0]));
        // μ = f(1) = 1 + 2γ^3 + 3γ^4, nonzero mod 2 and mod 3
        let mu = RingElem::from_coeffs(6, &[1, 0, 0, 2, 3, 0]);
        assert_eq!(lambda.mu(), &mu);
        assert_eq!(
            mu.reduce_mod_prime(2).unwrap(),
            RingElem::from_coeffs(2, &[1, 0, 0, 0, 1, 0])
        );
        assert_eq!(
            mu.reduce_mod_prime(3).unwrap(),
            RingElem::from_coeffs(3, &[1, 0, 0, 2, 0, 0])
        );
    }

    #[test]
    fn three_prime_lambda_collapses_the_matrix() {
        let cfg = SchemeConfig::mv_kserver(&[2, 3, 5]).unwrap();
        let lambda = lambda_vector(&cfg).unwrap();
        assert_eq!(lambda.entries().len(), 8);
        // frozen from an independent CRT computation of the lift
        let mu = RingElem::from_coeffs(
            30,
            &[
                1, 0, 15, 0, 0, 6, 15, 0, 0, 0, 15, 0, 20, 0, 0, 14, 0, 0, 0, 0, 24, 0, 15, 0,
                0, 0, 15, 10, 0, 0,
            ],
        );
        assert_eq!(lambda.mu(), &mu);

        let matrix = build_matrix(&cfg).unwrap();
        let product = RingMatrix::row_vec_mul(lambda.entries(), &matrix);
        assert_eq!(&product[0], lambda.mu());
        assert!(product[1..].iter().all(RingElem::is_zero));
        for p in [2u8, 3, 5] {
            assert!(!lambda.mu().reduce_mod_prime(p).unwrap().is_zero());
        }
    }

    #[test]
    fn lambda_requires_the_kserver_variant() {
        assert!(lambda_vector(&SchemeConfig::mv_2server()).is_err());
    }
}
