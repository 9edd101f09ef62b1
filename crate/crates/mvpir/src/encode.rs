//! Database encoding as the sparse polynomial `F(x) = Σ a_i x^{u_i}` over
//! `R_{m,m}`, with evaluation of `F` and of the derivative-style operators
//! `F^(1)(x) = Σ (a_i · u_i) x^{u_i}` and `F^(2)(x) = Σ a_i (u_i ⊗ u_i) x^{u_i}`
//! at points of the form `γ^w`.

use thiserror::Error;

use crate::family::{inner_product_mod, MvFamily};
use crate::ring::RingElem;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("database has {given} symbols but the family only indexes {capacity}")]
    TooLong { given: usize, capacity: usize },
    #[error("symbol {value} at index {index} is not a residue mod {m}")]
    SymbolRange { index: usize, value: u8, m: u8 },
    #[error("exponent vector of length {got}, expected {expected}")]
    ExponentLength { got: usize, expected: usize },
}

/// The database polynomial, stored as its nonzero terms. Evaluating at
/// `γ^w` only ever touches exponents mod `m`, and the result accumulates
/// straight into coefficient slots, so the hot loop is integer-only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedDatabase {
    m: u8,
    k: usize,
    n: usize,
    coeffs: Vec<u8>,
    exponents: Vec<u8>, // row-major, one k-row per term
}

impl EncodedDatabase {
    /// Encode `symbols[i]` as the coefficient of `x^{u_i}`; zero symbols are
    /// dropped. The database may be shorter than the family.
    pub fn encode(symbols: &[u8], family: &MvFamily) -> Result<Self, EncodeError> {
        if symbols.len() > family.len() {
            return Err(EncodeError::TooLong {
                given: symbols.len(),
                capacity: family.len(),
            });
        }
        let m = family.m();
        let mut coeffs = Vec::new();
        let mut exponents = Vec::new();
        for (i, &a) in symbols.iter().enumerate() {
            if a >= m {
                return Err(EncodeError::SymbolRange { index: i, value: a, m });
            }
            if a == 0 {
                continue;
            }
            coeffs.push(a);
            exponents.extend_from_slice(family.u(i));
        }
        Ok(EncodedDatabase {
            m,
            k: family.k(),
            n: symbols.len(),
            coeffs,
            exponents,
        })
    }

    /// Build directly from `(coefficient, exponent-vector)` terms, e.g. when
    /// loading a terms file produced by the `encode` tool.
    pub fn from_terms(
        m: u8,
        k: usize,
        n: usize,
        terms: &[(u8, Vec<u8>)],
    ) -> Result<Self, EncodeError> {
        if k == 0 {
            return Err(EncodeError::ExponentLength {
                got: 0,
                expected: 1,
            });
        }
        let mut coeffs = Vec::new();
        let mut exponents = Vec::new();
        for (index, (a, u)) in terms.iter().enumerate() {
            if u.len() != k {
                return Err(EncodeError::ExponentLength {
                    got: u.len(),
                    expected: k,
                });
            }
            let bad = if *a >= m {
                Some(*a)
            } else {
                u.iter().copied().find(|&x| x >= m)
            };
            if let Some(value) = bad {
                return Err(EncodeError::SymbolRange { index, value, m });
            }
            if *a == 0 {
                continue;
            }
            coeffs.push(*a);
            exponents.extend_from_slice(u);
        }
        Ok(EncodedDatabase {
            m,
            k,
            n,
            coeffs,
            exponents,
        })
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of the original database (including zero symbols).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn term_count(&self) -> usize {
        self.coeffs.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u8, &[u8])> + '_ {
        self.coeffs
            .iter()
            .zip(self.exponents.chunks_exact(self.k))
            .map(|(&a, u)| (a, u))
    }

    /// `F(γ^w) = Σ a_i γ^{⟨w, u_i⟩ mod m}` in `R_{m,m}`.
    pub fn eval_f(&self, w: &[u8]) -> RingElem {
        assert_eq!(w.len(), self.k, "evaluation point has wrong dimension");
        let m = self.m as u64;
        let mut slots = vec![0u64; self.m as usize];
        for (a, u) in self.terms() {
            let e = inner_product_mod(w, u, self.m) as usize;
            slots[e] = (slots[e] + a as u64) % m;
        }
        RingElem::from_residues(self.m, slots.into_iter().map(|c| c as u8).collect())
            .expect("accumulated residues are reduced")
    }

    /// `F^(1)(γ^w)`: coordinate `j` is `Σ a_i (u_i)_j γ^{⟨w, u_i⟩}`.
    pub fn eval_f1(&self, w: &[u8]) -> Vec<RingElem> {
        assert_eq!(w.len(), self.k, "evaluation point has wrong dimension");
        let m = self.m as u64;
        let mut slots = vec![0u64; self.k * self.m as usize];
        for (a, u) in self.terms() {
            let e = inner_product_mod(w, u, self.m) as usize;
            for (j, &uj) in u.iter().enumerate() {
                let idx = j * self.m as usize + e;
                slots[idx] = (slots[idx] + a as u64 * uj as u64) % m;
            }
        }
        slots
            .chunks_exact(self.m as usize)
            .map(|chunk| {
                RingElem::from_residues(self.m, chunk.iter().map(|&c| c as u8).collect())
                    .expect("accumulated residues are reduced")
            })
            .collect()
    }

    /// `F^(2)(γ^w)`: entry `(j, l)` is `Σ a_i (u_i)_j (u_i)_l γ^{⟨w, u_i⟩}`.
    /// The result is symmetric because `u ⊗ u` is.
    pub fn eval_f2(&self, w: &[u8]) -> Vec<Vec<RingElem>> {
        assert_eq!(w.len(), self.k, "evaluation point has wrong dimension");
        let m = self.m as u64;
        let r = self.m as usize;
        let mut slots = vec![0u64; self.k * self.k * r];
        for (a, u) in self.terms() {
            let e = inner_product_mod(w, u, self.m) as usize;
            for (j, &uj) in u.iter().enumerate() {
                for (l, &ul) in u.iter().enumerate().skip(j) {
                    let add = a as u64 * uj as u64 % m * ul as u64 % m;
                    let idx = (j * self.k + l) * r + e;
                    slots[idx] = (slots[idx] + add) % m;
                    if l != j {
                        let idx = (l * self.k + j) * r + e;
                        slots[idx] = (slots[idx] + add) % m;
                    }
                }
            }
        }
        (0..self.k)
            .map(|j| {
                (0..self.k)
                    .map(|l| {
                        let base = (j * self.k + l) * r;
                        RingElem::from_residues(
                            self.m,
                            slots[base..base + r].iter().map(|&c| c as u8).collect(),
                        )
                        .expect("accumulated residues are reduced")
                    })
                    .collect()
            })
            .collect()
    }
}

/// One server's reply: `F` at the queried point, the `k` coordinates of
/// `F^(1)`, and for the second-order variant the `k×k` matrix of `F^(2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerBundle {
    pub f0: RingElem,
    pub f1: Vec<RingElem>,
    pub f2: Option<Vec<Vec<RingElem>>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::search_family;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Term-by-term oracle built from ring primitives, independent of the
    /// slot-accumulation fast path.
    fn eval_f_oracle(db: &EncodedDatabase, w: &[u8]) -> RingElem {
        let (m, r) = (db.m(), db.m() as usize);
        let mut acc = RingElem::zero(m, r);
        for (a, u) in db.terms() {
            let e: u64 = w.iter().zip(u).map(|(&x, &y)| x as u64 * y as u64).sum();
            acc = &acc + &RingElem::gamma_power(e as i64, m, r).scale(a as i64);
        }
        acc
    }

    fn eval_f1_oracle(db: &EncodedDatabase, w: &[u8]) -> Vec<RingElem> {
        let (m, r) = (db.m(), db.m() as usize);
        (0..db.k())
            .map(|j| {
                let mut acc = RingElem::zero(m, r);
                for (a, u) in db.terms() {
                    let e: u64 = w.iter().zip(u).map(|(&x, &y)| x as u64 * y as u64).sum();
                    acc = &acc
                        + &RingElem::gamma_power(e as i64, m, r).scale(a as i64 * u[j] as i64);
                }
                acc
            })
            .collect()
    }

    fn tiny_family() -> MvFamily {
        search_family(6, 4, &[1, 3, 4], 6, 21, 10_000_000).unwrap()
    }

    #[test]
    fn empty_database_has_no_terms_and_evaluates_to_zero() {
        let fam = tiny_family();
        let db = EncodedDatabase::encode(&[0, 0, 0], &fam).unwrap();
        assert_eq!(db.term_count(), 0);
        assert!(db.eval_f(&[0, 0, 0, 0]).is_zero());
        assert!(db.eval_f1(&[1, 2, 3, 4]).iter().all(RingElem::is_zero));
    }

    #[test]
    fn unit_database_keeps_one_term() {
        let fam = tiny_family();
        let db = EncodedDatabase::encode(&[1, 0, 0], &fam).unwrap();
        assert_eq!(db.term_count(), 1);
        let (a, u) = db.terms().next().unwrap();
        assert_eq!(a, 1);
        assert_eq!(u, fam.u(0));
    }

    #[test]
    fn length_and_range_checks() {
        let fam = tiny_family();
        assert!(matches!(
            EncodedDatabase::encode(&[0; 7], &fam),
            Err(EncodeError::TooLong { given: 7, capacity: 6 })
        ));
        assert!(matches!(
            EncodedDatabase::encode(&[6], &fam),
            Err(EncodeError::SymbolRange { .. })
        ));
    }

    #[test]
    fn constant_term_has_zero_gradient() {
        // u = 0 vector: the derivative multiplier kills the term
        let db = EncodedDatabase::from_terms(6, 2, 1, &[(3, vec![0, 0])]).unwrap();
        assert_eq!(db.eval_f(&[4, 5]), RingElem::scalar(3, 6, 6));
        assert!(db.eval_f1(&[4, 5]).iter().all(RingElem::is_zero));
        assert!(db.eval_f2(&[4, 5]).iter().flatten().all(RingElem::is_zero));
    }

    #[test]
    fn known_two_term_evaluation() {
        // terms {(1, (1,2)), (3, (4,5))} at w = (2,3): γ^2 + 3γ^5
        let db = EncodedDatabase::from_terms(
            6,
            2,
            2,
            &[(1, vec![1, 2]), (3, vec![4, 5])],
        )
        .unwrap();
        let got = db.eval_f(&[2, 3]);
        assert_eq!(got, RingElem::from_coeffs(6, &[0, 0, 1, 0, 0, 3]));
    }

    #[test]
    fn single_gamma_power_evaluation() {
        let db = EncodedDatabase::from_terms(6, 2, 1, &[(1, vec![2, 1])]).unwrap();
        // ⟨(1,1),(2,1)⟩ = 3
        assert_eq!(db.eval_f(&[1, 1]), RingElem::gamma_power(3, 6, 6));
    }

    #[test]
    fn derivative_multipliers_are_coefficient_times_exponent() {
        // F(x1,x2) = x1²x2 + 4x1x2 + 3x2², i.e. terms (1,(2,1)), (4,(1,1)), (3,(0,2)).
        // First-order multiplier vectors (over the integers): (2,1), (4,4), (0,6).
        let terms: [(i64, [i64; 2]); 3] = [(1, [2, 1]), (4, [1, 1]), (3, [0, 2])];
        let expected_f1 = [[2, 1], [4, 4], [0, 6]];
        for ((a, u), want) in terms.iter().zip(&expected_f1) {
            assert_eq!([a * u[0], a * u[1]], *want);
        }
        // Second-order multiplier matrices: u ⊗ u scaled by the coefficient.
        let expected_f2: [[[i64; 2]; 2]; 3] = [
            [[4, 2], [2, 1]],
            [[4, 4], [4, 4]],
            [[0, 0], [0, 12]],
        ];
        for ((a, u), want) in terms.iter().zip(&expected_f2) {
            for j in 0..2 {
                for l in 0..2 {
                    assert_eq!(a * u[j] * u[l], want[j][l]);
                }
            }
        }
    }

    #[test]
    fn evaluations_match_term_oracles() {
        let fam = tiny_family();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..25 {
            let symbols: Vec<u8> = (0..fam.len()).map(|_| rng.random_range(0..2)).collect();
            let db = EncodedDatabase::encode(&symbols, &fam).unwrap();
            let w: Vec<u8> = (0..fam.k()).map(|_| rng.random_range(0..6)).collect();
            assert_eq!(db.eval_f(&w), eval_f_oracle(&db, &w));
            assert_eq!(db.eval_f1(&w), eval_f1_oracle(&db, &w));
        }
    }

    #[test]
    fn f2_is_symmetric_and_matches_oracle() {
        let fam = tiny_family();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..10 {
            let symbols: Vec<u8> = (0..fam.len()).map(|_| rng.random_range(0..6)).collect();
            let db = EncodedDatabase::encode(&symbols, &fam).unwrap();
            let w: Vec<u8> = (0..fam.k()).map(|_| rng.random_range(0..6)).collect();
            let f2 = db.eval_f2(&w);
            for j in 0..fam.k() {
                for l in 0..fam.k() {
                    assert_eq!(f2[j][l], f2[l][j]);
                    // oracle: Σ a_i (u_i)_j (u_i)_l γ^{⟨w,u_i⟩}
                    let mut acc = RingElem::zero(6, 6);
                    for (a, u) in db.terms() {
                        let e: u64 =
                            w.iter().zip(u).map(|(&x, &y)| x as u64 * y as u64).sum();
                        acc = &acc
                            + &RingElem::gamma_power(e as i64, 6, 6)
                                .scale(a as i64 * u[j] as i64 * u[l] as i64);
                    }
                    assert_eq!(f2[j][l], acc);
                }
            }
        }
    }

    #[test]
    fn single_term_f2_is_outer_square_times_monomial() {
        let db = EncodedDatabase::from_terms(6, 2, 1, &[(1, vec![2, 3])]).unwrap();
        let w = [1u8, 1];
        let e = 2 + 3; // ⟨w, u⟩ = 5
        let f2 = db.eval_f2(&w);
        for j in 0..2 {
            for l in 0..2 {
                let want =
                    RingElem::gamma_power(e, 6, 6).scale([2i64, 3][j] * [2i64, 3][l]);
                assert_eq!(f2[j][l], want);
            }
        }
    }

    /// Brute-force restriction coefficients of t ↦ F(γ^{z+t·v}):
    /// c_ℓ = Σ_{i: ⟨u_i,v⟩ ≡ ℓ} a_i γ^{⟨z,u_i⟩}.
    fn restriction_coeffs(db: &EncodedDatabase, z: &[u8], v: &[u8]) -> Vec<RingElem> {
        let (m, r) = (db.m(), db.m() as usize);
        let mut c = vec![RingElem::zero(m, r); m as usize];
        for (a, u) in db.terms() {
            let l = inner_product_mod(u, v, m) as usize;
            let e: u64 = z.iter().zip(u).map(|(&x, &y)| x as u64 * y as u64).sum();
            c[l] = &c[l] + &RingElem::gamma_power(e as i64, m, r).scale(a as i64);
        }
        c
    }

    #[test]
    fn directional_derivative_identities() {
        let fam = tiny_family();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let symbols: Vec<u8> = (0..fam.len()).map(|_| rng.random_range(0..6)).collect();
            let db = EncodedDatabase::encode(&symbols, &fam).unwrap();
            let z: Vec<u8> = (0..fam.k()).map(|_| rng.random_range(0..6)).collect();
            let v: Vec<u8> = (0..fam.k()).map(|_| rng.random_range(0..6)).collect();
            let t = rng.random_range(0..6i64);
            let point: Vec<u8> = z
                .iter()
                .zip(&v)
                .map(|(&zi, &vi)| ((zi as i64 + t * vi as i64).rem_euclid(6)) as u8)
                .collect();
            let c = restriction_coeffs(&db, &z, &v);

            // Σ_ℓ ℓ·c_ℓ·γ^{tℓ} = ⟨F^(1)(γ^{z+tv}), v⟩
            let mut first = RingElem::zero(6, 6);
            for (l, cl) in c.iter().enumerate() {
                first = &first
                    + &(&cl.scale(l as i64) * &RingElem::gamma_power(t * l as i64, 6, 6));
            }
            let f1 = db.eval_f1(&point);
            let mut rhs = RingElem::zero(6, 6);
            for (f, &vi) in f1.iter().zip(&v) {
                rhs = &rhs + &f.scale(vi as i64);
            }
            assert_eq!(first, rhs);

            // Σ_ℓ ℓ²·c_ℓ·γ^{tℓ} = ⟨F^(2)(γ^{z+tv}), v ⊗ v⟩
            let mut second = RingElem::zero(6, 6);
            for (l, cl) in c.iter().enumerate() {
                second = &second
                    + &(&cl.scale((l * l) as i64) * &RingElem::gamma_power(t * l as i64, 6, 6));
            }
            let f2 = db.eval_f2(&point);
            let mut rhs2 = RingElem::zero(6, 6);
            for j in 0..fam.k() {
                for l in 0..fam.k() {
                    rhs2 = &rhs2 + &f2[j][l].scale(v[j] as i64 * v[l] as i64);
                }
            }
            assert_eq!(second, rhs2);
        }
    }

    #[test]
    fn encoding_is_linear() {
        let fam = tiny_family();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..10 {
            let a: Vec<u8> = (0..fam.len()).map(|_| rng.random_range(0..6)).collect();
            let b: Vec<u8> = (0..fam.len()).map(|_| rng.random_range(0..6)).collect();
            let sum: Vec<u8> = a.iter().zip(&b).map(|(&x, &y)| (x + y) % 6).collect();
            let w: Vec<u8> = (0..fam.k()).map(|_| rng.random_range(0..6)).collect();
            let da = EncodedDatabase::encode(&a, &fam).unwrap();
            let db_ = EncodedDatabase::encode(&b, &fam).unwrap();
            let dsum = EncodedDatabase::encode(&sum, &fam).unwrap();
            assert_eq!(dsum.eval_f(&w), &da.eval_f(&w) + &db_.eval_f(&w));
        }
    }
}
