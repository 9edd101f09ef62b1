//! Exact arithmetic in `Z_m` and in the group ring `R_{m,r} = Z_m[γ]/(γ^r − 1)`.
//!
//! Elements are length-`r` coefficient vectors over `Z_m`, stored as canonical
//! residues in `[0, m)`. With that normalization an element is zero exactly
//! when every coefficient byte is zero, and the wire encoding is simply the
//! coefficient vector itself (one byte per coefficient, so `m <= 255`).

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("modulus {p} does not divide {m}")]
    NotADivisor { p: u8, m: u8 },
    #[error("{image} is not an order-{order} root of unity mod {target}")]
    NotRootOfUnity { image: u8, order: usize, target: u8 },
    #[error("target modulus {target} does not divide {m}")]
    BadHomTarget { target: u8, m: u8 },
    #[error("moduli {a} and {b} are not coprime")]
    NotCoprime { a: u8, b: u8 },
    #[error("combined modulus {product} does not fit in one byte")]
    ModulusTooLarge { product: u64 },
    #[error("coefficient {value} is out of range for modulus {m}")]
    CoefficientRange { value: u8, m: u8 },
    #[error("a ring element needs at least one coefficient")]
    EmptyCoefficients,
    #[error("nothing to combine")]
    EmptyInput,
}

/// A residue in `Z_m`, kept in `[0, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Zm {
    value: u8,
    modulus: u8,
}

impl Zm {
    pub fn new(value: i64, modulus: u8) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        Zm {
            value: value.rem_euclid(modulus as i64) as u8,
            modulus,
        }
    }

    pub fn value(&self) -> u8 {
        self.value
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for Zm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn mod_pow(mut base: u64, mut exp: u64, modulus: u64) -> u64 {
    assert!(modulus >= 1);
    let mut acc: u64 = 1 % modulus;
    base %= modulus;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % modulus;
        }
        base = base * base % modulus;
        exp >>= 1;
    }
    acc
}

/// Extended-Euclid inverse of `a` mod `modulus`, when it exists.
pub fn mod_inverse(a: u64, modulus: u64) -> Option<u64> {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (modulus as i128, (a % modulus) as i128);
    while new_r != 0 {
        let quotient = r / new_r;
        (t, new_t) = (new_t, t - quotient * new_t);
        (r, new_r) = (new_r, r - quotient * new_r);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(modulus as i128) as u64)
}

/// Combine residues `(value, modulus)` with pairwise coprime moduli into the
/// unique residue modulo the product. The product must still fit in one byte.
pub fn crt_combine(parts: &[(u8, u8)]) -> Result<u8, RingError> {
    if parts.is_empty() {
        return Err(RingError::EmptyInput);
    }
    for (i, &(_, a)) in parts.iter().enumerate() {
        for &(_, b) in &parts[i + 1..] {
            if gcd(a as u64, b as u64) != 1 {
                return Err(RingError::NotCoprime { a, b });
            }
        }
    }
    let product: u64 = parts.iter().map(|&(_, p)| p as u64).product();
    if product > 255 {
        return Err(RingError::ModulusTooLarge { product });
    }
    let mut x: u64 = (parts[0].0 % parts[0].1) as u64;
    let mut m: u64 = parts[0].1 as u64;
    for &(value, p) in &parts[1..] {
        let p = p as u64;
        let inv = mod_inverse(m % p, p).expect("coprimality checked above");
        let diff = ((value as u64 % p) + p - x % p) % p;
        x += m * (diff * inv % p);
        m *= p;
    }
    Ok((x % m) as u8)
}

/// An element of `R_{m,r} = Z_m[γ]/(γ^r − 1)`.
///
/// Index `ℓ` of the coefficient vector holds the coefficient of `γ^ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElem {
    modulus: u8,
    coeffs: Vec<u8>,
}

impl RingElem {
    pub fn zero(modulus: u8, order: usize) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        assert!(order >= 1, "cyclic order must be at least 1");
        RingElem {
            modulus,
            coeffs: vec![0; order],
        }
    }

    pub fn one(modulus: u8, order: usize) -> Self {
        Self::scalar(1, modulus, order)
    }

    /// The constant `value` embedded at `γ^0`.
    pub fn scalar(value: i64, modulus: u8, order: usize) -> Self {
        let mut e = Self::zero(modulus, order);
        e.coeffs[0] = value.rem_euclid(modulus as i64) as u8;
        e
    }

    /// The monomial `γ^t` (exponent taken mod `r`, so `t = r` gives the identity).
    pub fn gamma_power(t: i64, modulus: u8, order: usize) -> Self {
        let mut e = Self::zero(modulus, order);
        e.coeffs[t.rem_euclid(order as i64) as usize] = 1;
        e
    }

    /// Build from arbitrary integer coefficients, normalizing each mod `m`.
    pub fn from_coeffs(modulus: u8, coeffs: &[i64]) -> Self {
        assert!(modulus >= 2, "modulus must be at least 2");
        assert!(!coeffs.is_empty(), "need at least one coefficient");
        RingElem {
            modulus,
            coeffs: coeffs
                .iter()
                .map(|&c| c.rem_euclid(modulus as i64) as u8)
                .collect(),
        }
    }

    /// Strict construction from already-reduced residues (the wire path).
    pub fn from_residues(modulus: u8, coeffs: Vec<u8>) -> Result<Self, RingError> {
        if coeffs.is_empty() {
            return Err(RingError::EmptyCoefficients);
        }
        if let Some(&bad) = coeffs.iter().find(|&&c| c >= modulus) {
            return Err(RingError::CoefficientRange {
                value: bad,
                m: modulus,
            });
        }
        Ok(RingElem { modulus, coeffs })
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    /// The cyclic order `r`.
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, l: usize) -> u8 {
        self.coeffs[l]
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Multiply by an integer scalar.
    pub fn scale(&self, s: i64) -> Self {
        let m = self.modulus as i64;
        let s = s.rem_euclid(m);
        RingElem {
            modulus: self.modulus,
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| ((c as i64 * s) % m) as u8)
                .collect(),
        }
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut acc = Self::one(self.modulus, self.order());
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            exp >>= 1;
        }
        acc
    }

    /// Coordinate-wise reduction into `R_{p,r}`; `p` must divide `m`.
    pub fn reduce_mod_prime(&self, p: u8) -> Result<Self, RingError> {
        if p < 2 || !self.modulus.is_multiple_of(p) {
            return Err(RingError::NotADivisor {
                p,
                m: self.modulus,
            });
        }
        Ok(RingElem {
            modulus: p,
            coeffs: self.coeffs.iter().map(|&c| c % p).collect(),
        })
    }

    /// Apply the ring homomorphism that fixes scalars (reduced into the target)
    /// and sends `γ` to `gamma_image`: returns `Σ c_ℓ · gamma_image^ℓ` in
    /// `Z_target`. `gamma_image` must be an `r`-th root of unity there and
    /// `target` must divide `m`.
    pub fn hom_apply(&self, gamma_image: u8, target: u8) -> Result<Zm, RingError> {
        if target < 2 || !self.modulus.is_multiple_of(target) {
            return Err(RingError::BadHomTarget {
                target,
                m: self.modulus,
            });
        }
        let image = (gamma_image % target) as u64;
        let t = target as u64;
        let r = self.order();
        if mod_pow(image, r as u64, t) != 1 % t {
            return Err(RingError::NotRootOfUnity {
                image: gamma_image,
                order: r,
                target,
            });
        }
        let mut acc: u64 = 0;
        let mut power: u64 = 1 % t;
        for &c in &self.coeffs {
            acc = (acc + (c as u64 % t) * power) % t;
            power = power * image % t;
        }
        Ok(Zm::new(acc as i64, target))
    }

    /// Wire encoding: exactly `r` bytes, byte `ℓ` is the coefficient of `γ^ℓ`.
    pub fn to_bytes(&self) -> &[u8] {
        &self.coeffs
    }

    fn check_same_ring(&self, other: &Self) {
        assert_eq!(
            self.modulus, other.modulus,
            "mismatched moduli: {} vs {}",
            self.modulus, other.modulus
        );
        assert_eq!(
            self.coeffs.len(),
            other.coeffs.len(),
            "mismatched cyclic orders: {} vs {}",
            self.coeffs.len(),
            other.coeffs.len()
        );
    }
}

impl Add for &RingElem {
    type Output = RingElem;

    fn add(self, rhs: &RingElem) -> RingElem {
        self.check_same_ring(rhs);
        let m = self.modulus as u16;
        RingElem {
            modulus: self.modulus,
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(&a, &b)| ((a as u16 + b as u16) % m) as u8)
                .collect(),
        }
    }
}

impl Sub for &RingElem {
    type Output = RingElem;

    fn sub(self, rhs: &RingElem) -> RingElem {
        self + &(-rhs)
    }
}

impl Neg for &RingElem {
    type Output = RingElem;

    fn neg(self) -> RingElem {
        let m = self.modulus;
        RingElem {
            modulus: m,
            coeffs: self
                .coeffs
                .iter()
                .map(|&c| if c == 0 { 0 } else { m - c })
                .collect(),
        }
    }
}

impl Mul for &RingElem {
    type Output = RingElem;

    /// Schoolbook convolution with exponents folded mod `r` (γ^r = 1).
    /// `r` stays tiny here, so nothing faster is warranted.
    fn mul(self, rhs: &RingElem) -> RingElem {
        self.check_same_ring(rhs);
        let r = self.coeffs.len();
        let m = self.modulus as u32;
        let mut out = vec![0u32; r];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let idx = (i + j) % r;
                out[idx] = (out[idx] + a as u32 * b as u32) % m;
            }
        }
        RingElem {
            modulus: self.modulus,
            coeffs: out.into_iter().map(|c| c as u8).collect(),
        }
    }
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for l in (0..self.coeffs.len()).rev() {
            let c = self.coeffs[l];
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (c, l) {
                (c, 0) => write!(f, "{c}")?,
                (1, 1) => write!(f, "γ")?,
                (c, 1) => write!(f, "{c}γ")?,
                (1, l) => write!(f, "γ^{l}")?,
                (c, l) => write!(f, "{c}γ^{l}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_elem(rng: &mut impl Rng, m: u8, r: usize) -> RingElem {
        let coeffs: Vec<i64> = (0..r).map(|_| rng.random_range(0..m as i64)).collect();
        RingElem::from_coeffs(m, &coeffs)
    }

    /// Independent oracle: plain coefficient-wise sum mod m.
    fn add_oracle(a: &RingElem, b: &RingElem) -> RingElem {
        let coeffs: Vec<i64> = a
            .coeffs()
            .iter()
            .zip(b.coeffs())
            .map(|(&x, &y)| (x as i64 + y as i64) % a.modulus() as i64)
            .collect();
        RingElem::from_coeffs(a.modulus(), &coeffs)
    }

    /// Independent oracle: full polynomial product of degree 2r−2, then a
    /// second pass folding exponent e onto e mod r.
    fn mul_oracle(a: &RingElem, b: &RingElem) -> RingElem {
        let r = a.order();
        let m = a.modulus() as i64;
        let mut wide = vec![0i64; 2 * r - 1];
        for i in 0..r {
            for j in 0..r {
                wide[i + j] += a.coeff(i) as i64 * b.coeff(j) as i64;
            }
        }
        let mut folded = vec![0i64; r];
        for (e, &c) in wide.iter().enumerate() {
            folded[e % r] = (folded[e % r] + c) % m;
        }
        RingElem::from_coeffs(a.modulus(), &folded)
    }

    #[test]
    fn additive_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_elem(&mut rng, 6, 6);
            assert_eq!(&a + &RingElem::zero(6, 6), a);
        }
    }

    #[test]
    fn coefficients_cancel_mod_m() {
        // (3γ^5 + 4γ^4) + (3γ^5 + 2γ^4) = 0 in R_{6,6}
        let a = RingElem::from_coeffs(6, &[0, 0, 0, 0, 4, 3]);
        let b = RingElem::from_coeffs(6, &[0, 0, 0, 0, 2, 3]);
        assert!((&a + &b).is_zero());
    }

    #[test]
    fn gamma_times_gamma_r_minus_1_is_one() {
        for (m, r) in [(6u8, 6usize), (30, 30), (2, 2)] {
            let g = RingElem::gamma_power(1, m, r);
            let g_last = RingElem::gamma_power(r as i64 - 1, m, r);
            assert_eq!(&g * &g_last, RingElem::one(m, r));
        }
    }

    #[test]
    fn known_product_in_r66() {
        // γ(γ−1)^4(γ^2+4γ+1) = 3γ^5 + 4γ^4 + 3γ^3 + 2γ
        let g = RingElem::gamma_power(1, 6, 6);
        let g_minus_1 = RingElem::from_coeffs(6, &[-1, 1, 0, 0, 0, 0]);
        let quad = RingElem::from_coeffs(6, &[1, 4, 1, 0, 0, 0]);
        let mut p = g;
        for _ in 0..4 {
            p = &p * &g_minus_1;
        }
        p = &p * &quad;
        assert_eq!(p, RingElem::from_coeffs(6, &[0, 2, 0, 3, 4, 3]));
        assert_eq!(p.to_string(), "3γ^5 + 4γ^4 + 3γ^3 + 2γ");
    }

    #[test]
    fn gamma_power_wraps_and_is_identity_at_zero() {
        assert_eq!(RingElem::gamma_power(0, 6, 6), RingElem::one(6, 6));
        assert_eq!(RingElem::gamma_power(6, 6, 6), RingElem::one(6, 6));
        assert_eq!(RingElem::gamma_power(-1, 6, 6), RingElem::gamma_power(5, 6, 6));
    }

    #[test]
    fn gamma_multiplication_rotates_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let a = random_elem(&mut rng, 6, 6);
            let t = rng.random_range(0..6i64);
            let shifted = &RingElem::gamma_power(t, 6, 6) * &a;
            let mut expect = vec![0i64; 6];
            for l in 0..6 {
                expect[(l + t as usize) % 6] = a.coeff(l) as i64;
            }
            assert_eq!(shifted, RingElem::from_coeffs(6, &expect));
        }
    }

    #[test]
    fn gamma_power_is_never_a_zero_divisor() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut a = random_elem(&mut rng, 6, 6);
            while a.is_zero() {
                a = random_elem(&mut rng, 6, 6);
            }
            let t = rng.random_range(0..6i64);
            assert!(!(&RingElem::gamma_power(t, 6, 6) * &a).is_zero());
        }
    }

    #[test]
    fn zero_test_follows_coefficients() {
        assert!(RingElem::zero(6, 6).is_zero());
        assert!(RingElem::from_coeffs(6, &[0, 0, 6, 0, 0, 0]).is_zero());
        assert!(!RingElem::from_coeffs(6, &[0, 2, 0, 3, 4, 3]).is_zero());
    }

    #[test]
    fn reduce_mod_prime_examples() {
        let mu = RingElem::from_coeffs(6, &[1, 0, 0, 2, 3, 0]);
        let mod2 = mu.reduce_mod_prime(2).unwrap();
        assert_eq!(mod2, RingElem::from_coeffs(2, &[1, 0, 0, 0, 1, 0]));
        assert!(!mod2.is_zero());
        let mod3 = mu.reduce_mod_prime(3).unwrap();
        assert_eq!(mod3, RingElem::from_coeffs(3, &[1, 0, 0, 2, 0, 0]));
        assert!(!mod3.is_zero());
        assert!(RingElem::zero(6, 6).reduce_mod_prime(3).unwrap().is_zero());
        assert_eq!(
            RingElem::zero(6, 6).reduce_mod_prime(5),
            Err(RingError::NotADivisor { p: 5, m: 6 })
        );
    }

    #[test]
    fn hom_apply_known_values() {
        let det = RingElem::from_coeffs(6, &[0, 2, 0, 3, 4, 3]);
        // γ -> −1 over Z_6
        assert_eq!(det.hom_apply(5, 6).unwrap(), Zm::new(2, 6));
        // γ -> −1 over F_3 (coefficients reduced mod 3)
        let over_f3 = det.hom_apply(2, 3).unwrap();
        assert!(!over_f3.is_zero());
        assert!(RingElem::zero(6, 6).hom_apply(5, 6).unwrap().is_zero());
    }

    #[test]
    fn hom_apply_rejects_bad_parameters() {
        let a = RingElem::one(6, 6);
        assert_eq!(
            a.hom_apply(2, 6),
            Err(RingError::NotRootOfUnity {
                image: 2,
                order: 6,
                target: 6
            })
        );
        assert_eq!(a.hom_apply(1, 5), Err(RingError::BadHomTarget { target: 5, m: 6 }));
    }

    #[test]
    fn hom_apply_is_a_ring_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for target in [6u8, 3, 2] {
            for _ in 0..50 {
                let a = random_elem(&mut rng, 6, 6);
                let b = random_elem(&mut rng, 6, 6);
                let img = (target - 1) % target; // −1 mod target
                let ha = a.hom_apply(img, target).unwrap().value() as i64;
                let hb = b.hom_apply(img, target).unwrap().value() as i64;
                let h_sum = (&a + &b).hom_apply(img, target).unwrap();
                let h_prod = (&a * &b).hom_apply(img, target).unwrap();
                assert_eq!(h_sum, Zm::new(ha + hb, target));
                assert_eq!(h_prod, Zm::new(ha * hb, target));
            }
        }
    }

    #[test]
    fn exhaustive_ring_axioms_m2_r2() {
        let elems: Vec<RingElem> = (0..2i64)
            .flat_map(|c0| (0..2i64).map(move |c1| RingElem::from_coeffs(2, &[c0, c1])))
            .collect();
        for a in &elems {
            for b in &elems {
                assert_eq!(a + b, b + a);
                assert_eq!(a * b, b * a);
                for c in &elems {
                    assert_eq!(&(a + b) + c, a + &(b + c));
                    assert_eq!(&(a * b) * c, a * &(b * c));
                    assert_eq!(a * &(b + c), &(a * b) + &(a * c));
                }
            }
        }
    }

    #[test]
    #[should_panic(expected = "mismatched moduli")]
    fn mixed_modulus_addition_panics() {
        let _ = &RingElem::one(6, 6) + &RingElem::one(3, 6);
    }

    #[test]
    #[should_panic(expected = "mismatched cyclic orders")]
    fn mixed_order_multiplication_panics() {
        let _ = &RingElem::one(6, 6) * &RingElem::one(6, 3);
    }

    #[test]
    fn crt_combine_pairs() {
        assert_eq!(crt_combine(&[(1, 2), (0, 3)]).unwrap(), 3);
        assert_eq!(crt_combine(&[(0, 2), (2, 3)]).unwrap(), 2);
        assert_eq!(crt_combine(&[(1, 2), (1, 3), (1, 5)]).unwrap(), 1);
        assert_eq!(crt_combine(&[(0, 2), (1, 3), (0, 5)]).unwrap(), 10);
        assert_eq!(
            crt_combine(&[(1, 2), (1, 4)]),
            Err(RingError::NotCoprime { a: 2, b: 4 })
        );
    }

    #[test]
    fn mod_inverse_agrees_with_fermat() {
        for p in [2u64, 3, 5, 7, 31, 251] {
            for a in 1..p.min(40) {
                assert_eq!(mod_inverse(a, p), Some(mod_pow(a, p - 2, p)));
            }
        }
        assert_eq!(mod_inverse(2, 6), None);
    }

    #[test]
    fn serialization_round_trip() {
        let a = RingElem::from_coeffs(6, &[0, 2, 0, 3, 4, 3]);
        let bytes = a.to_bytes().to_vec();
        assert_eq!(bytes, vec![0, 2, 0, 3, 4, 3]);
        assert_eq!(RingElem::from_residues(6, bytes).unwrap(), a);
        assert_eq!(
            RingElem::from_residues(6, vec![0, 6]),
            Err(RingError::CoefficientRange { value: 6, m: 6 })
        );
        assert_eq!(
            RingElem::from_residues(6, vec![]),
            Err(RingError::EmptyCoefficients)
        );
    }

    proptest! {
        #[test]
        fn addition_matches_schoolbook_oracle(
            coeffs_a in proptest::collection::vec(0i64..30, 6),
            coeffs_b in proptest::collection::vec(0i64..30, 6),
            m in prop_oneof![Just(2u8), Just(3), Just(5), Just(6), Just(30)],
        ) {
            let a = RingElem::from_coeffs(m, &coeffs_a);
            let b = RingElem::from_coeffs(m, &coeffs_b);
            prop_assert_eq!(&a + &b, add_oracle(&a, &b));
        }

        #[test]
        fn multiplication_matches_convolution_oracle(
            coeffs_a in proptest::collection::vec(0i64..30, 6),
            coeffs_b in proptest::collection::vec(0i64..30, 6),
            m in prop_oneof![Just(2u8), Just(3), Just(5), Just(6), Just(30)],
        ) {
            let a = RingElem::from_coeffs(m, &coeffs_a);
            let b = RingElem::from_coeffs(m, &coeffs_b);
            prop_assert_eq!(&a * &b, mul_oracle(&a, &b));
        }

        #[test]
        fn ring_axioms_hold_on_random_triples(
            coeffs in proptest::collection::vec(0i64..6, 3 * 6),
        ) {
            let a = RingElem::from_coeffs(6, &coeffs[0..6]);
            let b = RingElem::from_coeffs(6, &coeffs[6..12]);
            let c = RingElem::from_coeffs(6, &coeffs[12..18]);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }
    }
}
