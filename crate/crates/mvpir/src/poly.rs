//! Univariate polynomials with coefficients in `R_{m,r}`, and the CRT lift
//! `R_{p_1,r}[x] × … × R_{p_s,r}[x] → R_{m,r}[x]` for `m = p_1⋯p_s`.

use crate::ring::{crt_combine, gcd, RingElem, RingError};

/// Polynomial in one formal variable over `R_{m,r}`; index `i` holds the
/// coefficient of `x^i` and trailing zero coefficients are trimmed away.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingPoly {
    modulus: u8,
    order: usize,
    coeffs: Vec<RingElem>,
}

impl RingPoly {
    pub fn zero(modulus: u8, order: usize) -> Self {
        assert!(modulus >= 2 && order >= 1);
        RingPoly {
            modulus,
            order,
            coeffs: Vec::new(),
        }
    }

    pub fn new(modulus: u8, order: usize, coeffs: Vec<RingElem>) -> Self {
        for c in &coeffs {
            assert_eq!(c.modulus(), modulus, "mixed coefficient moduli");
            assert_eq!(c.order(), order, "mixed coefficient orders");
        }
        let mut p = RingPoly {
            modulus,
            order,
            coeffs,
        };
        p.trim();
        p
    }

    pub fn constant(c: RingElem) -> Self {
        let (m, r) = (c.modulus(), c.order());
        Self::new(m, r, vec![c])
    }

    /// The monic linear polynomial `x − root`.
    pub fn monic_linear(root: &RingElem) -> Self {
        let (m, r) = (root.modulus(), root.order());
        Self::new(m, r, vec![-root, RingElem::one(m, r)])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(RingElem::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> RingElem {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| RingElem::zero(self.modulus, self.order))
    }

    pub fn coeffs(&self) -> &[RingElem] {
        &self.coeffs
    }

    pub fn eval(&self, x: &RingElem) -> RingElem {
        let mut acc = RingElem::zero(self.modulus, self.order);
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn mul(&self, rhs: &RingPoly) -> RingPoly {
        assert_eq!(self.modulus, rhs.modulus, "mixed moduli");
        assert_eq!(self.order, rhs.order, "mixed orders");
        if self.is_zero() || rhs.is_zero() {
            return RingPoly::zero(self.modulus, self.order);
        }
        let mut out =
            vec![RingElem::zero(self.modulus, self.order); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        RingPoly::new(self.modulus, self.order, out)
    }

    /// Coefficient-wise reduction into `R_{p,r}[x]`.
    pub fn reduce_mod_prime(&self, p: u8) -> Result<RingPoly, RingError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.reduce_mod_prime(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RingPoly::new(p, self.order, coeffs))
    }
}

/// Lift polynomials over `R_{p_i,r}` (pairwise coprime `p_i`) to the unique
/// polynomial over `R_{m,r}`, `m = Π p_i`, reducing back to each part. The
/// lift works per x-coefficient and per γ-slot, so the degree of the result
/// is the maximum of the part degrees.
pub fn crt_lift_poly(parts: &[RingPoly]) -> Result<RingPoly, RingError> {
    if parts.is_empty() {
        return Err(RingError::EmptyInput);
    }
    let order = parts[0].order();
    for p in parts {
        if p.order() != order {
            return Err(RingError::EmptyInput);
        }
    }
    for (i, a) in parts.iter().enumerate() {
        for b in &parts[i + 1..] {
            if gcd(a.modulus() as u64, b.modulus() as u64) != 1 {
                return Err(RingError::NotCoprime {
                    a: a.modulus(),
                    b: b.modulus(),
                });
            }
        }
    }
    let product: u64 = parts.iter().map(|p| p.modulus() as u64).product();
    if product > 255 {
        return Err(RingError::ModulusTooLarge { product });
    }
    let m = product as u8;
    let deg = parts.iter().filter_map(|p| p.degree()).max();
    let Some(deg) = deg else {
        return Ok(RingPoly::zero(m, order));
    };
    let mut coeffs = Vec::with_capacity(deg + 1);
    for i in 0..=deg {
        let per_part: Vec<RingElem> = parts.iter().map(|p| p.coeff(i)).collect();
        let mut slots = vec![0i64; order];
        for (l, slot) in slots.iter_mut().enumerate() {
            let residues: Vec<(u8, u8)> = per_part
                .iter()
                .map(|c| (c.coeff(l), c.modulus()))
                .collect();
            *slot = crt_combine(&residues)? as i64;
        }
        coeffs.push(RingElem::from_coeffs(m, &slots));
    }
    Ok(RingPoly::new(m, order, coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_poly(rng: &mut impl Rng, m: u8, r: usize, deg: usize) -> RingPoly {
        let coeffs: Vec<RingElem> = (0..=deg)
            .map(|_| {
                let c: Vec<i64> = (0..r).map(|_| rng.random_range(0..m as i64)).collect();
                RingElem::from_coeffs(m, &c)
            })
            .collect();
        RingPoly::new(m, r, coeffs)
    }

    #[test]
    fn lift_of_linear_parts() {
        // (x − γ^4) over R_{2,6} and (x − γ^3) over R_{3,6} lift to
        // x + 3γ^4 + 2γ^3 over R_{6,6}.
        let f1 = RingPoly::monic_linear(&RingElem::gamma_power(4, 2, 6));
        let f2 = RingPoly::monic_linear(&RingElem::gamma_power(3, 3, 6));
        let f = crt_lift_poly(&[f1.clone(), f2.clone()]).unwrap();
        assert_eq!(f.degree(), Some(1));
        assert_eq!(f.coeff(0), RingElem::from_coeffs(6, &[0, 0, 0, 2, 3, 0]));
        assert_eq!(f.coeff(1), RingElem::one(6, 6));
        // reducing the lift recovers both parts
        assert_eq!(f.reduce_mod_prime(2).unwrap(), f1);
        assert_eq!(f.reduce_mod_prime(3).unwrap(), f2);
    }

    #[test]
    fn lift_of_matching_constants_is_that_constant() {
        for c in 0..6i64 {
            let whole = RingElem::scalar(c, 6, 6);
            let parts = [
                RingPoly::constant(whole.reduce_mod_prime(2).unwrap()),
                RingPoly::constant(whole.reduce_mod_prime(3).unwrap()),
            ];
            let lifted = crt_lift_poly(&parts).unwrap();
            if c == 0 {
                assert!(lifted.is_zero());
            } else {
                assert_eq!(lifted, RingPoly::constant(whole));
            }
        }
    }

    #[test]
    fn lift_then_reduce_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let deg = rng.random_range(0..5usize);
            let f = random_poly(&mut rng, 30, 30, deg);
            let parts: Vec<RingPoly> = [2u8, 3, 5]
                .iter()
                .map(|&p| f.reduce_mod_prime(p).unwrap())
                .collect();
            let lifted = crt_lift_poly(&parts).unwrap();
            assert_eq!(lifted, f);
            for (part, &p) in parts.iter().zip(&[2u8, 3, 5]) {
                assert_eq!(lifted.reduce_mod_prime(p).unwrap(), *part);
            }
        }
    }

    #[test]
    fn lift_rejects_non_coprime_moduli() {
        let a = RingPoly::constant(RingElem::one(2, 6));
        let b = RingPoly::constant(RingElem::one(4, 6));
        assert_eq!(
            crt_lift_poly(&[a, b]),
            Err(RingError::NotCoprime { a: 2, b: 4 })
        );
    }

    #[test]
    fn eval_matches_power_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let deg = rng.random_range(0..4usize);
            let f = random_poly(&mut rng, 6, 6, deg);
            let x = {
                let c: Vec<i64> = (0..6).map(|_| rng.random_range(0..6i64)).collect();
                RingElem::from_coeffs(6, &c)
            };
            let mut expect = RingElem::zero(6, 6);
            for (i, c) in f.coeffs().iter().enumerate() {
                expect = &expect + &(c * &x.pow(i as u32));
            }
            assert_eq!(f.eval(&x), expect);
        }
    }

    #[test]
    fn degree_tracks_trimming() {
        let zero = RingElem::zero(6, 6);
        let one = RingElem::one(6, 6);
        let p = RingPoly::new(6, 6, vec![one.clone(), zero.clone(), zero.clone()]);
        assert_eq!(p.degree(), Some(0));
        assert!(RingPoly::new(6, 6, vec![zero]).is_zero());
        assert_eq!(RingPoly::zero(6, 6).degree(), None);
        let _ = one;
    }
}
