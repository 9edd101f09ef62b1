//! The classical degree-3 interpolation scheme over a small prime field,
//! kept in-process as the O(n^{1/3}) communication reference point.
//!
//! Index `i` maps to the weight-3 indicator point `φ(i) ∈ {0,1}^k` (so `k`
//! is the smallest integer with `n ≤ C(k,3)`), the database becomes
//! `F(x) = Σ a_i Π_{j: φ(i)_j = 1} x_j`, and a retrieval sends server `i`
//! the point `φ(τ) + t_i·z` for one random `z`. Each answer is `F` plus the
//! full gradient at the received point; by the chain rule
//! `g'(t) = ⟨∇F(φ(τ)+t·z), z⟩` for the restriction `g(t) = F(φ(τ)+t·z)`,
//! so two evaluations and two derivatives determine the cubic `g` and with
//! it `g(0) = a_τ`.

use rand::Rng;

use crate::matrix::dot;
use crate::ring::{mod_inverse, RingElem};
use crate::scheme::{build_matrix, SchemeConfig, SchemeError, Variant};

/// Largest supported dimension; caps the database at C(64,3) = 41664 bits.
pub const MAX_DIMENSION: usize = 64;

fn choose3(k: usize) -> usize {
    if k < 3 {
        0
    } else {
        k * (k - 1) * (k - 2) / 6
    }
}

pub struct BaselineScheme {
    field: u8,
    k: usize,
    t_values: Vec<i64>,
    support: Vec<[usize; 3]>, // φ(i): which three coordinates are 1
    adj_first_row: Vec<RingElem>,
    det_inverse: u64,
}

impl BaselineScheme {
    pub fn new(cfg: &SchemeConfig, n: usize) -> Result<Self, SchemeError> {
        if cfg.variant != Variant::BaselineCubic {
            return Err(SchemeError::Config("not a baseline configuration".into()));
        }
        cfg.validate()?;
        if n == 0 || n > choose3(MAX_DIMENSION) {
            return Err(SchemeError::Capacity {
                needed: n,
                max: choose3(MAX_DIMENSION),
            });
        }
        let k = (3..=MAX_DIMENSION)
            .find(|&k| choose3(k) >= n)
            .expect("bounded above");
        let mut support = Vec::with_capacity(n);
        'fill: for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    support.push([a, b, c]);
                    if support.len() == n {
                        break 'fill;
                    }
                }
            }
        }
        let matrix = build_matrix(cfg)?;
        let det = matrix.determinant();
        let det_inverse = mod_inverse(det.coeff(0) as u64, cfg.m as u64).ok_or_else(|| {
            SchemeError::Config("interpolation matrix is singular over the field".into())
        })?;
        Ok(BaselineScheme {
            field: cfg.m,
            k,
            t_values: cfg.t_values.clone(),
            support,
            adj_first_row: matrix.adjugate_first_row(),
            det_inverse,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.support.len()
    }

    pub fn field(&self) -> u8 {
        self.field
    }

    /// Per-server query points `φ(τ) + t_i·z` over the field.
    pub fn queries_for_z(&self, tau: usize, z: &[u8]) -> Result<Vec<Vec<u8>>, SchemeError> {
        if tau >= self.support.len() {
            return Err(SchemeError::TauOutOfRange {
                tau,
                n: self.support.len(),
            });
        }
        assert_eq!(z.len(), self.k);
        let q = self.field as i64;
        let mut phi = vec![0i64; self.k];
        for &j in &self.support[tau] {
            phi[j] = 1;
        }
        Ok(self
            .t_values
            .iter()
            .map(|&t| {
                phi.iter()
                    .zip(z)
                    .map(|(&p, &zi)| (p + t * zi as i64).rem_euclid(q) as u8)
                    .collect()
            })
            .collect())
    }

    /// `F` and `∇F` at one point; this is the whole per-server computation.
    pub fn answer(&self, bits: &[u8], point: &[u8]) -> Result<(u8, Vec<u8>), SchemeError> {
        if bits.len() > self.support.len() {
            return Err(SchemeError::Capacity {
                needed: bits.len(),
                max: self.support.len(),
            });
        }
        if point.len() != self.k || point.iter().any(|&x| x >= self.field) {
            return Err(SchemeError::BadQuery("bad evaluation point".into()));
        }
        let q = self.field as u64;
        let mut value: u64 = 0;
        let mut grad = vec![0u64; self.k];
        for (i, &a) in bits.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let a = a as u64;
            let [j1, j2, j3] = self.support[i];
            let (x1, x2, x3) = (point[j1] as u64, point[j2] as u64, point[j3] as u64);
            value = (value + a * x1 % q * x2 % q * x3) % q;
            grad[j1] = (grad[j1] + a * x2 % q * x3) % q;
            grad[j2] = (grad[j2] + a * x1 % q * x3) % q;
            grad[j3] = (grad[j3] + a * x1 % q * x2) % q;
        }
        Ok((value as u8, grad.into_iter().map(|g| g as u8).collect()))
    }

    /// Interpolate `g(0)` from the two `(F, ∇F)` answers.
    pub fn reconstruct(&self, z: &[u8], answers: &[(u8, Vec<u8>)]) -> Result<u8, SchemeError> {
        if answers.len() != self.t_values.len() {
            return Err(SchemeError::AnswerCount {
                expected: self.t_values.len(),
                got: answers.len(),
            });
        }
        let q = self.field as u64;
        let mut b = Vec::with_capacity(2 * answers.len());
        for (value, grad) in answers {
            if grad.len() != self.k {
                return Err(SchemeError::BadAnswer("gradient has wrong length".into()));
            }
            b.push(RingElem::scalar(*value as i64, self.field, 1));
            let g1: u64 = grad
                .iter()
                .zip(z)
                .fold(0, |acc, (&g, &zi)| (acc + g as u64 * zi as u64) % q);
            b.push(RingElem::scalar(g1 as i64, self.field, 1));
        }
        let scaled = dot(&self.adj_first_row, &b); // det(M)·c_0
        Ok((scaled.coeff(0) as u64 * self.det_inverse % q) as u8)
    }

    /// Exact message sizes in bytes: one field element per byte.
    pub fn query_bytes(&self) -> usize {
        self.k
    }

    pub fn answer_bytes(&self) -> usize {
        self.k + 1
    }

    /// One full in-process retrieval with a fresh random `z`.
    pub fn roundtrip(
        &self,
        bits: &[u8],
        tau: usize,
        rng: &mut impl Rng,
    ) -> Result<u8, SchemeError> {
        let z: Vec<u8> = (0..self.k).map(|_| rng.random_range(0..self.field)).collect();
        let queries = self.queries_for_z(tau, &z)?;
        let answers = queries
            .iter()
            .map(|point| self.answer(bits, point))
            .collect::<Result<Vec<_>, _>>()?;
        self.reconstruct(&z, &answers)
    }
}

/// End-to-end baseline retrieval: picks the dimension from the database
/// length and runs the whole protocol in-process.
pub fn baseline_roundtrip(
    bits: &[u8],
    tau: usize,
    rng: &mut impl Rng,
) -> Result<u8, SchemeError> {
    let scheme = BaselineScheme::new(&SchemeConfig::baseline_cubic(), bits.len())?;
    scheme.roundtrip(bits, tau, rng)
}
