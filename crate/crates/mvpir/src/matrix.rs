//! Square matrices over `R_{m,r}`: exact determinant, adjugate, and the
//! scaled first-coordinate recovery used by the retrieval schemes.
//!
//! Everything works over a commutative ring with zero divisors, so there is
//! no elimination here: determinants are cofactor expansions. Matrices stay
//! small (at most `2q × 2q` with `q ≤ 8`), which keeps that affordable.

use crate::ring::RingElem;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingMatrix {
    dim: usize,
    modulus: u8,
    order: usize,
    entries: Vec<RingElem>, // row-major
}

impl RingMatrix {
    pub fn from_rows(rows: Vec<Vec<RingElem>>) -> Self {
        let dim = rows.len();
        assert!(dim >= 1, "matrix must be non-empty");
        let modulus = rows[0][0].modulus();
        let order = rows[0][0].order();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "matrix must be square");
            for e in row {
                assert_eq!(e.modulus(), modulus, "mixed entry moduli");
                assert_eq!(e.order(), order, "mixed entry orders");
                entries.push(e);
            }
        }
        RingMatrix {
            dim,
            modulus,
            order,
            entries,
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> RingElem) -> Self {
        Self::from_rows(
            (0..dim)
                .map(|i| (0..dim).map(|j| f(i, j)).collect())
                .collect(),
        )
    }

    pub fn identity(dim: usize, modulus: u8, order: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            if i == j {
                RingElem::one(modulus, order)
            } else {
                RingElem::zero(modulus, order)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn modulus(&self) -> u8 {
        self.modulus
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entry(&self, i: usize, j: usize) -> &RingElem {
        &self.entries[i * self.dim + j]
    }

    fn minor(&self, skip_row: usize, skip_col: usize) -> RingMatrix {
        let mut entries = Vec::with_capacity((self.dim - 1) * (self.dim - 1));
        for i in 0..self.dim {
            if i == skip_row {
                continue;
            }
            for j in 0..self.dim {
                if j == skip_col {
                    continue;
                }
                entries.push(self.entry(i, j).clone());
            }
        }
        RingMatrix {
            dim: self.dim - 1,
            modulus: self.modulus,
            order: self.order,
            entries,
        }
    }

    /// Exact determinant by cofactor expansion along the first row.
    pub fn determinant(&self) -> RingElem {
        if self.dim == 1 {
            return self.entries[0].clone();
        }
        let mut acc = RingElem::zero(self.modulus, self.order);
        for j in 0..self.dim {
            let e = self.entry(0, j);
            if e.is_zero() {
                continue;
            }
            let term = e * &self.minor(0, j).determinant();
            acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
        }
        acc
    }

    /// Cofactor `(j, i)` at position `(i, j)`; satisfies
    /// `M · adj(M) = adj(M) · M = det(M) · I`. The empty minor of a 1×1
    /// matrix has determinant 1, so `adj([a]) = [1]`.
    pub fn adjugate(&self) -> RingMatrix {
        if self.dim == 1 {
            return RingMatrix::identity(1, self.modulus, self.order);
        }
        RingMatrix::from_fn(self.dim, |i, j| {
            let cof = self.minor(j, i).determinant();
            if (i + j) % 2 == 0 {
                cof
            } else {
                -&cof
            }
        })
    }

    /// First row of the adjugate, without computing the other rows.
    pub fn adjugate_first_row(&self) -> Vec<RingElem> {
        if self.dim == 1 {
            return vec![RingElem::one(self.modulus, self.order)];
        }
        (0..self.dim)
            .map(|j| {
                let cof = self.minor(j, 0).determinant();
                if j % 2 == 0 {
                    cof
                } else {
                    -&cof
                }
            })
            .collect()
    }

    /// Given `b = M · a` for an unknown `a`, return `det(M) · a_1`, i.e. the
    /// first entry of `adj(M) · b`. Only the first adjugate row is built.
    pub fn recover_scaled_first(&self, b: &[RingElem]) -> RingElem {
        assert_eq!(b.len(), self.dim, "vector length must match dimension");
        dot(&self.adjugate_first_row(), b)
    }

    pub fn mul_matrix(&self, rhs: &RingMatrix) -> RingMatrix {
        assert_eq!(self.dim, rhs.dim);
        RingMatrix::from_fn(self.dim, |i, j| {
            let mut acc = RingElem::zero(self.modulus, self.order);
            for l in 0..self.dim {
                acc = &acc + &(self.entry(i, l) * rhs.entry(l, j));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[RingElem]) -> Vec<RingElem> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| {
                let mut acc = RingElem::zero(self.modulus, self.order);
                for (l, x) in v.iter().enumerate() {
                    acc = &acc + &(self.entry(i, l) * x);
                }
                acc
            })
            .collect()
    }

    /// Row vector times matrix: `v · M`.
    pub fn row_vec_mul(v: &[RingElem], m: &RingMatrix) -> Vec<RingElem> {
        assert_eq!(v.len(), m.dim);
        (0..m.dim)
            .map(|j| {
                let mut acc = RingElem::zero(m.modulus, m.order);
                for (l, x) in v.iter().enumerate() {
                    acc = &acc + &(x * m.entry(l, j));
                }
                acc
            })
            .collect()
    }
}

pub fn dot(a: &[RingElem], b: &[RingElem]) -> RingElem {
    assert_eq!(a.len(), b.len());
    assert!(!a.is_empty());
    let mut acc = RingElem::zero(a[0].modulus(), a[0].order());
    for (x, y) in a.iter().zip(b) {
        acc = &acc + &(x * y);
    }
    acc
}
