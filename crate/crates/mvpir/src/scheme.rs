//! Protocol logic for the retrieval schemes: query generation, server
//! answering, and recovery.
//!
//! All matching-vector variants share one shape. The database is the
//! polynomial `F(x) = Σ a_i x^{u_i}` over `R = Z_m[γ]/(γ^m − 1)`; the client
//! hides the target behind a uniformly random `z ∈ Z_m^k` and sends server
//! `i` the point `z + t_i·v_τ`; each server returns `F` and `F^(1)` (plus
//! `F^(2)` for the second-order variant) evaluated at `γ^{query}`. Writing
//! `g(T) = Σ c_ℓ T^ℓ` for the restriction of `F` to the queried line, the
//! replies pin down `g` and its derivative data at the points `γ^{t_i}`,
//! which is a square linear system in the unknown coefficients `c_ℓ`,
//! `ℓ ∈ {0} ∪ S`. The free coefficient is `c_0 = a_τ·γ^{⟨u_τ,z⟩}`.
//!
//! Recovery solves that system without dividing: either through the adjugate
//! (`det(M)·c_0` is zero iff `a_τ` is, good for bit databases), or through a
//! precomputed row vector `λ` with `λ·M = (μ, 0, …, 0)` whose inner product
//! with the reply vector is `μ·c_0`, from which `a_τ ∈ Z_m` is read off
//! prime by prime and recombined.

use rand::Rng;
use thiserror::Error;

use crate::encode::{AnswerBundle, EncodedDatabase};
use crate::family::{grolmusz_s, inner_product_mod, FamilyError, MvFamily};
use crate::lambda::{lambda_vector, LambdaVector};
use crate::matrix::{dot, RingMatrix};
use crate::ring::{crt_combine, mod_inverse, RingElem, RingError};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("index {tau} is out of range for a database of {n} entries")]
    TauOutOfRange { tau: usize, n: usize },
    #[error("family does not fit this scheme: {0}")]
    FamilyMismatch(String),
    #[error("symbol {value} at index {index} exceeds {max} for this variant")]
    InvalidSymbol { index: usize, value: u8, max: u8 },
    #[error("query is malformed: {0}")]
    BadQuery(String),
    #[error("answer bundle is malformed: {0}")]
    BadAnswer(String),
    #[error("second-order data missing from answer")]
    MissingSecondOrder,
    #[error("expected {expected} answers, got {got}")]
    AnswerCount { expected: usize, got: usize },
    #[error("database capacity exceeded: need {needed}, at most {max} supported")]
    Capacity { needed: usize, max: usize },
    #[error("internal invariant failed: {0}")]
    Internal(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

/// Target ring of the collapsed two-server variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HomTarget {
    /// `γ ↦ −1` over `Z_6`.
    Z6,
    /// `γ ↦ −1` over `F_3` (scalars reduced mod 3).
    F3,
}

impl HomTarget {
    pub fn modulus(self) -> u8 {
        match self {
            HomTarget::Z6 => 6,
            HomTarget::F3 => 3,
        }
    }

    /// The image of γ, as a residue mod the target.
    pub fn gamma_image(self) -> u8 {
        self.modulus() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Degree-3 interpolation over a small prime field; in-process only,
    /// kept as the O(n^{1/3}) communication baseline.
    BaselineCubic,
    /// Two servers, `Z_6` matching vectors with `S = {1,3,4}`, bit database.
    Mv2Server,
    /// Same protocol collapsed through a homomorphism onto scalars.
    Mv2ServerHom(HomTarget),
    /// Two servers, arbitrary `S ⊆ Z_6 \ {0}`, second-order derivatives.
    Mv2ServerOrder2,
    /// `2^{r−1}` servers over `m = p_1⋯p_r`, database symbols in `Z_m`.
    MvKServer,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::BaselineCubic => "baseline-cubic",
            Variant::Mv2Server => "mv-2server",
            Variant::Mv2ServerHom(HomTarget::Z6) => "mv-2server-hom-z6",
            Variant::Mv2ServerHom(HomTarget::F3) => "mv-2server-hom-f3",
            Variant::Mv2ServerOrder2 => "mv-2server-order2",
            Variant::MvKServer => "mv-kserver",
        }
    }

    pub fn parse(name: &str) -> Option<Variant> {
        Some(match name {
            "baseline-cubic" => Variant::BaselineCubic,
            "mv-2server" => Variant::Mv2Server,
            "mv-2server-hom-z6" => Variant::Mv2ServerHom(HomTarget::Z6),
            "mv-2server-hom-f3" => Variant::Mv2ServerHom(HomTarget::F3),
            "mv-2server-order2" => Variant::Mv2ServerOrder2,
            "mv-kserver" => Variant::MvKServer,
            _ => return None,
        })
    }

    /// Wire identifier. Zero is reserved for the baseline, which never
    /// rides the wire.
    pub fn scheme_id(&self) -> u8 {
        match self {
            Variant::BaselineCubic => 0,
            Variant::Mv2Server => 1,
            Variant::Mv2ServerHom(HomTarget::Z6) => 2,
            Variant::Mv2ServerHom(HomTarget::F3) => 3,
            Variant::Mv2ServerOrder2 => 4,
            Variant::MvKServer => 5,
        }
    }

    pub fn needs_second_order(&self) -> bool {
        matches!(self, Variant::Mv2ServerOrder2)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeConfig {
    pub variant: Variant,
    /// Vector modulus for the matching-vector variants; field size for the
    /// baseline.
    pub m: u8,
    pub primes: Vec<u8>,
    /// Allowed nonzero cross inner products, sorted.
    pub s: Vec<u8>,
    /// Number of servers `q`.
    pub servers: usize,
    /// Evaluation parameters `t_i`; defaults to `t_i = i − 1` (the baseline
    /// needs nonzero values and defaults to `1, 2`).
    pub t_values: Vec<i64>,
}

impl SchemeConfig {
    pub fn mv_2server() -> Self {
        SchemeConfig {
            variant: Variant::Mv2Server,
            m: 6,
            primes: vec![2, 3],
            s: vec![1, 3, 4],
            servers: 2,
            t_values: vec![0, 1],
        }
    }

    pub fn mv_2server_hom(target: HomTarget) -> Self {
        SchemeConfig {
            variant: Variant::Mv2ServerHom(target),
            ..Self::mv_2server()
        }
    }

    pub fn mv_2server_order2() -> Self {
        SchemeConfig {
            variant: Variant::Mv2ServerOrder2,
            s: vec![1, 2, 3, 4, 5],
            ..Self::mv_2server()
        }
    }

    pub fn mv_kserver(primes: &[u8]) -> Result<Self, SchemeError> {
        let s = grolmusz_s(primes)?;
        let m: u64 = primes.iter().map(|&p| p as u64).product();
        let servers = 1usize << (primes.len() - 1);
        Ok(SchemeConfig {
            variant: Variant::MvKServer,
            m: m as u8,
            primes: primes.to_vec(),
            s,
            servers,
            t_values: (0..servers as i64).collect(),
        })
    }

    pub fn baseline_cubic() -> Self {
        SchemeConfig {
            variant: Variant::BaselineCubic,
            m: 7,
            primes: Vec::new(),
            s: Vec::new(),
            servers: 2,
            t_values: vec![1, 2],
        }
    }

    pub fn for_variant(variant: Variant, primes: &[u8]) -> Result<Self, SchemeError> {
        Ok(match variant {
            Variant::BaselineCubic => Self::baseline_cubic(),
            Variant::Mv2Server => Self::mv_2server(),
            Variant::Mv2ServerHom(t) => Self::mv_2server_hom(t),
            Variant::Mv2ServerOrder2 => Self::mv_2server_order2(),
            Variant::MvKServer => Self::mv_kserver(primes)?,
        })
    }

    pub fn scheme_id(&self) -> u8 {
        self.variant.scheme_id()
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        let distinct_t = {
            // everything downstream only sees t mod m
            let mut t: Vec<i64> = self
                .t_values
                .iter()
                .map(|&t| t.rem_euclid(self.m as i64))
                .collect();
            t.sort_unstable();
            t.dedup();
            t.len() == self.t_values.len()
        };
        if self.t_values.len() != self.servers || !distinct_t {
            return Err(SchemeError::Config(format!(
                "need {} t values that stay distinct mod {}, got {:?}",
                self.servers, self.m, self.t_values
            )));
        }
        match self.variant {
            Variant::BaselineCubic => {
                let field = self.m as u16;
                let prime =
                    field >= 2 && (2u16..).take_while(|d| d * d <= field).all(|d| !field.is_multiple_of(d));
                if self.m <= 3 || !prime {
                    return Err(SchemeError::Config(format!(
                        "baseline field size {} must be a prime larger than 3",
                        self.m
                    )));
                }
                if self.servers != 2 {
                    return Err(SchemeError::Config("baseline uses two servers".into()));
                }
                if self.t_values.iter().any(|&t| t.rem_euclid(self.m as i64) == 0) {
                    return Err(SchemeError::Config(
                        "baseline t values must be nonzero in the field".into(),
                    ));
                }
            }
            Variant::Mv2Server | Variant::Mv2ServerHom(_) => {
                if self.m != 6 || self.s != [1, 3, 4] || self.servers != 2 {
                    return Err(SchemeError::Config(
                        "first-order two-server scheme requires m = 6, S = {1,3,4}".into(),
                    ));
                }
            }
            Variant::Mv2ServerOrder2 => {
                if self.m != 6 || self.s != [1, 2, 3, 4, 5] || self.servers != 2 {
                    return Err(SchemeError::Config(
                        "second-order scheme requires m = 6, S = Z_6 \\ {0}".into(),
                    ));
                }
            }
            Variant::MvKServer => {
                let r = self.primes.len();
                let expect_s = grolmusz_s(&self.primes)?;
                let product: u64 = self.primes.iter().map(|&p| p as u64).product();
                if product != self.m as u64 {
                    return Err(SchemeError::Config(format!(
                        "m = {} is not the product of {:?}",
                        self.m, self.primes
                    )));
                }
                if self.servers != 1 << (r - 1) || self.s != expect_s {
                    return Err(SchemeError::Config(
                        "k-server scheme requires q = 2^(r−1) servers and the CRT inner-product set"
                            .into(),
                    ));
                }
                if self.s.len() + 1 != 2 * self.servers {
                    return Err(SchemeError::Config("|S ∪ {0}| must equal 2q".into()));
                }
                if self.t_values != (0..self.servers as i64).collect::<Vec<_>>() {
                    return Err(SchemeError::Config(
                        "k-server recovery indexes monomials by t_i = i − 1".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Modulus of the ring the answers live in.
    pub fn answer_modulus(&self) -> u8 {
        match self.variant {
            Variant::Mv2ServerHom(t) => t.modulus(),
            _ => self.m,
        }
    }

    /// Coefficient count of one serialized answer element.
    pub fn ring_order(&self) -> usize {
        match self.variant {
            Variant::BaselineCubic | Variant::Mv2ServerHom(_) => 1,
            _ => self.m as usize,
        }
    }

    /// γ (or its homomorphic image) inside the answer ring.
    fn gamma_element(&self) -> RingElem {
        match self.variant {
            Variant::Mv2ServerHom(t) => {
                RingElem::scalar(t.gamma_image() as i64, t.modulus(), 1)
            }
            _ => RingElem::gamma_power(1, self.m, self.m as usize),
        }
    }

    /// Exact answer body size in bytes: `(k + 1)` ring elements, plus `k²`
    /// more for the second-order variant.
    pub fn answer_body_len(&self, k: usize) -> usize {
        let r = self.ring_order();
        let elems = 1 + k + if self.variant.needs_second_order() { k * k } else { 0 };
        r * elems
    }

    /// Canonical one-line description, bound into the connection hash.
    pub fn binding_string(&self) -> String {
        let csv = |xs: &[u8]| {
            xs.iter()
                .map(u8::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "scheme={} m={} primes={} s={} servers={} t={}",
            self.variant.name(),
            self.m,
            csv(&self.primes),
            csv(&self.s),
            self.servers,
            self.t_values
                .iter()
                .map(i64::to_string)
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

/// The square recovery system: one row per `(t_i, derivative order)` pair,
/// one column per exponent `ℓ ∈ {0} ∪ S` in ascending order, entries
/// `ℓ^d · γ^{t_i·ℓ}`. For the baseline the rows are instead the classical
/// interpolation rows `t^ℓ` and `ℓ·t^{ℓ−1}` over the prime field.
pub fn build_matrix(cfg: &SchemeConfig) -> Result<RingMatrix, SchemeError> {
    cfg.validate()?;
    if cfg.variant == Variant::BaselineCubic {
        let m = cfg.m;
        let field = m as i64;
        let rows = cfg
            .t_values
            .iter()
            .flat_map(|&t| {
                let t = t.rem_euclid(field);
                let value_row: Vec<RingElem> = (0..4i64)
                    .map(|l| RingElem::scalar(t.pow(l as u32), m, 1))
                    .collect();
                let derivative_row: Vec<RingElem> = (0..4i64)
                    .map(|l| {
                        if l == 0 {
                            RingElem::zero(m, 1)
                        } else {
                            RingElem::scalar(l * t.pow(l as u32 - 1), m, 1)
                        }
                    })
                    .collect();
                [value_row, derivative_row]
            })
            .collect();
        return Ok(RingMatrix::from_rows(rows));
    }

    let orders: usize = if cfg.variant.needs_second_order() { 3 } else { 2 };
    let columns: Vec<i64> = std::iter::once(0)
        .chain(cfg.s.iter().map(|&l| l as i64))
        .collect();
    let row_count = orders * cfg.servers;
    if row_count != columns.len() {
        return Err(SchemeError::Config(format!(
            "{row_count} equations for {} unknowns",
            columns.len()
        )));
    }
    let gamma = cfg.gamma_element();
    let gamma_order = cfg.m as i64; // γ^m = 1 also holds for the hom images
    let (am, ar) = (cfg.answer_modulus(), cfg.ring_order());
    let mut rows = Vec::with_capacity(row_count);
    for &t in &cfg.t_values {
        for d in 0..orders {
            let row = columns
                .iter()
                .map(|&l| {
                    let exp = (t * l).rem_euclid(gamma_order) as u32;
                    let multiplier = l.pow(d as u32);
                    &gamma.pow(exp) * &RingElem::scalar(multiplier, am, ar)
                })
                .collect::<Vec<_>>();
            rows.push(row);
        }
    }
    Ok(RingMatrix::from_rows(rows))
}

/// Client-side retrieval state: the secret offset `z` and the per-server
/// query points `z + t_i·v_τ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryState {
    tau: usize,
    z: Vec<u8>,
    queries: Vec<Vec<u8>>,
}

impl QueryState {
    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn z(&self) -> &[u8] {
        &self.z
    }

    pub fn queries(&self) -> &[Vec<u8>] {
        &self.queries
    }

    pub fn query(&self, server: usize) -> &[u8] {
        &self.queries[server]
    }
}

enum Recovery {
    /// Zero-test recovery through the first adjugate row (bit databases).
    ZeroTest {
        det: RingElem,
        adj_first_row: Vec<RingElem>,
    },
    /// `λ·M = (μ, 0, …, 0)` recovery (full `Z_m` alphabet).
    Lambda(LambdaVector),
}

/// A fully set-up scheme: configuration plus the cached recovery data.
/// Immutable after construction and safe to share across threads.
pub struct Scheme {
    cfg: SchemeConfig,
    recovery: Recovery,
}

impl Scheme {
    pub fn new(cfg: SchemeConfig) -> Result<Self, SchemeError> {
        cfg.validate()?;
        let recovery = match cfg.variant {
            Variant::BaselineCubic => {
                return Err(SchemeError::Config(
                    "the baseline runs in-process only; see the baseline module".into(),
                ))
            }
            Variant::MvKServer => Recovery::Lambda(lambda_vector(&cfg)?),
            _ => {
                let matrix = build_matrix(&cfg)?;
                let det = matrix.determinant();
                if det.is_zero() {
                    return Err(SchemeError::Config(
                        "recovery matrix is singular for these t values".into(),
                    ));
                }
                Recovery::ZeroTest {
                    adj_first_row: matrix.adjugate_first_row(),
                    det,
                }
            }
        };
        Ok(Scheme { cfg, recovery })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    /// `det(M)` for the zero-test variants.
    pub fn determinant(&self) -> Option<&RingElem> {
        match &self.recovery {
            Recovery::ZeroTest { det, .. } => Some(det),
            Recovery::Lambda(_) => None,
        }
    }

    pub fn lambda(&self) -> Option<&LambdaVector> {
        match &self.recovery {
            Recovery::Lambda(l) => Some(l),
            Recovery::ZeroTest { .. } => None,
        }
    }

    /// The family must share the modulus and keep its cross inner products
    /// inside this scheme's `S`.
    pub fn check_family(&self, family: &MvFamily) -> Result<(), SchemeError> {
        if family.m() != self.cfg.m {
            return Err(SchemeError::FamilyMismatch(format!(
                "family modulus {} vs scheme modulus {}",
                family.m(),
                self.cfg.m
            )));
        }
        if let Some(&bad) = family
            .s()
            .iter()
            .find(|x| self.cfg.s.binary_search(x).is_err())
        {
            return Err(SchemeError::FamilyMismatch(format!(
                "family allows cross inner product {bad} outside this scheme's S"
            )));
        }
        Ok(())
    }

    /// Bit databases for the zero-test variants, `Z_m` for the k-server path.
    pub fn validate_symbols(&self, symbols: &[u8]) -> Result<(), SchemeError> {
        let max = match self.recovery {
            Recovery::ZeroTest { .. } => 1,
            Recovery::Lambda(_) => self.cfg.m - 1,
        };
        if let Some((index, &value)) = symbols.iter().enumerate().find(|(_, &a)| a > max) {
            return Err(SchemeError::InvalidSymbol { index, value, max });
        }
        Ok(())
    }

    /// Deterministic core of query generation; `z` is supplied by the caller.
    pub fn query_for_z(
        &self,
        family: &MvFamily,
        tau: usize,
        z: Vec<u8>,
    ) -> Result<QueryState, SchemeError> {
        self.check_family(family)?;
        if tau >= family.len() {
            return Err(SchemeError::TauOutOfRange {
                tau,
                n: family.len(),
            });
        }
        assert_eq!(z.len(), family.k(), "z must have k coordinates");
        let m = self.cfg.m as i64;
        let v = family.v(tau);
        let queries = self
            .cfg
            .t_values
            .iter()
            .map(|&t| {
                z.iter()
                    .zip(v)
                    .map(|(&zi, &vi)| (zi as i64 + t * vi as i64).rem_euclid(m) as u8)
                    .collect()
            })
            .collect();
        Ok(QueryState { tau, z, queries })
    }

    /// Draw `z` uniformly and derive the per-server query points. Each point
    /// in isolation is uniform over `Z_m^k`, independent of `tau`.
    pub fn query_gen(
        &self,
        family: &MvFamily,
        tau: usize,
        rng: &mut impl Rng,
    ) -> Result<QueryState, SchemeError> {
        let z: Vec<u8> = (0..family.k())
            .map(|_| rng.random_range(0..self.cfg.m))
            .collect();
        self.query_for_z(family, tau, z)
    }

    /// Evaluate the answer for one query point. Stateless: the reply is a
    /// function of the database and the point alone.
    pub fn server_answer(
        &self,
        db: &EncodedDatabase,
        query: &[u8],
    ) -> Result<AnswerBundle, SchemeError> {
        if db.m() != self.cfg.m {
            return Err(SchemeError::FamilyMismatch(format!(
                "database modulus {} vs scheme modulus {}",
                db.m(),
                self.cfg.m
            )));
        }
        if query.len() != db.k() {
            return Err(SchemeError::BadQuery(format!(
                "expected {} coordinates, got {}",
                db.k(),
                query.len()
            )));
        }
        if let Some(&bad) = query.iter().find(|&&x| x >= self.cfg.m) {
            return Err(SchemeError::BadQuery(format!(
                "coordinate {bad} is not a residue mod {}",
                self.cfg.m
            )));
        }
        let f0 = db.eval_f(query);
        let f1 = db.eval_f1(query);
        let f2 = self
            .cfg
            .variant
            .needs_second_order()
            .then(|| db.eval_f2(query));
        match self.cfg.variant {
            Variant::Mv2ServerHom(t) => {
                let (image, target) = (t.gamma_image(), t.modulus());
                let collapse = |e: &RingElem| -> Result<RingElem, SchemeError> {
                    let v = e.hom_apply(image, target)?;
                    Ok(RingElem::scalar(v.value() as i64, target, 1))
                };
                Ok(AnswerBundle {
                    f0: collapse(&f0)?,
                    f1: f1.iter().map(&collapse).collect::<Result<_, _>>()?,
                    f2: None,
                })
            }
            _ => Ok(AnswerBundle { f0, f1, f2 }),
        }
    }

    /// Recover the queried symbol from the full set of answers: a bit for
    /// the zero-test variants, a `Z_m` symbol for the k-server path.
    pub fn reconstruct(
        &self,
        family: &MvFamily,
        state: &QueryState,
        answers: &[AnswerBundle],
    ) -> Result<u8, SchemeError> {
        if answers.len() != self.cfg.servers {
            return Err(SchemeError::AnswerCount {
                expected: self.cfg.servers,
                got: answers.len(),
            });
        }
        let k = family.k();
        let v = family.v(state.tau);
        let reply_vector = |with_second: bool| -> Result<Vec<RingElem>, SchemeError> {
            let mut b = Vec::with_capacity(answers.len() * if with_second { 3 } else { 2 });
            for bundle in answers {
                if bundle.f1.len() != k {
                    return Err(SchemeError::BadAnswer(format!(
                        "gradient has {} coordinates, expected {k}",
                        bundle.f1.len()
                    )));
                }
                b.push(bundle.f0.clone());
                // g^(1)(γ^t) = ⟨F^(1)(γ^{z+t·v}), v⟩
                let mut g1 = RingElem::zero(bundle.f0.modulus(), bundle.f0.order());
                for (f, &vi) in bundle.f1.iter().zip(v) {
                    g1 = &g1 + &f.scale(vi as i64);
                }
                b.push(g1);
                if with_second {
                    let f2 = bundle.f2.as_ref().ok_or(SchemeError::MissingSecondOrder)?;
                    // g^(2)(γ^t) = ⟨F^(2)(γ^{z+t·v}), v ⊗ v⟩
                    let mut g2 = RingElem::zero(bundle.f0.modulus(), bundle.f0.order());
                    for (j, row) in f2.iter().enumerate() {
                        if row.len() != k || f2.len() != k {
                            return Err(SchemeError::BadAnswer(
                                "second-order matrix has wrong shape".into(),
                            ));
                        }
                        for (l, e) in row.iter().enumerate() {
                            g2 = &g2 + &e.scale(v[j] as i64 * v[l] as i64);
                        }
                    }
                    b.push(g2);
                }
            }
            Ok(b)
        };

        match &self.recovery {
            Recovery::ZeroTest { adj_first_row, .. } => {
                let b = reply_vector(self.cfg.variant.needs_second_order())?;
                if b.len() != adj_first_row.len() {
                    return Err(SchemeError::BadAnswer("reply vector has wrong length".into()));
                }
                // det(M)·c_0 with c_0 = a_τ·γ^{⟨u_τ,z⟩}: zero iff a_τ = 0,
                // because γ-powers are not zero divisors.
                let scaled = dot(adj_first_row, &b);
                Ok(u8::from(!scaled.is_zero()))
            }
            Recovery::Lambda(lambda) => {
                let b = reply_vector(false)?;
                let entries = lambda.entries();
                if b.len() != entries.len() {
                    return Err(SchemeError::BadAnswer("reply vector has wrong length".into()));
                }
                // ν = λ·(replies) = μ·c_0 = a_τ·μ·γ^{⟨u_τ,z⟩}
                let nu = dot(entries, &b);
                let m = self.cfg.m;
                let shift = inner_product_mod(family.u(state.tau), &state.z, m) as usize;
                let mu = lambda.mu();
                let mut residues = Vec::with_capacity(self.cfg.primes.len());
                for &p in &self.cfg.primes {
                    // smallest coefficient of μ that is invertible mod p
                    let j = (0..m as usize)
                        .find(|&j| mu.coeff(j) % p != 0)
                        .ok_or_else(|| {
                            SchemeError::Internal(format!("μ vanishes mod {p}"))
                        })?;
                    let inv = mod_inverse((mu.coeff(j) % p) as u64, p as u64)
                        .expect("nonzero residue mod a prime");
                    let nu_j = nu.coeff((j + shift) % m as usize) % p;
                    residues.push(((inv * nu_j as u64 % p as u64) as u8, p));
                }
                Ok(crt_combine(&residues)?)
            }
        }
    }
}
