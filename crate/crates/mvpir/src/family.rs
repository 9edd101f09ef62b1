//! S-matching vector families over `Z_m^k`: validation, randomized search,
//! and a diffable text file format.
//!
//! A family is a pair of lists `(U, V)` with `⟨u_i, v_i⟩ ≡ 0 (mod m)` and
//! `⟨u_i, v_j⟩ mod m ∈ S` for `i ≠ j`, `0 ∉ S`. Everything downstream rests
//! only on that property, which `validate` checks directly, so families may
//! come from the built-in search or from any external file.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// A matching-condition failure: `⟨u_i, v_j⟩ = inner` is not allowed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchingViolation {
    pub i: usize,
    pub j: usize,
    pub inner: u8,
}

impl fmt::Display for MatchingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.i == self.j {
            write!(f, "<u_{}, v_{}> = {} but the diagonal must vanish", self.i, self.j, self.inner)
        } else {
            write!(f, "<u_{}, v_{}> = {} is outside S", self.i, self.j, self.inner)
        }
    }
}

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("invalid family: {0}")]
    Invalid(String),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("matching condition violated: {0}")]
    Matching(MatchingViolation),
    #[error("search budget of {budget} draws exhausted at size {reached} (target {target})")]
    Exhausted {
        budget: u64,
        reached: usize,
        target: usize,
        /// Largest valid family found before giving up.
        best: Box<MvFamily>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Inner product of two `Z_m^k` vectors, reduced mod `m`.
pub fn inner_product_mod(u: &[u8], v: &[u8], m: u8) -> u8 {
    assert_eq!(u.len(), v.len(), "inner product of mismatched dimensions");
    let sum: u64 = u.iter().zip(v).map(|(&a, &b)| a as u64 * b as u64).sum();
    (sum % m as u64) as u8
}

/// The Chinese-remainder inner-product set for distinct primes `p_1…p_r`:
/// the nonzero residues mod `m = Π p_i` that are 0 or 1 mod every `p_i`.
/// Its size is exactly `2^r − 1`.
pub fn grolmusz_s(primes: &[u8]) -> Result<Vec<u8>, FamilyError> {
    if primes.len() < 2 {
        return Err(FamilyError::Invalid(format!(
            "need at least 2 primes, got {}",
            primes.len()
        )));
    }
    let mut product: u64 = 1;
    for (idx, &p) in primes.iter().enumerate() {
        if !is_prime(p) {
            return Err(FamilyError::Invalid(format!("{p} is not prime")));
        }
        if primes[..idx].contains(&p) {
            return Err(FamilyError::Invalid(format!("repeated prime {p}")));
        }
        product *= p as u64;
    }
    if product > 255 {
        return Err(FamilyError::Invalid(format!(
            "product of primes {product} does not fit in one byte"
        )));
    }
    let m = product as u8;
    let s: Vec<u8> = (1..m)
        .filter(|&a| primes.iter().all(|&p| a % p <= 1))
        .collect();
    debug_assert_eq!(s.len(), (1usize << primes.len()) - 1);
    Ok(s)
}

fn is_prime(n: u8) -> bool {
    let n = n as u16;
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MvFamily {
    m: u8,
    k: usize,
    s: Vec<u8>, // sorted, deduplicated
    u: Vec<Vec<u8>>,
    v: Vec<Vec<u8>>,
}

impl MvFamily {
    /// Shape-checks only; run [`MvFamily::validate`] for the matching property.
    pub fn new(
        m: u8,
        k: usize,
        mut s: Vec<u8>,
        u: Vec<Vec<u8>>,
        v: Vec<Vec<u8>>,
    ) -> Result<Self, FamilyError> {
        if m < 2 {
            return Err(FamilyError::Invalid("modulus must be at least 2".into()));
        }
        if k == 0 {
            return Err(FamilyError::Invalid("dimension must be positive".into()));
        }
        s.sort_unstable();
        s.dedup();
        if s.is_empty() {
            return Err(FamilyError::Invalid("S must be nonempty".into()));
        }
        if s[0] == 0 {
            return Err(FamilyError::Invalid("0 is not allowed in S".into()));
        }
        if s[s.len() - 1] >= m {
            return Err(FamilyError::Invalid(format!(
                "S contains {} which is not a residue mod {m}",
                s[s.len() - 1]
            )));
        }
        if u.len() != v.len() {
            return Err(FamilyError::Invalid(format!(
                "U has {} vectors but V has {}",
                u.len(),
                v.len()
            )));
        }
        if u.is_empty() {
            return Err(FamilyError::Invalid("family must be nonempty".into()));
        }
        for vec in u.iter().chain(v.iter()) {
            if vec.len() != k {
                return Err(FamilyError::Invalid(format!(
                    "vector of length {} in a dimension-{k} family",
                    vec.len()
                )));
            }
            if let Some(&bad) = vec.iter().find(|&&x| x >= m) {
                return Err(FamilyError::Invalid(format!(
                    "coordinate {bad} is not a residue mod {m}"
                )));
            }
        }
        Ok(MvFamily { m, k, s, u, v })
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of index positions (the database capacity).
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty() // never true: construction requires at least one pair
    }

    pub fn s(&self) -> &[u8] {
        &self.s
    }

    pub fn u(&self, i: usize) -> &[u8] {
        &self.u[i]
    }

    pub fn v(&self, i: usize) -> &[u8] {
        &self.v[i]
    }

    /// Check both matching conditions over all `n²` pairs, reporting the
    /// first violating pair.
    pub fn validate(&self) -> Result<(), MatchingViolation> {
        for i in 0..self.u.len() {
            for j in 0..self.v.len() {
                let inner = inner_product_mod(&self.u[i], &self.v[j], self.m);
                let ok = if i == j {
                    inner == 0
                } else {
                    self.s.binary_search(&inner).is_ok()
                };
                if !ok {
                    return Err(MatchingViolation { i, j, inner });
                }
            }
        }
        Ok(())
    }

    /// Canonical text form, also used for hashing:
    /// `mvf <m> <k> <n>`, `S <residues…>`, then `u` lines and `v` lines.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("mvf {} {} {}\n", self.m, self.k, self.len()));
        out.push('S');
        for s in &self.s {
            out.push_str(&format!(" {s}"));
        }
        out.push('\n');
        for row in &self.u {
            out.push('u');
            for x in row {
                out.push_str(&format!(" {x}"));
            }
            out.push('\n');
        }
        for row in &self.v {
            out.push('v');
            for x in row {
                out.push_str(&format!(" {x}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), FamilyError> {
        fs::write(path, self.to_canonical_string())?;
        Ok(())
    }

    /// Parse without the matching check (shape checks still apply).
    pub fn parse(text: &str) -> Result<Self, FamilyError> {
        let mut lines = text.lines().enumerate();
        let (m, k, n) = {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(1, "empty file"))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 || fields[0] != "mvf" {
                return Err(parse_err(no + 1, "expected header `mvf <m> <k> <n>`"));
            }
            let m: u8 = parse_num(no + 1, fields[1])?;
            let k: usize = parse_num(no + 1, fields[2])?;
            let n: usize = parse_num(no + 1, fields[3])?;
            (m, k, n)
        };
        let s = {
            let (no, line) = lines
                .next()
                .ok_or_else(|| parse_err(2, "missing S line"))?;
            let mut fields = line.split_whitespace();
            if fields.next() != Some("S") {
                return Err(parse_err(no + 1, "expected `S <residues…>`"));
            }
            fields
                .map(|f| parse_num(no + 1, f))
                .collect::<Result<Vec<u8>, _>>()?
        };
        let mut read_rows = |tag: &str| -> Result<Vec<Vec<u8>>, FamilyError> {
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let (no, line) = lines
                    .next()
                    .ok_or_else(|| parse_err(0, format!("truncated: expected {n} `{tag}` lines")))?;
                let mut fields = line.split_whitespace();
                if fields.next() != Some(tag) {
                    return Err(parse_err(no + 1, format!("expected a `{tag}` line")));
                }
                let row = fields
                    .map(|f| parse_num(no + 1, f))
                    .collect::<Result<Vec<u8>, _>>()?;
                if row.len() != k {
                    return Err(parse_err(
                        no + 1,
                        format!("expected {k} coordinates, got {}", row.len()),
                    ));
                }
                rows.push(row);
            }
            Ok(rows)
        };
        let u = read_rows("u")?;
        let v = read_rows("v")?;
        for (no, line) in lines {
            if !line.trim().is_empty() {
                return Err(parse_err(no + 1, "trailing content after family"));
            }
        }
        MvFamily::new(m, k, s, u, v)
    }

    /// Load from disk and re-run the matching validation.
    pub fn load(path: &Path) -> Result<Self, FamilyError> {
        let text = fs::read_to_string(path)?;
        let family = Self::parse(&text)?;
        family.validate().map_err(FamilyError::Matching)?;
        Ok(family)
    }
}

fn parse_err(line: usize, reason: impl Into<String>) -> FamilyError {
    FamilyError::Parse {
        line,
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, field: &str) -> Result<T, FamilyError> {
    field
        .parse()
        .map_err(|_| parse_err(line, format!("bad number `{field}`")))
}

pub const DEFAULT_SEARCH_BUDGET: u64 = 50_000_000;

/// Randomized greedy search for an S-matching family of size `target_n`,
/// deterministic for a given seed.
///
/// Candidates are mostly symmetric (`v = u`), which collapses the two cross
/// conditions per kept pair into one and is what makes double-digit sizes
/// reachable; a slice of independent `(u, v)` draws while the family is
/// still tiny covers dimensions too small for any symmetric family. A stall
/// counter evicts a random member if the frontier stops moving.
pub fn search_family(
    m: u8,
    k: usize,
    s: &[u8],
    target_n: usize,
    seed: u64,
    budget: u64,
) -> Result<MvFamily, FamilyError> {
    if target_n == 0 {
        return Err(FamilyError::Invalid("target size must be at least 1".into()));
    }
    let mut sorted_s = s.to_vec();
    sorted_s.sort_unstable();
    sorted_s.dedup();
    if sorted_s.is_empty() || sorted_s[0] == 0 || sorted_s[sorted_s.len() - 1] >= m {
        return Err(FamilyError::Invalid(
            "S must be a nonempty set of nonzero residues".into(),
        ));
    }
    let in_s = |x: u8| sorted_s.binary_search(&x).is_ok();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_vec = |rng: &mut ChaCha8Rng| -> Vec<u8> {
        (0..k).map(|_| rng.random_range(0..m)).collect()
    };

    let mut kept_u: Vec<Vec<u8>> = Vec::new();
    let mut kept_v: Vec<Vec<u8>> = Vec::new();
    let mut best_u: Vec<Vec<u8>> = Vec::new();
    let mut best_v: Vec<Vec<u8>> = Vec::new();
    let mut draws: u64 = 0;
    let mut since_last_accept: u64 = 0;
    // Far beyond the expected wait for the next acceptance; eviction is a
    // safety valve for genuine dead ends, not part of the normal run.
    let stall_limit = |size: usize| -> u64 {
        let ratio = m as f64 / sorted_s.len() as f64;
        let expected = (m as f64) * ratio.powi(size as i32);
        (16.0 * expected).min(1e18) as u64 + 1_000
    };

    while kept_u.len() < target_n {
        if draws >= budget {
            let (bu, bv) = if best_u.len() >= kept_u.len() {
                (best_u, best_v)
            } else {
                (kept_u, kept_v)
            };
            let reached = bu.len();
            let best_family = if reached > 0 {
                MvFamily::new(m, k, sorted_s.clone(), bu, bv)?
            } else {
                // nothing found at all; a single orthogonal pair always exists
                MvFamily::new(m, k, sorted_s.clone(), vec![vec![0; k]], vec![vec![0; k]])?
            };
            return Err(FamilyError::Exhausted {
                budget,
                reached,
                target: target_n,
                best: Box::new(best_family),
            });
        }
        draws += 1;

        let asymmetric = kept_u.len() < 4 && rng.random_range(0..2u8) == 0;
        let cand_u = draw_vec(&mut rng);
        let cand_v = if asymmetric {
            draw_vec(&mut rng)
        } else {
            cand_u.clone()
        };

        let accepted = inner_product_mod(&cand_u, &cand_v, m) == 0
            && kept_u.iter().zip(&kept_v).all(|(u_i, v_i)| {
                in_s(inner_product_mod(&cand_u, v_i, m)) && in_s(inner_product_mod(u_i, &cand_v, m))
            });

        if accepted {
            kept_u.push(cand_u);
            kept_v.push(cand_v);
            since_last_accept = 0;
            if kept_u.len() > best_u.len() {
                best_u = kept_u.clone();
                best_v = kept_v.clone();
            }
        } else {
            since_last_accept += 1;
            if since_last_accept > stall_limit(kept_u.len()) && kept_u.len() > 1 {
                let victim = rng.random_range(0..kept_u.len());
                kept_u.remove(victim);
                kept_v.remove(victim);
                since_last_accept = 0;
            }
        }
    }

    let family = MvFamily::new(m, k, sorted_s, kept_u, kept_v)?;
    family.validate().map_err(FamilyError::Matching)?;
    Ok(family)
}
