//! Communication-cost benchmarking across variants, emitted as CSV.
//!
//! Every matching-vector data point is a full in-process loopback exchange
//! through the real wire encoding — queries and answers are framed, byte
//! lengths measured off the actual frames, and the recovered symbol checked
//! against the database. The baseline runs its in-process protocol and
//! measures its raw message vectors. Row content is deterministic for a
//! given seed; only the wall-clock column varies run to run.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::baseline::BaselineScheme;
use crate::family::{search_family, FamilyError, MvFamily};
use crate::net::PirServer;
use crate::scheme::{Scheme, SchemeConfig, SchemeError, Variant};
use crate::wire::{decode_answer, Frame, MsgType};

pub const CSV_HEADER: &str = "variant,n,k,q,bytes_total,wall_ms";

/// Family dimension used for matching-vector bench points.
pub const BENCH_FAMILY_K: usize = 8;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error("benchmark self-check failed: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub variant: String,
    pub n: usize,
    pub k: usize,
    pub q: usize,
    /// Total body bytes exchanged in one retrieval (all servers, both ways).
    pub bytes_total: u64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub seed: u64,
    pub search_budget: u64,
    /// Retrievals per (variant, n) point; costs are per retrieval.
    pub retrievals: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            seed: 1,
            search_budget: crate::family::DEFAULT_SEARCH_BUDGET,
            retrievals: 3,
        }
    }
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.variant, row.n, row.k, row.q, row.bytes_total, row.wall_ms
        ));
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`; the measured growth
/// exponent of `y ~ x^e`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> f64 {
    assert!(points.len() >= 2, "need at least two points to fit");
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let var: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    cov / var
}

fn point_rng(seed: u64, variant: Variant, n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
            ^ ((variant.scheme_id() as u64) << 48)
            ^ n as u64,
    )
}

/// One wire-encoded in-process retrieval; returns the recovered symbol and
/// the measured (uplink, downlink) body bytes summed over servers.
fn loopback_retrieval(
    scheme: &Scheme,
    server: &PirServer,
    family: &MvFamily,
    tau: usize,
    rng: &mut impl Rng,
) -> Result<(u8, u64, u64), BenchError> {
    let cfg = scheme.config();
    let state = scheme.query_gen(family, tau, rng)?;
    let mut up = 0u64;
    let mut down = 0u64;
    let mut answers = Vec::with_capacity(cfg.servers);
    for i in 0..cfg.servers {
        let query = Frame::query(cfg.scheme_id(), state.query(i));
        up += query.body.len() as u64;
        let reply = server.answer_frame(&query);
        if reply.msg_type != MsgType::Answer {
            return Err(BenchError::Mismatch(format!(
                "server rejected a well-formed query: {:?}",
                reply.error_parts()
            )));
        }
        down += reply.body.len() as u64;
        answers.push(decode_answer(cfg, family.k(), &reply.body).map_err(|e| {
            BenchError::Mismatch(format!("answer failed to decode: {e}"))
        })?);
    }
    let symbol = scheme.reconstruct(family, &state, &answers)?;
    Ok((symbol, up, down))
}

fn bench_mv_variant(
    variant: Variant,
    n_list: &[usize],
    opts: &BenchOptions,
    rows: &mut Vec<BenchRow>,
) -> Result<(), BenchError> {
    let cfg = match variant {
        Variant::MvKServer => SchemeConfig::mv_kserver(&[2, 3, 5])?,
        Variant::Mv2Server => SchemeConfig::mv_2server(),
        Variant::Mv2ServerHom(t) => SchemeConfig::mv_2server_hom(t),
        Variant::Mv2ServerOrder2 => SchemeConfig::mv_2server_order2(),
        Variant::BaselineCubic => unreachable!("handled separately"),
    };
    let scheme = Scheme::new(cfg.clone())?;
    let target = n_list.iter().copied().max().unwrap_or(0);
    if target == 0 {
        return Ok(());
    }
    // one family per variant: communication must not depend on n
    let family_seed = opts.seed ^ (0xfa_u64 << 56) ^ variant.scheme_id() as u64;
    // for bit variants the family S is {1,3,4}; order2 searches over all
    // nonzero residues; the k-server path uses its CRT set
    let family = search_family(
        cfg.m,
        BENCH_FAMILY_K,
        &cfg.s,
        target,
        family_seed,
        opts.search_budget,
    )?;
    let symbol_bound: u8 = match variant {
        Variant::MvKServer => cfg.m,
        _ => 2,
    };
    for &n in n_list {
        let mut rng = point_rng(opts.seed, variant, n);
        let symbols: Vec<u8> = (0..n).map(|_| rng.random_range(0..symbol_bound)).collect();
        let server = PirServer::new(cfg.clone(), &family, &symbols)
            .map_err(|e| BenchError::Mismatch(e.to_string()))?;
        let started = Instant::now();
        let mut bytes_total = 0u64;
        for round in 0..opts.retrievals {
            let tau = if n == 0 { 0 } else { round % n };
            let (symbol, up, down) =
                loopback_retrieval(&scheme, &server, &family, tau, &mut rng)?;
            if symbol != symbols[tau] {
                return Err(BenchError::Mismatch(format!(
                    "{variant} recovered {symbol} instead of {} at tau {tau}",
                    symbols[tau]
                )));
            }
            bytes_total = up + down; // identical every round by construction
        }
        rows.push(BenchRow {
            variant: variant.name().to_string(),
            n,
            k: family.k(),
            q: cfg.servers,
            bytes_total,
            wall_ms: started.elapsed().as_millis() as u64,
        });
    }
    Ok(())
}

fn bench_baseline(
    n_list: &[usize],
    opts: &BenchOptions,
    rows: &mut Vec<BenchRow>,
) -> Result<(), BenchError> {
    let cfg = SchemeConfig::baseline_cubic();
    for &n in n_list {
        let scheme = BaselineScheme::new(&cfg, n)?;
        let mut rng = point_rng(opts.seed, Variant::BaselineCubic, n);
        let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let started = Instant::now();
        let mut bytes_total = 0u64;
        for round in 0..opts.retrievals {
            let tau = round % n;
            let z: Vec<u8> = (0..scheme.k())
                .map(|_| rng.random_range(0..scheme.field()))
                .collect();
            let queries = scheme.queries_for_z(tau, &z)?;
            let mut up = 0u64;
            let mut down = 0u64;
            let mut answers = Vec::with_capacity(queries.len());
            for point in &queries {
                up += point.len() as u64;
                let (value, grad) = scheme.answer(&bits, point)?;
                down += 1 + grad.len() as u64;
                answers.push((value, grad));
            }
            let bit = scheme.reconstruct(&z, &answers)?;
            if bit != bits[tau] {
                return Err(BenchError::Mismatch(format!(
                    "baseline recovered {bit} instead of {} at tau {tau}",
                    bits[tau]
                )));
            }
            bytes_total = up + down;
        }
        rows.push(BenchRow {
            variant: Variant::BaselineCubic.name().to_string(),
            n,
            k: scheme.k(),
            q: 2,
            bytes_total,
            wall_ms: started.elapsed().as_millis() as u64,
        });
    }
    Ok(())
}

/// Run every requested variant at every requested database size.
pub fn run_bench(
    variants: &[Variant],
    n_list: &[usize],
    opts: &BenchOptions,
) -> Result<Vec<BenchRow>, BenchError> {
    let mut rows = Vec::new();
    for &variant in variants {
        match variant {
            Variant::BaselineCubic => bench_baseline(n_list, opts, &mut rows)?,
            _ => bench_mv_variant(variant, n_list, opts, &mut rows)?,
        }
    }
    Ok(rows)
}
