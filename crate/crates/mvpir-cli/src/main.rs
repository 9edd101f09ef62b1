//! Command-line front end: family generation, database encoding, serving,
//! retrieval, privacy auditing, cost benchmarking, and a selftest.
//!
//! Exit codes: 0 success, 1 usage or input problems, 2 capacity or search
//! failure, 3 protocol error, 4 selftest/audit failure.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mvpir::audit::{privacy_audit, AuditError};
use mvpir::bench::{run_bench, to_csv, BenchError, BenchOptions};
use mvpir::encode::{EncodeError, EncodedDatabase};
use mvpir::family::{grolmusz_s, search_family, FamilyError, MvFamily, DEFAULT_SEARCH_BUDGET};
use mvpir::net::{retrieve, serve, NetError};
use mvpir::scheme::{Scheme, SchemeConfig, SchemeError, Variant};
use mvpir::selftest::run_selftest;

const EXIT_USAGE: i32 = 1;
const EXIT_CAPACITY: i32 = 2;
const EXIT_PROTOCOL: i32 = 3;
const EXIT_SELFTEST: i32 = 4;

#[derive(Parser)]
#[command(name = "mvpir", version, about = "Matching-vector private information retrieval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a matching-vector family and write it to a file.
    GenFamily(GenFamilyArgs),
    /// Encode a raw database against a family and dump the sparse terms.
    Encode(EncodeArgs),
    /// Serve a database; answers queries forever.
    Serve(ServeArgs),
    /// Retrieve one symbol from a set of servers.
    Get(GetArgs),
    /// Exhaustively audit query privacy for a scheme and family.
    Audit(AuditArgs),
    /// Measure per-retrieval communication across variants; emits CSV.
    Bench(BenchArgs),
    /// Run the built-in identity checks and a loopback retrieval.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct GenFamilyArgs {
    /// Vector modulus; defaults to the product of --primes.
    #[arg(long)]
    m: Option<u8>,
    /// Vector dimension.
    #[arg(long)]
    k: usize,
    /// Target family size.
    #[arg(long)]
    n: usize,
    /// Distinct primes whose product is the modulus, e.g. 2,3 or 2,3,5.
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    primes: Vec<u8>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Candidate-draw budget for the randomized search.
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    budget: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EncodeArgs {
    /// Raw database: one symbol per byte, each below the family modulus.
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    family: PathBuf,
    /// Where to write the sparse term dump.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    db: PathBuf,
    #[arg(long)]
    family: PathBuf,
    #[arg(long, value_parser = parse_variant, default_value = "mv-2server")]
    variant: Variant,
    /// Primes for the mv-kserver variant.
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    primes: Vec<u8>,
    #[arg(long, default_value = "127.0.0.1:0")]
    listen: String,
}

#[derive(Args)]
struct GetArgs {
    /// Comma-separated server addresses, one per evaluation point, in order.
    #[arg(long, value_delimiter = ',')]
    servers: Vec<String>,
    #[arg(long)]
    family: PathBuf,
    #[arg(long, value_parser = parse_variant, default_value = "mv-2server")]
    variant: Variant,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    primes: Vec<u8>,
    /// Index to retrieve.
    #[arg(long)]
    tau: usize,
    /// Seed for the query randomness; fresh OS entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    family: PathBuf,
    #[arg(long, value_parser = parse_variant, default_value = "mv-2server")]
    variant: Variant,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    primes: Vec<u8>,
    /// Target indices to compare; defaults to every index in the family.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<usize>>,
}

#[derive(Args)]
struct BenchArgs {
    /// Variants to measure; `all` covers every one.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    variants: Vec<String>,
    #[arg(long = "n-list", value_delimiter = ',', num_args = 0.., default_values_t = [6usize, 8])]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
    budget: u64,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    /// Also validate this family file.
    #[arg(long)]
    family: Option<PathBuf>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| {
        format!(
            "unknown variant `{s}` (expected one of baseline-cubic, mv-2server, \
             mv-2server-hom-z6, mv-2server-hom-f3, mv-2server-order2, mv-kserver)"
        )
    })
}

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        let code = match &e {
            FamilyError::Exhausted { .. } => EXIT_CAPACITY,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SchemeError> for CliError {
    fn from(e: SchemeError) -> Self {
        let code = match &e {
            SchemeError::Capacity { .. } => EXIT_CAPACITY,
            SchemeError::MissingSecondOrder | SchemeError::BadAnswer(_) => EXIT_PROTOCOL,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        let code = match &e {
            NetError::Family(inner) => return CliError::from_family_ref(inner, &e),
            NetError::Scheme(SchemeError::Capacity { .. }) => EXIT_CAPACITY,
            NetError::Scheme(SchemeError::InvalidSymbol { .. }) => EXIT_USAGE,
            NetError::Scheme(SchemeError::FamilyMismatch(_)) => EXIT_USAGE,
            NetError::Encode(_) | NetError::Io(_) => EXIT_USAGE,
            _ => EXIT_PROTOCOL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl CliError {
    fn from_family_ref(inner: &FamilyError, outer: &NetError) -> Self {
        let code = match inner {
            FamilyError::Exhausted { .. } => EXIT_CAPACITY,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: outer.to_string(),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        let code = match &e {
            BenchError::Family(FamilyError::Exhausted { .. }) => EXIT_CAPACITY,
            BenchError::Scheme(SchemeError::Capacity { .. }) => EXIT_CAPACITY,
            _ => EXIT_USAGE,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EncodeError> for CliError {
    fn from(e: EncodeError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<AuditError> for CliError {
    fn from(e: AuditError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(e.to_string())
    }
}

fn config_for(variant: Variant, primes: &[u8]) -> Result<SchemeConfig, CliError> {
    Ok(SchemeConfig::for_variant(variant, primes)?)
}

fn cmd_gen_family(args: GenFamilyArgs) -> Result<(), CliError> {
    let s = grolmusz_s(&args.primes)?;
    let product: u64 = args.primes.iter().map(|&p| p as u64).product();
    let m = match args.m {
        Some(m) if m as u64 != product => {
            return Err(CliError::usage(format!(
                "--m {m} does not match the product {product} of --primes"
            )));
        }
        Some(m) => m,
        None => product as u8,
    };
    let set: Vec<String> = s.iter().map(u8::to_string).collect();
    println!("S = {{{}}}", set.join(", "));
    match search_family(m, args.k, &s, args.n, args.seed, args.budget) {
        Ok(family) => {
            family.save(&args.out)?;
            // reload to prove the file round-trips and still validates
            let reloaded = MvFamily::load(&args.out)?;
            println!(
                "wrote {}: n = {}, k = {}, |S| = {}",
                args.out.display(),
                reloaded.len(),
                reloaded.k(),
                reloaded.s().len()
            );
            Ok(())
        }
        Err(FamilyError::Exhausted {
            budget,
            reached,
            target,
            best,
        }) => {
            best.save(&args.out)?;
            eprintln!(
                "search budget {budget} exhausted at n = {reached} (target {target}); \
                 largest family written to {}",
                args.out.display()
            );
            Err(CliError {
                code: EXIT_CAPACITY,
                message: format!("reached n = {reached} of {target}"),
            })
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_encode(args: EncodeArgs) -> Result<(), CliError> {
    let family = MvFamily::load(&args.family)?;
    let symbols = std::fs::read(&args.db)?;
    let db = EncodedDatabase::encode(&symbols, &family)?;
    let mut out = String::new();
    out.push_str(&format!(
        "mvterms {} {} {} {}\n",
        db.m(),
        db.k(),
        db.n(),
        db.term_count()
    ));
    for (coeff, exponents) in db.terms() {
        out.push_str(&format!("t {coeff}"));
        for e in exponents {
            out.push_str(&format!(" {e}"));
        }
        out.push('\n');
    }
    std::fs::write(&args.out, out)?;
    println!(
        "encoded {} symbols into {} nonzero terms (m = {}, k = {})",
        db.n(),
        db.term_count(),
        db.m(),
        db.k()
    );
    Ok(())
}

fn cmd_serve(args: ServeArgs) -> Result<(), CliError> {
    let cfg = config_for(args.variant, &args.primes)?;
    serve(&args.db, &args.family, cfg, &args.listen)?;
    Ok(())
}

fn cmd_get(args: GetArgs) -> Result<(), CliError> {
    let cfg = config_for(args.variant, &args.primes)?;
    let family = MvFamily::load(&args.family)?;
    let (symbol, cost) = match args.seed {
        Some(seed) => retrieve(
            &cfg,
            &family,
            &args.servers,
            args.tau,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )?,
        None => retrieve(&cfg, &family, &args.servers, args.tau, &mut rand::rng())?,
    };
    println!("symbol {symbol}");
    let csv = |v: &[u64]| {
        v.iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    println!(
        "cost variant={} n={} k={} up={} down={} total={}",
        cost.variant,
        cost.n,
        cost.k,
        csv(&cost.bytes_up),
        csv(&cost.bytes_down),
        cost.total()
    );
    Ok(())
}

fn cmd_audit(args: AuditArgs) -> Result<(), CliError> {
    let cfg = config_for(args.variant, &args.primes)?;
    let family = MvFamily::load(&args.family)?;
    let scheme = Scheme::new(cfg)?;
    let taus: Vec<usize> = match args.taus {
        Some(taus) => taus,
        None => (0..family.len()).collect(),
    };
    let report = privacy_audit(&scheme, &family, &taus)?;
    println!(
        "audited {} server slots over {} z values, {} target indices",
        report.server_slots,
        report.states,
        report.taus.len()
    );
    println!("max total-variation distance = {}", report.max_tv);
    if report.is_private() {
        println!("PASS: per-server query distributions are identical");
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_SELFTEST,
            message: "query distributions depend on the target index".into(),
        })
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    let all = [
        Variant::BaselineCubic,
        Variant::Mv2Server,
        Variant::Mv2ServerHom(mvpir::scheme::HomTarget::Z6),
        Variant::Mv2ServerHom(mvpir::scheme::HomTarget::F3),
        Variant::Mv2ServerOrder2,
        Variant::MvKServer,
    ];
    let mut variants = Vec::new();
    for name in &args.variants {
        if name == "all" {
            variants.extend_from_slice(&all);
        } else {
            variants.push(parse_variant(name).map_err(CliError::usage)?);
        }
    }
    let rows = run_bench(
        &variants,
        &args.n_list,
        &BenchOptions {
            seed: args.seed,
            search_budget: args.budget,
            retrievals: 3,
        },
    )?;
    let csv = to_csv(&rows);
    match args.out {
        Some(path) => {
            std::fs::write(&path, &csv)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_selftest(args: SelftestArgs) -> Result<(), CliError> {
    let results = run_selftest(args.family.as_deref());
    let mut failed = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        println!("{status} {} — {}", r.name, r.detail);
        if !r.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        println!("all {} checks passed", results.len());
        Ok(())
    } else {
        Err(CliError {
            code: EXIT_SELFTEST,
            message: format!("{failed} of {} checks failed", results.len()),
        })
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprint!("{e}");
            std::process::exit(EXIT_USAGE);
        }
    };
    let outcome = match cli.command {
        Command::GenFamily(args) => cmd_gen_family(args),
        Command::Encode(args) => cmd_encode(args),
        Command::Serve(args) => cmd_serve(args),
        Command::Get(args) => cmd_get(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Selftest(args) => cmd_selftest(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
