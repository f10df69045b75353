use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use zerosum::constructions::{
    gen_classical, gen_harborth2, gen_restricted_davenport, gen_restricted_erdos_extremal, ClassicalKind,
};
use zerosum::decision::{decide, ZKind};
use zerosum::group::prime_factors;
use zerosum::invariants::{compute_invariant, scan_conjecture, InvariantKind, InvariantQuery, SearchOptions, Symmetry};
use zerosum::montecarlo::{
    chain_probability, column_increasing_probability, column_increasing_probability_printed, run_experiment,
    LengthSpec, Method, Scenario, TrialConfig, DEFAULT_EXACT_THRESHOLD,
};
use zerosum::sumsets::{
    subset_sums, subset_sums_of_size, subset_sums_with_zero, sumset, sweep_law, verify_law, Law, ResidueSet,
};
use zerosum::{Error, Modulus, WeightSet, ZnSequence, SCHEMA};

const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

/// Zero-sum sequences over Z_n: decisions, invariants, constructions and
/// random experiments. Every command prints one JSON document.
#[derive(Parser, Debug)]
#[command(name = "zerosum", version)]
struct Cli {
    /// Human-readable output instead of compact JSON.
    #[arg(long, global = true)]
    pretty: bool,
    /// Worker threads (ZEROSUM_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a sequence is a weighted zero-sum sequence.
    Decide(DecideArgs),
    /// Compute D_A, E_A, s^(k) or the restricted Davenport threshold exactly.
    Invariant(InvariantArgs),
    /// Run a seeded Monte Carlo experiment.
    Simulate(SimulateArgs),
    /// Exact and simulated chain probabilities for prime-support sets.
    Probability(ProbabilityArgs),
    /// Build and verify an extremal sequence.
    Construct(ConstructArgs),
    /// Subset sums, sumsets and additive laws.
    Sumset(SumsetArgs),
    /// Compare s^(k)(Z_n) with n + k over a grid.
    Scan(ScanArgs),
}

#[derive(Args, Debug)]
struct DecideArgs {
    #[arg(long)]
    n: u64,
    /// Weight set: `pm1`, `units` or a comma list.
    #[arg(long = "A", default_value = "1")]
    a: String,
    #[arg(long)]
    kind: ZKind,
    /// Comma-separated integers, reduced mod n.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "seq_file")]
    seq: Option<String>,
    /// File with one integer per line.
    #[arg(long)]
    seq_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvariantArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    kind: InvariantKind,
    #[arg(long = "A", default_value = "1")]
    a: String,
    /// Multiplicity cap for the restricted kinds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = zerosum::invariants::DEFAULT_BUDGET)]
    budget: u64,
    #[arg(long, default_value = "auto")]
    symmetry: Symmetry,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    scenario: Scenario,
    #[arg(long)]
    n: Option<u64>,
    /// Comma list of distinct primes.
    #[arg(long)]
    primes: Option<String>,
    /// Fixed sequence length.
    #[arg(long, conflicts_with_all = ["log2_offset", "half_log2_offset"])]
    m: Option<usize>,
    /// Length ⌊log₂ n⌋ + offset.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "half_log2_offset")]
    log2_offset: Option<i64>,
    /// Length ⌊½ log₂ n⌋ + offset.
    #[arg(long, allow_hyphen_values = true)]
    half_log2_offset: Option<i64>,
    #[arg(long)]
    a: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long, default_value_t = 200)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "auto")]
    method: Method,
    #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
    exact_threshold: u64,
}

#[derive(Args, Debug)]
struct ProbabilityArgs {
    #[arg(long)]
    primes: String,
    #[arg(long)]
    m: u32,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// ones | signed-powers | divisor-chain | egz | harborth2 |
    /// restricted-erdos-extremal | restricted-davenport
    #[arg(long)]
    kind: String,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    /// Prime factors for divisor-chain (default: factorization of n).
    #[arg(long)]
    factors: Option<String>,
}

#[derive(Args, Debug)]
struct SumsetArgs {
    #[arg(long)]
    n: u64,
    #[arg(long = "A")]
    a: Option<String>,
    #[arg(long = "B")]
    b: Option<String>,
    /// Check a law instead of computing a set.
    #[arg(long)]
    law: Option<Law>,
    /// Sweep the law over every admissible input at n.
    #[arg(long, requires = "law")]
    exhaustive: bool,
    /// Sums of exactly this many distinct elements of A.
    #[arg(long)]
    size: Option<usize>,
    /// Include the empty sum 0 in S(A).
    #[arg(long)]
    with_zero: bool,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, default_value = "restricted-erdos")]
    kinds: String,
    /// Range `a..b` (inclusive) or a single value.
    #[arg(long)]
    n: String,
    #[arg(long)]
    k: String,
    #[arg(long, default_value_t = zerosum::invariants::DEFAULT_BUDGET)]
    budget: u64,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            Error::VerificationFailed(_) | Error::SearchExhausted(_) => EXIT_VERIFICATION,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(inner) => inner.into(),
            Err(e) => Failure {
                code: EXIT_USAGE,
                message: format!("{e:#}"),
            },
        }
    }
}

fn parse_list(s: &str) -> anyhow::Result<Vec<i64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<i64>().with_context(|| format!("not an integer: '{t}'")))
        .collect()
}

fn parse_unsigned_list(s: &str) -> anyhow::Result<Vec<u64>> {
    parse_list(s)?
        .into_iter()
        .map(|v| u64::try_from(v).map_err(|_| anyhow!("expected a nonnegative integer, got {v}")))
        .collect()
}

fn parse_range(s: &str) -> anyhow::Result<RangeInclusive<u64>> {
    let parse = |t: &str| {
        t.trim()
            .parse::<u64>()
            .with_context(|| format!("bad range bound '{t}'"))
    };
    match s.split_once("..") {
        Some((lo, hi)) => {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            Ok(parse(lo)?..=parse(hi)?)
        }
        None => {
            let v = parse(s)?;
            Ok(v..=v)
        }
    }
}

fn parse_weights(spec: &str, n: Modulus) -> anyhow::Result<WeightSet> {
    Ok(match spec.trim() {
        "pm1" => WeightSet::plus_minus_one(n),
        "units" => WeightSet::units(n),
        list => {
            let vals = parse_list(list)?;
            if vals.is_empty() {
                bail!("empty weight set");
            }
            let reduced = vals.into_iter().map(|v| n.normalize(v).value());
            WeightSet::explicit(n, reduced)?
        }
    })
}

fn read_sequence(args: &DecideArgs, n: Modulus) -> anyhow::Result<ZnSequence> {
    let values = match (&args.seq, &args.seq_file) {
        (Some(s), None) => parse_list(s)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| l.parse::<i64>().with_context(|| format!("not an integer: '{l}'")))
                .collect::<anyhow::Result<_>>()?
        }
        _ => bail!("exactly one of --seq or --seq-file is required"),
    };
    Ok(ZnSequence::from_signed(n, values))
}

fn cmd_decide(args: &DecideArgs) -> Result<Value, Failure> {
    let n = Modulus::new(args.n)?;
    let weights = parse_weights(&args.a, n)?;
    let x = read_sequence(args, n)?;
    let out = decide(&x, &weights, args.kind)?;
    let mut payload = json!({
        "n": n.get(),
        "kind": args.kind,
        "weights": weights,
        "sequence": x.entries(),
        "is_z": out.is_z_sequence,
    });
    if let Some(w) = out.witness {
        payload["witness"] = json!(w.coefficients());
    }
    Ok(payload)
}

fn cmd_invariant(args: &InvariantArgs) -> Result<Value, Failure> {
    let n = Modulus::new(args.n)?;
    let query = match args.kind {
        InvariantKind::Davenport => InvariantQuery::davenport(parse_weights(&args.a, n)?),
        InvariantKind::Erdos => InvariantQuery::erdos(parse_weights(&args.a, n)?),
        InvariantKind::RestrictedErdos | InvariantKind::RestrictedDavenport => {
            let k = args.k.ok_or_else(|| anyhow!("--k is required for {}", args.kind))?;
            if args.kind == InvariantKind::RestrictedErdos {
                InvariantQuery::restricted_erdos(n, k)
            } else {
                InvariantQuery::restricted_davenport(n, k)
            }
        }
    };
    let res = compute_invariant(
        &query,
        SearchOptions {
            budget: args.budget,
            symmetry: args.symmetry,
        },
    )?;
    Ok(json!({
        "n": n.get(),
        "kind": res.kind,
        "k": args.k.filter(|_| args.kind.is_restricted()),
        "value": res.value,
        "extremal_witness": res.extremal_witness.entries(),
        "multisets_examined": res.search_stats.multisets_examined,
        "symmetry": res.search_stats.symmetry,
    }))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Value, Failure> {
    let length = match (args.m, args.log2_offset, args.half_log2_offset) {
        (Some(m), _, _) => Some(LengthSpec::Fixed(m)),
        (_, Some(off), _) => Some(LengthSpec::Log2Offset(off)),
        (_, _, Some(off)) => Some(LengthSpec::HalfLog2Offset(off)),
        _ => None,
    };
    let config = TrialConfig {
        scenario: args.scenario,
        n: args.n,
        primes: args.primes.as_deref().map(parse_unsigned_list).transpose()?,
        length,
        a: args.a,
        b: args.b,
        trials: args.trials,
        seed: args.seed,
        method: args.method,
        exact_threshold: args.exact_threshold,
    };
    Ok(serde_json::to_value(run_experiment(&config)?).expect("report serializes"))
}

fn cmd_probability(args: &ProbabilityArgs) -> Result<Value, Failure> {
    let primes = parse_unsigned_list(&args.primes)?;
    let report = chain_probability(&primes, args.m, args.trials, args.seed)?;
    let columns = primes
        .iter()
        .map(|&p| {
            Ok(json!({
                "p": p,
                "probability": column_increasing_probability(p, args.m)?.to_string(),
                "printed_closed_form": column_increasing_probability_printed(p, args.m)?.to_string(),
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut payload = serde_json::to_value(report).expect("report serializes");
    payload["columns"] = json!(columns);
    Ok(payload)
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| anyhow!("--{flag} is required for {kind}"))
}

fn cmd_construct(args: &ConstructArgs) -> Result<Value, Failure> {
    let kind = args.kind.as_str();
    let modulus = |flag| -> anyhow::Result<Modulus> { Ok(Modulus::new(need(args.n, flag, kind)?)?) };
    let report = match kind {
        "ones" => gen_classical(&ClassicalKind::Ones, modulus("n")?)?,
        "signed-powers" => gen_classical(&ClassicalKind::SignedPowers, modulus("n")?)?,
        "egz" => gen_classical(&ClassicalKind::Egz, modulus("n")?)?,
        "divisor-chain" => {
            let n = modulus("n")?;
            let factors = match &args.factors {
                Some(f) => parse_unsigned_list(f)?,
                None => prime_factors(n.get()),
            };
            gen_classical(&ClassicalKind::DivisorChain { factors }, n)?
        }
        "harborth2" => gen_harborth2(modulus("n")?)?,
        "restricted-erdos-extremal" => {
            gen_restricted_erdos_extremal(need(args.p, "p", kind)?, need(args.k, "k", kind)?)?
        }
        "restricted-davenport" => gen_restricted_davenport(modulus("n")?, need(args.k, "k", kind)?)?,
        other => return Err(anyhow!("unknown construction '{other}'").into()),
    };
    Ok(serde_json::to_value(report).expect("report serializes"))
}

fn cmd_sumset(args: &SumsetArgs) -> Result<Value, Failure> {
    let n = Modulus::new(args.n)?;
    let set = |s: &Option<String>| -> anyhow::Result<Option<ResidueSet>> {
        s.as_deref()
            .map(|s| {
                Ok(ResidueSet::new(
                    n,
                    parse_list(s)?.into_iter().map(|v| n.normalize(v).value()),
                ))
            })
            .transpose()
    };
    let a = set(&args.a)?;
    let b = set(&args.b)?;
    if let Some(law) = args.law {
        if args.exhaustive {
            return Ok(serde_json::to_value(sweep_law(law, n)?).expect("report serializes"));
        }
        let a = a.ok_or_else(|| anyhow!("--A is required"))?;
        return Ok(serde_json::to_value(verify_law(law, &a, b.as_ref())?).expect("report serializes"));
    }
    let a = a.ok_or_else(|| anyhow!("--A is required"))?;
    let (op, out) = match (&b, args.size) {
        (Some(b), _) => ("sumset", sumset(&a, b)?),
        (None, Some(t)) => ("subset-sums-of-size", subset_sums_of_size(&a, t)?),
        (None, None) if args.with_zero => ("subset-sums-with-zero", subset_sums_with_zero(&a)),
        (None, None) => ("subset-sums", subset_sums(&a)),
    };
    Ok(json!({ "n": n.get(), "op": op, "members": out.members(), "size": out.len() }))
}

fn cmd_scan(args: &ScanArgs) -> Result<Value, Failure> {
    for kind in args.kinds.split(',').map(str::trim) {
        if kind != "restricted-erdos" {
            return Err(anyhow!("scan supports restricted-erdos only, got '{kind}'").into());
        }
    }
    let ns = parse_range(&args.n)?;
    let ks = parse_range(&args.k)?;
    let ks = *ks.start() as usize..=*ks.end() as usize;
    let cells = scan_conjecture(
        ns,
        ks,
        SearchOptions {
            budget: args.budget,
            symmetry: Symmetry::Auto,
        },
    )?;
    let all_settled = cells
        .iter()
        .all(|c| c.certificate.as_ref().is_none_or(|cert| cert.brute_force_confirmed));
    Ok(json!({ "kind": "restricted-erdos", "cells": cells, "counterexamples_confirmed": all_settled }))
}

fn run(cli: &Cli) -> Result<Value, Failure> {
    match &cli.command {
        Command::Decide(a) => cmd_decide(a),
        Command::Invariant(a) => cmd_invariant(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Probability(a) => cmd_probability(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Sumset(a) => cmd_sumset(a),
        Command::Scan(a) => cmd_scan(a),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<Vec<String>, Failure> {
    let env = std::env::var("ZEROSUM_THREADS").ok();
    let threads = match env.as_deref() {
        Some(v) => Some(v.trim().parse::<usize>().map_err(|_| Failure {
            code: EXIT_USAGE,
            message: format!("ZEROSUM_THREADS is not a number: '{v}'"),
        })?),
        None => flag,
    };
    let mut diagnostics = Vec::new();
    if let Some(t) = threads.filter(|&t| t > 0) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure {
                code: EXIT_USAGE,
                message: e.to_string(),
            })?;
        diagnostics.push(format!("threads: {t}"));
    }
    Ok(diagnostics)
}

fn render_pretty(command: &Command, payload: &Value) -> String {
    if let (Command::Scan(_), Some(cells)) = (command, payload["cells"].as_array()) {
        let mut out = String::from("  n  k  s^(k)  n+k  verdict\n");
        for c in cells {
            let num = |key: &str| c[key].as_u64().map_or("-".to_string(), |v| v.to_string());
            out.push_str(&format!(
                "{:>3} {:>2} {:>6} {:>4}  {}\n",
                num("n"),
                num("k"),
                num("value"),
                num("conjectured"),
                c["verdict"].as_str().unwrap_or("?")
            ));
        }
        return out;
    }
    serde_json::to_string_pretty(payload).expect("json renders")
}

fn emit(status: &str, payload: Value, diagnostics: Vec<String>, pretty: bool) {
    let doc = json!({ "schema": SCHEMA, "status": status, "payload": payload, "diagnostics": diagnostics });
    if pretty {
        println!("{}", serde_json::to_string_pretty(&doc).expect("json renders"));
    } else {
        println!("{doc}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit(
                "error",
                Value::Null,
                vec![e.render().to_string().trim().to_string()],
                false,
            );
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let diagnostics = match configure_threads(cli.threads) {
        Ok(d) => d,
        Err(f) => {
            emit("error", Value::Null, vec![f.message], cli.pretty);
            return ExitCode::from(f.code);
        }
    };
    match run(&cli) {
        Ok(payload) => {
            if cli.pretty {
                println!("{}", render_pretty(&cli.command, &payload));
            } else {
                emit("ok", payload, diagnostics, false);
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            let mut diagnostics = diagnostics;
            diagnostics.push(f.message);
            emit("error", Value::Null, diagnostics, cli.pretty);
            ExitCode::from(f.code)
        }
    }
}
