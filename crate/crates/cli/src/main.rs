//! Experiment runner: rate curves, attack analyses, protocol sessions,
//! reuse loops and the self-test, all deterministic given their flags.
//!
//! Exit codes: 0 success, 1 internal or self-test failure, 2 usage error,
//! 3 protocol abort (the session or loop still writes its report).

use clap::{Args, Parser, Subcommand};
use rebase_qkd::attack_models::{
    build_channel, channel_from_entries, parse_channel_spec, validate_channel, ChannelModel,
    ChannelSpec, KrausChannel,
};
use rebase_qkd::error_analysis::{
    check_relations, error_rates_exact, error_rates_formula, ErrorRates,
};
use rebase_qkd::gf2_codes::{named_code, CssCode};
use rebase_qkd::protocol::{run_reuse_loop, run_session, RefreshSpec, ReuseSizing, SessionConfig};
use rebase_qkd::rate_theory::{
    key_threshold, rate_curve, rates_to_csv, total_key_ratio, TotalKeyRatio,
};
use rebase_qkd::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ABORT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "qkd",
    about = "Simulator and rate analysis for QKD with a reusable shared base string",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the key/base generation-rate curves as CSV
    Rates(RatesArgs),
    /// Analyze an attack channel: error rates two ways plus their relations
    Attack(AttackArgs),
    /// Run one protocol session and write its transcript as JSON
    Session(SessionArgs),
    /// Run the multi-round reuse loop and write its report as JSON
    Reuse(ReuseArgs),
    /// Run the reduced acceptance checks
    Selftest,
}

#[derive(Args)]
struct RatesArgs {
    /// Smallest channel bit error rate on the grid
    #[arg(long, default_value_t = 0.0)]
    min: f64,
    /// Largest channel bit error rate on the grid (at most 0.25)
    #[arg(long, default_value_t = 0.25)]
    max: f64,
    /// Grid step
    #[arg(long, default_value_t = 0.005)]
    step: f64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(
        long,
        help = "Channel spec: identity | bitflip:<p> | phaseflip:<p> | depolarizing:<p> | ir-z | ir-random | custom:<path>"
    )]
    channel: String,
    /// Emit JSON instead of the text table
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SessionArgs {
    /// Check-set size; the session transmits 2n qubits
    #[arg(long, default_value_t = 70)]
    n: usize,
    /// Channel spec (see `attack`)
    #[arg(long)]
    channel: String,
    /// Session seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(
        long,
        default_value = "steane",
        help = "CSS pair for key distillation: steane | <c1>/<c2> with named codes"
    )]
    css: String,
    #[arg(
        long,
        default_value = "auto",
        help = "Base refresh code: auto | any named code (trunc:<n>:<k> scales freely)"
    )]
    c2prime: String,
    /// Abort when the observed error rate reaches this value
    /// [default: the key-rate threshold, about 0.11]
    #[arg(long)]
    abort_threshold: Option<f64>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReuseArgs {
    /// Check-set size of the first round; the initial base string has 2n bits
    #[arg(long, default_value_t = 700)]
    n: usize,
    /// Channel spec (see `attack`)
    #[arg(long)]
    channel: String,
    /// Maximum number of rounds
    #[arg(long)]
    rounds: usize,
    /// Loop seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-round sizing: idealized (rate-formula lengths, matches the
    /// closed-form total) or coded (full CSS sessions per round)
    #[arg(long, default_value = "idealized")]
    sizing: String,
    /// CSS pair, as in `session`
    #[arg(long, default_value = "steane")]
    css: String,
    /// Base refresh code, as in `session`
    #[arg(long, default_value = "auto")]
    c2prime: String,
    /// Abort threshold, as in `session`
    #[arg(long)]
    abort_threshold: Option<f64>,
    /// Output JSON path
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rates(args) => cmd_rates(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Session(args) => cmd_session(args),
        Command::Reuse(args) => cmd_reuse(args),
        Command::Selftest => cmd_selftest(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::InvalidArgument(_) | Error::InvalidConfig(_) => EXIT_USAGE,
                Error::NumericalIntegrity(_) | Error::DecodeFailure(_) => EXIT_INTERNAL,
            };
            ExitCode::from(code)
        }
    }
}

fn io_err(what: &str, err: std::io::Error) -> Error {
    Error::InvalidArgument(format!("{what}: {err}"))
}

fn resolve_channel(spec: &str) -> Result<KrausChannel, Error> {
    match parse_channel_spec(spec)? {
        ChannelSpec::Model(model) => build_channel(&model),
        ChannelSpec::CustomFile(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| io_err(&format!("reading {path}"), e))?;
            let entries: Vec<[[[f64; 2]; 2]; 2]> = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidArgument(format!("parsing {path}: {e}")))?;
            channel_from_entries(&entries)
        }
    }
}

fn resolve_channel_model(spec: &str) -> Result<ChannelModel, Error> {
    match parse_channel_spec(spec)? {
        ChannelSpec::Model(model) => Ok(model),
        ChannelSpec::CustomFile(_) => Ok(ChannelModel::Custom(resolve_channel(spec)?)),
    }
}

fn resolve_css(spec: &str) -> Result<CssCode, Error> {
    if spec == "steane" {
        return Ok(CssCode::steane_pair());
    }
    let (c1, c2) = spec.split_once('/').ok_or_else(|| {
        Error::InvalidArgument(format!(
            "CSS spec must be `steane` or `<c1>/<c2>`, got {spec:?}"
        ))
    })?;
    CssCode::new(named_code(c1)?, named_code(c2)?)
}

fn resolve_refresh(spec: &str) -> RefreshSpec {
    if spec == "auto" {
        RefreshSpec::Auto
    } else {
        RefreshSpec::Named(spec.to_string())
    }
}

fn session_config(
    n: usize,
    channel: &str,
    seed: u64,
    css: &str,
    c2prime: &str,
    abort_threshold: Option<f64>,
) -> Result<SessionConfig, Error> {
    Ok(SessionConfig {
        n,
        channel: resolve_channel_model(channel)?,
        css: resolve_css(css)?,
        c2_prime: resolve_refresh(c2prime),
        abort_threshold: abort_threshold.unwrap_or_else(key_threshold),
        rng_seed: seed,
    })
}

fn cmd_rates(args: RatesArgs) -> Result<u8, Error> {
    let points = rate_curve(args.min, args.max, args.step)?;
    let csv = rates_to_csv(&points);
    std::fs::write(&args.out, csv).map_err(|e| io_err("writing rates CSV", e))?;
    println!(
        "wrote {} grid points to {}",
        points.len(),
        args.out.display()
    );
    Ok(0)
}

fn fmt_rates(label: &str, r: &ErrorRates) -> String {
    format!(
        "  {label:<10} e_bit_comm {:.6}  e_ph_comm {:.6}  e_bit_base {:.6}  e_ph_base {:.6}",
        r.e_bit_comm, r.e_ph_comm, r.e_bit_base, r.e_ph_base
    )
}

fn cmd_attack(args: AttackArgs) -> Result<u8, Error> {
    let ch = resolve_channel(&args.channel)?;
    let formula = error_rates_formula(&ch)?;
    let exact = error_rates_exact(&ch)?;
    let rel_formula = check_relations(&formula);
    let rel_exact = check_relations(&exact);
    // worst case over both computation paths
    let relations = rebase_qkd::error_analysis::RelationReport {
        ph_eq_bit_residual: rel_formula
            .ph_eq_bit_residual
            .max(rel_exact.ph_eq_bit_residual),
        base_bit_residual: rel_formula
            .base_bit_residual
            .max(rel_exact.base_bit_residual),
        ph_base_slack: rel_formula.ph_base_slack.min(rel_exact.ph_base_slack),
    };
    let gap = formula.max_abs_diff(&exact);
    let ok = relations.holds(1e-9) && gap <= 1e-9;

    if args.json {
        let doc = serde_json::json!({
            "channel": args.channel,
            "completeness_residual": validate_channel(&ch),
            "formula": formula,
            "exact": exact,
            "relations": relations,
            "max_formula_exact_gap": gap,
        });
        println!(
            "{}",
            serde_json::to_string_pretty(&doc).expect("serializable")
        );
    } else {
        println!(
            "channel: {} (completeness residual {:.3e})",
            args.channel,
            validate_channel(&ch)
        );
        println!("{}", fmt_rates("formula", &formula));
        println!("{}", fmt_rates("exact", &exact));
        println!("relations (worst of both paths):");
        println!(
            "  |e_ph_comm - e_bit_comm| = {:.3e}   (tolerance 1e-9)",
            relations.ph_eq_bit_residual
        );
        println!(
            "  e_bit_base               = {:.3e}   (tolerance 1e-12)",
            relations.base_bit_residual
        );
        println!(
            "  2 e_bit_comm - e_ph_base = {:+.3e}  (must be >= -1e-9)",
            relations.ph_base_slack
        );
        println!("max |formula - exact|      = {gap:.3e}");
    }

    if ok {
        Ok(0)
    } else {
        eprintln!("error: rate relations violated beyond tolerance (simulator defect)");
        Ok(EXIT_INTERNAL)
    }
}

fn cmd_session(args: SessionArgs) -> Result<u8, Error> {
    let cfg = session_config(
        args.n,
        &args.channel,
        args.seed,
        &args.css,
        &args.c2prime,
        args.abort_threshold,
    )?;
    let result = run_session(&cfg)?;
    let mut payload = serde_json::to_vec_pretty(&result).expect("serializable");
    payload.push(b'\n');
    std::fs::write(&args.out, payload).map_err(|e| io_err("writing session JSON", e))?;
    println!(
        "observed_e = {:.6}, aborted = {}, key bits = {}, refreshed base bits = {}",
        result.observed_e,
        result.aborted,
        result.key_alice.len(),
        result.refreshed_base.len()
    );
    println!("wrote {}", args.out.display());
    Ok(if result.aborted { EXIT_ABORT } else { 0 })
}

fn cmd_reuse(args: ReuseArgs) -> Result<u8, Error> {
    let sizing = match args.sizing.as_str() {
        "idealized" => ReuseSizing::Idealized,
        "coded" => ReuseSizing::Coded,
        other => {
            return Err(Error::InvalidArgument(format!(
                "sizing must be `idealized` or `coded`, got {other:?}"
            )))
        }
    };
    let cfg = session_config(
        args.n,
        &args.channel,
        args.seed,
        &args.css,
        &args.c2prime,
        args.abort_threshold,
    )?;
    let report = run_reuse_loop(&cfg, args.rounds, sizing)?;
    let mut payload = serde_json::to_vec_pretty(&report).expect("serializable");
    payload.push(b'\n');
    std::fs::write(&args.out, payload).map_err(|e| io_err("writing reuse JSON", e))?;

    println!(
        "rounds run: {} of {} (aborted: {})",
        report.rounds_run, args.rounds, report.aborted
    );
    println!(
        "total key bits: {} from {} initial base bits",
        report.total_key_bits, report.initial_base_len
    );
    println!("measured  L_k/(2n) = {:.5}", report.key_per_initial_base);
    let e_ref = error_rates_formula(&build_channel(&cfg.channel)?)?.e_bit_comm;
    if e_ref <= 0.25 {
        match total_key_ratio(e_ref)? {
            TotalKeyRatio::Unbounded => {
                println!("closed-form L_k/(2n) at e = {e_ref:.6} is unbounded")
            }
            TotalKeyRatio::Finite(v) => {
                println!("closed-form L_k/(2n) at e = {e_ref:.6} is {v:.5}")
            }
        }
    } else {
        println!("closed form undefined: channel error rate {e_ref:.6} beyond 0.25");
    }
    println!("wrote {}", args.out.display());
    Ok(if report.aborted { EXIT_ABORT } else { 0 })
}

fn cmd_selftest() -> Result<u8, Error> {
    let outcomes = rebase_qkd::selftest::run_all();
    let mut failures = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<26} {}", o.name, o.detail);
        failures += usize::from(!o.passed);
    }
    if failures == 0 {
        println!("self-test passed ({} checks)", outcomes.len());
        Ok(0)
    } else {
        eprintln!("self-test failed: {failures} of {} checks", outcomes.len());
        Ok(EXIT_INTERNAL)
    }
}
