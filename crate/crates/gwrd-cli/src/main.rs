//! `gwrd` — compute and probe the rate-distortion region of a two-receiver
//! source coding network with side information, and simulate its
//! double-binning coding scheme.
//!
//! Exit codes: 0 success/verified, 1 verification mismatch, 2 usage or
//! validation error, 3 resource refusal.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gwrd_core::aux::{extend_with_aux, optimal_phi, AuxChannel, DistortionMeasure};
use gwrd_core::corpus::{self, Claim, NamedSource};
use gwrd_core::fme::LinearSystem;
use gwrd_core::pmf::{JointPmf, Role, VariableSet};
use gwrd_core::region::{full_network_bounds, refinement_bounds, scalable_bounds, Variant};
use gwrd_core::search::{
    channel_support_value_with, min_support_value, min_weighted_rate_with, FrontierPoint,
    SearchConfig, SearchMode,
};
use gwrd_core::sim::SimConfig;
use gwrd_core::srcjson::SourceSpec;
use gwrd_core::{fmt_f64, Error};

#[derive(Parser)]
#[command(name = "gwrd", version, about = "Rate-distortion region toolkit", max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print entropy and information terms of a source (and its channel).
    Info(InfoArgs),
    /// Trace an achievable rate frontier over a weight grid.
    Region(RegionArgs),
    /// Project a linear constraint system by Fourier-Motzkin elimination.
    Fme(FmeArgs),
    /// Monte-Carlo simulate the double-binning scheme.
    Simulate(SimulateArgs),
    /// Verify a documented frontier from both directions.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InfoArgs {
    /// Built-in name (example1, example2, bs-lossless:<p>) or a JSON file.
    source: String,
}

#[derive(Args)]
struct RegionArgs {
    source: String,
    /// Region variant: gw, sr or sc.
    #[arg(long, default_value = "gw")]
    variant: String,
    /// Distortion budget for receiver 1.
    #[arg(long, default_value_t = 0.0)]
    d1: f64,
    #[arg(long)]
    u0_card: Option<usize>,
    #[arg(long)]
    u1_card: Option<usize>,
    /// Candidate generation: deterministic-enum, random-stochastic, local-search.
    #[arg(long, default_value = "random-stochastic")]
    mode: String,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Semicolon-separated weight triples, e.g. "1,0,0;1,1,0".
    #[arg(long, default_value = "1,0,0;1,1,0;1,0,1;0,1,0;0,0,1;1,1,1")]
    weights_grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FmeArgs {
    /// Use the built-in constraint system of the coding scheme.
    #[arg(long, conflicts_with = "system")]
    builtin: Option<String>,
    /// Load a system from a JSON file instead.
    #[arg(long)]
    system: Option<PathBuf>,
    /// Comma-separated variables to keep, e.g. "R0,R1,R2".
    #[arg(long)]
    keep: String,
    /// Comma-separated elimination order (defaults to declaration order).
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    source: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0.25)]
    margin: f64,
    #[arg(long, default_value_t = 0.15)]
    typ_delta: f64,
    /// Push the message sum rate this many bits below the sum bound.
    #[arg(long, default_value_t = 0.0)]
    sum_rate_deficit: f64,
    /// Reuse one codebook across trials.
    #[arg(long)]
    fixed_codebooks: bool,
    /// Stored-codeword-symbol budget.
    #[arg(long, default_value_t = 1u64 << 26)]
    memory_budget: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// claim1 or claim2.
    #[arg(long)]
    claim: String,
    #[arg(long, default_value_t = 10000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("GWRD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Info(args) => cmd_info(args),
        Command::Region(args) => cmd_region(args),
        Command::Fme(args) => cmd_fme(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::MemoryBudget { .. } | Error::EnumerationTooLarge { .. } => {
                    ExitCode::from(3)
                }
                _ => ExitCode::from(2),
            }
        }
    }
}

/// A source plus whatever else the document or corpus carries.
struct LoadedSource {
    named: Option<NamedSource>,
    source: JointPmf,
    aux: Option<AuxChannel>,
    distortion: DistortionMeasure,
}

fn load_source(spec: &str) -> Result<LoadedSource, Error> {
    if let Some(built) = corpus::by_name(spec) {
        let named = built?;
        return Ok(LoadedSource {
            source: named.source.clone(),
            aux: named.documented_channel.clone(),
            distortion: DistortionMeasure::hamming(named.source.alphabet(Role::S1)?),
            named: Some(named),
        });
    }
    let text =
        fs::read_to_string(spec).map_err(|e| Error::Io(format!("cannot read {spec}: {e}")))?;
    let doc = SourceSpec::parse(&text)?;
    let source = doc.build_source()?;
    let aux = doc.build_aux(&source)?;
    let distortion = match doc.build_distortion(&source)? {
        Some(d) => d,
        None => DistortionMeasure::hamming(source.alphabet(Role::S1)?),
    };
    Ok(LoadedSource {
        named: None,
        source,
        aux,
        distortion,
    })
}

fn emit(out: Option<&PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_info(args: InfoArgs) -> Result<ExitCode, Error> {
    let loaded = load_source(&args.source)?;
    let s = &loaded.source;
    let set = |roles: &[Role]| VariableSet::new(roles.iter().copied());
    let h = |t: &[Role], g: &[Role]| s.conditional_entropy(&set(t), &set(g));
    println!("source: {}", args.source);
    println!("H(S2|Y1)    = {}", fmt_f64(h(&[Role::S2], &[Role::Y1])?));
    println!("H(S2|Y2)    = {}", fmt_f64(h(&[Role::S2], &[Role::Y2])?));
    println!(
        "H(S1,S2|Y1) = {}",
        fmt_f64(h(&[Role::S1, Role::S2], &[Role::Y1])?)
    );
    println!(
        "H(S1,S2|Y2) = {}",
        fmt_f64(h(&[Role::S1, Role::S2], &[Role::Y2])?)
    );
    if let Some(chan) = &loaded.aux {
        let ext = extend_with_aux(s, chan)?;
        let b = full_network_bounds(&ext)?;
        println!(
            "with auxiliary channel ({}x{} symbols):",
            chan.u0_alphabet().size(),
            chan.u1_alphabet().size()
        );
        println!(
            "  H(S2|Y1) + I(U0,U1;S1|S2,Y1)                  = {}",
            fmt_f64(b.b_r0_r1.unwrap())
        );
        println!(
            "  H(S2|Y2) + I(U0;S1|S2,Y2)                     = {}",
            fmt_f64(b.b_r0_r2.unwrap())
        );
        println!(
            "  H(S2|Y2) + I(U0;S1|S2,Y2) + I(U1;S1|U0,S2,Y1) = {}",
            fmt_f64(b.b_sum.unwrap())
        );
        let (_, dist) = optimal_phi(&ext, &loaded.distortion)?;
        println!(
            "  optimal expected distortion                   = {}",
            fmt_f64(dist)
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_weights_grid(s: &str) -> Result<Vec<[f64; 3]>, Error> {
    let mut grid = Vec::new();
    for triple in s.split(';') {
        let parts: Vec<f64> = triple
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Io(format!("bad weight triple {triple:?}: {e}")))?;
        if parts.len() != 3 {
            return Err(Error::Io(format!(
                "weight triple {triple:?} must have 3 entries"
            )));
        }
        grid.push([parts[0], parts[1], parts[2]]);
    }
    Ok(grid)
}

fn variant_bounds(
    ext: &JointPmf,
    variant: Variant,
) -> Result<gwrd_core::region::RateBounds, Error> {
    match variant {
        Variant::Gw => full_network_bounds(ext),
        Variant::Sr => refinement_bounds(ext),
        Variant::Sc => scalable_bounds(ext),
    }
}

fn cmd_region(args: RegionArgs) -> Result<ExitCode, Error> {
    let loaded = load_source(&args.source)?;
    let variant = Variant::parse(&args.variant)
        .ok_or_else(|| Error::Io(format!("unknown variant {:?}", args.variant)))?;
    let mode = SearchMode::parse(&args.mode)
        .ok_or_else(|| Error::Io(format!("unknown mode {:?}", args.mode)))?;
    let mut cfg = SearchConfig::for_source(&loaded.source, args.seed);
    cfg.mode = mode;
    cfg.samples = args.samples;
    cfg.restarts = args.restarts;
    if let Some(c) = args.u0_card {
        cfg.u0_card = c;
    }
    if let Some(c) = args.u1_card {
        cfg.u1_card = c;
    }
    let grid = parse_weights_grid(&args.weights_grid)?;

    // channels the corpus documents compete against the searched ones
    let mut pinned: Vec<AuxChannel> = Vec::new();
    if let Some(named) = &loaded.named {
        pinned.extend(named.documented_channel.clone());
        pinned.extend(named.suboptimal_channel.clone());
    } else {
        pinned.extend(loaded.aux.clone());
    }

    let mut csv = String::from("w0,w1,w2,value_bits,r0,r1,r2,d1,channel_serialized\n");
    for &weights in &grid {
        let mut best = min_weighted_rate_with(
            &loaded.source,
            &loaded.distortion,
            args.d1,
            weights,
            variant,
            &cfg,
        );
        for chan in &pinned {
            if let Ok(value) = channel_support_value_with(
                &loaded.source,
                chan,
                &loaded.distortion,
                args.d1,
                weights,
                variant,
            ) {
                let better = match &best {
                    Ok(fp) => value < fp.value - 1e-12,
                    Err(_) => true,
                };
                if better {
                    let ext = extend_with_aux(&loaded.source, chan)?;
                    let bounds = variant_bounds(&ext, variant)?;
                    let (value, point) = min_support_value(&bounds, weights, variant)?;
                    best = Ok(FrontierPoint {
                        weights,
                        value,
                        point,
                        channel_id: chan.serialize_row_major(),
                    });
                }
            }
        }
        let fp = best?;
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(weights[0]),
            fmt_f64(weights[1]),
            fmt_f64(weights[2]),
            fmt_f64(fp.value),
            fmt_f64(fp.point.r0),
            fmt_f64(fp.point.r1),
            fmt_f64(fp.point.r2),
            fmt_f64(args.d1),
            fp.channel_id
        )
        .expect("string write");
    }
    emit(args.out.as_ref(), &csv)?;
    if args.out.is_some() {
        println!("wrote {} frontier rows", grid.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fme(args: FmeArgs) -> Result<ExitCode, Error> {
    let sys = match (&args.builtin, &args.system) {
        (Some(name), None) => match name.as_str() {
            "achievability" => gwrd_core::fme::achievability_system_for_projection(),
            other => return Err(Error::Io(format!("unknown builtin {other:?}"))),
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
            let doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| Error::Io(format!("bad JSON: {e}")))?;
            LinearSystem::from_json(&doc)?
        }
        _ => {
            return Err(Error::Io(
                "exactly one of --builtin or --system is required".into(),
            ))
        }
    };
    let keep: Vec<String> = args.keep.split(',').map(|s| s.trim().to_string()).collect();
    let order: Option<Vec<String>> = args
        .order
        .as_ref()
        .map(|o| o.split(',').map(|s| s.trim().to_string()).collect());
    let projected = sys.project(&keep, order.as_deref())?.canonicalize();
    let doc = serde_json::to_string_pretty(&projected.to_json()).expect("system serializes") + "\n";
    emit(args.out.as_ref(), &doc)?;
    if args.out.is_some() {
        println!(
            "projected onto {} variables: {} rows",
            projected.vars.len(),
            projected.inequalities.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let loaded = load_source(&args.source)?;
    let chan = loaded.aux.clone().unwrap_or_else(|| {
        AuxChannel::constant(
            loaded.source.alphabet(Role::S1).map(|a| a.size()).unwrap_or(1),
            loaded.source.alphabet(Role::S2).map(|a| a.size()).unwrap_or(1),
        )
    });
    let ext = extend_with_aux(&loaded.source, &chan)?;
    let (phi, _) = optimal_phi(&ext, &loaded.distortion)?;

    let mut cfg = SimConfig::new(args.n, args.trials, args.seed);
    cfg.rate_margin = args.margin;
    cfg.typ_delta = args.typ_delta;
    cfg.sum_rate_deficit = args.sum_rate_deficit;
    cfg.fixed_codebooks = args.fixed_codebooks;
    cfg.memory_budget = args.memory_budget;

    let (params, _) = gwrd_core::sim::derive_params(&loaded.source, &chan, &cfg)?;
    let res = gwrd_core::sim::run_trials_with(
        &loaded.source,
        &chan,
        &phi,
        &loaded.distortion,
        &params,
        &cfg,
    )?;
    let mut csv = String::from(
        "n,trials,seed,r0,r1,r2,p_e,avg_d1,encode_failures,decode1_failures,decode2_failures\n",
    );
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{}",
        args.n,
        args.trials,
        args.seed,
        fmt_f64(res.rates.0),
        fmt_f64(res.rates.1),
        fmt_f64(res.rates.2),
        fmt_f64(res.p_e),
        fmt_f64(res.avg_d1),
        res.encode_failures,
        res.decode1_failures,
        res.decode2_failures
    )
    .expect("string write");
    emit(args.out.as_ref(), &csv)?;
    if args.out.is_some() {
        println!("p_e = {}", fmt_f64(res.p_e));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let claim = match args.claim.as_str() {
        "claim1" => Claim::Claim1,
        "claim2" => Claim::Claim2,
        other => return Err(Error::Io(format!("unknown claim {other:?}"))),
    };
    let named = match claim {
        Claim::Claim1 => corpus::build_example1(),
        Claim::Claim2 => corpus::build_example2(),
    };
    let mut cfg = SearchConfig::for_source(&named.source, args.seed);
    cfg.samples = args.samples;
    let report = corpus::verify_claim(claim, &cfg)?;

    println!("verifying {} on {}", args.claim, named.name);
    for (w, documented, value, ok) in &report.achievability {
        println!(
            "  achievability w=({},{},{}): documented {} evaluated {} -> {}",
            w[0],
            w[1],
            w[2],
            fmt_f64(*documented),
            fmt_f64(*value),
            if *ok { "MATCH" } else { "MISMATCH" }
        );
    }
    for (w, documented, value, ok) in &report.suboptimal {
        println!(
            "  constant-U0 w=({},{},{}): documented {} evaluated {} -> {}",
            w[0],
            w[1],
            w[2],
            fmt_f64(*documented),
            fmt_f64(*value),
            if *ok { "MATCH" } else { "MISMATCH" }
        );
    }
    for e in &report.converse.entries {
        println!(
            "  converse probe w=({},{},{}): claimed {} best sampled {} -> {}",
            e.weights[0],
            e.weights[1],
            e.weights[2],
            fmt_f64(e.claimed),
            e.best_found.map(fmt_f64).unwrap_or_else(|| "none".into()),
            if e.violated { "VIOLATED" } else { "no violation" }
        );
    }
    println!(
        "  channels probed: {} (deterministic enumeration {})",
        report.converse.channels_tried,
        if report.converse.deterministic_included {
            "included"
        } else {
            "skipped: over cutoff"
        }
    );
    if report.passed() {
        println!("result: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("result: FAIL");
        Ok(ExitCode::from(1))
    }
}
