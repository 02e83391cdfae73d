//! Command-line front end: exact norms with certificates, context generation
//! with closure reports, isometry checks, special-sequence and witness
//! builders, registry inspection, and the acceptance selftest.
//!
//! Exit codes: 0 ok, 1 assertion failure, 2 usage, 3 capacity.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{OutputFormat, RegistryLock, RunConfig};
use seqspace::constructions;
use seqspace::engine;
use seqspace::error::Error;
use seqspace::mt;
use seqspace::norming::{
    build_j_special, build_lambda_special, check_k1, check_k2, check_k3, check_tree_property,
    generate_k, verify_special, KContext, Regime, Saturation,
};
use seqspace::rational;
use seqspace::schedule::ScheduleMode;
use seqspace::selftest;
use seqspace::sigma::{canonical_serialize_functional, SigmaRegistry};
use seqspace::vector::FinVector;
use seqspace::TreeCertificate;

/// Schedule table large enough for dependent sequences: the coding assigns
/// weight index 4 to the second pair, and the pair arity `m_4^2 + 1` must
/// stay within `n_4` while `m_4` clears the weight-smallness clause.
const PAIR_SCALE_M: [u64; 4] = [2, 4, 8, 274];
const PAIR_SCALE_N: [u64; 4] = [4, 18, 20, 75078];

#[derive(Parser)]
#[command(
    name = "seqspace",
    version,
    about = "Exact norming-set computations on finitely supported rational sequences",
    after_help = "Vectors are comma-separated index:value lists, e.g. \"1:1,2:1/2,4:-3\"."
)]
struct Cli {
    /// TOML config file (flags override file values)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Schedule mode: compact | conforming
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Generation cap for context building
    #[arg(long = "gen-cap", global = true)]
    gen_cap: Option<u32>,
    /// Support cap (largest coordinate index)
    #[arg(long = "supp-cap", global = true)]
    supp_cap: Option<u64>,
    /// Weight-index cap for context building
    #[arg(long = "weight-cap", global = true)]
    weight_cap: Option<u64>,
    /// Depth cap for bracketed upper bounds
    #[arg(long, global = true)]
    depth: Option<u32>,
    /// Seed for randomized searches
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Coding-registry file, persisted between invocations
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    /// Output format: json | text
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact norm in the pure mixed Tsirelson space, with certificate
    MtNorm { vector: String },
    /// Certified norm bracket over a generated context
    Norm {
        vector: String,
        /// Formation regime: gm | tsirelson
        #[arg(long, default_value = "gm")]
        regime: String,
    },
    /// Validate a certificate file and evaluate it on a vector
    Certify {
        vector: String,
        certificate: PathBuf,
    },
    /// Generate a context and run the closure checks
    GenK,
    /// Exact isometry check along the spread
    Isometry {
        /// Vector to check (omit to use --random)
        vector: Option<String>,
        /// Check this many seeded random vectors instead
        #[arg(long)]
        random: Option<usize>,
    },
    /// Build and verify a special sequence
    Special {
        #[arg(long, default_value_t = 1)]
        j: u64,
        /// Sequence length (even)
        #[arg(long, default_value_t = 4)]
        length: usize,
        /// Also build the k-fold lifted sequence
        #[arg(long)]
        lambda: Option<u32>,
    },
    /// Build and verify a dependent sequence
    Depseq {
        #[arg(long, default_value_t = 1)]
        j: u64,
    },
    /// Build the uncomplementedness witness pair
    Witness {
        #[arg(long, default_value_t = 1)]
        j: u64,
    },
    /// Inspect or export the coding registry
    Registry {
        #[command(subcommand)]
        action: RegistryAction,
    },
    /// Run the acceptance suite (exit 0 on pass, 1 on failure)
    Selftest {
        /// Shrink sampled corpora for a fast smoke run
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Subcommand)]
enum RegistryAction {
    /// List assignments in index order
    Inspect,
    /// Print the registry file bytes exactly
    Export,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::load(
        cli.config.as_deref(),
        cli.mode.as_deref(),
        cli.gen_cap,
        cli.supp_cap,
        cli.weight_cap,
        cli.depth,
        cli.seed,
        cli.registry.clone(),
        cli.format.as_deref(),
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command, &config) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Parse(_) => 2,
                Error::Capacity(_) | Error::Budget(_) | Error::ConformingInfeasible(_) => 3,
                _ => 1,
            })
        }
    }
}

fn emit(config: &RunConfig, value: &Value, text: impl FnOnce() -> String) {
    match config.format {
        OutputFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(value).expect("output json")
        ),
        OutputFormat::Text => println!("{}", text()),
    }
}

fn load_registry(config: &RunConfig) -> seqspace::Result<SigmaRegistry> {
    match &config.registry {
        Some(path) if path.exists() => SigmaRegistry::load(path),
        _ => Ok(SigmaRegistry::new(config.mode)),
    }
}

fn save_registry(config: &RunConfig, registry: &SigmaRegistry) -> seqspace::Result<()> {
    if let Some(path) = &config.registry {
        registry.save(path)?;
    }
    Ok(())
}

fn cert_value(cert: &TreeCertificate) -> Value {
    serde_json::from_str(&cert.to_canonical_json()).expect("certificate json")
}

/// Context recipe shared by `norm`, `gen-k` and `isometry`: generated per the
/// caps, with a demonstration special sequence (and its lift) registered
/// first in the gm regime so the special rules have something to act on.
fn build_context(config: &RunConfig, regime: Regime) -> seqspace::Result<(KContext, SigmaRegistry)> {
    let schedule = config.schedule()?;
    let caps = config.caps_with(2, 16, if regime == Regime::Gm { 2 } else { 3 });
    let mut ctx = KContext::new(schedule, regime, caps);
    let mut registry = load_registry(config)?;
    if regime == Regime::Gm {
        let model = build_j_special(&mut ctx, &mut registry, 1, None, 2)?;
        build_lambda_special(&mut ctx, model, 1)?;
    }
    generate_k(&mut ctx)?;
    Ok((ctx, registry))
}

fn saturation_name(s: Saturation) -> &'static str {
    match s {
        Saturation::Closed => "closed",
        Saturation::Budgeted => "budgeted",
        Saturation::OnDemand => "on-demand",
    }
}

fn run(command: Command, config: &RunConfig) -> seqspace::Result<ExitCode> {
    match command {
        Command::MtNorm { vector } => {
            let x = FinVector::parse(&vector)?;
            let sched = config.schedule()?;
            let result = mt::mt_norm_exact(&x, &sched)?;
            let out = json!({
                "command": "mt-norm",
                "vector": x.to_text(),
                "value": rational::to_canonical(&result.value),
                "effectiveJ": result.effective_j,
                "certificate": cert_value(&result.certificate),
            });
            emit(config, &out, || {
                format!(
                    "‖x‖ = {} (effective weight horizon {})\ncertificate: {}",
                    rational::to_canonical(&result.value),
                    result.effective_j,
                    result.certificate.to_canonical_json()
                )
            });
            Ok(ExitCode::SUCCESS)
        }
        Command::Norm { vector, regime } => {
            let x = FinVector::parse(&vector)?;
            let regime = parse_regime(&regime)?;
            let (ctx, _) = build_context(config, regime)?;
            let bracket = engine::gm_norm_bracket(&x, &ctx, config.depth_cap())?;
            let out = json!({
                "command": "norm",
                "vector": x.to_text(),
                "lower": rational::to_canonical(&bracket.lower),
                "upper": rational::to_canonical(&bracket.upper),
                "upperClamped": rational::to_canonical(&bracket.upper_clamped()),
                "depthCap": bracket.depth_cap,
                "caveats": bracket.caveats,
                "certificate": cert_value(&bracket.lower_cert),
                "contextMembers": ctx.len(),
            });
            emit(config, &out, || {
                format!(
                    "{} <= ‖x‖ <= {} (clamped {}, depth cap {})\ncaveats: {}\ncertificate: {}",
                    rational::to_canonical(&bracket.lower),
                    rational::to_canonical(&bracket.upper),
                    rational::to_canonical(&bracket.upper_clamped()),
                    bracket.depth_cap,
                    bracket.caveats.join("; "),
                    bracket.lower_cert.to_canonical_json()
                )
            });
            Ok(ExitCode::SUCCESS)
        }
        Command::Certify { vector, certificate } => {
            let x = FinVector::parse(&vector)?;
            let text = std::fs::read_to_string(&certificate)?;
            let cert = TreeCertificate::from_json(&text)?;
            let sched = config.schedule()?;
            let report = cert.verify_structure(&sched);
            if let Some(first) = report.violations.first() {
                let out = json!({
                    "command": "certify",
                    "verdict": format!("invalid: {} at {}", first.reason, first.path),
                    "violations": report.violations.iter()
                        .map(|v| format!("{} at {}", v.reason, v.path))
                        .collect::<Vec<_>>(),
                });
                emit(config, &out, || {
                    format!("invalid: {} at {}", first.reason, first.path)
                });
                return Ok(ExitCode::from(1));
            }
            let value = cert.evaluate(&x, &sched)?;
            let out = json!({
                "command": "certify",
                "verdict": "valid",
                "value": rational::to_canonical(&value),
            });
            emit(config, &out, || {
                format!("valid; evaluates to {}", rational::to_canonical(&value))
            });
            Ok(ExitCode::SUCCESS)
        }
        Command::GenK => {
            let (ctx, _) = build_context(config, Regime::Gm)?;
            let reports = [
                check_k1(&ctx),
                check_k2(&ctx),
                check_k3(&ctx),
                check_tree_property(&ctx),
            ];
            let failed = reports.iter().any(|r| !r.passed());
            let out = json!({
                "command": "gen-k",
                "members": ctx.len(),
                "weighted": ctx.weighted_records().count(),
                "sequences": ctx.sequences().len(),
                "saturation": saturation_name(ctx.saturation()),
                "caveats": ctx.caveats(),
                "checks": reports.iter().map(|r| json!({
                    "name": r.name,
                    "checked": r.checked,
                    "violations": r.violations,
                    "caveats": r.caveats,
                })).collect::<Vec<_>>(),
            });
            emit(config, &out, || {
                let mut s = format!(
                    "context: {} members ({} weighted, {} sequences), saturation {}\n",
                    ctx.len(),
                    ctx.weighted_records().count(),
                    ctx.sequences().len(),
                    saturation_name(ctx.saturation())
                );
                for r in &reports {
                    s.push_str(&format!(
                        "{}: {} ({} checked, {} violations)\n",
                        r.name,
                        if r.passed() { "PASS" } else { "FAIL" },
                        r.checked,
                        r.violations.len()
                    ));
                }
                s
            });
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Isometry { vector, random } => {
            let (ctx, _) = build_context(config, Regime::Gm)?;
            let vectors = match (vector, random) {
                (Some(v), _) => vec![FinVector::parse(&v)?],
                (None, Some(count)) => selftest::sample_vectors(config.seed, count, 8),
                (None, None) => {
                    return Err(Error::Parse("give a vector or --random N".into()));
                }
            };
            let mut entries = Vec::new();
            let mut failed = false;
            for x in &vectors {
                let report = engine::isometry_check(x, &ctx)?;
                failed |= !report.passed();
                entries.push(json!({
                    "vector": x.to_text(),
                    "value": rational::to_canonical(&report.value_x),
                    "valueSpread": rational::to_canonical(&report.value_sx),
                    "equal": report.value_x == report.value_sx,
                    "violations": report.violations,
                    "certificate": cert_value(&report.cert_x),
                    "certificateSpread": cert_value(&report.cert_sx),
                }));
            }
            let out = json!({
                "command": "isometry",
                "checked": vectors.len(),
                "passed": !failed,
                "results": entries,
            });
            emit(config, &out, || {
                format!(
                    "isometry: {} on {} vector(s)",
                    if failed { "FAIL" } else { "PASS" },
                    vectors.len()
                )
            });
            Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Special { j, length, lambda } => {
            let lock = config.registry.as_deref().map(RegistryLock::acquire).transpose()?;
            let schedule = config.schedule()?;
            let caps = config.caps_with(4, 1 << 20, 16);
            let mut ctx = KContext::new(schedule, Regime::Gm, caps);
            let mut registry = load_registry(config)?;
            let seq = build_j_special(&mut ctx, &mut registry, j, None, length)?;
            let check = verify_special(&ctx, &registry, seq)?;
            let mut bundle = vec![sequence_bundle(&ctx, seq, &check)];
            if let Some(k) = lambda {
                let lifted = build_lambda_special(&mut ctx, seq, k)?;
                let lifted_check = verify_special(&ctx, &registry, lifted)?;
                bundle.push(sequence_bundle(&ctx, lifted, &lifted_check));
            }
            save_registry(config, &registry)?;
            drop(lock);
            let passed = bundle
                .iter()
                .all(|b| b["verification"]["violations"].as_array().unwrap().is_empty());
            let out = json!({
                "command": "special",
                "j": j,
                "sequences": bundle,
                "passed": passed,
            });
            emit(config, &out, || {
                format!(
                    "special sequence (j={j}, length {length}): {}",
                    if passed { "verified" } else { "FAILED" }
                )
            });
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Depseq { j } => {
            let lock = config.registry.as_deref().map(RegistryLock::acquire).transpose()?;
            let (ctx, dep, registry) = build_dependent(config, j)?;
            save_registry(config, &registry)?;
            drop(lock);
            let out = dependent_bundle(&ctx, &dep);
            let passed = dep.passed();
            emit(config, &out, || {
                format!(
                    "dependent sequence (j={j}): {} ({} pairs, {} caveats)",
                    if passed { "verified" } else { "FAILED" },
                    dep.pairs.len(),
                    dep.caveats.len()
                )
            });
            Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Witness { j } => {
            let lock = config.registry.as_deref().map(RegistryLock::acquire).transpose()?;
            let (mut ctx, dep, registry) = build_dependent(config, j)?;
            if !dep.passed() {
                return Err(Error::Parse(format!(
                    "dependent sequence failed verification: {:?}",
                    dep.diagnostics
                )));
            }
            let witness = constructions::complementation_witness(&mut ctx, &dep)?;
            save_registry(config, &registry)?;
            drop(lock);
            let ok = witness.lower_y_plus_z >= rational::int(1);
            let out = json!({
                "command": "witness",
                "j": j,
                "dependent": dependent_bundle(&ctx, &dep),
                "lowerSum": rational::to_canonical(&witness.lower_y_plus_z),
                "bracketDifference": {
                    "lower": rational::to_canonical(&witness.bracket_y_minus_z.lower),
                    "upper": rational::to_canonical(&witness.bracket_y_minus_z.upper),
                    "upperClamped": rational::to_canonical(&witness.bracket_y_minus_z.upper_clamped()),
                },
                "ratio": rational::to_canonical(&witness.ratio),
                "referenceRatio": rational::to_canonical(&witness.reference_ratio),
                "caveats": witness.caveats,
                "certificate": cert_value(&ctx.to_certificate(witness.witness_record)?),
                "passed": ok,
            });
            emit(config, &out, || {
                format!(
                    "witness (j={j}): ‖y+z‖ >= {} {}; ratio {} vs reference {}",
                    rational::to_canonical(&witness.lower_y_plus_z),
                    if ok { "(assertion holds)" } else { "(ASSERTION FAILED)" },
                    rational::to_canonical(&witness.ratio),
                    rational::to_canonical(&witness.reference_ratio)
                )
            });
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Registry { action } => {
            let registry = load_registry(config)?;
            match action {
                RegistryAction::Inspect => {
                    let entries = registry.entries_by_index();
                    let out = json!({
                        "command": "registry",
                        "entries": entries.iter().map(|(v, k)| json!({
                            "sigma": v,
                            "sequence": k,
                        })).collect::<Vec<_>>(),
                    });
                    emit(config, &out, || {
                        entries
                            .iter()
                            .map(|(v, k)| format!("{v}\t{k}"))
                            .collect::<Vec<_>>()
                            .join("\n")
                    });
                }
                RegistryAction::Export => {
                    print!("{}", registry.to_file_string());
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest { quick } => {
            let report = selftest::run_all(quick);
            match config.format {
                OutputFormat::Json => println!("{}", report.to_json()),
                OutputFormat::Text => print!("{}", report.to_text()),
            }
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn parse_regime(text: &str) -> seqspace::Result<Regime> {
    match text {
        "gm" => Ok(Regime::Gm),
        "tsirelson" => Ok(Regime::Tsirelson),
        other => Err(Error::Parse(format!(
            "regime must be gm or tsirelson, got {other:?}"
        ))),
    }
}

fn sequence_bundle(
    ctx: &KContext,
    seq: seqspace::norming::SeqId,
    check: &seqspace::norming::SpecialCheck,
) -> Value {
    let sequence = ctx.sequence(seq).expect("registered sequence");
    json!({
        "j": sequence.j,
        "ks": sequence.ks,
        "members": sequence.members.iter().map(|id| {
            let r = ctx.record(*id);
            json!({
                "functional": r.functional.to_text(),
                "weightIndex": r.weight.map(|w| w.index),
            })
        }).collect::<Vec<_>>(),
        "verification": {
            "violations": check.violations,
            "caveats": check.caveats,
        },
    })
}

fn build_dependent(
    config: &RunConfig,
    j: u64,
) -> seqspace::Result<(KContext, constructions::DependentSequence, SigmaRegistry)> {
    if config.mode == ScheduleMode::Conforming {
        return Err(Error::ConformingInfeasible(
            "dependent sequences need the compact schedule".into(),
        ));
    }
    let schedule = config.schedule_with((&PAIR_SCALE_M, &PAIR_SCALE_N))?;
    let caps = config.caps_with(8, 1 << 50, 280);
    let mut ctx = KContext::new(schedule, Regime::Gm, caps);
    let mut registry = load_registry(config)?;
    let dep = constructions::build_dependent_sequence(
        &mut ctx,
        &mut registry,
        j,
        config.stability_cap(),
    )?;
    Ok((ctx, dep, registry))
}

fn dependent_bundle(ctx: &KContext, dep: &constructions::DependentSequence) -> Value {
    json!({
        "command": "depseq",
        "j": dep.j,
        "pairWeightIndices": dep.js,
        "spreadPowers": dep.ks,
        "rangeExponents": dep.ss,
        "pairs": dep.pairs.iter().enumerate().map(|(i, (x, f))| {
            let r = ctx.record(*f);
            json!({
                "position": i + 1,
                "supportSize": x.support_len(),
                "supportWindow": [x.min_support().unwrap(), x.max_support().unwrap()],
                "supNorm": rational::to_canonical(&x.norm_infty()),
                "functionalWeightIndex": r.weight.map(|w| w.index),
                "functionalKey": canonical_serialize_functional(&r.functional)
                    .chars().take(60).collect::<String>(),
            })
        }).collect::<Vec<_>>(),
        "caveats": dep.caveats,
        "diagnostics": dep.diagnostics,
        "passed": dep.passed(),
    })
}
