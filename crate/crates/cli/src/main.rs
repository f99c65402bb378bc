//! `lpres` — computations with finitely L-presented groups.
//!
//! Exit codes: 0 on success, 2 when the computation hit a configured
//! resource limit before producing a complete answer, 1 on error.

use std::io::Read;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use lpres::lcenum::{certified_index, IndexOptions, IndexOutcome};
use lpres::lowx::{low_index_subgroups, LowIndexOptions};
use lpres::lpfile;
use lpres::lpres::{preset_gamma, preset_grigorchuk, LPresentation};
use lpres::nq::{abelian_quotient, nilpotent_quotient};
use lpres::rs::{derived_series, RsError};
use lpres::zlat::AbelianInvariants;

#[derive(Parser)]
#[command(
    name = "lpres",
    version,
    about = "Nilpotent quotients, coset enumeration and subgroup presentations \
             for finitely L-presented groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit results as JSON with a stable schema instead of human tables
    #[arg(long, global = true)]
    json: bool,
    /// Cap the worker thread pool at T threads
    #[arg(long, global = true, value_name = "T")]
    threads: Option<usize>,
    /// Raise the conservative default resource limits for long runs
    #[arg(long, global = true)]
    long: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print a built-in presentation (grigorchuk, or gamma <d>)
    Preset {
        /// Which family: "grigorchuk" or "gamma"
        name: String,
        /// Degree d for the gamma family (d ≥ 3)
        d: Option<usize>,
        /// Write the presentation as an .lp document on stdout
        #[arg(long)]
        emit: bool,
    },
    /// Abelianization G/G′ of a presentation (file or '-' for stdin)
    Abelian {
        /// Path to an .lp file, or '-' for stdin
        file: String,
    },
    /// Lower-central sections of the class-C nilpotent quotient
    Nq {
        /// Path to an .lp file, or '-' for stdin
        file: String,
        /// Nilpotency class to compute up to
        #[arg(long)]
        class: u32,
    },
    /// Successive quotients of the Schur multiplier seen by nilpotent covers
    Dwyer {
        /// Path to an .lp file, or '-' for stdin
        file: String,
        /// Number of covering steps
        #[arg(long)]
        class: usize,
    },
    /// Certified index of a finitely generated subgroup
    Index {
        /// Path to an .lp file, or '-' for stdin
        file: String,
        /// Subgroup generators, comma-separated words (e.g. "a*b, [a,b]")
        #[arg(long)]
        subgroup: String,
        /// Largest truncation radius to try
        #[arg(long, value_name = "L")]
        max_radius: Option<usize>,
        /// Coset budget per enumeration attempt
        #[arg(long, value_name = "N")]
        max_cosets: Option<usize>,
    },
    /// Count (and certify) all subgroups of index up to N
    Lowindex {
        /// Path to an .lp file, or '-' for stdin
        file: String,
        /// Largest index to enumerate
        #[arg(long, value_name = "N")]
        max_index: usize,
        /// Report only normal subgroups
        #[arg(long)]
        normal: bool,
        /// Truncation radius used for pruning (certified result is the same
        /// for every radius)
        #[arg(long)]
        radius: Option<usize>,
    },
    /// Abelianizations along the derived series, with cumulative indices
    Derived {
        /// Path to an .lp file, or '-' for stdin
        file: String,
        /// Number of derived series levels (depth 1 = abelianization)
        #[arg(long)]
        depth: usize,
        /// Abort if a cumulative subgroup index would exceed this bound
        #[arg(long, value_name = "B")]
        max_index: Option<u128>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn read_presentation(file: &str) -> Result<LPresentation> {
    let text = if file == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading stdin")?;
        s
    } else {
        std::fs::read_to_string(file).with_context(|| format!("reading {file}"))?
    };
    lpfile::parse(&text).map_err(|e| anyhow!("{file}: {e}"))
}

/// Hash of the canonical rendering of the input presentation; identical
/// presentations hash identically however they were written.
fn input_hash(lp: &LPresentation) -> String {
    let mut h = Sha256::new();
    h.update(lpfile::print(lp).as_bytes());
    format!("sha256:{:x}", h.finalize())
}

fn invariants_json(inv: &AbelianInvariants) -> Value {
    json!({
        "torsion": inv.torsion.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "free_rank": inv.free_rank,
        "display": inv.to_string(),
    })
}

fn emit_json(
    command: &str,
    hash: &str,
    parameters: Value,
    results: Value,
    certificates: Value,
    started: Instant,
) {
    let envelope = json!({
        "command": command,
        "input-hash": hash,
        "parameters": parameters,
        "results": results,
        "certificates": certificates,
        "timing": {"seconds": started.elapsed().as_secs_f64()},
    });
    println!("{}", serde_json::to_string_pretty(&envelope).unwrap());
}

fn run(cli: &Cli) -> Result<u8> {
    let started = Instant::now();
    match &cli.command {
        Command::Preset { name, d, emit } => {
            let (label, lp) = match (name.as_str(), d) {
                ("grigorchuk", None) => ("grigorchuk".to_string(), preset_grigorchuk()),
                ("grigorchuk", Some(_)) => bail!("preset grigorchuk takes no degree"),
                ("gamma", Some(d)) => {
                    (format!("gamma {d}"), preset_gamma(*d).map_err(|e| anyhow!(e))?)
                }
                ("gamma", None) => bail!("preset gamma needs a degree, e.g. `preset gamma 3`"),
                (other, _) => bail!("unknown preset {other:?} (try grigorchuk or gamma <d>)"),
            };
            let text = lpfile::print(&lp);
            if *emit {
                print!("{text}");
                return Ok(0);
            }
            if cli.json {
                emit_json(
                    "preset",
                    &input_hash(&lp),
                    json!({"name": label}),
                    json!({
                        "generators": lp.alphabet().names(),
                        "fixed_relators": lp.fixed().len(),
                        "substitutions": lp.endo_names(),
                        "iterated_relators": lp.iterated().len(),
                        "invariant": lp.is_invariant(),
                        "ascending": lp.is_ascending(),
                    }),
                    json!([]),
                    started,
                );
            } else {
                println!(
                    "{label}: {} generators, {} fixed relators, {} substitution(s), \
                     {} iterated relators{}{}",
                    lp.rank(),
                    lp.fixed().len(),
                    lp.endomorphisms().len(),
                    lp.iterated().len(),
                    if lp.is_ascending() { ", ascending" } else { "" },
                    if lp.is_invariant() { ", invariant" } else { "" },
                );
                println!("use --emit to print the .lp document");
            }
            Ok(0)
        }

        Command::Abelian { file } => {
            let lp = read_presentation(file)?;
            let inv = abelian_quotient(&lp)?;
            if cli.json {
                emit_json(
                    "abelian",
                    &input_hash(&lp),
                    json!({"file": file}),
                    json!({
                        "abelianization": invariants_json(&inv),
                        "order": inv.order().map(|o| o.to_string()),
                    }),
                    json!([{"claim": "abelianization", "status": "certified"}]),
                    started,
                );
            } else {
                let torsion: Vec<String> =
                    inv.torsion.iter().map(|d| d.to_string()).collect();
                println!("abelianization: {inv} (certified)");
                println!(
                    "torsion [{}], free rank {}{}",
                    torsion.join(", "),
                    inv.free_rank,
                    match inv.order() {
                        Some(o) => format!(", order {o}"),
                        None => ", infinite".to_string(),
                    }
                );
            }
            Ok(0)
        }

        Command::Nq { file, class } => {
            let lp = read_presentation(file)?;
            let q = nilpotent_quotient(&lp, *class)?;
            if cli.json {
                emit_json(
                    "nq",
                    &input_hash(&lp),
                    json!({"file": file, "class": class}),
                    json!({
                        "class": q.class,
                        "stabilized": q.stabilized,
                        "sections": q.sections.iter().map(invariants_json).collect::<Vec<_>>(),
                    }),
                    json!([{"claim": "lower-central sections", "status": "certified"}]),
                    started,
                );
            } else {
                println!(
                    "nilpotent quotient of class {}{} (sections certified)",
                    q.class,
                    if q.stabilized {
                        " — maximal: the tower stabilized"
                    } else {
                        ""
                    }
                );
                for (k, s) in q.sections.iter().enumerate() {
                    println!("gamma_{}/gamma_{}: {s}", k + 1, k + 2);
                }
            }
            Ok(0)
        }

        Command::Dwyer { file, class } => {
            let lp = read_presentation(file)?;
            let terms = lpres::dwyer::dwyer_series(&lp, *class)?;
            if cli.json {
                emit_json(
                    "dwyer",
                    &input_hash(&lp),
                    json!({"file": file, "class": class}),
                    json!({
                        "terms": terms.iter().map(invariants_json).collect::<Vec<_>>(),
                    }),
                    json!([{"claim": "multiplier quotients", "status": "certified"}]),
                    started,
                );
            } else {
                println!("multiplier quotients, {} step(s) (certified)", terms.len());
                for (k, t) in terms.iter().enumerate() {
                    println!("step {}: {t}", k + 1);
                }
            }
            Ok(0)
        }

        Command::Index { file, subgroup, max_radius, max_cosets } => {
            let lp = read_presentation(file)?;
            let gens = lpfile::parse_word_list(lp.alphabet(), subgroup)
                .map_err(|e| anyhow!("--subgroup: {e}"))?;
            let mut opts = IndexOptions::default();
            if cli.long {
                opts.max_radius = 12;
                opts.max_cosets = 20_000_000;
            }
            if let Some(r) = max_radius {
                opts.max_radius = *r;
            }
            if let Some(n) = max_cosets {
                opts.max_cosets = *n;
            }
            match certified_index(&lp, &gens, &opts)? {
                IndexOutcome::Certified(cert) => {
                    if cli.json {
                        emit_json(
                            "index",
                            &input_hash(&lp),
                            json!({
                                "file": file,
                                "subgroup": subgroup,
                                "max_radius": opts.max_radius,
                                "max_cosets": opts.max_cosets,
                            }),
                            json!({"index": cert.index}),
                            json!([{
                                "claim": "index",
                                "status": "certified",
                                "radius": cert.radius,
                                "orbit_size": cert.orbit_size,
                            }]),
                            started,
                        );
                    } else {
                        println!(
                            "index {} (certified at radius {}, closure orbit {})",
                            cert.index, cert.radius, cert.orbit_size
                        );
                    }
                    Ok(0)
                }
                IndexOutcome::Unresolved => {
                    if cli.json {
                        emit_json(
                            "index",
                            &input_hash(&lp),
                            json!({
                                "file": file,
                                "subgroup": subgroup,
                                "max_radius": opts.max_radius,
                                "max_cosets": opts.max_cosets,
                            }),
                            json!({"index": null}),
                            json!([{
                                "claim": "index",
                                "status": "unresolved within limits",
                            }]),
                            started,
                        );
                    } else {
                        println!(
                            "unresolved: no certificate within radius {} and {} cosets \
                             (the index may be infinite or the limits too small)",
                            opts.max_radius, opts.max_cosets
                        );
                    }
                    Ok(2)
                }
            }
        }

        Command::Lowindex { file, max_index, normal, radius } => {
            let lp = read_presentation(file)?;
            let mut opts = LowIndexOptions::default();
            if let Some(r) = radius {
                opts.radius = *r;
            }
            let mut tiers = Vec::new();
            for n in 1..=*max_index {
                let tables = low_index_subgroups(&lp, n, &opts)?;
                let all = tables.len();
                let nrm = tables.iter().filter(|t| t.is_normal()).count();
                tiers.push((n, all, nrm));
            }
            if cli.json {
                emit_json(
                    "lowindex",
                    &input_hash(&lp),
                    json!({
                        "file": file,
                        "max_index": max_index,
                        "normal": normal,
                        "radius": opts.radius,
                    }),
                    json!({
                        "tiers": tiers.iter().map(|(n, all, nrm)| json!({
                            "index": n,
                            "subgroups": all,
                            "normal": nrm,
                        })).collect::<Vec<_>>(),
                    }),
                    json!([{"claim": "subgroup counts", "status": "certified"}]),
                    started,
                );
            } else {
                let parts: Vec<String> = tiers
                    .iter()
                    .map(|(n, all, nrm)| {
                        if *normal {
                            format!("index {n}: {nrm}")
                        } else {
                            format!("index {n}: {all}")
                        }
                    })
                    .collect();
                println!("{} (certified)", parts.join(", "));
                if !*normal {
                    let nparts: Vec<String> = tiers
                        .iter()
                        .map(|(n, _, nrm)| format!("index {n}: {nrm}"))
                        .collect();
                    println!("normal subgroups: {}", nparts.join(", "));
                }
            }
            Ok(0)
        }

        Command::Derived { file, depth, max_index } => {
            let lp = read_presentation(file)?;
            let bound = max_index.unwrap_or(if cli.long { 1 << 40 } else { 1 << 20 });
            match derived_series(&lp, *depth, bound) {
                Ok(series) => {
                    if cli.json {
                        emit_json(
                            "derived",
                            &input_hash(&lp),
                            json!({"file": file, "depth": depth, "max_index": bound.to_string()}),
                            json!({
                                "sections": series.sections.iter().map(invariants_json)
                                    .collect::<Vec<_>>(),
                                "indices": series.indices.iter().map(|i| i.to_string())
                                    .collect::<Vec<_>>(),
                            }),
                            json!([{"claim": "derived sections", "status": "certified"}]),
                            started,
                        );
                    } else {
                        println!(
                            "derived series, {} level(s) (sections certified)",
                            series.sections.len()
                        );
                        for (k, s) in series.sections.iter().enumerate() {
                            print!("G^({k}) / G^({}): {s}", k + 1);
                            if k < series.indices.len() {
                                print!("   [G : G^({})] = {}", k + 1, series.indices[k]);
                            }
                            println!();
                        }
                    }
                    Ok(0)
                }
                Err(RsError::IndexBound { bound }) => {
                    eprintln!(
                        "stopped: cumulative index would exceed {bound} \
                         (raise with --max-index or --long)"
                    );
                    Ok(2)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}
