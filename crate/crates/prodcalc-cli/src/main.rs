//! Command line front end: `describe` a configured product space, compute
//! function-space `norm`s, or run the `verify` suites and emit report files.
//!
//! Exit codes: 0 on success, 1 when a non-informational check fails, 2 for
//! configuration errors (bad JSON, violated preconditions).

mod config;
mod suites;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use config::RunConfig;
use prodcalc::funcspaces::{space_norm, Family, Smoothness, SpaceKind};
use prodcalc::report::{to_csv, VerificationReport};
use std::path::Path;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "prodcalc",
    version,
    about = "Two-parameter spectral calculus toolkit"
)]
struct Cli {
    /// Path to the JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output format for console results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print model dimensions, doubling fits, and band radii.
    Describe,
    /// Compute the configured space norms of one function.
    Norm {
        /// "mode K L", "random N", or "file PATH" (JSON 2-D array).
        #[arg(long)]
        function: String,
        /// Index into the configured space list; all spaces when omitted.
        #[arg(long)]
        space: Option<usize>,
    },
    /// Run verification suites and write one CSV per suite plus a JSON
    /// summary under the output directory.
    Verify {
        /// geometry | calculus | lp | spaces | hardy | multipliers | all
        #[arg(long, default_value = "all")]
        suite: String,
        /// Output directory (overrides the configured one).
        #[arg(long)]
        out: Option<String>,
    },
}

fn main() -> ExitCode {
    // die quietly when the consumer closes the pipe (e.g. `... | head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut config = match cli.config.as_deref().map(RunConfig::from_path).transpose() {
        Ok(c) => c.unwrap_or_default(),
        Err(e) => {
            eprintln!("config error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let outcome = match &cli.command {
        Command::Describe => cmd_describe(&config, cli.format),
        Command::Norm { function, space } => cmd_norm(&config, cli.format, function, *space),
        Command::Verify { suite, out } => cmd_verify(&config, suite, out.as_deref()),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_describe(config: &RunConfig, format: Format) -> Result<ExitCode> {
    let ps = config.build_product()?;
    let describe_model = |m: &prodcalc::SpectralModel| {
        let (c0, d_est) = m.doubling_fit();
        serde_json::json!({
            "name": m.name,
            "dim_d": m.dim_d,
            "holder_alpha": m.holder_alpha,
            "n_basis": m.n_basis,
            "n_nodes": m.nodes.len(),
            "band_radius": m.band_radius(),
            "total_measure": m.total_measure(),
            "doubling_c0": c0,
            "doubling_d_est": d_est,
        })
    };
    let doc = serde_json::json!({
        "factor1": describe_model(&ps.m1),
        "factor2": describe_model(&ps.m2),
        "product": {
            "d_pair": ps.d_pair,
            "grid": [ps.m1.nodes.len(), ps.m2.nodes.len()],
            "total_measure": ps.total_measure(),
        },
    });
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&doc)?),
        Format::Csv => {
            for key in ["factor1", "factor2"] {
                let m = &doc[key];
                println!(
                    "{key}: {} d={} basis={} nodes={} band_radius={:.4} measure={:.6} doubling: c0={:.3} d_est={:.3}",
                    m["name"].as_str().unwrap(),
                    m["dim_d"],
                    m["n_basis"],
                    m["n_nodes"],
                    m["band_radius"].as_f64().unwrap(),
                    m["total_measure"].as_f64().unwrap(),
                    m["doubling_c0"].as_f64().unwrap(),
                    m["doubling_d_est"].as_f64().unwrap(),
                );
            }
            println!(
                "product: grid={}x{} d=({}, {}) measure={:.6}",
                ps.m1.nodes.len(),
                ps.m2.nodes.len(),
                ps.d_pair[0],
                ps.d_pair[1],
                ps.total_measure()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_norm(
    config: &RunConfig,
    format: Format,
    function: &str,
    space: Option<usize>,
) -> Result<ExitCode> {
    let ps = config.build_product()?;
    let cs = config.cutoffs.build();
    let (id, cf) = suites::resolve_function(&ps, function, config.seed)?;
    let specs: Vec<usize> = match space {
        Some(i) if i < config.spaces.len() => vec![i],
        Some(i) => anyhow::bail!(
            "space index {i} beyond the configured list ({})",
            config.spaces.len()
        ),
        None => (0..config.spaces.len()).collect(),
    };
    let mut rows = Vec::new();
    for i in specs {
        let params = config.spaces[i].to_params(&ps)?;
        let value = space_norm(&cs, &cf, &params).map_err(|e| anyhow::anyhow!("{e}"))?;
        rows.push((id.clone(), params, value));
    }
    match format {
        Format::Csv => {
            println!("function,family,kind,flavor,s1,s2,p,q,j1,j2,value");
            for (id, p, value) in &rows {
                let (s1, s2, flavor) = match p.s {
                    Smoothness::Mixed(s) => (s[0], s[1], "mixed"),
                    Smoothness::Ordinary(s) => (s, f64::NAN, "ordinary"),
                };
                println!(
                    "{id},{},{},{flavor},{s1},{s2},{},{},{},{},{value:.12e}",
                    family_tag(p.family),
                    kind_tag(p.kind),
                    p.p,
                    p.q,
                    p.j_max[0],
                    p.j_max[1],
                );
            }
        }
        Format::Json => {
            let docs: Vec<_> = rows
                .iter()
                .map(|(id, p, value)| {
                    serde_json::json!({
                        "function": id,
                        "family": family_tag(p.family),
                        "kind": kind_tag(p.kind),
                        "s": match p.s {
                            Smoothness::Mixed(s) => serde_json::json!(s),
                            Smoothness::Ordinary(s) => serde_json::json!(s),
                        },
                        "p": p.p,
                        "q": p.q,
                        "j_max": p.j_max,
                        "value": value,
                    })
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&docs)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn family_tag(f: Family) -> &'static str {
    match f {
        Family::Besov => "B",
        Family::TriebelLizorkin => "F",
    }
}

fn kind_tag(k: SpaceKind) -> &'static str {
    match k {
        SpaceKind::Classical => "classical",
        SpaceKind::Nonclassical => "nonclassical",
    }
}

fn cmd_verify(config: &RunConfig, suite: &str, out: Option<&str>) -> Result<ExitCode> {
    let toggles = [
        ("geometry", config.suites.geometry),
        ("calculus", config.suites.calculus),
        ("lp", config.suites.lp),
        ("spaces", config.suites.spaces),
        ("hardy", config.suites.hardy),
        ("multipliers", config.suites.multipliers),
    ];
    let selected: Vec<&str> = if suite == "all" {
        toggles
            .iter()
            .filter(|(_, on)| *on)
            .map(|(n, _)| *n)
            .collect()
    } else if suites::SUITE_NAMES.contains(&suite) {
        vec![suite]
    } else {
        anyhow::bail!(
            "unknown suite {suite:?} (expected one of {:?} or \"all\")",
            suites::SUITE_NAMES
        );
    };

    let out_dir = out.unwrap_or(&config.out_dir).to_string();
    std::fs::create_dir_all(&out_dir)?;
    let mut all_reports: Vec<(String, Vec<VerificationReport>)> = Vec::new();
    for name in &selected {
        let reports = suites::run_suite(name, config)?;
        for r in &reports {
            let status = if r.pass {
                "PASS"
            } else if r.informational {
                "info"
            } else {
                "FAIL"
            };
            println!(
                "[{status}] {name}/{} c={:.4e} [{:.2}s]",
                r.name, r.measured_constant, r.runtime_s
            );
        }
        std::fs::write(
            Path::new(&out_dir).join(format!("{name}.csv")),
            to_csv(&reports),
        )?;
        all_reports.push((name.to_string(), reports));
    }

    let failures: usize = all_reports
        .iter()
        .map(|(_, rs)| rs.iter().filter(|r| r.gating_failure()).count())
        .sum();
    let summary = serde_json::json!({
        "suites": all_reports
            .iter()
            .map(|(name, rs)| {
                serde_json::json!({
                    "suite": name,
                    "checks": rs.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
                    "failed": rs.iter().filter(|r| r.gating_failure()).count(),
                })
            })
            .collect::<Vec<_>>(),
        "gating_failures": failures,
        "seed": config.seed,
    });
    std::fs::write(
        Path::new(&out_dir).join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "{} suite(s), {failures} gating failure(s); reports under {out_dir}/",
        selected.len()
    );
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
