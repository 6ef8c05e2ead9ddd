use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use mcdc_forge::bench::{
    comparison_stats, run_campaign, run_trial, trial_seed, write_csv, CampaignConfig, Mode,
};
use mcdc_forge::cbr::Repository;
use mcdc_forge::mcdc::{reformulate, McdcVariant};
use mcdc_forge::model::{load_model, save_configuration, ClassModel};
use mcdc_forge::ocl::{parse, OclConstraint};
use mcdc_forge::ranges::reduce;
use mcdc_forge::search::SearchStatus;

/// Generate MC/DC-targeted test data from a class model and its constraints.
#[derive(Parser)]
#[command(name = "mcdc-forge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rewrite every constraint into its MC/DC variants and emit them as JSON.
    Reformulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the MC/DC variants of one constraint into object configurations.
    ///
    /// Exit code: 0 when everything solved, 3 when a conflict is suspected,
    /// 2 when the budget ran out.
    Solve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        /// Constraint id (as labelled in the constraint file).
        #[arg(long)]
        constraint: String,
        /// Single combination label such as TTF; all variants when omitted.
        #[arg(long)]
        combination: Option<String>,
        #[arg(long, default_value = "avmrc", value_parser = Mode::from_str)]
        mode: Mode,
        #[arg(long, default_value_t = 2000)]
        budget: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Scaling factor for range reduction.
        #[arg(long, default_value_t = 1)]
        sf: u32,
        /// Write the per-iteration fitness series as CSV (single variant only).
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Persistent solution repository, read before and written after.
        #[arg(long)]
        repo: Option<PathBuf>,
        /// Dump the reduced ranges per variant as JSON.
        #[arg(long)]
        dump_ranges: Option<PathBuf>,
        /// Write the solved configuration as JSON (single variant only).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        collection_cap: usize,
        #[arg(long, default_value_t = 0.01)]
        real_precision: f64,
    },
    /// Run repeated solving trials per variant per mode and compare modes.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        /// Comma-separated subset of avmo,avmc,avmr,avmrc,rs.
        #[arg(long, default_value = "avmo,avmc,avmr,avmrc,rs")]
        modes: String,
        #[arg(long, default_value_t = 30)]
        reps: u32,
        #[arg(long, default_value_t = 2000)]
        budget: u64,
        #[arg(long, default_value_t = 42)]
        base_seed: u64,
        #[arg(long, default_value_t = 1)]
        sf: u32,
        /// Trial records CSV.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Pairwise comparison statistics JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        collection_cap: usize,
        #[arg(long, default_value_t = 0.01)]
        real_precision: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn load_inputs(model: &Path, constraints: &Path) -> Result<(ClassModel, Vec<OclConstraint>)> {
    let model = load_model(model).with_context(|| format!("loading model {}", model.display()))?;
    let text = std::fs::read_to_string(constraints)
        .with_context(|| format!("reading constraints {}", constraints.display()))?;
    let constraints = parse(&text, &model).context("parsing constraints")?;
    Ok((model, constraints))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Reformulate {
            model,
            constraints,
            out,
        } => {
            let (model, constraints) = load_inputs(&model, &constraints)?;
            let _ = &model;
            let mut entries = Vec::new();
            for constraint in &constraints {
                let variants = reformulate(constraint)
                    .with_context(|| format!("reformulating {}", constraint.id))?;
                for variant in variants {
                    entries.push(serde_json::json!({
                        "origin": variant.origin,
                        "combination": variant.combo_label(),
                        "ocl": variant.render(),
                        "groups": variant.dependent_groups,
                    }));
                }
            }
            let text = serde_json::to_string_pretty(&entries)?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Solve {
            model,
            constraints,
            constraint,
            combination,
            mode,
            budget,
            seed,
            sf,
            trace,
            repo,
            dump_ranges,
            out,
            collection_cap,
            real_precision,
        } => {
            let (model, constraints) = load_inputs(&model, &constraints)?;
            let target = constraints
                .iter()
                .find(|c| c.id == constraint)
                .ok_or_else(|| anyhow!("no constraint labelled '{constraint}'"))?;
            let mut variants =
                reformulate(target).with_context(|| format!("reformulating {}", target.id))?;
            if let Some(label) = &combination {
                variants.retain(|v| &v.combo_label() == label);
                if variants.is_empty() {
                    bail!("constraint '{constraint}' has no combination '{label}'");
                }
            }
            let single = variants.len() == 1;
            if (trace.is_some() || out.is_some()) && !single {
                bail!("--trace and --out need a single variant; pass --combination");
            }

            let config = CampaignConfig {
                budget,
                sf,
                collection_cap,
                real_precision,
                ..Default::default()
            };

            // The repository persists across invocations when requested.
            let all_variants: Vec<McdcVariant> = constraints
                .iter()
                .filter_map(|c| reformulate(c).ok())
                .flatten()
                .collect();
            let mut repository = match &repo {
                Some(path) if path.exists() => {
                    let (loaded, skipped) = Repository::load(path, &model, &all_variants)
                        .with_context(|| format!("loading repository {}", path.display()))?;
                    if skipped > 0 {
                        eprintln!("repository: skipped {skipped} entries for unknown variants");
                    }
                    loaded
                }
                _ => Repository::new(),
            };

            if let Some(path) = &dump_ranges {
                let dumps: Vec<serde_json::Value> = variants
                    .iter()
                    .map(|v| {
                        let rng_seed = if single {
                            seed
                        } else {
                            trial_seed(seed, &v.id(), mode, 0)
                        };
                        let map = reduce(v, sf, rng_seed)?;
                        Ok(serde_json::json!({ "variant": v.id(), "ranges": map }))
                    })
                    .collect::<Result<_>>()?;
                std::fs::write(path, serde_json::to_string_pretty(&dumps)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }

            let mut worst = SearchStatus::Solved;
            for variant in &variants {
                let rng_seed = if single {
                    seed
                } else {
                    trial_seed(seed, &variant.id(), mode, 0)
                };
                let result = run_trial(
                    &model,
                    variant,
                    mode,
                    &config,
                    rng_seed,
                    &mut repository,
                    trace.is_some(),
                );
                println!(
                    "{} {} in {} iterations ({:.1} ms)",
                    variant.id(),
                    result.status,
                    result.iterations,
                    result.elapsed.as_secs_f64() * 1000.0
                );
                if let (Some(path), Some(series)) = (&trace, &result.trace) {
                    let mut text = String::from("iteration,fitness\n");
                    for (i, fit) in series.iter().enumerate() {
                        text.push_str(&format!("{},{}\n", i + 1, fit));
                    }
                    std::fs::write(path, text)
                        .with_context(|| format!("writing {}", path.display()))?;
                }
                if result.status == SearchStatus::Solved {
                    if let Some(path) = &out {
                        save_configuration(&result.cfg, path)
                            .with_context(|| format!("writing {}", path.display()))?;
                    }
                }
                worst = match (worst, result.status) {
                    (_, SearchStatus::ConflictSuspected) | (SearchStatus::ConflictSuspected, _) => {
                        SearchStatus::ConflictSuspected
                    }
                    (_, SearchStatus::BudgetExhausted) | (SearchStatus::BudgetExhausted, _) => {
                        SearchStatus::BudgetExhausted
                    }
                    _ => SearchStatus::Solved,
                };
            }
            if let Some(path) = &repo {
                repository
                    .save(path)
                    .with_context(|| format!("saving repository {}", path.display()))?;
            }
            Ok(match worst {
                SearchStatus::Solved => ExitCode::SUCCESS,
                SearchStatus::BudgetExhausted => ExitCode::from(2),
                SearchStatus::ConflictSuspected => ExitCode::from(3),
            })
        }

        Command::Bench {
            model,
            constraints,
            modes,
            reps,
            budget,
            base_seed,
            sf,
            out,
            stats,
            collection_cap,
            real_precision,
        } => {
            let (model, constraints) = load_inputs(&model, &constraints)?;
            let modes = modes
                .split(',')
                .map(|m| Mode::from_str(m.trim()).map_err(|e| anyhow!(e)))
                .collect::<Result<Vec<Mode>>>()?;
            if modes.is_empty() {
                bail!("at least one mode is required");
            }
            let config = CampaignConfig {
                modes: modes.clone(),
                reps,
                budget,
                base_seed,
                sf,
                collection_cap,
                real_precision,
            };
            let outcome = run_campaign(&model, &constraints, &config);
            for (id, reason) in &outcome.skipped {
                eprintln!("skipped {id}: {reason}");
            }
            std::fs::write(&out, write_csv(&outcome.records))
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = &stats {
                let summary = comparison_stats(&outcome.records, &modes);
                std::fs::write(path, serde_json::to_string_pretty(&summary)?)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            // One console line per mode: median per-variant success rate.
            let mut variant_ids: Vec<(String, String)> = Vec::new();
            for r in &outcome.records {
                let key = (r.constraint_id.clone(), r.combination.clone());
                if !variant_ids.contains(&key) {
                    variant_ids.push(key);
                }
            }
            for &mode in &modes {
                let mut rates: Vec<f64> = variant_ids
                    .iter()
                    .map(|(id, combo)| {
                        mcdc_forge::bench::success_rate(&outcome.records, id, combo, mode)
                    })
                    .collect();
                rates.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let median = if rates.is_empty() {
                    0.0
                } else {
                    rates[(rates.len() - 1) / 2]
                };
                println!(
                    "{mode}: median success rate {:.2} over {} variants x {reps} reps",
                    median,
                    rates.len()
                );
            }
            println!("trial records: {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
