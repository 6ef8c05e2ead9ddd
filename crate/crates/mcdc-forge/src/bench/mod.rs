//! Benchmark harness: repeated solving trials per variant per solver mode,
//! with deterministic seed derivation and statistical comparisons.
//!
//! Modes:
//! - `avmo` — alternating-variable search from a uniformly random seed;
//! - `avmc` — the repository's closest previous solution competes with the
//!   random seed;
//! - `avmr` — the initial seed (and restarts) sample inside reduced ranges;
//! - `avmrc` — reduced-range sampling plus repository seed competition;
//! - `rs` — uniform random sampling.
//!
//! Trials parallelize across (mode, rep) cells. Within one cell the
//! constraints run in file order and variants in combination order, so the
//! repository for the reuse modes fills exactly as it would sequentially;
//! records are sorted afterwards, making output order schedule-independent.

mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::cbr::{Repository, RepositoryEntry};
use crate::hash::fnv1a64;
use crate::mcdc::{reformulate, McdcVariant};
use crate::model::{ClassModel, ObjectConfiguration};
use crate::ocl::OclConstraint;
use crate::ranges::reduce;
use crate::search::{avm_solve, random_solve, sample_configuration, SearchOptions, SearchStatus};

pub use stats::{fisher_exact_2x2, vargha_delaney_a12, wilcoxon_rank_sum, StatsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mode {
    Avmo,
    Avmc,
    Avmr,
    Avmrc,
    Rs,
}

pub const ALL_MODES: [Mode; 5] = [Mode::Avmo, Mode::Avmc, Mode::Avmr, Mode::Avmrc, Mode::Rs];

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Avmo => "avmo",
            Mode::Avmc => "avmc",
            Mode::Avmr => "avmr",
            Mode::Avmrc => "avmrc",
            Mode::Rs => "rs",
        }
    }

    fn uses_ranges(self) -> bool {
        matches!(self, Mode::Avmr | Mode::Avmrc)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avmo" => Ok(Mode::Avmo),
            "avmc" => Ok(Mode::Avmc),
            "avmr" => Ok(Mode::Avmr),
            "avmrc" => Ok(Mode::Avmrc),
            "rs" => Ok(Mode::Rs),
            other => Err(format!(
                "unknown mode '{other}' (expected avmo|avmc|avmr|avmrc|rs)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub constraint_id: String,
    pub combination: String,
    pub mode: Mode,
    pub rep: u32,
    pub status: SearchStatus,
    pub iterations: u64,
    pub elapsed_ms: f64,
    pub rng_seed: u64,
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub modes: Vec<Mode>,
    pub reps: u32,
    pub budget: u64,
    pub base_seed: u64,
    pub sf: u32,
    pub collection_cap: usize,
    pub real_precision: f64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            modes: ALL_MODES.to_vec(),
            reps: 30,
            budget: 2000,
            base_seed: 42,
            sf: 1,
            collection_cap: crate::model::DEFAULT_COLLECTION_CAP,
            real_precision: crate::model::DEFAULT_REAL_PRECISION,
        }
    }
}

#[derive(Debug)]
pub struct CampaignOutcome {
    pub records: Vec<TrialRecord>,
    /// Constraints or variants that could not be processed, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Derive the per-trial rng seed from the campaign base seed.
pub fn trial_seed(base_seed: u64, variant_id: &str, mode: Mode, rep: u32) -> u64 {
    fnv1a64(&[
        &base_seed.to_le_bytes(),
        variant_id.as_bytes(),
        mode.as_str().as_bytes(),
        &rep.to_le_bytes(),
    ])
}

/// Run the full trial grid. Reformulation failures skip the constraint
/// without aborting the campaign.
pub fn run_campaign(
    model: &ClassModel,
    constraints: &[OclConstraint],
    config: &CampaignConfig,
) -> CampaignOutcome {
    let mut skipped = Vec::new();
    let mut variants: Vec<McdcVariant> = Vec::new();
    for constraint in constraints {
        match reformulate(constraint) {
            Ok(list) => variants.extend(list),
            Err(err) => skipped.push((constraint.id.clone(), err.to_string())),
        }
    }

    let cells: Vec<(Mode, u32)> = config
        .modes
        .iter()
        .flat_map(|&mode| (0..config.reps).map(move |rep| (mode, rep)))
        .collect();

    let mut records: Vec<TrialRecord> = cells
        .par_iter()
        .flat_map(|&(mode, rep)| run_cell(model, &variants, config, mode, rep))
        .collect();

    let variant_order: BTreeMap<String, usize> = variants
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id(), i))
        .collect();
    let mode_order: BTreeMap<Mode, usize> = config
        .modes
        .iter()
        .enumerate()
        .map(|(i, &m)| (m, i))
        .collect();
    records.sort_by_key(|r| {
        (
            variant_order
                .get(&format!("{}:{}", r.constraint_id, r.combination))
                .copied()
                .unwrap_or(usize::MAX),
            mode_order.get(&r.mode).copied().unwrap_or(usize::MAX),
            r.rep,
        )
    });
    CampaignOutcome { records, skipped }
}

/// One (mode, rep) cell: every variant in order, sharing a repository per
/// context class when the mode reuses solutions.
fn run_cell(
    model: &ClassModel,
    variants: &[McdcVariant],
    config: &CampaignConfig,
    mode: Mode,
    rep: u32,
) -> Vec<TrialRecord> {
    let mut repos: BTreeMap<String, Repository> = BTreeMap::new();
    let mut records = Vec::with_capacity(variants.len());
    for variant in variants {
        let seed = trial_seed(config.base_seed, &variant.id(), mode, rep);
        let started = Instant::now();
        let repo = repos.entry(variant.context.clone()).or_default();
        let result = run_trial(model, variant, mode, config, seed, repo, false);
        records.push(TrialRecord {
            constraint_id: variant.origin.clone(),
            combination: variant.combo_label(),
            mode,
            rep,
            status: result.status,
            iterations: result.iterations,
            elapsed_ms: started.elapsed().as_secs_f64() * 1000.0,
            rng_seed: seed,
        });
    }
    records
}

/// Solve one variant under a mode. Reuse modes read the repository for the
/// seed and store the solution back on success; the others leave it alone.
pub fn run_trial(
    model: &ClassModel,
    variant: &McdcVariant,
    mode: Mode,
    config: &CampaignConfig,
    rng_seed: u64,
    repo: &mut Repository,
    trace: bool,
) -> crate::search::SearchResult {
    let mut opts = SearchOptions {
        budget: config.budget,
        rng_seed,
        ranges: None,
        trace,
        real_precision: config.real_precision,
        collection_cap: config.collection_cap,
    };
    if mode.uses_ranges() {
        match reduce(variant, config.sf, rng_seed) {
            Ok(map) => opts.ranges = Some(map),
            Err(err) => eprintln!(
                "range reduction failed for {}: {err}; using the default domain",
                variant.id()
            ),
        }
    }
    match mode {
        Mode::Rs => random_solve(model, variant, &opts),
        Mode::Avmo | Mode::Avmr => {
            let seed_cfg = initial_sample(model, variant, &opts, rng_seed);
            avm_solve(model, variant, &seed_cfg, &opts)
        }
        Mode::Avmc | Mode::Avmrc => {
            let random_cfg = initial_sample(model, variant, &opts, rng_seed);
            let problem = crate::search::SearchProblem::new(model, variant, &opts);
            let fitness = |cfg: &ObjectConfiguration| problem.fitness_of(&problem.encode(cfg));
            let (seed_cfg, _) = repo.select_seed(&variant.clauses, fitness, random_cfg);
            let result = avm_solve(model, variant, &seed_cfg, &opts);
            if result.status == SearchStatus::Solved {
                let entry = RepositoryEntry {
                    constraint_id: variant.id(),
                    context: variant.context.clone(),
                    predicate: variant.clauses.clone(),
                    data: result.cfg.clone(),
                };
                repo.store(entry, model).expect("solved result verifies");
            }
            result
        }
    }
}

fn initial_sample(
    model: &ClassModel,
    variant: &McdcVariant,
    opts: &SearchOptions,
    seed: u64,
) -> ObjectConfiguration {
    let sample_seed = fnv1a64(&[&seed.to_le_bytes(), b"initial-sample"]);
    sample_configuration(model, variant, opts.ranges.as_ref(), sample_seed, opts)
}

/// Fraction of repetitions that solved the given variant under a mode.
pub fn success_rate(
    records: &[TrialRecord],
    constraint_id: &str,
    combination: &str,
    mode: Mode,
) -> f64 {
    let trials: Vec<&TrialRecord> = records
        .iter()
        .filter(|r| {
            r.constraint_id == constraint_id && r.combination == combination && r.mode == mode
        })
        .collect();
    if trials.is_empty() {
        return 0.0;
    }
    let solved = trials
        .iter()
        .filter(|r| r.status == SearchStatus::Solved)
        .count();
    solved as f64 / trials.len() as f64
}

/// CSV rendering of the trial grid, one row per trial.
pub fn write_csv(records: &[TrialRecord]) -> String {
    let mut out =
        String::from("constraint_id,combination,mode,rep,status,iterations,elapsed_ms,rng_seed\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.3},{}\n",
            r.constraint_id,
            r.combination,
            r.mode,
            r.rep,
            r.status,
            r.iterations,
            r.elapsed_ms,
            r.rng_seed
        ));
    }
    out
}

// ── Pairwise comparison summaries ─────────────────────────────────────

#[derive(Debug, Clone, serde::Serialize)]
pub struct PairStats {
    pub mode_a: String,
    pub mode_b: String,
    pub reps: u64,
    pub solved_a: u64,
    pub solved_b: u64,
    pub fisher_p: f64,
    pub odds_ratio: f64,
    /// Rank-sum p-value over iteration counts; absent below five reps.
    pub wilcoxon_p: Option<f64>,
    pub a12_iterations: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct VariantStats {
    pub constraint_id: String,
    pub combination: String,
    pub pairs: Vec<PairStats>,
}

/// Per-variant pairwise mode comparisons over one campaign's records.
pub fn comparison_stats(records: &[TrialRecord], modes: &[Mode]) -> Vec<VariantStats> {
    let mut variants: Vec<(String, String)> = Vec::new();
    for r in records {
        let key = (r.constraint_id.clone(), r.combination.clone());
        if !variants.contains(&key) {
            variants.push(key);
        }
    }
    variants
        .iter()
        .map(|(constraint_id, combination)| {
            let of_mode = |mode: Mode| -> Vec<&TrialRecord> {
                records
                    .iter()
                    .filter(|r| {
                        &r.constraint_id == constraint_id
                            && &r.combination == combination
                            && r.mode == mode
                    })
                    .collect()
            };
            let mut pairs = Vec::new();
            for (i, &a) in modes.iter().enumerate() {
                for &b in &modes[i + 1..] {
                    let ra = of_mode(a);
                    let rb = of_mode(b);
                    if ra.is_empty() || rb.is_empty() {
                        continue;
                    }
                    let solved_a = ra
                        .iter()
                        .filter(|r| r.status == SearchStatus::Solved)
                        .count() as u64;
                    let solved_b = rb
                        .iter()
                        .filter(|r| r.status == SearchStatus::Solved)
                        .count() as u64;
                    let (fisher_p, odds_ratio) = fisher_exact_2x2(
                        solved_a,
                        ra.len() as u64 - solved_a,
                        solved_b,
                        rb.len() as u64 - solved_b,
                    );
                    let iters_a: Vec<f64> = ra.iter().map(|r| r.iterations as f64).collect();
                    let iters_b: Vec<f64> = rb.iter().map(|r| r.iterations as f64).collect();
                    pairs.push(PairStats {
                        mode_a: a.to_string(),
                        mode_b: b.to_string(),
                        reps: ra.len() as u64,
                        solved_a,
                        solved_b,
                        fisher_p,
                        odds_ratio,
                        wilcoxon_p: wilcoxon_rank_sum(&iters_a, &iters_b).ok(),
                        a12_iterations: vargha_delaney_a12(&iters_a, &iters_b),
                    });
                }
            }
            VariantStats {
                constraint_id: constraint_id.clone(),
                combination: combination.clone(),
                pairs,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_model_str;
    use crate::ocl::parse;

    fn gcs() -> ClassModel {
        load_model_str(include_str!("../../tests/data/gcs.model.json")).unwrap()
    }

    #[test]
    fn campaign_produces_the_full_trial_grid() {
        let model = gcs();
        let constraints = parse(
            "C2: context GCS inv: self.mission.waypoints>self.mission.MIN_WP_LIMIT\n\
             C4: context Route::optimize(in minDist : Integer, in maxDist : Integer) pre: self.distance>minDist",
            &model,
        )
        .unwrap();
        let config = CampaignConfig {
            reps: 2,
            budget: 300,
            ..Default::default()
        };
        let outcome = run_campaign(&model, &constraints, &config);
        assert!(outcome.skipped.is_empty());
        // 2 variants per constraint x 5 modes x 2 reps.
        assert_eq!(outcome.records.len(), 4 * 5 * 2);
        assert!(outcome.records.iter().all(|r| r.iterations <= 300));
        // Solver modes crack these easy constraints in every repetition.
        for mode in ALL_MODES {
            assert_eq!(success_rate(&outcome.records, "C2", "T", mode), 1.0);
        }
    }

    #[test]
    fn trivially_true_variant_solves_at_first_iteration_in_every_mode() {
        let model = gcs();
        let constraints = parse("T1: context GCS inv: true", &model).unwrap();
        let config = CampaignConfig {
            reps: 1,
            budget: 50,
            ..Default::default()
        };
        let outcome = run_campaign(&model, &constraints, &config);
        for record in outcome.records.iter().filter(|r| r.combination == "T") {
            assert_eq!(record.status, SearchStatus::Solved, "{}", record.mode);
            assert_eq!(record.iterations, 1);
        }
    }

    #[test]
    fn identical_base_seed_reproduces_records() {
        let model = gcs();
        let constraints = parse(include_str!("../../tests/data/gcs.ocl"), &model).unwrap();
        let config = CampaignConfig {
            reps: 2,
            budget: 200,
            ..Default::default()
        };
        let a = run_campaign(&model, &constraints[..4], &config);
        let b = run_campaign(&model, &constraints[..4], &config);
        let strip = |records: &[TrialRecord]| -> Vec<TrialRecord> {
            records
                .iter()
                .cloned()
                .map(|mut r| {
                    r.elapsed_ms = 0.0;
                    r
                })
                .collect()
        };
        assert_eq!(strip(&a.records), strip(&b.records));
    }

    #[test]
    fn success_rate_is_the_solved_fraction() {
        let record = |rep: u32, status: SearchStatus| TrialRecord {
            constraint_id: "C1".into(),
            combination: "TT".into(),
            mode: Mode::Avmo,
            rep,
            status,
            iterations: 1,
            elapsed_ms: 0.0,
            rng_seed: 0,
        };
        let mut records: Vec<TrialRecord> =
            (0..57).map(|i| record(i, SearchStatus::Solved)).collect();
        records.extend((57..100).map(|i| record(i, SearchStatus::BudgetExhausted)));
        assert_eq!(success_rate(&records, "C1", "TT", Mode::Avmo), 0.57);
        assert_eq!(success_rate(&records, "C1", "TT", Mode::Rs), 0.0);
        assert_eq!(
            success_rate(&records[..57], "C1", "TT", Mode::Avmo),
            1.0
        );
    }

    #[test]
    fn comparison_stats_cover_every_mode_pair() {
        let model = gcs();
        let constraints = parse(
            "C2: context GCS inv: self.mission.waypoints>self.mission.MIN_WP_LIMIT",
            &model,
        )
        .unwrap();
        let config = CampaignConfig {
            reps: 6,
            budget: 200,
            ..Default::default()
        };
        let outcome = run_campaign(&model, &constraints, &config);
        let stats = comparison_stats(&outcome.records, &config.modes);
        assert_eq!(stats.len(), 2);
        for variant in &stats {
            assert_eq!(variant.pairs.len(), 10);
            for pair in &variant.pairs {
                assert!((0.0..=1.0).contains(&pair.fisher_p));
                assert!((0.0..=1.0).contains(&pair.a12_iterations));
                assert_eq!(pair.reps, 6);
            }
        }
    }
}
