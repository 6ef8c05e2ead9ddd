//! Repository of solved variants and seed selection by predicate similarity.
//!
//! A stored solution is the triple (variant id, predicate clause list,
//! solution data). Similarity between two predicates is the count of
//! positionally identical clauses; among the most similar entries the one
//! whose data scores the lowest fitness on the target becomes the seed
//! candidate, and it is used only when strictly fitter than a freshly
//! sampled random configuration.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fitness::{evaluate, EvalCtx};
use crate::mcdc::McdcVariant;
use crate::model::{load_configuration_str, ClassModel, ModelError, ObjectConfiguration};
use crate::ocl::{parse_expr_str, render_expr, OclExpr, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub struct RepositoryEntry {
    pub constraint_id: String,
    pub context: String,
    pub predicate: Vec<OclExpr>,
    pub data: ObjectConfiguration,
}

#[derive(Debug, Default)]
pub struct Repository {
    entries: Vec<RepositoryEntry>,
}

#[derive(Debug)]
pub enum CbrError {
    UnsolvedEntry {
        constraint_id: String,
        fitness: f64,
    },
    Io {
        path: String,
        source: std::io::Error,
    },
    Format(String),
}

impl fmt::Display for CbrError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CbrError::UnsolvedEntry {
                constraint_id,
                fitness,
            } => {
                write!(
                    f,
                    "entry '{constraint_id}' does not solve its predicate (fitness {fitness})"
                )
            }
            CbrError::Io { path, source } => write!(f, "{path}: {source}"),
            CbrError::Format(msg) => write!(f, "repository file: {msg}"),
        }
    }
}

impl std::error::Error for CbrError {}

/// Count of positionally identical clauses, compared up to the shorter
/// predicate; a clause is identical when its normalized syntax tree is.
pub fn similarity(target: &[OclExpr], stored: &[OclExpr]) -> usize {
    target.iter().zip(stored).filter(|(t, s)| t == s).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    /// Index of the winning repository entry.
    Stored(usize),
    Random,
}

impl Repository {
    pub fn new() -> Self {
        Repository::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[RepositoryEntry] {
        &self.entries
    }

    pub fn get(&self, constraint_id: &str) -> Option<&RepositoryEntry> {
        self.entries
            .iter()
            .find(|e| e.constraint_id == constraint_id)
    }

    /// Append a solved entry. The data is re-verified against the entry's
    /// own predicate and rejected unless its fitness is zero.
    pub fn store(&mut self, entry: RepositoryEntry, model: &ClassModel) -> Result<(), CbrError> {
        let conjunction = entry
            .predicate
            .iter()
            .cloned()
            .reduce(OclExpr::and)
            .unwrap_or(OclExpr::Lit(crate::model::Value::Bool(true)));
        let ctx = EvalCtx::new(model, &entry.context, &entry.data);
        let fitness = evaluate(&conjunction, &ctx);
        if !fitness.solved {
            return Err(CbrError::UnsolvedEntry {
                constraint_id: entry.constraint_id,
                fitness: fitness.value,
            });
        }
        self.entries.push(entry);
        Ok(())
    }

    /// Pick the search seed for a target predicate: the fittest
    /// most-similar stored solution when it strictly beats the random
    /// candidate, otherwise the random candidate itself. A lone stored
    /// solution with no identical clause still competes on fitness.
    pub fn select_seed(
        &self,
        target: &[OclExpr],
        target_fitness: impl Fn(&ObjectConfiguration) -> f64,
        random_cfg: ObjectConfiguration,
    ) -> (ObjectConfiguration, SeedSource) {
        if self.entries.is_empty() {
            return (random_cfg, SeedSource::Random);
        }
        let best_similarity = self
            .entries
            .iter()
            .map(|e| similarity(target, &e.predicate))
            .max()
            .unwrap_or(0);
        let mut closest: Option<(usize, f64)> = None;
        for (index, entry) in self.entries.iter().enumerate() {
            if similarity(target, &entry.predicate) != best_similarity {
                continue;
            }
            let fitness = target_fitness(&entry.data);
            // Earliest stored entry wins ties.
            if closest.is_none_or(|(_, best)| fitness < best) {
                closest = Some((index, fitness));
            }
        }
        let (index, stored_fitness) = closest.expect("some entry has the best similarity");
        let random_fitness = target_fitness(&random_cfg);
        if stored_fitness < random_fitness {
            (self.entries[index].data.clone(), SeedSource::Stored(index))
        } else {
            (random_cfg, SeedSource::Random)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CbrError> {
        let path = path.as_ref();
        let raw: Vec<RawEntry> = self
            .entries
            .iter()
            .map(|e| RawEntry {
                constraint_id: e.constraint_id.clone(),
                predicate: e.predicate.iter().map(render_expr).collect(),
                data: serde_json::to_value(&e.data).expect("configuration serializes"),
            })
            .collect();
        let text = serde_json::to_string_pretty(&raw).expect("entries serialize");
        std::fs::write(path, text).map_err(|source| CbrError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// Load entries whose constraint id matches a known variant; entries
    /// for unknown variants are skipped and counted.
    pub fn load(
        path: impl AsRef<Path>,
        model: &ClassModel,
        variants: &[McdcVariant],
    ) -> Result<(Repository, usize), CbrError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CbrError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: Vec<RawEntry> =
            serde_json::from_str(&text).map_err(|e| CbrError::Format(e.to_string()))?;
        let mut repo = Repository::new();
        let mut skipped = 0;
        for entry in raw {
            let Some(variant) = variants.iter().find(|v| v.id() == entry.constraint_id) else {
                skipped += 1;
                continue;
            };
            let predicate = entry
                .predicate
                .iter()
                .map(|text| parse_expr_str(text, model, &variant.context, variant.params()))
                .collect::<Result<Vec<_>, ParseError>>()
                .map_err(|e| CbrError::Format(e.to_string()))?;
            let data_text = entry.data.to_string();
            let data = load_configuration_str(model, &data_text)
                .map_err(|e: ModelError| CbrError::Format(e.to_string()))?;
            repo.store(
                RepositoryEntry {
                    constraint_id: entry.constraint_id,
                    context: variant.context.clone(),
                    predicate,
                    data,
                },
                model,
            )?;
        }
        Ok((repo, skipped))
    }
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    constraint_id: String,
    predicate: Vec<String>,
    data: serde_json::Value,
}
