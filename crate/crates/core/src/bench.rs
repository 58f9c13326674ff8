//! Replicated PSO experiments and their efficacy/efficiency summaries.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criteria::{relative_efficiency, Criterion, CriterionKind, CriterionValue};
use crate::error::{Error, Result};
use crate::model::num_params;
use crate::pso::{self, PsoConfig, RunResult, Topology};

/// Slack, in efficiency percent, when deciding whether a run matches its reference.
pub const SUCCESS_SLACK_PERCENT: f64 = 1e-6;

pub const HIGH_EFFICIENCY_PERCENT: f64 = 95.0;

pub const PAPER_REPLICATES: usize = 140;
pub const PAPER_SWARM_SIZES: [usize; 3] = [50, 150, 500];
pub const DESK_REPLICATES: usize = 20;
pub const DESK_SWARM_SIZES: [usize; 2] = [50, 150];

/// The 21 `(K, N)` design scenarios: K=1 with N in 3..=9, K=2 with N in
/// 6..=12, K=3 with N in 10..=16.
pub fn paper_grid() -> Vec<(usize, usize)> {
    let mut grid = Vec::with_capacity(21);
    for (k, lo) in [(1, 3), (2, 6), (3, 10)] {
        grid.extend((lo..lo + 7).map(|n| (k, n)));
    }
    grid
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub factors: usize,
    pub points: usize,
    pub criterion: CriterionKind,
    pub swarm_size: usize,
    pub variant: Topology,
    pub replicates: usize,
    pub root_seed: u64,
}

impl Scenario {
    /// Identity of the scenario independent of replicate count and root seed.
    pub fn fingerprint(&self) -> String {
        format!(
            "K{}-N{}-{}-S{}-{}",
            self.factors,
            self.points,
            self.criterion,
            self.swarm_size,
            self.variant.tag()
        )
    }

    pub fn num_params(&self) -> Result<usize> {
        num_params(self.factors)
    }

    pub fn validate(&self) -> Result<()> {
        num_params(self.factors)?;
        if self.points == 0 {
            return Err(Error::EmptyDesign);
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicates must be at least 1".into()));
        }
        self.config(0, &PsoConfig::default())
            .validate(self.points * self.factors)
    }

    /// Seed of replicate `index`; see [`replicate_seed`].
    pub fn replicate_seed(&self, index: usize) -> u64 {
        replicate_seed(self.root_seed, &self.fingerprint(), index)
    }

    /// Engine configuration for one replicate, starting from `base`.
    pub fn config(&self, index: usize, base: &PsoConfig) -> PsoConfig {
        PsoConfig {
            swarm_size: self.swarm_size,
            topology: self.variant,
            seed: self.replicate_seed(index),
            ..base.clone()
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.fingerprint())
    }
}

/// First 8 bytes (little-endian) of
/// `SHA-256(root_seed as u64 LE || fingerprint UTF-8 || index as u64 LE)`.
pub fn replicate_seed(root_seed: u64, fingerprint: &str, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(root_seed.to_le_bytes());
    h.update(fingerprint.as_bytes());
    h.update((index as u64).to_le_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

fn run_one(scenario: &Scenario, index: usize, base: &PsoConfig) -> Result<RunResult> {
    let criterion = Criterion::new(scenario.criterion, scenario.factors)?;
    let config = scenario.config(index, base);
    pso::run(
        |d| criterion.evaluate(d),
        scenario.points,
        scenario.factors,
        &config,
    )
}

/// Runs every replicate of `scenario` sequentially with default engine settings.
pub fn run_replicates(scenario: &Scenario) -> Result<Vec<RunResult>> {
    run_replicates_with(scenario, &PsoConfig::default())
}

pub fn run_replicates_with(scenario: &Scenario, base: &PsoConfig) -> Result<Vec<RunResult>> {
    scenario.validate()?;
    (0..scenario.replicates)
        .map(|i| run_one(scenario, i, base))
        .collect()
}

/// Runs every replicate of every scenario on up to `workers` threads.
///
/// Output order is scenario order, then replicate index, whatever the scheduling.
pub fn run_batch(
    scenarios: &[Scenario],
    base: &PsoConfig,
    workers: usize,
) -> Result<Vec<Vec<RunResult>>> {
    for s in scenarios {
        s.validate()?;
    }
    let jobs: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| (0..sc.replicates).map(move |r| (s, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let flat: Vec<Result<RunResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(s, r)| run_one(&scenarios[s], r, base))
            .collect()
    });
    let mut out: Vec<Vec<RunResult>> = scenarios
        .iter()
        .map(|s| Vec::with_capacity(s.replicates))
        .collect();
    for ((s, _), res) in jobs.into_iter().zip(flat) {
        out[s].push(res?);
    }
    Ok(out)
}

fn efficiency_against(
    run: &RunResult,
    reference: CriterionValue,
    kind: CriterionKind,
    p: usize,
) -> Result<Option<f64>> {
    if run.best_fitness.is_singular() {
        return Ok(None);
    }
    relative_efficiency(kind, run.best_fitness, reference, p).map(Some)
}

fn proportion_at_least(
    results: &[RunResult],
    reference: Option<CriterionValue>,
    kind: CriterionKind,
    p: usize,
    threshold_percent: f64,
) -> Result<f64> {
    let reference = reference.ok_or_else(|| Error::MissingReference(kind.to_string()))?;
    if reference.is_singular() {
        return Err(Error::InvalidCriterionValue(
            "reference design is singular".into(),
        ));
    }
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut hits = 0usize;
    for r in results {
        if let Some(eff) = efficiency_against(r, reference, kind, p)? {
            if eff >= threshold_percent {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / results.len() as f64)
}

/// Fraction of runs at least as good as `reference` (relative efficiency at
/// least `100 - SUCCESS_SLACK_PERCENT`).
pub fn success_probability(
    results: &[RunResult],
    reference: Option<CriterionValue>,
    kind: CriterionKind,
    p: usize,
) -> Result<f64> {
    proportion_at_least(results, reference, kind, p, 100.0 - SUCCESS_SLACK_PERCENT)
}

/// Fraction of runs whose relative efficiency against `reference` is at least
/// `threshold_percent`.
pub fn prop_highly_efficient(
    results: &[RunResult],
    reference: Option<CriterionValue>,
    kind: CriterionKind,
    p: usize,
    threshold_percent: f64,
) -> Result<f64> {
    proportion_at_least(results, reference, kind, p, threshold_percent)
}

/// Median with the midpoint convention for even counts. `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 || v[m - 1] == v[m] {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    })
}

/// One reference design, usually from a published catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<Vec<Vec<f64>>>,
}

/// Reference criterion values keyed `"K-N-criterion"`, e.g. `"2-9-D"`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceCatalog {
    pub entries: BTreeMap<String, CatalogEntry>,
}

impl ReferenceCatalog {
    pub fn key(factors: usize, points: usize, kind: CriterionKind) -> String {
        format!("{factors}-{points}-{kind}")
    }

    pub fn insert(
        &mut self,
        factors: usize,
        points: usize,
        kind: CriterionKind,
        entry: CatalogEntry,
    ) {
        self.entries.insert(Self::key(factors, points, kind), entry);
    }

    pub fn get(&self, factors: usize, points: usize, kind: CriterionKind) -> Option<&CatalogEntry> {
        self.entries.get(&Self::key(factors, points, kind))
    }

    pub fn validate(&self) -> Result<()> {
        for (key, entry) in &self.entries {
            let mut parts = key.split('-');
            let ok = matches!(
                (parts.next(), parts.next(), parts.next(), parts.next()),
                (Some(k), Some(n), Some(c), None)
                    if k.parse::<usize>().is_ok_and(|k| k >= 1)
                        && n.parse::<usize>().is_ok_and(|n| n >= 1)
                        && c.parse::<CriterionKind>().is_ok()
            );
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "catalog key {key:?} is not of the form K-N-criterion"
                )));
            }
            if !(entry.value > 0.0 && entry.value.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "catalog entry {key:?} must have a positive finite value"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    Catalog,
    /// Best nonsingular value within the replicate set itself.
    BatchBest,
    /// No catalog entry and every run was singular.
    None,
}

impl ReferenceSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReferenceSource::Catalog => "catalog",
            ReferenceSource::BatchBest => "batch-best",
            ReferenceSource::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSummary {
    pub scenario: Scenario,
    pub reference_source: ReferenceSource,
    /// `+inf` when `reference_source` is `None`.
    pub reference_value: f64,
    pub best_value: f64,
    pub median_value: f64,
    pub success_probability: f64,
    pub prop_highly_efficient: f64,
    pub median_function_evaluations: f64,
    pub median_wall_time_seconds: f64,
}

/// Best nonsingular fitness in `results`, if any.
pub fn batch_best(results: &[RunResult]) -> Option<CriterionValue> {
    results
        .iter()
        .map(|r| r.best_fitness)
        .filter(|v| !v.is_singular())
        .min_by(|a, b| a.value().total_cmp(&b.value()))
}

pub fn summarize(
    results: &[RunResult],
    scenario: &Scenario,
    catalog: &ReferenceCatalog,
) -> Result<ReplicateSummary> {
    if results.is_empty() {
        return Err(Error::EmptyResults);
    }
    let kind = scenario.criterion;
    let p = scenario.num_params()?;
    let (source, reference) = match catalog.get(scenario.factors, scenario.points, kind) {
        Some(e) => (
            ReferenceSource::Catalog,
            Some(CriterionValue::finite(kind, e.value)),
        ),
        None => match batch_best(results) {
            Some(v) => (ReferenceSource::BatchBest, Some(v)),
            None => (ReferenceSource::None, None),
        },
    };
    let (success, high) = match reference {
        Some(r) => (
            success_probability(results, Some(r), kind, p)?,
            prop_highly_efficient(results, Some(r), kind, p, HIGH_EFFICIENCY_PERCENT)?,
        ),
        None => (0.0, 0.0),
    };
    let values: Vec<f64> = results.iter().map(|r| r.best_fitness.value()).collect();
    let fevals: Vec<f64> = results
        .iter()
        .map(|r| r.function_evaluations as f64)
        .collect();
    let times: Vec<f64> = results.iter().map(|r| r.wall_time_seconds).collect();
    let med = |v: &[f64]| median(v).expect("nonempty");
    Ok(ReplicateSummary {
        scenario: scenario.clone(),
        reference_source: source,
        reference_value: reference.map_or(f64::INFINITY, |r| r.value()),
        best_value: values.iter().copied().fold(f64::INFINITY, f64::min),
        median_value: med(&values),
        success_probability: success,
        prop_highly_efficient: high,
        median_function_evaluations: med(&fevals),
        median_wall_time_seconds: med(&times),
    })
}
