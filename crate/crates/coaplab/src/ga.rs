//! Wrapper feature selection: a genetic algorithm over fixed-cardinality
//! column masks, scored by stratified k-fold accuracy of a depth-capped
//! decision tree on the masked columns.
//!
//! Flow per generation: tournament selection (size 2), uniform
//! crossover with repair back to `k` set bits, per-bit swap mutation
//! that preserves cardinality, and elitism.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{stratified_kfold, tree_fit, tree_predict, ModelError, TreeConfig};
use crate::features::FeatureMask;
use crate::seed::derive_seed;
use crate::windows::Label;

#[derive(Debug, Error)]
pub enum GaError {
    #[error("target cardinality {k} exceeds {width} columns")]
    KTooLarge { k: usize, width: usize },
    #[error("population must hold at least two chromosomes")]
    PopulationTooSmall,
    #[error("elitism count {elite} must be below population size {pop}")]
    ElitismTooLarge { elite: usize, pop: usize },
    #[error("rate {0} outside [0, 1]")]
    BadRate(f64),
    #[error("fitness data is empty")]
    EmptyData,
    #[error("fitness data must contain both classes")]
    SingleClass,
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-set-bit swap probability.
    pub mutation_rate: f64,
    pub elitism_count: usize,
    /// Target feature count; every chromosome keeps exactly this many bits.
    pub k: usize,
    pub fitness_folds: usize,
    /// Depth cap of the fitness tree.
    pub fitness_tree_depth: usize,
    pub rng_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            generations: 30,
            crossover_rate: 0.9,
            mutation_rate: 0.02,
            elitism_count: 2,
            k: 16,
            fitness_folds: 3,
            fitness_tree_depth: 3,
            rng_seed: 0,
        }
    }
}

impl GaConfig {
    fn validate(&self, width: usize) -> Result<(), GaError> {
        if self.k > width || self.k == 0 {
            return Err(GaError::KTooLarge { k: self.k, width });
        }
        if self.population_size < 2 {
            return Err(GaError::PopulationTooSmall);
        }
        if self.elitism_count >= self.population_size {
            return Err(GaError::ElitismTooLarge {
                elite: self.elitism_count,
                pop: self.population_size,
            });
        }
        for rate in [self.crossover_rate, self.mutation_rate] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(GaError::BadRate(rate));
            }
        }
        Ok(())
    }
}

/// One candidate column subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub mask: FeatureMask,
    pub fitness: Option<f64>,
}

/// Draw `population_size` uniformly random k-subsets of `width` columns.
pub fn init_population(
    cfg: &GaConfig,
    width: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Chromosome>, GaError> {
    cfg.validate(width)?;
    Ok((0..cfg.population_size)
        .map(|_| {
            let picked: Vec<usize> = sample(rng, width, cfg.k).into_iter().collect();
            Chromosome { mask: FeatureMask::from_indices(width, &picked), fitness: None }
        })
        .collect())
}

fn masked_rows(x: &[Vec<f64>], mask: &FeatureMask) -> Vec<Vec<f64>> {
    x.iter()
        .map(|row| mask.indices().map(|i| row[i]).collect())
        .collect()
}

/// Fitness of a mask: mean stratified k-fold accuracy of the
/// depth-capped tree trained on the masked columns.
pub fn fitness(
    mask: &FeatureMask,
    x: &[Vec<f64>],
    y: &[Label],
    cfg: &GaConfig,
) -> Result<f64, GaError> {
    if x.is_empty() {
        return Err(GaError::EmptyData);
    }
    if y.iter().all(|l| *l == y[0]) {
        return Err(GaError::SingleClass);
    }
    let projected = masked_rows(x, mask);
    let folds = stratified_kfold(y, cfg.fitness_folds, derive_seed(cfg.rng_seed, "ga-folds"))?;
    let tree_cfg = TreeConfig { max_depth: cfg.fitness_tree_depth, min_samples_split: 2 };
    let mut total_correct = 0usize;
    let mut total_seen = 0usize;
    for (train_idx, test_idx) in folds {
        let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| projected[i].clone()).collect();
        let train_y: Vec<Label> = train_idx.iter().map(|&i| y[i]).collect();
        let model = tree_fit(&train_x, &train_y, &tree_cfg)?;
        for &i in &test_idx {
            if tree_predict(&model, &projected[i]) == y[i] {
                total_correct += 1;
            }
            total_seen += 1;
        }
    }
    Ok(total_correct as f64 / total_seen as f64)
}

/// Memo of mask bits to fitness; evaluation of a repeated mask is free
/// and exactly reproducible.
#[derive(Debug, Default)]
pub struct FitnessCache {
    memo: HashMap<u64, f64>,
}

impl FitnessCache {
    pub fn evaluate(
        &mut self,
        mask: &FeatureMask,
        x: &[Vec<f64>],
        y: &[Label],
        cfg: &GaConfig,
    ) -> Result<f64, GaError> {
        if let Some(hit) = self.memo.get(&mask.bits()) {
            return Ok(*hit);
        }
        let value = fitness(mask, x, y, cfg)?;
        self.memo.insert(mask.bits(), value);
        Ok(value)
    }
}

/// Indices of the population ranked by fitness descending; equal
/// fitness keeps first-encountered order.
fn ranked(population: &[Chromosome]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..population.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = population[a].fitness.expect("fitness evaluated");
        let fb = population[b].fitness.expect("fitness evaluated");
        fb.partial_cmp(&fa).expect("finite fitness").then(a.cmp(&b))
    });
    order
}

fn tournament_pick<'a>(
    population: &'a [Chromosome],
    rng: &mut ChaCha8Rng,
) -> &'a Chromosome {
    let a = rng.random_range(0..population.len());
    let b = rng.random_range(0..population.len());
    let fa = population[a].fitness.expect("fitness evaluated");
    let fb = population[b].fitness.expect("fitness evaluated");
    // Ties go to the earlier draw.
    if fb > fa {
        &population[b]
    } else {
        &population[a]
    }
}

fn repair_to_k(mask: &mut FeatureMask, k: usize, rng: &mut ChaCha8Rng) {
    while mask.popcount() > k {
        let set: Vec<usize> = mask.indices().collect();
        let drop = set[rng.random_range(0..set.len())];
        mask.set(drop, false);
    }
    while mask.popcount() < k {
        let clear: Vec<usize> = (0..mask.width()).filter(|i| !mask.contains(*i)).collect();
        let add = clear[rng.random_range(0..clear.len())];
        mask.set(add, true);
    }
}

fn uniform_crossover(
    a: &FeatureMask,
    b: &FeatureMask,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> FeatureMask {
    let mut child = FeatureMask::empty(a.width());
    for i in 0..a.width() {
        let from_a = rng.random::<bool>();
        let bit = if from_a { a.contains(i) } else { b.contains(i) };
        child.set(i, bit);
    }
    repair_to_k(&mut child, k, rng);
    child
}

/// Swap mutation: each set bit trades places with a random clear bit
/// with probability `mutation_rate`, keeping the cardinality fixed.
fn mutate(mask: &mut FeatureMask, rate: f64, rng: &mut ChaCha8Rng) {
    let set: Vec<usize> = mask.indices().collect();
    for bit in set {
        if rng.random::<f64>() < rate {
            let clear: Vec<usize> =
                (0..mask.width()).filter(|i| !mask.contains(*i)).collect();
            if clear.is_empty() {
                continue;
            }
            let target = clear[rng.random_range(0..clear.len())];
            mask.set(bit, false);
            mask.set(target, true);
        }
    }
}

/// Produce the next generation. Requires every fitness to be filled in.
pub fn select_crossover_mutate(
    population: &[Chromosome],
    cfg: &GaConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Chromosome> {
    let order = ranked(population);
    let mut next: Vec<Chromosome> = order
        .iter()
        .take(cfg.elitism_count)
        .map(|&i| population[i].clone())
        .collect();
    while next.len() < population.len() {
        let parent_a = tournament_pick(population, rng);
        let parent_b = tournament_pick(population, rng);
        let mut mask = if rng.random::<f64>() < cfg.crossover_rate {
            uniform_crossover(&parent_a.mask, &parent_b.mask, cfg.k, rng)
        } else {
            parent_a.mask
        };
        mutate(&mut mask, cfg.mutation_rate, rng);
        next.push(Chromosome { mask, fitness: None });
    }
    next
}

/// Best/mean fitness of one generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct GaRunResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    /// Per-generation stats, index 0 being the initial population.
    pub history: Vec<GenerationStats>,
}

/// Run the full loop: initialize, evaluate, evolve. Elitism makes the
/// best-fitness history non-decreasing; everything is seeded.
pub fn run_ga(x: &[Vec<f64>], y: &[Label], cfg: &GaConfig) -> Result<GaRunResult, GaError> {
    if x.is_empty() {
        return Err(GaError::EmptyData);
    }
    let width = x[0].len();
    cfg.validate(width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.rng_seed, "ga-loop"));
    let mut cache = FitnessCache::default();
    let mut population = init_population(cfg, width, &mut rng)?;

    let mut history = Vec::with_capacity(cfg.generations + 1);
    let mut best: Option<(FeatureMask, f64)> = None;
    for generation in 0..=cfg.generations {
        if generation > 0 {
            population = select_crossover_mutate(&population, cfg, &mut rng);
        }
        let mut sum = 0.0;
        for chromo in population.iter_mut() {
            let f = cache.evaluate(&chromo.mask, x, y, cfg)?;
            chromo.fitness = Some(f);
            sum += f;
            let improves = best.as_ref().is_none_or(|(_, bf)| f > *bf);
            if improves {
                best = Some((chromo.mask, f));
            }
        }
        let gen_best = population
            .iter()
            .map(|c| c.fitness.unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        history.push(GenerationStats { best: gen_best, mean: sum / population.len() as f64 });
    }

    let (best_mask, best_fitness) = best.expect("population is non-empty");
    Ok(GaRunResult { best_mask, best_fitness, history })
}

/// JSON run report: configuration, per-generation stats, and the final
/// mask spelled as column names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaReport {
    pub config: GaConfig,
    pub history: Vec<GenerationStats>,
    pub best_fitness: f64,
    pub selected_columns: Vec<String>,
}

impl GaReport {
    pub fn new(result: &GaRunResult, cfg: &GaConfig, column_names: &[String]) -> Self {
        Self {
            config: *cfg,
            history: result.history.clone(),
            best_fitness: result.best_fitness,
            selected_columns: result
                .best_mask
                .indices()
                .map(|i| column_names[i].clone())
                .collect(),
        }
    }
}

pub fn write_ga_report(path: &Path, report: &GaReport) -> Result<(), GaError> {
    fs::write(path, serde_json::to_string_pretty(report)?)?;
    Ok(())
}
