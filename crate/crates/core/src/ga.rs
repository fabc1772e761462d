//! Generational genetic algorithm over genomes of binary chromosomes.
//!
//! One generation: sort the population by fitness, draw parent pairs from the
//! rank-exponential law, exchange a random contiguous segment of every
//! chromosome, optionally flip bits, and evaluate the offspring. A run stops
//! when the population fitness fluctuation drops below the threshold `h`.
//!
//! # Random streams
//!
//! A run seed `s` drives four independent ChaCha8 streams, each created by
//! `ChaCha8Rng::seed_from_u64(s)` followed by `set_stream(k)` with
//! `k = 0` (initial population), `1` (parent selection), `2` (crossover
//! cuts) and `3` (mutation).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{random_genome, CodecConfig, Genome};
use crate::tasks::TaskSpec;

pub const DEFAULT_MAX_GENERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CrossoverMode {
    /// Swap one uniformly chosen contiguous segment per chromosome position.
    #[default]
    TwoPointSegment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// `N_pop`
    pub population: usize,
    /// Termination threshold `h` on the fitness fluctuation.
    pub threshold: f64,
    pub mutation_rate: f64,
    pub crossover: CrossoverMode,
    /// Individuals copied unchanged into the next generation.
    pub elitism: usize,
    pub max_generations: usize,
    pub codec: CodecConfig,
}

impl GaConfig {
    pub fn new(population: usize, threshold: f64, codec: CodecConfig) -> Self {
        Self {
            population,
            threshold,
            mutation_rate: 0.0,
            crossover: CrossoverMode::TwoPointSegment,
            elitism: 0,
            max_generations: DEFAULT_MAX_GENERATIONS,
            codec,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.codec.validate()?;
        if self.population < 2 {
            return Err(Error::InvalidConfig(format!(
                "population must be at least 2, got {}",
                self.population
            )));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must be positive, got {}",
                self.threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) {
            return Err(Error::InvalidConfig(format!(
                "mutation rate must be in [0, 1], got {}",
                self.mutation_rate
            )));
        }
        if self.elitism > self.population {
            return Err(Error::InvalidConfig(format!(
                "elitism {} exceeds population {}",
                self.elitism, self.population
            )));
        }
        if self.max_generations == 0 {
            return Err(Error::InvalidConfig(
                "max_generations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Genome,
    pub fitness: f64,
}

/// Individuals sorted by descending fitness, ties in original order.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    individuals: Vec<Individual>,
}

impl Population {
    fn from_unsorted(mut individuals: Vec<Individual>) -> Self {
        // stable sort keeps prior index order on ties
        individuals.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
        Self { individuals }
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn best(&self) -> &Individual {
        &self.individuals[0]
    }

    pub fn mean_fitness(&self) -> f64 {
        self.individuals.iter().map(|i| i.fitness).sum::<f64>() / self.len() as f64
    }
}

/// Scores every genome against the task and sorts the result.
pub fn evaluate(genomes: Vec<Genome>, task: &TaskSpec, codec: &CodecConfig) -> Result<Population> {
    let individuals = genomes
        .into_iter()
        .map(|genome| {
            let fitness = task.fitness(&genome, codec)?;
            Ok(Individual { genome, fitness })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Population::from_unsorted(individuals))
}

/// Rank selection law `P(n) ~ exp(-ln(N) (n-1)/(N-1))`, `n = 1..N`.
///
/// The last rank is set to `P(1) / N` directly so that identity is exact in
/// floating point.
pub fn selection_probabilities(population: usize) -> Result<Vec<f64>> {
    if population < 2 {
        return Err(Error::InvalidConfig(format!(
            "selection needs at least 2 individuals, got {population}"
        )));
    }
    let n = population as f64;
    let rate = n.ln() / (n - 1.0);
    let mut weights: Vec<f64> = (0..population).map(|k| (-rate * k as f64).exp()).collect();
    weights[population - 1] = 1.0 / n;
    let total: f64 = weights.iter().sum();
    let mut probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    probs[population - 1] = probs[0] / n;
    Ok(probs)
}

/// Inverse-CDF sampler over ranks.
#[derive(Debug, Clone)]
pub struct RankSampler {
    cumulative: Vec<f64>,
}

impl RankSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cumulative[self.cumulative.len() - 1];
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }

    /// Two distinct ranks; the second is redrawn until it differs.
    pub fn select_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let first = self.sample(rng);
        loop {
            let second = self.sample(rng);
            if second != first {
                return (first, second);
            }
        }
    }
}

pub fn select_pair<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> (usize, usize) {
    RankSampler::new(probs).select_pair(rng)
}

/// Exchanges a random segment `[s, e]` (1-based, `s <= e`, uniform over the
/// `L(L+1)/2` ordered pairs) at every chromosome position independently.
pub fn crossover<R: Rng + ?Sized>(a: &Genome, b: &Genome, rng: &mut R) -> Result<(Genome, Genome)> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "parents have shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let depth = a.shape().2;
    let mut left = a.clone();
    let mut right = b.clone();
    for (ca, cb) in left.chromosomes_mut().zip(right.chromosomes_mut()) {
        let (start, end) = random_segment(depth, rng);
        ca.bits_mut()[start..=end].swap_with_slice(&mut cb.bits_mut()[start..=end]);
    }
    Ok((left, right))
}

/// Uniform `(s, e)` with `0 <= s <= e < len` (0-based).
fn random_segment<R: Rng + ?Sized>(len: usize, rng: &mut R) -> (usize, usize) {
    let pairs = len * (len + 1) / 2;
    let mut k = rng.random_range(0..pairs);
    // row s holds len - s pairs (s, s..len)
    let mut start = 0;
    while k >= len - start {
        k -= len - start;
        start += 1;
    }
    (start, start + k)
}

/// Flips each gene independently with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(genome: &mut Genome, rate: f64, rng: &mut R) {
    if rate <= 0.0 {
        return;
    }
    for c in genome.chromosomes_mut() {
        for g in c.bits_mut() {
            if rng.random_bool(rate) {
                *g = !*g;
            }
        }
    }
}

/// `sqrt(<xi^2> - <xi>^2)` over the population (biased form).
///
/// Evaluated as the mean squared deviation, which is the same quantity
/// without the cancellation, so a homogeneous population gives exactly 0.
pub fn fitness_fluctuation(pop: &Population) -> f64 {
    let n = pop.len() as f64;
    let mean = pop.mean_fitness();
    let var = pop
        .individuals
        .iter()
        .map(|i| (i.fitness - mean) * (i.fitness - mean))
        .sum::<f64>()
        / n;
    var.max(0.0).sqrt()
}

/// Per-run random streams.
#[derive(Debug, Clone)]
pub struct RunStreams {
    pub init: ChaCha8Rng,
    pub selection: ChaCha8Rng,
    pub crossover: ChaCha8Rng,
    pub mutation: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            rng
        };
        Self {
            init: stream(0),
            selection: stream(1),
            crossover: stream(2),
            mutation: stream(3),
        }
    }
}

pub fn initial_population(
    cfg: &GaConfig,
    task: &TaskSpec,
    rng: &mut impl Rng,
) -> Result<Population> {
    let slots = task.template().trainable_slots();
    let genomes = (0..cfg.population)
        .map(|_| random_genome(rng, &cfg.codec, slots))
        .collect();
    evaluate(genomes, task, &cfg.codec)
}

/// Elites plus offspring from repeated select -> crossover -> mutate.
pub fn next_generation(
    pop: &Population,
    cfg: &GaConfig,
    task: &TaskSpec,
    streams: &mut RunStreams,
) -> Result<Population> {
    let n = cfg.population;
    let sampler = RankSampler::new(&selection_probabilities(pop.len())?);
    let mut next: Vec<Individual> = pop.individuals[..cfg.elitism.min(pop.len())].to_vec();
    let mut offspring = Vec::with_capacity(n - next.len() + 1);
    while next.len() + offspring.len() < n {
        let (i, j) = sampler.select_pair(&mut streams.selection);
        let (mut a, mut b) = crossover(
            &pop.individuals[i].genome,
            &pop.individuals[j].genome,
            &mut streams.crossover,
        )?;
        mutate(&mut a, cfg.mutation_rate, &mut streams.mutation);
        mutate(&mut b, cfg.mutation_rate, &mut streams.mutation);
        offspring.push(a);
        offspring.push(b);
    }
    offspring.truncate(n - next.len());
    next.extend(evaluate(offspring, task, &cfg.codec)?.individuals);
    Ok(Population::from_unsorted(next))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    GenerationCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::GenerationCap => "generation-cap",
        }
    }
}

impl std::str::FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(Termination::Converged),
            "generation-cap" => Ok(Termination::GenerationCap),
            other => Err(Error::Parse(format!(
                "unknown termination reason `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationStats {
    pub mean_fitness: f64,
    pub fluctuation: f64,
    pub best_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub config: GaConfig,
    /// One entry per completed generation; length is `Q_c`.
    pub generations: Vec<GenerationStats>,
    pub termination: Termination,
    pub best_genome: Genome,
    /// `xi_opt`: best fitness in the final population.
    pub best_fitness: f64,
}

impl RunRecord {
    /// `Q_c`
    pub fn generations_run(&self) -> usize {
        self.generations.len()
    }

    /// `1 - xi_opt`, clamped to `[0, 1]`.
    pub fn epsilon_opt(&self) -> f64 {
        (1.0 - self.best_fitness).clamp(0.0, 1.0)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Runs the GA to termination. Deterministic in `(cfg, task, seed)`.
pub fn run(cfg: &GaConfig, task: &TaskSpec, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    if cfg.codec.dim != task.dim() {
        return Err(Error::DimensionMismatch {
            expected: task.dim(),
            found: cfg.codec.dim,
        });
    }
    let mut streams = RunStreams::new(seed);
    let mut pop = initial_population(cfg, task, &mut streams.init)?;
    let mut generations = Vec::new();
    let termination = loop {
        let fluctuation = fitness_fluctuation(&pop);
        generations.push(GenerationStats {
            mean_fitness: pop.mean_fitness(),
            fluctuation,
            best_fitness: pop.best().fitness,
        });
        if fluctuation < cfg.threshold {
            break Termination::Converged;
        }
        if generations.len() >= cfg.max_generations {
            break Termination::GenerationCap;
        }
        pop = next_generation(&pop, cfg, task, &mut streams)?;
    };
    let best = pop.best();
    Ok(RunRecord {
        seed,
        config: cfg.clone(),
        generations,
        termination,
        best_genome: best.genome.clone(),
        best_fitness: best.fitness,
    })
}
