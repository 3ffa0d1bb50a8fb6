//! MOA-style estimation-of-distribution optimizer over bit strings.
//!
//! Each generation truncation-selects the better half, learns a Markov
//! network structure from it, and samples offspring with a Gibbs sweep that
//! only needs the structure: each gene is redrawn from its empirical
//! conditional given its current blanket values in the selected set.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{all_pairs, Structure};
use crate::search::{ibmap_hc, SearchConfig};
use crate::seeds::{stream_rng, Stream};

pub const DEFAULT_MI_THRESHOLD: f64 = 0.02;
pub const DEFAULT_LADDER: [usize; 7] = [50, 100, 200, 400, 800, 1600, 3200];

pub type Individual = Vec<u8>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Fitness {
    OneMax,
    RoyalRoad(usize),
    /// Count of zeros; OneMax on the complemented string.
    ZeroMax,
}

impl Fitness {
    pub fn evaluate(&self, bits: &[u8]) -> Result<u32> {
        match *self {
            Fitness::OneMax => Ok(onemax(bits)),
            Fitness::RoyalRoad(gamma) => royal_road(bits, gamma),
            Fitness::ZeroMax => Ok(bits.len() as u32 - onemax(bits)),
        }
    }

    pub fn optimum(&self, n: usize) -> u32 {
        n as u32
    }

    pub fn name(&self) -> String {
        match self {
            Fitness::OneMax => "onemax".into(),
            Fitness::RoyalRoad(g) => format!("royal_road({g})"),
            Fitness::ZeroMax => "zeromax".into(),
        }
    }
}

/// Number of ones.
pub fn onemax(bits: &[u8]) -> u32 {
    bits.iter().filter(|&&b| b != 0).count() as u32
}

/// Sum over consecutive groups of `gamma` bits: `gamma` for an all-ones
/// group, 0 otherwise.
pub fn royal_road(bits: &[u8], gamma: usize) -> Result<u32> {
    if gamma == 0 || !bits.len().is_multiple_of(gamma) {
        return Err(Error::InvalidArgument(format!(
            "group size {gamma} does not divide length {}",
            bits.len()
        )));
    }
    Ok(bits.chunks(gamma).filter(|g| g.iter().all(|&b| b != 0)).count() as u32 * gamma as u32)
}

/// Parses a string of `0`/`1` characters.
pub fn parse_bits(s: &str) -> Result<Individual> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(Error::InvalidArgument(format!("not a bit: {c:?}"))),
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Learner {
    IbmapHc,
    Mi { k: usize, threshold: f64 },
}

impl Learner {
    pub fn mi(k: usize) -> Self {
        Learner::Mi {
            k,
            threshold: DEFAULT_MI_THRESHOLD,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Learner::IbmapHc => "ibmap_hc".into(),
            Learner::Mi { k, .. } => format!("mi(k={k})"),
        }
    }

    pub fn learn(&self, selected: &[Individual]) -> Result<Structure> {
        match *self {
            Learner::IbmapHc => {
                let d = Dataset::from_binary_rows(selected)?;
                Ok(ibmap_hc(&d, &SearchConfig::default())?.structure)
            }
            Learner::Mi { k, threshold } => mi_structure(selected, k, threshold),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdaConfig {
    pub n: usize,
    pub fitness: Fitness,
    pub learner: Learner,
    pub population_size: usize,
    pub selection: f64,
    pub elitism: f64,
    pub max_generations: usize,
    pub seed: u64,
}

impl EdaConfig {
    pub fn new(n: usize, fitness: Fitness, learner: Learner, population_size: usize, seed: u64) -> Self {
        Self {
            n,
            fitness,
            learner,
            population_size,
            selection: 0.5,
            elitism: 0.5,
            max_generations: 1000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| f > 0.0 && f <= 1.0;
        if !frac_ok(self.selection) || !frac_ok(self.elitism) {
            return Err(Error::InvalidArgument("fractions must lie in (0, 1]".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if let Fitness::RoyalRoad(g) = self.fitness {
            if g == 0 || !self.n.is_multiple_of(g) {
                return Err(Error::InvalidArgument(format!(
                    "group size {g} does not divide n = {}",
                    self.n
                )));
            }
        }
        if self.population_size < 2 {
            return Err(Error::InvalidArgument(
                "population must hold at least 2 individuals".into(),
            ));
        }
        Ok(())
    }

    fn selected_count(&self) -> usize {
        ((self.selection * self.population_size as f64).round() as usize).clamp(1, self.population_size)
    }

    fn elite_count(&self) -> usize {
        ((self.elitism * self.population_size as f64).round() as usize).min(self.population_size - 1)
    }
}

/// Bit strings with their fitnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub individuals: Vec<Individual>,
    pub fitnesses: Vec<u32>,
}

impl Population {
    pub fn evaluate(individuals: Vec<Individual>, fitness: Fitness) -> Result<Self> {
        let fitnesses = individuals
            .iter()
            .map(|b| fitness.evaluate(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { individuals, fitnesses })
    }

    pub fn len(&self) -> usize {
        self.individuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.individuals.is_empty()
    }

    pub fn best(&self) -> u32 {
        self.fitnesses.iter().copied().max().unwrap_or(0)
    }

    /// Indices by decreasing fitness; ties keep population order.
    fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.fitnesses[b].cmp(&self.fitnesses[a]));
        idx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    pub success: bool,
    /// Generations run after the initial population.
    pub generations: usize,
    /// Fitness evaluations, `f*`.
    pub fitness_evaluations: u64,
    pub best_trace: Vec<u32>,
}

/// Empirical mutual information (nats) between two binary columns.
fn mutual_information(pop: &[Individual], a: usize, b: usize) -> f64 {
    let mut t = [[0f64; 2]; 2];
    for ind in pop {
        t[ind[a] as usize][ind[b] as usize] += 1.0;
    }
    let n = pop.len() as f64;
    let pa = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let pb = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    let mut mi = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            if t[i][j] > 0.0 {
                mi += t[i][j] / n * (t[i][j] * n / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// Each variable links to its (up to) `k` highest-MI partners above
/// `threshold`; edges are the union over variables.
pub fn mi_structure(pop: &[Individual], k: usize, threshold: f64) -> Result<Structure> {
    let n = pop.first().map_or(0, Vec::len);
    if pop.iter().any(|i| i.len() != n) {
        return Err(Error::InvalidArgument("individuals differ in length".into()));
    }
    let mut mi = vec![vec![0.0; n]; n];
    for (a, b) in all_pairs(n) {
        let v = mutual_information(pop, a, b);
        mi[a][b] = v;
        mi[b][a] = v;
    }
    let mut g = Structure::empty(n);
    for (x, row) in mi.iter().enumerate() {
        let mut cand: Vec<usize> = (0..n).filter(|&y| y != x && row[y] > threshold).collect();
        cand.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        for &y in cand.iter().take(k) {
            g.set_edge(x, y, true);
        }
    }
    Ok(g)
}

/// `P̂(X = 1)` given the blanket values of `state`, add-one smoothed, from
/// `pop`. Falls back to the smoothed marginal when the blanket assignment
/// never occurs.
fn conditional_one(pop: &[Individual], x: usize, blanket: &[usize], state: &[u8]) -> f64 {
    let (mut matched, mut ones) = (0usize, 0usize);
    for ind in pop {
        if blanket.iter().all(|&b| ind[b] == state[b]) {
            matched += 1;
            ones += usize::from(ind[x] == 1);
        }
    }
    if matched == 0 {
        ones = pop.iter().filter(|ind| ind[x] == 1).count();
        matched = pop.len();
    }
    (ones as f64 + 1.0) / (matched as f64 + 2.0)
}

fn offspring_with_rng<R: Rng>(pop: &[Individual], g: &Structure, count: usize, rng: &mut R) -> Result<Vec<Individual>> {
    let first = pop
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty population".into()))?;
    let n = first.len();
    if g.n() != n || pop.iter().any(|i| i.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: g.n(),
        });
    }
    let blankets: Vec<Vec<usize>> = (0..n).map(|x| g.neighbors(x).to_vec()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut child = pop[rng.gen_range(0..pop.len())].clone();
        order.shuffle(rng);
        for &x in &order {
            let p1 = conditional_one(pop, x, &blankets[x], &child);
            child[x] = u8::from(rng.gen::<f64>() < p1);
        }
        out.push(child);
    }
    Ok(out)
}

/// Samples `count` offspring from `pop` using only the structure `g`.
pub fn structure_gibbs_offspring(
    pop: &[Individual],
    g: &Structure,
    count: usize,
    seed: u64,
) -> Result<Vec<Individual>> {
    offspring_with_rng(pop, g, count, &mut stream_rng(seed, Stream::Eda))
}

/// One EDA run. Every individual is evaluated once when created: the
/// initial population costs `D` evaluations and each generation costs one
/// per offspring (elites keep their fitness).
pub fn moa_run(cfg: &EdaConfig) -> Result<RunResult> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, Stream::Eda);
    let optimum = cfg.fitness.optimum(cfg.n);
    let initial: Vec<Individual> = (0..cfg.population_size)
        .map(|_| (0..cfg.n).map(|_| rng.gen_range(0..2)).collect())
        .collect();
    let mut pop = Population::evaluate(initial, cfg.fitness)?;
    let mut evaluations = pop.len() as u64;
    let mut trace = vec![pop.best()];
    if pop.best() == optimum {
        return Ok(RunResult {
            success: true,
            generations: 0,
            fitness_evaluations: evaluations,
            best_trace: trace,
        });
    }
    let n_selected = cfg.selected_count();
    let n_elite = cfg.elite_count();
    let n_offspring = cfg.population_size - n_elite;

    for generation in 1..=cfg.max_generations {
        let rank = pop.ranking();
        let selected: Vec<Individual> = rank[..n_selected].iter().map(|&i| pop.individuals[i].clone()).collect();
        let g = cfg.learner.learn(&selected)?;
        let mut gen_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let children = offspring_with_rng(&selected, &g, n_offspring, &mut gen_rng)?;
        let children = Population::evaluate(children, cfg.fitness)?;
        evaluations += children.len() as u64;

        let mut individuals = Vec::with_capacity(cfg.population_size);
        let mut fitnesses = Vec::with_capacity(cfg.population_size);
        for &i in &rank[..n_elite] {
            individuals.push(pop.individuals[i].clone());
            fitnesses.push(pop.fitnesses[i]);
        }
        individuals.extend(children.individuals);
        fitnesses.extend(children.fitnesses);
        pop = Population { individuals, fitnesses };
        trace.push(pop.best());
        if pop.best() == optimum {
            return Ok(RunResult {
                success: true,
                generations: generation,
                fitness_evaluations: evaluations,
                best_trace: trace,
            });
        }
    }
    Ok(RunResult {
        success: false,
        generations: cfg.max_generations,
        fitness_evaluations: evaluations,
        best_trace: trace,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RungSummary {
    pub population_size: usize,
    pub successes: usize,
    pub runs: Vec<RunResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPopulation {
    /// Smallest ladder size where every repetition succeeded.
    pub d_star: Option<usize>,
    pub f_star_mean: Option<f64>,
    pub f_star_std: Option<f64>,
    pub rungs: Vec<RungSummary>,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Climbs `ladder` until a population size succeeds in all `repetitions`
/// runs (seeds `template.seed + r`).
pub fn critical_population_search(
    template: &EdaConfig,
    ladder: &[usize],
    repetitions: usize,
) -> Result<CriticalPopulation> {
    if ladder.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ladder must be strictly ascending".into()));
    }
    let mut rungs = Vec::new();
    for &d in ladder {
        let runs = (0..repetitions as u64)
            .into_par_iter()
            .map(|r| {
                let cfg = EdaConfig {
                    population_size: d,
                    seed: template.seed.wrapping_add(r),
                    ..template.clone()
                };
                moa_run(&cfg)
            })
            .collect::<Result<Vec<_>>>()?;
        let successes = runs.iter().filter(|r| r.success).count();
        let done = successes == repetitions;
        rungs.push(RungSummary {
            population_size: d,
            successes,
            runs,
        });
        if done {
            let f: Vec<f64> = rungs
                .last()
                .unwrap()
                .runs
                .iter()
                .map(|r| r.fitness_evaluations as f64)
                .collect();
            let (mean, std) = mean_std(&f);
            return Ok(CriticalPopulation {
                d_star: Some(d),
                f_star_mean: Some(mean),
                f_star_std: Some(std),
                rungs,
            });
        }
    }
    Ok(CriticalPopulation {
        d_star: None,
        f_star_mean: None,
        f_star_std: None,
        rungs,
    })
}
