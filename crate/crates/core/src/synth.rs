//! Synthetic binary Markov networks: random and grid structures, pairwise
//! factors with a fixed log-odds ratio, and single-site Gibbs sampling.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::{default_names, Dataset};
use crate::error::{Error, Result};
use crate::graph::{all_pairs, Structure};
use crate::seeds::{stream_rng, Stream};

pub const DEFAULT_BURN_IN: usize = 100;
pub const DEFAULT_THIN: usize = 9;

/// 2×2 potential indexed `[x][y]` for an edge `(x, y)` with `x < y`.
pub type Factor = [[f64; 2]; 2];

/// Structure plus one strictly positive factor per edge.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseModel {
    structure: Structure,
    factors: BTreeMap<(usize, usize), Factor>,
}

impl PairwiseModel {
    pub fn new(structure: Structure, factors: BTreeMap<(usize, usize), Factor>) -> Result<Self> {
        let edges: Vec<_> = structure.edges().collect();
        if edges.len() != factors.len() || edges.iter().any(|e| !factors.contains_key(e)) {
            return Err(Error::InvalidArgument("factors must match the edge set exactly".into()));
        }
        if factors
            .values()
            .flatten()
            .flatten()
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "factor values must be positive and finite".into(),
            ));
        }
        Ok(Self { structure, factors })
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn factors(&self) -> &BTreeMap<(usize, usize), Factor> {
        &self.factors
    }

    /// Unnormalized log probability of a full assignment.
    pub fn log_potential(&self, state: &[u8]) -> f64 {
        self.factors
            .iter()
            .map(|(&(i, j), f)| f[state[i] as usize][state[j] as usize].ln())
            .sum()
    }
}

/// `log(φ00·φ11 / (φ01·φ10))`.
pub fn log_odds(f: &Factor) -> f64 {
    (f[0][0].ln() + f[1][1].ln()) - (f[0][1].ln() + f[1][0].ln())
}

/// Random structure with `⌊n·τ/2⌋` edges: the prefix of a seeded shuffle of
/// all pairs.
pub fn random_structure(n: usize, tau: f64, seed: u64) -> Result<Structure> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("tau must be non-negative, got {tau}")));
    }
    let edges = (n as f64 * tau / 2.0).floor() as usize;
    let max = n * n.saturating_sub(1) / 2;
    if edges > max {
        return Err(Error::InvalidArgument(format!(
            "{edges} edges requested but only {max} pairs exist for n = {n}"
        )));
    }
    let mut pairs: Vec<(usize, usize)> = all_pairs(n).collect();
    pairs.shuffle(&mut stream_rng(seed, Stream::Structure));
    let mut chosen = pairs[..edges].to_vec();
    chosen.sort_unstable();
    Structure::from_edges(n, &chosen)
}

/// Non-toroidal 4-neighbor grid; node `(r, c)` has index `r * cols + c`.
pub fn ising_structure(rows: usize, cols: usize) -> Result<Structure> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(Error::InvalidArgument(format!("degenerate grid {rows}x{cols}")));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Structure::from_edges(rows * cols, &edges)
}

/// Solves for `φ11` so that the factor has log-odds `epsilon`.
pub fn factor_with_log_odds(f00: f64, f01: f64, f10: f64, epsilon: f64) -> Factor {
    let f11 = epsilon.exp() * f01 * f10 / f00;
    [[f00, f01], [f10, f11]]
}

/// Draws three factor entries uniformly from (0, 1] per edge and solves for
/// the fourth so every factor has log-odds `epsilon`.
pub fn pairwise_model(g: &Structure, epsilon: f64, seed: u64) -> Result<PairwiseModel> {
    if !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be finite, got {epsilon}")));
    }
    let mut rng = stream_rng(seed, Stream::Params);
    let mut unit = move || 1.0 - rng.gen::<f64>();
    let factors = g
        .edges()
        .map(|e| {
            let (a, b, c) = (unit(), unit(), unit());
            (e, factor_with_log_odds(a, b, c, epsilon))
        })
        .collect();
    PairwiseModel::new(g.clone(), factors)
}

/// Samples `n_rows` binary rows from `m` with a single-site Gibbs chain.
///
/// The chain starts uniformly at random, runs `burn_in` full sweeps (each
/// variable once, in index order), then records one row every `thin + 1`
/// sweeps.
pub fn gibbs_sample(m: &PairwiseModel, n_rows: usize, burn_in: usize, thin: usize, seed: u64) -> Result<Dataset> {
    if n_rows == 0 {
        return Err(Error::InvalidArgument("n_rows must be at least 1".into()));
    }
    let n = m.structure.n();
    // Per node: (neighbor, log φ oriented as [own value][neighbor value]).
    let mut local: Vec<Vec<(usize, [[f64; 2]; 2])>> = vec![Vec::new(); n];
    for (&(i, j), f) in &m.factors {
        let lf = f.map(|row| row.map(f64::ln));
        local[i].push((j, lf));
        local[j].push((i, [[lf[0][0], lf[1][0]], [lf[0][1], lf[1][1]]]));
    }
    let mut rng = stream_rng(seed, Stream::Sampler);
    let mut state: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();

    let sweep = |state: &mut Vec<u8>, rng: &mut rand_chacha::ChaCha8Rng| {
        for x in 0..n {
            let (mut l0, mut l1) = (0.0, 0.0);
            for (y, lf) in &local[x] {
                let yv = state[*y] as usize;
                l0 += lf[0][yv];
                l1 += lf[1][yv];
            }
            let p1 = 1.0 / (1.0 + (l0 - l1).exp());
            state[x] = u8::from(rng.gen::<f64>() < p1);
        }
    };

    for _ in 0..burn_in {
        sweep(&mut state, &mut rng);
    }
    let mut columns = vec![Vec::with_capacity(n_rows); n];
    for _ in 0..n_rows {
        for _ in 0..=thin {
            sweep(&mut state, &mut rng);
        }
        for (col, &v) in columns.iter_mut().zip(&state) {
            col.push(u32::from(v));
        }
    }
    Dataset::with_arities(default_names(n), vec![2; n], columns)
}

/// A generated benchmark: ground-truth model and a dataset sampled from it.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub model: PairwiseModel,
    pub data: Dataset,
}

impl Benchmark {
    pub fn truth(&self) -> &Structure {
        self.model.structure()
    }
}

/// Random structure, ε-log-odds factors and a Gibbs-sampled dataset, all
/// derived from `seed` through separate streams.
pub fn random_benchmark(n: usize, tau: f64, epsilon: f64, n_rows: usize, seed: u64) -> Result<Benchmark> {
    let g = random_structure(n, tau, seed)?;
    model_benchmark(&g, epsilon, n_rows, seed)
}

/// Factors and a dataset for a given structure.
pub fn model_benchmark(g: &Structure, epsilon: f64, n_rows: usize, seed: u64) -> Result<Benchmark> {
    let model = pairwise_model(g, epsilon, seed)?;
    let data = gibbs_sample(&model, n_rows, DEFAULT_BURN_IN, DEFAULT_THIN, seed)?;
    Ok(Benchmark { model, data })
}
