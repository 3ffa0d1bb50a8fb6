//! Structure quality metrics and exhaustive score landscapes.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::citest::{bayesian_ci_test, TestCache};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{all_pairs, enumerate_structures, hamming, Structure, MAX_ENUMERATION_NODES};
use crate::ibscore::ib_score;
use crate::search::{ibmap_hc_with_cache, SearchConfig};
use crate::seeds::{stream_rng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FMode {
    Edges,
    Nonedges,
    Triplets,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f_from_precision_recall(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision and recall from counts. Two empty sets agree perfectly.
fn pr_from_counts(true_pos: usize, predicted: usize, actual: usize) -> (f64, f64) {
    if predicted == 0 && actual == 0 {
        return (1.0, 1.0);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (ratio(true_pos, predicted), ratio(true_pos, actual))
}

/// A test triplet `(x, y | z)` with `x < y` and `z` sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Triplet {
    pub x: usize,
    pub y: usize,
    pub z: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TripletSample {
    pub n: usize,
    pub triplets: Vec<Triplet>,
}

impl TripletSample {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn count_with_cardinality(&self, c: usize) -> usize {
        self.triplets.iter().filter(|t| t.z.len() == c).count()
    }
}

/// Precision and recall of `learned` against `truth`.
///
/// `Edges` and `Nonedges` score the respective pair sets; `Triplets` scores
/// the independences implied by vertex separation over `sample`.
pub fn precision_recall(
    learned: &Structure,
    truth: &Structure,
    mode: FMode,
    sample: Option<&TripletSample>,
) -> Result<(f64, f64)> {
    if learned.n() != truth.n() {
        return Err(Error::DimensionMismatch {
            expected: truth.n(),
            got: learned.n(),
        });
    }
    let n = truth.n();
    let (mut tp, mut predicted, mut actual) = (0, 0, 0);
    match mode {
        FMode::Edges | FMode::Nonedges => {
            let want = mode == FMode::Edges;
            for (x, y) in all_pairs(n) {
                let l = learned.has_edge(x, y) == want;
                let t = truth.has_edge(x, y) == want;
                tp += usize::from(l && t);
                predicted += usize::from(l);
                actual += usize::from(t);
            }
        }
        FMode::Triplets => {
            let sample = sample.ok_or_else(|| Error::InvalidArgument("triplets mode needs a sample".into()))?;
            if sample.n != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: sample.n,
                });
            }
            for t in &sample.triplets {
                let l = learned.u_separated(t.x, t.y, &t.z)?;
                let r = truth.u_separated(t.x, t.y, &t.z)?;
                tp += usize::from(l && r);
                predicted += usize::from(l);
                actual += usize::from(r);
            }
        }
    }
    Ok(pr_from_counts(tp, predicted, actual))
}

/// F-measure of `learned` against `truth`; see [`precision_recall`].
pub fn f_measure(learned: &Structure, truth: &Structure, mode: FMode, sample: Option<&TripletSample>) -> Result<f64> {
    let (p, r) = precision_recall(learned, truth, mode, sample)?;
    Ok(f_from_precision_recall(p, r))
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Number of distinct triplets with a conditioning set of size `c`.
pub fn distinct_triplets(n: usize, c: usize) -> u128 {
    if n < 2 {
        return 0;
    }
    binomial(n, 2).saturating_mul(binomial(n - 2, c))
}

fn all_triplets(n: usize, c: usize) -> Vec<Triplet> {
    let mut out = Vec::new();
    for (x, y) in all_pairs(n) {
        let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
        let mut idx: Vec<usize> = (0..c).collect();
        if c > rest.len() {
            continue;
        }
        loop {
            out.push(Triplet {
                x,
                y,
                z: idx.iter().map(|&i| rest[i]).collect(),
            });
            // next combination in lexicographic order
            let mut i = c;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if idx[i] < rest.len() - c + i {
                    idx[i] += 1;
                    for j in i + 1..c {
                        idx[j] = idx[j - 1] + 1;
                    }
                    i = usize::MAX;
                    break;
                }
            }
            if i != usize::MAX {
                break;
            }
        }
    }
    out
}

fn draw_triplets<R: Rng>(n: usize, c: usize, count: usize, rng: &mut R) -> Vec<Triplet> {
    let distinct = distinct_triplets(n, c);
    if count as u128 >= distinct {
        return all_triplets(n, c);
    }
    if distinct <= 4 * count as u128 {
        let mut all = all_triplets(n, c);
        let (chosen, _) = all.partial_shuffle(rng, count);
        let mut chosen = chosen.to_vec();
        chosen.sort();
        return chosen;
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = rng.gen_range(0..n);
        let mut y = rng.gen_range(0..n - 1);
        if y >= x {
            y += 1;
        }
        let (x, y) = (x.min(y), x.max(y));
        let rest: Vec<usize> = (0..n).filter(|&v| v != x && v != y).collect();
        let mut z: Vec<usize> = index::sample(rng, rest.len(), c).into_iter().map(|i| rest[i]).collect();
        z.sort_unstable();
        let t = Triplet { x, y, z };
        if seen.insert(t.clone()) {
            out.push(t);
        }
    }
    out.sort();
    out
}

/// Draws `per_cardinality` distinct triplets for each conditioning-set size
/// `0..=max_card`, falling back to all triplets where fewer exist.
pub fn sample_triplets(n: usize, per_cardinality: usize, max_card: usize, seed: u64) -> Result<TripletSample> {
    if per_cardinality == 0 {
        return Err(Error::InvalidArgument("per_cardinality must be at least 1".into()));
    }
    if n < 2 || max_card > n - 2 {
        return Err(Error::InvalidArgument(format!(
            "conditioning sets of size {max_card} impossible with {n} variables"
        )));
    }
    let mut rng = stream_rng(seed, Stream::Triplets);
    let mut triplets = Vec::new();
    for c in 0..=max_card {
        triplets.extend(draw_triplets(n, c, per_cardinality, &mut rng));
    }
    Ok(TripletSample { n, triplets })
}

/// Spreads `total` draws evenly over sizes `0..=n-2`, topping up sizes with
/// spare capacity when a size has fewer distinct triplets than its share.
pub fn allocate_triplets(n: usize, total: usize) -> Vec<usize> {
    if n < 2 {
        return Vec::new();
    }
    let caps: Vec<u128> = (0..=n - 2).map(|c| distinct_triplets(n, c)).collect();
    let mut alloc = vec![0usize; caps.len()];
    let mut open: Vec<usize> = (0..caps.len()).collect();
    let mut left = total;
    while left > 0 && !open.is_empty() {
        let share = left / open.len();
        let extra = left % open.len();
        let mut next_open = Vec::new();
        let mut used = 0;
        for (k, &c) in open.iter().enumerate() {
            let want = share + usize::from(k < extra);
            let room = caps[c] - alloc[c] as u128;
            let take = (want as u128).min(room) as usize;
            alloc[c] += take;
            used += take;
            if (alloc[c] as u128) < caps[c] {
                next_open.push(c);
            }
        }
        left -= used;
        if used == 0 {
            break;
        }
        open = next_open;
    }
    alloc
}

/// Sample of `total` triplets spread over all conditioning-set sizes.
pub fn sample_triplets_total(n: usize, total: usize, seed: u64) -> Result<TripletSample> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two variables".into()));
    }
    let mut rng = stream_rng(seed, Stream::Triplets);
    let mut triplets = Vec::new();
    for (c, count) in allocate_triplets(n, total).into_iter().enumerate() {
        if count > 0 {
            triplets.extend(draw_triplets(n, c, count, &mut rng));
        }
    }
    Ok(TripletSample { n, triplets })
}

/// `100 · C(n, 2)` triplets spread over all conditioning-set sizes.
pub fn standard_triplet_sample(n: usize, seed: u64) -> Result<TripletSample> {
    sample_triplets_total(n, 100 * n * n.saturating_sub(1) / 2, seed)
}

/// Fraction of triplets on which the data-side decision (posterior of
/// independence above one half) matches vertex separation in `g`.
pub fn accuracy(d_test: &Dataset, g: &Structure, sample: &TripletSample) -> Result<f64> {
    if d_test.n_vars() != g.n() || sample.n != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: d_test.n_vars(),
        });
    }
    if sample.is_empty() {
        return Err(Error::InvalidArgument("empty triplet sample".into()));
    }
    let matches = sample
        .triplets
        .par_iter()
        .map(|t| -> Result<usize> {
            let data_ind = bayesian_ci_test(d_test, t.x, t.y, &t.z)?.is_independent();
            let graph_ind = g.u_separated(t.x, t.y, &t.z)?;
            Ok(usize::from(data_ind == graph_ind))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(matches as f64 / sample.len() as f64)
}

/// Enumeration index of `g` (bit `p` set iff the `p`-th lexicographic pair is an edge).
pub fn structure_index(g: &Structure) -> u64 {
    all_pairs(g.n())
        .enumerate()
        .filter(|&(_, (x, y))| g.has_edge(x, y))
        .fold(0, |acc, (p, _)| acc | 1 << p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LandscapeRecord {
    pub structure_index: u64,
    pub score: f64,
    pub hamming: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Landscape {
    pub records: Vec<LandscapeRecord>,
    pub argmax: LandscapeRecord,
    /// Where IBMAP-HC lands on the same data.
    pub hill_climb: LandscapeRecord,
    pub hill_climb_ascents: usize,
}

impl Landscape {
    /// Structures scoring strictly higher than the hill-climbing result.
    pub fn hill_climb_rank(&self) -> usize {
        self.records.iter().filter(|r| r.score > self.hill_climb.score).count()
    }

    pub fn score_hamming_spearman(&self) -> f64 {
        let s: Vec<f64> = self.records.iter().map(|r| r.score).collect();
        let h: Vec<f64> = self.records.iter().map(|r| r.hamming as f64).collect();
        spearman(&s, &h)
    }

    /// Tab-separated table with a header row.
    pub fn to_table(&self) -> String {
        let mut out = String::from("structure_index\tscore\thamming\n");
        for r in &self.records {
            let _ = writeln!(out, "{}\t{:.12}\t{}", r.structure_index, r.score, r.hamming);
        }
        out
    }
}

/// Exact IB-score and Hamming distance to `truth` for every structure over
/// the dataset's variables.
pub fn landscape(d: &Dataset, truth: &Structure) -> Result<Landscape> {
    let n = d.n_vars();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::InvalidArgument(format!(
            "landscape limited to n <= {MAX_ENUMERATION_NODES}, got {n}"
        )));
    }
    if truth.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: truth.n(),
        });
    }
    let cache = TestCache::new();
    let structures: Vec<Structure> = enumerate_structures(n)?.collect();
    let records = structures
        .par_iter()
        .enumerate()
        .map(|(k, g)| {
            Ok(LandscapeRecord {
                structure_index: k as u64,
                score: ib_score(d, g, &cache)?.total,
                hamming: hamming(g, truth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmax = *records
        .iter()
        .reduce(|best, r| if r.score > best.score { r } else { best })
        .expect("at least one structure");
    let hc = ibmap_hc_with_cache(d, &SearchConfig::default(), &cache)?;
    let hill_climb = LandscapeRecord {
        structure_index: structure_index(&hc.structure),
        score: hc.score.total,
        hamming: hamming(&hc.structure, truth)?,
    };
    Ok(Landscape {
        records,
        argmax,
        hill_climb,
        hill_climb_ascents: hc.ascents,
    })
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. NaN when either
/// input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}
