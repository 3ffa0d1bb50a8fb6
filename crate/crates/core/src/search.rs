//! IBMAP-HC: hill climbing over single-edge flips.
//!
//! The next flip is chosen without running any test: every pair `(X, Y)` is
//! ranked by `σ_{X,Y}(G) + σ_{Y,X}(G)`, read from the cache, and the pair
//! with the smallest contribution is flipped. Its true score is then computed
//! incrementally. The search stops at the first neighbor that scores worse.

use std::collections::HashSet;

use crate::citest::{TestCache, DEFAULT_ALPHA};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::{all_pairs, Structure};
use crate::ibscore::{cached_sigma_xy, ib_score, rescore_flipped, ScoreState};

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Defaults to `10 * n^2` when unset.
    pub max_iterations: Option<usize>,
    /// Start from this structure instead of the empty one.
    pub warm_start: Option<Structure>,
    pub alpha: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            max_iterations: None,
            warm_start: None,
            alpha: DEFAULT_ALPHA,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    /// The proposed neighbor scored lower, or revisited a structure on the
    /// current equal-score plateau.
    Converged,
    /// The iteration guard fired before convergence.
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub structure: Structure,
    pub score: ScoreState,
    /// Accepted flips.
    pub ascents: usize,
    pub tests_computed: u64,
    pub cache_hits: u64,
    pub status: SearchStatus,
}

/// Lexicographically first unordered pair minimizing `value(x, y)`.
pub fn argmin_pair<F>(n: usize, mut value: F) -> Result<Option<(usize, usize)>>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let mut best: Option<((usize, usize), f64)> = None;
    for (x, y) in all_pairs(n) {
        let v = value(x, y)?;
        if best.is_none_or(|(_, b)| v < b) {
            best = Some(((x, y), v));
        }
    }
    Ok(best.map(|(p, _)| p))
}

/// Pair whose flip is predicted to give the best neighbor, using only cached
/// test outcomes. `None` when `g` has fewer than two nodes.
pub fn select_next_structure(g: &Structure, cache: &TestCache) -> Result<Option<(usize, usize)>> {
    argmin_pair(g.n(), |x, y| {
        Ok(cached_sigma_xy(g, x, y, cache)? + cached_sigma_xy(g, y, x, cache)?)
    })
}

/// Runs IBMAP-HC on `d` with a fresh test cache.
pub fn ibmap_hc(d: &Dataset, config: &SearchConfig) -> Result<SearchResult> {
    let cache = TestCache::with_alpha(config.alpha)?;
    ibmap_hc_with_cache(d, config, &cache)
}

/// Runs IBMAP-HC against a caller-supplied cache, which must belong to `d`.
/// Reported test counts are the increments made during this run.
pub fn ibmap_hc_with_cache(d: &Dataset, config: &SearchConfig, cache: &TestCache) -> Result<SearchResult> {
    let n = d.n_vars();
    let computed_before = cache.tests_computed();
    let hits_before = cache.cache_hits();
    let mut g = match &config.warm_start {
        Some(w) if w.n() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.n(),
            });
        }
        Some(w) => w.clone(),
        None => Structure::empty(n),
    };
    let mut score = ib_score(d, &g, cache)?;
    let max_iterations = config.max_iterations.unwrap_or(10 * n * n);
    let mut plateau: HashSet<Structure> = HashSet::from([g.clone()]);
    let mut ascents = 0;
    let mut status = SearchStatus::IterationLimit;

    for _ in 0..max_iterations {
        let Some((x, y)) = select_next_structure(&g, cache)? else {
            status = SearchStatus::Converged;
            break;
        };
        let next = g.flip_edge(x, y)?;
        let next_score = rescore_flipped(d, &next, &score, x, y, cache)?;
        if next_score.total < score.total {
            status = SearchStatus::Converged;
            break;
        }
        if next_score.total == score.total {
            if !plateau.insert(next.clone()) {
                status = SearchStatus::Converged;
                break;
            }
        } else {
            plateau.clear();
            plateau.insert(next.clone());
        }
        g = next;
        score = next_score;
        ascents += 1;
    }
    if n < 2 {
        status = SearchStatus::Converged;
    }

    Ok(SearchResult {
        structure: g,
        score,
        ascents,
        tests_computed: cache.tests_computed() - computed_before,
        cache_hits: cache.cache_hits() - hits_before,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::hamming;
    use crate::ibscore::ib_score;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn argmin_picks_smallest_pair_value() {
        let vals = |x, y| match (x, y) {
            (0, 1) => Ok(-5.0),
            (0, 2) => Ok(-1.0),
            _ => Ok(-0.5),
        };
        assert_eq!(argmin_pair(3, vals).unwrap(), Some((0, 1)));
    }

    #[test]
    fn argmin_ties_break_lexicographically() {
        assert_eq!(argmin_pair(4, |_, _| Ok(-2.0)).unwrap(), Some((0, 1)));
        assert_eq!(argmin_pair(1, |_, _| Ok(0.0)).unwrap(), None);
    }

    fn chain_dataset(n: usize, rows: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<u32>> = vec![Vec::with_capacity(rows); n];
        for _ in 0..rows {
            let mut prev: u32 = rng.gen_range(0..2);
            for (i, c) in cols.iter_mut().enumerate() {
                let v = if i > 0 && rng.gen_bool(0.85) {
                    prev
                } else {
                    rng.gen_range(0..2)
                };
                c.push(v);
                prev = v;
            }
        }
        Dataset::with_arities(crate::dataset::default_names(n), vec![2; n], cols).unwrap()
    }

    #[test]
    fn select_uses_no_new_tests() {
        let d = chain_dataset(5, 300, 1);
        let cache = TestCache::new();
        let g = Structure::empty(5);
        ib_score(&d, &g, &cache).unwrap();
        let before = cache.tests_computed();
        let pick = select_next_structure(&g, &cache).unwrap();
        assert!(pick.is_some());
        assert_eq!(cache.tests_computed(), before);
    }

    #[test]
    fn select_on_cold_cache_is_a_protocol_error() {
        let g = Structure::empty(3);
        assert!(matches!(
            select_next_structure(&g, &TestCache::new()),
            Err(Error::CacheMiss { .. })
        ));
    }

    #[test]
    fn recovers_a_strong_chain() {
        let d = chain_dataset(5, 2000, 2);
        let r = ibmap_hc(&d, &SearchConfig::default()).unwrap();
        let truth = Structure::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(r.status, SearchStatus::Converged);
        assert_eq!(hamming(&r.structure, &truth).unwrap(), 0);
        assert_eq!(r.ascents, 4);
        let fresh = ib_score(&d, &r.structure, &TestCache::new()).unwrap();
        assert!((fresh.total - r.score.total).abs() < 1e-9);
    }

    #[test]
    fn test_count_bound() {
        let n = 6;
        let d = chain_dataset(n, 500, 3);
        let r = ibmap_hc(&d, &SearchConfig::default()).unwrap();
        let bound = (n * (n - 1) + (r.ascents + 1) * 2 * (n - 1)) as u64;
        assert!(r.tests_computed <= bound, "{} > {bound}", r.tests_computed);
    }

    #[test]
    fn iteration_guard_is_reported() {
        let d = chain_dataset(5, 2000, 4);
        let cfg = SearchConfig {
            max_iterations: Some(1),
            ..SearchConfig::default()
        };
        let r = ibmap_hc(&d, &cfg).unwrap();
        assert_eq!(r.status, SearchStatus::IterationLimit);
        assert_eq!(r.ascents, 1);
    }

    #[test]
    fn plateau_cycles_terminate() {
        // Constant columns make every test uninformative: all scores tie.
        let d = Dataset::with_arities(crate::dataset::default_names(4), vec![2; 4], vec![vec![0; 20]; 4]).unwrap();
        let r = ibmap_hc(&d, &SearchConfig::default()).unwrap();
        assert_eq!(r.status, SearchStatus::Converged);
    }

    #[test]
    fn warm_start_dimension_checked() {
        let d = chain_dataset(4, 50, 5);
        let cfg = SearchConfig {
            warm_start: Some(Structure::empty(3)),
            ..SearchConfig::default()
        };
        assert!(ibmap_hc(&d, &cfg).is_err());
    }
}
