//! GSMN: per-variable grow-shrink blanket discovery over the same Bayesian
//! test, with test outcomes thresholded at a posterior of one half.

use crate::citest::{TestCache, DEFAULT_ALPHA};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::graph::Structure;
use crate::ibscore::ib_score;
use crate::nodeset::NodeSet;
use crate::search::{SearchResult, SearchStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EdgeCombine {
    /// Edge if either endpoint has the other in its blanket.
    #[default]
    Or,
    /// Edge only if both endpoints agree.
    And,
}

#[derive(Clone, Debug)]
pub struct GsmnConfig {
    pub alpha: f64,
    pub combine: EdgeCombine,
    /// Bound on grow/shrink rounds per variable.
    pub max_rounds: usize,
}

impl Default for GsmnConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            combine: EdgeCombine::Or,
            max_rounds: 32,
        }
    }
}

/// Candidates for `x` ordered by decreasing marginal dependence posterior.
pub fn candidate_order(d: &Dataset, x: usize, cache: &TestCache) -> Result<Vec<usize>> {
    let mut scored = Vec::with_capacity(d.n_vars());
    for y in (0..d.n_vars()).filter(|&y| y != x) {
        scored.push((cache.outcome(d, x, y, &[])?.log_p_dep, y));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    Ok(scored.into_iter().map(|(_, y)| y).collect())
}

/// Grow-shrink estimate of the blanket of `x`, iterated until neither phase
/// changes it (or `max_rounds` is reached).
pub fn grow_shrink(d: &Dataset, x: usize, cache: &TestCache, max_rounds: usize) -> Result<NodeSet> {
    let order = candidate_order(d, x, cache)?;
    let mut blanket = NodeSet::new(d.n_vars());
    for _ in 0..max_rounds.max(1) {
        // grow
        loop {
            let mut added = false;
            for &y in &order {
                if blanket.contains(y) {
                    continue;
                }
                if cache.outcome(d, x, y, &blanket.to_vec())?.p_dep() > 0.5 {
                    blanket.insert(y);
                    added = true;
                }
            }
            if !added {
                break;
            }
        }
        // shrink
        let mut removed = false;
        for y in blanket.to_vec() {
            let mut rest = blanket.clone();
            rest.remove(y);
            if cache.outcome(d, x, y, &rest.to_vec())?.p_ind() >= 0.5 {
                blanket.remove(y);
                removed = true;
            }
        }
        if !removed {
            break;
        }
    }
    Ok(blanket)
}

/// Learns a structure with GSMN. `tests_computed` excludes the tests spent
/// scoring the output afterwards.
pub fn gsmn(d: &Dataset, config: &GsmnConfig) -> Result<SearchResult> {
    let cache = TestCache::with_alpha(config.alpha)?;
    gsmn_with_cache(d, config, &cache)
}

pub fn gsmn_with_cache(d: &Dataset, config: &GsmnConfig, cache: &TestCache) -> Result<SearchResult> {
    let n = d.n_vars();
    let computed_before = cache.tests_computed();
    let hits_before = cache.cache_hits();
    let blankets = (0..n)
        .map(|x| grow_shrink(d, x, cache, config.max_rounds))
        .collect::<Result<Vec<_>>>()?;
    let structure = combine_blankets(&blankets, config.combine);
    let tests_computed = cache.tests_computed() - computed_before;
    let cache_hits = cache.cache_hits() - hits_before;
    let score = ib_score(d, &structure, cache)?;
    Ok(SearchResult {
        structure,
        score,
        ascents: 0,
        tests_computed,
        cache_hits,
        status: SearchStatus::Converged,
    })
}

pub fn combine_blankets(blankets: &[NodeSet], combine: EdgeCombine) -> Structure {
    let n = blankets.len();
    let mut g = Structure::empty(n);
    for x in 0..n {
        for y in x + 1..n {
            let (a, b) = (blankets[x].contains(y), blankets[y].contains(x));
            let edge = match combine {
                EdgeCombine::Or => a || b,
                EdgeCombine::And => a && b,
            };
            if edge {
                g.set_edge(x, y, true);
            }
        }
    }
    g
}
