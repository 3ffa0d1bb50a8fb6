//! Markov blanket closure and the decomposable IB-score.
//!
//! The closure holds one assertion per ordered pair `(X, Y)`: dependence
//! given `MB(X) \ {Y}` when `(X, Y)` is an edge, independence given `MB(X)`
//! otherwise. The score is the sum of the log posteriors of those
//! assertions, grouped per variable so that a single edge flip only
//! invalidates the two endpoint scores.

use crate::citest::{Assertion, Kind, TestCache};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::graph::Structure;

/// Total IB-score and the per-variable scores it decomposes into.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreState {
    pub per_variable: Vec<f64>,
    pub total: f64,
}

impl ScoreState {
    pub fn from_per_variable(per_variable: Vec<f64>) -> Self {
        let total = per_variable.iter().sum();
        Self { per_variable, total }
    }
}

/// The closure assertion contributed by the ordered pair `(x, y)`.
pub fn closure_assertion(g: &Structure, x: usize, y: usize) -> Assertion {
    let blanket = g.neighbors(x);
    if blanket.contains(y) {
        Assertion::dependence(x, y, blanket.iter().filter(|&w| w != y))
    } else {
        Assertion::independence(x, y, blanket.iter())
    }
}

/// One assertion per ordered pair, grouped by the first variable.
pub fn mb_closure(g: &Structure) -> Vec<Assertion> {
    let n = g.n();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            out.push(closure_assertion(g, x, y));
        }
    }
    out
}

/// Rebuilds a structure from closure assertions by reading the kind of each
/// ordered-pair assertion. Both orientations must agree.
pub fn structure_from_closure(n: usize, closure: &[Assertion]) -> Result<Structure> {
    if closure.len() != n * n.saturating_sub(1) {
        return Err(Error::DimensionMismatch {
            expected: n * n.saturating_sub(1),
            got: closure.len(),
        });
    }
    let mut g = Structure::empty(n);
    let mut idx = 0;
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            let a = &closure[idx];
            idx += 1;
            if (a.x, a.y) != (x.min(y), x.max(y)) {
                return Err(Error::InvalidArgument(format!(
                    "assertion {idx} is about ({}, {}), expected ({x}, {y})",
                    a.x, a.y
                )));
            }
            if a.kind == Kind::Dependence {
                if x < y {
                    g.set_edge(x, y, true);
                } else if !g.has_edge(x, y) {
                    return Err(Error::InvalidArgument(format!("asymmetric closure at ({x}, {y})")));
                }
            } else if x > y && g.has_edge(x, y) {
                return Err(Error::InvalidArgument(format!("asymmetric closure at ({x}, {y})")));
            }
        }
    }
    Ok(g)
}

/// `σ_{X,Y}(G)`: log posterior of the closure assertion for `(x, y)`.
pub fn sigma_xy(d: &Dataset, g: &Structure, x: usize, y: usize, cache: &TestCache) -> Result<f64> {
    check_dims(d, g)?;
    if x == y {
        return Err(Error::InvalidPair {
            x,
            y,
            reason: "variables must differ",
        });
    }
    cache.cached_test(d, &closure_assertion(g, x, y))
}

/// Same as [`sigma_xy`] but served only from `cache`; a miss is an error.
pub fn cached_sigma_xy(g: &Structure, x: usize, y: usize, cache: &TestCache) -> Result<f64> {
    let a = closure_assertion(g, x, y);
    cache
        .peek(a.x, a.y, &a.z)
        .map(|o| o.log_p(a.kind))
        .ok_or(Error::CacheMiss { x, y, z: a.z })
}

/// `σ_X(G) = Σ_{Y ≠ X} σ_{X,Y}(G)`.
pub fn variable_score(d: &Dataset, g: &Structure, x: usize, cache: &TestCache) -> Result<f64> {
    check_dims(d, g)?;
    if x >= g.n() {
        return Err(Error::NodeOutOfRange { node: x, n: g.n() });
    }
    let mut acc = 0.0;
    for y in (0..g.n()).filter(|&y| y != x) {
        acc += cache.cached_test(d, &closure_assertion(g, x, y))?;
    }
    Ok(acc)
}

/// Full IB-score of `g`.
pub fn ib_score(d: &Dataset, g: &Structure, cache: &TestCache) -> Result<ScoreState> {
    check_dims(d, g)?;
    let per_variable = (0..g.n())
        .map(|x| variable_score(d, g, x, cache))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreState::from_per_variable(per_variable))
}

/// Parallel variant of [`ib_score`]; results are bit-identical.
pub fn ib_score_par(d: &Dataset, g: &Structure, cache: &TestCache) -> Result<ScoreState> {
    use rayon::prelude::*;
    check_dims(d, g)?;
    let per_variable = (0..g.n())
        .into_par_iter()
        .map(|x| variable_score(d, g, x, cache))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreState::from_per_variable(per_variable))
}

/// Score of `g` with `(x, y)` flipped, given the exact score `s` of `g`.
///
/// Only the two endpoint scores are recomputed.
pub fn rescore_after_flip(
    d: &Dataset,
    g: &Structure,
    s: &ScoreState,
    x: usize,
    y: usize,
    cache: &TestCache,
) -> Result<(Structure, ScoreState)> {
    let flipped = g.flip_edge(x, y)?;
    let state = rescore_flipped(d, &flipped, s, x, y, cache)?;
    Ok((flipped, state))
}

/// Like [`rescore_after_flip`] for a caller that already holds the flipped structure.
pub fn rescore_flipped(
    d: &Dataset,
    flipped: &Structure,
    s: &ScoreState,
    x: usize,
    y: usize,
    cache: &TestCache,
) -> Result<ScoreState> {
    check_dims(d, flipped)?;
    if s.per_variable.len() != flipped.n() {
        return Err(Error::DimensionMismatch {
            expected: flipped.n(),
            got: s.per_variable.len(),
        });
    }
    let mut per_variable = s.per_variable.clone();
    per_variable[x] = variable_score(d, flipped, x, cache)?;
    per_variable[y] = variable_score(d, flipped, y, cache)?;
    Ok(ScoreState::from_per_variable(per_variable))
}

fn check_dims(d: &Dataset, g: &Structure) -> Result<()> {
    if d.n_vars() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: d.n_vars(),
        });
    }
    Ok(())
}
