//! Markov network structure learning by maximizing the IB-score: the sum
//! of Bayesian conditional-independence log posteriors over a Markov
//! blanket closure, optimized with incremental hill climbing.
//!
//! Also carries the synthetic-data generators, evaluation metrics, a GSMN
//! baseline and an estimation-of-distribution optimizer that plugs the
//! structure learner in.

pub mod baselines;
pub mod citest;
pub mod dataset;
pub mod eda;
pub mod error;
pub mod eval;
pub mod graph;
pub mod ibscore;
pub mod nodeset;
pub mod search;
pub mod seeds;
pub mod synth;

pub use citest::{bayesian_ci_test, Assertion, Kind, TestCache, TestOutcome};
pub use dataset::{contingency_counts, ContingencyCounts, Dataset};
pub use error::{Error, Result};
pub use graph::{enumerate_structures, hamming, Structure};
pub use ibscore::{ib_score, mb_closure, rescore_after_flip, ScoreState};
pub use nodeset::NodeSet;
pub use search::{ibmap_hc, SearchConfig, SearchResult, SearchStatus};
