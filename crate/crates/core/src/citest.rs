//! Bayesian conditional-independence testing on discrete data.
//!
//! Each observed slice of the conditioning set is scored twice: once as a
//! single multinomial over the joint `(X, Y)` table (dependence) and once as
//! the product of two marginal multinomials (independence). Both use
//! symmetric Dirichlet priors, and the two hypotheses get equal prior mass.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use statrs::function::gamma::ln_gamma;

use crate::dataset::{contingency_counts, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Independence,
    Dependence,
}

/// A (conditional) independence or dependence statement `X ⊥ Y | Z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assertion {
    pub x: usize,
    pub y: usize,
    pub z: Vec<usize>,
    pub kind: Kind,
}

impl Assertion {
    /// Canonical form: `x < y`, `z` sorted ascending without duplicates.
    pub fn new(x: usize, y: usize, z: impl IntoIterator<Item = usize>, kind: Kind) -> Self {
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        let mut z: Vec<usize> = z.into_iter().collect();
        z.sort_unstable();
        z.dedup();
        Self { x, y, z, kind }
    }

    pub fn independence(x: usize, y: usize, z: impl IntoIterator<Item = usize>) -> Self {
        Self::new(x, y, z, Kind::Independence)
    }

    pub fn dependence(x: usize, y: usize, z: impl IntoIterator<Item = usize>) -> Self {
        Self::new(x, y, z, Kind::Dependence)
    }
}

/// Posterior log-probabilities of independence and dependence for one triplet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TestOutcome {
    pub log_p_ind: f64,
    pub log_p_dep: f64,
}

impl TestOutcome {
    /// Posterior from the two log evidences under equal hypothesis priors.
    pub fn from_log_evidence(log_e_ind: f64, log_e_dep: f64) -> Self {
        Self {
            log_p_ind: -softplus(log_e_dep - log_e_ind),
            log_p_dep: -softplus(log_e_ind - log_e_dep),
        }
    }

    pub fn log_p(&self, kind: Kind) -> f64 {
        match kind {
            Kind::Independence => self.log_p_ind,
            Kind::Dependence => self.log_p_dep,
        }
    }

    pub fn p_ind(&self) -> f64 {
        self.log_p_ind.exp()
    }

    pub fn p_dep(&self) -> f64 {
        self.log_p_dep.exp()
    }

    /// Boolean decision used by threshold-based consumers.
    pub fn is_independent(&self) -> bool {
        self.p_ind() > 0.5
    }
}

/// `ln(1 + e^t)` without overflow or cancellation.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Log marginal likelihood of `counts` under a multinomial with a symmetric
/// Dirichlet(`alpha`) prior over its cells.
///
/// The result does not depend on the order of `counts`.
pub fn log_dirichlet_multinomial(counts: &[u64], alpha: f64) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument("empty cell list".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let mut buf = counts.to_vec();
    Ok(ldm_unordered(&mut buf, alpha))
}

fn ldm_unordered(counts: &mut [u64], alpha: f64) -> f64 {
    counts.sort_unstable();
    let cells = counts.len() as f64;
    let total: u64 = counts.iter().sum();
    let lg_alpha = ln_gamma(alpha);
    let mut acc = ln_gamma(cells * alpha) - ln_gamma(cells * alpha + total as f64);
    for &c in counts.iter().filter(|&&c| c > 0) {
        acc += ln_gamma(alpha + c as f64) - lg_alpha;
    }
    acc
}

/// Log evidences `(independence, dependence)` summed over observed slices.
pub fn log_evidence(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<(f64, f64)> {
    let counts = contingency_counts(d, x, y, z)?;
    let (xa, ya) = (counts.x_arity, counts.y_arity);
    let mut xm = vec![0u64; xa];
    let mut ym = vec![0u64; ya];
    let mut joint = vec![0u64; xa * ya];
    let (mut ind, mut dep) = (0.0, 0.0);
    for table in counts.cells.values() {
        xm.iter_mut().for_each(|c| *c = 0);
        ym.iter_mut().for_each(|c| *c = 0);
        for a in 0..xa {
            for b in 0..ya {
                let c = table[a * ya + b];
                xm[a] += c;
                ym[b] += c;
            }
        }
        joint.copy_from_slice(table);
        dep += ldm_unordered(&mut joint, alpha);
        // Addition is commutative in IEEE arithmetic, so swapping x and y
        // leaves this bit-identical.
        ind += ldm_unordered(&mut xm, alpha) + ldm_unordered(&mut ym, alpha);
    }
    Ok((ind, dep))
}

/// Posterior probabilities of `X ⊥ Y | Z` and its negation.
pub fn bayesian_ci_test(d: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<TestOutcome> {
    bayesian_ci_test_with_alpha(d, x, y, z, DEFAULT_ALPHA)
}

pub fn bayesian_ci_test_with_alpha(d: &Dataset, x: usize, y: usize, z: &[usize], alpha: f64) -> Result<TestOutcome> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
    }
    let (ind, dep) = log_evidence(d, x, y, z, alpha)?;
    Ok(TestOutcome::from_log_evidence(ind, dep))
}

type Key = (usize, usize, Vec<usize>);

fn canonical_key(x: usize, y: usize, z: &[usize]) -> Key {
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let mut z = z.to_vec();
    z.sort_unstable();
    (x, y, z)
}

/// Memoized test outcomes for one dataset, keyed by canonical `(x, y, z)`.
///
/// Safe to share across threads. Concurrent misses on the same key may both
/// compute; the first insertion wins and the computation is deterministic.
pub struct TestCache {
    alpha: f64,
    map: RwLock<HashMap<Key, TestOutcome>>,
    computed: AtomicU64,
    hits: AtomicU64,
}

impl Default for TestCache {
    fn default() -> Self {
        Self::new()
    }
}

impl TestCache {
    pub fn new() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            map: RwLock::new(HashMap::new()),
            computed: AtomicU64::new(0),
            hits: AtomicU64::new(0),
        }
    }

    pub fn with_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { alpha, ..Self::new() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tests_computed(&self) -> u64 {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn cache_hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached outcome, without computing or touching counters.
    pub fn peek(&self, x: usize, y: usize, z: &[usize]) -> Option<TestOutcome> {
        let key = canonical_key(x, y, z);
        self.map.read().expect("cache lock").get(&key).copied()
    }

    /// Outcome for `(x, y | z)`, computing and memoizing it on first access.
    pub fn outcome(&self, d: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<TestOutcome> {
        let key = canonical_key(x, y, z);
        if let Some(o) = self.map.read().expect("cache lock").get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*o);
        }
        let fresh = bayesian_ci_test_with_alpha(d, key.0, key.1, &key.2, self.alpha)?;
        let mut map = self.map.write().expect("cache lock");
        match map.entry(key) {
            std::collections::hash_map::Entry::Occupied(e) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Ok(*e.get())
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                self.computed.fetch_add(1, Ordering::Relaxed);
                Ok(*e.insert(fresh))
            }
        }
    }

    /// Log posterior of the assertion's kind.
    pub fn cached_test(&self, d: &Dataset, a: &Assertion) -> Result<f64> {
        Ok(self.outcome(d, a.x, a.y, &a.z)?.log_p(a.kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // lnΓ at small integers, from factorials.
    fn ln_fact(k: u64) -> f64 {
        (1..=k).map(|i| (i as f64).ln()).sum()
    }

    #[test]
    fn ldm_examples() {
        assert_eq!(log_dirichlet_multinomial(&[0, 0], 1.0).unwrap(), 0.0);
        let v = log_dirichlet_multinomial(&[1, 0], 1.0).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-12, "{v}");
        // lnΓ(2) − lnΓ(6) + 2·lnΓ(3) = ln(4/120)
        let expected = ln_fact(1) - ln_fact(5) + 2.0 * ln_fact(2);
        let v = log_dirichlet_multinomial(&[2, 2], 1.0).unwrap();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - (-3.401197)).abs() < 1e-6);
    }

    #[test]
    fn ldm_errors() {
        assert!(log_dirichlet_multinomial(&[], 1.0).is_err());
        assert!(log_dirichlet_multinomial(&[1], 0.0).is_err());
        assert!(log_dirichlet_multinomial(&[1], -1.0).is_err());
    }

    #[test]
    fn ldm_order_invariant_bitwise() {
        let a = log_dirichlet_multinomial(&[5, 0, 17, 3, 9, 1], 0.7).unwrap();
        let b = log_dirichlet_multinomial(&[9, 1, 3, 0, 5, 17], 0.7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn posterior_is_normalized_even_for_huge_gaps() {
        for gap in [-2000.0, -701.0, -3.0, 0.0, 1e-3, 40.0, 900.0] {
            let o = TestOutcome::from_log_evidence(0.0, gap);
            assert!(o.log_p_ind <= 0.0 && o.log_p_dep <= 0.0);
            assert!(o.log_p_ind.is_finite() && o.log_p_dep.is_finite());
            assert!((o.p_ind() + o.p_dep() - 1.0).abs() < 1e-9);
        }
    }

    fn copy_dataset(rows: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<u32> = (0..rows).map(|_| rng.gen_range(0..2)).collect();
        Dataset::with_arities(vec!["X".into(), "Y".into()], vec![2, 2], vec![x.clone(), x]).unwrap()
    }

    #[test]
    fn identical_columns_are_dependent() {
        let d = copy_dataset(1000);
        let o = bayesian_ci_test(&d, 0, 1, &[]).unwrap();
        assert!(o.p_dep() > 0.99);
        assert!(o.log_p_dep > o.log_p_ind);
    }

    #[test]
    fn dependence_concentrates_with_rows() {
        let ps: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&n| bayesian_ci_test(&copy_dataset(n), 0, 1, &[]).unwrap().p_dep())
            .collect();
        assert!(ps[0] <= ps[1] && ps[1] <= ps[2], "{ps:?}");
    }

    #[test]
    fn independent_columns_favor_independence() {
        let mut wins = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = (0..1000).map(|_| rng.gen_range(0..2)).collect();
            let y = (0..1000).map(|_| rng.gen_range(0..2)).collect();
            let d = Dataset::with_arities(vec!["X".into(), "Y".into()], vec![2, 2], vec![x, y]).unwrap();
            if bayesian_ci_test(&d, 0, 1, &[]).unwrap().p_ind() > 0.5 {
                wins += 1;
            }
        }
        assert!(wins >= 90, "{wins}/100");
    }

    fn random_dataset(seed: u64, n: usize, rows: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols = (0..n)
            .map(|i| (0..rows).map(|_| rng.gen_range(0..(2 + i as u32 % 3))).collect())
            .collect();
        Dataset::from_columns(crate::dataset::default_names(n), cols).unwrap()
    }

    #[test]
    fn symmetric_in_tested_pair() {
        let d = random_dataset(3, 5, 300);
        for z in [vec![], vec![2], vec![2, 4], vec![4, 3, 2]] {
            let a = bayesian_ci_test(&d, 0, 1, &z).unwrap();
            let b = bayesian_ci_test(&d, 1, 0, &z).unwrap();
            assert_eq!(a.log_p_ind.to_bits(), b.log_p_ind.to_bits());
            assert_eq!(a.log_p_dep.to_bits(), b.log_p_dep.to_bits());
        }
    }

    #[test]
    fn evidence_finite_with_large_conditioning_sets() {
        let d = random_dataset(5, 8, 40);
        let (ind, dep) = log_evidence(&d, 0, 1, &[2, 3, 4, 5, 6, 7], 1.0).unwrap();
        assert!(ind.is_finite() && dep.is_finite());
    }

    #[test]
    fn cache_counts_and_canonicalization() {
        let d = random_dataset(1, 4, 100);
        let cache = TestCache::new();
        let pi = cache.cached_test(&d, &Assertion::independence(0, 1, [3, 2])).unwrap();
        let pd = cache.cached_test(&d, &Assertion::dependence(1, 0, [2, 3])).unwrap();
        assert_eq!(cache.tests_computed(), 1);
        assert_eq!(cache.cache_hits(), 1);
        assert!((pi.exp() + pd.exp() - 1.0).abs() < 1e-9);
        cache.outcome(&d, 1, 0, &[3, 2]).unwrap();
        assert_eq!(cache.tests_computed(), 1);
        assert_eq!(cache.cache_hits(), 2);
        assert!(cache.peek(0, 1, &[2, 3]).is_some());
        assert!(cache.peek(0, 1, &[2]).is_none());
        assert_eq!(cache.cache_hits(), 2);
    }

    #[test]
    fn cache_matches_uncached() {
        let d = random_dataset(9, 5, 200);
        let cache = TestCache::new();
        let queries = [
            (0, 1, vec![]),
            (3, 2, vec![4]),
            (1, 0, vec![]),
            (2, 3, vec![4]),
            (4, 0, vec![1, 2]),
        ];
        for (x, y, z) in queries {
            let c = cache.outcome(&d, x, y, &z).unwrap();
            let u = bayesian_ci_test(&d, x, y, &z).unwrap();
            assert_eq!(c, u);
        }
        assert_eq!(cache.tests_computed(), 3);
    }

    #[test]
    fn cache_rejects_bad_alpha_and_bad_triplets() {
        assert!(TestCache::with_alpha(0.0).is_err());
        let d = random_dataset(2, 3, 10);
        let cache = TestCache::new();
        assert!(cache.outcome(&d, 0, 0, &[]).is_err());
        assert!(cache.outcome(&d, 0, 1, &[1]).is_err());
        assert_eq!(cache.tests_computed(), 0);
    }

    #[test]
    fn concurrent_cache_is_consistent() {
        use rayon::prelude::*;
        let d = random_dataset(4, 6, 200);
        let cache = TestCache::new();
        let results: Vec<TestOutcome> = (0..200)
            .into_par_iter()
            .map(|i| cache.outcome(&d, i % 3, 3 + i % 3, &[]).unwrap())
            .collect();
        for (i, r) in results.iter().enumerate() {
            assert_eq!(*r, bayesian_ci_test(&d, i % 3, 3 + i % 3, &[]).unwrap());
        }
        assert_eq!(cache.len(), 3);
        assert_eq!(cache.tests_computed(), 3);
        assert_eq!(cache.tests_computed() + cache.cache_hits(), 200);
    }
}
