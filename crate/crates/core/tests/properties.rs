use proptest::prelude::*;

use ibmap::citest::log_evidence;
use ibmap::eda::{moa_run, EdaConfig, Fitness, Learner};
use ibmap::eval::{f_measure, precision_recall, FMode};
use ibmap::graph::{hamming, Structure};
use ibmap::ibscore::{ib_score, mb_closure, rescore_after_flip, sigma_xy, variable_score};
use ibmap::{bayesian_ci_test, contingency_counts, Dataset, Kind, TestCache};

fn structure(max_n: usize) -> impl Strategy<Value = Structure> {
    (2..=max_n).prop_flat_map(|n| {
        proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
            let edges: Vec<_> = ibmap::graph::all_pairs(n)
                .zip(bits)
                .filter_map(|(p, b)| b.then_some(p))
                .collect();
            Structure::from_edges(n, &edges).unwrap()
        })
    })
}

fn same_n_structures(k: usize, max_n: usize) -> impl Strategy<Value = Vec<Structure>> {
    (2..=max_n).prop_flat_map(move |n| {
        proptest::collection::vec(proptest::collection::vec(any::<bool>(), n * (n - 1) / 2), k).prop_map(move |all| {
            all.into_iter()
                .map(|bits| {
                    let edges: Vec<_> = ibmap::graph::all_pairs(n)
                        .zip(bits)
                        .filter_map(|(p, b)| b.then_some(p))
                        .collect();
                    Structure::from_edges(n, &edges).unwrap()
                })
                .collect()
        })
    })
}

/// Small categorical dataset: `n` variables of arity 2 or 3.
fn dataset(max_vars: usize, max_rows: usize) -> impl Strategy<Value = Dataset> {
    (3..=max_vars, 1..=max_rows).prop_flat_map(|(n, rows)| {
        proptest::collection::vec(2u32..=3, n).prop_flat_map(move |arities| {
            let cols: Vec<_> = arities.iter().map(|&a| proptest::collection::vec(0..a, rows)).collect();
            (Just(arities), cols).prop_map(|(arities, cols)| {
                let names = (0..cols.len()).map(|i| format!("V{i}")).collect();
                Dataset::with_arities(names, arities, cols).unwrap()
            })
        })
    })
}

fn binary_dataset(n: usize, max_rows: usize) -> impl Strategy<Value = Dataset> {
    (1..=max_rows).prop_flat_map(move |rows| {
        proptest::collection::vec(proptest::collection::vec(0u32..2, rows), n).prop_map(move |cols| {
            let names = (0..n).map(|i| format!("X{i}")).collect();
            Dataset::with_arities(names, vec![2; n], cols).unwrap()
        })
    })
}

/// Triplet `(x, y, z)` over `n` nodes with `z` drawn from a bit mask.
fn triplet_in(n: usize) -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (0..n, 0..n - 1, any::<u64>()).prop_map(move |(x, y, mask)| {
        let y = if y >= x { y + 1 } else { y };
        let z = (0..n).filter(|&v| v != x && v != y && mask >> v & 1 == 1).collect();
        (x, y, z)
    })
}

fn with_triplet(g: impl Strategy<Value = Structure>) -> impl Strategy<Value = (Structure, (usize, usize, Vec<usize>))> {
    g.prop_flat_map(|g| {
        let n = g.n();
        (Just(g), triplet_in(n))
    })
}

fn data_with_triplet(max_vars: usize, max_rows: usize) -> impl Strategy<Value = (Dataset, (usize, usize, Vec<usize>))> {
    dataset(max_vars, max_rows).prop_flat_map(|d| {
        let n = d.n_vars();
        (Just(d), triplet_in(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strong_union((g, (x, y, z)) in with_triplet(structure(12))) {
        if g.u_separated(x, y, &z).unwrap() {
            for w in (0..g.n()).filter(|&w| w != x && w != y && !z.contains(&w)) {
                let mut zw = z.clone();
                zw.push(w);
                prop_assert!(g.u_separated(x, y, &zw).unwrap());
            }
        }
    }

    #[test]
    fn pairwise_property(g in structure(12)) {
        let n = g.n();
        for x in 0..n {
            for y in x + 1..n {
                let rest: Vec<_> = (0..n).filter(|&v| v != x && v != y).collect();
                prop_assert_eq!(g.u_separated(x, y, &rest).unwrap(), !g.has_edge(x, y));
            }
        }
    }

    #[test]
    fn u_separation_is_symmetric((g, (x, y, z)) in with_triplet(structure(12))) {
        prop_assert_eq!(g.u_separated(x, y, &z).unwrap(), g.u_separated(y, x, &z).unwrap());
    }

    #[test]
    fn hamming_is_a_metric(gs in same_n_structures(3, 10)) {
        let (a, b, c) = (&gs[0], &gs[1], &gs[2]);
        let h = |p: &Structure, q: &Structure| hamming(p, q).unwrap();
        prop_assert_eq!(h(a, a), 0);
        prop_assert_eq!(h(a, b) == 0, a == b);
        prop_assert_eq!(h(a, b), h(b, a));
        prop_assert!(h(a, c) <= h(a, b) + h(b, c));
    }

    #[test]
    fn closure_completeness(g in structure(15)) {
        let n = g.n();
        let closure = mb_closure(&g);
        prop_assert_eq!(closure.len(), n * (n - 1));
        let mut rebuilt = Structure::empty(n);
        for a in &closure {
            let sep = g.u_separated(a.x, a.y, &a.z).unwrap();
            match a.kind {
                Kind::Independence => prop_assert!(sep),
                Kind::Dependence => {
                    prop_assert!(!sep);
                    if !rebuilt.has_edge(a.x, a.y) {
                        rebuilt.flip_in_place(a.x, a.y).unwrap();
                    }
                }
            }
        }
        prop_assert_eq!(rebuilt, g);
    }

    #[test]
    fn swapping_roles_transposes_tables((d, (x, y, z)) in data_with_triplet(5, 40)) {
        let xy = contingency_counts(&d, x, y, &z).unwrap();
        let yx = contingency_counts(&d, y, x, &z).unwrap();
        prop_assert_eq!(xy.transposed(), yx);
    }

    #[test]
    fn marginalizing_a_conditioning_variable((d, (x, y, z)) in data_with_triplet(5, 40)) {
        let free: Vec<_> = (0..d.n_vars()).filter(|&w| w != x && w != y && !z.contains(&w)).collect();
        prop_assume!(!free.is_empty());
        let w = free[0];
        let mut zw = z.clone();
        zw.push(w);
        let fine = contingency_counts(&d, x, y, &zw).unwrap();
        let coarse = contingency_counts(&d, x, y, &z).unwrap();
        let mut summed = std::collections::BTreeMap::<Vec<u32>, Vec<u64>>::new();
        for (key, table) in &fine.cells {
            let entry = summed.entry(key[..z.len()].to_vec()).or_insert_with(|| vec![0; table.len()]);
            for (e, v) in entry.iter_mut().zip(table) {
                *e += v;
            }
        }
        prop_assert_eq!(summed, coarse.cells);
    }

    #[test]
    fn csv_round_trip_is_deterministic(d in dataset(5, 30)) {
        let text = d.to_csv_string();
        let a = Dataset::parse_csv(&text).unwrap();
        let b = Dataset::parse_csv(&text).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.to_csv_string(), text);
    }

    #[test]
    fn evidence_is_finite((d, (x, y, z)) in data_with_triplet(5, 40)) {
        let (ind, dep) = log_evidence(&d, x, y, &z, 1.0).unwrap();
        prop_assert!(ind.is_finite() && dep.is_finite());
        let o = bayesian_ci_test(&d, x, y, &z).unwrap();
        prop_assert!((o.p_ind() + o.p_dep() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cache_is_transparent(
        (d, queries) in dataset(5, 40).prop_flat_map(|d| {
            let n = d.n_vars();
            (Just(d), proptest::collection::vec(triplet_in(n), 1..30))
        })
    ) {
        let cache = TestCache::new();
        for (x, y, z) in &queries {
            let cached = cache.outcome(&d, *x, *y, z).unwrap();
            let fresh = bayesian_ci_test(&d, *x, *y, z).unwrap();
            prop_assert_eq!(cached, fresh);
        }
        prop_assert_eq!(cache.tests_computed() + cache.cache_hits(), queries.len() as u64);
    }

    #[test]
    fn score_decomposes_over_ordered_pairs((d, g) in binary_dataset(6, 60).prop_flat_map(|d| (Just(d), structure(6).prop_filter("n = 6", |g| g.n() == 6)))) {
        let cache = TestCache::new();
        let s = ib_score(&d, &g, &cache).unwrap();
        let mut flat = 0.0;
        for x in 0..6 {
            for y in (0..6).filter(|&y| y != x) {
                flat += sigma_xy(&d, &g, x, y, &cache).unwrap();
            }
        }
        prop_assert!((s.total - flat).abs() < 1e-9);
        for x in 0..6 {
            prop_assert!((s.per_variable[x] - variable_score(&d, &g, x, &cache).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn flip_chains_match_cold_scores(
        (d, g, flips) in (binary_dataset(7, 80), structure(7).prop_filter("n = 7", |g| g.n() == 7),
            proptest::collection::vec((0usize..7, 0usize..6), 1..=10))
    ) {
        let cache = TestCache::new();
        let mut g = g;
        let mut s = ib_score(&d, &g, &cache).unwrap();
        for (x, y) in flips {
            let y = if y >= x { y + 1 } else { y };
            let (next, ns) = rescore_after_flip(&d, &g, &s, x, y, &cache).unwrap();
            g = next;
            s = ns;
            let cold = ib_score(&d, &g, &TestCache::new()).unwrap();
            prop_assert!((s.total - cold.total).abs() < 1e-9);
        }
    }

    #[test]
    fn precision_and_recall_swap_with_roles(gs in same_n_structures(2, 8)) {
        let (a, b) = (&gs[0], &gs[1]);
        let (p, r) = precision_recall(a, b, FMode::Edges, None).unwrap();
        let (p2, r2) = precision_recall(b, a, FMode::Edges, None).unwrap();
        prop_assert_eq!((p, r), (r2, p2));
        if p == r {
            prop_assert_eq!(f_measure(a, b, FMode::Edges, None).unwrap(), f_measure(b, a, FMode::Edges, None).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eda_runs_are_reproducible_and_elitist(seed in any::<u64>(), n in 4usize..12, mi in any::<bool>()) {
        let learner = if mi { Learner::mi(1) } else { Learner::IbmapHc };
        let cfg = EdaConfig { max_generations: 40, ..EdaConfig::new(n, Fitness::OneMax, learner, 20, seed) };
        let a = moa_run(&cfg).unwrap();
        prop_assert_eq!(&a, &moa_run(&cfg).unwrap());
        prop_assert!(a.best_trace.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(a.best_trace.len(), a.generations + 1);
        prop_assert_eq!(a.fitness_evaluations, 20 + 10 * a.generations as u64);
    }
}
