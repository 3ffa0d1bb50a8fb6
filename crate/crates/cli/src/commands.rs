use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;

use ibmap::baselines::{gsmn, EdgeCombine, GsmnConfig};
use ibmap::eda::{critical_population_search, moa_run, EdaConfig, Fitness, Learner, RunResult};
use ibmap::eval::{accuracy, f_measure, landscape as score_landscape, standard_triplet_sample, FMode};
use ibmap::graph::{hamming, Structure};
use ibmap::search::{ibmap_hc, SearchConfig, SearchResult, SearchStatus};
use ibmap::synth::{gibbs_sample, ising_structure, pairwise_model, random_structure, DEFAULT_BURN_IN, DEFAULT_THIN};
use ibmap::Dataset;

use crate::record::{RunRecord, Sink};
use crate::{
    Algo, BenchArgs, Combine, EdaArgs, EvalArgs, FitnessKind, GenArgs, LandscapeArgs, LearnArgs, LearnerKind, ModelArgs,
};

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn parse_grid(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("grid must look like ROWSxCOLS, got {s:?}"))?;
    Ok((r.trim().parse()?, c.trim().parse()?))
}

/// Generating structure and the record fields that describe it.
fn model_structure(m: &ModelArgs, rec: &mut RunRecord) -> Result<Structure> {
    let g = match &m.ising {
        Some(grid) => {
            let (r, c) = parse_grid(grid)?;
            rec.topology = Some(format!("ising:{r}x{c}"));
            ising_structure(r, c)?
        }
        None => {
            let n = m.n.context("--n is required")?;
            rec.tau = Some(m.tau);
            rec.topology = Some("random".into());
            random_structure(n, m.tau, m.seed)?
        }
    };
    rec.n = Some(g.n());
    rec.seed = Some(m.seed);
    Ok(g)
}

/// Hamming distance and F-measures of `learned` against `truth`.
fn compare(learned: &Structure, truth: &Structure, seed: u64, rec: &mut RunRecord) -> Result<()> {
    rec.hamming = Some(hamming(learned, truth)?);
    rec.f_edges = Some(f_measure(learned, truth, FMode::Edges, None)?);
    rec.f_nonedges = Some(f_measure(learned, truth, FMode::Nonedges, None)?);
    if truth.n() >= 2 {
        let sample = standard_triplet_sample(truth.n(), seed)?;
        rec.f_triplets = Some(f_measure(learned, truth, FMode::Triplets, Some(&sample))?);
    }
    Ok(())
}

fn search_fields(r: &SearchResult, rec: &mut RunRecord) {
    rec.tests_computed = Some(r.tests_computed);
    rec.cache_hits = Some(r.cache_hits);
    rec.score = Some(r.score.total);
    rec.status = Some(
        match r.status {
            SearchStatus::Converged => "converged",
            SearchStatus::IterationLimit => "iteration_limit",
        }
        .into(),
    );
}

fn run_algo(
    algo: Algo,
    d: &Dataset,
    alpha: f64,
    max_iterations: Option<usize>,
    combine: Combine,
) -> Result<SearchResult> {
    Ok(match algo {
        Algo::IbmapHc => ibmap_hc(
            d,
            &SearchConfig {
                max_iterations,
                alpha,
                ..SearchConfig::default()
            },
        )?,
        Algo::Gsmn => gsmn(
            d,
            &GsmnConfig {
                alpha,
                combine: match combine {
                    Combine::Or => EdgeCombine::Or,
                    Combine::And => EdgeCombine::And,
                },
                ..GsmnConfig::default()
            },
        )?,
    })
}

fn algo_name(a: Algo) -> &'static str {
    match a {
        Algo::IbmapHc => "ibmap-hc",
        Algo::Gsmn => "gsmn",
    }
}

pub fn gen(a: &GenArgs, sink: &mut Sink) -> Result<()> {
    let start = Instant::now();
    let mut rec = RunRecord::new("gen");
    let g = model_structure(&a.model, &mut rec)?;
    let model = pairwise_model(&g, a.model.epsilon, a.model.seed)?;
    let all = gibbs_sample(&model, a.rows + a.test_rows, a.burn_in, a.thin, a.model.seed)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    all.head(a.rows).write_csv(a.out_dir.join(format!("{}.csv", a.name)))?;
    if a.test_rows > 0 {
        all.slice_rows(a.rows, a.rows + a.test_rows)
            .write_csv(a.out_dir.join(format!("{}.test.csv", a.name)))?;
    }
    g.save(a.out_dir.join(format!("{}.json", a.name)))?;
    rec.rows = Some(a.rows);
    rec.runtime_ms = ms_since(start);
    sink.emit(&rec)
}

pub fn learn(a: &LearnArgs, sink: &mut Sink) -> Result<()> {
    let d = Dataset::load_csv(&a.data)?;
    let truth = a.truth.as_deref().map(Structure::load).transpose()?;
    let start = Instant::now();
    let r = run_algo(a.algo, &d, a.alpha, a.max_iterations, a.combine)?;
    let mut rec = RunRecord::new("learn");
    rec.runtime_ms = ms_since(start);
    r.structure.save(&a.out)?;
    rec.algorithm = Some(algo_name(a.algo).into());
    rec.n = Some(d.n_vars());
    rec.rows = Some(d.n_rows());
    rec.seed = Some(a.seed);
    search_fields(&r, &mut rec);
    if a.algo == Algo::IbmapHc {
        rec.ascents = Some(r.ascents);
    }
    if let Some(t) = &truth {
        compare(&r.structure, t, a.seed, &mut rec)?;
    }
    sink.emit(&rec)
}

pub fn eval(a: &EvalArgs, sink: &mut Sink) -> Result<()> {
    let start = Instant::now();
    let learned = Structure::load(&a.learned)?;
    let mut rec = RunRecord::new("eval");
    rec.n = Some(learned.n());
    rec.seed = Some(a.seed);
    if let Some(p) = &a.truth {
        compare(&learned, &Structure::load(p)?, a.seed, &mut rec)?;
    }
    if let Some(p) = &a.test {
        let test = Dataset::load_csv(p)?;
        ensure!(learned.n() >= 2, "accuracy needs at least two variables");
        rec.accuracy = Some(accuracy(
            &test,
            &learned,
            &standard_triplet_sample(learned.n(), a.seed)?,
        )?);
        rec.rows = Some(test.n_rows());
    }
    rec.runtime_ms = ms_since(start);
    sink.emit(&rec)
}

pub fn landscape(a: &LandscapeArgs, sink: &mut Sink) -> Result<()> {
    let start = Instant::now();
    let mut rec = RunRecord::new("landscape");
    let (d, truth) = match (&a.data, &a.truth) {
        (Some(dp), Some(tp)) => (Dataset::load_csv(dp)?, Structure::load(tp)?),
        (None, None) => {
            let (n, rows) = match (a.n, a.rows) {
                (Some(n), Some(rows)) => (n, rows),
                _ => bail!("give either --data and --true, or --n and --rows"),
            };
            let g = random_structure(n, a.tau, a.seed)?;
            let m = pairwise_model(&g, a.epsilon, a.seed)?;
            rec.tau = Some(a.tau);
            rec.topology = Some("random".into());
            (gibbs_sample(&m, rows, DEFAULT_BURN_IN, DEFAULT_THIN, a.seed)?, g)
        }
        _ => bail!("--data and --true go together"),
    };
    let l = score_landscape(&d, &truth)?;
    write_atomic(&a.out, l.to_table().as_bytes())?;
    rec.seed = Some(a.seed);
    rec.n = Some(d.n_vars());
    rec.rows = Some(d.n_rows());
    rec.algorithm = Some("ibmap-hc".into());
    rec.hamming = Some(l.hill_climb.hamming);
    rec.score = Some(l.hill_climb.score);
    rec.ascents = Some(l.hill_climb_ascents);
    rec.argmax_index = Some(l.argmax.structure_index);
    rec.argmax_score = Some(l.argmax.score);
    rec.hc_rank = Some(l.hill_climb_rank());
    rec.spearman = Some(l.score_hamming_spearman());
    rec.runtime_ms = ms_since(start);
    sink.emit(&rec)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))
}

fn eda_record(cfg: &EdaConfig, r: &RunResult) -> RunRecord {
    let mut rec = RunRecord::new("eda");
    rec.seed = Some(cfg.seed);
    rec.n = Some(cfg.n);
    rec.rows = Some(cfg.population_size);
    rec.algorithm = Some(cfg.learner.name());
    rec.fitness = Some(cfg.fitness.name());
    rec.success = Some(r.success);
    rec.generations = Some(r.generations);
    rec.f_star = Some(r.fitness_evaluations);
    rec
}

pub fn eda(a: &EdaArgs, sink: &mut Sink) -> Result<()> {
    let fitness = match a.fitness {
        FitnessKind::Onemax => Fitness::OneMax,
        FitnessKind::RoyalRoad => Fitness::RoyalRoad(a.gamma),
        FitnessKind::Zeromax => Fitness::ZeroMax,
    };
    let learner = match a.learner {
        LearnerKind::IbmapHc => Learner::IbmapHc,
        LearnerKind::Mi => Learner::Mi {
            k: a.k,
            threshold: a.threshold,
        },
    };
    let cfg = EdaConfig {
        selection: a.selection,
        elitism: a.elitism,
        max_generations: a.max_generations,
        ..EdaConfig::new(a.n, fitness, learner, a.population, a.seed)
    };
    let start = Instant::now();
    if !a.critical {
        let r = moa_run(&cfg)?;
        let mut rec = eda_record(&cfg, &r);
        rec.runtime_ms = ms_since(start);
        return sink.emit(&rec);
    }
    let c = critical_population_search(&cfg, &a.ladder, a.repetitions)?;
    let elapsed = ms_since(start);
    for rung in &c.rungs {
        for (i, r) in rung.runs.iter().enumerate() {
            let run_cfg = EdaConfig {
                population_size: rung.population_size,
                seed: cfg.seed.wrapping_add(i as u64),
                ..cfg.clone()
            };
            sink.emit(&eda_record(&run_cfg, r))?;
        }
    }
    let mut rec = RunRecord::new("eda");
    rec.seed = Some(cfg.seed);
    rec.n = Some(cfg.n);
    rec.algorithm = Some(cfg.learner.name());
    rec.fitness = Some(cfg.fitness.name());
    rec.status = Some("critical".into());
    rec.success = Some(c.d_star.is_some());
    rec.d_star = c.d_star;
    rec.rows = c.d_star;
    rec.f_star_mean = c.f_star_mean;
    rec.f_star_std = c.f_star_std;
    rec.runtime_ms = elapsed;
    sink.emit(&rec)
}

/// Records for one generated network: every (D, algorithm) pair on nested
/// prefixes of a single sampled dataset.
fn bench_cell(a: &BenchArgs, n: usize, tau: f64, seed: u64, max_rows: usize) -> Result<Vec<RunRecord>> {
    let g = random_structure(n, tau, seed)?;
    let m = pairwise_model(&g, a.epsilon, seed)?;
    let all = gibbs_sample(&m, max_rows + a.test_rows, DEFAULT_BURN_IN, DEFAULT_THIN, seed)?;
    let test = (a.test_rows > 0).then(|| all.slice_rows(max_rows, max_rows + a.test_rows));
    let sample = standard_triplet_sample(n, seed)?;
    let mut out = Vec::new();
    for &rows in &a.rows {
        let d = all.head(rows);
        for &algo in &a.algos {
            let start = Instant::now();
            let r = run_algo(algo, &d, ibmap::citest::DEFAULT_ALPHA, None, Combine::Or)?;
            let mut rec = RunRecord::new("bench");
            rec.runtime_ms = ms_since(start);
            rec.seed = Some(seed);
            rec.algorithm = Some(algo_name(algo).into());
            rec.n = Some(n);
            rec.tau = Some(tau);
            rec.topology = Some("random".into());
            rec.rows = Some(rows);
            search_fields(&r, &mut rec);
            if algo == Algo::IbmapHc {
                rec.ascents = Some(r.ascents);
            }
            rec.hamming = Some(hamming(&r.structure, &g)?);
            rec.f_edges = Some(f_measure(&r.structure, &g, FMode::Edges, None)?);
            rec.f_nonedges = Some(f_measure(&r.structure, &g, FMode::Nonedges, None)?);
            rec.f_triplets = Some(f_measure(&r.structure, &g, FMode::Triplets, Some(&sample))?);
            if let Some(t) = &test {
                rec.accuracy = Some(accuracy(t, &r.structure, &sample)?);
            }
            out.push(rec);
        }
    }
    Ok(out)
}

pub fn bench(a: &BenchArgs, sink: &mut Sink) -> Result<()> {
    let max_rows = *a.rows.iter().max().context("--rows is empty")?;
    ensure!(!a.algos.is_empty(), "--algos is empty");
    let cells: Vec<(usize, f64, u64)> =
        a.n.iter()
            .flat_map(|&n| {
                a.tau
                    .iter()
                    .flat_map(move |&tau| (0..a.seeds).map(move |s| (n, tau, s)))
            })
            .map(|(n, tau, s)| (n, tau, a.seed + s))
            .collect();
    let results: Vec<Vec<RunRecord>> = cells
        .par_iter()
        .map(|&(n, tau, seed)| bench_cell(a, n, tau, seed, max_rows))
        .collect::<Result<_>>()?;
    for rec in results.iter().flatten() {
        sink.emit(rec)?;
    }
    Ok(())
}
