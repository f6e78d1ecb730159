//! Round-count benchmark for elemental runs.
//!
//! Each record is one `(p, n, seed)` run; the total round count is checked
//! against `(p - 1)(n^2 - 2n + 2)` before it is reported.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::elemental::{elemental_round_bound, run_elemental, DirectedTree, ElementalPlan};
use crate::error::{Error, Result};
use crate::generator::{generate, GenSpec, Profile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlanShape {
    Path,
    Star,
    /// Uniform Prüfer sequence and orientation drawn from the record's seed.
    Random,
}

impl FromStr for PlanShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<PlanShape> {
        match s {
            "path" => Ok(PlanShape::Path),
            "star" => Ok(PlanShape::Star),
            "random" => Ok(PlanShape::Random),
            other => Err(Error::Parse(format!(
                "unknown plan shape '{other}', expected path, star or random"
            ))),
        }
    }
}

impl fmt::Display for PlanShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlanShape::Path => "path",
            PlanShape::Star => "star",
            PlanShape::Random => "random",
        })
    }
}

pub fn plan_for(shape: PlanShape, p: usize, seed: u64) -> Result<ElementalPlan> {
    let tree = match shape {
        PlanShape::Path => DirectedTree::path(p)?,
        PlanShape::Star => DirectedTree::star(p)?,
        PlanShape::Random => {
            // distinct stream from the instance generator's
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
            let seq: Vec<usize> = (0..p.saturating_sub(2)).map(|_| rng.gen_range(0..p)).collect();
            let mask = rng.gen_range(0..1u64 << (p - 1));
            DirectedTree::from_prufer(&seq, mask)?
        }
    };
    Ok(ElementalPlan::new(tree))
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub p_values: Vec<usize>,
    pub n_values: Vec<usize>,
    pub seeds: u64,
    pub shape: PlanShape,
    pub profile: Profile,
    pub jobs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub p: usize,
    pub n: usize,
    pub seed: u64,
    pub shape: PlanShape,
    pub total_rounds: usize,
    pub wall_time: Duration,
    pub bound: usize,
}

fn bench_one(p: usize, n: usize, seed: u64, cfg: &BenchConfig) -> Result<BenchRecord> {
    let instance = generate(&GenSpec::new(p, n, seed, cfg.profile))?;
    let plan = plan_for(cfg.shape, p, seed)?;
    let start = Instant::now();
    let run = run_elemental(&instance, &plan)?;
    let wall_time = start.elapsed();
    let bound = elemental_round_bound(p, n);
    let total_rounds = run.total_rounds();
    if total_rounds > bound {
        return Err(Error::RoundBound {
            p,
            n,
            seed,
            rounds: total_rounds,
            bound,
        });
    }
    Ok(BenchRecord {
        p,
        n,
        seed,
        shape: cfg.shape,
        total_rounds,
        wall_time,
        bound,
    })
}

/// Runs every `(p, n, seed)` combination, in that nesting order.
pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.p_values.is_empty() || cfg.n_values.is_empty() || cfg.seeds == 0 {
        return Err(Error::Parse("bench ranges must be nonempty".into()));
    }
    let jobs: Vec<(usize, usize, u64)> = cfg
        .p_values
        .iter()
        .flat_map(|&p| {
            cfg.n_values
                .iter()
                .flat_map(move |&n| (0..cfg.seeds).map(move |s| (p, n, s)))
        })
        .collect();
    if cfg.jobs <= 1 {
        jobs.iter().map(|&(p, n, s)| bench_one(p, n, s, cfg)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::structure("jobs", e.to_string()))?;
        pool.install(|| jobs.par_iter().map(|&(p, n, s)| bench_one(p, n, s, cfg)).collect())
    }
}

pub const CSV_HEADER: &str = "p,n,seed,shape,total_rounds,wall_time_ns,rounds_bound";

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.p,
            r.n,
            r.seed,
            r.shape,
            r.total_rounds,
            r.wall_time.as_nanos(),
            r.bound
        ));
    }
    out
}

/// Ordinary least squares fit `y = slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let len = xs.len();
    if len < 2 || ys.len() != len {
        return None;
    }
    let mean_x = xs.iter().sum::<f64>() / len as f64;
    let mean_y = ys.iter().sum::<f64>() / len as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Mean total rounds per `(p, n)`.
pub fn mean_rounds(records: &[BenchRecord]) -> BTreeMap<(usize, usize), f64> {
    let mut acc: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for r in records {
        let e = acc.entry((r.p, r.n)).or_default();
        e.0 += r.total_rounds;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(k, (sum, c))| (k, sum as f64 / c as f64))
        .collect()
}

#[derive(Clone, Debug)]
pub struct BenchSummary {
    pub means: BTreeMap<(usize, usize), f64>,
    /// Fit of mean rounds against `p - 1`, one per `n`.
    pub vs_parties: BTreeMap<usize, LinearFit>,
    /// Fit of mean rounds against `n^2`, one per `p`.
    pub vs_n_squared: BTreeMap<usize, LinearFit>,
    /// `mean(p, 2n) / mean(p, n)` for every `n` whose double was measured.
    pub doubling_n: Vec<(usize, usize, f64)>,
}

pub fn summarize(records: &[BenchRecord]) -> BenchSummary {
    let means = mean_rounds(records);
    let ps: Vec<usize> = means
        .keys()
        .map(|k| k.0)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let ns: Vec<usize> = means
        .keys()
        .map(|k| k.1)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut vs_parties = BTreeMap::new();
    for &n in &ns {
        let (xs, ys): (Vec<f64>, Vec<f64>) = ps
            .iter()
            .filter_map(|&p| means.get(&(p, n)).map(|&m| ((p - 1) as f64, m)))
            .unzip();
        if let Some(fit) = fit_line(&xs, &ys) {
            vs_parties.insert(n, fit);
        }
    }
    let mut vs_n_squared = BTreeMap::new();
    let mut doubling_n = Vec::new();
    for &p in &ps {
        let (xs, ys): (Vec<f64>, Vec<f64>) = ns
            .iter()
            .filter_map(|&n| means.get(&(p, n)).map(|&m| ((n * n) as f64, m)))
            .unzip();
        if let Some(fit) = fit_line(&xs, &ys) {
            vs_n_squared.insert(p, fit);
        }
        for &n in &ns {
            if let (Some(a), Some(b)) = (means.get(&(p, n)), means.get(&(p, 2 * n))) {
                doubling_n.push((p, n, b / a));
            }
        }
    }
    BenchSummary {
        means,
        vs_parties,
        vs_n_squared,
        doubling_n,
    }
}

fn signed(x: f64) -> String {
    if x < 0.0 {
        format!("- {:.3}", -x)
    } else {
        format!("+ {x:.3}")
    }
}

impl fmt::Display for BenchSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, fit) in &self.vs_parties {
            writeln!(
                f,
                "n={n}: mean rounds ~ {:.3} * (p-1) {}, R^2 = {:.4}",
                fit.slope,
                signed(fit.intercept),
                fit.r_squared
            )?;
        }
        for (p, fit) in &self.vs_n_squared {
            writeln!(
                f,
                "p={p}: mean rounds ~ {:.4} * n^2 {}, R^2 = {:.4}",
                fit.slope,
                signed(fit.intercept),
                fit.r_squared
            )?;
        }
        for (p, n, ratio) in &self.doubling_n {
            writeln!(f, "p={p}: mean rounds n={} / n={n} = {ratio:.3}", 2 * n)?;
        }
        Ok(())
    }
}
