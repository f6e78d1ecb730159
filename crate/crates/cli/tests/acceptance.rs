//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints its verdict line; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdsm::bench::{run_bench, summarize, BenchConfig, PlanShape};
use pdsm::compound::{default_recipe, one_level_recipes, run_compound, Strategy};
use pdsm::elemental::{elemental_round_bound, enumerate_trees, run_elemental, ElementalPlan};
use pdsm::gale_shapley::{gs, is_stable_2party, round_bound, Bijection};
use pdsm::generator::{generate, worst_case_rounds, GenSpec, Profile};
use pdsm::model::{read_instance, read_matching, write_instance, write_matching, ElementRef, Instance, Matching};
use pdsm::stability::{enumerate_stable, verify};

const ENUMERATE_LIMIT: Duration = Duration::from_secs(5);
const SCALING_R2_MIN: f64 = 0.9;
const DOUBLING_N_BAND: (f64, f64) = (2.0, 6.0);
const SCALING_LIMIT: Duration = Duration::from_secs(120);

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn pdsm_stdout(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_pdsm"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("pdsm {} exited with {:?}", args.join(" "), out.status.code()));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn counting() -> Outcome {
    let mut problems = Vec::new();
    for (p, expected) in [(2, "2"), (3, "12"), (4, "128"), (5, "2000")] {
        match pdsm_stdout(&["count", "-p", &p.to_string()]) {
            Ok(s) if s.trim() == expected => {}
            Ok(s) => problems.push(format!("count -p {p} printed {}", s.trim())),
            Err(e) => problems.push(e),
        }
    }
    let start = Instant::now();
    let mut sizes = Vec::new();
    for p in 2..=6 {
        let count = pdsm_stdout(&["count", "-p", &p.to_string()]).unwrap_or_default();
        match pdsm_stdout(&["enumerate", "-p", &p.to_string()]) {
            Ok(listing) => {
                let lines = listing.lines().count();
                if lines.to_string() != count.trim() {
                    problems.push(format!("p={p}: {lines} plans listed, count says {}", count.trim()));
                }
                sizes.push(lines);
            }
            Err(e) => problems.push(e),
        }
    }
    let elapsed = start.elapsed();
    if elapsed > ENUMERATE_LIMIT {
        problems.push(format!("enumeration took {elapsed:?}"));
    }
    let detail = if problems.is_empty() {
        format!("counts 2, 12, 128, 2000; enumerate sizes {sizes:?} in {elapsed:.2?}")
    } else {
        problems.join("; ")
    };
    Outcome::new(problems.is_empty(), detail)
}

/// Criterion 2, also returning `(rounds, bound)` for every run.
fn elemental_stability(rounds: &mut Vec<(usize, usize)>) -> Outcome {
    let mut runs = 0;
    let mut failures = Vec::new();
    for (p, n) in [(3, 2), (3, 3), (3, 4), (4, 2), (4, 3)] {
        let plans: Vec<ElementalPlan> = enumerate_trees(p).unwrap().map(ElementalPlan::new).collect();
        for seed in 0..50 {
            let inst = generate(&GenSpec::uniform(p, n, seed)).unwrap();
            for plan in &plans {
                let run = run_elemental(&inst, plan).unwrap();
                rounds.push((run.total_rounds(), elemental_round_bound(p, n)));
                runs += 1;
                if !verify(&inst, &run.matching).unwrap().stable {
                    failures.push(format!("p={p} n={n} seed={seed} plan {}", plan.tree));
                }
            }
        }
    }
    Outcome::new(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{runs} runs, all stable")
        } else {
            format!("{runs} runs, {} unstable, e.g. {}", failures.len(), failures[0])
        },
    )
}

fn compound_stability() -> Outcome {
    let recipes = one_level_recipes(4);
    let (mut tie_free, mut tie_free_unstable) = (0, 0);
    let (mut tied, mut tied_stable, mut tied_unstable) = (0, 0, 0);
    for n in [2, 3] {
        for seed in 0..50 {
            let inst = generate(&GenSpec::uniform(4, n, seed)).unwrap();
            for recipe in &recipes {
                let run = run_compound(&inst, recipe).unwrap();
                let stable = verify(&inst, &run.matching).unwrap().stable;
                if run.ties_broken() == 0 {
                    tie_free += 1;
                    tie_free_unstable += usize::from(!stable);
                } else {
                    tied += 1;
                    if stable {
                        tied_stable += 1;
                    } else {
                        tied_unstable += 1;
                    }
                }
            }
        }
    }
    Outcome::new(
        tie_free_unstable == 0 && tie_free > 0,
        format!(
            "{} recipes; tie-free runs {tie_free} ({tie_free_unstable} unstable); \
             runs with ties {tied} reported separately: {tied_stable} stable, {tied_unstable} unstable",
            recipes.len()
        ),
    )
}

fn round_bound_check(elemental: &[(usize, usize)]) -> Outcome {
    let mut runs = 0;
    let mut violations = 0;
    let mut max_fraction: f64 = 0.0;
    for seed in 0..1000u64 {
        let n = 1 + (seed as usize % 30);
        let inst = generate(&GenSpec::uniform(2, n, seed)).unwrap();
        let b = gs(&inst, 0, 1).unwrap();
        runs += 1;
        violations += usize::from(b.rounds_used > round_bound(n));
        if n > 1 {
            max_fraction = max_fraction.max(b.rounds_used as f64 / round_bound(n) as f64);
        }
    }
    let mut tight = 0;
    for n in 1..=30 {
        let b = gs(&worst_case_rounds(n), 0, 1).unwrap();
        runs += 1;
        violations += usize::from(b.rounds_used > round_bound(n));
        tight += usize::from(b.rounds_used == round_bound(n));
    }
    let elemental_violations = elemental.iter().filter(|(r, b)| r > b).count();
    Outcome::new(
        violations == 0 && elemental_violations == 0 && !elemental.is_empty(),
        format!(
            "{runs} two-party runs, {violations} over the bound (uniform n > 1 reach at most {:.2} of it, \
             worst-case family tight for {tight}/30 sizes); {} elemental runs, {elemental_violations} over (p-1)(n^2-2n+2)",
            max_fraction,
            elemental.len()
        ),
    )
}

fn optimality() -> Outcome {
    let mut failures = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 5);
        let inst = generate(&GenSpec::uniform(2, n, 5000 + seed)).unwrap();
        let b = gs(&inst, 0, 1).unwrap();
        let inv = b.inverse();
        let stable = enumerate_stable(&inst).unwrap();
        let partner_rank = |m: &Matching, x: ElementRef| inst.rank(x, m.relative(x, 1 - x.party).unwrap()).unwrap();
        for (i, &proposer_of_i) in inv.iter().enumerate() {
            let (x, y) = (ElementRef::new(0, i), ElementRef::new(1, i));
            let best = stable.iter().map(|m| partner_rank(m, x)).min().unwrap();
            let worst = stable.iter().map(|m| partner_rank(m, y)).max().unwrap();
            let got_x = inst.rank(x, ElementRef::new(1, b.pairs[i])).unwrap();
            let got_y = inst.rank(y, ElementRef::new(0, proposer_of_i)).unwrap();
            failures += usize::from(got_x != best) + usize::from(got_y != worst);
        }
    }
    Outcome::new(
        failures == 0,
        format!("100 instances, {failures} members off their extreme stable rank"),
    )
}

fn rows_of(inst: &Instance) -> Vec<Vec<Vec<Vec<usize>>>> {
    (0..2)
        .map(|a| {
            (0..inst.n())
                .map(|i| {
                    (0..2)
                        .map(|b| {
                            if a == b {
                                Vec::new()
                            } else {
                                inst.row(ElementRef::new(a, i), b).unwrap().to_vec()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Moves `w` to the front of `m`'s list and `m` to the front of `w`'s, then
/// returns a pairing that separates them.
fn plant(inst: &Instance, m: usize, w: usize, rng: &mut ChaCha8Rng) -> (Instance, Vec<usize>) {
    let n = inst.n();
    let mut rows = rows_of(inst);
    for (a, i, target, front) in [(0, m, 1, w), (1, w, 0, m)] {
        let row = &mut rows[a][i][target];
        row.retain(|&v| v != front);
        row.insert(0, front);
    }
    let names = inst.party_names().to_vec();
    let labels = (0..2).map(|a| inst.labels(a).to_vec()).collect();
    let planted = Instance::from_rows(names, labels, rows).unwrap();
    let mut pairs: Vec<usize> = (0..n).collect();
    loop {
        pairs.shuffle(rng);
        if pairs[m] != w {
            return (planted, pairs);
        }
    }
}

fn oracle_agreement() -> Outcome {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let mut cases: Vec<(Instance, Vec<usize>)> = Vec::new();
    let inst = read_instance(&std::fs::read_to_string(fixtures.join("2p2n_planted.json")).unwrap()).unwrap();
    let m = read_matching(
        &std::fs::read_to_string(fixtures.join("2p2n_planted_matching.json")).unwrap(),
        &inst,
    )
    .unwrap();
    let pairs = (0..2)
        .map(|i| m.relative(ElementRef::new(0, i), 1).unwrap().member)
        .collect();
    cases.push((inst, pairs));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..499u64 {
        let n = 2 + (seed as usize % 5);
        let inst = generate(&GenSpec::uniform(2, n, seed)).unwrap();
        match seed % 3 {
            0 => {
                let pairs = gs(&inst, 0, 1).unwrap().pairs;
                cases.push((inst, pairs));
            }
            1 => {
                let (m, w) = (rng.gen_range(0..n), rng.gen_range(0..n));
                cases.push(plant(&inst, m, w, &mut rng));
            }
            _ => {
                let mut pairs: Vec<usize> = (0..n).collect();
                pairs.shuffle(&mut rng);
                cases.push((inst, pairs));
            }
        }
    }
    let mut disagreements = 0;
    let mut unstable = 0;
    for (inst, pairs) in &cases {
        let bij = Bijection {
            proposer_party: 0,
            responder_party: 1,
            pairs: pairs.clone(),
            rounds_used: 0,
        };
        let oracle = verify(inst, &bij.to_matching()).unwrap().stable;
        disagreements += usize::from(oracle != is_stable_2party(inst, &bij));
        unstable += usize::from(!oracle);
    }
    Outcome::new(
        disagreements == 0,
        format!(
            "{} pairs ({unstable} unstable), {disagreements} disagreements",
            cases.len()
        ),
    )
}

fn degenerate_equivalence() -> Outcome {
    let mut mismatches = 0;
    let mut compared = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed as usize % 8);
        let inst = generate(&GenSpec::uniform(2, n, seed)).unwrap();
        let by_gs = write_matching(&gs(&inst, 0, 1).unwrap().to_matching(), &inst);
        let elemental = write_matching(
            &run_elemental(&inst, &ElementalPlan::path(2).unwrap()).unwrap().matching,
            &inst,
        );
        for strategy in [Strategy::Path, Strategy::BalancedBisection] {
            let recipe = default_recipe(2, strategy).unwrap();
            let compound = write_matching(&run_compound(&inst, &recipe).unwrap().matching, &inst);
            mismatches += usize::from(compound != by_gs || elemental != by_gs);
            compared += 1;
        }
    }
    let mut aligned_runs = 0;
    let mut aligned_failures = 0;
    for p in 2..=5 {
        for n in 1..=5 {
            let inst = generate(&GenSpec::new(p, n, 0, Profile::Aligned)).unwrap();
            for tree in enumerate_trees(p).unwrap() {
                let m = run_elemental(&inst, &ElementalPlan::new(tree)).unwrap().matching;
                aligned_runs += 1;
                let all_first = (0..p).all(|a| {
                    (0..n).all(|i| {
                        let x = ElementRef::new(a, i);
                        (0..p)
                            .filter(|&b| b != a)
                            .all(|b| inst.rank(x, m.relative(x, b).unwrap()).unwrap() == 1)
                    })
                });
                aligned_failures += usize::from(!all_first);
            }
        }
    }
    Outcome::new(
        mismatches == 0 && aligned_failures == 0,
        format!(
            "{compared} two-party comparisons, {mismatches} differ; {aligned_runs} aligned runs, \
             {aligned_failures} not mutual-first-choice"
        ),
    )
}

fn scaling() -> Outcome {
    let start = Instant::now();
    let cfg = BenchConfig {
        p_values: (3..=7).collect(),
        n_values: vec![4, 8, 16],
        seeds: 50,
        shape: PlanShape::Path,
        profile: Profile::Uniform,
        jobs: 1,
    };
    let records = match run_bench(&cfg) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let summary = summarize(&records);
    let fits: Vec<String> = summary
        .vs_parties
        .iter()
        .map(|(n, fit)| format!("n={n} R^2={:.3}", fit.r_squared))
        .collect();
    let fits_ok = summary.vs_parties.len() == 3 && summary.vs_parties.values().all(|f| f.r_squared >= SCALING_R2_MIN);
    let ratios: Vec<String> = summary
        .doubling_n
        .iter()
        .map(|(p, n, r)| format!("p={p} {n}->{}: {r:.2}", 2 * n))
        .collect();
    let ratios_ok = summary.doubling_n.len() == 10
        && summary
            .doubling_n
            .iter()
            .all(|&(_, _, r)| (DOUBLING_N_BAND.0..=DOUBLING_N_BAND.1).contains(&r));
    Outcome::new(
        fits_ok && ratios_ok && elapsed <= SCALING_LIMIT,
        format!("{}; doubling n: {}; {elapsed:.2?}", fits.join(", "), ratios.join(", ")),
    )
}

fn round_trip() -> Outcome {
    let mut failures = 0;
    for seed in 0..200u64 {
        let p = 2 + (seed as usize % 4);
        let n = 1 + (seed as usize % 6);
        let inst = generate(&GenSpec::uniform(p, n, seed)).unwrap();
        let text = write_instance(&inst);
        let back = read_instance(&text).unwrap();
        let m = run_elemental(&back, &ElementalPlan::path(p).unwrap()).unwrap().matching;
        let mtext = write_matching(&m, &inst);
        let mback = read_matching(&mtext, &back).unwrap();
        failures += usize::from(write_instance(&back) != text || write_matching(&mback, &back) != mtext);
    }
    Outcome::new(
        failures == 0,
        format!("200 instances and matchings, {failures} changed on rewrite"),
    )
}

fn main() -> ExitCode {
    let mut all_passed = true;
    let mut report = |k: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        all_passed &= outcome.passed;
        println!(
            "{} criterion {k} {name}: {} [{:.2?}]",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed()
        );
    };
    let mut elemental_rounds = Vec::new();
    report(1, "counting", &mut counting);
    report(2, "elemental stability", &mut || {
        elemental_stability(&mut elemental_rounds)
    });
    report(3, "compound stability", &mut compound_stability);
    report(4, "round bound", &mut || round_bound_check(&elemental_rounds));
    report(5, "proposer optimality", &mut optimality);
    report(6, "oracle agreement", &mut oracle_agreement);
    report(7, "degenerate equivalence", &mut degenerate_equivalence);
    report(8, "empirical scaling", &mut scaling);
    report(9, "round trip", &mut round_trip);
    if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
