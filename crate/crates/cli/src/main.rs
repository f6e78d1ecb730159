//! `pdsm`: generate, solve, verify and benchmark p-party stable marriage
//! instances.
//!
//! Exit codes: 0 success, 1 bad input, 2 plan or recipe does not fit the
//! instance, 3 matching is unstable, 4 a round bound was exceeded.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pdsm::bench::{self, BenchConfig, PlanShape};
use pdsm::compound::{default_recipe, run_compound, CompoundRecipe, Strategy};
use pdsm::elemental::{
    count_elemental, enumerate_trees_up_to, parse_shorthand, run_elemental, ElementalPlan, DEFAULT_MAX_ENUM_P,
};
use pdsm::generator::{generate, GenSpec, Profile};
use pdsm::model::{read_instance, read_matching, write_instance, write_matching, Instance};
use pdsm::stability::{verify_with, VerifyOptions, DEFAULT_MAX_CANDIDATES, DEFAULT_WITNESS_CAP};
use pdsm::Error;

const EXIT_INPUT: u8 = 1;
const EXIT_STRUCTURE: u8 = 2;
const EXIT_UNSTABLE: u8 = 3;
const EXIT_BOUND: u8 = 4;

#[derive(Parser)]
#[command(name = "pdsm", version, about = "p-party stable marriage solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Elemental,
    Compound,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded random instance.
    Gen {
        #[arg(short = 'p')]
        parties: usize,
        #[arg(short = 'n')]
        members: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// uniform, aligned or adversarial-ties
        #[arg(long, default_value = "uniform")]
        profile: String,
        /// Output file; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run an elemental or compound algorithm and write the matching.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "elemental")]
        algorithm: Algorithm,
        /// Plan file, or `prufer:<seq>/orient:<mask>`. Defaults to the path
        /// 0 -> 1 -> ... -> p-1.
        #[arg(long)]
        plan: Option<String>,
        /// Recipe file for the compound algorithm.
        #[arg(long, conflicts_with = "strategy")]
        recipe: Option<PathBuf>,
        /// path or balanced-bisection.
        #[arg(long)]
        strategy: Option<String>,
        /// Matching file; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Directory receiving each level's reduced instance and provenance.
        #[arg(long)]
        dump_reduced: Option<PathBuf>,
    },
    /// Check a matching for blocking families by exhaustive search.
    Verify {
        instance: PathBuf,
        matching: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MAX_CANDIDATES)]
        max_candidates: u128,
        #[arg(long, default_value_t = DEFAULT_WITNESS_CAP)]
        witnesses: usize,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print every elemental plan over p parties, one per line.
    Enumerate {
        #[arg(short = 'p')]
        parties: usize,
    },
    /// Print the number of elemental plans over p parties.
    Count {
        #[arg(short = 'p')]
        parties: usize,
    },
    /// Time elemental runs over a grid of sizes and write CSV.
    Bench {
        /// `lo-hi` or a comma list, e.g. `3-7`.
        #[arg(long)]
        p_range: String,
        /// `lo-hi` or a comma list, e.g. `4,8,16`.
        #[arg(long)]
        n_range: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// path, star or random
        #[arg(long, default_value = "path")]
        plan_shape: String,
        #[arg(long, default_value = "uniform")]
        profile: String,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// CSV file; stdout if omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let code = match e {
            Error::InvalidTree(_)
            | Error::InvalidPartition(_)
            | Error::Structure { .. }
            | Error::SameParty { .. }
            | Error::PartyOutOfRange { .. } => EXIT_STRUCTURE,
            Error::RoundBound { .. } => EXIT_BOUND,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(path) => fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::input(e.to_string())),
    }
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    read_instance(&read_file(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::input(format!("bad range '{text}', expected 'lo-hi' or a comma list"));
    let values: Vec<usize> = if let Some((lo, hi)) = text.split_once('-') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn load_plan(arg: &str) -> Result<ElementalPlan, Failure> {
    if arg.starts_with("prufer:") {
        return Ok(ElementalPlan::new(parse_shorthand(arg)?));
    }
    Ok(ElementalPlan::from_json(&read_file(Path::new(arg))?)?)
}

fn cmd_gen(p: usize, n: usize, seed: u64, profile: &str, output: Option<&Path>) -> CmdResult {
    let profile: Profile = profile.parse()?;
    let instance = generate(&GenSpec::new(p, n, seed, profile))?;
    write_out(output, &write_instance(&instance))?;
    Ok(0)
}

struct SolveArgs<'a> {
    instance: &'a Path,
    algorithm: Algorithm,
    plan: Option<&'a str>,
    recipe: Option<&'a Path>,
    strategy: Option<&'a str>,
    output: Option<&'a Path>,
    dump_reduced: Option<&'a Path>,
}

fn cmd_solve(args: SolveArgs<'_>) -> CmdResult {
    let instance = load_instance(args.instance)?;
    let matching = match args.algorithm {
        Algorithm::Elemental => {
            if args.recipe.is_some() || args.strategy.is_some() {
                return Err(Failure::input("--recipe and --strategy need --algorithm compound"));
            }
            let plan = match args.plan {
                Some(arg) => load_plan(arg)?,
                None => ElementalPlan::path(instance.p())?,
            };
            let run = run_elemental(&instance, &plan)?;
            let per_edge: Vec<String> = plan
                .tree
                .edges()
                .iter()
                .zip(run.edge_rounds())
                .map(|(&(a, b), r)| format!("{a}->{b}: {r}"))
                .collect();
            eprintln!("plan: {}", plan.tree);
            eprintln!("rounds: {} ({})", run.total_rounds(), per_edge.join(", "));
            run.matching
        }
        Algorithm::Compound => {
            if args.plan.is_some() {
                return Err(Failure::input("--plan needs --algorithm elemental"));
            }
            let recipe = match (args.recipe, args.strategy) {
                (Some(path), _) => CompoundRecipe::from_json(&read_file(path)?, instance.p())?,
                (None, Some(name)) => default_recipe(instance.p(), name.parse::<Strategy>()?)?,
                (None, None) => default_recipe(instance.p(), Strategy::BalancedBisection)?,
            };
            let run = run_compound(&instance, &recipe)?;
            for (k, (level, summary)) in recipe.levels().iter().zip(&run.levels).enumerate() {
                eprintln!(
                    "level {k}: {} -> {} parties, blocks {}, block rounds {}, ties broken {}",
                    summary.parties_before,
                    summary.parties_after,
                    level.partition,
                    summary.block_rounds,
                    summary.ties_broken
                );
            }
            eprintln!("final plan: {}, rounds {}", recipe.final_plan().tree, run.final_rounds);
            eprintln!("rounds: {}", run.total_rounds());
            eprintln!("ties broken: {}", run.ties_broken());
            if let Some(dir) = args.dump_reduced {
                fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
                for (k, reduced) in run.reductions.iter().enumerate() {
                    let inst_path = dir.join(format!("level{k}.instance.json"));
                    let prov_path = dir.join(format!("level{k}.provenance.json"));
                    write_out(Some(&inst_path), &write_instance(&reduced.derived))?;
                    write_out(Some(&prov_path), &reduced.provenance_json())?;
                }
            }
            run.matching
        }
    };
    write_out(args.output, &write_matching(&matching, &instance))?;
    Ok(0)
}

fn cmd_verify(instance: &Path, matching: &Path, opts: VerifyOptions) -> CmdResult {
    let inst = load_instance(instance)?;
    let m = read_matching(&read_file(matching)?, &inst)
        .map_err(|e| Failure::input(format!("{}: {e}", matching.display())))?;
    let report = verify_with(&inst, &m, &opts)?;
    println!("{}", if report.stable { "stable" } else { "unstable" });
    println!("candidates checked: {}", report.candidates_checked);
    for family in &report.witnesses {
        let labels: Vec<&str> = family.elements().map(|x| inst.label(x)).collect();
        println!(
            "blocking: {}",
            serde_json::to_string(&labels).expect("labels serialize")
        );
    }
    Ok(if report.stable { 0 } else { EXIT_UNSTABLE })
}

fn enum_limit() -> Result<usize, Failure> {
    match std::env::var("PDSM_MAX_ENUM_P") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("PDSM_MAX_ENUM_P must be an integer, got '{v}'"))),
        Err(_) => Ok(DEFAULT_MAX_ENUM_P),
    }
}

fn cmd_enumerate(p: usize) -> CmdResult {
    let trees = enumerate_trees_up_to(p, enum_limit()?)?;
    let mut out = io::BufWriter::new(io::stdout().lock());
    for (code, tree) in trees.with_shorthand() {
        writeln!(out, "{code}\t{tree}").map_err(|e| Failure::input(e.to_string()))?;
    }
    out.flush().map_err(|e| Failure::input(e.to_string()))?;
    Ok(0)
}

fn cmd_count(p: usize) -> CmdResult {
    if p < 2 {
        return Err(Failure::input(format!("count needs p >= 2, got {p}")));
    }
    println!("{}", count_elemental(p));
    Ok(0)
}

fn cmd_bench(cfg: BenchConfig, output: Option<&Path>) -> CmdResult {
    let records = bench::run_bench(&cfg)?;
    write_out(output, &bench::to_csv(&records))?;
    eprint!("{}", bench::summarize(&records));
    Ok(0)
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Gen {
            parties,
            members,
            seed,
            profile,
            output,
        } => cmd_gen(parties, members, seed, &profile, output.as_deref()),
        Command::Solve {
            instance,
            algorithm,
            plan,
            recipe,
            strategy,
            output,
            dump_reduced,
        } => cmd_solve(SolveArgs {
            instance: &instance,
            algorithm,
            plan: plan.as_deref(),
            recipe: recipe.as_deref(),
            strategy: strategy.as_deref(),
            output: output.as_deref(),
            dump_reduced: dump_reduced.as_deref(),
        }),
        Command::Verify {
            instance,
            matching,
            max_candidates,
            witnesses,
            jobs,
        } => cmd_verify(
            &instance,
            &matching,
            VerifyOptions {
                max_candidates,
                witness_cap: witnesses,
                jobs,
            },
        ),
        Command::Enumerate { parties } => cmd_enumerate(parties),
        Command::Count { parties } => cmd_count(parties),
        Command::Bench {
            p_range,
            n_range,
            seeds,
            plan_shape,
            profile,
            jobs,
            output,
        } => {
            let cfg = BenchConfig {
                p_values: parse_range(&p_range)?,
                n_values: parse_range(&n_range)?,
                seeds,
                shape: plan_shape.parse::<PlanShape>()?,
                profile: profile.parse::<Profile>()?,
                jobs,
            };
            cmd_bench(cfg, output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap reports usage errors with status 2, which is taken here
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
