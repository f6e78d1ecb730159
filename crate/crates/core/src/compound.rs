//! Compound algorithms: partition the parties, solve each block with an
//! elemental plan, reduce, and repeat; finish with one elemental run on the
//! last reduced problem and expand back down level by level.
//!
//! Every choice the procedure leaves open is fixed by a [`CompoundRecipe`].
//! Block plans use block-local party indices: vertex `i` of a block's tree is
//! the block's `i`-th smallest party.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::elemental::{run_elemental, ElementalPlan, PlanDoc};
use crate::error::{Error, Result};
use crate::model::{write_json, Instance, Matching};
use crate::reduction::{reduce, Partition, ReducedInstance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Level {
    pub partition: Partition,
    /// One plan per block of size at least 2, in block order.
    pub block_plans: Vec<ElementalPlan>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundRecipe {
    p: usize,
    levels: Vec<Level>,
    final_plan: ElementalPlan,
}

impl CompoundRecipe {
    /// Checks the recipe against a base problem of `p` parties.
    pub fn new(p: usize, levels: Vec<Level>, final_plan: ElementalPlan) -> Result<CompoundRecipe> {
        let mut parties = p;
        for (k, level) in levels.iter().enumerate() {
            let ctx = || format!("level {k}");
            if level.partition.parties() != parties {
                return Err(Error::structure(
                    ctx(),
                    format!(
                        "partition covers {} parties, problem has {parties}",
                        level.partition.parties()
                    ),
                ));
            }
            let big: Vec<&Vec<usize>> = level.partition.blocks().iter().filter(|b| b.len() >= 2).collect();
            if big.len() != level.block_plans.len() {
                return Err(Error::structure(
                    ctx(),
                    format!(
                        "{} blocks need plans, {} plans given",
                        big.len(),
                        level.block_plans.len()
                    ),
                ));
            }
            for (j, (block, plan)) in big.iter().zip(&level.block_plans).enumerate() {
                if plan.tree.p() != block.len() {
                    return Err(Error::structure(
                        ctx(),
                        format!(
                            "plan {j} spans {} parties, its block has {}",
                            plan.tree.p(),
                            block.len()
                        ),
                    ));
                }
            }
            // strictly fewer parties each level
            debug_assert!(level.partition.len() < parties);
            parties = level.partition.len();
        }
        if final_plan.tree.p() != parties {
            return Err(Error::structure(
                "final plan",
                format!("plan spans {} parties, last problem has {parties}", final_plan.tree.p()),
            ));
        }
        Ok(CompoundRecipe { p, levels, final_plan })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn final_plan(&self) -> &ElementalPlan {
        &self.final_plan
    }

    /// Zero levels: a plain elemental run.
    pub fn elemental(plan: ElementalPlan) -> CompoundRecipe {
        CompoundRecipe {
            p: plan.tree.p(),
            levels: Vec::new(),
            final_plan: plan,
        }
    }

    pub fn from_doc(doc: &RecipeDoc, p: usize) -> Result<CompoundRecipe> {
        let mut parties = p;
        let mut levels = Vec::with_capacity(doc.levels.len());
        for (k, level) in doc.levels.iter().enumerate() {
            let partition = Partition::new(parties, level.blocks.clone())
                .map_err(|e| Error::structure(format!("level {k}"), e.to_string()))?;
            if partition.blocks() != level.blocks.as_slice() {
                return Err(Error::structure(
                    format!("level {k}"),
                    format!("blocks must be listed canonically, as {partition}"),
                ));
            }
            let block_plans = level
                .block_plans
                .iter()
                .map(|d| d.to_tree().map(ElementalPlan::new))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| Error::structure(format!("level {k}"), e.to_string()))?;
            parties = partition.len();
            levels.push(Level { partition, block_plans });
        }
        let final_plan = doc
            .final_plan
            .to_tree()
            .map(ElementalPlan::new)
            .map_err(|e| Error::structure("final plan", e.to_string()))?;
        CompoundRecipe::new(p, levels, final_plan)
    }

    pub fn to_doc(&self) -> RecipeDoc {
        RecipeDoc {
            levels: self
                .levels
                .iter()
                .map(|l| LevelDoc {
                    blocks: l.partition.blocks().to_vec(),
                    block_plans: l.block_plans.iter().map(ElementalPlan::to_doc).collect(),
                })
                .collect(),
            final_plan: self.final_plan.to_doc(),
        }
    }

    pub fn from_json(text: &str, p: usize) -> Result<CompoundRecipe> {
        let doc: RecipeDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        CompoundRecipe::from_doc(&doc, p)
    }

    pub fn to_json(&self) -> String {
        write_json(&self.to_doc())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeDoc {
    pub levels: Vec<LevelDoc>,
    pub final_plan: PlanDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDoc {
    pub blocks: Vec<Vec<usize>>,
    pub block_plans: Vec<PlanDoc>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Path,
    BalancedBisection,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "path" => Ok(Strategy::Path),
            "balanced-bisection" => Ok(Strategy::BalancedBisection),
            other => Err(Error::Parse(format!(
                "unknown strategy '{other}', expected 'path' or 'balanced-bisection'"
            ))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Path => "path",
            Strategy::BalancedBisection => "balanced-bisection",
        })
    }
}

fn path_plans(partition: &Partition) -> Vec<ElementalPlan> {
    partition
        .blocks()
        .iter()
        .filter(|b| b.len() >= 2)
        .map(|b| ElementalPlan::path(b.len()).expect("blocks of size >= 2 have a path"))
        .collect()
}

/// A recipe for `p` parties built by a fixed strategy.
///
/// `Path` is zero levels with the path `0 -> 1 -> ... -> p-1`.
/// `BalancedBisection` splits the parties into a lower half of `ceil(p/2)`
/// and an upper half, solves each half along its path, and finishes with a
/// single run between the two halves. For `p = 2` it is the same as `Path`.
pub fn default_recipe(p: usize, strategy: Strategy) -> Result<CompoundRecipe> {
    let path = ElementalPlan::path(p)?;
    if p == 2 || strategy == Strategy::Path {
        return Ok(CompoundRecipe::elemental(path));
    }
    let mid = p.div_ceil(2);
    let partition = Partition::new(p, vec![(0..mid).collect(), (mid..p).collect()])?;
    let block_plans = path_plans(&partition);
    CompoundRecipe::new(p, vec![Level { partition, block_plans }], ElementalPlan::path(2)?)
}

/// Every one-level recipe over `p` parties: each problem partition, path
/// plans in every block and a path plan over the reduced problem.
pub fn one_level_recipes(p: usize) -> Vec<CompoundRecipe> {
    Partition::all(p)
        .into_iter()
        .map(|partition| {
            let block_plans = path_plans(&partition);
            let final_plan = ElementalPlan::path(partition.len()).expect("partitions have >= 2 blocks");
            CompoundRecipe::new(p, vec![Level { partition, block_plans }], final_plan)
                .expect("constructed recipes are consistent")
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct LevelSummary {
    pub parties_before: usize,
    pub parties_after: usize,
    pub ties_broken: usize,
    pub block_rounds: usize,
}

#[derive(Clone, Debug)]
pub struct CompoundRun {
    pub matching: Matching,
    pub levels: Vec<LevelSummary>,
    /// One reduced problem per level, in level order.
    pub reductions: Vec<ReducedInstance>,
    pub final_rounds: usize,
}

impl CompoundRun {
    /// Deferred-acceptance rounds summed over every block solve and the
    /// final run.
    pub fn total_rounds(&self) -> usize {
        self.final_rounds + self.levels.iter().map(|l| l.block_rounds).sum::<usize>()
    }

    pub fn ties_broken(&self) -> usize {
        self.levels.iter().map(|l| l.ties_broken).sum()
    }
}

pub fn run_compound(instance: &Instance, recipe: &CompoundRecipe) -> Result<CompoundRun> {
    if recipe.p() != instance.p() {
        return Err(Error::structure(
            "recipe",
            format!("recipe is for {} parties, instance has {}", recipe.p(), instance.p()),
        ));
    }
    let mut current = Arc::new(instance.clone());
    let mut levels = Vec::with_capacity(recipe.levels.len());
    let mut reductions = Vec::with_capacity(recipe.levels.len());
    for (k, level) in recipe.levels.iter().enumerate() {
        let mut plans = level.block_plans.iter();
        let mut block_rounds = 0;
        let mut block_matchings = Vec::with_capacity(level.partition.len());
        for block in level.partition.blocks() {
            if block.len() == 1 {
                block_matchings.push(Matching::singletons(current.n()));
                continue;
            }
            let plan = plans
                .next()
                .ok_or_else(|| Error::structure(format!("level {k}"), "missing block plan"))?;
            let sub = current.restrict(block)?;
            let run = run_elemental(&sub, plan).map_err(|e| Error::structure(format!("level {k}"), e.to_string()))?;
            block_rounds += run.total_rounds();
            block_matchings.push(run.matching);
        }
        let reduced = reduce(current.clone(), &level.partition, block_matchings)?;
        assert!(
            reduced.derived.p() < current.p(),
            "level {k} did not shrink the problem ({} -> {} parties)",
            current.p(),
            reduced.derived.p()
        );
        levels.push(LevelSummary {
            parties_before: current.p(),
            parties_after: reduced.derived.p(),
            ties_broken: reduced.ties_broken,
            block_rounds,
        });
        current = reduced.derived.clone();
        reductions.push(reduced);
    }
    let last = run_elemental(&current, &recipe.final_plan)?;
    let final_rounds = last.total_rounds();
    let mut matching = last.matching;
    for reduced in reductions.iter().rev() {
        matching = reduced.expand(&matching)?;
    }
    Ok(CompoundRun {
        matching: matching.canonical(),
        levels,
        reductions,
        final_rounds,
    })
}
