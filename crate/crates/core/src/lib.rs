//! Solvers for the p-party stable marriage problem with simple preference
//! lists: deferred acceptance between two parties, elemental algorithms
//! (one run per edge of a directed spanning tree over the parties) and
//! compound algorithms (solve blocks of parties, collapse them, repeat),
//! together with an exhaustive stability oracle.

pub mod bench;
pub mod compound;
pub mod elemental;
pub mod error;
pub mod gale_shapley;
pub mod generator;
pub mod model;
pub mod reduction;
pub mod stability;

pub use compound::{default_recipe, run_compound, CompoundRecipe, Strategy};
pub use elemental::{count_elemental, enumerate_trees, run_elemental, DirectedTree, ElementalPlan};
pub use error::{Error, Result};
pub use gale_shapley::{gs, is_stable_2party, Bijection};
pub use model::{
    read_instance, read_matching, validate, write_instance, write_matching, ElementRef, Family, Instance, Matching,
};
pub use reduction::{reduce, Partition, ReducedInstance};
pub use stability::{enumerate_stable, is_blocking, verify, BlockingReport};
