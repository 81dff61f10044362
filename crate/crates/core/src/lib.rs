//! Compositional-generalization benchmarks for program synthesis.
//!
//! Two domains are supported: SCAN command translation ([`scan`]) and
//! RobustFill string manipulation ([`robustfill`]). On top of the DSLs sit
//! a seeded sampler ([`sampling`]), the seven generalization splits
//! ([`tasks`]), decompositional attention masks and relative-position
//! buckets ([`decomp`]), scoring ([`score`]), and the JSONL dataset format
//! used by the `compgen` command-line tool ([`dataset`], [`cli`]).

pub mod decomp;
pub mod robustfill;
pub mod scan;
pub mod sampling;
pub mod tasks;
pub mod dataset;
pub mod score;
pub mod cli;
