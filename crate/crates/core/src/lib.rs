//! Network-state monitoring benchmark: SFC placement simulation, a relational
//! snapshot store, a small SQL engine, NL/SQL corpus generation, schema
//! pruning, a keyword baseline translator and scoring.

pub mod dataset;
pub mod domain;
pub mod eval;
pub mod nl2sql;
pub mod num;
pub mod prune;
pub mod sim;
pub mod sql;
pub mod store;
