//! Generation of natural-language inference datasets over ALCQ knowledge
//! bases: syntax, a tableau reasoner, entailment closures with minimal
//! justifications, random KB and query generation, verbalization and
//! dataset assembly.

pub mod bits;
pub mod reasoner;
pub mod syntax;
pub mod closure;
pub mod generator;
pub mod query;
pub mod verbalize;
pub mod dataset;
pub mod quality;
