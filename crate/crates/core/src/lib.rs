//! Symbolic Tukey-connection calculus for Cichoń's diagram.
//!
//! [`cardctx`] holds named cardinals and their order, [`finrel`] is the
//! exact finite oracle, [`tukeycalc`] closes Tukey facts and evaluates the
//! diagram, [`forge`] turns iteration recipes into facts, [`submodel`]
//! replays the submodel-intersection steps, and [`format`] reads and writes
//! the text file format.

pub mod cardctx;
pub mod finrel;
pub mod forge;
pub mod format;
pub mod submodel;
pub mod tukeycalc;
