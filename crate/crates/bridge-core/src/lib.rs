//! Core library for the Bridge equation pipeline.
//!
//! The pipeline turns a math word problem into a system of equations in four
//! LLM stages (erase, decompose, translate, answer), solves the system
//! exactly, and scores predictions against gold answers. Everything an
//! experiment needs lives here: the equation DSL, the solver, pluggable LLM
//! backends with record/replay, prompt templates, dataset loaders, and the
//! evaluation report.

pub mod client;
pub mod datasets;
pub mod equation;
pub mod eval;
pub mod pipeline;
pub mod prompts;
pub mod solver;
