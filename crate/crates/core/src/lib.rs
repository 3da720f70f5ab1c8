//! Dynamic material handling: an AGV fleet simulator, dispatching-rule
//! baselines, a constrained evolution-strategies trainer with adaptive
//! instance sampling, and an evaluation harness.

pub mod cli;
pub mod es;
pub mod harness;
pub mod policy;
pub mod rules;
pub mod seeding;
pub mod sim;
