//! The two protective strategies of the credit case study.

mod evasion;
mod poison;

pub use evasion::{evade, evade_cohort, quantile, summarize, BudgetSummary, CohortRow, EvasionResult};
pub use poison::{
    acceptance_curve, acceptance_rate, greedy_poison, poison_experiment, AcceptanceCurve, PoisonContext, PoisonParams,
    PoisonPlan, PoisonRecord, SeedRun, DEFAULT_BATCH_SIZE, DEFAULT_POISON_CHANGES, DEFAULT_RETRY_LIMIT,
};
