//! Trial engine: scenarios, daily schedules, the rescue controller, day
//! traces and the collection → initialisation → on-line learning pipeline.

mod rescue;
mod scenario;
mod trace;
mod trial;

pub use rescue::{count_rescues, RescueController};
pub use scenario::{announce_cho, sample_day, ClockRange, DaySchedule, MealEvent, MealSpec, ScenarioId, ScenarioSpec};
pub use trace::{
    read_trace, write_trace, Arm, DayTrace, MealKind, MealRecord, RescueEvent, TherapySnapshot, TraceMeta, TRACE_COLUMNS,
    TRACE_TAG, TRACE_VERSION,
};
pub use trial::{
    initial_therapy, initialise, run_trial, run_trial_with, subject_seed, InitSummary, TrialOptions, TrialResult,
};
