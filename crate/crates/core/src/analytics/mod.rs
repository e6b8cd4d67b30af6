//! Glycaemic metrics, the paired-comparison machinery and cohort reports.

pub mod metrics;
pub mod report;
pub mod stats;

pub use metrics::{
    count_events, estimate_hba1c, hba1c_from_mean, lbgi, time_in_ranges, GlycemicSummary, EVENT_PERSISTENCE_MIN,
    RANGE_HIGH, RANGE_LOW, SEVERE_LOW,
};
pub use report::{
    render_svg, report_windows, summarize_cohort, write_report_csv, ArmReport, Descriptive, Metric, TrialReport,
    Window, WindowKind, REPORT_ALPHA, REPORT_COLUMNS,
};
pub use stats::{
    lilliefors, paired_compare, paired_t_test, wilcoxon_signed_rank, Comparison, TestKind, LILLIEFORS_RESAMPLES,
    NORMALITY_ALPHA,
};
