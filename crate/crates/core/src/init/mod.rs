//! Two-week data collection, transfer-entropy policy initialisation and
//! risk-based hyperparameter selection.

mod collection;
mod hyper;
mod te;
mod therapy;

pub use collection::{
    active_insulin_series, classify, classify_values, overnight_low_fraction, risk_thresholds, std_dev,
    CollectionLog, NocturnalRisk, RiskClass, Variability, CGM_PERIOD_MIN, COLLECTION_DAYS, OVERNIGHT,
    SAMPLES_PER_DAY,
};
pub use hyper::{init_policy_params, select_hyperparameters, smoothing_for, THETA_BASE};
pub use te::{quantile_symbols, transfer_entropy};
pub use therapy::t2d_initial_therapy;
