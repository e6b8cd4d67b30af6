//! Virtual-patient glucose–insulin simulator.
//!
//! A reduced compartmental model: two gut compartments for carbohydrate,
//! two-compartment subcutaneous absorption for rapid and long-acting insulin,
//! plasma insulin feeding a remote insulin-action state, and a glucose pool
//! with endogenous production damped by insulin action, saturating
//! insulin-independent uptake, renal excretion and insulin-dependent
//! disposal. Type 2 subjects add a glucose-driven residual secretion term.

mod cohort;
mod model;
mod sensitivity;
mod smbg;

pub use cohort::{
    generate_cohort, optimal_cf, optimal_icr, read_cohort, write_cohort, ClinicalTherapy,
    DiabetesType, PatientParams,
};
pub use model::{
    step, Inputs, PatientState, BRAIN_UPTAKE, BRAIN_UPTAKE_KM, GLUCOSE_MAX, GLUCOSE_MIN,
    INSULIN_ACTION_RATE, INSULIN_CLEARANCE, INSULIN_VOLUME_L_PER_KG, RENAL_RATE, RENAL_THRESHOLD,
    SECRETION_THRESHOLD,
};
pub use sensitivity::{effective_sensitivity, SensitivitySchedule};
pub use smbg::{read_smbg, SMBG_CV, SMBG_MAX, SMBG_MIN};
