//! The adaptive advisor: seven actor-critic agents (one basal, one ICR and one
//! PS agent per main meal) and the static bolus calculator it is compared with.

mod agent;
mod bundle;
mod dosing;
mod features;

pub use agent::{
    actor_update, apply_action, build_state, critic_update, policy, policy_gradient, supervisory, td_update,
    AgentKind, AgentState, Hyperparams, ADAM_BETA1, ADAM_BETA2, ADAM_EPS, GRADIENT_STATE_FLOOR,
};
pub use bundle::{AgentBundle, StepOutcome, CHECKPOINT_TAG, CHECKPOINT_VERSION, CRITIC_INIT_SPREAD};
pub use dosing::{
    bba_recommendation, bolus_recommendation, correction_bolus, iob, InsulinKind, InsulinRecord, TherapyParams,
    DEFAULT_DIA,
};
pub use features::{
    basal_features, bolus_features, cost, glucose_error, overnight_delta, overnight_delta_raw, Beta, FeatureVector,
    Measurement, Normalization, Slot, Thresholds,
};
