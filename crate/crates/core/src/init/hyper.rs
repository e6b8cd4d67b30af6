use super::collection::{NocturnalRisk, RiskClass, Variability};
use crate::advisor::{AgentKind, Hyperparams};
use crate::patient::DiabetesType;

/// Policy magnitude at zero transfer entropy.
pub const THETA_BASE: f64 = 0.5;

/// Initial policy parameters. Magnitude shrinks with transfer entropy; signs
/// make hyperglycaemia push towards more insulin (lower ICR, higher PS and
/// basal) and hypoglycaemia towards less.
pub fn init_policy_params(te_bits: f64, kind: AgentKind) -> Vec<f64> {
    let mu = THETA_BASE / (1.0 + te_bits.max(0.0));
    kind.corrective_signs().iter().map(|s| s * mu).collect()
}

pub fn smoothing_for(t: DiabetesType) -> f64 {
    match t {
        DiabetesType::T1D => 0.5,
        DiabetesType::T2D => 1.0,
    }
}

/// Per-agent hyperparameters, indexed like [`AgentKind::ALL`].
pub fn select_hyperparameters(rc: RiskClass, t: DiabetesType) -> Vec<Hyperparams> {
    let increased = rc.variability == Variability::Increased;
    let high_risk = rc.nocturnal_risk == NocturnalRisk::High;
    AgentKind::ALL
        .iter()
        .map(|&kind| {
            let mut hp = Hyperparams { smoothing: smoothing_for(t), ..Hyperparams::default() };
            if increased {
                hp.lr_actor = 0.01;
                hp.lr_critic = if matches!(kind, AgentKind::Icr(_)) { 0.05 } else { 0.01 };
            }
            if high_risk && kind == AgentKind::Icr(2) {
                hp.lr_actor = if increased { 0.001 } else { 0.01 };
            }
            hp
        })
        .collect()
}
