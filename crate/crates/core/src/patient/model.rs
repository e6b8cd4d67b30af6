use super::cohort::PatientParams;
use crate::error::{Error, Result};

pub const GLUCOSE_MIN: f64 = 10.0;
pub const GLUCOSE_MAX: f64 = 600.0;

/// Plasma insulin distribution volume, L/kg.
pub const INSULIN_VOLUME_L_PER_KG: f64 = 0.12;
/// Plasma insulin elimination rate, 1/min.
pub const INSULIN_CLEARANCE: f64 = 0.138;
/// Rate at which remote insulin action tracks plasma insulin, 1/min.
pub const INSULIN_ACTION_RATE: f64 = 0.04;
/// Saturated insulin-independent uptake (mostly brain), mg/dL/min.
pub const BRAIN_UPTAKE: f64 = 0.625;
/// Half-saturation glucose of the insulin-independent uptake, mg/dL.
pub const BRAIN_UPTAKE_KM: f64 = 18.0;
/// Hepatic output falls as EGP / (1 + k·S·X), k in min.
pub const EGP_SUPPRESSION: f64 = 50.0;
pub const RENAL_THRESHOLD: f64 = 180.0;
/// Renal clearance above threshold, 1/min.
pub const RENAL_RATE: f64 = 0.003;
/// Glucose above which residual beta-cell secretion switches on, mg/dL.
pub const SECRETION_THRESHOLD: f64 = 80.0;

const DIM: usize = 9;

/// Amounts delivered uniformly over one integration step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Inputs {
    pub cho_g: f64,
    pub rapid_insulin_u: f64,
    pub long_insulin_u: f64,
    /// Glucose tablet carbohydrate; bypasses the first gut compartment.
    pub fast_cho_g: f64,
}

impl Inputs {
    fn is_valid(&self) -> bool {
        [self.cho_g, self.rapid_insulin_u, self.long_insulin_u, self.fast_cho_g]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatientState {
    /// mg/dL
    pub plasma_glucose: f64,
    /// g CHO
    pub gut: [f64; 2],
    /// U
    pub rapid_depot: [f64; 2],
    /// U
    pub long_depot: [f64; 2],
    /// mU/L
    pub plasma_insulin: f64,
    /// mU/L-equivalent remote action
    pub insulin_action: f64,
    /// minutes since trial start
    pub sim_time: f64,
}

impl PatientState {
    fn to_vec(self) -> [f64; DIM] {
        [
            self.plasma_glucose,
            self.gut[0],
            self.gut[1],
            self.rapid_depot[0],
            self.rapid_depot[1],
            self.long_depot[0],
            self.long_depot[1],
            self.plasma_insulin,
            self.insulin_action,
        ]
    }

    fn from_vec(x: [f64; DIM], sim_time: f64) -> Self {
        PatientState {
            plasma_glucose: x[0],
            gut: [x[1], x[2]],
            rapid_depot: [x[3], x[4]],
            long_depot: [x[5], x[6]],
            plasma_insulin: x[7],
            insulin_action: x[8],
            sim_time,
        }
    }

    /// Fixed point under a constant long-acting infusion of `basal_u_per_min`,
    /// empty gut and empty rapid depot, at sensitivity multiplier 1.
    pub fn equilibrium(params: &PatientParams, basal_u_per_min: f64) -> Self {
        let tau_l = params.long_insulin_absorption_tc;
        let depot = basal_u_per_min * tau_l;
        let insulin_at = |g: f64| plasma_insulin_steady(params, basal_u_per_min, g);
        let net = |g: f64| glucose_rate(params, g, insulin_at(g), 1.0, 0.0);

        let g = if net(GLUCOSE_MAX) >= 0.0 {
            GLUCOSE_MAX
        } else if net(GLUCOSE_MIN) <= 0.0 {
            GLUCOSE_MIN
        } else {
            // net is strictly decreasing in g
            let (mut lo, mut hi) = (GLUCOSE_MIN, GLUCOSE_MAX);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if net(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let insulin = insulin_at(g);
        PatientState {
            plasma_glucose: g,
            gut: [0.0, 0.0],
            rapid_depot: [0.0, 0.0],
            long_depot: [depot, depot],
            plasma_insulin: insulin,
            insulin_action: insulin,
            sim_time: 0.0,
        }
    }

    fn check_finite(&self, params: &PatientParams) -> Result<()> {
        if self.to_vec().iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::SimulatorFault {
                patient: params.id,
                minute: self.sim_time.max(0.0) as u64,
                detail: format!("non-finite state {:?}", self),
            })
        }
    }
}

pub(crate) fn insulin_volume_l(params: &PatientParams) -> f64 {
    INSULIN_VOLUME_L_PER_KG * params.body_weight
}

fn secretion_u_per_min(params: &PatientParams, g: f64) -> f64 {
    params.residual_insulin_secretion_gain * (g - SECRETION_THRESHOLD).max(0.0)
}

fn plasma_insulin_steady(params: &PatientParams, exogenous_u_per_min: f64, g: f64) -> f64 {
    (exogenous_u_per_min + secretion_u_per_min(params, g)) * 1000.0
        / (insulin_volume_l(params) * INSULIN_CLEARANCE)
}

/// dG/dt without meal appearance, mg/dL/min.
fn glucose_rate(params: &PatientParams, g: f64, action: f64, sensitivity: f64, ra: f64) -> f64 {
    let g = g.max(0.0);
    let uptake = BRAIN_UPTAKE * g / (g + BRAIN_UPTAKE_KM);
    let renal = RENAL_RATE * (g - RENAL_THRESHOLD).max(0.0);
    let effect = params.insulin_sensitivity_base * sensitivity * action.max(0.0);
    let egp = params.endogenous_glucose_production / (1.0 + EGP_SUPPRESSION * effect);
    egp - uptake - renal - effect * g + ra
}

fn derivatives(params: &PatientParams, x: &[f64; DIM], sensitivity: f64, rate: &Inputs) -> [f64; DIM] {
    let tau_m = params.meal_absorption_time_constant;
    let tau_r = params.rapid_insulin_absorption_tc;
    let tau_l = params.long_insulin_absorption_tc;
    let [g, q1, q2, s1, s2, l1, l2, ins, act] = *x;

    let ra = params.carb_bioavailability * q2 / tau_m * 1000.0 / params.glucose_distribution_volume;
    let appearance = s2 / tau_r + l2 / tau_l + secretion_u_per_min(params, g);

    [
        glucose_rate(params, g, act, sensitivity, ra),
        rate.cho_g - q1 / tau_m,
        q1 / tau_m - q2 / tau_m + rate.fast_cho_g,
        rate.rapid_insulin_u - s1 / tau_r,
        s1 / tau_r - s2 / tau_r,
        rate.long_insulin_u - l1 / tau_l,
        l1 / tau_l - l2 / tau_l,
        appearance * 1000.0 / insulin_volume_l(params) - INSULIN_CLEARANCE * ins,
        INSULIN_ACTION_RATE * (ins - act),
    ]
}

fn axpy(x: &[f64; DIM], a: f64, k: &[f64; DIM]) -> [f64; DIM] {
    let mut out = *x;
    for i in 0..DIM {
        out[i] += a * k[i];
    }
    out
}

/// Advance the patient by one classical RK4 step of `dt` minutes.
///
/// `sensitivity` multiplies the patient's insulin sensitivity for the whole
/// step (dawn phenomenon, inter-day variability). Inputs are amounts spread
/// uniformly over the step.
pub fn step(
    state: &PatientState,
    params: &PatientParams,
    sensitivity: f64,
    inputs: &Inputs,
    dt: f64,
) -> Result<PatientState> {
    if !(dt > 0.0 && dt <= 5.0) {
        return Err(Error::InvalidArgument(format!("dt must lie in (0, 5], got {dt}")));
    }
    if !inputs.is_valid() {
        return Err(Error::InvalidArgument(format!("inputs must be finite and non-negative: {inputs:?}")));
    }
    state.check_finite(params)?;

    let rate = Inputs {
        cho_g: inputs.cho_g / dt,
        rapid_insulin_u: inputs.rapid_insulin_u / dt,
        long_insulin_u: inputs.long_insulin_u / dt,
        fast_cho_g: inputs.fast_cho_g / dt,
    };
    let x = state.to_vec();
    let k1 = derivatives(params, &x, sensitivity, &rate);
    let k2 = derivatives(params, &axpy(&x, 0.5 * dt, &k1), sensitivity, &rate);
    let k3 = derivatives(params, &axpy(&x, 0.5 * dt, &k2), sensitivity, &rate);
    let k4 = derivatives(params, &axpy(&x, dt, &k3), sensitivity, &rate);

    let mut next = x;
    for i in 0..DIM {
        next[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    next[0] = next[0].clamp(GLUCOSE_MIN, GLUCOSE_MAX);
    for v in next.iter_mut().skip(1) {
        *v = v.max(0.0);
    }
    let out = PatientState::from_vec(next, state.sim_time + dt);
    out.check_finite(params)?;
    Ok(out)
}
