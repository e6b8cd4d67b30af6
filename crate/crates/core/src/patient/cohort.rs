//! Virtual cohort generation and the cohort columnar file.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use super::model::{
    insulin_volume_l, step, Inputs, PatientState, BRAIN_UPTAKE, BRAIN_UPTAKE_KM, EGP_SUPPRESSION, INSULIN_CLEARANCE,
    RENAL_RATE, RENAL_THRESHOLD, SECRETION_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::seed::{self, purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiabetesType {
    T1D,
    T2D,
}

impl DiabetesType {
    /// Numeric tag used in seed paths.
    pub fn tag(self) -> u64 {
        match self {
            DiabetesType::T1D => 1,
            DiabetesType::T2D => 2,
        }
    }
}

impl fmt::Display for DiabetesType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiabetesType::T1D => "T1D",
            DiabetesType::T2D => "T2D",
        })
    }
}

impl FromStr for DiabetesType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1D" => Ok(DiabetesType::T1D),
            "T2D" => Ok(DiabetesType::T2D),
            other => Err(Error::InvalidArgument(format!("unknown diabetes type '{other}'"))),
        }
    }
}

/// Therapy settings handed to the subject before the trial: the simulator
/// default for type 1, the weight-based equations for type 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClinicalTherapy {
    /// g/U
    pub icr: f64,
    /// (mg/dL)/U
    pub cf: f64,
    /// U/day
    pub basal: f64,
}

/// Parameters of one virtual subject.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientParams {
    pub id: u32,
    pub diabetes_type: DiabetesType,
    /// kg
    pub body_weight: f64,
    /// (mg/dL/min) per (mU/L) per (mg/dL)
    pub insulin_sensitivity_base: f64,
    pub carb_bioavailability: f64,
    /// min
    pub meal_absorption_time_constant: f64,
    /// min
    pub rapid_insulin_absorption_tc: f64,
    /// min
    pub long_insulin_absorption_tc: f64,
    /// mg/dL/min
    pub endogenous_glucose_production: f64,
    /// U/min per mg/dL above the secretion threshold; zero for type 1
    pub residual_insulin_secretion_gain: f64,
    /// dL
    pub glucose_distribution_volume: f64,
    pub default_therapy: ClinicalTherapy,
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Nominal long-acting absorption time constant, min.
pub const LONG_ACTING_TC: f64 = 600.0;
/// Log-scale spread of the clinician's estimate of ICR, CF and basal for
/// type 1 subjects around the model-optimal values.
pub const CLINICAL_ESTIMATE_SPREAD: f64 = 0.4;

const T1D_WEIGHT: (f64, f64) = (69.7, 12.4);
const T2D_WEIGHT: (f64, f64) = (95.0, 16.5);
const T1D_TDD_PER_KG: (f64, f64) = (0.61, 0.18);
const T1D_FBG: (f64, f64) = (119.6, 6.7);
const T2D_FBG: (f64, f64) = (154.0, 28.0);
const T2D_SECRETION_GAIN: f64 = 2.2e-4;

fn lognormal_mean_sd(mean: f64, sd: f64) -> LogNormal<f64> {
    let sigma2 = (1.0 + (sd / mean).powi(2)).ln();
    LogNormal::new(mean.ln() - 0.5 * sigma2, sigma2.sqrt()).expect("valid lognormal")
}

fn jitter<R: Rng>(rng: &mut R, nominal: f64, log_sd: f64) -> f64 {
    nominal * LogNormal::new(0.0, log_sd).expect("valid lognormal").sample(rng)
}

fn normal<R: Rng>(rng: &mut R, (mean, sd): (f64, f64)) -> f64 {
    Normal::new(mean, sd).expect("valid normal").sample(rng)
}

fn noninsulin_clearance(g: f64) -> f64 {
    BRAIN_UPTAKE * g / (g + BRAIN_UPTAKE_KM) + RENAL_RATE * (g - RENAL_THRESHOLD).max(0.0)
}

/// Sensitivity at which insulin action `action` holds glucose at `g`:
/// egp / (1 + k·u) = clearance + u·g with u = S·action.
fn balancing_sensitivity(egp: f64, clearance: f64, g: f64, action: f64) -> f64 {
    let a = EGP_SUPPRESSION * g;
    let b = g + EGP_SUPPRESSION * clearance;
    let c = clearance - egp;
    let u = (-b + (b * b - 4.0 * a * c).sqrt()) / (2.0 * a);
    u / action
}

/// Generate `n` subjects. Subject `i` depends only on `(seed, i)`.
pub fn generate_cohort(n: usize, diabetes_type: DiabetesType, seed: u64) -> Result<Vec<PatientParams>> {
    if n == 0 {
        return Err(Error::InvalidArgument("cohort size must be at least 1".into()));
    }
    (0..n)
        .map(|i| {
            let mut rng = seed::stream(seed, &[purpose::COHORT, diabetes_type.tag(), i as u64]);
            Ok(sample_patient(i as u32, diabetes_type, &mut rng))
        })
        .collect()
}

fn sample_patient<R: Rng>(id: u32, diabetes_type: DiabetesType, rng: &mut R) -> PatientParams {
    let weight_dist = match diabetes_type {
        DiabetesType::T1D => lognormal_mean_sd(T1D_WEIGHT.0, T1D_WEIGHT.1),
        DiabetesType::T2D => lognormal_mean_sd(T2D_WEIGHT.0, T2D_WEIGHT.1),
    };
    let body_weight = weight_dist.sample(rng).clamp(40.0, 160.0);
    let glucose_distribution_volume = jitter(rng, 1.6, 0.1) * body_weight;
    let carb_bioavailability = normal(rng, (0.8, 0.05)).clamp(0.6, 0.95);
    let meal_absorption_time_constant = jitter(rng, 55.0, 0.2).clamp(15.0, 120.0);
    let rapid_insulin_absorption_tc = jitter(rng, 55.0, 0.2).clamp(25.0, 120.0);
    let long_insulin_absorption_tc = jitter(rng, LONG_ACTING_TC, 0.15).clamp(120.0, 900.0);

    let mut p = PatientParams {
        id,
        diabetes_type,
        body_weight,
        insulin_sensitivity_base: 0.0,
        carb_bioavailability,
        meal_absorption_time_constant,
        rapid_insulin_absorption_tc,
        long_insulin_absorption_tc,
        endogenous_glucose_production: 0.0,
        residual_insulin_secretion_gain: 0.0,
        glucose_distribution_volume,
        default_therapy: ClinicalTherapy { icr: 0.0, cf: 0.0, basal: 0.0 },
    };
    let insulin_per_u_per_min = 1000.0 / (insulin_volume_l(&p) * INSULIN_CLEARANCE);

    match diabetes_type {
        DiabetesType::T1D => {
            let egp_mg_per_kg = jitter(rng, 2.0, 0.12);
            let tdd_per_kg = normal(rng, T1D_TDD_PER_KG).clamp(0.3, 1.2);
            let fbg = normal(rng, T1D_FBG).clamp(95.0, 145.0);
            let basal_need = 0.5 * tdd_per_kg * body_weight;

            // Fasting glucose sits at `fbg` under a continuous infusion of the
            // basal need; sensitivity follows from the glucose balance there.
            let clearance = noninsulin_clearance(fbg);
            let egp = (egp_mg_per_kg * body_weight / glucose_distribution_volume).max(clearance + 0.2);
            let action = basal_need / 1440.0 * insulin_per_u_per_min;
            p.endogenous_glucose_production = egp;
            p.insulin_sensitivity_base = balancing_sensitivity(egp, clearance, fbg, action);

            let icr = optimal_icr(&p, basal_need);
            let cf = optimal_cf(&p, basal_need);
            p.default_therapy = ClinicalTherapy {
                icr: jitter(rng, icr, CLINICAL_ESTIMATE_SPREAD),
                cf: jitter(rng, cf, CLINICAL_ESTIMATE_SPREAD),
                basal: jitter(rng, basal_need, CLINICAL_ESTIMATE_SPREAD),
            };
        }
        DiabetesType::T2D => {
            let fbg = normal(rng, T2D_FBG).clamp(115.0, 260.0);
            let egp_mg_per_kg = jitter(rng, 2.0, 0.12);
            let gain = jitter(rng, T2D_SECRETION_GAIN, 0.8);
            // Untreated fasting equilibrium at `fbg`: residual secretion
            // balances EGP there, which fixes sensitivity.
            let clearance = noninsulin_clearance(fbg);
            let egp = (egp_mg_per_kg * body_weight / glucose_distribution_volume).max(clearance + 0.2);
            let action = gain * (fbg - SECRETION_THRESHOLD) * insulin_per_u_per_min;
            p.endogenous_glucose_production = egp;
            p.residual_insulin_secretion_gain = gain;
            p.insulin_sensitivity_base = balancing_sensitivity(egp, clearance, fbg, action);
            let (_, basal, icr, cf) = crate::init::t2d_initial_therapy(body_weight);
            p.default_therapy = ClinicalTherapy { icr, cf, basal };
        }
    }
    p
}

// ---------------------------------------------------------------------------
// Model-optimal bolus settings
// ---------------------------------------------------------------------------

const CALIBRATION_HORIZON: usize = 240;

fn glucose_after(p: &PatientParams, basal_u_per_day: f64, start_offset: f64, meal_g: f64, dose: f64) -> f64 {
    let r = basal_u_per_day / 1440.0;
    let mut s = PatientState::equilibrium(p, r);
    s.plasma_glucose += start_offset;
    for minute in 0..CALIBRATION_HORIZON {
        let u = Inputs {
            cho_g: if minute < 15 { meal_g / 15.0 } else { 0.0 },
            rapid_insulin_u: if minute == 0 { dose } else { 0.0 },
            long_insulin_u: r,
            fast_cho_g: 0.0,
        };
        s = step(&s, p, 1.0, &u, 1.0).expect("calibration inputs are valid");
    }
    s.plasma_glucose
}

fn bisect_dose(target: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 60.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// ICR (g/U) that returns glucose to its fasting level 5 h after a 60 g meal.
pub fn optimal_icr(p: &PatientParams, basal_u_per_day: f64) -> f64 {
    let g0 = PatientState::equilibrium(p, basal_u_per_day / 1440.0).plasma_glucose;
    let dose = bisect_dose(g0, |d| glucose_after(p, basal_u_per_day, 0.0, 60.0, d));
    60.0 / dose.max(1e-3)
}

/// CF ((mg/dL)/U): nadir drop after 1 U given at fasting equilibrium.
pub fn optimal_cf(p: &PatientParams, basal_u_per_day: f64) -> f64 {
    let r = basal_u_per_day / 1440.0;
    let mut s = PatientState::equilibrium(p, r);
    let g0 = s.plasma_glucose;
    let mut nadir = g0;
    for minute in 0..CALIBRATION_HORIZON {
        let u = Inputs {
            rapid_insulin_u: if minute == 0 { 1.0 } else { 0.0 },
            long_insulin_u: r,
            ..Inputs::default()
        };
        s = step(&s, p, 1.0, &u, 1.0).expect("calibration inputs are valid");
        nadir = nadir.min(s.plasma_glucose);
    }
    (g0 - nadir).max(1.0)
}

// ---------------------------------------------------------------------------
// Columnar file
// ---------------------------------------------------------------------------

const COHORT_COLUMNS: [&str; 14] = [
    "id",
    "diabetes_type",
    "body_weight",
    "insulin_sensitivity_base",
    "carb_bioavailability",
    "meal_absorption_time_constant",
    "rapid_insulin_absorption_tc",
    "long_insulin_absorption_tc",
    "endogenous_glucose_production",
    "residual_insulin_secretion_gain",
    "glucose_distribution_volume",
    "default_icr",
    "default_cf",
    "default_basal",
];

fn columns() -> &'static [&'static str] {
    &COHORT_COLUMNS
}

/// One subject per row, comma separated, '.' decimals, header first.
/// Readers skip lines starting with `#`.
pub fn write_cohort<W: Write>(mut out: W, cohort: &[PatientParams]) -> Result<()> {
    writeln!(out, "{}", columns().join(","))?;
    for p in cohort {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.id,
            p.diabetes_type,
            p.body_weight,
            p.insulin_sensitivity_base,
            p.carb_bioavailability,
            p.meal_absorption_time_constant,
            p.rapid_insulin_absorption_tc,
            p.long_insulin_absorption_tc,
            p.endogenous_glucose_production,
            p.residual_insulin_secretion_gain,
            p.glucose_distribution_volume,
            p.default_therapy.icr,
            p.default_therapy.cf,
            p.default_therapy.basal,
        )?;
    }
    Ok(())
}

pub fn read_cohort<R: BufRead>(input: R) -> Result<Vec<PatientParams>> {
    let mut lines = input.lines().filter(|l| !l.as_ref().is_ok_and(|l| l.starts_with('#')));
    let header = lines
        .next()
        .ok_or_else(|| Error::schema("cohort", "empty file"))??;
    if header.trim() != columns().join(",") {
        return Err(Error::schema("cohort", format!("unexpected header '{header}'")));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != columns().len() {
            return Err(Error::schema("cohort", format!("row {} has {} fields", lineno + 2, f.len())));
        }
        let num = |i: usize| -> Result<f64> {
            f[i].trim()
                .parse::<f64>()
                .map_err(|e| Error::schema("cohort", format!("row {} column {}: {e}", lineno + 2, columns()[i])))
        };
        out.push(PatientParams {
            id: f[0]
                .trim()
                .parse()
                .map_err(|e| Error::schema("cohort", format!("row {} id: {e}", lineno + 2)))?,
            diabetes_type: f[1].parse()?,
            body_weight: num(2)?,
            insulin_sensitivity_base: num(3)?,
            carb_bioavailability: num(4)?,
            meal_absorption_time_constant: num(5)?,
            rapid_insulin_absorption_tc: num(6)?,
            long_insulin_absorption_tc: num(7)?,
            endogenous_glucose_production: num(8)?,
            residual_insulin_secretion_gain: num(9)?,
            glucose_distribution_volume: num(10)?,
            default_therapy: ClinicalTherapy { icr: num(11)?, cf: num(12)?, basal: num(13)? },
        });
    }
    Ok(out)
}
