use rand::Rng;

use super::rescue::RescueController;
use super::scenario::{announce_cho, sample_day, ScenarioId, ScenarioSpec};
use super::trace::{Arm, DayTrace, MealKind, MealRecord, RescueEvent, TherapySnapshot};
use crate::advisor::{
    basal_features, bba_recommendation, bolus_features, bolus_recommendation, build_state, correction_bolus, iob,
    overnight_delta, AgentBundle, AgentKind, Beta, FeatureVector, InsulinKind, InsulinRecord, Measurement,
    Normalization, Slot, TherapyParams, Thresholds, DEFAULT_DIA,
};
use crate::error::{Error, Result};
use crate::init::{
    active_insulin_series, classify, init_policy_params, overnight_low_fraction, select_hyperparameters, std_dev,
    transfer_entropy, CollectionLog, RiskClass, CGM_PERIOD_MIN,
};
use crate::patient::{read_smbg, step, DiabetesType, Inputs, PatientParams, PatientState, SensitivitySchedule, SMBG_CV};
use crate::seed::{self, purpose};

/// Knobs that are not part of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOptions {
    pub collection_days: u32,
    /// Half-width of the one-off uniform perturbation of the initial ICRs and basal.
    pub initial_perturbation: f64,
    pub smbg_cv: f64,
    /// min
    pub dia: f64,
    pub thresholds: Thresholds,
    pub normalization: Normalization,
}

impl Default for TrialOptions {
    fn default() -> Self {
        TrialOptions {
            collection_days: 14,
            initial_perturbation: 0.1,
            smbg_cv: SMBG_CV,
            dia: DEFAULT_DIA,
            thresholds: Thresholds::default(),
            normalization: Normalization::default(),
        }
    }
}

/// What the initialisation phase found.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSummary {
    pub transfer_entropy: f64,
    pub cgm_sd: f64,
    pub overnight_low_fraction: f64,
    pub risk: RiskClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub patient: u32,
    pub diabetes_type: DiabetesType,
    pub scenario: ScenarioId,
    pub arm: Arm,
    pub collection_days: u32,
    pub days: Vec<DayTrace>,
    /// ABBA only.
    pub bundle: Option<AgentBundle>,
    pub init: Option<InitSummary>,
}

impl TrialResult {
    pub fn rescue_count(&self) -> usize {
        self.days.iter().map(|d| d.rescues.len()).sum()
    }
}

/// Seed of all per-subject streams. Independent of scenario and arm so that
/// arms and scenarios see the same meals and noise.
pub fn subject_seed(master: u64, diabetes_type: DiabetesType, patient: u32) -> u64 {
    seed::derive_seed(master, &[diabetes_type.tag(), patient as u64])
}

/// Starting therapy: the clinical settings with a one-off uniform
/// perturbation of each ICR and the basal dose.
pub fn initial_therapy(patient: &PatientParams, subject: u64, spread: f64) -> TherapyParams {
    let c = patient.default_therapy;
    let mut rng = seed::stream(subject, &[purpose::THERAPY]);
    let mut f = || if spread > 0.0 { rng.random_range(1.0 - spread..=1.0 + spread) } else { 1.0 };
    let icr = [c.icr * f(), c.icr * f(), c.icr * f()];
    TherapyParams::new(icr, c.cf, c.basal * f())
}

fn snapshot(t: &TherapyParams) -> TherapySnapshot {
    TherapySnapshot { icr: t.icr, ps: t.ps, cf: t.cf, basal: t.basal }
}

struct Window {
    slot: usize,
    readings: Vec<Measurement>,
}

/// Run one subject through collection, initialisation and on-line learning
/// (ABBA) or through the whole trial on static settings (BBA).
pub fn run_trial(patient: &PatientParams, arm: Arm, spec: &ScenarioSpec, master_seed: u64) -> Result<TrialResult> {
    run_trial_with(patient, arm, spec, master_seed, &TrialOptions::default())
}

pub fn run_trial_with(
    patient: &PatientParams,
    arm: Arm,
    spec: &ScenarioSpec,
    master_seed: u64,
    opts: &TrialOptions,
) -> Result<TrialResult> {
    spec.validate()?;
    if opts.collection_days == 0 || opts.collection_days >= spec.days {
        return Err(Error::InvalidArgument("collection must be shorter than the trial".into()));
    }
    let th = &opts.thresholds;
    let norm = &opts.normalization;
    let t2 = patient.diabetes_type;
    let subject = subject_seed(master_seed, t2, patient.id);
    let schedule = SensitivitySchedule::default()
        .with_dawn(spec.dawn && t2 == DiabetesType::T1D)
        .with_interday(spec.interday_sensitivity);
    schedule.validate()?;

    let mut therapy = initial_therapy(patient, subject, opts.initial_perturbation);
    let mut state = PatientState::equilibrium(patient, therapy.basal / 1440.0);
    let mut rescue = RescueController::new(spec.rescue_threshold, spec.rescue_rearm, spec.rescue_cho);
    let mut recent_boluses: Vec<InsulinRecord> = Vec::new();
    let mut log = CollectionLog::default();
    let mut bundle: Option<AgentBundle> = None;
    let mut init = None;
    let mut last_bedtime: Option<Measurement> = None;
    let mut since_injection: Vec<Measurement> = Vec::new();
    let mut prev_tdd: Option<f64> = None;
    let mut days = Vec::with_capacity(spec.days as usize);

    for day in 1..=spec.days {
        let base = (day as u64 - 1) * 1440;
        let learning = bundle.is_some();
        let collecting = day <= opts.collection_days;
        let sched = sample_day(spec, &mut seed::stream(subject, &[purpose::MEALS, day as u64]));
        let mut ann_rng = seed::stream(subject, &[purpose::ANNOUNCE, day as u64]);
        let announced: Vec<f64> = sched.meals.iter().map(|m| announce_cho(m.cho, spec, &mut ann_rng)).collect();
        let mut smbg_rng = seed::stream(subject, &[purpose::SMBG, day as u64]);
        let mut cgm_rng = seed::stream(subject, &[purpose::CGM, day as u64]);
        let day_factor = schedule.day_factor(subject, day);

        let mut trace = DayTrace { day, glucose: Vec::with_capacity(1440), ..DayTrace::default() };
        for (i, m) in sched.meals.iter().enumerate() {
            trace.meals.push(MealRecord {
                kind: MealKind::MAIN[i],
                start: base + m.start as u64,
                duration: m.duration,
                true_cho: m.cho,
                announced_cho: Some(announced[i]),
            });
        }
        trace.meals.push(MealRecord {
            kind: MealKind::Snack,
            start: base + sched.snack.start as u64,
            duration: sched.snack.duration,
            true_cho: sched.snack.cho,
            announced_cho: None,
        });

        let mut window: Option<Window> = None;
        let mut morning: Option<Measurement> = None;
        // features of today's windows, kept for the initialisation hand-off
        let mut meal_features: [Option<FeatureVector>; 3] = [None; 3];
        let mut basal_state: Option<Vec<f64>> = None;
        let mut b_today = [0.0; 2];

        for minute in 0..1440u32 {
            let t = base + minute as u64;
            let g = state.plasma_glucose;
            trace.glucose.push(g);
            if collecting && minute as u64 % CGM_PERIOD_MIN == 0 {
                let v = read_smbg(g, opts.smbg_cv, &mut cgm_rng);
                trace.cgm.push(v);
                log.cgm.push(v);
                log.basal_rate.push(therapy.basal / 1440.0);
            }
            let mut inputs = Inputs::default();

            let take_reading = |slot: Slot, smbg_rng: &mut rand_chacha::ChaCha8Rng, trace: &mut DayTrace| {
                let m = Measurement { value: read_smbg(g, opts.smbg_cv, smbg_rng), timestamp: t, slot };
                trace.measurements.push(m);
                m
            };

            if let Some(cho) = rescue.check(g) {
                inputs.fast_cho_g += cho;
                trace.rescues.push(RescueEvent { timestamp: t, glucose: g, cho });
                let m = take_reading(Slot::Rescue, &mut smbg_rng, &mut trace);
                if let Some(w) = window.as_mut() {
                    w.readings.push(m);
                }
                since_injection.push(m);
            }

            for slot in 0..3 {
                if minute != sched.bolus_time(slot) {
                    continue;
                }
                let m = take_reading(
                    [Slot::PreBreakfast, Slot::PreLunch, Slot::PreDinner][slot],
                    &mut smbg_rng,
                    &mut trace,
                );
                since_injection.push(m);
                if slot == 0 {
                    morning = Some(m);
                }
                if let Some(mut w) = window.take() {
                    w.readings.push(m);
                    let f = bolus_features(&w.readings, th, norm);
                    meal_features[w.slot] = f;
                    if let (Some(b), Some(f)) = (bundle.as_mut(), f) {
                        b.meal_step(w.slot, &f, None);
                    }
                }
                recent_boluses.retain(|r| ((t - r.timestamp) as f64) < opts.dia);
                let on_board = iob(&recent_boluses, t, opts.dia);
                let dose = if learning {
                    bolus_recommendation(announced[slot], m.value, &therapy_of(&bundle, &therapy), slot, on_board, th)
                } else {
                    bba_recommendation(announced[slot], m.value, therapy.icr[slot], therapy.cf, on_board, th)
                };
                let rec = InsulinRecord { dose, kind: InsulinKind::Bolus, timestamp: t };
                recent_boluses.push(rec);
                trace.insulin.push(rec);
                inputs.rapid_insulin_u += dose;
                window = Some(Window { slot, readings: Vec::new() });
            }

            if spec.correction_boluses {
                for slot in 0..3 {
                    if minute != sched.meals[slot].start + spec.post_prandial_delay {
                        continue;
                    }
                    let m = take_reading(Slot::PostPrandial, &mut smbg_rng, &mut trace);
                    if let Some(w) = window.as_mut() {
                        w.readings.push(m);
                    }
                    since_injection.push(m);
                    recent_boluses.retain(|r| ((t - r.timestamp) as f64) < opts.dia);
                    let on_board = iob(&recent_boluses, t, opts.dia);
                    let current = therapy_of(&bundle, &therapy);
                    let ps = if learning { current.ps[slot] } else { 1.0 };
                    if let Some(dose) = correction_bolus(m.value, current.cf, ps, on_board, th) {
                        let rec = InsulinRecord { dose, kind: InsulinKind::Correction, timestamp: t };
                        recent_boluses.push(rec);
                        trace.insulin.push(rec);
                        inputs.rapid_insulin_u += dose;
                    }
                }
            }

            if minute == sched.basal_time {
                let m = take_reading(Slot::Bedtime, &mut smbg_rng, &mut trace);
                since_injection.push(m);
                let b_k = overnight_delta(morning.as_ref(), last_bedtime.as_ref(), th, norm);
                b_today = b_k;
                if let Some(mut w) = window.take() {
                    w.readings.push(m);
                    let f = bolus_features(&w.readings, th, norm);
                    meal_features[w.slot] = f;
                    if let (Some(b), Some(f)) = (bundle.as_mut(), f) {
                        b.meal_step(w.slot, &f, Some(b_k));
                    }
                }
                if let Some(f) = basal_features(&since_injection, th, norm) {
                    basal_state = Some(build_state(AgentKind::Basal, &f, Some(b_k)));
                    if let Some(b) = bundle.as_mut() {
                        b.basal_step(&f, Some(b_k), prev_tdd);
                    }
                }
                let dose = therapy_of(&bundle, &therapy).basal;
                let rec = InsulinRecord { dose, kind: InsulinKind::Basal, timestamp: t };
                trace.insulin.push(rec);
                inputs.long_insulin_u += dose;
                since_injection.clear();
                last_bedtime = Some(m);
            }

            for m in sched.meals.iter().chain(std::iter::once(&sched.snack)) {
                if minute >= m.start && minute < m.end() {
                    inputs.cho_g += m.cho / m.duration as f64;
                }
            }

            let sensitivity = schedule.dawn_multiplier(minute as f64) * day_factor;
            state = step(&state, patient, sensitivity, &inputs, 1.0)?;
        }

        if collecting {
            log.insulin.extend(trace.insulin.iter().copied());
        }
        if let Some(b) = bundle.as_ref() {
            therapy = b.therapy.clone();
        }
        trace.therapy = snapshot(&therapy);
        prev_tdd = Some(trace.total_insulin());

        if arm == Arm::Abba && day == opts.collection_days {
            let (b, summary) = initialise(patient, &therapy, &log, subject, opts)?;
            let mut b = b;
            for (slot, f) in meal_features.iter().enumerate() {
                if let Some(f) = f {
                    b.meal_step(slot, f, (slot == 2).then_some(b_today));
                }
            }
            if let Some(s) = basal_state.take() {
                b.prime(AgentKind::Basal, s);
            }
            therapy = b.therapy.clone();
            bundle = Some(b);
            init = Some(summary);
        }
        days.push(trace);
    }

    Ok(TrialResult {
        patient: patient.id,
        diabetes_type: t2,
        scenario: spec.id,
        arm,
        collection_days: opts.collection_days,
        days,
        bundle,
        init,
    })
}

fn therapy_of<'a>(bundle: &'a Option<AgentBundle>, fallback: &'a TherapyParams) -> &'a TherapyParams {
    bundle.as_ref().map(|b| &b.therapy).unwrap_or(fallback)
}

/// Build the agent bundle from the collected data.
pub fn initialise(
    patient: &PatientParams,
    therapy: &TherapyParams,
    log: &CollectionLog,
    subject: u64,
    opts: &TrialOptions,
) -> Result<(AgentBundle, InitSummary)> {
    let ai = active_insulin_series(log, opts.dia);
    let te = transfer_entropy(&ai, &log.cgm, 4, 1)?;
    let risk = classify(log, patient.diabetes_type);
    let hps = select_hyperparameters(risk, patient.diabetes_type);
    let thetas = AgentKind::ALL.iter().map(|&k| init_policy_params(te, k)).collect();
    let mut rng = seed::stream(subject, &[purpose::AGENTS]);
    let bundle = AgentBundle::new(therapy.clone(), thetas, hps, Beta::for_type(patient.diabetes_type), &mut rng);
    let summary = InitSummary {
        transfer_entropy: te,
        cgm_sd: std_dev(&log.cgm),
        overnight_low_fraction: overnight_low_fraction(log),
        risk,
    };
    Ok((bundle, summary))
}
