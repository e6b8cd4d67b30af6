use abba::advisor::{InsulinKind, Slot, Thresholds};
use abba::patient::{generate_cohort, DiabetesType, PatientParams};
use abba::protocol::{run_trial, Arm, ScenarioId, ScenarioSpec, TrialResult};

const SEED: u64 = 11;

fn spec(id: ScenarioId, days: u32) -> ScenarioSpec {
    let mut s = ScenarioSpec::new(id);
    s.days = days;
    s
}

fn patients(t: DiabetesType) -> Vec<PatientParams> {
    generate_cohort(3, t, SEED).unwrap()
}

fn both(p: &PatientParams, s: &ScenarioSpec) -> (TrialResult, TrialResult) {
    (run_trial(p, Arm::Abba, s, SEED).unwrap(), run_trial(p, Arm::Bba, s, SEED).unwrap())
}

#[test]
fn trials_are_deterministic() {
    let s = spec(ScenarioId::S2, 30);
    for t in [DiabetesType::T1D, DiabetesType::T2D] {
        let p = &patients(t)[0];
        assert_eq!(run_trial(p, Arm::Abba, &s, SEED).unwrap(), run_trial(p, Arm::Abba, &s, SEED).unwrap());
        assert_eq!(run_trial(p, Arm::Bba, &s, SEED).unwrap(), run_trial(p, Arm::Bba, &s, SEED).unwrap());
    }
}

#[test]
fn bba_therapy_never_changes() {
    let s = spec(ScenarioId::S1, 90);
    let p = &patients(DiabetesType::T1D)[1];
    let r = run_trial(p, Arm::Bba, &s, SEED).unwrap();
    assert_eq!(r.days[14].therapy, r.days[89].therapy);
    assert!(r.days.iter().all(|d| d.therapy == r.days[0].therapy));
    assert!(r.bundle.is_none());
}

#[test]
fn collection_phase_is_identical_across_arms() {
    let s = spec(ScenarioId::S1, 30);
    for t in [DiabetesType::T1D, DiabetesType::T2D] {
        for p in &patients(t) {
            let (a, b) = both(p, &s);
            for d in 0..14 {
                assert_eq!(a.days[d].therapy, a.days[0].therapy, "ABBA therapy moved on day {}", d + 1);
                assert_eq!(a.days[d].glucose, b.days[d].glucose, "arms diverged on day {}", d + 1);
            }
            assert!(a.init.is_some());
        }
    }
}

#[test]
fn learned_therapy_stays_within_clamps() {
    let s = spec(ScenarioId::S3, 60);
    for t in [DiabetesType::T1D, DiabetesType::T2D] {
        for p in &patients(t) {
            let r = run_trial(p, Arm::Abba, &s, SEED).unwrap();
            let init = r.days[0].therapy;
            for d in &r.days {
                let th = d.therapy;
                for i in 0..3 {
                    assert!(th.icr[i] >= 0.5 * init.icr[i] - 1e-12 && th.icr[i] <= 2.0 * init.icr[i] + 1e-12);
                    assert!(th.ps[i] >= 0.5 - 1e-12 && th.ps[i] <= 2.0 + 1e-12);
                }
                assert!(th.basal >= 0.5 * init.basal - 1e-12 && th.basal <= 2.0 * init.basal + 1e-12);
            }
        }
    }
}

#[test]
fn measurement_protocol() {
    for id in [ScenarioId::S1, ScenarioId::S4] {
        let s = spec(id, 30);
        let p = &patients(DiabetesType::T1D)[2];
        for arm in Arm::ALL {
            let r = run_trial(p, arm, &s, SEED).unwrap();
            for d in &r.days {
                let count = |slot: Slot| d.measurements.iter().filter(|m| m.slot == slot).count();
                for slot in [Slot::PreBreakfast, Slot::PreLunch, Slot::PreDinner, Slot::Bedtime] {
                    assert_eq!(count(slot), 1, "{id} {arm} day {} {slot:?}", d.day);
                }
                let post = if id == ScenarioId::S4 { 3 } else { 0 };
                assert_eq!(count(Slot::PostPrandial), post);
                assert_eq!(count(Slot::Rescue), d.rescues.len());
                assert_eq!(d.measurements.len(), 4 + post + d.rescues.len());
            }
        }
    }
}

#[test]
fn corrections_only_after_high_post_prandial_readings() {
    let s = spec(ScenarioId::S4, 40);
    let th = Thresholds::default();
    let mut seen = 0;
    for t in [DiabetesType::T1D, DiabetesType::T2D] {
        for p in &patients(t) {
            for arm in Arm::ALL {
                let r = run_trial(p, arm, &s, SEED).unwrap();
                for d in &r.days {
                    for rec in d.insulin.iter().filter(|r| r.kind == InsulinKind::Correction) {
                        let m = d
                            .measurements
                            .iter()
                            .find(|m| m.timestamp == rec.timestamp && m.slot == Slot::PostPrandial)
                            .expect("correction without a post-prandial reading");
                        assert!(m.value > th.hyper, "correction at {}", m.value);
                        seen += 1;
                    }
                }
            }
        }
    }
    assert!(seen > 0, "no corrections happened at all");
    let r = run_trial(&patients(DiabetesType::T1D)[0], Arm::Abba, &spec(ScenarioId::S1, 30), SEED).unwrap();
    assert!(r.days.iter().flat_map(|d| &d.insulin).all(|r| r.kind != InsulinKind::Correction));
}

#[test]
fn events_are_ordered_and_doses_non_negative() {
    let s = spec(ScenarioId::S4, 30);
    for t in [DiabetesType::T1D, DiabetesType::T2D] {
        let r = run_trial(&patients(t)[0], Arm::Abba, &s, SEED).unwrap();
        for d in &r.days {
            let start = d.start_minute();
            let end = start + 1440;
            assert_eq!(d.glucose.len(), 1440);
            assert!(d.measurements.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
            assert!(d.insulin.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
            assert!(d.measurements.iter().all(|m| (start..end).contains(&m.timestamp)));
            assert!(d.insulin.iter().all(|i| (start..end).contains(&i.timestamp) && i.dose >= 0.0));
            assert_eq!(d.insulin.iter().filter(|i| i.kind == InsulinKind::Basal).count(), 1);
            // every bolus follows its pre-meal reading and precedes the meal
            for (slot, meal) in d.meals.iter().filter(|m| m.announced_cho.is_some()).enumerate() {
                let pre = [Slot::PreBreakfast, Slot::PreLunch, Slot::PreDinner][slot];
                let reading = d.measurements.iter().find(|m| m.slot == pre).unwrap();
                assert!(reading.timestamp <= meal.start);
            }
        }
    }
}

#[test]
fn rescues_fire_below_threshold() {
    let s = spec(ScenarioId::S1, 60);
    for p in &patients(DiabetesType::T1D) {
        let r = run_trial(p, Arm::Bba, &s, SEED).unwrap();
        for e in r.days.iter().flat_map(|d| &d.rescues) {
            assert!(e.glucose < s.rescue_threshold);
            assert_eq!(e.cho, s.rescue_cho);
        }
    }
}

#[test]
fn scenario_and_arm_share_subject_streams() {
    // Same subject seed: meals of S1 and S4 coincide.
    let p = &patients(DiabetesType::T2D)[0];
    let a = run_trial(p, Arm::Bba, &spec(ScenarioId::S1, 20), SEED).unwrap();
    let b = run_trial(p, Arm::Abba, &spec(ScenarioId::S4, 20), SEED).unwrap();
    for (x, y) in a.days.iter().zip(&b.days) {
        let starts = |d: &abba::protocol::DayTrace| d.meals.iter().map(|m| (m.start, m.true_cho)).collect::<Vec<_>>();
        assert_eq!(starts(x), starts(y));
    }
}
