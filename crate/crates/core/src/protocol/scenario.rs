use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 4] = [ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::S4];
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", *self as u8 + 1)
    }
}

impl FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S1" => Ok(ScenarioId::S1),
            "S2" => Ok(ScenarioId::S2),
            "S3" => Ok(ScenarioId::S3),
            "S4" => Ok(ScenarioId::S4),
            other => Err(Error::InvalidArgument(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Clock minutes, `[lo, hi]`.
pub type ClockRange = (u32, u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MealSpec {
    /// g
    pub cho: (f64, f64),
    pub time: ClockRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    /// Breakfast, lunch, dinner.
    pub meals: [MealSpec; 3],
    pub snack_cho: (f64, f64),
    pub snack_windows: [ClockRange; 3],
    pub meal_duration: (u32, u32),
    pub snack_duration: (u32, u32),
    /// Announced / true CHO; `None` disables misestimation.
    pub misestimation: Option<(f64, f64)>,
    /// Half-width of the per-day sensitivity factor.
    pub interday_sensitivity: f64,
    pub correction_boluses: bool,
    /// Post-prandial reading delay after meal start, min.
    pub post_prandial_delay: u32,
    /// Dawn phenomenon for type 1 subjects.
    pub dawn: bool,
    pub days: u32,
    /// Bolus lead before the meal, min.
    pub bolus_lead: (u32, u32),
    /// `[start, end)`, clock minutes.
    pub basal_window: ClockRange,
    pub rescue_threshold: f64,
    pub rescue_rearm: f64,
    pub rescue_cho: f64,
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId) -> Self {
        ScenarioSpec {
            id,
            meals: [
                MealSpec { cho: (42.0, 98.0), time: (420, 540) },
                MealSpec { cho: (60.0, 140.0), time: (750, 810) },
                MealSpec { cho: (54.0, 126.0), time: (1140, 1200) },
            ],
            snack_cho: (5.0, 21.0),
            snack_windows: [(600, 660), (900, 1080), (1260, 1350)],
            meal_duration: (15, 30),
            snack_duration: (3, 8),
            misestimation: Some(if id == ScenarioId::S3 { (0.5, 1.5) } else { (0.7, 1.1) }),
            interday_sensitivity: if id == ScenarioId::S2 { 0.3 } else { 0.0 },
            correction_boluses: id == ScenarioId::S4,
            post_prandial_delay: 120,
            dawn: true,
            days: 90,
            bolus_lead: (5, 15),
            basal_window: (1320, 1440),
            rescue_threshold: 30.0,
            rescue_rearm: 70.0,
            rescue_cho: 20.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.days < 15 {
            return bad(format!(
                "days = {}: on-line phase requires the 14-day collection window plus at least one day",
                self.days
            ));
        }
        if let Some((lo, hi)) = self.misestimation {
            if !(lo > 0.0 && lo <= hi) {
                return bad(format!("misestimation interval [{lo}, {hi}] is invalid"));
            }
        }
        if !(0.0..1.0).contains(&self.interday_sensitivity) {
            return bad("interday sensitivity must be in [0, 1)".into());
        }
        if !(self.rescue_threshold > 0.0 && self.rescue_threshold < self.rescue_rearm) {
            return bad("rescue threshold must be positive and below the re-arm level".into());
        }
        if self.basal_window.0 >= self.basal_window.1 || self.basal_window.1 > 1440 {
            return bad("basal window must lie within the day".into());
        }
        let last_event = self.meals[2].time.1 + self.meal_duration.1;
        if last_event >= self.basal_window.1 {
            return bad("dinner must end before the basal window closes".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MealEvent {
    /// clock minute of the first bite
    pub start: u32,
    pub duration: u32,
    /// g
    pub cho: f64,
}

impl MealEvent {
    pub fn end(&self) -> u32 {
        self.start + self.duration
    }
}

/// One day's randomised events.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySchedule {
    pub meals: [MealEvent; 3],
    /// Bolus lead per main meal, min.
    pub leads: [u32; 3],
    pub snack: MealEvent,
    /// Which of the snack windows was used.
    pub snack_window: usize,
    /// Clock minute of the bedtime reading and basal injection.
    pub basal_time: u32,
}

impl DaySchedule {
    pub fn bolus_time(&self, slot: usize) -> u32 {
        self.meals[slot].start - self.leads[slot]
    }
}

fn uniform_minute(rng: &mut impl Rng, (lo, hi): ClockRange) -> u32 {
    rng.random_range(lo..=hi)
}

/// Sample three meals, one snack and the basal time. Nothing happens after
/// the basal injection.
pub fn sample_day(spec: &ScenarioSpec, rng: &mut impl Rng) -> DaySchedule {
    let mut meals = [MealEvent { start: 0, duration: 0, cho: 0.0 }; 3];
    let mut leads = [0; 3];
    for (i, m) in spec.meals.iter().enumerate() {
        meals[i] = MealEvent {
            start: uniform_minute(rng, m.time),
            duration: uniform_minute(rng, spec.meal_duration),
            cho: rng.random_range(m.cho.0..=m.cho.1),
        };
        leads[i] = uniform_minute(rng, spec.bolus_lead);
    }
    let snack_window = rng.random_range(0..spec.snack_windows.len());
    let snack = MealEvent {
        start: uniform_minute(rng, spec.snack_windows[snack_window]),
        duration: uniform_minute(rng, spec.snack_duration),
        cho: rng.random_range(spec.snack_cho.0..=spec.snack_cho.1),
    };
    let mut earliest = spec.basal_window.0.max(snack.end()).max(meals[2].end());
    if spec.correction_boluses {
        earliest = earliest.max(meals[2].start + spec.post_prandial_delay + 1);
    }
    let earliest = earliest.min(spec.basal_window.1 - 1);
    let basal_time = rng.random_range(earliest..spec.basal_window.1);
    DaySchedule { meals, leads, snack, snack_window, basal_time }
}

/// CHO the subject reports; the advisor never sees the true amount.
pub fn announce_cho(true_cho: f64, spec: &ScenarioSpec, rng: &mut impl Rng) -> f64 {
    match spec.misestimation {
        Some((lo, hi)) => true_cho * rng.random_range(lo..=hi),
        None => true_cho,
    }
}
