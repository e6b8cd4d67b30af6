use rand::Rng;

use crate::seed::{self, purpose};

/// Intra- and inter-day modulation of insulin sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivitySchedule {
    pub dawn_enabled: bool,
    /// Clock minute at which sensitivity starts to fall.
    pub dawn_start: u32,
    /// Clock minute at which sensitivity starts to recover.
    pub dawn_end: u32,
    pub dawn_factor: f64,
    pub transition_minutes: u32,
    /// Half-width of the uniform per-day multiplier; 0 disables it.
    pub interday_variability: f64,
}

impl Default for SensitivitySchedule {
    fn default() -> Self {
        SensitivitySchedule {
            dawn_enabled: false,
            dawn_start: 4 * 60,
            dawn_end: 8 * 60,
            dawn_factor: 0.5,
            transition_minutes: 30,
            interday_variability: 0.0,
        }
    }
}

impl SensitivitySchedule {
    pub fn with_dawn(mut self, on: bool) -> Self {
        self.dawn_enabled = on;
        self
    }

    pub fn with_interday(mut self, v: f64) -> Self {
        self.interday_variability = v;
        self
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.dawn_factor > 0.0
            && self.dawn_factor <= 1.0
            && self.transition_minutes > 0
            && self.dawn_start < self.dawn_end
            && (0.0..1.0).contains(&self.interday_variability);
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidArgument(format!("invalid sensitivity schedule {self:?}")))
        }
    }

    /// Dawn multiplier at `clock_minute` (0..1440).
    pub fn dawn_multiplier(&self, clock_minute: f64) -> f64 {
        if !self.dawn_enabled {
            return 1.0;
        }
        let ramp = self.transition_minutes as f64;
        let start = self.dawn_start as f64;
        let end = self.dawn_end as f64;
        let depth = 1.0 - self.dawn_factor;
        let t = clock_minute;
        let frac = if t < start || t >= end + ramp {
            0.0
        } else if t < start + ramp {
            (t - start) / ramp
        } else if t < end {
            1.0
        } else {
            1.0 - (t - end) / ramp
        };
        1.0 - depth * frac
    }

    /// Per-day multiplier drawn uniformly in `[1 - v, 1 + v]` from the
    /// subject's sensitivity stream for `day`.
    pub fn day_factor(&self, subject_seed: u64, day: u32) -> f64 {
        if self.interday_variability == 0.0 {
            return 1.0;
        }
        let v = self.interday_variability;
        seed::stream(subject_seed, &[purpose::SENSITIVITY, day as u64]).random_range(1.0 - v..=1.0 + v)
    }
}

/// Insulin-sensitivity multiplier at `clock_minute` of `day`.
pub fn effective_sensitivity(schedule: &SensitivitySchedule, clock_minute: f64, day: u32, subject_seed: u64) -> f64 {
    schedule.dawn_multiplier(clock_minute) * schedule.day_factor(subject_seed, day)
}
