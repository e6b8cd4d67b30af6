use crate::advisor::{iob, InsulinRecord};
use crate::patient::DiabetesType;

pub const CGM_PERIOD_MIN: u64 = 5;
pub const COLLECTION_DAYS: u64 = 14;
pub const SAMPLES_PER_DAY: usize = (1440 / CGM_PERIOD_MIN) as usize;
/// Overnight window for the nocturnal risk, clock minutes [start, end).
pub const OVERNIGHT: (u64, u64) = (0, 360);

/// Two weeks of CGM and insulin under the static calculator.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CollectionLog {
    /// Trial minute of the first sample; a multiple of 1440.
    pub start_minute: u64,
    /// mg/dL, one sample every [`CGM_PERIOD_MIN`] minutes.
    pub cgm: Vec<f64>,
    pub insulin: Vec<InsulinRecord>,
    /// Long-acting insulin expressed as U/min, aligned with `cgm`.
    pub basal_rate: Vec<f64>,
}

impl CollectionLog {
    pub fn sample_minute(&self, i: usize) -> u64 {
        self.start_minute + i as u64 * CGM_PERIOD_MIN
    }

    pub fn is_complete(&self) -> bool {
        self.cgm.len() == COLLECTION_DAYS as usize * SAMPLES_PER_DAY && self.basal_rate.len() == self.cgm.len()
    }
}

/// Bolus IOB plus the insulin on board of a steady basal infusion under the
/// same linear curve (rate · DIA / 2).
pub fn active_insulin_series(log: &CollectionLog, dia: f64) -> Vec<f64> {
    (0..log.cgm.len())
        .map(|i| iob(&log.insulin, log.sample_minute(i), dia) + log.basal_rate[i] * dia / 2.0)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variability {
    Normal,
    Increased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NocturnalRisk {
    Normal,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RiskClass {
    pub variability: Variability,
    pub nocturnal_risk: NocturnalRisk,
}

/// (SD threshold mg/dL, overnight fraction below 70).
pub fn risk_thresholds(t: DiabetesType) -> (f64, f64) {
    match t {
        DiabetesType::T1D => (57.0, 0.21),
        DiabetesType::T2D => (59.0, 0.42),
    }
}

/// Sample standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

pub fn overnight_low_fraction(log: &CollectionLog) -> f64 {
    let (mut low, mut total) = (0usize, 0usize);
    for (i, &g) in log.cgm.iter().enumerate() {
        let clock = log.sample_minute(i) % 1440;
        if clock >= OVERNIGHT.0 && clock < OVERNIGHT.1 {
            total += 1;
            if g < 70.0 {
                low += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        low as f64 / total as f64
    }
}

pub fn classify_values(sd: f64, overnight_low: f64, t: DiabetesType) -> RiskClass {
    let (sd_max, low_max) = risk_thresholds(t);
    RiskClass {
        variability: if sd > sd_max { Variability::Increased } else { Variability::Normal },
        nocturnal_risk: if overnight_low > low_max { NocturnalRisk::High } else { NocturnalRisk::Normal },
    }
}

pub fn classify(log: &CollectionLog, t: DiabetesType) -> RiskClass {
    classify_values(std_dev(&log.cgm), overnight_low_fraction(log), t)
}
