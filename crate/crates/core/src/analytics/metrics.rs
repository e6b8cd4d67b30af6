//! Per-trace glycaemic outcome measures.

use crate::protocol::DayTrace;

pub const RANGE_LOW: f64 = 70.0;
pub const RANGE_HIGH: f64 = 180.0;
/// Level 2 hypoglycaemia bound for TBR II.
pub const SEVERE_LOW: f64 = 50.0;
/// Minutes beyond a threshold before an episode counts, and minutes back
/// inside before the next one can start.
pub const EVENT_PERSISTENCE_MIN: usize = 15;

/// Percentages (tir, tbr1, tbr2, tar) of a minute-resolution series.
/// An empty series gives all zeros.
pub fn time_in_ranges(series: &[f64]) -> (f64, f64, f64, f64) {
    if series.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let (mut below, mut severe, mut above) = (0usize, 0usize, 0usize);
    for &g in series {
        if g < RANGE_LOW {
            below += 1;
            if g < SEVERE_LOW {
                severe += 1;
            }
        } else if g > RANGE_HIGH {
            above += 1;
        }
    }
    let n = series.len();
    let pct = |k: usize| 100.0 * k as f64 / n as f64;
    let inside = n - below - above;
    (pct(inside), pct(below), pct(severe), pct(above))
}

fn count_episodes(series: &[f64], beyond: impl Fn(f64) -> bool) -> usize {
    let mut events = 0;
    let mut in_event = false;
    let (mut run_out, mut run_in) = (0usize, 0usize);
    for &g in series {
        if beyond(g) {
            run_out += 1;
            run_in = 0;
            if !in_event && run_out >= EVENT_PERSISTENCE_MIN {
                events += 1;
                in_event = true;
            }
        } else {
            run_in += 1;
            run_out = 0;
            if in_event && run_in >= EVENT_PERSISTENCE_MIN {
                in_event = false;
            }
        }
    }
    events
}

/// (hypo, hyper) episode counts under the 15-minute persistence rule.
pub fn count_events(series: &[f64]) -> (usize, usize) {
    (
        count_episodes(series, |g| g < RANGE_LOW),
        count_episodes(series, |g| g > RANGE_HIGH),
    )
}

/// Kovatchev low blood glucose index.
pub fn lbgi(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    let total: f64 = series
        .iter()
        .map(|&g| {
            let f = 1.509 * (g.max(1.0).ln().powf(1.084) - 5.381);
            if f < 0.0 {
                10.0 * f * f
            } else {
                0.0
            }
        })
        .sum();
    total / series.len() as f64
}

/// ADAG estimated HbA1c (%) from mean glucose.
pub fn hba1c_from_mean(mean_glucose: f64) -> f64 {
    (mean_glucose + 46.7) / 28.7
}

pub fn estimate_hba1c(series: &[f64]) -> f64 {
    hba1c_from_mean(series.iter().sum::<f64>() / series.len().max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GlycemicSummary {
    pub tir_pct: f64,
    pub tbr1_pct: f64,
    pub tbr2_pct: f64,
    pub tar_pct: f64,
    pub hypo_events: usize,
    pub hyper_events: usize,
    pub mean_glucose: f64,
    pub max_glucose: f64,
    pub min_glucose: f64,
    pub hba1c_pct: f64,
    pub lbgi: f64,
    pub tdd_u_per_day: f64,
    pub rescues: usize,
}

impl GlycemicSummary {
    pub fn from_series(series: &[f64]) -> Self {
        let (tir, tbr1, tbr2, tar) = time_in_ranges(series);
        let (hypo, hyper) = count_events(series);
        let n = series.len().max(1) as f64;
        let mean = series.iter().sum::<f64>() / n;
        GlycemicSummary {
            tir_pct: tir,
            tbr1_pct: tbr1,
            tbr2_pct: tbr2,
            tar_pct: tar,
            hypo_events: hypo,
            hyper_events: hyper,
            mean_glucose: mean,
            max_glucose: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_glucose: series.iter().copied().fold(f64::INFINITY, f64::min),
            hba1c_pct: hba1c_from_mean(mean),
            lbgi: lbgi(series),
            tdd_u_per_day: 0.0,
            rescues: 0,
        }
    }

    /// Summary over consecutive days; episodes may span midnight.
    pub fn from_days(days: &[DayTrace]) -> Self {
        let series: Vec<f64> = days.iter().flat_map(|d| d.glucose.iter().copied()).collect();
        let mut s = Self::from_series(&series);
        if !days.is_empty() {
            s.tdd_u_per_day = days.iter().map(DayTrace::total_insulin).sum::<f64>() / days.len() as f64;
        }
        s.rescues = days.iter().map(|d| d.rescues.len()).sum();
        s
    }
}
