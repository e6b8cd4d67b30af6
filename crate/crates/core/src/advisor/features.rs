use crate::patient::DiabetesType;

/// Glycaemic thresholds, mg/dL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub hyper: f64,
    pub hypo: f64,
    /// Morning bound used by the overnight delta.
    pub hypo_margin: f64,
    pub hypo_severe: f64,
    pub rescue: f64,
    pub target: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            hyper: 180.0,
            hypo: 70.0,
            hypo_margin: 90.0,
            hypo_severe: 50.0,
            rescue: 30.0,
            target: 110.0,
        }
    }
}

impl Thresholds {
    pub fn is_ordered(&self) -> bool {
        self.rescue < self.hypo_severe
            && self.hypo_severe < self.hypo
            && self.hypo < self.hypo_margin
            && self.hypo_margin < self.target
            && self.target < self.hyper
    }
}

/// Fixed divisors mapping raw mean errors onto [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// 400 - 180
    pub hyper: f64,
    /// 70 - 20
    pub hypo: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization { hyper: 220.0, hypo: 50.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    PreBreakfast,
    PreLunch,
    PreDinner,
    Bedtime,
    PostPrandial,
    Rescue,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::PreBreakfast,
        Slot::PreLunch,
        Slot::PreDinner,
        Slot::Bedtime,
        Slot::PostPrandial,
        Slot::Rescue,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Slot::PreBreakfast => "pre_breakfast",
            Slot::PreLunch => "pre_lunch",
            Slot::PreDinner => "pre_dinner",
            Slot::Bedtime => "bedtime",
            Slot::PostPrandial => "post_prandial",
            Slot::Rescue => "rescue",
        }
    }

    pub fn from_code(s: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|slot| slot.code() == s)
    }
}

/// One SMBG reading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    /// mg/dL
    pub value: f64,
    /// minutes since trial start
    pub timestamp: u64,
    pub slot: Slot,
}

/// `[f_hyper, f_hypo]`, both in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub hyper: f64,
    pub hypo: f64,
}

impl FeatureVector {
    pub fn is_zero(&self) -> bool {
        self.hyper == 0.0 && self.hypo == 0.0
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.hyper, self.hypo]
    }
}

/// Signed distance of `g` from the target range.
pub fn glucose_error(g: f64, th: &Thresholds) -> f64 {
    if g > th.hyper {
        g - th.hyper
    } else if g < th.hypo {
        g - th.hypo
    } else {
        0.0
    }
}

/// Features of a set of readings; `None` when there are no readings, which
/// callers treat as "skip this update".
pub fn bolus_features(window: &[Measurement], th: &Thresholds, norm: &Normalization) -> Option<FeatureVector> {
    features_of(window.iter().map(|m| m.value), th, norm)
}

/// Same form as [`bolus_features`], pooled over every reading of the day.
pub fn basal_features(day: &[Measurement], th: &Thresholds, norm: &Normalization) -> Option<FeatureVector> {
    features_of(day.iter().map(|m| m.value), th, norm)
}

fn features_of(values: impl Iterator<Item = f64>, th: &Thresholds, norm: &Normalization) -> Option<FeatureVector> {
    let (mut any, mut sum_h, mut n_h, mut sum_l, mut n_l) = (false, 0.0, 0usize, 0.0, 0usize);
    for g in values {
        any = true;
        let e = glucose_error(g, th);
        if e > 0.0 {
            sum_h += e;
            n_h += 1;
        } else if e < 0.0 {
            sum_l += -e;
            n_l += 1;
        }
    }
    if !any {
        return None;
    }
    let mean = |s: f64, n: usize| if n == 0 { 0.0 } else { s / n as f64 };
    Some(FeatureVector {
        hyper: (mean(sum_h, n_h) / norm.hyper).clamp(0.0, 1.0),
        hypo: (mean(sum_l, n_l) / norm.hypo).clamp(0.0, 1.0),
    })
}

/// Raw (un-normalised) overnight delta.
pub fn overnight_delta_raw(morning: Option<f64>, night: Option<f64>, th: &Thresholds) -> [f64; 2] {
    let (Some(gm), Some(gn)) = (morning, night) else {
        return [0.0, 0.0];
    };
    let rise = if gm > th.hyper && gn < th.hyper { gm - gn } else { 0.0 };
    let fall = if gm < th.hypo_margin && gn > th.hypo_margin { gn - gm } else { 0.0 };
    [rise, fall]
}

/// Overnight delta `b_k` between last night's and this morning's reading,
/// normalised like the features.
pub fn overnight_delta(
    first_morning: Option<&Measurement>,
    last_night: Option<&Measurement>,
    th: &Thresholds,
    norm: &Normalization,
) -> [f64; 2] {
    let [rise, fall] = overnight_delta_raw(first_morning.map(|m| m.value), last_night.map(|m| m.value), th);
    [(rise / norm.hyper).clamp(0.0, 1.0), (fall / norm.hypo).clamp(0.0, 1.0)]
}

/// Cost weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta {
    pub hyper: f64,
    pub hypo: f64,
}

impl Beta {
    pub fn for_type(t: DiabetesType) -> Beta {
        match t {
            DiabetesType::T1D => Beta { hyper: 1.0, hypo: 10.0 },
            DiabetesType::T2D => Beta { hyper: 10.0, hypo: 1.0 },
        }
    }
}

/// Cost of a state; only the feature part of the state is charged.
pub fn cost(next_state: &[f64], beta: &Beta) -> f64 {
    beta.hyper * next_state[0] + beta.hypo * next_state[1]
}
