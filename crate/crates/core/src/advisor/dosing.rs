use super::features::Thresholds;

/// Duration of rapid-acting insulin action, min.
pub const DEFAULT_DIA: f64 = 240.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InsulinKind {
    Bolus,
    Basal,
    Correction,
}

impl InsulinKind {
    pub fn code(self) -> &'static str {
        match self {
            InsulinKind::Bolus => "bolus",
            InsulinKind::Basal => "basal",
            InsulinKind::Correction => "correction",
        }
    }

    pub fn from_code(s: &str) -> Option<InsulinKind> {
        [InsulinKind::Bolus, InsulinKind::Basal, InsulinKind::Correction]
            .into_iter()
            .find(|k| k.code() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InsulinRecord {
    /// U
    pub dose: f64,
    pub kind: InsulinKind,
    /// minutes since trial start
    pub timestamp: u64,
}

/// Bolus insulin on board at `now`, linear decay over `dia`. Basal records
/// are not counted.
pub fn iob(records: &[InsulinRecord], now: u64, dia: f64) -> f64 {
    records
        .iter()
        .filter(|r| r.kind != InsulinKind::Basal && r.timestamp <= now)
        .map(|r| r.dose * (1.0 - (now - r.timestamp) as f64 / dia).max(0.0))
        .sum()
}

/// Current bolus-calculator settings and the initial values that anchor the
/// clamp bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct TherapyParams {
    /// g/U per meal
    pub icr: [f64; 3],
    pub ps: [f64; 3],
    /// (mg/dL)/U
    pub cf: f64,
    /// U/day
    pub basal: f64,
    pub icr_init: [f64; 3],
    pub ps_init: [f64; 3],
    pub basal_init: f64,
}

impl TherapyParams {
    pub fn new(icr: [f64; 3], cf: f64, basal: f64) -> Self {
        TherapyParams {
            icr,
            ps: [1.0; 3],
            cf,
            basal,
            icr_init: icr,
            ps_init: [1.0; 3],
            basal_init: basal,
        }
    }

    pub fn is_valid(&self) -> bool {
        let within = |a: f64, init: f64| a > 0.0 && a >= 0.5 * init && a <= 2.0 * init;
        self.cf > 0.0
            && (0..3).all(|i| within(self.icr[i], self.icr_init[i]) && within(self.ps[i], self.ps_init[i]))
            && within(self.basal, self.basal_init)
    }
}

/// Meal bolus: `(cho/ICR + (G_c - G_T)/CF)·PS - IOB`, floored at 0.
pub fn bolus_recommendation(cho_g: f64, g_c: f64, therapy: &TherapyParams, slot: usize, iob_u: f64, th: &Thresholds) -> f64 {
    let raw = (cho_g / therapy.icr[slot] + (g_c - th.target) / therapy.cf) * therapy.ps[slot] - iob_u;
    raw.max(0.0)
}

/// The standard calculator: PS fixed to 1.
pub fn bba_recommendation(cho_g: f64, g_c: f64, icr: f64, cf: f64, iob_u: f64, th: &Thresholds) -> f64 {
    (cho_g / icr + (g_c - th.target) / cf - iob_u).max(0.0)
}

/// Correction dose at a post-prandial reading; `None` unless above the hyper
/// threshold.
pub fn correction_bolus(g_c: f64, cf: f64, ps: f64, iob_u: f64, th: &Thresholds) -> Option<f64> {
    (g_c > th.hyper).then(|| (((g_c - th.target) / cf) * ps - iob_u).max(0.0))
}
