//! Cohort aggregation over analysis windows, CSV export and an SVG chart.

use std::fmt::{self, Write as _};
use std::io::Write;

use statrs::statistics::{Data, OrderStatistics};

use super::metrics::GlycemicSummary;
use super::stats::{paired_compare, Comparison};
use crate::error::{Error, Result};
use crate::patient::DiabetesType;
use crate::protocol::{Arm, ScenarioId, TrialResult};

/// Significance level used in reports.
pub const REPORT_ALPHA: f64 = 0.01;
pub const WINDOW_DAYS: u32 = 28;
pub const WINDOW_STEP_DAYS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Every day after data collection.
    Full,
    First4w,
    Last4w,
    /// Four weeks starting at the given 1-based trial week.
    Sliding { week: u32 },
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowKind::Full => f.write_str("full"),
            WindowKind::First4w => f.write_str("first4w"),
            WindowKind::Last4w => f.write_str("last4w"),
            WindowKind::Sliding { week } => write!(f, "week{week:02}"),
        }
    }
}

/// Inclusive 1-based day range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub kind: WindowKind,
    pub first_day: u32,
    pub last_day: u32,
}

impl Window {
    pub fn days(&self) -> u32 {
        self.last_day + 1 - self.first_day
    }
}

/// Analysis windows for a trial of `total_days` whose first
/// `collection_days` are the data-collection phase. Sliding windows start
/// every week after collection until one reaches the end; the last may be
/// short.
pub fn report_windows(total_days: u32, collection_days: u32) -> Result<Vec<Window>> {
    if total_days <= collection_days {
        return Err(Error::InvalidArgument(format!(
            "trial of {total_days} days has no days after the {collection_days}-day collection"
        )));
    }
    let start = collection_days + 1;
    let clip = |d: u32| d.min(total_days);
    let mut w = vec![
        Window { kind: WindowKind::Full, first_day: start, last_day: total_days },
        Window { kind: WindowKind::First4w, first_day: start, last_day: clip(start + WINDOW_DAYS - 1) },
        Window {
            kind: WindowKind::Last4w,
            first_day: total_days.saturating_sub(WINDOW_DAYS - 1).max(start),
            last_day: total_days,
        },
    ];
    let mut first = start;
    loop {
        let last = clip(first + WINDOW_DAYS - 1);
        w.push(Window { kind: WindowKind::Sliding { week: (first - 1) / 7 + 1 }, first_day: first, last_day: last });
        if last == total_days {
            break;
        }
        first += WINDOW_STEP_DAYS;
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Tir,
    Tbr1,
    Tbr2,
    Tar,
    HypoEvents,
    HyperEvents,
    MeanGlucose,
    MaxGlucose,
    MinGlucose,
    Hba1c,
    Lbgi,
    Tdd,
    Rescues,
}

impl Metric {
    pub const ALL: [Metric; 13] = [
        Metric::Tir,
        Metric::Tbr1,
        Metric::Tbr2,
        Metric::Tar,
        Metric::HypoEvents,
        Metric::HyperEvents,
        Metric::MeanGlucose,
        Metric::MaxGlucose,
        Metric::MinGlucose,
        Metric::Hba1c,
        Metric::Lbgi,
        Metric::Tdd,
        Metric::Rescues,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Tir => "tir_pct",
            Metric::Tbr1 => "tbr1_pct",
            Metric::Tbr2 => "tbr2_pct",
            Metric::Tar => "tar_pct",
            Metric::HypoEvents => "hypo_events",
            Metric::HyperEvents => "hyper_events",
            Metric::MeanGlucose => "mean_glucose",
            Metric::MaxGlucose => "max_glucose",
            Metric::MinGlucose => "min_glucose",
            Metric::Hba1c => "hba1c_pct",
            Metric::Lbgi => "lbgi",
            Metric::Tdd => "tdd_u_per_day",
            Metric::Rescues => "rescues",
        }
    }

    pub fn value(self, s: &GlycemicSummary) -> f64 {
        match self {
            Metric::Tir => s.tir_pct,
            Metric::Tbr1 => s.tbr1_pct,
            Metric::Tbr2 => s.tbr2_pct,
            Metric::Tar => s.tar_pct,
            Metric::HypoEvents => s.hypo_events as f64,
            Metric::HyperEvents => s.hyper_events as f64,
            Metric::MeanGlucose => s.mean_glucose,
            Metric::MaxGlucose => s.max_glucose,
            Metric::MinGlucose => s.min_glucose,
            Metric::Hba1c => s.hba1c_pct,
            Metric::Lbgi => s.lbgi,
            Metric::Tdd => s.tdd_u_per_day,
            Metric::Rescues => s.rescues as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Descriptive {
    pub n: usize,
    pub mean: f64,
    /// Sample SD; 0 for a single value.
    pub sd: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Descriptive {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Descriptive { n, mean: f64::NAN, sd: f64::NAN, median: f64::NAN, q1: f64::NAN, q3: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut data = Data::new(values.to_vec());
        Descriptive { n, mean, sd, median: data.median(), q1: data.lower_quartile(), q3: data.upper_quartile() }
    }
}

/// Per-patient summaries of one arm, indexed `[window][patient]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmReport {
    pub arm: Arm,
    pub per_window: Vec<Vec<GlycemicSummary>>,
}

impl ArmReport {
    pub fn values(&self, window: usize, metric: Metric) -> Vec<f64> {
        self.per_window[window].iter().map(|s| metric.value(s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub scenario: ScenarioId,
    pub diabetes_type: DiabetesType,
    /// Patient ids in summary order.
    pub patients: Vec<u32>,
    pub windows: Vec<Window>,
    pub arms: Vec<ArmReport>,
    /// ABBA against BBA, `[window][metric]`; empty unless both arms ran.
    pub comparisons: Vec<Vec<Comparison>>,
}

impl TrialReport {
    pub fn arm(&self, arm: Arm) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.arm == arm)
    }

    pub fn window_index(&self, kind: WindowKind) -> Option<usize> {
        self.windows.iter().position(|w| w.kind == kind)
    }

    pub fn comparison(&self, kind: WindowKind, metric: Metric) -> Option<&Comparison> {
        let w = self.window_index(kind)?;
        let m = Metric::ALL.iter().position(|&x| x == metric)?;
        self.comparisons.get(w).map(|row| &row[m])
    }

    pub fn describe(&self, arm: Arm, kind: WindowKind, metric: Metric) -> Option<Descriptive> {
        let w = self.window_index(kind)?;
        Some(Descriptive::of(&self.arm(arm)?.values(w, metric)))
    }
}

/// Aggregate trial results into a report. All results must share scenario,
/// type and length; when both arms are present they must cover the same
/// patients.
pub fn summarize_cohort(results: &[TrialResult]) -> Result<TrialReport> {
    let first = results.first().ok_or_else(|| Error::CohortMismatch("no results to summarise".into()))?;
    for r in results {
        if r.scenario != first.scenario || r.diabetes_type != first.diabetes_type {
            return Err(Error::CohortMismatch(format!(
                "patient {} is {} {} but the cohort is {} {}",
                r.patient, r.diabetes_type, r.scenario, first.diabetes_type, first.scenario
            )));
        }
        if r.days.len() != first.days.len() || r.collection_days != first.collection_days {
            return Err(Error::CohortMismatch(format!("patient {} has a different trial length", r.patient)));
        }
    }
    let windows = report_windows(first.days.len() as u32, first.collection_days)?;

    let mut arms = Vec::new();
    let mut patients: Option<Vec<u32>> = None;
    for arm in Arm::ALL {
        let mut of_arm: Vec<&TrialResult> = results.iter().filter(|r| r.arm == arm).collect();
        if of_arm.is_empty() {
            continue;
        }
        of_arm.sort_by_key(|r| r.patient);
        let ids: Vec<u32> = of_arm.iter().map(|r| r.patient).collect();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::CohortMismatch(format!("duplicate patient in {arm} arm")));
        }
        match &patients {
            Some(p) if *p != ids => {
                return Err(Error::CohortMismatch(format!("{arm} arm covers different patients")));
            }
            _ => patients = Some(ids),
        }
        let per_window = windows
            .iter()
            .map(|w| {
                of_arm
                    .iter()
                    .map(|r| GlycemicSummary::from_days(&r.days[(w.first_day - 1) as usize..w.last_day as usize]))
                    .collect()
            })
            .collect();
        arms.push(ArmReport { arm, per_window });
    }

    let mut comparisons = Vec::new();
    if let [a, b] = arms.as_slice() {
        for w in 0..windows.len() {
            let row = Metric::ALL
                .iter()
                .map(|&m| paired_compare(&a.values(w, m), &b.values(w, m), REPORT_ALPHA))
                .collect::<Result<Vec<_>>>()?;
            comparisons.push(row);
        }
    }
    Ok(TrialReport {
        scenario: first.scenario,
        diabetes_type: first.diabetes_type,
        patients: patients.unwrap_or_default(),
        windows,
        arms,
        comparisons,
    })
}

pub const REPORT_COLUMNS: &str =
    "scenario,type,window,first_day,last_day,metric,arm,n,mean,sd,median,q1,q3,test,statistic,p_value,significant";

fn num(v: f64) -> String {
    if v.is_finite() {
        // adding 0.0 turns -0.0 into 0.0
        format!("{:.6}", v + 0.0)
    } else {
        String::new()
    }
}

/// One row per metric per arm per window. `header` becomes the first line
/// (prefixed with `# `).
pub fn write_report_csv(out: &mut impl Write, header: &str, report: &TrialReport) -> Result<()> {
    writeln!(out, "# {header}")?;
    writeln!(out, "{REPORT_COLUMNS}")?;
    for (wi, w) in report.windows.iter().enumerate() {
        for (mi, &m) in Metric::ALL.iter().enumerate() {
            let cmp = report.comparisons.get(wi).map(|row| row[mi]);
            for a in &report.arms {
                let d = Descriptive::of(&a.values(wi, m));
                let (test, stat, p, sig) = match cmp {
                    Some(c) => (c.test.to_string(), num(c.statistic), num(c.p_value), c.significant.to_string()),
                    None => Default::default(),
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    report.scenario,
                    report.diabetes_type,
                    w.kind,
                    w.first_day,
                    w.last_day,
                    m.name(),
                    a.arm,
                    d.n,
                    num(d.mean),
                    num(d.sd),
                    num(d.median),
                    num(d.q1),
                    num(d.q3),
                    test,
                    stat,
                    p,
                    sig
                )?;
            }
        }
    }
    Ok(())
}

/// Line chart of cohort-mean TIR, TBR I and TAR over the sliding windows;
/// ABBA solid, BBA dashed.
pub fn render_svg(header: &str, report: &TrialReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 140.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    let sliding: Vec<(usize, u32)> = report
        .windows
        .iter()
        .enumerate()
        .filter_map(|(i, w)| match w.kind {
            WindowKind::Sliding { week } => Some((i, week)),
            _ => None,
        })
        .collect();
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let x = |k: usize| {
        if sliding.len() > 1 {
            LEFT + plot_w * k as f64 / (sliding.len() - 1) as f64
        } else {
            LEFT + plot_w / 2.0
        }
    };
    let y = |pct: f64| TOP + plot_h * (1.0 - pct / 100.0);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, "<!-- {} -->", header.replace("--", "- -"));
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{LEFT}" y="24" font-family="sans-serif" font-size="14">{} {}: time in ranges over 4-week windows</text>"#,
        report.diabetes_type, report.scenario
    );
    for pct in [0.0, 25.0, 50.0, 75.0, 100.0] {
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{0:.1}" x2="{1:.1}" y2="{0:.1}" stroke="#ddd"/><text x="{2:.1}" y="{3:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{pct}</text>"##,
            y(pct),
            LEFT + plot_w,
            LEFT - 6.0,
            y(pct) + 4.0
        );
    }
    for (k, &(_, week)) in sliding.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{week}</text>"#,
            x(k),
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">window start (week)</text>"#,
        LEFT + plot_w / 2.0,
        H - 10.0
    );
    let series = [(Metric::Tir, "#2a7ab0"), (Metric::Tbr1, "#c0392b"), (Metric::Tar, "#e69f00")];
    let mut legend_y = TOP + 10.0;
    for a in &report.arms {
        let dash = if a.arm == Arm::Bba { r#" stroke-dasharray="6 4""# } else { "" };
        for &(metric, colour) in &series {
            let pts: Vec<String> = sliding
                .iter()
                .enumerate()
                .map(|(k, &(wi, _))| {
                    let d = Descriptive::of(&a.values(wi, metric));
                    format!("{:.1},{:.1}", x(k), y(d.mean))
                })
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{colour}" stroke-width="2"{dash} points="{}"/>"#,
                pts.join(" ")
            );
            let lx = LEFT + plot_w + 12.0;
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.1}" y1="{legend_y:.1}" x2="{:.1}" y2="{legend_y:.1}" stroke="{colour}" stroke-width="2"{dash}/><text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">{} {}</text>"#,
                lx + 24.0,
                lx + 30.0,
                legend_y + 4.0,
                a.arm,
                metric.name().trim_end_matches("_pct").to_uppercase()
            );
            legend_y += 18.0;
        }
    }
    s.push_str("</svg>\n");
    s
}
