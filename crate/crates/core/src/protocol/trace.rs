use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::scenario::ScenarioId;
use crate::advisor::{InsulinKind, InsulinRecord, Measurement, Slot};
use crate::error::{Error, Result};
use crate::patient::DiabetesType;

pub const TRACE_TAG: &str = "abba-trace";
pub const TRACE_VERSION: u32 = 1;
pub const TRACE_COLUMNS: &str = "day,minute,kind,value,aux";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Abba,
    Bba,
}

impl Arm {
    pub const ALL: [Arm; 2] = [Arm::Abba, Arm::Bba];
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Arm::Abba => "ABBA",
            Arm::Bba => "BBA",
        })
    }
}

impl FromStr for Arm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ABBA" => Ok(Arm::Abba),
            "BBA" => Ok(Arm::Bba),
            other => Err(Error::InvalidArgument(format!("unknown arm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MealKind {
    Breakfast,
    Lunch,
    Dinner,
    Snack,
}

impl MealKind {
    pub const MAIN: [MealKind; 3] = [MealKind::Breakfast, MealKind::Lunch, MealKind::Dinner];

    pub fn code(self) -> &'static str {
        match self {
            MealKind::Breakfast => "breakfast",
            MealKind::Lunch => "lunch",
            MealKind::Dinner => "dinner",
            MealKind::Snack => "snack",
        }
    }

    pub fn from_code(s: &str) -> Option<MealKind> {
        [MealKind::Breakfast, MealKind::Lunch, MealKind::Dinner, MealKind::Snack]
            .into_iter()
            .find(|k| k.code() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MealRecord {
    pub kind: MealKind,
    /// trial minute of the first bite
    pub start: u64,
    pub duration: u32,
    pub true_cho: f64,
    /// `None` for unannounced snacks.
    pub announced_cho: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescueEvent {
    pub timestamp: u64,
    /// true plasma glucose that triggered it
    pub glucose: f64,
    pub cho: f64,
}

/// Therapy in force at the end of the day.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TherapySnapshot {
    pub icr: [f64; 3],
    pub ps: [f64; 3],
    pub cf: f64,
    pub basal: f64,
}

/// Everything that happened on one simulated day.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DayTrace {
    /// 1-based
    pub day: u32,
    /// Plasma glucose at the start of each minute, 1440 values.
    pub glucose: Vec<f64>,
    /// Five-minute CGM samples, only while data are being collected.
    pub cgm: Vec<f64>,
    pub measurements: Vec<Measurement>,
    pub insulin: Vec<InsulinRecord>,
    pub meals: Vec<MealRecord>,
    pub rescues: Vec<RescueEvent>,
    pub therapy: TherapySnapshot,
}

impl DayTrace {
    pub fn start_minute(&self) -> u64 {
        (self.day as u64 - 1) * 1440
    }

    pub fn total_insulin(&self) -> f64 {
        self.insulin.iter().map(|r| r.dose).sum()
    }
}

/// File-level identification, written as the first line.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub scenario: ScenarioId,
    pub diabetes_type: DiabetesType,
    pub patient: u32,
    pub arm: Arm,
    pub config_hash: String,
    pub seed: u64,
}

impl TraceMeta {
    pub fn header_line(&self) -> String {
        format!(
            "# {TRACE_TAG} v{TRACE_VERSION} config={} seed={} scenario={} type={} patient={} arm={}",
            self.config_hash, self.seed, self.scenario, self.diabetes_type, self.patient, self.arm
        )
    }

    fn parse(line: &str) -> Result<TraceMeta> {
        let bad = |d: String| Error::schema("trace", d);
        let mut parts = line.trim_start_matches('#').split_whitespace();
        if parts.next() != Some(TRACE_TAG) {
            return Err(bad(format!("not a trace file: {line:?}")));
        }
        let version = parts.next().unwrap_or_default();
        if version != format!("v{TRACE_VERSION}") {
            return Err(bad(format!("unsupported version {version:?}")));
        }
        let mut get = |key: &str| -> Result<String> {
            let p = parts.next().ok_or_else(|| bad(format!("missing {key}")))?;
            p.strip_prefix(&format!("{key}="))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("expected {key}=..., got {p:?}")))
        };
        let config_hash = get("config")?;
        let seed = get("seed")?.parse().map_err(|e| bad(format!("seed: {e}")))?;
        let scenario = get("scenario")?.parse().map_err(|e: Error| bad(e.to_string()))?;
        let diabetes_type = get("type")?.parse().map_err(|e: Error| bad(e.to_string()))?;
        let patient = get("patient")?.parse().map_err(|e| bad(format!("patient: {e}")))?;
        let arm = get("arm")?.parse().map_err(|e: Error| bad(e.to_string()))?;
        Ok(TraceMeta { scenario, diabetes_type, patient, arm, config_hash, seed })
    }
}

fn row(out: &mut impl Write, day: u32, minute: u64, kind: &str, value: f64, aux: &str) -> std::io::Result<()> {
    writeln!(out, "{day},{minute},{kind},{value},{aux}")
}

/// Write a trace as one row per event. `f64` values use the shortest
/// representation that parses back to the same bits.
pub fn write_trace(out: &mut impl Write, meta: &TraceMeta, days: &[DayTrace]) -> Result<()> {
    writeln!(out, "{}", meta.header_line())?;
    writeln!(out, "{TRACE_COLUMNS}")?;
    let mut rows = 0u64;
    for d in days {
        let base = d.start_minute();
        for (m, g) in d.glucose.iter().enumerate() {
            row(out, d.day, m as u64, "glucose", *g, "")?;
        }
        for (i, g) in d.cgm.iter().enumerate() {
            row(out, d.day, i as u64 * 5, "cgm", *g, "")?;
        }
        for m in &d.measurements {
            row(out, d.day, m.timestamp - base, "smbg", m.value, m.slot.code())?;
        }
        for r in &d.insulin {
            row(out, d.day, r.timestamp - base, "insulin", r.dose, r.kind.code())?;
        }
        for m in &d.meals {
            let announced = m.announced_cho.map(|a| format!("{a}")).unwrap_or_default();
            let aux = format!("{};{};{}", m.kind.code(), m.duration, announced);
            row(out, d.day, m.start - base, "meal", m.true_cho, &aux)?;
        }
        for r in &d.rescues {
            row(out, d.day, r.timestamp - base, "rescue", r.cho, &format!("{}", r.glucose))?;
        }
        let t = &d.therapy;
        let named = [
            ("icr1", t.icr[0]),
            ("icr2", t.icr[1]),
            ("icr3", t.icr[2]),
            ("ps1", t.ps[0]),
            ("ps2", t.ps[1]),
            ("ps3", t.ps[2]),
            ("cf", t.cf),
            ("basal", t.basal),
        ];
        for (name, v) in named {
            row(out, d.day, 1439, "therapy", v, name)?;
        }
        rows += (d.glucose.len() + d.cgm.len() + d.measurements.len() + d.insulin.len() + d.meals.len() + d.rescues.len() + 8) as u64;
    }
    writeln!(out, "# end rows={rows}")?;
    Ok(())
}

/// Read a file written by [`write_trace`]. Truncated or malformed files are
/// schema errors.
pub fn read_trace(input: impl BufRead) -> Result<(TraceMeta, Vec<DayTrace>)> {
    let bad = |line: usize, d: String| Error::schema("trace", format!("line {line}: {d}"));
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))??;
    let meta = TraceMeta::parse(&header)?;
    let cols = lines.next().ok_or_else(|| bad(2, "missing column header".into()))??;
    if cols != TRACE_COLUMNS {
        return Err(bad(2, format!("unexpected columns {cols:?}")));
    }
    let mut days: Vec<DayTrace> = Vec::new();
    let mut rows = 0u64;
    let mut footer = None;
    for (i, line) in lines.enumerate() {
        let n = i + 3;
        let line = line?;
        if footer.is_some() {
            return Err(bad(n, "content after end marker".into()));
        }
        if let Some(rest) = line.strip_prefix("# end rows=") {
            footer = Some(rest.parse::<u64>().map_err(|e| bad(n, format!("end marker: {e}")))?);
            continue;
        }
        let f: Vec<&str> = line.splitn(5, ',').collect();
        if f.len() != 5 {
            return Err(bad(n, format!("expected 5 fields, got {}", f.len())));
        }
        let day: u32 = f[0].parse().map_err(|e| bad(n, format!("day: {e}")))?;
        let minute: u64 = f[1].parse().map_err(|e| bad(n, format!("minute: {e}")))?;
        let value: f64 = f[3].parse().map_err(|e| bad(n, format!("value: {e}")))?;
        let aux = f[4];
        if day == 0 || minute >= 1440 {
            return Err(bad(n, "day/minute out of range".into()));
        }
        if days.last().map(|d| d.day) != Some(day) {
            if days.last().is_some_and(|d| d.day > day) {
                return Err(bad(n, "days out of order".into()));
            }
            days.push(DayTrace { day, ..DayTrace::default() });
        }
        let d = days.last_mut().expect("pushed above");
        let ts = d.start_minute() + minute;
        match f[2] {
            "glucose" => d.glucose.push(value),
            "cgm" => d.cgm.push(value),
            "smbg" => {
                let slot = Slot::from_code(aux).ok_or_else(|| bad(n, format!("unknown slot {aux:?}")))?;
                d.measurements.push(Measurement { value, timestamp: ts, slot });
            }
            "insulin" => {
                let kind = InsulinKind::from_code(aux).ok_or_else(|| bad(n, format!("unknown insulin kind {aux:?}")))?;
                d.insulin.push(InsulinRecord { dose: value, kind, timestamp: ts });
            }
            "meal" => {
                let p: Vec<&str> = aux.split(';').collect();
                if p.len() != 3 {
                    return Err(bad(n, format!("malformed meal aux {aux:?}")));
                }
                let kind = MealKind::from_code(p[0]).ok_or_else(|| bad(n, format!("unknown meal {:?}", p[0])))?;
                let duration = p[1].parse().map_err(|e| bad(n, format!("meal duration: {e}")))?;
                let announced_cho = if p[2].is_empty() {
                    None
                } else {
                    Some(p[2].parse().map_err(|e| bad(n, format!("announced CHO: {e}")))?)
                };
                d.meals.push(MealRecord { kind, start: ts, duration, true_cho: value, announced_cho });
            }
            "rescue" => {
                let glucose = aux.parse().map_err(|e| bad(n, format!("rescue glucose: {e}")))?;
                d.rescues.push(RescueEvent { timestamp: ts, glucose, cho: value });
            }
            "therapy" => {
                let t = &mut d.therapy;
                match aux {
                    "icr1" => t.icr[0] = value,
                    "icr2" => t.icr[1] = value,
                    "icr3" => t.icr[2] = value,
                    "ps1" => t.ps[0] = value,
                    "ps2" => t.ps[1] = value,
                    "ps3" => t.ps[2] = value,
                    "cf" => t.cf = value,
                    "basal" => t.basal = value,
                    other => return Err(bad(n, format!("unknown therapy field {other:?}"))),
                }
            }
            other => return Err(bad(n, format!("unknown row kind {other:?}"))),
        }
        rows += 1;
    }
    match footer {
        Some(expected) if expected == rows => {}
        Some(expected) => return Err(Error::schema("trace", format!("end marker says {expected} rows, found {rows}"))),
        None => return Err(Error::schema("trace", "missing end marker (truncated file)")),
    }
    if let Some(d) = days.iter().find(|d| d.glucose.len() != 1440) {
        return Err(Error::schema("trace", format!("day {} has {} glucose rows", d.day, d.glucose.len())));
    }
    Ok((meta, days))
}
