//! Batch execution and the files it leaves behind.
//!
//! Layout of an output directory:
//!
//! ```text
//! config.toml            resolved configuration
//! cohort.csv             patient parameters
//! traces/<type>-<scenario>-p<id>-<arm>.csv
//! checkpoints/<type>-<scenario>-p<id>.ckpt   final ABBA agent bundles
//! report.csv, report.svg
//! failures.csv           one row per patient and arm that did not finish
//! ```

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;

use super::config::RunConfig;
use crate::analytics::{render_svg, summarize_cohort, write_report_csv, TrialReport};
use crate::error::{Error, Result};
use crate::patient::{generate_cohort, write_cohort, PatientParams};
use crate::protocol::{read_trace, run_trial, write_trace, Arm, TraceMeta, TrialOptions, TrialResult};

pub const REPORT_TAG: &str = "abba-report";
pub const FAILURES_TAG: &str = "abba-failures";

/// The identification line shared by every output file, without the
/// leading `# `.
pub fn header(tag: &str, config_hash: &str, seed: u64) -> String {
    format!("{tag} v1 config={config_hash} seed={seed}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub patient: u32,
    pub arm: Arm,
    pub message: String,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub config_hash: String,
    /// `None` when no patient finished every requested arm.
    pub report: Option<TrialReport>,
    pub failures: Vec<Failure>,
}

/// Quote a CSV field when it needs it, doubling embedded quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn trace_file_name(meta: &TraceMeta) -> String {
    format!(
        "{}-{}-p{:03}-{}.csv",
        meta.diabetes_type,
        meta.scenario,
        meta.patient,
        meta.arm.to_string().to_ascii_lowercase()
    )
    .to_ascii_lowercase()
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn run_one(p: &PatientParams, arm: Arm, cfg: &RunConfig) -> Result<TrialResult> {
    match catch_unwind(AssertUnwindSafe(|| run_trial(p, arm, &cfg.spec, cfg.seed))) {
        Ok(r) => r,
        Err(panic) => {
            let detail = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(Error::SimulatorFault { patient: p.id, minute: 0, detail })
        }
    }
}

/// Simulate the configured cohort and write every artefact. Patient
/// failures are recorded, not fatal.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let hash = cfg.hash();
    let head = |tag: &str| header(tag, &hash, cfg.seed);
    let traces_dir = cfg.out.join("traces");
    let ckpt_dir = cfg.out.join("checkpoints");
    fs::create_dir_all(&traces_dir)?;
    fs::create_dir_all(&ckpt_dir)?;

    let mut f = create(&cfg.out.join("config.toml"))?;
    writeln!(f, "# {}", head("abba-config"))?;
    f.write_all(cfg.canonical().as_bytes())?;
    f.flush()?;

    let cohort = generate_cohort(cfg.n, cfg.diabetes_type, cfg.seed)?;
    let mut f = create(&cfg.out.join("cohort.csv"))?;
    writeln!(f, "# {}", head("abba-cohort"))?;
    write_cohort(&mut f, &cohort)?;
    f.flush()?;

    let jobs: Vec<(usize, Arm)> = (0..cohort.len()).flat_map(|i| cfg.arms.iter().map(move |&a| (i, a))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<TrialResult>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, arm)| {
                let p = &cohort[i];
                let r = run_one(p, arm, cfg)?;
                let meta = TraceMeta {
                    scenario: cfg.spec.id,
                    diabetes_type: cfg.diabetes_type,
                    patient: p.id,
                    arm,
                    config_hash: hash.clone(),
                    seed: cfg.seed,
                };
                let mut w = create(&traces_dir.join(trace_file_name(&meta)))?;
                write_trace(&mut w, &meta, &r.days)?;
                w.flush()?;
                if let Some(b) = &r.bundle {
                    let name = format!("{}-{}-p{:03}.ckpt", cfg.diabetes_type, cfg.spec.id, p.id).to_ascii_lowercase();
                    let text = b.to_checkpoint();
                    let (tag, rest) = text.split_once('\n').unwrap_or((&text, ""));
                    fs::write(ckpt_dir.join(name), format!("{tag}\n# {}\n{rest}", head("abba-checkpoint")))?;
                }
                info!("{} patient {} {arm}: done", cfg.diabetes_type, p.id);
                Ok(r)
            })
            .collect()
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (&(i, arm), o) in jobs.iter().zip(outcomes) {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                warn!("patient {} {arm} failed: {e}", cohort[i].id);
                failures.push(Failure { patient: cohort[i].id, arm, message: e.to_string() });
            }
        }
    }
    let mut f = create(&cfg.out.join("failures.csv"))?;
    writeln!(f, "# {}", head(FAILURES_TAG))?;
    writeln!(f, "patient,arm,error")?;
    for x in &failures {
        writeln!(f, "{},{},{}", x.patient, x.arm, csv_field(&x.message))?;
    }
    f.flush()?;

    // Only patients with every arm finished enter the paired report.
    results.retain(|r| !failures.iter().any(|x| x.patient == r.patient));
    let report = if results.is_empty() {
        None
    } else {
        let report = summarize_cohort(&results)?;
        write_report(&cfg.out, &head(REPORT_TAG), &report)?;
        Some(report)
    };
    Ok(RunOutcome { config_hash: hash, report, failures })
}

pub fn write_report(dir: &Path, header_line: &str, report: &TrialReport) -> Result<()> {
    let mut f = create(&dir.join("report.csv"))?;
    write_report_csv(&mut f, header_line, report)?;
    f.flush()?;
    fs::write(dir.join("report.svg"), render_svg(header_line, report))?;
    Ok(())
}

/// Expand directories into the `.csv` files they contain, sorted.
pub fn collect_trace_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .filter(|q| q.extension().is_some_and(|x| x == "csv"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("no trace files given".into()));
    }
    Ok(out)
}

/// Recompute the report from trace files. Returns the report and the
/// header line it would be written with.
pub fn replay(paths: &[PathBuf]) -> Result<(TrialReport, String)> {
    let collection_days = TrialOptions::default().collection_days;
    let mut results = Vec::with_capacity(paths.len());
    let mut ident: Option<(String, u64)> = None;
    for p in paths {
        let (meta, days) = read_trace(BufReader::new(File::open(p)?))?;
        match &ident {
            Some((h, s)) if *h != meta.config_hash || *s != meta.seed => {
                return Err(Error::CohortMismatch(format!("{} comes from a different run", p.display())));
            }
            _ => ident = Some((meta.config_hash.clone(), meta.seed)),
        }
        results.push(TrialResult {
            patient: meta.patient,
            diabetes_type: meta.diabetes_type,
            scenario: meta.scenario,
            arm: meta.arm,
            collection_days,
            days,
            bundle: None,
            init: None,
        });
    }
    let (hash, seed) = ident.expect("at least one trace");
    Ok((summarize_cohort(&results)?, header(REPORT_TAG, &hash, seed)))
}

/// Regenerate `report.csv` and `report.svg` of a run directory from its
/// traces.
pub fn report(dir: &Path) -> Result<TrialReport> {
    let paths = collect_trace_paths(&[dir.join("traces")])?;
    let (rep, head) = replay(&paths)?;
    write_report(dir, &head, &rep)?;
    Ok(rep)
}
