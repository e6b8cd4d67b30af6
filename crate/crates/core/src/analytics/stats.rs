//! Normality gate and paired tests.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::seed::{self, purpose};

/// Monte-Carlo resamples behind each Lilliefors null table.
pub const LILLIEFORS_RESAMPLES: usize = 10_000;
/// Significance of the normality gate.
pub const NORMALITY_ALPHA: f64 = 0.05;
/// Largest n for which the signed-rank distribution is enumerated.
pub const WILCOXON_EXACT_MAX_N: usize = 25;
pub const LILLIEFORS_MIN_N: usize = 5;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// KS distance between the sample's empirical CDF and a normal with the
/// sample's own mean and SD. `None` for a constant sample.
fn ks_normal_statistic(x: &[f64]) -> Option<f64> {
    let (mean, sd) = mean_sd(x);
    if !(sd > 0.0) || !sd.is_finite() {
        return None;
    }
    let mut z: Vec<f64> = x.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    let phi = std_normal();
    let d = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| {
            let f = phi.cdf(zi);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    Some(d)
}

fn null_table(n: usize) -> Arc<Vec<f64>> {
    static TABLES: OnceLock<Mutex<HashMap<usize, Arc<Vec<f64>>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(Default::default);
    if let Some(t) = tables.lock().expect("table lock").get(&n) {
        return Arc::clone(t);
    }
    let mut rng = seed::stream(0, &[purpose::STATS, n as u64]);
    let mut sample = vec![0.0; n];
    let mut stats: Vec<f64> = (0..LILLIEFORS_RESAMPLES)
        .map(|_| {
            for v in sample.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            ks_normal_statistic(&sample).unwrap_or(0.0)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let table = Arc::new(stats);
    tables.lock().expect("table lock").entry(n).or_insert_with(|| Arc::clone(&table)).clone()
}

/// Lilliefors test: (statistic, p). A constant sample is non-normal by
/// convention and returns (1, 0).
pub fn lilliefors(sample: &[f64]) -> Result<(f64, f64)> {
    if sample.len() < LILLIEFORS_MIN_N {
        return Err(Error::InvalidArgument(format!(
            "Lilliefors needs at least {LILLIEFORS_MIN_N} values, got {}",
            sample.len()
        )));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("Lilliefors sample contains non-finite values".into()));
    }
    let Some(d) = ks_normal_statistic(sample) else {
        return Ok((1.0, 0.0));
    };
    let table = null_table(sample.len());
    let first_ge = table.partition_point(|&t| t < d);
    let exceed = table.len() - first_ge;
    Ok((d, (exceed + 1) as f64 / (table.len() + 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    PairedT,
    Wilcoxon,
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::PairedT => "paired-t",
            TestKind::Wilcoxon => "wilcoxon",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub test: TestKind,
    /// t for the t-test, W+ for Wilcoxon.
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Two-sided paired t-test on differences: (t, p).
pub fn paired_t_test(diffs: &[f64]) -> (f64, f64) {
    let n = diffs.len();
    if n < 2 {
        return (0.0, 1.0);
    }
    let (mean, sd) = mean_sd(diffs);
    if sd == 0.0 {
        return if mean == 0.0 { (0.0, 1.0) } else { (mean.signum() * f64::INFINITY, 0.0) };
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
    (t, (2.0 * dist.cdf(-t.abs())).min(1.0))
}

/// Average ranks (1-based) of `values`, with the tie group sizes.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon signed-rank test on differences: (W+, p). Zero
/// differences are dropped; none left gives p = 1.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> (f64, f64) {
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&magnitudes);
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    let p = if n <= WILCOXON_EXACT_MAX_N {
        // Doubled ranks are integers even with ties.
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max + 1];
        counts[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                counts[s] += counts[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w2 = (2.0 * w_plus).round() as usize;
        let lower: f64 = counts[..=w2].iter().sum::<f64>() / total;
        let upper: f64 = counts[w2..].iter().sum::<f64>() / total;
        (2.0 * lower.min(upper)).min(1.0)
    } else {
        let nf = n as f64;
        let mu = nf * (nf + 1.0) / 4.0;
        let tie_adj: f64 = ties.iter().map(|&t| (t.pow(3) - t) as f64).sum::<f64>() / 48.0;
        let sigma = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_adj).sqrt();
        let z = ((w_plus - mu).abs() - 0.5).max(0.0) / sigma;
        (2.0 * (1.0 - std_normal().cdf(z))).min(1.0)
    };
    (w_plus, p)
}

/// Paired comparison of `a` against `b`, matched by position. Normal
/// differences get a paired t-test, anything else Wilcoxon.
pub fn paired_compare(a: &[f64], b: &[f64], alpha: f64) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::CohortMismatch(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let normal = diffs.len() >= LILLIEFORS_MIN_N
        && lilliefors(&diffs).map(|(_, p)| p > NORMALITY_ALPHA).unwrap_or(false);
    let (test, (statistic, p_value)) = if normal {
        (TestKind::PairedT, paired_t_test(&diffs))
    } else {
        (TestKind::Wilcoxon, wilcoxon_signed_rank(&diffs))
    };
    Ok(Comparison { test, statistic, p_value, significant: p_value < alpha })
}
