use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Map each value to one of `bins` symbols by empirical quantiles. Equal
/// values always share a symbol, so a constant series maps to one symbol.
pub fn quantile_symbols(x: &[f64], bins: usize) -> Vec<usize> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let edges: Vec<f64> = (1..bins).map(|j| sorted[(j * n / bins).min(n - 1)]).collect();
    x.iter().map(|v| edges.iter().filter(|&&e| *v >= e).count()).collect()
}

fn encode(symbols: &[usize], end: usize, history: usize, base: usize) -> usize {
    symbols[end + 1 - history..=end].iter().fold(0, |acc, &s| acc * base + s)
}

/// Transfer entropy from `source` to `target` in bits, using quantile
/// binning and plug-in probabilities.
pub fn transfer_entropy(source: &[f64], target: &[f64], bins: usize, history: usize) -> Result<f64> {
    if source.len() != target.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            source.len(),
            target.len()
        )));
    }
    if bins < 2 || history < 1 || source.len() <= history {
        return Err(Error::InvalidArgument("need bins >= 2, history >= 1 and more samples than history".into()));
    }
    if source.iter().chain(target).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite sample".into()));
    }
    let xs = quantile_symbols(source, bins);
    let ys = quantile_symbols(target, bins);

    let mut joint: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut yx: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut yy: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut y: BTreeMap<usize, f64> = BTreeMap::new();
    let n = ys.len() - history;
    for i in history - 1..ys.len() - 1 {
        let past = encode(&ys, i, history, bins);
        let xp = encode(&xs, i, history, bins);
        let next = ys[i + 1];
        *joint.entry((next, past, xp)).or_default() += 1.0;
        *yx.entry((past, xp)).or_default() += 1.0;
        *yy.entry((next, past)).or_default() += 1.0;
        *y.entry(past).or_default() += 1.0;
    }
    let mut te = 0.0;
    for (&(next, past, xp), &c) in &joint {
        // p(next | past, x) / p(next | past)
        let ratio = (c / yx[&(past, xp)]) / (yy[&(next, past)] / y[&past]);
        te += c / n as f64 * ratio.log2();
    }
    Ok(te.max(0.0))
}
