use serde::Serialize;

use crate::error::CoverError;
use crate::instance::{match_identical, Instance, PredictionSet};

pub const MATCHING_CAP: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPoint {
    pub matched: usize,
    pub delta: usize,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriorErrors {
    /// Number of erroneous requests.
    pub eta: usize,
    /// Unmatched count at the largest matching.
    pub delta: usize,
    /// Matching cost at the largest matching.
    pub d: f64,
    pub curve: Vec<MatchPoint>,
}

/// Minimum-cost matchings of every size, by successive shortest augmenting paths.
pub fn matching_curve(cost: &[Vec<f64>], cols: usize) -> Vec<f64> {
    let rows = cost.len();
    let mut match_l: Vec<Option<usize>> = vec![None; rows];
    let mut match_r: Vec<Option<usize>> = vec![None; cols];
    let mut total = 0.0;
    let mut out = vec![0.0];
    for _ in 0..rows.min(cols) {
        let mut dl: Vec<f64> = match_l.iter().map(|m| if m.is_none() { 0.0 } else { f64::INFINITY }).collect();
        let mut dr = vec![f64::INFINITY; cols];
        let mut prev_r = vec![usize::MAX; cols];
        let mut changed = true;
        let mut rounds = 0;
        while changed && rounds <= rows + cols + 1 {
            changed = false;
            rounds += 1;
            for l in 0..rows {
                if !dl[l].is_finite() {
                    continue;
                }
                for r in 0..cols {
                    if match_l[l] == Some(r) {
                        continue;
                    }
                    let nd = dl[l] + cost[l][r];
                    if nd < dr[r] - 1e-12 {
                        dr[r] = nd;
                        prev_r[r] = l;
                        changed = true;
                    }
                }
            }
            for r in 0..cols {
                if let Some(l) = match_r[r] {
                    let nd = dr[r] - cost[l][r];
                    if nd < dl[l] - 1e-12 {
                        dl[l] = nd;
                        changed = true;
                    }
                }
            }
        }
        let end = (0..cols)
            .filter(|&r| match_r[r].is_none() && dr[r].is_finite())
            .min_by(|&a, &b| dr[a].total_cmp(&dr[b]).then(a.cmp(&b)));
        let Some(mut r) = end else { break };
        total += dr[r];
        loop {
            let l = prev_r[r];
            let old = match_l[l];
            match_l[l] = Some(r);
            match_r[r] = Some(l);
            match old {
                Some(o) => r = o,
                None => break,
            }
        }
        // recompute from the matching itself so rounding does not accumulate
        let exact: f64 = match_l.iter().enumerate().filter_map(|(l, m)| m.map(|r| cost[l][r])).sum();
        debug_assert!((exact - total).abs() <= 1e-6 * exact.max(1.0));
        total = exact;
        out.push(total);
    }
    out
}

pub fn prior_errors(actual: &Instance, predicted: &PredictionSet) -> Result<PriorErrors, CoverError> {
    let space = &*actual.space;
    let a = actual.jobs();
    let b = predicted.requests()?.jobs();
    for size in [a.len(), b.len()] {
        if size > MATCHING_CAP {
            return Err(CoverError::MatchingCap { size, cap: MATCHING_CAP });
        }
    }
    let (_, _, pairs) = match_identical(&a, &b);
    let eta = a.len().max(b.len()) - pairs.len();
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| b.iter().map(|y| space.d(x.pickup, y.pickup) + space.d(x.dropoff, y.dropoff)).collect())
        .collect();
    let curve: Vec<MatchPoint> = matching_curve(&cost, b.len())
        .into_iter()
        .enumerate()
        .map(|(m, d)| MatchPoint { matched: m, delta: a.len() + b.len() - 2 * m, d })
        .collect();
    let last = *curve.last().expect("curve starts at m = 0");
    Ok(PriorErrors { eta, delta: last.delta, d: last.d, curve })
}
