//! Benchmark statistics: paired tests, multiple-comparison correction and
//! method comparison summaries.

mod compare;
mod wilcoxon;

pub use compare::{
    build_cliques, mcm, mean_ranks, pairwise_tests, relative_mae, McmCell, PairwiseTest, RankSummary, RelativeMae,
    RelativeMaeFormula, ScoreTable, DEFAULT_ALPHA, TIE_TOLERANCE,
};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, WilcoxonResult, EXACT_LIMIT};

use crate::{Error, Result};

/// Holm step-down adjusted p-values, in input order.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>> {
    if let Some(bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidArgument(format!("p-value {bad} outside [0, 1]")));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (k, &i) in order.iter().enumerate() {
        running = running.max(((m - k) as f64 * p[i]).min(1.0));
        out[i] = running;
    }
    Ok(out)
}

/// Which hypotheses Holm's procedure rejects at level `alpha`.
pub fn holm_significant(p: &[f64], alpha: f64) -> Result<Vec<bool>> {
    Ok(holm_adjust(p)?.into_iter().map(|q| q < alpha).collect())
}
