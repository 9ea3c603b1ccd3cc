//! Hypothesis testing of a simple null by code-length difference.
//!
//! Under the null `p0`, the probability that the alternative code `ū1` saves
//! `K` nats or more is at most `e^{−K}`, so `p0/ū1` is a conservative p-value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{MdlError, Result};
use crate::models::{DataSequence, ModelFamily, ParamVector};
use crate::universal::UniversalDistribution;

/// Trials per independently seeded random stream.
pub const TRIAL_BLOCK: usize = 256;

/// How evidence from successive batches is combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationMode {
    /// `ū1` starts afresh on every batch.
    Restart,
    /// `ū1` predicts each batch given all earlier batches.
    Condition,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceReport {
    /// `log p0(z^n) − log ū1(z^n)`; negative values are evidence against the null.
    pub d_nats: f64,
    /// `p0(z^n) / ū1(z^n) = exp(D)`.
    pub ratio: f64,
    pub p_conservative: f64,
    pub n: usize,
    pub batches: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationMode>,
}

impl EvidenceReport {
    pub fn from_d(d_nats: f64, n: usize) -> Self {
        let ratio = d_nats.exp();
        EvidenceReport { d_nats, ratio, p_conservative: ratio.min(1.0), n, batches: 1, continuation: None }
    }

    /// `D = 0`, the neutral element of [`combine`].
    pub fn identity() -> Self {
        EvidenceReport { batches: 0, ..EvidenceReport::from_d(0.0, 0) }
    }

    /// Reject at level `alpha` iff the conservative p-value is at most `alpha`
    /// (the same as `ratio ≤ alpha` for `alpha < 1`).
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_conservative <= alpha
    }

    pub fn bits(&self) -> f64 {
        self.d_nats / std::f64::consts::LN_2
    }
}

fn null_params(p0: &ModelFamily) -> Result<(&ModelFamily, &ParamVector)> {
    match p0 {
        ModelFamily::Point { base, params } => Ok((base, params)),
        _ => Err(MdlError::UnsupportedComposite),
    }
}

/// Evidence of `data` against the simple null `p0` (a point family).
pub fn evidence(p0: &ModelFamily, u1: &UniversalDistribution, data: &DataSequence) -> Result<EvidenceReport> {
    let (base, params) = null_params(p0)?;
    if data.is_empty() {
        return Ok(EvidenceReport::from_d(0.0, 0));
    }
    let log_p0 = base.log_likelihood(params, data)?;
    let log_u1 = u1.log_joint(data)?;
    Ok(EvidenceReport::from_d(log_p0 - log_u1, data.len()))
}

/// Multiplies likelihood ratios of independent batches.
pub fn combine(reports: &[EvidenceReport]) -> EvidenceReport {
    let d: f64 = reports.iter().map(|r| r.d_nats).sum();
    let n = reports.iter().map(|r| r.n).sum();
    let batches = reports.iter().map(|r| r.batches).sum();
    EvidenceReport { batches, ..EvidenceReport::from_d(d, n) }
}

/// Evidence accumulated over successive batches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuationReport {
    pub mode: ContinuationMode,
    pub per_batch: Vec<EvidenceReport>,
    pub combined: EvidenceReport,
}

pub fn optional_continuation(
    p0: &ModelFamily,
    u1: &UniversalDistribution,
    batches: &[DataSequence],
    mode: ContinuationMode,
) -> Result<ContinuationReport> {
    let (base, params) = null_params(p0)?;
    let per_batch: Vec<EvidenceReport> = match mode {
        ContinuationMode::Restart => batches.iter().map(|b| evidence(p0, u1, b)).collect::<Result<_>>()?,
        ContinuationMode::Condition => {
            let Some(first) = batches.first() else {
                return Ok(ContinuationReport { mode, per_batch: Vec::new(), combined: EvidenceReport::identity() });
            };
            let mut all = first.clone();
            for b in &batches[1..] {
                all = all.concat(b)?;
            }
            let marginals = u1.log_prefix_marginals(&all)?;
            let mut start = 0;
            let mut out = Vec::with_capacity(batches.len());
            for b in batches {
                let end = start + b.len();
                let log_p0 = base.log_likelihood(params, b)?;
                out.push(EvidenceReport::from_d(log_p0 - (marginals[end] - marginals[start]), b.len()));
                start = end;
            }
            out
        }
    };
    let mut combined = combine(&per_batch);
    combined.continuation = Some(mode);
    Ok(ContinuationReport { mode, per_batch, combined })
}

/// `D` for `trials` datasets of length `n` drawn from `p0`.
///
/// Trial `t` uses stream `t / TRIAL_BLOCK` of a ChaCha8 generator seeded with
/// `seed`, so results depend only on `(seed, trials)`.
pub fn simulate_evidence(
    p0: &ModelFamily,
    u1: &UniversalDistribution,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let (base, params) = null_params(p0)?;
    let blocks: Vec<usize> = (0..trials.div_ceil(TRIAL_BLOCK)).collect();
    let run_block = |&block: &usize| -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block as u64);
        let count = TRIAL_BLOCK.min(trials - block * TRIAL_BLOCK);
        (0..count)
            .map(|_| {
                let data = base.sample(params, n, &mut rng)?;
                Ok(evidence(p0, u1, &data)?.d_nats)
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<f64>>> = {
        use rayon::prelude::*;
        blocks.par_iter().map(run_block).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<f64>>> = blocks.iter().map(run_block).collect();
    let mut out = Vec::with_capacity(trials);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type1Report {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub rejections: usize,
    pub rate: f64,
    /// `alpha + 3·sqrt(alpha(1 − alpha)/trials)`.
    pub bound: f64,
    pub within_bound: bool,
    pub seed: u64,
}

/// Empirical rejection rate at level `alpha` under the null.
pub fn type1_simulate(
    p0: &ModelFamily,
    u1: &UniversalDistribution,
    alpha: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<Type1Report> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(MdlError::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    if trials == 0 {
        return Err(MdlError::invalid("at least one trial is needed"));
    }
    let ds = simulate_evidence(p0, u1, n, trials, seed)?;
    let rejections = ds.iter().filter(|&&d| d.exp().min(1.0) <= alpha).count();
    let rate = rejections as f64 / trials as f64;
    let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / trials as f64).sqrt();
    Ok(Type1Report { alpha, n, trials, rejections, rate, bound, within_bound: rate <= bound, seed })
}
