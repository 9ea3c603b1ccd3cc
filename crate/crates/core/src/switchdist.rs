//! Switch distribution: predict with `ū0` up to an unknown time, then with `ū1`.
//!
//! Switch index `i` is the first outcome predicted by `ū1`, so `i = 1` uses
//! `ū1` throughout. The prior on `i` is `π(i) = 1/(i(i+1))`.

use serde::Serialize;

use crate::error::{MdlError, Result};
use crate::math::log_add;
use crate::models::DataSequence;
use crate::universal::UniversalDistribution;

/// How the switch prior is cut off at the horizon `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchMode {
    /// `π` rescaled to sum to one on `{1..n}`.
    Renormalize,
    /// Untruncated `π` on `{1..n}`; the tail mass `1/(n+1)` means "never switch".
    SubDistribution,
}

#[derive(Debug, Clone)]
pub struct SwitchSpec {
    pub u0: UniversalDistribution,
    pub u1: UniversalDistribution,
    pub mode: SwitchMode,
}

impl SwitchSpec {
    pub fn new(u0: UniversalDistribution, u1: UniversalDistribution, mode: SwitchMode) -> Self {
        SwitchSpec { u0, u1, mode }
    }

    /// `log π(i)` at horizon `n`; `i = n + 1` is the never-switch slot.
    pub fn log_prior(&self, i: usize, n: usize) -> f64 {
        if i == 0 || i > n + 1 {
            return f64::NEG_INFINITY;
        }
        let (i, n) = (i as f64, n as f64);
        match self.mode {
            SwitchMode::Renormalize if i > n => f64::NEG_INFINITY,
            // Σ_{i≤n} 1/(i(i+1)) = n/(n+1)
            SwitchMode::Renormalize => -(i * (i + 1.0)).ln() + ((n + 1.0) / n).ln(),
            SwitchMode::SubDistribution if i > n => -(n + 1.0).ln(),
            SwitchMode::SubDistribution => -(i * (i + 1.0)).ln(),
        }
    }

    /// `log Σ_{i>k} π(i)`, the mass of switching after the first `k` outcomes.
    fn log_tail(&self, k: usize, n: usize) -> f64 {
        let (k, n) = (k as f64, n as f64);
        match self.mode {
            SwitchMode::Renormalize if k >= n => f64::NEG_INFINITY,
            // 1 − (k/(k+1))·((n+1)/n) = (n − k)/(n(k+1))
            SwitchMode::Renormalize => ((n - k) / (n * (k + 1.0))).ln(),
            SwitchMode::SubDistribution => -(k + 1.0).ln(),
        }
    }
}

fn component_prefixes(u: &UniversalDistribution, data: &DataSequence) -> Result<Vec<f64>> {
    u.log_prefix_marginals(data)
}

fn assemble(spec: &SwitchSpec, l0: &[f64], l1: &[f64], horizon: usize, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max + 1);
    let mut switched = f64::NEG_INFINITY;
    out.push(0.0);
    for k in 1..=k_max {
        // switching at i = k: ū0 on the first k−1, ū1 from outcome k onward
        let term = spec.log_prior(k, horizon) + l0[k - 1] - l1[k - 1];
        if !term.is_nan() {
            switched = log_add(switched, term);
        }
        let mut value = switched + l1[k];
        if value.is_nan() {
            value = f64::NEG_INFINITY;
        }
        let stay = spec.log_tail(k, horizon) + l0[k];
        if !stay.is_nan() {
            value = log_add(value, stay);
        }
        out.push(value);
    }
    out
}

/// `log ū_switch(z^n)`.
pub fn switch_log_marginal(spec: &SwitchSpec, data: &DataSequence) -> Result<f64> {
    if data.is_empty() {
        return Err(MdlError::invalid("switch distribution needs at least one outcome"));
    }
    Ok(*switch_log_prefix_marginals(spec, data)?.last().expect("nonempty"))
}

/// `log ū_switch(z^k)` for `k = 0..=n` at horizon `n = data.len()`.
pub fn switch_log_prefix_marginals(spec: &SwitchSpec, data: &DataSequence) -> Result<Vec<f64>> {
    let n = data.len();
    let l0 = component_prefixes(&spec.u0, data)?;
    let l1 = component_prefixes(&spec.u1, data)?;
    Ok(assemble(spec, &l0, &l1, n, n))
}

/// `log ū_switch(z^k)` of a prefix when the horizon is `horizon`.
pub fn switch_log_prefix_marginal(spec: &SwitchSpec, prefix: &DataSequence, horizon: usize) -> Result<f64> {
    let k = prefix.len();
    let component = |u: &UniversalDistribution| -> Result<Vec<f64>> {
        if u.is_horizon_dependent() {
            (0..=k).map(|j| u.log_prefix_marginal(&prefix.prefix(j), horizon)).collect()
        } else {
            u.log_prefix_marginals(prefix)
        }
    };
    let l0 = component(&spec.u0)?;
    let l1 = component(&spec.u1)?;
    Ok(assemble(spec, &l0, &l1, horizon, k)[k])
}

/// Outcome of checking the switch regret bound on one sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchBoundReport {
    pub holds: bool,
    /// Switch index minimizing the oracle code length.
    pub best_switch: usize,
    /// `−log ū_switch(z^n)`.
    pub switch_codelength: f64,
    /// `min_i { −log ū0(z^{i−1}) − log ū1(z_i..z_n | z^{i−1}) }`.
    pub oracle_codelength: f64,
    /// `oracle + 2 log n − switch`; nonnegative when the bound holds.
    pub slack: f64,
}

/// Checks `−log ū_switch(z^n) ≤ min_i {…} + 2 log n`.
///
/// Guaranteed in renormalize mode, where `−log π(i) ≤ 2 log n` for all `i ≤ n`.
pub fn switch_regret_bound_check(spec: &SwitchSpec, data: &DataSequence) -> Result<SwitchBoundReport> {
    let n = data.len();
    let l0 = component_prefixes(&spec.u0, data)?;
    let l1 = component_prefixes(&spec.u1, data)?;
    let total = assemble(spec, &l0, &l1, n, n)[n];
    let mut best = (f64::INFINITY, 1);
    for i in 1..=n {
        let cost = -l0[i - 1] - (l1[n] - l1[i - 1]);
        if cost < best.0 {
            best = (cost, i);
        }
    }
    let switch_codelength = -total;
    let slack = best.0 + 2.0 * (n as f64).ln() - switch_codelength;
    Ok(SwitchBoundReport {
        holds: slack >= -1e-9,
        best_switch: best.1,
        switch_codelength,
        oracle_codelength: best.0,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelFamily, ParamVector};

    fn pair(mode: SwitchMode) -> SwitchSpec {
        let u0 = UniversalDistribution::point(ModelFamily::Bernoulli, ParamVector::bernoulli(0.5)).unwrap();
        let u1 = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
        SwitchSpec::new(u0, u1, mode)
    }

    #[test]
    fn renormalized_prior_sums_to_one() {
        let spec = pair(SwitchMode::Renormalize);
        for n in 1..30 {
            let s: f64 = (1..=n).map(|i| spec.log_prior(i, n).exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!((spec.log_prior(n, n) + 2.0 * (n as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn sub_distribution_prior_with_never_switch_sums_to_one() {
        let spec = pair(SwitchMode::SubDistribution);
        for n in 1..30 {
            let s: f64 = (1..=n + 1).map(|i| spec.log_prior(i, n).exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_outcome_is_u1() {
        let spec = pair(SwitchMode::Renormalize);
        let d = DataSequence::bits("1").unwrap();
        let v = switch_log_marginal(&spec, &d).unwrap();
        assert!((v - spec.u1.log_joint(&d).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn identical_components_collapse() {
        let u = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
        let spec = SwitchSpec::new(u.clone(), u.clone(), SwitchMode::Renormalize);
        let d = DataSequence::bits("0110100").unwrap();
        assert!((switch_log_marginal(&spec, &d).unwrap() - u.log_joint(&d).unwrap()).abs() < 1e-12);
        assert!(switch_regret_bound_check(&spec, &d).unwrap().slack >= 0.0);
    }

    #[test]
    fn four_term_oracle() {
        let spec = pair(SwitchMode::Renormalize);
        let d = DataSequence::bits("1111").unwrap();
        // ū0 = 2^-k on k outcomes, ū1(1^k) = Π (j+½)/(j+1)
        let jeffreys = |k: usize| (0..k).map(|j| (j as f64 + 0.5) / (j as f64 + 1.0)).product::<f64>();
        let pi = |i: usize| 1.0 / (i * (i + 1)) as f64 * 5.0 / 4.0;
        let oracle: f64 = (1..=4).map(|i| pi(i) * 0.5f64.powi(i as i32 - 1) * jeffreys(4) / jeffreys(i - 1)).sum();
        let v = switch_log_marginal(&spec, &d).unwrap();
        assert!((v - oracle.ln()).abs() < 1e-12);
        assert!(v >= pi(1).ln() + jeffreys(4).ln() - 1e-12);
    }

    #[test]
    fn empty_data_rejected() {
        let spec = pair(SwitchMode::Renormalize);
        let d = DataSequence::bits("").unwrap();
        assert!(matches!(switch_log_marginal(&spec, &d), Err(MdlError::InvalidInput(_))));
    }

    #[test]
    fn prefix_marginal_matches_all_prefix_table() {
        let spec = pair(SwitchMode::SubDistribution);
        let d = DataSequence::bits("0010111").unwrap();
        let table = switch_log_prefix_marginals(&spec, &d).unwrap();
        for (k, expected) in table.iter().enumerate() {
            let v = switch_log_prefix_marginal(&spec, &d.prefix(k), d.len()).unwrap();
            assert!((v - expected).abs() < 1e-12);
        }
    }
}
