//! Parametric complexity `COMP(M, v)` for uniform luckiness: exact sums, the
//! linear-time multinomial recurrence, the Szpankowski–Weinberger
//! approximation and the classical `k/2 log n` expansion.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{OnceLock, RwLock};

use serde::Serialize;

use crate::error::{MdlError, Result};
use crate::math::{lgamma, ln_binomial, log_sum_exp, ml_log_likelihood, xlogx, LogSum};
use crate::models::ModelFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ComplexityMethod {
    ExactSum,
    Recurrence,
    Szpankowski,
    Asymptotic,
}

impl fmt::Display for ComplexityMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ComplexityMethod::ExactSum => "exactsum",
            ComplexityMethod::Recurrence => "recurrence",
            ComplexityMethod::Szpankowski => "szpankowski",
            ComplexityMethod::Asymptotic => "asymptotic",
        };
        f.write_str(s)
    }
}

/// A complexity figure in nats together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityValue {
    pub nats: f64,
    pub method: ComplexityMethod,
    pub n: f64,
    pub family: String,
}

impl ComplexityValue {
    fn new(nats: f64, method: ComplexityMethod, n: f64, family: impl Into<String>) -> Self {
        ComplexityValue { nats, method, n, family: family.into() }
    }

    pub fn bits(&self) -> f64 {
        self.nats / std::f64::consts::LN_2
    }
}

/// `∫ √|I(θ)| dθ` over the parameter space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherIntegral {
    pub value: f64,
    pub closed_form: String,
}

/// Append-only memo of `(n, r) -> COMP` for the multinomial model.
#[derive(Debug, Default)]
pub struct ComplexityCache {
    values: RwLock<HashMap<(u64, u64), f64>>,
}

impl ComplexityCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(&self, n: u64, r: u64, compute: impl FnOnce() -> f64) -> f64 {
        if let Some(v) = self.values.read().unwrap_or_else(|e| e.into_inner()).get(&(n, r)) {
            return *v;
        }
        let value = compute();
        // idempotent: concurrent writers insert the same value
        self.values.write().unwrap_or_else(|e| e.into_inner()).entry((n, r)).or_insert(value);
        value
    }

    pub fn len(&self) -> usize {
        self.values.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn global_cache() -> &'static ComplexityCache {
    static CACHE: OnceLock<ComplexityCache> = OnceLock::new();
    CACHE.get_or_init(ComplexityCache::new)
}

/// `log Σ_{n1} C(n, n1) (n1/n)^n1 (n0/n)^n0`, summed in the log domain.
pub fn comp_bernoulli_exact(n: u64) -> ComplexityValue {
    ComplexityValue::new(bernoulli_log_normalizer(n), ComplexityMethod::ExactSum, n as f64, "bernoulli")
}

fn bernoulli_log_normalizer(n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let (a, b) = (k as f64, (n - k) as f64);
            ln_binomial(n, k) + xlogx(a) + xlogx(b) - nf * nf.ln()
        })
        .collect();
    log_sum_exp(&terms)
}

/// Exact multinomial complexity via `C(n, r) = C(n, r-1) + n/(r-2) C(n, r-2)`.
pub fn comp_multinomial_exact(n: u64, r: u64) -> Result<ComplexityValue> {
    if r == 0 {
        return Err(MdlError::invalid("multinomial complexity needs r >= 1"));
    }
    let nats = global_cache().get_or_compute(n, r, || multinomial_recurrence(n, r));
    let method = if r <= 2 { ComplexityMethod::ExactSum } else { ComplexityMethod::Recurrence };
    Ok(ComplexityValue::new(nats, method, n as f64, format!("multinomial(r={r})")))
}

/// Same as [`comp_multinomial_exact`] against an explicit cache.
pub fn comp_multinomial_cached(cache: &ComplexityCache, n: u64, r: u64) -> Result<f64> {
    if r == 0 {
        return Err(MdlError::invalid("multinomial complexity needs r >= 1"));
    }
    Ok(cache.get_or_compute(n, r, || multinomial_recurrence(n, r)))
}

fn multinomial_recurrence(n: u64, r: u64) -> f64 {
    if r == 1 || n == 0 {
        return 0.0;
    }
    let log_c2 = bernoulli_log_normalizer(n);
    if r == 2 {
        return log_c2;
    }
    // linear-domain values scaled by exp(-scale)
    let nf = n as f64;
    let mut scale = log_c2;
    let mut prev = (-log_c2).exp();
    let mut cur = 1.0f64;
    for k in 3..=r {
        let next = cur + nf / (k - 2) as f64 * prev;
        prev = cur;
        cur = next;
        if cur > 1e250 {
            prev /= cur;
            scale += cur.ln();
            cur = 1.0;
        }
    }
    scale + cur.ln()
}

/// Szpankowski–Weinberger approximation, accurate over a wide range of `r/n`.
pub fn comp_multinomial_szpankowski(n: u64, r: u64) -> Result<ComplexityValue> {
    if n < 1 || r < 2 {
        return Err(MdlError::invalid("the Szpankowski approximation needs n >= 1 and r >= 2"));
    }
    let alpha = r as f64 / n as f64;
    let c_alpha = 0.5 + 0.5 * (1.0 + 4.0 / alpha).sqrt();
    let nats =
        n as f64 * (alpha.ln() + (alpha + 2.0) * c_alpha.ln() - 1.0 / c_alpha) - 0.5 * (c_alpha + 2.0 / alpha).ln();
    Ok(ComplexityValue::new(nats, ComplexityMethod::Szpankowski, n as f64, format!("multinomial(r={r})")))
}

/// `(k/2) log(n / 2π) + log ∫√|I(θ)| dθ`, dropping the `o(1)` remainder.
pub fn comp_asymptotic(k: usize, n: f64, fisher: &FisherIntegral) -> Result<ComplexityValue> {
    if k < 1 || !(n > 0.0) {
        return Err(MdlError::invalid("asymptotic complexity needs k >= 1 and n > 0"));
    }
    if !(fisher.value > 0.0 && fisher.value.is_finite()) {
        return Err(MdlError::invalid("Fisher information integral must be positive and finite"));
    }
    let nats = 0.5 * k as f64 * (n / (2.0 * std::f64::consts::PI)).ln() + fisher.value.ln();
    Ok(ComplexityValue::new(nats, ComplexityMethod::Asymptotic, n, fisher.closed_form.clone()))
}

/// `π^{r/2} / Γ(r/2)`: the Dirichlet(½, …, ½) normalizer.
pub fn jeffreys_integral_multinomial(r: usize) -> Result<FisherIntegral> {
    if r < 2 {
        return Err(MdlError::invalid("Jeffreys integral needs r >= 2"));
    }
    let half = r as f64 / 2.0;
    let value = (half * std::f64::consts::PI.ln() - lgamma(half)).exp();
    Ok(FisherIntegral { value, closed_form: format!("pi^({r}/2)/Gamma({r}/2)") })
}

/// Upper bound on live dynamic-programming states for exact Markov complexity.
pub const MARKOV_STATE_BUDGET: usize = 200_000;

/// Markov-chain complexity with uniform initial symbols.
///
/// Exact when the transition-count dynamic program stays within
/// [`MARKOV_STATE_BUDGET`]; otherwise the classical expansion with each
/// context receiving `(n - order) / r^order` transitions.
pub fn comp_markov(order: usize, arity: usize, n: u64) -> Result<ComplexityValue> {
    if arity < 2 {
        return Err(MdlError::invalid("Markov complexity needs r >= 2"));
    }
    let label = format!("markov(order={order}, r={arity})");
    if order == 0 {
        let mut v = comp_multinomial_exact(n, arity as u64)?;
        v.family = label;
        return Ok(v);
    }
    if n <= order as u64 {
        return Ok(ComplexityValue::new(0.0, ComplexityMethod::ExactSum, n as f64, label));
    }
    if let Some(nats) = markov_exact_cached(order, arity, n as usize) {
        return Ok(ComplexityValue::new(nats, ComplexityMethod::ExactSum, n as f64, label));
    }
    let contexts = arity.pow(order as u32) as f64;
    let transitions = (n - order as u64) as f64;
    let per_context = comp_asymptotic(arity - 1, transitions / contexts, &jeffreys_integral_multinomial(arity)?)?;
    Ok(ComplexityValue::new(contexts * per_context.nats, ComplexityMethod::Asymptotic, n as f64, label))
}

type MarkovKey = (usize, usize, usize);

fn markov_exact_cached(order: usize, arity: usize, n: usize) -> Option<f64> {
    static CACHE: OnceLock<RwLock<HashMap<MarkovKey, Option<f64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let key = (order, arity, n);
    if let Some(v) = cache.read().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return *v;
    }
    let value = markov_exact(order, arity, n);
    cache.write().unwrap_or_else(|e| e.into_inner()).insert(key, value);
    value
}

fn markov_exact(order: usize, arity: usize, n: usize) -> Option<f64> {
    let contexts = arity.pow(order as u32);
    let cells = contexts * arity;
    if n - order > u16::MAX as usize {
        return None;
    }
    // state: (current context, transition counts) -> number of sequences;
    // ordered maps keep the floating-point summation order fixed
    let mut states: BTreeMap<(usize, Vec<u16>), f64> = BTreeMap::new();
    for ctx in 0..contexts {
        states.insert((ctx, vec![0; cells]), 1.0);
    }
    for _ in order..n {
        let mut next: BTreeMap<(usize, Vec<u16>), f64> = BTreeMap::new();
        for ((ctx, counts), mult) in states {
            for s in 0..arity {
                let mut c = counts.clone();
                c[ctx * arity + s] += 1;
                let nctx = (ctx * arity + s) % contexts;
                *next.entry((nctx, c)).or_insert(0.0) += mult;
            }
        }
        if next.len() > MARKOV_STATE_BUDGET {
            return None;
        }
        states = next;
    }
    let mut total = LogSum::default();
    let mut row = vec![0u64; arity];
    for ((_, counts), mult) in &states {
        let mut ll = 0.0;
        for chunk in counts.chunks(arity) {
            for (dst, &c) in row.iter_mut().zip(chunk) {
                *dst = c as u64;
            }
            ll += ml_log_likelihood(&row);
        }
        total.add(mult.ln() + ll);
    }
    Some(total.value() - order as f64 * (arity as f64).ln())
}

/// `COMP(M, v ≡ 1)` for a family at sample size `n`.
pub fn comp_family(family: &ModelFamily, n: u64) -> Result<ComplexityValue> {
    match family {
        ModelFamily::Bernoulli => Ok(comp_bernoulli_exact(n)),
        ModelFamily::Multinomial { arity } => comp_multinomial_exact(n, *arity as u64),
        ModelFamily::MarkovChain { order, arity } => comp_markov(*order, *arity, n),
        ModelFamily::Point { .. } => {
            Ok(ComplexityValue::new(0.0, ComplexityMethod::ExactSum, n as f64, family.to_string()))
        }
        ModelFamily::GaussianLocation { .. } | ModelFamily::LinearRegression { .. } => {
            Err(MdlError::ComplexityDiverges(format!(
                "{family} has infinite complexity under uniform luckiness; use a Gaussian luckiness function"
            )))
        }
    }
}
