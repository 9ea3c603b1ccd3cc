//! Universal distributions over sequences.
//!
//! Every kind exposes a joint log-probability `log ū(z^n)` and one-step
//! predictive log-probabilities `log ū(z_i | z^{i-1})` whose sum equals the
//! joint. Joints are defined for a fixed horizon `n = data.len()`; for the
//! horizon-dependent kinds (NML, two-part, switch) the predictive at step `i`
//! is a ratio of prefix marginals obtained by summing the joint over all
//! continuations up to the horizon.

use nalgebra::{DMatrix, DVector};

use crate::complexity::comp_family;
use crate::error::{MdlError, Result};
use crate::math::{
    composition_count, for_each_composition, ln_beta, ln_multinomial, log_sum_exp, ml_log_likelihood, LogSum,
};
use crate::models::{
    bernoulli_penalized_argmax, ln_det_spd, solve_spd, DataSequence, LuckinessFunction, ModelFamily, Outcome,
    ParamVector, SufficientStats,
};
use crate::switchdist::SwitchSpec;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Largest number of count vectors summed when marginalizing an exchangeable code.
pub const MAX_COMPOSITIONS: f64 = 5e6;
/// Longest continuation enumerated symbol by symbol for non-exchangeable codes.
pub const MAX_ENUMERATED_SUFFIX: usize = 16;

/// Conjugate prior.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    /// `Beta(a, b)`, density ∝ θ^{a-1}(1-θ)^{b-1} on the probability of a one.
    Beta {
        a: f64,
        b: f64,
    },
    /// Symmetric or general Dirichlet; applied per context for Markov chains.
    Dirichlet(Vec<f64>),
    Normal {
        mean: f64,
        variance: f64,
    },
}

impl PriorSpec {
    /// `Beta(½, ½)` / `Dir(½, …, ½)`.
    pub fn jeffreys(family: &ModelFamily) -> Result<PriorSpec> {
        match family {
            ModelFamily::Bernoulli => Ok(PriorSpec::Beta { a: 0.5, b: 0.5 }),
            ModelFamily::Multinomial { arity } | ModelFamily::MarkovChain { arity, .. } => {
                Ok(PriorSpec::Dirichlet(vec![0.5; *arity]))
            }
            _ => Err(MdlError::UnsupportedPrior(format!("no Jeffreys shortcut for {family}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            PriorSpec::Beta { a, b } => *a > 0.0 && *b > 0.0,
            PriorSpec::Dirichlet(alpha) => !alpha.is_empty() && alpha.iter().all(|a| *a > 0.0),
            PriorSpec::Normal { mean, variance } => mean.is_finite() && *variance > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(MdlError::invalid(format!("prior hyperparameters must be positive: {self:?}")))
        }
    }

    /// Concentrations for a categorical family of arity `r`.
    fn concentrations(&self, r: usize) -> Option<Vec<f64>> {
        match self {
            PriorSpec::Beta { a, b } if r == 2 => Some(vec![*b, *a]),
            PriorSpec::Dirichlet(alpha) if alpha.len() == r => Some(alpha.clone()),
            _ => None,
        }
    }
}

/// Estimator driving a prequential plug-in code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PluginEstimator {
    /// `(m_j + a) / (m + b)`; multinomial families need `b = r·a`.
    SmoothedMl { a: f64, b: f64 },
    /// Plain maximum likelihood; undefined on an empty discrete history.
    Ml,
}

impl PluginEstimator {
    /// `(m_1 + ½) / (m + 1)`, the Bernoulli smoothing that reproduces Jeffreys-Bayes.
    pub const JEFFREYS: PluginEstimator = PluginEstimator::SmoothedMl { a: 0.5, b: 1.0 };

    /// `(m_j + ½) / (m + r/2)`.
    pub fn jeffreys_for(arity: usize) -> PluginEstimator {
        PluginEstimator::SmoothedMl { a: 0.5, b: arity as f64 / 2.0 }
    }
}

/// A universal distribution for a model class.
#[derive(Debug, Clone)]
pub enum UniversalDistribution {
    Bayes {
        family: ModelFamily,
        prior: PriorSpec,
    },
    /// Flat improper prior made proper by conditioning on the first `startup`
    /// outcomes, which are coded by a fixed model-independent distribution.
    BayesConditional {
        family: ModelFamily,
        startup: usize,
    },
    Nml {
        family: ModelFamily,
        luckiness: LuckinessFunction,
    },
    /// Luckiness NML for linear regression with `v = N(0, σ²Σ)` shape.
    LnmlRegression {
        sigma2: f64,
        covariance: DMatrix<f64>,
    },
    TwoPart {
        family: ModelFamily,
        grid: Vec<ParamVector>,
        mass: Vec<f64>,
    },
    PreqPlugin {
        family: ModelFamily,
        estimator: PluginEstimator,
    },
    Switch(Box<SwitchSpec>),
}

impl UniversalDistribution {
    pub fn bayes(family: ModelFamily, prior: PriorSpec) -> Self {
        UniversalDistribution::Bayes { family, prior }
    }

    /// Bayes marginal with the Jeffreys prior.
    pub fn jeffreys(family: ModelFamily) -> Result<Self> {
        let prior = PriorSpec::jeffreys(&family)?;
        Ok(UniversalDistribution::Bayes { family, prior })
    }

    /// NML with uniform luckiness.
    pub fn nml(family: ModelFamily) -> Self {
        UniversalDistribution::Nml { family, luckiness: LuckinessFunction::Uniform }
    }

    /// The single distribution `p_θ`, as the NML code of a singleton model.
    pub fn point(family: ModelFamily, params: ParamVector) -> Result<Self> {
        Ok(UniversalDistribution::nml(ModelFamily::point(family, params)?))
    }

    pub fn plugin(family: ModelFamily, estimator: PluginEstimator) -> Self {
        UniversalDistribution::PreqPlugin { family, estimator }
    }

    pub fn two_part(family: ModelFamily, grid: Vec<ParamVector>, mass: Vec<f64>) -> Self {
        UniversalDistribution::TwoPart { family, grid, mass }
    }

    pub fn switch(spec: SwitchSpec) -> Self {
        UniversalDistribution::Switch(Box::new(spec))
    }

    pub fn family(&self) -> Option<&ModelFamily> {
        match self {
            UniversalDistribution::Bayes { family, .. }
            | UniversalDistribution::BayesConditional { family, .. }
            | UniversalDistribution::Nml { family, .. }
            | UniversalDistribution::TwoPart { family, .. }
            | UniversalDistribution::PreqPlugin { family, .. } => Some(family),
            UniversalDistribution::LnmlRegression { .. } => None,
            UniversalDistribution::Switch(spec) => spec.u1.family(),
        }
    }

    /// Parameter dimension of the underlying model, used for tie-breaking.
    pub fn dimension(&self) -> usize {
        match self {
            UniversalDistribution::LnmlRegression { covariance, .. } => covariance.nrows(),
            UniversalDistribution::Switch(spec) => spec.u1.dimension().max(spec.u0.dimension()),
            other => other.family().map(ModelFamily::dimension).unwrap_or(0),
        }
    }

    /// Whether prefix probabilities depend on the total sequence length.
    pub fn is_horizon_dependent(&self) -> bool {
        match self {
            UniversalDistribution::Nml { family, luckiness } => !matches!(
                (family, luckiness),
                (ModelFamily::Point { .. }, _) | (_, LuckinessFunction::GaussianOnCoefficients { .. })
            ),
            UniversalDistribution::TwoPart { .. } | UniversalDistribution::Switch(_) => true,
            _ => false,
        }
    }

    /// `log ū(z^n)` at horizon `n = data.len()`.
    pub fn log_joint(&self, data: &DataSequence) -> Result<f64> {
        match self {
            UniversalDistribution::Bayes { family, prior } => bayes_log_marginal(family, prior, data),
            UniversalDistribution::BayesConditional { family, startup } => {
                conditional_joint(family, *startup, data, conditional_bayes_log)
            }
            UniversalDistribution::Nml { family, luckiness } => nml_log_marginal(family, luckiness, data),
            UniversalDistribution::LnmlRegression { sigma2, covariance } => {
                lnml_regression_log(data, *sigma2, covariance)
            }
            UniversalDistribution::TwoPart { family, grid, mass } => two_part_log(family, grid, mass, data),
            UniversalDistribution::PreqPlugin { family, estimator } => preq_plugin_log(family, *estimator, data),
            UniversalDistribution::Switch(spec) => crate::switchdist::switch_log_marginal(spec, data),
        }
    }

    /// `log ū(z^k)` of the first `k = prefix.len()` outcomes when the
    /// distribution is defined on sequences of length `horizon`.
    pub fn log_prefix_marginal(&self, prefix: &DataSequence, horizon: usize) -> Result<f64> {
        let k = prefix.len();
        if k > horizon {
            return Err(MdlError::invalid(format!("prefix of length {k} exceeds horizon {horizon}")));
        }
        if k == 0 {
            // sub-distribution deficiency sits on the never-occurring outcome
            return Ok(0.0);
        }
        if k == horizon || !self.is_horizon_dependent() {
            return self.log_joint(prefix);
        }
        match self {
            UniversalDistribution::Switch(spec) => crate::switchdist::switch_log_prefix_marginal(spec, prefix, horizon),
            UniversalDistribution::Nml { family, luckiness } => {
                let normalizer = nml_log_normalizer(family, luckiness, horizon)?;
                let score = CountScore::nml(family, luckiness, horizon)?;
                let unnormalized = |d: &DataSequence| match luckiness {
                    LuckinessFunction::Uniform => family.log_likelihood(&family.mle(d)?, d),
                    _ => penalized_max(family, luckiness, d),
                };
                Ok(suffix_marginal(family, prefix, horizon, &score, unnormalized)? - normalizer)
            }
            UniversalDistribution::TwoPart { family, grid, mass } => {
                let score = CountScore::TwoPart { family: family.clone(), grid: grid.clone(), mass: mass.clone() };
                suffix_marginal(family, prefix, horizon, &score, |d| self.log_joint(d))
            }
            _ => unreachable!("horizon-independent kinds handled above"),
        }
    }

    /// `log ū(z^k)` for `k = 0..=n` at horizon `n = data.len()`.
    pub fn log_prefix_marginals(&self, data: &DataSequence) -> Result<Vec<f64>> {
        if self.is_horizon_dependent() {
            if let UniversalDistribution::Switch(spec) = self {
                return crate::switchdist::switch_log_prefix_marginals(spec, data);
            }
            (0..=data.len()).map(|k| self.log_prefix_marginal(&data.prefix(k), data.len())).collect()
        } else {
            let steps = self.log_predictives(data)?;
            let mut out = Vec::with_capacity(steps.len() + 1);
            let mut acc = 0.0;
            out.push(acc);
            for s in steps {
                acc += s;
                out.push(acc);
            }
            Ok(out)
        }
    }

    /// `log ū(z_i | z^{i-1})` for `i = 1..=n` at horizon `n = data.len()`.
    pub fn log_predictives(&self, data: &DataSequence) -> Result<Vec<f64>> {
        match self {
            UniversalDistribution::Bayes { family, prior } => bayes_log_predictives(family, prior, data),
            UniversalDistribution::BayesConditional { family, startup } => {
                conditional_bayes_predictives(family, *startup, data)
            }
            UniversalDistribution::PreqPlugin { family, estimator } => {
                preq_plugin_predictives(family, *estimator, data)
            }
            UniversalDistribution::LnmlRegression { sigma2, covariance } => {
                regression_bayes_predictives(data, *sigma2, covariance)
            }
            UniversalDistribution::Nml { family: ModelFamily::Point { base, params }, .. } => {
                point_predictives(base, params, data)
            }
            UniversalDistribution::Nml {
                family,
                luckiness: LuckinessFunction::GaussianOnCoefficients { covariance, sigma2 },
            } => match (family, data) {
                (ModelFamily::GaussianLocation { sigma2: noise }, DataSequence::Real(_)) => {
                    let prior = PriorSpec::Normal { mean: 0.0, variance: sigma2 * covariance[(0, 0)] };
                    let _ = noise;
                    bayes_log_predictives(family, &prior, data)
                }
                (ModelFamily::LinearRegression { sigma2: noise, .. }, _) => {
                    regression_bayes_predictives(data, *noise, &(covariance * (sigma2 / noise)))
                }
                _ => Err(MdlError::InvalidLuckiness("Gaussian luckiness needs a Gaussian family".into())),
            },
            _ => {
                let marginals = self.log_prefix_marginals(data)?;
                Ok(marginals.windows(2).map(|w| w[1] - w[0]).collect())
            }
        }
    }

    /// `log ū(z_i | z^{i-1})` for the outcome at zero-based index `i`.
    pub fn log_predictive(&self, data: &DataSequence, i: usize) -> Result<f64> {
        if i >= data.len() {
            return Err(MdlError::invalid(format!("index {i} out of range for {} outcomes", data.len())));
        }
        if self.is_horizon_dependent() {
            let n = data.len();
            Ok(self.log_prefix_marginal(&data.prefix(i + 1), n)? - self.log_prefix_marginal(&data.prefix(i), n)?)
        } else {
            Ok(self.log_predictives(&data.prefix(i + 1))?[i])
        }
    }
}

// ---------------------------------------------------------------------------
// Bayes

fn categorical_alpha(family: &ModelFamily, prior: &PriorSpec) -> Result<Vec<f64>> {
    prior.validate()?;
    let r = family.arity().unwrap_or(0);
    prior.concentrations(r).ok_or_else(|| MdlError::UnsupportedPrior(format!("{prior:?} is not conjugate to {family}")))
}

fn dirichlet_log_marginal(alpha: &[f64], counts: &[u64]) -> f64 {
    let a0: f64 = alpha.iter().sum();
    let n: u64 = counts.iter().sum();
    let mut v = crate::math::lgamma(a0) - crate::math::lgamma(a0 + n as f64);
    for (&a, &c) in alpha.iter().zip(counts) {
        if c > 0 {
            v += crate::math::lgamma(a + c as f64) - crate::math::lgamma(a);
        }
    }
    v
}

/// `log ∫ p_θ(z^n) w(θ) dθ` in closed form for conjugate pairs.
pub fn bayes_log_marginal(family: &ModelFamily, prior: &PriorSpec, data: &DataSequence) -> Result<f64> {
    family.check_data(data)?;
    match family {
        ModelFamily::Bernoulli => {
            let alpha = categorical_alpha(family, prior)?;
            let stats = SufficientStats::from_data(family, data)?;
            let c = stats.counts().expect("counts");
            Ok(ln_beta(c[1] as f64 + alpha[1], c[0] as f64 + alpha[0]) - ln_beta(alpha[1], alpha[0]))
        }
        ModelFamily::Multinomial { .. } => {
            let alpha = categorical_alpha(family, prior)?;
            let stats = SufficientStats::from_data(family, data)?;
            Ok(dirichlet_log_marginal(&alpha, stats.counts().expect("counts")))
        }
        ModelFamily::MarkovChain { arity, .. } => {
            let alpha = categorical_alpha(family, prior)?;
            let SufficientStats::Transitions(t) = SufficientStats::from_data(family, data)? else { unreachable!() };
            let start = -(t.initial.len() as f64) * (*arity as f64).ln();
            Ok(start + (0..t.contexts()).map(|c| dirichlet_log_marginal(&alpha, t.row(c))).sum::<f64>())
        }
        ModelFamily::GaussianLocation { sigma2 } => {
            let PriorSpec::Normal { mean, variance } = prior else {
                return Err(MdlError::UnsupportedPrior(format!("{prior:?} is not conjugate to {family}")));
            };
            prior.validate()?;
            let DataSequence::Real(z) = data else { unreachable!() };
            let n = z.len() as f64;
            let s1: f64 = z.iter().map(|v| v - mean).sum();
            let s2: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum();
            let quad = s2 - variance * s1 * s1 / (sigma2 + n * variance);
            Ok(-0.5 * n * (LN_2PI + sigma2.ln()) - 0.5 * (n * variance / sigma2).ln_1p() - quad / (2.0 * sigma2))
        }
        _ => Err(MdlError::UnsupportedPrior(format!("no conjugate prior implemented for {family}"))),
    }
}

/// Posterior predictive `log ū(next | history)`.
pub fn bayes_log_predictive(
    family: &ModelFamily,
    prior: &PriorSpec,
    history: &DataSequence,
    next: &Outcome,
) -> Result<f64> {
    family.check_data(history)?;
    let mut stats = SufficientStats::from_data(family, history)?;
    bayes_step(family, prior, &mut stats, next)
}

/// Predictive of `next` given `stats`, then absorbs `next` into `stats`.
fn bayes_step(family: &ModelFamily, prior: &PriorSpec, stats: &mut SufficientStats, next: &Outcome) -> Result<f64> {
    let value = match (family, &*stats, next) {
        (ModelFamily::Bernoulli | ModelFamily::Multinomial { .. }, SufficientStats::Counts(c), Outcome::Symbol(s)) => {
            let alpha = categorical_alpha(family, prior)?;
            let m: u64 = c.iter().sum();
            let a0: f64 = alpha.iter().sum();
            ((c[*s] as f64 + alpha[*s]) / (m as f64 + a0)).ln()
        }
        (ModelFamily::MarkovChain { arity, .. }, SufficientStats::Transitions(t), Outcome::Symbol(s)) => {
            let alpha = categorical_alpha(family, prior)?;
            match t.current_context() {
                None => -(*arity as f64).ln(),
                Some(ctx) => {
                    let row = t.row(ctx);
                    let m: u64 = row.iter().sum();
                    let a0: f64 = alpha.iter().sum();
                    ((row[*s] as f64 + alpha[*s]) / (m as f64 + a0)).ln()
                }
            }
        }
        (ModelFamily::GaussianLocation { sigma2 }, SufficientStats::Gaussian { count, sum, .. }, Outcome::Real(z)) => {
            let PriorSpec::Normal { mean, variance } = prior else {
                return Err(MdlError::UnsupportedPrior(format!("{prior:?} is not conjugate to {family}")));
            };
            prior.validate()?;
            let precision = 1.0 / variance + *count as f64 / sigma2;
            let post_mean = (mean / variance + sum / sigma2) / precision;
            normal_log_density(*z, post_mean, sigma2 + 1.0 / precision)
        }
        _ => return Err(MdlError::UnsupportedPrior(format!("no conjugate predictive for {family}"))),
    };
    stats.push(next)?;
    Ok(value)
}

fn bayes_log_predictives(family: &ModelFamily, prior: &PriorSpec, data: &DataSequence) -> Result<Vec<f64>> {
    family.check_data(data)?;
    let mut stats = SufficientStats::empty(family);
    (0..data.len()).map(|i| bayes_step(family, prior, &mut stats, &data.outcome(i))).collect()
}

fn normal_log_density(z: f64, mean: f64, variance: f64) -> f64 {
    -0.5 * (LN_2PI + variance.ln()) - (z - mean) * (z - mean) / (2.0 * variance)
}

// ---------------------------------------------------------------------------
// Conditional (start-up data) codes

/// Fixed model-independent code for start-up outcomes: uniform symbols or
/// `N(0, σ²)` reals. It cancels in any comparison of models sharing it.
fn startup_log_prob(family: &ModelFamily, data: &DataSequence) -> Result<f64> {
    match (family.base(), data) {
        (ModelFamily::GaussianLocation { sigma2 }, DataSequence::Real(z)) => {
            Ok(z.iter().map(|&v| normal_log_density(v, 0.0, *sigma2)).sum())
        }
        (_, DataSequence::Categorical { arity, symbols }) => Ok(-(symbols.len() as f64) * (*arity as f64).ln()),
        _ => Err(MdlError::Unsupported(format!("no start-up code for {family}"))),
    }
}

fn conditional_joint(
    family: &ModelFamily,
    startup: usize,
    data: &DataSequence,
    conditional: impl Fn(&ModelFamily, usize, &DataSequence) -> Result<f64>,
) -> Result<f64> {
    if startup == 0 {
        return Err(MdlError::invalid("conditional codes need a start-up length m >= 1"));
    }
    family.check_data(data)?;
    let head = startup_log_prob(family, &data.prefix(startup))?;
    if data.len() <= startup {
        Ok(head)
    } else {
        Ok(head + conditional(family, startup, data)?)
    }
}

/// Flat-prior "marginal" `log ∫ p_θ(z^k) dθ` of a Gaussian location sample.
fn flat_gaussian_log_integral(z: &[f64], sigma2: f64) -> f64 {
    let k = z.len() as f64;
    let mean = z.iter().sum::<f64>() / k;
    let scatter: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum();
    -0.5 * (k - 1.0) * (LN_2PI + sigma2.ln()) - 0.5 * k.ln() - scatter / (2.0 * sigma2)
}

/// `log ū(z_{m+1}, …, z_n | z^m)` under the flat improper prior.
pub fn conditional_bayes_log(family: &ModelFamily, startup: usize, data: &DataSequence) -> Result<f64> {
    family.check_data(data)?;
    if startup >= data.len() {
        return Err(MdlError::NoDataRemaining { startup, n: data.len() });
    }
    match (family, data) {
        (ModelFamily::GaussianLocation { sigma2 }, DataSequence::Real(z)) => {
            if startup == 0 {
                return Err(MdlError::invalid("the flat prior needs at least one start-up outcome"));
            }
            Ok(flat_gaussian_log_integral(z, *sigma2) - flat_gaussian_log_integral(&z[..startup], *sigma2))
        }
        _ => Err(MdlError::UnsupportedPrior(format!("improper flat prior not implemented for {family}"))),
    }
}

fn conditional_bayes_predictives(family: &ModelFamily, startup: usize, data: &DataSequence) -> Result<Vec<f64>> {
    if startup == 0 {
        return Err(MdlError::invalid("conditional codes need a start-up length m >= 1"));
    }
    family.check_data(data)?;
    let (ModelFamily::GaussianLocation { sigma2 }, DataSequence::Real(z)) = (family, data) else {
        return Err(MdlError::UnsupportedPrior(format!("improper flat prior not implemented for {family}")));
    };
    let mut out = Vec::with_capacity(z.len());
    let mut sum = 0.0;
    for (i, &v) in z.iter().enumerate() {
        if i < startup {
            out.push(normal_log_density(v, 0.0, *sigma2));
        } else {
            let k = i as f64;
            out.push(normal_log_density(v, sum / k, sigma2 * (1.0 + 1.0 / k)));
        }
        sum += v;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// NML

/// `log ū_NML(z^n) = log p_θ̂v(z^n) + log v(θ̂v) − COMP(M, v)`.
pub fn nml_log_marginal(family: &ModelFamily, luckiness: &LuckinessFunction, data: &DataSequence) -> Result<f64> {
    family.check_data(data)?;
    luckiness.validate()?;
    let n = data.len();
    match luckiness {
        LuckinessFunction::Uniform => {
            let comp = comp_family(family, n as u64)?;
            if n == 0 {
                return Ok(0.0);
            }
            let stats = SufficientStats::from_data(family, data)?;
            let ml = family.mle_stats(&stats)?;
            Ok(family.log_likelihood_stats(&ml, &stats) - comp.nats)
        }
        LuckinessFunction::GaussianOnCoefficients { covariance, sigma2 } => match (family, data) {
            (ModelFamily::GaussianLocation { sigma2: noise }, DataSequence::Real(z)) => {
                let x = DMatrix::from_element(z.len(), 1, 1.0);
                let y = DVector::from_column_slice(z);
                lnml_regression_log(&DataSequence::Regression { x, y }, *noise, &(covariance * (sigma2 / noise)))
            }
            (ModelFamily::LinearRegression { sigma2: noise, .. }, _) => {
                lnml_regression_log(data, *noise, &(covariance * (sigma2 / noise)))
            }
            _ => Err(MdlError::InvalidLuckiness(format!("Gaussian luckiness does not apply to {family}"))),
        },
        LuckinessFunction::StartUpData { startup } => conditional_joint(family, *startup, data, conditional_nml_log),
        LuckinessFunction::DiscretizedMass { .. } | LuckinessFunction::Custom(_) => {
            if n == 0 {
                return Ok(0.0);
            }
            let score = CountScore::nml(family, luckiness, n)?;
            let normalizer = nml_log_normalizer(family, luckiness, n)?;
            let unnormalized = if family.is_exchangeable_categorical() {
                let stats = SufficientStats::from_data(family, data)?;
                score.eval(stats.counts().expect("counts"))
            } else {
                penalized_max(family, luckiness, data)?
            };
            Ok(unnormalized - normalizer)
        }
    }
}

/// `max_θ [log p_θ(z^n) + log v(θ)]` evaluated at the MDL estimate.
fn penalized_max(family: &ModelFamily, luckiness: &LuckinessFunction, data: &DataSequence) -> Result<f64> {
    let est = family.mdl_estimate(luckiness, data)?;
    Ok(family.log_likelihood(&est, data)? + luckiness.log_value(&est))
}

/// `log Σ_{z^n} max_θ p_θ(z^n) v(θ)`.
fn nml_log_normalizer(family: &ModelFamily, luckiness: &LuckinessFunction, n: usize) -> Result<f64> {
    match luckiness {
        LuckinessFunction::Uniform => Ok(comp_family(family, n as u64)?.nats),
        LuckinessFunction::DiscretizedMass { .. } | LuckinessFunction::Custom(_) => {
            let r = family.arity().ok_or_else(|| {
                MdlError::ComplexityDiverges(format!("no finite normalizer for {family} with this luckiness"))
            })?;
            let score = CountScore::nml(family, luckiness, n)?;
            if family.is_exchangeable_categorical() {
                if composition_count(n as u64, r) > MAX_COMPOSITIONS {
                    return Err(MdlError::Unsupported("normalizer needs too many count vectors".into()));
                }
                let mut acc = LogSum::default();
                for_each_composition(n as u64, r, |c| acc.add(ln_multinomial(c) + score.eval(c)));
                Ok(acc.value())
            } else {
                let mut acc = LogSum::default();
                for_each_sequence(r, n, |symbols| {
                    let d = DataSequence::Categorical { arity: r, symbols: symbols.to_vec() };
                    acc.add(penalized_max(family, luckiness, &d).unwrap_or(f64::NEG_INFINITY));
                })?;
                Ok(acc.value())
            }
        }
        _ => Err(MdlError::Unsupported(format!("no NML normalizer for {luckiness:?}"))),
    }
}

/// Conditional NML `p_θ̂(z^n) / ∫ p_θ̂(z^m, y) dy` given the first `m` outcomes.
pub fn conditional_nml_log(family: &ModelFamily, startup: usize, data: &DataSequence) -> Result<f64> {
    family.check_data(data)?;
    let n = data.len();
    if startup >= n {
        return Err(MdlError::NoDataRemaining { startup, n });
    }
    let stats = SufficientStats::from_data(family, data)?;
    let ml = family.log_likelihood_stats(&family.mle_stats(&stats)?, &stats);
    match (family, data) {
        (ModelFamily::GaussianLocation { sigma2 }, DataSequence::Real(z)) => {
            if startup == 0 {
                return Err(MdlError::ComplexityDiverges("Gaussian NML needs at least one start-up outcome".into()));
            }
            let m = startup as f64;
            let head = &z[..startup];
            let mean = head.iter().sum::<f64>() / m;
            let scatter: f64 = head.iter().map(|v| (v - mean) * (v - mean)).sum();
            // ∫ max_θ p_θ(z^m, y) dy = (2πσ²)^{-m/2} e^{-S_m/2σ²} √(n/m)
            let log_norm = -0.5 * m * (LN_2PI + sigma2.ln()) - scatter / (2.0 * sigma2) + 0.5 * (n as f64 / m).ln();
            Ok(ml - log_norm)
        }
        (f, DataSequence::Categorical { arity, symbols }) if f.is_exchangeable_categorical() => {
            let mut head = vec![0u64; *arity];
            for &s in &symbols[..startup] {
                head[s] += 1;
            }
            let rest = (n - startup) as u64;
            if composition_count(rest, *arity) > MAX_COMPOSITIONS {
                return Err(MdlError::Unsupported("conditional normalizer needs too many count vectors".into()));
            }
            let mut acc = LogSum::default();
            let mut total = head.clone();
            for_each_composition(rest, *arity, |c| {
                for (t, (h, x)) in total.iter_mut().zip(head.iter().zip(c)) {
                    *t = h + x;
                }
                acc.add(ln_multinomial(c) + ml_log_likelihood(&total));
            });
            let data_ml = ml_log_likelihood(stats.counts().expect("counts"));
            Ok(data_ml - acc.value())
        }
        _ => Err(MdlError::Unsupported(format!("conditional NML not implemented for {family}"))),
    }
}

/// Luckiness NML for linear regression with `v(β) ∝ N(0, σ²Σ)`:
/// `-[ (RSS(β̂) + β̂ᵀΣ⁻¹β̂)/2σ² + (n/2) log 2πσ² + ½ log|XᵀX + Σ⁻¹| + ½ log|Σ| ]`.
pub fn lnml_regression_log(data: &DataSequence, sigma2: f64, covariance: &DMatrix<f64>) -> Result<f64> {
    let DataSequence::Regression { x, y } = data else {
        return Err(MdlError::invalid("regression LNML needs (X, y) data"));
    };
    if !(sigma2 > 0.0) {
        return Err(MdlError::invalid("noise variance must be positive"));
    }
    if covariance.nrows() != x.ncols() || covariance.ncols() != x.ncols() {
        return Err(MdlError::InvalidLuckiness(format!(
            "covariance is {}x{} but the design has {} columns",
            covariance.nrows(),
            covariance.ncols(),
            x.ncols()
        )));
    }
    let n = y.len();
    if n == 0 {
        return Ok(0.0);
    }
    let chol = covariance
        .clone()
        .cholesky()
        .ok_or_else(|| MdlError::InvalidLuckiness("luckiness covariance is not positive definite".into()))?;
    let precision = chol.inverse();
    let ln_det_cov = ln_det_spd(covariance).expect("positive definite");
    let system = x.transpose() * x + &precision;
    let beta = solve_spd(&system, &(x.transpose() * y)).ok_or(MdlError::DegenerateDesign)?;
    let resid = y - x * &beta;
    let penalized = resid.dot(&resid) + beta.dot(&(&precision * &beta));
    let ln_det_system = ln_det_spd(&system).ok_or(MdlError::DegenerateDesign)?;
    Ok(-(penalized / (2.0 * sigma2) + 0.5 * n as f64 * (LN_2PI + sigma2.ln()) + 0.5 * ln_det_system + 0.5 * ln_det_cov))
}

/// Sequential Bayes predictives for `y | X` under `β ~ N(0, σ²Σ)`.
fn regression_bayes_predictives(data: &DataSequence, sigma2: f64, covariance: &DMatrix<f64>) -> Result<Vec<f64>> {
    let DataSequence::Regression { x, y } = data else {
        return Err(MdlError::invalid("regression predictives need (X, y) data"));
    };
    let m = x.ncols();
    if covariance.nrows() != m {
        return Err(MdlError::InvalidLuckiness("covariance dimension does not match design".into()));
    }
    let mut system = covariance
        .clone()
        .cholesky()
        .ok_or_else(|| MdlError::InvalidLuckiness("luckiness covariance is not positive definite".into()))?
        .inverse();
    let mut xty = DVector::zeros(m);
    let mut out = Vec::with_capacity(y.len());
    for i in 0..y.len() {
        let row = x.row(i).transpose();
        let chol = system.clone().cholesky().ok_or(MdlError::DegenerateDesign)?;
        let mean = chol.solve(&xty);
        let spread = row.dot(&chol.solve(&row));
        out.push(normal_log_density(y[i], row.dot(&mean), sigma2 * (1.0 + spread)));
        system += &row * row.transpose();
        xty += &row * y[i];
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Two-part

/// `max_{θ̈ ∈ Θ̈} [log p_θ̈(z^n) + log w(θ̈)]`, a sub-distribution.
pub fn two_part_log(family: &ModelFamily, grid: &[ParamVector], mass: &[f64], data: &DataSequence) -> Result<f64> {
    if grid.is_empty() {
        return Err(MdlError::invalid("two-part code needs a nonempty grid"));
    }
    LuckinessFunction::DiscretizedMass { grid: grid.to_vec(), mass: mass.to_vec() }.validate()?;
    family.check_data(data)?;
    let stats = SufficientStats::from_data(family, data)?;
    let mut best = f64::NEG_INFINITY;
    for (point, &w) in grid.iter().zip(mass) {
        family.check_params(point)?;
        if w > 0.0 {
            best = best.max(family.log_likelihood_stats(point, &stats) + w.ln());
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Prequential plug-in

/// `Σ_i log p_{θ̆(z^{i-1})}(z_i)`.
pub fn preq_plugin_log(family: &ModelFamily, estimator: PluginEstimator, data: &DataSequence) -> Result<f64> {
    Ok(preq_plugin_predictives(family, estimator, data)?.iter().sum())
}

fn smoothed_probability(count: u64, total: u64, a: f64, b: f64) -> Option<f64> {
    let denom = total as f64 + b;
    (denom > 0.0).then(|| (count as f64 + a) / denom)
}

fn preq_plugin_predictives(family: &ModelFamily, estimator: PluginEstimator, data: &DataSequence) -> Result<Vec<f64>> {
    family.check_data(data)?;
    if let ModelFamily::Point { base, params } = family {
        return point_predictives(base, params, data);
    }
    if let PluginEstimator::SmoothedMl { a, b } = estimator {
        if !(a >= 0.0 && b >= 0.0 && a <= b) {
            return Err(MdlError::invalid(format!("smoothing constants need 0 <= a <= b, got ({a}, {b})")));
        }
        if let ModelFamily::Multinomial { arity } | ModelFamily::MarkovChain { arity, .. } = family {
            if (b - *arity as f64 * a).abs() > 1e-12 {
                return Err(MdlError::invalid(format!("multinomial smoothing needs b = r*a, got ({a}, {b})")));
            }
        }
    }
    let predict = |row: &[u64], s: usize| -> Result<f64> {
        let total: u64 = row.iter().sum();
        let p = match estimator {
            PluginEstimator::Ml => {
                if total == 0 {
                    return Err(MdlError::UndefinedStart);
                }
                row[s] as f64 / total as f64
            }
            PluginEstimator::SmoothedMl { a, b } => {
                if row.len() == 2 {
                    // Bernoulli form: P(1) = (m1 + a)/(m + b)
                    let one = smoothed_probability(row[1], total, a, b).ok_or(MdlError::UndefinedStart)?;
                    if s == 1 {
                        one
                    } else {
                        1.0 - one
                    }
                } else {
                    smoothed_probability(row[s], total, a, b).ok_or(MdlError::UndefinedStart)?
                }
            }
        };
        Ok(p.ln())
    };
    let mut stats = SufficientStats::empty(family);
    let mut out = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let outcome = data.outcome(i);
        let value = match (&stats, &outcome) {
            (SufficientStats::Counts(c), Outcome::Symbol(s)) => predict(c, *s)?,
            (SufficientStats::Transitions(t), Outcome::Symbol(s)) => match t.current_context() {
                None => -(t.arity as f64).ln(),
                Some(ctx) => predict(t.row(ctx), *s)?,
            },
            (SufficientStats::Gaussian { count, sum, .. }, Outcome::Real(z)) => {
                let ModelFamily::GaussianLocation { sigma2 } = family else { unreachable!() };
                let center = match estimator {
                    PluginEstimator::Ml if *count == 0 => 0.0,
                    PluginEstimator::Ml => sum / *count as f64,
                    PluginEstimator::SmoothedMl { a, b } => {
                        let d = *count as f64 + b;
                        if d > 0.0 {
                            (sum + a) / d
                        } else {
                            0.0
                        }
                    }
                };
                normal_log_density(*z, center, *sigma2)
            }
            _ => return Err(MdlError::Unsupported(format!("plug-in code not implemented for {family}"))),
        };
        out.push(value);
        stats.push(&outcome)?;
    }
    Ok(out)
}

fn point_predictives(base: &ModelFamily, params: &ParamVector, data: &DataSequence) -> Result<Vec<f64>> {
    base.check_data(data)?;
    let mut stats = SufficientStats::empty(base);
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        stats.push(&data.outcome(i))?;
        let ll = base.log_likelihood_stats(params, &stats);
        out.push(if prev == f64::NEG_INFINITY { f64::NAN } else { ll - prev });
        prev = ll;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Regret

/// `-log ū(z^n) + log p_θ̂(z^n)`, the excess code length over the best fit in hindsight.
pub fn regret(u: &UniversalDistribution, family: &ModelFamily, data: &DataSequence) -> Result<f64> {
    let ml = family.mle(data)?;
    Ok(family.log_likelihood(&ml, data)? - u.log_joint(data)?)
}

/// `ū(z^n) / max_θ p_θ(z^n) v(θ)`, in log form.
pub fn log_fitness_ratio(
    u: &UniversalDistribution,
    family: &ModelFamily,
    luckiness: &LuckinessFunction,
    data: &DataSequence,
) -> Result<f64> {
    Ok(u.log_joint(data)? - penalized_max(family, luckiness, data)?)
}

// ---------------------------------------------------------------------------
// Marginalization over continuations

/// Unnormalized log joint of any sequence with given symbol counts.
enum CountScore {
    Nml { family: ModelFamily, luckiness: LuckinessFunction, table: Option<Vec<f64>> },
    TwoPart { family: ModelFamily, grid: Vec<ParamVector>, mass: Vec<f64> },
}

impl CountScore {
    fn nml(family: &ModelFamily, luckiness: &LuckinessFunction, horizon: usize) -> Result<Self> {
        // the custom-luckiness maximization is numeric, so tabulate it per count
        let table = match (family, luckiness) {
            (ModelFamily::Bernoulli, LuckinessFunction::Custom(custom)) => Some(
                (0..=horizon as u64)
                    .map(|n1| {
                        bernoulli_penalized_argmax([horizon as u64 - n1, n1], |t| {
                            custom.log_value(&ParamVector::bernoulli(t))
                        })
                        .1
                    })
                    .collect(),
            ),
            (
                ModelFamily::Bernoulli | ModelFamily::Multinomial { .. } | ModelFamily::MarkovChain { .. },
                LuckinessFunction::Uniform,
            ) => None,
            (ModelFamily::Point { .. }, _) => None,
            (_, LuckinessFunction::Uniform | LuckinessFunction::DiscretizedMass { .. }) => None,
            (_, LuckinessFunction::Custom(_)) => {
                return Err(MdlError::Unsupported(format!(
                    "custom luckiness NML is implemented for Bernoulli only, not {family}"
                )))
            }
            _ => None,
        };
        Ok(CountScore::Nml { family: family.clone(), luckiness: luckiness.clone(), table })
    }

    fn eval(&self, counts: &[u64]) -> f64 {
        let stats = SufficientStats::Counts(counts.to_vec());
        match self {
            CountScore::Nml { table: Some(t), .. } => t[counts[1] as usize],
            CountScore::Nml { family, luckiness, .. } => match luckiness {
                LuckinessFunction::Uniform => match family {
                    ModelFamily::Point { params, .. } => family.log_likelihood_stats(params, &stats),
                    _ => ml_log_likelihood(counts),
                },
                LuckinessFunction::DiscretizedMass { grid, mass } => grid
                    .iter()
                    .zip(mass)
                    .filter(|(_, w)| **w > 0.0)
                    .map(|(g, w)| family.log_likelihood_stats(g, &stats) + w.ln())
                    .fold(f64::NEG_INFINITY, f64::max),
                _ => f64::NAN,
            },
            CountScore::TwoPart { family, grid, mass } => grid
                .iter()
                .zip(mass)
                .filter(|(_, w)| **w > 0.0)
                .map(|(g, w)| family.log_likelihood_stats(g, &stats) + w.ln())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// `log Σ_{y} exp(score(prefix · y))` over continuations `y` of the prefix up
/// to the horizon: grouped by counts for exchangeable families, otherwise
/// enumerated (at most [`MAX_ENUMERATED_SUFFIX`] outcomes) and scored by
/// `sequence_score`.
fn suffix_marginal(
    family: &ModelFamily,
    prefix: &DataSequence,
    horizon: usize,
    score: &CountScore,
    sequence_score: impl Fn(&DataSequence) -> Result<f64>,
) -> Result<f64> {
    let DataSequence::Categorical { arity, symbols } = prefix else {
        return Err(MdlError::Unsupported(format!(
            "prefix marginals of horizon-dependent codes need categorical data, not {family}"
        )));
    };
    let r = *arity;
    let rest = horizon - symbols.len();
    if family.is_exchangeable_categorical() {
        if composition_count(rest as u64, r) > MAX_COMPOSITIONS {
            return Err(MdlError::Unsupported("prefix marginal needs too many count vectors".into()));
        }
        let mut head = vec![0u64; r];
        for &s in symbols {
            head[s] += 1;
        }
        let mut total = head.clone();
        let mut acc = LogSum::default();
        for_each_composition(rest as u64, r, |c| {
            for (t, (h, x)) in total.iter_mut().zip(head.iter().zip(c)) {
                *t = h + x;
            }
            acc.add(ln_multinomial(c) + score.eval(&total));
        });
        return Ok(acc.value());
    }
    if rest > MAX_ENUMERATED_SUFFIX {
        return Err(MdlError::Unsupported(format!(
            "prefix marginal would enumerate {rest} future outcomes (limit {MAX_ENUMERATED_SUFFIX})"
        )));
    }
    let mut terms = Vec::new();
    let mut failure = None;
    for_each_sequence(r, rest, |tail| {
        let mut full = symbols.clone();
        full.extend_from_slice(tail);
        match sequence_score(&DataSequence::Categorical { arity: r, symbols: full }) {
            Ok(v) => terms.push(v),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(log_sum_exp(&terms))
}

/// Visits every sequence of `len` symbols over `arity`, guarded by size.
fn for_each_sequence(arity: usize, len: usize, mut visit: impl FnMut(&[usize])) -> Result<()> {
    let total = (arity as f64).powi(len as i32);
    if total > (1u64 << 22) as f64 {
        return Err(MdlError::Unsupported(format!("{total} sequences are too many to enumerate")));
    }
    let mut buf = vec![0usize; len];
    loop {
        visit(&buf);
        let mut i = 0;
        loop {
            if i == len {
                return Ok(());
            }
            buf[i] += 1;
            if buf[i] < arity {
                break;
            }
            buf[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> DataSequence {
        DataSequence::bits(s).unwrap()
    }

    fn all_strings(n: usize) -> Vec<DataSequence> {
        (0..1usize << n)
            .map(|code| DataSequence::Categorical { arity: 2, symbols: (0..n).map(|i| (code >> i) & 1).collect() })
            .collect()
    }

    #[test]
    fn uniform_prior_single_flip() {
        let v = bayes_log_marginal(&ModelFamily::Bernoulli, &PriorSpec::Beta { a: 1.0, b: 1.0 }, &bits("0")).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn jeffreys_five_zeros() {
        // direct product of (m0 + ½)/(m + 1)
        let oracle: f64 = (0..5).map(|m| (m as f64 + 0.5) / (m as f64 + 1.0)).product();
        assert!((oracle - 0.24609375).abs() < 1e-15);
        let v =
            bayes_log_marginal(&ModelFamily::Bernoulli, &PriorSpec::Beta { a: 0.5, b: 0.5 }, &bits("00000")).unwrap();
        assert!((v - oracle.ln()).abs() < 1e-12);
        let m = bayes_log_marginal(
            &ModelFamily::Multinomial { arity: 2 },
            &PriorSpec::Dirichlet(vec![0.5, 0.5]),
            &bits("00000"),
        )
        .unwrap();
        assert!((m - v).abs() < 1e-12);
    }

    #[test]
    fn jeffreys_predictives() {
        let prior = PriorSpec::Beta { a: 0.5, b: 0.5 };
        let p = bayes_log_predictive(&ModelFamily::Bernoulli, &prior, &bits(""), &Outcome::Symbol(1)).unwrap();
        assert!((p - 0.5f64.ln()).abs() < 1e-15);
        let p = bayes_log_predictive(&ModelFamily::Bernoulli, &prior, &bits("1"), &Outcome::Symbol(1)).unwrap();
        assert!((p - 0.75f64.ln()).abs() < 1e-15);
        let data = bits("010");
        let total: f64 = bayes_log_predictives(&ModelFamily::Bernoulli, &prior, &data).unwrap().iter().sum();
        let joint = bayes_log_marginal(&ModelFamily::Bernoulli, &prior, &data).unwrap();
        assert!((total.exp() - joint.exp()).abs() < 1e-15);
    }

    #[test]
    fn non_conjugate_prior_rejected() {
        let err =
            bayes_log_marginal(&ModelFamily::Bernoulli, &PriorSpec::Normal { mean: 0.0, variance: 1.0 }, &bits("01"));
        assert!(matches!(err, Err(MdlError::UnsupportedPrior(_))));
    }

    #[test]
    fn gaussian_bayes_closed_form_matches_predictive_chain() {
        let family = ModelFamily::gaussian(0.7).unwrap();
        let prior = PriorSpec::Normal { mean: 0.3, variance: 2.0 };
        let data = DataSequence::real(vec![0.1, -1.2, 2.5, 0.4, 0.9]).unwrap();
        let joint = bayes_log_marginal(&family, &prior, &data).unwrap();
        let chain: f64 = bayes_log_predictives(&family, &prior, &data).unwrap().iter().sum();
        assert!((joint - chain).abs() < 1e-12);
    }

    #[test]
    fn conditional_gaussian_examples() {
        let family = ModelFamily::gaussian(1.0).unwrap();
        let c = 1.7;
        let v = conditional_bayes_log(&family, 1, &DataSequence::real(vec![c, c]).unwrap()).unwrap();
        // N(c, 1) posterior convolved with N(0, 1) noise gives N(c, 2)
        assert!((v + 0.5 * (4.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        let data = DataSequence::real(vec![0.3, -0.4, 1.1, 2.0]).unwrap();
        let shifted = DataSequence::real(vec![10.3, 9.6, 11.1, 12.0]).unwrap();
        let a = conditional_bayes_log(&family, 2, &data).unwrap();
        let b = conditional_bayes_log(&family, 2, &shifted).unwrap();
        assert!((a - b).abs() < 1e-9);
        assert!(matches!(conditional_bayes_log(&family, 4, &data), Err(MdlError::NoDataRemaining { .. })));
        // m = n-1 is a single posterior predictive: N(mean of first 3, 1 + 1/3)
        let last = conditional_bayes_log(&family, 3, &data).unwrap();
        let mean = (0.3 - 0.4 + 1.1) / 3.0;
        assert!((last - normal_log_density(2.0, mean, 1.0 + 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn conditional_nml_equals_flat_bayes_for_gaussian_location() {
        let family = ModelFamily::gaussian(0.5).unwrap();
        let data = DataSequence::real(vec![0.2, 1.4, -0.3, 0.8, 2.2, 1.0]).unwrap();
        for m in 1..5 {
            let a = conditional_nml_log(&family, m, &data).unwrap();
            let b = conditional_bayes_log(&family, m, &data).unwrap();
            assert!((a - b).abs() < 1e-10, "m={m}: {a} vs {b}");
        }
    }

    #[test]
    fn nml_bernoulli_examples() {
        let v = nml_log_marginal(&ModelFamily::Bernoulli, &LuckinessFunction::Uniform, &bits("00")).unwrap();
        assert!((v.exp() - 0.4).abs() < 1e-12);
        let u = UniversalDistribution::nml(ModelFamily::Bernoulli);
        let p = u.log_joint(&bits("000")).unwrap().exp() + u.log_joint(&bits("001")).unwrap().exp();
        assert!((p - 31.0 / 78.0).abs() < 1e-12);
        let prefix = u.log_prefix_marginal(&bits("00"), 3).unwrap().exp();
        assert!((prefix - 31.0 / 78.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_model_nml_is_likelihood() {
        let fam = ModelFamily::point(ModelFamily::Bernoulli, ParamVector::bernoulli(0.3)).unwrap();
        let data = bits("01101");
        let u = UniversalDistribution::nml(fam.clone());
        let ll = ModelFamily::Bernoulli.log_likelihood(&ParamVector::bernoulli(0.3), &data).unwrap();
        assert!((u.log_joint(&data).unwrap() - ll).abs() < 1e-12);
        assert_eq!(comp_family(&fam, 5).unwrap().nats, 0.0);
        assert!(regret(&u, &fam, &data).unwrap().abs() < 1e-12);
        // a one-point grid is the same singleton
        let grid = LuckinessFunction::DiscretizedMass { grid: vec![ParamVector::bernoulli(0.3)], mass: vec![1.0] };
        let g = nml_log_marginal(&ModelFamily::Bernoulli, &grid, &data).unwrap();
        assert!((g - ll).abs() < 1e-12);
    }

    #[test]
    fn gaussian_uniform_nml_diverges() {
        let fam = ModelFamily::gaussian(1.0).unwrap();
        let err = nml_log_marginal(&fam, &LuckinessFunction::Uniform, &DataSequence::real(vec![0.0]).unwrap());
        assert!(matches!(err, Err(MdlError::ComplexityDiverges(_))));
    }

    #[test]
    fn two_part_examples() {
        let fam = ModelFamily::Bernoulli;
        let v = two_part_log(&fam, &[ParamVector::bernoulli(0.5)], &[1.0], &bits("00")).unwrap();
        assert!((v - 0.25f64.ln()).abs() < 1e-12);
        let grid = [ParamVector::bernoulli(0.1), ParamVector::bernoulli(0.9)];
        let v = two_part_log(&fam, &grid, &[0.5, 0.5], &bits("1111")).unwrap();
        assert!((v - (0.9f64.powi(4) * 0.5).ln()).abs() < 1e-12);
        assert!(matches!(two_part_log(&fam, &[], &[], &bits("1")), Err(MdlError::InvalidInput(_))));
    }

    #[test]
    fn two_part_is_sub_distribution() {
        let grid: Vec<_> = [0.1, 0.35, 0.5, 0.8].iter().map(|&t| ParamVector::bernoulli(t)).collect();
        let mass = vec![0.1, 0.2, 0.3, 0.4];
        for n in 1..=8 {
            let total: f64 = all_strings(n)
                .iter()
                .map(|d| two_part_log(&ModelFamily::Bernoulli, &grid, &mass, d).unwrap().exp())
                .sum();
            assert!(total <= 1.0 + 1e-12, "n={n}: {total}");
        }
    }

    #[test]
    fn plugin_examples() {
        let fam = ModelFamily::gaussian(1.0).unwrap();
        let v = preq_plugin_log(&fam, PluginEstimator::Ml, &DataSequence::real(vec![0.0]).unwrap()).unwrap();
        assert!((v + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        let err = preq_plugin_log(&ModelFamily::Bernoulli, PluginEstimator::Ml, &bits("01"));
        assert_eq!(err, Err(MdlError::UndefinedStart));
        let a = preq_plugin_log(&ModelFamily::Bernoulli, PluginEstimator::JEFFREYS, &bits("0110")).unwrap();
        let b = preq_plugin_log(&ModelFamily::Bernoulli, PluginEstimator::JEFFREYS, &bits("01101")).unwrap();
        let step = bayes_log_predictive(
            &ModelFamily::Bernoulli,
            &PriorSpec::Beta { a: 0.5, b: 0.5 },
            &bits("0110"),
            &Outcome::Symbol(1),
        )
        .unwrap();
        assert!((b - a - step).abs() < 1e-12);
    }

    #[test]
    fn jeffreys_plugin_is_jeffreys_bayes() {
        for n in 0..=10 {
            for d in all_strings(n) {
                let a = preq_plugin_log(&ModelFamily::Bernoulli, PluginEstimator::JEFFREYS, &d).unwrap();
                let b = bayes_log_marginal(&ModelFamily::Bernoulli, &PriorSpec::Beta { a: 0.5, b: 0.5 }, &d).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nml_equalizer_regret() {
        for n in 1..=8 {
            let comp = comp_family(&ModelFamily::Bernoulli, n as u64).unwrap().nats;
            let u = UniversalDistribution::nml(ModelFamily::Bernoulli);
            for d in all_strings(n) {
                let r = regret(&u, &ModelFamily::Bernoulli, &d).unwrap();
                assert!((r - comp).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jeffreys_regret_tracks_expansion() {
        let mut symbols = vec![0usize; 50];
        symbols.extend(vec![1usize; 50]);
        let data = DataSequence::categorical(2, symbols).unwrap();
        let u = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
        let r = regret(&u, &ModelFamily::Bernoulli, &data).unwrap();
        let expansion = 0.5 * (100.0 / (2.0 * std::f64::consts::PI)).ln() + std::f64::consts::PI.ln();
        assert!((r - expansion).abs() < 0.1, "{r} vs {expansion}");
    }

    #[test]
    fn custom_luckiness_nml_normalizes() {
        let v = LuckinessFunction::custom("theta(1-theta)", |t| t[0] * (1.0 - t[0]) * 4.0);
        for n in 1..=6 {
            let total: f64 =
                all_strings(n).iter().map(|d| nml_log_marginal(&ModelFamily::Bernoulli, &v, d).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n}: {total}");
        }
    }

    #[test]
    fn markov_nml_prefix_marginals_normalize() {
        let fam = ModelFamily::markov(1, 2).unwrap();
        let u = UniversalDistribution::nml(fam);
        let n = 6;
        for k in 0..=n {
            let total: f64 = all_strings(k).iter().map(|d| u.log_prefix_marginal(d, n).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-9, "k={k}: {total}");
        }
    }

    #[test]
    fn lnml_regression_handles_empty_and_bad_covariance() {
        let data = DataSequence::regression(DMatrix::zeros(0, 2), DVector::zeros(0)).unwrap();
        assert_eq!(lnml_regression_log(&data, 1.0, &DMatrix::identity(2, 2)).unwrap(), 0.0);
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let d = DataSequence::regression(x, DVector::from_column_slice(&[1.0, 2.0])).unwrap();
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(lnml_regression_log(&d, 1.0, &bad), Err(MdlError::InvalidLuckiness(_))));
    }
}
