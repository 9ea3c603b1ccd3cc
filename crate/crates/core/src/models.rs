//! Parametric model families, sufficient statistics and point estimation.
//!
//! All likelihoods are natural-log values (nats). Boundary parameters are
//! allowed: the log-likelihood of an outcome with probability zero is `-inf`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{MdlError, Result};
use crate::math::xlogy;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Interval endpoint for one-dimensional searches on the open unit interval.
pub const SEARCH_EPSILON: f64 = 1e-9;
/// Final bracket width of the golden-section refinement.
pub const SEARCH_TOLERANCE: f64 = 1e-10;

/// A single observation.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Symbol(usize),
    Real(f64),
    Pair { x: Vec<f64>, y: f64 },
}

/// An ordered sequence of outcomes of one kind.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSequence {
    Categorical {
        arity: usize,
        symbols: Vec<usize>,
    },
    Real(Vec<f64>),
    /// Rows of `x` are covariate vectors, `y` holds the responses.
    Regression {
        x: DMatrix<f64>,
        y: DVector<f64>,
    },
}

impl DataSequence {
    pub fn categorical(arity: usize, symbols: Vec<usize>) -> Result<Self> {
        if arity < 1 {
            return Err(MdlError::invalid("categorical arity must be at least 1"));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s >= arity) {
            return Err(MdlError::invalid(format!("symbol {bad} is not below arity {arity}")));
        }
        Ok(DataSequence::Categorical { arity, symbols })
    }

    /// Binary sequence from a string of `0`/`1` characters.
    pub fn bits(text: &str) -> Result<Self> {
        let symbols = text
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(MdlError::invalid(format!("'{other}' is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DataSequence::Categorical { arity: 2, symbols })
    }

    pub fn real(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MdlError::invalid("real outcomes must be finite"));
        }
        Ok(DataSequence::Real(values))
    }

    pub fn regression(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(MdlError::invalid(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(MdlError::invalid("regression data must be finite"));
        }
        Ok(DataSequence::Regression { x, y })
    }

    pub fn len(&self) -> usize {
        match self {
            DataSequence::Categorical { symbols, .. } => symbols.len(),
            DataSequence::Real(v) => v.len(),
            DataSequence::Regression { y, .. } => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbols(&self) -> Option<&[usize]> {
        match self {
            DataSequence::Categorical { symbols, .. } => Some(symbols),
            _ => None,
        }
    }

    pub fn arity(&self) -> Option<usize> {
        match self {
            DataSequence::Categorical { arity, .. } => Some(*arity),
            _ => None,
        }
    }

    pub fn outcome(&self, i: usize) -> Outcome {
        match self {
            DataSequence::Categorical { symbols, .. } => Outcome::Symbol(symbols[i]),
            DataSequence::Real(v) => Outcome::Real(v[i]),
            DataSequence::Regression { x, y } => Outcome::Pair { x: x.row(i).iter().copied().collect(), y: y[i] },
        }
    }

    /// The first `k` outcomes.
    pub fn prefix(&self, k: usize) -> DataSequence {
        let k = k.min(self.len());
        match self {
            DataSequence::Categorical { arity, symbols } => {
                DataSequence::Categorical { arity: *arity, symbols: symbols[..k].to_vec() }
            }
            DataSequence::Real(v) => DataSequence::Real(v[..k].to_vec()),
            DataSequence::Regression { x, y } => {
                DataSequence::Regression { x: x.rows(0, k).into_owned(), y: y.rows(0, k).into_owned() }
            }
        }
    }

    /// Outcomes `start..` as a new sequence.
    pub fn suffix(&self, start: usize) -> DataSequence {
        let start = start.min(self.len());
        match self {
            DataSequence::Categorical { arity, symbols } => {
                DataSequence::Categorical { arity: *arity, symbols: symbols[start..].to_vec() }
            }
            DataSequence::Real(v) => DataSequence::Real(v[start..].to_vec()),
            DataSequence::Regression { x, y } => {
                let rows = y.len() - start;
                DataSequence::Regression { x: x.rows(start, rows).into_owned(), y: y.rows(start, rows).into_owned() }
            }
        }
    }

    pub fn concat(&self, other: &DataSequence) -> Result<DataSequence> {
        match (self, other) {
            (
                DataSequence::Categorical { arity: a, symbols: s },
                DataSequence::Categorical { arity: b, symbols: t },
            ) if a == b => {
                let mut symbols = s.clone();
                symbols.extend_from_slice(t);
                Ok(DataSequence::Categorical { arity: *a, symbols })
            }
            (DataSequence::Real(a), DataSequence::Real(b)) => {
                let mut v = a.clone();
                v.extend_from_slice(b);
                Ok(DataSequence::Real(v))
            }
            (DataSequence::Regression { x: xa, y: ya }, DataSequence::Regression { x: xb, y: yb })
                if xa.ncols() == xb.ncols() =>
            {
                let n = ya.len() + yb.len();
                let x = DMatrix::from_fn(
                    n,
                    xa.ncols(),
                    |i, j| {
                        if i < ya.len() {
                            xa[(i, j)]
                        } else {
                            xb[(i - ya.len(), j)]
                        }
                    },
                );
                let y = DVector::from_fn(n, |i, _| if i < ya.len() { ya[i] } else { yb[i - ya.len()] });
                Ok(DataSequence::Regression { x, y })
            }
            _ => Err(MdlError::invalid("cannot concatenate sequences of different kinds")),
        }
    }
}

/// A parameter vector. Categorical families store full probability rows
/// (Markov chains: one row per context, contexts in mixed-radix order).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(pub Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn bernoulli(theta: f64) -> Self {
        ParamVector(vec![theta])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        ParamVector(values)
    }
}

/// A parametric family `{p_θ : θ ∈ Θ}`.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFamily {
    Bernoulli,
    Multinomial {
        arity: usize,
    },
    /// Order-`order` chain; the first `order` symbols are uniform.
    MarkovChain {
        order: usize,
        arity: usize,
    },
    GaussianLocation {
        sigma2: f64,
    },
    LinearRegression {
        covariates: usize,
        sigma2: f64,
    },
    /// The singleton model `{p_θ0}` inside `base`.
    Point {
        base: Box<ModelFamily>,
        params: ParamVector,
    },
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFamily::Bernoulli => write!(f, "bernoulli"),
            ModelFamily::Multinomial { arity } => write!(f, "multinomial(r={arity})"),
            ModelFamily::MarkovChain { order, arity } => write!(f, "markov(order={order}, r={arity})"),
            ModelFamily::GaussianLocation { sigma2 } => write!(f, "gaussian-location(sigma2={sigma2})"),
            ModelFamily::LinearRegression { covariates, sigma2 } => {
                write!(f, "linear-regression(m={covariates}, sigma2={sigma2})")
            }
            ModelFamily::Point { base, params } => write!(f, "point({base} at {:?})", params.0),
        }
    }
}

impl ModelFamily {
    pub fn multinomial(arity: usize) -> Result<Self> {
        let family = ModelFamily::Multinomial { arity };
        family.validate()?;
        Ok(family)
    }

    pub fn markov(order: usize, arity: usize) -> Result<Self> {
        let family = ModelFamily::MarkovChain { order, arity };
        family.validate()?;
        Ok(family)
    }

    pub fn gaussian(sigma2: f64) -> Result<Self> {
        let family = ModelFamily::GaussianLocation { sigma2 };
        family.validate()?;
        Ok(family)
    }

    pub fn regression(covariates: usize, sigma2: f64) -> Result<Self> {
        let family = ModelFamily::LinearRegression { covariates, sigma2 };
        family.validate()?;
        Ok(family)
    }

    /// Singleton model at `params`.
    pub fn point(base: ModelFamily, params: ParamVector) -> Result<Self> {
        base.validate()?;
        base.check_params(&params)?;
        Ok(ModelFamily::Point { base: Box::new(base), params })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelFamily::Bernoulli => Ok(()),
            ModelFamily::Multinomial { arity } | ModelFamily::MarkovChain { arity, .. } => {
                if *arity < 2 {
                    Err(MdlError::invalid("categorical families need arity r >= 2"))
                } else {
                    Ok(())
                }
            }
            ModelFamily::GaussianLocation { sigma2 } => positive_variance(*sigma2),
            ModelFamily::LinearRegression { covariates, sigma2 } => {
                if *covariates < 1 {
                    return Err(MdlError::invalid("regression needs at least one covariate"));
                }
                positive_variance(*sigma2)
            }
            ModelFamily::Point { base, params } => {
                base.validate()?;
                base.check_params(params)
            }
        }
    }

    /// Alphabet size for categorical families.
    pub fn arity(&self) -> Option<usize> {
        match self {
            ModelFamily::Bernoulli => Some(2),
            ModelFamily::Multinomial { arity } | ModelFamily::MarkovChain { arity, .. } => Some(*arity),
            ModelFamily::Point { base, .. } => base.arity(),
            _ => None,
        }
    }

    /// Number of free parameters `k`.
    pub fn dimension(&self) -> usize {
        match self {
            ModelFamily::Bernoulli | ModelFamily::GaussianLocation { .. } => 1,
            ModelFamily::Multinomial { arity } => arity - 1,
            ModelFamily::MarkovChain { order, arity } => arity.pow(*order as u32) * (arity - 1),
            ModelFamily::LinearRegression { covariates, .. } => *covariates,
            ModelFamily::Point { .. } => 0,
        }
    }

    /// Length of a parameter vector for this family.
    pub fn param_len(&self) -> usize {
        match self {
            ModelFamily::Bernoulli | ModelFamily::GaussianLocation { .. } => 1,
            ModelFamily::Multinomial { arity } => *arity,
            ModelFamily::MarkovChain { order, arity } => arity.pow(*order as u32 + 1),
            ModelFamily::LinearRegression { covariates, .. } => *covariates,
            ModelFamily::Point { base, .. } => base.param_len(),
        }
    }

    /// True for families whose joint probability depends on symbol counts only.
    pub fn is_exchangeable_categorical(&self) -> bool {
        match self {
            ModelFamily::Bernoulli | ModelFamily::Multinomial { .. } => true,
            ModelFamily::Point { base, .. } => base.is_exchangeable_categorical(),
            _ => false,
        }
    }

    /// The family parameters are evaluated in (the base family of a point model).
    pub fn base(&self) -> &ModelFamily {
        match self {
            ModelFamily::Point { base, .. } => base.base(),
            other => other,
        }
    }

    pub fn check_data(&self, data: &DataSequence) -> Result<()> {
        match (self, data) {
            (ModelFamily::Point { base, .. }, _) => base.check_data(data),
            (ModelFamily::Bernoulli, DataSequence::Categorical { arity, .. })
            | (ModelFamily::Multinomial { arity: _ }, DataSequence::Categorical { arity, .. })
            | (ModelFamily::MarkovChain { .. }, DataSequence::Categorical { arity, .. }) => {
                let expected = self.arity().unwrap_or(2);
                if *arity != expected {
                    return Err(MdlError::invalid(format!(
                        "data arity {arity} does not match family arity {expected}"
                    )));
                }
                Ok(())
            }
            (ModelFamily::GaussianLocation { .. }, DataSequence::Real(_)) => Ok(()),
            (ModelFamily::LinearRegression { covariates, .. }, DataSequence::Regression { x, .. }) => {
                if x.ncols() != *covariates {
                    return Err(MdlError::invalid(format!(
                        "design has {} columns, family expects {covariates}",
                        x.ncols()
                    )));
                }
                Ok(())
            }
            _ => Err(MdlError::invalid(format!("data kind does not match family {self}"))),
        }
    }

    pub fn check_params(&self, params: &ParamVector) -> Result<()> {
        if let ModelFamily::Point { params: point, .. } = self {
            let same =
                point.len() == params.len() && point.0.iter().zip(&params.0).all(|(a, b)| (a - b).abs() <= 1e-12);
            return if same {
                Ok(())
            } else {
                Err(MdlError::invalid("parameter is not the point of a singleton model"))
            };
        }
        if params.len() != self.param_len() {
            return Err(MdlError::invalid(format!(
                "parameter has length {}, family {self} expects {}",
                params.len(),
                self.param_len()
            )));
        }
        if params.0.iter().any(|v| !v.is_finite()) {
            return Err(MdlError::invalid("parameters must be finite"));
        }
        match self {
            ModelFamily::Bernoulli => {
                let t = params.0[0];
                if !(0.0..=1.0).contains(&t) {
                    return Err(MdlError::invalid(format!("Bernoulli parameter {t} outside [0, 1]")));
                }
            }
            ModelFamily::Multinomial { arity } | ModelFamily::MarkovChain { arity, .. } => {
                for row in params.0.chunks(*arity) {
                    if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                        return Err(MdlError::invalid("probabilities must lie in [0, 1]"));
                    }
                    let total: f64 = row.iter().sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(MdlError::invalid(format!("probability row sums to {total}")));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// `log p_θ(z^n)` in nats.
    pub fn log_likelihood(&self, params: &ParamVector, data: &DataSequence) -> Result<f64> {
        self.check_data(data)?;
        self.check_params(params)?;
        let stats = SufficientStats::from_data(self, data)?;
        Ok(self.log_likelihood_stats(params, &stats))
    }

    /// Log-likelihood from sufficient statistics; inputs assumed validated.
    pub fn log_likelihood_stats(&self, params: &ParamVector, stats: &SufficientStats) -> f64 {
        let theta = &params.0;
        match (self, stats) {
            (ModelFamily::Point { base, .. }, _) => base.log_likelihood_stats(params, stats),
            (ModelFamily::Bernoulli, SufficientStats::Counts(c)) => {
                xlogy(c[1] as f64, theta[0]) + xlogy(c[0] as f64, 1.0 - theta[0])
            }
            (ModelFamily::Multinomial { .. }, SufficientStats::Counts(c)) => {
                c.iter().zip(theta).map(|(&n, &p)| xlogy(n as f64, p)).sum()
            }
            (ModelFamily::MarkovChain { arity, .. }, SufficientStats::Transitions(t)) => {
                let start = -(t.initial.len() as f64) * (*arity as f64).ln();
                start + t.counts.iter().zip(theta).map(|(&n, &p)| xlogy(n as f64, p)).sum::<f64>()
            }
            (ModelFamily::GaussianLocation { sigma2 }, SufficientStats::Gaussian { count, sum, sum_sq }) => {
                let n = *count as f64;
                let mu = theta[0];
                let rss = sum_sq - 2.0 * mu * sum + n * mu * mu;
                -0.5 * n * (LN_2PI + sigma2.ln()) - rss.max(0.0) / (2.0 * sigma2)
            }
            (ModelFamily::LinearRegression { sigma2, .. }, SufficientStats::Regression { gram, xty, yty, n }) => {
                let beta = DVector::from_column_slice(theta);
                let rss = yty - 2.0 * beta.dot(xty) + (gram * &beta).dot(&beta);
                -0.5 * (*n as f64) * (LN_2PI + sigma2.ln()) - rss.max(0.0) / (2.0 * sigma2)
            }
            _ => f64::NAN,
        }
    }

    /// Maximum-likelihood estimate.
    pub fn mle(&self, data: &DataSequence) -> Result<ParamVector> {
        self.check_data(data)?;
        if data.is_empty() {
            return Err(MdlError::invalid("maximum likelihood needs at least one outcome"));
        }
        let stats = SufficientStats::from_data(self, data)?;
        self.mle_stats(&stats)
    }

    pub fn mle_stats(&self, stats: &SufficientStats) -> Result<ParamVector> {
        match (self, stats) {
            (ModelFamily::Point { params, .. }, _) => Ok(params.clone()),
            (ModelFamily::Bernoulli, SufficientStats::Counts(c)) => {
                let n = (c[0] + c[1]) as f64;
                Ok(ParamVector::bernoulli(c[1] as f64 / n))
            }
            (ModelFamily::Multinomial { .. }, SufficientStats::Counts(c)) => {
                let n: u64 = c.iter().sum();
                Ok(ParamVector(c.iter().map(|&k| k as f64 / n as f64).collect()))
            }
            (ModelFamily::MarkovChain { arity, .. }, SufficientStats::Transitions(t)) => {
                let r = *arity;
                let mut values = Vec::with_capacity(t.counts.len());
                for row in t.counts.chunks(r) {
                    let total: u64 = row.iter().sum();
                    if total == 0 {
                        // any row maximizes the likelihood of an unvisited context
                        values.extend(std::iter::repeat_n(1.0 / r as f64, r));
                    } else {
                        values.extend(row.iter().map(|&k| k as f64 / total as f64));
                    }
                }
                Ok(ParamVector(values))
            }
            (ModelFamily::GaussianLocation { .. }, SufficientStats::Gaussian { count, sum, .. }) => {
                Ok(ParamVector(vec![sum / *count as f64]))
            }
            (ModelFamily::LinearRegression { .. }, SufficientStats::Regression { gram, xty, .. }) => {
                let beta = solve_spd(gram, xty).ok_or(MdlError::DegenerateDesign)?;
                Ok(ParamVector(beta.iter().copied().collect()))
            }
            _ => Err(MdlError::invalid("statistics do not match family")),
        }
    }

    /// MDL estimate `argmax_θ p_θ(z^n) v(θ)`.
    pub fn mdl_estimate(&self, luckiness: &LuckinessFunction, data: &DataSequence) -> Result<ParamVector> {
        luckiness.validate()?;
        self.check_data(data)?;
        match luckiness {
            LuckinessFunction::Uniform | LuckinessFunction::StartUpData { .. } => self.mle(data),
            LuckinessFunction::GaussianOnCoefficients { covariance, sigma2: lk_sigma2 } => {
                let stats = SufficientStats::from_data(self, data)?;
                let (gram, xty, noise) = match (self, &stats) {
                    (ModelFamily::LinearRegression { sigma2, .. }, SufficientStats::Regression { gram, xty, .. }) => {
                        (gram.clone(), xty.clone(), *sigma2)
                    }
                    (ModelFamily::GaussianLocation { sigma2 }, SufficientStats::Gaussian { count, sum, .. }) => {
                        (DMatrix::from_element(1, 1, *count as f64), DVector::from_element(1, *sum), *sigma2)
                    }
                    _ => {
                        return Err(MdlError::InvalidLuckiness(
                            "Gaussian coefficient luckiness applies to Gaussian families".into(),
                        ))
                    }
                };
                if covariance.nrows() != gram.nrows() {
                    return Err(MdlError::InvalidLuckiness(format!(
                        "luckiness covariance is {}x{}, parameter dimension is {}",
                        covariance.nrows(),
                        covariance.ncols(),
                        gram.nrows()
                    )));
                }
                let precision = covariance
                    .clone()
                    .cholesky()
                    .ok_or_else(|| MdlError::InvalidLuckiness("covariance is not positive definite".into()))?
                    .inverse();
                let system = gram + precision * (noise / lk_sigma2);
                let beta = solve_spd(&system, &xty).ok_or(MdlError::DegenerateDesign)?;
                Ok(ParamVector(beta.iter().copied().collect()))
            }
            LuckinessFunction::DiscretizedMass { grid, mass } => {
                let stats = SufficientStats::from_data(self, data)?;
                let mut best: Option<(f64, &ParamVector)> = None;
                for (point, &w) in grid.iter().zip(mass) {
                    if w <= 0.0 {
                        continue;
                    }
                    self.check_params(point)?;
                    let value = self.log_likelihood_stats(point, &stats) + w.ln();
                    if best.is_none_or(|(b, _)| value > b) {
                        best = Some((value, point));
                    }
                }
                best.map(|(_, p)| p.clone())
                    .ok_or_else(|| MdlError::InvalidLuckiness("mass function is zero on the grid".into()))
            }
            LuckinessFunction::Custom(custom) => {
                if !matches!(self, ModelFamily::Bernoulli) {
                    return Err(MdlError::Unsupported(format!(
                        "numerical MDL estimation with a custom luckiness function is implemented for Bernoulli only, not {self}"
                    )));
                }
                let stats = SufficientStats::from_data(self, data)?;
                let counts = match &stats {
                    SufficientStats::Counts(c) => [c[0], c[1]],
                    _ => unreachable!(),
                };
                let (theta, value) =
                    bernoulli_penalized_argmax(counts, |t| custom.log_value(&ParamVector::bernoulli(t)));
                if value == f64::NEG_INFINITY {
                    return Err(MdlError::InvalidLuckiness(
                        "luckiness function vanishes on the parameter space".into(),
                    ));
                }
                Ok(ParamVector::bernoulli(theta))
            }
        }
    }

    /// Draws `n` outcomes from `p_θ`. Regression needs a design, see [`sample_regression`].
    pub fn sample<R: Rng + ?Sized>(&self, params: &ParamVector, n: usize, rng: &mut R) -> Result<DataSequence> {
        self.check_params(params)?;
        let theta = &params.0;
        match self {
            ModelFamily::Point { base, .. } => base.sample(params, n, rng),
            ModelFamily::Bernoulli => {
                let symbols = (0..n).map(|_| usize::from(rng.random::<f64>() < theta[0])).collect();
                Ok(DataSequence::Categorical { arity: 2, symbols })
            }
            ModelFamily::Multinomial { arity } => {
                let symbols = (0..n).map(|_| draw_categorical(theta, rng)).collect();
                Ok(DataSequence::Categorical { arity: *arity, symbols })
            }
            ModelFamily::MarkovChain { order, arity } => {
                let r = *arity;
                let contexts = r.pow(*order as u32);
                let mut symbols = Vec::with_capacity(n);
                let mut ctx = 0usize;
                for i in 0..n {
                    let s = if i < *order {
                        rng.random_range(0..r)
                    } else {
                        draw_categorical(&theta[ctx * r..(ctx + 1) * r], rng)
                    };
                    if contexts > 1 {
                        ctx = (ctx * r + s) % contexts;
                    }
                    symbols.push(s);
                }
                Ok(DataSequence::Categorical { arity: r, symbols })
            }
            ModelFamily::GaussianLocation { sigma2 } => {
                let normal = Normal::new(theta[0], sigma2.sqrt()).map_err(|e| MdlError::invalid(e.to_string()))?;
                Ok(DataSequence::Real((0..n).map(|_| normal.sample(rng)).collect()))
            }
            ModelFamily::LinearRegression { .. } => {
                Err(MdlError::Unsupported("regression sampling needs a design matrix; use sample_regression".into()))
            }
        }
    }
}

/// Responses `y = Xβ + N(0, σ²)` for a fixed design.
pub fn sample_regression<R: Rng + ?Sized>(
    x: &DMatrix<f64>,
    beta: &[f64],
    sigma2: f64,
    rng: &mut R,
) -> Result<DataSequence> {
    if beta.len() != x.ncols() {
        return Err(MdlError::invalid("coefficient length does not match design"));
    }
    let noise = Normal::new(0.0, sigma2.sqrt()).map_err(|e| MdlError::invalid(e.to_string()))?;
    let mean = x * DVector::from_column_slice(beta);
    let y = mean.map(|m| m + noise.sample(rng));
    DataSequence::regression(x.clone(), y)
}

fn draw_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

fn positive_variance(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(MdlError::invalid(format!("variance must be positive, got {sigma2}")))
    }
}

/// Solves `A x = b` for symmetric positive definite `A`; `None` when `A` is
/// singular or numerically so.
pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    if a.nrows() == 0 {
        return Some(DVector::zeros(0));
    }
    let chol = a.clone().cholesky()?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if lo <= hi * 1e-8 {
        return None;
    }
    Some(chol.solve(b))
}

/// `log |A|` for symmetric positive definite `A`.
pub(crate) fn ln_det_spd(a: &DMatrix<f64>) -> Option<f64> {
    if a.nrows() == 0 {
        return Some(0.0);
    }
    let chol = a.clone().cholesky()?;
    Some(2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// Maximizes `n1 log θ + n0 log(1-θ) + log_v(θ)` over `[ε, 1-ε]`: a coarse
/// scan brackets the maximum, golden-section search refines it.
pub(crate) fn bernoulli_penalized_argmax(counts: [u64; 2], log_v: impl Fn(f64) -> f64) -> (f64, f64) {
    let objective = |t: f64| xlogy(counts[1] as f64, t) + xlogy(counts[0] as f64, 1.0 - t) + log_v(t);
    let (lo, hi) = (SEARCH_EPSILON, 1.0 - SEARCH_EPSILON);
    const STEPS: usize = 1000;
    let step = (hi - lo) / STEPS as f64;
    let mut best = (lo, objective(lo));
    let mut best_idx = 0;
    for i in 1..=STEPS {
        let t = lo + step * i as f64;
        let v = objective(t);
        if v > best.1 {
            best = (t, v);
            best_idx = i;
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return best;
    }
    let mut a = lo + step * best_idx.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_idx + 1) as f64).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (objective(c), objective(d));
    while b - a > SEARCH_TOLERANCE {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = objective(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = objective(t);
    if v >= best.1 {
        (t, v)
    } else {
        best
    }
}

/// Markov chain transition statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionStats {
    pub order: usize,
    pub arity: usize,
    /// The first `min(n, order)` symbols, scored uniformly.
    pub initial: Vec<usize>,
    /// Row-major `contexts × arity` transition counts.
    pub counts: Vec<u64>,
    context: usize,
}

impl TransitionStats {
    pub fn new(order: usize, arity: usize) -> Self {
        TransitionStats { order, arity, initial: Vec::new(), counts: vec![0; arity.pow(order as u32 + 1)], context: 0 }
    }

    pub fn contexts(&self) -> usize {
        self.arity.pow(self.order as u32)
    }

    /// Context index the next symbol would be conditioned on, if any.
    pub fn current_context(&self) -> Option<usize> {
        (self.initial.len() >= self.order).then_some(self.context)
    }

    pub fn push(&mut self, symbol: usize) {
        if self.initial.len() < self.order {
            self.initial.push(symbol);
        } else {
            self.counts[self.context * self.arity + symbol] += 1;
        }
        let contexts = self.contexts();
        if contexts > 1 {
            self.context = (self.context * self.arity + symbol) % contexts;
        }
    }

    pub fn row(&self, context: usize) -> &[u64] {
        &self.counts[context * self.arity..(context + 1) * self.arity]
    }
}

/// Sufficient statistics per family.
#[derive(Debug, Clone, PartialEq)]
pub enum SufficientStats {
    Counts(Vec<u64>),
    Transitions(TransitionStats),
    Gaussian { count: usize, sum: f64, sum_sq: f64 },
    Regression { gram: DMatrix<f64>, xty: DVector<f64>, yty: f64, n: usize },
}

impl SufficientStats {
    pub fn empty(family: &ModelFamily) -> Self {
        match family {
            ModelFamily::Point { base, .. } => SufficientStats::empty(base),
            ModelFamily::Bernoulli => SufficientStats::Counts(vec![0; 2]),
            ModelFamily::Multinomial { arity } => SufficientStats::Counts(vec![0; *arity]),
            ModelFamily::MarkovChain { order, arity } => {
                SufficientStats::Transitions(TransitionStats::new(*order, *arity))
            }
            ModelFamily::GaussianLocation { .. } => SufficientStats::Gaussian { count: 0, sum: 0.0, sum_sq: 0.0 },
            ModelFamily::LinearRegression { covariates, .. } => SufficientStats::Regression {
                gram: DMatrix::zeros(*covariates, *covariates),
                xty: DVector::zeros(*covariates),
                yty: 0.0,
                n: 0,
            },
        }
    }

    /// Accumulates one outcome.
    pub fn push(&mut self, outcome: &Outcome) -> Result<()> {
        match (self, outcome) {
            (SufficientStats::Counts(c), Outcome::Symbol(s)) if *s < c.len() => c[*s] += 1,
            (SufficientStats::Transitions(t), Outcome::Symbol(s)) if *s < t.arity => t.push(*s),
            (SufficientStats::Gaussian { count, sum, sum_sq }, Outcome::Real(z)) => {
                *count += 1;
                *sum += z;
                *sum_sq += z * z;
            }
            (SufficientStats::Regression { gram, xty, yty, n }, Outcome::Pair { x, y }) if x.len() == xty.len() => {
                let row = DVector::from_column_slice(x);
                *gram += &row * row.transpose();
                *xty += &row * *y;
                *yty += y * y;
                *n += 1;
            }
            _ => return Err(MdlError::invalid("outcome does not match statistics")),
        }
        Ok(())
    }

    /// Batch computation from a whole sequence.
    pub fn from_data(family: &ModelFamily, data: &DataSequence) -> Result<Self> {
        family.check_data(data)?;
        let mut stats = SufficientStats::empty(family);
        match (&mut stats, data) {
            (SufficientStats::Counts(c), DataSequence::Categorical { symbols, .. }) => {
                for &s in symbols {
                    c[s] += 1;
                }
            }
            (SufficientStats::Transitions(t), DataSequence::Categorical { symbols, .. }) => {
                for &s in symbols {
                    t.push(s);
                }
            }
            (SufficientStats::Gaussian { count, sum, sum_sq }, DataSequence::Real(v)) => {
                *count = v.len();
                *sum = v.iter().sum();
                *sum_sq = v.iter().map(|z| z * z).sum();
            }
            (SufficientStats::Regression { gram, xty, yty, n }, DataSequence::Regression { x, y }) => {
                *gram = x.transpose() * x;
                *xty = x.transpose() * y;
                *yty = y.dot(y);
                *n = y.len();
            }
            _ => return Err(MdlError::invalid("data kind does not match family")),
        }
        Ok(stats)
    }

    pub fn counts(&self) -> Option<&[u64]> {
        match self {
            SufficientStats::Counts(c) => Some(c),
            _ => None,
        }
    }
}

type LuckinessFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A user-supplied luckiness function `v(θ) ≥ 0`.
#[derive(Clone)]
pub struct CustomLuckiness {
    name: String,
    function: Arc<LuckinessFn>,
}

impl CustomLuckiness {
    pub fn new(name: impl Into<String>, function: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        CustomLuckiness { name: name.into(), function: Arc::new(function) }
    }

    /// `log v(θ)`; negative or NaN values of `v` count as zero.
    pub fn log_value(&self, params: &ParamVector) -> f64 {
        let v = (self.function)(&params.0);
        if v > 0.0 {
            v.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl fmt::Debug for CustomLuckiness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomLuckiness({})", self.name)
    }
}

/// Luckiness function `v: Θ → [0, ∞)` generalizing a prior.
#[derive(Debug, Clone)]
pub enum LuckinessFunction {
    Uniform,
    /// `v(β) = exp(-βᵀ Σ⁻¹ β / 2σ²)`, the shape of a `N(0, σ²Σ)` density.
    GaussianOnCoefficients {
        covariance: DMatrix<f64>,
        sigma2: f64,
    },
    /// Mass function `w` on a countable grid; must sum to one.
    DiscretizedMass {
        grid: Vec<ParamVector>,
        mass: Vec<f64>,
    },
    /// Uniform luckiness made usable by conditioning on the first `startup` outcomes.
    StartUpData {
        startup: usize,
    },
    Custom(CustomLuckiness),
}

impl LuckinessFunction {
    pub fn custom(name: impl Into<String>, function: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        LuckinessFunction::Custom(CustomLuckiness::new(name, function))
    }

    /// Isotropic `Σ = c·I` coefficient luckiness.
    pub fn isotropic(dimension: usize, scale: f64, sigma2: f64) -> Self {
        LuckinessFunction::GaussianOnCoefficients {
            covariance: DMatrix::identity(dimension, dimension) * scale,
            sigma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LuckinessFunction::Uniform | LuckinessFunction::StartUpData { .. } | LuckinessFunction::Custom(_) => Ok(()),
            LuckinessFunction::GaussianOnCoefficients { covariance, sigma2 } => {
                if !(*sigma2 > 0.0) {
                    return Err(MdlError::InvalidLuckiness("luckiness variance must be positive".into()));
                }
                if covariance.nrows() != covariance.ncols() {
                    return Err(MdlError::InvalidLuckiness("covariance must be square".into()));
                }
                if (covariance - covariance.transpose()).abs().max() > 1e-12 * covariance.abs().max().max(1.0) {
                    return Err(MdlError::InvalidLuckiness("covariance must be symmetric".into()));
                }
                if covariance.nrows() > 0 && covariance.clone().cholesky().is_none() {
                    return Err(MdlError::InvalidLuckiness("covariance is not positive definite".into()));
                }
                Ok(())
            }
            LuckinessFunction::DiscretizedMass { grid, mass } => {
                if grid.is_empty() {
                    return Err(MdlError::invalid("discretization grid is empty"));
                }
                if grid.len() != mass.len() {
                    return Err(MdlError::InvalidLuckiness("grid and mass have different lengths".into()));
                }
                if mass.iter().any(|w| !(*w >= 0.0)) {
                    return Err(MdlError::InvalidLuckiness("mass must be nonnegative".into()));
                }
                let total: f64 = mass.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(MdlError::InvalidLuckiness(format!("mass sums to {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// `log v(θ)`.
    pub fn log_value(&self, params: &ParamVector) -> f64 {
        match self {
            LuckinessFunction::Uniform | LuckinessFunction::StartUpData { .. } => 0.0,
            LuckinessFunction::GaussianOnCoefficients { covariance, sigma2 } => {
                let beta = DVector::from_column_slice(&params.0);
                match solve_spd(covariance, &beta) {
                    Some(z) => -beta.dot(&z) / (2.0 * sigma2),
                    None => f64::NEG_INFINITY,
                }
            }
            LuckinessFunction::DiscretizedMass { grid, mass } => {
                grid.iter().zip(mass).find(|(g, _)| g.0 == params.0).map(|(_, w)| w.ln()).unwrap_or(f64::NEG_INFINITY)
            }
            LuckinessFunction::Custom(c) => c.log_value(params),
        }
    }
}
