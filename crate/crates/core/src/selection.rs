//! Model comparison by total code length `−log π(γ) − log ū_γ(z^n)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{MdlError, Result};
use crate::math::ln_binomial;
use crate::models::{DataSequence, ModelFamily};
use crate::universal::{PriorSpec, UniversalDistribution};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Relative tolerance under which two code lengths count as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Candidate {
    pub label: String,
    pub universal: UniversalDistribution,
    pub log_prior: f64,
    pub dimension: usize,
}

impl Candidate {
    pub fn new(label: impl Into<String>, universal: UniversalDistribution, log_prior: f64) -> Self {
        let dimension = universal.dimension();
        Candidate { label: label.into(), universal, log_prior, dimension }
    }
}

/// Candidates with unique labels.
#[derive(Debug, Clone, Default)]
pub struct CandidateList {
    entries: Vec<Candidate>,
}

impl CandidateList {
    pub fn new(entries: Vec<Candidate>) -> Result<Self> {
        let mut labels: Vec<&str> = entries.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(MdlError::invalid(format!("duplicate candidate label {}", w[0])));
        }
        if let Some(c) = entries.iter().find(|c| c.log_prior.is_nan() || c.log_prior > 0.0) {
            return Err(MdlError::invalid(format!("log prior of {} must be <= 0", c.label)));
        }
        Ok(CandidateList { entries })
    }

    /// Equal prior `1/|Γ|` on every candidate.
    pub fn uniform(entries: Vec<(String, UniversalDistribution)>) -> Result<Self> {
        let lp = -(entries.len().max(1) as f64).ln();
        CandidateList::new(entries.into_iter().map(|(l, u)| Candidate::new(l, u, lp)).collect())
    }

    /// Whether `Σ π(γ) ≤ 1`.
    pub fn is_proper(&self) -> bool {
        self.entries.iter().map(|c| c.log_prior.exp()).sum::<f64>() <= 1.0 + 1e-9
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedCandidate {
    pub label: String,
    pub codelength_nats: f64,
    /// `−log ū_γ(z^n)` alone.
    pub data_nats: f64,
    /// `−log π(γ)` alone.
    pub prior_nats: f64,
    pub dimension: usize,
    pub rank: usize,
}

/// How the winner was separated from equally short candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    None,
    Dimension,
    Label,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    /// Sorted ascending by code length, then dimension, then label.
    pub candidates: Vec<RankedCandidate>,
    pub winner: String,
    pub tie_break: TieBreak,
    pub notes: Vec<String>,
}

impl SelectionResult {
    fn from_scores(mut rows: Vec<RankedCandidate>, notes: Vec<String>) -> Result<Self> {
        if rows.is_empty() {
            return Err(MdlError::invalid("no candidates to select from"));
        }
        if let Some(bad) = rows.iter().find(|r| r.codelength_nats.is_nan()) {
            return Err(MdlError::invalid(format!("code length of {} is undefined", bad.label)));
        }
        rows.sort_by(|a, b| {
            a.codelength_nats
                .total_cmp(&b.codelength_nats)
                .then(a.dimension.cmp(&b.dimension))
                .then(a.label.cmp(&b.label))
        });
        let best = rows[0].codelength_nats;
        let tied = |r: &RankedCandidate| (r.codelength_nats - best).abs() <= TIE_TOLERANCE * best.abs().max(1.0);
        // within the tolerance band, order by dimension then label
        let band = rows.iter().take_while(|r| tied(r)).count();
        rows[..band].sort_by(|a, b| a.dimension.cmp(&b.dimension).then(a.label.cmp(&b.label)));
        let tie_break = if band == 1 {
            TieBreak::None
        } else if rows[1].dimension != rows[0].dimension {
            TieBreak::Dimension
        } else {
            TieBreak::Label
        };
        for (i, r) in rows.iter_mut().enumerate() {
            r.rank = i + 1;
        }
        Ok(SelectionResult { winner: rows[0].label.clone(), candidates: rows, tie_break, notes })
    }

    /// Normalized `π(γ) ū_γ(z^n)` weights in table order.
    pub fn weights(&self) -> Vec<f64> {
        let lengths: Vec<f64> = self.candidates.iter().map(|c| -c.codelength_nats).collect();
        let z = crate::math::log_sum_exp(&lengths);
        lengths.iter().map(|l| (l - z).exp()).collect()
    }

    pub fn winner_row(&self) -> &RankedCandidate {
        &self.candidates[0]
    }
}

#[cfg(feature = "parallel")]
fn evaluate_all<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_all<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Scores every candidate and returns the table with its minimizer.
pub fn select(candidates: &CandidateList, data: &DataSequence) -> Result<SelectionResult> {
    if candidates.is_empty() {
        return Err(MdlError::invalid("empty candidate list"));
    }
    let scored = evaluate_all(candidates.entries(), |c| c.universal.log_joint(data));
    let mut rows = Vec::with_capacity(scored.len());
    for (c, s) in candidates.entries().iter().zip(scored) {
        let data_nats = -s?;
        rows.push(RankedCandidate {
            label: c.label.clone(),
            codelength_nats: data_nats - c.log_prior,
            data_nats,
            prior_nats: -c.log_prior,
            dimension: c.dimension,
            rank: 0,
        });
    }
    let mut notes = Vec::new();
    if !candidates.is_proper() {
        notes.push("candidate prior sums to more than one".to_string());
    }
    SelectionResult::from_scores(rows, notes)
}

/// `log(m+1) + log C(m, k)`: code the subset size uniformly, then the subset.
pub fn gamma_code_length(m: usize, k: usize) -> Result<f64> {
    if k > m {
        return Err(MdlError::invalid(format!("subset size {k} exceeds {m} covariates")));
    }
    Ok(((m + 1) as f64).ln() + ln_binomial(m as u64, k as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchStrategy {
    Exhaustive,
    GreedyForward,
}

/// Largest covariate count searched exhaustively.
pub const MAX_EXHAUSTIVE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarselConfig {
    pub sigma2: f64,
    /// Luckiness covariance on retained coefficients is `scale · I`.
    pub scale: f64,
    pub strategy: SearchStrategy,
}

impl VarselConfig {
    pub fn new(sigma2: f64) -> Self {
        VarselConfig { sigma2, scale: 1.0, strategy: SearchStrategy::Exhaustive }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariableSelection {
    /// Zero-based indices of the chosen columns.
    pub selected: Vec<usize>,
    pub strategy: SearchStrategy,
    pub result: SelectionResult,
}

/// Subset label such as `{}` or `{0,3}`.
pub fn subset_label(columns: &[usize]) -> String {
    let inner: Vec<String> = columns.iter().map(usize::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

/// Regression statistics shared by every subset.
struct GramCache {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
    m: usize,
    sigma2: f64,
    scale: f64,
}

impl GramCache {
    fn new(x: &DMatrix<f64>, y: &DVector<f64>, config: &VarselConfig) -> Self {
        GramCache {
            gram: x.transpose() * x,
            xty: x.transpose() * y,
            yty: y.dot(y),
            n: y.len(),
            m: x.ncols(),
            sigma2: config.sigma2,
            scale: config.scale,
        }
    }

    /// `−log ū_LNML(y | X_γ)` with `Σ = scale · I`, via the ridge identity
    /// `RSS(β̂) + β̂ᵀΣ⁻¹β̂ = yᵀy − β̂ᵀXᵀy`.
    fn codelength(&self, subset: &[usize]) -> Result<f64> {
        let k = subset.len();
        let base = 0.5 * self.n as f64 * (LN_2PI + self.sigma2.ln());
        if k == 0 {
            return Ok(base + self.yty / (2.0 * self.sigma2));
        }
        let mut system = DMatrix::from_fn(k, k, |i, j| self.gram[(subset[i], subset[j])]);
        for i in 0..k {
            system[(i, i)] += 1.0 / self.scale;
        }
        let rhs = DVector::from_fn(k, |i, _| self.xty[subset[i]]);
        let chol = system.cholesky().ok_or(MdlError::DegenerateDesign)?;
        let beta = chol.solve(&rhs);
        let fit = self.yty - beta.dot(&rhs);
        let ln_det: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        Ok(fit / (2.0 * self.sigma2) + base + 0.5 * ln_det + 0.5 * k as f64 * self.scale.ln())
    }

    fn row(&self, subset: &[usize]) -> Result<RankedCandidate> {
        let data_nats = self.codelength(subset)?;
        let prior_nats = gamma_code_length(self.m, subset.len())?;
        Ok(RankedCandidate {
            label: subset_label(subset),
            codelength_nats: data_nats + prior_nats,
            data_nats,
            prior_nats,
            dimension: subset.len(),
            rank: 0,
        })
    }
}

/// Chooses covariates minimizing `−log ū_LNML(y | X_γ) + L(γ)`.
pub fn variable_select(x: &DMatrix<f64>, y: &DVector<f64>, config: &VarselConfig) -> Result<VariableSelection> {
    if x.nrows() != y.len() {
        return Err(MdlError::invalid(format!("design has {} rows but response has {}", x.nrows(), y.len())));
    }
    if !(config.sigma2 > 0.0 && config.scale > 0.0) {
        return Err(MdlError::invalid("noise variance and luckiness scale must be positive"));
    }
    let m = x.ncols();
    let cache = GramCache::new(x, y, config);
    let mut notes = Vec::new();
    let strategy = if config.strategy == SearchStrategy::Exhaustive && m > MAX_EXHAUSTIVE {
        notes.push(format!("{m} covariates exceed the exhaustive limit {MAX_EXHAUSTIVE}; searched greedily"));
        SearchStrategy::GreedyForward
    } else {
        config.strategy
    };
    let rows = match strategy {
        SearchStrategy::Exhaustive => {
            let masks: Vec<u32> = (0..1u32 << m).collect();
            let scored = evaluate_all(&masks, |&mask| {
                let subset: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
                cache.row(&subset)
            });
            scored.into_iter().collect::<Result<Vec<_>>>()?
        }
        SearchStrategy::GreedyForward => {
            let mut current: Vec<usize> = Vec::new();
            let mut best = cache.row(&current)?;
            let mut rows = vec![best.clone()];
            loop {
                let options: Vec<usize> = (0..m).filter(|j| !current.contains(j)).collect();
                let scored = evaluate_all(&options, |&j| {
                    let mut s = current.clone();
                    s.push(j);
                    s.sort_unstable();
                    cache.row(&s).map(|r| (j, r))
                });
                let mut step: Option<(usize, RankedCandidate)> = None;
                for item in scored {
                    let (j, r) = item?;
                    if step.as_ref().is_none_or(|(_, b)| r.codelength_nats < b.codelength_nats) {
                        step = Some((j, r));
                    }
                }
                match step {
                    Some((j, r)) if r.codelength_nats < best.codelength_nats => {
                        current.push(j);
                        current.sort_unstable();
                        best = r.clone();
                        rows.push(r);
                    }
                    _ => break,
                }
            }
            rows
        }
    };
    let result = SelectionResult::from_scores(rows, notes)?;
    let selected = parse_subset_label(&result.winner);
    Ok(VariableSelection { selected, strategy, result })
}

fn parse_subset_label(label: &str) -> Vec<usize> {
    label
        .trim_matches(|c| c == '{' || c == '}')
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().expect("subset labels are generated internally"))
        .collect()
}

/// Markov orders `0..=max_order`, each scored by its Jeffreys-Dirichlet Bayes
/// marginal per context, under a uniform prior on orders.
pub fn markov_order_select(data: &DataSequence, max_order: usize) -> Result<SelectionResult> {
    let DataSequence::Categorical { arity, .. } = data else {
        return Err(MdlError::invalid("Markov order selection needs categorical data"));
    };
    let mut notes = Vec::new();
    if *arity < 2 {
        notes.push("alphabet has a single symbol; order 0 returned".to_string());
        let row = RankedCandidate {
            label: "order-0".into(),
            codelength_nats: 0.0,
            data_nats: 0.0,
            prior_nats: 0.0,
            dimension: 0,
            rank: 0,
        };
        return SelectionResult::from_scores(vec![row], notes);
    }
    let n = data.len().max(1) as f64;
    if max_order as f64 * (*arity as f64).ln() > n.ln() {
        notes.push(format!(
            "order {max_order} over {arity} symbols has more contexts than outcomes; high orders are unreliable"
        ));
    }
    let mut entries = Vec::new();
    for order in 0..=max_order {
        let family = ModelFamily::markov(order, *arity)?;
        let prior = PriorSpec::jeffreys(&family)?;
        entries.push((format!("order-{order}"), UniversalDistribution::bayes(family, prior)));
    }
    let mut result = select(&CandidateList::uniform(entries)?, data)?;
    result.notes.extend(notes);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ParamVector;
    use crate::universal::lnml_regression_log;

    #[test]
    fn gamma_code_examples() {
        assert!((gamma_code_length(3, 0).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert!((gamma_code_length(3, 1).unwrap() - 12f64.ln()).abs() < 1e-12);
        assert!(gamma_code_length(3, 4).is_err());
    }

    #[test]
    fn gamma_code_kraft_sum() {
        for m in 0..=12usize {
            let total: f64 =
                (0..1u32 << m).map(|mask| (-gamma_code_length(m, mask.count_ones() as usize).unwrap()).exp()).sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_candidates_tie_by_label() {
        let u = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
        let list = CandidateList::uniform(vec![("b".into(), u.clone()), ("a".into(), u)]).unwrap();
        let r = select(&list, &DataSequence::bits("0110").unwrap()).unwrap();
        assert_eq!(r.winner, "a");
        assert_eq!(r.tie_break, TieBreak::Label);
    }

    #[test]
    fn tie_prefers_smaller_dimension() {
        let big = UniversalDistribution::nml(ModelFamily::Bernoulli);
        let small = UniversalDistribution::point(ModelFamily::Bernoulli, ParamVector::bernoulli(0.5)).unwrap();
        let d = DataSequence::bits("01").unwrap();
        // NML(01) = 0.1 < 0.25, so the prior offset equalizes the totals
        let gap = big.log_joint(&d).unwrap() - small.log_joint(&d).unwrap();
        let list =
            CandidateList::new(vec![Candidate::new("a-big", big, -1.0), Candidate::new("z-small", small, -1.0 + gap)])
                .unwrap();
        let r = select(&list, &d).unwrap();
        assert_eq!(r.winner, "z-small");
        assert_eq!(r.tie_break, TieBreak::Dimension);
    }

    #[test]
    fn empty_and_duplicate_lists_rejected() {
        let d = DataSequence::bits("0").unwrap();
        assert!(select(&CandidateList::default(), &d).is_err());
        let u = UniversalDistribution::nml(ModelFamily::Bernoulli);
        assert!(CandidateList::uniform(vec![("a".into(), u.clone()), ("a".into(), u)]).is_err());
    }

    #[test]
    fn gram_route_matches_explicit_lnml() {
        let x = DMatrix::from_row_slice(
            5,
            3,
            &[1.0, 0.5, -0.2, 0.3, 1.1, 0.7, -0.4, 0.2, 1.5, 0.9, -1.0, 0.1, 0.0, 0.4, -0.6],
        );
        let y = DVector::from_column_slice(&[1.2, 0.4, -0.3, 2.0, 0.1]);
        let config = VarselConfig { sigma2: 0.8, scale: 2.5, strategy: SearchStrategy::Exhaustive };
        let cache = GramCache::new(&x, &y, &config);
        for subset in [vec![0], vec![1, 2], vec![0, 1, 2]] {
            let xs = DMatrix::from_fn(5, subset.len(), |i, j| x[(i, subset[j])]);
            let cov = DMatrix::identity(subset.len(), subset.len()) * 2.5;
            let data = DataSequence::regression(xs, y.clone()).unwrap();
            let direct = -lnml_regression_log(&data, 0.8, &cov).unwrap();
            assert!((cache.codelength(&subset).unwrap() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn period_two_sequence_needs_memory() {
        let symbols: Vec<usize> = (0..200).map(|i| i % 2).collect();
        let d = DataSequence::categorical(2, symbols).unwrap();
        let r = markov_order_select(&d, 3).unwrap();
        assert_ne!(r.winner, "order-0");
    }

    #[test]
    fn tiny_markov_selection_runs() {
        let d = DataSequence::bits("0110").unwrap();
        let r = markov_order_select(&d, 2).unwrap();
        assert_eq!(r.candidates.len(), 3);
    }
}
