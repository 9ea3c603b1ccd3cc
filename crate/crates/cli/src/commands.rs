use std::path::Path;

use mdl_core::bnscore::{
    hill_climb, total_score, BnScore, CategoricalDataset, DagStructure, EdgeMove, HillClimbConfig,
};
use mdl_core::complexity::{
    comp_asymptotic, comp_bernoulli_exact, comp_markov, comp_multinomial_exact, comp_multinomial_szpankowski,
    jeffreys_integral_multinomial, ComplexityMethod,
};
use mdl_core::safetest::{evidence, optional_continuation, type1_simulate, ContinuationMode};
use mdl_core::selection::{self, markov_order_select, CandidateList, SearchStrategy, SelectionResult, VarselConfig};
use mdl_core::switchdist::{SwitchMode, SwitchSpec};
use mdl_core::{DataSequence, ModelFamily, ParamVector, PluginEstimator, PriorSpec, UniversalDistribution};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use crate::args::*;
use crate::ingest::{Column, ColumnData, Table};
use crate::CliError;

/// Ranked rows kept in a `varsel` report.
const VARSEL_SHOWN: usize = 10;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn complexity(a: &ComplexityArgs) -> Result<Value, CliError> {
    if a.r == 0 {
        return Err(usage("--r must be at least 1"));
    }
    let value = if a.r == 1 {
        (0.0, ComplexityMethod::ExactSum, "multinomial(r=1)".to_string())
    } else if a.order == 0 {
        let v = match a.method {
            Method::Exact if a.r == 2 => comp_bernoulli_exact(a.n),
            Method::Exact => comp_multinomial_exact(a.n, a.r)?,
            Method::Szpankowski => {
                if a.n == 0 {
                    return Err(usage("the Szpankowski approximation needs --n >= 1"));
                }
                comp_multinomial_szpankowski(a.n, a.r)?
            }
            Method::Asymptotic => {
                if a.n == 0 {
                    return Err(usage("the asymptotic expansion needs --n >= 1"));
                }
                comp_asymptotic(a.r as usize - 1, a.n as f64, &jeffreys_integral_multinomial(a.r as usize)?)?
            }
        };
        let family = if a.r == 2 { "bernoulli".to_string() } else { format!("multinomial(r={})", a.r) };
        (v.nats, v.method, family)
    } else {
        let r = a.r as usize;
        let family = format!("markov(order={}, r={r})", a.order);
        match a.method {
            Method::Exact => {
                let v = comp_markov(a.order, r, a.n)?;
                (v.nats, v.method, family)
            }
            Method::Asymptotic => {
                let contexts = r.checked_pow(a.order as u32).ok_or_else(|| usage("--order is too large"))? as f64;
                let transitions = a.n.saturating_sub(a.order as u64) as f64;
                if transitions == 0.0 {
                    return Err(usage("--n must exceed --order"));
                }
                let per = comp_asymptotic(r - 1, transitions / contexts, &jeffreys_integral_multinomial(r)?)?;
                (contexts * per.nats, ComplexityMethod::Asymptotic, family)
            }
            Method::Szpankowski => return Err(usage("--method szpankowski applies to --order 0 only")),
        }
    };
    let (nats, method, family) = value;
    Ok(json!({
        "family": family,
        "n": a.n,
        "r": a.r,
        "order": a.order,
        "method": method.to_string(),
        "comp_nats": nats,
        "normalizer": nats.exp(),
    }))
}

fn categorical(column: &Column, purpose: &str) -> Result<DataSequence, CliError> {
    match &column.data {
        ColumnData::Categorical { labels, symbols } => Ok(DataSequence::categorical(labels.len(), symbols.clone())?),
        ColumnData::Real(_) => {
            Err(CliError::Ingest(format!("{purpose} needs a categorical column; {:?} is real-valued", column.name)))
        }
    }
}

fn iid_family(arity: usize) -> Result<ModelFamily, CliError> {
    Ok(if arity == 2 { ModelFamily::Bernoulli } else { ModelFamily::multinomial(arity)? })
}

fn uniform_point(arity: usize) -> Result<UniversalDistribution, CliError> {
    Ok(UniversalDistribution::point(iid_family(arity)?, uniform_params(arity))?)
}

fn uniform_params(arity: usize) -> ParamVector {
    if arity == 2 {
        ParamVector::bernoulli(0.5)
    } else {
        ParamVector::new(vec![1.0 / arity as f64; arity])
    }
}

/// `markov2` → `(2, false)`, `markov1-nml` → `(1, true)`.
fn parse_markov_token(token: &str) -> Option<(usize, bool)> {
    let rest = token.strip_prefix("markov")?;
    let (digits, nml) = match rest.strip_suffix("-nml") {
        Some(d) => (d, true),
        None => (rest, false),
    };
    digits.parse().ok().map(|k| (k, nml))
}

fn select_candidate(token: &str, arity: usize) -> Result<UniversalDistribution, CliError> {
    let iid = iid_family(arity)?;
    match token {
        "bernoulli" | "iid" => Ok(UniversalDistribution::nml(iid)),
        "iid-jeffreys" => Ok(UniversalDistribution::jeffreys(iid)?),
        "uniform" => uniform_point(arity),
        _ => match parse_markov_token(token) {
            Some((k, false)) => Ok(UniversalDistribution::jeffreys(ModelFamily::markov(k, arity)?)?),
            Some((k, true)) => Ok(UniversalDistribution::nml(ModelFamily::markov(k, arity)?)),
            None => Err(usage(format!(
                "unknown candidate {token:?}; use bernoulli, iid, iid-jeffreys, uniform, markovK or markovK-nml"
            ))),
        },
    }
}

fn selection_fields(report: &mut Map<String, Value>, result: &SelectionResult, shown: usize) {
    let rows: Vec<&_> = result.candidates.iter().take(shown).collect();
    report.insert("candidates".into(), json!(rows));
    report.insert("winner".into(), json!(result.winner));
    report.insert("tie_break".into(), json!(result.tie_break));
    report.insert("notes".into(), json!(result.notes));
}

pub fn select(a: &SelectArgs) -> Result<Value, CliError> {
    let table = Table::read(&a.input.input)?;
    let column = table.column(a.column.as_deref())?;
    let data = categorical(column, "select")?;
    let arity = data.arity().unwrap_or(2);
    if a.candidates.is_empty() {
        return Err(usage("--candidates is empty"));
    }
    let entries = a
        .candidates
        .iter()
        .map(|t| Ok((t.clone(), select_candidate(t, arity)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let list = CandidateList::uniform(entries).map_err(|e| usage(e.to_string()))?;
    let result = selection::select(&list, &data)?;
    let mut report = Map::new();
    report.insert("column".into(), json!(column.name));
    report.insert("n".into(), json!(data.len()));
    report.insert("symbols".into(), json!(column.symbol_map()));
    selection_fields(&mut report, &result, usize::MAX);
    Ok(Value::Object(report))
}

fn numeric<'a>(table: &'a Table, name: &str) -> Result<&'a [f64], CliError> {
    let column = table.column(Some(name))?;
    column.as_real().ok_or_else(|| CliError::Ingest(format!("column {name:?} is not numeric")))
}

pub fn varsel(a: &VarselArgs) -> Result<Value, CliError> {
    if !(a.sigma2 > 0.0 && a.sigma2.is_finite()) {
        return Err(usage("--sigma2 must be positive"));
    }
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(usage("--scale must be positive"));
    }
    let table = Table::read(&a.input.input)?;
    let y = numeric(&table, &a.response)?;
    let names: Vec<String> = if a.covariates.is_empty() {
        table.names().into_iter().filter(|n| *n != a.response).collect()
    } else {
        a.covariates.clone()
    };
    if names.is_empty() {
        return Err(usage("no covariate columns"));
    }
    if names.contains(&a.response) {
        return Err(usage("the response cannot also be a covariate"));
    }
    let columns = names.iter().map(|n| numeric(&table, n)).collect::<Result<Vec<_>, _>>()?;
    let x = DMatrix::from_fn(table.rows, columns.len(), |i, j| columns[j][i]);
    let y = DVector::from_column_slice(y);
    let strategy = match a.strategy {
        Strategy::Exhaustive => SearchStrategy::Exhaustive,
        Strategy::Greedy => SearchStrategy::GreedyForward,
    };
    let config = VarselConfig { sigma2: a.sigma2, scale: a.scale, strategy };
    let sel = selection::variable_select(&x, &y, &config)?;
    let mut report = Map::new();
    report.insert("response".into(), json!(a.response));
    report.insert("covariates".into(), json!(names));
    report.insert("selected".into(), json!(sel.selected.iter().map(|&j| &names[j]).collect::<Vec<_>>()));
    report.insert("selected_indices".into(), json!(sel.selected));
    report.insert("strategy".into(), json!(sel.strategy));
    report.insert("sigma2".into(), json!(a.sigma2));
    report.insert("scale".into(), json!(a.scale));
    report.insert("n".into(), json!(table.rows));
    report.insert("evaluated".into(), json!(sel.result.candidates.len()));
    selection_fields(&mut report, &sel.result, VARSEL_SHOWN);
    Ok(Value::Object(report))
}

pub fn markov(a: &MarkovArgs) -> Result<Value, CliError> {
    let table = Table::read(&a.input.input)?;
    let column = table.column(a.column.as_deref())?;
    let data = categorical(column, "markov")?;
    let result = markov_order_select(&data, a.max_order)?;
    let order: usize = result
        .winner
        .strip_prefix("order-")
        .and_then(|k| k.parse().ok())
        .ok_or_else(|| CliError::Io(format!("unexpected winner label {}", result.winner)))?;
    let mut report = Map::new();
    report.insert("column".into(), json!(column.name));
    report.insert("n".into(), json!(data.len()));
    report.insert("max_order".into(), json!(a.max_order));
    report.insert("order".into(), json!(order));
    report.insert("symbols".into(), json!(column.symbol_map()));
    selection_fields(&mut report, &result, usize::MAX);
    Ok(Value::Object(report))
}

fn describe_move(m: &EdgeMove, names: &[String]) -> String {
    let (op, from, to) = match *m {
        EdgeMove::Add { from, to } => ("add", from, to),
        EdgeMove::Delete { from, to } => ("delete", from, to),
        EdgeMove::Reverse { from, to } => ("reverse", from, to),
    };
    format!("{op} {}->{}", names[from], names[to])
}

pub fn bn(a: &BnArgs, seed: u64) -> Result<Value, CliError> {
    let score = match a.score {
        ScoreKind::Fnml => BnScore::Fnml,
        ScoreKind::Qnml => BnScore::Qnml,
        ScoreKind::Bdeu => {
            if !(a.alpha > 0.0 && a.alpha.is_finite()) {
                return Err(usage("--alpha must be positive"));
            }
            BnScore::Bdeu { alpha: a.alpha }
        }
    };
    let table = Table::read(&a.input.input)?;
    let mut arities = Vec::new();
    let mut columns = Vec::new();
    for c in &table.columns {
        let ColumnData::Categorical { labels, symbols } = &c.data else {
            return Err(CliError::Ingest(format!("bn needs categorical columns; {:?} is real-valued", c.name)));
        };
        arities.push(labels.len());
        columns.push(symbols.clone());
    }
    let names = table.names();
    let data = CategoricalDataset::new(names.clone(), arities, columns)?;
    let config = HillClimbConfig { score, max_parents: a.max_parents, max_iters: a.max_iters, seed };
    let result = hill_climb(&data, &config)?;
    // the library scores are log probabilities; reports carry code lengths
    let mut adjacency = Map::new();
    let mut locals = Map::new();
    for (i, name) in names.iter().enumerate() {
        let parents: Vec<&String> = result.dag.parents(i).iter().map(|&p| &names[p]).collect();
        adjacency.insert(name.clone(), json!(parents));
        locals.insert(name.clone(), json!(-result.locals[i]));
    }
    let trace: Vec<Value> = result
        .trace
        .iter()
        .map(|t| {
            json!({
                "iteration": t.iteration,
                "move": describe_move(&t.edge_move, &names),
                "gain_nats": t.delta,
                "codelength_nats": -t.score,
            })
        })
        .collect();
    let mut report = Map::new();
    report.insert("score".into(), json!(score.to_string()));
    report.insert("nodes".into(), json!(names));
    report.insert("adjacency".into(), Value::Object(adjacency));
    report.insert("locals_nats".into(), Value::Object(locals));
    report.insert("total_nats".into(), json!(-result.score));
    report.insert("iterations".into(), json!(result.trace.len()));
    report.insert("converged".into(), json!(result.converged));
    report.insert("cache_hits".into(), json!(result.cache_hits));
    report.insert("cache_misses".into(), json!(result.cache_misses));
    report.insert("seed".into(), json!(result.seed));
    report.insert("trace".into(), json!(trace));
    report.insert("symbols".into(), json!(table.columns.iter().filter_map(Column::symbol_map).collect::<Vec<_>>()));
    if names.len() == 2 {
        let forward = total_score(&data, &DagStructure::from_edges(2, &[(0, 1)])?, score)?;
        let backward = total_score(&data, &DagStructure::from_edges(2, &[(1, 0)])?, score)?;
        let equal = (forward - backward).abs() <= 1e-9 * forward.abs().max(1.0);
        report.insert(
            "orientations".into(),
            json!({
                "forward": format!("{}->{}", names[0], names[1]),
                "backward": format!("{}->{}", names[1], names[0]),
                "forward_nats": -forward,
                "backward_nats": -backward,
                "equal": equal,
            }),
        );
    }
    Ok(Value::Object(report))
}

fn parse_point(spec: &str, arity: usize) -> Result<ParamVector, CliError> {
    let values = spec
        .split('/')
        .map(|v| v.trim().parse::<f64>().map_err(|_| usage(format!("bad probability {v:?} in point:{spec}"))))
        .collect::<Result<Vec<_>, _>>()?;
    match (arity, values.len()) {
        (2, 1) => Ok(ParamVector::bernoulli(values[0])),
        (r, k) if r == k => Ok(ParamVector::new(values)),
        _ => Err(usage(format!("point:{spec} does not give {arity} probabilities"))),
    }
}

fn categorical_predictor(token: &str, arity: usize) -> Result<UniversalDistribution, CliError> {
    let iid = iid_family(arity)?;
    match token {
        "jeffreys" => Ok(UniversalDistribution::jeffreys(iid)?),
        "laplace" => Ok(UniversalDistribution::plugin(iid, PluginEstimator::SmoothedMl { a: 1.0, b: arity as f64 })),
        "nml" => Ok(UniversalDistribution::nml(iid)),
        "markov1" => Ok(UniversalDistribution::jeffreys(ModelFamily::markov(1, arity)?)?),
        "uniform" => uniform_point(arity),
        "switch" => Ok(UniversalDistribution::switch(SwitchSpec::new(
            uniform_point(arity)?,
            UniversalDistribution::jeffreys(iid)?,
            SwitchMode::Renormalize,
        ))),
        t => match t.strip_prefix("point:") {
            Some(spec) => Ok(UniversalDistribution::point(iid, parse_point(spec, arity)?)?),
            None => Err(usage(format!(
                "unknown categorical predictor {t:?}; use jeffreys, laplace, nml, markov1, uniform, switch or point:p"
            ))),
        },
    }
}

fn real_predictor(token: &str, sigma2: f64) -> Result<UniversalDistribution, CliError> {
    let family = ModelFamily::gaussian(sigma2)?;
    match token {
        "bayes" => Ok(UniversalDistribution::bayes(family, PriorSpec::Normal { mean: 0.0, variance: sigma2 })),
        "plugin" => Ok(UniversalDistribution::plugin(family, PluginEstimator::Ml)),
        "conditional" => Ok(UniversalDistribution::BayesConditional { family, startup: 1 }),
        t => match t.strip_prefix("point:").map(str::parse::<f64>) {
            Some(Ok(mu)) => Ok(UniversalDistribution::point(family, ParamVector::new(vec![mu]))?),
            _ => Err(usage(format!("unknown real predictor {t:?}; use bayes, plugin, conditional or point:mu"))),
        },
    }
}

pub fn preq(a: &PreqArgs) -> Result<Value, CliError> {
    if !(a.sigma2 > 0.0 && a.sigma2.is_finite()) {
        return Err(usage("--sigma2 must be positive"));
    }
    let table = Table::read(&a.input.input)?;
    let column = table.column(a.column.as_deref())?;
    let real = a.real || matches!(column.data, ColumnData::Real(_));
    let (data, family, kind, defaults) = if real {
        let values =
            column.as_real().ok_or_else(|| CliError::Ingest(format!("column {:?} is not numeric", column.name)))?;
        (DataSequence::real(values.to_vec())?, ModelFamily::gaussian(a.sigma2)?, "real", "bayes,plugin")
    } else {
        let data = categorical(column, "preq")?;
        let family = iid_family(data.arity().unwrap_or(2))?;
        (data, family, "categorical", "jeffreys,laplace,nml")
    };
    let tokens: Vec<String> =
        if a.predictors.is_empty() { defaults.split(',').map(str::to_string).collect() } else { a.predictors.clone() };
    let arity = data.arity().unwrap_or(2);
    let mut curves: Vec<Vec<f64>> = Vec::new();
    let mut rows = Vec::new();
    let ml = family.log_likelihood(&family.mle(&data)?, &data)?;
    for token in &tokens {
        let u = if real { real_predictor(token, a.sigma2)? } else { categorical_predictor(token, arity)? };
        let mut total = 0.0;
        let cumulative: Vec<f64> = u
            .log_predictives(&data)?
            .into_iter()
            .map(|lp| {
                total -= lp;
                total
            })
            .collect();
        rows.push(json!({"name": token, "codelength_nats": total, "regret_nats": total + ml}));
        curves.push(cumulative);
    }
    let mut report = Map::new();
    report.insert("column".into(), json!(column.name));
    report.insert("kind".into(), json!(kind));
    report.insert("n".into(), json!(data.len()));
    report.insert("predictors".into(), json!(rows));
    report.insert("hindsight_ml_nats".into(), json!(-ml));
    if !real {
        report.insert("symbols".into(), json!(column.symbol_map()));
    }
    if let Some(path) = &a.curve {
        write_curve(path, &tokens, &curves)?;
        report.insert("curve".into(), json!(path.display().to_string()));
    }
    Ok(Value::Object(report))
}

/// One row per step: `step` then the cumulative log loss of each predictor.
fn write_curve(path: &Path, names: &[String], curves: &[Vec<f64>]) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["step".to_string()];
    header.extend(names.iter().map(|n| format!("{n}_cumulative_nats")));
    w.write_record(&header).map_err(io)?;
    let steps = curves.first().map_or(0, Vec::len);
    for i in 0..steps {
        let mut record = vec![(i + 1).to_string()];
        record.extend(curves.iter().map(|c| c[i].to_string()));
        w.write_record(&record).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn parse_null(spec: &str) -> Result<ModelFamily, CliError> {
    let (name, theta) = spec.split_once(':').unwrap_or((spec, "0.5"));
    if name != "bernoulli" {
        return Err(usage(format!("unsupported null {spec:?}; only bernoulli:theta is a simple null here")));
    }
    let theta: f64 = theta.parse().map_err(|_| usage(format!("bad Bernoulli parameter in {spec:?}")))?;
    ModelFamily::point(ModelFamily::Bernoulli, ParamVector::bernoulli(theta)).map_err(|e| usage(e.to_string()))
}

pub fn test(a: &TestArgs, seed: u64) -> Result<Value, CliError> {
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(usage("--alpha must lie in [0, 1]"));
    }
    let p0 = parse_null(&a.null)?;
    let (u1, alt) = match a.alt {
        Alternative::Jeffreys => (UniversalDistribution::jeffreys(ModelFamily::Bernoulli)?, "jeffreys"),
        Alternative::Nml => (UniversalDistribution::nml(ModelFamily::Bernoulli), "nml"),
    };
    if let Some(trials) = a.simulate {
        if trials == 0 {
            return Err(usage("--simulate needs at least one trial"));
        }
        let r = type1_simulate(&p0, &u1, a.alpha, a.n, trials, seed)?;
        return Ok(json!({
            "null": a.null,
            "alt": alt,
            "alpha": r.alpha,
            "n": r.n,
            "trials": r.trials,
            "rejections": r.rejections,
            "rate": r.rate,
            "bound": r.bound,
            "within_bound": r.within_bound,
            "seed": r.seed,
        }));
    }
    let path = a.input.as_ref().ok_or_else(|| usage("give --input (or --data) or --simulate"))?;
    let table = Table::read(path)?;
    let column = table.column(a.column.as_deref())?;
    let data = categorical(column, "test")?;
    if data.arity() != Some(2) {
        return Err(CliError::Ingest(format!("test needs a binary column; {:?} has more symbols", column.name)));
    }
    let mut report = Map::new();
    let r = match a.batch_size {
        None => evidence(&p0, &u1, &data)?,
        Some(0) => return Err(usage("--batch-size must be positive")),
        Some(size) => {
            let batches: Vec<DataSequence> =
                (0..data.len()).step_by(size).map(|s| data.suffix(s).prefix(size.min(data.len() - s))).collect();
            let mode = match a.continuation {
                Continuation::Restart => ContinuationMode::Restart,
                Continuation::Condition => ContinuationMode::Condition,
            };
            let c = optional_continuation(&p0, &u1, &batches, mode)?;
            report.insert("continuation".into(), json!(mode));
            report.insert("per_batch_D_nats".into(), json!(c.per_batch.iter().map(|b| b.d_nats).collect::<Vec<_>>()));
            c.combined
        }
    };
    report.insert("null".into(), json!(a.null));
    report.insert("alt".into(), json!(alt));
    report.insert("alpha".into(), json!(a.alpha));
    report.insert("n".into(), json!(r.n));
    report.insert("D_nats".into(), json!(r.d_nats));
    report.insert("ratio".into(), json!(r.ratio));
    report.insert("p_conservative".into(), json!(r.p_conservative));
    report.insert("decision".into(), json!(if r.rejects(a.alpha) { "reject" } else { "retain" }));
    report.insert("batches".into(), json!(r.batches));
    report.insert("symbols".into(), json!(column.symbol_map()));
    Ok(Value::Object(report))
}
