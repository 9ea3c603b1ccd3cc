//! Browser bindings for three small demos: complexity curves, regret curves
//! of sequential predictors, and the horizon dependence of NML.
//!
//! Each export returns a JSON string; the page parses it and draws it.

use mdl_core::complexity::{
    comp_asymptotic, comp_bernoulli_exact, comp_multinomial_exact, comp_multinomial_szpankowski,
    jeffreys_integral_multinomial,
};
use mdl_core::switchdist::{SwitchMode, SwitchSpec};
use mdl_core::{DataSequence, MdlError, ModelFamily, ParamVector, PluginEstimator, UniversalDistribution};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Points per complexity curve.
const CURVE_POINTS: u32 = 120;
const MAX_N: u32 = 5000;
const MAX_SEQUENCE: usize = 2000;

fn js(result: Result<String, MdlError>) -> Result<String, JsError> {
    result.map_err(|e| JsError::new(&e.to_string()))
}

/// Sample sizes `1..=n_max`, thinned to about [`CURVE_POINTS`] values.
fn grid(n_max: u32) -> Vec<u64> {
    let step = n_max.div_ceil(CURVE_POINTS).max(1);
    let mut ns: Vec<u64> = (1..=n_max).step_by(step as usize).map(u64::from).collect();
    if ns.last() != Some(&u64::from(n_max)) {
        ns.push(u64::from(n_max));
    }
    ns
}

pub fn complexity_curves_json(r: u32, n_max: u32) -> Result<String, MdlError> {
    if !(2..=1000).contains(&r) {
        return Err(MdlError::InvalidInput("alphabet size must lie in 2..=1000".into()));
    }
    if !(1..=MAX_N).contains(&n_max) {
        return Err(MdlError::InvalidInput(format!("n must lie in 1..={MAX_N}")));
    }
    let ns = grid(n_max);
    let fisher = jeffreys_integral_multinomial(r as usize)?;
    let mut exact = Vec::with_capacity(ns.len());
    let mut szpankowski = Vec::with_capacity(ns.len());
    let mut asymptotic = Vec::with_capacity(ns.len());
    for &n in &ns {
        exact.push(if r == 2 { comp_bernoulli_exact(n).nats } else { comp_multinomial_exact(n, u64::from(r))?.nats });
        szpankowski.push(comp_multinomial_szpankowski(n, u64::from(r))?.nats);
        asymptotic.push(comp_asymptotic(r as usize - 1, n as f64, &fisher)?.nats);
    }
    Ok(json!({"n": ns, "exact": exact, "szpankowski": szpankowski, "asymptotic": asymptotic}).to_string())
}

/// Parametric complexity against `n` for an `r`-symbol alphabet, by the exact
/// sum, the Szpankowski approximation and the `k/2 log n` expansion.
#[wasm_bindgen]
pub fn complexity_curves(r: u32, n_max: u32) -> Result<String, JsError> {
    js(complexity_curves_json(r, n_max))
}

pub fn sample_bits_string(theta: f64, n: usize, seed: u64) -> Result<String, MdlError> {
    if n > MAX_SEQUENCE {
        return Err(MdlError::InvalidInput(format!("at most {MAX_SEQUENCE} outcomes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = ModelFamily::Bernoulli.sample(&ParamVector::bernoulli(theta), n, &mut rng)?;
    Ok(data.symbols().unwrap_or_default().iter().map(|&s| if s == 1 { '1' } else { '0' }).collect())
}

/// `n` seeded Bernoulli(`theta`) outcomes as a string of 0s and 1s.
#[wasm_bindgen]
pub fn sample_bits(theta: f64, n: usize, seed: u64) -> Result<String, JsError> {
    js(sample_bits_string(theta, n, seed))
}

fn parse_bits(bits: &str) -> Result<DataSequence, MdlError> {
    let cleaned: String = bits.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(MdlError::InvalidInput("enter at least one 0 or 1".into()));
    }
    if cleaned.len() > MAX_SEQUENCE {
        return Err(MdlError::InvalidInput(format!("at most {MAX_SEQUENCE} outcomes")));
    }
    DataSequence::bits(&cleaned)
}

fn predictors() -> Result<Vec<(&'static str, UniversalDistribution)>, MdlError> {
    let fair = UniversalDistribution::point(ModelFamily::Bernoulli, ParamVector::bernoulli(0.5))?;
    let jeffreys = UniversalDistribution::jeffreys(ModelFamily::Bernoulli)?;
    Ok(vec![
        ("jeffreys", jeffreys.clone()),
        (
            "laplace",
            UniversalDistribution::plugin(ModelFamily::Bernoulli, PluginEstimator::SmoothedMl { a: 1.0, b: 2.0 }),
        ),
        ("nml", UniversalDistribution::nml(ModelFamily::Bernoulli)),
        ("switch", UniversalDistribution::switch(SwitchSpec::new(fair.clone(), jeffreys, SwitchMode::Renormalize))),
        ("fair coin", fair),
    ])
}

/// `−log p_θ̂(z^k)` for every prefix, with `θ̂` refitted on each prefix.
fn hindsight_losses(data: &DataSequence) -> Vec<f64> {
    let symbols = data.symbols().unwrap_or_default();
    let mut ones = 0usize;
    let xlogx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    symbols
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            ones += s;
            let k = (i + 1) as f64;
            let (a, b) = (ones as f64, k - ones as f64);
            k * k.ln() - xlogx(a) - xlogx(b)
        })
        .collect()
}

pub fn regret_curves_json(bits: &str) -> Result<String, MdlError> {
    let data = parse_bits(bits)?;
    let ml = hindsight_losses(&data);
    let mut series = serde_json::Map::new();
    for (name, u) in predictors()? {
        let marginals = u.log_prefix_marginals(&data)?;
        let regret: Vec<f64> = marginals[1..].iter().zip(&ml).map(|(lp, best)| -lp - best).collect();
        series.insert(name.to_string(), json!(regret));
    }
    let half_log: Vec<f64> = (1..=data.len()).map(|k| 0.5 * (k as f64).ln()).collect();
    Ok(json!({"n": data.len(), "regret": series, "half_log_n": half_log}).to_string())
}

/// Regret after each prefix for several predictors of a binary sequence.
/// NML is fixed to the full length of the sequence.
#[wasm_bindgen]
pub fn regret_curves(bits: &str) -> Result<String, JsError> {
    js(regret_curves_json(bits))
}

pub fn horizon_table_json(prefix: &str, extra: usize) -> Result<String, MdlError> {
    let data = parse_bits(prefix)?;
    if data.len() > 20 || extra > 20 {
        return Err(MdlError::InvalidInput("keep the prefix and the extra horizon within 20".into()));
    }
    let nml = UniversalDistribution::nml(ModelFamily::Bernoulli);
    let bayes = UniversalDistribution::jeffreys(ModelFamily::Bernoulli)?;
    let bayes_p = bayes.log_joint(&data)?.exp();
    let rows = (data.len()..=data.len() + extra)
        .map(|horizon| {
            Ok(json!({
                "horizon": horizon,
                "nml": nml.log_prefix_marginal(&data, horizon)?.exp(),
                "bayes": bayes_p,
            }))
        })
        .collect::<Result<Vec<_>, MdlError>>()?;
    Ok(json!({"prefix": prefix.trim(), "rows": rows}).to_string())
}

/// Probability NML assigns to a fixed prefix when the sequence will have
/// length `horizon`, for growing horizons, next to the Jeffreys-Bayes value.
#[wasm_bindgen]
pub fn horizon_table(prefix: &str, extra: usize) -> Result<String, JsError> {
    js(horizon_table_json(prefix, extra))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn complexity_curves_start_at_one_and_agree() {
        let v = parse(&complexity_curves_json(2, 1000).unwrap());
        assert_eq!(v["n"][0], 1);
        assert_eq!(v["n"].as_array().unwrap().last().unwrap(), 1000);
        // one outcome: both ML fits are perfect, so the normalizer is 2
        assert!((v["exact"][0].as_f64().unwrap() - 2f64.ln()).abs() < 1e-12);
        let last = |k: &str| *v[k].as_array().unwrap().last().unwrap().as_f64().as_ref().unwrap();
        assert!((last("exact") - last("asymptotic")).abs() < 0.05);
        assert!(complexity_curves_json(1, 10).is_err());
        assert!(complexity_curves_json(2, 0).is_err());
    }

    #[test]
    fn regret_curves_are_aligned() {
        let v = parse(&regret_curves_json("0010 1101 11").unwrap());
        assert_eq!(v["n"], 10);
        for (_, series) in v["regret"].as_object().unwrap() {
            assert_eq!(series.as_array().unwrap().len(), 10);
        }
        // NML regret at the horizon is its complexity
        let nml = v["regret"]["nml"][9].as_f64().unwrap();
        assert!((nml - comp_bernoulli_exact(10).nats).abs() < 1e-9);
        assert!(regret_curves_json("01x").is_err());
        assert!(regret_curves_json("").is_err());
    }

    #[test]
    fn horizon_table_reproduces_the_two_symbol_example() {
        let v = parse(&horizon_table_json("00", 1).unwrap());
        let rows = v["rows"].as_array().unwrap();
        assert!((rows[0]["nml"].as_f64().unwrap() - 0.4).abs() < 1e-12);
        assert!((rows[1]["nml"].as_f64().unwrap() - 31.0 / 78.0).abs() < 1e-12);
        assert_eq!(rows[0]["bayes"], rows[1]["bayes"]);
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_bits_string(0.3, 50, 7).unwrap();
        assert_eq!(a, sample_bits_string(0.3, 50, 7).unwrap());
        assert_eq!(a.len(), 50);
        assert!(a.chars().all(|c| c == '0' || c == '1'));
    }
}
