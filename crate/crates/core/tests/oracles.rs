//! Cross-checks against independently computed reference values.

mod common;

use common::{mvn_log_density, tanh_sinh};
use mdl_core::complexity::{
    comp_asymptotic, comp_bernoulli_exact, comp_multinomial_exact, comp_multinomial_szpankowski,
    jeffreys_integral_multinomial,
};
use mdl_core::universal::{lnml_regression_log, regret};
use mdl_core::{DataSequence, ModelFamily, UniversalDistribution};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use std::f64::consts::PI;

// Reference gaps from 50-digit arithmetic (direct binomial sums plus the
// multinomial recurrence), recorded before asserting.
const SZPANKOWSKI_GAP: [(u64, u64, f64); 3] =
    [(100, 50, 0.003681418691), (1000, 100, 0.001825639714), (100, 2, 0.08612778575)];
const BERNOULLI_EXPANSION_GAP: [(u64, f64); 3] =
    [(100, 0.05259469259), (1000, 0.01676219885), (10_000, 0.005313398993)];

#[test]
fn szpankowski_gap_matches_reference() {
    for (n, r, gap) in SZPANKOWSKI_GAP {
        let approx = comp_multinomial_szpankowski(n, r).unwrap().nats;
        let exact = comp_multinomial_exact(n, r).unwrap().nats;
        assert!(((approx - exact) - gap).abs() < 1e-8, "({n},{r}): {}", approx - exact);
    }
}

#[test]
fn bernoulli_expansion_gap_matches_reference() {
    let fisher = jeffreys_integral_multinomial(2).unwrap();
    for (n, gap) in BERNOULLI_EXPANSION_GAP {
        let exact = comp_bernoulli_exact(n).nats;
        let asym = comp_asymptotic(1, n as f64, &fisher).unwrap().nats;
        assert!(((exact - asym) - gap).abs() < 1e-8, "n={n}: {}", exact - asym);
    }
}

#[test]
fn trinomial_expansion_gap() {
    let fisher = jeffreys_integral_multinomial(3).unwrap();
    let exact = comp_multinomial_exact(10_000, 3).unwrap().nats;
    let asym = comp_asymptotic(2, 1e4, &fisher).unwrap().nats;
    assert!(((exact - asym) - 0.01252119383).abs() < 1e-8);
}

#[test]
fn small_bernoulli_normalizer() {
    // 2 + 2·4·(1/4)(3/4)^3 + 6/16
    let direct: f64 = 2.0 + 2.0 * 4.0 * 0.25 * 0.75f64.powi(3) + 6.0 / 16.0;
    assert!((comp_bernoulli_exact(4).nats - direct.ln()).abs() < 1e-12);
    assert!((comp_bernoulli_exact(4).nats - 1.168993085).abs() < 1e-9);
}

#[test]
fn jeffreys_integral_by_quadrature() {
    // symmetric about ½; integrating (0, ½) keeps the singular endpoint at 0
    let q = 2.0 * tanh_sinh(|t| 1.0 / (t * (1.0 - t)).sqrt(), 0.0, 0.5);
    assert!((q - PI).abs() < 1e-8, "{q}");
    let closed = jeffreys_integral_multinomial(2).unwrap();
    assert!((closed.value - q).abs() < 1e-8);
}

#[test]
fn jeffreys_integral_by_importance_sampling() {
    // q = Dir(0.75, …); weight ∝ Π θ^{-1/4} has finite variance
    let beta = 0.75;
    let gamma = Gamma::new(beta, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for r in [3usize, 4] {
        let draws = 200_000;
        let log_norm =
            r as f64 * statrs::function::gamma::ln_gamma(beta) - statrs::function::gamma::ln_gamma(r as f64 * beta);
        let mut sum = 0.0;
        for _ in 0..draws {
            let g: Vec<f64> = (0..r).map(|_| gamma.sample(&mut rng)).collect();
            let s: f64 = g.iter().sum();
            let log_w: f64 = g.iter().map(|x| (0.5 - beta) * (x / s).ln()).sum::<f64>() + log_norm;
            sum += log_w.exp();
        }
        let estimate = sum / draws as f64;
        let closed = jeffreys_integral_multinomial(r).unwrap().value;
        assert!((estimate / closed - 1.0).abs() < 0.01, "r={r}: {estimate} vs {closed}");
    }
}

#[test]
fn lnml_regression_equals_gaussian_marginal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let normal = Normal::new(0.0, 1.0).unwrap();
    for (n, m) in [(6usize, 2usize), (15, 3), (4, 4)] {
        let x = DMatrix::from_fn(n, m, |_, _| normal.sample(&mut rng));
        let y = DVector::from_fn(n, |_, _| normal.sample(&mut rng));
        let a = DMatrix::from_fn(m, m, |_, _| normal.sample(&mut rng));
        let sigma_lk = &a * a.transpose() + DMatrix::identity(m, m);
        let sigma2 = 0.7;
        let marginal_cov = (DMatrix::identity(n, n) + &x * &sigma_lk * x.transpose()) * sigma2;
        let oracle = mvn_log_density(&y, &marginal_cov);
        let data = DataSequence::regression(x, y).unwrap();
        let v = lnml_regression_log(&data, sigma2, &sigma_lk).unwrap();
        assert!((v - oracle).abs() < 1e-9, "n={n} m={m}: {v} vs {oracle}");
    }
}

#[test]
fn jeffreys_regret_near_expansion() {
    let mut symbols = vec![0usize; 50];
    symbols.extend(std::iter::repeat_n(1, 50));
    let data = DataSequence::categorical(2, symbols).unwrap();
    let u = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
    let r = regret(&u, &ModelFamily::Bernoulli, &data).unwrap();
    assert!((r - 2.5309).abs() < 1e-4, "{r}");
}
