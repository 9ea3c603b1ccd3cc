mod common;

use common::{brute_prefix, sequences};
use mdl_core::bnscore::{total_score, BnScore, CategoricalDataset, DagStructure, LocalScoreCache};
use mdl_core::complexity::{comp_bernoulli_exact, comp_multinomial_exact};
use mdl_core::math::log_sum_exp;
use mdl_core::safetest::{combine, evidence, EvidenceReport};
use mdl_core::selection::{gamma_code_length, select, variable_select, Candidate, CandidateList, VarselConfig};
use mdl_core::switchdist::{switch_regret_bound_check, SwitchMode, SwitchSpec};
use mdl_core::universal::{lnml_regression_log, regret};
use mdl_core::{
    DataSequence, LuckinessFunction, ModelFamily, ParamVector, PluginEstimator, PriorSpec, UniversalDistribution,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn bits(max: usize) -> impl Strategy<Value = DataSequence> {
    prop::collection::vec(0usize..2, 1..=max).prop_map(|s| DataSequence::categorical(2, s).unwrap())
}

fn symbols(arity: usize, max: usize) -> impl Strategy<Value = DataSequence> {
    prop::collection::vec(0usize..arity, 1..=max).prop_map(move |s| DataSequence::categorical(arity, s).unwrap())
}

fn reals(max: usize) -> impl Strategy<Value = DataSequence> {
    prop::collection::vec(-3.0f64..3.0, 1..=max).prop_map(|v| DataSequence::real(v).unwrap())
}

fn chain_gap(u: &UniversalDistribution, data: &DataSequence) -> f64 {
    let steps: f64 = u.log_predictives(data).unwrap().iter().sum();
    (steps - u.log_joint(data).unwrap()).abs()
}

fn fair_point() -> UniversalDistribution {
    UniversalDistribution::point(ModelFamily::Bernoulli, ParamVector::bernoulli(0.5)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn chain_rule_conjugate_bayes(d in bits(40), a in 0.1f64..3.0, b in 0.1f64..3.0) {
        let u = UniversalDistribution::bayes(ModelFamily::Bernoulli, PriorSpec::Beta { a, b });
        prop_assert!(chain_gap(&u, &d) < 1e-9);
    }

    #[test]
    fn chain_rule_dirichlet_and_markov(d in symbols(3, 40)) {
        let u = UniversalDistribution::bayes(ModelFamily::multinomial(3).unwrap(), PriorSpec::Dirichlet(vec![0.4, 1.0, 2.5]));
        prop_assert!(chain_gap(&u, &d) < 1e-9);
        let m = UniversalDistribution::jeffreys(ModelFamily::markov(2, 3).unwrap()).unwrap();
        prop_assert!(chain_gap(&m, &d) < 1e-9);
    }

    #[test]
    fn chain_rule_gaussian_kinds(d in reals(30)) {
        let fam = ModelFamily::gaussian(0.8).unwrap();
        let bayes = UniversalDistribution::bayes(fam.clone(), PriorSpec::Normal { mean: 0.5, variance: 2.0 });
        prop_assert!(chain_gap(&bayes, &d) < 1e-9);
        let plug = UniversalDistribution::plugin(fam.clone(), PluginEstimator::Ml);
        prop_assert!(chain_gap(&plug, &d) < 1e-9);
        let cond = UniversalDistribution::BayesConditional { family: fam.clone(), startup: 1 };
        prop_assert!(chain_gap(&cond, &d) < 1e-9);
        let lucky = UniversalDistribution::Nml { family: fam, luckiness: LuckinessFunction::isotropic(1, 1.5, 0.8) };
        prop_assert!(chain_gap(&lucky, &d) < 1e-9);
    }

    #[test]
    fn chain_rule_horizon_dependent_against_enumeration(d in bits(8)) {
        let grid: Vec<_> = [0.2, 0.5, 0.7].iter().map(|&t| ParamVector::bernoulli(t)).collect();
        let kinds = [
            UniversalDistribution::nml(ModelFamily::Bernoulli),
            UniversalDistribution::nml(ModelFamily::markov(1, 2).unwrap()),
            UniversalDistribution::two_part(ModelFamily::Bernoulli, grid, vec![0.3, 0.3, 0.4]),
            UniversalDistribution::switch(SwitchSpec::new(
                fair_point(),
                UniversalDistribution::nml(ModelFamily::Bernoulli),
                SwitchMode::Renormalize,
            )),
        ];
        let n = d.len();
        for u in &kinds {
            let steps = u.log_predictives(&d).unwrap();
            prop_assert!((steps.iter().sum::<f64>() - u.log_joint(&d).unwrap()).abs() < 1e-9);
            // conditionals from listed continuations
            let mut prev = 0.0;
            for k in 1..=n {
                let cur = brute_prefix(u, &d.prefix(k), n);
                prop_assert!((steps[k - 1] - (cur - prev)).abs() < 1e-9);
                prev = cur;
            }
        }
    }

    #[test]
    fn bayes_is_horizon_free(d in bits(6), extra in 0usize..4) {
        let u = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
        let horizon = d.len() + extra;
        prop_assert!((brute_prefix(&u, &d, horizon) - u.log_joint(&d).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn bayes_regret_nonnegative(d in symbols(3, 50)) {
        let fam = ModelFamily::multinomial(3).unwrap();
        let u = UniversalDistribution::jeffreys(fam.clone()).unwrap();
        prop_assert!(regret(&u, &fam, &d).unwrap() >= -1e-12);
    }

    #[test]
    fn nml_regret_is_constant(d in symbols(3, 30)) {
        let fam = ModelFamily::multinomial(3).unwrap();
        let u = UniversalDistribution::nml(fam.clone());
        let comp = comp_multinomial_exact(d.len() as u64, 3).unwrap().nats;
        prop_assert!((regret(&u, &fam, &d).unwrap() - comp).abs() < 1e-9);
    }

    #[test]
    fn complexity_monotone(n in 1u64..400, r in 2u64..20) {
        let a = comp_multinomial_exact(n, r).unwrap().nats;
        prop_assert!(comp_multinomial_exact(n + 1, r).unwrap().nats > a);
        prop_assert!(comp_multinomial_exact(n, r + 1).unwrap().nats > a);
    }

    #[test]
    fn selection_ignores_prior_shift(d in bits(30), shift in 0.0f64..20.0) {
        let make = |offset: f64| {
            CandidateList::new(vec![
                Candidate::new("fair", fair_point(), -0.7 - offset),
                Candidate::new("nml", UniversalDistribution::nml(ModelFamily::Bernoulli), -0.7 - offset),
                Candidate::new("markov", UniversalDistribution::jeffreys(ModelFamily::markov(1, 2).unwrap()).unwrap(), -1.2 - offset),
            ]).unwrap()
        };
        prop_assert_eq!(select(&make(0.0), &d).unwrap().winner, select(&make(shift), &d).unwrap().winner);
    }

    #[test]
    fn switch_bound_random(d in bits(60)) {
        let spec = SwitchSpec::new(fair_point(), UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap(), SwitchMode::Renormalize);
        let report = switch_regret_bound_check(&spec, &d).unwrap();
        prop_assert!(report.holds, "{:?}", report);
        // never much worse than ū1 alone
        let u1 = spec.u1.log_joint(&d).unwrap();
        prop_assert!(report.switch_codelength <= -u1 - spec.log_prior(1, d.len()) + 1e-9);
    }

    #[test]
    fn sub_distribution_switch_never_far_from_u0(d in bits(40)) {
        let spec = SwitchSpec::new(fair_point(), UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap(), SwitchMode::SubDistribution);
        let n = d.len();
        let v = spec.u0.log_joint(&d).unwrap();
        let sw = UniversalDistribution::switch(spec.clone()).log_joint(&d).unwrap();
        prop_assert!(-sw <= -v - spec.log_prior(n + 1, n) + 1e-9);
    }

    #[test]
    fn evidence_ratio_identity(d in bits(40)) {
        let p0 = ModelFamily::point(ModelFamily::Bernoulli, ParamVector::bernoulli(0.5)).unwrap();
        let u1 = UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap();
        let r = evidence(&p0, &u1, &d).unwrap();
        let lr = u1.log_joint(&d).unwrap() - d.len() as f64 * 0.5f64.ln();
        prop_assert!(((-r.d_nats).exp() - lr.exp()).abs() <= 1e-12 * lr.exp().max(1.0));
        prop_assert!(r.p_conservative > 0.0 && r.p_conservative <= 1.0);
    }

    #[test]
    fn combine_associative_commutative(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let (ra, rb, rc) = (EvidenceReport::from_d(a, 1), EvidenceReport::from_d(b, 1), EvidenceReport::from_d(c, 1));
        let left = combine(&[combine(&[ra.clone(), rb.clone()]), rc.clone()]);
        let right = combine(&[ra.clone(), combine(&[rb.clone(), rc.clone()])]);
        let swapped = combine(&[rc, rb, ra]);
        prop_assert!((left.ratio - right.ratio).abs() <= 1e-12 * left.ratio);
        prop_assert!((left.ratio - swapped.ratio).abs() <= 1e-12 * left.ratio);
    }

    #[test]
    fn bn_decomposable_and_cache_transparent(cols in prop::collection::vec(prop::collection::vec(0usize..3, 30), 3)) {
        let data = CategoricalDataset::from_columns(cols).unwrap();
        let dag = DagStructure::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        for score in [BnScore::Fnml, BnScore::Qnml, BnScore::Bdeu { alpha: 1.0 }] {
            let total = total_score(&data, &dag, score).unwrap();
            let cache = LocalScoreCache::new(score);
            let cached = cache.total(&data, &dag).unwrap();
            let again = cache.total(&data, &dag).unwrap();
            prop_assert!((total - cached).abs() < 1e-12);
            prop_assert_eq!(cached, again);
        }
    }

    #[test]
    fn likelihood_equivalence(x in prop::collection::vec(0usize..2, 25), y in prop::collection::vec(0usize..3, 25)) {
        let data = CategoricalDataset::from_columns(vec![x, y]).unwrap();
        let xy = DagStructure::from_edges(2, &[(0, 1)]).unwrap();
        let yx = DagStructure::from_edges(2, &[(1, 0)]).unwrap();
        for score in [BnScore::Qnml, BnScore::Bdeu { alpha: 2.5 }] {
            let a = total_score(&data, &xy, score).unwrap();
            let b = total_score(&data, &yx, score).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn normalization_by_enumeration() {
    let grid: Vec<_> = [0.1, 0.5, 0.8].iter().map(|&t| ParamVector::bernoulli(t)).collect();
    let kinds = [
        UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap(),
        UniversalDistribution::nml(ModelFamily::Bernoulli),
        UniversalDistribution::nml(ModelFamily::markov(1, 2).unwrap()),
        UniversalDistribution::plugin(ModelFamily::Bernoulli, PluginEstimator::SmoothedMl { a: 1.0, b: 2.0 }),
        UniversalDistribution::switch(SwitchSpec::new(
            fair_point(),
            UniversalDistribution::jeffreys(ModelFamily::Bernoulli).unwrap(),
            SwitchMode::Renormalize,
        )),
    ];
    for n in 1..=10 {
        let all = sequences(2, n);
        for u in &kinds {
            let total: Vec<f64> = all.iter().map(|d| u.log_joint(d).unwrap()).collect();
            assert!((log_sum_exp(&total).exp() - 1.0).abs() < 1e-9, "n={n}");
        }
        let two_part = UniversalDistribution::two_part(ModelFamily::Bernoulli, grid.clone(), vec![0.2, 0.5, 0.3]);
        let total: Vec<f64> = all.iter().map(|d| two_part.log_joint(d).unwrap()).collect();
        assert!(log_sum_exp(&total).exp() <= 1.0 + 1e-12);
    }
}

#[test]
fn multinomial_normalization_by_enumeration() {
    let fam = ModelFamily::multinomial(3).unwrap();
    for n in 1..=6 {
        let all = sequences(3, n);
        for u in [UniversalDistribution::nml(fam.clone()), UniversalDistribution::jeffreys(fam.clone()).unwrap()] {
            let total: Vec<f64> = all.iter().map(|d| u.log_joint(d).unwrap()).collect();
            assert!((log_sum_exp(&total).exp() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn horizon_dependence_example() {
    let u = UniversalDistribution::nml(ModelFamily::Bernoulli);
    let at_two = u.log_joint(&DataSequence::bits("00").unwrap()).unwrap().exp();
    let at_three = u.log_prefix_marginal(&DataSequence::bits("00").unwrap(), 3).unwrap().exp();
    assert!((at_two - 0.4).abs() < 1e-12);
    assert!((at_three - 31.0 / 78.0).abs() < 1e-12);
    assert!(at_three < at_two);
    assert!((comp_bernoulli_exact(3).nats.exp() - 78.0 / 27.0).abs() < 1e-12);
}

#[test]
fn varsel_exhaustive_equals_brute_force() {
    let (n, m) = (30, 5);
    let x = DMatrix::from_fn(n, m, |i, j| ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0 + 0.1 * (i as f64).sin());
    let y = DVector::from_fn(n, |i, _| 1.5 * x[(i, 2)] - 0.4 * x[(i, 4)] + 0.3 * ((i * 3) as f64).cos());
    let sigma2 = 0.25;
    let result = variable_select(&x, &y, &VarselConfig::new(sigma2)).unwrap();
    let mut best = (f64::INFINITY, Vec::new());
    for mask in 0u32..1 << m {
        let cols: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let data_nats = if cols.is_empty() {
            0.5 * n as f64 * (2.0 * std::f64::consts::PI * sigma2).ln() + y.dot(&y) / (2.0 * sigma2)
        } else {
            let xs = DMatrix::from_fn(n, cols.len(), |i, j| x[(i, cols[j])]);
            let data = DataSequence::regression(xs, y.clone()).unwrap();
            -lnml_regression_log(&data, sigma2, &DMatrix::identity(cols.len(), cols.len())).unwrap()
        };
        let total = data_nats + gamma_code_length(m, cols.len()).unwrap();
        if total < best.0 {
            best = (total, cols);
        }
    }
    assert_eq!(result.selected, best.1);
    assert!((result.result.winner_row().codelength_nats - best.0).abs() < 1e-9);
}
