#![allow(dead_code)]

use mdl_core::math::log_sum_exp;
use mdl_core::{DataSequence, UniversalDistribution};
use nalgebra::{DMatrix, DVector};

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub fn sequences(arity: usize, n: usize) -> Vec<DataSequence> {
    let total = arity.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let symbols = (0..n)
                .map(|_| {
                    let s = code % arity;
                    code /= arity;
                    s
                })
                .collect();
            DataSequence::categorical(arity, symbols).unwrap()
        })
        .collect()
}

/// `log Σ_y ū(prefix · y)` by listing every continuation.
pub fn brute_prefix(u: &UniversalDistribution, prefix: &DataSequence, horizon: usize) -> f64 {
    let arity = prefix.arity().unwrap();
    let rest = horizon - prefix.len();
    let terms: Vec<f64> =
        sequences(arity, rest).iter().map(|tail| u.log_joint(&prefix.concat(tail).unwrap()).unwrap()).collect();
    log_sum_exp(&terms)
}

/// Double-exponential quadrature on `(a, b)`, tolerant of endpoint singularities.
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let h = 1.0 / 64.0;
    let half = 0.5 * (b - a);
    let mut total = 0.0;
    for k in -400i32..=400 {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / u.cosh().powi(2);
        // distance to the nearer endpoint, computed without cancellation
        let gap = half * (-u.abs()).exp() / u.cosh();
        let point = if u > 0.0 { b - gap } else { a + gap };
        if !(point > a && point < b) || w == 0.0 || !w.is_finite() {
            continue;
        }
        total += w * f(point);
    }
    total * half * h
}

/// `log N(y; 0, C)` through an LU factorization.
pub fn mvn_log_density(y: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let lu = cov.clone().lu();
    let det = lu.determinant();
    let sol = lu.solve(y).unwrap();
    -0.5 * (y.len() as f64 * LN_2PI + det.ln() + y.dot(&sol))
}
