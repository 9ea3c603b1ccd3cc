//! Log-domain helpers shared by every module.

use statrs::function::gamma::ln_gamma;

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log Σ exp(x_i)`; the empty sum is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Streaming accumulator for log-sum-exp.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        LogSum { max: f64::NEG_INFINITY, scaled: 0.0 }
    }
}

impl LogSum {
    pub fn add(&mut self, value: f64) {
        if value == f64::NEG_INFINITY {
            return;
        }
        if value > self.max {
            self.scaled = self.scaled * (self.max - value).exp() + 1.0;
            self.max = value;
        } else {
            self.scaled += (value - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// `x log x` with `0 log 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `x log y` with `0 log 0 = 0`, so that `0^0 = 1` in likelihoods.
pub fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Log of the multinomial coefficient `n! / Π c_j!`.
pub fn ln_multinomial(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    ln_factorial(n) - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>()
}

/// Maximized multinomial log-likelihood `Σ c_j log(c_j / n)`.
pub fn ml_log_likelihood(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    counts.iter().map(|&c| xlogy(c as f64, c as f64 / n)).sum()
}

/// `log B(a, b)`.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub use statrs::function::gamma::ln_gamma as lgamma;

/// Calls `visit` with every vector of `parts` nonnegative integers summing to `total`.
pub fn for_each_composition(total: u64, parts: usize, mut visit: impl FnMut(&[u64])) {
    if parts == 0 {
        if total == 0 {
            visit(&[]);
        }
        return;
    }
    let mut buf = vec![0u64; parts];
    compose_rec(total, 0, &mut buf, &mut visit);
}

fn compose_rec(rest: u64, idx: usize, buf: &mut [u64], visit: &mut impl FnMut(&[u64])) {
    if idx + 1 == buf.len() {
        buf[idx] = rest;
        visit(buf);
        return;
    }
    for c in 0..=rest {
        buf[idx] = c;
        compose_rec(rest - c, idx + 1, buf, visit);
    }
}

/// Number of compositions of `total` into `parts` parts, saturating.
pub fn composition_count(total: u64, parts: usize) -> f64 {
    if parts == 0 {
        return if total == 0 { 1.0 } else { 0.0 };
    }
    ln_binomial(total + parts as u64 - 1, parts as u64 - 1).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_add(-1e308, 0.0)).abs() < 1e-12);
        let mut acc = LogSum::default();
        for v in [-3.0, 2.0, f64::NEG_INFINITY, 0.5] {
            acc.add(v);
        }
        assert!((acc.value() - log_sum_exp(&[-3.0, 2.0, 0.5])).abs() < 1e-12);
    }

    #[test]
    fn compositions_enumerate_everything() {
        let mut seen = 0;
        for_each_composition(4, 3, |c| {
            assert_eq!(c.iter().sum::<u64>(), 4);
            seen += 1;
        });
        assert_eq!(seen, 15);
        assert!((composition_count(4, 3) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn zero_to_the_zero_is_one() {
        assert_eq!(xlogy(0.0, 0.0), 0.0);
        assert_eq!(ml_log_likelihood(&[0, 5]), 0.0);
        assert!((ml_log_likelihood(&[1, 1]) - 2.0 * 0.5f64.ln()).abs() < 1e-15);
    }
}
