//! Scalar helpers shared by the evaluator, the learner and the baselines.

/// Probabilities are clamped to `[EPSILON, 1 - EPSILON]` before taking logs.
pub const EPSILON: f64 = 1e-12;

/// Logistic function `e^s / (1 + e^s)`, evaluated without overflow.
pub fn logistic(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + libm::exp(-s))
    } else {
        let e = libm::exp(s);
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    libm::log(p / (1.0 - p))
}

pub fn clamp_probability(p: f64) -> f64 {
    p.clamp(EPSILON, 1.0 - EPSILON)
}

/// Log-probability of an outcome under the clamped probability `p`.
pub fn log_outcome(p: f64, outcome: bool) -> f64 {
    let p = clamp_probability(p);
    if outcome {
        libm::log(p)
    } else {
        libm::log(1.0 - p)
    }
}

/// Closed-form Bernoulli log-likelihood of `ones` successes and `zeros`
/// failures at the maximum-likelihood rate, with the usual clamping.
pub fn bernoulli_mle_ll(ones: usize, zeros: usize) -> f64 {
    let n = (ones + zeros) as f64;
    let p = clamp_probability(ones as f64 / n);
    ones as f64 * libm::log(p) + zeros as f64 * libm::log(1.0 - p)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    // constant columns carry no signal
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / libm::sqrt(saa * sbb)
}
