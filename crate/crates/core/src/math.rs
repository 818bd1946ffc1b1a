//! Scalar helpers shared by the log-space routines.

/// Natural logarithm; `ln(0) = -inf`.
#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// `log(exp(a) + exp(b))` without overflow. Handles `-inf` operands.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Log-sum-exp over an iterator; empty or all `-inf` input yields `-inf`.
pub fn log_sum_exp<I: IntoIterator<Item = f64> + Clone>(xs: I) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = xs.into_iter().map(|x| libm::exp(x - max)).sum();
    max + libm::log(s)
}

/// Numerically stable softmax.
pub fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = libm::exp(z - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Total variation distance, half the L1 distance.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| libm::fabs(a - b)).sum::<f64>()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Regularized upper incomplete gamma function `Q(a, x)`.
///
/// Series expansion for `x < a + 1`, Lentz continued fraction otherwise.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if !x.is_finite() {
        return 0.0;
    }
    let log_prefactor = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if libm::fabs(term) < libm::fabs(sum) * 1e-16 {
                break;
            }
        }
        (1.0 - sum * libm::exp(log_prefactor)).clamp(0.0, 1.0)
    } else {
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if libm::fabs(d) < TINY {
                d = TINY;
            }
            c = b + an / c;
            if libm::fabs(c) < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if libm::fabs(delta - 1.0) < 1e-16 {
                break;
            }
        }
        (libm::exp(log_prefactor) * h).clamp(0.0, 1.0)
    }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(statistic: f64, dof: f64) -> f64 {
    gamma_q(0.5 * dof, 0.5 * statistic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn log_add_exp_handles_infinities() {
        assert_eq!(
            log_add_exp(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        assert!((log_add_exp(0.0, 0.0) - core::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn chi_square_tail_matches_statrs() {
        for &dof in &[1.0, 2.0, 3.0, 4.0, 9.0, 81.0] {
            let dist = ChiSquared::new(dof).unwrap();
            for &x in &[0.01, 0.5, 1.0, 3.84, 10.0, 25.0, 100.0, 300.0] {
                let ours = chi_square_sf(x, dof);
                let theirs = 1.0 - dist.cdf(x);
                assert!(
                    (ours - theirs).abs() < 1e-10,
                    "dof {dof} x {x}: {ours} vs {theirs}"
                );
            }
        }
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }
}
