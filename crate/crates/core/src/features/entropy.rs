use crate::error::{invalid_input, Result};

/// Offset added inside the logarithm of the log-energy entropy.
pub const LOG_ENERGY_EPS: f64 = 1e-12;

/// Equal-width histogram over `[min, max]`, normalised to probabilities.
/// A constant signal puts all of its mass in the first bin.
pub fn histogram_probabilities(x: &[f64], bins: usize) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(invalid_input!("histogram of an empty signal"));
    }
    if bins == 0 {
        return Err(invalid_input!("histogram needs at least one bin"));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(invalid_input!("histogram input must be finite"));
    }
    let mut counts = vec![0usize; bins];
    let width = hi - lo;
    for &v in x {
        let b = if width > 0.0 {
            (((v - lo) / width * bins as f64) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    let n = x.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

pub fn shannon_from_probabilities(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|&q| q * q.ln()).sum::<f64>()
}

pub fn renyi_from_probabilities(p: &[f64], alpha: f64) -> f64 {
    p.iter().filter(|&&q| q > 0.0).map(|&q| q.powf(alpha)).sum::<f64>().ln() / (1.0 - alpha)
}

/// Shannon entropy (nats) of the histogram estimate.
pub fn shannon_entropy(x: &[f64], bins: usize) -> Result<f64> {
    Ok(shannon_from_probabilities(&histogram_probabilities(x, bins)?))
}

/// Renyi entropy of order `alpha` (nats) of the histogram estimate.
pub fn renyi_entropy(x: &[f64], alpha: f64, bins: usize) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(invalid_input!("Renyi order must be positive and different from 1, got {alpha}"));
    }
    Ok(renyi_from_probabilities(&histogram_probabilities(x, bins)?, alpha))
}

pub fn log_energy_entropy(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(invalid_input!("log-energy entropy of an empty signal"));
    }
    Ok(x.iter().map(|v| (v * v + LOG_ENERGY_EPS).ln()).sum())
}

/// Sample standard deviation, computed after shifting by the first sample.
pub fn sample_sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let shift = x[0];
    let n = x.len() as f64;
    let mean = x.iter().map(|v| v - shift).sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - shift - mean).powi(2)).sum::<f64>();
    (ss / (n - 1.0)).sqrt()
}

fn check_embedding(len: usize, m: usize, tau: usize, r: f64) -> Result<()> {
    if m == 0 || tau == 0 {
        return Err(invalid_input!("embedding needs m >= 1 and tau >= 1"));
    }
    if len <= (m + 1) * tau {
        return Err(invalid_input!(
            "signal of length {len} is too short for m = {m}, tau = {tau}"
        ));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(invalid_input!("tolerance r must be finite and non-negative, got {r}"));
    }
    Ok(())
}

fn chebyshev(x: &[f64], i: usize, j: usize, m: usize, tau: usize) -> f64 {
    (0..m).map(|k| (x[i + k * tau] - x[j + k * tau]).abs()).fold(0.0, f64::max)
}

fn phi(x: &[f64], m: usize, tau: usize, r: f64) -> f64 {
    let count = x.len() - (m - 1) * tau;
    let total: f64 = (0..count)
        .map(|i| {
            let matches = (0..count).filter(|&j| chebyshev(x, i, j, m, tau) <= r).count();
            (matches as f64 / count as f64).ln()
        })
        .sum();
    total / count as f64
}

/// Pincus approximate entropy, self-matches included.
pub fn approximate_entropy(x: &[f64], m: usize, tau: usize, r: f64) -> Result<f64> {
    check_embedding(x.len(), m, tau, r)?;
    Ok(phi(x, m, tau, r) - phi(x, m + 1, tau, r))
}

/// Matching template pairs `(B, A)` at lengths `m` and `m + 1`, self-matches excluded.
/// Both lengths use the same `len - m tau` template starts.
pub fn sample_entropy_counts(x: &[f64], m: usize, tau: usize, r: f64) -> Result<(usize, usize)> {
    check_embedding(x.len(), m, tau, r)?;
    let count = x.len() - m * tau;
    let (mut b, mut a) = (0, 0);
    for i in 0..count {
        for j in i + 1..count {
            if chebyshev(x, i, j, m, tau) <= r {
                b += 1;
                if (x[i + m * tau] - x[j + m * tau]).abs() <= r {
                    a += 1;
                }
            }
        }
    }
    Ok((b, a))
}

/// `-ln(A/B)`; `+inf` when no template of length `m + 1` matches.
pub fn sample_entropy(x: &[f64], m: usize, tau: usize, r: f64) -> Result<f64> {
    let (b, a) = sample_entropy_counts(x, m, tau, r)?;
    if a == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(-(a as f64 / b as f64).ln())
}

/// Largest finite sample entropy attainable on a signal of length `len`.
pub fn sample_entropy_bound(len: usize, m: usize, tau: usize) -> f64 {
    let count = len.saturating_sub(m * tau) as f64;
    (count * (count - 1.0) / 2.0).max(1.0).ln()
}

fn centered_templates(x: &[f64], m: usize, tau: usize, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count * m);
    for i in 0..count {
        // Offsets from the first element keep the result exact under an additive shift.
        let base = x[i];
        let rel: Vec<f64> = (0..m).map(|k| x[i + k * tau] - base).collect();
        let mean = rel.iter().sum::<f64>() / m as f64;
        out.extend(rel.iter().map(|v| v - mean));
    }
    out
}

fn fuzzy_phi(x: &[f64], m: usize, tau: usize, r: f64, count: usize) -> f64 {
    let t = centered_templates(x, m, tau, count);
    let mut total = 0.0;
    for i in 0..count {
        for j in i + 1..count {
            let d = (0..m).map(|k| (t[i * m + k] - t[j * m + k]).abs()).fold(0.0, f64::max);
            total += if r > 0.0 {
                (-(d / r).powi(2)).exp()
            } else if d == 0.0 {
                1.0
            } else {
                0.0
            };
        }
    }
    2.0 * total / (count as f64 * (count as f64 - 1.0))
}

/// Fuzzy entropy with mean-centred templates and membership `exp(-(d/r)^2)`.
pub fn fuzzy_entropy(x: &[f64], m: usize, tau: usize, r: f64) -> Result<f64> {
    check_embedding(x.len(), m, tau, r)?;
    let count = x.len() - m * tau;
    Ok(fuzzy_phi(x, m, tau, r, count).ln() - fuzzy_phi(x, m + 1, tau, r, count).ln())
}

/// Mean of `exp(x_i^2 / sd^2)`; a zero-variance signal uses `sd = 1`.
pub fn exponential_energy(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(invalid_input!("exponential energy of an empty signal"));
    }
    let sd = sample_sd(x);
    let var = if sd > 0.0 { sd * sd } else { 1.0 };
    Ok(x.iter().map(|v| (v * v / var).exp()).sum::<f64>() / x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let p = histogram_probabilities(&[0.0, 1.0, 2.0, 3.0], 4).unwrap();
        assert_eq!(p, vec![0.25; 4]);
        assert_eq!(histogram_probabilities(&[5.0; 7], 64).unwrap()[0], 1.0);
        assert!(histogram_probabilities(&[], 4).is_err());
    }

    #[test]
    fn short_inputs_rejected() {
        assert!(approximate_entropy(&[1.0, 2.0, 3.0], 2, 1, 0.1).is_err());
        assert!(sample_entropy(&[1.0; 6], 2, 2, 0.1).is_err());
        assert!(fuzzy_entropy(&[1.0; 12], 3, 3, 0.1).is_err());
        assert!(fuzzy_entropy(&[1.0; 13], 3, 3, 0.1).is_ok());
    }

    #[test]
    fn sample_entropy_small_case() {
        // Templates of length 1: pairs within 0.5 of each other.
        let x = [0.0, 0.1, 1.0, 1.1, 0.05];
        let (b, a) = sample_entropy_counts(&x, 1, 1, 0.5).unwrap();
        // Starts 0..4: values 0.0, 0.1, 1.0, 1.1. Matching pairs (0,1) and (2,3).
        assert_eq!(b, 2);
        // Successors: (0.1, 1.0) no, (1.1, 0.05) no.
        assert_eq!(a, 0);
        assert_eq!(sample_entropy(&x, 1, 1, 0.5).unwrap(), f64::INFINITY);
    }

    #[test]
    fn exponential_energy_closed_forms() {
        assert_eq!(exponential_energy(&[0.0; 5]).unwrap(), 1.0);
        assert!((exponential_energy(&[1.0; 4]).unwrap() - std::f64::consts::E).abs() < 1e-15);
    }
}
