//! Categorical distributions restricted to valid actions.

use rand::Rng;

use crate::error::{Error, Result};

fn check(len: usize, mask: &[bool]) -> Result<()> {
    if len != mask.len() {
        return Err(Error::Dimension {
            expected: mask.len(),
            got: len,
        });
    }
    if !mask.contains(&true) {
        return Err(Error::NoValidAction);
    }
    Ok(())
}

/// Softmax over the valid entries; masked entries get probability exactly 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    check(logits.len(), mask)?;
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &valid)| valid)
        .map(|(&z, _)| z)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logits
        .iter()
        .zip(mask)
        .map(|(&z, &valid)| if valid { (z - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Inverse-CDF draw. Never returns an index with zero probability.
pub fn sample(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Highest-valued valid index, lowest index on ties.
pub fn masked_argmax(values: &[f64], mask: &[bool]) -> Result<usize> {
    check(values.len(), mask)?;
    let mut best: Option<usize> = None;
    for (i, &valid) in mask.iter().enumerate() {
        if valid && best.is_none_or(|b| values[i] > values[b]) {
            best = Some(i);
        }
    }
    Ok(best.expect("checked non-empty mask"))
}

/// Entropy in nats; zero-probability entries contribute nothing.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}
