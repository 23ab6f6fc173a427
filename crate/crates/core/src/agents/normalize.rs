/// Running per-feature standardization of observations.
///
/// Statistics merge batch by batch (Chan et al.'s parallel update), so the
/// result depends only on the data and the batch boundaries. With no data
/// seen yet it is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsNormalizer {
    count: f64,
    mean: Vec<f64>,
    var: Vec<f64>,
}

/// Standardized features are clamped to this magnitude.
const CLAMP: f64 = 10.0;

impl ObsNormalizer {
    pub fn identity(dim: usize) -> Self {
        ObsNormalizer {
            count: 0.0,
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn from_parts(count: f64, mean: Vec<f64>, var: Vec<f64>) -> Option<Self> {
        let ok = mean.len() == var.len()
            && count >= 0.0
            && count.is_finite()
            && mean.iter().chain(&var).all(|v| v.is_finite())
            && var.iter().all(|&v| v >= 0.0);
        ok.then_some(ObsNormalizer { count, mean, var })
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn update<'a>(&mut self, rows: impl IntoIterator<Item = &'a [f64]>) {
        let dim = self.dim();
        let mut n = 0.0;
        let mut sum = vec![0.0; dim];
        let mut rows_seen: Vec<&[f64]> = Vec::new();
        for row in rows {
            debug_assert_eq!(row.len(), dim);
            n += 1.0;
            sum.iter_mut().zip(row).for_each(|(s, x)| *s += x);
            rows_seen.push(row);
        }
        if n == 0.0 {
            return;
        }
        let batch_mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let mut batch_m2 = vec![0.0; dim];
        for row in rows_seen {
            for ((m2, x), mu) in batch_m2.iter_mut().zip(row).zip(&batch_mean) {
                *m2 += (x - mu) * (x - mu);
            }
        }
        let total = self.count + n;
        for i in 0..dim {
            let delta = batch_mean[i] - self.mean[i];
            let m2 = if self.count == 0.0 {
                batch_m2[i]
            } else {
                self.var[i] * self.count + batch_m2[i] + delta * delta * self.count * n / total
            };
            self.mean[i] += delta * n / total;
            self.var[i] = m2 / total;
        }
        self.count = total;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.count == 0.0 {
            return x.to_vec();
        }
        x.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((x, m), v)| ((x - m) / (v + 1e-8).sqrt()).clamp(-CLAMP, CLAMP))
            .collect()
    }
}
