//! Fully connected network with tanh hidden layers and a linear output.
//!
//! All coefficients live in one flat vector, layer by layer, each layer as a
//! row-major `out x in` weight matrix followed by its `out` biases. Gradients
//! use the same layout so optimizers and serializers treat both as plain
//! slices.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer outputs of one forward pass; `outputs[0]` is the input.
#[derive(Debug, Clone)]
pub struct Activations {
    outputs: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.outputs.last().expect("at least the input layer")
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::config(
            "dims",
            format!("need at least two positive layer sizes, got {dims:?}"),
        ));
    }
    Ok(())
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Mlp {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    /// Glorot-uniform weights and zero biases. The output layer is further
    /// scaled by `output_scale`; a small scale starts a policy head near
    /// uniform.
    pub fn random(dims: &[usize], output_scale: f64, rng: &mut impl Rng) -> Result<Self> {
        let mut net = Mlp::zeros(dims)?;
        let layers = dims.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let scale = if l + 1 == layers { output_scale } else { 1.0 };
            for w in &mut net.params[offset..offset + fan_in * fan_out] {
                *w = rng.gen_range(-limit..limit) * scale;
            }
            offset += fan_out * (fan_in + 1);
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        let expected = param_count(dims);
        if params.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: params.len(),
            });
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::config("params", format!("coefficient {i} is not finite")));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            params,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("validated dims")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.outputs.pop().expect("output layer"))
    }

    pub fn forward_cached(&self, input: &[f64]) -> Result<Activations> {
        if input.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let layers = self.dims.len() - 1;
        let mut outputs = Vec::with_capacity(layers + 1);
        outputs.push(input.to_vec());
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_out * (n_in + 1)];
            let x = &outputs[l];
            let hidden = l + 1 < layers;
            let y: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    let z = biases[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
                    if hidden {
                        z.tanh()
                    } else {
                        z
                    }
                })
                .collect();
            outputs.push(y);
            offset += n_out * (n_in + 1);
        }
        Ok(Activations { outputs })
    }

    /// Adds `d(upstream . output) / d params` to `grad`.
    pub fn accumulate_gradient(
        &self,
        acts: &Activations,
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<()> {
        if upstream.len() != self.output_dim() {
            return Err(Error::Dimension {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::Dimension {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let layers = self.dims.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut offset = 0;
        for l in 0..layers {
            offsets.push(offset);
            offset += self.dims[l + 1] * (self.dims[l] + 1);
        }
        let mut delta = upstream.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let offset = offsets[l];
            let x = &acts.outputs[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[offset + o * n_in..offset + (o + 1) * n_in];
                for (g, v) in row.iter_mut().zip(x) {
                    *g += d * v;
                }
                grad[offset + n_in * n_out + o] += d;
            }
            if l > 0 {
                let weights = &self.params[offset..offset + n_in * n_out];
                let mut prev = vec![0.0; n_in];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (p, w) in prev.iter_mut().zip(&weights[o * n_in..(o + 1) * n_in]) {
                        *p += w * d;
                    }
                }
                // x holds tanh outputs, so tanh' = 1 - x^2.
                for (p, v) in prev.iter_mut().zip(x) {
                    *p *= 1.0 - v * v;
                }
                delta = prev;
            }
        }
        Ok(())
    }

    /// Gradient of `upstream . forward(input)` with respect to every
    /// coefficient.
    pub fn gradient(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let acts = self.forward_cached(input)?;
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(&acts, upstream, &mut grad)?;
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_net_outputs_zero() {
        let net = Mlp::zeros(&[3, 4, 2]).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 0.5]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        // W = I, b = 0.
        let net = Mlp::from_params(&[2, 2], vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(net.forward(&[0.25, -3.0]).unwrap(), vec![0.25, -3.0]);
    }

    #[test]
    fn hand_computed_forward() {
        // h = tanh(0.5 * x + 0.1), y = 2h - 1.
        let net = Mlp::from_params(&[1, 1, 1], vec![0.5, 0.1, 2.0, -1.0]).unwrap();
        let y = net.forward(&[1.0]).unwrap()[0];
        assert!((y - (2.0 * 0.6f64.tanh() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let net = Mlp::zeros(&[3, 2]).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Dimension { expected: 3, got: 1 })));
        assert!(matches!(
            net.gradient(&[0.0; 3], &[1.0]),
            Err(Error::Dimension { expected: 2, got: 1 })
        ));
        assert!(Mlp::from_params(&[3, 2], vec![0.0; 7]).is_err());
        assert!(Mlp::from_params(&[1, 1], vec![f64::NAN, 0.0]).is_err());
        assert!(Mlp::zeros(&[3]).is_err());
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::random(&[4, 6, 5, 3], 1.0, &mut rng).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grad = net.gradient(&x, &u).unwrap();
        let h = 1e-5;
        for i in 0..net.num_params() {
            let eval = |delta: f64| {
                let mut shifted = net.clone();
                shifted.params_mut()[i] += delta;
                let y = shifted.forward(&x).unwrap();
                y.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>()
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let scale = numeric.abs().max(grad[i].abs()).max(1e-8);
            assert!((numeric - grad[i]).abs() / scale < 1e-4, "param {i}");
        }
    }
}
