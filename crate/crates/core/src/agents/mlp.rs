//! Multilayer perceptron with tanh hidden layers and a linear output.
//!
//! Parameters live in one flat vector. Layer `l` stores its weights
//! input-major (`w[i * out + o]`) followed by its bias.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
}

impl Architecture {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        Architecture {
            input,
            hidden: hidden.to_vec(),
            output,
        }
    }

    /// Layer widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input];
        s.extend(&self.hidden);
        s.push(self.output);
        s
    }

    pub fn num_params(&self) -> usize {
        self.sizes().windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn validate(&self) -> Result<()> {
        if self.sizes().contains(&0) {
            return Err(Error::InvalidArgument(format!("zero-width layer in {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerSpan {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: Architecture,
    params: Vec<f64>,
}

/// Per-layer activations of one forward pass (input first).
#[derive(Debug, Clone, Default)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().expect("at least the input layer")
    }
}

impl Mlp {
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let params = vec![0.0; arch.num_params()];
        Ok(Mlp { arch, params })
    }

    /// Glorot-uniform weights, zero biases; the output layer's weights are
    /// multiplied by `output_scale`. Parameters are snapped to f32.
    pub fn init<R: Rng>(arch: Architecture, rng: &mut R, output_scale: f64) -> Result<Self> {
        let mut net = Mlp::zeros(arch)?;
        let spans = net.spans();
        let last = spans.len() - 1;
        for (l, s) in spans.iter().enumerate() {
            let bound = (6.0 / (s.fan_in + s.fan_out) as f64).sqrt();
            let scale = if l == last { output_scale } else { 1.0 };
            for w in &mut net.params[s.w..s.b] {
                *w = rng.random_range(-bound..bound) * scale;
            }
        }
        net.snap_to_f32();
        Ok(net)
    }

    pub fn from_params(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if params.len() != arch.num_params() {
            return Err(Error::ContractViolation(format!(
                "{} parameters given for an architecture with {}",
                params.len(),
                arch.num_params()
            )));
        }
        Ok(Mlp { arch, params })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::ContractViolation(format!(
                "{} parameters given, network has {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    /// Rounds every parameter to the nearest f32 so checkpoints round-trip exactly.
    pub fn snap_to_f32(&mut self) {
        for p in &mut self.params {
            *p = *p as f32 as f64;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// (weights, bias) of every layer, weights input-major.
    pub fn layers(&self) -> Vec<(&[f64], &[f64])> {
        self.spans()
            .iter()
            .map(|s| {
                (
                    &self.params[s.w..s.b],
                    &self.params[s.b..s.b + s.fan_out],
                )
            })
            .collect()
    }

    fn spans(&self) -> Vec<LayerSpan> {
        let sizes = self.arch.sizes();
        let mut offset = 0;
        sizes
            .windows(2)
            .map(|w| {
                let span = LayerSpan {
                    fan_in: w[0],
                    fan_out: w[1],
                    w: offset,
                    b: offset + w[0] * w[1],
                };
                offset = span.b + w[1];
                span
            })
            .collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input {
            return Err(Error::ContractViolation(format!(
                "input of length {} for a network expecting {}",
                x.len(),
                self.arch.input
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(x)?.layers.pop().expect("output layer"))
    }

    pub fn activations(&self, x: &[f64]) -> Result<Activations> {
        self.check_input(x)?;
        let spans = self.spans();
        let last = spans.len() - 1;
        let mut layers = Vec::with_capacity(spans.len() + 1);
        layers.push(x.to_vec());
        for (l, s) in spans.iter().enumerate() {
            let input = &layers[l];
            let mut z = self.params[s.b..s.b + s.fan_out].to_vec();
            for (i, &xi) in input.iter().enumerate() {
                let row = &self.params[s.w + i * s.fan_out..s.w + (i + 1) * s.fan_out];
                axpy(xi, row, &mut z);
            }
            if l != last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            layers.push(z);
        }
        Ok(Activations { layers })
    }

    /// Forward pass over `batch` inputs stored back to back.
    pub fn forward_batch(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if xs.len() % self.arch.input != 0 {
            return Err(Error::ContractViolation(format!(
                "batch of {} values is not a multiple of the input width {}",
                xs.len(),
                self.arch.input
            )));
        }
        let mut out = Vec::with_capacity(xs.len() / self.arch.input * self.arch.output);
        for x in xs.chunks(self.arch.input) {
            out.extend(self.forward(x)?);
        }
        Ok(out)
    }

    /// Adds the gradient of `upstream · output` with respect to the
    /// parameters into `grad`.
    pub fn backward(&self, acts: &Activations, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        if upstream.len() != self.arch.output || grad.len() != self.params.len() {
            return Err(Error::ContractViolation(
                "upstream or gradient buffer has the wrong length".into(),
            ));
        }
        let spans = self.spans();
        let mut delta = upstream.to_vec();
        for l in (0..spans.len()).rev() {
            let s = spans[l];
            let input = &acts.layers[l];
            for (g, d) in grad[s.b..s.b + s.fan_out].iter_mut().zip(&delta) {
                *g += d;
            }
            let mut prev = vec![0.0; s.fan_in];
            for (i, &xi) in input.iter().enumerate() {
                let range = s.w + i * s.fan_out..s.w + (i + 1) * s.fan_out;
                axpy(xi, &delta, &mut grad[range.clone()]);
                if l > 0 {
                    prev[i] = dot(&self.params[range], &delta);
                }
            }
            if l > 0 {
                for (p, a) in prev.iter_mut().zip(input) {
                    *p *= 1.0 - a * a;
                }
                delta = prev;
            }
        }
        Ok(())
    }

    /// Gradient of `upstream · f(x)` with respect to every parameter.
    pub fn gradient(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let acts = self.activations(x)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&acts, upstream, &mut grad)?;
        Ok(grad)
    }

    /// Directional derivative of the output along a parameter direction.
    pub fn jvp(&self, acts: &Activations, tangent: &[f64]) -> Result<Vec<f64>> {
        if tangent.len() != self.params.len() {
            return Err(Error::ContractViolation("tangent has the wrong length".into()));
        }
        let spans = self.spans();
        let last = spans.len() - 1;
        let mut d_in = vec![0.0; self.arch.input];
        for (l, s) in spans.iter().enumerate() {
            let input = &acts.layers[l];
            let mut dz = tangent[s.b..s.b + s.fan_out].to_vec();
            for i in 0..s.fan_in {
                let range = s.w + i * s.fan_out..s.w + (i + 1) * s.fan_out;
                axpy(input[i], &tangent[range.clone()], &mut dz);
                if d_in[i] != 0.0 {
                    axpy(d_in[i], &self.params[range], &mut dz);
                }
            }
            if l != last {
                for (d, a) in dz.iter_mut().zip(&acts.layers[l + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            d_in = dz;
        }
        Ok(d_in)
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_net(arch: Architecture, seed: u64) -> Mlp {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Mlp::init(arch, &mut rng, 1.0).unwrap();
        let params: Vec<f64> = net
            .params()
            .iter()
            .map(|p| p + rng.random_range(-0.1..0.1))
            .collect();
        net.set_params(&params).unwrap();
        net
    }

    /// Independent scalar-by-scalar evaluation.
    fn scalar_forward(net: &Mlp, x: &[f64]) -> Vec<f64> {
        let sizes = net.architecture().sizes();
        let p = net.params();
        let mut a = x.to_vec();
        let mut off = 0;
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let mut z = vec![0.0; n_out];
            for o in 0..n_out {
                let mut acc = p[off + n_in * n_out + o];
                for i in 0..n_in {
                    acc += p[off + i * n_out + o] * a[i];
                }
                z[o] = if l + 2 < sizes.len() { acc.tanh() } else { acc };
            }
            off += n_in * n_out + n_out;
            a = z;
        }
        a
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(Architecture::new(3, &[4], 2)).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_linear_layer() {
        let mut params = vec![0.0; 12];
        for i in 0..3 {
            params[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_params(Architecture::new(3, &[], 3), params).unwrap();
        assert_eq!(net.forward(&[0.5, -1.5, 2.0]).unwrap(), vec![0.5, -1.5, 2.0]);
    }

    #[test]
    fn matches_scalar_reimplementation() {
        let net = random_net(Architecture::new(5, &[7, 6], 3), 11);
        let x = [0.3, -0.7, 1.1, 0.05, -0.4];
        let a = net.forward(&x).unwrap();
        let b = scalar_forward(&net, &x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_input_length_is_contract_violation() {
        let net = Mlp::zeros(Architecture::new(3, &[4], 2)).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let net = random_net(Architecture::new(4, &[5], 2), 1);
        let g = net.gradient(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_weight_gradient_is_the_input() {
        let net = random_net(Architecture::new(3, &[], 2), 2);
        let x = [0.25, -1.5, 4.0];
        let g = net.gradient(&x, &[1.0, 0.0]).unwrap();
        for i in 0..3 {
            assert_eq!(g[i * 2], x[i]);
            assert_eq!(g[i * 2 + 1], 0.0);
        }
        assert_eq!(g[6], 1.0);
    }

    #[test]
    fn jvp_matches_finite_differences() {
        let net = random_net(Architecture::new(4, &[6, 5], 3), 5);
        let x = [0.2, -0.3, 0.9, -1.2];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t: Vec<f64> = (0..net.num_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jv = net.jvp(&net.activations(&x).unwrap(), &t).unwrap();
        let h = 1e-6;
        let shifted = |sign: f64| {
            let p: Vec<f64> = net.params().iter().zip(&t).map(|(p, d)| p + sign * h * d).collect();
            Mlp::from_params(net.architecture().clone(), p).unwrap().forward(&x).unwrap()
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        for k in 0..3 {
            let fd = (plus[k] - minus[k]) / (2.0 * h);
            assert!((fd - jv[k]).abs() < 1e-7, "{fd} vs {}", jv[k]);
        }
    }

    #[test]
    fn init_is_f32_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::init(Architecture::new(25, &[16], 4), &mut rng, 0.1).unwrap();
        assert!(net.params().iter().all(|&p| p == p as f32 as f64));
    }
}
