//! Gradient descent with momentum and gradient-norm clipping.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub lr: f64,
    pub momentum: f64,
    /// Gradients with a larger Euclidean norm are rescaled to this norm.
    pub clip_norm: f64,
    #[serde(skip)]
    velocity: Vec<f64>,
}

impl Momentum {
    pub fn new(lr: f64, momentum: f64, clip_norm: f64) -> Self {
        Momentum {
            lr,
            momentum,
            clip_norm,
            velocity: Vec::new(),
        }
    }

    /// Descends along `grad`, which is clipped in place. Returns the norm
    /// of the gradient before clipping.
    pub fn step(&mut self, params: &mut [f64], grad: &mut [f64]) -> f64 {
        let norm = clip_norm(grad, self.clip_norm);
        if self.velocity.len() != params.len() {
            self.velocity = vec![0.0; params.len()];
        }
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity).zip(grad.iter()) {
            *v = self.momentum * *v + g;
            *p -= self.lr * *v;
        }
        norm
    }
}

/// Rescales `grad` to at most `max_norm`; returns the original norm.
pub fn clip_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_caps_the_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.3, 0.4];
        clip_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.3, 0.4]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut opt = Momentum::new(0.05, 0.9, 10.0);
        let mut x = vec![5.0, -3.0];
        for _ in 0..500 {
            let mut g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            opt.step(&mut x, &mut g);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-6));
    }
}
