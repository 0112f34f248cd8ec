//! Annealed sampling-noise factors.
//!
//! The factor for planning iteration `i` (counting down from `I` to 1) and
//! spline node `k` is
//!
//! ```text
//! sigma(i, k) = exp(-(I - i) / (beta1 * I) - (K - 1 - k) / (beta2 * K))
//! ```
//!
//! so noise shrinks as iterations progress and grows toward the end of the
//! horizon. The last node of the first iteration gets exactly 1. Factors are
//! used directly as standard-deviation multipliers on the per-channel scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSchedule {
    iterations: usize,
    nodes: usize,
    beta1: f64,
    beta2: f64,
    // Row i - 1 holds iteration i.
    factors: Vec<f64>,
}

impl NoiseSchedule {
    /// Precomputes the `I x K` grid. Infinite betas disable the corresponding decay.
    pub fn build(iterations: usize, nodes: usize, beta1: f64, beta2: f64) -> Result<Self> {
        if iterations < 1 {
            return Err(Error::Config("noise schedule needs at least one iteration".into()));
        }
        if nodes < 2 {
            return Err(Error::Config(format!("noise schedule needs at least 2 nodes, got {nodes}")));
        }
        if !(beta1 > 0.0) || !(beta2 > 0.0) {
            return Err(Error::Config(format!(
                "annealing temperatures must be positive, got beta1={beta1}, beta2={beta2}"
            )));
        }
        let (i_max, k_max) = (iterations as f64, nodes as f64);
        let mut factors = Vec::with_capacity(iterations * nodes);
        for i in 1..=iterations {
            let trajectory_level = (iterations - i) as f64 / (beta1 * i_max);
            for k in 0..nodes {
                let action_level = (nodes - 1 - k) as f64 / (beta2 * k_max);
                factors.push((-trajectory_level - action_level).exp());
            }
        }
        Ok(Self {
            iterations,
            nodes,
            beta1,
            beta2,
            factors,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    /// Cached factor for iteration `i` in `1..=I` and node `k` in `0..K`.
    pub fn sigma(&self, i: usize, k: usize) -> Result<f64> {
        if !(1..=self.iterations).contains(&i) || k >= self.nodes {
            return Err(Error::Bounds(format!(
                "sigma({i}, {k}) outside iterations 1..={} and nodes 0..{}",
                self.iterations, self.nodes
            )));
        }
        Ok(self.factors[(i - 1) * self.nodes + k])
    }

    /// Log-determinant of the stacked `K * d_u` covariance at iteration `i`
    /// when each factor is read as an isotropic per-node variance.
    pub fn log_det_stacked(&self, i: usize, control_dim: usize) -> Result<f64> {
        (0..self.nodes).try_fold(0.0, |acc, k| Ok(acc + self.log_det_node(i, k, control_dim)?))
    }

    /// Log-determinant of one node's `d_u x d_u` covariance under the same reading.
    pub fn log_det_node(&self, i: usize, k: usize, control_dim: usize) -> Result<f64> {
        Ok(control_dim as f64 * self.sigma(i, k)?.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn build_examples() {
        let s = NoiseSchedule::build(3, 4, 1.0, 1.0).unwrap();
        assert_eq!(s.sigma(3, 3).unwrap(), 1.0);
        // exp(-2/3 - 3/4) = exp(-1.416667) = 0.242521...
        let expected = (-2.0f64 / 3.0 - 0.75).exp();
        assert!((s.sigma(1, 0).unwrap() - expected).abs() < 1e-15);
        assert!((s.sigma(1, 0).unwrap() - 0.24245).abs() < 1e-4);

        let flat = NoiseSchedule::build(3, 4, f64::INFINITY, f64::INFINITY).unwrap();
        for i in 1..=3 {
            for k in 0..4 {
                assert_eq!(flat.sigma(i, k).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn monotone_in_both_axes() {
        let s = NoiseSchedule::build(5, 6, 0.7, 1.3).unwrap();
        for i in 1..=5 {
            for k in 0..6 {
                let f = s.sigma(i, k).unwrap();
                assert!(f > 0.0 && f <= 1.0);
                if i < 5 {
                    assert!(f <= s.sigma(i + 1, k).unwrap());
                }
                if k < 5 {
                    assert!(f <= s.sigma(i, k + 1).unwrap());
                }
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(NoiseSchedule::build(0, 4, 1.0, 1.0).is_err());
        assert!(NoiseSchedule::build(3, 1, 1.0, 1.0).is_err());
        assert!(NoiseSchedule::build(3, 4, 0.0, 1.0).is_err());
        assert!(NoiseSchedule::build(3, 4, 1.0, -2.0).is_err());
        assert!(NoiseSchedule::build(3, 4, f64::NAN, 1.0).is_err());
    }

    #[test]
    fn out_of_range_indices() {
        let s = NoiseSchedule::build(3, 4, 1.0, 1.0).unwrap();
        assert!(s.sigma(0, 0).is_err());
        assert!(s.sigma(4, 0).is_err());
        assert!(s.sigma(1, 4).is_err());
    }

    #[test]
    fn determinant_laws() {
        let (iters, nodes, du) = (4, 5, 3);
        let (b1, b2) = (0.6, 1.7);
        let s = NoiseSchedule::build(iters, nodes, b1, b2).unwrap();
        let top = s.log_det_stacked(iters, du).unwrap();
        for i in 1..=iters {
            let expected = -((iters - i) as f64) / (b1 * iters as f64) * (nodes * du) as f64;
            assert!((s.log_det_stacked(i, du).unwrap() - top - expected).abs() < 1e-12);
            let last = s.log_det_node(i, nodes - 1, du).unwrap();
            for k in 0..nodes {
                let expected = -((nodes - 1 - k) as f64) / (b2 * nodes as f64) * du as f64;
                assert!((s.log_det_node(i, k, du).unwrap() - last - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let a = NoiseSchedule::build(3, 4, 0.9, 1.1).unwrap();
        let b = NoiseSchedule::build(3, 4, 0.9, 1.1).unwrap();
        assert!(a.factors.iter().zip(&b.factors).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
