//! Gauss-Laguerre rule for integrals of the form `∫₀^∞ f(t) e^(−t) dt`.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights of an n-point Gauss-Laguerre rule (weight `e^(−t)`).
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// `L_n(x)` and `L_n'(x)` by the three-term recurrence.
fn laguerre(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    (cur, n as f64 * (cur - prev) / x)
}

impl GaussLaguerre {
    /// Builds the rule with the Golub-Welsch eigenvalue method on the
    /// Jacobi matrix of the monic Laguerre recurrence, then polishes each
    /// node by Newton steps on `L_n`. Weights come from
    /// `w = 1 / (x·L_n'(x)²)` rather than the eigenvectors, whose absolute
    /// error (~1e-32) swamps the tiny tail weights once they multiply high
    /// powers of `x`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Laguerre needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jacobi[(i, i)] = (2 * i + 1) as f64;
            if i + 1 < n {
                let off = (i + 1) as f64;
                jacobi[(i, i + 1)] = off;
                jacobi[(i + 1, i)] = off;
            }
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..8 {
                let (l, dl) = laguerre(n, *x);
                let step = l / dl;
                *x -= step;
                if step.abs() <= 1e-15 * x.abs() {
                    break;
                }
            }
            let (_, dl) = laguerre(n, *x);
            weights.push(1.0 / (*x * dl * dl));
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
