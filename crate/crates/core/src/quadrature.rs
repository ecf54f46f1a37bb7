//! One-dimensional quadrature rules on `[0, 1]`.
//!
//! * [`gauss_legendre`]: classical Gauss rule, nodes by Newton iteration.
//! * [`gauss_log`]: Gauss rule for the weight `-ln x`, built from modified
//!   moments (Gautschi's modified Chebyshev algorithm) and Golub–Welsch.
//!
//! Rules are computed once per order and cached.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;
use std::sync::OnceLock;

pub const MAX_ORDER: usize = 64;

/// Nodes and weights on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = b - a;
        self.iter().map(|(x, w)| w * f(a + h * x)).sum::<f64>() * h
    }
}

static LEGENDRE: [OnceLock<Rule>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
static LOG: [OnceLock<Rule>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];

/// `n`-point Gauss–Legendre rule on `[0, 1]` (`1 <= n <= 64`).
pub fn gauss_legendre(n: usize) -> &'static Rule {
    assert!((1..=MAX_ORDER).contains(&n), "Gauss-Legendre order {n} out of range");
    LEGENDRE[n].get_or_init(|| legendre_rule(n))
}

/// `n`-point rule with `sum w_k f(x_k) ~ int_0^1 -ln(x) f(x) dx` (`1 <= n <= 24`).
pub fn gauss_log(n: usize) -> &'static Rule {
    assert!((1..=24).contains(&n), "log-weighted Gauss order {n} out of range");
    LOG[n].get_or_init(|| log_rule(n))
}

fn legendre_rule(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) via the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1], ascending order
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

fn log_rule(n: usize) -> Rule {
    // Monic shifted Legendre: p_{k+1} = (x - 1/2) p_k - b_k p_{k-1},
    // b_k = k^2 / (4 (4 k^2 - 1)).
    let m = 2 * n;
    let a = vec![0.5; m];
    let b: Vec<f64> = (0..m)
        .map(|k| {
            let kf = k as f64;
            if k == 0 {
                1.0
            } else {
                kf * kf / (4.0 * (4.0 * kf * kf - 1.0))
            }
        })
        .collect();
    // Modified moments int_0^1 -ln(x) p_k(x) dx:
    // 1 for k = 0, (-1)^k (k!)^2 / ((2k)! k (k+1)) otherwise.
    let mut moments = vec![0.0; m];
    moments[0] = 1.0;
    let mut ratio = 1.0; // (k!)^2 / (2k)!
    for k in 1..m {
        let kf = k as f64;
        ratio *= kf / (2.0 * (2.0 * kf - 1.0));
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        moments[k] = sign * ratio / (kf * (kf + 1.0));
    }

    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut sig_prev = vec![0.0; m + 1];
    let mut sig: Vec<f64> = moments.clone();
    sig.push(0.0);
    alpha[0] = a[0] + moments[1] / moments[0];
    beta[0] = moments[0];
    for k in 1..n {
        let mut next = vec![0.0; m + 1];
        for l in k..(m - k) {
            let prev_l1 = if l >= 1 { sig[l - 1] } else { 0.0 };
            next[l] = sig[l + 1] - (alpha[k - 1] - a[l]) * sig[l] - beta[k - 1] * sig_prev[l] + b[l] * prev_l1;
        }
        alpha[k] = a[k] + next[k + 1] / next[k] - sig[k] / sig[k - 1];
        beta[k] = next[k] / sig[k - 1];
        sig_prev = sig;
        sig = next;
    }

    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = alpha[k];
        if k + 1 < n {
            let off = beta[k + 1].sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let v0 = eig.eigenvectors[(0, j)];
            (eig.eigenvalues[j], beta[0] * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
}
