//! Gauss–Jacobi quadrature and barycentric interpolation on its nodes.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Values `(P_n, P_{n-1})` of the Jacobi polynomials with exponents
/// `(alpha, beta)` at `x`, via the three-term recurrence.
pub(crate) fn jacobi_pair(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let ab = alpha + beta;
    let mut prev = 1.0;
    if n == 0 {
        return (prev, 0.0);
    }
    let mut cur = 0.5 * ((ab + 2.0) * x + (alpha - beta));
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let a1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a2 = (c - 1.0) * (c * (c - 2.0) * x + alpha * alpha - beta * beta);
        let a3 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * c;
        let next = (a2 * cur - a3 * prev) / a1;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

/// `(P_n(x), P_n'(x))` for `|x| < 1`.
fn jacobi_with_derivative(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let (pn, pn1) = jacobi_pair(n, alpha, beta, x);
    let nf = n as f64;
    let c = 2.0 * nf + alpha + beta;
    let dp = (nf * ((alpha - beta) - c * x) * pn + 2.0 * (nf + alpha) * (nf + beta) * pn1) / (c * (1.0 - x * x));
    (pn, dp)
}

/// Nodes (ascending) and weights of the `n`-point Gauss rule for the weight
/// `(1-x)^alpha (1+x)^beta` on `(-1, 1)`.
///
/// Golub–Welsch eigenvalues seed a Newton polish on `P_n`; the weights use
/// the closed form in terms of `P_n'` so that they stay accurate to a few ulps.
pub(crate) fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || alpha <= -1.0 || beta <= -1.0 {
        return Err(Error::Parameter(format!(
            "gauss_jacobi needs n >= 1 and exponents > -1 (n={n}, alpha={alpha}, beta={beta})"
        )));
    }
    let ab = alpha + beta;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        jac[(k, k)] =
            if k == 0 { (beta - alpha) / (ab + 2.0) } else { (beta * beta - alpha * alpha) / (c * (c + 2.0)) };
    }
    for k in 1..n {
        let kf = k as f64;
        let c = 2.0 * kf + ab;
        let b2 = if k == 1 {
            4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
        } else {
            4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (c * c * (c + 1.0) * (c - 1.0))
        };
        let b = b2.sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(f64::total_cmp);

    let log_g = (ab + 1.0) * std::f64::consts::LN_2
        + libm::lgamma(n as f64 + alpha + 1.0)
        + libm::lgamma(n as f64 + beta + 1.0)
        - libm::lgamma(n as f64 + ab + 1.0)
        - libm::lgamma(n as f64 + 1.0);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..8 {
            let (pn, dp) = jacobi_with_derivative(n, alpha, beta, *x);
            let dx = pn / dp;
            *x -= dx;
            if dx.abs() <= 4.0 * f64::EPSILON {
                break;
            }
        }
        let (_, dp) = jacobi_with_derivative(n, alpha, beta, *x);
        weights.push((log_g - ((1.0 - *x * *x) * dp * dp).ln()).exp());
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes.iter().any(|x| x.abs() >= 1.0) {
        return Err(Error::Numerical(format!("gauss_jacobi({n}, {alpha}, {beta}) produced invalid nodes")));
    }
    Ok((nodes, weights))
}

/// Barycentric weights of Gauss–Jacobi points from the quadrature weights,
/// `(-1)^j sqrt((1 - x_j^2) w_j)`, rescaled to unit maximum modulus.
pub(crate) fn gauss_barycentric_weights(nodes: &[f64], weights: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = nodes
        .iter()
        .zip(weights)
        .enumerate()
        .map(|(j, (x, w))| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            s * ((1.0 - x) * (1.0 + x) * w).sqrt()
        })
        .collect();
    let max = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    raw.iter().map(|v| v / max).collect()
}

#[cfg(test)]
/// Barycentric weights `1 / prod_{k != j} (x_j - x_k)`, rescaled to unit
/// maximum modulus (only ratios matter).
pub(crate) fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut logs = vec![0.0; n];
    let mut signs = vec![1.0; n];
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let diff = nodes[j] - nodes[k];
                logs[j] -= diff.abs().ln();
                if diff < 0.0 {
                    signs[j] = -signs[j];
                }
            }
        }
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().zip(&signs).map(|(l, s)| s * (l - max).exp()).collect()
}

/// First and second spectral differentiation matrices on `nodes`.
pub(crate) fn differentiation_matrices(nodes: &[f64], bary: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = nodes.len();
    let mut d1 = DMatrix::<f64>::zeros(n, n);
    let mut d2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d1[(i, j)] = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
            }
        }
        // negative-sum trick: rows annihilate constants exactly
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d1[(i, j)]).collect();
        row.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        d1[(i, i)] = -row.iter().sum::<f64>();
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d2[(i, j)] = 2.0 * d1[(i, j)] * (d1[(i, i)] - 1.0 / (nodes[i] - nodes[j]));
            }
        }
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d2[(i, j)]).collect();
        row.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        d2[(i, i)] = -row.iter().sum::<f64>();
    }
    (d1, d2)
}

/// Row-stochastic barycentric interpolation matrix from `nodes` to `targets`.
pub(crate) fn interpolation_matrix(nodes: &[f64], bary: &[f64], targets: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut m = DMatrix::<f64>::zeros(targets.len(), n);
    for (k, &z) in targets.iter().enumerate() {
        if let Some(j) = nodes.iter().position(|&x| x == z) {
            m[(k, j)] = 1.0;
            continue;
        }
        let terms: Vec<f64> = (0..n).map(|j| bary[j] / (z - nodes[j])).collect();
        let denom: f64 = terms.iter().sum();
        for j in 0..n {
            m[(k, j)] = terms[j] / denom;
        }
    }
    m
}
