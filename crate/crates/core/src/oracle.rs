//! Independent numerical oracles used by the validation suites: quadrature,
//! finite differences and least-squares fits. Nothing here calls into the
//! sampler or kernel code paths it is used to check.

use crate::targets::Potential;

/// `∫_a^b f` by `n`-point Gauss–Legendre quadrature.
pub fn gauss_legendre(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = legendre_nodes(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes.iter().zip(&weights).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

/// Nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Central differences of `f` at `w` with step `h`.
pub fn fd_gradient<P: Potential + ?Sized>(target: &P, w: &[f64], h: f64) -> Vec<f64> {
    let mut p = w.to_vec();
    (0..w.len())
        .map(|j| {
            p[j] = w[j] + h;
            let up = target.value(&p);
            p[j] = w[j] - h;
            let down = target.value(&p);
            p[j] = w[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central differences of `∇f` at `w`; entry `(i, j)` is `∂ⱼ ∂ᵢ f`.
pub fn fd_hessian<P: Potential + ?Sized>(target: &P, w: &[f64], h: f64) -> Vec<Vec<f64>> {
    let d = w.len();
    let mut out = vec![vec![0.0; d]; d];
    let mut p = w.to_vec();
    let mut gp = vec![0.0; d];
    let mut gm = vec![0.0; d];
    for j in 0..d {
        p[j] = w[j] + h;
        target.grad_into(&p, &mut gp);
        p[j] = w[j] - h;
        target.grad_into(&p, &mut gm);
        p[j] = w[j];
        for i in 0..d {
            out[i][j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    out
}

/// Least-squares line `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    LinearFit { slope, intercept, r_squared }
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        // n points are exact up to degree 2n − 1.
        let v = gauss_legendre(-1.0, 2.0, 5, |x| x.powi(9) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-10, "{v} vs {exact}");
        let (nodes, weights) = legendre_nodes(64);
        assert!((weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
        assert!(nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn quadrature_of_gaussian_kl() {
        // KL(N(0, 0.75) ‖ N(0, 0.5)) = ½(1.5 − 1 − ln 1.5).
        let lp = |x: f64, v: f64| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - x * x / (2.0 * v);
        let kl = gauss_legendre(-12.0, 12.0, 200, |x| lp(x, 0.75).exp() * (lp(x, 0.75) - lp(x, 0.5)));
        assert!((kl - 0.5 * (0.5 - 1.5f64.ln())).abs() < 1e-10);
    }

    #[test]
    fn linear_fit_recovers_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 2.0 * v).collect();
        let fit = linear_fit(&x, &y);
        assert!((fit.slope + 2.0).abs() < 1e-12 && (fit.intercept - 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }
}
