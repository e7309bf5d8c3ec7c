//! Numerical building blocks: Gaussian tail, Gauss-Hermite quadrature, the
//! J-function and its inverse, monotone cubic interpolation, bisection.

use crate::error::{Error, Result};
use std::f64::consts::{LN_2, PI, SQRT_2};
use std::sync::OnceLock;

/// Number of Gauss-Hermite nodes used for every Gaussian expectation.
pub const GH_NODES: usize = 96;

/// Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2` (libm erfc, < 1 ulp-class error).
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
pub fn q_inverse(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "Q^-1 argument {p} outside (0, 1)");
    bisect(|x| q_function(x) - p, -40.0, 40.0, 1e-13, false).expect("Q is monotone")
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Nodes and weights for `int e^{-x^2} f(x) dx` (Golub-free Newton refinement).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gh_table() -> &'static (Vec<f64>, Vec<f64>) {
    static TABLE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    TABLE.get_or_init(|| gauss_hermite(GH_NODES))
}

/// `E[f(X)]` for `X ~ Normal(mean, sd^2)` by Gauss-Hermite quadrature.
pub fn gaussian_expectation(mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gh_table();
    let s = x
        .iter()
        .zip(w)
        .map(|(&xi, &wi)| wi * f(mean + SQRT_2 * sd * xi))
        .sum::<f64>();
    s / PI.sqrt()
}

/// `log2(1 + e^{-x})` without overflow.
#[inline]
pub fn log2_one_plus_exp_neg(x: f64) -> f64 {
    let v = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    v / LN_2
}

/// Mutual information between a bit and a consistent Gaussian LLR with
/// standard deviation `sigma` (mean `sigma^2 / 2`).
pub fn j_function(sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return 0.0;
    }
    let v = 1.0 - gaussian_expectation(sigma * sigma / 2.0, sigma, log2_one_plus_exp_neg);
    v.clamp(0.0, 1.0)
}

/// Upper end of the `sigma` search range for [`j_inverse`].
pub const J_SIGMA_MAX: f64 = 200.0;

/// Inverse of [`j_function`] by bisection.
pub fn j_inverse(info: f64) -> f64 {
    if info <= 0.0 {
        return 0.0;
    }
    if info >= 1.0 {
        return J_SIGMA_MAX;
    }
    bisect(|s| j_function(s) - info, 0.0, J_SIGMA_MAX, 1e-12, true).unwrap_or(J_SIGMA_MAX)
}

/// Root of an increasing (`increasing = true`) or decreasing function on `[lo, hi]`.
pub fn bisect(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    increasing: bool,
) -> Result<f64> {
    let sgn = if increasing { 1.0 } else { -1.0 };
    let flo = sgn * f(lo);
    let fhi = sgn * f(hi);
    if flo > 0.0 || fhi < 0.0 {
        return Err(Error::NoConvergence(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sgn * f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("pchip needs at least two matching points".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("pchip abscissae must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let k = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(i) => i - 1,
        };
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}
