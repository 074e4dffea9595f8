//! One-dimensional quadrature used by the density measures.
//!
//! Smooth pieces use a fixed Gauss–Legendre rule; pieces that touch a
//! declared breakpoint (a jump or an integrable singularity of the integrand)
//! use double-exponential tanh–sinh, which tolerates endpoint singularities.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

const GL_ORDER: usize = 16;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

fn gauss_legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| legendre_nodes(GL_ORDER))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Fixed-order Gauss–Legendre on `[a, b]`.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (nodes, weights) = gauss_legendre_rule();
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

/// Tanh–sinh quadrature on `[a, b]` with relative tolerance `tol`.
///
/// Nodes at which the integrand is not finite are skipped; such nodes only
/// occur within rounding distance of a singular endpoint.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Integral {
    if a == b {
        return Integral {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let width = b - a;
    let t_max = 6.5;
    let eval = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    // Sum over the nodes t = j*h for odd j (or all j at level 0).
    let pair_sum = |h: f64, step: usize, start: usize| -> f64 {
        let mut s = 0.0;
        let mut j = start;
        loop {
            let t = j as f64 * h;
            if t > t_max {
                break;
            }
            let u = FRAC_PI_2 * t.sinh();
            let e = (2.0 * u).exp();
            let delta = 1.0 / (1.0 + e);
            if !delta.is_finite() || delta == 0.0 {
                break;
            }
            let w = std::f64::consts::PI * delta * (1.0 - delta) * t.cosh();
            let left = a + width * delta;
            let right = b - width * delta;
            let mut terms = 0.0;
            if left > a {
                terms += eval(left);
            }
            if right < b {
                terms += eval(right);
            }
            s += w * terms;
            j += step;
        }
        s
    };

    let mut h = 0.5;
    let mut sum = 0.5 * FRAC_PI_2 * eval(0.5 * (a + b)) + pair_sum(h, 1, 1);
    let mut estimate = width * h * sum;
    let mut error = f64::INFINITY;
    let mut converged = false;
    for level in 1..=12 {
        h *= 0.5;
        sum += pair_sum(h, 2, 1);
        let next = width * h * sum;
        error = (next - estimate).abs();
        estimate = next;
        if level >= 3 && error <= tol * estimate.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    Integral {
        value: estimate,
        error,
        converged,
    }
}

/// Integrates `f` over `[a, b]`, splitting at every breakpoint inside the
/// interval. Pieces touching a breakpoint use tanh–sinh; the others use
/// composite Gauss–Legendre on eight equal panels.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breakpoints: &[f64]) -> Integral {
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    let touches = |x: f64| breakpoints.contains(&x);
    let mut total = Integral {
        value: 0.0,
        error: 0.0,
        converged: true,
    };
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let piece = if touches(lo) || touches(hi) {
            tanh_sinh(f, lo, hi, 1e-13)
        } else {
            let panels = 8;
            let step = (hi - lo) / panels as f64;
            let value = (0..panels)
                .map(|i| {
                    let p0 = lo + step * i as f64;
                    let p1 = if i + 1 == panels { hi } else { p0 + step };
                    gauss_legendre(f, p0, p1)
                })
                .sum();
            Integral {
                value,
                error: 0.0,
                converged: true,
            }
        };
        total.value += piece.value;
        total.error += piece.error;
        total.converged &= piece.converged;
    }
    total
}
