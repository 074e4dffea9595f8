//! Mixture of two non-regularly-varying sides whose average is exactly
//! Pareto.
//!
//! With probability ½ the point lies on the `+` side: `R` follows the
//! oscillating tail with `+a`, and a norm in `[n, n+1)` is placed on the ray
//! at signed angle `1/n`. The `−` side uses `−a` and angle `−1/n`. The mixture
//! has tail `r^{-α}` and spectral measure `δ_0`, while each side alone has no
//! limit.

use rand::Rng as _;

use super::{ModelSpec, RadialLaw, RegVarModel};
use crate::error::Result;
use crate::geometry::{wrap_angle, ArcSet, EvalSet};
use crate::measure::SpectralMeasure;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct Example1 {
    alpha: f64,
    amplitude: f64,
    plus: RadialLaw,
    minus: RadialLaw,
    sigma: SpectralMeasure,
}

impl Example1 {
    pub fn new(alpha: f64, amplitude: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            amplitude,
            plus: RadialLaw::oscillating(alpha, amplitude, 1.0)?,
            minus: RadialLaw::oscillating(alpha, amplitude, -1.0)?,
            sigma: SpectralMeasure::dirac(0.0),
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `P{R > r}` on one side (`sign = ±1`), i.e. `1 − F_i(r)`.
    pub fn side_tail(&self, sign: f64, r: f64) -> f64 {
        if sign > 0.0 {
            self.plus.tail(r)
        } else {
            self.minus.tail(r)
        }
    }

    /// `P{side, direction ∈ arcs, R > r}`.
    fn side_tail_in(&self, sign: f64, r: f64, arcs: &ArcSet) -> f64 {
        let law = if sign > 0.0 { &self.plus } else { &self.minus };
        arcs.arcs()
            .iter()
            .map(|&(a, b)| match ray_range(sign, a, b) {
                None => 0.0,
                Some((n1, n2)) => {
                    let m = n1.max(r.floor().max(1.0) as u64);
                    let upper = match n2 {
                        Some(n2) if m > n2 => return 0.0,
                        Some(n2) => (n2 + 1) as f64,
                        None => f64::INFINITY,
                    };
                    let lower = (m as f64).max(r);
                    if lower >= upper {
                        0.0
                    } else {
                        law.tail(lower) - law.tail(upper)
                    }
                }
            })
            .sum::<f64>()
            * 0.5
    }
}

fn ray_angle(sign: f64, n: u64) -> f64 {
    wrap_angle(sign / n as f64)
}

/// Ray indices `n` whose angle lies in `[a, b)`, as `[n1, n2]` with `None`
/// for an unbounded range. The angles are monotone in `n` on each side, so
/// the set is an interval; the closed-form bounds are corrected against the
/// exact floating-point angles.
fn ray_range(sign: f64, a: f64, b: f64) -> Option<(u64, Option<u64>)> {
    let inside = |n: u64| {
        let t = ray_angle(sign, n);
        a <= t && t < b
    };
    // Candidate bounds from the real-valued inequalities.
    let (lo, hi): (f64, f64) = if sign > 0.0 {
        // a ≤ 1/n < b
        let lo = if b > 1.0 {
            1.0
        } else {
            (1.0 / b).floor() + 1.0
        };
        let hi = if a <= 0.0 {
            f64::INFINITY
        } else {
            (1.0 / a).floor()
        };
        (lo, hi)
    } else {
        // a ≤ 2π − 1/n < b
        let tau = std::f64::consts::TAU;
        let lo = if tau - a >= 1.0 {
            1.0
        } else {
            (1.0 / (tau - a)).ceil()
        };
        let hi = if b >= tau {
            f64::INFINITY
        } else {
            (1.0 / (tau - b)).ceil() - 1.0
        };
        (lo, hi)
    };
    const CAP: f64 = 1e15;
    let mut n1 = lo.clamp(1.0, CAP) as u64;
    while n1 > 1 && inside(n1 - 1) {
        n1 -= 1;
    }
    while (n1 as f64) < hi.min(CAP) + 2.0 && !inside(n1) {
        n1 += 1;
    }
    if !inside(n1) {
        return None;
    }
    if hi >= CAP {
        return Some((n1, None));
    }
    let mut n2 = (hi.max(n1 as f64)) as u64;
    while n2 > n1 && !inside(n2) {
        n2 -= 1;
    }
    while inside(n2 + 1) {
        n2 += 1;
    }
    Some((n1, Some(n2)))
}

impl RegVarModel for Example1 {
    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn dim(&self) -> usize {
        2
    }

    fn spectral(&self) -> Option<&SpectralMeasure> {
        Some(&self.sigma)
    }

    fn sample_point(&self, rng: &mut Rng, out: &mut [f64]) {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let r = self.side_law(sign).sample(rng);
        let n = r.floor().max(1.0);
        let theta = sign / n;
        let (s, c) = theta.sin_cos();
        out[0] = r * c;
        out[1] = r * s;
    }

    fn exact_tail(&self, r: f64, set: &EvalSet) -> Option<f64> {
        let arcs = set.as_arcs()?;
        Some(self.side_tail_in(1.0, r, &arcs) + self.side_tail_in(-1.0, r, &arcs))
    }

    fn spec(&self) -> Option<ModelSpec> {
        Some(ModelSpec::Example1 {
            alpha: self.alpha,
            amplitude: self.amplitude,
        })
    }
}

impl Example1 {
    fn side_law(&self, sign: f64) -> &RadialLaw {
        if sign > 0.0 {
            &self.plus
        } else {
            &self.minus
        }
    }
}
