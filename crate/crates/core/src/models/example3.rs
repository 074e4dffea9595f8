//! Half the mass on the positive axis, half on the graph of a staircase.
//!
//! `R` is Pareto and the point is `(R, 0)` or `(R, g(R))` with equal
//! probability, where `g = 2^{-k}` on `(k, k+1]`. Both halves have spectral
//! measure `δ_0`, but the indicator of the open upper half-plane kills the
//! first half and keeps the second, so a bounded gain that is discontinuous
//! at the atom changes the limit.
//!
//! Tails are indexed by the first coordinate `x`, not by the norm
//! `√(x² + g²)`; the two differ by a relative `O(r^{-2})`.

use std::f64::consts::FRAC_PI_2;

use rand::Rng as _;

use super::{ModelSpec, RadialLaw, RegVarModel};
use crate::error::Result;
use crate::geometry::{ArcSet, EvalSet};
use crate::measure::SpectralMeasure;
use crate::rng::Rng;

/// Staircase levels stop halving here; `2^{-1000}` is still a normal double.
const LAST_LEVEL: u64 = 1000;

fn level(k: u64) -> f64 {
    (-(k.min(LAST_LEVEL) as f64)).exp2()
}

#[derive(Debug, Clone)]
pub struct Example3 {
    alpha: f64,
    radial: RadialLaw,
    sigma: SpectralMeasure,
}

impl Example3 {
    pub fn new(alpha: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            radial: RadialLaw::pareto(alpha)?,
            sigma: SpectralMeasure::dirac(0.0),
        })
    }

    /// `g(x) = 2^{-k}` for `x ∈ (k, k+1]`.
    pub fn staircase(x: f64) -> f64 {
        level((x.ceil() - 1.0).max(0.0) as u64)
    }

    fn tail(&self, x: f64) -> f64 {
        self.radial.tail(x)
    }

    /// `P{x ∈ (lo, hi]}` with `lo < hi`, zero otherwise.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi > lo {
            self.tail(lo) - self.tail(hi)
        } else {
            0.0
        }
    }

    /// `P{x > r, atan(g(x)/x) ∈ [a, b)}` for the graph half, unscaled.
    fn graph_tail_in_arc(&self, r: f64, a: f64, b: f64) -> f64 {
        if a >= FRAC_PI_2 {
            return 0.0;
        }
        // atan(g/x) ∈ [a, b) ⟺ g/tan b < x ≤ g/tan a.
        let lower = |g: f64| if b >= FRAC_PI_2 { 0.0 } else { g / b.tan() };
        let upper = |g: f64| if a > 0.0 { g / a.tan() } else { f64::INFINITY };
        let mut total = 0.0;
        let mut k = (r.floor() as u64).max(1);
        while k < LAST_LEVEL {
            let g = level(k);
            let (lo, hi) = (lower(g), upper(g));
            if hi <= k as f64 {
                // The window only moves left as k grows.
                return total;
            }
            if hi == f64::INFINITY && lo <= k as f64 {
                return total + self.tail((k as f64).max(r));
            }
            let from = (k as f64).max(r).max(lo);
            let to = ((k + 1) as f64).min(hi);
            total += self.mass(from, to);
            k += 1;
        }
        let g = level(LAST_LEVEL);
        let from = (k as f64).max(r).max(lower(g));
        total + self.mass(from, upper(g))
    }
}

impl RegVarModel for Example3 {
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
        let r = self.radial.sample(rng);
        out[0] = r;
        out[1] = if rng.random::<bool>() {
            0.0
        } else {
            Self::staircase(r)
        };
    }

    fn exact_tail(&self, r: f64, set: &EvalSet) -> Option<f64> {
        let arcs: ArcSet = set.as_arcs()?;
        let axis = if arcs.contains_value(0.0) {
            self.tail(r)
        } else {
            0.0
        };
        let graph: f64 = arcs
            .arcs()
            .iter()
            .map(|&(a, b)| self.graph_tail_in_arc(r, a, b))
            .sum();
        Some(0.5 * (axis + graph))
    }

    fn spec(&self) -> Option<ModelSpec> {
        Some(ModelSpec::Example3 { alpha: self.alpha })
    }
}
