//! Angular densities on `S^1` with respect to Lebesgue measure `dθ`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, tanh_sinh};

/// Cells of the cumulative table used for non-analytic densities.
const TABLE_CELLS: usize = 4096;

pub(crate) type AngleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Named densities with closed-form CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum NamedDensity {
    /// `scale / 2π`.
    Uniform {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · (1 + amplitude·cos θ) / 2π`, requires `|amplitude| ≤ 1`.
    CosineBump {
        amplitude: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl NamedDensity {
    fn eval(&self, theta: f64) -> f64 {
        match *self {
            NamedDensity::Uniform { scale } => scale / TAU,
            NamedDensity::CosineBump { amplitude, scale } => {
                scale * (1.0 + amplitude * theta.cos()) / TAU
            }
        }
    }

    fn cdf(&self, theta: f64) -> f64 {
        match *self {
            NamedDensity::Uniform { scale } => scale * theta / TAU,
            NamedDensity::CosineBump { amplitude, scale } => {
                scale * (theta + amplitude * theta.sin()) / TAU
            }
        }
    }

    fn scaled(&self, c: f64) -> Self {
        match *self {
            NamedDensity::Uniform { scale } => NamedDensity::Uniform { scale: scale * c },
            NamedDensity::CosineBump { amplitude, scale } => NamedDensity::CosineBump {
                amplitude,
                scale: scale * c,
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let (scale, ok) = match *self {
            NamedDensity::Uniform { scale } => (scale, true),
            NamedDensity::CosineBump { amplitude, scale } => (scale, amplitude.abs() <= 1.0),
        };
        if !(scale.is_finite() && scale > 0.0 && ok) {
            return Err(Error::InvalidArgument(format!("invalid density {self:?}")));
        }
        Ok(())
    }
}

/// A nonnegative density on `[0, 2π)` together with its cumulative table.
#[derive(Clone)]
pub struct Density {
    f: AngleFn,
    breakpoints: Vec<f64>,
    named: Option<NamedDensity>,
    table: Option<Arc<CdfTable>>,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("named", &self.named)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

struct CdfTable {
    cuts: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Density {
    pub fn named(named: NamedDensity) -> Result<Self> {
        named.validate()?;
        Ok(Self {
            f: Arc::new(move |t| named.eval(t)),
            breakpoints: Vec::new(),
            named: Some(named),
            table: None,
        })
    }

    /// A density given by a closure. `breakpoints` lists the angles where the
    /// function jumps or has an integrable singularity.
    pub fn from_fn(f: AngleFn, mut breakpoints: Vec<f64>) -> Result<Self> {
        breakpoints.retain(|&b| b > 0.0 && b < TAU);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let table = CdfTable::build(&f, &breakpoints)?;
        Ok(Self {
            f,
            breakpoints,
            named: None,
            table: Some(Arc::new(table)),
        })
    }

    pub fn named_form(&self) -> Option<NamedDensity> {
        self.named
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (self.f)(theta)
    }

    pub(crate) fn function(&self) -> AngleFn {
        self.f.clone()
    }

    /// `∫_0^θ f`, for `θ ∈ [0, 2π]`.
    pub fn cdf(&self, theta: f64) -> f64 {
        let theta = theta.clamp(0.0, TAU);
        match (&self.named, &self.table) {
            (Some(n), _) => n.cdf(theta),
            (None, Some(t)) => t.cdf(&self.f, &self.breakpoints, theta),
            (None, None) => unreachable!("closure densities always carry a table"),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf(TAU)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        if let Some(n) = self.named {
            return Density::named(n.scaled(c));
        }
        let f = self.f.clone();
        Density::from_fn(Arc::new(move |t| c * f(t)), self.breakpoints.clone())
    }

    /// Smallest `x` with `cdf(x) ≥ target`.
    pub fn inverse_cdf(&self, target: f64) -> f64 {
        let total = self.total_mass();
        if target <= 0.0 {
            return 0.0;
        }
        if target >= total {
            return last_support_point(self);
        }
        let (mut lo, mut hi) = match &self.table {
            Some(t) => t.bracket(target),
            None => (0.0, TAU),
        };
        // Safeguarded Newton on the monotone CDF.
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = self.cdf(x) - target;
            if fx == 0.0 {
                return x;
            }
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
                break;
            }
            let d = self.eval(x);
            let newton = x - fx / d;
            x = if d > 0.0 && newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        hi
    }
}

fn last_support_point(d: &Density) -> f64 {
    let total = d.total_mass();
    let (mut lo, mut hi) = (0.0, TAU);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if d.cdf(mid) >= total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn touches(breakpoints: &[f64], x: f64) -> bool {
    breakpoints.contains(&x)
}

fn piece<F: Fn(f64) -> f64>(f: &F, breakpoints: &[f64], lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        return 0.0;
    }
    if touches(breakpoints, lo) || touches(breakpoints, hi) {
        tanh_sinh(f, lo, hi, 1e-13).value
    } else {
        gauss_legendre(f, lo, hi)
    }
}

impl CdfTable {
    fn build(f: &AngleFn, breakpoints: &[f64]) -> Result<Self> {
        let mut cuts: Vec<f64> = (0..=TABLE_CELLS)
            .map(|i| TAU * i as f64 / TABLE_CELLS as f64)
            .collect();
        cuts.extend_from_slice(breakpoints);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut cumulative = Vec::with_capacity(cuts.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let probe = f(mid);
            if !(probe >= 0.0) {
                return Err(Error::InvalidGain {
                    value: probe,
                    probe: format!("density at angle {mid}"),
                });
            }
            let v = piece(&|t| f(t), breakpoints, w[0], w[1]);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::MomentDivergence(format!(
                    "density integral over [{}, {}] is {v}",
                    w[0], w[1]
                )));
            }
            acc += v;
            cumulative.push(acc);
        }
        Ok(Self { cuts, cumulative })
    }

    fn cell(&self, theta: f64) -> usize {
        let idx = self.cuts.partition_point(|&c| c <= theta);
        idx.saturating_sub(1).min(self.cuts.len() - 2)
    }

    fn cdf(&self, f: &AngleFn, breakpoints: &[f64], theta: f64) -> f64 {
        let i = self.cell(theta);
        let start = self.cuts[i];
        if theta == start {
            return self.cumulative[i];
        }
        if theta >= self.cuts[i + 1] {
            return self.cumulative[i + 1];
        }
        let end = self.cuts[i + 1];
        if touches(breakpoints, end) && !touches(breakpoints, start) {
            self.cumulative[i + 1] - piece(&|t| f(t), breakpoints, theta, end)
        } else {
            self.cumulative[i] + piece(&|t| f(t), breakpoints, start, theta)
        }
    }

    fn bracket(&self, target: f64) -> (f64, f64) {
        let idx = self.cumulative.partition_point(|&c| c < target);
        let hi = idx.min(self.cuts.len() - 1);
        let lo = hi.saturating_sub(1);
        (self.cuts[lo], self.cuts[hi])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn uniform_cdf_and_inverse() {
        let d = Density::named(NamedDensity::Uniform { scale: 1.0 }).unwrap();
        assert_eq!(d.cdf(PI), 0.5);
        assert!((d.inverse_cdf(0.25) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn table_density_matches_closed_form() {
        let f: AngleFn = Arc::new(|t: f64| (1.0 + 0.5 * t.cos()).powi(2) / TAU);
        let d = Density::from_fn(f, vec![]).unwrap();
        let exact = |t: f64| (1.125 * t + t.sin() + 0.0625 * (2.0 * t).sin()) / TAU;
        for t in [0.0, 0.3, 1.0, PI, 4.0, 6.0, TAU] {
            assert!((d.cdf(t) - exact(t)).abs() < 1e-14, "t = {t}");
        }
        let x = d.inverse_cdf(0.7);
        assert!((exact(x) - 0.7).abs() < 1e-13);
    }

    #[test]
    fn singular_density_mass() {
        let f: AngleFn = Arc::new(|t: f64| (t - PI).abs().powf(-0.2) / TAU);
        let d = Density::from_fn(f, vec![PI]).unwrap();
        let exact = 2.0 * PI.powf(0.8) / 0.8 / TAU;
        assert!((d.total_mass() - exact).abs() < 1e-10);
        assert!((d.cdf(PI) - exact / 2.0).abs() < 1e-10);
    }

    #[test]
    fn negative_density_rejected() {
        let f: AngleFn = Arc::new(|t: f64| t.cos());
        assert!(Density::from_fn(f, vec![]).is_err());
    }
}
