//! Direction-dependent radial gains `h : S^{d-1} → R_+` and random gain
//! processes `Z(θ)`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::density::AngleFn;
use crate::error::{Error, Result};
use crate::geometry::{angle_of, direction_of, wrap_angle, Angle, ArcSet, Direction};
use crate::rng::{open_unit, Rng};

type DirGainFn = Arc<dyn Fn(&Direction) -> f64 + Send + Sync>;

/// Last index `k` of the `I_k` intervals whose endpoints are listed as
/// quadrature breakpoints; beyond it the intervals are below 1e-12 wide.
const EXAMPLE2_BREAKPOINT_DEPTH: u32 = 42;

/// A nonnegative gain on the sphere.
#[derive(Clone)]
pub struct RadialGain {
    gain: DirGainFn,
    angular: Option<AngleFn>,
    declared_bound: Option<f64>,
    breakpoints: Vec<f64>,
    singularities: Vec<(f64, f64)>,
    spec: Option<GainSpec>,
}

impl fmt::Debug for RadialGain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGain")
            .field("spec", &self.spec)
            .field("declared_bound", &self.declared_bound)
            .finish()
    }
}

impl RadialGain {
    /// A gain on any sphere.
    pub fn from_fn<F>(f: F, declared_bound: Option<f64>) -> Self
    where
        F: Fn(&Direction) -> f64 + Send + Sync + 'static,
    {
        Self {
            gain: Arc::new(f),
            angular: None,
            declared_bound,
            breakpoints: Vec::new(),
            singularities: Vec::new(),
            spec: None,
        }
    }

    /// A gain on the circle given on angles. `breakpoints` are the angles
    /// where the gain jumps or blows up.
    pub fn from_angle_fn<F>(f: F, declared_bound: Option<f64>, breakpoints: Vec<f64>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let angular: AngleFn = Arc::new(f);
        let inner = angular.clone();
        Self {
            gain: Arc::new(move |d: &Direction| match angle_of(d) {
                Ok(a) => inner(a.value()),
                Err(_) => f64::NAN,
            }),
            angular: Some(angular),
            declared_bound,
            breakpoints,
            singularities: Vec::new(),
            spec: None,
        }
    }

    pub fn constant(value: f64) -> Self {
        let mut g = Self::from_fn(move |_| value, Some(value));
        g.angular = Some(Arc::new(move |_| value));
        g.spec = Some(GainSpec::Constant { value });
        g
    }

    /// `offset + amplitude·cos θ`.
    pub fn cosine(offset: f64, amplitude: f64) -> Self {
        let mut g = Self::from_angle_fn(
            move |t| offset + amplitude * t.cos(),
            Some(offset + amplitude.abs()),
            vec![],
        );
        g.spec = Some(GainSpec::Cosine { offset, amplitude });
        g
    }

    /// Piecewise constant: `[0, b_1) → v_0, [b_1, b_2) → v_1, …`.
    pub fn step(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
            || breakpoints.iter().any(|&b| !(b > 0.0 && b < TAU))
        {
            return Err(Error::InvalidArgument(
                "step gain needs increasing breakpoints in (0, 2π) and one more value".into(),
            ));
        }
        let bound = values.iter().copied().fold(0.0, f64::max);
        let (b, v) = (breakpoints.clone(), values.clone());
        let mut g = Self::from_angle_fn(
            move |t| v[b.partition_point(|&x| x <= t)],
            Some(bound),
            breakpoints.clone(),
        );
        g.spec = Some(GainSpec::Step {
            breakpoints,
            values,
        });
        Ok(g)
    }

    /// `𝟙_A` for an arc set `A`.
    pub fn indicator_arc(arcs: ArcSet) -> Self {
        let set = arcs.clone();
        let mut bp: Vec<f64> = arcs.arcs().iter().flat_map(|&(a, b)| [a, b]).collect();
        bp.dedup();
        let mut g = Self::from_angle_fn(
            move |t| if set.contains_value(t) { 1.0 } else { 0.0 },
            Some(1.0),
            bp,
        );
        g.spec = Some(GainSpec::IndicatorArc { arcs });
        g
    }

    /// `|θ − center|^{-γ}` with the circular distance; unbounded.
    pub fn power_cusp(center: f64, gamma: f64) -> Self {
        let c = wrap_angle(center);
        let mut g = Self::from_angle_fn(
            move |t| {
                let d = (t - c).abs();
                d.min(TAU - d).powf(-gamma)
            },
            None,
            vec![c],
        );
        g.singularities.push((c, gamma));
        g.spec = Some(GainSpec::PowerCusp { center, gamma });
        g
    }

    /// The unbounded staircase gain `h = Σ k^β 𝟙_{I_k}` built around the atoms
    /// `b_k = π − π/2^{k−1}`.
    ///
    /// Near the accumulation point `π` the intervals shrink below double
    /// precision; there the gain evaluates to 0.
    pub fn example2(beta: f64) -> Self {
        let mut bp = vec![FRAC_PI_4, 7.0 * FRAC_PI_4, PI];
        for k in 2..=EXAMPLE2_BREAKPOINT_DEPTH {
            let (lo, hi) = example2_interval(k);
            bp.push(lo);
            bp.push(hi);
        }
        bp.sort_by(f64::total_cmp);
        let mut g = Self::from_angle_fn(move |t| example2_gain_value(t, beta), None, bp);
        g.spec = Some(GainSpec::Example2Gain { beta });
        g
    }

    pub fn eval(&self, dir: &Direction) -> f64 {
        (self.gain)(dir)
    }

    pub fn eval_angle(&self, theta: f64) -> f64 {
        match &self.angular {
            Some(f) => f(theta),
            None => (self.gain)(&direction_of(Angle::new(theta))),
        }
    }

    pub fn declared_bound(&self) -> Option<f64> {
        self.declared_bound
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Declared power singularities `(center, exponent)`.
    pub fn singularities(&self) -> &[(f64, f64)] {
        &self.singularities
    }

    pub fn spec(&self) -> Option<&GainSpec> {
        self.spec.as_ref()
    }

    /// Pointwise product `h₁·h₂`.
    pub fn product(&self, other: &RadialGain) -> RadialGain {
        let declared_bound = match (self.declared_bound, other.declared_bound) {
            (Some(a), Some(b)) => Some(a * b),
            _ => None,
        };
        let mut breakpoints = self.breakpoints.clone();
        breakpoints.extend_from_slice(&other.breakpoints);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let (g1, g2) = (self.gain.clone(), other.gain.clone());
        let angular = match (&self.angular, &other.angular) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.clone(), b.clone());
                Some(Arc::new(move |t| a(t) * b(t)) as AngleFn)
            }
            _ => None,
        };
        let mut singularities = self.singularities.clone();
        singularities.extend_from_slice(&other.singularities);
        RadialGain {
            gain: Arc::new(move |d| g1(d) * g2(d)),
            angular,
            declared_bound,
            breakpoints,
            singularities,
            spec: None,
        }
    }

    /// Checks `h ≥ 0` (and `h ≤ bound` when declared) on the given probes.
    pub fn validate_on(&self, probes: &[Direction]) -> Result<()> {
        for p in probes {
            let v = self.eval(p);
            let above_bound = self.declared_bound.is_some_and(|b| v > b * (1.0 + 1e-12));
            if v.is_nan() || v < 0.0 || above_bound {
                return Err(Error::InvalidGain {
                    value: v,
                    probe: format!("{:?}", p.coords()),
                });
            }
        }
        Ok(())
    }

    /// [`validate_on`](Self::validate_on) over an equispaced grid of the circle.
    pub fn validate_on_circle(&self, points: usize) -> Result<()> {
        let probes: Vec<Direction> = (0..points)
            .map(|i| direction_of(Angle::new(TAU * i as f64 / points as f64)))
            .collect();
        self.validate_on(&probes)
    }
}

fn example2_interval(k: u32) -> (f64, f64) {
    let b = PI - PI / 2f64.powi(k as i32 - 1);
    let w = PI / 2f64.powi(k as i32 + 1);
    (b - w, b + w)
}

fn example2_gain_value(theta: f64, beta: f64) -> f64 {
    if !(FRAC_PI_4..=7.0 * FRAC_PI_4).contains(&theta) {
        return 1.0;
    }
    let d = PI - theta;
    if d <= 0.0 {
        return 0.0;
    }
    // d ∈ (3π/2^{k+1}, 5π/2^{k+1}) inside I_k.
    let guess = ((5.0 * PI / d).log2().floor() as i64 - 1).max(2);
    for k in (guess - 1).max(2)..=guess + 1 {
        if k > 1100 {
            break;
        }
        let (lo, hi) = example2_interval(k as u32);
        if lo < theta && theta < hi {
            return (k as f64).powf(beta);
        }
    }
    0.0
}

/// Serializable named gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GainSpec {
    Constant {
        value: f64,
    },
    Cosine {
        offset: f64,
        amplitude: f64,
    },
    Step {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Example2Gain {
        beta: f64,
    },
    IndicatorArc {
        arcs: ArcSet,
    },
    PowerCusp {
        center: f64,
        gamma: f64,
    },
}

impl GainSpec {
    pub fn build(&self) -> Result<RadialGain> {
        Ok(match self {
            GainSpec::Constant { value } => {
                if !(*value >= 0.0 && value.is_finite()) {
                    return Err(Error::InvalidGain {
                        value: *value,
                        probe: "constant".into(),
                    });
                }
                RadialGain::constant(*value)
            }
            GainSpec::Cosine { offset, amplitude } => {
                if offset - amplitude.abs() < 0.0 {
                    return Err(Error::InvalidGain {
                        value: offset - amplitude.abs(),
                        probe: "cosine minimum".into(),
                    });
                }
                RadialGain::cosine(*offset, *amplitude)
            }
            GainSpec::Step {
                breakpoints,
                values,
            } => {
                if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
                    return Err(Error::InvalidGain {
                        value: *v,
                        probe: "step value".into(),
                    });
                }
                RadialGain::step(breakpoints.clone(), values.clone())?
            }
            GainSpec::Example2Gain { beta } => RadialGain::example2(*beta),
            GainSpec::IndicatorArc { arcs } => RadialGain::indicator_arc(arcs.clone()),
            GainSpec::PowerCusp { center, gamma } => {
                if !(*gamma > 0.0) {
                    return Err(Error::InvalidArgument("power cusp needs gamma > 0".into()));
                }
                RadialGain::power_cusp(*center, *gamma)
            }
        })
    }
}

/// A random gain process `Z(θ)`, independent of the vector it scales.
#[derive(Debug, Clone)]
pub enum RandomGainProcess {
    /// `Z(θ) = h(θ)` almost surely.
    Deterministic(RadialGain),
    /// `Z(θ) = m(θ)·E` with `E` standard exponential.
    ExponentialScaled { mean: RadialGain },
    /// `Z(θ) ~ Uniform[lo, hi]` for every `θ`.
    Uniform { lo: f64, hi: f64 },
}

impl RandomGainProcess {
    pub fn sample_at(&self, dir: &Direction, rng: &mut Rng) -> f64 {
        match self {
            RandomGainProcess::Deterministic(h) => h.eval(dir),
            RandomGainProcess::ExponentialScaled { mean } => mean.eval(dir) * -open_unit(rng).ln(),
            RandomGainProcess::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
        }
    }

    /// Closed-form `E[Z(θ)^p]`.
    pub fn moment(&self, dir: &Direction, p: f64) -> Option<f64> {
        match self {
            RandomGainProcess::Deterministic(h) => Some(h.eval(dir).powf(p)),
            RandomGainProcess::ExponentialScaled { mean } => {
                Some(mean.eval(dir).powf(p) * libm::tgamma(p + 1.0))
            }
            RandomGainProcess::Uniform { lo, hi } => {
                if hi == lo {
                    Some(lo.powf(p))
                } else {
                    Some((hi.powf(p + 1.0) - lo.powf(p + 1.0)) / ((p + 1.0) * (hi - lo)))
                }
            }
        }
    }

    /// Monte Carlo estimate of `E[Z(θ)^p]` from `draws` samples.
    pub fn moment_mc(&self, dir: &Direction, p: f64, draws: usize, rng: &mut Rng) -> f64 {
        let sum: f64 = (0..draws).map(|_| self.sample_at(dir, rng).powf(p)).sum();
        sum / draws as f64
    }

    /// Bounded when every path is bounded by a declared constant.
    pub fn deterministic_gain(&self) -> Option<&RadialGain> {
        match self {
            RandomGainProcess::Deterministic(h) => Some(h),
            _ => None,
        }
    }
}

/// Serializable random gain processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RandomGainSpec {
    RandomExponential { mean: GainSpec },
    RandomUniform { lo: f64, hi: f64 },
    Deterministic { gain: GainSpec },
}

impl RandomGainSpec {
    pub fn build(&self) -> Result<RandomGainProcess> {
        Ok(match self {
            RandomGainSpec::RandomExponential { mean } => RandomGainProcess::ExponentialScaled {
                mean: mean.build()?,
            },
            RandomGainSpec::RandomUniform { lo, hi } => {
                if !(0.0 <= *lo && lo <= hi && hi.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "uniform gain needs 0 ≤ lo ≤ hi, got [{lo}, {hi}]"
                    )));
                }
                RandomGainProcess::Uniform { lo: *lo, hi: *hi }
            }
            RandomGainSpec::Deterministic { gain } => {
                RandomGainProcess::Deterministic(gain.build()?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    #[test]
    fn example2_gain_values() {
        let beta = 1.2;
        let h = RadialGain::example2(beta);
        let b2 = PI - PI / 2.0;
        assert!((h.eval_angle(b2) - 2f64.powf(beta)).abs() < 1e-12);
        assert_eq!(h.eval_angle(PI - 1e-9), 0.0);
        assert_eq!(h.eval_angle(0.0), 1.0);
        assert_eq!(h.eval_angle(7.0 * FRAC_PI_4 + 0.01), 1.0);
        assert_eq!(h.eval_angle(0.3 * PI), 0.0);
        for k in 1..=45u32 {
            let b = PI - PI / 2f64.powi(k as i32 - 1);
            let v = h.eval_angle(b);
            assert!((v - (k as f64).powf(beta)).abs() < 1e-9 * v, "k = {k}: {v}");
        }
        assert!(h.declared_bound().is_none());
    }

    #[test]
    fn indicator_and_cusp() {
        let h = RadialGain::indicator_arc(ArcSet::single(1.0, 2.0).unwrap());
        assert_eq!(h.eval_angle(1.5), 1.0);
        assert_eq!(h.eval_angle(2.0), 0.0);
        let c = RadialGain::power_cusp(PI, 0.2);
        assert!((c.eval_angle(PI - 0.5) - 0.5f64.powf(-0.2)).abs() < 1e-15);
        assert!((c.eval_angle(0.0) - PI.powf(-0.2)).abs() < 1e-15);
    }

    #[test]
    fn validation_catches_negative_and_bound() {
        let g = RadialGain::from_angle_fn(|t| t.cos(), None, vec![]);
        assert!(g.validate_on_circle(64).is_err());
        let g = RadialGain::from_angle_fn(|_| 3.0, Some(2.0), vec![]);
        assert!(g.validate_on_circle(8).is_err());
        assert!(RadialGain::cosine(1.0, 0.5)
            .validate_on_circle(1024)
            .is_ok());
    }

    #[test]
    fn random_moments() {
        let d = direction_of(Angle::new(0.0));
        let z = RandomGainProcess::Uniform { lo: 0.0, hi: 2.0 };
        assert!((z.moment(&d, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let e = RandomGainProcess::ExponentialScaled {
            mean: RadialGain::constant(1.0),
        };
        assert!((e.moment(&d, 2.0).unwrap() - 2.0).abs() < 1e-13);
        let mut rng = substream(3, Purpose::Moment, 0);
        let mc = e.moment_mc(&d, 2.0, 200_000, &mut rng);
        assert!((mc - 2.0).abs() < 0.05, "{mc}");
    }

    #[test]
    fn spec_parsing() {
        let g: GainSpec =
            serde_json::from_str(r#"{"kind":"indicator_arc","arcs":[[0.5,1.0]]}"#).unwrap();
        assert_eq!(g.build().unwrap().eval_angle(0.7), 1.0);
        let bad: GainSpec = serde_json::from_str(r#"{"kind":"constant","value":-1}"#).unwrap();
        assert!(bad.build().is_err());
        let z: RandomGainSpec = serde_json::from_str(
            r#"{"kind":"random_exponential","mean":{"kind":"cosine","offset":1,"amplitude":0.5}}"#,
        )
        .unwrap();
        assert!(matches!(
            z.build().unwrap(),
            RandomGainProcess::ExponentialScaled { .. }
        ));
    }
}
