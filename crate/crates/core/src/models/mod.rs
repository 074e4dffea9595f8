//! Sampleable regularly varying laws on `R^d`.
//!
//! Besides the generic polar-independent model, three planar constructions
//! are provided whose tails are known in closed form; they are the stress
//! cases for the transformation results.

mod example1;
mod example2;
mod example3;
mod radial;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use example1::Example1;
pub use example2::{example2_transformed_tail, q_series, Example2};
pub use example3::Example3;
pub use radial::{RadialLaw, RadialSpec};

use crate::batch::SampleBatch;
use crate::error::{Error, Result};
use crate::geometry::{polar, EvalSet};
use crate::measure::{GainSpec, MeasureSpec, RadialGain, SpectralMeasure, SphereMap};
use crate::rng::{substream, Purpose, Rng, CHUNK_SIZE};

/// A law with tail index `α` that can be sampled and, where known, whose
/// tail `P{X/|X| ∈ B, |X| > r}` has a closed form.
pub trait RegVarModel: fmt::Debug + Send + Sync {
    fn alpha(&self) -> f64;

    fn dim(&self) -> usize;

    /// The limit measure `σ` with `r^α P{X/|X| ∈ B, |X| > r} → σ(B)`.
    fn spectral(&self) -> Option<&SpectralMeasure>;

    /// Writes one point into `out` (length `dim`). Points are never zero.
    fn sample_point(&self, rng: &mut Rng, out: &mut [f64]);

    /// `P{X/|X| ∈ B, |X| > r}` in closed form.
    fn exact_tail(&self, r: f64, set: &EvalSet) -> Option<f64>;

    /// `P{Y/|Y| ∈ B, |Y| > r}` for `Y = X·h(X/|X|)`, when known.
    fn exact_tail_with_gain(&self, _r: f64, _set: &EvalSet, _gain: &RadialGain) -> Option<f64> {
        None
    }

    /// `∫ h^p dσ` summed in closed form when `σ` is only stored truncated.
    fn gain_moment(&self, _gain: &RadialGain, _p: f64) -> Option<Result<f64>> {
        None
    }

    /// Whether `|X|` and `X/|X|` are independent.
    fn polar_independent(&self) -> bool {
        false
    }

    fn spec(&self) -> Option<ModelSpec>;
}

/// `b_n = n^{1/α}`.
pub fn normalizing_sequence(model: &dyn RegVarModel, n: u64) -> f64 {
    (n as f64).powf(1.0 / model.alpha())
}

/// Draws `n` points. Chunk `i` of [`CHUNK_SIZE`] points uses substream
/// `(seed, sampling, i)`, so the result does not depend on the thread count.
pub fn sample(model: &dyn RegVarModel, n: usize, seed: u64) -> Result<SampleBatch> {
    let dim = model.dim();
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK_SIZE))
        .into_par_iter()
        .map(|c| {
            let len = CHUNK_SIZE.min(n - c * CHUNK_SIZE);
            let mut rng = substream(seed, Purpose::Sampling, c as u64);
            let mut buf = vec![0.0; len * dim];
            for row in buf.chunks_exact_mut(dim) {
                model.sample_point(&mut rng, row);
            }
            buf
        })
        .collect();
    SampleBatch::from_rows(dim, &chunks.concat(), Some(seed))
}

/// Exact tail of `Y = X·h(X/|X|)`. Indicator gains reduce to the tail of `X`
/// on the intersected set; other gains defer to the model.
pub fn transformed_exact_tail(
    model: &dyn RegVarModel,
    gain: &RadialGain,
    r: f64,
    set: &EvalSet,
) -> Option<f64> {
    if let Some(GainSpec::IndicatorArc { arcs }) = gain.spec() {
        let restricted = set.as_arcs()?.intersect(arcs);
        return model.exact_tail(r, &EvalSet::Arcs(restricted));
    }
    model.exact_tail_with_gain(r, set, gain)
}

/// Direction and norm drawn independently from `σ` and a radial law.
#[derive(Debug, Clone)]
pub struct PolarIndependent {
    sigma: SpectralMeasure,
    radial: RadialLaw,
}

impl PolarIndependent {
    pub fn new(sigma: SpectralMeasure, radial: RadialLaw) -> Result<Self> {
        if (sigma.total_mass() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConstruction(format!(
                "spectral measure must be normalized, has mass {}",
                sigma.total_mass()
            )));
        }
        Ok(Self { sigma, radial })
    }

    pub fn radial(&self) -> &RadialLaw {
        &self.radial
    }
}

impl RegVarModel for PolarIndependent {
    fn alpha(&self) -> f64 {
        self.radial.alpha()
    }

    fn dim(&self) -> usize {
        self.sigma.dim()
    }

    fn spectral(&self) -> Option<&SpectralMeasure> {
        Some(&self.sigma)
    }

    fn sample_point(&self, rng: &mut Rng, out: &mut [f64]) {
        let dir = self.sigma.sample_direction(rng);
        let r = self.radial.sample(rng);
        for (o, u) in out.iter_mut().zip(dir.coords()) {
            *o = r * u;
        }
    }

    fn exact_tail(&self, r: f64, set: &EvalSet) -> Option<f64> {
        Some(self.sigma.measure_of(set).ok()? * self.radial.tail(r))
    }

    /// `∫_B P{R > r/h(θ)} σ(dθ)`.
    fn exact_tail_with_gain(&self, r: f64, set: &EvalSet, gain: &RadialGain) -> Option<f64> {
        let radial = self.radial;
        let h = gain.clone();
        let weight = move |d: &crate::geometry::Direction| {
            let v = h.eval(d);
            if v > 0.0 {
                radial.tail(r / v)
            } else {
                0.0
            }
        };
        if self.sigma.dim() == 2 {
            let h = gain.clone();
            let mut bp = gain.breakpoints().to_vec();
            bp.extend(gain.singularities().iter().map(|s| s.0));
            let g = RadialGain::from_angle_fn(
                move |t| {
                    let v = h.eval_angle(t);
                    if v > 0.0 {
                        radial.tail(r / v)
                    } else {
                        0.0
                    }
                },
                Some(1.0),
                bp,
            );
            self.sigma.reweight(&g, 1.0).ok()?.measure_of(set).ok()
        } else {
            let g = RadialGain::from_fn(weight, Some(1.0));
            self.sigma.reweight(&g, 1.0).ok()?.measure_of(set).ok()
        }
    }

    fn polar_independent(&self) -> bool {
        true
    }

    fn spec(&self) -> Option<ModelSpec> {
        Some(ModelSpec::PolarIndependent {
            alpha: self.alpha(),
            sigma: self.sigma.to_spec().ok()?,
            radial: RadialSpec::of(&self.radial),
        })
    }
}

/// The law of `|X| f(X/|X|)` for a sphere map `f`.
#[derive(Debug)]
pub struct MappedModel {
    inner: Box<dyn RegVarModel>,
    map: SphereMap,
    spectral: Option<SpectralMeasure>,
}

impl MappedModel {
    pub fn new(inner: Box<dyn RegVarModel>, map: SphereMap) -> Result<Self> {
        let spectral = inner.spectral().map(|s| s.pushforward(&map)).transpose()?;
        Ok(Self {
            inner,
            map,
            spectral,
        })
    }

    pub fn inner(&self) -> &dyn RegVarModel {
        self.inner.as_ref()
    }
}

impl RegVarModel for MappedModel {
    fn alpha(&self) -> f64 {
        self.inner.alpha()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn spectral(&self) -> Option<&SpectralMeasure> {
        self.spectral.as_ref()
    }

    fn sample_point(&self, rng: &mut Rng, out: &mut [f64]) {
        self.inner.sample_point(rng, out);
        let (r, dir) = polar(out).expect("models never produce the origin");
        let image = self.map.apply(&dir);
        for (o, u) in out.iter_mut().zip(image.coords()) {
            *o = r * u;
        }
    }

    /// Exact for step maps: `P{f(θ) ∈ B, R > r} = P{θ ∈ f⁻¹(B), R > r}`.
    fn exact_tail(&self, r: f64, set: &EvalSet) -> Option<f64> {
        let pre = self.map.steps()?.preimage(&set.as_arcs()?);
        self.inner.exact_tail(r, &EvalSet::Arcs(pre))
    }

    fn spec(&self) -> Option<ModelSpec> {
        None
    }
}

/// JSON form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    PolarIndependent {
        alpha: f64,
        sigma: MeasureSpec,
        #[serde(default = "pareto")]
        radial: RadialSpec,
    },
    Example1 {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "half")]
        amplitude: f64,
    },
    Example2 {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "half")]
        nu: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Example3 {
        #[serde(default = "one")]
        alpha: f64,
    },
}

fn pareto() -> RadialSpec {
    RadialSpec::Pareto
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_beta() -> f64 {
    1.2
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn RegVarModel>> {
        Ok(match self {
            ModelSpec::PolarIndependent {
                alpha,
                sigma,
                radial,
            } => Box::new(PolarIndependent::new(
                SpectralMeasure::from_spec(sigma)?,
                radial.build(*alpha)?,
            )?),
            ModelSpec::Example1 { alpha, amplitude } => {
                Box::new(Example1::new(*alpha, *amplitude)?)
            }
            ModelSpec::Example2 { alpha, nu, beta } => Box::new(Example2::new(*alpha, *nu, *beta)?),
            ModelSpec::Example3 { alpha } => Box::new(Example3::new(*alpha)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArcSet;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn uniform_pareto(alpha: f64) -> PolarIndependent {
        PolarIndependent::new(
            SpectralMeasure::uniform(),
            RadialLaw::pareto(alpha).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn polar_independent_examples() {
        let m = uniform_pareto(1.0);
        assert_eq!(m.exact_tail(2.0, &EvalSet::Full).unwrap(), 0.5);
        let d = PolarIndependent::new(SpectralMeasure::dirac(0.0), RadialLaw::pareto(3.0).unwrap())
            .unwrap();
        let away = EvalSet::Arcs(ArcSet::single(1.0, 2.0).unwrap());
        assert_eq!(d.exact_tail(5.0, &away).unwrap(), 0.0);
        let centers: Vec<(f64, f64)> = (0..4)
            .map(|i| (FRAC_PI_4 * (2 * i + 1) as f64, 0.25))
            .collect();
        let q = PolarIndependent::new(
            SpectralMeasure::from_angles(&centers).unwrap(),
            RadialLaw::pareto(2.0).unwrap(),
        )
        .unwrap();
        let quadrant = EvalSet::Arcs(ArcSet::single(0.0, FRAC_PI_2).unwrap());
        assert!((q.exact_tail(10.0, &quadrant).unwrap() - 0.0025).abs() < 1e-18);
    }

    #[test]
    fn unnormalized_sigma_rejected() {
        let s = SpectralMeasure::from_angles(&[(0.0, 2.0)]).unwrap();
        assert!(PolarIndependent::new(s, RadialLaw::pareto(1.0).unwrap()).is_err());
    }

    #[test]
    fn normalizing_sequence_examples() {
        assert!((normalizing_sequence(&uniform_pareto(2.0), 100) - 10.0).abs() < 1e-12);
        assert!((normalizing_sequence(&uniform_pareto(1.0), 1000) - 1000.0).abs() < 1e-9);
        assert!((normalizing_sequence(&uniform_pareto(0.5), 100) - 1e4).abs() < 1e-8);
    }

    #[test]
    fn sampling_is_deterministic_and_chunked() {
        let m = uniform_pareto(1.0);
        let n = CHUNK_SIZE + 100;
        let a = sample(&m, n, 7).unwrap();
        let b = sample(&m, n, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), n);
        assert!(a.norms().iter().all(|&r| r >= 1.0 - 1e-12));
        let c = sample(&m, n, 8).unwrap();
        assert_ne!(a.norms(), c.norms());
    }

    #[test]
    fn gain_tail_of_polar_model() {
        let m = uniform_pareto(1.0);
        let h = RadialGain::constant(2.0);
        let v = m.exact_tail_with_gain(10.0, &EvalSet::Full, &h).unwrap();
        assert!((v - 0.2).abs() < 1e-12);
        let ind = RadialGain::indicator_arc(ArcSet::single(0.0, PI).unwrap());
        let v = transformed_exact_tail(&m, &ind, 4.0, &EvalSet::Full).unwrap();
        assert!((v - 0.125).abs() < 1e-15);
    }

    #[test]
    fn mapped_model_tail_uses_preimage() {
        let m =
            MappedModel::new(Box::new(uniform_pareto(1.0)), SphereMap::quadrant_snap()).unwrap();
        let arc = EvalSet::Arcs(ArcSet::around(FRAC_PI_4, 0.1).unwrap());
        assert!((m.exact_tail(2.0, &arc).unwrap() - 0.125).abs() < 1e-15);
        let s = m.spectral().unwrap().angular_atoms().unwrap();
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn model_spec_parsing() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"kind":"polar_independent","alpha":1.5,
                "sigma":{"kind":"density","density":{"name":"uniform"}}}"#,
        )
        .unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.alpha(), 1.5);
        assert_eq!(m.spec().unwrap(), spec);
        let e: ModelSpec = serde_json::from_str(r#"{"kind":"example2"}"#).unwrap();
        assert_eq!(
            e,
            ModelSpec::Example2 {
                alpha: 1.0,
                nu: 0.5,
                beta: 1.2
            }
        );
    }
}
