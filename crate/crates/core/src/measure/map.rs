//! Maps of the sphere into itself.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::density::AngleFn;
use super::spec::MeasureSpec;
use super::SpectralMeasure;
use crate::error::{Error, Result};
use crate::geometry::{angle_of, direction_of, wrap_angle, Angle, ArcSet, Direction};

type DirFn = Arc<dyn Fn(&Direction) -> Direction + Send + Sync>;

/// A piecewise-constant map of the circle.
///
/// `[starts[i], starts[i+1])` is sent to `images[i]` (the last interval ends
/// at `2π`). `exceptions` override single points; they carry no mass under a
/// measure without atoms there and are ignored by [`StepMap::preimage`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepMap {
    starts: Vec<f64>,
    images: Vec<f64>,
    exceptions: Vec<(f64, f64)>,
}

impl StepMap {
    pub fn new(starts: Vec<f64>, images: Vec<f64>, exceptions: Vec<(f64, f64)>) -> Result<Self> {
        if starts.is_empty() || starts.len() != images.len() || starts[0] != 0.0 {
            return Err(Error::InvalidArgument(
                "step map needs matching starts/images with starts[0] = 0".into(),
            ));
        }
        if starts.windows(2).any(|w| w[0] >= w[1]) || *starts.last().unwrap() >= TAU {
            return Err(Error::InvalidArgument(
                "step starts must increase within [0, 2π)".into(),
            ));
        }
        let images = images.into_iter().map(wrap_angle).collect();
        let exceptions = exceptions
            .into_iter()
            .map(|(a, b)| (wrap_angle(a), wrap_angle(b)))
            .collect();
        Ok(Self {
            starts,
            images,
            exceptions,
        })
    }

    pub fn image(&self, theta: f64) -> f64 {
        if let Some(&(_, img)) = self.exceptions.iter().find(|(p, _)| *p == theta) {
            return img;
        }
        let i = self
            .starts
            .partition_point(|&s| s <= theta)
            .saturating_sub(1);
        self.images[i]
    }

    /// `(start, end, image)` for every step.
    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.starts.iter().enumerate().map(move |(i, &s)| {
            let end = self.starts.get(i + 1).copied().unwrap_or(TAU);
            (s, end, self.images[i])
        })
    }

    /// Union of the steps whose image lies in `set`.
    pub fn preimage(&self, set: &ArcSet) -> ArcSet {
        let mut arcs: Vec<(f64, f64)> = Vec::new();
        for (s, e, img) in self.intervals() {
            if set.contains(Angle::new(img)) {
                match arcs.last_mut() {
                    Some(last) if last.1 == s => last.1 = e,
                    _ => arcs.push((s, e)),
                }
            }
        }
        ArcSet::new(arcs).expect("steps are disjoint and ordered")
    }

    fn then(&self, outer: &SphereMap) -> Result<StepMap> {
        let images = self
            .images
            .iter()
            .map(|&t| outer.apply_angle(t))
            .collect::<Result<Vec<_>>>()?;
        let exceptions = self
            .exceptions
            .iter()
            .map(|&(p, t)| outer.apply_angle(t).map(|v| (p, v)))
            .collect::<Result<Vec<_>>>()?;
        StepMap::new(self.starts.clone(), images, exceptions)
    }
}

/// A measurable map `f : S^{d-1} → S^{d-1}`.
#[derive(Clone)]
pub struct SphereMap {
    dim: usize,
    map: DirFn,
    angular: Option<AngleFn>,
    steps: Option<Arc<StepMap>>,
    discontinuity_note: String,
    spec: Option<MapSpec>,
}

impl fmt::Debug for SphereMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphereMap")
            .field("dim", &self.dim)
            .field("steps", &self.steps)
            .field("discontinuity_note", &self.discontinuity_note)
            .finish()
    }
}

impl SphereMap {
    /// A general map in dimension `dim`. The closure must return unit vectors.
    pub fn from_fn<F>(dim: usize, f: F, note: impl Into<String>) -> Self
    where
        F: Fn(&Direction) -> Direction + Send + Sync + 'static,
    {
        Self {
            dim,
            map: Arc::new(f),
            angular: None,
            steps: None,
            discontinuity_note: note.into(),
            spec: None,
        }
    }

    /// A circle map given on angles.
    pub fn from_angle_fn<F>(f: F, note: impl Into<String>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let angular: AngleFn = Arc::new(move |t| wrap_angle(f(t)));
        let inner = angular.clone();
        Self {
            dim: 2,
            map: Arc::new(move |d: &Direction| {
                let t = angle_of(d).expect("circle map applied to a circle direction");
                direction_of(Angle::new(inner(t.value())))
            }),
            angular: Some(angular),
            steps: None,
            discontinuity_note: note.into(),
            spec: None,
        }
    }

    pub fn from_steps(steps: StepMap, note: impl Into<String>) -> Self {
        let steps = Arc::new(steps);
        let s = steps.clone();
        let mut map = Self::from_angle_fn(move |t| s.image(t), note);
        map.steps = Some(steps);
        map
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = if dim == 2 {
            Self::from_angle_fn(|t| t, "continuous")
        } else {
            Self::from_fn(dim, |d| d.clone(), "continuous")
        };
        m.spec = Some(MapSpec::Identity { dim });
        m
    }

    /// `f ≡ θ₀`.
    pub fn constant(angle: f64) -> Self {
        let theta = wrap_angle(angle);
        let mut m = Self::from_steps(
            StepMap::new(vec![0.0], vec![theta], vec![]).unwrap(),
            "continuous",
        );
        m.spec = Some(MapSpec::Constant { angle });
        m
    }

    /// Snaps every angle to the centre of its quadrant.
    pub fn quadrant_snap() -> Self {
        let steps = StepMap::new(
            vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2],
            vec![FRAC_PI_4, 3.0 * FRAC_PI_4, 5.0 * FRAC_PI_4, 7.0 * FRAC_PI_4],
            vec![],
        )
        .unwrap();
        let mut m = Self::from_steps(steps, "jumps at the quadrant boundaries 0, π/2, π, 3π/2");
        m.spec = Some(MapSpec::QuadrantSnap);
        m
    }

    /// The sign map of the planar counterexample: `(0, π] → π/2`,
    /// `0 → 0`, `(π, 2π) → 3π/2`.
    pub fn sign_map() -> Self {
        let steps = StepMap::new(
            vec![0.0, PI],
            vec![FRAC_PI_2, 3.0 * FRAC_PI_2],
            vec![(0.0, 0.0), (PI, FRAC_PI_2)],
        )
        .unwrap();
        let mut m = Self::from_steps(steps, "discontinuous at 0 and π");
        m.spec = Some(MapSpec::SignMap);
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn discontinuity_note(&self) -> &str {
        &self.discontinuity_note
    }

    pub fn steps(&self) -> Option<&StepMap> {
        self.steps.as_deref()
    }

    pub fn spec(&self) -> Option<&MapSpec> {
        self.spec.as_ref()
    }

    pub(crate) fn with_spec(mut self, spec: MapSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn apply(&self, dir: &Direction) -> Direction {
        let out = (self.map)(dir);
        debug_assert!(
            (crate::geometry::euclidean_norm(out.coords()) - 1.0).abs() <= 1e-12,
            "sphere map produced a non-unit vector"
        );
        out
    }

    /// Image of an angle under a circle map.
    pub fn apply_angle(&self, theta: f64) -> Result<f64> {
        match &self.angular {
            Some(f) => Ok(f(theta)),
            None if self.dim == 2 => {
                angle_of(&self.apply(&direction_of(Angle::new(theta)))).map(|a| a.value())
            }
            None => Err(Error::DimensionMismatch {
                expected: 2,
                found: self.dim,
            }),
        }
    }

    /// `outer ∘ self`.
    pub fn then(&self, outer: &SphereMap) -> Result<SphereMap> {
        if self.dim != outer.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: outer.dim,
            });
        }
        let note = format!(
            "composition; inner: {}; outer: {}",
            self.discontinuity_note, outer.discontinuity_note
        );
        if let Some(steps) = &self.steps {
            return Ok(SphereMap::from_steps(steps.then(outer)?, note));
        }
        if let (Some(f), Some(g)) = (&self.angular, &outer.angular) {
            let (f, g) = (f.clone(), g.clone());
            return Ok(SphereMap::from_angle_fn(move |t| g(f(t)), note));
        }
        let (f, g) = (self.map.clone(), outer.map.clone());
        Ok(SphereMap::from_fn(self.dim, move |d| g(&f(d)), note))
    }
}

/// Serializable named maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSpec {
    Identity {
        #[serde(default = "two")]
        dim: usize,
    },
    Constant {
        angle: f64,
    },
    QuadrantSnap,
    QuantileTransform {
        target: MeasureSpec,
    },
    SignMap,
    Step {
        breakpoints: Vec<f64>,
        images: Vec<f64>,
    },
}

fn two() -> usize {
    2
}

impl MapSpec {
    pub fn build(&self) -> Result<SphereMap> {
        match self {
            MapSpec::Identity { dim } => Ok(SphereMap::identity(*dim)),
            MapSpec::Constant { angle } => Ok(SphereMap::constant(*angle)),
            MapSpec::QuadrantSnap => Ok(SphereMap::quadrant_snap()),
            MapSpec::QuantileTransform { target } => {
                let mu = SpectralMeasure::from_spec(target)?;
                Ok(super::quantile_transform_map(&mu)?.with_spec(self.clone()))
            }
            MapSpec::SignMap => Ok(SphereMap::sign_map()),
            MapSpec::Step {
                breakpoints,
                images,
            } => {
                let mut starts = vec![0.0];
                starts.extend(breakpoints.iter().copied());
                let steps = StepMap::new(starts, images.clone(), vec![])?;
                Ok(
                    SphereMap::from_steps(steps, "jumps at the step breakpoints")
                        .with_spec(self.clone()),
                )
            }
        }
    }
}
