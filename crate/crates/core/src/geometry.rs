//! Directions on the unit sphere, angles on the circle, evaluation sets and
//! polar decomposition of points in `R^d`.
//!
//! The circle is always parametrized by `[0, 2π)`. Evaluation sets are finite
//! unions of half-open arcs when `d = 2` and finite unions of spherical caps
//! when `d ≥ 3`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the Euclidean norm of a stored direction.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Angular tolerance under which two atoms are the same point.
pub const ATOM_TOLERANCE: f64 = 1e-12;

/// A point of the unit sphere `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    coords: Vec<f64>,
}

impl Direction {
    /// Wraps coordinates that are already of unit norm.
    pub fn from_unit(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: coords.len(),
            });
        }
        let norm = euclidean_norm(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "direction has norm {norm}, expected 1"
            )));
        }
        Ok(Self { coords })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalize(point: &[f64]) -> Result<Self> {
        polar(point).map(|(_, dir)| dir)
    }

    /// Builds the `d = 2` direction `(cos θ, sin θ)`.
    pub fn from_angle(angle: Angle) -> Self {
        let (s, c) = angle.value().sin_cos();
        Self { coords: vec![c, s] }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Angle of a `d = 2` direction.
    pub fn angle(&self) -> Result<Angle> {
        angle_of(self)
    }

    pub(crate) fn from_unit_unchecked(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// An angle in the canonical chart `[0, 2π)` of `S^1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    /// Reduces any finite real into `[0, 2π)`.
    pub fn new(theta: f64) -> Self {
        Self(wrap_angle(theta))
    }

    /// Converts an angle from the `(-π, π]` chart.
    pub fn from_signed(theta: f64) -> Self {
        Self::new(theta)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Representative in `(-π, π]`.
    pub fn signed(self) -> f64 {
        if self.0 > std::f64::consts::PI {
            self.0 - TAU
        } else {
            self.0
        }
    }
}

/// Reduces `theta` modulo `2π` into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Distance between two angles measured along the circle.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % TAU;
    d.min(TAU - d)
}

pub(crate) fn euclidean_norm(v: &[f64]) -> f64 {
    if v.len() == 2 {
        return v[0].hypot(v[1]);
    }
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * v.iter().map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

/// Splits a nonzero point into its norm and direction.
pub fn polar(point: &[f64]) -> Result<(f64, Direction)> {
    if point.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: point.len(),
        });
    }
    let norm = euclidean_norm(point);
    if norm == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    if !norm.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "point {point:?} has non-finite norm"
        )));
    }
    let coords = point.iter().map(|x| x / norm).collect();
    Ok((norm, Direction { coords }))
}

/// Angle of a direction on `S^1`.
pub fn angle_of(dir: &Direction) -> Result<Angle> {
    if dir.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dir.dim(),
        });
    }
    Ok(Angle::new(dir.coords[1].atan2(dir.coords[0])))
}

/// Inverse of [`angle_of`].
pub fn direction_of(angle: Angle) -> Direction {
    Direction::from_angle(angle)
}

/// A finite union of pairwise disjoint half-open arcs `[a, b)` of `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ArcSet {
    arcs: Vec<(f64, f64)>,
}

impl ArcSet {
    pub fn new(mut arcs: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &arcs {
            if !(a.is_finite() && b.is_finite() && 0.0 <= a && a < b && b <= TAU) {
                return Err(Error::InvalidArgument(format!(
                    "arc [{a}, {b}) is not within [0, 2π) with a < b"
                )));
            }
        }
        arcs.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in arcs.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "arcs [{}, {}) and [{}, {}) overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { arcs })
    }

    pub fn empty() -> Self {
        Self { arcs: Vec::new() }
    }

    /// The whole circle `[0, 2π)`.
    pub fn full() -> Self {
        Self {
            arcs: vec![(0.0, TAU)],
        }
    }

    /// A single arc `[a, b)`.
    pub fn single(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![(a, b)])
    }

    /// The arc running counterclockwise from `start` to `end`, split in two
    /// when it crosses the origin of the chart.
    pub fn wrapping(start: f64, end: f64) -> Result<Self> {
        let (s, e) = (wrap_angle(start), wrap_angle(end));
        if s < e {
            Self::new(vec![(s, e)])
        } else if s == e {
            Ok(Self::full())
        } else if e == 0.0 {
            Self::new(vec![(s, TAU)])
        } else {
            Self::new(vec![(0.0, e), (s, TAU)])
        }
    }

    /// Symmetric arc of half-width `half_width` around `center`.
    pub fn around(center: f64, half_width: f64) -> Result<Self> {
        Self::wrapping(center - half_width, center + half_width)
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn contains(&self, angle: Angle) -> bool {
        self.contains_value(angle.value())
    }

    pub(crate) fn contains_value(&self, t: f64) -> bool {
        self.arcs.iter().any(|&(a, b)| a <= t && t < b)
    }

    pub fn total_length(&self) -> f64 {
        self.arcs.iter().map(|(a, b)| b - a).sum()
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        let mut out = Vec::new();
        for &(a, b) in &self.arcs {
            for &(c, d) in &other.arcs {
                let (lo, hi) = (a.max(c), b.min(d));
                if lo < hi {
                    out.push((lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.0.total_cmp(&y.0));
        ArcSet { arcs: out }
    }

    /// Topological boundary on the circle: arc endpoints that are not shared
    /// with an adjacent arc. `2π` is reported as `0`.
    pub fn boundary_points(&self) -> Vec<f64> {
        let starts: Vec<f64> = self.arcs.iter().map(|a| a.0).collect();
        let ends: Vec<f64> = self.arcs.iter().map(|a| wrap_angle(a.1)).collect();
        let mut out = Vec::new();
        for &s in &starts {
            if !ends.contains(&s) {
                out.push(s);
            }
        }
        for &e in &ends {
            if !starts.contains(&e) {
                out.push(e);
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

impl TryFrom<Vec<[f64; 2]>> for ArcSet {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        ArcSet::new(v.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<ArcSet> for Vec<[f64; 2]> {
    fn from(s: ArcSet) -> Self {
        s.arcs.into_iter().map(|(a, b)| [a, b]).collect()
    }
}

/// A finite union of spherical caps `{x : <x, center> ≥ threshold}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapSet {
    caps: Vec<(Direction, f64)>,
}

impl CapSet {
    pub fn new(caps: Vec<(Direction, f64)>) -> Result<Self> {
        if let Some(d) = caps.first().map(|c| c.0.dim()) {
            for (center, threshold) in &caps {
                if center.dim() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: center.dim(),
                    });
                }
                if !(-1.0..=1.0).contains(threshold) {
                    return Err(Error::InvalidArgument(format!(
                        "cap threshold {threshold} outside [-1, 1]"
                    )));
                }
            }
        }
        Ok(Self { caps })
    }

    pub fn caps(&self) -> &[(Direction, f64)] {
        &self.caps
    }

    pub fn contains(&self, dir: &Direction) -> bool {
        self.caps.iter().any(|(c, t)| dir.dot(c) >= *t)
    }
}

/// The set `B` of a tail functional `P{X/|X| ∈ B, |X| > r}`.
#[derive(Debug, Clone, PartialEq)]
pub enum EvalSet {
    Full,
    Arcs(ArcSet),
    Caps(CapSet),
}

impl EvalSet {
    pub fn contains(&self, dir: &Direction) -> Result<bool> {
        match self {
            EvalSet::Full => Ok(true),
            EvalSet::Arcs(arcs) => Ok(arcs.contains(angle_of(dir)?)),
            EvalSet::Caps(caps) => Ok(caps.contains(dir)),
        }
    }

    /// The arc representation, with `Full` mapped to `[0, 2π)`.
    pub fn as_arcs(&self) -> Option<ArcSet> {
        match self {
            EvalSet::Full => Some(ArcSet::full()),
            EvalSet::Arcs(a) => Some(a.clone()),
            EvalSet::Caps(_) => None,
        }
    }
}

impl From<ArcSet> for EvalSet {
    fn from(a: ArcSet) -> Self {
        EvalSet::Arcs(a)
    }
}

impl From<CapSet> for EvalSet {
    fn from(c: CapSet) -> Self {
        EvalSet::Caps(c)
    }
}
