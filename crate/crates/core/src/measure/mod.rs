//! Finite measures on the unit sphere and the two operators that transform
//! them: the pushforward `μ = σ∘f⁻¹` under a sphere map and the reweighting
//! `dμ = h^α dσ` by a radial gain.
//!
//! Measures on `S^1` may carry a density with respect to `dθ`; in every
//! dimension they may be finite sums of atoms. Reweighting never renormalizes:
//! the total mass of the result is the tail constant of the transformed law.

mod density;
mod gain;
mod map;
mod spec;

use std::f64::consts::TAU;
use std::sync::Arc;

use rand::Rng as _;

pub(crate) use density::AngleFn;
pub use density::{Density, NamedDensity};
pub use gain::{GainSpec, RadialGain, RandomGainProcess, RandomGainSpec};
pub use map::{MapSpec, SphereMap, StepMap};
pub use spec::{AtomSpec, MeasureKind, MeasureSpec};

use crate::error::{Error, Result};
use crate::geometry::{
    angle_of, circular_distance, direction_of, euclidean_norm, wrap_angle, Angle, ArcSet,
    Direction, EvalSet, ATOM_TOLERANCE,
};
use crate::rng::{substream, Purpose, Rng};

/// Uniform grid size used by [`distance_ks`], before atom locations are added.
pub const KS_GRID: usize = 1 << 14;

/// Bins used to push a density forward under a map without step structure.
pub const PUSHFORWARD_BINS: usize = 1 << 16;

/// Default angular tolerance for matching atoms in [`distance_tv`].
pub const TV_TOLERANCE: f64 = 1e-6;

/// Default Monte Carlo budget per probe for random gain moments.
pub const MC_MOMENT_DRAWS: usize = 100_000;

/// Probe angles at which Monte Carlo moments of a density measure are taken.
const MC_MOMENT_PROBES: usize = 64;

/// Grid on which gains are checked for sign before reweighting a density.
const GAIN_PROBES: usize = 4096;

/// A point mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub direction: Direction,
    pub weight: f64,
}

impl Atom {
    pub fn new(direction: Direction, weight: f64) -> Self {
        Self { direction, weight }
    }

    /// An atom of the circle at angle `theta`.
    pub fn at_angle(theta: f64, weight: f64) -> Self {
        Self::new(direction_of(Angle::new(theta)), weight)
    }
}

#[derive(Debug, Clone)]
struct Atoms {
    dim: usize,
    atoms: Vec<Atom>,
    /// Angles of the atoms when `dim = 2`, sorted increasingly.
    angles: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Atoms {
    /// Merges atoms closer than the atom tolerance and drops zero weights.
    fn build(dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 2 {
            let items = atoms
                .into_iter()
                .map(|a| angle_of(&a.direction).map(|t| (t.value(), a)))
                .collect::<Result<Vec<_>>>()?;
            return Self::circle(items);
        }
        check_weights(atoms.iter(), dim)?;
        let atoms = merge_sphere(atoms.into_iter().filter(|a| a.weight > 0.0).collect());
        Ok(Self::finish(dim, atoms, Vec::new()))
    }

    /// Atoms of the circle with their angles already known, which avoids a
    /// round trip through coordinates.
    fn circle(items: Vec<(f64, Atom)>) -> Result<Self> {
        check_weights(items.iter().map(|i| &i.1), 2)?;
        let mut items: Vec<(f64, Atom)> = items.into_iter().filter(|i| i.1.weight > 0.0).collect();
        items.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, Atom)> = Vec::with_capacity(items.len());
        for (t, a) in items {
            match out.last_mut() {
                Some(last) if t - last.0 <= ATOM_TOLERANCE => last.1.weight += a.weight,
                _ => out.push((t, a)),
            }
        }
        if out.len() > 1 && out[0].0 + TAU - out[out.len() - 1].0 <= ATOM_TOLERANCE {
            let (_, last) = out.pop().unwrap();
            out[0].1.weight += last.weight;
        }
        let (angles, atoms) = out.into_iter().unzip();
        Ok(Self::finish(2, atoms, angles))
    }

    fn from_angle_weights(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::circle(
            pairs
                .into_iter()
                .map(|(t, w)| {
                    let t = wrap_angle(t);
                    (t, Atom::at_angle(t, w))
                })
                .collect(),
        )
    }

    fn finish(dim: usize, atoms: Vec<Atom>, angles: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = atoms
            .iter()
            .map(|a| {
                acc += a.weight;
                acc
            })
            .collect();
        Self {
            dim,
            atoms,
            angles,
            cumulative,
        }
    }

    fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// [`total`](Self::total), taken as exactly one when within `1e-12` of
    /// it, so that a normalized measure rebuilt from its atoms stays
    /// normalized.
    fn mass(&self) -> f64 {
        let t = self.total();
        if (t - 1.0).abs() <= 1e-12 {
            1.0
        } else {
            t
        }
    }

    fn map_weights(&self, mut f: impl FnMut(&Atom) -> Result<f64>) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| f(a).map(|w| Atom::new(a.direction.clone(), w)))
            .collect::<Result<Vec<_>>>()?;
        if self.dim == 2 {
            Self::circle(self.angles.iter().copied().zip(atoms).collect())
        } else {
            Self::build(self.dim, atoms)
        }
    }
}

fn check_weights<'a>(atoms: impl Iterator<Item = &'a Atom>, dim: usize) -> Result<()> {
    for a in atoms {
        if a.direction.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: a.direction.dim(),
            });
        }
        if !(a.weight >= 0.0 && a.weight.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "atom weight {} is not a finite nonnegative number",
                a.weight
            )));
        }
    }
    Ok(())
}

fn chord_angle(a: &Direction, b: &Direction) -> f64 {
    let diff: Vec<f64> = a
        .coords()
        .iter()
        .zip(b.coords())
        .map(|(x, y)| x - y)
        .collect();
    2.0 * (0.5 * euclidean_norm(&diff)).min(1.0).asin()
}

fn merge_sphere(atoms: Vec<Atom>) -> Vec<Atom> {
    let mut out: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out
            .iter_mut()
            .find(|o| chord_angle(&o.direction, &a.direction) <= ATOM_TOLERANCE)
        {
            Some(o) => o.weight += a.weight,
            None => out.push(a),
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Repr {
    Discrete(Atoms),
    Empirical(Atoms),
    Density(Density),
}

/// A finite measure on `S^{d-1}`.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    repr: Repr,
    total_mass: f64,
}

/// How `E[Z(θ)^α]` is obtained in [`SpectralMeasure::expected_gain_reweight`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentPath {
    Analytic,
    MonteCarlo { draws: usize, seed: u64 },
}

impl SpectralMeasure {
    fn from_atoms(kind: MeasureKind, dim: usize, atoms: Vec<Atom>) -> Result<Self> {
        let atoms = Atoms::build(dim, atoms)?;
        let total_mass = atoms.mass();
        let repr = match kind {
            MeasureKind::Empirical => Repr::Empirical(atoms),
            _ => Repr::Discrete(atoms),
        };
        Ok(Self { repr, total_mass })
    }

    fn with_atoms(&self, atoms: Atoms) -> Self {
        let total_mass = atoms.mass();
        let repr = match self.repr {
            Repr::Empirical(_) => Repr::Empirical(atoms),
            _ => Repr::Discrete(atoms),
        };
        Self { repr, total_mass }
    }

    fn from_density(d: Density) -> Self {
        let total_mass = d.total_mass();
        Self {
            repr: Repr::Density(d),
            total_mass,
        }
    }

    /// A finite sum of point masses. Atoms closer than `1e-12` are merged.
    pub fn discrete(atoms: Vec<Atom>) -> Result<Self> {
        let dim = atoms.first().ok_or(Error::EmptyMeasure)?.direction.dim();
        Self::from_atoms(MeasureKind::Discrete, dim, atoms)
    }

    /// Same as [`discrete`](Self::discrete), flagged as an estimate.
    pub fn empirical(atoms: Vec<Atom>) -> Result<Self> {
        let dim = atoms.first().ok_or(Error::EmptyMeasure)?.direction.dim();
        Self::from_atoms(MeasureKind::Empirical, dim, atoms)
    }

    /// Empirical point masses on the circle given as `(angle, weight)` pairs.
    pub fn empirical_from_angles(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let atoms = Atoms::from_angle_weights(pairs.iter().copied())?;
        let total_mass = atoms.mass();
        Ok(Self {
            repr: Repr::Empirical(atoms),
            total_mass,
        })
    }

    /// Point masses on the circle given as `(angle, weight)` pairs.
    pub fn from_angles(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        let atoms = Atoms::from_angle_weights(pairs.iter().copied())?;
        let total_mass = atoms.mass();
        Ok(Self {
            repr: Repr::Discrete(atoms),
            total_mass,
        })
    }

    /// Unit mass at angle `theta`.
    pub fn dirac(theta: f64) -> Self {
        Self::from_angles(&[(theta, 1.0)]).expect("one positive atom")
    }

    /// The normalized uniform measure on the circle.
    pub fn uniform() -> Self {
        Self::from_density(Density::named(NamedDensity::Uniform { scale: 1.0 }).unwrap())
    }

    /// A measure on the circle with density `d` with respect to `dθ`.
    pub fn with_density(d: Density) -> Result<Self> {
        let m = Self::from_density(d);
        if !(m.total_mass > 0.0 && m.total_mass.is_finite()) {
            return Err(Error::EmptyMeasure);
        }
        Ok(m)
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => a.dim,
            Repr::Density(_) => 2,
        }
    }

    pub fn kind(&self) -> MeasureKind {
        match self.repr {
            Repr::Discrete(_) => MeasureKind::Discrete,
            Repr::Empirical(_) => MeasureKind::Empirical,
            Repr::Density(_) => MeasureKind::Density,
        }
    }

    /// The atoms, sorted by angle on the circle.
    pub fn atoms(&self) -> Option<&[Atom]> {
        self.atom_store().map(|a| a.atoms.as_slice())
    }

    /// `(angle, weight)` for every atom of a measure on the circle.
    pub fn angular_atoms(&self) -> Option<Vec<(f64, f64)>> {
        let a = self.atom_store()?;
        (a.dim == 2).then(|| {
            a.angles
                .iter()
                .zip(&a.atoms)
                .map(|(&t, at)| (t, at.weight))
                .collect()
        })
    }

    pub fn density(&self) -> Option<&Density> {
        match &self.repr {
            Repr::Density(d) => Some(d),
            _ => None,
        }
    }

    fn atom_store(&self) -> Option<&Atoms> {
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => Some(a),
            Repr::Density(_) => None,
        }
    }

    fn require_circle(&self) -> Result<()> {
        match self.dim() {
            2 => Ok(()),
            d => Err(Error::DimensionMismatch {
                expected: 2,
                found: d,
            }),
        }
    }

    /// `c·σ`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {c}")));
        }
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                Ok(self.with_atoms(a.map_weights(|at| Ok(at.weight * c))?))
            }
            Repr::Density(d) => Ok(Self::from_density(d.scaled(c)?)),
        }
    }

    /// Rescales to total mass 1.
    pub fn normalize(&self) -> Result<Self> {
        if !(self.total_mass > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        if self.total_mass == 1.0 {
            return Ok(self.clone());
        }
        let t = self.total_mass;
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                Ok(self.with_atoms(a.map_weights(|at| Ok(at.weight / t))?))
            }
            Repr::Density(d) => Ok(Self::from_density(d.scaled(1.0 / t)?)),
        }
    }

    /// The image measure `σ∘f⁻¹`.
    ///
    /// Atoms are moved one by one, so mass is preserved exactly. A density is
    /// pushed forward exactly when the map is a step map and by binning into
    /// [`PUSHFORWARD_BINS`] cells otherwise; both give an atomic result.
    /// The identity map returns the measure unchanged.
    pub fn pushforward(&self, f: &SphereMap) -> Result<Self> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.dim(),
            });
        }
        if let Some(MapSpec::Identity { .. }) = f.spec() {
            return Ok(self.clone());
        }
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let moved = if a.dim == 2 {
                    let pairs = a
                        .angles
                        .iter()
                        .zip(&a.atoms)
                        .map(|(&t, at)| Ok((f.apply_angle(t)?, at.weight)))
                        .collect::<Result<Vec<_>>>()?;
                    Atoms::from_angle_weights(pairs)?
                } else {
                    let atoms = a
                        .atoms
                        .iter()
                        .map(|at| Atom::new(f.apply(&at.direction), at.weight))
                        .collect();
                    Atoms::build(a.dim, atoms)?
                };
                Ok(self.with_atoms(moved))
            }
            Repr::Density(d) => {
                let pairs: Vec<(f64, f64)> = match f.steps() {
                    Some(steps) => steps
                        .intervals()
                        .map(|(s, e, img)| (img, d.cdf(e) - d.cdf(s)))
                        .collect(),
                    None => {
                        let width = TAU / PUSHFORWARD_BINS as f64;
                        let mut prev = 0.0;
                        (0..PUSHFORWARD_BINS)
                            .map(|i| {
                                let hi = if i + 1 == PUSHFORWARD_BINS {
                                    TAU
                                } else {
                                    (i + 1) as f64 * width
                                };
                                let c = d.cdf(hi);
                                let mass = (c - prev).max(0.0);
                                prev = c;
                                let img = f.apply_angle((i as f64 + 0.5) * width)?;
                                Ok((img, mass))
                            })
                            .collect::<Result<Vec<_>>>()?
                    }
                };
                let atoms = Atoms::from_angle_weights(pairs)?;
                let total_mass = atoms.mass();
                Ok(Self {
                    repr: Repr::Discrete(atoms),
                    total_mass,
                })
            }
        }
    }

    /// The measure `h^α dσ`, not renormalized.
    pub fn reweight(&self, h: &RadialGain, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let atoms = a.map_weights(|at| {
                    let v = h.eval(&at.direction);
                    if !(v >= 0.0) {
                        return Err(Error::InvalidGain {
                            value: v,
                            probe: format!("{:?}", at.direction.coords()),
                        });
                    }
                    let w = at.weight * v.powf(alpha);
                    if !w.is_finite() {
                        return Err(Error::MomentDivergence(format!(
                            "gain is infinite on an atom at {:?}",
                            at.direction.coords()
                        )));
                    }
                    Ok(w)
                })?;
                Ok(self.with_atoms(atoms))
            }
            Repr::Density(d) => {
                h.validate_on_circle(GAIN_PROBES)?;
                let f = d.function();
                let g = h.clone();
                let product: AngleFn = Arc::new(move |t| {
                    let v = g.eval_angle(t);
                    if v == 0.0 {
                        0.0
                    } else {
                        f(t) * v.powf(alpha)
                    }
                });
                let mut bp = d.breakpoints().to_vec();
                bp.extend_from_slice(h.breakpoints());
                bp.extend(h.singularities().iter().map(|s| s.0));
                Ok(Self::from_density(Density::from_fn(product, bp)?))
            }
        }
    }

    /// The measure `E[Z(θ)^α] σ(dθ)`, not renormalized.
    ///
    /// Monte Carlo moments use `draws` samples per atom (or per probe angle
    /// for a density, interpolated periodically between 64 probes), each
    /// from its own substream of `seed`.
    pub fn expected_gain_reweight(
        &self,
        z: &RandomGainProcess,
        alpha: f64,
        path: MomentPath,
    ) -> Result<Self> {
        if let (RandomGainProcess::Deterministic(h), MomentPath::Analytic) = (z, path) {
            return self.reweight(h, alpha);
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        let checked = |v: f64, at: &str| -> Result<f64> {
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(Error::MomentDivergence(format!(
                    "gain moment of order {alpha} is {v} at {at}"
                )))
            }
        };
        let analytic = |dir: &Direction| -> Result<f64> {
            z.moment(dir, alpha).ok_or_else(|| {
                Error::Unsupported("no closed-form moment for this gain process".into())
            })
        };
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let mut index = 0u64;
                let atoms = a.map_weights(|at| {
                    let m = match path {
                        MomentPath::Analytic => analytic(&at.direction)?,
                        MomentPath::MonteCarlo { draws, seed } => {
                            let mut rng = substream(seed, Purpose::Moment, index);
                            z.moment_mc(&at.direction, alpha, draws, &mut rng)
                        }
                    };
                    index += 1;
                    Ok(at.weight * checked(m, &format!("{:?}", at.direction.coords()))?)
                })?;
                Ok(self.with_atoms(atoms))
            }
            Repr::Density(d) => {
                let f = d.function();
                let mut bp = d.breakpoints().to_vec();
                let multiplier: AngleFn = match path {
                    MomentPath::Analytic => {
                        if let RandomGainProcess::ExponentialScaled { mean } = z {
                            bp.extend_from_slice(mean.breakpoints());
                        }
                        for i in 0..GAIN_PROBES {
                            let t = TAU * i as f64 / GAIN_PROBES as f64;
                            checked(
                                analytic(&direction_of(Angle::new(t)))?,
                                &format!("angle {t}"),
                            )?;
                        }
                        let z = z.clone();
                        Arc::new(move |t| {
                            z.moment(&direction_of(Angle::new(t)), alpha)
                                .unwrap_or(f64::NAN)
                        })
                    }
                    MomentPath::MonteCarlo { draws, seed } => {
                        let values = (0..MC_MOMENT_PROBES)
                            .map(|j| {
                                let t = TAU * j as f64 / MC_MOMENT_PROBES as f64;
                                let mut rng = substream(seed, Purpose::Moment, j as u64);
                                let m = z.moment_mc(
                                    &direction_of(Angle::new(t)),
                                    alpha,
                                    draws,
                                    &mut rng,
                                );
                                checked(m, &format!("angle {t}"))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Arc::new(move |t| periodic_interpolation(&values, t))
                    }
                };
                let product: AngleFn = Arc::new(move |t| f(t) * multiplier(t));
                Ok(Self::from_density(Density::from_fn(product, bp)?))
            }
        }
    }

    /// `F(θ) = μ([0, θ])` on the circle.
    pub fn cdf(&self, theta: f64) -> Result<f64> {
        self.require_circle()?;
        Ok(match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let n = a.angles.partition_point(|&t| t <= theta);
                if n == 0 {
                    0.0
                } else {
                    a.cumulative[n - 1]
                }
            }
            Repr::Density(d) => d.cdf(theta),
        })
    }

    /// `μ([0, θ))`.
    fn cdf_left(&self, theta: f64) -> f64 {
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let n = a.angles.partition_point(|&t| t < theta);
                if n == 0 {
                    0.0
                } else {
                    a.cumulative[n - 1]
                }
            }
            Repr::Density(d) => d.cdf(theta),
        }
    }

    /// Generalized inverse `inf{θ : F(θ) ≥ u·total}` for `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> Result<Angle> {
        self.require_circle()?;
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::InvalidArgument(format!(
                "quantile level {u} outside [0, 1]"
            )));
        }
        let target = u * self.total_mass;
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                if a.atoms.is_empty() {
                    return Err(Error::EmptyMeasure);
                }
                let i = a
                    .cumulative
                    .partition_point(|&c| c < target)
                    .min(a.atoms.len() - 1);
                Ok(Angle::new(a.angles[i]))
            }
            Repr::Density(d) => Ok(Angle::new(d.inverse_cdf(target))),
        }
    }

    /// `μ(B)`.
    pub fn measure_of(&self, set: &EvalSet) -> Result<f64> {
        if let EvalSet::Full = set {
            return Ok(self.total_mass);
        }
        match (&self.repr, set) {
            (Repr::Discrete(a) | Repr::Empirical(a), EvalSet::Arcs(arcs)) => {
                self.require_circle()?;
                Ok(a.angles
                    .iter()
                    .zip(&a.atoms)
                    .filter(|(&t, _)| arcs.contains_value(t))
                    .map(|(_, at)| at.weight)
                    .sum())
            }
            (Repr::Discrete(a) | Repr::Empirical(a), EvalSet::Caps(caps)) => Ok(a
                .atoms
                .iter()
                .filter(|at| caps.contains(&at.direction))
                .map(|at| at.weight)
                .sum()),
            (Repr::Density(d), EvalSet::Arcs(arcs)) => Ok(arcs
                .arcs()
                .iter()
                .map(|&(lo, hi)| d.cdf(hi) - d.cdf(lo))
                .sum()),
            (Repr::Density(_), EvalSet::Caps(_)) => Err(Error::Unsupported(
                "cap sets on a density measure; use arc sets".into(),
            )),
            (_, EvalSet::Full) => unreachable!(),
        }
    }

    /// Mass of the atoms lying on the boundary of `set`.
    pub fn boundary_mass(&self, set: &ArcSet) -> Result<f64> {
        self.require_circle()?;
        let Some(a) = self.atom_store() else {
            return Ok(0.0);
        };
        let boundary = set.boundary_points();
        Ok(a.angles
            .iter()
            .zip(&a.atoms)
            .filter(|(&t, _)| {
                boundary
                    .iter()
                    .any(|&b| circular_distance(t, b) <= ATOM_TOLERANCE)
            })
            .map(|(_, at)| at.weight)
            .sum())
    }

    /// Draws a direction from `μ / μ(S)`.
    pub fn sample_direction(&self, rng: &mut Rng) -> Direction {
        match &self.repr {
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let u = rng.random::<f64>() * self.total_mass;
                let i = a
                    .cumulative
                    .partition_point(|&c| c <= u)
                    .min(a.atoms.len() - 1);
                a.atoms[i].direction.clone()
            }
            Repr::Density(d) => {
                let u = rng.random::<f64>() * self.total_mass;
                direction_of(Angle::new(d.inverse_cdf(u)))
            }
        }
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        match spec.kind {
            MeasureKind::Density => {
                if spec.dim != 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        found: spec.dim,
                    });
                }
                let named = spec.density.ok_or_else(|| {
                    Error::Parse("density measure needs a \"density\" field".into())
                })?;
                Self::with_density(Density::named(named)?)
            }
            kind => {
                if spec.atoms.is_empty() {
                    return Err(Error::EmptyMeasure);
                }
                if spec.dim == 2 && spec.atoms.iter().all(|a| a.coords.is_none()) {
                    // Keep stated angles exactly rather than via (cos θ, sin θ).
                    let pairs = spec
                        .atoms
                        .iter()
                        .map(|a| match a.angle {
                            Some(t) if a.weight > 0.0 => Ok((t, a.weight)),
                            Some(_) => Err(Error::InvalidArgument(format!(
                                "atom weight {} must be positive",
                                a.weight
                            ))),
                            None => Err(Error::Parse(
                                "atom needs exactly one of \"angle\" (d = 2) or \"coords\"".into(),
                            )),
                        })
                        .collect::<Result<Vec<_>>>()?;
                    return Ok(match kind {
                        MeasureKind::Empirical => Self::empirical_from_angles(&pairs)?,
                        _ => Self::from_angles(&pairs)?,
                    });
                }
                let atoms = spec
                    .atoms
                    .iter()
                    .map(|a| {
                        if !(a.weight > 0.0) {
                            return Err(Error::InvalidArgument(format!(
                                "atom weight {} must be positive",
                                a.weight
                            )));
                        }
                        let dir = match (&a.angle, &a.coords) {
                            (Some(t), None) if spec.dim == 2 => direction_of(Angle::new(*t)),
                            (None, Some(c)) => Direction::normalize(c)?,
                            _ => {
                                return Err(Error::Parse(
                                    "atom needs exactly one of \"angle\" (d = 2) or \"coords\""
                                        .into(),
                                ))
                            }
                        };
                        Ok(Atom::new(dir, a.weight))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::from_atoms(kind, spec.dim, atoms)
            }
        }
    }

    pub fn to_spec(&self) -> Result<MeasureSpec> {
        match &self.repr {
            Repr::Density(d) => {
                let named = d.named_form().ok_or_else(|| {
                    Error::Unsupported("only named densities have a JSON form".into())
                })?;
                Ok(MeasureSpec {
                    kind: MeasureKind::Density,
                    dim: 2,
                    atoms: Vec::new(),
                    density: Some(named),
                })
            }
            Repr::Discrete(a) | Repr::Empirical(a) => {
                let atoms = a
                    .atoms
                    .iter()
                    .enumerate()
                    .map(|(i, at)| AtomSpec {
                        angle: (a.dim == 2).then(|| a.angles[i]),
                        coords: (a.dim != 2).then(|| at.direction.coords().to_vec()),
                        weight: at.weight,
                    })
                    .collect();
                Ok(MeasureSpec {
                    kind: self.kind(),
                    dim: a.dim,
                    atoms,
                    density: None,
                })
            }
        }
    }
}

fn periodic_interpolation(values: &[f64], theta: f64) -> f64 {
    let n = values.len();
    let x = theta / TAU * n as f64;
    let i = (x.floor() as usize).min(n - 1);
    let frac = x - i as f64;
    values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
}

/// The map `θ ↦ F⁻¹(θ / 2π)` on the circle, which pushes the uniform law onto
/// `μ / μ(S^1)`.
///
/// For an atomic `μ` it is a step map sending `[2π·C_{i-1}, 2π·C_i)` to the
/// `i`-th atom, where `C_i` are the normalized cumulative weights.
pub fn quantile_transform_map(mu: &SpectralMeasure) -> Result<SphereMap> {
    mu.require_circle()?;
    if !(mu.total_mass > 0.0) {
        return Err(Error::EmptyMeasure);
    }
    match &mu.repr {
        Repr::Discrete(a) | Repr::Empirical(a) => {
            let mut starts = vec![0.0];
            let mut images = vec![a.angles[0]];
            for i in 1..a.atoms.len() {
                let s = TAU * (a.cumulative[i - 1] / mu.total_mass);
                if s >= TAU {
                    break;
                }
                if s > *starts.last().unwrap() {
                    starts.push(s);
                    images.push(a.angles[i]);
                } else {
                    *images.last_mut().unwrap() = a.angles[i];
                }
            }
            Ok(SphereMap::from_steps(
                StepMap::new(starts, images, vec![])?,
                "jumps at 2π times the cumulative weights",
            ))
        }
        Repr::Density(d) => {
            if let Some(NamedDensity::Uniform { .. }) = d.named_form() {
                return Ok(SphereMap::identity(2));
            }
            let d = d.clone();
            let total = mu.total_mass;
            Ok(SphereMap::from_angle_fn(
                move |t| d.inverse_cdf(t / TAU * total),
                "continuous where the density is positive",
            ))
        }
    }
}

/// Total variation `½ Σ |w_a − w_b|` between atomic measures, atoms being
/// matched within [`TV_TOLERANCE`].
pub fn distance_tv(a: &SpectralMeasure, b: &SpectralMeasure) -> Result<f64> {
    distance_tv_with(a, b, TV_TOLERANCE)
}

/// [`distance_tv`] with an explicit matching tolerance in radians.
pub fn distance_tv_with(a: &SpectralMeasure, b: &SpectralMeasure, tolerance: f64) -> Result<f64> {
    let (Some(sa), Some(sb)) = (a.atom_store(), b.atom_store()) else {
        return Err(Error::UnsupportedPair(
            "total variation needs two atomic measures; use the Kolmogorov distance".into(),
        ));
    };
    if sa.dim != sb.dim {
        return Err(Error::DimensionMismatch {
            expected: sa.dim,
            found: sb.dim,
        });
    }
    let mut diff = 0.0;
    if sa.dim == 2 {
        let mut items: Vec<(f64, f64)> = sa
            .angles
            .iter()
            .zip(&sa.atoms)
            .map(|(&t, at)| (t, at.weight))
            .chain(
                sb.angles
                    .iter()
                    .zip(&sb.atoms)
                    .map(|(&t, at)| (t, -at.weight)),
            )
            .collect();
        items.sort_by(|x, y| x.0.total_cmp(&y.0));
        // Single-linkage clusters along the circle; each carries w_a − w_b.
        let mut clusters: Vec<(f64, f64)> = Vec::new();
        for (t, w) in items {
            match clusters.last_mut() {
                Some(c) if t - c.0 <= tolerance => {
                    c.0 = t;
                    c.1 += w;
                }
                _ => clusters.push((t, w)),
            }
        }
        if clusters.len() > 1 {
            let first_angle = sa
                .angles
                .first()
                .copied()
                .unwrap_or(f64::INFINITY)
                .min(sb.angles.first().copied().unwrap_or(f64::INFINITY));
            if first_angle + TAU - clusters[clusters.len() - 1].0 <= tolerance {
                let (_, w) = clusters.pop().unwrap();
                clusters[0].1 += w;
            }
        }
        diff = clusters.iter().map(|c| c.1.abs()).sum();
    } else {
        let mut clusters: Vec<(&Direction, f64)> = Vec::new();
        let tagged = sa
            .atoms
            .iter()
            .map(|at| (at, at.weight))
            .chain(sb.atoms.iter().map(|at| (at, -at.weight)));
        for (at, w) in tagged {
            match clusters
                .iter_mut()
                .find(|c| chord_angle(c.0, &at.direction) <= tolerance)
            {
                Some(c) => c.1 += w,
                None => clusters.push((&at.direction, w)),
            }
        }
        diff += clusters.iter().map(|c| c.1.abs()).sum::<f64>();
    }
    Ok(0.5 * diff)
}

/// Kolmogorov distance between the normalized CDFs of two measures on the
/// circle, taken over a [`KS_GRID`]-point grid plus both sides of every atom.
pub fn distance_ks(a: &SpectralMeasure, b: &SpectralMeasure) -> Result<f64> {
    a.require_circle()?;
    b.require_circle()?;
    let (ma, mb) = (a.total_mass, b.total_mass);
    if !(ma > 0.0 && mb > 0.0) {
        return Err(Error::EmptyMeasure);
    }
    let mut sup: f64 = 0.0;
    for j in 0..KS_GRID {
        let t = TAU * j as f64 / KS_GRID as f64;
        sup = sup.max((a.cdf(t)? / ma - b.cdf(t)? / mb).abs());
    }
    let atom_angles = a
        .atom_store()
        .into_iter()
        .chain(b.atom_store())
        .flat_map(|s| s.angles.iter().copied());
    for t in atom_angles {
        sup = sup.max((a.cdf(t)? / ma - b.cdf(t)? / mb).abs());
        sup = sup.max((a.cdf_left(t) / ma - b.cdf_left(t) / mb).abs());
    }
    Ok(sup)
}
