//! Spherical maps and radial gains, applied to sample batches and to limit
//! measures.

use rayon::prelude::*;

use crate::batch::SampleBatch;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, EvalSet};
use crate::measure::{RadialGain, RandomGainProcess, SpectralMeasure, SphereMap};
use crate::rng::{substream, Purpose, CHUNK_SIZE};

/// `Q = m_α × σ`, with `Q((r, ∞) × B) = σ(B) r^{-α}`.
#[derive(Debug, Clone)]
pub struct LimitMeasure {
    alpha: f64,
    spectral: SpectralMeasure,
}

impl LimitMeasure {
    pub fn new(alpha: f64, spectral: SpectralMeasure) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha, spectral })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spectral(&self) -> &SpectralMeasure {
        &self.spectral
    }

    /// `Q((r, ∞) × B)` for `r > 0`.
    pub fn eval(&self, r: f64, set: &EvalSet) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "radius must be positive, got {r}"
            )));
        }
        Ok(self.spectral.measure_of(set)? * r.powf(-self.alpha))
    }
}

fn check_dim(batch: &SampleBatch, dim: usize) -> Result<()> {
    if batch.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: batch.dim(),
            found: dim,
        });
    }
    Ok(())
}

/// `Y = |X| f(X/|X|)`. Norms are copied, not recomputed.
pub fn spherical_map_apply(batch: &SampleBatch, f: &SphereMap) -> Result<SampleBatch> {
    check_dim(batch, f.dim())?;
    let dim = batch.dim();
    let n = batch.len();
    let mut dirs = vec![Vec::with_capacity(n); dim];
    let mut angles = Vec::new();
    if let Some(theta) = batch.angles() {
        angles.reserve(n);
        for &t in theta {
            let image = wrap_angle(f.apply_angle(t)?);
            let (s, c) = image.sin_cos();
            dirs[0].push(c);
            dirs[1].push(s);
            angles.push(image);
        }
    } else {
        for i in 0..n {
            let image = f.apply(&batch.direction(i));
            for (col, u) in dirs.iter_mut().zip(image.coords()) {
                col.push(*u);
            }
        }
    }
    Ok(SampleBatch::from_polar(
        dim,
        batch.seed(),
        batch.norms().to_vec(),
        dirs,
        angles,
        batch.zero_count(),
    ))
}

/// Keeps the points with positive gain, scaling their coordinates and
/// norms; the others are counted in `zero_count`.
fn scale_norms(batch: &SampleBatch, gains: &[f64]) -> SampleBatch {
    let dim = batch.dim();
    let keep: Vec<usize> = (0..batch.len()).filter(|&i| gains[i] > 0.0).collect();
    let norms = keep.iter().map(|&i| batch.norms()[i] * gains[i]).collect();
    let coords = (0..dim)
        .map(|j| keep.iter().map(|&i| batch.coord(j)[i] * gains[i]).collect())
        .collect();
    let dirs = (0..dim)
        .map(|j| keep.iter().map(|&i| batch.dir_coord(j)[i]).collect())
        .collect();
    let angles = batch
        .angles()
        .map(|a| keep.iter().map(|&i| a[i]).collect())
        .unwrap_or_default();
    let dropped = batch.len() - keep.len();
    SampleBatch::from_parts(
        dim,
        batch.seed(),
        coords,
        norms,
        dirs,
        angles,
        batch.zero_count() + dropped,
    )
}

fn checked_gain(v: f64, i: usize) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidGain {
            value: v,
            probe: format!("sample {i}"),
        })
    }
}

/// `Y = X h(X/|X|)`.
pub fn radial_scale_apply(batch: &SampleBatch, h: &RadialGain) -> Result<SampleBatch> {
    let gains = match batch.angles() {
        Some(theta) => theta
            .iter()
            .enumerate()
            .map(|(i, &t)| checked_gain(h.eval_angle(t), i))
            .collect::<Result<Vec<_>>>()?,
        None => (0..batch.len())
            .map(|i| checked_gain(h.eval(&batch.direction(i)), i))
            .collect::<Result<Vec<_>>>()?,
    };
    Ok(scale_norms(batch, &gains))
}

/// `Y = X Z(X/|X|)` with one independent draw per point. Point `i` uses
/// substream `(seed, gain, i / CHUNK_SIZE)`, so the result does not depend
/// on the thread count.
pub fn randomized_scale_apply(
    batch: &SampleBatch,
    z: &RandomGainProcess,
    seed: u64,
) -> Result<SampleBatch> {
    let n = batch.len();
    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(CHUNK_SIZE))
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, Purpose::Gain, c as u64);
            (c * CHUNK_SIZE..n.min((c + 1) * CHUNK_SIZE))
                .map(|i| checked_gain(z.sample_at(&batch.direction(i), &mut rng), i))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(scale_norms(batch, &chunks.concat()))
}

/// The limit of `|X| f(X/|X|)`: same `α`, spectral measure `σ f⁻¹`.
pub fn limit_pushforward_spherical(q: &LimitMeasure, f: &SphereMap) -> Result<LimitMeasure> {
    LimitMeasure::new(q.alpha, q.spectral.pushforward(f)?)
}

/// The limit of `X h(X/|X|)` for a bounded gain: same `α`, spectral
/// measure `h^α dσ`.
pub fn limit_pushforward_radial(q: &LimitMeasure, h: &RadialGain) -> Result<LimitMeasure> {
    if h.declared_bound().is_none() {
        return Err(Error::UnboundedGain);
    }
    LimitMeasure::new(q.alpha, q.spectral.reweight(h, q.alpha)?)
}

/// `∫ h^{α+ε} dσ`, or `MomentDivergence` when it is infinite.
pub fn moment_condition(
    sigma: &SpectralMeasure,
    h: &RadialGain,
    alpha: f64,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let p = alpha + epsilon;
    if let Some(d) = sigma.density() {
        for &(center, gamma) in h.singularities() {
            // |θ − c|^{-γp} is not integrable at c when γp ≥ 1.
            let near = [center - 1e-9, center + 1e-9];
            if gamma * p >= 1.0 && near.iter().any(|&t| d.eval(wrap_angle(t)) > 0.0) {
                return Err(Error::MomentDivergence(format!(
                    "|θ − {center}|^(-{gamma}·{p}) is not integrable"
                )));
            }
        }
    }
    let value = sigma.reweight(h, p)?.total_mass();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::MomentDivergence(format!("∫ h^{p} dσ = {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArcSet;
    use crate::models::{sample, Example3, PolarIndependent, RadialLaw, RegVarModel};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn uniform_batch(n: usize, seed: u64) -> SampleBatch {
        let m = PolarIndependent::new(SpectralMeasure::uniform(), RadialLaw::pareto(1.0).unwrap())
            .unwrap();
        sample(&m, n, seed).unwrap()
    }

    #[test]
    fn spherical_map_keeps_norms() {
        let b = uniform_batch(1000, 1);
        let same = spherical_map_apply(&b, &SphereMap::identity(2)).unwrap();
        assert_eq!(same.norms(), b.norms());
        assert_eq!(same.angles(), b.angles());
        let c = spherical_map_apply(&b, &SphereMap::constant(1.0)).unwrap();
        assert_eq!(c.norms(), b.norms());
        assert!(c.angles().unwrap().iter().all(|&t| t == 1.0));
    }

    #[test]
    fn quadrant_snap_of_three_four() {
        let b = SampleBatch::from_rows(2, &[3.0, 4.0], None).unwrap();
        let y = spherical_map_apply(&b, &SphereMap::quadrant_snap()).unwrap();
        let p = y.point(0);
        let expected = 5.0 * FRAC_PI_4.cos();
        assert!((p[0] - expected).abs() < 1e-12 && (p[1] - expected).abs() < 1e-12);
        assert_eq!(y.norms(), &[5.0]);
    }

    #[test]
    fn radial_scale_examples() {
        let b = uniform_batch(1000, 2);
        let same = radial_scale_apply(&b, &RadialGain::constant(1.0)).unwrap();
        assert_eq!(same, b);
        let twice = radial_scale_apply(&b, &RadialGain::constant(2.0)).unwrap();
        for (x, y) in b.norms().iter().zip(twice.norms()) {
            assert_eq!(2.0 * x, *y);
        }
        assert_eq!(twice.angles(), b.angles());
    }

    #[test]
    fn open_half_plane_indicator_drops_the_axis() {
        let m = Example3::new(1.0).unwrap();
        let b = sample(&m, 10_000, 3).unwrap();
        let on_axis = b.angles().unwrap().iter().filter(|&&t| t == 0.0).count();
        assert!(on_axis > 4000 && on_axis < 6000);
        let h = RadialGain::indicator_arc(ArcSet::single(5e-324, TAU).unwrap());
        let y = radial_scale_apply(&b, &h).unwrap();
        assert_eq!(y.zero_count(), on_axis);
        assert_eq!(y.len(), b.len() - on_axis);
        assert!(y.angles().unwrap().iter().all(|&t| t > 0.0));
    }

    #[test]
    fn randomized_scale_examples() {
        let b = uniform_batch(100_000, 4);
        let h = RadialGain::cosine(2.0, 1.0);
        let det =
            randomized_scale_apply(&b, &RandomGainProcess::Deterministic(h.clone()), 9).unwrap();
        assert_eq!(det, radial_scale_apply(&b, &h).unwrap());
        let zero = RandomGainProcess::Deterministic(RadialGain::constant(0.0));
        let z = randomized_scale_apply(&b, &zero, 9).unwrap();
        assert!(z.is_empty());
        assert_eq!(z.zero_count(), b.len());
        let u = RandomGainProcess::Uniform { lo: 1.0, hi: 3.0 };
        let y = randomized_scale_apply(&b, &u, 11).unwrap();
        assert_eq!(y, randomized_scale_apply(&b, &u, 11).unwrap());
        let ratio: f64 = y
            .norms()
            .iter()
            .zip(b.norms())
            .map(|(a, b)| a / b)
            .sum::<f64>()
            / b.len() as f64;
        assert!((ratio - 2.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn limit_spherical_examples() {
        let q = LimitMeasure::new(1.0, SpectralMeasure::uniform()).unwrap();
        let arc = EvalSet::Arcs(ArcSet::around(FRAC_PI_4, 0.1).unwrap());
        let snapped = limit_pushforward_spherical(&q, &SphereMap::quadrant_snap()).unwrap();
        assert_eq!(snapped.alpha(), 1.0);
        assert!((snapped.eval(2.0, &arc).unwrap() - 0.125).abs() < 1e-12);
        let c = limit_pushforward_spherical(&q, &SphereMap::constant(2.0)).unwrap();
        let around = EvalSet::Arcs(ArcSet::around(2.0, 0.01).unwrap());
        assert!((c.eval(4.0, &around).unwrap() - 0.25).abs() < 1e-12);
        let id = limit_pushforward_spherical(&q, &SphereMap::identity(2)).unwrap();
        assert!((id.eval(3.0, &EvalSet::Full).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn limit_radial_examples() {
        let q = LimitMeasure::new(1.0, SpectralMeasure::uniform()).unwrap();
        let doubled = limit_pushforward_radial(&q, &RadialGain::constant(2.0)).unwrap();
        assert!((doubled.eval(5.0, &EvalSet::Full).unwrap() - 0.4).abs() < 1e-12);
        let s = SpectralMeasure::from_angles(&[(0.0, 0.5), (PI, 0.5)]).unwrap();
        let q = LimitMeasure::new(2.0, s).unwrap();
        let h = RadialGain::step(vec![FRAC_PI_2, 3.0 * FRAC_PI_2], vec![1.0, 3.0, 1.0]).unwrap();
        let y = limit_pushforward_radial(&q, &h).unwrap();
        assert_eq!(y.alpha(), 2.0);
        let pi_arc = EvalSet::Arcs(ArcSet::around(PI, 0.1).unwrap());
        assert!((y.eval(10.0, &pi_arc).unwrap() - 0.045).abs() < 1e-15);
        assert!(matches!(
            limit_pushforward_radial(&q, &RadialGain::power_cusp(PI, 0.2)),
            Err(Error::UnboundedGain)
        ));
    }

    #[test]
    fn moment_condition_examples() {
        let u = SpectralMeasure::uniform();
        let v = moment_condition(&u, &RadialGain::constant(3.0), 1.0, 0.5).unwrap();
        assert!((v - 3f64.powf(1.5)).abs() < 1e-12);
        let cusp = RadialGain::power_cusp(PI, 0.2);
        let v = moment_condition(&u, &cusp, 1.0, 0.5).unwrap();
        let exact = 2.0 * PI.powf(0.7) / (0.7 * TAU);
        assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
        assert!(matches!(
            moment_condition(&u, &RadialGain::power_cusp(PI, 0.8), 1.0, 0.5),
            Err(Error::MomentDivergence(_))
        ));
        assert!(moment_condition(&u, &cusp, 1.0, 0.0).is_err());
    }

    #[test]
    fn staircase_moment_of_the_dependent_model() {
        let m = crate::models::Example2::new(1.0, 0.5, 1.2).unwrap();
        let h = RadialGain::example2(1.2);
        let v = m.gain_moment(&h, 1.05).unwrap().unwrap();
        assert!((v - 3.909_046_248_397_462).abs() < 1e-11);
        assert!(matches!(
            m.gain_moment(&h, 1.5).unwrap(),
            Err(Error::MomentDivergence(_))
        ));
    }
}
