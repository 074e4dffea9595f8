//! Tail index and spectral measure estimates from samples, the `Q_n`
//! functional, and scans of normalized tails.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::batch::SampleBatch;
use crate::error::{Error, Result};
use crate::geometry::EvalSet;
use crate::measure::{distance_ks, distance_tv, Atom, MeasureSpec, RadialGain, SpectralMeasure};
use crate::models::{transformed_exact_tail, RegVarModel};
use crate::rng::{substream, Purpose};

/// Bootstrap resamples behind the Hill confidence interval.
pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// Smallest batch accepted by an empirical tail scan.
pub const MIN_SCAN_SAMPLES: usize = 1000;

/// Number of exceedances for a top fraction of `n` points, at least one.
/// Products within `1e-9` of an integer are not rounded up.
pub fn top_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let k = if (x - x.round()).abs() < 1e-9 {
        x.round()
    } else {
        x.ceil()
    };
    (k as usize).clamp(1, n.max(1))
}

/// Directions of the `k_top` largest norms, each with weight `1/k_top`.
/// Equal norms at the threshold keep sample order.
pub fn empirical_spectral(batch: &SampleBatch, k_top: usize) -> Result<SpectralMeasure> {
    if batch.is_empty() {
        return Err(Error::EmptyInput);
    }
    if k_top == 0 || k_top > batch.len() {
        return Err(Error::InvalidArgument(format!(
            "k_top = {k_top} outside 1..={}",
            batch.len()
        )));
    }
    let w = 1.0 / k_top as f64;
    let top = batch.top_indices(k_top);
    let m = match batch.angles() {
        Some(angles) => {
            let pairs: Vec<(f64, f64)> = top.iter().map(|&i| (angles[i], w)).collect();
            SpectralMeasure::empirical_from_angles(&pairs)?
        }
        None => SpectralMeasure::empirical(
            top.iter()
                .map(|&i| Atom::new(batch.direction(i), w))
                .collect(),
        )?,
    };
    m.normalize()
}

/// `k / Σ_{i ≤ k} ln(R_(i)/R_(k+1))` over the descending norms.
pub fn hill_estimator(batch: &SampleBatch, k: usize) -> Result<f64> {
    if k == 0 || k >= batch.len() {
        return Err(Error::InvalidArgument(format!(
            "Hill needs 1 ≤ k < n, got k = {k}, n = {}",
            batch.len()
        )));
    }
    let norms: Vec<f64> = batch
        .top_indices(k + 1)
        .iter()
        .map(|&i| batch.norms()[i])
        .collect();
    hill_sorted(&norms)
}

/// Hill estimate from the `k + 1` largest norms, sorted descending.
fn hill_sorted(top: &[f64]) -> Result<f64> {
    let k = top.len() - 1;
    let threshold = top[k];
    if !(threshold > 0.0) {
        return Err(Error::DegenerateTail(format!(
            "threshold norm is {threshold}"
        )));
    }
    if top[0] == threshold {
        return Err(Error::DegenerateTail(format!(
            "the top {} norms all equal {threshold}",
            k + 1
        )));
    }
    let sum: f64 = top[..k].iter().map(|&r| (r / threshold).ln()).sum();
    Ok(k as f64 / sum)
}

/// Percentile interval of the Hill estimate over bootstrap resamples of
/// the norms. Resample `j` draws from substream `(seed, bootstrap, j)`.
pub fn hill_bootstrap_ci(batch: &SampleBatch, k: usize, seed: u64, level: f64) -> Result<[f64; 2]> {
    use rand::Rng as _;
    if k == 0 || k >= batch.len() {
        return Err(Error::InvalidArgument(format!(
            "Hill needs 1 ≤ k < n, got k = {k}"
        )));
    }
    let norms = batch.norms();
    let n = norms.len();
    let mut estimates: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .filter_map(|j| {
            let mut rng = substream(seed, Purpose::Bootstrap, j as u64);
            let mut resample: Vec<f64> = (0..n).map(|_| norms[rng.random_range(0..n)]).collect();
            resample.select_nth_unstable_by(k, |a, b| b.total_cmp(a));
            let top = &mut resample[..=k];
            top.sort_unstable_by(|a, b| b.total_cmp(a));
            hill_sorted(top).ok()
        })
        .collect();
    if estimates.is_empty() {
        return Err(Error::DegenerateTail(
            "every bootstrap resample was degenerate".into(),
        ));
    }
    estimates.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok([
        percentile(&estimates, tail),
        percentile(&estimates, 1.0 - tail),
    ])
}

/// Linear interpolation between order statistics.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Whether sample `i` has its direction in `set`.
fn in_set(batch: &SampleBatch, i: usize, set: &EvalSet) -> Result<bool> {
    match (set, batch.angles()) {
        (EvalSet::Full, _) => Ok(true),
        (EvalSet::Arcs(arcs), Some(angles)) => Ok(arcs.contains_value(angles[i])),
        _ => set.contains(&batch.direction(i)),
    }
}

/// Number of samples with norm above `r` and direction in `set`.
fn exceedances(batch: &SampleBatch, r: f64, set: &EvalSet) -> Result<usize> {
    let mut count = 0;
    for (i, &norm) in batch.norms().iter().enumerate() {
        if norm > r && in_set(batch, i, set)? {
            count += 1;
        }
    }
    Ok(count)
}

/// `n P̂{X/|X| ∈ B, |X| > r b_n}` with `b_n = n^{1/α}`, where `n` counts the
/// points removed by a transform too.
pub fn qn_measure(batch: &SampleBatch, alpha: f64, r: f64, set: &EvalSet) -> Result<f64> {
    let n = batch.len() + batch.zero_count();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let bn = (n as f64).powf(1.0 / alpha);
    Ok(exceedances(batch, r * bn, set)? as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    Exact,
    Empirical,
}

impl ScanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanMode::Exact => "exact",
            ScanMode::Empirical => "empirical",
        }
    }
}

/// What a tail scan evaluates: a model's closed-form tail, optionally after
/// a gain, or a batch's empirical tail.
#[derive(Debug, Clone, Copy)]
pub enum ScanSource<'a> {
    Exact {
        model: &'a dyn RegVarModel,
        gain: Option<&'a RadialGain>,
    },
    Empirical(&'a SampleBatch),
}

/// `v(r, B) = r^α P{X/|X| ∈ B, |X| > r}` over a grid of radii.
#[derive(Debug, Clone, Serialize)]
pub struct TailScan {
    pub r_grid: Vec<f64>,
    /// `values[b][j]` is `v(r_j, B_b)`.
    pub values: Vec<Vec<f64>>,
    pub mode: ScanMode,
    /// `max ≤ 10·median` per set; a label, not a test.
    pub is_bounded: Vec<bool>,
    /// `max − min` per set over radii at or above the median radius.
    pub oscillation_range: Vec<f64>,
}

impl TailScan {
    /// `max − min` per set over the whole grid.
    pub fn full_range(&self) -> Vec<f64> {
        self.values.iter().map(|v| spread(v)).collect()
    }

    /// Writes `r,arc_id,value,mode` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "r,arc_id,value,mode")?;
        for (b, values) in self.values.iter().enumerate() {
            for (r, v) in self.r_grid.iter().zip(values) {
                writeln!(w, "{r:.16e},{b},{v:.16e},{}", self.mode.as_str())?;
            }
        }
        Ok(())
    }
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

pub fn tail_scan(
    source: ScanSource<'_>,
    alpha: f64,
    sets: &[EvalSet],
    r_grid: &[f64],
) -> Result<TailScan> {
    if r_grid.is_empty() || sets.is_empty() {
        return Err(Error::EmptyInput);
    }
    if r_grid[0] <= 0.0 || r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "radius grid must be positive and strictly increasing".into(),
        ));
    }
    let (mode, values) = match source {
        ScanSource::Exact { model, gain } => {
            let values = sets
                .iter()
                .map(|set| {
                    r_grid
                        .iter()
                        .map(|&r| {
                            let p = match gain {
                                None => model.exact_tail(r, set),
                                Some(h) => transformed_exact_tail(model, h, r, set),
                            };
                            p.map(|p| r.powf(alpha) * p).ok_or_else(|| {
                                Error::Unsupported("model has no closed-form tail here".into())
                            })
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (ScanMode::Exact, values)
        }
        ScanSource::Empirical(batch) => {
            if batch.len() < MIN_SCAN_SAMPLES {
                return Err(Error::InvalidArgument(format!(
                    "empirical scan needs at least {MIN_SCAN_SAMPLES} samples, got {}",
                    batch.len()
                )));
            }
            let n = (batch.len() + batch.zero_count()) as f64;
            let values = sets
                .iter()
                .map(|set| {
                    r_grid
                        .iter()
                        .map(|&r| Ok(r.powf(alpha) * exceedances(batch, r, set)? as f64 / n))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            (ScanMode::Empirical, values)
        }
    };
    let r_median = median(r_grid);
    let upper: Vec<usize> = (0..r_grid.len())
        .filter(|&j| r_grid[j] >= r_median)
        .collect();
    let is_bounded = values
        .iter()
        .map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max) <= 10.0 * median(v))
        .collect();
    let oscillation_range = values
        .iter()
        .map(|v| spread(&upper.iter().map(|&j| v[j]).collect::<Vec<_>>()))
        .collect();
    Ok(TailScan {
        r_grid: r_grid.to_vec(),
        values,
        mode,
        is_bounded,
        oscillation_range,
    })
}

/// Distances from the estimate to a declared spectral measure, both
/// normalized. A distance that is undefined for the pair is left out.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Distances {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ks: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub alpha_hat: f64,
    pub alpha_ci: [f64; 2],
    pub k_used: usize,
    pub spectral_hat: SpectralMeasure,
    pub distances: Distances,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    alpha_hat: f64,
    alpha_ci: [f64; 2],
    k_used: usize,
    spectral_hat: MeasureSpec,
    distances: &'a Distances,
}

impl EstimationReport {
    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(ReportJson {
            alpha_hat: self.alpha_hat,
            alpha_ci: self.alpha_ci,
            k_used: self.k_used,
            spectral_hat: self.spectral_hat.to_spec()?,
            distances: &self.distances,
        })?)
    }
}

/// Distances between two spectral measures after normalization.
pub fn distances(estimate: &SpectralMeasure, target: &SpectralMeasure) -> Result<Distances> {
    let (a, b) = (estimate.normalize()?, target.normalize()?);
    let tv = match distance_tv(&a, &b) {
        Ok(v) => Some(v),
        Err(Error::UnsupportedPair(_)) => None,
        Err(e) => return Err(e),
    };
    let ks = if a.dim() == 2 && b.dim() == 2 {
        Some(distance_ks(&a, &b)?)
    } else {
        None
    };
    Ok(Distances { tv, ks })
}

/// Hill estimate with a 95% bootstrap interval, the empirical spectral
/// measure of the top `k_top` points, and distances to `target` if given.
pub fn estimate(
    batch: &SampleBatch,
    k_top: usize,
    target: Option<&SpectralMeasure>,
    seed: u64,
) -> Result<EstimationReport> {
    if k_top >= batch.len() {
        return Err(Error::InvalidArgument(format!(
            "k_top = {k_top} must be below the batch size {}",
            batch.len()
        )));
    }
    let alpha_hat = hill_estimator(batch, k_top)?;
    let alpha_ci = hill_bootstrap_ci(batch, k_top, seed, 0.95)?;
    let spectral_hat = empirical_spectral(batch, k_top)?;
    let distances = match target {
        Some(t) => distances(&spectral_hat, t)?,
        None => Distances::default(),
    };
    Ok(EstimationReport {
        alpha_hat,
        alpha_ci,
        k_used: k_top,
        spectral_hat,
        distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArcSet;
    use crate::models::{sample, Example2, PolarIndependent, RadialLaw};
    use std::f64::consts::{FRAC_PI_2, LN_2, PI};

    fn batch(rows: &[f64]) -> SampleBatch {
        SampleBatch::from_rows(2, rows, None).unwrap()
    }

    fn uniform_pareto(alpha: f64) -> PolarIndependent {
        PolarIndependent::new(
            SpectralMeasure::uniform(),
            RadialLaw::pareto(alpha).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn empirical_spectral_examples() {
        let b = batch(&[3.0, 0.0, 0.0, 5.0, -2.0, 0.0]);
        let m = empirical_spectral(&b, 2).unwrap();
        assert_eq!(
            m.angular_atoms().unwrap(),
            vec![(0.0, 0.5), (FRAC_PI_2, 0.5)]
        );
        assert_eq!(m.total_mass(), 1.0);
        let all = empirical_spectral(&b, 3).unwrap();
        assert_eq!(all.angular_atoms().unwrap().len(), 3);
        let ray = batch(&[1.0, 1.0, 2.0, 2.0, 5.0, 5.0]);
        for k in 1..=3 {
            let m = empirical_spectral(&ray, k).unwrap();
            assert_eq!(m.angular_atoms().unwrap().len(), 1);
        }
        assert!(matches!(
            empirical_spectral(&SampleBatch::empty(2, None, 0), 1),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn top_counts() {
        assert_eq!(top_count(0.01, 200_000), 2000);
        assert_eq!(top_count(0.01, 150), 2);
        assert_eq!(top_count(0.0, 10), 1);
        assert_eq!(top_count(1.0, 10), 10);
    }

    #[test]
    fn empirical_weights_sum_to_one() {
        let b = sample(&uniform_pareto(1.0), 5000, 3).unwrap();
        for k in [7, 49, 333, 1000] {
            let m = empirical_spectral(&b, k).unwrap();
            assert_eq!(m.total_mass(), 1.0);
        }
    }

    #[test]
    fn nested_exceedances() {
        let b = sample(&uniform_pareto(1.0), 2000, 5).unwrap();
        let big = b.top_indices(100);
        let small = b.top_indices(30);
        assert_eq!(&big[..30], small.as_slice());
    }

    #[test]
    fn hill_hand_case() {
        let rows: Vec<f64> = [16.0, 8.0, 4.0, 2.0, 1.0]
            .iter()
            .flat_map(|&r| [r, 0.0])
            .collect();
        let a = hill_estimator(&batch(&rows), 4).unwrap();
        assert!((a - 1.0 / (2.5 * LN_2)).abs() < 1e-12);
    }

    #[test]
    fn hill_on_quantile_grid() {
        let mut prev_err = f64::INFINITY;
        for n in [1_000usize, 10_000, 100_000] {
            let rows: Vec<f64> = (1..=n).flat_map(|i| [n as f64 / i as f64, 0.0]).collect();
            let a = hill_estimator(&batch(&rows), n / 2).unwrap();
            let err = (a - 1.0).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-3);
    }

    #[test]
    fn hill_is_scale_invariant() {
        let b = sample(&uniform_pareto(2.0), 4000, 6).unwrap();
        let a = hill_estimator(&b, 200).unwrap();
        let rows: Vec<f64> = b.rows().iter().map(|x| 8.0 * x).collect();
        let scaled = SampleBatch::from_rows(2, &rows, None).unwrap();
        assert_eq!(hill_estimator(&scaled, 200).unwrap(), a);
        let rows: Vec<f64> = b.rows().iter().map(|x| 3.7 * x).collect();
        let scaled = SampleBatch::from_rows(2, &rows, None).unwrap();
        assert!((hill_estimator(&scaled, 200).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn hill_degenerate() {
        let b = batch(&[1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
        assert!(matches!(
            hill_estimator(&b, 2),
            Err(Error::DegenerateTail(_))
        ));
    }

    #[test]
    fn pareto_estimate_with_interval() {
        let b = sample(&uniform_pareto(1.5), 100_000, 42).unwrap();
        let report = estimate(&b, 1000, Some(&SpectralMeasure::uniform()), 42).unwrap();
        assert!(
            (1.35..=1.65).contains(&report.alpha_hat),
            "{}",
            report.alpha_hat
        );
        let [lo, hi] = report.alpha_ci;
        assert!(lo < report.alpha_hat && report.alpha_hat < hi);
        assert!(report.distances.ks.unwrap() < 0.06);
        assert!(report.distances.tv.is_none());
        let json = report.to_json().unwrap();
        assert_eq!(json["k_used"], 1000);
        assert_eq!(json["spectral_hat"]["kind"], "empirical");
        let again = estimate(&b, 1000, None, 42).unwrap();
        assert_eq!(again.alpha_ci, report.alpha_ci);
        assert_eq!(again.distances, Distances::default());
    }

    #[test]
    fn qn_measure_mean_over_replicates() {
        let m = uniform_pareto(1.0);
        let reps: Vec<f64> = (0..100)
            .map(|s| {
                qn_measure(
                    &sample(&m, 10_000, 1000 + s).unwrap(),
                    1.0,
                    2.0,
                    &EvalSet::Full,
                )
                .unwrap()
            })
            .collect();
        let mean = reps.iter().sum::<f64>() / 100.0;
        let var = reps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 99.0;
        assert!(
            (mean - 0.5).abs() < 3.0 * (var / 100.0).sqrt() + 1e-12,
            "{mean}"
        );
    }

    #[test]
    fn qn_measure_matches_direct_count() {
        let b = sample(&uniform_pareto(1.0), 3000, 8).unwrap();
        let threshold = 0.01 * 3000.0;
        let direct = b.norms().iter().filter(|&&r| r > threshold).count() as f64;
        assert_eq!(qn_measure(&b, 1.0, 0.01, &EvalSet::Full).unwrap(), direct);
        let d = PolarIndependent::new(SpectralMeasure::dirac(0.0), RadialLaw::pareto(1.0).unwrap())
            .unwrap();
        let b = sample(&d, 3000, 8).unwrap();
        let away = EvalSet::Arcs(ArcSet::single(1.0, 2.0).unwrap());
        assert_eq!(qn_measure(&b, 1.0, 0.5, &away).unwrap(), 0.0);
    }

    fn log_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
        (0..points)
            .map(|j| (a.ln() + (b.ln() - a.ln()) * j as f64 / (points - 1) as f64).exp())
            .collect()
    }

    #[test]
    fn exact_scans() {
        let m = uniform_pareto(1.0);
        let half = EvalSet::Arcs(ArcSet::single(0.0, PI).unwrap());
        let s = tail_scan(
            ScanSource::Exact {
                model: &m,
                gain: None,
            },
            1.0,
            &[EvalSet::Full, half],
            &log_grid(1.0, 1e4, 9),
        )
        .unwrap();
        assert!(s.values[0].iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(s.values[1].iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert_eq!(s.is_bounded, vec![true, true]);

        let e2 = Example2::new(1.0, 0.5, 1.2).unwrap();
        let grid = log_grid(10.0, 1e4, 13);
        let plain = tail_scan(
            ScanSource::Exact {
                model: &e2,
                gain: None,
            },
            1.0,
            &[EvalSet::Full],
            &grid,
        )
        .unwrap();
        assert!(plain.full_range()[0] < 1e-9);
        let h = e2.gain();
        let t = tail_scan(
            ScanSource::Exact {
                model: &e2,
                gain: Some(&h),
            },
            1.0,
            &[EvalSet::Full],
            &grid,
        )
        .unwrap();
        let v = &t.values[0];
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        for (r, v) in grid.iter().zip(v) {
            assert!(*v >= r / (r.powf(1.0 / 1.2) + 1.0));
        }
    }

    #[test]
    fn oscillating_side_scan() {
        let side = PolarIndependent::new(
            SpectralMeasure::dirac(0.0),
            RadialLaw::oscillating(1.0, 0.5, 1.0).unwrap(),
        )
        .unwrap();
        let grid: Vec<f64> = (0..=16)
            .map(|j| (std::f64::consts::TAU * j as f64 / 16.0).exp())
            .collect();
        let s = tail_scan(
            ScanSource::Exact {
                model: &side,
                gain: None,
            },
            1.0,
            &[EvalSet::Full],
            &grid,
        )
        .unwrap();
        assert!((s.full_range()[0] - 1.0).abs() < 1e-12);
        assert!((s.oscillation_range[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empirical_scan_and_csv() {
        let m = uniform_pareto(1.0);
        let b = sample(&m, 50_000, 12).unwrap();
        let s = tail_scan(
            ScanSource::Empirical(&b),
            1.0,
            &[EvalSet::Full],
            &[2.0, 4.0, 8.0],
        )
        .unwrap();
        assert_eq!(s.mode, ScanMode::Empirical);
        for v in &s.values[0] {
            assert!((v - 1.0).abs() < 0.05);
        }
        let mut out = Vec::new();
        s.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("r,arc_id,value,mode\n"));
        assert_eq!(text.lines().count(), 4);
        assert!(text
            .lines()
            .all(|l| l == "r,arc_id,value,mode" || l.ends_with(",empirical")));
        let small = sample(&m, 100, 1).unwrap();
        assert!(tail_scan(ScanSource::Empirical(&small), 1.0, &[EvalSet::Full], &[2.0]).is_err());
        assert!(tail_scan(
            ScanSource::Empirical(&b),
            1.0,
            &[EvalSet::Full],
            &[2.0, 2.0]
        )
        .is_err());
    }
}
