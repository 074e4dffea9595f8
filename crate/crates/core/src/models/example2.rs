//! Atoms accumulating at `π` with a gain that breaks regular variation.
//!
//! `K` has `P{K = k} = q_k = 1/(k(k+1))`, the direction is the atom
//! `b_K = π − π/2^{K−1}`, and given `K = k` the norm has an atom at 1 and
//! tail `k^{-ν} r^{-α}` beyond it. The law is regularly varying with
//! `σ = Σ q_k k^{-ν} δ_{b_k}`, but scaling by the unbounded gain
//! `h = Σ k^β 𝟙_{I_k}` destroys that whenever `1/α < β < (1+ν)/α`.

use std::f64::consts::PI;

use super::{ModelSpec, RadialLaw, RegVarModel};
use crate::error::{Error, Result};
use crate::geometry::{ArcSet, EvalSet};
use crate::measure::{Atom, GainSpec, RadialGain, SpectralMeasure};
use crate::rng::{open_unit, Rng};

/// Atoms `b_1, …, b_EXPLICIT` are handled one by one. Beyond, `b_k` rounds
/// to `π` in double precision.
const EXPLICIT: u64 = 60;

/// Individual atoms kept in the discrete `σ`; the rest of the mass is
/// lumped on the next atom, which is within `π/2^{40}` of every later one.
const SIGMA_ATOMS: u64 = 41;

/// Terms summed explicitly in [`q_series`] before the asymptotic tail.
const SERIES_TERMS: u64 = 100_000;

/// `b_k = π − π/2^{k−1}`.
pub fn atom_angle(k: u64) -> f64 {
    PI - PI * (1.0 - k as f64).exp2()
}

/// `Σ_{k ≥ from} k^p / (k(k+1))`, finite iff `p < 1`.
///
/// The first terms are summed directly; the remainder is the midpoint
/// Euler–Maclaurin tail `∫_{M+½}^∞ g + g'(M+½)/24`, with the integral
/// expanded in powers of `1/x`.
pub fn q_series(p: f64, from: u64) -> Result<f64> {
    if !(p < 1.0) {
        return Err(Error::MomentDivergence(format!(
            "Σ k^{p}/(k(k+1)) diverges for exponent {p} ≥ 1"
        )));
    }
    let from = from.max(1);
    let g = |x: f64| x.powf(p) / (x * (x + 1.0));
    let last = from.max(SERIES_TERMS);
    // Smallest terms first.
    let direct: f64 = (from..=last).rev().map(|k| g(k as f64)).sum();
    let a = last as f64 + 0.5;
    let mut integral = 0.0;
    for j in 0..40 {
        let e = 1.0 - p + j as f64;
        let term = a.powf(-e) / e;
        integral += if j % 2 == 0 { term } else { -term };
        if term < 1e-30 * integral.abs() {
            break;
        }
    }
    let dg = g(a) * ((p - 1.0) / a - 1.0 / (a + 1.0));
    Ok(direct + integral + dg / 24.0)
}

/// `r^α P{|Y| > r}` for `Y = X·h(X/|X|)` with the staircase gain, `r > 1`.
///
/// Given `K = k`, `|Y| = k^β R`, so the tail is `k^{-ν}(r/k^β)^{-α}` when
/// `r/k^β ≥ 1` and 1 otherwise; the second case sums to `1/(K+1)`.
pub fn example2_transformed_tail(alpha: f64, nu: f64, beta: f64, r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "transformed tail needs r > 1, got {r}"
        )));
    }
    let mut kmax = r.powf(1.0 / beta).floor() as u64;
    while kmax > 0 && (kmax as f64).powf(beta) > r {
        kmax -= 1;
    }
    while ((kmax + 1) as f64).powf(beta) <= r {
        kmax += 1;
    }
    let below: f64 = (1..=kmax)
        .rev()
        .map(|k| {
            let k = k as f64;
            let q = 1.0 / (k * (k + 1.0));
            q * k.powf(-nu) * (r / k.powf(beta)).powf(-alpha)
        })
        .sum();
    let above = 1.0 / (kmax as f64 + 1.0);
    Ok(r.powf(alpha) * (below + above))
}

#[derive(Debug, Clone)]
pub struct Example2 {
    alpha: f64,
    nu: f64,
    beta: f64,
    sigma: SpectralMeasure,
    /// `Σ_{k > EXPLICIT} q_k k^{-ν}`.
    remainder: f64,
}

impl Example2 {
    pub fn new(alpha: f64, nu: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && nu > 0.0) {
            return Err(Error::InvalidConstruction(format!(
                "alpha and nu must be positive, got {alpha} and {nu}"
            )));
        }
        if !(1.0 / alpha < beta && beta < (1.0 + nu) / alpha) {
            return Err(Error::InvalidConstruction(format!(
                "beta = {beta} must lie in (1/alpha, (1 + nu)/alpha) = ({}, {})",
                1.0 / alpha,
                (1.0 + nu) / alpha
            )));
        }
        let mut atoms: Vec<Atom> = (1..=SIGMA_ATOMS)
            .map(|k| Atom::at_angle(atom_angle(k), q(k) * (k as f64).powf(-nu)))
            .collect();
        atoms.push(Atom::at_angle(
            atom_angle(SIGMA_ATOMS + 1),
            q_series(-nu, SIGMA_ATOMS + 1)?,
        ));
        Ok(Self {
            alpha,
            nu,
            beta,
            sigma: SpectralMeasure::discrete(atoms)?,
            remainder: q_series(-nu, EXPLICIT + 1)?,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The companion gain `Σ k^β 𝟙_{I_k}`.
    pub fn gain(&self) -> RadialGain {
        RadialGain::example2(self.beta)
    }

    fn radial(&self, k: u64) -> RadialLaw {
        let c = (k as f64).powf(-self.nu);
        RadialLaw::AtomPlusPareto {
            alpha: self.alpha,
            tail_coefficient: c,
        }
    }

    /// `Σ_{k: b_k ∈ B} q_k P{R_k > r/g_k}` with gain values `g_k`.
    fn tail_sum(&self, r: f64, arcs: &ArcSet, gain: impl Fn(u64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for k in (1..=EXPLICIT).rev() {
            let t = atom_angle(k);
            if arcs.contains_value(t) {
                let g = gain(k, t);
                if g > 0.0 {
                    total += q(k) * self.radial(k).tail(r / g);
                }
            }
        }
        if arcs.contains_value(PI) {
            let g = gain(EXPLICIT + 1, PI);
            if g > 0.0 {
                let x = r / g;
                total += if x < 1.0 {
                    1.0 / (EXPLICIT as f64 + 1.0)
                } else {
                    x.powf(-self.alpha) * self.remainder
                };
            }
        }
        total
    }
}

fn q(k: u64) -> f64 {
    let k = k as f64;
    1.0 / (k * (k + 1.0))
}

impl RegVarModel for Example2 {
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
        // K = ⌈1/(1−U)⌉ − 1 with 1 − U uniform on (0, 1].
        let w = open_unit(rng);
        let k = ((1.0 / w).ceil() - 1.0).max(1.0);
        let k = if k >= u64::MAX as f64 {
            u64::MAX
        } else {
            k as u64
        };
        let r = self.radial(k).sample(rng);
        let (s, c) = atom_angle(k).sin_cos();
        out[0] = r * c;
        out[1] = r * s;
    }

    fn exact_tail(&self, r: f64, set: &EvalSet) -> Option<f64> {
        let arcs = set.as_arcs()?;
        Some(self.tail_sum(r, &arcs, |_, _| 1.0))
    }

    /// The staircase gain over the full circle uses the exact series;
    /// other gains are evaluated at the atoms.
    fn exact_tail_with_gain(&self, r: f64, set: &EvalSet, gain: &RadialGain) -> Option<f64> {
        if let (Some(GainSpec::Example2Gain { beta }), EvalSet::Full) = (gain.spec(), set) {
            if *beta == self.beta && r > 1.0 {
                let v = example2_transformed_tail(self.alpha, self.nu, self.beta, r).ok()?;
                return Some(v * r.powf(-self.alpha));
            }
        }
        let arcs = set.as_arcs()?;
        Some(self.tail_sum(r, &arcs, |_, t| gain.eval_angle(t)))
    }

    /// `Σ_k k^{pβ'} q_k k^{-ν}` for the staircase gain with exponent `β'`.
    fn gain_moment(&self, gain: &RadialGain, p: f64) -> Option<Result<f64>> {
        match gain.spec() {
            Some(GainSpec::Example2Gain { beta }) => Some(q_series(p * beta - self.nu, 1)),
            _ => None,
        }
    }

    fn spec(&self) -> Option<ModelSpec> {
        Some(ModelSpec::Example2 {
            alpha: self.alpha,
            nu: self.nu,
            beta: self.beta,
        })
    }
}
