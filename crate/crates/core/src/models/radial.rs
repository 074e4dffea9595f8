//! Laws of the norm `R = |X|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{open_unit, Rng};

/// Grid size for the monotonicity check of an oscillating tail.
const MONOTONICITY_GRID: usize = 10_000;

/// Radial laws supported on `[1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialLaw {
    /// `P{R > r} = min(1, r^{-α})`.
    Pareto { alpha: f64 },
    /// An atom at 1 with mass `1 − c` and `P{R > r} = c·r^{-α}` for `r ≥ 1`.
    AtomPlusPareto { alpha: f64, tail_coefficient: f64 },
    /// `P{R > r} = r^{-α}(1 + sign·a·sin ln r)` for `r ≥ 1`.
    OscillatingTail {
        alpha: f64,
        amplitude: f64,
        sign: f64,
    },
}

impl RadialLaw {
    pub fn pareto(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(RadialLaw::Pareto { alpha })
    }

    pub fn atom_plus_pareto(alpha: f64, atom_mass: f64, tail_coefficient: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(0.0..=1.0).contains(&atom_mass)
            || !(tail_coefficient > 0.0)
            || (atom_mass + tail_coefficient - 1.0).abs() > 1e-12
        {
            return Err(Error::InvalidConstruction(format!(
                "atom mass {atom_mass} and tail coefficient {tail_coefficient} must be \
                 nonnegative and sum to 1"
            )));
        }
        Ok(RadialLaw::AtomPlusPareto {
            alpha,
            tail_coefficient,
        })
    }

    /// Checks `0 < a < 1` and `a·cos t / (1 + sign·a·sin t) ≤ α` on a grid of
    /// one period, which makes the tail nonincreasing.
    pub fn oscillating(alpha: f64, amplitude: f64, sign: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(amplitude > 0.0 && amplitude < 1.0) {
            return Err(Error::InvalidConstruction(format!(
                "amplitude {amplitude} outside (0, 1)"
            )));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidConstruction(format!("sign {sign} is not ±1")));
        }
        let worst = (0..MONOTONICITY_GRID)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / MONOTONICITY_GRID as f64;
                amplitude * t.cos() / (1.0 + sign * amplitude * t.sin())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if worst > alpha {
            return Err(Error::InvalidConstruction(format!(
                "tail is not monotone: max a·cos t/(1 + a·sin t) = {worst} exceeds alpha = {alpha}"
            )));
        }
        Ok(RadialLaw::OscillatingTail {
            alpha,
            amplitude,
            sign,
        })
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            RadialLaw::Pareto { alpha }
            | RadialLaw::AtomPlusPareto { alpha, .. }
            | RadialLaw::OscillatingTail { alpha, .. } => alpha,
        }
    }

    /// `P{R > r}`.
    pub fn tail(&self, r: f64) -> f64 {
        if r < 1.0 {
            return 1.0;
        }
        if r == f64::INFINITY {
            return 0.0;
        }
        match *self {
            RadialLaw::Pareto { alpha } => r.powf(-alpha),
            RadialLaw::AtomPlusPareto {
                alpha,
                tail_coefficient,
            } => tail_coefficient * r.powf(-alpha),
            RadialLaw::OscillatingTail {
                alpha,
                amplitude,
                sign,
            } => r.powf(-alpha) * (1.0 + sign * amplitude * r.ln().sin()),
        }
    }

    /// Draws one norm by inversion of the tail.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let v = open_unit(rng);
        match *self {
            RadialLaw::Pareto { alpha } => v.powf(-1.0 / alpha),
            RadialLaw::AtomPlusPareto {
                alpha,
                tail_coefficient,
            } => {
                if v <= tail_coefficient {
                    (tail_coefficient / v).powf(1.0 / alpha)
                } else {
                    1.0
                }
            }
            RadialLaw::OscillatingTail {
                alpha,
                amplitude,
                sign,
            } => oscillating_inverse(alpha, amplitude, sign, v),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConstruction(format!(
            "alpha must be positive, got {alpha}"
        )))
    }
}

/// Solves `e^{-αt}(1 + s·a·sin t) = v` for `t = ln r ≥ 0`.
fn oscillating_inverse(alpha: f64, a: f64, s: f64, v: f64) -> f64 {
    let target = v.ln();
    let g = |t: f64| -alpha * t + (1.0 + s * a * t.sin()).ln() - target;
    let dg = |t: f64| -alpha + s * a * t.cos() / (1.0 + s * a * t.sin());
    let mut lo = (((1.0 - a).ln() - target) / alpha).max(0.0);
    let mut hi = ((1.0 + a).ln() - target) / alpha;
    if hi <= lo {
        return lo.exp();
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..200 {
        let val = g(t);
        if val == 0.0 {
            break;
        }
        if val > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.max(1.0) {
            break;
        }
        let step = t - val / dg(t);
        t = if step > lo && step < hi {
            step
        } else {
            0.5 * (lo + hi)
        };
    }
    t.exp()
}

/// JSON form of a radial law; `alpha` comes from the enclosing model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialSpec {
    Pareto,
    AtomPlusPareto {
        atom_mass: f64,
        tail_coefficient: f64,
    },
    OscillatingTail {
        amplitude: f64,
        #[serde(default = "plus")]
        sign: f64,
    },
}

fn plus() -> f64 {
    1.0
}

impl RadialSpec {
    pub fn build(&self, alpha: f64) -> Result<RadialLaw> {
        match *self {
            RadialSpec::Pareto => RadialLaw::pareto(alpha),
            RadialSpec::AtomPlusPareto {
                atom_mass,
                tail_coefficient,
            } => RadialLaw::atom_plus_pareto(alpha, atom_mass, tail_coefficient),
            RadialSpec::OscillatingTail { amplitude, sign } => {
                RadialLaw::oscillating(alpha, amplitude, sign)
            }
        }
    }

    pub fn of(law: &RadialLaw) -> Self {
        match *law {
            RadialLaw::Pareto { .. } => RadialSpec::Pareto,
            RadialLaw::AtomPlusPareto {
                tail_coefficient, ..
            } => RadialSpec::AtomPlusPareto {
                atom_mass: 1.0 - tail_coefficient,
                tail_coefficient,
            },
            RadialLaw::OscillatingTail {
                amplitude, sign, ..
            } => RadialSpec::OscillatingTail { amplitude, sign },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    fn log_grid() -> impl Iterator<Item = f64> {
        (0..10_000).map(|i| (i as f64 * 20.0 / 10_000.0).exp())
    }

    #[test]
    fn tails_are_monotone_and_in_range() {
        let laws = [
            RadialLaw::pareto(1.5).unwrap(),
            RadialLaw::atom_plus_pareto(1.0, 0.3, 0.7).unwrap(),
            RadialLaw::oscillating(1.0, 0.5, 1.0).unwrap(),
            RadialLaw::oscillating(1.0, 0.5, -1.0).unwrap(),
        ];
        for law in laws {
            let mut prev = 1.0;
            for r in log_grid() {
                let t = law.tail(r);
                assert!((0.0..=1.0).contains(&t));
                assert!(t <= prev + 1e-15, "{law:?} at {r}");
                prev = t;
            }
        }
    }

    #[test]
    fn oscillating_side_tail_peak() {
        let law = RadialLaw::oscillating(1.0, 0.5, 1.0).unwrap();
        let r = std::f64::consts::FRAC_PI_2.exp();
        assert!((r * law.tail(r) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn monotonicity_violation_is_rejected() {
        assert!(matches!(
            RadialLaw::oscillating(0.5, 0.9, 1.0),
            Err(Error::InvalidConstruction(_))
        ));
    }

    #[test]
    fn inversion_hits_the_tail() {
        let law = RadialLaw::oscillating(1.0, 0.5, -1.0).unwrap();
        for v in [1.0, 0.9, 0.5, 0.1, 1e-3, 1e-9] {
            let r = oscillating_inverse(1.0, 0.5, -1.0, v);
            assert!(
                (law.tail(r) - v).abs() <= 1e-12 * v.max(1e-300) + 1e-15,
                "v = {v}"
            );
        }
    }

    #[test]
    fn atom_plus_pareto_sampling_frequency() {
        let law = RadialLaw::atom_plus_pareto(1.0, 0.6, 0.4).unwrap();
        let mut rng = substream(9, Purpose::Sampling, 0);
        let n = 100_000;
        let atoms = (0..n).filter(|_| law.sample(&mut rng) == 1.0).count();
        let p = atoms as f64 / n as f64;
        assert!((p - 0.6).abs() < 4.0 * (0.24 / n as f64).sqrt());
    }
}
