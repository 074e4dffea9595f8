//! Named scenarios: each samples a model, applies a transform, and checks
//! the result against the analytic limit, or checks a closed-form
//! counterexample.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use regvar::error::{Error, Result};
use regvar::estimation::{
    distances, empirical_spectral, tail_scan, top_count, Distances, ScanSource,
};
use regvar::geometry::{ArcSet, EvalSet};
use regvar::measure::{
    AtomSpec, GainSpec, MapSpec, MeasureKind, MeasureSpec, MomentPath, NamedDensity, RadialGain,
    RandomGainProcess, RandomGainSpec, SpectralMeasure, MC_MOMENT_DRAWS,
};
use regvar::models::{
    sample, transformed_exact_tail, MappedModel, ModelSpec, PolarIndependent, RadialLaw,
    RadialSpec, RegVarModel,
};
use regvar::quadrature::integrate;
use regvar::transforms::{
    limit_pushforward_radial, limit_pushforward_spherical, moment_condition, radial_scale_apply,
    randomized_scale_apply, spherical_map_apply, LimitMeasure,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::report::{Check, Relation, Report};

pub const DEFAULT_N: usize = 200_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOP_FRACTION: f64 = 0.01;

/// Half-width of the arc used to read off the weight of an atom.
const ATOM_WINDOW: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Theorem1,
    Corollary1,
    Theorem2,
    Theorem3,
    Corollary2,
    Example1,
    Example2,
    Example3,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        ScenarioName::Theorem1,
        ScenarioName::Corollary1,
        ScenarioName::Theorem2,
        ScenarioName::Theorem3,
        ScenarioName::Corollary2,
        ScenarioName::Example1,
        ScenarioName::Example2,
        ScenarioName::Example3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Theorem1 => "theorem1",
            ScenarioName::Corollary1 => "corollary1",
            ScenarioName::Theorem2 => "theorem2",
            ScenarioName::Theorem3 => "theorem3",
            ScenarioName::Corollary2 => "corollary2",
            ScenarioName::Example1 => "example1",
            ScenarioName::Example2 => "example2",
            ScenarioName::Example3 => "example3",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scenario {s:?}")))
    }
}

/// Inputs of a scenario besides `(n, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<GainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_gain: Option<RandomGainSpec>,
    /// Target spectral measure of a quantile transform.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<MeasureSpec>,
    /// Moment order excess `ε` (or `δ`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub top_fraction: f64,
    /// Tolerance of the main sampled check.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: ScenarioName,
    pub n: usize,
    pub seed: u64,
    pub config: ScenarioConfig,
}

fn uniform_spec() -> MeasureSpec {
    MeasureSpec {
        kind: MeasureKind::Density,
        dim: 2,
        atoms: Vec::new(),
        density: Some(NamedDensity::Uniform { scale: 1.0 }),
    }
}

fn uniform_pareto(alpha: f64) -> ModelSpec {
    ModelSpec::PolarIndependent {
        alpha,
        sigma: uniform_spec(),
        radial: RadialSpec::Pareto,
    }
}

fn two_atoms() -> MeasureSpec {
    MeasureSpec {
        kind: MeasureKind::Discrete,
        dim: 2,
        atoms: vec![
            AtomSpec {
                angle: Some(FRAC_PI_2),
                coords: None,
                weight: 0.3,
            },
            AtomSpec {
                angle: Some(3.0 * FRAC_PI_2),
                coords: None,
                weight: 0.7,
            },
        ],
        density: None,
    }
}

impl ScenarioConfig {
    pub fn default_for(name: ScenarioName) -> Self {
        let base = ScenarioConfig {
            model: uniform_pareto(1.0),
            map: None,
            gain: None,
            random_gain: None,
            target: None,
            epsilon: None,
            top_fraction: DEFAULT_TOP_FRACTION,
            tolerance: 0.05,
        };
        match name {
            ScenarioName::Theorem1 => ScenarioConfig {
                map: Some(MapSpec::QuadrantSnap),
                ..base
            },
            ScenarioName::Corollary1 => ScenarioConfig {
                map: Some(MapSpec::QuantileTransform {
                    target: two_atoms(),
                }),
                target: Some(two_atoms()),
                tolerance: 0.03,
                ..base
            },
            ScenarioName::Theorem2 => ScenarioConfig {
                model: uniform_pareto(2.0),
                gain: Some(GainSpec::Cosine {
                    offset: 1.0,
                    amplitude: 0.5,
                }),
                ..base
            },
            ScenarioName::Theorem3 => ScenarioConfig {
                gain: Some(GainSpec::PowerCusp {
                    center: PI,
                    gamma: 0.2,
                }),
                epsilon: Some(0.5),
                tolerance: 0.06,
                ..base
            },
            ScenarioName::Corollary2 => ScenarioConfig {
                random_gain: Some(RandomGainSpec::RandomExponential {
                    mean: GainSpec::Cosine {
                        offset: 1.0,
                        amplitude: 0.5,
                    },
                }),
                tolerance: 0.06,
                ..base
            },
            ScenarioName::Example1 => ScenarioConfig {
                model: ModelSpec::Example1 {
                    alpha: 1.0,
                    amplitude: 0.5,
                },
                map: Some(MapSpec::SignMap),
                tolerance: 0.9,
                ..base
            },
            ScenarioName::Example2 => ScenarioConfig {
                model: ModelSpec::Example2 {
                    alpha: 1.0,
                    nu: 0.5,
                    beta: 1.2,
                },
                gain: Some(GainSpec::Example2Gain { beta: 1.2 }),
                epsilon: Some(0.05),
                tolerance: 1e-9,
                ..base
            },
            ScenarioName::Example3 => ScenarioConfig {
                model: ModelSpec::Example3 { alpha: 1.0 },
                gain: Some(GainSpec::IndicatorArc {
                    // The open arc (0, 2π): 5e-324 is the least positive double.
                    arcs: ArcSet::single(5e-324, TAU).expect("valid arc"),
                }),
                tolerance: 0.03,
                ..base
            },
        }
    }
}

impl Scenario {
    pub fn new(name: ScenarioName) -> Self {
        Self {
            name,
            n: DEFAULT_N,
            seed: DEFAULT_SEED,
            config: ScenarioConfig::default_for(name),
        }
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_config(mut self, config: ScenarioConfig) -> Self {
        self.config = config;
        self
    }

    fn k_top(&self) -> usize {
        top_count(self.config.top_fraction, self.n)
    }
}

/// Accumulates checks and measurements.
struct Run {
    checks: Vec<Check>,
    measured: BTreeMap<String, Value>,
}

impl Run {
    fn new() -> Self {
        Self {
            checks: Vec::new(),
            measured: BTreeMap::new(),
        }
    }

    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn measure(&mut self, key: &str, value: impl Serialize) {
        self.measured.insert(
            key.to_string(),
            serde_json::to_value(value).expect("serializable"),
        );
    }

    fn distances(&mut self, d: &Distances, tolerance: f64) {
        self.measure("distances", d);
        match (d.tv, d.ks) {
            (Some(tv), _) => self.check(Check::at_most("tv", tv, tolerance)),
            (None, Some(ks)) => self.check(Check::at_most("ks", ks, tolerance)),
            (None, None) => self.check(Check::at_most("distance", f64::NAN, tolerance)),
        }
    }
}

fn required<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidArgument(format!("scenario config needs a {what}")))
}

fn sigma_of(model: &dyn RegVarModel) -> Result<&SpectralMeasure> {
    model
        .spectral()
        .ok_or_else(|| Error::Unsupported("model has no spectral measure".into()))
}

/// Runs a scenario. Hypothesis violations are reported before sampling.
pub fn run_scenario(s: &Scenario) -> Result<Report> {
    let start = Instant::now();
    let mut run = Run::new();
    match s.name {
        ScenarioName::Theorem1 => theorem1(s, &mut run)?,
        ScenarioName::Corollary1 => corollary1(s, &mut run)?,
        ScenarioName::Theorem2 => theorem2(s, &mut run)?,
        ScenarioName::Theorem3 => theorem3(s, &mut run)?,
        ScenarioName::Corollary2 => corollary2(s, &mut run)?,
        ScenarioName::Example1 => example1(s, &mut run)?,
        ScenarioName::Example2 => example2(s, &mut run)?,
        ScenarioName::Example3 => example3(s, &mut run)?,
    }
    Ok(Report {
        scenario: s.name.as_str().to_string(),
        config: json!({ "n": s.n, "seed": s.seed, "config": s.config }),
        checks: run.checks,
        measured: run.measured,
        runtime_s: Some(start.elapsed().as_secs_f64()),
    })
}

/// Spectral measure of a sample after the map, against `σ f⁻¹`.
fn theorem1(s: &Scenario, run: &mut Run) -> Result<()> {
    let model = s.config.model.build()?;
    let f = required(&s.config.map, "map")?.build()?;
    let sigma = sigma_of(model.as_ref())?;
    let q = LimitMeasure::new(model.alpha(), sigma.clone())?;
    let limit = limit_pushforward_spherical(&q, &f)?;
    run.check(Check::at_most(
        "alpha_change",
        (limit.alpha() - q.alpha()).abs(),
        0.0,
    ));

    let x = sample(model.as_ref(), s.n, s.seed)?;
    let y = spherical_map_apply(&x, &f)?.rematerialize()?;
    let k = s.k_top();
    let hat = empirical_spectral(&y, k)?;
    run.measure("k_used", k);
    if let Some(atoms) = limit.spectral().angular_atoms() {
        run.measure("target_atoms", atoms);
    }
    run.distances(&distances(&hat, limit.spectral())?, s.config.tolerance);
    Ok(())
}

/// Quantile transform of a uniform direction onto a target measure.
fn corollary1(s: &Scenario, run: &mut Run) -> Result<()> {
    let model = s.config.model.build()?;
    let f = required(&s.config.map, "map")?.build()?;
    let mu = SpectralMeasure::from_spec(required(&s.config.target, "target")?)?.normalize()?;
    let sigma = sigma_of(model.as_ref())?;
    let image = sigma.pushforward(&f)?;
    let exact = regvar::measure::distance_ks(&image.normalize()?, &mu)?;
    run.check(Check::at_most("exact_ks", exact, 1e-9));

    let x = sample(model.as_ref(), s.n, s.seed)?;
    let y = spherical_map_apply(&x, &f)?.rematerialize()?;
    let k = s.k_top();
    let hat = empirical_spectral(&y, k)?;
    run.measure("k_used", k);
    let targets = mu
        .angular_atoms()
        .ok_or_else(|| Error::Unsupported("target must be discrete on the circle".into()))?;
    let mut recovered = Vec::new();
    for (i, &(theta, w)) in targets.iter().enumerate() {
        let window = EvalSet::Arcs(ArcSet::around(theta, ATOM_WINDOW)?);
        let got = hat.measure_of(&window)?;
        recovered.push(json!({ "angle": theta, "target": w, "recovered": got }));
        run.check(Check::at_most(
            format!("atom{i}_weight_error"),
            (got - w).abs(),
            s.config.tolerance,
        ));
    }
    run.measure("atoms", recovered);
    Ok(())
}

fn bounded_gain(s: &Scenario) -> Result<RadialGain> {
    let h = required(&s.config.gain, "gain")?.build()?;
    if h.declared_bound().is_none() {
        return Err(Error::HypothesisViolation(
            "bounded-gain scenario needs a gain with a declared bound".into(),
        ));
    }
    Ok(h)
}

/// `∫_B h^α dσ`. For a uniform `σ`, a cosine gain and `α = 2` this uses the
/// antiderivative of `(c + a cos θ)²`; otherwise quadrature.
fn reweighted_arc_mass(sigma: &SpectralMeasure, h: &RadialGain, alpha: f64, arcs: &ArcSet) -> f64 {
    let d = sigma.density().expect("density");
    if let (
        Some(NamedDensity::Uniform { scale }),
        Some(&GainSpec::Cosine {
            offset: c,
            amplitude: a,
        }),
    ) = (d.named_form(), h.spec())
    {
        if alpha == 2.0 {
            let f = |t: f64| {
                c * c * t + 2.0 * c * a * t.sin() + a * a * (t / 2.0 + (2.0 * t).sin() / 4.0)
            };
            return arcs
                .arcs()
                .iter()
                .map(|&(lo, hi)| f(hi) - f(lo))
                .sum::<f64>()
                * scale
                / TAU;
        }
    }
    let g = |t: f64| d.eval(t) * h.eval_angle(t).powf(alpha);
    let mut bp = h.breakpoints().to_vec();
    bp.extend_from_slice(d.breakpoints());
    arcs.arcs()
        .iter()
        .map(|&(a, b)| integrate(&g, a, b, &bp).value)
        .sum()
}

/// Radial gain: the spectral measure of the sample against `h^α dσ`.
fn theorem2(s: &Scenario, run: &mut Run) -> Result<()> {
    let h = bounded_gain(s)?;
    let model = s.config.model.build()?;
    let sigma = sigma_of(model.as_ref())?;
    let alpha = model.alpha();
    let q = LimitMeasure::new(alpha, sigma.clone())?;
    let limit = limit_pushforward_radial(&q, &h)?;
    run.check(Check::at_most(
        "alpha_change",
        (limit.alpha() - alpha).abs(),
        0.0,
    ));

    if sigma.density().is_some() {
        // Q((r, ∞) × B) = r^{-α} ∫_B h^α dσ on a grid of 40 arcs and 25 radii.
        let mut worst: f64 = 0.0;
        for j in 0..40 {
            let start = TAU * j as f64 / 40.0;
            let width = 0.1 + 0.05 * (j % 7) as f64;
            let arcs = ArcSet::wrapping(start, start + width)?;
            let mass = reweighted_arc_mass(sigma, &h, alpha, &arcs);
            let set = EvalSet::Arcs(arcs);
            for i in 0..25 {
                let r = 10f64.powf(-1.0 + i as f64 / 6.0);
                let got = limit.eval(r, &set)?;
                let want = mass * r.powf(-alpha);
                worst = worst.max((got - want).abs() / want.abs().max(1.0));
            }
        }
        run.check(Check::at_most("limit_identity_error", worst, 1e-12));
    }

    let x = sample(model.as_ref(), s.n, s.seed)?;
    let y = radial_scale_apply(&x, &h)?.rematerialize()?;
    let k = s.k_top();
    let hat = empirical_spectral(&y, k)?;
    run.measure("k_used", k);
    let d = distances(&hat, limit.spectral())?;
    run.measure("distances", &d);
    run.check(Check::at_most(
        "ks",
        d.ks.unwrap_or(f64::NAN),
        s.config.tolerance,
    ));
    Ok(())
}

/// Unbounded gain on a polar-independent model under a moment condition.
fn theorem3(s: &Scenario, run: &mut Run) -> Result<()> {
    let model = s.config.model.build()?;
    if !model.polar_independent() {
        return Err(Error::HypothesisViolation(
            "the moment route needs a model with independent norm and direction".into(),
        ));
    }
    let h = required(&s.config.gain, "gain")?.build()?;
    let eps = *required(&s.config.epsilon, "epsilon")?;
    let sigma = sigma_of(model.as_ref())?;
    let alpha = model.alpha();
    let moment = match moment_condition(sigma, &h, alpha, eps) {
        Ok(v) => v,
        Err(Error::MomentDivergence(_)) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    run.check(Check::new("moment", moment, Relation::Finite, 0.0));
    if let (Some(GainSpec::PowerCusp { gamma, .. }), Some(d)) = (h.spec(), sigma.density()) {
        if let Some(NamedDensity::Uniform { scale }) = d.named_form() {
            // 2 ∫_0^π t^{-γp} dt / 2π
            let e = 1.0 - gamma * (alpha + eps);
            let hand = scale * 2.0 * PI.powf(e) / (e * TAU);
            run.measure("moment_hand", hand);
            run.check(Check::at_most("moment_error", (moment - hand).abs(), 1e-6));
        }
    }

    let x = sample(model.as_ref(), s.n, s.seed)?;
    let y = radial_scale_apply(&x, &h)?.rematerialize()?;
    let k = s.k_top();
    let hat = empirical_spectral(&y, k)?;
    run.measure("k_used", k);
    let d = distances(&hat, &sigma.reweight(&h, alpha)?)?;
    run.measure("distances", &d);
    run.check(Check::at_most(
        "ks",
        d.ks.unwrap_or(f64::NAN),
        s.config.tolerance,
    ));
    Ok(())
}

/// Random gain: the spectral measure of the sample against `E[Z^α] dσ`.
fn corollary2(s: &Scenario, run: &mut Run) -> Result<()> {
    let model = s.config.model.build()?;
    let z = required(&s.config.random_gain, "random gain")?.build()?;
    let sigma = sigma_of(model.as_ref())?;
    let alpha = model.alpha();
    let analytic = sigma.expected_gain_reweight(&z, alpha, MomentPath::Analytic)?;
    let mc = sigma.expected_gain_reweight(
        &z,
        alpha,
        MomentPath::MonteCarlo {
            draws: MC_MOMENT_DRAWS,
            seed: s.seed,
        },
    )?;
    let mut worst = (mc.total_mass() - analytic.total_mass()).abs() / analytic.total_mass();
    if sigma.dim() == 2 {
        for j in 0..4 {
            let arc = EvalSet::Arcs(ArcSet::single(
                FRAC_PI_2 * j as f64,
                FRAC_PI_2 * (j + 1) as f64,
            )?);
            let (a, m) = (analytic.measure_of(&arc)?, mc.measure_of(&arc)?);
            worst = worst.max((m - a).abs() / a);
        }
    }
    run.measure("moment_mass_analytic", analytic.total_mass());
    run.measure("moment_mass_monte_carlo", mc.total_mass());
    run.check(Check::at_most("moment_path_relative_error", worst, 0.01));

    let x = sample(model.as_ref(), s.n, s.seed)?;
    let y = randomized_scale_apply(&x, &z, s.seed)?.rematerialize()?;
    let k = s.k_top();
    let hat = empirical_spectral(&y, k)?;
    run.measure("k_used", k);
    let d = distances(&hat, &analytic)?;
    run.measure("distances", &d);
    run.check(Check::at_most(
        "ks",
        d.ks.unwrap_or(f64::NAN),
        s.config.tolerance,
    ));
    Ok(())
}

/// `r_j b_n` for `r_j = e^{2πj/16}`, `j = 0..=16`.
fn oscillation_grid(bn: f64) -> Vec<f64> {
    (0..=16)
        .map(|j| bn * (TAU * j as f64 / 16.0).exp())
        .collect()
}

/// Two non-regularly-varying halves with a Pareto mixture.
fn example1(s: &Scenario, run: &mut Run) -> Result<()> {
    let ModelSpec::Example1 { alpha, amplitude } = s.config.model else {
        return Err(Error::InvalidArgument(
            "example1 scenario needs the example1 model".into(),
        ));
    };
    let model = s.config.model.build()?;
    let bn = (s.n as f64).powf(1.0 / alpha);
    let grid = oscillation_grid(bn);
    let side = PolarIndependent::new(
        SpectralMeasure::dirac(0.0),
        RadialLaw::oscillating(alpha, amplitude, 1.0)?,
    )?;
    let side_scan = tail_scan(
        ScanSource::Exact {
            model: &side,
            gain: None,
        },
        alpha,
        &[EvalSet::Full],
        &grid,
    )?;
    run.measure("side_values", &side_scan.values[0]);
    run.check(Check::at_least(
        "side_oscillation_range",
        side_scan.full_range()[0],
        s.config.tolerance,
    ));
    let mixture = tail_scan(
        ScanSource::Exact {
            model: model.as_ref(),
            gain: None,
        },
        alpha,
        &[EvalSet::Full],
        &grid,
    )?;
    let dev = mixture.values[0]
        .iter()
        .map(|v| (v - 1.0).abs())
        .fold(0.0, f64::max);
    run.check(Check::at_most("mixture_deviation", dev, 1e-12));

    // After the sign map each half sits on its own atom and keeps its
    // oscillation.
    if let Some(map) = &s.config.map {
        let mapped = MappedModel::new(model, map.build()?)?;
        let halves = [
            EvalSet::Arcs(ArcSet::around(FRAC_PI_2, 0.1)?),
            EvalSet::Arcs(ArcSet::around(3.0 * FRAC_PI_2, 0.1)?),
        ];
        if let Ok(scan) = tail_scan(
            ScanSource::Exact {
                model: &mapped,
                gain: None,
            },
            alpha,
            &halves,
            &grid,
        ) {
            run.measure("mapped_oscillation_range", scan.full_range());
        }
        let x = sample(&mapped, s.n, s.seed)?;
        let k = s.k_top();
        let hat = empirical_spectral(&x, k)?;
        run.measure("mapped_upper_fraction", hat.measure_of(&halves[0])?);
    }
    Ok(())
}

/// An unbounded gain that breaks regular variation.
fn example2(s: &Scenario, run: &mut Run) -> Result<()> {
    let model = s.config.model.build()?;
    let h = required(&s.config.gain, "gain")?.build()?;
    let alpha = model.alpha();
    let grid = [1e2, 1e3, 1e4];
    let full = [EvalSet::Full];
    let scan = tail_scan(
        ScanSource::Exact {
            model: model.as_ref(),
            gain: Some(&h),
        },
        alpha,
        &full,
        &grid,
    )?;
    let v = &scan.values[0];
    let bounds: Vec<f64> = grid
        .iter()
        .map(|&r| match h.spec() {
            Some(GainSpec::Example2Gain { beta }) => r.powf(alpha) / (r.powf(1.0 / beta) + 1.0),
            _ => f64::NAN,
        })
        .collect();
    run.measure("transformed_values", v);
    run.measure("lower_bounds", &bounds);
    let step = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    run.check(Check::new(
        "transformed_min_increment",
        step,
        Relation::Above,
        0.0,
    ));
    let margin = v
        .iter()
        .zip(&bounds)
        .map(|(v, b)| v - b)
        .fold(f64::INFINITY, f64::min);
    run.check(Check::at_least("bound_margin", margin, 0.0));

    let plain = tail_scan(
        ScanSource::Exact {
            model: model.as_ref(),
            gain: None,
        },
        alpha,
        &full,
        &grid,
    )?;
    run.measure("untransformed_values", &plain.values[0]);
    run.check(Check::at_most(
        "untransformed_range",
        plain.full_range()[0],
        s.config.tolerance,
    ));

    let delta = *required(&s.config.epsilon, "epsilon")?;
    let moment = match model.gain_moment(&h, alpha + delta) {
        Some(Ok(m)) => m,
        Some(Err(Error::MomentDivergence(_))) => f64::INFINITY,
        Some(Err(e)) => return Err(e),
        None => match moment_condition(sigma_of(model.as_ref())?, &h, alpha, delta) {
            Ok(m) => m,
            Err(Error::MomentDivergence(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        },
    };
    run.check(Check::new("moment", moment, Relation::Finite, 0.0));
    Ok(())
}

/// A bounded gain that is discontinuous on the support of `σ`.
fn example3(s: &Scenario, run: &mut Run) -> Result<()> {
    let model = s.config.model.build()?;
    let h = required(&s.config.gain, "gain")?.build()?;
    let alpha = model.alpha();
    let x = sample(model.as_ref(), s.n, s.seed)?;
    let y = radial_scale_apply(&x, &h)?;
    let k = s.k_top();
    let top = x.top_indices(k);
    let threshold = x.norms()[top[k - 1]];
    let before = x.norms().iter().filter(|&&r| r >= threshold).count();
    let after = y.norms().iter().filter(|&&r| r >= threshold).count();
    let ratio = after as f64 / before as f64;
    run.measure("k_used", k);
    run.measure("surviving_fraction", ratio);
    run.measure("zero_count", y.zero_count());
    run.check(Check::at_most(
        "surviving_fraction_error",
        (ratio - 0.5).abs(),
        s.config.tolerance,
    ));

    // μ = ½δ_0 while σ = δ_0 and h(0) = 0.
    let sigma = sigma_of(model.as_ref())?;
    let at_zero = EvalSet::Arcs(ArcSet::around(0.0, 0.1)?);
    let r = 1e6;
    let mu0 = transformed_exact_tail(model.as_ref(), &h, r, &at_zero)
        .ok_or_else(|| Error::Unsupported("no closed-form transformed tail".into()))?
        * r.powf(alpha);
    let ratio0 = mu0 / sigma.measure_of(&at_zero)?;
    let h0 = h.eval_angle(0.0).powf(alpha);
    run.measure("h0_alpha", h0);
    run.measure("dmu_dsigma_at_0", ratio0);
    run.check(Check::at_most(
        "dmu_dsigma_error",
        (ratio0 - 0.5).abs(),
        1e-12,
    ));
    run.check(Check::at_least(
        "density_contrast",
        (ratio0 - h0).abs(),
        0.25,
    ));
    Ok(())
}

/// Default target of the estimate step, when it has a serializable form.
pub fn default_target(s: &Scenario) -> Result<Option<SpectralMeasure>> {
    let model = s.config.model.build()?;
    let sigma = sigma_of(model.as_ref())?;
    Ok(match s.name {
        ScenarioName::Theorem1 => {
            Some(sigma.pushforward(&required(&s.config.map, "map")?.build()?)?)
        }
        ScenarioName::Corollary1 => Some(SpectralMeasure::from_spec(required(
            &s.config.target,
            "target",
        )?)?),
        _ => None,
    })
}

/// Builds a gain process from either a deterministic or a random spec.
pub fn gain_process(
    gain: Option<&GainSpec>,
    random: Option<&RandomGainSpec>,
) -> Result<RandomGainProcess> {
    match (gain, random) {
        (Some(g), None) => Ok(RandomGainProcess::Deterministic(g.build()?)),
        (None, Some(z)) => z.build(),
        _ => Err(Error::InvalidArgument("give exactly one gain".into())),
    }
}
