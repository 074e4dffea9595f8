//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::LN_2;
use std::process::Command;

use regvar::batch::SampleBatch;
use regvar::estimation::hill_estimator;
use regvar::measure::SpectralMeasure;
use regvar::models::{sample, PolarIndependent, RadialLaw};
use regvar_cli::report::Report;
use regvar_cli::scenarios::{run_scenario, Scenario, ScenarioName};

struct Outcome {
    pass: bool,
    detail: String,
}

fn value(r: &Report, check: &str) -> f64 {
    r.check(check).map_or(f64::NAN, |c| c.value)
}

fn scenario(name: ScenarioName) -> Report {
    run_scenario(&Scenario::new(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn c1() -> Outcome {
    let r = scenario(ScenarioName::Theorem1);
    let runtime = r.runtime_s.unwrap_or(f64::INFINITY);
    let tv = value(&r, "tv");
    Outcome {
        pass: r.passed() && tv <= 0.05 && runtime < 30.0,
        detail: format!("tv = {tv:.4} (≤ 0.05), runtime = {runtime:.2}s (< 30s)"),
    }
}

fn c2() -> Outcome {
    let r = scenario(ScenarioName::Corollary1);
    let exact = value(&r, "exact_ks");
    let e0 = value(&r, "atom0_weight_error");
    let e1 = value(&r, "atom1_weight_error");
    Outcome {
        pass: r.passed() && exact <= 1e-9 && e0 <= 0.03 && e1 <= 0.03,
        detail: format!("weight errors {e0:.4}, {e1:.4} (≤ 0.03), exact ks = {exact:.1e} (≤ 1e-9)"),
    }
}

fn c3() -> Outcome {
    let r = scenario(ScenarioName::Theorem2);
    let ks = value(&r, "ks");
    let id = value(&r, "limit_identity_error");
    Outcome {
        pass: r.passed() && ks <= 0.05 && id <= 1e-12,
        detail: format!("ks = {ks:.4} (≤ 0.05), limit identity error = {id:.1e} (≤ 1e-12)"),
    }
}

fn c4() -> Outcome {
    let r = scenario(ScenarioName::Theorem3);
    let m = value(&r, "moment");
    let me = value(&r, "moment_error");
    let ks = value(&r, "ks");
    Outcome {
        pass: r.passed() && m.is_finite() && me <= 1e-6 && ks <= 0.06,
        detail: format!("moment = {m:.6} (hand error {me:.1e} ≤ 1e-6), ks = {ks:.4} (≤ 0.06)"),
    }
}

fn c5() -> Outcome {
    let r = scenario(ScenarioName::Corollary2);
    let ks = value(&r, "ks");
    let rel = value(&r, "moment_path_relative_error");
    Outcome {
        pass: r.passed() && ks <= 0.06 && rel <= 0.01,
        detail: format!("ks = {ks:.4} (≤ 0.06), analytic vs Monte Carlo = {rel:.2e} (≤ 0.01)"),
    }
}

fn c6() -> Outcome {
    let r = scenario(ScenarioName::Example1);
    let range = value(&r, "side_oscillation_range");
    let dev = value(&r, "mixture_deviation");
    Outcome {
        pass: r.passed() && range >= 0.9 && dev <= 1e-12,
        detail: format!("side range = {range:.4} (≥ 0.9), mixture deviation = {dev:.1e} (≤ 1e-12)"),
    }
}

fn c7() -> Outcome {
    let r = scenario(ScenarioName::Example2);
    let step = value(&r, "transformed_min_increment");
    let margin = value(&r, "bound_margin");
    let flat = value(&r, "untransformed_range");
    let m = value(&r, "moment");
    let at_1e3 = r.measured["lower_bounds"][1].as_f64().unwrap_or(f64::NAN);
    Outcome {
        pass: r.passed()
            && step > 0.0
            && margin >= 0.0
            && flat <= 1e-9
            && m.is_finite()
            && (at_1e3 - 3.152).abs() < 5e-4,
        detail: format!(
            "min increment = {step:.4}, bound margin = {margin:.4}, bound(1e3) = {at_1e3:.4}, \
             untransformed range = {flat:.1e}, moment = {m:.4}"
        ),
    }
}

fn c8() -> Outcome {
    let r = scenario(ScenarioName::Example3);
    let frac = r.measured["surviving_fraction"]
        .as_f64()
        .unwrap_or(f64::NAN);
    let ratio = r.measured["dmu_dsigma_at_0"].as_f64().unwrap_or(f64::NAN);
    let h0 = r.measured["h0_alpha"].as_f64().unwrap_or(f64::NAN);
    Outcome {
        pass: r.passed() && (frac - 0.5).abs() <= 0.03 && h0 == 0.0 && ratio == 0.5,
        detail: format!(
            "surviving fraction = {frac:.4} (½ ± 0.03), h(0)^α = {h0} vs dμ/dσ(0) = {ratio}"
        ),
    }
}

fn c9() -> Outcome {
    let model =
        PolarIndependent::new(SpectralMeasure::uniform(), RadialLaw::pareto(1.5).unwrap()).unwrap();
    let x = sample(&model, 100_000, 42).unwrap();
    let a = hill_estimator(&x, 1000).unwrap();
    let hand = SampleBatch::from_rows(
        2,
        &[16.0, 0.0, 8.0, 0.0, 4.0, 0.0, 2.0, 0.0, 1.0, 0.0],
        None,
    )
    .unwrap();
    let h = hill_estimator(&hand, 4).unwrap();
    let want = 1.0 / (2.5 * LN_2);
    Outcome {
        pass: (1.35..=1.65).contains(&a) && (h - want).abs() <= 1e-12,
        detail: format!(
            "Pareto(1.5) α̂ = {a:.4}, hand case error = {:.1e}",
            (h - want).abs()
        ),
    }
}

fn verify_bytes(name: ScenarioName, workers: usize) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_regvar"))
        .args([
            "--workers",
            &workers.to_string(),
            "verify",
            "--scenario",
            name.as_str(),
        ])
        .arg("--omit-runtime")
        .output()
        .expect("run regvar");
    assert!(out.status.code().is_some(), "regvar terminated by a signal");
    out.stdout
}

fn c10() -> Outcome {
    let mut bad = Vec::new();
    for name in ScenarioName::ALL {
        let a = verify_bytes(name, 4);
        let b = verify_bytes(name, 4);
        let c = verify_bytes(name, 1);
        if a.is_empty() || a != b || a != c {
            bad.push(name.as_str());
        }
    }
    Outcome {
        pass: bad.is_empty(),
        detail: if bad.is_empty() {
            "all scenario reports identical across runs and 1 vs 4 workers".into()
        } else {
            format!("reports differ for {}", bad.join(", "))
        },
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("pushforward under quadrant snap", c1),
        ("quantile transform onto two atoms", c2),
        ("bounded radial gain", c3),
        ("unbounded gain with moment condition", c4),
        ("random exponential gain", c5),
        ("oscillating side tail", c6),
        ("unbounded gain breaks regular variation", c7),
        ("indicator gain halves the limit", c8),
        ("Hill estimator", c9),
        ("determinism", c10),
    ];
    let mut failed = 0;
    for (i, (label, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {label}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
