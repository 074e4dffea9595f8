//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 when a verified scenario fails a check, 2 on
//! usage, configuration or hypothesis errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use regvar::batch::SampleBatch;
use regvar::error::{Error, Result};
use regvar::estimation::{estimate, tail_scan, top_count, ScanSource};
use regvar::geometry::{ArcSet, EvalSet};
use regvar::measure::{GainSpec, MapSpec, MeasureSpec, RandomGainSpec, SpectralMeasure};
use regvar::models::{sample, ModelSpec};
use regvar::transforms::{radial_scale_apply, randomized_scale_apply, spherical_map_apply};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::scenarios::{run_scenario, Scenario, ScenarioConfig, ScenarioName};

#[derive(Debug, Parser)]
#[command(name = "regvar", version, about = "Regular variation on the sphere")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw points from a model and write them as CSV.
    Sample(SampleArgs),
    /// Apply a spherical map or a radial gain to a CSV sample.
    Transform(TransformArgs),
    /// Estimate the tail index and spectral measure of a CSV sample.
    Estimate(EstimateArgs),
    /// Run a named scenario and write its JSON report.
    Verify(VerifyArgs),
    /// Tabulate `r^α P{|X| > r, X/|X| ∈ B}` over a radius grid.
    Scan(ScanArgs),
}

/// JSON given inline or as a file path.
fn json_arg<T: DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg)?
    };
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Args)]
struct SampleArgs {
    /// Model JSON, inline or a file.
    #[arg(long)]
    model: String,
    #[arg(short, long)]
    n: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct TransformArgs {
    #[arg(long)]
    input: PathBuf,
    /// Spherical map JSON.
    #[arg(long, required_unless_present = "gain", conflicts_with = "gain")]
    map: Option<String>,
    /// Deterministic or random gain JSON.
    #[arg(long)]
    gain: Option<String>,
    /// Seed of the gain draws; defaults to the seed of the input.
    #[arg(long)]
    gain_seed: Option<u64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    /// Number of top points, or a fraction of the sample if below 1.
    #[arg(long)]
    top: f64,
    /// Spectral measure JSON to compare against.
    #[arg(long)]
    target: Option<String>,
    /// Seed of the bootstrap.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Report path; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    scenario: String,
    #[arg(short, long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Scenario config JSON replacing the default one.
    #[arg(long)]
    config: Option<String>,
    /// Leave the wall-clock time out of the report.
    #[arg(long)]
    omit_runtime: bool,
    /// Report path; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Model JSON for an exact scan.
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    model: Option<String>,
    /// CSV sample for an empirical scan.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Gain applied before an exact scan.
    #[arg(long, requires = "model")]
    gain: Option<String>,
    /// Tail index; defaults to that of the model.
    #[arg(long)]
    alpha: Option<f64>,
    /// `start:stop:points`, log-spaced.
    #[arg(long)]
    r_grid: String,
    /// JSON list of `[a, b]` arcs, one set each; the whole circle if absent.
    #[arg(long)]
    arcs: Option<String>,
    /// CSV path; stdout if absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::InvalidArgument(format!("radius grid {s:?} is not start:stop:points"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let m: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a > 0.0 && b > a && m >= 2) {
        return Err(bad());
    }
    let ratio = b / a;
    Ok((0..m)
        .map(|i| match i {
            0 => a,
            _ if i == m - 1 => b,
            _ => a * ratio.powf(i as f64 / (m - 1) as f64),
        })
        .collect())
}

fn read_batch(path: &Path) -> Result<SampleBatch> {
    SampleBatch::read_csv(BufReader::new(File::open(path)?))
}

fn write_batch(batch: &SampleBatch, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    batch.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_text(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_sample(a: &SampleArgs) -> Result<i32> {
    let model = json_arg::<ModelSpec>(&a.model)?.build()?;
    write_batch(&sample(model.as_ref(), a.n, a.seed)?, &a.output)?;
    Ok(0)
}

fn cmd_transform(a: &TransformArgs) -> Result<i32> {
    let x = read_batch(&a.input)?;
    let y = if let Some(m) = &a.map {
        spherical_map_apply(&x, &json_arg::<MapSpec>(m)?.build()?)?
    } else {
        let g = a.gain.as_deref().expect("clap requires a map or a gain");
        match json_arg::<GainSpec>(g) {
            Ok(spec) => radial_scale_apply(&x, &spec.build()?)?,
            Err(_) => {
                let z = json_arg::<RandomGainSpec>(g)?.build()?;
                let seed = a.gain_seed.or(x.seed()).unwrap_or(0);
                randomized_scale_apply(&x, &z, seed)?
            }
        }
    };
    write_batch(&y, &a.output)?;
    let summary = json!({ "n_in": x.len(), "n_out": y.len(), "zero_count": y.zero_count() });
    println!("{summary}");
    Ok(0)
}

fn cmd_estimate(a: &EstimateArgs) -> Result<i32> {
    let x = read_batch(&a.input)?;
    let k = if a.top > 0.0 && a.top < 1.0 {
        top_count(a.top, x.len())
    } else if a.top >= 1.0 && a.top.fract() == 0.0 {
        a.top as usize
    } else {
        return Err(Error::InvalidArgument(format!(
            "--top must be a count or a fraction in (0, 1), got {}",
            a.top
        )));
    };
    let target = a
        .target
        .as_deref()
        .map(|t| SpectralMeasure::from_spec(&json_arg::<MeasureSpec>(t)?))
        .transpose()?;
    let report = estimate(&x, k, target.as_ref(), a.seed)?;
    let mut text = serde_json::to_string_pretty(&report.to_json()?)?;
    text.push('\n');
    write_text(&text, a.output.as_deref())?;
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let name: ScenarioName = a.scenario.parse()?;
    let mut s = Scenario::new(name);
    if let Some(n) = a.n {
        s = s.with_n(n);
    }
    if let Some(seed) = a.seed {
        s = s.with_seed(seed);
    }
    if let Some(c) = &a.config {
        s = s.with_config(json_arg::<ScenarioConfig>(c)?);
    }
    let mut report = run_scenario(&s)?;
    if a.omit_runtime {
        report.runtime_s = None;
    }
    write_text(&report.to_json(), a.output.as_deref())?;
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_scan(a: &ScanArgs) -> Result<i32> {
    let grid = parse_grid(&a.r_grid)?;
    let sets = match &a.arcs {
        None => vec![EvalSet::Full],
        Some(s) => json_arg::<Vec<(f64, f64)>>(s)?
            .into_iter()
            .map(|(lo, hi)| Ok(EvalSet::Arcs(ArcSet::wrapping(lo, hi)?)))
            .collect::<Result<_>>()?,
    };
    let scan = if let Some(m) = &a.model {
        let model = json_arg::<ModelSpec>(m)?.build()?;
        let gain = a
            .gain
            .as_deref()
            .map(|g| json_arg::<GainSpec>(g)?.build())
            .transpose()?;
        let alpha = a.alpha.unwrap_or(model.alpha());
        tail_scan(
            ScanSource::Exact {
                model: model.as_ref(),
                gain: gain.as_ref(),
            },
            alpha,
            &sets,
            &grid,
        )?
    } else {
        let x = read_batch(
            a.input
                .as_deref()
                .expect("clap requires a model or an input"),
        )?;
        let alpha = a
            .alpha
            .ok_or_else(|| Error::InvalidArgument("an empirical scan needs --alpha".into()))?;
        tail_scan(ScanSource::Empirical(&x), alpha, &sets, &grid)?
    };
    let mut buf = Vec::new();
    scan.write_csv(&mut buf)?;
    write_text(
        &String::from_utf8(buf).expect("CSV is ASCII"),
        a.output.as_deref(),
    )?;
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scan(a) => cmd_scan(a),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let go = || match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    };
    match cli.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(go),
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
        None => go(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid() {
        let g = parse_grid("1:100:3").unwrap();
        assert_eq!(g[0], 1.0);
        assert_eq!(g[1], 10.0);
        assert_eq!(g[2], 100.0);
        for bad in ["1:100", "0:1:3", "5:1:3", "1:2:1", "a:b:c"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["regvar", "verify"]), 2);
        assert_eq!(run(["regvar", "verify", "--scenario", "nope"]), 2);
        assert_eq!(run(["regvar", "bogus"]), 2);
    }
}
