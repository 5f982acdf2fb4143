//! `sftlab` command line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use sftlab::analysis::{decide_empty, entropy_estimate, periodic_orbits_present};
use sftlab::ensemble::{sample, AllowedSet, EnsembleParams};
use sftlab::experiments::{run_experiment, ExperimentConfig, ExperimentKind, DEFAULT_EPSILONS};
use sftlab::geometry::Dim;
use sftlab::orbits::{enumerate_orbits, orbit_counts_upto, orbit_size_budget};
use sftlab::patterns::{Alphabet, Pattern};
use sftlab::repeatcover::{asymptotic_cover, efficient_cover, find_repeats, nuggets_bound_check, RepeatCover};
use sftlab::zeta::{independence_upper_bound, zeta_inverse};
use sftlab::SftError;

#[derive(Parser, Debug)]
#[command(name = "sftlab", version, about = "Random shifts of finite type: sampling, emptiness, entropy, orbits, zeta truncations, repeat covers and experiments")]
struct Cli {
    /// Flat `key = value` file supplying flags missing from the command line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw an allowed set and report its size.
    Sample(SampleArgs),
    /// Decide or certify emptiness of a sampled or stored shift.
    Emptiness(EmptinessArgs),
    /// Upper and periodic lower entropy estimates on a finite window.
    Entropy(EntropyArgs),
    /// Count orbits of the full shift, or list the allowed ones of a shift.
    Orbits(OrbitsArgs),
    /// Truncated inverse zeta product of the full shift.
    Zeta(ZetaArgs),
    /// Repeat cover of a pattern read from a file.
    Cover(CoverArgs),
    /// Monte Carlo experiment over a grid of alphas; CSV on stdout.
    Experiment(ExperimentArgs),
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} lies outside [0, 1]"))
    }
}

fn open_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} lies outside (0, 1)"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} is not positive"))
    }
}

#[derive(Args, Debug, Serialize)]
struct ShapeArgs {
    /// Lattice dimension.
    #[arg(long = "d", default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    d: u8,
    /// Alphabet size.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..=255))]
    alphabet: u32,
}

impl ShapeArgs {
    fn dim(&self) -> Dim {
        Dim::new(self.d as usize).expect("range checked")
    }
    fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.alphabet).expect("range checked")
    }
}

#[derive(Args, Debug, Serialize)]
struct EnsembleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shape: ShapeArgs,
    /// Window side.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Probability of keeping each window.
    #[arg(long, value_parser = unit_interval)]
    alpha: Option<f64>,
    /// Ensemble seed; generated and echoed when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args, Debug, Serialize)]
struct SourceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    ensemble: EnsembleArgs,
    /// Read the allowed set from a file written by `sample --omega-out`.
    #[arg(long, value_name = "FILE")]
    omega_in: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    ensemble: EnsembleArgs,
    /// Write the allowed set in binary form.
    #[arg(long, value_name = "FILE")]
    omega_out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EmptinessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Largest box side searched for a forbidden-pattern certificate.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=64))]
    k_max: u64,
    /// Largest torus side searched for a periodic certificate.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..=64))]
    torus_max: u64,
}

#[derive(Args, Debug, Serialize)]
struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Side of the counting window.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Boundary samples for the periodic count when it is not exact.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    boundary_samples: u64,
}

#[derive(Args, Debug, Serialize)]
struct OrbitsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    source: SourceArgs,
    /// Largest orbit size; defaults to the dimension's budget.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jmax: Option<u64>,
    /// List orbit representatives instead of counting them.
    #[arg(long)]
    list: bool,
}

#[derive(Args, Debug, Serialize)]
struct ZetaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    shape: ShapeArgs,
    /// Probability of keeping each window; above 1/|A| the product diverges.
    #[arg(long, value_parser = unit_interval)]
    alpha: f64,
    /// Orbit-size truncation; defaults to the dimension's budget.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..))]
    jmax: Option<u64>,
    /// Also report the no-periodic-orbit bound for this window side.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
}

#[derive(Args, Debug, Serialize)]
struct CoverArgs {
    /// Pattern file: header `d side |A|` then the symbols.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Side of the repeats.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Growth exponent for the side `k = n ceil(n^tau)`.
    #[arg(long, value_parser = open_unit, conflicts_with_all = ["r", "ell"])]
    tau: Option<f64>,
    /// Skeleton neighbourhood radius of the three-region cover.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), requires = "ell")]
    r: Option<u64>,
    /// Skeleton dimension of the three-region cover.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), requires = "r")]
    ell: Option<u64>,
    /// Include the repeats in the output.
    #[arg(long)]
    repeats: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Kind {
    Emptiness,
    Entropy,
    Orbits,
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[command(flatten)]
    #[serde(flatten)]
    shape: ShapeArgs,
    /// Window side.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Comma-separated alphas.
    #[arg(long, value_delimiter = ',', required = true, value_parser = unit_interval)]
    alpha: Vec<f64>,
    /// Trials per alpha.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Ensemble seed; generated and echoed when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Entropy window side; defaults to 4n.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    k: Option<u64>,
    /// Largest box side searched for a forbidden-pattern certificate.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=64))]
    k_max: u64,
    /// Largest torus side searched for a periodic certificate.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..=64))]
    torus_max: u64,
    /// Largest orbit size checked for presence; defaults to 12, capped by the dimension's budget.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    orbit_max: Option<u64>,
    /// Boundary samples for the periodic count when it is not exact.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    boundary_samples: u64,
    /// Comma-separated deviation thresholds.
    #[arg(long, value_delimiter = ',', value_parser = positive_f64)]
    epsilons: Vec<f64>,
    /// Orbit-size truncation of the zeta product.
    #[arg(long)]
    jmax: Option<u64>,
    /// Largest tolerated fraction of undecided trials.
    #[arg(long, default_value_t = 0.05, value_parser = unit_interval)]
    unknown_ceiling: f64,
    /// Largest tolerated emptiness frequency above the threshold.
    #[arg(long, default_value_t = 1e-3, value_parser = unit_interval)]
    supercritical_ceiling: f64,
    /// Worker threads; SFTLAB_THREADS caps it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    #[serde(skip)]
    threads: Option<u64>,
    /// Also write the CSV here.
    #[arg(long, value_name = "FILE")]
    csv_out: Option<PathBuf>,
    /// Write the JSON summary here.
    #[arg(long, value_name = "FILE")]
    json_out: Option<PathBuf>,
}

type Res<T> = Result<T, SftError>;

fn fresh_seed() -> u64 {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos()).unwrap_or(0);
    (nanos as u64) ^ ((nanos >> 64) as u64) ^ (std::process::id() as u64).rotate_left(32)
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> Res<T> {
    v.ok_or_else(|| SftError::Domain(format!("--{flag} is required unless --omega-in is given")))
}

fn draw(args: &EnsembleArgs) -> Res<(AllowedSet, u64)> {
    let seed = args.seed.unwrap_or_else(fresh_seed);
    let params = EnsembleParams::new(args.shape.alphabet(), args.shape.dim(), required(args.n, "n")? as usize, required(args.alpha, "alpha")?, seed)?;
    Ok((sample(&params, args.trial)?, seed))
}

/// The allowed set and a description of where it came from.
fn load(src: &SourceArgs) -> Res<(AllowedSet, Value)> {
    match &src.omega_in {
        Some(path) => {
            let omega = AllowedSet::read_from(BufReader::new(File::open(path)?))?;
            let origin = json!({"file": path, "seed": omega.seed, "trial": omega.trial});
            Ok((omega, origin))
        }
        None => {
            let (omega, seed) = draw(&src.ensemble)?;
            Ok((omega, json!({"seed": seed, "trial": src.ensemble.trial})))
        }
    }
}

fn describe(omega: &AllowedSet) -> Value {
    json!({
        "d": omega.dim().get(),
        "n": omega.n(),
        "alphabet": omega.alphabet().size(),
        "allowed": omega.count_allowed(),
        "windows": omega.codec.count,
    })
}

fn envelope(command: &str, config: &impl Serialize, result: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).expect("config serializes"),
        "result": result,
    })
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn cmd_sample(a: &SampleArgs) -> Res<Value> {
    let (omega, seed) = draw(&a.ensemble)?;
    if let Some(path) = &a.omega_out {
        let mut w = BufWriter::new(File::create(path)?);
        omega.write_to(&mut w)?;
        w.flush()?;
    }
    let mut res = describe(&omega);
    res["seed"] = json!(seed);
    res["trial"] = json!(a.ensemble.trial);
    Ok(envelope("sample", a, res))
}

fn cmd_emptiness(a: &EmptinessArgs) -> Res<Value> {
    let (omega, origin) = load(&a.source)?;
    let v = decide_empty(&omega, a.k_max as usize, a.torus_max as usize)?;
    Ok(envelope("emptiness", a, json!({"shift": describe(&omega), "origin": origin, "decision": to_value(&v)})))
}

fn cmd_entropy(a: &EntropyArgs) -> Res<Value> {
    let (omega, origin) = load(&a.source)?;
    let e = entropy_estimate(&omega, a.k as usize, a.boundary_samples)?;
    Ok(envelope("entropy", a, json!({"shift": describe(&omega), "origin": origin, "estimate": to_value(&e)})))
}

fn cmd_orbits(a: &OrbitsArgs) -> Res<Value> {
    let src = &a.source;
    let shifted = src.omega_in.is_some() || src.ensemble.alpha.is_some();
    if shifted {
        let (omega, origin) = load(src)?;
        let jmax = a.jmax.unwrap_or(orbit_size_budget(omega.dim()) as u64);
        let present = periodic_orbits_present(&omega, jmax)?;
        return Ok(envelope("orbits", a, json!({"shift": describe(&omega), "origin": origin, "present": to_value(&present)})));
    }
    let (alphabet, dim) = (src.ensemble.shape.alphabet(), src.ensemble.shape.dim());
    let jmax = a.jmax.unwrap_or(orbit_size_budget(dim) as u64);
    if a.list {
        let orbits = enumerate_orbits(alphabet, dim, jmax)?;
        return Ok(envelope("orbits", a, json!({"orbits": to_value(&orbits)})));
    }
    let counts = orbit_counts_upto(alphabet, dim, jmax)?;
    Ok(envelope("orbits", a, json!({"counts": to_value(&counts)})))
}

fn cmd_zeta(a: &ZetaArgs) -> Res<Value> {
    let z = zeta_inverse(a.shape.alphabet(), a.shape.dim(), a.alpha, a.jmax)?;
    let mut res = to_value(&z);
    if let Some(n) = a.n {
        res["no_orbit_bound"] = json!(independence_upper_bound(a.shape.alphabet(), a.shape.dim(), a.alpha, n as usize)?);
    }
    Ok(envelope("zeta", a, res))
}

fn read_pattern(path: &Path) -> Res<Pattern> {
    let text = std::fs::read_to_string(path)?;
    Ok(Pattern::from_text(&text)?.0)
}

fn cover_summary(u: &Pattern, n: usize, cover: &RepeatCover, with_repeats: bool) -> Res<Value> {
    let area = cover.area().len();
    let mut v = json!({
        "size": cover.len(),
        "window_complexity": u.window_complexity(n)?,
        "covered": area,
        "uncovered": u.len() - area,
        "valid": cover.is_cover_of(u),
    });
    if u.side().is_some_and(|k| k > (2 * u.d() + 1) * n) {
        v["uncovered_bound_holds"] = json!(nuggets_bound_check(u, n, cover)?);
    }
    if with_repeats {
        v["repeats"] = to_value(&cover.repeats);
    }
    Ok(v)
}

fn cmd_cover(a: &CoverArgs) -> Res<Value> {
    let u = read_pattern(&a.input)?;
    let n = a.n as usize;
    let res = if let Some(tau) = a.tau {
        let ac = asymptotic_cover(&u, n, tau)?;
        let mut v = cover_summary(&u, n, &ac.cover, a.repeats)?;
        v["method"] = json!(if ac.ell.is_some() { "three_region" } else { "whole_cube" });
        v["ell"] = json!(ac.ell);
        v["r"] = json!(ac.r);
        v["ratio"] = json!(ac.ratio);
        if let Some(d) = &ac.details {
            v["bound_terms"] = json!(d.bound_terms);
            v["within_bound"] = json!(d.within_bound);
        }
        v
    } else if let (Some(r), Some(ell)) = (a.r, a.ell) {
        let ec = efficient_cover(&u, n, r as usize, ell as usize)?;
        let mut v = cover_summary(&u, n, &ec.cover, a.repeats)?;
        v["method"] = json!("three_region");
        v["near_skeleton"] = json!(ec.near_skeleton);
        v["between"] = json!(ec.between);
        v["interior"] = json!(ec.interior);
        v["repairs"] = json!(ec.repairs);
        v["bound_terms"] = json!(ec.bound_terms);
        v["within_bound"] = json!(ec.within_bound);
        v
    } else {
        let cover = RepeatCover::new(&u, n, find_repeats(&u, n)?);
        let mut v = cover_summary(&u, n, &cover, a.repeats)?;
        v["method"] = json!("all_repeats");
        v
    };
    Ok(envelope("cover", a, res))
}

/// Runs an experiment; returns the JSON summary and whether all thresholds passed.
fn cmd_experiment(a: &mut ExperimentArgs) -> Res<(String, bool)> {
    let generated = a.seed.is_none();
    let seed = *a.seed.get_or_insert_with(fresh_seed);
    let dim = a.shape.dim();
    let mut cfg = ExperimentConfig::new(a.shape.alphabet(), dim, a.n as usize, a.alpha.clone(), a.trials, seed);
    cfg.k = a.k.map_or(4 * a.n as usize, |k| k as usize);
    cfg.k_max = a.k_max as usize;
    cfg.torus_max = a.torus_max as usize;
    cfg.orbit_max = a.orbit_max.unwrap_or_else(|| 12.min(orbit_size_budget(dim) as u64));
    cfg.boundary_samples = a.boundary_samples;
    cfg.epsilons = if a.epsilons.is_empty() { DEFAULT_EPSILONS.to_vec() } else { a.epsilons.clone() };
    cfg.j_max = a.jmax;
    cfg.unknown_ceiling = a.unknown_ceiling;
    cfg.supercritical_ceiling = a.supercritical_ceiling;
    cfg.workers = a.threads.map(|t| t as usize);
    let kind = match a.kind {
        Kind::Emptiness => ExperimentKind::Emptiness,
        Kind::Entropy => ExperimentKind::Entropy,
        Kind::Orbits => ExperimentKind::Orbits,
    };
    let r = run_experiment(kind, &cfg)?;
    let csv = r.to_csv();
    if let Some(p) = &a.csv_out {
        std::fs::write(p, &csv)?;
    }
    if let Some(p) = &a.json_out {
        std::fs::write(p, r.to_json() + "\n")?;
    }
    if generated {
        eprintln!("{}", json!({"generated_seed": seed}));
    }
    Ok((csv, r.passed))
}

/// Appends `--key value` for every config-file entry whose flag is absent.
fn merge_config(args: Vec<String>) -> Result<Vec<String>, SftError> {
    let pos = args.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let path = match args[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => args.get(pos + 1).cloned().ok_or_else(|| SftError::Domain("--config needs a file".into()))?,
    };
    let text = std::fs::read_to_string(&path)?;
    let mut out = args.clone();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| SftError::Format(format!("{path}:{}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        let flag = format!("--{key}");
        let present = args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")));
        if present || key == "config" {
            continue;
        }
        match value {
            "true" => out.push(flag),
            "false" => {}
            v => {
                out.push(flag);
                out.push(v.to_string());
            }
        }
    }
    Ok(out)
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn fail(e: &SftError) -> ExitCode {
    eprintln!("{}", json!({"error": e.to_string(), "kind": e.kind()}));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let argv = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sample(a) => cmd_sample(&a),
        Command::Emptiness(a) => cmd_emptiness(&a),
        Command::Entropy(a) => cmd_entropy(&a),
        Command::Orbits(a) => cmd_orbits(&a),
        Command::Zeta(a) => cmd_zeta(&a),
        Command::Cover(a) => cmd_cover(&a),
        Command::Experiment(mut a) => {
            return match cmd_experiment(&mut a) {
                Ok((csv, passed)) => {
                    emit(&csv);
                    ExitCode::from(if passed { 0 } else { 1 })
                }
                Err(e) => fail(&e),
            };
        }
    };
    match result {
        Ok(v) => {
            emit(&(serde_json::to_string_pretty(&v).expect("json") + "\n"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
