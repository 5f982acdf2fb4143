//! Monte Carlo harness over the random ensemble: emptiness frequencies against
//! truncated zeta products, entropy concentration, and finite-orbit presence.
//!
//! Trials are statically partitioned across worker threads and merged in trial
//! order, so results do not depend on the worker count.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{decide_empty, entropy_estimate, OrbitTable, Verdict};
use crate::ensemble::{sample, AllowedSet, EnsembleParams};
use crate::error::{domain, Result};
use crate::geometry::Dim;
use crate::patterns::{complexity_histogram, Alphabet};
use crate::zeta::{independence_upper_bound, zeta_inverse};

pub const DEFAULT_EPSILONS: [f64; 3] = [0.05, 0.1, 0.2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Emptiness,
    Entropy,
    Orbits,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Emptiness => "emptiness",
            ExperimentKind::Entropy => "entropy",
            ExperimentKind::Orbits => "orbits",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub alphabet: Alphabet,
    pub dim: Dim,
    pub n: usize,
    pub alphas: Vec<f64>,
    pub seed: u64,
    pub trials: u64,
    /// Side of the entropy window.
    pub k: usize,
    pub k_max: usize,
    pub torus_max: usize,
    pub orbit_max: u64,
    pub boundary_samples: u64,
    pub epsilons: Vec<f64>,
    /// Orbit-size truncation of the zeta product; `None` uses the budget.
    pub j_max: Option<u64>,
    /// Largest tolerated fraction of undecided trials.
    pub unknown_ceiling: f64,
    /// Largest tolerated emptiness frequency above the threshold.
    pub supercritical_ceiling: f64,
    /// Not echoed: results are independent of it.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(alphabet: Alphabet, dim: Dim, n: usize, alphas: Vec<f64>, trials: u64, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            alphabet,
            dim,
            n,
            alphas,
            seed,
            trials,
            k: 4 * n,
            k_max: 8,
            torus_max: 6,
            orbit_max: 12,
            boundary_samples: 256,
            epsilons: DEFAULT_EPSILONS.to_vec(),
            j_max: None,
            unknown_ceiling: 0.05,
            supercritical_ceiling: 1e-3,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        if self.alphas.is_empty() {
            return domain("at least one alpha is required");
        }
        for &a in &self.alphas {
            EnsembleParams::new(self.alphabet, self.dim, self.n, a, self.seed)?;
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return domain("epsilons must be positive");
        }
        if self.k < self.n {
            return domain(format!("entropy window k={} is below n={}", self.k, self.n));
        }
        Ok(())
    }

    fn params(&self, alpha: f64) -> Result<EnsembleParams> {
        EnsembleParams::new(self.alphabet, self.dim, self.n, alpha, self.seed)
    }

    fn is_critical(&self, alpha: f64) -> bool {
        (alpha * self.alphabet.size() as f64 - 1.0).abs() < 1e-12
    }
}

/// Worker count: explicit setting, else `SFTLAB_THREADS`, else the machine's
/// parallelism; `SFTLAB_THREADS` caps explicit settings too.
pub fn worker_count(requested: Option<usize>) -> usize {
    let env = std::env::var("SFTLAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&v| v > 0);
    let machine = std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1);
    let base = requested.or(env).unwrap_or(machine).max(1);
    env.map_or(base, |cap| base.min(cap))
}

/// Runs `f` on trials `0..trials` with a static contiguous partition; the
/// output is in trial order. The earliest failing trial's error wins.
pub fn run_trials<T, F>(trials: u64, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let workers = (workers.max(1) as u64).min(trials.max(1));
    if workers == 1 {
        return (0..trials).map(&f).collect();
    }
    let chunk = trials.div_ceil(workers);
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                s.spawn(move || (w * chunk..((w + 1) * chunk).min(trials)).map(f).collect::<Result<Vec<T>>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(trials as usize);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn fraction(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 / total as f64
    }
}

/// Normal-approximation 95% half-width.
fn ci95(p: f64, m: u64) -> f64 {
    if m == 0 {
        return f64::NAN;
    }
    1.96 * (p * (1.0 - p) / m as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmptinessRow {
    pub alpha: f64,
    pub trials: u64,
    pub empty: u64,
    pub nonempty: u64,
    pub unknown: u64,
    pub unknown_fraction: f64,
    /// Among decided trials.
    pub p_empty: f64,
    pub ci95: f64,
    /// Truncated `1/zeta(alpha)`, zero above the threshold.
    pub theory: f64,
    pub tail_bound: f64,
    /// `(p_empty - theory) / sigma` with `sigma` from the theoretical value.
    pub z_score: f64,
    /// Nonempty trials with no periodic orbit up to `orbit_max`.
    pub orbitless_nonempty: u64,
    /// Those among them whose certificate is a larger periodic orbit.
    pub orbitless_certified: u64,
    /// `None` at the critical parameter, where no threshold is claimed.
    pub pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub epsilon: f64,
    /// Fraction with `|h_upper - target| >= epsilon`.
    pub upper: f64,
    /// Fraction with `h_per_lower < target - epsilon`.
    pub periodic_below: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyRow {
    pub alpha: f64,
    pub trials: u64,
    pub k: usize,
    /// `log+(alpha |A|)`.
    pub target: f64,
    /// Trials with no admissible `k`-pattern.
    pub empty_window: u64,
    pub h_upper_mean: f64,
    pub h_upper_median: f64,
    pub h_upper_std: f64,
    pub h_per_mean: f64,
    pub h_per_median: f64,
    pub deviations: Vec<Deviation>,
    pub phi_mean: f64,
    /// `sum_j alpha^j |N^j|` when the complexity histogram is enumerable.
    pub phi_theory: Option<f64>,
    pub phi_z_score: Option<f64>,
    pub nonempty: u64,
    pub unknown: u64,
    pub orbitless_nonempty: u64,
    pub orbitless_certified: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitRow {
    pub alpha: f64,
    pub trials: u64,
    pub nonempty: u64,
    pub unknown: u64,
    /// Trials with no allowed orbit up to `orbit_max`.
    pub per_empty: u64,
    pub per_empty_fraction: f64,
    /// Product over orbits of size at most `n/2`.
    pub per_bound: f64,
    /// Nonempty-certified trials without an orbit up to `orbit_max`.
    pub candidates: u64,
    pub candidate_fraction: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rows {
    Emptiness(Vec<EmptinessRow>),
    Entropy(Vec<EntropyRow>),
    Orbits(Vec<OrbitRow>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub version: String,
    pub config: ExperimentConfig,
    pub rows: Rows,
    pub passed: bool,
}

struct Decided {
    verdict: Verdict,
    orbitless: bool,
    /// Orbitless up to the cutoff, yet certified by a larger periodic orbit.
    orbitless_certified: bool,
    per_empty: bool,
}

fn decide(cfg: &ExperimentConfig, omega: &AllowedSet, table: &OrbitTable) -> Result<Decided> {
    let v = decide_empty(omega, cfg.k_max, cfg.torus_max)?;
    let per_empty = table.allowed(omega).is_empty();
    let orbitless = v.verdict == Verdict::NonEmpty && per_empty;
    Ok(Decided { verdict: v.verdict, orbitless, orbitless_certified: orbitless && v.orbit().is_some(), per_empty })
}

struct Tally {
    empty: u64,
    nonempty: u64,
    unknown: u64,
    orbitless: u64,
    orbitless_certified: u64,
    per_empty: u64,
}

fn tally(ds: &[Decided]) -> Tally {
    let c = |f: &dyn Fn(&Decided) -> bool| ds.iter().filter(|d| f(d)).count() as u64;
    Tally {
        empty: c(&|d| d.verdict == Verdict::Empty),
        nonempty: c(&|d| d.verdict == Verdict::NonEmpty),
        unknown: c(&|d| d.verdict == Verdict::Unknown),
        orbitless: c(&|d| d.orbitless),
        orbitless_certified: c(&|d| d.orbitless_certified),
        per_empty: c(&|d| d.per_empty),
    }
}

fn finish(kind: ExperimentKind, cfg: &ExperimentConfig, rows: Rows, passed: bool) -> ExperimentResult {
    ExperimentResult { kind, version: env!("CARGO_PKG_VERSION").to_string(), config: cfg.clone(), rows, passed }
}

pub fn run_emptiness_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let table = OrbitTable::new(cfg.dim, cfg.n, cfg.alphabet, cfg.orbit_max)?;
    let workers = worker_count(cfg.workers);
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let params = cfg.params(alpha)?;
        let ds = run_trials(cfg.trials, workers, |t| decide(cfg, &sample(&params, t)?, &table))?;
        let Tally { empty, nonempty, unknown, orbitless, orbitless_certified, .. } = tally(&ds);
        let decided = empty + nonempty;
        let p = fraction(empty, decided);
        let z = zeta_inverse(cfg.alphabet, cfg.dim, alpha, cfg.j_max)?;
        let sigma = (z.value * (1.0 - z.value) / decided.max(1) as f64).sqrt();
        let z_score = if sigma > 0.0 { (p - z.value) / sigma } else if p == z.value { 0.0 } else { f64::INFINITY };
        let unknown_fraction = fraction(unknown, cfg.trials);
        let pass = if cfg.is_critical(alpha) {
            None
        } else {
            let stat = if z.divergent { p < cfg.supercritical_ceiling } else { z_score.abs() <= 3.0 };
            Some(stat && unknown_fraction < cfg.unknown_ceiling)
        };
        rows.push(EmptinessRow {
            alpha,
            trials: cfg.trials,
            empty,
            nonempty,
            unknown,
            unknown_fraction,
            p_empty: p,
            ci95: ci95(p, decided),
            theory: z.value,
            tail_bound: z.tail_bound,
            z_score,
            orbitless_nonempty: orbitless,
            orbitless_certified,
            pass,
        });
    }
    let passed = rows.iter().all(|r| r.pass != Some(false));
    Ok(finish(ExperimentKind::Emptiness, cfg, Rows::Emptiness(rows), passed))
}

fn median(sorted: &[f64]) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        m if m % 2 == 1 => sorted[m / 2],
        m => 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]),
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64;
    (m, v.sqrt())
}

/// Deviation of an estimate from the target; an empty window counts as zero
/// entropy when the target is zero.
fn deviation(h: f64, target: f64) -> f64 {
    if h == f64::NEG_INFINITY && target == 0.0 {
        0.0
    } else {
        (h - target).abs()
    }
}

pub fn run_entropy_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let table = OrbitTable::new(cfg.dim, cfg.n, cfg.alphabet, cfg.orbit_max)?;
    let workers = worker_count(cfg.workers);
    let histogram = complexity_histogram(cfg.alphabet, cfg.dim, cfg.n, cfg.k).ok();
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let params = cfg.params(alpha)?;
        let samples = run_trials(cfg.trials, workers, |t| {
            let omega = sample(&params, t)?;
            let est = entropy_estimate(&omega, cfg.k, cfg.boundary_samples)?;
            let phi = crate::orbits::count_to_f64(&est.phi);
            Ok((est.h_upper, est.h_per_lower, phi, decide(cfg, &omega, &table)?))
        })?;
        let target = (alpha * cfg.alphabet.size() as f64).ln().max(0.0);
        let hu: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let hp: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let mut finite_u: Vec<f64> = hu.iter().copied().filter(|h| h.is_finite()).collect();
        let mut finite_p: Vec<f64> = hp.iter().copied().filter(|h| h.is_finite()).collect();
        finite_u.sort_by(f64::total_cmp);
        finite_p.sort_by(f64::total_cmp);
        let (hu_mean, hu_std) = mean_std(&finite_u);
        let (hp_mean, _) = mean_std(&finite_p);
        let deviations = cfg
            .epsilons
            .iter()
            .map(|&eps| Deviation {
                epsilon: eps,
                upper: fraction(hu.iter().filter(|&&h| deviation(h, target) >= eps).count() as u64, cfg.trials),
                periodic_below: fraction(hp.iter().filter(|&&h| h < target - eps).count() as u64, cfg.trials),
            })
            .collect();
        let phis: Vec<f64> = samples.iter().map(|s| s.2).collect();
        let (phi_mean, _) = mean_std(&phis);
        // standard error from the sample variance of phi
        let (phi_theory, phi_z_score) = match &histogram {
            Some(h) => {
                let mean: f64 = h.iter().map(|(&j, &c)| c as f64 * alpha.powi(j as i32)).sum();
                let (_, sd) = mean_std(&phis);
                let se = sd / (cfg.trials as f64).sqrt();
                let z = if se > 0.0 { (phi_mean - mean) / se } else if phi_mean == mean { 0.0 } else { f64::INFINITY };
                (Some(mean), Some(z))
            }
            None => (None, None),
        };
        let ds: Vec<Decided> = samples.into_iter().map(|s| s.3).collect();
        let Tally { nonempty, unknown, orbitless, orbitless_certified, .. } = tally(&ds);
        rows.push(EntropyRow {
            alpha,
            trials: cfg.trials,
            k: cfg.k,
            target,
            empty_window: hu.iter().filter(|h| **h == f64::NEG_INFINITY).count() as u64,
            h_upper_mean: hu_mean,
            h_upper_median: median(&finite_u),
            h_upper_std: hu_std,
            h_per_mean: hp_mean,
            h_per_median: median(&finite_p),
            deviations,
            phi_mean,
            phi_theory,
            phi_z_score,
            nonempty,
            unknown,
            orbitless_nonempty: orbitless,
            orbitless_certified,
        });
    }
    Ok(finish(ExperimentKind::Entropy, cfg, Rows::Entropy(rows), true))
}

pub fn run_orbit_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let table = OrbitTable::new(cfg.dim, cfg.n, cfg.alphabet, cfg.orbit_max)?;
    let workers = worker_count(cfg.workers);
    let mut rows = Vec::new();
    for &alpha in &cfg.alphas {
        let params = cfg.params(alpha)?;
        let ds = run_trials(cfg.trials, workers, |t| decide(cfg, &sample(&params, t)?, &table))?;
        let Tally { nonempty, unknown, orbitless: candidates, per_empty, .. } = tally(&ds);
        let bound = independence_upper_bound(cfg.alphabet, cfg.dim, alpha, cfg.n)?;
        let frac = fraction(per_empty, cfg.trials);
        let sigma = (bound * (1.0 - bound) / cfg.trials as f64).sqrt();
        let mut pass = frac <= bound + 3.0 * sigma + 1e-12;
        if cfg.dim == Dim::ONE {
            pass &= candidates == 0;
        }
        rows.push(OrbitRow {
            alpha,
            trials: cfg.trials,
            nonempty,
            unknown,
            per_empty,
            per_empty_fraction: frac,
            per_bound: bound,
            candidates,
            candidate_fraction: fraction(candidates, cfg.trials),
            pass,
        });
    }
    let passed = rows.iter().all(|r| r.pass);
    Ok(finish(ExperimentKind::Orbits, cfg, Rows::Orbits(rows), passed))
}

pub fn run_experiment(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    match kind {
        ExperimentKind::Emptiness => run_emptiness_experiment(cfg),
        ExperimentKind::Entropy => run_entropy_experiment(cfg),
        ExperimentKind::Orbits => run_orbit_experiment(cfg),
    }
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), |x| x.to_string())
}

impl ExperimentResult {
    /// CSV with a fixed header per experiment kind.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        match &self.rows {
            Rows::Emptiness(rows) => {
                s.push_str("alpha,trials,empty,nonempty,unknown,unknown_fraction,p_empty,ci95,theory,tail_bound,z_score,orbitless_nonempty,orbitless_certified,pass\n");
                for r in rows {
                    let pass = r.pass.map_or("critical".to_string(), |p| p.to_string());
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.alpha,
                        r.trials,
                        r.empty,
                        r.nonempty,
                        r.unknown,
                        r.unknown_fraction,
                        r.p_empty,
                        r.ci95,
                        r.theory,
                        r.tail_bound,
                        r.z_score,
                        r.orbitless_nonempty,
                        r.orbitless_certified,
                        pass
                    );
                }
            }
            Rows::Entropy(rows) => {
                s.push_str("alpha,trials,k,target,empty_window,h_upper_mean,h_upper_median,h_upper_std,h_per_mean,h_per_median,phi_mean,phi_theory,phi_z_score,nonempty,unknown,orbitless_nonempty,orbitless_certified");
                if let Some(r) = rows.first() {
                    for d in &r.deviations {
                        let _ = write!(s, ",dev_upper_{e},per_below_{e}", e = d.epsilon);
                    }
                }
                s.push('\n');
                for r in rows {
                    let _ = write!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                        r.alpha,
                        r.trials,
                        r.k,
                        r.target,
                        r.empty_window,
                        r.h_upper_mean,
                        r.h_upper_median,
                        r.h_upper_std,
                        r.h_per_mean,
                        r.h_per_median,
                        r.phi_mean,
                        opt(&r.phi_theory),
                        opt(&r.phi_z_score),
                        r.nonempty,
                        r.unknown,
                        r.orbitless_nonempty,
                        r.orbitless_certified
                    );
                    for d in &r.deviations {
                        let _ = write!(s, ",{},{}", d.upper, d.periodic_below);
                    }
                    s.push('\n');
                }
            }
            Rows::Orbits(rows) => {
                s.push_str("alpha,trials,nonempty,unknown,per_empty,per_empty_fraction,per_bound,candidates,candidate_fraction,pass\n");
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{},{},{}",
                        r.alpha, r.trials, r.nonempty, r.unknown, r.per_empty, r.per_empty_fraction, r.per_bound, r.candidates, r.candidate_fraction, r.pass
                    );
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(alphas: Vec<f64>, trials: u64) -> ExperimentConfig {
        ExperimentConfig::new(Alphabet::BINARY, Dim::ONE, 2, alphas, trials, 7)
    }

    /// Exact emptiness probability for d = 1, n = 2: the SFT is nonempty iff
    /// the allowed two-letter words contain a cycle.
    fn exact_p_empty(alpha: f64) -> f64 {
        let mut p = 0.0;
        for mask in 0u32..16 {
            let m = |a: usize, b: usize| mask >> (2 * a + b) & 1 == 1;
            let cyclic = m(0, 0) || m(1, 1) || (m(0, 1) && m(1, 0));
            if !cyclic {
                let c = mask.count_ones() as i32;
                p += alpha.powi(c) * (1.0 - alpha).powi(4 - c);
            }
        }
        p
    }

    #[test]
    fn tiny_exact_case() {
        let mut c = cfg(vec![0.3, 0.6], 4000);
        c.workers = Some(1);
        let r = run_emptiness_experiment(&c).unwrap();
        let Rows::Emptiness(rows) = &r.rows else { panic!() };
        for row in rows {
            let exact = exact_p_empty(row.alpha);
            let sigma = (exact * (1.0 - exact) / row.trials as f64).sqrt();
            assert!((row.p_empty - exact).abs() <= 4.0 * sigma, "alpha={} p={} exact={exact}", row.alpha, row.p_empty);
            assert_eq!(row.unknown, 0);
        }
    }

    #[test]
    fn trivial_alphas() {
        let r = run_emptiness_experiment(&cfg(vec![0.0, 1.0], 50)).unwrap();
        let Rows::Emptiness(rows) = &r.rows else { panic!() };
        assert_eq!(rows[0].p_empty, 1.0);
        assert_eq!(rows[0].theory, 1.0);
        assert_eq!(rows[1].p_empty, 0.0);
        let mut c = cfg(vec![1.0], 20);
        c.k = 8;
        let e = run_entropy_experiment(&c).unwrap();
        let Rows::Entropy(rows) = &e.rows else { panic!() };
        assert!((rows[0].h_upper_mean - 2f64.ln()).abs() < 1e-12);
        assert_eq!(rows[0].h_upper_std, 0.0);
        let o = run_orbit_experiment(&cfg(vec![1.0], 20)).unwrap();
        let Rows::Orbits(rows) = &o.rows else { panic!() };
        assert_eq!(rows[0].per_empty, 0);
    }

    #[test]
    fn critical_row_has_no_verdict() {
        let r = run_emptiness_experiment(&cfg(vec![0.5], 100)).unwrap();
        let Rows::Emptiness(rows) = &r.rows else { panic!() };
        assert_eq!(rows[0].pass, None);
        assert!(r.to_csv().contains(",critical"));
    }

    #[test]
    fn worker_independence() {
        let mut c = cfg(vec![0.2, 0.4], 300);
        c.n = 4;
        c.k = 12;
        c.boundary_samples = 8;
        for kind in [ExperimentKind::Emptiness, ExperimentKind::Entropy, ExperimentKind::Orbits] {
            c.workers = Some(1);
            let a = run_experiment(kind, &c).unwrap();
            c.workers = Some(3);
            let b = run_experiment(kind, &c).unwrap();
            assert_eq!(a.to_csv(), b.to_csv());
            assert_eq!(a.to_json(), b.to_json());
        }
    }

    #[test]
    fn run_trials_orders_and_propagates() {
        let v = run_trials(10, 4, |t| Ok(t * t)).unwrap();
        assert_eq!(v, (0..10).map(|t| t * t).collect::<Vec<_>>());
        let e = run_trials(10, 3, |t| if t >= 4 { domain(format!("{t}")) } else { Ok(t) });
        assert_eq!(e.unwrap_err().to_string(), "domain error: 4");
    }

    #[test]
    fn invalid_configs() {
        assert!(run_emptiness_experiment(&cfg(vec![0.2], 0)).is_err());
        assert!(run_emptiness_experiment(&cfg(vec![], 10)).is_err());
        assert!(run_emptiness_experiment(&cfg(vec![1.2], 10)).is_err());
    }
}
