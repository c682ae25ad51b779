//! Monte Carlo scenarios and performance metrics.
//!
//! A scenario fixes the ground-truth class of every pixel in a window. Trials
//! draw fresh windows from per-trial random streams, so results do not depend
//! on thread count or scheduling. All architectures evaluated together share
//! the same windows and EM fits.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Architecture, FitScope, Hypothesis, Strategy, WindowFit};
use crate::em::{Alphabet, EmConfig, run_em};
use crate::error::{Error, Result};
use crate::hermitian::{Complex3, GaussianDensity, Hermitian3};
use crate::rng::RngStream;
use crate::structures::StructureClass;

/// Stream tag of experiment windows; calibration uses its own.
pub(crate) const EXPERIMENT_TAG: u64 = 0x4558_5045_5249_4d54;
pub(crate) const VARIATION_TAG: u64 = 0x5641_5249_4154_494f;

/// The nominal class-1 … class-4 covariances used to simulate data.
pub fn nominal_matrices() -> [Hermitian3; 4] {
    let c = Complex64::new;
    let rows = [
        [
            [c(1.0, 0.0), c(0.2, 0.3), c(0.5, -0.3)],
            [c(0.2, -0.3), c(0.25, 0.0), c(-0.2, -0.2)],
            [c(0.5, 0.3), c(-0.2, 0.2), c(0.8, 0.0)],
        ],
        [
            [c(1.0, 0.0), c(0.0, 0.0), c(0.5, -0.3)],
            [c(0.0, 0.0), c(0.25, 0.0), c(0.0, 0.0)],
            [c(0.5, 0.3), c(0.0, 0.0), c(0.4, 0.0)],
        ],
        [
            [c(1.0, 0.0), c(0.0, 0.3), c(0.2, 0.0)],
            [c(0.0, -0.3), c(0.4, 0.0), c(0.0, 0.3)],
            [c(0.2, 0.0), c(0.0, -0.3), c(1.0, 0.0)],
        ],
        [
            [c(1.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
            [c(0.0, 0.0), c(0.25, 0.0), c(0.0, 0.0)],
            [c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        ],
    ];
    rows.map(|r| Hermitian3::from_rows(r).expect("nominal matrices are Hermitian"))
}

/// Ground-truth labelling of a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scenario {
    pub kind: Hypothesis,
    pub labels: Vec<StructureClass>,
}

impl Scenario {
    /// `H0` uses class 1 throughout; `H_{1,m}` splits the window into `m + 1`
    /// contiguous blocks of classes `1..=m+1`, the last block taking any
    /// remainder.
    pub fn new(kind: Hypothesis, k: usize) -> Self {
        let blocks = kind.index() + 1;
        let base = k / blocks;
        let labels = (0..k)
            .map(|i| {
                let b = if base == 0 { blocks - 1 } else { (i / base).min(blocks - 1) };
                StructureClass::ALL[b]
            })
            .collect();
        Scenario { kind, labels }
    }

    /// `H0` with every pixel drawn from `class`.
    pub fn homogeneous(class: StructureClass, k: usize) -> Self {
        Scenario {
            kind: Hypothesis::H0,
            labels: vec![class; k],
        }
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn generate(&self, generators: &[Hermitian3; 4], rng: &mut RngStream) -> Result<Vec<Complex3>> {
        generate(self, generators, rng)
    }
}

/// Draws pixel `k` from `CN(0, generators[label_k])`.
pub fn generate(s: &Scenario, generators: &[Hermitian3; 4], rng: &mut RngStream) -> Result<Vec<Complex3>> {
    let dens = generators
        .iter()
        .map(|g| GaussianDensity::new(*g))
        .collect::<Result<Vec<_>>>()?;
    Ok(s.labels.iter().map(|c| dens[c.slot()].sample(rng)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub k: usize,
    pub scenario: Hypothesis,
    pub trials: usize,
    pub seed: u64,
    pub em: EmConfig,
    pub generators: [Hermitian3Rows; 4],
}

/// Row-major `[re, im]` pairs; the serialized form of a covariance.
pub type Hermitian3Rows = [[[f64; 2]; 3]; 3];

pub fn to_rows(m: &Hermitian3) -> Hermitian3Rows {
    let mut out = [[[0.0; 2]; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let v = m.get(i, j);
            *cell = [v.re, v.im];
        }
    }
    out
}

pub fn from_rows(rows: &Hermitian3Rows) -> Result<Hermitian3> {
    Hermitian3::from_rows(rows.map(|r| r.map(|[re, im]| Complex64::new(re, im))))
}

impl ExperimentSpec {
    pub fn new(k: usize, scenario: Hypothesis, trials: usize, seed: u64) -> Self {
        ExperimentSpec {
            k,
            scenario,
            trials,
            seed,
            em: EmConfig::default(),
            generators: nominal_matrices().map(|m| to_rows(&m)),
        }
    }

    pub fn generator_matrices(&self) -> Result<[Hermitian3; 4]> {
        let v = self.generators.iter().map(from_rows).collect::<Result<Vec<_>>>()?;
        Ok([v[0], v[1], v[2], v[3]])
    }
}

/// Per-window outcome of one architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub declared: Hypothesis,
    pub statistic: f64,
    pub labels: Vec<StructureClass>,
}

pub(crate) fn scope_for(archs: &[Architecture]) -> FitScope {
    if archs.iter().any(|a| a.strategy() == Some(Strategy::P1)) {
        FitScope::Full
    } else {
        FitScope::SecondStrategyOnly
    }
}

/// Runs `spec.trials` windows and evaluates every `(architecture, eta)` pair
/// on each. Outer index is the architecture, inner the trial.
pub fn run_trials(spec: &ExperimentSpec, archs: &[(Architecture, f64)]) -> Result<Vec<Vec<TrialOutcome>>> {
    let generators = spec.generator_matrices()?;
    let scenario = Scenario::new(spec.scenario, spec.k);
    let root = RngStream::new(spec.seed)
        .fork(EXPERIMENT_TAG)
        .fork(spec.scenario.index() as u64)
        .fork(spec.k as u64);
    let plain: Vec<Architecture> = archs.iter().map(|(a, _)| *a).collect();
    let scope = scope_for(&plain);
    let per_trial: Vec<Vec<TrialOutcome>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = root.fork(t as u64);
            let z = scenario.generate(&generators, &mut rng)?;
            let fit = WindowFit::new(&z, &spec.em, scope)?;
            archs
                .iter()
                .map(|(a, eta)| {
                    let o = fit.decide(a, *eta)?;
                    Ok(TrialOutcome {
                        declared: o.declared,
                        statistic: o.statistic,
                        labels: o.labels,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut by_arch: Vec<Vec<TrialOutcome>> = (0..archs.len()).map(|_| Vec::with_capacity(spec.trials)).collect();
    for trial in per_trial {
        for (slot, o) in by_arch.iter_mut().zip(trial) {
            slot.push(o);
        }
    }
    Ok(by_arch)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub architecture: String,
    pub rho: f64,
    pub k: usize,
    pub scenario: Hypothesis,
    pub trials: usize,
    pub eta: f64,
    /// Fraction of trials declaring `H0`, `H11`, `H12`, `H13`.
    pub declared_rates: [f64; 4],
    /// Fraction of trials declaring the true hypothesis.
    pub pc: f64,
    /// Fraction of trials with statistic above `eta`.
    pub pd: f64,
    /// Root-mean-square count of mislabelled pixels, divided by `K`.
    pub rmsce: f64,
}

pub fn summarize(
    arch: &Architecture,
    eta: f64,
    scenario: &Scenario,
    outcomes: &[TrialOutcome],
) -> MetricsReport {
    let n = outcomes.len().max(1) as f64;
    let mut declared = [0usize; 4];
    let mut rejections = 0usize;
    let mut sq_errors = 0.0;
    for o in outcomes {
        declared[o.declared.index()] += 1;
        if o.statistic > eta {
            rejections += 1;
        }
        let wrong = o
            .labels
            .iter()
            .zip(&scenario.labels)
            .filter(|(a, b)| a != b)
            .count() as f64;
        sq_errors += wrong * wrong;
    }
    let declared_rates = declared.map(|d| d as f64 / n);
    MetricsReport {
        architecture: arch.name(),
        rho: arch.rule().rho,
        k: scenario.k(),
        scenario: scenario.kind,
        trials: outcomes.len(),
        eta,
        declared_rates,
        pc: declared_rates[scenario.kind.index()],
        pd: rejections as f64 / n,
        rmsce: (sq_errors / n).sqrt() / scenario.k() as f64,
    }
}

/// Metrics for several architectures over the same simulated windows.
pub fn run_experiments(spec: &ExperimentSpec, archs: &[(Architecture, f64)]) -> Result<Vec<MetricsReport>> {
    if spec.trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let scenario = Scenario::new(spec.scenario, spec.k);
    let outcomes = run_trials(spec, archs)?;
    Ok(archs
        .iter()
        .zip(&outcomes)
        .map(|((a, eta), o)| summarize(a, *eta, &scenario, o))
        .collect())
}

pub fn run_experiment(arch: &Architecture, eta: f64, spec: &ExperimentSpec) -> Result<MetricsReport> {
    Ok(run_experiments(spec, &[(*arch, eta)])?.remove(0))
}

/// Mean relative log-likelihood variation at EM iteration `h` for
/// hypothesis order `m`, averaged over trials and the alphabets of that
/// order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationRow {
    pub k: usize,
    pub m: usize,
    pub h: usize,
    pub mean_variation: f64,
}

/// Runs every alternative alphabet for exactly `cfg.h_max` iterations on
/// each trial window and averages `|ΔL_m(h)|`.
pub fn loglik_variation_study(
    ks: &[usize],
    scenario: Hypothesis,
    trials: usize,
    seed: u64,
    cfg: &EmConfig,
) -> Result<Vec<VariationRow>> {
    let cfg = cfg.fixed_iterations();
    cfg.validate()?;
    let generators = nominal_matrices();
    let alphabets = Alphabet::alternatives();
    let mut rows = Vec::new();
    for &k in ks {
        let s = Scenario::new(scenario, k);
        let root = RngStream::new(seed).fork(VARIATION_TAG).fork(k as u64);
        let per_trial: Vec<Vec<Vec<f64>>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let z = s.generate(&generators, &mut root.fork(t as u64))?;
                alphabets
                    .iter()
                    .map(|a| Ok(run_em(&z, a, &cfg)?.loglik_variations()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for m in 1..=3usize {
            for h in 1..=cfg.h_max {
                let mut sum = 0.0;
                let mut count = 0usize;
                for trial in &per_trial {
                    for (a, v) in alphabets.iter().zip(trial) {
                        if a.order() == m {
                            // a run that stopped early has stopped moving
                            sum += v.get(h - 1).copied().unwrap_or(0.0);
                            count += 1;
                        }
                    }
                }
                rows.push(VariationRow {
                    k,
                    m,
                    h,
                    mean_variation: sum / count as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// Formats with 17 significant digits.
pub fn full_precision(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(
        "architecture,rho,k,scenario,trials,eta,declared_h0,declared_h11,declared_h12,declared_h13,pc,pd,rmsce\n",
    );
    for r in reports {
        let mut fields = vec![
            r.architecture.clone(),
            full_precision(r.rho),
            r.k.to_string(),
            r.scenario.to_string(),
            r.trials.to_string(),
            full_precision(r.eta),
        ];
        fields.extend(r.declared_rates.iter().map(|&d| full_precision(d)));
        fields.extend([full_precision(r.pc), full_precision(r.pd), full_precision(r.rmsce)]);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn variation_csv(rows: &[VariationRow]) -> String {
    let mut out = String::from("k,m,h,mean_variation\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.k, r.m, r.h, full_precision(r.mean_variation)));
    }
    out
}
