//! Monte Carlo threshold calibration at a nominal false-alarm probability.
//!
//! For every structure class a batch of homogeneous windows is simulated and
//! the statistic's empirical `(1 - pfa)` quantile is taken as that class's
//! threshold. The detection threshold is the largest of the four, which keeps
//! the false-alarm rate at or below nominal whichever structure is present.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{Architecture, WindowFit};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::hermitian::Hermitian3;
use crate::rng::RngStream;
use crate::sim::{from_rows, nominal_matrices, scope_for, to_rows, Hermitian3Rows, Scenario};
use crate::structures::StructureClass;

pub(crate) const CALIBRATION_TAG: u64 = 0x4341_4c49_4252_4154;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub k: usize,
    pub pfa: f64,
    pub trials: usize,
    pub seed: u64,
    pub em: EmConfig,
    pub generators: [Hermitian3Rows; 4],
}

impl CalibrationSpec {
    pub fn new(k: usize, pfa: f64, trials: usize, seed: u64) -> Self {
        CalibrationSpec {
            k,
            pfa,
            trials,
            seed,
            em: EmConfig::default(),
            generators: nominal_matrices().map(|m| to_rows(&m)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err(Error::Config(format!("pfa must lie in (0, 1), got {}", self.pfa)));
        }
        if (self.trials as f64) * self.pfa < 5.0 {
            return Err(Error::Config(format!(
                "{} trials at pfa {} leave fewer than 5 exceedances",
                self.trials, self.pfa
            )));
        }
        self.em.validate()
    }

    pub fn generator_matrices(&self) -> Result<[Hermitian3; 4]> {
        let v = self.generators.iter().map(from_rows).collect::<Result<Vec<_>>>()?;
        Ok([v[0], v[1], v[2], v[3]])
    }

    /// Rank of the threshold among statistics sorted in descending order,
    /// `ceil(trials · pfa)`.
    pub fn exceedance_rank(&self) -> usize {
        exceedance_rank(self.trials, self.pfa)
    }
}

pub fn exceedance_rank(trials: usize, pfa: f64) -> usize {
    // the small slack keeps 1000 · 0.01 from rounding up to 11
    ((trials as f64 * pfa) - 1e-9).ceil().max(1.0) as usize
}

/// The `rank`-th largest value (1-based).
pub fn kth_largest(stats: &[f64], rank: usize) -> Result<f64> {
    if rank == 0 || rank > stats.len() {
        return Err(Error::Config(format!(
            "rank {rank} out of range for {} statistics",
            stats.len()
        )));
    }
    let mut sorted = stats.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[rank - 1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub architecture: String,
    pub rho: f64,
    pub spec: CalibrationSpec,
    /// Thresholds from class-1 … class-4 homogeneous data.
    pub per_class_thresholds: [f64; 4],
    pub eta: f64,
    pub runtime_seconds: f64,
}

impl CalibrationRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn architecture(&self) -> Result<Architecture> {
        let rho = (self.rho > 1.0).then_some(self.rho);
        Architecture::parse(&self.architecture, rho)
    }
}

/// Statistics of every architecture on the homogeneous windows of `class`,
/// indexed `[architecture][trial]`.
pub fn null_statistics(
    spec: &CalibrationSpec,
    archs: &[Architecture],
    class: StructureClass,
) -> Result<Vec<Vec<f64>>> {
    let generators = spec.generator_matrices()?;
    let scenario = Scenario::homogeneous(class, spec.k);
    let root = RngStream::new(spec.seed)
        .fork(CALIBRATION_TAG)
        .fork(class.index() as u64)
        .fork(spec.k as u64);
    let scope = scope_for(archs);
    let per_trial: Vec<Vec<f64>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let z = scenario.generate(&generators, &mut root.fork(t as u64))?;
            let fit = WindowFit::new(&z, &spec.em, scope)?;
            archs
                .iter()
                .map(|a| {
                    let strategy = a.strategy().expect("checked by caller");
                    fit.statistic(&a.rule(), strategy)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..archs.len())
        .map(|i| per_trial.iter().map(|row| row[i]).collect())
        .collect())
}

/// Calibrates several detectors on the same simulated windows.
pub fn calibrate_many(spec: &CalibrationSpec, archs: &[Architecture]) -> Result<Vec<CalibrationRecord>> {
    spec.validate()?;
    if let Some(a) = archs.iter().find(|a| a.is_baseline()) {
        return Err(Error::Config(format!("{a} is a classifier and has no threshold")));
    }
    let start = Instant::now();
    let rank = spec.exceedance_rank();
    let mut thresholds = vec![[0.0; 4]; archs.len()];
    for class in StructureClass::ALL {
        let stats = null_statistics(spec, archs, class)?;
        for (t, s) in thresholds.iter_mut().zip(&stats) {
            t[class.slot()] = kth_largest(s, rank)?;
        }
    }
    let runtime_seconds = start.elapsed().as_secs_f64();
    Ok(archs
        .iter()
        .zip(thresholds)
        .map(|(a, per_class)| CalibrationRecord {
            architecture: a.name(),
            rho: a.rule().rho,
            spec: spec.clone(),
            per_class_thresholds: per_class,
            eta: per_class.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            runtime_seconds,
        })
        .collect())
}

pub fn calibrate(spec: &CalibrationSpec, arch: &Architecture) -> Result<CalibrationRecord> {
    Ok(calibrate_many(spec, std::slice::from_ref(arch))?.remove(0))
}
