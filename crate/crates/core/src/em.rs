//! Expectation-maximization for mixtures of structured complex Gaussians.
//!
//! Each alphabet entry is one structure class with its own prior and
//! covariance. The M-step re-estimates every covariance with the class's
//! constrained weighted estimator, so components differ through their
//! constraint sets rather than through random initialization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{Complex3, GaussianDensity, Hermitian3};
use crate::structures::{weighted_mle, StructureClass, WeightedSample};

pub type WindowData = [Complex3];

/// Largest window accepted by [`oracle_mla`].
pub const ORACLE_MAX_SAMPLES: usize = 8;

/// An ordered, duplicate-free set of structure classes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Alphabet(Vec<StructureClass>);

impl Alphabet {
    pub fn new(mut classes: Vec<StructureClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::InvalidAlphabet("empty".into()));
        }
        let before = classes.len();
        classes.sort();
        classes.dedup();
        if classes.len() != before {
            return Err(Error::InvalidAlphabet("repeated class".into()));
        }
        Ok(Alphabet(classes))
    }

    pub fn from_indices(indices: &[u8]) -> Result<Self> {
        let classes = indices
            .iter()
            .map(|&i| {
                StructureClass::from_index(i)
                    .ok_or_else(|| Error::InvalidAlphabet(format!("class {i} not in 1..=4")))
            })
            .collect::<Result<Vec<_>>>()?;
        Alphabet::new(classes)
    }

    pub fn single(c: StructureClass) -> Self {
        Alphabet(vec![c])
    }

    pub fn full() -> Self {
        Alphabet(StructureClass::ALL.to_vec())
    }

    /// The eleven alternative alphabets: six pairs, four triples and the
    /// full set, in increasing size and then lexicographic order.
    pub fn alternatives() -> Vec<Alphabet> {
        const SETS: [&[u8]; 11] = [
            &[1, 2],
            &[1, 3],
            &[1, 4],
            &[2, 3],
            &[2, 4],
            &[3, 4],
            &[1, 2, 3],
            &[1, 2, 4],
            &[1, 3, 4],
            &[2, 3, 4],
            &[1, 2, 3, 4],
        ];
        SETS.iter()
            .map(|s| Alphabet::from_indices(s).expect("constant alphabet"))
            .collect()
    }

    pub fn classes(&self) -> &[StructureClass] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The hypothesis order `m`, one less than the alphabet size.
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// Total number of covariance parameters over the alphabet.
    pub fn param_count(&self) -> usize {
        self.0.iter().map(|c| c.param_count()).sum()
    }

    pub fn contains(&self, c: StructureClass) -> bool {
        self.0.contains(&c)
    }

    pub fn position(&self, c: StructureClass) -> Option<usize> {
        self.0.iter().position(|&x| x == c)
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    /// Maximum number of EM iterations.
    pub h_max: usize,
    /// Relative log-likelihood change below which iteration stops. Zero
    /// disables early stopping.
    pub epsilon: f64,
    /// Component masses below this are treated as empty in the M-step.
    pub weight_floor: f64,
    /// Priors are clamped to at least this value and renormalized.
    pub prior_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            h_max: 10,
            epsilon: 1e-4,
            weight_floor: 1e-12,
            prior_floor: 1e-6,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h_max < 1 {
            return Err(Error::Config("h_max must be at least 1".into()));
        }
        if !(self.epsilon >= 0.0) {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        if !(self.prior_floor >= 0.0 && self.prior_floor < 1.0) {
            return Err(Error::Config("prior_floor must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Same configuration, never stopping before `h_max`.
    pub fn fixed_iterations(self) -> Self {
        EmConfig {
            epsilon: 0.0,
            ..self
        }
    }
}

/// Row-major `K × n` posterior class probabilities.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Responsibilities {
    n_classes: usize,
    values: Vec<f64>,
}

impl Responsibilities {
    pub fn from_rows(n_classes: usize, rows: &[Vec<f64>]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * n_classes);
        for r in rows {
            if r.len() != n_classes {
                return Err(Error::DimensionMismatch(format!(
                    "responsibility row of length {} for {} classes",
                    r.len(),
                    n_classes
                )));
            }
            values.extend_from_slice(r);
        }
        Ok(Responsibilities { n_classes, values })
    }

    pub fn n_samples(&self) -> usize {
        if self.n_classes == 0 {
            0
        } else {
            self.values.len() / self.n_classes
        }
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_classes..(k + 1) * self.n_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_classes.max(1))
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.rows().map(|r| r[l]).collect()
    }

    /// Position of the largest entry of each row; ties go to the earliest.
    pub fn argmax(&self) -> Vec<usize> {
        self.rows()
            .map(|r| {
                let mut best = 0;
                for (i, &v) in r.iter().enumerate().skip(1) {
                    if v > r[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmState {
    pub alphabet: Alphabet,
    pub priors: Vec<f64>,
    pub covariances: Vec<Hermitian3>,
    pub responsibilities: Responsibilities,
    /// Mixture log-likelihood at the initial parameters and after every
    /// iteration.
    pub loglik_trace: Vec<f64>,
    pub iterations_run: usize,
}

impl EmState {
    /// Log-likelihood at the current parameters.
    pub fn loglik(&self) -> f64 {
        self.loglik_trace.last().copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// Relative change `|ΔL(h) / L(h-1)|` for each iteration `h = 1..`.
    pub fn loglik_variations(&self) -> Vec<f64> {
        self.loglik_trace
            .windows(2)
            .map(|w| relative_change(w[0], w[1]))
            .collect()
    }

    /// Hard label for each pixel: the alphabet class with the largest
    /// responsibility.
    pub fn labels(&self) -> Vec<StructureClass> {
        let classes = self.alphabet.classes();
        self.responsibilities.argmax().into_iter().map(|i| classes[i]).collect()
    }
}

fn relative_change(prev: f64, next: f64) -> f64 {
    if prev == 0.0 {
        (next - prev).abs()
    } else {
        ((next - prev) / prev).abs()
    }
}

fn densities(covariances: &[Hermitian3]) -> Result<Vec<GaussianDensity>> {
    covariances.iter().map(|c| GaussianDensity::new(*c)).collect()
}

/// Joint E-step and log-likelihood evaluation at the given parameters.
pub(crate) fn expectation(
    z: &WindowData,
    priors: &[f64],
    covariances: &[Hermitian3],
    weight_floor: f64,
) -> Result<(Responsibilities, f64)> {
    let n = priors.len();
    let dens = densities(covariances)?;
    let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
    let mut values = vec![0.0; z.len() * n];
    let mut loglik = 0.0;
    for (zk, row) in z.iter().zip(values.chunks_exact_mut(n)) {
        let mut max = f64::NEG_INFINITY;
        for ((cell, d), lp) in row.iter_mut().zip(&dens).zip(&log_priors) {
            *cell = lp + d.log_pdf(zk);
            max = max.max(*cell);
        }
        let mut denom = 0.0;
        for cell in row.iter_mut() {
            *cell = (*cell - max).exp();
            denom += *cell;
        }
        let denom = denom.max(weight_floor);
        for cell in row.iter_mut() {
            *cell /= denom;
        }
        loglik += max + denom.ln();
    }
    Ok((Responsibilities { n_classes: n, values }, loglik))
}

/// Uniform priors and each class's unit-weight constrained estimate over
/// the whole window.
pub fn initialize(z: &WindowData, alphabet: &Alphabet) -> Result<EmState> {
    let needed = 2 * alphabet.len();
    if z.len() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: z.len(),
        });
    }
    let unit = WeightedSample::unit(z);
    let covariances = alphabet
        .classes()
        .iter()
        .map(|&c| weighted_mle(c, &unit))
        .collect::<Result<Vec<_>>>()?;
    let n = alphabet.len();
    Ok(EmState {
        alphabet: alphabet.clone(),
        priors: vec![1.0 / n as f64; n],
        covariances,
        responsibilities: Responsibilities::default(),
        loglik_trace: Vec::new(),
        iterations_run: 0,
    })
}

pub fn e_step(z: &WindowData, state: &EmState, cfg: &EmConfig) -> Result<Responsibilities> {
    Ok(expectation(z, &state.priors, &state.covariances, cfg.weight_floor)?.0)
}

pub fn mixture_loglik(z: &WindowData, state: &EmState) -> Result<f64> {
    Ok(expectation(z, &state.priors, &state.covariances, 0.0)?.1)
}

pub fn m_step(
    z: &WindowData,
    resp: &Responsibilities,
    alphabet: &Alphabet,
    cfg: &EmConfig,
) -> Result<(Vec<f64>, Vec<Hermitian3>)> {
    let n = alphabet.len();
    if resp.n_classes() != n || resp.n_samples() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "responsibilities are {}x{}, window has {} samples and alphabet {}",
            resp.n_samples(),
            resp.n_classes(),
            z.len(),
            alphabet
        )));
    }
    let k = z.len() as f64;
    let mut priors = Vec::with_capacity(n);
    let mut covariances = Vec::with_capacity(n);
    for (l, &class) in alphabet.classes().iter().enumerate() {
        let weights = resp.column(l);
        let mass: f64 = weights.iter().sum();
        priors.push((mass / k).max(cfg.prior_floor));
        let estimate = if mass < cfg.weight_floor {
            Err(Error::DegenerateWeights { total: mass })
        } else {
            weighted_mle(class, &WeightedSample::new(z, &weights)?)
        };
        let cov = match estimate {
            Ok(c) => c,
            // an empty or collapsed component restarts from the full window
            Err(Error::DegenerateWeights { .. }) | Err(Error::RankDeficient) => {
                weighted_mle(class, &WeightedSample::unit(z))?
            }
            Err(e) => return Err(e),
        };
        covariances.push(cov);
    }
    let total: f64 = priors.iter().sum();
    priors.iter_mut().for_each(|p| *p /= total);
    Ok((priors, covariances))
}

/// Steps that lower the log-likelihood by more than this relative amount are
/// rejected.
pub const REJECT_TOLERANCE: f64 = 1e-12;

/// Runs EM from [`initialize`] until the relative log-likelihood change drops
/// below `cfg.epsilon` or `cfg.h_max` iterations have run. The returned
/// responsibilities are evaluated at the final parameters.
///
/// An M-step that goes through the singular-scatter safeguards can lower the
/// likelihood. Such a step is discarded and the run ends there, so
/// `loglik_trace` is non-decreasing and may be shorter than `h_max + 1`.
pub fn run_em(z: &WindowData, alphabet: &Alphabet, cfg: &EmConfig) -> Result<EmState> {
    cfg.validate()?;
    let mut state = initialize(z, alphabet)?;
    let (mut resp, l0) = expectation(z, &state.priors, &state.covariances, cfg.weight_floor)?;
    state.loglik_trace.push(l0);
    for _ in 0..cfg.h_max {
        let (priors, covariances) = m_step(z, &resp, alphabet, cfg)?;
        let (next, l) = expectation(z, &priors, &covariances, cfg.weight_floor)?;
        let prev = *state.loglik_trace.last().unwrap();
        if l < prev - REJECT_TOLERANCE * prev.abs().max(1.0) {
            // A component has collapsed onto too few samples and the loading
            // or fallback estimate is worse than what we had. Keep the
            // previous parameters and stop.
            break;
        }
        state.priors = priors;
        state.covariances = covariances;
        resp = next;
        state.loglik_trace.push(l);
        state.iterations_run += 1;
        if relative_change(prev, l) < cfg.epsilon {
            break;
        }
    }
    state.responsibilities = resp;
    Ok(state)
}

/// Exact log-likelihood of a hard partition, each group fitted with its
/// class's unit-weight constrained estimate. `None` when some group is too
/// small for a nonsingular estimate.
pub fn partition_loglik(z: &WindowData, labels: &[StructureClass]) -> Result<Option<f64>> {
    if labels.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} samples",
            labels.len(),
            z.len()
        )));
    }
    let mut total = 0.0;
    let mut group = Vec::with_capacity(z.len());
    for class in StructureClass::ALL {
        group.clear();
        group.extend(z.iter().zip(labels).filter(|(_, &l)| l == class).map(|(v, _)| *v));
        if group.is_empty() {
            continue;
        }
        if group.len() < class.min_samples() {
            return Ok(None);
        }
        let scatter = WeightedSample::unit(&group).scatter()?;
        let est = crate::structures::project_scatter(class, &scatter);
        let Ok(density) = GaussianDensity::new(est) else {
            return Ok(None);
        };
        total += group.iter().map(|v| density.log_pdf(v)).sum::<f64>();
    }
    Ok(Some(total))
}

/// Exhaustive maximum-likelihood partition of a tiny window into one
/// nonempty group per alphabet class. Exponential in the window size and
/// meant as a reference for testing EM.
pub fn oracle_mla(z: &WindowData, alphabet: &Alphabet) -> Result<(Vec<StructureClass>, f64)> {
    if z.len() > ORACLE_MAX_SAMPLES {
        return Err(Error::TooLarge {
            max: ORACLE_MAX_SAMPLES,
            got: z.len(),
        });
    }
    let n = alphabet.len();
    let k = z.len();
    let classes = alphabet.classes();
    let mut best: Option<(Vec<StructureClass>, f64)> = None;
    let mut digits = vec![0usize; k];
    let total = n.pow(k as u32);
    for code in 0..total {
        let mut c = code;
        for d in digits.iter_mut() {
            *d = c % n;
            c /= n;
        }
        let mut seen = vec![false; n];
        digits.iter().for_each(|&d| seen[d] = true);
        if !seen.iter().all(|&s| s) {
            continue;
        }
        let labels: Vec<StructureClass> = digits.iter().map(|&d| classes[d]).collect();
        if let Some(ll) = partition_loglik(z, &labels)? {
            if best.as_ref().is_none_or(|(_, b)| ll > *b) {
                best = Some((labels, ll));
            }
        }
    }
    best.ok_or(Error::TooFewSamples {
        needed: classes.iter().map(|c| c.min_samples()).sum(),
        got: k,
    })
}
