//! Penalized log-likelihood ratio detectors.
//!
//! The statistic compares the best penalized mixture fit (over hypothesis
//! orders `m = 1, 2, 3` and the admissible alphabets) with the best penalized
//! single-structure fit:
//!
//! ```text
//! max_m max_A [ log g1(Z; A) - γ (u(A) + m + 1) ]  -  max_i [ log p0(Z; C_i) - γ n_i ]
//! ```
//!
//! The first strategy (P1) runs one EM per alphabet. The second (P2) runs a
//! single EM over all four classes and builds the order-`m` alphabet from the
//! `m + 1` largest priors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::em::{self, run_em, Alphabet, EmConfig, EmState, WindowData};
use crate::error::{Error, Result};
use crate::hermitian::GaussianDensity;
use crate::structures::{weighted_mle, StructureClass, WeightedSample};

/// Minimum window size the detectors accept.
pub const MIN_WINDOW: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    Aic,
    Bic,
    Gic,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Aic => "AIC",
            Criterion::Bic => "BIC",
            Criterion::Gic => "GIC",
        }
    }
}

/// Model-order-selection penalty: `γ = 1` (AIC), `log(6K)/2` (BIC) or
/// `(1 + ρ)/2` with `ρ > 1` (GIC).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRule {
    pub criterion: Criterion,
    /// Only meaningful for GIC.
    pub rho: f64,
}

impl PenaltyRule {
    pub fn aic() -> Self {
        PenaltyRule {
            criterion: Criterion::Aic,
            rho: 0.0,
        }
    }

    pub fn bic() -> Self {
        PenaltyRule {
            criterion: Criterion::Bic,
            rho: 0.0,
        }
    }

    pub fn gic(rho: f64) -> Result<Self> {
        if !(rho > 1.0) {
            return Err(Error::InvalidRho(rho));
        }
        Ok(PenaltyRule {
            criterion: Criterion::Gic,
            rho,
        })
    }

    pub fn gamma(&self, k: usize) -> Result<f64> {
        gamma(self, k)
    }
}

pub fn gamma(rule: &PenaltyRule, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::TooFewSamples { needed: 1, got: k });
    }
    match rule.criterion {
        Criterion::Aic => Ok(1.0),
        Criterion::Bic => Ok((6.0 * k as f64).ln() / 2.0),
        Criterion::Gic if rule.rho > 1.0 => Ok((1.0 + rule.rho) / 2.0),
        Criterion::Gic => Err(Error::InvalidRho(rule.rho)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// One EM run per candidate alphabet.
    P1,
    /// One EM run over the full alphabet, subsets picked by prior rank.
    P2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H11,
    H12,
    H13,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 4] = [Hypothesis::H0, Hypothesis::H11, Hypothesis::H12, Hypothesis::H13];

    /// `H_{1,m}` for `m` in `1..=3`.
    pub fn alternative(m: usize) -> Option<Self> {
        match m {
            1 => Some(Hypothesis::H11),
            2 => Some(Hypothesis::H12),
            3 => Some(Hypothesis::H13),
            _ => None,
        }
    }

    /// 0 for `H0`, `m` for `H_{1,m}`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H11 => "H11",
            Hypothesis::H12 => "H12",
            Hypothesis::H13 => "H13",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Hypothesis::ALL
            .into_iter()
            .find(|h| h.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown hypothesis {s:?}")))
    }
}

/// A complete decision architecture: one of the six penalized detectors, or
/// the single-structure baseline classifier under a penalty rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Architecture {
    Detector { rule: PenaltyRule, strategy: Strategy },
    Baseline { rule: PenaltyRule },
}

pub const GIC_RHO_P1: f64 = 1.3;
pub const GIC_RHO_P2: f64 = 11.0;
pub const GIC_RHO_BASELINE: f64 = 3.0;

impl Architecture {
    /// The six detectors with their default GIC settings.
    pub fn detectors() -> [Architecture; 6] {
        let d = |rule, strategy| Architecture::Detector { rule, strategy };
        [
            d(PenaltyRule::aic(), Strategy::P1),
            d(PenaltyRule::aic(), Strategy::P2),
            d(PenaltyRule::bic(), Strategy::P1),
            d(PenaltyRule::bic(), Strategy::P2),
            d(PenaltyRule::gic(GIC_RHO_P1).unwrap(), Strategy::P1),
            d(PenaltyRule::gic(GIC_RHO_P2).unwrap(), Strategy::P2),
        ]
    }

    pub fn baselines() -> [Architecture; 3] {
        [
            Architecture::Baseline { rule: PenaltyRule::aic() },
            Architecture::Baseline { rule: PenaltyRule::bic() },
            Architecture::Baseline {
                rule: PenaltyRule::gic(GIC_RHO_BASELINE).unwrap(),
            },
        ]
    }

    /// Parses `AIC-D-P1` … `GIC-D-P2` and `BASELINE-{AIC,BIC,GIC}`. GIC uses
    /// `rho` when given, otherwise the architecture's default.
    pub fn parse(name: &str, rho: Option<f64>) -> Result<Self> {
        let upper = name.to_ascii_uppercase();
        let criterion = |s: &str| match s {
            "AIC" => Ok(Criterion::Aic),
            "BIC" => Ok(Criterion::Bic),
            "GIC" => Ok(Criterion::Gic),
            _ => Err(Error::Parse(format!("unknown architecture {name:?}"))),
        };
        let rule_for = |c: Criterion, default_rho: f64| match c {
            Criterion::Aic => Ok(PenaltyRule::aic()),
            Criterion::Bic => Ok(PenaltyRule::bic()),
            Criterion::Gic => PenaltyRule::gic(rho.unwrap_or(default_rho)),
        };
        let parts: Vec<&str> = upper.split('-').collect();
        match parts.as_slice() {
            ["BASELINE", c] => Ok(Architecture::Baseline {
                rule: rule_for(criterion(c)?, GIC_RHO_BASELINE)?,
            }),
            [c, "D", p] => {
                let (strategy, default_rho) = match *p {
                    "P1" => (Strategy::P1, GIC_RHO_P1),
                    "P2" => (Strategy::P2, GIC_RHO_P2),
                    _ => return Err(Error::Parse(format!("unknown architecture {name:?}"))),
                };
                Ok(Architecture::Detector {
                    rule: rule_for(criterion(c)?, default_rho)?,
                    strategy,
                })
            }
            _ => Err(Error::Parse(format!("unknown architecture {name:?}"))),
        }
    }

    pub fn rule(&self) -> PenaltyRule {
        match *self {
            Architecture::Detector { rule, .. } | Architecture::Baseline { rule } => rule,
        }
    }

    pub fn strategy(&self) -> Option<Strategy> {
        match *self {
            Architecture::Detector { strategy, .. } => Some(strategy),
            Architecture::Baseline { .. } => None,
        }
    }

    pub fn is_baseline(&self) -> bool {
        matches!(self, Architecture::Baseline { .. })
    }

    pub fn name(&self) -> String {
        match *self {
            Architecture::Detector { rule, strategy } => {
                let p = match strategy {
                    Strategy::P1 => "P1",
                    Strategy::P2 => "P2",
                };
                format!("{}-D-{}", rule.criterion.name(), p)
            }
            Architecture::Baseline { rule } => format!("BASELINE-{}", rule.criterion.name()),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// `γ (u(A) + m + 1)`.
pub fn penalty_h1(alphabet: &Alphabet, gamma: f64) -> f64 {
    gamma * (alphabet.param_count() + alphabet.len()) as f64
}

/// `γ n_i`.
pub fn penalty_h0(class: StructureClass, gamma: f64) -> f64 {
    gamma * class.param_count() as f64
}

/// Unpenalized single-structure log-likelihoods, one per class.
pub fn h0_logliks(z: &WindowData) -> Result<[f64; 4]> {
    let unit = WeightedSample::unit(z);
    let mut out = [0.0; 4];
    for c in StructureClass::ALL {
        let d = GaussianDensity::new(weighted_mle(c, &unit)?)?;
        out[c.slot()] = z.iter().map(|v| d.log_pdf(v)).sum();
    }
    Ok(out)
}

fn best_h0(logliks: &[f64; 4], gamma: f64) -> (f64, StructureClass) {
    let mut best = (f64::NEG_INFINITY, StructureClass::Reciprocal);
    for c in StructureClass::ALL {
        let v = logliks[c.slot()] - penalty_h0(c, gamma);
        if v > best.0 {
            best = (v, c);
        }
    }
    best
}

fn check_window(z: &WindowData) -> Result<()> {
    if z.len() < MIN_WINDOW {
        return Err(Error::TooFewSamples {
            needed: MIN_WINDOW,
            got: z.len(),
        });
    }
    Ok(())
}

/// Best penalized single-structure fit and its class. Ties go to the
/// smaller class index.
pub fn h0_term(z: &WindowData, gamma: f64) -> Result<(f64, StructureClass)> {
    check_window(z)?;
    Ok(best_h0(&h0_logliks(z)?, gamma))
}

/// The single-structure classifier used as the comparison baseline.
pub fn baseline_classify(z: &WindowData, rule: &PenaltyRule) -> Result<StructureClass> {
    Ok(h0_term(z, gamma(rule, z.len())?)?.1)
}

/// Winning term of the alternative-hypothesis maximization.
#[derive(Clone, Debug)]
pub struct H1Term {
    pub value: f64,
    pub m_hat: usize,
    pub alphabet: Alphabet,
    /// Parameters behind `value`. For P2 this is the full-alphabet run
    /// restricted to `alphabet`. Its priors are the selected full-alphabet
    /// priors as they are, so they sum to less than one when `m < 3`;
    /// responsibilities are recomputed at those parameters.
    pub em_state: EmState,
}

/// An order-`m` candidate of the second strategy.
#[derive(Clone, Debug)]
struct RankedSubset {
    loglik: f64,
    state: EmState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitScope {
    /// Everything either strategy needs: eleven EM runs.
    Full,
    /// Only the full-alphabet run used by P2.
    SecondStrategyOnly,
}

/// All penalty-independent quantities for one window. Every architecture's
/// statistic, decision and labels follow from it without further EM work.
#[derive(Clone, Debug)]
pub struct WindowFit {
    k: usize,
    h0: [f64; 4],
    /// One state per [`Alphabet::alternatives`] entry; empty when fitted with
    /// [`FitScope::SecondStrategyOnly`].
    p1: Vec<EmState>,
    p2: Vec<RankedSubset>,
}

impl WindowFit {
    pub fn new(z: &WindowData, cfg: &EmConfig, scope: FitScope) -> Result<Self> {
        check_window(z)?;
        let h0 = h0_logliks(z)?;
        let (p1, full) = match scope {
            FitScope::Full => {
                let states = Alphabet::alternatives()
                    .iter()
                    .map(|a| run_em(z, a, cfg))
                    .collect::<Result<Vec<_>>>()?;
                let full = states.last().expect("eleven alphabets").clone();
                (states, full)
            }
            FitScope::SecondStrategyOnly => (Vec::new(), run_em(z, &Alphabet::full(), cfg)?),
        };
        let p2 = rank_subsets(z, &full, cfg)?;
        Ok(WindowFit {
            k: z.len(),
            h0,
            p1,
            p2,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn h0_logliks(&self) -> &[f64; 4] {
        &self.h0
    }

    /// The per-alphabet EM states of the first strategy.
    pub fn p1_states(&self) -> &[EmState] {
        &self.p1
    }

    pub fn h0_term(&self, gamma: f64) -> (f64, StructureClass) {
        best_h0(&self.h0, gamma)
    }

    pub fn h1_term(&self, strategy: Strategy, gamma: f64) -> Result<H1Term> {
        let candidates: Vec<(f64, &EmState)> = match strategy {
            Strategy::P1 => {
                if self.p1.is_empty() {
                    return Err(Error::Config(
                        "window was fitted for the second strategy only".into(),
                    ));
                }
                self.p1.iter().map(|s| (s.loglik(), s)).collect()
            }
            Strategy::P2 => self.p2.iter().map(|r| (r.loglik, &r.state)).collect(),
        };
        // candidates are ordered by (m, alphabet), so strict improvement keeps
        // the smallest order and alphabet on ties
        let mut best: Option<(f64, &EmState)> = None;
        for (ll, state) in candidates {
            let v = ll - penalty_h1(&state.alphabet, gamma);
            if best.is_none_or(|(b, _)| v > b) {
                best = Some((v, state));
            }
        }
        let (value, state) = best.expect("at least one candidate");
        Ok(H1Term {
            value,
            m_hat: state.alphabet.order(),
            alphabet: state.alphabet.clone(),
            em_state: state.clone(),
        })
    }

    pub fn statistic(&self, rule: &PenaltyRule, strategy: Strategy) -> Result<f64> {
        let g = gamma(rule, self.k)?;
        Ok(self.h1_term(strategy, g)?.value - self.h0_term(g).0)
    }

    pub fn decide(&self, arch: &Architecture, eta: f64) -> Result<DetectionOutcome> {
        let rule = arch.rule();
        let g = gamma(&rule, self.k)?;
        let (h0_value, h0_class) = self.h0_term(g);
        let Architecture::Detector { strategy, .. } = *arch else {
            return Ok(DetectionOutcome {
                statistic: f64::NEG_INFINITY,
                threshold: eta,
                declared: Hypothesis::H0,
                m_hat: None,
                alphabet_hat: Alphabet::single(h0_class),
                h0_class,
                labels: vec![h0_class; self.k],
                em_state: None,
            });
        };
        let h1 = self.h1_term(strategy, g)?;
        let statistic = h1.value - h0_value;
        let (declared, labels) = if statistic > eta {
            let h = Hypothesis::alternative(h1.m_hat).expect("order in 1..=3");
            (h, h1.em_state.labels())
        } else {
            (Hypothesis::H0, vec![h0_class; self.k])
        };
        Ok(DetectionOutcome {
            statistic,
            threshold: eta,
            declared,
            m_hat: Some(h1.m_hat),
            alphabet_hat: h1.alphabet,
            h0_class,
            labels,
            em_state: Some(h1.em_state),
        })
    }
}

/// Orders the full-alphabet priors (descending, ties to the smaller class)
/// and evaluates the mixtures of the top `m + 1` classes for `m = 1, 2, 3`.
///
/// The selected priors are not rescaled. Dropping a class therefore costs
/// `K log(kept mass)` in log-likelihood, which pushes this strategy towards
/// larger orders than the first one.
fn rank_subsets(z: &WindowData, full: &EmState, cfg: &EmConfig) -> Result<Vec<RankedSubset>> {
    let mut order: Vec<usize> = (0..full.priors.len()).collect();
    // stable sort keeps ascending class order among equal priors
    order.sort_by(|&a, &b| full.priors[b].total_cmp(&full.priors[a]));
    let classes = full.alphabet.classes();
    (1..=3usize)
        .map(|m| {
            let mut picked: Vec<usize> = order[..=m].to_vec();
            picked.sort_unstable();
            let alphabet = Alphabet::new(picked.iter().map(|&i| classes[i]).collect())?;
            let priors: Vec<f64> = picked.iter().map(|&i| full.priors[i]).collect();
            let covariances: Vec<_> = picked.iter().map(|&i| full.covariances[i]).collect();
            let (responsibilities, loglik) =
                em::expectation(z, &priors, &covariances, cfg.weight_floor)?;
            Ok(RankedSubset {
                loglik,
                state: EmState {
                    alphabet,
                    priors,
                    covariances,
                    responsibilities,
                    loglik_trace: full.loglik_trace.clone(),
                    iterations_run: full.iterations_run,
                },
            })
        })
        .collect()
}

pub fn h1_term_p1(z: &WindowData, gamma: f64, cfg: &EmConfig) -> Result<H1Term> {
    WindowFit::new(z, cfg, FitScope::Full)?.h1_term(Strategy::P1, gamma)
}

pub fn h1_term_p2(z: &WindowData, gamma: f64, cfg: &EmConfig) -> Result<H1Term> {
    WindowFit::new(z, cfg, FitScope::SecondStrategyOnly)?.h1_term(Strategy::P2, gamma)
}

#[derive(Clone, Debug)]
pub struct DetectionOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub declared: Hypothesis,
    /// Order of the best penalized alternative, reported even when `H0` is
    /// declared. `None` for baseline classifiers.
    pub m_hat: Option<usize>,
    pub alphabet_hat: Alphabet,
    pub h0_class: StructureClass,
    pub labels: Vec<StructureClass>,
    pub em_state: Option<EmState>,
}

pub fn decide(
    z: &WindowData,
    rule: &PenaltyRule,
    strategy: Strategy,
    eta: f64,
    cfg: &EmConfig,
) -> Result<DetectionOutcome> {
    decide_architecture(
        z,
        &Architecture::Detector {
            rule: *rule,
            strategy,
        },
        eta,
        cfg,
    )
}

pub fn decide_architecture(
    z: &WindowData,
    arch: &Architecture,
    eta: f64,
    cfg: &EmConfig,
) -> Result<DetectionOutcome> {
    let scope = match arch.strategy() {
        Some(Strategy::P1) => FitScope::Full,
        _ => FitScope::SecondStrategyOnly,
    };
    if arch.is_baseline() {
        check_window(z)?;
        let class = baseline_classify(z, &arch.rule())?;
        return Ok(DetectionOutcome {
            statistic: f64::NEG_INFINITY,
            threshold: eta,
            declared: Hypothesis::H0,
            m_hat: None,
            alphabet_hat: Alphabet::single(class),
            h0_class: class,
            labels: vec![class; z.len()],
            em_state: None,
        });
    }
    WindowFit::new(z, cfg, scope)?.decide(arch, eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma(&PenaltyRule::aic(), 17).unwrap(), 1.0);
        let bic = gamma(&PenaltyRule::bic(), 120).unwrap();
        assert!((bic - 720f64.ln() / 2.0).abs() < 1e-15);
        assert!((bic - 3.289626).abs() < 1e-6);
        let g = gamma(&PenaltyRule::gic(1.3).unwrap(), 60).unwrap();
        assert!((g - 1.15).abs() < 1e-15);
        assert!(matches!(PenaltyRule::gic(1.0), Err(Error::InvalidRho(_))));
        let bad = PenaltyRule {
            criterion: Criterion::Gic,
            rho: 0.5,
        };
        assert!(matches!(gamma(&bad, 10), Err(Error::InvalidRho(_))));
    }

    #[test]
    fn penalties() {
        assert_eq!(penalty_h1(&Alphabet::full(), 1.0), 23.0);
        assert_eq!(penalty_h1(&Alphabet::from_indices(&[3, 4]).unwrap(), 2.0), 14.0);
        assert_eq!(penalty_h0(StructureClass::Reciprocal, 1.0), 9.0);
    }

    #[test]
    fn architecture_names_round_trip() {
        for a in Architecture::detectors().iter().chain(Architecture::baselines().iter()) {
            assert_eq!(Architecture::parse(&a.name(), None).unwrap(), *a);
        }
        assert_eq!(
            Architecture::parse("gic-d-p2", None).unwrap().rule().rho,
            GIC_RHO_P2
        );
        assert_eq!(
            Architecture::parse("BASELINE-GIC", None).unwrap().rule().rho,
            GIC_RHO_BASELINE
        );
        assert!(Architecture::parse("AIC-D-P3", None).is_err());
        assert!(Architecture::parse("GIC-D-P1", Some(0.9)).is_err());
    }

    #[test]
    fn hypothesis_parsing() {
        assert_eq!("h12".parse::<Hypothesis>().unwrap(), Hypothesis::H12);
        assert!("H14".parse::<Hypothesis>().is_err());
    }
}
