//! Approximate message passing for the inner sparse-regression code.
//!
//! Each iteration forms the residual with an Onsager correction, tracks the
//! empirical noise scale `τ_t = ‖z_t‖/√n`, and denoises the effective
//! observation `D s_t + Aᵀ z_t` entrywise with a posterior mean estimate
//! whose prior activity probability can vary per entry.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensing::{PowerAllocation, SensingOperator};
use crate::sparse::{SectionLayout, SparseState};

/// Smallest noise scale handed to the denoiser.
pub const TAU_FLOOR: f64 = 1e-12;

/// Default relative τ change below which iterations stop early.
pub const DEFAULT_TAU_TOLERANCE: f64 = 1e-6;

/// Posterior probability that an entry is active given observation `r`
/// of amplitude `d` in Gaussian noise of scale `tau`, with prior `q`:
///
/// `q e^{-(r-d)²/2τ²} / ((1-q) e^{-r²/2τ²} + q e^{-(r-d)²/2τ²})`.
///
/// Evaluated as a logistic function of the log-odds, which never overflows.
pub fn pme(q: f64, r: f64, tau: f64, d: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q >= 1.0 {
        return 1.0;
    }
    let log_odds = (q / (1.0 - q)).ln() + d * (2.0 * r - d) / (2.0 * tau * tau);
    sigmoid(log_odds)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Prior activity of an entry when `ka` users each pick it with probability `tilde`.
pub fn activity_probability(tilde: f64, ka: usize) -> f64 {
    1.0 - (1.0 - tilde).powi(ka as i32)
}

/// Prior of one section: either one value for every entry or one per entry.
/// `tilde` is the single-user probability, `activity` the derived
/// probability that at least one of `Ka` users is active there.
#[derive(Debug, Clone, PartialEq)]
pub enum SectionPrior {
    Constant { tilde: f64, activity: f64 },
    Entries { tilde: Vec<f64>, activity: Vec<f64> },
}

impl SectionPrior {
    pub fn activity(&self, k: usize) -> f64 {
        match self {
            SectionPrior::Constant { activity, .. } => *activity,
            SectionPrior::Entries { activity, .. } => activity[k],
        }
    }

    pub fn tilde(&self, k: usize) -> f64 {
        match self {
            SectionPrior::Constant { tilde, .. } => *tilde,
            SectionPrior::Entries { tilde, .. } => tilde[k],
        }
    }
}

/// Per-entry prior activity probabilities for the whole sparse vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorField {
    pub sections: Vec<SectionPrior>,
}

impl PriorField {
    /// Every section value equally likely: `q = 1 − (1 − 2^{-v_ℓ})^{Ka}`.
    pub fn uninformative(layout: &SectionLayout, ka: usize) -> Self {
        let sections = (0..layout.num_sections())
            .map(|s| {
                let tilde = 1.0 / layout.size(s) as f64;
                SectionPrior::Constant { tilde, activity: activity_probability(tilde, ka) }
            })
            .collect();
        PriorField { sections }
    }

    /// Field from single-user section distributions.
    pub fn from_tilde(tilde: Vec<Vec<f64>>, ka: usize) -> Self {
        let sections = tilde
            .into_iter()
            .map(|t| {
                let activity = t.iter().map(|&x| activity_probability(x, ka)).collect();
                SectionPrior::Entries { tilde: t, activity }
            })
            .collect();
        PriorField { sections }
    }
}

/// Source of denoiser priors, queried once per iteration with the current
/// effective observation.
pub trait PriorProvider {
    fn priors(
        &mut self,
        iteration: usize,
        effective: &SparseState,
        tau: f64,
        power: &PowerAllocation,
    ) -> PriorField;
}

/// Constant uninformative priors.
#[derive(Debug, Clone)]
pub struct Uninformative {
    field: PriorField,
}

impl Uninformative {
    pub fn new(layout: &SectionLayout, ka: usize) -> Self {
        Uninformative { field: PriorField::uninformative(layout, ka) }
    }
}

impl PriorProvider for Uninformative {
    fn priors(&mut self, _: usize, _: &SparseState, _: f64, _: &PowerAllocation) -> PriorField {
        self.field.clone()
    }
}

/// Current iterate of the recursion.
#[derive(Debug, Clone)]
pub struct AmpState {
    pub s_hat: SparseState,
    pub residual: Vec<f64>,
    pub tau: f64,
    pub iteration: usize,
}

/// `Ka·Σd² − ‖Ds‖²` scaled by `1/(n τ²)`, the weight of the previous residual.
pub fn onsager_coefficient(power: &PowerAllocation, ds_energy: f64, prev_tau: f64, n: usize) -> f64 {
    (power.total_energy() - ds_energy) / (n as f64 * prev_tau * prev_tau)
}

/// How the Onsager correction measures the denoiser's divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Onsager {
    /// `Ka·Σd² − ‖D s‖²`, which assumes every section of `s` sums to `Ka`.
    #[default]
    Energy,
    /// `Σ d² s (1 − s)`, the exact divergence of the entrywise estimator
    /// with fixed priors.
    Divergence,
}

/// `Σ_k d_k² s_k (1 − s_k)` over all entries.
pub fn pme_divergence(s_hat: &SparseState, power: &PowerAllocation) -> f64 {
    (0..s_hat.num_sections())
        .map(|sec| {
            let d2 = power.amplitudes[sec] * power.amplitudes[sec];
            d2 * s_hat.section(sec).iter().map(|&v| v * (1.0 - v)).sum::<f64>()
        })
        .sum()
}

/// `z_t = y − A D s_t + z_{t−1} (Ka·Σd² − ‖D s_t‖²) / (n τ_{t−1}²)`.
///
/// `previous` is `None` at the first iteration, where the correction
/// vanishes.
pub fn residual_step(
    y: &[f64],
    op: &SensingOperator,
    power: &PowerAllocation,
    s_hat: &SparseState,
    previous: Option<(&[f64], f64)>,
    iteration: usize,
) -> Result<Vec<f64>> {
    residual_step_with(y, op, power, s_hat, previous, iteration, Onsager::Energy)
}

/// [`residual_step`] with a choice of Onsager term.
pub fn residual_step_with(
    y: &[f64],
    op: &SensingOperator,
    power: &PowerAllocation,
    s_hat: &SparseState,
    previous: Option<(&[f64], f64)>,
    iteration: usize,
    onsager: Onsager,
) -> Result<Vec<f64>> {
    if y.len() != op.rows() {
        return Err(Error::LengthMismatch { expected: op.rows(), actual: y.len() });
    }
    let ds = power.apply(s_hat);
    let ads = op.forward(&ds)?;
    let mut z: Vec<f64> = y.iter().zip(&ads).map(|(a, b)| a - b).collect();
    if let Some((prev, prev_tau)) = previous {
        if prev.len() != z.len() {
            return Err(Error::LengthMismatch { expected: z.len(), actual: prev.len() });
        }
        let c = match onsager {
            Onsager::Energy => {
                let energy: f64 = ds.iter().map(|v| v * v).sum();
                onsager_coefficient(power, energy, prev_tau, op.rows())
            }
            Onsager::Divergence => pme_divergence(s_hat, power) / (op.rows() as f64 * prev_tau * prev_tau),
        };
        z.iter_mut().zip(prev).for_each(|(zi, pi)| *zi += c * pi);
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState { iteration });
    }
    Ok(z)
}

/// `√(‖z‖²/n)`, floored at [`TAU_FLOOR`].
pub fn tau_update(residual: &[f64], n: usize) -> f64 {
    let ss: f64 = residual.iter().map(|v| v * v).sum();
    (ss / n as f64).sqrt().max(TAU_FLOOR)
}

/// `D s + Aᵀ z`.
pub fn effective_observation(
    s_hat: &SparseState,
    residual: &[f64],
    op: &SensingOperator,
    power: &PowerAllocation,
) -> Result<SparseState> {
    let mut r = op.adjoint(residual)?;
    r.iter_mut().zip(power.apply(s_hat)).for_each(|(a, b)| *a += b);
    SparseState::from_values(s_hat.layout().clone(), r)
}

/// Entrywise [`pme`] with each section's amplitude and each entry's prior.
pub fn denoise(effective: &SparseState, priors: &PriorField, tau: f64, power: &PowerAllocation) -> SparseState {
    let mut out = SparseState::zeros(effective.layout().clone());
    for s in 0..effective.num_sections() {
        let d = power.amplitudes[s];
        let prior = &priors.sections[s];
        for (k, (o, &r)) in out.section_mut(s).iter_mut().zip(effective.section(s)).enumerate() {
            *o = pme(prior.activity(k), r, tau, d);
        }
    }
    out
}

/// Mean over sections of the entropy (bits) of each normalized section of `s`.
pub fn section_entropy(s: &SparseState) -> f64 {
    let l = s.num_sections();
    let total: f64 = (0..l)
        .map(|sec| {
            let v = s.section(sec);
            let mass: f64 = v.iter().sum();
            if mass <= 0.0 {
                return (v.len() as f64).log2();
            }
            -v.iter()
                .filter(|&&x| x > 0.0)
                .map(|&x| {
                    let p = x / mass;
                    p * p.log2()
                })
                .sum::<f64>()
        })
        .sum();
    total / l as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub tau: f64,
    pub section_entropy: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct AmpOptions {
    /// Maximum number of denoising steps.
    pub iterations: usize,
    /// Relative τ change that counts as converged.
    pub tau_tolerance: f64,
    /// Keep every intermediate estimate (memory heavy at full scale).
    pub keep_estimates: bool,
    pub onsager: Onsager,
}

impl AmpOptions {
    pub fn new(iterations: usize) -> Self {
        AmpOptions { iterations, tau_tolerance: DEFAULT_TAU_TOLERANCE, keep_estimates: false, onsager: Onsager::Energy }
    }
}

/// Outcome of [`run_amp`].
#[derive(Debug, Clone)]
pub struct AmpRun {
    /// Final estimate with the residual and τ computed from it.
    pub state: AmpState,
    /// Effective observation for the final estimate.
    pub effective: SparseState,
    /// Priors evaluated on the final effective observation.
    pub final_priors: PriorField,
    pub trace: Vec<IterationRecord>,
    /// Estimates `s_1, s_2, …` when requested.
    pub estimates: Vec<SparseState>,
}

/// Runs the recursion from `s_0 = 0` for at most `options.iterations`
/// denoising steps.
pub fn run_amp(
    y: &[f64],
    op: &SensingOperator,
    power: &PowerAllocation,
    layout: Arc<SectionLayout>,
    options: AmpOptions,
    provider: &mut dyn PriorProvider,
) -> Result<AmpRun> {
    if options.iterations == 0 {
        return Err(Error::InvalidConfig("AMP needs at least one iteration".into()));
    }
    let n = op.rows();
    let mut s = SparseState::zeros(layout);
    let mut previous: Option<(Vec<f64>, f64)> = None;
    let mut trace = Vec::new();
    let mut estimates = Vec::new();

    for t in 0.. {
        let prev = previous.as_ref().map(|(z, tau)| (z.as_slice(), *tau));
        let z = residual_step_with(y, op, power, &s, prev, t, options.onsager)?;
        let tau = tau_update(&z, n);
        let r = effective_observation(&s, &z, op, power)?;
        trace.push(IterationRecord { iteration: t, tau, section_entropy: section_entropy(&s) });

        let stalled = previous
            .as_ref()
            .is_some_and(|(_, prev)| (tau - prev).abs() < options.tau_tolerance * prev);
        let priors = provider.priors(t, &r, tau, power);
        if t == options.iterations || stalled {
            return Ok(AmpRun {
                state: AmpState { s_hat: s, residual: z, tau, iteration: t },
                effective: r,
                final_priors: priors,
                trace,
                estimates,
            });
        }
        s = denoise(&r, &priors, tau, power);
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState { iteration: t });
        }
        if options.keep_estimates {
            estimates.push(s.clone());
        }
        previous = Some((z, tau));
    }
    unreachable!()
}
