//! Joint decoding: AMP with tree-code priors, then prune-and-stitch.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::amp::{
    activity_probability, pme, run_amp, AmpOptions, IterationRecord, Onsager, PriorField, PriorProvider, Uninformative,
    DEFAULT_TAU_TOLERANCE,
};
use crate::bits;
use crate::error::{Error, Result};
use crate::sensing::{PowerAllocation, SensingOperator};
use crate::sparse::{top_k, SectionLayout, SparseState};
use crate::tree::{
    build_partition_table, fold_likelihoods, lift, neighbourhood_priors, normalize, prune_and_stitch,
    GeneratorSet, PartitionTable, PathList, SectionBeliefs, TreeCodeConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Constant priors; the tree code is used only after AMP.
    Original,
    /// Tree-code priors recomputed during AMP.
    Enhanced,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Original => "original",
            Mode::Enhanced => "enhanced",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Mode::Original),
            "enhanced" => Ok(Mode::Enhanced),
            other => Err(Error::InvalidConfig(format!("unknown decoder mode {other:?}"))),
        }
    }
}

/// How the effective observation of a section becomes the beliefs that
/// feed the tree code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeliefModel {
    /// Normalized Gaussian likelihood ratio, see [`likelihoods_from_state`].
    Ratio,
    /// Normalized activity posteriors under the uninformative prior, see
    /// [`activity_beliefs`].
    Activity,
}

/// Entry weights used to rank candidates before stitching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ListWeights {
    /// Activity posterior under the uninformative prior, so the tree code
    /// enters only through stitching.
    Likelihood,
    /// Activity posterior under the final AMP priors.
    Posterior,
    /// Candidates chosen by posterior, paths weighted by likelihood.
    Hybrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub mode: Mode,
    pub beliefs: BeliefModel,
    /// Maximum AMP iterations.
    pub iterations: usize,
    /// Candidates kept per section and per stitched group.
    pub survivor_budget: usize,
    /// Budget ceiling when stitching comes up empty and the budget doubles.
    pub max_survivor_budget: usize,
    /// Upper bound on the output list; `None` means the number of active users.
    pub list_cap: Option<usize>,
    /// Weight `λ` of the uniform distribution mixed into tree priors.
    pub prior_damping: f64,
    /// Recompute tree priors every `prior_stride` iterations.
    pub prior_stride: usize,
    pub tau_tolerance: f64,
    pub onsager: Onsager,
    pub list_weights: ListWeights,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            mode: Mode::Enhanced,
            beliefs: BeliefModel::Activity,
            iterations: 25,
            survivor_budget: 64,
            max_survivor_budget: 1024,
            list_cap: None,
            prior_damping: 0.1,
            prior_stride: 1,
            tau_tolerance: DEFAULT_TAU_TOLERANCE,
            onsager: Onsager::Energy,
            list_weights: ListWeights::Hybrid,
        }
    }
}

impl DecoderConfig {
    pub fn with_mode(mode: Mode) -> Self {
        DecoderConfig { mode, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be ≥ 1".into()));
        }
        if self.list_cap == Some(0) {
            return Err(Error::InvalidConfig("list_cap must be ≥ 1".into()));
        }
        if !(0.0..=1.0).contains(&self.prior_damping) {
            return Err(Error::InvalidConfig("prior_damping must lie in [0, 1]".into()));
        }
        if self.prior_stride == 0 {
            return Err(Error::InvalidConfig("prior_stride must be ≥ 1".into()));
        }
        if self.survivor_budget == 0 || self.max_survivor_budget < self.survivor_budget {
            return Err(Error::InvalidConfig("need 1 ≤ survivor_budget ≤ max_survivor_budget".into()));
        }
        Ok(())
    }
}

/// Normalized likelihood of each value of a section being the active one:
/// `L(k) ∝ exp(d(2r_k − d) / 2τ²)`, the ratio of the "active" and
/// "inactive" Gaussian densities at `r_k`.
pub fn likelihoods_from_state(section: usize, effective: &[f64], tau: f64, d: f64) -> SectionBeliefs {
    let scale = d / (2.0 * tau * tau);
    let exps: Vec<f64> = effective.iter().map(|&r| scale * (2.0 * r - d)).collect();
    let max = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = exps.iter().map(|&e| (e - max).exp()).collect();
    if normalize(&mut weights).is_err() {
        return SectionBeliefs::uniform(section, effective.len());
    }
    SectionBeliefs { section, weights }
}

/// Per-entry posterior probability of being active under the uninformative
/// prior `q = 1 − (1 − 2^{-v})^{Ka}`, normalized over the section.
///
/// Unlike [`likelihoods_from_state`] these saturate at one, so a section
/// carrying several users keeps one peak per user instead of collapsing
/// onto the strongest.
pub fn activity_beliefs(section: usize, effective: &[f64], tau: f64, d: f64, ka: usize) -> SectionBeliefs {
    let q = activity_probability(1.0 / effective.len() as f64, ka);
    let mut weights: Vec<f64> = effective.iter().map(|&r| pme(q, r, tau, d)).collect();
    if normalize(&mut weights).is_err() {
        return SectionBeliefs::uniform(section, effective.len());
    }
    SectionBeliefs { section, weights }
}

fn damp(tilde: &mut [f64], damping: f64) {
    let u = 1.0 / tilde.len() as f64;
    tilde.iter_mut().for_each(|t| *t = (1.0 - damping) * *t + damping * u);
}

/// Tree-code priors for every section.
///
/// A parity section gets the convolution of its sources' folded beliefs.
/// An information section gets, from each parity section it feeds, the
/// lifted residue prior computed from the parity belief and the other
/// sources; several contributions are multiplied and renormalized. Any
/// contribution with zero mass is replaced by the uniform distribution.
pub fn dynamic_priors(
    beliefs: &[SectionBeliefs],
    config: &TreeCodeConfig,
    tables: &PartitionTable,
    ka: usize,
    damping: f64,
) -> Result<PriorField> {
    let l = config.num_sections();
    if beliefs.len() != l {
        return Err(Error::LengthMismatch { expected: l, actual: beliefs.len() });
    }
    let mut tilde: Vec<Option<Vec<f64>>> = vec![None; l];
    let mut info_messages: Vec<Vec<Vec<f64>>> = vec![Vec::new(); l];

    for &p in config.parity_sections() {
        let sources = config.sources(p);
        let folded = sources
            .iter()
            .map(|&j| fold_likelihoods(&beliefs[j], tables.get(j, p)))
            .collect::<Result<Vec<_>>>()?;
        let nb = neighbourhood_priors(p, &beliefs[p], &folded)?;
        tilde[p] = nb.parity.ok().map(|b| b.weights);
        for (&j, residue) in sources.iter().zip(nb.residues) {
            if let Ok(lifted) = residue.and_then(|r| lift(&r, tables.get(j, p))) {
                info_messages[j].push(lifted.weights);
            }
        }
    }

    for &j in config.info_sections() {
        let mut msgs = std::mem::take(&mut info_messages[j]).into_iter();
        tilde[j] = msgs.next().and_then(|mut acc| {
            for m in msgs {
                acc.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
            }
            normalize(&mut acc).ok().map(|_| acc)
        });
    }

    let tilde = tilde
        .into_iter()
        .enumerate()
        .map(|(s, t)| {
            let mut t = t.unwrap_or_else(|| vec![1.0 / config.section_size(s) as f64; config.section_size(s)]);
            damp(&mut t, damping);
            t
        })
        .collect();
    Ok(PriorField::from_tilde(tilde, ka))
}

/// [`PriorProvider`] that recomputes [`dynamic_priors`] from the current
/// effective observation.
pub struct TreePriors<'a> {
    config: &'a TreeCodeConfig,
    tables: &'a PartitionTable,
    model: BeliefModel,
    ka: usize,
    damping: f64,
    stride: usize,
    cached: Option<PriorField>,
}

impl<'a> TreePriors<'a> {
    pub fn new(config: &'a TreeCodeConfig, tables: &'a PartitionTable, ka: usize, damping: f64, stride: usize) -> Self {
        TreePriors { config, tables, model: BeliefModel::Activity, ka, damping, stride: stride.max(1), cached: None }
    }

    pub fn with_beliefs(mut self, model: BeliefModel) -> Self {
        self.model = model;
        self
    }
}

impl PriorProvider for TreePriors<'_> {
    fn priors(&mut self, iteration: usize, effective: &SparseState, tau: f64, power: &PowerAllocation) -> PriorField {
        if let Some(cached) = &self.cached {
            if !iteration.is_multiple_of(self.stride) {
                return cached.clone();
            }
        }
        let beliefs: Vec<SectionBeliefs> = (0..effective.num_sections())
            .map(|s| {
                let (r, d) = (effective.section(s), power.amplitudes[s]);
                match self.model {
                    BeliefModel::Ratio => likelihoods_from_state(s, r, tau, d),
                    BeliefModel::Activity => activity_beliefs(s, r, tau, d, self.ka),
                }
            })
            .collect();
        let field = dynamic_priors(&beliefs, self.config, self.tables, self.ka, self.damping)
            .unwrap_or_else(|_| PriorField::uninformative(effective.layout(), self.ka));
        self.cached = Some(field.clone());
        field
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedMessage {
    pub payload: Vec<u8>,
    pub weight: f64,
}

/// Decoded payloads, heaviest first. Serializes to a JSON array of
/// `{"payload": <hex>, "weight": <number>}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MessageList {
    pub entries: Vec<DecodedMessage>,
}

#[derive(Serialize, Deserialize)]
struct HexEntry {
    payload: String,
    bits: usize,
    weight: f64,
}

impl Serialize for MessageList {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<HexEntry> = self
            .entries
            .iter()
            .map(|e| HexEntry { payload: bits::to_hex(&e.payload), bits: e.payload.len(), weight: e.weight })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MessageList {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<HexEntry>::deserialize(d)?;
        let entries = v
            .into_iter()
            .map(|e| {
                let payload = bits::from_hex(&e.payload, e.bits)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad payload {:?}", e.payload)))?;
                Ok(DecodedMessage { payload, weight: e.weight })
            })
            .collect::<std::result::Result<_, D::Error>>()?;
        Ok(MessageList { entries })
    }
}

impl MessageList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, payload: &[u8]) -> bool {
        self.entries.iter().any(|e| e.payload == payload)
    }

    /// Sorts by weight and keeps the `cap` heaviest entries.
    pub fn truncate_to(&mut self, cap: usize) {
        self.entries.sort_by(|a, b| {
            b.weight
                .partial_cmp(&a.weight)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.payload.cmp(&b.payload))
        });
        self.entries.truncate(cap);
    }
}

#[derive(Debug, Clone)]
pub struct Decoded {
    pub messages: MessageList,
    pub trace: Vec<IterationRecord>,
    /// Survivor budget that produced the list, or `None` if stitching failed.
    pub budget: Option<usize>,
}

/// Shared, immutable decoding context: the code, its partition tables and
/// the sensing operator.
pub struct Decoder<'a> {
    config: &'a TreeCodeConfig,
    generators: &'a GeneratorSet,
    tables: PartitionTable,
    op: &'a SensingOperator,
    layout: Arc<SectionLayout>,
}

impl<'a> Decoder<'a> {
    pub fn new(config: &'a TreeCodeConfig, generators: &'a GeneratorSet, op: &'a SensingOperator) -> Result<Self> {
        if op.cols() != config.sparse_len() {
            return Err(Error::LengthMismatch { expected: config.sparse_len(), actual: op.cols() });
        }
        Ok(Decoder {
            config,
            generators,
            tables: build_partition_table(config, generators),
            op,
            layout: Arc::new(SectionLayout::for_config(config)),
        })
    }

    pub fn tables(&self) -> &PartitionTable {
        &self.tables
    }

    pub fn layout(&self) -> &Arc<SectionLayout> {
        &self.layout
    }

    /// Runs AMP in the configured mode and list-decodes its final output.
    pub fn decode(&self, y: &[f64], power: &PowerAllocation, dcfg: &DecoderConfig) -> Result<Decoded> {
        dcfg.validate()?;
        let ka = power.ka;
        let options = AmpOptions {
            iterations: dcfg.iterations,
            tau_tolerance: dcfg.tau_tolerance,
            keep_estimates: false,
            onsager: dcfg.onsager,
        };
        let run = match dcfg.mode {
            Mode::Original => {
                let mut p = Uninformative::new(&self.layout, ka);
                run_amp(y, self.op, power, self.layout.clone(), options, &mut p)?
            }
            Mode::Enhanced => {
                let mut p = TreePriors::new(self.config, &self.tables, ka, dcfg.prior_damping, dcfg.prior_stride)
                    .with_beliefs(dcfg.beliefs);
                run_amp(y, self.op, power, self.layout.clone(), options, &mut p)?
            }
        };

        let tau = run.state.tau;
        let mut budget = dcfg.survivor_budget.max(2 * ka);
        let max_budget = dcfg.max_survivor_budget.max(budget);
        // Per section: the weights that choose candidates and the weights
        // their paths carry through stitching.
        let scores: Vec<(Vec<f64>, Vec<f64>)> = (0..self.config.num_sections())
            .map(|s| {
                let d = power.amplitudes[s];
                let r = run.effective.section(s);
                let q = activity_probability(1.0 / self.config.section_size(s) as f64, ka);
                let likelihood = || r.iter().map(|&r| pme(q, r, tau, d)).collect::<Vec<f64>>();
                let posterior = || {
                    let prior = &run.final_priors.sections[s];
                    r.iter().enumerate().map(|(k, &r)| pme(prior.activity(k), r, tau, d)).collect::<Vec<f64>>()
                };
                match dcfg.list_weights {
                    ListWeights::Likelihood => {
                        let l = likelihood();
                        (l.clone(), l)
                    }
                    ListWeights::Posterior => {
                        let p = posterior();
                        (p.clone(), p)
                    }
                    ListWeights::Hybrid => (posterior(), likelihood()),
                }
            })
            .collect();
        let lists_for = |budget: usize| -> Vec<PathList> {
            scores
                .iter()
                .enumerate()
                .map(|(s, (select, weight))| {
                    let picked = top_k(select, budget).into_iter().filter(|&(k, w)| w > 0.0 && weight[k] > 0.0);
                    PathList::for_section(s, picked.map(|(k, _)| (k as u32, weight[k])))
                })
                .collect()
        };

        let stitched = loop {
            match prune_and_stitch(&lists_for(budget), self.config, self.generators, budget) {
                Ok(list) => break Some(list),
                Err(Error::EmptyResult) if budget < max_budget => budget = (2 * budget).min(max_budget),
                Err(Error::EmptyResult) => break None,
                Err(e) => return Err(e),
            }
        };

        let mut messages = MessageList::default();
        if let Some(list) = &stitched {
            for (i, path) in list.entries.iter().enumerate() {
                let payload = self
                    .config
                    .info_sections()
                    .iter()
                    .flat_map(|&j| {
                        let v = list.value(i, j).expect("stitched list covers every information section");
                        bits::from_value(u64::from(v), self.config.section_bits(j) as usize)
                    })
                    .collect();
                messages.entries.push(DecodedMessage { payload, weight: path.weight });
            }
        }
        messages.truncate_to(dcfg.list_cap.unwrap_or(ka).max(1));
        Ok(Decoded { messages, trace: run.trace, budget: stitched.map(|_| budget) })
    }
}

/// One-shot decode that builds the partition tables on the fly.
pub fn decode(
    y: &[f64],
    op: &SensingOperator,
    power: &PowerAllocation,
    config: &TreeCodeConfig,
    generators: &GeneratorSet,
    dcfg: &DecoderConfig,
) -> Result<MessageList> {
    Ok(Decoder::new(config, generators, op)?.decode(y, power, dcfg)?.messages)
}
