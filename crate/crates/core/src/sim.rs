//! Monte-Carlo simulation of the Gaussian multiple-access channel.
//!
//! Every trial draws `Ka` uniform payloads, encodes and superposes them,
//! adds unit-variance real Gaussian noise and decodes. A transmitted payload
//! counts as recovered when its exact bit string is in the output list, so
//! users who happen to send the same payload share one list entry.

use std::collections::BTreeSet;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decoder::{Decoder, DecoderConfig, Mode};
use crate::error::{Error, Result};
use crate::sensing::{build_power, ebn0_db_to_power, operator_for, SensingOperator};
use crate::sparse::{assemble, superpose};
use crate::tree::{encode, sample_generators, GeneratorSet, TreeCodeConfig};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CCS_AMP_THREADS";

/// Code, generators and sensing matrix shared by every trial.
#[derive(Debug, Clone)]
pub struct System {
    pub config: TreeCodeConfig,
    pub generators: GeneratorSet,
    pub operator: SensingOperator,
}

impl System {
    pub fn new(config: TreeCodeConfig, generator_seed: u64, n: usize, operator_seed: u64) -> Result<Self> {
        let generators = sample_generators(&config, generator_seed);
        let operator = operator_for(n, config.sparse_len(), operator_seed)?;
        Ok(System { config, generators, operator })
    }

    pub fn channel_uses(&self) -> usize {
        self.operator.rows()
    }

    pub fn decoder(&self) -> Result<Decoder<'_>> {
        Decoder::new(&self.config, &self.generators, &self.operator)
    }
}

/// Fully seeded description of a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub ka: usize,
    pub ebn0_db: f64,
    pub n: usize,
    pub preset: String,
    pub generator_seed: u64,
    pub operator_seed: u64,
    pub payload_seed: u64,
    pub noise_seed: u64,
    pub decoder: DecoderConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Transmitted payloads missing from the list, counted per user.
    pub missed: usize,
    pub pupe_contrib: f64,
    /// Users whose payload duplicates an earlier user's.
    pub collisions: usize,
    pub list_len: usize,
    pub wall_time: f64,
}

struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Stopwatch(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn seconds(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

pub fn random_payloads(ka: usize, bits: usize, seed: u64) -> Vec<Vec<u8>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ka).map(|_| (0..bits).map(|_| u8::from(rng.random::<bool>())).collect()).collect()
}

/// Channel output `y = A D Σ m_i + z` for the given payloads.
pub fn transmit(system: &System, payloads: &[Vec<u8>], ebn0_db: f64, noise_seed: u64) -> Result<Vec<f64>> {
    let decoder = system.decoder()?;
    transmit_with(system, &decoder, payloads, ebn0_db, noise_seed)
}

fn transmit_with(
    system: &System,
    decoder: &Decoder<'_>,
    payloads: &[Vec<u8>],
    ebn0_db: f64,
    noise_seed: u64,
) -> Result<Vec<f64>> {
    let n = system.channel_uses();
    let power = build_power(
        &system.config,
        n,
        ebn0_db_to_power(ebn0_db, system.config.info_bits(), n),
        payloads.len().max(1),
    );
    let layout = decoder.layout().clone();
    let messages = payloads
        .iter()
        .map(|p| assemble(&encode(p, &system.config, &system.generators)?, layout.clone()))
        .collect::<Result<Vec<_>>>()?;
    let s = superpose(&messages, layout)?;
    let mut y = system.operator.forward(&power.apply(&s))?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    y.iter_mut().for_each(|v| *v += rng.sample::<f64, _>(StandardNormal));
    Ok(y)
}

/// Sends `payloads` through the channel and scores the decoder's list.
pub fn simulate_payloads(
    system: &System,
    decoder: &Decoder<'_>,
    payloads: &[Vec<u8>],
    ebn0_db: f64,
    noise_seed: u64,
    dcfg: &DecoderConfig,
) -> Result<TrialResult> {
    let clock = Stopwatch::start();
    let ka = payloads.len();
    if ka == 0 {
        return Err(Error::InvalidConfig("need at least one active user".into()));
    }
    let y = transmit_with(system, decoder, payloads, ebn0_db, noise_seed)?;
    let n = system.channel_uses();
    let power = build_power(&system.config, n, ebn0_db_to_power(ebn0_db, system.config.info_bits(), n), ka);
    let decoded = decoder.decode(&y, &power, dcfg)?;

    let distinct: BTreeSet<&Vec<u8>> = payloads.iter().collect();
    let missed = payloads.iter().filter(|p| !decoded.messages.contains(p)).count();
    Ok(TrialResult {
        missed,
        pupe_contrib: missed as f64 / ka as f64,
        collisions: ka - distinct.len(),
        list_len: decoded.messages.len(),
        wall_time: clock.seconds(),
    })
}

/// One trial with freshly drawn payloads.
pub fn simulate_with(
    system: &System,
    decoder: &Decoder<'_>,
    ka: usize,
    ebn0_db: f64,
    payload_seed: u64,
    noise_seed: u64,
    dcfg: &DecoderConfig,
) -> Result<TrialResult> {
    let payloads = random_payloads(ka, system.config.info_bits(), payload_seed);
    simulate_payloads(system, decoder, &payloads, ebn0_db, noise_seed, dcfg)
}

/// Builds the system described by `cfg` and runs one trial.
pub fn simulate_trial(cfg: &TrialConfig) -> Result<TrialResult> {
    let tree = TreeCodeConfig::preset(&cfg.preset)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown preset {:?}", cfg.preset)))?;
    let system = System::new(tree, cfg.generator_seed, cfg.n, cfg.operator_seed)?;
    let decoder = system.decoder()?;
    simulate_with(&system, &decoder, cfg.ka, cfg.ebn0_db, cfg.payload_seed, cfg.noise_seed, &cfg.decoder)
}

/// Sample mean and standard error of per-trial error fractions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PupeEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Trials that produced a result.
    pub trials: usize,
    /// Trials aborted on a non-finite AMP state, excluded from the mean.
    pub failures: usize,
    pub wall_time: f64,
}

/// Mean and standard error (`s/√N` with the unbiased sample deviation).
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Per-trial `(payload_seed, noise_seed)` pairs derived from a master seed.
pub fn trial_seeds(master_seed: u64, trials: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..trials).map(|_| (rng.next_u64(), rng.next_u64())).collect()
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[cfg(feature = "parallel")]
fn run_all<T: Send>(count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    use std::sync::OnceLock;
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    let pool = POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = thread_cap() {
            b = b.num_threads(n);
        }
        b.build().expect("thread pool")
    });
    pool.install(|| (0..count).into_par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_all<T>(count: usize, f: impl Fn(usize) -> T) -> Vec<T> {
    (0..count).map(f).collect()
}

/// Runs `trials` independent trials and averages the per-user error.
/// Results are merged in seed order, so the estimate does not depend on
/// scheduling.
pub fn estimate_pupe(
    system: &System,
    ka: usize,
    ebn0_db: f64,
    dcfg: &DecoderConfig,
    trials: usize,
    master_seed: u64,
) -> Result<PupeEstimate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("need at least one trial".into()));
    }
    let clock = Stopwatch::start();
    let decoder = system.decoder()?;
    let seeds = trial_seeds(master_seed, trials);
    let results = run_all(trials, |i| {
        let (ps, ns) = seeds[i];
        simulate_with(system, &decoder, ka, ebn0_db, ps, ns, dcfg)
    });
    let mut contribs = Vec::with_capacity(trials);
    let mut failures = 0;
    for r in results {
        match r {
            Ok(t) => contribs.push(t.pupe_contrib),
            Err(Error::NonFiniteState { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    let (mean, stderr) = if contribs.is_empty() { (1.0, 0.0) } else { mean_and_stderr(&contribs) };
    Ok(PupeEstimate { mean, stderr, trials: contribs.len(), failures, wall_time: clock.seconds() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpec {
    pub low_db: f64,
    pub high_db: f64,
    pub resolution_db: f64,
    pub target_pupe: f64,
    pub trials_per_point: usize,
}

impl Default for SearchSpec {
    fn default() -> Self {
        SearchSpec { low_db: 0.0, high_db: 8.0, resolution_db: 0.05, target_pupe: 0.05, trials_per_point: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub ebn0_db: f64,
    pub estimate: PupeEstimate,
}

/// Smallest Eb/N0 found to meet the target error rate for one `Ka`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ka: usize,
    pub mode: Mode,
    pub ebn0_db: f64,
    pub estimate: PupeEstimate,
    /// Final bracket: the low end misses the target, the high end meets it.
    pub bracket: (f64, f64),
    pub probes: Vec<Probe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub target_pupe: f64,
    pub rows: Vec<SweepRow>,
}

/// Bisection on Eb/N0. Every probe reuses `master_seed`, so all probes see
/// the same payloads and noise shapes.
///
/// Returns the low end straight away when it already meets the target, and
/// [`Error::NoBracket`] when the interval is inverted or the high end misses.
pub fn min_ebn0_search(
    system: &System,
    ka: usize,
    dcfg: &DecoderConfig,
    spec: &SearchSpec,
    master_seed: u64,
) -> Result<SweepRow> {
    let no_bracket = Error::NoBracket { low_db: spec.low_db, high_db: spec.high_db };
    if spec.low_db.partial_cmp(&spec.high_db).is_none_or(|o| o.is_gt()) || spec.resolution_db <= 0.0 {
        return Err(no_bracket);
    }
    let mut probes = Vec::new();
    let mut probe = |db: f64| -> Result<PupeEstimate> {
        let est = estimate_pupe(system, ka, db, dcfg, spec.trials_per_point, master_seed)?;
        probes.push(Probe { ebn0_db: db, estimate: est.clone() });
        Ok(est)
    };
    let low = probe(spec.low_db)?;
    if low.mean <= spec.target_pupe {
        let bracket = (spec.low_db, spec.low_db);
        return Ok(SweepRow { ka, mode: dcfg.mode, ebn0_db: spec.low_db, estimate: low, bracket, probes });
    }
    let mut best = probe(spec.high_db)?;
    if best.mean > spec.target_pupe {
        return Err(no_bracket);
    }
    let (mut lo, mut hi) = (spec.low_db, spec.high_db);
    while hi - lo > spec.resolution_db + 1e-12 {
        let mid = 0.5 * (lo + hi);
        let est = probe(mid)?;
        if est.mean <= spec.target_pupe {
            hi = mid;
            best = est;
        } else {
            lo = mid;
        }
    }
    Ok(SweepRow { ka, mode: dcfg.mode, ebn0_db: hi, estimate: best, bracket: (lo, hi), probes })
}

/// [`min_ebn0_search`] for each `Ka` in turn.
pub fn sweep(
    system: &System,
    ka_list: &[usize],
    dcfg: &DecoderConfig,
    spec: &SearchSpec,
    master_seed: u64,
) -> Result<SweepResult> {
    let rows = ka_list
        .iter()
        .map(|&ka| min_ebn0_search(system, ka, dcfg, spec, master_seed))
        .collect::<Result<_>>()?;
    Ok(SweepResult { target_pupe: spec.target_pupe, rows })
}
