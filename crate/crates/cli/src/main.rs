use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ccs_amp::bits;
use ccs_amp::config::{RunConfig, TreeSpec};
use ccs_amp::decoder::Mode;
use ccs_amp::report::{self, Fig3Row, SweepCsvRow};
use ccs_amp::sensing::{build_power, ebn0_db_to_power};
use ccs_amp::sim::{self, estimate_pupe, min_ebn0_search, random_payloads, trial_seeds};
use ccs_amp::tree::encode;
use ccs_amp::Error;

#[derive(Parser)]
#[command(name = "ccs-amp", version, about = "Coded compressed sensing with AMP for unsourced random access")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for payloads and noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tree-code preset: toy, full16 or full18.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Number of channel uses.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Number of active users.
    #[arg(long, global = true)]
    ka: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    ebn0_db: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Decoder mode: original or enhanced; `reproduce-fig3` also takes
    /// `both`, its default.
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Write zero wall times so that repeated runs give identical files.
    #[arg(long, global = true)]
    no_timing: bool,
    /// Primary output file (stdout when omitted).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// JSON summary file.
    #[arg(long, global = true)]
    summary: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Encode payloads and print their section values.
    Encode {
        /// Payload as hex; the low `w` bits are used.
        #[arg(long, conflicts_with = "random")]
        payload: Option<String>,
        /// Encode this many random payloads instead.
        #[arg(long)]
        random: Option<usize>,
    },
    /// Decode a received vector written by `trial --dump-received`.
    Decode {
        #[arg(long)]
        received: PathBuf,
    },
    /// Estimate the per-user error probability at one operating point.
    Trial {
        /// Write the first trial's payloads and channel output as JSON.
        #[arg(long)]
        dump_received: Option<PathBuf>,
        /// Write the first trial's per-iteration AMP trace as CSV.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// Search the smallest Eb/N0 meeting the target error for each Ka.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        ka_list: Option<Vec<usize>>,
    },
    /// Required Eb/N0 against Ka for each decoder mode.
    #[command(name = "reproduce-fig3")]
    ReproduceFig3 {
        #[arg(long, value_delimiter = ',')]
        ka_list: Option<Vec<usize>>,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Search(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoBracket { .. } | Error::EmptyResult => Failure::Search(e.to_string()),
            Error::InvalidConfig(_)
            | Error::InconsistentLengths { .. }
            | Error::DanglingEdge { .. }
            | Error::BadDimensions(_) => Failure::Config(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

/// Channel output as written by `trial --dump-received`.
#[derive(Serialize, Deserialize)]
struct Received {
    ka: usize,
    ebn0_db: f64,
    #[serde(default)]
    payloads: Vec<String>,
    y: Vec<f64>,
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.master_seed = s;
    }
    if let Some(p) = &common.preset {
        cfg.tree = TreeSpec::Preset { preset: p.clone() };
    }
    if let Some(n) = common.n {
        cfg.n = n;
    }
    if let Some(k) = common.ka {
        cfg.ka = k;
    }
    if let Some(db) = common.ebn0_db {
        cfg.ebn0_db = db;
    }
    if let Some(t) = common.trials {
        cfg.trials = t;
        cfg.search.trials_per_point = t;
    }
    match common.mode.as_deref() {
        None | Some("both") => {}
        Some(m) => cfg.decoder.mode = m.parse()?,
    }
    if common.no_timing {
        cfg.record_timing = false;
    }
    cfg.validate().map_err(Failure::from)?;
    Ok(cfg)
}

fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn write_summary<R: Serialize>(common: &Common, command: &str, cfg: &RunConfig, result: &R) -> io::Result<()> {
    if let Some(p) = &common.summary {
        fs::write(p, report::summary_json(command, cfg, result) + "\n")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let common = &cli.common;
    if common.mode.as_deref() == Some("both") && !matches!(cli.command, Command::ReproduceFig3 { .. }) {
        return Err(Failure::Config("--mode both only applies to reproduce-fig3".into()));
    }
    let cfg = load_config(common)?;
    match &cli.command {
        Command::Encode { payload, random } => {
            let tree = cfg.tree.build()?;
            let gens = ccs_amp::tree::sample_generators(&tree, cfg.generator_seed);
            let w = tree.info_bits();
            let payloads = match (payload, random) {
                (Some(hex), _) => {
                    let bits = bits::from_hex(hex, w)
                        .ok_or_else(|| Failure::Config(format!("payload {hex:?} is not a {w}-bit hex string")))?;
                    vec![bits]
                }
                (None, count) => random_payloads(count.unwrap_or(1), w, cfg.master_seed),
            };
            #[derive(Serialize)]
            struct Encoded {
                payload: String,
                blocks: Vec<u32>,
            }
            let out = payloads
                .iter()
                .map(|p| {
                    Ok(Encoded { payload: bits::to_hex(p), blocks: encode(p, &tree, &gens)?.blocks })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            emit(common.out.as_deref(), &(serde_json::to_string_pretty(&out).expect("serializes") + "\n"))?;
        }
        Command::Decode { received } => {
            let text = fs::read_to_string(received)
                .map_err(|e| Failure::Config(format!("{}: {e}", received.display())))?;
            let rx: Received = serde_json::from_str(&text)
                .map_err(|e| Failure::Config(format!("{}: {e}", received.display())))?;
            let system = cfg.system()?;
            let n = system.channel_uses();
            let w = system.config.info_bits();
            let power = build_power(&system.config, n, ebn0_db_to_power(rx.ebn0_db, w, n), rx.ka);
            let decoded = system.decoder()?.decode(&rx.y, &power, &cfg.decoder)?;
            emit(
                common.out.as_deref(),
                &(serde_json::to_string_pretty(&decoded.messages).expect("serializes") + "\n"),
            )?;
            write_summary(common, "decode", &cfg, &decoded.messages)?;
            if decoded.messages.is_empty() {
                return Err(Error::EmptyResult.into());
            }
        }
        Command::Trial { dump_received, diagnostics } => {
            let system = cfg.system()?;
            if dump_received.is_some() || diagnostics.is_some() {
                let (ps, ns) = trial_seeds(cfg.master_seed, 1)[0];
                let payloads = random_payloads(cfg.ka, system.config.info_bits(), ps);
                let y = sim::transmit(&system, &payloads, cfg.ebn0_db, ns)?;
                if let Some(path) = dump_received {
                    let rx = Received {
                        ka: cfg.ka,
                        ebn0_db: cfg.ebn0_db,
                        payloads: payloads.iter().map(|p| bits::to_hex(p)).collect(),
                        y: y.clone(),
                    };
                    fs::write(path, serde_json::to_string(&rx).expect("serializes") + "\n")?;
                }
                if let Some(path) = diagnostics {
                    let n = system.channel_uses();
                    let power =
                        build_power(&system.config, n, ebn0_db_to_power(cfg.ebn0_db, system.config.info_bits(), n), cfg.ka);
                    let decoded = system.decoder()?.decode(&y, &power, &cfg.decoder)?;
                    report::write_diagnostics(fs::File::create(path)?, &decoded.trace)?;
                }
            }
            let est = estimate_pupe(&system, cfg.ka, cfg.ebn0_db, &cfg.decoder, cfg.trials, cfg.master_seed)?;
            let row = Fig3Row::from_estimate(cfg.ka, cfg.decoder.mode, cfg.ebn0_db, &est, cfg.record_timing);
            emit(common.out.as_deref(), &report::csv_string(&[row]))?;
            if common.out.is_some() {
                eprintln!("PUPE {:.4} ± {:.4} over {} trials ({} failed)", est.mean, est.stderr, est.trials, est.failures);
            }
            write_summary(common, "trial", &cfg, &est)?;
        }
        Command::Sweep { ka_list } => {
            let system = cfg.system()?;
            let ka_list = ka_list.clone().unwrap_or_else(|| cfg.ka_list.clone());
            let mut rows = Vec::new();
            for &ka in &ka_list {
                let row = min_ebn0_search(&system, ka, &cfg.decoder, &cfg.search, cfg.master_seed)?;
                eprintln!("Ka={ka}: {:.2} dB (PUPE {:.4})", row.ebn0_db, row.estimate.mean);
                rows.push(row);
            }
            let csv_rows: Vec<SweepCsvRow> = rows.iter().map(|r| SweepCsvRow::new(r, cfg.record_timing)).collect();
            emit(common.out.as_deref(), &report::csv_string(&csv_rows))?;
            write_summary(common, "sweep", &cfg, &csv_rows)?;
        }
        Command::ReproduceFig3 { ka_list } => {
            let modes = match common.mode.as_deref() {
                None | Some("both") => vec![Mode::Original, Mode::Enhanced],
                Some(_) => vec![cfg.decoder.mode],
            };
            let system = cfg.system()?;
            let ka_list = ka_list.clone().unwrap_or_else(|| cfg.ka_list.clone());
            let mut rows = Vec::new();
            for &m in &modes {
                let dcfg = ccs_amp::decoder::DecoderConfig { mode: m, ..cfg.decoder.clone() };
                for &ka in &ka_list {
                    let row = min_ebn0_search(&system, ka, &dcfg, &cfg.search, cfg.master_seed)?;
                    eprintln!("{m} Ka={ka}: {:.2} dB", row.ebn0_db);
                    rows.push(Fig3Row::from_sweep(&row, cfg.record_timing));
                }
            }
            emit(common.out.as_deref(), &report::csv_string(&rows))?;
            write_summary(common, "reproduce-fig3", &cfg, &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Search(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
