//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Everything runs on the small four-section code so that a decode finishes
//! in well under a second in the browser.

use ccs_amp::amp::pme;
use ccs_amp::bits;
use ccs_amp::decoder::{dynamic_priors, DecoderConfig, Mode};
use ccs_amp::sensing::{build_power, ebn0_db_to_power};
use ccs_amp::sim::{random_payloads, transmit, System};
use ccs_amp::tree::{build_partition_table, encode, sample_generators, SectionBeliefs, TreeCodeConfig};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const TOY_N: usize = 2048;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Posterior mean of one entry as the effective observation sweeps
/// `[r_min, r_max]`.
#[wasm_bindgen]
pub fn pme_curve(prior: f64, tau: f64, amplitude: f64, r_min: f64, r_max: f64, points: usize) -> Vec<f64> {
    let step = if points > 1 { (r_max - r_min) / (points - 1) as f64 } else { 0.0 };
    (0..points).map(|i| pme(prior, r_min + step * i as f64, tau, amplitude)).collect()
}

#[derive(Serialize)]
struct PriorDemo {
    /// Prior on the first parity section.
    prior: Vec<f64>,
    /// Value the parity section actually took.
    truth: u32,
}

/// Encodes a random payload, gives each information section a belief that
/// puts `confidence` on the true value and spreads the rest uniformly, and
/// returns the prior this induces on the first parity section as JSON.
#[wasm_bindgen]
pub fn parity_prior_demo(confidence: f64, seed: u32) -> Result<String, JsError> {
    let cfg = TreeCodeConfig::toy();
    let gens = sample_generators(&cfg, 0);
    let tables = build_partition_table(&cfg, &gens);
    let payload = random_payloads(1, cfg.info_bits(), seed.into()).remove(0);
    let msg = encode(&payload, &cfg, &gens).map_err(js_err)?;
    let c = confidence.clamp(0.0, 1.0);
    let beliefs: Vec<SectionBeliefs> = (0..cfg.num_sections())
        .map(|s| {
            let size = cfg.section_size(s);
            if !cfg.is_info(s) {
                return SectionBeliefs::uniform(s, size);
            }
            let hot = msg.blocks[s] as usize;
            let w = (0..size).map(|k| (1.0 - c) / size as f64 + if k == hot { c } else { 0.0 }).collect();
            SectionBeliefs::new(s, w)
        })
        .collect();
    let field = dynamic_priors(&beliefs, &cfg, &tables, 1, 0.0).map_err(js_err)?;
    let parity = cfg.parity_sections()[0];
    let out = PriorDemo {
        prior: (0..cfg.section_size(parity)).map(|k| field.sections[parity].tilde(k)).collect(),
        truth: msg.blocks[parity],
    };
    serde_json::to_string(&out).map_err(js_err)
}

#[derive(Serialize)]
struct DecodeDemo {
    sent: Vec<String>,
    decoded: Vec<String>,
    tau: Vec<f64>,
    missed: usize,
}

/// Runs one transmission of `ka` random users at `ebn0_db` and decodes it
/// with the given mode (`"original"` or `"enhanced"`). Returns JSON with the
/// sent and decoded payloads and the per-iteration noise estimate.
#[wasm_bindgen]
pub fn decode_demo(ka: usize, ebn0_db: f64, mode: &str, seed: u32) -> Result<String, JsError> {
    let mode: Mode = mode.parse().map_err(js_err)?;
    let system = System::new(TreeCodeConfig::toy(), 0, TOY_N, 1).map_err(js_err)?;
    let w = system.config.info_bits();
    let payloads = random_payloads(ka, w, seed.into());
    let y = transmit(&system, &payloads, ebn0_db, u64::from(seed) ^ 0x9e37_79b9_7f4a_7c15).map_err(js_err)?;
    let power = build_power(&system.config, TOY_N, ebn0_db_to_power(ebn0_db, w, TOY_N), ka);
    let out = system
        .decoder()
        .map_err(js_err)?
        .decode(&y, &power, &DecoderConfig::with_mode(mode))
        .map_err(js_err)?;
    let decoded: Vec<Vec<u8>> = out.messages.entries.iter().map(|e| e.payload.clone()).collect();
    let missed = payloads.iter().filter(|p| !decoded.contains(p)).count();
    let result = DecodeDemo {
        sent: payloads.iter().map(|p| bits::to_hex(p)).collect(),
        decoded: decoded.iter().map(|p| bits::to_hex(p)).collect(),
        tau: out.trace.iter().map(|r| r.tau).collect(),
        missed,
    };
    serde_json::to_string(&result).map_err(js_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confident_beliefs_pin_the_parity() {
        let v: serde_json::Value = serde_json::from_str(&parity_prior_demo(1.0, 3).unwrap()).unwrap();
        let truth = v["truth"].as_u64().unwrap() as usize;
        assert!((v["prior"][truth].as_f64().unwrap() - 1.0).abs() < 1e-9);
        let v: serde_json::Value = serde_json::from_str(&parity_prior_demo(0.0, 3).unwrap()).unwrap();
        assert_eq!(v["prior"].as_array().unwrap().len(), 256);
    }

    #[test]
    fn decode_demo_recovers_at_high_snr() {
        let v: serde_json::Value = serde_json::from_str(&decode_demo(2, 15.0, "enhanced", 1).unwrap()).unwrap();
        assert_eq!(v["missed"], 0);
        assert_eq!(v["sent"].as_array().unwrap().len(), 2);
        assert!(!v["tau"].as_array().unwrap().is_empty());
    }

    #[test]
    fn pme_curve_rises_through_half() {
        let c = pme_curve(0.5, 1.0, 2.0, -4.0, 6.0, 11);
        assert_eq!(c.len(), 11);
        assert!(c.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(c[5], 0.5);
    }
}
