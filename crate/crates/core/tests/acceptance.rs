//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. The full-scale check runs only when
//! `CCS_AMP_RELEASE=1`.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use ccs_amp::amp::{pme, residual_step};
use ccs_amp::decoder::{DecoderConfig, Mode};
use ccs_amp::report::{csv_string, Fig3Row, SweepCsvRow};
use ccs_amp::sensing::{build_operator, build_power, fwht, operator_for};
use ccs_amp::sim::{estimate_pupe, min_ebn0_search, random_payloads, simulate_with, trial_seeds, SearchSpec, System};
use ccs_amp::sparse::{assemble, superpose, SectionLayout, SparseState};
use ccs_amp::tree::{encode, fold_likelihoods, info_prior, parity_prior, sample_generators, TreeCodeConfig};
use common::*;
use rand::Rng;

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn tree_prior_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let k = r.random_range(1..=3);
        let bits: Vec<u32> = (0..k).map(|_| r.random_range(3..=6)).collect();
        let s = star(&bits, r.random_range(3..=6), case);
        let beliefs: Vec<_> =
            (0..s.config.num_sections()).map(|i| random_beliefs(i, s.config.section_size(i), &mut r)).collect();
        let folded = |j: usize| fold_likelihoods(&beliefs[j], s.tables.get(j, s.parity)).unwrap();
        let sources = s.config.sources(s.parity).to_vec();
        let got = parity_prior(&sources.iter().map(|&j| folded(j)).collect::<Vec<_>>()).unwrap();
        worst = worst.max(tolerance_ratio(&got.weights, &brute_parity_prior(&s, &beliefs), 1e-10, 1e-13));
        for &j in &sources {
            let others: Vec<_> = sources.iter().filter(|&&i| i != j).map(|&i| folded(i)).collect();
            let got = info_prior(j, &beliefs[s.parity], &others, s.tables.get(j, s.parity)).unwrap();
            worst = worst.max(tolerance_ratio(&got.weights, &brute_info_prior(&s, &beliefs, j), 1e-10, 1e-13));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst <= 1.0 && secs < 10.0, format!("50 configs, worst error {worst:.3} of tolerance, {secs:.2} s"))
}

fn pme_identities() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    for &(r, tau, d) in &[(0.3, 0.5, 1.0), (-2.0, 1.3, 4.0), (10.0, 0.01, 2.5)] {
        ok &= pme(1.0, r, tau, d) == 1.0;
        ok &= pme(0.0, r, tau, d) == 0.0;
        ok &= pme(0.5, d / 2.0, tau, d) == 0.5;
    }
    let (tau, d) = (0.8, 2.0);
    let qs: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
    let rs: Vec<f64> = (0..100).map(|i| -4.0 + 8.0 * i as f64 / 99.0).collect();
    let mut monotone = true;
    for i in 0..100 {
        for j in 0..100 {
            let v = pme(qs[i], rs[j], tau, d);
            if i > 0 {
                monotone &= pme(qs[i - 1], rs[j], tau, d) <= v;
            }
            if j > 0 {
                monotone &= pme(qs[i], rs[j - 1], tau, d) <= v;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(ok && monotone && secs < 1.0, format!("identities {ok}, monotone on 100x100 grid {monotone}, {secs:.3} s"))
}

fn amp_structure() -> Outcome {
    let cfg = ccs_amp::tree::build_config(6, &[3, 3, 3], &[0, 1], &[(2, vec![0, 1])].into()).unwrap();
    let gens = sample_generators(&cfg, 3);
    let lay = Arc::new(SectionLayout::for_config(&cfg));
    let n = 16;
    let op = operator_for(n, cfg.sparse_len(), 9).unwrap();
    let dense = op.dense();
    let mut r = rng(77);
    let ka = 2;
    let power = build_power(&cfg, n, 0.7, ka);

    let y: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
    let z0 = residual_step(&y, &op, &power, &SparseState::zeros(lay.clone()), None, 0).unwrap();
    let first = z0 == y;

    // Ka ones per section give exactly the expected energy, so the Onsager
    // term must vanish.
    let msgs: Vec<_> = (0..ka)
        .map(|i| assemble(&encode(&random_payloads(1, 6, i as u64)[0], &cfg, &gens).unwrap(), lay.clone()).unwrap())
        .collect();
    let s = superpose(&msgs, lay.clone()).unwrap();
    let prev: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    let with = residual_step(&y, &op, &power, &s, Some((&prev, 0.9)), 1).unwrap();
    let without = residual_step(&y, &op, &power, &s, None, 1).unwrap();
    let zero_point = with.iter().zip(&without).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut straight: f64 = 0.0;
    for _ in 0..20 {
        let values: Vec<f64> = (0..cfg.sparse_len()).map(|_| r.random_range(0.0..1.0)).collect();
        let s = SparseState::from_values(lay.clone(), values).unwrap();
        let prev: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let tau_prev = r.random_range(0.5..2.0);
        let got = residual_step(&y, &op, &power, &s, Some((&prev, tau_prev)), 1).unwrap();
        let ds: Vec<f64> = (0..cfg.sparse_len())
            .map(|k| {
                let sec = (0..3).find(|&i| lay.range(i).contains(&k)).unwrap();
                power.amplitudes[sec] * s.values[k]
            })
            .collect();
        let energy: f64 = ds.iter().map(|v| v * v).sum();
        let expected: f64 = ka as f64 * power.amplitudes.iter().map(|d| d * d).sum::<f64>();
        for i in 0..n {
            let ads: f64 = dense[i].iter().zip(&ds).map(|(a, b)| a * b).sum();
            let want = y[i] - ads + prev[i] / (tau_prev * tau_prev) * (expected - energy) / n as f64;
            straight = straight.max((got[i] - want).abs());
        }
    }
    outcome(
        first && zero_point <= 1e-10 && straight <= 1e-12,
        format!("z0 == y {first}, Onsager zero-point {zero_point:.1e}, straight-line error {straight:.1e}"),
    )
}

fn sensing() -> Outcome {
    let op = build_operator(8, 16, 4).unwrap();
    let a = op.dense();
    let mut r = rng(5);
    let mut dense_err: f64 = 0.0;
    let mut dual_err: f64 = 0.0;
    for _ in 0..20 {
        let x: Vec<f64> = (0..16).map(|_| r.random_range(-1.0..1.0)).collect();
        let z: Vec<f64> = (0..8).map(|_| r.random_range(-1.0..1.0)).collect();
        let ax = op.forward(&x).unwrap();
        let atz = op.adjoint(&z).unwrap();
        for i in 0..8 {
            let want: f64 = a[i].iter().zip(&x).map(|(p, q)| p * q).sum();
            dense_err = dense_err.max((ax[i] - want).abs());
        }
        for k in 0..16 {
            let want: f64 = (0..8).map(|i| a[i][k] * z[i]).sum();
            dense_err = dense_err.max((atz[k] - want).abs());
        }
        let lhs: f64 = ax.iter().zip(&z).map(|(p, q)| p * q).sum();
        let rhs: f64 = x.iter().zip(&atz).map(|(p, q)| p * q).sum();
        dual_err = dual_err.max((lhs - rhs).abs());
    }
    let m = 1 << 20;
    let x: Vec<f64> = (0..m).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut v = x.clone();
    fwht(&mut v);
    fwht(&mut v);
    let num: f64 = v.iter().zip(&x).map(|(a, b)| (a - m as f64 * b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = x.iter().map(|b| (m as f64 * b).powi(2)).sum::<f64>().sqrt();
    let rel = num / den;
    outcome(
        dense_err <= 1e-12 && dual_err <= 1e-12 && rel <= 1e-6,
        format!("dense {dense_err:.1e}, duality {dual_err:.1e}, WHT round trip at 2^20 {rel:.1e}"),
    )
}

fn toy_system() -> System {
    System::new(TreeCodeConfig::toy(), 0, 2048, 1).unwrap()
}

fn noiseless_single_user() -> Outcome {
    let start = Instant::now();
    let sys = toy_system();
    let dec = sys.decoder().unwrap();
    let dcfg = DecoderConfig::default();
    let recovered = trial_seeds(55, 100)
        .into_iter()
        .filter(|&(p, n)| simulate_with(&sys, &dec, 1, 20.0, p, n, &dcfg).unwrap().missed == 0)
        .count();
    let secs = start.elapsed().as_secs_f64();
    outcome(recovered == 100 && secs < 30.0, format!("{recovered}/100 recovered, {secs:.1} s"))
}

fn enhanced_not_worse() -> Outcome {
    let start = Instant::now();
    let sys = toy_system();
    let grid = [0.0, 1.0, 2.0, 3.0, 4.0];
    let mut worst = f64::NEG_INFINITY;
    let mut points = Vec::new();
    for ka in [4, 8] {
        for db in grid {
            let o = estimate_pupe(&sys, ka, db, &DecoderConfig::with_mode(Mode::Original), 500, 606).unwrap();
            let e = estimate_pupe(&sys, ka, db, &DecoderConfig::with_mode(Mode::Enhanced), 500, 606).unwrap();
            worst = worst.max(e.mean - o.mean);
            points.push(format!("Ka={ka} {db} dB {:.4}/{:.4}", o.mean, e.mean));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 0.01 && secs < 1800.0,
        format!("max(enhanced - original) = {worst:+.4} over {} points, {secs:.1} s [{}]", points.len(), points.join(", ")),
    )
}

fn full_scale() -> Outcome {
    let start = Instant::now();
    let sys = System::new(TreeCodeConfig::full16(), 0, 38400, 1).unwrap();
    let enhanced = DecoderConfig::with_mode(Mode::Enhanced);
    let original = DecoderConfig::with_mode(Mode::Original);
    let at = estimate_pupe(&sys, 25, 2.35, &enhanced, 200, 25).unwrap();
    let search = |dcfg: &DecoderConfig, low_db, high_db| {
        let spec = SearchSpec { low_db, high_db, ..Default::default() };
        min_ebn0_search(&sys, 25, dcfg, &spec, 25)
    };
    let (e, o) = match (search(&enhanced, 1.5, 3.5), search(&original, 2.5, 5.0)) {
        (Ok(e), Ok(o)) => (e.ebn0_db, o.ebn0_db),
        (e, o) => return outcome(false, format!("search failed: {:?} / {:?}", e.err(), o.err())),
    };
    let gap = o - e;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        at.mean <= 0.05 && gap >= 1.0 && (gap - 1.75).abs() <= 0.5,
        format!(
            "PUPE {:.4} ± {:.4} at 2.35 dB; required {e:.2} dB enhanced vs {o:.2} dB original, gap {gap:.2} dB; {secs:.0} s",
            at.mean, at.stderr
        ),
    )
}

fn deterministic_csv() -> Outcome {
    let run = || {
        let sys = toy_system();
        let dcfg = DecoderConfig::default();
        let spec = SearchSpec { low_db: -1.0, high_db: 6.0, trials_per_point: 40, ..Default::default() };
        let row = min_ebn0_search(&sys, 3, &dcfg, &spec, 8).unwrap();
        let est = estimate_pupe(&sys, 3, 2.0, &dcfg, 100, 8).unwrap();
        let fig = csv_string(&[Fig3Row::from_estimate(3, dcfg.mode, 2.0, &est, false)]);
        fig + &csv_string(&[SweepCsvRow::new(&row, false)])
    };
    let (a, b) = (run(), run());
    outcome(a == b, format!("{} bytes per run, identical {}", a.len(), a == b))
}

fn main() -> ExitCode {
    let release = std::env::var("CCS_AMP_RELEASE").is_ok_and(|v| v == "1");
    let criteria: Vec<(&str, Option<Check>)> = vec![
        ("1 tree priors match exhaustive enumeration", Some(tree_prior_oracle)),
        ("2 pme identities and monotonicity", Some(pme_identities)),
        ("3 AMP residual structure", Some(amp_structure)),
        ("4 sensing operator", Some(sensing)),
        ("5 noiseless single user end to end", Some(noiseless_single_user)),
        ("6 enhanced no worse than original", Some(enhanced_not_worse)),
        ("7 full-scale spot check", if release { Some(full_scale) } else { None }),
        ("8 byte-identical CSV", Some(deterministic_csv)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check {
            Some(f) => {
                let o = f();
                failed += usize::from(!o.pass);
                println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            }
            None => println!("SKIP criterion {name}: release gate, set CCS_AMP_RELEASE=1"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
