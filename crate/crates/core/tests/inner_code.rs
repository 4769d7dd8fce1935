use std::sync::Arc;

use ccs_amp::amp::{pme, residual_step, run_amp, AmpOptions, Uninformative};
use ccs_amp::sensing::{build_operator, build_power, fwht, SensingOperator};
use ccs_amp::sparse::{assemble, disassemble, superpose, SectionLayout, SparseState};
use ccs_amp::tree::{encode, sample_generators, CodedMessage, TreeCodeConfig};
use proptest::prelude::*;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn small_operator(seed: u64) -> SensingOperator {
    build_operator(24, 64, seed).unwrap()
}

proptest! {
    #[test]
    fn pme_is_monotone(q1 in 0.0f64..1.0, q2 in 0.0f64..1.0, r1 in -5.0f64..5.0, r2 in -5.0f64..5.0,
                       tau in 0.1f64..3.0, d in 0.1f64..4.0) {
        let (qa, qb) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        let (ra, rb) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(pme(qa, ra, tau, d) <= pme(qb, ra, tau, d));
        prop_assert!(pme(qa, ra, tau, d) <= pme(qa, rb, tau, d));
        let v = pme(qa, ra, tau, d);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn forward_and_adjoint_are_dual(seed in any::<u64>(), xs in prop::collection::vec(-3.0f64..3.0, 64),
                                    zs in prop::collection::vec(-3.0f64..3.0, 24)) {
        let op = small_operator(seed);
        let lhs = dot(&op.forward(&xs).unwrap(), &zs);
        let rhs = dot(&xs, &op.adjoint(&zs).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn superposition_commutes(a in prop::collection::vec(0u32..16, 3), b in prop::collection::vec(0u32..16, 3),
                              c in prop::collection::vec(0u32..16, 3)) {
        let lay = Arc::new(SectionLayout::from_bits(&[4, 4, 4]));
        let m: Vec<SparseState> = [a, b, c].into_iter()
            .map(|blocks| assemble(&CodedMessage { blocks }, lay.clone()).unwrap())
            .collect();
        let abc = superpose(&m, lay.clone()).unwrap();
        let cab = superpose(&[m[2].clone(), m[0].clone(), m[1].clone()], lay.clone()).unwrap();
        prop_assert_eq!(&abc, &cab);
        for s in 0..3 {
            prop_assert_eq!(abc.section(s).iter().sum::<f64>(), 3.0);
        }
    }

    #[test]
    fn assembled_messages_round_trip(bits in prop::collection::vec(0u8..2, 16), seed in any::<u64>()) {
        let cfg = TreeCodeConfig::toy();
        let gens = sample_generators(&cfg, seed);
        let msg = encode(&bits, &cfg, &gens).unwrap();
        let st = assemble(&msg, Arc::new(SectionLayout::for_config(&cfg))).unwrap();
        prop_assert_eq!(disassemble(&st).unwrap(), msg);
    }

    #[test]
    fn transform_is_its_own_inverse_up_to_scale(xs in prop::collection::vec(-10.0f64..10.0, 256)) {
        let mut v = xs.clone();
        fwht(&mut v);
        fwht(&mut v);
        for (a, b) in v.iter().zip(&xs) {
            prop_assert!((a / 256.0 - b).abs() < 1e-12);
        }
    }
}

#[test]
fn dense_matrix_agrees_with_fast_path() {
    let op = build_operator(8, 16, 5).unwrap();
    let a = op.dense();
    let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
    let fast = op.forward(&x).unwrap();
    for (row, f) in a.iter().zip(&fast) {
        assert!((dot(row, &x) - f).abs() < 1e-12);
    }
    for col in 0..16 {
        let norm: f64 = a.iter().map(|r| r[col] * r[col]).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}

#[test]
fn first_residual_is_the_observation() {
    let cfg = TreeCodeConfig::toy();
    let op = ccs_amp::sensing::operator_for(512, cfg.sparse_len(), 3).unwrap();
    let power = build_power(&cfg, 512, 0.5, 2);
    let lay = Arc::new(SectionLayout::for_config(&cfg));
    let y: Vec<f64> = (0..512).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
    let z = residual_step(&y, &op, &power, &SparseState::zeros(lay), None, 0).unwrap();
    assert_eq!(z, y);
}

#[test]
fn noiseless_single_user_amp_locks_on() {
    let cfg = TreeCodeConfig::toy();
    let gens = sample_generators(&cfg, 1);
    let n = 2048;
    let op = ccs_amp::sensing::operator_for(n, cfg.sparse_len(), 2).unwrap();
    let power = build_power(&cfg, n, 0.1, 1);
    let lay = Arc::new(SectionLayout::for_config(&cfg));
    let msg = encode(&[1, 1, 0, 0, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 1, 1], &cfg, &gens).unwrap();
    let s = assemble(&msg, lay.clone()).unwrap();
    let y = op.forward(&power.apply(&s)).unwrap();
    let mut prior = Uninformative::new(&lay, 1);
    let run = run_amp(&y, &op, &power, lay, AmpOptions::new(10), &mut prior).unwrap();
    for sec in 0..4 {
        let hot = msg.blocks[sec] as usize;
        let r = run.effective.section(sec);
        assert!(r.iter().enumerate().all(|(k, &v)| k == hot || v < r[hot]));
    }
    assert!(run.trace.windows(2).all(|w| w[1].tau <= w[0].tau + 1e-9));
}
