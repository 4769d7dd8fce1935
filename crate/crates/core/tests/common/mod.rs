#![allow(dead_code)]

use std::collections::BTreeMap;

use ccs_amp::tree::{
    build_config, build_partition_table, sample_generators, GeneratorSet, PartitionTable, SectionBeliefs,
    TreeCodeConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One parity section over `sources.len()` information sections.
pub struct Star {
    pub config: TreeCodeConfig,
    pub generators: GeneratorSet,
    pub tables: PartitionTable,
    pub parity: usize,
}

pub fn star(source_bits: &[u32], parity_bits: u32, seed: u64) -> Star {
    let k = source_bits.len();
    let mut lengths = source_bits.to_vec();
    lengths.push(parity_bits);
    let info: Vec<usize> = (0..k).collect();
    let graph = BTreeMap::from([(k, info.clone())]);
    let w = source_bits.iter().map(|&v| v as usize).sum();
    let config = build_config(w, &lengths, &info, &graph).unwrap();
    let generators = sample_generators(&config, seed);
    let tables = build_partition_table(&config, &generators);
    Star { config, generators, tables, parity: k }
}

pub fn random_beliefs(section: usize, len: usize, rng: &mut ChaCha8Rng) -> SectionBeliefs {
    let w: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = w.iter().sum();
    SectionBeliefs::new(section, w.into_iter().map(|x| x / total).collect())
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Visits every tuple of values for sections of the given sizes.
pub fn for_each_tuple(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; sizes.len()];
    loop {
        f(&idx);
        let mut i = 0;
        loop {
            if i == sizes.len() {
                return;
            }
            idx[i] += 1;
            if idx[i] < sizes[i] {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// Exhaustive prior on the parity section: the total joint weight of all
/// source tuples whose implied parity equals each value.
pub fn brute_parity_prior(s: &Star, beliefs: &[SectionBeliefs]) -> Vec<f64> {
    let sources = s.config.sources(s.parity).to_vec();
    let sizes: Vec<usize> = sources.iter().map(|&j| s.config.section_size(j)).collect();
    let modulus = s.config.section_size(s.parity);
    let mut out = vec![0.0; modulus];
    for_each_tuple(&sizes, |vals| {
        let mut g = 0usize;
        let mut w = 1.0;
        for (i, &j) in sources.iter().enumerate() {
            g += s.generators.get(j, s.parity).apply(vals[i] as u32) as usize;
            w *= beliefs[j].weights[vals[i]];
        }
        out[g % modulus] += w;
    });
    let total: f64 = out.iter().sum();
    out.iter().map(|x| x / total).collect()
}

/// Exhaustive prior on source `target`: for each of its values, the total
/// weight of the other sources and the parity value that complete a
/// consistent path.
pub fn brute_info_prior(s: &Star, beliefs: &[SectionBeliefs], target: usize) -> Vec<f64> {
    let others: Vec<usize> = s.config.sources(s.parity).iter().copied().filter(|&j| j != target).collect();
    let sizes: Vec<usize> = others.iter().map(|&j| s.config.section_size(j)).collect();
    let modulus = s.config.section_size(s.parity);
    let g_target = s.generators.get(target, s.parity);
    let mut out = vec![0.0; s.config.section_size(target)];
    for (x, slot) in out.iter_mut().enumerate() {
        let base = g_target.apply(x as u32) as usize;
        for_each_tuple(&sizes, |vals| {
            let mut g = base;
            let mut w = 1.0;
            for (i, &j) in others.iter().enumerate() {
                g += s.generators.get(j, s.parity).apply(vals[i] as u32) as usize;
                w *= beliefs[j].weights[vals[i]];
            }
            *slot += w * beliefs[s.parity].weights[g % modulus];
        });
    }
    let total: f64 = out.iter().sum();
    out.iter().map(|x| x / total).collect()
}

/// Largest violation of `|a − b| ≤ rel·|b| + abs·max|b|`, as a multiple of
/// the allowance. At most one means the vectors agree.
pub fn tolerance_ratio(got: &[f64], want: &[f64], rel: f64, abs: f64) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    got.iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs() / (rel * b.abs() + abs * scale))
        .fold(0.0, f64::max)
}
