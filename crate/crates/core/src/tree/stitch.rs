use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::code::GeneratorSet;
use super::config::TreeCodeConfig;
use crate::error::{Error, Result};

/// Weighted candidate assignments for a group of sections.
///
/// `members` names the sections covered, and each entry holds one value per
/// member in the same order. Entries are kept sorted by descending weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathList {
    pub members: Vec<usize>,
    pub entries: Vec<Path>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub values: Vec<u32>,
    pub weight: f64,
}

fn by_weight(a: &Path, b: &Path) -> Ordering {
    b.weight
        .partial_cmp(&a.weight)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.values.cmp(&b.values))
}

impl PathList {
    /// Single-section list from `(value, weight)` candidates.
    pub fn for_section(section: usize, candidates: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let entries = candidates
            .into_iter()
            .map(|(v, w)| Path { values: vec![v], weight: w })
            .collect();
        let mut list = PathList { members: vec![section], entries };
        list.sort();
        list
    }

    pub fn sort(&mut self) {
        self.entries.sort_by(by_weight);
    }

    pub fn truncate(&mut self, capacity: usize) {
        self.entries.truncate(capacity);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Value assigned to `section` by entry `entry`, if the section is covered.
    pub fn value(&self, entry: usize, section: usize) -> Option<u32> {
        let pos = self.members.iter().position(|&m| m == section)?;
        Some(self.entries[entry].values[pos])
    }
}

/// Merges `clusters` into one list by cartesian product, keeping only the
/// combinations that `accept` maps to `Some(extra_weight)`.
fn merge(
    clusters: &[PathList],
    num_sections: usize,
    capacity: usize,
    mut accept: impl FnMut(&[u32]) -> Option<f64>,
) -> PathList {
    let members: Vec<usize> = clusters.iter().flat_map(|c| c.members.iter().copied()).collect();
    let mut scratch = vec![0u32; num_sections];
    let mut entries = Vec::new();
    let mut idx = vec![0usize; clusters.len()];
    if clusters.iter().any(|c| c.is_empty()) {
        return PathList { members, entries };
    }
    loop {
        let mut weight = 1.0;
        for (c, &i) in clusters.iter().zip(&idx) {
            let e = &c.entries[i];
            weight *= e.weight;
            for (&m, &v) in c.members.iter().zip(&e.values) {
                scratch[m] = v;
            }
        }
        if let Some(extra) = accept(&scratch) {
            let values = members.iter().map(|&m| scratch[m]).collect();
            entries.push(Path { values, weight: weight * extra });
        }
        // odometer
        let mut k = clusters.len();
        loop {
            if k == 0 {
                let mut out = PathList { members, entries };
                out.sort();
                out.truncate(capacity);
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < clusters[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// List decoding of the outer code.
///
/// `lists[s]` holds the candidates for section `s`. Each list is cut to
/// `survivor_budget`. Information sections start as singleton groups; parity
/// sections are visited in ascending order, and each one joins the groups
/// holding its sources, keeping only combinations whose implied parity value
/// is among that section's candidates. Parity values are not carried into
/// the joined group. Groups left disconnected at the end are joined
/// without a check. The result covers the information sections in
/// ascending order.
pub fn prune_and_stitch(
    lists: &[PathList],
    config: &TreeCodeConfig,
    generators: &GeneratorSet,
    survivor_budget: usize,
) -> Result<PathList> {
    if survivor_budget == 0 {
        return Err(Error::EmptyResult);
    }
    if lists.len() != config.num_sections() {
        return Err(Error::LengthMismatch { expected: config.num_sections(), actual: lists.len() });
    }
    let l = config.num_sections();
    let mut pruned: Vec<PathList> = lists.to_vec();
    for (s, list) in pruned.iter_mut().enumerate() {
        if list.members != [s] {
            return Err(Error::InvalidConfig(format!("list {s} does not describe section {s}")));
        }
        list.sort();
        list.truncate(survivor_budget);
        if list.is_empty() {
            return Err(Error::EmptyResult);
        }
    }

    let mut groups: Vec<PathList> = config.info_sections().iter().map(|&j| pruned[j].clone()).collect();

    for &p in config.parity_sections() {
        let sources = config.sources(p);
        let (involved, rest): (Vec<PathList>, Vec<PathList>) = groups
            .into_iter()
            .partition(|g| g.members.iter().any(|m| sources.contains(m)));
        let candidates: HashMap<u32, f64> =
            pruned[p].entries.iter().map(|e| (e.values[0], e.weight)).collect();
        let merged = merge(&involved, l, survivor_budget, |values| {
            let implied = super::code::parity_value(values, p, config, generators);
            candidates.get(&implied).copied()
        });
        if merged.is_empty() {
            return Err(Error::EmptyResult);
        }
        groups = rest;
        groups.push(merged);
    }

    let mut out = if groups.len() == 1 {
        groups.pop().unwrap()
    } else {
        merge(&groups, l, survivor_budget, |_| Some(1.0))
    };

    // reorder columns to ascending section index
    let mut order: Vec<usize> = (0..out.members.len()).collect();
    order.sort_by_key(|&i| out.members[i]);
    out.members = order.iter().map(|&i| out.members[i]).collect();
    for e in &mut out.entries {
        e.values = order.iter().map(|&i| e.values[i]).collect();
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::code::{encode, sample_generators, BinaryMatrix};
    use crate::tree::config::build_config;

    fn tiny() -> (TreeCodeConfig, GeneratorSet) {
        let g = [(2usize, vec![0usize, 1])].into_iter().collect();
        let cfg = build_config(4, &[2, 2, 2], &[0, 1], &g).unwrap();
        let m = cfg
            .edges()
            .map(|(j, p)| ((j, p), BinaryMatrix::identity(2)))
            .collect();
        let gens = GeneratorSet::from_matrices(&cfg, m).unwrap();
        (cfg, gens)
    }

    #[test]
    fn single_codeword_is_recovered() {
        let cfg = TreeCodeConfig::full16();
        let gens = sample_generators(&cfg, 9);
        let payload: Vec<u8> = (0..128).map(|i| ((i * 13) % 3 % 2) as u8).collect();
        let msg = encode(&payload, &cfg, &gens).unwrap();
        let lists: Vec<_> = msg
            .blocks
            .iter()
            .enumerate()
            .map(|(s, &v)| PathList::for_section(s, [(v, 1.0)]))
            .collect();
        let out = prune_and_stitch(&lists, &cfg, &gens, 64).unwrap();
        assert_eq!(out.members, cfg.info_sections());
        assert_eq!(out.len(), 1);
        assert_eq!(out.entries[0].weight, 1.0);
        for (k, &j) in out.members.iter().enumerate() {
            assert_eq!(out.entries[0].values[k], msg.blocks[j]);
        }
    }

    #[test]
    fn only_the_consistent_pair_survives() {
        let (cfg, gens) = tiny();
        // 1 + 2 = 3 is the only pair summing to 3 among {1,0} x {2,1}... 0+2=2, 1+1=2, 0+1=1
        let lists = vec![
            PathList::for_section(0, [(1, 0.6), (0, 0.4)]),
            PathList::for_section(1, [(2, 0.7), (1, 0.3)]),
            PathList::for_section(2, [(3, 1.0)]),
        ];
        let out = prune_and_stitch(&lists, &cfg, &gens, 8).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out.entries[0].values, vec![1, 2]);
        assert!((out.entries[0].weight - 0.42).abs() < 1e-15);
    }

    #[test]
    fn zero_budget_is_empty() {
        let (cfg, gens) = tiny();
        let lists: Vec<_> = (0..3).map(|s| PathList::for_section(s, [(0, 1.0)])).collect();
        assert_eq!(prune_and_stitch(&lists, &cfg, &gens, 0), Err(Error::EmptyResult));
    }

    #[test]
    fn inconsistent_lists_are_empty() {
        let (cfg, gens) = tiny();
        let lists = vec![
            PathList::for_section(0, [(1, 1.0)]),
            PathList::for_section(1, [(1, 1.0)]),
            PathList::for_section(2, [(3, 1.0)]),
        ];
        assert_eq!(prune_and_stitch(&lists, &cfg, &gens, 4), Err(Error::EmptyResult));
    }

    #[test]
    fn budget_prunes_before_joining() {
        let (cfg, gens) = tiny();
        // the consistent value for section 0 is ranked second and cut by budget 1
        let lists = vec![
            PathList::for_section(0, [(0, 0.9), (1, 0.1)]),
            PathList::for_section(1, [(2, 1.0)]),
            PathList::for_section(2, [(3, 1.0)]),
        ];
        assert_eq!(prune_and_stitch(&lists, &cfg, &gens, 1), Err(Error::EmptyResult));
        assert_eq!(prune_and_stitch(&lists, &cfg, &gens, 2).unwrap().entries[0].values, vec![1, 2]);
    }

    #[test]
    fn two_messages_survive_together() {
        let cfg = TreeCodeConfig::toy();
        let gens = sample_generators(&cfg, 4);
        let a = encode(&[1, 0, 1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 0, 1, 0, 1], &cfg, &gens).unwrap();
        let b = encode(&[0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 0], &cfg, &gens).unwrap();
        let lists: Vec<_> = (0..4)
            .map(|s| PathList::for_section(s, [(a.blocks[s], 0.9), (b.blocks[s], 0.8)]))
            .collect();
        let out = prune_and_stitch(&lists, &cfg, &gens, 16).unwrap();
        let found: Vec<_> = out.entries.iter().map(|e| e.values.clone()).collect();
        assert!(found.contains(&vec![a.blocks[0], a.blocks[1]]));
        assert!(found.contains(&vec![b.blocks[0], b.blocks[1]]));
    }
}
