use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported section length in bits. A section of `v` bits occupies
/// `2^v` entries of the sparse vector.
pub const MAX_SECTION_BITS: u32 = 24;

/// Layout of the outer tree code.
///
/// Sections are indexed from zero. Every section holds either information
/// bits or parity bits. Each parity section is the modular sum of random
/// binary projections of the information sections it is attached to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeLayout", into = "TreeLayout")]
pub struct TreeCodeConfig {
    lengths: Vec<u32>,
    info_sections: Vec<usize>,
    parity_sections: Vec<usize>,
    parity_graph: BTreeMap<usize, Vec<usize>>,
    info_bits: usize,
    parity_bits: usize,
}

/// Serialized form of [`TreeCodeConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeLayout {
    pub lengths: Vec<u32>,
    pub info_sections: Vec<usize>,
    pub parity_graph: BTreeMap<usize, Vec<usize>>,
}

impl TryFrom<TreeLayout> for TreeCodeConfig {
    type Error = Error;

    fn try_from(layout: TreeLayout) -> Result<Self> {
        let w = layout
            .info_sections
            .iter()
            .map(|&j| layout.lengths.get(j).copied().unwrap_or(0) as usize)
            .sum();
        build_config(w, &layout.lengths, &layout.info_sections, &layout.parity_graph)
    }
}

impl From<TreeCodeConfig> for TreeLayout {
    fn from(cfg: TreeCodeConfig) -> Self {
        TreeLayout {
            lengths: cfg.lengths,
            info_sections: cfg.info_sections,
            parity_graph: cfg.parity_graph,
        }
    }
}

/// Validates a tree-code layout.
///
/// `info_sections` fixes the order in which payload bits are spread over the
/// information sections. `parity_graph` maps each parity section to the
/// information sections it constrains; every section that is not an
/// information section must appear as a key.
pub fn build_config(
    w: usize,
    lengths: &[u32],
    info_sections: &[usize],
    parity_graph: &BTreeMap<usize, Vec<usize>>,
) -> Result<TreeCodeConfig> {
    let l = lengths.len();
    if l == 0 {
        return Err(Error::InvalidConfig("no sections".into()));
    }
    if let Some(bad) = lengths.iter().find(|&&v| v == 0 || v > MAX_SECTION_BITS) {
        return Err(Error::InvalidConfig(format!(
            "section length {bad} outside 1..={MAX_SECTION_BITS}"
        )));
    }

    let info_set: BTreeSet<usize> = info_sections.iter().copied().collect();
    if info_set.len() != info_sections.len() {
        return Err(Error::InvalidConfig("duplicate information section".into()));
    }
    if let Some(&j) = info_set.iter().find(|&&j| j >= l) {
        return Err(Error::InvalidConfig(format!("information section {j} out of range")));
    }
    let info_bits: usize = info_sections.iter().map(|&j| lengths[j] as usize).sum();
    if info_bits != w {
        return Err(Error::InconsistentLengths { expected: w, actual: info_bits });
    }

    let parity_sections: Vec<usize> = (0..l).filter(|i| !info_set.contains(i)).collect();
    for (&parity, sources) in parity_graph {
        if parity >= l || info_set.contains(&parity) {
            return Err(Error::InvalidConfig(format!(
                "graph key {parity} is not a parity section"
            )));
        }
        if sources.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "parity section {parity} has no information sources"
            )));
        }
        for &source in sources {
            if !info_set.contains(&source) {
                return Err(Error::DanglingEdge { parity, from: source });
            }
        }
        if sources.iter().collect::<BTreeSet<_>>().len() != sources.len() {
            return Err(Error::InvalidConfig(format!(
                "parity section {parity} lists a source twice"
            )));
        }
    }
    if let Some(p) = parity_sections.iter().find(|p| !parity_graph.contains_key(p)) {
        return Err(Error::InvalidConfig(format!(
            "parity section {p} has no neighbourhood in the graph"
        )));
    }

    let parity_bits = parity_sections.iter().map(|&p| lengths[p] as usize).sum();
    let parity_graph = parity_graph
        .iter()
        .map(|(&p, s)| {
            let mut s = s.clone();
            s.sort_unstable();
            (p, s)
        })
        .collect();

    Ok(TreeCodeConfig {
        lengths: lengths.to_vec(),
        info_sections: info_sections.to_vec(),
        parity_sections,
        parity_graph,
        info_bits,
        parity_bits,
    })
}

fn graph(edges: &[(usize, &[usize])]) -> BTreeMap<usize, Vec<usize>> {
    edges.iter().map(|&(p, s)| (p, s.to_vec())).collect()
}

impl TreeCodeConfig {
    /// Sixteen 16-bit sections: eight information sections bound by eight
    /// parity sections. Pairs (0,1), (3,4), (6,7), (9,10) feed parities
    /// 2, 5, 8, 11; the cross parities 12..15 tie the pairs together.
    pub fn full16() -> Self {
        let g = graph(&[
            (2, &[0, 1]),
            (5, &[3, 4]),
            (8, &[6, 7]),
            (11, &[9, 10]),
            (12, &[0, 6]),
            (13, &[3, 9]),
            (14, &[1, 4, 10]),
            (15, &[7, 10]),
        ]);
        build_config(128, &[16; 16], &[0, 1, 3, 4, 6, 7, 9, 10], &g).expect("valid preset")
    }

    /// [`full16`](Self::full16) with two extra parity sections for large
    /// user counts. The placement of the extra sections is our own choice.
    pub fn full18() -> Self {
        let mut g = Self::full16().parity_graph;
        g.insert(16, vec![0, 3, 9]);
        g.insert(17, vec![1, 6, 7]);
        build_config(128, &[16; 18], &[0, 1, 3, 4, 6, 7, 9, 10], &g).expect("valid preset")
    }

    /// Four 8-bit sections: two information sections and two parity
    /// sections over both of them. Small enough for desk-scale Monte Carlo.
    pub fn toy() -> Self {
        let g = graph(&[(2, &[0, 1]), (3, &[0, 1])]);
        build_config(16, &[8; 4], &[0, 1], &g).expect("valid preset")
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full16" => Some(Self::full16()),
            "full18" => Some(Self::full18()),
            "toy" => Some(Self::toy()),
            _ => None,
        }
    }

    pub fn num_sections(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[u32] {
        &self.lengths
    }

    pub fn section_bits(&self, section: usize) -> u32 {
        self.lengths[section]
    }

    pub fn section_size(&self, section: usize) -> usize {
        1usize << self.lengths[section]
    }

    pub fn info_sections(&self) -> &[usize] {
        &self.info_sections
    }

    /// Parity sections in ascending order, which is also the stitching order.
    pub fn parity_sections(&self) -> &[usize] {
        &self.parity_sections
    }

    pub fn parity_graph(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.parity_graph
    }

    /// Information sections constrained by parity section `parity`.
    pub fn sources(&self, parity: usize) -> &[usize] {
        &self.parity_graph[&parity]
    }

    pub fn is_info(&self, section: usize) -> bool {
        self.info_sections.contains(&section)
    }

    /// Payload length `w`.
    pub fn info_bits(&self) -> usize {
        self.info_bits
    }

    pub fn parity_bits(&self) -> usize {
        self.parity_bits
    }

    /// Graph edges `(source, parity)` in a fixed order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parity_graph
            .iter()
            .flat_map(|(&p, s)| s.iter().map(move |&j| (j, p)))
    }

    /// Parity sections attached to information section `info`.
    pub fn parities_of(&self, info: usize) -> Vec<usize> {
        self.parity_graph
            .iter()
            .filter(|(_, s)| s.contains(&info))
            .map(|(&p, _)| p)
            .collect()
    }

    /// Total length of the sparse vector, `Σ 2^{v_ℓ}`.
    pub fn sparse_len(&self) -> usize {
        (0..self.num_sections()).map(|s| self.section_size(s)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_preset_dimensions() {
        let cfg = TreeCodeConfig::full16();
        assert_eq!(cfg.num_sections(), 16);
        assert_eq!(cfg.info_bits(), 128);
        assert_eq!(cfg.parity_bits(), 128);
        assert_eq!(cfg.parity_sections(), &[2, 5, 8, 11, 12, 13, 14, 15]);
        assert_eq!(cfg.sources(14), &[1, 4, 10]);
        assert_eq!(cfg.edges().count(), 17);
        assert_eq!(cfg.sparse_len(), 1 << 20);
    }

    #[test]
    fn extended_preset() {
        let cfg = TreeCodeConfig::full18();
        assert_eq!(cfg.num_sections(), 18);
        assert_eq!(cfg.parity_bits(), 160);
        assert_eq!(cfg.sources(17), &[1, 6, 7]);
    }

    #[test]
    fn minimal_layout() {
        let g = graph(&[(2, &[0, 1])]);
        let cfg = build_config(4, &[2, 2, 2], &[0, 1], &g).unwrap();
        assert_eq!(cfg.num_sections(), 3);
        assert_eq!(cfg.parity_bits(), 2);
    }

    #[test]
    fn inconsistent_lengths() {
        let g = graph(&[(1, &[0]), (2, &[0])]);
        assert_eq!(
            build_config(4, &[2, 2, 2], &[0], &g),
            Err(Error::InconsistentLengths { expected: 4, actual: 2 })
        );
    }

    #[test]
    fn dangling_edge() {
        let g = graph(&[(2, &[0, 3]), (3, &[0])]);
        assert_eq!(
            build_config(4, &[2, 2, 2, 2], &[0, 1], &g),
            Err(Error::DanglingEdge { parity: 2, from: 3 })
        );
    }

    #[test]
    fn missing_neighbourhood() {
        let g = graph(&[(2, &[0, 1])]);
        assert!(matches!(
            build_config(4, &[2, 2, 2, 2], &[0, 1], &g),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn json_round_trip_validates() {
        let cfg = TreeCodeConfig::toy();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: TreeCodeConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
        let bad = r#"{"lengths":[2,2,2],"info_sections":[0,1],"parity_graph":{"2":[0,5]}}"#;
        assert!(serde_json::from_str::<TreeCodeConfig>(bad).is_err());
    }
}
