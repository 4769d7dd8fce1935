use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TreeCodeConfig;
use crate::bits;
use crate::error::{Error, Result};

/// Binary `rows × cols` matrix over GF(2). Row `r` is stored as an integer
/// whose MSB-first bit pattern is the row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryMatrix {
    rows: u32,
    cols: u32,
    row_masks: Vec<u32>,
}

impl BinaryMatrix {
    pub fn from_rows(cols: u32, row_masks: Vec<u32>) -> Self {
        let mask = if cols == 32 { u32::MAX } else { (1u32 << cols) - 1 };
        BinaryMatrix {
            rows: row_masks.len() as u32,
            cols,
            row_masks: row_masks.into_iter().map(|r| r & mask).collect(),
        }
    }

    pub fn identity(size: u32) -> Self {
        Self::from_rows(size, (0..size).map(|r| 1u32 << (size - 1 - r)).collect())
    }

    pub fn zeros(rows: u32, cols: u32) -> Self {
        Self::from_rows(cols, vec![0; rows as usize])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows as usize, self.cols as usize)
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        ((self.row_masks[row] >> (self.cols as usize - 1 - col)) & 1) as u8
    }

    /// Row-vector product `value · G` over GF(2), where `value` holds
    /// `rows` bits MSB-first. The result is read MSB-first as well.
    pub fn apply(&self, value: u32) -> u32 {
        let mut acc = 0;
        for (r, &mask) in self.row_masks.iter().enumerate() {
            if (value >> (self.rows as usize - 1 - r)) & 1 == 1 {
                acc ^= mask;
            }
        }
        acc
    }

    /// `apply` evaluated on every input `0..2^rows`.
    pub fn apply_all(&self) -> Vec<u32> {
        let size = 1usize << self.rows;
        let mut out = vec![0u32; size];
        for k in 1..size {
            let low = k.trailing_zeros() as usize;
            let row = self.rows as usize - 1 - low;
            out[k] = out[k & (k - 1)] ^ self.row_masks[row];
        }
        out
    }
}

/// One random generator matrix per parity-graph edge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSet {
    seed: u64,
    matrices: BTreeMap<(usize, usize), BinaryMatrix>,
}

/// Draws every `G_{j,ℓ}` with i.i.d. fair-coin entries from `seed`.
pub fn sample_generators(config: &TreeCodeConfig, seed: u64) -> GeneratorSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrices = config
        .edges()
        .map(|(j, p)| {
            let (rows, cols) = (config.section_bits(j), config.section_bits(p));
            let row_masks = (0..rows)
                .map(|_| (0..cols).fold(0u32, |acc, _| (acc << 1) | u32::from(rng.random::<bool>())))
                .collect();
            ((j, p), BinaryMatrix::from_rows(cols, row_masks))
        })
        .collect();
    GeneratorSet { seed, matrices }
}

impl GeneratorSet {
    /// Builds a set from explicit matrices. Shapes are checked against `config`.
    pub fn from_matrices(
        config: &TreeCodeConfig,
        matrices: BTreeMap<(usize, usize), BinaryMatrix>,
    ) -> Result<Self> {
        for (j, p) in config.edges() {
            let g = matrices
                .get(&(j, p))
                .ok_or_else(|| Error::InvalidConfig(format!("missing generator for edge ({j},{p})")))?;
            let want = (config.section_bits(j) as usize, config.section_bits(p) as usize);
            if g.shape() != want {
                return Err(Error::InvalidConfig(format!(
                    "generator ({j},{p}) has shape {:?}, expected {want:?}",
                    g.shape()
                )));
            }
        }
        if matrices.len() != config.edges().count() {
            return Err(Error::InvalidConfig("generator for an edge not in the graph".into()));
        }
        Ok(GeneratorSet { seed: 0, matrices })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, source: usize, parity: usize) -> &BinaryMatrix {
        &self.matrices[&(source, parity)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &BinaryMatrix)> {
        self.matrices.iter()
    }
}

/// A payload after tree encoding: one integer per section, each read as an
/// MSB-first bit pattern of that section's length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CodedMessage {
    pub blocks: Vec<u32>,
}

impl CodedMessage {
    pub fn block_bits(&self, config: &TreeCodeConfig, section: usize) -> Vec<u8> {
        bits::from_value(u64::from(self.blocks[section]), config.section_bits(section) as usize)
    }

    /// Payload bits recovered from the information sections.
    pub fn payload(&self, config: &TreeCodeConfig) -> Vec<u8> {
        config
            .info_sections()
            .iter()
            .flat_map(|&j| self.block_bits(config, j))
            .collect()
    }
}

/// Value of parity section `parity` implied by the information values in
/// `blocks`: the modular sum of the GF(2) projections.
pub fn parity_value(
    blocks: &[u32],
    parity: usize,
    config: &TreeCodeConfig,
    generators: &GeneratorSet,
) -> u32 {
    let modulus_mask = (config.section_size(parity) - 1) as u32;
    config
        .sources(parity)
        .iter()
        .fold(0u32, |acc, &j| acc.wrapping_add(generators.get(j, parity).apply(blocks[j])))
        & modulus_mask
}

/// Splits `payload` over the information sections and fills in every parity
/// section.
pub fn encode(
    payload: &[u8],
    config: &TreeCodeConfig,
    generators: &GeneratorSet,
) -> Result<CodedMessage> {
    if payload.len() != config.info_bits() {
        return Err(Error::LengthMismatch { expected: config.info_bits(), actual: payload.len() });
    }
    let mut blocks = vec![0u32; config.num_sections()];
    let mut offset = 0;
    for &j in config.info_sections() {
        let len = config.section_bits(j) as usize;
        blocks[j] = bits::to_value(&payload[offset..offset + len]) as u32;
        offset += len;
    }
    for &p in config.parity_sections() {
        blocks[p] = parity_value(&blocks, p, config, generators);
    }
    Ok(CodedMessage { blocks })
}

/// Builds a coded message from per-section bit-vectors.
pub fn message_from_bits(sections: &[Vec<u8>], config: &TreeCodeConfig) -> Result<CodedMessage> {
    if sections.len() != config.num_sections() {
        return Err(Error::LengthMismatch { expected: config.num_sections(), actual: sections.len() });
    }
    let blocks = sections
        .iter()
        .enumerate()
        .map(|(s, b)| {
            let want = config.section_bits(s) as usize;
            if b.len() != want {
                return Err(Error::LengthMismatch { expected: want, actual: b.len() });
            }
            Ok(bits::to_value(b) as u32)
        })
        .collect::<Result<_>>()?;
    Ok(CodedMessage { blocks })
}

/// True iff every parity section matches the value implied by the
/// information sections.
pub fn parity_consistent(
    message: &CodedMessage,
    config: &TreeCodeConfig,
    generators: &GeneratorSet,
) -> Result<bool> {
    if message.blocks.len() != config.num_sections() {
        return Err(Error::LengthMismatch {
            expected: config.num_sections(),
            actual: message.blocks.len(),
        });
    }
    for (s, &b) in message.blocks.iter().enumerate() {
        if u64::from(b) >= 1u64 << config.section_bits(s) {
            return Err(Error::LengthMismatch {
                expected: config.section_bits(s) as usize,
                actual: 32 - b.leading_zeros() as usize,
            });
        }
    }
    Ok(config
        .parity_sections()
        .iter()
        .all(|&p| message.blocks[p] == parity_value(&message.blocks, p, config, generators)))
}

/// For every edge `(j, ℓ)`, the residue in `Z/2^{v_ℓ}` of each value of
/// section `j`. The residue classes partition the values of section `j`.
#[derive(Debug, Clone)]
pub struct PartitionTable {
    entries: BTreeMap<(usize, usize), EdgePartition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePartition {
    residues: Vec<u32>,
    modulus: usize,
}

impl EdgePartition {
    pub fn from_generator(g: &BinaryMatrix) -> Self {
        let (_, cols) = g.shape();
        EdgePartition { residues: g.apply_all(), modulus: 1 << cols }
    }

    /// Residue of each source value, indexed by value.
    pub fn residues(&self) -> &[u32] {
        &self.residues
    }

    pub fn source_size(&self) -> usize {
        self.residues.len()
    }

    pub fn modulus(&self) -> usize {
        self.modulus
    }

    /// 0/1 indicator over source values of residue class `g`.
    pub fn indicator(&self, g: u32) -> Vec<u8> {
        self.residues.iter().map(|&r| u8::from(r == g)).collect()
    }
}

pub fn build_partition_table(config: &TreeCodeConfig, generators: &GeneratorSet) -> PartitionTable {
    let entries = config
        .edges()
        .map(|(j, p)| ((j, p), EdgePartition::from_generator(generators.get(j, p))))
        .collect();
    PartitionTable { entries }
}

impl PartitionTable {
    pub fn get(&self, source: usize, parity: usize) -> &EdgePartition {
        &self.entries[&(source, parity)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &EdgePartition)> {
        self.entries.iter()
    }
}
