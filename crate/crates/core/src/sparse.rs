//! One-hot section mapping and the block-sparse vectors built from it.

use std::sync::Arc;

use crate::bits;
use crate::error::{Error, Result};
use crate::tree::{CodedMessage, TreeCodeConfig};

/// Section boundaries of a block-sparse vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionLayout {
    offsets: Vec<usize>,
    sizes: Vec<usize>,
}

impl SectionLayout {
    pub fn from_bits(lengths: &[u32]) -> Self {
        let sizes: Vec<usize> = lengths.iter().map(|&v| 1usize << v).collect();
        let offsets = sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect();
        SectionLayout { offsets, sizes }
    }

    pub fn for_config(config: &TreeCodeConfig) -> Self {
        Self::from_bits(config.lengths())
    }

    pub fn num_sections(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_len(&self) -> usize {
        self.offsets.last().map_or(0, |o| o + self.sizes.last().unwrap())
    }

    pub fn offset(&self, section: usize) -> usize {
        self.offsets[section]
    }

    pub fn size(&self, section: usize) -> usize {
        self.sizes[section]
    }

    pub fn range(&self, section: usize) -> std::ops::Range<usize> {
        self.offsets[section]..self.offsets[section] + self.sizes[section]
    }
}

/// A real vector split into sections. Holds single-user messages, their
/// superposition, AMP estimates and effective observations.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    layout: Arc<SectionLayout>,
    pub values: Vec<f64>,
}

impl SparseState {
    pub fn zeros(layout: Arc<SectionLayout>) -> Self {
        let len = layout.total_len();
        SparseState { layout, values: vec![0.0; len] }
    }

    pub fn from_values(layout: Arc<SectionLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(Error::LengthMismatch { expected: layout.total_len(), actual: values.len() });
        }
        Ok(SparseState { layout, values })
    }

    pub fn layout(&self) -> &Arc<SectionLayout> {
        &self.layout
    }

    pub fn section(&self, section: usize) -> &[f64] {
        &self.values[self.layout.range(section)]
    }

    pub fn section_mut(&mut self, section: usize) -> &mut [f64] {
        let r = self.layout.range(section);
        &mut self.values[r]
    }

    pub fn num_sections(&self) -> usize {
        self.layout.num_sections()
    }
}

/// One-hot vector of length `2^len` with the one at the block's integer value.
pub fn index_map(block: &[u8]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << block.len()];
    out[bits::to_value(block) as usize] = 1.0;
    out
}

/// Concatenates the one-hot images of every section.
pub fn assemble(message: &CodedMessage, layout: Arc<SectionLayout>) -> Result<SparseState> {
    if message.blocks.len() != layout.num_sections() {
        return Err(Error::LengthMismatch { expected: layout.num_sections(), actual: message.blocks.len() });
    }
    let mut state = SparseState::zeros(layout);
    for (s, &b) in message.blocks.iter().enumerate() {
        let sec = state.section_mut(s);
        let size = sec.len();
        let slot = sec
            .get_mut(b as usize)
            .ok_or(Error::LengthMismatch { expected: size, actual: b as usize + 1 })?;
        *slot = 1.0;
    }
    Ok(state)
}

/// Inverse of [`assemble`]. Fails unless every section has exactly one
/// nonzero entry equal to one.
pub fn disassemble(state: &SparseState) -> Result<CodedMessage> {
    let blocks = (0..state.num_sections())
        .map(|s| {
            let sec = state.section(s);
            let mut hot = sec.iter().enumerate().filter(|(_, &v)| v != 0.0);
            match (hot.next(), hot.next()) {
                (Some((k, 1.0)), None) => Ok(k as u32),
                _ => Err(Error::InvalidConfig(format!("section {s} is not one-hot"))),
            }
        })
        .collect::<Result<_>>()?;
    Ok(CodedMessage { blocks })
}

/// Entrywise sum of single-user messages.
pub fn superpose(messages: &[SparseState], layout: Arc<SectionLayout>) -> Result<SparseState> {
    let mut out = SparseState::zeros(layout);
    for m in messages {
        if m.values.len() != out.values.len() {
            return Err(Error::LengthMismatch { expected: out.values.len(), actual: m.values.len() });
        }
        out.values.iter_mut().zip(&m.values).for_each(|(a, b)| *a += b);
    }
    Ok(out)
}

/// The `k` largest entries of one section as `(index, value)`, largest
/// first. Ties go to the smaller index.
pub fn top_k_section(state: &SparseState, k: usize, section: usize) -> Vec<(usize, f64)> {
    top_k(state.section(section), k)
}

pub(crate) fn top_k(values: &[f64], k: usize) -> Vec<(usize, f64)> {
    let k = k.min(values.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &usize, b: &usize| {
        values[*b]
            .partial_cmp(&values[*a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    idx.into_iter().map(|i| (i, values[i])).collect()
}
