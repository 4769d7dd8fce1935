//! Partial Hadamard sensing matrix and the per-section power allocation.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{SectionLayout, SparseState};
use crate::tree::TreeCodeConfig;

/// In-place unnormalized Walsh–Hadamard transform in natural (Sylvester)
/// order. Applying it twice multiplies by the length.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "length must be a power of two");
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Entry `(row, col)` of the Sylvester Hadamard matrix: `(-1)^{popcount(row & col)}`.
pub fn hadamard_entry(row: usize, col: usize) -> f64 {
    if (row & col).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `n` rows of an order-`N` Hadamard matrix restricted to `m` of its columns,
/// scaled by `1/√n` so every column has unit norm.
///
/// When `N == m` all columns are used in natural order. Larger orders are
/// used when `n` does not fit below `m`; the `m` columns are then drawn at
/// random from the non-constant ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingOperator {
    n: usize,
    m: usize,
    order: usize,
    rows: Vec<usize>,
    columns: Option<Vec<usize>>,
    scale: f64,
    seed: u64,
}

/// Draws `n` distinct non-DC rows of the order-`m` Hadamard matrix.
pub fn build_operator(n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    build_operator_with(n, m, seed, true)
}

/// As [`build_operator`]; `exclude_dc_row = false` lets the all-ones row be drawn.
pub fn build_operator_with(n: usize, m: usize, seed: u64, exclude_dc_row: bool) -> Result<SensingOperator> {
    if !m.is_power_of_two() || m < 2 {
        return Err(Error::BadDimensions(format!("m = {m} is not a power of two ≥ 2")));
    }
    let first = usize::from(exclude_dc_row);
    if n == 0 || n > m - first {
        return Err(Error::BadDimensions(format!("need 1 ≤ n ≤ {}, got n = {n}", m - first)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = sample(&mut rng, m - first, n).into_iter().map(|r| r + first).collect();
    rows.sort_unstable();
    Ok(SensingOperator { n, m, order: m, rows, columns: None, scale: 1.0 / (n as f64).sqrt(), seed })
}

/// Operator for `n` channel uses and a sparse vector of length `m`, picking
/// the Hadamard order automatically. Uses [`build_operator`] when `m` is a
/// power of two and `n < m`; otherwise embeds the columns in the smallest
/// order `N > max(m, n)`.
pub fn operator_for(n: usize, m: usize, seed: u64) -> Result<SensingOperator> {
    if m.is_power_of_two() && n < m {
        return build_operator(n, m, seed);
    }
    let order = (m.max(n) + 1).next_power_of_two();
    embedded_operator(n, m, order, seed)
}

/// `n` random non-DC rows and `m` random non-DC columns of an order-`order`
/// Hadamard matrix.
pub fn embedded_operator(n: usize, m: usize, order: usize, seed: u64) -> Result<SensingOperator> {
    if !order.is_power_of_two() {
        return Err(Error::BadDimensions(format!("order {order} is not a power of two")));
    }
    if n == 0 || n >= order || m == 0 || m >= order {
        return Err(Error::BadDimensions(format!("need 1 ≤ n, m < {order}, got n = {n}, m = {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<usize> = sample(&mut rng, order - 1, n).into_iter().map(|r| r + 1).collect();
    rows.sort_unstable();
    let mut columns: Vec<usize> = sample(&mut rng, order - 1, m).into_iter().map(|c| c + 1).collect();
    columns.sort_unstable();
    Ok(SensingOperator {
        n,
        m,
        order,
        rows,
        columns: Some(columns),
        scale: 1.0 / (n as f64).sqrt(),
        seed,
    })
}

impl SensingOperator {
    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row_selection(&self) -> &[usize] {
        &self.rows
    }

    pub fn column_scale(&self) -> f64 {
        self.scale
    }

    fn column(&self, c: usize) -> usize {
        self.columns.as_ref().map_or(c, |cols| cols[c])
    }

    /// `A x` through one fast transform of length `N`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.m {
            return Err(Error::LengthMismatch { expected: self.m, actual: x.len() });
        }
        let mut buf = match &self.columns {
            None => x.to_vec(),
            Some(cols) => {
                let mut buf = vec![0.0; self.order];
                cols.iter().zip(x).for_each(|(&c, &v)| buf[c] = v);
                buf
            }
        };
        fwht(&mut buf);
        Ok(self.rows.iter().map(|&r| buf[r] * self.scale).collect())
    }

    /// `Aᵀ z`.
    pub fn adjoint(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, actual: z.len() });
        }
        let mut buf = vec![0.0; self.order];
        self.rows.iter().zip(z).for_each(|(&r, &v)| buf[r] = v);
        fwht(&mut buf);
        Ok(match &self.columns {
            None => buf.into_iter().map(|v| v * self.scale).collect(),
            Some(cols) => cols.iter().map(|&c| buf[c] * self.scale).collect(),
        })
    }

    /// Explicit `n × m` matrix, row-major. Only for small instances.
    pub fn dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|&r| (0..self.m).map(|c| hadamard_entry(r, self.column(c)) * self.scale).collect())
            .collect()
    }
}

/// Per-section amplitudes `d_ℓ` (the diagonal of `D`), the per-symbol power
/// `P` and the assumed number of active users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub amplitudes: Vec<f64>,
    pub symbol_power: f64,
    pub channel_uses: usize,
    pub ka: usize,
}

/// Flat allocation `d_ℓ = √(nP/L)`, so each user's codeword carries energy `nP`.
pub fn build_power(config: &TreeCodeConfig, n: usize, symbol_power: f64, ka: usize) -> PowerAllocation {
    let l = config.num_sections();
    let d = (n as f64 * symbol_power / l as f64).sqrt();
    PowerAllocation { amplitudes: vec![d; l], symbol_power, channel_uses: n, ka }
}

/// Per-symbol power for a given `Eb/N0` in dB with unit-variance real noise:
/// `Eb/N0 = nP / (2w)`.
pub fn ebn0_db_to_power(ebn0_db: f64, info_bits: usize, n: usize) -> f64 {
    2.0 * info_bits as f64 * 10f64.powf(ebn0_db / 10.0) / n as f64
}

pub fn power_to_ebn0_db(symbol_power: f64, info_bits: usize, n: usize) -> f64 {
    10.0 * (n as f64 * symbol_power / (2.0 * info_bits as f64)).log10()
}

impl PowerAllocation {
    /// Codeword energy of one user, `Σ_ℓ d_ℓ²`.
    pub fn codeword_energy(&self) -> f64 {
        self.amplitudes.iter().map(|d| d * d).sum()
    }

    /// `Ka · Σ_ℓ d_ℓ²`, the total energy the Onsager term is measured against.
    pub fn total_energy(&self) -> f64 {
        self.ka as f64 * self.codeword_energy()
    }

    /// `D s` as a flat vector.
    pub fn apply(&self, state: &SparseState) -> Vec<f64> {
        let layout: &SectionLayout = state.layout();
        let mut out = state.values.clone();
        for s in 0..layout.num_sections() {
            let d = self.amplitudes[s];
            out[layout.range(s)].iter_mut().for_each(|v| *v *= d);
        }
        out
    }
}
