//! Soft beliefs over section values and the transform-domain computation of
//! tree-code priors.
//!
//! A parity section `ℓ` satisfies `v(ℓ) ≡ Σ_j g_j (mod 2^{v_ℓ})` where `g_j`
//! is the residue of information section `j` under its generator. Folding
//! each information belief onto residues turns the marginal of `v(ℓ)` into a
//! cyclic convolution, and the marginal of one `g_j` into a cyclic
//! cross-correlation of the parity belief against the other residues. Both
//! are evaluated with length-`2^{v_ℓ}` FFTs.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::code::EdgePartition;
use crate::error::{Error, Result};

/// Nonnegative weights over the `2^{v_ℓ}` values of one section (or over
/// the residues of `Z/2^{v_ℓ}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionBeliefs {
    pub section: usize,
    pub weights: Vec<f64>,
}

impl SectionBeliefs {
    pub fn new(section: usize, weights: Vec<f64>) -> Self {
        debug_assert!(weights.iter().all(|w| *w >= 0.0));
        SectionBeliefs { section, weights }
    }

    pub fn uniform(section: usize, len: usize) -> Self {
        SectionBeliefs { section, weights: vec![1.0 / len as f64; len] }
    }

    pub fn point(section: usize, len: usize, at: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[at] = 1.0;
        SectionBeliefs { section, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Scales to unit 1-norm.
    pub fn normalized(mut self) -> Result<Self> {
        normalize(&mut self.weights)?;
        Ok(self)
    }
}

/// Clamps negatives to zero and scales to unit 1-norm.
pub(crate) fn normalize(weights: &mut [f64]) -> Result<()> {
    let mut mass = 0.0;
    for w in weights.iter_mut() {
        if *w < 0.0 {
            *w = 0.0;
        }
        mass += *w;
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::ZeroMass);
    }
    let inv = 1.0 / mass;
    weights.iter_mut().for_each(|w| *w *= inv);
    Ok(())
}

/// Collapses beliefs on section `j` onto residues of `Z/2^{v_ℓ}`: the entry
/// for residue `g` is the total weight of the values mapped to `g`.
pub fn fold_likelihoods(beliefs: &SectionBeliefs, partition: &EdgePartition) -> Result<SectionBeliefs> {
    if beliefs.len() != partition.source_size() {
        return Err(Error::LengthMismatch { expected: partition.source_size(), actual: beliefs.len() });
    }
    let mut out = vec![0.0; partition.modulus()];
    for (&w, &r) in beliefs.weights.iter().zip(partition.residues()) {
        out[r as usize] += w;
    }
    Ok(SectionBeliefs { section: beliefs.section, weights: out })
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(len: usize) -> Plans {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        Plans { forward: p.plan_fft_forward(len), inverse: p.plan_fft_inverse(len) }
    })
}

fn spectrum(weights: &[f64], plans: &Plans) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    plans.forward.process(&mut buf);
    buf
}

/// Inverse transform, keeping the clamped and normalized real part.
fn to_beliefs(section: usize, mut buf: Vec<Complex64>, plans: &Plans) -> Result<SectionBeliefs> {
    plans.inverse.process(&mut buf);
    let mut weights: Vec<f64> = buf.into_iter().map(|c| c.re).collect();
    normalize(&mut weights)?;
    Ok(SectionBeliefs { section, weights })
}

fn check_lengths(len: usize, vectors: &[&SectionBeliefs]) -> Result<()> {
    if !len.is_power_of_two() {
        return Err(Error::LengthMismatch { expected: len.next_power_of_two(), actual: len });
    }
    match vectors.iter().find(|v| v.len() != len) {
        Some(v) => Err(Error::LengthMismatch { expected: len, actual: v.len() }),
        None => Ok(()),
    }
}

/// Prior on a parity section: the normalized cyclic convolution of the
/// folded beliefs of its information sources.
pub fn parity_prior(folded: &[SectionBeliefs]) -> Result<SectionBeliefs> {
    let first = folded.first().ok_or(Error::ZeroMass)?;
    let len = first.len();
    check_lengths(len, &folded.iter().collect::<Vec<_>>())?;
    let plans = plans(len);
    let mut acc = spectrum(&first.weights, &plans);
    for f in &folded[1..] {
        for (a, b) in acc.iter_mut().zip(spectrum(&f.weights, &plans)) {
            *a *= b;
        }
    }
    to_beliefs(first.section, acc, &plans)
}

/// Prior on the residue `g_j` of one information source, given the parity
/// belief and the folded beliefs of the other sources:
/// `R(g) ∝ Σ_{g_ℓ − Σ_{i≠j} g_i ≡ g} L_ℓ(g_ℓ) Π_i L_{i,ℓ}(g_i)`.
pub fn residue_prior(
    target: usize,
    parity: &SectionBeliefs,
    others: &[SectionBeliefs],
) -> Result<SectionBeliefs> {
    let len = parity.len();
    check_lengths(len, &others.iter().collect::<Vec<_>>())?;
    let plans = plans(len);
    let mut acc = spectrum(&parity.weights, &plans);
    for f in others {
        for (a, b) in acc.iter_mut().zip(spectrum(&f.weights, &plans)) {
            *a *= b.conj();
        }
    }
    to_beliefs(target, acc, &plans)
}

/// Gives every value of the source section the weight of its residue class,
/// then normalizes.
pub fn lift(residue: &SectionBeliefs, partition: &EdgePartition) -> Result<SectionBeliefs> {
    if residue.len() != partition.modulus() {
        return Err(Error::LengthMismatch { expected: partition.modulus(), actual: residue.len() });
    }
    let mut weights: Vec<f64> = partition.residues().iter().map(|&r| residue.weights[r as usize]).collect();
    normalize(&mut weights)?;
    Ok(SectionBeliefs { section: residue.section, weights })
}

/// Prior on information section `target` induced by one parity section.
pub fn info_prior(
    target: usize,
    parity: &SectionBeliefs,
    others: &[SectionBeliefs],
    partition: &EdgePartition,
) -> Result<SectionBeliefs> {
    lift(&residue_prior(target, parity, others)?, partition)
}

/// All priors of one parity neighbourhood from a single set of transforms.
#[derive(Debug, Clone)]
pub struct NeighbourhoodPriors {
    /// Prior on the parity section, or `Err(ZeroMass)`.
    pub parity: Result<SectionBeliefs>,
    /// Residue-domain prior for each source, in source order.
    pub residues: Vec<Result<SectionBeliefs>>,
}

/// Computes [`parity_prior`] and the [`residue_prior`] of every source at
/// once, reusing the forward transforms.
pub fn neighbourhood_priors(
    parity_section: usize,
    parity: &SectionBeliefs,
    folded: &[SectionBeliefs],
) -> Result<NeighbourhoodPriors> {
    let len = parity.len();
    check_lengths(len, &folded.iter().collect::<Vec<_>>())?;
    let plans = plans(len);
    let spectra: Vec<Vec<Complex64>> = folded.iter().map(|f| spectrum(&f.weights, &plans)).collect();
    let parity_spec = spectrum(&parity.weights, &plans);

    let mut prod = vec![Complex64::new(1.0, 0.0); len];
    for s in &spectra {
        prod.iter_mut().zip(s).for_each(|(a, b)| *a *= b);
    }
    let parity_prior = to_beliefs(parity_section, prod, &plans);

    let residues = folded
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let mut acc = parity_spec.clone();
            for (i, s) in spectra.iter().enumerate() {
                if i != j {
                    acc.iter_mut().zip(s).for_each(|(a, b)| *a *= b.conj());
                }
            }
            to_beliefs(f.section, acc, &plans)
        })
        .collect();
    Ok(NeighbourhoodPriors { parity: parity_prior, residues })
}

/// Direct `O(N²)` cyclic convolution. Reference path for checking the
/// transform route on small rings.
pub fn cyclic_convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    assert_eq!(a.len(), b.len());
    assert!(a.len() <= 1 << 12, "direct convolution is for small rings");
    let n = a.len();
    let mut out = vec![0.0; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (k, &y) in b.iter().enumerate() {
            out[(i + k) & (n - 1)] += x * y;
        }
    }
    out
}
