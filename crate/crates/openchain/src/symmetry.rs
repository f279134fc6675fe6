//! Discrete sign flips of the boundary parameters (τ±, α±, β±) →
//! (ε_τ τ±, ε_α α±, ε_β β±): an eightfold isospectral family of transfer
//! matrices, the explicit conjugations implementing two of the flips, and the
//! selection of an equivalent T-Q variant whose hypothesis set is clean.

use crate::baxter::{self, BaxterError};
use crate::model6v::{self, BoundaryParams, ModelError, TransferFamily, TAU_GEN};
use crate::numerics::{c, cr, eig_dense, CMatrix, EvenTrigPoly, NumericsError, C64};
use crate::sov::{self, SOVFunctions, SovError};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SymmetryError {
    #[error("families must share the same chain")]
    ChainMismatch,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sov(#[from] SovError),
    #[error(transparent)]
    Baxter(#[from] BaxterError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One sign-flip element (ε_τ, ε_α, ε_β) ∈ {−1,+1}³.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Z2Triple {
    pub eps_tau: i8,
    pub eps_alpha: i8,
    pub eps_beta: i8,
}

impl Z2Triple {
    pub fn identity() -> Self {
        Z2Triple {
            eps_tau: 1,
            eps_alpha: 1,
            eps_beta: 1,
        }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    /// All eight elements, lexicographic with + before − in each slot.
    pub fn all() -> Vec<Z2Triple> {
        let mut out = Vec::with_capacity(8);
        for &t in &[1i8, -1] {
            for &a in &[1i8, -1] {
                for &b in &[1i8, -1] {
                    out.push(Z2Triple {
                        eps_tau: t,
                        eps_alpha: a,
                        eps_beta: b,
                    });
                }
            }
        }
        out
    }

    pub fn compose(&self, other: &Z2Triple) -> Z2Triple {
        Z2Triple {
            eps_tau: self.eps_tau * other.eps_tau,
            eps_alpha: self.eps_alpha * other.eps_alpha,
            eps_beta: self.eps_beta * other.eps_beta,
        }
    }
}

/// Transform (τ±, α±, β±) → (ε_τ τ±, ε_α α±, ε_β β±), rebuilding (ζ, κ) from
/// the flipped (α, β). The identity returns the input unchanged so baselines
/// reproduce bit for bit.
pub fn apply_z2(bp: &BoundaryParams, eps: Z2Triple) -> Result<BoundaryParams, SymmetryError> {
    if eps.is_identity() {
        return Ok(bp.clone());
    }
    let (ap, bpp) = bp.ab_plus()?;
    let (am, bm) = bp.ab_minus()?;
    let et = cr(eps.eps_tau as f64);
    let ea = cr(eps.eps_alpha as f64);
    let eb = cr(eps.eps_beta as f64);
    Ok(BoundaryParams::from_alpha_beta(
        ea * ap,
        eb * bpp,
        et * bp.tau_plus,
        ea * am,
        eb * bm,
        et * bp.tau_minus,
    )?)
}

/// Max-min greedy matching distance between two same-size multisets.
fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &x in a {
        let mut best = f64::INFINITY;
        let mut best_j = 0;
        for (j, &y) in b.iter().enumerate() {
            if !used[j] {
                let d = (x - y).norm();
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

/// Same matching over coefficient vectors (Euclidean metric).
fn coeff_set_distance(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    assert_eq!(a.len(), b.len());
    let metric = |x: &Vec<C64>, y: &Vec<C64>| -> f64 {
        let len = x.len().max(y.len());
        (0..len)
            .map(|k| {
                let xv = x.get(k).copied().unwrap_or(C64::ZERO);
                let yv = y.get(k).copied().unwrap_or(C64::ZERO);
                (xv - yv).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best = f64::INFINITY;
        let mut best_j = 0;
        for (j, y) in b.iter().enumerate() {
            if !used[j] {
                let d = metric(x, y);
                if d < best {
                    best = d;
                    best_j = j;
                }
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

#[derive(Debug, Clone, Copy)]
pub struct IsospectralReport {
    /// Matching distance between the eigenvalue multisets of T(λ*) at the
    /// shared anchor, relative to the spectral scale.
    pub anchor_distance: f64,
    /// Matching distance between the extracted τ coefficient sets.
    pub tau_distance: f64,
}

/// Compare the spectra of two transfer families sharing a chain: eigenvalues
/// of T at one anchor, and the full sets of interpolated eigenvalue
/// polynomials.
pub fn isospectral_check(
    fam: &TransferFamily,
    fam2: &TransferFamily,
) -> Result<IsospectralReport, SymmetryError> {
    if fam.chain.n != fam2.chain.n
        || (fam.chain.eta - fam2.chain.eta).norm() != 0.0
        || fam.chain.xi != fam2.chain.xi
    {
        return Err(SymmetryError::ChainMismatch);
    }
    let anchor = fam.chain.eta * 0.5 + c(0.37, 0.21);
    let vals = |f: &TransferFamily| -> Result<Vec<C64>, SymmetryError> {
        let t = model6v::transfer(anchor, f)?;
        Ok(eig_dense(&t, false)?.into_iter().map(|p| p.value).collect())
    };
    let v1 = vals(fam)?;
    let v2 = vals(fam2)?;
    let scale = 1.0 + v1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let anchor_distance = multiset_distance(&v1, &v2) / scale;

    let fns1 = SOVFunctions::build(fam)?;
    let fns2 = SOVFunctions::build(fam2)?;
    let recs1 = sov::spectrum_extract(fam, &fns1)?;
    let recs2 = sov::spectrum_extract(fam2, &fns2)?;
    let set1: Vec<Vec<C64>> = recs1.iter().map(|r| r.tau.coeffs.clone()).collect();
    let set2: Vec<Vec<C64>> = recs2.iter().map(|r| r.tau.coeffs.clone()).collect();
    let tscale = 1.0 + recs1.iter().map(|r| r.tau.max_coeff()).fold(0.0, f64::max);
    let tau_distance = coeff_set_distance(&set1, &set2) / tscale;
    Ok(IsospectralReport {
        anchor_distance,
        tau_distance,
    })
}

/// Conjugation ⊗_n σ_n^y implementing (τ±, ζ±) → (−τ±, −ζ±).
pub fn gamma_y(n: usize) -> CMatrix {
    let sy = model6v::pauli_y();
    let mut out = sy.clone();
    for _ in 1..n {
        out = out.kron(&sy);
    }
    out
}

/// Conjugation ⊗_n σ_n^z implementing κ± → −κ±.
pub fn gamma_z(n: usize) -> CMatrix {
    let sz = model6v::pauli_z();
    let mut out = sz.clone();
    for _ in 1..n {
        out = out.kron(&sz);
    }
    out
}

/// Y^{(i,2r)} after the flip, computed directly in the (α, β, τ) variables:
/// ε_τ(τ₋−τ₊) + (−1)^i[(N−1−2r)η + ε_α(α₋+α₊) + ε_β(β₋−β₊)].
pub fn y_combination_variant(
    bp: &BoundaryParams,
    n: usize,
    eta: C64,
    eps: Z2Triple,
    i: usize,
    r: usize,
) -> Result<C64, SymmetryError> {
    let (ap, bpp) = bp.ab_plus()?;
    let (am, bm) = bp.ab_minus()?;
    let si = if i % 2 == 0 { 1.0 } else { -1.0 };
    Ok(cr(eps.eps_tau as f64) * (bp.tau_minus - bp.tau_plus)
        + cr(si)
            * (eta * (n as f64 - 1.0 - 2.0 * r as f64)
                + cr(eps.eps_alpha as f64) * (am + ap)
                + cr(eps.eps_beta as f64) * (bm - bpp)))
}

/// First ε in lexicographic order whose variant satisfies
/// Y^{(i,2r)}(ε·) ≠ 0 for all i ∈ {0,1}, r ∈ {0..N−1}; absent when every
/// variant fails.
pub fn select_variant(
    bp: &BoundaryParams,
    n: usize,
    eta: C64,
) -> Result<Option<Z2Triple>, SymmetryError> {
    'eps: for eps in Z2Triple::all() {
        for i in 0..2 {
            for r in 0..n {
                let y = y_combination_variant(bp, n, eta, eps, i, r)?;
                if model6v::dist_mod_2pi_i(y) < TAU_GEN {
                    continue 'eps;
                }
            }
        }
        return Ok(Some(eps));
    }
    Ok(None)
}

/// Rebuild the SOV interpolation data and the inhomogeneity polynomial under
/// the flipped parameters; the T-Q pipeline then runs unchanged against them.
pub fn variant_baxter_functions(
    fam: &TransferFamily,
    eps: Z2Triple,
) -> Result<(SOVFunctions, EvenTrigPoly), SymmetryError> {
    let bp2 = apply_z2(&fam.boundary, eps)?;
    let fam2 = TransferFamily {
        chain: fam.chain.clone(),
        boundary: bp2,
    };
    let fns2 = SOVFunctions::build(&fam2)?;
    let f2 = baxter::big_f_poly(&fam2.boundary, &fam2.chain)?;
    Ok((fns2, f2))
}
