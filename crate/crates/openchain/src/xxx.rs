//! Rational 6-vertex specialization: rational R-matrix, diagonal left
//! boundary K_-(λ;p), symmetric non-diagonal right boundary K_+(λ;q,ξ).
//! Even polynomials live in the w = λ² monomial basis, reusing the u-basis
//! machinery coefficient for coefficient; the SOV quadratic system, the
//! inhomogeneous T-Q equation, and the Bethe residual suite mirror the
//! trigonometric pipeline.

use crate::model6v::{self, Block2, ChainParams, ModelError, TAU_GEN};
use crate::numerics::{
    c, cr, eig_dense, lu_decompose, solve_linear, CMatrix, EvenTrigPoly, NumericsError, C64,
    TAU_DET_STRUCT, TAU_NODE, TAU_PIVOT_REL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

const ANCHOR_OFFSETS: [(f64, f64); 5] = [
    (0.37, 0.21),
    (0.29, -0.33),
    (0.51, 0.17),
    (-0.41, 0.27),
    (0.23, 0.43),
];

const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Error)]
pub enum XXXError {
    #[error("evaluation at the λ = 0 pole (|2λ| = {0:.3e})")]
    PoleAtZero(f64),
    #[error("inhomogeneities violate ξ_a ≠ ±ξ_b + rη")]
    GenericityViolated,
    #[error("boundary scalar too small ({0:.3e})")]
    SingularBoundary(f64),
    #[error("anchor spectrum not simple: expected {expected}, separation {sep:.3e}")]
    DegenerateSpectrum { expected: usize, sep: f64 },
    #[error("node matrix singular (|det_c| ~ {det:.3e}, threshold {threshold:.3e})")]
    SingularC { det: f64, threshold: f64 },
    #[error("Bethe root at the λ = 0 pole (|λ| = {0:.3e})")]
    RootOnPole(f64),
    #[error("finite-difference step failure ({0:.3e})")]
    StepFailure(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

// ---------------------------------------------------------------------------
// domain types
// ---------------------------------------------------------------------------

/// Rational boundary parameters: p for the diagonal K_-, (q, xi_b) for the
/// symmetric K_+. xi_b is the boundary coupling (the chain inhomogeneities
/// keep the name xi).
#[derive(Debug, Clone)]
pub struct XXXBoundary {
    pub p: C64,
    pub q: C64,
    pub xi_b: C64,
}

/// Chain plus boundary plus the √(1+ξ²) branch choice entering **A** and F.
#[derive(Debug, Clone)]
pub struct XXXFamily {
    pub chain: ChainParams,
    pub boundary: XXXBoundary,
    pub flip_branch: bool,
}

impl XXXFamily {
    pub fn new(chain: ChainParams, boundary: XXXBoundary) -> Self {
        XXXFamily {
            chain,
            boundary,
            flip_branch: false,
        }
    }

    /// The branch of √(1+ξ²) in use: principal by default.
    pub fn sqrt_branch(&self) -> C64 {
        let s = (cr(1.0) + self.boundary.xi_b * self.boundary.xi_b).sqrt();
        if self.flip_branch {
            -s
        } else {
            s
        }
    }
}

/// Violations of ξ_a ≠ ±ξ_b + rη (r ∈ {−1,0,1}), reported as (a, b, r).
pub fn xxx_genericity_violations(chain: &ChainParams) -> Vec<(usize, usize, i64)> {
    let mut out = Vec::new();
    for a in 0..chain.n {
        for b in 0..chain.n {
            if a == b {
                continue;
            }
            for r in -1i64..=1 {
                let shift = chain.eta * r as f64;
                if (chain.xi[a] - chain.xi[b] - shift).norm() < TAU_GEN
                    || (chain.xi[a] + chain.xi[b] - shift).norm() < TAU_GEN
                {
                    out.push((a + 1, b + 1, r));
                }
            }
        }
    }
    out
}

pub fn xxx_is_generic(chain: &ChainParams) -> bool {
    xxx_genericity_violations(chain).is_empty()
}

// ---------------------------------------------------------------------------
// R, K, monodromy, transfer
// ---------------------------------------------------------------------------

/// Rational 6-vertex R-matrix on C² ⊗ C².
pub fn xxx_r_matrix(lambda: C64, eta: C64) -> CMatrix {
    let sp = lambda + eta;
    CMatrix::from_rows(&[
        &[sp, C64::ZERO, C64::ZERO, C64::ZERO],
        &[C64::ZERO, lambda, eta, C64::ZERO],
        &[C64::ZERO, eta, lambda, C64::ZERO],
        &[C64::ZERO, C64::ZERO, C64::ZERO, sp],
    ])
}

/// K_-(λ;p) = diag(λ − η/2 + p, p − λ + η/2).
pub fn xxx_k_minus(lambda: C64, bp: &XXXBoundary, eta: C64) -> CMatrix {
    let half = eta * 0.5;
    CMatrix::from_rows(&[
        &[lambda - half + bp.p, C64::ZERO],
        &[C64::ZERO, bp.p - lambda + half],
    ])
}

/// K_+(λ;q,ξ) = [[λ+η/2+q, ξ(λ+η/2)], [ξ(λ+η/2), q−(λ+η/2)]].
pub fn xxx_k_plus(lambda: C64, bp: &XXXBoundary, eta: C64) -> CMatrix {
    let sh = lambda + eta * 0.5;
    let off = bp.xi_b * sh;
    CMatrix::from_rows(&[&[sh + bp.q, off], &[off, bp.q - sh]])
}

fn r_site_blocks(x: C64, eta: C64, n: usize, site: usize) -> Block2 {
    let sp = x + eta;
    let a2 = CMatrix::from_rows(&[&[sp, C64::ZERO], &[C64::ZERO, x]]);
    let b2 = CMatrix::from_rows(&[&[C64::ZERO, C64::ZERO], &[eta, C64::ZERO]]);
    let c2 = CMatrix::from_rows(&[&[C64::ZERO, eta], &[C64::ZERO, C64::ZERO]]);
    let d2 = CMatrix::from_rows(&[&[x, C64::ZERO], &[C64::ZERO, sp]]);
    Block2 {
        a: model6v::site_op(n, site, &a2),
        b: model6v::site_op(n, site, &b2),
        c: model6v::site_op(n, site, &c2),
        d: model6v::site_op(n, site, &d2),
    }
}

fn monodromy_blocks(lambda: C64, chain: &ChainParams) -> Block2 {
    let n = chain.n;
    let half = chain.eta * 0.5;
    let mut acc = r_site_blocks(lambda - chain.xi[n - 1] - half, chain.eta, n, n);
    for site in (1..n).rev() {
        let f = r_site_blocks(lambda - chain.xi[site - 1] - half, chain.eta, n, site);
        acc = acc.mul(&f);
    }
    acc
}

fn monodromy_hat_blocks(lambda: C64, chain: &ChainParams) -> Block2 {
    let m = monodromy_blocks(-lambda, chain);
    let s = if chain.n % 2 == 0 { 1.0 } else { -1.0 };
    Block2 {
        a: m.d.scale(cr(s)),
        b: m.b.scale(cr(-s)),
        c: m.c.scale(cr(-s)),
        d: m.a.scale(cr(s)),
    }
}

pub(crate) fn u_minus_blocks(lambda: C64, fam: &XXXFamily) -> Block2 {
    let dq = 1 << fam.chain.n;
    let m = monodromy_blocks(lambda, &fam.chain);
    let km = Block2::from_scalar(
        &xxx_k_minus(lambda, &fam.boundary, fam.chain.eta),
        dq,
    );
    let mh = monodromy_hat_blocks(lambda, &fam.chain);
    m.mul(&km).mul(&mh)
}

/// Boundary monodromy U_-(λ) = M(λ) K_-(λ) M̂(λ) on aux ⊗ quantum.
pub fn xxx_u_minus(lambda: C64, fam: &XXXFamily) -> CMatrix {
    u_minus_blocks(lambda, fam).assemble()
}

/// Transfer matrix T(λ) = tr_0{K_+(λ) M(λ) K_-(λ) M̂(λ)}.
pub fn xxx_transfer(lambda: C64, fam: &XXXFamily) -> CMatrix {
    let dq = 1 << fam.chain.n;
    let u = u_minus_blocks(lambda, fam);
    let kp = Block2::from_scalar(&xxx_k_plus(lambda, &fam.boundary, fam.chain.eta), dq);
    let w = kp.mul(&u);
    w.a.add(&w.d)
}

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

/// Open-chain Hamiltonian commuting with the homogeneous transfer family:
/// Σ_{n<N} (σσ+σσ+σσ) + η σ_1^z / p + η (σ_N^z + ξ σ_N^x) / q.
/// The diagonal boundary couples the first site (K_- is the rightmost factor
/// of the monodromy) and every boundary field carries the weight η.
pub fn xxx_hamiltonian(chain: &ChainParams, bp: &XXXBoundary) -> Result<CMatrix, XXXError> {
    if bp.p.norm() < TAU_PIVOT_REL {
        return Err(XXXError::SingularBoundary(bp.p.norm()));
    }
    if bp.q.norm() < TAU_PIVOT_REL {
        return Err(XXXError::SingularBoundary(bp.q.norm()));
    }
    let n = chain.n;
    let eta = chain.eta;
    let dq = 1 << n;
    let mut h = CMatrix::zeros(dq);
    let (sx, sy, sz) = (model6v::pauli_x(), model6v::pauli_y(), model6v::pauli_z());
    for i in 1..n {
        let xx = model6v::site_op(n, i, &sx).matmul(&model6v::site_op(n, i + 1, &sx));
        let yy = model6v::site_op(n, i, &sy).matmul(&model6v::site_op(n, i + 1, &sy));
        let zz = model6v::site_op(n, i, &sz).matmul(&model6v::site_op(n, i + 1, &sz));
        h = h.add(&xx).add(&yy).add(&zz);
    }
    h = h.add(&model6v::site_op(n, 1, &sz).scale(eta / bp.p));
    let right = model6v::site_op(n, n, &sz).add(&model6v::site_op(n, n, &sx).scale(bp.xi_b));
    Ok(h.add(&right.scale(eta / bp.q)))
}

/// Hamiltonian from the λ-derivative of T at η/2 (homogeneous chain),
/// normalized by 2 η^{1−2N} / (tr K_+(η/2) tr K_-(η/2)); differs from
/// `xxx_hamiltonian` by a multiple of the identity.
pub fn xxx_hamiltonian_from_transfer(fam: &XXXFamily) -> Result<CMatrix, XXXError> {
    let eta = fam.chain.eta;
    let half = eta * 0.5;
    let deriv = |h: f64| -> CMatrix {
        let tp = xxx_transfer(half + cr(h), fam);
        let tm = xxx_transfer(half - cr(h), fam);
        tp.sub(&tm).scale(cr(1.0 / (2.0 * h)))
    };
    let h1 = 1e-5;
    let d1 = deriv(h1);
    let d2 = deriv(h1 * 0.5);
    let rich = d2.scale(cr(4.0 / 3.0)).sub(&d1.scale(cr(1.0 / 3.0)));
    let disagreement = d2.sub(&d1).frob_norm() / rich.frob_norm().max(f64::MIN_POSITIVE);
    if disagreement > 1e-6 {
        return Err(XXXError::StepFailure(disagreement));
    }
    let trk = xxx_k_plus(half, &fam.boundary, eta).trace()
        * xxx_k_minus(half, &fam.boundary, eta).trace();
    if trk.norm() < TAU_PIVOT_REL {
        return Err(XXXError::SingularBoundary(trk.norm()));
    }
    let n = fam.chain.n as i32;
    Ok(rich.scale(cr(2.0) * eta.powi(1 - 2 * n) / trk))
}

// ---------------------------------------------------------------------------
// a, d, quantum determinants, **A**
// ---------------------------------------------------------------------------

/// a(λ) = Π_n (λ − ξ_n + η/2).
pub fn xxx_a_fn(lambda: C64, chain: &ChainParams) -> C64 {
    let half = chain.eta * 0.5;
    chain
        .xi
        .iter()
        .map(|&xi| lambda - xi + half)
        .product()
}

/// d(λ) = a(λ − η).
pub fn xxx_d_fn(lambda: C64, chain: &ChainParams) -> C64 {
    xxx_a_fn(lambda - chain.eta, chain)
}

/// det_q M(λ) = a(λ+η/2) d(λ−η/2).
pub fn xxx_det_q_m(lambda: C64, chain: &ChainParams) -> C64 {
    let half = chain.eta * 0.5;
    xxx_a_fn(lambda + half, chain) * xxx_d_fn(lambda - half, chain)
}

/// det_q K_-(λ) = (2λ−2η)(p²−λ²).
pub fn xxx_det_q_k_minus(lambda: C64, bp: &XXXBoundary, eta: C64) -> C64 {
    (lambda * 2.0 - eta * 2.0) * (bp.p * bp.p - lambda * lambda)
}

/// det_q K_+(λ) = (2λ+2η)(q²−(1+ξ²)λ²).
pub fn xxx_det_q_k_plus(lambda: C64, bp: &XXXBoundary, eta: C64) -> C64 {
    let one_xi2 = cr(1.0) + bp.xi_b * bp.xi_b;
    (lambda * 2.0 + eta * 2.0) * (bp.q * bp.q - one_xi2 * lambda * lambda)
}

/// det_q U_-(λ) = (2λ−2η) A_-(λ+η/2) A_-(−λ+η/2) with
/// A_-(λ) = (λ−η/2+p) a(λ) d(−λ).
pub fn xxx_quantum_det_u(lambda: C64, fam: &XXXFamily) -> C64 {
    let eta = fam.chain.eta;
    let half = eta * 0.5;
    let a_minus = |x: C64| -> C64 {
        (x - half + fam.boundary.p) * xxx_a_fn(x, &fam.chain) * xxx_d_fn(-x, &fam.chain)
    };
    (lambda * 2.0 - eta * 2.0) * a_minus(lambda + half) * a_minus(-lambda + half)
}

/// Closed product form of det_q K_+(λ) det_q U_-(λ):
/// 4(λ²−η²)(λ²−p²)((1+ξ²)λ²−q²) Π_b (λ²−(ξ_b+η)²)(λ²−(ξ_b−η)²).
pub fn xxx_det_product(lambda: C64, fam: &XXXFamily) -> C64 {
    let eta = fam.chain.eta;
    let b = &fam.boundary;
    let w = lambda * lambda;
    let one_xi2 = cr(1.0) + b.xi_b * b.xi_b;
    let mut out = cr(4.0) * (w - eta * eta) * (w - b.p * b.p) * (one_xi2 * w - b.q * b.q);
    for &xi in &fam.chain.xi {
        out *= (w - (xi + eta) * (xi + eta)) * (w - (xi - eta) * (xi - eta));
    }
    out
}

/// **A**(λ) = (2λ+η)/(2λ) · (λ−η/2+p)(√(1+ξ²)(λ−η/2)+q) ·
/// Π_b (λ−ζ_b^{(0)})(λ+ζ_b^{(1)}).
pub fn xxx_big_a(lambda: C64, fam: &XXXFamily) -> Result<C64, XXXError> {
    let two = lambda * 2.0;
    if two.norm() < TAU_NODE {
        return Err(XXXError::PoleAtZero(two.norm()));
    }
    let eta = fam.chain.eta;
    let half = eta * 0.5;
    let s = fam.sqrt_branch();
    let mut out = (two + eta) / two
        * (lambda - half + fam.boundary.p)
        * (s * (lambda - half) + fam.boundary.q);
    for a in 1..=fam.chain.n {
        out *= (lambda - fam.chain.zeta_node(a, 0)) * (lambda + fam.chain.zeta_node(a, 1));
    }
    Ok(out)
}

/// 2λ·**A**(λ): entire, used for the removable-pole branch of Z_Q.
fn cleared_a(lambda: C64, fam: &XXXFamily) -> C64 {
    let eta = fam.chain.eta;
    let half = eta * 0.5;
    let s = fam.sqrt_branch();
    let mut out = (lambda * 2.0 + eta)
        * (lambda - half + fam.boundary.p)
        * (s * (lambda - half) + fam.boundary.q);
    for a in 1..=fam.chain.n {
        out *= (lambda - fam.chain.zeta_node(a, 0)) * (lambda + fam.chain.zeta_node(a, 1));
    }
    out
}

// ---------------------------------------------------------------------------
// SOV data
// ---------------------------------------------------------------------------

/// Interpolation data for the rational SOV characterization, all even
/// polynomials stored in the w = λ² monomial basis.
#[derive(Debug, Clone)]
pub struct XXXFunctions {
    pub fam: XXXFamily,
    /// f(λ): degree N+1 in w, leading coefficient 2; f(ζ_a^{(0)}) = 0,
    /// f(η/2) = **A**(η/2).
    pub f: EvenTrigPoly,
    /// g_a(λ): degree N in w; g_a(ζ_b^{(0)}) = δ_ab, g_a(±η/2) = 0.
    pub g: Vec<EvenTrigPoly>,
    /// q_n = **A**(ζ_n^{(1)}) **A**(−ζ_n^{(1)}+η).
    pub q: Vec<C64>,
    /// w-coordinates of the nodes ζ_a^{(0)}, ζ_a^{(1)}.
    pub w0: Vec<C64>,
    pub w1: Vec<C64>,
    pub a_at_eta_half: C64,
}

impl XXXFunctions {
    pub fn n(&self) -> usize {
        self.fam.chain.n
    }

    pub fn zeta(&self, a: usize, h: i32) -> C64 {
        self.fam.chain.zeta_node(a, h)
    }

    pub fn build(fam: &XXXFamily) -> Result<Self, XXXError> {
        let chain = &fam.chain;
        let n = chain.n;
        let eta = chain.eta;
        let quarter = eta * eta * 0.25;
        let w0: Vec<C64> = (1..=n)
            .map(|a| {
                let z = chain.zeta_node(a, 0);
                z * z
            })
            .collect();
        let w1: Vec<C64> = (1..=n)
            .map(|a| {
                let z = chain.zeta_node(a, 1);
                z * z
            })
            .collect();

        // g_a = (w − η²/4)/(w0_a − η²/4) · Π_{b≠a} (w − w0_b)/(w0_a − w0_b)
        let mut g = Vec::with_capacity(n);
        for a in 0..n {
            let mut roots: Vec<C64> = vec![quarter];
            let mut denom = w0[a] - quarter;
            for b in 0..n {
                if b != a {
                    roots.push(w0[b]);
                    denom *= w0[a] - w0[b];
                }
            }
            g.push(EvenTrigPoly::from_roots_u(&roots, cr(1.0) / denom));
        }

        let a_eta = xxx_big_a(eta * 0.5, fam)?;

        // f term 1: **A**(η/2) Π_b (w − w0_b)/(η²/4 − w0_b)
        let mut den1 = cr(1.0);
        for &wb in &w0 {
            den1 *= quarter - wb;
        }
        let t1 = EvenTrigPoly::from_roots_u(&w0, a_eta / den1);
        // f term 2: ½ (4λ²−η²) Π_b (w − w0_b) = 2 (w − η²/4) Π_b (w − w0_b)
        let mut roots2: Vec<C64> = vec![quarter];
        roots2.extend_from_slice(&w0);
        let t2 = EvenTrigPoly::from_roots_u(&roots2, cr(2.0));
        let f = t1.add(&t2);

        let mut q = Vec::with_capacity(n);
        for a in 1..=n {
            let z1 = chain.zeta_node(a, 1);
            q.push(xxx_big_a(z1, fam)? * xxx_big_a(-z1 + eta, fam)?);
        }

        Ok(XXXFunctions {
            fam: fam.clone(),
            f,
            g,
            q,
            w0,
            w1,
            a_at_eta_half: a_eta,
        })
    }
}

/// Evaluate a w-basis even polynomial at spectral parameter λ.
pub fn eval_w(p: &EvenTrigPoly, lambda: C64) -> C64 {
    p.eval_u(lambda * lambda)
}

/// d/dλ of a w-basis even polynomial: 2λ · (dP/dw)(λ²).
pub fn deriv_w(p: &EvenTrigPoly, lambda: C64) -> C64 {
    lambda * 2.0 * p.deriv_u().eval_u(lambda * lambda)
}

/// Residuals of the quadratic system
/// x_n (Σ_a g_a(ζ_n^{(1)}) x_a + f(ζ_n^{(1)})) = q_n.
pub fn xxx_sov_residual(x: &[C64], fns: &XXXFunctions, q: &[C64]) -> Vec<f64> {
    let n = fns.n();
    assert_eq!(x.len(), n);
    assert_eq!(q.len(), n);
    (0..n)
        .map(|nn| {
            let w = fns.w1[nn];
            let mut s = fns.f.eval_u(w);
            for a in 0..n {
                s += fns.g[a].eval_u(w) * x[a];
            }
            (x[nn] * s - q[nn]).norm()
        })
        .collect()
}

/// Newton refinement of an x-vector onto the quadratic system; Rayleigh
/// quotients seed it well inside the basin, and landing on the exact
/// solution manifold removes the eigensolver noise from everything built
/// out of τ afterwards.
fn refine_x(x: &mut [C64], fns: &XXXFunctions) {
    let n = fns.n();
    let gv: Vec<Vec<C64>> = (0..n)
        .map(|b| (0..n).map(|a| fns.g[a].eval_u(fns.w1[b])).collect())
        .collect();
    let fv: Vec<C64> = (0..n).map(|b| fns.f.eval_u(fns.w1[b])).collect();
    let scale = 1.0 + fns.q.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for _ in 0..5 {
        let mut jac = CMatrix::zeros(n);
        let mut rhs = vec![C64::ZERO; n];
        let mut worst = 0.0f64;
        for b in 0..n {
            let s: C64 = fv[b] + (0..n).map(|a| gv[b][a] * x[a]).sum::<C64>();
            let r = x[b] * s - fns.q[b];
            rhs[b] = -r;
            worst = worst.max(r.norm());
            for a in 0..n {
                jac[(b, a)] = x[b] * gv[b][a] + if a == b { s } else { C64::ZERO };
            }
        }
        if worst < 1e-14 * scale {
            break;
        }
        match solve_linear(&jac, &rhs) {
            Ok(dx) => {
                for a in 0..n {
                    x[a] += dx[a];
                }
            }
            Err(_) => break,
        }
    }
}

/// τ(λ) = f(λ) + Σ_a g_a(λ) x_a.
pub fn xxx_tau_interpolate(x: &[C64], fns: &XXXFunctions) -> EvenTrigPoly {
    let mut tau = fns.f.clone();
    for (a, &xa) in x.iter().enumerate() {
        tau = tau.add(&fns.g[a].scale(xa));
    }
    tau.trimmed()
}

#[derive(Debug, Clone)]
pub struct XXXSpectrumRecord {
    pub tau: EvenTrigPoly,
    /// x_a = τ(ζ_a^{(0)}).
    pub x: Vec<C64>,
    pub eigenvector: Vec<C64>,
    pub anchor: C64,
    pub eig_residual: f64,
}

/// Diagonalize T at an anchor, read off eigenvalue functions by Rayleigh
/// quotients at the interpolation nodes.
pub fn xxx_spectrum(
    fam: &XXXFamily,
    fns: &XXXFunctions,
) -> Result<Vec<XXXSpectrumRecord>, XXXError> {
    if !xxx_is_generic(&fam.chain) {
        return Err(XXXError::GenericityViolated);
    }
    let n = fam.chain.n;
    let dim = 1usize << n;
    let half = fam.chain.eta * 0.5;
    let node_ts: Vec<CMatrix> = (1..=n)
        .map(|a| xxx_transfer(fam.chain.zeta_node(a, 0), fam))
        .collect();

    let mut last_sep = f64::INFINITY;
    for (dx, dy) in ANCHOR_OFFSETS {
        let anchor = half + c(dx, dy);
        let t_anchor = xxx_transfer(anchor, fam);
        let pairs = eig_dense(&t_anchor, false)?;
        if pairs.len() != dim {
            continue;
        }
        let records: Vec<XXXSpectrumRecord> = pairs
            .par_iter()
            .map(|p| {
                let v = &p.vector;
                let norm2: C64 = v.iter().map(|z| z * z.conj()).sum();
                let mut x: Vec<C64> = node_ts
                    .iter()
                    .map(|tm| {
                        let tv = tm.matvec(v);
                        let num: C64 = v.iter().zip(tv.iter()).map(|(a, b)| a.conj() * b).sum();
                        num / norm2
                    })
                    .collect();
                refine_x(&mut x, fns);
                let tau = xxx_tau_interpolate(&x, fns);
                XXXSpectrumRecord {
                    tau,
                    x,
                    eigenvector: v.clone(),
                    anchor,
                    eig_residual: p.residual,
                }
            })
            .collect();
        let mut sep = f64::INFINITY;
        for i in 0..records.len() {
            for j in (i + 1)..records.len() {
                let d = records[i].tau.sub(&records[j].tau).max_coeff();
                sep = sep.min(d);
            }
        }
        if sep > crate::sov::TAU_SEP {
            return Ok(records);
        }
        last_sep = sep;
    }
    Err(XXXError::DegenerateSpectrum {
        expected: dim,
        sep: last_sep,
    })
}

// ---------------------------------------------------------------------------
// inhomogeneous T-Q equation
// ---------------------------------------------------------------------------

/// F(λ) = ½ (1−√(1+ξ²)) (4λ²−η²) Π_b Π_i (λ²−ζ_b^{(i)}²), as a w-basis
/// polynomial of degree 2N+1 with leading coefficient 2(1−√(1+ξ²)).
pub fn xxx_big_f_poly(fam: &XXXFamily) -> EvenTrigPoly {
    let eta = fam.chain.eta;
    let lead = (cr(1.0) - fam.sqrt_branch()) * 2.0;
    let mut roots = vec![eta * eta * 0.25];
    for a in 1..=fam.chain.n {
        for h in 0..=1 {
            let z = fam.chain.zeta_node(a, h);
            roots.push(z * z);
        }
    }
    EvenTrigPoly::from_roots_u(&roots, lead)
}

pub fn xxx_big_f(lambda: C64, fam: &XXXFamily) -> C64 {
    eval_w(&xxx_big_f_poly(fam), lambda)
}

/// Z_Q(λ) = **A**(λ)Q(λ−η) + **A**(−λ)Q(λ+η); the λ = 0 pole is removable
/// and evaluated by the derivative formula with a fourth-order stencil.
pub fn xxx_z_q(lambda: C64, q: &EvenTrigPoly, fam: &XXXFamily) -> Result<C64, XXXError> {
    let eta = fam.chain.eta;
    if lambda.norm() >= TAU_NODE {
        return Ok(xxx_big_a(lambda, fam)? * eval_w(q, lambda - eta)
            + xxx_big_a(-lambda, fam)? * eval_w(q, lambda + eta));
    }
    let h = FD_STEP;
    let cderiv = |x: C64| -> C64 {
        (-cleared_a(x + cr(2.0 * h), fam) + cleared_a(x + cr(h), fam) * 8.0
            - cleared_a(x - cr(h), fam) * 8.0
            + cleared_a(x - cr(2.0 * h), fam))
            / cr(12.0 * h)
    };
    // Z_Q = [c(λ)Q(λ−η) − c(−λ)Q(λ+η)]/(2λ) with c = 2λ**A**; at λ = 0 take
    // the derivative of numerator and denominator.
    let num_deriv = cderiv(C64::ZERO) * eval_w(q, -eta) + cleared_a(C64::ZERO, fam) * deriv_w(q, -eta)
        + cderiv(C64::ZERO) * eval_w(q, eta)
        - cleared_a(C64::ZERO, fam) * deriv_w(q, eta);
    Ok(num_deriv / 2.0)
}

/// Solution of the node-value linear system for Q given an eigenvalue τ.
#[derive(Debug, Clone)]
pub struct XXXQSolve {
    /// Monic Q in the w basis, degree N.
    pub q: EvenTrigPoly,
    pub roots_w: Vec<C64>,
    /// Principal square roots of roots_w.
    pub roots_lambda: Vec<C64>,
    pub det_c: C64,
    pub node_values: Vec<C64>,
}

/// Build and solve the N×N linear system fixing Q(ζ_a^{(0)}):
/// Σ_a [ℓ_a(w1_b) − δ_ab τ(ζ_b^{(0)})/**A**(−ζ_b^{(0)})] Q(ζ_a^{(0)})
///   = −Π_a (w1_b − w0_a), then assemble the monic Q.
pub fn xxx_solve_q(tau: &EvenTrigPoly, fns: &XXXFunctions) -> Result<XXXQSolve, XXXError> {
    let n = fns.n();
    let fam = &fns.fam;
    let mut mat = CMatrix::zeros(n);
    let mut rhs = vec![C64::ZERO; n];
    for b in 0..n {
        let z0 = fns.zeta(b + 1, 0);
        let a_neg = xxx_big_a(-z0, fam)?;
        if a_neg.norm() < TAU_PIVOT_REL {
            return Err(XXXError::SingularBoundary(a_neg.norm()));
        }
        let ratio = eval_w(tau, z0) / a_neg;
        let mut prod = cr(1.0);
        for a in 0..n {
            // ℓ_a(w1_b) over the w0 nodes
            let mut ell = cr(1.0);
            for cc in 0..n {
                if cc != a {
                    ell *= (fns.w1[b] - fns.w0[cc]) / (fns.w0[a] - fns.w0[cc]);
                }
            }
            mat[(b, a)] = ell - if a == b { ratio } else { C64::ZERO };
            prod *= fns.w1[b] - fns.w0[a];
        }
        rhs[b] = -prod;
    }
    // Row equilibration: clustered nodes inflate the Lagrange rows and make
    // raw pivot or determinant thresholds meaningless. The scaled determinant
    // is the singularity witness; the raw one is recovered for reporting.
    let mut row_product = cr(1.0);
    for b in 0..n {
        let mut mx = 0.0f64;
        for a in 0..n {
            mx = mx.max(mat[(b, a)].norm());
        }
        if mx == 0.0 {
            return Err(XXXError::SingularC {
                det: 0.0,
                threshold: TAU_PIVOT_REL,
            });
        }
        row_product *= cr(mx);
        for a in 0..n {
            mat[(b, a)] = mat[(b, a)] / mx;
        }
        rhs[b] = rhs[b] / mx;
    }
    let lu = lu_decompose(&mat).map_err(|e| match e {
        NumericsError::Singular(d, _) => XXXError::SingularC {
            det: d,
            threshold: TAU_PIVOT_REL,
        },
        other => XXXError::Numerics(other),
    })?;
    // The rank only drops structurally on the U(1) restoration locus
    // xi_b = 0; elsewhere a small determinant is conditioning, which the
    // refit below absorbs.
    let det_threshold = if fam.boundary.xi_b.norm() < TAU_GEN {
        TAU_DET_STRUCT
    } else {
        TAU_PIVOT_REL
    };
    if lu.det.norm() < det_threshold {
        return Err(XXXError::SingularC {
            det: lu.det.norm(),
            threshold: det_threshold,
        });
    }
    let det_c = lu.det * row_product;
    let node_values = lu.solve(&rhs);

    // Q(w) = Π_a (w − w0_a) + Σ_a ℓ_a(w) Q_a
    let mut q = EvenTrigPoly::from_roots_u(&fns.w0, cr(1.0));
    for a in 0..n {
        let mut roots = Vec::with_capacity(n - 1);
        let mut denom = cr(1.0);
        for cc in 0..n {
            if cc != a {
                roots.push(fns.w0[cc]);
                denom *= fns.w0[a] - fns.w0[cc];
            }
        }
        q = q.add(&EvenTrigPoly::from_roots_u(&roots, node_values[a] / denom));
    }
    // The Lagrange assembly can shed digits to cancellation; the equation is
    // linear in Q, so refit the non-leading coefficients against it directly.
    let q = refine_q(&q.trimmed(), tau, fns, &[])?;
    let mut roots_w = crate::numerics::poly_roots(&q)?;
    polish_roots_w(&q, &mut roots_w);
    // Second pass anchored at the computed roots: the Bethe residuals live
    // there, often far outside the global annulus at larger N.
    let focus: Vec<C64> = roots_w.iter().map(|w| w.sqrt()).collect();
    let q = refine_q(&q, tau, fns, &focus)?;
    let mut roots_w = crate::numerics::poly_roots(&q)?;
    polish_roots_w(&q, &mut roots_w);
    let roots_lambda: Vec<C64> = roots_w.iter().map(|w| w.sqrt()).collect();
    Ok(XXXQSolve {
        q,
        roots_w,
        roots_lambda,
        det_c,
        node_values,
    })
}

/// Least-squares refit of a monic Q against τQ − Z_Q = F on a seeded
/// annulus, one row per sample point, scaled row-wise. Linear in the N free
/// coefficients, so a single solve lands on the functional solution to
/// working precision.
fn refine_q(
    q0: &EvenTrigPoly,
    tau: &EvenTrigPoly,
    fns: &XXXFunctions,
    focus: &[C64],
) -> Result<EvenTrigPoly, XXXError> {
    let n = fns.n();
    if n == 0 || q0.coeffs.len() != n + 1 {
        return Ok(q0.clone());
    }
    let fam = &fns.fam;
    let eta = fam.chain.eta;
    let f_poly = xxx_big_f_poly(fam);
    // Cover the verification region; fitting a narrower annulus leaves the
    // grid residual dominated by extrapolation at larger N. Focus points
    // anchor additional rows where the caller needs the equation tight.
    let base = 3 * n + 10;
    let mut rng = ChaCha8Rng::seed_from_u64(0x9F17 + n as u64);
    let mut pts = Vec::with_capacity(base + 2 * focus.len());
    while pts.len() < base {
        let lam = c(rng.gen_range(-1.7..1.7), rng.gen_range(-1.7..1.7));
        if lam.norm() < 0.25 {
            continue;
        }
        pts.push(lam);
    }
    for &f in focus {
        if f.norm() < 0.25 {
            continue;
        }
        pts.push(f);
        pts.push(f + c(0.13, -0.09));
    }
    let m = pts.len();
    let mut a = vec![C64::ZERO; m * n];
    let mut b = vec![C64::ZERO; m];
    for (row, &lam) in pts.iter().enumerate() {
        let t = eval_w(tau, lam);
        let ap = xxx_big_a(lam, fam)?;
        let am = xxx_big_a(-lam, fam)?;
        let (wm, wp) = ((lam - eta) * (lam - eta), (lam + eta) * (lam + eta));
        let w = lam * lam;
        let (mut pw, mut pm, mut pp) = (cr(1.0), cr(1.0), cr(1.0));
        let mut cols = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            cols.push(t * pw - ap * pm - am * pp);
            pw *= w;
            pm *= wm;
            pp *= wp;
        }
        let scale = cols.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for (j, &cj) in cols.iter().take(n).enumerate() {
            a[row * n + j] = cj / scale;
        }
        b[row] = (eval_w(&f_poly, lam) - cols[n]) / scale;
    }
    let coef = crate::numerics::lstsq(m, n, &mut a, &mut b)?;
    let mut coeffs = coef;
    coeffs.push(cr(1.0));
    Ok(EvenTrigPoly { coeffs })
}

/// Newton refinement of companion-matrix roots in the w variable.
fn polish_roots_w(q: &EvenTrigPoly, roots: &mut [C64]) {
    let dq = q.deriv_u();
    for w in roots.iter_mut() {
        for _ in 0..6 {
            let d = dq.eval_u(*w);
            if d.norm() == 0.0 {
                break;
            }
            let step = q.eval_u(*w) / d;
            *w -= step;
            if step.norm() < 1e-15 * (1.0 + w.norm()) {
                break;
            }
        }
    }
}

/// |**A**(ζ_b^{(1)})**A**(−ζ_b^{(0)}) − τ(ζ_b^{(1)})τ(ζ_b^{(0)})|, normalized.
pub fn xxx_system1_residuals(tau: &EvenTrigPoly, fns: &XXXFunctions) -> Result<Vec<f64>, XXXError> {
    let n = fns.n();
    let mut out = Vec::with_capacity(n);
    for b in 1..=n {
        let z0 = fns.zeta(b, 0);
        let z1 = fns.zeta(b, 1);
        let lhs = xxx_big_a(z1, &fns.fam)? * xxx_big_a(-z0, &fns.fam)?;
        let rhs = eval_w(tau, z1) * eval_w(tau, z0);
        out.push((lhs - rhs).norm() / (1.0 + lhs.norm().max(rhs.norm())));
    }
    Ok(out)
}

fn seeded_grid(grid_size: usize) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x77A7 + grid_size as u64);
    let mut pts = Vec::with_capacity(grid_size);
    while pts.len() < grid_size {
        let lam = c(rng.gen_range(-1.6..1.6), rng.gen_range(-1.6..1.6));
        if lam.norm() < 1e-2 {
            continue;
        }
        pts.push(lam);
    }
    pts
}

/// Max over a seeded grid of |τQ − Z_Q − F| / (1 + |τQ|).
pub fn xxx_verify_baxter(
    tau: &EvenTrigPoly,
    q: &EvenTrigPoly,
    fns: &XXXFunctions,
    grid_size: usize,
) -> Result<f64, XXXError> {
    let f_poly = xxx_big_f_poly(&fns.fam);
    let mut worst = 0.0f64;
    for lam in seeded_grid(grid_size) {
        let lhs = eval_w(tau, lam) * eval_w(q, lam);
        let rhs = xxx_z_q(lam, q, &fns.fam)? + eval_w(&f_poly, lam);
        let r = (lhs - rhs).norm() / (1.0 + lhs.norm());
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Residuals of **A**(λ_a)Q(λ_a−η) + **A**(−λ_a)Q(λ_a+η) + F(λ_a) = 0 at the
/// Bethe roots, normalized by the largest participating term.
pub fn xxx_bethe_residuals(q: &XXXQSolve, fns: &XXXFunctions) -> Result<Vec<f64>, XXXError> {
    let fam = &fns.fam;
    let eta = fam.chain.eta;
    let f_poly = xxx_big_f_poly(fam);
    let mut out = Vec::with_capacity(q.roots_lambda.len());
    for &root in &q.roots_lambda {
        if root.norm() < TAU_NODE {
            return Err(XXXError::RootOnPole(root.norm()));
        }
        let t1 = xxx_big_a(root, fam)? * eval_w(&q.q, root - eta);
        let t2 = xxx_big_a(-root, fam)? * eval_w(&q.q, root + eta);
        let tf = eval_w(&f_poly, root);
        let scale = 1.0 + t1.norm().max(t2.norm()).max(tf.norm());
        out.push((t1 + t2 + tf).norm() / scale);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// homogeneous-limit closed forms
// ---------------------------------------------------------------------------

/// F in the homogeneous limit: 2(1−√(1+ξ²)) (w − η²/4)^{2N+1}.
pub fn xxx_homogeneous_f_poly(fam: &XXXFamily) -> Result<EvenTrigPoly, XXXError> {
    if !fam.chain.is_homogeneous() {
        return Err(XXXError::GenericityViolated);
    }
    let lead = (cr(1.0) - fam.sqrt_branch()) * 2.0;
    let quarter = fam.chain.eta * fam.chain.eta * 0.25;
    let roots = vec![quarter; 2 * fam.chain.n + 1];
    Ok(EvenTrigPoly::from_roots_u(&roots, lead))
}

/// **A** in the homogeneous limit:
/// (2λ+η)/(2λ) (λ−η/2+p)(√(1+ξ²)(λ−η/2)+q) (λ+η/2)^{2N}.
pub fn xxx_homogeneous_big_a(lambda: C64, fam: &XXXFamily) -> Result<C64, XXXError> {
    if !fam.chain.is_homogeneous() {
        return Err(XXXError::GenericityViolated);
    }
    let two = lambda * 2.0;
    if two.norm() < TAU_NODE {
        return Err(XXXError::PoleAtZero(two.norm()));
    }
    let eta = fam.chain.eta;
    let half = eta * 0.5;
    let s = fam.sqrt_branch();
    Ok((two + eta) / two
        * (lambda - half + fam.boundary.p)
        * (s * (lambda - half) + fam.boundary.q)
        * (lambda + half).powi(2 * fam.chain.n as i32))
}
