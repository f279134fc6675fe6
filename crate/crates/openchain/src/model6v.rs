//! Trigonometric 6-vertex objects for the open chain: R-matrix, boundary
//! K-matrices, bulk monodromy M and its reflection partner M̂, the boundary
//! monodromy U_-, the transfer matrix T(λ), Hamiltonians, and the scalar
//! functions (a, d, g±, quantum determinants) that drive the spectrum
//! characterization.
//!
//! Conventions: quantum space is h_1 ⊗ ... ⊗ h_N with site 1 the most
//! significant qubit; the auxiliary space is the leading factor where it
//! appears. K_+(λ) is the ζ+ K-matrix evaluated at λ+η.

use crate::numerics::{c, cr, CMatrix, C64, TAU_PIVOT_REL};
use rand::Rng;
use thiserror::Error;

/// Margin for all "parameter combination ≠ 0" genericity predicates.
pub const TAU_GEN: f64 = 1e-8;
/// Relative Frobenius tolerance for transfer-matrix commutation.
pub const EPS_COMM: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("singular boundary: |sinh ζ| = {0:.3e}")]
    SingularBoundary(f64),
    #[error("diagonal boundary (κ = 0): derived α/β are not defined")]
    DiagonalBoundary,
    #[error("finite-difference step failure: Richardson disagreement {0:.3e}")]
    StepFailure(f64),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

// ---------------------------------------------------------------------------
// parameters
// ---------------------------------------------------------------------------

/// The six boundary parameters (ζ±, κ±, τ±) with the derived (α±, β±)
/// populated whenever κ± ≠ 0. The derivation fixes the principal branch:
/// α+β = arcsinh(e^ζ/2κ), α−β = arcsinh(−e^{−ζ}/2κ); other branches are
/// reached only explicitly through the symmetry transformations.
#[derive(Debug, Clone)]
pub struct BoundaryParams {
    pub zeta_plus: C64,
    pub kappa_plus: C64,
    pub tau_plus: C64,
    pub zeta_minus: C64,
    pub kappa_minus: C64,
    pub tau_minus: C64,
    pub alpha_plus: Option<C64>,
    pub beta_plus: Option<C64>,
    pub alpha_minus: Option<C64>,
    pub beta_minus: Option<C64>,
}

fn derive_alpha_beta(zeta: C64, kappa: C64) -> Option<(C64, C64)> {
    if kappa == C64::ZERO {
        return None;
    }
    let s = crate::numerics::arcsinh_principal(zeta.exp() / (kappa * 2.0));
    let d = crate::numerics::arcsinh_principal(-(-zeta).exp() / (kappa * 2.0));
    Some(((s + d) * 0.5, (s - d) * 0.5))
}

impl BoundaryParams {
    pub fn new(
        zeta_plus: C64,
        kappa_plus: C64,
        tau_plus: C64,
        zeta_minus: C64,
        kappa_minus: C64,
        tau_minus: C64,
    ) -> Self {
        let ab_p = derive_alpha_beta(zeta_plus, kappa_plus);
        let ab_m = derive_alpha_beta(zeta_minus, kappa_minus);
        BoundaryParams {
            zeta_plus,
            kappa_plus,
            tau_plus,
            zeta_minus,
            kappa_minus,
            tau_minus,
            alpha_plus: ab_p.map(|x| x.0),
            beta_plus: ab_p.map(|x| x.1),
            alpha_minus: ab_m.map(|x| x.0),
            beta_minus: ab_m.map(|x| x.1),
        }
    }

    /// Rebuild (ζ, κ) from given (α, β, τ): κ = 1/(2√(sinh²β − sinh²α)) on
    /// the principal square root, ζ from the resulting sinh/cosh pair. All
    /// transfer-matrix functions depend on (ζ, κ) only through sinh ζ, cosh ζ
    /// and κ, so the root choice is immaterial downstream.
    pub fn from_alpha_beta(
        alpha_plus: C64,
        beta_plus: C64,
        tau_plus: C64,
        alpha_minus: C64,
        beta_minus: C64,
        tau_minus: C64,
    ) -> Result<Self, ModelError> {
        let rebuild = |alpha: C64, beta: C64| -> Result<(C64, C64), ModelError> {
            let w = beta.sinh() * beta.sinh() - alpha.sinh() * alpha.sinh();
            let root = w.sqrt();
            if root.norm() < TAU_PIVOT_REL {
                return Err(ModelError::SingularBoundary(root.norm()));
            }
            let kappa = cr(0.5) / root;
            let sz = alpha.sinh() * beta.cosh() * (kappa * 2.0);
            let cz = alpha.cosh() * beta.sinh() * (kappa * 2.0);
            let zeta = (sz + cz).ln();
            Ok((zeta, kappa))
        };
        let (zp, kp) = rebuild(alpha_plus, beta_plus)?;
        let (zm, km) = rebuild(alpha_minus, beta_minus)?;
        Ok(BoundaryParams {
            zeta_plus: zp,
            kappa_plus: kp,
            tau_plus,
            zeta_minus: zm,
            kappa_minus: km,
            tau_minus,
            alpha_plus: Some(alpha_plus),
            beta_plus: Some(beta_plus),
            alpha_minus: Some(alpha_minus),
            beta_minus: Some(beta_minus),
        })
    }

    pub fn ab_plus(&self) -> Result<(C64, C64), ModelError> {
        match (self.alpha_plus, self.beta_plus) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(ModelError::DiagonalBoundary),
        }
    }

    pub fn ab_minus(&self) -> Result<(C64, C64), ModelError> {
        match (self.alpha_minus, self.beta_minus) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(ModelError::DiagonalBoundary),
        }
    }
}

/// Chain data: length, anisotropy η, inhomogeneities ξ_1..ξ_N.
#[derive(Debug, Clone)]
pub struct ChainParams {
    pub n: usize,
    pub eta: C64,
    pub xi: Vec<C64>,
}

/// Distance from z to the lattice iπZ (the period of u = cosh 2λ).
pub fn dist_mod_ipi(z: C64) -> f64 {
    let k = (z.im / std::f64::consts::PI).round();
    (z - c(0.0, std::f64::consts::PI * k)).norm()
}

/// Distance from z to the lattice 2πiZ (the period of the parameter maps).
pub fn dist_mod_2pi_i(z: C64) -> f64 {
    let k = (z.im / (2.0 * std::f64::consts::PI)).round();
    (z - c(0.0, 2.0 * std::f64::consts::PI * k)).norm()
}

impl ChainParams {
    pub fn new(n: usize, eta: C64, xi: Vec<C64>) -> Self {
        assert_eq!(xi.len(), n);
        ChainParams { n, eta, xi }
    }

    pub fn homogeneous(n: usize, eta: C64) -> Self {
        ChainParams { n, eta, xi: vec![C64::ZERO; n] }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.xi.iter().all(|&x| x == C64::ZERO)
    }

    /// ζ_a^{(h)} = ξ_a + (h − 1/2)η with a 1-based.
    pub fn zeta_node(&self, a: usize, h: i32) -> C64 {
        self.xi[a - 1] + self.eta * (h as f64 - 0.5)
    }

    /// Violations of the genericity condition ξ_a ≠ ±ξ_b + rη (mod iπ),
    /// r ∈ {−1, 0, 1}, a ≠ b, with margin. Collisions modulo iπ are the ones
    /// that collapse interpolation nodes in u = cosh 2λ.
    pub fn genericity_violations(&self, margin: f64) -> Vec<(usize, usize, i32, i32, f64)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if a == b {
                    continue;
                }
                for (sgn, s) in [(1i32, 1.0), (-1i32, -1.0)] {
                    for r in -1i32..=1 {
                        let z = self.xi[a] - self.xi[b] * s - self.eta * (r as f64);
                        let d = dist_mod_ipi(z);
                        if d < margin {
                            out.push((a + 1, b + 1, sgn, r, d));
                        }
                    }
                }
            }
        }
        out
    }

    pub fn is_generic(&self) -> bool {
        self.genericity_violations(TAU_GEN).is_empty()
    }
}

/// A chain plus boundary: the data of one commuting transfer-matrix family.
#[derive(Debug, Clone)]
pub struct TransferFamily {
    pub chain: ChainParams,
    pub boundary: BoundaryParams,
}

// ---------------------------------------------------------------------------
// scalar model functions
// ---------------------------------------------------------------------------

/// a(λ) = Π_n sinh(λ − ξ_n + η/2)
pub fn a_fn(lambda: C64, chain: &ChainParams) -> C64 {
    let half = chain.eta * 0.5;
    chain.xi.iter().map(|&x| (lambda - x + half).sinh()).product()
}

/// d(λ) = a(λ − η)
pub fn d_fn(lambda: C64, chain: &ChainParams) -> C64 {
    a_fn(lambda - chain.eta, chain)
}

fn g_fn(lambda: C64, alpha: C64, beta: C64, beta_sign: f64, eta: C64) -> C64 {
    let half = eta * 0.5;
    (lambda + alpha - half).sinh() * (lambda + beta * beta_sign - half).cosh()
        / (alpha.sinh() * beta.cosh())
}

/// g_+(λ) = sinh(λ+α_+−η/2) cosh(λ−β_+−η/2) / (sinh α_+ cosh β_+)
pub fn g_plus(lambda: C64, bp: &BoundaryParams, eta: C64) -> Result<C64, ModelError> {
    let (a, b) = bp.ab_plus()?;
    Ok(g_fn(lambda, a, b, -1.0, eta))
}

/// g_-(λ) = sinh(λ+α_−−η/2) cosh(λ+β_−−η/2) / (sinh α_− cosh β_−)
pub fn g_minus(lambda: C64, bp: &BoundaryParams, eta: C64) -> Result<C64, ModelError> {
    let (a, b) = bp.ab_minus()?;
    Ok(g_fn(lambda, a, b, 1.0, eta))
}

/// A_-(λ) = g_-(λ) a(λ) d(−λ): the U_- diagonal eigenvalue function on the
/// reference state, entering the quantum determinant.
pub fn a_minus_eig(lambda: C64, fam: &TransferFamily) -> Result<C64, ModelError> {
    Ok(g_minus(lambda, &fam.boundary, fam.chain.eta)?
        * a_fn(lambda, &fam.chain)
        * d_fn(-lambda, &fam.chain))
}

/// det_q M(λ) = a(λ+η/2) d(λ−η/2)
pub fn det_q_m(lambda: C64, chain: &ChainParams) -> C64 {
    a_fn(lambda + chain.eta * 0.5, chain) * d_fn(lambda - chain.eta * 0.5, chain)
}

/// det_q K_+(λ) = −sinh(2λ+2η) g_+(λ+η/2) g_+(−λ+η/2)
pub fn det_q_k_plus(lambda: C64, bp: &BoundaryParams, eta: C64) -> Result<C64, ModelError> {
    let half = eta * 0.5;
    Ok(-((lambda * 2.0 + eta * 2.0).sinh())
        * g_plus(lambda + half, bp, eta)?
        * g_plus(-lambda + half, bp, eta)?)
}

/// det_q K_-(λ) = sinh(2λ−2η) g_-(λ+η/2) g_-(−λ+η/2)
pub fn det_q_k_minus(lambda: C64, bp: &BoundaryParams, eta: C64) -> Result<C64, ModelError> {
    let half = eta * 0.5;
    Ok((lambda * 2.0 - eta * 2.0).sinh()
        * g_minus(lambda + half, bp, eta)?
        * g_minus(-lambda + half, bp, eta)?)
}

/// det_q U_-(λ) = sinh(2λ−2η) A_-(λ+η/2) A_-(−λ+η/2)
pub fn quantum_det_u(lambda: C64, fam: &TransferFamily) -> Result<C64, ModelError> {
    let half = fam.chain.eta * 0.5;
    Ok((lambda * 2.0 - fam.chain.eta * 2.0).sinh()
        * a_minus_eig(lambda + half, fam)?
        * a_minus_eig(-lambda + half, fam)?)
}

// ---------------------------------------------------------------------------
// Pauli / embedding helpers
// ---------------------------------------------------------------------------

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(&[&[C64::ZERO, cr(1.0)], &[cr(1.0), C64::ZERO]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[&[C64::ZERO, c(0.0, -1.0)], &[c(0.0, 1.0), C64::ZERO]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_rows(&[&[cr(1.0), C64::ZERO], &[C64::ZERO, cr(-1.0)]])
}

/// Embed a single-site operator at (1-based) site k of an n-site chain.
pub fn site_op(n: usize, k: usize, op: &CMatrix) -> CMatrix {
    assert!(k >= 1 && k <= n && op.dim == 2);
    let left = CMatrix::identity(1 << (k - 1));
    let right = CMatrix::identity(1 << (n - k));
    left.kron(op).kron(&right)
}

// ---------------------------------------------------------------------------
// R and K matrices
// ---------------------------------------------------------------------------

/// Trigonometric 6-vertex R-matrix on C² ⊗ C².
pub fn r_matrix(lambda: C64, eta: C64) -> CMatrix {
    let sp = (lambda + eta).sinh();
    let sl = lambda.sinh();
    let se = eta.sinh();
    CMatrix::from_rows(&[
        &[sp, C64::ZERO, C64::ZERO, C64::ZERO],
        &[C64::ZERO, sl, se, C64::ZERO],
        &[C64::ZERO, se, sl, C64::ZERO],
        &[C64::ZERO, C64::ZERO, C64::ZERO, sp],
    ])
}

/// Most general scalar reflection-equation solution, normalized by sinh ζ.
pub fn k_matrix(lambda: C64, zeta: C64, kappa: C64, tau: C64, eta: C64) -> Result<CMatrix, ModelError> {
    let sz = zeta.sinh();
    if sz.norm() < TAU_PIVOT_REL {
        return Err(ModelError::SingularBoundary(sz.norm()));
    }
    let half = eta * 0.5;
    let off = (lambda * 2.0 - eta).sinh() * kappa;
    Ok(CMatrix::from_rows(&[
        &[(lambda - half + zeta).sinh() / sz, off * tau.exp() / sz],
        &[off * (-tau).exp() / sz, (zeta - lambda + half).sinh() / sz],
    ]))
}

fn k_minus(lambda: C64, fam: &TransferFamily) -> Result<CMatrix, ModelError> {
    let b = &fam.boundary;
    k_matrix(lambda, b.zeta_minus, b.kappa_minus, b.tau_minus, fam.chain.eta)
}

fn k_plus(lambda: C64, fam: &TransferFamily) -> Result<CMatrix, ModelError> {
    let b = &fam.boundary;
    k_matrix(lambda + fam.chain.eta, b.zeta_plus, b.kappa_plus, b.tau_plus, fam.chain.eta)
}

// ---------------------------------------------------------------------------
// monodromy as 2x2 blocks of quantum-space operators
// ---------------------------------------------------------------------------

/// 2×2 auxiliary-space matrix whose entries are quantum-space operators.
#[derive(Clone)]
pub(crate) struct Block2 {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
}

impl Block2 {
    pub(crate) fn mul(&self, o: &Block2) -> Block2 {
        Block2 {
            a: self.a.matmul(&o.a).add(&self.b.matmul(&o.c)),
            b: self.a.matmul(&o.b).add(&self.b.matmul(&o.d)),
            c: self.c.matmul(&o.a).add(&self.d.matmul(&o.c)),
            d: self.c.matmul(&o.b).add(&self.d.matmul(&o.d)),
        }
    }

    pub(crate) fn from_scalar(k: &CMatrix, dq: usize) -> Block2 {
        let id = CMatrix::identity(dq);
        Block2 {
            a: id.scale(k[(0, 0)]),
            b: id.scale(k[(0, 1)]),
            c: id.scale(k[(1, 0)]),
            d: id.scale(k[(1, 1)]),
        }
    }

    /// Assemble the full matrix on aux ⊗ quantum (aux index major).
    pub fn assemble(&self) -> CMatrix {
        let dq = self.a.dim;
        let mut out = CMatrix::zeros(2 * dq);
        for i in 0..dq {
            for j in 0..dq {
                out[(i, j)] = self.a[(i, j)];
                out[(i, dq + j)] = self.b[(i, j)];
                out[(dq + i, j)] = self.c[(i, j)];
                out[(dq + i, dq + j)] = self.d[(i, j)];
            }
        }
        out
    }
}

fn r_site_blocks(x: C64, eta: C64, n: usize, site: usize) -> Block2 {
    let sp = (x + eta).sinh();
    let sl = x.sinh();
    let se = eta.sinh();
    let a2 = CMatrix::from_rows(&[&[sp, C64::ZERO], &[C64::ZERO, sl]]);
    let b2 = CMatrix::from_rows(&[&[C64::ZERO, C64::ZERO], &[se, C64::ZERO]]);
    let c2 = CMatrix::from_rows(&[&[C64::ZERO, se], &[C64::ZERO, C64::ZERO]]);
    let d2 = CMatrix::from_rows(&[&[sl, C64::ZERO], &[C64::ZERO, sp]]);
    Block2 {
        a: site_op(n, site, &a2),
        b: site_op(n, site, &b2),
        c: site_op(n, site, &c2),
        d: site_op(n, site, &d2),
    }
}

pub(crate) fn monodromy_blocks(lambda: C64, chain: &ChainParams) -> Block2 {
    let n = chain.n;
    let half = chain.eta * 0.5;
    let mut acc = r_site_blocks(lambda - chain.xi[n - 1] - half, chain.eta, n, n);
    for site in (1..n).rev() {
        let f = r_site_blocks(lambda - chain.xi[site - 1] - half, chain.eta, n, site);
        acc = acc.mul(&f);
    }
    acc
}

/// M̂(λ) = (−1)^N σ_0^y M^{t_0}(−λ) σ_0^y, computed blockwise.
pub(crate) fn monodromy_hat_blocks(lambda: C64, chain: &ChainParams) -> Block2 {
    let m = monodromy_blocks(-lambda, chain);
    let s = if chain.n % 2 == 0 { 1.0 } else { -1.0 };
    Block2 {
        a: m.d.scale(cr(s)),
        b: m.b.scale(cr(-s)),
        c: m.c.scale(cr(-s)),
        d: m.a.scale(cr(s)),
    }
}

/// Bulk monodromy M(λ) = R_{0N}(λ−ξ_N−η/2)···R_{01}(λ−ξ_1−η/2) as a
/// 2^{N+1}-dimensional matrix on aux ⊗ quantum.
pub fn monodromy(lambda: C64, chain: &ChainParams) -> CMatrix {
    monodromy_blocks(lambda, chain).assemble()
}

pub fn monodromy_hat(lambda: C64, chain: &ChainParams) -> CMatrix {
    monodromy_hat_blocks(lambda, chain).assemble()
}

pub(crate) fn u_minus_blocks(lambda: C64, fam: &TransferFamily) -> Result<Block2, ModelError> {
    let dq = 1 << fam.chain.n;
    let m = monodromy_blocks(lambda, &fam.chain);
    let km = Block2::from_scalar(&k_minus(lambda, fam)?, dq);
    let mh = monodromy_hat_blocks(lambda, &fam.chain);
    Ok(m.mul(&km).mul(&mh))
}

/// Boundary monodromy U_-(λ) = M(λ) K_-(λ) M̂(λ) on aux ⊗ quantum.
pub fn u_minus(lambda: C64, fam: &TransferFamily) -> Result<CMatrix, ModelError> {
    Ok(u_minus_blocks(lambda, fam)?.assemble())
}

/// Transfer matrix T(λ) = tr_0{K_+(λ) M(λ) K_-(λ) M̂(λ)} on the quantum space.
pub fn transfer(lambda: C64, fam: &TransferFamily) -> Result<CMatrix, ModelError> {
    let dq = 1 << fam.chain.n;
    let u = u_minus_blocks(lambda, fam)?;
    let kp = Block2::from_scalar(&k_plus(lambda, fam)?, dq);
    let w = kp.mul(&u);
    Ok(w.a.add(&w.d))
}

// ---------------------------------------------------------------------------
// Hamiltonians
// ---------------------------------------------------------------------------

/// Open-chain XXZ Hamiltonian with the general boundary fields, site 1
/// coupled to (ζ−, κ−, τ−) and site N to (ζ+, κ+, τ+).
pub fn hamiltonian_explicit(chain: &ChainParams, bp: &BoundaryParams) -> Result<CMatrix, ModelError> {
    let n = chain.n;
    let eta = chain.eta;
    let dq = 1 << n;
    let mut h = CMatrix::zeros(dq);
    let (sx, sy, sz) = (pauli_x(), pauli_y(), pauli_z());
    for i in 1..n {
        let xx = site_op(n, i, &sx).matmul(&site_op(n, i + 1, &sx));
        let yy = site_op(n, i, &sy).matmul(&site_op(n, i + 1, &sy));
        let zz = site_op(n, i, &sz).matmul(&site_op(n, i + 1, &sz));
        h = h.add(&xx).add(&yy).add(&zz.scale(eta.cosh()));
    }
    let mut boundary_term = |site: usize, zeta: C64, kappa: C64, tau: C64| -> Result<(), ModelError> {
        let szeta = zeta.sinh();
        if szeta.norm() < TAU_PIVOT_REL {
            return Err(ModelError::SingularBoundary(szeta.norm()));
        }
        let pref = eta.sinh() / szeta;
        let term = site_op(n, site, &sz)
            .scale(zeta.cosh())
            .add(&site_op(n, site, &sx).scale(kappa * tau.cosh() * 2.0))
            .add(&site_op(n, site, &sy).scale(kappa * tau.sinh() * c(0.0, 2.0)));
        h = h.add(&term.scale(pref));
        Ok(())
    };
    boundary_term(1, bp.zeta_minus, bp.kappa_minus, bp.tau_minus)?;
    boundary_term(n, bp.zeta_plus, bp.kappa_plus, bp.tau_plus)?;
    Ok(h)
}

/// Hamiltonian from the λ-derivative of T at η/2 (homogeneous chain),
/// normalized by 2 (sinh η)^{1−2N} / (tr K_+(η/2) tr K_-(η/2)); differs from
/// `hamiltonian_explicit` by a multiple of the identity.
pub fn hamiltonian_from_transfer(fam: &TransferFamily) -> Result<CMatrix, ModelError> {
    let eta = fam.chain.eta;
    let half = eta * 0.5;
    let deriv = |h: f64| -> Result<CMatrix, ModelError> {
        let tp = transfer(half + cr(h), fam)?;
        let tm = transfer(half - cr(h), fam)?;
        Ok(tp.sub(&tm).scale(cr(1.0 / (2.0 * h))))
    };
    let h1 = 1e-5;
    let d1 = deriv(h1)?;
    let d2 = deriv(h1 * 0.5)?;
    let rich = d2.scale(cr(4.0 / 3.0)).sub(&d1.scale(cr(1.0 / 3.0)));
    let disagreement = d2.sub(&d1).frob_norm() / rich.frob_norm().max(f64::MIN_POSITIVE);
    if disagreement > 1e-6 {
        return Err(ModelError::StepFailure(disagreement));
    }
    let trk = k_plus(half, fam)?.trace() * k_minus(half, fam)?.trace();
    let n = fam.chain.n as i32;
    let norm = cr(2.0) * eta.sinh().powi(1 - 2 * n) / trk;
    Ok(rich.scale(norm))
}

/// The three central scalars of the transfer matrix: the λ→±∞ coefficient of
/// e^{±2λ(N+2)}, and the identity multiples at λ = η/2 and λ = η/2 − iπ/2.
#[derive(Debug, Clone)]
pub struct CentralValues {
    pub asymptotic: C64,
    pub at_eta_half: C64,
    pub at_eta_half_ipi_half: C64,
}

pub fn central_values(fam: &TransferFamily) -> Result<CentralValues, ModelError> {
    let b = &fam.boundary;
    let ss = b.zeta_plus.sinh() * b.zeta_minus.sinh();
    if ss.norm() < TAU_PIVOT_REL {
        return Err(ModelError::SingularBoundary(ss.norm()));
    }
    let n = fam.chain.n;
    let eta = fam.chain.eta;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let asymptotic = b.kappa_plus * b.kappa_minus * (b.tau_plus - b.tau_minus).cosh() / ss
        * cr(0.5f64.powi(2 * n as i32 + 1));
    let at_eta_half = cr(sign * 2.0) * eta.cosh() * det_q_m(C64::ZERO, &fam.chain);
    let ipi2 = c(0.0, std::f64::consts::FRAC_PI_2);
    let at_eta_half_ipi_half = cr(-2.0) * eta.cosh() * (b.zeta_minus.cosh() / b.zeta_minus.sinh())
        * (b.zeta_plus.cosh() / b.zeta_plus.sinh())
        * det_q_m(ipi2, &fam.chain);
    Ok(CentralValues { asymptotic, at_eta_half, at_eta_half_ipi_half })
}

// ---------------------------------------------------------------------------
// seeded generic samplers (shared by tests, sweeps, and the CLI)
// ---------------------------------------------------------------------------

pub fn random_complex_box(rng: &mut impl Rng) -> C64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Anisotropy bounded away from the degenerate loci sinh η = 0, cosh η = 0.
pub fn sample_generic_eta(rng: &mut impl Rng) -> C64 {
    loop {
        let eta = random_complex_box(rng);
        if eta.sinh().norm() > 0.2 && eta.cosh().norm() > 0.2 && eta.norm() < 1.2 {
            return eta;
        }
    }
}

/// Inhomogeneities rejected until the genericity condition holds with margin.
pub fn sample_generic_chain(n: usize, eta: C64, rng: &mut impl Rng) -> ChainParams {
    loop {
        let xi: Vec<C64> = (0..n).map(|_| random_complex_box(rng) * 0.4).collect();
        let chain = ChainParams::new(n, eta, xi);
        if chain.genericity_violations(10.0 * TAU_GEN).is_empty() {
            return chain;
        }
    }
}

/// Boundary parameters from the complex box, rejected near κ = 0 and
/// sinh ζ = 0 so the derived (α, β) are well defined.
pub fn sample_generic_boundary(rng: &mut impl Rng) -> BoundaryParams {
    loop {
        let zp = random_complex_box(rng);
        let kp = random_complex_box(rng);
        let tp = random_complex_box(rng);
        let zm = random_complex_box(rng);
        let km = random_complex_box(rng);
        let tm = random_complex_box(rng);
        if kp.norm() < 0.1 || km.norm() < 0.1 {
            continue;
        }
        if zp.sinh().norm() < 0.15 || zm.sinh().norm() < 0.15 {
            continue;
        }
        return BoundaryParams::new(zp, kp, tp, zm, km, tm);
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn swap4() -> CMatrix {
        let mut p = CMatrix::zeros(4);
        p[(0, 0)] = cr(1.0);
        p[(1, 2)] = cr(1.0);
        p[(2, 1)] = cr(1.0);
        p[(3, 3)] = cr(1.0);
        p
    }

    #[test]
    fn r_matrix_at_zero_and_definition() {
        let mut r = rng(1);
        let eta = sample_generic_eta(&mut r);
        let r0 = r_matrix(C64::ZERO, eta);
        let se = eta.sinh();
        assert!((r0[(0, 0)] - se).norm() < 1e-15);
        assert!((r0[(3, 3)] - se).norm() < 1e-15);
        assert!((r0[(1, 2)] - se).norm() < 1e-15);
        assert!((r0[(2, 1)] - se).norm() < 1e-15);
        assert!(r0[(1, 1)].norm() < 1e-15 && r0[(2, 2)].norm() < 1e-15);
        let lam = random_complex_box(&mut r);
        let rm = r_matrix(lam, eta);
        assert_eq!(rm[(0, 0)], (lam + eta).sinh());
        assert_eq!(rm[(1, 1)], lam.sinh());
        assert_eq!(rm[(2, 1)], eta.sinh());
    }

    #[test]
    fn yang_baxter_residual() {
        let mut r = rng(2);
        for _ in 0..20 {
            let eta = sample_generic_eta(&mut r);
            let lam = random_complex_box(&mut r);
            let mu = random_complex_box(&mut r);
            let i2 = CMatrix::identity(2);
            let p = swap4();
            let r12 = |x: C64| r_matrix(x, eta).kron(&i2);
            let r23 = |x: C64| i2.kron(&r_matrix(x, eta));
            let r13 = |x: C64| {
                let sw23 = i2.kron(&p);
                sw23.matmul(&r12(x)).matmul(&sw23)
            };
            let lhs = r12(lam - mu).matmul(&r13(lam)).matmul(&r23(mu));
            let rhs = r23(mu).matmul(&r13(lam)).matmul(&r12(lam - mu));
            let resid = lhs.sub(&rhs).frob_norm() / lhs.frob_norm();
            assert!(resid < 1e-12, "YB residual {resid}");
        }
    }

    #[test]
    fn k_matrix_special_points() {
        let mut r = rng(3);
        let eta = sample_generic_eta(&mut r);
        let bp = sample_generic_boundary(&mut r);
        // κ=0 at λ=η/2 reduces to the identity
        let k = k_matrix(eta * 0.5, bp.zeta_minus, C64::ZERO, bp.tau_minus, eta).unwrap();
        assert!(k.sub(&CMatrix::identity(2)).frob_norm() < 1e-14);
        // off-diagonals vanish at λ=η/2 for any κ
        let k = k_matrix(eta * 0.5, bp.zeta_minus, bp.kappa_minus, bp.tau_minus, eta).unwrap();
        assert!(k[(0, 1)].norm() < 1e-14 && k[(1, 0)].norm() < 1e-14);
        // singular boundary rejected
        assert!(matches!(
            k_matrix(cr(0.3), c(0.0, std::f64::consts::PI), cr(0.5), cr(0.1), eta),
            Err(ModelError::SingularBoundary(_))
        ));
    }

    #[test]
    fn k_matrix_scalar_reflection_equation() {
        // R12(λ−μ) K1(λ) R21(λ+μ−η) K2(μ) = K2(μ) R12(λ+μ−η) K1(λ) R21(λ−μ)
        let mut r = rng(4);
        for _ in 0..10 {
            let eta = sample_generic_eta(&mut r);
            let bp = sample_generic_boundary(&mut r);
            let lam = random_complex_box(&mut r);
            let mu = random_complex_box(&mut r);
            let i2 = CMatrix::identity(2);
            let p = swap4();
            let k = |x: C64| k_matrix(x, bp.zeta_minus, bp.kappa_minus, bp.tau_minus, eta).unwrap();
            let k1 = k(lam).kron(&i2);
            let k2 = i2.kron(&k(mu));
            let r12 = |x: C64| r_matrix(x, eta);
            let r21 = |x: C64| p.matmul(&r_matrix(x, eta)).matmul(&p);
            let lhs = r12(lam - mu).matmul(&k1).matmul(&r21(lam + mu - eta)).matmul(&k2);
            let rhs = k2.matmul(&r12(lam + mu - eta)).matmul(&k1).matmul(&r21(lam - mu));
            let resid = lhs.sub(&rhs).frob_norm() / lhs.frob_norm();
            assert!(resid < 1e-12, "scalar reflection residual {resid}");
        }
    }

    #[test]
    fn alfa_beta_relations() {
        let mut r = rng(5);
        for _ in 0..50 {
            let bp = sample_generic_boundary(&mut r);
            for (zeta, kappa, ab) in [
                (bp.zeta_plus, bp.kappa_plus, bp.ab_plus().unwrap()),
                (bp.zeta_minus, bp.kappa_minus, bp.ab_minus().unwrap()),
            ] {
                let (alpha, beta) = ab;
                let lhs1 = alpha.sinh() * beta.cosh();
                let rhs1 = zeta.sinh() / (kappa * 2.0);
                let lhs2 = alpha.cosh() * beta.sinh();
                let rhs2 = zeta.cosh() / (kappa * 2.0);
                assert!((lhs1 - rhs1).norm() < 1e-11 * (1.0 + rhs1.norm()));
                assert!((lhs2 - rhs2).norm() < 1e-11 * (1.0 + rhs2.norm()));
            }
        }
    }

    #[test]
    fn alpha_beta_inversion_round_trip() {
        let mut r = rng(6);
        for _ in 0..20 {
            let bp = sample_generic_boundary(&mut r);
            let (ap, bpp) = bp.ab_plus().unwrap();
            let (am, bm) = bp.ab_minus().unwrap();
            let re = BoundaryParams::from_alpha_beta(ap, bpp, bp.tau_plus, am, bm, bp.tau_minus).unwrap();
            // (sinh ζ, cosh ζ, κ) must agree up to the overall sign pair that
            // leaves every K-matrix entry unchanged
            let s_old = bp.zeta_plus.sinh() / bp.kappa_plus;
            let s_new = re.zeta_plus.sinh() / re.kappa_plus;
            assert!((s_old - s_new).norm() < 1e-10 * (1.0 + s_old.norm()));
            let c_old = bp.zeta_minus.cosh() / bp.kappa_minus;
            let c_new = re.zeta_minus.cosh() / re.kappa_minus;
            assert!((c_old - c_new).norm() < 1e-10 * (1.0 + c_old.norm()));
        }
    }

    #[test]
    fn monodromy_single_site_is_r() {
        let mut r = rng(7);
        let eta = sample_generic_eta(&mut r);
        let xi = random_complex_box(&mut r);
        let chain = ChainParams::new(1, eta, vec![xi]);
        let lam = random_complex_box(&mut r);
        let m = monodromy(lam, &chain);
        let rm = r_matrix(lam - xi - eta * 0.5, eta);
        assert!(m.sub(&rm).frob_norm() < 1e-13);
    }

    #[test]
    fn monodromy_rtt_relation() {
        // R12(λ−μ) M1(λ) M2(μ) = M2(μ) M1(λ) R12(λ−μ) on aux1 ⊗ aux2 ⊗ H
        let mut r = rng(8);
        for n in [1usize, 2, 3] {
            let eta = sample_generic_eta(&mut r);
            let chain = sample_generic_chain(n, eta, &mut r);
            let lam = random_complex_box(&mut r);
            let mu = random_complex_box(&mut r);
            let dq = 1 << n;
            let iq = CMatrix::identity(dq);
            let embed1 = |b: &Block2| -> CMatrix {
                // aux1 ⊗ aux2 ⊗ H with the operator on (aux1, H)
                let mut out = CMatrix::zeros(4 * dq);
                for (ia, ja, blk) in
                    [(0, 0, &b.a), (0, 1, &b.b), (1, 0, &b.c), (1, 1, &b.d)]
                {
                    for k in 0..2 {
                        for i in 0..dq {
                            for j in 0..dq {
                                out[((ia * 2 + k) * dq + i, (ja * 2 + k) * dq + j)] = blk[(i, j)];
                            }
                        }
                    }
                }
                out
            };
            let embed2 = |b: &Block2| -> CMatrix {
                let mut out = CMatrix::zeros(4 * dq);
                for (ia, ja, blk) in
                    [(0, 0, &b.a), (0, 1, &b.b), (1, 0, &b.c), (1, 1, &b.d)]
                {
                    for k in 0..2 {
                        for i in 0..dq {
                            for j in 0..dq {
                                out[((k * 2 + ia) * dq + i, (k * 2 + ja) * dq + j)] = blk[(i, j)];
                            }
                        }
                    }
                }
                out
            };
            let m1 = embed1(&monodromy_blocks(lam, &chain));
            let m2 = embed2(&monodromy_blocks(mu, &chain));
            let r12 = r_matrix(lam - mu, eta).kron(&iq);
            let lhs = r12.matmul(&m1).matmul(&m2);
            let rhs = m2.matmul(&m1).matmul(&r12);
            let resid = lhs.sub(&rhs).frob_norm() / lhs.frob_norm();
            assert!(resid < 1e-11, "RTT residual {resid} at n={n}");
        }
    }

    #[test]
    fn bulk_quantum_determinant_scalar() {
        // the quadratic combination of monodromy blocks shifted by ±η/2 is
        // a(λ+η/2) d(λ−η/2) times the identity
        let mut r = rng(9);
        for n in [1usize, 2, 3] {
            let eta = sample_generic_eta(&mut r);
            let chain = sample_generic_chain(n, eta, &mut r);
            let lam = random_complex_box(&mut r);
            let hi = monodromy_blocks(lam + eta * 0.5, &chain);
            let lo = monodromy_blocks(lam - eta * 0.5, &chain);
            let comb = hi.d.matmul(&lo.a).sub(&hi.c.matmul(&lo.b));
            let scalar = det_q_m(lam, &chain);
            let expect = CMatrix::identity(1 << n).scale(scalar);
            let resid = comb.sub(&expect).frob_norm() / expect.frob_norm().max(1e-300);
            assert!(resid < 1e-10, "bulk q-det residual {resid} at n={n}");
        }
    }

    #[test]
    fn reflection_equation_for_u_minus() {
        let mut r = rng(10);
        for n in [1usize, 2, 3] {
            let eta = sample_generic_eta(&mut r);
            let chain = sample_generic_chain(n, eta, &mut r);
            let bp = sample_generic_boundary(&mut r);
            let fam = TransferFamily { chain, boundary: bp };
            for _ in 0..4 {
                let lam = random_complex_box(&mut r);
                let mu = random_complex_box(&mut r);
                let dq = 1 << n;
                let iq = CMatrix::identity(dq);
                let p = swap4();
                let u = |x: C64| u_minus_blocks(x, &fam).unwrap();
                let embed1 = |b: &Block2| -> CMatrix {
                    let i2 = CMatrix::identity(2);
                    let e = |r_: usize, c_: usize| {
                        let mut m = CMatrix::zeros(2);
                        m[(r_, c_)] = cr(1.0);
                        m
                    };
                    e(0, 0).kron(&i2).kron(&b.a)
                        .add(&e(0, 1).kron(&i2).kron(&b.b))
                        .add(&e(1, 0).kron(&i2).kron(&b.c))
                        .add(&e(1, 1).kron(&i2).kron(&b.d))
                };
                let embed2 = |b: &Block2| -> CMatrix {
                    let i2 = CMatrix::identity(2);
                    let e = |r_: usize, c_: usize| {
                        let mut m = CMatrix::zeros(2);
                        m[(r_, c_)] = cr(1.0);
                        m
                    };
                    i2.kron(&e(0, 0)).kron(&b.a)
                        .add(&i2.kron(&e(0, 1)).kron(&b.b))
                        .add(&i2.kron(&e(1, 0)).kron(&b.c))
                        .add(&i2.kron(&e(1, 1)).kron(&b.d))
                };
                let u1 = embed1(&u(lam));
                let u2 = embed2(&u(mu));
                let r12 = |x: C64| r_matrix(x, eta).kron(&iq);
                let r21 = |x: C64| p.matmul(&r_matrix(x, eta)).matmul(&p).kron(&iq);
                let lhs = r12(lam - mu).matmul(&u1).matmul(&r21(lam + mu - eta)).matmul(&u2);
                let rhs = u2.matmul(&r12(lam + mu - eta)).matmul(&u1).matmul(&r21(lam - mu));
                let resid = lhs.sub(&rhs).frob_norm() / lhs.frob_norm();
                assert!(resid < 1e-9, "reflection residual {resid} at n={n}");
            }
        }
    }

    #[test]
    fn transfer_even_commuting_central() {
        let mut r = rng(11);
        for n in [1usize, 2, 3] {
            let eta = sample_generic_eta(&mut r);
            let chain = sample_generic_chain(n, eta, &mut r);
            let bp = sample_generic_boundary(&mut r);
            let fam = TransferFamily { chain, boundary: bp };
            let lam = random_complex_box(&mut r);
            let mu = random_complex_box(&mut r);
            let t1 = transfer(lam, &fam).unwrap();
            // evenness
            let t1m = transfer(-lam, &fam).unwrap();
            assert!(t1.sub(&t1m).frob_norm() / t1.frob_norm() < 1e-11);
            // commutation
            let t2 = transfer(mu, &fam).unwrap();
            assert!(t1.commutator_norm(&t2) < EPS_COMM);
            // central value at η/2
            let cv = central_values(&fam).unwrap();
            let te = transfer(eta * 0.5, &fam).unwrap();
            let expect = CMatrix::identity(1 << n).scale(cv.at_eta_half);
            assert!(
                te.sub(&expect).max_abs() < 1e-10 * (1.0 + cv.at_eta_half.norm()),
                "central value at eta/2 failed at n={n}"
            );
            // central value at η/2 − iπ/2
            let ipi2 = c(0.0, std::f64::consts::FRAC_PI_2);
            let tc = transfer(eta * 0.5 - ipi2, &fam).unwrap();
            let expect2 = CMatrix::identity(1 << n).scale(cv.at_eta_half_ipi_half);
            assert!(
                tc.sub(&expect2).max_abs() < 1e-9 * (1.0 + cv.at_eta_half_ipi_half.norm()),
                "central value at eta/2 - ipi/2 failed at n={n}"
            );
        }
    }

    #[test]
    fn transfer_asymptotic_coefficient() {
        let mut r = rng(12);
        for n in [1usize, 2] {
            let eta = sample_generic_eta(&mut r);
            let chain = sample_generic_chain(n, eta, &mut r);
            let bp = sample_generic_boundary(&mut r);
            let fam = TransferFamily { chain, boundary: bp };
            let cv = central_values(&fam).unwrap();
            for sgn in [1.0, -1.0] {
                let lam = cr(12.0 * sgn);
                let t = transfer(lam, &fam).unwrap();
                let scalefac = (-lam * (2 * (n as i32 + 2)) as f64 * sgn).exp();
                let scaled = t.scale(scalefac);
                let expect = CMatrix::identity(1 << n).scale(cv.asymptotic);
                let resid = scaled.sub(&expect).max_abs() / cv.asymptotic.norm();
                assert!(resid < 1e-6, "asymptotic residual {resid} at n={n} sign {sgn}");
            }
        }
    }

    #[test]
    fn transfer_normal_in_massless_regime() {
        // η, ζ, τ imaginary with κ, ξ real  →  T(λ)† = T(λ*)
        let mut r = rng(13);
        let eta = c(0.0, 0.7);
        let chain = ChainParams::new(2, eta, vec![cr(0.13), cr(-0.21)]);
        let bp = BoundaryParams::new(c(0.0, 0.55), cr(0.4), c(0.0, 0.27), c(0.0, -0.63), cr(0.9), c(0.0, 0.08));
        let fam = TransferFamily { chain, boundary: bp };
        for _ in 0..5 {
            let lam = random_complex_box(&mut r);
            let t = transfer(lam, &fam).unwrap();
            let tc = transfer(lam.conj(), &fam).unwrap();
            let resid = t.adjoint().sub(&tc).frob_norm() / t.frob_norm();
            assert!(resid < 1e-11, "massless normality residual {resid}");
        }
    }

    #[test]
    fn transfer_normal_in_massive_regime() {
        // η, ζ, κ real with τ imaginary, ξ imaginary  →  T(λ)† = T(λ*)
        let mut r = rng(14);
        let eta = cr(0.8);
        let chain = ChainParams::new(2, eta, vec![c(0.0, 0.19), c(0.0, -0.14)]);
        let bp = BoundaryParams::new(cr(0.62), cr(0.35), c(0.0, 0.41), cr(-0.57), cr(0.73), c(0.0, 0.12));
        let fam = TransferFamily { chain, boundary: bp };
        for _ in 0..5 {
            let lam = random_complex_box(&mut r);
            let t = transfer(lam, &fam).unwrap();
            let tc = transfer(lam.conj(), &fam).unwrap();
            let resid = t.adjoint().sub(&tc).frob_norm() / t.frob_norm();
            assert!(resid < 1e-11, "massive normality residual {resid}");
        }
    }

    #[test]
    fn quantum_det_u_operator_identity() {
        let mut r = rng(15);
        for n in [1usize, 2] {
            let eta = sample_generic_eta(&mut r);
            let chain = sample_generic_chain(n, eta, &mut r);
            let bp = sample_generic_boundary(&mut r);
            let fam = TransferFamily { chain, boundary: bp };
            let lam = random_complex_box(&mut r);
            let scalar = quantum_det_u(lam, &fam).unwrap();
            let pref = (lam * 2.0 - eta * 2.0).sinh();
            let dq = 1 << n;
            let mut results = Vec::new();
            for eps in [1.0f64, -1.0] {
                let hi = u_minus_blocks(lam * eps + eta * 0.5, &fam).unwrap();
                let lo = u_minus_blocks(eta * 0.5 - lam * eps, &fam).unwrap();
                let comb1 = hi.a.matmul(&lo.a).add(&hi.b.matmul(&lo.c)).scale(pref);
                let comb2 = hi.d.matmul(&lo.d).add(&hi.c.matmul(&lo.b)).scale(pref);
                let expect = CMatrix::identity(dq).scale(scalar);
                let r1 = comb1.sub(&expect).frob_norm() / expect.frob_norm();
                let r2 = comb2.sub(&expect).frob_norm() / expect.frob_norm();
                assert!(r1 < 1e-9, "q-detU A-combination residual {r1} at n={n} eps={eps}");
                assert!(r2 < 1e-9, "q-detU D-combination residual {r2} at n={n} eps={eps}");
                results.push(comb1);
            }
            let diff = results[0].sub(&results[1]).frob_norm() / results[0].frob_norm();
            assert!(diff < 1e-10, "eps symmetry violated: {diff}");
        }
    }

    #[test]
    fn quantum_det_factorizations() {
        // det_q U_- = det_q K_- · det_q M(λ) det_q M(−λ)
        let mut r = rng(16);
        let eta = sample_generic_eta(&mut r);
        let chain = sample_generic_chain(2, eta, &mut r);
        let bp = sample_generic_boundary(&mut r);
        let fam = TransferFamily { chain: chain.clone(), boundary: bp.clone() };
        let lam = random_complex_box(&mut r);
        let lhs = quantum_det_u(lam, &fam).unwrap();
        let rhs = det_q_k_minus(lam, &bp, eta).unwrap() * det_q_m(lam, &chain) * det_q_m(-lam, &chain);
        assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn hamiltonian_diagonal_closed_form() {
        let mut r = rng(17);
        let eta = sample_generic_eta(&mut r);
        let zp = random_complex_box(&mut r) + cr(1.2);
        let zm = random_complex_box(&mut r) + cr(1.2);
        let bp = BoundaryParams::new(zp, C64::ZERO, C64::ZERO, zm, C64::ZERO, C64::ZERO);
        let chain = ChainParams::homogeneous(2, eta);
        let h = hamiltonian_explicit(&chain, &bp).unwrap();
        let (sx, sy, sz) = (pauli_x(), pauli_y(), pauli_z());
        let want = sx.kron(&sx)
            .add(&sy.kron(&sy))
            .add(&sz.kron(&sz).scale(eta.cosh()))
            .add(&sz.kron(&CMatrix::identity(2)).scale(eta.sinh() * zm.cosh() / zm.sinh()))
            .add(&CMatrix::identity(2).kron(&sz).scale(eta.sinh() * zp.cosh() / zp.sinh()));
        assert!(h.sub(&want).frob_norm() < 1e-13);
    }

    #[test]
    fn hamiltonian_hermitian_in_massless_regime() {
        let eta = c(0.0, 0.9);
        let bp = BoundaryParams::new(c(0.0, 0.55), cr(0.4), c(0.0, 0.27), c(0.0, -0.63), cr(0.9), c(0.0, 0.08));
        let chain = ChainParams::homogeneous(3, eta);
        let h = hamiltonian_explicit(&chain, &bp).unwrap();
        assert!(h.sub(&h.adjoint()).frob_norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_matches_transfer_derivative() {
        let mut r = rng(18);
        for n in [1usize, 2, 3] {
            let eta = sample_generic_eta(&mut r);
            let chain = ChainParams::homogeneous(n, eta);
            let bp = sample_generic_boundary(&mut r);
            let fam = TransferFamily { chain: chain.clone(), boundary: bp.clone() };
            let ht = hamiltonian_from_transfer(&fam).unwrap();
            let he = hamiltonian_explicit(&chain, &bp).unwrap();
            let dq = 1 << n;
            let diff = ht.sub(&he);
            let shift = diff.trace() / cr(dq as f64);
            let off = diff.sub(&CMatrix::identity(dq).scale(shift)).frob_norm();
            assert!(
                off < 1e-6 * (1.0 + he.frob_norm()),
                "off-identity difference {off} at n={n}"
            );
            // H commutes with T(λ)
            let lam = random_complex_box(&mut r);
            let t = transfer(lam, &fam).unwrap();
            assert!(he.commutator_norm(&t) < 1e-8);
        }
    }

    #[test]
    fn genericity_predicate() {
        let eta = cr(0.7);
        let good = ChainParams::new(2, eta, vec![cr(0.11), cr(0.37)]);
        assert!(good.is_generic());
        // ξ_2 = ξ_1 + η violates r = 1
        let bad = ChainParams::new(2, eta, vec![cr(0.11), cr(0.11) + eta]);
        assert!(!bad.is_generic());
        // collision modulo iπ is also caught
        let bad2 = ChainParams::new(2, eta, vec![cr(0.11), cr(0.11) + c(0.0, std::f64::consts::PI)]);
        assert!(!bad2.is_generic());
    }
}
