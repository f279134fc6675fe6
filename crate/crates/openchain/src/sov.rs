//! Separation-of-variables characterization of the transfer-matrix spectrum:
//! the interpolation functions f and g_a, the function **A**(λ), the node
//! values q_n, the quadratic-system residual, boundary-parameter predicates
//! (exceptional sets), and numerical extraction of eigenvalue functions
//! τ(λ) from the commuting family.

use crate::model6v::{
    self, dist_mod_2pi_i, BoundaryParams, ModelError, TransferFamily, TAU_GEN,
};
use crate::numerics::{c, cr, CMatrix, EvenTrigPoly, NumericsError, C64, TAU_NODE};
use rayon::prelude::*;
use thiserror::Error;

/// Minimum pairwise distance between τ coefficient vectors for the spectrum
/// to count as simple.
pub const TAU_SEP: f64 = 1e-7;

/// Anchor offsets from η/2 tried in order by spectrum_extract.
const ANCHOR_OFFSETS: [(f64, f64); 5] = [
    (0.37, 0.21),
    (0.29, -0.33),
    (0.51, 0.17),
    (-0.41, 0.27),
    (0.23, 0.43),
];

#[derive(Debug, Clone, Error)]
pub enum SovError {
    #[error("λ within {0:.3e} of a pole of A (lattice iπ/2·Z)")]
    PoleAtZero(f64),
    #[error("inhomogeneities violate the genericity condition")]
    GenericityViolated,
    #[error("no anchor gave {expected} eigenvalue functions separated by {sep:.1e}")]
    DegenerateSpectrum { expected: usize, sep: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Distance from λ to the pole lattice (iπ/2)Z of **A**.
pub(crate) fn dist_to_pole(lambda: C64) -> f64 {
    let k = (lambda.im / std::f64::consts::FRAC_PI_2).round();
    (lambda - c(0.0, std::f64::consts::FRAC_PI_2 * k)).norm()
}

/// The scalar data driving the SOV spectrum characterization for one family.
#[derive(Debug, Clone)]
pub struct SOVFunctions {
    pub fam: TransferFamily,
    /// f(λ): degree N+2 in u; carries the central values and the asymptotics.
    pub f: EvenTrigPoly,
    /// g_a(λ): degree N+1 in u; g_a(ζ_b^{(0)}) = δ_ab.
    pub g: Vec<EvenTrigPoly>,
    /// q_n = **A**(ζ_n^{(1)}) **A**(−ζ_n^{(1)}+η).
    pub q: Vec<C64>,
    /// u-coordinates of the nodes ζ_a^{(0)}, ζ_a^{(1)}.
    pub u0: Vec<C64>,
    pub u1: Vec<C64>,
    pub a_at_eta_half: C64,
    pub a_at_eta_half_shift: C64,
}

impl SOVFunctions {
    pub fn a(&self, lambda: C64) -> C64 {
        model6v::a_fn(lambda, &self.fam.chain)
    }

    pub fn d(&self, lambda: C64) -> C64 {
        model6v::d_fn(lambda, &self.fam.chain)
    }

    pub fn g_plus(&self, lambda: C64) -> Result<C64, SovError> {
        Ok(model6v::g_plus(lambda, &self.fam.boundary, self.fam.chain.eta)?)
    }

    pub fn g_minus(&self, lambda: C64) -> Result<C64, SovError> {
        Ok(model6v::g_minus(lambda, &self.fam.boundary, self.fam.chain.eta)?)
    }

    pub fn zeta(&self, a: usize, h: i32) -> C64 {
        self.fam.chain.zeta_node(a, h)
    }

    pub fn n(&self) -> usize {
        self.fam.chain.n
    }

    pub fn build(fam: &TransferFamily) -> Result<Self, SovError> {
        let chain = &fam.chain;
        let n = chain.n;
        let eta = chain.eta;
        fam.boundary.ab_plus()?;
        fam.boundary.ab_minus()?;
        let u0: Vec<C64> = (1..=n).map(|a| (chain.zeta_node(a, 0) * 2.0).cosh()).collect();
        let u1: Vec<C64> = (1..=n).map(|a| (chain.zeta_node(a, 1) * 2.0).cosh()).collect();
        let ch = eta.cosh();

        let mut g = Vec::with_capacity(n);
        for a in 0..n {
            let mut roots: Vec<C64> = vec![ch, -ch];
            let mut denom = u0[a] * u0[a] - ch * ch;
            for b in 0..n {
                if b != a {
                    roots.push(u0[b]);
                    denom *= u0[a] - u0[b];
                }
            }
            g.push(EvenTrigPoly::from_roots_u(&roots, cr(1.0) / denom));
        }

        let half = eta * 0.5;
        let ipi2 = c(0.0, std::f64::consts::FRAC_PI_2);
        let a_eta = big_a_raw(half, fam)?;
        let a_eta_shift = big_a_raw(half + ipi2, fam)?;

        // term 1: (u + cosh η)/(2 cosh η) · Π_b (u − u0_b)/(cosh η − u0_b) · A(η/2)
        let mut roots1: Vec<C64> = vec![-ch];
        let mut den1 = ch * 2.0;
        for &ub in &u0 {
            roots1.push(ub);
            den1 *= ch - ub;
        }
        let t1 = EvenTrigPoly::from_roots_u(&roots1, a_eta / den1);
        // term 2: −(−1)^N (u − cosh η)/(2 cosh η) · Π_b (u − u0_b)/(cosh η + u0_b) · A(η/2+iπ/2)
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let mut roots2: Vec<C64> = vec![ch];
        let mut den2 = ch * 2.0;
        for &ub in &u0 {
            roots2.push(ub);
            den2 *= ch + ub;
        }
        let t2 = EvenTrigPoly::from_roots_u(&roots2, a_eta_shift * (-sign) / den2);
        // term 3: 2^{1−N} κ+κ− cosh(τ+−τ−)/(sinh ζ+ sinh ζ−) (u²−cosh²η) Π_b (u − u0_b)
        let b = &fam.boundary;
        let lead3 = b.kappa_plus * b.kappa_minus * (b.tau_plus - b.tau_minus).cosh()
            / (b.zeta_plus.sinh() * b.zeta_minus.sinh())
            * cr(2.0f64.powi(1 - n as i32));
        let mut roots3: Vec<C64> = vec![ch, -ch];
        roots3.extend_from_slice(&u0);
        let t3 = EvenTrigPoly::from_roots_u(&roots3, lead3);
        let f = t1.add(&t2).add(&t3);

        let mut q = Vec::with_capacity(n);
        for a in 1..=n {
            let z1 = chain.zeta_node(a, 1);
            q.push(big_a_raw(z1, fam)? * big_a_raw(-z1 + eta, fam)?);
        }

        Ok(SOVFunctions {
            fam: fam.clone(),
            f,
            g,
            q,
            u0,
            u1,
            a_at_eta_half: a_eta,
            a_at_eta_half_shift: a_eta_shift,
        })
    }
}

fn big_a_raw(lambda: C64, fam: &TransferFamily) -> Result<C64, SovError> {
    let d = dist_to_pole(lambda);
    if d < TAU_NODE {
        return Err(SovError::PoleAtZero(d));
    }
    let eta = fam.chain.eta;
    let sign = if fam.chain.n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(cr(sign) * (lambda * 2.0 + eta).sinh() / (lambda * 2.0).sinh()
        * model6v::g_plus(lambda, &fam.boundary, eta)?
        * model6v::g_minus(lambda, &fam.boundary, eta)?
        * model6v::a_fn(lambda, &fam.chain)
        * model6v::d_fn(-lambda, &fam.chain))
}

/// **A**(λ) = (−1)^N sinh(2λ+η)/sinh 2λ · g_+(λ) g_−(λ) a(λ) d(−λ).
pub fn big_a(lambda: C64, fns: &SOVFunctions) -> Result<C64, SovError> {
    big_a_raw(lambda, &fns.fam)
}

/// Residuals of the quadratic system: r_n = |x_n (Σ_a g_a(ζ_n^{(1)}) x_a +
/// f(ζ_n^{(1)})) − q_n|.
pub fn sov_residual(x: &[C64], fns: &SOVFunctions, q: &[C64]) -> Vec<f64> {
    let n = fns.n();
    assert_eq!(x.len(), n);
    assert_eq!(q.len(), n);
    (0..n)
        .map(|nn| {
            let u = fns.u1[nn];
            let mut s = fns.f.eval_u(u);
            for a in 0..n {
                s += fns.g[a].eval_u(u) * x[a];
            }
            (x[nn] * s - q[nn]).norm()
        })
        .collect()
}

/// Membership report for the exceptional boundary-parameter sets.
#[derive(Debug, Clone)]
pub struct BoundaryClass {
    /// Y^{(i,2r)} for i ∈ {0,1} (array index) and r ∈ 0..=N (vector index).
    pub y_table: Vec<[C64; 2]>,
    /// (i, r) pairs where Y^{(i,2r)} vanishes modulo 2πi within τ_gen.
    pub y_zero: Vec<(usize, usize)>,
    /// X_{k,m}^{(i,N)} indexed [i][k][m].
    pub x_table: [[[C64; 2]; 2]; 2],
    pub in_n_sov: bool,
    pub in_m_lattice: bool,
    /// Witness (r_{+,+}, r_{−,+}, r_{−,−}) when in_m_lattice.
    pub m_triple: Option<(usize, usize, usize)>,
}

/// Y^{(i,r)} = τ_− − τ_+ + (−1)^i [(N−1−r)η + (α_−+α_++β_−−β_+)].
pub fn y_combination(bp: &BoundaryParams, n: usize, eta: C64, i: usize, r: i64) -> Result<C64, ModelError> {
    let (ap, bpp) = bp.ab_plus()?;
    let (am, bm) = bp.ab_minus()?;
    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
    Ok(bp.tau_minus - bp.tau_plus
        + cr(sign) * (eta * (n as f64 - 1.0 - r as f64) + (am + ap + bm - bpp)))
}

pub fn classify_boundary(bp: &BoundaryParams, n: usize, eta: C64) -> Result<BoundaryClass, ModelError> {
    let (ap, bpp) = bp.ab_plus()?;
    let (am, bm) = bp.ab_minus()?;
    let p = bp.tau_minus - bp.tau_plus;

    let mut y_table = Vec::with_capacity(n + 1);
    let mut y_zero = Vec::new();
    for r in 0..=n {
        let y0 = y_combination(bp, n, eta, 0, 2 * r as i64)?;
        let y1 = y_combination(bp, n, eta, 1, 2 * r as i64)?;
        if dist_mod_2pi_i(y0) < TAU_GEN {
            y_zero.push((0, r));
        }
        if dist_mod_2pi_i(y1) < TAU_GEN {
            y_zero.push((1, r));
        }
        y_table.push([y0, y1]);
    }

    // X_{k,m}^{(i,N)} = (−1)^i (1−N)η + τ_−−τ_+ + (−1)^k(α_−+β_−) − (−1)^m(α_+−β_+) + iπ(k+m)
    let mut x_table = [[[C64::ZERO; 2]; 2]; 2];
    let mut zero0 = false;
    let mut zero1 = false;
    for i in 0..2 {
        let si = if i == 0 { 1.0 } else { -1.0 };
        for k in 0..2 {
            let sk = if k == 0 { 1.0 } else { -1.0 };
            for m in 0..2 {
                let sm = if m == 0 { 1.0 } else { -1.0 };
                let x = eta * (1.0 - n as f64) * si + p + (am + bm) * sk - (ap - bpp) * sm
                    + c(0.0, std::f64::consts::PI * (k + m) as f64);
                x_table[i][k][m] = x;
                if dist_mod_2pi_i(x) < TAU_GEN {
                    if i == 0 {
                        zero0 = true;
                    } else {
                        zero1 = true;
                    }
                }
            }
        }
    }
    let in_n_sov = zero0 && zero1;

    // lattice membership: exhaustive triples (r_{+,+}, r_{−,+}, r_{−,−})
    let a_sum = ap + am;
    let b_diff = bm - bpp;
    let mut m_triple = None;
    'outer: for r1 in 0..n {
        for r2 in 0..n {
            for r3 in 0..n {
                let r4 = r1 as i64 + r3 as i64 - r2 as i64;
                if r4 < 0 || r4 >= n as i64 {
                    continue;
                }
                let c1 = a_sum - eta * (r2 as f64 - r1 as f64);
                let c2 = b_diff - eta * (r3 as f64 - r2 as f64);
                let c3 = p - eta * (n as f64 - 1.0 + r3 as f64 - 3.0 * r1 as f64);
                if dist_mod_2pi_i(c1) < TAU_GEN
                    && dist_mod_2pi_i(c2) < TAU_GEN
                    && dist_mod_2pi_i(c3) < TAU_GEN
                {
                    m_triple = Some((r1, r2, r3));
                    break 'outer;
                }
            }
        }
    }

    Ok(BoundaryClass {
        y_table,
        y_zero,
        x_table,
        in_n_sov,
        in_m_lattice: m_triple.is_some(),
        m_triple,
    })
}

/// τ(λ) = f(λ) + Σ_a g_a(λ) x_a.
pub fn tau_interpolate(x: &[C64], fns: &SOVFunctions) -> EvenTrigPoly {
    let mut tau = fns.f.clone();
    for (a, &xa) in x.iter().enumerate() {
        tau = tau.add(&fns.g[a].scale(xa));
    }
    tau.trimmed()
}

/// One transfer-matrix eigenvalue: its interpolated polynomial form, the node
/// values it was built from, and the eigenvector that produced it.
#[derive(Debug, Clone)]
pub struct SpectrumRecord {
    pub tau: EvenTrigPoly,
    /// x_a = τ(ζ_a^{(0)}).
    pub x: Vec<C64>,
    pub eigenvector: Vec<C64>,
    pub anchor: C64,
    pub eig_residual: f64,
}

/// Diagonalize T at an anchor point, then read off every eigenvalue function
/// by Rayleigh quotients at the interpolation nodes.
pub fn spectrum_extract(fam: &TransferFamily, fns: &SOVFunctions) -> Result<Vec<SpectrumRecord>, SovError> {
    if !fam.chain.is_generic() {
        return Err(SovError::GenericityViolated);
    }
    let n = fam.chain.n;
    let dim = 1usize << n;
    let half = fam.chain.eta * 0.5;
    let node_ts: Vec<CMatrix> = (1..=n)
        .map(|a| model6v::transfer(fam.chain.zeta_node(a, 0), fam))
        .collect::<Result<_, _>>()?;

    let mut last_sep = f64::INFINITY;
    for (dx, dy) in ANCHOR_OFFSETS {
        let anchor = half + c(dx, dy);
        let t_anchor = model6v::transfer(anchor, fam)?;
        let pairs = crate::numerics::eig_dense(&t_anchor, false)?;
        if pairs.len() != dim {
            continue;
        }
        let records: Vec<SpectrumRecord> = pairs
            .par_iter()
            .map(|p| {
                let v = &p.vector;
                let norm2: C64 = v.iter().map(|z| z * z.conj()).sum();
                let x: Vec<C64> = node_ts
                    .iter()
                    .map(|tm| {
                        let tv = tm.matvec(v);
                        let num: C64 = v.iter().zip(tv.iter()).map(|(a, b)| a.conj() * b).sum();
                        num / norm2
                    })
                    .collect();
                let tau = tau_interpolate(&x, fns);
                SpectrumRecord {
                    tau,
                    x,
                    eigenvector: v.clone(),
                    anchor,
                    eig_residual: p.residual,
                }
            })
            .collect();
        // simplicity: pairwise coefficient-vector separation
        let mut sep = f64::INFINITY;
        for i in 0..records.len() {
            for j in (i + 1)..records.len() {
                let d = records[i].tau.sub(&records[j].tau).max_coeff();
                sep = sep.min(d);
            }
        }
        if sep > TAU_SEP {
            return Ok(records);
        }
        last_sep = sep;
    }
    Err(SovError::DegenerateSpectrum { expected: dim, sep: last_sep })
}
