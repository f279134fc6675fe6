//! Dense complex linear algebra and even trigonometric polynomials.
//!
//! Everything downstream works with even, iπ-periodic functions of the
//! spectral parameter; those are stored as plain polynomials in u = cosh 2λ
//! so that evenness and periodicity hold structurally. The rational (XXX)
//! modules reuse the same type with u standing for w = λ².

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

/// Relative residual required of linear solves.
pub const EPS_LIN: f64 = 1e-11;
/// Eigenpair residual bound for well-conditioned desk-scale matrices.
pub const EPS_EIG: f64 = 1e-9;
/// Backward-error bound for polynomial roots.
pub const EPS_ROOT: f64 = 1e-9;
/// Two interpolation nodes closer than this in u are duplicates.
pub const TAU_NODE: f64 = 1e-10;
/// Trailing coefficients below TAU_TRIM_REL * max|c_k| are trimmed.
pub const TAU_TRIM_REL: f64 = 1e-12;
/// Pivots below TAU_PIVOT_REL * max|entry| abort elimination.
pub const TAU_PIVOT_REL: f64 = 1e-13;
/// Determinant of a row-equilibrated system below this marks a structural
/// rank drop (as opposed to mere ill conditioning of the representation).
pub const TAU_DET_STRUCT: f64 = 1e-8;

#[derive(Debug, Clone, Error)]
pub enum NumericsError {
    #[error("duplicate interpolation nodes {0} and {1}: |u_j - u_k| = {2:.3e}")]
    DuplicateNode(usize, usize, f64),
    #[error("ill-conditioned interpolation (diagnostic {0:.3e})")]
    IllConditioned(f64),
    #[error("polynomial is numerically zero after trimming")]
    DegenerateLeading,
    #[error("singular linear system: pivot {0:.3e} in column {1}")]
    Singular(f64, usize),
    #[error("eigen iteration failed to converge within {0} steps")]
    NoConvergence(usize),
    #[error("bad input: {0}")]
    BadInput(&'static str),
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Principal branch of arcsinh, cut along (±i∞, ±i].
pub fn arcsinh_principal(z: C64) -> C64 {
    z.asinh()
}

/// Principal branch of arccosh, cut along (-∞, 1].
pub fn arccosh_principal(z: C64) -> C64 {
    z.acosh()
}

// ---------------------------------------------------------------------------
// EvenTrigPoly
// ---------------------------------------------------------------------------

/// Even iπ-periodic trigonometric polynomial, stored as coefficients of
/// powers of u = cosh 2λ (coeffs[k] multiplies u^k).
#[derive(Debug, Clone, PartialEq)]
pub struct EvenTrigPoly {
    pub coeffs: Vec<C64>,
}

impl EvenTrigPoly {
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "polynomial needs at least one coefficient");
        EvenTrigPoly { coeffs }
    }

    pub fn zero() -> Self {
        EvenTrigPoly { coeffs: vec![C64::ZERO] }
    }

    pub fn constant(v: C64) -> Self {
        EvenTrigPoly { coeffs: vec![v] }
    }

    /// Monic-leading product Π_k (u - r_k) scaled by `leading`.
    pub fn from_roots_u(roots: &[C64], leading: C64) -> Self {
        let mut coeffs = vec![C64::ZERO; roots.len() + 1];
        coeffs[0] = leading;
        let mut deg = 0;
        for &r in roots {
            // multiply by (u - r): shift up, subtract r * old
            for k in (0..=deg).rev() {
                let ck = coeffs[k];
                coeffs[k + 1] += ck;
                coeffs[k] = -r * ck;
            }
            deg += 1;
        }
        // coefficients came out with coeffs[k] built in place; the loop above
        // produces Σ c_k u^k directly
        EvenTrigPoly { coeffs }
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Index of the last coefficient above the trim threshold.
    pub fn degree(&self) -> usize {
        let tol = TAU_TRIM_REL * self.max_coeff();
        let mut d = 0;
        for (k, z) in self.coeffs.iter().enumerate() {
            if z.norm() > tol {
                d = k;
            }
        }
        d
    }

    pub fn trimmed(&self) -> EvenTrigPoly {
        EvenTrigPoly { coeffs: self.coeffs[..=self.degree()].to_vec() }
    }

    pub fn eval_u(&self, u: C64) -> C64 {
        let mut acc = C64::ZERO;
        for &ck in self.coeffs.iter().rev() {
            acc = acc * u + ck;
        }
        acc
    }

    /// Evaluate at a spectral parameter through u = cosh 2λ.
    pub fn eval(&self, lambda: C64) -> C64 {
        self.eval_u((lambda * 2.0).cosh())
    }

    /// d/du coefficients.
    pub fn deriv_u(&self) -> EvenTrigPoly {
        if self.coeffs.len() == 1 {
            return EvenTrigPoly::zero();
        }
        let mut d = Vec::with_capacity(self.coeffs.len() - 1);
        for (k, &ck) in self.coeffs.iter().enumerate().skip(1) {
            d.push(ck * cr(k as f64));
        }
        EvenTrigPoly { coeffs: d }
    }

    pub fn add(&self, other: &EvenTrigPoly) -> EvenTrigPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![C64::ZERO; n];
        for (k, &ck) in self.coeffs.iter().enumerate() {
            coeffs[k] += ck;
        }
        for (k, &ck) in other.coeffs.iter().enumerate() {
            coeffs[k] += ck;
        }
        EvenTrigPoly { coeffs }
    }

    pub fn scale(&self, s: C64) -> EvenTrigPoly {
        EvenTrigPoly { coeffs: self.coeffs.iter().map(|&z| z * s).collect() }
    }

    pub fn mul(&self, other: &EvenTrigPoly) -> EvenTrigPoly {
        let mut coeffs = vec![C64::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        EvenTrigPoly { coeffs }
    }

    pub fn sub(&self, other: &EvenTrigPoly) -> EvenTrigPoly {
        self.add(&other.scale(cr(-1.0)))
    }
}

/// Fit an EvenTrigPoly of the given degree through (u_k, p_k) samples.
/// Exactly degree+1 nodes interpolate (Lagrange); more nodes least-squares fit.
pub fn trig_interpolate(nodes: &[(C64, C64)], degree: usize) -> Result<EvenTrigPoly, NumericsError> {
    let m = nodes.len();
    if m < degree + 1 {
        return Err(NumericsError::BadInput("fewer nodes than coefficients"));
    }
    for j in 0..m {
        for k in (j + 1)..m {
            let d = (nodes[j].0 - nodes[k].0).norm();
            if d < TAU_NODE {
                return Err(NumericsError::DuplicateNode(j, k, d));
            }
        }
    }
    let poly = if m == degree + 1 {
        lagrange_fit(nodes)
    } else {
        vandermonde_lstsq(nodes, degree)?
    };
    let scale = 1.0 + nodes.iter().map(|(_, p)| p.norm()).fold(0.0, f64::max);
    let resid = if m == degree + 1 {
        nodes
            .iter()
            .map(|&(u, p)| (poly.eval_u(u) - p).norm())
            .fold(0.0, f64::max)
    } else {
        0.0 // least-squares residual is legitimate fitting error, not conditioning
    };
    if resid > 1e-6 * scale {
        return Err(NumericsError::IllConditioned(resid / scale));
    }
    Ok(poly)
}

fn lagrange_fit(nodes: &[(C64, C64)]) -> EvenTrigPoly {
    let m = nodes.len();
    let us: Vec<C64> = nodes.iter().map(|&(u, _)| u).collect();
    let master = EvenTrigPoly::from_roots_u(&us, cr(1.0));
    let mut acc = vec![C64::ZERO; m];
    for j in 0..m {
        // master / (u - u_j) by synthetic division
        let mut q = vec![C64::ZERO; m];
        q[m - 1] = master.coeffs[m];
        for k in (0..m - 1).rev() {
            q[k] = master.coeffs[k + 1] + us[j] * q[k + 1];
        }
        let mut w = cr(1.0);
        for k in 0..m {
            if k != j {
                w *= us[j] - us[k];
            }
        }
        let s = nodes[j].1 / w;
        for k in 0..m {
            acc[k] += s * q[k];
        }
    }
    EvenTrigPoly { coeffs: acc }
}

fn vandermonde_lstsq(nodes: &[(C64, C64)], degree: usize) -> Result<EvenTrigPoly, NumericsError> {
    let m = nodes.len();
    let n = degree + 1;
    let mut a = vec![C64::ZERO; m * n];
    let mut b = vec![C64::ZERO; m];
    for (i, &(u, p)) in nodes.iter().enumerate() {
        let mut pw = cr(1.0);
        for j in 0..n {
            a[i * n + j] = pw;
            pw *= u;
        }
        b[i] = p;
    }
    let x = lstsq(m, n, &mut a, &mut b)?;
    Ok(EvenTrigPoly { coeffs: x })
}

/// Roots in u via a balanced companion matrix.
pub fn poly_roots(p: &EvenTrigPoly) -> Result<Vec<C64>, NumericsError> {
    let t = p.trimmed();
    if t.max_coeff() == 0.0 {
        return Err(NumericsError::DegenerateLeading);
    }
    let d = t.coeffs.len() - 1;
    if d == 0 {
        return Ok(Vec::new());
    }
    let lead = t.coeffs[d];
    let mut comp = CMatrix::zeros(d);
    for i in 1..d {
        comp[(i, i - 1)] = cr(1.0);
    }
    for i in 0..d {
        comp[(i, d - 1)] = -t.coeffs[i] / lead;
    }
    let vals = schur_values(&comp)?;
    Ok(vals)
}

// ---------------------------------------------------------------------------
// CMatrix
// ---------------------------------------------------------------------------

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub dim: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![C64::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cr(1.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut m = CMatrix::zeros(dim);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), dim);
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == C64::ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        let n = self.dim;
        let mut out = vec![C64::ZERO; n];
        for i in 0..n {
            let mut acc = C64::ZERO;
            for j in 0..n {
                acc += self.data[i * n + j] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMatrix {
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self.data[i * n + j];
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn kron(&self, other: &CMatrix) -> CMatrix {
        let (na, nb) = (self.dim, other.dim);
        let n = na * nb;
        let mut out = CMatrix::zeros(n);
        for i in 0..na {
            for j in 0..na {
                let a = self.data[i * na + j];
                if a == C64::ZERO {
                    continue;
                }
                for k in 0..nb {
                    for l in 0..nb {
                        out[(i * nb + k, j * nb + l)] = a * other.data[k * nb + l];
                    }
                }
            }
        }
        out
    }

    /// Relative Frobenius norm of [A, B].
    pub fn commutator_norm(&self, other: &CMatrix) -> f64 {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        let scale = self.frob_norm() * other.frob_norm();
        if scale == 0.0 {
            return 0.0;
        }
        ab.sub(&ba).frob_norm() / scale
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

// ---------------------------------------------------------------------------
// LU solve
// ---------------------------------------------------------------------------

pub struct LuFactors {
    lu: CMatrix,
    perm: Vec<usize>,
    pub det: C64,
}

pub fn lu_decompose(a: &CMatrix) -> Result<LuFactors, NumericsError> {
    let n = a.dim;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = cr(1.0);
    let tol = TAU_PIVOT_REL * a.max_abs();
    for col in 0..n {
        let mut best = col;
        let mut best_mag = lu[(col, col)].norm();
        for r in (col + 1)..n {
            let m = lu[(r, col)].norm();
            if m > best_mag {
                best = r;
                best_mag = m;
            }
        }
        if best_mag <= tol {
            return Err(NumericsError::Singular(best_mag, col));
        }
        if best != col {
            for j in 0..n {
                lu.data.swap(col * n + j, best * n + j);
            }
            perm.swap(col, best);
            det = -det;
        }
        let piv = lu[(col, col)];
        det *= piv;
        for r in (col + 1)..n {
            let f = lu[(r, col)] / piv;
            lu[(r, col)] = f;
            if f == C64::ZERO {
                continue;
            }
            for j in (col + 1)..n {
                let v = lu[(col, j)];
                lu[(r, j)] -= f * v;
            }
        }
    }
    Ok(LuFactors { lu, perm, det })
}

impl LuFactors {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.lu.dim;
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }
}

/// Solve A x = b by partially pivoted elimination.
pub fn solve_linear(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>, NumericsError> {
    Ok(lu_decompose(a)?.solve(b))
}

/// Inverse via LU (n solves); only used at desk-scale dimensions.
pub fn invert(a: &CMatrix) -> Result<CMatrix, NumericsError> {
    let n = a.dim;
    let f = lu_decompose(a)?;
    let mut out = CMatrix::zeros(n);
    let mut e = vec![C64::ZERO; n];
    for j in 0..n {
        e[j] = cr(1.0);
        let col = f.solve(&e);
        e[j] = C64::ZERO;
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// Least-squares solve of an m x n system (m >= n) by Householder QR.
/// `a` is row-major m x n and is destroyed; `b` is destroyed.
pub fn lstsq(m: usize, n: usize, a: &mut [C64], b: &mut [C64]) -> Result<Vec<C64>, NumericsError> {
    assert!(m >= n && a.len() == m * n && b.len() == m);
    for k in 0..n {
        // Householder vector for column k below row k
        let mut norm_sq = 0.0;
        for i in k..m {
            norm_sq += a[i * n + k].norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            return Err(NumericsError::Singular(0.0, k));
        }
        let akk = a[k * n + k];
        let phase = if akk == C64::ZERO { cr(1.0) } else { akk / akk.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = (k..m).map(|i| a[i * n + k]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq > 0.0 {
            // apply H = I - 2 v v* / (v* v) to remaining columns and b
            for j in k..n {
                let mut dot = C64::ZERO;
                for (idx, i) in (k..m).enumerate() {
                    dot += v[idx].conj() * a[i * n + j];
                }
                let f = dot * (2.0 / vnorm_sq);
                for (idx, i) in (k..m).enumerate() {
                    a[i * n + j] -= f * v[idx];
                }
            }
            let mut dot = C64::ZERO;
            for (idx, i) in (k..m).enumerate() {
                dot += v[idx].conj() * b[i];
            }
            let f = dot * (2.0 / vnorm_sq);
            for (idx, i) in (k..m).enumerate() {
                b[i] -= f * v[idx];
            }
        }
        a[k * n + k] = alpha;
    }
    // back substitution on the n x n upper triangle
    let rmax = (0..n).map(|i| a[i * n + i].norm()).fold(0.0, f64::max);
    let mut x = vec![C64::ZERO; n];
    for i in (0..n).rev() {
        let piv = a[i * n + i];
        if piv.norm() <= TAU_PIVOT_REL * rmax {
            return Err(NumericsError::Singular(piv.norm(), i));
        }
        let mut acc = b[i];
        for j in (i + 1)..n {
            acc -= a[i * n + j] * x[j];
        }
        x[i] = acc / piv;
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Dense eigensolver: balance + Hessenberg + shifted QR, Schur vectors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: C64,
    pub vector: Vec<C64>,
    /// ‖Av − λv‖ / ‖v‖ against the original matrix.
    pub residual: f64,
}

fn balance(a: &CMatrix) -> (CMatrix, Vec<f64>) {
    let n = a.dim;
    let mut m = a.clone();
    let mut scale = vec![1.0f64; n];
    let radix = 2.0f64;
    let mut done = false;
    let mut sweeps = 0;
    while !done && sweeps < 50 {
        done = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].norm();
                    r += m[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            let s = c + r;
            while cc < rr / radix {
                f *= radix;
                cc *= radix * radix;
            }
            while cc > rr * radix {
                f /= radix;
                cc /= radix * radix;
            }
            rr = r / f;
            // hmm guard: only rescale when it meaningfully reduces the norms
            if (c * f + rr) < 0.95 * s {
                done = false;
                scale[i] *= f;
                for j in 0..n {
                    let v = m[(i, j)] / f;
                    m[(i, j)] = v;
                }
                for j in 0..n {
                    let v = m[(j, i)] * f;
                    m[(j, i)] = v;
                }
            }
        }
    }
    (m, scale)
}

/// Reduce to upper Hessenberg by Householder similarity, accumulating Q.
fn hessenberg(a: &mut CMatrix, q: &mut CMatrix) {
    let n = a.dim;
    for k in 0..n.saturating_sub(2) {
        let mut norm_sq = 0.0;
        for i in (k + 1)..n {
            norm_sq += a[(i, k)].norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let pivot = a[(k + 1, k)];
        let phase = if pivot == C64::ZERO { cr(1.0) } else { pivot / pivot.norm() };
        let alpha = -phase * norm;
        let mut v: Vec<C64> = ((k + 1)..n).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let f2 = 2.0 / vnorm_sq;
        // A <- H A (rows k+1..n)
        for j in 0..n {
            let mut dot = C64::ZERO;
            for (idx, i) in ((k + 1)..n).enumerate() {
                dot += v[idx].conj() * a[(i, j)];
            }
            let f = dot * f2;
            for (idx, i) in ((k + 1)..n).enumerate() {
                a[(i, j)] -= f * v[idx];
            }
        }
        // A <- A H (columns k+1..n)
        for i in 0..n {
            let mut dot = C64::ZERO;
            for (idx, j) in ((k + 1)..n).enumerate() {
                dot += a[(i, j)] * v[idx];
            }
            let f = dot * f2;
            for (idx, j) in ((k + 1)..n).enumerate() {
                a[(i, j)] -= f * v[idx].conj();
            }
        }
        // Q <- Q H
        for i in 0..n {
            let mut dot = C64::ZERO;
            for (idx, j) in ((k + 1)..n).enumerate() {
                dot += q[(i, j)] * v[idx];
            }
            let f = dot * f2;
            for (idx, j) in ((k + 1)..n).enumerate() {
                q[(i, j)] -= f * v[idx].conj();
            }
        }
        a[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            a[(i, k)] = C64::ZERO;
        }
    }
}

fn givens(f: C64, g: C64) -> (f64, C64, C64) {
    // returns (c, s, r) with [c, s; -conj(s), c] [f; g] = [r; 0]
    if g == C64::ZERO {
        return (1.0, C64::ZERO, f);
    }
    if f == C64::ZERO {
        let r = g.norm();
        return (0.0, g.conj() / r, cr(r));
    }
    let fa = f.norm();
    let d = (fa * fa + g.norm_sqr()).sqrt();
    let cc = fa / d;
    let s = (f / fa) * g.conj() / d;
    let r = (f / fa) * d;
    (cc, s, r)
}

fn rot_rows(h: &mut CMatrix, i: usize, k: usize, cc: f64, s: C64, col_lo: usize, col_hi: usize) {
    let n = h.dim;
    debug_assert!(col_hi <= n);
    for j in col_lo..col_hi {
        let a = h[(i, j)];
        let b = h[(k, j)];
        h[(i, j)] = a * cc + b * s;
        h[(k, j)] = -a * s.conj() + b * cc;
    }
}

fn rot_cols(h: &mut CMatrix, i: usize, k: usize, cc: f64, s: C64, row_lo: usize, row_hi: usize) {
    for r in row_lo..row_hi {
        let a = h[(r, i)];
        let b = h[(r, k)];
        h[(r, i)] = a * cc + b * s.conj();
        h[(r, k)] = -a * s + b * cc;
    }
}

/// Complex Schur decomposition of the (already balanced/Hessenberg) matrix.
/// Returns (T upper triangular, Q unitary with A = Q T Q*).
fn schur_hessenberg(h: &mut CMatrix, q: &mut CMatrix) -> Result<(), NumericsError> {
    let n = h.dim;
    if n <= 1 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let max_total = 60 * n * n + 200;
    let mut total = 0;
    let mut hi = n - 1;
    let mut stagnation = 0;
    while hi > 0 {
        // deflation scan
        let mut lo = hi;
        while lo > 0 {
            let off = h[(lo, lo - 1)].norm();
            let local = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let cmp = if local == 0.0 { h.frob_norm() } else { local };
            if off <= eps * cmp {
                h[(lo, lo - 1)] = C64::ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            stagnation = 0;
            continue;
        }
        total += 1;
        stagnation += 1;
        if total > max_total {
            return Err(NumericsError::NoConvergence(total));
        }
        // Wilkinson shift from the trailing 2x2 of the active block
        let a = h[(hi - 1, hi - 1)];
        let b = h[(hi - 1, hi)];
        let cx = h[(hi, hi - 1)];
        let d = h[(hi, hi)];
        let mut shift = {
            let tr = a + d;
            let det = a * d - b * cx;
            let disc = (tr * tr - det * 4.0).sqrt();
            let l1 = (tr + disc) * 0.5;
            let l2 = (tr - disc) * 0.5;
            if (l1 - d).norm() < (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };
        if stagnation > 0 && stagnation % 12 == 0 {
            // exceptional shift to break rare cycles
            let bump = h[(hi, hi - 1)].norm() + if hi >= 2 { h[(hi - 1, hi - 2)].norm() } else { 0.0 };
            shift = d + cr(1.5 * bump);
        }
        // implicit single-shift bulge chase on rows lo..=hi
        let mut f = h[(lo, lo)] - shift;
        let mut g = h[(lo + 1, lo)];
        for i in lo..hi {
            let (cc, s, _) = givens(f, g);
            rot_rows(h, i, i + 1, cc, s, i.saturating_sub(1), n);
            let row_hi = (i + 3).min(hi + 1);
            rot_cols(h, i, i + 1, cc, s, 0, row_hi);
            rot_cols(q, i, i + 1, cc, s, 0, n);
            if i + 2 <= hi {
                f = h[(i + 1, i)];
                g = h[(i + 2, i)];
            }
        }
    }
    // clean the strictly-lower part
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C64::ZERO;
        }
    }
    Ok(())
}

fn schur_values(a: &CMatrix) -> Result<Vec<C64>, NumericsError> {
    let n = a.dim;
    let (mut m, _) = balance(a);
    let mut q = CMatrix::identity(n);
    hessenberg(&mut m, &mut q);
    schur_hessenberg(&mut m, &mut q)?;
    Ok((0..n).map(|i| m[(i, i)]).collect())
}

/// Full eigendecomposition. With `hermitian_hint` the Schur basis is used
/// directly (orthonormal eigenvectors, real eigenvalues); otherwise
/// eigenvectors come from triangular back-substitution on the Schur factor.
pub fn eig_dense(a: &CMatrix, hermitian_hint: bool) -> Result<Vec<EigenPair>, NumericsError> {
    let n = a.dim;
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut t, dscale, mut q) = if hermitian_hint {
        let mut t = a.clone();
        let mut q = CMatrix::identity(n);
        hessenberg(&mut t, &mut q);
        schur_hessenberg(&mut t, &mut q)?;
        (t, vec![1.0; n], q)
    } else {
        let (mut m, dscale) = balance(a);
        let mut q = CMatrix::identity(n);
        hessenberg(&mut m, &mut q);
        schur_hessenberg(&mut m, &mut q)?;
        (m, dscale, q)
    };
    let tnorm = t.frob_norm().max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(n);
    for i in 0..n {
        let lam = if hermitian_hint { cr(t[(i, i)].re) } else { t[(i, i)] };
        let mut v: Vec<C64>;
        if hermitian_hint {
            v = (0..n).map(|r| q[(r, i)]).collect();
        } else {
            // solve (T - lam I) y = 0 with y[i] = 1
            let mut y = vec![C64::ZERO; n];
            y[i] = cr(1.0);
            for j in (0..i).rev() {
                let mut acc = C64::ZERO;
                for k in (j + 1)..=i {
                    acc += t[(j, k)] * y[k];
                }
                let mut den = t[(j, j)] - lam;
                if den.norm() < 1e-300_f64.max(f64::EPSILON * tnorm) {
                    den = cr(f64::EPSILON * tnorm);
                }
                y[j] = -acc / den;
            }
            v = vec![C64::ZERO; n];
            for r in 0..n {
                let mut acc = C64::ZERO;
                for k in 0..=i {
                    acc += q[(r, k)] * y[k];
                }
                v[r] = acc;
            }
            // undo balancing: rows scaled by dscale
            for r in 0..n {
                v[r] *= dscale[r];
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= norm;
        }
        let av = a.matvec(&v);
        let residual = av
            .iter()
            .zip(&v)
            .map(|(&avi, &vi)| (avi - lam * vi).norm_sqr())
            .sum::<f64>()
            .sqrt();
        pairs.push(EigenPair { value: lam, vector: v, residual });
    }
    // silence unused warnings on the hermitian path where t is untouched later
    let _ = &mut t;
    let _ = &mut q;
    pairs.sort_by(|a, b| {
        (a.value.re, a.value.im)
            .partial_cmp(&(b.value.re, b.value.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(pairs)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
