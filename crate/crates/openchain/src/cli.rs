//! Configuration ingestion, seeded parameter resolution, check orchestration,
//! and report persistence for the verification binary.
//!
//! A run is described by a JSON `RunConfig` (schema 1, unknown fields
//! rejected). Resolution turns it into concrete chain and boundary data,
//! sampling anything requested as `"random(seed)"` or by regime tag with a
//! ChaCha stream derived from the run seed, so identical configs produce
//! byte-identical reports apart from the wall-time field. Checks execute in
//! dependency order; a check that cannot run because its mathematical
//! preconditions fail (diagonal boundary, genericity violation, inapplicable
//! limit) is reported as `skip`, while numerical violations are `fail`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::rc::Rc;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baxter::{self, BaxterError, BaxterRegime, BaxterReport};
use crate::model6v::{
    self, random_complex_box, sample_generic_boundary, sample_generic_chain, transfer, Block2,
    BoundaryParams, ChainParams, ModelError, TransferFamily, TAU_GEN,
};
use crate::numerics::{
    c, cr, eig_dense, lstsq, trig_interpolate, C64, CMatrix, EvenTrigPoly, TAU_PIVOT_REL,
};
use crate::sov::{self, SovError, SOVFunctions};
use crate::symmetry::{self, SymmetryError, Z2Triple};
use crate::xxx::{self, XXXBoundary, XXXError, XXXFamily, XXXFunctions};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_N: usize = 6;

/// Check execution order; later checks may reuse artifacts of earlier ones.
pub const CHECK_ORDER: [CheckKind; 7] = [
    CheckKind::Structure,
    CheckKind::Spectrum,
    CheckKind::Sov,
    CheckKind::Baxter,
    CheckKind::Bethe,
    CheckKind::Symmetry,
    CheckKind::HomogeneousLimit,
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("chain length must be at least 1")]
    EmptyChain,
    #[error("chain length {n} exceeds the maximum {max}")]
    ChainTooLong { n: usize, max: usize },
    #[error("bad inhomogeneity spec: {0}")]
    BadXi(String),
    #[error("bad boundary spec: {0}")]
    BadBoundary(String),
    #[error("unknown tolerance key `{0}`")]
    UnknownTolerance(String),
    #[error("bad tolerance override `{0}`, expected KEY=VALUE with numeric VALUE")]
    BadOverride(String),
    #[error("regime `{regime}` requires {requirement}")]
    RegimeMismatch { regime: String, requirement: String },
    #[error("io error: {0}")]
    Io(String),
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Xxz,
    Xxx,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Xxz => "xxz",
            ModelKind::Xxx => "xxx",
        }
    }
}

/// Inhomogeneities: explicit values, or one of "random", "random(SEED)",
/// "homogeneous".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum XiSpec {
    Values(Vec<[f64; 2]>),
    Spec(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxzBoundaryConfig {
    pub zeta_plus: [f64; 2],
    pub kappa_plus: [f64; 2],
    pub tau_plus: [f64; 2],
    pub zeta_minus: [f64; 2],
    pub kappa_minus: [f64; 2],
    pub tau_minus: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxxBoundaryConfig {
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub xi_b: [f64; 2],
}

/// Boundary: explicit parameter block, or a tag among "generic",
/// "random(SEED)", "Y_zero(i,m)", "M_lattice", "diagonal",
/// "normal_massless", "normal_massive".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    Spec(String),
    Xxz(XxzBoundaryConfig),
    Xxx(XxxBoundaryConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Structure,
    Spectrum,
    Sov,
    Baxter,
    Bethe,
    Symmetry,
    HomogeneousLimit,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Structure => "structure",
            CheckKind::Spectrum => "spectrum",
            CheckKind::Sov => "sov",
            CheckKind::Baxter => "baxter",
            CheckKind::Bethe => "bethe",
            CheckKind::Symmetry => "symmetry",
            CheckKind::HomogeneousLimit => "homogeneous_limit",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub model: ModelKind,
    pub n: usize,
    /// Anisotropy as [re, im].
    pub eta: [f64; 2],
    #[serde(default)]
    pub xi: Option<XiSpec>,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub checks: Option<Vec<CheckKind>>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub seed: u64,
}

// ---------------------------------------------------------------------------
// Tolerances
// ---------------------------------------------------------------------------

/// Named acceptance thresholds; every key can be overridden from the config
/// or the command line.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    /// Yang-Baxter identity residual.
    pub yang_baxter: f64,
    /// Reflection equation, evenness, commutation, exact central values.
    pub structure: f64,
    /// Asymptotic central coefficient (finite-λ proxy at λ = ±12).
    pub asymptotic: f64,
    /// Eigen-decomposition residual at the anchor.
    pub spectrum: f64,
    /// Minimum pairwise τ separation treated as non-degenerate.
    pub separation: f64,
    /// Quadratic-system residual relative to |q_n|.
    pub sov: f64,
    /// Functional-equation residual on a fresh grid.
    pub baxter: f64,
    /// Bethe-root and node-system residuals.
    pub bethe: f64,
    /// Spectral matching distance under the boundary sign flips.
    pub symmetry_anchor: f64,
    /// τ coefficient-set matching distance under the sign flips.
    pub symmetry_tau: f64,
    /// Functional-equation residual in the homogeneous-limit pipeline.
    pub homogeneous: f64,
    /// Coefficient agreement of F against its closed homogeneous form.
    pub f_coefficients: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            yang_baxter: 1e-12,
            structure: 1e-9,
            asymptotic: 1e-6,
            spectrum: 1e-9,
            separation: sov::TAU_SEP,
            sov: 1e-8,
            baxter: 1e-8,
            bethe: 1e-7,
            symmetry_anchor: 1e-8,
            symmetry_tau: 1e-7,
            homogeneous: 1e-7,
            f_coefficients: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn apply(&mut self, overrides: &BTreeMap<String, f64>) -> Result<(), ConfigError> {
        for (key, &val) in overrides {
            match key.as_str() {
                "yang_baxter" => self.yang_baxter = val,
                "structure" => self.structure = val,
                "asymptotic" => self.asymptotic = val,
                "spectrum" => self.spectrum = val,
                "separation" => self.separation = val,
                "sov" => self.sov = val,
                "baxter" => self.baxter = val,
                "bethe" => self.bethe = val,
                "symmetry_anchor" => self.symmetry_anchor = val,
                "symmetry_tau" => self.symmetry_tau = val,
                "homogeneous" => self.homogeneous = val,
                "f_coefficients" => self.f_coefficients = val,
                _ => return Err(ConfigError::UnknownTolerance(key.clone())),
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum ResolvedBoundary {
    Xxz(BoundaryParams),
    Xxx(XXXBoundary),
}

#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub model: ModelKind,
    pub chain: ChainParams,
    pub boundary: ResolvedBoundary,
    pub checks: Vec<CheckKind>,
    pub tol: Tolerances,
    pub seed: u64,
    pub regime: String,
}

fn cx(v: [f64; 2]) -> C64 {
    c(v[0], v[1])
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Parse "name" or "name(i1,i2,...)" with integer arguments.
fn parse_tag(s: &str) -> Result<(String, Vec<i64>), ConfigError> {
    let bad = |msg: &str| ConfigError::BadBoundary(format!("`{s}`: {msg}"));
    let s = s.trim();
    match s.find('(') {
        None => {
            if s.is_empty() {
                return Err(bad("empty tag"));
            }
            Ok((s.to_string(), Vec::new()))
        }
        Some(open) => {
            if !s.ends_with(')') {
                return Err(bad("missing closing parenthesis"));
            }
            let name = s[..open].trim().to_string();
            let inner = &s[open + 1..s.len() - 1];
            let mut args = Vec::new();
            for part in inner.split(',') {
                let part = part.trim();
                args.push(
                    part.parse::<i64>()
                        .map_err(|_| bad("arguments must be integers"))?,
                );
            }
            Ok((name, args))
        }
    }
}

fn boundary_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED_0002))
}

fn xi_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5EED_0001))
}

fn sample_xxx_boundary(rng: &mut ChaCha8Rng) -> XXXBoundary {
    let draw = |rng: &mut ChaCha8Rng| loop {
        let z = random_complex_box(rng) + cr(0.8);
        if z.norm() > 0.3 {
            return z;
        }
    };
    let p = draw(rng);
    let q = draw(rng);
    let xi_b = loop {
        let z = random_complex_box(rng);
        if z.norm() > 0.2 {
            break z;
        }
    };
    XXXBoundary { p, q, xi_b }
}

/// Sample α, β, τ_+ generically and fix τ_- so Y^{(i,2m)} = 0 exactly.
fn construct_y_zero(
    n: usize,
    eta: C64,
    i: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Result<BoundaryParams, ConfigError> {
    let sign = if i == 0 { 1.0 } else { -1.0 };
    for _ in 0..200 {
        let ap = random_complex_box(rng);
        let bp = random_complex_box(rng) + cr(1.1);
        let am = random_complex_box(rng);
        let bm = random_complex_box(rng) + cr(1.1);
        let tp = random_complex_box(rng);
        let tm = tp - (eta * (n as f64 - 1.0 - 2.0 * m as f64) + (am + ap + bm - bp)) * sign;
        if let Ok(b) = BoundaryParams::from_alpha_beta(ap, bp, tp, am, bm, tm) {
            if b.kappa_plus.norm() > 0.05 && b.kappa_minus.norm() > 0.05 {
                return Ok(b);
            }
        }
    }
    Err(ConfigError::RegimeMismatch {
        regime: format!("Y_zero({i},{m})"),
        requirement: "a nonsingular α/β draw (sampling failed)".into(),
    })
}

/// Place (α_++α_-, β_--β_+, τ_--τ_+) on the η lattice with witness
/// (r1, r2, r3) = (0, …) so the boundary sits inside the discrete family.
fn construct_m_lattice(n: usize, eta: C64, rng: &mut impl Rng) -> Result<BoundaryParams, ConfigError> {
    let r1 = 0usize;
    let r2 = rng.gen_range(0..n);
    // keep r4 = r1 + r3 - r2 inside [0, n)
    let r3 = rng.gen_range(r2..n);
    for _ in 0..200 {
        let ap = random_complex_box(rng);
        let am = eta * (r2 as f64 - r1 as f64) - ap;
        let bp = random_complex_box(rng) + cr(1.1);
        let bm = bp + eta * (r3 as f64 - r2 as f64);
        let tp = random_complex_box(rng);
        let tm = tp + eta * (n as f64 - 1.0 + r3 as f64 - 3.0 * r1 as f64);
        if let Ok(b) = BoundaryParams::from_alpha_beta(ap, bp, tp, am, bm, tm) {
            if b.kappa_plus.norm() > 0.05 && b.kappa_minus.norm() > 0.05 {
                return Ok(b);
            }
        }
    }
    Err(ConfigError::RegimeMismatch {
        regime: "M_lattice".into(),
        requirement: "a nonsingular α/β draw (sampling failed)".into(),
    })
}

/// ζ±, τ± imaginary and κ± real: the transfer matrix is normal for imaginary
/// η and real ξ.
fn construct_massless(rng: &mut ChaCha8Rng) -> BoundaryParams {
    let imag = |rng: &mut ChaCha8Rng| {
        let mag: f64 = rng.gen_range(0.35..0.85);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        c(0.0, mag * s)
    };
    let real = |rng: &mut ChaCha8Rng| {
        let mag: f64 = rng.gen_range(0.3..1.0);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        cr(mag * s)
    };
    BoundaryParams::new(imag(rng), real(rng), imag(rng), imag(rng), real(rng), imag(rng))
}

/// ζ±, κ± real and τ± imaginary: normal for real η and imaginary ξ.
fn construct_massive(rng: &mut ChaCha8Rng) -> BoundaryParams {
    let real = |rng: &mut ChaCha8Rng| {
        let mag: f64 = rng.gen_range(0.4..1.0);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        cr(mag * s)
    };
    let imag = |rng: &mut ChaCha8Rng| {
        let mag: f64 = rng.gen_range(0.1..0.6);
        let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        c(0.0, mag * s)
    };
    BoundaryParams::new(real(rng), real(rng), imag(rng), real(rng), real(rng), imag(rng))
}

impl RunConfig {
    pub fn resolve(&self, max_n: usize) -> Result<ResolvedRun, ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema));
        }
        if self.n == 0 {
            return Err(ConfigError::EmptyChain);
        }
        if self.n > max_n {
            return Err(ConfigError::ChainTooLong { n: self.n, max: max_n });
        }
        let eta = cx(self.eta);

        let mut tol = Tolerances::default();
        tol.apply(&self.tolerances)?;

        // Regime tag drives both boundary construction and xi sampling class.
        let bspec = self
            .boundary
            .clone()
            .unwrap_or(BoundarySpec::Spec("generic".into()));
        let (tag_name, tag_args, explicit) = match &bspec {
            BoundarySpec::Spec(s) => {
                let (name, args) = parse_tag(s)?;
                (name, args, None)
            }
            other => ("explicit".to_string(), Vec::new(), Some(other.clone())),
        };

        let xxz_only = ["Y_zero", "M_lattice", "normal_massless", "normal_massive"];
        if self.model == ModelKind::Xxx && xxz_only.contains(&tag_name.as_str()) {
            return Err(ConfigError::RegimeMismatch {
                regime: tag_name,
                requirement: "the trigonometric model (set \"model\": \"xxz\")".into(),
            });
        }
        if tag_name == "normal_massless" && eta.re.abs() > 1e-9 {
            return Err(ConfigError::RegimeMismatch {
                regime: tag_name,
                requirement: "imaginary eta".into(),
            });
        }
        if tag_name == "normal_massive" && eta.im.abs() > 1e-9 {
            return Err(ConfigError::RegimeMismatch {
                regime: tag_name,
                requirement: "real eta".into(),
            });
        }

        let xi = self.resolve_xi(eta, &tag_name)?;
        let chain = ChainParams::new(self.n, eta, xi);
        let boundary = self.resolve_boundary(&tag_name, &tag_args, explicit, eta)?;

        let checks: Vec<CheckKind> = match &self.checks {
            None => CHECK_ORDER.to_vec(),
            Some(list) => {
                let mut ordered = Vec::new();
                for k in CHECK_ORDER {
                    if list.contains(&k) && !ordered.contains(&k) {
                        ordered.push(k);
                    }
                }
                ordered
            }
        };

        let regime = if explicit_regime(&bspec) {
            "explicit".to_string()
        } else if tag_args.is_empty() {
            tag_name.clone()
        } else {
            let args: Vec<String> = tag_args.iter().map(|a| a.to_string()).collect();
            format!("{tag_name}({})", args.join(","))
        };

        Ok(ResolvedRun {
            model: self.model,
            chain,
            boundary,
            checks,
            tol,
            seed: self.seed,
            regime,
        })
    }

    fn resolve_xi(&self, eta: C64, tag: &str) -> Result<Vec<C64>, ConfigError> {
        let n = self.n;
        let spec = self.xi.clone().unwrap_or(XiSpec::Spec("random".into()));
        match spec {
            XiSpec::Values(v) => {
                if v.len() != n {
                    return Err(ConfigError::BadXi(format!(
                        "expected {n} values, got {}",
                        v.len()
                    )));
                }
                let xi: Vec<C64> = v.into_iter().map(cx).collect();
                if tag == "normal_massless" && xi.iter().any(|z| z.im.abs() > 1e-9) {
                    return Err(ConfigError::RegimeMismatch {
                        regime: tag.to_string(),
                        requirement: "real inhomogeneities".into(),
                    });
                }
                if tag == "normal_massive" && xi.iter().any(|z| z.re.abs() > 1e-9) {
                    return Err(ConfigError::RegimeMismatch {
                        regime: tag.to_string(),
                        requirement: "imaginary inhomogeneities".into(),
                    });
                }
                Ok(xi)
            }
            XiSpec::Spec(s) => {
                let (name, args) = parse_tag(&s).map_err(|_| ConfigError::BadXi(s.clone()))?;
                match name.as_str() {
                    "homogeneous" => Ok(vec![C64::ZERO; n]),
                    "random" => {
                        let mut rng = match args.as_slice() {
                            [] => xi_rng(self.seed),
                            [s] => ChaCha8Rng::seed_from_u64(*s as u64),
                            _ => return Err(ConfigError::BadXi(s.clone())),
                        };
                        Ok(match tag {
                            "normal_massless" => loop {
                                let xi: Vec<C64> =
                                    (0..n).map(|_| cr(rng.gen_range(-0.45..0.45))).collect();
                                let ch = ChainParams::new(n, eta, xi);
                                if ch.is_generic() {
                                    break ch.xi;
                                }
                            },
                            "normal_massive" => loop {
                                let xi: Vec<C64> =
                                    (0..n).map(|_| c(0.0, rng.gen_range(-0.45..0.45))).collect();
                                let ch = ChainParams::new(n, eta, xi);
                                if ch.is_generic() {
                                    break ch.xi;
                                }
                            },
                            _ => match self.model {
                                ModelKind::Xxz => sample_generic_chain(n, eta, &mut rng).xi,
                                ModelKind::Xxx => loop {
                                    let xi: Vec<C64> =
                                        (0..n).map(|_| random_complex_box(&mut rng) * 0.4).collect();
                                    let ch = ChainParams::new(n, eta, xi);
                                    if xxx::xxx_is_generic(&ch) {
                                        break ch.xi;
                                    }
                                },
                            },
                        })
                    }
                    _ => Err(ConfigError::BadXi(s)),
                }
            }
        }
    }

    fn resolve_boundary(
        &self,
        tag: &str,
        args: &[i64],
        explicit: Option<BoundarySpec>,
        eta: C64,
    ) -> Result<ResolvedBoundary, ConfigError> {
        if let Some(spec) = explicit {
            return match (spec, self.model) {
                (BoundarySpec::Xxz(b), ModelKind::Xxz) => {
                    Ok(ResolvedBoundary::Xxz(BoundaryParams::new(
                        cx(b.zeta_plus),
                        cx(b.kappa_plus),
                        cx(b.tau_plus),
                        cx(b.zeta_minus),
                        cx(b.kappa_minus),
                        cx(b.tau_minus),
                    )))
                }
                (BoundarySpec::Xxx(b), ModelKind::Xxx) => Ok(ResolvedBoundary::Xxx(XXXBoundary {
                    p: cx(b.p),
                    q: cx(b.q),
                    xi_b: cx(b.xi_b),
                })),
                _ => Err(ConfigError::BadBoundary(
                    "explicit boundary block does not match the model".into(),
                )),
            };
        }

        let mut rng = match (tag, args) {
            ("random", [s]) => ChaCha8Rng::seed_from_u64(*s as u64),
            ("random", []) => boundary_rng(self.seed),
            ("random", _) => return Err(ConfigError::BadBoundary("random takes one seed".into())),
            _ => boundary_rng(self.seed),
        };

        match self.model {
            ModelKind::Xxx => match tag {
                "generic" | "random" => Ok(ResolvedBoundary::Xxx(sample_xxx_boundary(&mut rng))),
                "diagonal" => {
                    let mut b = sample_xxx_boundary(&mut rng);
                    b.xi_b = C64::ZERO;
                    Ok(ResolvedBoundary::Xxx(b))
                }
                _ => Err(ConfigError::BadBoundary(format!("unknown regime `{tag}`"))),
            },
            ModelKind::Xxz => match tag {
                "generic" | "random" => {
                    Ok(ResolvedBoundary::Xxz(sample_generic_boundary(&mut rng)))
                }
                "diagonal" => {
                    let zeta = |rng: &mut ChaCha8Rng| loop {
                        let z = random_complex_box(rng);
                        if z.sinh().norm() > 0.25 {
                            return z;
                        }
                    };
                    Ok(ResolvedBoundary::Xxz(BoundaryParams::new(
                        zeta(&mut rng),
                        C64::ZERO,
                        C64::ZERO,
                        zeta(&mut rng),
                        C64::ZERO,
                        C64::ZERO,
                    )))
                }
                "Y_zero" => {
                    let (i, m) = match args {
                        [i, m] if (0..=1).contains(i) && *m >= 0 && (*m as usize) <= self.n => {
                            (*i as usize, *m as usize)
                        }
                        _ => {
                            return Err(ConfigError::BadBoundary(
                                "Y_zero takes (i, m) with i in {0,1} and 0 <= m <= n".into(),
                            ))
                        }
                    };
                    Ok(ResolvedBoundary::Xxz(construct_y_zero(
                        self.n, eta, i, m, &mut rng,
                    )?))
                }
                "M_lattice" => Ok(ResolvedBoundary::Xxz(construct_m_lattice(
                    self.n, eta, &mut rng,
                )?)),
                "normal_massless" => Ok(ResolvedBoundary::Xxz(construct_massless(&mut rng))),
                "normal_massive" => Ok(ResolvedBoundary::Xxz(construct_massive(&mut rng))),
                _ => Err(ConfigError::BadBoundary(format!("unknown regime `{tag}`"))),
            },
        }
    }
}

fn explicit_regime(spec: &BoundarySpec) -> bool {
    !matches!(spec, BoundarySpec::Spec(_))
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    /// "pass", "fail", or "skip".
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_max: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn pass(kind: CheckKind, residual: f64, detail: String) -> Self {
        CheckResult {
            check: kind.name().into(),
            status: "pass".into(),
            residual_max: Some(residual),
            detail,
        }
    }

    fn fail(kind: CheckKind, residual: Option<f64>, detail: String) -> Self {
        CheckResult {
            check: kind.name().into(),
            status: "fail".into(),
            residual_max: residual,
            detail,
        }
    }

    fn skip(kind: CheckKind, detail: String) -> Self {
        CheckResult {
            check: kind.name().into(),
            status: "skip".into(),
            residual_max: None,
            detail,
        }
    }

    fn graded(kind: CheckKind, ok: bool, residual: f64, detail: String) -> Self {
        if ok {
            Self::pass(kind, residual, detail)
        } else {
            Self::fail(kind, Some(residual), detail)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub model: String,
    pub n: usize,
    pub seed: u64,
    pub regime: String,
    pub eta: [f64; 2],
    pub xi: Vec<[f64; 2]>,
    pub boundary: BTreeMap<String, [f64; 2]>,
    pub boundary_class: String,
    pub checks: Vec<CheckResult>,
    pub eigenvalue_count: usize,
    pub det_c: Vec<[f64; 2]>,
    pub regime_counts: BTreeMap<String, usize>,
    pub pass: bool,
    /// Wall time only; excluded from determinism comparisons.
    pub wall_ms: u64,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == name)
    }
}

// ---------------------------------------------------------------------------
// Check execution
// ---------------------------------------------------------------------------

/// Why a pipeline stage could not produce its artifact: `skip` for violated
/// mathematical preconditions, otherwise a failure.
#[derive(Debug, Clone)]
struct CheckStop {
    skip: bool,
    msg: String,
}

impl CheckStop {
    fn skip(msg: impl Into<String>) -> Self {
        CheckStop { skip: true, msg: msg.into() }
    }

    fn fail(msg: impl Into<String>) -> Self {
        CheckStop { skip: false, msg: msg.into() }
    }

    fn result(&self, kind: CheckKind) -> CheckResult {
        if self.skip {
            CheckResult::skip(kind, self.msg.clone())
        } else {
            CheckResult::fail(kind, None, self.msg.clone())
        }
    }
}

fn stop_model(e: &ModelError) -> CheckStop {
    match e {
        ModelError::DiagonalBoundary => {
            CheckStop::skip("diagonal boundary (kappa = 0): dressed boundary functions undefined")
        }
        other => CheckStop::fail(other.to_string()),
    }
}

fn stop_sov(e: &SovError) -> CheckStop {
    match e {
        SovError::GenericityViolated => {
            CheckStop::skip("inhomogeneities violate the genericity condition")
        }
        SovError::Model(m) => stop_model(m),
        other => CheckStop::fail(other.to_string()),
    }
}

fn stop_baxter(e: &BaxterError) -> CheckStop {
    match e {
        BaxterError::NotHomogeneous => {
            CheckStop::skip("chain is not homogeneous: limit form not applicable")
        }
        BaxterError::Model(m) => stop_model(m),
        BaxterError::Sov(s) => stop_sov(s),
        other => CheckStop::fail(other.to_string()),
    }
}

fn stop_symmetry(e: &SymmetryError) -> CheckStop {
    match e {
        SymmetryError::Model(m) => stop_model(m),
        SymmetryError::Sov(s) => stop_sov(s),
        other => CheckStop::fail(other.to_string()),
    }
}

fn stop_xxx(e: &XXXError) -> CheckStop {
    match e {
        XXXError::GenericityViolated => {
            CheckStop::skip("inhomogeneities violate the genericity condition")
        }
        other => CheckStop::fail(other.to_string()),
    }
}

fn fmt_res(v: f64) -> String {
    format!("{v:.2e}")
}

/// 4x4 permutation matrix swapping the two auxiliary spaces.
fn swap2() -> CMatrix {
    let mut p = CMatrix::zeros(4);
    p[(0, 0)] = cr(1.0);
    p[(1, 2)] = cr(1.0);
    p[(2, 1)] = cr(1.0);
    p[(3, 3)] = cr(1.0);
    p
}

fn unit_entry(r: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2);
    m[(r, col)] = cr(1.0);
    m
}

/// Σ e(i,j) ⊗ 1₂ ⊗ B_{ij}: the double-row monodromy acting on the first
/// auxiliary space.
fn embed_first(b: &Block2) -> CMatrix {
    let i2 = CMatrix::identity(2);
    unit_entry(0, 0)
        .kron(&i2)
        .kron(&b.a)
        .add(&unit_entry(0, 1).kron(&i2).kron(&b.b))
        .add(&unit_entry(1, 0).kron(&i2).kron(&b.c))
        .add(&unit_entry(1, 1).kron(&i2).kron(&b.d))
}

/// Σ 1₂ ⊗ e(i,j) ⊗ B_{ij}: the same operator on the second auxiliary space.
fn embed_second(b: &Block2) -> CMatrix {
    let i2 = CMatrix::identity(2);
    i2.kron(&unit_entry(0, 0))
        .kron(&b.a)
        .add(&i2.kron(&unit_entry(0, 1)).kron(&b.b))
        .add(&i2.kron(&unit_entry(1, 0)).kron(&b.c))
        .add(&i2.kron(&unit_entry(1, 1)).kron(&b.d))
}

fn yang_baxter_residual(rm: impl Fn(C64) -> CMatrix, lam: C64, mu: C64) -> f64 {
    let i2 = CMatrix::identity(2);
    let p = swap2();
    let s23 = i2.kron(&p);
    let r12 = rm(lam - mu).kron(&i2);
    let r23 = i2.kron(&rm(mu));
    let r13 = s23.matmul(&rm(lam).kron(&i2)).matmul(&s23);
    let lhs = r12.matmul(&r13).matmul(&r23);
    let rhs = r23.matmul(&r13).matmul(&r12);
    lhs.sub(&rhs).frob_norm() / lhs.frob_norm()
}

fn reflection_residual(
    rm: impl Fn(C64) -> CMatrix,
    u_lam: &Block2,
    u_mu: &Block2,
    lam: C64,
    mu: C64,
    eta: C64,
    dq: usize,
) -> f64 {
    let iq = CMatrix::identity(dq);
    let p = swap2();
    let u1 = embed_first(u_lam);
    let u2 = embed_second(u_mu);
    let r12 = |x: C64| rm(x).kron(&iq);
    let r21 = |x: C64| p.matmul(&rm(x)).matmul(&p).kron(&iq);
    let lhs = r12(lam - mu)
        .matmul(&u1)
        .matmul(&r21(lam + mu - eta))
        .matmul(&u2);
    let rhs = u2
        .matmul(&r12(lam + mu - eta))
        .matmul(&u1)
        .matmul(&r21(lam - mu));
    lhs.sub(&rhs).frob_norm() / lhs.frob_norm()
}

/// Fit grid for the homogeneous-limit functional equation, kept away from
/// the **A** poles (the iπ/2 lattice for the trigonometric model, 0 for the
/// rational one).
fn fit_grid(count: usize, seed: u64, trig: bool) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let z = c(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2));
        let ok = if trig {
            sov::dist_to_pole(z) > 0.15
        } else {
            z.norm() > 0.25
        };
        if ok {
            pts.push(z);
        }
    }
    pts
}

struct HomogRecord {
    residual: f64,
}

// ---------------------------------------------------------------------------
// XXZ pipeline
// ---------------------------------------------------------------------------

struct XxzCtx {
    fam: TransferFamily,
    seed: u64,
    fns: Option<Result<Rc<SOVFunctions>, CheckStop>>,
    records: Option<Result<Rc<Vec<sov::SpectrumRecord>>, CheckStop>>,
    baxter: Option<Result<Rc<Vec<BaxterReport>>, CheckStop>>,
    eig_count: Option<usize>,
    det_c: Vec<C64>,
    regime_counts: BTreeMap<String, usize>,
}

impl XxzCtx {
    fn new(chain: ChainParams, bp: BoundaryParams, seed: u64) -> Self {
        XxzCtx {
            fam: TransferFamily { chain, boundary: bp },
            seed,
            fns: None,
            records: None,
            baxter: None,
            eig_count: None,
            det_c: Vec::new(),
            regime_counts: BTreeMap::new(),
        }
    }

    fn fns(&mut self) -> Result<Rc<SOVFunctions>, CheckStop> {
        if self.fns.is_none() {
            self.fns = Some(
                SOVFunctions::build(&self.fam)
                    .map(Rc::new)
                    .map_err(|e| stop_sov(&e)),
            );
        }
        self.fns.clone().unwrap()
    }

    fn records(&mut self) -> Result<Rc<Vec<sov::SpectrumRecord>>, CheckStop> {
        if self.records.is_none() {
            let r = match self.fns() {
                Err(stop) => Err(stop),
                Ok(fns) => sov::spectrum_extract(&self.fam, &fns)
                    .map(Rc::new)
                    .map_err(|e| stop_sov(&e)),
            };
            if let Ok(recs) = &r {
                self.eig_count = Some(recs.len());
            }
            self.records = Some(r);
        }
        self.records.clone().unwrap()
    }

    fn baxter_reports(&mut self) -> Result<Rc<Vec<BaxterReport>>, CheckStop> {
        if self.baxter.is_none() {
            let r = match (self.fns(), self.records()) {
                (Ok(fns), Ok(recs)) => {
                    let mut out = Vec::with_capacity(recs.len());
                    let mut err = None;
                    for rec in recs.iter() {
                        match baxter::baxter_report(&rec.tau, &fns, &self.fam.boundary) {
                            Ok(rep) => out.push(rep),
                            Err(e) => {
                                err = Some(stop_baxter(&e));
                                break;
                            }
                        }
                    }
                    match err {
                        Some(stop) => Err(stop),
                        None => Ok(Rc::new(out)),
                    }
                }
                (Err(stop), _) | (_, Err(stop)) => Err(stop),
            };
            if let Ok(reps) = &r {
                self.det_c = reps.iter().map(|rep| rep.det_c).collect();
                for rep in reps.iter() {
                    let key = match rep.regime {
                        BaxterRegime::Inhomogeneous => "inhomogeneous",
                        BaxterRegime::HomogeneousFull => "homogeneous_full",
                        BaxterRegime::HomogeneousPartial => "homogeneous_partial",
                    };
                    *self.regime_counts.entry(key.into()).or_insert(0) += 1;
                }
            }
            self.baxter = Some(r);
        }
        self.baxter.clone().unwrap()
    }

    fn check_structure(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Structure;
        let eta = self.fam.chain.eta;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x5EED_0003));
        let rm = |x: C64| model6v::r_matrix(x, eta);

        let mut yb = 0.0f64;
        for _ in 0..3 {
            let lam = random_complex_box(&mut rng);
            let mu = random_complex_box(&mut rng);
            yb = yb.max(yang_baxter_residual(rm, lam, mu));
        }

        let dq = 1 << self.fam.chain.n;
        let mut re = 0.0f64;
        let mut even = 0.0f64;
        let mut comm = 0.0f64;
        let mut central = 0.0f64;
        let mut asym: Option<f64> = None;
        let step = (|| -> Result<(), ModelError> {
            for _ in 0..2 {
                let lam = random_complex_box(&mut rng);
                let mu = random_complex_box(&mut rng);
                let ul = model6v::u_minus_blocks(lam, &self.fam)?;
                let um = model6v::u_minus_blocks(mu, &self.fam)?;
                re = re.max(reflection_residual(rm, &ul, &um, lam, mu, eta, dq));
                let t1 = transfer(lam, &self.fam)?;
                let t2 = transfer(mu, &self.fam)?;
                even = even.max(t1.sub(&transfer(-lam, &self.fam)?).frob_norm() / t1.frob_norm());
                comm = comm.max(t1.commutator_norm(&t2));
            }
            let cv = model6v::central_values(&self.fam)?;
            let ident = CMatrix::identity(dq);
            let te = transfer(eta * 0.5, &self.fam)?;
            central = central.max(
                te.sub(&ident.scale(cv.at_eta_half)).max_abs() / (1.0 + cv.at_eta_half.norm()),
            );
            let ipi2 = c(0.0, std::f64::consts::FRAC_PI_2);
            let tc = transfer(eta * 0.5 - ipi2, &self.fam)?;
            central = central.max(
                tc.sub(&ident.scale(cv.at_eta_half_ipi_half)).max_abs()
                    / (1.0 + cv.at_eta_half_ipi_half.norm()),
            );
            if cv.asymptotic.norm() > 1e-12 {
                let mut worst = 0.0f64;
                for sgn in [1.0, -1.0] {
                    let lam = cr(12.0 * sgn);
                    let t = transfer(lam, &self.fam)?;
                    let scalefac = (-lam * (2 * (self.fam.chain.n as i32 + 2)) as f64 * sgn).exp();
                    let resid = t.scale(scalefac).sub(&ident.scale(cv.asymptotic)).max_abs()
                        / cv.asymptotic.norm();
                    worst = worst.max(resid);
                }
                asym = Some(worst);
            }
            Ok(())
        })();
        if let Err(e) = step {
            return stop_model(&e).result(kind);
        }

        let strict = re.max(even).max(comm).max(central);
        let ok = yb < tol.yang_baxter
            && strict < tol.structure
            && asym.map_or(true, |a| a < tol.asymptotic);
        let detail = format!(
            "yb={} re={} even={} comm={} central={} asym={}",
            fmt_res(yb),
            fmt_res(re),
            fmt_res(even),
            fmt_res(comm),
            fmt_res(central),
            asym.map_or("na (kappa = 0)".into(), fmt_res),
        );
        CheckResult::graded(kind, ok, yb.max(strict), detail)
    }

    fn check_spectrum(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Spectrum;
        let recs = match self.records() {
            Ok(r) => r,
            Err(stop) => return stop.result(kind),
        };
        let dim = 1usize << self.fam.chain.n;
        let worst = recs.iter().map(|r| r.eig_residual).fold(0.0f64, f64::max);
        let mut sep = f64::INFINITY;
        for i in 0..recs.len() {
            for j in (i + 1)..recs.len() {
                sep = sep.min(recs[i].tau.sub(&recs[j].tau).max_coeff());
            }
        }
        let ok = recs.len() == dim && worst < tol.spectrum && sep > tol.separation;
        let detail = format!(
            "eigenvalues={}/{} eig_residual={} separation={}",
            recs.len(),
            dim,
            fmt_res(worst),
            fmt_res(sep),
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_sov(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Sov;
        let (fns, recs) = match (self.fns(), self.records()) {
            (Ok(f), Ok(r)) => (f, r),
            (Err(stop), _) | (_, Err(stop)) => return stop.result(kind),
        };
        let mut worst = 0.0f64;
        for rec in recs.iter() {
            let res = sov::sov_residual(&rec.x, &fns, &fns.q);
            for (a, r) in res.iter().enumerate() {
                worst = worst.max(r / fns.q[a].norm());
            }
        }
        let ok = worst < tol.sov;
        let detail = format!(
            "states={} quadratic_residual_rel={}",
            recs.len(),
            fmt_res(worst)
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_baxter(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Baxter;
        let reps = match self.baxter_reports() {
            Ok(r) => r,
            Err(stop) => return stop.result(kind),
        };
        let dim = 1usize << self.fam.chain.n;
        let worst = reps
            .iter()
            .map(|r| r.baxter_residual)
            .fold(0.0f64, f64::max);
        let mut distinct = f64::INFINITY;
        for i in 0..reps.len() {
            for j in (i + 1)..reps.len() {
                distinct = distinct.min(reps[i].q.form.sub(&reps[j].q.form).max_coeff());
            }
        }
        let ok = reps.len() == dim && worst < tol.baxter && distinct > 1e-6;
        let detail = format!(
            "q_count={}/{} grid_residual={} q_separation={}",
            reps.len(),
            dim,
            fmt_res(worst),
            fmt_res(distinct),
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_bethe(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Bethe;
        let reps = match self.baxter_reports() {
            Ok(r) => r,
            Err(stop) => return stop.result(kind),
        };
        let mut worst = 0.0f64;
        let mut roots = 0usize;
        let mut expect = 0usize;
        for rep in reps.iter() {
            roots += rep.q.roots_lambda.len();
            // reduced states carry the accepted lower degree, all others N
            expect += match rep.regime {
                BaxterRegime::HomogeneousPartial => rep.q.degree(),
                _ => self.fam.chain.n,
            };
            for r in &rep.bae_residuals {
                worst = worst.max(*r);
            }
        }
        let ok = worst < tol.bethe && roots == expect;
        let detail = format!("roots={roots}/{expect} bethe_residual={}", fmt_res(worst));
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_symmetry(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Symmetry;
        let mut worst_anchor = 0.0f64;
        let mut worst_tau = 0.0f64;
        for eps in Z2Triple::all() {
            if eps.is_identity() {
                continue;
            }
            let bp2 = match symmetry::apply_z2(&self.fam.boundary, eps) {
                Ok(b) => b,
                Err(e) => return stop_symmetry(&e).result(kind),
            };
            let fam2 = TransferFamily {
                chain: self.fam.chain.clone(),
                boundary: bp2,
            };
            match symmetry::isospectral_check(&self.fam, &fam2) {
                Ok(rep) => {
                    worst_anchor = worst_anchor.max(rep.anchor_distance);
                    worst_tau = worst_tau.max(rep.tau_distance);
                }
                Err(e) => return stop_symmetry(&e).result(kind),
            }
        }
        let variant = match symmetry::select_variant(
            &self.fam.boundary,
            self.fam.chain.n,
            self.fam.chain.eta,
        ) {
            Ok(v) => v,
            Err(e) => return stop_symmetry(&e).result(kind),
        };
        let variant_str = match variant {
            None => "none".to_string(),
            Some(eps) => format!("({},{},{})", eps.eps_tau, eps.eps_alpha, eps.eps_beta),
        };
        let ok = worst_anchor < tol.symmetry_anchor && worst_tau < tol.symmetry_tau;
        let detail = format!(
            "flips=7 anchor_distance={} tau_distance={} variant={}",
            fmt_res(worst_anchor),
            fmt_res(worst_tau),
            variant_str,
        );
        CheckResult::graded(kind, ok, worst_anchor.max(worst_tau), detail)
    }

    /// Homogeneous-limit pipeline: eigenvectors from a dense anchor
    /// diagonalization, τ by interpolation through Rayleigh quotients, Q by a
    /// least-squares fit of the limiting functional equation, acceptance by a
    /// fresh-grid residual. Completeness here is conjectural, and the report
    /// says so.
    fn check_homogeneous(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::HomogeneousLimit;
        if !self.fam.chain.is_homogeneous() {
            return CheckResult::skip(
                kind,
                "chain is not homogeneous: limit pipeline not applicable".into(),
            );
        }
        let forms = match baxter::xxx_style_f_homogeneous_limit(&self.fam.boundary, &self.fam.chain)
        {
            Ok(f) => f,
            Err(e) => return stop_baxter(&e).result(kind),
        };
        let n = self.fam.chain.n;
        let eta = self.fam.chain.eta;
        let dim = 1usize << n;

        let records = match self.homog_records(n, eta, dim, &forms, tol) {
            Ok(r) => r,
            Err(stop) => return stop.result(kind),
        };
        self.eig_count.get_or_insert(records.len());

        let worst = records.iter().map(|r| r.residual).fold(0.0f64, f64::max);
        let ok = records.len() == dim && worst < tol.homogeneous;
        let detail = format!(
            "eigenvalues={}/{} f0={} grid_residual={} completeness=conjectural",
            records.len(),
            dim,
            fmt_res(forms.f_0.norm()),
            fmt_res(worst),
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn homog_records(
        &self,
        n: usize,
        eta: C64,
        dim: usize,
        forms: &baxter::HomogeneousLimitForms,
        _tol: &Tolerances,
    ) -> Result<Vec<HomogRecord>, CheckStop> {
        // Anchor diagonalization: commuting family, so one vector set serves
        // every λ.
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x5EED_0004));
        let anchor = eta * 0.5 + c(0.41, 0.23);
        let t_anchor = transfer(anchor, &self.fam).map_err(|e| stop_model(&e))?;
        let pairs = eig_dense(&t_anchor, false).map_err(|e| CheckStop::fail(e.to_string()))?;
        if pairs.len() != dim {
            return Err(CheckStop::fail(format!(
                "anchor diagonalization returned {} of {dim} eigenpairs",
                pairs.len()
            )));
        }

        // Rayleigh nodes for the τ interpolation, distinct in u = cosh 2λ.
        let mut nodes_lambda = Vec::with_capacity(n + 3);
        while nodes_lambda.len() < n + 3 {
            let z = eta * 0.5 + c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let u = (z * 2.0).cosh();
            if nodes_lambda
                .iter()
                .all(|&(_, un): &(C64, C64)| (un - u).norm() > 1e-3)
            {
                nodes_lambda.push((z, u));
            }
        }
        let node_ts: Vec<CMatrix> = nodes_lambda
            .iter()
            .map(|&(z, _)| transfer(z, &self.fam))
            .collect::<Result<_, _>>()
            .map_err(|e| stop_model(&e))?;

        let grid = fit_grid(2 * n + 10, self.seed.wrapping_add(0x5EED_0005), true);
        let fresh = fit_grid(2 * n + 12, self.seed.wrapping_add(0x5EED_0006), true);
        let two_n = cr(2.0f64.powi(n as i32));

        let mut out = Vec::with_capacity(dim);
        for pair_ in &pairs {
            let v = &pair_.vector;
            let norm2: C64 = v.iter().map(|z| z * z.conj()).sum();
            let samples: Vec<(C64, C64)> = node_ts
                .iter()
                .zip(nodes_lambda.iter())
                .map(|(tm, &(_, u))| {
                    let tv = tm.matvec(v);
                    let num: C64 = v.iter().zip(tv.iter()).map(|(a, b)| a.conj() * b).sum();
                    (u, num / norm2)
                })
                .collect();
            let tau = trig_interpolate(&samples, n + 2)
                .map_err(|e| CheckStop::fail(format!("tau interpolation: {e}")))?;

            // τ(λ) Q(λ) = **A**(λ) Q(λ−η) + **A**(−λ) Q(λ+η) + F(λ), linear in
            // the N free coefficients of Q once the leading 2^N is pinned.
            let rows = grid.len();
            let mut a = vec![C64::ZERO; rows * n];
            let mut b = vec![C64::ZERO; rows];
            for (r, &lam) in grid.iter().enumerate() {
                let ap = forms.big_a(lam).map_err(|e| stop_baxter(&e))?;
                let am = forms.big_a(-lam).map_err(|e| stop_baxter(&e))?;
                let tv = tau.eval(lam);
                let u = (lam * 2.0).cosh();
                let um = ((lam - eta) * 2.0).cosh();
                let up = ((lam + eta) * 2.0).cosh();
                let mut pu = cr(1.0);
                let mut pm = cr(1.0);
                let mut pp = cr(1.0);
                for k in 0..n {
                    a[r * n + k] = tv * pu - ap * pm - am * pp;
                    pu *= u;
                    pm *= um;
                    pp *= up;
                }
                b[r] = forms.big_f(lam) - two_n * (tv * pu - ap * pm - am * pp);
            }
            let sol =
                lstsq(rows, n, &mut a, &mut b).map_err(|e| CheckStop::fail(e.to_string()))?;
            let mut coeffs = sol;
            coeffs.push(two_n);
            let q = EvenTrigPoly::new(coeffs);

            let mut worst = 0.0f64;
            for &lam in &fresh {
                let ap = forms.big_a(lam).map_err(|e| stop_baxter(&e))?;
                let am = forms.big_a(-lam).map_err(|e| stop_baxter(&e))?;
                let tq = tau.eval(lam) * q.eval_u((lam * 2.0).cosh());
                let rhs = ap * q.eval_u(((lam - eta) * 2.0).cosh())
                    + am * q.eval_u(((lam + eta) * 2.0).cosh())
                    + forms.big_f(lam);
                worst = worst.max((tq - rhs).norm() / (1.0 + tq.norm()));
            }
            out.push(HomogRecord { residual: worst });
        }
        Ok(out)
    }

    fn boundary_class(&self) -> String {
        match sov::classify_boundary(&self.fam.boundary, self.fam.chain.n, self.fam.chain.eta) {
            Err(ModelError::DiagonalBoundary) => "diagonal".into(),
            Err(e) => format!("unclassified ({e})"),
            Ok(class) => {
                let mut parts = Vec::new();
                if !class.y_zero.is_empty() {
                    let ys: Vec<String> = class
                        .y_zero
                        .iter()
                        .map(|(i, r)| format!("({i},{r})"))
                        .collect();
                    parts.push(format!("y_zero[{}]", ys.join(",")));
                }
                if class.in_n_sov {
                    parts.push("n_sov".into());
                }
                if let Some((r1, r2, r3)) = class.m_triple {
                    parts.push(format!("m_lattice({r1},{r2},{r3})"));
                }
                if parts.is_empty() {
                    "generic".into()
                } else {
                    parts.join("+")
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// XXX pipeline
// ---------------------------------------------------------------------------

struct XxxCtx {
    fam: XXXFamily,
    seed: u64,
    fns: Option<Result<Rc<XXXFunctions>, CheckStop>>,
    records: Option<Result<Rc<Vec<xxx::XXXSpectrumRecord>>, CheckStop>>,
    solves: Option<Result<Rc<Vec<xxx::XXXQSolve>>, CheckStop>>,
    eig_count: Option<usize>,
    det_c: Vec<C64>,
}

impl XxxCtx {
    fn new(chain: ChainParams, bp: XXXBoundary, seed: u64) -> Self {
        XxxCtx {
            fam: XXXFamily::new(chain, bp),
            seed,
            fns: None,
            records: None,
            solves: None,
            eig_count: None,
            det_c: Vec::new(),
        }
    }

    fn fns(&mut self) -> Result<Rc<XXXFunctions>, CheckStop> {
        if self.fns.is_none() {
            self.fns = Some(
                XXXFunctions::build(&self.fam)
                    .map(Rc::new)
                    .map_err(|e| stop_xxx(&e)),
            );
        }
        self.fns.clone().unwrap()
    }

    fn records(&mut self) -> Result<Rc<Vec<xxx::XXXSpectrumRecord>>, CheckStop> {
        if self.records.is_none() {
            let r = match self.fns() {
                Err(stop) => Err(stop),
                Ok(fns) => xxx::xxx_spectrum(&self.fam, &fns)
                    .map(Rc::new)
                    .map_err(|e| stop_xxx(&e)),
            };
            if let Ok(recs) = &r {
                self.eig_count = Some(recs.len());
            }
            self.records = Some(r);
        }
        self.records.clone().unwrap()
    }

    fn q_solves(&mut self) -> Result<Rc<Vec<xxx::XXXQSolve>>, CheckStop> {
        if self.solves.is_none() {
            let r = if self.fam.boundary.xi_b.norm() < TAU_GEN {
                Err(CheckStop::skip(
                    "xi_b = 0: F vanishes and the monic inhomogeneous description degenerates",
                ))
            } else {
                match (self.fns(), self.records()) {
                    (Ok(fns), Ok(recs)) => {
                        let mut out = Vec::with_capacity(recs.len());
                        let mut err = None;
                        for rec in recs.iter() {
                            match xxx::xxx_solve_q(&rec.tau, &fns) {
                                Ok(s) => out.push(s),
                                Err(e) => {
                                    err = Some(stop_xxx(&e));
                                    break;
                                }
                            }
                        }
                        match err {
                            Some(stop) => Err(stop),
                            None => Ok(Rc::new(out)),
                        }
                    }
                    (Err(stop), _) | (_, Err(stop)) => Err(stop),
                }
            };
            if let Ok(solves) = &r {
                self.det_c = solves.iter().map(|s| s.det_c).collect();
            }
            self.solves = Some(r);
        }
        self.solves.clone().unwrap()
    }

    fn check_structure(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Structure;
        let eta = self.fam.chain.eta;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x5EED_0003));
        let rm = |x: C64| xxx::xxx_r_matrix(x, eta);

        let mut yb = 0.0f64;
        for _ in 0..3 {
            let lam = random_complex_box(&mut rng);
            let mu = random_complex_box(&mut rng);
            yb = yb.max(yang_baxter_residual(rm, lam, mu));
        }

        let dq = 1 << self.fam.chain.n;
        let mut re = 0.0f64;
        let mut even = 0.0f64;
        let mut comm = 0.0f64;
        for _ in 0..2 {
            let lam = random_complex_box(&mut rng);
            let mu = random_complex_box(&mut rng);
            let ul = xxx::u_minus_blocks(lam, &self.fam);
            let um = xxx::u_minus_blocks(mu, &self.fam);
            re = re.max(reflection_residual(rm, &ul, &um, lam, mu, eta, dq));
            let t1 = xxx::xxx_transfer(lam, &self.fam);
            let t2 = xxx::xxx_transfer(mu, &self.fam);
            even =
                even.max(t1.sub(&xxx::xxx_transfer(-lam, &self.fam)).frob_norm() / t1.frob_norm());
            comm = comm.max(t1.commutator_norm(&t2));
        }

        let central = match xxx::xxx_big_a(eta * 0.5, &self.fam) {
            Err(e) => return stop_xxx(&e).result(kind),
            Ok(a_half) => {
                let te = xxx::xxx_transfer(eta * 0.5, &self.fam);
                te.sub(&CMatrix::identity(dq).scale(a_half)).max_abs() / (1.0 + a_half.norm())
            }
        };

        let strict = re.max(even).max(comm).max(central);
        let ok = yb < tol.yang_baxter && strict < tol.structure;
        let detail = format!(
            "yb={} re={} even={} comm={} central={} asym=na (polynomial family)",
            fmt_res(yb),
            fmt_res(re),
            fmt_res(even),
            fmt_res(comm),
            fmt_res(central),
        );
        CheckResult::graded(kind, ok, yb.max(strict), detail)
    }

    fn check_spectrum(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Spectrum;
        let recs = match self.records() {
            Ok(r) => r,
            Err(stop) => return stop.result(kind),
        };
        let dim = 1usize << self.fam.chain.n;
        let worst = recs.iter().map(|r| r.eig_residual).fold(0.0f64, f64::max);
        let mut sep = f64::INFINITY;
        for i in 0..recs.len() {
            for j in (i + 1)..recs.len() {
                sep = sep.min(recs[i].tau.sub(&recs[j].tau).max_coeff());
            }
        }
        let ok = recs.len() == dim && worst < tol.spectrum && sep > tol.separation;
        let detail = format!(
            "eigenvalues={}/{} eig_residual={} separation={}",
            recs.len(),
            dim,
            fmt_res(worst),
            fmt_res(sep),
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_sov(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Sov;
        let (fns, recs) = match (self.fns(), self.records()) {
            (Ok(f), Ok(r)) => (f, r),
            (Err(stop), _) | (_, Err(stop)) => return stop.result(kind),
        };
        let mut worst = 0.0f64;
        for rec in recs.iter() {
            let res = xxx::xxx_sov_residual(&rec.x, &fns, &fns.q);
            for (a, r) in res.iter().enumerate() {
                worst = worst.max(r / fns.q[a].norm());
            }
        }
        let ok = worst < tol.sov;
        let detail = format!(
            "states={} quadratic_residual_rel={}",
            recs.len(),
            fmt_res(worst)
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_baxter(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Baxter;
        let (fns, recs, solves) = match (self.fns(), self.records(), self.q_solves()) {
            (Ok(f), Ok(r), Ok(s)) => (f, r, s),
            (Err(stop), _, _) | (_, Err(stop), _) | (_, _, Err(stop)) => return stop.result(kind),
        };
        let dim = 1usize << self.fam.chain.n;
        let mut worst = 0.0f64;
        for (rec, solve) in recs.iter().zip(solves.iter()) {
            match xxx::xxx_verify_baxter(&rec.tau, &solve.q, &fns, baxter::default_grid_size(fns.n()))
            {
                Ok(r) => worst = worst.max(r),
                Err(e) => return stop_xxx(&e).result(kind),
            }
        }
        let mut distinct = f64::INFINITY;
        for i in 0..solves.len() {
            for j in (i + 1)..solves.len() {
                distinct = distinct.min(solves[i].q.sub(&solves[j].q).max_coeff());
            }
        }
        let ok = solves.len() == dim && worst < tol.baxter && distinct > 1e-6;
        let detail = format!(
            "q_count={}/{} grid_residual={} q_separation={}",
            solves.len(),
            dim,
            fmt_res(worst),
            fmt_res(distinct),
        );
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_bethe(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::Bethe;
        let (fns, recs, solves) = match (self.fns(), self.records(), self.q_solves()) {
            (Ok(f), Ok(r), Ok(s)) => (f, r, s),
            (Err(stop), _, _) | (_, Err(stop), _) | (_, _, Err(stop)) => return stop.result(kind),
        };
        let mut worst = 0.0f64;
        let mut roots = 0usize;
        for (rec, solve) in recs.iter().zip(solves.iter()) {
            roots += solve.roots_lambda.len();
            let bethe = match xxx::xxx_bethe_residuals(solve, &fns) {
                Ok(b) => b,
                Err(e) => return stop_xxx(&e).result(kind),
            };
            for r in bethe {
                worst = worst.max(r);
            }
            let sys1 = match xxx::xxx_system1_residuals(&rec.tau, &fns) {
                Ok(s) => s,
                Err(e) => return stop_xxx(&e).result(kind),
            };
            for r in sys1 {
                worst = worst.max(r);
            }
        }
        let expect = self.fam.chain.n << self.fam.chain.n;
        let ok = worst < tol.bethe && roots == expect;
        let detail = format!("roots={roots}/{expect} bethe_residual={}", fmt_res(worst));
        CheckResult::graded(kind, ok, worst, detail)
    }

    fn check_symmetry(&mut self) -> CheckResult {
        CheckResult::skip(
            CheckKind::Symmetry,
            "boundary sign-flip symmetries are defined for the trigonometric parameterization"
                .into(),
        )
    }

    /// Homogeneous-limit pipeline for the rational model: closed-form F
    /// coefficient comparison, then the same direct τ/Q extraction as the
    /// trigonometric limit, in the w = λ² basis with monic Q.
    fn check_homogeneous(&mut self, tol: &Tolerances) -> CheckResult {
        let kind = CheckKind::HomogeneousLimit;
        if !self.fam.chain.is_homogeneous() {
            return CheckResult::skip(
                kind,
                "chain is not homogeneous: limit pipeline not applicable".into(),
            );
        }
        let f_exact = xxx::xxx_big_f_poly(&self.fam).trimmed();
        let f_closed = match xxx::xxx_homogeneous_f_poly(&self.fam) {
            Ok(f) => f.trimmed(),
            Err(e) => return stop_xxx(&e).result(kind),
        };
        let scale = f_exact.max_coeff().max(f_closed.max_coeff()).max(1.0);
        let f_diff = f_exact.sub(&f_closed).max_coeff() / scale;
        if f_diff >= tol.f_coefficients {
            return CheckResult::fail(
                kind,
                Some(f_diff),
                format!("closed-form F coefficient mismatch: {}", fmt_res(f_diff)),
            );
        }

        if self.fam.boundary.xi_b.norm() < TAU_GEN {
            return CheckResult::pass(
                kind,
                f_diff,
                format!(
                    "f_coefficients={} q_pipeline=na (xi_b = 0, F = 0) completeness=conjectural",
                    fmt_res(f_diff)
                ),
            );
        }

        let records = match self.homog_records() {
            Ok(r) => r,
            Err(stop) => return stop.result(kind),
        };
        self.eig_count.get_or_insert(records.len());
        let dim = 1usize << self.fam.chain.n;
        let worst = records.iter().map(|r| r.residual).fold(0.0f64, f64::max);
        let ok = records.len() == dim && worst < tol.homogeneous;
        let detail = format!(
            "eigenvalues={}/{} f_coefficients={} grid_residual={} completeness=conjectural",
            records.len(),
            dim,
            fmt_res(f_diff),
            fmt_res(worst),
        );
        CheckResult::graded(kind, ok, worst.max(f_diff), detail)
    }

    fn homog_records(&self) -> Result<Vec<HomogRecord>, CheckStop> {
        let n = self.fam.chain.n;
        let eta = self.fam.chain.eta;
        let dim = 1usize << n;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(0x5EED_0004));
        let anchor = eta * 0.5 + c(0.41, 0.23);
        let t_anchor = xxx::xxx_transfer(anchor, &self.fam);
        let pairs = eig_dense(&t_anchor, false).map_err(|e| CheckStop::fail(e.to_string()))?;
        if pairs.len() != dim {
            return Err(CheckStop::fail(format!(
                "anchor diagonalization returned {} of {dim} eigenpairs",
                pairs.len()
            )));
        }

        let mut nodes = Vec::with_capacity(n + 3);
        while nodes.len() < n + 3 {
            let z = eta * 0.5 + c(rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
            let w = z * z;
            if nodes.iter().all(|&(_, wn): &(C64, C64)| (wn - w).norm() > 1e-3) {
                nodes.push((z, w));
            }
        }
        let node_ts: Vec<CMatrix> = nodes
            .iter()
            .map(|&(z, _)| xxx::xxx_transfer(z, &self.fam))
            .collect();

        let grid = fit_grid(2 * n + 10, self.seed.wrapping_add(0x5EED_0005), false);
        let fresh = fit_grid(2 * n + 12, self.seed.wrapping_add(0x5EED_0006), false);
        let f_closed =
            xxx::xxx_homogeneous_f_poly(&self.fam).map_err(|e| stop_xxx(&e))?;

        let mut out = Vec::with_capacity(dim);
        for pair_ in &pairs {
            let v = &pair_.vector;
            let norm2: C64 = v.iter().map(|z| z * z.conj()).sum();
            let samples: Vec<(C64, C64)> = node_ts
                .iter()
                .zip(nodes.iter())
                .map(|(tm, &(_, w))| {
                    let tv = tm.matvec(v);
                    let num: C64 = v.iter().zip(tv.iter()).map(|(a, b)| a.conj() * b).sum();
                    (w, num / norm2)
                })
                .collect();
            let tau = trig_interpolate(&samples, n + 1)
                .map_err(|e| CheckStop::fail(format!("tau interpolation: {e}")))?;

            let rows = grid.len();
            let mut a = vec![C64::ZERO; rows * n];
            let mut b = vec![C64::ZERO; rows];
            for (r, &lam) in grid.iter().enumerate() {
                let ap = xxx::xxx_homogeneous_big_a(lam, &self.fam).map_err(|e| stop_xxx(&e))?;
                let am = xxx::xxx_homogeneous_big_a(-lam, &self.fam).map_err(|e| stop_xxx(&e))?;
                let tv = xxx::eval_w(&tau, lam);
                let w = lam * lam;
                let wm = (lam - eta) * (lam - eta);
                let wp = (lam + eta) * (lam + eta);
                let mut pu = cr(1.0);
                let mut pm = cr(1.0);
                let mut pp = cr(1.0);
                for k in 0..n {
                    a[r * n + k] = tv * pu - ap * pm - am * pp;
                    pu *= w;
                    pm *= wm;
                    pp *= wp;
                }
                b[r] = f_closed.eval_u(w) - (tv * pu - ap * pm - am * pp);
            }
            let sol =
                lstsq(rows, n, &mut a, &mut b).map_err(|e| CheckStop::fail(e.to_string()))?;
            let mut coeffs = sol;
            coeffs.push(cr(1.0));
            let q = EvenTrigPoly::new(coeffs);

            let mut worst = 0.0f64;
            for &lam in &fresh {
                let ap = xxx::xxx_homogeneous_big_a(lam, &self.fam).map_err(|e| stop_xxx(&e))?;
                let am = xxx::xxx_homogeneous_big_a(-lam, &self.fam).map_err(|e| stop_xxx(&e))?;
                let tq = xxx::eval_w(&tau, lam) * q.eval_u(lam * lam);
                let rhs = ap * q.eval_u((lam - eta) * (lam - eta))
                    + am * q.eval_u((lam + eta) * (lam + eta))
                    + f_closed.eval_u(lam * lam);
                worst = worst.max((tq - rhs).norm() / (1.0 + tq.norm()));
            }
            out.push(HomogRecord { residual: worst });
        }
        Ok(out)
    }

    fn boundary_class(&self) -> String {
        if self.fam.boundary.xi_b.norm() < TAU_PIVOT_REL {
            "xi_b_zero".into()
        } else {
            "generic".into()
        }
    }
}

// ---------------------------------------------------------------------------
// run / sweep
// ---------------------------------------------------------------------------

enum Pipeline {
    Xxz(Box<XxzCtx>),
    Xxx(Box<XxxCtx>),
}

impl Pipeline {
    fn run_check(&mut self, kind: CheckKind, tol: &Tolerances) -> CheckResult {
        match self {
            Pipeline::Xxz(ctx) => match kind {
                CheckKind::Structure => ctx.check_structure(tol),
                CheckKind::Spectrum => ctx.check_spectrum(tol),
                CheckKind::Sov => ctx.check_sov(tol),
                CheckKind::Baxter => ctx.check_baxter(tol),
                CheckKind::Bethe => ctx.check_bethe(tol),
                CheckKind::Symmetry => ctx.check_symmetry(tol),
                CheckKind::HomogeneousLimit => ctx.check_homogeneous(tol),
            },
            Pipeline::Xxx(ctx) => match kind {
                CheckKind::Structure => ctx.check_structure(tol),
                CheckKind::Spectrum => ctx.check_spectrum(tol),
                CheckKind::Sov => ctx.check_sov(tol),
                CheckKind::Baxter => ctx.check_baxter(tol),
                CheckKind::Bethe => ctx.check_bethe(tol),
                CheckKind::Symmetry => ctx.check_symmetry(),
                CheckKind::HomogeneousLimit => ctx.check_homogeneous(tol),
            },
        }
    }
}

/// Resolve and execute one run. Config problems surface as errors; every
/// mathematical or numerical problem inside a check is recorded in the report
/// instead of crashing.
pub fn run(config: &RunConfig, max_n: usize) -> Result<VerificationReport, ConfigError> {
    let rr = config.resolve(max_n)?;
    Ok(execute(&rr))
}

fn execute(rr: &ResolvedRun) -> VerificationReport {
    let start = Instant::now();
    let mut boundary_map = BTreeMap::new();
    let mut pipeline = match &rr.boundary {
        ResolvedBoundary::Xxz(bp) => {
            boundary_map.insert("zeta_plus".into(), pair(bp.zeta_plus));
            boundary_map.insert("kappa_plus".into(), pair(bp.kappa_plus));
            boundary_map.insert("tau_plus".into(), pair(bp.tau_plus));
            boundary_map.insert("zeta_minus".into(), pair(bp.zeta_minus));
            boundary_map.insert("kappa_minus".into(), pair(bp.kappa_minus));
            boundary_map.insert("tau_minus".into(), pair(bp.tau_minus));
            Pipeline::Xxz(Box::new(XxzCtx::new(rr.chain.clone(), bp.clone(), rr.seed)))
        }
        ResolvedBoundary::Xxx(bp) => {
            boundary_map.insert("p".into(), pair(bp.p));
            boundary_map.insert("q".into(), pair(bp.q));
            boundary_map.insert("xi_b".into(), pair(bp.xi_b));
            Pipeline::Xxx(Box::new(XxxCtx::new(rr.chain.clone(), bp.clone(), rr.seed)))
        }
    };

    let mut checks = Vec::with_capacity(rr.checks.len());
    for kind in CHECK_ORDER {
        if rr.checks.contains(&kind) {
            checks.push(pipeline.run_check(kind, &rr.tol));
        }
    }

    let (boundary_class, eig_count, det_c, regime_counts) = match &pipeline {
        Pipeline::Xxz(ctx) => (
            ctx.boundary_class(),
            ctx.eig_count.unwrap_or(0),
            ctx.det_c.clone(),
            ctx.regime_counts.clone(),
        ),
        Pipeline::Xxx(ctx) => (
            ctx.boundary_class(),
            ctx.eig_count.unwrap_or(0),
            ctx.det_c.clone(),
            BTreeMap::new(),
        ),
    };

    let pass = checks.iter().all(|c| c.status != "fail");
    VerificationReport {
        schema: SCHEMA_VERSION,
        model: rr.model.name().into(),
        n: rr.chain.n,
        seed: rr.seed,
        regime: rr.regime.clone(),
        eta: pair(rr.chain.eta),
        xi: rr.chain.xi.iter().map(|&z| pair(z)).collect(),
        boundary: boundary_map,
        boundary_class,
        checks,
        eigenvalue_count: eig_count,
        det_c: det_c.iter().map(|&z| pair(z)).collect(),
        regime_counts,
        pass,
        wall_ms: start.elapsed().as_millis() as u64,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub samples: usize,
    pub passes: usize,
    pub pass_rate: f64,
    /// Worst residual seen per check, over all samples that reported one.
    pub worst_residuals: BTreeMap<String, f64>,
    pub check_failures: BTreeMap<String, usize>,
    pub regimes: BTreeMap<String, usize>,
}

pub fn summarize(reports: &[VerificationReport]) -> SweepSummary {
    let mut worst: BTreeMap<String, f64> = BTreeMap::new();
    let mut failures: BTreeMap<String, usize> = BTreeMap::new();
    let mut regimes: BTreeMap<String, usize> = BTreeMap::new();
    let passes = reports.iter().filter(|r| r.pass).count();
    for rep in reports {
        *regimes.entry(rep.boundary_class.clone()).or_insert(0) += 1;
        for ch in &rep.checks {
            if let Some(res) = ch.residual_max {
                let slot = worst.entry(ch.check.clone()).or_insert(0.0);
                *slot = slot.max(res);
            }
            if ch.status == "fail" {
                *failures.entry(ch.check.clone()).or_insert(0) += 1;
            }
        }
    }
    SweepSummary {
        samples: reports.len(),
        passes,
        pass_rate: if reports.is_empty() {
            1.0
        } else {
            passes as f64 / reports.len() as f64
        },
        worst_residuals: worst,
        check_failures: failures,
        regimes,
    }
}

/// Execute `samples` seeded variations of the base config on a private
/// thread pool; reports come back in sample order regardless of completion
/// order, and per-sample problems are recorded, never fatal.
pub fn sweep(
    base: &RunConfig,
    samples: usize,
    workers: usize,
    max_n: usize,
) -> Result<(Vec<VerificationReport>, SweepSummary), ConfigError> {
    base.resolve(max_n)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ConfigError::Io(e.to_string()))?;
    let reports: Vec<VerificationReport> = pool.install(|| {
        use rayon::prelude::*;
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut cfg = base.clone();
                cfg.seed = base.seed.wrapping_add(i as u64);
                match run(&cfg, max_n) {
                    Ok(rep) => rep,
                    Err(e) => config_failure_report(&cfg, &e),
                }
            })
            .collect()
    });
    let summary = summarize(&reports);
    Ok((reports, summary))
}

fn config_failure_report(cfg: &RunConfig, err: &ConfigError) -> VerificationReport {
    VerificationReport {
        schema: SCHEMA_VERSION,
        model: cfg.model.name().into(),
        n: cfg.n,
        seed: cfg.seed,
        regime: "unresolved".into(),
        eta: cfg.eta,
        xi: Vec::new(),
        boundary: BTreeMap::new(),
        boundary_class: "unresolved".into(),
        checks: vec![CheckResult {
            check: "config".into(),
            status: "fail".into(),
            residual_max: None,
            detail: err.to_string(),
        }],
        eigenvalue_count: 0,
        det_c: Vec::new(),
        regime_counts: BTreeMap::new(),
        pass: false,
        wall_ms: 0,
    }
}

// ---------------------------------------------------------------------------
// regimes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub model: String,
    pub n: usize,
    pub regime: String,
    pub genericity_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_zero: Option<Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_n_sov: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_m_lattice: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_triple: Option<(usize, usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi_b: Option<[f64; 2]>,
    pub note: String,
}

/// Resolve the config and classify the boundary point against the
/// exceptional sets, without running any spectra.
pub fn regimes(config: &RunConfig, max_n: usize) -> Result<RegimeReport, ConfigError> {
    let rr = config.resolve(max_n)?;
    let violations = match rr.model {
        ModelKind::Xxz => rr.chain.genericity_violations(TAU_GEN).len(),
        ModelKind::Xxx => xxx::xxx_genericity_violations(&rr.chain).len(),
    };
    let mut rep = RegimeReport {
        model: rr.model.name().into(),
        n: rr.chain.n,
        regime: rr.regime.clone(),
        genericity_violations: violations,
        y_zero: None,
        in_n_sov: None,
        in_m_lattice: None,
        m_triple: None,
        variant: None,
        xi_b: None,
        note: String::new(),
    };
    match &rr.boundary {
        ResolvedBoundary::Xxz(bp) => {
            match sov::classify_boundary(bp, rr.chain.n, rr.chain.eta) {
                Err(ModelError::DiagonalBoundary) => {
                    rep.note = "diagonal boundary: exceptional-set classification undefined".into();
                }
                Err(e) => rep.note = e.to_string(),
                Ok(class) => {
                    rep.y_zero = Some(class.y_zero.clone());
                    rep.in_n_sov = Some(class.in_n_sov);
                    rep.in_m_lattice = Some(class.in_m_lattice);
                    rep.m_triple = class.m_triple;
                    match symmetry::select_variant(bp, rr.chain.n, rr.chain.eta) {
                        Ok(None) => rep.variant = Some("none".into()),
                        Ok(Some(eps)) => {
                            rep.variant = Some(format!(
                                "({},{},{})",
                                eps.eps_tau, eps.eps_alpha, eps.eps_beta
                            ))
                        }
                        Err(e) => rep.note = e.to_string(),
                    }
                }
            }
        }
        ResolvedBoundary::Xxx(bp) => {
            rep.xi_b = Some(pair(bp.xi_b));
            if bp.xi_b.norm() < TAU_PIVOT_REL {
                rep.note = "xi_b = 0: F vanishes on the principal branch".into();
            }
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------------------
// persistence and rendering
// ---------------------------------------------------------------------------

pub fn append_jsonl(path: &str, reports: &[VerificationReport]) -> Result<(), ConfigError> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| ConfigError::Io(e.to_string()))?;
    for rep in reports {
        let line = serde_json::to_string(rep).map_err(|e| ConfigError::Io(e.to_string()))?;
        writeln!(file, "{line}").map_err(|e| ConfigError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_jsonl(path: &str) -> Result<Vec<VerificationReport>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rep: VerificationReport = serde_json::from_str(line)
            .map_err(|e| ConfigError::Parse(format!("line {}: {e}", i + 1)))?;
        out.push(rep);
    }
    Ok(out)
}

/// One row per report with a stable column set: identity, then per check a
/// status and residual column.
pub fn render_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from("model,n,seed,regime,boundary_class,pass,eigenvalues");
    for kind in CHECK_ORDER {
        let _ = write!(out, ",{0}_status,{0}_residual", kind.name());
    }
    out.push('\n');
    for rep in reports {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            rep.model, rep.n, rep.seed, rep.regime, rep.boundary_class, rep.pass,
            rep.eigenvalue_count
        );
        for kind in CHECK_ORDER {
            match rep.check(kind.name()) {
                None => out.push_str(",,"),
                Some(chk) => {
                    let res = chk
                        .residual_max
                        .map(|r| format!("{r:.3e}"))
                        .unwrap_or_default();
                    let _ = write!(out, ",{},{}", chk.status, res);
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn render_markdown(reports: &[VerificationReport]) -> String {
    let mut out = String::new();
    out.push_str("| model | n | seed | regime | class | pass | checks | worst residual |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for rep in reports {
        let mut worst = 0.0f64;
        let mut cells = Vec::new();
        for chk in &rep.checks {
            cells.push(format!("{}:{}", chk.check, chk.status));
            if let Some(r) = chk.residual_max {
                worst = worst.max(r);
            }
        }
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {:.2e} |",
            rep.model,
            rep.n,
            rep.seed,
            rep.regime,
            rep.boundary_class,
            if rep.pass { "yes" } else { "no" },
            cells.join(" "),
            worst,
        );
    }
    let summary = summarize(reports);
    let _ = writeln!(
        out,
        "\n{} samples, {} passed ({:.1}%).",
        summary.samples,
        summary.passes,
        summary.pass_rate * 100.0
    );
    out
}

// ---------------------------------------------------------------------------
// command surface
// ---------------------------------------------------------------------------

pub fn load_config(path: &str) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn parse_tol_overrides(items: &[String]) -> Result<BTreeMap<String, f64>, ConfigError> {
    let mut out = BTreeMap::new();
    for item in items {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| ConfigError::BadOverride(item.clone()))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| ConfigError::BadOverride(item.clone()))?;
        out.insert(key.trim().to_string(), v);
    }
    Ok(out)
}

/// Shared command-line adjustments applied on top of the loaded config.
pub struct CliOverrides {
    pub seed: Option<u64>,
    pub tol: BTreeMap<String, f64>,
    pub max_n: Option<usize>,
}

impl CliOverrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        for (k, v) in &self.tol {
            cfg.tolerances.insert(k.clone(), *v);
        }
    }

    pub fn max_n(&self) -> usize {
        self.max_n.unwrap_or(DEFAULT_MAX_N)
    }
}

fn print_report(rep: &VerificationReport) {
    println!(
        "model={} n={} seed={} regime={} class={}",
        rep.model, rep.n, rep.seed, rep.regime, rep.boundary_class
    );
    for chk in &rep.checks {
        let res = chk
            .residual_max
            .map(|r| format!(" residual={r:.2e}"))
            .unwrap_or_default();
        println!("[{:>4}] {:<17}{} {}", chk.status, chk.check, res, chk.detail);
    }
    let (mut p, mut s, mut f) = (0, 0, 0);
    for chk in &rep.checks {
        match chk.status.as_str() {
            "pass" => p += 1,
            "skip" => s += 1,
            _ => f += 1,
        }
    }
    println!(
        "result: {} ({p} pass, {s} skip, {f} fail) eigenvalues={} wall={}ms",
        if rep.pass { "PASS" } else { "FAIL" },
        rep.eigenvalue_count,
        rep.wall_ms
    );
}

/// `verify`: run one config, print the per-check table and a CSV row, append
/// the JSONL record. Exit 0 iff the report passes.
pub fn cmd_verify(
    config_path: &str,
    out_path: Option<&str>,
    overrides: &CliOverrides,
) -> Result<u8, ConfigError> {
    let mut cfg = load_config(config_path)?;
    overrides.apply(&mut cfg);
    let report = run(&cfg, overrides.max_n())?;
    print_report(&report);
    print!("{}", render_csv(std::slice::from_ref(&report)));
    let out = out_path.unwrap_or("runs.jsonl");
    append_jsonl(out, std::slice::from_ref(&report))?;
    Ok(if report.pass { 0 } else { 1 })
}

/// `sweep`: seeded variations of the base config in parallel, one JSONL
/// writer, aggregate summary on stdout. Exit 0 iff every sample passed.
pub fn cmd_sweep(
    config_path: &str,
    samples: usize,
    workers: usize,
    out_path: Option<&str>,
    overrides: &CliOverrides,
) -> Result<u8, ConfigError> {
    let mut cfg = load_config(config_path)?;
    overrides.apply(&mut cfg);
    let (reports, summary) = sweep(&cfg, samples, workers, overrides.max_n())?;
    let out = out_path.unwrap_or("runs.jsonl");
    append_jsonl(out, &reports)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(|e| ConfigError::Io(e.to_string()))?
    );
    Ok(if reports.iter().all(|r| r.pass) { 0 } else { 1 })
}

/// `regimes`: print the boundary classification for the resolved config.
pub fn cmd_regimes(config_path: &str, overrides: &CliOverrides) -> Result<u8, ConfigError> {
    let mut cfg = load_config(config_path)?;
    overrides.apply(&mut cfg);
    let rep = regimes(&cfg, overrides.max_n())?;
    println!(
        "{}",
        serde_json::to_string_pretty(&rep).map_err(|e| ConfigError::Io(e.to_string()))?
    );
    Ok(0)
}

/// `report`: read a JSONL run log, print a Markdown summary, optionally
/// write the CSV table.
pub fn cmd_report(input_path: &str, out_path: Option<&str>) -> Result<u8, ConfigError> {
    let reports = read_jsonl(input_path)?;
    print!("{}", render_markdown(&reports));
    if let Some(out) = out_path {
        std::fs::write(out, render_csv(&reports)).map_err(|e| ConfigError::Io(e.to_string()))?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config(model: ModelKind, n: usize, eta: [f64; 2], seed: u64) -> RunConfig {
        RunConfig {
            schema: 1,
            model,
            n,
            eta,
            xi: None,
            boundary: None,
            checks: None,
            tolerances: BTreeMap::new(),
            seed,
        }
    }

    #[test]
    fn config_parses_and_rejects_unknowns() {
        let good = r#"{"schema":1,"model":"xxz","n":3,"eta":[0.45,0.3],"seed":42}"#;
        let cfg: RunConfig = serde_json::from_str(good).unwrap();
        assert_eq!(cfg.n, 3);
        assert!(cfg.resolve(6).is_ok());

        let unknown = r#"{"schema":1,"model":"xxz","n":3,"eta":[0.45,0.3],"extra":1}"#;
        assert!(serde_json::from_str::<RunConfig>(unknown).is_err());

        let bad_schema = r#"{"schema":2,"model":"xxz","n":3,"eta":[0.45,0.3]}"#;
        let cfg: RunConfig = serde_json::from_str(bad_schema).unwrap();
        assert!(matches!(cfg.resolve(6), Err(ConfigError::Schema(2))));

        let mut cfg = base_config(ModelKind::Xxz, 3, [0.45, 0.3], 1);
        cfg.tolerances.insert("mystery".into(), 1e-6);
        assert!(matches!(
            cfg.resolve(6),
            Err(ConfigError::UnknownTolerance(_))
        ));

        let cfg = base_config(ModelKind::Xxz, 9, [0.45, 0.3], 1);
        assert!(matches!(
            cfg.resolve(6),
            Err(ConfigError::ChainTooLong { n: 9, max: 6 })
        ));
    }

    #[test]
    fn tag_parser_handles_arguments() {
        assert_eq!(parse_tag("generic").unwrap(), ("generic".into(), vec![]));
        assert_eq!(parse_tag("random(7)").unwrap(), ("random".into(), vec![7]));
        assert_eq!(
            parse_tag("Y_zero(1,2)").unwrap(),
            ("Y_zero".into(), vec![1, 2])
        );
        assert!(parse_tag("Y_zero(1,").is_err());
        assert!(parse_tag("Y_zero(a)").is_err());
    }

    #[test]
    fn regime_constructors_hit_their_sets() {
        let eta = c(0.45, 0.3);
        let mut cfg = base_config(ModelKind::Xxz, 2, [0.45, 0.3], 11);

        cfg.boundary = Some(BoundarySpec::Spec("Y_zero(0,1)".into()));
        let rr = cfg.resolve(6).unwrap();
        let ResolvedBoundary::Xxz(bp) = &rr.boundary else {
            panic!("xxz expected")
        };
        let class = sov::classify_boundary(bp, 2, eta).unwrap();
        assert!(class.y_zero.contains(&(0, 1)), "y_zero: {:?}", class.y_zero);

        cfg.boundary = Some(BoundarySpec::Spec("M_lattice".into()));
        let rr = cfg.resolve(6).unwrap();
        let ResolvedBoundary::Xxz(bp) = &rr.boundary else {
            panic!("xxz expected")
        };
        let class = sov::classify_boundary(bp, 2, eta).unwrap();
        assert!(class.in_m_lattice, "m_triple: {:?}", class.m_triple);

        cfg.boundary = Some(BoundarySpec::Spec("diagonal".into()));
        let rr = cfg.resolve(6).unwrap();
        let ResolvedBoundary::Xxz(bp) = &rr.boundary else {
            panic!("xxz expected")
        };
        assert!(bp.ab_plus().is_err());

        // normality regimes validate the eta class
        let mut cfg = base_config(ModelKind::Xxz, 2, [0.0, 0.7], 11);
        cfg.boundary = Some(BoundarySpec::Spec("normal_massless".into()));
        let rr = cfg.resolve(6).unwrap();
        let ResolvedBoundary::Xxz(bp) = &rr.boundary else {
            panic!("xxz expected")
        };
        assert!(bp.zeta_plus.re.abs() < 1e-12 && bp.kappa_plus.im.abs() < 1e-12);
        assert!(rr.chain.xi.iter().all(|z| z.im.abs() < 1e-12));

        let mut cfg = base_config(ModelKind::Xxz, 2, [0.45, 0.3], 11);
        cfg.boundary = Some(BoundarySpec::Spec("normal_massless".into()));
        assert!(matches!(
            cfg.resolve(6),
            Err(ConfigError::RegimeMismatch { .. })
        ));

        let mut cfg = base_config(ModelKind::Xxx, 2, [1.0, 0.0], 11);
        cfg.boundary = Some(BoundarySpec::Spec("M_lattice".into()));
        assert!(matches!(
            cfg.resolve(6),
            Err(ConfigError::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn xxz_generic_run_passes_all_applicable_checks() {
        let cfg = base_config(ModelKind::Xxz, 2, [0.45, 0.3], 42);
        let rep = run(&cfg, 6).unwrap();
        assert!(rep.pass, "report: {rep:?}");
        assert_eq!(rep.eigenvalue_count, 4);
        assert_eq!(rep.det_c.len(), 4);
        for name in ["structure", "spectrum", "sov", "baxter", "bethe", "symmetry"] {
            assert_eq!(rep.check(name).unwrap().status, "pass", "check {name}");
        }
        assert_eq!(rep.check("homogeneous_limit").unwrap().status, "skip");
        assert_eq!(rep.regime_counts.get("inhomogeneous"), Some(&4));

        // serde round trip
        let line = serde_json::to_string(&rep).unwrap();
        let back: VerificationReport = serde_json::from_str(&line).unwrap();
        assert_eq!(back.checks.len(), rep.checks.len());
    }

    #[test]
    fn xxx_run_passes_and_counts_eight_states() {
        let cfg = base_config(ModelKind::Xxx, 3, [1.0, 0.0], 7);
        let rep = run(&cfg, 6).unwrap();
        assert!(rep.pass, "report: {rep:?}");
        assert_eq!(rep.eigenvalue_count, 8);
        assert_eq!(rep.det_c.len(), 8);
        for name in ["structure", "spectrum", "sov", "baxter", "bethe"] {
            assert_eq!(rep.check(name).unwrap().status, "pass", "check {name}");
        }
        assert_eq!(rep.check("symmetry").unwrap().status, "skip");
    }

    #[test]
    fn diagonal_boundary_skips_dressed_checks() {
        let mut cfg = base_config(ModelKind::Xxz, 2, [0.45, 0.3], 5);
        cfg.boundary = Some(BoundarySpec::Spec("diagonal".into()));
        let rep = run(&cfg, 6).unwrap();
        assert!(rep.pass, "report: {rep:?}");
        assert_eq!(rep.check("structure").unwrap().status, "pass");
        for name in ["spectrum", "sov", "baxter", "bethe", "symmetry"] {
            assert_eq!(rep.check(name).unwrap().status, "skip", "check {name}");
        }
        assert_eq!(rep.boundary_class, "diagonal");
    }

    #[test]
    fn homogeneous_xxz_pipeline_reports_conjectural_completeness() {
        let mut cfg = base_config(ModelKind::Xxz, 2, [0.45, 0.3], 9);
        cfg.xi = Some(XiSpec::Spec("homogeneous".into()));
        cfg.checks = Some(vec![CheckKind::Structure, CheckKind::HomogeneousLimit]);
        let rep = run(&cfg, 6).unwrap();
        let chk = rep.check("homogeneous_limit").unwrap();
        assert_eq!(chk.status, "pass", "detail: {}", chk.detail);
        assert!(chk.detail.contains("completeness=conjectural"));
        assert!(chk.detail.contains("eigenvalues=4/4"));
        assert!(rep.pass);
    }

    #[test]
    fn homogeneous_xxx_pipeline_matches_closed_form_f() {
        let mut cfg = base_config(ModelKind::Xxx, 2, [1.0, 0.0], 13);
        cfg.xi = Some(XiSpec::Spec("homogeneous".into()));
        cfg.checks = Some(vec![CheckKind::HomogeneousLimit]);
        let rep = run(&cfg, 6).unwrap();
        let chk = rep.check("homogeneous_limit").unwrap();
        assert_eq!(chk.status, "pass", "detail: {}", chk.detail);
        assert!(chk.detail.contains("completeness=conjectural"));
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let cfg = base_config(ModelKind::Xxz, 1, [0.45, 0.3], 100);
        let (reports, summary) = sweep(&cfg, 3, 2, 6).unwrap();
        assert_eq!(reports.len(), 3);
        assert_eq!(summary.samples, 3);
        assert_eq!(summary.passes, 3);
        let seeds: Vec<u64> = reports.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![100, 101, 102]);

        let (again, _) = sweep(&cfg, 3, 1, 6).unwrap();
        for (a, b) in reports.iter().zip(again.iter()) {
            let mut a = a.clone();
            let mut b = b.clone();
            a.wall_ms = 0;
            b.wall_ms = 0;
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                serde_json::to_string(&b).unwrap()
            );
        }

        let (empty, agg) = sweep(&cfg, 0, 2, 6).unwrap();
        assert!(empty.is_empty());
        assert_eq!(agg.samples, 0);
    }

    #[test]
    fn rendering_and_jsonl_round_trip() {
        let cfg = base_config(ModelKind::Xxz, 1, [0.45, 0.3], 3);
        let rep = run(&cfg, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("runs.jsonl");
        let path = path.to_str().unwrap();
        append_jsonl(path, std::slice::from_ref(&rep)).unwrap();
        append_jsonl(path, std::slice::from_ref(&rep)).unwrap();
        let back = read_jsonl(path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].model, "xxz");

        let csv = render_csv(&back);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("model,n,seed"));
        assert!(header.contains("baxter_status"));
        assert_eq!(lines.count(), 2);

        let md = render_markdown(&back);
        assert!(md.contains("| xxz | 1 | 3 |"));
        assert!(md.contains("2 samples, 2 passed"));
    }

    #[test]
    fn regimes_reports_classification() {
        let mut cfg = base_config(ModelKind::Xxz, 2, [0.45, 0.3], 21);
        cfg.boundary = Some(BoundarySpec::Spec("M_lattice".into()));
        let rep = regimes(&cfg, 6).unwrap();
        assert_eq!(rep.in_m_lattice, Some(true));
        assert!(rep.m_triple.is_some());

        let cfg = base_config(ModelKind::Xxx, 2, [1.0, 0.0], 21);
        let rep = regimes(&cfg, 6).unwrap();
        assert!(rep.xi_b.is_some());
        assert_eq!(rep.genericity_violations, 0);
    }

    #[test]
    fn tolerance_overrides_parse_and_apply() {
        let items = vec!["baxter=1e-5".to_string(), "bethe=2e-6".to_string()];
        let map = parse_tol_overrides(&items).unwrap();
        let mut tol = Tolerances::default();
        tol.apply(&map).unwrap();
        assert_eq!(tol.baxter, 1e-5);
        assert_eq!(tol.bethe, 2e-6);
        assert!(parse_tol_overrides(&["nope".to_string()]).is_err());
        assert!(parse_tol_overrides(&["x=abc".to_string()]).is_err());
    }
}
