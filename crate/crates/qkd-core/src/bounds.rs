//! Binary entropy, Hoeffding sampling bounds and the finite-key security
//! bounds of the four generalized BB84 variants.
//!
//! Every bound term is kept as a natural logarithm and exponentiated only at
//! the end, so tables at large block lengths do not underflow.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::error::{invalid, Error, Result};
use crate::par::{count_trials, Exec};
use crate::stats::McEstimate;

/// Tolerance used when deciding whether `n·(p + ε)` is an integer.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// Binary entropy `H2(x) = −x log2 x − (1−x) log2(1−x)` with `H2(0) = H2(1) = 0`.
pub fn h2(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(format!("h2 argument {x} outside [0, 1]")));
    }
    Ok(h2_unchecked(x))
}

pub(crate) fn h2_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// The protocol families covered by the calculator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// INFO bits always in the z basis, separate z/x test thresholds.
    Bb84InfoZ,
    /// Standard BB84 with `N = 2n` and uniform bases.
    Bb84,
    /// Biased basis choice with probability `p` of the z basis.
    Efficient,
    /// Fixed counts of INFO-Z, INFO-X, TEST-Z and TEST-X positions.
    ModifiedEfficient,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Bb84InfoZ,
        Variant::Bb84,
        Variant::Efficient,
        Variant::ModifiedEfficient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bb84InfoZ => "bb84-info-z",
            Variant::Bb84 => "bb84",
            Variant::Efficient => "efficient",
            Variant::ModifiedEfficient => "modified-efficient",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| invalid(format!("unknown variant {s:?}")))
    }
}

/// Parameters of one protocol configuration.
///
/// Single-threshold variants (everything except BB84-INFO-Z) store their
/// threshold `p_a` in both `p_az` and `p_ax`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolParams {
    pub variant: Variant,
    /// Total number of qubits `N`.
    pub big_n: usize,
    /// Number of INFO bits.
    pub n: usize,
    pub n_z: usize,
    pub n_x: usize,
    pub t_z: usize,
    pub t_x: usize,
    /// Syndrome length (rows of `P_C`).
    pub r: usize,
    /// Final key length (rows of `P_K`).
    pub m: usize,
    /// Probability of the z basis per qubit (EFFICIENT only).
    pub p: f64,
    pub p_az: f64,
    pub p_ax: f64,
    pub eps_sec: f64,
    pub eps_rel: f64,
}

impl ProtocolParams {
    /// BB84-INFO-Z with `N = n + n_z + n_x`.
    #[allow(clippy::too_many_arguments)]
    pub fn bb84_info_z(
        n: usize,
        n_z: usize,
        n_x: usize,
        r: usize,
        m: usize,
        p_az: f64,
        p_ax: f64,
        eps_sec: f64,
        eps_rel: f64,
    ) -> Result<Self> {
        let p = ProtocolParams {
            variant: Variant::Bb84InfoZ,
            big_n: n + n_z + n_x,
            n,
            n_z,
            n_x,
            t_z: n,
            t_x: 0,
            r,
            m,
            p: 0.0,
            p_az,
            p_ax,
            eps_sec,
            eps_rel,
        };
        p.validate()?;
        Ok(p)
    }

    /// Standard BB84 with `N = 2n`.
    pub fn bb84(
        n: usize,
        r: usize,
        m: usize,
        p_a: f64,
        eps_sec: f64,
        eps_rel: f64,
    ) -> Result<Self> {
        let p = ProtocolParams {
            variant: Variant::Bb84,
            big_n: 2 * n,
            n,
            n_z: 0,
            n_x: 0,
            t_z: 0,
            t_x: 0,
            r,
            m,
            p: 0.5,
            p_az: p_a,
            p_ax: p_a,
            eps_sec,
            eps_rel,
        };
        p.validate()?;
        Ok(p)
    }

    /// Efficient BB84 with `N = n + n_z + n_x` and z-basis probability `p`.
    #[allow(clippy::too_many_arguments)]
    pub fn efficient(
        n: usize,
        n_z: usize,
        n_x: usize,
        p: f64,
        r: usize,
        m: usize,
        p_a: f64,
        eps_sec: f64,
        eps_rel: f64,
    ) -> Result<Self> {
        let params = ProtocolParams {
            variant: Variant::Efficient,
            big_n: n + n_z + n_x,
            n,
            n_z,
            n_x,
            t_z: 0,
            t_x: 0,
            r,
            m,
            p,
            p_az: p_a,
            p_ax: p_a,
            eps_sec,
            eps_rel,
        };
        params.validate()?;
        Ok(params)
    }

    /// Modified efficient BB84 with `n = t_z + t_x` and `N = n + n_z + n_x`.
    #[allow(clippy::too_many_arguments)]
    pub fn modified_efficient(
        t_z: usize,
        t_x: usize,
        n_z: usize,
        n_x: usize,
        r: usize,
        m: usize,
        p_a: f64,
        eps_sec: f64,
        eps_rel: f64,
    ) -> Result<Self> {
        let n = t_z + t_x;
        let p = ProtocolParams {
            variant: Variant::ModifiedEfficient,
            big_n: n + n_z + n_x,
            n,
            n_z,
            n_x,
            t_z,
            t_x,
            r,
            m,
            p: 0.5,
            p_az: p_a,
            p_ax: p_a,
            eps_sec,
            eps_rel,
        };
        p.validate()?;
        Ok(p)
    }

    /// Threshold of single-threshold variants.
    pub fn p_a(&self) -> f64 {
        self.p_az
    }

    /// Structural invariants needed to run the protocol.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.r + self.m > self.n {
            return Err(invalid(format!(
                "r + m = {} exceeds n = {}",
                self.r + self.m,
                self.n
            )));
        }
        for (name, v) in [
            ("p_az", self.p_az),
            ("p_ax", self.p_ax),
            ("eps_sec", self.eps_sec),
            ("eps_rel", self.eps_rel),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} = {v} outside [0, 1]")));
            }
        }
        match self.variant {
            Variant::Bb84 => {
                if self.big_n != 2 * self.n {
                    return Err(invalid("BB84 requires N = 2n"));
                }
                if self.p_az != self.p_ax {
                    return Err(invalid("BB84 uses a single threshold p_a"));
                }
            }
            Variant::Bb84InfoZ => {
                if self.n_z == 0 || self.n_x == 0 {
                    return Err(invalid("BB84-INFO-Z requires n_z > 0 and n_x > 0"));
                }
                if self.big_n != self.n + self.n_z + self.n_x {
                    return Err(invalid("BB84-INFO-Z requires N = n + n_z + n_x"));
                }
            }
            Variant::Efficient => {
                if !(self.p > 0.0 && self.p <= 0.5) {
                    return Err(invalid(format!(
                        "EFFICIENT requires 0 < p <= 1/2, got {}",
                        self.p
                    )));
                }
                if self.n_z == 0 || self.n_x == 0 {
                    return Err(invalid("EFFICIENT requires n_z > 0 and n_x > 0"));
                }
                if self.big_n != self.n + self.n_z + self.n_x {
                    return Err(invalid("EFFICIENT requires N = n + n_z + n_x"));
                }
                if self.p_az != self.p_ax {
                    return Err(invalid("EFFICIENT uses a single threshold p_a"));
                }
            }
            Variant::ModifiedEfficient => {
                if self.t_z == 0 || self.t_x == 0 || self.n_z == 0 || self.n_x == 0 {
                    return Err(invalid(
                        "MODIFIED-EFFICIENT requires t_z, t_x, n_z, n_x > 0",
                    ));
                }
                if self.n != self.t_z + self.t_x {
                    return Err(invalid("MODIFIED-EFFICIENT requires n = t_z + t_x"));
                }
                if self.big_n != self.n + self.n_z + self.n_x {
                    return Err(invalid("MODIFIED-EFFICIENT requires N = n + n_z + n_x"));
                }
                if self.p_az != self.p_ax {
                    return Err(invalid("MODIFIED-EFFICIENT uses a single threshold p_a"));
                }
            }
        }
        Ok(())
    }

    /// Structural invariants plus the hypotheses of the security theorems:
    /// positive thresholds and slacks, `p + ε ≤ 1/2`, and `n·(p + ε)` integral.
    pub fn validate_for_bound(&self) -> Result<()> {
        self.validate()?;
        let (p_sec, p_rel) = (self.p_ax, self.p_az);
        for (name, v) in [
            ("p_az", self.p_az),
            ("p_ax", self.p_ax),
            ("eps_sec", self.eps_sec),
            ("eps_rel", self.eps_rel),
        ] {
            if v <= 0.0 {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, p, eps) in [("sec", p_sec, self.eps_sec), ("rel", p_rel, self.eps_rel)] {
            if p + eps > 0.5 + INTEGRALITY_TOL {
                return Err(invalid(format!(
                    "threshold plus eps_{name} = {} exceeds 1/2",
                    p + eps
                )));
            }
            if !is_integral(self.n as f64 * (p + eps)) {
                return Err(invalid(format!(
                    "n*(threshold + eps_{name}) = {} is not an integer; next valid eps_{name} is {}",
                    self.n as f64 * (p + eps),
                    nudge_eps(self.n, p, eps)
                )));
            }
        }
        if self.variant == Variant::Efficient {
            let nf = self.big_n as f64;
            if self.n_z as f64 >= self.p * nf / 2.0 {
                return Err(invalid("EFFICIENT bound requires n_z < pN/2"));
            }
            if self.n_x as f64 >= (1.0 - self.p) * nf / 2.0 {
                return Err(invalid("EFFICIENT bound requires n_x < (1-p)N/2"));
            }
        }
        Ok(())
    }
}

fn is_integral(x: f64) -> bool {
    (x - x.round()).abs() <= INTEGRALITY_TOL * x.abs().max(1.0)
}

/// Smallest `ε' ≥ ε` for which `n·(p + ε')` is an integer.
pub fn nudge_eps(n: usize, p: f64, eps: f64) -> f64 {
    let target = n as f64 * (p + eps);
    let t = if is_integral(target) {
        target.round()
    } else {
        target.ceil()
    };
    t / n as f64 - p
}

/// One itemized term of a bound, stored as its natural logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub label: &'static str,
    pub ln_value: f64,
}

impl Term {
    fn new(label: &'static str, ln_value: f64) -> Self {
        Term { label, ln_value }
    }

    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// Whether the `m` prefactor of the secrecy radical is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MFactor {
    /// `2m·√(…)`, the proven bound.
    #[default]
    Keep,
    /// `2·√(…)`: exploratory variant without the key-length prefactor. It is
    /// not a proven bound.
    DropExploratory,
}

/// Itemized composable-security bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityBound {
    pub variant: Variant,
    pub reliability_terms: Vec<Term>,
    pub secrecy_terms_under_radical: Vec<Term>,
    /// The factor in front of the radical: `2m`, or 2 in exploratory mode.
    pub radical_factor: f64,
    /// Natural log of the total; `-inf` when the total is exactly zero.
    pub ln_total: f64,
    pub total: f64,
    pub key_rate: f64,
}

impl SecurityBound {
    fn assemble(
        variant: Variant,
        rel: Vec<Term>,
        sec: Vec<Term>,
        m: usize,
        n: usize,
        mf: MFactor,
    ) -> Self {
        let radical_factor = match (m, mf) {
            (0, _) => 0.0,
            (_, MFactor::Keep) => 2.0 * m as f64,
            (_, MFactor::DropExploratory) => 2.0,
        };
        let mut parts: Vec<f64> = rel.iter().map(|t| t.ln_value).collect();
        if radical_factor > 0.0 {
            let ln_sec = log_sum_exp(&sec.iter().map(|t| t.ln_value).collect::<Vec<_>>());
            parts.push(radical_factor.ln() + 0.5 * ln_sec);
        }
        let ln_total = log_sum_exp(&parts);
        SecurityBound {
            variant,
            reliability_terms: rel,
            secrecy_terms_under_radical: sec,
            radical_factor,
            ln_total,
            total: ln_total.exp(),
            key_rate: m as f64 / n as f64,
        }
    }

    pub fn reliability_sum(&self) -> f64 {
        log_sum_exp(
            &self
                .reliability_terms
                .iter()
                .map(|t| t.ln_value)
                .collect::<Vec<_>>(),
        )
        .exp()
    }

    pub fn secrecy_sum(&self) -> f64 {
        log_sum_exp(
            &self
                .secrecy_terms_under_radical
                .iter()
                .map(|t| t.ln_value)
                .collect::<Vec<_>>(),
        )
        .exp()
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln e^{−2 (n′/(n+n′))² · size · ε²}`.
fn ln_partition(ratio_num: f64, ratio_den: f64, size: f64, eps: f64) -> f64 {
    let q = ratio_num / ratio_den;
    -2.0 * q * q * size * eps * eps
}

/// `ln 2^{n·H2(x) − excess}`.
fn ln_code(n: usize, x: f64, excess: f64) -> f64 {
    LN_2 * (n as f64 * h2_unchecked(x) - excess)
}

/// `e^{−2 (n′/(n+n′))² n ε²}`: tail bound for a uniform split of an
/// `(n+n′)`-bit string into parts of sizes `n` and `n′`.
pub fn hoeffding_partition_bound(n: usize, n_prime: usize, eps: f64) -> f64 {
    ln_partition(n_prime as f64, (n + n_prime) as f64, n as f64, eps).exp()
}

/// Tail bounds for independently drawn basis bits with `Pr(b_i = 0) = p`:
/// `(Pr(|b| ≤ (1−p)N/2) ≤ e^{−N(1−p)²/2}, Pr(|b̄| ≤ pN/2) ≤ e^{−Np²/2})`.
pub fn hoeffding_basis_count_bounds(big_n: usize, p: f64) -> (f64, f64) {
    let nf = big_n as f64;
    (
        (-0.5 * nf * (1.0 - p) * (1.0 - p)).exp(),
        (-0.5 * nf * p * p).exp(),
    )
}

/// Failure bound `2^{n[H2(t/n) − r/n]}` for a random `[n, k]` code and an
/// error of weight at most `t`.
pub fn random_code_bound(n: usize, k: usize, t: usize) -> f64 {
    ln_code(n, t as f64 / n as f64, (n - k) as f64).exp()
}

/// Bound for BB84-INFO-Z.
pub fn bound_bb84_info_z(params: &ProtocolParams, mf: MFactor) -> Result<SecurityBound> {
    expect_variant(params, Variant::Bb84InfoZ)?;
    params.validate_for_bound()?;
    let ProtocolParams {
        n, n_z, n_x, r, m, ..
    } = *params;
    let nf = n as f64;
    let rel = vec![
        Term::new(
            "rel_hoeffding_z",
            ln_partition(n_z as f64, (n + n_z) as f64, nf, params.eps_rel),
        ),
        Term::new(
            "rel_code",
            ln_code(n, params.p_az + params.eps_rel, r as f64),
        ),
    ];
    let sec = vec![
        Term::new(
            "sec_hoeffding_x",
            ln_partition(n_x as f64, (n + n_x) as f64, nf, params.eps_sec),
        ),
        Term::new(
            "sec_code",
            ln_code(n, params.p_ax + params.eps_sec, (n - r - m) as f64),
        ),
    ];
    Ok(SecurityBound::assemble(
        Variant::Bb84InfoZ,
        rel,
        sec,
        m,
        n,
        mf,
    ))
}

/// Bound for standard BB84.
pub fn bound_bb84(params: &ProtocolParams, mf: MFactor) -> Result<SecurityBound> {
    expect_variant(params, Variant::Bb84)?;
    params.validate_for_bound()?;
    let ProtocolParams { n, r, m, .. } = *params;
    let nf = n as f64;
    let p_a = params.p_a();
    let rel = vec![
        Term::new("rel_hoeffding", -0.5 * nf * params.eps_rel * params.eps_rel),
        Term::new("rel_code", ln_code(n, p_a + params.eps_rel, r as f64)),
    ];
    let sec = vec![
        Term::new("sec_hoeffding", -0.5 * nf * params.eps_sec * params.eps_sec),
        Term::new(
            "sec_code",
            ln_code(n, p_a + params.eps_sec, (n - r - m) as f64),
        ),
    ];
    Ok(SecurityBound::assemble(Variant::Bb84, rel, sec, m, n, mf))
}

/// Bound for efficient BB84: four exponential terms and one code term on
/// each side of the radical.
pub fn bound_efficient(params: &ProtocolParams, mf: MFactor) -> Result<SecurityBound> {
    expect_variant(params, Variant::Efficient)?;
    params.validate_for_bound()?;
    let ProtocolParams {
        n,
        n_z,
        n_x,
        r,
        m,
        p,
        ..
    } = *params;
    let big_n = params.big_n as f64;
    let p_a = params.p_a();
    let (nf, nzf, nxf) = (n as f64, n_z as f64, n_x as f64);
    let z_sample = p * big_n / 2.0 - nzf;
    let x_sample = (1.0 - p) * big_n / 2.0 - nxf;
    let ln_basis_z = -0.5 * big_n * p * p;
    let ln_basis_x = -0.5 * big_n * (1.0 - p) * (1.0 - p);
    let (er, es) = (params.eps_rel, params.eps_sec);
    let rel = vec![
        Term::new("rel_basis_z", ln_basis_z),
        Term::new("rel_hoeffding_z", ln_partition(nzf, nf + nzf, z_sample, er)),
        Term::new("rel_basis_x", ln_basis_x),
        Term::new("rel_hoeffding_x", ln_partition(nxf, nf + nxf, x_sample, er)),
        Term::new("rel_code", ln_code(n, p_a + er, r as f64)),
    ];
    let sec = vec![
        Term::new("sec_basis_z", ln_basis_z),
        Term::new("sec_hoeffding_z", ln_partition(nxf, nf + nxf, z_sample, es)),
        Term::new("sec_basis_x", ln_basis_x),
        Term::new("sec_hoeffding_x", ln_partition(nzf, nf + nzf, x_sample, es)),
        Term::new("sec_code", ln_code(n, p_a + es, (n - r - m) as f64)),
    ];
    Ok(SecurityBound::assemble(
        Variant::Efficient,
        rel,
        sec,
        m,
        n,
        mf,
    ))
}

/// Bound for modified efficient BB84.
pub fn bound_modified_efficient(params: &ProtocolParams, mf: MFactor) -> Result<SecurityBound> {
    expect_variant(params, Variant::ModifiedEfficient)?;
    params.validate_for_bound()?;
    let ProtocolParams {
        n,
        n_z,
        n_x,
        t_z,
        t_x,
        r,
        m,
        ..
    } = *params;
    let p_a = params.p_a();
    let (tzf, txf, nzf, nxf) = (t_z as f64, t_x as f64, n_z as f64, n_x as f64);
    let (er, es) = (params.eps_rel, params.eps_sec);
    let rel = vec![
        Term::new("rel_hoeffding_z", ln_partition(nzf, tzf + nzf, tzf, er)),
        Term::new("rel_hoeffding_x", ln_partition(nxf, txf + nxf, txf, er)),
        Term::new("rel_code", ln_code(n, p_a + er, r as f64)),
    ];
    let sec = vec![
        Term::new("sec_hoeffding_z", ln_partition(nxf, tzf + nxf, tzf, es)),
        Term::new("sec_hoeffding_x", ln_partition(nzf, txf + nzf, txf, es)),
        Term::new("sec_code", ln_code(n, p_a + es, (n - r - m) as f64)),
    ];
    Ok(SecurityBound::assemble(
        Variant::ModifiedEfficient,
        rel,
        sec,
        m,
        n,
        mf,
    ))
}

/// Dispatches to the bound of `params.variant`.
pub fn security_bound(params: &ProtocolParams, mf: MFactor) -> Result<SecurityBound> {
    match params.variant {
        Variant::Bb84InfoZ => bound_bb84_info_z(params, mf),
        Variant::Bb84 => bound_bb84(params, mf),
        Variant::Efficient => bound_efficient(params, mf),
        Variant::ModifiedEfficient => bound_modified_efficient(params, mf),
    }
}

/// Reliability part only: the bound on `Pr[k ≠ k_B ∧ T = 1]`.
pub fn reliability_bound(params: &ProtocolParams) -> Result<f64> {
    Ok(security_bound(params, MFactor::Keep)?.reliability_sum())
}

fn expect_variant(params: &ProtocolParams, v: Variant) -> Result<()> {
    if params.variant == v {
        Ok(())
    } else {
        Err(invalid(format!(
            "expected variant {v}, got {}",
            params.variant
        )))
    }
}

/// Bisection tolerance for threshold roots.
pub const THRESHOLD_TOL: f64 = 1e-9;

/// Root of `h(x) = target` for increasing `h` on `[lo, hi]`.
fn bisect_increasing(h: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > THRESHOLD_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Asymptotic error-rate threshold.
///
/// For single-threshold variants this is the root of `2·H2(p) = 1` on
/// `(0, 1/2)`. For BB84-INFO-Z it is the `p_ax` solving
/// `H2(p_ax) = 1 − H2(p_az)` for the given `p_az ∈ [0, 1/2]`.
pub fn asymptotic_threshold(variant: Variant, p_az: Option<f64>) -> Result<f64> {
    match variant {
        Variant::Bb84InfoZ => {
            let p_az = p_az.ok_or_else(|| invalid("BB84-INFO-Z threshold needs p_az"))?;
            if !(0.0..=0.5).contains(&p_az) {
                return Err(invalid(format!("p_az = {p_az} outside [0, 1/2]")));
            }
            let target = 1.0 - h2_unchecked(p_az);
            if target >= 1.0 {
                return Ok(0.5);
            }
            if target <= 0.0 {
                return Ok(0.0);
            }
            Ok(bisect_increasing(h2_unchecked, target, 0.0, 0.5))
        }
        _ => Ok(bisect_increasing(|p| 2.0 * h2_unchecked(p), 1.0, 0.0, 0.5)),
    }
}

/// Error-rate thresholds entering the key-rate formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Thresholds {
    Single(f64),
    Split { p_az: f64, p_ax: f64 },
}

/// Upper bound on the secret key rate `m/n`:
/// `1 − H2(p_ax + ε_sec) − H2(p_az + ε_rel)`, clamped below at 0.
pub fn max_key_rate(
    variant: Variant,
    thresholds: Thresholds,
    eps_sec: f64,
    eps_rel: f64,
) -> Result<f64> {
    let (p_az, p_ax) = match (variant, thresholds) {
        (_, Thresholds::Single(p)) => (p, p),
        (Variant::Bb84InfoZ, Thresholds::Split { p_az, p_ax }) => (p_az, p_ax),
        (v, Thresholds::Split { .. }) => {
            return Err(invalid(format!("{v} uses a single threshold")))
        }
    };
    let rate = 1.0 - h2(p_ax + eps_sec)? - h2(p_az + eps_rel)?;
    Ok(rate.max(0.0))
}

/// Estimated worst-case tail of a uniform split, swept over all string weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTail {
    pub n: usize,
    pub n_prime: usize,
    pub p: f64,
    pub eps: f64,
    /// One estimate per string weight `0..=n+n′`.
    pub per_weight: Vec<McEstimate>,
    /// Weight whose estimate is largest.
    pub argmax_weight: usize,
    pub max: McEstimate,
    pub bound: f64,
}

impl PartitionTail {
    /// True if no weight's interval lies entirely above the bound.
    pub fn within_bound(&self) -> bool {
        self.per_weight
            .iter()
            .all(|e| e.consistent_with_upper_bound(self.bound))
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo estimate of `Pr[(|C_A|/n ≥ p+ε) ∧ (|C_B|/n′ ≤ p)]` for a
/// uniform split of an `(n+n′)`-bit string, maximized over the string weight.
///
/// The event depends on the string only through its weight, so the sweep
/// over weights covers every string. Boundary comparisons are inclusive up to
/// `1e-9` so rounding never shrinks the event.
#[allow(clippy::too_many_arguments)]
pub fn mc_partition_tail(
    n: usize,
    n_prime: usize,
    p: f64,
    eps: f64,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<PartitionTail> {
    if n == 0 || n_prime == 0 || eps <= 0.0 || trials == 0 {
        return Err(invalid(
            "mc_partition_tail needs n, n' >= 1, eps > 0 and trials >= 1",
        ));
    }
    let total = n + n_prime;
    let a_threshold = n as f64 * (p + eps) - 1e-9;
    let b_threshold = n_prime as f64 * p + 1e-9;
    let per_weight: Vec<McEstimate> = (0..=total)
        .map(|w| {
            let hits = count_trials(
                trials,
                splitmix64(seed ^ (w as u64).wrapping_mul(0x2545_F491_4F6C_DD1D)),
                exec,
                |_, rng| {
                    // The string has ones at positions 0..w; A is a uniform n-subset.
                    let a = rand::seq::index::sample(rng, total, n);
                    let ones_a = a.iter().filter(|&i| i < w).count();
                    let ones_b = w - ones_a;
                    ones_a as f64 >= a_threshold && ones_b as f64 <= b_threshold
                },
            );
            McEstimate::wilson99(hits, trials)
        })
        .collect();
    let (argmax_weight, max) =
        per_weight
            .iter()
            .enumerate()
            .fold((0, per_weight[0]), |best, (w, e)| {
                if e.estimate > best.1.estimate {
                    (w, *e)
                } else {
                    best
                }
            });
    Ok(PartitionTail {
        n,
        n_prime,
        p,
        eps,
        per_weight,
        argmax_weight,
        max,
        bound: hoeffding_partition_bound(n, n_prime, eps),
    })
}

/// Monte Carlo frequencies of `|b| ≤ (1−p)N/2` and `|b̄| ≤ pN/2` for
/// independent basis bits with `Pr(b_i = 0) = p`.
pub fn mc_basis_counts(
    big_n: usize,
    p: f64,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> (McEstimate, McEstimate) {
    let ones_limit = (1.0 - p) * big_n as f64 / 2.0;
    let zeros_limit = p * big_n as f64 / 2.0;
    let ones = count_trials(trials, seed, exec, |_, rng| {
        let w = (0..big_n).filter(|_| !rng.random_bool(p)).count();
        w as f64 <= ones_limit
    });
    let zeros = count_trials(trials, splitmix64(seed), exec, |_, rng| {
        let z = (0..big_n).filter(|_| rng.random_bool(p)).count();
        z as f64 <= zeros_limit
    });
    (
        McEstimate::wilson99(ones, trials),
        McEstimate::wilson99(zeros, trials),
    )
}
