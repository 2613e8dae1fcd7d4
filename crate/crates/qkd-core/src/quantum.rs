//! Dense state-vector laboratory for tiny `N`: Eve's joint attack, its
//! symmetrization, the Fourier states `η_ℓ`, and exact evaluation of the
//! information-versus-disturbance and composable-security inequalities.
//!
//! Index conventions: a register of `N` qubits uses the index order of
//! [`BitString::from_index`], so qubit 0 is the most significant bit. A probe
//! tensored with qubits has index `e·2^N + q`. The symmetrized attack orders
//! its registers as `(E, M, qubits)`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::{h2_unchecked, ProtocolParams};
use crate::coding::{coset_decode, syndrome, LinearCode};
use crate::error::{check_len, invalid, Error, Result};
use crate::gf2::{enumerate_full_rank, BitMatrix, BitString};
use crate::par::{map_trials, Exec};
use crate::protocol::{enumerate_basis_partitions, testing_function, BasisPartition};

pub type C64 = Complex64;

/// Unitarity tolerance for attack operators.
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest Hermiticity defect accepted by [`trace_distance`].
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Slack allowed when comparing the two sides of an inequality.
pub const INEQUALITY_SLACK: f64 = 1e-9;
/// Largest qubit count accepted by [`symmetrize`].
pub const MAX_QUBITS: usize = 4;
/// Largest total dimension of an attack operator.
pub const MAX_DIM: usize = 4096;
/// Largest INFO length for the exhaustive key-state constructions.
pub const MAX_INFO_BITS: usize = 3;
/// Conditioning probabilities at or below this value count as zero.
pub const ZERO_PROBABILITY: f64 = 1e-12;

/// Pure state with subsystem dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub dims: Vec<usize>,
    pub amplitudes: DVector<C64>,
}

impl DenseState {
    pub fn new(dims: Vec<usize>, amplitudes: DVector<C64>) -> Result<Self> {
        check_len(dims.iter().product(), amplitudes.len())?;
        Ok(DenseState { dims, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn density(&self) -> DenseOperator {
        DenseOperator {
            dims: self.dims.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Square operator with subsystem dimensions. Density operators may be
/// sub-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    pub dims: Vec<usize>,
    pub matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        check_len(d, matrix.nrows())?;
        check_len(d, matrix.ncols())?;
        Ok(DenseOperator { dims, matrix })
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let d = dims.iter().product();
        DenseOperator {
            dims,
            matrix: DMatrix::zeros(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Largest entry of `|A − A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs(&(&self.matrix - self.matrix.adjoint()))
    }
}

/// Operator that is block diagonal in a classical label; each block is one
/// value of the label.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    pub blocks: Vec<DenseOperator>,
}

impl BlockOperator {
    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }
}

fn vec_max_abs(v: &DVector<C64>) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
fn trace_norm_hermitian(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.adjoint()).scale(0.5);
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .sum()
}

/// `½ tr|ρ − σ|` for Hermitian operators.
pub fn trace_distance(rho: &DenseOperator, sigma: &DenseOperator) -> Result<f64> {
    if rho.dims != sigma.dims {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    for op in [rho, sigma] {
        let defect = op.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian(defect));
        }
    }
    Ok(0.5 * trace_norm_hermitian(&(&rho.matrix - &sigma.matrix)))
}

/// Trace distance of two block-diagonal operators with the same labels.
pub fn block_trace_distance(rho: &BlockOperator, sigma: &BlockOperator) -> Result<f64> {
    check_len(rho.blocks.len(), sigma.blocks.len())?;
    rho.blocks
        .iter()
        .zip(&sigma.blocks)
        .map(|(a, b)| trace_distance(a, b))
        .sum()
}

/// Eve's attack: a unitary on `probe ⊗ N qubits` and the probe's initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    pub n_qubits: usize,
    pub probe_dim: usize,
    pub probe_init: DVector<C64>,
    pub u: DenseOperator,
}

impl AttackSpec {
    /// Attack with the probe starting in its first basis state.
    pub fn new(n_qubits: usize, probe_dim: usize, u: DMatrix<C64>) -> Result<Self> {
        let dim = probe_dim << n_qubits;
        if dim > MAX_DIM {
            return Err(Error::TooLarge(format!(
                "attack dimension {dim} > {MAX_DIM}"
            )));
        }
        let u = DenseOperator::new(vec![probe_dim, 1 << n_qubits], u)?;
        let mut probe_init = DVector::zeros(probe_dim);
        probe_init[0] = C64::new(1.0, 0.0);
        let attack = AttackSpec {
            n_qubits,
            probe_dim,
            probe_init,
            u,
        };
        let dev = attack.unitarity_defect();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(attack)
    }

    /// Replaces the probe's initial state, which must be normalized.
    pub fn with_probe_init(mut self, init: DVector<C64>) -> Result<Self> {
        check_len(self.probe_dim, init.len())?;
        if (init.norm() - 1.0).abs() > UNITARY_TOL {
            return Err(invalid("probe initial state must be normalized"));
        }
        self.probe_init = init;
        Ok(self)
    }

    /// The attack that does nothing.
    pub fn identity(n_qubits: usize, probe_dim: usize) -> Result<Self> {
        Self::new(
            n_qubits,
            probe_dim,
            DMatrix::identity(probe_dim << n_qubits, probe_dim << n_qubits),
        )
    }

    /// Copies every qubit's z value into a `2^N`-dimensional probe:
    /// `|e⟩|q⟩ ↦ |e ⊕ q⟩|q⟩`. Equivalent to intercept-resend in the z basis.
    pub fn z_copy(n_qubits: usize) -> Result<Self> {
        let q = 1usize << n_qubits;
        let mut u = DMatrix::zeros(q * q, q * q);
        for e in 0..q {
            for x in 0..q {
                u[((e ^ x) * q + x, e * q + x)] = C64::new(1.0, 0.0);
            }
        }
        Self::new(n_qubits, q, u)
    }

    /// Haar-random unitary attack.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, probe_dim: usize, rng: &mut R) -> Result<Self> {
        let dim = probe_dim << n_qubits;
        if dim > MAX_DIM {
            return Err(Error::TooLarge(format!(
                "attack dimension {dim} > {MAX_DIM}"
            )));
        }
        Self::new(n_qubits, probe_dim, haar_unitary(dim, rng))
    }

    pub fn dim(&self) -> usize {
        self.probe_dim << self.n_qubits
    }

    /// Largest entry of `|U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let u = &self.u.matrix;
        max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(u.nrows(), u.ncols())))
    }
}

/// Haar-distributed unitary from the QR decomposition of a complex Gaussian
/// matrix, with the phases of `R`'s diagonal divided out.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    });
    let qr = z.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// `|i⟩_b = ⊗_j |i_j⟩_{b_j}` with `|0⟩_1 = (|0⟩+|1⟩)/√2` and `|1⟩_1 = (|0⟩−|1⟩)/√2`.
pub fn encode_state(i: &BitString, b: &BitString) -> Result<DenseState> {
    check_len(i.len(), b.len())?;
    let n = i.len();
    let amps = DVector::from_fn(1 << n, |q, _| {
        let qs = BitString::from_index(q as u64, n);
        let mut a = 1.0;
        for j in 0..n {
            if b.get(j) {
                a *= std::f64::consts::FRAC_1_SQRT_2
                    * if i.get(j) && qs.get(j) { -1.0 } else { 1.0 };
            } else if i.get(j) != qs.get(j) {
                return C64::new(0.0, 0.0);
            }
        }
        C64::new(a, 0.0)
    });
    DenseState::new(vec![2; n], amps)
}

/// Applies a Hadamard to every qubit `j` with `b_j = 1` in a vector laid out
/// as `outer ⊗ N qubits`.
fn hadamard_on(v: &mut DVector<C64>, n_qubits: usize, b: &BitString) {
    let q = 1usize << n_qubits;
    let outer = v.len() / q;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n_qubits {
        if !b.get(j) {
            continue;
        }
        let bit = 1usize << (n_qubits - 1 - j);
        for o in 0..outer {
            for x in 0..q {
                if x & bit == 0 {
                    let (a0, a1) = (v[o * q + x], v[o * q + (x | bit)]);
                    v[o * q + x] = (a0 + a1) * h;
                    v[o * q + (x | bit)] = (a0 - a1) * h;
                }
            }
        }
    }
}

/// Eve's unnormalized probe states `|E′_{i,j}⟩_b` for every `j`, indexed by
/// `j.to_index()`, defined by `U|init⟩|i⟩_b = Σ_j |E′_{i,j}⟩_b |j⟩_b`.
pub fn extract_e_prime(
    attack: &AttackSpec,
    i: &BitString,
    b: &BitString,
) -> Result<Vec<DVector<C64>>> {
    check_len(attack.n_qubits, i.len())?;
    check_len(attack.n_qubits, b.len())?;
    let dev = attack.unitarity_defect();
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    Ok(e_prime_unchecked(attack, i, b))
}

fn e_prime_unchecked(attack: &AttackSpec, i: &BitString, b: &BitString) -> Vec<DVector<C64>> {
    let q = 1usize << attack.n_qubits;
    let enc = encode_state(i, b).expect("lengths checked").amplitudes;
    let input = DVector::from_fn(attack.dim(), |idx, _| {
        attack.probe_init[idx / q] * enc[idx % q]
    });
    let mut psi = &attack.u.matrix * input;
    hadamard_on(&mut psi, attack.n_qubits, b);
    (0..q)
        .map(|j| DVector::from_fn(attack.probe_dim, |e, _| psi[e * q + j]))
        .collect()
}

/// `U^sym = (I_E ⊗ S†)(U ⊗ I_M)(I_E ⊗ S)` with
/// `S|i⟩_b|m⟩ = (−1)^{(i⊕b)·m}|i⊕m⟩_b|m⟩` and the new probe `M` starting in
/// `|0_x⟩ = 2^{−N/2} Σ_m |m⟩`.
///
/// In the computational basis `S|q⟩|m⟩ = (−1)^{q·m}|q⊕m⟩|m⟩` for every `b`,
/// so `U^sym` is block diagonal in `m`.
pub fn symmetrize(attack: &AttackSpec) -> Result<AttackSpec> {
    let n = attack.n_qubits;
    if n > MAX_QUBITS {
        return Err(Error::TooLarge(format!("N = {n} > {MAX_QUBITS}")));
    }
    let q = 1usize << n;
    let p = attack.probe_dim;
    let dim = p * q * q;
    if dim > MAX_DIM {
        return Err(Error::TooLarge(format!(
            "symmetrized dimension {dim} > {MAX_DIM}"
        )));
    }
    let parity = |x: usize| if x.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    let u = &attack.u.matrix;
    let mut us = DMatrix::zeros(dim, dim);
    for m in 0..q {
        for e in 0..p {
            for x in 0..q {
                let col = (e * q + m) * q + x;
                let src = e * q + (x ^ m);
                for e2 in 0..p {
                    for x2 in 0..q {
                        let val = u[(e2 * q + (x2 ^ m), src)];
                        if val != C64::new(0.0, 0.0) {
                            us[((e2 * q + m) * q + x2, col)] = val * parity((x & m) ^ (x2 & m));
                        }
                    }
                }
            }
        }
    }
    let plus = 1.0 / (q as f64).sqrt();
    let init = DVector::from_fn(p * q, |idx, _| attack.probe_init[idx / q] * plus);
    AttackSpec::new(n, p * q, us)?.with_probe_init(init)
}

/// All `|E′_{i,j}⟩_b` of one attack for a fixed basis string.
#[derive(Debug, Clone)]
pub struct BranchTable {
    pub n_qubits: usize,
    pub probe_dim: usize,
    pub b: BitString,
    /// `e_prime[i][j]`, both indexed by `to_index()`.
    pub e_prime: Vec<Vec<DVector<C64>>>,
}

impl BranchTable {
    pub fn new(attack: &AttackSpec, b: &BitString) -> Result<Self> {
        check_len(attack.n_qubits, b.len())?;
        let n = attack.n_qubits;
        let e_prime = (0..1u64 << n)
            .map(|i| e_prime_unchecked(attack, &BitString::from_index(i, n), b))
            .collect();
        Ok(BranchTable {
            n_qubits: n,
            probe_dim: attack.probe_dim,
            b: b.clone(),
            e_prime,
        })
    }

    /// `Pr(j | i, b)`.
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.e_prime[i][j].norm_squared()
    }

    /// Largest `|Σ_j Pr(j | i, b) − 1|` over `i`.
    pub fn completeness_defect(&self) -> f64 {
        (0..self.e_prime.len())
            .map(|i| {
                ((0..self.e_prime.len())
                    .map(|j| self.prob(i, j))
                    .sum::<f64>()
                    - 1.0)
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// `Pr(c | b)` for every error string `c` with uniformly random `i`.
    pub fn error_distribution(&self) -> Vec<f64> {
        let q = self.e_prime.len();
        let mut out = vec![0.0; q];
        for i in 0..q {
            for j in 0..q {
                out[i ^ j] += self.prob(i, j) / q as f64;
            }
        }
        out
    }
}

/// Full index of the string whose INFO bits are `info` and TEST bits `test`.
fn assemble(part: &BasisPartition, info: usize, test: usize) -> usize {
    let n = part.info.len();
    let t = part.test.len();
    let mut s = BitString::zeros(part.b.len());
    for (k, &pos) in part.info.iter().enumerate() {
        s.set(pos, (info >> (n - 1 - k)) & 1 == 1);
    }
    for (k, &pos) in part.test.iter().enumerate() {
        s.set(pos, (test >> (t - 1 - k)) & 1 == 1);
    }
    s.to_index() as usize
}

fn parity(x: usize) -> f64 {
    if x.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Pr(j_T | i_T, b, s)` with uniformly random `i_I`.
pub fn test_outcome_prob(
    table: &BranchTable,
    part: &BasisPartition,
    i_t: usize,
    j_t: usize,
) -> f64 {
    let n = part.info.len();
    let mut p = 0.0;
    for ii in 0..1usize << n {
        for ji in 0..1usize << n {
            p += table.prob(assemble(part, ii, i_t), assemble(part, ji, j_t));
        }
    }
    p / (1u64 << n) as f64
}

/// The attack seen with `b, s, i_T, j_T` fixed.
#[derive(Debug, Clone)]
pub struct ConditionedBranch {
    pub n: usize,
    pub probe_dim: usize,
    /// `Pr(j_T | i_I, i_T, b, s)` for each `i_I`.
    pub pr_jt: Vec<f64>,
    /// `|E_{i_I,j_I}⟩ = |E′_{i,j}⟩ / √Pr(j_T | i_I, i_T, b, s)`.
    pub e: Vec<Vec<DVector<C64>>>,
}

impl ConditionedBranch {
    /// Fails with [`Error::ZeroProbability`] if some `i_I` cannot produce `j_T`.
    pub fn new(table: &BranchTable, part: &BasisPartition, i_t: usize, j_t: usize) -> Result<Self> {
        check_len(table.n_qubits, part.b.len())?;
        let n = part.info.len();
        let size = 1usize << n;
        let mut pr_jt = Vec::with_capacity(size);
        let mut e = Vec::with_capacity(size);
        for ii in 0..size {
            let i = assemble(part, ii, i_t);
            let p: f64 = (0..size)
                .map(|ji| table.prob(i, assemble(part, ji, j_t)))
                .sum();
            if p <= ZERO_PROBABILITY {
                return Err(Error::ZeroProbability(format!(
                    "Pr(j_T={j_t} | i_I={ii}, i_T={i_t}) = {p:e}"
                )));
            }
            let scale = 1.0 / p.sqrt();
            e.push(
                (0..size)
                    .map(|ji| table.e_prime[i][assemble(part, ji, j_t)].scale(scale))
                    .collect(),
            );
            pr_jt.push(p);
        }
        Ok(ConditionedBranch {
            n,
            probe_dim: table.probe_dim,
            pr_jt,
            e,
        })
    }

    /// `Pr(i_I | i_T, j_T, b, s)` under a uniform prior on `i_I`.
    pub fn info_posterior(&self) -> Vec<f64> {
        let total: f64 = self.pr_jt.iter().sum();
        self.pr_jt.iter().map(|p| p / total).collect()
    }

    /// `(ρ^{i_I})_E = Σ_{j_I} |E_{i_I,j_I}⟩⟨E_{i_I,j_I}|`.
    pub fn rho_e(&self, ii: usize) -> DMatrix<C64> {
        let mut rho = DMatrix::zeros(self.probe_dim, self.probe_dim);
        for v in &self.e[ii] {
            rho += v * v.adjoint();
        }
        rho
    }

    /// Purification `|φ_{i_I}⟩ = Σ_{j_I} |E_{i_I,j_I}⟩ ⊗ |i_I ⊕ j_I⟩`.
    pub fn phi(&self, ii: usize) -> DVector<C64> {
        let size = 1usize << self.n;
        let mut v = DVector::zeros(self.probe_dim * size);
        for (ji, e) in self.e[ii].iter().enumerate() {
            for k in 0..self.probe_dim {
                v[k * size + (ii ^ ji)] += e[k];
            }
        }
        v
    }
}

/// Fourier states `η_ℓ = 2^{−n} Σ_{i_I} (−1)^{i_I·ℓ} |φ_{i_I}⟩` with norms `d_ℓ`.
pub fn fourier_eta(cond: &ConditionedBranch) -> Vec<(DVector<C64>, f64)> {
    let size = 1usize << cond.n;
    let phis: Vec<DVector<C64>> = (0..size).map(|ii| cond.phi(ii)).collect();
    (0..size)
        .map(|l| {
            let mut eta = DVector::zeros(phis[0].len());
            for (ii, phi) in phis.iter().enumerate() {
                eta.axpy(
                    C64::new(parity(ii & l) / size as f64, 0.0),
                    phi,
                    C64::new(1.0, 0.0),
                );
            }
            let d = eta.norm();
            (eta, d)
        })
        .collect()
}

/// `Pr[C_I = c | i_T, j_T, b, s]` for every `c`, with `i_I` uniform, in the
/// basis of `table`.
pub fn info_error_distribution(
    table: &BranchTable,
    part: &BasisPartition,
    i_t: usize,
    j_t: usize,
) -> Result<Vec<f64>> {
    let size = 1usize << part.info.len();
    let mut joint = vec![0.0; size];
    let mut total = 0.0;
    for ii in 0..size {
        for ji in 0..size {
            let p = table.prob(assemble(part, ii, i_t), assemble(part, ji, j_t));
            joint[ii ^ ji] += p;
            total += p;
        }
    }
    if total <= ZERO_PROBABILITY {
        return Err(Error::ZeroProbability(format!(
            "Pr(j_T={j_t} | i_T={i_t}) = 0"
        )));
    }
    Ok(joint.into_iter().map(|p| p / total).collect())
}

/// Every full-rank stacked pair `(P_C, P_K)` of shapes `r×n`, `m×n` with its
/// uniform probability.
pub fn code_draws(r: usize, m: usize, n: usize) -> Result<Vec<(BitMatrix, BitMatrix, f64)>> {
    let all = enumerate_full_rank(r + m, n)?;
    let w = 1.0 / all.len() as f64;
    all.into_iter()
        .map(|stacked| {
            let rows = stacked.rows().to_vec();
            let pc = BitMatrix::from_rows(rows[..r].to_vec(), n)?;
            let pk = BitMatrix::from_rows(rows[r..].to_vec(), n)?;
            Ok((pc, pk, w))
        })
        .collect()
}

/// The `n` basis vectors `v_1..v_n`: rows of `P_C`, then `P_K`, then a completion.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanBasis {
    pub r: usize,
    pub m: usize,
    pub vectors: BitMatrix,
}

impl SpanBasis {
    pub fn new(p_c: &BitMatrix, p_k: &BitMatrix) -> Result<Self> {
        let vectors = p_c.stack(p_k)?.extend_to_basis()?;
        Ok(SpanBasis {
            r: p_c.n_rows(),
            m: p_k.n_rows(),
            vectors,
        })
    }

    /// Rows `v_1..v_{r′}` spanning `V_{r′}`.
    pub fn v(&self, r_prime: usize) -> BitMatrix {
        BitMatrix::from_rows(
            self.vectors.rows()[..r_prime].to_vec(),
            self.vectors.n_cols(),
        )
        .expect("same width")
    }

    /// Rows `v_{r′+1}..v_n` spanning the complement `V_{r′}^c`.
    pub fn v_complement(&self, r_prime: usize) -> BitMatrix {
        BitMatrix::from_rows(
            self.vectors.rows()[r_prime..].to_vec(),
            self.vectors.n_cols(),
        )
        .expect("same width")
    }
}

/// Eve's key-conditioned states `ρ̂_k`, one block per `(P_C, P_K)` pair:
/// `ρ̂_k = 2^{−(n−r−m)} Σ Pr(P_C, P_K) (ρ^{i_I})_E ⊗ |P_C,P_K⟩⟨P_C,P_K|`
/// over `i_I` with `i_I·P_Cᵀ = ξ` and `i_I·P_Kᵀ = k`. Indexed by `k.to_index()`.
pub fn rho_hat_keys(
    attack: &AttackSpec,
    part: &BasisPartition,
    i_t: usize,
    j_t: usize,
    xi: &BitString,
    m: usize,
) -> Result<Vec<BlockOperator>> {
    let n = part.info.len();
    let r = xi.len();
    if n > MAX_INFO_BITS {
        return Err(Error::TooLarge(format!("n = {n} > {MAX_INFO_BITS}")));
    }
    if r + m > n {
        return Err(invalid(format!("r + m = {} exceeds n = {n}", r + m)));
    }
    let table = BranchTable::new(attack, &part.b)?;
    let cond = ConditionedBranch::new(&table, part, i_t, j_t)?;
    let draws = code_draws(r, m, n)?;
    let p = attack.probe_dim;
    let norm = 1.0 / (1u64 << (n - r - m)) as f64;
    let mut out: Vec<BlockOperator> = (0..1usize << m)
        .map(|_| BlockOperator {
            blocks: vec![DenseOperator::zeros(vec![p]); draws.len()],
        })
        .collect();
    let rhos: Vec<DMatrix<C64>> = (0..1usize << n).map(|ii| cond.rho_e(ii)).collect();
    for (d, (pc, pk, w)) in draws.iter().enumerate() {
        for (ii, rho) in rhos.iter().enumerate() {
            let info = BitString::from_index(ii as u64, n);
            if pc.mat_vec(&info)? != *xi {
                continue;
            }
            let k = pk.mat_vec(&info)?.to_index() as usize;
            out[k].blocks[d].matrix += rho.scale(w * norm);
        }
    }
    Ok(out)
}

/// Both sides of the information-versus-disturbance inequality for a 1-bit key.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceCheck {
    pub t: usize,
    /// `½ tr|ρ̂_0 − ρ̂_1|`.
    pub lhs: f64,
    /// `Pr_inverted[|C_I| ≥ t | i_T, j_T, b, s]`.
    pub inverted_tail: f64,
    /// `2^{n[H2(t/n) − (n−r−1)/n]}`.
    pub code_term: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates `½ tr|ρ̂_0 − ρ̂_1| ≤ 2√(Pr_inv[|C_I| ≥ t | …] + 2^{n[H2(t/n) − (n−r−1)/n]})`
/// exactly, with `r = ξ.len()` and `m = 1`.
pub fn verify_info_disturbance(
    attack: &AttackSpec,
    part: &BasisPartition,
    i_t: usize,
    j_t: usize,
    xi: &BitString,
    t: usize,
) -> Result<DisturbanceCheck> {
    let n = part.info.len();
    let r = xi.len();
    if 2 * t > n {
        return Err(invalid(format!("t = {t} exceeds n/2")));
    }
    let keys = rho_hat_keys(attack, part, i_t, j_t, xi, 1)?;
    let lhs = block_trace_distance(&keys[0], &keys[1])?;
    let inverted = BranchTable::new(attack, &part.b.xor(&part.s)?)?;
    let dist = info_error_distribution(&inverted, part, i_t, j_t)?;
    let inverted_tail: f64 = dist
        .iter()
        .enumerate()
        .filter(|(c, _)| c.count_ones() as usize >= t)
        .map(|(_, p)| p)
        .sum();
    let code_term = code_term(n, t, n - r - 1);
    let rhs = 2.0 * (inverted_tail + code_term).sqrt();
    Ok(DisturbanceCheck {
        t,
        lhs,
        inverted_tail,
        code_term,
        rhs,
        holds: lhs <= rhs + INEQUALITY_SLACK,
    })
}

/// `2^{n[H2(t/n) − k/n]}`.
fn code_term(n: usize, t: usize, k: usize) -> f64 {
    ((n as f64) * h2_unchecked(t as f64 / n as f64) - k as f64).exp2()
}

/// Largest deviations observed for each symmetrization identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SymmetryCheck {
    pub unitarity: f64,
    pub completeness: f64,
    /// `E′^sym_{i,j} = 2^{−N/2} Σ_m (−1)^{(i⊕j)·m} E′_{i⊕m,j⊕m} ⊗ |m⟩`.
    pub basic_lemma: f64,
    /// `Pr^sym(c | b, s) = Pr(c | b, s)` in the real and inverted bases.
    pub error_probs: f64,
    /// `Pr^sym(j_T | i_T, b, s) = Pr^sym(j_T | i_T, b ⊕ s, s)`.
    pub test_errors: f64,
    /// `Pr^sym(i_I | i_T, j_T, b, s) = 2^{−n}`.
    pub info_uniform: f64,
    /// `Pr^sym(ξ | …, P_C, P_K) = 2^{−r}`.
    pub syndrome_uniform: f64,
    /// `Pr^sym(i_I | …, ξ, P_C, P_K) = 2^{−(n−r)}`.
    pub info_given_syndrome: f64,
    /// `|⟨η_ℓ|η_ℓ′⟩|` for `ℓ ≠ ℓ′`.
    pub eta_orthogonality: f64,
    /// `|Σ_ℓ d_ℓ² − 1|`.
    pub parseval: f64,
    /// `φ_{i_I} = Σ_ℓ (−1)^{i_I·ℓ} η_ℓ`.
    pub reconstruction: f64,
    /// `d_c² = Pr^sym_inverted[C_I = c | i_T, j_T, b, s]`.
    pub lemma_d_inverted: f64,
    /// Conditioning branches skipped because `Pr(j_T | i_T, b, s) = 0`.
    pub skipped_branches: usize,
}

impl SymmetryCheck {
    /// Largest deviation across all identities.
    pub fn max_deviation(&self) -> f64 {
        [
            self.unitarity,
            self.completeness,
            self.basic_lemma,
            self.error_probs,
            self.test_errors,
            self.info_uniform,
            self.syndrome_uniform,
            self.info_given_syndrome,
            self.eta_orthogonality,
            self.parseval,
            self.reconstruction,
            self.lemma_d_inverted,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Evaluates every symmetrization identity for `original`, its symmetrized
/// version `sym`, one partition and every `(i_T, j_T)`; `r` sets the shape of
/// the `(P_C, P_K)` pairs (with `m = 1`) used for the syndrome identities.
pub fn check_symmetrization(
    original: &AttackSpec,
    sym: &AttackSpec,
    part: &BasisPartition,
    r: usize,
) -> Result<SymmetryCheck> {
    let big_n = original.n_qubits;
    let q = 1usize << big_n;
    let n = part.info.len();
    let mut out = SymmetryCheck {
        unitarity: sym.unitarity_defect(),
        ..Default::default()
    };
    let b0 = part.b.xor(&part.s)?;
    let orig = BranchTable::new(original, &part.b)?;
    let real = BranchTable::new(sym, &part.b)?;
    let inv = BranchTable::new(sym, &b0)?;
    let orig_inv = BranchTable::new(original, &b0)?;
    out.completeness = real.completeness_defect().max(inv.completeness_defect());

    let norm = 1.0 / (q as f64).sqrt();
    for i in 0..q {
        for j in 0..q {
            let mut expected = DVector::zeros(sym.probe_dim);
            for m in 0..q {
                let e = &orig.e_prime[i ^ m][j ^ m];
                for k in 0..original.probe_dim {
                    expected[k * q + m] += e[k] * (parity((i ^ j) & m) * norm);
                }
            }
            out.basic_lemma = out
                .basic_lemma
                .max(vec_max_abs(&(&real.e_prime[i][j] - expected)));
        }
    }

    for (a, b) in [(&orig, &real), (&orig_inv, &inv)] {
        for (x, y) in a.error_distribution().iter().zip(b.error_distribution()) {
            out.error_probs = out.error_probs.max((x - y).abs());
        }
    }

    let draws = code_draws(r, 1, n)?;
    let tests = 1usize << part.test.len();
    for i_t in 0..tests {
        for j_t in 0..tests {
            let p_real = test_outcome_prob(&real, part, i_t, j_t);
            let p_inv = test_outcome_prob(&inv, part, i_t, j_t);
            out.test_errors = out.test_errors.max((p_real - p_inv).abs());
            if p_real <= ZERO_PROBABILITY {
                out.skipped_branches += 1;
                continue;
            }
            let cond = ConditionedBranch::new(&real, part, i_t, j_t)?;
            let post = cond.info_posterior();
            let uniform = 1.0 / (1u64 << n) as f64;
            for p in &post {
                out.info_uniform = out.info_uniform.max((p - uniform).abs());
            }
            for (pc, _, _) in &draws {
                let mut by_xi: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
                for (ii, p) in post.iter().enumerate() {
                    let xi = pc.mat_vec(&BitString::from_index(ii as u64, n))?.to_index();
                    by_xi.entry(xi).or_default().push(*p);
                }
                for members in by_xi.values() {
                    let p_xi: f64 = members.iter().sum();
                    out.syndrome_uniform = out
                        .syndrome_uniform
                        .max((p_xi - (-(r as f64)).exp2()).abs());
                    for p in members {
                        out.info_given_syndrome = out
                            .info_given_syndrome
                            .max((p / p_xi - (-((n - r) as f64)).exp2()).abs());
                    }
                }
            }
            let etas = fourier_eta(&cond);
            let mut parseval = 0.0;
            for (l, (eta, d)) in etas.iter().enumerate() {
                parseval += d * d;
                for (eta2, _) in &etas[l + 1..] {
                    out.eta_orthogonality = out.eta_orthogonality.max(eta.dotc(eta2).norm());
                }
            }
            out.parseval = out.parseval.max((parseval - 1.0).abs());
            out.reconstruction = out.reconstruction.max(reconstruction_defect(&cond, &etas));
            let dist = info_error_distribution(&inv, part, i_t, j_t)?;
            for ((_, d), p) in etas.iter().zip(dist) {
                out.lemma_d_inverted = out.lemma_d_inverted.max((d * d - p).abs());
            }
        }
    }
    Ok(out)
}

/// Largest entry of `|φ_{i_I} − Σ_ℓ (−1)^{i_I·ℓ} η_ℓ|` over `i_I`.
pub fn reconstruction_defect(cond: &ConditionedBranch, etas: &[(DVector<C64>, f64)]) -> f64 {
    (0..etas.len())
        .map(|ii| {
            let mut v = cond.phi(ii);
            for (l, (eta, _)) in etas.iter().enumerate() {
                v.axpy(C64::new(-parity(ii & l), 0.0), eta, C64::new(1.0, 0.0));
            }
            vec_max_abs(&v)
        })
        .fold(0.0, f64::max)
}

/// `½ tr|ρ_ABE − ρ_U ⊗ ρ_E|` against its bound, evaluated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposableCheck {
    pub lhs: f64,
    /// `Pr[(k ≠ k_B) ∧ (T = 1)]`.
    pub reliability_failure: f64,
    /// `Pr_inverted[(|C_I| ≥ t) ∧ (T = 1)]` for `t = 0..=n/2`.
    pub inverted_tails: Vec<f64>,
    /// Right-hand side for each `t`.
    pub rhs_by_t: Vec<f64>,
    /// Minimizing `t` and its right-hand side.
    pub t: usize,
    pub rhs: f64,
    /// True iff the inequality holds for every `t`.
    pub holds: bool,
}

/// Largest sizes accepted by [`verify_composable_bound`].
pub const MAX_COMPOSABLE_N: usize = 3;
pub const MAX_COMPOSABLE_INFO: usize = 2;
pub const MAX_COMPOSABLE_KEY: usize = 2;

/// Builds `ρ_ABE`, `ρ_U` and `ρ_E` for a tiny configuration by enumerating
/// `(b, s)`, `i`, `j` and `(P_C, P_K)`, and evaluates
/// `½ tr|ρ_ABE − ρ_U ⊗ ρ_E| ≤ Pr[(k ≠ k_B) ∧ (T = 1)] + 2m√(Pr_inv[(|C_I| ≥ t) ∧ (T = 1)] + 2^{n[H2(t/n) − (n−r−m)/n]})`.
///
/// Bob decodes with the coset decoder and keeps `j_I` when it fails.
pub fn verify_composable_bound(
    attack: &AttackSpec,
    params: &ProtocolParams,
) -> Result<ComposableCheck> {
    let (big_n, n, r, m) = (params.big_n, params.n, params.r, params.m);
    if big_n > MAX_COMPOSABLE_N || n > MAX_COMPOSABLE_INFO || m > MAX_COMPOSABLE_KEY {
        return Err(Error::TooLarge(format!(
            "composable check needs N <= 3, n <= 2, m <= 2 (N={big_n}, n={n}, m={m})"
        )));
    }
    if m == 0 {
        return Err(invalid("composable check needs m >= 1"));
    }
    check_len(big_n, attack.n_qubits)?;
    let partitions = enumerate_basis_partitions(params)?;
    let draws = code_draws(r, m, n)?;
    let codes: Vec<LinearCode> = draws
        .iter()
        .map(|(pc, _, _)| LinearCode::from_parity_check(pc.clone()))
        .collect::<Result<_>>()?;
    let q = 1usize << big_n;
    let t_max = n / 2;
    let mut tails = vec![0.0; t_max + 1];
    let mut failure = 0.0;
    // (label, k_A, k_B) -> weighted sum of |E′⟩⟨E′|.
    let mut blocks: BTreeMap<(Vec<u64>, usize, usize), DMatrix<C64>> = BTreeMap::new();
    for (pidx, (part, w_bs)) in partitions.iter().enumerate() {
        let real = BranchTable::new(attack, &part.b)?;
        let inv = BranchTable::new(attack, &part.b.xor(&part.s)?)?;
        let b_t = part.b_test();
        for i in 0..q {
            let is = BitString::from_index(i as u64, big_n);
            for j in 0..q {
                let c = BitString::from_index((i ^ j) as u64, big_n);
                let c_t = c.select(&part.test);
                let passed = testing_function(params, &c_t, &b_t)?;
                let weight = w_bs / q as f64;
                let p_inv = inv.prob(i, j);
                if passed && p_inv > 0.0 {
                    let wc = c.select(&part.info).weight();
                    for (t, tail) in tails.iter_mut().enumerate() {
                        if wc >= t {
                            *tail += weight * p_inv;
                        }
                    }
                }
                if !passed {
                    continue;
                }
                let p = real.prob(i, j);
                if p == 0.0 {
                    continue;
                }
                let js = BitString::from_index(j as u64, big_n);
                let (i_info, j_info) = (is.select(&part.info), js.select(&part.info));
                let (i_t, j_t) = (is.select(&part.test), js.select(&part.test));
                let e = &real.e_prime[i][j];
                let outer = e * e.adjoint();
                for (d, ((_, pk, w_code), code)) in draws.iter().zip(&codes).enumerate() {
                    let xi = syndrome(code, &i_info)?;
                    let k = pk.mat_vec(&i_info)?;
                    let decoded = coset_decode(code, &xi, &j_info)?;
                    let k_b = pk.mat_vec(decoded.word().unwrap_or(&j_info))?;
                    let w = weight * w_code;
                    if k != k_b {
                        failure += w * p;
                    }
                    let label = vec![
                        pidx as u64,
                        i_t.to_index(),
                        j_t.to_index(),
                        xi.to_index(),
                        d as u64,
                    ];
                    let key = (label, k.to_index() as usize, k_b.to_index() as usize);
                    let entry = blocks
                        .entry(key)
                        .or_insert_with(|| DMatrix::zeros(attack.probe_dim, attack.probe_dim));
                    *entry += outer.scale(w);
                }
            }
        }
    }
    let mut rho_e: BTreeMap<Vec<u64>, DMatrix<C64>> = BTreeMap::new();
    for ((label, _, _), block) in &blocks {
        let entry = rho_e
            .entry(label.clone())
            .or_insert_with(|| DMatrix::zeros(attack.probe_dim, attack.probe_dim));
        *entry += block;
    }
    let keys = 1usize << m;
    let ideal = 1.0 / keys as f64;
    let mut norm = 0.0;
    for (label, e_state) in &rho_e {
        for ka in 0..keys {
            for kb in 0..keys {
                let real = blocks.get(&(label.clone(), ka, kb));
                let diff = match (real, ka == kb) {
                    (Some(rho), true) => rho - e_state.scale(ideal),
                    (Some(rho), false) => rho.clone(),
                    (None, true) => -e_state.scale(ideal),
                    (None, false) => continue,
                };
                norm += trace_norm_hermitian(&diff);
            }
        }
    }
    let lhs = 0.5 * norm;
    let rhs_by_t: Vec<f64> = tails
        .iter()
        .enumerate()
        .map(|(t, tail)| failure + 2.0 * m as f64 * (tail + code_term(n, t, n - r - m)).sqrt())
        .collect();
    let (t, rhs) = rhs_by_t
        .iter()
        .copied()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |best, (t, v)| if v < best.1 { (t, v) } else { best },
        );
    let holds = rhs_by_t.iter().all(|v| lhs <= v + INEQUALITY_SLACK);
    Ok(ComposableCheck {
        lhs,
        reliability_failure: failure,
        inverted_tails: tails,
        rhs_by_t,
        t,
        rhs,
        holds,
    })
}

/// One row of a verification campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub case_id: u64,
    pub big_n: usize,
    pub n: usize,
    pub r: usize,
    pub m: usize,
    /// The `t` with the smallest right-hand side.
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// True iff the inequality holds for every admissible `t`.
    pub holds: bool,
    /// Symmetrization identities checked for this case, if any.
    pub symmetry: Option<SymmetryCheck>,
}

impl CaseRow {
    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Settings for a campaign over random attacks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CampaignConfig {
    pub cases: u64,
    pub big_n: usize,
    pub n: usize,
    pub r: usize,
    /// Dimension of Eve's original probe; `2^N` by default.
    pub probe_dim: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl CampaignConfig {
    pub fn new(cases: u64, big_n: usize, n: usize, r: usize, seed: u64) -> Self {
        CampaignConfig {
            cases,
            big_n,
            n,
            r,
            probe_dim: 1 << big_n,
            seed,
            exec: Exec::default(),
        }
    }
}

/// Draws `(b, s)` with uniform `b` and uniform `s` of weight `n`.
fn random_partition<R: Rng + ?Sized>(
    big_n: usize,
    n: usize,
    rng: &mut R,
) -> Result<BasisPartition> {
    let b = BitString::random(big_n, rng);
    let s = BitString::random_with_weight(big_n, n, rng)?;
    BasisPartition::new(b, s)
}

/// One information-versus-disturbance case: a Haar-random attack is
/// symmetrized, `(b, s)` and `i_T` are drawn uniformly, `j_T` from its
/// distribution under the symmetrized attack, and `ξ` uniformly. Every
/// admissible `t` is evaluated and the symmetrization identities are checked.
pub fn info_disturbance_case<R: Rng + ?Sized>(
    cfg: &CampaignConfig,
    case_id: u64,
    rng: &mut R,
) -> Result<CaseRow> {
    let (big_n, n, r) = (cfg.big_n, cfg.n, cfg.r);
    if n > big_n || r + 1 > n {
        return Err(invalid("need n <= N and r + 1 <= n"));
    }
    let original = AttackSpec::random(big_n, cfg.probe_dim, rng)?;
    let sym = symmetrize(&original)?;
    let part = random_partition(big_n, n, rng)?;
    let tests = 1usize << part.test.len();
    let i_t = rng.random_range(0..tests);
    let table = BranchTable::new(&sym, &part.b)?;
    let probs: Vec<f64> = (0..tests)
        .map(|j_t| test_outcome_prob(&table, &part, i_t, j_t))
        .collect();
    let j_t = sample_index(&probs, rng);
    let xi = BitString::random(r, rng);
    let symmetry = check_symmetrization(&original, &sym, &part, r)?;
    let checks: Vec<DisturbanceCheck> = (0..=n / 2)
        .map(|t| verify_info_disturbance(&sym, &part, i_t, j_t, &xi, t))
        .collect::<Result<_>>()?;
    let best = checks
        .iter()
        .min_by(|a, b| a.rhs.total_cmp(&b.rhs))
        .expect("t = 0 is always admissible");
    Ok(CaseRow {
        case_id,
        big_n,
        n,
        r,
        m: 1,
        t: best.t,
        lhs: best.lhs,
        rhs: best.rhs,
        holds: checks.iter().all(|c| c.holds),
        symmetry: Some(symmetry),
    })
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (k, p) in probs.iter().enumerate() {
        if x < *p {
            return k;
        }
        x -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Runs [`info_disturbance_case`] for `cfg.cases` random attacks.
pub fn info_disturbance_campaign(cfg: &CampaignConfig) -> Result<Vec<CaseRow>> {
    map_trials(cfg.cases, cfg.seed, cfg.exec, |case, rng| {
        info_disturbance_case(cfg, case, rng)
    })
    .into_iter()
    .collect()
}

/// Runs [`verify_composable_bound`] on `cases` Haar-random attacks.
pub fn composable_campaign(
    params: &ProtocolParams,
    cases: u64,
    probe_dim: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<CaseRow>> {
    map_trials(cases, seed, exec, |case, rng| {
        let attack = AttackSpec::random(params.big_n, probe_dim, rng)?;
        let check = verify_composable_bound(&attack, params)?;
        Ok(CaseRow {
            case_id: case,
            big_n: params.big_n,
            n: params.n,
            r: params.r,
            m: params.m,
            t: check.t,
            lhs: check.lhs,
            rhs: check.rhs,
            holds: check.holds,
            symmetry: None,
        })
    })
    .into_iter()
    .collect()
}

/// Symmetrization identities for `cases` random attacks, without the
/// trace-distance inequality.
pub fn symmetry_campaign(cfg: &CampaignConfig) -> Result<Vec<SymmetryCheck>> {
    map_trials(cfg.cases, cfg.seed, cfg.exec, |_, rng| {
        let original = AttackSpec::random(cfg.big_n, cfg.probe_dim, rng)?;
        let sym = symmetrize(&original)?;
        let part = random_partition(cfg.big_n, cfg.n, rng)?;
        check_symmetrization(&original, &sym, &part, cfg.r)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn encode_examples() {
        let s = encode_state(&bs("0"), &bs("0")).unwrap();
        assert_eq!(s.amplitudes.as_slice(), &[c(1.0), c(0.0)]);
        let s = encode_state(&bs("1"), &bs("1")).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(
            (s.amplitudes[0] - c(h)).norm() < 1e-15 && (s.amplitudes[1] - c(-h)).norm() < 1e-15
        );
        let s = encode_state(&bs("01"), &bs("00")).unwrap();
        assert_eq!(s.amplitudes[1], c(1.0));
        assert_eq!(s.norm(), 1.0);
        assert!(encode_state(&bs("01"), &bs("0")).is_err());
    }

    #[test]
    fn identity_e_prime() {
        let a = AttackSpec::identity(2, 2).unwrap();
        for i in 0..4u64 {
            let e = extract_e_prime(&a, &BitString::from_index(i, 2), &bs("01")).unwrap();
            for (j, v) in e.iter().enumerate() {
                let expected = if j as u64 == i { 1.0 } else { 0.0 };
                assert!((v[0] - c(expected)).norm() < 1e-12 && v[1].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn controlled_flip_e_prime() {
        let a = AttackSpec::z_copy(1).unwrap();
        let e = extract_e_prime(&a, &bs("1"), &bs("0")).unwrap();
        assert!(e[0].norm() < 1e-12);
        assert!((e[1][1] - c(1.0)).norm() < 1e-12 && e[1][0].norm() < 1e-12);
    }

    #[test]
    fn non_unitary_attack_is_rejected() {
        let m = DMatrix::from_element(4, 4, c(0.5));
        assert!(matches!(
            AttackSpec::new(1, 2, m),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn trace_distance_examples() {
        let zero = DenseState::new(vec![2], DVector::from_vec(vec![c(1.0), c(0.0)]))
            .unwrap()
            .density();
        let one = DenseState::new(vec![2], DVector::from_vec(vec![c(0.0), c(1.0)]))
            .unwrap()
            .density();
        let mixed = DenseOperator::new(vec![2], DMatrix::identity(2, 2).scale(0.5)).unwrap();
        assert_eq!(trace_distance(&zero, &zero).unwrap(), 0.0);
        assert_relative_eq!(trace_distance(&zero, &one).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(trace_distance(&zero, &mixed).unwrap(), 0.5, epsilon = 1e-12);
        let mut bad = zero.clone();
        bad.matrix[(0, 1)] = c(1e-3);
        assert!(matches!(
            trace_distance(&bad, &zero),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = AttackSpec::random(2, 4, &mut rng).unwrap();
        assert!(a.unitarity_defect() < 1e-12);
        let s = symmetrize(&a).unwrap();
        assert!(s.unitarity_defect() < 1e-10);
        assert_eq!(s.probe_dim, 16);
    }

    #[test]
    fn symmetrized_identity_keeps_outcomes() {
        let a = symmetrize(&AttackSpec::identity(1, 2).unwrap()).unwrap();
        for b in ["0", "1"] {
            let t = BranchTable::new(&a, &bs(b)).unwrap();
            assert_relative_eq!(t.prob(0, 0), 1.0, epsilon = 1e-12);
            assert_relative_eq!(t.prob(1, 1), 1.0, epsilon = 1e-12);
            assert!(t.prob(0, 1) < 1e-12);
        }
    }

    #[test]
    fn random_attack_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = AttackSpec::random(2, 4, &mut rng).unwrap();
        let s = symmetrize(&a).unwrap();
        let part = BasisPartition::new(bs("10"), bs("01")).unwrap();
        let check = check_symmetrization(&a, &s, &part, 0).unwrap();
        assert!(check.max_deviation() < 1e-10, "{check:?}");
    }

    #[test]
    fn unsymmetrized_attack_leaks_info_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = AttackSpec::random(2, 4, &mut rng).unwrap();
        let part = BasisPartition::new(bs("00"), bs("01")).unwrap();
        let table = BranchTable::new(&a, &part.b).unwrap();
        let cond = ConditionedBranch::new(&table, &part, 0, 0).unwrap();
        let dev = cond
            .info_posterior()
            .iter()
            .map(|p| (p - 0.5).abs())
            .fold(0.0, f64::max);
        assert!(dev > 1e-3, "{dev}");
    }

    #[test]
    fn identity_attack_eta() {
        let a = AttackSpec::identity(2, 2).unwrap();
        let part = BasisPartition::new(bs("01"), bs("10")).unwrap();
        let table = BranchTable::new(&a, &part.b).unwrap();
        let cond = ConditionedBranch::new(&table, &part, 1, 1).unwrap();
        let etas = fourier_eta(&cond);
        assert_relative_eq!(etas[0].1, 1.0, epsilon = 1e-12);
        assert!(etas[1].1 < 1e-12);
        assert!(reconstruction_defect(&cond, &etas) < 1e-12);
        // The identity attack makes j_T = 0 impossible when i_T = 1.
        assert!(matches!(
            ConditionedBranch::new(&table, &part, 1, 0),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn rho_hat_examples() {
        let part = BasisPartition::new(bs("000"), bs("110")).unwrap();
        let id = AttackSpec::identity(3, 2).unwrap();
        let keys = rho_hat_keys(&id, &part, 0, 0, &BitString::zeros(0), 2).unwrap();
        for k in &keys {
            assert_relative_eq!(k.trace(), 1.0, epsilon = 1e-12);
        }
        assert!(block_trace_distance(&keys[0], &keys[3]).unwrap() < 1e-12);

        let copy = AttackSpec::z_copy(3).unwrap();
        let keys = rho_hat_keys(&copy, &part, 0, 0, &BitString::zeros(0), 2).unwrap();
        for a in 0..4 {
            assert_relative_eq!(keys[a].trace(), 1.0, epsilon = 1e-12);
            for b in a + 1..4 {
                assert_relative_eq!(
                    block_trace_distance(&keys[a], &keys[b]).unwrap(),
                    1.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn info_disturbance_examples() {
        let part = BasisPartition::new(bs("000"), bs("110")).unwrap();
        let id = symmetrize(&AttackSpec::identity(3, 1).unwrap()).unwrap();
        let xi = bs("1");
        for t in 0..=1 {
            let c = verify_info_disturbance(&id, &part, 0, 0, &xi, t).unwrap();
            assert!(c.lhs < 1e-12 && c.holds);
        }
        let copy = symmetrize(&AttackSpec::z_copy(3).unwrap()).unwrap();
        let c = verify_info_disturbance(&copy, &part, 0, 0, &xi, 0).unwrap();
        assert!(c.holds);
        assert_relative_eq!(c.inverted_tail, 1.0, epsilon = 1e-12);
        assert_relative_eq!(c.code_term, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn composable_examples() {
        let params = ProtocolParams::bb84(1, 0, 1, 0.0, 0.5, 0.5).unwrap();
        let id = AttackSpec::identity(2, 4).unwrap();
        let c = verify_composable_bound(&id, &params).unwrap();
        assert!(c.lhs < 1e-12, "{c:?}");
        assert!(c.reliability_failure < 1e-12);
        assert!(c.holds);
        let ir = AttackSpec::z_copy(2).unwrap();
        let c = verify_composable_bound(&ir, &params).unwrap();
        assert!(c.lhs > 0.0 && c.holds, "{c:?}");
    }

    #[test]
    fn code_draw_count() {
        assert_eq!(code_draws(1, 1, 2).unwrap().len(), 6);
        assert_eq!(code_draws(0, 1, 1).unwrap().len(), 1);
        let total: f64 = code_draws(1, 2, 3).unwrap().iter().map(|d| d.2).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn span_basis_is_complete() {
        let sb = SpanBasis::new(&"110".parse().unwrap(), &"011".parse().unwrap()).unwrap();
        assert_eq!(sb.vectors.rank(), 3);
        assert_eq!(sb.v(1).n_rows() + sb.v_complement(1).n_rows(), 3);
    }
}
