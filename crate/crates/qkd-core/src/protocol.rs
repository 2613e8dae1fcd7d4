//! Alice and Bob for the four BB84 variants: basis selection, a classical
//! stand-in channel, the testing function, syndrome reconciliation and
//! privacy amplification.

use std::fmt::{self, Write as _};

use rand::seq::index::sample;
use rand::Rng;

use crate::bounds::{ProtocolParams, Variant};
use crate::coding::{coset_decode_with, syndrome, DecodeOutcome, DecoderSettings, LinearCode};
use crate::error::{check_len, invalid, Result};
use crate::gf2::{random_stacked_full_rank, BitMatrix, BitString};
use crate::par::{map_trials, Exec};
use crate::stats::McEstimate;

/// Tolerance applied to the test thresholds `n_z·p_az` and friends.
const THRESHOLD_TOL: f64 = 1e-9;

/// Bases `b` (0 = z, 1 = x), INFO selector `s`, and the derived index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisPartition {
    pub b: BitString,
    pub s: BitString,
    /// INFO positions (`s_j = 1`), ascending.
    pub info: Vec<usize>,
    /// TEST positions (`s_j = 0`), ascending.
    pub test: Vec<usize>,
    pub info_z: Vec<usize>,
    pub info_x: Vec<usize>,
    pub test_z: Vec<usize>,
    pub test_x: Vec<usize>,
}

impl BasisPartition {
    pub fn new(b: BitString, s: BitString) -> Result<Self> {
        check_len(b.len(), s.len())?;
        let mut p = BasisPartition {
            info: Vec::new(),
            test: Vec::new(),
            info_z: Vec::new(),
            info_x: Vec::new(),
            test_z: Vec::new(),
            test_x: Vec::new(),
            b,
            s,
        };
        for j in 0..p.b.len() {
            match (p.s.get(j), p.b.get(j)) {
                (true, false) => p.info_z.push(j),
                (true, true) => p.info_x.push(j),
                (false, false) => p.test_z.push(j),
                (false, true) => p.test_x.push(j),
            }
            if p.s.get(j) {
                p.info.push(j);
            } else {
                p.test.push(j);
            }
        }
        Ok(p)
    }

    /// Bases of the TEST positions.
    pub fn b_test(&self) -> BitString {
        self.b.select(&self.test)
    }
}

/// Uniform subset of `positions` of the given size, returned sorted.
fn choose<R: Rng + ?Sized>(positions: &[usize], size: usize, rng: &mut R) -> Vec<usize> {
    let mut out: Vec<usize> = sample(rng, positions.len(), size)
        .into_iter()
        .map(|i| positions[i])
        .collect();
    out.sort_unstable();
    out
}

fn string_with_ones(len: usize, ones: impl IntoIterator<Item = usize>) -> BitString {
    let mut s = BitString::zeros(len);
    for j in ones {
        s.set(j, true);
    }
    s
}

/// Draws `(b, s)` from the variant's distribution.
///
/// EFFICIENT draws each basis bit independently (x with probability `1 − p`)
/// and redraws `b` until both `|b| ≥ n_x` and `|b̄| ≥ n_z`; then `s` is uniform
/// over the strings with exactly `n_x` TEST-X and `n_z` TEST-Z positions.
pub fn sample_basis_partition<R: Rng + ?Sized>(
    params: &ProtocolParams,
    rng: &mut R,
) -> Result<BasisPartition> {
    params.validate()?;
    let big_n = params.big_n;
    let all: Vec<usize> = (0..big_n).collect();
    let (b, s) = match params.variant {
        Variant::Bb84 => {
            let b = BitString::random(big_n, rng);
            let s = string_with_ones(big_n, choose(&all, params.n, rng));
            (b, s)
        }
        Variant::Bb84InfoZ => {
            let b = string_with_ones(big_n, choose(&all, params.n_x, rng));
            let s = string_with_ones(big_n, choose(&b.zeros_positions(), params.n, rng));
            (b, s)
        }
        Variant::Efficient | Variant::ModifiedEfficient => {
            let b = if params.variant == Variant::Efficient {
                loop {
                    let b = BitString::from_bits((0..big_n).map(|_| !rng.random_bool(params.p)));
                    if b.weight() >= params.n_x && big_n - b.weight() >= params.n_z {
                        break b;
                    }
                }
            } else {
                string_with_ones(big_n, choose(&all, params.t_x + params.n_x, rng))
            };
            let ones = b.ones_positions();
            let zeros = b.zeros_positions();
            let test_x = choose(&ones, params.n_x, rng);
            let test_z = choose(&zeros, params.n_z, rng);
            let mut s = BitString::ones(big_n);
            for j in test_x.into_iter().chain(test_z) {
                s.set(j, false);
            }
            (b, s)
        }
    };
    BasisPartition::new(b, s)
}

/// Largest `N` accepted by [`enumerate_basis_partitions`].
pub const MAX_ENUM_QUBITS: usize = 12;

/// Every `(b, s)` allowed by the variant together with its probability.
///
/// The list is ordered by `b` then `s` in lexicographic order and is the
/// exact counterpart of [`sample_basis_partition`].
pub fn enumerate_basis_partitions(params: &ProtocolParams) -> Result<Vec<(BasisPartition, f64)>> {
    params.validate()?;
    let big_n = params.big_n;
    if big_n > MAX_ENUM_QUBITS {
        return Err(crate::error::Error::TooLarge(format!(
            "N = {big_n} > {MAX_ENUM_QUBITS}"
        )));
    }
    let mut out = Vec::new();
    for bi in 0..(1u64 << big_n) {
        let b = BitString::from_index(bi, big_n);
        let wb = b.weight();
        let b_weight = match params.variant {
            Variant::Bb84 => 1.0,
            Variant::Bb84InfoZ => (wb == params.n_x) as u8 as f64,
            Variant::Efficient => {
                if wb >= params.n_x && big_n - wb >= params.n_z {
                    (1.0 - params.p).powi(wb as i32) * params.p.powi((big_n - wb) as i32)
                } else {
                    0.0
                }
            }
            Variant::ModifiedEfficient => (wb == params.t_x + params.n_x) as u8 as f64,
        };
        if b_weight == 0.0 {
            continue;
        }
        let allowed: Vec<BitString> = (0..(1u64 << big_n))
            .map(|si| BitString::from_index(si, big_n))
            .filter(|s| s.weight() == params.n && s_allowed(params, &b, s))
            .collect();
        let per_s = b_weight / allowed.len() as f64;
        for s in allowed {
            out.push((BasisPartition::new(b.clone(), s)?, per_s));
        }
    }
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    Ok(out)
}

fn s_allowed(params: &ProtocolParams, b: &BitString, s: &BitString) -> bool {
    let test_x = b.and(&s.not()).expect("equal lengths").weight();
    match params.variant {
        Variant::Bb84 => true,
        Variant::Bb84InfoZ => b.and(s).expect("equal lengths").is_zero(),
        Variant::Efficient | Variant::ModifiedEfficient => test_x == params.n_x,
    }
}

/// Classical noise applied to each transmitted qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    Noiseless,
    IndependentFlip,
}

/// Stand-in for the quantum channel: each bit flips independently with a
/// probability chosen by the basis it is sent in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub flip_z: f64,
    pub flip_x: f64,
}

impl ChannelModel {
    pub fn noiseless() -> Self {
        ChannelModel {
            kind: ChannelKind::Noiseless,
            flip_z: 0.0,
            flip_x: 0.0,
        }
    }

    pub fn independent_flip(flip_z: f64, flip_x: f64) -> Result<Self> {
        for f in [flip_z, flip_x] {
            if !(0.0..=1.0).contains(&f) {
                return Err(invalid(format!("flip probability {f} outside [0, 1]")));
            }
        }
        Ok(ChannelModel {
            kind: ChannelKind::IndependentFlip,
            flip_z,
            flip_x,
        })
    }

    /// Error string for a transmission in bases `b_used`.
    pub fn noise<R: Rng + ?Sized>(&self, b_used: &BitString, rng: &mut R) -> BitString {
        match self.kind {
            ChannelKind::Noiseless => BitString::zeros(b_used.len()),
            ChannelKind::IndependentFlip => BitString::from_bits(b_used.iter().map(|x| {
                let f = if x { self.flip_x } else { self.flip_z };
                rng.random_bool(f)
            })),
        }
    }
}

/// The variant's test on the published TEST values: 1 iff every error
/// count is within its threshold.
///
/// `c_t` and `b_t` are the error string and bases restricted to the TEST
/// positions, in ascending position order.
pub fn testing_function(params: &ProtocolParams, c_t: &BitString, b_t: &BitString) -> Result<bool> {
    check_len(c_t.len(), b_t.len())?;
    check_len(params.big_n - params.n, c_t.len())?;
    let within = |count: usize, limit: f64| count as f64 <= limit + THRESHOLD_TOL;
    if params.variant == Variant::Bb84 {
        return Ok(within(c_t.weight(), params.n as f64 * params.p_a()));
    }
    let errors_x = c_t.and(b_t)?.weight();
    let errors_z = c_t.weight() - errors_x;
    Ok(within(errors_z, params.n_z as f64 * params.p_az)
        && within(errors_x, params.n_x as f64 * params.p_ax))
}

/// Which bases Alice and Bob use for the INFO bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Real,
    /// Hypothetical run in bases `b ⊕ s`: INFO bases inverted, TEST unchanged.
    InvertedInfoBasis,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Real => "real",
            RunMode::InvertedInfoBasis => "inverted-info-basis",
        })
    }
}

/// Everything produced by one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTranscript {
    pub variant: Variant,
    pub mode: RunMode,
    pub partition: BasisPartition,
    pub b_used: BitString,
    pub i: BitString,
    pub j: BitString,
    pub c: BitString,
    pub i_t: BitString,
    pub j_t: BitString,
    pub test_passed: bool,
    pub aborted: bool,
    pub p_c: BitMatrix,
    pub p_k: BitMatrix,
    /// Present unless the run aborted.
    pub xi: Option<BitString>,
    pub decode: Option<DecodeOutcome>,
    pub k: Option<BitString>,
    pub k_b: Option<BitString>,
}

impl ProtocolTranscript {
    /// True iff the test passed and the keys differ.
    pub fn reliability_failure(&self) -> bool {
        self.test_passed && self.k != self.k_b
    }

    /// INFO error string `c_I`.
    pub fn c_info(&self) -> BitString {
        self.c.select(&self.partition.info)
    }

    /// Line-oriented record, one `name value` pair per line in the order
    /// variant, mode, b, s, b_used, i, j, c, i_t, j_t, test_passed, aborted,
    /// p_c, p_k, xi, decode, k, k_b. Matrices are rows joined by `;` and
    /// absent values are written as `-`.
    pub fn to_record(&self) -> String {
        let opt = |v: &Option<BitString>| v.as_ref().map_or("-".to_string(), BitString::to_string);
        let mut out = String::new();
        let fields: [(&str, String); 18] = [
            ("variant", self.variant.to_string()),
            ("mode", self.mode.to_string()),
            ("b", self.partition.b.to_string()),
            ("s", self.partition.s.to_string()),
            ("b_used", self.b_used.to_string()),
            ("i", self.i.to_string()),
            ("j", self.j.to_string()),
            ("c", self.c.to_string()),
            ("i_t", self.i_t.to_string()),
            ("j_t", self.j_t.to_string()),
            ("test_passed", (self.test_passed as u8).to_string()),
            ("aborted", (self.aborted as u8).to_string()),
            ("p_c", self.p_c.to_string()),
            ("p_k", self.p_k.to_string()),
            ("xi", opt(&self.xi)),
            (
                "decode",
                self.decode
                    .as_ref()
                    .map_or("-", DecodeOutcome::status)
                    .to_string(),
            ),
            ("k", opt(&self.k)),
            ("k_b", opt(&self.k_b)),
        ];
        for (name, value) in fields {
            let value = if value.is_empty() {
                "-".to_string()
            } else {
                value
            };
            writeln!(out, "{name} {value}").expect("writing to a String cannot fail");
        }
        out
    }
}

/// One protocol run with the default decoder settings.
pub fn run_protocol<R: Rng + ?Sized>(
    params: &ProtocolParams,
    channel: &ChannelModel,
    mode: RunMode,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    run_protocol_with_decoder(params, channel, mode, DecoderSettings::default(), rng)
}

/// One protocol run.
///
/// Bob uses the decoder's word whether it is certified nearest or only the
/// best found by the information-set fallback. When the decoder fails (tie or
/// exhausted budget) he keeps his raw string and outputs `k_B = j_I·P_Kᵀ`.
pub fn run_protocol_with_decoder<R: Rng + ?Sized>(
    params: &ProtocolParams,
    channel: &ChannelModel,
    mode: RunMode,
    decoder: DecoderSettings,
    rng: &mut R,
) -> Result<ProtocolTranscript> {
    let partition = sample_basis_partition(params, rng)?;
    let big_n = params.big_n;
    let i = BitString::random(big_n, rng);
    let (p_c, p_k) = random_stacked_full_rank(params.r, params.m, params.n, rng)?;
    let b_used = match mode {
        RunMode::Real => partition.b.clone(),
        RunMode::InvertedInfoBasis => partition.b.xor(&partition.s)?,
    };
    let c = channel.noise(&b_used, rng);
    let j = i.xor(&c)?;
    let i_t = i.select(&partition.test);
    let j_t = j.select(&partition.test);
    let test_passed = testing_function(params, &c.select(&partition.test), &partition.b_test())?;
    let (xi, decode, k, k_b) = if test_passed {
        let code = LinearCode::from_parity_check(p_c.clone())?;
        let i_info = i.select(&partition.info);
        let j_info = j.select(&partition.info);
        let xi = syndrome(&code, &i_info)?;
        let outcome = coset_decode_with(&code, &xi, &j_info, decoder)?;
        let bob_word = outcome.word().unwrap_or(&j_info);
        let k = p_k.mat_vec(&i_info)?;
        let k_b = p_k.mat_vec(bob_word)?;
        (Some(xi), Some(outcome), Some(k), Some(k_b))
    } else {
        (None, None, None, None)
    };
    Ok(ProtocolTranscript {
        variant: params.variant,
        mode,
        partition,
        b_used,
        i,
        j,
        c,
        i_t,
        j_t,
        test_passed,
        aborted: !test_passed,
        p_c,
        p_k,
        xi,
        decode,
        k,
        k_b,
    })
}

/// Aggregate statistics over many protocol runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub runs: u64,
    pub aborts: McEstimate,
    /// Frequency of `(k ≠ k_B) ∧ (T = 1)` over all runs.
    pub reliability_failures: McEstimate,
    /// Frequency of `k ≠ k_B` among runs whose test passed.
    pub failures_given_pass: McEstimate,
    pub tie_fails: u64,
    pub budget_exceeded: u64,
    /// Passed runs decoded by the uncertified information-set fallback.
    pub best_found: u64,
    /// Pooled bit error rates per population (NaN if the population is empty).
    pub error_rate_info: f64,
    pub error_rate_test_z: f64,
    pub error_rate_test_x: f64,
}

/// Runs the protocol `runs` times with per-run streams derived from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn keyrate_experiment(
    params: &ProtocolParams,
    channel: &ChannelModel,
    mode: RunMode,
    runs: u64,
    seed: u64,
    exec: Exec,
    decoder: DecoderSettings,
) -> Result<ExperimentSummary> {
    if runs == 0 {
        return Err(invalid("runs must be positive"));
    }
    params.validate()?;
    struct Outcome {
        aborted: bool,
        failed: bool,
        tie: bool,
        budget: bool,
        best_found: bool,
        counts: [(usize, usize); 3],
    }
    let outcomes = map_trials(runs, seed, exec, |_, rng| {
        let t = run_protocol_with_decoder(params, channel, mode, decoder, rng)
            .expect("parameters validated");
        let p = &t.partition;
        let count = |idx: &[usize]| (idx.iter().filter(|&&j| t.c.get(j)).count(), idx.len());
        Outcome {
            aborted: t.aborted,
            failed: t.reliability_failure(),
            tie: matches!(t.decode, Some(DecodeOutcome::TieFail)),
            budget: matches!(t.decode, Some(DecodeOutcome::BudgetExceeded)),
            best_found: matches!(t.decode, Some(DecodeOutcome::BestFound(_))),
            counts: [count(&p.info), count(&p.test_z), count(&p.test_x)],
        }
    });
    let aborts = outcomes.iter().filter(|o| o.aborted).count() as u64;
    let failures = outcomes.iter().filter(|o| o.failed).count() as u64;
    let passed = runs - aborts;
    let mut pooled = [(0usize, 0usize); 3];
    for o in &outcomes {
        for (acc, c) in pooled.iter_mut().zip(o.counts) {
            acc.0 += c.0;
            acc.1 += c.1;
        }
    }
    let rate = |(e, total): (usize, usize)| {
        if total == 0 {
            f64::NAN
        } else {
            e as f64 / total as f64
        }
    };
    Ok(ExperimentSummary {
        runs,
        aborts: McEstimate::wilson99(aborts, runs),
        reliability_failures: McEstimate::wilson99(failures, runs),
        failures_given_pass: McEstimate::wilson99(failures, passed),
        tie_fails: outcomes.iter().filter(|o| o.tie).count() as u64,
        budget_exceeded: outcomes.iter().filter(|o| o.budget).count() as u64,
        best_found: outcomes.iter().filter(|o| o.best_found).count() as u64,
        error_rate_info: rate(pooled[0]),
        error_rate_test_z: rate(pooled[1]),
        error_rate_test_x: rate(pooled[2]),
    })
}
