//! Binary linear codes, syndromes, coset decoding and Monte Carlo checks of
//! the random-code failure bound.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::random_code_bound;
use crate::error::{check_len, invalid, Error, Result};
use crate::gf2::{random_stacked_full_rank, BitMatrix, BitString};
use crate::par::{count_trials, Exec};
use crate::stats::McEstimate;

/// Largest dimension for which codewords are enumerated.
pub const MAX_ENUM_K: usize = 24;

/// Largest block length accepted by [`verify_decoder_equivalence`].
pub const MAX_EQUIVALENCE_N: usize = 14;

/// Default number of candidate evaluations allowed in [`coset_decode`].
pub const DEFAULT_DECODE_BUDGET: u64 = 1 << 22;

/// Default iteration cap of the information-set fallback.
pub const DEFAULT_ISD_ITERATIONS: u32 = 20_000;

/// The information-set search stops once its best candidate has been found
/// in this many separate iterations.
const ISD_CONFIRMATIONS: u32 = 3;

/// Steps between two full row reductions of the information-set search.
const ISD_RESTART: u32 = 64;

/// Pivot exchanges made by one step of the information-set search.
const ISD_EXCHANGES: usize = 32;

/// The information-set search also stops once its best weight `w` satisfies
/// `2^{n·H2(w/n) − r} ≤ ISD_SETTLED`, an upper bound on the expected number of
/// other coset members of weight at most `w` for a random code.
const ISD_SETTLED: f64 = 1.0 / (1u64 << 30) as f64;

/// Limits for Bob's coset decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderSettings {
    /// Candidate evaluations allowed to the exact search.
    pub budget: u64,
    /// Iterations of the information-set fallback run after the exact search
    /// exhausts its budget. Zero disables the fallback.
    pub isd_iterations: u32,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        DecoderSettings {
            budget: DEFAULT_DECODE_BUDGET,
            isd_iterations: DEFAULT_ISD_ITERATIONS,
        }
    }
}

impl DecoderSettings {
    /// Exact search only.
    pub fn exact(budget: u64) -> Self {
        DecoderSettings {
            budget,
            isd_iterations: 0,
        }
    }
}

/// An `[n, k]` binary linear code given by both a generator and a
/// parity-check matrix.
#[derive(Debug, Clone)]
pub struct LinearCode {
    n: usize,
    generator: BitMatrix,
    parity_check: BitMatrix,
    /// Every codeword packed into a word, in Gray-code order starting at 0.
    /// Present when `n ≤ 64` and `k ≤ 20`.
    packed: Option<Vec<u64>>,
}

impl PartialEq for LinearCode {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.generator == other.generator
            && self.parity_check == other.parity_check
    }
}

const MAX_PACKED_K: usize = 20;

impl LinearCode {
    /// The kernel of a full-row-rank `r×n` parity-check matrix.
    pub fn from_parity_check(parity_check: BitMatrix) -> Result<Self> {
        if parity_check.rank() != parity_check.n_rows() {
            return Err(invalid("parity-check matrix must have full row rank"));
        }
        let generator = parity_check.kernel_basis();
        Ok(Self::build(generator, parity_check))
    }

    /// The row space of a full-row-rank `k×n` generator matrix.
    pub fn from_generator(generator: BitMatrix) -> Result<Self> {
        if generator.rank() != generator.n_rows() {
            return Err(invalid("generator matrix must have full row rank"));
        }
        let parity_check = generator.kernel_basis();
        Ok(Self::build(generator, parity_check))
    }

    /// Uniform `k×n` generator, redrawn until it has rank `k`.
    pub fn random<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        let (g, _) = random_stacked_full_rank(k, 0, n, rng)?;
        Self::from_generator(g)
    }

    /// Repetition code `{0…0, 1…1}` of length `n ≥ 1`.
    pub fn repetition(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("repetition code needs n >= 1"));
        }
        Self::from_generator(BitMatrix::from_rows(vec![BitString::ones(n)], n)?)
    }

    fn build(generator: BitMatrix, parity_check: BitMatrix) -> Self {
        let n = generator.n_cols();
        let k = generator.n_rows();
        let packed = (n <= 64 && k <= MAX_PACKED_K).then(|| {
            let rows: Vec<u64> = generator.rows().iter().map(BitString::to_word).collect();
            gray_span(&rows)
        });
        LinearCode {
            n,
            generator,
            parity_check,
            packed,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.generator.n_rows()
    }

    pub fn r(&self) -> usize {
        self.parity_check.n_rows()
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    pub fn parity_check(&self) -> &BitMatrix {
        &self.parity_check
    }

    /// Every codeword, starting with the zero word.
    pub fn codewords(&self) -> Result<Vec<BitString>> {
        if self.k() > MAX_ENUM_K {
            return Err(Error::TooLarge(format!("2^{} codewords", self.k())));
        }
        let mut out = Vec::with_capacity(1 << self.k());
        self.for_each_codeword(|c| out.push(c.clone()));
        Ok(out)
    }

    fn for_each_codeword(&self, mut f: impl FnMut(&BitString)) {
        let mut c = BitString::zeros(self.n);
        f(&c);
        for i in 1u64..(1u64 << self.k()) {
            let row = self.generator.row(i.trailing_zeros() as usize);
            c.xor_assign(row).expect("generator rows have length n");
            f(&c);
        }
    }

    /// Minimum Hamming weight of a nonzero codeword, or `None` for `k = 0`.
    pub fn min_distance(&self) -> Result<Option<usize>> {
        if self.k() > MAX_ENUM_K {
            return Err(Error::TooLarge(format!("2^{} codewords", self.k())));
        }
        if let Some(words) = &self.packed {
            return Ok(words.iter().skip(1).map(|w| w.count_ones() as usize).min());
        }
        let mut best: Option<usize> = None;
        self.for_each_codeword(|c| {
            if !c.is_zero() {
                best = Some(best.map_or(c.weight(), |b| b.min(c.weight())));
            }
        });
        Ok(best)
    }

    pub fn contains(&self, w: &BitString) -> Result<bool> {
        Ok(syndrome(self, w)?.is_zero())
    }
}

/// All `2^k` combinations of `rows`, ordered by Gray code so that entry 0 is 0.
fn gray_span(rows: &[u64]) -> Vec<u64> {
    let mut out = Vec::with_capacity(1 << rows.len());
    let mut c = 0u64;
    out.push(c);
    for i in 1u64..(1u64 << rows.len()) {
        c ^= rows[i.trailing_zeros() as usize];
        out.push(c);
    }
    out
}

/// Result of a decoding attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    Decoded(BitString),
    /// Two or more candidates are at the same minimum distance.
    TieFail,
    /// The search budget ran out before the nearest candidate was certain.
    BudgetExceeded,
    /// Lowest-weight coset member found by the information-set fallback. It
    /// is not certified to be the nearest one.
    BestFound(BitString),
}

impl DecodeOutcome {
    pub fn word(&self) -> Option<&BitString> {
        match self {
            DecodeOutcome::Decoded(w) | DecodeOutcome::BestFound(w) => Some(w),
            _ => None,
        }
    }

    pub fn is_decoded(&self) -> bool {
        matches!(self, DecodeOutcome::Decoded(_))
    }

    pub fn status(&self) -> &'static str {
        match self {
            DecodeOutcome::Decoded(_) => "decoded",
            DecodeOutcome::TieFail => "tie-fail",
            DecodeOutcome::BudgetExceeded => "budget-exceeded",
            DecodeOutcome::BestFound(_) => "best-found",
        }
    }
}

/// `w · P_Cᵀ`, zero exactly on codewords.
pub fn syndrome(code: &LinearCode, w: &BitString) -> Result<BitString> {
    check_len(code.n, w.len())?;
    code.parity_check.mat_vec(w)
}

/// Unique codeword nearest to `w`, found by exhaustive enumeration.
pub fn nearest_codeword_decode(code: &LinearCode, w: &BitString) -> Result<DecodeOutcome> {
    check_len(code.n, w.len())?;
    if let Some(words) = &code.packed {
        let x = w.to_word();
        return Ok(match nearest_packed(words, x) {
            Some(c) => DecodeOutcome::Decoded(BitString::from_word(c, code.n)),
            None => DecodeOutcome::TieFail,
        });
    }
    if code.k() > MAX_ENUM_K {
        return Err(Error::TooLarge(format!("2^{} codewords", code.k())));
    }
    let mut best: Option<(usize, BitString)> = None;
    let mut tie = false;
    code.for_each_codeword(|c| {
        let d = c.hamming(w).expect("equal lengths");
        match &best {
            Some((bd, _)) if d > *bd => {}
            Some((bd, _)) if d == *bd => tie = true,
            _ => {
                best = Some((d, c.clone()));
                tie = false;
            }
        }
    });
    let (_, c) = best.expect("a code always contains 0");
    Ok(if tie {
        DecodeOutcome::TieFail
    } else {
        DecodeOutcome::Decoded(c)
    })
}

/// Nearest packed codeword to `x`, or `None` on a tie.
fn nearest_packed(words: &[u64], x: u64) -> Option<u64> {
    let mut best = u32::MAX;
    let mut arg = 0u64;
    let mut tie = false;
    for &c in words {
        let d = (c ^ x).count_ones();
        if d < best {
            best = d;
            arg = c;
            tie = false;
        } else if d == best {
            tie = true;
        }
    }
    (!tie).then_some(arg)
}

/// Unique member of the coset `C_ξ = {z : z·P_Cᵀ = ξ}` nearest to `w`, using
/// the default search budget.
pub fn coset_decode(code: &LinearCode, xi: &BitString, w: &BitString) -> Result<DecodeOutcome> {
    coset_decode_with_budget(code, xi, w, DEFAULT_DECODE_BUDGET)
}

/// Coset decoding with an explicit bound on the number of candidates examined.
///
/// When `2^k ≤ budget` the coset is enumerated. Otherwise the decoder searches
/// error patterns `e` with `(w ⊕ e)·P_Cᵀ = ξ` in order of increasing weight
/// and reports [`DecodeOutcome::BudgetExceeded`] if the minimum weight cannot
/// be settled within the budget.
pub fn coset_decode_with_budget(
    code: &LinearCode,
    xi: &BitString,
    w: &BitString,
    budget: u64,
) -> Result<DecodeOutcome> {
    check_len(code.n, w.len())?;
    check_len(code.r(), xi.len())?;
    if code.k() < 64 && (1u64 << code.k()) <= budget {
        let x0 = code
            .parity_check
            .solve(xi)?
            .expect("a full-rank parity check reaches every syndrome");
        let shifted = w.xor(&x0)?;
        return Ok(match nearest_codeword_decode(code, &shifted)? {
            DecodeOutcome::Decoded(c) => DecodeOutcome::Decoded(c.xor(&x0)?),
            other => other,
        });
    }
    let target = syndrome(code, w)?.xor(xi)?;
    Ok(match min_weight_patterns(code, &target, code.n, budget) {
        Search::Unique(e) => DecodeOutcome::Decoded(w.xor(&e)?),
        Search::Tie => DecodeOutcome::TieFail,
        Search::None | Search::Budget => DecodeOutcome::BudgetExceeded,
    })
}

/// Exact coset decoding followed, if the budget runs out, by the
/// information-set fallback of [`information_set_decode`].
pub fn coset_decode_with(
    code: &LinearCode,
    xi: &BitString,
    w: &BitString,
    settings: DecoderSettings,
) -> Result<DecodeOutcome> {
    match coset_decode_with_budget(code, xi, w, settings.budget)? {
        DecodeOutcome::BudgetExceeded if settings.isd_iterations > 0 => {
            information_set_decode(code, xi, w, settings.isd_iterations)
        }
        other => Ok(other),
    }
}

/// Randomized search for a low-weight `e` with `(w ⊕ e)·P_Cᵀ = ξ`
/// (Lee-Brickell with at most two information-set positions).
///
/// Each iteration tries every pattern with at most two ones on the current
/// information set, then moves to a nearby information set by a few pivot
/// exchanges. Every few steps the parity check is row-reduced again over a
/// fresh random column order. A rediscovery of the best candidate counts
/// towards the confirmation limit only if such a restart lies between the two
/// sightings. The
/// search stops after `iterations` rounds, once its best candidate has been
/// seen in several rounds, or once the best weight is so low that a random
/// code is unlikely to hold another coset member that light. A second candidate of the same weight gives
/// [`DecodeOutcome::TieFail`]; otherwise the result is
/// [`DecodeOutcome::BestFound`]. The random stream is seeded from the target
/// syndrome, so the result is a function of the inputs.
pub fn information_set_decode(
    code: &LinearCode,
    xi: &BitString,
    w: &BitString,
    iterations: u32,
) -> Result<DecodeOutcome> {
    check_len(code.n, w.len())?;
    check_len(code.r(), xi.len())?;
    let target = syndrome(code, w)?.xor(xi)?;
    if target.is_zero() {
        return Ok(DecodeOutcome::Decoded(w.clone()));
    }
    let seed = target
        .to_words()
        .iter()
        .fold(0x9e37_79b9_7f4a_7c15u64, |h, &x| splitmix64(h ^ x));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let settled_weight = (0..=code.n / 2)
        .take_while(|&t| random_code_bound(code.n, code.k(), t) <= ISD_SETTLED)
        .last();
    let mut isd = InformationSet::new(code, &target);
    let mut best: Option<(usize, BitString)> = None;
    let mut hits = 0u32;
    let mut tie = false;
    let mut fresh = true;
    let mut restarted = false;
    for step in 0..iterations {
        let ready = if fresh || step % ISD_RESTART == 0 {
            restarted = true;
            isd.reduce(&mut rng)
        } else {
            (0..ISD_EXCHANGES).all(|_| isd.swap_step(&mut rng))
        };
        fresh = !ready;
        if !ready {
            continue;
        }
        for (weight, e) in isd.candidates(best.as_ref().map_or(usize::MAX, |b| b.0)) {
            match &best {
                Some((bw, be)) if weight == *bw => {
                    if e == *be {
                        hits += u32::from(restarted);
                        restarted = false;
                    } else {
                        tie = true;
                    }
                }
                _ => {
                    best = Some((weight, e));
                    hits = 1;
                    tie = false;
                    restarted = false;
                }
            }
        }
        let settled = matches!((&best, settled_weight), (Some((bw, _)), Some(sw)) if *bw <= sw);
        if hits >= ISD_CONFIRMATIONS || settled {
            break;
        }
    }
    Ok(match best {
        None => DecodeOutcome::BudgetExceeded,
        Some(_) if tie => DecodeOutcome::TieFail,
        Some((_, e)) => DecodeOutcome::BestFound(w.xor(&e)?),
    })
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn bit(words: &[u64], i: usize) -> bool {
    (words[i / 64] >> (i % 64)) & 1 == 1
}

/// Clears column `c` from every row except `p`.
fn eliminate(rows: &mut [Vec<u64>], p: usize, c: usize) {
    let pivot_row = rows[p].clone();
    for (j, row) in rows.iter_mut().enumerate() {
        if j != p && bit(row, c) {
            xor_words(row, &pivot_row);
        }
    }
}

/// Working state of [`information_set_decode`]: the parity check augmented
/// with the target syndrome as an extra column.
struct InformationSet {
    n: usize,
    base: Vec<Vec<u64>>,
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
    is_pivot: Vec<bool>,
    order: Vec<usize>,
}

impl InformationSet {
    fn new(code: &LinearCode, target: &BitString) -> Self {
        let n = code.n;
        let base = code
            .parity_check
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut words = row.to_words();
                words.push(u64::from(target.get(i)));
                words
            })
            .collect();
        InformationSet {
            n,
            base,
            rows: Vec::new(),
            pivots: Vec::new(),
            is_pivot: vec![false; n],
            order: (0..n).collect(),
        }
    }

    /// Reduced row echelon form over a fresh random column order. Returns
    /// false if fewer than `r` pivots were found.
    fn reduce<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let r = self.base.len();
        self.rows.clone_from(&self.base);
        self.order.shuffle(rng);
        self.pivots.clear();
        for &c in &self.order {
            let p = self.pivots.len();
            if p == r {
                break;
            }
            let Some(i) = (p..r).find(|&i| bit(&self.rows[i], c)) else {
                continue;
            };
            self.rows.swap(i, p);
            eliminate(&mut self.rows, p, c);
            self.pivots.push(c);
        }
        self.is_pivot.fill(false);
        for &c in &self.pivots {
            self.is_pivot[c] = true;
        }
        self.pivots.len() == r
    }

    /// Exchanges a random pivot column for a random information column that
    /// can replace it. Returns false if no exchange was found.
    fn swap_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let r = self.rows.len();
        for _ in 0..r.max(1) {
            let p = rng.random_range(0..r);
            let options: Vec<usize> = (0..self.n)
                .filter(|&a| !self.is_pivot[a] && bit(&self.rows[p], a))
                .collect();
            let Some(&a) = options.get(rng.random_range(0..options.len().max(1))) else {
                continue;
            };
            eliminate(&mut self.rows, p, a);
            self.is_pivot[self.pivots[p]] = false;
            self.is_pivot[a] = true;
            self.pivots[p] = a;
            return true;
        }
        false
    }

    /// Solutions with at most two ones off the pivot columns, of weight at
    /// most `limit`. Only the lowest weight seen is kept, and at most two
    /// candidates of it, since two distinct ones already make a tie.
    fn candidates(&self, limit: usize) -> Vec<(usize, BitString)> {
        let r = self.rows.len();
        let rw = r.div_ceil(64).max(1);
        let info: Vec<usize> = (0..self.n).filter(|&c| !self.is_pivot[c]).collect();
        let mut slot = vec![usize::MAX; self.n];
        for (i, &a) in info.iter().enumerate() {
            slot[a] = i;
        }
        let mut s = vec![0u64; rw];
        let mut cols = vec![0u64; info.len() * rw];
        let last = self.rows.first().map_or(0, |row| row.len() - 1);
        for (p, row) in self.rows.iter().enumerate() {
            let mask = 1u64 << (p % 64);
            if row[last] & 1 == 1 {
                s[p / 64] |= mask;
            }
            for (wi, &word) in row[..last].iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let c = wi * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if slot[c] != usize::MAX {
                        cols[slot[c] * rw + p / 64] |= mask;
                    }
                }
            }
        }
        let col = |a: usize| &cols[a * rw..(a + 1) * rw];
        let mut limit = limit;
        let mut out: Vec<(usize, BitString)> = Vec::new();
        let mut consider = |v: &[u64], chosen: &[usize], weight: usize, limit: &mut usize| {
            if weight > *limit || (weight == *limit && out.len() >= 2) {
                return;
            }
            if weight < *limit {
                out.clear();
                *limit = weight;
            }
            let mut e = BitString::zeros(self.n);
            for &a in chosen {
                e.set(info[a], true);
            }
            for (p, &c) in self.pivots.iter().enumerate() {
                if bit(v, p) {
                    e.set(c, true);
                }
            }
            out.push((weight, e));
        };
        let popcount = |v: &[u64]| v.iter().map(|x| x.count_ones() as usize).sum::<usize>();
        consider(&s, &[], popcount(&s), &mut limit);
        let mut one = s.clone();
        let mut two = s.clone();
        for a in 0..info.len() {
            one.copy_from_slice(&s);
            xor_words(&mut one, col(a));
            consider(&one, &[a], popcount(&one) + 1, &mut limit);
            for b in a + 1..info.len() {
                let weight = one
                    .iter()
                    .zip(col(b))
                    .map(|(x, y)| (x ^ y).count_ones() as usize)
                    .sum::<usize>()
                    + 2;
                if weight <= limit {
                    two.copy_from_slice(&one);
                    xor_words(&mut two, col(b));
                    consider(&two, &[a, b], weight, &mut limit);
                }
            }
        }
        out
    }
}

enum Search {
    Unique(BitString),
    Tie,
    None,
    Budget,
}

/// Minimum-weight `e` of weight at most `max_weight` with `e·P_Cᵀ = target`.
fn min_weight_patterns(
    code: &LinearCode,
    target: &BitString,
    max_weight: usize,
    budget: u64,
) -> Search {
    let n = code.n;
    if target.is_zero() {
        return Search::Unique(BitString::zeros(n));
    }
    let cols: Vec<Vec<u64>> = code
        .parity_check
        .transpose()
        .rows()
        .iter()
        .map(BitString::to_words)
        .collect();
    let target = target.to_words();
    let mut search = PatternSearch {
        cols: &cols,
        target: &target,
        budget,
        spent: 0,
        found: Vec::new(),
    };
    for weight in 1..=max_weight.min(n) {
        let mut acc = vec![0u64; target.len()];
        let mut chosen = Vec::with_capacity(weight);
        match search.dfs(0, weight, &mut acc, &mut chosen) {
            Err(BudgetSpent) => return Search::Budget,
            Ok(()) if search.found.len() > 1 => return Search::Tie,
            Ok(()) => {}
        }
        if let Some(pos) = search.found.pop() {
            let mut e = BitString::zeros(n);
            for i in pos {
                e.set(i, true);
            }
            return Search::Unique(e);
        }
    }
    Search::None
}

struct BudgetSpent;

struct PatternSearch<'a> {
    cols: &'a [Vec<u64>],
    target: &'a [u64],
    budget: u64,
    spent: u64,
    found: Vec<Vec<usize>>,
}

impl PatternSearch<'_> {
    /// Visits every `remaining`-subset of `start..n` extending `chosen`,
    /// stopping once two solutions are known.
    fn dfs(
        &mut self,
        start: usize,
        remaining: usize,
        acc: &mut [u64],
        chosen: &mut Vec<usize>,
    ) -> std::result::Result<(), BudgetSpent> {
        if remaining == 0 {
            if acc == self.target {
                self.found.push(chosen.clone());
            }
            return Ok(());
        }
        for i in start..=self.cols.len() - remaining {
            self.spent += 1;
            if self.spent > self.budget {
                return Err(BudgetSpent);
            }
            xor_words(acc, &self.cols[i]);
            chosen.push(i);
            let r = self.dfs(i + 1, remaining - 1, acc, chosen);
            chosen.pop();
            xor_words(acc, &self.cols[i]);
            r?;
            if self.found.len() > 1 {
                return Ok(());
            }
        }
        Ok(())
    }
}

fn xor_words(acc: &mut [u64], other: &[u64]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= b;
    }
}

/// True iff `|e| < d_H(e, c)` for every nonzero codeword `c`, so that the
/// nearest codeword to `e` is uniquely 0.
pub fn zero_uniquely_nearest(code: &LinearCode, e: &BitString) -> Result<bool> {
    check_len(code.n, e.len())?;
    if let Some(words) = &code.packed {
        let x = e.to_word();
        let we = x.count_ones();
        return Ok(words.iter().skip(1).all(|&c| (c ^ x).count_ones() > we));
    }
    if code.k() > MAX_ENUM_K {
        return Err(Error::TooLarge(format!("2^{} codewords", code.k())));
    }
    let we = e.weight();
    let mut ok = true;
    code.for_each_codeword(|c| {
        if !c.is_zero() && c.hamming(e).expect("equal lengths") <= we {
            ok = false;
        }
    });
    Ok(ok)
}

/// Exhaustively checks that the nearest-codeword decoder, the coset decoder
/// and [`zero_uniquely_nearest`] agree on every error pattern.
///
/// For each `e ∈ F2^n`, every codeword `a` is checked with the
/// nearest-codeword decoder on `a ⊕ e` when the code has at most `samples`
/// codewords; larger codes use 0 and `samples − 1` random codewords. Then
/// `samples` arbitrary words
/// `a` with the coset decoder on `a ⊕ e` and `ξ = a·P_Cᵀ`. Codes with `r = 0`
/// have no syndrome to exercise and are accepted.
pub fn verify_decoder_equivalence<R: Rng + ?Sized>(
    code: &LinearCode,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let n = code.n;
    if code.r() == 0 {
        return Ok(true);
    }
    if n > MAX_EQUIVALENCE_N {
        return Err(Error::TooLarge(format!("n = {n} > {MAX_EQUIVALENCE_N}")));
    }
    let words = code.codewords()?;
    for e_idx in 0..(1u64 << n) {
        let e = BitString::from_index(e_idx, n);
        let expected = zero_uniquely_nearest(code, &e)?;
        let codeword_picks = if words.len() <= samples {
            words.clone()
        } else {
            let mut picks = vec![BitString::zeros(n)];
            picks.extend((1..samples).map(|_| words[rng.random_range(0..words.len())].clone()));
            picks
        };
        for a in &codeword_picks {
            let ok = nearest_codeword_decode(code, &a.xor(&e)?)?.word() == Some(a);
            if ok != expected {
                return Ok(false);
            }
        }
        for _ in 0..samples {
            let a = BitString::random(n, rng);
            let xi = syndrome(code, &a)?;
            let ok = coset_decode(code, &xi, &a.xor(&e)?)?.word() == Some(&a);
            if ok != expected {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// How the error weight is drawn in [`mc_decoding_failure_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// `|e| = t` exactly, the hardest case covered by `|e| ≤ t`.
    #[default]
    Exact,
    /// `|e|` uniform on `0..=t`.
    UniformUpTo,
}

/// Monte Carlo estimate over random codes together with its analytic bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMcReport {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub estimate: McEstimate,
    /// `2^{n[H2(t/n) − r/n]}`, possibly above 1.
    pub bound: f64,
}

impl CodeMcReport {
    /// True if the upper edge of the interval is within the bound.
    pub fn upper_edge_within_bound(&self) -> bool {
        self.estimate.ci_high <= self.bound
    }
}

fn check_mc_args(n: usize, k: usize, t: usize, trials: u64) -> Result<()> {
    if n == 0 || n > 64 {
        return Err(invalid(format!(
            "Monte Carlo code estimators need 1 <= n <= 64, got {n}"
        )));
    }
    if k > n || k > MAX_PACKED_K {
        return Err(invalid(format!(
            "dimension k = {k} must satisfy k <= n and k <= {MAX_PACKED_K}"
        )));
    }
    if 2 * t > n {
        return Err(invalid(format!("t = {t} exceeds n/2")));
    }
    if trials == 0 {
        return Err(invalid("trials must be positive"));
    }
    Ok(())
}

fn random_packed_code<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<u64> {
    let (g, _) = random_stacked_full_rank(k, 0, n, rng).expect("k <= n checked by caller");
    let rows: Vec<u64> = g.rows().iter().map(BitString::to_word).collect();
    gray_span(&rows)
}

/// Fraction of (random code, random error) pairs the nearest-codeword
/// decoder cannot correct.
///
/// Each trial draws a code from a uniform full-rank `k×n` generator and an
/// error `e` whose weight follows `mode`; decoding fails unless the zero
/// codeword is uniquely nearest to `e`.
pub fn mc_decoding_failure_rate(
    n: usize,
    k: usize,
    t: usize,
    trials: u64,
    seed: u64,
    exec: Exec,
    mode: WeightMode,
) -> Result<CodeMcReport> {
    check_mc_args(n, k, t, trials)?;
    let hits = count_trials(trials, seed, exec, |_, rng| {
        let words = random_packed_code(n, k, rng);
        let w = match mode {
            WeightMode::Exact => t,
            WeightMode::UniformUpTo => rng.random_range(0..=t),
        };
        let e = BitString::random_with_weight(n, w, rng)
            .expect("w <= n")
            .to_word();
        let we = e.count_ones();
        words.iter().skip(1).any(|&c| (c ^ e).count_ones() <= we)
    });
    Ok(CodeMcReport {
        n,
        k,
        t,
        estimate: McEstimate::wilson99(hits, trials),
        bound: random_code_bound(n, k, t),
    })
}

/// Estimate of `Pr_C[∃ z ∈ ℓ + C : z ≠ ℓ, |z| ≤ t]` over random `[n, k]` codes.
pub fn mc_low_weight_coset_word(
    ell: &BitString,
    k: usize,
    t: usize,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<CodeMcReport> {
    let n = ell.len();
    check_mc_args(n, k, t, trials)?;
    let l = ell.to_word();
    let hits = count_trials(trials, seed, exec, |_, rng| {
        let words = random_packed_code(n, k, rng);
        words
            .iter()
            .skip(1)
            .any(|&c| (c ^ l).count_ones() as usize <= t)
    });
    Ok(CodeMcReport {
        n,
        k,
        t,
        estimate: McEstimate::wilson99(hits, trials),
        bound: random_code_bound(n, k, t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn rep3() -> LinearCode {
        LinearCode::from_parity_check("110;101".parse().unwrap()).unwrap()
    }

    #[test]
    fn rep3_views_agree() {
        let c = rep3();
        assert_eq!((c.n(), c.k(), c.r()), (3, 1, 2));
        assert_eq!(c.generator().to_string(), "111");
        assert_eq!(c, LinearCode::repetition(3).unwrap());
        assert_eq!(c.min_distance().unwrap(), Some(3));
    }

    #[test]
    fn syndrome_examples() {
        let c = rep3();
        assert_eq!(syndrome(&c, &bs("000")).unwrap(), bs("00"));
        assert_eq!(syndrome(&c, &bs("111")).unwrap(), bs("00"));
        assert_eq!(syndrome(&c, &bs("101")).unwrap(), bs("10"));
        assert!(syndrome(&c, &bs("10")).is_err());
    }

    #[test]
    fn nearest_examples() {
        let c = rep3();
        assert_eq!(
            nearest_codeword_decode(&c, &bs("110")).unwrap(),
            DecodeOutcome::Decoded(bs("111"))
        );
        assert_eq!(
            nearest_codeword_decode(&c, &bs("000")).unwrap(),
            DecodeOutcome::Decoded(bs("000"))
        );
        let c2 = LinearCode::repetition(2).unwrap();
        assert_eq!(
            nearest_codeword_decode(&c2, &bs("10")).unwrap(),
            DecodeOutcome::TieFail
        );
    }

    #[test]
    fn coset_examples() {
        let c = rep3();
        assert_eq!(
            coset_decode(&c, &bs("00"), &bs("110")).unwrap(),
            DecodeOutcome::Decoded(bs("111"))
        );
        assert_eq!(
            coset_decode(&c, &bs("10"), &bs("101")).unwrap(),
            DecodeOutcome::Decoded(bs("101"))
        );
        assert_eq!(
            coset_decode(&c, &bs("10"), &bs("111")).unwrap(),
            DecodeOutcome::Decoded(bs("101"))
        );
    }

    #[test]
    fn syndrome_search_path() {
        // Budget 1 forces the weight search for any code with k >= 1.
        let c = rep3();
        assert_eq!(
            coset_decode_with_budget(&c, &bs("00"), &bs("110"), 1).unwrap(),
            DecodeOutcome::BudgetExceeded
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let code = LinearCode::random(10, 4, &mut rng).unwrap();
            for _ in 0..20 {
                let w = BitString::random(10, &mut rng);
                let xi = BitString::random(6, &mut rng);
                let full = coset_decode_with_budget(&code, &xi, &w, u64::MAX).unwrap();
                let search = coset_decode_with_budget(&code, &xi, &w, 15).unwrap();
                if search != DecodeOutcome::BudgetExceeded {
                    assert_eq!(full, search);
                }
                let unlimited_search = {
                    let target = syndrome(&code, &w).unwrap().xor(&xi).unwrap();
                    match min_weight_patterns(&code, &target, 10, u64::MAX) {
                        Search::Unique(e) => DecodeOutcome::Decoded(w.xor(&e).unwrap()),
                        Search::Tie => DecodeOutcome::TieFail,
                        _ => unreachable!(),
                    }
                };
                assert_eq!(full, unlimited_search);
            }
        }
    }

    #[test]
    fn fallback_after_budget() {
        let c = rep3();
        let settings = DecoderSettings {
            budget: 1,
            isd_iterations: 100,
        };
        assert_eq!(
            coset_decode_with(&c, &bs("00"), &bs("110"), settings).unwrap(),
            DecodeOutcome::BestFound(bs("111"))
        );
        assert_eq!(
            coset_decode_with(&c, &bs("00"), &bs("110"), DecoderSettings::exact(1)).unwrap(),
            DecodeOutcome::BudgetExceeded
        );
        assert_eq!(
            information_set_decode(&c, &bs("10"), &bs("101"), 10).unwrap(),
            DecodeOutcome::Decoded(bs("101"))
        );
        assert_eq!(DecodeOutcome::BestFound(bs("1")).word(), Some(&bs("1")));
        assert!(!DecodeOutcome::BestFound(bs("1")).is_decoded());
    }

    #[test]
    fn information_set_agrees_with_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (n, k) in [(10, 3), (12, 4), (12, 6), (14, 5)] {
            for _ in 0..30 {
                let code = LinearCode::random(n, k, &mut rng).unwrap();
                let w = BitString::random(n, &mut rng);
                let xi = BitString::random(n - k, &mut rng);
                let exact = coset_decode(&code, &xi, &w).unwrap();
                let isd = information_set_decode(&code, &xi, &w, 2000).unwrap();
                match (&exact, &isd) {
                    (DecodeOutcome::Decoded(a), DecodeOutcome::BestFound(b)) => assert_eq!(a, b),
                    (DecodeOutcome::Decoded(a), DecodeOutcome::Decoded(b)) => assert_eq!(a, b),
                    (DecodeOutcome::TieFail, DecodeOutcome::TieFail) => {}
                    _ => panic!("{exact:?} vs {isd:?}"),
                }
                if let Some(b) = isd.word() {
                    assert_eq!(syndrome(&code, b).unwrap(), xi);
                }
            }
        }
    }

    #[test]
    fn information_set_recovers_planted_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let code = LinearCode::random(256, 56, &mut rng).unwrap();
        for weight in [0, 5, 12, 20] {
            let x = BitString::random(256, &mut rng);
            let xi = syndrome(&code, &x).unwrap();
            let e = BitString::random_with_weight(256, weight, &mut rng).unwrap();
            let w = x.xor(&e).unwrap();
            let out = coset_decode_with(
                &code,
                &xi,
                &w,
                DecoderSettings {
                    budget: 1 << 10,
                    isd_iterations: 20_000,
                },
            )
            .unwrap();
            assert_eq!(out.word(), Some(&x), "weight {weight}");
        }
    }

    #[test]
    fn zero_nearest_examples() {
        let c = rep3();
        assert!(zero_uniquely_nearest(&c, &bs("100")).unwrap());
        assert!(!zero_uniquely_nearest(&c, &bs("110")).unwrap());
        assert!(zero_uniquely_nearest(&c, &bs("000")).unwrap());
    }

    #[test]
    fn equivalence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(verify_decoder_equivalence(&rep3(), 8, &mut rng).unwrap());
        let c2 = LinearCode::repetition(2).unwrap();
        assert!(verify_decoder_equivalence(&c2, 8, &mut rng).unwrap());
        assert!(!zero_uniquely_nearest(&c2, &bs("01")).unwrap());
        assert!(!zero_uniquely_nearest(&c2, &bs("10")).unwrap());
        let full = LinearCode::from_parity_check(BitMatrix::zeros(0, 4)).unwrap();
        assert_eq!(full.k(), 4);
        assert!(verify_decoder_equivalence(&full, 8, &mut rng).unwrap());
        let big = LinearCode::repetition(15).unwrap();
        assert!(matches!(
            verify_decoder_equivalence(&big, 1, &mut rng),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn mc_zero_weight_is_exactly_zero() {
        let rep = mc_decoding_failure_rate(10, 5, 0, 500, 1, Exec::Sequential, WeightMode::Exact)
            .unwrap();
        assert_eq!(rep.estimate.hits, 0);
        assert!(
            mc_decoding_failure_rate(10, 5, 6, 10, 1, Exec::Sequential, WeightMode::Exact).is_err()
        );
    }

    #[test]
    fn mc_six_one_one_matches_exact_rate() {
        // One uniform nonzero codeword c among 63 and a uniform weight-1 e:
        // decoding fails iff c = e, or |c| = 2 and c covers e. That is
        // (6·1/6 + 15·2/6) / 63 = 2/21.
        let exact = 2.0 / 21.0;
        let rep =
            mc_decoding_failure_rate(6, 1, 1, 200_000, 3, Exec::Sequential, WeightMode::Exact)
                .unwrap();
        assert!(
            rep.estimate.ci_low <= exact && exact <= rep.estimate.ci_high,
            "{:?}",
            rep.estimate
        );
        assert!(rep.upper_edge_within_bound());
        assert!((rep.bound - (6.0 * (h2_of(1.0 / 6.0) - 5.0 / 6.0)).exp2()).abs() < 1e-12);
    }

    fn h2_of(x: f64) -> f64 {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }

    #[test]
    fn mc_parallel_matches_sequential() {
        let a = mc_decoding_failure_rate(10, 4, 2, 2000, 11, Exec::Sequential, WeightMode::Exact)
            .unwrap();
        let b = mc_decoding_failure_rate(10, 4, 2, 2000, 11, Exec::Parallel, WeightMode::Exact)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gray_span_is_the_row_space() {
        let words = gray_span(&[0b001, 0b110]);
        let mut sorted = words.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 6, 7]);
        assert_eq!(words[0], 0);
    }
}
