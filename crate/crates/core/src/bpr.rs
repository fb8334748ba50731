//! BPR multiple-access codebooks over the binary adder channel.
//!
//! The codebook is the set of columns of the parity-check matrix of a
//! T-error-correcting binary BCH code of length 2^m - 1: column j stacks the
//! binary images of α^{j·(2i-1)} for i = 1..=T, giving mT bits per column.
//! The M columns (M trimmed to the largest multiple of K not exceeding
//! 2^m - 1) are split into K contiguous runs of M/K columns, one run per
//! user. Any 2T columns are linearly independent over GF(2), so any two
//! distinct subsets of at most T columns have different integer sums: a block
//! carrying at most T codewords decodes with zero errors.

use std::collections::HashMap;

use crate::field::{FieldContext, FieldElement};
use crate::{Error, Result};

/// A per-user partition of BPR codebook columns.
#[derive(Debug, Clone)]
pub struct BprCode {
    ctx: FieldContext,
    t: usize,
    k: usize,
    /// Effective code length: largest multiple of K that is <= 2^m - 1.
    m_cols: usize,
    /// Column j as mT bits (entries 0/1), blocks of m bits per odd power.
    columns: Vec<Vec<u8>>,
    /// Exact-match lookup from column bits to column index.
    col_index: HashMap<Vec<u8>, usize>,
}

/// One observed block of the channel output: the integer sum of the active
/// users' codewords plus the accumulated extra symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockObservation {
    /// Integer sum vector of length mT; each entry lies in [0, active_count].
    pub sum: Vec<u32>,
    /// Number of active users in the block, read from the extra symbol.
    pub active_count: usize,
}

/// Which block-decoding algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeBackend {
    /// Enumerate column subsets in ascending index order with pruning.
    /// Unconditionally correct; the reference path.
    #[default]
    SubsetSearch,
    /// Reduce the sum mod 2 to a BCH syndrome, solve for the error-locator
    /// polynomial (Berlekamp-Massey), and read positions off a Chien search.
    Syndrome,
}

impl BprCode {
    /// Build the (m, T, K) codebook family.
    pub fn build(m: usize, t: usize, k: usize) -> Result<BprCode> {
        if t == 0 {
            return Err(Error::InvalidParameter("T must be at least 1".into()));
        }
        let ctx = FieldContext::new(m)?;
        let max_cols = ctx.order();
        if k == 0 || k > max_cols {
            return Err(Error::InvalidParameter(format!(
                "K={k} must satisfy 1 <= K <= 2^m - 1 = {max_cols}"
            )));
        }
        let m_cols = (max_cols / k) * k;
        let mut columns = Vec::with_capacity(m_cols);
        let mut col_index = HashMap::with_capacity(m_cols);
        for j in 0..m_cols {
            let mut col = Vec::with_capacity(m * t);
            for i in 1..=t {
                let e = (j as u64) * (2 * i as u64 - 1);
                col.extend(ctx.binary_image(ctx.alpha_pow(e)));
            }
            col_index.insert(col.clone(), j);
            columns.push(col);
        }
        debug_assert_eq!(col_index.len(), m_cols, "columns must be distinct");
        Ok(BprCode {
            ctx,
            t,
            k,
            m_cols,
            columns,
            col_index,
        })
    }

    pub fn m(&self) -> usize {
        self.ctx.degree()
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn users(&self) -> usize {
        self.k
    }

    /// Number of columns actually used (M).
    pub fn num_columns(&self) -> usize {
        self.m_cols
    }

    /// Messages per user, q = M/K.
    pub fn messages_per_user(&self) -> usize {
        self.m_cols / self.k
    }

    /// Codeword length in bits, mT.
    pub fn codeword_len(&self) -> usize {
        self.ctx.degree() * self.t
    }

    /// Slot size in channel symbols: codeword plus the extra symbol.
    pub fn block_len(&self) -> usize {
        self.codeword_len() + 1
    }

    pub fn field(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.columns[j]
    }

    /// Owner of column j under the contiguous partition.
    pub fn user_of_column(&self, j: usize) -> usize {
        j / self.messages_per_user()
    }

    /// Message (1-based) encoded by column j.
    pub fn message_of_column(&self, j: usize) -> usize {
        j % self.messages_per_user() + 1
    }

    /// Codeword for message w in {1, ..., M/K} of the given user.
    pub fn encode_message(&self, user: usize, w: usize) -> Result<&[u8]> {
        let q = self.messages_per_user();
        if user >= self.k {
            return Err(Error::InvalidParameter(format!(
                "user {user} out of range [0, {})",
                self.k
            )));
        }
        if w == 0 || w > q {
            return Err(Error::InvalidParameter(format!(
                "message w={w} out of range [1, {q}]"
            )));
        }
        Ok(&self.columns[user * q + (w - 1)])
    }

    /// Recover the unique set of (user, message) pairs whose columns sum to
    /// the observation, sorted by user index.
    ///
    /// The caller must not invoke this on a block with more than T active
    /// users; the count is always known from the extra symbol.
    pub fn decode_block(
        &self,
        obs: &BlockObservation,
        backend: DecodeBackend,
    ) -> Result<Vec<(usize, usize)>> {
        if obs.active_count > self.t {
            return Err(Error::InvalidParameter(format!(
                "active count {} exceeds T={}",
                obs.active_count, self.t
            )));
        }
        if obs.sum.len() != self.codeword_len() {
            return Err(Error::InvalidParameter(format!(
                "sum vector length {} != mT = {}",
                obs.sum.len(),
                self.codeword_len()
            )));
        }
        if obs.sum.iter().any(|&v| v as usize > obs.active_count) {
            return Err(Error::Inconsistent(
                "sum vector entry exceeds active count".into(),
            ));
        }
        if obs.active_count == 0 {
            if obs.sum.iter().any(|&v| v != 0) {
                return Err(Error::Inconsistent(
                    "nonzero sum with zero active users".into(),
                ));
            }
            return Ok(Vec::new());
        }
        let cols = match backend {
            DecodeBackend::SubsetSearch => self.decode_subset_search(obs)?,
            DecodeBackend::Syndrome => self.decode_syndrome(obs)?,
        };
        let mut pairs: Vec<(usize, usize)> = cols
            .into_iter()
            .map(|j| (self.user_of_column(j), self.message_of_column(j)))
            .collect();
        pairs.sort_unstable();
        Ok(pairs)
    }

    /// Depth-first enumeration of l-subsets in ascending column order. The
    /// final column of a branch is resolved by exact lookup instead of a
    /// scan, so degree-l decoding costs O(M^(l-1)) lookups.
    fn decode_subset_search(&self, obs: &BlockObservation) -> Result<Vec<usize>> {
        let mut residual: Vec<u32> = obs.sum.clone();
        let mut picked = Vec::with_capacity(obs.active_count);
        if self.search_rec(&mut residual, 0, obs.active_count, &mut picked) {
            Ok(picked)
        } else {
            Err(Error::Inconsistent(
                "no column subset matches the block observation".into(),
            ))
        }
    }

    fn search_rec(
        &self,
        residual: &mut [u32],
        start: usize,
        remaining: usize,
        picked: &mut Vec<usize>,
    ) -> bool {
        if remaining == 1 {
            // The residual must be exactly one column with entries in {0,1}.
            if residual.iter().any(|&v| v > 1) {
                return false;
            }
            let bits: Vec<u8> = residual.iter().map(|&v| v as u8).collect();
            if let Some(&j) = self.col_index.get(&bits) {
                if j >= start {
                    picked.push(j);
                    return true;
                }
            }
            return false;
        }
        for j in start..=self.m_cols.saturating_sub(remaining) {
            let col = &self.columns[j];
            if col
                .iter()
                .zip(residual.iter())
                .any(|(&c, &r)| (c as u32) > r)
            {
                continue;
            }
            for (r, &c) in residual.iter_mut().zip(col.iter()) {
                *r -= c as u32;
            }
            picked.push(j);
            if self.search_rec(residual, j + 1, remaining - 1, picked) {
                return true;
            }
            picked.pop();
            for (r, &c) in residual.iter_mut().zip(col.iter()) {
                *r += c as u32;
            }
        }
        false
    }

    /// Algebraic back-end: the mod-2 reduction of the sum vector is the BCH
    /// syndrome of the weight-l column indicator, so standard locator-
    /// polynomial decoding finds the l positions.
    fn decode_syndrome(&self, obs: &BlockObservation) -> Result<Vec<usize>> {
        let ctx = &self.ctx;
        let m = ctx.degree();
        let l = obs.active_count;
        // Odd syndromes S_1, S_3, ..., S_{2T-1} read directly from the m-bit
        // blocks of the mod-2 reduced observation; even ones by squaring
        // (S_{2i} = S_i^2 in characteristic 2).
        let mut syndromes = vec![FieldElement::ZERO; 2 * self.t + 1];
        for i in 1..=self.t {
            let bits: Vec<u8> = obs.sum[(i - 1) * m..i * m]
                .iter()
                .map(|&v| (v & 1) as u8)
                .collect();
            syndromes[2 * i - 1] = ctx.element_from_bits(&bits)?;
        }
        for i in 1..=self.t {
            syndromes[2 * i] = ctx.mul(syndromes[i], syndromes[i]);
        }

        // Berlekamp-Massey over GF(2^m) on S_1..S_{2T}.
        let mut locator = vec![FieldElement::ZERO; self.t + 1];
        let mut prev = vec![FieldElement::ZERO; self.t + 1];
        locator[0] = FieldElement::ONE;
        prev[0] = FieldElement::ONE;
        let mut deg = 0usize;
        let mut shift = 1usize;
        let mut prev_discrepancy = FieldElement::ONE;
        for n in 0..2 * self.t {
            let mut d = syndromes[n + 1];
            for i in 1..=deg {
                d = ctx.add(d, ctx.mul(locator[i], syndromes[n + 1 - i]));
            }
            if d.is_zero() {
                shift += 1;
            } else if 2 * deg <= n {
                let snapshot = locator.clone();
                let scale = ctx.mul(d, ctx.inv(prev_discrepancy)?);
                for i in 0..=self.t {
                    if i + shift <= self.t && !prev[i].is_zero() {
                        locator[i + shift] = ctx.add(locator[i + shift], ctx.mul(scale, prev[i]));
                    }
                }
                deg = n + 1 - deg;
                prev = snapshot;
                prev_discrepancy = d;
                shift = 1;
            } else {
                let scale = ctx.mul(d, ctx.inv(prev_discrepancy)?);
                for i in 0..=self.t {
                    if i + shift <= self.t && !prev[i].is_zero() {
                        locator[i + shift] = ctx.add(locator[i + shift], ctx.mul(scale, prev[i]));
                    }
                }
                shift += 1;
            }
        }
        if deg != l {
            return Err(Error::Inconsistent(format!(
                "locator degree {deg} does not match active count {l}"
            )));
        }

        // Chien search: roots of the locator are α^{-j} for active columns j.
        let order = ctx.order();
        let mut positions = Vec::with_capacity(l);
        for e in 0..order {
            let x = ctx.alpha_pow(e as u64);
            let mut acc = FieldElement::ZERO;
            let mut xp = FieldElement::ONE;
            for &c in locator.iter().take(deg + 1) {
                acc = ctx.add(acc, ctx.mul(c, xp));
                xp = ctx.mul(xp, x);
            }
            if acc.is_zero() {
                let j = (order - e) % order;
                if j >= self.m_cols {
                    return Err(Error::Inconsistent(format!(
                        "locator root maps to unused column {j}"
                    )));
                }
                positions.push(j);
            }
        }
        if positions.len() != l {
            return Err(Error::Inconsistent(format!(
                "found {} locator roots, expected {l}",
                positions.len()
            )));
        }
        positions.sort_unstable();
        Ok(positions)
    }

    /// Plain-text dump of the binary parity-check matrix: mT lines of M
    /// '0'/'1' characters, row-major.
    pub fn dump_matrix(&self) -> String {
        let rows = self.codeword_len();
        let mut out = String::with_capacity(rows * (self.m_cols + 1));
        for r in 0..rows {
            for col in &self.columns {
                out.push(if col[r] == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code_4_2_5() -> BprCode {
        BprCode::build(4, 2, 5).unwrap()
    }

    fn sum_columns(code: &BprCode, cols: &[usize]) -> Vec<u32> {
        let mut sum = vec![0u32; code.codeword_len()];
        for &j in cols {
            for (s, &b) in sum.iter_mut().zip(code.column(j).iter()) {
                *s += b as u32;
            }
        }
        sum
    }

    #[test]
    fn build_shapes() {
        let code = code_4_2_5();
        assert_eq!(code.num_columns(), 15);
        assert_eq!(code.messages_per_user(), 3);
        assert_eq!(code.codeword_len(), 8);
        assert_eq!(code.block_len(), 9);
        // First column is T stacked binary images of α⁰ = 1.
        assert_eq!(code.column(0), &[1, 0, 0, 0, 1, 0, 0, 0]);
        // Every column nonzero, all distinct.
        for j in 0..code.num_columns() {
            assert!(code.column(j).contains(&1));
        }
    }

    #[test]
    fn footnote_trims_to_multiple_of_k() {
        let code = BprCode::build(4, 2, 7).unwrap();
        assert_eq!(code.num_columns(), 14);
        assert_eq!(code.messages_per_user(), 2);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(BprCode::build(4, 2, 16).is_err()); // K > 2^m - 1
        assert!(BprCode::build(4, 0, 5).is_err());
        assert!(BprCode::build(2, 1, 1).is_err()); // m below table range
    }

    #[test]
    fn encode_message_indexing() {
        let code = code_4_2_5();
        assert_eq!(code.encode_message(0, 1).unwrap(), code.column(0));
        assert_eq!(code.encode_message(1, 1).unwrap(), code.column(3));
        assert_eq!(code.encode_message(4, 3).unwrap(), code.column(14));
        assert!(code.encode_message(0, 0).is_err());
        assert!(code.encode_message(0, 4).is_err());
        assert!(code.encode_message(5, 1).is_err());
    }

    #[test]
    fn decode_empty_and_singletons() {
        let code = code_4_2_5();
        let empty = BlockObservation {
            sum: vec![0; 8],
            active_count: 0,
        };
        assert!(code
            .decode_block(&empty, DecodeBackend::SubsetSearch)
            .unwrap()
            .is_empty());
        for j in 0..code.num_columns() {
            let obs = BlockObservation {
                sum: code.column(j).iter().map(|&b| b as u32).collect(),
                active_count: 1,
            };
            let expected = vec![(j / 3, j % 3 + 1)];
            assert_eq!(
                code.decode_block(&obs, DecodeBackend::SubsetSearch)
                    .unwrap(),
                expected
            );
            assert_eq!(
                code.decode_block(&obs, DecodeBackend::Syndrome).unwrap(),
                expected
            );
        }
    }

    #[test]
    fn decode_known_pair() {
        let code = code_4_2_5();
        let obs = BlockObservation {
            sum: sum_columns(&code, &[2, 9]),
            active_count: 2,
        };
        let expected = vec![(0, 3), (3, 1)];
        assert_eq!(
            code.decode_block(&obs, DecodeBackend::SubsetSearch)
                .unwrap(),
            expected
        );
        assert_eq!(
            code.decode_block(&obs, DecodeBackend::Syndrome).unwrap(),
            expected
        );
    }

    #[test]
    fn refuses_overloaded_block() {
        let code = code_4_2_5();
        let obs = BlockObservation {
            sum: sum_columns(&code, &[0, 1, 2]),
            active_count: 3,
        };
        assert!(code
            .decode_block(&obs, DecodeBackend::SubsetSearch)
            .is_err());
    }

    #[test]
    fn any_2t_columns_independent_m4() {
        // Equivalent statement: no nonempty subset of at most 2T columns has
        // an all-even integer sum (XOR of the subset is zero).
        let code = code_4_2_5();
        let m_cols = code.num_columns();
        let mut subset: Vec<usize> = Vec::new();
        fn rec(code: &BprCode, subset: &mut Vec<usize>, start: usize, left: usize, m_cols: usize) {
            if !subset.is_empty() {
                let mut xor = vec![0u8; code.codeword_len()];
                for &j in subset.iter() {
                    for (x, &b) in xor.iter_mut().zip(code.column(j).iter()) {
                        *x ^= b;
                    }
                }
                assert!(
                    xor.contains(&1),
                    "columns {subset:?} are linearly dependent"
                );
            }
            if left == 0 {
                return;
            }
            for j in start..m_cols {
                subset.push(j);
                rec(code, subset, j + 1, left - 1, m_cols);
                subset.pop();
            }
        }
        rec(&code, &mut subset, 0, 2 * code.t(), m_cols);
    }

    #[test]
    fn mod2_consistency() {
        let code = code_4_2_5();
        for (a, b) in [(0usize, 1usize), (2, 9), (5, 13), (3, 14)] {
            let sum = sum_columns(&code, &[a, b]);
            let xor: Vec<u32> = code
                .column(a)
                .iter()
                .zip(code.column(b).iter())
                .map(|(&x, &y)| (x ^ y) as u32)
                .collect();
            let reduced: Vec<u32> = sum.iter().map(|&v| v % 2).collect();
            assert_eq!(reduced, xor);
        }
    }

    #[test]
    fn syndrome_backend_matches_subset_search_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for &(m, t, k) in &[(5usize, 2usize, 31usize), (6, 3, 9), (8, 2, 51)] {
            let code = BprCode::build(m, t, k).unwrap();
            for _ in 0..3400 {
                let l = rng.gen_range(0..=t);
                let mut cols: Vec<usize> = Vec::new();
                while cols.len() < l {
                    let j = rng.gen_range(0..code.num_columns());
                    if !cols.contains(&j) {
                        cols.push(j);
                    }
                }
                let obs = BlockObservation {
                    sum: sum_columns(&code, &cols),
                    active_count: l,
                };
                let a = code
                    .decode_block(&obs, DecodeBackend::SubsetSearch)
                    .unwrap();
                let b = code.decode_block(&obs, DecodeBackend::Syndrome).unwrap();
                assert_eq!(a, b);
                let mut expected: Vec<(usize, usize)> = cols
                    .iter()
                    .map(|&j| (code.user_of_column(j), code.message_of_column(j)))
                    .collect();
                expected.sort_unstable();
                assert_eq!(a, expected);
            }
        }
    }

    #[test]
    fn matrix_dump_shape() {
        let code = code_4_2_5();
        let dump = code.dump_matrix();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines.iter().all(|l| l.len() == 15));
        // Row r, column j must equal bit r of column j.
        for (r, line) in lines.iter().enumerate() {
            for (j, ch) in line.chars().enumerate() {
                assert_eq!(ch == '1', code.column(j)[r] == 1);
            }
        }
    }
}
