//! Message-to-frame encoding for IRSA-BPR.
//!
//! A contending user's message w in {1, ..., M/K} determines everything about
//! its transmission: the BPR codeword, the repetition degree d (via the
//! cumulative rule over the degree distribution) and the d slot positions
//! (via the combinadic unranking of an integer derived from w). Idle users
//! (w = 0) transmit the all-zero frame.

use std::collections::BTreeMap;
use std::fmt;

use crate::bpr::BprCode;
use crate::{Error, Result};

/// Degree-two-and-up repetition distribution Λ with Λ_d = Pr(D = d).
#[derive(Debug, Clone, PartialEq)]
pub struct IrsaDistribution {
    probs: BTreeMap<usize, f64>,
}

impl IrsaDistribution {
    const SUM_TOL: f64 = 1e-12;

    /// Validate and build a distribution from (degree, probability) pairs.
    /// Zero-probability entries are dropped.
    pub fn new(pairs: &[(usize, f64)]) -> Result<IrsaDistribution> {
        let mut probs = BTreeMap::new();
        let mut total = 0.0;
        for &(d, p) in pairs {
            if d < 2 {
                return Err(Error::InvalidParameter(format!(
                    "degree {d} below the minimum repetition degree 2"
                )));
            }
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "probability {p} for degree {d} not in [0, 1]"
                )));
            }
            if p > 0.0 && probs.insert(d, p).is_some() {
                return Err(Error::InvalidParameter(format!("duplicate degree {d}")));
            }
            total += p;
        }
        if probs.is_empty() {
            return Err(Error::InvalidParameter("empty degree distribution".into()));
        }
        if (total - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidParameter(format!(
                "degree probabilities sum to {total}, expected 1"
            )));
        }
        Ok(IrsaDistribution { probs })
    }

    /// The degenerate distribution concentrated on a single degree.
    pub fn single(d: usize) -> Result<IrsaDistribution> {
        IrsaDistribution::new(&[(d, 1.0)])
    }

    /// Parse the CLI syntax `d:prob[,d:prob...]`, e.g. `2:0.5,3:0.5`.
    pub fn parse(s: &str) -> Result<IrsaDistribution> {
        let mut pairs = Vec::new();
        for part in s.split(',') {
            let (d, p) = part.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!("bad distribution term '{part}', expected d:prob"))
            })?;
            let d: usize = d
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad degree '{d}'")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad probability '{p}'")))?;
            pairs.push((d, p));
        }
        IrsaDistribution::new(&pairs)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().map(|(&d, &p)| (d, p))
    }

    pub fn prob(&self, d: usize) -> f64 {
        self.probs.get(&d).copied().unwrap_or(0.0)
    }

    pub fn min_degree(&self) -> usize {
        *self.probs.keys().next().unwrap()
    }

    pub fn max_degree(&self) -> usize {
        *self.probs.keys().next_back().unwrap()
    }

    /// Mean repetition degree Λ'(1).
    pub fn mean_degree(&self) -> f64 {
        self.iter().map(|(d, p)| d as f64 * p).sum()
    }

    /// Efficiency η = 1/Λ'(1).
    pub fn efficiency(&self) -> f64 {
        1.0 / self.mean_degree()
    }

    /// Λ(x) = Σ Λ_d x^d.
    pub fn pgf_at(&self, x: f64) -> f64 {
        self.iter().map(|(d, p)| p * x.powi(d as i32)).sum()
    }

    /// Λ'(x) = Σ d Λ_d x^(d-1).
    pub fn derivative_at(&self, x: f64) -> f64 {
        self.iter()
            .map(|(d, p)| d as f64 * p * x.powi(d as i32 - 1))
            .sum()
    }

    /// Number of messages assigned to each degree when q messages are split
    /// by the cumulative rule, i.e. the realized degree histogram over
    /// w = 1..=q. Thresholds are rounded to the nearest integer, which is
    /// exact whenever every q·Λ_d is an integer.
    pub fn degree_counts(&self, q: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.probs.len());
        let mut cum = 0.0;
        let mut prev = 0usize;
        for (d, p) in self.iter() {
            cum += p;
            let c = (q as f64 * cum).round().min(q as f64) as usize;
            out.push((d, c - prev));
            prev = c;
        }
        out
    }
}

impl fmt::Display for IrsaDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, p) in self.iter() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}:{p}")?;
            first = false;
        }
        Ok(())
    }
}

/// Exact binomial coefficient in 128-bit arithmetic; overflow is an error.
pub fn binomial(n: usize, k: usize) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 1..=k {
        r = r
            .checked_mul((n - k + i) as u128)
            .ok_or_else(|| Error::Numerical(format!("binomial({n}, {k}) overflows u128")))?
            / i as u128;
    }
    Ok(r)
}

/// Repetition degree of message w: the smallest d whose rounded cumulative
/// message count q·Σ_{h<=d} Λ_h reaches w.
pub fn degree_from_message(w: usize, dist: &IrsaDistribution, q: usize) -> Result<usize> {
    if w == 0 || w > q {
        return Err(Error::InvalidParameter(format!(
            "message w={w} out of range [1, {q}]"
        )));
    }
    let mut covered = 0usize;
    for (d, count) in dist.degree_counts(q) {
        covered += count;
        if covered >= w {
            return Ok(d);
        }
    }
    // Unreachable: the final cumulative count is q and w <= q.
    Err(Error::Inconsistent(format!(
        "cumulative degree counts never reached w={w}"
    )))
}

/// Unique increasing d-tuple (u_1, ..., u_d) with Σ_h C(u_h, h) = u,
/// computed greedily from h = d down to 1.
pub fn combinadic_decompose(u: u128, d: usize) -> Result<Vec<usize>> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "combinadic arity d must be >= 1".into(),
        ));
    }
    let mut rem = u;
    let mut tuple = vec![0usize; d];
    for h in (1..=d).rev() {
        // Largest i with C(i, h) <= rem; starts at i = h - 1 where C = 0.
        let mut i = h - 1;
        while binomial(i + 1, h)? <= rem {
            i += 1;
        }
        rem -= binomial(i, h)?;
        tuple[h - 1] = i;
    }
    debug_assert_eq!(rem, 0);
    Ok(tuple)
}

/// Slot positions of the d replica blocks for message w: the combinadic
/// unranking of (w - offset - 1) mod C(N_s, d), where the offset is the
/// number of messages mapped to smaller degrees.
pub fn positions_from_message(
    w: usize,
    d: usize,
    dist: &IrsaDistribution,
    q: usize,
    ns: usize,
) -> Result<Vec<usize>> {
    if d > ns {
        return Err(Error::InvalidParameter(format!(
            "degree {d} exceeds the number of slots {ns}"
        )));
    }
    debug_assert_eq!(degree_from_message(w, dist, q)?, d);
    let offset: usize = dist
        .degree_counts(q)
        .into_iter()
        .take_while(|&(dd, _)| dd < d)
        .map(|(_, c)| c)
        .sum();
    let v = (w - offset - 1) as u128;
    let u = v % binomial(ns, d)?;
    let tuple = combinadic_decompose(u, d)?;
    debug_assert!(tuple.iter().all(|&s| s < ns));
    Ok(tuple)
}

/// A user's frame codeword: N_s blocks of 1 + mT symbols, with the BPR
/// codeword plus the extra symbol 1 in each of the d replica blocks and
/// zeros elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameCodeword {
    /// Length (1 + mT)·N_s, entries in {0, 1}.
    pub symbols: Vec<u8>,
    pub ns: usize,
    pub block_len: usize,
    /// Repetition degree d (0 for idle).
    pub degree: usize,
    /// Ascending slot indices of the replica blocks (empty for idle).
    pub positions: Vec<usize>,
}

impl FrameCodeword {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_idle(&self) -> bool {
        self.degree == 0
    }
}

/// Encode message w (0 = idle) of the given user into a frame codeword.
pub fn encode_frame(
    code: &BprCode,
    user: usize,
    w: usize,
    dist: &IrsaDistribution,
    ns: usize,
) -> Result<FrameCodeword> {
    let block_len = code.block_len();
    if w == 0 {
        return Ok(FrameCodeword {
            symbols: vec![0; block_len * ns],
            ns,
            block_len,
            degree: 0,
            positions: Vec::new(),
        });
    }
    let q = code.messages_per_user();
    let codeword = code.encode_message(user, w)?;
    let d = degree_from_message(w, dist, q)?;
    let positions = positions_from_message(w, d, dist, q, ns)?;
    let mut symbols = vec![0u8; block_len * ns];
    for &slot in &positions {
        let base = slot * block_len;
        symbols[base..base + codeword.len()].copy_from_slice(codeword);
        symbols[base + block_len - 1] = 1;
    }
    Ok(FrameCodeword {
        symbols,
        ns,
        block_len,
        degree: d,
        positions,
    })
}
