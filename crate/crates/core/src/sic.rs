//! Iterative successive-interference-cancellation decoding of a frame.
//!
//! Each iteration has two steps: decode every block whose active count is
//! between 1 and T, then re-encode every newly decoded message and subtract
//! its full frame codeword from the signal. Subtraction is deferred to the
//! iteration barrier, so the set decoded in an iteration does not depend on
//! the block processing order. Decoding stops on an all-zero signal
//! (success) or when no block is resolvable (premature stop).

use crate::bpr::{BprCode, DecodeBackend};
use crate::channel::{slot_occupancy, FrameSignal};
use crate::encoding::{encode_frame, IrsaDistribution};
use crate::{Error, Result};

/// One decoded message with the SIC iteration (1-based) that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub user: usize,
    pub message: usize,
    pub iteration: usize,
}

/// Outcome of iterative decoding.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// Messages in decode order: by iteration, then ascending slot index,
    /// then ascending user index within a block.
    pub messages: Vec<Decoded>,
    /// Premature-stop flag F: false = success (residual signal is zero),
    /// true = some collision blocks could not be resolved.
    pub premature: bool,
    /// Number of SIC iterations that decoded at least one message.
    pub iterations: usize,
    /// Final per-slot active counts (all zero on success).
    pub residual_occupancy: Vec<usize>,
}

impl DecodeResult {
    pub fn decoded_pairs(&self) -> Vec<(usize, usize)> {
        self.messages.iter().map(|d| (d.user, d.message)).collect()
    }

    /// Users decoded in a given iteration, ascending.
    pub fn users_in_iteration(&self, iteration: usize) -> Vec<usize> {
        let mut users: Vec<usize> = self
            .messages
            .iter()
            .filter(|d| d.iteration == iteration)
            .map(|d| d.user)
            .collect();
        users.sort_unstable();
        users
    }
}

/// Run iterative SIC decoding on a received frame.
pub fn sic_decode(
    signal: &FrameSignal,
    code: &BprCode,
    dist: &IrsaDistribution,
    backend: DecodeBackend,
) -> Result<DecodeResult> {
    if signal.block_len != code.block_len() {
        return Err(Error::InvalidParameter(format!(
            "signal block length {} does not match code block length {}",
            signal.block_len,
            code.block_len()
        )));
    }
    let mut working = signal.clone();
    let mut decoded_before = vec![false; code.users()];
    let mut messages: Vec<Decoded> = Vec::new();
    let mut iterations = 0usize;
    let premature = loop {
        if working.is_zero() {
            break false;
        }
        // Step 1: decode all currently resolvable blocks.
        let mut new_this_iter: Vec<(usize, usize)> = Vec::new();
        let mut seen_this_iter = vec![false; code.users()];
        for slot in 0..working.ns {
            let active = working.active_count(slot);
            if active == 0 || active > code.t() {
                continue;
            }
            let obs = working.observation(slot);
            for (user, w) in code.decode_block(&obs, backend)? {
                if decoded_before[user] {
                    return Err(Error::Inconsistent(format!(
                        "user {user} reappeared after its replicas were subtracted"
                    )));
                }
                if seen_this_iter[user] {
                    // Another replica of the same packet in a second
                    // resolvable slot of this iteration; subtract once.
                    continue;
                }
                seen_this_iter[user] = true;
                new_this_iter.push((user, w));
            }
        }
        if new_this_iter.is_empty() {
            break true;
        }
        iterations += 1;
        if iterations > working.ns {
            return Err(Error::Inconsistent(format!(
                "SIC exceeded the iteration cap of {} rounds",
                working.ns
            )));
        }
        // Step 2: re-encode and subtract every replica of each new message.
        for &(user, w) in &new_this_iter {
            let codeword = encode_frame(code, user, w, dist, working.ns)?;
            working.subtract(&codeword)?;
            decoded_before[user] = true;
            messages.push(Decoded {
                user,
                message: w,
                iteration: iterations,
            });
        }
    };
    Ok(DecodeResult {
        messages,
        premature,
        iterations,
        residual_occupancy: slot_occupancy(&working),
    })
}

/// Score a decode result against the true contention map.
///
/// Returns the number of contending users whose (user, message) pair is
/// missing from or mis-associated in the decoded list, and a frame-error
/// flag set when the decoded list differs from the truth in any element.
pub fn per_user_errors(result: &DecodeResult, truth: &[(usize, usize)]) -> (usize, bool) {
    let decoded = result.decoded_pairs();
    let missed = truth.iter().filter(|pair| !decoded.contains(pair)).count();
    let spurious = decoded.iter().filter(|pair| !truth.contains(pair)).count();
    (missed, missed > 0 || spurious > 0)
}

/// Counting-bound statistic on the pre-SIC signal: C = Σ_i min(l_i, T),
/// the number of usable equations the channel output offers a decoder.
pub fn empirical_c(signal: &FrameSignal, t: usize) -> usize {
    slot_occupancy(signal).into_iter().map(|l| l.min(t)).sum()
}
