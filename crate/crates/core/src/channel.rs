//! The noiseless K-input binary adder channel: the received frame is the
//! elementwise integer sum of all users' frame codewords.

use crate::bpr::BlockObservation;
use crate::encoding::FrameCodeword;
use crate::{Error, Result};

/// Channel output for a whole frame: N_s blocks of 1 + mT integer symbols.
/// The last symbol of each block accumulates the per-codeword extra 1 and
/// therefore counts the users active in that block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSignal {
    pub symbols: Vec<u32>,
    pub ns: usize,
    pub block_len: usize,
}

impl FrameSignal {
    pub fn zero(ns: usize, block_len: usize) -> FrameSignal {
        FrameSignal {
            symbols: vec![0; ns * block_len],
            ns,
            block_len,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.symbols.iter().all(|&s| s == 0)
    }

    pub fn block(&self, i: usize) -> &[u32] {
        &self.symbols[i * self.block_len..(i + 1) * self.block_len]
    }

    /// Number of users active in block i (the extra-symbol accumulator).
    pub fn active_count(&self, i: usize) -> usize {
        self.block(i)[self.block_len - 1] as usize
    }

    /// Split block i into its sum vector and active count.
    pub fn observation(&self, i: usize) -> BlockObservation {
        let block = self.block(i);
        BlockObservation {
            sum: block[..self.block_len - 1].to_vec(),
            active_count: block[self.block_len - 1] as usize,
        }
    }

    /// Add a codeword into the signal (channel superposition).
    pub fn add(&mut self, codeword: &FrameCodeword) -> Result<()> {
        self.check_shape(codeword)?;
        for (s, &c) in self.symbols.iter_mut().zip(codeword.symbols.iter()) {
            *s += c as u32;
        }
        Ok(())
    }

    /// Remove a previously added codeword (ideal interference subtraction).
    /// A would-be negative entry means the codeword was never part of the
    /// signal, which indicates a decoder or parameter bug.
    pub fn subtract(&mut self, codeword: &FrameCodeword) -> Result<()> {
        self.check_shape(codeword)?;
        for (s, &c) in self.symbols.iter_mut().zip(codeword.symbols.iter()) {
            *s = s.checked_sub(c as u32).ok_or_else(|| {
                Error::Inconsistent("subtraction produced a negative channel symbol".into())
            })?;
        }
        Ok(())
    }

    fn check_shape(&self, codeword: &FrameCodeword) -> Result<()> {
        if codeword.symbols.len() != self.symbols.len()
            || codeword.ns != self.ns
            || codeword.block_len != self.block_len
        {
            return Err(Error::InvalidParameter(format!(
                "codeword shape ({} x {}) does not match signal shape ({} x {})",
                codeword.ns, codeword.block_len, self.ns, self.block_len
            )));
        }
        Ok(())
    }
}

/// Superimpose all users' codewords over the adder channel.
pub fn transmit(codewords: &[FrameCodeword]) -> Result<FrameSignal> {
    let first = codewords
        .first()
        .ok_or_else(|| Error::InvalidParameter("transmit requires at least one codeword".into()))?;
    let mut signal = FrameSignal::zero(first.ns, first.block_len);
    for cw in codewords {
        signal.add(cw)?;
    }
    Ok(signal)
}

/// Per-slot active-user counts l_i, read from the extra-symbol accumulators.
pub fn slot_occupancy(signal: &FrameSignal) -> Vec<usize> {
    (0..signal.ns).map(|i| signal.active_count(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpr::BprCode;
    use crate::encoding::{encode_frame, IrsaDistribution};

    fn setup() -> (BprCode, IrsaDistribution) {
        (
            BprCode::build(4, 2, 5).unwrap(),
            IrsaDistribution::single(2).unwrap(),
        )
    }

    #[test]
    fn all_idle_is_zero() {
        let (code, dist) = setup();
        let ns = 4;
        let codewords: Vec<_> = (0..5)
            .map(|u| encode_frame(&code, u, 0, &dist, ns).unwrap())
            .collect();
        let signal = transmit(&codewords).unwrap();
        assert!(signal.is_zero());
        assert_eq!(slot_occupancy(&signal), vec![0; ns]);
    }

    #[test]
    fn single_user_passes_through() {
        let (code, dist) = setup();
        let ns = 4;
        let cw = encode_frame(&code, 2, 1, &dist, ns).unwrap();
        let signal = transmit(std::slice::from_ref(&cw)).unwrap();
        let as_u32: Vec<u32> = cw.symbols.iter().map(|&s| s as u32).collect();
        assert_eq!(signal.symbols, as_u32);
        // Degree 2: exactly two slots occupied once each.
        let occ = slot_occupancy(&signal);
        assert_eq!(occ.iter().filter(|&&l| l == 1).count(), 2);
        assert_eq!(occ.iter().sum::<usize>(), 2);
    }

    #[test]
    fn two_users_superpose() {
        let (code, dist) = setup();
        let ns = 4;
        // Same message index from two users: identical slot pair, different
        // codewords, so the shared blocks accumulate counts up to 2.
        let a = encode_frame(&code, 0, 1, &dist, ns).unwrap();
        let b = encode_frame(&code, 1, 1, &dist, ns).unwrap();
        let signal = transmit(&[a.clone(), b.clone()]).unwrap();
        assert!(signal.symbols.iter().all(|&s| s <= 2));
        assert!(signal.symbols.contains(&2));
        let occ = slot_occupancy(&signal);
        assert_eq!(occ, vec![2, 2, 0, 0]);

        // Linearity: transmitting jointly equals adding the parts.
        let left = transmit(std::slice::from_ref(&a)).unwrap();
        let mut combined = left.clone();
        combined.add(&b).unwrap();
        assert_eq!(combined, signal);

        // Exact cancellation: removing one user leaves the other alone.
        let mut reduced = signal.clone();
        reduced.subtract(&a).unwrap();
        assert_eq!(reduced, transmit(std::slice::from_ref(&b)).unwrap());
    }

    #[test]
    fn subtract_rejects_foreign_codeword() {
        let (code, dist) = setup();
        let ns = 4;
        let a = encode_frame(&code, 0, 1, &dist, ns).unwrap();
        let c = encode_frame(&code, 4, 3, &dist, ns).unwrap();
        let mut signal = transmit(std::slice::from_ref(&a)).unwrap();
        assert!(signal.subtract(&c).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let (code, dist) = setup();
        let a = encode_frame(&code, 0, 1, &dist, 4).unwrap();
        let b = encode_frame(&code, 1, 1, &dist, 5).unwrap();
        assert!(transmit(&[a, b]).is_err());
    }
}
