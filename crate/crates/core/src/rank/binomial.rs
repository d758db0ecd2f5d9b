//! Approximate binomial sampling with a bounded total-variation error.
//!
//! Draws from a distribution within total variation `1/Q` of
//! `Binomial(k, a/b)` in `O(max(ka/b, 1) * log Q)` word operations. The
//! probability ratios `t_i = q_i / q_0` are accumulated in a software
//! floating point format (normalized `alpha + 1` bit significand, separate
//! exponent), the tail beyond `s = min(ceil(6 ln(2Q) max(1, ka/b)), k)` is
//! dropped, all significands are aligned to the largest exponent, and the
//! output is drawn proportionally to the aligned significands.

use ethnum::U256;
use rand::Rng;

use crate::error::{input, Result};

/// Multiplicative error constant of one ratio evaluation in the software
/// float arithmetic (one truncated division plus one truncated product).
const RATIO_ERROR_CONSTANT: u64 = 4;

/// Largest significand width for which a product of two significands still
/// fits in 256 bits.
const MAX_ALPHA: u32 = 126;

const MAX_TRIALS: u64 = 1 << 32;

/// Precomputed output distribution of the sampler for one `(k, a, b, Q)`.
///
/// `weights[i]` is the aligned significand for outcome `first + i`; the
/// sampler returns `first + i` with probability `weights[i] / total`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    first: u64,
    weights: Vec<U256>,
    cumulative: Vec<U256>,
    alpha: u32,
}

impl BinomialTable {
    pub fn new(k: u64, a: u64, b: u64, quality: u64) -> Result<Self> {
        if k == 0 {
            return input("binomial sampler needs k >= 1");
        }
        if k >= MAX_TRIALS {
            return input(format!("binomial sampler supports k < 2^32, got {k}"));
        }
        if a == 0 || a > b {
            return input(format!("binomial sampler needs 1 <= a <= b, got a={a}, b={b}"));
        }
        if quality <= 1 {
            return input(format!("binomial sampler needs Q > 1, got {quality}"));
        }
        if a == b {
            return Ok(BinomialTable {
                first: k,
                weights: vec![U256::ONE],
                cumulative: vec![U256::ONE],
                alpha: 0,
            });
        }
        let alpha = significand_bits(k, quality)?;
        let s = truncation_point(k, a, b, quality);

        let one = SoftFloat::normalize(U256::ONE, 0, alpha);
        let mut terms = Vec::with_capacity(s as usize + 1);
        terms.push(one);
        let mut cur = one;
        for i in 1..=s {
            let num = U256::from(k + 1 - i) * U256::from(a);
            let den = U256::from(i) * U256::from(b - a);
            cur = cur.mul(SoftFloat::ratio(num, den, alpha), alpha);
            terms.push(cur);
        }
        let top = terms.iter().map(|t| t.exp).max().expect("at least t_0");
        let mut weights = Vec::with_capacity(terms.len());
        let mut cumulative = Vec::with_capacity(terms.len());
        let mut acc = U256::ZERO;
        for t in &terms {
            let shift = (top - t.exp) as u64;
            let w = if shift >= 256 { U256::ZERO } else { t.sig >> shift as u32 };
            acc += w;
            weights.push(w);
            cumulative.push(acc);
        }
        Ok(BinomialTable {
            first: 0,
            weights,
            cumulative,
            alpha,
        })
    }

    /// Smallest outcome with nonzero weight index (`k` when `a == b`).
    pub fn first(&self) -> u64 {
        self.first
    }

    /// Aligned significands, one per outcome starting at [`Self::first`].
    pub fn weights(&self) -> &[U256] {
        &self.weights
    }

    pub fn total(&self) -> U256 {
        *self.cumulative.last().expect("non-empty table")
    }

    pub fn alpha(&self) -> u32 {
        self.alpha
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let total = self.total();
        if self.weights.len() == 1 {
            return self.first;
        }
        let u = uniform_below(total, rng);
        let idx = self.cumulative.partition_point(|&c| c <= u);
        self.first + idx as u64
    }
}

/// Draws from a distribution within total variation `1/quality` of
/// `Binomial(k, a/b)`.
pub fn sample_binomial<R: Rng + ?Sized>(
    k: u64,
    a: u64,
    b: u64,
    quality: u64,
    rng: &mut R,
) -> Result<u64> {
    Ok(BinomialTable::new(k, a, b, quality)?.sample(rng))
}

/// `alpha = ceil(log2((3Ck + 2) * 4 (k+1)^2 * Q))`.
pub fn significand_bits(k: u64, quality: u64) -> Result<u32> {
    let x = U256::from(3 * RATIO_ERROR_CONSTANT * k + 2)
        * U256::from(4u8)
        * U256::from(k + 1)
        * U256::from(k + 1)
        * U256::from(quality);
    let bits = 256 - x.leading_zeros();
    let alpha = if x.is_power_of_two() { bits - 1 } else { bits };
    if alpha > MAX_ALPHA {
        return input(format!(
            "binomial sampler precision {alpha} bits exceeds {MAX_ALPHA} (k={k}, Q={quality})"
        ));
    }
    Ok(alpha)
}

/// `s = min(ceil(6 ln(2Q) max(1, ka/b)), k)`.
pub fn truncation_point(k: u64, a: u64, b: u64, quality: u64) -> u64 {
    let mean = (k as f64) * (a as f64) / (b as f64);
    let s = (6.0 * (2.0 * quality as f64).ln() * mean.max(1.0)).ceil();
    if s >= k as f64 {
        k
    } else {
        s as u64
    }
}

fn bit_len(x: U256) -> u32 {
    256 - x.leading_zeros()
}

/// Positive number `sig * 2^exp` with `2^alpha <= sig < 2^(alpha+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct SoftFloat {
    sig: U256,
    exp: i64,
}

impl SoftFloat {
    fn normalize(x: U256, exp: i64, alpha: u32) -> SoftFloat {
        debug_assert!(x != U256::ZERO);
        let len = bit_len(x);
        let want = alpha + 1;
        if len > want {
            let sh = len - want;
            SoftFloat { sig: x >> sh, exp: exp + sh as i64 }
        } else {
            let sh = want - len;
            SoftFloat { sig: x << sh, exp: exp - sh as i64 }
        }
    }

    /// Truncated approximation of `num / den`.
    fn ratio(num: U256, den: U256, alpha: u32) -> SoftFloat {
        let gap = bit_len(num) as i64 - bit_len(den) as i64;
        // quotient should carry at least alpha + 2 bits before normalizing
        let sh = alpha as i64 + 2 - gap;
        if sh >= 0 {
            SoftFloat::normalize((num << sh as u32) / den, -sh, alpha)
        } else {
            SoftFloat::normalize(num / (den << (-sh) as u32), -sh, alpha)
        }
    }

    fn mul(self, other: SoftFloat, alpha: u32) -> SoftFloat {
        SoftFloat::normalize(self.sig * other.sig, self.exp + other.exp, alpha)
    }
}

fn uniform_below<R: Rng + ?Sized>(bound: U256, rng: &mut R) -> U256 {
    debug_assert!(bound > U256::ZERO);
    let bits = bit_len(bound - 1);
    if bits == 0 {
        return U256::ZERO;
    }
    loop {
        let raw = U256::from_words(rng.random::<u128>(), rng.random::<u128>());
        let x = if bits == 256 { raw } else { raw & ((U256::ONE << bits) - 1) };
        if x < bound {
            return x;
        }
    }
}
