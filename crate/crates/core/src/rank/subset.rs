use std::borrow::Borrow;

use rand::Rng;
use rustc_hash::FxHashMap;

use super::binomial::BinomialTable;
use crate::error::Result;

/// Inclusion probability `(next_lb - lb) / (1 - lb)` of the advance that
/// starts after `steps` completed advances, as an exact fraction `(a, b)`.
///
/// The first advance opens `(0, 2^-d*]`, giving `2^-d*`. Later advances open
/// `(2^-L, 2^-L+1]` from `lb = 2^-L`, giving `1 / (2^L - 1)`.
pub fn inclusion_fraction(steps: u32, d_star: u32) -> (u64, u64) {
    debug_assert!(steps <= d_star);
    if steps == 0 {
        (1, 1u64 << d_star)
    } else {
        let level = d_star + 1 - steps;
        (1, (1u64 << level) - 1)
    }
}

/// Uniform random `count`-subset of `{1, ..., deg}` by partial Fisher-Yates
/// over a sparse position map.
pub fn uniform_subset<R: Rng + ?Sized>(deg: usize, count: usize, rng: &mut R) -> Vec<usize> {
    debug_assert!(count <= deg);
    if count == deg {
        return (1..=deg).collect();
    }
    let mut moved: FxHashMap<usize, usize> = FxHashMap::default();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let j = rng.random_range(i..deg);
        let at_j = *moved.get(&j).unwrap_or(&j);
        let at_i = *moved.get(&i).unwrap_or(&i);
        moved.insert(j, at_i);
        out.push(at_j + 1);
    }
    out
}

/// Tentative label set for one advance: every label in `{1..deg}` is kept
/// independently with probability `a/b`, realized as a binomial count
/// followed by a uniform subset of that size.
pub fn select_tentative<R: Rng + ?Sized, T: Borrow<BinomialTable>>(
    deg: usize,
    table: impl FnOnce(u64) -> Result<T>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if deg == 0 {
        return Ok(Vec::new());
    }
    let count = table(deg as u64)?.borrow().sample(rng) as usize;
    Ok(uniform_subset(deg, count, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fractions_telescope_to_interval_lengths() {
        // P(level) = p_level * prod(1 - p_earlier) must equal |I_level|
        for d_star in 0..=10u32 {
            let mut survive = (1u128, 1u128);
            for steps in 0..=d_star {
                let (a, b) = inclusion_fraction(steps, d_star);
                let (a, b) = (a as u128, b as u128);
                let level = d_star + 1 - steps;
                let p = (survive.0 * a, survive.1 * b);
                let len_den: u128 = if steps == 0 { 1 << d_star } else { 1 << level };
                assert_eq!(p.0 * len_den, p.1, "d*={d_star} level={level}");
                survive = (survive.0 * (b - a), survive.1 * b);
            }
            assert_eq!(survive.0, 0, "last level takes everything");
        }
    }

    #[test]
    fn last_level_takes_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (a, b) = inclusion_fraction(3, 3);
        assert_eq!((a, b), (1, 1));
        let t = select_tentative(7, |k| BinomialTable::new(k, a, b, 100), &mut rng).unwrap();
        let mut t = t;
        t.sort();
        assert_eq!(t, (1..=7).collect::<Vec<_>>());
    }

    #[test]
    fn empty_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = select_tentative(0, |_| -> Result<BinomialTable> { unreachable!() }, &mut rng).unwrap();
        assert!(t.is_empty());
    }

    #[test]
    fn subsets_are_distinct_and_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut hits = [0u32; 10];
        let rounds = 30_000;
        for _ in 0..rounds {
            let s = uniform_subset(10, 3, &mut rng);
            let mut sorted = s.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 3);
            for x in s {
                assert!((1..=10).contains(&x));
                hits[x - 1] += 1;
            }
        }
        // each label appears with probability 3/10; sd ~ 79
        for h in hits {
            assert!((h as f64 - 9000.0).abs() < 400.0, "{hits:?}");
        }
    }
}
