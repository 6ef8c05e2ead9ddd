//! Comparison statistics: Fisher's exact test with odds ratios for success
//! counts, and the Wilcoxon rank-sum test with the Vargha-Delaney A12
//! effect size for iteration counts.

use std::fmt;

#[derive(Debug)]
pub enum StatsError {
    SampleTooSmall { len: usize, min: usize },
}

impl fmt::Display for StatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StatsError::SampleTooSmall { len, min } => {
                write!(
                    f,
                    "sample of {len} is below the minimum of {min} for the normal approximation"
                )
            }
        }
    }
}

impl std::error::Error for StatsError {}

/// Two-sided Fisher exact test on a 2x2 table plus the odds ratio
/// (Haldane 0.5 correction when any cell is zero). The p-value sums the
/// hypergeometric probabilities of every table at most as likely as the
/// observed one.
pub fn fisher_exact_2x2(a: u64, b: u64, c: u64, d: u64) -> (f64, f64) {
    let odds = if a == 0 || b == 0 || c == 0 || d == 0 {
        ((a as f64 + 0.5) * (d as f64 + 0.5)) / ((b as f64 + 0.5) * (c as f64 + 0.5))
    } else {
        (a as f64 * d as f64) / (b as f64 * c as f64)
    };
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    if n == 0 || r1 == 0 || r2 == 0 || c1 == 0 || c1 == n {
        return (1.0, odds);
    }
    let ln_fact = ln_factorials(n as usize);
    let ln_pmf = |k: u64| {
        ln_choose(&ln_fact, r1, k) + ln_choose(&ln_fact, r2, c1 - k) - ln_choose(&ln_fact, n, c1)
    };
    let lo = c1.saturating_sub(r2);
    let hi = r1.min(c1);
    let observed = ln_pmf(a);
    let mut p = 0.0;
    for k in lo..=hi {
        let lp = ln_pmf(k);
        if lp <= observed + 1e-7 {
            p += lp.exp();
        }
    }
    (p.min(1.0), odds)
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for i in 1..=n {
        table[i] = table[i - 1] + (i as f64).ln();
    }
    table
}

fn ln_choose(ln_fact: &[f64], n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize]
}

/// Midranks of the concatenation xs++ys (ties get the average rank).
fn ranks(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut indexed: Vec<(f64, usize)> = xs
        .iter()
        .chain(ys)
        .copied()
        .enumerate()
        .map(|(i, v)| (v, i))
        .collect();
    indexed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("samples are finite"));
    let mut rank = vec![0.0; indexed.len()];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < indexed.len() {
        let mut j = i;
        while j + 1 < indexed.len() && indexed[j + 1].0 == indexed[i].0 {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for entry in &indexed[i..=j] {
            rank[entry.1] = avg;
        }
        tie_sizes.push(j - i + 1);
        i = j + 1;
    }
    (rank, tie_sizes)
}

/// Vargha-Delaney A12: the probability that a draw from `xs` exceeds a draw
/// from `ys`, counting ties as one half.
pub fn vargha_delaney_a12(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty(), "samples must be nonempty");
    let (rank, _) = ranks(xs, ys);
    let m = xs.len() as f64;
    let n = ys.len() as f64;
    let r1: f64 = rank[..xs.len()].iter().sum();
    (r1 / m - (m + 1.0) / 2.0) / n
}

/// Two-sided Wilcoxon rank-sum test via the tie-corrected normal
/// approximation with continuity correction. Requires five observations a
/// side.
pub fn wilcoxon_rank_sum(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    const MIN: usize = 5;
    for sample in [xs, ys] {
        if sample.len() < MIN {
            return Err(StatsError::SampleTooSmall {
                len: sample.len(),
                min: MIN,
            });
        }
    }
    let (rank, tie_sizes) = ranks(xs, ys);
    let m = xs.len() as f64;
    let n = ys.len() as f64;
    let total = m + n;
    let w: f64 = rank[..xs.len()].iter().sum();
    let mean = m * (total + 1.0) / 2.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let variance = m * n / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if variance <= 0.0 {
        return Ok(1.0);
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    if z == 0.0 {
        return Ok(1.0);
    }
    Ok((2.0 * normal_sf(z)).min(1.0))
}

/// Upper tail of the standard normal distribution.
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

fn erfc(x: f64) -> f64 {
    // Abramowitz–Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
    let sign_flip = x < 0.0;
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc = poly * (-x * x).exp();
    if sign_flip {
        2.0 - erfc
    } else {
        erfc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use num_traits::ToPrimitive;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn binom(n: u64, k: u64) -> BigUint {
        let mut out = BigUint::from(1u32);
        for i in 0..k.min(n) {
            out = out * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        if k > n {
            BigUint::from(0u32)
        } else {
            out
        }
    }

    /// Exact-arithmetic route: integer table weights, with the same
    /// boundary-inclusion rule expressed in exact rationals.
    fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
        let (r1, r2, c1) = (a + b, c + d, a + c);
        let n = r1 + r2;
        if n == 0 || r1 == 0 || r2 == 0 || c1 == 0 || c1 == n {
            return 1.0;
        }
        let weight = |k: u64| binom(r1, k) * binom(r2, c1 - k);
        let observed = weight(a);
        let lo = c1.saturating_sub(r2);
        let hi = r1.min(c1);
        let scale = BigUint::from(10_000_000u64);
        let scale_plus = BigUint::from(10_000_001u64);
        let mut selected = BigUint::from(0u32);
        for k in lo..=hi {
            let w = weight(k);
            if &w * &scale <= &observed * &scale_plus {
                selected += w;
            }
        }
        let total = binom(n, c1);
        selected.to_f64().unwrap() / total.to_f64().unwrap()
    }

    #[test]
    fn fisher_identical_columns_show_no_association() {
        assert_eq!(fisher_exact_2x2(50, 50, 50, 50).0, 1.0);
        assert_eq!(fisher_exact_2x2(5, 5, 5, 5).0, 1.0);
    }

    #[test]
    fn fisher_perfect_separation_is_highly_significant() {
        let (p, odds) = fisher_exact_2x2(10, 0, 0, 10);
        // Two of the 184756 equally-weighted tables are this extreme.
        assert!((p - 2.0 / 184756.0).abs() < 1e-12, "p={p}");
        assert!((p - 1.08e-5).abs() < 1e-7);
        assert!(odds > 1.0);
    }

    #[test]
    fn fisher_zero_cells_use_corrected_odds_ratio() {
        let (_, odds) = fisher_exact_2x2(10, 0, 2, 8);
        assert!((odds - (10.5 * 8.5) / (0.5 * 2.5)).abs() < 1e-12);
    }

    #[test]
    fn fisher_matches_exact_enumeration_on_random_tables() {
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..200 {
            let a = rng.gen_range(0..30);
            let b = rng.gen_range(0..30);
            let c = rng.gen_range(0..30);
            let d = rng.gen_range(0..30);
            let (p, _) = fisher_exact_2x2(a, b, c, d);
            let expected = fisher_oracle(a, b, c, d);
            assert!(
                (p - expected).abs() < 1e-9,
                "({a},{b},{c},{d}): {p} vs {expected}"
            );
        }
    }

    #[test]
    fn a12_is_half_for_identical_samples() {
        let xs = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(vargha_delaney_a12(&xs, &xs), 0.5);
    }

    #[test]
    fn a12_is_one_under_full_dominance() {
        assert_eq!(vargha_delaney_a12(&[4.0, 5.0, 6.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(vargha_delaney_a12(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 0.0);
    }

    fn a12_oracle(xs: &[f64], ys: &[f64]) -> f64 {
        let mut score = 0.0;
        for x in xs {
            for y in ys {
                if x > y {
                    score += 1.0;
                } else if x == y {
                    score += 0.5;
                }
            }
        }
        score / (xs.len() as f64 * ys.len() as f64)
    }

    #[test]
    fn a12_matches_pairwise_counting() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..100 {
            let xs: Vec<f64> = (0..rng.gen_range(1..40))
                .map(|_| rng.gen_range(0..20) as f64)
                .collect();
            let ys: Vec<f64> = (0..rng.gen_range(1..40))
                .map(|_| rng.gen_range(0..20) as f64)
                .collect();
            let fast = vargha_delaney_a12(&xs, &ys);
            let slow = a12_oracle(&xs, &ys);
            assert!((fast - slow).abs() < 1e-9, "{fast} vs {slow}");
        }
    }

    #[test]
    fn wilcoxon_identical_multisets_are_insignificant() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(wilcoxon_rank_sum(&xs, &xs).unwrap(), 1.0);
    }

    #[test]
    fn wilcoxon_fully_separated_samples_are_significant() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let ys: Vec<f64> = (0..30).map(|i| 1000.0 + i as f64).collect();
        assert!(wilcoxon_rank_sum(&xs, &ys).unwrap() < 0.001);
    }

    #[test]
    fn wilcoxon_rejects_tiny_samples() {
        let err = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0, 7.0, 8.0]).unwrap_err();
        assert!(matches!(err, StatsError::SampleTooSmall { len: 3, .. }));
    }

    fn wilcoxon_permutation_oracle(xs: &[f64], ys: &[f64], trials: usize, seed: u64) -> f64 {
        let (rank, _) = ranks(xs, ys);
        let m = xs.len();
        let observed: f64 = rank[..m].iter().sum();
        let mean = m as f64 * (rank.len() as f64 + 1.0) / 2.0;
        let mut combined: Vec<f64> = xs.iter().chain(ys).copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut extreme = 0usize;
        for _ in 0..trials {
            // Fisher-Yates shuffle, then re-rank the permuted split.
            for i in (1..combined.len()).rev() {
                combined.swap(i, rng.gen_range(0..=i));
            }
            let (rank, _) = ranks(&combined[..m], &combined[m..]);
            let w: f64 = rank[..m].iter().sum();
            if (w - mean).abs() >= (observed - mean).abs() - 1e-12 {
                extreme += 1;
            }
        }
        extreme as f64 / trials as f64
    }

    #[test]
    fn wilcoxon_tracks_the_permutation_distribution() {
        let mut rng = StdRng::seed_from_u64(17);
        for round in 0..12 {
            let shift = rng.gen_range(0..4) as f64;
            let xs: Vec<f64> = (0..12).map(|_| rng.gen_range(0..12) as f64).collect();
            let ys: Vec<f64> = (0..12)
                .map(|_| rng.gen_range(0..12) as f64 + shift)
                .collect();
            let approx = wilcoxon_rank_sum(&xs, &ys).unwrap();
            let exact = wilcoxon_permutation_oracle(&xs, &ys, 10_000, round);
            assert!((approx - exact).abs() < 0.02, "{approx} vs {exact}");
        }
    }
}
