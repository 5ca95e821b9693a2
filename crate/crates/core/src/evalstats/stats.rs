use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of nonzero differences for which the null distribution of
/// the signed-rank statistic is enumerated exactly.
pub const EXACT_MAX_N: usize = 25;

/// Below this many nonzero differences the test has little power and the
/// result is flagged.
pub const SMALL_N: usize = 5;

/// Scores of two pipelines on the same evaluation units.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedComparison {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl PairedComparison {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::invalid(format!(
                "paired comparison needs equal unit counts, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("paired scores must be finite"));
        }
        Ok(PairedComparison { a, b })
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `a_i − b_i`.
    pub fn differences(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(x, y)| x - y).collect()
    }

    pub fn swapped(&self) -> PairedComparison {
        PairedComparison {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }
}

/// Standardized mean difference of the paired differences,
/// `mean(d) / std(d)` with the sample (n − 1) standard deviation.
pub fn smd(pairs: &PairedComparison) -> Result<f64> {
    let d = pairs.differences();
    let n = d.len();
    if n < 2 {
        return Err(Error::invalid("SMD needs at least two pairs"));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if !(var > 0.0) {
        return Err(Error::DegenerateStatistic(
            "paired differences have zero variance".into(),
        ));
    }
    Ok(mean / var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    Exact,
    /// Exact, but with fewer than [`SMALL_N`] nonzero differences.
    ExactSmallN,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// One-sided p-value for `H1: median(a) > median(b)`.
    pub p_value: f64,
    /// Sum of the (mid)ranks of the positive differences.
    pub statistic: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub method: WilcoxonMethod,
}

/// Midranks of `|d|` (1-based), doubled so that they are integers.
fn doubled_midranks(abs: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let n = abs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]).then(i.cmp(&j)));
    let mut ranks = vec![0u64; n];
    let mut tie_sizes = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && abs[order[end]] == abs[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end, midrank (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        tie_sizes.push(end - start);
        start = end;
    }
    (ranks, tie_sizes)
}

/// `P(W ≥ observed)` where `W` sums a uniformly random subset of `ranks`.
fn exact_upper_tail(ranks: &[u64], observed: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let tail: f64 = counts[observed as usize..].iter().sum();
    tail / 2f64.powi(ranks.len() as i32)
}

/// One-sided Wilcoxon signed-rank test of `median(a) > median(b)`.
///
/// Zero differences are dropped and tied magnitudes get midranks. The null
/// distribution is enumerated exactly for up to [`EXACT_MAX_N`] nonzero
/// differences; above that the normal approximation with tie and continuity
/// correction is used.
pub fn wilcoxon_one_sided(pairs: &PairedComparison) -> Result<WilcoxonResult> {
    let d: Vec<f64> = pairs.differences().into_iter().filter(|&x| x != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(Error::DegenerateStatistic(
            "all paired differences are zero".into(),
        ));
    }
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let (ranks, ties) = doubled_midranks(&abs);
    let w2: u64 = d
        .iter()
        .zip(&ranks)
        .filter(|(x, _)| **x > 0.0)
        .map(|(_, r)| r)
        .sum();
    let statistic = w2 as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let method = if n < SMALL_N {
            log::warn!("Wilcoxon test on only {n} nonzero differences");
            WilcoxonMethod::ExactSmallN
        } else {
            WilcoxonMethod::Exact
        };
        return Ok(WilcoxonResult {
            p_value: exact_upper_tail(&ranks, w2),
            statistic,
            n,
            method,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (statistic - mean - 0.5) / var.sqrt();
    let p_value = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .sf(z)
        .clamp(f64::MIN_POSITIVE, 1.0);
    Ok(WilcoxonResult {
        p_value,
        statistic,
        n,
        method: WilcoxonMethod::Normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs_from_diffs(d: &[f64]) -> PairedComparison {
        PairedComparison::new(d.to_vec(), vec![0.0; d.len()]).unwrap()
    }

    /// Enumerate every sign assignment of the nonzero |d| with midranks
    /// recomputed from scratch.
    fn enumeration_p(d: &[f64]) -> f64 {
        let nz: Vec<f64> = d.iter().copied().filter(|&x| x != 0.0).collect();
        let n = nz.len();
        let abs: Vec<f64> = nz.iter().map(|x| x.abs()).collect();
        let rank = |i: usize| {
            let less = abs.iter().filter(|&&v| v < abs[i]).count() as f64;
            let equal = abs.iter().filter(|&&v| v == abs[i]).count() as f64;
            less + (equal + 1.0) / 2.0
        };
        let ranks: Vec<f64> = (0..n).map(rank).collect();
        let observed: f64 = (0..n).filter(|&i| nz[i] > 0.0).map(|i| ranks[i]).sum();
        let mut hits = 0u64;
        for mask in 0u64..(1 << n) {
            let w: f64 = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if w >= observed - 1e-9 {
                hits += 1;
            }
        }
        hits as f64 / (1u64 << n) as f64
    }

    #[test]
    fn smd_arithmetic() {
        let p = pairs_from_diffs(&[0.1, 0.2, 0.3, 0.2]);
        let mean: f64 = 0.2;
        let sd = ((0.01 + 0.0 + 0.01 + 0.0) / 3.0f64).sqrt();
        let s = smd(&p).unwrap();
        assert!((s - mean / sd).abs() < 1e-12);
        assert!((s - 2.449).abs() < 1e-3);
        assert!((smd(&p.swapped()).unwrap() + s).abs() < 1e-15);
    }

    #[test]
    fn smd_degenerate() {
        let p = PairedComparison::new(vec![0.7, 0.8], vec![0.7, 0.8]).unwrap();
        assert!(matches!(smd(&p), Err(Error::DegenerateStatistic(_))));
        let one = pairs_from_diffs(&[0.3]);
        assert!(matches!(smd(&one), Err(Error::InvalidInput(_))));
        assert!(PairedComparison::new(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn all_positive_five() {
        let r = wilcoxon_one_sided(&pairs_from_diffs(&[0.1, 0.2, 0.3, 0.4, 0.5])).unwrap();
        assert_eq!(r.p_value, 1.0 / 32.0);
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn symmetric_differences() {
        let r = wilcoxon_one_sided(&pairs_from_diffs(&[0.1, -0.1, 0.2, -0.2, 0.3, -0.3])).unwrap();
        assert!(r.p_value >= 0.5);
    }

    #[test]
    fn zeros_and_small_n() {
        let p = pairs_from_diffs(&[0.0, 0.0]);
        assert!(matches!(
            wilcoxon_one_sided(&p),
            Err(Error::DegenerateStatistic(_))
        ));
        let r = wilcoxon_one_sided(&pairs_from_diffs(&[0.0, 0.2, 0.1, 0.0])).unwrap();
        assert_eq!(r.n, 2);
        assert_eq!(r.method, WilcoxonMethod::ExactSmallN);
        assert_eq!(r.p_value, 0.25);
    }

    #[test]
    fn matches_enumeration_with_ties() {
        let mut g = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = g.gen_range(1..=10);
            // coarse grid forces ties and zeros
            let d: Vec<f64> = (0..n).map(|_| g.gen_range(-4i32..=4) as f64 * 0.05).collect();
            if d.iter().all(|&x| x == 0.0) {
                continue;
            }
            let r = wilcoxon_one_sided(&pairs_from_diffs(&d)).unwrap();
            assert!((r.p_value - enumeration_p(&d)).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn normal_branch_is_close_to_exact() {
        let mut g = ChaCha8Rng::seed_from_u64(12);
        let d: Vec<f64> = (0..40).map(|_| g.gen_range(-0.6..1.0)).collect();
        let r = wilcoxon_one_sided(&pairs_from_diffs(&d)).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        let nz: Vec<f64> = d.iter().map(|x| x.abs()).collect();
        let (ranks, _) = doubled_midranks(&nz);
        let w2: u64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
        let exact = exact_upper_tail(&ranks, w2);
        assert!((r.p_value - exact).abs() < 5e-3, "{} vs {exact}", r.p_value);
    }

    proptest! {
        #[test]
        fn strengthening_positives_never_raises_p(
            mags in proptest::collection::btree_set(1u32..1000, 5..15),
            signs in proptest::collection::vec(any::<bool>(), 15),
        ) {
            let mags: Vec<f64> = mags.into_iter().map(|m| m as f64).collect();
            let d: Vec<f64> = mags.iter().zip(&signs).map(|(&m, &s)| if s { m } else { -m }).collect();
            // magnitudes are distinct integers, so +0.5 never reorders them
            let stronger: Vec<f64> = d.iter().map(|&x| if x > 0.0 { x + 0.5 } else { x }).collect();
            let p0 = wilcoxon_one_sided(&pairs_from_diffs(&d)).unwrap().p_value;
            let p1 = wilcoxon_one_sided(&pairs_from_diffs(&stronger)).unwrap().p_value;
            prop_assert!(p1 <= p0);
        }

        #[test]
        fn p_in_unit_interval(d in proptest::collection::vec(-1.0f64..1.0, 1..40)) {
            prop_assume!(d.iter().any(|&x| x != 0.0));
            let p = wilcoxon_one_sided(&pairs_from_diffs(&d)).unwrap().p_value;
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
