use statrs::function::erf::erfc;

use super::{check_finite, Method, StatsError, TestResult, EXACT_LIMIT};

/// Average ranks (1-based) with ties sharing the mean of their positions.
/// Also returns the tie correction term `sum(t^3 - t)` over tie groups.
pub fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    (ranks, tie_term)
}

fn two_sided_from_counts(at_most: u64, at_least: u64, total: u64) -> f64 {
    (2.0 * at_most.min(at_least) as f64 / total as f64).min(1.0)
}

/// Two-sided normal tail with continuity correction.
fn normal_two_sided(statistic: f64, mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return 1.0;
    }
    let z = ((statistic - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Number of arrangements giving each value of U for sample sizes (m, n), no ties.
fn u_null_counts(m: usize, n: usize) -> Vec<u64> {
    // table[j] holds the distribution for (i, j) while sweeping i upward
    let mut table: Vec<Vec<u64>> = (0..=n).map(|_| vec![1]).collect();
    for i in 1..=m {
        let mut row: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
        row.push(vec![1]);
        for j in 1..=n {
            let mut dist = vec![0u64; i * j + 1];
            // largest observation belongs to the first sample: every second-sample item is below it
            for (u, &c) in table[j].iter().enumerate() {
                dist[u + j] += c;
            }
            // largest observation belongs to the second sample: contributes nothing
            for (u, &c) in row[j - 1].iter().enumerate() {
                dist[u] += c;
            }
            row.push(dist);
        }
        table = row;
    }
    table.pop().expect("n + 1 entries")
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check_finite(a)?;
    check_finite(b)?;
    let n = a.len() + b.len();
    let (_, tie_term) = midranks(&[a, b].concat());
    let method = if n <= EXACT_LIMIT && tie_term == 0.0 { Method::Exact } else { Method::Normal };
    mann_whitney_u_with(a, b, method)
}

/// Mann-Whitney U with an explicit choice of null distribution.
pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: Method) -> Result<TestResult, StatsError> {
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled = [a, b].concat();
    let (ranks, tie_term) = midranks(&pooled);
    let rank_sum_a: f64 = ranks[..na].iter().sum();
    let u_a = rank_sum_a - (na * (na + 1)) as f64 / 2.0;

    let p_value = match method {
        Method::Exact => {
            if n > EXACT_LIMIT {
                return Err(StatsError::TooLargeForExact(n));
            }
            if tie_term != 0.0 {
                return Err(StatsError::TiesInExact);
            }
            let counts = u_null_counts(na, nb);
            let u = u_a.round() as usize;
            let total: u64 = counts.iter().sum();
            let at_most: u64 = counts[..=u].iter().sum();
            let at_least: u64 = counts[u..].iter().sum();
            two_sided_from_counts(at_most, at_least, total)
        }
        Method::Normal | Method::ChiSquare => {
            let (na, nb, nf) = (na as f64, nb as f64, n as f64);
            let mean = na * nb / 2.0;
            let variance = na * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
            normal_two_sided(u_a, mean, variance)
        }
    };
    Ok(TestResult {
        statistic: u_a,
        p_value,
        effect: None,
        magnitude: None,
        n_a: na,
        n_b: nb,
        df: None,
        method: if method == Method::Exact { Method::Exact } else { Method::Normal },
    })
}

fn signed_ranks(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<bool>, f64), StatsError> {
    check_finite(a)?;
    check_finite(b)?;
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Err(StatsError::AllZeroDifferences);
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, tie_term) = midranks(&magnitudes);
    let positive = diffs.iter().map(|d| *d > 0.0).collect();
    Ok((ranks, positive, tie_term))
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    let (ranks, _, _) = signed_ranks(a, b)?;
    let method = if ranks.len() <= EXACT_LIMIT { Method::Exact } else { Method::Normal };
    wilcoxon_signed_rank_with(a, b, method)
}

/// Wilcoxon signed-rank test; zero differences are dropped before ranking.
/// The exact route counts sign patterns over the (mid)ranks, so ties are handled exactly.
pub fn wilcoxon_signed_rank_with(a: &[f64], b: &[f64], method: Method) -> Result<TestResult, StatsError> {
    let (ranks, positive, tie_term) = signed_ranks(a, b)?;
    let n = ranks.len();
    let w_plus: f64 = ranks.iter().zip(&positive).filter(|(_, p)| **p).map(|(r, _)| r).sum();

    let p_value = match method {
        Method::Exact => {
            if n > EXACT_LIMIT {
                return Err(StatsError::TooLargeForExact(n));
            }
            // midranks are multiples of 0.5, so doubled ranks are integers
            let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
            let max_sum: usize = doubled.iter().sum();
            let mut counts = vec![0u64; max_sum + 1];
            counts[0] = 1;
            for &r in &doubled {
                for s in (r..=max_sum).rev() {
                    counts[s] += counts[s - r];
                }
            }
            let w = (w_plus * 2.0).round() as usize;
            let total = 1u64 << n;
            let at_most: u64 = counts[..=w].iter().sum();
            let at_least: u64 = counts[w..].iter().sum();
            two_sided_from_counts(at_most, at_least, total)
        }
        Method::Normal | Method::ChiSquare => {
            let nf = n as f64;
            let mean = nf * (nf + 1.0) / 4.0;
            let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
            normal_two_sided(w_plus, mean, variance)
        }
    };
    Ok(TestResult {
        statistic: w_plus,
        p_value,
        effect: None,
        magnitude: None,
        n_a: n,
        n_b: n,
        df: None,
        method: if method == Method::Exact { Method::Exact } else { Method::Normal },
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn midranks_share_tied_positions() {
        let (ranks, tie_term) = midranks(&[10.0, 20.0, 10.0, 30.0]);
        assert_eq!(ranks, [1.5, 3.0, 1.5, 4.0]);
        assert_eq!(tie_term, 6.0);
    }

    #[test]
    fn identical_samples_are_not_significant() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 4.5);
        assert_eq!(r.method, Method::Normal);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fully_separated_pairs_give_one_third() {
        // C(4,2) = 6 arrangements; U = 0 and U = 4 are the two extremes
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.method, Method::Exact);
        assert_eq!(r.statistic, 0.0);
        assert_abs_diff_eq!(r.p_value, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn u_statistics_sum_to_product() {
        let a = [1.5, 9.0, 3.0, 3.0, 7.0];
        let b = [2.0, 3.0, 8.0];
        let ua = mann_whitney_u(&a, &b).unwrap().statistic;
        let ub = mann_whitney_u(&b, &a).unwrap().statistic;
        assert_eq!(ua + ub, 15.0);
    }

    #[test]
    fn null_counts_match_known_table() {
        // sizes (2, 2): U in 0..=4 with counts 1,1,2,1,1
        assert_eq!(u_null_counts(2, 2), [1, 1, 2, 1, 1]);
        assert_eq!(u_null_counts(3, 0), [1]);
        assert_eq!(u_null_counts(5, 7).iter().sum::<u64>(), 792);
    }

    #[test]
    fn exact_refuses_ties_and_large_samples() {
        assert_eq!(mann_whitney_u_with(&[1.0, 1.0], &[2.0], Method::Exact).unwrap_err(), StatsError::TiesInExact);
        let big: Vec<f64> = (0..13).map(f64::from).collect();
        assert_eq!(
            mann_whitney_u_with(&big[..7], &big[7..], Method::Exact).unwrap_err(),
            StatsError::TooLargeForExact(13)
        );
    }

    #[test]
    fn empty_sample_is_an_error() {
        assert_eq!(mann_whitney_u(&[], &[1.0]).unwrap_err(), StatsError::EmptySample);
        assert_eq!(wilcoxon_signed_rank(&[], &[]).unwrap_err(), StatsError::EmptySample);
    }

    #[test]
    fn wilcoxon_degenerate_and_small_cases() {
        assert_eq!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(), StatsError::AllZeroDifferences);
        assert_eq!(wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]).unwrap_err(), StatsError::LengthMismatch(1, 2));
        // differences [1, 2, -3]: W+ = 3, P(W+ <= 3) = 4/8, P(W+ >= 3) = 5/8
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 0.0], &[0.0, 0.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 3.0);
        assert_eq!(r.p_value, 1.0);
        // all positive, n = 5: 1/32 on each tail
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.0; 5]).unwrap();
        assert_abs_diff_eq!(r.p_value, 2.0 / 32.0, epsilon = 1e-15);
    }

    #[test]
    fn wilcoxon_normal_route_for_large_n() {
        let a: Vec<f64> = (1..=20).map(f64::from).collect();
        let b = vec![0.0; 20];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, Method::Normal);
        assert!(r.p_value < 1e-3);
    }
}
