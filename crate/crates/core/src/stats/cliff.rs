use serde::{Deserialize, Serialize};

use super::{check_finite, mann_whitney_u, StatsError, TestResult};

/// Effect-size bands on |delta|, left-closed: [0, 0.147), [0.147, 0.33), [0.33, 0.474), [0.474, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Magnitude {
    Negligible,
    Small,
    Medium,
    Large,
}

impl Magnitude {
    pub fn from_delta(delta: f64) -> Self {
        let d = delta.abs();
        if d < 0.147 {
            Magnitude::Negligible
        } else if d < 0.33 {
            Magnitude::Small
        } else if d < 0.474 {
            Magnitude::Medium
        } else {
            Magnitude::Large
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Magnitude::Negligible => "Negligible",
            Magnitude::Small => "Small",
            Magnitude::Medium => "Medium",
            Magnitude::Large => "Large",
        }
    }
}

/// Cliff's delta of `a` over `b`: `(#{x > y} - #{x < y}) / (n_a * n_b)`.
///
/// Dominance counts come from binary searches over the sorted second sample.
/// The attached p-value is the two-sided Mann-Whitney p for the same samples,
/// since delta is an affine function of U.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    check_finite(a)?;
    check_finite(b)?;
    let mut sorted = b.to_vec();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let (mut greater, mut less) = (0u64, 0u64);
    for &x in a {
        let below = sorted.partition_point(|&y| y < x);
        let at_or_below = sorted.partition_point(|&y| y <= x);
        greater += below as u64;
        less += (sorted.len() - at_or_below) as u64;
    }
    let pairs = (a.len() * b.len()) as f64;
    let delta = (greater as f64 - less as f64) / pairs;
    let mwu = mann_whitney_u(a, b)?;
    Ok(TestResult {
        statistic: delta,
        p_value: mwu.p_value,
        effect: Some(delta),
        magnitude: Some(Magnitude::from_delta(delta)),
        n_a: a.len(),
        n_b: b.len(),
        df: None,
        method: mwu.method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_dominance() {
        let r = cliffs_delta(&[5.0, 6.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert_eq!(r.magnitude, Some(Magnitude::Large));
    }

    #[test]
    fn interleaved_pairs() {
        // pairs: (1,2) <, (1,4) <, (3,2) >, (3,4) <  => (1 - 3) / 4
        let r = cliffs_delta(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_eq!(r.statistic, -0.5);
        assert_eq!(r.magnitude, Some(Magnitude::Large));
    }

    #[test]
    fn ties_count_as_neither() {
        let r = cliffs_delta(&[2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.magnitude, Some(Magnitude::Negligible));
    }

    #[test]
    fn band_edges_are_left_closed() {
        let cases = [
            (0.10, Magnitude::Negligible),
            (0.147, Magnitude::Small),
            (0.20, Magnitude::Small),
            (0.33, Magnitude::Medium),
            (0.40, Magnitude::Medium),
            (0.474, Magnitude::Large),
            (0.60, Magnitude::Large),
            (-0.3348, Magnitude::Medium),
            (-0.1126, Magnitude::Negligible),
        ];
        for (delta, expected) in cases {
            assert_eq!(Magnitude::from_delta(delta), expected, "delta {delta}");
        }
    }
}
