use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{Method, StatsError, TestResult};

/// Pearson chi-square test of independence on an r x c table of counts,
/// without continuity correction.
pub fn chi_square_independence(table: &[Vec<u64>]) -> Result<TestResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(StatsError::DegenerateTable(format!("{rows}x{cols} table, need at least 2x2")));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::DegenerateTable("ragged rows".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0.0) {
        return Err(StatsError::DegenerateTable(format!("row {i} has a zero margin")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0.0) {
        return Err(StatsError::DegenerateTable(format!("column {j} has a zero margin")));
    }
    let total: f64 = row_sums.iter().sum();

    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            let diff = observed as f64 - expected;
            statistic += diff * diff / expected;
        }
    }
    let df = (rows - 1) * (cols - 1);
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    let p_value = if statistic <= 0.0 { 1.0 } else { dist.sf(statistic).clamp(0.0, 1.0) };
    Ok(TestResult {
        statistic,
        p_value,
        effect: None,
        magnitude: None,
        n_a: rows,
        n_b: cols,
        df: Some(df),
        method: Method::ChiSquare,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;

    #[test]
    fn identical_rows_are_independent() {
        let r = chi_square_independence(&[vec![3, 6, 9], vec![3, 6, 9]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, Some(2));
    }

    #[test]
    fn two_by_two_hand_value() {
        // every expected count is 15; four cells contribute 25/15 each
        let r = chi_square_independence(&[vec![10, 20], vec![20, 10]]).unwrap();
        assert_abs_diff_eq!(r.statistic, 20.0 / 3.0, epsilon = 1e-12);
        assert_eq!(r.df, Some(1));
        assert_abs_diff_eq!(r.p_value, 0.0098, epsilon = 1e-3);
    }

    #[test]
    fn zero_margins_are_degenerate() {
        assert!(matches!(chi_square_independence(&[vec![0, 0], vec![1, 2]]), Err(StatsError::DegenerateTable(_))));
        assert!(matches!(chi_square_independence(&[vec![0, 4], vec![0, 2]]), Err(StatsError::DegenerateTable(_))));
        assert!(matches!(chi_square_independence(&[vec![1, 2]]), Err(StatsError::DegenerateTable(_))));
    }
}
