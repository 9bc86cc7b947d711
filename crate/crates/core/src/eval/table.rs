use super::MetricsReport;

/// Quotes a CSV field when it contains a comma, quote or line break.
pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One row per report: strategy, split, n, the four metrics (4 decimals) and the confusion counts.
pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("strategy,split_id,n,accuracy,precision,recall,f1,tp,fp,fn,tn\n");
    for r in reports {
        let strategy = r.strategy.map(|s| s.as_str().to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{}\n",
            csv_escape(&strategy),
            csv_escape(r.split_id.as_deref().unwrap_or("")),
            r.n,
            r.accuracy,
            r.precision,
            r.recall,
            r.f1,
            r.confusion.tp,
            r.confusion.fp,
            r.confusion.fn_,
            r.confusion.tn
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ConfusionMatrix;
    use crate::triage::PromptStrategy;

    #[test]
    fn csv_rows() {
        let r = ConfusionMatrix { tp: 8, fp: 2, fn_: 1, tn: 9 }.report().tagged(Some(PromptStrategy::Rag), Some("all"));
        let csv = metrics_csv(&[r]);
        assert_eq!(csv.lines().nth(1).unwrap(), "rag,all,20,0.8500,0.8000,0.8889,0.8421,8,2,1,9");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
    }
}
