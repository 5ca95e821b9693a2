use crate::error::{Error, Result};

/// Area under the ROC curve via the Mann–Whitney statistic.
///
/// Positive labels are `+1`. Tied scores contribute one half per tied
/// positive/negative pair.
pub fn roc_auc(scores: &[f64], labels: &[i8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.iter().filter(|&&l| l == -1).count();
    if positives + negatives != labels.len() {
        return Err(Error::invalid("labels must be -1 or +1"));
    }
    if positives == 0 || negatives == 0 {
        return Err(Error::invalid("ROC-AUC needs both classes"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Walk tie groups in ascending score order. Each positive beats every
    // negative below its group and half of the negatives inside it; keeping
    // the count in half-units keeps it an exact integer.
    let mut half_wins: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let group = &order[start..end];
        let pos = group.iter().filter(|&&i| labels[i] == 1).count() as u64;
        let neg = group.len() as u64 - pos;
        half_wins += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        start = end;
    }
    Ok(half_wins as f64 / (2 * positives * negatives) as f64)
}
