//! Classification and retrieval metrics.

use rotinv::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalMetrics {
    pub map: f64,
    /// Precision among the top `n` results, averaged over queries.
    pub precision_at_n: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    /// Accuracy per true class; classes absent from `labels` report 0.
    pub per_class_accuracy: Vec<f64>,
    pub retrieval: Option<RetrievalMetrics>,
}

impl MetricReport {
    pub fn map(&self) -> f64 {
        self.retrieval.as_ref().map_or(0.0, |r| r.map)
    }
}

pub fn compute_metrics(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<MetricReport> {
    if predictions.len() != labels.len() {
        return Err(Error::shape("predictions and labels differ in length"));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!("label {bad} outside {num_classes} classes")));
    }
    let mut hits = vec![0usize; num_classes];
    let mut totals = vec![0usize; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        totals[l] += 1;
        if p == l {
            hits[l] += 1;
        }
    }
    let correct: usize = hits.iter().sum();
    let per_class_accuracy = hits
        .iter()
        .zip(&totals)
        .map(|(&h, &t)| if t == 0 { 0.0 } else { h as f64 / t as f64 })
        .collect();
    Ok(MetricReport {
        accuracy: correct as f64 / labels.len() as f64,
        per_class_accuracy,
        retrieval: None,
    })
}

/// Mean of the precision at each relevant position; 0 if nothing is relevant.
pub fn average_precision(ranking: &[usize], relevant: &[bool]) -> Result<f64> {
    let total = relevant.iter().filter(|&&r| r).count();
    if total == 0 {
        return Ok(0.0);
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (rank, &item) in ranking.iter().enumerate() {
        let hit = *relevant
            .get(item)
            .ok_or_else(|| Error::shape(format!("ranked item {item} has no relevance entry")))?;
        if hit {
            found += 1;
            sum += found as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / total as f64)
}

/// `rankings[q]` orders gallery items for query `q`; `relevance[q][g]` marks
/// gallery item `g` as relevant to it.
pub fn retrieval_metrics(rankings: &[Vec<usize>], relevance: &[Vec<bool>], n: usize) -> Result<RetrievalMetrics> {
    if rankings.len() != relevance.len() {
        return Err(Error::shape("rankings and relevance differ in length"));
    }
    if rankings.is_empty() || n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut ap = 0.0;
    let mut precision = 0.0;
    for (ranking, relevant) in rankings.iter().zip(relevance) {
        ap += average_precision(ranking, relevant)?;
        let hits = ranking.iter().take(n).filter(|&&i| relevant[i]).count();
        precision += hits as f64 / n as f64;
    }
    let q = rankings.len() as f64;
    Ok(RetrievalMetrics {
        map: ap / q,
        precision_at_n: precision / q,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn perfect_predictions_and_ranking() {
        let labels = [0, 1, 2, 1];
        let report = compute_metrics(&labels, &labels, 3).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.per_class_accuracy, vec![1.0; 3]);
        let r = retrieval_metrics(&[vec![1, 0, 2]], &[vec![true, true, false]], 2).unwrap();
        assert_eq!(r.map, 1.0);
        assert_eq!(r.precision_at_n, 1.0);
    }

    #[test]
    fn relevant_item_second_of_four() {
        let ap = average_precision(&[3, 1, 0, 2], &[false, true, false, false]).unwrap();
        assert_eq!(ap, 0.5);
    }

    #[test]
    fn hand_enumerated_ap() {
        // Hits at ranks 1 and 3: (1/1 + 2/3) / 2.
        let ap = average_precision(&[0, 1, 2], &[true, false, true]).unwrap();
        assert!((ap - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn random_predictions_near_chance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<usize> = (0..20_000).map(|_| rng.random_range(0..4)).collect();
        let preds: Vec<usize> = (0..20_000).map(|_| rng.random_range(0..4)).collect();
        let acc = compute_metrics(&preds, &labels, 4).unwrap().accuracy;
        assert!((acc - 0.25).abs() < 0.05, "{acc}");
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(compute_metrics(&[0, 1], &[0], 2).is_err());
        assert!(retrieval_metrics(&[vec![0]], &[], 1).is_err());
        assert!(compute_metrics(&[0], &[5], 2).is_err());
    }

    proptest! {
        #[test]
        fn metric_ranges(
            pairs in prop::collection::vec((0usize..5, 0usize..5), 1..60),
            perm_seed in any::<u64>(),
            n in 1usize..10,
        ) {
            let (preds, labels): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
            let report = compute_metrics(&preds, &labels, 5).unwrap();
            prop_assert!((0.0..=1.0).contains(&report.accuracy));
            prop_assert!(report.per_class_accuracy.iter().all(|a| (0.0..=1.0).contains(a)));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
            let gallery = labels.len();
            let mut rankings = Vec::new();
            let mut relevance = Vec::new();
            for &q in &preds {
                let mut order: Vec<usize> = (0..gallery).collect();
                for i in (1..gallery).rev() {
                    order.swap(i, rng.random_range(0..=i));
                }
                rankings.push(order);
                relevance.push(labels.iter().map(|&l| l == q).collect());
            }
            let r = retrieval_metrics(&rankings, &relevance, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.map));
            prop_assert!((0.0..=1.0).contains(&r.precision_at_n));
        }
    }
}
