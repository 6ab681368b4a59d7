//! Relative-frequency lexicalized reordering baseline: the orientation of a
//! word pair depends only on that pair.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::orientation::{ReorderingEvent, Scheme};

#[derive(Debug, Clone, PartialEq)]
pub struct CountModel {
    pub scheme: Scheme,
    pub alpha: f64,
    pairs: HashMap<(String, String), Vec<u64>>,
    global: Vec<u64>,
}

/// Counts resolved labels per (source, target) pair with add-α smoothing.
pub fn train_count_baseline(
    corpus: &[Vec<ReorderingEvent>],
    scheme: Scheme,
    alpha: f64,
) -> Result<CountModel> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!("smoothing must be non-negative, got {alpha}")));
    }
    let k = scheme.label_count();
    let mut pairs: HashMap<(String, String), Vec<u64>> = HashMap::new();
    let mut global = vec![0u64; k];
    for ev in corpus.iter().flatten() {
        let idx = label_index(scheme, ev)?;
        pairs
            .entry((ev.src.clone(), ev.tgt.clone()))
            .or_insert_with(|| vec![0; k])[idx] += 1;
        global[idx] += 1;
    }
    Ok(CountModel {
        scheme,
        alpha,
        pairs,
        global,
    })
}

fn label_index(scheme: Scheme, ev: &ReorderingEvent) -> Result<usize> {
    ev.resolved
        .and_then(|l| scheme.index_of(l))
        .ok_or_else(|| Error::Invariant(format!("event {} / {} lacks a {scheme} label", ev.src, ev.tgt)))
}

impl CountModel {
    /// p(label | src, tgt) = (count + α) / (total + α·K). Pairs never seen in
    /// training fall back to the global label counts with the same
    /// smoothing.
    pub fn distribution(&self, src: &str, tgt: &str) -> Vec<f64> {
        let counts = self
            .pairs
            .get(&(src.to_owned(), tgt.to_owned()))
            .unwrap_or(&self.global);
        let k = counts.len() as f64;
        let total: u64 = counts.iter().sum();
        let denom = total as f64 + self.alpha * k;
        if denom == 0.0 {
            return vec![1.0 / k; counts.len()];
        }
        counts.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
    }

    pub fn seen(&self, src: &str, tgt: &str) -> bool {
        self.pairs.contains_key(&(src.to_owned(), tgt.to_owned()))
    }

    /// Σ ln p over the sentence; a zero probability is an error rather than
    /// −∞.
    pub fn score(&self, events: &[ReorderingEvent]) -> Result<f64> {
        let mut total = 0.0;
        for ev in events {
            let idx = label_index(self.scheme, ev)?;
            let p = self.distribution(&ev.src, &ev.tgt)[idx];
            if p <= 0.0 {
                return Err(Error::ZeroProbability {
                    src: ev.src.clone(),
                    tgt: ev.tgt.clone(),
                    label: self.scheme.labels()[idx].to_string(),
                });
            }
            total += p.ln();
        }
        Ok(total)
    }

    pub fn evaluate(&self, corpus: &[Vec<ReorderingEvent>]) -> Result<super::Evaluation> {
        let mut eval = super::Evaluation::default();
        for sentence in corpus {
            eval.log_prob += self.score(sentence)?;
            for ev in sentence {
                let p = self.distribution(&ev.src, &ev.tgt);
                eval.events += 1;
                if super::argmax(&p) == label_index(self.scheme, ev)? {
                    eval.correct += 1;
                }
            }
        }
        Ok(eval)
    }
}
