//! Moses n-best lists: parsing, adding the reordering feature, and
//! reranking with fixed feature weights.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use crate::corpus::{check_links, parse_alignment_line, render_alignment, Alignment, SentencePair, NULL};
use crate::error::{Error, Result};
use crate::model::ReorderingModel;
use crate::orientation::{resolve_follow, resolved_events, RawLabel, ReorderingEvent, Scheme};

/// Name of the feature added by [`rescore_stream`].
pub const FEATURE_NAME: &str = "LSTMRM";

#[derive(Debug, Clone, PartialEq)]
pub struct NBestEntry {
    pub sentence_id: usize,
    pub hypothesis: Vec<String>,
    pub features: Vec<(String, Vec<f64>)>,
    pub total: f64,
    /// Source-hypothesis word alignment; `None` when the line has no fifth
    /// field.
    pub alignment: Option<Alignment>,
}

/// Parses `id ||| tokens ||| name= v ... ||| total [||| alignment]`.
pub fn parse_nbest(line: &str, lineno: usize) -> Result<NBestEntry> {
    let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
    if fields.len() != 4 && fields.len() != 5 {
        return Err(Error::parse(
            lineno,
            format!("expected 4 or 5 '|||' fields, found {}", fields.len()),
        ));
    }
    let sentence_id = fields[0]
        .parse()
        .map_err(|_| Error::parse(lineno, format!("bad sentence id {:?}", fields[0])))?;
    let hypothesis = fields[1].split_ascii_whitespace().map(str::to_owned).collect();

    let mut features: Vec<(String, Vec<f64>)> = Vec::new();
    for tok in fields[2].split_ascii_whitespace() {
        if let Some(name) = tok.strip_suffix('=') {
            if features.iter().any(|(n, _)| n == name) {
                return Err(Error::parse(lineno, format!("feature {name:?} repeated")));
            }
            features.push((name.to_owned(), Vec::new()));
        } else {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric feature value {tok:?}")))?;
            match features.last_mut() {
                Some((_, vals)) => vals.push(v),
                None => return Err(Error::parse(lineno, "feature value before any feature name")),
            }
        }
    }
    let total = fields[3]
        .parse()
        .map_err(|_| Error::parse(lineno, format!("non-numeric total {:?}", fields[3])))?;
    let alignment = match fields.get(4) {
        Some(a) => Some(parse_alignment_line(a, lineno)?),
        None => None,
    };
    Ok(NBestEntry {
        sentence_id,
        hypothesis,
        features,
        total,
        alignment,
    })
}

impl fmt::Display for NBestEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ||| {} |||", self.sentence_id, self.hypothesis.join(" "))?;
        for (name, values) in &self.features {
            write!(f, " {name}=")?;
            for v in values {
                write!(f, " {v}")?;
            }
        }
        write!(f, " ||| {}", self.total)?;
        if let Some(a) = &self.alignment {
            write!(f, " ||| {}", render_alignment(a))?;
        }
        Ok(())
    }
}

impl NBestEntry {
    /// Appends `name= value`. The total is left as is.
    pub fn attach_feature(&mut self, name: &str, value: f64) -> Result<()> {
        if self.features.iter().any(|(n, _)| n == name) {
            return Err(Error::DuplicateFeature(name.to_owned()));
        }
        self.features.push((name.to_owned(), vec![value]));
        Ok(())
    }

    pub fn feature(&self, name: &str) -> Option<&[f64]> {
        self.features
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Stream used when a hypothesis has no alignment: every hypothesis word
/// paired with `<null>`, all resolved to the scheme default.
pub fn unaligned_events(hypothesis: &[String], scheme: Scheme) -> Vec<ReorderingEvent> {
    let events = hypothesis
        .iter()
        .map(|w| ReorderingEvent {
            src: NULL.to_owned(),
            tgt: w.clone(),
            raw: RawLabel::Follow,
            resolved: None,
            anchor: None,
        })
        .collect();
    resolve_follow(events, scheme)
}

/// Resolved events for one hypothesis against its source sentence. An empty
/// alignment falls back to [`unaligned_events`].
pub fn hypothesis_events(
    source: &[String],
    hypothesis: &[String],
    alignment: &Alignment,
    scheme: Scheme,
    lineno: usize,
) -> Result<Vec<ReorderingEvent>> {
    if alignment.is_empty() {
        return Ok(unaligned_events(hypothesis, scheme));
    }
    check_links(alignment, source.len(), hypothesis.len(), lineno)?;
    let pair = SentencePair {
        source: source.to_vec(),
        target: hypothesis.to_vec(),
        links: alignment.clone(),
    };
    resolved_events(&pair, scheme)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RescoreSummary {
    pub entries: usize,
    pub unaligned: usize,
}

/// Adds the `LSTMRM` feature to every n-best line, preserving order.
/// Alignments come from the fifth field when present, otherwise from the
/// matching line of `sidecar`.
pub fn rescore_stream<R: BufRead, S: BufRead, W: Write>(
    model: &ReorderingModel,
    sources: &[Vec<String>],
    nbest: R,
    sidecar: Option<S>,
    mut out: W,
) -> Result<RescoreSummary> {
    let mut sidecar = sidecar.map(|s| s.lines());
    let mut summary = RescoreSummary::default();
    for (n, line) in nbest.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        let side = match sidecar.as_mut() {
            Some(lines) => Some(
                lines
                    .next()
                    .ok_or_else(|| Error::LineCountMismatch(format!("alignment sidecar ended before n-best line {lineno}")))?
                    .map_err(|e| Error::parse(lineno, e.to_string()))?,
            ),
            None => None,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut entry = parse_nbest(&line, lineno)?;
        let alignment = match (&entry.alignment, side) {
            (Some(a), _) => a.clone(),
            (None, Some(text)) => parse_alignment_line(&text, lineno)?,
            (None, None) => Alignment::new(),
        };
        let source = sources.get(entry.sentence_id).ok_or_else(|| {
            Error::parse(
                lineno,
                format!("sentence id {} beyond {} source sentences", entry.sentence_id, sources.len()),
            )
        })?;
        if alignment.is_empty() {
            log::warn!("n-best line {lineno}: no alignment, scoring hypothesis against <null>");
            summary.unaligned += 1;
        }
        let events = hypothesis_events(source, &entry.hypothesis, &alignment, model.scheme(), lineno)?;
        let score = model.score_events(&events)?;
        entry.attach_feature(FEATURE_NAME, score)?;
        writeln!(out, "{entry}").map_err(|e| Error::parse(lineno, e.to_string()))?;
        summary.entries += 1;
    }
    Ok(summary)
}

/// Log-linear weights; names not listed use `default`.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    pub weights: HashMap<String, f64>,
    pub default: f64,
}

impl Weights {
    pub fn new(default: f64) -> Self {
        Weights {
            weights: HashMap::new(),
            default,
        }
    }

    pub fn with(mut self, name: &str, w: f64) -> Self {
        self.weights.insert(name.to_owned(), w);
        self
    }

    pub fn get(&self, name: &str) -> f64 {
        self.weights.get(name).copied().unwrap_or(self.default)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Weights {
            weights: self.weights.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
            default: self.default * c,
        }
    }

    /// `name TAB weight` per line; a trailing `=` on the name is ignored.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn read_from<R: BufRead>(input: R, default: f64) -> Result<Self> {
        let mut w = Weights::new(default);
        for (n, line) in input.lines().enumerate() {
            let lineno = n + 1;
            let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_ascii_whitespace();
            let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(lineno, "expected `name<TAB>weight`"));
            };
            let value: f64 = value
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad weight {value:?}")))?;
            w.weights.insert(name.trim_end_matches('=').to_owned(), value);
        }
        Ok(w)
    }

    pub fn score(&self, entry: &NBestEntry) -> f64 {
        let mut total = 0.0;
        for (name, values) in &entry.features {
            let mut sum = 0.0;
            for v in values {
                sum += v;
            }
            total += self.get(name) * sum;
        }
        total
    }
}

/// Recomputes totals with `weights` and sorts descending. Equal totals keep
/// their input order.
pub fn rerank(mut entries: Vec<NBestEntry>, weights: &Weights) -> Vec<NBestEntry> {
    for e in &mut entries {
        e.total = weights.score(e);
    }
    entries.sort_by(|a, b| b.total.total_cmp(&a.total));
    entries
}

/// Reranks every sentence's list. Sentences are emitted in order of first
/// appearance.
pub fn rerank_stream<R: BufRead, W: Write>(nbest: R, weights: &Weights, mut out: W) -> Result<usize> {
    let mut groups: Vec<Vec<NBestEntry>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for (n, line) in nbest.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = parse_nbest(&line, lineno)?;
        let k = *slot.entry(entry.sentence_id).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[k].push(entry);
    }
    let mut written = 0;
    for group in groups {
        for entry in rerank(group, weights) {
            writeln!(out, "{entry}").map_err(|e| Error::parse(written + 1, e.to_string()))?;
            written += 1;
        }
    }
    Ok(written)
}
