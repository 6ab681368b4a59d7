//! Word-level orientation labels and extraction of reordering events from
//! aligned sentence pairs, in target order.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::corpus::{SentencePair, NULL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Lr,
    Msd,
    Mslr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    L,
    R,
    M,
    S,
    D,
    DL,
    DR,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Lr, Scheme::Msd, Scheme::Mslr];

    /// Output labels in network order.
    pub fn labels(self) -> &'static [Label] {
        match self {
            Scheme::Lr => &[Label::L, Label::R],
            Scheme::Msd => &[Label::M, Label::S, Label::D],
            Scheme::Mslr => &[Label::M, Label::S, Label::DL, Label::DR],
        }
    }

    pub fn label_count(self) -> usize {
        self.labels().len()
    }

    pub fn index_of(self, label: Label) -> Option<usize> {
        self.labels().iter().position(|&l| l == label)
    }

    /// Label assigned to a leading run of follow events.
    pub fn default_label(self) -> Label {
        match self {
            Scheme::Lr => Label::R,
            Scheme::Msd | Scheme::Mslr => Label::M,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Lr => "lr",
            Scheme::Msd => "msd",
            Scheme::Mslr => "mslr",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(Scheme::Lr),
            "msd" => Ok(Scheme::Msd),
            "mslr" => Ok(Scheme::Mslr),
            _ => Err(Error::Config(format!("unknown scheme {s:?} (lr|msd|mslr)"))),
        }
    }
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::L => "L",
            Label::R => "R",
            Label::M => "M",
            Label::S => "S",
            Label::D => "D",
            Label::DL => "DL",
            Label::DR => "DR",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Ok(match s {
            "L" => Label::L,
            "R" => Label::R,
            "M" => Label::M,
            "S" => Label::S,
            "D" => Label::D,
            "DL" => Label::DL,
            "DR" => Label::DR,
            _ => return Err(()),
        })
    }
}

/// A scheme label, or the follow marker `F` for pairs that inherit the
/// orientation of the preceding pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RawLabel {
    Label(Label),
    Follow,
}

impl fmt::Display for RawLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawLabel::Label(l) => l.fmt(f),
            RawLabel::Follow => f.write_str("F"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReorderingEvent {
    pub src: String,
    pub tgt: String,
    pub raw: RawLabel,
    /// Filled in by [`resolve_follow`].
    pub resolved: Option<Label>,
    /// Source position carried as the alignment anchor for this event.
    pub anchor: Option<usize>,
}

impl ReorderingEvent {
    pub fn new(src: impl Into<String>, tgt: impl Into<String>, label: Label) -> Self {
        ReorderingEvent {
            src: src.into(),
            tgt: tgt.into(),
            raw: RawLabel::Label(label),
            resolved: Some(label),
            anchor: None,
        }
    }
}

/// Orientation of a move from source position `a_prev` to `a_cur`.
pub fn classify_orientation(scheme: Scheme, a_prev: isize, a_cur: isize) -> Result<Label> {
    let d = a_cur - a_prev;
    if d == 0 {
        return Err(Error::Invariant(format!(
            "orientation undefined for repeated anchor {a_cur}"
        )));
    }
    Ok(match scheme {
        Scheme::Msd => match d {
            1 => Label::M,
            -1 => Label::S,
            _ => Label::D,
        },
        Scheme::Mslr => match d {
            1 => Label::M,
            -1 => Label::S,
            d if d > 1 => Label::DR,
            _ => Label::DL,
        },
        Scheme::Lr => {
            if d > 0 {
                Label::R
            } else {
                Label::L
            }
        }
    })
}

/// Converts an aligned pair into word-pair events with raw labels, walking
/// the target sentence left to right.
///
/// A target word's anchor is its lowest aligned source position. The
/// anchor link is classified against the previous anchor when this target
/// word is the first one aligned to that source word, and labelled `F`
/// otherwise; remaining links of the same target word are `F`. Unaligned
/// target words pair with `<null>` and are `F`. Unaligned source words pair
/// with `<null>`, are `F`, and are placed right after the last event of the
/// nearest aligned source position to their left (or at the front when
/// there is none).
pub fn extract_events(pair: &SentencePair, scheme: Scheme) -> Result<Vec<ReorderingEvent>> {
    let n = pair.source.len();
    let m = pair.target.len();
    let mut by_tgt: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut first_tgt: Vec<Option<usize>> = vec![None; n];
    // links iterate ordered by (src, tgt)
    for link in &pair.links {
        by_tgt[link.tgt].push(link.src);
        first_tgt[link.src].get_or_insert(link.tgt);
    }

    // (source position, event)
    let mut events: Vec<(Option<usize>, ReorderingEvent)> = Vec::with_capacity(n + m);
    let mut prev: isize = -1;
    for (i, srcs) in by_tgt.iter().enumerate() {
        let tgt = &pair.target[i];
        let Some((&anchor, rest)) = srcs.split_first() else {
            events.push((
                None,
                ReorderingEvent {
                    src: NULL.to_owned(),
                    tgt: tgt.clone(),
                    raw: RawLabel::Follow,
                    resolved: None,
                    anchor: usize::try_from(prev).ok(),
                },
            ));
            continue;
        };
        let raw = if first_tgt[anchor] == Some(i) {
            RawLabel::Label(classify_orientation(scheme, prev, anchor as isize)?)
        } else {
            RawLabel::Follow
        };
        for (j, raw) in std::iter::once((anchor, raw)).chain(rest.iter().map(|&j| (j, RawLabel::Follow))) {
            events.push((
                Some(j),
                ReorderingEvent {
                    src: pair.source[j].clone(),
                    tgt: tgt.clone(),
                    raw,
                    resolved: None,
                    anchor: Some(anchor),
                },
            ));
        }
        prev = anchor as isize;
    }

    let mut last_event_of: Vec<Option<usize>> = vec![None; n];
    for (k, (pos, _)) in events.iter().enumerate() {
        if let Some(p) = pos {
            last_event_of[*p] = Some(k);
        }
    }
    let mut leading = Vec::new();
    let mut attached: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut nearest_aligned: Option<usize> = None;
    for j in 0..n {
        if first_tgt[j].is_some() {
            nearest_aligned = Some(j);
            continue;
        }
        match nearest_aligned.and_then(|p| last_event_of[p]) {
            Some(k) => attached.entry(k).or_default().push(j),
            None => leading.push(j),
        }
    }

    let null_src = |j: usize, anchor: Option<usize>| ReorderingEvent {
        src: pair.source[j].clone(),
        tgt: NULL.to_owned(),
        raw: RawLabel::Follow,
        resolved: None,
        anchor,
    };
    let mut out = Vec::with_capacity(events.len() + leading.len() + attached.len());
    out.extend(leading.into_iter().map(|j| null_src(j, None)));
    for (k, (_, ev)) in events.into_iter().enumerate() {
        let anchor = ev.anchor;
        out.push(ev);
        if let Some(js) = attached.get(&k) {
            out.extend(js.iter().map(|&j| null_src(j, anchor)));
        }
    }
    Ok(out)
}

/// Replaces each `F` with the nearest preceding classified label. A leading
/// run of `F` takes the scheme's monotone default.
pub fn resolve_follow(mut events: Vec<ReorderingEvent>, scheme: Scheme) -> Vec<ReorderingEvent> {
    let mut current = scheme.default_label();
    for ev in &mut events {
        if let RawLabel::Label(l) = ev.raw {
            current = l;
        }
        ev.resolved = Some(current);
    }
    events
}

/// Extraction followed by follow resolution.
pub fn resolved_events(pair: &SentencePair, scheme: Scheme) -> Result<Vec<ReorderingEvent>> {
    extract_events(pair, scheme).map(|evs| resolve_follow(evs, scheme))
}

/// Writes sentences as TSV (`src tgt raw resolved`), each sentence followed
/// by a blank line. Unresolved labels are written as `-`.
pub fn write_events<W: Write>(mut out: W, sentences: &[Vec<ReorderingEvent>]) -> std::io::Result<()> {
    for sentence in sentences {
        write_sentence(&mut out, sentence)?;
    }
    Ok(())
}

pub fn write_sentence<W: Write>(mut out: W, sentence: &[ReorderingEvent]) -> std::io::Result<()> {
    for ev in sentence {
        let resolved = ev.resolved.map_or("-", Label::as_str);
        writeln!(out, "{}\t{}\t{}\t{}", ev.src, ev.tgt, ev.raw, resolved)?;
    }
    writeln!(out)
}

pub fn serialize_events(sentences: &[Vec<ReorderingEvent>]) -> String {
    let mut buf = Vec::new();
    write_events(&mut buf, sentences).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("tokens are UTF-8")
}

pub fn parse_events(text: &str, scheme: Scheme) -> Result<Vec<Vec<ReorderingEvent>>> {
    read_events(text.as_bytes(), scheme)
}

/// Reads event TSV. Blank lines end a sentence; runs of blank lines do not
/// produce empty sentences. Anchors are not stored in the format.
pub fn read_events<R: BufRead>(input: R, scheme: Scheme) -> Result<Vec<Vec<ReorderingEvent>>> {
    let mut sentences = Vec::new();
    let mut current = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push(parse_event_line(&line, scheme, lineno)?);
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    Ok(sentences)
}

fn parse_event_line(line: &str, scheme: Scheme, lineno: usize) -> Result<ReorderingEvent> {
    let fields: Vec<&str> = line.split('\t').collect();
    let [src, tgt, raw, resolved] = fields[..] else {
        return Err(Error::parse(
            lineno,
            format!("expected 4 tab-separated fields, found {}", fields.len()),
        ));
    };
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::parse(lineno, "empty token"));
    }
    if src == NULL && tgt == NULL {
        return Err(Error::parse(lineno, "both sides are <null>"));
    }
    let label = |s: &str| {
        s.parse::<Label>()
            .ok()
            .filter(|l| scheme.index_of(*l).is_some())
            .ok_or_else(|| Error::parse(lineno, format!("label {s:?} not in scheme {scheme}")))
    };
    let raw = match raw {
        "F" => RawLabel::Follow,
        s => RawLabel::Label(label(s)?),
    };
    let resolved = match resolved {
        "-" => None,
        s => Some(label(s)?),
    };
    if let (RawLabel::Label(r), Some(l)) = (raw, resolved) {
        if r != l {
            return Err(Error::parse(lineno, format!("resolved label {l} differs from {r}")));
        }
    }
    Ok(ReorderingEvent {
        src: src.to_owned(),
        tgt: tgt.to_owned(),
        raw,
        resolved,
        anchor: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AlignmentLink, Alignment};
    use proptest::prelude::*;

    fn pair(src: &[&str], tgt: &[&str], links: &[(usize, usize)]) -> SentencePair {
        let links: Alignment = links.iter().map(|&(s, t)| AlignmentLink::new(s, t)).collect();
        SentencePair::new(
            src.iter().map(|s| s.to_string()).collect(),
            tgt.iter().map(|s| s.to_string()).collect(),
            links,
            1,
        )
        .unwrap()
    }

    fn triples(evs: &[ReorderingEvent]) -> Vec<(String, String, String)> {
        evs.iter()
            .map(|e| (e.src.clone(), e.tgt.clone(), e.raw.to_string()))
            .collect()
    }

    fn t(s: &str, t: &str, l: &str) -> (String, String, String) {
        (s.into(), t.into(), l.into())
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_orientation(Scheme::Msd, 1, 2).unwrap(), Label::M);
        assert_eq!(classify_orientation(Scheme::Msd, 2, 1).unwrap(), Label::S);
        assert_eq!(classify_orientation(Scheme::Msd, 0, 4).unwrap(), Label::D);
        assert_eq!(classify_orientation(Scheme::Mslr, 0, 4).unwrap(), Label::DR);
        assert_eq!(classify_orientation(Scheme::Mslr, 4, 0).unwrap(), Label::DL);
        assert_eq!(classify_orientation(Scheme::Lr, 3, 0).unwrap(), Label::L);
        assert!(classify_orientation(Scheme::Lr, 3, 3).is_err());
    }

    #[test]
    fn extract_examples() {
        let evs = extract_events(&pair(&["s0", "s1", "s2"], &["t0", "t1"], &[(0, 0), (2, 1)]), Scheme::Lr).unwrap();
        assert_eq!(triples(&evs), [t("s0", "t0", "R"), t("s1", NULL, "F"), t("s2", "t1", "R")]);

        let evs = extract_events(&pair(&["s0", "s1"], &["t0", "t1"], &[(1, 0), (0, 1)]), Scheme::Lr).unwrap();
        assert_eq!(triples(&evs), [t("s1", "t0", "R"), t("s0", "t1", "L")]);

        let evs = extract_events(&pair(&["s0"], &["t0", "t1"], &[(0, 0), (0, 1)]), Scheme::Lr).unwrap();
        assert_eq!(triples(&evs), [t("s0", "t0", "R"), t("s0", "t1", "F")]);

        let evs = extract_events(&pair(&["s0", "s1"], &["t0"], &[(0, 0), (1, 0)]), Scheme::Lr).unwrap();
        assert_eq!(triples(&evs), [t("s0", "t0", "R"), t("s1", "t0", "F")]);
    }

    #[test]
    fn unaligned_words_get_null_partners() {
        // s0 unaligned with nothing aligned before it goes first; t1 unaligned.
        let evs = extract_events(&pair(&["s0", "s1", "s2", "s3"], &["t0", "t1", "t2"], &[(1, 0), (2, 2)]), Scheme::Msd)
            .unwrap();
        assert_eq!(
            triples(&evs),
            [
                t("s0", NULL, "F"),
                t("s1", "t0", "D"),
                t(NULL, "t1", "F"),
                t("s2", "t2", "M"),
                t("s3", NULL, "F"),
            ]
        );
        assert_eq!(evs[2].anchor, Some(1));
        assert_eq!(evs[4].anchor, Some(2));
    }

    #[test]
    fn resolve_examples() {
        let mk = |raws: &[RawLabel]| -> Vec<ReorderingEvent> {
            raws.iter()
                .map(|&raw| ReorderingEvent { src: "a".into(), tgt: "b".into(), raw, resolved: None, anchor: None })
                .collect()
        };
        let res = |evs: Vec<ReorderingEvent>, s| -> Vec<Label> {
            resolve_follow(evs, s).iter().map(|e| e.resolved.unwrap()).collect()
        };
        use RawLabel::{Follow as F, Label as Lb};
        assert_eq!(res(mk(&[Lb(Label::R), F, Lb(Label::R)]), Scheme::Lr), [Label::R; 3]);
        assert_eq!(res(mk(&[F, Lb(Label::L)]), Scheme::Lr), [Label::R, Label::L]);
        assert_eq!(
            res(mk(&[Lb(Label::M), F, F, Lb(Label::S)]), Scheme::Msd),
            [Label::M, Label::M, Label::M, Label::S]
        );
        assert_eq!(res(mk(&[F]), Scheme::Mslr), [Label::M]);
    }

    #[test]
    fn tsv_format() {
        let evs = vec![ReorderingEvent::new("a", "b", Label::R)];
        assert_eq!(serialize_events(&[evs]), "a\tb\tR\tR\n\n");
        assert!(parse_events("a\tb\tM\tM\n", Scheme::Lr).is_err());
        assert!(parse_events("a\tb\tR\n", Scheme::Lr).is_err());
        assert!(parse_events("<null>\t<null>\tF\tR\n", Scheme::Lr).is_err());
        match parse_events("a\tb\tR\tR\n\nc\td\tX\tR\n", Scheme::Lr) {
            Err(Error::Parse { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        let parsed = parse_events("a\tb\tR\tR\n\n\n\nc\td\tF\t-\n", Scheme::Lr).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[1][0].resolved, None);
    }

    fn arb_event(scheme: Scheme) -> impl Strategy<Value = ReorderingEvent> {
        let labels = scheme.labels().to_vec();
        (
            "[a-z]{1,3}",
            "[a-z]{1,3}",
            0..=labels.len(),
            any::<bool>(),
            any::<bool>(),
            0..labels.len(),
        )
            .prop_map(move |(s, t, raw, null_side, has_null, res)| {
                let (s, t) = match (has_null, null_side) {
                    (true, true) => (NULL.to_owned(), t),
                    (true, false) => (s, NULL.to_owned()),
                    _ => (s, t),
                };
                let (raw, resolved) = if raw == labels.len() {
                    (RawLabel::Follow, Some(labels[res]))
                } else {
                    (RawLabel::Label(labels[raw]), Some(labels[raw]))
                };
                ReorderingEvent { src: s, tgt: t, raw, resolved, anchor: None }
            })
    }

    proptest! {
        #[test]
        fn tsv_round_trip(
            sentences in prop::collection::vec(prop::collection::vec(arb_event(Scheme::Mslr), 1..6), 0..5)
        ) {
            let text = serialize_events(&sentences);
            prop_assert_eq!(parse_events(&text, Scheme::Mslr).unwrap(), sentences);
        }
    }
}
