//! Parallel corpora, Pharaoh word alignments and vocabularies.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const NULL: &str = "<null>";
pub const UNK_ID: usize = 0;
pub const NULL_ID: usize = 1;

/// One word alignment link, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignmentLink {
    pub src: usize,
    pub tgt: usize,
}

impl AlignmentLink {
    pub fn new(src: usize, tgt: usize) -> Self {
        AlignmentLink { src, tgt }
    }
}

impl fmt::Display for AlignmentLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.src, self.tgt)
    }
}

pub type Alignment = BTreeSet<AlignmentLink>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub links: Alignment,
}

impl SentencePair {
    /// Builds a pair, rejecting links that point outside either sentence.
    /// `line` is only used for error reporting.
    pub fn new(
        source: Vec<String>,
        target: Vec<String>,
        links: Alignment,
        line: usize,
    ) -> Result<Self> {
        check_links(&links, source.len(), target.len(), line)?;
        Ok(SentencePair {
            source,
            target,
            links,
        })
    }
}

pub(crate) fn check_links(
    links: &Alignment,
    src_len: usize,
    tgt_len: usize,
    line: usize,
) -> Result<()> {
    match links.iter().find(|l| l.src >= src_len || l.tgt >= tgt_len) {
        Some(l) => Err(Error::LinkOutOfRange {
            line,
            src: l.src,
            tgt: l.tgt,
            src_len,
            tgt_len,
        }),
        None => Ok(()),
    }
}

/// Parses a Pharaoh alignment line (`0-1 2-0 ...`). Duplicate links collapse.
pub fn parse_alignment_line(text: &str, line: usize) -> Result<Alignment> {
    let mut links = Alignment::new();
    for field in text.split_ascii_whitespace() {
        let (s, t) = field
            .split_once('-')
            .ok_or_else(|| Error::parse(line, format!("malformed alignment pair {field:?}")))?;
        let index = |x: &str| {
            x.parse::<usize>()
                .map_err(|_| Error::parse(line, format!("bad alignment index in {field:?}")))
        };
        links.insert(AlignmentLink::new(index(s)?, index(t)?));
    }
    Ok(links)
}

/// Renders links as sorted `S-T` pairs.
pub fn render_alignment(links: &Alignment) -> String {
    links
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn tokenize(line: &str) -> Vec<String> {
    line.split_ascii_whitespace().map(str::to_owned).collect()
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Line-aligned reader over source, target and alignment files.
pub struct ParallelCorpus {
    paths: [PathBuf; 3],
    readers: [Lines<BufReader<File>>; 3],
    line: usize,
    done: bool,
}

/// Opens three line-aligned files. Pairs are yielded lazily and validated as
/// they are read.
pub fn load_parallel_corpus(
    src_path: impl AsRef<Path>,
    tgt_path: impl AsRef<Path>,
    align_path: impl AsRef<Path>,
) -> Result<ParallelCorpus> {
    let paths = [
        src_path.as_ref().to_path_buf(),
        tgt_path.as_ref().to_path_buf(),
        align_path.as_ref().to_path_buf(),
    ];
    let readers = [
        open(&paths[0])?.lines(),
        open(&paths[1])?.lines(),
        open(&paths[2])?.lines(),
    ];
    Ok(ParallelCorpus {
        paths,
        readers,
        line: 0,
        done: false,
    })
}

impl ParallelCorpus {
    fn next_pair(&mut self) -> Result<Option<SentencePair>> {
        self.line += 1;
        let mut lines: [Option<String>; 3] = [None, None, None];
        for (k, reader) in self.readers.iter_mut().enumerate() {
            lines[k] = reader
                .next()
                .transpose()
                .map_err(|e| Error::io(&self.paths[k], e))?;
        }
        let line = self.line;
        match lines {
            [None, None, None] => Ok(None),
            [Some(src), Some(tgt), Some(align)] => {
                let source = tokenize(&src);
                let target = tokenize(&tgt);
                if source.is_empty() || target.is_empty() {
                    return Err(Error::parse(line, "empty source or target sentence"));
                }
                let links = parse_alignment_line(&align, line)?;
                SentencePair::new(source, target, links, line).map(Some)
            }
            _ => {
                let ended: Vec<String> = lines
                    .iter()
                    .zip(&self.paths)
                    .filter(|(l, _)| l.is_none())
                    .map(|(_, p)| p.display().to_string())
                    .collect();
                Err(Error::LineCountMismatch(format!(
                    "{} ended before line {line}",
                    ended.join(", ")
                )))
            }
        }
    }
}

impl Iterator for ParallelCorpus {
    type Item = Result<SentencePair>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.next_pair();
        if !matches!(item, Ok(Some(_))) {
            self.done = true;
        }
        item.transpose()
    }
}

/// Token to id map with `<unk>` at 0 and `<null>` at 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    /// Counts tokens and keeps the most frequent ones, ties broken
    /// lexicographically, so that the total size including the two reserved
    /// entries is at most `max_size`.
    pub fn build<I, S>(tokens: I, max_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if max_size < 2 {
            return Err(Error::Vocab(format!(
                "max size {max_size} leaves no room for reserved tokens"
            )));
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for tok in tokens {
            let tok = tok.as_ref();
            if tok == UNK || tok == NULL {
                continue;
            }
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.to_owned(), 1);
                }
            }
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(max_size - 2);

        let tokens = [UNK.to_owned(), NULL.to_owned()]
            .into_iter()
            .chain(ranked.into_iter().map(|(t, _)| t))
            .collect();
        Self::from_tokens(tokens)
    }

    /// Rebuilds a vocabulary from its id-ordered token list.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[UNK_ID] != UNK || tokens[NULL_ID] != NULL {
            return Err(Error::Vocab(format!(
                "first two entries must be {UNK} and {NULL}"
            )));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.contains(|c: char| c.is_ascii_whitespace()) {
                return Err(Error::Vocab(format!("invalid token {tok:?} at id {id}")));
            }
            if ids.insert(tok.clone(), id).is_some() {
                return Err(Error::Vocab(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Vocabulary { tokens, ids })
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.ids.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false: the reserved tokens are present.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// One token per line; line number is the id.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for tok in &self.tokens {
            writeln!(out, "{tok}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut tokens = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Vocab(format!("line {}: {e}", n + 1)))?;
            tokens.push(line);
        }
        Self::from_tokens(tokens)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(open(path.as_ref())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Cursor;

    fn links(pairs: &[(usize, usize)]) -> Alignment {
        pairs.iter().map(|&(s, t)| AlignmentLink::new(s, t)).collect()
    }

    #[test]
    fn alignment_line_examples() {
        assert_eq!(parse_alignment_line("0-1 2-0", 1).unwrap(), links(&[(0, 1), (2, 0)]));
        assert!(parse_alignment_line("", 1).unwrap().is_empty());
        assert_eq!(
            parse_alignment_line("0-0 0-0 1-1", 1).unwrap(),
            links(&[(0, 0), (1, 1)])
        );
    }

    #[test]
    fn alignment_line_errors_carry_line_number() {
        for bad in ["1-", "-1", "a-2", "0--1", "0-1-2", "3"] {
            match parse_alignment_line(bad, 17) {
                Err(Error::Parse { line: 17, .. }) => {}
                other => panic!("{bad:?}: {other:?}"),
            }
        }
    }

    fn write_corpus(dir: &Path, src: &str, tgt: &str, align: &str) -> [PathBuf; 3] {
        let paths = [dir.join("s"), dir.join("t"), dir.join("a")];
        for (p, body) in paths.iter().zip([src, tgt, align]) {
            std::fs::write(p, body).unwrap();
        }
        paths
    }

    #[test]
    fn corpus_reads_pairs_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let [s, t, a] = write_corpus(dir.path(), "a b\nc\n", "x\ny z\n", "0-0 1-0\n\n");
        let pairs: Vec<_> = load_parallel_corpus(s, t, a)
            .unwrap()
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].source, ["a", "b"]);
        assert_eq!(pairs[0].links, links(&[(0, 0), (1, 0)]));
        assert_eq!(pairs[1].target, ["y", "z"]);
        assert!(pairs[1].links.is_empty());
    }

    #[test]
    fn corpus_rejects_out_of_range_link() {
        let dir = tempfile::tempdir().unwrap();
        let [s, t, a] = write_corpus(dir.path(), "a b\na b c\n", "x\ny\n", "0-0\n5-0\n");
        let mut it = load_parallel_corpus(s, t, a).unwrap();
        assert!(it.next().unwrap().is_ok());
        match it.next().unwrap() {
            Err(Error::LinkOutOfRange { line: 2, src: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(it.next().is_none());
    }

    #[test]
    fn corpus_rejects_line_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let [s, t, a] = write_corpus(dir.path(), "a\nb\n", "x\n", "0-0\n0-0\n");
        let res: Result<Vec<_>> = load_parallel_corpus(s, t, a).unwrap().collect();
        assert!(matches!(res, Err(Error::LineCountMismatch(_))));
    }

    #[test]
    fn vocabulary_examples() {
        let v = Vocabulary::build(["a", "a", "b"], 4).unwrap();
        assert_eq!(v.tokens(), [UNK, NULL, "a", "b"]);
        let v = Vocabulary::build(["a", "a", "b"], 3).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v.lookup("a"), 2);
        assert_eq!(v.lookup("b"), UNK_ID);
        let v = Vocabulary::build(["y", "x"], 4).unwrap();
        assert!(v.lookup("x") < v.lookup("y"));
        assert_eq!(v.lookup("zzz"), 0);
        assert_eq!(v.lookup(NULL), 1);
        assert!(Vocabulary::build(["a"], 1).is_err());
    }

    #[test]
    fn vocabulary_file_requires_reserved_header() {
        assert!(Vocabulary::read_from(Cursor::new("<null>\n<unk>\na\n")).is_err());
        assert!(Vocabulary::read_from(Cursor::new("<unk>\n<null>\na\na\n")).is_err());
    }

    proptest! {
        #[test]
        fn vocabulary_ids_dense_and_round_trip(
            toks in prop::collection::vec("[a-e]{1,2}", 0..60),
            max in 2usize..12,
        ) {
            let v = Vocabulary::build(&toks, max).unwrap();
            prop_assert!(v.len() <= max);
            for (id, t) in v.tokens().iter().enumerate() {
                prop_assert_eq!(v.lookup(t), id);
            }
            let mut buf = Vec::new();
            v.write_to(&mut buf).unwrap();
            let back = Vocabulary::read_from(Cursor::new(buf)).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn alignment_render_parse_inverse(
            pairs in prop::collection::vec((0usize..30, 0usize..30), 0..20),
        ) {
            let set = links(&pairs);
            prop_assert_eq!(parse_alignment_line(&render_alignment(&set), 1).unwrap(), set);
        }
    }
}
