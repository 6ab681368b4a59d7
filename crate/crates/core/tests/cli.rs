use std::fs;
use std::path::Path;

use lstm_reorder::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
use lstm_reorder::model::{load_model, MAGIC, VERSION};
use lstm_reorder::orientation::Scheme;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_corpus(d: &Path) {
    fs::write(d.join("src"), "s0 s1 s2\ns0 s1\ns0\ns0 s1\n").unwrap();
    fs::write(d.join("tgt"), "t0 t1\nt0 t1\nt0 t1\nt0\n").unwrap();
    fs::write(d.join("align"), "0-0 2-1\n1-0 0-1\n0-0 0-1\n0-0 1-0\n").unwrap();
}

#[test]
fn extract_writes_event_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_corpus(d);
    let out = d.join("e.tsv");
    let code = run([
        "lstm-reorder", "extract", "--scheme", "lr", "--src", s(&d.join("src")), "--tgt", s(&d.join("tgt")), "--align",
        s(&d.join("align")), "--out", s(&out),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        fs::read_to_string(out).unwrap(),
        "s0\tt0\tR\tR\ns1\t<null>\tF\tR\ns2\tt1\tR\tR\n\n\
         s1\tt0\tR\tR\ns0\tt1\tL\tL\n\n\
         s0\tt0\tR\tR\ns0\tt1\tF\tR\n\n\
         s0\tt0\tR\tR\ns1\tt0\tF\tR\n\n"
    );
}

#[test]
fn extract_reports_bad_alignment_as_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_corpus(d);
    fs::write(d.join("align"), "0-0\n5-0\n0-0\n0-0\n").unwrap();
    let code = run([
        "lstm-reorder", "extract", "--src", s(&d.join("src")), "--tgt", s(&d.join("tgt")), "--align", s(&d.join("align")),
        "--out", s(&d.join("e")),
    ]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn gen_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for (out, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        assert_eq!(run(["lstm-reorder", "gen-synth", "--seed", seed, "--sentences", "2000", "--out", s(out)]), EXIT_OK);
    }
    for f in ["train.tsv", "heldout.tsv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert_ne!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap());
    }
    let train = fs::read_to_string(a.join("train.tsv")).unwrap();
    assert_eq!(train.split("\n\n").filter(|x| !x.trim().is_empty()).count(), 2000);
}

#[test]
fn train_defaults_are_recorded_in_model_header() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_corpus(d);
    let model = d.join("m");
    let code = run([
        "lstm-reorder", "train", "--src", s(&d.join("src")), "--tgt", s(&d.join("tgt")), "--align", s(&d.join("align")),
        "--model", s(&model), "--stats", s(&d.join("stats")),
    ]);
    assert_eq!(code, EXIT_OK);
    let bytes = fs::read(&model).unwrap();
    assert_eq!(&bytes[..6], MAGIC);
    assert_eq!(bytes[6], VERSION);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 100);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 100);
    let m = load_model(&model).unwrap();
    assert_eq!((m.config.embed_dim, m.config.hidden_dim), (100, 100));
    assert_eq!((m.config.lr, m.config.epochs), (0.01, 10));
    assert_eq!((m.config.src_vocab_size, m.config.tgt_vocab_size), (100_000, 50_000));
    assert_eq!(m.config.scheme, Scheme::Lr);
    assert!(m.config.shuffle && m.config.peepholes);

    let stats = fs::read_to_string(d.join("stats")).unwrap();
    assert_eq!(stats.lines().count(), 10);
    assert!(stats.lines().all(|l| l.starts_with("epoch=") && l.contains("train_xent=") && l.contains("seconds=")));
}

#[test]
fn score_ppl_rescore_rerank_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = d.join("synth");
    assert_eq!(run(["lstm-reorder", "gen-synth", "--seed", "5", "--sentences", "100", "--heldout", "10", "--out", s(&synth)]), EXIT_OK);
    let model = d.join("m");
    let code = run([
        "lstm-reorder", "train", "--events", s(&synth.join("train.tsv")), "--heldout", s(&synth.join("heldout.tsv")),
        "--embed-dim", "4", "--hidden-dim", "4", "--epochs", "1", "--no-peepholes", "--no-shuffle", "--clip", "5",
        "--model", s(&model), "--stats", s(&d.join("stats")),
    ]);
    assert_eq!(code, EXIT_OK);
    let m = load_model(&model).unwrap();
    assert!(!m.config.peepholes && !m.config.shuffle);
    assert_eq!(m.config.max_grad_norm, Some(5.0));
    assert!(fs::read_to_string(d.join("stats")).unwrap().contains("heldout_ppl="));

    let scores = d.join("scores");
    let code = run(["lstm-reorder", "score", "--model", s(&model), "--events", s(&synth.join("heldout.tsv")), "--out", s(&scores)]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<f64> = fs::read_to_string(&scores).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|&v| v < 0.0));

    let code = run([
        "lstm-reorder", "ppl", "--model", s(&model), "--events", s(&synth.join("heldout.tsv")), "--baseline-train",
        s(&synth.join("train.tsv")),
    ]);
    assert_eq!(code, EXIT_OK);

    fs::write(d.join("source"), "TRIGGER s1 s2\n").unwrap();
    fs::write(d.join("nbest"), "0 ||| t1 t2 ||| LM= -1 ||| -1\n0 ||| t3 ||| LM= -2 ||| -2\n").unwrap();
    fs::write(d.join("sidecar"), "0-0 1-1 2-1\n\n").unwrap();
    let code = run([
        "lstm-reorder", "rescore", "--model", s(&model), "--source", s(&d.join("source")), "--nbest", s(&d.join("nbest")),
        "--align-sidecar", s(&d.join("sidecar")), "--out", s(&d.join("rescored")),
    ]);
    assert_eq!(code, EXIT_OK);
    let rescored = fs::read_to_string(d.join("rescored")).unwrap();
    assert_eq!(rescored.lines().count(), 2);
    assert!(rescored.lines().all(|l| l.contains("LSTMRM= ")));

    fs::write(d.join("weights"), "LM\t1\n").unwrap();
    let code = run([
        "lstm-reorder", "rerank", "--nbest", s(&d.join("rescored")), "--weights", s(&d.join("weights")), "--out",
        s(&d.join("reranked")),
    ]);
    assert_eq!(code, EXIT_OK);
    let first = fs::read_to_string(d.join("reranked")).unwrap();
    assert!(first.starts_with("0 ||| t1 t2 |||"));
}

#[test]
fn bad_invocations() {
    assert_eq!(run(["lstm-reorder"]), EXIT_USAGE);
    assert_eq!(run(["lstm-reorder", "train", "--lr", "-1", "--events", "x"]), EXIT_USAGE);
    assert_eq!(run(["lstm-reorder", "train", "--events", "/nonexistent"]), EXIT_DATA);
    assert_eq!(run(["lstm-reorder", "train", "--help"]), EXIT_OK);
}
