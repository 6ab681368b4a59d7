//! The LSTM reordering model: each event's source and target words are
//! embedded and summed, fed through an LSTM, and projected onto the
//! orientation labels with a softmax.

mod count;
mod file;

pub use count::{train_count_baseline, CountModel};
pub use file::{load_model, read_model, save_model, write_model, MAGIC, VERSION};

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::nn::{
    self, cross_entropy, dot, lstm_sequence_backward, lstm_sequence_forward, softmax, LstmParams,
    Matrix, Params, StepCache,
};
use crate::orientation::{ReorderingEvent, Scheme};

/// Half-width of the uniform initialization interval.
pub const INIT_RANGE: f64 = 0.1;
pub const FORGET_BIAS_INIT: f64 = 1.0;

/// ChaCha8 stream ids derived from the single user seed.
pub const INIT_STREAM: u64 = 0;
pub const SHUFFLE_STREAM: u64 = 1;

pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub scheme: Scheme,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub src_vocab_size: usize,
    pub tgt_vocab_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub peepholes: bool,
    /// Optional global-norm gradient clip; off by default.
    pub max_grad_norm: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            scheme: Scheme::Lr,
            embed_dim: 100,
            hidden_dim: 100,
            src_vocab_size: 100_000,
            tgt_vocab_size: 50_000,
            lr: 0.01,
            epochs: 10,
            seed: 1,
            shuffle: true,
            peepholes: true,
            max_grad_norm: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.embed_dim == 0 || self.hidden_dim == 0 {
            return fail("embedding and hidden dimensions must be at least 1".into());
        }
        if self.src_vocab_size < 2 || self.tgt_vocab_size < 2 {
            return fail("vocabulary sizes must be at least 2".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.epochs == 0 {
            return fail("epochs must be at least 1".into());
        }
        if let Some(c) = self.max_grad_norm {
            if !(c > 0.0 && c.is_finite()) {
                return fail(format!("gradient clip must be positive, got {c}"));
            }
        }
        Ok(())
    }
}

/// Event mapped to vocabulary ids and a label index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodedEvent {
    pub src: usize,
    pub tgt: usize,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReorderingModel {
    pub config: ModelConfig,
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    /// One embedding row per source id (the columns of W1).
    pub src_embed: Matrix,
    /// One embedding row per target id (the columns of W2).
    pub tgt_embed: Matrix,
    pub lstm: LstmParams,
    /// labels × hidden (W4).
    pub output: Matrix,
}

impl ReorderingModel {
    /// All weights zero, including the forget bias.
    pub fn zeros(config: ModelConfig, src_vocab: Vocabulary, tgt_vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        for (vocab, max, side) in [
            (&src_vocab, config.src_vocab_size, "source"),
            (&tgt_vocab, config.tgt_vocab_size, "target"),
        ] {
            if vocab.len() > max {
                return Err(Error::Config(format!(
                    "{side} vocabulary has {} entries, configured maximum is {max}",
                    vocab.len()
                )));
            }
        }
        Ok(ReorderingModel {
            src_embed: Matrix::zeros(src_vocab.len(), config.embed_dim),
            tgt_embed: Matrix::zeros(tgt_vocab.len(), config.embed_dim),
            lstm: LstmParams::zeros(config.embed_dim, config.hidden_dim, config.peepholes),
            output: Matrix::zeros(config.scheme.label_count(), config.hidden_dim),
            config,
            src_vocab,
            tgt_vocab,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.config.scheme
    }

    pub fn label_count(&self) -> usize {
        self.output.rows()
    }

    pub fn encode(&self, events: &[ReorderingEvent]) -> Result<Vec<EncodedEvent>> {
        let scheme = self.scheme();
        events
            .iter()
            .map(|ev| {
                let label = ev.resolved.ok_or_else(|| {
                    Error::Invariant(format!("unresolved follow label on {} / {}", ev.src, ev.tgt))
                })?;
                let label = scheme.index_of(label).ok_or_else(|| {
                    Error::Invariant(format!("label {label} is not part of scheme {scheme}"))
                })?;
                Ok(EncodedEvent {
                    src: self.src_vocab.lookup(&ev.src),
                    tgt: self.tgt_vocab.lookup(&ev.tgt),
                    label,
                })
            })
            .collect()
    }

    pub fn encode_corpus(&self, corpus: &[Vec<ReorderingEvent>]) -> Result<Vec<Vec<EncodedEvent>>> {
        corpus.iter().map(|s| self.encode(s)).collect()
    }

    fn inputs(&self, events: &[EncodedEvent]) -> Vec<Vec<f64>> {
        events
            .iter()
            .map(|ev| {
                self.src_embed
                    .row(ev.src)
                    .iter()
                    .zip(self.tgt_embed.row(ev.tgt))
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect()
    }

    fn forward_encoded(&self, events: &[EncodedEvent]) -> Result<(Vec<StepCache>, Vec<Vec<f64>>)> {
        let caches = lstm_sequence_forward(&self.lstm, &self.inputs(events))?;
        let dists = caches
            .iter()
            .map(|c| {
                let logits: Vec<f64> = (0..self.output.rows()).map(|r| dot(self.output.row(r), &c.h)).collect();
                softmax(&logits)
            })
            .collect();
        Ok((caches, dists))
    }

    /// Per-event label distributions, in scheme label order. The LSTM state
    /// starts from zero for every call.
    pub fn forward_sequence(&self, events: &[ReorderingEvent]) -> Result<Vec<Vec<f64>>> {
        let encoded = self.encode(events)?;
        self.forward_encoded(&encoded).map(|(_, d)| d)
    }

    /// Σ ln p(resolved label) over the sentence.
    pub fn score_events(&self, events: &[ReorderingEvent]) -> Result<f64> {
        let encoded = self.encode(events)?;
        self.score_encoded(&encoded)
    }

    pub fn score_encoded(&self, events: &[EncodedEvent]) -> Result<f64> {
        let (_, dists) = self.forward_encoded(events)?;
        let mut total = 0.0;
        for (ev, p) in events.iter().zip(&dists) {
            total -= cross_entropy(p, ev.label)?;
        }
        Ok(total)
    }

    /// Summed cross-entropy of one sentence and its exact gradient.
    pub fn loss_and_gradients(&self, events: &[EncodedEvent]) -> Result<(f64, Gradients)> {
        let (caches, dists) = self.forward_encoded(events)?;
        let h = self.config.hidden_dim;
        let mut output = Matrix::zeros(self.output.rows(), h);
        let mut dh = Vec::with_capacity(events.len());
        let mut loss = 0.0;
        for ((ev, p), cache) in events.iter().zip(&dists).zip(&caches) {
            loss += cross_entropy(p, ev.label)?;
            let mut dlogits = p.clone();
            dlogits[ev.label] -= 1.0;
            output.add_outer(&dlogits, &cache.h);
            let mut dhi = vec![0.0; h];
            self.output.mul_t_vec_acc(&dlogits, &mut dhi);
            dh.push(dhi);
        }
        let (lstm, dxs) = lstm_sequence_backward(&self.lstm, &caches, &dh)?;
        let mut src_embed: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut tgt_embed: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (ev, dx) in events.iter().zip(&dxs) {
            for (table, id) in [(&mut src_embed, ev.src), (&mut tgt_embed, ev.tgt)] {
                let row = table.entry(id).or_insert_with(|| vec![0.0; dx.len()]);
                row.iter_mut().zip(dx).for_each(|(r, d)| *r += d);
            }
        }
        Ok((
            loss,
            Gradients {
                src_embed,
                tgt_embed,
                lstm,
                output,
            },
        ))
    }

    /// Plain SGD step; embedding rows not touched by the sentence are left
    /// alone.
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        for (table, rows) in [
            (&mut self.src_embed, &grads.src_embed),
            (&mut self.tgt_embed, &grads.tgt_embed),
        ] {
            for (&id, g) in rows {
                if id >= table.rows() {
                    return Err(Error::Dimension {
                        what: "embedding gradient row",
                        expected: table.rows(),
                        got: id,
                    });
                }
                nn::sgd_step(table.row_mut(id), g, lr)?;
            }
        }
        nn::sgd_update(&mut self.lstm, &grads.lstm, lr)?;
        nn::sgd_step(self.output.as_mut_slice(), grads.output.as_slice(), lr)
    }

    pub fn evaluate(&self, corpus: &[Vec<ReorderingEvent>]) -> Result<Evaluation> {
        let mut eval = Evaluation::default();
        for sentence in corpus {
            let encoded = self.encode(sentence)?;
            eval.add(&encoded, &self.forward_encoded(&encoded)?.1)?;
        }
        Ok(eval)
    }

    /// exp of the mean negative log-probability per event.
    pub fn perplexity(&self, corpus: &[Vec<ReorderingEvent>]) -> Result<f64> {
        self.evaluate(corpus)?.perplexity()
    }
}

/// Draws every weight from U(−0.1, 0.1) with the ChaCha8 stream
/// [`INIT_STREAM`] of `config.seed`. Biases start at zero except the forget
/// gate bias, which is 1. Peephole weights stay zero when peepholes are off.
pub fn init_model(config: ModelConfig, src_vocab: Vocabulary, tgt_vocab: Vocabulary) -> Result<ReorderingModel> {
    let mut model = ReorderingModel::zeros(config, src_vocab, tgt_vocab)?;
    let mut rng = seeded_rng(model.config.seed, INIT_STREAM);
    let mut fill = |t: &mut [f64]| t.iter_mut().for_each(|v| *v = rng.gen_range(-INIT_RANGE..=INIT_RANGE));

    fill(model.src_embed.as_mut_slice());
    fill(model.tgt_embed.as_mut_slice());
    let lstm = &mut model.lstm;
    for g in 0..4 {
        fill(lstm.w_x[g].as_mut_slice());
        fill(lstm.w_h[g].as_mut_slice());
    }
    if lstm.peepholes {
        for p in &mut lstm.peep {
            fill(p);
        }
    }
    lstm.bias[nn::FORGET].fill(FORGET_BIAS_INIT);
    fill(model.output.as_mut_slice());
    Ok(model)
}

/// Gradient of one sentence's loss. Embedding gradients are sparse: only
/// rows of ids that occur in the sentence are present.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub src_embed: BTreeMap<usize, Vec<f64>>,
    pub tgt_embed: BTreeMap<usize, Vec<f64>>,
    pub lstm: LstmParams,
    pub output: Matrix,
}

impl Gradients {
    pub fn norm(&self) -> f64 {
        let mut acc = 0.0;
        for row in self.src_embed.values().chain(self.tgt_embed.values()) {
            acc += dot(row, row);
        }
        for t in self.lstm.tensors() {
            acc += dot(t, t);
        }
        acc += dot(self.output.as_slice(), self.output.as_slice());
        acc.sqrt()
    }

    /// Rescales to global norm `max_norm` if larger; returns the prior norm.
    pub fn clip(&mut self, max_norm: f64) -> f64 {
        let norm = self.norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            let rows = self.src_embed.values_mut().chain(self.tgt_embed.values_mut());
            let dense = self.lstm.tensors_mut().into_iter().chain([self.output.as_mut_slice()]);
            for t in dense.chain(rows.map(Vec::as_mut_slice)) {
                t.iter_mut().for_each(|v| *v *= scale);
            }
        }
        norm
    }

    /// Dense copy laid out like `model`, for comparison against numeric
    /// gradients.
    pub fn densify(&self, model: &ReorderingModel) -> ReorderingModel {
        let mut dense = model.clone();
        for t in dense.tensors_mut() {
            t.fill(0.0);
        }
        for (id, row) in &self.src_embed {
            dense.src_embed.row_mut(*id).copy_from_slice(row);
        }
        for (id, row) in &self.tgt_embed {
            dense.tgt_embed.row_mut(*id).copy_from_slice(row);
        }
        dense.lstm = self.lstm.clone();
        dense.output = self.output.clone();
        dense
    }
}

impl Params for ReorderingModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out = vec![self.src_embed.as_slice(), self.tgt_embed.as_slice()];
        out.extend(self.lstm.tensors());
        out.push(self.output.as_slice());
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.src_embed.as_mut_slice(), self.tgt_embed.as_mut_slice()];
        out.extend(self.lstm.tensors_mut());
        out.push(self.output.as_mut_slice());
        out
    }
}

/// Accumulated log-probability and argmax accuracy over a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Evaluation {
    pub events: usize,
    pub log_prob: f64,
    pub correct: usize,
}

impl Evaluation {
    pub(crate) fn add(&mut self, events: &[EncodedEvent], dists: &[Vec<f64>]) -> Result<()> {
        for (ev, p) in events.iter().zip(dists) {
            self.events += 1;
            self.log_prob -= cross_entropy(p, ev.label)?;
            if argmax(p) == ev.label {
                self.correct += 1;
            }
        }
        Ok(())
    }

    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.events as f64
    }

    pub fn cross_entropy(&self) -> f64 {
        -self.log_prob / self.events as f64
    }

    pub fn perplexity(&self) -> Result<f64> {
        if self.events == 0 {
            return Err(Error::EmptyCorpus("perplexity needs at least one event"));
        }
        Ok(self.cross_entropy().exp())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-event training cross-entropy (nats), measured during the
    /// epoch before each update.
    pub train_xent: f64,
    pub heldout_ppl: Option<f64>,
    pub heldout_accuracy: Option<f64>,
    pub updates: usize,
    pub seconds: f64,
}

impl std::fmt::Display for EpochStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"));
        write!(
            f,
            "epoch={} train_xent={:.6} heldout_ppl={} heldout_acc={} seconds={:.3}",
            self.epoch,
            self.train_xent,
            opt(self.heldout_ppl),
            opt(self.heldout_accuracy),
            self.seconds
        )
    }
}

/// Builds source/target vocabularies from the training events, initializes
/// a model and trains it. See [`train_model`].
pub fn train(
    config: ModelConfig,
    train_corpus: &[Vec<ReorderingEvent>],
    heldout: &[Vec<ReorderingEvent>],
    on_epoch: impl FnMut(&EpochStats),
) -> Result<(ReorderingModel, Vec<EpochStats>)> {
    config.validate()?;
    let src_vocab = Vocabulary::build(train_corpus.iter().flatten().map(|e| &e.src), config.src_vocab_size)?;
    let tgt_vocab = Vocabulary::build(train_corpus.iter().flatten().map(|e| &e.tgt), config.tgt_vocab_size)?;
    let mut model = init_model(config, src_vocab, tgt_vocab)?;
    let stats = train_model(&mut model, train_corpus, heldout, on_epoch)?;
    Ok((model, stats))
}

/// Per-sentence SGD with full backpropagation through time and a constant
/// learning rate. Sentence order is reshuffled every epoch from the ChaCha8
/// stream [`SHUFFLE_STREAM`] of the model seed when shuffling is on.
pub fn train_model(
    model: &mut ReorderingModel,
    train_corpus: &[Vec<ReorderingEvent>],
    heldout: &[Vec<ReorderingEvent>],
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<Vec<EpochStats>> {
    let encoded = model.encode_corpus(train_corpus)?;
    if encoded.iter().all(Vec::is_empty) {
        return Err(Error::EmptyCorpus("no training events"));
    }
    let heldout = model.encode_corpus(heldout)?;
    let heldout_events: usize = heldout.iter().map(Vec::len).sum();

    let mut rng = seeded_rng(model.config.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let lr = model.config.lr;
    let mut all_stats = Vec::with_capacity(model.config.epochs);
    for epoch in 1..=model.config.epochs {
        let start = Instant::now();
        if model.config.shuffle {
            order.shuffle(&mut rng);
        }
        let (mut loss, mut events, mut updates) = (0.0, 0usize, 0usize);
        for &k in &order {
            let sentence = &encoded[k];
            if sentence.is_empty() {
                continue;
            }
            let (l, mut grads) = model.loss_and_gradients(sentence)?;
            if let Some(c) = model.config.max_grad_norm {
                grads.clip(c);
            }
            model.apply_gradients(&grads, lr)?;
            loss += l;
            events += sentence.len();
            updates += 1;
        }
        let (heldout_ppl, heldout_accuracy) = if heldout_events > 0 {
            let mut eval = Evaluation::default();
            for s in &heldout {
                eval.add(s, &model.forward_encoded(s)?.1)?;
            }
            (Some(eval.perplexity()?), Some(eval.accuracy()))
        } else {
            (None, None)
        };
        let stats = EpochStats {
            epoch,
            train_xent: loss / events as f64,
            heldout_ppl,
            heldout_accuracy,
            updates,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::info!("{stats}");
        on_epoch(&stats);
        all_stats.push(stats);
    }
    Ok(all_stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orientation::Label;

    fn vocab(tokens: &[&str]) -> Vocabulary {
        Vocabulary::build(tokens.iter().copied(), 100).unwrap()
    }

    fn small_config(scheme: Scheme) -> ModelConfig {
        ModelConfig {
            scheme,
            embed_dim: 4,
            hidden_dim: 3,
            src_vocab_size: 10,
            tgt_vocab_size: 10,
            seed: 11,
            ..ModelConfig::default()
        }
    }

    fn ev(s: &str, t: &str, l: Label) -> ReorderingEvent {
        ReorderingEvent::new(s, t, l)
    }

    #[test]
    fn defaults_follow_reported_setup() {
        let c = ModelConfig::default();
        assert_eq!((c.embed_dim, c.hidden_dim), (100, 100));
        assert_eq!((c.src_vocab_size, c.tgt_vocab_size), (100_000, 50_000));
        assert_eq!((c.lr, c.epochs), (0.01, 10));
        assert!(c.shuffle && c.peepholes && c.max_grad_norm.is_none());
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = small_config(Scheme::Mslr);
        let a = init_model(cfg.clone(), vocab(&["a", "b"]), vocab(&["x"])).unwrap();
        let b = init_model(cfg.clone(), vocab(&["a", "b"]), vocab(&["x"])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lstm.bias[nn::FORGET], vec![1.0; 3]);
        for g in [nn::INPUT, nn::CELL, nn::OUTPUT] {
            assert!(a.lstm.bias[g].iter().all(|&v| v == 0.0));
        }
        for (k, t) in a.tensors().iter().enumerate() {
            let is_forget_bias = k == 2 + 3 * nn::FORGET + 2;
            if !is_forget_bias {
                assert!(t.iter().all(|v| v.abs() <= INIT_RANGE));
            }
        }
        let c = init_model(ModelConfig { seed: 12, ..cfg }, vocab(&["a", "b"]), vocab(&["x"])).unwrap();
        assert_ne!(a, c);
        assert_eq!(a.output.rows(), 4);
        assert_eq!(a.src_embed.rows(), 4);
    }

    #[test]
    fn init_rejects_oversized_vocab() {
        let cfg = ModelConfig { src_vocab_size: 3, ..small_config(Scheme::Lr) };
        assert!(init_model(cfg, vocab(&["a", "b"]), vocab(&["x"])).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ReorderingModel::zeros(small_config(Scheme::Lr), vocab(&["a"]), vocab(&["x"])).unwrap();
        let evs = vec![ev("a", "x", Label::R), ev("b", "<null>", Label::L), ev("a", "y", Label::R)];
        for p in m.forward_sequence(&evs).unwrap() {
            assert_eq!(p, [0.5, 0.5]);
        }
        assert!((m.score_events(&evs).unwrap() - 3.0 * 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(m.score_events(&[]).unwrap(), 0.0);
        assert!(m.forward_sequence(&[]).unwrap().is_empty());
        assert_eq!(m.perplexity(&[evs]).unwrap(), 2.0);
        assert!(m.perplexity(&[]).is_err());
    }

    #[test]
    fn unresolved_event_is_rejected() {
        let m = ReorderingModel::zeros(small_config(Scheme::Lr), vocab(&["a"]), vocab(&["x"])).unwrap();
        let mut e = ev("a", "x", Label::R);
        e.resolved = None;
        assert!(m.forward_sequence(&[e]).is_err());
        assert!(m.score_events(&[ev("a", "x", Label::M)]).is_err());
    }

    #[test]
    fn causal_recurrence() {
        let m = init_model(small_config(Scheme::Msd), vocab(&["a", "b", "c"]), vocab(&["x", "y"])).unwrap();
        let base = vec![ev("a", "x", Label::M), ev("b", "y", Label::S), ev("c", "x", Label::D), ev("a", "y", Label::M)];
        let mut changed = base.clone();
        changed[2] = ev("b", "x", Label::D);
        let p = m.forward_sequence(&base).unwrap();
        let q = m.forward_sequence(&changed).unwrap();
        assert_eq!(p[..2], q[..2]);
        assert_ne!(p[2], q[2]);
        assert_ne!(p[3], q[3]);
    }

    #[test]
    fn score_is_sum_of_log_probs() {
        let m = init_model(small_config(Scheme::Lr), vocab(&["a", "b"]), vocab(&["x"])).unwrap();
        let evs = vec![ev("a", "x", Label::R), ev("b", "x", Label::L), ev("a", "x", Label::L)];
        let dists = m.forward_sequence(&evs).unwrap();
        let by_hand: f64 = [1, 0, 0].iter().zip(&dists).map(|(&k, p)| p[k].ln()).sum();
        assert!((m.score_events(&evs).unwrap() - by_hand).abs() < 1e-12);
    }

    #[test]
    fn one_sentence_one_update() {
        let corpus = vec![vec![ev("a", "x", Label::R), ev("b", "x", Label::L)]];
        let cfg = ModelConfig { epochs: 1, ..small_config(Scheme::Lr) };
        let (model, stats) = train(cfg.clone(), &corpus, &[], |_| {}).unwrap();
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].updates, 1);
        assert!(stats[0].heldout_ppl.is_none());

        let mut by_hand = init_model(cfg, model.src_vocab.clone(), model.tgt_vocab.clone()).unwrap();
        let encoded = by_hand.encode(&corpus[0]).unwrap();
        let (_, g) = by_hand.loss_and_gradients(&encoded).unwrap();
        by_hand.apply_gradients(&g, 0.01).unwrap();
        assert_eq!(by_hand, model);
    }

    #[test]
    fn empty_training_corpus_is_an_error() {
        assert!(train(small_config(Scheme::Lr), &[], &[], |_| {}).is_err());
        assert!(train(small_config(Scheme::Lr), &[vec![]], &[], |_| {}).is_err());
    }

    #[test]
    fn clipping_bounds_gradient_norm() {
        let m = init_model(small_config(Scheme::Lr), vocab(&["a", "b"]), vocab(&["x"])).unwrap();
        let enc = m.encode(&[ev("a", "x", Label::R), ev("b", "x", Label::L)]).unwrap();
        let (_, mut g) = m.loss_and_gradients(&enc).unwrap();
        let before = g.clip(1e-3);
        assert!(before > 1e-3);
        assert!((g.norm() - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let bad = [
            ModelConfig { embed_dim: 0, ..ModelConfig::default() },
            ModelConfig { lr: 0.0, ..ModelConfig::default() },
            ModelConfig { epochs: 0, ..ModelConfig::default() },
            ModelConfig { max_grad_norm: Some(-1.0), ..ModelConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
