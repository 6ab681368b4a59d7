//! Synthetic corpus whose labels depend on the previous event, not on the
//! current word pair.
//!
//! Each sentence has 5 to 15 events. Source words come from a 20-word
//! vocabulary: position by position, the trigger word with probability 1/2,
//! otherwise one of 19 filler words uniformly. Target words are uniform over
//! 20 words. Event `i > 0` is `R` when event `i − 1` has the trigger as its
//! source word and `L` otherwise; event 0 is `R`.
//!
//! Randomness is ChaCha8 stream [`SYNTH_STREAM`] of the seed. Training
//! sentences are drawn first, held-out sentences continue the same stream.

use rand::Rng;

use crate::model::seeded_rng;
use crate::orientation::{Label, ReorderingEvent};

pub const SYNTH_STREAM: u64 = 2;
pub const TRIGGER: &str = "TRIGGER";
pub const SOURCE_WORDS: usize = 20;
pub const TARGET_WORDS: usize = 20;
pub const MIN_LEN: usize = 5;
pub const MAX_LEN: usize = 15;
pub const TRIGGER_PROB: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub train: Vec<Vec<ReorderingEvent>>,
    pub heldout: Vec<Vec<ReorderingEvent>>,
}

pub fn trigger_corpus(seed: u64, train: usize, heldout: usize) -> SynthCorpus {
    let mut rng = seeded_rng(seed, SYNTH_STREAM);
    let mut sentence = || {
        let len = rng.gen_range(MIN_LEN..=MAX_LEN);
        let mut events = Vec::with_capacity(len);
        let mut prev_trigger = false;
        for i in 0..len {
            let src = if rng.gen_bool(TRIGGER_PROB) {
                TRIGGER.to_owned()
            } else {
                format!("s{}", rng.gen_range(1..SOURCE_WORDS))
            };
            let tgt = format!("t{}", rng.gen_range(0..TARGET_WORDS));
            let label = if i == 0 || prev_trigger { Label::R } else { Label::L };
            prev_trigger = src == TRIGGER;
            events.push(ReorderingEvent::new(src, tgt, label));
        }
        events
    };
    let train = (0..train).map(|_| sentence()).collect();
    let heldout = (0..heldout).map(|_| sentence()).collect();
    SynthCorpus { train, heldout }
}
