//! Binary model container.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "LSTMRM" '1'                      magic + version byte
//! u8   scheme (0 lr, 1 msd, 2 mslr)
//! u32  embed_dim, u32 hidden_dim
//! u64  src_vocab_size, u64 tgt_vocab_size   (configured maxima)
//! f64  lr, u32 epochs, u64 seed
//! u8   flags (bit 0 shuffle, bit 1 peepholes)
//! f64  max_grad_norm (0 = off)
//! vocab source, vocab target:  u32 count, then per token u32 byte length + UTF-8
//! f64 weights, in order:
//!   source embeddings   (source vocab × embed, one row per id)
//!   target embeddings   (target vocab × embed)
//!   for gate in input, forget, cell, output:
//!     input weights (hidden × embed, row-major), recurrent weights (hidden × hidden), bias (hidden)
//!   peepholes input, forget, output (hidden each)
//!   output matrix (labels × hidden, row-major)
//! ```
//!
//! Nothing may follow the last weight.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{ModelConfig, ReorderingModel};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::nn::Params;
use crate::orientation::Scheme;

pub const MAGIC: &[u8; 6] = b"LSTMRM";
pub const VERSION: u8 = b'1';

const FLAG_SHUFFLE: u8 = 1;
const FLAG_PEEPHOLES: u8 = 2;

fn scheme_code(s: Scheme) -> u8 {
    match s {
        Scheme::Lr => 0,
        Scheme::Msd => 1,
        Scheme::Mslr => 2,
    }
}

pub fn write_model<W: Write>(model: &ReorderingModel, mut out: W) -> std::io::Result<()> {
    let c = &model.config;
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION, scheme_code(c.scheme)])?;
    out.write_all(&(c.embed_dim as u32).to_le_bytes())?;
    out.write_all(&(c.hidden_dim as u32).to_le_bytes())?;
    out.write_all(&(c.src_vocab_size as u64).to_le_bytes())?;
    out.write_all(&(c.tgt_vocab_size as u64).to_le_bytes())?;
    out.write_all(&c.lr.to_le_bytes())?;
    out.write_all(&(c.epochs as u32).to_le_bytes())?;
    out.write_all(&c.seed.to_le_bytes())?;
    let flags = if c.shuffle { FLAG_SHUFFLE } else { 0 } | if c.peepholes { FLAG_PEEPHOLES } else { 0 };
    out.write_all(&[flags])?;
    out.write_all(&c.max_grad_norm.unwrap_or(0.0).to_le_bytes())?;
    for vocab in [&model.src_vocab, &model.tgt_vocab] {
        out.write_all(&(vocab.len() as u32).to_le_bytes())?;
        for tok in vocab.tokens() {
            out.write_all(&(tok.len() as u32).to_le_bytes())?;
            out.write_all(tok.as_bytes())?;
        }
    }
    for t in model.tensors() {
        for v in t {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_model(model: &ReorderingModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_model(model, &mut buf).expect("writing to a Vec cannot fail");
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ReorderingModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

struct Reader<'a> {
    bytes: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        if self.bytes.len() < n {
            return Err(Error::Truncated(what));
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn array<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn u8(&mut self, what: &'static str) -> Result<u8> {
        Ok(self.array::<1>(what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32> {
        self.array(what).map(u32::from_le_bytes)
    }

    fn u64(&mut self, what: &'static str) -> Result<u64> {
        self.array(what).map(u64::from_le_bytes)
    }

    fn f64(&mut self, what: &'static str) -> Result<f64> {
        self.array(what).map(f64::from_le_bytes)
    }

    fn vocab(&mut self) -> Result<Vocabulary> {
        let count = self.u32("vocabulary size")? as usize;
        // every token needs at least its length prefix
        if count > self.bytes.len() / 4 {
            return Err(Error::Truncated("vocabulary"));
        }
        let mut tokens = Vec::with_capacity(count);
        for _ in 0..count {
            let len = self.u32("token length")? as usize;
            let raw = self.take(len, "token")?;
            let tok = std::str::from_utf8(raw).map_err(|_| Error::Format("token is not UTF-8".into()))?;
            tokens.push(tok.to_owned());
        }
        Vocabulary::from_tokens(tokens).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn read_model(bytes: &[u8]) -> Result<ReorderingModel> {
    let mut r = Reader { bytes };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::Format("bad magic, not an LSTMRM model".into()));
    }
    let version = r.u8("version")?;
    if version != VERSION {
        return Err(Error::Version(version as char));
    }
    let scheme = match r.u8("scheme")? {
        0 => Scheme::Lr,
        1 => Scheme::Msd,
        2 => Scheme::Mslr,
        s => return Err(Error::Format(format!("unknown scheme code {s}"))),
    };
    let embed_dim = r.u32("embed_dim")? as usize;
    let hidden_dim = r.u32("hidden_dim")? as usize;
    let src_vocab_size = usize::try_from(r.u64("src_vocab_size")?)
        .map_err(|_| Error::Format("source vocabulary size overflows".into()))?;
    let tgt_vocab_size = usize::try_from(r.u64("tgt_vocab_size")?)
        .map_err(|_| Error::Format("target vocabulary size overflows".into()))?;
    let lr = r.f64("lr")?;
    let epochs = r.u32("epochs")? as usize;
    let seed = r.u64("seed")?;
    let flags = r.u8("flags")?;
    if flags & !(FLAG_SHUFFLE | FLAG_PEEPHOLES) != 0 {
        return Err(Error::Format(format!("unknown flag bits {flags:#04x}")));
    }
    let clip = r.f64("max_grad_norm")?;
    let config = ModelConfig {
        scheme,
        embed_dim,
        hidden_dim,
        src_vocab_size,
        tgt_vocab_size,
        lr,
        epochs,
        seed,
        shuffle: flags & FLAG_SHUFFLE != 0,
        peepholes: flags & FLAG_PEEPHOLES != 0,
        max_grad_norm: (clip != 0.0).then_some(clip),
    };
    config.validate().map_err(|e| Error::Format(e.to_string()))?;
    let src_vocab = r.vocab()?;
    let tgt_vocab = r.vocab()?;

    let weights = |rows: usize, cols: usize| rows.checked_mul(cols);
    let h = hidden_dim;
    let expected = [
        weights(src_vocab.len(), embed_dim),
        weights(tgt_vocab.len(), embed_dim),
        weights(4 * h, embed_dim + h + 1),
        weights(3, h),
        weights(scheme.label_count(), h),
    ]
    .into_iter()
    .try_fold(0usize, |acc, n| n.and_then(|n| acc.checked_add(n)))
    .and_then(|n| n.checked_mul(8))
    .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if r.bytes.len() < expected {
        return Err(Error::Truncated("weights"));
    }
    if r.bytes.len() > expected {
        return Err(Error::Format(format!(
            "{} trailing bytes after weights",
            r.bytes.len() - expected
        )));
    }

    let mut model = ReorderingModel::zeros(config, src_vocab, tgt_vocab).map_err(|e| Error::Format(e.to_string()))?;
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = r.f64("weights")?;
        }
    }
    Ok(model)
}
