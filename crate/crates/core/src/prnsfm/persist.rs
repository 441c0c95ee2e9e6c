//! Model container.
//!
//! ```text
//! PRNSFM-MODEL\n
//! version=1\n
//! key=value\n ...          model configuration, tensor count, vocab byte length
//! \n                       end of header
//! <vocabulary text>        exactly vocab_bytes bytes
//! per tensor, in PrnsfmModel::tensor_names order:
//!   rows: u64 LE, cols: u64 LE, rows*cols f64 LE (row-major)
//! sha256 of all preceding bytes (32 bytes)
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};

use sha2::{Digest, Sha256};

use super::{Embeddings, ModelConfig, ModelError, PrnsfmModel};
use crate::frames::{InputMode, Vocabulary};
use crate::nn::{Gate, LstmParams, Matrix, SoftmaxParams};

pub const MODEL_MAGIC: &str = "PRNSFM-MODEL";
pub const MODEL_VERSION: u32 = 1;

pub fn save_model<W: Write>(model: &PrnsfmModel, mut sink: W) -> Result<(), ModelError> {
    let cfg = model.config();
    let vocab_text = model.vocab().to_text();
    let tensors = model.tensors();
    let mut buf: Vec<u8> = Vec::new();
    let header = format!(
        "{MODEL_MAGIC}\nversion={MODEL_VERSION}\nmode={}\nword_dim={}\nlabel_dim={}\njoint_dim={}\nhidden={}\nseed={}\ninit_range={}\nvocab_checksum={}\ntensors={}\nvocab_bytes={}\n\n",
        cfg.mode,
        cfg.word_dim,
        cfg.label_dim,
        cfg.joint_dim,
        cfg.hidden_size(),
        cfg.seed,
        cfg.init_range,
        model.vocab().checksum(),
        tensors.len(),
        vocab_text.len(),
    );
    buf.extend_from_slice(header.as_bytes());
    buf.extend_from_slice(vocab_text.as_bytes());
    for t in tensors {
        buf.extend_from_slice(&(t.rows() as u64).to_le_bytes());
        buf.extend_from_slice(&(t.cols() as u64).to_le_bytes());
        for v in t.as_slice() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    sink.write_all(&buf)?;
    sink.write_all(&digest)?;
    sink.flush()?;
    Ok(())
}

pub fn load_model<R: Read>(source: R) -> Result<PrnsfmModel, ModelError> {
    let mut bytes = Vec::new();
    let mut source = source;
    source.read_to_end(&mut bytes)?;
    parse(&bytes)
}

/// Loads a model and checks that it was trained against `vocab`.
pub fn load_model_checked<R: Read>(source: R, vocab: &Vocabulary) -> Result<PrnsfmModel, ModelError> {
    let model = load_model(source)?;
    let (ours, theirs) = (model.vocab().checksum(), vocab.checksum());
    if ours != theirs {
        return Err(ModelError::Checksum {
            model: ours,
            vocabulary: theirs,
        });
    }
    Ok(model)
}

fn format_err(msg: impl Into<String>) -> ModelError {
    ModelError::Format(msg.into())
}

fn parse(bytes: &[u8]) -> Result<PrnsfmModel, ModelError> {
    if !bytes.starts_with(MODEL_MAGIC.as_bytes()) {
        return Err(format_err("not a model file"));
    }
    if bytes.len() < 32 {
        return Err(format_err("truncated"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(format_err("truncated or corrupted (content hash mismatch)"));
    }

    let header_end = body
        .windows(2)
        .position(|w| w == b"\n\n")
        .ok_or_else(|| format_err("unterminated header"))?;
    let header = std::str::from_utf8(&body[..header_end]).map_err(|_| format_err("header is not UTF-8"))?;
    let mut lines = header.lines();
    lines.next();
    let kv: HashMap<&str, &str> = lines.filter_map(|l| l.split_once('=')).collect();
    let get = |k: &str| {
        kv.get(k)
            .copied()
            .ok_or_else(|| format_err(format!("missing header key {k}")))
    };
    let num = |k: &str| -> Result<usize, ModelError> {
        get(k)?.parse().map_err(|_| format_err(format!("bad value for {k}")))
    };

    let version: u32 = get("version")?.parse().map_err(|_| format_err("bad version"))?;
    if version != MODEL_VERSION {
        return Err(format_err(format!("unsupported version {version}")));
    }
    let mode: InputMode = get("mode")?.parse().map_err(|e: String| format_err(e))?;
    let config = ModelConfig {
        mode,
        word_dim: num("word_dim")?,
        label_dim: num("label_dim")?,
        joint_dim: num("joint_dim")?,
        seed: get("seed")?.parse().map_err(|_| format_err("bad seed"))?,
        init_range: get("init_range")?.parse().map_err(|_| format_err("bad init_range"))?,
    };
    let vocab_len = num("vocab_bytes")?;
    let tensor_count = num("tensors")?;

    let mut pos = header_end + 2;
    let vocab_bytes = body
        .get(pos..pos + vocab_len)
        .ok_or_else(|| format_err("truncated vocabulary"))?;
    let vocab = Vocabulary::read(vocab_bytes)?;
    let stored = get("vocab_checksum")?;
    if vocab.checksum() != stored {
        return Err(ModelError::Checksum {
            model: stored.to_string(),
            vocabulary: vocab.checksum(),
        });
    }
    pos += vocab_len;

    let mut tensors = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let rows = read_u64(body, &mut pos)? as usize;
        let cols = read_u64(body, &mut pos)? as usize;
        let n = rows.checked_mul(cols).ok_or_else(|| format_err("tensor too large"))?;
        let raw = body
            .get(pos..pos + n * 8)
            .ok_or_else(|| format_err("truncated tensor data"))?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        pos += n * 8;
        tensors.push(Matrix::from_vec(rows, cols, data));
    }
    if pos != body.len() {
        return Err(format_err("trailing bytes after tensors"));
    }

    assemble(config, vocab, tensors)
}

fn read_u64(body: &[u8], pos: &mut usize) -> Result<u64, ModelError> {
    let raw = body
        .get(*pos..*pos + 8)
        .ok_or_else(|| format_err("truncated tensor header"))?;
    *pos += 8;
    Ok(u64::from_le_bytes(raw.try_into().expect("8 bytes")))
}

fn assemble(config: ModelConfig, vocab: Vocabulary, tensors: Vec<Matrix>) -> Result<PrnsfmModel, ModelError> {
    let n_emb = match config.mode {
        InputMode::Joint => 1,
        InputMode::Separate => 2,
    };
    if tensors.len() != n_emb + 14 {
        return Err(format_err(format!(
            "expected {} tensors, found {}",
            n_emb + 14,
            tensors.len()
        )));
    }
    let d = config.input_size();
    let v = vocab.num_units();
    let mut it = tensors.into_iter();
    let mut next = |shape: (usize, usize), name: &str| -> Result<Matrix, ModelError> {
        let t = it.next().expect("counted above");
        if t.shape() != shape {
            return Err(format_err(format!(
                "{name} has shape {:?}, expected {shape:?}",
                t.shape()
            )));
        }
        Ok(t)
    };
    let embeddings = match config.mode {
        InputMode::Joint => Embeddings::Joint(next((v, config.joint_dim), "embedding.units")?),
        InputMode::Separate => Embeddings::Separate {
            words: next((vocab.num_words(), config.word_dim), "embedding.words")?,
            labels: next((vocab.num_labels(), config.label_dim), "embedding.labels")?,
        },
    };
    let mut gate = |name: &str| -> Result<Gate, ModelError> {
        Ok(Gate {
            w: next((d, d), name)?,
            u: next((d, d), name)?,
            b: next((1, d), name)?,
        })
    };
    let lstm = LstmParams {
        input_gate: gate("lstm.input")?,
        candidate: gate("lstm.candidate")?,
        forget_gate: gate("lstm.forget")?,
        output_gate: gate("lstm.output")?,
    };
    let softmax = SoftmaxParams {
        w: next((d, v), "softmax.w")?,
        b: next((1, v), "softmax.b")?,
    };
    Ok(PrnsfmModel::from_parts(config, vocab, embeddings, lstm, softmax))
}
