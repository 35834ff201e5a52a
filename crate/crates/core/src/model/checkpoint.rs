//! Versioned binary checkpoint: config, vocabulary, named parameter
//! tensors, and optional trainer state. Save -> load -> save reproduces
//! identical bytes.

use super::params::{GeneratorParams, SelectorParams, VqgModel};
use crate::corpus::{EmbeddingMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::ngram::BigramStats;
use crate::numerics::{AdamState, LstmParams, Tensor};
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"VQGCKPT\0";
const VERSION: u32 = 1;

/// Optimizer state carried so resumed training reproduces the losses a
/// continuous run would have produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerState {
    pub adam: AdamState,
    pub next_epoch: u64,
}

#[derive(Debug, Clone)]
pub struct Checkpoint {
    /// Full resolved run configuration, stored as JSON for provenance.
    pub config: serde_json::Value,
    pub vocab: Vocabulary,
    pub model: VqgModel,
    /// Bigram counts of the training-question corpus, so generation does
    /// not depend on having the training file at hand.
    pub bigram: Option<BigramStats>,
    pub trainer: Option<TrainerState>,
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> Result<()> {
    write_u64(w, bytes.len() as u64)?;
    w.write_all(bytes)?;
    Ok(())
}

fn write_tensor<W: Write>(w: &mut W, name: &str, t: &Tensor) -> Result<()> {
    write_bytes(w, name.as_bytes())?;
    write_u64(w, t.shape().len() as u64)?;
    for &d in t.shape() {
        write_u64(w, d as u64)?;
    }
    let mut buf = Vec::with_capacity(t.len() * 8);
    for &v in t.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_bytes<R: Read>(r: &mut R) -> Result<Vec<u8>> {
    let len = read_u64(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_tensor<R: Read>(r: &mut R) -> Result<(String, Tensor)> {
    let name = String::from_utf8(read_bytes(r)?)
        .map_err(|_| Error::config("checkpoint tensor name is not UTF-8"))?;
    let ndim = read_u64(r)? as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(read_u64(r)? as usize);
    }
    let len: usize = shape.iter().product();
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((name, Tensor::from_vec(&shape, data)?))
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;

    let config = serde_json::to_vec(&ckpt.config)
        .map_err(|e| Error::config(format!("serializing checkpoint config: {e}")))?;
    write_bytes(&mut w, &config)?;
    let vocab = serde_json::to_vec(&ckpt.vocab)
        .map_err(|e| Error::config(format!("serializing vocabulary: {e}")))?;
    write_bytes(&mut w, &vocab)?;

    write_u64(&mut w, ckpt.model.hidden_size as u64)?;
    let flags: Vec<u8> = ckpt
        .model
        .embedding
        .pretrained
        .iter()
        .map(|&b| b as u8)
        .collect();
    write_bytes(&mut w, &flags)?;

    let params = ckpt.model.params();
    write_u64(&mut w, params.len() as u64)?;
    for (name, tensor) in params {
        write_tensor(&mut w, name, tensor)?;
    }

    match &ckpt.bigram {
        None => w.write_all(&[0u8])?,
        Some(stats) => {
            w.write_all(&[1u8])?;
            w.write_all(&stats.discount.to_le_bytes())?;
            write_u64(&mut w, stats.vocab_size as u64)?;
            for &c in &stats.unigram {
                write_u64(&mut w, c)?;
            }
            let mut triplets: Vec<(usize, usize, u64)> = stats
                .bigram
                .iter()
                .map(|(&(p, q), &c)| (p, q, c))
                .collect();
            triplets.sort_unstable();
            write_u64(&mut w, triplets.len() as u64)?;
            for (p, q, c) in triplets {
                write_u64(&mut w, p as u64)?;
                write_u64(&mut w, q as u64)?;
                write_u64(&mut w, c)?;
            }
        }
    }

    match &ckpt.trainer {
        None => w.write_all(&[0u8])?,
        Some(state) => {
            w.write_all(&[1u8])?;
            write_u64(&mut w, state.adam.step)?;
            write_u64(&mut w, state.next_epoch)?;
            write_u64(&mut w, state.adam.m.len() as u64)?;
            for (i, t) in state.adam.m.iter().enumerate() {
                write_tensor(&mut w, &format!("adam.m.{i}"), t)?;
            }
            for (i, t) in state.adam.v.iter().enumerate() {
                write_tensor(&mut w, &format!("adam.v.{i}"), t)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn take(map: &mut BTreeMap<String, Tensor>, name: &str) -> Result<Tensor> {
    map.remove(name)
        .ok_or_else(|| Error::config(format!("checkpoint missing tensor `{name}`")))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::config(format!(
            "not a checkpoint file: {}",
            path.display()
        )));
    }
    let mut version = [0u8; 4];
    r.read_exact(&mut version)?;
    let version = u32::from_le_bytes(version);
    if version != VERSION {
        return Err(Error::config(format!(
            "unsupported checkpoint version {version}"
        )));
    }

    let config: serde_json::Value = serde_json::from_slice(&read_bytes(&mut r)?)
        .map_err(|e| Error::config(format!("checkpoint config: {e}")))?;
    let mut vocab: Vocabulary = serde_json::from_slice(&read_bytes(&mut r)?)
        .map_err(|e| Error::config(format!("checkpoint vocabulary: {e}")))?;
    vocab.rebuild_index();

    let hidden_size = read_u64(&mut r)? as usize;
    let pretrained: Vec<bool> = read_bytes(&mut r)?.into_iter().map(|b| b != 0).collect();

    let count = read_u64(&mut r)? as usize;
    let mut tensors = BTreeMap::new();
    for _ in 0..count {
        let (name, tensor) = read_tensor(&mut r)?;
        tensors.insert(name, tensor);
    }
    let model = VqgModel {
        embedding: EmbeddingMatrix {
            weights: take(&mut tensors, "embedding")?,
            pretrained,
        },
        selector: SelectorParams {
            lstm: LstmParams {
                weight: take(&mut tensors, "selector.lstm.weight")?,
                bias: take(&mut tensors, "selector.lstm.bias")?,
            },
            proj_weight: take(&mut tensors, "selector.proj.weight")?,
            proj_bias: take(&mut tensors, "selector.proj.bias")?,
        },
        generator: GeneratorParams {
            encoder: LstmParams {
                weight: take(&mut tensors, "generator.encoder.weight")?,
                bias: take(&mut tensors, "generator.encoder.bias")?,
            },
            corr_weight: take(&mut tensors, "generator.correlation.weight")?,
            corr_bias: take(&mut tensors, "generator.correlation.bias")?,
            corr_slope: take(&mut tensors, "generator.correlation.slope")?,
            decoder: LstmParams {
                weight: take(&mut tensors, "generator.decoder.weight")?,
                bias: take(&mut tensors, "generator.decoder.bias")?,
            },
            proj_weight: take(&mut tensors, "generator.proj.weight")?,
            proj_bias: take(&mut tensors, "generator.proj.bias")?,
        },
        hidden_size,
    };
    if model.vocab_size() != vocab.size() {
        return Err(Error::config(format!(
            "checkpoint embedding has {} columns but the vocabulary has {} words",
            model.vocab_size(),
            vocab.size()
        )));
    }

    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let bigram = if flag[0] == 1 {
        let mut d = [0u8; 8];
        r.read_exact(&mut d)?;
        let discount = f64::from_le_bytes(d);
        let k = read_u64(&mut r)? as usize;
        let mut unigram = Vec::with_capacity(k);
        for _ in 0..k {
            unigram.push(read_u64(&mut r)?);
        }
        let n = read_u64(&mut r)? as usize;
        let mut stats = BigramStats {
            unigram,
            bigram: std::collections::HashMap::with_capacity(n),
            successors: vec![0; k],
            predecessors: vec![0; k],
            distinct_bigrams: 0,
            discount,
            vocab_size: k,
        };
        for _ in 0..n {
            let p = read_u64(&mut r)? as usize;
            let q = read_u64(&mut r)? as usize;
            let c = read_u64(&mut r)?;
            if p >= k || q >= k {
                return Err(Error::config("bigram id out of vocabulary range".to_string()));
            }
            stats.bigram.insert((p, q), c);
            stats.successors[p] += 1;
            stats.predecessors[q] += 1;
            stats.distinct_bigrams += 1;
        }
        Some(stats)
    } else {
        None
    };

    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let trainer = if flag[0] == 1 {
        let step = read_u64(&mut r)?;
        let next_epoch = read_u64(&mut r)?;
        let n = read_u64(&mut r)? as usize;
        let mut m = Vec::with_capacity(n);
        for _ in 0..n {
            m.push(read_tensor(&mut r)?.1);
        }
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(read_tensor(&mut r)?.1);
        }
        Some(TrainerState {
            adam: AdamState { step, m, v },
            next_epoch,
        })
    } else {
        None
    };

    Ok(Checkpoint {
        config,
        vocab,
        model,
        bigram,
        trainer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn sample_checkpoint() -> Checkpoint {
        let vocab = Vocabulary::build(&["what color is the car".to_string()], 1).unwrap();
        let mut rng = stream_rng(3, "init");
        let embedding = EmbeddingMatrix::random(vocab.size(), &mut rng);
        let model = VqgModel::init(embedding, 8, &mut rng);
        let adam = AdamState::new(
            &model
                .params()
                .iter()
                .map(|(_, t)| *t)
                .collect::<Vec<&Tensor>>(),
        );
        let corpus = vec![vocab.encode_text("what color is the car")];
        let stats = crate::ngram::count_bigrams(&corpus, vocab.size(), 0.75).unwrap();
        Checkpoint {
            config: serde_json::json!({"seed": 7, "beta": 0.25}),
            vocab,
            model,
            bigram: Some(stats),
            trainer: Some(TrainerState {
                adam,
                next_epoch: 3,
            }),
        }
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        save_checkpoint(&ckpt, &p1).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        save_checkpoint(&loaded, &p2).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        let b2 = std::fs::read(&p2).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn roundtrip_preserves_model_and_vocab() {
        let ckpt = sample_checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        save_checkpoint(&ckpt, &p).unwrap();
        let loaded = load_checkpoint(&p).unwrap();
        assert_eq!(loaded.model, ckpt.model);
        assert_eq!(loaded.vocab, ckpt.vocab);
        assert_eq!(loaded.config, ckpt.config);
        assert_eq!(loaded.trainer, ckpt.trainer);
        let (a, b) = (loaded.bigram.unwrap(), ckpt.bigram.unwrap());
        assert_eq!(a.bigram, b.bigram);
        assert_eq!(a.unigram, b.unigram);
        assert_eq!(a.successors, b.successors);
        assert_eq!(a.distinct_bigrams, b.distinct_bigrams);
        // rebuilt reverse index still resolves words
        assert_eq!(loaded.vocab.id("car"), ckpt.vocab.id("car"));
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk");
        std::fs::write(&p, b"not a checkpoint").unwrap();
        assert!(load_checkpoint(&p).is_err());
    }
}
