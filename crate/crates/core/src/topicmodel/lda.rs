//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Each sweep visits every token in document order, removes its current
//! assignment from the counts and draws a new topic from
//!
//! ```text
//! p(z = k | rest) ∝ (n_dk[d][k] + α) · (n_kw[k][w] + β) / (n_k[k] + V·β)
//! ```
//!
//! The chain is a single sequential pass driven by a ChaCha8 generator, so
//! (corpus, K, α, β, sweeps, seed) determines the model bit for bit.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{IndexedCorpus, Vocabulary};
use crate::{Error, Result};

pub const MODEL_FORMAT: &str = "topicsurvey-lda";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means 50 / K.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig { k: 150, alpha: None, beta: 0.01, iterations: 1000, seed: 1 }
    }
}

impl LdaConfig {
    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > u16::MAX as usize {
            return Err(Error::Config(format!("topic count must be in 1..=65535, got {}", self.k)));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.alpha() > 0.0) || !(self.beta > 0.0) {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

/// Sampler state. Counts are stored word-major (`n_wk[w * K + k]`) so the
/// inner loop reads contiguous memory.
pub struct GibbsSampler<'a> {
    corpus: &'a IndexedCorpus,
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    n_wk: Vec<u32>,
    n_dk: Vec<u32>,
    n_k: Vec<u32>,
    z: Vec<Vec<u16>>,
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
    sweeps: usize,
    config: LdaConfig,
}

impl<'a> GibbsSampler<'a> {
    /// Validates the configuration and draws a uniform random initial
    /// assignment for every token.
    pub fn new(corpus: &'a IndexedCorpus, config: LdaConfig) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::Input("cannot train on an empty corpus".into()));
        }
        let (k, v) = (config.k, corpus.vocab_size);
        if k > corpus.total_tokens() {
            log::warn!("K = {k} exceeds the {} corpus tokens; the model will be degenerate", corpus.total_tokens());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut n_wk = vec![0u32; v * k];
        let mut n_dk = vec![0u32; corpus.len() * k];
        let mut n_k = vec![0u32; k];
        let mut z = Vec::with_capacity(corpus.len());
        for (d, doc) in corpus.docs.iter().enumerate() {
            let mut zd = Vec::with_capacity(doc.len());
            for &w in doc {
                if w as usize >= v {
                    return Err(Error::Input(format!("token index {w} outside vocabulary of {v}")));
                }
                let t = rng.random_range(0..k);
                n_wk[w as usize * k + t] += 1;
                n_dk[d * k + t] += 1;
                n_k[t] += 1;
                zd.push(t as u16);
            }
            z.push(zd);
        }
        Ok(GibbsSampler {
            corpus,
            k,
            v,
            alpha: config.alpha(),
            beta: config.beta,
            n_wk,
            n_dk,
            n_k,
            z,
            rng,
            cumulative: vec![0.0; k],
            sweeps: 0,
            config,
        })
    }

    /// One full pass over every token.
    pub fn sweep(&mut self) {
        let k = self.k;
        let v_beta = self.v as f64 * self.beta;
        let corpus = self.corpus;
        for (d, doc) in corpus.docs.iter().enumerate() {
            let dk = &mut self.n_dk[d * k..(d + 1) * k];
            for (i, &w) in doc.iter().enumerate() {
                let wk = &mut self.n_wk[w as usize * k..(w as usize + 1) * k];
                let old = self.z[d][i] as usize;
                dk[old] -= 1;
                wk[old] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (dk[t] as f64 + self.alpha) * (wk[t] as f64 + self.beta) / (self.n_k[t] as f64 + v_beta);
                    self.cumulative[t] = total;
                }
                let u = self.rng.random::<f64>() * total;
                let new = self.cumulative.partition_point(|&c| c <= u).min(k - 1);

                dk[new] += 1;
                wk[new] += 1;
                self.n_k[new] += 1;
                self.z[d][i] = new as u16;
            }
        }
        self.sweeps += 1;
    }

    pub fn run(&mut self, sweeps: usize) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_kw(&self, topic: usize, word: usize) -> u32 {
        self.n_wk[word * self.k + topic]
    }

    pub fn n_dk(&self, doc: usize, topic: usize) -> u32 {
        self.n_dk[doc * self.k + topic]
    }

    pub fn n_k(&self, topic: usize) -> u32 {
        self.n_k[topic]
    }

    pub fn assignments(&self) -> &[Vec<u16>] {
        &self.z
    }

    /// Snapshot of the current state as a model.
    pub fn to_model(&self, vocabulary: &Vocabulary) -> LdaModel {
        let (k, v) = (self.k, self.v);
        let mut n_kw = vec![0u32; k * v];
        for w in 0..v {
            for t in 0..k {
                n_kw[t * v + w] = self.n_wk[w * k + t];
            }
        }
        let mut config = self.config;
        config.alpha = Some(self.alpha);
        config.iterations = self.sweeps;
        LdaModel::from_counts(config, vocabulary.clone(), self.corpus.doc_ids.clone(), n_kw, self.n_dk.clone())
    }
}

/// Runs the configured number of sweeps and returns the final-state model.
pub fn train(corpus: &IndexedCorpus, vocabulary: &Vocabulary, config: LdaConfig) -> Result<LdaModel> {
    if vocabulary.len() != corpus.vocab_size {
        return Err(Error::Input("corpus was indexed against a different vocabulary".into()));
    }
    let mut sampler = GibbsSampler::new(corpus, config)?;
    sampler.run(config.iterations);
    Ok(sampler.to_model(vocabulary))
}

/// A trained model: hyperparameters plus topic-word and document-topic counts.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub config: LdaConfig,
    pub vocabulary: Vocabulary,
    pub doc_ids: Vec<String>,
    /// K × V, topic-major.
    n_kw: Vec<u32>,
    /// D × K, document-major.
    n_dk: Vec<u32>,
    n_k: Vec<u64>,
    doc_len: Vec<u64>,
}

impl LdaModel {
    pub fn from_counts(
        config: LdaConfig,
        vocabulary: Vocabulary,
        doc_ids: Vec<String>,
        n_kw: Vec<u32>,
        n_dk: Vec<u32>,
    ) -> Self {
        let (k, v) = (config.k, vocabulary.len());
        let n_k = (0..k).map(|t| n_kw[t * v..(t + 1) * v].iter().map(|&c| c as u64).sum()).collect();
        let doc_len = n_dk.chunks(k).map(|row| row.iter().map(|&c| c as u64).sum()).collect();
        LdaModel { config, vocabulary, doc_ids, n_kw, n_dk, n_k, doc_len }
    }

    pub fn k(&self) -> usize {
        self.config.k
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha()
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn num_docs(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn n_kw(&self, topic: usize, word: usize) -> u32 {
        self.n_kw[topic * self.vocab_size() + word]
    }

    pub fn n_dk(&self, doc: usize, topic: usize) -> u32 {
        self.n_dk[doc * self.k() + topic]
    }

    pub fn topic_total(&self, topic: usize) -> u64 {
        self.n_k[topic]
    }

    pub fn doc_len(&self, doc: usize) -> u64 {
        self.doc_len[doc]
    }

    /// φ̂[k][w] = (n_kw + β) / (n_k + V·β)
    pub fn phi(&self, topic: usize) -> Vec<f64> {
        let v = self.vocab_size();
        let denom = self.n_k[topic] as f64 + v as f64 * self.beta();
        self.n_kw[topic * v..(topic + 1) * v].iter().map(|&c| (c as f64 + self.beta()) / denom).collect()
    }

    pub fn phi_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.k()).map(|t| self.phi(t)).collect()
    }

    /// θ̂[d][k] = (n_dk + α) / (len_d + K·α)
    pub fn theta(&self, doc: usize) -> Vec<f64> {
        let k = self.k();
        let alpha = self.alpha();
        let denom = self.doc_len[doc] as f64 + k as f64 * alpha;
        self.n_dk[doc * k..(doc + 1) * k].iter().map(|&c| (c as f64 + alpha) / denom).collect()
    }

    /// The `n` most probable words of a topic; ties go to the lower
    /// vocabulary index.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<(String, f64)> {
        let phi = self.phi(topic);
        let mut order: Vec<usize> = (0..phi.len()).collect();
        order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
        order.into_iter().take(n).map(|w| (self.vocabulary.word(w).to_string(), phi[w])).collect()
    }

    /// Relabels topics so that old topic `perm[i]` becomes topic `i`.
    pub fn permute_topics(&self, perm: &[usize]) -> Result<LdaModel> {
        let k = self.k();
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Input("topic permutation is not a permutation of 0..K".into()));
        }
        let v = self.vocab_size();
        let mut n_kw = vec![0u32; k * v];
        for (new, &old) in perm.iter().enumerate() {
            n_kw[new * v..(new + 1) * v].copy_from_slice(&self.n_kw[old * v..(old + 1) * v]);
        }
        let mut n_dk = vec![0u32; self.n_dk.len()];
        for d in 0..self.num_docs() {
            for (new, &old) in perm.iter().enumerate() {
                n_dk[d * k + new] = self.n_dk[d * k + old];
            }
        }
        Ok(LdaModel::from_counts(self.config, self.vocabulary.clone(), self.doc_ids.clone(), n_kw, n_dk))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_json(path, &ModelFile::from(self))
    }

    pub fn load(path: &Path) -> Result<LdaModel> {
        crate::io::read_json::<ModelFile>(path)?.try_into()
    }
}

/// Persisted model. Count rows are stored sparsely as `[index, count]` pairs.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    iterations: usize,
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
    n_kw: Vec<Vec<(u32, u32)>>,
    n_dk: Vec<Vec<(u32, u32)>>,
}

fn sparse_rows(dense: &[u32], width: usize) -> Vec<Vec<(u32, u32)>> {
    if width == 0 {
        return Vec::new();
    }
    dense
        .chunks(width)
        .map(|row| row.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as u32, c)).collect())
        .collect()
}

fn dense_rows(rows: &[Vec<(u32, u32)>], width: usize) -> Result<Vec<u32>> {
    let mut out = vec![0u32; rows.len() * width];
    for (r, row) in rows.iter().enumerate() {
        for &(i, c) in row {
            let i = i as usize;
            if i >= width {
                return Err(Error::Input(format!("model count index {i} out of range {width}")));
            }
            out[r * width + i] = c;
        }
    }
    Ok(out)
}

impl From<&LdaModel> for ModelFile {
    fn from(m: &LdaModel) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            k: m.k(),
            alpha: m.alpha(),
            beta: m.beta(),
            seed: m.config.seed,
            iterations: m.config.iterations,
            vocabulary: m.vocabulary.clone(),
            doc_ids: m.doc_ids.clone(),
            n_kw: sparse_rows(&m.n_kw, m.vocab_size()),
            n_dk: sparse_rows(&m.n_dk, m.k()),
        }
    }
}

impl TryFrom<ModelFile> for LdaModel {
    type Error = Error;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(Error::Input(format!("unsupported model file {} v{}", f.format, f.version)));
        }
        if f.n_kw.len() != f.k || f.n_dk.len() != f.doc_ids.len() {
            return Err(Error::Input("model count matrices have the wrong shape".into()));
        }
        let n_kw = dense_rows(&f.n_kw, f.vocabulary.len())?;
        let n_dk = dense_rows(&f.n_dk, f.k)?;
        let config = LdaConfig { k: f.k, alpha: Some(f.alpha), beta: f.beta, iterations: f.iterations, seed: f.seed };
        Ok(LdaModel::from_counts(config, f.vocabulary, f.doc_ids, n_kw, n_dk))
    }
}
