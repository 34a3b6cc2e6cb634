//! Number-of-topics selection metrics.
//!
//! * Arun et al. (2010): symmetric KL divergence between the normalized
//!   singular values of the topic-word matrix and the normalized,
//!   length-weighted topic proportions. Lower is better.
//! * Cao et al. (2009): mean pairwise cosine similarity between topics.
//!   Lower is better.
//! * Deveaud et al. (2014): mean pairwise Jensen-Shannon divergence between
//!   topics, in nats. Higher is better.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lda::{train, LdaConfig, LdaModel};
use super::vocab::{IndexedCorpus, Vocabulary};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelectionRow {
    pub k: usize,
    pub arun: f64,
    /// `None` when K = 1 (no topic pairs).
    pub cao: Option<f64>,
    pub deveaud: Option<f64>,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(&pi, _)| pi > 0.0).map(|(&pi, &qi)| pi * (pi / qi.max(f64::MIN_POSITIVE)).ln()).sum()
}

/// Jensen-Shannon divergence in nats, in [0, ln 2].
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    (0.5 * kl(p, &m) + 0.5 * kl(q, &m)).clamp(0.0, std::f64::consts::LN_2)
}

fn mean_pairwise(rows: &[Vec<f64>], f: impl Fn(&[f64], &[f64]) -> f64) -> Option<f64> {
    let k = rows.len();
    if k < 2 {
        return None;
    }
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += f(&rows[i], &rows[j]);
        }
    }
    Some(sum / (k * (k - 1) / 2) as f64)
}

pub fn cao2009(phi: &[Vec<f64>]) -> Option<f64> {
    mean_pairwise(phi, cosine)
}

pub fn deveaud2014(phi: &[Vec<f64>]) -> Option<f64> {
    mean_pairwise(phi, jensen_shannon)
}

fn normalize_desc(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = x.max(f64::MIN_POSITIVE);
    }
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Singular values of a K × V matrix via the eigenvalues of its K × K Gram
/// matrix, sorted descending.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let k = rows.len();
    let gram = DMatrix::<f64>::from_fn(k, k, |i, j| rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum());
    let eig = SymmetricEigen::new(gram);
    let mut sv: Vec<f64> = eig.eigenvalues.iter().map(|&e: &f64| e.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn arun2010(phi: &[Vec<f64>], thetas: &[Vec<f64>], doc_lengths: &[f64]) -> f64 {
    let k = phi.len();
    let cm1 = normalize_desc(singular_values(phi));
    let mut cm2 = vec![0.0; k];
    for (theta, &len) in thetas.iter().zip(doc_lengths) {
        for (c, t) in cm2.iter_mut().zip(theta) {
            *c += len * t;
        }
    }
    let cm2 = normalize_desc(cm2);
    kl(&cm1, &cm2) + kl(&cm2, &cm1)
}

pub fn model_metrics(model: &LdaModel) -> KSelectionRow {
    let phi = model.phi_matrix();
    let thetas: Vec<Vec<f64>> = (0..model.num_docs()).map(|d| model.theta(d)).collect();
    let lens: Vec<f64> = (0..model.num_docs()).map(|d| model.doc_len(d) as f64).collect();
    KSelectionRow { k: model.k(), arun: arun2010(&phi, &thetas, &lens), cao: cao2009(&phi), deveaud: deveaud2014(&phi) }
}

/// Seed used for the candidate with `k` topics.
pub fn derived_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains one model per candidate (in parallel, each with its own derived
/// seed) and reports the three metrics per K, in candidate order.
pub fn select_k(
    corpus: &IndexedCorpus,
    vocabulary: &Vocabulary,
    candidates: &[usize],
    base: LdaConfig,
) -> Result<Vec<KSelectionRow>> {
    if candidates.is_empty() {
        return Err(Error::Config("no candidate topic counts given".into()));
    }
    candidates
        .par_iter()
        .map(|&k| {
            let config = LdaConfig { k, seed: derived_seed(base.seed, k), ..base };
            train(corpus, vocabulary, config).map(|m| model_metrics(&m))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows() {
        let phi = vec![vec![0.2, 0.3, 0.5], vec![0.2, 0.3, 0.5]];
        assert!((cao2009(&phi).unwrap() - 1.0).abs() < 1e-12);
        assert!(deveaud2014(&phi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn disjoint_supports() {
        let phi = vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.0, 0.0, 0.5, 0.5]];
        assert_eq!(cao2009(&phi).unwrap(), 0.0);
        assert!((deveaud2014(&phi).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn single_topic_pairwise_not_applicable() {
        let phi = vec![vec![0.5, 0.5]];
        assert_eq!(cao2009(&phi), None);
        assert_eq!(deveaud2014(&phi), None);
        assert!(arun2010(&phi, &[vec![1.0]], &[3.0]).abs() < 1e-12);
    }

    #[test]
    fn singular_values_of_diagonal() {
        let sv = singular_values(&[vec![3.0, 0.0, 0.0], vec![0.0, 4.0, 0.0]]);
        assert!((sv[0] - 4.0).abs() < 1e-12 && (sv[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn jsd_bounds_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let mut p: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
            let mut q: Vec<f64> = (0..8).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random() }).collect();
            q[0] += 1e-3;
            let (sp, sq) = (p.iter().sum::<f64>(), q.iter().sum::<f64>());
            p.iter_mut().for_each(|x| *x /= sp);
            q.iter_mut().for_each(|x| *x /= sq);
            let j = jensen_shannon(&p, &q);
            assert!((0.0..=std::f64::consts::LN_2).contains(&j));
            assert!((j - jensen_shannon(&q, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_candidates_rejected() {
        let corpus = IndexedCorpus { doc_ids: vec!["a".into()], docs: vec![vec![0]], vocab_size: 1 };
        let vocab = Vocabulary::from_words(vec!["x".into()], vec![4]).unwrap();
        assert!(select_k(&corpus, &vocab, &[], LdaConfig::default()).is_err());
    }
}
