use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::{Error, Result, StateCode};

/// Smallest sample with a reportable p-value.
pub const MIN_SAMPLE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Spearman,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Pearson => "pearson",
            Method::Spearman => "spearman",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub coefficient: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: Method,
}

/// How p-values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PValueMethod {
    /// t = r·sqrt((n−2)/(1−r²)) on n−2 degrees of freedom.
    #[default]
    TApprox,
    /// Seeded Monte-Carlo permutation test, two-sided.
    Permutation { permutations: usize, seed: u64 },
}

/// Largest permutation count accepted.
pub const MAX_PERMUTATIONS: usize = 10_000;

fn product_moment(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of r under the t approximation.
pub fn t_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if df <= 0.0 {
        return 1.0;
    }
    let denom = 1.0 - r * r;
    if denom <= 0.0 {
        return 0.0;
    }
    let t = r.abs() * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t)).clamp(0.0, 1.0)
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Input(format!("correlation inputs differ in length ({} vs {})", x.len(), y.len())));
    }
    if x.len() < MIN_SAMPLE {
        return Err(Error::InsufficientData { needed: MIN_SAMPLE, have: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("correlation inputs must be finite".into()));
    }
    Ok(())
}

fn permutation_p(x: &[f64], y: &[f64], observed: f64, permutations: usize, seed: u64) -> Result<f64> {
    if permutations == 0 || permutations > MAX_PERMUTATIONS {
        return Err(Error::Config(format!("permutation count must be in 1..={MAX_PERMUTATIONS}, got {permutations}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = y.to_vec();
    let mut extreme = 0usize;
    for _ in 0..permutations {
        shuffled.shuffle(&mut rng);
        let r = product_moment(x, &shuffled).unwrap_or(0.0);
        if r.abs() >= observed.abs() - 1e-12 {
            extreme += 1;
        }
    }
    Ok((extreme + 1) as f64 / (permutations + 1) as f64)
}

fn correlate(x: &[f64], y: &[f64], method: Method, p: PValueMethod) -> Result<CorrelationResult> {
    let coefficient = product_moment(x, y).ok_or(Error::UndefinedCorrelation("constant series"))?;
    let p_value = match p {
        PValueMethod::TApprox => t_p_value(coefficient, x.len()),
        PValueMethod::Permutation { permutations, seed } => permutation_p(x, y, coefficient, permutations, seed)?,
    };
    Ok(CorrelationResult { coefficient, p_value, n: x.len(), method })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    pearson_with(x, y, PValueMethod::TApprox)
}

pub fn pearson_with(x: &[f64], y: &[f64], p: PValueMethod) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    correlate(x, y, Method::Pearson, p)
}

/// 1-based ranks; tied values share their mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = mean;
        }
        i = j + 1;
    }
    out
}

pub fn spearman_values(x: &[f64], y: &[f64], p: PValueMethod) -> Result<CorrelationResult> {
    check_inputs(x, y)?;
    correlate(&ranks(x), &ranks(y), Method::Spearman, p)
}

/// Aligns two per-state maps on the states present in both.
pub fn intersect(x: &BTreeMap<StateCode, f64>, y: &BTreeMap<StateCode, f64>) -> (Vec<StateCode>, Vec<f64>, Vec<f64>) {
    let mut states = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (s, &a) in x {
        if let Some(&b) = y.get(s) {
            states.push(*s);
            xs.push(a);
            ys.push(b);
        }
    }
    (states, xs, ys)
}

/// Spearman's ρ over the states present in both maps.
pub fn spearman(x: &BTreeMap<StateCode, f64>, y: &BTreeMap<StateCode, f64>) -> Result<CorrelationResult> {
    spearman_with(x, y, PValueMethod::TApprox)
}

pub fn spearman_with(
    x: &BTreeMap<StateCode, f64>,
    y: &BTreeMap<StateCode, f64>,
    p: PValueMethod,
) -> Result<CorrelationResult> {
    let (_, xs, ys) = intersect(x, y);
    spearman_values(&xs, &ys, p)
}

/// Descriptive label for |ρ|; carries no statistical meaning.
pub fn strength_band(coefficient: f64) -> &'static str {
    let a = coefficient.abs();
    if a <= 0.3 {
        "negligible"
    } else if a <= 0.5 {
        "low"
    } else if a <= 0.7 {
        "moderate"
    } else if a <= 0.9 {
        "high"
    } else {
        "very high"
    }
}
