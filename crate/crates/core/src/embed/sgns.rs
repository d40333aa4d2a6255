//! Skip-gram with negative sampling.
//!
//! Each retained center word predicts the words in a randomly shrunk window
//! around it; every (center, context) pair is one logistic update against the
//! context's output vector plus `negatives` noise words drawn from the
//! unigram^0.75 distribution. Only the input (center) matrix is kept.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::EmbeddingModel;
use super::vocab::{build_vocab, Vocab};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MIN_LR_FRACTION: f64 = 1e-4;
const NOISE_POWER: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub min_count: u64,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub subsample_t: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            min_count: 5,
            window: 5,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            subsample_t: 1e-3,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be positive");
        }
        if self.subsample_t < 0.0 {
            return bad("subsample_t must be non-negative");
        }
        Ok(())
    }
}

/// Mean loss per epoch, one entry per epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Draws word indices proportionally to count^0.75.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    cumulative: Vec<f64>,
}

impl NoiseSampler {
    pub fn new(counts: &[u64]) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(NOISE_POWER);
                acc
            })
            .collect();
        NoiseSampler { cumulative }
    }

    /// Exact probability of each index.
    pub fn probabilities(&self) -> Vec<f64> {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.cumulative.len() - 1)
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln σ(x)`, computed without overflow.
#[inline]
fn neg_log_sigmoid(x: f64) -> f64 {
    if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

/// Loss and derivative coefficient of one logistic target.
///
/// Returns `(loss, coef)` with `coef = label - σ(score)`, so that
/// `∂loss/∂score = -coef`.
#[inline]
pub fn logistic_target(score: f64, positive: bool) -> (f64, f64) {
    if positive {
        (neg_log_sigmoid(score), 1.0 - sigmoid(score))
    } else {
        (neg_log_sigmoid(-score), -sigmoid(score))
    }
}

/// Analytic gradients of the negative-sampling loss
/// `-ln σ(u·v₊) - Σ ln σ(-u·vᵢ)` for one center vector `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients<T> {
    pub loss: T,
    pub center: Vec<T>,
    pub positive: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

pub fn sgns_gradients<T: Scalar>(center: &[T], positive: &[T], negatives: &[&[T]]) -> SgnsGradients<T> {
    let dim = center.len();
    let mut out = SgnsGradients {
        loss: T::zero(),
        center: vec![T::zero(); dim],
        positive: vec![T::zero(); dim],
        negatives: Vec::with_capacity(negatives.len()),
    };
    let targets = std::iter::once((positive, true)).chain(negatives.iter().map(|n| (*n, false)));
    for (k, (v, label)) in targets.enumerate() {
        let score = crate::scalar::dot(center, v).to_f64_lossy();
        let (loss, coef) = logistic_target(score, label);
        let d_score = T::of(-coef);
        out.loss += T::of(loss);
        for j in 0..dim {
            out.center[j] += d_score * v[j];
        }
        let g: Vec<T> = center.iter().map(|&u| d_score * u).collect();
        if k == 0 {
            out.positive = g;
        } else {
            out.negatives.push(g);
        }
    }
    out
}

/// Parameter storage seen by the update kernel.
trait Rows<T> {
    fn read(&mut self, row: usize, out: &mut [T]);
    fn dot(&mut self, row: usize, x: &[T]) -> T;
    /// `acc += coef·row; row += coef·x`, using the row's value before the update for `acc`.
    fn update_target(&mut self, row: usize, coef: T, x: &[T], acc: &mut [T]);
    fn add(&mut self, row: usize, x: &[T]);
}

struct PlainRows<'a, T> {
    data: &'a mut [T],
    dim: usize,
}

impl<T: Scalar> Rows<T> for PlainRows<'_, T> {
    fn read(&mut self, row: usize, out: &mut [T]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn dot(&mut self, row: usize, x: &[T]) -> T {
        crate::scalar::dot(&self.data[row * self.dim..(row + 1) * self.dim], x)
    }

    fn update_target(&mut self, row: usize, coef: T, x: &[T], acc: &mut [T]) {
        let r = &mut self.data[row * self.dim..(row + 1) * self.dim];
        for ((v, a), &xi) in r.iter_mut().zip(acc.iter_mut()).zip(x) {
            *a += coef * *v;
            *v += coef * xi;
        }
    }

    fn add(&mut self, row: usize, x: &[T]) {
        let r = &mut self.data[row * self.dim..(row + 1) * self.dim];
        r.iter_mut().zip(x).for_each(|(v, &xi)| *v += xi);
    }
}

/// Lock-free shared rows for multi-worker training; concurrent updates may interleave.
struct SharedRows<'a, T: Scalar> {
    data: &'a [T::Atomic],
    dim: usize,
}

impl<T: Scalar> Rows<T> for SharedRows<'_, T> {
    fn read(&mut self, row: usize, out: &mut [T]) {
        for (o, c) in out.iter_mut().zip(&self.data[row * self.dim..(row + 1) * self.dim]) {
            *o = T::load(c);
        }
    }

    fn dot(&mut self, row: usize, x: &[T]) -> T {
        let mut acc = T::zero();
        for (c, &xi) in self.data[row * self.dim..(row + 1) * self.dim].iter().zip(x) {
            acc += T::load(c) * xi;
        }
        acc
    }

    fn update_target(&mut self, row: usize, coef: T, x: &[T], acc: &mut [T]) {
        let r = &self.data[row * self.dim..(row + 1) * self.dim];
        for ((c, a), &xi) in r.iter().zip(acc.iter_mut()).zip(x) {
            let v = T::load(c);
            *a += coef * v;
            T::store(c, v + coef * xi);
        }
    }

    fn add(&mut self, row: usize, x: &[T]) {
        for (c, &xi) in self.data[row * self.dim..(row + 1) * self.dim].iter().zip(x) {
            T::store(c, T::load(c) + xi);
        }
    }
}

struct Shared<'a> {
    cfg: &'a TrainConfig,
    vocab: &'a Vocab,
    keep_prob: Vec<f64>,
    noise: NoiseSampler,
    total_work: f64,
    processed: AtomicU64,
}

/// Per-epoch (loss sum, update count) for one worker.
type EpochLoss = Vec<(f64, u64)>;

fn run_worker<T: Scalar, R: Rows<T>>(
    shared: &Shared<'_>,
    shard: &[Vec<usize>],
    input: &mut R,
    output: &mut R,
    seed: u64,
) -> EpochLoss {
    let cfg = shared.cfg;
    let dim = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = vec![T::zero(); dim];
    let mut neu1e = vec![T::zero(); dim];
    let mut kept = Vec::new();
    let mut losses = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut loss_sum = 0.0;
        let mut updates = 0u64;
        for sentence in shard {
            let progress = shared.processed.fetch_add(sentence.len() as u64, Ordering::Relaxed) as f64
                / shared.total_work;
            let lr = cfg.initial_lr * (1.0 - progress).max(MIN_LR_FRACTION);
            kept.clear();
            kept.extend(
                sentence
                    .iter()
                    .copied()
                    .filter(|&w| shared.keep_prob[w] >= 1.0 || shared.keep_prob[w] >= rng.gen::<f64>()),
            );
            for (pos, &center) in kept.iter().enumerate() {
                let reach = cfg.window - rng.gen_range(0..cfg.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(kept.len() - 1);
                for (cpos, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    input.read(center, &mut u);
                    neu1e.iter_mut().for_each(|x| *x = T::zero());
                    for d in 0..=cfg.negatives {
                        let (target, label) = if d == 0 {
                            (context, true)
                        } else {
                            let n = shared.noise.sample(&mut rng);
                            if n == context {
                                continue;
                            }
                            (n, false)
                        };
                        let score = output.dot(target, &u).to_f64_lossy();
                        let (loss, coef) = logistic_target(score, label);
                        loss_sum += loss;
                        output.update_target(target, T::of(coef * lr), &u, &mut neu1e);
                    }
                    input.add(center, &neu1e);
                    updates += 1;
                }
            }
        }
        losses.push((loss_sum, updates));
    }
    losses
}

/// Train skip-gram negative-sampling vectors.
///
/// With `workers == 1` the result depends only on the corpus and the config.
pub fn train_sgns<T: Scalar, S: AsRef<[String]>>(corpus: &[S], cfg: &TrainConfig) -> Result<EmbeddingModel<T>> {
    train_sgns_with_report(corpus, cfg).map(|(m, _)| m)
}

pub fn train_sgns_with_report<T: Scalar, S: AsRef<[String]>>(
    corpus: &[S],
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel<T>, TrainReport)> {
    cfg.validate()?;
    let vocab = build_vocab(corpus.iter(), cfg.min_count)?;
    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .map(|s| s.as_ref().iter().filter_map(|t| vocab.get(t)).collect::<Vec<_>>())
        .filter(|s: &Vec<usize>| s.len() > 1)
        .collect();
    let retained: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if retained <= cfg.window as u64 {
        return Err(Error::invalid(format!(
            "corpus has {retained} usable tokens, fewer than one window of {}",
            cfg.window
        )));
    }

    let total = vocab.total() as f64;
    let keep_prob = vocab
        .counts()
        .iter()
        .map(|&c| {
            if cfg.subsample_t <= 0.0 {
                return 1.0;
            }
            let threshold = cfg.subsample_t * total;
            let c = c as f64;
            ((c / threshold).sqrt() + 1.0) * threshold / c
        })
        .collect();
    let shared = Shared {
        cfg,
        vocab: &vocab,
        keep_prob,
        noise: NoiseSampler::new(vocab.counts()),
        total_work: (cfg.epochs as f64 * retained as f64).max(1.0),
        processed: AtomicU64::new(0),
    };

    let dim = cfg.dim;
    let rows = vocab.len();
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let scale = 1.0 / dim as f64;
    let mut input: Vec<T> = (0..rows * dim).map(|_| T::of((init_rng.gen::<f64>() - 0.5) * scale)).collect();
    let mut output: Vec<T> = vec![T::zero(); rows * dim];

    let per_worker: Vec<EpochLoss> = if cfg.workers == 1 {
        let seed = worker_seed(cfg.seed, 0);
        vec![run_worker(
            &shared,
            &sentences,
            &mut PlainRows { data: &mut input, dim },
            &mut PlainRows { data: &mut output, dim },
            seed,
        )]
    } else {
        let atomic_in: Vec<T::Atomic> = input.iter().map(|&v| v.new_atomic()).collect();
        let atomic_out: Vec<T::Atomic> = output.iter().map(|&v| v.new_atomic()).collect();
        let chunk = sentences.len().div_ceil(cfg.workers).max(1);
        let losses = std::thread::scope(|scope| {
            let handles: Vec<_> = sentences
                .chunks(chunk)
                .enumerate()
                .map(|(w, shard)| {
                    let shared = &shared;
                    let (ai, ao) = (&atomic_in, &atomic_out);
                    scope.spawn(move || {
                        run_worker::<T, _>(
                            shared,
                            shard,
                            &mut SharedRows { data: ai, dim },
                            &mut SharedRows { data: ao, dim },
                            worker_seed(cfg.seed, w as u64),
                        )
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training worker panicked")).collect()
        });
        input = atomic_in.iter().map(T::load).collect();
        losses
    };

    let mut report = TrainReport::default();
    for epoch in 0..cfg.epochs {
        let (sum, n) = per_worker
            .iter()
            .fold((0.0, 0u64), |(s, n), w| (s + w[epoch].0, n + w[epoch].1));
        report.epoch_losses.push(if n == 0 { 0.0 } else { sum / n as f64 });
    }
    log::debug!("sgns epoch losses: {:?}", report.epoch_losses);
    let model = EmbeddingModel::new(shared.vocab.clone(), input, dim, cfg.min_count, cfg.seed)?;
    Ok((model, report))
}

fn worker_seed(seed: u64, worker: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(worker)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn short_corpus_rejected() {
        let corpus = vec![vec!["a".to_string(), "b".to_string()]];
        let cfg = TrainConfig {
            min_count: 1,
            ..TrainConfig::default()
        };
        assert!(train_sgns::<f64, _>(&corpus, &cfg).is_err());
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0) >= 0.0);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-9);
    }

    #[test]
    fn noise_probabilities_sum_to_one() {
        let s = NoiseSampler::new(&[16, 1, 81]);
        let p = s.probabilities();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p[0] / p[1] - 8.0).abs() < 1e-9);
    }
}
