//! In-basket skip-gram item embeddings with a full softmax.
//!
//! For every ordered pair of distinct items `(p, q)` inside a basket the
//! trainer maximizes `log Pr(p | q)` where
//! `Pr(p | q) = exp(u_p . v_q) / sum_r exp(u_p . v_r)`, by plain SGD over the
//! target matrix `u` and context matrix `v`. Assortments are capped at a few
//! hundred items in this pipeline, so the exact softmax stays tractable and
//! no sampling approximation is needed. The final embedding of item `p` is
//! the row-wise average `(u_p + v_p) / 2`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::types::{Basket, ItemId};
use crate::{Error, Result};

/// Dense per-item embedding vectors, row `i` belonging to `ItemId(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: Vec<f64>,
}

impl EmbeddingTable {
    /// Builds a table from `n x dim` row-major data.
    pub fn from_rows(n: usize, dim: usize, vectors: Vec<f64>) -> Self {
        assert_eq!(vectors.len(), n * dim, "row data must be n*dim long");
        EmbeddingTable { dim, vectors }
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.vectors.len() / self.dim
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, item: ItemId) -> &[f64] {
        let i = item.index();
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.vectors.iter().all(|v| v.is_finite())
    }
}

/// Training knobs; the defaults are the conventional scheme for this model
/// family (the distance pipeline, not the optimizer, is what matters here).
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Very large baskets generate |b|*(|b|-1) pairs; cap them by seeded
    /// subsampling to bound epoch time.
    pub max_pairs_per_basket: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            epochs: 5,
            seed: 42,
            max_pairs_per_basket: 10_000,
        }
    }
}

/// Mutable state of a training run: target vectors `u`, context vectors `v`.
#[derive(Debug, Clone)]
pub struct TrainState {
    n: usize,
    dim: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

/// Gradient of `log Pr(p | q)` with respect to every entry of `u` and `v`.
#[derive(Debug, Clone)]
pub struct PairGradient {
    /// `d / d u_p` (all other `u` rows have zero gradient).
    pub d_u_p: Vec<f64>,
    /// `d / d v_r` for every item `r`, row-major `n x dim`.
    pub d_v: Vec<f64>,
}

impl TrainState {
    /// Uniform initialization in `[-0.5/dim, +0.5/dim]`, seeded.
    pub fn new(n_items: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = 0.5 / dim as f64;
        let mut init = |len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.gen_range(-half..half)).collect()
        };
        TrainState {
            n: n_items,
            dim,
            u: init(n_items * dim),
            v: init(n_items * dim),
        }
    }

    #[inline]
    fn u_row(&self, i: usize) -> &[f64] {
        &self.u[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn v_row(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    /// Softmax over `u_p . v_r` for all items `r`, with max-subtraction.
    fn softmax_scores(&self, p: ItemId) -> Vec<f64> {
        let up = self.u_row(p.index());
        let mut z: Vec<f64> = (0..self.n)
            .map(|r| dot(up, self.v_row(r)))
            .collect();
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for zi in z.iter_mut() {
            *zi = (*zi - max).exp();
            total += *zi;
        }
        for zi in z.iter_mut() {
            *zi /= total;
        }
        z
    }

    /// `log Pr(p | q)` under the current parameters.
    pub fn log_prob(&self, p: ItemId, q: ItemId) -> f64 {
        let up = self.u_row(p.index());
        let z_q = dot(up, self.v_row(q.index()));
        let z_max = (0..self.n)
            .map(|r| dot(up, self.v_row(r)))
            .fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = (0..self.n)
            .map(|r| (dot(up, self.v_row(r)) - z_max).exp())
            .sum::<f64>()
            .ln()
            + z_max;
        z_q - log_sum
    }

    /// Analytic gradient of `log Pr(p | q)`; used by the SGD step and checked
    /// against finite differences in the tests.
    pub fn pair_gradient(&self, p: ItemId, q: ItemId) -> PairGradient {
        let sigma = self.softmax_scores(p);
        let up = self.u_row(p.index());
        // d/du_p = v_q - sum_r sigma_r v_r
        let mut d_u_p = self.v_row(q.index()).to_vec();
        for r in 0..self.n {
            let vr = self.v_row(r);
            for d in 0..self.dim {
                d_u_p[d] -= sigma[r] * vr[d];
            }
        }
        // d/dv_r = ([r == q] - sigma_r) * u_p
        let mut d_v = vec![0.0; self.n * self.dim];
        for r in 0..self.n {
            let indicator = if r == q.index() { 1.0 } else { 0.0 };
            let coeff = indicator - sigma[r];
            for d in 0..self.dim {
                d_v[r * self.dim + d] = coeff * up[d];
            }
        }
        PairGradient { d_u_p, d_v }
    }

    /// One SGD ascent step on pair `(p, q)`. Both gradients are evaluated at
    /// the pre-step parameters.
    fn sgd_step(&mut self, p: ItemId, q: ItemId, lr: f64) {
        let sigma = self.softmax_scores(p);
        let pi = p.index();
        let qi = q.index();
        let up_old: Vec<f64> = self.u_row(pi).to_vec();
        // d/du_p = v_q - sum_r sigma_r v_r
        let mut grad_u = self.v_row(qi).to_vec();
        for r in 0..self.n {
            let vr = self.v_row(r);
            for d in 0..self.dim {
                grad_u[d] -= sigma[r] * vr[d];
            }
        }
        // d/dv_r = ([r == q] - sigma_r) * u_p
        for r in 0..self.n {
            let indicator = if r == qi { 1.0 } else { 0.0 };
            let coeff = lr * (indicator - sigma[r]);
            let vr = &mut self.v[r * self.dim..(r + 1) * self.dim];
            for d in 0..self.dim {
                vr[d] += coeff * up_old[d];
            }
        }
        let up = &mut self.u[pi * self.dim..(pi + 1) * self.dim];
        for d in 0..self.dim {
            up[d] += lr * grad_u[d];
        }
    }

    /// Eq.-style corpus objective: mean `log Pr(p | q)` over all in-basket
    /// ordered pairs. Exact (full softmax), intended for small assortments.
    pub fn corpus_log_likelihood(&self, corpus: &[Basket]) -> f64 {
        let mut total = 0.0;
        let mut count = 0u64;
        for basket in corpus {
            for &p in basket.items() {
                for &q in basket.items() {
                    if p != q {
                        total += self.log_prob(p, q);
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            total / count as f64
        }
    }

    /// Runs SGD over the corpus with linear learning-rate decay.
    pub fn train(&mut self, corpus: &[Basket], opts: &TrainOptions) -> Result<()> {
        let mut pair_rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
        let per_basket: Vec<usize> = corpus
            .iter()
            .map(|b| {
                let s = b.len();
                (s * s.saturating_sub(1)).min(opts.max_pairs_per_basket)
            })
            .collect();
        let total_updates: usize = per_basket.iter().sum::<usize>() * opts.epochs;
        if total_updates == 0 {
            return Ok(()); // no training pairs; table stays at initialization
        }
        let mut done = 0usize;
        let mut pair_buf: Vec<(ItemId, ItemId)> = Vec::new();
        for _ in 0..opts.epochs {
            for basket in corpus {
                basket_pairs(basket, opts.max_pairs_per_basket, &mut pair_rng, &mut pair_buf);
                for &(p, q) in &pair_buf {
                    let progress = done as f64 / total_updates as f64;
                    let lr = (opts.learning_rate * (1.0 - progress))
                        .max(opts.min_learning_rate);
                    self.sgd_step(p, q, lr);
                    done += 1;
                }
            }
            if !self.u.iter().chain(self.v.iter()).all(|x| x.is_finite()) {
                return Err(Error::NonFiniteEmbedding);
            }
        }
        Ok(())
    }

    /// Final per-item vector: `(u_p + v_p) / 2`.
    pub fn into_table(self) -> EmbeddingTable {
        let vectors = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(a, b)| (a + b) / 2.0)
            .collect();
        EmbeddingTable {
            dim: self.dim,
            vectors,
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// All ordered in-basket pairs `(p, q)`, `p != q`, subsampled without
/// replacement down to `cap` when the basket is very large.
fn basket_pairs(
    basket: &Basket,
    cap: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<(ItemId, ItemId)>,
) {
    out.clear();
    let items = basket.items();
    let s = items.len();
    if s < 2 {
        return;
    }
    let total = s * (s - 1);
    if total <= cap {
        for &p in items {
            for &q in items {
                if p != q {
                    out.push((p, q));
                }
            }
        }
    } else {
        // Map a flat pair index to (p, q) skipping the diagonal.
        for idx in rand::seq::index::sample(rng, total, cap) {
            let p = idx / (s - 1);
            let r = idx % (s - 1);
            let q = if r >= p { r + 1 } else { r };
            out.push((items[p], items[q]));
        }
    }
}

/// Trains embeddings over the (training-split) basket corpus.
pub fn train_embeddings(
    corpus: &[Basket],
    n_items: usize,
    dim: usize,
    opts: &TrainOptions,
) -> Result<EmbeddingTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if dim == 0 || n_items == 0 {
        return Err(Error::InvalidConfig(
            "embedding dimension and item count must be >= 1".into(),
        ));
    }
    let mut state = TrainState::new(n_items, dim, opts.seed);
    state.train(corpus, opts)?;
    let table = state.into_table();
    debug_assert!(table.is_finite());
    Ok(table)
}

/// Cosine similarity between two item rows; handy for inspecting trained
/// tables.
pub fn cosine(table: &EmbeddingTable, a: ItemId, b: ItemId) -> f64 {
    let (x, y) = (table.row(a), table.row(b));
    let na = dot(x, x).sqrt();
    let nb = dot(y, y).sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(x, y) / (na * nb)
    }
}

/// Writes the table as text: header `<n> <dim>`, then one
/// `<raw_code> <f_1> ... <f_dim>` line per item in dense-index order, floats
/// in shortest round-trip form. A sidecar `<path>.vocab` maps raw code to
/// dense index.
pub fn save_embeddings(table: &EmbeddingTable, codes: &[String], path: &Path) -> Result<()> {
    assert_eq!(codes.len(), table.len(), "one raw code per embedding row");
    if !table.is_finite() {
        return Err(Error::NonFiniteEmbedding);
    }
    let display = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(&display, e);
    writeln!(w, "{} {}", table.len(), table.dim()).map_err(io_err)?;
    for (i, code) in codes.iter().enumerate() {
        write!(w, "{code}").map_err(io_err)?;
        for value in table.row(ItemId(i as u32)) {
            write!(w, " {value}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let sidecar = sidecar_path(path);
    let display = sidecar.display().to_string();
    let file = File::create(&sidecar).map_err(|e| Error::io(&display, e))?;
    let mut w = BufWriter::new(file);
    for (i, code) in codes.iter().enumerate() {
        writeln!(w, "{code}\t{i}").map_err(|e| Error::io(&display, e))?;
    }
    w.flush().map_err(|e| Error::io(&display, e))?;
    Ok(())
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".vocab");
    std::path::PathBuf::from(os)
}

/// Reads a table written by [`save_embeddings`]; returns the vectors and the
/// raw item codes in row order.
pub fn load_embeddings(path: &Path) -> Result<(EmbeddingTable, Vec<String>)> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: display.clone(),
        line,
        msg,
    };

    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(Ok(l)) => l,
        Some(Err(e)) => return Err(Error::io(&display, e)),
        None => return Err(parse_err(1, "empty file, expected `<n> <dim>` header".into())),
    };
    let mut parts = header.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(1, format!("bad header {header:?}, expected `<n> <dim>`")))?;
    let dim: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(1, format!("bad header {header:?}, expected `<n> <dim>`")))?;
    if parts.next().is_some() {
        return Err(parse_err(1, format!("trailing tokens in header {header:?}")));
    }

    let mut vectors = Vec::with_capacity(n * dim);
    let mut codes = Vec::with_capacity(n);
    for (idx, line) in lines.enumerate() {
        let line_no = idx as u64 + 2;
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if codes.len() == n {
            return Err(parse_err(line_no, format!("expected {n} rows, found more")));
        }
        let mut tokens = line.split_whitespace();
        let code = tokens
            .next()
            .ok_or_else(|| parse_err(line_no, "missing item code".into()))?;
        let mut row = Vec::with_capacity(dim);
        for tok in tokens {
            let value: f64 = tok.parse().map_err(|_| {
                parse_err(line_no, format!("non-numeric token {tok:?}"))
            })?;
            row.push(value);
        }
        if row.len() != dim {
            return Err(parse_err(
                line_no,
                format!("expected {dim} values, found {}", row.len()),
            ));
        }
        codes.push(code.to_string());
        vectors.extend_from_slice(&row);
    }
    if codes.len() != n {
        return Err(parse_err(
            codes.len() as u64 + 1,
            format!("header promised {n} rows, found {} (row {} missing)", codes.len(), codes.len() + 1),
        ));
    }
    Ok((EmbeddingTable { dim, vectors }, codes))
}
