//! The four comparison predictors: global top items, personal top items,
//! repurchase-last-basket, and successor-support association rules.
//!
//! All baselines predict a customer-specific number of items `n_c`, the
//! rounded average size of the customer's previous baskets (minimum 1).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::types::{Basket, ItemId, PurchaseHistory};
use crate::{Error, Result};

/// Per-item purchase counts over a basket collection (basket incidence, not
/// quantity).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: Vec<u64>,
}

impl FrequencyTable {
    pub fn new(n_items: usize) -> Self {
        FrequencyTable {
            counts: vec![0; n_items],
        }
    }

    /// Counts every item occurrence across all baskets of all histories.
    pub fn from_histories(histories: &[PurchaseHistory], n_items: usize) -> Self {
        let mut table = FrequencyTable::new(n_items);
        for history in histories {
            for basket in &history.baskets {
                for &item in basket.items() {
                    table.bump(item);
                }
            }
        }
        table
    }

    #[inline]
    pub fn bump(&mut self, item: ItemId) {
        self.counts[item.index()] += 1;
    }

    #[inline]
    pub fn count(&self, item: ItemId) -> u64 {
        self.counts.get(item.index()).copied().unwrap_or(0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Customer-specific prediction size: the rounded (half-up) average basket
/// size of the history, floored at 1.
pub fn average_basket_size(history: &PurchaseHistory) -> usize {
    if history.is_empty() {
        return 1;
    }
    let total: usize = history.baskets.iter().map(Basket::len).sum();
    let avg = total as f64 / history.len() as f64;
    ((avg + 0.5).floor() as usize).max(1)
}

/// The `n_c` globally most frequent items; ties break by smaller item id.
pub fn global_top(train_freq: &FrequencyTable, n_c: usize) -> Result<Basket> {
    if n_c == 0 {
        return Err(Error::EmptySizeRequest);
    }
    let mut items: Vec<ItemId> = (0..train_freq.len() as u32).map(ItemId).collect();
    items.sort_by(|a, b| {
        train_freq
            .count(*b)
            .cmp(&train_freq.count(*a))
            .then_with(|| a.cmp(b))
    });
    Ok(Basket::new(items.into_iter().take(n_c)))
}

/// The customer's own `n_c` most frequent items; ties break by smaller id.
pub fn personal_top(history: &PurchaseHistory, n_c: usize) -> Result<Basket> {
    if n_c == 0 {
        return Err(Error::EmptySizeRequest);
    }
    let mut counts: Vec<(ItemId, u64)> = Vec::new();
    for basket in &history.baskets {
        for &item in basket.items() {
            match counts.iter_mut().find(|(i, _)| *i == item) {
                Some((_, c)) => *c += 1,
                None => counts.push((item, 1)),
            }
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Basket::new(counts.into_iter().take(n_c).map(|(i, _)| i)))
}

/// Verbatim copy of the customer's most recent basket.
pub fn repurchase_last(history: &PurchaseHistory) -> Result<Basket> {
    history
        .last_basket()
        .cloned()
        .ok_or(Error::EmptyHistory)
}

/// Successor-support counts: `s[a][b]` is the number of consecutive-basket
/// pairs (across all training customers and positions, with multiplicity)
/// where `a` is in the earlier basket and `b` in the later one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl SupportMatrix {
    pub fn new(n_items: usize) -> Self {
        SupportMatrix {
            n: n_items,
            counts: vec![0; n_items * n_items],
        }
    }

    #[inline]
    pub fn get(&self, a: ItemId, b: ItemId) -> u64 {
        self.counts[a.index() * self.n + b.index()]
    }

    #[inline]
    fn bump(&mut self, a: ItemId, b: ItemId) {
        self.counts[a.index() * self.n + b.index()] += 1;
    }

    pub fn n_items(&self) -> usize {
        self.n
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Writes only the nonzero entries as `a b count` lines.
    pub fn save(&self, path: &Path) -> Result<()> {
        let display = path.display().to_string();
        let file = File::create(path).map_err(|e| Error::io(&display, e))?;
        let mut w = BufWriter::new(file);
        for a in 0..self.n {
            for b in 0..self.n {
                let c = self.counts[a * self.n + b];
                if c > 0 {
                    writeln!(w, "{a} {b} {c}").map_err(|e| Error::io(&display, e))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&display, e))?;
        Ok(())
    }

    pub fn load(path: &Path, n_items: usize) -> Result<Self> {
        let display = path.display().to_string();
        let file = File::open(path).map_err(|e| Error::io(&display, e))?;
        let mut matrix = SupportMatrix::new(n_items);
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&display, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parse = |tok: Option<&str>| -> Result<u64> {
                tok.and_then(|t| t.parse().ok()).ok_or_else(|| Error::Parse {
                    path: display.clone(),
                    line: idx as u64 + 1,
                    msg: format!("expected `a b count`, got {line:?}"),
                })
            };
            let mut tokens = line.split_whitespace();
            let a = parse(tokens.next())? as usize;
            let b = parse(tokens.next())? as usize;
            let c = parse(tokens.next())?;
            if a >= n_items || b >= n_items {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: idx as u64 + 1,
                    msg: format!("item index out of range 0..{n_items}"),
                });
            }
            matrix.counts[a * n_items + b] = c;
        }
        Ok(matrix)
    }
}

/// Counts the Cartesian product of every consecutive basket pair.
pub fn fit_association(train: &[PurchaseHistory], n_items: usize) -> SupportMatrix {
    let mut matrix = SupportMatrix::new(n_items);
    for history in train {
        for window in history.baskets.windows(2) {
            for &a in window[0].items() {
                for &b in window[1].items() {
                    matrix.bump(a, b);
                }
            }
        }
    }
    matrix
}

/// Scores every item by its support after the last basket's items and takes
/// the top `n_c`. Ties (including zero-support items, which may fill the
/// remaining slots) break by global frequency, then smaller id.
pub fn predict_association(
    support: &SupportMatrix,
    last_basket: &Basket,
    n_c: usize,
    global_freq: &FrequencyTable,
) -> Result<Basket> {
    if n_c == 0 {
        return Err(Error::EmptySizeRequest);
    }
    let n = support.n_items();
    let mut scored: Vec<(ItemId, u64)> = (0..n as u32)
        .map(ItemId)
        .map(|b| {
            let score = last_basket.items().iter().map(|&a| support.get(a, b)).sum();
            (b, score)
        })
        .collect();
    scored.sort_by(|x, y| {
        y.1.cmp(&x.1)
            .then_with(|| global_freq.count(y.0).cmp(&global_freq.count(x.0)))
            .then_with(|| x.0.cmp(&y.0))
    });
    Ok(Basket::new(scored.into_iter().take(n_c).map(|(i, _)| i)))
}
