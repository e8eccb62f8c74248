//! Shared domain types: items, baskets, purchase histories, configuration.

use std::collections::HashMap;
use std::fmt;

use crate::{Error, Result};

/// Dense item identifier in `[0, n)`.
///
/// Raw item codes from the source data are interned through [`Vocabulary`];
/// every inner loop indexes embedding rows and count arrays by this id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A market basket: the set of distinct items purchased in one transaction.
///
/// Items are stored sorted and deduplicated so equality, hashing and set
/// intersection are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Basket {
    items: Vec<ItemId>,
}

impl Basket {
    /// Builds a basket from any iterator of item ids; duplicates collapse.
    pub fn new(items: impl IntoIterator<Item = ItemId>) -> Self {
        let mut items: Vec<ItemId> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Basket { items }
    }

    /// Cardinality of the item set.
    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items in ascending id order.
    #[inline]
    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    #[inline]
    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    /// Number of items present in both baskets.
    pub fn intersection_size(&self, other: &Basket) -> usize {
        // Both sides are sorted; merge-walk.
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < self.items.len() && j < other.items.len() {
            match self.items[i].cmp(&other.items[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    pub fn union_size(&self, other: &Basket) -> usize {
        self.items.len() + other.items.len() - self.intersection_size(other)
    }
}

impl FromIterator<ItemId> for Basket {
    fn from_iter<T: IntoIterator<Item = ItemId>>(iter: T) -> Self {
        Basket::new(iter)
    }
}

/// Cardinality of a basket's item set.
#[inline]
pub fn basket_size(basket: &Basket) -> usize {
    basket.len()
}

/// One customer's time-ordered sequence of market baskets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PurchaseHistory {
    pub customer: String,
    pub baskets: Vec<Basket>,
}

impl PurchaseHistory {
    pub fn new(customer: impl Into<String>, baskets: Vec<Basket>) -> Self {
        PurchaseHistory {
            customer: customer.into(),
            baskets,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.baskets.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.baskets.is_empty()
    }

    /// Last basket, if any.
    pub fn last_basket(&self) -> Option<&Basket> {
        self.baskets.last()
    }
}

/// Hyperparameters of the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionConfig {
    /// Neighbor count for the kNN-SDTW search.
    pub k: usize,
    /// Fallback threshold on the mean neighbor SDTW distance.
    pub tau: f64,
    /// Wasserstein order (>= 1).
    pub p: f64,
    /// Item-embedding dimension.
    pub embed_dim: usize,
    /// Divide each neighbor's SDTW distance by its matched subsequence length
    /// before the tau comparison. Off by default; tau is then in summed-cost
    /// units.
    pub normalize: bool,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        PredictionConfig {
            k: 5,
            tau: 10.0,
            p: 1.0,
            embed_dim: 50,
            normalize: false,
        }
    }
}

impl PredictionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidConfig(format!("p must be >= 1, got {}", self.p)));
        }
        if self.embed_dim < 1 {
            return Err(Error::InvalidConfig("embed_dim must be >= 1".into()));
        }
        if !(self.tau >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must be >= 0, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Bijective mapping between raw item codes and dense [`ItemId`]s.
///
/// Interning is single-writer during ingestion; [`Vocabulary::freeze`] makes
/// the mapping immutable, after which lookups are safe to share across
/// threads.
#[derive(Debug, Clone, Default)]
pub struct Vocabulary {
    codes: Vec<String>,
    index: HashMap<String, ItemId>,
    frozen: bool,
}

impl Vocabulary {
    pub fn new() -> Self {
        Vocabulary::default()
    }

    /// Returns the existing id for a seen code, or assigns the next dense
    /// index to a new one. Fails once the vocabulary is frozen.
    pub fn intern_item(&mut self, raw_code: &str) -> Result<ItemId> {
        if let Some(&id) = self.index.get(raw_code) {
            return Ok(id);
        }
        if self.frozen {
            return Err(Error::VocabularyFrozen(raw_code.to_string()));
        }
        let id = ItemId(self.codes.len() as u32);
        self.codes.push(raw_code.to_string());
        self.index.insert(raw_code.to_string(), id);
        Ok(id)
    }

    /// Lookup without interning.
    pub fn get(&self, raw_code: &str) -> Option<ItemId> {
        self.index.get(raw_code).copied()
    }

    /// Raw code for a dense id.
    pub fn code(&self, id: ItemId) -> Option<&str> {
        self.codes.get(id.index()).map(|s| s.as_str())
    }

    /// Number of interned items.
    #[inline]
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// All raw codes in dense-index order.
    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn intern_assigns_dense_indices() {
        let mut vocab = Vocabulary::new();
        assert_eq!(vocab.intern_item("4321").unwrap(), ItemId(0));
        assert_eq!(vocab.intern_item("4321").unwrap(), ItemId(0));
        assert_eq!(vocab.intern_item("777").unwrap(), ItemId(1));
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.code(ItemId(1)), Some("777"));
    }

    #[test]
    fn frozen_vocabulary_rejects_new_codes() {
        let mut vocab = Vocabulary::new();
        vocab.intern_item("a").unwrap();
        vocab.freeze();
        assert_eq!(vocab.intern_item("a").unwrap(), ItemId(0));
        assert!(matches!(
            vocab.intern_item("b"),
            Err(Error::VocabularyFrozen(_))
        ));
    }

    #[test]
    fn basket_size_examples() {
        assert_eq!(basket_size(&Basket::new([])), 0);
        assert_eq!(basket_size(&Basket::new([ItemId(0), ItemId(1), ItemId(2)])), 3);
        // Duplicates collapse.
        let b = Basket::new([ItemId(5), ItemId(5), ItemId(7)]);
        assert_eq!(basket_size(&b), 2);
        assert_eq!(b.items(), &[ItemId(5), ItemId(7)]);
    }

    #[test]
    fn intersection_and_union() {
        let a = Basket::new([ItemId(1), ItemId(2), ItemId(3)]);
        let b = Basket::new([ItemId(2), ItemId(3), ItemId(4)]);
        assert_eq!(a.intersection_size(&b), 2);
        assert_eq!(a.union_size(&b), 4);
    }

    #[test]
    fn config_validation() {
        assert!(PredictionConfig::default().validate().is_ok());
        let bad = PredictionConfig {
            p: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PredictionConfig {
            k: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PredictionConfig {
            tau: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        // Interning is a bijection over any corpus of raw codes.
        #[test]
        fn intern_is_bijective(codes in proptest::collection::vec("[a-z0-9]{1,8}", 1..40)) {
            let mut vocab = Vocabulary::new();
            let ids: Vec<ItemId> = codes.iter().map(|c| vocab.intern_item(c).unwrap()).collect();
            for (code, id) in codes.iter().zip(&ids) {
                prop_assert_eq!(vocab.get(code), Some(*id));
                prop_assert_eq!(vocab.code(*id), Some(code.as_str()));
            }
            for (i, a) in codes.iter().enumerate() {
                for (j, b) in codes.iter().enumerate() {
                    prop_assert_eq!(ids[i] == ids[j], a == b);
                }
            }
        }

        // Basket equality is order-insensitive over its items.
        #[test]
        fn basket_equality_ignores_order(mut items in proptest::collection::vec(0u32..50, 0..20)) {
            let a = Basket::new(items.iter().map(|&i| ItemId(i)));
            items.reverse();
            let b = Basket::new(items.iter().map(|&i| ItemId(i)));
            prop_assert_eq!(a, b);
        }
    }
}
