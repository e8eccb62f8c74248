//! Synthetic shopping corpora with planted cross-customer structure.
//!
//! Customers belong to archetype cohorts that cycle through the same basket
//! trajectory: each stage basket consists of the archetype's staple items
//! plus one variant per substitution slot. Cohort members start at random
//! phases and occasionally swap a variant for one of its substitutes, so the
//! sequences only match under warping and embedded-item similarity — the
//! structure the predictor is built to exploit. The generator is used by the
//! benchmark command and the integration fixtures.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::data_io::Corpus;
use crate::embeddings::EmbeddingTable;
use crate::types::{Basket, PurchaseHistory, Vocabulary};

#[derive(Debug, Clone, Copy)]
pub struct SynthParams {
    /// Number of archetype cohorts.
    pub archetypes: usize,
    /// Stages in each archetype's cyclic trajectory.
    pub stages: usize,
    /// Substitution slots per stage basket.
    pub slots: usize,
    /// Interchangeable variants per slot.
    pub substitutes: usize,
    /// Staple items an archetype buys in every basket.
    pub staples: usize,
    pub customers: usize,
    pub min_history: usize,
    pub max_history: usize,
    /// Probability a slot purchase picks a non-primary variant.
    pub substitute_prob: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            archetypes: 6,
            stages: 4,
            slots: 3,
            substitutes: 2,
            staples: 2,
            customers: 120,
            min_history: 10,
            max_history: 13,
            substitute_prob: 0.15,
            seed: 7,
        }
    }
}

/// What an item is within the planted structure; indexed by dense item id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemRole {
    Staple {
        archetype: usize,
        index: usize,
    },
    Variant {
        archetype: usize,
        stage: usize,
        slot: usize,
        variant: usize,
    },
}

/// Generates the corpus plus one role per item id.
pub fn generate(params: &SynthParams) -> (Corpus, Vec<ItemRole>) {
    let mut vocab = Vocabulary::new();
    let mut roles = Vec::new();
    let mut categories = std::collections::BTreeMap::new();
    for a in 0..params.archetypes {
        for s in 0..params.staples {
            let id = vocab
                .intern_item(&format!("a{a}-staple{s}"))
                .expect("vocabulary is being built");
            roles.push(ItemRole::Staple {
                archetype: a,
                index: s,
            });
            categories.insert(id, format!("arch{a}"));
        }
        for stage in 0..params.stages {
            for slot in 0..params.slots {
                for variant in 0..params.substitutes {
                    let id = vocab
                        .intern_item(&format!("a{a}-s{stage}-p{slot}-v{variant}"))
                        .expect("vocabulary is being built");
                    roles.push(ItemRole::Variant {
                        archetype: a,
                        stage,
                        slot,
                        variant,
                    });
                    categories.insert(id, format!("arch{a}"));
                }
            }
        }
    }
    vocab.freeze();

    let item_id = |code: &str| vocab.get(code).expect("generated codes are interned");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut histories = Vec::with_capacity(params.customers);
    for c in 0..params.customers {
        let archetype = c % params.archetypes;
        let phase = rng.gen_range(0..params.stages);
        let length = rng.gen_range(params.min_history..=params.max_history);
        let baskets = (0..length)
            .map(|i| {
                let stage = (phase + i) % params.stages;
                let mut items = Vec::with_capacity(params.staples + params.slots);
                for s in 0..params.staples {
                    items.push(item_id(&format!("a{archetype}-staple{s}")));
                }
                for slot in 0..params.slots {
                    let variant = if params.substitutes > 1
                        && rng.gen_bool(params.substitute_prob)
                    {
                        rng.gen_range(1..params.substitutes)
                    } else {
                        0
                    };
                    items.push(item_id(&format!("a{archetype}-s{stage}-p{slot}-v{variant}")));
                }
                Basket::new(items)
            })
            .collect();
        histories.push(PurchaseHistory::new(format!("cust{c:04}"), baskets));
    }

    (
        Corpus {
            histories,
            vocab,
            categories,
        },
        roles,
    )
}

/// Embeddings aligned with the planted structure, with no training step:
/// archetypes sit far apart, stage/slot items orbit their archetype center,
/// and substitutes of one slot nearly coincide. Useful when a fixture needs
/// strong cluster geometry deterministically.
pub fn archetype_embeddings(roles: &[ItemRole], dim: usize, seed: u64) -> EmbeddingTable {
    const ARCHETYPE_SPREAD: f64 = 10.0;
    const SLOT_OFFSET: f64 = 1.0;
    const VARIANT_JITTER: f64 = 0.05;

    let archetype_count = roles
        .iter()
        .map(|r| match r {
            ItemRole::Staple { archetype, .. } | ItemRole::Variant { archetype, .. } => {
                archetype + 1
            }
        })
        .max()
        .unwrap_or(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit = |scale: f64| -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        v.into_iter().map(|x| x / norm * scale).collect()
    };
    let centers: Vec<Vec<f64>> = (0..archetype_count)
        .map(|_| unit(ARCHETYPE_SPREAD))
        .collect();

    let mut vectors = Vec::with_capacity(roles.len() * dim);
    for role in roles {
        let (center, offset) = match role {
            ItemRole::Staple { archetype, index } => {
                let mut offset_rng =
                    ChaCha8Rng::seed_from_u64(seed ^ hash3(*archetype, usize::MAX, *index));
                (&centers[*archetype], scaled_unit(&mut offset_rng, dim, SLOT_OFFSET))
            }
            ItemRole::Variant {
                archetype,
                stage,
                slot,
                variant,
            } => {
                let mut offset_rng =
                    ChaCha8Rng::seed_from_u64(seed ^ hash3(*archetype, *stage, *slot));
                let slot_offset = scaled_unit(&mut offset_rng, dim, SLOT_OFFSET);
                let mut variant_rng = ChaCha8Rng::seed_from_u64(
                    seed ^ hash3(*archetype, *stage, *slot).wrapping_add(*variant as u64 + 1),
                );
                let jitter = scaled_unit(&mut variant_rng, dim, VARIANT_JITTER);
                let combined: Vec<f64> =
                    slot_offset.iter().zip(&jitter).map(|(a, b)| a + b).collect();
                (&centers[*archetype], combined)
            }
        };
        vectors.extend(center.iter().zip(&offset).map(|(c, o)| c + o));
    }
    EmbeddingTable::from_rows(roles.len(), dim, vectors)
}

fn scaled_unit(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
    v.into_iter().map(|x| x / norm * scale).collect()
}

fn hash3(a: usize, b: usize, c: usize) -> u64 {
    let mut h = 1469598103934665603u64; // FNV offset basis
    for value in [a as u64, b as u64, c as u64] {
        h ^= value.wrapping_add(0x9e3779b97f4a7c15);
        h = h.wrapping_mul(1099511628211);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wasserstein::{ground_distance, PointCloud};
    use crate::types::ItemId;

    #[test]
    fn generation_is_deterministic() {
        let params = SynthParams::default();
        let (a, _) = generate(&params);
        let (b, _) = generate(&params);
        assert_eq!(a.histories, b.histories);
        assert_eq!(a.vocab.codes(), b.vocab.codes());
    }

    #[test]
    fn baskets_have_staples_plus_slots() {
        let params = SynthParams::default();
        let (corpus, _) = generate(&params);
        assert_eq!(corpus.histories.len(), params.customers);
        for history in &corpus.histories {
            assert!(history.len() >= params.min_history);
            assert!(history.len() <= params.max_history);
            for basket in &history.baskets {
                assert_eq!(basket.len(), params.staples + params.slots);
            }
        }
    }

    #[test]
    fn cohort_members_share_their_staples() {
        let params = SynthParams::default();
        let (corpus, _) = generate(&params);
        let staple0 = corpus.vocab.get("a0-staple0").unwrap();
        for (c, history) in corpus.histories.iter().enumerate() {
            let is_archetype0 = c % params.archetypes == 0;
            for basket in &history.baskets {
                assert_eq!(basket.contains(staple0), is_archetype0);
            }
        }
    }

    #[test]
    fn planted_embeddings_separate_archetypes_but_not_substitutes() {
        let params = SynthParams::default();
        let (corpus, roles) = generate(&params);
        let table = archetype_embeddings(&roles, 8, 3);
        assert_eq!(table.len(), corpus.vocab.len());

        let v0 = corpus.vocab.get("a0-s0-p0-v0").unwrap();
        let v1 = corpus.vocab.get("a0-s0-p0-v1").unwrap();
        let other_slot = corpus.vocab.get("a0-s0-p1-v0").unwrap();
        let other_arch = corpus.vocab.get("a1-s0-p0-v0").unwrap();
        let d = |a: ItemId, b: ItemId| ground_distance(table.row(a), table.row(b)).unwrap();
        assert!(d(v0, v1) < 0.2, "substitutes nearly coincide: {}", d(v0, v1));
        assert!(d(v0, other_slot) > d(v0, v1));
        assert!(d(v0, other_arch) > 5.0, "archetypes far apart");

        // Same-archetype baskets are much closer than cross-archetype ones.
        let b0 = &corpus.histories[0].baskets[0];
        let b6 = &corpus.histories[params.archetypes].baskets[0]; // same archetype 0
        let b1 = &corpus.histories[1].baskets[0]; // archetype 1
        let w = |x: &Basket, y: &Basket| {
            crate::wasserstein::exact_wasserstein(
                &PointCloud::from_basket(x, &table),
                &PointCloud::from_basket(y, &table),
                1.0,
            )
            .unwrap()
        };
        assert!(w(b0, b6) < w(b0, b1));
    }
}
