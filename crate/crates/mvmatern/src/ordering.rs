//! Observation orderings for the blockwise likelihood, as named strategies.
//!
//! All schemes are deterministic given a seed. Component indices follow the
//! dataset's alphabetical label order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::SpatialDataset;
use crate::error::{Error, Result};

/// An ordering strategy producing a permutation of observation indices.
pub trait OrderingScheme: Send + Sync {
    /// Registry name, e.g. "random".
    fn name(&self) -> &'static str;

    /// A permutation of 0..n; entry k is the dataset index placed at
    /// position k.
    fn order(&self, dataset: &SpatialDataset, seed: u64) -> Vec<usize>;
}

pub const ORDERING_NAMES: [&str; 3] = ["random", "component", "cycle"];

/// Looks an ordering scheme up by registry name.
pub fn ordering_scheme(name: &str) -> Result<Box<dyn OrderingScheme>> {
    match name {
        "random" => Ok(Box::new(RandomOrdering)),
        "component" => Ok(Box::new(ComponentOrdering)),
        "cycle" => Ok(Box::new(CycleOrdering)),
        _ => Err(Error::UnknownStrategy {
            kind: "ordering scheme",
            name: name.to_string(),
            available: ORDERING_NAMES.join(", "),
        }),
    }
}

/// Uniformly random permutation of all observations.
pub struct RandomOrdering;

impl OrderingScheme for RandomOrdering {
    fn name(&self) -> &'static str {
        "random"
    }

    fn order(&self, dataset: &SpatialDataset, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng);
        order
    }
}

/// Components in label order, observations shuffled within each component.
pub struct ComponentOrdering;

impl OrderingScheme for ComponentOrdering {
    fn name(&self) -> &'static str {
        "component"
    }

    fn order(&self, dataset: &SpatialDataset, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order = Vec::with_capacity(dataset.len());
        for c in 0..dataset.n_components() {
            let mut ids = dataset.component_indices(c);
            ids.shuffle(&mut rng);
            order.extend(ids);
        }
        order
    }
}

/// Round-robin over components: each sweep takes one random unused
/// observation per component, skipping exhausted components.
pub struct CycleOrdering;

impl OrderingScheme for CycleOrdering {
    fn name(&self) -> &'static str {
        "cycle"
    }

    fn order(&self, dataset: &SpatialDataset, seed: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pools: Vec<Vec<usize>> = (0..dataset.n_components())
            .map(|c| dataset.component_indices(c))
            .collect();
        for pool in &mut pools {
            pool.shuffle(&mut rng);
        }
        let n = dataset.len();
        let mut cursors = vec![0usize; pools.len()];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            for (pool, cursor) in pools.iter().zip(cursors.iter_mut()) {
                if *cursor < pool.len() {
                    order.push(pool[*cursor]);
                    *cursor += 1;
                }
            }
        }
        order
    }
}
