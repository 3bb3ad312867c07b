//! Conditioning-set (neighbor) selection rules, as named strategies.
//!
//! Each observation's candidates are the observations placed earlier in the
//! permutation; distance is Euclidean on the spatial coordinates only. All
//! rules keep |g(k)| = min(k−1, m): when a per-component quota cannot be
//! filled, the shortfall is backfilled from the globally nearest remaining
//! candidates. Ties are broken by dataset index.

use crate::data::SpatialDataset;
use crate::error::{Error, Result};
use crate::kdtree::KdTree;

/// A neighbor-selection strategy producing conditioning sets.
pub trait NeighborRule: Send + Sync {
    /// Registry name, e.g. "any".
    fn name(&self) -> &'static str;

    /// For each position k in the permutation, the conditioning set as
    /// sorted positions in 0..k.
    fn select(&self, dataset: &SpatialDataset, permutation: &[usize], m: usize)
        -> Vec<Vec<usize>>;
}

pub const NEIGHBOR_RULE_NAMES: [&str; 3] = ["any", "balanced", "preferential"];

/// Looks a neighbor rule up by registry name.
pub fn neighbor_rule(name: &str) -> Result<Box<dyn NeighborRule>> {
    match name {
        "any" => Ok(Box::new(AnyNeighbors)),
        "balanced" => Ok(Box::new(BalancedNeighbors)),
        "preferential" => Ok(Box::new(PreferentialNeighbors)),
        _ => Err(Error::UnknownStrategy {
            kind: "neighbor rule",
            name: name.to_string(),
            available: NEIGHBOR_RULE_NAMES.join(", "),
        }),
    }
}

/// Points inserted so far, indexed globally and per component, with the
/// dataset-index → permutation-position map needed to emit conditioning
/// sets.
struct Frontier<'a> {
    dataset: &'a SpatialDataset,
    global: KdTree,
    by_component: Vec<KdTree>,
    position_of: Vec<usize>,
}

impl<'a> Frontier<'a> {
    fn new(dataset: &'a SpatialDataset, per_component: bool) -> Self {
        let d = dataset.dim();
        let p = if per_component {
            dataset.n_components()
        } else {
            0
        };
        Frontier {
            dataset,
            global: KdTree::new(d),
            by_component: (0..p).map(|_| KdTree::new(d)).collect(),
            position_of: vec![usize::MAX; dataset.len()],
        }
    }

    fn insert(&mut self, dataset_index: usize, position: usize) {
        self.global.insert(self.dataset, dataset_index);
        if let Some(tree) = self.by_component.get_mut(self.dataset.component(dataset_index)) {
            tree.insert(self.dataset, dataset_index);
        }
        self.position_of[dataset_index] = position;
    }

    fn to_positions(&self, selected: &[(f64, usize)]) -> Vec<usize> {
        let mut positions: Vec<usize> =
            selected.iter().map(|&(_, i)| self.position_of[i]).collect();
        positions.sort_unstable();
        positions
    }
}

/// Fixed per-component quotas summing to m, then backfill.
fn select_by_quota(
    dataset: &SpatialDataset,
    permutation: &[usize],
    m: usize,
    targets: impl Fn(usize) -> Vec<usize>,
) -> Vec<Vec<usize>> {
    let mut frontier = Frontier::new(dataset, true);
    let mut cond_sets = Vec::with_capacity(permutation.len());
    let mut buf = Vec::new();
    let mut selected: Vec<(f64, usize)> = Vec::new();
    for (k, &obs) in permutation.iter().enumerate() {
        let want = m.min(k);
        if want == 0 {
            cond_sets.push(Vec::new());
            frontier.insert(obs, k);
            continue;
        }
        let query = dataset.location(obs);
        selected.clear();
        for (c, &target) in targets(dataset.component(obs)).iter().enumerate() {
            if target > 0 {
                frontier.by_component[c].nearest(dataset, query, target, &mut buf);
                selected.extend_from_slice(&buf);
            }
        }
        if selected.len() < want {
            // Backfill from the overall nearest candidates not yet chosen;
            // querying want + |selected| guarantees enough fresh ones.
            frontier
                .global
                .nearest(dataset, query, want + selected.len(), &mut buf);
            for &cand in &buf {
                if selected.len() == want {
                    break;
                }
                if !selected.iter().any(|&(_, i)| i == cand.1) {
                    selected.push(cand);
                }
            }
        }
        cond_sets.push(frontier.to_positions(&selected));
        frontier.insert(obs, k);
    }
    cond_sets
}

/// The m nearest prior observations regardless of component.
pub struct AnyNeighbors;

impl NeighborRule for AnyNeighbors {
    fn name(&self) -> &'static str {
        "any"
    }

    fn select(
        &self,
        dataset: &SpatialDataset,
        permutation: &[usize],
        m: usize,
    ) -> Vec<Vec<usize>> {
        let mut frontier = Frontier::new(dataset, false);
        let mut cond_sets = Vec::with_capacity(permutation.len());
        let mut buf = Vec::new();
        for (k, &obs) in permutation.iter().enumerate() {
            let want = m.min(k);
            if want == 0 {
                cond_sets.push(Vec::new());
            } else {
                frontier
                    .global
                    .nearest(dataset, dataset.location(obs), want, &mut buf);
                cond_sets.push(frontier.to_positions(&buf));
            }
            frontier.insert(obs, k);
        }
        cond_sets
    }
}

/// Roughly m/p nearest prior observations from each component: ⌊m/p⌋ each,
/// remainder spread over components in label order.
pub struct BalancedNeighbors;

impl NeighborRule for BalancedNeighbors {
    fn name(&self) -> &'static str {
        "balanced"
    }

    fn select(
        &self,
        dataset: &SpatialDataset,
        permutation: &[usize],
        m: usize,
    ) -> Vec<Vec<usize>> {
        let p = dataset.n_components();
        let base = m / p;
        let rem = m % p;
        let quotas: Vec<usize> = (0..p).map(|c| base + usize::from(c < rem)).collect();
        select_by_quota(dataset, permutation, m, move |_| quotas.clone())
    }
}

/// Roughly 2m/(p+1) nearest prior observations from the observation's own
/// component, the remainder split evenly over the other components.
pub struct PreferentialNeighbors;

impl NeighborRule for PreferentialNeighbors {
    fn name(&self) -> &'static str {
        "preferential"
    }

    fn select(
        &self,
        dataset: &SpatialDataset,
        permutation: &[usize],
        m: usize,
    ) -> Vec<Vec<usize>> {
        let p = dataset.n_components();
        select_by_quota(dataset, permutation, m, move |own| {
            let mut quotas = vec![0usize; p];
            if p == 1 {
                quotas[0] = m;
                return quotas;
            }
            let own_quota = ((2.0 * m as f64 / (p + 1) as f64).round() as usize).min(m);
            let rest = m - own_quota;
            let base = rest / (p - 1);
            let rem = rest % (p - 1);
            quotas[own] = own_quota;
            let mut rank = 0;
            for (c, quota) in quotas.iter_mut().enumerate() {
                if c != own {
                    *quota = base + usize::from(rank < rem);
                    rank += 1;
                }
            }
            quotas
        })
    }
}
