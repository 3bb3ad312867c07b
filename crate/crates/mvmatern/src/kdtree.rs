//! Incremental kd-tree for exact k-nearest-neighbor search over previously
//! inserted observations.
//!
//! Points are inserted one at a time in plan order (which is randomized, so
//! the unbalanced insert keeps expected logarithmic depth) and queries see
//! exactly the points inserted so far. Candidates are ranked by squared
//! Euclidean distance with ties broken by dataset index, so results are
//! deterministic.

use crate::data::{dist2, SpatialDataset};

#[derive(Debug)]
struct Node {
    point: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug)]
pub(crate) struct KdTree {
    dims: usize,
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl KdTree {
    pub(crate) fn new(dims: usize) -> Self {
        KdTree {
            dims,
            nodes: Vec::new(),
            root: None,
        }
    }

    pub(crate) fn insert(&mut self, dataset: &SpatialDataset, index: usize) {
        let id = self.nodes.len();
        self.nodes.push(Node {
            point: index,
            left: None,
            right: None,
        });
        let Some(mut cur) = self.root else {
            self.root = Some(id);
            return;
        };
        let loc = dataset.location(index);
        let mut depth = 0;
        loop {
            let axis = depth % self.dims;
            let split = dataset.location(self.nodes[cur].point)[axis];
            let go_left = loc[axis] < split;
            let next = if go_left {
                self.nodes[cur].left
            } else {
                self.nodes[cur].right
            };
            match next {
                Some(child) => {
                    cur = child;
                    depth += 1;
                }
                None => {
                    if go_left {
                        self.nodes[cur].left = Some(id);
                    } else {
                        self.nodes[cur].right = Some(id);
                    }
                    return;
                }
            }
        }
    }

    /// Fills `best` with the k nearest inserted points to `query`, sorted by
    /// (squared distance, dataset index).
    pub(crate) fn nearest(
        &self,
        dataset: &SpatialDataset,
        query: &[f64],
        k: usize,
        best: &mut Vec<(f64, usize)>,
    ) {
        best.clear();
        if k == 0 {
            return;
        }
        if let Some(root) = self.root {
            self.search(dataset, query, k, root, 0, best);
        }
    }

    fn search(
        &self,
        dataset: &SpatialDataset,
        query: &[f64],
        k: usize,
        node_id: usize,
        depth: usize,
        best: &mut Vec<(f64, usize)>,
    ) {
        let node = &self.nodes[node_id];
        let loc = dataset.location(node.point);
        let cand = (dist2(query, loc), node.point);
        if best.len() < k || cand < best[best.len() - 1] {
            let pos = best.partition_point(|&b| b < cand);
            best.insert(pos, cand);
            if best.len() > k {
                best.pop();
            }
        }
        let axis = depth % self.dims;
        let diff = query[axis] - loc[axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(child) = near {
            self.search(dataset, query, k, child, depth + 1, best);
        }
        // The far side can only matter if the splitting plane is no farther
        // than the current kth-best distance (ties included, for the index
        // tie-break).
        let plane = diff * diff;
        if best.len() < k || plane <= best[best.len() - 1].0 {
            if let Some(child) = far {
                self.search(dataset, query, k, child, depth + 1, best);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(
        dataset: &SpatialDataset,
        inserted: &[usize],
        query: &[f64],
        k: usize,
    ) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = inserted
            .iter()
            .map(|&i| (dist2(query, dataset.location(i)), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force_with_duplicates_and_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        // Grid coordinates force plenty of exact distance ties.
        let n = 400;
        let locations: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                vec![
                    rng.random_range(0..8) as f64,
                    rng.random_range(0..8) as f64,
                ]
            })
            .collect();
        let components = vec![0usize; n];
        let responses = vec![0.0; n];
        let dataset = SpatialDataset::from_parts(locations, components, responses).unwrap();
        let mut tree = KdTree::new(2);
        let mut inserted = Vec::new();
        let mut found = Vec::new();
        for i in 0..n {
            if i > 0 {
                let q = dataset.location(i);
                for k in [1usize, 3, 10] {
                    tree.nearest(&dataset, q, k, &mut found);
                    let want = brute_force(&dataset, &inserted, q, k);
                    assert_eq!(found, want, "i={i} k={k}");
                }
            }
            tree.insert(&dataset, i);
            inserted.push(i);
        }
        assert_eq!(tree.nodes.len(), n);
    }
}
