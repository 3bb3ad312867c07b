//! Spatial dataset container: locations in ℝᵈ, component labels, responses.

use crate::error::{Error, Result};

/// A single observation site: a location in ℝᵈ and a component index.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub location: Vec<f64>,
    /// Zero-based component index, < p.
    pub component: usize,
}

impl Observation {
    pub fn new(location: Vec<f64>, component: usize) -> Self {
        Observation {
            location,
            component,
        }
    }
}

/// Squared Euclidean distance between two locations.
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// A multivariate spatial dataset.
///
/// Component labels are sorted; the index of a label in `labels` is the
/// component index used everywhere else (so alphabetical order determines
/// component numbering).
#[derive(Debug, Clone)]
pub struct SpatialDataset {
    locations: Vec<Vec<f64>>,
    components: Vec<usize>,
    responses: Vec<f64>,
    labels: Vec<String>,
    d: usize,
}

impl SpatialDataset {
    /// Builds a dataset from parallel arrays. `labels` must be sorted and
    /// cover every component index that occurs.
    pub fn new(
        locations: Vec<Vec<f64>>,
        components: Vec<usize>,
        responses: Vec<f64>,
        labels: Vec<String>,
    ) -> Result<Self> {
        let n = locations.len();
        if components.len() != n || responses.len() != n {
            return Err(Error::domain(
                "SpatialDataset::new",
                "locations, components, responses must have equal length",
            ));
        }
        if n == 0 {
            return Err(Error::domain("SpatialDataset::new", "empty dataset"));
        }
        let d = locations[0].len();
        if d == 0 || locations.iter().any(|x| x.len() != d) {
            return Err(Error::domain(
                "SpatialDataset::new",
                "all locations must share one dimension d >= 1",
            ));
        }
        if !labels.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::domain(
                "SpatialDataset::new",
                "labels must be sorted and distinct",
            ));
        }
        let p = labels.len();
        if components.iter().any(|&c| c >= p) {
            return Err(Error::domain(
                "SpatialDataset::new",
                "component index out of range",
            ));
        }
        for (c, label) in labels.iter().enumerate() {
            if !components.contains(&c) {
                return Err(Error::EmptyComponent {
                    label: label.clone(),
                });
            }
        }
        Ok(SpatialDataset {
            locations,
            components,
            responses,
            labels,
            d,
        })
    }

    /// Convenience constructor that numbers components 0..p with synthetic
    /// labels "c0".."c{p-1}".
    pub fn from_parts(
        locations: Vec<Vec<f64>>,
        components: Vec<usize>,
        responses: Vec<f64>,
    ) -> Result<Self> {
        let p = components.iter().copied().max().map_or(0, |m| m + 1);
        let labels = (0..p).map(|c| format!("c{c}")).collect();
        SpatialDataset::new(locations, components, responses, labels)
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Spatial dimension d.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Component count p.
    pub fn n_components(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn location(&self, i: usize) -> &[f64] {
        &self.locations[i]
    }

    pub fn component(&self, i: usize) -> usize {
        self.components[i]
    }

    pub fn response(&self, i: usize) -> f64 {
        self.responses[i]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn observation(&self, i: usize) -> Observation {
        Observation::new(self.locations[i].clone(), self.components[i])
    }

    /// Indices of the observations belonging to one component.
    pub fn component_indices(&self, component: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.components[i] == component)
            .collect()
    }

    /// The dataset restricted to one component, with that component mapped
    /// to index 0. Returns the original row indices alongside.
    pub fn component_subset(&self, component: usize) -> Result<(SpatialDataset, Vec<usize>)> {
        let idx = self.component_indices(component);
        if idx.is_empty() {
            return Err(Error::EmptyComponent {
                label: self.labels[component].clone(),
            });
        }
        let ds = SpatialDataset::new(
            idx.iter().map(|&i| self.locations[i].clone()).collect(),
            vec![0; idx.len()],
            idx.iter().map(|&i| self.responses[i]).collect(),
            vec![self.labels[component].clone()],
        )?;
        Ok((ds, idx))
    }

    /// Per-component sample variances of the responses (denominator n_c − 1,
    /// or 1.0 when a component has a single observation).
    pub fn component_variances(&self) -> Vec<f64> {
        let p = self.n_components();
        let mut count = vec![0usize; p];
        let mut mean = vec![0.0; p];
        for i in 0..self.len() {
            count[self.components[i]] += 1;
            mean[self.components[i]] += self.responses[i];
        }
        for c in 0..p {
            mean[c] /= count[c] as f64;
        }
        let mut var = vec![0.0; p];
        for i in 0..self.len() {
            let c = self.components[i];
            var[c] += (self.responses[i] - mean[c]).powi(2);
        }
        for c in 0..p {
            var[c] = if count[c] > 1 {
                var[c] / (count[c] - 1) as f64
            } else {
                1.0
            };
        }
        var
    }

    /// Greatest pairwise distance, approximated by the diagonal of the
    /// coordinate bounding box (exact enough for starting-value heuristics).
    pub fn bounding_diameter(&self) -> f64 {
        let mut lo = self.locations[0].clone();
        let mut hi = self.locations[0].clone();
        for x in &self.locations {
            for k in 0..self.d {
                lo[k] = lo[k].min(x[k]);
                hi[k] = hi[k].max(x[k]);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}
