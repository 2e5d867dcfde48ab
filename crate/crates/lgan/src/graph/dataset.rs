use super::{Graph, GraphError};
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

/// A labeled collection of graphs for graph classification.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(name: impl Into<String>, graphs: Vec<Graph>, labels: Vec<usize>) -> Self {
        assert_eq!(graphs.len(), labels.len(), "one label per graph");
        let num_classes = labels.iter().max().map_or(1, |m| m + 1);
        Dataset { name: name.into(), graphs, labels, num_classes }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Attaches input features to every graph using `encoder`.
    pub fn encoded(&self, encoder: &FeatureEncoder) -> Result<Dataset, GraphError> {
        let graphs = self
            .graphs
            .iter()
            .map(|g| encoder.encode(g).and_then(|x| g.clone().with_features(x)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset { name: self.name.clone(), graphs, labels: self.labels.clone(), num_classes: self.num_classes })
    }
}

/// Row `v` is one-hot at `deg(v)`; width `max_degree + 1`.
pub fn degree_one_hot(g: &Graph, max_degree: usize) -> Result<Matrix, GraphError> {
    let mut x = Matrix::zeros(g.node_count(), max_degree + 1);
    for v in 0..g.node_count() {
        let d = g.degree(v);
        if d > max_degree {
            return Err(GraphError::DegreeTooLarge { node: v, degree: d, max_degree });
        }
        x.set(v, d, 1.0);
    }
    Ok(x)
}

/// How raw graphs become input feature matrices.
///
/// Categorical node labels are one-hot encoded when the dataset has them;
/// unlabeled graphs fall back to degree one-hot. Widths are fixed from the
/// whole dataset so every fold sees the same input dimension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureEncoder {
    LabelOneHot { num_labels: usize },
    DegreeOneHot { max_degree: usize },
}

impl FeatureEncoder {
    pub fn for_dataset(ds: &Dataset) -> Self {
        let labeled = !ds.graphs.is_empty() && ds.graphs.iter().all(|g| g.node_labels().is_some());
        if labeled {
            let num_labels = ds
                .graphs
                .iter()
                .flat_map(|g| g.node_labels().unwrap_or(&[]).iter().copied())
                .max()
                .map_or(1, |m| m as usize + 1);
            FeatureEncoder::LabelOneHot { num_labels }
        } else {
            let max_degree = ds.graphs.iter().map(Graph::max_degree).max().unwrap_or(0);
            FeatureEncoder::DegreeOneHot { max_degree }
        }
    }

    pub fn width(&self) -> usize {
        match *self {
            FeatureEncoder::LabelOneHot { num_labels } => num_labels,
            FeatureEncoder::DegreeOneHot { max_degree } => max_degree + 1,
        }
    }

    pub fn encode(&self, g: &Graph) -> Result<Matrix, GraphError> {
        match *self {
            FeatureEncoder::DegreeOneHot { max_degree } => degree_one_hot(g, max_degree),
            FeatureEncoder::LabelOneHot { num_labels } => {
                let labels = g.node_labels().ok_or(GraphError::LabelCount { len: 0, n: g.node_count() })?;
                let mut x = Matrix::zeros(g.node_count(), num_labels);
                for (v, &l) in labels.iter().enumerate() {
                    let l = l as usize;
                    if l >= num_labels {
                        return Err(GraphError::Format {
                            file: "<node labels>".into(),
                            line: v + 1,
                            msg: format!("label {l} outside encoder range 0..{num_labels}"),
                        });
                    }
                    x.set(v, l, 1.0);
                }
                Ok(x)
            }
        }
    }
}
