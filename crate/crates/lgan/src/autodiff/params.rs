use super::AutodiffError;
use crate::matrix::Matrix;
use serde::{Deserialize, Serialize};

pub const PARAMS_FORMAT_VERSION: u32 = 1;

/// Named parameter matrices in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Matrix>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: (usize, usize),
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    params: Vec<Entry>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    /// Registers a parameter and returns its index.
    pub fn add(&mut self, name: impl Into<String>, value: Matrix) -> usize {
        self.names.push(name.into());
        self.values.push(value);
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[Matrix] {
        &self.values
    }

    pub fn value_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.values[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn total_size(&self) -> usize {
        self.values.iter().map(Matrix::len).sum()
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let cp = Checkpoint {
            format_version: PARAMS_FORMAT_VERSION,
            params: self
                .names
                .iter()
                .zip(&self.values)
                .map(|(n, m)| Entry { name: n.clone(), shape: m.shape(), values: m.as_slice().to_vec() })
                .collect(),
        };
        serde_json::to_value(cp).expect("parameters serialize")
    }

    pub fn from_json_value(value: serde_json::Value) -> Result<Self, AutodiffError> {
        let cp: Checkpoint = serde_json::from_value(value)?;
        if cp.format_version != PARAMS_FORMAT_VERSION {
            return Err(AutodiffError::Version(cp.format_version));
        }
        let mut store = ParamStore::new();
        for e in cp.params {
            let (r, c) = e.shape;
            if r * c != e.values.len() {
                return Err(AutodiffError::ParamShape { name: e.name, expected: (r, c), found: (e.values.len(), 1) });
            }
            store.add(e.name, Matrix::from_vec(r, c, e.values));
        }
        Ok(store)
    }

    /// Copies values from `other` by name, checking that every parameter is
    /// present with the expected shape.
    pub fn load_from(&mut self, other: &ParamStore) -> Result<(), AutodiffError> {
        for (name, value) in self.names.iter().zip(self.values.iter_mut()) {
            let i = other.index_of(name).ok_or_else(|| AutodiffError::MissingParam(name.clone()))?;
            let src = &other.values[i];
            if src.shape() != value.shape() {
                return Err(AutodiffError::ParamShape {
                    name: name.clone(),
                    expected: value.shape(),
                    found: src.shape(),
                });
            }
            *value = src.clone();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let mut s = ParamStore::new();
        s.add("a", Matrix::from_vec(2, 2, vec![0.1, -1.0 / 3.0, 1e-300, 7.0]));
        s.add("b", Matrix::zeros(1, 3));
        let text = serde_json::to_string(&s.to_json_value()).unwrap();
        let back = ParamStore::from_json_value(serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_version_and_bad_shape_are_rejected() {
        let mut v = ParamStore::new().to_json_value();
        v["format_version"] = 99.into();
        assert!(matches!(ParamStore::from_json_value(v), Err(AutodiffError::Version(99))));
        let bad = serde_json::json!({"format_version": 1, "params": [{"name": "x", "shape": [2, 2], "values": [1.0]}]});
        assert!(matches!(ParamStore::from_json_value(bad), Err(AutodiffError::ParamShape { .. })));
    }

    #[test]
    fn load_from_checks_names_and_shapes() {
        let mut s = ParamStore::new();
        s.add("w", Matrix::zeros(1, 2));
        let mut other = ParamStore::new();
        other.add("w", Matrix::filled(1, 2, 3.0));
        s.load_from(&other).unwrap();
        assert_eq!(s.values()[0].get(0, 1), 3.0);
        let mut wrong = ParamStore::new();
        wrong.add("w", Matrix::zeros(2, 2));
        assert!(s.load_from(&wrong).is_err());
        assert!(s.load_from(&ParamStore::new()).is_err());
    }
}
