use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A finite atomic measure space: labelled atoms with strictly positive mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasureSpace {
    point_ids: Vec<String>,
    weights: Vec<f64>,
    total_mass: f64,
}

impl FiniteMeasureSpace {
    pub fn new(point_ids: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if point_ids.len() != weights.len() {
            return Err(LabError::DimensionMismatch { expected: point_ids.len(), got: weights.len() });
        }
        if point_ids.is_empty() {
            return Err(LabError::Empty("measure space has no atoms"));
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !(weight.is_finite() && weight > 0.0) {
                return Err(LabError::InvalidWeight { index, weight });
            }
        }
        let mut seen = HashSet::with_capacity(point_ids.len());
        for id in &point_ids {
            if !seen.insert(id.as_str()) {
                return Err(LabError::DuplicatePoint(id.clone()));
            }
        }
        let total_mass = weights.iter().sum();
        Ok(Self { point_ids, weights, total_mass })
    }

    /// Builds a space after discarding atoms of mass zero. Returns the space
    /// together with the original indices of the atoms that were kept.
    pub fn dropping_null_atoms(point_ids: Vec<String>, weights: Vec<f64>) -> Result<(Self, Vec<usize>)> {
        if point_ids.len() != weights.len() {
            return Err(LabError::DimensionMismatch { expected: point_ids.len(), got: weights.len() });
        }
        let kept: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] != 0.0).collect();
        let ids = kept.iter().map(|&i| point_ids[i].clone()).collect();
        let w = kept.iter().map(|&i| weights[i]).collect();
        Ok((Self::new(ids, w)?, kept))
    }

    /// `n` atoms labelled `0..n` with mass `1/n` each.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::indexed(vec![1.0 / n as f64; n])
    }

    /// Atoms labelled `0..n` with the given masses.
    pub fn indexed(weights: Vec<f64>) -> Result<Self> {
        Self::new((0..weights.len()).map(|i| i.to_string()).collect(), weights)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point_ids(&self) -> &[String] {
        &self.point_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mass_of(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&x| self.weights[x]).sum()
    }

    /// True when every atom carries the same mass (up to 1e-12 relative).
    pub fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-12 * w0)
    }

    /// Sub-space on the given atoms, in the given order.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self> {
        for &x in subset {
            self.check_atom(x)?;
        }
        Self::new(
            subset.iter().map(|&x| self.point_ids[x].clone()).collect(),
            subset.iter().map(|&x| self.weights[x]).collect(),
        )
    }

    pub fn check_atom(&self, x: usize) -> Result<()> {
        if x < self.len() {
            Ok(())
        } else {
            Err(LabError::UnknownAtom(x))
        }
    }

    pub fn check_subset(&self, subset: &[usize]) -> Result<()> {
        subset.iter().try_for_each(|&x| self.check_atom(x))
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(LabError::DimensionMismatch { expected: self.len(), got: len })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights_and_duplicates() {
        assert!(matches!(
            FiniteMeasureSpace::indexed(vec![1.0, 0.0]),
            Err(LabError::InvalidWeight { index: 1, .. })
        ));
        assert!(FiniteMeasureSpace::indexed(vec![1.0, f64::NAN]).is_err());
        assert!(matches!(
            FiniteMeasureSpace::new(vec!["a".into(), "a".into()], vec![1.0, 1.0]),
            Err(LabError::DuplicatePoint(_))
        ));
        assert!(FiniteMeasureSpace::indexed(vec![]).is_err());
    }

    #[test]
    fn null_atoms_are_dropped() {
        let (space, kept) = FiniteMeasureSpace::dropping_null_atoms(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.5, 0.0, 0.25],
        )
        .unwrap();
        assert_eq!(kept, vec![0, 2]);
        assert_eq!(space.point_ids(), &["a".to_string(), "c".to_string()]);
        assert!((space.total_mass() - 0.75).abs() < 1e-15);
    }
}
