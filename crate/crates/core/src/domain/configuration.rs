//! Point configurations `Z_k`.

use num_complex::Complex64;

use super::geometry::CompactSetTuple;
use crate::{Error, Result};

/// Points of a configuration, grouped by component.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    points: Vec<Vec<Complex64>>,
}

impl Configuration {
    /// Checks membership in `K_i` (up to the grid snap tolerance) and
    /// pairwise distinctness inside each component.
    pub fn new(points: Vec<Vec<Complex64>>, k: &CompactSetTuple) -> Result<Self> {
        if points.len() != k.dim() {
            return Err(Error::Dimension(format!("{} point groups for {} components", points.len(), k.dim())));
        }
        for (i, group) in points.iter().enumerate() {
            if let Some(z) = group.iter().find(|&&z| !k.contains(i, z)) {
                return Err(Error::Geometry(format!("point {z} is not in K_{}", i + 1)));
            }
        }
        let cfg = Self { points };
        if let Some((i, z)) = cfg.first_coincidence() {
            return Err(Error::DegenerateConfig(format!("point {z} repeated in component {}", i + 1)));
        }
        Ok(cfg)
    }

    /// Raw points without any membership check.
    pub fn from_points(points: Vec<Vec<Complex64>>) -> Self {
        Self { points }
    }

    /// Real points, one list per component.
    pub fn from_real(points: &[Vec<f64>]) -> Self {
        Self {
            points: points.iter().map(|g| g.iter().map(|&x| Complex64::new(x, 0.0)).collect()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn component(&self, i: usize) -> &[Complex64] {
        &self.points[i]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.points
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.points.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.points.iter().map(Vec::len).sum()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self { points: self.points.iter().map(|g| g.iter().map(|z| alpha * z).collect()).collect() }
    }

    pub fn translated(&self, shift: Complex64) -> Self {
        Self { points: self.points.iter().map(|g| g.iter().map(|z| z + shift).collect()).collect() }
    }

    pub(crate) fn first_coincidence(&self) -> Option<(usize, Complex64)> {
        for (i, group) in self.points.iter().enumerate() {
            for (l, z) in group.iter().enumerate() {
                if group[..l].contains(z) {
                    return Some((i, *z));
                }
            }
        }
        None
    }
}
