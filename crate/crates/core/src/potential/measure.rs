use num_complex::Complex64;

use crate::domain::{CompactSetTuple, Configuration, Grid, MassVector};
use crate::{Error, Result};

/// Mass tolerance for component totals.
pub const MASS_TOL: f64 = 1e-12;

/// A nonnegative measure carried by finitely many nodes. Nodes that come
/// from a grid also carry the regularized self-interaction of their cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMeasure {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    self_log: Option<Vec<f64>>,
}

impl ComponentMeasure {
    /// Point masses without cells.
    pub fn atoms(nodes: Vec<Complex64>, weights: Vec<f64>) -> Result<Self> {
        Self::build(nodes, weights, None)
    }

    /// Weights on the nodes of a grid.
    pub fn on_grid(grid: &Grid, weights: Vec<f64>) -> Result<Self> {
        Self::build(grid.nodes.clone(), weights, Some(grid.self_log.clone()))
    }

    /// `mass` times the normalized quadrature measure of the grid.
    pub fn uniform(grid: &Grid, mass: f64) -> Self {
        let total = grid.total_weight();
        let weights = grid.weights.iter().map(|w| mass * w / total).collect();
        Self { nodes: grid.nodes.clone(), weights, self_log: Some(grid.self_log.clone()) }
    }

    fn build(nodes: Vec<Complex64>, weights: Vec<f64>, self_log: Option<Vec<f64>>) -> Result<Self> {
        if nodes.len() != weights.len() || self_log.as_ref().is_some_and(|s| s.len() != nodes.len()) {
            return Err(Error::Dimension(format!("{} nodes but {} weights", nodes.len(), weights.len())));
        }
        if nodes.is_empty() {
            return Err(Error::Dimension("measure without nodes".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("measure weights must be finite and nonnegative".into()));
        }
        Ok(Self { nodes, weights, self_log })
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn self_log(&self) -> Option<&[f64]> {
        self.self_log.as_deref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled_mass(&self, t: f64) -> Self {
        Self { weights: self.weights.iter().map(|w| t * w).collect(), ..self.clone() }
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::build(self.nodes.clone(), weights, self.self_log.clone())
    }

    /// Image under `z -> alpha z`; cells scale with the nodes.
    pub fn dilated(&self, alpha: Complex64) -> Self {
        let shift = alpha.norm().ln();
        Self {
            nodes: self.nodes.iter().map(|z| alpha * z).collect(),
            weights: self.weights.clone(),
            self_log: self.self_log.as_ref().map(|s| s.iter().map(|v| v - shift).collect()),
        }
    }

    pub fn translated(&self, shift: Complex64) -> Self {
        Self { nodes: self.nodes.iter().map(|z| z + shift).collect(), ..self.clone() }
    }

    /// `int f dmu` over nodes with positive weight.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).filter(|(w, _)| **w > 0.0).map(|(w, v)| w * v).sum()
    }
}

/// `mu = (mu_1, ..., mu_d)` with `mu_i(K_i) = r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVectorMeasure {
    components: Vec<ComponentMeasure>,
}

impl DiscreteVectorMeasure {
    /// Checks that component `i` has mass `r_i`.
    pub fn new(components: Vec<ComponentMeasure>, r: &MassVector) -> Result<Self> {
        if components.len() != r.dim() {
            return Err(Error::Dimension(format!("{} components for {} masses", components.len(), r.dim())));
        }
        for (i, (c, &ri)) in components.iter().zip(r.as_slice()).enumerate() {
            if (c.mass() - ri).abs() > MASS_TOL * ri.max(1.0) {
                return Err(Error::Dimension(format!(
                    "component {} has mass {} but r_{} = {ri}",
                    i + 1,
                    c.mass(),
                    i + 1
                )));
            }
        }
        Ok(Self { components })
    }

    /// Component measures without mass constraints.
    pub fn from_components(components: Vec<ComponentMeasure>) -> Self {
        Self { components }
    }

    /// Weight vectors on the grids of `k`.
    pub fn on_grids(k: &CompactSetTuple, weights: Vec<Vec<f64>>, r: &MassVector) -> Result<Self> {
        if weights.len() != k.dim() {
            return Err(Error::Dimension(format!("{} weight vectors for {} components", weights.len(), k.dim())));
        }
        let comps = weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| ComponentMeasure::on_grid(k.grid(i), w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps, r)
    }

    /// Normalized quadrature measure on every grid, scaled to `r_i`.
    pub fn uniform(k: &CompactSetTuple, r: &MassVector) -> Result<Self> {
        r.check_against(k.dim())?;
        Ok(Self { components: (0..k.dim()).map(|i| ComponentMeasure::uniform(k.grid(i), r.get(i))).collect() })
    }

    /// Empirical measure: each of the `m_i` points of component `i` gets
    /// mass `r_i / m_i`.
    pub fn empirical(z: &Configuration, r: &MassVector) -> Result<Self> {
        r.check_against(z.dim())?;
        let comps = z
            .components()
            .iter()
            .zip(r.as_slice())
            .map(|(pts, &ri)| {
                if pts.is_empty() {
                    return Err(Error::Dimension("empty component in configuration".into()));
                }
                ComponentMeasure::atoms(pts.clone(), vec![ri / pts.len() as f64; pts.len()])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { components: comps })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, i: usize) -> &ComponentMeasure {
        &self.components[i]
    }

    pub fn components(&self) -> &[ComponentMeasure] {
        &self.components
    }

    pub fn masses(&self) -> Vec<f64> {
        self.components.iter().map(ComponentMeasure::mass).collect()
    }

    pub fn weights(&self) -> Vec<Vec<f64>> {
        self.components.iter().map(|c| c.weights().to_vec()).collect()
    }

    pub fn dilated(&self, alpha: Complex64) -> Self {
        Self { components: self.components.iter().map(|c| c.dilated(alpha)).collect() }
    }

    pub fn translated(&self, shift: Complex64) -> Self {
        Self { components: self.components.iter().map(|c| c.translated(shift)).collect() }
    }
}

impl MassVector {
    pub(crate) fn check_against(&self, d: usize) -> Result<()> {
        if self.dim() == d {
            Ok(())
        } else {
            Err(Error::Dimension(format!("{} masses for {d} components", self.dim())))
        }
    }
}
