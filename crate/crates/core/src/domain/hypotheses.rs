//! Standing hypotheses for possibly intersecting sets.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;

use super::geometry::CompactSetTuple;
use super::matrix::InteractionMatrix;
use crate::{Error, Result};

/// Result of checking one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisOutcome {
    pub passed: bool,
    pub diagnostics: Vec<String>,
}

/// Outcome of [`validate_hypotheses`].
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    /// `disjoint[i][j]` is true when `K_i` and `K_j` do not meet.
    pub disjoint: Vec<Vec<bool>>,
    /// `c_ij >= 0` whenever `K_i` and `K_j` meet.
    pub nonnegative_on_intersections: HypothesisOutcome,
    /// A vector `y` in the range of `C` with `y_i y_j > 0` whenever `K_i`
    /// and `K_j` meet.
    pub range_vector: HypothesisOutcome,
    /// The witness `y`, when one exists.
    pub witness: Option<Vec<f64>>,
    /// Linearly dependent column subsets whose sets share grid cells.
    pub dependent_columns: HypothesisOutcome,
    pub flagged_subsets: Vec<Vec<usize>>,
}

impl HypothesisReport {
    pub fn passed(&self) -> bool {
        self.nonnegative_on_intersections.passed && self.range_vector.passed && self.dependent_columns.passed
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = vec![];
        if !self.nonnegative_on_intersections.passed {
            out.push("nonnegative coupling on intersecting sets");
        }
        if !self.range_vector.passed {
            out.push("same-sign range vector");
        }
        if !self.dependent_columns.passed {
            out.push("dependent columns on sets of zero capacity");
        }
        out
    }
}

const MAX_SUBSET_DIM: usize = 16;

pub fn validate_hypotheses(c: &InteractionMatrix, k: &CompactSetTuple) -> Result<HypothesisReport> {
    let d = c.dim();
    if k.dim() != d {
        return Err(Error::Dimension(format!("matrix has dimension {d} but {} sets were given", k.dim())));
    }
    if d > MAX_SUBSET_DIM {
        return Err(Error::Dimension(format!("hypothesis checks support at most {MAX_SUBSET_DIM} components")));
    }

    let mut hyp = HypothesisOutcome { passed: true, diagnostics: vec![] };
    for i in 0..d {
        for j in (i + 1)..d {
            if k.intersects(i, j) && c.get(i, j) < 0.0 {
                hyp.passed = false;
                hyp.diagnostics.push(format!(
                    "K_{} and K_{} intersect but c_{}{} = {}",
                    i + 1,
                    j + 1,
                    i + 1,
                    j + 1,
                    c.get(i, j)
                ));
            }
        }
    }

    let witness = same_sign_range_vector(c, k);
    let range_vector = HypothesisOutcome {
        passed: witness.is_some(),
        diagnostics: match &witness {
            Some(y) => vec![format!("witness y = {y:?}")],
            None => vec!["no vector in the range of C has the required sign pattern".into()],
        },
    };

    let flagged_subsets = dependent_column_subsets(c, k);
    let dependent_columns = HypothesisOutcome {
        passed: flagged_subsets.is_empty(),
        diagnostics: flagged_subsets
            .iter()
            .map(|s| {
                let names: Vec<String> = s.iter().map(|i| (i + 1).to_string()).collect();
                format!("columns {{{}}} are dependent and their sets share grid cells", names.join(","))
            })
            .collect(),
    };

    Ok(HypothesisReport {
        disjoint: k.disjointness_matrix(),
        nonnegative_on_intersections: hyp,
        range_vector,
        witness,
        dependent_columns,
        flagged_subsets,
    })
}

/// Connected components of the intersection graph.
fn intersection_components(k: &CompactSetTuple) -> Vec<usize> {
    let d = k.dim();
    let mut label: Vec<usize> = (0..d).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..d {
        for j in (i + 1)..d {
            if k.intersects(i, j) {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    (0..d).map(|i| root(&mut label, i)).collect()
}

/// Since `K_i` meets itself, every `y_i` must be nonzero, and all sets in
/// one connected component of the intersection graph share a sign. Each
/// sign pattern is a linear feasibility problem `s_i (C x)_i >= 1`.
fn same_sign_range_vector(c: &InteractionMatrix, k: &CompactSetTuple) -> Option<Vec<f64>> {
    let d = c.dim();
    let comp = intersection_components(k);
    let mut roots: Vec<usize> = comp.clone();
    roots.sort_unstable();
    roots.dedup();
    // a global sign flip maps solutions to solutions, so the first
    // component is fixed to be positive
    let patterns = 1usize << (roots.len() - 1);
    for pattern in 0..patterns {
        let sign = |i: usize| {
            let idx = roots.iter().position(|&r| r == comp[i]).expect("root present");
            if idx > 0 && (pattern >> (idx - 1)) & 1 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let x: Vec<_> = (0..d).map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
        for i in 0..d {
            let s = sign(i);
            let row: Vec<_> = (0..d).map(|j| (x[j], s * c.get(i, j))).collect();
            lp.add_constraint(&row, ComparisonOp::Ge, 1.0);
        }
        if let Ok(sol) = lp.solve() {
            let xs: Vec<f64> = x.iter().map(|&v| sol[v]).collect();
            return Some((0..d).map(|i| (0..d).map(|j| c.get(i, j) * xs[j]).sum()).collect());
        }
    }
    None
}

fn dependent_column_subsets(c: &InteractionMatrix, k: &CompactSetTuple) -> Vec<Vec<usize>> {
    let d = c.dim();
    let full = c.to_dmatrix();
    let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = vec![];
    for mask in 1usize..(1 << d) {
        let subset: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
        if subset.len() < 2 {
            continue;
        }
        let sub = DMatrix::from_fn(d, subset.len(), |r, s| full[(r, subset[s])]);
        let rank = sub.svd(false, false).rank(1e-10 * scale.max(1.0));
        if rank < subset.len() && shares_grid_cells(k, &subset) {
            out.push(subset);
        }
    }
    out
}

/// Capacity proxy: at least two nodes of the first set's grid lie in every
/// other set of the subset.
fn shares_grid_cells(k: &CompactSetTuple, subset: &[usize]) -> bool {
    let first = subset[0];
    let tol = 1e-12 * (1.0 + k.max_modulus());
    k.grid(first)
        .nodes
        .iter()
        .filter(|&&z| subset[1..].iter().all(|&j| k.set(j).contains(z, tol)))
        .take(2)
        .count()
        >= 2
}
