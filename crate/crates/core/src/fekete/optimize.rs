//! Grid Fekete arrays by greedy insertion and single-point exchange.

use num_complex::Complex64;
use rayon::prelude::*;

use super::vdm::{log_vdm, VdmMode, VdmValue};
use crate::domain::{CompactSetTuple, Configuration, InteractionMatrix, MassVector, WeightTuple};
use crate::potential::DiscreteVectorMeasure;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeketeOptions {
    /// Exchanges must improve `log|VDM^Q|` by more than this.
    pub gain_tol: f64,
    pub max_passes: usize,
}

impl Default for FeketeOptions {
    fn default() -> Self {
        Self { gain_tol: 1e-10, max_passes: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct FeketeResult {
    pub configuration: Configuration,
    /// Grid node index of every point.
    pub node_indices: Vec<Vec<usize>>,
    pub value: VdmValue,
    /// Mass `r_i / m_i` at each point of component `i`.
    pub empirical_measure: DiscreteVectorMeasure,
    pub greedy_steps: usize,
    pub exchange_moves: usize,
    pub exchange_passes: usize,
}

/// Interaction field felt by a candidate node: finite log sums plus counts
/// of coincident points with positive and negative coupling.
struct Field {
    finite: Vec<Vec<f64>>,
    blocked_pos: Vec<Vec<u32>>,
    blocked_neg: Vec<Vec<u32>>,
}

struct State<'a> {
    c: &'a InteractionMatrix,
    k: &'a CompactSetTuple,
    /// `(m_i / r_i) Q_i` at each node.
    penalty: Vec<Vec<f64>>,
    field: Field,
    chosen: Vec<Vec<usize>>,
}

impl<'a> State<'a> {
    fn new(c: &'a InteractionMatrix, k: &'a CompactSetTuple, penalty: Vec<Vec<f64>>) -> Self {
        let zeros_f: Vec<Vec<f64>> = k.grids().iter().map(|g| vec![0.0; g.len()]).collect();
        let zeros_u: Vec<Vec<u32>> = k.grids().iter().map(|g| vec![0; g.len()]).collect();
        Self {
            c,
            k,
            penalty,
            field: Field { finite: zeros_f, blocked_pos: zeros_u.clone(), blocked_neg: zeros_u },
            chosen: vec![vec![]; k.dim()],
        }
    }

    /// Adds (`sign = 1`) or removes (`sign = -1`) the influence of a point
    /// at `y` belonging to component `j`.
    fn update(&mut self, j: usize, y: Complex64, sign: f64) {
        for i in 0..self.k.dim() {
            let cij = self.c.get(i, j);
            if cij == 0.0 {
                continue;
            }
            let nodes = &self.k.grid(i).nodes;
            let fin = &mut self.field.finite[i];
            let blocked = if cij > 0.0 { &mut self.field.blocked_pos[i] } else { &mut self.field.blocked_neg[i] };
            fin.par_iter_mut().zip(blocked.par_iter_mut()).zip(nodes.par_iter()).for_each(|((f, b), x)| {
                let dist = (x - y).norm();
                if dist == 0.0 {
                    if sign > 0.0 {
                        *b += 1;
                    } else {
                        *b -= 1;
                    }
                } else {
                    *f += sign * cij * dist.ln();
                }
            });
        }
    }

    fn gain(&self, i: usize, l: usize) -> f64 {
        if self.penalty[i][l].is_infinite() {
            return f64::NEG_INFINITY;
        }
        if self.field.blocked_pos[i][l] > 0 {
            return f64::NEG_INFINITY;
        }
        if self.field.blocked_neg[i][l] > 0 {
            return f64::INFINITY;
        }
        self.field.finite[i][l] - self.penalty[i][l]
    }

    /// Best node of component `i`, lowest index on ties.
    fn best_node(&self, i: usize) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for l in 0..self.k.grid(i).len() {
            let g = self.gain(i, l);
            if g > best.1 {
                best = (l, g);
            }
        }
        best
    }

    fn node(&self, i: usize, l: usize) -> Complex64 {
        self.k.grid(i).nodes[l]
    }
}

/// Maximizes `log|VDM^Q_k|` over configurations of grid nodes with `m_i`
/// points in `K_i`. Ties go to the lowest component and node index.
pub fn fekete_optimize(
    c: &InteractionMatrix,
    k: &CompactSetTuple,
    q: &WeightTuple,
    r: &MassVector,
    m: &[usize],
    opts: &FeketeOptions,
) -> Result<FeketeResult> {
    let d = k.dim();
    c.check_dim(d, "set tuple")?;
    if m.len() != d || r.dim() != d {
        return Err(Error::Dimension(format!("{} degrees and {} masses for {d} components", m.len(), r.dim())));
    }
    for i in 0..d {
        if m[i] == 0 {
            return Err(Error::Domain(format!("component {} needs at least one point", i + 1)));
        }
        if c.get(i, i) > 0.0 && m[i] > k.grid(i).len() {
            return Err(Error::Geometry(format!(
                "{} points requested on a grid of {} nodes in K_{}",
                m[i],
                k.grid(i).len(),
                i + 1
            )));
        }
    }
    let qv = q.tabulate(k)?;
    let penalty: Vec<Vec<f64>> =
        qv.iter().enumerate().map(|(i, v)| v.iter().map(|x| m[i] as f64 / r.get(i) * x).collect()).collect();
    let mut st = State::new(c, k, penalty);

    let total: usize = m.iter().sum();
    for _ in 0..total {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..d {
            if st.chosen[i].len() == m[i] {
                continue;
            }
            let (l, g) = st.best_node(i);
            if l != usize::MAX && best.is_none_or(|b| g > b.2) {
                best = Some((i, l, g));
            }
        }
        let (i, l, _) = best.ok_or_else(|| {
            Error::Geometry("no admissible node left for greedy insertion".into())
        })?;
        st.chosen[i].push(l);
        st.update(i, st.node(i, l), 1.0);
    }

    let mut moves = 0;
    let mut passes = 0;
    loop {
        passes += 1;
        let mut improved = false;
        for i in 0..d {
            for slot in 0..m[i] {
                let cur = st.chosen[i][slot];
                let y = st.node(i, cur);
                st.update(i, y, -1.0);
                let current_gain = st.gain(i, cur);
                let (best, g) = st.best_node(i);
                if best != cur && g > current_gain + opts.gain_tol {
                    st.chosen[i][slot] = best;
                    st.update(i, st.node(i, best), 1.0);
                    moves += 1;
                    improved = true;
                } else {
                    st.update(i, y, 1.0);
                }
            }
        }
        if !improved || passes >= opts.max_passes {
            break;
        }
    }

    for ch in st.chosen.iter_mut() {
        ch.sort_unstable();
    }
    let points: Vec<Vec<Complex64>> =
        st.chosen.iter().enumerate().map(|(i, idx)| idx.iter().map(|&l| st.node(i, l)).collect()).collect();
    let configuration = Configuration::from_points(points);
    let value = log_vdm(&configuration, c, m, r, Some(q), VdmMode::Permissive)?;
    let empirical_measure = DiscreteVectorMeasure::empirical(&configuration, r)?;
    Ok(FeketeResult {
        configuration,
        node_indices: st.chosen,
        value,
        empirical_measure,
        greedy_steps: total,
        exchange_moves: moves,
        exchange_passes: passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_on_the_interval() {
        let k = CompactSetTuple::intervals(&[(-1.0, 1.0)], 4001).unwrap();
        let res = fekete_optimize(
            &InteractionMatrix::identity(1),
            &k,
            &WeightTuple::zero(1),
            &MassVector::ones(1),
            &[3],
            &FeketeOptions::default(),
        )
        .unwrap();
        let xs: Vec<f64> = res.configuration.component(0).iter().map(|z| z.re).collect();
        assert_eq!(xs, vec![-1.0, 0.0, 1.0]);
        assert!((res.value.log_vdm.exp() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_point_has_unit_diameter() {
        let k = CompactSetTuple::intervals(&[(0.0, 1.0)], 11).unwrap();
        let res = fekete_optimize(
            &InteractionMatrix::identity(1),
            &k,
            &WeightTuple::zero(1),
            &MassVector::ones(1),
            &[1],
            &FeketeOptions::default(),
        )
        .unwrap();
        assert_eq!(res.value.log_vdm, 0.0);
        assert_eq!(res.value.normalized, 1.0);
    }

    #[test]
    fn too_many_points_for_the_grid() {
        let k = CompactSetTuple::intervals(&[(0.0, 1.0)], 5).unwrap();
        let err = fekete_optimize(
            &InteractionMatrix::identity(1),
            &k,
            &WeightTuple::zero(1),
            &MassVector::ones(1),
            &[6],
            &FeketeOptions::default(),
        );
        assert!(matches!(err, Err(Error::Geometry(_))));
    }
}
