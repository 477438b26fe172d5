//! Bounded-Lipschitz distance between discrete measures:
//! `d(mu, nu) = sup { int f d(mu - nu) : |f| <= 1, Lip(f) <= 1 }`.
//!
//! Collinear supports are handled exactly by dynamic programming over the
//! sorted support; general planar supports by a linear program.

use std::collections::VecDeque;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_complex::Complex64;

use crate::potential::{ComponentMeasure, DiscreteVectorMeasure};
use crate::{Error, Result};

/// Largest merged support handled by the planar linear program.
pub const MAX_PLANAR_SUPPORT: usize = 400;

/// Distance together with an optimal test function on the merged support.
#[derive(Debug, Clone)]
pub struct BlWitness {
    pub distance: f64,
    pub points: Vec<Complex64>,
    pub values: Vec<f64>,
}

impl BlWitness {
    /// McShane extension of the test function, clamped to `[-1, 1]`; keeps
    /// both bounds of the unit ball.
    pub fn extend(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .zip(&self.values)
            .map(|(p, v)| v + (z - p).norm())
            .fold(f64::INFINITY, f64::min)
            .clamp(-1.0, 1.0)
    }
}

pub fn bl_distance(a: &ComponentMeasure, b: &ComponentMeasure) -> Result<f64> {
    Ok(bl_witness(a, b)?.distance)
}

/// Sum of component distances.
pub fn bl_distance_vector(mu: &DiscreteVectorMeasure, nu: &DiscreteVectorMeasure) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::Dimension(format!("{} vs {} components", mu.dim(), nu.dim())));
    }
    (0..mu.dim()).map(|i| bl_distance(mu.component(i), nu.component(i))).sum()
}

pub fn bl_witness(a: &ComponentMeasure, b: &ComponentMeasure) -> Result<BlWitness> {
    let mut support: Vec<(Complex64, f64)> = a
        .nodes()
        .iter()
        .zip(a.weights())
        .map(|(z, w)| (*z, *w))
        .chain(b.nodes().iter().zip(b.weights()).map(|(z, w)| (*z, -*w)))
        .collect();
    support.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    let mut merged: Vec<(Complex64, f64)> = Vec::with_capacity(support.len());
    for (z, w) in support {
        match merged.last_mut() {
            Some(last) if last.0 == z => last.1 += w,
            _ => merged.push((z, w)),
        }
    }
    match line_parameters(&merged) {
        Some(t) => Ok(chain_dp(&merged, &t)),
        None => planar_lp(&merged),
    }
}

/// Coordinates along a common line, or `None` when points are not collinear.
fn line_parameters(points: &[(Complex64, f64)]) -> Option<Vec<f64>> {
    let origin = points[0].0;
    let far = points.iter().map(|p| p.0).max_by(|x, y| (x - origin).norm().total_cmp(&(y - origin).norm()))?;
    let span = (far - origin).norm();
    if span == 0.0 {
        return Some(vec![0.0; points.len()]);
    }
    let dir = (far - origin) / span;
    let tol = 1e-12 * (span + origin.norm());
    let mut t = Vec::with_capacity(points.len());
    for (z, _) in points {
        let local = (z - origin) * dir.conj();
        if local.im.abs() > tol {
            return None;
        }
        t.push(local.re);
    }
    Some(t)
}

/// Concave piecewise-linear function on `[-1, 1]` stored as segments
/// `(slope - offset, length)`, split at the leftmost maximum: `left` holds
/// the increasing part, `right` the rest.
struct Concave {
    left: VecDeque<(f64, f64)>,
    right: VecDeque<(f64, f64)>,
    offset: f64,
    /// Value at `-1`.
    start: f64,
    left_len: f64,
}

impl Concave {
    fn zero() -> Self {
        Self { left: VecDeque::new(), right: VecDeque::from([(0.0, 2.0)]), offset: 0.0, start: 0.0, left_len: 0.0 }
    }

    fn rebalance(&mut self) {
        while let Some(&(s, l)) = self.left.back() {
            if s + self.offset > 0.0 {
                break;
            }
            self.left.pop_back();
            self.left_len -= l;
            self.right.push_front((s, l));
        }
        while let Some(&(s, l)) = self.right.front() {
            if s + self.offset <= 0.0 {
                break;
            }
            self.right.pop_front();
            self.left_len += l;
            self.left.push_back((s, l));
        }
    }

    fn peak(&self) -> f64 {
        (-1.0 + self.left_len).clamp(-1.0, 1.0)
    }

    fn max_value(&self) -> f64 {
        self.start + self.left.iter().map(|(s, l)| (s + self.offset) * l).sum::<f64>()
    }

    fn add_linear(&mut self, slope: f64) {
        self.offset += slope;
        self.start -= slope;
        self.rebalance();
    }

    /// `f -> max_{|f' - f| <= g} V(f')` restricted to `[-1, 1]`: a flat piece
    /// of length `2g` enters at the peak and `g` is cut from each end.
    /// Returns the peak before the step.
    fn dilate(&mut self, g: f64) -> f64 {
        let peak = self.peak();
        if g <= 0.0 {
            return peak;
        }
        self.right.push_front((-self.offset, 2.0 * g));
        let mut need = g;
        while need > 0.0 {
            let from_left = !self.left.is_empty();
            let seg = if from_left { self.left.front_mut() } else { self.right.front_mut() };
            let Some(seg) = seg else { break };
            let cut = seg.1.min(need);
            self.start += (seg.0 + self.offset) * cut;
            seg.1 -= cut;
            need -= cut;
            if from_left {
                self.left_len -= cut;
            }
            if seg.1 <= 0.0 {
                if from_left {
                    self.left.pop_front();
                } else {
                    self.right.pop_front();
                }
            }
        }
        let mut need = g;
        while need > 0.0 {
            let from_right = !self.right.is_empty();
            let seg = if from_right { self.right.back_mut() } else { self.left.back_mut() };
            let Some(seg) = seg else { break };
            let cut = seg.1.min(need);
            seg.1 -= cut;
            need -= cut;
            if !from_right {
                self.left_len -= cut;
            }
            if seg.1 <= 0.0 {
                if from_right {
                    self.right.pop_back();
                } else {
                    self.left.pop_back();
                }
            }
        }
        peak
    }
}

fn chain_dp(points: &[(Complex64, f64)], t: &[f64]) -> BlWitness {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]));
    let mut v = Concave::zero();
    v.add_linear(points[order[0]].1);
    let mut peaks = Vec::with_capacity(order.len());
    for w in order.windows(2) {
        let gap = t[w[1]] - t[w[0]];
        peaks.push(v.dilate(gap));
        v.add_linear(points[w[1]].1);
    }
    let distance = v.max_value().max(0.0);
    let mut values = vec![0.0; points.len()];
    let mut f = v.peak();
    values[*order.last().expect("nonempty")] = f;
    for s in (0..peaks.len()).rev() {
        let gap = t[order[s + 1]] - t[order[s]];
        f = peaks[s].clamp(f - gap, f + gap).clamp(-1.0, 1.0);
        values[order[s]] = f;
    }
    BlWitness { distance, points: points.iter().map(|p| p.0).collect(), values }
}

fn planar_lp(points: &[(Complex64, f64)]) -> Result<BlWitness> {
    let n = points.len();
    if n > MAX_PLANAR_SUPPORT {
        return Err(Error::Budget(format!(
            "planar bounded-Lipschitz distance limited to {MAX_PLANAR_SUPPORT} support points, got {n}"
        )));
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let f: Vec<_> = points.iter().map(|p| lp.add_var(p.1, (-1.0, 1.0))).collect();
    for a in 0..n {
        for b in (a + 1)..n {
            let d = (points[a].0 - points[b].0).norm();
            if d < 2.0 {
                lp.add_constraint([(f[a], 1.0), (f[b], -1.0)], ComparisonOp::Le, d);
                lp.add_constraint([(f[a], -1.0), (f[b], 1.0)], ComparisonOp::Le, d);
            }
        }
    }
    let sol = lp.solve().map_err(|e| Error::Domain(format!("bounded-Lipschitz program failed: {e}")))?;
    Ok(BlWitness {
        distance: sol.objective().max(0.0),
        points: points.iter().map(|p| p.0).collect(),
        values: f.iter().map(|&v| sol[v]).collect(),
    })
}
