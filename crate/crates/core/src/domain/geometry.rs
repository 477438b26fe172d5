//! Compact sets built from segments, discs and circles, and their
//! quadrature grids.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{Error, Result};

/// Self-energy constant of a uniformly charged segment of unit length:
/// `-int int log|x - y| dx dy` over `[0,1]^2`.
pub const SEGMENT_SELF_CONSTANT: f64 = 1.5;
/// Same quantity for the unit square.
pub const SQUARE_SELF_CONSTANT: f64 = 0.805_086_721_950_087_2;

/// One closed piece of a compact set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Piece {
    /// Straight segment between two points; real intervals have real ends.
    Segment { start: Complex64, end: Complex64 },
    /// Closed disc with its area measure.
    Disc { center: Complex64, radius: f64 },
    /// Circle with its arclength measure.
    Circle { center: Complex64, radius: f64 },
}

impl Piece {
    pub fn interval(a: f64, b: f64) -> Self {
        Piece::Segment { start: Complex64::new(a, 0.0), end: Complex64::new(b, 0.0) }
    }

    pub fn disc(cx: f64, cy: f64, radius: f64) -> Self {
        Piece::Disc { center: Complex64::new(cx, cy), radius }
    }

    pub fn circle(cx: f64, cy: f64, radius: f64) -> Self {
        Piece::Circle { center: Complex64::new(cx, cy), radius }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Piece::Segment { start, end } => {
                start.is_finite() && end.is_finite() && (end - start).norm() > 0.0
            }
            Piece::Disc { center, radius } | Piece::Circle { center, radius } => {
                center.is_finite() && radius.is_finite() && radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Geometry(format!("degenerate piece {self:?} has zero quadrature mass")))
        }
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        match *self {
            Piece::Segment { start, end } => segment_distance(start, end, z) <= tol,
            Piece::Disc { center, radius } => (z - center).norm() <= radius + tol,
            Piece::Circle { center, radius } => ((z - center).norm() - radius).abs() <= tol,
        }
    }

    /// Distance from `z` to the relative boundary of the piece: segment
    /// ends, or the rim of a disc. Circles have no relative boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        match *self {
            Piece::Segment { start, end } => (z - start).norm().min((z - end).norm()),
            Piece::Disc { center, radius } => (radius - (z - center).norm()).abs(),
            Piece::Circle { .. } => f64::INFINITY,
        }
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        match *self {
            Piece::Segment { start, end } => Piece::Segment { start: alpha * start, end: alpha * end },
            Piece::Disc { center, radius } => Piece::Disc { center: alpha * center, radius: alpha.norm() * radius },
            Piece::Circle { center, radius } => {
                Piece::Circle { center: alpha * center, radius: alpha.norm() * radius }
            }
        }
    }

    pub fn translated(&self, shift: Complex64) -> Self {
        match *self {
            Piece::Segment { start, end } => Piece::Segment { start: start + shift, end: end + shift },
            Piece::Disc { center, radius } => Piece::Disc { center: center + shift, radius },
            Piece::Circle { center, radius } => Piece::Circle { center: center + shift, radius },
        }
    }

    /// Farthest distance from the origin reached by the piece.
    fn max_modulus(&self) -> f64 {
        match *self {
            Piece::Segment { start, end } => start.norm().max(end.norm()),
            Piece::Disc { center, radius } | Piece::Circle { center, radius } => center.norm() + radius,
        }
    }
}

fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let ab = b - a;
    let t = (((z - a) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0);
    (a + ab * t - z).norm()
}

/// Closed parameter range `[lo, hi]` of the part of segment `a + t (b - a)`,
/// `t in [0,1]`, lying in the closed disc `|z - c| <= radius`.
fn segment_disc_range(a: Complex64, b: Complex64, c: Complex64, radius: f64) -> Option<(f64, f64)> {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    let t0 = ((c - a) * ab.conj()).re / len2;
    let foot = a + ab * t0;
    let dist2 = (foot - c).norm_sqr();
    let r2 = radius * radius;
    if dist2 > r2 {
        return None;
    }
    let half = ((r2 - dist2) / len2).sqrt();
    let (lo, hi) = ((t0 - half).max(0.0), (t0 + half).min(1.0));
    (lo <= hi).then_some((lo, hi))
}

/// Relation between two pieces: closed intersection non-empty, and
/// intersection carrying positive length or area.
fn piece_relation(p: &Piece, q: &Piece) -> (bool, bool) {
    use Piece::*;
    const EPS: f64 = 1e-12;
    match (*p, *q) {
        (Segment { start: a, end: b }, Segment { start: c, end: e }) => {
            let ab = b - a;
            let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
            let scale = ab.norm() * (e - c).norm();
            let collinear = cross(ab, e - c).abs() <= EPS * scale
                && cross(ab, c - a).abs() <= EPS * ab.norm() * (c - a).norm().max(1.0);
            if collinear {
                let proj = |z: Complex64| ((z - a) * ab.conj()).re / ab.norm_sqr();
                let (s, t) = (proj(c), proj(e));
                let (lo, hi) = (s.min(t).max(0.0), s.max(t).min(1.0));
                (lo <= hi, hi - lo > EPS)
            } else {
                let touches = segment_distance(a, b, c) <= EPS
                    || segment_distance(a, b, e) <= EPS
                    || segment_distance(c, e, a) <= EPS
                    || segment_distance(c, e, b) <= EPS;
                let d1 = cross(ab, c - a);
                let d2 = cross(ab, e - a);
                let d3 = cross(e - c, a - c);
                let d4 = cross(e - c, b - c);
                let crosses = d1 * d2 < 0.0 && d3 * d4 < 0.0;
                (touches || crosses, false)
            }
        }
        (Segment { start, end }, Disc { center, radius }) | (Disc { center, radius }, Segment { start, end }) => {
            match segment_disc_range(start, end, center, radius) {
                None => (false, false),
                Some((lo, hi)) => (true, hi - lo > EPS),
            }
        }
        (Segment { start, end }, Circle { center, radius }) | (Circle { center, radius }, Segment { start, end }) => {
            let near = segment_distance(start, end, center);
            let far = (start - center).norm().max((end - center).norm());
            (near <= radius + EPS && far >= radius - EPS, false)
        }
        (Disc { center: c1, radius: r1 }, Disc { center: c2, radius: r2 }) => {
            let dist = (c1 - c2).norm();
            (dist <= r1 + r2, dist < r1 + r2)
        }
        (Disc { center: c1, radius: r1 }, Circle { center: c2, radius: r2 })
        | (Circle { center: c2, radius: r2 }, Disc { center: c1, radius: r1 }) => {
            let gap = ((c1 - c2).norm() - r2).abs();
            (gap <= r1, gap < r1)
        }
        (Circle { center: c1, radius: r1 }, Circle { center: c2, radius: r2 }) => {
            let dist = (c1 - c2).norm();
            let same = dist <= EPS && (r1 - r2).abs() <= EPS;
            (same || ((r1 - r2).abs() <= dist && dist <= r1 + r2), same)
        }
    }
}

/// Cell self-energy rule: a cell of diameter `h` carrying weight `w`
/// contributes `w^2 (log(1/h) + c0)` to the energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergyRule {
    pub segment_constant: f64,
    pub area_constant: f64,
}

impl Default for SelfEnergyRule {
    fn default() -> Self {
        Self { segment_constant: SEGMENT_SELF_CONSTANT, area_constant: SQUARE_SELF_CONSTANT }
    }
}

/// Grid resolution: number of nodes placed on every piece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nodes_per_piece: usize,
    pub self_energy: SelfEnergyRule,
    /// Membership tolerance; half the grid spacing when `None`.
    pub snap_tol: Option<f64>,
}

impl GridSpec {
    pub fn new(nodes_per_piece: usize) -> Self {
        Self { nodes_per_piece, self_energy: SelfEnergyRule::default(), snap_tol: None }
    }
}

/// Quadrature grid on one compact set. Every node owns a cell; the cell's
/// measure is the quadrature weight and its size drives the self-energy.
#[derive(Debug, Clone)]
pub struct Grid {
    pub nodes: Vec<Complex64>,
    /// Arclength or area of each cell.
    pub weights: Vec<f64>,
    /// Regularized self-interaction `log(1/h) + c0` of each cell.
    pub self_log: Vec<f64>,
    /// Largest node spacing; half of it is the membership snap tolerance.
    pub spacing: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn snap_tolerance(&self) -> f64 {
        0.5 * self.spacing
    }

    /// Index of the node closest to `z`; the lowest index wins ties.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, node) in self.nodes.iter().enumerate() {
            let d = (node - z).norm();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        best
    }

    fn extend(&mut self, other: Grid) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
        self.self_log.extend(other.self_log);
        self.spacing = self.spacing.max(other.spacing);
    }

    fn segment(start: Complex64, end: Complex64, n: usize, rule: &SelfEnergyRule) -> Grid {
        let length = (end - start).norm();
        if n <= 1 {
            return Grid {
                nodes: vec![(start + end) * 0.5],
                weights: vec![length],
                self_log: vec![-length.ln() + rule.segment_constant],
                spacing: length,
            };
        }
        let h = length / (n - 1) as f64;
        let mut grid = Grid { nodes: Vec::with_capacity(n), weights: Vec::with_capacity(n), self_log: Vec::with_capacity(n), spacing: h };
        for k in 0..n {
            let t = k as f64 / (n - 1) as f64;
            grid.nodes.push(start + (end - start) * t);
            let cell = if k == 0 || k == n - 1 { 0.5 * h } else { h };
            grid.weights.push(cell);
            grid.self_log.push(-cell.ln() + rule.segment_constant);
        }
        grid
    }

    fn circle(center: Complex64, radius: f64, n: usize, rule: &SelfEnergyRule) -> Grid {
        let n = n.max(3);
        let arc = 2.0 * PI * radius / n as f64;
        let nodes = (0..n)
            .map(|k| center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64))
            .collect();
        Grid {
            nodes,
            weights: vec![arc; n],
            self_log: vec![-arc.ln() + rule.segment_constant; n],
            spacing: arc,
        }
    }

    fn disc(center: Complex64, radius: f64, n: usize, rule: &SelfEnergyRule) -> Grid {
        let rings = ((n as f64 / PI).sqrt().round() as usize).max(1);
        let dr = radius / rings as f64;
        let mut grid = Grid { nodes: vec![center], weights: vec![], self_log: vec![], spacing: dr };
        let center_area = PI * 0.25 * dr * dr;
        grid.weights.push(center_area);
        grid.self_log.push(-0.5 * center_area.ln() + rule.area_constant);
        for j in 1..=rings {
            let rho = j as f64 * dr;
            let count = ((2.0 * PI * j as f64).round() as usize).max(6);
            let inner = (j as f64 - 0.5) * dr;
            let outer = ((j as f64 + 0.5) * dr).min(radius);
            let area = PI * (outer * outer - inner * inner) / count as f64;
            for k in 0..count {
                let theta = 2.0 * PI * k as f64 / count as f64;
                grid.nodes.push(center + Complex64::from_polar(rho, theta));
                grid.weights.push(area);
                grid.self_log.push(-0.5 * area.ln() + rule.area_constant);
            }
            grid.spacing = grid.spacing.max(2.0 * PI * rho / count as f64);
        }
        grid
    }
}

/// A compact set `K_i`: a finite union of pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactSet {
    pieces: Vec<Piece>,
}

impl CompactSet {
    pub fn new(pieces: Vec<Piece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::Geometry("compact set without pieces".into()));
        }
        for p in &pieces {
            p.validate()?;
        }
        for (a, p) in pieces.iter().enumerate() {
            for q in &pieces[a + 1..] {
                if piece_relation(p, q).1 {
                    return Err(Error::Geometry(format!(
                        "pieces {p:?} and {q:?} overlap; merge them into one piece"
                    )));
                }
            }
        }
        Ok(Self { pieces })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![Piece::interval(a, b)])
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn contains(&self, z: Complex64, tol: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(z, tol))
    }

    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        self.pieces.iter().map(|p| p.boundary_distance(z)).fold(f64::INFINITY, f64::min)
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self { pieces: self.pieces.iter().map(|p| p.scaled(alpha)).collect() }
    }

    pub fn translated(&self, shift: Complex64) -> Self {
        Self { pieces: self.pieces.iter().map(|p| p.translated(shift)).collect() }
    }

    pub fn max_modulus(&self) -> f64 {
        self.pieces.iter().map(Piece::max_modulus).fold(0.0, f64::max)
    }

    /// (closed sets intersect, intersection has positive length or area)
    pub fn relation(&self, other: &CompactSet) -> (bool, bool) {
        let mut out = (false, false);
        for p in &self.pieces {
            for q in &other.pieces {
                let (hit, positive) = piece_relation(p, q);
                out.0 |= hit;
                out.1 |= positive;
            }
        }
        out
    }

    pub fn build_grid(&self, spec: &GridSpec) -> Result<Grid> {
        let n = spec.nodes_per_piece;
        if n == 0 {
            return Err(Error::Geometry("grid resolution must be positive".into()));
        }
        let mut grid: Option<Grid> = None;
        for p in &self.pieces {
            let g = match *p {
                Piece::Segment { start, end } => Grid::segment(start, end, n, &spec.self_energy),
                Piece::Disc { center, radius } => Grid::disc(center, radius, n, &spec.self_energy),
                Piece::Circle { center, radius } => Grid::circle(center, radius, n, &spec.self_energy),
            };
            match grid.as_mut() {
                None => grid = Some(g),
                Some(acc) => acc.extend(g),
            }
        }
        let grid = grid.expect("at least one piece");
        if !(grid.total_weight() > 0.0) {
            return Err(Error::Geometry("grid carries no quadrature mass".into()));
        }
        Ok(grid)
    }
}

/// The tuple `K = (K_1, ..., K_d)` together with a grid on every component.
#[derive(Debug, Clone)]
pub struct CompactSetTuple {
    sets: Vec<CompactSet>,
    grids: Vec<Grid>,
    spec: GridSpec,
    intersects: Vec<Vec<bool>>,
    positive_overlap: Vec<Vec<bool>>,
}

impl CompactSetTuple {
    pub fn new(sets: Vec<CompactSet>, spec: GridSpec) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Dimension("no components".into()));
        }
        let grids = sets.iter().map(|s| s.build_grid(&spec)).collect::<Result<Vec<_>>>()?;
        let d = sets.len();
        let mut intersects = vec![vec![true; d]; d];
        let mut positive_overlap = vec![vec![true; d]; d];
        for i in 0..d {
            for j in (i + 1)..d {
                let (hit, pos) = sets[i].relation(&sets[j]);
                intersects[i][j] = hit;
                intersects[j][i] = hit;
                positive_overlap[i][j] = pos;
                positive_overlap[j][i] = pos;
            }
        }
        Ok(Self { sets, grids, spec, intersects, positive_overlap })
    }

    /// Components given as real intervals, one interval each.
    pub fn intervals(bounds: &[(f64, f64)], nodes: usize) -> Result<Self> {
        let sets = bounds.iter().map(|&(a, b)| CompactSet::interval(a, b)).collect::<Result<Vec<_>>>()?;
        Self::new(sets, GridSpec::new(nodes))
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }

    pub fn set(&self, i: usize) -> &CompactSet {
        &self.sets[i]
    }

    pub fn sets(&self) -> &[CompactSet] {
        &self.sets
    }

    pub fn grid(&self, i: usize) -> &Grid {
        &self.grids[i]
    }

    pub fn grids(&self) -> &[Grid] {
        &self.grids
    }

    pub fn grid_spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn total_nodes(&self) -> usize {
        self.grids.iter().map(Grid::len).sum()
    }

    pub fn intersects(&self, i: usize, j: usize) -> bool {
        self.intersects[i][j]
    }

    pub fn positive_overlap(&self, i: usize, j: usize) -> bool {
        self.positive_overlap[i][j]
    }

    pub fn pairwise_disjoint(&self) -> bool {
        let d = self.dim();
        (0..d).all(|i| ((i + 1)..d).all(|j| !self.intersects[i][j]))
    }

    pub fn disjointness_matrix(&self) -> Vec<Vec<bool>> {
        self.intersects.iter().map(|row| row.iter().map(|x| !x).collect()).collect()
    }

    /// Whether `z` lies in `K_i` up to the snap tolerance.
    pub fn contains(&self, i: usize, z: Complex64) -> bool {
        self.sets[i].contains(z, self.spec.snap_tol.unwrap_or_else(|| self.grids[i].snap_tolerance()))
    }

    pub fn scaled(&self, alpha: Complex64) -> Result<Self> {
        Self::new(self.sets.iter().map(|s| s.scaled(alpha)).collect(), self.spec)
    }

    pub fn translated(&self, shift: Complex64) -> Result<Self> {
        Self::new(self.sets.iter().map(|s| s.translated(shift)).collect(), self.spec)
    }

    pub fn max_modulus(&self) -> f64 {
        self.sets.iter().map(CompactSet::max_modulus).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_grid_has_endpoint_half_cells() {
        let k = CompactSet::interval(-1.0, 1.0).unwrap();
        let g = k.build_grid(&GridSpec::new(5)).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.nodes[0].re, -1.0);
        assert_eq!(g.nodes[4].re, 1.0);
        assert!((g.total_weight() - 2.0).abs() < 1e-14);
        assert!((g.weights[0] - 0.25).abs() < 1e-15);
        assert!((g.self_log[2] - (-(0.5f64).ln() + 1.5)).abs() < 1e-14);
    }

    #[test]
    fn disc_and_circle_quadrature_masses() {
        let disc = CompactSet::new(vec![Piece::disc(0.0, 0.0, 1.0)]).unwrap();
        let g = disc.build_grid(&GridSpec::new(400)).unwrap();
        assert!((g.total_weight() - PI).abs() < 1e-12);
        let circle = CompactSet::new(vec![Piece::circle(0.0, 0.0, 2.0)]).unwrap();
        let g = circle.build_grid(&GridSpec::new(64)).unwrap();
        assert!((g.total_weight() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn relations_are_computed_from_geometry() {
        let a = CompactSet::interval(-1.0, -0.2).unwrap();
        let b = CompactSet::interval(0.2, 1.0).unwrap();
        assert_eq!(a.relation(&b), (false, false));
        let c = CompactSet::interval(-0.5, 1.0).unwrap();
        assert_eq!(a.relation(&c), (true, true));
        let touching = CompactSet::interval(-0.2, 0.0).unwrap();
        assert_eq!(a.relation(&touching), (true, false));
        let disc = CompactSet::new(vec![Piece::disc(0.0, 0.5, 0.6)]).unwrap();
        assert!(b.relation(&disc).0);
        let circle = CompactSet::new(vec![Piece::circle(0.0, 0.0, 1.0)]).unwrap();
        assert_eq!(b.relation(&circle), (true, false));
        let far = CompactSet::new(vec![Piece::disc(5.0, 5.0, 1.0)]).unwrap();
        assert_eq!(circle.relation(&far), (false, false));
    }

    #[test]
    fn degenerate_pieces_are_rejected() {
        assert!(CompactSet::interval(1.0, 1.0).is_err());
        assert!(CompactSet::new(vec![Piece::disc(0.0, 0.0, 0.0)]).is_err());
        assert!(CompactSet::new(vec![Piece::interval(0.0, 1.0), Piece::interval(0.5, 2.0)]).is_err());
    }

    #[test]
    fn membership_uses_snap_tolerance() {
        let k = CompactSetTuple::intervals(&[(0.0, 1.0)], 11).unwrap();
        assert!(k.contains(0, Complex64::new(1.04, 0.0)));
        assert!(!k.contains(0, Complex64::new(1.06, 0.0)));
    }
}
