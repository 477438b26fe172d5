use num_complex::Complex64;
use rayon::prelude::*;

use super::measure::{ComponentMeasure, DiscreteVectorMeasure};
use crate::domain::{InteractionMatrix, WeightTuple};
use crate::{Error, Result};

/// Treatment of an evaluation point that coincides with a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Use the node's cell self-interaction.
    #[default]
    Regularized,
    /// Return `+inf` when the coincident node carries mass.
    Strict,
}

/// `log(1/|z - t|)`, or the mean cell self-interaction when `z == t`.
pub(crate) fn kernel_entry(z: Complex64, t: Complex64, self_z: Option<f64>, self_t: Option<f64>) -> f64 {
    if z == t {
        match (self_z, self_t) {
            (Some(a), Some(b)) => 0.5 * (a + b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => f64::INFINITY,
        }
    } else {
        -(z - t).norm().ln()
    }
}

/// `U^mu(z) = sum w log(1/|z - t|)`.
pub fn log_potential(mu: &ComponentMeasure, z: Complex64, mode: EvalMode) -> f64 {
    let cells = mu.self_log();
    mu.nodes()
        .iter()
        .zip(mu.weights())
        .enumerate()
        .filter(|(_, (_, w))| **w > 0.0)
        .map(|(k, (&t, &w))| {
            if t == z {
                match mode {
                    EvalMode::Strict => f64::INFINITY,
                    EvalMode::Regularized => w * cells.map_or(f64::INFINITY, |s| s[k]),
                }
            } else {
                -w * (z - t).norm().ln()
            }
        })
        .sum()
}

/// `U^mu_i(z) = sum_j c_ij U^{mu_j}(z)`.
pub fn partial_potential(
    mu: &DiscreteVectorMeasure,
    c: &InteractionMatrix,
    i: usize,
    z: Complex64,
    mode: EvalMode,
) -> Result<f64> {
    c.check_dim(mu.dim(), "measure")?;
    if i >= mu.dim() {
        return Err(Error::Dimension(format!("component index {i} out of range 0..{}", mu.dim())));
    }
    Ok((0..mu.dim())
        .filter(|&j| c.get(i, j) != 0.0)
        .map(|j| c.get(i, j) * log_potential(mu.component(j), z, mode))
        .sum())
}

/// `I(a, b) = sum sum w w' log(1/|z - t|)`. Coincident nodes use the cell
/// self-interaction, so `I(a, a)` approximates the continuous energy.
pub fn mutual_energy(a: &ComponentMeasure, b: &ComponentMeasure) -> f64 {
    let (sa, sb) = (a.self_log(), b.self_log());
    let bw = b.weights();
    let bn = b.nodes();
    a.nodes()
        .par_iter()
        .zip(a.weights().par_iter())
        .enumerate()
        .filter(|(_, (_, w))| **w > 0.0)
        .map(|(k, (&z, &w))| {
            let mut row = 0.0;
            for (l, (&t, &v)) in bn.iter().zip(bw).enumerate() {
                if v > 0.0 {
                    row += v * kernel_entry(z, t, sa.map(|s| s[k]), sb.map(|s| s[l]));
                }
            }
            w * row
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// `sum_ij c_ij I(mu_i, nu_j)`.
pub fn cross_energy(mu: &DiscreteVectorMeasure, nu: &DiscreteVectorMeasure, c: &InteractionMatrix) -> Result<f64> {
    c.check_dim(mu.dim(), "measure")?;
    c.check_dim(nu.dim(), "measure")?;
    let d = c.dim();
    let mut total = 0.0;
    for i in 0..d {
        for j in 0..d {
            if c.get(i, j) != 0.0 {
                total += c.get(i, j) * mutual_energy(mu.component(i), nu.component(j));
            }
        }
    }
    Ok(total)
}

/// Mutual energies, field integrals and the totals `E` and `E_Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    /// `I(mu_i, mu_j)`.
    pub mutual: Vec<Vec<f64>>,
    /// `int Q_i dmu_i`.
    pub field: Vec<f64>,
    pub energy: f64,
    pub weighted_energy: f64,
}

impl EnergyBreakdown {
    /// Rows `term,i,j,value`: one per pair, one per field term, then totals.
    /// Indices are 1-based.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "i", "j", "value"])?;
        let d = self.field.len();
        for i in 0..d {
            for j in 0..d {
                w.write_record(["mutual", &(i + 1).to_string(), &(j + 1).to_string(), &fmt(self.mutual[i][j])])?;
            }
        }
        for (i, f) in self.field.iter().enumerate() {
            w.write_record(["field", &(i + 1).to_string(), "", &fmt(*f)])?;
        }
        w.write_record(["energy", "", "", &fmt(self.energy)])?;
        w.write_record(["weighted_energy", "", "", &fmt(self.weighted_energy)])?;
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn fmt(v: f64) -> String {
    format!("{v:.17e}")
}

/// `E(mu) = sum c_ij I(mu_i, mu_j)` and `E_Q(mu) = E(mu) + 2 sum int Q_i dmu_i`.
pub fn vector_energy(
    mu: &DiscreteVectorMeasure,
    c: &InteractionMatrix,
    q: Option<&WeightTuple>,
) -> Result<EnergyBreakdown> {
    let d = mu.dim();
    c.check_dim(d, "measure")?;
    let mut mutual = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let v = mutual_energy(mu.component(i), mu.component(j));
            mutual[i][j] = v;
            mutual[j][i] = v;
        }
    }
    let energy: f64 = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .filter(|&(i, j)| c.get(i, j) != 0.0)
        .map(|(i, j)| c.get(i, j) * mutual[i][j])
        .sum();
    let field = match q {
        None => vec![0.0; d],
        Some(q) => {
            if q.dim() != d {
                return Err(Error::Dimension(format!("{} weights for {d} components", q.dim())));
            }
            (0..d)
                .map(|i| {
                    let comp = mu.component(i);
                    let values = q.get(i).eval_many(comp.nodes())?;
                    Ok(comp.integrate(&values))
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let weighted_energy = energy + 2.0 * field.iter().sum::<f64>();
    Ok(EnergyBreakdown { mutual, field, energy, weighted_energy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CompactSetTuple, MassVector, Weight};
    use crate::potential::ComponentMeasure;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};

    fn atom(x: f64) -> ComponentMeasure {
        ComponentMeasure::atoms(vec![Complex64::new(x, 0.0)], vec![1.0]).unwrap()
    }

    /// Cell masses of the arcsine law on a grid of [-1,1] built from the
    /// exact distribution function over each Voronoi cell.
    fn arcsine(n: usize) -> (CompactSetTuple, ComponentMeasure) {
        let k = CompactSetTuple::intervals(&[(-1.0, 1.0)], n).unwrap();
        let g = k.grid(0);
        let h = 2.0 / (n - 1) as f64;
        let cdf = |x: f64| 0.5 + x.clamp(-1.0, 1.0).asin() / PI;
        let w = g.nodes.iter().map(|z| cdf(z.re + 0.5 * h) - cdf(z.re - 0.5 * h)).collect();
        let mu = ComponentMeasure::on_grid(g, w).unwrap();
        (k, mu)
    }

    #[test]
    fn single_atom_potentials() {
        assert!((log_potential(&atom(0.0), Complex64::new(2.0, 0.0), EvalMode::Strict) + LN_2).abs() < 1e-15);
        assert_eq!(log_potential(&atom(0.0), Complex64::new(1.0, 0.0), EvalMode::Strict), 0.0);
        assert_eq!(log_potential(&atom(0.0), Complex64::new(0.0, 0.0), EvalMode::Strict), f64::INFINITY);
    }

    #[test]
    fn arcsine_potential_and_energy_equal_log_two() {
        let (_, mu) = arcsine(2000);
        let u0 = log_potential(&mu, Complex64::new(1e-7, 0.0), EvalMode::Regularized);
        assert!((u0 - LN_2).abs() < 1e-3, "U(0) = {u0}");
        let i = mutual_energy(&mu, &mu);
        assert!((i - LN_2).abs() < 2e-3, "I = {i}");
    }

    #[test]
    fn partial_potential_two_atoms() {
        let r = MassVector::ones(2);
        let mu = DiscreteVectorMeasure::new(vec![atom(0.0), atom(4.0)], &r).unwrap();
        let c = InteractionMatrix::angelesco(2);
        let v = partial_potential(&mu, &c, 0, Complex64::new(1.0, 0.0), EvalMode::Strict).unwrap();
        let brute = 1.0 * -(1.0f64).ln() + 0.5 * -(3.0f64).ln();
        assert!((v - brute).abs() < 1e-15);
        assert!((v + 0.5493).abs() < 1e-4);
        assert!(partial_potential(&mu, &c, 2, Complex64::new(1.0, 0.0), EvalMode::Strict).is_err());
        let d1 = DiscreteVectorMeasure::new(vec![atom(0.0)], &MassVector::ones(1)).unwrap();
        let one = InteractionMatrix::identity(1);
        let v = partial_potential(&d1, &one, 0, Complex64::new(2.0, 0.0), EvalMode::Strict).unwrap();
        assert!((v + LN_2).abs() < 1e-15);
    }

    #[test]
    fn atom_pairs() {
        assert_eq!(mutual_energy(&atom(0.0), &atom(1.0)), 0.0);
        assert!((mutual_energy(&atom(0.0), &atom(0.5)) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_field_and_decoupled_energies() {
        let (_, mu) = arcsine(400);
        let r = MassVector::ones(2);
        let other = mu.translated(Complex64::new(5.0, 0.0));
        let vm = DiscreteVectorMeasure::new(vec![mu.clone(), other], &r).unwrap();
        let c = InteractionMatrix::identity(2);
        let zero = WeightTuple::zero(2);
        let e = vector_energy(&vm, &c, Some(&zero)).unwrap();
        assert_eq!(e.energy, e.weighted_energy);
        assert!((e.energy - (e.mutual[0][0] + e.mutual[1][1])).abs() < 1e-14);
        let q = WeightTuple::new(vec![Weight::expr("x^2").unwrap(), Weight::Zero]);
        let eq = vector_energy(&vm, &c, Some(&q)).unwrap();
        // second moment of the arcsine law is 1/2
        assert!((eq.field[0] - 0.5).abs() < 1e-3);
        assert!((eq.weighted_energy - eq.energy - 2.0 * eq.field[0]).abs() < 1e-14);
    }

    #[test]
    fn scalar_arcsine_energy() {
        let (_, mu) = arcsine(2000);
        let vm = DiscreteVectorMeasure::new(vec![mu], &MassVector::ones(1)).unwrap();
        let e = vector_energy(&vm, &InteractionMatrix::identity(1), None).unwrap();
        assert!((e.energy - LN_2).abs() < 2e-3);
    }

    #[test]
    fn breakdown_csv_layout() {
        let r = MassVector::ones(2);
        let vm = DiscreteVectorMeasure::new(vec![atom(0.0), atom(4.0)], &r).unwrap();
        let e = vector_energy(&vm, &InteractionMatrix::angelesco(2), None).unwrap();
        let mut buf = vec![];
        e.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "term,i,j,value");
        assert_eq!(lines.len(), 1 + 4 + 2 + 2);
        assert!(lines[2].starts_with("mutual,1,2,"));
    }

    fn random_grid_measure(k: &CompactSetTuple, i: usize, seed: &[f64], mass: f64) -> ComponentMeasure {
        let g = k.grid(i);
        let raw: Vec<f64> = (0..g.len()).map(|l| seed[l % seed.len()] + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        ComponentMeasure::on_grid(g, raw.iter().map(|v| mass * v / s).collect()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn mutual_energy_symmetry_and_mass_scaling(
            seed_a in proptest::collection::vec(0.0f64..1.0, 5..20),
            seed_b in proptest::collection::vec(0.0f64..1.0, 5..20),
            t in 0.1f64..5.0,
        ) {
            let k = CompactSetTuple::intervals(&[(-1.0, 0.3), (-0.2, 2.0)], 60).unwrap();
            let a = random_grid_measure(&k, 0, &seed_a, 1.0);
            let b = random_grid_measure(&k, 1, &seed_b, 1.0);
            let ab = mutual_energy(&a, &b);
            prop_assert!((ab - mutual_energy(&b, &a)).abs() <= 1e-12 * ab.abs().max(1.0));
            let at = a.scaled_mass(t);
            prop_assert!((mutual_energy(&at, &b) - t * ab).abs() <= 1e-11 * ab.abs().max(1.0) * t);
            let aa = mutual_energy(&a, &a);
            prop_assert!((mutual_energy(&at, &at) - t * t * aa).abs() <= 1e-11 * aa.abs().max(1.0) * t * t);
        }

        #[test]
        fn translation_and_dilation_of_energies(
            seed_a in proptest::collection::vec(0.0f64..1.0, 5..20),
            seed_b in proptest::collection::vec(0.0f64..1.0, 5..20),
            sx in -5.0f64..5.0, sy in -5.0f64..5.0,
            ar in 0.1f64..4.0, theta in 0.0f64..std::f64::consts::TAU,
        ) {
            let k = CompactSetTuple::intervals(&[(-1.0, -0.1), (0.1, 2.0)], 40).unwrap();
            let r = MassVector::new(vec![1.0, 0.7]).unwrap();
            let mu = DiscreteVectorMeasure::new(vec![
                random_grid_measure(&k, 0, &seed_a, 1.0),
                random_grid_measure(&k, 1, &seed_b, 0.7),
            ], &r).unwrap();
            let c = InteractionMatrix::angelesco(2);
            let e = vector_energy(&mu, &c, None).unwrap();
            let shifted = vector_energy(&mu.translated(Complex64::new(sx, sy)), &c, None).unwrap();
            prop_assert!((e.energy - shifted.energy).abs() < 1e-10);
            let alpha = Complex64::from_polar(ar, theta);
            let dil = vector_energy(&mu.dilated(alpha), &c, None).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    let expect = e.mutual[i][j] - r.get(i) * r.get(j) * ar.ln();
                    prop_assert!((dil.mutual[i][j] - expect).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn energy_of_signed_difference_is_nonnegative(
            seeds in proptest::collection::vec(0.0f64..1.0, 20..40),
            nikishin in proptest::bool::ANY,
        ) {
            let k = CompactSetTuple::intervals(&[(-1.0, -0.1), (0.1, 1.0)], 40).unwrap();
            let r = MassVector::ones(2);
            let c = if nikishin { InteractionMatrix::nikishin(2) } else { InteractionMatrix::angelesco(2) };
            let (s1, s2) = seeds.split_at(seeds.len() / 2);
            let mu = DiscreteVectorMeasure::new(vec![
                random_grid_measure(&k, 0, s1, 1.0), random_grid_measure(&k, 1, s2, 1.0)], &r).unwrap();
            let nu = DiscreteVectorMeasure::new(vec![
                random_grid_measure(&k, 0, s2, 1.0), random_grid_measure(&k, 1, s1, 1.0)], &r).unwrap();
            let diff = cross_energy(&mu, &mu, &c).unwrap() - 2.0 * cross_energy(&mu, &nu, &c).unwrap()
                + cross_energy(&nu, &nu, &c).unwrap();
            prop_assert!(diff >= -1e-10, "E(nu - mu) = {diff}");
            prop_assert!(cross_energy(&mu, &mu, &c).unwrap() - 2.0 * cross_energy(&mu, &mu, &c).unwrap()
                + cross_energy(&mu, &mu, &c).unwrap() == 0.0);
        }
    }
}
