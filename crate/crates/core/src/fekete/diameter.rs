//! k-th order transfinite diameters along a degree schedule.

use super::optimize::{fekete_optimize, FeketeOptions, FeketeResult};
use crate::domain::{CompactSetTuple, DegreeSchedule, InteractionMatrix, MassVector, WeightTuple};
use crate::equilibrium::{solve_equilibrium, EquilibriumSolution, SolverOptions};
use crate::metric::bl_distance_vector;
use crate::potential::vector_energy;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DiameterPoint {
    pub k: usize,
    pub degrees: Vec<usize>,
    pub total: usize,
    pub log_vdm_weighted: f64,
    /// Normalized weighted value of the grid Fekete array.
    pub delta_hat: f64,
    /// `exp(-E_Q)` of the computed equilibrium measure.
    pub delta_energy: f64,
    /// `|log delta_hat + E_Q|`.
    pub gap: f64,
    /// Bounded-Lipschitz distance from the Fekete empirical measure to the
    /// equilibrium measure.
    pub distance_to_equilibrium: f64,
    pub fekete: FeketeResult,
}

#[derive(Debug, Clone)]
pub struct DiameterEstimate {
    pub points: Vec<DiameterPoint>,
    pub weighted_energy: f64,
    pub equilibrium: EquilibriumSolution,
}

impl DiameterEstimate {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "m_total", "log_vdm", "delta_hat", "delta_energy", "gap_vs_energy", "bl_distance"])?;
        for p in &self.points {
            w.write_record([
                p.k.to_string(),
                p.total.to_string(),
                format!("{:.17e}", p.log_vdm_weighted),
                format!("{:.17e}", p.delta_hat),
                format!("{:.17e}", p.delta_energy),
                format!("{:.17e}", p.gap),
                format!("{:.17e}", p.distance_to_equilibrium),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
pub fn transfinite_diameter_estimate(
    c: &InteractionMatrix,
    k: &CompactSetTuple,
    q: &WeightTuple,
    r: &MassVector,
    schedule: &DegreeSchedule,
    k_range: std::ops::RangeInclusive<usize>,
    solver: &SolverOptions,
    fekete: &FeketeOptions,
) -> Result<DiameterEstimate> {
    if *k_range.end() > schedule.k_max() || *k_range.start() == 0 {
        return Err(Error::Domain(format!(
            "k range {k_range:?} not covered by a schedule with k_max = {}",
            schedule.k_max()
        )));
    }
    let equilibrium = solve_equilibrium(c, k, q, r, solver)?;
    let weighted_energy = vector_energy(&equilibrium.minimizer, c, Some(q))?.weighted_energy;
    let mut points = vec![];
    for level in k_range {
        let m = schedule.get(level)?.to_vec();
        let res = fekete_optimize(c, k, q, r, &m, fekete)?;
        let log_delta = res.value.log_delta_weighted();
        points.push(DiameterPoint {
            k: level,
            total: m.iter().sum(),
            degrees: m,
            log_vdm_weighted: res.value.log_vdm_weighted,
            delta_hat: res.value.normalized_weighted,
            delta_energy: (-weighted_energy).exp(),
            gap: (log_delta + weighted_energy).abs(),
            distance_to_equilibrium: bl_distance_vector(&res.empirical_measure, &equilibrium.minimizer)?,
            fekete: res,
        });
    }
    Ok(DiameterEstimate { points, weighted_energy, equilibrium })
}
