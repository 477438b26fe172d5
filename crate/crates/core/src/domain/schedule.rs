//! Degree schedules `k -> m_k = (m_{1,k}, ..., m_{d,k})`.

use super::matrix::MassVector;
use crate::{Error, Result};

/// Rule turning masses into integer degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleRule {
    /// `m_{i,k} = round(k r_i / min_j r_j)`: the smallest component gets
    /// exactly `k` points.
    #[default]
    Scaled,
    /// `m_{i,k} = max(1, round(k r_i))`, then bumped to `m_{i,k-1} + 1`
    /// whenever it fails to increase.
    RoundRepair,
    /// `m_{i,k} = max(1, round(k r_i))` without repair; only nondecreasing.
    Round,
}

impl std::str::FromStr for ScheduleRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scaled" => Ok(Self::Scaled),
            "round-repair" => Ok(Self::RoundRepair),
            "round" => Ok(Self::Round),
            other => Err(Error::Config(format!(
                "unknown schedule rule `{other}` (expected scaled, round-repair or round)"
            ))),
        }
    }
}

/// Degree tuples for `k = 1, ..., k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSchedule {
    tuples: Vec<Vec<usize>>,
    rule: Option<ScheduleRule>,
}

pub fn make_degree_schedule(r: &MassVector, k_max: usize) -> Result<DegreeSchedule> {
    DegreeSchedule::from_rule(r, k_max, ScheduleRule::default())
}

impl DegreeSchedule {
    pub fn from_rule(r: &MassVector, k_max: usize, rule: ScheduleRule) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Domain("k_max must be at least 1".into()));
        }
        let r_min = r.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        let mut tuples: Vec<Vec<usize>> = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let tuple: Vec<usize> = r
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &ri)| {
                    let base = match rule {
                        ScheduleRule::Scaled => (k as f64 * ri / r_min).round() as usize,
                        _ => ((k as f64 * ri).round() as usize).max(1),
                    };
                    match (rule, tuples.last()) {
                        (ScheduleRule::RoundRepair, Some(prev)) if base <= prev[i] => prev[i] + 1,
                        _ => base,
                    }
                })
                .collect();
            tuples.push(tuple);
        }
        Ok(Self { tuples, rule: Some(rule) })
    }

    /// Explicit tuples for `k = 1, 2, ...`; every coordinate must be
    /// positive and strictly increasing.
    pub fn explicit(tuples: Vec<Vec<usize>>) -> Result<Self> {
        let d = tuples.first().map(Vec::len).ok_or_else(|| Error::Domain("empty schedule".into()))?;
        for (k, t) in tuples.iter().enumerate() {
            if t.len() != d {
                return Err(Error::Dimension(format!("tuple {} has {} entries, expected {d}", k + 1, t.len())));
            }
            if t.contains(&0) {
                return Err(Error::Domain(format!("tuple {} has a zero degree", k + 1)));
            }
            if k > 0 && t.iter().zip(&tuples[k - 1]).any(|(a, b)| a <= b) {
                return Err(Error::Domain(format!("tuple {} does not increase every coordinate", k + 1)));
            }
        }
        Ok(Self { tuples, rule: None })
    }

    pub fn k_max(&self) -> usize {
        self.tuples.len()
    }

    pub fn dim(&self) -> usize {
        self.tuples[0].len()
    }

    pub fn rule(&self) -> Option<ScheduleRule> {
        self.rule
    }

    /// `m_k` for `1 <= k <= k_max`.
    pub fn get(&self, k: usize) -> Result<&[usize]> {
        if k == 0 || k > self.tuples.len() {
            return Err(Error::Domain(format!("k = {k} outside schedule range 1..={}", self.tuples.len())));
        }
        Ok(&self.tuples[k - 1])
    }

    pub fn total(&self, k: usize) -> Result<usize> {
        Ok(self.get(k)?.iter().sum())
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    /// `max_{i,j} |m_{i,k}/m_{j,k} - r_i/r_j|` at level `k`.
    pub fn ratio_error(&self, k: usize, r: &MassVector) -> Result<f64> {
        let m = self.get(k)?;
        let r = r.as_slice();
        let mut worst: f64 = 0.0;
        for i in 0..m.len() {
            for j in 0..m.len() {
                worst = worst.max((m[i] as f64 / m[j] as f64 - r[i] / r[j]).abs());
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(v: &[f64]) -> MassVector {
        MassVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn equal_and_integer_masses() {
        let s = make_degree_schedule(&r(&[1.0, 1.0]), 3).unwrap();
        assert_eq!(s.tuples(), &[vec![1, 1], vec![2, 2], vec![3, 3]]);
        let s = make_degree_schedule(&r(&[2.0, 1.0]), 2).unwrap();
        assert_eq!(s.tuples(), &[vec![2, 1], vec![4, 2]]);
        let s = DegreeSchedule::from_rule(&r(&[2.0, 1.0]), 2, ScheduleRule::RoundRepair).unwrap();
        assert_eq!(s.tuples(), &[vec![2, 1], vec![4, 2]]);
    }

    #[test]
    fn half_mass_schedules() {
        let m = r(&[0.5]);
        let round = DegreeSchedule::from_rule(&m, 4, ScheduleRule::Round).unwrap();
        assert_eq!(round.tuples(), &[vec![1], vec![1], vec![2], vec![2]]);
        let repaired = DegreeSchedule::from_rule(&m, 4, ScheduleRule::RoundRepair).unwrap();
        assert_eq!(repaired.tuples(), &[vec![1], vec![2], vec![3], vec![4]]);
        let scaled = make_degree_schedule(&m, 4).unwrap();
        assert_eq!(scaled.tuples(), repaired.tuples());
    }

    #[test]
    fn explicit_schedule_validation() {
        assert!(DegreeSchedule::explicit(vec![vec![1, 2], vec![2, 3]]).is_ok());
        assert!(DegreeSchedule::explicit(vec![vec![1, 2], vec![2, 2]]).is_err());
        assert!(DegreeSchedule::explicit(vec![vec![0]]).is_err());
        assert!(make_degree_schedule(&r(&[1.0]), 0).is_err());
    }

    proptest! {
        #[test]
        fn scaled_schedule_is_strict_and_ratio_convergent(
            masses in proptest::collection::vec(0.05f64..5.0, 1..4),
        ) {
            let r = MassVector::new(masses).unwrap();
            let s = make_degree_schedule(&r, 200).unwrap();
            for k in 2..=200 {
                let (a, b) = (s.get(k - 1).unwrap(), s.get(k).unwrap());
                prop_assert!(a.iter().zip(b).all(|(x, y)| y > x && *x >= 1));
            }
            // rounding error of each coordinate is at most 1/2, so the
            // ratio error decays like 1/k
            for k in (20..=200).step_by(20) {
                let e = s.ratio_error(k, &r).unwrap();
                let bound = r.as_slice().iter().cloned().fold(0.0, f64::max)
                    / r.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
                prop_assert!(e <= 2.0 * bound / k as f64 + 1e-12);
            }
        }
    }
}
