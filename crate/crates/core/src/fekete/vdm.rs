//! Vandermonde-type products `|VDM_k|` and their weighted versions.

use num_complex::Complex64;

use crate::domain::{Configuration, InteractionMatrix, MassVector, WeightTuple};
use crate::{Error, Result};

/// Behavior on coincident points that make the product vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VdmMode {
    /// Coincident points raise [`Error::DegenerateConfig`].
    #[default]
    Strict,
    /// Coincident points yield `log = -inf`.
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdmValue {
    /// `log |VDM_k(Z)|`.
    pub log_vdm: f64,
    /// `log |VDM^Q_k(Z)|`.
    pub log_vdm_weighted: f64,
    /// `2 |r|^2 / (|m| (|m| - 1))`; infinite for a single point.
    pub exponent: f64,
    /// `|VDM_k(Z)|^exponent`, equal to 1 for a single point.
    pub normalized: f64,
    pub normalized_weighted: f64,
}

impl VdmValue {
    fn new(log_vdm: f64, log_vdm_weighted: f64, total: usize, r: &MassVector) -> Self {
        let exponent = normalization_exponent(r, total);
        let (normalized, normalized_weighted) = if total <= 1 {
            (1.0, 1.0)
        } else {
            ((exponent * log_vdm).exp(), (exponent * log_vdm_weighted).exp())
        };
        Self { log_vdm, log_vdm_weighted, exponent, normalized, normalized_weighted }
    }

    /// `log` of the normalized weighted value.
    pub fn log_delta_weighted(&self) -> f64 {
        if self.exponent.is_finite() {
            self.exponent * self.log_vdm_weighted
        } else {
            0.0
        }
    }
}

/// `2 |r|^2 / (|m| (|m| - 1))`.
pub fn normalization_exponent(r: &MassVector, total: usize) -> f64 {
    if total <= 1 {
        return f64::INFINITY;
    }
    2.0 * r.total() * r.total() / (total as f64 * (total as f64 - 1.0))
}

fn pair_term(coef: f64, a: Complex64, b: Complex64) -> f64 {
    if coef == 0.0 {
        return 0.0;
    }
    let dist = (a - b).norm();
    if dist == 0.0 {
        if coef > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    } else {
        coef * dist.ln()
    }
}

/// `log |VDM_k(Z)|` and the weighted value
/// `log |VDM_k(Z)| - sum_i (m_i / r_i) sum_l Q_i(z_il)`.
pub fn log_vdm(
    z: &Configuration,
    c: &InteractionMatrix,
    m: &[usize],
    r: &MassVector,
    q: Option<&WeightTuple>,
    mode: VdmMode,
) -> Result<VdmValue> {
    let d = c.dim();
    if z.dim() != d || m.len() != d || r.dim() != d {
        return Err(Error::Dimension(format!(
            "configuration has {} groups, degrees {}, masses {}, matrix {d}",
            z.dim(),
            m.len(),
            r.dim()
        )));
    }
    if z.sizes() != m {
        return Err(Error::Dimension(format!("configuration sizes {:?} differ from degrees {m:?}", z.sizes())));
    }
    let mut log = 0.0;
    for i in 0..d {
        let zi = z.component(i);
        for l in 0..zi.len() {
            for p in (l + 1)..zi.len() {
                log += pair_term(c.get(i, i), zi[l], zi[p]);
            }
        }
        for j in (i + 1)..d {
            for a in zi {
                for b in z.component(j) {
                    log += pair_term(c.get(i, j), *a, *b);
                }
            }
        }
    }
    if !log.is_finite() && mode == VdmMode::Strict {
        return Err(Error::DegenerateConfig("coincident points make the product degenerate".into()));
    }
    let mut field = 0.0;
    if let Some(q) = q {
        if q.dim() != d {
            return Err(Error::Dimension(format!("{} weights for {d} components", q.dim())));
        }
        for i in 0..d {
            let values = q.get(i).eval_many(z.component(i))?;
            field += m[i] as f64 / r.get(i) * values.iter().sum::<f64>();
        }
    }
    Ok(VdmValue::new(log, log - field, z.total(), r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingCheck {
    /// `log|VDM(alpha Z)| - log|VDM(Z)|`.
    pub lhs: f64,
    /// `[sum_i c_ii m_i (m_i - 1) / 2 + sum_{i<j} c_ij m_i m_j] log|alpha|`.
    pub rhs: f64,
    /// Limiting exponent `B = sum_ij c_ij r_i r_j`.
    pub b: f64,
    /// Finite-k exponent of `|alpha|` in the normalized diameter.
    pub finite_exponent: f64,
}

pub fn scaling_check(
    z: &Configuration,
    alpha: Complex64,
    c: &InteractionMatrix,
    m: &[usize],
    r: &MassVector,
) -> Result<ScalingCheck> {
    if alpha == Complex64::new(0.0, 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("scaling factor must be finite and nonzero, got {alpha}")));
    }
    let base = log_vdm(z, c, m, r, None, VdmMode::Strict)?;
    let scaled = log_vdm(&z.scaled(alpha), c, m, r, None, VdmMode::Strict)?;
    let pairs = c.pair_weight(m);
    let total: usize = m.iter().sum();
    Ok(ScalingCheck {
        lhs: scaled.log_vdm - base.log_vdm,
        rhs: pairs * alpha.norm().ln(),
        b: c.scaling_exponent(r),
        finite_exponent: if total > 1 { normalization_exponent(r, total) * pairs } else { 0.0 },
    })
}
