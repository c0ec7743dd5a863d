use crate::dg::AssembledSystem;
use crate::error::{invalid, Error, Result};
use crate::linalg::SparseLu;

/// True relative errors (when the full-order solution is known) and the four
/// residual-based estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub err_l2: Option<f64>,
    pub err_r: Option<f64>,
    pub err_energy: Option<f64>,
    pub eta_r: f64,
    pub eta_r_energy: f64,
    pub eta_l: f64,
    pub eta_l_energy: f64,
    /// Denominators use the full-order solution (otherwise the reduced one).
    pub fom_denominators: bool,
}

impl Estimate {
    /// Number of violated bounds `err_R <= eta_R`, `err_L2 <= eta_L` (tolerance 1e-10).
    pub fn violations(&self) -> usize {
        let mut n = 0;
        if let Some(e) = self.err_r {
            n += (e > self.eta_r + 1e-10) as usize;
        }
        if let Some(e) = self.err_l2 {
            n += (e > self.eta_l + 1e-10) as usize;
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorRow {
    pub param_index: usize,
    pub is_train: bool,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimatorReport {
    pub rows: Vec<EstimatorRow>,
}

impl EstimatorReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().map(|r| r.estimate.violations()).sum()
    }

    /// Mean relative `L^2` error over rows selected by `is_train`.
    pub fn mean_l2(&self, is_train: bool) -> Option<f64> {
        let v: Vec<f64> = self.rows.iter().filter(|r| r.is_train == is_train).filter_map(|r| r.estimate.err_l2).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Residual estimators for one assembled system; the `R`-norm Gram matrix
/// and the mass matrix are factored once and reused for every reduced solution.
pub struct Estimator<'a> {
    asm: &'a AssembledSystem,
    x_r: SparseLu,
    mass: SparseLu,
}

impl<'a> Estimator<'a> {
    pub fn new(asm: &'a AssembledSystem) -> Result<Self> {
        if !(asm.mu0 > 0.0) {
            return Err(invalid(format!("R-norm Gram matrix is not positive definite (mu0 = {})", asm.mu0)));
        }
        Ok(Self { asm, x_r: SparseLu::new(&asm.x_r, "R-norm Gram matrix")?, mass: SparseLu::new(&asm.mass, "mass matrix")? })
    }

    /// Estimators for the reduced solution `z_rb`, with true errors when `z_h` is given.
    ///
    /// The Riesz representatives solve `X_R r_R = L - A z_rb` and `X_L r_L = L - A z_rb`.
    pub fn estimate(&self, z_rb: &[f64], z_h: Option<&[f64]>) -> Result<Estimate> {
        let asm = self.asm;
        let n = asm.num_dofs();
        if z_rb.len() != n {
            return Err(Error::DimensionMismatch { context: "reduced solution", expected: n, found: z_rb.len() });
        }
        if let Some(z) = z_h.filter(|z| z.len() != n) {
            return Err(Error::DimensionMismatch { context: "full-order solution", expected: n, found: z.len() });
        }
        let mu0 = asm.mu0;
        let az = asm.a.mul_vec(z_rb);
        let resid: Vec<f64> = asm.rhs.iter().zip(&az).map(|(l, a)| l - a).collect();
        let rr = self.x_r.solve(&resid, "R-norm Gram matrix")?;
        let rl = self.mass.solve(&resid, "mass matrix")?;
        let rr_norm = dot(&resid, &rr).max(0.0).sqrt();
        let rl_norm = dot(&resid, &rl).max(0.0).sqrt();

        let reference = z_h.unwrap_or(z_rb);
        let ref_r = asm.x_r.quad_form(reference).max(0.0).sqrt();
        let ref_l = asm.mass.quad_form(reference).max(0.0).sqrt();
        let ref_e = asm.a.quad_form(reference).max(0.0).sqrt();
        let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };

        let (err_l2, err_r, err_energy) = match z_h {
            Some(zh) => {
                let e: Vec<f64> = zh.iter().zip(z_rb).map(|(a, b)| a - b).collect();
                (
                    Some(ratio(asm.mass.quad_form(&e).max(0.0).sqrt(), ref_l)),
                    Some(ratio(asm.x_r.quad_form(&e).max(0.0).sqrt(), ref_r)),
                    Some(ratio(asm.a.quad_form(&e).max(0.0).sqrt(), ref_e)),
                )
            }
            None => (None, None, None),
        };
        Ok(Estimate {
            err_l2,
            err_r,
            err_energy,
            eta_r: ratio(rr_norm, ref_r),
            eta_r_energy: ratio(rr_norm, ref_e),
            eta_l: ratio(rl_norm, mu0 * ref_l),
            eta_l_energy: ratio(rl_norm, mu0.sqrt() * ref_e),
            fom_denominators: z_h.is_some(),
        })
    }
}

/// One-shot [`Estimator::estimate`].
pub fn estimate(asm: &AssembledSystem, z_rb: &[f64], z_h: Option<&[f64]>) -> Result<Estimate> {
    Estimator::new(asm)?.estimate(z_rb, z_h)
}
