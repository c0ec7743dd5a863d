//! h-convergence studies against closed-form solutions.

use std::sync::Arc;

use super::{assemble_monolithic, norms, solve, DGSpace, ExactSolution};
use crate::error::{invalid, Result};
use crate::fs_models::FriedrichsSystem;
use crate::mesh::{build_cartesian_mesh, Bounds};

/// Triple-norm errors below this are treated as exact reproduction.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelError {
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub l2: f64,
    pub energy: f64,
    pub triple: f64,
    /// Fitted slope over this and all coarser levels.
    pub slope_so_far: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeStudy {
    pub degree: usize,
    pub levels: Vec<LevelError>,
    /// Least-squares slope of `log(triple)` against `log(h)`; `None` when exact.
    pub slope: Option<f64>,
    pub exact: bool,
    /// False when some refinement increased the error.
    pub monotone: bool,
}

/// Least-squares slope of `log y` against `log x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Solves on `n x n` meshes of `bounds` for each `n` in `sizes` and each degree.
pub fn convergence_study(
    sys: &dyn FriedrichsSystem,
    exact: &dyn ExactSolution,
    degrees: &[usize],
    sizes: &[usize],
    bounds: Bounds,
) -> Result<Vec<DegreeStudy>> {
    if sizes.len() < 3 {
        return Err(invalid(format!("a convergence study needs at least 3 mesh levels (got {})", sizes.len())));
    }
    let mut out = Vec::with_capacity(degrees.len());
    for &k in degrees {
        let mut levels: Vec<LevelError> = Vec::with_capacity(sizes.len());
        for &n in sizes {
            let mesh = Arc::new(build_cartesian_mesh(n, n, bounds)?);
            let space = DGSpace::new(mesh.clone(), k, sys.m())?;
            let asm = assemble_monolithic(sys, &space)?;
            let z = solve(&asm)?;
            let r = norms(&asm, &space, sys, &z, Some(exact))?;
            levels.push(LevelError {
                n,
                h: mesh.h_max(),
                dofs: space.num_dofs(),
                l2: r.l2,
                energy: r.energy,
                triple: r.triple,
                slope_so_far: None,
            });
            if levels.len() >= 2 && levels.iter().all(|l| l.triple > EXACT_TOL) {
                let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
                let es: Vec<f64> = levels.iter().map(|l| l.triple).collect();
                levels.last_mut().unwrap().slope_so_far = Some(least_squares_slope(&hs, &es));
            }
            log::info!("degree {k}, n = {n}: triple-norm error {:.3e}", r.triple);
        }
        let exact_repro = levels.iter().all(|l| l.triple <= EXACT_TOL);
        let monotone = levels.windows(2).all(|w| w[1].triple <= w[0].triple);
        if !monotone && !exact_repro {
            log::warn!("degree {k}: error sequence is not monotone");
        }
        let slope = if exact_repro {
            None
        } else {
            let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
            let es: Vec<f64> = levels.iter().map(|l| l.triple.max(f64::MIN_POSITIVE)).collect();
            Some(least_squares_slope(&hs, &es))
        };
        out.push(DegreeStudy { degree: k, levels, slope, exact: exact_repro, monotone });
    }
    Ok(out)
}
