//! Semilinear photon-density model: Picard iteration for
//! `-div(D grad u) + sigma u + mu u^2 = f`, `u = g` on the boundary, the
//! acoustic pressure map `H = Gamma (sigma u + mu u^2)`, and a residual
//! check against the same discrete operator.

use crate::elliptic::{apply_variable_laplacian, assemble, default_max_iter};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::scalar::{cast, Scalar};

/// Default stopping tolerance on the h-weighted L2 norm of the update.
pub fn default_picard_tol<T: Scalar>() -> T {
    cast::<T>(1e-10)
}

/// Default Picard iteration cap.
pub const DEFAULT_PICARD_MAX_ITER: usize = 100;

/// Outcome of a Picard solve.
#[derive(Debug, Clone)]
pub struct PicardReport<T: Scalar> {
    /// Number of linearized solves performed in the iteration loop.
    pub iterations: usize,
    /// `||u_{k+1} - u_k||_2` of the last update.
    pub final_update_norm: T,
    /// Successive update-norm ratios; length `iterations - 1`.
    pub contraction_ratios: Vec<T>,
    pub converged: bool,
}

fn check_nonnegative<T: Scalar>(field: &ScalarField<T>, name: &'static str) -> Result<()> {
    let min = field.min_value();
    if min < T::zero() {
        return Err(Error::NegativeField {
            name,
            min: min.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Solve the semilinear problem by freezing the nonlinearity: each sweep
/// solves `-div(D grad u_{k+1}) + (sigma + mu u_k) u_{k+1} = f` with
/// `u_{k+1} = g` on the boundary.
///
/// `f` defaults to zero and `u0` to the solution of the linear problem with
/// the `mu` term dropped. Returns the last iterate together with a
/// [`PicardReport`]; hitting `max_iter` yields `converged = false` rather
/// than an error so callers can inspect the report.
#[allow(clippy::too_many_arguments)]
pub fn picard_solve<T: Scalar>(
    d: &ScalarField<T>,
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    g: &ScalarField<T>,
    f: Option<&ScalarField<T>>,
    u0: Option<&ScalarField<T>>,
    tol: T,
    max_iter: usize,
) -> Result<(ScalarField<T>, PicardReport<T>)> {
    d.same_grid(sigma)?;
    d.same_grid(mu)?;
    d.same_grid(g)?;
    check_nonnegative(sigma, "single-photon absorption coefficient")?;
    check_nonnegative(mu, "two-photon absorption coefficient")?;
    let grid = *d.grid();
    let zero_f = ScalarField::zeros(grid);
    let f = match f {
        Some(f) => {
            d.same_grid(f)?;
            f
        }
        None => &zero_f,
    };

    // keep the inner linear solves well below the outer tolerance
    let cg_tol = (tol * cast::<T>(1e-3)).max(T::epsilon() * cast::<T>(50.0));
    let cg_max = default_max_iter(grid.n());

    let mut u = match u0 {
        Some(u0) => {
            d.same_grid(u0)?;
            u0.clone()
        }
        None => assemble(d, sigma, f, g)?
            .solve(cg_tol, cg_max)
            .map_err(|e| e.at_picard_iteration(0))?,
    };

    let mut norms: Vec<T> = Vec::new();
    let mut converged = false;
    for k in 0..max_iter {
        let c = sigma.zip_map(&u.zip_map(mu, |uk, m| m * uk)?, |s, mu_u| s + mu_u)?;
        let next = assemble(d, &c, f, g)?
            .solve(cg_tol, cg_max)
            .map_err(|e| e.at_picard_iteration(k + 1))?;
        let update = next.sub(&u)?.l2_norm();
        norms.push(update);
        u = next;
        if update <= tol {
            converged = true;
            break;
        }
    }

    let min_u = u.min_value();
    let flag = cast::<T>(1e3) * T::epsilon() * u.max_value().abs().max(T::one());
    if min_u < -flag {
        return Err(Error::NegativePhotonDensity {
            min: min_u.to_f64().unwrap_or(f64::NAN),
        });
    }

    let ratios = norms
        .windows(2)
        .map(|w| if w[0] > T::zero() { w[1] / w[0] } else { T::zero() })
        .collect();
    let report = PicardReport {
        iterations: norms.len(),
        final_update_norm: norms.last().copied().unwrap_or(T::zero()),
        contraction_ratios: ratios,
        converged,
    };
    Ok((u, report))
}

/// Initial acoustic pressure `H = Gamma (sigma u + mu u^2)` nodewise.
pub fn pressure_field<T: Scalar>(
    gamma: &ScalarField<T>,
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    u: &ScalarField<T>,
) -> Result<ScalarField<T>> {
    gamma.same_grid(sigma)?;
    gamma.same_grid(mu)?;
    gamma.same_grid(u)?;
    let mut out = ScalarField::zeros(*gamma.grid());
    let values = out.values_mut();
    for (k, v) in values.iter_mut().enumerate() {
        let uu = u.values()[k];
        *v = gamma.values()[k] * (sigma.values()[k] * uu + mu.values()[k] * uu * uu);
    }
    Ok(out)
}

/// h-weighted L2 norm of `-div(D grad u) + sigma u + mu u^2 - f` over the
/// interior nodes, evaluated with the solver's own discrete operator.
pub fn semilinear_residual<T: Scalar>(
    d: &ScalarField<T>,
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    u: &ScalarField<T>,
    f: Option<&ScalarField<T>>,
) -> Result<T> {
    let lap = apply_variable_laplacian(d, u)?;
    let grid = *d.grid();
    let n = grid.n();
    let mut acc = T::zero();
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let uu = u.get(i, j);
            let mut r = lap.get(i, j) + sigma.get(i, j) * uu + mu.get(i, j) * uu * uu;
            if let Some(f) = f {
                r = r - f.get(i, j);
            }
            acc = acc + r * r;
        }
    }
    Ok((grid.h() * grid.h() * acc).sqrt())
}
