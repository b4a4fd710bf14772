//! Objective evaluation, adjoint solves and reduced gradients for the
//! two-illumination inverse problem.
//!
//! The objective splits into a smooth part (data misfit plus H1 penalties)
//! and a nonsmooth part (L1 penalties toward the backgrounds):
//!
//! ```text
//! J  = sum_j (alpha_j/2) sum_nodes (H_j - G_j)^2        data misfit
//!    + (xi_1/2) ||sigma - sigma_b||_H1^2                H1 penalty
//!    + (xi_2/2) ||mu - mu_b||_H1^2
//!    + gamma_1 ||sigma - sigma_b||_L1                   L1 penalty
//!    + gamma_2 ||mu - mu_b||_L1
//! ```
//!
//! The misfit is a plain per-node sum of squares; the penalty norms are the
//! h-weighted mesh integrals. Gradient fields are Riesz representatives in
//! the h-weighted L2 pairing, so the misfit contributes with a `1/h^2`
//! factor relative to the penalties.

use crate::elliptic::{assemble, assemble_neumann, default_max_iter};
use crate::error::{Error, Result};
use crate::forward::{picard_solve, pressure_field, PicardReport};
use crate::grid::{Grid2D, ScalarField};
use crate::scalar::{cast, Scalar};

/// Weights of the objective functional.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveWeights<T: Scalar> {
    pub alpha1: T,
    pub alpha2: T,
    pub xi1: T,
    pub xi2: T,
    pub gamma1: T,
    pub gamma2: T,
}

impl<T: Scalar> ObjectiveWeights<T> {
    /// Baseline weights of the phantom experiments:
    /// `alpha = 1`, `xi = 0.01`, `gamma = 0.1`.
    pub fn baseline() -> Self {
        Self {
            alpha1: T::one(),
            alpha2: T::one(),
            xi1: cast(0.01),
            xi2: cast(0.01),
            gamma1: cast(0.1),
            gamma2: cast(0.1),
        }
    }

    /// Heavier regularization used against 20% data noise:
    /// `xi = 0.1`, `gamma = 0.3`.
    pub fn noise_robust() -> Self {
        Self {
            xi1: cast(0.1),
            xi2: cast(0.1),
            gamma1: cast(0.3),
            gamma2: cast(0.3),
            ..Self::baseline()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha1, self.alpha2, self.xi1, self.xi2, self.gamma1, self.gamma2];
        if all.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidWeights("weights must be nonnegative".into()));
        }
        if !(self.alpha1 + self.alpha2 > T::zero()) {
            return Err(Error::InvalidWeights("alpha1 + alpha2 must be positive".into()));
        }
        Ok(())
    }
}

/// Known model quantities for the inversion: diffusion and Grueneisen
/// fields plus the background absorption levels.
#[derive(Debug, Clone)]
pub struct OpticalModel<T: Scalar> {
    pub d: ScalarField<T>,
    pub grueneisen: ScalarField<T>,
    pub sigma_b: T,
    pub mu_b: T,
}

impl<T: Scalar> OpticalModel<T> {
    pub fn grid(&self) -> &Grid2D<T> {
        self.d.grid()
    }
}

/// Measurements: two boundary illuminations and the corresponding interior
/// pressure data.
#[derive(Debug, Clone)]
pub struct DataSet<T: Scalar> {
    pub illum: [ScalarField<T>; 2],
    pub measured: [ScalarField<T>; 2],
}

/// Forward-solve tolerances used inside objective and gradient evaluation.
#[derive(Debug, Clone, Copy)]
pub struct PicardSettings<T: Scalar> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Scalar> Default for PicardSettings<T> {
    fn default() -> Self {
        Self {
            tol: cast(1e-10),
            max_iter: 100,
        }
    }
}

/// Converged photon densities and pressure fields for both illuminations.
#[derive(Debug, Clone)]
pub struct ForwardStates<T: Scalar> {
    pub u: [ScalarField<T>; 2],
    pub pressure: [ScalarField<T>; 2],
    pub reports: [PicardReport<T>; 2],
}

/// Objective value split into its parts.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveValue<T: Scalar> {
    pub total: T,
    pub smooth: T,
    pub l1: T,
    pub misfit: T,
}

/// L2 and H1-Riesz gradient representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientSpace {
    L2,
    SobolevH1,
}

/// Gradient fields of the smooth objective part with respect to both
/// coefficients.
#[derive(Debug, Clone)]
pub struct GradientPair<T: Scalar> {
    pub sigma: ScalarField<T>,
    pub mu: ScalarField<T>,
    pub space: GradientSpace,
}

/// Plain per-node sum of squared differences (no mesh weight).
fn misfit_sum<T: Scalar>(h_field: &ScalarField<T>, data: &ScalarField<T>) -> Result<T> {
    h_field.same_grid(data)?;
    Ok(h_field
        .values()
        .iter()
        .zip(data.values())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>())
}

/// Squared discrete H1 norm: `||q||_2^2 + sum_edges (dq)^2` (the edge sum is
/// `h^2 ((q_a - q_b)/h)^2` per edge).
pub fn h1_norm_sq<T: Scalar>(q: &ScalarField<T>) -> T {
    let g = q.grid();
    let n = g.n();
    let mut grad = T::zero();
    for j in 0..n {
        for i in 0..n {
            let v = q.get(i, j);
            if i + 1 < n {
                let d = q.get(i + 1, j) - v;
                grad = grad + d * d;
            }
            if j + 1 < n {
                let d = q.get(i, j + 1) - v;
                grad = grad + d * d;
            }
        }
    }
    let l2 = q.inner(q).expect("same grid");
    l2 + grad
}

/// Five-point Laplacian with homogeneous Neumann treatment (missing
/// neighbors dropped); the exact negative gradient of the discrete H1
/// seminorm above in the h-weighted pairing.
pub fn neumann_laplacian<T: Scalar>(q: &ScalarField<T>) -> ScalarField<T> {
    let g = q.grid();
    let n = g.n();
    let inv_h2 = T::one() / (g.h() * g.h());
    let mut out = ScalarField::zeros(*g);
    for j in 0..n {
        for i in 0..n {
            let v = q.get(i, j);
            let mut acc = T::zero();
            if i + 1 < n {
                acc = acc + q.get(i + 1, j) - v;
            }
            if i > 0 {
                acc = acc + q.get(i - 1, j) - v;
            }
            if j + 1 < n {
                acc = acc + q.get(i, j + 1) - v;
            }
            if j > 0 {
                acc = acc + q.get(i, j - 1) - v;
            }
            out.set(i, j, acc * inv_h2);
        }
    }
    out
}

/// Solve both forward problems at `(sigma, mu)`; errors if either Picard
/// iteration fails to converge.
pub fn solve_forward_states<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    picard: &PicardSettings<T>,
) -> Result<ForwardStates<T>> {
    solve_forward_states_from(sigma, mu, ds, model, picard, [None, None])
}

/// Like [`solve_forward_states`] but warm-started from previous solutions.
pub fn solve_forward_states_from<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    picard: &PicardSettings<T>,
    warm: [Option<&ScalarField<T>>; 2],
) -> Result<ForwardStates<T>> {
    let mut u = Vec::with_capacity(2);
    let mut pressure = Vec::with_capacity(2);
    let mut reports = Vec::with_capacity(2);
    for (g, w) in ds.illum.iter().zip(warm) {
        let (ui, report) =
            picard_solve(&model.d, sigma, mu, g, None, w, picard.tol, picard.max_iter)?;
        if !report.converged {
            return Err(Error::PicardDiverged {
                iterations: report.iterations,
                update_norm: report.final_update_norm.to_f64().unwrap_or(f64::NAN),
            });
        }
        pressure.push(pressure_field(&model.grueneisen, sigma, mu, &ui)?);
        u.push(ui);
        reports.push(report);
    }
    let [u1, u2] = <[ScalarField<T>; 2]>::try_from(u).expect("two states");
    let [h1, h2] = <[ScalarField<T>; 2]>::try_from(pressure).expect("two states");
    let [r1, r2] = <[PicardReport<T>; 2]>::try_from(reports).expect("two states");
    Ok(ForwardStates {
        u: [u1, u2],
        pressure: [h1, h2],
        reports: [r1, r2],
    })
}

/// Objective value at `(sigma, mu)` together with the forward states it was
/// computed from.
pub fn objective<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    weights: &ObjectiveWeights<T>,
    picard: &PicardSettings<T>,
) -> Result<(ObjectiveValue<T>, ForwardStates<T>)> {
    let states = solve_forward_states(sigma, mu, ds, model, picard)?;
    let value = objective_from_states(sigma, mu, ds, model, weights, &states)?;
    Ok((value, states))
}

/// Objective value from already-solved forward states.
pub fn objective_from_states<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    weights: &ObjectiveWeights<T>,
    states: &ForwardStates<T>,
) -> Result<ObjectiveValue<T>> {
    weights.validate()?;
    let half = cast::<T>(0.5);
    let alphas = [weights.alpha1, weights.alpha2];
    let mut misfit = T::zero();
    for j in 0..2 {
        misfit = misfit + half * alphas[j] * misfit_sum(&states.pressure[j], &ds.measured[j])?;
    }
    let ds_b = sigma.map(|v| v - model.sigma_b);
    let dm_b = mu.map(|v| v - model.mu_b);
    let smooth = misfit
        + half * weights.xi1 * h1_norm_sq(&ds_b)
        + half * weights.xi2 * h1_norm_sq(&dm_b);
    let l1 = weights.gamma1 * ds_b.l1_norm() + weights.gamma2 * dm_b.l1_norm();
    Ok(ObjectiveValue {
        total: smooth + l1,
        smooth,
        l1,
        misfit,
    })
}

/// Right-hand-side form for the adjoint equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointRhs {
    /// `-alpha (H - G) * Gamma (sigma + 2 mu u)`: the exact derivative of
    /// the pressure map, validated by finite differences.
    Derivative,
    /// `-alpha Gamma (H/Gamma - G) * (sigma + 2 u)`: an alternative form
    /// retained for comparison; not the derivative of the pressure map.
    Literal,
}

/// Solve the adjoint problem
/// `-div(D grad v) + (sigma + 2 mu u) v = rhs`, `v = 0` on the boundary.
pub fn solve_adjoint<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    u: &ScalarField<T>,
    data: &ScalarField<T>,
    alpha: T,
    model: &OpticalModel<T>,
) -> Result<ScalarField<T>> {
    solve_adjoint_with(sigma, mu, u, data, alpha, model, AdjointRhs::Derivative)
}

pub fn solve_adjoint_with<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    u: &ScalarField<T>,
    data: &ScalarField<T>,
    alpha: T,
    model: &OpticalModel<T>,
    form: AdjointRhs,
) -> Result<ScalarField<T>> {
    sigma.same_grid(mu)?;
    sigma.same_grid(u)?;
    sigma.same_grid(data)?;
    let grid = *sigma.grid();
    let two = T::one() + T::one();
    let h_field = pressure_field(&model.grueneisen, sigma, mu, u)?;
    let mut c = ScalarField::zeros(grid);
    let mut rhs = ScalarField::zeros(grid);
    for k in 0..grid.num_nodes() {
        let s = sigma.values()[k];
        let m = mu.values()[k];
        let uu = u.values()[k];
        let gam = model.grueneisen.values()[k];
        c.values_mut()[k] = s + two * m * uu;
        rhs.values_mut()[k] = match form {
            AdjointRhs::Derivative => {
                -alpha * (h_field.values()[k] - data.values()[k]) * gam * (s + two * m * uu)
            }
            AdjointRhs::Literal => {
                -alpha
                    * gam
                    * (s * uu + m * uu * uu - data.values()[k])
                    * (s + two * uu)
            }
        };
    }
    let zero = ScalarField::zeros(grid);
    let sys = assemble(&model.d, &c, &rhs, &zero)?;
    sys.solve(cast(1e-12), default_max_iter(grid.n()))
}

/// L2 reduced gradients of the smooth objective part at `(sigma, mu)`.
///
/// Per datum the misfit contributes `alpha_j (H_j - G_j) Gamma u_j + u_j v_j`
/// (times `u_j` once more for the `mu` gradient); the H1 penalty contributes
/// `xi [(q - q_b) - lap_N (q - q_b)]`. The misfit part carries the `1/h^2`
/// pairing factor described in the module docs.
pub fn reduced_gradients<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    states: &ForwardStates<T>,
    adjoints: &[ScalarField<T>; 2],
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    weights: &ObjectiveWeights<T>,
) -> Result<GradientPair<T>> {
    let grid = *sigma.grid();
    let inv_h2 = T::one() / (grid.h() * grid.h());
    let alphas = [weights.alpha1, weights.alpha2];
    let mut grad_sigma = ScalarField::zeros(grid);
    let mut grad_mu = ScalarField::zeros(grid);
    for j in 0..2 {
        let u = &states.u[j];
        let hj = &states.pressure[j];
        let gj = &ds.measured[j];
        let v = &adjoints[j];
        for k in 0..grid.num_nodes() {
            let uu = u.values()[k];
            let residual = alphas[j] * (hj.values()[k] - gj.values()[k]);
            let base = residual * model.grueneisen.values()[k] * uu + uu * v.values()[k];
            grad_sigma.values_mut()[k] = grad_sigma.values()[k] + inv_h2 * base;
            grad_mu.values_mut()[k] = grad_mu.values()[k] + inv_h2 * base * uu;
        }
    }
    let ds_b = sigma.map(|v| v - model.sigma_b);
    let dm_b = mu.map(|v| v - model.mu_b);
    let lap_s = neumann_laplacian(&ds_b);
    let lap_m = neumann_laplacian(&dm_b);
    for k in 0..grid.num_nodes() {
        grad_sigma.values_mut()[k] =
            grad_sigma.values()[k] + weights.xi1 * (ds_b.values()[k] - lap_s.values()[k]);
        grad_mu.values_mut()[k] =
            grad_mu.values()[k] + weights.xi2 * (dm_b.values()[k] - lap_m.values()[k]);
    }
    Ok(GradientPair {
        sigma: grad_sigma,
        mu: grad_mu,
        space: GradientSpace::L2,
    })
}

/// Objective, forward states and L2 gradients in one evaluation.
pub struct Evaluation<T: Scalar> {
    pub value: ObjectiveValue<T>,
    pub grad: GradientPair<T>,
    pub states: ForwardStates<T>,
}

pub fn evaluate<T: Scalar>(
    sigma: &ScalarField<T>,
    mu: &ScalarField<T>,
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    weights: &ObjectiveWeights<T>,
    picard: &PicardSettings<T>,
    warm: [Option<&ScalarField<T>>; 2],
) -> Result<Evaluation<T>> {
    let states = solve_forward_states_from(sigma, mu, ds, model, picard, warm)?;
    let value = objective_from_states(sigma, mu, ds, model, weights, &states)?;
    let adjoints = [
        solve_adjoint(sigma, mu, &states.u[0], &ds.measured[0], weights.alpha1, model)?,
        solve_adjoint(sigma, mu, &states.u[1], &ds.measured[1], weights.alpha2, model)?,
    ];
    let grad = reduced_gradients(sigma, mu, &states, &adjoints, ds, model, weights)?;
    Ok(Evaluation { value, grad, states })
}

/// Sobolev smoothing: solve `(I - lap) w = g` with homogeneous Neumann
/// conditions and return the H1-Riesz representative `w`.
pub fn h1_smooth<T: Scalar>(g: &ScalarField<T>) -> Result<ScalarField<T>> {
    h1_smooth_scaled(g, T::one())
}

/// Smoothing with an explicit length scale: solves
/// `(I - length^2 lap) w = g`. Shorter lengths damp less.
pub fn h1_smooth_scaled<T: Scalar>(g: &ScalarField<T>, length: T) -> Result<ScalarField<T>> {
    let grid = *g.grid();
    let d = ScalarField::constant(grid, length * length);
    let c = ScalarField::constant(grid, T::one());
    let sys = assemble_neumann(&d, &c, g)?;
    sys.solve(cast(1e-12), default_max_iter(grid.n()))
}

/// Smooth both components of a gradient pair.
pub fn smooth_pair<T: Scalar>(grad: &GradientPair<T>, length: T) -> Result<GradientPair<T>> {
    Ok(GradientPair {
        sigma: h1_smooth_scaled(&grad.sigma, length)?,
        mu: h1_smooth_scaled(&grad.mu, length)?,
        space: GradientSpace::SobolevH1,
    })
}
