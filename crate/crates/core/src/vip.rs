//! Variable inertial proximal method: box-constrained minimization of the
//! regularized objective with soft shrinkage toward the backgrounds,
//! backtracking Lipschitz estimation and clamped KKT residuals as the
//! stopping test.

use log::warn;

use crate::adjoint::{
    evaluate, smooth_pair, DataSet, GradientPair, ObjectiveWeights, OpticalModel, PicardSettings,
};
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::scalar::{cast, Scalar};

/// Admissible intervals for both coefficients.
#[derive(Debug, Clone, Copy)]
pub struct BoxBounds<T: Scalar> {
    pub sigma_lo: T,
    pub sigma_hi: T,
    pub mu_lo: T,
    pub mu_hi: T,
}

impl<T: Scalar> BoxBounds<T> {
    /// Wide default box around the backgrounds: `[0.01 q_b, 50 q_b]`.
    pub fn default_for(sigma_b: T, mu_b: T) -> Self {
        Self {
            sigma_lo: cast::<T>(0.01) * sigma_b,
            sigma_hi: cast::<T>(50.0) * sigma_b,
            mu_lo: cast::<T>(0.01) * mu_b,
            mu_hi: cast::<T>(50.0) * mu_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (lo, hi) in [(self.sigma_lo, self.sigma_hi), (self.mu_lo, self.mu_hi)] {
            if !(T::zero() < lo && lo < hi) {
                return Err(Error::InvalidBounds {
                    lo: lo.to_f64().unwrap_or(f64::NAN),
                    hi: hi.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }
}

/// Optimizer parameters.
#[derive(Debug, Clone, Copy)]
pub struct VipConfig<T: Scalar> {
    /// Inertia weight, in (0, 1).
    pub theta: T,
    /// Step numerator factor, < 2.
    pub c1: T,
    /// Step denominator offset, > 0.
    pub c2: T,
    /// Backtracking growth factor, > 1.
    pub growth: T,
    /// Initial Lipschitz estimate.
    pub l0: T,
    /// Scaling `k` inside the complementarity residual.
    pub kkt_scale: T,
    /// Stopping tolerance on `||E1|| + ||E2||`.
    pub tol: T,
    /// Cap on accepted iterations.
    pub max_iter: usize,
    /// Cap on backtracking trials per iteration.
    pub backtrack_cap: u32,
    /// Length scale of the Sobolev gradient smoothing.
    pub sobolev_length: T,
    /// Forward-solve settings used inside objective evaluations.
    pub picard: PicardSettings<T>,
}

impl<T: Scalar> Default for VipConfig<T> {
    fn default() -> Self {
        Self {
            theta: cast(0.3),
            c1: cast(1.9),
            c2: cast(0.1),
            growth: cast(2.0),
            l0: T::one(),
            kkt_scale: T::one(),
            tol: cast(1e-4),
            max_iter: 500,
            backtrack_cap: 60,
            sobolev_length: cast(0.02),
            picard: PicardSettings::default(),
        }
    }
}

impl<T: Scalar> VipConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > T::zero() && self.theta < T::one()) {
            return Err(Error::InvalidConfig("theta must lie in (0, 1)".into()));
        }
        if !(self.c1 < (T::one() + T::one()) && self.c1 > T::zero()) {
            return Err(Error::InvalidConfig("c1 must lie in (0, 2)".into()));
        }
        if !(self.c2 > T::zero()) {
            return Err(Error::InvalidConfig("c2 must be positive".into()));
        }
        if !(self.growth > T::one()) {
            return Err(Error::InvalidConfig("growth must exceed 1".into()));
        }
        if !(self.l0 > T::zero()) {
            return Err(Error::InvalidConfig("l0 must be positive".into()));
        }
        if !(self.kkt_scale > T::zero()) {
            return Err(Error::InvalidConfig("kkt_scale must be positive".into()));
        }
        if !(self.sobolev_length > T::zero()) {
            return Err(Error::InvalidConfig("sobolev_length must be positive".into()));
        }
        Ok(())
    }

    /// Step size induced by a Lipschitz estimate: `c1 (1-theta) / (L + 2 c2)`.
    pub fn step(&self, lipschitz: T) -> T {
        self.c1 * (T::one() - self.theta) / (lipschitz + (T::one() + T::one()) * self.c2)
    }
}

/// Current and previous iterates with the step bookkeeping.
#[derive(Debug, Clone)]
pub struct VipState<T: Scalar> {
    pub sigma: ScalarField<T>,
    pub sigma_prev: ScalarField<T>,
    pub mu: ScalarField<T>,
    pub mu_prev: ScalarField<T>,
    pub lipschitz: T,
    pub step: T,
    pub e1_norm: T,
    pub e2_norm: T,
}

/// Multipliers recovered from a consolidated KKT field `c`.
#[derive(Debug, Clone)]
pub struct KktMultipliers<T: Scalar> {
    /// Subgradient of the L1 term, clamped to `[-gamma, gamma]`.
    pub lambda: ScalarField<T>,
    /// Multiplier of the lower box constraint.
    pub lambda_a: ScalarField<T>,
    /// Multiplier of the upper box constraint.
    pub lambda_b: ScalarField<T>,
}

/// Proximal map of `tau ||q - q_b||_L1` plus the box indicator:
/// shrink toward the background, then clamp into `[lo, hi]`.
pub fn prox_shrink_project<T: Scalar>(
    q: &ScalarField<T>,
    q_b: &ScalarField<T>,
    tau: T,
    lo: T,
    hi: T,
) -> Result<ScalarField<T>> {
    if lo > hi {
        return Err(Error::InvalidBounds {
            lo: lo.to_f64().unwrap_or(f64::NAN),
            hi: hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    q.zip_map(q_b, move |v, b| {
        let d = v - b;
        let shrunk = d.signum() * (d.abs() - tau).max(T::zero());
        (b + shrunk).max(lo).min(hi)
    })
}

/// Clamped KKT residual
/// `E(q, c) = q - max(0, q + k(c-gamma)) + max(0, q-hi + k(c-gamma))
///          - min(0, q + k(c+gamma)) + min(0, q-lo + k(c+gamma))`,
/// zero exactly where the complementarity conditions hold.
pub fn complementarity_residual<T: Scalar>(
    q: &ScalarField<T>,
    c: &ScalarField<T>,
    gamma: T,
    lo: T,
    hi: T,
    scale: T,
) -> Result<ScalarField<T>> {
    q.zip_map(c, move |qv, cv| {
        let z = T::zero();
        let up = scale * (cv - gamma);
        let dn = scale * (cv + gamma);
        qv - (qv + up).max(z) + (qv - hi + up).max(z) - (qv + dn).min(z) + (qv - lo + dn).min(z)
    })
}

/// Split a consolidated field `c` into multipliers satisfying
/// `lambda + lambda_b - lambda_a = c` nodewise:
/// `lambda = clamp(c, -gamma, gamma)`, `lambda_a = -min(0, c + gamma)`,
/// `lambda_b = max(0, c - gamma)`.
pub fn recover_multipliers<T: Scalar>(c: &ScalarField<T>, gamma: T) -> KktMultipliers<T> {
    KktMultipliers {
        lambda: c.map(move |v| v.max(-gamma).min(gamma)),
        lambda_a: c.map(move |v| -(v + gamma).min(T::zero())),
        lambda_b: c.map(move |v| (v - gamma).max(T::zero())),
    }
}

/// Shrinkage parameters for one coefficient.
#[derive(Debug, Clone)]
pub struct ProxParams<T: Scalar> {
    pub gamma: T,
    pub lo: T,
    pub hi: T,
    pub background: ScalarField<T>,
}

/// Accepted trial from the backtracking search.
#[derive(Debug, Clone)]
pub struct Backtrack<T: Scalar> {
    pub lipschitz: T,
    pub step: T,
    pub sigma: ScalarField<T>,
    pub mu: ScalarField<T>,
    pub smooth_value: T,
    pub trials: u32,
}

fn prox_trial<T: Scalar>(
    state: &VipState<T>,
    grad_smooth: &GradientPair<T>,
    prox_sigma: &ProxParams<T>,
    prox_mu: &ProxParams<T>,
    theta: T,
    step: T,
) -> Result<(ScalarField<T>, ScalarField<T>)> {
    let drift_s = state.sigma.sub(&state.sigma_prev)?;
    let z_s = state
        .sigma
        .add_scaled(-step, &grad_smooth.sigma)?
        .add_scaled(theta, &drift_s)?;
    let sigma = prox_shrink_project(
        &z_s,
        &prox_sigma.background,
        prox_sigma.gamma * step,
        prox_sigma.lo,
        prox_sigma.hi,
    )?;
    let drift_m = state.mu.sub(&state.mu_prev)?;
    let z_m = state
        .mu
        .add_scaled(-step, &grad_smooth.mu)?
        .add_scaled(theta, &drift_m)?;
    let mu = prox_shrink_project(
        &z_m,
        &prox_mu.background,
        prox_mu.gamma * step,
        prox_mu.lo,
        prox_mu.hi,
    )?;
    Ok((sigma, mu))
}

/// Find the smallest `L = growth^i * l_prev` whose quadratic upper bound
/// accepts the proximal trial produced with step `c1 (1-theta)/(L + 2 c2)`.
///
/// `smooth_fn` evaluates the smooth objective part at a trial pair;
/// `smooth_at_state` is its value at the current iterate and `grad` the L2
/// gradient there. `grad_smooth` is the Sobolev representation used inside
/// the trial map.
#[allow(clippy::too_many_arguments)]
pub fn backtrack_lipschitz<T: Scalar>(
    state: &VipState<T>,
    grad: &GradientPair<T>,
    grad_smooth: &GradientPair<T>,
    smooth_at_state: T,
    prox_sigma: &ProxParams<T>,
    prox_mu: &ProxParams<T>,
    cfg: &VipConfig<T>,
    mut smooth_fn: impl FnMut(&ScalarField<T>, &ScalarField<T>) -> Result<T>,
) -> Result<Backtrack<T>> {
    let mut lipschitz = state.lipschitz;
    for trial in 0..=cfg.backtrack_cap {
        let step = cfg.step(lipschitz);
        let (sigma, mu) = prox_trial(state, grad_smooth, prox_sigma, prox_mu, cfg.theta, step)?;
        let value = smooth_fn(&sigma, &mu)?;
        let ds = sigma.sub(&state.sigma)?;
        let dm = mu.sub(&state.mu)?;
        let half = cast::<T>(0.5);
        let bound = smooth_at_state
            + grad.sigma.inner(&ds)?
            + grad.mu.inner(&dm)?
            + half * lipschitz * (ds.inner(&ds)? + dm.inner(&dm)?);
        // small relative slack absorbs solver noise in the two evaluations
        let slack = T::epsilon() * cast::<T>(256.0) * (T::one() + bound.abs());
        if value <= bound + slack {
            return Ok(Backtrack {
                lipschitz,
                step,
                sigma,
                mu,
                smooth_value: value,
                trials: trial,
            });
        }
        lipschitz = lipschitz * cfg.growth;
    }
    Err(Error::BacktrackExhausted {
        trials: cfg.backtrack_cap,
        lipschitz: lipschitz.to_f64().unwrap_or(f64::NAN),
    })
}

/// One row of the reconstruction trace.
#[derive(Debug, Clone, Copy)]
pub struct ReconTraceRow<T: Scalar> {
    pub iter: usize,
    pub objective: T,
    pub misfit: T,
    pub e1: T,
    pub e2: T,
    pub lipschitz: T,
    pub step: T,
}

/// Reconstruction output.
#[derive(Debug, Clone)]
pub struct ReconResult<T: Scalar> {
    pub sigma: ScalarField<T>,
    pub mu: ScalarField<T>,
    pub trace: Vec<ReconTraceRow<T>>,
    pub converged: bool,
    /// Number of accepted proximal steps.
    pub iterations: usize,
}

/// Serialize a trace as `iter,J,misfit,E1,E2,L,step` CSV.
pub fn write_trace_csv<T: Scalar>(
    trace: &[ReconTraceRow<T>],
    out: &mut impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(out, "iter,J,misfit,E1,E2,L,step")?;
    for row in trace {
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            row.iter, row.objective, row.misfit, row.e1, row.e2, row.lipschitz, row.step
        )?;
    }
    Ok(())
}

/// Run the optimizer from `init` (defaults to the backgrounds).
///
/// Per iteration: evaluate objective and L2 gradients, smooth them, form the
/// complementarity residuals of the shifted iterates against
/// `c = -(grad)_H1`, stop once `||E1|| + ||E2|| <= tol`, otherwise
/// backtrack and apply the inertial proximal step.
pub fn vip_reconstruct<T: Scalar>(
    ds: &DataSet<T>,
    model: &OpticalModel<T>,
    bounds: &BoxBounds<T>,
    weights: &ObjectiveWeights<T>,
    cfg: &VipConfig<T>,
    init: Option<(&ScalarField<T>, &ScalarField<T>)>,
) -> Result<ReconResult<T>> {
    cfg.validate()?;
    bounds.validate()?;
    weights.validate()?;
    let grid = *model.grid();
    for field in ds.illum.iter().chain(ds.measured.iter()) {
        field.same_grid(&model.d)?;
    }
    if ds.illum[0].min_value() <= T::zero() || ds.illum[1].min_value() <= T::zero() {
        warn!("illumination patterns should be strictly positive");
    }
    if ds.illum[0]
        .values()
        .iter()
        .zip(ds.illum[1].values())
        .any(|(&a, &b)| a == b)
    {
        warn!("illumination patterns coincide at some nodes; reconstruction may be ill-posed");
    }

    let sigma_b = ScalarField::constant(grid, model.sigma_b);
    let mu_b = ScalarField::constant(grid, model.mu_b);
    let (mut sigma, mut mu) = match init {
        Some((s, m)) => {
            s.same_grid(&model.d)?;
            m.same_grid(&model.d)?;
            (s.clone(), m.clone())
        }
        None => (sigma_b.clone(), mu_b.clone()),
    };
    if sigma.min_value() < bounds.sigma_lo
        || sigma.max_value() > bounds.sigma_hi
        || mu.min_value() < bounds.mu_lo
        || mu.max_value() > bounds.mu_hi
    {
        return Err(Error::InvalidConfig(
            "initial coefficients violate the box bounds".into(),
        ));
    }
    let mut sigma_prev = sigma.clone();
    let mut mu_prev = mu.clone();

    let prox_sigma = ProxParams {
        gamma: weights.gamma1,
        lo: bounds.sigma_lo,
        hi: bounds.sigma_hi,
        background: sigma_b.clone(),
    };
    let prox_mu = ProxParams {
        gamma: weights.gamma2,
        lo: bounds.mu_lo,
        hi: bounds.mu_hi,
        background: mu_b.clone(),
    };

    let mut lipschitz = cfg.l0;
    let mut trace: Vec<ReconTraceRow<T>> = Vec::new();
    let mut converged = false;
    let mut steps = 0usize;
    let mut warm: [Option<ScalarField<T>>; 2] = [None, None];

    loop {
        let k = steps;
        let eval = evaluate(
            &sigma,
            &mu,
            ds,
            model,
            weights,
            &cfg.picard,
            [warm[0].as_ref(), warm[1].as_ref()],
        )
        .map_err(|e| e.at_optimizer_iteration(k))?;
        if !eval.value.total.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: k });
        }
        warm = [Some(eval.states.u[0].clone()), Some(eval.states.u[1].clone())];
        let grad_h1 = smooth_pair(&eval.grad, cfg.sobolev_length)
            .map_err(|e| e.at_optimizer_iteration(k))?;

        // complementarity residuals of the background-shifted iterates
        let c_sigma = grad_h1.sigma.scale(-T::one());
        let c_mu = grad_h1.mu.scale(-T::one());
        let e1 = complementarity_residual(
            &sigma.sub(&sigma_b)?,
            &c_sigma,
            weights.gamma1,
            bounds.sigma_lo - model.sigma_b,
            bounds.sigma_hi - model.sigma_b,
            cfg.kkt_scale,
        )?
        .l2_norm();
        let e2 = complementarity_residual(
            &mu.sub(&mu_b)?,
            &c_mu,
            weights.gamma2,
            bounds.mu_lo - model.mu_b,
            bounds.mu_hi - model.mu_b,
            cfg.kkt_scale,
        )?
        .l2_norm();

        trace.push(ReconTraceRow {
            iter: k,
            objective: eval.value.total,
            misfit: eval.value.misfit,
            e1,
            e2,
            lipschitz,
            step: cfg.step(lipschitz),
        });

        if e1 + e2 <= cfg.tol {
            converged = true;
            break;
        }
        if steps >= cfg.max_iter {
            break;
        }

        let state = VipState {
            sigma: sigma.clone(),
            sigma_prev: sigma_prev.clone(),
            mu: mu.clone(),
            mu_prev: mu_prev.clone(),
            lipschitz,
            step: cfg.step(lipschitz),
            e1_norm: e1,
            e2_norm: e2,
        };
        let smooth_fn = |s: &ScalarField<T>, m: &ScalarField<T>| -> Result<T> {
            let states = crate::adjoint::solve_forward_states_from(
                s,
                m,
                ds,
                model,
                &cfg.picard,
                [warm[0].as_ref(), warm[1].as_ref()],
            )?;
            Ok(crate::adjoint::objective_from_states(s, m, ds, model, weights, &states)?.smooth)
        };
        let accepted = backtrack_lipschitz(
            &state,
            &eval.grad,
            &grad_h1,
            eval.value.smooth,
            &prox_sigma,
            &prox_mu,
            cfg,
            smooth_fn,
        )
        .map_err(|e| e.at_optimizer_iteration(k))?;

        sigma_prev = std::mem::replace(&mut sigma, accepted.sigma);
        mu_prev = std::mem::replace(&mut mu, accepted.mu);
        lipschitz = accepted.lipschitz;
        steps += 1;
    }

    Ok(ReconResult {
        sigma,
        mu,
        trace,
        converged,
        iterations: steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid5() -> Grid2D<f64> {
        Grid2D::unit_square(5).unwrap()
    }

    #[test]
    fn prox_examples() {
        let g = grid5();
        let qb = ScalarField::zeros(g);
        let case = |q: f64, tau: f64| {
            prox_shrink_project(&ScalarField::constant(g, q), &qb, tau, 0.0, 2.0)
                .unwrap()
                .get(1, 1)
        };
        assert_relative_eq!(case(0.5, 0.1), 0.4);
        assert_eq!(case(0.05, 0.1), 0.0);
        assert_eq!(case(3.0, 0.1), 2.0);
        assert!(prox_shrink_project(&qb, &qb, 0.1, 1.0, 0.5).is_err());
    }

    #[test]
    fn complementarity_hand_cases() {
        let g = grid5();
        let case = |q: f64, c: f64| {
            complementarity_residual(
                &ScalarField::constant(g, q),
                &ScalarField::constant(g, c),
                0.1,
                0.0,
                1.0,
                1.0,
            )
            .unwrap()
            .get(0, 0)
        };
        assert_eq!(case(0.5, 0.1), 0.0);
        assert_eq!(case(0.0, 0.0), 0.0);
        assert_relative_eq!(case(0.5, 0.5), -0.4);
    }

    #[test]
    fn multiplier_recovery_cases() {
        let g = grid5();
        let rec = |c: f64| {
            let m = recover_multipliers(&ScalarField::constant(g, c), 0.1);
            (m.lambda.get(0, 0), m.lambda_a.get(0, 0), m.lambda_b.get(0, 0))
        };
        assert_eq!(rec(0.0), (0.0, 0.0, 0.0));
        let (l, la, lb) = rec(0.2);
        assert_relative_eq!(l, 0.1);
        assert_eq!(la, 0.0);
        assert_relative_eq!(lb, 0.1);
        // consolidation identity holds for negative c as well
        let (l, la, lb) = rec(-0.3);
        assert_relative_eq!(l + lb - la, -0.3);
    }

    /// Quadratic test functional with known curvature used to exercise the
    /// backtracking search without PDE solves.
    struct Quadratic {
        curvature: f64,
        center: f64,
    }

    impl Quadratic {
        fn value(&self, s: &ScalarField<f64>, m: &ScalarField<f64>) -> f64 {
            let q = |f: &ScalarField<f64>| {
                let d = f.map(|v| v - self.center);
                0.5 * self.curvature * d.inner(&d).unwrap()
            };
            q(s) + q(m)
        }

        fn grad(&self, f: &ScalarField<f64>) -> ScalarField<f64> {
            f.map(|v| self.curvature * (v - self.center))
        }
    }

    fn quad_state(g: Grid2D<f64>, l0: f64) -> (VipState<f64>, Quadratic) {
        let quad = Quadratic { curvature: 8.0, center: 0.2 };
        let sigma = ScalarField::constant(g, 1.0);
        let mu = ScalarField::constant(g, 0.8);
        let state = VipState {
            sigma: sigma.clone(),
            sigma_prev: sigma,
            mu: mu.clone(),
            mu_prev: mu,
            lipschitz: l0,
            step: 0.0,
            e1_norm: 0.0,
            e2_norm: 0.0,
        };
        (state, quad)
    }

    fn wide_prox(g: Grid2D<f64>, center: f64) -> ProxParams<f64> {
        ProxParams {
            gamma: 0.0,
            lo: -1e9,
            hi: 1e9,
            background: ScalarField::constant(g, center),
        }
    }

    #[test]
    fn backtracking_accepts_within_one_growth_factor() {
        let g = grid5();
        let (state, quad) = quad_state(g, 1.0);
        let cfg = VipConfig::<f64> { theta: 0.3, ..VipConfig::default() };
        let grad = GradientPair {
            sigma: quad.grad(&state.sigma),
            mu: quad.grad(&state.mu),
            space: crate::adjoint::GradientSpace::L2,
        };
        let smooth = grad.clone();
        let j0 = quad.value(&state.sigma, &state.mu);
        let bt = backtrack_lipschitz(
            &state,
            &grad,
            &smooth,
            j0,
            &wide_prox(g, 0.2),
            &wide_prox(g, 0.2),
            &cfg,
            |s, m| Ok(quad.value(s, m)),
        )
        .unwrap();
        // exact curvature 8: accepted L is at most growth * 8
        assert!(bt.lipschitz <= cfg.growth * 8.0 + 1e-12, "L = {}", bt.lipschitz);
        assert!(bt.smooth_value < j0);
    }

    #[test]
    fn backtracking_accepts_immediately_when_l0_large() {
        let g = grid5();
        let (state, quad) = quad_state(g, 50.0);
        let cfg = VipConfig::<f64>::default();
        let grad = GradientPair {
            sigma: quad.grad(&state.sigma),
            mu: quad.grad(&state.mu),
            space: crate::adjoint::GradientSpace::L2,
        };
        let smooth = grad.clone();
        let j0 = quad.value(&state.sigma, &state.mu);
        let bt = backtrack_lipschitz(
            &state,
            &grad,
            &smooth,
            j0,
            &wide_prox(g, 0.2),
            &wide_prox(g, 0.2),
            &cfg,
            |s, m| Ok(quad.value(s, m)),
        )
        .unwrap();
        assert_eq!(bt.trials, 0);
        assert_eq!(bt.lipschitz, 50.0);
    }

    #[test]
    fn zero_inertia_reduces_to_projected_gradient_descent() {
        let g = grid5();
        let (state, quad) = quad_state(g, 64.0);
        let cfg = VipConfig::<f64> {
            theta: 1e-12, // effectively zero while satisfying theta > 0
            ..VipConfig::default()
        };
        let grad = GradientPair {
            sigma: quad.grad(&state.sigma),
            mu: quad.grad(&state.mu),
            space: crate::adjoint::GradientSpace::L2,
        };
        let smooth = grad.clone();
        let j0 = quad.value(&state.sigma, &state.mu);
        let bt = backtrack_lipschitz(
            &state,
            &grad,
            &smooth,
            j0,
            &wide_prox(g, 0.2),
            &wide_prox(g, 0.2),
            &cfg,
            |s, m| Ok(quad.value(s, m)),
        )
        .unwrap();
        // gamma = 0, wide box, theta ~ 0: the step is plain gradient descent
        let s = cfg.step(bt.lipschitz);
        for k in 0..g.num_nodes() {
            let expected = state.sigma.values()[k] - s * grad.sigma.values()[k];
            assert_relative_eq!(bt.sigma.values()[k], expected, epsilon = 1e-9);
        }
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(
            a in proptest::collection::vec(-5.0f64..5.0, 25),
            b in proptest::collection::vec(-5.0f64..5.0, 25),
            tau in 0.0f64..2.0,
        ) {
            let g = grid5();
            let qb = ScalarField::constant(g, 0.3);
            let fa = ScalarField::new(g, a).unwrap();
            let fb = ScalarField::new(g, b).unwrap();
            let pa = prox_shrink_project(&fa, &qb, tau, 0.1, 2.0).unwrap();
            let pb = prox_shrink_project(&fb, &qb, tau, 0.1, 2.0).unwrap();
            let num = pa.sub(&pb).unwrap().l2_norm();
            let den = fa.sub(&fb).unwrap().l2_norm();
            prop_assert!(num <= den + 1e-12);
            prop_assert!(pa.min_value() >= 0.1 && pa.max_value() <= 2.0);
        }

        #[test]
        fn prox_fixes_background(tau in 0.0f64..1.0) {
            let g = grid5();
            let qb = ScalarField::constant(g, 0.5);
            let p = prox_shrink_project(&qb, &qb, tau, 0.0, 1.0).unwrap();
            prop_assert_eq!(p, qb);
        }

        #[test]
        fn multiplier_identity_random(c in -3.0f64..3.0, gamma in 0.0f64..1.0) {
            let g = grid5();
            let cf = ScalarField::constant(g, c);
            let m = recover_multipliers(&cf, gamma);
            let back = m.lambda.get(0, 0) + m.lambda_b.get(0, 0) - m.lambda_a.get(0, 0);
            prop_assert!((back - c).abs() < 1e-14);
            prop_assert!(m.lambda_a.get(0, 0) >= 0.0 && m.lambda_b.get(0, 0) >= 0.0);
        }
    }
}
