//! Frequency fixed points: the residual, a grounded Newton solver, twisted states and
//! a random-start catalog search.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    check_len, coupling_into, mean_frequency, wrap_angle, ModelParams, PhaseState,
};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::solve_dense;
use crate::sampling;

/// Per-angle circular tolerance used to merge solver results.
pub const DEDUP_TOL: f64 = 1e-6;

/// `ω_i − ω̄ + k Σ_j A_ij sin(θ_j − θ_i)`. Vanishes exactly at frequency fixed points.
pub fn residual(theta: &PhaseState, params: &ModelParams, net: &Network) -> Result<Vec<f64>> {
    check_len(net.n(), theta.len())?;
    check_len(net.n(), params.n())?;
    Ok(residual_raw(theta.theta(), params, net))
}

fn residual_raw(theta: &[f64], params: &ModelParams, net: &Network) -> Vec<f64> {
    let mut r = vec![0.0; theta.len()];
    coupling_into(theta, net, &mut r);
    let mean = mean_frequency(params);
    for (ri, w) in r.iter_mut().zip(params.omega()) {
        *ri = w - mean + params.k() * *ri;
    }
    r
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A solved fixed point in the gauge where `theta[grounding] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    #[serde(with = "crate::dynamics::phase_vec")]
    pub theta: PhaseState,
    pub residual_norm: f64,
    pub grounding: usize,
}

impl FixedPoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fixed point serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Convergence threshold on the max-norm of the residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

/// Jacobian of the residual with the grounding row and column removed,
/// `(n−1) × (n−1)`. Entry `(i, j)` is `k A_ij cos(θ_j − θ_i)` off the diagonal.
pub fn reduced_jacobian(
    theta: &[f64],
    params: &ModelParams,
    net: &Network,
    grounding: usize,
) -> DMatrix<f64> {
    let n = net.n();
    let idx = |i: usize| if i < grounding { i } else { i - 1 };
    let mut jac = DMatrix::zeros(n - 1, n - 1);
    for &(i, j) in net.edges() {
        let c = params.k() * (theta[j] - theta[i]).cos();
        if i != grounding {
            jac[(idx(i), idx(i))] -= c;
        }
        if j != grounding {
            jac[(idx(j), idx(j))] -= c;
        }
        if i != grounding && j != grounding {
            jac[(idx(i), idx(j))] += c;
            jac[(idx(j), idx(i))] += c;
        }
    }
    jac
}

/// Newton iteration on the fixed-point equations with `θ_grounding` pinned to zero.
///
/// The grounding node's own equation is dropped: the residual always sums to zero,
/// so it is implied by the others.
pub fn solve_newton(
    net: &Network,
    params: &ModelParams,
    theta0: &PhaseState,
    grounding: usize,
    opts: NewtonOptions,
) -> Result<FixedPoint> {
    let n = net.n();
    check_len(n, theta0.len())?;
    check_len(n, params.n())?;
    if grounding >= n {
        return Err(Error::InvalidParameter(format!(
            "grounding node {grounding} out of range for n = {n}"
        )));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let mut theta = canonicalize(theta0, grounding).into_vec();
    let mut res_norm = f64::INFINITY;
    for iteration in 0..=opts.max_iter {
        let r = residual_raw(&theta, params, net);
        res_norm = max_norm(&r);
        if res_norm < opts.tol {
            return Ok(FixedPoint {
                theta: PhaseState::new(theta),
                residual_norm: res_norm,
                grounding,
            });
        }
        if iteration == opts.max_iter {
            break;
        }
        let jac = reduced_jacobian(&theta, params, net, grounding);
        let rhs = DVector::from_iterator(
            n - 1,
            r.iter()
                .enumerate()
                .filter(|&(i, _)| i != grounding)
                .map(|(_, &v)| -v),
        );
        let step = solve_dense(jac, &rhs).ok_or(Error::SingularJacobian { iteration })?;
        let mut s = step.iter();
        for (i, t) in theta.iter_mut().enumerate() {
            if i != grounding {
                *t = wrap_angle(*t + s.next().expect("step length n - 1"));
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: res_norm,
    })
}

/// Uniformly twisted state `θ_i = 2π q i / n`, wrapped.
pub fn twisted_state(n: usize, q: i64) -> PhaseState {
    // reduce q·i mod n in integers so large twists stay exact
    let n_i = n as i64;
    PhaseState::new(
        (0..n_i)
            .map(|i| TAU * ((q * i).rem_euclid(n_i.max(1))) as f64 / n as f64)
            .collect(),
    )
}

/// Rotates `theta` so node `grounding` sits at phase zero.
pub fn canonicalize(theta: &PhaseState, grounding: usize) -> PhaseState {
    let g = theta.theta()[grounding];
    PhaseState::new(theta.theta().iter().map(|x| x - g).collect())
}

/// Equality up to a global rotation, each angle compared on the circle.
pub fn states_equal(a: &PhaseState, b: &PhaseState, tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    let (ca, cb) = (canonicalize(a, 0), canonicalize(b, 0));
    ca.theta()
        .iter()
        .zip(cb.theta())
        .all(|(x, y)| wrap_angle(x - y).abs() <= tol)
}

/// Appends `fp` unless an equal state is already present. Returns the index of the
/// matching entry.
pub fn merge_into(catalog: &mut Vec<FixedPoint>, fp: FixedPoint) -> usize {
    if let Some(pos) = catalog
        .iter()
        .position(|c| states_equal(&c.theta, &fp.theta, DEDUP_TOL))
    {
        pos
    } else {
        catalog.push(fp);
        catalog.len() - 1
    }
}

/// Random start for `trial`, reproducible per `(seed, trial)`.
pub fn random_start(n: usize, seed: u64, trial: u64) -> PhaseState {
    PhaseState::new(sampling::uniform_phases(n, seed, trial))
}

/// Distinct fixed points reached by Newton from `trials` uniform random starts under
/// homogeneous parameters. Entries appear in order of the first trial that found them.
pub fn find_fixed_points(net: &Network, trials: usize, seed: u64, tol: f64) -> Vec<FixedPoint> {
    let params = ModelParams::homogeneous(net.n());
    let opts = NewtonOptions {
        tol,
        ..NewtonOptions::default()
    };
    let solved: Vec<Option<FixedPoint>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| solve_newton(net, &params, &random_start(net.n(), seed, t), 0, opts).ok())
        .collect();
    let mut catalog = Vec::new();
    for fp in solved.into_iter().flatten() {
        merge_into(&mut catalog, fp);
    }
    catalog
}
