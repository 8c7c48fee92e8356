//! The Kuramoto vector field `θ̇_i = ω_i + k Σ_j A_ij sin(θ_j − θ_i)` and its flow.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Phases of the `n` oscillators in radians, each kept in `(−π, π]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhaseStateJson")]
pub struct PhaseState {
    theta: Vec<f64>,
}

#[derive(Deserialize)]
struct PhaseStateJson {
    theta: Vec<f64>,
}

impl TryFrom<PhaseStateJson> for PhaseState {
    type Error = Error;

    fn try_from(raw: PhaseStateJson) -> Result<Self> {
        if raw.theta.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("phases must be finite".into()));
        }
        Ok(PhaseState::new(raw.theta))
    }
}

impl PhaseState {
    /// Wraps every entry into `(−π, π]`.
    pub fn new(mut theta: Vec<f64>) -> Self {
        theta.iter_mut().for_each(|x| *x = wrap_angle(*x));
        Self { theta }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            theta: vec![0.0; n],
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Rotates every phase by `c`.
    pub fn rotated(&self, c: f64) -> Self {
        Self::new(self.theta.iter().map(|x| x + c).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.theta
    }

    /// Largest circular distance between any two phases.
    pub fn max_pairwise_spread(&self) -> f64 {
        let mut spread = 0.0_f64;
        for (a, &x) in self.theta.iter().enumerate() {
            for &y in &self.theta[a + 1..] {
                spread = spread.max(wrap_angle(x - y).abs());
            }
        }
        spread
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("phase state serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Serde adapter writing a [`PhaseState`] as a bare array of radians.
pub mod phase_vec {
    use super::PhaseState;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(state: &PhaseState, ser: S) -> Result<S::Ok, S::Error> {
        state.theta().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<PhaseState, D::Error> {
        let theta = Vec::<f64>::deserialize(de)?;
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(serde::de::Error::custom("phases must be finite"));
        }
        Ok(PhaseState::new(theta))
    }
}

/// Natural frequencies and coupling strength.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    omega: Vec<f64>,
    k: f64,
}

impl ModelParams {
    pub fn new(omega: Vec<f64>, k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be positive, got {k}"
            )));
        }
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("frequencies must be finite".into()));
        }
        Ok(Self { omega, k })
    }

    /// `ω = 0`, `k = 1`.
    pub fn homogeneous(n: usize) -> Self {
        Self {
            omega: vec![0.0; n],
            k: 1.0,
        }
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Shape { expected, actual })
    }
}

/// `Σ_j A_ij sin(θ_j − θ_i)` for every node, written into `out`.
pub(crate) fn coupling_into(theta: &[f64], net: &Network, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for &(i, j) in net.edges() {
        let s = (theta[j] - theta[i]).sin();
        out[i] += s;
        out[j] -= s;
    }
}

fn field_into(theta: &[f64], params: &ModelParams, net: &Network, out: &mut [f64]) {
    coupling_into(theta, net, out);
    for (v, w) in out.iter_mut().zip(&params.omega) {
        *v = w + params.k * *v;
    }
}

/// Instantaneous angular velocities at `state`.
pub fn rhs(state: &PhaseState, params: &ModelParams, net: &Network) -> Result<Vec<f64>> {
    check_len(net.n(), state.len())?;
    check_len(net.n(), params.n())?;
    let mut out = vec![0.0; net.n()];
    field_into(state.theta(), params, net, &mut out);
    Ok(out)
}

/// Fixed-step classical RK4 integrator. Phases are wrapped after every step.
#[derive(Debug)]
pub struct Rk4<'a> {
    params: &'a ModelParams,
    net: &'a Network,
    dt: f64,
    k: [Vec<f64>; 4],
    scratch: Vec<f64>,
}

impl<'a> Rk4<'a> {
    pub fn new(params: &'a ModelParams, net: &'a Network, dt: f64) -> Result<Self> {
        check_len(net.n(), params.n())?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n = net.n();
        Ok(Self {
            params,
            net,
            dt,
            k: std::array::from_fn(|_| vec![0.0; n]),
            scratch: vec![0.0; n],
        })
    }

    /// Advances `theta` in place by one step.
    pub fn step(&mut self, theta: &mut [f64]) {
        let (dt, n) = (self.dt, theta.len());
        let [k1, k2, k3, k4] = &mut self.k;
        let y = &mut self.scratch;
        field_into(theta, self.params, self.net, k1);
        for i in 0..n {
            y[i] = theta[i] + 0.5 * dt * k1[i];
        }
        field_into(y, self.params, self.net, k2);
        for i in 0..n {
            y[i] = theta[i] + 0.5 * dt * k2[i];
        }
        field_into(y, self.params, self.net, k3);
        for i in 0..n {
            y[i] = theta[i] + dt * k3[i];
        }
        field_into(y, self.params, self.net, k4);
        for i in 0..n {
            theta[i] =
                wrap_angle(theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
    }

    /// Runs `steps` steps from `state`, calling `observe` after each one.
    pub fn run_with<F>(
        &mut self,
        state: &PhaseState,
        steps: usize,
        mut observe: F,
    ) -> Result<PhaseState>
    where
        F: FnMut(usize, &[f64]),
    {
        check_len(self.net.n(), state.len())?;
        let mut theta = state.theta().to_vec();
        for step in 0..steps {
            self.step(&mut theta);
            if theta.iter().any(|x| !x.is_finite()) {
                return Err(Error::Divergence { step });
            }
            observe(step, &theta);
        }
        Ok(PhaseState { theta })
    }
}

/// Final state after `steps` RK4 steps of size `dt`.
pub fn integrate_rk4(
    state: &PhaseState,
    params: &ModelParams,
    net: &Network,
    dt: f64,
    steps: usize,
) -> Result<PhaseState> {
    Rk4::new(params, net, dt)?.run_with(state, steps, |_, _| {})
}

/// The initial state followed by the state after each of `steps` RK4 steps.
pub fn integrate_rk4_trajectory(
    state: &PhaseState,
    params: &ModelParams,
    net: &Network,
    dt: f64,
    steps: usize,
) -> Result<Vec<PhaseState>> {
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(state.clone());
    Rk4::new(params, net, dt)?.run_with(state, steps, |_, theta| {
        traj.push(PhaseState {
            theta: theta.to_vec(),
        })
    })?;
    Ok(traj)
}

/// `ω̄`, which the flow conserves as the mean velocity.
pub fn mean_frequency(params: &ModelParams) -> f64 {
    if params.omega.is_empty() {
        return 0.0;
    }
    params.omega.iter().sum::<f64>() / params.omega.len() as f64
}

pub fn mean_velocity(state: &PhaseState, params: &ModelParams, net: &Network) -> Result<f64> {
    let v = rhs(state, params, net)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Complex order sum `p = Σ_j e^{iθ_j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderParameter {
    pub p: Complex64,
    n: usize,
}

impl OrderParameter {
    pub fn magnitude(&self) -> f64 {
        self.p.norm()
    }

    /// `arg p`; fails when `p` vanishes (to rounding).
    pub fn argument(&self) -> Result<f64> {
        if self.magnitude() <= 1e-12 * self.n.max(1) as f64 {
            Err(Error::UndefinedArgument)
        } else {
            Ok(self.p.arg())
        }
    }
}

pub fn complex_order(state: &PhaseState) -> OrderParameter {
    let p = state
        .theta()
        .iter()
        .map(|&t| Complex64::from_polar(1.0, t))
        .sum();
    OrderParameter { p, n: state.len() }
}
