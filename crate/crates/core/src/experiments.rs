//! Numerical reproductions built on the lower modules.

use std::f64::consts::{PI, SQRT_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate_rk4, ModelParams, PhaseState};
use crate::error::{Error, Result};
use crate::fixedpoint::{
    find_fixed_points, merge_into, random_start, residual, solve_newton, states_equal,
    twisted_state, FixedPoint, NewtonOptions, DEDUP_TOL,
};
use crate::graph::Network;
use crate::stability::{analyze, cut_sum, cut_tolerance, Classification};

/// One degree of a ring sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub d: usize,
    /// Second entry of the descending spectrum of `M` at the twisted state.
    pub lambda2: f64,
    pub stable: bool,
    /// Whether the cut splitting the ring into two index halves is non-negative.
    pub cut_ok: bool,
}

/// Stability of the `q`-twisted state on `wsg(n, d)` for each `d`, sorted by `d`.
pub fn wsg_sweep(n: usize, q: i64, d_values: &[usize]) -> Result<Vec<SweepRow>> {
    let mut ds = d_values.to_vec();
    ds.sort_unstable();
    ds.dedup();
    let theta = twisted_state(n, q);
    let half: Vec<usize> = (0..n / 2).collect();
    ds.par_iter()
        .map(|&d| {
            let net = Network::wsg(n, d)?;
            let res = residual(&theta, &ModelParams::homogeneous(n), &net)?;
            let worst = res.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
            if worst > 1e-8 {
                return Err(Error::Inconsistent(format!(
                    "twisted state q = {q} has residual {worst:e} on wsg({n}, {d})"
                )));
            }
            let report = analyze(&theta, &net)?;
            let cut = cut_sum(&theta, &net, &half)?;
            Ok(SweepRow {
                d,
                lambda2: report.lambda2(),
                stable: report.classification == Classification::Stable,
                cut_ok: cut >= -cut_tolerance(n),
            })
        })
        .collect()
}

/// Every valid ring degree for `n`: `2, 4, …` up to `n − 1`.
pub fn all_wsg_degrees(n: usize) -> Vec<usize> {
    (2..n).step_by(2).collect()
}

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("d,lambda2,stable,cut_ok\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.d, r.lambda2, r.stable, r.cut_ok
        ));
    }
    out
}

pub fn sweep_from_csv(s: &str) -> Result<Vec<SweepRow>> {
    let bad = |line: &str| Error::InvalidParameter(format!("bad sweep row {line:?}"));
    let mut lines = s.lines();
    if lines.next() != Some("d,lambda2,stable,cut_ok") {
        return Err(Error::InvalidParameter("missing sweep header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad(line));
            }
            Ok(SweepRow {
                d: f[0].parse().map_err(|_| bad(line))?,
                lambda2: f[1].parse().map_err(|_| bad(line))?,
                stable: f[2].parse().map_err(|_| bad(line))?,
                cut_ok: f[3].parse().map_err(|_| bad(line))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfCircleCut {
    /// `2 Σ_{i=1}^{d/2} i cos(2πi/n)`.
    pub exact: f64,
    /// Continuum form `(n²/2π²)[y sin y + cos y − 1]` with `y = dπ/n`.
    pub limit: f64,
}

/// Half-ring cut of the single-twist state on `wsg(n, d)`, exact and continuum.
pub fn halfcircle_cut_wsg(n: usize, d: usize) -> Result<HalfCircleCut> {
    if n == 0 || !d.is_multiple_of(2) || d > n.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "need even d <= n - 1, got n = {n}, d = {d}"
        )));
    }
    let delta = TAU / n as f64;
    let exact = 2.0
        * (1..=d / 2)
            .map(|i| i as f64 * (i as f64 * delta).cos())
            .sum::<f64>();
    let (nf, y) = (n as f64, d as f64 * PI / n as f64);
    let limit = nf * nf / (2.0 * PI * PI) * (y * y.sin() + y.cos() - 1.0);
    Ok(HalfCircleCut { exact, limit })
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (mut flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::RootBracket { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WsgThreshold {
    /// Root of `y sin y + cos y − 1` on `(1, 3)`.
    pub y_star: f64,
    /// `y_star / π`, the limiting `d/n` at which the half-ring cut changes sign.
    pub ratio: f64,
}

pub fn halfcut_limit_shape(y: f64) -> f64 {
    y * y.sin() + y.cos() - 1.0
}

pub fn lemma_wsg_threshold() -> Result<WsgThreshold> {
    let y_star = bisect(halfcut_limit_shape, 1.0, 3.0, 1e-12)?;
    Ok(WsgThreshold {
        y_star,
        ratio: y_star / PI,
    })
}

/// Dense-network constant chain. `final_bound_coeff` is evaluated from the rounded
/// four-digit constants, `final_bound_coeff_full` from the recomputed ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theorem42Constants {
    /// Root of `tan x = 1/x` on `(0.5, 1.5)`.
    pub x_star: f64,
    /// Arc width `2 x_star`.
    pub r: f64,
    pub cos_half: f64,
    /// `r / 2π`, the guaranteed fraction of nodes in the fullest arc.
    pub beta_min: f64,
    /// `√2 · 0.0605`.
    pub p_case2_bound: f64,
    pub final_bound_coeff: f64,
    pub final_bound_coeff_full: f64,
}

/// Degree deficit `1 − 0.9395`.
const DEFICIT: f64 = 0.0605;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantCheck {
    pub name: String,
    pub value: f64,
    pub pass: bool,
    pub rule: String,
}

impl Theorem42Constants {
    pub fn compute() -> Result<Self> {
        // x tan x = 1 rewritten as x sin x − cos x = 0 to stay off the pole
        let x_star = bisect(|x| x * x.sin() - x.cos(), 0.5, 1.5, 1e-14)?;
        let r = 2.0 * x_star;
        let cos_half = x_star.cos();
        let beta_min = r / TAU;
        let p_case2_bound = SQRT_2 * DEFICIT;
        let final_bound_coeff = 0.2738 * (0.0856 * 0.6522 - 0.6522 * 0.6522 * 0.2738 + DEFICIT);
        let final_bound_coeff_full =
            beta_min * (p_case2_bound * cos_half - cos_half * cos_half * beta_min + DEFICIT);
        Ok(Self {
            x_star,
            r,
            cos_half,
            beta_min,
            p_case2_bound,
            final_bound_coeff,
            final_bound_coeff_full,
        })
    }

    pub fn checks(&self) -> Vec<ConstantCheck> {
        let near = |name: &str, value: f64, want: f64, tol: f64| ConstantCheck {
            name: name.into(),
            value,
            pass: (value - want).abs() <= tol,
            rule: format!("{want} ± {tol:e}"),
        };
        let below = |name: &str, value: f64, bound: f64, strict: bool| ConstantCheck {
            name: name.into(),
            value,
            pass: if strict {
                value < bound
            } else {
                value <= bound
            },
            rule: format!("{} {bound}", if strict { "<" } else { "<=" }),
        };
        vec![
            below(
                "tan_residual",
                (self.x_star.tan() - 1.0 / self.x_star).abs(),
                1e-10,
                true,
            ),
            near("x_star", self.x_star, 0.8603, 1e-4),
            near("r", self.r, 1.7206, 2e-4),
            near("cos_half", self.cos_half, 0.6522, 1e-4),
            near("beta_min", self.beta_min, 0.2738, 1e-4),
            near("arc_mass_rounded", 0.6522 * 0.2738, 0.1785, 1e-4),
            ConstantCheck {
                name: "arc_mass".into(),
                value: self.cos_half * self.beta_min,
                pass: self.cos_half * self.beta_min > 0.1785,
                rule: "> 0.1785".into(),
            },
            below("p_case2_bound", self.p_case2_bound, 0.0856, true),
            below("magnitude_gap", 0.0856 - 0.1785, 0.0, true),
            below("final_bound_coeff", self.final_bound_coeff, -0.00002, false),
            below(
                "final_bound_coeff_full",
                self.final_bound_coeff_full,
                0.0,
                true,
            ),
        ]
    }
}

/// Recomputes the constant chain and fails listing every check that misses.
pub fn theorem42_constants() -> Result<Theorem42Constants> {
    let c = Theorem42Constants::compute()?;
    let failed: Vec<String> = c
        .checks()
        .into_iter()
        .filter(|k| !k.pass)
        .map(|k| format!("{} = {} (want {})", k.name, k.value, k.rule))
        .collect();
    if failed.is_empty() {
        Ok(c)
    } else {
        Err(Error::CertificateFailure(failed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasinOptions {
    pub trials: usize,
    pub seed: u64,
    pub dt: f64,
    pub t_max: f64,
    /// A run is zero-converged when its circular phase spread falls below this.
    pub spread_tol: f64,
}

impl Default for BasinOptions {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            dt: 0.05,
            t_max: 200.0,
            spread_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinRecord {
    pub zero_fraction: f64,
    /// Distinct stable non-zero end states.
    pub attractors: Vec<FixedPoint>,
}

impl BasinRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("basin record serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinOutcome {
    pub record: BasinRecord,
    pub zero_hits: usize,
    /// Trial count per entry of `record.attractors`.
    pub attractor_hits: Vec<usize>,
    /// Runs whose polished end state was not a stable fixed point.
    pub unresolved: usize,
}

enum TrialEnd {
    Zero,
    Attractor(FixedPoint),
    Unresolved,
}

fn zero_state_of(fp: &FixedPoint) -> bool {
    states_equal(&fp.theta, &PhaseState::zeros(fp.theta.len()), DEDUP_TOL)
}

/// Integrates uniform random starts under `ω = 0, k = 1` and tallies where they end.
pub fn basin_sample(net: &Network, opts: BasinOptions) -> Result<BasinOutcome> {
    let n = net.n();
    let params = ModelParams::homogeneous(n);
    let steps = (opts.t_max / opts.dt).round() as usize;
    let ends: Vec<TrialEnd> = (0..opts.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<TrialEnd> {
            let end = integrate_rk4(&random_start(n, opts.seed, t), &params, net, opts.dt, steps)?;
            if end.max_pairwise_spread() < opts.spread_tol {
                return Ok(TrialEnd::Zero);
            }
            let Ok(fp) = solve_newton(net, &params, &end, 0, NewtonOptions::default()) else {
                return Ok(TrialEnd::Unresolved);
            };
            if zero_state_of(&fp) {
                return Ok(TrialEnd::Zero);
            }
            Ok(match analyze(&fp.theta, net)?.classification {
                Classification::Stable => TrialEnd::Attractor(fp),
                _ => TrialEnd::Unresolved,
            })
        })
        .collect::<Result<_>>()?;

    let mut attractors = Vec::new();
    let mut attractor_hits: Vec<usize> = Vec::new();
    let (mut zero_hits, mut unresolved) = (0, 0);
    for end in ends {
        match end {
            TrialEnd::Zero => zero_hits += 1,
            TrialEnd::Unresolved => unresolved += 1,
            TrialEnd::Attractor(fp) => {
                let idx = merge_into(&mut attractors, fp);
                if idx == attractor_hits.len() {
                    attractor_hits.push(0);
                }
                attractor_hits[idx] += 1;
            }
        }
    }
    Ok(BasinOutcome {
        record: BasinRecord {
            zero_fraction: if opts.trials == 0 {
                0.0
            } else {
                zero_hits as f64 / opts.trials as f64
            },
            attractors,
        },
        zero_hits,
        attractor_hits,
        unresolved,
    })
}

/// Stable fixed points other than the zero state among `trials` Newton runs.
pub fn search_nonzero_stable(net: &Network, trials: usize, seed: u64) -> Result<Vec<FixedPoint>> {
    let mut out = Vec::new();
    for fp in find_fixed_points(net, trials, seed, NewtonOptions::default().tol) {
        if zero_state_of(&fp) {
            continue;
        }
        if analyze(&fp.theta, net)?.classification == Classification::Stable {
            out.push(fp);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub m: usize,
    pub count: usize,
    pub states: Vec<FixedPoint>,
}

/// Phase state on `ring_tree(m)` with hub and bridges at zero and ring `r` carrying a
/// uniform twist `twists[r]`.
pub fn ring_tree_twist_state(twists: &[i64]) -> PhaseState {
    let mut theta = vec![0.0; 6 * twists.len() + 1];
    for (r, &q) in twists.iter().enumerate() {
        let ring = twisted_state(6, q);
        let base = Network::ring_tree_anchor(r);
        theta[base..base + 6].copy_from_slice(ring.theta());
    }
    PhaseState::new(theta)
}

/// Every combination of per-ring twists drawn from `{0, +1, −1}`.
pub fn ring_tree_twist_combinations(m: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                [0, 1, -1].into_iter().map(move |q| {
                    let mut next = prefix.clone();
                    next.push(q);
                    next
                })
            })
            .collect();
    }
    out
}

/// Distinct stable fixed points on `ring_tree(m)` from the directed twist
/// combinations plus `trials` random Newton starts.
pub fn multistable_census(m: usize, trials: usize, seed: u64) -> Result<Census> {
    let net = Network::ring_tree(m)?;
    let params = ModelParams::homogeneous(net.n());
    let mut states = Vec::new();
    let directed: Vec<FixedPoint> = ring_tree_twist_combinations(m)
        .into_iter()
        .filter_map(|tw| {
            solve_newton(
                &net,
                &params,
                &ring_tree_twist_state(&tw),
                0,
                NewtonOptions::default(),
            )
            .ok()
        })
        .collect();
    let random = find_fixed_points(&net, trials, seed, NewtonOptions::default().tol);
    for fp in directed.into_iter().chain(random) {
        if analyze(&fp.theta, &net)?.classification == Classification::Stable {
            merge_into(&mut states, fp);
        }
    }
    Ok(Census {
        m,
        count: states.len(),
        states,
    })
}
