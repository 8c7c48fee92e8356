//! Linear stability of fixed points and cut certificates of instability.
//!
//! At a fixed point the linearisation (with `k` factored out) is
//!
//! ```text
//! M_ij = A_ij cos(θ_j − θ_i) − δ_ij Σ_k A_ik cos(θ_k − θ_i)
//! ```
//!
//! which is symmetric with zero row sums. For a node set `S` with indicator `1_S`,
//! `−1_Sᵀ M 1_S` equals the sum of `cos(θ_j − θ_i)` over edges crossing `(S, Sᶜ)`, so a
//! negative cut sum exhibits a direction in which `M` is positive: the fixed point is
//! unstable. The converse does not hold; a missing certificate proves nothing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_len, complex_order, wrap_angle, PhaseState};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::linalg::{max_asymmetry, symmetric_eigenvalues};

/// Largest network the exhaustive cut scan accepts (`2^21 − 1` subsets).
pub const EXHAUSTIVE_MAX_NODES: usize = 22;

/// The linearisation matrix `M` at a phase state.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix(DMatrix<f64>);

impl JacobianMatrix {
    /// Wraps an arbitrary square matrix; [`eigen_symmetric`] checks symmetry.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.0.row_iter().map(|r| r.sum()).collect()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    /// `zᵀ M z`.
    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += z[i] * self.0[(i, j)] * z[j];
            }
        }
        acc
    }

    /// Eigenvalues within this distance of zero count as zero modes:
    /// `1e−8 · n · max(1, max|M_ij|)`.
    pub fn zero_mode_tolerance(&self) -> f64 {
        1e-8 * self.n() as f64 * self.max_abs().max(1.0)
    }
}

/// Builds `M` at `theta` (with `k = 1`).
pub fn build_jacobian(theta: &PhaseState, net: &Network) -> Result<JacobianMatrix> {
    check_len(net.n(), theta.len())?;
    let th = theta.theta();
    let mut m = DMatrix::zeros(net.n(), net.n());
    for &(i, j) in net.edges() {
        let c = (th[j] - th[i]).cos();
        m[(i, j)] += c;
        m[(j, i)] += c;
        m[(i, i)] -= c;
        m[(j, j)] -= c;
    }
    Ok(JacobianMatrix(m))
}

/// Full spectrum of `M`, sorted descending.
pub fn eigen_symmetric(m: &JacobianMatrix) -> Result<Vec<f64>> {
    let asymmetry = max_asymmetry(&m.0);
    if asymmetry > 1e-12 {
        return Err(Error::Asymmetric { asymmetry });
    }
    Ok(symmetric_eigenvalues(&m.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Stable,
    Unstable,
    /// No positive eigenvalue, but more than the single rotational zero mode; the
    /// linear test is inconclusive.
    Degenerate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Stable => "stable",
            Classification::Unstable => "unstable",
            Classification::Degenerate => "degenerate",
        })
    }
}

/// Classifies a descending spectrum. Returns the class and the zero-mode count.
pub fn classify(eigs: &[f64], tol: f64) -> (Classification, usize) {
    let zero_modes = eigs.iter().filter(|l| l.abs() <= tol).count();
    let class = match eigs.first() {
        Some(&top) if top > tol => Classification::Unstable,
        _ if zero_modes == 1 => Classification::Stable,
        _ => Classification::Degenerate,
    };
    (class, zero_modes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eigenvalues: Vec<f64>,
    pub zero_modes: usize,
    #[serde(rename = "class")]
    pub classification: Classification,
}

impl StabilityReport {
    /// Second-largest eigenvalue, or the largest when `n = 1`.
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues
            .get(1)
            .or_else(|| self.eigenvalues.first())
            .copied()
            .unwrap_or(0.0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Builds `M`, decomposes it and classifies with the size-scaled zero-mode tolerance.
pub fn analyze(theta: &PhaseState, net: &Network) -> Result<StabilityReport> {
    let m = build_jacobian(theta, net)?;
    let eigenvalues = eigen_symmetric(&m)?;
    let (classification, zero_modes) = classify(&eigenvalues, m.zero_mode_tolerance());
    Ok(StabilityReport {
        eigenvalues,
        zero_modes,
        classification,
    })
}

/// A node set whose cut sum is negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutCertificate {
    pub subset: Vec<usize>,
    pub value: f64,
}

impl CutCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))
    }
}

/// Cut values below `−1e−9 · n` certify instability.
pub fn cut_tolerance(n: usize) -> f64 {
    1e-9 * n as f64
}

fn subset_mask(n: usize, subset: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &i in subset {
        if i >= n {
            return Err(Error::InvalidSubset(format!("node {i} out of range")));
        }
        if std::mem::replace(&mut mask[i], true) {
            return Err(Error::InvalidSubset(format!("node {i} listed twice")));
        }
    }
    if subset.is_empty() || subset.len() == n {
        return Err(Error::InvalidSubset(
            "subset must be non-empty and proper".into(),
        ));
    }
    Ok(mask)
}

fn cut_sum_mask(theta: &[f64], net: &Network, mask: &[bool]) -> f64 {
    net.edges()
        .iter()
        .filter(|&&(i, j)| mask[i] != mask[j])
        .map(|&(i, j)| (theta[j] - theta[i]).cos())
        .sum()
}

/// `Σ cos(θ_j − θ_i)` over edges with exactly one endpoint in `subset`.
pub fn cut_sum(theta: &PhaseState, net: &Network, subset: &[usize]) -> Result<f64> {
    check_len(net.n(), theta.len())?;
    let mask = subset_mask(net.n(), subset)?;
    Ok(cut_sum_mask(theta.theta(), net, &mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSearch {
    /// Every subset up to complementation. Limited to [`EXHAUSTIVE_MAX_NODES`].
    Exhaustive,
    /// Local search from structured seeds. Finding nothing is not evidence of
    /// stability.
    Greedy,
}

impl std::str::FromStr for CutSearch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(CutSearch::Exhaustive),
            "greedy" => Ok(CutSearch::Greedy),
            other => Err(Error::InvalidParameter(format!(
                "unknown cut search {other:?}"
            ))),
        }
    }
}

/// Looks for a node subset with cut sum below `−cut_tolerance(n)`.
pub fn find_negative_cut(
    theta: &PhaseState,
    net: &Network,
    mode: CutSearch,
) -> Result<Option<CutCertificate>> {
    check_len(net.n(), theta.len())?;
    let best = match mode {
        CutSearch::Exhaustive => exhaustive_min_cut(theta.theta(), net)?,
        CutSearch::Greedy => greedy_min_cut(theta.theta(), net),
    };
    let tol = cut_tolerance(net.n());
    Ok(best.filter(|c| c.value < -tol))
}

fn mask_to_subset(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &m)| m.then_some(i))
        .collect()
}

/// Minimum cut over all subsets not containing the last node, ties broken by the
/// lexicographically smallest subset.
fn exhaustive_min_cut(theta: &[f64], net: &Network) -> Result<Option<CutCertificate>> {
    let n = net.n();
    if n > EXHAUSTIVE_MAX_NODES {
        return Err(Error::SizeCap {
            n,
            max: EXHAUSTIVE_MAX_NODES,
        });
    }
    if n < 2 {
        return Ok(None);
    }
    // Gray-code walk over nodes 0..n-1: each step flips one node and updates the cut
    // value through its incident edges only.
    let free = n - 1;
    let mut mask = vec![false; n];
    let mut value = 0.0;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let weight = |u: usize, v: usize| (theta[v] - theta[u]).cos();
    for step in 1u64..(1u64 << free) {
        let v = step.trailing_zeros() as usize;
        let entering = !mask[v];
        for &u in net.neighbors(v) {
            let w = weight(v, u);
            // edge (v, u) crosses after the flip iff mask[u] != new mask[v]
            if mask[u] == entering {
                value -= w;
            } else {
                value += w;
            }
        }
        mask[v] = entering;
        let improves = match &best {
            None => true,
            Some((b, _)) => value < *b - 1e-12,
        };
        let ties = best
            .as_ref()
            .is_some_and(|(b, _)| (value - b).abs() <= 1e-12);
        if improves || ties {
            let subset = mask_to_subset(&mask);
            let exact = cut_sum_mask(theta, net, &mask);
            match &mut best {
                Some((b, s)) if !improves => {
                    if subset < *s {
                        *b = exact;
                        *s = subset;
                    }
                }
                _ => best = Some((exact, subset)),
            }
        }
    }
    Ok(best.map(|(value, subset)| CutCertificate { subset, value }))
}

/// Seeds for the greedy search: singletons, edge endpoints, and every semicircle of
/// the phase circle.
pub fn greedy_seeds(theta: &[f64], net: &Network) -> Vec<Vec<bool>> {
    let n = net.n();
    let mut seeds = Vec::new();
    for i in 0..n {
        let mut m = vec![false; n];
        m[i] = true;
        seeds.push(m);
    }
    for &(i, j) in net.edges() {
        let mut m = vec![false; n];
        m[i] = true;
        m[j] = true;
        seeds.push(m);
    }
    for s in semicircle_subsets(&PhaseState::new(theta.to_vec())) {
        let mut m = vec![false; n];
        s.iter().for_each(|&i| m[i] = true);
        seeds.push(m);
    }
    seeds.retain(|m| {
        let k = m.iter().filter(|&&b| b).count();
        k > 0 && k < n
    });
    seeds
}

/// Node sets lying in a half-open semicircle `[φ, φ + π)` of the phase circle, for
/// `φ` at every node phase and, when the order parameter is non-zero, the half-plane
/// centred on its direction. Sorted and deduplicated.
pub fn semicircle_subsets(theta: &PhaseState) -> Vec<Vec<usize>> {
    use std::f64::consts::{FRAC_PI_2, PI, TAU};
    let th = theta.theta();
    let n = th.len();
    let mut starts: Vec<f64> = th.to_vec();
    if let Ok(arg) = complex_order(theta).argument() {
        starts.push(arg - FRAC_PI_2);
    }
    let mut out: Vec<Vec<usize>> = starts
        .iter()
        .map(|&phi| {
            (0..n)
                .filter(|&i| {
                    let off = wrap_angle(th[i] - phi).rem_euclid(TAU);
                    // nodes exactly at the far boundary land on the closed side
                    !(PI - 1e-12..=TAU - 1e-12).contains(&off)
                })
                .collect::<Vec<usize>>()
        })
        .filter(|s| !s.is_empty() && s.len() < n)
        .collect();
    out.sort();
    out.dedup();
    out
}

fn greedy_min_cut(theta: &[f64], net: &Network) -> Option<CutCertificate> {
    let n = net.n();
    let mut best: Option<CutCertificate> = None;
    for mut mask in greedy_seeds(theta, net) {
        let mut size = mask.iter().filter(|&&b| b).count();
        let mut value = cut_sum_mask(theta, net, &mask);
        loop {
            // best single flip keeping the set non-empty and proper
            let mut step: Option<(usize, f64)> = None;
            for v in 0..n {
                let next = if mask[v] { size - 1 } else { size + 1 };
                if next == 0 || next == n {
                    continue;
                }
                let delta: f64 = net
                    .neighbors(v)
                    .iter()
                    .map(|&u| {
                        let w = (theta[u] - theta[v]).cos();
                        if mask[u] == mask[v] {
                            w
                        } else {
                            -w
                        }
                    })
                    .sum();
                if delta < -1e-12 && step.is_none_or(|(_, d)| delta < d) {
                    step = Some((v, delta));
                }
            }
            let Some((v, _)) = step else { break };
            mask[v] = !mask[v];
            size = if mask[v] { size + 1 } else { size - 1 };
            value = cut_sum_mask(theta, net, &mask);
        }
        let subset = mask_to_subset(&mask);
        let replace = match &best {
            None => true,
            Some(b) => {
                value < b.value - 1e-12 || ((value - b.value).abs() <= 1e-12 && subset < b.subset)
            }
        };
        if replace {
            best = Some(CutCertificate { subset, value });
        }
    }
    best
}

/// `θ_j − θ_i` wrapped, for each edge in the network's order.
pub fn edge_differences(theta: &PhaseState, net: &Network) -> Vec<f64> {
    let th = theta.theta();
    net.edges()
        .iter()
        .map(|&(i, j)| wrap_angle(th[j] - th[i]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixedpoint::twisted_state;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn spectrum(theta: &PhaseState, net: &Network) -> Vec<f64> {
        eigen_symmetric(&build_jacobian(theta, net).unwrap()).unwrap()
    }

    fn assert_spectrum(got: &[f64], want: &[f64]) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert_abs_diff_eq!(*g, *w, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_state_gives_negative_laplacian() {
        let net = Network::wsg(9, 4).unwrap();
        let m = build_jacobian(&PhaseState::zeros(9), &net).unwrap();
        let l = net.laplacian();
        for (i, row) in l.iter().enumerate() {
            for (j, lij) in row.iter().enumerate() {
                assert_eq!(m.matrix()[(i, j)], -lij);
            }
        }
    }

    #[test]
    fn k3_splay_matrix_and_spectrum() {
        let k3 = Network::complete(3).unwrap();
        let splay = twisted_state(3, 1);
        let m = build_jacobian(&splay, &k3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { -0.5 };
                assert_abs_diff_eq!(m.matrix()[(i, j)], want, epsilon = 1e-15);
            }
        }
        assert_spectrum(&spectrum(&splay, &k3), &[1.5, 1.5, 0.0]);
        assert_spectrum(&spectrum(&PhaseState::zeros(3), &k3), &[0.0, -3.0, -3.0]);
    }

    #[test]
    fn hexagon_twist_spectrum() {
        let hex = Network::wsg(6, 2).unwrap();
        let twist = twisted_state(6, 1);
        let m = build_jacobian(&twist, &hex).unwrap();
        let l = hex.laplacian();
        for (i, row) in l.iter().enumerate() {
            for (j, lij) in row.iter().enumerate() {
                assert_abs_diff_eq!(m.matrix()[(i, j)], -0.5 * lij, epsilon = 1e-15);
            }
        }
        // −½ (2 − 2cos(πm/3))
        assert_spectrum(
            &spectrum(&twist, &hex),
            &[0.0, -0.5, -0.5, -1.5, -1.5, -2.0],
        );
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = JacobianMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert!(matches!(eigen_symmetric(&m), Err(Error::Asymmetric { .. })));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify(&[0.0, -0.5, -0.5, -1.5, -1.5, -2.0], 1e-8),
            (Classification::Stable, 1)
        );
        assert_eq!(classify(&[1.5, 1.5, 0.0], 1e-8).0, Classification::Unstable);
        assert_eq!(
            classify(&[0.0, 0.0, -1.0], 1e-8),
            (Classification::Degenerate, 2)
        );
    }

    #[test]
    fn report_json_shape() {
        let hex = Network::wsg(6, 2).unwrap();
        let r = analyze(&twisted_state(6, 1), &hex).unwrap();
        assert_eq!(r.classification, Classification::Stable);
        let s = r.to_json();
        assert!(s.contains(r#""zero_modes":1"#) && s.contains(r#""class":"stable""#));
        assert_eq!(StabilityReport::from_json(&s).unwrap(), r);
    }

    #[test]
    fn cut_sum_examples() {
        let k3 = Network::complete(3).unwrap();
        assert_abs_diff_eq!(
            cut_sum(&twisted_state(3, 1), &k3, &[0]).unwrap(),
            -1.0,
            epsilon = 1e-12
        );

        let eight = Network::eight_node_example();
        let v = cut_sum(&twisted_state(8, 1), &eight, &[2, 3, 4, 5]).unwrap();
        assert_abs_diff_eq!(v, 2f64.sqrt() - 4.0, epsilon = 1e-12);

        let k6 = Network::complete(6).unwrap();
        for s in [vec![0], vec![1, 2], vec![0, 3, 5]] {
            let v = cut_sum(&PhaseState::zeros(6), &k6, &s).unwrap();
            assert_abs_diff_eq!(v, (s.len() * (6 - s.len())) as f64, epsilon = 1e-12);
        }
    }

    #[test]
    fn cut_sum_rejects_bad_subsets() {
        let k3 = Network::complete(3).unwrap();
        let z = PhaseState::zeros(3);
        for s in [vec![], vec![0, 1, 2], vec![0, 0], vec![3]] {
            assert!(
                matches!(cut_sum(&z, &k3, &s), Err(Error::InvalidSubset(_))),
                "{s:?}"
            );
        }
    }

    #[test]
    fn exhaustive_search_examples() {
        let k3 = Network::complete(3).unwrap();
        let cert = find_negative_cut(&twisted_state(3, 1), &k3, CutSearch::Exhaustive)
            .unwrap()
            .unwrap();
        assert_eq!(cert.subset, vec![0]);
        assert_abs_diff_eq!(cert.value, -1.0, epsilon = 1e-12);

        let k5 = Network::complete(5).unwrap();
        assert_eq!(
            find_negative_cut(&PhaseState::zeros(5), &k5, CutSearch::Exhaustive).unwrap(),
            None
        );
        let hex = Network::wsg(6, 2).unwrap();
        assert_eq!(
            find_negative_cut(&twisted_state(6, 1), &hex, CutSearch::Exhaustive).unwrap(),
            None
        );
    }

    #[test]
    fn exhaustive_matches_brute_force() {
        // independent enumeration by bitmask, recomputing every cut from scratch
        let net = Network::from_edges(
            7,
            [
                (0, 1),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (6, 0),
                (0, 3),
                (2, 5),
            ],
        )
        .unwrap();
        for seed in 0..20 {
            let theta = crate::fixedpoint::random_start(7, seed, 0);
            let mut brute = f64::INFINITY;
            for bits in 1u32..(1 << 7) - 1 {
                let s: Vec<usize> = (0..7).filter(|i| bits >> i & 1 == 1).collect();
                brute = brute.min(cut_sum(&theta, &net, &s).unwrap());
            }
            let got = exhaustive_min_cut(theta.theta(), &net).unwrap().unwrap();
            assert_abs_diff_eq!(got.value, brute, epsilon = 1e-12);
            assert_abs_diff_eq!(
                cut_sum(&theta, &net, &got.subset).unwrap(),
                got.value,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn exhaustive_size_cap() {
        let net = Network::wsg(23, 2).unwrap();
        assert_eq!(
            find_negative_cut(&PhaseState::zeros(23), &net, CutSearch::Exhaustive),
            Err(Error::SizeCap { n: 23, max: 22 })
        );
        assert!(
            find_negative_cut(&PhaseState::zeros(23), &net, CutSearch::Greedy)
                .unwrap()
                .is_none()
        );
        let single = Network::complete(1).unwrap();
        assert!(
            find_negative_cut(&PhaseState::zeros(1), &single, CutSearch::Exhaustive)
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn greedy_finds_known_counterexamples() {
        let k3 = Network::complete(3).unwrap();
        let cert = find_negative_cut(&twisted_state(3, 1), &k3, CutSearch::Greedy)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(cert.value, -1.0, epsilon = 1e-12);

        let eight = Network::eight_node_example();
        let theta = twisted_state(8, 1);
        assert!(semicircle_subsets(&theta).contains(&vec![2, 3, 4, 5]));
        let cert = find_negative_cut(&theta, &eight, CutSearch::Greedy)
            .unwrap()
            .unwrap();
        assert!(cert.value <= 2f64.sqrt() - 4.0 + 1e-12);
        let exact = find_negative_cut(&theta, &eight, CutSearch::Exhaustive)
            .unwrap()
            .unwrap();
        assert!(cert.value >= exact.value - 1e-12);
    }

    #[test]
    fn semicircle_uses_order_direction() {
        // two clusters at ±(π − 0.2) around π: p points at π
        let theta = PhaseState::new(vec![PI - 0.2, PI - 0.1, -PI + 0.1, 0.0]);
        let halves = semicircle_subsets(&theta);
        assert!(halves.iter().all(|s| !s.is_empty() && s.len() < 4));
        assert!(halves.contains(&vec![0, 1, 2]));
    }

    #[test]
    fn cut_search_parses() {
        assert_eq!("greedy".parse::<CutSearch>().unwrap(), CutSearch::Greedy);
        assert!("off".parse::<CutSearch>().is_err());
    }

    #[test]
    fn certificate_json() {
        let c = CutCertificate {
            subset: vec![0],
            value: -1.0,
        };
        assert_eq!(c.to_json(), r#"{"subset":[0],"value":-1.0}"#);
        assert_eq!(CutCertificate::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn edge_difference_remark_directions() {
        // all |Δ| < π/2 on a connected graph: stable
        let ring = Network::wsg(10, 2).unwrap();
        let twist = twisted_state(10, 2);
        assert!(edge_differences(&twist, &ring)
            .iter()
            .all(|d| d.abs() < PI / 2.0));
        assert_eq!(
            analyze(&twist, &ring).unwrap().classification,
            Classification::Stable
        );
        // all |Δ| > π/2: unstable
        let twist = twisted_state(10, 4);
        assert!(edge_differences(&twist, &ring)
            .iter()
            .all(|d| d.abs() > PI / 2.0));
        assert_eq!(
            analyze(&twist, &ring).unwrap().classification,
            Classification::Unstable
        );
    }
}
