//! Expansion in measure for finite actions and the bridge to reversible
//! Markov kernels: `σ_{Y,S}`, `ν̃_{Y,S}`, `Π_{Y,S}`, vertex and Markov
//! expansion constants, asymptotic profiles and local spectral gaps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::action::{self, FiniteAction};
use crate::error::{LabError, Result};
use crate::linalg;
use crate::markov::{self, MarkovKernel, SpectralReport};
use crate::subset::{self, ArgMin, Mask};
use crate::tol;

/// Normalized local Markov kernel of an action on a domain `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionKernel {
    action: FiniteAction,
    y: Vec<usize>,
    gens: Vec<usize>,
    sigma: Vec<f64>,
    tilde_nu: Vec<f64>,
    kernel: MarkovKernel,
}

impl ActionKernel {
    pub fn action(&self) -> &FiniteAction {
        &self.action
    }

    /// Atoms of `Y`, sorted; kernel row `i` is atom `y()[i]`.
    pub fn y(&self) -> &[usize] {
        &self.y
    }

    pub fn gens(&self) -> &[usize] {
        &self.gens
    }

    /// `σ_{Y,S}` indexed by position in `Y`.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// `ν̃_{Y,S} = σ·ν` indexed by position in `Y`.
    pub fn tilde_nu(&self) -> &[f64] {
        &self.tilde_nu
    }

    pub fn kernel(&self) -> &MarkovKernel {
        &self.kernel
    }

    /// `ν|_Y` indexed by position in `Y`.
    pub fn nu_y(&self) -> Vec<f64> {
        self.y.iter().map(|&x| self.action.space().weight(x)).collect()
    }

    pub fn theta(&self) -> f64 {
        action::theta_bound(&self.action, &self.y, &self.gens).expect("validated at construction")
    }

    pub fn spectrum(&self) -> Result<SpectralReport> {
        markov::lambda2(&self.kernel, &self.tilde_nu)
    }
}

fn domain(action: &FiniteAction, y: &[usize]) -> Result<Vec<usize>> {
    action.space().check_subset(y)?;
    let y = subset::normalized(y);
    if y.is_empty() {
        return Err(LabError::InvalidSubset("Y is empty".into()));
    }
    Ok(y)
}

/// Position of each atom inside `Y`, or `usize::MAX`.
fn positions(n: usize, y: &[usize]) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (i, &x) in y.iter().enumerate() {
        pos[x] = i;
    }
    pos
}

/// `Π_{Y,S}(x, {s·x}) = r(s,x)^{1/2}/σ_{Y,S}(x)` over `s ∈ S_{Y,x}`, with
/// weights of coinciding targets added.
pub fn build_action_kernel(action: &FiniteAction, y: &[usize], gens: &[usize]) -> Result<ActionKernel> {
    let y = domain(action, y)?;
    action.gens().check_subset(gens, true)?;
    let gens = subset::normalized(gens);
    let n = y.len();
    let nu = action.space().weights();
    let pos = positions(action.len(), &y);
    let mut t = DMatrix::zeros(n, n);
    let mut sigma = vec![0.0; n];
    for (i, &x) in y.iter().enumerate() {
        for &s in &gens {
            let target = action.apply(s, x);
            let j = pos[target];
            if j != usize::MAX {
                let w = (nu[target] / nu[x]).sqrt();
                t[(i, j)] += w;
                sigma[i] += w;
            }
        }
        for j in 0..n {
            t[(i, j)] /= sigma[i];
        }
    }
    let tilde_nu: Vec<f64> = (0..n).map(|i| sigma[i] * nu[y[i]]).collect();
    let space = action.space().restrict(&y)?;
    let kernel = MarkovKernel::new(space, t, Some(tilde_nu.clone()))?;
    Ok(ActionKernel { action: action.clone(), y, gens, sigma, tilde_nu, kernel })
}

fn check_cap(n: usize, cap: usize, hint: &'static str) -> Result<()> {
    let cap = cap.min(63);
    if n > cap {
        return Err(LabError::CapExceeded { atoms: n, cap, hint });
    }
    Ok(())
}

/// Minimum of `ν(N(A))/ν(A)` over `A ⊆ Y` in each mass window, where
/// `N(A) = ⋃_{x∈A} N(x)` for per-position neighbourhoods `nbhd`.
///
/// Windows are `[lo, hi]`, compared with a relative slack of 1e-12 of
/// `ν(Y)`. Subsets are walked in Gray-code order with cover counts.
fn window_scan(weights: &[f64], nbhd: &[Vec<usize>], windows: &[(f64, f64)]) -> Vec<ArgMin> {
    let n = weights.len();
    let total: f64 = weights.iter().sum();
    let count: u64 = 1 << n;
    let parts = subset::chunked(count, |start, end| {
        let mut best = vec![ArgMin::new(); windows.len()];
        let mut mask: Mask = subset::gray(start);
        let mut cover = vec![0u32; n];
        let mut mass = 0.0;
        let mut covered = 0.0;
        for i in subset::members(mask) {
            mass += weights[i];
            for &j in &nbhd[i] {
                if cover[j] == 0 {
                    covered += weights[j];
                }
                cover[j] += 1;
            }
        }
        let mut i = start;
        loop {
            if mask != 0 {
                for (w, &(lo, hi)) in windows.iter().enumerate() {
                    if tol::le_rel(lo, mass, total) && tol::le_rel(mass, hi, total) {
                        best[w].offer(covered / mass, mask);
                    }
                }
            }
            i += 1;
            if i >= end {
                break;
            }
            let b = i.trailing_zeros() as usize;
            if mask & (1 << b) == 0 {
                mass += weights[b];
                for &j in &nbhd[b] {
                    if cover[j] == 0 {
                        covered += weights[j];
                    }
                    cover[j] += 1;
                }
            } else {
                mass -= weights[b];
                for &j in &nbhd[b] {
                    cover[j] -= 1;
                    if cover[j] == 0 {
                        covered -= weights[j];
                    }
                }
            }
            mask ^= 1 << b;
        }
        best
    });
    let mut out = vec![ArgMin::new(); windows.len()];
    for part in parts {
        for (o, p) in out.iter_mut().zip(part) {
            o.merge(p);
        }
    }
    out
}

/// `ν(N(A))/ν(A)` evaluated directly on one subset of positions.
fn ratio_of(weights: &[f64], nbhd: &[Vec<usize>], members: &[usize]) -> f64 {
    let mut covered = vec![false; weights.len()];
    for &i in members {
        for &j in &nbhd[i] {
            covered[j] = true;
        }
    }
    let num: f64 = (0..weights.len()).filter(|&j| covered[j]).map(|j| weights[j]).sum();
    let den: f64 = members.iter().map(|&i| weights[i]).sum();
    num / den
}

/// One-step neighbourhoods `(S·x) ∩ Y` as positions in `Y`.
fn step_neighbourhoods(action: &FiniteAction, y: &[usize], gens: &[usize]) -> Vec<Vec<usize>> {
    let pos = positions(action.len(), y);
    y.iter()
        .map(|&x| {
            let v: Vec<usize> = gens.iter().map(|&s| pos[action.apply(s, x)]).filter(|&j| j != usize::MAX).collect();
            subset::normalized(&v)
        })
        .collect()
}

/// Ball neighbourhoods `(B_k·x) ∩ Y` as positions in `Y`.
fn ball_neighbourhoods(dist: &[Vec<Option<u64>>], y: &[usize], k: u64) -> Vec<Vec<usize>> {
    y.iter()
        .map(|&x| (0..y.len()).filter(|&j| dist[x][y[j]].is_some_and(|d| d <= k)).collect())
        .collect()
}

/// Vertex expansion constant of `Y` and a subset attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexExpansion {
    /// `+inf` when no subset has `0 < ν(A) ≤ ν(Y)/2`.
    pub c: f64,
    pub argmin: Vec<usize>,
}

pub fn vertex_expansion_constant(action: &FiniteAction, y: &[usize], gens: &[usize]) -> Result<VertexExpansion> {
    vertex_expansion_constant_with_cap(action, y, gens, tol::ENUMERATION_CAP)
}

/// `c = min ν((S·A) ∩ Y)/ν(A) − 1` over `A ⊆ Y` with `0 < ν(A) ≤ ν(Y)/2`.
pub fn vertex_expansion_constant_with_cap(
    action: &FiniteAction,
    y: &[usize],
    gens: &[usize],
    cap: usize,
) -> Result<VertexExpansion> {
    let y = domain(action, y)?;
    action.gens().check_subset(gens, false)?;
    check_cap(y.len(), cap, "vertex expansion enumerates every subset of Y")?;
    let weights: Vec<f64> = y.iter().map(|&x| action.space().weight(x)).collect();
    let total: f64 = weights.iter().sum();
    let nbhd = step_neighbourhoods(action, &y, gens);
    let best = window_scan(&weights, &nbhd, &[(0.0, total / 2.0)])[0];
    if !best.found {
        return Ok(VertexExpansion { c: f64::INFINITY, argmin: vec![] });
    }
    let members = subset::members(best.mask);
    let c = ratio_of(&weights, &nbhd, &members) - 1.0;
    Ok(VertexExpansion { c, argmin: subset::members_in(best.mask, &y) })
}

/// Cheeger constant of `Π_{Y,S}` with respect to `ν̃`.
pub fn markov_expansion_constant(ak: &ActionKernel) -> Result<markov::CheegerResult> {
    markov_expansion_constant_with_cap(ak, tol::ENUMERATION_CAP)
}

pub fn markov_expansion_constant_with_cap(ak: &ActionKernel, cap: usize) -> Result<markov::CheegerResult> {
    let mut r = markov::cheeger_exact_with_cap(&ak.kernel, &ak.tilde_nu, cap)?;
    r.subset = r.subset.iter().map(|&i| ak.y[i]).collect();
    Ok(r)
}

/// Edge/vertex comparison and measure comparison over every `A ⊆ Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeVertexReport {
    pub theta: f64,
    /// `(1/√Θ)|∂A| ≤ Σ_s ν((s·A∖A) ∩ Y) ≤ √Θ|∂A|` for every `A`.
    pub per_subset_bounds_hold: bool,
    /// `ν(A) ≤ ν̃(A) ≤ |S|√Θ ν(A)` for every `A`.
    pub measure_bounds_hold: bool,
    /// `ν̃(A) ≤ |S|√(ν(A)ν(Y))` for every `A`.
    pub sqrt_measure_bounds_hold: bool,
    /// Smallest `Σ_s ν(...) / |∂A|` over subsets with nonzero boundary.
    pub min_ratio: f64,
    /// Largest `Σ_s ν(...) / |∂A|` over subsets with nonzero boundary.
    pub max_ratio: f64,
    /// Most negative slack across all inequalities (0 when none is tight).
    pub worst_slack: f64,
    pub worst_subset: Vec<usize>,
}

impl EdgeVertexReport {
    pub fn holds(&self) -> bool {
        self.per_subset_bounds_hold && self.measure_bounds_hold && self.sqrt_measure_bounds_hold
    }
}

pub fn edge_vertex_comparison(ak: &ActionKernel) -> Result<EdgeVertexReport> {
    edge_vertex_comparison_with_cap(ak, tol::ENUMERATION_CAP)
}

pub fn edge_vertex_comparison_with_cap(ak: &ActionKernel, cap: usize) -> Result<EdgeVertexReport> {
    let n = ak.y.len();
    check_cap(n, cap, "edge/vertex comparison enumerates every subset of Y")?;
    let theta = ak.theta();
    let root = theta.sqrt();
    let nu = ak.nu_y();
    let nu_total: f64 = nu.iter().sum();
    let s_count = ak.gens.len() as f64;
    let pos = positions(ak.action.len(), &ak.y);
    // (position of s·x in Y or MAX) for each position and generator
    let moves: Vec<Vec<usize>> = ak
        .y
        .iter()
        .map(|&x| ak.gens.iter().map(|&s| pos[ak.action.apply(s, x)]).collect())
        .collect();
    let t = ak.kernel.transition();
    let tn = &ak.tilde_nu;
    const EPS: f64 = 1e-10;

    #[derive(Clone, Copy)]
    struct Acc {
        lo: f64,
        hi: f64,
        slack: f64,
        mask: Mask,
        edge_ok: bool,
        meas_ok: bool,
        sqrt_ok: bool,
    }
    let parts = subset::chunked(1u64 << n, |start, end| {
        let mut acc = Acc { lo: f64::INFINITY, hi: 0.0, slack: 0.0, mask: 0, edge_ok: true, meas_ok: true, sqrt_ok: true };
        for mask in start..end {
            let inside = |j: usize| j != usize::MAX && mask & (1 << j) != 0;
            let mut boundary = 0.0;
            let mut vertex = 0.0;
            let mut mass = 0.0;
            let mut tmass = 0.0;
            let mut m = mask;
            while m != 0 {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                mass += nu[i];
                tmass += tn[i];
                for j in 0..n {
                    if !inside(j) {
                        boundary += tn[i] * t[(i, j)];
                    }
                }
                for &j in &moves[i] {
                    if j != usize::MAX && !inside(j) {
                        vertex += nu[j];
                    }
                }
            }
            let mut note = |slack: f64, ok: &mut bool| {
                if slack < -EPS {
                    *ok = false;
                }
                if slack < acc.slack {
                    acc.slack = slack;
                    acc.mask = mask;
                }
            };
            let (mut e, mut me, mut sq) = (acc.edge_ok, acc.meas_ok, acc.sqrt_ok);
            note(vertex - boundary / root, &mut e);
            note(root * boundary - vertex, &mut e);
            note(tmass - mass, &mut me);
            note(s_count * root * mass - tmass, &mut me);
            note(s_count * (mass * nu_total).sqrt() - tmass, &mut sq);
            acc.edge_ok = e;
            acc.meas_ok = me;
            acc.sqrt_ok = sq;
            if boundary > 0.0 {
                let r = vertex / boundary;
                acc.lo = acc.lo.min(r);
                acc.hi = acc.hi.max(r);
            }
        }
        acc
    });
    let mut total = Acc { lo: f64::INFINITY, hi: 0.0, slack: 0.0, mask: 0, edge_ok: true, meas_ok: true, sqrt_ok: true };
    for p in parts {
        total.lo = total.lo.min(p.lo);
        total.hi = total.hi.max(p.hi);
        total.edge_ok &= p.edge_ok;
        total.meas_ok &= p.meas_ok;
        total.sqrt_ok &= p.sqrt_ok;
        if p.slack < total.slack {
            total.slack = p.slack;
            total.mask = p.mask;
        }
    }
    Ok(EdgeVertexReport {
        theta,
        per_subset_bounds_hold: total.edge_ok,
        measure_bounds_hold: total.meas_ok,
        sqrt_measure_bounds_hold: total.sqrt_ok,
        min_ratio: total.lo,
        max_ratio: total.hi,
        worst_slack: total.slack,
        worst_subset: subset::members_in(total.mask, &ak.y),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionStatus {
    Expanding,
    /// No radius up to `k_max` makes every subset in the window grow.
    NotExpanding,
    /// No subset of `Y` has mass in the window.
    Vacuous,
}

/// Result of the window scan at one value of `α` (or `β`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub alpha: f64,
    /// Smallest radius with strict growth of every subset in the window.
    pub k: Option<u64>,
    /// `min ν((B_k·A) ∩ Y)/ν(A) − 1` at that radius.
    pub c: Option<f64>,
    /// Smallest ratio minus 1 at the last radius scanned.
    pub c_at_last_k: Option<f64>,
    /// Minimizing subset at the reported (or last) radius.
    pub witness: Vec<usize>,
    pub status: ExpansionStatus,
}

/// Asymptotic-expansion data on a grid of mass thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionProfile {
    pub k_max: u64,
    /// Windows `α ν(Y) ≤ ν(A) ≤ ν(Y)/2`.
    pub records: Vec<ProfileRecord>,
    /// Windows `ν(Y)/2 ≤ ν(A) ≤ β ν(Y)`.
    pub upper_range: Vec<ProfileRecord>,
}

impl ExpansionProfile {
    pub fn alphas(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.alpha).collect()
    }

    pub fn expanding_everywhere(&self) -> bool {
        self.records.iter().all(|r| r.status != ExpansionStatus::NotExpanding)
    }
}

pub const DEFAULT_ALPHAS: [f64; 6] = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5];
pub const DEFAULT_BETAS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_K_MAX: u64 = 6;

/// Ratios must exceed 1 by this relative margin to count as growth.
const STRICT: f64 = 1e-12;

pub fn asymptotic_profile(action: &FiniteAction, y: &[usize], alphas: &[f64], k_max: u64) -> Result<ExpansionProfile> {
    asymptotic_profile_full(action, y, alphas, &DEFAULT_BETAS, k_max, tol::ENUMERATION_CAP)
}

/// Scans radii `k = 1..=k_max` of word-length balls.
pub fn asymptotic_profile_full(
    action: &FiniteAction,
    y: &[usize],
    alphas: &[f64],
    betas: &[f64],
    k_max: u64,
    cap: usize,
) -> Result<ExpansionProfile> {
    let y = domain(action, y)?;
    check_grid(alphas, betas)?;
    check_cap(y.len(), cap, "asymptotic profiles enumerate every subset of Y")?;
    let dist = action::orbit_distance_matrix(action);
    let radii: Vec<(u64, Vec<Vec<usize>>)> = (1..=k_max).map(|k| (k, ball_neighbourhoods(&dist, &y, k))).collect();
    Ok(profile_over(action, &y, alphas, betas, k_max, &radii))
}

/// Same scan with `S·A` in place of `B_k·A` (a single radius).
pub fn s_asymptotic_profile(action: &FiniteAction, y: &[usize], gens: &[usize], alphas: &[f64]) -> Result<ExpansionProfile> {
    let y = domain(action, y)?;
    action.gens().check_subset(gens, false)?;
    check_grid(alphas, &DEFAULT_BETAS)?;
    check_cap(y.len(), tol::ENUMERATION_CAP, "asymptotic profiles enumerate every subset of Y")?;
    let radii = vec![(1, step_neighbourhoods(action, &y, gens))];
    Ok(profile_over(action, &y, alphas, &DEFAULT_BETAS, 1, &radii))
}

fn check_grid(alphas: &[f64], betas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(LabError::Empty("alpha grid"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a <= 0.5)) {
        return Err(LabError::InvalidParameter(format!("alpha {a} outside (0, 1/2]")));
    }
    if let Some(b) = betas.iter().find(|b| !(**b >= 0.5 && **b < 1.0)) {
        return Err(LabError::InvalidParameter(format!("beta {b} outside [1/2, 1)")));
    }
    Ok(())
}

fn profile_over(
    action: &FiniteAction,
    y: &[usize],
    alphas: &[f64],
    betas: &[f64],
    k_max: u64,
    radii: &[(u64, Vec<Vec<usize>>)],
) -> ExpansionProfile {
    let weights: Vec<f64> = y.iter().map(|&x| action.space().weight(x)).collect();
    let total: f64 = weights.iter().sum();
    let mut windows: Vec<(f64, f64)> = alphas.iter().map(|a| (a * total, total / 2.0)).collect();
    windows.extend(betas.iter().map(|b| (total / 2.0, b * total)));
    let labels: Vec<f64> = alphas.iter().chain(betas).copied().collect();

    let mut records: Vec<Option<ProfileRecord>> = vec![None; windows.len()];
    let mut last: Vec<Option<(f64, Vec<usize>)>> = vec![None; windows.len()];
    for (k, nbhd) in radii {
        let pending: Vec<usize> = (0..windows.len()).filter(|&w| records[w].is_none()).collect();
        if pending.is_empty() {
            break;
        }
        let sub: Vec<(f64, f64)> = pending.iter().map(|&w| windows[w]).collect();
        let found = window_scan(&weights, nbhd, &sub);
        for (&w, best) in pending.iter().zip(found) {
            if !best.found {
                records[w] = Some(ProfileRecord {
                    alpha: labels[w],
                    k: None,
                    c: None,
                    c_at_last_k: None,
                    witness: vec![],
                    status: ExpansionStatus::Vacuous,
                });
                continue;
            }
            let ratio = ratio_of(&weights, nbhd, &subset::members(best.mask));
            let witness = subset::members_in(best.mask, y);
            if ratio > 1.0 + STRICT {
                records[w] = Some(ProfileRecord {
                    alpha: labels[w],
                    k: Some(*k),
                    c: Some(ratio - 1.0),
                    c_at_last_k: Some(ratio - 1.0),
                    witness,
                    status: ExpansionStatus::Expanding,
                });
            } else {
                last[w] = Some((ratio - 1.0, witness));
            }
        }
    }
    let mut out: Vec<ProfileRecord> = records
        .into_iter()
        .enumerate()
        .map(|(w, r)| {
            r.unwrap_or_else(|| {
                let (c, witness) = last[w].clone().unwrap_or((0.0, vec![]));
                ProfileRecord {
                    alpha: labels[w],
                    k: None,
                    c: None,
                    c_at_last_k: Some(c),
                    witness,
                    status: ExpansionStatus::NotExpanding,
                }
            })
        })
        .collect();
    let upper_range = out.split_off(alphas.len());
    ExpansionProfile { k_max, records: out, upper_range }
}

/// Recomputes `ν((B_k·A) ∩ Y)/ν(A)` for one subset.
pub fn ball_growth_ratio(action: &FiniteAction, y: &[usize], a: &[usize], k: u64) -> Result<f64> {
    let y = domain(action, y)?;
    let image = action::ball_image(action, a, k)?;
    let pos = positions(action.len(), &y);
    let num: f64 = image.iter().filter(|&&x| pos[x] != usize::MAX).map(|&x| action.space().weight(x)).sum();
    Ok(num / action.space().mass_of(a))
}

/// Quadratic local spectral gap and the derived κ bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalGapReport {
    /// `min Σ_s ‖s·f − f‖²_{ν|Y}` over `f` with `∫_Y f dν = 0`,
    /// `‖f‖_{ν|Y} = 1`; `+inf` when `Y` is a single atom.
    pub lambda_q: f64,
    pub has_gap: bool,
    /// `[1/√(|S|λ_Q), 1/√λ_Q]`, containing the optimal κ.
    pub kappa_interval: [f64; 2],
    /// `1/√(2(1−λ₂))` for `λ₂` of `Π_{Y,S}`.
    pub kappa_from_markov: f64,
    pub theta: f64,
    /// `√(√Θ / (2(1−λ₂)))`, an upper bound on κ for any Θ.
    pub kappa_from_markov_theta: f64,
    /// `λ_Q ≥ 2(1−λ₂)/√Θ − 1e-9`.
    pub markov_bound_holds: bool,
    pub lambda2: f64,
}

pub fn local_spectral_gap(action: &FiniteAction, y: &[usize], gens: &[usize]) -> Result<LocalGapReport> {
    let ak = build_action_kernel(action, y, gens)?;
    let theta = ak.theta();
    let spectrum = ak.spectrum()?;
    let lambda_q = quadratic_gap(action, &ak.y, &ak.gens);
    let s_count = ak.gens.len() as f64;
    let gap = spectrum.spectral_gap;
    let has_gap = lambda_q > tol::EIGEN;
    let kappa_interval = if lambda_q.is_infinite() {
        [0.0, 0.0]
    } else if has_gap {
        [1.0 / (s_count * lambda_q).sqrt(), 1.0 / lambda_q.sqrt()]
    } else {
        [f64::INFINITY, f64::INFINITY]
    };
    let markov_bound_holds = lambda_q.is_infinite() || lambda_q >= 2.0 * gap / theta.sqrt() - tol::EIGEN;
    Ok(LocalGapReport {
        lambda_q,
        has_gap,
        kappa_interval,
        kappa_from_markov: 1.0 / (2.0 * gap).sqrt(),
        theta,
        kappa_from_markov_theta: (theta.sqrt() / (2.0 * gap)).sqrt(),
        markov_bound_holds,
        lambda2: spectrum.lambda2,
    })
}

/// Smallest value of the form `Q` on the ν-mean-zero unit sphere of `Y`,
/// after minimizing out the free values on `(S·Y) ∖ Y`.
fn quadratic_gap(action: &FiniteAction, y: &[usize], gens: &[usize]) -> f64 {
    let ny = y.len();
    if ny == 1 {
        return f64::INFINITY;
    }
    let nu = action.space().weights();
    let mut index = positions(action.len(), y);
    let mut outside: Vec<usize> = Vec::new();
    for &x in y {
        for &s in gens {
            let z = action.apply(action.gens().inverse(s), x);
            if index[z] == usize::MAX {
                index[z] = ny + outside.len();
                outside.push(z);
            }
        }
    }
    let dim = ny + outside.len();
    // Q(f) = Σ_s Σ_{x∈Y} |f(s⁻¹x) − f(x)|² ν(x)
    let mut l = DMatrix::<f64>::zeros(dim, dim);
    for &x in y {
        for &s in gens {
            let z = action.apply(action.gens().inverse(s), x);
            let (i, j) = (index[x], index[z]);
            if i == j {
                continue;
            }
            let w = nu[x];
            l[(i, i)] += w;
            l[(j, j)] += w;
            l[(i, j)] -= w;
            l[(j, i)] -= w;
        }
    }
    // Outside atoms only pair with atoms of Y, so the outside block is
    // diagonal and strictly positive.
    let mut k = l.view((0, 0), (ny, ny)).into_owned();
    for w in ny..dim {
        let d = l[(w, w)];
        for i in 0..ny {
            for j in 0..ny {
                k[(i, j)] -= l[(i, w)] * l[(w, j)] / d;
            }
        }
    }
    // g = √ν f turns the constraint into g ⊥ √ν on the Euclidean sphere.
    let root: Vec<f64> = y.iter().map(|&x| nu[x].sqrt()).collect();
    let m = DMatrix::from_fn(ny, ny, |i, j| k[(i, j)] / (root[i] * root[j]));
    let u = DVector::from_column_slice(&root).normalize();
    let p = DMatrix::identity(ny, ny) - &u * u.transpose();
    let shift = m.trace().abs() + 1.0;
    let shifted = &p * &m * &p + linalg::outer(&u) * shift;
    let (values, _) = linalg::sym_eigen_desc(&shifted);
    values.last().copied().unwrap_or(f64::INFINITY).max(0.0)
}
