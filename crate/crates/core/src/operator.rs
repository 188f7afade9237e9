//! Operators on `L²(X, ν)` in the orthonormal frame `e_x = 1_x/√ν(x)`:
//! averaging projections, cut norms, propagation, quasi-locality, Markov
//! power approximation, the two embeddings of `L²(Y, ν̃)`, ghost profiles
//! and the Poincaré obstruction.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{self, FiniteAction};
use crate::error::{LabError, Result};
use crate::expansion::ActionKernel;
use crate::linalg;
use crate::markov::{self, MarkovKernel};
use crate::space::FiniteMeasureSpace;
use crate::subset::{self, ArgMax, Mask};
use crate::tol;
use crate::warped::{SparseCone, WarpedLevel};

/// Real operator on `L²(X, ν)`, stored in the orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperator {
    space: FiniteMeasureSpace,
    matrix: DMatrix<f64>,
    note: String,
}

impl WeightedOperator {
    pub fn from_orthonormal(space: FiniteMeasureSpace, matrix: DMatrix<f64>, note: impl Into<String>) -> Result<Self> {
        let n = space.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: matrix.nrows().max(matrix.ncols()) });
        }
        Ok(Self { space, matrix, note: note.into() })
    }

    /// From the matrix acting on functions, `(Tf)(x) = Σ_y T(x,y) f(y)`;
    /// conjugated by `D^{1/2}` with `D = diag ν`.
    pub fn from_function_frame(space: FiniteMeasureSpace, t: &DMatrix<f64>, note: impl Into<String>) -> Result<Self> {
        let n = space.len();
        if t.nrows() != n || t.ncols() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: t.nrows().max(t.ncols()) });
        }
        let w = space.weights();
        let matrix = DMatrix::from_fn(n, n, |x, y| t[(x, y)] * (w[x] / w[y]).sqrt());
        Ok(Self { space, matrix, note: note.into() })
    }

    pub fn identity(space: FiniteMeasureSpace) -> Self {
        let n = space.len();
        Self { space, matrix: DMatrix::identity(n, n), note: "identity".into() }
    }

    /// `π(s)f = r(s⁻¹,·)^{1/2}·(f ∘ s⁻¹)`, a permutation matrix here.
    pub fn generator(action: &FiniteAction, s: usize) -> Self {
        let n = action.len();
        let mut matrix = DMatrix::zeros(n, n);
        for y in 0..n {
            matrix[(action.apply(s, y), y)] = 1.0;
        }
        Self { space: action.space().clone(), matrix, note: format!("pi({})", action.gens().symbol(s)) }
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn note(&self) -> &str {
        &self.note
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Matrix acting on functions: `D^{-1/2} T D^{1/2}`.
    pub fn function_frame(&self) -> DMatrix<f64> {
        let w = self.space.weights();
        let n = self.len();
        DMatrix::from_fn(n, n, |x, y| self.matrix[(x, y)] * (w[y] / w[x]).sqrt())
    }

    pub fn norm(&self) -> f64 {
        linalg::operator_norm(&self.matrix)
    }

    pub fn is_self_adjoint(&self) -> bool {
        linalg::asymmetry(&self.matrix) <= tol::ENTRY
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.space.check_len(other.len())?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix * &other.matrix, note: format!("{}*{}", self.note, other.note) })
    }

    pub fn minus(&self, other: &Self) -> Result<Self> {
        self.space.check_len(other.len())?;
        Ok(Self { space: self.space.clone(), matrix: &self.matrix - &other.matrix, note: format!("{}-{}", self.note, other.note) })
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { space: self.space.clone(), matrix: &self.matrix * c, note: format!("{c}*{}", self.note) }
    }

    /// Applies to a function (function frame in, function frame out).
    pub fn apply_function(&self, f: &[f64]) -> Result<Vec<f64>> {
        self.space.check_len(f.len())?;
        let w = self.space.weights();
        let u = DVector::from_iterator(f.len(), f.iter().zip(w).map(|(v, m)| v * m.sqrt()));
        let out = &self.matrix * u;
        Ok(out.iter().zip(w).map(|(v, m)| v / m.sqrt()).collect())
    }
}

/// `P = |ξ⟩⟨ξ|` for a unit vector `ξ` in the orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneProjection {
    space: FiniteMeasureSpace,
    xi: DVector<f64>,
}

impl RankOneProjection {
    pub fn new(space: FiniteMeasureSpace, xi: DVector<f64>) -> Result<Self> {
        space.check_len(xi.len())?;
        if (xi.norm() - 1.0).abs() > tol::ENTRY {
            return Err(LabError::InvalidParameter(format!("projection vector has norm {}", xi.norm())));
        }
        Ok(Self { space, xi })
    }

    pub fn xi(&self) -> &DVector<f64> {
        &self.xi
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn operator(&self) -> WeightedOperator {
        WeightedOperator { space: self.space.clone(), matrix: linalg::outer(&self.xi), note: "rank-one projection".into() }
    }

    /// `‖χ_A ξ‖`.
    pub fn mass_on(&self, a: &[usize]) -> f64 {
        a.iter().map(|&x| self.xi[x] * self.xi[x]).sum::<f64>().sqrt()
    }

    /// `‖P² − P‖` and `‖P − P*‖`.
    pub fn projection_defects(&self) -> (f64, f64) {
        let p = linalg::outer(&self.xi);
        (linalg::max_abs(&(&p * &p - &p)), linalg::asymmetry(&p))
    }
}

/// `P_Y f = (∫_Y f dν / ν(Y)) χ_Y`; `ξ = √ν|_Y / √ν(Y)`.
pub fn averaging_projection(space: &FiniteMeasureSpace, y: &[usize]) -> Result<RankOneProjection> {
    space.check_subset(y)?;
    let y = subset::normalized(y);
    let mass = space.mass_of(&y);
    if !(mass > 0.0) {
        return Err(LabError::InvalidSubset("Y is null".into()));
    }
    let mut xi = DVector::zeros(space.len());
    for &x in &y {
        xi[x] = (space.weight(x) / mass).sqrt();
    }
    RankOneProjection::new(space.clone(), xi)
}

/// `‖χ_A T χ_C‖`: largest singular value of the `A × C` block.
pub fn cut_norm(t: &WeightedOperator, a: &[usize], c: &[usize]) -> Result<f64> {
    t.space.check_subset(a)?;
    t.space.check_subset(c)?;
    Ok(linalg::operator_norm(&linalg::submatrix(&t.matrix, &subset::normalized(a), &subset::normalized(c))))
}

/// Largest orbit distance between coordinates coupled by an entry above
/// 1e-12; `None` when some entry couples two orbits.
pub fn rho_propagation(t: &WeightedOperator, action: &FiniteAction) -> Result<Option<u64>> {
    t.space.check_len(action.len())?;
    let dist = action::orbit_distance_matrix(action);
    let n = t.len();
    let mut worst = 0;
    for x in 0..n {
        for y in 0..n {
            if t.matrix[(x, y)].abs() > tol::ENTRY {
                match dist[x][y] {
                    Some(d) => worst = worst.max(d),
                    None => return Ok(None),
                }
            }
        }
    }
    Ok(Some(worst))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Every `A` enumerated; exact.
    Exact,
    /// Random subsets only; each value is a lower bound.
    Sampled,
}

/// `ε(r) = sup ‖χ_A T χ_C‖` over separated pairs, per radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuasiLocalityProfile {
    pub radii: Vec<f64>,
    pub eps: Vec<f64>,
    /// Worst pair `(A, C)` per radius; empty sets when no pair qualifies.
    pub witnesses: Vec<(Vec<usize>, Vec<usize>)>,
    pub mode: ProfileMode,
    pub samples: Option<usize>,
}

impl QuasiLocalityProfile {
    pub fn is_nonincreasing(&self) -> bool {
        self.eps.windows(2).all(|w| w[1] <= w[0] + tol::EIGEN)
    }

    /// Smallest radius with `ε ≤ threshold`.
    pub fn decay_radius(&self, threshold: f64) -> Option<f64> {
        self.radii.iter().zip(&self.eps).find(|(_, e)| **e <= threshold).map(|(r, _)| *r)
    }
}

/// How to score one `A` (as a mask) against its far set `C`.
enum Scorer<'a> {
    General(&'a DMatrix<f64>),
    RankOne(&'a DVector<f64>),
}

impl Scorer<'_> {
    fn score(&self, a: Mask, c: Mask) -> f64 {
        if a == 0 || c == 0 {
            return 0.0;
        }
        match self {
            Scorer::General(m) => linalg::operator_norm(&linalg::submatrix(m, &subset::members(a), &subset::members(c))),
            Scorer::RankOne(xi) => {
                let part = |mask: Mask| subset::members(mask).iter().map(|&x| xi[x] * xi[x]).sum::<f64>().sqrt();
                part(a) * part(c)
            }
        }
    }
}

/// For each radius, the mask of `X ∖ N(x)` is the complement of the union
/// of per-atom neighbourhood masks `near[r][x]`.
fn far_profile(n: usize, near: &[Vec<Mask>], scorer: &Scorer, masks: Option<&[Mask]>) -> Vec<ArgMax> {
    let full = subset::full_mask(n);
    let eval = |mask: Mask, best: &mut [ArgMax]| {
        for (r, nr) in near.iter().enumerate() {
            let mut reach: Mask = 0;
            let mut m = mask;
            while m != 0 {
                reach |= nr[m.trailing_zeros() as usize];
                m &= m - 1;
            }
            let c = full & !reach;
            if c != 0 {
                best[r].offer(scorer.score(mask, c), mask, c);
            }
        }
    };
    let parts: Vec<Vec<ArgMax>> = match masks {
        None => subset::chunked(1u64 << n, |start, end| {
            let mut best = vec![ArgMax::new(); near.len()];
            for mask in start.max(1)..end {
                eval(mask, &mut best);
            }
            best
        }),
        Some(list) => subset::chunked(list.len() as u64, |start, end| {
            let mut best = vec![ArgMax::new(); near.len()];
            for &mask in &list[start as usize..end as usize] {
                eval(mask, &mut best);
            }
            best
        }),
    };
    let mut out = vec![ArgMax::new(); near.len()];
    for part in parts {
        for (o, p) in out.iter_mut().zip(part) {
            o.offer(p.value, p.a, p.c);
        }
    }
    out
}

fn finish_profile(
    t: &DMatrix<f64>,
    radii: Vec<f64>,
    best: Vec<ArgMax>,
    mode: ProfileMode,
    samples: Option<usize>,
) -> QuasiLocalityProfile {
    let mut eps = Vec::with_capacity(best.len());
    let mut witnesses = Vec::with_capacity(best.len());
    for b in best {
        let (a, c) = (subset::members(b.a), subset::members(b.c));
        // re-evaluated on the witness so that the reported value reproduces
        eps.push(if a.is_empty() { 0.0 } else { linalg::operator_norm(&linalg::submatrix(t, &a, &c)) });
        witnesses.push((a, c));
    }
    QuasiLocalityProfile { radii, eps, witnesses, mode, samples }
}

fn ball_masks(action: &FiniteAction, ks: &[u64]) -> Vec<Vec<Mask>> {
    let dist = action::orbit_distance_matrix(action);
    ks.iter()
        .map(|&k| {
            (0..action.len())
                .map(|x| subset::mask_of(&(0..action.len()).filter(|&y| dist[x][y].is_some_and(|d| d <= k)).collect::<Vec<_>>()))
                .collect()
        })
        .collect()
}

/// Exact `ε(k) = max ‖χ_A T χ_C‖` over `(B_k·A) ∩ C = ∅`.
///
/// For fixed `A` the cut norm only grows with `C`, so `C = X ∖ B_k·A` is
/// optimal and only `A` is enumerated.
pub fn rho_quasi_locality_profile(t: &WeightedOperator, action: &FiniteAction, ks: &[u64]) -> Result<QuasiLocalityProfile> {
    rho_quasi_locality_profile_with_cap(t, action, ks, tol::QUASI_LOCAL_CAP)
}

pub fn rho_quasi_locality_profile_with_cap(
    t: &WeightedOperator,
    action: &FiniteAction,
    ks: &[u64],
    cap: usize,
) -> Result<QuasiLocalityProfile> {
    t.space.check_len(action.len())?;
    let n = t.len();
    if n > cap.min(63) {
        return Err(LabError::CapExceeded {
            atoms: n,
            cap: cap.min(63),
            hint: "use the rank-one fast path or the sampled profile",
        });
    }
    let best = far_profile(n, &ball_masks(action, ks), &Scorer::General(&t.matrix), None);
    Ok(finish_profile(&t.matrix, ks.iter().map(|&k| k as f64).collect(), best, ProfileMode::Exact, None))
}

/// Exact profile for a rank-one projection: `‖χ_A P χ_C‖ = ‖χ_A ξ‖·‖χ_C ξ‖`.
pub fn rho_quasi_locality_rank_one(p: &RankOneProjection, action: &FiniteAction, ks: &[u64]) -> Result<QuasiLocalityProfile> {
    p.space.check_len(action.len())?;
    let n = p.space.len();
    if n > tol::ENUMERATION_CAP {
        return Err(LabError::CapExceeded { atoms: n, cap: tol::ENUMERATION_CAP, hint: "use the sampled profile" });
    }
    let best = far_profile(n, &ball_masks(action, ks), &Scorer::RankOne(&p.xi), None);
    let m = linalg::outer(&p.xi);
    Ok(finish_profile(&m, ks.iter().map(|&k| k as f64).collect(), best, ProfileMode::Exact, None))
}

/// Seeded random subsets `A` (each with its optimal `C`); a lower bound on
/// every `ε(k)`. Atom counts up to 63.
pub fn rho_quasi_locality_sampled(
    t: &WeightedOperator,
    action: &FiniteAction,
    ks: &[u64],
    samples: usize,
    seed: u64,
) -> Result<QuasiLocalityProfile> {
    t.space.check_len(action.len())?;
    let n = t.len();
    if n > 63 {
        return Err(LabError::CapExceeded { atoms: n, cap: 63, hint: "sampled profiles use 64-bit subset masks" });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = subset::full_mask(n);
    let masks: Vec<Mask> = (0..samples)
        .map(|_| loop {
            let m = rng.random::<u64>() & full;
            if m != 0 {
                break m;
            }
        })
        .collect();
    let best = far_profile(n, &ball_masks(action, ks), &Scorer::General(&t.matrix), Some(&masks));
    Ok(finish_profile(&t.matrix, ks.iter().map(|&k| k as f64).collect(), best, ProfileMode::Sampled, Some(samples)))
}

/// `ε_t(R) = max ‖χ_A T χ_C‖` over `d_Γ^t(A, C) > R`.
pub fn warped_quasi_locality_profile(t: &WeightedOperator, level: &WarpedLevel, rs: &[f64]) -> Result<QuasiLocalityProfile> {
    t.space.check_len(level.len())?;
    let n = t.len();
    if n > tol::QUASI_LOCAL_CAP {
        return Err(LabError::CapExceeded { atoms: n, cap: tol::QUASI_LOCAL_CAP, hint: "warped profiles enumerate every subset" });
    }
    let near: Vec<Vec<Mask>> = rs.iter().map(|&r| (0..n).map(|x| subset::mask_of(&level.ball(x, r))).collect()).collect();
    let best = far_profile(n, &near, &Scorer::General(&t.matrix), None);
    Ok(finish_profile(&t.matrix, rs.to_vec(), best, ProfileMode::Exact, None))
}

/// Pointwise maximum of the per-level warped profiles.
pub fn uniform_warped_profile(t: &WeightedOperator, cone: &SparseCone, rs: &[f64]) -> Result<QuasiLocalityProfile> {
    let mut out: Option<QuasiLocalityProfile> = None;
    for level in cone.levels() {
        let p = warped_quasi_locality_profile(t, level, rs)?;
        out = Some(match out {
            None => p,
            Some(mut acc) => {
                for i in 0..rs.len() {
                    if p.eps[i] > acc.eps[i] {
                        acc.eps[i] = p.eps[i];
                        acc.witnesses[i] = p.witnesses[i].clone();
                    }
                }
                acc
            }
        });
    }
    out.ok_or(LabError::Empty("cone levels"))
}

/// `P̂_{Y,S}`: `ξ ∝ √(σ_{Y,S}·ν)` on `Y`, zero elsewhere.
pub fn hat_embedding_projection(ak: &ActionKernel) -> Result<RankOneProjection> {
    let space = ak.action().space();
    let mut xi = DVector::zeros(space.len());
    for (i, &x) in ak.y().iter().enumerate() {
        xi[x] = ak.tilde_nu()[i].sqrt();
    }
    let norm = xi.norm();
    RankOneProjection::new(space.clone(), xi / norm)
}

/// `‖P̂ⁿ − P̂_∞‖` against `λ̂ⁿ` at one power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStep {
    pub n: usize,
    pub norm: f64,
    pub bound: f64,
    /// ρ-propagation of `P̂ⁿ` (`None` = infinite); action kernels only.
    pub propagation: Option<Option<u64>>,
    pub propagation_bound: Option<u64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub lambda_hat: f64,
    pub has_gap: bool,
    pub steps: Vec<PowerStep>,
    pub holds: bool,
}

/// Power convergence of a reversible kernel's symmetrized operator to the
/// projection onto `√m`.
pub fn markov_power_projection_kernel(kernel: &MarkovKernel, m: &[f64], n_max: usize) -> Result<PowerReport> {
    let spectrum = markov::lambda2(kernel, m)?;
    let sym = markov::symmetrized_matrix(kernel, m);
    let root = DVector::from_iterator(m.len(), m.iter().map(|v| v.sqrt())).normalize();
    Ok(power_steps(&sym, &linalg::outer(&root), spectrum.mean_zero_norm(), spectrum.has_gap(), n_max, |_, _| None))
}

/// `𝔓̂_{Y,S}ⁿ → P̂_{Y,S}` with rate `λ̂ = max(|λ₂|, |λ_min|)`, plus the
/// propagation bound `n·max ℓ(s)` on every power.
pub fn markov_power_projection(ak: &ActionKernel, n_max: usize) -> Result<PowerReport> {
    let spectrum = ak.spectrum()?;
    let n = ak.action().len();
    let y = ak.y();
    let small = markov::symmetrized_matrix(ak.kernel(), ak.tilde_nu());
    let mut hat = DMatrix::zeros(n, n);
    for (i, &x) in y.iter().enumerate() {
        for (j, &z) in y.iter().enumerate() {
            hat[(x, z)] = small[(i, j)];
        }
    }
    let limit = hat_embedding_projection(ak)?.operator().matrix;
    let dist = action::orbit_distance_matrix(ak.action());
    let max_len = ak.action().gens().max_length(ak.gens()) as u64;
    let propagation = |power: &DMatrix<f64>, k: usize| {
        let mut worst = Some(0);
        'outer: for a in 0..n {
            for b in 0..n {
                if power[(a, b)].abs() > tol::ENTRY {
                    match (worst, dist[a][b]) {
                        (Some(w), Some(d)) => worst = Some(w.max(d)),
                        _ => {
                            worst = None;
                            break 'outer;
                        }
                    }
                }
            }
        }
        Some((worst, k as u64 * max_len))
    };
    Ok(power_steps(&hat, &limit, spectrum.mean_zero_norm(), spectrum.has_gap(), n_max, propagation))
}

fn power_steps(
    op: &DMatrix<f64>,
    limit: &DMatrix<f64>,
    lambda_hat: f64,
    has_gap: bool,
    n_max: usize,
    propagation: impl Fn(&DMatrix<f64>, usize) -> Option<(Option<u64>, u64)>,
) -> PowerReport {
    let mut steps = Vec::with_capacity(n_max);
    let mut power = op.clone();
    for k in 1..=n_max {
        if k > 1 {
            power = &power * op;
        }
        let norm = linalg::sym_operator_norm(&(&power - limit));
        let bound = lambda_hat.powi(k as i32);
        let prop = propagation(&power, k);
        let prop_ok = prop.is_none_or(|(p, b)| p.is_some_and(|p| p <= b));
        steps.push(PowerStep {
            n: k,
            norm,
            bound,
            propagation: prop.map(|p| p.0),
            propagation_bound: prop.map(|p| p.1),
            holds: norm <= bound + 1e-10 && prop_ok,
        });
    }
    let holds = has_gap && steps.iter().all(|s| s.holds);
    PowerReport { lambda_hat, has_gap, steps, holds }
}

/// Two certified upper bounds on `inf ‖P̂ − T‖` over `T` with
/// ρ-propagation at most `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinitePropagationWitness {
    pub k: u64,
    /// `‖P̂ⁿ − P̂_∞‖` with `n = ⌊k / max ℓ⌋` (1 when `n = 0`: `T = 0`).
    pub markov_power: f64,
    pub power_n: u64,
    /// `‖P̂ − trunc_k(P̂)‖`, zeroing entries at orbit distance above `k`.
    pub truncation: f64,
}

pub fn finite_propagation_witness(ak: &ActionKernel, k: u64) -> Result<FinitePropagationWitness> {
    let max_len = ak.action().gens().max_length(ak.gens()).max(1) as u64;
    let power_n = k / max_len;
    let markov_power = if power_n == 0 {
        1.0
    } else {
        markov_power_projection(ak, power_n as usize)?.steps.last().map_or(1.0, |s| s.norm)
    };
    let p = hat_embedding_projection(ak)?.operator();
    let dist = action::orbit_distance_matrix(ak.action());
    let n = p.len();
    let residual = DMatrix::from_fn(n, n, |x, y| if dist[x][y].is_some_and(|d| d <= k) { 0.0 } else { p.matrix[(x, y)] });
    Ok(FinitePropagationWitness { k, markov_power, power_n, truncation: linalg::operator_norm(&residual) })
}

/// `Ad(P̃_{Y,S})` through the zero-extension embedding, against
/// `(ν(Y)/ν̃(Y))·P_Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdReport {
    pub scale: f64,
    pub deviation: f64,
    pub holds: bool,
    /// `‖Ad(𝔓ⁿ) − Ad(P̃)‖` for `n = 1..`.
    pub power_deviation: Vec<f64>,
}

pub fn ad_embedding_projection(ak: &ActionKernel, n_max: usize) -> Result<AdReport> {
    let space = ak.action().space();
    let n = space.len();
    let y = ak.y();
    let ny = y.len();
    let sigma = ak.sigma();
    // I: L²(Y, ν̃) → L²(X, ν) extends by zero; I*g = g|_Y / σ.
    let inc = DMatrix::from_fn(n, ny, |x, i| if y[i] == x { 1.0 } else { 0.0 });
    let adj = DMatrix::from_fn(ny, n, |i, x| if y[i] == x { 1.0 / sigma[i] } else { 0.0 });
    let tn = ak.tilde_nu();
    let tn_total: f64 = tn.iter().sum();
    let p_tilde = DMatrix::from_fn(ny, ny, |_, j| tn[j] / tn_total);
    let ad = |t: &DMatrix<f64>| WeightedOperator::from_function_frame(space.clone(), &(&inc * t * &adj), "Ad");
    let ad_limit = ad(&p_tilde)?;
    let scale = space.mass_of(y) / tn_total;
    let expected = averaging_projection(space, y)?.operator().scaled(scale);
    let deviation = ad_limit.minus(&expected)?.norm();
    let pi = ak.kernel().transition();
    let mut power = pi.clone();
    let mut power_deviation = Vec::with_capacity(n_max);
    for k in 1..=n_max {
        if k > 1 {
            power = &power * pi;
        }
        power_deviation.push(ad(&power)?.minus(&ad_limit)?.norm());
    }
    Ok(AdReport { scale, deviation, holds: deviation < 1e-10, power_deviation })
}

/// Ghost statistic at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostLevel {
    pub t: f64,
    pub atoms: usize,
    /// `max_x ‖χ_{B_R(x)} ξ‖`.
    pub g: f64,
    pub worst_atom: usize,
    /// `max_x ν(B_R(x)) / ν(X)`.
    pub max_ball_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhostProfile {
    pub radius: f64,
    pub levels: Vec<GhostLevel>,
}

impl GhostProfile {
    pub fn strictly_decreasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].g < w[0].g)
    }
}

fn ghost_level(p: &RankOneProjection, level: &WarpedLevel, r: f64) -> Result<GhostLevel> {
    p.space.check_len(level.len())?;
    let total = p.space.total_mass();
    let mut best = (f64::NEG_INFINITY, 0, 0.0);
    for x in 0..level.len() {
        let ball = level.ball(x, r);
        let g = p.mass_on(&ball);
        let mass = p.space.mass_of(&ball) / total;
        if g > best.0 {
            best.0 = g;
            best.1 = x;
        }
        best.2 = f64::max(best.2, mass);
    }
    Ok(GhostLevel { t: level.t(), atoms: level.len(), g: best.0, worst_atom: best.1, max_ball_mass: best.2 })
}

/// `g_n = max_x ‖P χ_{B_R(x; d_Γ^{t_n})}‖ = max_x ‖χ_{B_R(x)} ξ‖` per level.
pub fn ghost_profile(p: &RankOneProjection, cone: &SparseCone, r: f64) -> Result<GhostProfile> {
    let levels = cone.levels().iter().map(|l| ghost_level(p, l, r)).collect::<Result<Vec<_>>>()?;
    Ok(GhostProfile { radius: r, levels })
}

/// Ghost statistic on a stack whose levels carry their own spaces.
pub fn ghost_profile_refining(levels: &[(RankOneProjection, WarpedLevel)], r: f64) -> Result<GhostProfile> {
    let levels = levels.iter().map(|(p, l)| ghost_level(p, l, r)).collect::<Result<Vec<_>>>()?;
    Ok(GhostProfile { radius: r, levels })
}

/// Poincaré inequality for one embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareLevel {
    pub t: Option<f64>,
    /// `Σ_coords ‖g − ∫g‖²_{ν|Y}`.
    pub lhs: f64,
    /// `κ√Θ Σ_coords Σ_s Σ_{x∈Y∩s⁻¹Y} |g(x) − g(s·x)|² ν(x)`.
    pub rhs: f64,
    /// Worst coordinate-wise slack `rhs_i − lhs_i`.
    pub worst_slack: f64,
    pub holds: bool,
    /// `max |F(x) − F(s·x)|` over `x, s·x ∈ Y` (Euclidean).
    pub lipschitz: f64,
    /// `κ√Θ |S| L² ν(Y)`: the bound any embedding with step size `L` obeys.
    pub uniform_bound: f64,
    /// `ν⊗ν`-average warped distance over `Y × Y` (levels only).
    pub mean_warped_distance: Option<f64>,
    /// `mean_warped_distance / √(2·rhs/ν(Y))`: how far apart points are in
    /// the warped metric relative to their allowed spread in the embedding.
    pub distortion_witness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub kappa: f64,
    pub theta: f64,
    pub levels: Vec<PoincareLevel>,
    pub holds: bool,
}

/// Checks the Poincaré inequality for each level's candidate embedding
/// `F_t: X → R^d` (indexed by atom of `X`). `levels` may be empty, or give
/// one warped level per embedding for the distance statistics.
pub fn poincare_obstruction_witness(ak: &ActionKernel, embeddings: &[Vec<Vec<f64>>], levels: &[WarpedLevel]) -> Result<PoincareReport> {
    if !levels.is_empty() && levels.len() != embeddings.len() {
        return Err(LabError::DimensionMismatch { expected: embeddings.len(), got: levels.len() });
    }
    let spectrum = ak.spectrum()?;
    let kappa = 1.0 / (2.0 * spectrum.spectral_gap);
    let theta = ak.theta();
    let action = ak.action();
    let nu = action.space().weights();
    let y = ak.y();
    let ny_mass = action.space().mass_of(y);
    let mut inside = vec![false; action.len()];
    for &x in y {
        inside[x] = true;
    }
    let mut out = Vec::with_capacity(embeddings.len());
    for (li, emb) in embeddings.iter().enumerate() {
        if emb.len() != action.len() {
            return Err(LabError::DimensionMismatch { expected: action.len(), got: emb.len() });
        }
        let dim = emb.first().map_or(0, |v| v.len());
        if let Some(bad) = emb.iter().find(|v| v.len() != dim) {
            return Err(LabError::DimensionMismatch { expected: dim, got: bad.len() });
        }
        let (mut lhs, mut rhs, mut worst_slack) = (0.0, 0.0, f64::INFINITY);
        for c in 0..dim {
            let mean = y.iter().map(|&x| emb[x][c] * nu[x]).sum::<f64>() / ny_mass;
            let l: f64 = y.iter().map(|&x| (emb[x][c] - mean).powi(2) * nu[x]).sum();
            let mut e = 0.0;
            for &s in ak.gens() {
                for &x in y {
                    let sx = action.apply(s, x);
                    if inside[sx] {
                        e += (emb[x][c] - emb[sx][c]).powi(2) * nu[x];
                    }
                }
            }
            let r = kappa * theta.sqrt() * e;
            lhs += l;
            rhs += r;
            worst_slack = worst_slack.min(r - l);
        }
        let mut lipschitz: f64 = 0.0;
        for &s in ak.gens() {
            for &x in y {
                let sx = action.apply(s, x);
                if inside[sx] {
                    let d: f64 = (0..dim).map(|c| (emb[x][c] - emb[sx][c]).powi(2)).sum();
                    lipschitz = lipschitz.max(d.sqrt());
                }
            }
        }
        let uniform_bound = kappa * theta.sqrt() * ak.gens().len() as f64 * lipschitz * lipschitz * ny_mass;
        let (mean_warped_distance, distortion_witness) = match levels.get(li) {
            None => (None, None),
            Some(level) => {
                let mut acc = 0.0;
                for &x in y {
                    for &z in y {
                        acc += level.distance(x, z) * nu[x] * nu[z];
                    }
                }
                let mean = acc / (ny_mass * ny_mass);
                let spread = (2.0 * rhs / ny_mass).sqrt();
                (Some(mean), Some(if spread > 0.0 { mean / spread } else { f64::INFINITY }))
            }
        };
        let holds = if dim == 0 { true } else { worst_slack >= -tol::EIGEN * rhs.max(1.0) };
        out.push(PoincareLevel {
            t: levels.get(li).map(|l| l.t()),
            lhs,
            rhs,
            worst_slack: if dim == 0 { 0.0 } else { worst_slack },
            holds,
            lipschitz,
            uniform_bound,
            mean_warped_distance,
            distortion_witness,
        });
    }
    let holds = out.iter().all(|l| l.holds);
    Ok(PoincareReport { kappa, theta, levels: out, holds })
}

/// `F_t(x) = (d_Γ^t(x, z))_z`: each coordinate moves by at most `ℓ(s)`
/// along a generator.
pub fn kuratowski_embedding(level: &WarpedLevel) -> Vec<Vec<f64>> {
    (0..level.len()).map(|x| (0..level.len()).map(|z| level.distance(x, z)).collect()).collect()
}
