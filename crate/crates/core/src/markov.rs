//! Reversible Markov kernels on finite measure spaces: boundary sizes,
//! Dirichlet energies, spectra and Cheeger constants.
//!
//! All spectral work happens in the symmetrized frame: conjugating the
//! Markov operator by `f ↦ √m·f` turns a kernel reversible with respect to
//! `m` into the symmetric matrix `M(x,y) = Π(x,y)·√(m(x)/m(y))`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg;
use crate::space::FiniteMeasureSpace;
use crate::subset::{self, ArgMin, Mask};
use crate::tol;

/// Row-stochastic transition matrix over a finite measure space.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernel {
    space: FiniteMeasureSpace,
    transition: DMatrix<f64>,
    reversing_measure: Option<Vec<f64>>,
}

impl MarkovKernel {
    pub fn new(
        space: FiniteMeasureSpace,
        transition: DMatrix<f64>,
        reversing_measure: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = space.len();
        if transition.nrows() != n || transition.ncols() != n {
            return Err(LabError::DimensionMismatch { expected: n, got: transition.nrows().max(transition.ncols()) });
        }
        for row in 0..n {
            let r = transition.row(row);
            let sum: f64 = r.iter().sum();
            let min = r.iter().copied().fold(f64::INFINITY, f64::min);
            let finite = r.iter().all(|v| v.is_finite());
            if !finite || min < 0.0 || (sum - 1.0).abs() > tol::ROW_STOCHASTIC {
                return Err(LabError::NotStochastic { row, sum, min });
            }
        }
        let kernel = Self { space, transition, reversing_measure: None };
        if let Some(m) = reversing_measure {
            check_measure(&kernel.space, &m)?;
            check_reversible(&kernel, &m)?;
            return Ok(Self { reversing_measure: Some(m), ..kernel });
        }
        Ok(kernel)
    }

    /// Solves detailed balance along a spanning forest of the transition
    /// graph. Each communicating class gets the total mass it has under the
    /// space's weights. Fails when the kernel is not reversible.
    pub fn with_inferred_reversing_measure(self) -> Result<Self> {
        let n = self.len();
        let p = &self.transition;
        let mut m = vec![0.0; n];
        let mut seen = vec![false; n];
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            m[root] = 1.0;
            let mut class = vec![root];
            let mut next = 0;
            while next < class.len() {
                let x = class[next];
                next += 1;
                for y in 0..n {
                    if seen[y] || (p[(x, y)] == 0.0 && p[(y, x)] == 0.0) {
                        continue;
                    }
                    if p[(x, y)] == 0.0 || p[(y, x)] == 0.0 {
                        let residual = (p[(x, y)] - p[(y, x)]).abs() * m[x];
                        return Err(LabError::DetailedBalance { x, y, residual });
                    }
                    seen[y] = true;
                    m[y] = m[x] * p[(x, y)] / p[(y, x)];
                    class.push(y);
                }
            }
            let scale = self.space.mass_of(&class) / class.iter().map(|&x| m[x]).sum::<f64>();
            for &x in &class {
                m[x] *= scale;
            }
        }
        check_reversible(&self, &m)?;
        Ok(Self { reversing_measure: Some(m), ..self })
    }

    /// `Π(x,·) = δ_x`.
    pub fn identity(space: FiniteMeasureSpace) -> Self {
        let n = space.len();
        let m = space.weights().to_vec();
        Self { space, transition: DMatrix::identity(n, n), reversing_measure: Some(m) }
    }

    /// Rank-one averaging kernel `Π(x,y) = 1/n` on `n` uniform atoms.
    pub fn uniform(n: usize) -> Result<Self> {
        let space = FiniteMeasureSpace::uniform(n)?;
        let m = space.weights().to_vec();
        Self::new(space, DMatrix::from_element(n, n, 1.0 / n as f64), Some(m))
    }

    /// Two atoms `a`, `b` with `Π(a,b) = p`, `Π(b,a) = q`, reversible with
    /// respect to `m = (q, p)/(p + q)`.
    pub fn two_point(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0 && q > 0.0 && q <= 1.0) {
            return Err(LabError::InvalidParameter(format!("two-point kernel needs p, q in (0,1], got {p}, {q}")));
        }
        let space = FiniteMeasureSpace::new(vec!["a".into(), "b".into()], vec![0.5, 0.5])?;
        let t = DMatrix::from_row_slice(2, 2, &[1.0 - p, p, q, 1.0 - q]);
        Self::new(space, t, Some(vec![q / (p + q), p / (p + q)]))
    }

    /// Lazy simple walk on the cycle `Z/n`: `(I + shift + shift⁻¹)/3`.
    pub fn lazy_cycle(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidParameter(format!("cycle needs n >= 2, got {n}")));
        }
        let space = FiniteMeasureSpace::uniform(n)?;
        let mut t = DMatrix::zeros(n, n);
        for x in 0..n {
            t[(x, x)] += 1.0 / 3.0;
            t[(x, (x + 1) % n)] += 1.0 / 3.0;
            t[(x, (x + n - 1) % n)] += 1.0 / 3.0;
        }
        let m = space.weights().to_vec();
        Self::new(space, t, Some(m))
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn reversing_measure(&self) -> Option<&[f64]> {
        self.reversing_measure.as_deref()
    }

    /// The stored reversing measure, or an error naming its absence.
    pub fn require_reversing_measure(&self) -> Result<&[f64]> {
        self.reversing_measure
            .as_deref()
            .ok_or_else(|| LabError::InvalidParameter("kernel carries no reversing measure".into()))
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }
}

fn check_measure(space: &FiniteMeasureSpace, m: &[f64]) -> Result<()> {
    space.check_len(m.len())?;
    for (index, &weight) in m.iter().enumerate() {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(LabError::InvalidWeight { index, weight });
        }
    }
    Ok(())
}

/// Worst detailed-balance residual `|m(x)Π(x,y) − m(y)Π(y,x)|` and its pair.
pub fn detailed_balance_residual(kernel: &MarkovKernel, m: &[f64]) -> (f64, usize, usize) {
    let t = &kernel.transition;
    let mut worst = (0.0, 0, 0);
    for x in 0..kernel.len() {
        for y in (x + 1)..kernel.len() {
            let r = (m[x] * t[(x, y)] - m[y] * t[(y, x)]).abs();
            if r > worst.0 {
                worst = (r, x, y);
            }
        }
    }
    worst
}

pub fn check_reversible(kernel: &MarkovKernel, m: &[f64]) -> Result<()> {
    check_measure(&kernel.space, m)?;
    let (residual, x, y) = detailed_balance_residual(kernel, m);
    if residual > tol::DETAILED_BALANCE {
        return Err(LabError::DetailedBalance { x, y, residual });
    }
    Ok(())
}

/// `μ(x,y) = m(x)·Π(x,y)`, symmetric for a reversing `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEdgeMeasure {
    space: FiniteMeasureSpace,
    mu: DMatrix<f64>,
}

impl SymmetricEdgeMeasure {
    pub fn new(kernel: &MarkovKernel, m: &[f64]) -> Result<Self> {
        check_reversible(kernel, m)?;
        let n = kernel.len();
        let mu = DMatrix::from_fn(n, n, |x, y| m[x] * kernel.transition[(x, y)]);
        Ok(Self { space: kernel.space.clone(), mu })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mu
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    /// Row sums of μ; these reproduce the reversing measure.
    pub fn marginal(&self) -> Vec<f64> {
        self.mu.row_iter().map(|r| r.sum()).collect()
    }

    /// `μ(A × (X∖A))`.
    pub fn cross_mass(&self, subset: &[usize]) -> f64 {
        let n = self.mu.nrows();
        let mut inside = vec![false; n];
        for &x in subset {
            inside[x] = true;
        }
        let mut total = 0.0;
        for x in subset {
            for y in 0..n {
                if !inside[y] {
                    total += self.mu[(*x, y)];
                }
            }
        }
        total
    }
}

/// `(𝔓f)(x) = Σ_y Π(x,y) f(y)`.
pub fn markov_apply(kernel: &MarkovKernel, f: &[f64]) -> Result<Vec<f64>> {
    kernel.space.check_len(f.len())?;
    let v = &kernel.transition * DVector::from_column_slice(f);
    Ok(v.iter().copied().collect())
}

/// Complex-valued variant of [`markov_apply`].
pub fn markov_apply_complex(kernel: &MarkovKernel, f: &[Complex64]) -> Result<Vec<Complex64>> {
    kernel.space.check_len(f.len())?;
    let n = kernel.len();
    Ok((0..n)
        .map(|x| (0..n).map(|y| f[y] * kernel.transition[(x, y)]).sum())
        .collect())
}

/// `(ν𝔓̌)(y) = Σ_x ν(x) Π(x,y)`.
pub fn dual_apply(kernel: &MarkovKernel, nu: &[f64]) -> Result<Vec<f64>> {
    kernel.space.check_len(nu.len())?;
    if let Some(i) = nu.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(LabError::InvalidWeight { index: i, weight: nu[i] });
    }
    let v = kernel.transition.transpose() * DVector::from_column_slice(nu);
    Ok(v.iter().copied().collect())
}

/// `|∂_Π A|_m = Σ_{x∈A} m(x)·Π(x, X∖A)`.
pub fn boundary_size(kernel: &MarkovKernel, m: &[f64], subset: &[usize]) -> Result<f64> {
    kernel.space.check_subset(subset)?;
    check_reversible(kernel, m)?;
    let a = subset::normalized(subset);
    Ok(boundary_unchecked(kernel, m, &a))
}

pub(crate) fn boundary_unchecked(kernel: &MarkovKernel, m: &[f64], a: &[usize]) -> f64 {
    let n = kernel.len();
    let mut inside = vec![false; n];
    for &x in a {
        inside[x] = true;
    }
    a.iter()
        .map(|&x| m[x] * (0..n).filter(|&y| !inside[y]).map(|y| kernel.transition[(x, y)]).sum::<f64>())
        .sum()
}

/// `ε_p(f) = ½ Σ_{x,y} |f(x) − f(y)|^p μ(x,y)`.
pub fn dirichlet_energy(kernel: &MarkovKernel, m: &[f64], f: &[Complex64], p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(LabError::InvalidExponent(p));
    }
    kernel.space.check_len(f.len())?;
    check_reversible(kernel, m)?;
    let n = kernel.len();
    let mut total = 0.0;
    for x in 0..n {
        for y in 0..n {
            let w = m[x] * kernel.transition[(x, y)];
            if w != 0.0 {
                total += (f[x] - f[y]).norm().powf(p) * w;
            }
        }
    }
    Ok(0.5 * total)
}

pub fn dirichlet_energy_real(kernel: &MarkovKernel, m: &[f64], f: &[f64], p: f64) -> Result<f64> {
    let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dirichlet_energy(kernel, m, &fc, p)
}

/// Spectrum of the Markov operator on `L²(X, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Top of the spectrum on mean-zero functions. On a single atom the
    /// mean-zero space is trivial and this is `-inf`.
    pub lambda2: f64,
    /// `1 − λ₂`, or 0 when the eigenvalue 1 is degenerate.
    pub spectral_gap: f64,
    /// Multiplicity of the eigenvalue 1 (within 1e-9).
    pub one_eigenspace_dim: usize,
    /// Bottom of the spectrum on mean-zero functions (`+inf` on one atom).
    pub lambda_min: f64,
}

impl SpectralReport {
    /// `max(|λ₂|, |λ_min|)`: the norm of the Markov operator on mean-zero
    /// functions.
    pub fn mean_zero_norm(&self) -> f64 {
        if self.eigenvalues.len() <= 1 {
            0.0
        } else {
            self.lambda2.abs().max(self.lambda_min.abs())
        }
    }

    pub fn has_gap(&self) -> bool {
        self.one_eigenspace_dim == 1 && self.spectral_gap > tol::EIGEN
    }
}

/// `M(x,y) = Π(x,y)·√(m(x)/m(y))`, symmetrized to remove rounding.
pub fn symmetrized_matrix(kernel: &MarkovKernel, m: &[f64]) -> DMatrix<f64> {
    let n = kernel.len();
    let raw = DMatrix::from_fn(n, n, |x, y| kernel.transition[(x, y)] * (m[x] / m[y]).sqrt());
    linalg::symmetrize(&raw)
}

/// Full spectral data: the report plus the eigenvector (symmetrized frame)
/// of `λ₂`, if any.
pub(crate) fn spectral_decomposition(kernel: &MarkovKernel, m: &[f64]) -> Result<(SpectralReport, Option<DVector<f64>>)> {
    check_reversible(kernel, m)?;
    let sym = symmetrized_matrix(kernel, m);
    let (values, vectors) = linalg::sym_eigen_desc(&sym);
    let n = values.len();
    let one_eigenspace_dim = values.iter().filter(|v| (**v - 1.0).abs() <= tol::EIGEN).count();
    if n == 1 {
        let report = SpectralReport {
            eigenvalues: values,
            lambda2: f64::NEG_INFINITY,
            spectral_gap: f64::INFINITY,
            one_eigenspace_dim,
            lambda_min: f64::INFINITY,
        };
        return Ok((report, None));
    }
    // Drop the eigenvector carrying the constants, i.e. the one most aligned
    // with √m; what remains is the spectrum on the mean-zero subspace.
    let root = DVector::from_iterator(n, m.iter().map(|w| w.sqrt())).normalize();
    let constant = (0..n)
        .max_by(|&i, &j| {
            let oi = vectors.column(i).dot(&root).abs();
            let oj = vectors.column(j).dot(&root).abs();
            oi.total_cmp(&oj).then(j.cmp(&i))
        })
        .expect("n > 1");
    let rest: Vec<usize> = (0..n).filter(|&i| i != constant).collect();
    let lambda2 = values[rest[0]];
    let lambda_min = values[*rest.last().expect("n > 1")];
    let spectral_gap = if one_eigenspace_dim > 1 { 0.0 } else { (1.0 - lambda2).max(0.0) };
    let fiedler = vectors.column(rest[0]).into_owned();
    Ok((SpectralReport { eigenvalues: values, lambda2, spectral_gap, one_eigenspace_dim, lambda_min }, Some(fiedler)))
}

pub fn lambda2(kernel: &MarkovKernel, m: &[f64]) -> Result<SpectralReport> {
    spectral_decomposition(kernel, m).map(|(r, _)| r)
}

/// Cheeger constant and a subset attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheegerResult {
    /// `+inf` when no subset satisfies `0 < m(A) ≤ m(X)/2` (a single atom).
    pub kappa: f64,
    pub subset: Vec<usize>,
}

pub fn cheeger_exact(kernel: &MarkovKernel, m: &[f64]) -> Result<CheegerResult> {
    cheeger_exact_with_cap(kernel, m, tol::ENUMERATION_CAP)
}

/// Exact Cheeger constant by enumerating every proper nonempty subset.
///
/// Only subsets avoiding the last atom are walked (in Gray-code order, in
/// fixed-size chunks); each one is scored together with its complement,
/// which has the same boundary.
pub fn cheeger_exact_with_cap(kernel: &MarkovKernel, m: &[f64], cap: usize) -> Result<CheegerResult> {
    check_reversible(kernel, m)?;
    let n = kernel.len();
    if n > cap.min(63) {
        return Err(LabError::CapExceeded {
            atoms: n,
            cap: cap.min(63),
            hint: "use cheeger_sweep for an upper bound",
        });
    }
    if n == 1 {
        return Ok(CheegerResult { kappa: f64::INFINITY, subset: vec![] });
    }
    let mu = DMatrix::from_fn(n, n, |x, y| if x == y { 0.0 } else { m[x] * kernel.transition[(x, y)] });
    let degree: Vec<f64> = (0..n).map(|x| mu.row(x).sum()).collect();
    let total: f64 = m.iter().sum();
    let half = total / 2.0;
    let full = subset::full_mask(n);
    let free_bits = n - 1;
    let count: u64 = 1 << free_bits;
    const CHUNK_BITS: u32 = 12;
    let chunk = 1u64 << CHUNK_BITS;
    let chunks = count.div_ceil(chunk);

    let scan = |c: u64| -> ArgMin {
        let start = c * chunk;
        let end = (start + chunk).min(count);
        let mut best = ArgMin::new();
        let mut mask: Mask = start ^ (start >> 1);
        let mut inside = vec![0.0; n];
        let mut mass = 0.0;
        for x in subset::members(mask) {
            mass += m[x];
            for y in 0..n {
                inside[y] += mu[(y, x)];
            }
        }
        let mut boundary: f64 = subset::members(mask).iter().map(|&x| degree[x] - inside[x]).sum();
        let mut i = start;
        loop {
            if mask != 0 {
                if tol::le_rel(mass, half, total) {
                    best.offer(boundary / mass, mask);
                }
                let comp_mass = total - mass;
                if tol::le_rel(comp_mass, half, total) {
                    best.offer(boundary / comp_mass, full ^ mask);
                }
            }
            i += 1;
            if i >= end {
                break;
            }
            let x = i.trailing_zeros() as usize;
            let delta = degree[x] - 2.0 * inside[x];
            if mask & (1 << x) == 0 {
                boundary += delta;
                mass += m[x];
                for y in 0..n {
                    inside[y] += mu[(y, x)];
                }
            } else {
                boundary -= delta;
                mass -= m[x];
                for y in 0..n {
                    inside[y] -= mu[(y, x)];
                }
            }
            mask ^= 1 << x;
        }
        best
    };

    let partials: Vec<ArgMin> = if chunks > 4 {
        (0..chunks).into_par_iter().map(scan).collect()
    } else {
        (0..chunks).map(scan).collect()
    };
    let mut best = ArgMin::new();
    for p in partials {
        best.merge(p);
    }
    if !best.found {
        return Ok(CheegerResult { kappa: f64::INFINITY, subset: vec![] });
    }
    let subset = subset::members(best.mask);
    let kappa = boundary_unchecked(kernel, m, &subset) / subset.iter().map(|&x| m[x]).sum::<f64>();
    Ok(CheegerResult { kappa, subset })
}

/// Fiedler sweep: an upper bound on the Cheeger constant from prefix cuts of
/// the atoms ordered by the `λ₂` eigenvector.
pub fn cheeger_sweep(kernel: &MarkovKernel, m: &[f64]) -> Result<CheegerResult> {
    let (_, fiedler) = spectral_decomposition(kernel, m)?;
    let n = kernel.len();
    let Some(v) = fiedler else {
        return Ok(CheegerResult { kappa: f64::INFINITY, subset: vec![] });
    };
    let score: Vec<f64> = (0..n).map(|x| v[x] / m[x].sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]).then(a.cmp(&b)));

    let total: f64 = m.iter().sum();
    let half = total / 2.0;
    let t = &kernel.transition;
    let mut inside = vec![false; n];
    let mut boundary = 0.0;
    let mut mass = 0.0;
    let mut best: Option<(f64, usize, bool)> = None;
    for (k, &x) in order.iter().enumerate().take(n - 1) {
        // boundary(A ∪ {x}) = boundary(A) + μ(x, outside) − μ(A, x)
        let mut to_out = 0.0;
        let mut from_in = 0.0;
        for y in 0..n {
            if y == x {
                continue;
            }
            if inside[y] {
                from_in += m[y] * t[(y, x)];
            } else {
                to_out += m[x] * t[(x, y)];
            }
        }
        boundary += to_out - from_in;
        mass += m[x];
        inside[x] = true;
        let (ratio, prefix_side) = if tol::le_rel(mass, half, total) {
            (boundary / mass, true)
        } else {
            (boundary / (total - mass), false)
        };
        if best.is_none_or(|(b, _, _)| ratio < b) {
            best = Some((ratio, k, prefix_side));
        }
    }
    let (kappa, k, prefix_side) = best.expect("n > 1");
    let mut subset: Vec<usize> = if prefix_side {
        order[..=k].to_vec()
    } else {
        order[k + 1..].to_vec()
    };
    subset.sort_unstable();
    Ok(CheegerResult { kappa, subset })
}

/// `κ²/2 ≤ 1 − λ₂ ≤ 2κ`, with the exact Cheeger constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub kappa: f64,
    pub lambda2: f64,
    pub spectral_gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
    pub argmin_subset: Vec<usize>,
}

pub fn verify_cheeger_sandwich(kernel: &MarkovKernel, m: &[f64]) -> Result<SandwichReport> {
    verify_cheeger_sandwich_with_cap(kernel, m, tol::ENUMERATION_CAP)
}

pub fn verify_cheeger_sandwich_with_cap(kernel: &MarkovKernel, m: &[f64], cap: usize) -> Result<SandwichReport> {
    let spectrum = lambda2(kernel, m)?;
    let cheeger = cheeger_exact_with_cap(kernel, m, cap)?;
    let kappa = cheeger.kappa;
    let gap = spectrum.spectral_gap;
    let lower = kappa * kappa / 2.0;
    let upper = 2.0 * kappa;
    let holds = if kappa.is_infinite() {
        // One atom: no admissible subsets and no mean-zero functions.
        gap.is_infinite()
    } else {
        lower <= gap + tol::EIGEN && gap <= upper + tol::EIGEN
    };
    Ok(SandwichReport {
        kappa,
        lambda2: spectrum.lambda2,
        spectral_gap: gap,
        lower,
        upper,
        holds,
        argmin_subset: cheeger.subset,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_point() -> (MarkovKernel, Vec<f64>) {
        let k = MarkovKernel::two_point(0.3, 0.3).unwrap();
        let m = k.reversing_measure().unwrap().to_vec();
        (k, m)
    }

    #[test]
    fn inferred_measure_matches_detailed_balance() {
        let space = FiniteMeasureSpace::uniform(3).unwrap();
        let t = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.25, 0.5, 0.25, 0.0, 0.5, 0.5]);
        let k = MarkovKernel::new(space.clone(), t, None).unwrap().with_inferred_reversing_measure().unwrap();
        let m = k.reversing_measure().unwrap();
        assert!((m[0] - 0.25).abs() < 1e-15 && (m[1] - 0.5).abs() < 1e-15 && (m[2] - 0.25).abs() < 1e-15);
        let cyclic = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let k = MarkovKernel::new(space, cyclic, None).unwrap();
        assert!(matches!(k.with_inferred_reversing_measure(), Err(LabError::DetailedBalance { .. })));
    }

    #[test]
    fn constructor_rejects_non_stochastic_rows() {
        let space = FiniteMeasureSpace::uniform(2).unwrap();
        let t = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.5, 0.5]);
        assert!(matches!(MarkovKernel::new(space.clone(), t, None), Err(LabError::NotStochastic { row: 0, .. })));
        let t = DMatrix::from_row_slice(2, 2, &[1.2, -0.2, 0.5, 0.5]);
        assert!(MarkovKernel::new(space, t, None).is_err());
    }

    #[test]
    fn detailed_balance_error_names_worst_pair() {
        let space = FiniteMeasureSpace::uniform(3).unwrap();
        let t = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.1, 0.9, 0.0, 0.0, 0.0, 1.0]);
        let k = MarkovKernel::new(space, t, None).unwrap();
        match lambda2(&k, &[1.0, 1.0, 1.0]) {
            Err(LabError::DetailedBalance { x: 0, y: 1, residual }) => assert_abs_diff_eq!(residual, 0.4, epsilon = 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn apply_examples() {
        let space = FiniteMeasureSpace::uniform(3).unwrap();
        let id = MarkovKernel::identity(space);
        assert_eq!(markov_apply(&id, &[1.0, -2.0, 5.0]).unwrap(), vec![1.0, -2.0, 5.0]);

        let u = MarkovKernel::uniform(4).unwrap();
        for v in markov_apply(&u, &[1.0, 2.0, 3.0, 6.0]).unwrap() {
            assert_abs_diff_eq!(v, 3.0, epsilon = 1e-15);
        }

        let (k, _) = two_point();
        let out = markov_apply(&k, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(out[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.3, epsilon = 1e-15);
        assert!(matches!(markov_apply(&k, &[1.0]), Err(LabError::DimensionMismatch { .. })));
    }

    #[test]
    fn dual_examples() {
        let (k, m) = two_point();
        let out = dual_apply(&k, &m).unwrap();
        assert_abs_diff_eq!(out[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.5, epsilon = 1e-15);
        assert!(dual_apply(&k, &[-1.0, 1.0]).is_err());
        let id = MarkovKernel::identity(FiniteMeasureSpace::uniform(2).unwrap());
        assert_eq!(dual_apply(&id, &[0.2, 0.9]).unwrap(), vec![0.2, 0.9]);
    }

    #[test]
    fn boundary_examples() {
        let (k, m) = two_point();
        assert_abs_diff_eq!(boundary_size(&k, &m, &[0]).unwrap(), 0.15, epsilon = 1e-15);
        assert_eq!(boundary_size(&k, &m, &[]).unwrap(), 0.0);
        assert_abs_diff_eq!(boundary_size(&k, &m, &[0, 1]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(boundary_size(&k, &m, &[2]), Err(LabError::UnknownAtom(2))));

        let u = MarkovKernel::uniform(6).unwrap();
        let mu = u.reversing_measure().unwrap().to_vec();
        let b = boundary_size(&u, &mu, &[0, 2]).unwrap();
        assert_abs_diff_eq!(b, (2.0 / 6.0) * (1.0 - 2.0 / 6.0), epsilon = 1e-15);
    }

    #[test]
    fn dirichlet_examples() {
        let (k, m) = two_point();
        assert_eq!(dirichlet_energy_real(&k, &m, &[3.0, 3.0], 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(dirichlet_energy_real(&k, &m, &[1.0, 0.0], 2.0).unwrap(), 0.15, epsilon = 1e-15);
        assert!(matches!(dirichlet_energy_real(&k, &m, &[1.0, 0.0], 0.5), Err(LabError::InvalidExponent(_))));
        let f = [Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)];
        assert_abs_diff_eq!(dirichlet_energy(&k, &m, &f, 1.0).unwrap(), 0.15, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_examples() {
        let u = MarkovKernel::uniform(5).unwrap();
        let r = lambda2(&u, u.reversing_measure().unwrap()).unwrap();
        assert_abs_diff_eq!(r.lambda2, 0.0, epsilon = 1e-12);
        assert_eq!(r.one_eigenspace_dim, 1);

        let (k, m) = two_point();
        let r = lambda2(&k, &m).unwrap();
        assert_abs_diff_eq!(r.lambda2, 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eigenvalues[0], 1.0, epsilon = 1e-12);

        let c = MarkovKernel::lazy_cycle(4).unwrap();
        let r = lambda2(&c, c.reversing_measure().unwrap()).unwrap();
        assert_abs_diff_eq!(r.lambda2, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.spectral_gap, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn disconnected_kernel_reports_no_gap() {
        let space = FiniteMeasureSpace::uniform(4).unwrap();
        let t = DMatrix::from_row_slice(4, 4, &[
            0.5, 0.5, 0.0, 0.0, //
            0.5, 0.5, 0.0, 0.0, //
            0.0, 0.0, 0.5, 0.5, //
            0.0, 0.0, 0.5, 0.5,
        ]);
        let k = MarkovKernel::new(space, t, None).unwrap();
        let r = lambda2(&k, &[0.25; 4]).unwrap();
        assert_eq!(r.one_eigenspace_dim, 2);
        assert_eq!(r.spectral_gap, 0.0);
        assert_abs_diff_eq!(r.lambda2, 1.0, epsilon = 1e-12);
        let c = cheeger_exact(&k, &[0.25; 4]).unwrap();
        assert_eq!(c.kappa, 0.0);
        assert_eq!(c.subset, vec![0, 1]);
    }

    #[test]
    fn cheeger_examples() {
        let (k, m) = two_point();
        let c = cheeger_exact(&k, &m).unwrap();
        assert_abs_diff_eq!(c.kappa, 0.3, epsilon = 1e-15);
        assert_eq!(c.subset, vec![0]);

        let u = MarkovKernel::uniform(6).unwrap();
        let c = cheeger_exact(&u, u.reversing_measure().unwrap()).unwrap();
        assert_abs_diff_eq!(c.kappa, 0.5, epsilon = 1e-14);
        assert_eq!(c.subset, vec![0, 1, 2]);

        let single = MarkovKernel::identity(FiniteMeasureSpace::uniform(1).unwrap());
        assert!(cheeger_exact(&single, &[1.0]).unwrap().kappa.is_infinite());
    }

    #[test]
    fn cheeger_cap_is_enforced() {
        let u = MarkovKernel::uniform(9).unwrap();
        let err = cheeger_exact_with_cap(&u, u.reversing_measure().unwrap(), 8).unwrap_err();
        assert!(matches!(err, LabError::CapExceeded { atoms: 9, cap: 8, .. }));
    }

    #[test]
    fn sweep_examples() {
        let (k, m) = two_point();
        assert_abs_diff_eq!(cheeger_sweep(&k, &m).unwrap().kappa, 0.3, epsilon = 1e-15);
        let u = MarkovKernel::uniform(8).unwrap();
        assert_abs_diff_eq!(cheeger_sweep(&u, u.reversing_measure().unwrap()).unwrap().kappa, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sandwich_examples() {
        let (k, m) = two_point();
        let r = verify_cheeger_sandwich(&k, &m).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.lower, 0.045, epsilon = 1e-14);
        assert_abs_diff_eq!(r.upper, 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(r.spectral_gap, r.upper, epsilon = 1e-12);

        let u = MarkovKernel::uniform(8).unwrap();
        let r = verify_cheeger_sandwich(&u, u.reversing_measure().unwrap()).unwrap();
        assert!(r.holds);
        assert_abs_diff_eq!(r.kappa, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.lower, 0.125, epsilon = 1e-14);
        assert_abs_diff_eq!(r.spectral_gap, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn edge_measure_is_symmetric_with_marginal_m() {
        let (k, m) = two_point();
        let e = SymmetricEdgeMeasure::new(&k, &m).unwrap();
        assert_abs_diff_eq!(e.matrix()[(0, 1)], 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(e.matrix()[(1, 0)], 0.15, epsilon = 1e-15);
        for (a, b) in e.marginal().iter().zip(&m) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(e.cross_mass(&[0]), 0.15, epsilon = 1e-15);
    }
}
