//! The invariant suite behind `verify`: every inequality and identity the
//! library is built on, checked on named families and seeded random
//! instances. Each check reports its worst violation and a witness.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{self, FiniteAction, GeneratorSet};
use crate::error::{LabError, Result};
use crate::expansion::{self, ActionKernel, DEFAULT_ALPHAS};
use crate::families::{self, Family, FamilyKind};
use crate::linalg;
use crate::markov::{self, MarkovKernel};
use crate::operator::{self, WeightedOperator};
use crate::subset;
use crate::warped::{self, FiniteMetric, SparseCone, WarpedLevel};

/// Per-check tolerances, overridable by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub detailed_balance: f64,
    /// Algebraic identities (duality, boundary symmetry, Dirichlet forms).
    pub identity: f64,
    pub eigen: f64,
    /// Slack on the inequalities (sandwich, Sobolev, transfer constants).
    pub slack: f64,
    pub cut_norm: f64,
    pub power: f64,
    pub ad: f64,
    /// Relative slack on metric constraints and triangle inequalities.
    pub triangle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            detailed_balance: 1e-10,
            identity: 1e-11,
            eigen: 1e-9,
            slack: 1e-9,
            cut_norm: 1e-10,
            power: 1e-10,
            ad: 1e-10,
            triangle: 1e-12,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 8] =
        ["detailed_balance", "identity", "eigen", "slack", "cut_norm", "power", "ad", "triangle"];

    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(LabError::InvalidParameter(format!("tolerance {key} must be finite and >= 0, got {value}")));
        }
        let slot = match key {
            "detailed_balance" => &mut self.detailed_balance,
            "identity" => &mut self.identity,
            "eigen" => &mut self.eigen,
            "slack" => &mut self.slack,
            "cut_norm" => &mut self.cut_norm,
            "power" => &mut self.power,
            "ad" => &mut self.ad,
            "triangle" => &mut self.triangle,
            _ => {
                return Err(LabError::InvalidParameter(format!(
                    "unknown tolerance {key:?}; known: {}",
                    Self::KEYS.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub k_max: u64,
    /// Level exponents: scales `2^a ..= 2^b`.
    pub levels: (u32, u32),
    pub random_kernels: usize,
    pub random_actions: usize,
    /// Run the ghost-trend check on the built-in Margulis stack.
    pub ghost: bool,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            k_max: expansion::DEFAULT_K_MAX,
            levels: (0, 6),
            random_kernels: 200,
            random_actions: 100,
            ghost: true,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// No instance was small enough (or applicable) to check.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_name: String,
    pub status: Status,
    /// Largest violation seen (0 when every instance holds with room).
    pub worst_violation: f64,
    pub tolerance: f64,
    pub instances: usize,
    /// Instance attaining the worst violation.
    pub witness: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub families: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check_name == name)
    }

    pub fn failures(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }
}

/// Running maximum of one check's violations.
struct Check {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    witness: String,
    instances: usize,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, worst: 0.0, witness: String::new(), instances: 0 }
    }

    /// Records one instance; `violation` is how far the claim fails
    /// (nonpositive when it holds). NaN counts as an infinite violation.
    fn record(&mut self, violation: f64, witness: impl FnOnce() -> String) {
        self.instances += 1;
        let v = if violation.is_nan() { f64::INFINITY } else { violation };
        if v > self.worst || self.witness.is_empty() {
            self.worst = self.worst.max(v);
            self.witness = witness();
        }
    }

    fn flag(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, witness);
    }

    fn finish(self) -> CheckResult {
        let status = if self.instances == 0 {
            Status::Skipped
        } else if self.worst <= self.tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        CheckResult {
            check_name: self.name.to_string(),
            status,
            worst_violation: self.worst,
            tolerance: self.tolerance,
            instances: self.instances,
            witness: self.witness,
        }
    }
}

/// Exhaustive subset checks run up to this many atoms.
const SMALL: usize = 12;
/// Dirichlet/boundary identities are checked on every subset up to here.
const TINY: usize = 10;
/// Neighbourhood stabilization is exhaustive up to here.
const STABILIZE: usize = 16;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn random_subset<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.random_bool(0.5)).collect()
}

fn random_nonempty<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    loop {
        let a = random_subset(rng, n);
        if !a.is_empty() {
            return a;
        }
    }
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

struct KernelCase {
    name: String,
    kernel: MarkovKernel,
    m: Vec<f64>,
}

struct ActionCase {
    name: String,
    action: FiniteAction,
    metric: FiniteMetric,
    /// Named family (as opposed to a random instance).
    builtin: bool,
}

impl ActionCase {
    fn all(&self) -> Vec<usize> {
        (0..self.action.len()).collect()
    }

    fn kernel(&self) -> Result<ActionKernel> {
        expansion::build_action_kernel(&self.action, &self.all(), &self.action.gens().all())
    }
}

/// The action with only the listed generators (closed under inverses).
fn sub_action(action: &FiniteAction, keep: &[usize]) -> Result<FiniteAction> {
    let gens = action.gens();
    let pos = |s: usize| keep.iter().position(|&k| k == s);
    let inverse_of = keep
        .iter()
        .map(|&s| pos(gens.inverse(s)).ok_or_else(|| LabError::InvalidSubset("kept generators not closed under inverse".into())))
        .collect::<Result<Vec<_>>>()?;
    let set = GeneratorSet::new(
        keep.iter().map(|&s| gens.symbol(s).to_string()).collect(),
        inverse_of,
        keep.iter().map(|&s| gens.length(s)).collect(),
    )?;
    FiniteAction::new(action.space().clone(), set, keep.iter().map(|&s| action.perm(s).to_vec()).collect())
}

fn trivial_action(action: &FiniteAction) -> Result<FiniteAction> {
    let set = GeneratorSet::from_names(&[("e", "e", 0)])?;
    FiniteAction::new(action.space().clone(), set, vec![(0..action.len()).collect()])
}

fn fmt_set(a: &[usize]) -> String {
    let mut s = String::from("[");
    for (i, x) in a.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        let _ = write!(s, "{x}");
    }
    s.push(']');
    s
}

/// Runs every check on the given families plus the seeded random sweeps.
pub fn run_suite(families: &[Family], config: &SuiteConfig) -> Result<SuiteReport> {
    let tol = &config.tolerances;
    let mut kernels = Vec::new();
    let mut actions = Vec::new();
    for f in families {
        match &f.kind {
            FamilyKind::Kernel(k) => {
                let m = k.require_reversing_measure()?.to_vec();
                kernels.push(KernelCase { name: f.name.clone(), kernel: k.clone(), m });
            }
            FamilyKind::Action { action, metric } => actions.push(ActionCase {
                name: f.name.clone(),
                action: action.clone(),
                metric: metric.clone(),
                builtin: true,
            }),
        }
    }
    for a in &actions {
        let ak = a.kernel()?;
        kernels.push(KernelCase { name: format!("{}/kernel", a.name), kernel: ak.kernel().clone(), m: ak.tilde_nu().to_vec() });
    }
    let mut rng = stream(config.seed, 1);
    for i in 0..config.random_kernels {
        let n = rng.random_range(2..=SMALL);
        kernels.push(KernelCase {
            name: format!("random-kernel#{i}(n={n})"),
            kernel: families::random_reversible_kernel(&mut rng, n)?,
            m: vec![],
        });
        let last = kernels.last_mut().expect("pushed");
        last.m = last.kernel.require_reversing_measure()?.to_vec();
    }
    let mut rng = stream(config.seed, 2);
    for i in 0..config.random_actions {
        let n = rng.random_range(2..=TINY);
        let pairs = rng.random_range(1..=2);
        let action = families::random_weighted_action(&mut rng, n, pairs)?;
        let metric = families::default_metric(&action)?;
        actions.push(ActionCase { name: format!("random-action#{i}(n={n})"), action, metric, builtin: false });
    }

    let mut checks = Vec::new();
    checks.extend(markov_checks(&kernels, config)?);
    checks.extend(action_checks(&actions, config)?);
    checks.extend(expansion_checks(&actions, config)?);
    let builtin: Vec<&ActionCase> = actions.iter().filter(|a| a.builtin).collect();
    checks.extend(warped_checks(&builtin, config)?);
    checks.extend(operator_checks(&actions, &kernels, config)?);
    let _ = tol;
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    Ok(SuiteReport { seed: config.seed, families: families.iter().map(|f| f.name.clone()).collect(), checks, passed })
}

fn markov_checks(kernels: &[KernelCase], config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let tol = &config.tolerances;
    let mut balance = Check::new("markov.detailed_balance", tol.detailed_balance);
    let mut edge = Check::new("markov.edge_measure", tol.detailed_balance);
    let mut duality = Check::new("markov.duality", tol.identity);
    let mut complement = Check::new("markov.boundary_complement", tol.identity);
    let mut indicator = Check::new("markov.dirichlet_indicator", tol.identity);
    let mut quadratic = Check::new("markov.dirichlet_quadratic_form", tol.identity);
    let mut sobolev = Check::new("markov.sobolev_step", tol.slack);
    let mut dirichlet = Check::new("markov.dirichlet_step", tol.slack);
    let mut inclusion = Check::new("markov.spectral_inclusion", tol.eigen);
    let mut sandwich = Check::new("markov.cheeger_sandwich", tol.slack);
    let mut sweep = Check::new("markov.sweep_upper_bound", tol.slack);

    let mut rng = stream(config.seed, 3);
    for case in kernels {
        let (k, m, name) = (&case.kernel, case.m.as_slice(), case.name.as_str());
        let n = k.len();
        let (res, x, y) = markov::detailed_balance_residual(k, m);
        balance.record(res, || format!("{name} at ({x},{y})"));

        let mu = markov::SymmetricEdgeMeasure::new(k, m)?;
        let marginal = mu.marginal();
        let asym = linalg::asymmetry(mu.matrix());
        let drift = marginal.iter().zip(m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        edge.record(asym.max(drift), || name.to_string());

        for _ in 0..10 {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nu: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
            let pf = markov::markov_apply(k, &f)?;
            let nup = markov::dual_apply(k, &nu)?;
            let lhs: f64 = pf.iter().zip(&nu).map(|(a, b)| a * b).sum();
            let rhs: f64 = f.iter().zip(&nup).map(|(a, b)| a * b).sum();
            duality.record((lhs - rhs).abs(), || format!("{name}, random f and nu"));
        }
        let inv = markov::dual_apply(k, m)?;
        let drift = inv.iter().zip(m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        duality.record(drift, || format!("{name}: m is not invariant"));

        let subsets: Vec<Vec<usize>> = if n <= TINY {
            (1..(1u64 << n) - 1).map(subset::members).collect()
        } else {
            (0..200).map(|_| random_subset(&mut rng, n)).collect()
        };
        for a in &subsets {
            let b = markov::boundary_size(k, m, a)?;
            let c = markov::boundary_size(k, m, &subset::complement(n, a))?;
            complement.record((b - c).abs(), || format!("{name} A={}", fmt_set(a)));
            if n <= TINY {
                let chi: Vec<f64> = (0..n).map(|x| if a.contains(&x) { 1.0 } else { 0.0 }).collect();
                for p in [1.0, 2.0, 3.0] {
                    let e = markov::dirichlet_energy_real(k, m, &chi, p)?;
                    indicator.record((e - b).abs(), || format!("{name} A={} p={p}", fmt_set(a)));
                }
            }
        }

        let sym = markov::symmetrized_matrix(k, m);
        for _ in 0..100 {
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let e = markov::dirichlet_energy_real(k, m, &f, 2.0)?;
            let pf = markov::markov_apply(k, &f)?;
            let norm: f64 = f.iter().zip(m).map(|(v, w)| v * v * w).sum();
            let inner: f64 = (0..n).map(|x| f[x] * pf[x] * m[x]).sum();
            quadratic.record((e - (norm - inner)).abs(), || format!("{name}, random f"));
        }

        let spectrum = markov::lambda2(k, m)?;
        let top = spectrum.eigenvalues[0];
        let out = spectrum.eigenvalues.iter().map(|l| (l.abs() - 1.0).max(0.0)).fold(0.0, f64::max);
        inclusion.record(out.max((top - 1.0).abs()), || format!("{name}: eigenvalues {:?}", spectrum.eigenvalues));
        if spectrum.one_eigenspace_dim == 1 {
            let root = DVector::from_iterator(n, m.iter().map(|v| v.sqrt()));
            inclusion.record((&sym * &root - &root).amax(), || format!("{name}: sqrt(m) is not fixed"));
        }

        if n <= SMALL {
            let report = markov::verify_cheeger_sandwich(k, m)?;
            if report.kappa.is_finite() {
                let gap = report.spectral_gap;
                let v = (report.lower - gap).max(gap - report.upper);
                sandwich.record(v, || format!("{name}: kappa={} gap={gap}", report.kappa));
                let up = markov::cheeger_sweep(k, m)?;
                sweep.record(report.kappa - up.kappa, || format!("{name}: sweep {} < exact {}", up.kappa, report.kappa));

                let kappa = report.kappa;
                let total: f64 = m.iter().sum();
                for _ in 0..20 {
                    let mut order: Vec<usize> = (0..n).collect();
                    for i in (1..n).rev() {
                        order.swap(i, rng.random_range(0..=i));
                    }
                    let mut support = vec![];
                    let mut mass = 0.0;
                    for &x in &order {
                        if mass + m[x] <= total / 2.0 {
                            mass += m[x];
                            support.push(x);
                        }
                    }
                    let g: Vec<f64> =
                        (0..n).map(|x| if support.contains(&x) { rng.random_range(0.0..1.0) } else { 0.0 }).collect();
                    let e1 = markov::dirichlet_energy_real(k, m, &g, 1.0)?;
                    let e2 = markov::dirichlet_energy_real(k, m, &g, 2.0)?;
                    let l1: f64 = g.iter().zip(m).map(|(v, w)| v * w).sum();
                    let l2: f64 = g.iter().zip(m).map(|(v, w)| v * v * w).sum();
                    sobolev.record(kappa * l1 - e1, || format!("{name}: support {}", fmt_set(&support)));
                    dirichlet.record(kappa * kappa / 2.0 * l2 - e2, || format!("{name}: support {}", fmt_set(&support)));
                }
            }
        }
    }
    Ok([balance, edge, duality, complement, indicator, quadratic, sobolev, dirichlet, inclusion, sandwich, sweep]
        .into_iter()
        .map(Check::finish)
        .collect())
}

fn action_checks(actions: &[ActionCase], config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let tol = &config.tolerances;
    let mut composition = Check::new("action.ball_composition", 0.0);
    let mut monotone = Check::new("action.ball_monotone", 0.0);
    let mut triangle = Check::new("action.orbit_triangle", 0.0);
    let mut inversion = Check::new("action.rn_inversion", tol.identity);
    let mut change = Check::new("action.rn_change_of_variable", tol.detailed_balance);

    let mut rng = stream(config.seed, 4);
    for case in actions {
        let (a, name) = (&case.action, case.name.as_str());
        let n = a.len();
        for _ in 0..10 {
            let set = random_nonempty(&mut rng, n);
            let k = rng.random_range(0..=4u64);
            let l = rng.random_range(0..=4u64);
            let lhs = action::ball_image(a, &action::ball_image(a, &set, k)?, l)?;
            let rhs = action::ball_image(a, &set, k + l)?;
            composition.flag(is_subset(&lhs, &rhs), || format!("{name} A={} k={k} l={l}", fmt_set(&set)));

            let mut bigger = set.clone();
            bigger.extend(random_subset(&mut rng, n));
            let bigger = subset::normalized(&bigger);
            let small = action::ball_image(a, &set, k)?;
            let large = action::ball_image(a, &bigger, k + l)?;
            let ok = is_subset(&set, &small) && is_subset(&small, &large);
            monotone.flag(ok, || format!("{name} A={} A'={} k={k} k'={}", fmt_set(&set), fmt_set(&bigger), k + l));
        }
        let dist = action::orbit_distance_matrix(a);
        let mut worst = (true, String::new());
        'outer: for x in 0..n {
            for y in 0..n {
                if dist[x][y] != dist[y][x] {
                    worst = (false, format!("{name}: d({x},{y}) is not symmetric"));
                    break 'outer;
                }
                for z in 0..n {
                    if let (Some(xy), Some(yz)) = (dist[x][y], dist[y][z]) {
                        if dist[x][z].is_none_or(|xz| xz > xy + yz) {
                            worst = (false, format!("{name}: ({x},{y},{z})"));
                            break 'outer;
                        }
                    }
                }
            }
        }
        triangle.flag(worst.0, || if worst.1.is_empty() { name.to_string() } else { worst.1.clone() });

        let table = action::rn_table(a);
        inversion.record(table.inversion_residual(a), || name.to_string());
        for _ in 0..5 {
            let y = random_nonempty(&mut rng, n);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            for s in 0..a.gens().len() {
                let r = table.change_of_variable_residual(a, s, &y, &f);
                change.record(r, || format!("{name} s={} Y={}", a.gens().symbol(s), fmt_set(&y)));
            }
        }
    }
    Ok([composition, monotone, triangle, inversion, change].into_iter().map(Check::finish).collect())
}

fn expansion_checks(actions: &[ActionCase], config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let tol = &config.tolerances;
    let mut reversible = Check::new("expansion.kernel_reversible", tol.detailed_balance);
    let mut bounds = Check::new("expansion.measure_bounds", tol.identity);
    let mut edge_vertex = Check::new("expansion.edge_vertex_estimate", tol.slack);
    let mut preserving = Check::new("expansion.measure_preserving_equivalence", tol.identity);
    let mut vertex_to_markov = Check::new("expansion.vertex_to_markov_transfer", tol.slack);
    let mut markov_to_vertex = Check::new("expansion.markov_to_vertex_transfer", tol.slack);
    let mut witness = Check::new("expansion.profile_witness", tol.identity);
    let mut local_gap = Check::new("expansion.local_gap", tol.slack);

    let mut rng = stream(config.seed, 5);
    for case in actions {
        let (a, name) = (&case.action, case.name.as_str());
        let n = a.len();
        let gens = a.gens().all();
        let mut domains = vec![case.all()];
        if !case.builtin {
            domains.push(random_nonempty(&mut rng, n));
        }
        for y in &domains {
            let ak = expansion::build_action_kernel(a, y, &gens)?;
            let label = || format!("{name} Y={}", fmt_set(y));
            let (res, ..) = markov::detailed_balance_residual(ak.kernel(), ak.tilde_nu());
            reversible.record(res, label);
            if y.len() > SMALL {
                continue;
            }
            let nu = a.space().weights();
            let nu_y: f64 = y.iter().map(|&x| nu[x]).sum();
            let s_count = gens.len() as f64;
            for mask in 1u64..(1 << y.len()) {
                let (mut m_a, mut t_a) = (0.0, 0.0);
                for i in subset::members(mask) {
                    m_a += nu[y[i]];
                    t_a += ak.tilde_nu()[i];
                }
                let upper = s_count * (m_a * nu_y).sqrt();
                let v = (m_a - t_a).max(t_a - upper) / nu_y;
                bounds.record(v, || format!("{name} Y={} A={}", fmt_set(y), fmt_set(&subset::members_in(mask, y))));
            }
            let ev = expansion::edge_vertex_comparison(&ak)?;
            let v = if ev.holds() { (-ev.worst_slack).min(0.0) } else { (-ev.worst_slack).max(f64::MIN_POSITIVE) };
            edge_vertex.record(v, || format!("{name} Y={} A={}", fmt_set(y), fmt_set(&ev.worst_subset)));

            let vertex = expansion::vertex_expansion_constant(a, y, &gens)?;
            let kappa = expansion::markov_expansion_constant(&ak)?.kappa;
            let theta = ak.theta();
            if vertex.c.is_finite() && kappa.is_finite() {
                const POSITIVE: f64 = 1e-12;
                let equivalent = (vertex.c > POSITIVE) == (kappa > POSITIVE);
                vertex_to_markov.flag(equivalent, || format!("{name} Y={}: c={} kappa={kappa}", fmt_set(y), vertex.c));
                if vertex.c > POSITIVE {
                    let bound = vertex.c / (s_count * theta);
                    vertex_to_markov.record(bound - kappa, || format!("{name} Y={}: c={} kappa={kappa}", fmt_set(y), vertex.c));
                }
                if kappa > POSITIVE {
                    let bound = kappa / (s_count * theta.sqrt() + kappa);
                    markov_to_vertex.record(bound - vertex.c, || format!("{name} Y={}: c={} kappa={kappa}", fmt_set(y), vertex.c));
                }
                if a.space().is_uniform() {
                    let drift = y
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| (ak.tilde_nu()[i] - s_count * nu[x]).abs())
                        .fold(0.0, f64::max);
                    preserving.record(drift, || format!("{name}: tilde nu != |S| nu"));
                    preserving.flag(equivalent, || format!("{name}: c={} kappa={kappa}", vertex.c));
                }
            }
        }

        if n <= SMALL {
            let all = case.all();
            let profile = expansion::asymptotic_profile(a, &all, &DEFAULT_ALPHAS, config.k_max)?;
            for r in profile.records.iter().chain(&profile.upper_range) {
                if r.witness.is_empty() {
                    continue;
                }
                let k = r.k.unwrap_or(config.k_max);
                let c = r.c.or(r.c_at_last_k).expect("witnessed records carry a value");
                let again = expansion::ball_growth_ratio(a, &all, &r.witness, k)? - 1.0;
                witness.record((again - c).abs(), || format!("{name} alpha={} A={}", r.alpha, fmt_set(&r.witness)));
            }

            let report = expansion::local_spectral_gap(a, &all, &gens)?;
            let split = a.orbits().len() > 1;
            let zero = report.lambda_q <= tol.eigen;
            local_gap.flag(split == zero, || format!("{name}: lambda_Q={} orbits={}", report.lambda_q, a.orbits().len()));
            let v = if report.markov_bound_holds { 0.0 } else { 1.0 };
            local_gap.record(v, || format!("{name}: lambda_Q={} below 2(1-lambda2)/sqrt(theta)", report.lambda_q));
        }
    }
    Ok([reversible, bounds, edge_vertex, preserving, vertex_to_markov, markov_to_vertex, witness, local_gap]
        .into_iter()
        .map(Check::finish)
        .collect())
}

fn scales(config: &SuiteConfig) -> Vec<f64> {
    (config.levels.0..=config.levels.1).map(|e| 2f64.powi(e as i32)).collect()
}

fn warped_checks(actions: &[&ActionCase], config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let tol = &config.tolerances;
    let mut constraints = Check::new("warped.level_constraints", tol.triangle);
    let mut monotone = Check::new("warped.monotone", tol.triangle);
    let mut words = Check::new("warped.word_bound", tol.triangle);
    let mut trivial = Check::new("warped.trivial_group", 0.0);
    let mut cone = Check::new("warped.cone_triangle", tol.triangle);
    let mut stabilize = Check::new("warped.neighbourhood_stabilization", 0.0);

    let ts = scales(config);
    let mut rng = stream(config.seed, 6);
    for case in actions {
        let (a, name) = (&case.action, case.name.as_str());
        let metric = warped::normalize_diameter(&case.metric)?;
        let n = a.len();
        let built = SparseCone::build(&metric, a, &ts)?;
        let levels = built.levels();
        let plain = trivial_action(a)?;
        let non_identity: Vec<usize> = (0..a.gens().len()).filter(|&s| Some(s) != a.gens().identity()).collect();
        let reduced = match non_identity.first() {
            Some(&s) if non_identity.len() > 2 || (non_identity.len() == 2 && a.gens().inverse(s) == s) => {
                let drop = [s, a.gens().inverse(s)];
                let keep: Vec<usize> = (0..a.gens().len()).filter(|g| !drop.contains(g)).collect();
                Some(sub_action(a, &keep)?)
            }
            _ => None,
        };

        for (li, level) in levels.iter().enumerate() {
            let t = level.t();
            let scale = tol::scale(t, metric.diameter());
            let c = level.check();
            let v = c.above_scaled.max(c.above_generator).max(c.triangle).max(c.optimality);
            constraints.record(v - scale + tol.triangle, || format!("{name} t={t}"));

            let base = warped::warp(&metric, &plain, t)?;
            let exact = (0..n)
                .flat_map(|x| (0..n).map(move |y| (x, y)))
                .map(|(x, y)| (base.distance(x, y) - t * metric.dist()[(x, y)]).abs())
                .fold(0.0, f64::max);
            trivial.record(exact, || format!("{name} t={t}"));

            let mut worse = 0.0f64;
            if let Some(next) = levels.get(li + 1) {
                for x in 0..n {
                    for y in 0..n {
                        worse = worse.max(level.distance(x, y) - next.distance(x, y));
                        worse = worse.max(level.distance(x, y) - base.distance(x, y));
                    }
                }
            }
            if let Some(r) = &reduced {
                let fewer = warped::warp(&metric, r, t)?;
                for x in 0..n {
                    for y in 0..n {
                        worse = worse.max(level.distance(x, y) - fewer.distance(x, y));
                    }
                }
            }
            monotone.record(worse - scale + tol.triangle, || format!("{name} t={t}"));

            let g = a.gens().len();
            let mut worst_word = (f64::NEG_INFINITY, vec![]);
            let mut word = vec![];
            for len in 1..=4usize {
                for code in 0..g.pow(len as u32) {
                    word.clear();
                    let mut c = code;
                    for _ in 0..len {
                        word.push(c % g);
                        c /= g;
                    }
                    let ell: f64 = word.iter().map(|&s| a.gens().length(s) as f64).sum();
                    for x in 0..n {
                        let v = level.distance(x, a.apply_word(&word, x)) - ell;
                        if v > worst_word.0 {
                            worst_word = (v, word.clone());
                        }
                    }
                }
            }
            let symbols: Vec<&str> = worst_word.1.iter().map(|&s| a.gens().symbol(s)).collect();
            words.record(worst_word.0 - scale + tol.triangle, || format!("{name} t={t} word {symbols:?}"));
        }

        for _ in 0..200 {
            let p: Vec<(usize, f64)> = (0..3).map(|_| (rng.random_range(0..n), ts[rng.random_range(0..ts.len())])).collect();
            let d = |u: (usize, f64), v: (usize, f64)| warped::cone_distance(&built, u, v);
            let v = d(p[0], p[2])? - d(p[0], p[1])? - d(p[1], p[2])?;
            let scale = tol::scale(*ts.last().expect("levels"), 2.0);
            cone.record(v - scale + tol.triangle, || format!("{name} points {p:?}"));
        }

        if n <= STABILIZE {
            for r in 0..=3u32 {
                let r = f64::from(r);
                let threshold = r / metric.min_gap();
                let above: Vec<&WarpedLevel> = levels.iter().filter(|l| l.t() > threshold).collect();
                stabilize.flag(!above.is_empty(), || format!("{name} R={r}: levels above t={threshold}"));
                let mut failure = None;
                for mask in 1u64..(1 << n) {
                    let set = subset::members(mask);
                    let ball = action::ball_image(a, &set, r as u64)?;
                    let nbhds: Vec<Vec<usize>> = levels.iter().map(|l| l.neighbourhood(&set, r)).collect();
                    let nested = nbhds.windows(2).all(|w| is_subset(&w[1], &w[0]));
                    let contains = nbhds.iter().all(|nb| is_subset(&ball, nb));
                    let stable = levels.iter().zip(&nbhds).filter(|(l, _)| l.t() > threshold).all(|(_, nb)| *nb == ball);
                    if !(nested && contains && stable) {
                        failure = Some(set);
                        break;
                    }
                }
                stabilize.flag(failure.is_none(), || format!("{name} R={r} A={}", fmt_set(failure.as_deref().unwrap_or(&[]))));
            }
        }
    }
    Ok([constraints, monotone, words, trivial, cone, stabilize].into_iter().map(Check::finish).collect())
}

fn operator_checks(actions: &[ActionCase], kernels: &[KernelCase], config: &SuiteConfig) -> Result<Vec<CheckResult>> {
    let tol = &config.tolerances;
    let mut cut = Check::new("operator.cut_norm_formula", tol.cut_norm);
    let mut iff = Check::new("operator.quasi_locality_iff_expansion", 0.0);
    let mut floor = Check::new("operator.quasi_locality_split_floor", tol.cut_norm);
    let mut profile = Check::new("operator.quasi_locality_witness", tol.cut_norm);
    let mut products = Check::new("operator.propagation_products", 0.0);
    let mut power = Check::new("operator.power_convergence", tol.power);
    let mut dyn_warped = Check::new("operator.dynamical_to_warped", tol.triangle);
    let mut warped_below = Check::new("operator.warped_below_dynamical", tol.cut_norm);
    let mut hat = Check::new("operator.hat_projection", tol.identity);
    let mut ad = Check::new("operator.ad_identity", tol.ad);
    let mut witness = Check::new("operator.finite_propagation_witness", tol.power);
    let mut ghost = Check::new("operator.ghost_trend", 0.0);
    let mut poincare = Check::new("operator.poincare_inequality", tol.slack);

    let ts = scales(config);
    let mut rng = stream(config.seed, 7);
    for case in actions {
        let (a, name) = (&case.action, case.name.as_str());
        let n = a.len();
        let all = case.all();
        let space = a.space();
        let p_x = operator::averaging_projection(space, &all)?;
        let p_op = p_x.operator();
        for _ in 0..200 {
            let s = random_subset(&mut rng, n);
            let c = random_subset(&mut rng, n);
            let formula = (space.mass_of(&s) * space.mass_of(&c)).sqrt() / space.total_mass();
            let v = (operator::cut_norm(&p_op, &s, &c)? - formula).abs();
            cut.record(v, || format!("{name} A={} C={}", fmt_set(&s), fmt_set(&c)));
        }
        if !case.builtin {
            continue;
        }

        let ak = case.kernel()?;
        let dist = action::orbit_distance_matrix(a);
        let diameter = dist.iter().flatten().filter_map(|d| *d).max().unwrap_or(0);

        if n <= SMALL {
            let ks: Vec<u64> = (0..=diameter.max(config.k_max)).collect();
            let prof = operator::rho_quasi_locality_rank_one(&p_x, a, &ks)?;
            let decays = prof.eps[diameter as usize] <= tol.cut_norm;
            let k_max = config.k_max.max(diameter);
            let expanding = expansion::asymptotic_profile(a, &all, &DEFAULT_ALPHAS, k_max)?.expanding_everywhere();
            iff.flag(decays == expanding, || format!("{name}: eps(diam)={} expanding={expanding}", prof.eps[diameter as usize]));
            for orbit in a.orbits().iter().filter(|o| o.len() < n) {
                let bound = (space.mass_of(orbit) * (space.total_mass() - space.mass_of(orbit))).sqrt() / space.total_mass();
                for (k, e) in ks.iter().zip(&prof.eps) {
                    floor.record(bound - e, || format!("{name} orbit {} k={k}", fmt_set(orbit)));
                }
            }
            let general = operator::rho_quasi_locality_profile(&p_op, a, &ks)?;
            for (i, k) in ks.iter().enumerate() {
                let (wa, wc) = &general.witnesses[i];
                if wa.is_empty() {
                    profile.record(general.eps[i], || format!("{name} k={k}: no admissible pair"));
                    continue;
                }
                let reach = action::ball_image(a, wa, *k)?;
                let admissible = wc.iter().all(|x| reach.binary_search(x).is_err());
                let again = operator::cut_norm(&p_op, wa, wc)?;
                let v = (again - general.eps[i]).abs().max((general.eps[i] - prof.eps[i]).abs());
                profile.record(if admissible { v } else { f64::INFINITY }, || format!("{name} k={k}"));
            }
            let rise = general.eps.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            profile.record(rise, || format!("{name}: profile increases"));

            let built = SparseCone::build(&warped::normalize_diameter(&case.metric)?, a, &ts)?;
            let rs = [0.5, 1.0, 1.5, 2.0, 3.0];
            let dynamic = operator::rho_quasi_locality_profile(&p_op, a, &[0, 1, 2, 3])?;
            for level in built.levels() {
                let wp = operator::warped_quasi_locality_profile(&p_op, level, &rs)?;
                for (r, e) in rs.iter().zip(&wp.eps) {
                    let v = e - dynamic.eps[r.floor() as usize];
                    warped_below.record(v, || format!("{name} t={} R={r}", level.t()));
                }
            }
        }

        let g = a.gens().len();
        let sizes: Vec<f64> = ts.clone();
        let built = SparseCone::build(&warped::normalize_diameter(&case.metric)?, a, &sizes)?;
        for _ in 0..20 {
            let len = rng.random_range(1..=4);
            let word: Vec<usize> = (0..len).map(|_| rng.random_range(0..g)).collect();
            let mut op = WeightedOperator::identity(space.clone());
            for &s in &word {
                op = WeightedOperator::generator(a, s).compose(&op)?;
            }
            let bound: u64 = word.iter().map(|&s| a.gens().length(s) as u64).sum();
            let prop = operator::rho_propagation(&op, a)?;
            let symbols: Vec<&str> = word.iter().map(|&s| a.gens().symbol(s)).collect();
            products.flag(prop.is_some_and(|p| p <= bound), || format!("{name} word {symbols:?}: propagation {prop:?}, length {bound}"));
            if let Some(k) = prop {
                dyn_warped.record(max_coupled_distance(&op, &built) - k as f64, || format!("{name} word {symbols:?}"));
            }
        }

        let spectrum = ak.spectrum()?;
        if spectrum.has_gap() {
            let report = operator::markov_power_projection(&ak, 50)?;
            for s in &report.steps {
                let prop_ok = match (s.propagation, s.propagation_bound) {
                    (Some(Some(p)), Some(b)) => p <= b,
                    _ => false,
                };
                power.record(if prop_ok { s.norm - s.bound } else { f64::INFINITY }, || format!("{name} n={}", s.n));
            }
            let pw = operator::hat_embedding_projection(&ak)?.operator();
            let small = markov::symmetrized_matrix(ak.kernel(), ak.tilde_nu());
            let hat_markov = WeightedOperator::from_orthonormal(space.clone(), embed(&small, ak.y(), n), "hat markov")?;
            let mut op = hat_markov.clone();
            for step in 1..=3u64 {
                let k = operator::rho_propagation(&op, a)?.unwrap_or(u64::MAX);
                dyn_warped.record(max_coupled_distance(&op, &built) - k as f64, || format!("{name} hat power {step}"));
                op = op.compose(&hat_markov)?;
            }
            let lambda_hat = report.lambda_hat;
            let max_len = a.gens().max_length(ak.gens()).max(1) as u64;
            for k in [0, max_len, 2 * max_len, diameter] {
                let w = operator::finite_propagation_witness(&ak, k)?;
                let rate = if w.power_n == 0 { 1.0 } else { lambda_hat.powi(w.power_n as i32) };
                witness.record(w.markov_power - rate, || format!("{name} k={k}"));
                if k >= diameter {
                    witness.record(w.truncation, || format!("{name} k={k}: truncation"));
                }
            }
            let _ = pw;

            for level in built.levels().iter().take(2) {
                let mut embeddings: Vec<Vec<Vec<f64>>> =
                    (0..3).map(|_| (0..n).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()).collect();
                embeddings.push(operator::kuratowski_embedding(level));
                let levels: Vec<WarpedLevel> = embeddings.iter().map(|_| level.clone()).collect();
                let r = operator::poincare_obstruction_witness(&ak, &embeddings, &levels)?;
                for l in &r.levels {
                    poincare.record(-l.worst_slack, || format!("{name} t={}", level.t()));
                }
            }
        }

        let proj = operator::hat_embedding_projection(&ak)?;
        let (idem, asym) = proj.projection_defects();
        hat.record(idem.max(asym), || format!("{name}: projection defects"));
        if space.is_uniform() {
            hat.record((proj.xi() - p_x.xi()).amax(), || format!("{name}: hat projection != P_X"));
        }
        let report = operator::ad_embedding_projection(&ak, 0)?;
        ad.record(report.deviation, || format!("{name}: scale {}", report.scale));
    }

    for case in kernels.iter().filter(|k| !k.name.contains('/') && !k.name.starts_with("random")) {
        let report = operator::markov_power_projection_kernel(&case.kernel, &case.m, 50)?;
        if report.has_gap {
            for s in &report.steps {
                power.record(s.norm - s.bound, || format!("{} n={}", case.name, s.n));
            }
        }
    }

    if config.ghost {
        let stack = families::margulis_ghost_stack(&families::GHOST_SIDES)?;
        let g = operator::ghost_profile_refining(&stack, families::GHOST_RADIUS)?;
        let values: Vec<f64> = g.levels.iter().map(|l| l.g).collect();
        ghost.flag(g.strictly_decreasing(), || format!("margulis sides {:?}: g = {values:?}", families::GHOST_SIDES));
    }

    Ok([cut, iff, floor, profile, products, power, dyn_warped, warped_below, hat, ad, witness, ghost, poincare]
        .into_iter()
        .map(Check::finish)
        .collect())
}

/// Zero-extends a `Y × Y` matrix to `X × X`.
fn embed(small: &nalgebra::DMatrix<f64>, y: &[usize], n: usize) -> nalgebra::DMatrix<f64> {
    let mut out = nalgebra::DMatrix::zeros(n, n);
    for (i, &x) in y.iter().enumerate() {
        for (j, &z) in y.iter().enumerate() {
            out[(x, z)] = small[(i, j)];
        }
    }
    out
}

/// Largest warped distance, over all levels, between coordinates that `T`
/// couples.
fn max_coupled_distance(t: &WeightedOperator, cone: &SparseCone) -> f64 {
    let n = t.len();
    let mut worst = 0.0f64;
    for level in cone.levels() {
        for x in 0..n {
            for y in 0..n {
                if t.matrix()[(x, y)].abs() > crate::tol::ENTRY {
                    worst = worst.max(level.distance(x, y));
                }
            }
        }
    }
    worst
}

mod tol {
    /// Absolute slack for a quantity of size `t · diameter`.
    pub fn scale(t: f64, diameter: f64) -> f64 {
        crate::tol::TRIANGLE * t.max(1.0) * diameter.max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SuiteConfig {
        SuiteConfig { random_kernels: 10, random_actions: 5, ghost: false, ..SuiteConfig::default() }
    }

    #[test]
    fn passes_on_small_builtins() {
        let fams = families::expand(&[
            families::Builtin::Cycle(4),
            families::Builtin::WeightedCycle(2),
            families::Builtin::TwoPoint(0.3, 0.3),
            families::Builtin::SplitCycle(3),
        ])
        .unwrap();
        let report = run_suite(&fams, &small_config()).unwrap();
        for c in &report.checks {
            assert_ne!(c.status, Status::Fail, "{c:?}");
        }
        assert!(report.passed);
        assert!(report.checks.len() >= 25);
    }

    #[test]
    fn deterministic_given_seed() {
        let fams = families::expand(&[families::Builtin::Cycle(4)]).unwrap();
        let a = run_suite(&fams, &small_config()).unwrap();
        let b = run_suite(&fams, &small_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_tolerance_fails() {
        let fams = families::expand(&[families::Builtin::Cycle(4)]).unwrap();
        let mut config = small_config();
        config.tolerances.identity = 0.0;
        config.tolerances.detailed_balance = 0.0;
        let report = run_suite(&fams, &config).unwrap();
        assert!(!report.passed);
        assert!(report.failures().iter().all(|c| c.worst_violation > 0.0 && !c.witness.is_empty()));
    }

    #[test]
    fn tolerance_keys() {
        let mut t = Tolerances::default();
        t.set("cut_norm", 1e-8).unwrap();
        assert_eq!(t.cut_norm, 1e-8);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("slack", -1.0).is_err());
    }

    #[test]
    fn violations_are_reported() {
        let mut c = Check::new("x", 1e-9);
        c.record(-1.0, || "a".into());
        c.record(0.5, || "b".into());
        c.record(0.1, || "c".into());
        let r = c.finish();
        assert_eq!((r.status, r.worst_violation, r.witness.as_str()), (Status::Fail, 0.5, "b"));
        assert_eq!(Check::new("y", 0.0).finish().status, Status::Skipped);
    }
}
