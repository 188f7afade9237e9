//! Command-line front end: loads or generates actions and kernels, runs the
//! analyses and the invariant suite, and renders JSON or CSV reports.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use warpcone_core::action::{self, ChainSpec, FiniteAction};
use warpcone_core::expansion::{self, ActionKernel, DEFAULT_ALPHAS, DEFAULT_BETAS};
use warpcone_core::families::{self, Builtin, Family, FamilyKind};
use warpcone_core::io::{self, ActionDoc, ChainDoc, Document, KernelDoc};
use warpcone_core::markov::{self, MarkovKernel};
use warpcone_core::operator::{self, WeightedOperator};
use warpcone_core::suite::{self, SuiteConfig};
use warpcone_core::warped::{self, FiniteMetric, SparseCone, WarpedLevel};
use warpcone_core::{tol, FiniteMeasureSpace, LabError};

#[derive(Debug, Parser)]
#[command(name = "warpcone", version, about = "Markov expansion, warped cones and quasi-local operators on finite actions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Kernel, action or chain JSON document.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Report destination (stdout when omitted).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,
    /// Largest number of atoms for exhaustive subset enumeration.
    #[arg(long, global = true, default_value_t = tol::ENUMERATION_CAP, value_parser = positive_usize)]
    pub cap: usize,
    #[arg(long = "k-max", global = true, default_value_t = expansion::DEFAULT_K_MAX, value_parser = positive_u64)]
    pub k_max: u64,
    /// Comma-separated warping scales.
    #[arg(long = "t-list", global = true, value_delimiter = ',', value_parser = positive_f64)]
    pub t_list: Option<Vec<f64>>,
    /// Dyadic scales `2^a..2^b`.
    #[arg(long, global = true, value_parser = parse_levels)]
    pub levels: Option<(u32, u32)>,
    /// Built-in family: `all` or a `;`-separated list such as `cycle:8;two-point:0.3,0.3`.
    #[arg(long, global = true)]
    pub builtin: Option<String>,
    /// Override a verify tolerance, e.g. `--tolerance slack=1e-8`.
    #[arg(long, global = true, value_parser = parse_tolerance)]
    pub tolerance: Vec<(String, f64)>,
}

#[derive(Debug, Subcommand, Clone)]
pub enum Command {
    /// Write a kernel, action or chain document for a built-in or random family.
    Gen {
        /// Random reversible kernel on this many atoms (seeded).
        #[arg(long, conflicts_with = "random_action")]
        random_kernel: Option<usize>,
        /// Random weighted action on this many atoms (seeded).
        #[arg(long)]
        random_action: Option<usize>,
    },
    /// Transition matrix, reversing measure and edge measure.
    Kernel,
    /// Exact Cheeger constant and the spectral sandwich.
    Cheeger,
    /// Spectrum of the symmetrized Markov operator.
    Spectrum,
    /// Vertex and Markov expansion, edge/vertex comparison, profile and local gap.
    Expansion,
    /// Warped metrics at each scale.
    Warp {
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Operator laboratory.
    Oplab {
        #[arg(value_enum)]
        mode: OplabMode,
        /// Ball radius for the ghost statistic.
        #[arg(long, default_value_t = families::GHOST_RADIUS)]
        radius: f64,
        /// Ghost statistic on the Margulis tori of these sides, warped at t = side.
        #[arg(long, value_delimiter = ',')]
        sides: Option<Vec<usize>>,
        /// Largest Markov power.
        #[arg(long, default_value_t = 50)]
        n_max: usize,
    },
    /// Run the invariant suite.
    Verify {
        #[arg(long, default_value_t = 200)]
        random_kernels: usize,
        #[arg(long, default_value_t = 100)]
        random_actions: usize,
        /// Skip the Margulis ghost-trend check.
        #[arg(long)]
        no_ghost: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OplabMode {
    Propagation,
    Qlocal,
    Power,
    Ghost,
    Poincare,
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive scale, got {s:?}")),
    }
}

fn parse_levels(s: &str) -> Result<(u32, u32), String> {
    let err = || format!("expected 2^a..2^b, got {s:?}");
    let (lo, hi) = s.split_once("..").ok_or_else(err)?;
    let exp = |p: &str| p.trim().strip_prefix("2^").and_then(|e| e.parse::<u32>().ok()).ok_or_else(err);
    let (a, b) = (exp(lo)?, exp(hi)?);
    if a > b || b > 30 {
        return Err(format!("need a <= b <= 30 in 2^a..2^b, got {s:?}"));
    }
    Ok((a, b))
}

fn parse_tolerance(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// What a command produced: the report text and whether it passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub passed: bool,
}

#[derive(Debug)]
pub enum CliError {
    Lab(LabError),
    Io { path: PathBuf, message: String },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lab(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

impl CliError {
    /// 3 for an exceeded enumeration cap, 2 for every input problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lab(LabError::CapExceeded { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;

/// Runs the command, writes the report and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli).and_then(|outcome| write_report(&cli.common, &outcome).map(|_| outcome)) {
        Ok(outcome) if outcome.passed => EXIT_OK,
        Ok(_) => EXIT_VERIFY_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn write_report(common: &Common, outcome: &Outcome) -> CliResult<()> {
    match &common.output {
        Some(path) => std::fs::write(path, &outcome.report)
            .map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() }),
        None => {
            print!("{}", outcome.report);
            Ok(())
        }
    }
}

/// Runs the command and renders its report without writing it.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    let common = &cli.common;
    let done = |command: &str, body: Value| Ok(Outcome { report: io::report_json(command, &body), passed: true });
    match &cli.command {
        Command::Gen { random_kernel, random_action } => gen(common, *random_kernel, *random_action),
        Command::Kernel => done("kernel", per_family(&load(common)?, kernel_report)?),
        Command::Cheeger => done("cheeger", per_family(&load(common)?, |f| cheeger_report(f, common.cap))?),
        Command::Spectrum => done("spectrum", per_family(&load(common)?, spectrum_report)?),
        Command::Expansion => done("expansion", per_family(&load(common)?, |f| expansion_report(f, common))?),
        Command::Warp { format } => warp_command(common, *format),
        Command::Oplab { mode, radius, sides, n_max } => {
            let body = match (mode, sides) {
                (OplabMode::Ghost, Some(sides)) => ghost_stack_report(sides, *radius)?,
                _ => per_family(&load(common)?, |f| oplab_report(f, *mode, *radius, *n_max, common))?,
            };
            let name = format!("oplab {}", mode.to_possible_value().expect("no skipped variants").get_name());
            done(&name, body)
        }
        Command::Verify { random_kernels, random_actions, no_ghost } => {
            let families = if common.input.is_some() || common.builtin.is_some() {
                load(common)?
            } else {
                families::expand(&families::ALL)?
            };
            let mut config = SuiteConfig {
                seed: common.seed,
                k_max: common.k_max,
                random_kernels: *random_kernels,
                random_actions: *random_actions,
                ghost: !no_ghost,
                ..SuiteConfig::default()
            };
            if let Some(levels) = common.levels {
                config.levels = levels;
            }
            for (key, value) in &common.tolerance {
                config.tolerances.set(key, *value)?;
            }
            let report = suite::run_suite(&families, &config)?;
            Ok(Outcome { report: io::report_json("verify", &report), passed: report.passed })
        }
    }
}

fn load(common: &Common) -> CliResult<Vec<Family>> {
    if let Some(path) = &common.input {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
        let doc = io::parse_document(&text)?;
        return Ok(match doc {
            Document::Kernel(k) => vec![Family { name: stem, kind: FamilyKind::Kernel(k) }],
            Document::Action { action, metric } => {
                let metric = match metric {
                    Some(m) => m,
                    None => families::default_metric(&action)?,
                };
                vec![Family { name: stem, kind: FamilyKind::Action { action, metric } }]
            }
            Document::Chain(levels) => levels
                .into_iter()
                .enumerate()
                .map(|(i, action)| {
                    let metric = families::default_metric(&action)?;
                    Ok(Family { name: format!("{stem}/level{}", i + 1), kind: FamilyKind::Action { action, metric } })
                })
                .collect::<Result<_, LabError>>()?,
        });
    }
    match &common.builtin {
        Some(s) => Ok(families::expand(&families::parse_builtins(s)?)?),
        None => Err(LabError::InvalidParameter("pass --input FILE or --builtin NAME".into()).into()),
    }
}

/// A single family's report inline; several as a named list.
fn per_family(families: &[Family], f: impl Fn(&Family) -> CliResult<Value>) -> CliResult<Value> {
    if let [one] = families {
        let mut body = f(one)?;
        body.as_object_mut().expect("reports are objects").insert("family".into(), json!(one.name));
        return Ok(body);
    }
    let list = families
        .iter()
        .map(|fam| {
            let mut body = f(fam)?;
            body.as_object_mut().expect("reports are objects").insert("family".into(), json!(fam.name));
            Ok(body)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(json!({ "families": list }))
}

fn gen(common: &Common, random_kernel: Option<usize>, random_action: Option<usize>) -> CliResult<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let text = if let Some(n) = random_kernel {
        io::to_json(&KernelDoc::from_kernel(&families::random_reversible_kernel(&mut rng, n)?))
    } else if let Some(n) = random_action {
        let action = families::random_weighted_action(&mut rng, n, 2)?;
        io::to_json(&ActionDoc::from_action(&action, None))
    } else {
        let spec = common
            .builtin
            .as_deref()
            .ok_or_else(|| LabError::InvalidParameter("gen needs --builtin, --random-kernel or --random-action".into()))?;
        let builtins = families::parse_builtins(spec)?;
        let [builtin] = builtins.as_slice() else {
            return Err(LabError::InvalidParameter(format!("gen writes one family; {spec:?} names {}", builtins.len())).into());
        };
        match builtin {
            Builtin::SchreierDyadic(d) => io::to_json(&ChainDoc::from_spec(&ChainSpec::dyadic(*d)?)),
            other => match &other.families()?[0].kind {
                FamilyKind::Kernel(k) => io::to_json(&KernelDoc::from_kernel(k)),
                FamilyKind::Action { action, metric } => io::to_json(&ActionDoc::from_action(action, Some(metric))),
            },
        }
    };
    Ok(Outcome { report: text, passed: true })
}

fn ids(space: &FiniteMeasureSpace, subset: &[usize]) -> Vec<String> {
    subset.iter().map(|&x| space.point_ids()[x].clone()).collect()
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn all_atoms(action: &FiniteAction) -> Vec<usize> {
    (0..action.len()).collect()
}

fn action_kernel(action: &FiniteAction) -> CliResult<ActionKernel> {
    Ok(expansion::build_action_kernel(action, &all_atoms(action), &action.gens().all())?)
}

/// The reversible kernel a family carries: its own, or the normalized local
/// kernel on `Y = X` with every generator.
fn kernel_of(family: &Family) -> CliResult<(MarkovKernel, Vec<f64>, Option<ActionKernel>)> {
    match &family.kind {
        FamilyKind::Kernel(k) => Ok((k.clone(), k.require_reversing_measure()?.to_vec(), None)),
        FamilyKind::Action { action, .. } => {
            let ak = action_kernel(action)?;
            Ok((ak.kernel().clone(), ak.tilde_nu().to_vec(), Some(ak)))
        }
    }
}

fn require_action(family: &Family) -> CliResult<(&FiniteAction, &FiniteMetric)> {
    family.action().ok_or_else(|| {
        LabError::InvalidParameter(format!("{} is a kernel; this command needs a group action", family.name)).into()
    })
}

fn kernel_report(family: &Family) -> CliResult<Value> {
    let (k, m, ak) = kernel_of(family)?;
    let (residual, x, y) = markov::detailed_balance_residual(&k, &m);
    let mu = markov::SymmetricEdgeMeasure::new(&k, &m)?;
    let mut body = json!({
        "points": k.space().point_ids(),
        "transition": rows(k.transition()),
        "reversing_measure": m,
        "detailed_balance_residual": residual,
        "detailed_balance_worst_pair": ids(k.space(), &[x, y]),
        "edge_measure": rows(mu.matrix()),
    });
    if let Some(ak) = ak {
        let extra = json!({
            "sigma": ak.sigma(),
            "tilde_nu": ak.tilde_nu(),
            "theta": ak.theta(),
            "generators": ak.gens().iter().map(|&s| ak.action().gens().symbol(s)).collect::<Vec<_>>(),
        });
        merge(&mut body, extra);
    }
    Ok(body)
}

fn merge(into: &mut Value, from: Value) {
    if let (Some(a), Value::Object(b)) = (into.as_object_mut(), from) {
        a.extend(b);
    }
}

fn cheeger_report(family: &Family, cap: usize) -> CliResult<Value> {
    let (k, m, _) = kernel_of(family)?;
    let r = markov::verify_cheeger_sandwich_with_cap(&k, &m, cap)?;
    let sweep = markov::cheeger_sweep(&k, &m)?;
    Ok(json!({
        "kappa": r.kappa,
        "lambda2": r.lambda2,
        "spectral_gap": r.spectral_gap,
        "lower": r.lower,
        "upper": r.upper,
        "holds": r.holds,
        "argmin_subset": ids(k.space(), &r.argmin_subset),
        "sweep_kappa": sweep.kappa,
        "sweep_subset": ids(k.space(), &sweep.subset),
    }))
}

fn spectrum_report(family: &Family) -> CliResult<Value> {
    let (k, m, _) = kernel_of(family)?;
    let s = markov::lambda2(&k, &m)?;
    Ok(json!({
        "eigenvalues": s.eigenvalues,
        "lambda2": s.lambda2,
        "lambda_min": s.lambda_min,
        "spectral_gap": s.spectral_gap,
        "one_eigenspace_dim": s.one_eigenspace_dim,
        "mean_zero_norm": s.mean_zero_norm(),
        "has_gap": s.has_gap(),
    }))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn expansion_report(family: &Family, common: &Common) -> CliResult<Value> {
    let (action, _) = require_action(family)?;
    let all = all_atoms(action);
    let gens = action.gens().all();
    let space = action.space();
    let ak = expansion::build_action_kernel(action, &all, &gens)?;
    let (residual, ..) = markov::detailed_balance_residual(ak.kernel(), ak.tilde_nu());
    let vertex = expansion::vertex_expansion_constant_with_cap(action, &all, &gens, common.cap)?;
    let markov_exp = expansion::markov_expansion_constant_with_cap(&ak, common.cap)?;
    let ev = expansion::edge_vertex_comparison_with_cap(&ak, common.cap)?;
    let profile =
        expansion::asymptotic_profile_full(action, &all, &DEFAULT_ALPHAS, &DEFAULT_BETAS, common.k_max, common.cap)?;
    let gap = expansion::local_spectral_gap(action, &all, &gens)?;
    Ok(json!({
        "points": space.point_ids(),
        "sigma": ak.sigma(),
        "tilde_nu": ak.tilde_nu(),
        "theta": ak.theta(),
        "detailed_balance_residual": residual,
        "vertex_expansion": { "c": vertex.c, "argmin": ids(space, &vertex.argmin) },
        "markov_expansion": { "kappa": markov_exp.kappa, "argmin": ids(space, &markov_exp.subset) },
        "edge_vertex": to_value(&ev),
        "profile": to_value(&profile),
        "local_gap": to_value(&gap),
        "orbits": action.orbits().iter().map(|o| ids(space, o)).collect::<Vec<_>>(),
    }))
}

fn scales(common: &Common) -> Vec<f64> {
    if let Some(ts) = &common.t_list {
        let mut ts = ts.clone();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        return ts;
    }
    let (a, b) = common.levels.unwrap_or((0, 6));
    (a..=b).map(|e| 2f64.powi(e as i32)).collect()
}

fn warp_command(common: &Common, format: Format) -> CliResult<Outcome> {
    let families = load(common)?;
    let ts = scales(common);
    let mut csv = String::new();
    let mut reports = Vec::new();
    for family in &families {
        let (action, metric) = require_action(family)?;
        let levels = ts.iter().map(|&t| warped::warp(metric, action, t)).collect::<Result<Vec<_>, _>>()?;
        match format {
            Format::Csv => {
                if families.len() > 1 {
                    csv.push_str(&format!("# {}\n", family.name));
                }
                csv.push_str(&io::warped_csv(&levels));
            }
            Format::Json => reports.push(json!({
                "family": family.name,
                "points": action.space().point_ids(),
                "levels": levels.iter().map(|l| json!({
                    "t": l.t(),
                    "distance": rows(l.warped()),
                    "diameter": l.diameter(),
                    "check": to_value(&l.check()),
                })).collect::<Vec<_>>(),
            })),
        }
    }
    let report = match format {
        Format::Csv => csv,
        Format::Json if reports.len() == 1 => io::report_json("warp", &reports[0]),
        Format::Json => io::report_json("warp", &json!({ "families": reports })),
    };
    Ok(Outcome { report, passed: true })
}

/// Levels on the diameter-2 normalization of the family's metric.
fn cone_of(action: &FiniteAction, metric: &FiniteMetric, common: &Common) -> CliResult<SparseCone> {
    Ok(SparseCone::build(&warped::normalize_diameter(metric)?, action, &scales(common))?)
}

fn orbit_diameter(action: &FiniteAction) -> u64 {
    action::orbit_distance_matrix(action).iter().flatten().filter_map(|d| *d).max().unwrap_or(0)
}

fn oplab_report(family: &Family, mode: OplabMode, radius: f64, n_max: usize, common: &Common) -> CliResult<Value> {
    if mode == OplabMode::Power {
        if let FamilyKind::Kernel(k) = &family.kind {
            let report = operator::markov_power_projection_kernel(k, k.require_reversing_measure()?, n_max)?;
            return Ok(json!({ "power": to_value(&report) }));
        }
    }
    let (action, metric) = require_action(family)?;
    let space = action.space();
    let all = all_atoms(action);
    let p_x = operator::averaging_projection(space, &all)?;
    match mode {
        OplabMode::Propagation => {
            let ak = action_kernel(action)?;
            let mut generators = Vec::new();
            for s in 0..action.gens().len() {
                let op = WeightedOperator::generator(action, s);
                generators.push(json!({
                    "symbol": action.gens().symbol(s),
                    "length": action.gens().length(s),
                    "propagation": operator::rho_propagation(&op, action)?,
                }));
            }
            let diam = orbit_diameter(action);
            let witnesses = (0..=diam)
                .map(|k| operator::finite_propagation_witness(&ak, k).map(|w| to_value(&w)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(json!({
                "generators": generators,
                "averaging_projection": operator::rho_propagation(&p_x.operator(), action)?,
                "orbit_diameter": diam,
                "finite_propagation_witnesses": witnesses,
            }))
        }
        OplabMode::Qlocal => {
            let ks: Vec<u64> = (0..=common.k_max.max(orbit_diameter(action))).collect();
            let op = p_x.operator();
            let profile = if action.len() <= tol::QUASI_LOCAL_CAP.min(common.cap) {
                operator::rho_quasi_locality_profile_with_cap(&op, action, &ks, common.cap)?
            } else {
                operator::rho_quasi_locality_sampled(&op, action, &ks, 10_000, common.seed)?
            };
            let mut body = json!({
                "operator": "averaging projection P_X",
                "rho_profile": to_value(&profile),
                "rho_witnesses": profile.witnesses.iter().map(|(a, c)| json!([ids(space, a), ids(space, c)])).collect::<Vec<_>>(),
            });
            if action.len() <= tol::QUASI_LOCAL_CAP.min(common.cap) {
                let cone = cone_of(action, metric, common)?;
                let rs = [0.5, 1.0, 1.5, 2.0, 3.0];
                merge(&mut body, json!({ "uniform_warped_profile": to_value(&operator::uniform_warped_profile(&op, &cone, &rs)?) }));
            }
            Ok(body)
        }
        OplabMode::Power => {
            let ak = action_kernel(action)?;
            Ok(json!({
                "power": to_value(&operator::markov_power_projection(&ak, n_max)?),
                "ad_embedding": to_value(&operator::ad_embedding_projection(&ak, n_max)?),
            }))
        }
        OplabMode::Ghost => {
            let cone = cone_of(action, metric, common)?;
            Ok(json!({ "ghost": to_value(&operator::ghost_profile(&p_x, &cone, radius)?) }))
        }
        OplabMode::Poincare => {
            let ak = action_kernel(action)?;
            let cone = cone_of(action, metric, common)?;
            let levels: Vec<WarpedLevel> = cone.levels().to_vec();
            let embeddings: Vec<Vec<Vec<f64>>> = levels.iter().map(operator::kuratowski_embedding).collect();
            Ok(json!({ "poincare": to_value(&operator::poincare_obstruction_witness(&ak, &embeddings, &levels)?) }))
        }
    }
}

fn ghost_stack_report(sides: &[usize], radius: f64) -> CliResult<Value> {
    let stack = families::margulis_ghost_stack(sides)?;
    let profile = operator::ghost_profile_refining(&stack, radius)?;
    Ok(json!({
        "family": "margulis",
        "sides": sides,
        "ghost": to_value(&profile),
        "strictly_decreasing": profile.strictly_decreasing(),
    }))
}
