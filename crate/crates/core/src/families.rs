//! Built-in families, the Margulis ghost stack and seeded random
//! generators of reversible kernels and weighted actions.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::action::{self, ChainSpec, FiniteAction, GeneratorSet};
use crate::error::{LabError, Result};
use crate::markov::MarkovKernel;
use crate::operator::{self, RankOneProjection};
use crate::space::FiniteMeasureSpace;
use crate::warped::{self, FiniteMetric, WarpedLevel};

/// Registry entry; written `name:args` on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    Cycle(usize),
    /// Cycle with `ν(i) ∝ i + 1`; `n = 2` is the weighted swap.
    WeightedCycle(usize),
    Margulis(usize),
    SchreierDyadic(usize),
    TwoPoint(f64, f64),
    /// Two disjoint copies of the `n`-cycle: an invariant split.
    SplitCycle(usize),
}

/// Families run by `--builtin all`.
pub const ALL: [Builtin; 9] = [
    Builtin::Cycle(4),
    Builtin::Cycle(8),
    Builtin::WeightedCycle(2),
    Builtin::WeightedCycle(5),
    Builtin::Margulis(2),
    Builtin::Margulis(3),
    Builtin::SchreierDyadic(3),
    Builtin::TwoPoint(0.3, 0.3),
    Builtin::SplitCycle(3),
];

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Builtin::Cycle(n) => write!(f, "cycle:{n}"),
            Builtin::WeightedCycle(n) => write!(f, "weighted-cycle:{n}"),
            Builtin::Margulis(n) => write!(f, "margulis:{n}"),
            Builtin::SchreierDyadic(d) => write!(f, "schreier-dyadic:{d}"),
            Builtin::TwoPoint(p, q) => write!(f, "two-point:{p},{q}"),
            Builtin::SplitCycle(n) => write!(f, "split-cycle:{n}"),
        }
    }
}

impl FromStr for Builtin {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || LabError::InvalidParameter(format!("unknown builtin {s:?}; expected e.g. cycle:8, weighted-cycle:5, margulis:3, schreier-dyadic:3, two-point:0.3,0.3, split-cycle:3"));
        let (name, args) = s.split_once([':', ' ']).ok_or_else(bad)?;
        let int = || args.trim().parse::<usize>().map_err(|_| bad());
        Ok(match name {
            "cycle" => Builtin::Cycle(int()?),
            "weighted-cycle" => Builtin::WeightedCycle(int()?),
            "margulis" => Builtin::Margulis(int()?),
            "schreier-dyadic" => Builtin::SchreierDyadic(int()?),
            "split-cycle" => Builtin::SplitCycle(int()?),
            "two-point" => {
                let (p, q) = args.split_once([',', ' ']).ok_or_else(bad)?;
                Builtin::TwoPoint(p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?)
            }
            _ => return Err(bad()),
        })
    }
}

/// Parses a comma-free list such as `all` or `cycle:8`.
pub fn parse_builtins(s: &str) -> Result<Vec<Builtin>> {
    if s == "all" {
        return Ok(ALL.to_vec());
    }
    s.split(';').map(str::parse).collect()
}

#[derive(Debug, Clone)]
pub enum FamilyKind {
    Action { action: FiniteAction, metric: FiniteMetric },
    Kernel(MarkovKernel),
}

/// A named instance, ready for analysis.
#[derive(Debug, Clone)]
pub struct Family {
    pub name: String,
    pub kind: FamilyKind,
}

impl Family {
    pub fn action(&self) -> Option<(&FiniteAction, &FiniteMetric)> {
        match &self.kind {
            FamilyKind::Action { action, metric } => Some((action, metric)),
            FamilyKind::Kernel(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            FamilyKind::Action { action, .. } => action.len(),
            FamilyKind::Kernel(k) => k.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Base metric for an action loaded without one: chord distances on the
/// index circle, scaled to diameter 2.
pub fn default_metric(action: &FiniteAction) -> Result<FiniteMetric> {
    if action.len() == 1 {
        return FiniteMetric::new(action.space().clone(), DMatrix::zeros(1, 1));
    }
    let chord = FiniteMetric::cycle_chord(action.space().clone())?;
    FiniteMetric::new(chord.space().clone(), chord.dist() * (2.0 / chord.diameter()))
}

fn split_cycle(n: usize) -> Result<FiniteAction> {
    if n < 3 {
        return Err(LabError::InvalidParameter(format!("split cycle needs n >= 3, got {n}")));
    }
    let space = FiniteMeasureSpace::uniform(2 * n)?;
    let gens = GeneratorSet::from_names(&[("e", "e", 0), ("+1", "-1", 1), ("-1", "+1", 1)])?;
    let rot = |k: usize| -> Vec<usize> { (0..2 * n).map(|x| (x / n) * n + (x % n + k) % n).collect() };
    FiniteAction::new(space, gens, vec![rot(0), rot(1), rot(n - 1)])
}

impl Builtin {
    pub fn families(&self) -> Result<Vec<Family>> {
        let name = self.to_string();
        let with_chord = |action: FiniteAction, name: String| -> Result<Family> {
            let metric = FiniteMetric::cycle_chord(action.space().clone())?;
            Ok(Family { name, kind: FamilyKind::Action { action, metric } })
        };
        match *self {
            Builtin::Cycle(n) => Ok(vec![with_chord(action::gen_cycle(n, None)?, name)?]),
            Builtin::WeightedCycle(n) => {
                let total = (n * (n + 1) / 2) as f64;
                let w = (0..n).map(|i| (i + 1) as f64 / total).collect();
                Ok(vec![with_chord(action::gen_cycle(n, Some(w))?, name)?])
            }
            Builtin::Margulis(n) => {
                let action = action::gen_margulis_torus(n)?;
                let metric = FiniteMetric::torus_linf(action.space().clone(), n)?;
                Ok(vec![Family { name, kind: FamilyKind::Action { action, metric } }])
            }
            Builtin::SchreierDyadic(d) => action::gen_schreier_chain(&ChainSpec::dyadic(d)?)?
                .into_iter()
                .enumerate()
                .map(|(i, a)| with_chord(a, format!("{name}/level{}", i + 1)))
                .collect(),
            Builtin::TwoPoint(p, q) => Ok(vec![Family { name, kind: FamilyKind::Kernel(MarkovKernel::two_point(p, q)?) }]),
            Builtin::SplitCycle(n) => {
                let action = split_cycle(n)?;
                let metric = FiniteMetric::discrete(action.space().clone(), 2.0)?;
                Ok(vec![Family { name, kind: FamilyKind::Action { action, metric } }])
            }
        }
    }
}

/// Families for a list of builtins, in order.
pub fn expand(builtins: &[Builtin]) -> Result<Vec<Family>> {
    let mut out = Vec::new();
    for b in builtins {
        out.extend(b.families()?);
    }
    Ok(out)
}

pub const GHOST_SIDES: [usize; 4] = [2, 4, 8, 16];
pub const GHOST_RADIUS: f64 = 2.0;

/// Margulis tori of the given sides, each with the ℓ∞ torus metric
/// (diameter 2, minimum gap `4/n`) warped at `t = n`, paired with the
/// averaging projection `P_X`. Since `t·(4/n) = 4 > 2`, warped balls of
/// radius 2 are exactly the word-length balls `B_2·x`.
pub fn margulis_ghost_stack(sides: &[usize]) -> Result<Vec<(RankOneProjection, WarpedLevel)>> {
    sides
        .iter()
        .map(|&n| {
            let action = action::gen_margulis_torus(n)?;
            let metric = FiniteMetric::torus_linf(action.space().clone(), n)?;
            let level = warped::warp(&metric, &action, n as f64)?;
            let all: Vec<usize> = (0..action.len()).collect();
            Ok((operator::averaging_projection(action.space(), &all)?, level))
        })
        .collect()
}

/// Random symmetric conductances `W` with a positive diagonal;
/// `Π = W / rowsum`, reversible for `m ∝ rowsum`. The space carries `m`.
pub fn random_reversible_kernel<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<MarkovKernel> {
    if n == 0 {
        return Err(LabError::Empty("random kernel needs atoms"));
    }
    let mut w = DMatrix::zeros(n, n);
    for x in 0..n {
        w[(x, x)] = rng.random_range(0.05..1.0);
        for y in x + 1..n {
            if rng.random_bool(0.6) {
                let v = rng.random_range(0.05..1.0);
                w[(x, y)] = v;
                w[(y, x)] = v;
            }
        }
    }
    let rows: Vec<f64> = (0..n).map(|x| w.row(x).sum()).collect();
    let total: f64 = rows.iter().sum();
    let m: Vec<f64> = rows.iter().map(|r| r / total).collect();
    let t = DMatrix::from_fn(n, n, |x, y| w[(x, y)] / rows[x]);
    MarkovKernel::new(FiniteMeasureSpace::indexed(m.clone())?, t, Some(m))
}

/// Random weights, `pairs` random permutations with their inverses (each
/// of length 1 or 2) and the identity.
pub fn random_weighted_action<R: Rng + ?Sized>(rng: &mut R, n: usize, pairs: usize) -> Result<FiniteAction> {
    if n == 0 {
        return Err(LabError::Empty("random action needs atoms"));
    }
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let space = FiniteMeasureSpace::indexed(raw.iter().map(|v| v / total).collect())?;
    let mut symbols = vec!["e".to_string()];
    let mut inverse_of = vec![0];
    let mut length = vec![0];
    let mut perms = vec![(0..n).collect::<Vec<_>>()];
    for i in 0..pairs {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        let mut inv = vec![0; n];
        for (x, &y) in p.iter().enumerate() {
            inv[y] = x;
        }
        let l = rng.random_range(1..=2);
        let base = symbols.len();
        symbols.push(format!("g{i}"));
        symbols.push(format!("G{i}"));
        inverse_of.push(base + 1);
        inverse_of.push(base);
        length.push(l);
        length.push(l);
        perms.push(p);
        perms.push(inv);
    }
    FiniteAction::new(space, GeneratorSet::new(symbols, inverse_of, length)?, perms)
}
