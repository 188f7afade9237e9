//! Finite models of measure-class-preserving actions: generator
//! permutations, word-length balls, Radon–Nikodym derivatives and the
//! built-in action families.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::space::FiniteMeasureSpace;
use crate::subset;

/// Symmetric generating set with integer lengths.
///
/// A symbol of length 0 is the identity; there is at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSet {
    symbols: Vec<String>,
    inverse_of: Vec<usize>,
    length: Vec<u32>,
    identity: Option<usize>,
}

impl GeneratorSet {
    pub fn new(symbols: Vec<String>, inverse_of: Vec<usize>, length: Vec<u32>) -> Result<Self> {
        let k = symbols.len();
        if inverse_of.len() != k || length.len() != k {
            return Err(LabError::InvalidGenerators("symbols, inverses and lengths differ in count".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(LabError::InvalidGenerators(format!("duplicate symbol {s}")));
            }
        }
        let mut identity = None;
        for s in 0..k {
            let inv = inverse_of[s];
            if inv >= k || inverse_of[inv] != s {
                return Err(LabError::InvalidGenerators(format!("inverse map is not an involution at {}", symbols[s])));
            }
            if length[s] != length[inv] {
                return Err(LabError::InvalidGenerators(format!(
                    "length of {} differs from its inverse {}",
                    symbols[s], symbols[inv]
                )));
            }
            if length[s] == 0 {
                if inv != s {
                    return Err(LabError::InvalidGenerators(format!("length-0 symbol {} is not self-inverse", symbols[s])));
                }
                if identity.is_some() {
                    return Err(LabError::InvalidGenerators("more than one length-0 symbol".into()));
                }
                identity = Some(s);
            }
        }
        Ok(Self { symbols, inverse_of, length, identity })
    }

    /// Builds from symbol names, looking inverses up by name.
    pub fn from_names(entries: &[(&str, &str, u32)]) -> Result<Self> {
        let symbols: Vec<String> = entries.iter().map(|e| e.0.to_string()).collect();
        let inverse_of = entries
            .iter()
            .map(|e| {
                symbols
                    .iter()
                    .position(|s| s == e.1)
                    .ok_or_else(|| LabError::InvalidGenerators(format!("unknown inverse symbol {}", e.1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(symbols, inverse_of, entries.iter().map(|e| e.2).collect())
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, s: usize) -> &str {
        &self.symbols[s]
    }

    pub fn inverse(&self, s: usize) -> usize {
        self.inverse_of[s]
    }

    pub fn length(&self, s: usize) -> u32 {
        self.length[s]
    }

    pub fn identity(&self) -> Option<usize> {
        self.identity
    }

    pub fn includes_identity(&self) -> bool {
        self.identity.is_some()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn all(&self) -> Vec<usize> {
        (0..self.len()).collect()
    }

    pub fn max_length(&self, subset: &[usize]) -> u32 {
        subset.iter().map(|&s| self.length[s]).max().unwrap_or(0)
    }

    /// Checks that a generator subset is closed under inverses and, when
    /// asked, contains the identity.
    pub fn check_subset(&self, subset: &[usize], need_identity: bool) -> Result<()> {
        if let Some(&s) = subset.iter().find(|&&s| s >= self.len()) {
            return Err(LabError::InvalidGenerators(format!("unknown generator index {s}")));
        }
        if let Some(&s) = subset.iter().find(|&&s| !subset.contains(&self.inverse_of[s])) {
            return Err(LabError::InvalidGenerators(format!("generator subset lacks the inverse of {}", self.symbols[s])));
        }
        if need_identity && !self.identity.is_some_and(|e| subset.contains(&e)) {
            return Err(LabError::InvalidGenerators("generator subset must contain the identity".into()));
        }
        Ok(())
    }

    /// Resolves symbol names to indices.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| self.index_of(n).ok_or_else(|| LabError::InvalidGenerators(format!("unknown symbol {n}"))))
            .collect()
    }
}

/// Generators acting by permutations of the atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteAction {
    space: FiniteMeasureSpace,
    gens: GeneratorSet,
    perms: Vec<Vec<usize>>,
}

impl FiniteAction {
    pub fn new(space: FiniteMeasureSpace, gens: GeneratorSet, perms: Vec<Vec<usize>>) -> Result<Self> {
        let n = space.len();
        if perms.len() != gens.len() {
            return Err(LabError::InvalidGenerators(format!("{} generators but {} permutations", gens.len(), perms.len())));
        }
        for (s, p) in perms.iter().enumerate() {
            if p.len() != n {
                return Err(LabError::DimensionMismatch { expected: n, got: p.len() });
            }
            let mut seen = vec![false; n];
            for &y in p {
                if y >= n || seen[y] {
                    return Err(LabError::InvalidGenerators(format!("{} is not a bijection", gens.symbol(s))));
                }
                seen[y] = true;
            }
        }
        for s in 0..gens.len() {
            let inv = &perms[gens.inverse(s)];
            if let Some(x) = (0..n).find(|&x| inv[perms[s][x]] != x) {
                return Err(LabError::InvalidGenerators(format!(
                    "{} does not invert {} at atom {x}",
                    gens.symbol(gens.inverse(s)),
                    gens.symbol(s)
                )));
            }
        }
        if let Some(e) = gens.identity() {
            if let Some(x) = (0..n).find(|&x| perms[e][x] != x) {
                return Err(LabError::InvalidGenerators(format!("identity moves atom {x}")));
            }
        }
        Ok(Self { space, gens, perms })
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn gens(&self) -> &GeneratorSet {
        &self.gens
    }

    pub fn perm(&self, s: usize) -> &[usize] {
        &self.perms[s]
    }

    pub fn perms(&self) -> &[Vec<usize>] {
        &self.perms
    }

    /// `s·x`.
    pub fn apply(&self, s: usize, x: usize) -> usize {
        self.perms[s][x]
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    /// Same permutations over new atom weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        let space = FiniteMeasureSpace::new(self.space.point_ids().to_vec(), weights)?;
        Ok(Self { space, gens: self.gens.clone(), perms: self.perms.clone() })
    }

    /// Applies a word, rightmost letter first.
    pub fn apply_word(&self, word: &[usize], x: usize) -> usize {
        word.iter().rev().fold(x, |y, &s| self.perms[s][y])
    }

    /// Orbit decomposition, each orbit sorted, orbits ordered by least atom.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut label = vec![usize::MAX; n];
        let mut out = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            label[start] = id;
            let mut orbit = vec![];
            while let Some(x) = stack.pop() {
                orbit.push(x);
                for p in &self.perms {
                    let y = p[x];
                    if label[y] == usize::MAX {
                        label[y] = id;
                        stack.push(y);
                    }
                }
            }
            orbit.sort_unstable();
            out.push(orbit);
        }
        out
    }
}

/// Word-length distances from a set of sources, using only `gens`;
/// `None` marks atoms outside the orbit.
pub fn orbit_distances_from(action: &FiniteAction, sources: &[usize], gens: &[usize]) -> Vec<Option<u64>> {
    let n = action.len();
    let mut dist: Vec<Option<u64>> = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &x in sources {
        if dist[x].is_none() {
            dist[x] = Some(0);
            heap.push(Reverse((0u64, x)));
        }
    }
    while let Some(Reverse((d, x))) = heap.pop() {
        if dist[x] != Some(d) {
            continue;
        }
        for &s in gens {
            let y = action.perms[s][x];
            let nd = d + action.gens.length(s) as u64;
            if dist[y].is_none_or(|old| nd < old) {
                dist[y] = Some(nd);
                heap.push(Reverse((nd, y)));
            }
        }
    }
    dist
}

/// `B_k·A` over the full generating set.
pub fn ball_image(action: &FiniteAction, a: &[usize], k: u64) -> Result<Vec<usize>> {
    ball_image_with(action, a, k, &action.gens.all())
}

/// `B_k·A` where balls are measured in words over `gens` only.
pub fn ball_image_with(action: &FiniteAction, a: &[usize], k: u64, gens: &[usize]) -> Result<Vec<usize>> {
    action.space.check_subset(a)?;
    let dist = orbit_distances_from(action, a, gens);
    Ok((0..action.len()).filter(|&y| dist[y].is_some_and(|d| d <= k)).collect())
}

/// Minimal word length carrying `x` to `y`; `None` across orbits.
pub fn orbit_distance(action: &FiniteAction, x: usize, y: usize) -> Result<Option<u64>> {
    action.space.check_atom(x)?;
    action.space.check_atom(y)?;
    Ok(orbit_distances_from(action, &[x], &action.gens.all())[y])
}

/// All-pairs word-length distances.
pub fn orbit_distance_matrix(action: &FiniteAction) -> Vec<Vec<Option<u64>>> {
    let all = action.gens.all();
    (0..action.len()).map(|x| orbit_distances_from(action, &[x], &all)).collect()
}

/// `r(s,x) = ν(s·x)/ν(x)` for every generator and atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadonNikodymTable {
    /// Indexed `[generator][atom]`.
    pub r: Vec<Vec<f64>>,
}

impl RadonNikodymTable {
    pub fn get(&self, s: usize, x: usize) -> f64 {
        self.r[s][x]
    }

    /// Worst relative deviation of `r(s,x)·r(s⁻¹, s·x)` from 1.
    pub fn inversion_residual(&self, action: &FiniteAction) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..action.gens.len() {
            let inv = action.gens.inverse(s);
            for x in 0..action.len() {
                let prod = self.r[s][x] * self.r[inv][action.apply(s, x)];
                worst = worst.max((prod - 1.0).abs());
            }
        }
        worst
    }

    /// `|Σ_{x∈Y} f(s·x) r(s,x)^{1/2} ν(x) − Σ_{x∈sY} f(x) r(s⁻¹,x)^{1/2} ν(x)|`.
    pub fn change_of_variable_residual(&self, action: &FiniteAction, s: usize, y: &[usize], f: &[f64]) -> f64 {
        let nu = action.space.weights();
        let inv = action.gens.inverse(s);
        let lhs: f64 = y.iter().map(|&x| f[action.apply(s, x)] * self.r[s][x].sqrt() * nu[x]).sum();
        let rhs: f64 = y
            .iter()
            .map(|&x| action.apply(s, x))
            .map(|x| f[x] * self.r[inv][x].sqrt() * nu[x])
            .sum();
        (lhs - rhs).abs()
    }
}

pub fn rn_table(action: &FiniteAction) -> RadonNikodymTable {
    let nu = action.space.weights();
    let r = action
        .perms
        .iter()
        .map(|p| (0..action.len()).map(|x| nu[p[x]] / nu[x]).collect())
        .collect();
    RadonNikodymTable { r }
}

/// `Θ = max max(r(s,x), 1/r(s,x))` over `x ∈ Y`, `s ∈ S` with `s·x ∈ Y`.
pub fn theta_bound(action: &FiniteAction, y: &[usize], gens: &[usize]) -> Result<f64> {
    if y.is_empty() {
        return Err(LabError::InvalidSubset("Y is empty".into()));
    }
    action.space.check_subset(y)?;
    action.gens.check_subset(gens, true)?;
    let nu = action.space.weights();
    let mut inside = vec![false; action.len()];
    for &x in y {
        inside[x] = true;
    }
    let mut theta: f64 = 1.0;
    for &x in y {
        for &s in gens {
            let t = action.apply(s, x);
            if inside[t] {
                let r = nu[t] / nu[x];
                theta = theta.max(r).max(1.0 / r);
            }
        }
    }
    Ok(theta)
}

/// Outcome of the bounded freeness scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreenessReport {
    pub free: bool,
    pub max_word_length: usize,
    /// A reduced word acting nontrivially but fixing `witness_atom`.
    pub witness_word: Option<Vec<String>>,
    pub witness_atom: Option<usize>,
}

/// Scans freely reduced words (no identity letter, no letter followed by
/// its inverse) up to `max_len` letters. A word acting as the identity
/// permutation is taken to be trivial; any other word with a fixed point
/// makes the action non-free.
pub fn freeness(action: &FiniteAction, max_len: usize) -> FreenessReport {
    let gens = &action.gens;
    let letters: Vec<usize> = (0..gens.len()).filter(|&s| Some(s) != gens.identity()).collect();
    let n = action.len();
    let mut frontier: Vec<(Vec<usize>, Vec<usize>)> = vec![(vec![], (0..n).collect())];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (word, perm) in &frontier {
            for &s in &letters {
                if word.last().is_some_and(|&l| gens.inverse(l) == s) {
                    continue;
                }
                // prepend-free convention: the new letter acts last
                let p: Vec<usize> = perm.iter().map(|&y| action.apply(s, y)).collect();
                let mut w = word.clone();
                w.push(s);
                let moves = p.iter().enumerate().any(|(x, &y)| x != y);
                if moves {
                    if let Some(x) = (0..n).find(|&x| p[x] == x) {
                        let mut names: Vec<String> = w.iter().map(|&l| gens.symbol(l).to_string()).collect();
                        names.reverse();
                        return FreenessReport { free: false, max_word_length: max_len, witness_word: Some(names), witness_atom: Some(x) };
                    }
                }
                next.push((w, p));
            }
        }
        frontier = next;
    }
    FreenessReport { free: true, max_word_length: max_len, witness_word: None, witness_atom: None }
}

/// `Z ↷ Z/n` by rotation with `S = {e, +1, −1}`. For `n = 2` the two
/// rotations coincide and `S = {e, +1}` with `+1` self-inverse.
pub fn gen_cycle(n: usize, weights: Option<Vec<f64>>) -> Result<FiniteAction> {
    if n < 2 {
        return Err(LabError::InvalidParameter(format!("cycle needs n >= 2, got {n}")));
    }
    let space = match weights {
        Some(w) => FiniteMeasureSpace::indexed(w)?,
        None => FiniteMeasureSpace::uniform(n)?,
    };
    space.check_len(n)?;
    let id: Vec<usize> = (0..n).collect();
    let plus: Vec<usize> = (0..n).map(|x| (x + 1) % n).collect();
    if n == 2 {
        let gens = GeneratorSet::from_names(&[("e", "e", 0), ("+1", "+1", 1)])?;
        return FiniteAction::new(space, gens, vec![id, plus]);
    }
    let minus: Vec<usize> = (0..n).map(|x| (x + n - 1) % n).collect();
    let gens = GeneratorSet::from_names(&[("e", "e", 0), ("+1", "-1", 1), ("-1", "+1", 1)])?;
    FiniteAction::new(space, gens, vec![id, plus, minus])
}

/// Margulis action on `(Z/n)²` with uniform measure: shears
/// `a(x,y) = (x+y, y)`, `b(x,y) = (x, x+y)`, unit translations
/// `u(x,y) = (x+1, y)`, `v(x,y) = (x, y+1)`, their inverses `A, B, U, V`,
/// and `e`. All lengths are 1. The translations make the action transitive;
/// the shears alone fix the origin.
pub fn gen_margulis_torus(n: usize) -> Result<FiniteAction> {
    if n < 2 {
        return Err(LabError::InvalidParameter(format!("torus needs n >= 2, got {n}")));
    }
    let idx = |x: usize, y: usize| (x % n) * n + (y % n);
    let ids = (0..n * n).map(|i| format!("({},{})", i / n, i % n)).collect();
    let space = FiniteMeasureSpace::new(ids, vec![1.0 / (n * n) as f64; n * n])?;
    let build = |f: &dyn Fn(usize, usize) -> usize| -> Vec<usize> { (0..n * n).map(|i| f(i / n, i % n)).collect() };
    let perms = vec![
        build(&|x, y| idx(x, y)),
        build(&|x, y| idx(x + y, y)),
        build(&|x, y| idx(x + n - y, y)),
        build(&|x, y| idx(x, x + y)),
        build(&|x, y| idx(x, y + n - x)),
        build(&|x, y| idx(x + 1, y)),
        build(&|x, y| idx(x + n - 1, y)),
        build(&|x, y| idx(x, y + 1)),
        build(&|x, y| idx(x, y + n - 1)),
    ];
    let gens = GeneratorSet::from_names(&[
        ("e", "e", 0),
        ("a", "A", 1),
        ("A", "a", 1),
        ("b", "B", 1),
        ("B", "b", 1),
        ("u", "U", 1),
        ("U", "u", 1),
        ("v", "V", 1),
        ("V", "v", 1),
    ])?;
    FiniteAction::new(space, gens, perms)
}

/// Generator declaration shared by action and chain descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorDecl {
    pub symbol: String,
    pub inverse: String,
    #[serde(default = "default_length")]
    pub length: u32,
}

fn default_length() -> u32 {
    1
}

/// One level of a coset chain `Γ/Γ_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLevel {
    pub cosets: usize,
    /// One permutation per generator, in declaration order.
    pub perms: Vec<Vec<usize>>,
    /// Coset of the previous level each coset maps to; absent on level 0.
    #[serde(default)]
    pub project_to_previous: Option<Vec<usize>>,
}

/// Description of a chain of finite quotients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub generators: Vec<GeneratorDecl>,
    pub levels: Vec<ChainLevel>,
}

impl ChainSpec {
    /// `Z ⊃ 2Z ⊃ 4Z ⊃ …`: levels `Z/2^i` for `i = 1..=depth`, generators
    /// `e, +1, −1`, projections `c ↦ c mod 2^{i−1}`.
    pub fn dyadic(depth: usize) -> Result<Self> {
        if depth == 0 || depth > 20 {
            return Err(LabError::InvalidParameter(format!("dyadic depth must be in 1..=20, got {depth}")));
        }
        let generators = vec![
            GeneratorDecl { symbol: "e".into(), inverse: "e".into(), length: 0 },
            GeneratorDecl { symbol: "+1".into(), inverse: "-1".into(), length: 1 },
            GeneratorDecl { symbol: "-1".into(), inverse: "+1".into(), length: 1 },
        ];
        let levels = (1..=depth)
            .map(|i| {
                let m = 1usize << i;
                ChainLevel {
                    cosets: m,
                    perms: vec![
                        (0..m).collect(),
                        (0..m).map(|c| (c + 1) % m).collect(),
                        (0..m).map(|c| (c + m - 1) % m).collect(),
                    ],
                    project_to_previous: (i > 1).then(|| (0..m).map(|c| c % (m / 2)).collect()),
                }
            })
            .collect();
        Ok(Self { generators, levels })
    }
}

/// Builds one uniform action per level, checking that every projection
/// intertwines the generator permutations exactly.
pub fn gen_schreier_chain(spec: &ChainSpec) -> Result<Vec<FiniteAction>> {
    if spec.levels.is_empty() {
        return Err(LabError::Empty("chain levels"));
    }
    let entries: Vec<(&str, &str, u32)> =
        spec.generators.iter().map(|g| (g.symbol.as_str(), g.inverse.as_str(), g.length)).collect();
    let gens = GeneratorSet::from_names(&entries)?;
    let mut out: Vec<FiniteAction> = Vec::with_capacity(spec.levels.len());
    for (level, l) in spec.levels.iter().enumerate() {
        let space = FiniteMeasureSpace::uniform(l.cosets)?;
        let action = FiniteAction::new(space, gens.clone(), l.perms.clone())?;
        if level > 0 {
            let proj = l.project_to_previous.as_ref().ok_or_else(|| {
                LabError::InvalidParameter(format!("level {level} has no project_to_previous map"))
            })?;
            let prev = &out[level - 1];
            if proj.len() != l.cosets {
                return Err(LabError::DimensionMismatch { expected: l.cosets, got: proj.len() });
            }
            if let Some(&bad) = proj.iter().find(|&&c| c >= prev.len()) {
                return Err(LabError::UnknownAtom(bad));
            }
            for s in 0..gens.len() {
                for c in 0..l.cosets {
                    if proj[action.apply(s, c)] != prev.apply(s, proj[c]) {
                        return Err(LabError::ChainCompatibility { level, generator: gens.symbol(s).to_string(), coset: c });
                    }
                }
            }
        }
        out.push(action);
    }
    Ok(out)
}

/// `true` when `A` is carried into itself by every generator in `gens`.
pub fn is_invariant(action: &FiniteAction, a: &[usize], gens: &[usize]) -> bool {
    let mask_in = {
        let mut v = vec![false; action.len()];
        for &x in a {
            v[x] = true;
        }
        v
    };
    a.iter().all(|&x| gens.iter().all(|&s| mask_in[action.apply(s, x)]))
}

/// Sorted set image `S·A`.
pub fn set_image(action: &FiniteAction, a: &[usize], gens: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().flat_map(|&x| gens.iter().map(move |&s| action.apply(s, x))).collect();
    out = subset::normalized(&out);
    out
}
