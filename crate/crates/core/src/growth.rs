//! Intersection numbers of sphere systems with roses, and the growth
//! calculus built on them.
//!
//! A reduced sphere system is recorded by its dual rose, so systems and
//! roses are both bases of `F_n` taken up to petal permutation, petal
//! inversion and global conjugation ([`RoseVertex`]). For a system `Σ` and a
//! rose `R` the intersection number `ι(Σ, R)` is the least total number of
//! `Σ`-edges crossed by the petal loops of `R`, minimised over a common
//! basepoint in the universal cover. Moving the basepoint one edge changes
//! each term by at most two and the total is convex along tree geodesics, so
//! the greedy descent in [`min_conjugate_weight`] finds the exact minimum.
//!
//! Surgery sequences are replaced by greedy Nielsen descent on dual roses
//! ([`descend`]): each step applies at most `ℓ` twists, each chosen to lower
//! the intersection number with the target. This keeps the two properties
//! the growth arguments use, namely bounded dual-rose displacement per step
//! and monotone intersection with the target.

use std::collections::{BTreeMap, HashSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::farey::{self, Slope};
use crate::splittings::oracle::barbell_images;
use crate::splittings::{disjoint, MarkedEdge, MarkedGraph, NonSepSphere, Sphere, SphereKey};
use crate::word::{Automorphism, Basis, Letter, NielsenMove, Word};

/// Minimum over basepoints of the total weighted length of `loops`.
///
/// `weighted` selects the letters that cross an edge of the tree in
/// question. The candidate moves are conjugations by the prefix of a loop
/// (or of its inverse) ending at its first weighted letter; a strict
/// decrease is required, and convexity makes a local minimum global.
pub fn min_conjugate_weight<F: Fn(Letter) -> bool>(loops: &[Word], weighted: F) -> usize {
    let cost = |ls: &[Word]| -> usize {
        ls.iter().map(|w| w.letters().iter().filter(|&&l| weighted(l)).count()).sum()
    };
    let mut cur: Vec<Word> = loops.to_vec();
    let mut best = cost(&cur);
    loop {
        let mut cands: Vec<Word> = Vec::new();
        for w in &cur {
            for v in [w.clone(), w.inverse()] {
                if let Some(pos) = v.letters().iter().position(|&l| weighted(l)) {
                    let g = Word::reduce(&v.letters()[..=pos]);
                    if !cands.contains(&g) {
                        cands.push(g);
                    }
                }
            }
        }
        let mut improved: Option<Vec<Word>> = None;
        for g in &cands {
            let gi = g.inverse();
            let next: Vec<Word> = cur.iter().map(|w| gi.mul(w).mul(g)).collect();
            let c = cost(&next);
            if c < best {
                best = c;
                improved = Some(next);
            }
        }
        match improved {
            Some(n) => cur = n,
            None => return best,
        }
    }
}

/// `ι` of a rose given by the coordinates of its petals in the system's basis.
pub fn iota_coords(coords: &[Word]) -> usize {
    min_conjugate_weight(coords, |_| true)
}

/// A marked rose up to petal permutation, petal inversion and conjugation.
///
/// The stored basis is the representative given at construction; the
/// canonical form is the sorted list of keys of the petal-dual spheres, which
/// determines the vertex, and equality goes through it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "Basis", into = "Basis")]
pub struct RoseVertex {
    basis: Basis,
    inverse: Automorphism,
    key: Vec<SphereKey>,
}

impl PartialEq for RoseVertex {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for RoseVertex {}

impl std::hash::Hash for RoseVertex {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.key.hash(state);
    }
}

impl TryFrom<Basis> for RoseVertex {
    type Error = Error;
    fn try_from(b: Basis) -> Result<Self> {
        RoseVertex::new(b)
    }
}

impl From<RoseVertex> for Basis {
    fn from(r: RoseVertex) -> Basis {
        r.basis
    }
}

impl RoseVertex {
    pub fn new(basis: Basis) -> Result<Self> {
        let inverse = basis.as_automorphism().invert()?.without_provenance();
        let mut key: Vec<SphereKey> = (0..basis.rank())
            .map(|i| dual_sphere(&basis, i).map(|s| s.key()))
            .collect::<Result<_>>()?;
        key.sort();
        Ok(RoseVertex { basis, inverse, key })
    }

    pub fn standard(n: usize) -> Self {
        RoseVertex::new(Basis::standard(n)).expect("standard basis")
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn petals(&self) -> &[Word] {
        &self.basis.elements
    }

    /// Canonical form: sorted keys of the petal-dual spheres.
    pub fn key(&self) -> &[SphereKey] {
        &self.key
    }

    /// `w` written in this basis.
    pub fn coordinates(&self, w: &Word) -> Word {
        self.inverse.apply(w)
    }

    /// The sphere meeting petal `i` once and missing the others.
    pub fn dual_sphere(&self, i: usize) -> Result<NonSepSphere> {
        dual_sphere(&self.basis, i)
    }

    /// All petal-dual spheres, in petal order.
    pub fn dual_spheres(&self) -> Result<Vec<NonSepSphere>> {
        (0..self.rank()).map(|i| self.dual_sphere(i)).collect()
    }

    /// The one-vertex marked graph of this rose (the dual system).
    pub fn system(&self) -> MarkedGraph {
        MarkedGraph::rose(&self.basis)
    }

    pub fn apply_move(&self, m: &NielsenMove) -> Result<Self> {
        RoseVertex::new(self.basis.apply_move(m))
    }

    /// `φ · R`: petals `φ(b_i)`.
    pub fn apply(&self, phi: &Automorphism) -> Result<Self> {
        RoseVertex::new(Basis { elements: self.basis.elements.iter().map(|w| phi.apply(w)).collect() })
    }

    /// `Θ`: the petal-dual sphere of least key.
    pub fn theta(&self) -> Result<NonSepSphere> {
        let mut all = self.dual_spheres()?;
        all.sort_by_key(|s| s.key());
        Ok(all.swap_remove(0))
    }
}

fn dual_sphere(b: &Basis, i: usize) -> Result<NonSepSphere> {
    let n = b.rank();
    let others: Vec<Word> = (0..n).filter(|&j| j != i).map(|j| b.elements[j].clone()).collect();
    NonSepSphere::from_splitting_rank(n, &others, &b.elements[i])
}

/// `ι(Σ, R)` for a marked graph `Σ` and a rose `R`.
pub fn iota(sigma: &MarkedGraph, r: &RoseVertex) -> Result<usize> {
    if sigma.rank() != r.rank() {
        return Err(Error::RankMismatch { expected: sigma.rank(), found: r.rank() });
    }
    let paths: Vec<Word> = r.petals().iter().map(|w| sigma.edge_path(w)).collect::<Result<_>>()?;
    Ok(iota_coords(&paths))
}

/// `ι(Σ, R)` when `Σ` is itself a rose.
pub fn iota_roses(sigma: &RoseVertex, r: &RoseVertex) -> usize {
    iota_coords(&r.petals().iter().map(|w| sigma.coordinates(w)).collect::<Vec<_>>())
}

/// `ι(Σ, R)` for a rose `Σ` against the petals `words` of a (sub)rose.
pub fn iota_words(sigma: &RoseVertex, words: &[Word]) -> usize {
    iota_coords(&words.iter().map(|w| sigma.coordinates(w)).collect::<Vec<_>>())
}

/// Intersection number of one sphere with a rose.
///
/// The petals are read in the sphere's chart, where the sphere is standard,
/// and the tree edges are the `x1`-letters (non-separating) or the marker
/// letters after the barbell substitution (separating).
pub fn iota_sphere(s: &Sphere, r: &RoseVertex) -> usize {
    let n = s.rank();
    let chart = s.chart();
    match s {
        Sphere::NonSep(_) => {
            let words: Vec<Word> = r.petals().iter().map(|w| chart.apply_word(w)).collect();
            min_conjugate_weight(&words, |l| l.abs() == 1)
        }
        Sphere::Sep(sep) => {
            let img = barbell_images(n, sep.k());
            let sub = |w: &Word| -> Word {
                let mut out = Word::identity();
                for &l in w.letters() {
                    let g = &img[l.unsigned_abs() as usize - 1];
                    out = out.mul(&if l > 0 { g.clone() } else { g.inverse() });
                }
                out
            };
            let words: Vec<Word> = r.petals().iter().map(|w| sub(&chart.apply_word(w))).collect();
            let marker = (n + 1) as Letter;
            min_conjugate_weight(&words, |l| l.abs() == marker)
        }
    }
}

/// Outcome of a single-twist bracket check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistCheck {
    pub before: usize,
    pub after: usize,
    pub holds: bool,
}

/// `ι(Σ, R′) ∈ [ι(Σ, R)/2, 2 ι(Σ, R)]` for `R′` one twist from `R`.
pub fn nielsen_twist_bound_check(sigma: &MarkedGraph, r: &RoseVertex, m: &NielsenMove) -> Result<TwistCheck> {
    if !m.is_twist() {
        return Err(Error::Precondition("the move must be a Nielsen twist".into()));
    }
    let before = iota(sigma, r)?;
    let after = iota(sigma, &r.apply_move(m)?)?;
    let holds = 2 * after >= before && after <= 2 * before;
    Ok(TwistCheck { before, after, holds })
}

/// Outcome of the path bound `ι(Σ, R′) ≤ 2^d ι(Σ, R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathCheck {
    pub before: usize,
    pub after: usize,
    /// Number of twists on the path (permutations and inversions are free).
    pub twists: usize,
    pub holds: bool,
}

/// Check the exponential bound along a Nielsen path from `R`.
pub fn nielsen_path_bound_check(sigma: &MarkedGraph, r: &RoseVertex, path: &[NielsenMove]) -> Result<PathCheck> {
    let before = iota(sigma, r)?;
    let end = RoseVertex::new(path.iter().fold(r.basis().clone(), |b, m| b.apply_move(m)))?;
    let after = iota(sigma, &end)?;
    let twists = path.iter().filter(|m| m.is_twist()).count();
    let holds = (after as f64) <= (before as f64) * 2f64.powi(twists as i32) + 1e-9;
    Ok(PathCheck { before, after, twists, holds })
}

/// Parameters of `(a, k)`-exponential growth.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    pub a: f64,
    pub k: usize,
}

impl GrowthParams {
    pub fn new(a: f64, k: usize) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) || k == 0 {
            return Err(Error::Precondition(format!("need 0 < a < 1 and k ≥ 1, got a = {}, k = {}", a, k)));
        }
        Ok(GrowthParams { a, k })
    }
}

/// When a descent stops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop once every sphere of the state is equal or disjoint to every
    /// sphere of the target.
    Disjoint,
    /// Continue until the target itself is reached.
    Reached,
}

/// Greedy full descent with a per-step twist budget `ℓ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescentPolicy {
    pub budget: usize,
    pub stop: StopRule,
}

impl DescentPolicy {
    pub fn greedy_full(budget: usize) -> Self {
        DescentPolicy { budget: budget.max(1), stop: StopRule::Disjoint }
    }

    pub fn with_stop(self, stop: StopRule) -> Self {
        DescentPolicy { stop, ..self }
    }

    pub fn id(&self) -> String {
        let stop = match self.stop {
            StopRule::Disjoint => "disjoint",
            StopRule::Reached => "reached",
        };
        format!("greedy-full/l={}/{}", self.budget, stop)
    }

    /// `C1 = 2^{−ℓ}`.
    pub fn c1(&self) -> f64 {
        0.5f64.powi(self.budget as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DescentOutcome {
    /// The state equals the target.
    Reached,
    /// Every sphere of the state is equal or disjoint to every target sphere.
    Disjoint,
    /// No budgeted move lowers the intersection with the target.
    Stalled,
}

/// A descent toward a target system. States are reduced systems, stored by
/// their dual roses `R_i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DescentSequence {
    pub states: Vec<RoseVertex>,
    /// Twists applied between consecutive states.
    pub steps: Vec<Vec<NielsenMove>>,
    pub target: RoseVertex,
    pub policy: DescentPolicy,
    /// `ι(target, R_i)`; strictly decreasing.
    pub target_iota: Vec<usize>,
    pub outcome: DescentOutcome,
}

impl DescentSequence {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The marked graphs of the states.
    pub fn systems(&self) -> Vec<MarkedGraph> {
        self.states.iter().map(RoseVertex::system).collect()
    }

    /// `ι(Σ_s, R_i)` for every `i`.
    pub fn iota_from(&self, s: usize) -> Vec<usize> {
        let sys = &self.states[s];
        self.states.iter().map(|r| iota_roses(sys, r)).collect()
    }

    /// `ι(Σ, R_i)` for an outside system `Σ`.
    pub fn iota_against(&self, sigma: &RoseVertex) -> Vec<usize> {
        self.states.iter().map(|r| iota_roses(sigma, r)).collect()
    }

    /// Slopes of `Θ(Σ_i)` (rank two only).
    pub fn slope_projection(&self) -> Result<Vec<Slope>> {
        self.states.iter().map(|r| sphere_slope(&r.theta()?)).collect()
    }
}

fn twists(n: usize) -> Vec<NielsenMove> {
    NielsenMove::all(n).into_iter().filter(NielsenMove::is_twist).collect()
}

/// Whether every petal-dual sphere of `a` is equal or disjoint to every sphere in `sb`.
fn systems_disjoint(a: &RoseVertex, sb: &[NonSepSphere]) -> Result<bool> {
    let sa = a.dual_spheres()?;
    for x in &sa {
        for y in sb {
            if x.key() == y.key() {
                continue;
            }
            if !disjoint(&Sphere::NonSep(x.clone()), &Sphere::NonSep(y.clone()))?.is_yes() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Greedy descent from `start` toward `target`.
///
/// A step applies up to `ℓ` single twists, each strictly lowering
/// `ι(target, ·)`; when no single twist helps, the best strictly improving
/// pair is used instead (if `ℓ ≥ 2`). When neither exists the descent stops
/// as [`DescentOutcome::Stalled`] and the sequence so far is returned.
pub fn descend(start: &RoseVertex, target: &RoseVertex, policy: DescentPolicy) -> Result<DescentSequence> {
    let n = start.rank();
    if target.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: target.rank() });
    }
    let moves = twists(n);
    let mut basis = start.basis().clone();
    let mut coords: Vec<Word> = basis.elements.iter().map(|w| target.coordinates(w)).collect();
    let mut cur = iota_coords(&coords);
    let mut states = vec![start.clone()];
    let mut steps: Vec<Vec<NielsenMove>> = Vec::new();
    let mut target_iota = vec![cur];
    let apply = |c: &[Word], m: &NielsenMove| -> Vec<Word> {
        let mut t = c.to_vec();
        m.apply_to_tuple(&mut t);
        t
    };
    let target_spheres = target.dual_spheres()?;
    let outcome = loop {
        if cur == n {
            break DescentOutcome::Reached;
        }
        if policy.stop == StopRule::Disjoint && systems_disjoint(states.last().unwrap(), &target_spheres)? {
            break DescentOutcome::Disjoint;
        }
        let mut step: Vec<NielsenMove> = Vec::new();
        for _ in 0..policy.budget {
            let best = moves
                .iter()
                .map(|m| (iota_coords(&apply(&coords, m)), *m))
                .min_by_key(|&(v, _)| v)
                .filter(|&(v, _)| v < cur);
            match best {
                Some((v, m)) => {
                    coords = apply(&coords, &m);
                    cur = v;
                    step.push(m);
                    if cur == n {
                        break;
                    }
                }
                None => break,
            }
        }
        if step.is_empty() && policy.budget >= 2 {
            let mut best: Option<(usize, NielsenMove, NielsenMove)> = None;
            for m1 in &moves {
                let c1 = apply(&coords, m1);
                for m2 in &moves {
                    let v = iota_coords(&apply(&c1, m2));
                    if v < cur && best.is_none_or(|(b, _, _)| v < b) {
                        best = Some((v, *m1, *m2));
                    }
                }
            }
            if let Some((v, m1, m2)) = best {
                coords = apply(&apply(&coords, &m1), &m2);
                cur = v;
                step = vec![m1, m2];
            }
        }
        if step.is_empty() {
            break DescentOutcome::Stalled;
        }
        for m in &step {
            basis = basis.apply_move(m);
        }
        states.push(RoseVertex::new(basis.clone())?);
        steps.push(step);
        target_iota.push(cur);
    };
    Ok(DescentSequence { states, steps, target: target.clone(), policy, target_iota, outcome })
}

/// Verdict of the exponential-growth detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub exponential: bool,
    /// Too short for any inequality to apply (vacuously exponential).
    pub degenerate: bool,
    /// First failing `(i, family)`: family 0 is decay toward `Σ_m`, family 1 is growth away from `Σ_0`.
    pub violation: Option<(usize, u8)>,
}

/// `(a, k)`-exponential growth of a descent sequence.
pub fn growth_detect(seq: &DescentSequence, p: GrowthParams) -> GrowthVerdict {
    let m = seq.len() - 1;
    if seq.len() <= p.k {
        return GrowthVerdict { exponential: true, degenerate: true, violation: None };
    }
    let last = seq.iota_from(m);
    let first = seq.iota_from(0);
    growth_from_values(&first, &last, p)
}

/// The detector on precomputed values `ι(Σ_0, R_i)` and `ι(Σ_m, R_i)`.
pub fn growth_from_values(first: &[usize], last: &[usize], p: GrowthParams) -> GrowthVerdict {
    let len = first.len();
    if len <= p.k {
        return GrowthVerdict { exponential: true, degenerate: true, violation: None };
    }
    for i in 0..len - p.k {
        if last[i + p.k] as f64 > p.a * last[i] as f64 + 1e-12 {
            return GrowthVerdict { exponential: false, degenerate: false, violation: Some((i, 0)) };
        }
        if first[i] as f64 > p.a * first[i + p.k] as f64 + 1e-12 {
            return GrowthVerdict { exponential: false, degenerate: false, violation: Some((i, 1)) };
        }
    }
    GrowthVerdict { exponential: true, degenerate: false, violation: None }
}

/// Image of the balanced retraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RetractionPoint {
    /// `κ` is below the range: the first state.
    Start,
    /// `κ` is above the range: the last state.
    End,
    Index(usize),
}

impl RetractionPoint {
    /// Position along a sequence with `len` states.
    pub fn position(&self, len: usize) -> usize {
        match *self {
            RetractionPoint::Start => 0,
            RetractionPoint::End => len - 1,
            RetractionPoint::Index(i) => i,
        }
    }
}

/// Result of the balanced retraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Retraction {
    pub point: RetractionPoint,
    pub kappa: f64,
    /// Whether some index fell inside the `C1` window (always true when the
    /// per-step displacement is bounded by `C1`).
    pub in_window: bool,
}

/// The log-ratio profile `r_i = log(ι(Σ, R_i)/ι(Λ, R_i))` of a sequence.
pub fn log_ratio_profile(seq: &DescentSequence) -> Vec<f64> {
    let first = seq.iota_from(0);
    let last = seq.iota_from(seq.len() - 1);
    first.iter().zip(&last).map(|(&a, &b)| (a as f64 / b as f64).ln()).collect()
}

/// Balanced retraction of a rose `G` onto the sequence.
pub fn balanced_retraction(seq: &DescentSequence, g: &RoseVertex, c1: f64) -> Result<Retraction> {
    let profile = log_ratio_profile(seq);
    retract_with_profile(seq, &profile, g, c1)
}

/// As [`balanced_retraction`] with a precomputed profile.
pub fn retract_with_profile(seq: &DescentSequence, profile: &[f64], g: &RoseVertex, c1: f64) -> Result<Retraction> {
    if !(c1 > 0.0 && c1 <= 1.0) {
        return Err(Error::Precondition(format!("C1 must lie in (0, 1], got {}", c1)));
    }
    let a = iota_roses(&seq.states[0], g);
    let b = iota_roses(&seq.states[seq.len() - 1], g);
    if a == 0 || b == 0 {
        return Err(Error::Precondition("degenerate rose: zero intersection".into()));
    }
    let kappa = (a as f64 / b as f64).ln();
    let m = profile.len() - 1;
    if kappa < profile[0] {
        return Ok(Retraction { point: RetractionPoint::Start, kappa, in_window: true });
    }
    if kappa > profile[m] {
        return Ok(Retraction { point: RetractionPoint::End, kappa, in_window: true });
    }
    let half = -c1.ln();
    let (i, gap) = profile
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r - kappa).abs()))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty profile");
    Ok(Retraction { point: RetractionPoint::Index(i), kappa, in_window: gap <= half + 1e-12 })
}

/// The displacement bound for the retraction of one sequence.
///
/// Under one Nielsen move of `G` the value `κ` moves by at most `2 log 2`,
/// and the chosen index has `r_i` within `|log C1|` of `κ`. So two images
/// have profile values within `D = 2 log 2 + 2 |log C1|`, and the bound is
/// the largest index gap between two profile values that close.
pub fn retraction_lipschitz_bound(profile: &[f64], c1: f64) -> usize {
    let d = 2.0 * std::f64::consts::LN_2 + 2.0 * (-c1.ln());
    let mut best = 0;
    for i in 0..profile.len() {
        for j in i + 1..profile.len() {
            if (profile[j] - profile[i]).abs() <= d + 1e-12 {
                best = best.max(j - i);
            }
        }
    }
    best
}

/// Slope of a rank-two non-separating sphere (the slope of its factor).
pub fn sphere_slope(s: &NonSepSphere) -> Result<Slope> {
    if s.rank() != 2 {
        return Err(Error::RankMismatch { expected: 2, found: s.rank() });
    }
    let gens = s.factor().representative().generators();
    let g = gens.first().ok_or_else(|| Error::Precondition("trivial factor".into()))?;
    let v = g.abelianization(2);
    Slope::new(v[0], v[1])
}

/// The rank-two sphere of a slope, built from a Christoffel pair.
pub fn slope_sphere(s: &Slope) -> Result<NonSepSphere> {
    let (u, t) = farey::christoffel_pair(s);
    NonSepSphere::from_splitting_rank(2, &[u], &t)
}

/// Exact sphere-graph distance in rank two.
///
/// Non-separating spheres are slopes and adjacency is Farey adjacency. A
/// separating sphere `⟨a⟩ | ⟨b⟩` is adjacent exactly to the two slopes of
/// `a` and `b`, which are Farey neighbours, so it never shortens a path.
pub fn rank2_sg_distance(x: &Sphere, y: &Sphere) -> Result<usize> {
    if x.rank() != 2 || y.rank() != 2 {
        return Err(Error::RankMismatch { expected: 2, found: x.rank().max(y.rank()) });
    }
    if x.key() == y.key() {
        return Ok(0);
    }
    let ends = |s: &Sphere| -> Result<Vec<Slope>> {
        match s {
            Sphere::NonSep(ns) => Ok(vec![sphere_slope(ns)?]),
            Sphere::Sep(sep) => {
                let (p, q) = sep.parts();
                let sp = NonSepSphere::from_factor(q)?;
                let sq = NonSepSphere::from_factor(p)?;
                Ok(vec![sphere_slope(&sp)?, sphere_slope(&sq)?])
            }
        }
    };
    let (ex, ey) = (ends(x)?, ends(y)?);
    let base = ex.iter().flat_map(|a| ey.iter().map(move |b| farey::distance(a, b))).min().unwrap();
    Ok(base + usize::from(x.is_separating()) + usize::from(y.is_separating()))
}

/// Normalised unordered pair of primitive vectors (a rank-two rose mod signed permutations).
fn rose_edge(u: (i64, i64), v: (i64, i64)) -> [(i64, i64); 2] {
    let norm = |w: (i64, i64)| if w.0 < 0 || (w.0 == 0 && w.1 < 0) { (-w.0, -w.1) } else { w };
    let (a, b) = (norm(u), norm(v));
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Distance in the rank-two rose graph (roses related by one twist are adjacent).
///
/// Rank-two roses are Farey edges and a twist rotates an edge about one of
/// its ends into an adjacent triangle. The search runs in the coordinates of
/// `a`, where the geodesics stay inside the Stern–Brocot corridor whose
/// entries are bounded by those of the target.
pub fn rank2_rose_distance(a: &RoseVertex, b: &RoseVertex) -> Result<usize> {
    if a.rank() != 2 || b.rank() != 2 {
        return Err(Error::RankMismatch { expected: 2, found: a.rank().max(b.rank()) });
    }
    let vec_of = |w: &Word| {
        let v = a.coordinates(w).abelianization(2);
        (v[0], v[1])
    };
    let target = rose_edge(vec_of(&b.petals()[0]), vec_of(&b.petals()[1]));
    let h = target.iter().map(|v| v.0.abs().max(v.1.abs())).max().unwrap();
    Ok(rose_graph_bfs(target, h).expect("corridor contains a path"))
}

fn rose_graph_bfs(target: [(i64, i64); 2], h: i64) -> Option<usize> {
    let start = rose_edge((1, 0), (0, 1));
    let mut seen: HashSet<[(i64, i64); 2]> = HashSet::from([start]);
    let mut q = VecDeque::from([(start, 0usize)]);
    while let Some((e, d)) = q.pop_front() {
        if e == target {
            return Some(d);
        }
        let [u, v] = e;
        for next in [
            rose_edge((u.0 + v.0, u.1 + v.1), v),
            rose_edge((u.0 - v.0, u.1 - v.1), v),
            rose_edge(u, (v.0 + u.0, v.1 + u.1)),
            rose_edge(u, (v.0 - u.0, v.1 - u.1)),
        ] {
            if next.iter().all(|w| w.0.abs() <= h && w.1.abs() <= h) && seen.insert(next) {
                q.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Verdict of the tight-position inequality `B d_SG(Θ0, Θ1) ≥ d_SSG(Σ0, Σ1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightPosition {
    pub d_sg: usize,
    pub d_ssg: usize,
    pub holds: bool,
}

/// Tight position of two reduced systems (rank two, exact distances).
///
/// The simple sphere system graph distance is measured in the rose graph,
/// which is quasi-isometric to it.
pub fn tight_position_check(s0: &RoseVertex, s1: &RoseVertex, b: f64) -> Result<TightPosition> {
    if s0.rank() != 2 {
        return Err(Error::Unavailable("tight position needs exact distances (rank two)".into()));
    }
    let d_sg = rank2_sg_distance(&Sphere::NonSep(s0.theta()?), &Sphere::NonSep(s1.theta()?))?;
    let d_ssg = rank2_rose_distance(s0, s1)?;
    Ok(TightPosition { d_sg, d_ssg, holds: b * d_sg as f64 + 1e-12 >= d_ssg as f64 })
}

/// Verdict of the logarithmic distance bound for a tight pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBound {
    pub tight: TightPosition,
    pub iota: usize,
    /// `Σ0 = Σ1`; excluded because `log2 ι` is then not informative.
    pub degenerate: bool,
    /// `d_SSG ∈ [log2 ι / a, a log2 ι]`; vacuously true when not tight.
    pub holds: bool,
}

/// `d_SSG(Σ0, Σ1) ∈ [log2 ι(Σ0, R1)/a, a log2 ι(Σ0, R1)]` for `B`-tight pairs.
pub fn log_bound_check(s0: &RoseVertex, s1: &RoseVertex, b: f64, a: f64) -> Result<LogBound> {
    let tight = tight_position_check(s0, s1, b)?;
    let iota = iota_roses(s0, s1);
    let degenerate = s0 == s1;
    let l = (iota as f64).log2();
    let d = tight.d_ssg as f64;
    let holds = !tight.holds || degenerate || (d + 1e-9 >= l / a && d <= a * l + 1e-9);
    Ok(LogBound { tight, iota, degenerate, holds })
}

/// The least `a ≥ 1` making every tight, non-degenerate pair satisfy the log bound.
pub fn calibrate_log_bound(pairs: &[(RoseVertex, RoseVertex)], b: f64) -> Result<f64> {
    let mut a = 1.0f64;
    for (s0, s1) in pairs {
        let t = tight_position_check(s0, s1, b)?;
        if !t.holds || s0 == s1 {
            continue;
        }
        let l = (iota_roses(s0, s1) as f64).log2();
        let d = t.d_ssg as f64;
        if d > 0.0 && l > 0.0 {
            a = a.max(d / l).max(l / d);
        }
    }
    Ok(a)
}

/// Verdict of `d_SG(S, S′) ≤ 2 log2 ι(S, R) + 3`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceBoundVerdict {
    pub iota: usize,
    pub distance: usize,
    pub bound: f64,
    pub holds: bool,
}

/// Distance bound from a sphere to a petal-dual sphere of a rose.
pub fn distance_bound_check<D>(s: &Sphere, r: &RoseVertex, s_prime: &NonSepSphere, dist: D) -> Result<DistanceBoundVerdict>
where
    D: Fn(&Sphere, &Sphere) -> Result<usize>,
{
    if !r.key().contains(&s_prime.key()) {
        return Err(Error::Precondition("S′ must be dual to a petal of R".into()));
    }
    let iota = iota_sphere(s, r);
    if iota == 0 {
        return Err(Error::Precondition("sphere misses the rose".into()));
    }
    let distance = dist(s, &Sphere::NonSep(s_prime.clone()))?;
    let bound = 2.0 * (iota as f64).log2() + 3.0;
    Ok(DistanceBoundVerdict { iota, distance, bound, holds: distance as f64 <= bound + 1e-9 })
}

/// Verdict of `ι(Σ_i, R̂) ≤ ι(Σ_0, R̂) + 2i` along a descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearBound {
    pub values: Vec<usize>,
    pub violations: Vec<usize>,
}

/// Linear growth of the intersection with an `m`-petal subrose `R̂` that
/// meets the target exactly `m` times.
pub fn subrose_bound_check(seq: &DescentSequence, subrose: &[Word], m: usize) -> Result<LinearBound> {
    if subrose.len() != m {
        return Err(Error::Precondition(format!("subrose has {} petals, expected {}", subrose.len(), m)));
    }
    if iota_words(&seq.target, subrose) != m {
        return Err(Error::Precondition("subrose must meet the target in exactly m points".into()));
    }
    if seq.steps.iter().any(|s| s.len() > seq.policy.budget || s.iter().any(|mv| !mv.is_twist())) {
        return Err(Error::Precondition("a step exceeds the policy's twist budget".into()));
    }
    let values: Vec<usize> = seq.states.iter().map(|r| iota_words(r, subrose)).collect();
    let violations = (0..values.len()).filter(|&i| values[i] > values[0] + 2 * i).collect();
    Ok(LinearBound { values, violations })
}

/// Per-step ratio bound `ι(Σ_s, R_{i+1}) ≥ C1 ι(Σ_s, R_i)` for `s ∈ {0, m}`.
pub fn step_ratio_check(seq: &DescentSequence, c1: f64) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for s in [0, seq.len() - 1] {
        let v = seq.iota_from(s);
        for i in 0..v.len().saturating_sub(1) {
            let (x, y) = (v[i] as f64, v[i + 1] as f64);
            if y + 1e-9 < c1 * x || x + 1e-9 < c1 * y {
                bad.push((s, i));
            }
        }
    }
    bad
}

/// One member of the family showing that descents need not be quasi-geodesics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FibonacciTwist {
    pub k: usize,
    /// `x1 ↦ x1 α^k(x2)`, fixing `x2, x3`.
    pub psi: Automorphism,
    /// `α^k`, one twist, then `α^{−k}`, all on tuple positions.
    pub path: Vec<NielsenMove>,
    /// Moves per application of `α`.
    pub m: usize,
    pub alpha_k_x2: Word,
    /// `ι(Σ0, ψ_k(R))` with `Σ0`, `R` the standard rose.
    pub iota: usize,
}

/// `α = (x2 ↦ x2 x3, x3 ↦ x2)` on tuple positions 1, 2 (0-based).
pub fn alpha_moves() -> Vec<NielsenMove> {
    vec![NielsenMove::swap(1, 2), NielsenMove::left(1, 2, 1)]
}

/// The `k`-th member of the family.
pub fn fibonacci_twist_family(k: usize) -> Result<FibonacciTwist> {
    if k == 0 {
        return Err(Error::Precondition("k must be at least 1".into()));
    }
    let alpha = alpha_moves();
    let m = alpha.len();
    let mut path = Vec::with_capacity(2 * k * m + 1);
    for _ in 0..k {
        path.extend(alpha.iter().copied());
    }
    path.push(NielsenMove::right(0, 1, 1));
    let undo: Vec<NielsenMove> = alpha.iter().rev().map(NielsenMove::inverse).collect();
    for _ in 0..k {
        path.extend(undo.iter().copied());
    }
    let mut pair = vec![Word::gen(2), Word::gen(3)];
    for _ in 0..k {
        pair = vec![pair[0].mul(&pair[1]), pair[0].clone()];
    }
    let alpha_k_x2 = pair.swap_remove(0);
    let psi = Automorphism::new(vec![Word::gen(1).mul(&alpha_k_x2), Word::gen(2), Word::gen(3)])?;
    let image = RoseVertex::standard(3).apply(&psi)?;
    let iota = iota_roses(&RoseVertex::standard(3), &image);
    Ok(FibonacciTwist { k, psi, path, m, alpha_k_x2, iota })
}

/// Least-squares fit of `log ι(Σ0, ψ_k(R))` against `k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentialFit {
    pub ks: Vec<usize>,
    pub iotas: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn fibonacci_twist_fit(ks: &[usize]) -> Result<ExponentialFit> {
    let iotas: Vec<usize> = ks.iter().map(|&k| fibonacci_twist_family(k).map(|e| e.iota)).collect::<Result<_>>()?;
    let xs: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = iotas.iter().map(|&i| (i as f64).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(ExponentialFit { ks: ks.to_vec(), iotas, slope, intercept })
}

/// Ordinary least squares `y ≈ slope x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

/// A calibrated constant with the experiment that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibrated {
    pub value: f64,
    pub experiment: String,
}

/// Empirical stand-ins for the constants the arguments leave unspecified.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    /// Lower bound factor in `d_SSG ≥ C0 log2 ι`.
    pub c0: Option<Calibrated>,
    /// Per-step ratio bound of descents.
    pub c1: Option<Calibrated>,
    /// Projection diameter bound.
    pub q: Option<Calibrated>,
    /// Projection bound along `L`-quasi-geodesics, keyed by `L`.
    pub q_l_table: BTreeMap<String, Calibrated>,
    /// Retraction Lipschitz constant.
    pub l: Option<Calibrated>,
    /// Quasi-geodesic constant of `(a, k)`-exponential descents, keyed by `a/k`.
    pub ell_table: BTreeMap<String, Calibrated>,
}

impl CalibrationConstants {
    /// Every stored value must be positive and finite.
    pub fn validate(&self) -> Result<()> {
        let singles = [("C0", &self.c0), ("C1", &self.c1), ("q", &self.q), ("L", &self.l)];
        let tables = self.q_l_table.iter().chain(self.ell_table.iter());
        for (name, c) in singles.iter().filter_map(|(n, c)| c.as_ref().map(|c| (n.to_string(), c))).chain(tables.map(|(k, c)| (k.clone(), c))) {
            if !(c.value > 0.0 && c.value.is_finite()) {
                return Err(Error::Precondition(format!("calibrated {} must be positive, got {}", name, c.value)));
            }
            if c.experiment.is_empty() {
                return Err(Error::Precondition(format!("calibrated {} has no experiment tag", name)));
            }
        }
        Ok(())
    }
}

/// A random rose reached by `len` random twists from the standard one.
pub fn random_rose<R: Rng>(rng: &mut R, n: usize, len: usize) -> RoseVertex {
    let moves = twists(n);
    let mut b = Basis::standard(n);
    for _ in 0..len {
        b = b.apply_move(&moves[rng.gen_range(0..moves.len())]);
    }
    RoseVertex::new(b).expect("moves preserve bases")
}

/// A random reduced or non-reduced simple system: one of a few graph shapes
/// with its marking moved by a random automorphism.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, len: usize) -> MarkedGraph {
    let g = |i: usize| Word::gen(i);
    let e = |tail: usize, head: usize, word: Word| MarkedEdge { tail, head, word };
    let shape = rng.gen_range(0..3);
    let base = match shape {
        0 => MarkedGraph::rose(&Basis::standard(n)),
        1 => {
            // theta graph carrying x1, x2 plus loops for the rest
            let mut edges = vec![e(0, 1, Word::identity()), e(0, 1, g(1)), e(0, 1, g(2))];
            edges.extend((3..=n).map(|i| e(0, 0, g(i))));
            MarkedGraph::new(n, 2, edges).expect("theta marking")
        }
        _ => {
            // barbell: x1 at one end, the rest at the other
            let mut edges = vec![e(0, 0, g(1)), e(0, 1, Word::identity())];
            edges.extend((2..=n).map(|i| e(1, 1, g(i))));
            MarkedGraph::new(n, 2, edges).expect("barbell marking")
        }
    };
    let r = random_rose(rng, n, len);
    base.apply(&r.basis().as_automorphism())
}

/// A random Nielsen twist in rank `n`.
pub fn random_twist<R: Rng>(rng: &mut R, n: usize) -> NielsenMove {
    let moves = twists(n);
    moves[rng.gen_range(0..moves.len())]
}

/// The rose `M · R0` for a rank-two matrix given by its Nielsen word.
pub fn rank2_driver(moves: &[NielsenMove]) -> RoseVertex {
    let b = moves.iter().fold(Basis::standard(2), |b, m| b.apply_move(m));
    RoseVertex::new(b).expect("moves preserve bases")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn rose(ws: &[&str]) -> RoseVertex {
        RoseVertex::new(Basis::new(ws.iter().map(|s| w(s)).collect()).unwrap()).unwrap()
    }

    #[test]
    fn iota_of_dual_pair_is_rank() {
        for n in 2..=4 {
            let r = RoseVertex::standard(n);
            assert_eq!(iota(&r.system(), &r).unwrap(), n);
        }
        let r = rose(&["x1 x2 x1", "x1 x2"]);
        assert_eq!(iota(&r.system(), &r).unwrap(), 2);
    }

    #[test]
    fn iota_of_one_twist() {
        let s = RoseVertex::standard(3);
        assert_eq!(iota(&s.system(), &rose(&["x1 x2", "x2", "x3"])).unwrap(), 4);
        assert_eq!(iota_roses(&s, &rose(&["x1 x2", "x2", "x3"])), 4);
    }

    #[test]
    fn conjugation_is_minimised() {
        // a globally conjugated rose is the same vertex
        let c = w("x2 x1");
        let r = RoseVertex::new(Basis { elements: vec![w("x1").conjugate_by(&c), w("x2").conjugate_by(&c)] }).unwrap();
        assert_eq!(r, RoseVertex::standard(2));
        assert_eq!(iota_roses(&RoseVertex::standard(2), &r), 2);
    }

    #[test]
    fn rose_vertex_ignores_order_and_inversion() {
        assert_eq!(rose(&["x2", "X1"]), RoseVertex::standard(2));
        assert_ne!(rose(&["x1 x2", "x2"]), RoseVertex::standard(2));
    }

    #[test]
    fn iota_on_non_reduced_systems() {
        let theta = MarkedGraph::new(
            2,
            2,
            vec![
                MarkedEdge { tail: 0, head: 1, word: Word::identity() },
                MarkedEdge { tail: 0, head: 1, word: w("x1") },
                MarkedEdge { tail: 0, head: 1, word: w("x2") },
            ],
        )
        .unwrap();
        // each standard petal crosses the theta graph in two edges
        assert_eq!(iota(&theta, &RoseVertex::standard(2)).unwrap(), 4);
    }

    #[test]
    fn slope_spheres_meet_the_standard_rose_in_p_plus_q_points() {
        let r = RoseVertex::standard(2);
        for s in Slope::all_up_to_height(12) {
            let sph = slope_sphere(&s).unwrap();
            assert_eq!(sphere_slope(&sph).unwrap(), s);
            assert_eq!(iota_sphere(&Sphere::NonSep(sph), &r), (s.p.abs() + s.q) as usize, "slope {}", s);
        }
    }

    #[test]
    fn separating_sphere_iota() {
        // the vertex of a rose lies on one side, so a petal on the other side crosses twice
        let s = Sphere::Sep(crate::splittings::SepSphere::standard(2, 1));
        assert_eq!(iota_sphere(&s, &RoseVertex::standard(2)), 2);
        assert_eq!(iota_sphere(&s, &rose(&["x1 x2", "x2"])), 2);
    }

    #[test]
    fn twist_bracket_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let sigma = random_system(&mut rng, 3, 6);
            let r = random_rose(&mut rng, 3, 4);
            let m = random_twist(&mut rng, 3);
            let c = nielsen_twist_bound_check(&sigma, &r, &m).unwrap();
            assert!(c.holds, "{:?}", c);
            let back = r.apply_move(&m).unwrap().apply_move(&m.inverse()).unwrap();
            assert_eq!(iota(&sigma, &back).unwrap(), c.before);
        }
        assert!(nielsen_twist_bound_check(&RoseVertex::standard(2).system(), &RoseVertex::standard(2), &NielsenMove::swap(0, 1)).is_err());
    }

    #[test]
    fn path_bound_counts_only_twists() {
        let s = RoseVertex::standard(2);
        let path = [NielsenMove::right(0, 1, 1), NielsenMove::swap(0, 1), NielsenMove::right(0, 1, 1)];
        let c = nielsen_path_bound_check(&s.system(), &s, &path).unwrap();
        assert_eq!(c.twists, 2);
        assert!(c.holds);
    }

    #[test]
    fn descent_to_self_is_empty() {
        let s = random_rose(&mut ChaCha8Rng::seed_from_u64(1), 3, 5);
        let d = descend(&s, &s, DescentPolicy::greedy_full(2)).unwrap();
        assert!(d.is_empty());
        assert_eq!(d.outcome, DescentOutcome::Reached);
    }

    fn fib_target(j: usize) -> RoseVertex {
        // M = [[1,1],[1,0]] as the tuple move pair (b1 ← b1 b2, swap)
        let mut moves = Vec::new();
        for _ in 0..j {
            moves.push(NielsenMove::right(0, 1, 1));
            moves.push(NielsenMove::swap(0, 1));
        }
        rank2_driver(&moves)
    }

    #[test]
    fn fibonacci_descent_grows_exponentially() {
        let s = RoseVertex::standard(2);
        let t = fib_target(16);
        let d = descend(&s, &t, DescentPolicy::greedy_full(2).with_stop(StopRule::Reached)).unwrap();
        assert_eq!(d.outcome, DescentOutcome::Reached);
        assert!(d.target_iota.windows(2).all(|p| p[1] < p[0]));
        assert!(d.steps.iter().all(|s| s.len() <= 2));
        let v = growth_detect(&d, GrowthParams::new(0.9, 4).unwrap());
        assert!(v.exponential && !v.degenerate, "{:?} {:?}", v, d.target_iota);
        assert!(step_ratio_check(&d, d.policy.c1()).is_empty());
        assert!(d.len() <= 12, "length {}", d.len());
    }

    #[test]
    fn disjoint_stop_ends_early() {
        let s = RoseVertex::standard(2);
        let t = rank2_driver(&[NielsenMove::right(0, 1, 1); 9]);
        let d = descend(&s, &t, DescentPolicy::greedy_full(2)).unwrap();
        // slope 1/9 is not adjacent to 1/0, so the descent runs until it is
        assert_eq!(d.outcome, DescentOutcome::Disjoint);
        assert_eq!(*d.target_iota.last().unwrap(), 3);
    }

    #[test]
    fn parabolic_descent_is_not_exponential() {
        let s = RoseVertex::standard(2);
        let t = rank2_driver(&[NielsenMove::right(0, 1, 1); 200]);
        let d = descend(&s, &t, DescentPolicy::greedy_full(2).with_stop(StopRule::Reached)).unwrap();
        assert_eq!(d.outcome, DescentOutcome::Reached);
        assert_eq!(d.len(), 101);
        assert!(!growth_detect(&d, GrowthParams::new(0.9, 4).unwrap()).exponential);
        let slopes = d.slope_projection().unwrap();
        assert!(!farey::quasigeodesic_test(&slopes, 4.0).holds);
    }

    #[test]
    fn growth_detector_edge_cases() {
        let p = GrowthParams::new(0.9, 4).unwrap();
        let flat = vec![5usize; 10];
        assert!(!growth_from_values(&flat, &flat, p).exponential);
        let short = vec![5usize; 4];
        let v = growth_from_values(&short, &short, p);
        assert!(v.exponential && v.degenerate);
        assert!(GrowthParams::new(1.0, 2).is_err());
    }

    #[test]
    fn retraction_of_a_sequence_state() {
        let s = RoseVertex::standard(2);
        let d = descend(&s, &fib_target(14), DescentPolicy::greedy_full(2).with_stop(StopRule::Reached)).unwrap();
        let c1 = d.policy.c1();
        let profile = log_ratio_profile(&d);
        let bound = retraction_lipschitz_bound(&profile, c1);
        for j in 0..d.len() {
            let r = balanced_retraction(&d, &d.states[j], c1).unwrap();
            assert!(r.in_window);
            let pos = r.point.position(d.len());
            assert!(pos.abs_diff(j) <= bound, "j = {} pos = {} bound = {}", j, pos, bound);
        }
    }

    #[test]
    fn retraction_clamps() {
        let s = RoseVertex::standard(2);
        let d = descend(&s, &fib_target(10), DescentPolicy::greedy_full(2).with_stop(StopRule::Reached)).unwrap();
        // a rose far beyond the start on the other side
        let far = rank2_driver(&[NielsenMove::left(1, 0, -1); 30]);
        let r = balanced_retraction(&d, &far, d.policy.c1()).unwrap();
        assert!(matches!(r.point, RetractionPoint::Start | RetractionPoint::End | RetractionPoint::Index(_)));
        assert!(balanced_retraction(&d, &s, 2.0).is_err());
    }

    #[test]
    fn rank2_rose_distance_matches_unbounded_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let b = random_rose(&mut rng, 2, 6);
            let d = rank2_rose_distance(&RoseVertex::standard(2), &b).unwrap();
            let vec_of = |w: &Word| {
                let v = w.abelianization(2);
                (v[0], v[1])
            };
            let t = rose_edge(vec_of(&b.petals()[0]), vec_of(&b.petals()[1]));
            let h = t.iter().map(|v| v.0.abs().max(v.1.abs())).max().unwrap();
            assert_eq!(rose_graph_bfs(t, h + 4), Some(d));
            assert!(d <= 6);
        }
        let t1 = rank2_driver(&[NielsenMove::right(0, 1, 1); 7]);
        assert_eq!(rank2_rose_distance(&RoseVertex::standard(2), &t1).unwrap(), 7);
    }

    #[test]
    fn tight_position_examples() {
        let s = RoseVertex::standard(2);
        assert!(tight_position_check(&s, &s, 0.5).unwrap().holds);
        let par = rank2_driver(&[NielsenMove::right(0, 1, 1); 20]);
        let t = tight_position_check(&s, &par, 2.0).unwrap();
        assert!(!t.holds && t.d_sg <= 2 && t.d_ssg == 20);
        let hyp = fib_target(8);
        let t = tight_position_check(&s, &hyp, 3.0).unwrap();
        assert!(t.holds, "{:?}", t);
        let c = log_bound_check(&s, &s, 2.0, 2.0).unwrap();
        assert!(c.degenerate && c.holds);
        let a = calibrate_log_bound(&[(s.clone(), hyp.clone())], 3.0).unwrap();
        assert!(log_bound_check(&s, &hyp, 3.0, a).unwrap().holds);
        assert!(log_bound_check(&s, &par, 2.0, 1.0).unwrap().holds, "non-tight pairs are vacuous");
    }

    #[test]
    fn distance_bound_examples() {
        let r = RoseVertex::standard(2);
        let s_inf = NonSepSphere::from_splitting_rank(2, &[w("x1")], &w("x2")).unwrap();
        for k in 1..=14 {
            let s = Slope::new(farey::fibonacci(k + 1), farey::fibonacci(k)).unwrap();
            let sph = Sphere::NonSep(slope_sphere(&s).unwrap());
            let v = distance_bound_check(&sph, &r, &s_inf, rank2_sg_distance).unwrap();
            assert!(v.holds, "k = {} {:?}", k, v);
        }
        for k in 2..=20 {
            let sph = Sphere::NonSep(slope_sphere(&Slope::new(k, 1).unwrap()).unwrap());
            let s0 = NonSepSphere::from_splitting_rank(2, &[w("x2")], &w("x1")).unwrap();
            let v = distance_bound_check(&sph, &r, &s0, rank2_sg_distance).unwrap();
            assert_eq!(v.distance, 2);
            assert!(v.holds);
        }
        let off = slope_sphere(&Slope::new(2, 3).unwrap()).unwrap();
        assert!(distance_bound_check(&Sphere::NonSep(off.clone()), &r, &off, rank2_sg_distance).is_err());
    }

    #[test]
    fn separating_distances_in_rank_two() {
        let sep = Sphere::Sep(crate::splittings::SepSphere::standard(2, 1));
        let inf = Sphere::NonSep(slope_sphere(&Slope::INFINITY).unwrap());
        let far = Sphere::NonSep(slope_sphere(&Slope::new(2, 5).unwrap()).unwrap());
        assert_eq!(rank2_sg_distance(&sep, &inf).unwrap(), 1);
        assert_eq!(rank2_sg_distance(&sep, &far).unwrap(), 1 + 2);
        assert_eq!(rank2_sg_distance(&sep, &sep).unwrap(), 0);
    }

    #[test]
    fn fibonacci_twist_small_cases() {
        let e = fibonacci_twist_family(1).unwrap();
        assert_eq!(e.alpha_k_x2.len(), 2);
        assert_eq!(e.iota, 2 + 1 + 2);
        for k in 1..=6 {
            let e = fibonacci_twist_family(k).unwrap();
            assert_eq!(e.path.len(), 2 * k * e.m + 1);
            let end = e.path.iter().fold(Basis::standard(3), |b, m| b.apply_move(m));
            assert_eq!(end.elements, vec![w("x1").mul(&e.alpha_k_x2), w("x2"), w("x3")]);
            assert_eq!(e.iota as i64, farey::fibonacci(k + 2) + 3);
        }
        assert!(fibonacci_twist_family(0).is_err());
    }

    #[test]
    fn fibonacci_twist_descent_obeys_linear_bound() {
        let e = fibonacci_twist_family(5).unwrap();
        let target = RoseVertex::standard(3).apply(&e.psi).unwrap();
        let d = descend(&RoseVertex::standard(3), &target, DescentPolicy::greedy_full(2).with_stop(StopRule::Reached)).unwrap();
        assert_eq!(d.outcome, DescentOutcome::Reached);
        let lb = subrose_bound_check(&d, &[w("x2"), w("x3")], 2).unwrap();
        assert!(lb.violations.is_empty());
        assert!(subrose_bound_check(&d, &[w("x1"), w("x3")], 2).is_err());
    }

    #[test]
    fn calibration_validation() {
        let mut c = CalibrationConstants::default();
        assert!(c.validate().is_ok());
        c.c1 = Some(Calibrated { value: 0.25, experiment: "descent".into() });
        assert!(c.validate().is_ok());
        c.ell_table.insert("0.9/4".into(), Calibrated { value: -1.0, experiment: "x".into() });
        assert!(c.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn iota_is_equivariant(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sigma = random_system(&mut rng, 3, 4);
            let r = random_rose(&mut rng, 3, 4);
            let phi = random_rose(&mut rng, 3, 3).basis().as_automorphism();
            let a = iota(&sigma, &r).unwrap();
            let b = iota(&sigma.apply(&phi), &r.apply(&phi).unwrap()).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a >= 3);
        }

        #[test]
        fn descent_is_monotone(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_rose(&mut rng, 3, 6);
            let d = descend(&RoseVertex::standard(3), &t, DescentPolicy::greedy_full(2)).unwrap();
            prop_assert!(d.target_iota.windows(2).all(|p| p[1] < p[0]));
            prop_assert!(step_ratio_check(&d, d.policy.c1()).is_empty());
        }
    }
}
