//! Spheres as one-edge free splittings.
//!
//! A non-separating sphere is the conjugacy class of its complementary
//! corank-one free factor (the vertex group of the HNN splitting). A
//! separating sphere is a splitting `F = P * Q`; the pair of conjugacy
//! classes does not determine it, so its key encodes the relative position
//! of the two vertex groups through a barbell graph.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::chart::{Chart, ChartStep};
use crate::error::{Error, Result};
use crate::stallings::{code_string, ConjSubgroup, CoreGraph, Subgroup};
use crate::whitehead::minimize_conj_subgroup;
use crate::word::{Automorphism, Basis, Letter, Word};

/// Canonical key of a sphere: a tag (0 non-separating, 1 separating) followed by a graph code.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SphereKey(pub(crate) Vec<u32>);

impl SphereKey {
    pub fn is_separating(&self) -> bool {
        self.0.first() == Some(&1)
    }
}

impl fmt::Display for SphereKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.is_separating() { "S" } else { "N" };
        // the code's rank is not stored; the string is only a stable label
        write!(f, "{}{}", tag, code_string(0, &self.0[1..]).trim_start_matches("r0"))
    }
}

impl fmt::Debug for SphereKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for SphereKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SphereKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let sep = match s.chars().next() {
            Some('N') => 0,
            Some('S') => 1,
            _ => return Err(serde::de::Error::custom("sphere key must start with N or S")),
        };
        let body = s[1..].trim_start_matches(':');
        let mut v = vec![sep];
        for tok in body.split('.') {
            v.push(if tok == "-" { u32::MAX } else { tok.parse().map_err(serde::de::Error::custom)? });
        }
        Ok(SphereKey(v))
    }
}

/// The non-separating sphere dual to petal `index` (1-based) of the rose of `basis`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereChart {
    pub basis: Basis,
    pub index: usize,
}

/// A non-separating sphere with a chart carrying it to `σ1 = (⟨x2..xn⟩, x1)`.
#[derive(Clone, Debug)]
pub struct NonSepSphere {
    factor: ConjSubgroup,
    chart: Chart,
}

impl PartialEq for NonSepSphere {
    fn eq(&self, o: &Self) -> bool {
        self.factor == o.factor
    }
}
impl Eq for NonSepSphere {}

/// Permutation automorphism swapping `x1` and `x_i`.
fn swap_auto(n: usize, i: usize) -> Automorphism {
    let mut images: Vec<Word> = (1..=n).map(Word::gen).collect();
    images.swap(0, i - 1);
    Automorphism::from_images_unchecked(images)
}

impl NonSepSphere {
    pub(crate) fn from_parts(factor: ConjSubgroup, chart: Chart) -> Self {
        NonSepSphere { factor, chart }
    }

    /// `σ_i`: factor generated by all standard generators except `x_i`.
    pub fn standard(n: usize, i: usize) -> Self {
        assert!((1..=n).contains(&i));
        let gens: Vec<Word> = (1..=n).filter(|&j| j != i).map(Word::gen).collect();
        let chart = if i == 1 { Chart::identity(n) } else { Chart::from_automorphism(swap_auto(n, i)) };
        NonSepSphere { factor: ConjSubgroup::from_generators(n, &gens), chart }
    }

    /// Sphere dual to a petal of a rose.
    pub fn from_chart(c: &SphereChart) -> Result<Self> {
        let n = c.basis.rank();
        if c.index == 0 || c.index > n {
            return Err(Error::Precondition(format!("petal index {} outside 1..={}", c.index, n)));
        }
        let phi = c.basis.as_automorphism();
        let gens: Vec<Word> = (0..n).filter(|&j| j + 1 != c.index).map(|j| c.basis.elements[j].clone()).collect();
        let inv = phi.invert()?;
        let mut chart = Chart::from_automorphism(inv);
        if c.index != 1 {
            chart = chart.then(&Chart::from_automorphism(swap_auto(n, c.index)));
        }
        Ok(NonSepSphere { factor: ConjSubgroup::from_generators(n, &gens), chart })
    }

    /// Sphere from a splitting `(factor generators, stable letter)`.
    pub fn from_splitting(gens: &[Word], stable: &Word) -> Result<Self> {
        let n = gens.iter().chain([stable]).map(Word::max_generator).max().unwrap_or(0);
        let n = n.max(2);
        Self::from_splitting_rank(n, gens, stable)
    }

    /// As [`NonSepSphere::from_splitting`] with an explicit ambient rank.
    pub fn from_splitting_rank(n: usize, gens: &[Word], stable: &Word) -> Result<Self> {
        let h = Subgroup::new(n, gens);
        if h.rank() + 1 != n {
            return Err(Error::InvalidSplitting(format!("factor has rank {}, expected {}", h.rank(), n - 1)));
        }
        let mut images = vec![stable.clone()];
        images.extend(h.generators());
        let phi = Automorphism::new(images)
            .map_err(|_| Error::InvalidSplitting("factor and stable letter do not generate the free group".into()))?;
        Ok(NonSepSphere { factor: h.conj_class(), chart: Chart::from_automorphism(phi.invert()?) })
    }

    /// Sphere from a conjugacy class of corank-one free factors.
    pub fn from_factor(factor: ConjSubgroup) -> Result<Self> {
        let n = factor.ambient_rank();
        if factor.rank() + 1 != n {
            return Err(Error::InvalidSplitting(format!("factor has rank {}, expected {}", factor.rank(), n - 1)));
        }
        let m = minimize_conj_subgroup(&factor);
        let g = m.object.graph();
        if m.complexity != n - 1 || g.num_vertices() != 1 {
            return Err(Error::InvalidSplitting("not a free factor".into()));
        }
        let missing = (1..=n).find(|&x| g.target(0, x as Letter).is_none()).expect("rose misses one generator");
        let mut chart = Chart::from_automorphism(m.composite(n));
        if missing != 1 {
            chart = chart.then(&Chart::from_automorphism(swap_auto(n, missing)));
        }
        Ok(NonSepSphere { factor, chart })
    }

    pub fn rank(&self) -> usize {
        self.factor.ambient_rank()
    }

    pub fn factor(&self) -> &ConjSubgroup {
        &self.factor
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn key(&self) -> SphereKey {
        let mut v = vec![0];
        v.extend_from_slice(self.factor.key());
        SphereKey(v)
    }

    /// Edge count of the factor's core graph.
    pub fn size(&self) -> usize {
        self.factor.num_edges()
    }

    /// `φ · S`.
    pub fn apply(&self, phi: &Automorphism) -> Self {
        let inv = phi.invert().expect("automorphism");
        NonSepSphere { factor: self.factor.apply(phi), chart: self.chart.after(ChartStep::Map(std::sync::Arc::new(inv.without_provenance()))) }
    }

    /// Image under `c⁻¹`, given both `c` and its inverse.
    pub(crate) fn transport(&self, c: &Chart, c_inv: &Chart) -> Self {
        NonSepSphere { factor: ConjSubgroup::from_graph(c_inv.apply_graph(self.factor.graph())), chart: c.then(&self.chart) }
    }

    /// Image under a table Whitehead automorphism.
    pub(crate) fn apply_whitehead(&self, k: u16) -> Self {
        let t = super::chart::whitehead_table(self.rank());
        NonSepSphere {
            factor: self.factor.apply(&t.autos[k as usize]),
            chart: self.chart.after(ChartStep::Whitehead(t.inverse[k as usize])),
        }
    }

    /// An actual factor subgroup and a double-coset-reduced stable letter.
    pub fn splitting_data(&self) -> (Subgroup, Word) {
        let n = self.rank();
        let inv = self.chart.inverse();
        let gens: Vec<Word> = (2..=n).map(|i| inv.apply_word(&Word::gen(i))).collect();
        let h = Subgroup::new(n, &gens);
        let t = reduce_stable(&h, &inv.apply_word(&Word::gen(1)));
        (h, t)
    }

    /// The homology class dual to the sphere: the linear form `w ↦ (x1-exponent of chart(w))`,
    /// normalized so the first nonzero entry is positive.
    pub fn homology_form(&self) -> Vec<i64> {
        let n = self.rank();
        let m = self.chart.abel();
        let mut f: Vec<i64> = m[..n].to_vec();
        if f.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        f
    }
}

/// Absorb the longest prefix and suffix of `t` lying in `h`, then pick the
/// shorter of `t` and `t⁻¹` (shortlex).
pub(crate) fn reduce_stable(h: &Subgroup, t: &Word) -> Word {
    let g = h.graph();
    let Some(b) = g.basepoint() else { return t.clone() };
    let strip = |t: &Word| -> Word {
        let mut v = b;
        let mut best = 0;
        for (k, &l) in t.letters().iter().enumerate() {
            match g.target(v, l) {
                Some(u) => {
                    v = u;
                    if v == b {
                        best = k + 1;
                    }
                }
                None => break,
            }
        }
        Word::reduce(&t.letters()[best..])
    };
    let t1 = strip(t);
    let t2 = strip(&t1.inverse()).inverse();
    let ti = t2.inverse();
    if (ti.len(), ti.letters()) < (t2.len(), t2.letters()) {
        ti
    } else {
        t2
    }
}

/// A separating sphere: a splitting `F = P * Q` with a chart carrying
/// `(P, Q)` to `(⟨x1..xk⟩, ⟨x_{k+1}..xn⟩)`.
#[derive(Clone, Debug)]
pub struct SepSphere {
    p: Subgroup,
    q: Subgroup,
    key: SphereKey,
    size: usize,
    chart: Chart,
}

impl PartialEq for SepSphere {
    fn eq(&self, o: &Self) -> bool {
        self.key == o.key
    }
}
impl Eq for SepSphere {}

impl SepSphere {
    fn build(p: Subgroup, q: Subgroup, chart: Chart) -> Self {
        let (code, size) = sep_key(&p, &q);
        let mut v = vec![1];
        v.extend(code);
        SepSphere { p, q, key: SphereKey(v), size, chart }
    }

    /// `(⟨x1..xk⟩, ⟨x_{k+1}..xn⟩)`.
    pub fn standard(n: usize, k: usize) -> Self {
        assert!(k >= 1 && k < n);
        let p: Vec<Word> = (1..=k).map(Word::gen).collect();
        let q: Vec<Word> = (k + 1..=n).map(Word::gen).collect();
        Self::build(Subgroup::new(n, &p), Subgroup::new(n, &q), Chart::identity(n))
    }

    /// Splitting from generators of the two vertex groups.
    pub fn new(n: usize, p: &[Word], q: &[Word]) -> Result<Self> {
        let ps = Subgroup::new(n, p);
        let qs = Subgroup::new(n, q);
        if ps.rank() == 0 || qs.rank() == 0 || ps.rank() + qs.rank() != n {
            return Err(Error::InvalidSplitting("vertex groups must be nontrivial with ranks summing to n".into()));
        }
        let mut images = ps.generators();
        images.extend(qs.generators());
        let phi = Automorphism::new(images)
            .map_err(|_| Error::InvalidSplitting("vertex groups do not form a free product decomposition".into()))?;
        Ok(Self::build(ps, qs, Chart::from_automorphism(phi.invert()?)))
    }

    pub fn rank(&self) -> usize {
        self.p.ambient_rank()
    }

    /// Rank of the side sent to `⟨x1..xk⟩` by the chart.
    pub fn k(&self) -> usize {
        self.p.rank()
    }

    pub fn p(&self) -> &Subgroup {
        &self.p
    }

    pub fn q(&self) -> &Subgroup {
        &self.q
    }

    /// The unordered pair of vertex-group conjugacy classes.
    pub fn parts(&self) -> (ConjSubgroup, ConjSubgroup) {
        (self.p.conj_class(), self.q.conj_class())
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn key(&self) -> SphereKey {
        self.key.clone()
    }

    /// Edge count of the barbell graph (both cores, the arc, and the marker edge).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn apply(&self, phi: &Automorphism) -> Self {
        let inv = phi.invert().expect("automorphism");
        Self::build(
            self.p.apply(phi),
            self.q.apply(phi),
            self.chart.after(ChartStep::Map(std::sync::Arc::new(inv.without_provenance()))),
        )
    }

    pub(crate) fn apply_whitehead(&self, k: u16) -> Self {
        let t = super::chart::whitehead_table(self.rank());
        let a = &t.autos[k as usize];
        Self::build(self.p.apply(a), self.q.apply(a), self.chart.after(ChartStep::Whitehead(t.inverse[k as usize])))
    }

    /// Whether the side `P` (true) or `Q` (false) has rank `n − 1`.
    pub fn has_corank_one_side(&self) -> Option<bool> {
        let n = self.rank();
        if self.p.rank() == n - 1 {
            Some(true)
        } else if self.q.rank() == n - 1 {
            Some(false)
        } else {
            None
        }
    }
}

/// Barbell code of the splitting `(P, Q)`, oriented both ways, least taken.
fn sep_key(p: &Subgroup, q: &Subgroup) -> (Vec<u32>, usize) {
    let (a, s) = oriented_code(p, q);
    let (b, _) = oriented_code(q, p);
    (a.min(b), s)
}

/// Word read from the basepoint to the cyclic core, or the empty word.
fn stem_of(g: &CoreGraph) -> Word {
    g.stem().map(|(w, _)| w).unwrap_or_else(Word::identity)
}

fn oriented_code(p: &Subgroup, q: &Subgroup) -> (Vec<u32>, usize) {
    let n = p.ambient_rank();
    let e = (n + 1) as Letter;
    // conjugate so that P is based on its cyclic core
    let g = stem_of(p.graph());
    let gi = g.inverse();
    let p0 = Subgroup::new(n, &p.generators().iter().map(|w| w.conjugate_by(&gi)).collect::<Vec<_>>());
    let q1 = Subgroup::new(n, &q.generators().iter().map(|w| w.conjugate_by(&gi)).collect::<Vec<_>>());
    let h = stem_of(q1.graph());
    let hi = h.inverse();
    let q0 = Subgroup::new(n, &q1.generators().iter().map(|w| w.conjugate_by(&hi)).collect::<Vec<_>>());
    let (gp, gq) = (p0.graph(), q0.graph());
    // slide the attaching point of the arc into P as far as it reads
    let mut u = 0usize;
    let mut used = 0;
    for &l in h.letters() {
        match gp.target(u, l) {
            Some(t) => {
                u = t;
                used += 1;
            }
            None => break,
        }
    }
    let rest = &h.letters()[used..];
    let np = gp.num_vertices();
    let nq = gq.num_vertices();
    let mut base: Vec<(usize, usize, Letter)> = Vec::new();
    for (a, x, b) in gp.edges() {
        base.push((a, b, x as Letter));
    }
    for (a, x, b) in gq.edges() {
        base.push((np + a, np + b, x as Letter));
    }
    let size = gp.num_edges() + gq.num_edges() + rest.len() + 1;
    let code_with = |a: usize, b: usize, arc: &[Letter]| -> Vec<u32> {
        let mut edges = base.clone();
        let mut nv = np + nq;
        let mut prev = a;
        let mut labels = vec![e];
        labels.extend_from_slice(arc);
        for (k, &l) in labels.iter().enumerate() {
            let next = if k + 1 == labels.len() {
                np + b
            } else {
                nv += 1;
                nv - 1
            };
            if l > 0 {
                edges.push((prev, next, l));
            } else {
                edges.push((next, prev, -l));
            }
            prev = next;
        }
        CoreGraph::fold_pregraph(n + 1, nv, &edges, None, true).canonical_code()
    };
    if !rest.is_empty() {
        return (code_with(u, 0, rest), size);
    }
    // overlap: every pair reachable from (u, 0) by reading a common word is an equivalent attachment
    let mut seen = std::collections::HashSet::from([(u, 0usize)]);
    let mut stack = vec![(u, 0usize)];
    let mut best: Option<Vec<u32>> = None;
    while let Some((a, b)) = stack.pop() {
        let c = code_with(a, b, &[]);
        if best.as_ref().is_none_or(|x| c < *x) {
            best = Some(c);
        }
        for x in 1..=n as Letter {
            for l in [x, -x] {
                if let (Some(a2), Some(b2)) = (gp.target(a, l), gq.target(b, l)) {
                    if seen.insert((a2, b2)) {
                        stack.push((a2, b2));
                    }
                }
            }
        }
    }
    (best.unwrap(), size)
}

/// A sphere of either kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sphere {
    NonSep(NonSepSphere),
    Sep(SepSphere),
}

impl From<NonSepSphere> for Sphere {
    fn from(s: NonSepSphere) -> Self {
        Sphere::NonSep(s)
    }
}
impl From<SepSphere> for Sphere {
    fn from(s: SepSphere) -> Self {
        Sphere::Sep(s)
    }
}

impl Sphere {
    pub fn key(&self) -> SphereKey {
        match self {
            Sphere::NonSep(s) => s.key(),
            Sphere::Sep(s) => s.key(),
        }
    }
    pub fn rank(&self) -> usize {
        match self {
            Sphere::NonSep(s) => s.rank(),
            Sphere::Sep(s) => s.rank(),
        }
    }
    pub fn size(&self) -> usize {
        match self {
            Sphere::NonSep(s) => s.size(),
            Sphere::Sep(s) => s.size(),
        }
    }
    pub fn is_separating(&self) -> bool {
        matches!(self, Sphere::Sep(_))
    }
    pub fn as_nonsep(&self) -> Option<&NonSepSphere> {
        match self {
            Sphere::NonSep(s) => Some(s),
            Sphere::Sep(_) => None,
        }
    }
    pub fn as_sep(&self) -> Option<&SepSphere> {
        match self {
            Sphere::Sep(s) => Some(s),
            Sphere::NonSep(_) => None,
        }
    }
    pub fn chart(&self) -> &Chart {
        match self {
            Sphere::NonSep(s) => s.chart(),
            Sphere::Sep(s) => s.chart(),
        }
    }
    pub fn apply(&self, phi: &Automorphism) -> Sphere {
        match self {
            Sphere::NonSep(s) => Sphere::NonSep(s.apply(phi)),
            Sphere::Sep(s) => Sphere::Sep(s.apply(phi)),
        }
    }
    /// Image under `c⁻¹`, given both `c` and its inverse.
    pub(crate) fn transport(&self, c: &Chart, c_inv: &Chart) -> Sphere {
        match self {
            Sphere::NonSep(s) => Sphere::NonSep(s.transport(c, c_inv)),
            Sphere::Sep(s) => Sphere::Sep(SepSphere::build(
                Subgroup::from_graph(c_inv.apply_graph(s.p.graph())),
                Subgroup::from_graph(c_inv.apply_graph(s.q.graph())),
                c.then(&s.chart),
            )),
        }
    }

    pub(crate) fn apply_whitehead(&self, k: u16) -> Sphere {
        match self {
            Sphere::NonSep(s) => Sphere::NonSep(s.apply_whitehead(k)),
            Sphere::Sep(s) => Sphere::Sep(s.apply_whitehead(k)),
        }
    }
}
