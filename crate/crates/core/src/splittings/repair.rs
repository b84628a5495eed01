//! Path repairs and free factor graph operations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::chart::{Chart, ChartStep};
use super::oracle::{disjoint, find_free_product_conjugator, side_of, Answer, PairKind};
use super::sphere::{NonSepSphere, SepSphere, Sphere, SphereKey};
use crate::error::{Error, Result};
use crate::labeled::LabeledGraph;
use crate::stallings::{ConjSubgroup, Subgroup};
use crate::whitehead::{contains_rank_m_factor, minimize_conj_subgroup, SearchAnswer, DEFAULT_FACTOR_CUTOFF};
use crate::word::{Letter, Word};

/// Raw splitting data accepted by [`canonicalize`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SplittingData {
    NonSeparating { rank: usize, factor: Vec<Word>, stable: Word },
    Separating { rank: usize, p: Vec<Word>, q: Vec<Word> },
}

impl SplittingData {
    pub fn to_sphere(&self) -> Result<Sphere> {
        match self {
            SplittingData::NonSeparating { rank, factor, stable } => {
                Ok(Sphere::NonSep(NonSepSphere::from_splitting_rank(*rank, factor, stable)?))
            }
            SplittingData::Separating { rank, p, q } => Ok(Sphere::Sep(SepSphere::new(*rank, p, q)?)),
        }
    }
}

/// Canonical key of a splitting.
pub fn canonicalize(data: &SplittingData) -> Result<SphereKey> {
    Ok(data.to_sphere()?.key())
}

/// The non-separating sphere on side `P` (`true`) or `Q` of a separating
/// sphere dual to one basis element of that side; the least key is chosen.
pub fn nonsep_in_side(s: &SepSphere, side_p: bool) -> Result<NonSepSphere> {
    let n = s.rank();
    let (mine, other) = if side_p { (s.p(), s.q()) } else { (s.q(), s.p()) };
    let basis = mine.generators();
    let mut best: Option<NonSepSphere> = None;
    for i in 0..basis.len() {
        let mut gens: Vec<Word> = basis.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w.clone()).collect();
        gens.extend(other.generators());
        let t = NonSepSphere::from_splitting_rank(n, &gens, &basis[i])?;
        if best.as_ref().is_none_or(|b| t.key() < b.key()) {
            best = Some(t);
        }
    }
    best.ok_or_else(|| Error::NotFound("empty side".into()))
}

/// Replace separating spheres of a path by non-separating ones.
///
/// A separating `S_i` is replaced by a non-separating sphere in the side
/// away from `S_{i−1}`, followed (only if the neighbours lie on different
/// sides) by one in the side away from `S_{i+1}`. On a geodesic both
/// neighbours are on the same side, so the length is unchanged; in general
/// it at most doubles.
pub fn repair_nonseparating(path: &[Sphere]) -> Result<Vec<Sphere>> {
    if path.is_empty() {
        return Ok(Vec::new());
    }
    if path[0].is_separating() || path[path.len() - 1].is_separating() {
        return Err(Error::Precondition("endpoints must be non-separating".into()));
    }
    let mut out = Vec::with_capacity(path.len());
    for (i, s) in path.iter().enumerate() {
        let Sphere::Sep(sep) = s else {
            push_reduced(&mut out, s.clone());
            continue;
        };
        let away_prev = !side_of(sep, &path[i - 1])?;
        let away_next = !side_of(sep, &path[i + 1])?;
        push_reduced(&mut out, Sphere::NonSep(nonsep_in_side(sep, away_prev)?));
        if away_next != away_prev {
            push_reduced(&mut out, Sphere::NonSep(nonsep_in_side(sep, away_next)?));
        }
    }
    Ok(out)
}

/// Append to a path, dropping repeats and immediate backtracks.
fn push_reduced(out: &mut Vec<Sphere>, s: Sphere) {
    let k = s.key();
    if out.last().is_some_and(|t| t.key() == k) {
        return;
    }
    if out.len() >= 2 && out[out.len() - 2].key() == k {
        out.pop();
        return;
    }
    out.push(s);
}

/// A non-separating sphere forming non-separating pairs with both members of a bounding pair.
pub fn bounding_pair_middle(a: &NonSepSphere, b: &NonSepSphere) -> Result<NonSepSphere> {
    let n = a.rank();
    let chart = a.chart();
    let g = chart.apply_graph(b.factor().graph());
    let lg = LabeledGraph::from_core(&g);
    let es = lg.edges_with_label(1);
    if es.len() != 1 || !lg.is_bridge(es[0]) {
        return Err(Error::Precondition("not a bounding pair".into()));
    }
    let (t, h) = lg.edge_ends(es[0]);
    let u: Vec<Word> = lg.loops_at(t, &[es[0]]).into_iter().map(|(w, _)| w).collect();
    let v: Vec<Word> = lg.loops_at(h, &[es[0]]).into_iter().map(|(w, _)| w).collect();
    let letters: Vec<usize> = (2..=n).collect();
    let c = find_free_product_conjugator(&letters, &u, &v, 8)
        .ok_or_else(|| Error::NotFound("no conjugator splitting the vertex group within length 8".into()))?;
    let vg: Vec<Word> = v.iter().map(|w| w.conjugate_by(&c)).collect();
    let tf = Word::gen(1).mul(&c.inverse());
    // candidate blow-ups at either vertex, in chart coordinates
    let mut candidates = Vec::new();
    for i in 0..u.len() {
        let mut gens: Vec<Word> = u.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w.clone()).collect();
        gens.extend(vg.iter().cloned());
        gens.push(tf.clone());
        candidates.push((gens, u[i].clone()));
    }
    for i in 0..vg.len() {
        let mut gens: Vec<Word> = vg.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, w)| w.clone()).collect();
        gens.extend(u.iter().cloned());
        gens.push(tf.clone());
        candidates.push((gens, vg[i].clone()));
    }
    let inv = chart.inverse();
    for (gens, stable) in candidates {
        let Ok(local) = NonSepSphere::from_splitting_rank(n, &gens, &stable) else { continue };
        let factor = ConjSubgroup::from_graph(inv.apply_graph(local.factor().graph()));
        let d = NonSepSphere::from_parts(factor, chart.then(local.chart()));
        let (sa, sd, sb) = (Sphere::NonSep(a.clone()), Sphere::NonSep(d.clone()), Sphere::NonSep(b.clone()));
        let ok = |x: &Sphere, y: &Sphere| disjoint(x, y).is_ok_and(|r| r.answer == Answer::Yes && r.kind == Some(PairKind::Nsg));
        if ok(&sa, &sd) && ok(&sd, &sb) {
            return Ok(d);
        }
    }
    Err(Error::NotFound("no blow-up sphere with connected complements".into()))
}

/// Insert a middle sphere into every bounding-pair edge.
pub fn repair_bounding_pairs(path: &[NonSepSphere]) -> Result<Vec<NonSepSphere>> {
    let mut out: Vec<NonSepSphere> = Vec::with_capacity(2 * path.len());
    for (i, s) in path.iter().enumerate() {
        if i > 0 {
            let prev = &path[i - 1];
            let d = disjoint(&Sphere::NonSep(prev.clone()), &Sphere::NonSep(s.clone()))?;
            match (d.answer, d.kind) {
                (Answer::Yes, Some(PairKind::BoundingPair)) => out.push(bounding_pair_middle(prev, s)?),
                (Answer::Yes, _) => {}
                _ => return Err(Error::Precondition(format!("consecutive spheres {} and {} are not disjoint", i - 1, i))),
            }
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Whether a conjugate of `a` lies in `b`.
pub fn conj_contained(a: &ConjSubgroup, b: &ConjSubgroup) -> bool {
    let gens = a.representative().generators();
    let g = b.graph();
    (0..g.num_vertices()).any(|v| gens.iter().all(|w| g.read(v, w) == Some(v)))
}

/// Edge test of the level-`m` free factor graph: whether some intersection
/// `A1 ∩ gA2g⁻¹` contains a rank-`m` free factor. All conjugators are
/// covered at once by the components of the product of the two cores.
pub fn ffm_edge(a1: &ConjSubgroup, a2: &ConjSubgroup, m: usize) -> Answer {
    if a1 == a2 {
        return Answer::No;
    }
    let p = a1.graph().product(a2.graph());
    let mut unknown = false;
    for comp in p.components() {
        let sub = p.component_at(comp[0]).unbased_core();
        if sub.subgroup_rank() < m || sub.is_empty() {
            continue;
        }
        let h = Subgroup::from_graph(sub.rebased(Some(0)));
        match contains_rank_m_factor(&h, m, DEFAULT_FACTOR_CUTOFF) {
            SearchAnswer::Yes { .. } => return Answer::Yes,
            SearchAnswer::Unknown { .. } => unknown = true,
            SearchAnswer::No { .. } => {}
        }
    }
    if unknown {
        Answer::Unknown
    } else {
        Answer::No
    }
}

/// The complementary corank-one factor of a non-separating sphere.
pub fn tau(s: &NonSepSphere, _m: usize) -> ConjSubgroup {
    s.factor().clone()
}

/// A corank-one free factor containing the free factor `a`.
pub fn corank_one_completion(a: &ConjSubgroup) -> Result<ConjSubgroup> {
    let n = a.ambient_rank();
    if a.rank() + 1 == n {
        return Ok(a.clone());
    }
    let m = minimize_conj_subgroup(a);
    let g = m.object.graph();
    if m.complexity != a.rank() || g.num_vertices() != 1 {
        return Err(Error::NotFound("not a free factor".into()));
    }
    let missing = (1..=n).find(|&x| g.target(0, x as Letter).is_none()).ok_or_else(|| Error::NotFound("no missing generator".into()))?;
    let phi = m.composite(n);
    let inv = Chart::from_steps(n, vec![ChartStep::Map(Arc::new(phi.invert()?.without_provenance()))]);
    let std: Vec<Word> = (1..=n).filter(|&x| x != missing).map(Word::gen).collect();
    let out = ConjSubgroup::from_graph(inv.apply_graph(&crate::stallings::CoreGraph::from_generators(n, &std)));
    debug_assert!(conj_contained(a, &out));
    Ok(out)
}

/// Shorten an alternating free factor path `A0 ⊃ A1 ⊂ A2 ⊃ …` to a level-one path
/// through corank-one completions of the even-indexed factors.
pub fn ff1_shorten(path: &[ConjSubgroup]) -> Result<Vec<ConjSubgroup>> {
    let m = path.len().saturating_sub(1);
    if m % 2 != 0 {
        return Err(Error::Precondition("path length must be even".into()));
    }
    let n = path.first().map(|a| a.ambient_rank()).unwrap_or(0);
    if path.first().is_some_and(|a| a.rank() + 1 != n) || path.last().is_some_and(|a| a.rank() + 1 != n) {
        return Err(Error::Precondition("endpoints must be corank-one factors".into()));
    }
    for i in (1..m).step_by(2) {
        if !(conj_contained(&path[i], &path[i - 1]) && conj_contained(&path[i], &path[i + 1])) {
            return Err(Error::Precondition(format!("path does not alternate by inclusion at {}", i)));
        }
    }
    path.iter().step_by(2).map(corank_one_completion).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::{Automorphism, NielsenMove};
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn words(v: &[&str]) -> Vec<Word> {
        v.iter().map(|s| w(s)).collect()
    }

    fn ns(gens: &[&str], stable: &str) -> NonSepSphere {
        NonSepSphere::from_splitting_rank(3, &words(gens), &w(stable)).unwrap()
    }

    fn sep(p: &[&str], q: &[&str]) -> SepSphere {
        SepSphere::new(3, &words(p), &words(q)).unwrap()
    }

    fn assert_path(path: &[Sphere]) {
        for pair in path.windows(2) {
            let d = disjoint(&pair[0], &pair[1]).unwrap();
            assert_eq!(d.answer, Answer::Yes, "{} {}", pair[0].key(), pair[1].key());
        }
    }

    fn moves(idx: &[usize]) -> Automorphism {
        let all = NielsenMove::all(3);
        let mv: Vec<NielsenMove> = idx.iter().map(|&i| all[i]).collect();
        Automorphism::from_moves(3, &mv)
    }

    #[test]
    fn canonical_keys_ignore_presentation() {
        let a = SplittingData::NonSeparating { rank: 3, factor: words(&["x2", "x3"]), stable: w("x1") };
        let b = SplittingData::NonSeparating { rank: 3, factor: words(&["x3 x2", "X2"]), stable: w("x2 x1 x3") };
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
        let c = SplittingData::Separating { rank: 3, p: words(&["x1"]), q: words(&["x2", "x3"]) };
        let d = SplittingData::Separating { rank: 3, p: words(&["x2 x3 X2", "x2"]), q: words(&["x2 x1 X2"]) };
        assert_eq!(canonicalize(&c).unwrap(), canonicalize(&d).unwrap());
        assert_ne!(canonicalize(&a).unwrap(), canonicalize(&c).unwrap());
    }

    #[test]
    fn separating_middle_is_replaced() {
        let s = sep(&["x1"], &["x2", "x3"]);
        let path = vec![Sphere::NonSep(ns(&["x2", "x3"], "x1")), Sphere::Sep(s), Sphere::NonSep(ns(&["x2", "x3"], "x1 x2"))];
        assert_path(&path);
        let out = repair_nonseparating(&path).unwrap();
        assert!(out.iter().all(|s| !s.is_separating()));
        assert!(out.len() <= 2 * path.len());
        assert_path(&out);
    }

    #[test]
    fn bounding_pair_gets_a_middle() {
        let a = ns(&["x2", "x3"], "x1");
        let b = ns(&["x2", "x1 x3 X1"], "x1");
        let out = repair_bounding_pairs(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(out.len(), 3);
        for pair in out.windows(2) {
            assert_eq!(nsg_kind(&pair[0], &pair[1]), Some(PairKind::Nsg));
        }
    }

    fn nsg_kind(a: &NonSepSphere, b: &NonSepSphere) -> Option<PairKind> {
        let d = disjoint(&Sphere::NonSep(a.clone()), &Sphere::NonSep(b.clone())).unwrap();
        assert_eq!(d.answer, Answer::Yes);
        d.kind
    }

    #[test]
    fn ff_edges() {
        let a = ConjSubgroup::from_generators(3, &words(&["x1", "x2"]));
        let b = ConjSubgroup::from_generators(3, &words(&["x1", "x3"]));
        let c = ConjSubgroup::from_generators(3, &words(&["x2 x3", "x3 x1 x3"]));
        assert_eq!(ffm_edge(&a, &b, 1), Answer::Yes);
        assert_eq!(ffm_edge(&a, &a, 1), Answer::No);
        let x3 = ConjSubgroup::from_generators(3, &words(&["x3"]));
        assert_eq!(ffm_edge(&a, &x3, 1), Answer::No);
        assert_ne!(ffm_edge(&a, &c, 2), Answer::Yes);
    }

    #[test]
    fn ff1_shortening_halves_length() {
        let c = |g: &[&str]| ConjSubgroup::from_generators(3, &words(g));
        let path = vec![c(&["x1", "x2"]), c(&["x2"]), c(&["x2", "x3"]), c(&["x3"]), c(&["x3 x1", "x3"])];
        let out = ff1_shorten(&path).unwrap();
        assert_eq!(out.len(), 3);
        for pair in out.windows(2) {
            assert_eq!(ffm_edge(&pair[0], &pair[1], 1), Answer::Yes);
        }
        assert!(ff1_shorten(&path[..4]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn repairs_commute_with_automorphisms(idx in prop::collection::vec(0..NielsenMove::count(3), 0..8)) {
            let phi = moves(&idx);
            let path: Vec<Sphere> = vec![
                Sphere::NonSep(ns(&["x2", "x3"], "x1")),
                Sphere::Sep(sep(&["x1"], &["x2", "x3"])),
                Sphere::Sep(sep(&["x1", "x2"], &["x3"])),
                Sphere::NonSep(ns(&["x1", "x2"], "x3")),
            ].into_iter().map(|s| s.apply(&phi)).collect();
            let out = repair_nonseparating(&path).unwrap();
            prop_assert!(out.iter().all(|s| !s.is_separating()));
            prop_assert!(out.len() <= 2 * path.len());
            assert_path(&out);

            let a = ns(&["x2", "x3"], "x1").apply(&phi);
            let b = ns(&["x2", "x1 x3 X1"], "x1").apply(&phi);
            let r = repair_bounding_pairs(&[a, b]).unwrap();
            prop_assert_eq!(r.len(), 3);
            for pair in r.windows(2) {
                prop_assert_eq!(nsg_kind(&pair[0], &pair[1]), Some(PairKind::Nsg));
            }
        }
    }
}
