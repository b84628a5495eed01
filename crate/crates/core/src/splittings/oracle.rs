//! Disjointness of spheres.
//!
//! Let `S1` have chart `C` with `C(S1)` standard. The tree of the standard
//! splitting is read off core graphs in the new coordinates: for the HNN
//! splitting over `⟨x2..xn⟩` its edges are the `x1`-edges, and for the free
//! product `⟨x1..xk⟩ * ⟨x_{k+1}..xn⟩` they are the marker edges after the
//! substitution `x_j ↦ e x_j e⁻¹` (`j > k`). Pulling the vertex groups of
//! `S2` back through `C` and counting tree edges decides compatibility of
//! the two splittings, that is, existence of a common two-edge refinement:
//!
//! * the vertex group of a non-separating `S2` must cross exactly one edge
//!   orbit; a non-bridge edge gives a non-separating pair, a bridge with
//!   sides `U`, `V` gives a bounding pair exactly when the vertex group of
//!   `S1` splits as `U * cVc⁻¹`;
//! * for a separating `S2 = {W, G}` one side must be elliptic and the other
//!   must cross exactly one edge orbit, with the analogous splitting
//!   condition when `S1` is separating too.
//!
//! The splitting condition is decided exactly when the relevant vertex group
//! has rank two (homology plus primitivity) and by a bounded conjugator
//! search otherwise; only the latter can answer `Unknown`.

use serde::{Deserialize, Serialize};

use super::sphere::{NonSepSphere, SepSphere, Sphere};
use crate::error::{Error, Result};
use crate::labeled::LabeledGraph;
use crate::stallings::{ConjSubgroup, CoreGraph};
use crate::whitehead::is_primitive;
use crate::word::{Letter, Word};

/// Three-valued answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

/// Kind of a disjoint pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairKind {
    /// Two non-separating spheres with connected complement.
    Nsg,
    /// Two non-separating spheres whose union separates.
    BoundingPair,
    /// A non-separating and a separating sphere.
    Mixed,
    /// Two separating spheres.
    SepSep,
}

/// Oracle verdict with a short certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disjointness {
    pub answer: Answer,
    pub kind: Option<PairKind>,
    pub certificate: String,
}

impl Disjointness {
    fn yes(kind: PairKind, cert: String) -> Self {
        Disjointness { answer: Answer::Yes, kind: Some(kind), certificate: cert }
    }
    fn no(cert: String) -> Self {
        Disjointness { answer: Answer::No, kind: None, certificate: cert }
    }
    fn unknown(cert: String) -> Self {
        Disjointness { answer: Answer::Unknown, kind: None, certificate: cert }
    }
    pub fn is_yes(&self) -> bool {
        self.answer == Answer::Yes
    }
}

/// Length bound for conjugator searches in rank ≥ 3 vertex groups.
pub const CONJUGATOR_SEARCH_LEN: usize = 4;

/// Whether `U * cVc⁻¹` equals the free group on `letters` for some `c`.
pub(crate) fn splits_free_product(letters: &[usize], u: &[Word], v: &[Word]) -> Answer {
    let m = letters.len();
    if u.is_empty() || v.is_empty() || u.len() + v.len() != m {
        return Answer::No;
    }
    let rows: Vec<Vec<i64>> = u
        .iter()
        .chain(v)
        .map(|w| {
            let ab = w.abelianization(letters.iter().copied().max().unwrap_or(0));
            letters.iter().map(|&x| ab[x - 1]).collect()
        })
        .collect();
    if det(&rows).abs() != 1 {
        return Answer::No;
    }
    if m == 2 {
        let relabel = |w: &Word| -> Word {
            let ls: Vec<Letter> = w
                .letters()
                .iter()
                .map(|&l| {
                    let i = letters.iter().position(|&x| x == l.unsigned_abs() as usize).unwrap() as Letter + 1;
                    if l > 0 {
                        i
                    } else {
                        -i
                    }
                })
                .collect();
            Word::reduce(&ls)
        };
        let ok = is_primitive(&relabel(&u[0]), 2).unwrap_or(false) && is_primitive(&relabel(&v[0]), 2).unwrap_or(false);
        return if ok { Answer::Yes } else { Answer::No };
    }
    match find_free_product_conjugator(letters, u, v, CONJUGATOR_SEARCH_LEN) {
        Some(_) => Answer::Yes,
        None => Answer::Unknown,
    }
}

/// Search `c` (reduced words on `letters`, length ≤ `max_len`) with `⟨U, cVc⁻¹⟩` the full free group on `letters`.
pub(crate) fn find_free_product_conjugator(letters: &[usize], u: &[Word], v: &[Word], max_len: usize) -> Option<Word> {
    let n = letters.iter().copied().max().unwrap_or(0);
    let full = |c: &Word| -> bool {
        let mut gens: Vec<Word> = u.to_vec();
        gens.extend(v.iter().map(|w| w.conjugate_by(c)));
        let g = CoreGraph::from_generators(n, &gens);
        g.num_vertices() == 1
            && g.num_edges() == letters.len()
            && letters.iter().all(|&x| g.target(0, x as Letter).is_some())
    };
    let mut layer = vec![Word::identity()];
    for len in 0..=max_len {
        for c in &layer {
            if full(c) {
                return Some(c.clone());
            }
        }
        if len == max_len {
            break;
        }
        let mut next = Vec::new();
        for c in &layer {
            for &x in letters {
                for l in [x as Letter, -(x as Letter)] {
                    if c.letters().last() != Some(&-l) {
                        next.push(c.mul(&Word::reduce(&[l])));
                    }
                }
            }
        }
        layer = next;
    }
    None
}

/// Integer determinant by fraction-free elimination.
pub(crate) fn det(rows: &[Vec<i64>]) -> i64 {
    let n = rows.len();
    let mut a: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}

/// Tree-edge profile of a pulled-back core: edges with label `x`.
struct Profile {
    graph: LabeledGraph,
    edges: Vec<usize>,
}

fn profile(g: &CoreGraph, x: usize) -> Profile {
    let graph = LabeledGraph::from_core(g);
    let edges = graph.edges_with_label(x);
    Profile { graph, edges }
}

/// Sides of the unique tree edge `e`: loops at its tail and head with `e` removed.
fn sides(p: &Profile) -> (Vec<Word>, Vec<Word>) {
    let e = p.edges[0];
    let (t, h) = p.graph.edge_ends(e);
    let u: Vec<Word> = p.graph.loops_at(t, &[e]).into_iter().map(|(w, _)| w).collect();
    let v: Vec<Word> = p.graph.loops_at(h, &[e]).into_iter().map(|(w, _)| w).collect();
    (u, v)
}

fn ns_ns(s1: &NonSepSphere, s2: &NonSepSphere) -> Disjointness {
    let n = s1.rank();
    let g = s1.chart().apply_graph(s2.factor().graph());
    let p = profile(&g, 1);
    match p.edges.len() {
        0 => Disjointness::no("pulled-back factor is elliptic but keys differ".into()),
        1 => {
            let e = p.edges[0];
            if !p.graph.is_bridge(e) {
                return Disjointness::yes(PairKind::Nsg, "one non-bridge tree edge".into());
            }
            let (u, v) = sides(&p);
            let letters: Vec<usize> = (2..=n).collect();
            match splits_free_product(&letters, &u, &v) {
                Answer::Yes => Disjointness::yes(PairKind::BoundingPair, format!("bridge with sides {:?} | {:?}", u, v)),
                Answer::No => Disjointness::no(format!("bridge sides {:?} | {:?} do not split the vertex group", u, v)),
                Answer::Unknown => Disjointness::unknown(format!("conjugator search to length {}", CONJUGATOR_SEARCH_LEN)),
            }
        }
        k => Disjointness::no(format!("{} tree edges", k)),
    }
}

/// Pull back both vertex groups of a separating sphere through a chart.
fn pulled_parts(chart: &super::chart::Chart, s: &SepSphere) -> (CoreGraph, CoreGraph) {
    (
        chart.apply_graph(&s.p().graph().rebased(None)),
        chart.apply_graph(&s.q().graph().rebased(None)),
    )
}

/// `Some(true)` if `s1`'s side of the separating sphere is `P`.
fn ns_sep_profile(s1: &NonSepSphere, s2: &SepSphere) -> (Disjointness, Option<bool>) {
    let (gp, gq) = pulled_parts(s1.chart(), s2);
    let (pp, pq) = (profile(&gp, 1), profile(&gq, 1));
    let (one, side_p) = match (pp.edges.len(), pq.edges.len()) {
        (1, 0) => (&pp, true),
        (0, 1) => (&pq, false),
        (a, b) => return (Disjointness::no(format!("tree edge counts {} and {}", a, b)), None),
    };
    if one.graph.is_bridge(one.edges[0]) {
        (Disjointness::no("crossing side meets the tree edge in a bridge".into()), None)
    } else {
        (Disjointness::yes(PairKind::Mixed, "one side elliptic, other crosses once".into()), Some(side_p))
    }
}

/// Barbell substitution images for a chart target `(⟨x1..xk⟩, ⟨x_{k+1}..xn⟩)`.
pub(crate) fn barbell_images(n: usize, k: usize) -> Vec<Word> {
    let e = (n + 1) as Letter;
    (1..=n)
        .map(|j| if j <= k { Word::gen(j) } else { Word::reduce(&[e, j as Letter, -e]) })
        .collect()
}

fn sep_sep_profile(s1: &SepSphere, s2: &SepSphere) -> (Disjointness, Option<bool>) {
    let n = s1.rank();
    let k = s1.k();
    let img = barbell_images(n, k);
    let (gp, gq) = pulled_parts(s1.chart(), s2);
    let bp = gp.apply_map(&img, n + 1);
    let bq = gq.apply_map(&img, n + 1);
    let (pp, pq) = (profile(&bp, n + 1), profile(&bq, n + 1));
    let (one, zero, side_p) = match (pp.edges.len(), pq.edges.len()) {
        (1, 0) => (&pp, &bq, true),
        (0, 1) => (&pq, &bp, false),
        (a, b) => return (Disjointness::no(format!("tree edge counts {} and {}", a, b)), None),
    };
    if !one.graph.is_bridge(one.edges[0]) {
        return (Disjointness::no("crossing side is not a free product over the tree edge".into()), None);
    }
    let (x, y) = sides(one);
    let w = zero.generators_at(0);
    let a_letters: Vec<usize> = (1..=k).collect();
    let b_letters: Vec<usize> = (k + 1..=n).collect();
    let w_in_b = zero.edges().first().is_some_and(|&(_, l, _)| l > k);
    let equal_to = |gens: &[Word], letters: &[usize]| -> bool {
        let c = ConjSubgroup::from_generators(n, gens);
        let std: Vec<Word> = letters.iter().map(|&l| Word::gen(l)).collect();
        c == ConjSubgroup::from_generators(n, &std)
    };
    let ans = if w_in_b {
        if !equal_to(&x, &a_letters) {
            Answer::No
        } else {
            splits_free_product(&b_letters, &y, &w)
        }
    } else if !equal_to(&y, &b_letters) {
        Answer::No
    } else {
        splits_free_product(&a_letters, &x, &w)
    };
    let d = match ans {
        Answer::Yes => Disjointness::yes(PairKind::SepSep, "nested vertex groups split compatibly".into()),
        Answer::No => Disjointness::no("vertex groups do not nest".into()),
        Answer::Unknown => Disjointness::unknown(format!("conjugator search to length {}", CONJUGATOR_SEARCH_LEN)),
    };
    let side = (d.answer == Answer::Yes).then_some(side_p);
    (d, side)
}

/// Disjointness oracle. Errors if the spheres are equal.
pub fn disjoint(s1: &Sphere, s2: &Sphere) -> Result<Disjointness> {
    if s1.rank() != s2.rank() {
        return Err(Error::RankMismatch { expected: s1.rank(), found: s2.rank() });
    }
    if s1.key() == s2.key() {
        return Err(Error::EqualArguments);
    }
    Ok(match (s1, s2) {
        (Sphere::NonSep(a), Sphere::NonSep(b)) => ns_ns(a, b),
        (Sphere::NonSep(a), Sphere::Sep(b)) | (Sphere::Sep(b), Sphere::NonSep(a)) => ns_sep_profile(a, b).0,
        (Sphere::Sep(a), Sphere::Sep(b)) => sep_sep_profile(a, b).0,
    })
}

/// Whether two disjoint non-separating spheres have connected complement.
pub fn nsg_edge(s1: &NonSepSphere, s2: &NonSepSphere) -> Result<Answer> {
    let d = disjoint(&Sphere::NonSep(s1.clone()), &Sphere::NonSep(s2.clone()))?;
    match d.answer {
        Answer::Yes => Ok(if d.kind == Some(PairKind::Nsg) { Answer::Yes } else { Answer::No }),
        Answer::No => Err(Error::Precondition("spheres are not disjoint".into())),
        Answer::Unknown => Ok(Answer::Unknown),
    }
}

/// For a sphere `x` disjoint from a separating sphere `s`: `true` if `x`
/// lies on the side of `P` (the complementary component whose fundamental
/// group contains `P`), `false` for `Q`.
pub fn side_of(s: &SepSphere, x: &Sphere) -> Result<bool> {
    let (d, side) = match x {
        Sphere::NonSep(a) => {
            if a.rank() != s.rank() {
                return Err(Error::RankMismatch { expected: s.rank(), found: a.rank() });
            }
            ns_sep_profile(a, s)
        }
        Sphere::Sep(b) => {
            if b.key() == s.key() {
                return Err(Error::EqualArguments);
            }
            sep_sep_profile(b, s)
        }
    };
    match (d.answer, side) {
        (Answer::Yes, Some(p)) => Ok(p),
        _ => Err(Error::Precondition(format!("sphere not disjoint from the separating sphere ({})", d.certificate))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::{Automorphism, NielsenMove};
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn ns(gens: &[&str], stable: &str) -> Sphere {
        let g: Vec<Word> = gens.iter().map(|s| w(s)).collect();
        Sphere::NonSep(NonSepSphere::from_splitting_rank(3, &g, &w(stable)).unwrap())
    }

    fn sep(p: &[&str], q: &[&str]) -> Sphere {
        let p: Vec<Word> = p.iter().map(|s| w(s)).collect();
        let q: Vec<Word> = q.iter().map(|s| w(s)).collect();
        Sphere::Sep(SepSphere::new(3, &p, &q).unwrap())
    }

    /// Disjoint pairs of each kind in rank three.
    fn known_pairs() -> Vec<(Sphere, Sphere, PairKind)> {
        vec![
            (ns(&["x2", "x3"], "x1"), ns(&["x1", "x3"], "x2"), PairKind::Nsg),
            (ns(&["x2", "x3"], "x1"), ns(&["x2", "x1 x3 X1"], "x1"), PairKind::BoundingPair),
            (ns(&["x2", "x3"], "x1"), sep(&["x1"], &["x2", "x3"]), PairKind::Mixed),
            (ns(&["x1", "x3"], "x2"), sep(&["x1"], &["x2", "x3"]), PairKind::Mixed),
            (sep(&["x1"], &["x2", "x3"]), sep(&["x1", "x2"], &["x3"]), PairKind::SepSep),
            (sep(&["x1"], &["x2", "x3"]), sep(&["x2"], &["x1", "x3"]), PairKind::SepSep),
        ]
    }

    #[test]
    fn known_pairs_are_classified() {
        for (a, b, k) in known_pairs() {
            let d = disjoint(&a, &b).unwrap();
            assert_eq!((d.answer, d.kind), (Answer::Yes, Some(k)), "{} {}", a.key(), b.key());
        }
    }

    #[test]
    fn crossing_pairs_are_rejected() {
        let a = ns(&["x2", "x3"], "x1");
        for b in [ns(&["x1 x1 x2", "x3"], "x1"), ns(&["x2 x1 x1 x3", "x2"], "x1"), sep(&["x1 x1 x2"], &["x1", "x3"])] {
            assert_eq!(disjoint(&a, &b).unwrap().answer, Answer::No, "{}", b.key());
        }
        let (s, t) = (sep(&["x1"], &["x2", "x3"]), sep(&["x1 x2"], &["x2", "x3"]));
        assert_eq!(disjoint(&s, &t).unwrap().answer, Answer::No);
    }

    #[test]
    fn equal_arguments_are_an_error() {
        let a = ns(&["x2", "x3"], "x1");
        let b = ns(&["x3", "x2 x3"], "x1 x2");
        assert!(matches!(disjoint(&a, &b), Err(Error::EqualArguments)));
    }

    #[test]
    fn sides_of_a_separating_sphere() {
        let s = sep(&["x1"], &["x2", "x3"]);
        let Sphere::Sep(s) = s else { unreachable!() };
        assert!(side_of(&s, &ns(&["x2", "x3"], "x1")).unwrap());
        assert!(!side_of(&s, &ns(&["x1", "x3"], "x2")).unwrap());
        assert!(!side_of(&s, &sep(&["x1", "x2"], &["x3"])).unwrap());
    }

    fn moves() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0..NielsenMove::count(3), 0..8)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn classification_is_invariant_and_symmetric(idx in moves(), which in 0usize..6) {
            let all = NielsenMove::all(3);
            let mv: Vec<NielsenMove> = idx.iter().map(|&i| all[i]).collect();
            let phi = Automorphism::from_moves(3, &mv);
            let (a, b, k) = known_pairs().swap_remove(which);
            let (a, b) = (a.apply(&phi), b.apply(&phi));
            let d1 = disjoint(&a, &b).unwrap();
            let d2 = disjoint(&b, &a).unwrap();
            prop_assert_eq!((d1.answer, d1.kind), (Answer::Yes, Some(k)));
            prop_assert_eq!((d2.answer, d2.kind), (Answer::Yes, Some(k)));
        }

        #[test]
        fn crossing_is_invariant(idx in moves()) {
            let all = NielsenMove::all(3);
            let mv: Vec<NielsenMove> = idx.iter().map(|&i| all[i]).collect();
            let phi = Automorphism::from_moves(3, &mv);
            let a = ns(&["x2", "x3"], "x1").apply(&phi);
            let b = ns(&["x1 x1 x2", "x3"], "x1").apply(&phi);
            prop_assert_eq!(disjoint(&a, &b).unwrap().answer, Answer::No);
            prop_assert_eq!(disjoint(&b, &a).unwrap().answer, Answer::No);
        }
    }
}
