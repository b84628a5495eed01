//! Whitehead automorphisms and minimization of cyclic words and subgroup
//! conjugacy classes, primitivity and free-factor detection.
//!
//! Greedy steepest descent through Whitehead automorphisms reaches the
//! minimal complexity of an orbit for cyclic words (peak reduction). For
//! subgroup graphs the same descent on core-graph edge count is used under
//! the assumption that peak reduction holds there as well.

use std::collections::{HashSet, VecDeque};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::stallings::{ConjSubgroup, Subgroup};
use crate::word::{Automorphism, Word};

/// Number of type-2 Whitehead automorphisms (identity excluded) in rank `n`.
pub fn type2_count(n: usize) -> usize {
    2 * n * (4usize.pow(n as u32 - 1) - 1)
}

/// All nontrivial type-2 Whitehead automorphisms `(A, a)` in rank `n`, each
/// generator other than `a^{±1}` mapped to one of `x`, `x a`, `a⁻¹ x`, `a⁻¹ x a`.
pub fn type2(n: usize) -> Vec<Automorphism> {
    let mut out = Vec::new();
    for ai in 1..=n as i32 {
        for sign in [1i32, -1] {
            let a = Word::reduce(&[sign * ai]);
            let others: Vec<usize> = (1..=n).filter(|&j| j as i32 != ai).collect();
            let total = 4usize.pow(others.len() as u32);
            for code in 1..total {
                let mut images: Vec<Word> = (1..=n).map(Word::gen).collect();
                let mut c = code;
                for &j in &others {
                    let x = Word::gen(j);
                    images[j - 1] = match c % 4 {
                        0 => x,
                        1 => x.mul(&a),
                        2 => a.inverse().mul(&x),
                        _ => a.inverse().mul(&x).mul(&a),
                    };
                    c /= 4;
                }
                out.push(Automorphism::from_images_unchecked(images));
            }
        }
    }
    out
}

/// All signed permutations of the generators except the identity (type-1 automorphisms).
pub fn type1(n: usize) -> Vec<Automorphism> {
    let mut perms: Vec<Vec<usize>> = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    fn rec(n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for i in 1..=n {
            if !cur.contains(&i) {
                cur.push(i);
                rec(n, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, &mut cur, &mut perms);
    let mut out = Vec::new();
    for p in perms {
        for signs in 0..(1u32 << n) {
            let images: Vec<Word> = (0..n)
                .map(|k| {
                    let s = if signs >> k & 1 == 1 { -1 } else { 1 };
                    Word::reduce(&[s * p[k] as i32])
                })
                .collect();
            let is_id = images.iter().enumerate().all(|(k, w)| *w == Word::gen(k + 1));
            if !is_id {
                out.push(Automorphism::from_images_unchecked(images));
            }
        }
    }
    out
}

/// Cached Whitehead sets for ranks up to 5.
pub fn type2_cached(n: usize) -> &'static [Automorphism] {
    static CACHE: [OnceLock<Vec<Automorphism>>; 6] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=5).contains(&n), "Whitehead sets are cached for ranks 1 to 5");
    CACHE[n].get_or_init(|| type2(n))
}

/// Cached type-1 sets for ranks up to 5.
pub fn type1_cached(n: usize) -> &'static [Automorphism] {
    static CACHE: [OnceLock<Vec<Automorphism>>; 6] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    assert!((1..=5).contains(&n));
    CACHE[n].get_or_init(|| type1(n))
}

/// Outcome of a minimization: minimal object, its complexity, and the
/// descent certificate (automorphisms applied in order).
#[derive(Clone, Debug)]
pub struct Minimized<T> {
    pub object: T,
    pub complexity: usize,
    pub certificate: Vec<Automorphism>,
}

impl<T> Minimized<T> {
    /// The composite automorphism carrying the input to the minimal object.
    pub fn composite(&self, n: usize) -> Automorphism {
        let mut acc = Automorphism::identity(n).without_provenance();
        for a in &self.certificate {
            acc = a.compose(&acc);
        }
        acc
    }
}

/// Greedy steepest descent on cyclic length.
pub fn minimize_cyclic_word(w: &Word, n: usize) -> Minimized<Word> {
    let mut cur = w.cyclically_reduced();
    let mut cert = Vec::new();
    let autos = type2_cached(n);
    loop {
        let len = cur.len();
        if len <= 1 {
            break;
        }
        let mut best: Option<(usize, usize, Word)> = None;
        for (k, a) in autos.iter().enumerate() {
            let img = a.apply(&cur).cyclically_reduced();
            if img.len() < len && best.as_ref().is_none_or(|b| img.len() < b.0) {
                best = Some((img.len(), k, img));
            }
        }
        match best {
            Some((_, k, img)) => {
                cert.push(autos[k].clone());
                cur = img;
            }
            None => break,
        }
    }
    let complexity = cur.len();
    Minimized { object: cur.cyclic_normal_form(), complexity, certificate: cert }
}

/// Minimize and then enumerate the orbit at minimal length through all
/// Whitehead automorphisms, returning the least cyclic normal form found.
/// The orbit search stops after `cap` elements.
pub fn minimize_cyclic_word_full(w: &Word, n: usize, cap: usize) -> (Minimized<Word>, usize, bool) {
    let m = minimize_cyclic_word(w, n);
    let start = m.object.clone();
    let mut seen: HashSet<Word> = HashSet::from([start.clone()]);
    let mut q = VecDeque::from([start.clone()]);
    let mut complete = true;
    while let Some(x) = q.pop_front() {
        for a in type1_cached(n).iter().chain(type2_cached(n)) {
            let y = a.apply(&x).cyclic_normal_form();
            if y.len() == m.complexity && seen.insert(y.clone()) {
                if seen.len() >= cap {
                    complete = false;
                    q.clear();
                    break;
                }
                q.push_back(y);
            }
        }
    }
    let least = seen.iter().min().cloned().unwrap_or(start);
    let orbit = seen.len();
    (Minimized { object: least, ..m }, orbit, complete)
}

/// Greedy steepest descent on the edge count of the conjugacy-class core graph.
pub fn minimize_conj_subgroup(h: &ConjSubgroup) -> Minimized<ConjSubgroup> {
    let n = h.ambient_rank();
    let target = h.rank();
    let mut cur = h.clone();
    let mut cert = Vec::new();
    let autos = type2_cached(n);
    loop {
        let e = cur.num_edges();
        if e <= target {
            break;
        }
        let mut best: Option<(usize, usize, ConjSubgroup)> = None;
        for (k, a) in autos.iter().enumerate() {
            let img = cur.apply(a);
            let ie = img.num_edges();
            if ie < e && best.as_ref().is_none_or(|b| ie < b.0) {
                best = Some((ie, k, img));
            }
        }
        match best {
            Some((_, k, img)) => {
                cert.push(autos[k].clone());
                cur = img;
            }
            None => break,
        }
    }
    let complexity = cur.num_edges();
    Minimized { object: cur, complexity, certificate: cert }
}

/// Whether `w` is primitive (part of a basis). Exact by Whitehead's theorem.
pub fn is_primitive(w: &Word, n: usize) -> crate::error::Result<bool> {
    if w.is_empty() {
        return Err(crate::error::Error::TrivialWord);
    }
    if w.proper_root().is_some() {
        return Ok(false);
    }
    let ab = w.abelianization(n);
    if ab.iter().fold(0i64, |g, &x| gcd(g, x.abs())) != 1 {
        return Ok(false);
    }
    Ok(minimize_cyclic_word(w, n).complexity == 1)
}

/// Whether a subgroup is a free factor: its minimized core is a rose of
/// `rank` distinct loops.
pub fn is_free_factor(h: &ConjSubgroup) -> bool {
    let r = h.rank();
    if r == 0 {
        return true;
    }
    if r == h.ambient_rank() {
        return h.graph().num_vertices() == 1 && h.num_edges() == r;
    }
    minimize_conj_subgroup(h).complexity == r
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Three-valued answer of a bounded search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "answer", rename_all = "kebab-case")]
pub enum SearchAnswer {
    Yes { witness: Vec<Word> },
    No { reason: String },
    Unknown { cutoff: usize },
}

impl SearchAnswer {
    pub fn is_yes(&self) -> bool {
        matches!(self, SearchAnswer::Yes { .. })
    }
    pub fn is_no(&self) -> bool {
        matches!(self, SearchAnswer::No { .. })
    }
}

/// Default element-length cutoff for factor searches.
pub const DEFAULT_FACTOR_CUTOFF: usize = 8;

/// Search `h` for a rank-`m` free factor of the ambient group.
///
/// For `m = 1` the homology image and proper powers give exact "no"
/// answers, rank-one subgroups are decided exactly, and otherwise elements
/// of length ≤ `cutoff` are tested for primitivity. For `m = rank(h)` the
/// free-factor test of `h` itself decides. Remaining cases search
/// `m`-subsets of short elements.
pub fn contains_rank_m_factor(h: &Subgroup, m: usize, cutoff: usize) -> SearchAnswer {
    let n = h.ambient_rank();
    let r = h.rank();
    if m == 0 {
        return SearchAnswer::Yes { witness: vec![] };
    }
    if m > r {
        return SearchAnswer::No { reason: format!("rank {} < {}", r, m) };
    }
    let gens = h.generators();
    // Homology: every vector in the image lattice is divisible by the gcd of entries.
    let g = gens
        .iter()
        .flat_map(|w| w.abelianization(n))
        .fold(0i64, |acc, x| gcd(acc, x.abs()));
    if g != 1 {
        return SearchAnswer::No { reason: format!("homology image divisible by {}", g) };
    }
    if m == r {
        return if is_free_factor(&h.conj_class()) {
            SearchAnswer::Yes { witness: gens }
        } else {
            SearchAnswer::No { reason: "not a free factor after Whitehead minimization".into() }
        };
    }
    if m == 1 && r == 1 {
        let u = &gens[0];
        if u.proper_root().is_some() {
            return SearchAnswer::No { reason: "proper power".into() };
        }
        return if is_primitive(u, n).unwrap_or(false) {
            SearchAnswer::Yes { witness: vec![u.clone()] }
        } else {
            SearchAnswer::No { reason: "generator not primitive".into() }
        };
    }
    let elems = h.elements_up_to(cutoff);
    if m == 1 {
        let mut seen = HashSet::new();
        for e in &elems {
            let c = e.cyclic_normal_form();
            if !seen.insert(c.clone()) {
                continue;
            }
            if is_primitive(&c, n).unwrap_or(false) {
                return SearchAnswer::Yes { witness: vec![e.clone()] };
            }
        }
        return SearchAnswer::Unknown { cutoff };
    }
    // m ≥ 2 and m < rank: bounded subset search over short elements
    let pool: Vec<Word> = elems.into_iter().take(24).collect();
    let mut idx: Vec<usize> = (0..m).collect();
    let mut tried = 0usize;
    loop {
        if idx.iter().all(|&i| i < pool.len()) {
            let tuple: Vec<Word> = idx.iter().map(|&i| pool[i].clone()).collect();
            let sub = ConjSubgroup::from_generators(n, &tuple);
            if sub.rank() == m && is_free_factor(&sub) {
                return SearchAnswer::Yes { witness: tuple };
            }
            tried += 1;
        }
        // next combination
        let mut k = m;
        loop {
            if k == 0 {
                return SearchAnswer::Unknown { cutoff };
            }
            k -= 1;
            if idx[k] < pool.len() - (m - k) {
                idx[k] += 1;
                for j in (k + 1)..m {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
        if tried > 20_000 || pool.len() < m {
            return SearchAnswer::Unknown { cutoff };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::NielsenMove;
    use proptest::prelude::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn whitehead_set_sizes() {
        assert_eq!(type2(3).len(), type2_count(3));
        assert_eq!(type2(3).len() + 6, 96);
        assert_eq!(type1(3).len(), 47);
        for a in type2(3).iter().chain(type1(3).iter()) {
            assert!(a.check_basis().is_ok());
        }
    }

    #[test]
    fn cyclic_minimization_examples() {
        assert_eq!(minimize_cyclic_word(&w("x1"), 3).object, w("x1"));
        assert_eq!(minimize_cyclic_word(&w("x2 x1 X2"), 3).object, w("x1"));
        assert_eq!(minimize_cyclic_word(&w("x1 x2 x3"), 3).complexity, 1);
    }

    #[test]
    fn primitive_examples() {
        assert!(is_primitive(&w("x1"), 2).unwrap());
        assert!(!is_primitive(&w("x1 x2 X1 X2"), 2).unwrap());
        // x1 x2^2 together with x2 is a basis
        assert!(is_primitive(&w("x1 x2 x2"), 2).unwrap());
        assert!(is_primitive(&w("x1 x2 x1 x2 x2"), 2).unwrap());
        assert!(is_primitive(&w(""), 2).is_err());
        // primitive abelianization (2, 3) but the orbit minimum has length 5
        assert!(!is_primitive(&w("x1 x1 x2 x2 x2"), 2).unwrap());
        let (m, orbit, complete) = minimize_cyclic_word_full(&w("x1 x1 x2 x2 x2"), 2, 10_000);
        assert_eq!(m.complexity, 5);
        assert!(complete && orbit > 1);
        assert!(!is_primitive(&w("x1 x2 X1 X2 x1"), 2).unwrap());
    }

    #[test]
    fn subgroup_minimization() {
        let h = ConjSubgroup::from_generators(3, &[w("x1 x2 x3")]);
        let m = minimize_conj_subgroup(&h);
        assert_eq!(m.complexity, 1);
        assert_eq!(m.object.graph().num_vertices(), 1);
        assert!(is_free_factor(&ConjSubgroup::from_generators(3, &[w("x1 x2"), w("x3")])));
        assert!(!is_free_factor(&ConjSubgroup::from_generators(3, &[w("x1 x1"), w("x2")])));
    }

    #[test]
    fn factor_search_examples() {
        let h = Subgroup::new(3, &[w("x1"), w("x2")]);
        assert!(contains_rank_m_factor(&h, 1, 8).is_yes());
        let h = Subgroup::new(3, &[w("x1 x1")]);
        assert!(contains_rank_m_factor(&h, 1, 2).is_no());
        let h = Subgroup::new(3, &[w("x1 x2 X1"), w("x3")]);
        assert!(contains_rank_m_factor(&h, 1, 4).is_yes());
        let h = Subgroup::new(3, &[w("x1 x2 X1 X2"), w("x1 x3 X1 X3")]);
        assert!(contains_rank_m_factor(&h, 1, 8).is_no());
    }

    fn arb_aut(n: usize, len: usize) -> impl Strategy<Value = Automorphism> {
        let all = NielsenMove::all(n);
        prop::collection::vec(0..all.len(), 0..len)
            .prop_map(move |ix| Automorphism::from_moves(n, &ix.iter().map(|&k| all[k]).collect::<Vec<_>>()))
    }

    fn arb_word(rank: usize, max_len: usize) -> impl Strategy<Value = Word> {
        let r = rank as i32;
        prop::collection::vec((1..=r, any::<bool>()), 1..max_len)
            .prop_map(|v| Word::reduce(&v.into_iter().map(|(i, s)| if s { i } else { -i }).collect::<Vec<_>>()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn minimum_is_orbit_invariant(x in arb_word(3, 8), phi in arb_aut(3, 4)) {
            prop_assume!(!x.cyclically_reduced().is_empty());
            let a = minimize_cyclic_word(&x, 3).complexity;
            let b = minimize_cyclic_word(&phi.apply(&x), 3).complexity;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn subgroup_minimum_is_orbit_invariant(x in arb_word(3, 6), y in arb_word(3, 6), phi in arb_aut(3, 4)) {
            let h = ConjSubgroup::from_generators(3, &[x, y]);
            let a = minimize_conj_subgroup(&h).complexity;
            let b = minimize_conj_subgroup(&h.apply(&phi)).complexity;
            prop_assert_eq!(a, b);
        }

        #[test]
        fn images_of_generators_are_primitive(phi in arb_aut(3, 6), k in 0usize..3) {
            prop_assert!(is_primitive(&phi.images[k], 3).unwrap());
        }
    }

    /// At rank 2, brute-force the minimal core size of a subgroup over all
    /// automorphisms of bounded Nielsen length and compare with descent.
    #[test]
    fn subgroup_descent_matches_brute_force_rank2() {
        let moves = NielsenMove::all(2);
        let mut autos = vec![Automorphism::identity(2)];
        let mut frontier = autos.clone();
        for _ in 0..3 {
            let mut next = Vec::new();
            for a in &frontier {
                for m in &moves {
                    next.push(a.then_move(m));
                }
            }
            autos.extend(next.iter().cloned());
            frontier = next;
        }
        for gens in [vec![w("x1 x2 x1 x2 x2")], vec![w("x1 x1 x2"), w("x2 x1 x2")], vec![w("x1 x2 x2 x1")]] {
            let h = ConjSubgroup::from_generators(2, &gens);
            let greedy = minimize_conj_subgroup(&h).complexity;
            let brute = autos.iter().map(|a| h.apply(a).num_edges()).min().unwrap();
            assert!(greedy <= brute, "{:?}: greedy {} brute {}", gens, greedy, brute);
        }
    }
}
