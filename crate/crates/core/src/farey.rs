//! The exact rank-two model: non-separating spheres in rank two are slopes,
//! disjointness is Farey adjacency and `GL(2, Z)` acts by fractional linear
//! maps.
//!
//! Convention fixed project-wide: the abelianization `(e1, e2)` of a
//! primitive element gives the slope `e1/e2`, so `x1` is `1/0` and `x2` is
//! `0/1`.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::whitehead::{gcd, is_primitive};
use crate::word::Word;

/// A reduced fraction `p/q` with `q > 0`, or `1/0`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slope {
    pub p: i64,
    pub q: i64,
}

impl Slope {
    pub const INFINITY: Slope = Slope { p: 1, q: 0 };
    pub const ZERO: Slope = Slope { p: 0, q: 1 };

    /// Normalize `p/q`; fails on `0/0`.
    pub fn new(p: i64, q: i64) -> Result<Slope> {
        let g = gcd(p, q);
        if g == 0 {
            return Err(Error::Precondition("0/0 is not a slope".into()));
        }
        let (mut p, mut q) = (p / g, q / g);
        if q < 0 || (q == 0 && p < 0) {
            p = -p;
            q = -q;
        }
        Ok(Slope { p, q })
    }

    /// Normalize a vector known to be primitive or zero-free.
    pub fn from_vector(v: (i64, i64)) -> Slope {
        Slope::new(v.0, v.1).expect("nonzero vector")
    }

    /// `max(|p|, q)`.
    pub fn height(&self) -> i64 {
        self.p.abs().max(self.q)
    }

    pub fn is_infinite(&self) -> bool {
        self.q == 0
    }

    /// `|p_s q_t − q_s p_t|`.
    pub fn det(&self, t: &Slope) -> i64 {
        (self.p * t.q - self.q * t.p).abs()
    }

    /// All slopes with height ≤ `h`, sorted.
    pub fn all_up_to_height(h: i64) -> Vec<Slope> {
        let mut out = vec![Slope::INFINITY];
        for q in 1..=h {
            for p in -h..=h {
                if gcd(p, q) == 1 {
                    out.push(Slope { p, q });
                }
            }
        }
        out.sort();
        out
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl fmt::Debug for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Slope {
    type Err = Error;
    fn from_str(s: &str) -> Result<Slope> {
        let bad = || Error::Parse { what: "slope", detail: s.to_string(), offset: None };
        let (a, b) = s.trim().split_once('/').ok_or_else(bad)?;
        let p: i64 = a.trim().parse().map_err(|_| bad())?;
        let q: i64 = b.trim().parse().map_err(|_| bad())?;
        Slope::new(p, q)
    }
}

impl Serialize for Slope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Slope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An integer 2×2 matrix `[[a, b], [c, d]]` with determinant ±1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1, b: 0, c: 0, d: 1 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Mat2> {
        let m = Mat2 { a, b, c, d };
        if m.det().abs() != 1 {
            return Err(Error::Precondition(format!("determinant {} is not ±1", m.det())));
        }
        Ok(m)
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Mat2 {
        let e = self.det();
        Mat2 { a: self.d * e, b: -self.b * e, c: -self.c * e, d: self.a * e }
    }

    pub fn pow(&self, k: u32) -> Mat2 {
        (0..k).fold(Mat2::IDENTITY, |acc, _| acc.mul(self))
    }

    pub fn act(&self, s: &Slope) -> Slope {
        Slope::from_vector((self.a * s.p + self.b * s.q, self.c * s.p + self.d * s.q))
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    /// Hyperbolic iff `|trace| > 2` (for determinant 1) or trace ≠ 0 (for determinant −1).
    pub fn is_hyperbolic(&self) -> bool {
        if self.det() == 1 {
            self.trace().abs() > 2
        } else {
            self.trace() != 0
        }
    }

    /// A matrix sending `s` to `1/0`.
    pub fn to_infinity(s: &Slope) -> Mat2 {
        let (g, x, y) = ext_gcd(s.p, s.q);
        debug_assert_eq!(g, 1);
        // x p + y q = 1, second row (−q, p) kills s
        Mat2 { a: x, b: y, c: -s.q, d: s.p }
    }

    /// A random product of `len` elementary matrices.
    pub fn random<R: Rng>(rng: &mut R, len: usize) -> Mat2 {
        let gens = [
            Mat2 { a: 1, b: 1, c: 0, d: 1 },
            Mat2 { a: 1, b: -1, c: 0, d: 1 },
            Mat2 { a: 1, b: 0, c: 1, d: 1 },
            Mat2 { a: 1, b: 0, c: -1, d: 1 },
            Mat2 { a: 0, b: 1, c: 1, d: 0 },
            Mat2 { a: -1, b: 0, c: 0, d: 1 },
        ];
        (0..len).fold(Mat2::IDENTITY, |acc, _| acc.mul(&gens[rng.gen_range(0..gens.len())]))
    }
}

/// Extended Euclid: `(g, x, y)` with `x a + y b = g = gcd(a, b) ≥ 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Slope of a primitive element of `F_2`.
pub fn slope_of(w: &Word) -> Result<Slope> {
    if w.max_generator() > 2 {
        return Err(Error::RankMismatch { expected: 2, found: w.max_generator() });
    }
    if !is_primitive(w, 2)? {
        return Err(Error::Precondition(format!("{} is not primitive", w)));
    }
    let v = w.abelianization(2);
    Ok(Slope::from_vector((v[0], v[1])))
}

/// Adjacency `|ps − qr| = 1`; equal slopes are an error.
pub fn adjacent(s: &Slope, t: &Slope) -> Result<bool> {
    if s == t {
        return Err(Error::EqualArguments);
    }
    Ok(s.det(t) == 1)
}

/// Floor division for `q > 0`.
fn floor_div(p: i64, q: i64) -> i64 {
    p.div_euclid(q)
}

/// Vertices of the ladder from `1/0` to `x`: all Stern–Brocot interval
/// endpoints visited while locating `x`, the two integers around it, and `1/0`.
pub fn ladder_from_infinity(x: &Slope) -> Vec<Slope> {
    let mut out = vec![Slope::INFINITY];
    if x.is_infinite() {
        return out;
    }
    let n = floor_div(x.p, x.q);
    let (mut l, mut r) = ((n, 1i64), (n + 1, 1i64));
    out.push(Slope { p: l.0, q: l.1 });
    out.push(Slope { p: r.0, q: r.1 });
    if x.q == 1 {
        return out;
    }
    loop {
        let m = (l.0 + r.0, l.1 + r.1);
        out.push(Slope { p: m.0, q: m.1 });
        if m == (x.p, x.q) {
            break;
        }
        // compare x with m: x.p/x.q < m.0/m.1
        if (x.p as i128) * (m.1 as i128) < (m.0 as i128) * (x.q as i128) {
            r = m;
        } else {
            l = m;
        }
    }
    out
}

/// Exact Farey distance by breadth-first search on the ladder between the
/// two slopes (after moving the first to `1/0`).
pub fn distance(s: &Slope, t: &Slope) -> usize {
    if s == t {
        return 0;
    }
    let m = Mat2::to_infinity(s);
    let x = m.act(t);
    if x.q == 1 {
        return 1;
    }
    let lad = ladder_from_infinity(&x);
    bfs_within(&lad, &Slope::INFINITY, &x).expect("ladder is connected")
}

/// BFS distance inside the induced subgraph on `verts`.
fn bfs_within(verts: &[Slope], from: &Slope, to: &Slope) -> Option<usize> {
    let idx: HashMap<Slope, usize> = verts.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let src = *idx.get(from)?;
    let dst = *idx.get(to)?;
    let mut dist = vec![usize::MAX; verts.len()];
    dist[src] = 0;
    let mut q = VecDeque::from([src]);
    while let Some(u) = q.pop_front() {
        if u == dst {
            return Some(dist[u]);
        }
        for v in 0..verts.len() {
            if dist[v] == usize::MAX && verts[u].det(&verts[v]) == 1 {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    None
}

/// The Farey graph truncated at a height bound, with all-pairs BFS.
pub struct TruncatedFarey {
    pub slopes: Vec<Slope>,
    pub index: HashMap<Slope, usize>,
    pub adj: Vec<Vec<usize>>,
}

impl TruncatedFarey {
    /// Build by exhaustive determinant checks (the reference adjacency).
    pub fn new(h: i64) -> Self {
        let slopes = Slope::all_up_to_height(h);
        let index = slopes.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let adj = crate::par::par_map_range(slopes.len(), |i| {
            (0..slopes.len()).filter(|&j| j != i && slopes[i].det(&slopes[j]) == 1).collect()
        });
        TruncatedFarey { slopes, index, adj }
    }

    /// BFS distances from one slope.
    pub fn bfs(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.slopes.len()];
        dist[from] = 0;
        let mut q = VecDeque::from([from]);
        while let Some(u) = q.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    q.push_back(v);
                }
            }
        }
        dist
    }
}

/// Farey edges among slopes of height ≤ `h`, generated by mediant insertion
/// from the integer fan. Independent of determinant arithmetic.
pub fn mediant_edges(h: i64) -> Vec<(Slope, Slope)> {
    let mut out = Vec::new();
    for nn in -h..=h {
        out.push((Slope::INFINITY, Slope { p: nn, q: 1 }));
        if nn < h {
            out.push((Slope { p: nn, q: 1 }, Slope { p: nn + 1, q: 1 }));
        }
    }
    // refine every unit interval [n, n+1] by mediants
    let mut stack: Vec<((i64, i64), (i64, i64))> = (-h..h).map(|nn| ((nn, 1), (nn + 1, 1))).collect();
    while let Some((l, r)) = stack.pop() {
        let m = (l.0 + r.0, l.1 + r.1);
        if m.0.abs().max(m.1) > h {
            continue;
        }
        let ms = Slope { p: m.0, q: m.1 };
        out.push((Slope { p: l.0, q: l.1 }, ms));
        out.push((ms, Slope { p: r.0, q: r.1 }));
        stack.push((l, m));
        stack.push((m, r));
    }
    out
}

/// Report of the parameterized quasi-geodesic test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiGeodesicReport {
    pub length: usize,
    /// Least `L ≥ 1` with `d/L − L ≤ |i−j| ≤ L d + L` for all index pairs.
    pub minimal_l: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Whether the requested constant works.
    pub holds: bool,
}

/// Least `L ≥ 1` satisfying both inequalities for a pair at index gap `t` and distance `d`.
pub fn pair_min_l(t: f64, d: f64) -> f64 {
    let upper = (-t + (t * t + 4.0 * d).sqrt()) / 2.0;
    let lower = t / (d + 1.0);
    upper.max(lower).max(1.0)
}

/// Test a slope sequence as a parameterized `L`-quasi-geodesic.
pub fn quasigeodesic_test(seq: &[Slope], l: f64) -> QuasiGeodesicReport {
    quasigeodesic_test_with(seq, l, distance)
}

/// Same test for any metric on the sequence items.
pub fn quasigeodesic_test_with<T, D: Fn(&T, &T) -> usize>(seq: &[T], l: f64, dist: D) -> QuasiGeodesicReport {
    let mut best = 1.0f64;
    let mut worst = None;
    for i in 0..seq.len() {
        for j in (i + 1)..seq.len() {
            let d = dist(&seq[i], &seq[j]) as f64;
            let v = pair_min_l((j - i) as f64, d);
            if v > best {
                best = v;
                worst = Some((i, j));
            }
        }
    }
    QuasiGeodesicReport { length: seq.len(), minimal_l: best, worst_pair: worst, holds: best <= l + 1e-12 }
}

/// A basis `(u, t)` of `F_2` with `u` positive (Christoffel) of slope `s`.
///
/// Built by Stern–Brocot descent: the mediant of a neighbour pair `(l, r)`
/// has word `l·r`, and `{l, r}` stays a basis throughout. Negative slopes use
/// the substitution `x1 ↦ x1⁻¹`.
pub fn christoffel_pair(s: &Slope) -> (Word, Word) {
    if s.is_infinite() {
        return (Word::gen(1), Word::gen(2));
    }
    if s.p == 0 {
        return (Word::gen(2), Word::gen(1));
    }
    let target = (s.p.abs(), s.q);
    let (mut l, mut lw) = ((0i64, 1i64), Word::gen(2));
    let (mut r, mut rw) = ((1i64, 0i64), Word::gen(1));
    let (u, t) = loop {
        let m = (l.0 + r.0, l.1 + r.1);
        let mw = lw.mul(&rw);
        if m == target {
            break (mw, rw);
        }
        if (target.0 as i128) * (m.1 as i128) < (m.0 as i128) * (target.1 as i128) {
            r = m;
            rw = mw;
        } else {
            l = m;
            lw = mw;
        }
    };
    if s.p < 0 {
        let flip = |w: &Word| Word::reduce(&w.letters().iter().map(|&x| if x.abs() == 1 { -x } else { x }).collect::<Vec<_>>());
        (flip(&u), flip(&t))
    } else {
        (u, t)
    }
}

/// Fibonacci numbers `F_0 = 0, F_1 = 1, …`.
pub fn fibonacci(k: usize) -> i64 {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..k {
        let c = a + b;
        a = b;
        b = c;
    }
    a
}

/// How a descent target is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverKind {
    /// A product of positive powers of the two elementary transvections.
    Hyperbolic,
    /// A conjugate of a large power of one transvection.
    Parabolic,
}

/// A target rose `M · R0` given by the Nielsen word of `M`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Driver {
    pub kind: DriverKind,
    pub moves: Vec<crate::word::NielsenMove>,
}

/// Sample `count` drivers, alternating hyperbolic and parabolic.
///
/// Hyperbolic drivers have 5 to 9 partial quotients in `1..=2`. Parabolic
/// drivers are `g T^j g⁻¹` with `j ∈ 100..250` and `g` a word of at most
/// three twists, long enough that linear growth is not mistaken for
/// exponential growth at short range.
pub fn sample_drivers<R: Rng>(rng: &mut R, count: usize) -> Vec<Driver> {
    use crate::word::NielsenMove;
    (0..count)
        .map(|i| {
            let mut moves = Vec::new();
            if i % 2 == 0 {
                for _ in 0..rng.gen_range(5..10) {
                    for _ in 0..rng.gen_range(1..=2) {
                        moves.push(NielsenMove::right(0, 1, 1));
                    }
                    moves.push(NielsenMove::swap(0, 1));
                }
                Driver { kind: DriverKind::Hyperbolic, moves }
            } else {
                let g: Vec<NielsenMove> = (0..rng.gen_range(0..4)).map(|_| crate::growth::random_twist(rng, 2)).collect();
                moves.extend(g.iter().copied());
                moves.extend(std::iter::repeat(NielsenMove::right(0, 1, 1)).take(rng.gen_range(100..250)));
                moves.extend(g.iter().rev().map(|m| m.inverse()));
                Driver { kind: DriverKind::Parabolic, moves }
            }
        })
        .collect()
}

/// Parameters of the growth versus quasi-geodesic comparison.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HarnessParams {
    pub growth: crate::growth::GrowthParams,
    /// Quasi-geodesic constant tested on slope projections.
    pub l: f64,
    /// Twists per descent step.
    pub budget: usize,
}

impl Default for HarnessParams {
    fn default() -> Self {
        HarnessParams { growth: crate::growth::GrowthParams { a: 0.9, k: 4 }, l: 3.0, budget: 2 }
    }
}

/// Both verdicts on one full descent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnessSample {
    pub driver: Driver,
    pub length: usize,
    pub exponential: bool,
    pub quasi_geodesic: bool,
    pub minimal_l: f64,
    /// Slope projection of the descent, kept as the witness of a disagreement.
    pub slopes: Vec<Slope>,
}

impl HarnessSample {
    pub fn agrees(&self) -> bool {
        self.exponential == self.quasi_geodesic
    }
}

/// Contingency table of growth against parameterised quasi-geodesy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarnessReport {
    /// `table[g][q]` counts samples with growth verdict `g` and quasi-geodesic verdict `q`.
    pub table: [[usize; 2]; 2],
    pub agreement: f64,
    pub samples: Vec<HarnessSample>,
    /// Indices of disagreeing samples.
    pub disagreements: Vec<usize>,
}

/// Descend from the standard rose to each driver target and record both verdicts.
pub fn growth_vs_quasigeodesic(drivers: &[Driver], params: HarnessParams) -> Result<HarnessReport> {
    use crate::growth::{descend, growth_detect, rank2_driver, DescentPolicy, RoseVertex, StopRule};
    let start = RoseVertex::standard(2);
    let policy = DescentPolicy::greedy_full(params.budget).with_stop(StopRule::Reached);
    let rows: Vec<Result<HarnessSample>> = crate::par::par_map(drivers, |d| {
        let seq = descend(&start, &rank2_driver(&d.moves), policy)?;
        let slopes = seq.slope_projection()?;
        let q = quasigeodesic_test(&slopes, params.l);
        Ok(HarnessSample {
            driver: d.clone(),
            length: seq.states.len(),
            exponential: growth_detect(&seq, params.growth).exponential,
            quasi_geodesic: q.holds,
            minimal_l: q.minimal_l,
            slopes,
        })
    });
    let samples: Vec<HarnessSample> = rows.into_iter().collect::<Result<_>>()?;
    let mut table = [[0usize; 2]; 2];
    for s in &samples {
        table[usize::from(s.exponential)][usize::from(s.quasi_geodesic)] += 1;
    }
    let disagreements: Vec<usize> = (0..samples.len()).filter(|&i| !samples[i].agrees()).collect();
    let agreement = if samples.is_empty() { 1.0 } else { 1.0 - disagreements.len() as f64 / samples.len() as f64 };
    Ok(HarnessReport { table, agreement, samples, disagreements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(x: &str) -> Slope {
        x.parse().unwrap()
    }

    #[test]
    fn harness_examples() {
        use crate::word::NielsenMove;
        let p = HarnessParams::default();
        assert_eq!(growth_vs_quasigeodesic(&[], p).unwrap().agreement, 1.0);
        let mut fib = Vec::new();
        for _ in 0..8 {
            fib.push(NielsenMove::right(0, 1, 1));
            fib.push(NielsenMove::swap(0, 1));
        }
        let hyp = Driver { kind: DriverKind::Hyperbolic, moves: fib };
        let par = Driver { kind: DriverKind::Parabolic, moves: vec![NielsenMove::right(0, 1, 1); 150] };
        let r = growth_vs_quasigeodesic(&[hyp, par], p).unwrap();
        assert!(r.samples[0].exponential && r.samples[0].quasi_geodesic);
        assert!(!r.samples[1].exponential && !r.samples[1].quasi_geodesic);
        assert_eq!(r.table, [[1, 0], [0, 1]]);
    }

    #[test]
    fn christoffel_pairs_are_bases_with_the_right_slope() {
        for (p, q) in [(1, 0), (0, 1), (1, 1), (2, 5), (-3, 7), (8, 13)] {
            let t = Slope::new(p, q).unwrap();
            let (a, b) = christoffel_pair(&t);
            assert_eq!(slope_of(&a).unwrap(), t);
            assert!(crate::word::Basis::new(vec![a, b]).is_ok());
        }
    }

    #[test]
    fn slope_examples() {
        assert_eq!(slope_of(&"x1".parse().unwrap()).unwrap(), Slope::INFINITY);
        assert_eq!(slope_of(&"x2".parse().unwrap()).unwrap(), Slope::ZERO);
        assert_eq!(slope_of(&"x1 x2".parse().unwrap()).unwrap(), s("1/1"));
        assert!(slope_of(&"x1 x1".parse().unwrap()).is_err());
        assert_eq!(s("-2/-4"), s("1/2"));
    }

    #[test]
    fn adjacency_examples() {
        assert!(adjacent(&s("0/1"), &s("1/0")).unwrap());
        assert!(adjacent(&s("0/1"), &s("1/2")).unwrap());
        assert!(!adjacent(&s("0/1"), &s("2/1")).unwrap());
        assert!(adjacent(&s("0/1"), &s("0/1")).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&s("0/1"), &s("0/1")), 0);
        assert_eq!(distance(&s("0/1"), &s("1/0")), 1);
        // 1/2 is adjacent to both 0/1 and 2/5; no integer is adjacent to 2/5
        assert_eq!(distance(&s("2/5"), &s("0/1")), 2);
        assert_eq!(distance(&s("2/5"), &s("1/0")), 3);
        assert_eq!(distance(&s("1/0"), &s("2/5")), 3);
        assert_eq!(distance(&s("0/1"), &s("2/1")), 2);
    }

    #[test]
    fn distance_matches_plain_bfs_small() {
        let g = TruncatedFarey::new(12);
        for i in 0..g.slopes.len() {
            let d = g.bfs(i);
            for j in 0..g.slopes.len() {
                assert_eq!(distance(&g.slopes[i], &g.slopes[j]), d[j], "{} {}", g.slopes[i], g.slopes[j]);
            }
        }
    }

    #[test]
    fn mediant_edges_match_determinant() {
        let h = 12;
        let mut med: Vec<(Slope, Slope)> =
            mediant_edges(h).into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        med.sort();
        med.dedup();
        let all = Slope::all_up_to_height(h);
        let mut det = Vec::new();
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                if all[i].det(&all[j]) == 1 {
                    det.push((all[i], all[j]));
                }
            }
        }
        assert_eq!(med, det);
    }

    #[test]
    fn fibonacci_distance_growth() {
        let mut prev = 0;
        for k in 1..40 {
            let f = Slope::new(fibonacci(k + 1), fibonacci(k)).unwrap();
            let d = distance(&Slope::ZERO, &f);
            assert!(d >= prev && d <= k + 1);
            prev = d;
        }
    }

    #[test]
    fn quasigeodesic_examples() {
        let c = vec![Slope::ZERO; 6];
        assert!(quasigeodesic_test(&c, 1.0).minimal_l >= 5.0 - 1e-9);
        // a Farey geodesic
        let geo = vec![s("1/0"), s("0/1"), s("1/2"), s("2/5")];
        assert_eq!(distance(&geo[0], &geo[3]), 3);
        assert_eq!(quasigeodesic_test(&geo, 1.0).minimal_l, 1.0);
        // hyperbolic orbit
        let m = Mat2::new(2, 1, 1, 1).unwrap();
        let orbit: Vec<Slope> = (0..=12).map(|k| m.pow(k).act(&Slope::ZERO)).collect();
        assert!(quasigeodesic_test(&orbit, 3.0).holds);
    }

    proptest! {
        #[test]
        fn adjacency_equivariant(seed in any::<u64>(), a in -20i64..20, b in 1i64..20, c in -20i64..20, d in 1i64..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = Mat2::random(&mut rng, 8);
            let (x, y) = (Slope::new(a, b).unwrap(), Slope::new(c, d).unwrap());
            prop_assume!(x != y);
            prop_assert_eq!(adjacent(&m.act(&x), &m.act(&y)).unwrap(), adjacent(&x, &y).unwrap());
            prop_assert_eq!(distance(&m.act(&x), &m.act(&y)), distance(&x, &y));
        }

        #[test]
        fn triangle_inequality(a in -30i64..30, b in 1i64..30, c in -30i64..30, d in 1i64..30, e in -30i64..30, f in 0i64..30) {
            prop_assume!(e != 0 || f != 0);
            let (x, y, z) = (Slope::new(a, b).unwrap(), Slope::new(c, d).unwrap(), Slope::new(e, f).unwrap());
            prop_assert!(distance(&x, &z) <= distance(&x, &y) + distance(&y, &z));
            if x != y {
                prop_assert_eq!(distance(&x, &y) == 1, adjacent(&x, &y).unwrap());
            }
        }
    }
}
