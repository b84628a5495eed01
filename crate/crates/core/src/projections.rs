//! Projections into the complement of a non-separating sphere.
//!
//! Cutting along a non-separating sphere `σ0` and capping leaves a manifold
//! whose fundamental group is the vertex group `G0` of `σ0` (in the chart of
//! `σ0`, the free factor `⟨x2..xn⟩`). The projection of a sphere `S` is
//! computed from the action of `G0` on the Bass–Serre tree of `S`: its
//! minimal invariant subtree has finitely many edge orbits, and collapsing
//! all orbits but one gives a one-edge splitting of `G0`, that is, a sphere in
//! the complement. The projection is the set of these spheres.
//!
//! In the chart of `S` the tree edges are the `x1`-edges (non-separating
//! `S`) or the marker edges of the barbell substitution (separating `S`), so
//! the quotient of the minimal subtree is read off a folded core graph of
//! `G0`. Each edge of the core graph carries the complement coordinates of
//! its label, so the resulting splittings come out in the coordinates of
//! `G0 ≅ F_{n−1}` directly.
//!
//! When `S` is disjoint from `σ0` this is the reinterpretation of `S` in the
//! complement. It is empty exactly when `G0` fixes a vertex of the tree of
//! `S`, which happens for `σ0` itself and for the peripheral spheres (the
//! separating spheres cutting off `σ0` together with a rank-one side). All
//! spheres of one projection are pairwise compatible, so a projection has
//! diameter at most one.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::rank2_sg_distance;
use crate::labeled::LabeledGraph;
use crate::par::par_map;
use crate::splittings::oracle::barbell_images;
use crate::splittings::{disjoint, Ball, NonSepSphere, SepSphere, Sphere, SphereKey};
use crate::stallings::ConjSubgroup;
use crate::word::Word;

/// A non-separating sphere `σ0` with the identification of its complement.
#[derive(Clone, Debug)]
pub struct ComplementChart {
    pub sigma0: NonSepSphere,
    /// `G0` generators in the ambient group: `C0⁻¹(x_{j+1})` for complement letter `y_j`.
    pub complement_basis: Vec<Word>,
    pub complement_rank: usize,
}

impl ComplementChart {
    pub fn new(sigma0: NonSepSphere) -> Self {
        let n = sigma0.rank();
        let inv = sigma0.chart().inverse();
        let complement_basis = (2..=n).map(|j| inv.apply_word(&Word::gen(j))).collect();
        ComplementChart { sigma0, complement_basis, complement_rank: n - 1 }
    }

    /// The chart of the standard sphere `σ1`.
    pub fn standard(n: usize) -> Self {
        ComplementChart::new(NonSepSphere::standard(n, 1))
    }

    pub fn rank(&self) -> usize {
        self.sigma0.rank()
    }

    pub fn sigma0_sphere(&self) -> Sphere {
        Sphere::NonSep(self.sigma0.clone())
    }
}

/// The projection of one sphere.
#[derive(Clone, Debug)]
pub struct ProjectionResult {
    /// Spheres of the complement (rank `n−1`), sorted by key, without repeats.
    pub spheres: Vec<Sphere>,
    /// Pairwise distance bound in the complement sphere graph.
    pub diameter_bound: usize,
}

impl ProjectionResult {
    pub fn keys(&self) -> Vec<SphereKey> {
        self.spheres.iter().map(Sphere::key).collect()
    }
}

/// The one-edge splittings of `G0` read off the tree of `s`.
fn complement_splittings(s: &Sphere, c: &ComplementChart) -> Result<Vec<Sphere>> {
    let n = c.rank();
    if s.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: s.rank() });
    }
    let m = c.complement_rank;
    let g = LabeledGraph::rose_of(n, &c.complement_basis, false);
    let mut g = s.chart().apply_labeled(&g);
    // an empty chart leaves the rose untrimmed
    g.trim();
    let tau = match s {
        Sphere::NonSep(_) => 1,
        Sphere::Sep(sep) => {
            g = g.apply(&barbell_images(n, sep.k()), n + 1);
            n + 1
        }
    };
    let mut out: Vec<Sphere> = Vec::new();
    let mut seen: BTreeSet<SphereKey> = BTreeSet::new();
    for e in g.edges_with_label(tau) {
        let (t, h) = g.edge_ends(e);
        let here: Vec<Word> = g.loops_at(t, &[e]).into_iter().map(|(_, l)| l).collect();
        let sphere = if !g.is_bridge(e) {
            Sphere::NonSep(NonSepSphere::from_factor(ConjSubgroup::from_generators(m, &here))?)
        } else {
            let lam = g.aux(e).clone();
            let there: Vec<Word> =
                g.loops_at(h, &[e]).into_iter().map(|(_, l)| lam.mul(&l).mul(&lam.inverse())).collect();
            Sphere::Sep(SepSphere::new(m, &here, &there)?)
        };
        if seen.insert(sphere.key()) {
            out.push(sphere);
        }
    }
    out.sort_by_key(Sphere::key);
    Ok(out)
}

/// Whether `s` is disjoint from `σ0` and becomes inessential after capping.
pub fn peripheral(s: &Sphere, c: &ComplementChart) -> Result<bool> {
    if s.key() == c.sigma0.key() {
        return Err(Error::EqualArguments);
    }
    let d = disjoint(s, &c.sigma0_sphere())?;
    match d.answer {
        crate::splittings::Answer::Unknown => Err(Error::Saturation { unknown: 1, total: 1 }),
        crate::splittings::Answer::No => Ok(false),
        crate::splittings::Answer::Yes => Ok(complement_splittings(s, c)?.is_empty()),
    }
}

/// `p_{σ0}(S)`.
pub fn project(s: &Sphere, c: &ComplementChart) -> Result<ProjectionResult> {
    if s.key() == c.sigma0.key() {
        return Err(Error::ProjectionUndefined("the sphere is σ0".into()));
    }
    let spheres = complement_splittings(s, c)?;
    if spheres.is_empty() {
        return Err(Error::ProjectionUndefined("peripheral sphere".into()));
    }
    Ok(ProjectionResult { spheres, diameter_bound: 1 })
}

/// Distance in the complement sphere graph (exact when the complement has rank two).
pub fn complement_distance(a: &Sphere, b: &Sphere) -> Result<usize> {
    if a.rank() == 2 {
        rank2_sg_distance(a, b)
    } else {
        Err(Error::Unavailable(format!("complement of rank {} has no exact distance oracle", a.rank())))
    }
}

/// Diameter of the union of two projections.
pub fn union_diameter(a: &ProjectionResult, b: &ProjectionResult) -> Result<usize> {
    let all: Vec<&Sphere> = a.spheres.iter().chain(&b.spheres).collect();
    let mut best = 0;
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            best = best.max(complement_distance(all[i], all[j])?);
        }
    }
    Ok(best)
}

/// Least distance between two projections.
pub fn set_distance(a: &ProjectionResult, b: &ProjectionResult) -> Result<usize> {
    let mut best = usize::MAX;
    for x in &a.spheres {
        for y in &b.spheres {
            best = best.min(complement_distance(x, y)?);
        }
    }
    Ok(best)
}

/// Measured diameter of one projection.
pub fn projection_diameter(p: &ProjectionResult) -> Result<usize> {
    union_diameter(p, &ProjectionResult { spheres: Vec::new(), diameter_bound: 0 })
}

/// Projections of every ball vertex (`None` where undefined).
pub fn project_ball(ball: &Ball, c: &ComplementChart) -> Vec<Option<ProjectionResult>> {
    par_map(&ball.spheres, |s| project(s, c).ok())
}

/// Indices of `σ0` and of the peripheral spheres in a ball.
pub fn excluded_vertices(projections: &[Option<ProjectionResult>]) -> Vec<usize> {
    (0..projections.len()).filter(|&i| projections[i].is_none()).collect()
}

/// One sampled geodesic and its projection data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub path: Vec<usize>,
    /// `d(p(S_0), p(S_m))` as the diameter of the union.
    pub end_gap: usize,
    /// Diameter of the union of all projections along the path.
    pub path_diameter: usize,
}

/// Report of the bounded-geodesic-image experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BgiReport {
    pub radius: usize,
    pub samples: Vec<GeodesicSample>,
    /// Histogram of `end_gap`.
    pub histogram: Vec<usize>,
    pub max_gap: usize,
    /// `max_gap + 1`.
    pub q_hat: usize,
    /// Pairs whose geodesics all met the excluded set.
    pub rejected: usize,
}

/// Memoised pairwise complement distances of ball projections.
pub struct ProjectionTable<'a> {
    pub projections: &'a [Option<ProjectionResult>],
    pairs: std::sync::Mutex<HashMap<(usize, usize), usize>>,
}

impl<'a> ProjectionTable<'a> {
    pub fn new(projections: &'a [Option<ProjectionResult>]) -> Self {
        ProjectionTable { projections, pairs: std::sync::Mutex::new(HashMap::new()) }
    }

    fn get(&self, i: usize) -> Result<&ProjectionResult> {
        self.projections[i].as_ref().ok_or_else(|| Error::ProjectionUndefined(format!("vertex {}", i)))
    }

    /// Diameter of `p(S_i) ∪ p(S_j)`.
    pub fn gap(&self, i: usize, j: usize) -> Result<usize> {
        let key = (i.min(j), i.max(j));
        if let Some(&d) = self.pairs.lock().unwrap().get(&key) {
            return Ok(d);
        }
        let d = union_diameter(self.get(i)?, self.get(j)?)?;
        self.pairs.lock().unwrap().insert(key, d);
        Ok(d)
    }

    /// Least distance between `p(S_i)` and `p(S_j)`.
    pub fn distance(&self, i: usize, j: usize) -> Result<usize> {
        set_distance(self.get(i)?, self.get(j)?)
    }
}

/// Sample geodesics of the ball avoiding the excluded set and measure the
/// projection gap between their endpoints.
pub fn bgi_experiment<R: Rng>(
    ball: &Ball,
    table: &ProjectionTable,
    samples: usize,
    rng: &mut R,
) -> Result<BgiReport> {
    let excluded = excluded_vertices(table.projections);
    let allowed: Vec<usize> = (0..ball.len()).filter(|i| !excluded.contains(i)).collect();
    if allowed.len() < 2 {
        return Err(Error::Unavailable("ball too small for geodesic samples".into()));
    }
    let mut out = Vec::new();
    let mut rejected = 0;
    let mut attempts = 0;
    while out.len() < samples && attempts < samples * 50 {
        attempts += 1;
        let a = allowed[rng.gen_range(0..allowed.len())];
        let b = allowed[rng.gen_range(0..allowed.len())];
        let full = ball.bfs(a);
        if full[b] == usize::MAX || (a == b && out.len() % 10 != 0) {
            continue;
        }
        let path = match ball.shortest_path_avoiding(a, b, &excluded) {
            Some(p) if p.len() == full[b] + 1 => p,
            _ => {
                rejected += 1;
                continue;
            }
        };
        let end_gap = table.gap(a, b)?;
        let mut path_diameter = 0;
        for i in 0..path.len() {
            for j in i..path.len() {
                path_diameter = path_diameter.max(table.gap(path[i], path[j])?);
            }
        }
        out.push(GeodesicSample { path, end_gap, path_diameter });
    }
    let max_gap = out.iter().map(|s| s.end_gap).max().unwrap_or(0);
    let mut histogram = vec![0usize; max_gap + 1];
    for s in &out {
        histogram[s.end_gap] += 1;
    }
    Ok(BgiReport { radius: ball.radius, samples: out, histogram, max_gap, q_hat: max_gap + 1, rejected })
}

/// Consecutive projection gaps along a path of pairwise disjoint neighbours.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub gaps: Vec<usize>,
    /// Indices `i` with gap `> 2` between steps `i` and `i+1`.
    pub violations: Vec<usize>,
}

/// `i ↦ p(S_i)` moves at most two per step.
pub fn lipschitz_check(path: &[Sphere], c: &ComplementChart) -> Result<LipschitzReport> {
    let projs: Vec<ProjectionResult> = path.iter().map(|s| project(s, c)).collect::<Result<_>>()?;
    for w in path.windows(2) {
        if w[0].key() != w[1].key() && !disjoint(&w[0], &w[1])?.is_yes() {
            return Err(Error::Precondition("consecutive spheres must be disjoint".into()));
        }
    }
    let gaps: Vec<usize> = projs.windows(2).map(|w| union_diameter(&w[0], &w[1])).collect::<Result<_>>()?;
    let violations = (0..gaps.len()).filter(|&i| gaps[i] > 2).collect();
    Ok(LipschitzReport { gaps, violations })
}

/// Verdict of the large-projection locator for one pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocatorVerdict {
    pub gap: usize,
    /// The gap reached the threshold.
    pub triggered: bool,
    /// Some geodesic of the ball between the pair consists of non-separating
    /// spheres. Without one the statement has no premise to test.
    pub nonseparating_geodesic: bool,
    /// A geodesic of non-separating spheres avoiding `σ0` (a violation when
    /// triggered).
    pub avoiding_geodesic: Option<Vec<usize>>,
}

/// A projection gap of at least `q` between non-separating `a` and `b`
/// forces every geodesic of non-separating spheres between them through `σ0`.
pub fn big_projection_locator(
    ball: &Ball,
    table: &ProjectionTable,
    sigma0: usize,
    a: usize,
    b: usize,
    q: usize,
) -> Result<LocatorVerdict> {
    let gap = table.gap(a, b)?;
    if gap < q {
        return Ok(LocatorVerdict { gap, triggered: false, nonseparating_geodesic: false, avoiding_geodesic: None });
    }
    let d = ball.bfs(a)[b];
    if d == usize::MAX {
        return Err(Error::Unavailable("pair disconnected in the ball".into()));
    }
    let ns = |w: usize| !ball.spheres[w].is_separating();
    let nonseparating_geodesic = ball.bfs_within(a, ns)[b] == d;
    let avoiding = if nonseparating_geodesic {
        ball.shortest_path_within(a, b, |w| w != sigma0 && ns(w)).filter(|p| p.len() == d + 1)
    } else {
        None
    };
    Ok(LocatorVerdict { gap, triggered: true, nonseparating_geodesic, avoiding_geodesic: avoiding })
}

/// Report of the stabilisation check along one path from `σ0` toward `S`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StabilizationReport {
    /// `(index, distance to σ0, least distance from p(S_k) to p(S))`.
    pub rows: Vec<(usize, usize, usize)>,
    pub violations: Vec<usize>,
}

/// Once a state is at distance `≥ k0` from `σ0`, its projection stays within
/// two of the projection of the end point.
pub fn stabilization_check(
    path: &[usize],
    dist_to_sigma0: &[usize],
    table: &ProjectionTable,
    k0: usize,
) -> Result<StabilizationReport> {
    let end = *path.last().ok_or_else(|| Error::Precondition("empty path".into()))?;
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for (k, &v) in path.iter().enumerate() {
        let d0 = dist_to_sigma0[v];
        if d0 < k0 || table.projections[v].is_none() {
            continue;
        }
        let d = table.distance(v, end)?;
        if d > 2 {
            violations.push(k);
        }
        rows.push((k, d0, d));
    }
    Ok(StabilizationReport { rows, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::growth::sphere_slope;
    use crate::splittings::{NonSepSphere, SepSphere};
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

    fn slopes(p: &ProjectionResult) -> Vec<String> {
        p.spheres
            .iter()
            .map(|s| match s {
                Sphere::NonSep(x) => sphere_slope(x).unwrap().to_string(),
                Sphere::Sep(_) => "sep".into(),
            })
            .collect()
    }

    #[test]
    fn disjoint_spheres_are_reinterpreted() {
        let c = ComplementChart::standard(3);
        // σ2 has factor ⟨x1, x3⟩; in the complement ⟨x2, x3⟩ it becomes ⟨x3⟩, slope 0/1
        let p = project(&Sphere::NonSep(NonSepSphere::standard(3, 2)), &c).unwrap();
        assert_eq!(slopes(&p), vec!["0/1"]);
        let p = project(&Sphere::NonSep(NonSepSphere::standard(3, 3)), &c).unwrap();
        assert_eq!(slopes(&p), vec!["1/0"]);
        // a separating sphere with σ1 on its rank-two side
        let p = project(&sep(&["x1", "x2"], &["x3"]), &c).unwrap();
        assert_eq!(p.spheres.len(), 1);
        assert!(p.spheres[0].is_separating());
    }

    #[test]
    fn peripheral_and_undefined_cases() {
        let c = ComplementChart::standard(3);
        let cut = sep(&["x1"], &["x2", "x3"]);
        assert!(peripheral(&cut, &c).unwrap());
        assert!(matches!(project(&cut, &c), Err(Error::ProjectionUndefined(_))));
        assert!(matches!(project(&c.sigma0_sphere(), &c), Err(Error::ProjectionUndefined(_))));
        assert!(!peripheral(&Sphere::NonSep(NonSepSphere::standard(3, 2)), &c).unwrap());
        // a conjugate of x1 cut off together with σ1
        assert!(peripheral(&sep(&["x2 x1 X2"], &["x2", "x3"]), &c).unwrap());
    }

    #[test]
    fn transvections_of_the_complement_act_on_projections() {
        let c = ComplementChart::standard(3);
        // x2 ↦ x2 x3 fixes σ1 and acts on the complement as y1 ↦ y1 y2
        let phi = NielsenMove::right(1, 2, 1).as_automorphism(3);
        let s = Sphere::NonSep(NonSepSphere::standard(3, 3));
        let p = project(&s.apply(&phi), &c).unwrap();
        let psi = Automorphism::new(vec![w("x1 x2"), w("x2")]).unwrap();
        let expect = Sphere::NonSep(NonSepSphere::standard(2, 2)).apply(&psi);
        assert_eq!(p.keys(), vec![expect.key()]);
    }

    #[test]
    fn crossing_spheres_project_to_compatible_sets() {
        let c = ComplementChart::standard(3);
        for s in [ns(&["x1 x2", "x1 x3"], "x1"), ns(&["x2 x1 x3", "x3"], "x1"), sep(&["x2 x1"], &["x2", "x3 x1"])] {
            let p = project(&s, &c).unwrap();
            assert!(projection_diameter(&p).unwrap() <= 1, "{:?}", slopes(&p));
        }
    }

    #[test]
    fn complement_slope_of_a_crossing_sphere() {
        let c = ComplementChart::standard(3);
        // x2 ↦ x2 x1 moves σ1 to the splitting with factor ⟨x2 x1, x3⟩; G0 keeps
        // ⟨x3⟩ elliptic and x2 crosses one edge, so the complement splitting is dual to y1
        let phi = NielsenMove::right(1, 0, 1).as_automorphism(3);
        let s = c.sigma0_sphere().apply(&phi);
        let p = project(&s, &c).unwrap();
        assert_eq!(slopes(&p), vec!["0/1"]);
    }

    #[test]
    fn lipschitz_on_disjoint_path() {
        let c = ComplementChart::standard(3);
        let path = vec![
            Sphere::NonSep(NonSepSphere::standard(3, 2)),
            Sphere::NonSep(NonSepSphere::standard(3, 3)),
            ns(&["x1", "x2 x3"], "x3"),
        ];
        let r = lipschitz_check(&path, &c).unwrap();
        assert!(r.violations.is_empty(), "{:?}", r);
        let constant = vec![path[0].clone(), path[0].clone()];
        assert_eq!(lipschitz_check(&constant, &c).unwrap().gaps, vec![0]);
    }

    #[test]
    fn standard_sphere_projects_into_every_complement_of_a_ball() {
        use crate::splittings::{build_local_ball, BallBounds, GraphKind, LinkTemplate};
        let tpl = LinkTemplate::new(3, GraphKind::Ns, BallBounds::new(3), None).unwrap();
        let s1 = Sphere::NonSep(NonSepSphere::standard(3, 1));
        let ball = build_local_ball(&s1, 3, &tpl, 100_000).unwrap();
        for a in ball.spheres.iter().skip(1) {
            let c = ComplementChart::new(a.as_nonsep().unwrap().clone());
            assert!(project(&s1, &c).is_ok(), "{:?}", a);
        }
    }

    fn moves() -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..NielsenMove::count(3), 1..5)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projections_are_simplices(idx in moves()) {
            let all = NielsenMove::all(3);
            let mv: Vec<NielsenMove> = idx.iter().map(|&i| all[i]).collect();
            let phi = Automorphism::from_moves(3, &mv);
            let c = ComplementChart::standard(3);
            let s = Sphere::NonSep(NonSepSphere::standard(3, 2)).apply(&phi);
            if s.key() != c.sigma0.key() {
                if let Ok(p) = project(&s, &c) {
                    prop_assert!(projection_diameter(&p).unwrap() <= 1);
                }
            }
        }

        #[test]
        fn non_separating_spheres_always_project(idx in moves(), jdx in moves()) {
            // peripheral spheres are separating, so every other non-separating sphere projects
            let all = NielsenMove::all(3);
            let phi = Automorphism::from_moves(3, &idx.iter().map(|&i| all[i]).collect::<Vec<_>>());
            let c = ComplementChart::new(NonSepSphere::standard(3, 2).apply(&phi));
            for s in [Sphere::NonSep(NonSepSphere::standard(3, 1)), Sphere::NonSep(NonSepSphere::standard(3, 3)).apply(&Automorphism::from_moves(3, &jdx.iter().map(|&i| all[i]).collect::<Vec<_>>()))] {
                if s.key() != c.sigma0.key() {
                    prop_assert!(project(&s, &c).is_ok());
                }
            }
        }

        #[test]
        fn projection_is_equivariant_under_the_stabiliser(idx in proptest::collection::vec(0usize..8, 1..5), jdx in moves()) {
            // moves on positions 1, 2 only fix σ1 and act on the complement
            let inner: Vec<NielsenMove> = NielsenMove::all(2)
                .into_iter()
                .map(|m| NielsenMove { i: m.i + 1, j: m.j + 1, ..m })
                .collect();
            let mv: Vec<NielsenMove> = idx.iter().map(|&i| inner[i % inner.len()]).collect();
            let phi = Automorphism::from_moves(3, &mv);
            let small = Automorphism::from_moves(2, &idx.iter().map(|&i| NielsenMove::all(2)[i % inner.len()]).collect::<Vec<_>>());
            let all = NielsenMove::all(3);
            let s = Sphere::NonSep(NonSepSphere::standard(3, 2)).apply(&Automorphism::from_moves(3, &jdx.iter().map(|&i| all[i]).collect::<Vec<_>>()));
            let c = ComplementChart::standard(3);
            if s.key() != c.sigma0.key() {
                if let Ok(p) = project(&s, &c) {
                    let q = project(&s.apply(&phi), &c).unwrap();
                    let mut expect: Vec<SphereKey> = p.spheres.iter().map(|x| x.apply(&small).key()).collect();
                    expect.sort();
                    prop_assert_eq!(q.keys(), expect);
                }
            }
        }
    }
}
