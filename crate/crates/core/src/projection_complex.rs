//! Projection complexes built from submanifold projections.
//!
//! A family of non-separating spheres carries the projections
//! `π_A(B) = p_A(B)` into the complement of each member and the derived
//! numbers `d_A(B, C)`, the diameter of `π_A(B) ∪ π_A(C)`. This module checks
//! the two projection axioms on finite families, assembles a finite quasi-tree
//! from the family, builds balls in the graph of non-separating pairs with
//! its electrification along the first-sphere fibres, and estimates Gromov
//! hyperbolicity through the four-point condition.
//!
//! Every graph here is a finite ball. Reports carry their radius so that
//! instability across radii is visible.

use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::cmp::Reverse;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{par_map, par_map_range};
use crate::projections::{complement_distance, project, union_diameter, ComplementChart, ProjectionResult};
use crate::splittings::{disjoint, Ball, LinkTemplate, NonSepSphere, Sphere, SphereKey};
use crate::stallings::ConjSubgroup;

/// The numbers `d_A(B, C)` of a finite family, indexed `0..len`.
pub trait ProjectionData: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// `d_a(b, c)` for `a ∉ {b, c}`.
    fn d(&self, a: usize, b: usize, c: usize) -> Result<usize>;
}

/// A family of non-separating spheres with memoised projections.
pub struct ProjectionFamily {
    pub spheres: Vec<NonSepSphere>,
    pub index: HashMap<SphereKey, usize>,
    charts: Vec<ComplementChart>,
    memo: Mutex<HashMap<(usize, usize), ProjectionResult>>,
}

impl ProjectionFamily {
    pub fn new(spheres: Vec<NonSepSphere>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, s) in spheres.iter().enumerate() {
            if index.insert(s.key(), i).is_some() {
                return Err(Error::Precondition("family members must be distinct".into()));
            }
        }
        let charts = par_map(&spheres, |s| ComplementChart::new(s.clone()));
        Ok(ProjectionFamily { spheres, index, charts, memo: Mutex::new(HashMap::new()) })
    }

    /// The non-separating vertices of a ball, in ball order.
    pub fn from_ball(ball: &Ball) -> Result<Self> {
        ProjectionFamily::new(ball.spheres.iter().filter_map(|s| s.as_nonsep().cloned()).collect())
    }

    pub fn chart(&self, a: usize) -> &ComplementChart {
        &self.charts[a]
    }

    /// `π_A(B)`.
    pub fn pi(&self, a: usize, b: usize) -> Result<ProjectionResult> {
        if a == b {
            return Err(Error::EqualArguments);
        }
        if let Some(p) = self.memo.lock().unwrap().get(&(a, b)) {
            return Ok(p.clone());
        }
        let p = project(&Sphere::NonSep(self.spheres[b].clone()), &self.charts[a])?;
        self.memo.lock().unwrap().insert((a, b), p.clone());
        Ok(p)
    }
}

impl ProjectionData for ProjectionFamily {
    fn len(&self) -> usize {
        self.spheres.len()
    }
    fn d(&self, a: usize, b: usize, c: usize) -> Result<usize> {
        if a == b || a == c {
            return Err(Error::EqualArguments);
        }
        if b == c {
            return projection_self_diameter(&self.pi(a, b)?);
        }
        union_diameter(&self.pi(a, b)?, &self.pi(a, c)?)
    }
}

fn projection_self_diameter(p: &ProjectionResult) -> Result<usize> {
    union_diameter(p, &ProjectionResult { spheres: Vec::new(), diameter_bound: 0 })
}

/// A family given by an explicit table, zero off the table. Used as a detector control.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SyntheticFamily {
    pub size: usize,
    pub table: HashMap<String, usize>,
}

impl SyntheticFamily {
    fn slot(a: usize, b: usize, c: usize) -> String {
        let (b, c) = (b.min(c), b.max(c));
        format!("{}:{}:{}", a, b, c)
    }

    pub fn new(size: usize) -> Self {
        SyntheticFamily { size, table: HashMap::new() }
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, v: usize) {
        self.table.insert(Self::slot(a, b, c), v);
    }

    /// A family in which the triple `(a, b, c)` has two large values.
    pub fn rigged(size: usize, a: usize, b: usize, c: usize, big: usize) -> Self {
        let mut f = SyntheticFamily::new(size);
        f.set(a, b, c, big);
        f.set(b, a, c, big);
        f
    }
}

impl ProjectionData for SyntheticFamily {
    fn len(&self) -> usize {
        self.size
    }
    fn d(&self, a: usize, b: usize, c: usize) -> Result<usize> {
        if a == b || a == c {
            return Err(Error::EqualArguments);
        }
        Ok(*self.table.get(&Self::slot(a, b, c)).unwrap_or(&0))
    }
}

/// Distinct random triples of `0..n`.
pub fn sample_triples<R: Rng>(rng: &mut R, n: usize, count: usize) -> Vec<(usize, usize, usize)> {
    if n < 3 {
        return Vec::new();
    }
    (0..count)
        .map(|_| loop {
            let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if a != b && b != c && a != c {
                break (a, b, c);
            }
        })
        .collect()
}

/// A triple with at least two of its three numbers above `K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axiom1Violation {
    pub triple: (usize, usize, usize),
    /// `[d_a(b,c), d_b(a,c), d_c(a,b)]`.
    pub values: [usize; 3],
}

/// Summary of an axiom (1) run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Axiom1Report {
    pub k: usize,
    pub triples: usize,
    /// Largest value seen in each triple, as a histogram.
    pub max_histogram: Vec<usize>,
    pub violations: Vec<Axiom1Violation>,
}

/// At most one of `d_A(B,C)`, `d_B(A,C)`, `d_C(A,B)` exceeds `K`.
pub fn verify_axiom1<F: ProjectionData>(f: &F, k: usize, triples: &[(usize, usize, usize)]) -> Result<Axiom1Report> {
    let rows: Vec<Result<[usize; 3]>> =
        par_map(triples, |&(a, b, c)| Ok([f.d(a, b, c)?, f.d(b, a, c)?, f.d(c, a, b)?]));
    let mut violations = Vec::new();
    let mut max_histogram = Vec::new();
    for (&t, r) in triples.iter().zip(rows) {
        let values = r?;
        let m = *values.iter().max().unwrap();
        if max_histogram.len() <= m {
            max_histogram.resize(m + 1, 0);
        }
        max_histogram[m] += 1;
        if values.iter().filter(|&&v| v > k).count() >= 2 {
            violations.push(Axiom1Violation { triple: t, values });
        }
    }
    Ok(Axiom1Report { k, triples: triples.len(), max_histogram, violations })
}

/// Third parties with a large projection for one pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Axiom2Count {
    pub pair: (usize, usize),
    pub members: Vec<usize>,
}

impl Axiom2Count {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

/// `{C : d_C(A,B) > K}` for each pair.
pub fn verify_axiom2<F: ProjectionData>(f: &F, k: usize, pairs: &[(usize, usize)]) -> Result<Vec<Axiom2Count>> {
    if pairs.iter().any(|&(a, b)| a == b) {
        return Err(Error::EqualArguments);
    }
    let mut out = Vec::new();
    for &(a, b) in pairs {
        let vals: Vec<Result<Option<usize>>> = par_map_range(f.len(), |c| {
            if c == a || c == b {
                return Ok(None);
            }
            Ok((f.d(c, a, b)? > k).then_some(c))
        });
        let members = vals.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
        out.push(Axiom2Count { pair: (a, b), members });
    }
    Ok(out)
}

/// Axiom (2) counts of one pair in a smaller and a larger family.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Axiom2Stability {
    pub pair: (SphereKey, SphereKey),
    pub small: usize,
    pub large: usize,
}

/// Compare axiom (2) counts on pairs shared by two families.
pub fn axiom2_stability(
    small: &ProjectionFamily,
    large: &ProjectionFamily,
    k: usize,
    pairs: &[(usize, usize)],
) -> Result<Vec<Axiom2Stability>> {
    let mut out = Vec::new();
    for &(a, b) in pairs {
        let (ka, kb) = (small.spheres[a].key(), small.spheres[b].key());
        let (Some(&la), Some(&lb)) = (large.index.get(&ka), large.index.get(&kb)) else { continue };
        let s = verify_axiom2(small, k, &[(a, b)])?[0].count();
        let l = verify_axiom2(large, k, &[(la, lb)])?[0].count();
        out.push(Axiom2Stability { pair: (ka, kb), small: s, large: l });
    }
    Ok(out)
}

/// An undirected graph on `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn with_vertices(n: usize) -> Self {
        Graph { adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::with_vertices(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        if a != b && !self.adj[a].contains(&b) {
            self.adj[a].push(b);
            self.adj[b].push(a);
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Distances from `s` (`usize::MAX` when unreachable).
    pub fn bfs(&self, s: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.len()];
        d[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in &self.adj[v] {
                if d[w] == usize::MAX {
                    d[w] = d[v] + 1;
                    q.push_back(w);
                }
            }
        }
        d
    }

    /// A shortest path choosing uniformly among predecessors.
    pub fn random_geodesic<R: Rng>(&self, a: usize, b: usize, rng: &mut R) -> Option<Vec<usize>> {
        let d = self.bfs(b);
        if d[a] == usize::MAX {
            return None;
        }
        let mut path = vec![a];
        let mut v = a;
        while v != b {
            let next: Vec<usize> = self.adj[v].iter().copied().filter(|&w| d[w] + 1 == d[v]).collect();
            v = *next.choose(rng).unwrap();
            path.push(v);
        }
        Some(path)
    }

    /// The cycle of length `n`.
    pub fn cycle(n: usize) -> Self {
        Graph::from_edges(n, &(0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>())
    }

    /// A path graph of `n` vertices.
    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, &(1..n).map(|i| (i - 1, i)).collect::<Vec<_>>())
    }

    pub fn weighted(&self) -> WeightedGraph {
        WeightedGraph { adj: self.adj.iter().map(|a| a.iter().map(|&w| (w, 1)).collect()).collect() }
    }
}

/// A graph with positive integer edge lengths.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct WeightedGraph {
    pub adj: Vec<Vec<(usize, u32)>>,
}

impl WeightedGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    pub fn add_edge(&mut self, a: usize, b: usize, w: u32) {
        if a != b {
            self.adj[a].push((b, w));
            self.adj[b].push((a, w));
        }
    }

    /// Distances from `s` (`usize::MAX` when unreachable).
    pub fn dijkstra(&self, s: usize) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.len()];
        d[s] = 0;
        let mut heap = BinaryHeap::from([Reverse((0usize, s))]);
        while let Some(Reverse((dv, v))) = heap.pop() {
            if dv > d[v] {
                continue;
            }
            for &(w, len) in &self.adj[v] {
                let nd = dv + len as usize;
                if nd < d[w] {
                    d[w] = nd;
                    heap.push(Reverse((nd, w)));
                }
            }
        }
        d
    }
}

/// Four-point estimate of the hyperbolicity constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// Largest four-point defect, in half units.
    pub delta: f64,
    pub points: usize,
    pub quadruples: usize,
    /// A quadruple attaining the maximum.
    pub witness: Option<[usize; 4]>,
}

fn four_point(d: &[Vec<usize>], q: [usize; 4]) -> f64 {
    let [x, y, z, w] = q;
    let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
    s.sort_unstable();
    (s[2] - s[1]) as f64 / 2.0
}

/// Maximal four-point defect over sampled quadruples of sampled points.
///
/// `distances(p)` returns the distances from point `p` to every vertex.
pub fn delta_from_oracle<R, D>(n: usize, distances: D, points: usize, quadruples: usize, rng: &mut R) -> Result<DeltaEstimate>
where
    R: Rng,
    D: Fn(usize) -> Vec<usize> + Sync + Send,
{
    if n == 0 {
        return Err(Error::Precondition("empty graph".into()));
    }
    let mut pts: Vec<usize> = (0..n).collect();
    pts.shuffle(rng);
    pts.truncate(points.max(1).min(n));
    let rows: Vec<Vec<usize>> = par_map(&pts, |&p| distances(p));
    let m = pts.len();
    let local: Vec<Vec<usize>> = rows.iter().map(|r| pts.iter().map(|&q| r[q]).collect()).collect();
    if local.iter().flatten().any(|&v| v == usize::MAX) {
        return Err(Error::Precondition("disconnected input".into()));
    }
    let mut best = 0.0f64;
    let mut witness = None;
    for _ in 0..quadruples {
        let q = [rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m), rng.gen_range(0..m)];
        let v = four_point(&local, q);
        if v > best || witness.is_none() {
            best = best.max(v);
            witness = Some(q.map(|i| pts[i]));
        }
    }
    Ok(DeltaEstimate { delta: best, points: m, quadruples, witness })
}

/// Four-point estimate for an unweighted graph.
pub fn delta_estimate<R: Rng>(g: &Graph, points: usize, quadruples: usize, rng: &mut R) -> Result<DeltaEstimate> {
    delta_from_oracle(g.len(), |p| g.bfs(p), points, quadruples, rng)
}

/// The finite quasi-tree assembled from a family.
pub struct QuasiTree {
    pub graph: WeightedGraph,
    /// Vertex blocks: `blocks[a]` maps complement sphere keys of `Y(A)` to vertices.
    pub blocks: Vec<HashMap<SphereKey, usize>>,
    /// Second coordinate of each vertex.
    pub owner: Vec<usize>,
    /// Pairs joined by cross edges.
    pub joined: Vec<(usize, usize)>,
    pub k: usize,
}

/// Nearest-point projection report of a quasi-tree.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NearestPointCheck {
    /// Largest `Y(A)`-distance from a nearest point of `Y(B)` to `π_A(B)`.
    pub worst: usize,
    pub pairs: usize,
}

/// Union of the `Y(A)` (realised on the projection points with their exact
/// complement metric) joined by unit cross edges from `π_A(B)` to `π_B(A)`
/// whenever every third-party value `d_C(A,B)` is at most `K`.
pub fn build_quasi_tree(f: &ProjectionFamily, k: usize) -> Result<QuasiTree> {
    let n = f.len();
    let triples: Vec<(usize, usize, usize)> =
        (0..n).flat_map(|a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c)))).filter(|&(a, b, c)| a != b && b != c && a != c).collect();
    if !verify_axiom1(f, k, &triples)?.violations.is_empty() {
        return Err(Error::Precondition(format!("axiom (1) fails at K = {}", k)));
    }
    let mut graph = WeightedGraph::default();
    let mut blocks: Vec<HashMap<SphereKey, usize>> = vec![HashMap::new(); n];
    let mut owner = Vec::new();
    let mut spheres_of: Vec<Vec<Sphere>> = vec![Vec::new(); n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            for s in f.pi(a, b)?.spheres {
                if !blocks[a].contains_key(&s.key()) {
                    let v = graph.add_vertex();
                    owner.push(a);
                    blocks[a].insert(s.key(), v);
                    spheres_of[a].push(s);
                }
            }
        }
        // Y(A) is realised isometrically as a complete graph with metric weights
        let s = &spheres_of[a];
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                let d = complement_distance(&s[i], &s[j])?;
                graph.add_edge(blocks[a][&s[i].key()], blocks[a][&s[j].key()], d.max(1) as u32);
            }
        }
    }
    let mut joined = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut ok = true;
            for c in 0..n {
                if c != a && c != b && f.d(c, a, b)? > k {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            for x in f.pi(a, b)?.keys() {
                for y in f.pi(b, a)?.keys() {
                    graph.add_edge(blocks[a][&x], blocks[b][&y], 1);
                }
            }
            joined.push((a, b));
        }
    }
    Ok(QuasiTree { graph, blocks, owner, joined, k })
}

impl QuasiTree {
    /// For every `A ≠ B`, the points of `Y(A)` nearest to some vertex of
    /// `Y(B)` lie within `worst` of `π_A(B)` in the metric of `Y(A)`.
    pub fn nearest_point_check(&self, f: &ProjectionFamily) -> Result<NearestPointCheck> {
        let n = f.len();
        let dist: Vec<Vec<usize>> = par_map_range(self.graph.len(), |v| self.graph.dijkstra(v));
        let mut worst = 0;
        let mut pairs = 0;
        for a in 0..n {
            let ya: Vec<usize> = self.blocks[a].values().copied().collect();
            for b in 0..n {
                if a == b {
                    continue;
                }
                let pi: Vec<usize> = f.pi(a, b)?.keys().iter().map(|k| self.blocks[a][k]).collect();
                for &y in self.blocks[b].values() {
                    let m = ya.iter().map(|&x| dist[y][x]).min().unwrap_or(usize::MAX);
                    if m == usize::MAX {
                        continue;
                    }
                    pairs += 1;
                    for &x in ya.iter().filter(|&&x| dist[y][x] == m) {
                        let gap = pi.iter().map(|&p| dist[x][p]).min().unwrap();
                        worst = worst.max(gap);
                    }
                }
            }
        }
        Ok(NearestPointCheck { worst, pairs })
    }

    pub fn delta<R: Rng>(&self, points: usize, quadruples: usize, rng: &mut R) -> Result<DeltaEstimate> {
        delta_from_oracle(self.graph.len(), |p| self.graph.dijkstra(p), points, quadruples, rng)
    }
}

/// Edge types of the pair graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairEdge {
    /// `(S1, S2)` joined to `(S2, S1)`.
    Swap,
    /// `(S, T)` joined to `(S, T′)` with `T, T′` adjacent in `Y(S)`.
    Fiber,
}

/// A ball in the graph of ordered pairs of disjoint non-separating spheres.
pub struct PairGraph {
    pub radius: usize,
    /// Sphere registry; vertices refer to it.
    pub spheres: Vec<NonSepSphere>,
    pub sphere_index: HashMap<SphereKey, usize>,
    /// `(first, second)` sphere ids of each vertex.
    pub vertices: Vec<(usize, usize)>,
    pub vertex_index: HashMap<(usize, usize), usize>,
    pub graph: Graph,
    pub edges: Vec<(usize, usize, PairEdge)>,
    pub dist: Vec<usize>,
    charts: Mutex<HashMap<usize, ComplementChart>>,
    projections: Mutex<HashMap<(usize, usize), Sphere>>,
}

impl PairGraph {
    fn sphere_id(spheres: &mut Vec<NonSepSphere>, index: &mut HashMap<SphereKey, usize>, s: &NonSepSphere) -> usize {
        *index.entry(s.key()).or_insert_with(|| {
            spheres.push(s.clone());
            spheres.len() - 1
        })
    }

    /// `p_S(T)` for `T` disjoint from `S` (a single complement sphere).
    pub fn complement_image(&self, s: usize, t: usize) -> Result<Sphere> {
        if let Some(x) = self.projections.lock().unwrap().get(&(s, t)) {
            return Ok(x.clone());
        }
        let chart = {
            let mut charts = self.charts.lock().unwrap();
            charts.entry(s).or_insert_with(|| ComplementChart::new(self.spheres[s].clone())).clone()
        };
        let p = project(&Sphere::NonSep(self.spheres[t].clone()), &chart)?;
        if p.spheres.len() != 1 {
            return Err(Error::Precondition("second sphere must be disjoint from the first".into()));
        }
        let x = p.spheres[0].clone();
        self.projections.lock().unwrap().insert((s, t), x.clone());
        Ok(x)
    }

    /// Distance in `Y(S)` between two spheres disjoint from `S`.
    pub fn y_distance(&self, s: usize, t: usize, u: usize) -> Result<usize> {
        if t == u {
            return Ok(0);
        }
        Ok(complement_distance(&self.complement_image(s, t)?, &self.complement_image(s, u)?)?.max(1))
    }

    /// The free-factor view of a vertex: the factor `A1` of the first sphere
    /// and the complement sphere of the second inside `A1`.
    pub fn free_factor_view(&self, v: usize) -> Result<(ConjSubgroup, Sphere)> {
        let (s, t) = self.vertices[v];
        Ok((self.spheres[s].factor().clone(), self.complement_image(s, t)?))
    }

    /// Breadth-first ball of radius `radius` around `(seed.0, seed.1)`.
    ///
    /// Fibre neighbours of `(S, T)` are drawn from the template link of `S`.
    pub fn build(seed: (&NonSepSphere, &NonSepSphere), radius: usize, template: &LinkTemplate, max_vertices: usize) -> Result<PairGraph> {
        if !disjoint(&Sphere::NonSep(seed.0.clone()), &Sphere::NonSep(seed.1.clone()))?.is_yes() {
            return Err(Error::Precondition("seed spheres must be disjoint".into()));
        }
        let mut pg = PairGraph {
            radius,
            spheres: Vec::new(),
            sphere_index: HashMap::new(),
            vertices: Vec::new(),
            vertex_index: HashMap::new(),
            graph: Graph::default(),
            edges: Vec::new(),
            dist: Vec::new(),
            charts: Mutex::new(HashMap::new()),
            projections: Mutex::new(HashMap::new()),
        };
        let a = Self::sphere_id(&mut pg.spheres, &mut pg.sphere_index, seed.0);
        let b = Self::sphere_id(&mut pg.spheres, &mut pg.sphere_index, seed.1);
        pg.vertices.push((a, b));
        pg.vertex_index.insert((a, b), 0);
        pg.graph.add_vertex();
        pg.dist.push(0);
        let mut links: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut edge_set: HashSet<(usize, usize)> = HashSet::new();
        let mut frontier = vec![0usize];
        for level in 0..=radius {
            // fibre links of the first spheres on this level
            let firsts: Vec<usize> = {
                let mut f: Vec<usize> = frontier.iter().map(|&v| pg.vertices[v].0).filter(|s| !links.contains_key(s)).collect();
                f.sort_unstable();
                f.dedup();
                f
            };
            let found: Vec<Vec<NonSepSphere>> = par_map(&firsts, |&s| {
                template.neighbours(&Sphere::NonSep(pg.spheres[s].clone())).into_iter().filter_map(|t| t.as_nonsep().cloned()).collect()
            });
            for (s, nb) in firsts.into_iter().zip(found) {
                let ids = nb.iter().map(|t| Self::sphere_id(&mut pg.spheres, &mut pg.sphere_index, t)).collect();
                links.insert(s, ids);
            }
            // candidate neighbours with their edge types
            let cand: Vec<Result<Vec<((usize, usize), PairEdge)>>> = par_map(&frontier, |&v| {
                let (s, t) = pg.vertices[v];
                let mut out = vec![((t, s), PairEdge::Swap)];
                for &u in &links[&s] {
                    if u != t && pg.y_distance(s, t, u)? <= 1 {
                        out.push(((s, u), PairEdge::Fiber));
                    }
                }
                Ok(out)
            });
            let mut next = Vec::new();
            for (&v, c) in frontier.iter().zip(cand) {
                for (pair, kind) in c? {
                    let w = match pg.vertex_index.get(&pair) {
                        Some(&w) => w,
                        None if level < radius => {
                            if pg.vertices.len() >= max_vertices {
                                return Err(Error::Unavailable(format!("pair graph exceeds {} vertices", max_vertices)));
                            }
                            let w = pg.vertices.len();
                            pg.vertices.push(pair);
                            pg.vertex_index.insert(pair, w);
                            pg.graph.add_vertex();
                            pg.dist.push(level + 1);
                            next.push(w);
                            w
                        }
                        None => continue,
                    };
                    let e = (v.min(w), v.max(w));
                    if v != w && edge_set.insert(e) {
                        pg.graph.add_edge(v, w);
                        pg.edges.push((e.0, e.1, kind));
                    }
                }
            }
            frontier = next;
        }
        pg.dist = pg.graph.bfs(0);
        Ok(pg)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `Π1` of a vertex.
    pub fn first(&self, v: usize) -> &NonSepSphere {
        &self.spheres[self.vertices[v].0]
    }

    /// The downward-closed sub-ball of the vertices within `r` of the seed.
    pub fn truncate(&self, r: usize) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.dist[v] <= r).collect()
    }
}

/// `Π1` on the edges of a pair graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzTally {
    pub edges: usize,
    pub swap_edges: usize,
    /// Edges whose first spheres are neither equal nor disjoint.
    pub violations: Vec<(usize, usize)>,
}

/// `Π1` moves every edge by at most one in the graph of non-separating spheres.
pub fn pi1_lipschitz(pg: &PairGraph) -> Result<LipschitzTally> {
    let res: Vec<Result<Option<(usize, usize)>>> = par_map(&pg.edges, |&(u, v, _)| {
        let (a, b) = (pg.vertices[u].0, pg.vertices[v].0);
        if a == b {
            return Ok(None);
        }
        let d = disjoint(&Sphere::NonSep(pg.spheres[a].clone()), &Sphere::NonSep(pg.spheres[b].clone()))?;
        Ok((!d.is_yes()).then_some((u, v)))
    });
    let violations = res.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    let swap_edges = pg.edges.iter().filter(|e| e.2 == PairEdge::Swap).count();
    Ok(LipschitzTally { edges: pg.edges.len(), swap_edges, violations })
}

/// Length of the edges joining a cone vertex to its fibre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeLength {
    /// Unit cone edges: a fibre has diameter two.
    Unit,
    /// Cone edges of length one half: a fibre has diameter one.
    Half,
}

/// The pair graph with one cone vertex per first-sphere fibre.
pub struct ElectrifiedGraph {
    /// Unit-length graph with the cone vertices appended.
    pub graph: Graph,
    /// Number of pair vertices; cone vertices follow.
    pub base_len: usize,
    /// Sphere id of each cone vertex.
    pub cone_of: Vec<usize>,
    pub cone_index: HashMap<usize, usize>,
}

/// Cone off every fibre `H(S)` of a pair graph ball.
pub fn electrify(pg: &PairGraph) -> ElectrifiedGraph {
    let mut graph = pg.graph.clone();
    let base_len = graph.len();
    let mut cone_of = Vec::new();
    let mut cone_index = HashMap::new();
    for v in 0..base_len {
        let s = pg.vertices[v].0;
        let c = *cone_index.entry(s).or_insert_with(|| {
            cone_of.push(s);
            graph.add_vertex()
        });
        graph.add_edge(v, c);
    }
    ElectrifiedGraph { graph, base_len, cone_of, cone_index }
}

impl ElectrifiedGraph {
    /// Twice the distances from `u` under the given cone length.
    pub fn distances_doubled(&self, u: usize, cone: ConeLength) -> Vec<usize> {
        match cone {
            ConeLength::Unit => self.graph.bfs(u).into_iter().map(|d| if d == usize::MAX { d } else { 2 * d }).collect(),
            ConeLength::Half => {
                // 1-2 weights: a bucket queue keeps this linear
                let n = self.graph.len();
                let mut d = vec![usize::MAX; n];
                let mut buckets: Vec<Vec<usize>> = vec![vec![u]];
                d[u] = 0;
                let mut level = 0;
                while level < buckets.len() {
                    let mut i = 0;
                    while i < buckets[level].len() {
                        let v = buckets[level][i];
                        i += 1;
                        if d[v] != level {
                            continue;
                        }
                        for &w in &self.graph.adj[v] {
                            let len = if v >= self.base_len || w >= self.base_len { 1 } else { 2 };
                            let nd = level + len;
                            if nd < d[w] {
                                d[w] = nd;
                                if buckets.len() <= nd {
                                    buckets.resize(nd + 1, Vec::new());
                                }
                                buckets[nd].push(w);
                            }
                        }
                    }
                    level += 1;
                }
                d
            }
        }
    }
}

/// One sampled pair of the distortion comparison.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionSample {
    pub pair: (usize, usize),
    /// Electrified distance with unit cone edges.
    pub d_eg_unit: usize,
    /// Electrified distance with half-length cone edges.
    pub d_eg_half: f64,
    pub d_ns: usize,
}

/// Electrified distances against distances of the first spheres.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistortionReport {
    pub samples: Vec<DistortionSample>,
    /// Samples outside `d ≤ factor · d′ + additive` in either direction, under `cone`.
    pub violations: Vec<DistortionSample>,
    /// The same count under the other cone length.
    pub other_violations: usize,
    pub cone: ConeLength,
    pub factor: usize,
    pub additive: usize,
    /// Pairs skipped because a first sphere lies outside the reference ball.
    pub skipped: usize,
}

fn distorted(d_eg: f64, d_ns: usize, factor: usize, additive: usize) -> bool {
    let (f, a, n) = (factor as f64, additive as f64, d_ns as f64);
    d_eg > f * n + a || n > f * d_eg + a
}

/// Compare `d_EG(u, v)` with `d_NS(Π1 u, Π1 v)` measured in `ns_ball`.
#[allow(clippy::too_many_arguments)]
pub fn distortion_check<R: Rng>(
    pg: &PairGraph,
    eg: &ElectrifiedGraph,
    ns_ball: &Ball,
    samples: usize,
    factor: usize,
    additive: usize,
    cone: ConeLength,
    rng: &mut R,
) -> Result<DistortionReport> {
    let pairs: Vec<(usize, usize)> = (0..samples).map(|_| (rng.gen_range(0..pg.len()), rng.gen_range(0..pg.len()))).collect();
    let rows: Vec<Result<Option<DistortionSample>>> = par_map(&pairs, |&(u, v)| {
        let (Some(su), Some(sv)) =
            (ns_ball.find(&Sphere::NonSep(pg.first(u).clone())), ns_ball.find(&Sphere::NonSep(pg.first(v).clone())))
        else {
            return Ok(None);
        };
        let d_ns = ns_ball.bfs(su)[sv];
        let unit = eg.distances_doubled(u, ConeLength::Unit)[v];
        let half = eg.distances_doubled(u, ConeLength::Half)[v];
        if d_ns == usize::MAX || unit == usize::MAX {
            return Err(Error::Unavailable("pair disconnected in the ball".into()));
        }
        Ok(Some(DistortionSample { pair: (u, v), d_eg_unit: unit / 2, d_eg_half: half as f64 / 2.0, d_ns }))
    });
    let rows: Vec<Option<DistortionSample>> = rows.into_iter().collect::<Result<_>>()?;
    let skipped = rows.iter().filter(|r| r.is_none()).count();
    let samples: Vec<DistortionSample> = rows.into_iter().flatten().collect();
    let pick = |s: &DistortionSample, c: ConeLength| match c {
        ConeLength::Unit => s.d_eg_unit as f64,
        ConeLength::Half => s.d_eg_half,
    };
    let other = match cone {
        ConeLength::Unit => ConeLength::Half,
        ConeLength::Half => ConeLength::Unit,
    };
    let violations = samples.iter().filter(|s| distorted(pick(s, cone), s.d_ns, factor, additive)).cloned().collect();
    let other_violations = samples.iter().filter(|s| distorted(pick(s, other), s.d_ns, factor, additive)).count();
    Ok(DistortionReport { samples, violations, other_violations, cone, factor, additive, skipped })
}

/// Intersection of two fibres, viewed as the common second spheres.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiberIntersection {
    pub spheres: (usize, usize),
    pub size: usize,
    /// Diameter of the intersection in `Y(S)` and in `Y(S′)`.
    pub diameters: (usize, usize),
}

/// `H(S) ∩ H(S′)` in the ball, empty unless `S` and `S′` are disjoint.
pub fn fiber_intersection_check(pg: &PairGraph, s: usize, s2: usize) -> Result<FiberIntersection> {
    if s == s2 {
        return Err(Error::EqualArguments);
    }
    let empty = FiberIntersection { spheres: (s, s2), size: 0, diameters: (0, 0) };
    if !disjoint(&Sphere::NonSep(pg.spheres[s].clone()), &Sphere::NonSep(pg.spheres[s2].clone()))?.is_yes() {
        return Ok(empty);
    }
    let seconds = |a: usize| -> HashSet<usize> { pg.vertices.iter().filter(|v| v.0 == a).map(|v| v.1).collect() };
    let (x, y) = (seconds(s), seconds(s2));
    let mut common: Vec<usize> = x.intersection(&y).copied().collect();
    common.sort_unstable();
    let diam = |a: usize| -> Result<usize> {
        let mut best = 0;
        for i in 0..common.len() {
            for j in i + 1..common.len() {
                best = best.max(pg.y_distance(a, common[i], common[j])?);
            }
        }
        Ok(best)
    };
    Ok(FiberIntersection { spheres: (s, s2), size: common.len(), diameters: (diam(s)?, diam(s2)?) })
}

/// All fibre intersections among the first spheres of vertices within `r` of the seed.
pub fn fiber_intersections(pg: &PairGraph, r: usize) -> Result<Vec<FiberIntersection>> {
    let mut firsts: Vec<usize> = pg.truncate(r).into_iter().map(|v| pg.vertices[v].0).collect();
    firsts.sort_unstable();
    firsts.dedup();
    let pairs: Vec<(usize, usize)> =
        (0..firsts.len()).flat_map(|i| (i + 1..firsts.len()).map(move |j| (i, j))).map(|(i, j)| (firsts[i], firsts[j])).collect();
    let rows = par_map(&pairs, |&(a, b)| fiber_intersection_check(pg, a, b));
    Ok(rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter().filter(|f| f.size > 0).collect())
}

/// Bounded penetration on pairs of electrified geodesics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PenetrationReport {
    pub pairs: usize,
    /// Deep fibre entries examined.
    pub deep_entries: usize,
    /// `(u, v, cone sphere)` where the second path misses the cone or enters far away.
    pub violations: Vec<(usize, usize, usize)>,
    pub threshold: usize,
}

/// Entry and exit pair vertices around each cone vertex of a path.
fn cone_visits(eg: &ElectrifiedGraph, path: &[usize]) -> Vec<(usize, usize, usize)> {
    (1..path.len().saturating_sub(1))
        .filter(|&k| path[k] >= eg.base_len)
        .map(|k| (eg.cone_of[path[k] - eg.base_len], path[k - 1], path[k + 1]))
        .collect()
}

/// Two random geodesics of `EG` with shared endpoints: if one penetrates a
/// fibre with entry-to-exit distance at least `p`, the other passes the same
/// cone vertex with entry and exit within `p` of the first.
pub fn bounded_penetration_check<R: Rng>(pg: &PairGraph, eg: &ElectrifiedGraph, samples: usize, p: usize, rng: &mut R) -> Result<PenetrationReport> {
    let mut deep_entries = 0;
    let mut violations = Vec::new();
    for _ in 0..samples {
        let (u, v) = (rng.gen_range(0..pg.len()), rng.gen_range(0..pg.len()));
        let (Some(g1), Some(g2)) = (eg.graph.random_geodesic(u, v, rng), eg.graph.random_geodesic(u, v, rng)) else { continue };
        let v2 = cone_visits(eg, &g2);
        for (s, x, y) in cone_visits(eg, &g1) {
            let second = |w: usize| pg.vertices[w].1;
            if pg.y_distance(s, second(x), second(y))? < p {
                continue;
            }
            deep_entries += 1;
            let ok = v2.iter().any(|&(s2, x2, y2)| {
                s2 == s
                    && pg.y_distance(s, second(x), second(x2)).map(|d| d <= p).unwrap_or(false)
                    && pg.y_distance(s, second(y), second(y2)).map(|d| d <= p).unwrap_or(false)
            });
            if !ok {
                violations.push((u, v, s));
            }
        }
    }
    Ok(PenetrationReport { pairs: samples, deep_entries, violations, threshold: p })
}

/// Restrict a pair graph to the vertices within `r` of the seed.
pub fn pair_subgraph(pg: &PairGraph, r: usize) -> Graph {
    let keep = pg.truncate(r);
    let pos: HashMap<usize, usize> = keep.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut g = Graph::with_vertices(keep.len());
    for &(a, b, _) in &pg.edges {
        if let (Some(&x), Some(&y)) = (pos.get(&a), pos.get(&b)) {
            g.add_edge(x, y);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splittings::{BallBounds, GraphKind};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn family() -> ProjectionFamily {
        let tpl = LinkTemplate::new(3, GraphKind::Ns, BallBounds::new(2), None).unwrap();
        let ball = crate::splittings::build_local_ball(&Sphere::NonSep(NonSepSphere::standard(3, 1)), 2, &tpl, 10_000).unwrap();
        ProjectionFamily::from_ball(&ball).unwrap()
    }

    #[test]
    fn rigged_triple_is_reported() {
        let f = SyntheticFamily::rigged(5, 0, 1, 2, 10);
        let triples = vec![(0, 1, 2), (1, 2, 3), (2, 3, 4)];
        let r = verify_axiom1(&f, 3, &triples).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].triple, (0, 1, 2));
        assert!(verify_axiom1(&f, usize::MAX, &triples).unwrap().violations.is_empty());
    }

    #[test]
    fn axiom2_rejects_equal_pairs() {
        let f = SyntheticFamily::new(4);
        assert!(verify_axiom2(&f, 1, &[(1, 1)]).is_err());
        assert_eq!(verify_axiom2(&f, 1, &[(0, 1)]).unwrap()[0].count(), 0);
    }

    #[test]
    fn real_family_triangle_inequality_and_symmetry() {
        let f = family();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = sample_triples(&mut rng, f.len(), 1)[0];
            let dd = rng.gen_range(0..f.len());
            let (a, b, c) = t;
            assert_eq!(f.d(a, b, c).unwrap(), f.d(a, c, b).unwrap());
            if dd != a {
                let diam = f.d(a, dd, dd).unwrap();
                assert!(f.d(a, b, c).unwrap() <= f.d(a, b, dd).unwrap() + f.d(a, dd, c).unwrap() + diam);
            }
        }
    }

    #[test]
    fn disjoint_members_project_close() {
        let f = family();
        // σ1 and σ2 are disjoint, so each projects to a single sphere near the other's neighbours
        let a = f.index[&NonSepSphere::standard(3, 1).key()];
        let b = f.index[&NonSepSphere::standard(3, 2).key()];
        let counts = verify_axiom2(&f, 4, &[(a, b)]).unwrap();
        assert_eq!(counts[0].count(), 0);
    }

    #[test]
    fn delta_controls() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(delta_estimate(&Graph::path(30), 30, 5000, &mut rng).unwrap().delta, 0.0);
        let d8 = delta_estimate(&Graph::cycle(16), 16, 20000, &mut rng).unwrap().delta;
        let d16 = delta_estimate(&Graph::cycle(32), 32, 20000, &mut rng).unwrap().delta;
        // the four-point defect of a cycle of length 4r is r
        assert_eq!(d8, 4.0);
        assert_eq!(d16, 8.0);
        let mut g = Graph::path(4);
        g.add_vertex();
        assert!(delta_estimate(&g, 5, 10, &mut rng).is_err());
    }

    #[test]
    fn quasi_tree_small_family() {
        let f = ProjectionFamily::new(vec![NonSepSphere::standard(3, 1), NonSepSphere::standard(3, 2)]).unwrap();
        let qt = build_quasi_tree(&f, 4).unwrap();
        assert_eq!(qt.joined, vec![(0, 1)]);
        assert_eq!(qt.nearest_point_check(&f).unwrap().worst, 0);
        let one = ProjectionFamily::new(vec![NonSepSphere::standard(3, 1)]).unwrap();
        assert_eq!(build_quasi_tree(&one, 4).unwrap().graph.len(), 0);
    }

    fn pair_graph(r: usize) -> PairGraph {
        let tpl = LinkTemplate::new(3, GraphKind::Ns, BallBounds::new(2), None).unwrap();
        PairGraph::build((&NonSepSphere::standard(3, 1), &NonSepSphere::standard(3, 2)), r, &tpl, 100_000).unwrap()
    }

    #[test]
    fn pair_graph_edges() {
        let pg = pair_graph(2);
        let s1 = pg.sphere_index[&NonSepSphere::standard(3, 1).key()];
        let s2 = pg.sphere_index[&NonSepSphere::standard(3, 2).key()];
        let s3 = pg.sphere_index[&NonSepSphere::standard(3, 3).key()];
        let a = pg.vertex_index[&(s1, s2)];
        let b = pg.vertex_index[&(s2, s1)];
        assert!(pg.graph.adj[a].contains(&b));
        // σ2 and σ3 are Farey neighbours in the complement of σ1
        let c = pg.vertex_index[&(s1, s3)];
        assert!(pg.graph.adj[a].contains(&c));
        assert!(pi1_lipschitz(&pg).unwrap().violations.is_empty());
        let (a1, second) = pg.free_factor_view(a).unwrap();
        assert_eq!(a1.rank(), 2);
        assert_eq!(second.rank(), 2);
    }

    #[test]
    fn electrified_fibres_have_diameter_two() {
        let pg = pair_graph(1);
        let eg = electrify(&pg);
        let s1 = pg.vertices[0].0;
        let fibre: Vec<usize> = (0..pg.len()).filter(|&v| pg.vertices[v].0 == s1).collect();
        for &u in &fibre {
            let d = eg.distances_doubled(u, ConeLength::Unit);
            assert!(fibre.iter().all(|&v| d[v] <= 4));
            let h = eg.distances_doubled(u, ConeLength::Half);
            assert!(fibre.iter().all(|&v| h[v] <= 2));
        }
        let cone = eg.cone_index[&s1];
        assert_eq!(eg.graph.adj[cone].len(), fibre.len());
    }

    #[test]
    fn fibre_intersection_of_crossing_spheres_is_empty() {
        let pg = pair_graph(2);
        let firsts: Vec<usize> = pg.vertices.iter().map(|v| v.0).collect();
        let s1 = pg.vertices[0].0;
        for &t in &firsts {
            if t == s1 {
                continue;
            }
            let r = fiber_intersection_check(&pg, s1, t).unwrap();
            let dj = disjoint(&Sphere::NonSep(pg.spheres[s1].clone()), &Sphere::NonSep(pg.spheres[t].clone())).unwrap().is_yes();
            if !dj {
                assert_eq!(r.size, 0);
            }
        }
    }

    #[test]
    fn penetration_vacuous_at_large_threshold() {
        let pg = pair_graph(2);
        let eg = electrify(&pg);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = bounded_penetration_check(&pg, &eg, 50, 1000, &mut rng).unwrap();
        assert_eq!(r.deep_entries, 0);
        assert!(r.violations.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn four_point_defect_bounded_by_cycle(n in 3usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let d = delta_estimate(&Graph::cycle(n), n, 2000, &mut rng).unwrap().delta;
            prop_assert!(d <= (n / 4) as f64 + 0.5);
        }

        #[test]
        fn trees_are_zero_hyperbolic(parents in proptest::collection::vec(0usize..1000, 1..40)) {
            let n = parents.len() + 1;
            let edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (i + 1, p % (i + 1))).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            prop_assert_eq!(delta_estimate(&Graph::from_edges(n, &edges), n, 500, &mut rng).unwrap().delta, 0.0);
        }
    }
}
