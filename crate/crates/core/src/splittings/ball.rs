//! Truncated sphere graphs and balls.
//!
//! Spheres are enumerated by breadth-first search over Whitehead images
//! starting from the standard spheres, keeping those whose size (edge count
//! of the factor core, or of the barbell graph for separating spheres) stays
//! within the bound. For non-separating spheres this reaches every sphere
//! within the bound, because Whitehead descent on the factor never has to
//! increase the size. Disjointness is then decided for all pairs, with cheap
//! homology filters in front of the oracle, and balls are breadth-first
//! neighbourhoods in the resulting graph.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::chart::whitehead_table;
use super::oracle::{disjoint, Answer, PairKind};
use super::sphere::{NonSepSphere, SepSphere, Sphere, SphereKey};
use crate::error::{Error, Result};
use crate::par::{par_map, par_map_range};
use crate::whitehead::gcd;

/// Which sphere graph a ball lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    /// All spheres, all disjoint pairs.
    Sg,
    /// Non-separating spheres, all disjoint pairs (bounding pairs included).
    Ns,
    /// Non-separating spheres, pairs with connected complement only.
    Nsg,
}

impl GraphKind {
    fn allows(self, k: PairKind) -> bool {
        match self {
            GraphKind::Sg => true,
            GraphKind::Ns => matches!(k, PairKind::Nsg | PairKind::BoundingPair),
            GraphKind::Nsg => k == PairKind::Nsg,
        }
    }
}

/// Truncation bounds of an enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallBounds {
    /// Maximal size of non-separating spheres.
    pub max_size: usize,
    /// Maximal size of separating spheres (0 excludes them).
    pub max_sep_size: usize,
    /// Largest tolerated fraction of unknown oracle answers.
    pub unknown_fraction: f64,
}

impl BallBounds {
    pub fn new(max_size: usize) -> Self {
        BallBounds { max_size, max_sep_size: 0, unknown_fraction: 0.01 }
    }
    pub fn with_separating(mut self, max_sep_size: usize) -> Self {
        self.max_sep_size = max_sep_size;
        self
    }
}

/// Breadth-first enumeration of the Whitehead orbit of `start` within `max` size.
pub fn enumerate_orbit(start: Vec<Sphere>, max: usize) -> Vec<Sphere> {
    let Some(first) = start.first() else { return Vec::new() };
    let table = whitehead_table(first.rank());
    let mut seen: HashSet<SphereKey> = HashSet::new();
    let mut all = Vec::new();
    let mut frontier = Vec::new();
    for s in start {
        if s.size() <= max && seen.insert(s.key()) {
            all.push(s.clone());
            frontier.push(s);
        }
    }
    while !frontier.is_empty() {
        let images: Vec<Vec<Sphere>> = par_map(&frontier, |s| {
            (0..table.autos.len() as u16)
                .map(|k| s.apply_whitehead(k))
                .filter(|t| t.size() <= max)
                .collect()
        });
        let mut next = Vec::new();
        for t in images.into_iter().flatten() {
            if seen.insert(t.key()) {
                all.push(t.clone());
                next.push(t);
            }
        }
        frontier = next;
    }
    all
}

/// All enumerated spheres of a rank with their pairwise disjointness.
#[derive(Clone, Debug)]
pub struct Universe {
    pub rank: usize,
    pub bounds: BallBounds,
    pub spheres: Vec<Sphere>,
    pub index: HashMap<SphereKey, usize>,
    /// Symmetric adjacency with pair kinds.
    pub edges: Vec<Vec<(u32, PairKind)>>,
    pub tested_pairs: usize,
    pub unknown_pairs: usize,
}

fn minors_gcd(a: &[i64], b: &[i64]) -> i64 {
    let mut g = 0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            g = gcd(g, (a[i] * b[j] - a[j] * b[i]).abs());
        }
    }
    g
}

fn form_kills(f: &[i64], vecs: &[Vec<i64>]) -> bool {
    vecs.iter().all(|v| v.iter().zip(f).map(|(a, b)| a * b).sum::<i64>() == 0)
}

impl Universe {
    /// Enumerate spheres within the bounds and decide all pairs.
    pub fn build(rank: usize, bounds: BallBounds) -> Result<Universe> {
        let mut spheres = enumerate_orbit(vec![Sphere::NonSep(NonSepSphere::standard(rank, 1))], bounds.max_size);
        if bounds.max_sep_size > 0 {
            let starts: Vec<Sphere> = (1..=rank / 2).map(|k| Sphere::Sep(SepSphere::standard(rank, k))).collect();
            spheres.extend(enumerate_orbit(starts, bounds.max_sep_size));
        }
        Self::from_spheres(rank, bounds, spheres)
    }

    /// Decide all pairs among given spheres.
    pub fn from_spheres(rank: usize, bounds: BallBounds, spheres: Vec<Sphere>) -> Result<Universe> {
        let n = spheres.len();
        let forms: Vec<Option<Vec<i64>>> = spheres.iter().map(|s| s.as_nonsep().map(|x| x.homology_form())).collect();
        let side_ab: Vec<Option<(Vec<Vec<i64>>, Vec<Vec<i64>>)>> = spheres
            .iter()
            .map(|s| {
                s.as_sep().map(|x| {
                    let ab = |g: &crate::stallings::Subgroup| g.generators().iter().map(|w| w.abelianization(rank)).collect();
                    (ab(x.p()), ab(x.q()))
                })
            })
            .collect();
        let candidate = |i: usize, j: usize| -> bool {
            match (&forms[i], &forms[j]) {
                (Some(a), Some(b)) => a == b || minors_gcd(a, b) == 1,
                (Some(f), None) | (None, Some(f)) => {
                    let sep = if forms[i].is_none() { i } else { j };
                    let (p, q) = side_ab[sep].as_ref().unwrap();
                    form_kills(f, p) || form_kills(f, q)
                }
                (None, None) => true,
            }
        };
        let rows: Vec<(Vec<(u32, PairKind)>, usize, usize)> = par_map_range(n, |i| {
            let mut out = Vec::new();
            let (mut tested, mut unknown) = (0, 0);
            for j in i + 1..n {
                if !candidate(i, j) {
                    continue;
                }
                tested += 1;
                // use the sphere with the shorter chart as the frame
                let (a, b) = if spheres[j].chart().len() < spheres[i].chart().len() { (j, i) } else { (i, j) };
                match disjoint(&spheres[a], &spheres[b]) {
                    Ok(d) => match d.answer {
                        Answer::Yes => out.push((j as u32, d.kind.expect("disjoint pairs carry a kind"))),
                        Answer::Unknown => unknown += 1,
                        Answer::No => {}
                    },
                    Err(_) => unknown += 1,
                }
            }
            (out, tested, unknown)
        });
        let mut edges: Vec<Vec<(u32, PairKind)>> = vec![Vec::new(); n];
        let (mut tested, mut unknown) = (0, 0);
        for (i, (row, t, u)) in rows.into_iter().enumerate() {
            tested += t;
            unknown += u;
            for (j, k) in row {
                edges[i].push((j, k));
                edges[j as usize].push((i as u32, k));
            }
        }
        if tested > 0 && unknown as f64 > bounds.unknown_fraction * tested as f64 {
            return Err(Error::Saturation { unknown, total: tested });
        }
        let index = spheres.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
        Ok(Universe { rank, bounds, spheres, index, edges, tested_pairs: tested, unknown_pairs: unknown })
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn find(&self, s: &Sphere) -> Option<usize> {
        self.index.get(&s.key()).copied()
    }

    /// Pair kind of `(i, j)` if disjoint.
    pub fn pair_kind(&self, i: usize, j: usize) -> Option<PairKind> {
        self.edges[i].iter().find(|(k, _)| *k as usize == j).map(|&(_, k)| k)
    }

    fn vertex_allowed(&self, kind: GraphKind, i: usize) -> bool {
        kind == GraphKind::Sg || !self.spheres[i].is_separating()
    }

    /// Ball of radius `r` around `center` in the graph of the given kind.
    pub fn ball(&self, center: usize, radius: usize, kind: GraphKind) -> Ball {
        let mut dist = vec![usize::MAX; self.len()];
        let mut order = vec![center];
        dist[center] = 0;
        let mut k = 0;
        while k < order.len() {
            let v = order[k];
            k += 1;
            if dist[v] == radius {
                continue;
            }
            for &(w, pk) in &self.edges[v] {
                let w = w as usize;
                if dist[w] == usize::MAX && kind.allows(pk) && self.vertex_allowed(kind, w) {
                    dist[w] = dist[v] + 1;
                    order.push(w);
                }
            }
        }
        let local: HashMap<usize, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let adj = order
            .iter()
            .map(|&v| {
                self.edges[v]
                    .iter()
                    .filter(|(_, pk)| kind.allows(*pk))
                    .filter_map(|(w, _)| local.get(&(*w as usize)).copied())
                    .collect()
            })
            .collect();
        Ball {
            kind,
            radius,
            spheres: order.iter().map(|&v| self.spheres[v].clone()).collect(),
            universe_ids: order.clone(),
            dist: order.iter().map(|&v| dist[v]).collect(),
            adj,
            index: order.iter().enumerate().map(|(i, &v)| (self.spheres[v].key(), i)).collect(),
        }
    }
}

/// A ball: vertex 0 is the center; `dist` is the distance from the center.
#[derive(Clone, Debug)]
pub struct Ball {
    pub kind: GraphKind,
    pub radius: usize,
    pub spheres: Vec<Sphere>,
    pub universe_ids: Vec<usize>,
    pub dist: Vec<usize>,
    pub adj: Vec<Vec<usize>>,
    pub index: HashMap<SphereKey, usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    pub fn find(&self, s: &Sphere) -> Option<usize> {
        self.index.get(&s.key()).copied()
    }

    /// Distances from `from` within the ball, skipping the vertices in `avoid`.
    pub fn bfs_avoiding(&self, from: usize, avoid: &[usize]) -> Vec<usize> {
        self.bfs_within(from, |w| !avoid.contains(&w))
    }

    /// Breadth-first distances through the vertices accepted by `allowed`.
    pub fn bfs_within(&self, from: usize, allowed: impl Fn(usize) -> bool) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        if !allowed(from) {
            return dist;
        }
        dist[from] = 0;
        let mut q = VecDeque::from([from]);
        while let Some(v) = q.pop_front() {
            for &w in &self.adj[v] {
                if dist[w] == usize::MAX && allowed(w) {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        dist
    }

    pub fn bfs(&self, from: usize) -> Vec<usize> {
        self.bfs_avoiding(from, &[])
    }

    /// A shortest path from `a` to `b` avoiding `avoid`, least indices first.
    pub fn shortest_path_avoiding(&self, a: usize, b: usize, avoid: &[usize]) -> Option<Vec<usize>> {
        self.shortest_path_within(a, b, |w| !avoid.contains(&w))
    }

    /// A shortest path through the vertices accepted by `allowed`.
    pub fn shortest_path_within(&self, a: usize, b: usize, allowed: impl Fn(usize) -> bool) -> Option<Vec<usize>> {
        let db = self.bfs_within(b, allowed);
        if db[a] == usize::MAX {
            return None;
        }
        let mut path = vec![a];
        let mut v = a;
        while v != b {
            v = *self.adj[v].iter().filter(|&&w| db[w] != usize::MAX && db[w] + 1 == db[v]).min().unwrap();
            path.push(v);
        }
        Some(path)
    }

    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        self.shortest_path_avoiding(a, b, &[])
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adj[a].contains(&b)
    }
}

/// Build a ball around `center` (which must lie within the bounds).
pub fn build_ball(center: &Sphere, radius: usize, kind: GraphKind, bounds: BallBounds) -> Result<Ball> {
    let mut b = bounds;
    if kind != GraphKind::Sg {
        b.max_sep_size = 0;
    }
    let u = Universe::build(center.rank(), b)?;
    let c = u.find(center).ok_or_else(|| Error::Precondition("center exceeds the size bound".into()))?;
    Ok(u.ball(c, radius, kind))
}

/// The bounded neighbourhoods of the standard spheres, used to grow balls
/// with genuine radius structure.
///
/// A size-bounded universe clusters around the standard rose, so its balls
/// have small diameter. A local ball instead gives every vertex `S` the
/// neighbours `C⁻¹(T)`, where `C` is the chart of `S` and `T` runs over the
/// template neighbours of the standard sphere `C(S)`. All edges are true
/// disjointness edges; each link is truncated in the frame of its vertex.
#[derive(Clone, Debug)]
pub struct LinkTemplate {
    pub kind: GraphKind,
    pub bounds: BallBounds,
    /// Standard sphere with its template neighbours, σ1 first.
    pub links: Vec<(Sphere, Vec<Sphere>)>,
}

impl LinkTemplate {
    /// Neighbours of each standard sphere within `bounds`, keeping at most
    /// `max_degree` of them (least size, then key).
    pub fn new(rank: usize, kind: GraphKind, bounds: BallBounds, max_degree: Option<usize>) -> Result<Self> {
        let mut b = bounds;
        if kind != GraphKind::Sg {
            b.max_sep_size = 0;
        }
        let u = Universe::build(rank, b)?;
        let mut centers = vec![Sphere::NonSep(NonSepSphere::standard(rank, 1))];
        if b.max_sep_size > 0 {
            centers.extend((1..=rank / 2).map(|k| Sphere::Sep(SepSphere::standard(rank, k))));
        }
        let mut links = Vec::new();
        for c in centers {
            let Some(ci) = u.find(&c) else { continue };
            let mut nb: Vec<Sphere> = u.edges[ci]
                .iter()
                .filter(|(w, pk)| kind.allows(*pk) && u.vertex_allowed(kind, *w as usize))
                .map(|(w, _)| u.spheres[*w as usize].clone())
                .collect();
            nb.sort_by_key(|s| (s.size(), s.key()));
            if let Some(m) = max_degree {
                nb.truncate(m);
            }
            links.push((c, nb));
        }
        Ok(LinkTemplate { kind, bounds: b, links })
    }

    fn link_of(&self, s: &Sphere) -> &[Sphere] {
        let want = match s {
            Sphere::NonSep(_) => None,
            Sphere::Sep(t) => Some(t.k()),
        };
        self.links
            .iter()
            .find(|(c, _)| c.as_sep().map(|t| t.k()) == want)
            .map(|(_, l)| l.as_slice())
            .unwrap_or(&[])
    }

    /// Template neighbours of `s` transported by its chart.
    pub fn neighbours(&self, s: &Sphere) -> Vec<Sphere> {
        let c = s.chart();
        let c_inv = c.inverse();
        self.link_of(s).iter().map(|t| t.transport(c, &c_inv)).collect()
    }
}

/// Ball of radius `radius` around `center` grown from a link template.
/// Edges join `u` and `v` when either is a template neighbour of the other.
pub fn build_local_ball(center: &Sphere, radius: usize, template: &LinkTemplate, max_vertices: usize) -> Result<Ball> {
    let kind = template.kind;
    if kind != GraphKind::Sg && center.is_separating() {
        return Err(Error::Precondition("center must be non-separating".into()));
    }
    let mut spheres = vec![center.clone()];
    let mut dist = vec![0usize];
    let mut index: HashMap<SphereKey, usize> = HashMap::from([(center.key(), 0)]);
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new()];
    let mut frontier = vec![0usize];
    let mut level = 0;
    while !frontier.is_empty() {
        let gen: Vec<Vec<Sphere>> = par_map(&frontier, |&v| template.neighbours(&spheres[v]));
        let mut next = Vec::new();
        for (&v, nb) in frontier.iter().zip(gen) {
            for t in nb {
                let k = t.key();
                let w = match index.get(&k) {
                    Some(&w) => w,
                    None if level < radius => {
                        if spheres.len() >= max_vertices {
                            return Err(Error::Unavailable(format!("ball exceeds {} vertices", max_vertices)));
                        }
                        let w = spheres.len();
                        index.insert(k, w);
                        spheres.push(t);
                        dist.push(level + 1);
                        adj.push(HashSet::new());
                        next.push(w);
                        w
                    }
                    None => continue,
                };
                if w != v {
                    adj[v].insert(w);
                    adj[w].insert(v);
                }
            }
        }
        frontier = next;
        level += 1;
    }
    let adj = adj
        .into_iter()
        .map(|a| {
            let mut v: Vec<usize> = a.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut ball = Ball { kind, radius, spheres, universe_ids: Vec::new(), dist, adj, index };
    // links are asymmetric, so a late vertex may reach back past its level
    ball.dist = ball.bfs(0);
    Ok(ball)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::farey::{adjacent, slope_of, Slope};

    fn slope(s: &Sphere) -> Slope {
        let h = s.as_nonsep().unwrap().factor().representative();
        slope_of(&h.generators()[0]).unwrap()
    }

    #[test]
    fn restricted_searches_respect_the_predicate() {
        let tpl = LinkTemplate::new(3, GraphKind::Sg, BallBounds::new(3).with_separating(4), None).unwrap();
        let ball = build_local_ball(&Sphere::NonSep(NonSepSphere::standard(3, 1)), 2, &tpl, 10_000).unwrap();
        assert_eq!(ball.bfs_within(0, |_| true), ball.bfs(0));
        let ns = |w: usize| !ball.spheres[w].is_separating();
        let d = ball.bfs_within(0, ns);
        for v in 0..ball.len() {
            assert!(d[v] >= ball.dist[v]);
            if d[v] != usize::MAX {
                let p = ball.shortest_path_within(0, v, ns).unwrap();
                assert_eq!(p.len(), d[v] + 1);
                assert!(p.iter().all(|&w| ns(w)));
            }
        }
        // the centre cannot be avoided from itself
        assert!(ball.shortest_path_within(0, 1, |w| w != 0).is_none());
    }

    #[test]
    fn rank2_orbit_is_slopes_of_bounded_weight() {
        let all = enumerate_orbit(vec![Sphere::NonSep(NonSepSphere::standard(2, 1))], 7);
        let mut got: Vec<Slope> = all.iter().map(slope).collect();
        got.sort_by_key(|s| (s.p, s.q));
        let mut want: Vec<Slope> = Slope::all_up_to_height(7).into_iter().filter(|s| s.p.abs() + s.q <= 7).collect();
        want.sort_by_key(|s| (s.p, s.q));
        assert_eq!(got, want);
    }

    #[test]
    fn rank2_edges_match_farey() {
        let u = Universe::build(2, BallBounds::new(8)).unwrap();
        for i in 0..u.len() {
            for j in 0..u.len() {
                if i == j {
                    continue;
                }
                let adj = adjacent(&slope(&u.spheres[i]), &slope(&u.spheres[j])).unwrap();
                assert_eq!(u.pair_kind(i, j).is_some(), adj, "{:?} {:?}", slope(&u.spheres[i]), slope(&u.spheres[j]));
            }
        }
    }

    #[test]
    fn ball_radius_zero_and_monotone() {
        let center = Sphere::NonSep(NonSepSphere::standard(2, 2));
        let b0 = build_ball(&center, 0, GraphKind::Nsg, BallBounds::new(6)).unwrap();
        assert_eq!(b0.len(), 1);
        let b1 = build_ball(&center, 1, GraphKind::Nsg, BallBounds::new(6)).unwrap();
        let b2 = build_ball(&center, 2, GraphKind::Nsg, BallBounds::new(6)).unwrap();
        assert!(b2.len() >= b1.len() && b1.len() >= 1);
        for s in &b1.spheres[1..] {
            assert!(adjacent(&slope(s), &slope(&center)).unwrap());
        }
    }

    #[test]
    fn local_ball_edges_are_disjoint_pairs() {
        let tpl = LinkTemplate::new(3, GraphKind::Nsg, BallBounds::new(3), None).unwrap();
        let c = Sphere::NonSep(NonSepSphere::standard(3, 1));
        let b = build_local_ball(&c, 2, &tpl, 10_000).unwrap();
        assert_eq!(b.dist[0], 0);
        assert!(b.dist.iter().all(|&d| d <= 2));
        for v in (0..b.len()).step_by(7) {
            for &w in &b.adj[v] {
                let d = disjoint(&b.spheres[v], &b.spheres[w]).unwrap();
                assert_eq!((d.answer, d.kind), (Answer::Yes, Some(PairKind::Nsg)));
            }
        }
    }

    #[test]
    fn local_ball_with_separating_spheres() {
        let tpl = LinkTemplate::new(3, GraphKind::Sg, BallBounds::new(3).with_separating(4), None).unwrap();
        assert_eq!(tpl.links.len(), 2);
        let c = Sphere::NonSep(NonSepSphere::standard(3, 1));
        let b = build_local_ball(&c, 2, &tpl, 20_000).unwrap();
        assert!(b.spheres.iter().any(|s| s.is_separating()));
        for v in (0..b.len()).step_by(11) {
            for &w in &b.adj[v] {
                assert_eq!(disjoint(&b.spheres[v], &b.spheres[w]).unwrap().answer, Answer::Yes);
            }
        }
    }
}
