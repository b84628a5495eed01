//! Folded Stallings graphs for finitely generated subgroups of a free group.
//!
//! A [`CoreGraph`] stores, for every vertex and every signed label, the
//! unique neighbour reached along that label (foldedness makes it unique).
//! Based graphs represent subgroups, unbased cores represent conjugacy
//! classes of subgroups and carry a canonical key that is a complete
//! isomorphism invariant of the labeled graph.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::word::{parse_letter, Automorphism, Letter, Word};

const NONE: u32 = u32::MAX;

/// Slot index of a signed label in a vertex row.
#[inline]
pub(crate) fn slot(l: Letter) -> usize {
    2 * (l.unsigned_abs() as usize - 1) + usize::from(l < 0)
}

/// Signed label of a slot index.
#[inline]
pub(crate) fn slot_letter(s: usize) -> Letter {
    let g = (s / 2 + 1) as Letter;
    if s % 2 == 0 {
        g
    } else {
        -g
    }
}

/// Online folding of a labeled graph with union-find.
///
/// Edges can be added in any order; after every insertion the graph is
/// folded, so the final result does not depend on the order of insertion.
pub struct Folder {
    rank: usize,
    width: usize,
    parent: Vec<u32>,
    tab: Vec<u32>,
    pending: Vec<(u32, u32)>,
}

impl Folder {
    pub fn new(rank: usize) -> Self {
        Folder { rank, width: 2 * rank, parent: Vec::new(), tab: Vec::new(), pending: Vec::new() }
    }

    pub fn with_vertices(rank: usize, nv: usize) -> Self {
        let mut f = Folder::new(rank);
        for _ in 0..nv {
            f.add_vertex();
        }
        f
    }

    pub fn add_vertex(&mut self) -> usize {
        let v = self.parent.len();
        self.parent.push(v as u32);
        self.tab.extend(std::iter::repeat_n(NONE, self.width));
        v
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            let p = self.parent[v as usize];
            self.parent[v as usize] = self.parent[p as usize];
            v = p;
        }
        v
    }

    /// Add the edge `u --l--> v` (a negative label adds `v --(-l)--> u`).
    pub fn add_edge(&mut self, u: usize, l: Letter, v: usize) {
        debug_assert!(l != 0 && l.unsigned_abs() as usize <= self.rank);
        let u = self.find(u as u32);
        let v = self.find(v as u32);
        let s = slot(l);
        let t = self.tab[u as usize * self.width + s];
        if t != NONE {
            self.pending.push((t, v));
        } else {
            self.tab[u as usize * self.width + s] = v;
            let w = self.tab[v as usize * self.width + (s ^ 1)];
            if w != NONE {
                self.pending.push((w, u));
            } else {
                self.tab[v as usize * self.width + (s ^ 1)] = u;
            }
        }
        self.drain();
    }

    /// Add a path spelling `w` from `u` to `v`, creating interior vertices.
    pub fn add_path(&mut self, u: usize, w: &Word, v: usize) {
        let lets = w.letters();
        if lets.is_empty() {
            self.identify(u, v);
            return;
        }
        let mut prev = u;
        for (k, &l) in lets.iter().enumerate() {
            let next = if k + 1 == lets.len() { v } else { self.add_vertex() };
            self.add_edge(prev, l, next);
            prev = next;
        }
    }

    /// Identify two vertices and fold.
    pub fn identify(&mut self, u: usize, v: usize) {
        self.pending.push((u as u32, v as u32));
        self.drain();
    }

    fn drain(&mut self) {
        while let Some((a, b)) = self.pending.pop() {
            let a = self.find(a);
            let b = self.find(b);
            if a == b {
                continue;
            }
            let (keep, gone) = if a < b { (a, b) } else { (b, a) };
            self.parent[gone as usize] = keep;
            for s in 0..self.width {
                let tb = self.tab[gone as usize * self.width + s];
                if tb == NONE {
                    continue;
                }
                let ta = self.tab[keep as usize * self.width + s];
                if ta == NONE {
                    self.tab[keep as usize * self.width + s] = tb;
                } else {
                    self.pending.push((ta, tb));
                }
            }
        }
    }

    /// Finish folding: compress, optionally trim to the core, renumber.
    ///
    /// With a basepoint it becomes vertex 0 and is never trimmed.
    pub fn finish(mut self, basepoint: Option<usize>, core: bool) -> CoreGraph {
        let n = self.parent.len();
        let w = self.width;
        let mut root_index = vec![NONE; n];
        let mut roots = Vec::new();
        let bp_root = basepoint.map(|b| self.find(b as u32));
        if let Some(b) = bp_root {
            root_index[b as usize] = 0;
            roots.push(b);
        }
        for v in 0..n as u32 {
            if self.find(v) == v && Some(v) != bp_root {
                root_index[v as usize] = roots.len() as u32;
                roots.push(v);
            }
        }
        let mut adj = vec![NONE; roots.len() * w];
        for (i, &r) in roots.iter().enumerate() {
            for s in 0..w {
                let t = self.tab[r as usize * w + s];
                if t != NONE {
                    let t = self.find(t);
                    adj[i * w + s] = root_index[t as usize];
                }
            }
        }
        let g = CoreGraph { rank: self.rank, nv: roots.len(), adj, basepoint: basepoint.map(|_| 0) };
        if core {
            g.trimmed()
        } else {
            g
        }
    }
}

/// A folded labeled graph, optionally based.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CoreGraph {
    rank: usize,
    nv: usize,
    adj: Vec<u32>,
    basepoint: Option<usize>,
}

impl fmt::Debug for CoreGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoreGraph(rank {}, V {}, E {}, edges [", self.rank, self.nv, self.num_edges())?;
        for (k, (u, x, v)) in self.edges().into_iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}-x{}->{}", u, x, v)?;
        }
        write!(f, "], base {:?})", self.basepoint)
    }
}

impl CoreGraph {
    /// The empty graph (trivial conjugacy class).
    pub fn empty(rank: usize) -> Self {
        CoreGraph { rank, nv: 0, adj: Vec::new(), basepoint: None }
    }

    /// Based graph of the subgroup generated by `gens` (folded, trimmed to the core).
    pub fn from_generators(rank: usize, gens: &[Word]) -> Self {
        let mut f = Folder::with_vertices(rank, 1);
        for g in gens {
            f.add_path(0, g, 0);
        }
        f.finish(Some(0), true)
    }

    /// Fold an explicit pre-graph given by labeled edges `(u, v, label)`.
    pub fn fold_pregraph(
        rank: usize,
        nv: usize,
        edges: &[(usize, usize, Letter)],
        basepoint: Option<usize>,
        core: bool,
    ) -> Self {
        let mut f = Folder::with_vertices(rank, nv.max(1));
        for &(u, v, l) in edges {
            f.add_edge(u, l, v);
        }
        f.finish(basepoint, core)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn num_vertices(&self) -> usize {
        self.nv
    }
    pub fn basepoint(&self) -> Option<usize> {
        self.basepoint
    }
    pub fn is_empty(&self) -> bool {
        self.nv == 0 || self.num_edges() == 0
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.rank
    }

    /// Neighbour of `v` along the signed label `l`.
    #[inline]
    pub fn target(&self, v: usize, l: Letter) -> Option<usize> {
        let t = self.adj[v * self.width() + slot(l)];
        (t != NONE).then_some(t as usize)
    }

    pub fn degree(&self, v: usize) -> usize {
        let w = self.width();
        self.adj[v * w..(v + 1) * w].iter().filter(|&&t| t != NONE).count()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().filter(|&&t| t != NONE).count() / 2
    }

    /// Positive-label edges `(tail, generator, head)` in slot order.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for v in 0..self.nv {
            for x in 1..=self.rank {
                if let Some(t) = self.target(v, x as Letter) {
                    out.push((v, x, t));
                }
            }
        }
        out
    }

    /// Number of edges carrying generator `x`.
    pub fn label_count(&self, x: usize) -> usize {
        (0..self.nv).filter(|&v| self.target(v, x as Letter).is_some()).count()
    }

    /// Rank of the fundamental group, `E − V + c` over components.
    pub fn subgroup_rank(&self) -> usize {
        if self.nv == 0 {
            return 0;
        }
        let comps = self.components().len();
        (self.num_edges() + comps).saturating_sub(self.nv)
    }

    /// Follow `w` from `start`; `None` if the path leaves the graph.
    pub fn read(&self, start: usize, w: &Word) -> Option<usize> {
        let mut v = start;
        for &l in w.letters() {
            v = self.target(v, l)?;
        }
        Some(v)
    }

    /// Whether `w` labels a closed path at the basepoint.
    pub fn contains(&self, w: &Word) -> bool {
        match self.basepoint {
            Some(b) => self.read(b, w) == Some(b),
            None => false,
        }
    }

    /// Trim degree ≤ 1 vertices (never the basepoint) and renumber.
    pub fn trimmed(&self) -> CoreGraph {
        let w = self.width();
        let mut adj = self.adj.clone();
        let mut deg: Vec<usize> = (0..self.nv).map(|v| self.degree(v)).collect();
        let mut alive = vec![true; self.nv];
        let mut stack: Vec<usize> = (0..self.nv).filter(|&v| deg[v] <= 1).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] || Some(v) == self.basepoint || deg[v] > 1 {
                continue;
            }
            alive[v] = false;
            for s in 0..w {
                let t = adj[v * w + s];
                if t != NONE {
                    let t = t as usize;
                    adj[v * w + s] = NONE;
                    if t != v {
                        adj[t * w + (s ^ 1)] = NONE;
                        deg[t] -= 1;
                        if deg[t] <= 1 {
                            stack.push(t);
                        }
                    }
                }
            }
        }
        let keep: Vec<usize> = (0..self.nv).filter(|&v| alive[v]).collect();
        Self::restrict(self.rank, &adj, &keep, self.basepoint)
    }

    fn restrict(rank: usize, adj: &[u32], keep: &[usize], bp: Option<usize>) -> CoreGraph {
        let w = 2 * rank;
        let mut idx = vec![NONE; adj.len() / w.max(1)];
        let mut order: Vec<usize> = Vec::with_capacity(keep.len());
        if let Some(b) = bp {
            if keep.contains(&b) {
                order.push(b);
            }
        }
        order.extend(keep.iter().copied().filter(|&v| Some(v) != bp));
        for (i, &v) in order.iter().enumerate() {
            idx[v] = i as u32;
        }
        let mut out = vec![NONE; order.len() * w];
        for (i, &v) in order.iter().enumerate() {
            for s in 0..w {
                let t = adj[v * w + s];
                if t != NONE && idx[t as usize] != NONE {
                    out[i * w + s] = idx[t as usize];
                }
            }
        }
        CoreGraph { rank, nv: order.len(), adj: out, basepoint: bp.filter(|b| keep.contains(b)).map(|_| 0) }
    }

    /// Mask of the vertices that survive trimming when the basepoint is not protected.
    pub fn core_mask(&self) -> Vec<bool> {
        let w = self.width();
        let mut deg: Vec<usize> = (0..self.nv).map(|v| self.degree(v)).collect();
        let mut alive = vec![true; self.nv];
        let mut stack: Vec<usize> = (0..self.nv).filter(|&v| deg[v] <= 1).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] || deg[v] > 1 {
                continue;
            }
            alive[v] = false;
            for s in 0..w {
                let t = self.adj[v * w + s];
                if t != NONE && t as usize != v && alive[t as usize] {
                    deg[t as usize] -= 1;
                    if deg[t as usize] <= 1 {
                        stack.push(t as usize);
                    }
                }
            }
        }
        alive
    }

    /// For a based graph with nontrivial fundamental group: the word read
    /// from the basepoint to the nearest vertex of the cyclic core, and that vertex.
    pub fn stem(&self) -> Option<(Word, usize)> {
        let b = self.basepoint?;
        let mask = self.core_mask();
        let paths = self.tree_paths(b);
        (0..self.nv)
            .filter(|&v| mask[v])
            .filter_map(|v| paths[v].clone().map(|p| (p, v)))
            .min_by_key(|(p, _)| p.len())
    }

    /// Image under the homomorphism sending `x_i` to `images[i]` in a free
    /// group of rank `target_rank`; folded and trimmed, basepoint kept.
    pub fn apply_map(&self, images: &[Word], target_rank: usize) -> CoreGraph {
        let mut f = Folder::with_vertices(target_rank, self.nv.max(1));
        for (u, x, v) in self.edges() {
            let img = &images[x - 1];
            if img.is_empty() {
                f.identify(u, v);
            } else {
                f.add_path(u, img, v);
            }
        }
        f.finish(self.basepoint, true)
    }

    /// Forget the basepoint and trim to the cyclic core.
    pub fn unbased_core(&self) -> CoreGraph {
        let g = CoreGraph { basepoint: None, ..self.clone() };
        g.trimmed()
    }

    /// Connected components as vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.nv];
        let mut out = Vec::new();
        for s in 0..self.nv {
            if seen[s] {
                continue;
            }
            let mut comp = vec![s];
            seen[s] = true;
            let mut k = 0;
            while k < comp.len() {
                let v = comp[k];
                k += 1;
                for sl in 0..self.width() {
                    let t = self.adj[v * self.width() + sl];
                    if t != NONE && !seen[t as usize] {
                        seen[t as usize] = true;
                        comp.push(t as usize);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// The component containing `v`, renumbered with `v` as basepoint (not trimmed).
    pub fn component_at(&self, v: usize) -> CoreGraph {
        let comp = self.components().into_iter().find(|c| c.contains(&v)).unwrap_or_default();
        Self::restrict(self.rank, &self.adj, &comp, Some(v))
    }

    /// The same graph with a different basepoint (or none).
    pub fn rebased(&self, bp: Option<usize>) -> CoreGraph {
        let all: Vec<usize> = (0..self.nv).collect();
        Self::restrict(self.rank, &self.adj, &all, bp)
    }

    /// Spanning-tree paths from `root`: `paths[v]` reads from root to `v`.
    pub fn tree_paths(&self, root: usize) -> Vec<Option<Word>> {
        let mut paths: Vec<Option<Word>> = vec![None; self.nv];
        if self.nv == 0 {
            return paths;
        }
        paths[root] = Some(Word::identity());
        let mut q = VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for s in 0..self.width() {
                let t = self.adj[v * self.width() + s];
                if t != NONE && paths[t as usize].is_none() {
                    let p = paths[v].as_ref().map(|p| p.mul(&Word::reduce(&[slot_letter(s)])));
                    paths[t as usize] = p;
                    q.push_back(t as usize);
                }
            }
        }
        paths
    }

    /// A free basis of the fundamental group at `root` (component of `root`).
    pub fn generators_at(&self, root: usize) -> Vec<Word> {
        let paths = self.tree_paths(root);
        let mut tree_edge = vec![false; self.nv * self.width()];
        // mark tree edges: for each non-root v, the edge used to reach it
        for v in 0..self.nv {
            if v == root {
                continue;
            }
            let Some(pv) = &paths[v] else { continue };
            let last = *pv.letters().last().unwrap();
            let u = self.target(v, -last).unwrap();
            tree_edge[u * self.width() + slot(last)] = true;
            tree_edge[v * self.width() + slot(-last)] = true;
        }
        let mut gens = Vec::new();
        for (u, x, v) in self.edges() {
            if tree_edge[u * self.width() + slot(x as Letter)] {
                continue;
            }
            if let (Some(pu), Some(pv)) = (&paths[u], &paths[v]) {
                gens.push(pu.mul(&Word::gen(x)).mul(&pv.inverse()));
            }
        }
        gens
    }

    /// Free basis of the subgroup at the basepoint (or at vertex 0).
    pub fn generators(&self) -> Vec<Word> {
        if self.nv == 0 {
            return Vec::new();
        }
        self.generators_at(self.basepoint.unwrap_or(0))
    }

    /// Image under an automorphism: subdivide every edge by its image and fold.
    /// The basepoint is kept; the result is trimmed to the (based) core.
    pub fn apply_automorphism(&self, phi: &Automorphism) -> CoreGraph {
        let mut f = Folder::with_vertices(self.rank, self.nv.max(1));
        for (u, x, v) in self.edges() {
            f.add_path(u, &phi.images[x - 1], v);
        }
        f.finish(self.basepoint, true)
    }

    /// BFS serialization from `start` with label order x1, X1, x2, X2, ...
    /// Returns the code and the visiting order.
    fn bfs_code(&self, start: usize, best: Option<&[u32]>) -> Option<(Vec<u32>, Vec<usize>)> {
        let w = self.width();
        let mut num = vec![NONE; self.nv];
        let mut order = vec![start];
        num[start] = 0;
        let mut code = Vec::with_capacity(self.nv * w + 1);
        code.push(self.nv as u32);
        let mut better = false;
        let mut k = 0;
        while k < order.len() {
            let v = order[k];
            k += 1;
            for s in 0..w {
                let t = self.adj[v * w + s];
                let c = if t == NONE {
                    NONE
                } else {
                    if num[t as usize] == NONE {
                        num[t as usize] = order.len() as u32;
                        order.push(t as usize);
                    }
                    num[t as usize]
                };
                if let (false, Some(b)) = (better, best) {
                    let i = code.len();
                    match c.cmp(&b[i]) {
                        std::cmp::Ordering::Greater => return None,
                        std::cmp::Ordering::Less => better = true,
                        std::cmp::Ordering::Equal => {}
                    }
                }
                code.push(c);
            }
        }
        Some((code, order))
    }

    /// Canonical code: for based graphs the BFS code from the basepoint, for
    /// unbased graphs the least BFS code over all start vertices. Requires a
    /// connected graph.
    pub fn canonical_code(&self) -> Vec<u32> {
        self.canonical_with_order().0
    }

    fn canonical_with_order(&self) -> (Vec<u32>, Vec<usize>) {
        if self.nv == 0 {
            return (vec![0], Vec::new());
        }
        if let Some(b) = self.basepoint {
            return self.bfs_code(b, None).unwrap();
        }
        let mut best: Option<(Vec<u32>, Vec<usize>)> = None;
        for s in 0..self.nv {
            let r = self.bfs_code(s, best.as_ref().map(|b| b.0.as_slice()));
            if let Some((c, o)) = r {
                if best.as_ref().is_none_or(|b| c < b.0) {
                    best = Some((c, o));
                }
            }
        }
        best.unwrap()
    }

    /// Starting vertices realizing the canonical code (the automorphism orbit of the start).
    pub fn canonical_starts(&self) -> Vec<usize> {
        if self.nv == 0 {
            return Vec::new();
        }
        let (best, _) = self.canonical_with_order();
        (0..self.nv).filter(|&s| self.bfs_code(s, None).map(|c| c.0) == Some(best.clone())).collect()
    }

    /// Renumber vertices in canonical order.
    pub fn canonical_relabel(&self) -> CoreGraph {
        let (_, order) = self.canonical_with_order();
        let mut g = Self::restrict(self.rank, &self.adj, &order, Some(*order.first().unwrap_or(&0)));
        // restrict() puts the first kept vertex first; enforce the full order
        let w = self.width();
        let mut idx = vec![NONE; self.nv];
        for (i, &v) in order.iter().enumerate() {
            idx[v] = i as u32;
        }
        let mut adj = vec![NONE; order.len() * w];
        for (i, &v) in order.iter().enumerate() {
            for s in 0..w {
                let t = self.adj[v * w + s];
                if t != NONE {
                    adj[i * w + s] = idx[t as usize];
                }
            }
        }
        g.adj = adj;
        g.basepoint = self.basepoint.map(|_| 0);
        g
    }

    /// Compact text form of the canonical code.
    pub fn canonical_string(&self) -> String {
        code_string(self.rank, &self.canonical_code())
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.nv,
            edges: self.edges().into_iter().map(|(u, x, v)| (u, v, format!("x{}", x))).collect(),
            basepoint: self.basepoint,
        }
    }

    /// Build from the JSON form, folding (input need not be folded).
    pub fn from_json(rank: usize, j: &GraphJson) -> Result<CoreGraph> {
        let mut edges = Vec::with_capacity(j.edges.len());
        for (u, v, lab) in &j.edges {
            let l = parse_letter(lab)?;
            if l.unsigned_abs() as usize > rank {
                return Err(Error::InvalidLetter { letter: l, rank });
            }
            if *u >= j.vertices || *v >= j.vertices {
                return Err(Error::Parse { what: "graph edge", detail: format!("{u} {v} {lab}"), offset: None });
            }
            edges.push((*u, *v, l));
        }
        Ok(CoreGraph::fold_pregraph(rank, j.vertices, &edges, j.basepoint, true))
    }

    /// Product graph; component of `(self.base, other.base)` is the intersection.
    pub fn product(&self, other: &CoreGraph) -> CoreGraph {
        assert_eq!(self.rank, other.rank);
        let w = self.width();
        let n2 = other.nv;
        let nv = self.nv * n2;
        let mut adj = vec![NONE; nv * w];
        for u in 0..self.nv {
            for v in 0..n2 {
                for s in 0..w {
                    let a = self.adj[u * w + s];
                    let b = other.adj[v * w + s];
                    if a != NONE && b != NONE {
                        adj[(u * n2 + v) * w + s] = a * n2 as u32 + b;
                    }
                }
            }
        }
        let bp = match (self.basepoint, other.basepoint) {
            (Some(a), Some(b)) => Some(a * n2 + b),
            _ => None,
        };
        CoreGraph { rank: self.rank, nv, adj, basepoint: bp }
    }
}

/// Text form of a code vector.
pub(crate) fn code_string(rank: usize, code: &[u32]) -> String {
    let mut s = format!("r{}:", rank);
    for (k, &c) in code.iter().enumerate() {
        if k > 0 {
            s.push('.');
        }
        if c == NONE {
            s.push('-');
        } else {
            s.push_str(&c.to_string());
        }
    }
    s
}

/// JSON form `{"vertices": k, "edges": [[u, v, "x2"], ...], "basepoint": 0|null}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, String)>,
    pub basepoint: Option<usize>,
}

/// A finitely generated subgroup; its graph is based at vertex 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subgroup {
    graph: CoreGraph,
}

impl Subgroup {
    pub fn new(rank: usize, gens: &[Word]) -> Self {
        Subgroup { graph: CoreGraph::from_generators(rank, gens) }
    }

    /// Wrap a based graph (it is trimmed to its based core).
    pub fn from_graph(g: CoreGraph) -> Self {
        let g = if g.basepoint.is_none() { g.rebased(Some(0)) } else { g };
        Subgroup { graph: g.trimmed() }
    }

    pub fn trivial(rank: usize) -> Self {
        Subgroup::new(rank, &[])
    }

    pub fn graph(&self) -> &CoreGraph {
        &self.graph
    }
    pub fn ambient_rank(&self) -> usize {
        self.graph.rank
    }
    pub fn rank(&self) -> usize {
        self.graph.subgroup_rank()
    }
    pub fn contains(&self, w: &Word) -> bool {
        self.graph.contains(w)
    }
    pub fn generators(&self) -> Vec<Word> {
        self.graph.generators()
    }

    /// `g H g⁻¹`.
    pub fn conjugate(&self, g: &Word) -> Subgroup {
        let gens: Vec<Word> = self.generators().iter().map(|h| h.conjugate_by(g)).collect();
        Subgroup::new(self.ambient_rank(), &gens)
    }

    pub fn apply(&self, phi: &Automorphism) -> Subgroup {
        Subgroup { graph: self.graph.apply_automorphism(phi) }
    }

    pub fn conj_class(&self) -> ConjSubgroup {
        ConjSubgroup::from_graph(self.graph.clone())
    }

    /// Whether `self ⊆ other`.
    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.generators().iter().all(|g| other.contains(g))
    }

    /// Equality as subgroups (not up to conjugacy).
    pub fn same_as(&self, other: &Subgroup) -> bool {
        self.graph.canonical_code() == other.graph.canonical_code()
    }

    /// Elements labeling reduced closed paths at the basepoint of length ≤ `max_len`
    /// (each nontrivial element up to inversion once, shortest first).
    pub fn elements_up_to(&self, max_len: usize) -> Vec<Word> {
        let g = &self.graph;
        let mut out = Vec::new();
        if g.nv == 0 {
            return out;
        }
        let mut stack: Vec<(usize, Vec<Letter>)> = vec![(0, Vec::new())];
        while let Some((v, path)) = stack.pop() {
            if !path.is_empty() && v == 0 {
                let w = Word::reduce(&path);
                let wi = w.inverse();
                if w <= wi {
                    out.push(w);
                }
            }
            if path.len() == max_len {
                continue;
            }
            for s in 0..g.width() {
                let l = slot_letter(s);
                if path.last() == Some(&-l) {
                    continue;
                }
                if let Some(t) = g.target(v, l) {
                    let mut p = path.clone();
                    p.push(l);
                    stack.push((t, p));
                }
            }
        }
        out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        out.dedup();
        out
    }
}

/// Conjugacy class of a subgroup: an unbased core graph plus its canonical key.
#[derive(Clone, Debug)]
pub struct ConjSubgroup {
    graph: CoreGraph,
    key: Vec<u32>,
}

impl PartialEq for ConjSubgroup {
    fn eq(&self, other: &Self) -> bool {
        self.graph.rank == other.graph.rank && self.key == other.key
    }
}
impl Eq for ConjSubgroup {}
impl std::hash::Hash for ConjSubgroup {
    fn hash<H: std::hash::Hasher>(&self, h: &mut H) {
        self.key.hash(h)
    }
}
impl PartialOrd for ConjSubgroup {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ConjSubgroup {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}

impl ConjSubgroup {
    /// Conjugacy class of the subgroup represented by a (based or unbased) graph.
    pub fn from_graph(g: CoreGraph) -> Self {
        let core = g.unbased_core();
        let key = core.canonical_code();
        ConjSubgroup { graph: core.canonical_relabel().rebased(None), key }
    }

    pub fn from_generators(rank: usize, gens: &[Word]) -> Self {
        Self::from_graph(CoreGraph::from_generators(rank, gens))
    }

    pub fn graph(&self) -> &CoreGraph {
        &self.graph
    }
    pub fn key(&self) -> &[u32] {
        &self.key
    }
    pub fn key_string(&self) -> String {
        code_string(self.graph.rank, &self.key)
    }
    pub fn rank(&self) -> usize {
        self.graph.subgroup_rank()
    }
    pub fn ambient_rank(&self) -> usize {
        self.graph.rank
    }
    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    /// A representative subgroup, based at canonical vertex 0.
    pub fn representative(&self) -> Subgroup {
        if self.graph.nv == 0 {
            return Subgroup::trivial(self.graph.rank);
        }
        Subgroup { graph: self.graph.rebased(Some(0)) }
    }

    pub fn apply(&self, phi: &Automorphism) -> ConjSubgroup {
        ConjSubgroup::from_graph(self.graph.apply_automorphism(phi))
    }

    /// Whether some conjugate of `w` lies in a representative.
    pub fn contains_conjugate_of(&self, w: &Word) -> bool {
        let c = w.cyclically_reduced();
        if c.is_empty() {
            return true;
        }
        (0..self.graph.nv).any(|v| {
            let rot = c.letters();
            (0..rot.len()).any(|s| {
                let r: Vec<Letter> = rot[s..].iter().chain(&rot[..s]).copied().collect();
                self.graph.read(v, &Word::reduce(&r)) == Some(v)
            })
        })
    }
}

/// Result of intersecting two subgroups: the basepoint component and the
/// nontrivial cores of the remaining product components.
#[derive(Clone, Debug)]
pub struct Pullback {
    pub intersection: Subgroup,
    pub others: Vec<ConjSubgroup>,
}

/// Pullback of based graphs. The basepoint component is `H ∩ K`; other
/// nontrivial components represent the intersections `H ∩ gKg⁻¹` for `g`
/// outside `H K`.
pub fn pullback(h: &Subgroup, k: &Subgroup) -> Pullback {
    let p = h.graph.product(&k.graph);
    let bp = p.basepoint.unwrap_or(0);
    let comps = p.components();
    let mut intersection = Subgroup::trivial(h.ambient_rank());
    let mut others = Vec::new();
    for comp in comps {
        if comp.is_empty() {
            continue;
        }
        if comp.contains(&bp) {
            intersection = Subgroup::from_graph(p.component_at(bp));
        } else {
            let c = ConjSubgroup::from_graph(p.component_at(comp[0]).rebased(None));
            if c.num_edges() > 0 && !others.contains(&c) {
                others.push(c);
            }
        }
    }
    Pullback { intersection, others }
}
