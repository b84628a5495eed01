//! Marked graphs: graphs of groups with trivial edge groups.
//!
//! Every edge carries a word; an edge path maps to the product of the words
//! along it (inverted when traversed backwards). A marked graph is valid when
//! this induces an isomorphism `π1(graph, 0) → F_n`. Each edge is a sphere
//! of the simple system the graph represents; a one-vertex graph is a rose
//! and the system is reduced.

use serde::{Deserialize, Serialize};

use super::sphere::{NonSepSphere, SepSphere, Sphere};
use crate::error::{Error, Result};
use crate::stallings::Folder;
use crate::word::{Automorphism, Basis, Letter, Word};

/// One edge `tail → head` carrying `word`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedEdge {
    pub tail: usize,
    pub head: usize,
    pub word: Word,
}

/// A marked graph of rank `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkedGraph {
    rank: usize,
    vertices: usize,
    edges: Vec<MarkedEdge>,
}

impl MarkedGraph {
    /// Validate and build.
    pub fn new(rank: usize, vertices: usize, edges: Vec<MarkedEdge>) -> Result<Self> {
        let g = MarkedGraph { rank, vertices, edges };
        g.validate()?;
        Ok(g)
    }

    /// The rose of a basis: one vertex, petal `i` marked by `b_i`.
    pub fn rose(b: &Basis) -> Self {
        let edges = b.elements.iter().map(|w| MarkedEdge { tail: 0, head: 0, word: w.clone() }).collect();
        MarkedGraph { rank: b.rank(), vertices: 1, edges }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices
    }
    pub fn edges(&self) -> &[MarkedEdge] {
        &self.edges
    }
    pub fn is_rose(&self) -> bool {
        self.vertices == 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.rank;
        if self.vertices == 0 {
            return Err(Error::Precondition("marked graph needs a vertex".into()));
        }
        for e in &self.edges {
            if e.tail >= self.vertices || e.head >= self.vertices {
                return Err(Error::Precondition("edge endpoint out of range".into()));
            }
        }
        if self.components(None).len() != 1 {
            return Err(Error::Precondition("marked graph must be connected".into()));
        }
        if self.edges.len() + 1 != self.vertices + n {
            return Err(Error::Precondition(format!("first Betti number must be {}", n)));
        }
        let mut f = Folder::with_vertices(n, self.vertices);
        for e in &self.edges {
            if e.word.max_generator() > n {
                return Err(Error::InvalidLetter { letter: e.word.max_generator() as Letter, rank: n });
            }
            if e.word.is_empty() {
                f.identify(e.tail, e.head);
            } else {
                f.add_path(e.tail, &e.word, e.head);
            }
        }
        let g = f.finish(Some(0), true);
        if g.num_vertices() != 1 || g.num_edges() != n {
            return Err(Error::Precondition("marking does not induce an isomorphism onto F_n".into()));
        }
        Ok(())
    }

    /// Connected components (vertex sets) with edge `skip` removed.
    fn components(&self, skip: Option<usize>) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.vertices];
        let mut out = Vec::new();
        for s in 0..self.vertices {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut list = vec![s];
            comp[s] = id;
            let mut k = 0;
            while k < list.len() {
                let v = list[k];
                k += 1;
                for (i, e) in self.edges.iter().enumerate() {
                    if Some(i) == skip {
                        continue;
                    }
                    for (a, b) in [(e.tail, e.head), (e.head, e.tail)] {
                        if a == v && comp[b] == usize::MAX {
                            comp[b] = id;
                            list.push(b);
                        }
                    }
                }
            }
            out.push(list);
        }
        out
    }

    /// Spanning-tree path words from `root` and the set of tree edges, avoiding `skip`.
    fn tree(&self, root: usize, skip: Option<usize>) -> (Vec<Option<Word>>, Vec<bool>) {
        let mut path: Vec<Option<Word>> = vec![None; self.vertices];
        let mut tree = vec![false; self.edges.len()];
        path[root] = Some(Word::identity());
        let mut q = std::collections::VecDeque::from([root]);
        while let Some(v) = q.pop_front() {
            for (i, e) in self.edges.iter().enumerate() {
                if Some(i) == skip {
                    continue;
                }
                let pv = path[v].clone().unwrap();
                if e.tail == v && path[e.head].is_none() {
                    path[e.head] = Some(pv.mul(&e.word));
                    tree[i] = true;
                    q.push_back(e.head);
                } else if e.head == v && path[e.tail].is_none() {
                    path[e.tail] = Some(pv.mul(&e.word.inverse()));
                    tree[i] = true;
                    q.push_back(e.tail);
                }
            }
        }
        (path, tree)
    }

    /// Images of a free basis of `π1` at `root` (component of `root`, `skip` removed).
    fn loop_words(&self, root: usize, skip: Option<usize>) -> Vec<Word> {
        let (path, tree) = self.tree(root, skip);
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if Some(i) == skip || tree[i] {
                continue;
            }
            if let (Some(a), Some(b)) = (&path[e.tail], &path[e.head]) {
                out.push(a.mul(&e.word).mul(&b.inverse()));
            }
        }
        out
    }

    /// The sphere of edge `i` (collapse every other edge).
    pub fn edge_sphere(&self, i: usize) -> Result<Sphere> {
        let n = self.rank;
        let e = self.edges.get(i).ok_or_else(|| Error::Precondition(format!("no edge {}", i)))?;
        let comps = self.components(Some(i));
        if comps.len() == 1 {
            let (path, _) = self.tree(e.tail, Some(i));
            let gens = self.loop_words(e.tail, Some(i));
            let stable = e.word.mul(&path[e.head].clone().unwrap().inverse());
            Ok(Sphere::NonSep(NonSepSphere::from_splitting_rank(n, &gens, &stable)?))
        } else {
            let p = self.loop_words(e.tail, Some(i));
            let q: Vec<Word> = self.loop_words(e.head, Some(i)).iter().map(|w| w.conjugate_by(&e.word)).collect();
            Ok(Sphere::Sep(SepSphere::new(n, &p, &q)?))
        }
    }

    /// All edge spheres in edge order.
    pub fn spheres(&self) -> Result<Vec<Sphere>> {
        (0..self.edges.len()).map(|i| self.edge_sphere(i)).collect()
    }

    /// Collapse the non-loop edge `i`; the marking is adjusted so that the result is valid.
    pub fn collapse(&self, i: usize) -> Result<MarkedGraph> {
        let e = self.edges.get(i).ok_or_else(|| Error::Precondition(format!("no edge {}", i)))?;
        if e.tail == e.head {
            return Err(Error::Precondition("cannot collapse a loop".into()));
        }
        let (a, b, w) = (e.tail, e.head, e.word.clone());
        let renum = |v: usize| -> usize {
            let v = if v == b { a } else { v };
            if v > b {
                v - 1
            } else {
                v
            }
        };
        let mut edges = Vec::new();
        for (j, f) in self.edges.iter().enumerate() {
            if j == i {
                continue;
            }
            let mut word = f.word.clone();
            if f.tail == b {
                word = w.mul(&word);
            }
            if f.head == b {
                word = word.mul(&w.inverse());
            }
            edges.push(MarkedEdge { tail: renum(f.tail), head: renum(f.head), word });
        }
        let out = MarkedGraph { rank: self.rank, vertices: self.vertices - 1, edges };
        out.validate()?;
        Ok(out)
    }

    /// Free basis of `π1(graph, 0)` through a spanning tree: for each
    /// non-tree edge, its index and the image of the corresponding loop.
    pub fn loop_basis(&self) -> (Vec<usize>, Basis) {
        let (path, tree) = self.tree(0, None);
        let mut idx = Vec::new();
        let mut words = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if tree[i] {
                continue;
            }
            idx.push(i);
            words.push(path[e.tail].clone().unwrap().mul(&e.word).mul(&path[e.head].clone().unwrap().inverse()));
        }
        (idx, Basis { elements: words })
    }

    /// Reduced edge path (letters `±(edge + 1)`) at vertex 0 representing `w`.
    pub fn edge_path(&self, w: &Word) -> Result<Word> {
        let (idx, basis) = self.loop_basis();
        let inv = basis.as_automorphism().invert()?;
        let coords = inv.apply(w);
        // tree paths as edge sequences
        let mut tpath: Vec<Option<Vec<Letter>>> = vec![None; self.vertices];
        tpath[0] = Some(Vec::new());
        let (_, tree) = self.tree(0, None);
        let mut q = std::collections::VecDeque::from([0usize]);
        while let Some(v) = q.pop_front() {
            for (i, e) in self.edges.iter().enumerate() {
                if !tree[i] {
                    continue;
                }
                let pv = tpath[v].clone().unwrap();
                if e.tail == v && tpath[e.head].is_none() {
                    let mut p = pv.clone();
                    p.push(i as Letter + 1);
                    tpath[e.head] = Some(p);
                    q.push_back(e.head);
                } else if e.head == v && tpath[e.tail].is_none() {
                    let mut p = pv;
                    p.push(-(i as Letter + 1));
                    tpath[e.tail] = Some(p);
                    q.push_back(e.tail);
                }
            }
        }
        let gamma: Vec<Word> = idx
            .iter()
            .map(|&i| {
                let e = &self.edges[i];
                let mut p = tpath[e.tail].clone().unwrap();
                p.push(i as Letter + 1);
                p.extend(tpath[e.head].clone().unwrap().iter().rev().map(|l| -l));
                Word::reduce(&p)
            })
            .collect();
        let mut out = Word::identity();
        for &l in coords.letters() {
            let g = &gamma[l.unsigned_abs() as usize - 1];
            out = out.mul(&if l > 0 { g.clone() } else { g.inverse() });
        }
        Ok(out)
    }

    /// `φ · Σ`: post-compose the marking.
    pub fn apply(&self, phi: &Automorphism) -> MarkedGraph {
        let edges = self
            .edges
            .iter()
            .map(|e| MarkedEdge { tail: e.tail, head: e.head, word: phi.apply(&e.word) })
            .collect();
        MarkedGraph { rank: self.rank, vertices: self.vertices, edges }
    }
}

/// The sphere of the least canonical key among the edges.
pub fn theta(sigma: &MarkedGraph) -> Result<Sphere> {
    if sigma.edges.is_empty() {
        return Err(Error::Precondition("edgeless marked graph".into()));
    }
    let spheres = sigma.spheres()?;
    Ok(spheres.into_iter().min_by_key(|s| s.key()).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn rose_spheres_are_standard() {
        let r = MarkedGraph::rose(&Basis::standard(3));
        for (i, s) in r.spheres().unwrap().iter().enumerate() {
            assert_eq!(s.key(), NonSepSphere::standard(3, i + 1).key());
        }
    }

    #[test]
    fn theta_of_standard_rose_is_least_standard_sphere() {
        let r = MarkedGraph::rose(&Basis::standard(3));
        let t = theta(&r).unwrap();
        let least = (1..=3).map(|i| NonSepSphere::standard(3, i).key()).min().unwrap();
        assert_eq!(t.key(), least);
    }

    #[test]
    fn barbell_graph_has_a_separating_edge() {
        // two vertices with loops x1 and x2 joined by an edge
        let g = MarkedGraph::new(
            2,
            2,
            vec![
                MarkedEdge { tail: 0, head: 0, word: w("x1") },
                MarkedEdge { tail: 0, head: 1, word: w("") },
                MarkedEdge { tail: 1, head: 1, word: w("x2") },
            ],
        )
        .unwrap();
        let s = g.edge_sphere(1).unwrap();
        assert!(s.is_separating());
        assert_eq!(s.key(), SepSphere::standard(2, 1).key());
        let c = g.collapse(1).unwrap();
        assert!(c.is_rose());
        assert_eq!(c.edge_sphere(0).unwrap().key(), NonSepSphere::standard(2, 1).key());
    }

    #[test]
    fn invalid_markings_are_rejected() {
        let bad = MarkedGraph::new(2, 1, vec![MarkedEdge { tail: 0, head: 0, word: w("x1") }, MarkedEdge { tail: 0, head: 0, word: w("x1 x1") }]);
        assert!(bad.is_err());
    }

    #[test]
    fn edge_paths_on_a_rose_are_coordinates() {
        let b = Basis::new(vec![w("x1 x2"), w("x2")]).unwrap();
        let r = MarkedGraph::rose(&b);
        // x1 = (x1x2)·x2⁻¹
        assert_eq!(r.edge_path(&w("x1")).unwrap(), w("x1 X2"));
    }
}
