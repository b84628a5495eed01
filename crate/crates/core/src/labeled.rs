//! Folding of graphs whose edges carry words in an auxiliary free group.
//!
//! Every edge `e` has a generator label `x(e)` and a word `λ(e)` in a
//! second alphabet. Folding two edges with the same label from a common
//! vertex identifies their far ends and rewrites the auxiliary words on the
//! edges at the absorbed vertex, so that the auxiliary word read along every
//! closed path is unchanged. This tracks a marking through changes of
//! coordinates: automorphism inversion and restriction of splittings to a
//! subgroup both use it.

use crate::word::{Automorphism, Letter, Word};

/// A finite graph with generator labels and auxiliary words on edges.
#[derive(Clone, Debug)]
pub struct LabeledGraph {
    rank: usize,
    tail: Vec<usize>,
    head: Vec<usize>,
    label: Vec<usize>,
    lam: Vec<Word>,
    alive: Vec<bool>,
    inc: Vec<Vec<usize>>,
    vertex_alive: Vec<bool>,
    base: Option<usize>,
}

impl LabeledGraph {
    pub fn new(rank: usize, nv: usize, base: Option<usize>) -> Self {
        LabeledGraph {
            rank,
            tail: vec![],
            head: vec![],
            label: vec![],
            lam: vec![],
            alive: vec![],
            inc: vec![Vec::new(); nv],
            vertex_alive: vec![true; nv],
            base,
        }
    }

    /// Rose on `petals[i]` (images in the edge alphabet) with auxiliary word `y_{i+1}` on petal `i`.
    pub fn rose_of(rank: usize, petals: &[Word], base: bool) -> Self {
        let mut g = LabeledGraph::new(rank, 1, base.then_some(0));
        for (k, w) in petals.iter().enumerate() {
            g.add_path(0, w, 0, Word::gen(k + 1));
        }
        g.fold();
        g
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Copy of a core graph with trivial auxiliary words.
    pub fn from_core(g: &crate::stallings::CoreGraph) -> Self {
        let mut out = LabeledGraph::new(g.rank(), g.num_vertices(), g.basepoint());
        for (u, x, v) in g.edges() {
            out.add_edge(u, v, x, Word::identity());
        }
        out
    }


    pub fn add_vertex(&mut self) -> usize {
        self.inc.push(Vec::new());
        self.vertex_alive.push(true);
        self.inc.len() - 1
    }

    /// Add `t --x--> h` carrying `lam`.
    pub fn add_edge(&mut self, t: usize, h: usize, x: usize, lam: Word) {
        let e = self.tail.len();
        self.tail.push(t);
        self.head.push(h);
        self.label.push(x);
        self.lam.push(lam);
        self.alive.push(true);
        self.inc[t].push(e);
        if h != t {
            self.inc[h].push(e);
        }
    }

    /// Add a path spelling `w` from `u` to `v` whose total auxiliary word is `lam`.
    pub fn add_path(&mut self, u: usize, w: &Word, v: usize, lam: Word) {
        let lets = w.letters();
        assert!(!lets.is_empty(), "labeled paths need a nonempty spelling");
        let mut prev = u;
        for (p, &l) in lets.iter().enumerate() {
            let next = if p + 1 == lets.len() { v } else { self.add_vertex() };
            let mu = if p == 0 { lam.clone() } else { Word::identity() };
            if l > 0 {
                self.add_edge(prev, next, l as usize, mu);
            } else {
                self.add_edge(next, prev, (-l) as usize, mu.inverse());
            }
            prev = next;
        }
    }

    fn half_edges(&self, v: usize) -> impl Iterator<Item = (usize, bool, i32)> + '_ {
        self.inc[v].iter().filter(|&&e| self.alive[e]).flat_map(move |&e| {
            let f = (self.tail[e] == v).then_some((e, true, self.label[e] as i32));
            let b = (self.head[e] == v).then_some((e, false, -(self.label[e] as i32)));
            f.into_iter().chain(b)
        })
    }

    fn far(&self, e: usize, fwd: bool) -> usize {
        if fwd {
            self.head[e]
        } else {
            self.tail[e]
        }
    }

    fn lam_dir(&self, e: usize, fwd: bool) -> Word {
        if fwd {
            self.lam[e].clone()
        } else {
            self.lam[e].inverse()
        }
    }

    /// Fold until no vertex has two half-edges with the same signed label.
    pub fn fold(&mut self) {
        let mut work: Vec<usize> = (0..self.inc.len()).filter(|&v| self.vertex_alive[v]).collect();
        let mut seen: Vec<Option<(usize, bool)>> = vec![None; 2 * self.rank + 1];
        while let Some(v) = work.pop() {
            if !self.vertex_alive[v] {
                continue;
            }
            seen.iter_mut().for_each(|s| *s = None);
            let mut conflict = None;
            for (e, fwd, sl) in self.half_edges(v) {
                let slot = (sl + self.rank as i32) as usize;
                match seen[slot] {
                    Some((e1, f1)) if e1 != e => {
                        conflict = Some(((e1, f1), (e, fwd)));
                        break;
                    }
                    _ => seen[slot] = Some((e, fwd)),
                }
            }
            let Some((mut h1, mut h2)) = conflict else { continue };
            let mut v1 = self.far(h1.0, h1.1);
            let mut v2 = self.far(h2.0, h2.1);
            if Some(v2) == self.base && v1 != v2 {
                std::mem::swap(&mut h1, &mut h2);
                std::mem::swap(&mut v1, &mut v2);
            }
            let l1 = self.lam_dir(h1.0, h1.1);
            let l2 = self.lam_dir(h2.0, h2.1);
            if v1 != v2 {
                let g = l1.inverse().mul(&l2);
                let gi = g.inverse();
                let edges = std::mem::take(&mut self.inc[v2]);
                for &e in &edges {
                    if !self.alive[e] {
                        continue;
                    }
                    let mut lam = std::mem::take(&mut self.lam[e]);
                    if self.tail[e] == v2 {
                        lam = g.mul(&lam);
                        self.tail[e] = v1;
                    }
                    if self.head[e] == v2 {
                        lam = lam.mul(&gi);
                        self.head[e] = v1;
                    }
                    self.lam[e] = lam;
                    if !self.inc[v1].contains(&e) {
                        self.inc[v1].push(e);
                    }
                }
                self.vertex_alive[v2] = false;
            }
            // h2 now duplicates h1 (same ends, same auxiliary word up to a relation)
            self.alive[h2.0] = false;
            work.push(v);
            work.push(v1);
        }
    }

    fn degree(&self, v: usize) -> usize {
        self.half_edges(v).count()
    }

    /// Remove degree ≤ 1 vertices other than the base, repeatedly.
    pub fn trim(&mut self) {
        let mut stack: Vec<usize> = (0..self.inc.len()).filter(|&v| self.vertex_alive[v]).collect();
        while let Some(v) = stack.pop() {
            if !self.vertex_alive[v] || Some(v) == self.base || self.degree(v) > 1 {
                continue;
            }
            let es: Vec<usize> = self.inc[v].iter().copied().filter(|&e| self.alive[e]).collect();
            for e in es {
                self.alive[e] = false;
                let other = if self.tail[e] == v { self.head[e] } else { self.tail[e] };
                stack.push(other);
            }
            self.vertex_alive[v] = false;
        }
    }

    /// Renumber live vertices and edges (base first).
    pub fn compact(&self) -> LabeledGraph {
        let mut idx = vec![usize::MAX; self.inc.len()];
        let mut order = Vec::new();
        if let Some(b) = self.base {
            if self.vertex_alive[b] {
                order.push(b);
            }
        }
        for v in 0..self.inc.len() {
            if self.vertex_alive[v] && Some(v) != self.base {
                order.push(v);
            }
        }
        for (i, &v) in order.iter().enumerate() {
            idx[v] = i;
        }
        let mut g = LabeledGraph::new(self.rank, order.len(), self.base.filter(|&b| self.vertex_alive[b]).map(|_| 0));
        for e in 0..self.tail.len() {
            if self.alive[e] {
                g.add_edge(idx[self.tail[e]], idx[self.head[e]], self.label[e], self.lam[e].clone());
            }
        }
        g
    }

    /// Forget the base.
    pub fn unbased(mut self) -> LabeledGraph {
        self.base = None;
        self
    }

    /// Apply an automorphism (or any homomorphism into the same rank given by
    /// images): every edge becomes a path spelling the image of its label.
    pub fn apply(&self, images: &[Word], target_rank: usize) -> LabeledGraph {
        let mut g = LabeledGraph::new(target_rank, self.inc.len(), self.base);
        for v in 0..self.inc.len() {
            g.vertex_alive[v] = self.vertex_alive[v];
        }
        for e in 0..self.tail.len() {
            if !self.alive[e] {
                continue;
            }
            let img = &images[self.label[e] - 1];
            if img.is_empty() {
                // identify the ends; auxiliary data must be trivial in this use
                g.add_identification(self.tail[e], self.head[e]);
            } else {
                g.add_path(self.tail[e], img, self.head[e], self.lam[e].clone());
            }
        }
        g.fold();
        g.trim();
        g.compact()
    }

    fn add_identification(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        // merge b into a by relabeling incident edges without auxiliary change
        let edges = std::mem::take(&mut self.inc[b]);
        for e in edges {
            if self.tail[e] == b {
                self.tail[e] = a;
            }
            if self.head[e] == b {
                self.head[e] = a;
            }
            if !self.inc[a].contains(&e) {
                self.inc[a].push(e);
            }
        }
        self.vertex_alive[b] = false;
        if self.base == Some(b) {
            self.base = Some(a);
        }
    }

    /// Apply an automorphism, fold and trim.
    pub fn apply_automorphism(&self, phi: &Automorphism) -> LabeledGraph {
        self.apply(&phi.images, self.rank)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_alive.iter().filter(|&&a| a).count()
    }

    pub fn num_edges(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    /// Live edges `(id, tail, head, label, aux)`.
    pub fn edges(&self) -> Vec<(usize, usize, usize, usize, &Word)> {
        (0..self.tail.len())
            .filter(|&e| self.alive[e])
            .map(|e| (e, self.tail[e], self.head[e], self.label[e], &self.lam[e]))
            .collect()
    }

    /// Live edges with a given label.
    pub fn edges_with_label(&self, x: usize) -> Vec<usize> {
        (0..self.tail.len()).filter(|&e| self.alive[e] && self.label[e] == x).collect()
    }

    pub fn edge_ends(&self, e: usize) -> (usize, usize) {
        (self.tail[e], self.head[e])
    }

    pub fn aux(&self, e: usize) -> &Word {
        &self.lam[e]
    }

    /// Vertices reachable from `v` without crossing `skip`.
    pub fn reach_without(&self, v: usize, skip: Option<usize>) -> Vec<usize> {
        let mut seen = vec![false; self.inc.len()];
        let mut out = vec![v];
        seen[v] = true;
        let mut k = 0;
        while k < out.len() {
            let u = out[k];
            k += 1;
            for &e in &self.inc[u] {
                if !self.alive[e] || Some(e) == skip {
                    continue;
                }
                for w in [self.tail[e], self.head[e]] {
                    if !seen[w] {
                        seen[w] = true;
                        out.push(w);
                    }
                }
            }
        }
        out
    }

    /// Whether removing `e` disconnects its endpoints.
    pub fn is_bridge(&self, e: usize) -> bool {
        let (t, h) = (self.tail[e], self.head[e]);
        t != h && !self.reach_without(t, Some(e)).contains(&h)
    }

    /// Free basis of `π1` at `root` of the component of `root` in the graph
    /// with the edges in `skip` removed, as pairs `(spelling, auxiliary word)`.
    pub fn loops_at(&self, root: usize, skip: &[usize]) -> Vec<(Word, Word)> {
        let n = self.inc.len();
        let mut path: Vec<Option<(Word, Word)>> = vec![None; n];
        let mut tree = vec![false; self.tail.len()];
        path[root] = Some((Word::identity(), Word::identity()));
        let mut q = std::collections::VecDeque::from([root]);
        while let Some(u) = q.pop_front() {
            for &e in &self.inc[u] {
                if !self.alive[e] || skip.contains(&e) {
                    continue;
                }
                let (pw, pl) = path[u].clone().unwrap();
                let x = self.label[e] as Letter;
                if self.tail[e] == u && path[self.head[e]].is_none() {
                    tree[e] = true;
                    path[self.head[e]] = Some((pw.mul(&Word::reduce(&[x])), pl.mul(&self.lam[e])));
                    q.push_back(self.head[e]);
                } else if self.head[e] == u && path[self.tail[e]].is_none() {
                    tree[e] = true;
                    path[self.tail[e]] = Some((pw.mul(&Word::reduce(&[-x])), pl.mul(&self.lam[e].inverse())));
                    q.push_back(self.tail[e]);
                }
            }
        }
        let mut out = Vec::new();
        for e in 0..self.tail.len() {
            if !self.alive[e] || tree[e] || skip.contains(&e) {
                continue;
            }
            if let (Some((tw, tl)), Some((hw, hl))) = (&path[self.tail[e]], &path[self.head[e]]) {
                let w = tw.mul(&Word::gen(self.label[e])).mul(&hw.inverse());
                let l = tl.mul(&self.lam[e]).mul(&hl.inverse());
                out.push((w, l));
            }
        }
        out
    }

    /// If the graph is a one-vertex rose with one petal per generator, the
    /// auxiliary word of each petal (indexed by generator).
    pub fn rose_petals(&self) -> Option<Vec<Word>> {
        if self.num_vertices() != 1 {
            return None;
        }
        let mut out: Vec<Option<Word>> = vec![None; self.rank];
        for (_, _, _, x, lam) in self.edges() {
            if out[x - 1].is_some() {
                return None;
            }
            out[x - 1] = Some(lam.clone());
        }
        out.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::NielsenMove;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn rose_of_images_recovers_inverse(ix in prop::collection::vec(0usize..30, 0..8)) {
            let all = NielsenMove::all(3);
            let moves: Vec<_> = ix.iter().map(|&k| all[k]).collect();
            let phi = Automorphism::from_moves(3, &moves);
            let g = LabeledGraph::rose_of(3, &phi.images, true);
            let petals = g.rose_petals().unwrap();
            let inv = phi.invert().unwrap();
            prop_assert_eq!(petals, inv.images);
        }

        #[test]
        fn aux_words_track_apply(ix in prop::collection::vec(0usize..30, 0..6), jx in prop::collection::vec(0usize..30, 0..6)) {
            // Folding the rose of φ then applying ψ must give the rose of ψ∘φ.
            let all = NielsenMove::all(3);
            let phi = Automorphism::from_moves(3, &ix.iter().map(|&k| all[k]).collect::<Vec<_>>());
            let psi = Automorphism::from_moves(3, &jx.iter().map(|&k| all[k]).collect::<Vec<_>>());
            let g = LabeledGraph::rose_of(3, &phi.images, true).apply_automorphism(&psi);
            let direct = LabeledGraph::rose_of(3, &psi.compose(&phi).images, true);
            prop_assert_eq!(g.rose_petals(), direct.rose_petals());
        }
    }
}
