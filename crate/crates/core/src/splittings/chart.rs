//! Charts: automorphism sequences carrying a sphere to a standard one.
//!
//! A chart is applied step by step with folding after every step, so the
//! intermediate graphs stay small even when the composite automorphism has
//! long images.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::labeled::LabeledGraph;
use crate::stallings::CoreGraph;
use crate::whitehead::{type1_cached, type2_cached};
use crate::word::{Automorphism, Word};

/// All Whitehead automorphisms of a rank with an inverse lookup table.
pub struct WhiteheadTable {
    pub autos: Vec<Automorphism>,
    pub inverse: Vec<u16>,
    /// Abelianization matrices, row-major `n × n`, column `j` the image of `x_{j+1}`.
    pub abel: Vec<Vec<i64>>,
}

const MAX_TABLE_RANK: usize = 5;

/// Cached table for rank `n` (type 1 followed by type 2).
pub fn whitehead_table(n: usize) -> &'static WhiteheadTable {
    static CACHE: [OnceLock<WhiteheadTable>; MAX_TABLE_RANK + 1] = [const { OnceLock::new() }; MAX_TABLE_RANK + 1];
    assert!((2..=MAX_TABLE_RANK).contains(&n), "Whitehead tables cover ranks 2..=5");
    CACHE[n].get_or_init(|| {
        let autos: Vec<Automorphism> = type1_cached(n).iter().chain(type2_cached(n)).cloned().collect();
        let index: HashMap<&[Word], usize> = autos.iter().enumerate().map(|(k, a)| (a.images.as_slice(), k)).collect();
        let inverse = autos
            .iter()
            .map(|a| {
                let inv = a.invert().expect("Whitehead automorphisms are invertible");
                index[inv.images.as_slice()] as u16
            })
            .collect();
        let abel = autos.iter().map(|a| abel_matrix(a)).collect();
        WhiteheadTable { autos, inverse, abel }
    })
}

/// Abelianization matrix of an automorphism (column `j` = image of `x_{j+1}`).
pub fn abel_matrix(a: &Automorphism) -> Vec<i64> {
    let n = a.rank();
    let mut m = vec![0i64; n * n];
    for (j, w) in a.images.iter().enumerate() {
        for (i, c) in w.abelianization(n).into_iter().enumerate() {
            m[i * n + j] = c;
        }
    }
    m
}

pub(crate) fn mat_mul(n: usize, a: &[i64], b: &[i64]) -> Vec<i64> {
    let mut c = vec![0i64; n * n];
    for i in 0..n {
        for k in 0..n {
            let x = a[i * n + k];
            if x != 0 {
                for j in 0..n {
                    c[i * n + j] += x * b[k * n + j];
                }
            }
        }
    }
    c
}

/// One chart step.
#[derive(Clone, Debug)]
pub enum ChartStep {
    /// Index into [`whitehead_table`].
    Whitehead(u16),
    /// A general automorphism.
    Map(Arc<Automorphism>),
}

/// Sequence of automorphisms, applied in order (`steps[0]` first).
#[derive(Clone, Debug)]
pub struct Chart {
    rank: usize,
    steps: Vec<ChartStep>,
}

impl Chart {
    pub fn identity(rank: usize) -> Self {
        Chart { rank, steps: Vec::new() }
    }

    pub fn from_automorphism(phi: Automorphism) -> Self {
        let rank = phi.rank();
        Chart { rank, steps: vec![ChartStep::Map(Arc::new(phi.without_provenance()))] }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[ChartStep] {
        &self.steps
    }

    pub fn from_steps(rank: usize, steps: Vec<ChartStep>) -> Self {
        Chart { rank, steps }
    }

    fn step_auto<'a>(&self, s: &'a ChartStep) -> &'a Automorphism {
        match s {
            ChartStep::Whitehead(k) => &whitehead_table(self.rank).autos[*k as usize],
            ChartStep::Map(a) => a,
        }
    }

    /// The chart that first applies `step`, then `self`.
    pub fn after(&self, step: ChartStep) -> Chart {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.push(step);
        steps.extend(self.steps.iter().cloned());
        Chart { rank: self.rank, steps }
    }

    /// The chart applying `self`, then `other`.
    pub fn then(&self, other: &Chart) -> Chart {
        let mut steps = self.steps.clone();
        steps.extend(other.steps.iter().cloned());
        Chart { rank: self.rank, steps }
    }

    /// Inverse chart.
    pub fn inverse(&self) -> Chart {
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| match s {
                ChartStep::Whitehead(k) => ChartStep::Whitehead(whitehead_table(self.rank).inverse[*k as usize]),
                ChartStep::Map(a) => ChartStep::Map(Arc::new(a.invert().expect("chart steps are automorphisms").without_provenance())),
            })
            .collect();
        Chart { rank: self.rank, steps }
    }

    /// Apply to a graph (based or unbased), folding after every step.
    pub fn apply_graph(&self, g: &CoreGraph) -> CoreGraph {
        let mut cur = g.clone();
        for s in &self.steps {
            cur = cur.apply_automorphism(self.step_auto(s));
        }
        cur
    }

    /// Apply to a labeled graph, folding after every step.
    pub fn apply_labeled(&self, g: &LabeledGraph) -> LabeledGraph {
        let mut cur = g.clone();
        for s in &self.steps {
            cur = cur.apply_automorphism(self.step_auto(s));
        }
        cur
    }

    pub fn apply_word(&self, w: &Word) -> Word {
        let mut cur = w.clone();
        for s in &self.steps {
            cur = self.step_auto(s).apply(&cur);
        }
        cur
    }

    /// The composite automorphism `s_k ∘ … ∘ s_1`.
    pub fn automorphism(&self) -> Automorphism {
        let images = (1..=self.rank).map(|i| self.apply_word(&Word::gen(i))).collect();
        Automorphism::from_images_unchecked(images)
    }

    /// Abelianization matrix of the composite.
    pub fn abel(&self) -> Vec<i64> {
        let n = self.rank;
        let mut m: Vec<i64> = (0..n * n).map(|k| i64::from(k / n == k % n)).collect();
        for s in &self.steps {
            let a = match s {
                ChartStep::Whitehead(k) => whitehead_table(n).abel[*k as usize].clone(),
                ChartStep::Map(a) => abel_matrix(a),
            };
            m = mat_mul(n, &a, &m);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_inverses_are_inverse() {
        let t = whitehead_table(3);
        assert_eq!(t.autos.len(), 47 + 90);
        for (k, a) in t.autos.iter().enumerate() {
            let b = &t.autos[t.inverse[k] as usize];
            assert_eq!(a.compose(b), Automorphism::identity(3));
        }
    }

    #[test]
    fn chart_inverse_round_trip() {
        let t = whitehead_table(3);
        let c = Chart::from_steps(3, vec![ChartStep::Whitehead(50), ChartStep::Whitehead(7), ChartStep::Whitehead(100)]);
        let w: Word = "x1 x2 X3 x1".parse().unwrap();
        assert_eq!(c.inverse().apply_word(&c.apply_word(&w)), w);
        assert_eq!(c.automorphism().apply(&w), c.apply_word(&w));
        let direct = abel_matrix(&c.automorphism());
        assert_eq!(c.abel(), direct);
        assert!(t.autos.len() < u16::MAX as usize);
    }
}
