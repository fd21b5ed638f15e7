//! Weighted dependency digraphs and their combinatorics.
//!
//! An arc `i -> j` with weight `w` means agent `i` depends on agent `j` with
//! strength `w` (the entry `a_ij` of the dependency matrix). Vertices are
//! 0-based here; I/O layers translate to 1-based numbering.
//!
//! The maximum in-forest enumeration is exponential and deliberately naive:
//! it is the exact oracle that the linear-algebra routes are checked against.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{Rational, Scalar};

/// Largest vertex count accepted by the forest enumeration.
pub const MAX_ENUMERATION_VERTICES: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub weight: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    arcs: Vec<Arc>,
    /// out-arc indices per vertex, sorted by head
    out: Vec<Vec<usize>>,
}

impl WeightedDigraph {
    /// Validates and stores the arcs; rejects self-loops, duplicate pairs,
    /// non-positive weights and out-of-range endpoints.
    pub fn new(n: usize, arcs: Vec<Arc>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDigraph(
                "digraph needs at least one vertex".into(),
            ));
        }
        let mut seen = BTreeSet::new();
        for a in &arcs {
            if a.tail >= n || a.head >= n {
                return Err(Error::InvalidDigraph(format!(
                    "arc ({}, {}) has an endpoint outside 1..={n}",
                    a.tail + 1,
                    a.head + 1
                )));
            }
            if a.tail == a.head {
                return Err(Error::InvalidDigraph(format!(
                    "self-loop at vertex {}",
                    a.tail + 1
                )));
            }
            if a.weight <= Rational::zero() {
                return Err(Error::InvalidDigraph(format!(
                    "arc ({}, {}) has non-positive weight {}",
                    a.tail + 1,
                    a.head + 1,
                    a.weight
                )));
            }
            if !seen.insert((a.tail, a.head)) {
                return Err(Error::InvalidDigraph(format!(
                    "duplicate arc ({}, {})",
                    a.tail + 1,
                    a.head + 1
                )));
            }
        }
        let mut out = vec![Vec::new(); n];
        for (idx, a) in arcs.iter().enumerate() {
            out[a.tail].push(idx);
        }
        for list in &mut out {
            list.sort_by_key(|&idx| arcs[idx].head);
        }
        Ok(Self { n, arcs, out })
    }

    /// Convenience constructor from `(tail, head, weight)` triples, 0-based.
    pub fn from_triples(n: usize, triples: &[(usize, usize, i64)]) -> Result<Self> {
        Self::new(
            n,
            triples
                .iter()
                .map(|&(tail, head, w)| Arc {
                    tail,
                    head,
                    weight: Rational::from_i64(w),
                })
                .collect(),
        )
    }

    /// Reads the digraph off a dependency matrix: arc `(i, j)` for every
    /// positive off-diagonal entry.
    pub fn from_dependency_matrix(a: &Matrix<Rational>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::NotSquare {
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        let mut arcs = Vec::new();
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                let w = &a[(i, j)];
                if w.is_zero() {
                    continue;
                }
                if i == j {
                    return Err(Error::InvalidDependencyMatrix(format!(
                        "nonzero diagonal entry at {}",
                        i + 1
                    )));
                }
                arcs.push(Arc {
                    tail: i,
                    head: j,
                    weight: w.clone(),
                });
            }
        }
        Self::new(a.rows(), arcs)
    }

    /// Random digraph: each ordered pair gets an arc with probability
    /// `density`, weight uniform in `1..=max_weight`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64, max_weight: i64) -> Self {
        let mut arcs = Vec::new();
        for tail in 0..n {
            for head in 0..n {
                if tail != head && rng.random_bool(density) {
                    arcs.push(Arc {
                        tail,
                        head,
                        weight: Rational::from_i64(rng.random_range(1..=max_weight)),
                    });
                }
            }
        }
        Self::new(n, arcs).expect("random arcs are valid by construction")
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn out_arcs(&self, v: usize) -> impl Iterator<Item = &Arc> {
        self.out[v].iter().map(move |&idx| &self.arcs[idx])
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|v| self.out_arcs(v).map(|a| a.head).collect())
            .collect()
    }

    /// Dependency matrix `A` with `a_ij = w_ij`.
    pub fn dependency_matrix<T: Scalar>(&self) -> Matrix<T> {
        let mut a = Matrix::zeros(self.n, self.n);
        for arc in &self.arcs {
            a[(arc.tail, arc.head)] = T::from_rational(&arc.weight);
        }
        a
    }

    pub fn components(&self) -> ComponentStructure {
        strongly_connected_components(self)
    }

    pub fn has_spanning_in_tree(&self) -> bool {
        has_spanning_in_tree(self)
    }
}

/// Strongly connected components, their condensation and the final classes
/// (components with no arc leaving them).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentStructure {
    /// Vertex sets, each ascending; ordered by smallest vertex.
    pub components: Vec<Vec<usize>>,
    /// Component index of each vertex.
    pub component_of: Vec<usize>,
    /// Distinct arcs between components, sorted.
    pub condensation: Vec<(usize, usize)>,
    /// Indices into `components`, ascending.
    pub final_classes: Vec<usize>,
}

impl ComponentStructure {
    /// Builds the structure from out-neighbour lists.
    pub fn from_adjacency(adj: &[Vec<usize>]) -> Self {
        let mut components = tarjan(adj);
        for c in &mut components {
            c.sort_unstable();
        }
        components.sort_by_key(|c| c[0]);
        let mut component_of = vec![0; adj.len()];
        for (ci, c) in components.iter().enumerate() {
            for &v in c {
                component_of[v] = ci;
            }
        }
        let condensation: BTreeSet<(usize, usize)> = adj
            .iter()
            .enumerate()
            .flat_map(|(v, outs)| outs.iter().map(move |&w| (v, w)))
            .map(|(v, w)| (component_of[v], component_of[w]))
            .filter(|(a, b)| a != b)
            .collect();
        let final_classes = (0..components.len())
            .filter(|&ci| !condensation.iter().any(|&(a, _)| a == ci))
            .collect();
        Self {
            components,
            component_of,
            condensation: condensation.into_iter().collect(),
            final_classes,
        }
    }

    /// Number of final classes.
    pub fn d(&self) -> usize {
        self.final_classes.len()
    }

    pub fn final_class_vertices(&self) -> impl Iterator<Item = &[usize]> {
        self.final_classes
            .iter()
            .map(|&ci| self.components[ci].as_slice())
    }

    pub fn is_in_final_class(&self, v: usize) -> bool {
        self.final_classes.contains(&self.component_of[v])
    }
}

pub fn strongly_connected_components(g: &WeightedDigraph) -> ComponentStructure {
    ComponentStructure::from_adjacency(&g.adjacency())
}

pub fn has_spanning_in_tree(g: &WeightedDigraph) -> bool {
    g.components().d() == 1
}

struct TarjanState {
    next_index: usize,
    index: Vec<Option<usize>>,
    lowlink: Vec<usize>,
    on_stack: Vec<bool>,
    stack: Vec<usize>,
    out: Vec<Vec<usize>>,
}

fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut st = TarjanState {
        next_index: 0,
        index: vec![None; n],
        lowlink: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        out: Vec::new(),
    };
    for v in 0..n {
        if st.index[v].is_none() {
            strong_connect(adj, &mut st, v);
        }
    }
    st.out
}

fn strong_connect(adj: &[Vec<usize>], st: &mut TarjanState, v: usize) {
    st.index[v] = Some(st.next_index);
    st.lowlink[v] = st.next_index;
    st.next_index += 1;
    st.stack.push(v);
    st.on_stack[v] = true;
    for &w in &adj[v] {
        match st.index[w] {
            None => {
                strong_connect(adj, st, w);
                st.lowlink[v] = st.lowlink[v].min(st.lowlink[w]);
            }
            Some(iw) if st.on_stack[w] => st.lowlink[v] = st.lowlink[v].min(iw),
            Some(_) => {}
        }
    }
    if Some(st.lowlink[v]) == st.index[v] {
        let mut comp = Vec::new();
        loop {
            let w = st.stack.pop().expect("tarjan stack holds v");
            st.on_stack[w] = false;
            comp.push(w);
            if w == v {
                break;
            }
        }
        st.out.push(comp);
    }
}

/// A spanning in-forest: every vertex keeps at most one out-arc and the kept
/// arcs form no cycle. Vertices without an out-arc are the roots.
#[derive(Debug, Clone, PartialEq)]
pub struct InForest {
    /// Head of the kept out-arc of each vertex, `None` for roots.
    pub parent: Vec<Option<usize>>,
    /// Product of the kept arc weights.
    pub weight: Rational,
}

impl InForest {
    pub fn arc_count(&self) -> usize {
        self.parent.iter().filter(|p| p.is_some()).count()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.parent.len())
            .filter(|&v| self.parent[v].is_none())
            .collect()
    }

    /// Root of the tree containing `v`.
    pub fn root_of(&self, mut v: usize) -> usize {
        while let Some(p) = self.parent[v] {
            v = p;
        }
        v
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(v, p)| p.map(|h| (v, h)))
    }
}

/// All maximum spanning in-forests (exactly `n - d` arcs), in a fixed order:
/// vertices decide in ascending order, "no arc" before arcs, arcs by head.
pub fn enumerate_max_in_forests(g: &WeightedDigraph) -> Result<Vec<InForest>> {
    let n = g.vertex_count();
    if n > MAX_ENUMERATION_VERTICES {
        return Err(Error::EnumerationLimit {
            n,
            limit: MAX_ENUMERATION_VERTICES,
        });
    }
    let d = g.components().d();
    let mut search = ForestSearch {
        g,
        max_roots: d,
        parent: vec![None; n],
        weights: Vec::with_capacity(n),
        roots: 0,
        found: Vec::new(),
    };
    search.descend(0);
    Ok(search.found)
}

struct ForestSearch<'a> {
    g: &'a WeightedDigraph,
    max_roots: usize,
    parent: Vec<Option<usize>>,
    weights: Vec<&'a Rational>,
    roots: usize,
    found: Vec<InForest>,
}

impl<'a> ForestSearch<'a> {
    fn descend(&mut self, v: usize) {
        let n = self.parent.len();
        if v == n {
            if self.roots == self.max_roots {
                let weight = self.weights.iter().fold(Rational::one(), |acc, w| acc * *w);
                self.found.push(InForest {
                    parent: self.parent.clone(),
                    weight,
                });
            }
            return;
        }
        if self.roots < self.max_roots {
            self.roots += 1;
            self.descend(v + 1);
            self.roots -= 1;
        }
        let g = self.g;
        for arc in g.out_arcs(v) {
            if self.closes_cycle(v, arc.head) {
                continue;
            }
            self.parent[v] = Some(arc.head);
            self.weights.push(&arc.weight);
            self.descend(v + 1);
            self.weights.pop();
            self.parent[v] = None;
        }
    }

    /// Following decided parents from `head` leads back to `v`. Undecided
    /// vertices (index > v) have `parent == None` and stop the walk.
    fn closes_cycle(&self, v: usize, head: usize) -> bool {
        let mut u = head;
        loop {
            if u == v {
                return true;
            }
            match self.parent[u] {
                Some(p) => u = p,
                None => return false,
            }
        }
    }
}

/// The matrix of maximum in-forests: entry `(k, s)` is the weight share of
/// maximum in-forests in which `k` lies in the tree rooted at `s`.
pub fn forest_matrix(g: &WeightedDigraph) -> Result<Matrix<Rational>> {
    let n = g.vertex_count();
    let forests = enumerate_max_in_forests(g)?;
    let mut counts = Matrix::<Rational>::zeros(n, n);
    let mut total = Rational::zero();
    for f in &forests {
        total += &f.weight;
        for k in 0..n {
            let s = f.root_of(k);
            counts[(k, s)] += &f.weight;
        }
    }
    Ok(counts.scale(&(Rational::one() / total)))
}
