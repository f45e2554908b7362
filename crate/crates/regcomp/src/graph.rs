//! Weighted undirected graphs stored as dense symmetric matrices.
//!
//! Every algorithm in this crate reads graphs through this interface. The
//! representation is deliberately dense: the regularity checks are dense
//! block operations and the target regime is dense graphs.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex index {0} out of range for graph on {1} vertices")]
    VertexOutOfRange(usize, usize),
    #[error("self-loop at vertex {0} is not allowed")]
    SelfLoop(usize),
    #[error("weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("weight matrix is not symmetric at ({0}, {1}): {2} vs {3}")]
    Asymmetric(usize, usize, f64, f64),
    #[error("vertex sets must be disjoint")]
    OverlappingSets,
    #[error("vertex set must be nonempty")]
    EmptySet,
    #[error("binarize threshold {0} outside (0, 1]")]
    BadThreshold(f64),
}

/// Symmetric weighted adjacency on `n` vertices, weights in `[0, 1]`,
/// zero diagonal (no self-loops).
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    w: Vec<f64>,
}

impl Graph {
    /// Graph on `n` vertices with no edges.
    pub fn empty(n: usize) -> Self {
        Graph { n, w: vec![0.0; n * n] }
    }

    /// Build from a full row-major weight matrix, validating symmetry,
    /// zero diagonal and the weight range.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GraphError> {
        let n = rows.len();
        let mut g = Graph::empty(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(GraphError::Asymmetric(i, row.len(), 0.0, 0.0));
            }
            for (j, &v) in row.iter().enumerate() {
                if i == j {
                    if v != 0.0 {
                        return Err(GraphError::SelfLoop(i));
                    }
                    continue;
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(GraphError::WeightOutOfRange(v));
                }
                let back = rows[j][i];
                if back != v {
                    return Err(GraphError::Asymmetric(i, j, v, back));
                }
                g.w[i * n + j] = v;
            }
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.w[i * n + j] = 1.0;
                }
            }
        }
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }

    /// Set the weight of `{i, j}` in both directions.
    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) -> Result<(), GraphError> {
        if i >= self.n {
            return Err(GraphError::VertexOutOfRange(i, self.n));
        }
        if j >= self.n {
            return Err(GraphError::VertexOutOfRange(j, self.n));
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        if !(0.0..=1.0).contains(&w) || !w.is_finite() {
            return Err(GraphError::WeightOutOfRange(w));
        }
        self.w[i * self.n + j] = w;
        self.w[j * self.n + i] = w;
        Ok(())
    }

    /// Weighted degree: row sum of the adjacency.
    pub fn degree(&self, v: usize) -> f64 {
        self.w[v * self.n..(v + 1) * self.n].iter().sum()
    }

    pub fn min_degree(&self) -> f64 {
        (0..self.n).map(|v| self.degree(v)).fold(f64::INFINITY, f64::min)
    }

    /// Sum of all degrees; twice the total edge weight.
    pub fn volume(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Number of unordered pairs with positive weight.
    pub fn edge_count(&self) -> usize {
        let mut c = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.weight(i, j) > 0.0 {
                    c += 1;
                }
            }
        }
        c
    }

    /// Map weights >= threshold to 1 and the rest to 0.
    pub fn binarize(&self, threshold: f64) -> Result<Graph, GraphError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(GraphError::BadThreshold(threshold));
        }
        let mut g = Graph::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j && self.w[i * self.n + j] >= threshold {
                    g.w[i * self.n + j] = 1.0;
                }
            }
        }
        Ok(g)
    }

    /// BFS reachability from vertex 0 over positive weights.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for u in 0..self.n {
                if !seen[u] && self.weight(v, u) > 0.0 {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Two-coloring test over positive weights. A disconnected graph is
    /// bipartite iff every component is.
    pub fn is_bipartite(&self) -> bool {
        let mut color = vec![-1i8; self.n];
        for start in 0..self.n {
            if color[start] != -1 {
                continue;
            }
            color[start] = 0;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for u in 0..self.n {
                    if self.weight(v, u) > 0.0 {
                        if color[u] == -1 {
                            color[u] = 1 - color[v];
                            stack.push(u);
                        } else if color[u] == color[v] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Multiply every weight by `factor`, which must keep weights in range.
    pub fn scaled(&self, factor: f64) -> Result<Graph, GraphError> {
        let mut g = Graph::empty(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    let v = self.w[i * self.n + j] * factor;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(GraphError::WeightOutOfRange(v));
                    }
                    g.w[i * self.n + j] = v;
                }
            }
        }
        Ok(g)
    }
}

/// Sorted set of distinct vertex indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSet {
    members: Vec<usize>,
}

impl VertexSet {
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet { members }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn is_disjoint(&self, other: &VertexSet) -> bool {
        // both sorted: merge scan
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }
}

impl FromIterator<usize> for VertexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        VertexSet::new(iter.into_iter().collect())
    }
}

fn check_pair_sets(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<(), GraphError> {
    if x.is_empty() || y.is_empty() {
        return Err(GraphError::EmptySet);
    }
    if !x.is_disjoint(y) {
        return Err(GraphError::OverlappingSets);
    }
    for v in x.iter().chain(y.iter()) {
        if v >= g.n() {
            return Err(GraphError::VertexOutOfRange(v, g.n()));
        }
    }
    Ok(())
}

/// Total weight between two disjoint vertex sets. On a 0/1 graph this is
/// the number of crossing edges.
pub fn edge_weight_between(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<f64, GraphError> {
    check_pair_sets(g, x, y)?;
    let mut total = 0.0;
    for i in x.iter() {
        for j in y.iter() {
            total += g.weight(i, j);
        }
    }
    Ok(total)
}

/// Edge density d(X, Y): crossing weight normalized by |X||Y|.
pub fn edge_density(g: &Graph, x: &VertexSet, y: &VertexSet) -> Result<f64, GraphError> {
    let e = edge_weight_between(g, x, y)?;
    Ok(e / (x.len() as f64 * y.len() as f64))
}
