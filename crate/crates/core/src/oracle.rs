//! Ground truth for small graphs: exhaustive enumeration of `G(n, p)` in
//! exact rational arithmetic, explicit sampling, union-find components and a
//! literal vertex-level exploration.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::explore::SweepResult;
use crate::params::GraphParams;
use crate::rng::{geometric_gap, RngStream};

/// Largest vertex count accepted by [`enumerate_exact`] (`2^21` graphs).
pub const MAX_ENUMERATION_N: u64 = 7;
/// Largest vertex count accepted by [`sample_explicit`].
pub const MAX_EXPLICIT_N: u64 = 100_000;
/// Largest expected edge count accepted by [`sample_explicit`].
pub const MAX_EXPLICIT_EDGES: f64 = 1e8;

#[derive(Clone, Debug, Default)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
        true
    }

    pub fn size_of(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }
}

/// A simple undirected graph as an edge list with `i < j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitGraph {
    n: u64,
    edges: Vec<(u64, u64)>,
}

impl ExplicitGraph {
    /// Normalizes each pair to `i < j`; rejects loops, duplicates and
    /// out-of-range indices.
    pub fn new(n: u64, edges: Vec<(u64, u64)>) -> Result<Self> {
        let mut edges: Vec<(u64, u64)> = edges
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        for &(i, j) in &edges {
            if i == j {
                return Err(domain(format!("self-loop at vertex {i}")));
            }
            if j >= n {
                return Err(domain(format!("vertex {j} out of range for n = {n}")));
            }
        }
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(domain("duplicate edge"));
        }
        edges.shrink_to_fit();
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn edges(&self) -> &[(u64, u64)] {
        &self.edges
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n as usize];
        for &(i, j) in &self.edges {
            adj[i as usize].push(j as usize);
            adj[j as usize].push(i as usize);
        }
        adj
    }
}

/// Edge-list text: a line `n m`, then `m` lines `i j`.
impl fmt::Display for ExplicitGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.n, self.edges.len())?;
        for (i, j) in &self.edges {
            writeln!(f, "{i} {j}")?;
        }
        Ok(())
    }
}

impl FromStr for ExplicitGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let pair = |line: Option<&str>| -> Result<(u64, u64)> {
            let line = line.ok_or_else(|| Error::Parse("unexpected end of edge list".into()))?;
            let mut it = line.split_whitespace().map(str::parse::<u64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Parse(format!("expected two integers, got {line:?}"))),
            }
        };
        let (n, m) = pair(lines.next())?;
        let edges = (0..m)
            .map(|_| pair(lines.next()))
            .collect::<Result<Vec<_>>>()?;
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {m} edge lines")));
        }
        ExplicitGraph::new(n, edges)
    }
}

/// Exact distribution over sizes `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    /// `probs[k - 1] = P(size = k)`
    pub probs: Vec<BigRational>,
}

impl ExactDistribution {
    pub fn prob(&self, size: u64) -> BigRational {
        if size == 0 {
            return BigRational::zero();
        }
        self.probs
            .get(size as usize - 1)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn total(&self) -> BigRational {
        self.probs
            .iter()
            .fold(BigRational::zero(), |acc, p| acc + p)
    }

    /// Probabilities as doubles, indexed by `size - 1`.
    pub fn to_f64(&self) -> Vec<f64> {
        self.probs
            .iter()
            .map(|p| p.to_f64().unwrap_or(f64::NAN))
            .collect()
    }
}

/// Parse `"a/b"` or a decimal literal into an exact probability.
pub fn parse_probability(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let q = if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let b: BigInt = b
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if b.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        BigRational::new(a, b)
    } else {
        let x: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad probability {s:?}")))?;
        BigRational::from_float(x).ok_or_else(|| Error::Parse(format!("bad probability {s:?}")))?
    };
    if q < BigRational::zero() || q > BigRational::one() {
        return Err(domain(format!("probability {s} is outside [0, 1]")));
    }
    Ok(q)
}

/// Exact laws of `|C(0)|` and `|C1|` in `G(n, p)` by enumerating every edge
/// subset. Graphs are tallied by edge count so the weights
/// `p^e (1-p)^{m-e}` are applied once per `e`.
pub fn enumerate_exact(n: u64, p: &BigRational) -> Result<(ExactDistribution, ExactDistribution)> {
    if n == 0 || n > MAX_ENUMERATION_N {
        return Err(Error::CostGuard {
            what: "exact enumeration",
            estimated: n as f64,
            limit: MAX_ENUMERATION_N as f64,
        });
    }
    if *p < BigRational::zero() || *p > BigRational::one() {
        return Err(domain("probability outside [0, 1]"));
    }
    let nv = n as usize;
    let pairs: Vec<(usize, usize)> = (0..nv)
        .flat_map(|i| (i + 1..nv).map(move |j| (i, j)))
        .collect();
    let m = pairs.len();
    let table_len = (m + 1) * nv;
    let empty = || (vec![0u64; table_len], vec![0u64; table_len]);

    let (cv_counts, c1_counts) = (0u64..1 << m)
        .into_par_iter()
        .fold(empty, |(mut cv, mut c1), mask| {
            let mut uf = UnionFind::new(nv);
            for (bit, &(i, j)) in pairs.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    uf.union(i, j);
                }
            }
            let e = mask.count_ones() as usize;
            let own = uf.size_of(0);
            let largest = (0..nv).map(|v| uf.size_of(v)).max().unwrap_or(0);
            cv[e * nv + own - 1] += 1;
            c1[e * nv + largest - 1] += 1;
            (cv, c1)
        })
        .reduce(empty, |(mut a, mut b), (c, d)| {
            a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
            b.iter_mut().zip(d).for_each(|(x, y)| *x += y);
            (a, b)
        });

    let q = BigRational::one() - p;
    let weights: Vec<BigRational> = (0..=m)
        .map(|e| p.pow(e as i32) * q.pow((m - e) as i32))
        .collect();
    let finish = |counts: &[u64]| ExactDistribution {
        probs: (0..nv)
            .map(|s| {
                (0..=m).fold(BigRational::zero(), |acc, e| {
                    acc + &weights[e] * BigRational::from_integer(BigInt::from(counts[e * nv + s]))
                })
            })
            .collect(),
    };
    Ok((finish(&cv_counts), finish(&c1_counts)))
}

/// Enumeration with a binary probability, interpreted exactly.
pub fn enumerate_exact_f64(n: u64, p: f64) -> Result<(ExactDistribution, ExactDistribution)> {
    let q = BigRational::from_float(p).ok_or_else(|| domain("probability must be finite"))?;
    enumerate_exact(n, &q)
}

/// Sample `G(n, p)` by skipping over absent edges in lexicographic order of
/// pairs `(i, j)`, `i < j`.
pub fn sample_explicit(params: &GraphParams, rng: &mut RngStream) -> Result<ExplicitGraph> {
    let n = params.n;
    let expected = params.p * (n as f64) * (n as f64 - 1.0) / 2.0;
    if n > MAX_EXPLICIT_N {
        return Err(Error::CostGuard {
            what: "explicit graph vertices",
            estimated: n as f64,
            limit: MAX_EXPLICIT_N as f64,
        });
    }
    if expected > MAX_EXPLICIT_EDGES {
        return Err(Error::CostGuard {
            what: "explicit graph expected edges",
            estimated: expected,
            limit: MAX_EXPLICIT_EDGES,
        });
    }
    let mut edges = Vec::new();
    if params.p > 0.0 && n >= 2 {
        let ln_q = (-params.p).ln_1p();
        // Position (i, j) with j possibly running past the end of row i.
        let (mut i, mut j) = (0u64, 0u64);
        loop {
            j = j.saturating_add(geometric_gap(params.p, ln_q, rng));
            while i < n - 1 && j >= n {
                // row i covers columns i+1..n; carry the excess into row i+1
                let excess = j - n;
                i += 1;
                j = i + 1 + excess;
            }
            if i >= n - 1 {
                break;
            }
            edges.push((i, j));
        }
    }
    Ok(ExplicitGraph { n, edges })
}

/// Component sizes by union-find, ordered by each component's smallest vertex.
pub fn components_of(graph: &ExplicitGraph) -> SweepResult {
    let nv = graph.n as usize;
    let mut uf = UnionFind::new(nv);
    for &(i, j) in &graph.edges {
        uf.union(i as usize, j as usize);
    }
    let mut seen = vec![false; nv];
    let mut sizes = Vec::new();
    for v in 0..nv {
        let r = uf.find(v);
        if !seen[r] {
            seen[r] = true;
            sizes.push(uf.size_of(r) as u64);
        }
    }
    SweepResult::from_sizes(sizes)
}

/// The vertex-level exploration from `v`: vertices are ordered `v` first, then
/// by index; the first active vertex is the earliest activated one (FIFO).
/// Returns `(tau, [Y_1, ..., Y_tau])`. Component size does not depend on the
/// order; the trace does.
pub fn explore_on_graph(graph: &ExplicitGraph, v: u64) -> Result<(u64, Vec<u64>)> {
    if v >= graph.n {
        return Err(domain(format!(
            "vertex {v} out of range for n = {}",
            graph.n
        )));
    }
    let v = v as usize;
    let mut adj = graph.adjacency();
    let rank = |u: usize| if u == v { 0 } else { u + 1 };
    for list in &mut adj {
        list.sort_unstable_by_key(|&u| rank(u));
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Status {
        Neutral,
        Active,
        Explored,
    }
    let mut status = vec![Status::Neutral; graph.n as usize];
    let mut active = VecDeque::from([v]);
    status[v] = Status::Active;
    let mut trace = Vec::new();
    while let Some(w) = active.pop_front() {
        for &u in &adj[w] {
            if status[u] == Status::Neutral {
                status[u] = Status::Active;
                active.push_back(u);
            }
        }
        status[w] = Status::Explored;
        trace.push(active.len() as u64);
    }
    Ok((trace.len() as u64, trace))
}
