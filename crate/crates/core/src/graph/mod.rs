//! Weighted directed graphs stored as forward and reverse CSR arrays.
//!
//! Edges are kept in canonical `(src, dst)` order; the position of an edge in
//! that order is its edge id, shared by the forward and reverse views so that
//! a live-edge world can be described by one flag per edge id.

mod build;
mod io;

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use build::{
    build_jaccard_graph, load_embeddings, load_ratings, read_embeddings, read_ratings,
    weights_from_embeddings, CosineWeight, EmbeddingSet, Rating, RatingsTable,
};
pub use io::{load_edge_list, read_edge_list, write_edge_list, EdgeListOptions, LoadedGraph};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId, weight: f64) -> Self {
        Edge { src, dst, weight }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    out_weights: Vec<f64>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_weights: Vec<f64>,
    in_edge_ids: Vec<u32>,
}

impl Graph {
    /// Validates `edges` and builds both adjacency views.
    ///
    /// Rejects weights outside `[0, 1]`, self-loops, ids `>= n` and repeated
    /// `(src, dst)` pairs.
    pub fn new(n: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if n > NodeId::MAX as usize {
            return Err(Error::InvalidGraph(format!("{n} nodes exceeds the 32-bit id space")));
        }
        for e in &edges {
            check_edge(e, n)?;
        }
        edges.sort_by_key(|e| (e.src, e.dst));
        if let Some(w) = edges.windows(2).find(|w| w[0].src == w[1].src && w[0].dst == w[1].dst) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge {} -> {}",
                w[0].src, w[0].dst
            )));
        }
        if edges.len() > u32::MAX as usize {
            return Err(Error::InvalidGraph("too many edges".into()));
        }

        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for e in &edges {
            out_offsets[e.src as usize + 1] += 1;
            in_offsets[e.dst as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }

        let out_targets = edges.iter().map(|e| e.dst).collect();
        let out_weights = edges.iter().map(|e| e.weight).collect();

        let m = edges.len();
        let mut in_sources = vec![0; m];
        let mut in_weights = vec![0.0; m];
        let mut in_edge_ids = vec![0u32; m];
        let mut cursor = in_offsets.clone();
        // Sources arrive in ascending order, so each reverse list ends up sorted.
        for (id, e) in edges.iter().enumerate() {
            let slot = &mut cursor[e.dst as usize];
            in_sources[*slot] = e.src;
            in_weights[*slot] = e.weight;
            in_edge_ids[*slot] = id as u32;
            *slot += 1;
        }

        Ok(Graph {
            n,
            out_offsets,
            out_targets,
            out_weights,
            in_offsets,
            in_sources,
            in_weights,
            in_edge_ids,
        })
    }

    /// Expands each undirected pair into two directed edges of the same weight.
    pub fn from_undirected(n: usize, edges: Vec<Edge>) -> Result<Self> {
        let directed = edges
            .into_iter()
            .flat_map(|e| [e, Edge::new(e.dst, e.src, e.weight)])
            .collect();
        Graph::new(n, directed)
    }

    pub fn empty(n: usize) -> Result<Self> {
        Graph::new(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    /// Edges in canonical order; the iterator position is the edge id.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |u| {
            let r = self.out_edge_ids(u as NodeId);
            self.out_targets[r.clone()]
                .iter()
                .zip(&self.out_weights[r])
                .map(move |(&v, &w)| Edge::new(u as NodeId, v, w))
        })
    }

    /// Weight of every edge, indexed by edge id.
    pub fn edge_weights(&self) -> &[f64] {
        &self.out_weights
    }

    pub fn out_edge_ids(&self, u: NodeId) -> Range<usize> {
        self.out_offsets[u as usize]..self.out_offsets[u as usize + 1]
    }

    pub fn out_neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.out_targets[self.out_edge_ids(u)]
    }

    pub fn out_weights(&self, u: NodeId) -> &[f64] {
        &self.out_weights[self.out_edge_ids(u)]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_edge_ids(u).len()
    }

    fn in_range(&self, v: NodeId) -> Range<usize> {
        self.in_offsets[v as usize]..self.in_offsets[v as usize + 1]
    }

    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.in_sources[self.in_range(v)]
    }

    pub fn in_weights(&self, v: NodeId) -> &[f64] {
        &self.in_weights[self.in_range(v)]
    }

    /// Forward edge ids of the incoming edges of `v`, aligned with `in_neighbors(v)`.
    pub fn in_edge_ids(&self, v: NodeId) -> &[u32] {
        &self.in_edge_ids[self.in_range(v)]
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_range(v).len()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        (u as usize) < self.n
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> Option<f64> {
        let targets = self.out_neighbors(u);
        targets
            .binary_search(&v)
            .ok()
            .map(|i| self.out_weights(u)[i])
    }

    pub fn mean_weight(&self) -> f64 {
        if self.out_weights.is_empty() {
            0.0
        } else {
            self.out_weights.iter().sum::<f64>() / self.out_weights.len() as f64
        }
    }

    /// The graph with every edge reversed (`G^T`).
    pub fn transpose(&self) -> Graph {
        let edges = self
            .edges()
            .map(|e| Edge::new(e.dst, e.src, e.weight))
            .collect();
        Graph::new(self.n, edges).expect("transpose of a valid graph is valid")
    }

    /// Same edge set with weights recomputed by `f`.
    pub fn reweighted(&self, mut f: impl FnMut(Edge) -> Result<f64>) -> Result<Graph> {
        let edges = self
            .edges()
            .map(|e| Ok(Edge::new(e.src, e.dst, f(e)?)))
            .collect::<Result<Vec<_>>>()?;
        Graph::new(self.n, edges)
    }
}

fn check_edge(e: &Edge, n: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&e.weight) {
        return Err(Error::InvalidGraph(format!(
            "weight out of range on edge {} -> {}: {}",
            e.src, e.dst, e.weight
        )));
    }
    if e.src == e.dst {
        return Err(Error::InvalidGraph(format!("self-loop on node {}", e.src)));
    }
    for id in [e.src, e.dst] {
        if id as usize >= n {
            return Err(Error::node_out_of_range(id, n));
        }
    }
    Ok(())
}

/// Dense renumbering of arbitrary string node labels, in first-seen order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdMap {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len() as NodeId;
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn resolve(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id as usize]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Resolves a node token either through `ids` or as a decimal id.
pub fn resolve_node(token: &str, ids: Option<&IdMap>) -> Result<NodeId> {
    match ids {
        Some(map) => map
            .resolve(token)
            .ok_or_else(|| Error::UnknownNode(token.to_owned())),
        None => token
            .parse::<NodeId>()
            .map_err(|_| Error::UnknownNode(token.to_owned())),
    }
}

/// External label of node `u`: its original string when remapped, else the decimal id.
pub fn node_label(u: NodeId, ids: Option<&IdMap>) -> String {
    match ids {
        Some(map) => map.label(u).to_owned(),
        None => u.to_string(),
    }
}
