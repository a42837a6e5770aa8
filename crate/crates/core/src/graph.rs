//! Signed directed weighted graphs with cached per-node positive and
//! negative in-strengths, the signed Laplacian, observability transforms and
//! edge-list ingestion.
//!
//! Conventions: an arc `(src, dst, w)` means influence flows `src -> dst`
//! with strength `|w|` and sign `sign(w)`. Rating files are reversed on
//! load: a rating row `(rater, ratee, s)` becomes the arc `ratee -> rater`,
//! because a rater copies (or opposes) the opinion of the account they rated.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::sparse::Csr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub w: f64,
}

/// How an optimizer observes the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    /// Every weight becomes `|w|` (negative ties mistaken for positive).
    MirrorPositive,
    /// Negative edges are deleted (negative ties invisible).
    DropNegative,
    /// An equal copy.
    Identity,
}

#[derive(Debug, Clone)]
pub struct SignedGraph {
    n: usize,
    edges: Vec<Edge>, // sorted by (src, dst); unique ordered pairs; w != 0
    in_offsets: Vec<usize>,
    in_src: Vec<u32>,
    in_w: Vec<f64>,
    pos_in: Vec<f64>,
    neg_in: Vec<f64>,
    symmetric: bool,
    labels: Vec<String>,
}

impl PartialEq for SignedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges && self.labels == other.labels
    }
}

/// Result of loading an edge list, with per-file bookkeeping.
#[derive(Debug, Clone)]
pub struct EdgeListLoad {
    pub graph: SignedGraph,
    /// Rows that re-specified an existing (rater, ratee) pair; last kept.
    pub duplicate_rows: usize,
    /// Rows rating oneself, dropped.
    pub self_loop_rows: usize,
}

impl SignedGraph {
    /// Builds a graph from influence arcs. Arcs must be free of self-loops
    /// and duplicate ordered pairs, with nonzero weights.
    pub fn from_arcs(n: usize, mut arcs: Vec<Edge>, labels: Option<Vec<String>>) -> Result<Self> {
        arcs.sort_unstable_by_key(|e| (e.src, e.dst));
        for win in arcs.windows(2) {
            if win[0].src == win[1].src && win[0].dst == win[1].dst {
                return Err(Error::InvalidInput(format!(
                    "duplicate arc ({}, {})",
                    win[0].src, win[0].dst
                )));
            }
        }
        for e in &arcs {
            if e.src == e.dst {
                return Err(Error::InvalidInput(format!("self-loop at node {}", e.src)));
            }
            if e.w == 0.0 || !e.w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "arc ({}, {}) has weight {}",
                    e.src, e.dst, e.w
                )));
            }
            if e.src as usize >= n || e.dst as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "arc ({}, {}) out of range for n = {n}",
                    e.src, e.dst
                )));
            }
        }
        let labels = match labels {
            Some(l) => {
                if l.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} labels for {n} nodes",
                        l.len()
                    )));
                }
                l
            }
            None => (0..n).map(|i| i.to_string()).collect(),
        };

        let mut in_offsets = vec![0usize; n + 1];
        for e in &arcs {
            in_offsets[e.dst as usize + 1] += 1;
        }
        for i in 0..n {
            in_offsets[i + 1] += in_offsets[i];
        }
        let mut cursor = in_offsets.clone();
        let mut in_src = vec![0u32; arcs.len()];
        let mut in_w = vec![0.0f64; arcs.len()];
        for e in &arcs {
            let slot = cursor[e.dst as usize];
            in_src[slot] = e.src;
            in_w[slot] = e.w;
            cursor[e.dst as usize] += 1;
        }
        let mut pos_in = vec![0.0f64; n];
        let mut neg_in = vec![0.0f64; n];
        for e in &arcs {
            if e.w > 0.0 {
                pos_in[e.dst as usize] += e.w;
            } else {
                neg_in[e.dst as usize] += -e.w;
            }
        }
        let symmetric = {
            let map: HashMap<(u32, u32), f64> =
                arcs.iter().map(|e| ((e.src, e.dst), e.w)).collect();
            arcs.iter()
                .all(|e| map.get(&(e.dst, e.src)) == Some(&e.w))
        };
        Ok(SignedGraph {
            n,
            edges: arcs,
            in_offsets,
            in_src,
            in_w,
            pos_in,
            neg_in,
            symmetric,
            labels,
        })
    }

    /// Builds a graph from rating rows `(rater, ratee, rating)`. Influence
    /// flows opposite to the rating: the arc becomes `ratee -> rater`.
    /// Duplicate (rater, ratee) pairs keep the last occurrence; self-ratings
    /// are dropped. Node ids are compacted in first-seen order.
    pub fn from_edge_list<S: AsRef<str>>(
        rows: &[(S, S, f64)],
        directed: bool,
    ) -> Result<EdgeListLoad> {
        if rows.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let mut ids: HashMap<String, u32> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        fn intern(tok: &str, ids: &mut HashMap<String, u32>, labels: &mut Vec<String>) -> u32 {
            if let Some(&id) = ids.get(tok) {
                return id;
            }
            let id = labels.len() as u32;
            ids.insert(tok.to_string(), id);
            labels.push(tok.to_string());
            id
        }
        let mut parsed: Vec<(u32, u32, f64)> = Vec::with_capacity(rows.len());
        let mut self_loop_rows = 0usize;
        for (idx, (rater, ratee, rating)) in rows.iter().enumerate() {
            let rater = rater.as_ref().trim();
            let ratee = ratee.as_ref().trim();
            if *rating == 0.0 {
                return Err(Error::ZeroRating {
                    row: idx + 1,
                    line: format!("{rater},{ratee},{rating}"),
                });
            }
            if !rating.is_finite() {
                return Err(Error::MalformedRow {
                    row: idx + 1,
                    line: format!("{rater},{ratee},{rating}"),
                });
            }
            if rater == ratee {
                self_loop_rows += 1;
                continue;
            }
            let a = intern(rater, &mut ids, &mut labels);
            let b = intern(ratee, &mut ids, &mut labels);
            parsed.push((a, b, *rating));
        }
        if parsed.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let n = labels.len();
        let mut duplicate_rows = 0usize;
        let mut arcs: Vec<Edge> = Vec::with_capacity(parsed.len());
        if directed {
            // keyed by ordered (rater, ratee)
            let mut kept: HashMap<(u32, u32), usize> = HashMap::new();
            for &(rater, ratee, w) in &parsed {
                let arc = Edge {
                    src: ratee,
                    dst: rater,
                    w,
                };
                match kept.entry((rater, ratee)) {
                    std::collections::hash_map::Entry::Occupied(slot) => {
                        duplicate_rows += 1;
                        arcs[*slot.get()] = arc;
                    }
                    std::collections::hash_map::Entry::Vacant(slot) => {
                        slot.insert(arcs.len());
                        arcs.push(arc);
                    }
                }
            }
        } else {
            // undirected: the unordered pair carries one weight, stored as
            // two mirrored arcs; later rows supersede
            let mut kept: HashMap<(u32, u32), f64> = HashMap::new();
            for &(rater, ratee, w) in &parsed {
                let key = (rater.min(ratee), rater.max(ratee));
                if kept.insert(key, w).is_some() {
                    duplicate_rows += 1;
                }
            }
            let mut pairs: Vec<((u32, u32), f64)> = kept.into_iter().collect();
            pairs.sort_unstable_by_key(|&(k, _)| k);
            for ((a, b), w) in pairs {
                arcs.push(Edge { src: a, dst: b, w });
                arcs.push(Edge { src: b, dst: a, w });
            }
        }
        let graph = SignedGraph::from_arcs(n, arcs, Some(labels))?;
        Ok(EdgeListLoad {
            graph,
            duplicate_rows,
            self_loop_rows,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn negative_edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.w < 0.0).count()
    }

    /// Incoming arcs of `i` as `(source, weight)`.
    pub fn incoming(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.in_offsets[i];
        let hi = self.in_offsets[i + 1];
        self.in_src[lo..hi]
            .iter()
            .zip(&self.in_w[lo..hi])
            .map(|(&s, &w)| (s as usize, w))
    }

    /// `k_a`: total positive incoming strength per node.
    pub fn pos_in_strength(&self) -> &[f64] {
        &self.pos_in
    }

    /// `k_b`: total (absolute) negative incoming strength per node.
    pub fn neg_in_strength(&self) -> &[f64] {
        &self.neg_in
    }

    /// Per-node `(k_a, k_b)` pairs, straight from the caches.
    pub fn degree_profile(&self) -> Vec<(f64, f64)> {
        (0..self.n)
            .map(|i| (self.pos_in[i], self.neg_in[i]))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Count of nodes carrying at least one negative incident tie.
    pub fn nodes_with_negative_ties(&self) -> usize {
        self.neg_in.iter().filter(|&&k| k > 0.0).count()
    }

    pub fn laplacian(&self) -> SignedLaplacian {
        let mut triplets = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            triplets.push((e.dst, e.src, -e.w));
        }
        let off = Csr::from_triplets(self.n, &triplets);
        let off_t = off.transpose();
        let diag: Vec<f64> = (0..self.n).map(|i| self.pos_in[i] + self.neg_in[i]).collect();
        SignedLaplacian { diag, off, off_t }
    }

    pub fn transform(&self, mode: Transform) -> SignedGraph {
        match mode {
            Transform::Identity => self.clone(),
            Transform::MirrorPositive => {
                let arcs = self
                    .edges
                    .iter()
                    .map(|e| Edge {
                        src: e.src,
                        dst: e.dst,
                        w: e.w.abs(),
                    })
                    .collect();
                SignedGraph::from_arcs(self.n, arcs, Some(self.labels.clone()))
                    .expect("mirroring preserves validity")
            }
            Transform::DropNegative => {
                let arcs = self.edges.iter().filter(|e| e.w > 0.0).copied().collect();
                SignedGraph::from_arcs(self.n, arcs, Some(self.labels.clone()))
                    .expect("dropping edges preserves validity")
            }
        }
    }

    /// Induced subgraph on the largest weakly connected component (edge
    /// directions ignored for connectivity only). Node ids are compacted in
    /// ascending order of the old ids; labels carry the mapping.
    pub fn largest_connected_component(&self) -> SignedGraph {
        if self.n == 0 {
            return self.clone();
        }
        // undirected adjacency for the traversal
        let mut adj_offsets = vec![0usize; self.n + 1];
        for e in &self.edges {
            adj_offsets[e.src as usize + 1] += 1;
            adj_offsets[e.dst as usize + 1] += 1;
        }
        for i in 0..self.n {
            adj_offsets[i + 1] += adj_offsets[i];
        }
        let mut cursor = adj_offsets.clone();
        let mut adj = vec![0u32; self.edges.len() * 2];
        for e in &self.edges {
            adj[cursor[e.src as usize]] = e.dst;
            cursor[e.src as usize] += 1;
            adj[cursor[e.dst as usize]] = e.src;
            cursor[e.dst as usize] += 1;
        }
        let mut comp = vec![u32::MAX; self.n];
        let mut best_comp = 0u32;
        let mut best_size = 0usize;
        let mut next = 0u32;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if comp[start] != u32::MAX {
                continue;
            }
            let id = next;
            next += 1;
            let mut size = 0usize;
            stack.push(start as u32);
            comp[start] = id;
            while let Some(v) = stack.pop() {
                size += 1;
                for k in adj_offsets[v as usize]..adj_offsets[v as usize + 1] {
                    let u = adj[k] as usize;
                    if comp[u] == u32::MAX {
                        comp[u] = id;
                        stack.push(u as u32);
                    }
                }
            }
            if size > best_size {
                best_size = size;
                best_comp = id;
            }
        }
        let mut remap = vec![u32::MAX; self.n];
        let mut labels = Vec::with_capacity(best_size);
        let mut next_id = 0u32;
        for i in 0..self.n {
            if comp[i] == best_comp {
                remap[i] = next_id;
                labels.push(self.labels[i].clone());
                next_id += 1;
            }
        }
        let arcs: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| comp[e.src as usize] == best_comp && comp[e.dst as usize] == best_comp)
            .map(|e| Edge {
                src: remap[e.src as usize],
                dst: remap[e.dst as usize],
                w: e.w,
            })
            .collect();
        SignedGraph::from_arcs(best_size, arcs, Some(labels))
            .expect("induced subgraph preserves validity")
    }

    /// Serializes to the rating CSV dialect (`SOURCE,TARGET,RATING`), one
    /// row per influence arc with the direction reversed back to a rating.
    /// Rows are ordered by the (source, target) labels, so the output is a
    /// pure function of the labeled graph and survives reload cycles.
    pub fn to_edge_csv(&self) -> String {
        let mut rows: Vec<(&str, &str, f64)> = self
            .edges
            .iter()
            .map(|e| (
                self.labels[e.dst as usize].as_str(),
                self.labels[e.src as usize].as_str(),
                e.w,
            ))
            .collect();
        rows.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = String::new();
        for (s, t, w) in rows {
            let _ = writeln!(out, "{s},{t},{w}");
        }
        out
    }

    /// Stable digest of the structure, for bit-identical reproducibility
    /// checks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(&(self.n as u64).to_le_bytes());
        for e in &self.edges {
            eat(&e.src.to_le_bytes());
            eat(&e.dst.to_le_bytes());
            eat(&e.w.to_bits().to_le_bytes());
        }
        h
    }
}

/// Parses the `SOURCE,TARGET,RATING[,TIMESTAMP]` dialect. A header line is
/// detected by a non-numeric first field and skipped. Timestamps are ignored.
pub fn parse_edge_csv(text: &str) -> Result<Vec<(String, String, f64)>> {
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let src = fields.next().unwrap_or_default();
        let dst = fields.next();
        let rating = fields.next();
        if idx == 0 && rating.map(|r| r.parse::<f64>().is_err()).unwrap_or(true) {
            // header row
            continue;
        }
        let (dst, rating) = match (dst, rating) {
            (Some(d), Some(r)) => (d, r),
            _ => {
                return Err(Error::MalformedRow {
                    row: idx + 1,
                    line: line.to_string(),
                })
            }
        };
        let rating: f64 = rating.parse().map_err(|_| Error::MalformedRow {
            row: idx + 1,
            line: line.to_string(),
        })?;
        rows.push((src.to_string(), dst.to_string(), rating));
    }
    if rows.is_empty() {
        return Err(Error::EmptyEdgeList);
    }
    Ok(rows)
}

/// Reads an edge CSV from disk and assembles the signed influence graph.
pub fn load_edge_csv(path: &std::path::Path, directed: bool) -> Result<EdgeListLoad> {
    let text = std::fs::read_to_string(path)?;
    let rows = parse_edge_csv(&text)?;
    SignedGraph::from_edge_list(&rows, directed)
}

/// Signed Laplacian `L` with `L_ii = k_a_i + k_b_i` and `L_ij = -w_ji`,
/// split into its diagonal and an off-diagonal sparse part (plus the
/// transpose of the latter for adjoint solves).
#[derive(Debug, Clone)]
pub struct SignedLaplacian {
    pub diag: Vec<f64>,
    pub off: Csr,
    pub off_t: Csr,
}

impl SignedLaplacian {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        let mut m = self.off.to_dense();
        for i in 0..n {
            m[i][i] += self.diag[i];
        }
        m
    }
}
