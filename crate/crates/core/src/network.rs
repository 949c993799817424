//! Network coding instances: an acyclic multigraph whose input edges carry
//! the messages and whose output edges each demand one message.
//!
//! After validation the edges are held in canonical order: the `k` input
//! edges first (edge `i` carries message `i`), then the interior edges in
//! topological order, then the `d` output edges. Original edge ids are kept
//! for reporting and for matching code files.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::NetworkError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEdge {
    pub id: u64,
    pub tail: String,
    pub head: String,
}

/// On-disk network description. Edge ids may come in any order. `sources`
/// maps input edges to the message they carry; when it is empty the input
/// edges take messages `1..=k` in increasing id order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawNetwork {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub k: usize,
    pub vertices: Vec<String>,
    pub edges: Vec<RawEdge>,
    pub demands: BTreeMap<u64, usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sources: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    /// Id used in the source file.
    pub id: u64,
    pub tail: usize,
    pub head: usize,
}

/// `P(e)` together with the in-degree `p_e = |P(e)|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeParents {
    pub edge: u64,
    pub parents: Vec<u64>,
    pub in_degree: usize,
}

/// A validated, canonically ordered network coding instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkInstance {
    description: Option<String>,
    k: usize,
    vertices: Vec<String>,
    edges: Vec<Edge>,
    /// 0-based demanded message for output edges.
    demands: Vec<Option<usize>>,
    parents: Vec<Vec<usize>>,
    d: usize,
    by_id: HashMap<u64, usize>,
}

impl NetworkInstance {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn description(&self) -> Option<&str> {
        self.description.as_deref()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Original id of the edge at canonical position `i` (0-based).
    pub fn edge_id(&self, i: usize) -> u64 {
        self.edges[i].id
    }

    /// Canonical position of the edge with the given original id.
    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn parents(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub fn is_input(&self, i: usize) -> bool {
        i < self.k
    }

    pub fn is_output(&self, i: usize) -> bool {
        i >= self.m() - self.d
    }

    pub fn is_interior(&self, i: usize) -> bool {
        !self.is_input(i) && !self.is_output(i)
    }

    pub fn inputs(&self) -> std::ops::Range<usize> {
        0..self.k
    }

    pub fn outputs(&self) -> std::ops::Range<usize> {
        self.m() - self.d..self.m()
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        self.k..self.m() - self.d
    }

    /// Message (0-based) demanded by output edge `i`.
    pub fn demand(&self, i: usize) -> Option<usize> {
        self.demands[i]
    }

    pub fn edge_parents(&self) -> Vec<EdgeParents> {
        (0..self.m())
            .map(|i| EdgeParents {
                edge: self.edges[i].id,
                parents: self.parents[i].iter().map(|&p| self.edges[p].id).collect(),
                in_degree: self.parents[i].len(),
            })
            .collect()
    }

    /// Edges listed so that every edge follows all of its parents; ties go
    /// to the smaller original id.
    pub fn topological_order(&self) -> Vec<u64> {
        let m = self.m();
        let mut pending: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); m];
        for (i, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                children[p].push(i);
            }
        }
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
            (0..m).filter(|&i| pending[i] == 0).map(|i| Reverse((self.edges[i].id, i))).collect();
        let mut order = Vec::with_capacity(m);
        while let Some(Reverse((id, i))) = heap.pop() {
            order.push(id);
            for &c in &children[i] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    heap.push(Reverse((self.edges[c].id, c)));
                }
            }
        }
        order
    }

    /// Relabels edge ids to their canonical positions `1..=m`.
    pub fn canonical_reindex(&self) -> NetworkInstance {
        let mut out = self.clone();
        for (i, e) in out.edges.iter_mut().enumerate() {
            e.id = i as u64 + 1;
        }
        out.by_id = (0..out.m()).map(|i| (i as u64 + 1, i)).collect();
        out
    }

    pub fn to_raw(&self) -> RawNetwork {
        RawNetwork {
            description: self.description.clone(),
            k: self.k,
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| RawEdge { id: e.id, tail: self.vertices[e.tail].clone(), head: self.vertices[e.head].clone() })
                .collect(),
            demands: self.outputs().map(|i| (self.edges[i].id, self.demands[i].unwrap() + 1)).collect(),
            sources: self.inputs().map(|i| (self.edges[i].id, i + 1)).collect(),
        }
    }
}

impl Serialize for NetworkInstance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

impl<'de> Deserialize<'de> for NetworkInstance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawNetwork::deserialize(d)?;
        validate_network(&raw, false).map_err(serde::de::Error::custom)
    }
}

/// Checks every structural invariant and returns the instance in canonical
/// edge order. With `strict` set, the file's own ids must already put the
/// inputs at `1..=k` (by message) and the outputs at `m-d+1..=m`.
pub fn validate_network(raw: &RawNetwork, strict: bool) -> Result<NetworkInstance, NetworkError> {
    let k = raw.k;
    if k == 0 {
        return Err(NetworkError::NoMessages);
    }
    let mut vidx: HashMap<&str, usize> = HashMap::new();
    let mut vertices = Vec::new();
    for v in &raw.vertices {
        if !vidx.contains_key(v.as_str()) {
            vidx.insert(v, vertices.len());
            vertices.push(v.clone());
        }
    }
    let mut edges = Vec::with_capacity(raw.edges.len());
    let mut seen = HashMap::new();
    for e in &raw.edges {
        if seen.insert(e.id, edges.len()).is_some() {
            return Err(NetworkError::DuplicateEdgeId(e.id));
        }
        let tail = *vidx.get(e.tail.as_str()).ok_or_else(|| NetworkError::UnknownVertex(e.id, e.tail.clone()))?;
        let head = *vidx.get(e.head.as_str()).ok_or_else(|| NetworkError::UnknownVertex(e.id, e.head.clone()))?;
        edges.push(Edge { id: e.id, tail, head });
    }
    let nv = vertices.len();
    let mut indeg = vec![0usize; nv];
    let mut outdeg = vec![0usize; nv];
    let mut out_edges = vec![Vec::new(); nv];
    for (i, e) in edges.iter().enumerate() {
        indeg[e.head] += 1;
        outdeg[e.tail] += 1;
        out_edges[e.tail].push(i);
    }

    // Kahn on vertices.
    let mut pending = indeg.clone();
    let mut stack: Vec<usize> = (0..nv).filter(|&v| pending[v] == 0).collect();
    let mut visited = 0;
    while let Some(v) = stack.pop() {
        visited += 1;
        for &ei in &out_edges[v] {
            let h = edges[ei].head;
            pending[h] -= 1;
            if pending[h] == 0 {
                stack.push(h);
            }
        }
    }
    if visited != nv {
        return Err(NetworkError::CyclicGraph);
    }

    let is_input: Vec<bool> = edges.iter().map(|e| indeg[e.tail] == 0).collect();
    let is_output: Vec<bool> = edges.iter().map(|e| outdeg[e.head] == 0).collect();
    for (i, e) in edges.iter().enumerate() {
        if is_input[i] && is_output[i] {
            return Err(NetworkError::InputIsOutput(e.id));
        }
    }
    let mut inputs: Vec<usize> = (0..edges.len()).filter(|&i| is_input[i]).collect();
    if inputs.len() != k {
        return Err(NetworkError::InputCountMismatch { inputs: inputs.len(), k });
    }
    inputs.sort_by_key(|&i| edges[i].id);

    // Message carried by each input edge.
    let mut input_msg: HashMap<usize, usize> = HashMap::new();
    if raw.sources.is_empty() {
        for (msg, &i) in inputs.iter().enumerate() {
            input_msg.insert(i, msg);
        }
    } else {
        let mut used = vec![false; k];
        for (&id, &msg) in &raw.sources {
            let i = *seen.get(&id).ok_or(NetworkError::UnknownEdge(id))?;
            if !is_input[i] {
                return Err(NetworkError::SourceOnNonInputEdge(id));
            }
            if msg == 0 || msg > k {
                return Err(NetworkError::UnknownMessage(msg));
            }
            if std::mem::replace(&mut used[msg - 1], true) {
                return Err(NetworkError::DuplicateMessageSource(msg));
            }
            input_msg.insert(i, msg - 1);
        }
        if let Some(&i) = inputs.iter().find(|i| !input_msg.contains_key(i)) {
            return Err(NetworkError::MissingSource(edges[i].id));
        }
    }

    let mut demand: HashMap<usize, usize> = HashMap::new();
    for (&id, &msg) in &raw.demands {
        let i = *seen.get(&id).ok_or(NetworkError::UnknownEdge(id))?;
        if !is_output[i] {
            return Err(NetworkError::DemandOnNonOutputEdge(id));
        }
        if msg == 0 || msg > k {
            return Err(NetworkError::UnknownMessage(msg));
        }
        demand.insert(i, msg - 1);
    }
    let mut outputs: Vec<usize> = (0..edges.len()).filter(|&i| is_output[i]).collect();
    outputs.sort_by_key(|&i| edges[i].id);
    if let Some(&i) = outputs.iter().find(|i| !demand.contains_key(i)) {
        return Err(NetworkError::MissingDemand(edges[i].id));
    }
    let mut demanded = vec![false; k];
    for &msg in demand.values() {
        demanded[msg] = true;
    }
    if let Some(msg) = demanded.iter().position(|&b| !b) {
        return Err(NetworkError::DemandNotOnto(msg + 1));
    }

    let m = edges.len();
    let d = outputs.len();
    let interior: Vec<usize> = (0..m).filter(|&i| !is_input[i] && !is_output[i]).collect();

    // Does the file already follow the convention?
    let ids_are_positions = {
        let mut ids: Vec<u64> = edges.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids.iter().enumerate().all(|(p, &id)| id == p as u64 + 1)
    };
    let inputs_ok = inputs.iter().all(|&i| edges[i].id == input_msg[&i] as u64 + 1);
    let outputs_ok = outputs.iter().all(|&i| edges[i].id > (m - d) as u64);
    let file_canonical = ids_are_positions && inputs_ok && outputs_ok;
    if strict && !file_canonical {
        let why = if !ids_are_positions {
            "edge ids are not exactly 1..=m".to_string()
        } else if !inputs_ok {
            "input edges must be e_1..e_k, ordered by the message they carry".to_string()
        } else {
            format!("output edges must be e_{}..e_{}", m - d + 1, m)
        };
        return Err(NetworkError::BadIndexing(why));
    }

    let parents_of = |i: usize| -> Vec<usize> {
        let mut ps: Vec<usize> = (0..m).filter(|&j| edges[j].head == edges[i].tail).collect();
        ps.sort_by_key(|&j| edges[j].id);
        ps
    };

    let mut order: Vec<usize> = Vec::with_capacity(m);
    let mut by_msg = inputs.clone();
    by_msg.sort_by_key(|i| input_msg[i]);
    order.extend(&by_msg);
    if file_canonical {
        let mut mid = interior.clone();
        mid.sort_by_key(|&i| edges[i].id);
        order.extend(mid);
    } else {
        log::info!("reindexing edges to the input-first/output-last convention");
        // Kahn over interior edges, ties by original id.
        let interior_set: std::collections::HashSet<usize> = interior.iter().copied().collect();
        let mut pending: HashMap<usize, usize> = HashMap::new();
        let mut children: HashMap<usize, Vec<usize>> = HashMap::new();
        for &i in &interior {
            let ps: Vec<usize> = parents_of(i).into_iter().filter(|p| interior_set.contains(p)).collect();
            pending.insert(i, ps.len());
            for p in ps {
                children.entry(p).or_default().push(i);
            }
        }
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
            interior.iter().filter(|i| pending[i] == 0).map(|&i| Reverse((edges[i].id, i))).collect();
        while let Some(Reverse((_, i))) = heap.pop() {
            order.push(i);
            for &c in children.get(&i).map(Vec::as_slice).unwrap_or(&[]) {
                let p = pending.get_mut(&c).unwrap();
                *p -= 1;
                if *p == 0 {
                    heap.push(Reverse((edges[c].id, c)));
                }
            }
        }
    }
    order.extend(&outputs);
    debug_assert_eq!(order.len(), m);

    let mut pos = vec![0usize; m];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let parents: Vec<Vec<usize>> = order
        .iter()
        .map(|&i| {
            let mut ps: Vec<usize> = parents_of(i).into_iter().map(|j| pos[j]).collect();
            ps.sort_unstable();
            ps
        })
        .collect();
    let demands: Vec<Option<usize>> = order.iter().map(|i| demand.get(i).copied()).collect();
    let edges: Vec<Edge> = order.iter().map(|&i| edges[i].clone()).collect();
    let by_id = edges.iter().enumerate().map(|(p, e)| (e.id, p)).collect();

    Ok(NetworkInstance { description: raw.description.clone(), k, vertices, edges, demands, parents, d, by_id })
}
