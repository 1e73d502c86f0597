//! Transaction multigraph and two-layer neighbourhood extraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use crate::ingest::TransactionRecord;

pub type VertexId = u32;
pub type EdgeId = u32;
pub type SymbolId = u16;

/// Default total-degree limit above which a neighbour is not expanded.
pub const DEFAULT_HUB_CAP: usize = 10_000;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("address `{0}` is not in the transaction graph")]
    UnknownAddress(String),
    #[error("hub cap must be positive")]
    InvalidHubCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: VertexId,
    pub to: VertexId,
    pub tx_hash: String,
    pub amount: f64,
    pub amount_usdt: f64,
    pub gas_fee: f64,
    pub coin: SymbolId,
    pub network: SymbolId,
    pub timestamp: i64,
}

/// Immutable directed multigraph over addresses.
///
/// Vertex ids follow lexicographic address order and edges are stored in
/// `(timestamp, tx_hash, ...)` order, so two graphs built from the same
/// records in any order are identical.
#[derive(Debug, Clone, Default)]
pub struct TransactionGraph {
    addresses: Vec<String>,
    index: HashMap<String, VertexId>,
    symbols: Vec<String>,
    edges: Vec<Edge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
}

impl TransactionGraph {
    pub fn build(records: &[TransactionRecord]) -> Self {
        let addresses: Vec<String> = records
            .iter()
            .flat_map(|r| [&r.input_address, &r.output_address])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect();
        let index: HashMap<String, VertexId> = addresses
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i as VertexId))
            .collect();
        let symbols: Vec<String> = records
            .iter()
            .flat_map(|r| [&r.coin, &r.network])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .cloned()
            .collect();
        assert!(symbols.len() <= SymbolId::MAX as usize, "too many coin/network symbols");
        let sym = |s: &str| symbols.binary_search_by(|x| x.as_str().cmp(s)).unwrap() as SymbolId;

        let mut edges: Vec<Edge> = records
            .iter()
            .map(|r| Edge {
                from: index[&r.input_address],
                to: index[&r.output_address],
                tx_hash: r.tx_hash.clone(),
                amount: r.amount,
                amount_usdt: r.amount_usdt,
                gas_fee: r.gas_fee,
                coin: sym(&r.coin),
                network: sym(&r.network),
                timestamp: r.timestamp,
            })
            .collect();
        edges.sort_by(|a, b| {
            (a.timestamp, &a.tx_hash, a.from, a.to, a.coin, a.network)
                .cmp(&(b.timestamp, &b.tx_hash, b.from, b.to, b.coin, b.network))
                .then_with(|| a.amount.total_cmp(&b.amount))
                .then_with(|| a.amount_usdt.total_cmp(&b.amount_usdt))
                .then_with(|| a.gas_fee.total_cmp(&b.gas_fee))
        });

        let mut out_adj = vec![Vec::new(); addresses.len()];
        let mut in_adj = vec![Vec::new(); addresses.len()];
        for (id, e) in edges.iter().enumerate() {
            out_adj[e.from as usize].push(id as EdgeId);
            in_adj[e.to as usize].push(id as EdgeId);
        }

        TransactionGraph {
            addresses,
            index,
            symbols,
            edges,
            out_adj,
            in_adj,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.addresses.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, address: &str) -> Option<VertexId> {
        self.index.get(address).copied()
    }

    pub fn address(&self, v: VertexId) -> &str {
        &self.addresses[v as usize]
    }

    pub fn addresses(&self) -> &[String] {
        &self.addresses
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn out_edge_ids(&self, v: VertexId) -> &[EdgeId] {
        &self.out_adj[v as usize]
    }

    pub fn in_edge_ids(&self, v: VertexId) -> &[EdgeId] {
        &self.in_adj[v as usize]
    }

    pub fn out_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.out_adj[v as usize].iter().map(|&e| self.edge(e))
    }

    pub fn in_edges(&self, v: VertexId) -> impl Iterator<Item = &Edge> + '_ {
        self.in_adj[v as usize].iter().map(|&e| self.edge(e))
    }

    pub fn out_degree(&self, v: VertexId) -> usize {
        self.out_adj[v as usize].len()
    }

    pub fn in_degree(&self, v: VertexId) -> usize {
        self.in_adj[v as usize].len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.in_degree(v) + self.out_degree(v)
    }

    pub fn symbol(&self, id: SymbolId) -> &str {
        &self.symbols[id as usize]
    }

    pub fn symbol_id(&self, s: &str) -> Option<SymbolId> {
        self.symbols
            .binary_search_by(|x| x.as_str().cmp(s))
            .ok()
            .map(|i| i as SymbolId)
    }
}

/// Addresses within two hops of a target, partitioned by signed level.
///
/// Negative levels are fund sources, positive levels fund destinations. Each
/// address sits at exactly one level: the smallest `|level|` at which it is
/// reached, with the inflow side winning ties.
#[derive(Debug, Clone)]
pub struct LayeredSubgraph<'g> {
    graph: &'g TransactionGraph,
    target: VertexId,
    levels: [Vec<VertexId>; 5],
    level_of: HashMap<VertexId, i8>,
    incident_edges: Vec<EdgeId>,
    truncated_hubs: Vec<VertexId>,
}

impl<'g> LayeredSubgraph<'g> {
    pub fn graph(&self) -> &'g TransactionGraph {
        self.graph
    }

    pub fn target(&self) -> VertexId {
        self.target
    }

    /// Sorted vertex ids at `level` in `-2..=2`.
    pub fn level(&self, level: i8) -> &[VertexId] {
        assert!((-2..=2).contains(&level), "level {level} out of range");
        &self.levels[(level + 2) as usize]
    }

    pub fn level_of(&self, v: VertexId) -> Option<i8> {
        self.level_of.get(&v).copied()
    }

    /// Cascade edges: `-2 -> -1`, `-1 -> 0`, `0 -> 1` and `1 -> 2`.
    pub fn incident_edges(&self) -> &[EdgeId] {
        &self.incident_edges
    }

    pub fn truncated_hubs(&self) -> &[VertexId] {
        &self.truncated_hubs
    }

    pub fn is_truncated(&self, v: VertexId) -> bool {
        self.truncated_hubs.binary_search(&v).is_ok()
    }

    pub fn level_addresses(&self, level: i8) -> BTreeSet<&'g str> {
        self.level(level)
            .iter()
            .map(|&v| self.graph.address(v))
            .collect()
    }

    pub fn dump(&self) -> SubgraphDump {
        let g = self.graph;
        SubgraphDump {
            target: g.address(self.target).to_string(),
            levels: (-2..=2)
                .map(|l| {
                    (
                        l.to_string(),
                        self.level(l).iter().map(|&v| g.address(v).to_string()).collect(),
                    )
                })
                .collect(),
            truncated_hubs: self
                .truncated_hubs
                .iter()
                .map(|&v| g.address(v).to_string())
                .collect(),
            edges: self
                .incident_edges
                .iter()
                .map(|&id| {
                    let e = g.edge(id);
                    EdgeDump {
                        tx_hash: e.tx_hash.clone(),
                        from: g.address(e.from).to_string(),
                        to: g.address(e.to).to_string(),
                        coin: g.symbol(e.coin).to_string(),
                        amount_usdt: e.amount_usdt,
                        timestamp: e.timestamp,
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubgraphDump {
    pub target: String,
    pub levels: BTreeMap<String, Vec<String>>,
    pub truncated_hubs: Vec<String>,
    pub edges: Vec<EdgeDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeDump {
    pub tx_hash: String,
    pub from: String,
    pub to: String,
    pub coin: String,
    pub amount_usdt: f64,
    pub timestamp: i64,
}

/// Extracts the two-layer neighbourhood of `address`.
///
/// Level-1 neighbours (on either side) whose total degree exceeds `hub_cap`
/// are kept but not expanded. Level-2 addresses above the cap are also listed
/// in `truncated_hubs`; their own transfers are left out of fusion.
pub fn extract_layers<'g>(
    graph: &'g TransactionGraph,
    address: &str,
    hub_cap: usize,
) -> Result<LayeredSubgraph<'g>, GraphError> {
    if hub_cap == 0 {
        return Err(GraphError::InvalidHubCap);
    }
    let target = graph
        .vertex(address)
        .ok_or_else(|| GraphError::UnknownAddress(address.to_string()))?;
    Ok(layers_of(graph, target, hub_cap))
}

pub fn layers_of(graph: &TransactionGraph, target: VertexId, hub_cap: usize) -> LayeredSubgraph<'_> {
    let mut level_of: HashMap<VertexId, i8> = HashMap::new();
    level_of.insert(target, 0);

    let reach = |candidates: Vec<VertexId>, level: i8, level_of: &mut HashMap<VertexId, i8>| {
        let mut found: Vec<VertexId> = candidates
            .into_iter()
            .filter(|v| !level_of.contains_key(v))
            .collect();
        found.sort_unstable();
        found.dedup();
        for &v in &found {
            level_of.insert(v, level);
        }
        found
    };

    let in1 = reach(graph.in_edges(target).map(|e| e.from).collect(), -1, &mut level_of);
    let out1 = reach(graph.out_edges(target).map(|e| e.to).collect(), 1, &mut level_of);

    let is_hub = |v: VertexId| graph.degree(v) > hub_cap;
    let in2 = reach(
        in1.iter()
            .filter(|&&v| !is_hub(v))
            .flat_map(|&v| graph.in_edges(v).map(|e| e.from))
            .collect(),
        -2,
        &mut level_of,
    );
    let out2 = reach(
        out1.iter()
            .filter(|&&v| !is_hub(v))
            .flat_map(|&v| graph.out_edges(v).map(|e| e.to))
            .collect(),
        2,
        &mut level_of,
    );

    let mut truncated_hubs: Vec<VertexId> = [&in1, &out1, &in2, &out2]
        .into_iter()
        .flatten()
        .copied()
        .filter(|&v| is_hub(v))
        .collect();
    truncated_hubs.sort_unstable();

    let at = |v: VertexId| level_of.get(&v).copied();
    let mut incident: Vec<EdgeId> = Vec::new();
    incident.extend(
        graph
            .in_edge_ids(target)
            .iter()
            .filter(|&&e| at(graph.edge(e).from) == Some(-1)),
    );
    incident.extend(
        graph
            .out_edge_ids(target)
            .iter()
            .filter(|&&e| at(graph.edge(e).to) == Some(1)),
    );
    for &v in in1.iter().filter(|&&v| !is_hub(v)) {
        incident.extend(
            graph
                .in_edge_ids(v)
                .iter()
                .filter(|&&e| at(graph.edge(e).from) == Some(-2)),
        );
    }
    for &v in out1.iter().filter(|&&v| !is_hub(v)) {
        incident.extend(
            graph
                .out_edge_ids(v)
                .iter()
                .filter(|&&e| at(graph.edge(e).to) == Some(2)),
        );
    }
    incident.sort_unstable();
    incident.dedup();

    LayeredSubgraph {
        graph,
        target,
        levels: [in2, in1, vec![target], out1, out2],
        level_of,
        incident_edges: incident,
        truncated_hubs,
    }
}
