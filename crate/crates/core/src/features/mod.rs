//! Per-address feature vectors built from two-layer subgraphs.
//!
//! Every vector has 75 slots in a fixed order:
//!
//! | indices | group   | contents |
//! |---------|---------|----------|
//! | 0..7    | time    | `first_gas_time`, `first_tx_time`, `first_activity_time`, `interval_tx_gas`, `interval_activity_tx`, `interval_activity_gas`, `active_duration` |
//! | 7..67   | amount  | direction (`in`, `out`) x series x statistic (`min`, `max`, `avg`, `median`, `var`) |
//! | 67..75  | network | `in_degree`, `out_degree`, `layer1_in_addrs`, `layer1_out_addrs`, `layer2_in_addrs`, `layer2_out_addrs`, `coin_count`, `network_count` |
//!
//! The six amount series per direction, in order, are the target's own USDT
//! amounts, its own native-coin amounts, its own gas fees, the USDT amounts
//! fused through level 1, the USDT amounts fused through level 2, and the
//! per-counterparty USDT totals. Amount slot `i` for direction `d`, series
//! `s` and statistic `k` is `7 + 30 d + 5 s + k`.
//!
//! Time features come straight from the target's own transfers. A lifecycle
//! event that never happened (no gas receipt, no activity) is encoded as
//! `-1`, as is every interval that involves it.

mod stats;
mod table;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::sync::LazyLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::{layers_of, Edge, LayeredSubgraph, SymbolId, TransactionGraph, VertexId};

pub use stats::{stats5, Stats5};
pub use table::{
    feature_manifest, read_feature_csv, write_feature_csv, FeatureMatrix, FeatureRow, TableError,
};

pub const TIME_COUNT: usize = 7;
pub const AMOUNT_COUNT: usize = 60;
pub const NETWORK_COUNT: usize = 8;
pub const FEATURE_COUNT: usize = TIME_COUNT + AMOUNT_COUNT + NETWORK_COUNT;

/// Missing lifecycle events and intervals over them.
pub const MISSING: i64 = -1;

pub const TIME_NAMES: [&str; TIME_COUNT] = [
    "first_gas_time",
    "first_tx_time",
    "first_activity_time",
    "interval_tx_gas",
    "interval_activity_tx",
    "interval_activity_gas",
    "active_duration",
];

pub const NETWORK_NAMES: [&str; NETWORK_COUNT] = [
    "in_degree",
    "out_degree",
    "layer1_in_addrs",
    "layer1_out_addrs",
    "layer2_in_addrs",
    "layer2_out_addrs",
    "coin_count",
    "network_count",
];

pub const SERIES_NAMES: [&str; 6] = [
    "level0_usdt",
    "level0_native",
    "level0_gas",
    "fused_level1_usdt",
    "fused_level2_usdt",
    "counterparty_usdt_totals",
];

pub const STAT_NAMES: [&str; 5] = ["min", "max", "avg", "median", "var"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In = 0,
    Out = 1,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::In, Direction::Out];

    pub fn prefix(self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Series {
    Level0Usdt = 0,
    Level0Native,
    Level0Gas,
    FusedLevel1Usdt,
    FusedLevel2Usdt,
    CounterpartyTotals,
}

impl Series {
    pub const ALL: [Series; 6] = [
        Series::Level0Usdt,
        Series::Level0Native,
        Series::Level0Gas,
        Series::FusedLevel1Usdt,
        Series::FusedLevel2Usdt,
        Series::CounterpartyTotals,
    ];
}

pub fn amount_index(direction: Direction, series: Series, stat: usize) -> usize {
    assert!(stat < 5);
    TIME_COUNT + 30 * direction as usize + 5 * series as usize + stat
}

static FEATURE_NAMES: LazyLock<Vec<String>> = LazyLock::new(|| {
    let mut names: Vec<String> = TIME_NAMES.iter().map(|s| s.to_string()).collect();
    for d in Direction::BOTH {
        for s in SERIES_NAMES {
            for st in STAT_NAMES {
                names.push(format!("{}_{s}_{st}", d.prefix()));
            }
        }
    }
    names.extend(NETWORK_NAMES.iter().map(|s| s.to_string()));
    names
});

/// The canonical 75 feature names, index-aligned with [`FeatureVector`].
pub fn feature_names() -> &'static [String] {
    &FEATURE_NAMES
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("{component} has {got} values, expected {expected}")]
    ArityMismatch {
        component: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("candidate `{0}` has no transactions in the graph")]
    UnknownAddress(String),
    #[error("hub cap must be positive")]
    InvalidHubCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractConfig {
    pub hub_cap: usize,
    /// Network name to the symbol of its native (gas) coin.
    pub native_coins: BTreeMap<String, String>,
    /// Transfers to these addresses count as activity participation.
    pub activity_addresses: BTreeSet<String>,
}

pub fn default_native_coins() -> BTreeMap<String, String> {
    [
        ("ETH", "ETH"),
        ("BSC", "BNB"),
        ("POLYGON", "MATIC"),
        ("ARBITRUM", "ETH"),
        ("OPTIMISM", "ETH"),
        ("BASE", "ETH"),
        ("AVAX", "AVAX"),
    ]
    .into_iter()
    .map(|(n, c)| (n.to_string(), c.to_string()))
    .collect()
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            hub_cap: crate::graph::DEFAULT_HUB_CAP,
            native_coins: default_native_coins(),
            activity_addresses: BTreeSet::new(),
        }
    }
}

/// [`ExtractConfig`] resolved against one graph's ids.
#[derive(Debug, Clone)]
pub struct FeatureContext<'g> {
    graph: &'g TransactionGraph,
    hub_cap: usize,
    native: HashMap<SymbolId, SymbolId>,
    activity: HashSet<VertexId>,
}

impl<'g> FeatureContext<'g> {
    pub fn new(graph: &'g TransactionGraph, config: &ExtractConfig) -> Self {
        let native = config
            .native_coins
            .iter()
            .filter_map(|(net, coin)| Some((graph.symbol_id(net)?, graph.symbol_id(coin)?)))
            .collect();
        let activity = config
            .activity_addresses
            .iter()
            .filter_map(|a| graph.vertex(a))
            .collect();
        FeatureContext {
            graph,
            hub_cap: config.hub_cap,
            native,
            activity,
        }
    }

    pub fn is_native(&self, e: &Edge) -> bool {
        self.native.get(&e.network) == Some(&e.coin)
    }

    pub fn is_activity(&self, v: VertexId) -> bool {
        self.activity.contains(&v)
    }

    pub fn graph(&self) -> &'g TransactionGraph {
        self.graph
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeFeatures {
    pub first_gas_time: i64,
    pub first_tx_time: i64,
    pub first_activity_time: i64,
    pub interval_tx_gas: i64,
    pub interval_activity_tx: i64,
    pub interval_activity_gas: i64,
    pub active_duration: i64,
}

impl TimeFeatures {
    pub fn to_array(self) -> [f64; TIME_COUNT] {
        [
            self.first_gas_time,
            self.first_tx_time,
            self.first_activity_time,
            self.interval_tx_gas,
            self.interval_activity_tx,
            self.interval_activity_gas,
            self.active_duration,
        ]
        .map(|v| v as f64)
    }
}

fn interval(later: i64, earlier: i64) -> i64 {
    if later == MISSING || earlier == MISSING {
        MISSING
    } else {
        later - earlier
    }
}

/// Lifecycle timestamps and intervals of the subgraph's target.
///
/// A gas receipt is an incoming transfer of the network's native coin from
/// another address.
pub fn compute_time_features(subgraph: &LayeredSubgraph<'_>, ctx: &FeatureContext<'_>) -> TimeFeatures {
    let g = subgraph.graph();
    let a = subgraph.target();

    let first_gas = g
        .in_edges(a)
        .find(|e| e.from != a && ctx.is_native(e))
        .map_or(MISSING, |e| e.timestamp);
    let first_activity = g
        .out_edges(a)
        .find(|e| ctx.is_activity(e.to))
        .map_or(MISSING, |e| e.timestamp);
    let (first, last) = g
        .in_edges(a)
        .chain(g.out_edges(a))
        .fold(None, |acc: Option<(i64, i64)>, e| {
            Some(match acc {
                None => (e.timestamp, e.timestamp),
                Some((lo, hi)) => (lo.min(e.timestamp), hi.max(e.timestamp)),
            })
        })
        .unwrap_or((MISSING, MISSING));

    TimeFeatures {
        first_gas_time: first_gas,
        first_tx_time: first,
        first_activity_time: first_activity,
        interval_tx_gas: interval(first, first_gas),
        interval_activity_tx: interval(first_activity, first),
        interval_activity_gas: interval(first_activity, first_gas),
        active_duration: if first == MISSING { 0 } else { last - first },
    }
}

/// USDT amount arrays merged inward from the outer levels, one side.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusedSeries {
    /// Target's own transfers plus level-1 → level-2 cascade transfers.
    pub level1: Vec<f64>,
    /// `level1` plus the level-2 addresses' own transfers.
    pub level2: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusedAmounts {
    pub inflow: FusedSeries,
    pub outflow: FusedSeries,
}

impl FusedAmounts {
    pub fn side(&self, d: Direction) -> &FusedSeries {
        match d {
            Direction::In => &self.inflow,
            Direction::Out => &self.outflow,
        }
    }
}

/// Propagates amount arrays towards the target by concatenation.
///
/// On the outflow side, each expanded level-1 address contributes its
/// transfers into level 2, and each level-2 address (unless it is a capped
/// hub) contributes all of its outgoing transfers. The inflow side mirrors
/// this with incoming transfers.
pub fn propagate_and_fuse(subgraph: &LayeredSubgraph<'_>) -> FusedAmounts {
    let g = subgraph.graph();
    let a = subgraph.target();

    let side = |d: Direction| {
        let own: Box<dyn Iterator<Item = &Edge>> = match d {
            Direction::In => Box::new(g.in_edges(a)),
            Direction::Out => Box::new(g.out_edges(a)),
        };
        let mut level1: Vec<f64> = own.map(|e| e.amount_usdt).collect();
        let (near, far) = match d {
            Direction::In => (-1, -2),
            Direction::Out => (1, 2),
        };
        for &id in subgraph.incident_edges() {
            let e = g.edge(id);
            let hop = match d {
                Direction::In => subgraph.level_of(e.to) == Some(near),
                Direction::Out => subgraph.level_of(e.from) == Some(near),
            };
            if hop {
                level1.push(e.amount_usdt);
            }
        }
        let mut level2 = level1.clone();
        for &v in subgraph.level(far) {
            if subgraph.is_truncated(v) {
                continue;
            }
            match d {
                Direction::In => level2.extend(g.in_edges(v).map(|e| e.amount_usdt)),
                Direction::Out => level2.extend(g.out_edges(v).map(|e| e.amount_usdt)),
            }
        }
        FusedSeries { level1, level2 }
    };

    FusedAmounts {
        inflow: side(Direction::In),
        outflow: side(Direction::Out),
    }
}

/// The 60 amount statistics, laid out as documented at module level.
#[derive(Debug, Clone, PartialEq)]
pub struct AmountFeatures {
    pub values: Vec<f64>,
}

/// The six raw series for one direction, in canonical order.
pub fn amount_series(
    subgraph: &LayeredSubgraph<'_>,
    ctx: &FeatureContext<'_>,
    fused: &FusedAmounts,
    d: Direction,
) -> [Vec<f64>; 6] {
    let g = subgraph.graph();
    let a = subgraph.target();
    let own: Vec<&Edge> = match d {
        Direction::In => g.in_edges(a).collect(),
        Direction::Out => g.out_edges(a).collect(),
    };
    let mut per_counterparty: BTreeMap<VertexId, f64> = BTreeMap::new();
    for e in &own {
        let other = match d {
            Direction::In => e.from,
            Direction::Out => e.to,
        };
        *per_counterparty.entry(other).or_insert(0.0) += e.amount_usdt;
    }
    let side = fused.side(d);
    [
        own.iter().map(|e| e.amount_usdt).collect(),
        own.iter().filter(|e| ctx.is_native(e)).map(|e| e.amount).collect(),
        own.iter().map(|e| e.gas_fee).collect(),
        side.level1.clone(),
        side.level2.clone(),
        per_counterparty.into_values().collect(),
    ]
}

pub fn compute_amount_features(
    subgraph: &LayeredSubgraph<'_>,
    ctx: &FeatureContext<'_>,
) -> AmountFeatures {
    let fused = propagate_and_fuse(subgraph);
    let mut values = Vec::with_capacity(AMOUNT_COUNT);
    for d in Direction::BOTH {
        for series in amount_series(subgraph, ctx, &fused, d) {
            values.extend(stats5(&series).to_array());
        }
    }
    AmountFeatures { values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NetworkFeatures {
    /// Incoming transfers (edges, not distinct senders).
    pub in_degree: usize,
    pub out_degree: usize,
    pub layer1_in_addrs: usize,
    pub layer1_out_addrs: usize,
    pub layer2_in_addrs: usize,
    pub layer2_out_addrs: usize,
    pub coin_count: usize,
    pub network_count: usize,
}

impl NetworkFeatures {
    pub fn to_array(self) -> [f64; NETWORK_COUNT] {
        [
            self.in_degree,
            self.out_degree,
            self.layer1_in_addrs,
            self.layer1_out_addrs,
            self.layer2_in_addrs,
            self.layer2_out_addrs,
            self.coin_count,
            self.network_count,
        ]
        .map(|v| v as f64)
    }
}

/// Degree and neighbourhood counts.
///
/// The layer counts are the sums over each level's addresses of the new
/// neighbours they contribute, which is the size of the next level.
pub fn compute_network_features(
    graph: &TransactionGraph,
    subgraph: &LayeredSubgraph<'_>,
) -> NetworkFeatures {
    let a = subgraph.target();
    let mut coins = BTreeSet::new();
    let mut networks = BTreeSet::new();
    for e in graph.in_edges(a).chain(graph.out_edges(a)) {
        coins.insert(e.coin);
        networks.insert(e.network);
    }
    NetworkFeatures {
        in_degree: graph.in_degree(a),
        out_degree: graph.out_degree(a),
        layer1_in_addrs: subgraph.level(-1).len(),
        layer1_out_addrs: subgraph.level(1).len(),
        layer2_in_addrs: subgraph.level(-2).len(),
        layer2_out_addrs: subgraph.level(2).len(),
        coin_count: coins.len(),
        network_count: networks.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    /// Concatenates the three groups, checking each group's arity.
    pub fn assemble(time: &[f64], amount: &[f64], network: &[f64]) -> Result<Self, FeatureError> {
        for (component, expected, got) in [
            ("time features", TIME_COUNT, time.len()),
            ("amount features", AMOUNT_COUNT, amount.len()),
            ("network features", NETWORK_COUNT, network.len()),
        ] {
            if got != expected {
                return Err(FeatureError::ArityMismatch {
                    component,
                    expected,
                    got,
                });
            }
        }
        let mut values = [0.0; FEATURE_COUNT];
        values[..TIME_COUNT].copy_from_slice(time);
        values[TIME_COUNT..TIME_COUNT + AMOUNT_COUNT].copy_from_slice(amount);
        values[TIME_COUNT + AMOUNT_COUNT..].copy_from_slice(network);
        Ok(FeatureVector { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self, FeatureError> {
        let values: [f64; FEATURE_COUNT] =
            values.try_into().map_err(|_| FeatureError::ArityMismatch {
                component: "feature vector",
                expected: FEATURE_COUNT,
                got: values.len(),
            })?;
        Ok(FeatureVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> &[f64] {
        &self.values[..TIME_COUNT]
    }

    pub fn amount(&self) -> &[f64] {
        &self.values[TIME_COUNT..TIME_COUNT + AMOUNT_COUNT]
    }

    pub fn network(&self) -> &[f64] {
        &self.values[TIME_COUNT + AMOUNT_COUNT..]
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_names()
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i])
    }
}

pub fn assemble_feature_vector(
    time: &TimeFeatures,
    amount: &AmountFeatures,
    network: &NetworkFeatures,
) -> Result<FeatureVector, FeatureError> {
    FeatureVector::assemble(&time.to_array(), &amount.values, &network.to_array())
}

/// Full feature vector for one subgraph.
pub fn subgraph_features(
    subgraph: &LayeredSubgraph<'_>,
    ctx: &FeatureContext<'_>,
) -> FeatureVector {
    let time = compute_time_features(subgraph, ctx);
    let amount = compute_amount_features(subgraph, ctx);
    let network = compute_network_features(subgraph.graph(), subgraph);
    assemble_feature_vector(&time, &amount, &network).expect("groups have fixed arity")
}

pub fn extract_one(
    ctx: &FeatureContext<'_>,
    address: &str,
) -> Result<FeatureVector, FeatureError> {
    if ctx.hub_cap == 0 {
        return Err(FeatureError::InvalidHubCap);
    }
    let g = ctx.graph();
    let v = g
        .vertex(address)
        .ok_or_else(|| FeatureError::UnknownAddress(address.to_string()))?;
    Ok(subgraph_features(&layers_of(g, v, ctx.hub_cap), ctx))
}

/// Extracts features for every candidate, in address order, on `workers`
/// threads. The output does not depend on the worker count.
pub fn extract_all(
    graph: &TransactionGraph,
    candidates: &BTreeSet<String>,
    config: &ExtractConfig,
    workers: usize,
) -> Result<Vec<(String, FeatureVector)>, FeatureError> {
    let ctx = FeatureContext::new(graph, config);
    let addrs: Vec<&String> = candidates.iter().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        addrs
            .par_iter()
            .map(|a| extract_one(&ctx, a).map(|fv| ((*a).clone(), fv)))
            .collect()
    })
}
