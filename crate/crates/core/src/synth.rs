//! Seeded synthetic datasets with planted sybil clusters.
//!
//! Every cluster is funded from an exchange hot wallet, moves funds between
//! its members in one of three shapes, has each member call the activity
//! contract, and finally sweeps leftover USDT to a per-cluster deposit
//! address. All of a cluster's operations before the sweep fall inside
//! `time_jitter` seconds. Members may also make a few unrelated exchange
//! transfers before the sweep.
//!
//! ```text
//! star:   hub -> spoke_1 .. spoke_{k-1}
//! chain:  a_1 -> a_2 -> .. -> a_k
//! tree:   hub -> m intermediates -> leaves   (every parent has >= 2 children)
//! ```
//!
//! Clusters start inside a few short campaign bursts within the activity window.
//!
//! Benign addresses are given a lifetime, a first gas deposit from a hot
//! wallet (usually followed by a USDT deposit), and Poisson-many transfers at uniform times within that lifetime.
//! A `benign_activity_rate` fraction of them also call the activity contract
//! once, inside the activity window; some of those are fresh addresses
//! funded just before they join.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::ingest::{
    write_labels_csv, write_transactions_csv, AddressLabel, IngestError, LabelCategory,
    TransactionRecord,
};
use crate::seed::substream;

const DAY: i64 = 24 * 3600;
/// Benign lifetimes are capped below one year so every benign address stays a candidate.
const BENIGN_MAX_LIFETIME: i64 = 330 * DAY;
const FRESH_WINDOW: i64 = 3600;
const ACTIVITY_USDT: (f64, f64) = (1.0, 10.0);
const GAS_FEE: (f64, f64) = (0.0001, 0.0008);
const LABEL_SOURCE: &str = "synth";

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    SpecInvalid(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Star,
    Chain,
    Tree,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Star, Pattern::Chain, Pattern::Tree];

    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::Star => "star",
            Pattern::Chain => "chain",
            Pattern::Tree => "tree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Hub,
    Spoke,
    Hop,
    Intermediate,
    Leaf,
}

/// Uniform on `[mean - jitter, mean + jitter]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmountParams {
    pub mean: f64,
    pub jitter: f64,
}

impl AmountParams {
    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        if self.jitter == 0.0 {
            self.mean
        } else {
            rng.random_range(self.mean - self.jitter..=self.mean + self.jitter)
        }
    }

    fn check(&self, what: &str) -> Result<(), SynthError> {
        if !(self.mean.is_finite() && self.mean > 0.0) {
            return invalid(format!("{what}.mean must be positive"));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0 && self.jitter < self.mean) {
            return invalid(format!("{what}.jitter must be in [0, mean)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternMix {
    pub star: f64,
    pub chain: f64,
    pub tree: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub enabled: bool,
    /// Sweeps land uniformly in `(0, max_delay]` seconds after the cluster's
    /// last other operation.
    pub max_delay: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_benign: usize,
    pub n_sybil_clusters: usize,
    /// Inclusive member-count bounds per cluster.
    pub cluster_size_range: (usize, usize),
    pub pattern_mix: PatternMix,
    /// USDT allotted to each cluster member.
    pub funding_amount_usdt: AmountParams,
    /// Maximum spread in seconds of a cluster's operations, sweeps excluded.
    pub time_jitter: i64,
    pub activity_address: String,
    /// Native-coin amount of each gas top-up.
    pub gas_amount: AmountParams,
    pub benign_activity_rate: f64,
    /// Fraction of benign participants that are funded at most an hour
    /// before they join the activity.
    pub benign_fresh_rate: f64,
    /// Number of campaign bursts clusters start in; 0 spreads them over the window.
    pub sybil_waves: usize,
    /// Width in seconds of each burst.
    pub wave_width: i64,
    pub sweep: SweepParams,
    /// Mean Poisson count of extra exchange transfers per sybil member, dated
    /// within `sweep.max_delay` after the cluster's planned operations.
    pub sybil_noise_transactions: f64,
    pub multi_network: bool,
    pub n_hot_wallets: usize,
    /// Mean of the Poisson count of benign transfers beyond the first deposit.
    pub benign_mean_transactions: f64,
    /// Mean of the exponential benign lifetime in seconds.
    pub benign_mean_lifetime: i64,
    /// Unix-second bounds of all generated activity.
    pub time_range: (i64, i64),
    /// Window in which clusters start and benign participants call the activity.
    pub activity_window: (i64, i64),
    pub rng_seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        default_benchmark_spec()
    }
}

/// The canonical benchmark: about 5,000 candidates, roughly 12% of them sybil,
/// across all three patterns. All parameters are synthetic.
pub fn default_benchmark_spec() -> SynthSpec {
    SynthSpec {
        n_benign: 4400,
        n_sybil_clusters: 80,
        cluster_size_range: (4, 11),
        pattern_mix: PatternMix {
            star: 1.0,
            chain: 1.0,
            tree: 1.0,
        },
        funding_amount_usdt: AmountParams {
            mean: 50.0,
            jitter: 5.0,
        },
        time_jitter: 600,
        activity_address: "0xa1d5000000000000000000000000000000000001".to_string(),
        gas_amount: AmountParams {
            mean: 0.005,
            jitter: 0.001,
        },
        benign_activity_rate: 0.3,
        benign_fresh_rate: 0.3,
        sybil_waves: 4,
        wave_width: 2 * DAY,
        sweep: SweepParams {
            enabled: true,
            max_delay: 21 * DAY,
        },
        sybil_noise_transactions: 2.0,
        multi_network: false,
        n_hot_wallets: 20,
        benign_mean_transactions: 4.0,
        benign_mean_lifetime: 90 * DAY,
        // 2023-01-01 .. 2024-05-15
        time_range: (1_672_531_200, 1_715_731_200),
        // 2024-03-01 .. 2024-04-15
        activity_window: (1_709_251_200, 1_713_139_200),
        rng_seed: 42,
    }
}

fn invalid<T>(msg: String) -> Result<T, SynthError> {
    Err(SynthError::SpecInvalid(msg))
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let w = [self.pattern_mix.star, self.pattern_mix.chain, self.pattern_mix.tree];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return invalid("pattern weights must be non-negative with a positive sum".into());
        }
        let (lo, hi) = self.cluster_size_range;
        if lo < 3 || hi < lo {
            return invalid(format!("cluster_size_range ({lo}, {hi}) needs 3 <= min <= max"));
        }
        if self.time_jitter < 0 {
            return invalid("time_jitter must be non-negative".into());
        }
        self.funding_amount_usdt.check("funding_amount_usdt")?;
        self.gas_amount.check("gas_amount")?;
        if self.funding_amount_usdt.mean - self.funding_amount_usdt.jitter <= ACTIVITY_USDT.1 {
            return invalid(format!(
                "funding_amount_usdt must stay above the {} USDT activity amount",
                ACTIVITY_USDT.1
            ));
        }
        if !(0.0..=1.0).contains(&self.benign_activity_rate) {
            return invalid("benign_activity_rate must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.benign_fresh_rate) {
            return invalid("benign_fresh_rate must be in [0, 1]".into());
        }
        if self.wave_width < 0 || self.wave_width > self.activity_window.1 - self.activity_window.0 {
            return invalid("wave_width must be in [0, activity window length]".into());
        }
        if self.sweep.max_delay < 1 {
            return invalid("sweep.max_delay must be at least 1".into());
        }
        if !(self.sybil_noise_transactions.is_finite() && self.sybil_noise_transactions >= 0.0) {
            return invalid("sybil_noise_transactions must be non-negative".into());
        }
        if self.activity_address.is_empty() {
            return invalid("activity_address is empty".into());
        }
        if self.n_hot_wallets == 0 {
            return invalid("n_hot_wallets must be at least 1".into());
        }
        if !(self.benign_mean_transactions.is_finite() && self.benign_mean_transactions > 0.0) {
            return invalid("benign_mean_transactions must be positive".into());
        }
        if self.benign_mean_lifetime <= 0 {
            return invalid("benign_mean_lifetime must be positive".into());
        }
        let (t0, t1) = self.time_range;
        let (a0, a1) = self.activity_window;
        if !(0 < t0 && t0 + DAY < t1) {
            return invalid("time_range must be positive and span more than a day".into());
        }
        if !(t0 <= a0 && a0 <= a1 && a1 + self.time_jitter + self.sweep.max_delay <= t1) {
            return invalid(
                "activity_window plus jitter and sweep delay must fit inside time_range".into(),
            );
        }
        Ok(())
    }
}

/// Reads and validates a JSON spec. Missing fields take benchmark defaults.
pub fn load_spec<R: Read>(input: R) -> Result<SynthSpec, SynthError> {
    let spec: SynthSpec =
        serde_json::from_reader(input).map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Truth {
    Benign,
    Sybil,
}

impl Truth {
    pub fn as_u8(self) -> u8 {
        match self {
            Truth::Benign => 0,
            Truth::Sybil => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub cluster_id: u32,
    pub pattern: Pattern,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledDataset {
    /// Sorted by timestamp, then hash.
    pub records: Vec<TransactionRecord>,
    /// Ground truth for every benign and sybil address.
    pub labels: BTreeMap<String, Truth>,
    pub cluster_assignments: BTreeMap<String, ClusterAssignment>,
    /// Category labels for hot wallets, deposit addresses and the activity contract.
    pub entity_labels: Vec<AddressLabel>,
}

impl LabeledDataset {
    pub fn sybil_count(&self) -> usize {
        self.labels.values().filter(|t| **t == Truth::Sybil).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Network {
    name: &'static str,
    native: &'static str,
    price_usdt: f64,
}

const NETWORKS: [Network; 3] = [
    Network {
        name: "BSC",
        native: "BNB",
        price_usdt: 600.0,
    },
    Network {
        name: "ETH",
        native: "ETH",
        price_usdt: 3000.0,
    },
    Network {
        name: "POLYGON",
        native: "MATIC",
        price_usdt: 0.7,
    },
];

#[derive(Debug, Clone, Copy)]
enum Asset {
    Usdt(f64),
    Native(f64),
}

/// One transfer whose timestamp is assigned later.
struct Op {
    from: usize,
    to: usize,
    asset: Asset,
}

struct Generator<'s> {
    spec: &'s SynthSpec,
    rng: ChaCha8Rng,
    addresses: Vec<String>,
    used: HashSet<String>,
    records: Vec<TransactionRecord>,
}

impl Generator<'_> {
    fn new_address(&mut self) -> usize {
        loop {
            let a = format!(
                "0x{:016x}{:016x}{:08x}",
                self.rng.random::<u64>(),
                self.rng.random::<u64>(),
                self.rng.random::<u32>()
            );
            if self.used.insert(a.clone()) {
                self.addresses.push(a);
                return self.addresses.len() - 1;
            }
        }
    }

    fn network(&mut self) -> Network {
        if self.spec.multi_network {
            NETWORKS[self.rng.random_range(0..NETWORKS.len())]
        } else {
            NETWORKS[0]
        }
    }

    fn push(&mut self, op: &Op, net: Network, timestamp: i64) {
        let (coin, amount, amount_usdt) = match op.asset {
            Asset::Usdt(v) => ("USDT", v, v),
            Asset::Native(v) => (net.native, v, v * net.price_usdt),
        };
        let hash = format!(
            "0x{:016x}{:016x}{:016x}{:016x}",
            self.rng.random::<u64>(),
            self.rng.random::<u64>(),
            self.rng.random::<u64>(),
            self.rng.random::<u64>()
        );
        self.records.push(TransactionRecord {
            tx_hash: hash,
            input_address: self.addresses[op.from].clone(),
            output_address: self.addresses[op.to].clone(),
            network: net.name.to_string(),
            coin: coin.to_string(),
            amount,
            amount_usdt,
            gas_fee: self.rng.random_range(GAS_FEE.0..GAS_FEE.1),
            timestamp,
        });
    }

    /// A transfer in a random direction with a heavy-tailed USDT value.
    fn organic_transfer(&mut self, addr: usize, peer: usize, net: Network) -> Op {
        let value = LogNormal::new(80f64.ln(), 1.2)
            .expect("valid params")
            .sample(&mut self.rng);
        let asset = if self.rng.random_bool(0.7) {
            Asset::Usdt(value)
        } else {
            Asset::Native(value / net.price_usdt)
        };
        let (from, to) = if self.rng.random_bool(0.5) {
            (addr, peer)
        } else {
            (peer, addr)
        };
        Op { from, to, asset }
    }

    fn activity_amount(&mut self) -> Asset {
        Asset::Usdt(self.rng.random_range(ACTIVITY_USDT.0..=ACTIVITY_USDT.1))
    }
}

/// Parent of each member (members are in funding order, index 0 is the root).
fn cluster_parents(pattern: Pattern, k: usize) -> (Vec<Option<usize>>, Vec<Role>) {
    match pattern {
        Pattern::Star => {
            let parents = (0..k).map(|i| (i > 0).then_some(0)).collect();
            let roles = (0..k)
                .map(|i| if i == 0 { Role::Hub } else { Role::Spoke })
                .collect();
            (parents, roles)
        }
        Pattern::Chain => {
            let parents = (0..k).map(|i| i.checked_sub(1)).collect();
            (parents, vec![Role::Hop; k])
        }
        Pattern::Tree => {
            let rest = k - 1;
            // Fewer than six non-hub members cannot give every intermediate two
            // leaves, so the tree stays one level deep.
            let m = if rest < 6 { rest } else { rest / 3 };
            let mut parents = vec![None];
            let mut roles = vec![Role::Hub];
            for _ in 0..m {
                parents.push(Some(0));
                roles.push(if rest < 6 { Role::Leaf } else { Role::Intermediate });
            }
            for j in 0..rest - m {
                parents.push(Some(1 + j % m));
                roles.push(Role::Leaf);
            }
            (parents, roles)
        }
    }
}

fn generate_cluster(
    g: &mut Generator<'_>,
    cluster_id: u32,
    pattern: Pattern,
    k: usize,
    start: i64,
    hot_wallets: &[usize],
    out: &mut LabeledDataset,
) {
    let spec = g.spec;
    let net = g.network();
    let members: Vec<usize> = (0..k).map(|_| g.new_address()).collect();
    let collector = g.new_address();
    let activity = 0;
    let funder = hot_wallets[g.rng.random_range(0..hot_wallets.len())];
    let (parents, roles) = cluster_parents(pattern, k);

    let allot: Vec<f64> = (0..k).map(|_| spec.funding_amount_usdt.sample(&mut g.rng)).collect();
    // USDT a member receives covers its own allotment and its whole subtree.
    let mut subtree = allot.clone();
    for i in (1..k).rev() {
        let p = parents[i].expect("non-root");
        subtree[p] += subtree[i];
    }

    let mut ops = Vec::new();
    let mut sweeps = Vec::new();
    for i in 0..k {
        let from = parents[i].map_or(funder, |p| members[p]);
        let gas = spec.gas_amount.sample(&mut g.rng);
        ops.push(Op {
            from,
            to: members[i],
            asset: Asset::Native(gas),
        });
        ops.push(Op {
            from,
            to: members[i],
            asset: Asset::Usdt(subtree[i]),
        });
        let act = g.activity_amount();
        ops.push(Op {
            from: members[i],
            to: activity,
            asset: act,
        });
        if let Asset::Usdt(spent) = act {
            sweeps.push(Op {
                from: members[i],
                to: collector,
                asset: Asset::Usdt(allot[i] - spent),
            });
        }
    }
    // Funding order keeps each member's gas, deposit and forwarding causal.
    let mut offsets: Vec<i64> = (0..ops.len())
        .map(|_| g.rng.random_range(0..=spec.time_jitter))
        .collect();
    offsets.sort_unstable();
    for (op, dt) in ops.iter().zip(&offsets) {
        g.push(op, net, start + dt);
    }
    let last = start + offsets.last().copied().unwrap_or(0);
    if spec.sweep.enabled {
        for op in &sweeps {
            let dt = g.rng.random_range(1..=spec.sweep.max_delay);
            g.push(op, net, last + dt);
        }
    }
    if spec.sybil_noise_transactions > 0.0 {
        let count = Poisson::new(spec.sybil_noise_transactions).expect("positive mean");
        for &m in &members {
            for _ in 0..count.sample(&mut g.rng) as usize {
                let dt = g.rng.random_range(1..=spec.sweep.max_delay);
                let wallet = hot_wallets[g.rng.random_range(0..hot_wallets.len())];
                let op = g.organic_transfer(m, wallet, net);
                g.push(&op, net, last + dt);
            }
        }
    }

    for (i, &m) in members.iter().enumerate() {
        let addr = g.addresses[m].clone();
        out.labels.insert(addr.clone(), Truth::Sybil);
        out.cluster_assignments.insert(
            addr,
            ClusterAssignment {
                cluster_id,
                pattern,
                role: roles[i],
            },
        );
    }
    out.entity_labels.push(AddressLabel {
        address: g.addresses[collector].clone(),
        category: LabelCategory::HotWallet,
        source: LABEL_SOURCE.into(),
    });
}

struct Lifetime {
    addr: usize,
    start: i64,
    end: i64,
    activity_at: Option<i64>,
}

fn generate_benign(g: &mut Generator<'_>, hot_wallets: &[usize], out: &mut LabeledDataset) {
    let spec = g.spec;
    let (t0, t1) = spec.time_range;
    let (a0, a1) = spec.activity_window;
    let life = Exp::new(1.0 / spec.benign_mean_lifetime as f64).expect("positive rate");
    let count = Poisson::new(spec.benign_mean_transactions).expect("positive mean");

    let mut lives = Vec::with_capacity(spec.n_benign);
    for _ in 0..spec.n_benign {
        let addr = g.new_address();
        let d = (life.sample(&mut g.rng) as i64).clamp(DAY, BENIGN_MAX_LIFETIME);
        let participant = g.rng.random_bool(spec.benign_activity_rate);
        let (start, activity_at) = if participant {
            let ta = g.rng.random_range(a0..=a1);
            let back = if g.rng.random_bool(spec.benign_fresh_rate) {
                g.rng.random_range(0..=FRESH_WINDOW)
            } else {
                (g.rng.random::<f64>() * d as f64) as i64
            };
            ((ta - back).max(t0), Some(ta))
        } else {
            (g.rng.random_range(t0..t1 - DAY), None)
        };
        let end = (start + d).min(t1);
        lives.push(Lifetime {
            addr,
            start,
            end,
            activity_at,
        });
    }

    for i in 0..lives.len() {
        let (addr, start, end, activity_at) =
            (lives[i].addr, lives[i].start, lives[i].end, lives[i].activity_at);
        let net = g.network();
        let funder = hot_wallets[g.rng.random_range(0..hot_wallets.len())];
        let gas = spec.gas_amount.sample(&mut g.rng);
        g.push(
            &Op {
                from: funder,
                to: addr,
                asset: Asset::Native(gas),
            },
            net,
            start,
        );
        // Most exchange withdrawals also bring stablecoins shortly after the gas.
        if g.rng.random_bool(0.8) {
            let amount = LogNormal::new(80f64.ln(), 1.2)
                .expect("valid params")
                .sample(&mut g.rng);
            let dt = g.rng.random_range(0..=3600.min(end - start));
            g.push(
                &Op {
                    from: funder,
                    to: addr,
                    asset: Asset::Usdt(amount),
                },
                net,
                start + dt,
            );
        }
        let n = count.sample(&mut g.rng) as usize;
        for _ in 0..n {
            let t = g.rng.random_range(start..=end);
            // Peers must be alive at `t` so they do not stretch each other's lifetimes.
            let mut peer = None;
            if g.rng.random_bool(0.6) {
                for _ in 0..8 {
                    let j = g.rng.random_range(0..lives.len());
                    if j != i && lives[j].start < t && t <= lives[j].end {
                        peer = Some(lives[j].addr);
                        break;
                    }
                }
            }
            let peer = peer.unwrap_or_else(|| hot_wallets[g.rng.random_range(0..hot_wallets.len())]);
            let net = g.network();
            let op = g.organic_transfer(addr, peer, net);
            g.push(&op, net, t);
        }
        if let Some(ta) = activity_at {
            let asset = g.activity_amount();
            let net = g.network();
            g.push(
                &Op {
                    from: addr,
                    to: 0,
                    asset,
                },
                net,
                ta,
            );
        }
        out.labels.insert(g.addresses[addr].clone(), Truth::Benign);
    }
}

/// Generates a dataset. Output depends only on `spec`, including its seed.
pub fn generate(spec: &SynthSpec) -> Result<LabeledDataset, SynthError> {
    spec.validate()?;
    let mut g = Generator {
        spec,
        rng: substream(spec.rng_seed, "synth"),
        addresses: vec![spec.activity_address.clone()],
        used: [spec.activity_address.clone()].into(),
        records: Vec::new(),
    };
    let mut out = LabeledDataset::default();
    out.entity_labels.push(AddressLabel {
        address: spec.activity_address.clone(),
        category: LabelCategory::Contract,
        source: LABEL_SOURCE.into(),
    });
    let hot_wallets: Vec<usize> = (0..spec.n_hot_wallets).map(|_| g.new_address()).collect();
    for &h in &hot_wallets {
        out.entity_labels.push(AddressLabel {
            address: g.addresses[h].clone(),
            category: LabelCategory::HotWallet,
            source: LABEL_SOURCE.into(),
        });
    }

    let mix = &spec.pattern_mix;
    let pick = WeightedIndex::new([mix.star, mix.chain, mix.tree])
        .map_err(|e| SynthError::SpecInvalid(e.to_string()))?;
    let (a0, a1) = spec.activity_window;
    let waves: Vec<i64> = (0..spec.sybil_waves)
        .map(|_| g.rng.random_range(a0..=a1 - spec.wave_width))
        .collect();
    for c in 0..spec.n_sybil_clusters {
        let pattern = Pattern::ALL[pick.sample(&mut g.rng)];
        let k = g
            .rng
            .random_range(spec.cluster_size_range.0..=spec.cluster_size_range.1);
        let start = if waves.is_empty() {
            g.rng.random_range(a0..=a1)
        } else {
            let w = waves[g.rng.random_range(0..waves.len())];
            g.rng.random_range(w..=w + spec.wave_width)
        };
        generate_cluster(&mut g, c as u32, pattern, k, start, &hot_wallets, &mut out);
    }
    generate_benign(&mut g, &hot_wallets, &mut out);

    let mut records = g.records;
    records.sort_by(|a, b| {
        a.timestamp
            .cmp(&b.timestamp)
            .then_with(|| a.tx_hash.cmp(&b.tx_hash))
    });
    out.records = records;
    out.entity_labels.sort_by(|a, b| a.address.cmp(&b.address));
    Ok(out)
}

/// `address,label,cluster_id,pattern`; benign rows leave the last two empty.
pub fn write_truth_csv<W: Write>(sink: W, data: &LabeledDataset) -> Result<(), SynthError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["address", "label", "cluster_id", "pattern"])?;
    for (addr, truth) in &data.labels {
        let (cluster, pattern) = match data.cluster_assignments.get(addr) {
            Some(c) => (c.cluster_id.to_string(), c.pattern.as_str()),
            None => (String::new(), ""),
        };
        let label = match truth {
            Truth::Benign => "benign",
            Truth::Sybil => "sybil",
        };
        w.write_record([addr.as_str(), label, &cluster, pattern])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the `address,label` columns of a truth file as 0/1 labels.
/// Accepts `sybil`/`benign` or `1`/`0`.
pub fn read_truth_csv<R: Read>(input: R) -> Result<BTreeMap<String, u8>, SynthError> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            SynthError::Ingest(IngestError::MissingColumn(name.to_string()))
        })
    };
    let (ia, il) = (col("address")?, col("label")?);
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        let label = match rec.get(il).map(str::trim) {
            Some("sybil" | "1") => 1,
            Some("benign" | "0") => 0,
            other => {
                return Err(SynthError::Ingest(IngestError::InvalidLabel {
                    line,
                    reason: format!("expected sybil or benign, got {other:?}"),
                }))
            }
        };
        let addr = rec.get(ia).unwrap_or_default().trim().to_string();
        out.insert(addr, label);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetFiles {
    pub transactions: PathBuf,
    pub truth: PathBuf,
    pub entity_labels: PathBuf,
    pub activity: PathBuf,
    pub spec: PathBuf,
}

impl DatasetFiles {
    pub fn in_dir(dir: &Path) -> Self {
        DatasetFiles {
            transactions: dir.join("transactions.csv"),
            truth: dir.join("labels.csv"),
            entity_labels: dir.join("entity_labels.csv"),
            activity: dir.join("activity_addresses.txt"),
            spec: dir.join("synth_spec.json"),
        }
    }
}

/// Writes the dataset and its spec into `dir`, creating it if needed.
pub fn write_dataset(
    dir: &Path,
    data: &LabeledDataset,
    spec: &SynthSpec,
) -> Result<DatasetFiles, SynthError> {
    fs::create_dir_all(dir)?;
    let files = DatasetFiles::in_dir(dir);
    write_transactions_csv(fs::File::create(&files.transactions)?, &data.records)?;
    write_truth_csv(fs::File::create(&files.truth)?, data)?;
    write_labels_csv(fs::File::create(&files.entity_labels)?, &data.entity_labels)?;
    fs::write(&files.activity, format!("{}\n", spec.activity_address))?;
    let mut json = serde_json::to_string_pretty(spec).expect("spec serialises");
    json.push('\n');
    fs::write(&files.spec, json)?;
    Ok(files)
}
