//! Strategies shared by the property suites.

#![allow(dead_code)]

use proptest::prelude::*;
use sybilgraph::ingest::TransactionRecord;

pub const NETWORKS: [(&str, &str); 2] = [("BSC", "BNB"), ("ETH", "ETH")];

/// One transfer between `a0..a{n_addrs}`. Amounts come from a small grid so
/// that ties are common; every record gets a distinct hash from its index.
fn arb_leg(n_addrs: usize) -> impl Strategy<Value = (usize, usize, usize, bool, u32, u32, i64)> {
    (
        0..n_addrs,
        0..n_addrs,
        0..NETWORKS.len(),
        any::<bool>(),
        0u32..40,
        0u32..8,
        1i64..100_000,
    )
}

pub fn arb_records(n_addrs: usize, max_len: usize) -> impl Strategy<Value = Vec<TransactionRecord>> {
    prop::collection::vec(arb_leg(n_addrs), 0..=max_len).prop_map(|legs| {
        legs.into_iter()
            .enumerate()
            .map(|(i, (from, to, net, native, amount, gas, ts))| {
                let (network, native_coin) = NETWORKS[net];
                let qty = f64::from(amount) * 0.25;
                TransactionRecord {
                    tx_hash: format!("0x{i:04x}"),
                    input_address: format!("a{from}"),
                    output_address: format!("a{to}"),
                    network: network.into(),
                    coin: if native { native_coin.into() } else { "USDT".into() },
                    amount: qty,
                    amount_usdt: if native { qty * 300.0 } else { qty },
                    gas_fee: f64::from(gas) * 1e-4,
                    timestamp: ts,
                }
            })
            .collect()
    })
}

/// `records` together with a permutation of them.
pub fn arb_records_and_shuffle(
    n_addrs: usize,
    max_len: usize,
) -> impl Strategy<Value = (Vec<TransactionRecord>, Vec<TransactionRecord>)> {
    arb_records(n_addrs, max_len).prop_flat_map(|recs| {
        let shuffled = Just(recs.clone()).prop_shuffle();
        (Just(recs), shuffled)
    })
}

pub fn addresses(records: &[TransactionRecord]) -> std::collections::BTreeSet<String> {
    records
        .iter()
        .flat_map(|r| [r.input_address.clone(), r.output_address.clone()])
        .collect()
}
