mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use sybilgraph::ingest::{
    clean, parse_transactions, write_transactions_csv, write_transactions_jsonl, AddressLabel,
    CleanConfig, IngestError, LabelCategory, RecordFormat, Strictness, TransactionRecord,
};

use common::{addresses, arb_records, arb_records_and_shuffle};

const HEADER: &str =
    "tx_hash,input_address,output_address,network,coin,amount,amount_usdt,gas_fee,timestamp\n";

fn reparse(records: &[TransactionRecord], format: RecordFormat) -> Vec<TransactionRecord> {
    let mut buf = Vec::new();
    match format {
        RecordFormat::Csv => write_transactions_csv(&mut buf, records).unwrap(),
        RecordFormat::Jsonl => write_transactions_jsonl(&mut buf, records).unwrap(),
    }
    let out = parse_transactions(buf.as_slice(), format, Strictness::Strict).unwrap();
    assert!(out.skipped.is_empty());
    out.records
}

fn arb_labels() -> impl Strategy<Value = BTreeMap<String, AddressLabel>> {
    let category = prop_oneof![
        Just(LabelCategory::Unknown),
        Just(LabelCategory::Eoa),
        Just(LabelCategory::Institutional),
        Just(LabelCategory::HotWallet),
        Just(LabelCategory::Contract),
    ];
    prop::collection::btree_map(0usize..12, category, 0..6).prop_map(|m| {
        m.into_iter()
            .map(|(i, category)| {
                let address = format!("a{i}");
                let label = AddressLabel {
                    address: address.clone(),
                    category,
                    source: "prop".into(),
                };
                (address, label)
            })
            .collect()
    })
}

fn short_lifecycle() -> CleanConfig {
    CleanConfig {
        max_lifecycle: 30_000,
        ..CleanConfig::default()
    }
}

proptest! {
    #[test]
    fn csv_round_trip_is_a_fixed_point(records in arb_records(12, 40)) {
        let once = reparse(&records, RecordFormat::Csv);
        prop_assert_eq!(&once, &records);
        prop_assert_eq!(reparse(&once, RecordFormat::Csv), once);
    }

    #[test]
    fn jsonl_round_trip_is_a_fixed_point(records in arb_records(12, 40)) {
        prop_assert_eq!(reparse(&records, RecordFormat::Jsonl), records);
    }

    #[test]
    fn clean_is_idempotent(records in arb_records(12, 60), labels in arb_labels()) {
        let cfg = short_lifecycle();
        let first = clean(&records, &labels, &cfg).unwrap();
        let second = clean(&first.records, &labels, &cfg).unwrap();
        prop_assert_eq!(&first.candidates, &second.candidates);
        prop_assert_eq!(&first.records, &second.records);
    }

    #[test]
    fn report_partitions_all_addresses(records in arb_records(12, 60), labels in arb_labels()) {
        let out = clean(&records, &labels, &short_lifecycle()).unwrap();
        let r = out.report;
        prop_assert!(r.reconciles());
        prop_assert_eq!(r.total_addresses, addresses(&records).len());
        prop_assert_eq!(r.retained_candidates, out.candidates.len());
        for c in &out.candidates {
            prop_assert!(!labels.get(c).is_some_and(|l| l.category.is_excluded()));
        }
    }

    #[test]
    fn candidates_ignore_record_order(
        (records, shuffled) in arb_records_and_shuffle(12, 60),
        labels in arb_labels(),
    ) {
        let cfg = short_lifecycle();
        let a = clean(&records, &labels, &cfg).unwrap();
        let b = clean(&shuffled, &labels, &cfg).unwrap();
        prop_assert_eq!(a.candidates, b.candidates);
        prop_assert_eq!(a.report, b.report);
    }

    #[test]
    fn merge_keeps_highest_severity(a in 0usize..5, b in 0usize..5) {
        let cats = [
            LabelCategory::Unknown,
            LabelCategory::Eoa,
            LabelCategory::Institutional,
            LabelCategory::HotWallet,
            LabelCategory::Contract,
        ];
        let mk = |i: usize, src: &str| AddressLabel {
            address: "x".into(),
            category: cats[i],
            source: src.into(),
        };
        let merged = mk(a, "first").merge(mk(b, "second"));
        prop_assert_eq!(merged.category, cats[a.max(b)]);
        let reversed = mk(b, "second").merge(mk(a, "first"));
        prop_assert_eq!(reversed.category, merged.category);
    }
}

#[test]
fn malformed_rows_carry_line_numbers() {
    let data = format!(
        "{HEADER}ok1,a,b,BSC,USDT,1,1,0,100\n\
         bad1,a,b,BSC,USDT,-1,1,0,100\n\
         bad2,a,b,BSC,USDT,1,1,0,0\n\
         bad3,a,b,BSC,USDT,x,1,0,100\n\
         ok2,a,a,BSC,USDT,1,1,0,101\n"
    );
    let out = parse_transactions(data.as_bytes(), RecordFormat::Csv, Strictness::Lenient).unwrap();
    assert_eq!(out.records.len(), 2);
    let lines: Vec<u64> = out.skipped.iter().map(|m| m.line).collect();
    assert_eq!(lines, [3, 4, 5]);
    assert!(out.skipped[0].reason.contains("negative"));
    assert!(out.skipped[1].reason.contains("not positive"));

    match parse_transactions(data.as_bytes(), RecordFormat::Csv, Strictness::Strict) {
        Err(IngestError::Malformed(row)) => assert_eq!(row.line, 3),
        other => panic!("expected a malformed row, got {other:?}"),
    }
}

#[test]
fn self_transfer_is_a_legal_record() {
    let data = format!("{HEADER}s,a,a,BSC,USDT,1,1,0,100\n");
    let out = parse_transactions(data.as_bytes(), RecordFormat::Csv, Strictness::Strict).unwrap();
    assert_eq!(out.records[0].input_address, out.records[0].output_address);
}

#[test]
fn missing_column_is_reported() {
    let data = "tx_hash,input_address\n1,a\n";
    assert!(matches!(
        parse_transactions(data.as_bytes(), RecordFormat::Csv, Strictness::Lenient),
        Err(IngestError::MissingColumn(c)) if c == "output_address"
    ));
}

#[test]
fn jsonl_reports_bad_lines_and_skips_blank_ones() {
    let data = "{\"tx_hash\":\"1\",\"input_address\":\"a\",\"output_address\":\"b\",\"network\":\"BSC\",\"coin\":\"USDT\",\"amount\":1,\"amount_usdt\":1,\"gas_fee\":0,\"timestamp\":5}\n\
                \n\
                not json\n";
    let out = parse_transactions(data.as_bytes(), RecordFormat::Jsonl, Strictness::Lenient).unwrap();
    assert_eq!(out.records.len(), 1);
    assert_eq!(out.skipped.len(), 1);
    assert_eq!(out.skipped[0].line, 3);
}

#[test]
fn conflicting_duplicate_hash_fails_only_in_strict_mode() {
    let rec = |amount: f64| TransactionRecord {
        tx_hash: "dup".into(),
        input_address: "a".into(),
        output_address: "b".into(),
        network: "BSC".into(),
        coin: "USDT".into(),
        amount,
        amount_usdt: amount,
        gas_fee: 0.0,
        timestamp: 10,
    };
    let records = [rec(1.0), rec(1.0), rec(2.0)];
    let lenient = clean(&records, &BTreeMap::new(), &CleanConfig::default()).unwrap();
    assert_eq!(lenient.records.len(), 1);
    assert_eq!(lenient.report.dropped_duplicates, 2);
    let strict = CleanConfig {
        strictness: Strictness::Strict,
        ..CleanConfig::default()
    };
    assert!(matches!(
        clean(&records, &BTreeMap::new(), &strict),
        Err(IngestError::DuplicateTransaction(h)) if h == "dup"
    ));
}

#[test]
fn records_after_now_do_not_extend_lifecycle() {
    let rec = |hash: &str, ts: i64| TransactionRecord {
        tx_hash: hash.into(),
        input_address: "a".into(),
        output_address: "b".into(),
        network: "BSC".into(),
        coin: "USDT".into(),
        amount: 1.0,
        amount_usdt: 1.0,
        gas_fee: 0.0,
        timestamp: ts,
    };
    let records = [rec("1", 100), rec("2", 100 + 400 * 86_400)];
    let all = clean(&records, &BTreeMap::new(), &CleanConfig::default()).unwrap();
    assert!(all.candidates.is_empty());
    let capped = CleanConfig {
        now: 1_000,
        ..CleanConfig::default()
    };
    let out = clean(&records, &BTreeMap::new(), &capped).unwrap();
    assert_eq!(out.candidates.len(), 2);
}
