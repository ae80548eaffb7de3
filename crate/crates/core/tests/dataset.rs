use std::collections::HashSet;

use diffrec::dataset::{read_edge_list, split, training_size};
use proptest::prelude::*;

fn log_strategy() -> impl Strategy<Value = String> {
    proptest::collection::vec((0u8..15, 0u8..25), 1..150).prop_map(|edges| {
        edges
            .iter()
            .map(|(u, i)| format!("user{u} item{i}\n"))
            .collect()
    })
}

proptest! {
    #[test]
    fn split_partitions_every_link(text in log_strategy(), fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let log = read_edge_list(text.as_bytes()).unwrap();
        let s = split(&log, fraction, seed).unwrap();
        let train: HashSet<_> = s.training().iter().copied().collect();
        let probe: HashSet<_> = s.probe().iter().copied().collect();
        prop_assert!(train.is_disjoint(&probe));
        prop_assert_eq!(train.len() + probe.len(), log.len());
        prop_assert_eq!(train.len(), training_size(log.len(), fraction));

        let all: HashSet<(String, String)> = log.records().iter().map(|r| (r.user.clone(), r.item.clone())).collect();
        let mapped: HashSet<(String, String)> = train.iter().chain(&probe)
            .map(|&(u, i)| (s.user_ids()[u as usize].clone(), s.item_ids()[i as usize].clone()))
            .collect();
        prop_assert_eq!(all, mapped);

        // dense, gap-free indices
        let users: HashSet<u32> = train.iter().chain(&probe).map(|l| l.0).collect();
        let items: HashSet<u32> = train.iter().chain(&probe).map(|l| l.1).collect();
        prop_assert_eq!(users.len(), s.user_count());
        prop_assert_eq!(items.len(), s.item_count());
        prop_assert_eq!(users.iter().max().copied(), Some(s.user_count() as u32 - 1));
        prop_assert_eq!(items.iter().max().copied(), Some(s.item_count() as u32 - 1));

        prop_assert_eq!(&s, &split(&log, fraction, seed).unwrap());
    }
}
