//! Crawl invariants over randomly shaped runs on a quiet simulator.

use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use rec_audit::crawl::{run_crawl, RunOptions};
use rec_audit::model::{CrawlConfig, VideoKind};
use rec_audit::session::{SessionConfig, SimBackendFactory};
use rec_audit::sim::{Platform, SimParams};

fn opts() -> RunOptions {
    RunOptions {
        session: SessionConfig::fast(),
        progress: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn long_form_record_counts(seed in 0u64..1000, roots in 1usize..4, depth in 1usize..4, breadth in 1usize..5, workers in 1usize..4) {
        let platform = Arc::new(Platform::build(SimParams::quiet(seed)).unwrap());
        let factory = SimBackendFactory::new(platform.clone());
        let ids = platform.roots(roots, VideoKind::Regular).unwrap();
        let res = run_crawl(&CrawlConfig::long_form(ids, depth, breadth, workers), &factory, &opts()).unwrap();
        let mut per_depth: BTreeMap<usize, usize> = BTreeMap::new();
        for r in &res.records {
            *per_depth.entry(r.depth).or_default() += 1;
            prop_assert!(r.position >= 1 && r.position <= breadth);
        }
        for d in 1..=depth {
            prop_assert_eq!(per_depth[&d], roots * breadth.pow(d as u32));
        }
        let emitted: usize = res.per_worker.iter().map(|w| w.records_emitted).sum();
        prop_assert_eq!(emitted, res.records.len());
    }

    #[test]
    fn shorts_chains_link_parent_to_child(seed in 0u64..1000, roots in 1usize..4, depth in 1usize..6) {
        let platform = Arc::new(Platform::build(SimParams::quiet(seed)).unwrap());
        let factory = SimBackendFactory::new(platform.clone());
        let ids = platform.roots(roots, VideoKind::Short).unwrap();
        let res = run_crawl(&CrawlConfig::shorts(ids.clone(), depth, 0.0, 2), &factory, &opts()).unwrap();
        prop_assert_eq!(res.records.len(), roots * depth);
        for root in &ids {
            let mut chain: Vec<_> = res.records.iter().filter(|r| &r.root_id == root).collect();
            chain.sort_by_key(|r| r.depth);
            prop_assert_eq!(&chain[0].parent_id, root);
            for pair in chain.windows(2) {
                prop_assert_eq!(&pair[1].parent_id, &pair[0].video_id);
            }
        }
    }
}
