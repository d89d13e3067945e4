use std::collections::HashSet;
use std::path::Path;

use proptest::prelude::*;

use rating_netsim::{run_sim, GeneratedWorkload, Scenario, SimConfig};

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn random_networks_converge(
        nodes in 2usize..6,
        seed in any::<u64>(),
        drop in 0.0f64..0.2,
        start in 0u64..60,
        len in 1u64..120,
        cut in 1usize..5,
    ) {
        let w = GeneratedWorkload { seed, users: 6, resources: 5, txs: 40, start_tick: 0, end_tick: 150 }
            .build(nodes)
            .unwrap();
        let side: Vec<usize> = (0..cut.min(nodes - 1)).collect();
        let config = SimConfig { drop_probability: drop, ..SimConfig::new(nodes, seed) }
            .with_partition(start, start + len, side);
        let report = run_sim(config, w.clone()).unwrap();
        prop_assert!(report.quiescent);
        prop_assert!(report.converged());
        let landed: HashSet<_> = report.nodes[0].chain.transactions().map(|t| t.tx_id).collect();
        prop_assert_eq!(landed.len(), report.nodes[0].chain.transactions().count(), "a tx landed twice");
        for item in &w {
            prop_assert!(landed.contains(&item.tx.tx_id));
        }
    }
}

#[test]
fn shipped_scenario_converges() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/partition_heal.toml");
    let scenario = Scenario::load(&path).unwrap();
    let workload = scenario.workload().unwrap();
    assert_eq!(workload.len(), 200);
    let report = run_sim(scenario.config, workload).unwrap();
    assert!(report.quiescent && report.converged());
}
