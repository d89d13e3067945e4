//! Scenario files: a `[config]` table plus a `[workload]` that is either
//! generated from a seed or listed transaction by transaction.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rating_core::chain::Transaction;
use rating_core::identity::hash_identity;
use rating_core::{ResourceId, UserId, Vote};

use crate::{SimConfig, SimError, WorkloadTx};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub config: SimConfig,
    #[serde(default)]
    pub workload: WorkloadSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub generate: Option<GeneratedWorkload>,
    #[serde(default)]
    pub tx: Vec<ScenarioTx>,
}

/// One explicit submission. `submitted_at` is the tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioTx {
    pub tick: u64,
    pub node: usize,
    pub cred: UserId,
    pub res: String,
    pub vote: bool,
    pub nonce: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedWorkload {
    pub seed: u64,
    pub users: usize,
    pub resources: usize,
    pub txs: usize,
    pub start_tick: u64,
    pub end_tick: u64,
}

impl GeneratedWorkload {
    /// Random ratings spread over `[start_tick, end_tick)`, each sent to a
    /// random node, nonces assigned per user in submission order.
    pub fn build(&self, node_count: usize) -> Result<Vec<WorkloadTx>, SimError> {
        if self.users == 0 || self.resources == 0 || self.start_tick >= self.end_tick || node_count == 0 {
            return Err(SimError::Scenario("generated workload needs users, resources and a tick range".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let users: Vec<UserId> = (0..self.users)
            .map(|i| hash_identity("sim", &format!("user{i}")).expect("non-empty"))
            .collect();
        let resources: Vec<ResourceId> = (0..self.resources)
            .map(|i| ResourceId::parse(&format!("https://www.youtube.com/watch?v=sim{i}")).expect("valid url"))
            .collect();
        let mut ticks: Vec<u64> = (0..self.txs).map(|_| rng.gen_range(self.start_tick..self.end_tick)).collect();
        ticks.sort_unstable();
        let mut nonces: HashMap<usize, u64> = HashMap::new();
        Ok(ticks
            .into_iter()
            .map(|tick| {
                let u = rng.gen_range(0..users.len());
                let r = rng.gen_range(0..resources.len());
                let nonce = nonces.entry(u).or_default();
                let tx = Transaction::new(users[u].clone(), resources[r].clone(), Vote(rng.gen_bool(0.5)), *nonce, tick);
                *nonce += 1;
                WorkloadTx { tick, node: rng.gen_range(0..node_count), tx }
            })
            .collect())
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        scenario.config.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Scenario(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Generated transactions first, then explicit ones.
    pub fn workload(&self) -> Result<Vec<WorkloadTx>, SimError> {
        let mut out = match &self.workload.generate {
            Some(g) => g.build(self.config.node_count)?,
            None => Vec::new(),
        };
        for t in &self.workload.tx {
            let res = ResourceId::parse(&t.res).map_err(|e| SimError::Scenario(e.to_string()))?;
            out.push(WorkloadTx {
                tick: t.tick,
                node: t.node,
                tx: Transaction::new(t.cred.clone(), res, Vote(t.vote), t.nonce, t.tick),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        [config]
        node_count = 3
        seed = 9
        latency_ticks = [1, 3]

        [[config.partitions]]
        start_tick = 10
        end_tick = 50
        side = [0]

        [workload.generate]
        seed = 1
        users = 4
        resources = 3
        txs = 20
        start_tick = 0
        end_tick = 40

        [[workload.tx]]
        tick = 45
        node = 2
        cred = "466c18d13a3fbfbe7c8a8a0083399a13"
        res = "https://github.com/rust-lang/rust"
        vote = true
        nonce = 0
    "#;

    #[test]
    fn parses_generated_and_explicit_workload() {
        let s = Scenario::parse(SAMPLE).unwrap();
        assert_eq!(s.config.partitions.len(), 1);
        let w = s.workload().unwrap();
        assert_eq!(w.len(), 21);
        assert!(w[..20].windows(2).all(|p| p[0].tick <= p[1].tick));
        assert_eq!(w[20].tx.res.as_str(), "https://github.com/rust-lang/rust");
        assert_eq!(s.workload().unwrap(), w);
    }

    #[test]
    fn generated_nonces_are_sequential_per_user() {
        let g = GeneratedWorkload { seed: 3, users: 5, resources: 5, txs: 100, start_tick: 0, end_tick: 50 };
        let w = g.build(4).unwrap();
        let mut next: HashMap<UserId, u64> = HashMap::new();
        for item in &w {
            let n = next.entry(item.tx.cred.clone()).or_default();
            assert_eq!(item.tx.nonce, *n);
            *n += 1;
            assert!(item.node < 4);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let text = SAMPLE.replace("latency_ticks = [1, 3]", "latency_ticks = [4, 3]");
        assert!(Scenario::parse(&text).is_err());
        let text = SAMPLE.replace("side = [0]", "side = [0, 1, 2]");
        assert!(Scenario::parse(&text).is_err());
    }
}
