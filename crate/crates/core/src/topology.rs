//! Scale-free edge network synthesis: preferential-attachment topology
//! generation, exact shortest-path delays, and full instance assembly.

use crate::model::{Instance, InstanceMeta};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Undirected topology with per-link delays.
#[derive(Debug, Clone)]
pub struct Graph {
    pub node_count: usize,
    pub edges: Vec<(usize, usize)>,
    /// Delay of `edges[e]`, ms.
    pub link_delay: Vec<f64>,
}

impl Graph {
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.node_count];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, self.link_delay[e]));
            adj[v].push((u, self.link_delay[e]));
        }
        adj
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.node_count
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.node_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }
}

/// End-to-end delays between each area's access point (rows) and each edge
/// node (columns).
#[derive(Debug, Clone)]
pub struct DelayMatrix {
    pub d: Vec<Vec<f64>>,
}

/// Everything needed to synthesize an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthesisParams {
    pub n_nodes: usize,
    pub attachment_rate: usize,
    pub n_aps: usize,
    pub n_ens: usize,
    /// [low, high] ms.
    pub delay_range: [f64; 2],
    /// Strict cutoff: pair (i, j) is eligible when d_{i,j} < threshold.
    pub eligibility_threshold: f64,
    pub capacity_choices: Vec<f64>,
    /// [low, high] vCPU.
    pub demand_range: [f64; 2],
    pub unmet_penalty: f64,
    pub gamma: f64,
    pub theta: f64,
    pub beta: f64,
    pub seed: u64,
}

impl SynthesisParams {
    /// The setup used across the evaluation: 100-node preferential-attachment
    /// topology, 80 areas, 30 nodes, 20 ms eligibility, capacities from
    /// {16..1024} vCPU, demands in [20, 35], phi = 5, gamma = 0.1,
    /// theta = 0.8.
    pub fn paper_preset(seed: u64) -> Self {
        SynthesisParams {
            n_nodes: 100,
            attachment_rate: 2,
            n_aps: 80,
            n_ens: 30,
            delay_range: [2.0, 5.0],
            eligibility_threshold: 20.0,
            capacity_choices: vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0],
            demand_range: [20.0, 35.0],
            unmet_penalty: 5.0,
            gamma: 0.1,
            theta: 0.8,
            beta: 0.8,
            seed,
        }
    }

    fn validate(&self) -> Result<(), TopologyError> {
        let fail = |field: &str, why: String| {
            Err(TopologyError::InvalidParam { field: field.to_string(), why })
        };
        if self.attachment_rate == 0 {
            return fail("attachment_rate", "must be at least 1".into());
        }
        if self.n_nodes < self.attachment_rate + 1 {
            return fail(
                "n_nodes",
                format!(
                    "{} nodes cannot seed attachment rate {}",
                    self.n_nodes, self.attachment_rate
                ),
            );
        }
        if self.n_aps == 0 || self.n_ens == 0 {
            return fail("n_aps/n_ens", "must be positive".into());
        }
        if self.n_aps > self.n_nodes || self.n_ens > self.n_nodes {
            return fail(
                "n_aps",
                format!(
                    "{} APs / {} ENs cannot be drawn from {} nodes",
                    self.n_aps, self.n_ens, self.n_nodes
                ),
            );
        }
        if !(self.delay_range[0] <= self.delay_range[1]) || self.delay_range[0] < 0.0 {
            return fail("delay_range", format!("{:?}", self.delay_range));
        }
        if !(self.demand_range[0] <= self.demand_range[1]) || self.demand_range[0] <= 0.0 {
            return fail("demand_range", format!("{:?}", self.demand_range));
        }
        if self.capacity_choices.is_empty() || self.capacity_choices.iter().any(|&c| c < 0.0) {
            return fail("capacity_choices", "need at least one nonnegative choice".into());
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return fail("gamma", format!("{} outside [0,1]", self.gamma));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return fail("theta", format!("{} outside [0,1]", self.theta));
        }
        if self.beta < 0.0 {
            return fail("beta", format!("{} negative", self.beta));
        }
        if self.unmet_penalty < 0.0 {
            return fail("unmet_penalty", format!("{} negative", self.unmet_penalty));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("invalid parameter `{field}`: {why}")]
    InvalidParam { field: String, why: String },
    #[error("no path between node {from} and node {to}")]
    Disconnected { from: usize, to: usize },
    #[error("synthesis failed: area with no eligible edge node after {retries} role resamples")]
    RetryBudget { retries: usize },
}

/// Grow a preferential-attachment topology.
///
/// Seeding convention: start from a complete graph on `attachment_rate + 1`
/// nodes; every later node attaches `attachment_rate` edges to existing
/// nodes sampled without replacement proportionally to degree. Link delays
/// are uniform on `delay_range`. Deterministic per seed.
pub fn generate_ba_topology(params: &SynthesisParams) -> Result<Graph, TopologyError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.n_nodes;
    let m0 = params.attachment_rate + 1;

    let mut edges = Vec::new();
    for u in 0..m0 {
        for v in u + 1..m0 {
            edges.push((u, v));
        }
    }
    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }

    let mut chosen: Vec<usize> = Vec::with_capacity(params.attachment_rate);
    for v in m0..n {
        chosen.clear();
        for _ in 0..params.attachment_rate {
            let total: usize = (0..v).filter(|u| !chosen.contains(u)).map(|u| degree[u]).sum();
            let mut ticket = rng.gen_range(0..total);
            let mut pick = usize::MAX;
            for u in 0..v {
                if chosen.contains(&u) {
                    continue;
                }
                if ticket < degree[u] {
                    pick = u;
                    break;
                }
                ticket -= degree[u];
            }
            debug_assert!(pick != usize::MAX);
            chosen.push(pick);
        }
        for &u in &chosen {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }

    let (lo, hi) = (params.delay_range[0], params.delay_range[1]);
    let link_delay: Vec<f64> = (0..edges.len()).map(|_| rng.gen_range(lo..=hi)).collect();

    Ok(Graph { node_count: n, edges, link_delay })
}

/// Exact shortest-path delays from every AP to every EN (Dijkstra per AP).
pub fn all_pairs_delay(
    graph: &Graph,
    ap_nodes: &[usize],
    en_nodes: &[usize],
) -> Result<DelayMatrix, TopologyError> {
    let adj = graph.adjacency();
    let mut d = Vec::with_capacity(ap_nodes.len());
    for &src in ap_nodes {
        let dist = dijkstra(&adj, src);
        let mut row = Vec::with_capacity(en_nodes.len());
        for &dst in en_nodes {
            let v = dist[dst];
            if v.is_infinite() {
                return Err(TopologyError::Disconnected { from: src, to: dst });
            }
            row.push(v);
        }
        d.push(row);
    }
    Ok(DelayMatrix { d })
}

pub fn dijkstra(adj: &[Vec<(usize, f64)>], src: usize) -> Vec<f64> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, o: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
        }
    }

    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[src] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Entry(0.0, src)));
    while let Some(Reverse(Entry(du, u))) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let cand = du + w;
            if cand < dist[v] {
                dist[v] = cand;
                heap.push(Reverse(Entry(cand, v)));
            }
        }
    }
    dist
}

const ROLE_RETRIES: usize = 100;

/// Synthesize a complete instance: topology, AP/EN roles, delays,
/// strict-threshold eligibility, capacities and demands. Roles are drawn
/// from one uniform permutation: APs from the front, ENs from the back, so
/// the sets are disjoint whenever the node budget allows and overlap by the
/// minimum amount otherwise (an overlapping node hosts both an AP and an
/// EN; its self-delay is zero). Role assignment is resampled up to a bounded
/// retry count until every area sees at least one eligible node.
pub fn synthesize_instance(params: &SynthesisParams) -> Result<Instance, TopologyError> {
    let graph = generate_ba_topology(params)?;
    // Roles/capacities/demands draw from an offset stream so the topology
    // stays identical under the same seed regardless of retries.
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut delays: Option<DelayMatrix> = None;
    for _ in 0..ROLE_RETRIES {
        let perm = sample_distinct(&mut rng, graph.node_count, graph.node_count);
        let mut aps: Vec<usize> = perm[..params.n_aps].to_vec();
        let mut ens: Vec<usize> = perm[graph.node_count - params.n_ens..].to_vec();
        aps.sort_unstable();
        ens.sort_unstable();
        let dm = all_pairs_delay(&graph, &aps, &ens)?;
        let ok = dm.d.iter().all(|row| row.iter().any(|&v| v < params.eligibility_threshold));
        if ok {
            delays = Some(dm);
            break;
        }
    }
    let dm = delays.ok_or(TopologyError::RetryBudget { retries: ROLE_RETRIES })?;

    let m = params.n_aps;
    let n = params.n_ens;
    let a: Vec<Vec<u8>> = dm
        .d
        .iter()
        .map(|row| row.iter().map(|&v| (v < params.eligibility_threshold) as u8).collect())
        .collect();
    let c: Vec<f64> = (0..n)
        .map(|_| params.capacity_choices[rng.gen_range(0..params.capacity_choices.len())])
        .collect();
    let lambda: Vec<f64> = (0..m)
        .map(|_| rng.gen_range(params.demand_range[0]..=params.demand_range[1]))
        .collect();

    Ok(Instance {
        m,
        n,
        lambda,
        c,
        phi: vec![params.unmet_penalty; m],
        d: dm.d,
        a,
        gamma: params.gamma,
        theta: params.theta,
        beta: params.beta,
        meta: Some(InstanceMeta { seed: params.seed, params: Some(params.clone()) }),
    })
}

fn sample_distinct(rng: &mut ChaCha8Rng, population: usize, count: usize) -> Vec<usize> {
    // Partial Fisher-Yates over an index array.
    let mut idx: Vec<usize> = (0..population).collect();
    for i in 0..count {
        let j = rng.gen_range(i..population);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}
