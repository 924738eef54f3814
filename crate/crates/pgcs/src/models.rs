//! Seeded generators for the graph families used in the experiments, plus
//! the prior-set ("potentially faulty edges") and perturbation-set samplers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Pair, PerturbationSet};
use crate::rng::{self, Stream};

/// Zachary's karate club: the canonical 34-node, 78-edge social network.
const KARATE_EDGES: [(u32, u32); 78] = [
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8),
    (0, 10), (0, 11), (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31),
    (1, 2), (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30),
    (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32),
    (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33),
    (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32),
    (22, 33), (23, 25), (23, 27), (23, 29), (23, 32), (23, 33), (24, 25), (24, 27),
    (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31), (28, 33), (29, 32),
    (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
];

/// Faction membership of each karate club node (0 = Mr. Hi, 1 = Officer).
const KARATE_FACTIONS: [usize; 34] = [
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1,
    1, 1, 1,
];

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Family {
    /// Planted partition model: `communities` blocks of `community_size`
    /// nodes, intra-cluster edge probability `p`, inter-cluster `q`.
    Ppm {
        communities: usize,
        community_size: usize,
        p: f64,
        q: f64,
    },
    /// Stochastic block model with explicit community sizes, intra
    /// probability `p` and inter probability `q`.
    Sbm {
        community_sizes: Vec<usize>,
        p: f64,
        q: f64,
    },
    /// Erdos-Renyi: every pair present independently with probability `p`.
    Er { n: usize, p: f64 },
    /// Random geometric graph on the unit square with connection `radius`.
    Rgg { n: usize, radius: f64 },
    /// Barabasi-Albert preferential attachment, `attachment` edges per new
    /// node, seeded from a star graph on `attachment + 1` nodes.
    Ba { n: usize, attachment: usize },
    /// Zachary's karate club (fixed data, seed ignored).
    Karate,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GraphFamilyConfig {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
}

impl GraphFamilyConfig {
    pub fn new(family: Family, seed: u64) -> Self {
        GraphFamilyConfig { family, seed }
    }

    pub fn n(&self) -> usize {
        match &self.family {
            Family::Ppm {
                communities,
                community_size,
                ..
            } => communities * community_size,
            Family::Sbm {
                community_sizes, ..
            } => community_sizes.iter().sum(),
            Family::Er { n, .. } | Family::Rgg { n, .. } | Family::Ba { n, .. } => *n,
            Family::Karate => 34,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob_ok = |p: f64| (0.0..=1.0).contains(&p);
        match &self.family {
            Family::Ppm {
                communities,
                community_size,
                p,
                q,
            } => {
                if *communities == 0 || *community_size == 0 {
                    return Err(Error::arg("ppm needs communities >= 1 and size >= 1"));
                }
                if !prob_ok(*p) || !prob_ok(*q) {
                    return Err(Error::arg("ppm probabilities must lie in [0, 1]"));
                }
            }
            Family::Sbm {
                community_sizes,
                p,
                q,
            } => {
                if community_sizes.is_empty() || community_sizes.contains(&0) {
                    return Err(Error::arg("sbm community sizes must be positive"));
                }
                if !prob_ok(*p) || !prob_ok(*q) {
                    return Err(Error::arg("sbm probabilities must lie in [0, 1]"));
                }
            }
            Family::Er { n, p } => {
                if *n == 0 || !prob_ok(*p) {
                    return Err(Error::arg("er needs n >= 1 and p in [0, 1]"));
                }
            }
            Family::Rgg { n, radius } => {
                if *n == 0 || *radius <= 0.0 || *radius >= 2.0f64.sqrt() {
                    return Err(Error::arg("rgg needs n >= 1 and radius in (0, sqrt(2))"));
                }
            }
            Family::Ba { n, attachment } => {
                if *attachment == 0 || *attachment >= *n {
                    return Err(Error::arg("ba needs 1 <= attachment < n"));
                }
            }
            Family::Karate => {}
        }
        Ok(())
    }
}

/// Edge categories used to balance the prior set: presence crossed with the
/// structural role of the pair (2 for ER/RGG, 4 for community graphs, 6 for
/// BA).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeCategory {
    Present,
    Absent,
    PresentIntra,
    PresentInter,
    AbsentIntra,
    AbsentInter,
    PresentLowLow,
    PresentHighHigh,
    PresentMixed,
    AbsentLowLow,
    AbsentHighHigh,
    AbsentMixed,
}

/// A generated graph together with the side information needed to
/// categorize node pairs (communities, coordinates, degree split).
#[derive(Debug, Clone)]
pub struct GeneratedGraph {
    pub graph: Graph,
    pub config: GraphFamilyConfig,
    /// Community label per node, for PPM/SBM/Karate.
    pub communities: Option<Vec<usize>>,
    /// Unit-square coordinates per node, retained for RGG auditing.
    pub coordinates: Option<Vec<(f64, f64)>>,
    /// Degree threshold for the BA low/high split: a node is low-degree iff
    /// its degree is at most the upper median of the degree sequence.
    pub degree_threshold: Option<usize>,
}

impl GeneratedGraph {
    pub fn category_count(&self) -> usize {
        match self.config.family {
            Family::Er { .. } | Family::Rgg { .. } => 2,
            Family::Ppm { .. } | Family::Sbm { .. } | Family::Karate => 4,
            Family::Ba { .. } => 6,
        }
    }

    /// Ordered list of categories for this family, used for round-robin
    /// balancing.
    pub fn category_order(&self) -> Vec<EdgeCategory> {
        use EdgeCategory::*;
        match self.config.family {
            Family::Er { .. } | Family::Rgg { .. } => vec![Present, Absent],
            Family::Ppm { .. } | Family::Sbm { .. } | Family::Karate => {
                vec![PresentIntra, PresentInter, AbsentIntra, AbsentInter]
            }
            Family::Ba { .. } => vec![
                PresentLowLow,
                PresentHighHigh,
                PresentMixed,
                AbsentLowLow,
                AbsentHighHigh,
                AbsentMixed,
            ],
        }
    }

    pub fn categorize(&self, pair: Pair) -> EdgeCategory {
        use EdgeCategory::*;
        let present = self.graph.has_edge(pair);
        match self.config.family {
            Family::Er { .. } | Family::Rgg { .. } => {
                if present {
                    Present
                } else {
                    Absent
                }
            }
            Family::Ppm { .. } | Family::Sbm { .. } | Family::Karate => {
                let comm = self.communities.as_ref().expect("community labels");
                let intra = comm[pair.a()] == comm[pair.b()];
                match (present, intra) {
                    (true, true) => PresentIntra,
                    (true, false) => PresentInter,
                    (false, true) => AbsentIntra,
                    (false, false) => AbsentInter,
                }
            }
            Family::Ba { .. } => {
                let threshold = self.degree_threshold.expect("degree threshold");
                let degrees = self.graph.degrees();
                let low_a = degrees[pair.a()] <= threshold;
                let low_b = degrees[pair.b()] <= threshold;
                match (present, low_a, low_b) {
                    (true, true, true) => PresentLowLow,
                    (true, false, false) => PresentHighHigh,
                    (true, _, _) => PresentMixed,
                    (false, true, true) => AbsentLowLow,
                    (false, false, false) => AbsentHighHigh,
                    (false, _, _) => AbsentMixed,
                }
            }
        }
    }
}

/// Sample a graph from the configured family; deterministic given the seed.
pub fn generate(cfg: &GraphFamilyConfig) -> Result<GeneratedGraph> {
    cfg.validate()?;
    let mut rng = rng::substream(cfg.seed, "graph");
    let (graph, communities, coordinates) = match &cfg.family {
        Family::Ppm {
            communities,
            community_size,
            p,
            q,
        } => {
            let labels: Vec<usize> = (0..communities * community_size)
                .map(|i| i / community_size)
                .collect();
            let graph = block_graph(&labels, *p, *q, &mut rng)?;
            (graph, Some(labels), None)
        }
        Family::Sbm {
            community_sizes,
            p,
            q,
        } => {
            let mut labels = Vec::new();
            for (c, size) in community_sizes.iter().enumerate() {
                labels.extend(std::iter::repeat(c).take(*size));
            }
            let graph = block_graph(&labels, *p, *q, &mut rng)?;
            (graph, Some(labels), None)
        }
        Family::Er { n, p } => {
            let mut edges = Vec::new();
            for i in 0..*n {
                for j in (i + 1)..*n {
                    if rng.gen::<f64>() < *p {
                        edges.push(Pair::new(i, j)?);
                    }
                }
            }
            (Graph::new(*n, edges)?, None, None)
        }
        Family::Rgg { n, radius } => {
            let points: Vec<(f64, f64)> =
                (0..*n).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())).collect();
            let mut edges = Vec::new();
            for i in 0..*n {
                for j in (i + 1)..*n {
                    let dx = points[i].0 - points[j].0;
                    let dy = points[i].1 - points[j].1;
                    if (dx * dx + dy * dy).sqrt() <= *radius {
                        edges.push(Pair::new(i, j)?);
                    }
                }
            }
            (Graph::new(*n, edges)?, None, Some(points))
        }
        Family::Ba { n, attachment } => {
            let graph = barabasi_albert(*n, *attachment, &mut rng)?;
            (graph, None, None)
        }
        Family::Karate => {
            let edges: Vec<Pair> = KARATE_EDGES
                .iter()
                .map(|&(a, b)| Pair::new(a as usize, b as usize))
                .collect::<Result<_>>()?;
            (Graph::new(34, edges)?, Some(KARATE_FACTIONS.to_vec()), None)
        }
    };
    let degree_threshold = match cfg.family {
        Family::Ba { .. } => {
            let mut degrees = graph.degrees();
            degrees.sort_unstable();
            Some(degrees[degrees.len() / 2])
        }
        _ => None,
    };
    Ok(GeneratedGraph {
        graph,
        config: cfg.clone(),
        communities,
        coordinates,
        degree_threshold,
    })
}

fn block_graph(labels: &[usize], p: f64, q: f64, rng: &mut Stream) -> Result<Graph> {
    let n = labels.len();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if labels[i] == labels[j] { p } else { q };
            if rng.gen::<f64>() < prob {
                edges.push(Pair::new(i, j)?);
            }
        }
    }
    Graph::new(n, edges)
}

fn barabasi_albert(n: usize, r: usize, rng: &mut Stream) -> Result<Graph> {
    // Star graph on r + 1 nodes, then preferential attachment: each new node
    // links to r distinct existing nodes with probability proportional to
    // degree.
    let mut edges: Vec<Pair> = (1..=r).map(|i| Pair::new(0, i)).collect::<Result<_>>()?;
    let mut endpoint_pool: Vec<usize> = Vec::with_capacity(2 * r * n);
    for e in &edges {
        endpoint_pool.push(e.a());
        endpoint_pool.push(e.b());
    }
    for v in (r + 1)..n {
        let mut targets = Vec::with_capacity(r);
        while targets.len() < r {
            let t = endpoint_pool[rng.gen_range(0..endpoint_pool.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            edges.push(Pair::new(v, t)?);
            endpoint_pool.push(v);
            endpoint_pool.push(t);
        }
    }
    Graph::new(n, edges)
}

/// A set of "potentially faulty" node pairs with their category labels,
/// balanced across the family's edge categories.
#[derive(Debug, Clone)]
pub struct PriorSet {
    pairs: Vec<Pair>,
    categories: Vec<EdgeCategory>,
}

impl PriorSet {
    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn categories(&self) -> &[EdgeCategory] {
        &self.categories
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Sample `size` distinct node pairs, balanced round-robin across the edge
/// categories of the generated graph: counts differ by at most one while
/// every category still has unused members; any deficit is redistributed to
/// the remaining categories.
pub fn sample_prior_set(gen: &GeneratedGraph, size: usize, seed: u64) -> Result<PriorSet> {
    let n = gen.graph.n();
    let total_pairs = n * (n - 1) / 2;
    if size > total_pairs {
        return Err(Error::arg(format!(
            "prior set size {size} exceeds the {total_pairs} pairs of an n = {n} graph"
        )));
    }
    let mut rng = rng::substream(seed, "prior-set");
    let order = gen.category_order();
    let mut pools: Vec<Vec<Pair>> = vec![Vec::new(); order.len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let pair = Pair::new(i, j)?;
            let cat = gen.categorize(pair);
            let slot = order.iter().position(|&c| c == cat).expect("known category");
            pools[slot].push(pair);
        }
    }
    // Shuffle each pool so the round-robin takes a uniform sample of it.
    for pool in &mut pools {
        let perm = rng::permutation(&mut rng, pool.len());
        *pool = perm.into_iter().map(|i| pool[i]).collect();
    }
    let mut cursors = vec![0usize; pools.len()];
    let mut pairs = Vec::with_capacity(size);
    let mut categories = Vec::with_capacity(size);
    while pairs.len() < size {
        let mut progressed = false;
        for (slot, pool) in pools.iter().enumerate() {
            if pairs.len() == size {
                break;
            }
            if cursors[slot] < pool.len() {
                pairs.push(pool[cursors[slot]]);
                categories.push(order[slot]);
                cursors[slot] += 1;
                progressed = true;
            }
        }
        debug_assert!(progressed, "prior-set sampling stalled");
    }
    Ok(PriorSet { pairs, categories })
}

/// Draw `d` distinct pairs uniformly without replacement from the prior set.
pub fn sample_perturbation(prior: &PriorSet, d: usize, seed: u64) -> Result<PerturbationSet> {
    if d > prior.len() {
        return Err(Error::arg(format!(
            "perturbation size {d} exceeds prior set size {}",
            prior.len()
        )));
    }
    let mut rng = rng::substream(seed, "perturbation");
    let picked = rng::sample_distinct(&mut rng, prior.len(), d);
    PerturbationSet::new(picked.into_iter().map(|i| prior.pairs[i]).collect())
}

use rand::Rng;

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn ppm_config(seed: u64) -> GraphFamilyConfig {
        GraphFamilyConfig::new(
            Family::Ppm {
                communities: 5,
                community_size: 20,
                p: 0.9,
                q: 0.01,
            },
            seed,
        )
    }

    #[test]
    fn ppm_mean_edge_count_matches_expectation() {
        // E[edges] = 5 * C(20,2) * 0.9 + 0.01 * (C(100,2) - 5 * C(20,2)) = 895,
        // per-draw sigma = sqrt(950 * 0.9 * 0.1 + 4000 * 0.01 * 0.99) ~ 11.19.
        let mut total = 0usize;
        for seed in 0..200u64 {
            total += generate(&ppm_config(seed)).unwrap().graph.edge_count();
        }
        let mean = total as f64 / 200.0;
        let sigma = (950.0 * 0.9 * 0.1 + 4000.0 * 0.01 * 0.99f64).sqrt();
        assert!(
            (mean - 895.0).abs() <= 3.0 * sigma,
            "ppm mean edge count {mean} outside band"
        );
    }

    #[test]
    fn er_mean_edge_count_matches_expectation() {
        let p = 895.0 / 4950.0;
        let mut total = 0usize;
        for seed in 0..100u64 {
            let cfg = GraphFamilyConfig::new(Family::Er { n: 100, p }, seed);
            total += generate(&cfg).unwrap().graph.edge_count();
        }
        let mean = total as f64 / 100.0;
        let sigma = (4950.0 * p * (1.0 - p)).sqrt();
        assert!((mean - 895.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn karate_is_the_embedded_dataset() {
        let cfg = GraphFamilyConfig::new(Family::Karate, 123);
        let gen = generate(&cfg).unwrap();
        assert_eq!(gen.graph.n(), 34);
        assert_eq!(gen.graph.edge_count(), KARATE_EDGES.len());
        assert_eq!(gen.category_count(), 4);
    }

    #[test]
    fn rgg_edges_match_stored_coordinates() {
        let cfg = GraphFamilyConfig::new(
            Family::Rgg {
                n: 60,
                radius: 0.27,
            },
            9,
        );
        let gen = generate(&cfg).unwrap();
        let points = gen.coordinates.as_ref().unwrap();
        for i in 0..60 {
            for j in (i + 1)..60 {
                let dx = points[i].0 - points[j].0;
                let dy = points[i].1 - points[j].1;
                let within = (dx * dx + dy * dy).sqrt() <= 0.27;
                assert_eq!(gen.graph.has_edge(Pair::new(i, j).unwrap()), within);
            }
        }
    }

    #[test]
    fn ba_degree_distribution_is_heavy_tailed() {
        let cfg = GraphFamilyConfig::new(
            Family::Ba {
                n: 100,
                attachment: 10,
            },
            4,
        );
        let gen = generate(&cfg).unwrap();
        let mut degrees = gen.graph.degrees();
        degrees.sort_unstable();
        let median = degrees[degrees.len() / 2];
        let max = *degrees.last().unwrap();
        assert!(max > median, "max degree {max} not above median {median}");
        assert_eq!(gen.category_count(), 6);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&ppm_config(77)).unwrap();
        let b = generate(&ppm_config(77)).unwrap();
        assert_eq!(a.graph, b.graph);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad = GraphFamilyConfig::new(
            Family::Ppm {
                communities: 5,
                community_size: 20,
                p: 1.5,
                q: 0.01,
            },
            0,
        );
        assert!(generate(&bad).is_err());
        let bad = GraphFamilyConfig::new(Family::Rgg { n: 10, radius: 2.0 }, 0);
        assert!(generate(&bad).is_err());
        let bad = GraphFamilyConfig::new(
            Family::Ba {
                n: 5,
                attachment: 5,
            },
            0,
        );
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn er_prior_set_is_half_present_half_absent() {
        let cfg = GraphFamilyConfig::new(
            Family::Er {
                n: 100,
                p: 895.0 / 4950.0,
            },
            3,
        );
        let gen = generate(&cfg).unwrap();
        let prior = sample_prior_set(&gen, 100, 11).unwrap();
        assert_eq!(prior.len(), 100);
        let present = prior
            .categories()
            .iter()
            .filter(|&&c| c == EdgeCategory::Present)
            .count();
        assert!((present as i64 - 50).abs() <= 1, "{present} present pairs");
        let distinct: BTreeSet<Pair> = prior.pairs().iter().copied().collect();
        assert_eq!(distinct.len(), 100);
    }

    #[test]
    fn ppm_prior_set_balances_four_categories() {
        let gen = generate(&ppm_config(5)).unwrap();
        let prior = sample_prior_set(&gen, 100, 21).unwrap();
        for cat in gen.category_order() {
            let count = prior.categories().iter().filter(|&&c| c == cat).count();
            assert!(
                (count as i64 - 25).abs() <= 1,
                "category {cat:?} has {count} pairs"
            );
        }
    }

    #[test]
    fn exhaustive_prior_set_is_every_pair() {
        let cfg = GraphFamilyConfig::new(Family::Er { n: 12, p: 0.3 }, 2);
        let gen = generate(&cfg).unwrap();
        let prior = sample_prior_set(&gen, 66, 8).unwrap();
        assert_eq!(prior.len(), 66);
        let distinct: BTreeSet<Pair> = prior.pairs().iter().copied().collect();
        assert_eq!(distinct.len(), 66);
        assert!(sample_prior_set(&gen, 67, 8).is_err());
    }

    #[test]
    fn perturbation_sampling_contracts() {
        let gen = generate(&ppm_config(6)).unwrap();
        let prior = sample_prior_set(&gen, 40, 13).unwrap();
        assert!(sample_perturbation(&prior, 0, 1).unwrap().is_empty());
        let all = sample_perturbation(&prior, 40, 1).unwrap();
        let drawn: BTreeSet<Pair> = all.pairs().iter().copied().collect();
        let pool: BTreeSet<Pair> = prior.pairs().iter().copied().collect();
        assert_eq!(drawn, pool);
        let a = sample_perturbation(&prior, 5, 42).unwrap();
        let b = sample_perturbation(&prior, 5, 42).unwrap();
        assert_eq!(a, b);
        assert!(sample_perturbation(&prior, 41, 1).is_err());
    }
}
