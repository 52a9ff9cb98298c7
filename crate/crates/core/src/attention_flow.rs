//! Attention flow networks: weighted transitions between active sites, with
//! the environment represented by a source and a sink node.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::hash::Hash;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interest_space::LatticePoint;

pub const SOURCE_TOKEN: &str = "__SRC__";
pub const SINK_TOKEN: &str = "__SNK__";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node<K> {
    Source,
    Site(K),
    Sink,
}

/// How a site identifier is spelled in edge-list exports.
pub trait SiteLabel {
    fn label(&self) -> String;
}

impl SiteLabel for LatticePoint {
    fn label(&self) -> String {
        format!("{}:{}", self.x, self.y)
    }
}

impl SiteLabel for String {
    fn label(&self) -> String {
        self.clone()
    }
}

impl<K: SiteLabel> Node<K> {
    pub fn label(&self) -> String {
        match self {
            Node::Source => SOURCE_TOKEN.to_owned(),
            Node::Site(k) => k.label(),
            Node::Sink => SINK_TOKEN.to_owned(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttentionFlowNetwork<K> {
    sites: HashSet<K>,
    edges: HashMap<(Node<K>, Node<K>), u64>,
}

impl<K> Default for AttentionFlowNetwork<K> {
    fn default() -> Self {
        AttentionFlowNetwork {
            sites: HashSet::new(),
            edges: HashMap::new(),
        }
    }
}

impl<K: Clone + Eq + Hash> AttentionFlowNetwork<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight` units of flux on `from -> to`, registering any site
    /// endpoints as nodes.
    pub fn add_flux(&mut self, from: Node<K>, to: Node<K>, weight: u64) {
        if weight == 0 {
            return;
        }
        for n in [&from, &to] {
            if let Node::Site(k) = n {
                if !self.sites.contains(k) {
                    self.sites.insert(k.clone());
                }
            }
        }
        *self.edges.entry((from, to)).or_insert(0) += weight;
    }

    /// Routes one walk through the network: source, each site in order,
    /// then sink. Empty walks contribute nothing.
    pub fn add_walk<'a, I>(&mut self, walk: I)
    where
        I: IntoIterator<Item = &'a K>,
        K: 'a,
    {
        let mut prev = Node::Source;
        let mut visited = false;
        for site in walk {
            let node = Node::Site(site.clone());
            self.add_flux(prev, node.clone(), 1);
            prev = node;
            visited = true;
        }
        if visited {
            self.add_flux(prev, Node::Sink, 1);
        }
    }

    pub fn weight(&self, from: &Node<K>, to: &Node<K>) -> u64 {
        self.edges
            .get(&(from.clone(), to.clone()))
            .copied()
            .unwrap_or(0)
    }

    pub fn site_weight(&self, from: &K, to: &K) -> u64 {
        self.weight(&Node::Site(from.clone()), &Node::Site(to.clone()))
    }

    pub fn sites(&self) -> impl Iterator<Item = &K> {
        self.sites.iter()
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Node<K>, &Node<K>, u64)> {
        self.edges.iter().map(|((f, t), &w)| (f, t, w))
    }

    pub fn source_efflux(&self) -> u64 {
        self.edges()
            .filter(|(f, _, _)| matches!(f, Node::Source))
            .map(|(_, _, w)| w)
            .sum()
    }

    pub fn sink_influx(&self) -> u64 {
        self.edges()
            .filter(|(_, t, _)| matches!(t, Node::Sink))
            .map(|(_, _, w)| w)
            .sum()
    }

    /// True iff each site's inflow equals its outflow, the source only emits,
    /// the sink only absorbs, and source efflux equals sink influx.
    pub fn check_flow_balance(&self) -> bool {
        let mut net: HashMap<&K, i128> = HashMap::with_capacity(self.sites.len());
        for (from, to, w) in self.edges() {
            if matches!(to, Node::Source) || matches!(from, Node::Sink) {
                return false;
            }
            if let Node::Site(k) = from {
                *net.entry(k).or_insert(0) -= i128::from(w);
            }
            if let Node::Site(k) = to {
                *net.entry(k).or_insert(0) += i128::from(w);
            }
        }
        net.values().all(|&v| v == 0) && self.source_efflux() == self.sink_influx()
    }

    pub fn metrics(&self, n_walkers: usize) -> Metrics {
        self.metrics_with(n_walkers, FluxAccounting::InternalOnly)
    }

    /// `A` sums internal transition weights, optionally plus source/sink
    /// flux. `E` counts distinct site-to-site edges, never self-loops.
    pub fn metrics_with(&self, n_walkers: usize, accounting: FluxAccounting) -> Metrics {
        let mut activity = 0;
        let mut edges = 0;
        for (from, to, w) in self.edges() {
            match (from, to) {
                (Node::Site(a), Node::Site(b)) => {
                    activity += w;
                    if a != b {
                        edges += 1;
                    }
                }
                _ => {
                    if accounting == FluxAccounting::IncludeEnvironment {
                        activity += w;
                    }
                }
            }
        }
        Metrics {
            activity,
            diversity: self.sites.len() as u64,
            edges,
            n_walkers: n_walkers as u64,
        }
    }
}

impl<K: Clone + Eq + Hash + Ord + SiteLabel> AttentionFlowNetwork<K> {
    /// `from,to,weight` rows with a header, sorted with source edges first
    /// and sink edges last.
    pub fn write_edge_csv<W: Write>(&self, out: W) -> Result<()> {
        let sorted: BTreeMap<_, _> = self.edges.iter().collect();
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["from", "to", "weight"])?;
        for ((from, to), weight) in sorted {
            w.write_record([from.label(), to.label(), weight.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FluxAccounting {
    #[default]
    InternalOnly,
    IncludeEnvironment,
}

/// Macroscopic quantities of one network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    /// `A`: total site-to-site transitions.
    #[serde(rename = "A")]
    pub activity: u64,
    /// `D`: number of active sites.
    #[serde(rename = "D")]
    pub diversity: u64,
    /// `E`: number of distinct directed site-to-site edges.
    #[serde(rename = "E")]
    pub edges: u64,
    #[serde(rename = "N")]
    pub n_walkers: u64,
}

pub fn build_network<'a, K, T, I>(walks: I) -> AttentionFlowNetwork<K>
where
    K: Clone + Eq + Hash + 'a,
    T: AsRef<[K]> + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let mut net = AttentionFlowNetwork::new();
    for walk in walks {
        net.add_walk(walk.as_ref());
    }
    net
}

impl AsRef<[LatticePoint]> for crate::simulation::Trajectory {
    fn as_ref(&self) -> &[LatticePoint] {
        self.sites()
    }
}
