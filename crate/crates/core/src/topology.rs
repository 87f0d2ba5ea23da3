//! Static description of the simulated edge-cloud network: nodes, links,
//! routes, and the built-in default configuration.
//!
//! A [`Topology`] is immutable after construction and safe to share across
//! readers. All mutable simulation state lives in the engine.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// What role a node plays in the fabric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Host,
    Server,
    Switch,
    Controller,
    Attacker,
    Dummy,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeKind::Host => "host",
            NodeKind::Server => "server",
            NodeKind::Switch => "switch",
            NodeKind::Controller => "controller",
            NodeKind::Attacker => "attacker",
            NodeKind::Dummy => "dummy",
        };
        f.write_str(s)
    }
}

/// Dense node identifier, unique within a topology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// A named node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub name: String,
}

/// Bidirectional link between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    /// Bits per second, each direction.
    pub bandwidth_bps: u64,
    /// One-way propagation delay in microseconds.
    pub delay_us: u64,
}

impl Link {
    pub fn bandwidth_mbps(&self) -> f64 {
        self.bandwidth_bps as f64 / 1e6
    }

    pub fn delay_ms(&self) -> f64 {
        self.delay_us as f64 / 1e3
    }

    fn key(&self) -> (NodeId, NodeId) {
        ordered_pair(self.a, self.b)
    }
}

fn ordered_pair(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("no route configured from {src} to {dst}")]
    UnknownRoute { src: String, dst: String },
    #[error("invalid topology: {0}")]
    Invalid(String),
    #[error("failed to read topology file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse topology file: {0}")]
    Parse(String),
}

/// Immutable network description. Routes are fixed at construction; the
/// controller computes rules over a static fabric, so path choice is constant.
#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    by_name: BTreeMap<String, NodeId>,
    links: BTreeMap<(NodeId, NodeId), Link>,
    /// (src, dst) -> switch sequence, excluding the endpoints.
    routes: BTreeMap<(NodeId, NodeId), Arc<Vec<NodeId>>>,
    /// Per-switch round trip to the controller, microseconds.
    pub controller_rtt_us: u64,
    /// The monitored switch at the entry to the server site.
    pub target_switch: NodeId,
}

impl Topology {
    /// Validates invariants and builds the lookup structures.
    pub fn new(
        nodes: Vec<Node>,
        links: Vec<Link>,
        routes: Vec<((NodeId, NodeId), Vec<NodeId>)>,
        controller_rtt_us: u64,
        target_switch: NodeId,
    ) -> Result<Self, TopologyError> {
        let mut by_name = BTreeMap::new();
        let mut seen = BTreeMap::new();
        let mut controllers = 0usize;
        for n in &nodes {
            if seen.insert(n.id, n.kind).is_some() {
                return Err(TopologyError::Invalid(format!("duplicate node id {}", n.id)));
            }
            if by_name.insert(n.name.clone(), n.id).is_some() {
                return Err(TopologyError::Invalid(format!("duplicate node name {}", n.name)));
            }
            if n.kind == NodeKind::Controller {
                controllers += 1;
            }
        }
        if controllers != 1 {
            return Err(TopologyError::Invalid(format!(
                "expected exactly one controller node, found {controllers}"
            )));
        }

        let mut link_map = BTreeMap::new();
        for l in &links {
            if l.a == l.b {
                return Err(TopologyError::Invalid(format!("self-loop link at {}", l.a)));
            }
            if l.bandwidth_bps == 0 {
                return Err(TopologyError::Invalid("link bandwidth must be > 0".into()));
            }
            if !seen.contains_key(&l.a) || !seen.contains_key(&l.b) {
                return Err(TopologyError::Invalid("link references unknown node".into()));
            }
            if link_map.insert(l.key(), l.clone()).is_some() {
                return Err(TopologyError::Invalid(format!(
                    "duplicate link between {} and {}",
                    l.a, l.b
                )));
            }
        }

        if seen.get(&target_switch) != Some(&NodeKind::Switch) {
            return Err(TopologyError::Invalid("target_switch must be a switch".into()));
        }

        let mut route_map = BTreeMap::new();
        for ((src, dst), hops) in routes {
            if hops.is_empty() {
                return Err(TopologyError::Invalid(format!("empty route {src} -> {dst}")));
            }
            for h in &hops {
                if seen.get(h) != Some(&NodeKind::Switch) {
                    return Err(TopologyError::Invalid(format!(
                        "route {src} -> {dst} passes through non-switch {h}"
                    )));
                }
            }
            // Endpoints must attach to the first/last switch and consecutive
            // switches must share a link.
            let full: Vec<NodeId> = std::iter::once(src)
                .chain(hops.iter().copied())
                .chain(std::iter::once(dst))
                .collect();
            for w in full.windows(2) {
                if !link_map.contains_key(&ordered_pair(w[0], w[1])) {
                    return Err(TopologyError::Invalid(format!(
                        "route {src} -> {dst}: no link between {} and {}",
                        w[0], w[1]
                    )));
                }
            }
            route_map.insert((src, dst), Arc::new(hops));
        }

        let topo = Topology {
            nodes,
            by_name,
            links: link_map,
            routes: route_map,
            controller_rtt_us,
            target_switch,
        };

        // Every host -> server route must cross the monitored entry switch.
        for h in topo.nodes_of_kind(NodeKind::Host) {
            for s in topo.nodes_of_kind(NodeKind::Server) {
                let hops = topo.route(h.id, s.id)?;
                if !hops.contains(&topo.target_switch) {
                    return Err(TopologyError::Invalid(format!(
                        "route {} -> {} bypasses the target switch",
                        h.name, s.name
                    )));
                }
            }
        }
        Ok(topo)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn lookup_name(&self, name: &str) -> Option<NodeId> {
        self.by_name.get(name).copied()
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        self.links.get(&ordered_pair(a, b))
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    /// Sorted switch ids; feature layouts index into this order.
    pub fn switch_ids(&self) -> Vec<NodeId> {
        self.nodes_of_kind(NodeKind::Switch).map(|n| n.id).collect()
    }

    /// Sorted switch-to-switch link endpoint pairs.
    pub fn switch_pairs(&self) -> Vec<(NodeId, NodeId)> {
        self.links
            .values()
            .filter(|l| {
                self.node(l.a).kind == NodeKind::Switch && self.node(l.b).kind == NodeKind::Switch
            })
            .map(|l| l.key())
            .collect()
    }

    /// Switch sequence for a configured (src, dst) pair. Stable across calls.
    pub fn route(&self, src: NodeId, dst: NodeId) -> Result<Arc<Vec<NodeId>>, TopologyError> {
        self.routes.get(&(src, dst)).cloned().ok_or_else(|| TopologyError::UnknownRoute {
            src: self.node(src).name.clone(),
            dst: self.node(dst).name.clone(),
        })
    }

    pub fn routes(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Arc<Vec<NodeId>>)> {
        self.routes.iter()
    }

    /// Full node path src -> switches -> dst for a configured pair.
    pub fn path(&self, src: NodeId, dst: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        let hops = self.route(src, dst)?;
        Ok(std::iter::once(src)
            .chain(hops.iter().copied())
            .chain(std::iter::once(dst))
            .collect())
    }

    /// SHA-256 over the canonical text dump; identifies the topology in
    /// dataset and report headers.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.dump().as_bytes());
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}

const MBPS: u64 = 1_000_000;
const MS: u64 = 1_000;

/// Builder used by `default_topology` and the config loader.
struct TopologyBuilder {
    nodes: Vec<Node>,
    links: Vec<Link>,
    routes: Vec<((NodeId, NodeId), Vec<NodeId>)>,
}

impl TopologyBuilder {
    fn new() -> Self {
        TopologyBuilder { nodes: Vec::new(), links: Vec::new(), routes: Vec::new() }
    }

    fn node(&mut self, name: &str, kind: NodeKind) -> NodeId {
        let id = NodeId(self.nodes.len() as u16);
        self.nodes.push(Node { id, kind, name.to_string() });
        id
    }

    fn link(&mut self, a: NodeId, b: NodeId, bandwidth_mbps: u64, delay_ms_tenths: u64) {
        self.links.push(Link {
            a,
            b,
            bandwidth_bps: bandwidth_mbps * MBPS,
            delay_us: delay_ms_tenths * MS / 10,
        });
    }

    fn route(&mut self, src: NodeId, dst: NodeId, hops: Vec<NodeId>) {
        self.routes.push(((src, dst), hops));
    }
}

/// The built-in configuration: two host edge sites and one server site
/// behind `switch34`, ten switches total, inter-switch links at 100 Mbps and
/// everything else at 50 Mbps.
///
/// Site layout:
///   site 1: switch11, switch12 (access) -> switch13 (aggregation)
///   site 2: switch21, switch22 (access) -> switch23 (aggregation)
///   site 3: switch34 (entry) -> switch31 (server1/2), switch32 (server3/4),
///           switch33 (controller attachment)
///
/// Every host -> server route crosses exactly four switches:
/// access, aggregation, switch34, server leaf.
pub fn default_topology() -> Topology {
    let mut b = TopologyBuilder::new();

    let sw11 = b.node("switch11", NodeKind::Switch);
    let sw12 = b.node("switch12", NodeKind::Switch);
    let sw13 = b.node("switch13", NodeKind::Switch);
    let sw21 = b.node("switch21", NodeKind::Switch);
    let sw22 = b.node("switch22", NodeKind::Switch);
    let sw23 = b.node("switch23", NodeKind::Switch);
    let sw31 = b.node("switch31", NodeKind::Switch);
    let sw32 = b.node("switch32", NodeKind::Switch);
    let sw33 = b.node("switch33", NodeKind::Switch);
    let sw34 = b.node("switch34", NodeKind::Switch);

    let hosts = [
        b.node("host1", NodeKind::Host),
        b.node("host2", NodeKind::Host),
        b.node("host3", NodeKind::Host),
        b.node("host4", NodeKind::Host),
        b.node("host5", NodeKind::Host),
        b.node("host6", NodeKind::Host),
    ];
    let servers = [
        b.node("server1", NodeKind::Server),
        b.node("server2", NodeKind::Server),
        b.node("server3", NodeKind::Server),
        b.node("server4", NodeKind::Server),
    ];
    let attackers = [
        b.node("attacker1", NodeKind::Attacker),
        b.node("attacker2", NodeKind::Attacker),
        b.node("attacker3", NodeKind::Attacker),
    ];
    let dummies = [
        b.node("dummy1", NodeKind::Dummy),
        b.node("dummy2", NodeKind::Dummy),
        b.node("dummy3", NodeKind::Dummy),
        b.node("dummy4", NodeKind::Dummy),
        b.node("dummy5", NodeKind::Dummy),
        b.node("dummy6", NodeKind::Dummy),
    ];
    let controller = b.node("controller", NodeKind::Controller);

    // Which access switch each edge node hangs off.
    let host_access = [sw11, sw11, sw12, sw21, sw21, sw22];
    let attacker_access = [sw11, sw12, sw21];
    let dummy_access = [sw11, sw12, sw12, sw21, sw22, sw22];
    let server_leaf = [sw31, sw31, sw32, sw32];

    // Inter-switch fabric, 100 Mbps. Propagation in tenths of ms; the two
    // aggregation-to-entry links cross the Internet between sites.
    b.link(sw11, sw13, 100, 20);
    b.link(sw12, sw13, 100, 20);
    b.link(sw21, sw23, 100, 20);
    b.link(sw22, sw23, 100, 20);
    b.link(sw13, sw34, 100, 480);
    b.link(sw23, sw34, 100, 480);
    b.link(sw34, sw31, 100, 20);
    b.link(sw34, sw32, 100, 20);
    b.link(sw34, sw33, 100, 20);

    // Edge links, 50 Mbps.
    for (n, acc) in hosts.iter().zip(host_access) {
        b.link(*n, acc, 50, 10);
    }
    for (n, acc) in attackers.iter().zip(attacker_access) {
        b.link(*n, acc, 50, 10);
    }
    for (n, acc) in dummies.iter().zip(dummy_access) {
        b.link(*n, acc, 50, 10);
    }
    for (n, leaf) in servers.iter().zip(server_leaf) {
        b.link(*n, leaf, 50, 10);
    }
    b.link(controller, sw33, 50, 10);

    // Static host/attacker/dummy -> server routes through the entry switch.
    let agg_of = |acc: NodeId| -> NodeId {
        if acc == sw11 || acc == sw12 {
            sw13
        } else {
            sw23
        }
    };
    let sources = hosts.iter().zip(host_access).chain(
        attackers
            .iter()
            .zip(attacker_access)
            .chain(dummies.iter().zip(dummy_access)),
    );
    let mut routes = Vec::new();
    for (src, acc) in sources {
        for (srv, leaf) in servers.iter().zip(server_leaf) {
            routes.push((*src, *srv, vec![acc, agg_of(acc), sw34, leaf]));
        }
    }
    for (src, dst, hops) in routes {
        b.route(src, dst, hops);
    }

    Topology::new(b.nodes, b.links, b.routes, 68_000, sw34)
        .expect("default topology is statically valid")
}

// ---------------------------------------------------------------------------
// Plain-text config format (TOML): nodes, links, routes, controller RTT and
// target switch. `dump` emits the canonical form; `from_str` accepts it back.
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    controller_rtt_ms: f64,
    target_switch: String,
    #[serde(rename = "node")]
    nodes: Vec<NodeEntry>,
    #[serde(rename = "link")]
    links: Vec<LinkEntry>,
    #[serde(rename = "route")]
    routes: Vec<RouteEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    name: String,
    kind: NodeKind,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkEntry {
    a: String,
    b: String,
    bandwidth_mbps: f64,
    delay_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RouteEntry {
    src: String,
    dst: String,
    switches: Vec<String>,
}

impl Topology {
    /// Canonical plain-text dump of the topology (TOML).
    pub fn dump(&self) -> String {
        let file = TopologyFile {
            controller_rtt_ms: self.controller_rtt_us as f64 / 1e3,
            target_switch: self.node(self.target_switch).name.clone(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeEntry { name: n.name.clone(), kind: n.kind })
                .collect(),
            links: self
                .links
                .values()
                .map(|l| LinkEntry {
                    a: self.node(l.a).name.clone(),
                    b: self.node(l.b).name.clone(),
                    bandwidth_mbps: l.bandwidth_mbps(),
                    delay_ms: l.delay_ms(),
                })
                .collect(),
            routes: self
                .routes
                .iter()
                .map(|((src, dst), hops)| RouteEntry {
                    src: self.node(*src).name.clone(),
                    dst: self.node(*dst).name.clone(),
                    switches: hops.iter().map(|h| self.node(*h).name.clone()).collect(),
                })
                .collect(),
        };
        toml::to_string(&file).expect("topology serializes")
    }

    pub fn from_str(text: &str) -> Result<Self, TopologyError> {
        let file: TopologyFile =
            toml::from_str(text).map_err(|e| TopologyError::Parse(e.to_string()))?;
        let mut nodes = Vec::new();
        let mut ids = BTreeMap::new();
        for (i, n) in file.nodes.iter().enumerate() {
            let id = NodeId(i as u16);
            nodes.push(Node { id, kind: n.kind, name: n.name.clone() });
            ids.insert(n.name.clone(), id);
        }
        let resolve = |name: &str| -> Result<NodeId, TopologyError> {
            ids.get(name)
                .copied()
                .ok_or_else(|| TopologyError::Parse(format!("unknown node name {name:?}")))
        };
        let mut links = Vec::new();
        for l in &file.links {
            links.push(Link {
                a: resolve(&l.a)?,
                b: resolve(&l.b)?,
                bandwidth_bps: (l.bandwidth_mbps * 1e6).round() as u64,
                delay_us: (l.delay_ms * 1e3).round() as u64,
            });
        }
        let mut routes = Vec::new();
        for r in &file.routes {
            let hops = r.switches.iter().map(|s| resolve(s)).collect::<Result<Vec<_>, _>>()?;
            routes.push(((resolve(&r.src)?, resolve(&r.dst)?), hops));
        }
        Topology::new(
            nodes,
            links,
            routes,
            (file.controller_rtt_ms * 1e3).round() as u64,
            resolve(&file.target_switch)?,
        )
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, TopologyError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }
}
