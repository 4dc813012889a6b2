//! Block decomposition, block graph and switch-state components.

use super::{Block, Network, PhaseSet};

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Returns false if `a` and `b` were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // Keep the smaller index as root so labels are deterministic.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Components of the bus graph with every switch open. Blocks are ordered by
/// their lowest member bus (file order) and named `B1`, `B2`, ...
pub(crate) fn compute_blocks(net: &Network) -> (Vec<Block>, Vec<usize>) {
    let n = net.buses.len();
    let mut uf = UnionFind::new(n);
    for l in &net.lines {
        uf.union(l.from, l.to);
    }
    for t in &net.transformers {
        uf.union(t.from, t.to);
    }
    let mut block_of_root = vec![usize::MAX; n];
    let mut block_of_bus = vec![0; n];
    let mut blocks: Vec<Block> = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        if block_of_root[r] == usize::MAX {
            block_of_root[r] = blocks.len();
            blocks.push(Block {
                id: format!("B{}", blocks.len() + 1),
                buses: Vec::new(),
                phases: PhaseSet::EMPTY,
                phi_max: 0,
                priority: 0.0,
                generators: Vec::new(),
                loads: Vec::new(),
                switches: Vec::new(),
                substation: None,
                cluster: None,
            });
        }
        let b = block_of_root[r];
        block_of_bus[i] = b;
        let blk = &mut blocks[b];
        blk.buses.push(i);
        blk.phases = blk.phases.union(net.buses[i].phases);
        blk.phi_max = blk.phi_max.max(net.buses[i].phases.len());
    }
    for (g, gen) in net.generators.iter().enumerate() {
        let b = &mut blocks[block_of_bus[gen.bus]];
        b.generators.push(g);
        if gen.substation && b.substation.is_none() {
            b.substation = Some(g);
        }
    }
    for (d, load) in net.loads.iter().enumerate() {
        let b = &mut blocks[block_of_bus[load.bus]];
        b.loads.push(d);
        b.priority += load.priority;
    }
    for (s, sw) in net.switches.iter().enumerate() {
        let (a, b) = (block_of_bus[sw.from], block_of_bus[sw.to]);
        blocks[a].switches.push(s);
        if b != a {
            blocks[b].switches.push(s);
        }
    }
    (blocks, block_of_bus)
}

/// Blocks as nodes, switches as edges.
#[derive(Debug, Clone)]
pub struct BlockGraph {
    /// `(a, b)` block endpoints per switch.
    pub edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl BlockGraph {
    pub(crate) fn new(net: &Network) -> Self {
        let edges: Vec<(usize, usize)> = (0..net.switches.len())
            .map(|s| net.switch_blocks(s))
            .collect();
        let mut adjacency = vec![Vec::new(); net.blocks.len()];
        for (s, &(a, b)) in edges.iter().enumerate() {
            adjacency[a].push((b, s));
            adjacency[b].push((a, s));
        }
        Self { edges, adjacency }
    }

    pub fn num_blocks(&self) -> usize {
        self.adjacency.len()
    }

    /// `(neighbor block, switch)` pairs.
    pub fn neighbors(&self, block: usize) -> &[(usize, usize)] {
        &self.adjacency[block]
    }

    pub fn other_end(&self, switch: usize, block: usize) -> usize {
        let (a, b) = self.edges[switch];
        if a == block {
            b
        } else {
            a
        }
    }
}

/// Open/closed state per switch (`true` = closed).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SwitchStates(pub Vec<bool>);

impl SwitchStates {
    pub fn all_open(net: &Network) -> Self {
        SwitchStates(vec![false; net.switches.len()])
    }

    pub fn all_closed(net: &Network) -> Self {
        SwitchStates(vec![true; net.switches.len()])
    }

    pub fn from_bits(bits: u64, n: usize) -> Self {
        SwitchStates((0..n).map(|s| bits >> s & 1 == 1).collect())
    }

    pub fn closed(&self, s: usize) -> bool {
        self.0[s]
    }
}

/// Partition of blocks into connected components under a switch state.
/// Components are ordered by their lowest block index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub of_block: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    ids: Vec<String>,
}

impl Components {
    pub(crate) fn new(net: &Network, states: &SwitchStates) -> Self {
        let nb = net.blocks.len();
        let mut uf = UnionFind::new(nb);
        for s in 0..net.switches.len() {
            if states.closed(s) {
                let (a, b) = net.switch_blocks(s);
                uf.union(a, b);
            }
        }
        let mut cc_of_root = vec![usize::MAX; nb];
        let mut of_block = vec![0; nb];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for l in 0..nb {
            let r = uf.find(l);
            if cc_of_root[r] == usize::MAX {
                cc_of_root[r] = members.len();
                members.push(Vec::new());
            }
            of_block[l] = cc_of_root[r];
            members[cc_of_root[r]].push(l);
        }
        let ids = members
            .iter()
            .map(|m| format!("CC-{}", net.blocks[m[0]].id))
            .collect();
        Self {
            of_block,
            members,
            ids,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Default label, named after the lowest block in the component.
    pub fn id(&self, cc: usize) -> &str {
        &self.ids[cc]
    }

    /// Closed switches with both ends inside `cc`.
    pub fn switches_in(&self, net: &Network, states: &SwitchStates, cc: usize) -> Vec<usize> {
        (0..net.switches.len())
            .filter(|&s| states.closed(s) && self.of_block[net.switch_blocks(s).0] == cc)
            .collect()
    }
}

/// Is the closed-switch subgraph acyclic? Used by independent checks.
pub(crate) fn closed_switches_acyclic(net: &Network, states: &SwitchStates) -> bool {
    let mut uf = UnionFind::new(net.blocks.len());
    (0..net.switches.len())
        .filter(|&s| states.closed(s))
        .all(|s| {
            let (a, b) = net.switch_blocks(s);
            uf.union(a, b)
        })
}
