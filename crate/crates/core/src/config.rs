//! Random-cluster configurations and connectivity queries under boundary
//! wirings.

use fixedbitset::FixedBitSet;

use crate::boundary::{BoundaryCondition, Wiring, NO_BLOCK};
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::lattice::{BoxRegion, EdgeGraph, EdgeId, Lattice, VertexId};

/// A set of open edges, stored as a bit vector in edge-index order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RcConfig {
    bits: FixedBitSet,
}

impl RcConfig {
    pub fn empty(num_edges: usize) -> Self {
        RcConfig {
            bits: FixedBitSet::with_capacity(num_edges),
        }
    }

    pub fn full(num_edges: usize) -> Self {
        let mut bits = FixedBitSet::with_capacity(num_edges);
        bits.insert_range(..);
        RcConfig { bits }
    }

    pub fn from_open_edges(num_edges: usize, open: impl IntoIterator<Item = EdgeId>) -> Self {
        let mut c = Self::empty(num_edges);
        for e in open {
            c.set(e, true);
        }
        c
    }

    /// Bit `i` of `mask` is the state of edge `i`.
    pub fn from_mask(num_edges: usize, mask: u64) -> Self {
        debug_assert!(num_edges <= 64);
        Self::from_open_edges(num_edges, (0..num_edges).filter(|&e| mask >> e & 1 == 1))
    }

    pub fn to_mask(&self) -> u64 {
        debug_assert!(self.len() <= 64);
        self.bits.ones().fold(0u64, |m, e| m | 1 << e)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn is_open(&self, e: EdgeId) -> bool {
        self.bits.contains(e)
    }

    #[inline]
    pub fn set(&mut self, e: EdgeId, open: bool) {
        self.bits.set(e, open);
    }

    pub fn toggle(&mut self, e: EdgeId) {
        self.bits.toggle(e);
    }

    pub fn count_open(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn open_edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.bits.ones()
    }

    pub fn is_subset(&self, other: &RcConfig) -> bool {
        self.bits.is_subset(&other.bits)
    }

    pub fn hamming(&self, other: &RcConfig) -> usize {
        self.bits.symmetric_difference_count(&other.bits)
    }

    /// Complement: open edges become closed and vice versa.
    pub fn complement(&self) -> RcConfig {
        let mut bits = self.bits.clone();
        bits.toggle_range(..);
        RcConfig { bits }
    }

    /// `"<n>:<hex>"`, where byte k of the hex string packs edges 8k..8k+7
    /// least-significant bit first.
    pub fn encode(&self, n: usize) -> String {
        let mut bytes = vec![0u8; self.len().div_ceil(8)];
        for e in self.bits.ones() {
            bytes[e / 8] |= 1 << (e % 8);
        }
        format!("{n}:{}", hex::encode(bytes))
    }

    pub fn decode(s: &str) -> Result<(usize, RcConfig)> {
        let (n, payload) = s
            .split_once(':')
            .ok_or_else(|| Error::Decode("missing ':' separator".into()))?;
        let n: usize = n.parse().map_err(|_| Error::Decode(format!("bad side length {n:?}")))?;
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        let m = 2 * n * (n - 1);
        let bytes = hex::decode(payload).map_err(|e| Error::Decode(e.to_string()))?;
        if bytes.len() != m.div_ceil(8) {
            return Err(Error::Decode(format!(
                "expected {} bytes for n={n}, got {}",
                m.div_ceil(8),
                bytes.len()
            )));
        }
        let mut cfg = RcConfig::empty(m);
        for (i, byte) in bytes.iter().enumerate() {
            for bit in 0..8 {
                if byte >> bit & 1 == 1 {
                    let e = 8 * i + bit;
                    if e >= m {
                        return Err(Error::Decode("padding bits set".into()));
                    }
                    cfg.set(e, true);
                }
            }
        }
        Ok((n, cfg))
    }
}

/// Component structure of a configuration with wiring-merged clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityView {
    /// Least vertex id of the merged component containing each vertex.
    pub component_id: Vec<VertexId>,
    pub component_count: usize,
}

impl ConnectivityView {
    pub fn connected(&self, u: VertexId, v: VertexId) -> bool {
        self.component_id[u] == self.component_id[v]
    }

    pub fn component_size(&self, v: VertexId) -> usize {
        let id = self.component_id[v];
        self.component_id.iter().filter(|&&c| c == id).count()
    }
}

pub fn graph_components(g: &EdgeGraph, wiring: &Wiring, config: &RcConfig) -> ConnectivityView {
    let mut dsu = DisjointSets::new(g.num_vertices());
    for e in config.open_edges() {
        let (a, b) = g.endpoints(e);
        dsu.union(a, b);
    }
    wiring.merge_into(&mut dsu);
    let component_id = (0..g.num_vertices()).map(|v| dsu.find(v)).collect();
    ConnectivityView {
        component_id,
        component_count: dsu.num_sets(),
    }
}

/// c(A, η): number of components once wired boundary vertices are identified.
pub fn component_count(g: &EdgeGraph, wiring: &Wiring, config: &RcConfig) -> usize {
    graph_components(g, wiring, config).component_count
}

pub fn components(lat: &Lattice, config: &RcConfig, bc: &BoundaryCondition) -> Result<ConnectivityView> {
    bc.check_lattice(lat)?;
    check_len(lat, config)?;
    Ok(graph_components(lat.graph(), &bc.wiring(), config))
}

fn check_len(lat: &Lattice, config: &RcConfig) -> Result<()> {
    if config.len() == lat.num_edges() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "configuration has {} edges, lattice has {}",
            config.len(),
            lat.num_edges()
        )))
    }
}

/// Reusable scratch space for bounded connectivity searches.
///
/// A query grows breadth-first searches from both endpoints in alternation and
/// stops as soon as they meet or either one runs out of vertices, so the cost
/// is proportional to the smaller of the two clusters. A wired block acts as a
/// single node: reaching any member enqueues all of them.
#[derive(Debug, Clone)]
pub struct CutSearch {
    vertex_mark: Vec<u64>,
    block_mark: Vec<u64>,
    epoch: u64,
    queues: [Vec<VertexId>; 2],
}

impl CutSearch {
    pub fn new(g: &EdgeGraph, wiring: &Wiring) -> Self {
        CutSearch {
            vertex_mark: vec![0; g.num_vertices()],
            block_mark: vec![0; wiring.blocks().len()],
            epoch: 0,
            queues: [Vec::new(), Vec::new()],
        }
    }

    /// Whether `a` and `b` are joined by open edges other than `skip`, counting
    /// wirings as connections.
    pub fn connected_without(
        &mut self,
        g: &EdgeGraph,
        wiring: &Wiring,
        config: &RcConfig,
        a: VertexId,
        b: VertexId,
        skip: Option<EdgeId>,
    ) -> bool {
        if a == b || wiring.same_block(a, b) {
            return true;
        }
        // marks: base + side for vertices and blocks visited from each side
        self.epoch += 2;
        let base = self.epoch;
        for q in self.queues.iter_mut() {
            q.clear();
        }
        if self.visit(wiring, 0, a, base) || self.visit(wiring, 1, b, base) {
            return true;
        }
        let mut heads = [0usize; 2];
        loop {
            #[allow(clippy::needless_range_loop)]
            for side in 0..2 {
                if heads[side] == self.queues[side].len() {
                    return false;
                }
                let v = self.queues[side][heads[side]];
                heads[side] += 1;
                for &(w, e) in g.neighbors(v) {
                    if Some(e) == skip || !config.is_open(e) {
                        continue;
                    }
                    if self.visit(wiring, side, w, base) {
                        return true;
                    }
                }
            }
        }
    }

    /// Marks `v` (and its wired block) for `side`; true if the other side
    /// already reached any of them.
    #[inline]
    fn visit(&mut self, wiring: &Wiring, side: usize, v: VertexId, base: u64) -> bool {
        let mine = base + side as u64;
        let theirs = base + (1 - side) as u64;
        let mark = self.vertex_mark[v];
        if mark == theirs {
            return true;
        }
        if mark == mine {
            return false;
        }
        self.vertex_mark[v] = mine;
        self.queues[side].push(v);
        let blk = wiring.raw_block(v);
        if blk != NO_BLOCK {
            let blk = blk as usize;
            if self.block_mark[blk] == theirs {
                return true;
            }
            if self.block_mark[blk] != mine {
                self.block_mark[blk] = mine;
                for &w in &wiring.blocks()[blk] {
                    match self.vertex_mark[w] {
                        m if m == theirs => return true,
                        m if m == mine => {}
                        _ => {
                            self.vertex_mark[w] = mine;
                            self.queues[side].push(w);
                        }
                    }
                }
            }
        }
        false
    }

    /// Toggling `e` changes the wiring-merged component count.
    #[inline]
    pub fn is_cut_edge(&mut self, g: &EdgeGraph, wiring: &Wiring, config: &RcConfig, e: EdgeId) -> bool {
        let (a, b) = g.endpoints(e);
        !self.connected_without(g, wiring, config, a, b, Some(e))
    }
}

pub fn is_cut_edge(lat: &Lattice, config: &RcConfig, bc: &BoundaryCondition, e: EdgeId) -> Result<bool> {
    bc.check_lattice(lat)?;
    check_len(lat, config)?;
    lat.check_edge(e)?;
    let wiring = bc.wiring();
    Ok(CutSearch::new(lat.graph(), &wiring).is_cut_edge(lat.graph(), &wiring, config, e))
}

/// The event u ↔ v, with wired boundary vertices identified.
pub fn connected(lat: &Lattice, config: &RcConfig, bc: &BoundaryCondition, u: VertexId, v: VertexId) -> Result<bool> {
    bc.check_lattice(lat)?;
    check_len(lat, config)?;
    for w in [u, v] {
        if w >= lat.num_vertices() {
            return Err(Error::InvalidVertex {
                x: (w % lat.n()) as i64,
                y: (w / lat.n()) as i64,
            });
        }
    }
    let wiring = bc.wiring();
    Ok(CutSearch::new(lat.graph(), &wiring).connected_without(lat.graph(), &wiring, config, u, v, None))
}

/// Γ(A, B): vertices of the box not connected by open edges to the box's
/// inner boundary. Components are taken in the plain open graph on Λ_n; pass
/// `wiring_bc` to merge through boundary wirings instead.
pub fn gamma_region(
    lat: &Lattice,
    config: &RcConfig,
    region: &BoxRegion,
    wiring_bc: Option<&BoundaryCondition>,
) -> Result<Vec<VertexId>> {
    check_len(lat, config)?;
    let wiring = match wiring_bc {
        Some(bc) => {
            bc.check_lattice(lat)?;
            bc.wiring()
        }
        None => Wiring::none(lat.num_vertices()),
    };
    let view = graph_components(lat.graph(), &wiring, config);
    let mut touched = vec![false; lat.num_vertices()];
    for &v in &region.inner_boundary {
        touched[view.component_id[v]] = true;
    }
    Ok(region
        .vertices
        .iter()
        .copied()
        .filter(|&v| !touched[view.component_id[v]])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Side;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_on_small_boxes() {
        let l2 = Lattice::new(2).unwrap();
        let empty = RcConfig::empty(4);
        assert_eq!(
            components(&l2, &empty, &BoundaryCondition::free(&l2))
                .unwrap()
                .component_count,
            4
        );
        assert_eq!(
            components(&l2, &empty, &BoundaryCondition::wired(&l2))
                .unwrap()
                .component_count,
            1
        );
        let l3 = Lattice::new(3).unwrap();
        let top = BoundaryCondition::side_homogeneous(&l3, &[Side::Top]);
        assert_eq!(components(&l3, &RcConfig::empty(12), &top).unwrap().component_count, 7);
    }

    #[test]
    fn labels_are_least_members() {
        let lat = Lattice::new(3).unwrap();
        let cfg = RcConfig::from_open_edges(12, [lat.horizontal_edge(1, 1), lat.vertical_edge(2, 1)]);
        let view = components(&lat, &cfg, &BoundaryCondition::free(&lat)).unwrap();
        assert_eq!(view.component_id[lat.vertex(2, 2)], lat.vertex(1, 1));
        assert_eq!(view.component_size(lat.vertex(1, 1)), 3);
        assert_eq!(view.component_count, 7);
    }

    #[test]
    fn cut_edges_on_l2() {
        let lat = Lattice::new(2).unwrap();
        let free = BoundaryCondition::free(&lat);
        let wired = BoundaryCondition::wired(&lat);
        for e in 0..4 {
            assert!(is_cut_edge(&lat, &RcConfig::empty(4), &free, e).unwrap());
            assert!(!is_cut_edge(&lat, &RcConfig::full(4), &free, e).unwrap());
            assert!(!is_cut_edge(&lat, &RcConfig::empty(4), &wired, e).unwrap());
            // recount: toggling does not change c under the wired condition
            let mut t = RcConfig::empty(4);
            t.toggle(e);
            assert_eq!(components(&lat, &t, &wired).unwrap().component_count, 1);
        }
    }

    #[test]
    fn connectivity_queries() {
        let lat = Lattice::new(4).unwrap();
        let free = BoundaryCondition::free(&lat);
        let wired = BoundaryCondition::wired(&lat);
        let empty = RcConfig::empty(lat.num_edges());
        assert!(connected(&lat, &empty, &free, 5, 5).unwrap());
        assert!(!connected(&lat, &empty, &free, 0, 1).unwrap());
        assert!(connected(&lat, &empty, &wired, 0, 15).unwrap());
        assert!(!connected(&lat, &empty, &wired, 0, 5).unwrap());
    }

    fn random_config(rng: &mut impl Rng, m: usize, p: f64) -> RcConfig {
        RcConfig::from_open_edges(m, (0..m).filter(|_| rng.random_bool(p)))
    }

    #[test]
    fn cut_search_matches_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3000 {
            let n = rng.random_range(2..=6);
            let lat = Lattice::new(n).unwrap();
            let m = lat.num_edges();
            let sides: Vec<Side> = Side::ALL.into_iter().filter(|_| rng.random_bool(0.5)).collect();
            let bc = BoundaryCondition::side_homogeneous(&lat, &sides);
            let density = rng.random_range(0.1..0.9);
            let cfg = random_config(&mut rng, m, density);
            let e = rng.random_range(0..m);
            let before = components(&lat, &cfg, &bc).unwrap().component_count;
            let mut t = cfg.clone();
            t.toggle(e);
            let after = components(&lat, &t, &bc).unwrap().component_count;
            assert_eq!(is_cut_edge(&lat, &cfg, &bc, e).unwrap(), before != after);
            // adding an edge never increases the count
            let mut with = cfg.clone();
            with.set(e, true);
            let mut without = cfg.clone();
            without.set(e, false);
            let cw = components(&lat, &with, &bc).unwrap().component_count;
            let cwo = components(&lat, &without, &bc).unwrap().component_count;
            assert!(cwo == cw || cwo == cw + 1);
        }
    }

    #[test]
    fn refinement_lowers_counts() {
        for n in [2, 3] {
            let lat = Lattice::new(n).unwrap();
            let m = lat.num_edges();
            let bcs: Vec<_> = BoundaryCondition::all_side_homogeneous(&lat)
                .into_iter()
                .map(|(_, b)| b)
                .collect();
            for mask in 0..1u64 << m {
                let cfg = RcConfig::from_mask(m, mask);
                let counts: Vec<_> = bcs
                    .iter()
                    .map(|b| components(&lat, &cfg, b).unwrap().component_count)
                    .collect();
                for (i, a) in bcs.iter().enumerate() {
                    for (j, b) in bcs.iter().enumerate() {
                        if a.refines(b).unwrap() {
                            assert!(counts[i] >= counts[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_extremes_and_path() {
        let lat = Lattice::new(9).unwrap();
        let b = lat.box_region(lat.horizontal_edge(4, 4), 2).unwrap();
        let m = lat.num_edges();
        let closed = gamma_region(&lat, &RcConfig::empty(m), &b, None).unwrap();
        let expect: Vec<_> = b
            .vertices
            .iter()
            .copied()
            .filter(|v| !b.inner_boundary.contains(v))
            .collect();
        assert_eq!(closed, expect);
        assert!(gamma_region(&lat, &RcConfig::full(m), &b, None).unwrap().is_empty());

        // open path from (2,4) on ∂B to (4,4)
        let path = [lat.horizontal_edge(2, 4), lat.horizontal_edge(3, 4)];
        let cfg = RcConfig::from_open_edges(m, path);
        let g = gamma_region(&lat, &cfg, &b, None).unwrap();
        let removed = [lat.vertex(3, 4), lat.vertex(4, 4)];
        let expect: Vec<_> = expect.into_iter().filter(|v| !removed.contains(v)).collect();
        assert_eq!(g, expect);
    }

    #[test]
    fn gamma_anti_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lat = Lattice::new(8).unwrap();
        let m = lat.num_edges();
        for _ in 0..200 {
            let small = random_config(&mut rng, m, 0.3);
            let mut big = small.clone();
            for e in 0..m {
                if rng.random_bool(0.2) {
                    big.set(e, true);
                }
            }
            let b = lat.box_region(rng.random_range(0..m), rng.random_range(1..4)).unwrap();
            let gs = gamma_region(&lat, &small, &b, None).unwrap();
            let gb = gamma_region(&lat, &big, &b, None).unwrap();
            assert!(gb.iter().all(|v| gs.contains(v)));
        }
    }

    #[test]
    fn hex_encoding() {
        let lat = Lattice::new(3).unwrap();
        let cfg = RcConfig::from_open_edges(12, [0, 3, 8, 11]);
        let s = cfg.encode(lat.n());
        assert_eq!(s, "3:0909");
        assert_eq!(RcConfig::decode(&s).unwrap(), (3, cfg));
        assert!(RcConfig::decode("3:09").is_err());
        assert!(RcConfig::decode("3:09f9").is_err());
        assert!(RcConfig::decode("nonsense").is_err());
    }

    proptest::proptest! {
        #[test]
        fn encoding_round_trips(n in 2usize..12, seed in proptest::prelude::any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = 2 * n * (n - 1);
            let cfg = random_config(&mut rng, m, 0.5);
            let (n2, back) = RcConfig::decode(&cfg.encode(n)).unwrap();
            proptest::prop_assert_eq!(n2, n);
            proptest::prop_assert_eq!(back, cfg);
        }
    }
}
