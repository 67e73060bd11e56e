//! Boundary conditions: partitions of ∂Λ describing external wirings.

use std::collections::BTreeSet;

use crate::config::RcConfig;
use crate::dsu::DisjointSets;
use crate::error::{Error, Result};
use crate::lattice::{Lattice, Rect, Side, VertexId};

/// A partition of the boundary vertices of Λ_n in canonical form: every block
/// sorted, blocks ordered by least member, singletons included.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryCondition {
    n: usize,
    blocks: Vec<Vec<VertexId>>,
}

impl BoundaryCondition {
    pub fn free(lat: &Lattice) -> Self {
        BoundaryCondition {
            n: lat.n(),
            blocks: lat.boundary().iter().map(|&v| vec![v]).collect(),
        }
    }

    pub fn wired(lat: &Lattice) -> Self {
        BoundaryCondition {
            n: lat.n(),
            blocks: vec![lat.boundary().to_vec()],
        }
    }

    /// One block formed by the union of the listed sides, all other boundary
    /// vertices free. An empty list gives the free condition.
    pub fn side_homogeneous(lat: &Lattice, sides: &[Side]) -> Self {
        let wired: BTreeSet<VertexId> = sides.iter().flat_map(|&s| lat.side(s).iter().copied()).collect();
        let mut blocks: Vec<Vec<VertexId>> = Vec::new();
        if wired.len() > 1 {
            blocks.push(wired.iter().copied().collect());
        }
        blocks.extend(
            lat.boundary()
                .iter()
                .filter(|v| wired.len() <= 1 || !wired.contains(v))
                .map(|&v| vec![v]),
        );
        Self::canonical(lat.n(), blocks)
    }

    /// All 16 side subsets, indexed by bitmask over (top, right, bottom, left).
    pub fn all_side_homogeneous(lat: &Lattice) -> Vec<(Vec<Side>, BoundaryCondition)> {
        (0u8..16)
            .map(|mask| {
                let sides: Vec<Side> = Side::ALL
                    .into_iter()
                    .filter(|&s| mask & (1 << (s as u8)) != 0)
                    .collect();
                let bc = Self::side_homogeneous(lat, &sides);
                (sides, bc)
            })
            .collect()
    }

    /// Builds a condition from explicit wired blocks; unlisted boundary
    /// vertices become singletons.
    pub fn from_blocks(lat: &Lattice, blocks: &[Vec<VertexId>]) -> Result<Self> {
        let mut seen = vec![false; lat.num_vertices()];
        let mut out = Vec::new();
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidBoundary("empty block".into()));
            }
            for &v in block {
                if v >= lat.num_vertices() || !lat.is_boundary(v) {
                    let (x, y) = (v % lat.n(), v / lat.n());
                    return Err(Error::InvalidBoundary(format!(
                        "vertex ({x}, {y}) is not on the boundary"
                    )));
                }
                if seen[v] {
                    let (x, y) = lat.coords(v);
                    return Err(Error::InvalidBoundary(format!(
                        "vertex ({x}, {y}) appears in more than one block"
                    )));
                }
                seen[v] = true;
            }
            out.push(block.clone());
        }
        out.extend(lat.boundary().iter().filter(|&&v| !seen[v]).map(|&v| vec![v]));
        Ok(Self::canonical(lat.n(), out))
    }

    fn canonical(n: usize, mut blocks: Vec<Vec<VertexId>>) -> Self {
        for b in blocks.iter_mut() {
            b.sort_unstable();
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        BoundaryCondition { n, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<VertexId>] {
        &self.blocks
    }

    pub fn nontrivial_blocks(&self) -> impl Iterator<Item = &Vec<VertexId>> {
        self.blocks.iter().filter(|b| b.len() > 1)
    }

    pub fn check_lattice(&self, lat: &Lattice) -> Result<()> {
        if self.n == lat.n() {
            Ok(())
        } else {
            Err(Error::LatticeMismatch {
                expected: lat.n(),
                actual: self.n,
            })
        }
    }

    /// (P1) at most one non-singleton block, and (P2) that block is a union
    /// of whole sides.
    pub fn is_side_homogeneous(&self, lat: &Lattice) -> bool {
        let sides = [
            lat.side(Side::Top).to_vec(),
            lat.side(Side::Right).to_vec(),
            lat.side(Side::Bottom).to_vec(),
            lat.side(Side::Left).to_vec(),
        ];
        blocks_side_homogeneous(&self.blocks, &sides)
    }

    /// True iff every block of `self` lies inside a block of `other`.
    pub fn refines(&self, other: &BoundaryCondition) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::LatticeMismatch {
                expected: self.n,
                actual: other.n,
            });
        }
        let mut owner = vec![usize::MAX; self.n * self.n];
        for (i, b) in other.blocks.iter().enumerate() {
            for &v in b {
                owner[v] = i;
            }
        }
        Ok(self.blocks.iter().all(|b| b.iter().all(|&v| owner[v] == owner[b[0]])))
    }

    pub fn wiring(&self) -> Wiring {
        Wiring::new(self.n * self.n, self.nontrivial_blocks().cloned().collect())
    }
}

fn blocks_side_homogeneous(blocks: &[Vec<VertexId>], sides: &[Vec<VertexId>; 4]) -> bool {
    let mut big = blocks.iter().filter(|b| b.len() > 1);
    let Some(block) = big.next() else {
        return true;
    };
    if big.next().is_some() {
        return false;
    }
    let members: BTreeSet<VertexId> = block.iter().copied().collect();
    let covered: BTreeSet<VertexId> = sides
        .iter()
        .filter(|s| s.iter().all(|v| members.contains(v)))
        .flat_map(|s| s.iter().copied())
        .collect();
    covered == members
}

/// Vertex-level view of the wired blocks of a partition, over any graph.
/// Only blocks with two or more members are stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Wiring {
    block_of: Vec<u32>,
    blocks: Vec<Vec<VertexId>>,
}

pub(crate) const NO_BLOCK: u32 = u32::MAX;

impl Wiring {
    pub fn new(num_vertices: usize, blocks: Vec<Vec<VertexId>>) -> Self {
        let blocks: Vec<Vec<VertexId>> = blocks.into_iter().filter(|b| b.len() > 1).collect();
        let mut block_of = vec![NO_BLOCK; num_vertices];
        for (i, b) in blocks.iter().enumerate() {
            for &v in b {
                assert_eq!(block_of[v], NO_BLOCK, "vertex {v} wired twice");
                block_of[v] = i as u32;
            }
        }
        Wiring { block_of, blocks }
    }

    pub fn none(num_vertices: usize) -> Self {
        Wiring::new(num_vertices, Vec::new())
    }

    #[inline]
    pub fn block_of(&self, v: VertexId) -> Option<usize> {
        match self.block_of[v] {
            NO_BLOCK => None,
            b => Some(b as usize),
        }
    }

    #[inline]
    pub(crate) fn raw_block(&self, v: VertexId) -> u32 {
        self.block_of[v]
    }

    pub fn blocks(&self) -> &[Vec<VertexId>] {
        &self.blocks
    }

    pub fn num_vertices(&self) -> usize {
        self.block_of.len()
    }

    pub fn same_block(&self, u: VertexId, v: VertexId) -> bool {
        let b = self.block_of[u];
        b != NO_BLOCK && b == self.block_of[v]
    }

    pub(crate) fn merge_into(&self, dsu: &mut DisjointSets) {
        for b in &self.blocks {
            for w in b.windows(2) {
                dsu.union(w[0], w[1]);
            }
        }
    }
}

/// Wirings induced on the boundary of a sub-region by the configuration
/// outside it and the outer boundary condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InducedCondition {
    pub region: Vec<VertexId>,
    /// ∂D ∪ (D ∩ ∂Λ), sorted.
    pub boundary: Vec<VertexId>,
    /// Canonical partition of `boundary`.
    pub blocks: Vec<Vec<VertexId>>,
}

impl InducedCondition {
    /// Side-homogeneity with respect to the sides of a rectangular region.
    pub fn is_side_homogeneous_on(&self, lat: &Lattice, rect: &Rect) -> bool {
        blocks_side_homogeneous(&self.blocks, &rect.sides(lat))
    }
}

/// Two region-boundary vertices share a block iff they are joined by open
/// edges not inside the region, with the outer wirings merging components.
pub fn induced_condition(
    lat: &Lattice,
    region: &[VertexId],
    outside: &RcConfig,
    outer_bc: &BoundaryCondition,
) -> Result<InducedCondition> {
    outer_bc.check_lattice(lat)?;
    let mut inside = vec![false; lat.num_vertices()];
    for &v in region {
        if v >= lat.num_vertices() {
            let (x, y) = (v % lat.n(), v / lat.n());
            return Err(Error::InvalidVertex {
                x: x as i64,
                y: y as i64,
            });
        }
        inside[v] = true;
    }
    let g = lat.graph();
    let mut dsu = DisjointSets::new(lat.num_vertices());
    for (e, &(a, b)) in g.edges().iter().enumerate() {
        if !(inside[a] && inside[b]) && outside.is_open(e) {
            dsu.union(a, b);
        }
    }
    outer_bc.wiring().merge_into(&mut dsu);

    let mut region_sorted = region.to_vec();
    region_sorted.sort_unstable();
    region_sorted.dedup();
    let boundary: Vec<VertexId> = region_sorted
        .iter()
        .copied()
        .filter(|&v| lat.is_boundary(v) || g.neighbors(v).iter().any(|&(w, _)| !inside[w]))
        .collect();
    let mut by_root: std::collections::BTreeMap<usize, Vec<VertexId>> = Default::default();
    for &v in &boundary {
        by_root.entry(dsu.find(v)).or_default().push(v);
    }
    let mut blocks: Vec<Vec<VertexId>> = by_root.into_values().collect();
    blocks.sort_unstable_by_key(|b| b[0]);
    Ok(InducedCondition {
        region: region_sorted,
        boundary,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn free_and_wired() {
        for (n, size) in [(2, 4), (3, 8)] {
            let lat = Lattice::new(n).unwrap();
            let f = BoundaryCondition::free(&lat);
            assert_eq!(f.blocks().len(), size);
            assert!(f.blocks().iter().all(|b| b.len() == 1));
            let w = BoundaryCondition::wired(&lat);
            assert_eq!(w.blocks().len(), 1);
            assert_eq!(w.blocks()[0].len(), size);
            assert!(f.is_side_homogeneous(&lat));
            assert!(w.is_side_homogeneous(&lat));
        }
    }

    #[test]
    fn side_family() {
        for n in [3, 4, 6] {
            let lat = Lattice::new(n).unwrap();
            let all = BoundaryCondition::all_side_homogeneous(&lat);
            let distinct: std::collections::HashSet<_> = all.iter().map(|(_, b)| b.clone()).collect();
            assert_eq!(distinct.len(), 16);
            assert!(all.iter().all(|(_, b)| b.is_side_homogeneous(&lat)));
            assert_eq!(all[0].1, BoundaryCondition::free(&lat));
            assert_eq!(all[15].1, BoundaryCondition::wired(&lat));
        }
        let lat = Lattice::new(3).unwrap();
        let top = BoundaryCondition::side_homogeneous(&lat, &[Side::Top]);
        assert_eq!(top.blocks().iter().filter(|b| b.len() > 1).count(), 1);
        assert_eq!(top.nontrivial_blocks().next().unwrap(), &vec![6, 7, 8]);
    }

    #[test]
    fn not_side_homogeneous() {
        let lat = Lattice::new(8).unwrap();
        // half of the bottom side
        let half: Vec<_> = (0..4).map(|x| lat.vertex(x, 0)).collect();
        let bc = BoundaryCondition::from_blocks(&lat, &[half]).unwrap();
        assert!(!bc.is_side_homogeneous(&lat));
        // two separate wired pairs
        let u = lat.vertex(3, 0);
        let v = lat.vertex(4, 0);
        let psi =
            BoundaryCondition::from_blocks(&lat, &[vec![u, lat.vertex(0, 0)], vec![v, lat.vertex(7, 0)]]).unwrap();
        assert!(!psi.is_side_homogeneous(&lat));
    }

    #[test]
    fn refinement_order() {
        let lat = Lattice::new(4).unwrap();
        let all: Vec<_> = BoundaryCondition::all_side_homogeneous(&lat)
            .into_iter()
            .map(|(_, b)| b)
            .collect();
        let free = BoundaryCondition::free(&lat);
        let wired = BoundaryCondition::wired(&lat);
        for a in &all {
            assert!(free.refines(a).unwrap());
            assert!(a.refines(&wired).unwrap());
            assert!(a.refines(a).unwrap());
            for b in &all {
                if a.refines(b).unwrap() && b.refines(a).unwrap() {
                    assert_eq!(a, b);
                }
                for c in &all {
                    if a.refines(b).unwrap() && b.refines(c).unwrap() {
                        assert!(a.refines(c).unwrap());
                    }
                }
            }
        }
        let s12 = BoundaryCondition::side_homogeneous(&lat, &[Side::Top, Side::Right]);
        let s1 = BoundaryCondition::side_homogeneous(&lat, &[Side::Top]);
        assert!(!s12.refines(&s1).unwrap());
        assert!(s1.refines(&s12).unwrap());
        let other = Lattice::new(5).unwrap();
        assert!(matches!(
            s1.refines(&BoundaryCondition::free(&other)),
            Err(Error::LatticeMismatch { .. })
        ));
    }

    #[test]
    fn from_blocks_validation() {
        let lat = Lattice::new(4).unwrap();
        let interior = lat.vertex(1, 1);
        assert!(BoundaryCondition::from_blocks(&lat, &[vec![0, interior]]).is_err());
        assert!(BoundaryCondition::from_blocks(&lat, &[vec![0, 1], vec![1, 2]]).is_err());
        let bc = BoundaryCondition::from_blocks(&lat, &[vec![3, 0]]).unwrap();
        assert_eq!(bc.blocks()[0], vec![0, 3]);
        assert_eq!(bc.blocks().len(), lat.boundary().len() - 1);
    }

    fn region_rect(lat: &Lattice, rect: Rect) -> Vec<VertexId> {
        rect.vertices(lat)
    }

    #[test]
    fn induced_free_and_open() {
        let lat = Lattice::new(7).unwrap();
        let rect = Rect {
            x0: 2,
            x1: 4,
            y0: 2,
            y1: 4,
        };
        let region = region_rect(&lat, rect);
        let free = BoundaryCondition::free(&lat);
        let m = lat.num_edges();

        let closed = induced_condition(&lat, &region, &RcConfig::empty(m), &free).unwrap();
        assert_eq!(closed.boundary.len(), 8);
        assert!(closed.blocks.iter().all(|b| b.len() == 1));

        let open = induced_condition(&lat, &region, &RcConfig::full(m), &free).unwrap();
        assert_eq!(open.blocks.len(), 1);
        assert_eq!(open.blocks[0].len(), 8);
    }

    #[test]
    fn induced_wired_corner_region() {
        let lat = Lattice::new(6).unwrap();
        let rect = Rect {
            x0: 0,
            x1: 2,
            y0: 0,
            y1: 2,
        };
        let region = region_rect(&lat, rect);
        let wired = BoundaryCondition::wired(&lat);
        let ind = induced_condition(&lat, &region, &RcConfig::empty(lat.num_edges()), &wired).unwrap();
        // brute force: D ∩ ∂Λ all merged through the wiring, other region
        // boundary vertices have no external path
        let on_outer: Vec<_> = region.iter().copied().filter(|&v| lat.is_boundary(v)).collect();
        assert_eq!(on_outer.len(), 5);
        let big: Vec<_> = ind.blocks.iter().filter(|b| b.len() > 1).collect();
        assert_eq!(big.len(), 1);
        assert_eq!(big[0], &on_outer);
        assert_eq!(ind.blocks.len(), 1 + ind.boundary.len() - on_outer.len());
        assert!(ind.is_side_homogeneous_on(&lat, &rect));
    }

    #[test]
    fn induced_side_homogeneous_is_preserved_on_boxes() {
        // every edge leaving the box closed, outside edges arbitrary
        let lat = Lattice::new(6).unwrap();
        let m = lat.num_edges();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (_, bc) in BoundaryCondition::all_side_homogeneous(&lat) {
            for e in 0..m {
                for r in 1..=2 {
                    let b = lat.box_region(e, r).unwrap();
                    let mut cfg = RcConfig::empty(m);
                    for &oe in &b.outer_edges {
                        let (x, y) = lat.graph().endpoints(oe);
                        let leaves = b.contains(x) != b.contains(y);
                        if !leaves && rng.random_bool(0.5) {
                            cfg.set(oe, true);
                        }
                    }
                    let ind = induced_condition(&lat, &b.vertices, &cfg, &bc).unwrap();
                    assert!(ind.is_side_homogeneous_on(&lat, &b.rect), "e={e} r={r}");
                }
            }
        }
    }
}
