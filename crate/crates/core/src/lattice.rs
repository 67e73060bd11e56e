//! Geometry of the n×n vertex box of the square lattice.
//!
//! Vertices are indexed `y * n + x`. Edge indices are a fixed serialization
//! contract: horizontal edges `(x, y)–(x+1, y)` in row-major order first, then
//! vertical edges `(x, y)–(x, y+1)` in row-major order.

use crate::error::{Error, Result};

pub type VertexId = usize;
pub type EdgeId = usize;

/// A finite undirected multigraph with a fixed edge order.
///
/// The lattice, its planar dual and the boundary-contracted graphs used by the
/// exact enumerator are all represented this way.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGraph {
    num_vertices: usize,
    edges: Vec<(VertexId, VertexId)>,
    adj_offsets: Vec<usize>,
    adj: Vec<(VertexId, EdgeId)>,
}

impl EdgeGraph {
    pub fn new(num_vertices: usize, edges: Vec<(VertexId, VertexId)>) -> Self {
        let mut degree = vec![0usize; num_vertices];
        for &(a, b) in &edges {
            assert!(a < num_vertices && b < num_vertices, "edge endpoint out of range");
            degree[a] += 1;
            if a != b {
                degree[b] += 1;
            }
        }
        let mut adj_offsets = Vec::with_capacity(num_vertices + 1);
        adj_offsets.push(0);
        for d in &degree {
            adj_offsets.push(adj_offsets.last().unwrap() + d);
        }
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0, 0); *adj_offsets.last().unwrap()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            adj[fill[a]] = (b, e);
            fill[a] += 1;
            if a != b {
                adj[fill[b]] = (a, e);
                fill[b] += 1;
            }
        }
        EdgeGraph {
            num_vertices,
            edges,
            adj_offsets,
            adj,
        }
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.edges[e]
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// `(neighbor, edge)` pairs incident to `v`.
    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, EdgeId)] {
        &self.adj[self.adj_offsets[v]..self.adj_offsets[v + 1]]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.adj_offsets[v + 1] - self.adj_offsets[v]
    }
}

/// Sides of the box, in the order L1..L4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Top,
    Right,
    Bottom,
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Right, Side::Bottom, Side::Left];

    /// 1-based label used in serialized boundary specs.
    pub fn label(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_label(label: u8) -> Option<Side> {
        match label {
            1 => Some(Side::Top),
            2 => Some(Side::Right),
            3 => Some(Side::Bottom),
            4 => Some(Side::Left),
            _ => None,
        }
    }
}

/// The box Λ_n: n×n vertices with nearest-neighbour edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    n: usize,
    graph: EdgeGraph,
    boundary: Vec<VertexId>,
    is_boundary: Vec<bool>,
    sides: [Vec<VertexId>; 4],
}

impl Lattice {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSize(n));
        }
        let vid = |x: usize, y: usize| y * n + x;
        let mut edges = Vec::with_capacity(2 * n * (n - 1));
        for y in 0..n {
            for x in 0..n - 1 {
                edges.push((vid(x, y), vid(x + 1, y)));
            }
        }
        for y in 0..n - 1 {
            for x in 0..n {
                edges.push((vid(x, y), vid(x, y + 1)));
            }
        }
        let graph = EdgeGraph::new(n * n, edges);

        let top: Vec<_> = (0..n).map(|x| vid(x, n - 1)).collect();
        let right: Vec<_> = (0..n).map(|y| vid(n - 1, y)).collect();
        let bottom: Vec<_> = (0..n).map(|x| vid(x, 0)).collect();
        let left: Vec<_> = (0..n).map(|y| vid(0, y)).collect();
        let mut sides = [top, right, bottom, left];
        for s in sides.iter_mut() {
            s.sort_unstable();
        }

        let mut is_boundary = vec![false; n * n];
        for s in &sides {
            for &v in s {
                is_boundary[v] = true;
            }
        }
        let boundary = (0..n * n).filter(|&v| is_boundary[v]).collect();
        Ok(Lattice {
            n,
            graph,
            boundary,
            is_boundary,
            sides,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn graph(&self) -> &EdgeGraph {
        &self.graph
    }

    #[inline]
    pub fn num_vertices(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    #[inline]
    pub fn vertex(&self, x: usize, y: usize) -> VertexId {
        debug_assert!(x < self.n && y < self.n);
        y * self.n + x
    }

    pub fn checked_vertex(&self, x: i64, y: i64) -> Result<VertexId> {
        let n = self.n as i64;
        if (0..n).contains(&x) && (0..n).contains(&y) {
            Ok(self.vertex(x as usize, y as usize))
        } else {
            Err(Error::InvalidVertex { x, y })
        }
    }

    #[inline]
    pub fn coords(&self, v: VertexId) -> (usize, usize) {
        (v % self.n, v / self.n)
    }

    /// Index of the horizontal edge `(x, y)–(x+1, y)`.
    pub fn horizontal_edge(&self, x: usize, y: usize) -> EdgeId {
        debug_assert!(x + 1 < self.n && y < self.n);
        y * (self.n - 1) + x
    }

    /// Index of the vertical edge `(x, y)–(x, y+1)`.
    pub fn vertical_edge(&self, x: usize, y: usize) -> EdgeId {
        debug_assert!(x < self.n && y + 1 < self.n);
        self.n * (self.n - 1) + y * self.n + x
    }

    /// Edge joining two adjacent vertices, if they are adjacent.
    pub fn edge_between(&self, u: VertexId, v: VertexId) -> Option<EdgeId> {
        self.graph.neighbors(u).iter().find(|&&(w, _)| w == v).map(|&(_, e)| e)
    }

    pub fn is_horizontal(&self, e: EdgeId) -> bool {
        e < self.n * (self.n - 1)
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e < self.num_edges() {
            Ok(())
        } else {
            Err(Error::InvalidEdge {
                edge: e,
                edge_count: self.num_edges(),
            })
        }
    }

    /// Boundary vertices ∂Λ in increasing id order.
    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    #[inline]
    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.is_boundary[v]
    }

    pub fn side(&self, side: Side) -> &[VertexId] {
        &self.sides[side as usize]
    }

    pub fn sides_of(&self, v: VertexId) -> Vec<Side> {
        Side::ALL
            .into_iter()
            .filter(|&s| self.side(s).binary_search(&v).is_ok())
            .collect()
    }

    /// Edges with both endpoints on ∂Λ.
    pub fn boundary_edges(&self) -> Vec<EdgeId> {
        (0..self.num_edges())
            .filter(|&e| {
                let (a, b) = self.graph.endpoints(e);
                self.is_boundary[a] && self.is_boundary[b]
            })
            .collect()
    }

    /// Squared Euclidean distance from edge `e` (its nearer endpoint) to `v`.
    pub fn edge_vertex_dist2(&self, e: EdgeId, v: VertexId) -> usize {
        let (a, b) = self.graph.endpoints(e);
        self.dist2(a, v).min(self.dist2(b, v))
    }

    pub fn dist2(&self, u: VertexId, v: VertexId) -> usize {
        let (ux, uy) = self.coords(u);
        let (vx, vy) = self.coords(v);
        ux.abs_diff(vx).pow(2) + uy.abs_diff(vy).pow(2)
    }

    pub fn dist(&self, u: VertexId, v: VertexId) -> f64 {
        (self.dist2(u, v) as f64).sqrt()
    }

    pub fn box_region(&self, e: EdgeId, r: usize) -> Result<BoxRegion> {
        BoxRegion::new(self, e, r)
    }

    pub fn dual(&self) -> DualGraph {
        DualGraph::new(self)
    }
}

/// Axis-aligned vertex rectangle `[x0, x1] × [y0, y1]` (inclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub x1: usize,
    pub y0: usize,
    pub y1: usize,
}

impl Rect {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    /// Vertices of each side of the rectangle, ordered top, right, bottom, left.
    pub fn sides(&self, lat: &Lattice) -> [Vec<VertexId>; 4] {
        let top: Vec<VertexId> = (self.x0..=self.x1).map(|x| lat.vertex(x, self.y1)).collect();
        let right = (self.y0..=self.y1).map(|y| lat.vertex(self.x1, y)).collect();
        let bottom = (self.x0..=self.x1).map(|x| lat.vertex(x, self.y0)).collect();
        let left = (self.y0..=self.y1).map(|y| lat.vertex(self.x0, y)).collect();
        let mut s = [top, right, bottom, left];
        for side in s.iter_mut() {
            side.sort_unstable();
        }
        s
    }

    pub fn vertices(&self, lat: &Lattice) -> Vec<VertexId> {
        let mut out = Vec::with_capacity(self.width() * self.height());
        for y in self.y0..=self.y1 {
            for x in self.x0..=self.x1 {
                out.push(lat.vertex(x, y));
            }
        }
        out.sort_unstable();
        out
    }
}

/// The box B(e, r) around an edge together with its edge split.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub center_edge: EdgeId,
    pub radius: usize,
    pub rect: Rect,
    pub vertices: Vec<VertexId>,
    pub inner_edges: Vec<EdgeId>,
    pub outer_edges: Vec<EdgeId>,
    /// Vertices of B with a neighbour in Λ_n \ B.
    pub inner_boundary: Vec<VertexId>,
    membership: Vec<bool>,
}

impl BoxRegion {
    /// The rectangle spans every vertex within coordinate distance `r` of an
    /// endpoint of `e`, clipped to the box; every vertex left out is at
    /// Euclidean distance > r from the edge.
    pub fn new(lat: &Lattice, e: EdgeId, r: usize) -> Result<Self> {
        lat.check_edge(e)?;
        if r == 0 {
            return Err(Error::InvalidParams("box radius must be at least 1".into()));
        }
        let (a, b) = lat.graph().endpoints(e);
        let (ax, ay) = lat.coords(a);
        let (bx, by) = lat.coords(b);
        let n = lat.n();
        let rect = Rect {
            x0: ax.min(bx).saturating_sub(r),
            x1: (ax.max(bx) + r).min(n - 1),
            y0: ay.min(by).saturating_sub(r),
            y1: (ay.max(by) + r).min(n - 1),
        };
        let mut membership = vec![false; lat.num_vertices()];
        let mut vertices = Vec::new();
        for y in 0..n {
            for x in 0..n {
                if rect.contains(x, y) {
                    let v = lat.vertex(x, y);
                    membership[v] = true;
                    vertices.push(v);
                }
            }
        }
        let (mut inner_edges, mut outer_edges) = (Vec::new(), Vec::new());
        for (edge, &(u, v)) in lat.graph().edges().iter().enumerate() {
            if membership[u] && membership[v] {
                inner_edges.push(edge);
            } else {
                outer_edges.push(edge);
            }
        }
        let inner_boundary = vertices
            .iter()
            .copied()
            .filter(|&v| lat.graph().neighbors(v).iter().any(|&(w, _)| !membership[w]))
            .collect();
        Ok(BoxRegion {
            center_edge: e,
            radius: r,
            rect,
            vertices,
            inner_edges,
            outer_edges,
            inner_boundary,
            membership,
        })
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.membership[v]
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }
}

/// Identifier of a dual edge; `DualEdge(e)` crosses primal edge `e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualEdge(pub usize);

/// Planar dual of Λ_n: one vertex per bounded face plus the outer face.
///
/// Face vertex `(fx, fy)` is the unit square with lower-left corner `(fx, fy)`
/// and has id `fy * (n-1) + fx`; the outer vertex has id `(n-1)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualGraph {
    n: usize,
    graph: EdgeGraph,
}

impl DualGraph {
    pub fn new(lat: &Lattice) -> Self {
        let n = lat.n();
        let w = n - 1;
        let outer = w * w;
        let face = |fx: usize, fy: usize| fy * w + fx;
        let mut edges = Vec::with_capacity(lat.num_edges());
        for e in 0..lat.num_edges() {
            let (a, b) = lat.graph().endpoints(e);
            let (ax, ay) = lat.coords(a);
            let (bx, by) = lat.coords(b);
            let pair = if ay == by {
                // horizontal: faces below and above
                let x = ax.min(bx);
                let below = if ay > 0 { face(x, ay - 1) } else { outer };
                let above = if ay < n - 1 { face(x, ay) } else { outer };
                (below, above)
            } else {
                let y = ay.min(by);
                let left = if ax > 0 { face(ax - 1, y) } else { outer };
                let right = if ax < n - 1 { face(ax, y) } else { outer };
                (left, right)
            };
            edges.push(pair);
        }
        DualGraph {
            n,
            graph: EdgeGraph::new(outer + 1, edges),
        }
    }

    pub fn graph(&self) -> &EdgeGraph {
        &self.graph
    }

    pub fn outer_vertex(&self) -> VertexId {
        (self.n - 1) * (self.n - 1)
    }

    pub fn num_faces(&self) -> usize {
        (self.n - 1) * (self.n - 1)
    }

    pub fn dual_edge(&self, e: EdgeId) -> DualEdge {
        DualEdge(e)
    }

    pub fn primal_edge(&self, d: DualEdge) -> EdgeId {
        d.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_boxes() {
        let l2 = Lattice::new(2).unwrap();
        assert_eq!(l2.num_vertices(), 4);
        assert_eq!(l2.num_edges(), 4);
        assert_eq!(l2.boundary().len(), 4);

        let l3 = Lattice::new(3).unwrap();
        assert_eq!(l3.num_vertices(), 9);
        assert_eq!(l3.num_edges(), 12);
        assert_eq!(l3.boundary().len(), 8);
        assert!(!l3.is_boundary(l3.vertex(1, 1)));

        let l4 = Lattice::new(4).unwrap();
        for s in Side::ALL {
            assert_eq!(l4.side(s).len(), 4);
        }
        assert_eq!(l4.sides_of(l4.vertex(0, 0)), vec![Side::Bottom, Side::Left]);
        assert_eq!(l4.sides_of(l4.vertex(3, 3)), vec![Side::Top, Side::Right]);
        assert_eq!(l4.sides_of(l4.vertex(1, 0)), vec![Side::Bottom]);
    }

    #[test]
    fn rejects_tiny() {
        assert_eq!(Lattice::new(1), Err(Error::InvalidSize(1)));
        assert_eq!(Lattice::new(0), Err(Error::InvalidSize(0)));
    }

    #[test]
    fn degrees_and_counts() {
        for n in 2..=16 {
            let lat = Lattice::new(n).unwrap();
            assert_eq!(lat.num_edges(), 2 * n * (n - 1));
            for v in 0..lat.num_vertices() {
                let expect = match lat.sides_of(v).len() {
                    0 => 4,
                    1 => 3,
                    2 => 2,
                    _ => unreachable!(),
                };
                assert_eq!(lat.graph().degree(v), expect, "n={n} v={v}");
            }
            let dual = lat.dual();
            assert_eq!(dual.graph().num_edges(), lat.num_edges());
            // Euler: faces including the outer one = E - V + 2
            assert_eq!(dual.graph().num_vertices(), lat.num_edges() + 2 - lat.num_vertices());
        }
    }

    #[test]
    fn edge_order_contract() {
        let lat = Lattice::new(3).unwrap();
        assert_eq!(lat.graph().endpoints(0), (0, 1));
        assert_eq!(lat.graph().endpoints(1), (1, 2));
        assert_eq!(lat.graph().endpoints(2), (3, 4));
        assert_eq!(lat.graph().endpoints(6), (0, 3));
        assert_eq!(lat.graph().endpoints(11), (5, 8));
        assert_eq!(lat.horizontal_edge(1, 2), 5);
        assert_eq!(lat.vertical_edge(2, 1), 11);
        assert_eq!(lat.edge_between(4, 1), Some(lat.vertical_edge(1, 0)));
        assert_eq!(lat.edge_between(0, 4), None);
    }

    #[test]
    fn central_box_is_interior() {
        let lat = Lattice::new(9).unwrap();
        let e = lat.horizontal_edge(4, 4);
        let b = lat.box_region(e, 2).unwrap();
        assert_eq!((b.rect.width(), b.rect.height()), (6, 5));
        assert!(b.vertices.iter().all(|&v| !lat.is_boundary(v)));
        // brute-force distance check over all vertices
        for v in 0..lat.num_vertices() {
            let d2 = lat.edge_vertex_dist2(e, v);
            if !b.contains(v) {
                assert!(d2 >= 4);
            }
            if d2 <= 4 {
                assert!(b.contains(v));
            }
        }
    }

    #[test]
    fn corner_box_clips() {
        let lat = Lattice::new(5).unwrap();
        let b = lat.box_region(lat.horizontal_edge(0, 0), 3).unwrap();
        assert!(b.vertices.iter().any(|&v| lat.is_boundary(v)));
        assert_eq!(b.rect.x0, 0);
        assert_eq!(b.rect.y0, 0);
    }

    #[test]
    fn saturated_box() {
        let lat = Lattice::new(4).unwrap();
        for e in 0..lat.num_edges() {
            let b = lat.box_region(e, 8).unwrap();
            assert_eq!(b.vertices.len(), 16);
            assert!(b.outer_edges.is_empty());
            assert!(b.inner_boundary.is_empty());
        }
    }

    #[test]
    fn box_monotone_in_radius() {
        let lat = Lattice::new(10).unwrap();
        for e in (0..lat.num_edges()).step_by(7) {
            for r in 1..6 {
                let small = lat.box_region(e, r).unwrap();
                let big = lat.box_region(e, r + 1).unwrap();
                assert!(small.vertices.iter().all(|&v| big.contains(v)));
                assert!(small.inner_edges.iter().all(|e| big.inner_edges.contains(e)));
                assert_eq!(small.inner_edges.len() + small.outer_edges.len(), lat.num_edges());
            }
        }
    }

    #[test]
    fn dual_of_small_boxes() {
        let l2 = Lattice::new(2).unwrap();
        let d2 = l2.dual();
        assert_eq!(d2.graph().num_vertices(), 2);
        assert_eq!(d2.graph().num_edges(), 4);
        for e in 0..4 {
            let (a, b) = d2.graph().endpoints(e);
            assert_eq!((a.min(b), a.max(b)), (0, 1));
        }
        let l3 = Lattice::new(3).unwrap();
        let d3 = l3.dual();
        assert_eq!(d3.graph().num_vertices(), 5);
        assert_eq!(d3.graph().num_edges(), 12);
        for e in 0..12 {
            assert_eq!(d3.primal_edge(d3.dual_edge(e)), e);
            // an edge on the box boundary crosses into the outer face
            let (a, b) = l3.graph().endpoints(e);
            let on_boundary = l3.is_boundary(a) && l3.is_boundary(b);
            let (fa, fb) = d3.graph().endpoints(e);
            let touches_outer = fa == d3.outer_vertex() || fb == d3.outer_vertex();
            assert_eq!(on_boundary, touches_outer);
        }
    }
}
