//! Manifold triangle mesh over 2D screen coordinates.
//!
//! Halfedges are allocated in twin pairs, so edge `e` owns halfedges `2e` and
//! `2e + 1`. Boundary halfedges have no face and are linked into loops around
//! each hole. A boundary vertex always stores an outgoing boundary halfedge.
//!
//! Elements removed by collapses are tombstoned; [`ScreenMesh::compact`]
//! renumbers everything.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::error::{Error, Result};

/// Minimum signed screen area a face may have after an edit, in px².
pub const MIN_FACE_AREA: f64 = 1e-9;

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn idx(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(VertexId);
id_type!(HalfedgeId);
id_type!(EdgeId);
id_type!(FaceId);

impl HalfedgeId {
    #[inline]
    pub fn twin(self) -> HalfedgeId {
        HalfedgeId(self.0 ^ 1)
    }

    #[inline]
    pub fn edge(self) -> EdgeId {
        EdgeId(self.0 >> 1)
    }
}

impl EdgeId {
    #[inline]
    pub fn halfedge(self, side: u32) -> HalfedgeId {
        HalfedgeId(self.0 * 2 + side)
    }
}

/// Per-vertex data carried through edits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexData {
    pub position: Vector2<f64>,
    /// Optimal edge length `L_v` in pixels.
    pub target_length: f64,
    /// Aggregated curvature `κ_v` in 1/pixel.
    pub curvature: f64,
}

impl VertexData {
    pub fn at(position: Vector2<f64>) -> Self {
        VertexData {
            position,
            target_length: 0.0,
            curvature: 0.0,
        }
    }
}

/// Per-face cached geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceData {
    pub normal: Vector3<f64>,
    /// First fundamental form `I_f` evaluated with the face normal.
    pub first_form: Matrix2<f64>,
}

impl Default for FaceData {
    fn default() -> Self {
        FaceData {
            normal: Vector3::z(),
            first_form: Matrix2::identity(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Halfedge {
    to: VertexId,
    next: HalfedgeId,
    prev: HalfedgeId,
    face: Option<FaceId>,
}

/// Why a local edit was refused. The mesh is untouched in every case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    Deleted,
    BoundaryEdge,
    NotConvex,
    EdgeExists,
    LinkCondition,
    /// A surviving face would become degenerate or inverted.
    Degenerate,
    /// The edit would move or remove a boundary vertex off the boundary.
    BoundaryConstraint,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Rejection::Deleted => "element was deleted",
            Rejection::BoundaryEdge => "boundary edge",
            Rejection::NotConvex => "quad is not strictly convex",
            Rejection::EdgeExists => "flipped edge already exists",
            Rejection::LinkCondition => "link condition violated",
            Rejection::Degenerate => "a face would degenerate or invert",
            Rejection::BoundaryConstraint => "boundary vertex would leave the boundary",
        };
        f.write_str(msg)
    }
}

/// Counter-clockwise ordered neighborhood of a vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneRing {
    pub vertices: Vec<VertexId>,
    pub faces: Vec<FaceId>,
}

#[inline]
pub fn signed_area(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenMesh {
    vertices: Vec<VertexData>,
    vertex_out: Vec<Option<HalfedgeId>>,
    vertex_alive: Vec<bool>,
    halfedges: Vec<Halfedge>,
    edge_alive: Vec<bool>,
    faces: Vec<FaceData>,
    face_halfedge: Vec<HalfedgeId>,
    face_alive: Vec<bool>,
    live_vertices: usize,
    live_edges: usize,
    live_faces: usize,
}

impl ScreenMesh {
    /// Build a mesh from vertex data and positively oriented triangles.
    ///
    /// Fails on non-manifold edges or vertices, and on vertices no triangle
    /// uses.
    pub fn from_triangles(vertices: Vec<VertexData>, triangles: &[[u32; 3]]) -> Result<Self> {
        Self::from_triangles_with(vertices, triangles, None)
    }

    fn from_triangles_with(
        vertices: Vec<VertexData>,
        triangles: &[[u32; 3]],
        face_data: Option<Vec<FaceData>>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut mesh = ScreenMesh {
            vertex_out: vec![None; nv],
            vertex_alive: vec![true; nv],
            vertices,
            halfedges: Vec::with_capacity(triangles.len() * 3 + 64),
            edge_alive: Vec::with_capacity(triangles.len() * 3 / 2 + 32),
            faces: face_data.unwrap_or_else(|| vec![FaceData::default(); triangles.len()]),
            face_halfedge: Vec::with_capacity(triangles.len()),
            face_alive: vec![true; triangles.len()],
            live_vertices: nv,
            live_edges: 0,
            live_faces: triangles.len(),
        };

        let mut lookup: HashMap<(u32, u32), HalfedgeId> =
            HashMap::with_capacity(triangles.len() * 3);
        for (fi, tri) in triangles.iter().enumerate() {
            let face = FaceId(fi as u32);
            let mut hs = [HalfedgeId(0); 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if a == b || a as usize >= nv || b as usize >= nv {
                    return Err(Error::NonManifold(format!("invalid triangle {tri:?}")));
                }
                let h = match lookup.get(&(a, b)) {
                    Some(&h) => {
                        if mesh.halfedges[h.idx()].face.is_some() {
                            return Err(Error::NonManifold(format!("edge ({a}, {b}) used twice")));
                        }
                        h
                    }
                    None => {
                        let h = mesh.new_edge(VertexId(a), VertexId(b));
                        lookup.insert((a, b), h);
                        lookup.insert((b, a), h.twin());
                        h
                    }
                };
                mesh.halfedges[h.idx()].face = Some(face);
                hs[k] = h;
            }
            for k in 0..3 {
                mesh.link(hs[k], hs[(k + 1) % 3]);
            }
            mesh.face_halfedge.push(hs[0]);
        }

        // Link boundary halfedges into loops.
        let mut boundary_out: Vec<Option<HalfedgeId>> = vec![None; nv];
        for hi in 0..mesh.halfedges.len() {
            let h = HalfedgeId(hi as u32);
            if mesh.halfedges[hi].face.is_none() {
                let from = mesh.from(h);
                if boundary_out[from.idx()].replace(h).is_some() {
                    return Err(Error::NonManifold(format!(
                        "vertex {} joins several boundary fans",
                        from.0
                    )));
                }
            }
        }
        for hi in 0..mesh.halfedges.len() {
            let h = HalfedgeId(hi as u32);
            if mesh.halfedges[hi].face.is_none() {
                let next = boundary_out[mesh.to(h).idx()].expect("boundary loop is closed");
                mesh.link(h, next);
            }
        }

        let mut out_count = vec![0usize; nv];
        for hi in 0..mesh.halfedges.len() {
            let h = HalfedgeId(hi as u32);
            let from = mesh.from(h);
            out_count[from.idx()] += 1;
            if mesh.vertex_out[from.idx()].is_none() {
                mesh.vertex_out[from.idx()] = Some(h);
            }
        }
        for v in 0..nv {
            if let Some(b) = boundary_out[v] {
                mesh.vertex_out[v] = Some(b);
            }
            if mesh.vertex_out[v].is_none() {
                return Err(Error::NonManifold(format!(
                    "vertex {v} is not used by any face"
                )));
            }
            if mesh.outgoing(VertexId(v as u32)).count() != out_count[v] {
                return Err(Error::NonManifold(format!("vertex {v} has several fans")));
            }
        }
        Ok(mesh)
    }

    // ---- element allocation and raw links ----

    fn new_edge(&mut self, a: VertexId, b: VertexId) -> HalfedgeId {
        let h = HalfedgeId(self.halfedges.len() as u32);
        let blank = Halfedge {
            to: b,
            next: h,
            prev: h,
            face: None,
        };
        self.halfedges.push(blank);
        self.halfedges.push(Halfedge {
            to: a,
            next: h.twin(),
            prev: h.twin(),
            face: None,
        });
        self.edge_alive.push(true);
        self.live_edges += 1;
        h
    }

    fn new_face(&mut self, data: FaceData, h: HalfedgeId) -> FaceId {
        let f = FaceId(self.faces.len() as u32);
        self.faces.push(data);
        self.face_halfedge.push(h);
        self.face_alive.push(true);
        self.live_faces += 1;
        f
    }

    fn new_vertex(&mut self, data: VertexData) -> VertexId {
        let v = VertexId(self.vertices.len() as u32);
        self.vertices.push(data);
        self.vertex_out.push(None);
        self.vertex_alive.push(true);
        self.live_vertices += 1;
        v
    }

    #[inline]
    fn link(&mut self, a: HalfedgeId, b: HalfedgeId) {
        self.halfedges[a.idx()].next = b;
        self.halfedges[b.idx()].prev = a;
    }

    #[inline]
    fn set_to(&mut self, h: HalfedgeId, v: VertexId) {
        self.halfedges[h.idx()].to = v;
    }

    #[inline]
    fn set_face(&mut self, h: HalfedgeId, f: Option<FaceId>) {
        self.halfedges[h.idx()].face = f;
    }

    // ---- queries ----

    pub fn vertex_count(&self) -> usize {
        self.live_vertices
    }

    pub fn edge_count(&self) -> usize {
        self.live_edges
    }

    pub fn face_count(&self) -> usize {
        self.live_faces
    }

    /// Upper bound (exclusive) on vertex ids, including tombstones.
    pub fn vertex_capacity(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_capacity(&self) -> usize {
        self.edge_alive.len()
    }

    pub fn face_capacity(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertices.len())
            .filter(|&i| self.vertex_alive[i])
            .map(|i| VertexId(i as u32))
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_alive.len())
            .filter(|&i| self.edge_alive[i])
            .map(|i| EdgeId(i as u32))
    }

    pub fn faces(&self) -> impl Iterator<Item = FaceId> + '_ {
        (0..self.faces.len())
            .filter(|&i| self.face_alive[i])
            .map(|i| FaceId(i as u32))
    }

    pub fn is_vertex_alive(&self, v: VertexId) -> bool {
        self.vertex_alive.get(v.idx()).copied().unwrap_or(false)
    }

    pub fn is_edge_alive(&self, e: EdgeId) -> bool {
        self.edge_alive.get(e.idx()).copied().unwrap_or(false)
    }

    pub fn is_face_alive(&self, f: FaceId) -> bool {
        self.face_alive.get(f.idx()).copied().unwrap_or(false)
    }

    #[inline]
    pub fn vertex(&self, v: VertexId) -> &VertexData {
        &self.vertices[v.idx()]
    }

    #[inline]
    pub fn vertex_mut(&mut self, v: VertexId) -> &mut VertexData {
        &mut self.vertices[v.idx()]
    }

    #[inline]
    pub fn position(&self, v: VertexId) -> Vector2<f64> {
        self.vertices[v.idx()].position
    }

    #[inline]
    pub fn face(&self, f: FaceId) -> &FaceData {
        &self.faces[f.idx()]
    }

    #[inline]
    pub fn face_mut(&mut self, f: FaceId) -> &mut FaceData {
        &mut self.faces[f.idx()]
    }

    #[inline]
    pub fn to(&self, h: HalfedgeId) -> VertexId {
        self.halfedges[h.idx()].to
    }

    #[inline]
    pub fn from(&self, h: HalfedgeId) -> VertexId {
        self.halfedges[h.twin().idx()].to
    }

    #[inline]
    pub fn next(&self, h: HalfedgeId) -> HalfedgeId {
        self.halfedges[h.idx()].next
    }

    #[inline]
    pub fn prev(&self, h: HalfedgeId) -> HalfedgeId {
        self.halfedges[h.idx()].prev
    }

    #[inline]
    pub fn face_of(&self, h: HalfedgeId) -> Option<FaceId> {
        self.halfedges[h.idx()].face
    }

    #[inline]
    pub fn is_boundary_halfedge(&self, h: HalfedgeId) -> bool {
        self.halfedges[h.idx()].face.is_none()
    }

    pub fn is_boundary_edge(&self, e: EdgeId) -> bool {
        self.is_boundary_halfedge(e.halfedge(0)) || self.is_boundary_halfedge(e.halfedge(1))
    }

    pub fn is_boundary_vertex(&self, v: VertexId) -> bool {
        match self.vertex_out[v.idx()] {
            Some(h) => self.is_boundary_halfedge(h),
            None => true,
        }
    }

    /// An outgoing halfedge; boundary vertices return their boundary one.
    pub fn vertex_halfedge(&self, v: VertexId) -> Option<HalfedgeId> {
        self.vertex_out[v.idx()]
    }

    pub fn edge_vertices(&self, e: EdgeId) -> (VertexId, VertexId) {
        let h = e.halfedge(0);
        (self.from(h), self.to(h))
    }

    pub fn face_halfedges(&self, f: FaceId) -> [HalfedgeId; 3] {
        let h0 = self.face_halfedge[f.idx()];
        let h1 = self.next(h0);
        [h0, h1, self.next(h1)]
    }

    pub fn face_vertices(&self, f: FaceId) -> [VertexId; 3] {
        self.face_halfedges(f).map(|h| self.from(h))
    }

    pub fn face_positions(&self, f: FaceId) -> [Vector2<f64>; 3] {
        self.face_vertices(f).map(|v| self.position(v))
    }

    pub fn face_area(&self, f: FaceId) -> f64 {
        let [a, b, c] = self.face_positions(f);
        signed_area(a, b, c)
    }

    pub fn face_centroid(&self, f: FaceId) -> Vector2<f64> {
        let [a, b, c] = self.face_positions(f);
        (a + b + c) / 3.0
    }

    /// Outgoing halfedges of `v`, rotating counter-clockwise. For a boundary
    /// vertex the first one is the outgoing boundary halfedge.
    pub fn outgoing(&self, v: VertexId) -> Outgoing<'_> {
        let start = self.vertex_out[v.idx()];
        Outgoing {
            mesh: self,
            start,
            current: start,
        }
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.outgoing(v).map(move |h| self.to(h))
    }

    /// Faces incident to `v` (its star).
    pub fn vertex_faces(&self, v: VertexId) -> impl Iterator<Item = FaceId> + '_ {
        self.outgoing(v).filter_map(move |h| self.face_of(h))
    }

    pub fn one_ring(&self, v: VertexId) -> OneRing {
        OneRing {
            vertices: self.neighbors(v).collect(),
            faces: self.vertex_faces(v).collect(),
        }
    }

    pub fn valence(&self, v: VertexId) -> usize {
        self.outgoing(v).count()
    }

    pub fn find_halfedge(&self, a: VertexId, b: VertexId) -> Option<HalfedgeId> {
        self.outgoing(a).find(|&h| self.to(h) == b)
    }

    /// Live triangles as vertex id triples.
    pub fn triangles(&self) -> Vec<[VertexId; 3]> {
        self.faces().map(|f| self.face_vertices(f)).collect()
    }

    // ---- edits ----

    /// Insert a vertex at `position` on edge `e`, splitting the adjacent
    /// faces. The new faces copy the data of the face they were cut from; the
    /// new vertex gets the mean target length and curvature of the endpoints.
    pub fn split_edge(&mut self, e: EdgeId, position: Vector2<f64>) -> VertexId {
        let h0 = e.halfedge(0);
        let o0 = h0.twin();
        let v2 = self.to(o0);
        let va = self.to(h0);
        let (da, db) = (self.vertices[va.idx()], self.vertices[v2.idx()]);
        let v = self.new_vertex(VertexData {
            position,
            target_length: 0.5 * (da.target_length + db.target_length),
            curvature: 0.5 * (da.curvature + db.curvature),
        });

        let e1 = self.new_edge(v, v2);
        let t1 = e1.twin();
        let f0 = self.face_of(h0);
        let f3 = self.face_of(o0);

        self.vertex_out[v.idx()] = Some(h0);
        self.set_to(o0, v);

        if let Some(f0) = f0 {
            let h1 = self.next(h0);
            let h2 = self.next(h1);
            let v1 = self.to(h1);
            let e0 = self.new_edge(v, v1);
            let t0 = e0.twin();
            let f1 = self.new_face(self.faces[f0.idx()], h2);
            self.face_halfedge[f0.idx()] = h0;

            self.set_face(h1, Some(f0));
            self.set_face(t0, Some(f0));
            self.set_face(h0, Some(f0));
            self.set_face(h2, Some(f1));
            self.set_face(t1, Some(f1));
            self.set_face(e0, Some(f1));

            self.link(h0, h1);
            self.link(h1, t0);
            self.link(t0, h0);
            self.link(e0, h2);
            self.link(h2, t1);
            self.link(t1, e0);
        } else {
            let p = self.prev(h0);
            self.link(p, t1);
            self.link(t1, h0);
        }

        if let Some(f3) = f3 {
            let o1 = self.next(o0);
            let o2 = self.next(o1);
            let v3 = self.to(o1);
            let e2 = self.new_edge(v, v3);
            let t2 = e2.twin();
            let f2 = self.new_face(self.faces[f3.idx()], o1);
            self.face_halfedge[f3.idx()] = o0;

            self.set_face(o1, Some(f2));
            self.set_face(t2, Some(f2));
            self.set_face(e1, Some(f2));
            self.set_face(o2, Some(f3));
            self.set_face(o0, Some(f3));
            self.set_face(e2, Some(f3));

            self.link(e1, o1);
            self.link(o1, t2);
            self.link(t2, e1);
            self.link(o0, e2);
            self.link(e2, o2);
            self.link(o2, o0);
        } else {
            let n = self.next(o0);
            self.link(e1, n);
            self.link(o0, e1);
            self.vertex_out[v.idx()] = Some(e1);
        }

        if self.vertex_out[v2.idx()] == Some(h0) {
            self.vertex_out[v2.idx()] = Some(t1);
        }
        v
    }

    fn check_collapse_topology(&self, h: HalfedgeId) -> Result<(), Rejection> {
        let v0v1 = h;
        let v1v0 = h.twin();
        let v0 = self.to(v1v0);
        let v1 = self.to(v0v1);

        let ear = |start: HalfedgeId| -> Result<Option<VertexId>, Rejection> {
            if self.is_boundary_halfedge(start) {
                return Ok(None);
            }
            let h1 = self.next(start);
            let h2 = self.next(h1);
            if self.is_boundary_halfedge(h1.twin()) && self.is_boundary_halfedge(h2.twin()) {
                return Err(Rejection::LinkCondition);
            }
            Ok(Some(self.to(h1)))
        };
        let vl = ear(v0v1)?;
        let vr = ear(v1v0)?;
        if vl == vr {
            return Err(Rejection::LinkCondition);
        }
        if self.is_boundary_vertex(v0)
            && self.is_boundary_vertex(v1)
            && !self.is_boundary_halfedge(v0v1)
            && !self.is_boundary_halfedge(v1v0)
        {
            return Err(Rejection::LinkCondition);
        }
        for a in self.neighbors(v0) {
            if a == v1 || Some(a) == vl || Some(a) == vr {
                continue;
            }
            if self.neighbors(v1).any(|b| b == a) {
                return Err(Rejection::LinkCondition);
            }
        }
        Ok(())
    }

    /// Check whether collapsing `h` (removing `from(h)`, moving `to(h)` to
    /// `target`) is legal.
    pub fn check_collapse(&self, h: HalfedgeId, target: Vector2<f64>) -> Result<(), Rejection> {
        if !self.is_edge_alive(h.edge()) {
            return Err(Rejection::Deleted);
        }
        let removed = self.from(h);
        let kept = self.to(h);
        if self.is_boundary_vertex(removed) && !self.is_boundary_edge(h.edge()) {
            return Err(Rejection::BoundaryConstraint);
        }
        if self.is_boundary_vertex(kept) && target != self.position(kept) {
            return Err(Rejection::BoundaryConstraint);
        }
        self.check_collapse_topology(h)?;

        let skip = [self.face_of(h), self.face_of(h.twin())];
        for v in [removed, kept] {
            for f in self.vertex_faces(v) {
                if skip.contains(&Some(f)) {
                    continue;
                }
                let p = self.face_vertices(f).map(|w| {
                    if w == removed || w == kept {
                        target
                    } else {
                        self.position(w)
                    }
                });
                if signed_area(p[0], p[1], p[2]) <= MIN_FACE_AREA {
                    return Err(Rejection::Degenerate);
                }
            }
        }
        Ok(())
    }

    /// Collapse halfedge `h`: `from(h)` is removed and `to(h)` moves to
    /// `target`. Boundary vertices may only be removed along a boundary edge
    /// and never move.
    pub fn collapse_edge(&mut self, h: HalfedgeId, target: Vector2<f64>) -> Result<(), Rejection> {
        self.check_collapse(h, target)?;
        let kept = self.to(h);
        self.vertices[kept.idx()].position = target;

        let h1 = self.prev(h);
        let o1 = self.next(h.twin());
        self.remove_edge_helper(h);
        if self.next(self.next(h1)) == h1 {
            self.remove_loop_helper(h1);
        }
        if self.next(self.next(o1)) == o1 {
            self.remove_loop_helper(o1);
        }
        Ok(())
    }

    fn remove_edge_helper(&mut self, h: HalfedgeId) {
        let hn = self.next(h);
        let hp = self.prev(h);
        let o = h.twin();
        let on = self.next(o);
        let op = self.prev(o);
        let fh = self.face_of(h);
        let fo = self.face_of(o);
        let vh = self.to(h);
        let vo = self.to(o);

        let incoming: Vec<HalfedgeId> = self.outgoing(vo).map(HalfedgeId::twin).collect();
        for hc in incoming {
            self.set_to(hc, vh);
        }

        self.link(hp, hn);
        self.link(op, on);
        if let Some(fh) = fh {
            self.face_halfedge[fh.idx()] = hn;
        }
        if let Some(fo) = fo {
            self.face_halfedge[fo.idx()] = on;
        }
        if self.vertex_out[vh.idx()] == Some(o) {
            self.vertex_out[vh.idx()] = Some(hn);
        }
        self.adjust_outgoing(vh);

        self.vertex_out[vo.idx()] = None;
        self.vertex_alive[vo.idx()] = false;
        self.live_vertices -= 1;
        self.edge_alive[h.edge().idx()] = false;
        self.live_edges -= 1;
    }

    fn remove_loop_helper(&mut self, h: HalfedgeId) {
        let h0 = h;
        let h1 = self.next(h0);
        let o0 = h0.twin();
        let o1 = h1.twin();
        let v0 = self.to(h0);
        let v1 = self.to(h1);
        let fh = self.face_of(h0);
        let fo = self.face_of(o0);

        let after = self.next(o0);
        let before = self.prev(o0);
        self.link(h1, after);
        self.link(before, h1);
        self.set_face(h1, fo);

        self.vertex_out[v0.idx()] = Some(h1);
        self.adjust_outgoing(v0);
        self.vertex_out[v1.idx()] = Some(o1);
        self.adjust_outgoing(v1);

        if let Some(fo) = fo {
            if self.face_halfedge[fo.idx()] == o0 {
                self.face_halfedge[fo.idx()] = h1;
            }
        }
        if let Some(fh) = fh {
            self.face_alive[fh.idx()] = false;
            self.live_faces -= 1;
        }
        self.edge_alive[h0.edge().idx()] = false;
        self.live_edges -= 1;
    }

    fn adjust_outgoing(&mut self, v: VertexId) {
        if let Some(b) = self.outgoing(v).find(|&h| self.is_boundary_halfedge(h)) {
            self.vertex_out[v.idx()] = Some(b);
        }
    }

    /// Check whether edge `e` can be flipped: interior, strictly convex quad,
    /// and the new diagonal not already present.
    pub fn check_flip(&self, e: EdgeId) -> Result<(), Rejection> {
        if !self.is_edge_alive(e) {
            return Err(Rejection::Deleted);
        }
        if self.is_boundary_edge(e) {
            return Err(Rejection::BoundaryEdge);
        }
        let h0 = e.halfedge(0);
        let h1 = e.halfedge(1);
        let p = self.from(h0);
        let q = self.to(h0);
        let r = self.to(self.next(h0));
        let s = self.to(self.next(h1));
        if r == s || self.find_halfedge(r, s).is_some() {
            return Err(Rejection::EdgeExists);
        }
        let (pp, pq, pr, ps) = (
            self.position(p),
            self.position(q),
            self.position(r),
            self.position(s),
        );
        if signed_area(pp, ps, pr) <= MIN_FACE_AREA || signed_area(ps, pq, pr) <= MIN_FACE_AREA {
            return Err(Rejection::NotConvex);
        }
        Ok(())
    }

    /// Replace edge `e` by the other diagonal of its quad. The two faces keep
    /// their ids; their cached data is replaced by the average of both.
    pub fn flip_edge(&mut self, e: EdgeId) -> Result<(), Rejection> {
        self.check_flip(e)?;
        let a0 = e.halfedge(0);
        let b0 = e.halfedge(1);
        let a1 = self.next(a0);
        let a2 = self.next(a1);
        let b1 = self.next(b0);
        let b2 = self.next(b1);
        let va0 = self.to(a0);
        let va1 = self.to(a1);
        let vb0 = self.to(b0);
        let vb1 = self.to(b1);
        let fa = self.face_of(a0).expect("interior edge");
        let fb = self.face_of(b0).expect("interior edge");

        self.set_to(a0, va1);
        self.set_to(b0, vb1);

        self.link(a0, a2);
        self.link(a2, b1);
        self.link(b1, a0);
        self.link(b0, b2);
        self.link(b2, a1);
        self.link(a1, b0);

        self.set_face(a1, Some(fb));
        self.set_face(b1, Some(fa));
        self.face_halfedge[fa.idx()] = a0;
        self.face_halfedge[fb.idx()] = b0;

        if self.vertex_out[va0.idx()] == Some(b0) {
            self.vertex_out[va0.idx()] = Some(a1);
        }
        if self.vertex_out[vb0.idx()] == Some(a0) {
            self.vertex_out[vb0.idx()] = Some(b1);
        }

        let (da, db) = (self.faces[fa.idx()], self.faces[fb.idx()]);
        let n = da.normal + db.normal;
        let merged = FaceData {
            normal: if n.norm() > 0.0 {
                n.normalize()
            } else {
                da.normal
            },
            first_form: (da.first_form + db.first_form) * 0.5,
        };
        self.faces[fa.idx()] = merged;
        self.faces[fb.idx()] = merged;
        Ok(())
    }

    /// Drop tombstones and renumber all elements, preserving the relative
    /// order of surviving vertices and faces.
    pub fn compact(&mut self) {
        if self.live_vertices == self.vertices.len() && self.live_faces == self.faces.len() {
            return;
        }
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::with_capacity(self.live_vertices);
        for v in self.vertices() {
            remap[v.idx()] = vertices.len() as u32;
            vertices.push(self.vertices[v.idx()]);
        }
        let mut tris = Vec::with_capacity(self.live_faces);
        let mut data = Vec::with_capacity(self.live_faces);
        for f in self.faces() {
            tris.push(self.face_vertices(f).map(|v| remap[v.idx()]));
            data.push(self.faces[f.idx()]);
        }
        *self = ScreenMesh::from_triangles_with(vertices, &tris, Some(data))
            .expect("a valid mesh stays valid under renumbering");
    }

    /// Connected component label per vertex id (tombstones get `u32::MAX`)
    /// and the number of components.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let mut label = vec![u32::MAX; self.vertices.len()];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        for seed in self.vertices() {
            if label[seed.idx()] != u32::MAX {
                continue;
            }
            label[seed.idx()] = count;
            queue.push_back(seed);
            while let Some(v) = queue.pop_front() {
                for w in self.neighbors(v) {
                    if label[w.idx()] == u32::MAX {
                        label[w.idx()] = count;
                        queue.push_back(w);
                    }
                }
            }
            count += 1;
        }
        (label, count as usize)
    }

    /// Full consistency check: links, triangle faces, positive orientation,
    /// single fans, no duplicate edges and Euler characteristic per
    /// component (`V − E + F = 2 − b` for genus 0).
    pub fn validate(&self) -> Result<(), String> {
        let mut out_count = vec![0usize; self.vertices.len()];
        for e in self.edges() {
            for side in 0..2 {
                let h = e.halfedge(side);
                let he = &self.halfedges[h.idx()];
                if !self.is_vertex_alive(he.to) {
                    return Err(format!("halfedge {} points to a dead vertex", h.0));
                }
                if self.prev(he.next) != h || self.next(he.prev) != h {
                    return Err(format!("halfedge {} has broken next/prev links", h.0));
                }
                if !self.is_edge_alive(he.next.edge()) {
                    return Err(format!("halfedge {} links to a dead edge", h.0));
                }
                if self.face_of(he.next) != he.face {
                    return Err(format!(
                        "halfedge {} and its successor disagree on face",
                        h.0
                    ));
                }
                if let Some(f) = he.face {
                    if !self.is_face_alive(f) {
                        return Err(format!("halfedge {} references dead face {}", h.0, f.0));
                    }
                }
                if self.from(h) == self.to(h) {
                    return Err(format!("halfedge {} is a loop", h.0));
                }
                if self.from(he.next) != he.to {
                    return Err(format!(
                        "halfedge {} successor does not start at its tip",
                        h.0
                    ));
                }
                out_count[self.from(h).idx()] += 1;
            }
        }

        for f in self.faces() {
            let h0 = self.face_halfedge[f.idx()];
            if self.face_of(h0) != Some(f) {
                return Err(format!("face {} points at a foreign halfedge", f.0));
            }
            if self.next(self.next(self.next(h0))) != h0 {
                return Err(format!("face {} is not a triangle", f.0));
            }
            let area = self.face_area(f);
            if !(area > 0.0) {
                return Err(format!("face {} has non-positive area {area}", f.0));
            }
        }

        for v in self.vertices() {
            let Some(h) = self.vertex_out[v.idx()] else {
                return Err(format!("vertex {} is isolated", v.0));
            };
            if !self.is_edge_alive(h.edge()) || self.from(h) != v {
                return Err(format!("vertex {} has an invalid outgoing halfedge", v.0));
            }
            let fan: Vec<VertexId> = self.neighbors(v).collect();
            if fan.len() != out_count[v.idx()] {
                return Err(format!("vertex {} is not a single fan", v.0));
            }
            let boundary = self
                .outgoing(v)
                .filter(|&h| self.is_boundary_halfedge(h))
                .count();
            if boundary > 1 || (boundary == 1 && !self.is_boundary_halfedge(h)) {
                return Err(format!("vertex {} has inconsistent boundary fans", v.0));
            }
            let mut sorted = fan.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != fan.len() {
                return Err(format!("vertex {} has duplicate edges", v.0));
            }
        }

        let (label, count) = self.components();
        let mut chi = vec![0i64; count];
        for v in self.vertices() {
            chi[label[v.idx()] as usize] += 1;
        }
        for e in self.edges() {
            chi[label[self.edge_vertices(e).0.idx()] as usize] -= 1;
        }
        for f in self.faces() {
            chi[label[self.face_vertices(f)[0].idx()] as usize] += 1;
        }
        let mut loops = vec![0i64; count];
        let mut seen = vec![false; self.halfedges.len()];
        for e in self.edges() {
            for side in 0..2 {
                let start = e.halfedge(side);
                if !self.is_boundary_halfedge(start) || seen[start.idx()] {
                    continue;
                }
                let mut h = start;
                loop {
                    seen[h.idx()] = true;
                    h = self.next(h);
                    if h == start {
                        break;
                    }
                    if seen[h.idx()] || !self.is_boundary_halfedge(h) {
                        return Err("boundary loop is not closed".into());
                    }
                }
                loops[label[self.from(start).idx()] as usize] += 1;
            }
        }
        for c in 0..count {
            if chi[c] != 2 - loops[c] {
                return Err(format!(
                    "component {c}: V - E + F = {} but {} boundary loop(s)",
                    chi[c], loops[c]
                ));
            }
        }
        Ok(())
    }
}

/// Counter-clockwise circulator over the outgoing halfedges of a vertex.
pub struct Outgoing<'a> {
    mesh: &'a ScreenMesh,
    start: Option<HalfedgeId>,
    current: Option<HalfedgeId>,
}

impl Iterator for Outgoing<'_> {
    type Item = HalfedgeId;

    fn next(&mut self) -> Option<HalfedgeId> {
        let h = self.current?;
        let next = self.mesh.prev(h).twin();
        self.current = if Some(next) == self.start {
            None
        } else {
            Some(next)
        };
        Some(h)
    }
}
