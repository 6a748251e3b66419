//! Floor plans and structured triangulations of them.
//!
//! The domain is the rectangle `[0, width] x [0, height]`. Interior walls are
//! meshed like air and distinguished only by their element region, so the
//! physics can penalize them through coefficients.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const SNAP_EPS: f64 = 1e-9;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x0 - SNAP_EPS
            && p[0] <= self.x1 + SNAP_EPS
            && p[1] >= self.y0 - SNAP_EPS
            && p[1] <= self.y1 + SNAP_EPS
    }

    /// True when the interiors intersect (touching edges do not count).
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x0 < other.x1 - SNAP_EPS
            && other.x0 < self.x1 - SNAP_EPS
            && self.y0 < other.y1 - SNAP_EPS
            && other.y0 < self.y1 - SNAP_EPS
    }

    fn is_valid(&self) -> bool {
        self.x0.is_finite() && self.y0.is_finite() && self.x1 > self.x0 && self.y1 > self.y0
    }
}

/// Side of the outer boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    /// `y = 0`
    Bottom,
    /// `x = width`
    Right,
    /// `y = height`
    Top,
    /// `x = 0`
    Left,
}

impl Side {
    /// Inward unit normal.
    pub fn inward_normal(self) -> [f64; 2] {
        match self {
            Side::Bottom => [0.0, 1.0],
            Side::Right => [-1.0, 0.0],
            Side::Top => [0.0, -1.0],
            Side::Left => [1.0, 0.0],
        }
    }

    /// Index (0 = x, 1 = y) of the velocity component normal to this side.
    pub fn normal_component(self) -> usize {
        match self {
            Side::Bottom | Side::Top => 1,
            Side::Left | Side::Right => 0,
        }
    }
}

/// Interval `[start, end]` along one side of the outer boundary. The
/// coordinate is `x` on the bottom/top sides and `y` on the left/right sides.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundarySegment {
    pub side: Side,
    pub start: f64,
    pub end: f64,
}

impl BoundarySegment {
    pub const fn new(side: Side, start: f64, end: f64) -> Self {
        Self { side, start, end }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    fn contains(&self, side: Side, t: f64) -> bool {
        side == self.side && t >= self.start - SNAP_EPS && t <= self.end + SNAP_EPS
    }

    fn overlaps(&self, other: &BoundarySegment) -> bool {
        self.side == other.side
            && self.start < other.end - SNAP_EPS
            && other.start < self.end - SNAP_EPS
    }
}

/// Target region of the tracking cost.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Zone {
    Whole,
    Rect(Rect),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FloorPlan {
    pub width: f64,
    pub height: f64,
    pub walls: Vec<Rect>,
    /// Rectangles cut from the walls (doors, windows).
    pub openings: Vec<Rect>,
    pub outlet1: Option<BoundarySegment>,
    pub outlet2: Option<BoundarySegment>,
    pub inlet: Option<BoundarySegment>,
    pub heater1: Option<Rect>,
    pub heater2: Option<Rect>,
    pub zone: Zone,
    /// Extra rectangles whose corners become mesh lines; lets every candidate
    /// zone share one mesh.
    pub snap_rects: Vec<Rect>,
}

/// Number of zone placements in the canonical apartment.
pub const CANONICAL_ZONE_COUNT: usize = 18;

const CANONICAL_ZONE_X: [f64; 3] = [0.5, 1.5, 2.5];
const CANONICAL_ZONE_Y: [f64; 6] = [0.5, 1.5, 2.5, 5.5, 6.5, 7.5];

/// Lower-left corners of the 2x2 m canonical zones, row-major from the
/// bottom-left.
pub fn canonical_zone(index: usize) -> Result<Rect> {
    if index >= CANONICAL_ZONE_COUNT {
        return Err(Error::InvalidParameter(format!(
            "zone index {index} outside 0..{CANONICAL_ZONE_COUNT}"
        )));
    }
    let x = CANONICAL_ZONE_X[index % 3];
    let y = CANONICAL_ZONE_Y[index / 3];
    Ok(Rect::new(x, y, x + 2.0, y + 2.0))
}

impl FloorPlan {
    /// Empty rectangle with all boundary treated as wall.
    pub fn rectangle(width: f64, height: f64) -> Self {
        Self {
            width,
            height,
            walls: Vec::new(),
            openings: Vec::new(),
            outlet1: None,
            outlet2: None,
            inlet: None,
            heater1: None,
            heater2: None,
            zone: Zone::Whole,
            snap_rects: Vec::new(),
        }
    }

    /// Two-room 5 x 10 m apartment: an interior wall at `y = 5 ± 0.1` with a
    /// 1 m door, one fan outlet per room, the return inlet on the left side
    /// of the lower room, one 1 x 1 m heater per room.
    pub fn canonical() -> Self {
        let snap_rects = (0..CANONICAL_ZONE_COUNT)
            .map(|i| canonical_zone(i).expect("index in range"))
            .collect();
        Self {
            width: 5.0,
            height: 10.0,
            walls: vec![Rect::new(0.0, 4.9, 2.0, 5.1), Rect::new(3.0, 4.9, 5.0, 5.1)],
            openings: Vec::new(),
            outlet1: Some(BoundarySegment::new(Side::Bottom, 1.0, 1.5)),
            outlet2: Some(BoundarySegment::new(Side::Top, 3.5, 4.0)),
            inlet: Some(BoundarySegment::new(Side::Left, 2.0, 2.5)),
            heater1: Some(Rect::new(0.5, 1.0, 1.5, 2.0)),
            heater2: Some(Rect::new(3.5, 8.0, 4.5, 9.0)),
            zone: Zone::Whole,
            snap_rects,
        }
    }

    pub fn with_zone(mut self, zone: Zone) -> Self {
        self.zone = zone;
        self
    }

    pub fn domain(&self) -> Rect {
        Rect::new(0.0, 0.0, self.width, self.height)
    }

    pub fn zone_rect(&self) -> Rect {
        match self.zone {
            Zone::Whole => self.domain(),
            Zone::Rect(r) => r,
        }
    }

    fn segments(&self) -> impl Iterator<Item = (BoundaryTag, &BoundarySegment)> {
        [
            (BoundaryTag::Outlet1, self.outlet1.as_ref()),
            (BoundaryTag::Outlet2, self.outlet2.as_ref()),
            (BoundaryTag::Inlet, self.inlet.as_ref()),
        ]
        .into_iter()
        .filter_map(|(tag, s)| s.map(|s| (tag, s)))
    }

    fn side_length(&self, side: Side) -> f64 {
        match side {
            Side::Bottom | Side::Top => self.width,
            Side::Left | Side::Right => self.height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidGeometry(msg));
        if !(self.width > 0.0 && self.height > 0.0 && self.width.is_finite() && self.height.is_finite()) {
            return bad(format!("domain {} x {} must be positive", self.width, self.height));
        }
        let domain = self.domain();
        let inside = |r: &Rect| r.is_valid() && r.x0 >= -SNAP_EPS && r.y0 >= -SNAP_EPS && r.x1 <= domain.x1 + SNAP_EPS && r.y1 <= domain.y1 + SNAP_EPS;
        for (name, r) in self
            .walls
            .iter()
            .map(|r| ("wall", r))
            .chain(self.openings.iter().map(|r| ("opening", r)))
            .chain(self.heater1.iter().map(|r| ("heater 1", r)))
            .chain(self.heater2.iter().map(|r| ("heater 2", r)))
            .chain(self.snap_rects.iter().map(|r| ("snap rectangle", r)))
        {
            if !inside(r) {
                return bad(format!("{name} {r:?} is empty or leaves the domain"));
            }
        }
        if let Zone::Rect(z) = &self.zone {
            if !inside(z) {
                return bad(format!("zone {z:?} is empty or leaves the domain"));
            }
        }
        for (name, h) in [("heater 1", &self.heater1), ("heater 2", &self.heater2)] {
            if let Some(h) = h {
                if self.walls.iter().any(|w| w.overlaps(h)) {
                    return bad(format!("{name} overlaps a wall"));
                }
            }
        }
        let segs: Vec<_> = self.segments().collect();
        let mut covered = 0.0;
        for (tag, s) in &segs {
            if !(s.length() > 0.0) || s.start < -SNAP_EPS || s.end > self.side_length(s.side) + SNAP_EPS {
                return bad(format!("{tag:?} segment {s:?} must have positive width inside its side"));
            }
            covered += s.length();
        }
        for (i, (ta, a)) in segs.iter().enumerate() {
            for (tb, b) in &segs[i + 1..] {
                if a.overlaps(b) {
                    return bad(format!("{ta:?} and {tb:?} segments overlap"));
                }
            }
        }
        if covered >= 2.0 * (self.width + self.height) - SNAP_EPS {
            return bad("vents cover the whole boundary; no wall segment left".into());
        }
        Ok(())
    }

    /// Smallest dimension among vents, heaters and the zone; the mesh size
    /// may not exceed it.
    pub fn smallest_feature(&self) -> f64 {
        let mut m = self.width.min(self.height);
        for (_, s) in self.segments() {
            m = m.min(s.length());
        }
        for r in self.heater1.iter().chain(self.heater2.iter()) {
            m = m.min(r.width()).min(r.height());
        }
        if let Zone::Rect(z) = &self.zone {
            m = m.min(z.width()).min(z.height());
        }
        m
    }

    fn breakpoints(&self) -> (Vec<f64>, Vec<f64>) {
        let mut xs = vec![0.0, self.width];
        let mut ys = vec![0.0, self.height];
        let zone = match self.zone {
            Zone::Rect(r) => Some(r),
            Zone::Whole => None,
        };
        for r in self
            .walls
            .iter()
            .chain(&self.openings)
            .chain(&self.heater1)
            .chain(&self.heater2)
            .chain(&zone)
            .chain(&self.snap_rects)
        {
            let r = Rect::new(
                r.x0.max(0.0),
                r.y0.max(0.0),
                r.x1.min(self.width),
                r.y1.min(self.height),
            );
            xs.extend([r.x0, r.x1]);
            ys.extend([r.y0, r.y1]);
        }
        for (_, s) in self.segments() {
            match s.side {
                Side::Bottom | Side::Top => xs.extend([s.start, s.end]),
                Side::Left | Side::Right => ys.extend([s.start, s.end]),
            }
        }
        let clean = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-7);
        };
        clean(&mut xs);
        clean(&mut ys);
        (xs, ys)
    }

    fn region_of(&self, p: [f64; 2]) -> Region {
        let in_wall = self.walls.iter().any(|w| w.contains_strict(p))
            && !self.openings.iter().any(|o| o.contains_strict(p));
        if in_wall {
            Region::Wall
        } else if self.heater1.is_some_and(|h| h.contains_strict(p)) {
            Region::Heater1
        } else if self.heater2.is_some_and(|h| h.contains_strict(p)) {
            Region::Heater2
        } else {
            Region::Air
        }
    }

    fn boundary_tag(&self, p: [f64; 2]) -> Option<BoundaryTag> {
        let (side, t) = if p[1].abs() < SNAP_EPS {
            (Side::Bottom, p[0])
        } else if (p[1] - self.height).abs() < SNAP_EPS {
            (Side::Top, p[0])
        } else if p[0].abs() < SNAP_EPS {
            (Side::Left, p[1])
        } else if (p[0] - self.width).abs() < SNAP_EPS {
            (Side::Right, p[1])
        } else {
            return None;
        };
        Some(
            self.segments()
                .find(|(_, s)| s.contains(side, t))
                .map_or(BoundaryTag::Wall, |(tag, _)| tag),
        )
    }
}

impl Rect {
    fn contains_strict(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

/// Material of a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Region {
    Air,
    Wall,
    Heater1,
    Heater2,
}

impl Region {
    pub fn code(self) -> i32 {
        match self {
            Region::Air => 0,
            Region::Wall => 1,
            Region::Heater1 => 2,
            Region::Heater2 => 3,
        }
    }

    /// Heaters are air for the flow and diffusion coefficients.
    pub fn is_wall(self) -> bool {
        self == Region::Wall
    }
}

/// Boundary segment type of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoundaryTag {
    Outlet1,
    Outlet2,
    Inlet,
    Wall,
}

/// How each structured grid cell is split into triangles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MeshPattern {
    /// Two triangles per cell along the lower-left to upper-right diagonal.
    #[default]
    Diagonal,
    /// Four triangles per cell around an added center vertex.
    Crossed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Index into [`Mesh::edges`].
    pub edge: usize,
    pub side: Side,
    pub tag: BoundaryTag,
}

/// Conforming triangulation with region and boundary tags.
///
/// Triangles are counter-clockwise. Local edge `i` of a triangle joins its
/// local vertices `i` and `(i + 1) % 3`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Vertex pairs `(a, b)` with `a < b`.
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    pub element_region: Vec<Region>,
    pub zone_elements: Vec<usize>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub width: f64,
    pub height: f64,
}

/// Degree-of-freedom counts `(N_Te, N_p, N_u)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeCounts {
    pub temperature: usize,
    pub pressure: usize,
    pub velocity: usize,
}

fn subdivide(breaks: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        let n = (crate::math::ceil(len / h - 1e-9) as usize).max(1);
        for k in 1..=n {
            out.push(if k == n { w[1] } else { w[0] + len * k as f64 / n as f64 });
        }
    }
    out
}

/// Structured triangulation of `fp` whose grid lines pass through every
/// wall, opening, heater, zone and vent coordinate; each interval between
/// such lines is split evenly into cells no wider than `target_h`.
pub fn generate(fp: &FloorPlan, target_h: f64, pattern: MeshPattern) -> Result<Mesh> {
    fp.validate()?;
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "mesh size must be positive, got {target_h}"
        )));
    }
    let feature = fp.smallest_feature();
    if target_h > feature + SNAP_EPS {
        return Err(Error::InvalidGeometry(format!(
            "mesh size {target_h} m exceeds the smallest feature ({feature} m); vents, heaters and zone would not be resolved"
        )));
    }
    let (bx, by) = fp.breakpoints();
    let xs = subdivide(&bx, target_h);
    let ys = subdivide(&by, target_h);
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;

    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in &ys {
        for &x in &xs {
            vertices.push([x, y]);
        }
    }
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let a = grid(i, j);
            let b = grid(i + 1, j);
            let c = grid(i + 1, j + 1);
            let d = grid(i, j + 1);
            match pattern {
                MeshPattern::Diagonal => {
                    triangles.push([a, b, c]);
                    triangles.push([a, c, d]);
                }
                MeshPattern::Crossed => {
                    let m = vertices.len();
                    vertices.push([0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])]);
                    triangles.extend([[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
                }
            }
        }
    }
    Mesh::from_triangles(fp, vertices, triangles)
}

impl Mesh {
    /// Builds edge tables and tags for an arbitrary conforming CCW triangle
    /// list covering `fp`'s domain.
    pub fn from_triangles(fp: &FloorPlan, vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut edge_ids: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut edges = Vec::new();
        let mut edge_count: Vec<usize> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut te = [0usize; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_count.push(0);
                    edges.len() - 1
                });
                edge_count[id] += 1;
                *slot = id;
            }
            triangle_edges.push(te);
        }
        if let Some(e) = edge_count.iter().position(|&c| c > 2) {
            return Err(Error::InvalidGeometry(format!("edge {:?} shared by more than two triangles", edges[e])));
        }

        let mut boundary_edges = Vec::new();
        for (id, e) in edges.iter().enumerate() {
            if edge_count[id] != 1 {
                continue;
            }
            let (p, q) = (vertices[e[0]], vertices[e[1]]);
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            let side = if mid[1].abs() < SNAP_EPS {
                Side::Bottom
            } else if (mid[1] - fp.height).abs() < SNAP_EPS {
                Side::Top
            } else if mid[0].abs() < SNAP_EPS {
                Side::Left
            } else if (mid[0] - fp.width).abs() < SNAP_EPS {
                Side::Right
            } else {
                return Err(Error::InvalidGeometry(format!(
                    "boundary edge at ({}, {}) is not on the outer rectangle",
                    mid[0], mid[1]
                )));
            };
            let tag = fp.boundary_tag(mid).unwrap_or(BoundaryTag::Wall);
            boundary_edges.push(BoundaryEdge { edge: id, side, tag });
        }

        let centroid = |t: &[usize; 3]| {
            let mut c = [0.0; 2];
            for &v in t {
                c[0] += vertices[v][0] / 3.0;
                c[1] += vertices[v][1] / 3.0;
            }
            c
        };
        let element_region: Vec<Region> = triangles.iter().map(|t| fp.region_of(centroid(t))).collect();
        let zone_elements = match fp.zone {
            Zone::Whole => (0..triangles.len()).collect(),
            Zone::Rect(z) => (0..triangles.len())
                .filter(|&k| z.contains_strict(centroid(&triangles[k])))
                .collect(),
        };

        let mesh = Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            element_region,
            zone_elements,
            boundary_edges,
            width: fp.width,
            height: fp.height,
        };
        for (k, _) in mesh.triangles.iter().enumerate() {
            if !(mesh.triangle_area(k) > 0.0) {
                return Err(Error::InvalidGeometry(format!("triangle {k} is degenerate or clockwise")));
            }
        }
        Ok(mesh)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `N_w`: vertices plus edge midpoints.
    pub fn num_p2_nodes(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    pub fn node_counts(&self) -> NodeCounts {
        NodeCounts {
            temperature: self.num_vertices(),
            pressure: self.num_vertices(),
            velocity: 2 * self.num_p2_nodes(),
        }
    }

    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Coordinates of P2 node `j` (vertices first, then edge midpoints).
    pub fn p2_node(&self, j: usize) -> [f64; 2] {
        if j < self.vertices.len() {
            self.vertices[j]
        } else {
            self.edge_midpoint(j - self.vertices.len())
        }
    }

    /// Signed area; positive for counter-clockwise triangles.
    pub fn triangle_area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangles[k];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|k| self.triangle_area(k)).sum()
    }

    pub fn zone_area(&self) -> f64 {
        self.zone_elements.iter().map(|&k| self.triangle_area(k)).sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.num_triangles())
            .filter(|&k| self.element_region[k] == region)
            .map(|k| self.triangle_area(k))
            .sum()
    }

    /// Flags vertices lying on the outer boundary.
    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_vertices()];
        for be in &self.boundary_edges {
            let [a, b] = self.edges[be.edge];
            mask[a] = true;
            mask[b] = true;
        }
        mask
    }

    /// Number of triangles sharing each edge.
    pub fn edge_multiplicity(&self) -> Vec<usize> {
        let mut count = vec![0usize; self.num_edges()];
        for te in &self.triangle_edges {
            for &e in te {
                count[e] += 1;
            }
        }
        count
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.boundary_edges
            .iter()
            .filter(|be| be.tag == tag)
            .map(|be| {
                let [a, b] = self.edges[be.edge];
                let (p, q) = (self.vertices[a], self.vertices[b]);
                crate::math::hypot(q[0] - p[0], q[1] - p[1])
            })
            .sum()
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: [f64; 2]) -> Result<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        for k in 0..self.num_triangles() {
            let l = self.barycentric(k, p);
            if l.iter().all(|&v| v >= -TOL) {
                return Ok((k, l));
            }
        }
        Err(Error::PointOutsideMesh { x: p[0], y: p[1] })
    }

    pub fn barycentric(&self, k: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.triangles[k];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let det = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]);
        let l1 = ((p[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (p[1] - pa[1])) / det;
        let l2 = ((pb[0] - pa[0]) * (p[1] - pa[1]) - (p[0] - pa[0]) * (pb[1] - pa[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }
}
