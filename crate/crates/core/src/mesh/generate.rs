//! Cantilever benchmark geometries meshed by constrained Delaunay refinement.

use std::collections::HashSet;
use std::f64::consts::PI;

use spade::{ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use super::{signed_area, BoundaryLabel, Mesh};
use crate::error::{Error, Result};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hole {
    pub center: Vec2,
    pub radius: f64,
}

/// Beam `[0, width] × [0, height]` clamped on the left edge and loaded on a
/// centered strip of the right edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub width: f64,
    pub height: f64,
    /// Target element edge length.
    pub h: f64,
    /// Length of the loaded strip as a fraction of `height`.
    pub strip: f64,
    pub holes: Vec<Hole>,
}

/// Radius giving six holes a combined area of `45 - 40.59`.
pub const SIX_HOLE_RADIUS: f64 = 0.483_691_809_259_869_7;

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            width: 10.0,
            height: 4.5,
            h: 0.5,
            strip: 0.1,
            holes: Vec::new(),
        }
    }
}

impl GeometryConfig {
    /// The 10 × 4.5 beam with two rows of three holes.
    pub fn six_holes(h: f64) -> Self {
        GeometryConfig {
            h,
            holes: Self::six_hole_layout(10.0, 4.5, SIX_HOLE_RADIUS),
            ..Default::default()
        }
    }

    /// Hole centers at `x ∈ {W/4, W/2, 3W/4}` and `y ∈ {H/3, 2H/3}`.
    pub fn six_hole_layout(width: f64, height: f64, radius: f64) -> Vec<Hole> {
        let mut holes = Vec::with_capacity(6);
        for &fy in &[1.0 / 3.0, 2.0 / 3.0] {
            for &fx in &[0.25, 0.5, 0.75] {
                holes.push(Hole {
                    center: Vec2::new(fx * width, fy * height),
                    radius,
                });
            }
        }
        holes
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.width, self.height, self.h, self.strip]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Geometry("non-finite geometry parameter".into()));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(Error::Geometry(format!(
                "beam must have positive size, got {} x {}",
                self.width, self.height
            )));
        }
        if self.h <= 0.0 {
            return Err(Error::Geometry(format!(
                "element size must be positive, got {}",
                self.h
            )));
        }
        if !(self.strip > 0.0 && self.strip < 1.0) {
            return Err(Error::Geometry(format!(
                "load strip fraction must lie in (0, 1), got {}",
                self.strip
            )));
        }
        for (i, hole) in self.holes.iter().enumerate() {
            let (c, r) = (hole.center, hole.radius);
            if !(r > 0.0) {
                return Err(Error::Geometry(format!("hole {i} has non-positive radius {r}")));
            }
            if c.x - r <= 0.0 || c.x + r >= self.width || c.y - r <= 0.0 || c.y + r >= self.height {
                return Err(Error::Geometry(format!("hole {i} is not strictly inside the beam")));
            }
            for (j, other) in self.holes.iter().enumerate().skip(i + 1) {
                if (other.center - c).norm() <= other.radius + r {
                    return Err(Error::Geometry(format!("holes {i} and {j} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Number of polygon sides used for a hole of radius `r`.
    pub fn hole_segments(&self, r: f64) -> usize {
        ((2.0 * PI * r / self.h).ceil() as usize).max(12)
    }

    /// Area of the inscribed polygon that replaces a hole.
    pub fn hole_polygon_area(&self, r: f64) -> f64 {
        let n = self.hole_segments(r) as f64;
        0.5 * n * r * r * (2.0 * PI / n).sin()
    }

    /// Exact area of the polygonal domain.
    pub fn polygon_area(&self) -> f64 {
        self.width * self.height - self.holes.iter().map(|h| self.hole_polygon_area(h.radius)).sum::<f64>()
    }

    fn strip_bounds(&self) -> (f64, f64) {
        let half = 0.5 * self.strip * self.height;
        (0.5 * self.height - half, 0.5 * self.height + half)
    }
}

/// Meshes the plain rectangle; any holes in `cfg` are ignored.
pub fn build_bulky_cantilever(cfg: &GeometryConfig) -> Result<Mesh> {
    let plain = GeometryConfig {
        holes: Vec::new(),
        ..cfg.clone()
    };
    plain.validate()?;
    triangulate(&plain)
}

/// Meshes the rectangle with six circular holes.
pub fn build_holed_cantilever(cfg: &GeometryConfig) -> Result<Mesh> {
    if cfg.holes.len() != 6 {
        return Err(Error::Geometry(format!(
            "holed cantilever needs six holes, got {}",
            cfg.holes.len()
        )));
    }
    cfg.validate()?;
    triangulate(cfg)
}

fn subdivide(a: Vec2, b: Vec2, h: f64, out: &mut Vec<Vec2>) {
    let n = ((b - a).norm() / h).ceil().max(1.0) as usize;
    for k in 0..n {
        out.push(a + (b - a) * (k as f64 / n as f64));
    }
}

fn triangulate(cfg: &GeometryConfig) -> Result<Mesh> {
    let (w, hgt, h) = (cfg.width, cfg.height, cfg.h);
    let (s0, s1) = cfg.strip_bounds();

    // outer loop, counterclockwise, with the strip ends as corners
    let corners = [
        Vec2::new(0.0, 0.0),
        Vec2::new(w, 0.0),
        Vec2::new(w, s0),
        Vec2::new(w, s1),
        Vec2::new(w, hgt),
        Vec2::new(0.0, hgt),
    ];
    let mut points = Vec::new();
    let mut edges = Vec::new();
    let mut outer = Vec::new();
    for i in 0..corners.len() {
        subdivide(corners[i], corners[(i + 1) % corners.len()], h, &mut outer);
    }
    push_loop(&mut points, &mut edges, &outer);
    for hole in &cfg.holes {
        let n = cfg.hole_segments(hole.radius);
        let ring: Vec<Vec2> = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                hole.center + Vec2::new(a.cos(), a.sin()) * hole.radius
            })
            .collect();
        push_loop(&mut points, &mut edges, &ring);
    }

    let spade_points: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p.x, p.y)).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(spade_points, edges)
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;

    let max_area = 3f64.sqrt() / 4.0 * h * h;
    let budget = (20.0 * cfg.polygon_area() / max_area) as usize + 10_000;
    let result = cdt.refine(
        RefinementParameters::new()
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(budget)
            .exclude_outer_faces(true),
    );
    if !result.refinement_complete {
        log::warn!("mesh refinement stopped at the vertex budget");
    }
    let excluded: HashSet<_> = result.excluded_faces.into_iter().collect();

    let raw: Vec<Vec2> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            Vec2::new(p.x, p.y)
        })
        .collect();
    let mut remap = vec![usize::MAX; raw.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        if excluded.contains(&face.fix()) {
            continue;
        }
        let mut tri = face.vertices().map(|v| v.fix().index());
        if signed_area(raw[tri[0]], raw[tri[1]], raw[tri[2]]) < 0.0 {
            tri.swap(1, 2);
        }
        for v in tri.iter_mut() {
            if remap[*v] == usize::MAX {
                remap[*v] = vertices.len();
                vertices.push(raw[*v]);
            }
            *v = remap[*v];
        }
        triangles.push(tri);
    }

    let boundary = label_boundary(cfg, &vertices, &triangles);
    Mesh::new(vertices, triangles, boundary)
}

fn push_loop(points: &mut Vec<Vec2>, edges: &mut Vec<[usize; 2]>, ring: &[Vec2]) {
    let base = points.len();
    points.extend_from_slice(ring);
    for k in 0..ring.len() {
        edges.push([base + k, base + (k + 1) % ring.len()]);
    }
}

fn label_boundary(
    cfg: &GeometryConfig,
    vertices: &[Vec2],
    triangles: &[[usize; 3]],
) -> Vec<([usize; 2], BoundaryLabel)> {
    let mut directed = HashSet::new();
    for t in triangles {
        for i in 0..3 {
            directed.insert((t[i], t[(i + 1) % 3]));
        }
    }
    let tol = 1e-9 * cfg.width.max(cfg.height);
    let (s0, s1) = cfg.strip_bounds();
    let in_strip = |p: Vec2| p.y >= s0 - tol && p.y <= s1 + tol;
    let mut boundary: Vec<_> = directed
        .iter()
        .filter(|&&(a, b)| !directed.contains(&(b, a)))
        .map(|&(a, b)| {
            let (p, q) = (vertices[a], vertices[b]);
            let label = if p.x.abs() < tol && q.x.abs() < tol {
                BoundaryLabel::Dirichlet
            } else if (p.x - cfg.width).abs() < tol && (q.x - cfg.width).abs() < tol && in_strip(p) && in_strip(q) {
                BoundaryLabel::Neumann
            } else {
                BoundaryLabel::Free
            };
            ([a, b], label)
        })
        .collect();
    boundary.sort_by_key(|&(pair, _)| pair);
    boundary
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bulky_area_and_labels() {
        let m = build_bulky_cantilever(&GeometryConfig::default()).unwrap();
        assert_relative_eq!(m.volume(), 45.0, max_relative = 1e-12);
        assert!(m.min_jacobian() > 0.0);
        let strip: f64 = m
            .boundary_edges_with(BoundaryLabel::Neumann)
            .map(|b| m.edge_length(b.edge))
            .sum();
        assert_relative_eq!(strip, 0.45, epsilon = 1e-12);
        let clamp: f64 = m
            .boundary_edges_with(BoundaryLabel::Dirichlet)
            .map(|b| m.edge_length(b.edge))
            .sum();
        assert_relative_eq!(clamp, 4.5, epsilon = 1e-12);
    }

    #[test]
    fn small_rectangles() {
        let unit = GeometryConfig {
            width: 1.0,
            height: 1.0,
            h: 0.5,
            ..Default::default()
        };
        let m = build_bulky_cantilever(&unit).unwrap();
        assert!(m.num_triangles() >= 2);
        assert!((0..m.num_triangles()).all(|t| m.signed_area(t) > 0.0));

        let two = GeometryConfig {
            width: 2.0,
            height: 1.0,
            h: 0.3,
            ..Default::default()
        };
        let m = build_bulky_cantilever(&two).unwrap();
        assert_relative_eq!(m.boundary_length(), 6.0, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_configs_rejected() {
        let flat = GeometryConfig {
            height: 0.0,
            ..Default::default()
        };
        assert!(build_bulky_cantilever(&flat).is_err());
        let mut holes = GeometryConfig::six_holes(0.5);
        holes.holes[0].radius = 0.0;
        assert!(build_holed_cantilever(&holes).is_err());
        let mut overlap = GeometryConfig::six_holes(0.5);
        overlap.holes[1].center = overlap.holes[0].center + Vec2::new(0.5, 0.0);
        assert!(build_holed_cantilever(&overlap).is_err());
    }

    #[test]
    fn six_hole_area_near_target() {
        let cfg = GeometryConfig::six_holes(0.4);
        let m = build_holed_cantilever(&cfg).unwrap();
        assert_relative_eq!(m.volume(), cfg.polygon_area(), max_relative = 1e-12);
        assert!((m.volume() - 40.59).abs() / 40.59 < 0.01);
        assert!(m.min_jacobian() > 0.0);
    }

    #[test]
    fn hole_polygon_area_converges_quadratically() {
        let r = SIX_HOLE_RADIUS;
        let exact = PI * r * r;
        let mut defects = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let cfg = GeometryConfig {
                h,
                ..Default::default()
            };
            defects.push(exact - cfg.hole_polygon_area(r));
        }
        for w in defects.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
        }
    }
}
