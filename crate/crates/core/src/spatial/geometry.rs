//! Planar geometry: points, rings, polygons and the predicates the rest of the
//! crate needs (containment with boundary detection, area, shared-boundary
//! length).

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist2(other).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn empty() -> Self {
        BBox {
            min: Point::new(f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn extend(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        let mut b = *self;
        b.extend(other.min);
        b.extend(other.max);
        b
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn expanded(&self, by: f64) -> BBox {
        BBox {
            min: Point::new(self.min.x - by, self.min.y - by),
            max: Point::new(self.max.x + by, self.max.y + by),
        }
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    /// Largest absolute coordinate, used to scale geometric tolerances.
    pub fn magnitude(&self) -> f64 {
        [self.min.x, self.min.y, self.max.x, self.max.y]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

impl Containment {
    /// Boundary points count as contained.
    pub fn is_covered(self) -> bool {
        !matches!(self, Containment::Outside)
    }
}

/// Closed ring stored without the repeated closing vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<Point>,
}

impl Ring {
    /// `vertices` must not repeat the first vertex at the end.
    pub fn new(vertices: Vec<Point>) -> Self {
        Ring { vertices }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.segments()
            .map(|(a, b)| a.x * b.y - b.x * a.y)
            .sum::<f64>()
            / 2.0
    }

    pub fn bbox(&self) -> BBox {
        let mut b = BBox::empty();
        for v in &self.vertices {
            b.extend(*v);
        }
        b
    }

    /// True when no two non-adjacent edges touch and no adjacent edges overlap.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        let segs: Vec<(Point, Point)> = self.segments().collect();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = segs[i];
                let (c, d) = segs[j];
                if adjacent {
                    // Adjacent edges share exactly one vertex; they must not fold back.
                    let shared = if j == i + 1 { b } else { a };
                    let (other_i, other_j) = if j == i + 1 { (a, d) } else { (b, c) };
                    if cross(shared, other_i, other_j) == 0.0 {
                        let u = (other_i.x - shared.x, other_i.y - shared.y);
                        let v = (other_j.x - shared.x, other_j.y - shared.y);
                        if u.0 * v.0 + u.1 * v.1 > 0.0 {
                            return false;
                        }
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

/// Polygon with one exterior ring and zero or more holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Self {
        Polygon { exterior, holes }
    }

    pub fn rect(min: Point, max: Point) -> Self {
        Polygon::new(
            Ring::new(vec![
                min,
                Point::new(max.x, min.y),
                max,
                Point::new(min.x, max.y),
            ]),
            Vec::new(),
        )
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn area(&self) -> f64 {
        let holes: f64 = self.holes.iter().map(|h| h.signed_area().abs()).sum();
        (self.exterior.signed_area().abs() - holes).max(0.0)
    }

    pub fn bbox(&self) -> BBox {
        self.exterior.bbox()
    }

    pub fn containment(&self, p: Point) -> Containment {
        let eps = 1e-12 * self.bbox().magnitude().max(p.x.abs()).max(p.y.abs());
        let mut inside = false;
        for ring in self.rings() {
            for (a, b) in ring.segments() {
                if on_segment(p, a, b, eps) {
                    return Containment::Boundary;
                }
                // Even-odd crossing rule over all rings handles holes.
                if (a.y > p.y) != (b.y > p.y) {
                    let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                    if p.x < x_cross {
                        inside = !inside;
                    }
                }
            }
        }
        if inside {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }
}

/// One partition's footprint. A GeoJSON `MultiPolygon` maps to several parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub parts: Vec<Polygon>,
}

impl Shape {
    pub fn new(parts: Vec<Polygon>) -> Self {
        Shape { parts }
    }

    pub fn area(&self) -> f64 {
        self.parts.iter().map(Polygon::area).sum()
    }

    pub fn bbox(&self) -> BBox {
        self.parts
            .iter()
            .fold(BBox::empty(), |acc, p| acc.union(&p.bbox()))
    }

    pub fn containment(&self, p: Point) -> Containment {
        let mut best = Containment::Outside;
        for part in &self.parts {
            match part.containment(p) {
                Containment::Inside => return Containment::Inside,
                Containment::Boundary => best = Containment::Boundary,
                Containment::Outside => {}
            }
        }
        best
    }

    pub fn contains(&self, p: Point) -> bool {
        self.containment(p).is_covered()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.parts
            .iter()
            .flat_map(|poly| poly.rings())
            .flat_map(|r| r.segments())
    }

    pub fn is_simple(&self) -> bool {
        self.parts.iter().all(|p| p.rings().all(Ring::is_simple))
    }
}

/// Twice the signed area of triangle (o, a, b).
pub fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: Point, a: Point, b: Point, eps: f64) -> bool {
    let len = a.dist(&b);
    if len == 0.0 {
        return p.dist(&a) <= eps;
    }
    // Distance from p to the line through a, b.
    if cross(a, b, p).abs() / len > eps {
        return false;
    }
    p.x >= a.x.min(b.x) - eps
        && p.x <= a.x.max(b.x) + eps
        && p.y >= a.y.min(b.y) - eps
        && p.y <= a.y.max(b.y) + eps
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d, 0.0))
        || (d2 == 0.0 && on_segment(b, c, d, 0.0))
        || (d3 == 0.0 && on_segment(c, a, b, 0.0))
        || (d4 == 0.0 && on_segment(d, a, b, 0.0))
}

/// Length of the collinear overlap between segments `ab` and `cd`, or zero
/// when they are not collinear within `eps`.
pub fn collinear_overlap(a: Point, b: Point, c: Point, d: Point, eps: f64) -> f64 {
    let len = a.dist(&b);
    if len == 0.0 {
        return 0.0;
    }
    if cross(a, b, c).abs() / len > eps || cross(a, b, d).abs() / len > eps {
        return 0.0;
    }
    let ux = (b.x - a.x) / len;
    let uy = (b.y - a.y) / len;
    let tc = (c.x - a.x) * ux + (c.y - a.y) * uy;
    let td = (d.x - a.x) * ux + (d.y - a.y) * uy;
    let lo = tc.min(td).max(0.0);
    let hi = tc.max(td).min(len);
    (hi - lo).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Polygon {
        Polygon::rect(Point::new(0.0, 0.0), Point::new(1.0, 1.0))
    }

    #[test]
    fn square_containment() {
        let sq = unit_square();
        assert_eq!(sq.containment(Point::new(0.5, 0.5)), Containment::Inside);
        assert_eq!(sq.containment(Point::new(1.0, 0.5)), Containment::Boundary);
        assert_eq!(sq.containment(Point::new(0.0, 0.0)), Containment::Boundary);
        assert_eq!(sq.containment(Point::new(1.5, 0.5)), Containment::Outside);
        assert!((sq.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hole_is_excluded() {
        let outer = Ring::new(vec![
            Point::new(0.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(4.0, 4.0),
            Point::new(0.0, 4.0),
        ]);
        let hole = Ring::new(vec![
            Point::new(1.0, 1.0),
            Point::new(3.0, 1.0),
            Point::new(3.0, 3.0),
            Point::new(1.0, 3.0),
        ]);
        let poly = Polygon::new(outer, vec![hole]);
        assert_eq!(poly.containment(Point::new(2.0, 2.0)), Containment::Outside);
        assert_eq!(poly.containment(Point::new(0.5, 2.0)), Containment::Inside);
        assert!((poly.area() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn bowtie_is_not_simple() {
        let bowtie = Ring::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(!bowtie.is_simple());
        assert!(unit_square().exterior.is_simple());
    }

    #[test]
    fn overlap_of_collinear_segments() {
        let o = collinear_overlap(
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(1.0, 0.0),
            1e-9,
        );
        assert!((o - 1.0).abs() < 1e-12);
        let none = collinear_overlap(
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(2.0, 1.0),
            1e-9,
        );
        assert_eq!(none, 0.0);
    }
}
