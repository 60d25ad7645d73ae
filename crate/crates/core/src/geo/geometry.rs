//! Planar lon/lat geometry: axis-aligned rectangles, polygons with holes,
//! rectangle clipping and shoelace areas.
//!
//! Coordinates are treated as planar. Only area ratios are consumed
//! downstream, and those are invariant under translation and uniform scaling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coord = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        let r = Rect {
            min_x,
            min_y,
            max_x,
            max_y,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.min_x, self.min_y, self.max_x, self.max_y]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.max_x <= self.min_x || self.max_y <= self.min_y {
            return Err(Error::EmptyGeometry(format!(
                "degenerate rectangle [{}, {}] x [{}, {}]",
                self.min_x, self.max_x, self.min_y, self.max_y
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Coord {
        [
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        ]
    }

    /// Bounding boxes overlap with positive area.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min_x < other.max_x
            && other.min_x < self.max_x
            && self.min_y < other.max_y
            && other.min_y < self.max_y
    }

    pub fn to_ring(&self) -> Vec<Coord> {
        vec![
            [self.min_x, self.min_y],
            [self.max_x, self.min_y],
            [self.max_x, self.max_y],
            [self.min_x, self.max_y],
        ]
    }
}

/// Simple polygon: one exterior ring plus optional holes. Rings are open
/// (the closing vertex is not repeated); orientation is irrelevant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub exterior: Vec<Coord>,
    #[serde(default)]
    pub holes: Vec<Vec<Coord>>,
}

impl Polygon {
    pub fn new(exterior: Vec<Coord>) -> Self {
        Polygon {
            exterior: open_ring(exterior),
            holes: Vec::new(),
        }
    }

    pub fn with_holes(exterior: Vec<Coord>, holes: Vec<Vec<Coord>>) -> Self {
        Polygon {
            exterior: open_ring(exterior),
            holes: holes.into_iter().map(open_ring).collect(),
        }
    }

    pub fn area(&self) -> f64 {
        let holes: f64 = self.holes.iter().map(|h| ring_area(h).abs()).sum();
        (ring_area(&self.exterior).abs() - holes).max(0.0)
    }

    pub fn clipped_area(&self, rect: &Rect) -> f64 {
        let outer = ring_area(&clip_ring(&self.exterior, rect)).abs();
        if outer == 0.0 {
            return 0.0;
        }
        let holes: f64 = self
            .holes
            .iter()
            .map(|h| ring_area(&clip_ring(h, rect)).abs())
            .sum();
        (outer - holes).max(0.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MultiPolygon(pub Vec<Polygon>);

impl MultiPolygon {
    pub fn single(polygon: Polygon) -> Self {
        MultiPolygon(vec![polygon])
    }

    pub fn from_rect(rect: &Rect) -> Self {
        MultiPolygon::single(Polygon::new(rect.to_ring()))
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.0
    }

    pub fn area(&self) -> f64 {
        self.0.iter().map(Polygon::area).sum()
    }

    /// Area of the intersection with an axis-aligned rectangle.
    pub fn clipped_area(&self, rect: &Rect) -> f64 {
        let bbox = match self.bbox() {
            Some(b) => b,
            None => return 0.0,
        };
        if !bbox.overlaps(rect) {
            return 0.0;
        }
        self.0.iter().map(|p| p.clipped_area(rect)).sum()
    }

    pub fn bbox(&self) -> Option<Rect> {
        let mut it = self.0.iter().flat_map(|p| p.exterior.iter());
        let first = it.next()?;
        let mut r = Rect {
            min_x: first[0],
            min_y: first[1],
            max_x: first[0],
            max_y: first[1],
        };
        for c in it {
            r.min_x = r.min_x.min(c[0]);
            r.min_y = r.min_y.min(c[1]);
            r.max_x = r.max_x.max(c[0]);
            r.max_y = r.max_y.max(c[1]);
        }
        Some(r)
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Option<Coord> {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut total = 0.0;
        for poly in &self.0 {
            for (ring, sign) in std::iter::once((&poly.exterior, 1.0))
                .chain(poly.holes.iter().map(|h| (h, -1.0)))
            {
                let a = ring_area(ring);
                if a == 0.0 {
                    continue;
                }
                let (rx, ry) = ring_centroid_moments(ring);
                // moments carry the ring's orientation sign; normalise to |a|
                let s = sign * a.signum();
                cx += s * rx;
                cy += s * ry;
                total += s * a;
            }
        }
        if total.abs() < f64::MIN_POSITIVE {
            return None;
        }
        Some([cx / total, cy / total])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() || self.0.iter().any(|p| p.exterior.len() < 3) {
            return Err(Error::EmptyGeometry("polygon with fewer than 3 vertices".into()));
        }
        let a = self.area();
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::EmptyGeometry("polygon with zero area".into()));
        }
        Ok(())
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        self.map_coords(|c| [c[0] + dx, c[1] + dy])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map_coords(|c| [c[0] * factor, c[1] * factor])
    }

    fn map_coords(&self, f: impl Fn(Coord) -> Coord + Copy) -> Self {
        MultiPolygon(
            self.0
                .iter()
                .map(|p| Polygon {
                    exterior: p.exterior.iter().map(|&c| f(c)).collect(),
                    holes: p
                        .holes
                        .iter()
                        .map(|h| h.iter().map(|&c| f(c)).collect())
                        .collect(),
                })
                .collect(),
        )
    }
}

/// Fraction of the rectangle's area covered by the polygon, `area(a ∩ b) / area(a)`.
pub fn overlap_fraction(rect: &Rect, polygon: &MultiPolygon) -> Result<f64> {
    rect.validate()?;
    Ok((polygon.clipped_area(rect) / rect.area()).clamp(0.0, 1.0))
}

fn open_ring(mut ring: Vec<Coord>) -> Vec<Coord> {
    if ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    ring
}

/// Signed shoelace area (positive for counter-clockwise rings).
pub fn ring_area(ring: &[Coord]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    // shift to the first vertex to limit cancellation for lon/lat magnitudes
    let [ox, oy] = ring[0];
    let mut acc = 0.0;
    for i in 0..n {
        let [x0, y0] = ring[i];
        let [x1, y1] = ring[(i + 1) % n];
        acc += (x0 - ox) * (y1 - oy) - (x1 - ox) * (y0 - oy);
    }
    0.5 * acc
}

/// First moments (Σ cx·A, Σ cy·A) of a ring, signed like `ring_area`.
fn ring_centroid_moments(ring: &[Coord]) -> (f64, f64) {
    let n = ring.len();
    let [ox, oy] = ring[0];
    let mut mx = 0.0;
    let mut my = 0.0;
    let mut a2 = 0.0;
    for i in 0..n {
        let (x0, y0) = (ring[i][0] - ox, ring[i][1] - oy);
        let (x1, y1) = (ring[(i + 1) % n][0] - ox, ring[(i + 1) % n][1] - oy);
        let cross = x0 * y1 - x1 * y0;
        a2 += cross;
        mx += (x0 + x1) * cross;
        my += (y0 + y1) * cross;
    }
    let area = 0.5 * a2;
    if a2 == 0.0 {
        return (0.0, 0.0);
    }
    let cx = mx / (3.0 * a2) + ox;
    let cy = my / (3.0 * a2) + oy;
    (cx * area, cy * area)
}

#[derive(Clone, Copy)]
enum Edge {
    Left(f64),
    Right(f64),
    Bottom(f64),
    Top(f64),
}

impl Edge {
    fn inside(self, p: Coord) -> bool {
        match self {
            Edge::Left(x) => p[0] >= x,
            Edge::Right(x) => p[0] <= x,
            Edge::Bottom(y) => p[1] >= y,
            Edge::Top(y) => p[1] <= y,
        }
    }

    fn intersect(self, a: Coord, b: Coord) -> Coord {
        match self {
            Edge::Left(x) | Edge::Right(x) => {
                let t = (x - a[0]) / (b[0] - a[0]);
                [x, a[1] + t * (b[1] - a[1])]
            }
            Edge::Bottom(y) | Edge::Top(y) => {
                let t = (y - a[1]) / (b[1] - a[1]);
                [a[0] + t * (b[0] - a[0]), y]
            }
        }
    }
}

/// Sutherland–Hodgman clip of a (possibly non-convex) ring against a rectangle.
/// Non-convex input may yield zero-width bridges, which do not change the area.
pub fn clip_ring(ring: &[Coord], rect: &Rect) -> Vec<Coord> {
    let edges = [
        Edge::Left(rect.min_x),
        Edge::Right(rect.max_x),
        Edge::Bottom(rect.min_y),
        Edge::Top(rect.max_y),
    ];
    let mut output: Vec<Coord> = ring.to_vec();
    for edge in edges {
        if output.is_empty() {
            break;
        }
        let input = std::mem::take(&mut output);
        let mut prev = *input.last().unwrap();
        for &cur in &input {
            let cur_in = edge.inside(cur);
            let prev_in = edge.inside(prev);
            if cur_in {
                if !prev_in {
                    output.push(edge.intersect(prev, cur));
                }
                output.push(cur);
            } else if prev_in {
                output.push(edge.intersect(prev, cur));
            }
            prev = cur;
        }
    }
    output
}
