//! Exact integer geometry for bonds and lattice triangles.
//!
//! All coordinates are integer lattice coordinates; segment parameters are
//! kept as exact rationals.

use num_rational::Ratio;

pub type Point = [i64; 2];
pub type Rational = Ratio<i64>;

fn cross(a: Point, b: Point) -> i64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

/// Twice the signed area of a triangle.
pub fn doubled_signed_area(tri: &[Point; 3]) -> i64 {
    cross(sub(tri[1], tri[0]), sub(tri[2], tri[0]))
}

/// Closed intersection of the segment `p + t r`, `t ∈ [0, 1]`, with a closed
/// triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SegmentClip {
    pub t0: Rational,
    pub t1: Rational,
    /// Local index `k` of the triangle edge `(v_k, v_{k+1})` whose supporting
    /// line contains the whole segment, if any.
    pub on_edge: Option<usize>,
}

impl SegmentClip {
    pub fn length(&self) -> Rational {
        self.t1 - self.t0
    }

    /// `⨍ χ_T` over the bond: interior points count 1, points on an edge ½.
    pub fn chi_weight(&self) -> Rational {
        match self.on_edge {
            Some(_) => self.length() / 2,
            None => self.length(),
        }
    }

    /// Variant where points on edges flagged in `full_edges` count 1.
    pub fn chi_weight_with(&self, full_edges: [bool; 3]) -> Rational {
        match self.on_edge {
            Some(k) if !full_edges[k] => self.length() / 2,
            _ => self.length(),
        }
    }
}

/// Intersects `{p + t r : t ∈ [0,1]}` with the closed triangle `tri`.
/// Returns `None` if the intersection is empty.
pub fn clip_segment(tri: &[Point; 3], p: Point, r: Point) -> Option<SegmentClip> {
    let orient = doubled_signed_area(tri).signum();
    assert!(orient != 0, "degenerate triangle");
    let mut lo = Rational::from_integer(0);
    let mut hi = Rational::from_integer(1);
    let mut on_edge = None;
    for k in 0..3 {
        let e = sub(tri[(k + 1) % 3], tri[k]);
        let a = orient * cross(e, sub(p, tri[k]));
        let b = orient * cross(e, r);
        if b == 0 {
            if a < 0 {
                return None;
            }
            if a == 0 {
                on_edge = Some(k);
            }
        } else if b > 0 {
            lo = lo.max(Rational::new(-a, b));
        } else {
            hi = hi.min(Rational::new(a, -b));
        }
    }
    (lo <= hi).then_some(SegmentClip {
        t0: lo,
        t1: hi,
        on_edge,
    })
}

/// Convex hull in counter-clockwise order without collinear points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &q in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if cross(sub(b, a), sub(q, a)) <= 0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(q);
        }
        hull.pop();
    }
    hull
}

/// Whether two convex polygons (counter-clockwise, positive area) intersect
/// in a set of positive area.
pub fn convex_overlap_has_area(a: &[Point], b: &[Point]) -> bool {
    !has_separating_edge(a, b) && !has_separating_edge(b, a)
}

fn has_separating_edge(a: &[Point], b: &[Point]) -> bool {
    for k in 0..a.len() {
        let e = sub(a[(k + 1) % a.len()], a[k]);
        // `a` lies in `cross(e, q - a_k) >= 0`; separation if `b` lies in `<= 0`.
        if b.iter().all(|&q| cross(e, sub(q, a[k])) <= 0) {
            return true;
        }
    }
    false
}

/// Whether two convex polygons share at least one point.
pub fn convex_polygons_touch(a: &[Point], b: &[Point]) -> bool {
    let strictly_outside = |a: &[Point], b: &[Point]| {
        (0..a.len()).any(|k| {
            let e = sub(a[(k + 1) % a.len()], a[k]);
            b.iter().all(|&q| cross(e, sub(q, a[k])) < 0)
        })
    };
    !strictly_outside(a, b) && !strictly_outside(b, a)
}
