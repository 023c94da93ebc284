//! Delaunay triangulation of a few dozen integer points with exact
//! predicates.
//!
//! Raster coordinates make co-circular quadruples common (every axis-aligned
//! rectangle of electrodes is one), where the Delaunay triangulation is not
//! unique. Candidates are all triangles with an empty open circumcircle;
//! they are accepted greedily in lexicographic vertex order, skipping any
//! that overlaps an accepted one. For each co-circular group this picks one
//! valid triangulation of its polygon, and the union always covers the
//! convex hull. The point count here is small enough that the cubic
//! candidate scan costs nothing.

pub type Point = (i64, i64);

pub fn orient(a: Point, b: Point, c: Point) -> i64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Positive iff `d` lies strictly inside the circumcircle of the
/// counter-clockwise triangle `abc`.
fn in_circle(a: Point, b: Point, c: Point, d: Point) -> i128 {
    let row = |p: Point| {
        let (x, y) = ((p.0 - d.0) as i128, (p.1 - d.1) as i128);
        (x, y, x * x + y * y)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    ax * (by * cw - bw * cy) - ay * (bx * cw - bw * cx) + aw * (bx * cy - by * cx)
}

/// True when the open interiors of two counter-clockwise triangles meet.
fn overlaps(t: [Point; 3], u: [Point; 3]) -> bool {
    let separated_by_edge_of = |s: [Point; 3], other: [Point; 3]| {
        (0..3).any(|i| {
            let (p, q) = (s[i], s[(i + 1) % 3]);
            other.iter().all(|&v| orient(p, q, v) <= 0)
        })
    };
    !(separated_by_edge_of(t, u) || separated_by_edge_of(u, t))
}

/// Counter-clockwise triangles as index triples into `points`.
pub fn delaunay(points: &[Point]) -> Vec<[usize; 3]> {
    let n = points.len();
    let mut accepted: Vec<[usize; 3]> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let o = orient(points[i], points[j], points[k]);
                if o == 0 {
                    continue;
                }
                let tri = if o > 0 { [i, j, k] } else { [i, k, j] };
                let [a, b, c] = tri.map(|v| points[v]);
                let empty = (0..n)
                    .filter(|&m| m != i && m != j && m != k)
                    .all(|m| in_circle(a, b, c, points[m]) <= 0);
                if !empty {
                    continue;
                }
                let corners = [a, b, c];
                if accepted
                    .iter()
                    .all(|t| !overlaps(t.map(|v| points[v]), corners))
                {
                    accepted.push(tri);
                }
            }
        }
    }
    accepted
}

/// Barycentric weights of `p` in the counter-clockwise triangle `abc`, or
/// `None` when `p` lies outside it. Points on an edge count as inside.
pub fn barycentric(a: Point, b: Point, c: Point, p: Point) -> Option<[f64; 3]> {
    let area = orient(a, b, c);
    let wa = orient(b, c, p);
    let wb = orient(c, a, p);
    let wc = orient(a, b, p);
    if wa < 0 || wb < 0 || wc < 0 {
        return None;
    }
    let area = area as f64;
    Some([wa as f64 / area, wb as f64 / area, wc as f64 / area])
}
