use crate::error::{Error, Result};
use crate::geometry::{Point2, RBox};

fn cross(o: Point2, a: Point2, b: Point2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull by Andrew's monotone chain, counterclockwise in a y-up
/// frame, collinear points dropped. Fewer than three distinct
/// non-collinear inputs yield a hull with fewer than three vertices.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|p, q| (p.x, p.y).partial_cmp(&(q.x, q.y)).unwrap());
    pts.dedup_by(|p, q| p.x == q.x && p.y == q.y);
    if pts.len() < 3 {
        return pts;
    }
    let chain = |iter: &mut dyn Iterator<Item = Point2>| {
        let mut out: Vec<Point2> = Vec::new();
        for p in iter {
            while out.len() >= 2 && cross(out[out.len() - 2], out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(p);
        }
        out.pop();
        out
    };
    let mut hull = chain(&mut pts.iter().copied());
    hull.extend(chain(&mut pts.iter().rev().copied()));
    hull
}

/// Minimum-area enclosing rotated rectangle of a point set.
///
/// The optimum has a side collinear with a hull edge, so the hull edges are
/// enumerated as calipers directions and the tightest rectangle is kept
/// (first minimum wins on ties, which keeps the result deterministic).
pub fn min_area_rect(points: &[Point2]) -> Result<RBox> {
    let hull = hull_or_degenerate(points)?;
    let mut best: Option<(f64, RBox)> = None;
    for i in 0..hull.len() {
        let p = hull[i];
        let q = hull[(i + 1) % hull.len()];
        let len = p.distance(q);
        if len == 0.0 {
            continue;
        }
        let ux = (q.x - p.x) / len;
        let uy = (q.y - p.y) / len;
        let (mut umin, mut umax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for r in &hull {
            let u = ux * r.x + uy * r.y;
            let v = -uy * r.x + ux * r.y;
            umin = umin.min(u);
            umax = umax.max(u);
            vmin = vmin.min(v);
            vmax = vmax.max(v);
        }
        let (w, h) = (umax - umin, vmax - vmin);
        let area = w * h;
        if best.as_ref().map_or(true, |(a, _)| area < *a) {
            let cu = 0.5 * (umin + umax);
            let cv = 0.5 * (vmin + vmax);
            let cx = ux * cu - uy * cv;
            let cy = uy * cu + ux * cv;
            best = Some((area, RBox::new(cx, cy, w, h, uy.atan2(ux))));
        }
    }
    best.map(|(_, r)| r)
        .ok_or_else(|| Error::DegenerateInput("no hull edges".into()))
}

fn hull_or_degenerate(points: &[Point2]) -> Result<Vec<Point2>> {
    if points.len() < 3 {
        return Err(Error::DegenerateInput(format!(
            "min_area_rect needs at least 3 points, got {}",
            points.len()
        )));
    }
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return Err(Error::DegenerateInput(
            "all points are collinear".into(),
        ));
    }
    Ok(hull)
}

#[derive(Clone, Copy, Debug)]
struct Circle {
    center: Point2,
    r: f64,
}

impl Circle {
    fn contains(&self, p: Point2) -> bool {
        self.center.distance(p) <= self.r * (1.0 + 1e-12) + 1e-12
    }
}

fn circle_two(a: Point2, b: Point2) -> Circle {
    let center = Point2::new(0.5 * (a.x + b.x), 0.5 * (a.y + b.y));
    Circle {
        center,
        r: center.distance(a).max(center.distance(b)),
    }
}

fn circle_three(a: Point2, b: Point2, c: Point2) -> Circle {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if d.abs() < 1e-12 {
        // collinear: widest pair wins
        let ab = circle_two(a, b);
        let ac = circle_two(a, c);
        let bc = circle_two(b, c);
        let mut best = ab;
        for cand in [ac, bc] {
            if cand.r > best.r {
                best = cand;
            }
        }
        return best;
    }
    let (na, nb, nc) = (
        a.x * a.x + a.y * a.y,
        b.x * b.x + b.y * b.y,
        c.x * c.x + c.y * c.y,
    );
    let ux = (na * (b.y - c.y) + nb * (c.y - a.y) + nc * (a.y - b.y)) / d;
    let uy = (na * (c.x - b.x) + nb * (a.x - c.x) + nc * (b.x - a.x)) / d;
    let center = Point2::new(ux, uy);
    Circle {
        center,
        r: center.distance(a).max(center.distance(b)).max(center.distance(c)),
    }
}

fn trivial_circle(support: &[Point2]) -> Circle {
    match support {
        [] => Circle {
            center: Point2::new(0.0, 0.0),
            r: 0.0,
        },
        [a] => Circle { center: *a, r: 0.0 },
        [a, b] => circle_two(*a, *b),
        [a, b, c] => circle_three(*a, *b, *c),
        _ => unreachable!("support set never exceeds 3 points"),
    }
}

fn welzl(pts: &[Point2], n: usize, support: &mut Vec<Point2>) -> Circle {
    if n == 0 || support.len() == 3 {
        return trivial_circle(support);
    }
    let p = pts[n - 1];
    let c = welzl(pts, n - 1, support);
    if c.contains(p) {
        return c;
    }
    support.push(p);
    let c = welzl(pts, n - 1, support);
    support.pop();
    c
}

/// Smallest circle containing every point, as `(center, radius)`.
///
/// Welzl's move-to-front recursion; exact up to floating error, no
/// randomness so equal inputs give equal outputs.
pub fn min_enclosing_circle(points: &[Point2]) -> Result<(Point2, f64)> {
    if points.is_empty() {
        return Err(Error::DegenerateInput(
            "min_enclosing_circle needs at least 1 point".into(),
        ));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|p, q| (p.x, p.y).partial_cmp(&(q.x, q.y)).unwrap());
    pts.dedup_by(|p, q| p.x == q.x && p.y == q.y);
    // deterministic interleave so adversarial orders stay fast
    let mut order = Vec::with_capacity(pts.len());
    let (mut lo, mut hi) = (0usize, pts.len());
    while lo < hi {
        hi -= 1;
        order.push(pts[hi]);
        if lo < hi {
            order.push(pts[lo]);
            lo += 1;
        }
    }
    let mut support = Vec::with_capacity(3);
    let c = welzl(&order, order.len(), &mut support);
    Ok((c.center, c.r))
}
