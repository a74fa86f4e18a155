//! Small planar geometry kit for convex polygons.

pub type Point = [f64; 2];

pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

pub fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Signed area, positive for counter-clockwise loops.
pub fn area(poly: &[Point]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    0.5 * (0..n).map(|i| cross(poly[i], poly[(i + 1) % n])).sum::<f64>()
}

pub fn centroid(poly: &[Point]) -> Point {
    let n = poly.len();
    let a = area(poly);
    if n < 3 || a.abs() < 1e-300 {
        let s = poly.iter().fold([0.0, 0.0], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
        return [s[0] / n.max(1) as f64, s[1] / n.max(1) as f64];
    }
    let mut c = [0.0, 0.0];
    for i in 0..n {
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let w = cross(p, q);
        c[0] += (p[0] + q[0]) * w;
        c[1] += (p[1] + q[1]) * w;
    }
    [c[0] / (6.0 * a), c[1] / (6.0 * a)]
}

/// Counter-clockwise convex hull; points closer than `tol` to a hull edge line are dropped.
pub fn convex_hull(points: &[Point], tol: f64) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| dist(*a, *b) <= tol);
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Point, a: Point, b: Point| {
        let (u, v) = (sub(a, o), sub(b, o));
        let l = norm(sub(b, o)).max(1e-300);
        cross(u, v) / l
    };
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= tol {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= tol {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Keeps the part of a convex polygon where `n·x ≥ c`.
pub fn clip_halfplane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let m = poly.len();
    let mut out = Vec::with_capacity(m + 1);
    for i in 0..m {
        let (p, q) = (poly[i], poly[(i + 1) % m]);
        let (sp, sq) = (dot(n, p) - c, dot(n, q) - c);
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let s = sp / (sp - sq);
            out.push([p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])]);
        }
    }
    out
}

pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let l2 = dot(ab, ab);
    if l2 == 0.0 {
        return dist(p, a);
    }
    let s = (dot(sub(p, a), ab) / l2).clamp(0.0, 1.0);
    dist(p, [a[0] + s * ab[0], a[1] + s * ab[1]])
}

/// Distance from `p` to a counter-clockwise convex polygon (zero inside).
pub fn dist_point_convex(p: Point, poly: &[Point]) -> f64 {
    let n = poly.len();
    if n == 0 {
        return f64::INFINITY;
    }
    if n >= 3 && (0..n).all(|i| cross(sub(poly[(i + 1) % n], poly[i]), sub(p, poly[i])) >= 0.0) {
        return 0.0;
    }
    (0..n).map(|i| dist_point_segment(p, poly[i], poly[(i + 1) % n])).fold(f64::INFINITY, f64::min)
}

/// Hausdorff distance between two convex polygons taken as filled sets.
pub fn hausdorff_convex(a: &[Point], b: &[Point]) -> f64 {
    let one = |x: &[Point], y: &[Point]| x.iter().map(|p| dist_point_convex(*p, y)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

pub fn is_convex(poly: &[Point], tol: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let (a, b, c) = (poly[i], poly[(i + 1) % n], poly[(i + 2) % n]);
        cross(sub(b, a), sub(c, b)) >= -tol * norm(sub(b, a)) * norm(sub(c, b)).max(1.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point> {
        vec![[0., 0.], [1., 0.], [1., 1.], [0., 1.]]
    }

    #[test]
    fn area_and_centroid_of_square() {
        assert_eq!(area(&square()), 1.0);
        assert_eq!(centroid(&square()), [0.5, 0.5]);
    }

    #[test]
    fn hull_drops_interior_and_collinear() {
        let pts = vec![[0., 0.], [0.5, 0.], [1., 0.], [1., 1.], [0., 1.], [0.5, 0.5]];
        let h = convex_hull(&pts, 1e-12);
        assert_eq!(h.len(), 4);
        assert!((area(&h) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clipping_halves_square() {
        let h = clip_halfplane(&square(), [1.0, 0.0], 0.5);
        assert!((area(&h) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_of_shifted_square() {
        let b: Vec<Point> = square().iter().map(|p| [p[0] + 0.1, p[1]]).collect();
        assert!((hausdorff_convex(&square(), &b) - 0.1).abs() < 1e-12);
        assert_eq!(hausdorff_convex(&square(), &square()), 0.0);
    }
}
