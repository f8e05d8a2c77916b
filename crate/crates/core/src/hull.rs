//! Upper concave envelope of a planar point set (monotone chain).

/// Indices of the vertices of the upper boundary of the convex hull of
/// `points`, ordered by strictly increasing `x`.
///
/// Only the highest point is kept among points sharing an abscissa (within
/// `tol` relative), and vertices whose removal leaves the envelope unchanged
/// up to a relative cross-product of `tol` are dropped.
pub fn upper_chain(points: &[(f64, f64)], tol: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (points[a], points[b]);
        pa.0.total_cmp(&pb.0)
            .then(pb.1.total_cmp(&pa.1))
            .then(a.cmp(&b))
    });
    let xscale = points.iter().fold(0.0_f64, |m, p| m.max(p.0.abs())).max(1e-300);
    let mut distinct: Vec<usize> = Vec::with_capacity(order.len());
    for idx in order {
        match distinct.last() {
            // Sorted by descending y within equal x, so the first one wins.
            Some(&last) if (points[idx].0 - points[last].0).abs() <= tol * xscale => {}
            _ => distinct.push(idx),
        }
    }
    let mut chain: Vec<usize> = Vec::with_capacity(distinct.len());
    for idx in distinct {
        while chain.len() >= 2 {
            let a = points[chain[chain.len() - 2]];
            let b = points[chain[chain.len() - 1]];
            let c = points[idx];
            if turn(a, b, c) >= -tol {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(idx);
    }
    chain
}

/// Normalized cross product of `ab` and `ac`: positive for a left turn.
fn turn(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let (ux, uy) = (b.0 - a.0, b.1 - a.1);
    let (vx, vy) = (c.0 - a.0, c.1 - a.1);
    let norm = (ux.hypot(uy) * vx.hypot(vy)).max(1e-300);
    (ux * vy - uy * vx) / norm
}

/// Height of the piecewise-linear function through `chain` at `x`, or `None`
/// outside its domain.
pub fn envelope_at(points: &[(f64, f64)], chain: &[usize], x: f64) -> Option<f64> {
    let first = points[*chain.first()?];
    if chain.len() == 1 {
        return (x == first.0).then_some(first.1);
    }
    for w in chain.windows(2) {
        let (a, b) = (points[w[0]], points[w[1]]);
        if x >= a.0 && x <= b.0 {
            let t = (x - a.0) / (b.0 - a.0);
            return Some(a.1 + t * (b.1 - a.1));
        }
    }
    None
}
