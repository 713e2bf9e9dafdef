//! Exact integer polygon geometry: simplicity, containment and Pick's formula.

use crate::error::{Error, Result};

pub type IPoint = (i64, i64);

#[inline]
fn orient(a: IPoint, b: IPoint, c: IPoint) -> i128 {
    (b.0 - a.0) as i128 * (c.1 - a.1) as i128 - (b.1 - a.1) as i128 * (c.0 - a.0) as i128
}

#[inline]
fn on_segment(a: IPoint, b: IPoint, p: IPoint) -> bool {
    orient(a, b, p) == 0 && p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_touch(a: IPoint, b: IPoint, c: IPoint, d: IPoint) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if o1.signum() * o2.signum() < 0 && o3.signum() * o4.signum() < 0 {
        return true;
    }
    on_segment(a, b, c) || on_segment(a, b, d) || on_segment(c, d, a) || on_segment(c, d, b)
}

/// Twice the signed area.
pub fn doubled_area(v: &[IPoint]) -> i128 {
    let n = v.len();
    (0..n).map(|i| v[i].0 as i128 * v[(i + 1) % n].1 as i128 - v[(i + 1) % n].0 as i128 * v[i].1 as i128).sum()
}

/// Rejects repeated vertices, zero-length or folded edges, crossings and zero area.
pub fn check_simple(v: &[IPoint]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::Polygon(format!("{n} vertices do not bound a polygon")));
    }
    let mut sorted = v.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Polygon("repeated vertex".into()));
    }
    if doubled_area(v) == 0 {
        return Err(Error::Polygon("degenerate polygon with zero area".into()));
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // a fold puts the far endpoint of one edge on the other
                let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                if on_segment(c, d, p) || on_segment(a, b, q) {
                    return Err(Error::Polygon(format!("edges {i} and {j} overlap")));
                }
            } else if segments_touch(a, b, c, d) {
                return Err(Error::Polygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// Lattice points on the closed boundary.
pub fn boundary_points(v: &[IPoint]) -> i64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            gcd((b.0 - a.0).abs(), (b.1 - a.1).abs())
        })
        .sum()
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of lattice points inside or on a simple polygon: Area + B/2 + 1.
pub fn pick_count(vertices: &[IPoint]) -> Result<i64> {
    check_simple(vertices)?;
    let mut v = vertices.to_vec();
    if doubled_area(&v) < 0 {
        v.reverse();
    }
    let a2 = doubled_area(&v);
    let b = boundary_points(&v) as i128;
    Ok(((a2 + b) / 2 + 1) as i64)
}

/// Closed containment with exact predicates.
pub fn contains_point(v: &[IPoint], p: IPoint) -> bool {
    let n = v.len();
    let mut winding = 0i64;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        if on_segment(a, b, p) {
            return true;
        }
        if a.1 <= p.1 {
            if b.1 > p.1 && orient(a, b, p) > 0 {
                winding += 1;
            }
        } else if b.1 <= p.1 && orient(a, b, p) < 0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Enumerates the bounding box; reference count for [`pick_count`].
pub fn enumerate_count(v: &[IPoint]) -> i64 {
    let (x0, x1) = (v.iter().map(|p| p.0).min().unwrap_or(0), v.iter().map(|p| p.0).max().unwrap_or(-1));
    let (y0, y1) = (v.iter().map(|p| p.1).min().unwrap_or(0), v.iter().map(|p| p.1).max().unwrap_or(-1));
    let mut c = 0;
    for x in x0..=x1 {
        for y in y0..=y1 {
            if contains_point(v, (x, y)) {
                c += 1;
            }
        }
    }
    c
}
