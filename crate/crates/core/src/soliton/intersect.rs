//! Crossings between two planar polylines.

use serde::Serialize;

use super::SolitonCurve;
use crate::error::{GeomError, Result};

const CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossing {
    pub point: [f64; 2],
    /// Segment indices in the first and second polyline.
    pub segments: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntersectionReport {
    pub count: usize,
    pub crossings: Vec<Crossing>,
    pub tol: f64,
    /// Longest segment over both curves.
    pub max_segment: f64,
}

type P2 = [f64; 2];

fn cross(a: P2, b: P2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn dist(a: P2, b: P2) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

#[derive(Clone, Copy)]
struct Bbox {
    lo: P2,
    hi: P2,
}

impl Bbox {
    fn of(pts: &[P2]) -> Bbox {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        Bbox { lo, hi }
    }

    fn overlaps(&self, o: &Bbox, pad: f64) -> bool {
        (0..2).all(|k| self.lo[k] <= o.hi[k] + pad && o.lo[k] <= self.hi[k] + pad)
    }
}

/// Intersection of closed segments `pq` and `rs`; collinear overlaps
/// are ignored because they are not transversal.
fn segment_hit(p: P2, q: P2, r: P2, s: P2) -> Option<P2> {
    let d1 = sub(q, p);
    let d2 = sub(s, r);
    let denom = cross(d1, d2);
    let scale = (d1[0].hypot(d1[1]) * d2[0].hypot(d2[1])).max(f64::MIN_POSITIVE);
    if denom.abs() <= 1e-14 * scale {
        return None;
    }
    let w = sub(r, p);
    let t = cross(w, d2) / denom;
    let u = cross(w, d1) / denom;
    let eps = 1e-12;
    if (-eps..=1.0 + eps).contains(&t) && (-eps..=1.0 + eps).contains(&u) {
        Some([p[0] + t * d1[0], p[1] + t * d1[1]])
    } else {
        None
    }
}

fn chunks(pts: &[P2]) -> Vec<(usize, Bbox)> {
    let nseg = pts.len().saturating_sub(1);
    (0..nseg)
        .step_by(CHUNK)
        .map(|start| {
            let end = (start + CHUNK).min(nseg);
            (start, Bbox::of(&pts[start..=end]))
        })
        .collect()
}

fn point_segment(p: P2, a: P2, b: P2) -> f64 {
    let d = sub(b, a);
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

/// Distance from each vertex of `a` to the polyline `b`.
fn vertex_distances(a: &[P2], b: &[P2]) -> Vec<f64> {
    a.iter()
        .map(|p| {
            if b.len() == 1 {
                return dist(*p, b[0]);
            }
            b.windows(2).map(|w| point_segment(*p, w[0], w[1])).fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Symmetric Hausdorff distance between two polylines (vertex to segment).
pub fn hausdorff_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let sup = |v: Vec<f64>| v.into_iter().fold(0.0, f64::max);
    sup(vertex_distances(a, b)).max(sup(vertex_distances(b, a)))
}

/// Per vertex of `a`: its distance to the polyline `b` when below `tol`.
fn near_distances(a: &[P2], b: &[P2], cb: &[(usize, Bbox)], tol: f64) -> Vec<Option<f64>> {
    a.iter()
        .map(|p| {
            let pb = Bbox { lo: *p, hi: *p };
            cb.iter()
                .filter(|(_, bb)| bb.overlaps(&pb, tol))
                .flat_map(|(start, _)| {
                    let end = (start + CHUNK).min(b.len() - 1);
                    (*start..end).map(move |j| point_segment(*p, b[j], b[j + 1]))
                })
                .filter(|d| *d < tol)
                .reduce(f64::min)
        })
        .collect()
}

/// True when `b` covers `a` up to `tol`, or some run of at least three
/// consecutive vertices of either polyline hugs the other one (mean
/// distance below `tol / 10`): the curves run along a common arc. A
/// shallow transversal crossing also gives a run of near vertices, but
/// their distances ramp up to `tol`.
fn coincide(a: &[P2], b: &[P2], ca: &[(usize, Bbox)], cb: &[(usize, Bbox)], tol: f64) -> bool {
    let check = |dists: Vec<Option<f64>>| {
        if dists.iter().all(|d| d.is_some()) {
            return true;
        }
        let mut run: Vec<f64> = Vec::new();
        for d in dists.into_iter().chain([None]) {
            match d {
                Some(v) => run.push(v),
                None => {
                    if run.len() >= 3 && run.iter().sum::<f64>() / run.len() as f64 <= 0.1 * tol {
                        return true;
                    }
                    run.clear();
                }
            }
        }
        false
    };
    check(near_distances(a, b, cb, tol)) || check(near_distances(b, a, ca, tol))
}

/// Count crossings of two polylines in chart coordinates. Hits closer than
/// `tol` are merged, so a crossing at a shared vertex counts once. Curves
/// that overlap along an arc are rejected as degenerate.
pub fn polyline_intersections(a: &[[f64; 2]], b: &[[f64; 2]], tol: f64) -> Result<IntersectionReport> {
    if a.len() < 2 || b.len() < 2 {
        return Err(GeomError::InsufficientData("polylines need at least two vertices".into()));
    }
    let ca = chunks(a);
    let cb = chunks(b);
    if coincide(a, b, &ca, &cb, tol) {
        return Err(GeomError::Degenerate(format!("curves coincide along an arc to within {tol:e}")));
    }
    let max_segment = a
        .windows(2)
        .chain(b.windows(2))
        .map(|w| dist(w[0], w[1]))
        .fold(0.0, f64::max);
    if max_segment > 10.0 * tol {
        log::warn!("longest segment {max_segment:e} exceeds 10·tol = {:e}", 10.0 * tol);
    }

    let mut crossings: Vec<Crossing> = Vec::new();
    for (sa, ba) in &ca {
        for (sb, bb) in &cb {
            if !ba.overlaps(bb, tol) {
                continue;
            }
            let ea = (sa + CHUNK).min(a.len() - 1);
            let eb = (sb + CHUNK).min(b.len() - 1);
            for i in *sa..ea {
                for j in *sb..eb {
                    if let Some(x) = segment_hit(a[i], a[i + 1], b[j], b[j + 1]) {
                        if crossings.iter().all(|c| dist(c.point, x) >= tol) {
                            crossings.push(Crossing {
                                point: x,
                                segments: (i, j),
                            });
                        }
                    }
                }
            }
        }
    }
    crossings.sort_by_key(|c| c.segments);
    Ok(IntersectionReport {
        count: crossings.len(),
        crossings,
        tol,
        max_segment,
    })
}

/// Crossings of two curves on the same surface chart.
pub fn count_intersections(a: &SolitonCurve, b: &SolitonCurve, tol: f64) -> Result<IntersectionReport> {
    let pts = |c: &SolitonCurve| -> Result<Vec<P2>> {
        c.samples
            .iter()
            .map(|s| match s.x.as_slice() {
                [x, y] => Ok([*x, *y]),
                other => Err(GeomError::DimensionMismatch {
                    expected: 2,
                    got: other.len(),
                }),
            })
            .collect()
    };
    polyline_intersections(&pts(a)?, &pts(b)?, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_parallel_segments() {
        let r = polyline_intersections(&[[-1.0, 0.0], [1.0, 0.0]], &[[0.0, -1.0], [0.0, 1.0]], 1e-6).unwrap();
        assert_eq!(r.count, 1);
        assert_eq!(r.crossings[0].point, [0.0, 0.0]);
        let r = polyline_intersections(&[[0.0, 0.0], [1.0, 0.0]], &[[0.0, 1.0], [1.0, 1.0]], 1e-6).unwrap();
        assert_eq!(r.count, 0);
    }

    #[test]
    fn crossing_at_shared_vertex_counts_once() {
        let a = [[-1.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
        let b = [[0.0, -1.0], [0.0, 0.0], [0.0, 1.0]];
        assert_eq!(polyline_intersections(&a, &b, 1e-6).unwrap().count, 1);
    }

    #[test]
    fn zigzag_crosses_many_times() {
        let a: Vec<P2> = (0..=200).map(|i| [i as f64 * 0.05, 0.0]).collect();
        let b: Vec<P2> = (0..=10).map(|i| [i as f64, if i % 2 == 0 { -1.0 } else { 1.0 }]).collect();
        assert_eq!(polyline_intersections(&a, &b, 1e-6).unwrap().count, 10);
    }

    #[test]
    fn identical_curves_rejected() {
        let a = [[0.0, 0.0], [1.0, 1.0]];
        assert!(matches!(
            polyline_intersections(&a, &a, 1e-6),
            Err(GeomError::Degenerate(_))
        ));
        // same segment, sampled differently and extended
        let b: Vec<P2> = (0..=30).map(|i| [i as f64 * 0.05, i as f64 * 0.05]).collect();
        assert!(matches!(
            polyline_intersections(&a, &b, 1e-6),
            Err(GeomError::Degenerate(_))
        ));
    }

    #[test]
    fn shallow_crossing_is_not_an_overlap() {
        // slope 0.01 against the x axis: 21 vertices within tol of each other
        let a: Vec<P2> = (-50..=50).map(|i| [i as f64 * 0.01, 0.0]).collect();
        let b: Vec<P2> = (-50..=50).map(|i| [i as f64 * 0.01, i as f64 * 1e-4]).collect();
        assert_eq!(polyline_intersections(&a, &b, 1e-3).unwrap().count, 1);
        // a partial shared arc is still caught
        let c: Vec<P2> = (0..=100).map(|i| [i as f64 * 0.013 - 0.2, 0.0]).collect();
        assert!(matches!(
            polyline_intersections(&a, &c, 1e-3),
            Err(GeomError::Degenerate(_))
        ));
    }
}
