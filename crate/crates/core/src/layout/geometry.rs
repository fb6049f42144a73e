/// Convex hull by monotone chain, counter-clockwise, without repeated
/// endpoints. Fewer than three distinct points are returned as-is.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(f64, f64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Whether `p` lies inside (or on) a counter-clockwise convex polygon.
pub fn point_in_convex(hull: &[(f64, f64)], p: (f64, f64)) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
    })
}

/// Area covered by two or more of the groups' convex hulls, as a share of
/// the area covered by at least one, estimated on a `resolution` square
/// grid over the frame.
pub fn hull_overlap_ratio(
    positions: &[(f64, f64)],
    groups: &[Vec<usize>],
    width: f64,
    height: f64,
    resolution: usize,
) -> f64 {
    let hulls: Vec<Vec<(f64, f64)>> = groups
        .iter()
        .map(|g| convex_hull(&g.iter().map(|&i| positions[i]).collect::<Vec<_>>()))
        .filter(|h| h.len() >= 3)
        .collect();
    let (mut covered, mut overlapped) = (0usize, 0usize);
    for gx in 0..resolution {
        for gy in 0..resolution {
            let p = (
                (gx as f64 + 0.5) * width / resolution as f64,
                (gy as f64 + 0.5) * height / resolution as f64,
            );
            let hits = hulls.iter().filter(|h| point_in_convex(h, p)).count();
            covered += usize::from(hits >= 1);
            overlapped += usize::from(hits >= 2);
        }
    }
    if covered == 0 {
        0.0
    } else {
        overlapped as f64 / covered as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_point() {
        let hull = convex_hull(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)]);
        assert_eq!(hull.len(), 4);
        assert!(point_in_convex(&hull, (0.5, 0.5)));
        assert!(!point_in_convex(&hull, (1.5, 0.5)));
    }

    #[test]
    fn overlap_of_half_shifted_squares() {
        let pos = vec![
            (0.0, 0.0),
            (10.0, 0.0),
            (10.0, 10.0),
            (0.0, 10.0),
            (5.0, 0.0),
            (15.0, 0.0),
            (15.0, 10.0),
            (5.0, 10.0),
        ];
        let groups = vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]];
        let r = hull_overlap_ratio(&pos, &groups, 20.0, 20.0, 400);
        // intersection 50, union 150
        assert!((r - 1.0 / 3.0).abs() < 0.01, "{r}");
        let apart = vec![vec![0, 1, 2, 3]];
        assert_eq!(hull_overlap_ratio(&pos, &apart, 20.0, 20.0, 100), 0.0);
    }
}
