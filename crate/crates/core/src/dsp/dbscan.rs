//! Density clustering with a deterministic, order-independent labeling.
//!
//! A point is *core* when at least `min_pts` points (itself included) lie
//! within `eps`. Clusters are the connected components of core points.
//! A non-core point within `eps` of some core point joins the cluster of
//! its nearest such core point (lowest index on exact ties), which removes
//! the visiting-order dependence of textbook DBSCAN. Everything else is
//! noise. Cluster ids follow the index of each cluster's first point.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Cluster id per point; `None` is noise.
pub type Labels = Vec<Option<usize>>;

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn check(points: &[[f64; 3]], eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    if points.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::input("points must be finite"));
    }
    Ok(())
}

/// Renumbers component roots so ids follow first appearance.
fn canonical(raw: &[Option<usize>]) -> Labels {
    let mut map = HashMap::new();
    raw.iter()
        .map(|l| {
            l.map(|root| {
                let next = map.len();
                *map.entry(root).or_insert(next)
            })
        })
        .collect()
}

/// Grid-accelerated clustering; neighbour queries only visit the 27 cells
/// of side `eps` around a point.
pub fn dbscan(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Result<Labels> {
    check(points, eps)?;
    let e2 = eps * eps;
    let key = |p: &[f64; 3]| -> [i64; 3] { std::array::from_fn(|k| (p[k] / eps).floor() as i64) };
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    let neighbours = |i: usize| -> Vec<usize> {
        let k = key(&points[i]);
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(cell) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        out.extend(cell.iter().copied().filter(|&j| dist2(&points[i], &points[j]) <= e2));
                    }
                }
            }
        }
        out
    };
    let hoods: Vec<Vec<usize>> = (0..points.len()).map(neighbours).collect();
    let core: Vec<bool> = hoods.iter().map(|h| h.len() >= min_pts).collect();

    let mut raw: Vec<Option<usize>> = vec![None; points.len()];
    let mut stack = Vec::new();
    for seed in 0..points.len() {
        if !core[seed] || raw[seed].is_some() {
            continue;
        }
        raw[seed] = Some(seed);
        stack.push(seed);
        while let Some(i) = stack.pop() {
            for &j in &hoods[i] {
                if core[j] && raw[j].is_none() {
                    raw[j] = Some(seed);
                    stack.push(j);
                }
            }
        }
    }
    for i in 0..points.len() {
        if core[i] {
            continue;
        }
        raw[i] = nearest_core(i, hoods[i].iter().copied(), points, &core).and_then(|c| raw[c]);
    }
    Ok(canonical(&raw))
}

fn nearest_core(
    i: usize,
    candidates: impl Iterator<Item = usize>,
    points: &[[f64; 3]],
    core: &[bool],
) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for j in candidates.filter(|&j| core[j]) {
        let d = dist2(&points[i], &points[j]);
        match best {
            Some((bd, bj)) if bd < d || (bd == d && bj < j) => {}
            _ => best = Some((d, j)),
        }
    }
    best.map(|(_, j)| j)
}

/// Brute-force O(n^2) version of [`dbscan`] with union-find over all
/// pairs. Kept as the test oracle for the grid implementation.
pub fn dbscan_reference(points: &[[f64; 3]], eps: f64, min_pts: usize) -> Result<Labels> {
    check(points, eps)?;
    let n = points.len();
    let e2 = eps * eps;
    let adjacent = |i: usize, j: usize| dist2(&points[i], &points[j]) <= e2;
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| adjacent(i, j)).count() >= min_pts).collect();

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if core[i] && core[j] && adjacent(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let raw: Vec<Option<usize>> = (0..n)
        .map(|i| {
            if core[i] {
                Some(find(&mut parent, i))
            } else {
                nearest_core(i, (0..n).filter(|&j| adjacent(i, j)), points, &core).map(|c| find(&mut parent, c))
            }
        })
        .collect();
    Ok(canonical(&raw))
}

/// Whether two labelings describe the same partition (noise must match
/// exactly; cluster ids may differ by a renaming).
pub fn same_partition(a: &[Option<usize>], b: &[Option<usize>]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (None, None) => true,
        (Some(x), Some(y)) => *fwd.entry(*x).or_insert(*y) == *y && *back.entry(*y).or_insert(*x) == *x,
        _ => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blob(rng: &mut ChaCha8Rng, c: [f64; 3], n: usize, spread: f64) -> Vec<[f64; 3]> {
        (0..n).map(|_| std::array::from_fn(|k| c[k] + rng.random_range(-spread..spread))).collect()
    }

    #[test]
    fn two_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts = blob(&mut rng, [0.0, 2.0, 0.0], 10, 0.05);
        pts.extend(blob(&mut rng, [1.0, 3.0, 0.5], 30, 0.05));
        pts.push([5.0, 5.0, 5.0]);
        let labels = dbscan(&pts, 0.25, 3).unwrap();
        assert!(labels[..10].iter().all(|l| *l == Some(0)));
        assert!(labels[10..40].iter().all(|l| *l == Some(1)));
        assert_eq!(labels[40], None);
    }

    #[test]
    fn order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<[f64; 3]> = blob(&mut rng, [0.0; 3], 120, 1.0);
        let a = dbscan(&pts, 0.3, 4).unwrap();
        let mut perm: Vec<usize> = (0..pts.len()).collect();
        perm.reverse();
        let shuffled: Vec<[f64; 3]> = perm.iter().map(|&i| pts[i]).collect();
        let b = dbscan(&shuffled, 0.3, 4).unwrap();
        let back: Vec<Option<usize>> = (0..pts.len()).map(|i| b[pts.len() - 1 - i]).collect();
        assert!(same_partition(&a, &back));
    }

    #[test]
    fn bad_eps() {
        assert!(dbscan(&[[0.0; 3]], 0.0, 1).is_err());
        assert!(dbscan_reference(&[[0.0; 3]], f64::NAN, 1).is_err());
        assert_eq!(dbscan(&[], 1.0, 1).unwrap(), Vec::<Option<usize>>::new());
    }

    #[test]
    fn partition_comparison() {
        assert!(same_partition(&[Some(0), Some(1), None], &[Some(5), Some(2), None]));
        assert!(!same_partition(&[Some(0), Some(0)], &[Some(0), Some(1)]));
        assert!(!same_partition(&[Some(0), Some(1)], &[Some(0), Some(0)]));
        assert!(!same_partition(&[None], &[Some(0)]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_reference(seed in any::<u64>(), n in 0usize..200, eps in 0.05f64..0.6, min_pts in 1usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<[f64; 3]> = (0..n).map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))).collect();
            let a = dbscan(&pts, eps, min_pts).unwrap();
            let b = dbscan_reference(&pts, eps, min_pts).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
