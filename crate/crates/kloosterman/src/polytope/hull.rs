//! Exact convex-hull machinery for the small integer point sets that Newton
//! polytopes of the sum families produce (at most a dozen points in dimension
//! at most eight). Everything is integer arithmetic: hyperplanes through
//! point subsets come from cofactor expansions, ranks from fraction-free
//! elimination, and volumes from pulling triangulations.

use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// Fraction-free (Bareiss) determinant.
pub(crate) fn det_i128(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(sw) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, sw);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Rank of an integer matrix, fraction-free elimination.
// Index loops: elimination reads one row while updating another.
#[allow(clippy::needless_range_loop)]
pub(crate) fn rank_i128(mut rows: Vec<Vec<i128>>) -> usize {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        for r in rank + 1..rows.len() {
            if rows[r][col] == 0 {
                continue;
            }
            let (a, b) = (rows[rank][col], rows[r][col]);
            for c in 0..cols {
                rows[r][c] = rows[r][c] * a - rows[rank][c] * b;
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Rank of the reductions mod p of integer rows.
#[allow(clippy::needless_range_loop)]
pub(crate) fn rank_mod_p(rows: &[&[i64]], p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&x| (x.rem_euclid(p as i64)) as u64)
                .collect()
        })
        .collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| !m[r][col].is_multiple_of(p)) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = mod_inv(m[rank][col] % p, p);
        for r in rank + 1..m.len() {
            if m[r][col].is_multiple_of(p) {
                continue;
            }
            let factor = m[r][col] % p * inv % p;
            for c in 0..cols {
                m[r][c] = (m[r][c] + (p - factor * m[rank][c] % p % p)) % p;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // Fermat; p prime and a not divisible by p.
    let mut acc = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// The hyperplane a·x = b through d affinely independent points of Z^d,
/// with primitive integer normal; None if the points are affinely dependent.
pub(crate) fn hyperplane_through(pts: &[&[i64]]) -> Option<(Vec<i64>, i64)> {
    let d = pts[0].len();
    debug_assert_eq!(pts.len(), d);
    // Kernel vector of the d x (d+1) matrix with rows (p_i, 1), by cofactors.
    let mut v = vec![0i128; d + 1];
    for (j, vj) in v.iter_mut().enumerate() {
        let sub: Vec<Vec<i128>> = pts
            .iter()
            .map(|p| {
                (0..=d)
                    .filter(|&c| c != j)
                    .map(|c| if c < d { p[c] as i128 } else { 1 })
                    .collect()
            })
            .collect();
        let dt = det_i128(sub);
        *vj = if j % 2 == 0 { dt } else { -dt };
    }
    if v.iter().all(|&x| x == 0) {
        return None;
    }
    let g = v
        .iter()
        .fold(0i128, |acc, &x| gcd_i128(acc, x.abs()))
        .max(1);
    let a: Vec<i64> = v[..d].iter().map(|&x| (x / g) as i64).collect();
    let b = -(v[d] / g) as i64;
    Some((a, b))
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd_i128(b, a % b)
    }
}

/// A facet of the hull: a·x <= b for every point, with equality exactly on
/// `points` (sorted indices). Primitive normal; b > 0 iff the origin point is
/// strictly inside the facet's halfspace boundary... i.e. off the hyperplane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
    pub points: Vec<usize>,
}

/// All facets of conv(points); requires the hull to be full-dimensional.
pub(crate) fn enumerate_facets(points: &[Vec<i64>]) -> Result<Vec<Facet>> {
    let d = points.first().map(|p| p.len()).unwrap_or(0);
    if points.len() <= d {
        return Err(Error::DegenerateHull);
    }
    let diffs: Vec<Vec<i128>> = points[1..]
        .iter()
        .map(|p| (0..d).map(|c| (p[c] - points[0][c]) as i128).collect())
        .collect();
    if rank_i128(diffs) != d {
        return Err(Error::DegenerateHull);
    }
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut facets = Vec::new();
    let mut combo: Vec<usize> = (0..d).collect();
    loop {
        let pts: Vec<&[i64]> = combo.iter().map(|&i| points[i].as_slice()).collect();
        if let Some((a, b)) = hyperplane_through(&pts) {
            let vals: Vec<i128> = points
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&a)
                        .map(|(&x, &c)| x as i128 * c as i128)
                        .sum::<i128>()
                        - b as i128
                })
                .collect();
            let pos = vals.iter().any(|&v| v > 0);
            let neg = vals.iter().any(|&v| v < 0);
            if !(pos && neg) {
                let (a, b) = if pos {
                    (a.iter().map(|&c| -c).collect::<Vec<_>>(), -b)
                } else {
                    (a, b)
                };
                let incident: Vec<usize> = vals
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v == 0)
                    .map(|(i, _)| i)
                    .collect();
                if seen.insert(incident.clone()) {
                    facets.push(Facet {
                        normal: a,
                        offset: b,
                        points: incident,
                    });
                }
            }
        }
        // next d-combination of 0..points.len()
        let n = points.len();
        let mut i = d;
        loop {
            if i == 0 {
                facets.sort_by(|x, y| x.points.cmp(&y.points));
                return Ok(facets);
            }
            i -= 1;
            if combo[i] < n - (d - i) {
                combo[i] += 1;
                for k in i + 1..d {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All nonempty proper faces as point-index sets: the facet incidences closed
/// under intersection.
pub(crate) fn proper_faces(facets: &[Facet]) -> Vec<BTreeSet<usize>> {
    let mut faces: BTreeSet<BTreeSet<usize>> = facets
        .iter()
        .map(|f| f.points.iter().copied().collect())
        .collect();
    loop {
        let mut fresh: Vec<BTreeSet<usize>> = Vec::new();
        let list: Vec<&BTreeSet<usize>> = faces.iter().collect();
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let meet: BTreeSet<usize> = list[i].intersection(list[j]).copied().collect();
                if !meet.is_empty() && !faces.contains(&meet) {
                    fresh.push(meet);
                }
            }
        }
        if fresh.is_empty() {
            return faces.into_iter().collect();
        }
        faces.extend(fresh);
    }
}

fn affine_dim(points: &[Vec<i64>], face: &BTreeSet<usize>) -> usize {
    let idx: Vec<usize> = face.iter().copied().collect();
    let p0 = &points[idx[0]];
    let rows: Vec<Vec<i128>> = idx[1..]
        .iter()
        .map(|&i| {
            points[i]
                .iter()
                .zip(p0)
                .map(|(&a, &b)| (a - b) as i128)
                .collect()
        })
        .collect();
    rank_i128(rows)
}

/// Pulling triangulation of the full polytope: every face is coned from a
/// fixed vertex choice (the origin point when it lies on the face, otherwise
/// the coordinate-lexicographically smallest point). Returns d-simplices as
/// (d+1)-element index vectors.
pub(crate) fn pulling_triangulation(
    points: &[Vec<i64>],
    facets: &[Facet],
    origin: usize,
) -> Vec<Vec<usize>> {
    let all: BTreeSet<usize> = (0..points.len()).collect();
    let mut faces = proper_faces(facets);
    faces.push(all.clone());
    triangulate_face(points, &faces, &all, origin)
}

fn pick_apex(points: &[Vec<i64>], face: &BTreeSet<usize>, origin: usize) -> usize {
    if face.contains(&origin) {
        origin
    } else {
        *face
            .iter()
            .min_by(|&&a, &&b| points[a].cmp(&points[b]).then(a.cmp(&b)))
            .expect("faces are nonempty")
    }
}

fn triangulate_face(
    points: &[Vec<i64>],
    faces: &[BTreeSet<usize>],
    face: &BTreeSet<usize>,
    origin: usize,
) -> Vec<Vec<usize>> {
    let dim = affine_dim(points, face);
    if face.len() == dim + 1 {
        return vec![face.iter().copied().collect()];
    }
    let apex = pick_apex(points, face, origin);
    // maximal proper subfaces of `face` not containing the apex
    let subs: Vec<&BTreeSet<usize>> = faces
        .iter()
        .filter(|g| g.is_subset(face) && *g != face && !g.contains(&apex))
        .collect();
    let maximal: Vec<&BTreeSet<usize>> = subs
        .iter()
        .filter(|g| !subs.iter().any(|h| h != *g && g.is_subset(h)))
        .copied()
        .collect();
    let mut out = Vec::new();
    for g in maximal {
        if affine_dim(points, g) + 1 != dim {
            continue; // only facets of `face` get coned
        }
        for mut simplex in triangulate_face(points, faces, g, origin) {
            simplex.push(apex);
            simplex.sort_unstable();
            out.push(simplex);
        }
    }
    out
}

/// Normalized volume (d! times Euclidean volume) of the hull, via the pulling
/// triangulation.
pub(crate) fn normalized_volume(points: &[Vec<i64>], facets: &[Facet], origin: usize) -> u64 {
    let d = points[0].len();
    pulling_triangulation(points, facets, origin)
        .into_iter()
        .map(|s| {
            let p0 = &points[s[0]];
            let rows: Vec<Vec<i128>> = s[1..]
                .iter()
                .map(|&i| {
                    points[i]
                        .iter()
                        .zip(p0)
                        .map(|(&a, &b)| (a - b) as i128)
                        .collect()
                })
                .collect();
            debug_assert_eq!(rows.len(), d);
            det_i128(rows).unsigned_abs() as u64
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinants() {
        assert_eq!(det_i128(vec![vec![2]]), 2);
        assert_eq!(det_i128(vec![vec![1, 2], vec![3, 4]]), -2);
        assert_eq!(
            det_i128(vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 3]]),
            6
        );
        assert_eq!(det_i128(vec![vec![1, 1], vec![1, 1]]), 0);
        // antisymmetric swap
        assert_eq!(det_i128(vec![vec![0, 1], vec![1, 0]]), -1);
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_i128(vec![vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(rank_i128(vec![vec![1, 0], vec![0, 1]]), 2);
        assert_eq!(rank_mod_p(&[&[2, 0], &[0, 1]], 2), 1);
        assert_eq!(rank_mod_p(&[&[2, 0], &[0, 1]], 3), 2);
        assert_eq!(rank_mod_p(&[&[-1, 1], &[1, -1]], 5), 1);
    }

    #[test]
    fn hyperplanes() {
        let p1 = [1i64, 0];
        let p2 = [0i64, 1];
        let (a, b) = hyperplane_through(&[&p1, &p2]).unwrap();
        // x + y = 1 up to a global sign, primitive normal
        assert_eq!(a[0].abs(), 1);
        assert_eq!(a[0], a[1]);
        assert_eq!(a[0], b);
        // collinear points have no unique hyperplane
        let q1 = [0i64, 0];
        let q2 = [0i64, 0];
        assert!(hyperplane_through(&[&q1, &q2]).is_none());
    }

    #[test]
    fn unit_square_hull() {
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
        let facets = enumerate_facets(&pts).unwrap();
        assert_eq!(facets.len(), 4);
        // every facet has exactly 2 incident points and the normals are axis-aligned
        for f in &facets {
            assert_eq!(f.points.len(), 2);
            assert_eq!(f.normal.iter().map(|c| c.abs()).sum::<i64>(), 1);
        }
        assert_eq!(normalized_volume(&pts, &facets, 0), 2); // 2! * 1
    }

    #[test]
    fn simplex_volume_and_interior_point() {
        // 2 * standard simplex plus an interior point; interior point is on no facet
        let pts = vec![vec![0, 0], vec![2, 0], vec![0, 2], vec![1, 1]];
        let facets = enumerate_facets(&pts).unwrap();
        // point 3 lies on the hypotenuse facet x+y=2
        let hyp = facets
            .iter()
            .find(|f| f.normal == vec![1, 1] && f.offset == 2)
            .unwrap();
        assert_eq!(hyp.points, vec![1, 2, 3]);
        assert_eq!(normalized_volume(&pts, &facets, 0), 4);

        let strict_interior = vec![vec![0, 0], vec![3, 0], vec![0, 3], vec![1, 1]];
        let facets = enumerate_facets(&strict_interior).unwrap();
        assert_eq!(facets.len(), 3);
        assert!(facets.iter().all(|f| !f.points.contains(&3)));
        assert_eq!(normalized_volume(&strict_interior, &facets, 0), 9);
    }

    #[test]
    fn degenerate_hull_is_rejected() {
        let flat = vec![vec![0, 0], vec![1, 0], vec![2, 0]];
        assert!(matches!(
            enumerate_facets(&flat),
            Err(Error::DegenerateHull)
        ));
    }

    #[test]
    fn cube_triangulates_to_six_simplices() {
        let mut pts = Vec::new();
        for x in 0..2i64 {
            for y in 0..2i64 {
                for z in 0..2i64 {
                    pts.push(vec![x, y, z]);
                }
            }
        }
        let facets = enumerate_facets(&pts).unwrap();
        assert_eq!(facets.len(), 6);
        assert_eq!(normalized_volume(&pts, &facets, 0), 6); // 3! * 1
    }

    #[test]
    fn face_lattice_of_square() {
        let pts = vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]];
        let facets = enumerate_facets(&pts).unwrap();
        let faces = proper_faces(&facets);
        // 4 edges + 4 vertices
        assert_eq!(faces.len(), 8);
        assert_eq!(faces.iter().filter(|f| f.len() == 1).count(), 4);
        assert_eq!(faces.iter().filter(|f| f.len() == 2).count(), 4);
    }
}
