//! Newton polytopes and non-degeneracy analysis for the Laurent-polynomial
//! families that arise when the restricted character sums are unfolded into
//! toric exponential sums.
//!
//! Two families appear. In the variables (x_1, ..., x_n, y, z):
//!
//! * the *split family* `f_family(n)`:
//!   y + z + x_1 y z + ... + x_n y z + y z / (x_1 ... x_n),
//! * the *inverted family* `fhat_family(n, m)`:
//!   y + y^{-1} z + x_1 + ... + x_n + z^m / (x_1 ... x_n),
//!
//! each up to the coefficient assignment made in [`verdict`]. The geometry of
//! their Newton polytopes (faces off the origin, normalized volume) controls
//! the archimedean size of the sums, and non-degeneracy of a coefficient
//! choice is what the square-root cancellation bounds need.

mod hull;
mod verdict;

pub use hull::Facet;
pub use verdict::{
    balanced_exceptional_w, face_critical_residuals, h_coefficients, nondegeneracy_verdict,
    torus_critical_search, Certificate, Verdict,
};

use crate::error::Result;
use std::collections::BTreeSet;
use std::sync::OnceLock;

/// Which coefficient slot a monomial carries when the family is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotRole {
    /// The plain `y` term.
    Y,
    /// The `z` term (`y z` interactions fold into it).
    Z,
    /// The term attached to coordinate `x_i` (0-based).
    X(usize),
    /// The term carrying the norm-fiber parameter.
    W,
}

/// One Laurent monomial: an exponent vector plus its coefficient role.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub exps: Vec<i64>,
    pub role: SlotRole,
}

/// A Laurent polynomial family: fixed monomial support, coefficients chosen
/// later by role.
#[derive(Debug, Clone)]
pub struct LaurentFamily {
    nvars: usize,
    monomials: Vec<Monomial>,
    polytope: OnceLock<Polytope>,
}

impl PartialEq for LaurentFamily {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.monomials == other.monomials
    }
}

impl Eq for LaurentFamily {}

impl LaurentFamily {
    /// An ad hoc family from explicit monomials; every exponent vector must
    /// have length `nvars`.
    pub fn new(nvars: usize, monomials: Vec<Monomial>) -> Result<Self> {
        for mon in &monomials {
            if mon.exps.len() != nvars {
                return Err(crate::error::Error::CoordCount {
                    got: mon.exps.len(),
                    want: nvars,
                });
            }
        }
        Ok(LaurentFamily {
            nvars,
            monomials,
            polytope: OnceLock::new(),
        })
    }

    /// The split family in n + 2 variables (x_1..x_n, y, z):
    /// y, z, x_i y z for each i, and y z / (x_1 ... x_n).
    pub fn f_family(n: usize) -> Self {
        assert!(n >= 1, "need at least one x variable");
        let nv = n + 2;
        let (yi, zi) = (n, n + 1);
        let mut monomials = Vec::with_capacity(n + 3);
        let mut e = vec![0i64; nv];
        e[yi] = 1;
        monomials.push(Monomial {
            exps: e,
            role: SlotRole::Y,
        });
        let mut e = vec![0i64; nv];
        e[zi] = 1;
        monomials.push(Monomial {
            exps: e,
            role: SlotRole::Z,
        });
        for i in 0..n {
            let mut e = vec![0i64; nv];
            e[i] = 1;
            e[yi] = 1;
            e[zi] = 1;
            monomials.push(Monomial {
                exps: e,
                role: SlotRole::X(i),
            });
        }
        let mut e = vec![-1i64; nv];
        e[yi] = 1;
        e[zi] = 1;
        monomials.push(Monomial {
            exps: e,
            role: SlotRole::W,
        });
        LaurentFamily {
            nvars: nv,
            monomials,
            polytope: OnceLock::new(),
        }
    }

    /// The inverted family in n + 2 variables (x_1..x_n, y, z):
    /// y, y^{-1} z, x_i for each i, and z^m / (x_1 ... x_n).
    pub fn fhat_family(n: usize, m: usize) -> Self {
        assert!(n >= 1, "need at least one x variable");
        assert!(m >= 1, "the z-power must be positive");
        let nv = n + 2;
        let (yi, zi) = (n, n + 1);
        let mut monomials = Vec::with_capacity(n + 3);
        let mut e = vec![0i64; nv];
        e[yi] = 1;
        monomials.push(Monomial {
            exps: e,
            role: SlotRole::Y,
        });
        let mut e = vec![0i64; nv];
        e[yi] = -1;
        e[zi] = 1;
        monomials.push(Monomial {
            exps: e,
            role: SlotRole::Z,
        });
        for i in 0..n {
            let mut e = vec![0i64; nv];
            e[i] = 1;
            monomials.push(Monomial {
                exps: e,
                role: SlotRole::X(i),
            });
        }
        let mut e = vec![-1i64; nv];
        e[yi] = 0;
        e[zi] = m as i64;
        monomials.push(Monomial {
            exps: e,
            role: SlotRole::W,
        });
        LaurentFamily {
            nvars: nv,
            monomials,
            polytope: OnceLock::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Convex hull of the exponent vectors together with the origin.
    pub fn newton_polytope(&self) -> Result<Polytope> {
        Ok(self.polytope()?.clone())
    }

    /// The Newton polytope, built once and cached: facet enumeration depends
    /// only on the monomial support, so repeated analyses (one per coefficient
    /// choice) must not repay the hull computation.
    pub fn polytope(&self) -> Result<&Polytope> {
        if let Some(poly) = self.polytope.get() {
            return Ok(poly);
        }
        let mut points: Vec<Vec<i64>> = vec![vec![0; self.nvars]];
        let mut monomial_points = Vec::with_capacity(self.monomials.len());
        for mon in &self.monomials {
            if let Some(i) = points.iter().position(|p| *p == mon.exps) {
                monomial_points.push(i);
            } else {
                points.push(mon.exps.clone());
                monomial_points.push(points.len() - 1);
            }
        }
        let facets = hull::enumerate_facets(&points)?;
        Ok(self.polytope.get_or_init(|| Polytope {
            points,
            origin: 0,
            monomial_points,
            facets,
            faces: OnceLock::new(),
        }))
    }
}

/// The Newton polytope of a family: exact facet description plus the
/// incidence data needed to read off faces as monomial subsets.
#[derive(Debug, Clone)]
pub struct Polytope {
    points: Vec<Vec<i64>>,
    origin: usize,
    monomial_points: Vec<usize>,
    facets: Vec<Facet>,
    faces: OnceLock<Vec<BTreeSet<usize>>>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<i64>] {
        &self.points
    }

    /// Index (into `points`) of the origin.
    pub fn origin_index(&self) -> usize {
        self.origin
    }

    /// Index (into `points`) of the i-th monomial's exponent vector.
    pub fn monomial_point(&self, i: usize) -> usize {
        self.monomial_points[i]
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Facets whose hyperplane misses the origin (offset > 0).
    pub fn facets_off_origin(&self) -> Vec<&Facet> {
        self.facets.iter().filter(|f| f.offset > 0).collect()
    }

    /// For a facet with exactly dim incident points, the determinant of the
    /// matrix of those points (rows in index order); None otherwise.
    pub fn facet_det(&self, facet: &Facet) -> Option<i128> {
        if facet.points.len() != self.dim() {
            return None;
        }
        let rows: Vec<Vec<i128>> = facet
            .points
            .iter()
            .map(|&i| self.points[i].iter().map(|&c| c as i128).collect())
            .collect();
        Some(hull::det_i128(rows))
    }

    /// Normalized volume: dim! times the Euclidean volume.
    pub fn normalized_volume(&self) -> u64 {
        hull::normalized_volume(&self.points, &self.facets, self.origin)
    }

    /// All nonempty proper faces, as sets of point indices. The face lattice
    /// (intersection closure of the facets) is computed once and cached.
    pub fn proper_faces(&self) -> &[BTreeSet<usize>] {
        self.faces.get_or_init(|| hull::proper_faces(&self.facets))
    }

    /// Proper faces that do not contain the origin — the faces whose
    /// restricted polynomials the non-degeneracy condition quantifies over.
    pub fn faces_off_origin(&self) -> Vec<BTreeSet<usize>> {
        self.proper_faces()
            .iter()
            .filter(|f| !f.contains(&self.origin))
            .cloned()
            .collect()
    }
}
