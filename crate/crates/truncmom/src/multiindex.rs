//! Multi-indices and admissible index sets.
//!
//! An admissible set `K` contains the origin and, for every nonzero element,
//! some chain of unit coordinate steps from the origin staying inside `K`.
//! The two stock families are triangular truncations `K_r = {k : |k| <= r}`
//! and rectangular truncations `K_{d_1,..,d_n} = {k : k_i <= d_i}`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::error::{Error, Result};

/// A point of `Z^n_+`, the exponent vector of a monomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    coords: Vec<u32>,
}

impl MultiIndex {
    pub fn new(coords: Vec<u32>) -> Self {
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self { coords: vec![0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Total degree `|k| = k_1 + ... + k_n`.
    pub fn degree(&self) -> u32 {
        self.coords.iter().sum()
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// The shift `W_j k = k + e_j`; axes are numbered `1..=n`.
    pub fn shift(&self, axis: usize) -> Result<Self> {
        if axis == 0 || axis > self.coords.len() {
            return Err(Error::AxisOutOfRange { axis, dim: self.coords.len() });
        }
        let mut c = self.coords.clone();
        c[axis - 1] += 1;
        Ok(Self { coords: c })
    }

    /// The decrement `k - e_j` when the result stays in `Z^n_+`.
    pub fn unshift(&self, axis: usize) -> Option<Self> {
        if axis == 0 || axis > self.coords.len() || self.coords[axis - 1] == 0 {
            return None;
        }
        let mut c = self.coords.clone();
        c[axis - 1] -= 1;
        Some(Self { coords: c })
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Self {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// The monomial `t^k` evaluated at a point of `R^n`.
    pub fn monomial_at(&self, point: &[f64]) -> f64 {
        debug_assert_eq!(point.len(), self.dim());
        self.coords
            .iter()
            .zip(point)
            .map(|(&e, &t)| t.powi(e as i32))
            .product()
    }
}

/// Nondecreasing total degree, ties broken lexicographically with the first
/// coordinate most significant (larger first coordinate earlier). This is the
/// indexation every generated set uses; it lists `K_{r-1}` before the rest of
/// `K_r`.
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.coords.cmp(&self.coords))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// An admissible truncation together with a fixed indexation `k_0, ..., k_rho`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibleSet {
    dim: usize,
    elements: Vec<MultiIndex>,
    positions: HashMap<MultiIndex, usize>,
}

impl AdmissibleSet {
    /// Builds a set from an explicit ordered element list. The list must be
    /// admissible, start with the origin and contain no duplicates; the given
    /// order becomes the indexation.
    pub fn from_elements(dim: usize, elements: Vec<MultiIndex>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        for k in &elements {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: k.dim() });
            }
        }
        if !is_admissible(&elements)? {
            return Err(Error::NotAdmissible {
                reason: "an element has no decrement chain to the origin".into(),
            });
        }
        if !elements[0].is_origin() {
            return Err(Error::NotAdmissible {
                reason: "the origin must be indexed first".into(),
            });
        }
        let mut positions = HashMap::with_capacity(elements.len());
        for (i, k) in elements.iter().enumerate() {
            if positions.insert(k.clone(), i).is_some() {
                return Err(Error::NotAdmissible { reason: format!("duplicate element {k}") });
            }
        }
        Ok(Self { dim, elements, positions })
    }

    /// The triangular truncation `K_r = {k : |k| <= r}`.
    pub fn triangular(dim: usize, r: u32) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        let mut elements = Vec::new();
        let mut level = vec![MultiIndex::origin(dim)];
        elements.extend(level.iter().cloned());
        for _ in 0..r {
            let mut next: BTreeSet<MultiIndex> = BTreeSet::new();
            for k in &level {
                for axis in 1..=dim {
                    next.insert(k.shift(axis).expect("axis in range"));
                }
            }
            level = next.into_iter().collect();
            elements.extend(level.iter().cloned());
        }
        Self::from_elements(dim, elements).expect("triangular sets are admissible")
    }

    /// The rectangular truncation `{k : k_i <= d_i for all i}`.
    pub fn rectangular(sides: &[u32]) -> Self {
        assert!(!sides.is_empty(), "dimension must be at least 1");
        let dim = sides.len();
        let mut elements: Vec<MultiIndex> = Vec::new();
        let mut stack = vec![Vec::with_capacity(dim)];
        while let Some(prefix) = stack.pop() {
            if prefix.len() == dim {
                elements.push(MultiIndex::new(prefix));
                continue;
            }
            let axis = prefix.len();
            for v in 0..=sides[axis] {
                let mut next = prefix.clone();
                next.push(v);
                stack.push(next);
            }
        }
        elements.sort();
        Self::from_elements(dim, elements).expect("rectangular sets are admissible")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of elements, `rho + 1`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Index of the last element.
    pub fn rho(&self) -> usize {
        self.elements.len() - 1
    }

    pub fn element(&self, j: usize) -> &MultiIndex {
        &self.elements[j]
    }

    pub fn elements(&self) -> &[MultiIndex] {
        &self.elements
    }

    pub fn contains(&self, k: &MultiIndex) -> bool {
        self.positions.contains_key(k)
    }

    pub fn position(&self, k: &MultiIndex) -> Option<usize> {
        self.positions.get(k).copied()
    }

    /// True when the set equals `K_r` for `r` the maximal degree present.
    pub fn is_triangular(&self) -> bool {
        let r = self.max_degree();
        let expected = Self::triangular(self.dim, r);
        expected.len() == self.len() && expected.elements.iter().all(|k| self.contains(k))
    }

    pub fn max_degree(&self) -> u32 {
        self.elements.iter().map(|k| k.degree()).max().unwrap_or(0)
    }

    /// `Omega_l` for `l >= 1`: positions `j` with `k_j + e_l` in the set, in
    /// increasing order. `Omega_0`: positions whose every coordinate shift
    /// stays in the set.
    pub fn omega(&self, l: usize) -> Result<Vec<usize>> {
        if l > self.dim {
            return Err(Error::AxisOutOfRange { axis: l, dim: self.dim });
        }
        let keep = |j: &usize| -> bool {
            let k = &self.elements[*j];
            if l == 0 {
                (1..=self.dim).all(|ax| self.contains(&k.shift(ax).unwrap()))
            } else {
                self.contains(&k.shift(l).unwrap())
            }
        };
        Ok((0..self.len()).filter(keep).collect())
    }

    /// The close extension `Ext K = K u (K + e_1) u ... u (K + e_n)`, with the
    /// indexation of `K` kept as a prefix and new elements appended in
    /// degree/lexicographic order.
    pub fn close_extension(&self) -> Self {
        let mut seen: HashSet<MultiIndex> = self.elements.iter().cloned().collect();
        let mut fresh: BTreeSet<MultiIndex> = BTreeSet::new();
        for k in &self.elements {
            for axis in 1..=self.dim {
                let shifted = k.shift(axis).expect("axis in range");
                if !seen.contains(&shifted) {
                    fresh.insert(shifted);
                }
            }
        }
        let mut elements = self.elements.clone();
        for k in fresh {
            seen.insert(k.clone());
            elements.push(k);
        }
        Self::from_elements(self.dim, elements).expect("close extensions are admissible")
    }

    /// The border: elements with at least one coordinate shift leaving the set.
    pub fn border(&self) -> BTreeSet<MultiIndex> {
        self.elements
            .iter()
            .filter(|k| (1..=self.dim).any(|ax| !self.contains(&k.shift(ax).unwrap())))
            .cloned()
            .collect()
    }

    /// Whether `(Ext K) \ K` is contained in the border of `Ext K`. This is
    /// the hypothesis under which close extensions classify canonical
    /// solutions; triangular truncations always satisfy it.
    pub fn ext_border_condition(&self) -> bool {
        let ext = self.close_extension();
        let border = ext.border();
        ext.elements
            .iter()
            .filter(|k| !self.contains(k))
            .all(|k| border.contains(k))
    }

    /// The Minkowski sum `K + K`, the index set over which moments must be
    /// prescribed.
    pub fn minkowski_double(&self) -> BTreeSet<MultiIndex> {
        let mut out = BTreeSet::new();
        for a in &self.elements {
            for b in &self.elements {
                out.insert(a.add(b));
            }
        }
        out
    }
}

/// Admissibility test: the origin is present and every nonzero element has
/// some coordinate decrement inside the set, transitively down to the origin.
/// Equivalent to the existence of a factorization into shifts whose partial
/// products all lie in the set, and checkable in linear passes.
pub fn is_admissible(elements: &[MultiIndex]) -> Result<bool> {
    if elements.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let dim = elements[0].dim();
    for k in elements {
        if k.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: k.dim() });
        }
    }
    let all: HashSet<&MultiIndex> = elements.iter().collect();
    if !all.iter().any(|k| k.is_origin()) {
        return Ok(false);
    }
    // peel reachable elements outward from the origin, degree by degree
    let mut reachable: HashSet<&MultiIndex> =
        all.iter().filter(|k| k.is_origin()).copied().collect();
    let mut by_degree: Vec<&MultiIndex> = elements.iter().collect();
    by_degree.sort_by_key(|k| k.degree());
    for k in by_degree {
        if k.is_origin() {
            continue;
        }
        let ok = (1..=dim).any(|ax| {
            k.unshift(ax)
                .map(|prev| reachable.contains(&prev))
                .unwrap_or(false)
        });
        if ok {
            reachable.insert(k);
        }
    }
    Ok(reachable.len() == all.len())
}
