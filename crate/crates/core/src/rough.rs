//! Rough-set engine over finite information systems with discrete attributes.
//!
//! Nothing here knows about images: a universe is a list of elements, each
//! carrying one integer code per attribute. An attribute subset induces an
//! indiscernibility partition, and any target set can then be approximated
//! from below (classes fully inside it) and from above (classes touching it).

use std::collections::HashMap;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Membership flags over a universe of `len()` elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ElementSet(Vec<bool>);

impl ElementSet {
    pub fn empty(universe_size: usize) -> Self {
        ElementSet(vec![false; universe_size])
    }

    pub fn full(universe_size: usize) -> Self {
        ElementSet(vec![true; universe_size])
    }

    pub fn from_flags(flags: Vec<bool>) -> Self {
        ElementSet(flags)
    }

    /// Builds a set over `universe_size` elements containing `members`.
    /// Indices outside the universe are rejected.
    pub fn from_indices(universe_size: usize, members: &[usize]) -> Result<Self> {
        let mut flags = vec![false; universe_size];
        for &m in members {
            if m >= universe_size {
                return Err(Error::invalid(format!(
                    "element {m} outside universe of size {universe_size}"
                )));
            }
            flags[m] = true;
        }
        Ok(ElementSet(flags))
    }

    /// Universe size, not cardinality.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, element: usize) -> bool {
        self.0.get(element).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&f| f).count()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i)
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn into_flags(self) -> Vec<bool> {
        self.0
    }

    /// True when every member of `self` is a member of `other`. Sets over
    /// different universes are never subsets of one another.
    pub fn is_subset(&self, other: &ElementSet) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        ElementSet(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a && !b)
                .collect(),
        )
    }
}

impl Index<usize> for ElementSet {
    type Output = bool;

    fn index(&self, index: usize) -> &bool {
        &self.0[index]
    }
}

/// A finite universe described by `attribute_count` discrete attributes.
///
/// Codes are stored row-major: element `i` owns
/// `codes[i * attribute_count..(i + 1) * attribute_count]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformationSystem {
    universe_size: usize,
    attribute_count: usize,
    codes: Vec<u32>,
    domains: Vec<u32>,
}

impl InformationSystem {
    /// Builds a system from flattened row-major codes. `domains[a]` is the
    /// exclusive upper bound of attribute `a`'s codes.
    pub fn from_flat(domains: Vec<u32>, codes: Vec<u32>) -> Result<Self> {
        let attribute_count = domains.len();
        if attribute_count == 0 {
            return Err(Error::invalid("information system needs at least one attribute"));
        }
        if !codes.len().is_multiple_of(attribute_count) {
            return Err(Error::invalid(format!(
                "{} codes do not form rows of {attribute_count} attributes",
                codes.len()
            )));
        }
        for (i, row) in codes.chunks_exact(attribute_count).enumerate() {
            for (a, (&code, &domain)) in row.iter().zip(&domains).enumerate() {
                if code >= domain {
                    return Err(Error::invalid(format!(
                        "element {i} attribute {a}: code {code} not below domain bound {domain}"
                    )));
                }
            }
        }
        Ok(InformationSystem {
            universe_size: codes.len() / attribute_count,
            attribute_count,
            codes,
            domains,
        })
    }

    pub fn from_rows(domains: Vec<u32>, rows: &[Vec<u32>]) -> Result<Self> {
        let m = domains.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != m) {
            return Err(Error::invalid(format!(
                "element {i} has {} codes, expected {m}",
                row.len()
            )));
        }
        Self::from_flat(domains, rows.concat())
    }

    /// One column of codes per attribute, all columns the same length.
    pub fn from_columns(domains: Vec<u32>, columns: &[&[u32]]) -> Result<Self> {
        if columns.len() != domains.len() {
            return Err(Error::invalid(format!(
                "{} columns for {} attributes",
                columns.len(),
                domains.len()
            )));
        }
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("attribute columns differ in length"));
        }
        let mut codes = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            codes.extend(columns.iter().map(|c| c[i]));
        }
        Self::from_flat(domains, codes)
    }

    pub fn universe_size(&self) -> usize {
        self.universe_size
    }

    pub fn attribute_count(&self) -> usize {
        self.attribute_count
    }

    pub fn domains(&self) -> &[u32] {
        &self.domains
    }

    pub fn row(&self, element: usize) -> &[u32] {
        let m = self.attribute_count;
        &self.codes[element * m..(element + 1) * m]
    }

    pub fn code(&self, element: usize, attribute: usize) -> u32 {
        self.codes[element * self.attribute_count + attribute]
    }
}

/// Equivalence classes of a universe. Class ids are dense in
/// `0..class_count()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    class_of: Vec<usize>,
    class_sizes: Vec<usize>,
}

impl Partition {
    /// Builds a partition from explicit class labels, renumbering them in
    /// first-occurrence order.
    pub fn from_labels<L: Eq + std::hash::Hash>(labels: impl IntoIterator<Item = L>) -> Self {
        let mut ids: HashMap<L, usize> = HashMap::new();
        let mut class_of = Vec::new();
        let mut class_sizes: Vec<usize> = Vec::new();
        for label in labels {
            let next = class_sizes.len();
            let id = *ids.entry(label).or_insert(next);
            if id == next {
                class_sizes.push(0);
            }
            class_sizes[id] += 1;
            class_of.push(id);
        }
        Partition {
            class_of,
            class_sizes,
        }
    }

    pub fn universe_size(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn class_of(&self, element: usize) -> usize {
        self.class_of[element]
    }

    pub fn class_ids(&self) -> &[usize] {
        &self.class_of
    }

    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    /// Members of each class, in ascending element order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = self
            .class_sizes
            .iter()
            .map(|&s| Vec::with_capacity(s))
            .collect();
        for (e, &c) in self.class_of.iter().enumerate() {
            out[c].push(e);
        }
        out
    }

    /// `|[x] ∩ target|` for every class.
    fn intersection_counts(&self, target: &ElementSet) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count()];
        for (&c, &inside) in self.class_of.iter().zip(target.flags()) {
            if inside {
                counts[c] += 1;
            }
        }
        counts
    }

    fn check_target(&self, target: &ElementSet) -> Result<()> {
        if target.len() != self.universe_size() {
            return Err(Error::invalid(format!(
                "target set over {} elements, partition over {}",
                target.len(),
                self.universe_size()
            )));
        }
        Ok(())
    }
}

/// Lower/upper approximations of a target set and their Pawlak accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughApproximation {
    pub target: ElementSet,
    pub lower: ElementSet,
    pub upper: ElementSet,
    pub boundary: ElementSet,
    pub accuracy: f64,
}

/// Groups elements whose codes agree on every attribute in `attrs`.
///
/// Class ids follow the first element of each class in row order, so the
/// output is a deterministic function of the inputs.
pub fn induce_partition(is: &InformationSystem, attrs: &[usize]) -> Result<Partition> {
    if attrs.is_empty() {
        return Err(Error::invalid("attribute subset is empty"));
    }
    if let Some(&a) = attrs.iter().find(|&&a| a >= is.attribute_count()) {
        return Err(Error::invalid(format!(
            "attribute index {a} out of range for {} attributes",
            is.attribute_count()
        )));
    }
    if is.universe_size() == 0 {
        return Err(Error::invalid("universe is empty"));
    }

    // Mixed-radix key when the joint domain fits in a u64, else the raw vector.
    let radix = attrs
        .iter()
        .try_fold(1u64, |acc, &a| acc.checked_mul(u64::from(is.domains()[a])));
    let n = is.universe_size();
    let partition = match radix {
        Some(_) => Partition::from_labels((0..n).map(|e| {
            attrs.iter().fold(0u64, |key, &a| {
                key * u64::from(is.domains()[a]) + u64::from(is.code(e, a))
            })
        })),
        None => Partition::from_labels(
            (0..n).map(|e| attrs.iter().map(|&a| is.code(e, a)).collect::<Vec<u32>>()),
        ),
    };
    Ok(partition)
}

/// Pawlak accuracy `|lower| / |upper|`. An empty upper approximation comes
/// from an empty target, which is crisp, so the result is 1.
pub fn pawlak_accuracy(lower_size: usize, upper_size: usize) -> Result<f64> {
    if lower_size > upper_size {
        return Err(Error::InvariantViolation(format!(
            "lower approximation ({lower_size}) larger than upper ({upper_size})"
        )));
    }
    if upper_size == 0 {
        return Ok(1.0);
    }
    Ok(lower_size as f64 / upper_size as f64)
}

pub fn approximate(p: &Partition, target: &ElementSet) -> Result<RoughApproximation> {
    p.check_target(target)?;
    let hits = p.intersection_counts(target);
    let sizes = p.class_sizes();
    let lower: Vec<bool> = p.class_ids().iter().map(|&c| hits[c] == sizes[c]).collect();
    let upper: Vec<bool> = p.class_ids().iter().map(|&c| hits[c] > 0).collect();
    let lower = ElementSet(lower);
    let upper = ElementSet(upper);
    let boundary = upper.difference(&lower);
    let accuracy = pawlak_accuracy(lower.count(), upper.count())?;
    Ok(RoughApproximation {
        target: target.clone(),
        lower,
        upper,
        boundary,
        accuracy,
    })
}

/// Fraction of `element`'s class that lies inside `target`.
pub fn rough_membership(p: &Partition, target: &ElementSet, element: usize) -> Result<f64> {
    p.check_target(target)?;
    if element >= p.universe_size() {
        return Err(Error::invalid(format!(
            "element {element} outside universe of size {}",
            p.universe_size()
        )));
    }
    let class = p.class_of(element);
    let hits = p
        .class_ids()
        .iter()
        .zip(target.flags())
        .filter(|&(&c, &inside)| c == class && inside)
        .count();
    Ok(hits as f64 / p.class_sizes()[class] as f64)
}

/// Rough membership of every element, computed in one pass over the universe.
pub fn rough_memberships(p: &Partition, target: &ElementSet) -> Result<Vec<f64>> {
    p.check_target(target)?;
    let hits = p.intersection_counts(target);
    let per_class: Vec<f64> = hits
        .iter()
        .zip(p.class_sizes())
        .map(|(&h, &s)| h as f64 / s as f64)
        .collect();
    Ok(p.class_ids().iter().map(|&c| per_class[c]).collect())
}
