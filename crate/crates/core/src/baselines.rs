//! Comparison detectors operating on the scalar difference field: hard and
//! fuzzy two-cluster c-means, and plain differencing against a fixed cutoff.
//!
//! Both clusterings start from the minimum and maximum difference, so runs
//! are reproducible. The cluster with the higher center is the changed one.

use crate::error::{Error, Result};
use crate::imaging::{ScalarField, MAX_SCALAR};
use crate::pipeline::ChangeMask;

pub const DEFAULT_FUZZIFIER: f64 = 2.0;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-4;

/// Result of a two-cluster fit on one-dimensional data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// `centers[0]` starts at the minimum, `centers[1]` at the maximum.
    pub centers: [f64; 2],
    /// Fuzzy memberships per point; `None` for hard clustering.
    pub memberships: Option<Vec<[f64; 2]>>,
    pub assignment: Vec<usize>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Objective value after each iteration.
    pub objective: Vec<f64>,
}

impl ClusterModel {
    /// Index of the changed cluster, or `None` when the centers coincide.
    pub fn changed_cluster(&self) -> Option<usize> {
        match self.centers[0].partial_cmp(&self.centers[1]) {
            Some(std::cmp::Ordering::Less) => Some(1),
            Some(std::cmp::Ordering::Greater) => Some(0),
            _ => None,
        }
    }

    /// Mask over `diff`'s grid marking points assigned to the changed
    /// cluster. Coinciding centers mark nothing.
    pub fn change_mask(&self, diff: &ScalarField) -> Result<ChangeMask> {
        if self.assignment.len() != diff.len() {
            return Err(Error::invalid("model was fitted on a different field"));
        }
        let flags = match self.changed_cluster() {
            Some(k) => self.assignment.iter().map(|&a| a == k).collect(),
            None => vec![false; diff.len()],
        };
        ChangeMask::new(diff.width(), diff.height(), flags)
    }

    fn degenerate(values: &[f64], fuzzy: bool) -> Self {
        let v = values.first().copied().unwrap_or(0.0);
        ClusterModel {
            centers: [v, v],
            memberships: fuzzy.then(|| vec![[1.0, 0.0]; values.len()]),
            assignment: vec![0; values.len()],
            iterations_run: 0,
            converged: true,
            objective: Vec::new(),
        }
    }
}

fn check_common(values: &[f64], max_iter: usize, tol: f64) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid("no data to cluster"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be at least 1"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

fn nearest(v: f64, centers: &[f64; 2]) -> usize {
    // ties go to the lower-index (initially lower) center
    if (v - centers[1]).abs() < (v - centers[0]).abs() {
        1
    } else {
        0
    }
}

/// Within-cluster sum of squares.
pub fn hcm_objective(values: &[f64], assignment: &[usize], centers: &[f64; 2]) -> f64 {
    values
        .iter()
        .zip(assignment)
        .map(|(&v, &a)| (v - centers[a]).powi(2))
        .sum()
}

/// Lloyd iterations for two clusters on 1-D data.
pub fn hcm_cluster(values: &[f64], max_iter: usize, tol: f64) -> Result<ClusterModel> {
    check_common(values, max_iter, tol)?;
    let (lo, hi) = min_max(values);
    if lo == hi {
        return Ok(ClusterModel::degenerate(values, false));
    }
    let mut centers = [lo, hi];
    let mut assignment = vec![0usize; values.len()];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;

    for _ in 0..max_iter {
        iterations_run += 1;
        for (a, &v) in assignment.iter_mut().zip(values) {
            *a = nearest(v, &centers);
        }
        let mut sums = [0.0; 2];
        let mut counts = [0usize; 2];
        for (&a, &v) in assignment.iter().zip(values) {
            sums[a] += v;
            counts[a] += 1;
        }
        let mut moved = 0.0f64;
        for k in 0..2 {
            // an empty cluster keeps its previous center
            if counts[k] > 0 {
                let next = sums[k] / counts[k] as f64;
                moved = moved.max((next - centers[k]).abs());
                centers[k] = next;
            }
        }
        objective.push(hcm_objective(values, &assignment, &centers));
        if moved < tol {
            converged = true;
            break;
        }
    }
    for (a, &v) in assignment.iter_mut().zip(values) {
        *a = nearest(v, &centers);
    }

    Ok(ClusterModel {
        centers,
        memberships: None,
        assignment,
        iterations_run,
        converged,
        objective,
    })
}

/// Membership of `v` in each of two clusters with fuzzifier `m`. A point
/// sitting on a center belongs to it entirely.
pub fn fcm_memberships(v: f64, centers: &[f64; 2], m: f64) -> [f64; 2] {
    let d0 = (v - centers[0]).powi(2);
    let d1 = (v - centers[1]).powi(2);
    if d0 == 0.0 {
        return [1.0, 0.0];
    }
    if d1 == 0.0 {
        return [0.0, 1.0];
    }
    let p = 1.0 / (m - 1.0);
    // u0 = 1 / (1 + (d0/d1)^p); computed from the smaller ratio for stability
    let (r01, r10) = ((d0 / d1).powf(p), (d1 / d0).powf(p));
    let u0 = if r01 <= 1.0 {
        1.0 / (1.0 + r01)
    } else {
        r10 / (1.0 + r10)
    };
    [u0, 1.0 - u0]
}

/// Fuzzy objective `sum_i sum_k u_ik^m (x_i - c_k)^2`.
pub fn fcm_objective(values: &[f64], memberships: &[[f64; 2]], centers: &[f64; 2], m: f64) -> f64 {
    values
        .iter()
        .zip(memberships)
        .map(|(&v, u)| {
            (0..2)
                .map(|k| u[k].powf(m) * (v - centers[k]).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Fuzzy c-means with two clusters on 1-D data.
pub fn fcm_cluster(values: &[f64], fuzzifier: f64, max_iter: usize, tol: f64) -> Result<ClusterModel> {
    check_common(values, max_iter, tol)?;
    if !fuzzifier.is_finite() || fuzzifier <= 1.0 {
        return Err(Error::invalid(format!("fuzzifier {fuzzifier} must exceed 1")));
    }
    let (lo, hi) = min_max(values);
    if lo == hi {
        return Ok(ClusterModel::degenerate(values, true));
    }
    let mut centers = [lo, hi];
    let mut memberships: Vec<[f64; 2]> = vec![[0.0; 2]; values.len()];
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations_run = 0;

    for _ in 0..max_iter {
        iterations_run += 1;
        for (u, &v) in memberships.iter_mut().zip(values) {
            *u = fcm_memberships(v, &centers, fuzzifier);
        }
        let mut moved = 0.0f64;
        for k in 0..2 {
            let (num, den) = memberships
                .iter()
                .zip(values)
                .fold((0.0, 0.0), |(num, den), (u, &v)| {
                    let w = u[k].powf(fuzzifier);
                    (num + w * v, den + w)
                });
            if den > 0.0 {
                let next = num / den;
                moved = moved.max((next - centers[k]).abs());
                centers[k] = next;
            }
        }
        objective.push(fcm_objective(values, &memberships, &centers, fuzzifier));
        if moved < tol {
            converged = true;
            break;
        }
    }
    for (u, &v) in memberships.iter_mut().zip(values) {
        *u = fcm_memberships(v, &centers, fuzzifier);
    }
    // ties defuzzify to cluster 0
    let assignment = memberships
        .iter()
        .map(|u| usize::from(u[1] > u[0]))
        .collect();

    Ok(ClusterModel {
        centers,
        memberships: Some(memberships),
        assignment,
        iterations_run,
        converged,
        objective,
    })
}

pub fn diff_values(diff: &ScalarField) -> Vec<f64> {
    diff.values().iter().map(|&v| f64::from(v)).collect()
}


pub fn hcm_detect(diff: &ScalarField, max_iter: usize, tol: f64) -> Result<ChangeMask> {
    hcm_cluster(&diff_values(diff), max_iter, tol)?.change_mask(diff)
}

pub fn fcm_detect(diff: &ScalarField, fuzzifier: f64, max_iter: usize, tol: f64) -> Result<ChangeMask> {
    fcm_cluster(&diff_values(diff), fuzzifier, max_iter, tol)?.change_mask(diff)
}

/// Plain differencing: changed iff `diff >= t0`. Stands in for the
/// compressed-domain IOM detector, whose internals are not reproduced.
pub fn threshold_diff_detect(diff: &ScalarField, t0: u16) -> Result<ChangeMask> {
    if t0 > MAX_SCALAR {
        return Err(Error::invalid(format!("cutoff {t0} exceeds {MAX_SCALAR}")));
    }
    let flags = diff.values().iter().map(|&v| v >= t0).collect();
    ChangeMask::new(diff.width(), diff.height(), flags)
}
