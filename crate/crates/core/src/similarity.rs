//! Hamming distance and k-nearest-neighbour selection over categorical rows.

use serde::Serialize;

use crate::dataset::{Dataset, Individual};
use crate::error::{Error, Result};

/// Number of attributes on which the two individuals disagree.
pub fn hamming(a: &Individual, b: &Individual) -> Result<usize> {
    if a.arity() != b.arity() {
        return Err(Error::Comparability {
            left: a.arity(),
            right: b.arity(),
        });
    }
    Ok(mismatches(&a.values, &b.values))
}

#[inline]
pub(crate) fn mismatches(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Neighbor {
    /// Row index in the pool.
    pub index: usize,
    pub distance: usize,
}

/// The `k` individuals closest to a queried individual.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSet {
    pub query: Individual,
    /// Row of the queried individual when it belongs to the pool.
    pub query_index: Option<usize>,
    /// Sorted by distance, then by pool row.
    pub neighbors: Vec<Neighbor>,
    pub k: usize,
}

impl NeighborSet {
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.neighbors.iter().map(|n| n.index)
    }
}

/// Selects the `k` rows of `pool` nearest to `query`, skipping row `exclude`.
///
/// Ties at the cut-off distance go to the lowest row indices, so the result
/// is a pure function of the pool order.
pub fn k_nearest(
    query: &Individual,
    pool: &Dataset,
    k: usize,
    exclude: Option<usize>,
) -> Result<NeighborSet> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let p = pool.schema().arity();
    if query.arity() != p {
        return Err(Error::Comparability {
            left: query.arity(),
            right: p,
        });
    }
    let excluded = exclude.filter(|&i| i < pool.len());
    let available = pool.len() - usize::from(excluded.is_some());
    if available < k {
        return Err(Error::InsufficientPool { available, k });
    }

    let mut distances = Vec::with_capacity(pool.len());
    let mut histogram = vec![0usize; p + 1];
    for (i, row) in pool.rows().iter().enumerate() {
        if Some(i) == excluded {
            distances.push(usize::MAX);
            continue;
        }
        let d = mismatches(&query.values, &row.values);
        histogram[d] += 1;
        distances.push(d);
    }

    // Smallest distance whose cumulative count reaches k.
    let mut cutoff = 0;
    let mut below = 0;
    while below + histogram[cutoff] < k {
        below += histogram[cutoff];
        cutoff += 1;
    }
    let mut at_cutoff = k - below;

    let mut neighbors = Vec::with_capacity(k);
    for (index, &distance) in distances.iter().enumerate() {
        if distance < cutoff {
            neighbors.push(Neighbor { index, distance });
        } else if distance == cutoff && at_cutoff > 0 {
            neighbors.push(Neighbor { index, distance });
            at_cutoff -= 1;
        }
    }
    neighbors.sort_by_key(|n| (n.distance, n.index));

    Ok(NeighborSet {
        query: query.clone(),
        query_index: excluded,
        neighbors,
        k,
    })
}
