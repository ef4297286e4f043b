//! Exhaustive certifiers for small books. Both work on the compatibility
//! graph (edge between a bid and an ask iff the bid is priced at or above
//! the ask) and share nothing with the clearing policies.

use crate::book::OrderBook;
use crate::money::Money;

use super::MatchingError;

/// Largest number of unit shouts per side the oracles accept.
pub const ORACLE_MAX_SIDE: usize = 12;

fn check_size(book: &OrderBook) -> Result<(), MatchingError> {
    let (bids, asks) = (book.bids().len(), book.asks().len());
    if bids > ORACLE_MAX_SIDE || asks > ORACLE_MAX_SIDE {
        return Err(MatchingError::TooLarge {
            bids,
            asks,
            limit: ORACLE_MAX_SIDE,
        });
    }
    Ok(())
}

/// Size of a maximum bipartite matching, by repeated augmenting paths.
pub fn oracle_max_volume(book: &OrderBook) -> Result<u64, MatchingError> {
    check_size(book)?;
    let bids = book.bids();
    let asks = book.asks();
    let adj: Vec<Vec<usize>> = bids
        .iter()
        .map(|b| {
            (0..asks.len())
                .filter(|&j| b.price() >= asks[j].price())
                .collect()
        })
        .collect();

    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; asks.len()];
    let mut size = 0;
    for i in 0..bids.len() {
        let mut seen = vec![false; asks.len()];
        if augment(i, &adj, &mut seen, &mut owner) {
            size += 1;
        }
    }
    Ok(size)
}

/// Maximum reported profit `Σ (p(b) - p(a))` over all valid matchings, as a
/// maximum-weight assignment (Hungarian method with potentials). Pairs with
/// negative spread get weight zero, which is the same as leaving both
/// shouts unmatched.
pub fn oracle_max_reported_profit(book: &OrderBook) -> Result<Money, MatchingError> {
    check_size(book)?;
    let bids = book.bids();
    let asks = book.asks();
    let n = bids.len().max(asks.len());
    if n == 0 {
        return Ok(Money::ZERO);
    }
    // cost[i][j] = -weight, 1-based with padding rows/columns of zero weight.
    let weight = |i: usize, j: usize| -> i64 {
        match (bids.get(i), asks.get(j)) {
            (Some(b), Some(a)) => (b.price() - a.price()).minor().max(0),
            _ => 0,
        }
    };
    let cost = |i: usize, j: usize| -weight(i - 1, j - 1);

    const INF: i64 = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let total: i64 = (1..=n).map(|j| weight(row_of_col[j] - 1, j - 1)).sum();
    Ok(Money::from_minor(total))
}
