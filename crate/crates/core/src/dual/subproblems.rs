//! Closed-form solvers for the four per-node subproblems.
//!
//! Edge subproblems are continuous knapsacks solved greedily by value
//! density; node subproblems are argmax/sign rules. Tie-breaks are fixed so
//! every solver is deterministic: equal densities order by ascending level,
//! user argmax ties take the lowest level, and zero-value knapsack items get
//! zero even when capacity remains.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SubproblemError {
    #[error("bandwidth must be > 0 (level {0})")]
    NonPositiveBandwidth(usize),
    #[error("capacity must be > 0")]
    NonPositiveCapacity,
    #[error("user supports no levels")]
    EmptySupportedSet,
}

/// Greedy continuous-knapsack fill: maximize `sum_l values[l] * y[l]` under
/// `sum_l weights[l] * y[l] <= capacity`, `y in [0,1]^L`.
///
/// Items are filled in descending density order until capacity runs out; the
/// marginal item gets the exact remaining fraction, so at most one output
/// coordinate is fractional. Items with non-positive value stay at zero.
pub fn knapsack_fill(
    values: &[f64],
    weights: &[f64],
    capacity: f64,
) -> Result<Vec<f64>, SubproblemError> {
    debug_assert_eq!(values.len(), weights.len());
    for (l, &w) in weights.iter().enumerate() {
        if !(w > 0.0) {
            return Err(SubproblemError::NonPositiveBandwidth(l + 1));
        }
    }
    if !(capacity > 0.0) {
        return Err(SubproblemError::NonPositiveCapacity);
    }
    let mut order: Vec<usize> = (0..values.len()).filter(|&l| values[l] > 0.0).collect();
    // descending density, ties by ascending level index (stable sort)
    order.sort_by(|&a, &b| {
        let da = values[a] / weights[a];
        let db = values[b] / weights[b];
        db.partial_cmp(&da).expect("finite densities")
    });

    let mut y = vec![0.0; values.len()];
    let mut used = 0.0;
    for &l in &order {
        if used + weights[l] <= capacity {
            y[l] = 1.0;
            used += weights[l];
        } else {
            // marginal item: exact fraction, possibly zero when capacity is
            // already met exactly
            y[l] = (capacity - used) / weights[l];
            break;
        }
    }
    Ok(y)
}

/// Server-edge subproblem: the downstream node's incoming-transmission
/// prices are the knapsack values.
pub fn solve_server_edge(
    lambda1_downstream: &[f64],
    bandwidths: &[f64],
    capacity: f64,
) -> Result<Vec<f64>, SubproblemError> {
    knapsack_fill(lambda1_downstream, bandwidths, capacity)
}

/// User subproblem: one-hot selection of the supported level maximizing
/// `w * Q_l - lambda1[l]`. `supported` holds 1-based levels.
pub fn solve_user(
    weight: f64,
    qualities: &[f64],
    lambda1_row: &[f64],
    supported: &[usize],
) -> Result<Vec<f64>, SubproblemError> {
    let best = user_argmax(weight, qualities, lambda1_row, supported)?;
    let mut x = vec![0.0; qualities.len()];
    x[best - 1] = 1.0;
    Ok(x)
}

/// The level a user subproblem selects (1-based); ties go to the lowest
/// level index.
pub fn user_argmax(
    weight: f64,
    qualities: &[f64],
    lambda1_row: &[f64],
    supported: &[usize],
) -> Result<usize, SubproblemError> {
    let mut best: Option<(usize, f64)> = None;
    for &level in supported {
        let score = weight * qualities[level - 1] - lambda1_row[level - 1];
        let replace = match best {
            None => true,
            Some((bl, bs)) => score > bs || (score == bs && level < bl),
        };
        if replace {
            best = Some((level, score));
        }
    }
    best.map(|(l, _)| l).ok_or(SubproblemError::EmptySupportedSet)
}

/// Forwarder selection subproblem: carry level `l` iff its net price
/// `sum_k lambda2[f,k,l] - lambda1[f,l]` is strictly positive.
pub fn solve_forwarder_selection(lambda1_row: &[f64], lambda2_out_rows: &[&[f64]]) -> Vec<f64> {
    (0..lambda1_row.len())
        .map(|l| {
            let price: f64 = lambda2_out_rows.iter().map(|row| row[l]).sum();
            if price - lambda1_row[l] > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

/// Forwarder-edge subproblem: knapsack over net densities
/// `(lambda1[k,l] - lambda2[f,k,l]) / B_l`; non-positive coefficients are
/// never transmitted.
pub fn solve_forwarder_edge(
    lambda1_downstream: &[f64],
    lambda2_edge: &[f64],
    bandwidths: &[f64],
    capacity: f64,
) -> Result<Vec<f64>, SubproblemError> {
    let values: Vec<f64> = lambda1_downstream
        .iter()
        .zip(lambda2_edge)
        .map(|(l1, l2)| l1 - l2)
        .collect();
    knapsack_fill(&values, bandwidths, capacity)
}

/// Objective value of a knapsack output.
pub fn knapsack_value(values: &[f64], y: &[f64]) -> f64 {
    values.iter().zip(y).map(|(v, yl)| v * yl).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_knapsack() {
        // densities [3, 4/3, 1] fill levels 1 and 2 fully, 0.2 of level 3
        let y = solve_server_edge(&[6.0, 4.0, 5.0], &[2.0, 3.0, 5.0], 6.0).unwrap();
        assert_eq!(y, vec![1.0, 1.0, 0.2]);
        assert!((knapsack_value(&[6.0, 4.0, 5.0], &y) - 11.0).abs() < 1e-12);
    }

    #[test]
    fn zero_prices_transmit_nothing() {
        let y = solve_server_edge(&[0.0, 0.0], &[1.0, 2.0], 5.0).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn slack_capacity_fills_positive_items() {
        let y = solve_server_edge(&[1.0, 1.0], &[1.0, 2.0], 10.0).unwrap();
        assert_eq!(y, vec![1.0, 1.0]);
    }

    #[test]
    fn exact_capacity_emits_zero_fraction() {
        let y = solve_server_edge(&[2.0, 1.0], &[2.0, 3.0], 2.0).unwrap();
        assert_eq!(y, vec![1.0, 0.0]);
    }

    #[test]
    fn at_most_one_fractional_coordinate() {
        let y = solve_server_edge(&[5.0, 4.0, 3.0, 2.0], &[2.0, 2.0, 2.0, 2.0], 5.0).unwrap();
        let fractional = y.iter().filter(|v| **v > 0.0 && **v < 1.0).count();
        assert_eq!(fractional, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(
            solve_server_edge(&[1.0], &[0.0], 1.0).unwrap_err(),
            SubproblemError::NonPositiveBandwidth(1)
        );
        assert_eq!(
            solve_server_edge(&[1.0], &[1.0], 0.0).unwrap_err(),
            SubproblemError::NonPositiveCapacity
        );
    }

    #[test]
    fn user_with_zero_prices_takes_best_supported_level() {
        let q = [1.0, 2.0, 3.0];
        let x = solve_user(1.0, &q, &[0.0, 0.0, 0.0], &[1, 2, 3]).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 1.0]);
        // unsupported top level
        let x = solve_user(1.0, &q, &[0.0, 0.0, 0.0], &[1, 2]).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn user_prices_steer_selection() {
        // w=2, Q=[1,2,3], prices [0,3,5] -> scores [2,1,1] -> level 1
        let x = solve_user(2.0, &[1.0, 2.0, 3.0], &[0.0, 3.0, 5.0], &[1, 2, 3]).unwrap();
        assert_eq!(x, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn user_ties_break_to_lowest_level() {
        // equal scores everywhere
        let x = solve_user(1.0, &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0], &[2, 3]).unwrap();
        assert_eq!(x, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_support_is_an_error() {
        assert_eq!(
            solve_user(1.0, &[1.0], &[0.0], &[]).unwrap_err(),
            SubproblemError::EmptySupportedSet
        );
    }

    #[test]
    fn forwarder_selection_is_a_strict_sign_test() {
        // zero coefficient stays off
        assert_eq!(solve_forwarder_selection(&[0.0], &[&[0.0]]), vec![0.0]);
        // sum lambda2 = 3 vs lambda1 = 1 -> on
        let l2a = [0.0, 2.0];
        let l2b = [0.0, 1.0];
        let x = solve_forwarder_selection(&[0.0, 1.0], &[&l2a, &l2b]);
        assert_eq!(x, vec![0.0, 1.0]);
        // exact cancellation -> off
        let l2 = [1.0];
        assert_eq!(solve_forwarder_selection(&[1.0], &[&l2]), vec![0.0]);
    }

    #[test]
    fn forwarder_edge_reference_instance() {
        let y = solve_forwarder_edge(&[7.0, 5.0, 6.0], &[1.0, 1.0, 1.0], &[2.0, 3.0, 5.0], 6.0)
            .unwrap();
        assert_eq!(y, vec![1.0, 1.0, 0.2]);
    }

    #[test]
    fn forwarder_edge_ignores_non_positive_coefficients() {
        let y = solve_forwarder_edge(&[1.0, 2.0], &[1.0, 3.0], &[1.0, 1.0], 10.0).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn forwarder_edge_single_item_fraction() {
        let y = solve_forwarder_edge(&[3.0], &[1.0], &[4.0], 2.0).unwrap();
        assert_eq!(y, vec![0.5]);
    }
}
