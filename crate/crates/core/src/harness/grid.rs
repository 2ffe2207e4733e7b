use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Validation score of one grid point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridEntry {
    pub index: usize,
    /// `None` when the point failed (for example, training diverged).
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Grid search result: the winning point's payload and the full leaderboard,
/// sorted by RMSE (failures last), ties by index.
#[derive(Clone, Debug)]
pub struct GridOutcome<T> {
    pub best_index: usize,
    pub best: T,
    pub leaderboard: Vec<GridEntry>,
}

/// Score every point concurrently with `score(index, point)`, which returns
/// a validation RMSE and a payload (usually the fitted model).
///
/// The lowest RMSE wins; ties go to the lowest index. Results are assembled
/// in index order, so thread scheduling never changes the outcome.
pub fn grid_search<P, T, F>(points: &[P], score: F) -> Result<GridOutcome<T>>
where
    P: Sync,
    T: Send,
    F: Fn(usize, &P) -> Result<(f64, T)> + Sync,
{
    if points.is_empty() {
        return Err(Error::Config("grid is empty".into()));
    }
    let results: Vec<Result<(f64, T)>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            score(i, p).and_then(|(rmse, t)| {
                if rmse.is_finite() {
                    Ok((rmse, t))
                } else {
                    Err(Error::Numerical(format!("non-finite validation RMSE {rmse}")))
                }
            })
        })
        .collect();

    let mut leaderboard: Vec<GridEntry> = results
        .iter()
        .enumerate()
        .map(|(index, r)| match r {
            Ok((rmse, _)) => GridEntry { index, rmse: Some(*rmse), error: None },
            Err(e) => GridEntry { index, rmse: None, error: Some(e.to_string()) },
        })
        .collect();
    leaderboard.sort_by(|a, b| match (a.rmse, b.rmse) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });

    let best_index = match leaderboard.first() {
        Some(GridEntry { rmse: Some(_), index, .. }) => *index,
        _ => {
            let reasons: Vec<String> = leaderboard
                .iter()
                .map(|e| format!("#{}: {}", e.index, e.error.as_deref().unwrap_or("?")))
                .collect();
            return Err(Error::Numerical(format!(
                "every grid point failed: {}",
                reasons.join("; ")
            )));
        }
    };
    let best = results
        .into_iter()
        .nth(best_index)
        .expect("index in range")
        .expect("winner succeeded")
        .1;
    Ok(GridOutcome { best_index, best, leaderboard })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stub(rmses: &[f64]) -> Result<GridOutcome<usize>> {
        grid_search(rmses, |i, &r| Ok((r, i)))
    }

    #[test]
    fn single_point_wins() {
        assert_eq!(stub(&[0.7]).unwrap().best_index, 0);
    }

    #[test]
    fn known_scores() {
        let out = stub(&[0.3, 0.1, 0.2]).unwrap();
        assert_eq!(out.best_index, 1);
        assert_eq!(out.best, 1);
        let order: Vec<usize> = out.leaderboard.iter().map(|e| e.index).collect();
        assert_eq!(order, vec![1, 2, 0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        assert_eq!(stub(&[0.5, 0.2, 0.9, 0.2]).unwrap().best_index, 1);
    }

    #[test]
    fn failures_are_ranked_last() {
        let out = grid_search(&[0, 1, 2], |i, _| {
            if i == 0 {
                Err(Error::Numerical("diverged".into()))
            } else {
                Ok((1.0 / i as f64, i))
            }
        })
        .unwrap();
        assert_eq!(out.best_index, 2);
        assert_eq!(out.leaderboard.last().unwrap().index, 0);
    }

    #[test]
    fn all_failures_is_error() {
        let err = grid_search(&[0, 1], |_, _| -> Result<(f64, ())> {
            Err(Error::Numerical("diverged".into()))
        })
        .unwrap_err();
        assert!(err.to_string().contains("every grid point failed"));
        assert!(stub(&[]).is_err());
    }
}
