use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankingError {
    #[error("vote table is malformed: {0}")]
    InvalidTable(String),
    #[error("comparison graph is disconnected: {0:?} never meet the rest")]
    DisconnectedGraph(Vec<String>),
}

/// Pairwise win counts; `wins[i][j]` is how often item i beat item j.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteTable {
    pub items: Vec<String>,
    pub wins: Vec<Vec<f64>>,
}

impl VoteTable {
    pub fn new(items: Vec<String>) -> Self {
        let n = items.len();
        Self {
            items,
            wins: vec![vec![0.0; n]; n],
        }
    }

    pub fn record(&mut self, winner: usize, loser: usize, count: f64) {
        self.wins[winner][loser] += count;
    }

    fn check(&self) -> Result<(), RankingError> {
        let n = self.items.len();
        if n < 2 {
            return Err(RankingError::InvalidTable("need at least two items".into()));
        }
        if self.wins.len() != n || self.wins.iter().any(|row| row.len() != n) {
            return Err(RankingError::InvalidTable(format!("win matrix must be {n}x{n}")));
        }
        for (i, row) in self.wins.iter().enumerate() {
            if row[i] != 0.0 {
                return Err(RankingError::InvalidTable(format!("{} has self-votes", self.items[i])));
            }
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) {
                return Err(RankingError::InvalidTable(format!("{} has a negative or non-finite count", self.items[i])));
            }
        }
        Ok(())
    }

    /// Items not reachable from the first one through any comparison.
    fn unreachable(&self) -> Vec<String> {
        let n = self.items.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && self.wins[i][j] + self.wins[j][i] > 0.0 {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        (0..n).filter(|&i| !seen[i]).map(|i| self.items[i].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BradleyTerryFit {
    pub items: Vec<String>,
    /// Strengths, summing to 1.
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// False when the iteration cap was hit first; `scores` is then the last
    /// estimate.
    pub converged: bool,
}

impl BradleyTerryFit {
    /// Probability that item `i` beats item `j`.
    pub fn win_probability(&self, i: usize, j: usize) -> f64 {
        self.scores[i] / (self.scores[i] + self.scores[j])
    }
}

/// Maximum-likelihood strengths by minorization-maximization.
///
/// Each sweep sets s_i = W_i / sum_j n_ij / (s_i + s_j) and renormalizes;
/// iteration stops once no strength moves by `tol` or more.
pub fn bradley_terry(votes: &VoteTable, max_iterations: usize, tol: f64) -> Result<BradleyTerryFit, RankingError> {
    votes.check()?;
    let cut = votes.unreachable();
    if !cut.is_empty() {
        return Err(RankingError::DisconnectedGraph(cut));
    }
    let n = votes.items.len();
    let w = &votes.wins;
    let total_wins: Vec<f64> = w.iter().map(|row| row.iter().sum()).collect();
    let mut s = vec![1.0 / n as f64; n];
    for iteration in 1..=max_iterations {
        let mut next = vec![0.0; n];
        for i in 0..n {
            let denom: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| (w[i][j] + w[j][i]) / (s[i] + s[j]))
                .sum();
            next[i] = total_wins[i] / denom;
        }
        let sum: f64 = next.iter().sum();
        for x in &mut next {
            *x /= sum;
        }
        let delta = next.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        s = next;
        if delta < tol {
            return Ok(BradleyTerryFit {
                items: votes.items.clone(),
                scores: s,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(BradleyTerryFit {
        items: votes.items.clone(),
        scores: s,
        iterations: max_iterations,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(a: f64, b: f64) -> VoteTable {
        let mut t = VoteTable::new(vec!["A".into(), "B".into()]);
        t.record(0, 1, a);
        t.record(1, 0, b);
        t
    }

    #[test]
    fn two_item_closed_form() {
        let fit = bradley_terry(&two(75.0, 25.0), 1000, 1e-12).unwrap();
        assert!(fit.converged);
        assert!((fit.win_probability(0, 1) - 0.75).abs() < 1e-9);
        assert!((fit.scores[0] / fit.scores[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_votes_tie() {
        let fit = bradley_terry(&two(50.0, 50.0), 1000, 1e-12).unwrap();
        assert_eq!(fit.scores, vec![0.5, 0.5]);
        assert_eq!(fit.win_probability(1, 0), 0.5);
    }

    #[test]
    fn disconnected_items_are_named() {
        let mut t = VoteTable::new(vec!["A".into(), "B".into(), "C".into()]);
        t.record(0, 1, 3.0);
        assert_eq!(bradley_terry(&t, 100, 1e-9), Err(RankingError::DisconnectedGraph(vec!["C".into()])));
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let mut t = two(1.0, 1.0);
        t.wins[0][0] = 1.0;
        assert!(matches!(bradley_terry(&t, 10, 1e-9), Err(RankingError::InvalidTable(_))));
        let t = VoteTable::new(vec!["A".into()]);
        assert!(matches!(bradley_terry(&t, 10, 1e-9), Err(RankingError::InvalidTable(_))));
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let mut t = VoteTable::new(vec!["A".into(), "B".into(), "C".into()]);
        t.record(0, 1, 7.0);
        t.record(1, 2, 3.0);
        t.record(2, 0, 2.0);
        t.record(1, 0, 1.0);
        let fit = bradley_terry(&t, 1, 1e-15).unwrap();
        assert!(!fit.converged);
        assert!((fit.scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
