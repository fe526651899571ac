use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::WeightedScores;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub team: String,
    pub wpq: f64,
    pub wsq: f64,
    pub wrq: f64,
}

fn by_score(a: &(String, WeightedScores), b: &(String, WeightedScores)) -> Ordering {
    b.1.wpq
        .total_cmp(&a.1.wpq)
        .then_with(|| b.1.wsq.total_cmp(&a.1.wsq))
        .then_with(|| b.1.wrq.total_cmp(&a.1.wrq))
        .then_with(|| a.0.cmp(&b.0))
}

/// Orders entries by wPQ, descending. Ties fall to wSQ, then wRQ, then the
/// team name, so the order is total. Ranks start at 1.
pub fn rank_submissions(entries: &[(String, WeightedScores)]) -> Vec<LeaderboardRow> {
    let mut sorted = entries.to_vec();
    sorted.sort_by(by_score);
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, (team, s))| LeaderboardRow {
            rank: i + 1,
            team,
            wpq: s.wpq,
            wsq: s.wsq,
            wrq: s.wrq,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(team: &str, wpq: f64, wsq: f64, wrq: f64) -> (String, WeightedScores) {
        (team.to_string(), WeightedScores { wpq, wsq, wrq })
    }

    #[test]
    fn published_order() {
        let rows = rank_submissions(&[
            entry("eliet", 45.84, 73.23, 56.40),
            entry("mljp", 36.15, 68.28, 45.58),
            entry("wg", 54.23, 76.62, 65.66),
            entry("michele24", 47.03, 72.61, 57.62),
        ]);
        let order: Vec<_> = rows.iter().map(|r| r.team.as_str()).collect();
        assert_eq!(order, ["wg", "michele24", "eliet", "mljp"]);
        assert_eq!(rows.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3, 4]);
    }

    #[test]
    fn single_entry() {
        let rows = rank_submissions(&[entry("solo", 10.0, 20.0, 30.0)]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rank, 1);
    }

    #[test]
    fn ties() {
        let rows = rank_submissions(&[entry("a", 50.0, 70.0, 1.0), entry("b", 50.0, 71.0, 1.0)]);
        assert_eq!(rows[0].team, "b");
        let rows = rank_submissions(&[entry("z", 50.0, 70.0, 1.0), entry("y", 50.0, 70.0, 1.0)]);
        assert_eq!(rows[0].team, "y");
        let rows = rank_submissions(&[entry("a", 50.0, 70.0, 1.0), entry("b", 50.0, 70.0, 2.0)]);
        assert_eq!(rows[0].team, "b");
    }
}
