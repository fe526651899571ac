//! Text output for reports and leaderboards.

use std::fmt::Write;
use std::str::FromStr;

use crate::labels::CategoryTable;
use crate::metrics::{LeaderboardRow, Marginal, ScoreReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            _ => Err(format!("unknown format `{s}` (expected json, csv or markdown)")),
        }
    }
}

fn table(header: &[&str], rows: &[Vec<String>], right_from: usize) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::from("|");
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i >= right_from {
                let _ = write!(s, " {cell:>w$} |");
            } else {
                let _ = write!(s, " {cell:<w$} |");
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    out.push('|');
    for (i, w) in widths.iter().enumerate() {
        let dashes = "-".repeat(*w);
        if i >= right_from {
            let _ = write!(out, " {}: |", &dashes[1..]);
        } else {
            let _ = write!(out, " {dashes} |");
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
    }
    out
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `| Rank | Team | wPQ | wSQ | wRQ |` with two decimals.
pub fn leaderboard_markdown(rows: &[LeaderboardRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.rank.to_string(), r.team.clone(), f2(r.wpq), f2(r.wsq), f2(r.wrq)])
        .collect();
    table(&["Rank", "Team", "wPQ", "wSQ", "wRQ"], &body, 2)
}

pub fn leaderboard_csv(rows: &[LeaderboardRow]) -> String {
    let mut out = String::from("rank,team,wpq,wsq,wrq\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.rank, csv_field(&r.team), r.wpq, r.wsq, r.wrq);
    }
    out
}

pub fn leaderboard_json(rows: &[LeaderboardRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
    s.push('\n');
    s
}

pub fn render_leaderboard(rows: &[LeaderboardRow], format: Format) -> String {
    match format {
        Format::Json => leaderboard_json(rows),
        Format::Csv => leaderboard_csv(rows),
        Format::Markdown => leaderboard_markdown(rows),
    }
}

fn class_name(cats: Option<&CategoryTable>, id: u32) -> String {
    cats.and_then(|c| c.name(id))
        .map(str::to_string)
        .unwrap_or_else(|| id.to_string())
}

/// Headline scores, the condition breakdown, per-condition and per-class
/// tables.
pub fn report_markdown(report: &ScoreReport, cats: Option<&CategoryTable>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "wPQ {:.2}  wSQ {:.2}  wRQ {:.2}  (PQ {:.2} over all scenes)\n",
        report.wpq, report.wsq, report.wrq, report.pq_all
    );

    let mut header = vec![""];
    header.extend(Marginal::ALL.iter().map(|m| m.label()));
    let rows: Vec<Vec<String>> = [("PQ", 0), ("SQ", 1), ("RQ", 2)]
        .iter()
        .map(|&(name, k)| {
            let mut row = vec![name.to_string()];
            row.extend(Marginal::ALL.iter().map(|&m| match report.breakdown.get(m) {
                Some(q) => f2([q.pq, q.sq, q.rq][k]),
                None => "-".into(),
            }));
            row
        })
        .collect();
    out.push_str(&table(&header, &rows, 1));
    out.push('\n');

    let rows: Vec<Vec<String>> = report
        .per_condition
        .iter()
        .map(|c| {
            vec![
                c.condition.to_string(),
                c.n_scenes.to_string(),
                report
                    .weights_used
                    .get(c.condition)
                    .map(|w| w.to_string())
                    .unwrap_or_else(|| "-".into()),
                f2(c.pq),
                f2(c.sq),
                f2(c.rq),
            ]
        })
        .collect();
    out.push_str(&table(&["Condition", "Scenes", "Weight", "PQ", "SQ", "RQ"], &rows, 1));
    out.push('\n');

    let rows: Vec<Vec<String>> = report
        .per_class
        .iter()
        .map(|c| {
            vec![
                class_name(cats, c.category_id),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                f2(c.pq),
                f2(c.sq),
                f2(c.rq),
            ]
        })
        .collect();
    out.push_str(&table(&["Class", "TP", "FP", "FN", "PQ", "SQ", "RQ"], &rows, 1));
    out
}

/// Long-form CSV: one row per weighted score, marginal, condition and class.
pub fn report_csv(report: &ScoreReport, cats: Option<&CategoryTable>) -> String {
    let mut out = String::from("scope,name,pq,sq,rq,tp,fp,fn\n");
    let _ = writeln!(out, "weighted,all,{},{},{},,,", report.wpq, report.wsq, report.wrq);
    for m in Marginal::ALL {
        if let Some(q) = report.breakdown.get(m) {
            let _ = writeln!(out, "marginal,{},{},{},{},,,", m.label(), q.pq, q.sq, q.rq);
        }
    }
    for c in &report.per_condition {
        let _ = writeln!(out, "condition,{},{},{},{},,,", c.condition, c.pq, c.sq, c.rq);
    }
    for c in &report.per_class {
        let _ = writeln!(
            out,
            "class,{},{},{},{},{},{},{}",
            csv_field(&class_name(cats, c.category_id)),
            c.pq,
            c.sq,
            c.rq,
            c.tp,
            c.fp,
            c.fn_
        );
    }
    out
}

pub fn report_json(report: &ScoreReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn render_report(report: &ScoreReport, cats: Option<&CategoryTable>, format: Format) -> String {
    match format {
        Format::Json => report_json(report),
        Format::Csv => report_csv(report, cats),
        Format::Markdown => report_markdown(report, cats),
    }
}
