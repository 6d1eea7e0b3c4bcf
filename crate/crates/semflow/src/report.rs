//! Run-level exports: feature matrix, cross-validation reports, summary
//! tables and the exclusion list.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use semflow_core::classify::CvReport;
use semflow_core::motifs::StrategyKind;

use crate::error::{Error, Result};
use crate::format::{self, round9, sig9, write_file, FeatureRow, Floats};
use crate::pipeline::{Exclusion, Outcome, Stage, TaskReport};

pub const P_VALUE_METHOD: &str =
    "one-sided exact binomial tail of round(mean accuracy * n) successes against chance 1/classes";

fn report_json(r: &CvReport) -> Value {
    json!({
        "classifier": r.classifier.as_str(),
        "strategy": r.strategy.as_str(),
        "threshold": round9(r.threshold),
        "fold_accuracies": r.fold_accuracies.iter().map(|&a| round9(a)).collect::<Vec<_>>(),
        "mean_accuracy": round9(r.mean_accuracy),
        "p_value": round9(r.p_value),
        "seed": r.seed,
        "samples": r.samples,
        "classes": r.classes,
    })
}

/// One JSON object per subtask and strategy, keys sorted.
pub fn reports_json(tasks: &[TaskReport]) -> Result<String> {
    if tasks.is_empty() {
        return Err(Error::Export("no classification subtasks".into()));
    }
    let records: Vec<Value> = tasks
        .iter()
        .map(|t| {
            let mut record = json!({
                "subtask": t.name,
                "classes": t.classes,
                "strategy": t.strategy.as_str(),
                "books": t.books,
                "p_value_method": P_VALUE_METHOD,
            });
            let map = record.as_object_mut().expect("object");
            match &t.result {
                Ok(result) => {
                    map.insert("best".into(), report_json(&result.best));
                    map.insert("folds".into(), json!(result.folds));
                    map.insert("folds_reduced_from".into(), json!(result.folds_reduced_from));
                }
                Err(reason) => {
                    map.insert("skipped".into(), json!(reason));
                }
            }
            record
        })
        .collect();
    Ok(serde_json::to_string_pretty(&records).expect("json values") + "\n")
}

/// Every evaluated grid point: subtask, strategy, threshold, classifier,
/// mean accuracy, p-value.
pub fn grid_tsv(tasks: &[TaskReport]) -> String {
    let mut out = String::from("subtask\tstrategy\tthreshold\tclassifier\tmean_accuracy\tp_value\n");
    for t in tasks {
        for r in t.result.iter().flat_map(|r| &r.grid) {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                t.name,
                t.strategy,
                sig9(r.threshold),
                r.classifier,
                sig9(r.mean_accuracy),
                sig9(r.p_value)
            )
            .unwrap();
        }
    }
    out
}

fn table(rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(cell, &w)| format!("{cell:<w$}")).collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

/// Plain-text tables, one per strategy: subtask, accuracy, threshold,
/// p-value, and the classifier that achieved it.
pub fn summary(tasks: &[TaskReport], included: usize, exclusions: &[Exclusion]) -> String {
    let mut out = String::from("Semantic-flow classification summary\n");
    writeln!(out, "Books: {included} included, {} excluded", exclusions.len()).unwrap();
    writeln!(out, "p-value: {P_VALUE_METHOD}").unwrap();
    for strategy in StrategyKind::ALL {
        let mine: Vec<&TaskReport> = tasks.iter().filter(|t| t.strategy == strategy).collect();
        if mine.is_empty() {
            continue;
        }
        writeln!(out, "\n{strategy}").unwrap();
        let mut rows = vec![["Subtask", "Acc.", "Threshold", "p-value", "Classifier", "Books", "Folds"]
            .map(String::from)
            .to_vec()];
        for t in mine {
            rows.push(match &t.result {
                Ok(r) => vec![
                    t.name.clone(),
                    format!("{:.1}%", 100.0 * r.best.mean_accuracy),
                    if strategy.is_simplified() { format!("{:.3}", r.best.threshold) } else { "-".into() },
                    format!("{:.2e}", r.best.p_value),
                    r.best.classifier.to_string(),
                    t.books.to_string(),
                    r.folds.to_string(),
                ],
                Err(reason) => vec![
                    t.name.clone(),
                    format!("skipped: {reason}"),
                    String::new(),
                    String::new(),
                    String::new(),
                    t.books.to_string(),
                    String::new(),
                ],
            });
        }
        out.push_str(&table(&rows));
    }
    if !exclusions.is_empty() {
        out.push_str("\nExcluded books\n");
        for e in exclusions {
            writeln!(out, "{} ({}): {}", e.id, e.stage, e.reason).unwrap();
        }
    }
    out
}

/// `id\tstage\treason` per excluded book, with a header row.
pub fn exclusions_tsv(exclusions: &[Exclusion]) -> String {
    let mut out = String::from("id\tstage\treason\n");
    for e in exclusions {
        writeln!(out, "{}\t{}\t{}", e.id, e.stage, e.reason.replace(['\t', '\n'], " ")).unwrap();
    }
    out
}

/// Writes the exports belonging to `stages` under `out`. The exclusion list
/// is always written.
pub fn write_exports(outcome: &Outcome, out: &Path, stages: &[Stage]) -> Result<()> {
    for book in &outcome.books {
        let id = &book.entry.id;
        for &stage in stages {
            let (dir, ext, text) = match stage {
                Stage::Ingest => ("sentences", "tsv", format::write_sentences(&book.sentences)),
                Stage::Embed => match &book.vectors {
                    Some(v) => ("vectors", "tsv", format::write_vectors(v, Floats::Export)),
                    None => continue,
                },
                Stage::Graph => match &book.graph {
                    Some(g) => ("graphs", "txt", format::write_graph(g, Floats::Export)),
                    None => continue,
                },
                Stage::Communities => match &book.partition {
                    Some(p) => ("partitions", "txt", format::write_partition(p, Floats::Export)),
                    None => continue,
                },
                Stage::Markov => match &book.chain {
                    Some(c) => ("chains", "txt", format::write_chain(c, Floats::Export)),
                    None => continue,
                },
                Stage::Motifs | Stage::Classify => continue,
            };
            write_file(&out.join(dir).join(format!("{id}.{ext}")), &text)?;
        }
    }
    if stages.contains(&Stage::Motifs) {
        let rows: Vec<FeatureRow> = outcome.books.iter().flat_map(|b| b.features.iter().cloned()).collect();
        write_file(&out.join("features.tsv"), &format::write_features(&rows, Floats::Export)?)?;
    }
    if stages.contains(&Stage::Classify) {
        write_file(&out.join("reports.json"), &reports_json(&outcome.tasks)?)?;
        write_file(&out.join("grid.tsv"), &grid_tsv(&outcome.tasks))?;
        write_file(&out.join("summary.txt"), &summary(&outcome.tasks, outcome.books.len(), &outcome.exclusions))?;
    }
    write_file(&out.join("exclusions.tsv"), &exclusions_tsv(&outcome.exclusions))
}
