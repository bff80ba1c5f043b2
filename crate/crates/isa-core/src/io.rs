//! File formats: matrix CSV, partition and support JSON, fit and inference
//! records, edge reports.
//!
//! Matrices are written as `d` rows of comma-separated decimal literals with
//! 17 significant digits (exact f64 round trip), no header, LF endings.
//! Indices are 1-based in every file.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{IsaError, Result};
use crate::inference::{EdgeInference, InferenceResult, SelectionSummary};
use crate::partition::{GroupPartition, InterBlockIndex};
use crate::strings::StringsFit;

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_f64(m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| {
            IsaError::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(IsaError::Parse(format!("{}: empty matrix", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(IsaError::Parse(format!(
            "{}: ragged rows",
            path.display()
        )));
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(flat.len() / cols, cols, &flat))
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    groups: Vec<Vec<usize>>,
}

pub fn write_partition_json(path: &Path, p: &GroupPartition) -> Result<()> {
    let groups: Vec<Vec<usize>> = p
        .groups()
        .iter()
        .map(|g| g.iter().map(|&j| j + 1).collect())
        .collect();
    let text = serde_json::to_string_pretty(&PartitionFile { groups })?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_partition_json(path: &Path) -> Result<GroupPartition> {
    let text = std::fs::read_to_string(path)?;
    let file: PartitionFile = serde_json::from_str(&text)?;
    let mut max = 0usize;
    for g in &file.groups {
        for &j in g {
            if j == 0 {
                return Err(IsaError::Parse(format!(
                    "{}: indices are 1-based; found 0",
                    path.display()
                )));
            }
            max = max.max(j);
        }
    }
    let groups: Vec<Vec<usize>> = file
        .groups
        .into_iter()
        .map(|g| g.into_iter().map(|j| j - 1).collect())
        .collect();
    GroupPartition::new(groups, max)
}

pub fn write_support_json(
    path: &Path,
    support: &BTreeSet<InterBlockIndex>,
    s: usize,
) -> Result<()> {
    let pairs: Vec<[usize; 2]> = support.iter().map(|ix| [ix.j + 1, ix.k + 1]).collect();
    let text = serde_json::to_string_pretty(&json!({ "s": s, "pairs": pairs }))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn fit_to_json(fit: &StringsFit) -> serde_json::Value {
    json!({
        "lambda": fit.lambda,
        "converged": fit.converged,
        "iters": fit.iters_used,
        "objective": if fit.objective.is_finite() { json!(fit.objective) } else { json!(null) },
        "residuals": [fit.final_residuals.0, fit.final_residuals.1],
        "theta": fit.theta_hat.to_row_major(),
    })
}

pub fn write_fit_json(path: &Path, fit: &StringsFit) -> Result<()> {
    let text = serde_json::to_string_pretty(&fit_to_json(fit))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_selection_json(path: &Path, sel: &SelectionSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(&json!({
        "grid": sel.grid,
        "val_losses": sel.val_losses,
        "chosen_index": sel.chosen_index,
        "chosen_lambda": sel.grid[sel.chosen_index],
    }))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn inference_to_json(result: &InferenceResult) -> serde_json::Value {
    let d = result.partition.d();
    let mut theta_u = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            theta_u.push(result.theta_u[(j, k)]);
        }
    }
    let xi: Vec<serde_json::Value> = result
        .xi_hat_sq
        .iter()
        .map(|(ix, v)| json!([ix.j + 1, ix.k + 1, v]))
        .collect();
    json!({
        "theta_u": theta_u,
        "xi_hat_sq": xi,
        "n": result.n_split,
        "alpha": result.alpha,
        "lambda": result.lambda,
        "lambda_prime": result.lambda_prime,
        "clamp_warnings": result.clamp_warnings,
    })
}

pub fn write_inference_json(path: &Path, result: &InferenceResult) -> Result<()> {
    let text = serde_json::to_string_pretty(&inference_to_json(result))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Report-table float: 4 significant digits.
fn fmt_report(v: f64) -> String {
    format!("{v:.3e}")
}

pub fn write_edges_csv(path: &Path, edges: &[EdgeInference]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "j,k,estimate,std_err,ci_low,ci_high,z,reject")?;
    for e in edges {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            e.index.j + 1,
            e.index.k + 1,
            fmt_report(e.estimate),
            fmt_report(e.std_err),
            fmt_report(e.ci_low),
            fmt_report(e.ci_high),
            fmt_report(e.z_stat),
            e.reject
        )?;
    }
    Ok(())
}

pub fn write_selected_edges_csv(
    path: &Path,
    selected: &BTreeSet<InterBlockIndex>,
) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "j,k")?;
    for ix in selected {
        writeln!(f, "{},{}", ix.j + 1, ix.k + 1)?;
    }
    Ok(())
}

/// `mean(sd)` at 4 significant digits, the presentation used by the report
/// tables.
pub fn fmt_mean_sd(mean: f64, sd: f64) -> String {
    format!("{mean:.4}({sd:.4})")
}

pub fn read_data_csv(path: &Path) -> Result<DMatrix<f64>> {
    read_matrix_csv(path)
}

pub fn write_data_csv(path: &Path, data: &DMatrix<f64>) -> Result<()> {
    write_matrix_csv(path, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn matrix_csv_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(
            2,
            3,
            &[1.0 / 3.0, -2.5e-17, 4.0, f64::MIN_POSITIVE, 1e300, -0.0],
        );
        write_matrix_csv(&path, &m).unwrap();
        let back = read_matrix_csv(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn partition_json_round_trip_uses_one_based_indices() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.json");
        let p = GroupPartition::contiguous(&[2, 3]).unwrap();
        write_partition_json(&path, &p).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains('1'));
        assert!(!text.contains("\"groups\": [[0"));
        let back = read_partition_json(&path).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "1.0,2.0\n3.0\n").unwrap();
        assert!(read_matrix_csv(&path).is_err());
    }
}
