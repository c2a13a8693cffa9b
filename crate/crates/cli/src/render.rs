//! Conversion of analysis results into deterministic JSON values and
//! aligned text tables.
//!
//! Every JSON object built here is backed by `serde_json::Map` (a sorted
//! map), and every array is filled in a fixed loop order, so repeated runs
//! emit byte-identical output.

use serde_json::{json, Value};
use spencer_lab_core::exactla::format_rational;
use spencer_lab_core::{
    AcyclicityReport, CohomologyTable, CompatibilityReport, ConnectionFile, FiniteTypeReport,
    FormalIntegrabilityReport, IntegrabilityVerdict, OracleRow, PfaffianCheck, Rational,
    RationalMatrix, ReducedCurvatureReport, TowerReport, TowerValidation,
};

pub fn rationals_json(v: &[Rational]) -> Value {
    Value::Array(
        v.iter()
            .map(|r| Value::String(format_rational(r)))
            .collect(),
    )
}

pub fn matrix_json(m: &RationalMatrix) -> Value {
    Value::Array((0..m.rows()).map(|r| rationals_json(m.row(r))).collect())
}

pub fn connection_file_json(f: &ConnectionFile) -> Value {
    json!({
        "schema": f.schema,
        "n": f.n,
        "F_rank": f.f_rank,
        "E_rank": f.e_rank,
        "l": f.l,
        "C": f.c,
    })
}

fn opt_usize(v: Option<usize>) -> Value {
    v.map(Into::into).unwrap_or(Value::Null)
}

fn opt_bool(v: Option<bool>) -> Value {
    v.map(Into::into).unwrap_or(Value::Null)
}

pub fn tower_json(t: &TowerReport) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| {
            json!({
                "level": r.level,
                "prolongation_rank": r.prolongation_rank,
                "symbol_rank": r.symbol_rank,
                "projection_surjective": opt_bool(r.projection_surjective),
                "obstruction_dim": opt_usize(r.obstruction_dim),
            })
        })
        .collect();
    let stopped = t
        .stopped
        .as_ref()
        .map(|s| json!({"level": s.level, "cokernel_dim": s.cokernel_dim}))
        .unwrap_or(Value::Null);
    json!({
        "requested_levels": t.requested_levels,
        "rows": rows,
        "stopped": stopped,
    })
}

pub fn oracle_rows_json(rows: &[OracleRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| {
                json!({
                    "level": r.level,
                    "truncated_dim": r.truncated_dim,
                    "tower_rank": opt_usize(r.tower_rank),
                    "agree": opt_bool(r.agree),
                })
            })
            .collect(),
    )
}

pub fn cohomology_json(t: &CohomologyTable) -> Value {
    let entries: Vec<Value> = t
        .entries
        .iter()
        .map(|(&(sym, ext), e)| {
            json!({
                "sym_degree": sym,
                "ext_degree": ext,
                "kernel_dim": e.kernel_dim,
                "image_dim": e.image_dim,
                "cohomology_dim": e.cohomology_dim,
            })
        })
        .collect();
    json!({"p_max": t.p_max, "entries": entries})
}

pub fn acyclicity_json(r: &AcyclicityReport) -> Value {
    let entries: Vec<Value> = r
        .entries
        .iter()
        .map(|(&(p, j), &vanishes)| {
            json!({"level": p, "ext_degree": j, "vanishes": vanishes})
        })
        .collect();
    json!({
        "r": r.r,
        "p_max": r.p_max,
        "entries": entries,
        "acyclic_within_window": r.acyclic_within_window,
    })
}

pub fn tower_validation_json(orders_dims: &[(usize, usize)], v: &TowerValidation) -> Value {
    let levels: Vec<Value> = orders_dims
        .iter()
        .map(|&(order, dim)| json!({"order": order, "dim": dim}))
        .collect();
    json!({
        "levels": levels,
        "equality_flags": v.equality_flags,
        "stable_from": opt_usize(v.stable_from),
    })
}

pub fn verdict_str(v: &IntegrabilityVerdict) -> &'static str {
    match v {
        IntegrabilityVerdict::CertifiedWithinWindow => "certified-within-window",
        IntegrabilityVerdict::FailsHypothesis => "fails-hypothesis",
    }
}

pub fn integrability_json(r: &FormalIntegrabilityReport) -> Value {
    let cohomology: Vec<Value> = r
        .cohomology_zero
        .iter()
        .map(|&(level, zero)| json!({"level": level, "zero": zero}))
        .collect();
    json!({
        "window": r.window,
        "projection_surjective": r.projection_surjective,
        "first_prolongation_rank": r.first_prolongation_rank,
        "degree_two_cohomology_zero": cohomology,
        "verdict": verdict_str(&r.verdict),
    })
}

pub fn finite_type_json(r: &FiniteTypeReport) -> Value {
    json!({
        "bound": r.bound,
        "symbol_dims": r.symbol_dims,
        "order": opt_usize(r.order),
        "solution_rank": opt_usize(r.solution_rank),
    })
}

pub fn reduced_curvature_json(r: &ReducedCurvatureReport) -> Value {
    json!({
        "level": r.level,
        "curvature_image_dim": r.curvature_image_dim,
        "ambiguity_dim": r.ambiguity_dim,
        "obstruction_dim": r.obstruction_dim,
        "values_in_previous_symbol": r.values_in_previous_symbol,
        "values_partial_closed": r.values_partial_closed,
    })
}

pub fn compatibility_json(r: &CompatibilityReport) -> Value {
    json!({
        "projection_intertwines": r.compat1,
        "coefficients_commute": r.compat2,
        "embeds_in_prolongation": r.embeds_in_prolongation,
        "embedding_dim": r.embedding_dim,
        "prolongation_dim": r.prolongation_dim,
    })
}

pub fn pfaffian_check_json(c: &PfaffianCheck) -> Value {
    json!({
        "transversal": c.transversal,
        "vertical_part_rank": c.vertical_part_rank,
        "vertically_involutive": c.vertically_involutive,
    })
}

// ---------------------------------------------------------------------------
// Text tables
// ---------------------------------------------------------------------------

/// Renders rows as an aligned table: every cell right-aligned to its
/// column width, columns separated by ` | `.
pub fn aligned_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let render_row = |cells: &[String]| -> String {
        let mut line = String::new();
        for i in 0..cols {
            if i > 0 {
                line.push_str(" | ");
            }
            let cell = cells.get(i).map(String::as_str).unwrap_or("");
            line.push_str(&" ".repeat(widths[i].saturating_sub(cell.len())));
            line.push_str(cell);
        }
        line
    };
    let header_cells: Vec<String> = headers.iter().map(|h| h.to_string()).collect();
    out.push_str(&render_row(&header_cells));
    out.push('\n');
    let total: usize = widths.iter().sum::<usize>() + 3 * (cols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&render_row(row));
        out.push('\n');
    }
    out
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.to_string()
}

fn opt_cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string())
}

/// Tower table with optional oracle columns joined by level.
pub fn tower_table(t: &TowerReport, oracle: Option<&[OracleRow]>) -> String {
    let mut headers = vec!["k", "rank P^k", "rank g^(k)", "surjective", "obstruction"];
    if oracle.is_some() {
        headers.push("oracle dim");
        headers.push("agree");
    }
    let levels = t
        .rows
        .len()
        .max(oracle.map(|o| o.len()).unwrap_or(0));
    let mut rows = Vec::with_capacity(levels);
    for k in 0..levels {
        let mut row = Vec::with_capacity(headers.len());
        row.push(k.to_string());
        if let Some(r) = t.rows.get(k) {
            row.push(r.prolongation_rank.to_string());
            row.push(r.symbol_rank.to_string());
            row.push(opt_cell(r.projection_surjective.map(yes_no)));
            row.push(opt_cell(r.obstruction_dim));
        } else {
            row.extend(["-", "-", "-", "-"].map(String::from));
        }
        if let Some(o) = oracle {
            if let Some(r) = o.iter().find(|r| r.level == k) {
                row.push(r.truncated_dim.to_string());
                row.push(opt_cell(r.agree.map(yes_no)));
            } else {
                row.extend(["-", "-"].map(String::from));
            }
        }
        rows.push(row);
    }
    let mut out = aligned_table(&headers, &rows);
    match &t.stopped {
        Some(s) => out.push_str(&format!(
            "stopped at level {} (cokernel dimension {})\n",
            s.level, s.cokernel_dim
        )),
        None => out.push_str("stopped: none\n"),
    }
    out
}

/// Flat `key: value` rendering of a JSON value, keys in sorted order.
pub fn value_lines(v: &Value) -> String {
    let mut out = String::new();
    value_lines_inner(v, "", &mut out);
    out
}

fn value_lines_inner(v: &Value, prefix: &str, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, inner) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                value_lines_inner(inner, &path, out);
            }
        }
        Value::Array(items) => {
            if items.iter().all(|i| !i.is_object() && !i.is_array()) {
                let flat: Vec<String> = items.iter().map(scalar_text).collect();
                out.push_str(&format!("{prefix}: [{}]\n", flat.join(", ")));
            } else {
                for (i, inner) in items.iter().enumerate() {
                    value_lines_inner(inner, &format!("{prefix}[{i}]"), out);
                }
            }
        }
        other => out.push_str(&format!("{prefix}: {}\n", scalar_text(other))),
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "null".to_string(),
        other => other.to_string(),
    }
}
