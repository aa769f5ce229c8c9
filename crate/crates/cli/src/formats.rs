//! CSV formats: convergence tables and field dumps.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! parses back to bitwise-identical values and repeated deterministic runs
//! produce byte-identical output.

use crate::experiment::{ErrorRow, ErrorTable};
use fvshe_core::Field;

pub const TABLE_HEADER: &str = "L,N,Np,E_hat,std_err,order_time,order_space,wall_seconds";

pub fn table_to_csv(table: &ErrorTable) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in &table.rows {
        let fmt_opt = |o: Option<f64>| o.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.3}\n",
            r.l,
            r.n,
            r.np,
            r.e_hat,
            r.std_err,
            fmt_opt(r.order_time),
            fmt_opt(r.order_space),
            r.wall_seconds
        ));
    }
    out
}

/// Parses a table CSV, reporting the 1-based line number of any bad row.
pub fn table_from_csv(text: &str) -> Result<ErrorTable, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TABLE_HEADER => {}
        Some((_, header)) => {
            return Err(format!(
                "line 1: expected header `{TABLE_HEADER}`, got `{header}`"
            ))
        }
        None => return Err("empty file".into()),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(format!("line {}: expected 8 columns, got {}", idx + 1, cols.len()));
        }
        let fail = |what: &str| format!("line {}: cannot parse {what}", idx + 1);
        let parse_opt = |s: &str, what: &str| -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| fail(what))
            }
        };
        rows.push(ErrorRow {
            l: cols[0].parse().map_err(|_| fail("L"))?,
            n: cols[1].parse().map_err(|_| fail("N"))?,
            np: cols[2].parse().map_err(|_| fail("Np"))?,
            e_hat: cols[3].parse().map_err(|_| fail("E_hat"))?,
            std_err: cols[4].parse().map_err(|_| fail("std_err"))?,
            order_time: parse_opt(cols[5], "order_time")?,
            order_space: parse_opt(cols[6], "order_space")?,
            wall_seconds: cols[7].parse().map_err(|_| fail("wall_seconds"))?,
        });
    }
    Ok(ErrorTable { rows })
}

/// Field dump: `cell_id,value` per cell.
pub fn field_to_csv(field: &Field) -> String {
    let mut out = String::from("cell_id,value\n");
    for (k, v) in field.values().iter().enumerate() {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

pub fn field_from_csv(text: &str) -> Result<Field, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "cell_id,value" => {}
        _ => return Err("expected header `cell_id,value`".into()),
    }
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (id, value) = line
            .split_once(',')
            .ok_or_else(|| format!("line {}: expected `cell_id,value`", idx + 1))?;
        let id: usize = id
            .parse()
            .map_err(|_| format!("line {}: bad cell id", idx + 1))?;
        if id != values.len() {
            return Err(format!(
                "line {}: cell ids must be consecutive from 0, got {id}",
                idx + 1
            ));
        }
        values.push(
            value
                .parse::<f64>()
                .map_err(|_| format!("line {}: bad value", idx + 1))?,
        );
    }
    Ok(Field::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips_bitwise() {
        let table = ErrorTable {
            rows: vec![
                ErrorRow {
                    l: 16,
                    n: 40,
                    np: 500,
                    e_hat: 0.04083321887,
                    std_err: 6.61e-3,
                    order_time: None,
                    order_space: None,
                    wall_seconds: 0.0,
                },
                ErrorRow {
                    l: 16,
                    n: 80,
                    np: 500,
                    e_hat: 1.783e-2 / 3.0,
                    std_err: 7.1e-3,
                    order_time: Some(1.1064237f64),
                    order_space: None,
                    wall_seconds: 0.0,
                },
            ],
        };
        let text = table_to_csv(&table);
        let parsed = table_from_csv(&text).unwrap();
        assert_eq!(parsed, table);
        assert_eq!(table_to_csv(&parsed), text);
    }

    #[test]
    fn table_parse_errors_carry_line_numbers() {
        let text = format!("{TABLE_HEADER}\n16,40,500,oops,0,,,0.000\n");
        let err = table_from_csv(&text).unwrap_err();
        assert!(err.contains("line 2"), "{err}");
        assert!(table_from_csv("").unwrap_err().contains("empty"));
        let wrong = "a,b\n";
        assert!(table_from_csv(wrong).unwrap_err().contains("header"));
    }

    #[test]
    fn field_round_trips() {
        let f = Field::new(vec![0.5, -1.25, 3.0e-7]);
        let text = field_to_csv(&f);
        let back = field_from_csv(&text).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn field_rejects_gaps() {
        let text = "cell_id,value\n0,1.0\n2,2.0\n";
        assert!(field_from_csv(text).unwrap_err().contains("consecutive"));
    }
}
