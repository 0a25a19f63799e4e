//! Per-condition CSV manifests: header `num,j_g,j_f,<metric columns...>`.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::FlowCondition;

/// One manifest row. `values` is aligned with [`Manifest::columns`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRecord {
    pub num: u32,
    pub condition: FlowCondition,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    /// Metric column names, in file order, excluding `num`, `j_g`, `j_f`.
    pub columns: Vec<String>,
    pub records: Vec<ConditionRecord>,
}

impl Manifest {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.column_index(name)?;
        Some(self.records.iter().map(|r| r.values[idx]).collect())
    }

    pub fn find(&self, num: u32) -> Option<&ConditionRecord> {
        self.records.iter().find(|r| r.num == num)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["num".to_string(), "j_g".into(), "j_f".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.num.to_string(),
                r.condition.j_g().to_string(),
                r.condition.j_f().to_string(),
            ];
            row.extend(r.values.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv writer emits UTF-8"))
    }
}

/// Parses manifest text. Rows are numbered from 1 (the first line after the
/// header) in error messages.
pub fn parse_manifest_str(text: &str) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (i_num, i_jg, i_jf) = (find("num")?, find("j_g")?, find("j_f")?);
    let metric_idx: Vec<usize> = (0..headers.len())
        .filter(|i| ![i_num, i_jg, i_jf].contains(i))
        .collect();
    let columns = metric_idx.iter().map(|&i| headers[i].to_string()).collect();

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (k, row) in reader.records().enumerate() {
        let row_no = k + 1;
        let row = row.map_err(|e| Error::Manifest {
            what: "malformed record",
            row: row_no,
            detail: e.to_string(),
        })?;
        let cell = |i: usize| row.get(i).unwrap_or("");
        let num: u32 = cell(i_num).parse().map_err(|_| Error::Manifest {
            what: "non-integer `num`",
            row: row_no,
            detail: format!("{:?}", cell(i_num)),
        })?;
        let number = |i: usize| -> Result<f64> {
            cell(i).parse::<f64>().map_err(|_| Error::Manifest {
                what: "non-numeric cell",
                row: row_no,
                detail: format!("column `{}` = {:?}", &headers[i], cell(i)),
            })
        };
        let condition =
            FlowCondition::new(number(i_jg)?, number(i_jf)?).map_err(|e| Error::Manifest {
                what: "invalid condition",
                row: row_no,
                detail: e.to_string(),
            })?;
        if !seen.insert(num) {
            return Err(Error::Manifest {
                what: "duplicate condition id",
                row: row_no,
                detail: format!("num {num} already present"),
            });
        }
        let values = metric_idx.iter().map(|&i| number(i)).collect::<Result<_>>()?;
        records.push(ConditionRecord {
            num,
            condition,
            values,
        });
    }
    Ok(Manifest { columns, records })
}

pub fn parse_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest_str(&text)
}
