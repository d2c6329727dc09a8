//! CSV input and output.
//!
//! Input files are UTF-8 CSV in one of two layouts:
//!
//! * long: columns `subject,group,time,value`, one observation per row;
//! * wide: columns `subject,group,t_<time>value...`, one curve per row.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::curves::{FunctionalDataset, RawCurve};
use crate::error::{Error, Result};

/// Read curves from a CSV file, detecting the layout from the header.
pub fn load_dataset_path(path: impl AsRef<Path>) -> Result<Vec<RawCurve>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_dataset(file)
}

/// Read curves from CSV, detecting the layout from the header. Rejects
/// duplicate observations, subjects appearing in two groups and datasets
/// with fewer than two groups.
pub fn load_dataset<R: Read>(reader: R) -> Result<Vec<RawCurve>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();

    let find = |name: &str| headers.iter().position(|h| h == name);
    let subject_col = find("subject").ok_or_else(|| Error::InvalidRecord {
        row: 1,
        msg: "missing 'subject' column".into(),
    })?;
    let group_col = find("group").ok_or_else(|| Error::InvalidRecord {
        row: 1,
        msg: "missing 'group' column".into(),
    })?;

    let curves = match (find("time"), find("value")) {
        (Some(tc), Some(vc)) => read_long(&mut rdr, subject_col, group_col, tc, vc)?,
        _ => {
            let time_cols: Vec<(usize, f64)> = headers
                .iter()
                .enumerate()
                .filter_map(|(i, h)| {
                    h.strip_prefix("t_")
                        .and_then(|s| s.parse::<f64>().ok())
                        .map(|t| (i, t))
                })
                .collect();
            if time_cols.is_empty() {
                return Err(Error::InvalidRecord {
                    row: 1,
                    msg: "need either time/value columns or t_<time> columns".into(),
                });
            }
            read_wide(&mut rdr, subject_col, group_col, &time_cols)?
        }
    };

    let mut groups: Vec<&str> = curves.iter().map(|c| c.group()).collect();
    groups.sort_unstable();
    groups.dedup();
    if groups.len() < 2 {
        return Err(Error::TooFewGroups {
            found: groups.len(),
        });
    }
    Ok(curves)
}

fn parse_number(field: &str, row: usize, what: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::InvalidRecord {
        row,
        msg: format!("non-numeric {what} '{field}'"),
    })
}

fn read_long<R: Read>(
    rdr: &mut csv::Reader<R>,
    subject_col: usize,
    group_col: usize,
    time_col: usize,
    value_col: usize,
) -> Result<Vec<RawCurve>> {
    // subject -> (group, [(time, value)])
    let mut order: Vec<String> = Vec::new();
    let mut per_subject: HashMap<String, (String, Vec<(f64, f64)>)> = HashMap::new();

    for (i, record) in rdr.records().enumerate() {
        let row = i + 2; // 1-based, after the header
        let record = record?;
        let get = |col: usize| -> Result<&str> {
            record.get(col).ok_or_else(|| Error::InvalidRecord {
                row,
                msg: format!("missing column {col}"),
            })
        };
        let subject = get(subject_col)?.to_string();
        let group = get(group_col)?.to_string();
        let time = parse_number(get(time_col)?, row, "time")?;
        let value = parse_number(get(value_col)?, row, "value")?;

        let entry = per_subject.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            (group.clone(), Vec::new())
        });
        if entry.0 != group {
            return Err(Error::SubjectInTwoGroups {
                subject,
                first: entry.0.clone(),
                second: group,
            });
        }
        if entry.1.iter().any(|(t, _)| *t == time) {
            return Err(Error::DuplicateObservation { subject, time, row });
        }
        entry.1.push((time, value));
    }

    order
        .into_iter()
        .map(|subject| {
            let (group, mut obs) = per_subject.remove(&subject).unwrap();
            obs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let (times, values): (Vec<f64>, Vec<f64>) = obs.into_iter().unzip();
            RawCurve::new(subject, group, times, values)
        })
        .collect()
}

fn read_wide<R: Read>(
    rdr: &mut csv::Reader<R>,
    subject_col: usize,
    group_col: usize,
    time_cols: &[(usize, f64)],
) -> Result<Vec<RawCurve>> {
    let mut sorted = time_cols.to_vec();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    for w in sorted.windows(2) {
        if w[0].1 == w[1].1 {
            return Err(Error::InvalidRecord {
                row: 1,
                msg: format!("duplicate time column t_{}", w[0].1),
            });
        }
    }

    let mut seen: HashMap<String, String> = HashMap::new();
    let mut curves = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record?;
        let get = |col: usize| -> Result<&str> {
            record.get(col).ok_or_else(|| Error::InvalidRecord {
                row,
                msg: format!("missing column {col}"),
            })
        };
        let subject = get(subject_col)?.to_string();
        let group = get(group_col)?.to_string();
        match seen.get(&subject) {
            Some(first) if *first != group => {
                return Err(Error::SubjectInTwoGroups {
                    subject,
                    first: first.clone(),
                    second: group,
                });
            }
            Some(_) => {
                return Err(Error::DuplicateObservation {
                    subject,
                    time: sorted[0].1,
                    row,
                });
            }
            None => {
                seen.insert(subject.clone(), group.clone());
            }
        }
        let mut times = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for &(col, t) in &sorted {
            times.push(t);
            values.push(parse_number(get(col)?, row, "value")?);
        }
        curves.push(RawCurve::new(subject, group, times, values)?);
    }
    Ok(curves)
}

/// Write raw curves in the wide layout.
pub fn write_curves_wide<W: Write>(curves: &[RawCurve], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let times = curves
        .first()
        .map(|c| c.times().to_vec())
        .unwrap_or_default();
    let mut header = vec!["subject".to_string(), "group".to_string()];
    header.extend(times.iter().map(|t| format!("t_{t}")));
    w.write_record(&header)?;
    for c in curves {
        let mut rec = vec![c.subject_id().to_string(), c.group().to_string()];
        rec.extend(c.values().iter().map(|v| format!("{v}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}

/// Export fitted curves as a grid-by-curves matrix. The first column is the
/// grid time, then one column per curve labeled `group/subject`.
pub fn write_fitted_csv<W: Write>(ds: &FunctionalDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_string()];
    for (i, subject) in ds.subjects().iter().enumerate() {
        header.push(format!(
            "{}/{}",
            ds.group_names()[ds.group_of()[i]],
            subject
        ));
    }
    w.write_record(&header)?;
    for (gi, t) in ds.grid().iter().enumerate() {
        let mut rec = vec![format!("{t}")];
        for curve in 0..ds.n() {
            rec.push(format!("{}", ds.values_row(curve)[gi]));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))?;
    Ok(())
}
