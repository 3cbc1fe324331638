// SPDX-License-Identifier: Apache-2.0

use std::io::{Read, Write};

use super::{Trace, TraceError, Value};

fn format_err(e: impl std::fmt::Display) -> TraceError {
    TraceError::Format(e.to_string())
}

/// Reads a trace from CSV: one header row of signal names, then one row
/// per cycle with decimal values or `x` for unknown.
pub fn read_csv(r: impl Read) -> Result<Trace, TraceError> {
    let mut rd = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(r);
    let names: Vec<String> = rd
        .headers()
        .map_err(format_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut t = Trace::new(names.iter().cloned())?;
    let mut row: Vec<Value> = Vec::with_capacity(names.len());
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(format_err)?;
        row.clear();
        for field in rec.iter() {
            let v = if field.eq_ignore_ascii_case("x") {
                None
            } else {
                Some(field.parse::<u64>().map_err(|_| {
                    TraceError::Format(format!("row {}: `{field}` is not a value", i + 2))
                })?)
            };
            row.push(v);
        }
        t.push_row(&row);
    }
    Ok(t)
}

pub fn write_csv(t: &Trace, w: impl Write) -> Result<(), TraceError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(t.names()).map_err(format_err)?;
    for c in 0..t.len() {
        let row: Vec<String> = (0..t.names().len())
            .map(|i| {
                t.at(i, c)
                    .map_or_else(|| "x".to_string(), |v| v.to_string())
            })
            .collect();
        wr.write_record(&row).map_err(format_err)?;
    }
    wr.flush().map_err(format_err)
}
