//! CSV dataset files: a header row, numeric feature columns and an optional
//! final integer `label` column.

use std::path::Path;

use xmeter_core::TabularDataset;

use crate::error::{config_err, CliResult};

pub fn parse_dataset(reader: impl std::io::Read, origin: &str) -> CliResult<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() {
        return Err(config_err(format!("{origin}: empty header")));
    }
    let labeled = headers.last().is_some_and(|h| h == "label");
    let width = headers.len() - usize::from(labeled);
    if width == 0 {
        return Err(config_err(format!("{origin}: no feature columns")));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record?;
        let at = line + 2;
        if record.len() != headers.len() {
            return Err(config_err(format!(
                "{origin}:{at}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        let row = record
            .iter()
            .take(width)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| config_err(format!("{origin}:{at}: `{v}` is not a number")))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        if labeled {
            let v = record[width].trim();
            labels.push(v.parse::<usize>().map_err(|_| {
                config_err(format!("{origin}:{at}: label `{v}` is not a class index"))
            })?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(config_err(format!("{origin}: no data rows")));
    }
    let names = Some(headers[..width].to_vec());
    Ok(TabularDataset::build(
        rows,
        labeled.then_some(labels),
        names,
    )?)
}

pub fn load_dataset(path: &Path) -> CliResult<TabularDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| config_err(format!("cannot open dataset {}: {e}", path.display())))?;
    parse_dataset(file, &path.display().to_string())
}

pub fn write_dataset(data: &TabularDataset, writer: impl std::io::Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..data.n_features()).map(|j| format!("x{j}")).collect(),
    };
    if data.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    for (i, row) in data.rows().iter().enumerate() {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(labels) = data.labels() {
            record.push(labels[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}
