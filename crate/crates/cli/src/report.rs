//! Output documents. JSON reports carry no timestamps, so identical inputs
//! and settings give byte-identical output.

use serde::Serialize;

/// Bumped on any incompatible change to report layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct Report<S, R> {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub settings: S,
    pub results: R,
}

impl<S: Serialize, R: Serialize> Report<S, R> {
    pub fn new(command: &'static str, settings: S, results: R) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: "gsd",
            version: env!("CARGO_PKG_VERSION"),
            command,
            settings,
            results,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// CSV text from a header and rows of displayable cells.
pub fn csv_table<I, R>(header: &[&str], rows: I) -> csv::Result<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
