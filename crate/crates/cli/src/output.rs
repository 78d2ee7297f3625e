// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::args::Format;
use crate::CliError;

/// One command result: the full structure for JSON and a flat table for CSV.
pub struct Output {
    pub json: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Output {
    pub fn new<T: Serialize>(
        value: &T,
        header: &[&str],
        rows: Vec<Vec<String>>,
    ) -> Result<Self, CliError> {
        Ok(Output {
            json: serde_json::to_string_pretty(value).map_err(modgeo::Error::from)?,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
        })
    }

    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let sink: Box<dyn Write> = match out {
            Some(p) => Box::new(File::create(p).map_err(modgeo::Error::from)?),
            None => Box::new(io::stdout().lock()),
        };
        let mut sink = BufWriter::new(sink);
        match format {
            Format::Json => {
                writeln!(sink, "{}", self.json).map_err(modgeo::Error::from)?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut sink);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush().map_err(modgeo::Error::from)?;
            }
        }
        sink.flush().map_err(modgeo::Error::from)?;
        Ok(())
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
