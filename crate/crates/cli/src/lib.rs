//! Command-line campaigns over the fracball toolkit: configuration parsing,
//! campaign commands, and CSV/JSON report output.

pub mod commands;
pub mod config;
pub mod report;

use std::fs;
use std::io;
use std::path::Path;

use commands::CampaignOutput;
use config::OutputFormat;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INFRASTRUCTURE: i32 = 1;
    pub const ACCEPTANCE: i32 = 2;
}

/// Writes `report.json` and one CSV per table into `dir`.
pub fn write_output(out: &CampaignOutput, dir: &Path, format: OutputFormat) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    if format.json() {
        fs::write(dir.join("report.json"), out.report.encode())?;
    }
    if format.csv() {
        for table in &out.tables {
            let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", table.name)))?;
            w.write_record(&table.header)?;
            for row in &table.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Exit code for a finished campaign.
pub fn exit_code(out: &CampaignOutput) -> i32 {
    match out.acceptance_passed {
        Some(false) => exit::ACCEPTANCE,
        _ => exit::OK,
    }
}
