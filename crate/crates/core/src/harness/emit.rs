use std::fs;
use std::path::Path;

use serde::Serialize;

use super::run::RunReport;
use super::HarnessError;

/// Files written by every run, headers only when a run has no rows for them.
pub const CSV_FILES: [&str; 5] = ["estimates.csv", "ber.csv", "spectrum_coarse.csv", "spectrum_refined.csv", "rates.csv"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn write_csv<R: Serialize>(dir: &Path, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), HarnessError> {
    let path = dir.join(name);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&path).map_err(|e| io_err(&path, e))?;
    w.write_record(header).map_err(|e| io_err(&path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(&path, e))?;
    }
    w.flush().map_err(|e| io_err(&path, e))
}

/// Writes the CSV tables and `run.json` into `dir`, creating it if needed.
/// Output holds no timestamps, so equal inputs give identical bytes.
pub fn emit(report: &RunReport, dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_csv(
        dir,
        "estimates.csv",
        &["theta_deg", "R_m", "v_mps", "angle_bin", "l_q", "p_q", "refined"],
        report
            .estimates
            .iter()
            .map(|e| (e.theta_deg, e.range_m, e.velocity_mps, e.angle_bin, e.range_bin, e.doppler_bin, e.refined)),
    )?;
    write_csv(
        dir,
        "ber.csv",
        &["method", "N_x", "snr_db", "payload_ber", "index_ber", "trials"],
        report.ber.iter().map(|r| (&r.method, r.num_active, r.snr_db, r.payload_ber, r.index_ber, r.trials)),
    )?;
    let spectrum_header = ["bin", "theta_deg", "magnitude"];
    write_csv(dir, "spectrum_coarse.csv", &spectrum_header, report.spectrum_coarse.iter().map(|r| (r.bin, r.theta_deg, r.magnitude)))?;
    write_csv(dir, "spectrum_refined.csv", &spectrum_header, report.spectrum_refined.iter().map(|r| (r.bin, r.theta_deg, r.magnitude)))?;
    write_csv(
        dir,
        "rates.csv",
        &["private_subcarriers", "bit_rate_bps"],
        report.rates.iter().map(|r| (r.private_subcarriers, r.bit_rate_bps)),
    )?;
    let path = dir.join("run.json");
    let mut json = serde_json::to_string_pretty(report).map_err(|e| io_err(&path, e))?;
    json.push('\n');
    fs::write(&path, json).map_err(|e| io_err(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_rates, Scenario};

    #[test]
    fn writes_every_file_with_headers() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_rates(&Scenario::default()).unwrap();
        emit(&report, dir.path()).unwrap();
        for name in CSV_FILES {
            let text = fs::read_to_string(dir.path().join(name)).unwrap();
            assert!(text.lines().next().is_some(), "{name} has no header");
        }
        let rates = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
        assert_eq!(rates.lines().count(), 3);
        let est = fs::read_to_string(dir.path().join("estimates.csv")).unwrap();
        assert_eq!(est, "theta_deg,R_m,v_mps,angle_bin,l_q,p_q,refined\n");
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
        assert_eq!(json["command"], "rates");
    }
}
