//! CSV series and JSON manifests.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! series produce equal bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::SimConfig;
use crate::bounds::{BoundReport, PowerLawFit};
use crate::observables::{ObservableRecord, ObservableSeries};

pub fn csv_header(num_species: usize) -> String {
    let mut cols = vec!["t".to_string(), "E".into(), "px".into(), "py".into(), "pz".into()];
    cols.extend((1..=num_species).map(|i| format!("mass_{i}")));
    cols.extend(["Y3", "mu_half", "entropy", "boldH"].map(String::from));
    cols.extend((1..=num_species).map(|i| format!("var_{i}")));
    cols.push("collisions".into());
    cols.join(",")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn csv_row(rec: &ObservableRecord) -> String {
    let mut row = format!("{},{},{},{},{}", rec.time, rec.energy, rec.momentum[0], rec.momentum[1], rec.momentum[2]);
    for m in &rec.species_masses {
        write!(row, ",{m}").unwrap();
    }
    write!(row, ",{},{},{},{}", opt(rec.y(3.0)), opt(rec.mu(0.5)), opt(rec.entropy), opt(rec.bold_h)).unwrap();
    for v in &rec.variance_per_species {
        write!(row, ",{v}").unwrap();
    }
    write!(row, ",{}", rec.collisions).unwrap();
    row
}

pub fn series_csv(series: &ObservableSeries, num_species: usize) -> String {
    let mut out = csv_header(num_species);
    out.push('\n');
    for rec in &series.records {
        out.push_str(&csv_row(rec));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelTotal {
    pub s: usize,
    pub r: usize,
    pub collisions: u64,
}

/// Everything needed to reproduce and audit one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    /// Fully resolved configuration, defaults included.
    pub config: SimConfig,
    pub config_digest: String,
    pub seed: u64,
    pub library_version: String,
    pub wall_clock_seconds: f64,
    pub channel_collisions: Vec<ChannelTotal>,
    pub candidates: u64,
    pub majorant_violations: u64,
    pub error: Option<String>,
    /// Late-window energy exponent, when the series is long enough to fit.
    pub fitted_exponent: Option<PowerLawFit>,
    pub acceptance: Vec<BoundReport>,
}

pub fn channel_totals(totals: &[u64], num_species: usize) -> Vec<ChannelTotal> {
    let mut out = Vec::new();
    for s in 0..num_species {
        for r in s..num_species {
            out.push(ChannelTotal { s, r, collisions: totals[s * num_species + r] });
        }
    }
    out
}

/// `path` if absolute, otherwise `dir/path`.
pub fn resolve(dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        dir.join(path)
    }
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, contents)
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::Vec3;

    fn rec(entropy: Option<f64>) -> ObservableRecord {
        ObservableRecord {
            time: 0.5,
            energy: 2.0,
            momentum: Vec3::new(0.0, -0.0, 1e-17),
            species_masses: vec![1.0, 1.0],
            y_s: vec![(3.0, 4.25)],
            mu_k: vec![(0.5, 0.75)],
            entropy,
            bold_h: entropy.map(f64::abs),
            variance_per_species: vec![0.1, 0.2],
            collisions: 42,
            energy_std_error: 0.0,
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            csv_header(2),
            "t,E,px,py,pz,mass_1,mass_2,Y3,mu_half,entropy,boldH,var_1,var_2,collisions"
        );
        assert_eq!(csv_header(1).split(',').count(), 12);
    }

    #[test]
    fn absent_observables_leave_empty_fields() {
        let row = csv_row(&rec(None));
        assert_eq!(row, "0.5,2,0,-0,0.00000000000000001,1,1,4.25,0.75,,,0.1,0.2,42");
        assert_eq!(row.split(',').count(), csv_header(2).split(',').count());
        let full = csv_row(&rec(Some(-1.5)));
        assert!(full.contains(",-1.5,1.5,"));
    }

    #[test]
    fn channel_listing_is_upper_triangle() {
        let t = channel_totals(&[1, 2, 0, 3], 2);
        assert_eq!(t.len(), 3);
        assert_eq!(t[1], ChannelTotal { s: 0, r: 1, collisions: 2 });
        assert_eq!(t[2].collisions, 3);
    }
}
