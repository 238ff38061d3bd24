//! CSV formats.
//!
//! * resistance/frequency samples: `resistance_ohm,frequency_ghz`
//! * sweeps: `family,distance,sigma_f_mhz,spacing_mhz,trials,mean_collisions,yield`
//!   followed by `type1_mean` … `type7_mean`

use std::io::{Read, Write};

use crate::collision::COLLISION_TYPES;
use crate::error::{Error, Result};
use crate::lattice::LatticeFamily;
use crate::mc::SweepResult;
use crate::scalar::Real;

pub const RESISTANCE_HEADER: [&str; 2] = ["resistance_ohm", "frequency_ghz"];

pub const SWEEP_HEADER: [&str; 14] = [
    "family",
    "distance",
    "sigma_f_mhz",
    "spacing_mhz",
    "trials",
    "mean_collisions",
    "yield",
    "type1_mean",
    "type2_mean",
    "type3_mean",
    "type4_mean",
    "type5_mean",
    "type6_mean",
    "type7_mean",
];

fn row_err(label: &str, row: usize, message: impl Into<String>) -> Error {
    Error::Row {
        path: label.to_string(),
        row,
        message: message.into(),
    }
}

fn check_header(label: &str, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().map(str::trim).collect();
    if got != expected {
        return Err(row_err(
            label,
            1,
            format!("expected header '{}', found '{}'", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn field<V: std::str::FromStr>(label: &str, row: usize, rec: &csv::StringRecord, i: usize, name: &str) -> Result<V> {
    let raw = rec.get(i).ok_or_else(|| row_err(label, row, format!("missing column '{name}'")))?;
    raw.trim()
        .parse()
        .map_err(|_| row_err(label, row, format!("column '{name}': cannot parse '{raw}'")))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

/// Reads `(resistance Ω, frequency GHz)` pairs. `label` names the source in
/// diagnostics; row numbers count the header as row 1.
pub fn read_resistance_csv<R: Read>(r: R, label: &str) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(r);
    check_header(label, rdr.headers()?, &RESISTANCE_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| row_err(label, row, e.to_string()))?;
        let r: f64 = field(label, row, &rec, 0, "resistance_ohm")?;
        let f: f64 = field(label, row, &rec, 1, "frequency_ghz")?;
        if !(r > 0.0 && r.is_finite() && f > 0.0 && f.is_finite()) {
            return Err(row_err(label, row, "values must be positive and finite"));
        }
        out.push((r, f));
    }
    Ok(out)
}

pub fn write_sweep_csv<T: Real, W: Write>(results: &[SweepResult<T>], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SWEEP_HEADER)?;
    for r in results {
        let mut rec = vec![
            r.family.to_string(),
            r.distance.to_string(),
            r.sigma_f_mhz.to_string(),
            r.spacing_mhz.to_string(),
            r.trials.to_string(),
            r.mean_collisions.to_string(),
            r.yield_fraction.to_string(),
        ];
        for ty in 1..=COLLISION_TYPES as u8 {
            rec.push(r.per_type_means.get(&ty).copied().unwrap_or_else(T::zero).to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(r: R, label: &str) -> Result<Vec<SweepResult<f64>>> {
    let mut rdr = reader(r);
    check_header(label, rdr.headers()?, &SWEEP_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| row_err(label, row, e.to_string()))?;
        let family: LatticeFamily = rec
            .get(0)
            .unwrap_or_default()
            .parse()
            .map_err(|e: Error| row_err(label, row, e.to_string()))?;
        let trials: usize = field(label, row, &rec, 4, "trials")?;
        let yield_fraction: f64 = field(label, row, &rec, 6, "yield")?;
        if trials == 0 || !(0.0..=1.0).contains(&yield_fraction) {
            return Err(row_err(label, row, "trials must be positive and yield within [0, 1]"));
        }
        let mut per_type_means = std::collections::BTreeMap::new();
        for ty in 1..=COLLISION_TYPES {
            per_type_means.insert(ty as u8, field(label, row, &rec, 6 + ty, SWEEP_HEADER[6 + ty])?);
        }
        out.push(SweepResult {
            family,
            distance: field(label, row, &rec, 1, "distance")?,
            sigma_f_mhz: field(label, row, &rec, 2, "sigma_f_mhz")?,
            spacing_mhz: field(label, row, &rec, 3, "spacing_mhz")?,
            trials,
            collision_free_trials: (yield_fraction * trials as f64).round() as usize,
            mean_collisions: field(label, row, &rec, 5, "mean_collisions")?,
            yield_fraction,
            per_type_means,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_lattice;
    use crate::mc::{sweep_sigma, SweepConfig, TrialsPolicy};

    #[test]
    fn resistance_round_trip() {
        let text = "resistance_ohm,frequency_ghz\n7984,5.7046\n 8798 , 5.43\n";
        let pts = read_resistance_csv(text.as_bytes(), "in.csv").unwrap();
        assert_eq!(pts, vec![(7984.0, 5.7046), (8798.0, 5.43)]);
    }

    #[test]
    fn resistance_diagnostics() {
        let err = read_resistance_csv("resistance_ohm,frequency_ghz\n7984,5.7\nabc,5.4\n".as_bytes(), "m.csv")
            .unwrap_err()
            .to_string();
        assert!(err.contains("m.csv") && err.contains("row 3"), "{err}");
        let err = read_resistance_csv("r,f\n1,2\n".as_bytes(), "m.csv").unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
        assert!(read_resistance_csv("resistance_ohm,frequency_ghz\n-5,1\n".as_bytes(), "m").is_err());
    }

    #[test]
    fn sweep_round_trip() {
        let l = build_lattice(LatticeFamily::HeavyHexagon, 3).unwrap();
        let mut cfg = SweepConfig::<f64>::new(1);
        cfg.trials = TrialsPolicy::fixed(200);
        cfg.spacing_grid_mhz = vec![60.0, 65.0];
        let results = sweep_sigma(&l, &[0.0, 10.0, 20.0], &cfg).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&results, &mut buf).unwrap();
        let back = read_sweep_csv(buf.as_slice(), "s.csv").unwrap();
        assert_eq!(back, results);
    }
}
