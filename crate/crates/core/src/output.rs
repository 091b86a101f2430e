//! CSV emission. Every file starts with a `# config_hash=<hex> seed=<n>`
//! comment line followed by a header row. Numbers use the shortest
//! representation that round-trips, so output is byte-stable.

use std::io::{self, Write};

use crate::analysis::{BodePoint, MarginPoint};
use crate::nodes::ScenarioResult;
use crate::spectral::PsdEstimate;

pub const TIMESERIES_COLUMNS: [&str; 9] = [
    "tick",
    "t_s",
    "theta_bf_minus_theta0_rad",
    "theta_out_rad",
    "alpha_rad",
    "r1_rad",
    "r2_rad",
    "r3_rad",
    "r4_rad",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvMeta {
    pub config_hash: String,
    pub seed: u64,
}

impl CsvMeta {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            config_hash: config_hash.into(),
            seed,
        }
    }

    fn write_preamble<W: Write + ?Sized>(&self, w: &mut W, header: &[&str]) -> io::Result<()> {
        writeln!(w, "# config_hash={} seed={}", self.config_hash, self.seed)?;
        writeln!(w, "{}", header.join(","))
    }
}

/// Writes equal-length columns under `header`.
pub fn write_columns<W: Write + ?Sized>(
    w: &mut W,
    meta: &CsvMeta,
    header: &[&str],
    columns: &[&[f64]],
) -> io::Result<()> {
    assert_eq!(header.len(), columns.len(), "one header per column");
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(columns.iter().all(|c| c.len() == rows), "columns must be equal length");
    meta.write_preamble(w, header)?;
    let mut line = String::new();
    for i in 0..rows {
        line.clear();
        for (j, c) in columns.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&c[i].to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Rows led by a text label, e.g. one row per node.
pub fn write_labeled_rows<W: Write + ?Sized>(
    w: &mut W,
    meta: &CsvMeta,
    header: &[&str],
    rows: &[(String, Vec<f64>)],
) -> io::Result<()> {
    meta.write_preamble(w, header)?;
    for (label, values) in rows {
        assert_eq!(values.len() + 1, header.len(), "row width must match header");
        let mut line = label.clone();
        for v in values {
            line.push(',');
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// One row per `stride` ticks, starting at tick 0.
pub fn write_timeseries<W: Write + ?Sized>(
    w: &mut W,
    meta: &CsvMeta,
    res: &ScenarioResult,
    stride: usize,
) -> io::Result<()> {
    meta.write_preamble(w, &TIMESERIES_COLUMNS)?;
    let mut line = String::new();
    for i in (0..res.len()).step_by(stride.max(1)) {
        line.clear();
        line.push_str(&i.to_string());
        for v in [
            i as f64 / res.tick_rate_hz,
            res.theta_bf_minus_theta0[i],
            res.theta_out[i],
            res.alpha[i],
            res.r[0][i],
            res.r[1][i],
            res.r[2][i],
            res.r[3][i],
        ] {
            line.push(',');
            line.push_str(&v.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// `freq_hz` followed by one dBc/Hz column per named estimate. All
/// estimates must share a frequency grid.
pub fn write_psd<W: Write + ?Sized>(w: &mut W, meta: &CsvMeta, estimates: &[(&str, &PsdEstimate)]) -> io::Result<()> {
    let Some((_, first)) = estimates.first() else {
        return meta.write_preamble(w, &["freq_hz"]);
    };
    let names: Vec<String> = estimates.iter().map(|(n, _)| format!("{n}_dbc_hz")).collect();
    let mut header = vec!["freq_hz"];
    header.extend(names.iter().map(String::as_str));
    // Skip the DC bin: it carries no offset-frequency information.
    let mut columns: Vec<&[f64]> = vec![&first.freqs_hz[1..]];
    columns.extend(estimates.iter().map(|(_, e)| &e.levels_dbc_hz[1..]));
    write_columns(w, meta, &header, &columns)
}

/// `freq_hz` then `<name>_mag_db,<name>_phase_deg` per response.
pub fn write_bode<W: Write + ?Sized>(w: &mut W, meta: &CsvMeta, responses: &[(&str, Vec<BodePoint>)]) -> io::Result<()> {
    let mut header = vec!["freq_hz".to_string()];
    for (name, _) in responses {
        header.push(format!("{name}_mag_db"));
        header.push(format!("{name}_phase_deg"));
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let freqs: Vec<f64> = responses
        .first()
        .map(|(_, pts)| pts.iter().map(|p| p.freq_hz).collect())
        .unwrap_or_default();
    let mut owned: Vec<Vec<f64>> = vec![freqs];
    for (_, pts) in responses {
        owned.push(pts.iter().map(|p| p.magnitude_db).collect());
        owned.push(pts.iter().map(|p| p.phase_deg).collect());
    }
    let columns: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
    write_columns(w, meta, &header, &columns)
}

/// `omega_n_hz,delay_margin_s,one_way_distance_m`; an unbounded margin is
/// written as `inf`.
pub fn write_delay_margin<W: Write + ?Sized>(w: &mut W, meta: &CsvMeta, points: &[MarginPoint]) -> io::Result<()> {
    let hz: Vec<f64> = points.iter().map(|p| p.omega_n_hz).collect();
    let secs: Vec<f64> = points.iter().map(|p| p.margin.seconds()).collect();
    let dist: Vec<f64> = points.iter().map(|p| p.margin.one_way_distance_m()).collect();
    write_columns(
        w,
        meta,
        &["omega_n_hz", "delay_margin_s", "one_way_distance_m"],
        &[&hz, &secs, &dist],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preamble_and_rows() {
        let mut buf = Vec::new();
        let meta = CsvMeta::new("abc", 7);
        write_columns(&mut buf, &meta, &["a", "b"], &[&[1.0, 2.5], &[-0.1, f64::INFINITY]]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# config_hash=abc seed=7\na,b\n1,-0.1\n2.5,inf\n"
        );
    }
}
