//! Diagnostics time series and its CSV form.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub kinetic_energy: f64,
    /// Kinetic term with `|v|` instead of `sqrt(1 + |v|^2)`; kept for
    /// comparison, not part of the CSV.
    pub kinetic_energy_abs: f64,
    pub field_energy: f64,
    pub total_energy: f64,
    /// One value per configured order, same order as the series.
    pub moments: Vec<f64>,
    pub a_cum: f64,
    /// Running space-time functional for each extra axis regularization.
    pub a_cum_extra: Vec<f64>,
    pub j: f64,
    pub max_speed: f64,
    pub min_planar_radius: f64,
    pub beta: f64,
    pub mt: i32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSeries {
    pub moment_orders: Vec<f64>,
    pub records: Vec<DiagnosticsRecord>,
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

impl DiagnosticsSeries {
    pub fn new(moment_orders: Vec<f64>) -> Self {
        DiagnosticsSeries { moment_orders, records: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn header(&self) -> Vec<String> {
        let mut cols: Vec<String> =
            ["t", "mass", "kinetic_energy", "field_energy", "total_energy"].iter().map(|s| s.to_string()).collect();
        for n in &self.moment_orders {
            cols.push(format!("moment_{n}"));
        }
        for c in ["A_cum", "J", "max_speed", "min_planar_radius", "beta"] {
            cols.push(c.to_string());
        }
        cols
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.records {
            let mut fields = vec![r.t, r.mass, r.kinetic_energy, r.field_energy, r.total_energy];
            fields.extend(&r.moments);
            fields.extend([r.a_cum, r.j, r.max_speed, r.min_planar_radius, r.beta]);
            let line: Vec<String> = fields.into_iter().map(fmt_float).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}
