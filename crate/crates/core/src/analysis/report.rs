//! CSV tables and JSON-lines records for analysis results.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! results always give byte-identical text. Missing values are empty cells.

use std::fmt::Write as _;

use serde::Serialize;

use super::compare::ComparisonRow;
use super::extinction::ExtinctionStats;
use super::funnel::FunnelReport;

/// One JSON object followed by a newline.
pub fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string(value).expect("analysis records always serialize");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn extinction_csv(rows: &[ExtinctionStats]) -> String {
    let mut out = String::from("omega,n_runs,n_extinct,p_ext,mean_T,std_T,horizon\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.omega,
            r.n_runs,
            r.n_extinct,
            r.p_ext,
            opt(r.mean_t),
            opt(r.std_t),
            r.horizon
        );
    }
    out
}

/// A funnel row, or an error marker for an omega that could not be computed.
pub type FunnelRow = (f64, Result<FunnelReport, String>);

pub fn funnel_csv(rows: &[FunnelRow]) -> String {
    let mut out = String::from("omega,alpha,y0_star,rho,sigma_x,sigma_y,error\n");
    for (omega, r) in rows {
        let _ = match r {
            Ok(f) => writeln!(
                out,
                "{},{},{},{},{},{},",
                omega, f.alpha, f.y0_star, f.rho, f.sigma_x_local, f.sigma_y_local
            ),
            Err(e) => writeln!(out, "{omega},,,,,,{}", csv_field(e)),
        };
    }
    out
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "omega,t,n_runs,jump_mean_x,jump_sd_x,jump_mean_y,jump_sd_y,\
         diff_mean_x,diff_sd_x,diff_mean_y,diff_sd_y,z_x,z_y\n",
    );
    for r in rows {
        let (j, d) = (&r.jump, &r.diffusion);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.omega,
            r.t,
            r.n_runs,
            j.mean_x,
            j.sd_x,
            j.mean_y,
            j.sd_y,
            d.mean_x,
            d.sd_x,
            d.mean_y,
            d.sd_y,
            r.z_x,
            r.z_y
        );
    }
    out
}

/// Quotes a cell when it holds a separator, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
