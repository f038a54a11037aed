//! Report assembly: one JSON document plus fixed-layout CSV tables.
//! Byte-identical for identical config and seed, except the
//! `generated_at_unix` field.

use crate::config::{ResolvedConfig, RunMode};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io;
use std::path::Path;
use tracebound::bounds::BoundReport;
use tracebound::mcsim::{BoundVerdict, CrossingEstimate};

pub const SCHEMA_VERSION: u32 = 1;

/// One suite's outcome; `detail` holds suite-specific structured data
/// whose rows each carry their tag.
#[derive(Debug, Serialize)]
pub struct Section {
    pub name: String,
    pub tags: Vec<String>,
    pub pass: bool,
    pub detail: serde_json::Value,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    /// Excluded from determinism comparisons.
    pub generated_at_unix: u64,
    pub mode: RunMode,
    pub seed: u64,
    pub config: ResolvedConfig,
    pub sections: Vec<Section>,
    pub violations: Vec<String>,
    pub numerical_failures: Vec<String>,
    pub exit_code: i32,
}

/// Row of bounds.csv; optional fields stay empty when no sequence was
/// compared.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub tag: &'static str,
    pub mode: &'static str,
    pub t0: f64,
    pub constant: f64,
    pub minimal_index: Option<u64>,
    pub m: u32,
    pub rhs: f64,
    pub lhs: Option<f64>,
    pub margin: Option<f64>,
    pub log_rhs: f64,
}

/// Rows of mc.csv.
#[derive(Debug, Clone)]
pub struct McRow {
    pub tag: &'static str,
    pub seed: u64,
    pub n_paths: u64,
    pub horizon: usize,
    pub a: f64,
    pub b: f64,
    pub m: u32,
    pub i: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rhs: f64,
    pub verdict: BoundVerdict,
}

/// Rows of exact.csv.
#[derive(Debug, Clone)]
pub struct ExactRow {
    pub tag: &'static str,
    pub a: f64,
    pub b: f64,
    pub m: u32,
    pub i: u64,
    pub horizon: usize,
    pub exact_p: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Default)]
pub struct Tables {
    pub bounds: Vec<BoundRow>,
    pub mc: Vec<McRow>,
    pub exact: Vec<ExactRow>,
}

impl Tables {
    /// Expands a report into one bounds.csv row per epoch m.
    pub fn push_bound_report(&mut self, report: &BoundReport) {
        for (&m, &rhs) in report.rhs_by_m() {
            self.bounds.push(BoundRow {
                tag: report.tag(),
                mode: report.mode().as_str(),
                t0: report.t0(),
                constant: report.constant(),
                minimal_index: report.minimal_index(),
                m,
                rhs,
                lhs: report.lhs_by_m().map(|l| l[&m]),
                margin: report.margins().map(|g| g[&m]),
                log_rhs: report.log_rhs_by_m()[&m],
            });
        }
    }

    pub fn push_mc(
        &mut self,
        tag: &'static str,
        est: &CrossingEstimate,
        a: f64,
        b: f64,
        m: u32,
        i: u64,
        rhs: f64,
        verdict: BoundVerdict,
    ) {
        self.mc.push(McRow {
            tag,
            seed: est.seed,
            n_paths: est.n_paths,
            horizon: est.horizon,
            a,
            b,
            m,
            i,
            p_hat: est.p_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            rhs,
            verdict,
        });
    }
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn bounds_csv(rows: &[BoundRow]) -> String {
    let mut s = String::from("tag,mode,t0,constant,minimal_index,m,rhs,lhs,margin,log_rhs\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.tag,
            r.mode,
            r.t0,
            r.constant,
            opt(&r.minimal_index),
            r.m,
            r.rhs,
            opt(&r.lhs),
            opt(&r.margin),
            r.log_rhs,
        ));
    }
    s
}

fn mc_csv(rows: &[McRow]) -> String {
    let mut s =
        String::from("tag,seed,n_paths,horizon,a,b,m,i,p_hat,ci_low,ci_high,rhs,verdict\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.tag,
            r.seed,
            r.n_paths,
            r.horizon,
            r.a,
            r.b,
            r.m,
            r.i,
            r.p_hat,
            r.ci_low,
            r.ci_high,
            r.rhs,
            r.verdict.as_str(),
        ));
    }
    s
}

fn exact_csv(rows: &[ExactRow]) -> String {
    let mut s = String::from("tag,a,b,m,i,horizon,exact_p,rhs,margin\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.tag, r.a, r.b, r.m, r.i, r.horizon, r.exact_p, r.rhs, r.margin,
        ));
    }
    s
}

/// Writes report.json, bounds.csv, mc.csv, and exact.csv into `dir`.
pub fn write_all(dir: &Path, report: &Report, tables: &Tables) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(dir.join("report.json"), json + "\n")?;
    std::fs::write(dir.join("bounds.csv"), bounds_csv(&tables.bounds))?;
    std::fs::write(dir.join("mc.csv"), mc_csv(&tables.mc))?;
    std::fs::write(dir.join("exact.csv"), exact_csv(&tables.exact))?;
    Ok(())
}

/// Summary map used in JSON detail blocks: tag -> list of per-m rows.
pub fn report_detail(reports: &[&BoundReport]) -> serde_json::Value {
    let mut by_tag = BTreeMap::new();
    for r in reports {
        by_tag.insert(r.tag().to_string(), serde_json::to_value(r).unwrap());
    }
    serde_json::to_value(by_tag).unwrap()
}
