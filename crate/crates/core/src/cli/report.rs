use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::format::REPORT_SCHEMA;
use crate::chanfactory::{extremal_cpt_check, extremal_unital_cpt_check, ExtremalityReport, SaturationRow};
use crate::error::{Error, Result};
use crate::manifold::OptimizerConfig;
use crate::qstate::{Classification, KrausChannel};
use crate::rudistance::{Assistance, Certificate, DistanceConfig, DistanceReport, EoaEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extremality {
    pub cpt: ExtremalityReport,
    pub unital: ExtremalityReport,
}

impl Extremality {
    pub fn of(channel: &KrausChannel) -> Self {
        Extremality {
            cpt: extremal_cpt_check(channel),
            unital: extremal_unital_cpt_check(channel),
        }
    }
}

/// Everything needed to reproduce the numbers in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classify_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerConfig>,
}

impl ConfigEcho {
    pub fn distance(config: &DistanceConfig, classify_tol: f64) -> Self {
        ConfigEcho {
            seed: config.optimizer.seed,
            classify_tol: Some(classify_tol),
            distance: Some(config.clone()),
            optimizer: None,
        }
    }

    pub fn optimizer_only(config: &OptimizerConfig) -> Self {
        ConfigEcho {
            seed: config.seed,
            classify_tol: None,
            distance: None,
            optimizer: Some(config.clone()),
        }
    }

    pub fn seed_only(seed: u64) -> Self {
        ConfigEcho {
            seed,
            classify_tol: None,
            distance: None,
            optimizer: None,
        }
    }
}

/// The JSON document emitted by every reporting subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub schema: String,
    pub command: String,
    pub input_sha256: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extremality: Option<Extremality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assistance: Option<Assistance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eoa: Option<EoaEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation: Option<Vec<SaturationRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigEcho>,
}

/// Round to nine significant digits for display.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-4..1e9).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

impl Report {
    pub fn new(command: &str, input_sha256: String, dim: usize) -> Self {
        Report {
            schema: REPORT_SCHEMA.into(),
            command: command.into(),
            input_sha256,
            dim,
            classification: None,
            distance: None,
            extremality: None,
            assistance: None,
            eoa: None,
            saturation: None,
            config: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    /// Parse and validate a JSON report against this schema version.
    pub fn parse(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("report does not match schema: {e}")))?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::InvalidArgument(format!("unexpected schema {:?}", report.schema)));
        }
        Ok(report)
    }

    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| rows.push((k.to_string(), v));
        push("command", self.command.clone());
        if !self.input_sha256.is_empty() {
            push("input sha256", self.input_sha256.clone());
        }
        push("dimension", self.dim.to_string());
        if let Some(c) = &self.classification {
            push("positive", c.is_psd.to_string());
            push("trace preserving", c.is_tp.to_string());
            push("unital", c.is_unital.to_string());
            push("maximally mixed reductions", c.in_n.to_string());
        }
        if let Some(r) = &self.distance {
            push("verdict", r.verdict.to_string());
            push(
                "D upper bound",
                r.upper.map_or_else(|| "failed".into(), sig9),
            );
            push("D lower bound (reductions)", sig9(r.lower_reduction));
            if let Some(x) = r.d2_to_m_upper {
                push("2-norm distance bound", sig9(x));
            }
            push("rank", r.rank.to_string());
            push("cardinality K", r.cardinality.to_string());
            push("restarts", r.restarts.to_string());
            push("iterations (best restart)", r.iterations.to_string());
            for step in &r.escalation {
                push(&format!("escalation K={}", step.cardinality), sig9(step.value));
            }
            match &r.certificate {
                Certificate::Ensemble { members } => {
                    let live = members.iter().filter(|m| !m.null).count();
                    push("certificate", format!("ensemble of {live} states"));
                }
                Certificate::ReductionViolation { norm } => {
                    push("certificate", format!("reduction violation {}", sig9(*norm)));
                }
                Certificate::None => {}
            }
            if let Some(msg) = &r.diagnostics {
                push("diagnostics", msg.clone());
            }
        }
        if let Some(e) = &self.extremality {
            for (name, x) in [("CPT", &e.cpt), ("unital CPT", &e.unital)] {
                push(
                    &format!("extremal among {name}"),
                    format!(
                        "{} (rank {}/{}, {} Kraus)",
                        x.independent, x.rank_found, x.rank_needed, x.kraus_count
                    ),
                );
            }
        }
        if let Some(a) = &self.assistance {
            push("concurrence of assistance", sig9(a.value));
            push("  unconjugated form", sig9(a.unconjugated));
        }
        if let Some(e) = &self.eoa {
            push("entanglement of assistance >=", sig9(e.value));
            push("  maximum log2 d", sig9(e.max_possible));
        }
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &rows {
            let _ = writeln!(s, "{k:<width$}  {v}");
        }
        if let Some(table) = &self.saturation {
            let _ = writeln!(s, "{:>3} {:>7} {:>4} {:>7} {:>12} {:>7} {:>9}", "d", "branch", "R", "trials", "independent", "failed", "fraction");
            for r in table {
                let branch = match r.branch {
                    crate::chanfactory::Branch::Cpt => "cpt",
                    crate::chanfactory::Branch::Unital => "unital",
                };
                let _ = writeln!(
                    s,
                    "{:>3} {:>7} {:>4} {:>7} {:>12} {:>7} {:>9}",
                    r.d,
                    branch,
                    r.rank,
                    r.trials,
                    r.independent,
                    r.failed,
                    sig9(r.fraction)
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(1.1547005383792515), "1.15470054");
        assert_eq!(sig9(2.5e-12), "2.5e-12");
        assert_eq!(sig9(0.0), "0");
    }

    #[test]
    fn report_round_trip() {
        let r = Report::new("extremal", "00".into(), 3);
        let back = Report::parse(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(Report::parse(r#"{"schema":"ruchan.report.v1"}"#).is_err());
    }
}
