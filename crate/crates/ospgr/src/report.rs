//! Analysis reports and their plot-ready CSV tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA: &str = "ospgr-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisReport {
    pub schema: String,
    pub metadata: ReportMetadata,
    /// One series per source of choices, e.g. `observed` and `rdm_r`.
    pub chosen_rate: Vec<RateSeries>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub priority_breakdown: Vec<LabelRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<LabelRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taus: Vec<TauRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outcomes: Vec<OutcomeRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportMetadata {
    /// Subcommand that produced the report.
    pub source: String,
    pub n: usize,
    pub agent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_bound: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows_per_player: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sessions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub virtual_groups: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSeries {
    pub name: String,
    pub count_basis: u64,
    /// `rates[j]` for the popularity-rank-`(j+1)` object.
    pub rates: Vec<f64>,
}

/// Label shares for one priority level (`priority = None` means all records).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRow {
    pub priority: Option<usize>,
    pub count: usize,
    pub rdm_r: Option<f64>,
    pub risk: Option<f64>,
    pub safe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauRow {
    pub session: String,
    pub player: String,
    pub tau: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRow {
    pub session: String,
    pub round: usize,
    pub player: String,
    pub priority: usize,
    pub choice: String,
    pub obtained: Option<String>,
    pub rdm_r_choice: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Table {
    ChosenRate,
    Priority,
    Tau,
    Outcomes,
}

/// `%g`-style rendering with 6 significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        let s = format!("{x:.5e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{}", trim_zeros(mantissa), e);
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_else(|| "NA".into())
}

impl AnalysisReport {
    pub fn new(metadata: ReportMetadata) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            metadata,
            chosen_rate: Vec::new(),
            priority_breakdown: Vec::new(),
            classification: None,
            taus: Vec::new(),
            outcomes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != REPORT_SCHEMA {
            return Err(Error::Schema {
                path: "schema".into(),
                message: format!("expected {REPORT_SCHEMA:?}"),
            });
        }
        for (k, s) in self.chosen_rate.iter().enumerate() {
            let sum: f64 = s.rates.iter().sum();
            if s.rates.len() != self.metadata.n || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invariant(
                    format!("chosen_rate[{k}]"),
                    "rates must cover n objects and sum to 1",
                ));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self =
            serde_path_to_error::deserialize(&mut serde_json::Deserializer::from_str(text)).map_err(|e| {
                Error::Schema {
                    path: e.path().to_string(),
                    message: e.inner().to_string(),
                }
            })?;
        report.validate()?;
        Ok(report)
    }

    pub fn render(&self, table: Table) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        match table {
            Table::ChosenRate => {
                let mut header = vec!["object".to_string()];
                header.extend(self.chosen_rate.iter().map(|s| s.name.clone()));
                w.write_record(&header)?;
                for j in 0..self.metadata.n {
                    let mut row = vec![(j + 1).to_string()];
                    row.extend(self.chosen_rate.iter().map(|s| sig6(s.rates[j])));
                    w.write_record(&row)?;
                }
            }
            Table::Priority => {
                w.write_record(["priority", "rdm_r", "risk", "safe", "count"])?;
                for row in self.priority_breakdown.iter().chain(&self.classification) {
                    w.write_record([
                        row.priority.map_or_else(|| "all".into(), |p| p.to_string()),
                        cell(row.rdm_r),
                        cell(row.risk),
                        cell(row.safe),
                        row.count.to_string(),
                    ])?;
                }
            }
            Table::Tau => {
                w.write_record(["session", "player", "tau"])?;
                for row in &self.taus {
                    w.write_record([row.session.as_str(), row.player.as_str(), &row.tau.to_string()])?;
                }
            }
            Table::Outcomes => {
                w.write_record([
                    "session",
                    "round",
                    "player",
                    "priority",
                    "choice",
                    "obtained",
                    "rdm_r_choice",
                    "label",
                ])?;
                for row in &self.outcomes {
                    w.write_record([
                        row.session.as_str(),
                        &row.round.to_string(),
                        row.player.as_str(),
                        &row.priority.to_string(),
                        row.choice.as_str(),
                        row.obtained.as_deref().unwrap_or("Nothing"),
                        row.rdm_r_choice.as_str(),
                        row.label.as_str(),
                    ])?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.2), "0.2");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
        assert_eq!(sig6(0.128_571_428_5), "0.128571");
        assert_eq!(sig6(123_456.7), "123457");
        assert_eq!(sig6(1_234_567.0), "1.23457e6");
        assert_eq!(sig6(0.000_012_345_67), "1.23457e-5");
        assert_eq!(sig6(0.000_123_456_7), "0.000123457");
    }

    fn meta() -> ReportMetadata {
        ReportMetadata {
            source: "test".into(),
            n: 5,
            agent: "rdm_r".into(),
            tau_bound: None,
            profiles: None,
            rows_per_player: None,
            sessions: vec![],
            virtual_groups: None,
        }
    }

    #[test]
    fn uniform_table() {
        let mut r = AnalysisReport::new(meta());
        r.chosen_rate.push(RateSeries {
            name: "rdm_r".into(),
            count_basis: 5,
            rates: vec![0.2; 5],
        });
        assert_eq!(
            r.render(Table::ChosenRate).unwrap(),
            "object,rdm_r\n1,0.2\n2,0.2\n3,0.2\n4,0.2\n5,0.2\n"
        );
    }

    #[test]
    fn empty_bucket_is_na() {
        let mut r = AnalysisReport::new(meta());
        r.priority_breakdown.push(LabelRow {
            priority: Some(1),
            count: 0,
            rdm_r: None,
            risk: None,
            safe: None,
        });
        r.classification = Some(LabelRow {
            priority: None,
            count: 4,
            rdm_r: Some(0.25),
            risk: Some(0.5),
            safe: Some(0.25),
        });
        assert_eq!(
            r.render(Table::Priority).unwrap(),
            "priority,rdm_r,risk,safe,count\n1,NA,NA,NA,0\nall,0.25,0.5,0.25,4\n"
        );
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let mut r = AnalysisReport::new(meta());
        r.chosen_rate.push(RateSeries {
            name: "x".into(),
            count_basis: 3,
            rates: vec![0.1, 0.2, 0.3, 0.2, 0.2],
        });
        assert_eq!(AnalysisReport::from_json(&r.to_json()).unwrap(), r);
        r.chosen_rate[0].rates[0] = 0.5;
        assert!(AnalysisReport::from_json(&r.to_json()).is_err());
    }
}
