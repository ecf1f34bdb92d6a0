use std::collections::BTreeMap;
use std::fmt::Write as _;

use ipsinv::criteria::{CriterionReport, PotentialCertificate};
use ipsinv::scalar::format_rational;
use ipsinv::Scalar;
use serde::Serialize;

pub fn fmt_scalar<S: Scalar>(v: &S) -> String {
    if S::EXACT {
        format_rational(&v.to_rational())
    } else {
        format!("{:e}", v.to_f64())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessOut {
    pub criterion: String,
    pub word: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub letter: Option<usize>,
    pub residual: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateEntry {
    pub word: Vec<usize>,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub label: String,
    pub value: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub verdict: String,
    pub criterion: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub words_enumerated: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessOut>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Vec<CertificateEntry>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub residuals: Vec<Residual>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
    /// Seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(command: &str, verdict: impl Into<String>, criterion: impl Into<String>) -> Self {
        Report {
            command: command.into(),
            verdict: verdict.into(),
            criterion: criterion.into(),
            words_enumerated: None,
            witness: None,
            certificate: None,
            residuals: vec![],
            notes: vec![],
            details: serde_json::Value::Null,
            timings: BTreeMap::new(),
        }
    }

    pub fn from_criterion<S: Scalar>(command: &str, r: &CriterionReport<S>) -> Self {
        let mut out = Report::new(command, r.verdict.to_string(), r.criterion.clone());
        out.words_enumerated = Some(r.words_enumerated);
        out.witness = r.witness.as_ref().map(|w| WitnessOut {
            criterion: w.criterion.clone(),
            word: w.word.clone(),
            letter: w.letter,
            residual: fmt_scalar(&w.residual),
        });
        out.certificate = r.certificate.as_ref().map(certificate);
        if r.criteria_evaluated.len() > 1 {
            out.notes.push(format!("criteria evaluated: {}", r.criteria_evaluated.join(", ")));
        }
        out
    }

    pub fn residual(&mut self, label: impl Into<String>, value: String) {
        self.residuals.push(Residual { label: label.into(), value });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}: {} ({})", self.command, self.verdict, self.criterion);
        if let Some(n) = self.words_enumerated {
            let _ = writeln!(s, "  words enumerated: {n}");
        }
        if let Some(w) = &self.witness {
            let letter = w.letter.map(|l| format!(", letter {l}")).unwrap_or_default();
            let _ = writeln!(s, "  witness: {} at {:?}{letter}, residual {}", w.criterion, w.word, w.residual);
        }
        if let Some(c) = &self.certificate {
            let _ = writeln!(s, "  certificate W ({} words):", c.len());
            for e in c {
                let _ = writeln!(s, "    W{:?} = {}", e.word, e.value);
            }
        }
        for r in &self.residuals {
            let _ = writeln!(s, "  residual {}: {}", r.label, r.value);
        }
        for n in &self.notes {
            let _ = writeln!(s, "  {n}");
        }
        if !self.details.is_null() {
            let _ = writeln!(s, "  details: {}", self.details);
        }
        let t: Vec<String> = self.timings.iter().map(|(k, v)| format!("{k} {v:.3}s")).collect();
        let _ = writeln!(s, "  timings: {}", t.join(", "));
        s
    }
}

fn certificate<S: Scalar>(c: &PotentialCertificate<S>) -> Vec<CertificateEntry> {
    c.iter().map(|(word, v)| CertificateEntry { word, value: fmt_scalar(v) }).collect()
}
