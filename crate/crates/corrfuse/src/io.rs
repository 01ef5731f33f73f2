//! File formats: observation and label CSVs, quality-profile JSON, outcome
//! JSON lines, and the synthetic-params sidecar.
//!
//! All files are UTF-8. Observation rows are `triple_id,source_id`, one
//! provision per row; duplicate rows are deduplicated and counted so the
//! caller can warn. Outcome records serialize `mu` as a number, `"inf"`, or
//! `"nan-undefined"`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimate::{LabeledSet, QualityProfile};
use crate::model::{classify, FusionOutcome, LikelihoodRatio, ObservationMatrix, TruthLabel};
use crate::synth::SynthParams;

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Reads an observation CSV; returns the matrix and the number of duplicate
/// provision rows that were dropped.
pub fn read_observations(path: &Path) -> Result<(ObservationMatrix, usize)> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| parse_error(path, 1, e.to_string()))?;
    expect_headers(&mut reader, path, &["triple_id", "source_id"])?;
    let mut builder = ObservationMatrix::builder();
    for record in reader.records() {
        let record = record
            .map_err(|e| parse_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let triple = field(&record, 0, path, line)?;
        let source = field(&record, 1, path, line)?;
        builder.provide(triple, source);
    }
    let duplicates = builder.duplicates();
    Ok((builder.build()?, duplicates))
}

/// Reads a label CSV as raw (triple id, truth) pairs.
pub fn read_label_pairs(path: &Path) -> Result<Vec<(String, bool)>> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| parse_error(path, 1, e.to_string()))?;
    expect_headers(&mut reader, path, &["triple_id", "truth"])?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| parse_error(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let triple = field(&record, 0, path, line)?.to_string();
        let truth = match field(&record, 1, path, line)? {
            t if t.eq_ignore_ascii_case("true") => true,
            t if t.eq_ignore_ascii_case("false") => false,
            other => {
                return Err(parse_error(
                    path,
                    line,
                    format!("truth must be `true` or `false`, got `{other}`"),
                ))
            }
        };
        pairs.push((triple, truth));
    }
    Ok(pairs)
}

/// Reads labels and binds them to the matrix's triples.
pub fn read_labels(obs: &ObservationMatrix, path: &Path) -> Result<LabeledSet> {
    let pairs = read_label_pairs(path)?;
    LabeledSet::from_named(obs, pairs.iter().map(|(t, v)| (t.as_str(), *v)))
}

fn expect_headers(reader: &mut csv::Reader<File>, path: &Path, expected: &[&str]) -> Result<()> {
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(parse_error(
            path,
            1,
            format!(
                "expected header `{}`, got `{}`",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

fn field<'a>(
    record: &'a csv::StringRecord,
    index: usize,
    path: &Path,
    line: u64,
) -> Result<&'a str> {
    let value = record
        .get(index)
        .ok_or_else(|| parse_error(path, line, format!("missing column {}", index + 1)))?
        .trim();
    if value.is_empty() {
        return Err(parse_error(
            path,
            line,
            format!("empty column {}", index + 1),
        ));
    }
    Ok(value)
}

pub fn write_observations(path: &Path, obs: &ObservationMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "triple_id,source_id")?;
    for t in obs.triples() {
        for i in obs.providers(t).iter() {
            writeln!(
                w,
                "{},{}",
                obs.triple_name(t),
                obs.source_name(crate::model::SourceId(i as u32))
            )?;
        }
    }
    Ok(())
}

pub fn write_labels(path: &Path, obs: &ObservationMatrix, labels: &LabeledSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "triple_id,truth")?;
    for (t, truth) in labels.labeled() {
        writeln!(w, "{},{}", obs.triple_name(t), truth)?;
    }
    Ok(())
}

/// One fused triple as a JSON-lines record.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OutcomeRecord {
    pub triple: String,
    pub engine: String,
    pub mu: MuField,
    pub probability: Option<f64>,
    pub label: TruthLabel,
}

/// Likelihood ratio in its wire form: a number, `"inf"`, or
/// `"nan-undefined"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuField(pub LikelihoodRatio);

impl Serialize for MuField {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            LikelihoodRatio::Finite(x) => serializer.serialize_f64(x),
            LikelihoodRatio::PositiveInfinity => serializer.serialize_str("inf"),
            LikelihoodRatio::Undefined => serializer.serialize_str("nan-undefined"),
        }
    }
}

impl<'de> Deserialize<'de> for MuField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(x) => Ok(MuField(LikelihoodRatio::Finite(x))),
            Raw::Text(s) if s == "inf" => Ok(MuField(LikelihoodRatio::PositiveInfinity)),
            Raw::Text(s) if s == "nan-undefined" => Ok(MuField(LikelihoodRatio::Undefined)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "mu must be a number, \"inf\", or \"nan-undefined\", got `{s}`"
            ))),
        }
    }
}

pub fn outcome_record(
    obs: &ObservationMatrix,
    outcome: &FusionOutcome,
    engine: &str,
    threshold: f64,
) -> OutcomeRecord {
    OutcomeRecord {
        triple: obs.triple_name(outcome.triple).to_string(),
        engine: engine.to_string(),
        mu: MuField(outcome.mu),
        probability: outcome.probability,
        label: classify(outcome.probability, threshold),
    }
}

pub fn write_outcomes(
    path: &Path,
    obs: &ObservationMatrix,
    outcomes: &[FusionOutcome],
    engine: &str,
    threshold: f64,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for o in outcomes {
        let record = outcome_record(obs, o, engine, threshold);
        serde_json::to_writer(&mut w, &record)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_outcome_records(path: &Path) -> Result<Vec<OutcomeRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: OutcomeRecord = serde_json::from_str(&line)
            .map_err(|e| parse_error(path, i as u64 + 1, e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_profile(path: &Path, profile: &QualityProfile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, profile)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_profile(path: &Path) -> Result<QualityProfile> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Sidecar written next to a generated dataset: the full parameters plus the
/// golden-set truth counts.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SynthSidecar {
    pub params: SynthParams,
    pub golden_true: u64,
    pub golden_false: u64,
}

pub fn write_sidecar(path: &Path, sidecar: &SynthSidecar) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, sidecar)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_sidecar(path: &Path) -> Result<SynthSidecar> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
