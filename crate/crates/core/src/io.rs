//! JSON documents for kernels, actions and chains; report serialization
//! with fixed 17-significant-digit reals; CSV export of matrices.

use std::io;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::action::{self, ChainLevel, ChainSpec, FiniteAction, GeneratorDecl, GeneratorSet};
use crate::error::{LabError, Result};
use crate::markov::MarkovKernel;
use crate::space::FiniteMeasureSpace;
use crate::warped::{FiniteMetric, WarpedLevel};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(deserialize_with = "labels")]
    pub points: Vec<String>,
    pub weights: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
    #[serde(default)]
    pub reversing_measure: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub symbol: String,
    pub inverse: String,
    #[serde(default = "one")]
    pub length: u32,
    pub perm: Vec<usize>,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(deserialize_with = "labels")]
    pub points: Vec<String>,
    pub weights: Vec<f64>,
    pub generators: Vec<GeneratorEntry>,
    /// Optional base metric for warped-cone commands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDoc {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub generators: Vec<GeneratorDecl>,
    pub levels: Vec<ChainLevel>,
}

/// Point ids may be written as strings or numbers.
fn labels<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    let raw = Vec::<Value>::deserialize(d)?;
    raw.into_iter()
        .map(|v| match v {
            Value::String(s) => Ok(s),
            Value::Number(n) => Ok(n.to_string()),
            other => Err(serde::de::Error::custom(format!("point id must be a string or number, got {other}"))),
        })
        .collect()
}

/// A parsed input file.
#[derive(Debug, Clone)]
pub enum Document {
    Kernel(MarkovKernel),
    Action { action: FiniteAction, metric: Option<FiniteMetric> },
    Chain(Vec<FiniteAction>),
}

fn parse_error(e: serde_json::Error) -> LabError {
    let full = e.to_string();
    let suffix = format!(" at line {} column {}", e.line(), e.column());
    let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
    LabError::Parse { line: e.line(), column: e.column(), message }
}

fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(parse_error)
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(LabError::Parse { line: 1, column: 1, message: format!("unsupported schema_version {v}") });
    }
    Ok(())
}

fn matrix(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>> {
    if rows.len() != n {
        return Err(LabError::DimensionMismatch { expected: n, got: rows.len() });
    }
    if let Some(r) = rows.iter().find(|r| r.len() != n) {
        return Err(LabError::DimensionMismatch { expected: n, got: r.len() });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl KernelDoc {
    pub fn build(&self) -> Result<MarkovKernel> {
        check_version(self.schema_version)?;
        let space = FiniteMeasureSpace::new(self.points.clone(), self.weights.clone())?;
        let t = matrix(&self.transition, space.len())?;
        match &self.reversing_measure {
            Some(m) => MarkovKernel::new(space, t, Some(m.clone())),
            None => MarkovKernel::new(space, t, None)?.with_inferred_reversing_measure(),
        }
    }

    pub fn from_kernel(kernel: &MarkovKernel) -> Self {
        let t = kernel.transition();
        Self {
            schema_version: SCHEMA_VERSION,
            points: kernel.space().point_ids().to_vec(),
            weights: kernel.space().weights().to_vec(),
            transition: (0..t.nrows()).map(|i| t.row(i).iter().copied().collect()).collect(),
            reversing_measure: kernel.reversing_measure().map(<[f64]>::to_vec),
        }
    }
}

impl ActionDoc {
    pub fn build(&self) -> Result<(FiniteAction, Option<FiniteMetric>)> {
        check_version(self.schema_version)?;
        let space = FiniteMeasureSpace::new(self.points.clone(), self.weights.clone())?;
        let entries: Vec<(&str, &str, u32)> =
            self.generators.iter().map(|g| (g.symbol.as_str(), g.inverse.as_str(), g.length)).collect();
        let gens = GeneratorSet::from_names(&entries)?;
        let perms = self.generators.iter().map(|g| g.perm.clone()).collect();
        let action = FiniteAction::new(space, gens, perms)?;
        let metric = match &self.metric {
            None => None,
            Some(rows) => Some(FiniteMetric::new(action.space().clone(), matrix(rows, action.len())?)?),
        };
        Ok((action, metric))
    }

    pub fn from_action(action: &FiniteAction, metric: Option<&FiniteMetric>) -> Self {
        let gens = action.gens();
        Self {
            schema_version: SCHEMA_VERSION,
            points: action.space().point_ids().to_vec(),
            weights: action.space().weights().to_vec(),
            generators: (0..gens.len())
                .map(|s| GeneratorEntry {
                    symbol: gens.symbol(s).to_string(),
                    inverse: gens.symbol(gens.inverse(s)).to_string(),
                    length: gens.length(s),
                    perm: action.perm(s).to_vec(),
                })
                .collect(),
            metric: metric.map(|m| (0..m.len()).map(|i| m.dist().row(i).iter().copied().collect()).collect()),
        }
    }
}

impl ChainDoc {
    pub fn build(&self) -> Result<Vec<FiniteAction>> {
        check_version(self.schema_version)?;
        action::gen_schreier_chain(&ChainSpec { generators: self.generators.clone(), levels: self.levels.clone() })
    }

    pub fn from_spec(spec: &ChainSpec) -> Self {
        Self { schema_version: SCHEMA_VERSION, generators: spec.generators.clone(), levels: spec.levels.clone() }
    }
}

/// Parses a kernel, action or chain document, told apart by their keys.
pub fn parse_document(text: &str) -> Result<Document> {
    let value: Value = parse(text)?;
    let Some(obj) = value.as_object() else {
        return Err(LabError::Parse { line: 1, column: 1, message: "top level must be a JSON object".into() });
    };
    if obj.contains_key("transition") {
        Ok(Document::Kernel(parse::<KernelDoc>(text)?.build()?))
    } else if obj.contains_key("levels") {
        Ok(Document::Chain(parse::<ChainDoc>(text)?.build()?))
    } else if obj.contains_key("generators") {
        let (action, metric) = parse::<ActionDoc>(text)?.build()?;
        Ok(Document::Action { action, metric })
    } else {
        Err(LabError::Parse {
            line: 1,
            column: 1,
            message: "expected a kernel (\"transition\"), action (\"generators\") or chain (\"levels\") document".into(),
        })
    }
}

pub fn parse_kernel(text: &str) -> Result<MarkovKernel> {
    parse::<KernelDoc>(text)?.build()
}

pub fn parse_action(text: &str) -> Result<(FiniteAction, Option<FiniteMetric>)> {
    parse::<ActionDoc>(text)?.build()
}

pub fn parse_chain(text: &str) -> Result<Vec<FiniteAction>> {
    parse::<ChainDoc>(text)?.build()
}

/// Renders a finite real with 17 significant digits: positional notation
/// for exponents in `-5..17`, scientific otherwise.
pub fn format_real(v: f64) -> String {
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..17).contains(&exp) {
        return sci;
    }
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    if exp >= 0 {
        let split = exp as usize + 1;
        let frac = &digits[split..];
        if frac.is_empty() {
            format!("{sign}{digits}.0")
        } else {
            format!("{sign}{}.{frac}", &digits[..split])
        }
    } else {
        format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize))
    }
}

/// Pretty JSON with every `f64` written by [`format_real`]. Non-finite
/// values are written as `null` by serde_json before reaching here.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_real(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with fixed 17-significant-digit reals and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits(PrettyFormatter::with_indent(b"  ")));
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// A report body tagged with the schema version.
#[derive(Debug, Clone, Serialize)]
pub struct Versioned<'a, T: Serialize> {
    pub schema_version: u32,
    pub command: &'a str,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn report_json<T: Serialize>(command: &str, body: &T) -> String {
    to_json(&Versioned { schema_version: SCHEMA_VERSION, command, body })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Shortest round-trip decimal; `inf` and `nan` spelled out.
fn csv_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Square matrix with atom ids as row and column headers.
pub fn matrix_csv(ids: &[String], m: &DMatrix<f64>) -> String {
    let mut out = String::from("atom");
    for id in ids {
        out.push(',');
        out.push_str(&csv_field(id));
    }
    out.push('\n');
    for (i, id) in ids.iter().enumerate() {
        out.push_str(&csv_field(id));
        for j in 0..m.ncols() {
            out.push(',');
            out.push_str(&csv_real(m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Warped matrices stacked with a leading `t` column.
pub fn warped_csv(levels: &[WarpedLevel]) -> String {
    let Some(first) = levels.first() else { return String::new() };
    let ids = first.base().space().point_ids();
    let mut out = String::from("t,atom");
    for id in ids {
        out.push(',');
        out.push_str(&csv_field(id));
    }
    out.push('\n');
    for level in levels {
        for (i, id) in ids.iter().enumerate() {
            out.push_str(&csv_real(level.t()));
            out.push(',');
            out.push_str(&csv_field(id));
            for j in 0..level.len() {
                out.push(',');
                out.push_str(&csv_real(level.distance(i, j)));
            }
            out.push('\n');
        }
    }
    out
}

/// Rows of named columns.
pub fn table_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|v| csv_real(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}
