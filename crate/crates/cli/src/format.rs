//! On-disk channel format.
//!
//! ```json
//! {"d1": 2, "d2": 2,
//!  "representation": {"kraus": [[[[1,0],[0,0]],[[0,0],[0,0]]]]},
//!  "label": "optional"}
//! ```
//!
//! Complex entries are `[re, im]`; matrices are row-major nested arrays.
//! Kraus operators are `d1 x d2` matrices `V` with `X -> sum V* X V`.
//! Choi matrices are `d1*d2` square; Holevo terms are `{"F": d1 x d1, "R": d2 x d2}`.

use ebx_core::{CMatrix, CVector, Channel, Representation, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

pub type Entry = [f64; 2];
pub type MatrixFile = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolevoPair {
    #[serde(rename = "F")]
    pub f: MatrixFile,
    #[serde(rename = "R")]
    pub r: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum RepresentationFile {
    Kraus(Vec<MatrixFile>),
    Choi(MatrixFile),
    Holevo(Vec<HolevoPair>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub d1: usize,
    pub d2: usize,
    pub representation: RepresentationFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

pub fn encode_matrix(m: &CMatrix) -> MatrixFile {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn encode_vector(v: &CVector) -> Vec<Entry> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn decode_matrix(
    m: &MatrixFile,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<CMatrix, CliError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        let found_cols = m.first().map_or(0, Vec::len);
        return Err(CliError::Dimension(format!(
            "{what}: expected {rows}x{cols}, found {}x{found_cols}{}",
            m.len(),
            if m.iter().all(|r| r.len() == found_cols) {
                ""
            } else {
                " (ragged rows)"
            }
        )));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| {
        let [re, im] = m[i][j];
        C64::new(re, im)
    }))
}

impl ChannelFile {
    pub fn from_channel(ch: &Channel) -> Self {
        let representation = match ch.representation() {
            Representation::Kraus(k) => {
                RepresentationFile::Kraus(k.operators().iter().map(encode_matrix).collect())
            }
            Representation::Choi(m) => RepresentationFile::Choi(encode_matrix(m.matrix())),
            Representation::Holevo(h) => RepresentationFile::Holevo(
                h.terms()
                    .iter()
                    .map(|t| HolevoPair {
                        f: encode_matrix(&t.f),
                        r: encode_matrix(&t.r),
                    })
                    .collect(),
            ),
        };
        ChannelFile {
            d1: ch.d1(),
            d2: ch.d2(),
            representation,
            label: ch.label().map(str::to_owned),
        }
    }

    pub fn to_channel(&self) -> Result<Channel, CliError> {
        let (d1, d2) = (self.d1, self.d2);
        if d1 == 0 || d2 == 0 {
            return Err(CliError::Dimension(format!(
                "dimensions must be positive, got d1={d1}, d2={d2}"
            )));
        }
        let built = match &self.representation {
            RepresentationFile::Kraus(ops) => {
                let ops = ops
                    .iter()
                    .enumerate()
                    .map(|(k, m)| decode_matrix(m, d1, d2, &format!("kraus[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Channel::from_kraus(d1, d2, ops)
            }
            RepresentationFile::Choi(m) => {
                Channel::from_choi(d1, d2, decode_matrix(m, d1 * d2, d1 * d2, "choi")?)
            }
            RepresentationFile::Holevo(pairs) => {
                let terms = pairs
                    .iter()
                    .enumerate()
                    .map(|(k, p)| {
                        Ok((
                            decode_matrix(&p.f, d1, d1, &format!("holevo[{k}].F"))?,
                            decode_matrix(&p.r, d2, d2, &format!("holevo[{k}].R"))?,
                        ))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                Channel::from_holevo(d1, d2, terms)
            }
        };
        let ch = built.map_err(CliError::invalid_input)?;
        Ok(match &self.label {
            Some(l) => ch.with_label(l.clone()),
            None => ch,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        if text.trim().is_empty() {
            return Err(CliError::Parse("empty file".into()));
        }
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }
}

pub fn parse_channel(text: &str) -> Result<Channel, CliError> {
    ChannelFile::parse(text)?.to_channel()
}

pub fn serialize_channel(ch: &Channel) -> String {
    ChannelFile::from_channel(ch).to_json()
}

/// Nesting depth of arrays; objects count as unboundedly deep.
fn array_depth(v: &Value) -> usize {
    match v {
        Value::Array(items) => 1 + items.iter().map(array_depth).max().unwrap_or(0),
        Value::Object(_) => usize::MAX / 2,
        _ => 0,
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| " ".repeat(n);
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (k, (key, child)) in map.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, child, indent + 2);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
        // Entries and matrix rows stay on one line.
        Value::Array(items) if array_depth(v) > 2 => {
            out.push_str("[\n");
            for (k, child) in items.iter().enumerate() {
                out.push_str(&pad(indent + 2));
                write_value(out, child, indent + 2);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// JSON with one matrix row per line.
pub fn to_json<T: Serialize>(v: &T) -> String {
    let value = serde_json::to_value(v).expect("documents always serialize");
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out
}
