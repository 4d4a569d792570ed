//! JSON file format.
//!
//! A complex scalar is `[re, im]`, a matrix is an array of rows, and a Kraus
//! map is `{"dim": n, "kraus": [matrix, ...]}`. Instance files wrap a payload
//! as `{"schema_version": "1", "kind": ..., "payload": ...}`; unknown fields are
//! rejected. Floats are written in shortest round-trip form, so a write/read
//! cycle reproduces every double exactly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cpmap::KrausMap;
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, C64};
use crate::roots::{RootCandidate, RootMap};

pub const SCHEMA_VERSION: &str = "1";

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch { expected: ncols, found: bad.len() });
    }
    let entries = rows.iter().flatten();
    if entries.clone().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has a non-finite entry".into()));
    }
    Ok(ComplexMatrix::from_row_iterator(nrows, ncols, entries.map(|z| C64::new(z[0], z[1]))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrausMapJson {
    pub dim: usize,
    pub kraus: Vec<JsonMatrix>,
}

impl KrausMapJson {
    pub fn from_map(alpha: &KrausMap) -> Self {
        Self { dim: alpha.dim(), kraus: alpha.kraus().iter().map(matrix_to_json).collect() }
    }

    pub fn to_map(&self) -> Result<KrausMap> {
        let kraus = self.kraus.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        let alpha = KrausMap::new(kraus)?;
        if alpha.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: alpha.dim() });
        }
        Ok(alpha)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootCandidateJson {
    pub dim: usize,
    pub kraus: Vec<JsonMatrix>,
    pub u: Vec<JsonComplex>,
    pub p: usize,
}

/// Contents of an instance file.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    KrausMap(KrausMap),
    RootCandidate(RootCandidate),
    Vector(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    schema_version: String,
    kind: String,
    payload: serde_json::Value,
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::KrausMap(_) => "kraus_map",
            Instance::RootCandidate(_) => "root_candidate",
            Instance::Vector(_) => "vector",
        }
    }

    /// Root candidates are written in Kraus form.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let payload = match self {
            Instance::KrausMap(alpha) => serde_json::to_value(KrausMapJson::from_map(alpha)),
            Instance::RootCandidate(r) => {
                let RootMap::Kraus(k) = &r.tau else {
                    return Err(Error::InvalidArgument(
                        "root candidates must be in Kraus form to be written".into(),
                    ));
                };
                serde_json::to_value(RootCandidateJson {
                    dim: k.dim(),
                    kraus: k.kraus().iter().map(matrix_to_json).collect(),
                    u: r.u.iter().map(|z| [z.re, z.im]).collect(),
                    p: r.order,
                })
            }
            Instance::Vector(v) => serde_json::to_value(v),
        }
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let envelope = Envelope {
            schema_version: SCHEMA_VERSION.to_string(),
            kind: self.kind().to_string(),
            payload,
        };
        serde_json::to_value(envelope).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn to_string_pretty(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_json()?).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Instance> {
        let envelope: Envelope =
            serde_json::from_str(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        if envelope.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema_version {:?}",
                envelope.schema_version
            )));
        }
        let bad = |e: serde_json::Error| Error::InvalidArgument(e.to_string());
        match envelope.kind.as_str() {
            "kraus_map" => {
                let body: KrausMapJson = serde_json::from_value(envelope.payload).map_err(bad)?;
                Ok(Instance::KrausMap(body.to_map()?))
            }
            "root_candidate" => {
                let body: RootCandidateJson = serde_json::from_value(envelope.payload).map_err(bad)?;
                let map = KrausMapJson { dim: body.dim, kraus: body.kraus }.to_map()?;
                if body.u.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("u has a non-finite entry".into()));
                }
                let u = DVector::from_iterator(body.u.len(), body.u.iter().map(|z| C64::new(z[0], z[1])));
                Ok(Instance::RootCandidate(RootCandidate { tau: RootMap::Kraus(map), u, order: body.p }))
            }
            "vector" => {
                let v: Vec<f64> = serde_json::from_value(envelope.payload).map_err(bad)?;
                Ok(Instance::Vector(v))
            }
            other => Err(Error::InvalidArgument(format!("unknown kind {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::real_matrix;

    #[test]
    fn kraus_map_layout() {
        let alpha = KrausMap::new(vec![real_matrix(2, 2, &[0.0, 1.0, 0.0, 0.0])]).unwrap();
        let text = serde_json::to_string(&Instance::KrausMap(alpha).to_json().unwrap()).unwrap();
        assert_eq!(
            text,
            r#"{"kind":"kraus_map","payload":{"dim":2,"kraus":[[[[0.0,0.0],[1.0,0.0]],[[0.0,0.0],[0.0,0.0]]]]},"schema_version":"1"}"#
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"schema_version":"1","kind":"vector","payload":[1.0],"extra":1}"#;
        assert!(Instance::parse(text).is_err());
        let text = r#"{"schema_version":"1","kind":"kraus_map","payload":{"dim":1,"kraus":[[[[0,0]]]],"x":0}}"#;
        assert!(Instance::parse(text).is_err());
        let text = r#"{"schema_version":"2","kind":"vector","payload":[1.0]}"#;
        assert!(Instance::parse(text).is_err());
    }

    #[test]
    fn dim_must_match() {
        let text = r#"{"schema_version":"1","kind":"kraus_map","payload":{"dim":2,"kraus":[[[[0,0]]]]}}"#;
        assert!(matches!(Instance::parse(text), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let m: JsonMatrix = vec![vec![[0.0, 0.0], [1.0, 0.0]], vec![[0.0, 0.0]]];
        assert!(matrix_from_json(&m).is_err());
    }
}
