//! JSON file formats.
//!
//! Complex scalars are `[re, im]` pairs and matrices are nested row-major.
//! Every document carries a `schema` tag.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec};
use crate::qstate::{choi_of, BipartiteState, KrausChannel};

pub const CHANNEL_SCHEMA: &str = "ruchan.channel.v1";
pub const UNITARY_SCHEMA: &str = "ruchan.unitary.v1";
pub const REPORT_SCHEMA: &str = "ruchan.report.v1";

pub type Matrix = Vec<Vec<[f64; 2]>>;

pub fn to_rows(m: &CMat) -> Matrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect())
        .collect()
}

pub fn from_rows(rows: &Matrix) -> Result<CMat> {
    let n = rows.len();
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    if rows.iter().flatten().flatten().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    Ok(CMat::from_fn(n, cols, |r, k| c(rows[r][k][0], rows[r][k][1])))
}

/// Serde adapter for `CMat` fields.
pub mod cmat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Matrix::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `CVec` fields.
pub mod cvec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> std::result::Result<S::Ok, S::Error> {
        v.iter()
            .map(|z| [z.re, z.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CVec, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVec::from_iterator(raw.len(), raw.iter().map(|p| c(p[0], p[1]))))
    }
}

/// A channel given either by Kraus operators or by its Choi state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub schema: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<Matrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<Matrix>,
}

/// A parsed and validated channel file.
#[derive(Debug, Clone)]
pub struct Channel {
    pub choi: BipartiteState,
    pub kraus: Option<KrausChannel>,
}

impl Channel {
    /// Kraus operators, computed from the Choi state if the file had none.
    pub fn kraus(&self) -> Result<KrausChannel> {
        match &self.kraus {
            Some(k) => Ok(k.clone()),
            None => crate::qstate::kraus_of(&self.choi),
        }
    }
}

impl ChannelFile {
    pub fn from_kraus(channel: &KrausChannel) -> Self {
        ChannelFile {
            schema: CHANNEL_SCHEMA.into(),
            dim: channel.dim(),
            kraus: Some(channel.kraus().iter().map(to_rows).collect()),
            choi: None,
        }
    }

    pub fn from_choi(choi: &BipartiteState) -> Self {
        ChannelFile {
            schema: CHANNEL_SCHEMA.into(),
            dim: choi.dim(),
            kraus: None,
            choi: Some(to_rows(choi.matrix())),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed channel file: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("channel files always serialize");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<Channel> {
        if self.schema != CHANNEL_SCHEMA {
            return Err(Error::InvalidArgument(format!(
                "unsupported schema {:?}, expected {CHANNEL_SCHEMA:?}",
                self.schema
            )));
        }
        crate::gellmann::validate_dim(self.dim)?;
        let d = self.dim;
        match (&self.kraus, &self.choi) {
            (Some(kraus), None) => {
                let ops = kraus.iter().map(from_rows).collect::<Result<Vec<_>>>()?;
                if let Some(bad) = ops.iter().find(|k| k.shape() != (d, d)) {
                    return Err(Error::Shape(format!(
                        "Kraus operator is {}x{}, expected {d}x{d}",
                        bad.nrows(),
                        bad.ncols()
                    )));
                }
                let channel = KrausChannel::new(ops)?;
                let choi = choi_of(&channel)?;
                Ok(Channel {
                    choi,
                    kraus: Some(channel),
                })
            }
            (None, Some(rows)) => {
                let m = from_rows(rows)?;
                if m.shape() != (d * d, d * d) {
                    return Err(Error::Shape(format!(
                        "Choi matrix is {}x{}, expected {}x{}",
                        m.nrows(),
                        m.ncols(),
                        d * d,
                        d * d
                    )));
                }
                Ok(Channel {
                    choi: BipartiteState::new(m)?,
                    kraus: None,
                })
            }
            _ => Err(Error::InvalidArgument(
                "exactly one of `kraus` and `choi` must be present".into(),
            )),
        }
    }
}

/// The unitary written by `offdiag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryFile {
    pub schema: String,
    pub dim: usize,
    /// 1-based index of the Gell-Mann element whose matrix was treated.
    pub index: usize,
    pub rotations: usize,
    pub max_abs_diag: f64,
    #[serde(with = "cmat")]
    pub unitary: CMat,
}

pub fn read_to_string(path: &Path) -> Result<(String, Vec<u8>)> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::InvalidArgument(format!("{} is not UTF-8", path.display())))?;
    Ok((text, bytes))
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    use std::io::Write;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chanfactory::{example_channel, ExampleChannel};

    #[test]
    fn kraus_file_round_trip() {
        let ch = example_channel(&ExampleChannel::LandauStreater, 3).unwrap();
        let file = ChannelFile::from_kraus(&ch);
        let text = file.to_json();
        let back = ChannelFile::parse(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), text);
        let parsed = back.validate().unwrap();
        assert_eq!(parsed.kraus.unwrap(), ch);
    }

    #[test]
    fn rejects_both_or_neither() {
        let ch = example_channel(&ExampleChannel::Loss, 2).unwrap();
        let mut file = ChannelFile::from_kraus(&ch);
        file.choi = Some(to_rows(&crate::qstate::choi_matrix(&ch)));
        assert!(file.validate().is_err());
        file.choi = None;
        file.kraus = None;
        assert!(file.validate().is_err());
    }

    #[test]
    fn rejects_unknown_fields_and_schema() {
        let text = r#"{"schema":"ruchan.channel.v1","dim":2,"kraus":[],"extra":1}"#;
        assert!(ChannelFile::parse(text).is_err());
        let text = r#"{"schema":"other","dim":2,"choi":[]}"#;
        assert!(ChannelFile::parse(text).unwrap().validate().is_err());
    }

    #[test]
    fn rejects_non_hermitian_choi() {
        let mut m = CMat::identity(4, 4).scale(0.25);
        m[(0, 1)] = c(0.1, 0.0);
        let file = ChannelFile {
            schema: CHANNEL_SCHEMA.into(),
            dim: 2,
            kraus: None,
            choi: Some(to_rows(&m)),
        };
        assert!(matches!(file.validate(), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
