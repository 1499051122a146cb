//! Versioned JSON persistence for trained ensembles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::TrainedEnsemble;
use crate::error::{Error, Result};

pub const MODEL_FORMAT: &str = "whsboost-ensemble";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    ensemble: T,
}

#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub fn write_model<W: Write>(ens: &TrainedEnsemble, mut writer: W) -> Result<()> {
    let env = Envelope {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        ensemble: ens,
    };
    serde_json::to_writer(&mut writer, &env)?;
    writer.flush().map_err(|e| Error::io("<model writer>", e))
}

pub fn read_model<R: Read>(mut reader: R) -> Result<TrainedEnsemble> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<model reader>", e))?;
    let header: Header = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("missing format header: {e}")))?;
    if header.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unknown model format `{}`", header.format)));
    }
    if header.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "model version {} is not supported (expected {MODEL_VERSION})",
            header.version
        )));
    }
    let env: Envelope<TrainedEnsemble> = serde_json::from_str(&text)?;
    Ok(env.ensemble)
}

pub fn save_model(ens: &TrainedEnsemble, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(ens, BufWriter::new(file))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedEnsemble> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierSpec, Kernel};
    use crate::data::fixtures::continuous;
    use crate::distance::VdmTable;
    use crate::ensemble::{train, BoostConfig, BoostMethod};

    #[test]
    fn round_trip_is_exact() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let labels: Vec<i8> = (0..40).map(|i| if i % 5 == 0 { 1 } else { -1 }).collect();
        let d = continuous(&refs, &labels);
        let vdm = VdmTable::continuous_only(d.schema()).unwrap();
        for base in [
            ClassifierSpec::knn(3),
            ClassifierSpec::dtree(3, 1),
            ClassifierSpec::bpnn(3, 5, 0.2),
            ClassifierSpec::svm(Kernel::Rbf { gamma: 0.7 }, 2.0),
        ] {
            let mut cfg = BoostConfig::new(base, 1);
            cfg.iterations = 3;
            let e = train(BoostMethod::WhsBoost, &d, &cfg, &vdm).unwrap();
            let mut buf = Vec::new();
            write_model(&e, &mut buf).unwrap();
            let back = read_model(buf.as_slice()).unwrap();
            assert_eq!(back, e);
            assert_eq!(back.scores(&d).unwrap(), e.scores(&d).unwrap());
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = r#"{"format":"whsboost-ensemble","version":99,"ensemble":{}}"#;
        assert!(matches!(read_model(text.as_bytes()), Err(Error::Format(_))));
        let text = r#"{"format":"other","version":1,"ensemble":{}}"#;
        assert!(matches!(read_model(text.as_bytes()), Err(Error::Format(_))));
    }
}
