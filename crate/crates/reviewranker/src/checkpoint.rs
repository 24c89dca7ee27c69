//! Model checkpoints.
//!
//! A checkpoint is a single JSON object:
//!
//! ```json
//! {
//!   "format": "reviewranker-model",
//!   "version": 1,
//!   "task": "operation",
//!   "layer_sizes": [1368, 64, 32, 3],
//!   "weights": [[...], [...], [...]],
//!   "biases": [[...], [...], [...]]
//! }
//! ```
//!
//! `weights[l]` is layer `l`'s matrix flattened row-major with one row per
//! input unit, so it holds `layer_sizes[l] * layer_sizes[l + 1]` numbers.
//! `task` is optional. Numbers are written with enough digits to read back
//! the exact same `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use reviewranker_core::{ModelParams, TaskKind};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "reviewranker-model";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskKind>,
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn new(params: &ModelParams, task: Option<TaskKind>) -> Self {
        Self {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            task,
            layer_sizes: params.layer_sizes().to_vec(),
            weights: params.layers().iter().map(|l| l.weights().to_vec()).collect(),
            biases: params.layers().iter().map(|l| l.biases().to_vec()).collect(),
        }
    }

    pub fn into_params(self) -> Result<ModelParams> {
        if self.format != FORMAT_NAME {
            return Err(Error::Invalid(format!("not a model checkpoint (format `{}`)", self.format)));
        }
        if self.version != FORMAT_VERSION {
            return Err(Error::Invalid(format!(
                "unsupported checkpoint version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        Ok(ModelParams::from_parts(&self.layer_sizes, self.weights, self.biases)?)
    }
}

pub fn write_checkpoint<W: Write>(params: &ModelParams, task: Option<TaskKind>, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    serde_json::to_writer(&mut w, &Checkpoint::new(params, task))?;
    w.flush().map_err(|e| Error::io("<checkpoint>", e))?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(reader: R) -> Result<(ModelParams, Option<TaskKind>)> {
    let checkpoint: Checkpoint = serde_json::from_reader(BufReader::new(reader))?;
    let task = checkpoint.task;
    Ok((checkpoint.into_params()?, task))
}

pub fn save_checkpoint(params: &ModelParams, task: Option<TaskKind>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(params, task, file)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelParams, Option<TaskKind>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use reviewranker_core::neuralnet::init_params;

    fn round_trip(params: &ModelParams) -> ModelParams {
        let mut buf = Vec::new();
        write_checkpoint(params, Some(TaskKind::Operation), &mut buf).unwrap();
        let (back, task) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(task, Some(TaskKind::Operation));
        back
    }

    #[test]
    fn bitwise_round_trip() {
        let params = init_params(&[40, 16, 8, 3], 11).unwrap();
        let back = round_trip(&params);
        assert_eq!(back.layer_sizes(), params.layer_sizes());
        for (a, b) in params.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_wrong_version_and_shape() {
        let params = init_params(&[3, 2], 0).unwrap();
        let mut c = Checkpoint::new(&params, None);
        c.version = 9;
        assert!(c.into_params().is_err());

        let mut c = Checkpoint::new(&params, None);
        c.weights[0].pop();
        assert!(matches!(c.into_params(), Err(Error::Core(_))));

        let json = serde_json::to_string(&Checkpoint::new(&params, None)).unwrap();
        assert!(json.starts_with("{\"format\":\"reviewranker-model\",\"version\":1,\"layer_sizes\":[3,2]"));
    }

    proptest! {
        #[test]
        fn awkward_floats_survive(values in proptest::collection::vec(-1e300f64..1e300, 6), tiny in proptest::collection::vec(-1e-300f64..1e-300, 2)) {
            let weights = vec![values];
            let biases = vec![tiny];
            let params = ModelParams::from_parts(&[3, 2], weights, biases).unwrap();
            let back = round_trip(&params);
            for (a, b) in params.iter().zip(back.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
