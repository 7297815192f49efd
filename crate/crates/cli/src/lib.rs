//! File formats, the synthetic data generator and the `protoclust` command
//! line tool.

pub mod commands;
pub mod dmat;
pub mod error;
pub mod labels;
pub mod model_file;
pub mod synth;

pub use dmat::{read_dmat, read_dmat_from, write_dmat, write_dmat_to};
pub use error::{FormatError, Result};
pub use labels::{read_labels, read_tags, write_labels, write_tags, LabelFile};
pub use model_file::{decode_model, encode_model, read_linear, read_model, write_linear, write_model};
pub use synth::{gen_synth, SplitMix64, SynthConfig, SynthData};
