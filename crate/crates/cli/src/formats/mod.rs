//! On-disk formats: gaze CSV + metadata sidecars, PNG images with label
//! sidecars, dataset manifests, and the model interchange file.

pub mod gaze_csv;
pub mod labels;
pub mod manifest;
pub mod model_file;
pub mod png_io;
