//! Image-cube anomaly detection on top of `osklad-core`: cube I/O, bandwidth
//! selection, score maps with PGM output, and a seeded synthetic generator.

pub mod bandwidth;
pub mod cube;
pub mod error;
pub mod metrics;
pub mod scoremap;
pub mod synth;

pub use bandwidth::{
    default_sigma_grid, select_bandwidth, BandwidthConfig, BandwidthReport, DEFAULT_REGIONS,
};
pub use cube::{default_header_path, load_cube, write_cube, Header, ImageCube, Rect};
pub use error::{Error, Result};
pub use metrics::roc_auc;
pub use scoremap::{
    build_scoremap, normalize, parse_pgm, pgm_bytes, read_pgm, write_pgm, write_score_csv, ScoreMap,
};
pub use synth::{gen_synthetic, read_truth, write_truth, SynthConfig, Synthetic};
