//! Data ingestion and trace serialization.

mod dense;
mod libsvm;
mod trace;

pub use dense::{parse_dense_csv, read_dense_csv};
pub use libsvm::{parse_libsvm, read_libsvm, write_libsvm, LibsvmDataset, LibsvmRecord};
pub use trace::{format_real, summary_path, write_trace, write_trace_to, TraceSummary, TRACE_HEADER};
