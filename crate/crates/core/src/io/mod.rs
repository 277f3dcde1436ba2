//! CSV ingestion, window features and model persistence.

mod persist;
mod table;
mod windows;

pub use persist::{load_model, model_from_document, model_to_document, save_model, FORMAT_VERSION};
pub use table::{load_csv, write_matrix_csv, LabelColumn, Table};
pub use windows::{window_features, WindowConfig};
