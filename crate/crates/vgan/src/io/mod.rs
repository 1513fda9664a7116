//! File formats.

pub mod landmarks;
pub mod model_json;
pub mod segments_csv;
pub mod tables;
pub mod textgrid;
pub mod wav;

pub use landmarks::{read_landmarks_csv, write_landmarks_csv};
pub use model_json::{deserialize_detector, deserialize_model, serialize_detector, serialize_model};
pub use segments_csv::{parse_segments_csv, write_segments_csv};
pub use textgrid::{parse_textgrid, serialize_textgrid, TextGrid};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav};
