//! Synthetic group-biased data and tabular file I/O.

mod synth;
mod tabular;

pub use synth::{generate_synthetic, SynthConfig};
pub use tabular::{
    load_jsonl, load_tabular, read_csv, read_jsonl, save_csv, write_csv, write_jsonl,
    written_schema, TabularSchema,
};
