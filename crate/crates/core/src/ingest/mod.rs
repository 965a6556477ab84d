//! Raw table parsing and linkage into a per-visit view.

mod link;
mod records;
mod table;

pub use link::{link_tables, LinkReport, LinkedCohort, StayAttachments, SubjectHistory};
pub use records::*;
pub use table::{
    convert_temperature, format_f64, format_timestamp, parse_pain, parse_reader, parse_table, parse_timestamp,
    read_raw_tables, write_raw_tables, write_records, write_table, ParseOptions, SourceRecord, TableKind,
    TemperatureUnit, TIMESTAMP_FORMAT,
};
