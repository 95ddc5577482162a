//! Batch front end: experiment configs in, CSV artifacts and a check report out.

mod config;
mod csv;
mod run;

pub use config::{parse_config, parse_config_with, Command, ConfigError, ExperimentConfig, Value};
pub use csv::{
    field_table, fmt_num, parse_field_csv, read_field_csv, write_field_csv, CsvError, Table,
};
pub use run::{run, Check, Relation, RunError, RunReport};
