//! Output sinks.  Every artifact carries the schema version, the library
//! version and the resolved configuration: JSON reports in an envelope
//! object, CSV tables and JSON-lines catalogues in a leading header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Version of the output layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Platform caveat recorded with every output.
pub const DETERMINISM: &str = "outputs are bit-identical for the same config and seed on a fixed platform and build; \
     other CPUs, compilers or math libraries may change the last bits of floating-point values";

/// Run metadata embedded in every output.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    /// Output layout version.
    pub schema_version: u32,
    /// Library version.
    pub version: &'static str,
    /// Subcommand.
    pub command: String,
    /// Resolved configuration.
    pub config: Value,
    /// Floating-point determinism caveat.
    pub determinism: &'static str,
}

impl Meta {
    /// Metadata of a run of `command` with the resolved `config`.
    pub fn new(command: &str, config: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            config,
            determinism: DETERMINISM,
        }
    }
}

/// Opens `path`, or standard output when `None`.
pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes a JSON report wrapped with its metadata.
pub fn write_json<T: Serialize>(w: &mut dyn Write, meta: &Meta, result: &T) -> Result<()> {
    let doc = json!({ "meta": meta, "result": result });
    serde_json::to_writer_pretty(&mut *w, &doc)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes the `#`-prefixed metadata header of a CSV table.
pub fn write_csv_header(w: &mut dyn Write, meta: &Meta) -> Result<()> {
    writeln!(w, "# isosceles {} schema {} command {}", meta.version, meta.schema_version, meta.command)?;
    writeln!(w, "# config {}", serde_json::to_string(&meta.config)?)?;
    writeln!(w, "# {}", meta.determinism)?;
    Ok(())
}

/// Writes the metadata line of a JSON-lines catalogue.
pub fn write_jsonl_header(w: &mut dyn Write, meta: &Meta) -> Result<()> {
    writeln!(w, "{}", serde_json::to_string(&json!({ "meta": meta }))?)?;
    Ok(())
}
