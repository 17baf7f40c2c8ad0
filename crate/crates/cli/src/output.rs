use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

pub const SCHEMA: u32 = 1;

/// The `#` metadata line: schema token and the full run configuration.
pub fn metadata_line<C: Serialize>(command: &str, config: &C) -> String {
    let cfg = serde_json::to_string(config).expect("config serializes");
    format!("# schema={SCHEMA} command=\"{command}\" config={cfg}\n")
}

/// Writes `text` to `path` through a sibling temp file and a rename, or to
/// stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
        Some(p) => {
            let tmp = temp_sibling(p);
            fs::write(&tmp, text)?;
            fs::rename(&tmp, p).inspect_err(|_| {
                let _ = fs::remove_file(&tmp);
            })
        }
    }
}

fn temp_sibling(p: &Path) -> PathBuf {
    let name = p
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    p.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

/// CSV text built row by row.
pub struct Table {
    w: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("in-memory write");
        Self { w }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        let bytes = self.w.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("utf-8 fields")
    }
}
