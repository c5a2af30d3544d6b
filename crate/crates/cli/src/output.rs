use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

/// Shortest representation that parses back to the same float.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Collects the tables of one run and the metadata record.
pub struct Run {
    dir: PathBuf,
    header: Vec<(String, String)>,
    pub meta: Map<String, Value>,
    files: Vec<String>,
}

impl Run {
    pub fn new(dir: &Path, header: Vec<(String, String)>, meta: Map<String, Value>) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Run {
            dir: dir.to_path_buf(),
            header,
            meta,
            files: Vec::new(),
        })
    }

    /// Write `name` as a comma-separated table preceded by `#` metadata lines.
    pub fn table(&mut self, name: &str, columns: &[String], rows: &[Vec<String>]) -> io::Result<()> {
        let mut buf = Vec::new();
        for (k, v) in &self.header {
            buf.extend_from_slice(format!("# {k}: {v}\n").as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(&mut buf);
            w.write_record(columns)?;
            for row in rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        fs::write(self.dir.join(name), buf)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.files.push("meta.json".into());
        self.meta.insert("files".into(), Value::from(self.files.clone()));
        let mut text = serde_json::to_vec_pretty(&Value::Object(self.meta)).expect("metadata serializes");
        text.push(b'\n');
        fs::write(self.dir.join("meta.json"), text)
    }
}

pub fn columns<I, S>(names: I) -> Vec<String>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    names.into_iter().map(Into::into).collect()
}
