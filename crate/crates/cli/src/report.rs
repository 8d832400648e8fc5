//! CSV output. Every file starts with a header naming columns and units.

use std::path::Path;

use crate::store::{write_atomic, StoreResult};

/// Shortest decimal representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub struct Csv {
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Csv { writer }
    }

    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        self.writer
            .write_record(cells.iter().map(|c| c.as_ref()))
            .expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }

    pub fn write(self, path: &Path) -> StoreResult<()> {
        write_atomic(path, &self.into_bytes())
    }
}
