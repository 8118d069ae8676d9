//! Run outputs are assembled in memory and written only after every
//! computation has succeeded. Each file is written to a temporary file in
//! the output directory and renamed into place, so readers never see a
//! truncated file.

use std::io::Write;
use std::path::Path;

use gp_audio_core::{Error, Result};
use serde::Serialize;

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Outputs::default()
    }

    /// Adds a file produced by a writer callback.
    pub fn add(
        &mut self,
        name: impl Into<String>,
        write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) {
        let mut bytes = Vec::new();
        write(&mut bytes).expect("writing to memory cannot fail");
        self.files.push((name.into(), bytes));
    }

    /// Adds pretty-printed JSON with a trailing newline.
    pub fn add_json(&mut self, name: impl Into<String>, value: &impl Serialize) {
        self.add(name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            out.push(b'\n');
            Ok(())
        });
    }

    /// Creates `dir` if needed and moves every file into it atomically.
    pub fn commit(self, dir: &Path) -> Result<()> {
        let io = |path: &Path, source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        for (name, bytes) in self.files {
            let target = dir.join(&name);
            let mut tmp = tempfile::Builder::new()
                .prefix(&format!(".{name}."))
                .tempfile_in(dir)
                .map_err(|e| io(dir, e))?;
            tmp.write_all(&bytes).map_err(|e| io(tmp.path(), e))?;
            tmp.as_file().sync_all().map_err(|e| io(tmp.path(), e))?;
            tmp.persist(&target).map_err(|e| io(&target, e.error))?;
            log::info!("wrote {}", target.display());
        }
        Ok(())
    }
}
