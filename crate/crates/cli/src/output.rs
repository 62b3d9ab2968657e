use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

/// Config block embedded in every output.
pub fn config<T: Serialize>(command: &str, args: &T) -> Value {
    json!({ "command": command, "version": env!("CARGO_PKG_VERSION"), "args": args })
}

pub fn json_bytes(value: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Write to `out`, or stdout when absent.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// CSV outputs carry their config in `<file>.config.json`.
pub fn sidecar(out: &Path, config: &Value) -> Result<()> {
    let mut name = out.as_os_str().to_owned();
    name.push(".config.json");
    emit(Some(&PathBuf::from(name)), &json_bytes(config)?)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}
