//! File formats, SVG Gantt charts, the benchmark harness and the pieces of
//! the `fjsched` command line built on `fjsched-core`.

pub mod bench;
pub mod config;
pub mod cpu;
pub mod format;
pub mod gantt;

use std::io::Read as _;
use std::path::Path;

use fjsched_core::Instance;

pub use fjsched_core as core;

/// Reads an instance file, or standard input for `-`. The instance is named
/// after the file stem.
pub fn read_instance(path: &Path) -> Result<Instance, String> {
    let (text, name) = if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| format!("stdin: {e}"))?;
        (text, "stdin".to_string())
    } else {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let name = path
            .file_stem()
            .map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned());
        (text, name)
    };
    format::parse_instance(&text, &name).map_err(|e| format!("{}: {e}", path.display()))
}
