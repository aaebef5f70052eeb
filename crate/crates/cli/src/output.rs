use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use phonalign::FoldingTable;

/// Write `bytes` to a temporary file next to `path`, then rename it into
/// place so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Built-in table name or a TSV path.
pub fn load_folding(spec: &str) -> Result<FoldingTable> {
    let table = match spec {
        "buckeye" => FoldingTable::buckeye(),
        "timit" => FoldingTable::timit(),
        "none" => FoldingTable::new(),
        path => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading folding table {path}"))?;
            FoldingTable::parse(&text).with_context(|| format!("parsing folding table {path}"))?
        }
    };
    table.validate(None)?;
    Ok(table)
}
