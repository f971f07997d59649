use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

/// Write every file into `dir` through a temporary file and a rename, so a
/// failed run never leaves a partial file behind. All contents are computed
/// before this is called.
pub fn write_files(dir: &Path, files: &[(&str, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in files {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(content.as_bytes())?;
        tmp.flush()?;
        tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    }
    Ok(())
}

/// Print to stdout with exactly one trailing newline.
pub fn print(content: &str) {
    if content.ends_with('\n') {
        print!("{content}");
    } else {
        println!("{content}");
    }
}
