//! Regenerates `corpus/*.json` from the built-in models.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus");
    std::fs::create_dir_all(&dir)?;
    for (name, doc) in sft_torsion::corpus::bundled().into_iter().chain(sft_torsion::corpus::invalid()) {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, sft_torsion::corpus::render(&doc))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
