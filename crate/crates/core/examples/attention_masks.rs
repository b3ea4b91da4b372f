//! Writes the six mask families as PGM images and prints a small one.
//!
//! cargo run --example attention_masks [-- out_dir]

use std::fs::File;
use std::path::PathBuf;

use causal_roofline::operators::build_mask;
use causal_roofline::report::artifacts::write_pgm;
use causal_roofline::{AttentionConfig, MaskKind};

fn main() -> causal_roofline::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| "out/masks".into());
    std::fs::create_dir_all(&dir)?;
    let cfg = AttentionConfig::new(64, 64).with_gamma(0.9).with_d_state(4);
    for kind in MaskKind::ALL {
        let m = build_mask(kind, 64, &cfg, 0)?;
        write_pgm(&m, File::create(dir.join(format!("{kind}.pgm")))?)?;
    }
    let small = build_mask(MaskKind::RetentiveDecay, 5, &cfg, 0)?;
    for row in small.to_rows() {
        println!(
            "{}",
            row.iter().map(|x| format!("{x:6.3}")).collect::<Vec<_>>().join(" ")
        );
    }
    println!("wrote {} masks to {}", MaskKind::ALL.len(), dir.display());
    Ok(())
}
