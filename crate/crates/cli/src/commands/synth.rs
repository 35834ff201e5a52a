//! `vqgen synth`: deterministic synthetic dataset generation.

use crate::io::write_jsonl;
use std::path::Path;
use vqgen_core::corpus::{generate_synthetic_dataset, record_to_json, TemplateBank};
use vqgen_core::{Result, RunConfig};

pub fn cmd_synth(config: &RunConfig, n_images: usize, out: &Path) -> Result<()> {
    let records = generate_synthetic_dataset(config.seed, n_images, &TemplateBank::default_bank())?;
    let values = records.iter().map(record_to_json).collect();
    write_jsonl(out, values, config)?;
    eprintln!(
        "wrote {} synthetic records to {}",
        records.len(),
        out.display()
    );
    Ok(())
}
