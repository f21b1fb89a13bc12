use crate::error::Result;
use super::ExperimentConfig;
use std::path::{Path, PathBuf};

pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

pub fn run(_config: &ExperimentConfig, _out_dir: &Path) -> Result<RunOutput> {
    Ok(RunOutput { files: vec![] })
}

pub fn summarize(_paths: &[PathBuf], _out: &Path) -> Result<()> {
    Ok(())
}
