use std::fs;
use std::path::{Path, PathBuf};

use mmwf_core::persistence::{format_plot_csv, format_report, format_track, AnalysisReport, PlotData};
use mmwf_core::SpatialTrackPdp;

use crate::config::{RunConfig, RunManifest, MANIFEST_FILE};
use crate::CliError;

/// An output directory that remembers what was written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, text: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(rel.to_string());
        Ok(())
    }

    pub fn write_track(&mut self, rel: &str, track: &SpatialTrackPdp) -> Result<(), CliError> {
        self.write(rel, &format_track(track))
    }

    pub fn write_report(&mut self, rel: &str, report: &AnalysisReport) -> Result<(), CliError> {
        self.write(rel, &format_report(report)?)
    }

    pub fn write_plot(&mut self, rel: &str, data: PlotData<'_>) -> Result<(), CliError> {
        self.write(rel, &format_plot_csv(data)?)
    }

    /// Writes the manifest last, listing everything written before it.
    pub fn finish(self, config: RunConfig) -> Result<PathBuf, CliError> {
        let manifest = RunManifest::new(config, self.written);
        let path = self.root.join(MANIFEST_FILE);
        fs::write(&path, manifest.to_json()).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

/// `track_0000.csv`, widened when there are more than 10⁴ tracks.
pub fn track_file_name(index: usize, n_tracks: usize) -> String {
    let width = n_tracks.saturating_sub(1).to_string().len().max(4);
    format!("track_{index:0width$}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn track_names_sort_by_index() {
        assert_eq!(track_file_name(7, 200), "track_0007.csv");
        assert_eq!(track_file_name(7, 20_000), "track_00007.csv");
    }
}
