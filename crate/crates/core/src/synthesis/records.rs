use serde::{Deserialize, Serialize};

use crate::channel::{SpatialTrackPdp, TrackGeometry, TrackLabels};
use crate::error::ChannelError;

/// One position's binned PDP; `None` marks below-floor bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpRecord {
    pub position: usize,
    pub bins: Vec<Option<f64>>,
}

pub fn track_to_pdp_records(track: &SpatialTrackPdp) -> Vec<PdpRecord> {
    (0..track.n_positions())
        .map(|position| PdpRecord {
            position,
            bins: track.row(position),
        })
        .collect()
}

/// Inverse of [`track_to_pdp_records`]. Records must be in position order with equal bin counts.
pub fn pdp_records_to_track(
    records: &[PdpRecord],
    geometry: TrackGeometry,
    labels: TrackLabels,
) -> Result<SpatialTrackPdp, ChannelError> {
    let n_bins = records.first().map_or(0, |r| r.bins.len());
    let mut cells = Vec::with_capacity(records.len() * n_bins);
    for (i, r) in records.iter().enumerate() {
        if r.position != i {
            return Err(ChannelError::InvalidParameter(format!(
                "record {i} carries position {}",
                r.position
            )));
        }
        if r.bins.len() != n_bins {
            return Err(ChannelError::InvalidParameter(format!(
                "record {i} has {} bins, expected {n_bins}",
                r.bins.len()
            )));
        }
        cells.extend_from_slice(&r.bins);
    }
    SpatialTrackPdp::from_cells(geometry, labels, records.len(), n_bins, &cells)
}
