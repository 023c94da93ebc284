use crate::error::{CoreError, Result};
use crate::recording::{Label, Recording};

/// A `size`-sample slice of every channel of one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub subject_id: u32,
    pub label: Label,
    pub index: usize,
    pub start: usize,
    pub samples: Vec<Vec<f64>>,
}

/// Start offsets `0, stride, 2·stride, …` of every full window that fits in
/// `len` samples: `floor((len - size) / stride) + 1` of them.
pub fn window_starts(len: usize, size: usize, stride: usize) -> Result<Vec<usize>> {
    if size == 0 || stride == 0 {
        return Err(CoreError::InvalidConfig(
            "window size and stride must be positive".into(),
        ));
    }
    if size > len {
        return Err(CoreError::RecordingTooShort { len, window: size });
    }
    Ok((0..=(len - size) / stride).map(|i| i * stride).collect())
}

pub fn segment_windows(recording: &Recording, size: usize, stride: usize) -> Result<Vec<Window>> {
    let starts = window_starts(recording.len(), size, stride)?;
    Ok(starts
        .into_iter()
        .enumerate()
        .map(|(index, start)| Window {
            subject_id: recording.subject_id,
            label: recording.label,
            index,
            start,
            samples: recording
                .channels
                .iter()
                .map(|ch| ch[start..start + size].to_vec())
                .collect(),
        })
        .collect())
}
