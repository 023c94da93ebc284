use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::layout::ElectrodeLayout;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    Control,
    Patient,
}

impl Label {
    pub fn class(self) -> usize {
        match self {
            Label::Control => 0,
            Label::Patient => 1,
        }
    }

    pub fn from_class(class: usize) -> Option<Self> {
        match class {
            0 => Some(Label::Control),
            1 => Some(Label::Patient),
            _ => None,
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.class() as u8
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Label::from_class(v as usize).ok_or_else(|| format!("label must be 0 or 1, got {v}"))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.class())
    }
}

/// One subject's multichannel signal, channels in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: u32,
    pub label: Label,
    pub fs_hz: f64,
    pub channel_names: Vec<String>,
    pub channels: Vec<Vec<f64>>,
}

impl Recording {
    /// Builds a recording whose channel names match the layout exactly and
    /// whose channels all have the same nonzero length.
    pub fn new(
        subject_id: u32,
        label: Label,
        fs_hz: f64,
        layout: &ElectrodeLayout,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(fs_hz > 0.0 && fs_hz.is_finite()) {
            return Err(CoreError::SamplingRate {
                expected: fs_hz,
                got: fs_hz,
            });
        }
        let names: Vec<String> = layout.names().map(str::to_string).collect();
        if channels.len() < names.len() {
            return Err(CoreError::MissingChannel(names[channels.len()].clone()));
        }
        if channels.len() > names.len() {
            return Err(CoreError::UnknownChannel(format!("#{}", names.len())));
        }
        let len = channels[0].len();
        for (name, ch) in names.iter().zip(&channels) {
            if ch.len() != len {
                return Err(CoreError::RaggedChannel {
                    channel: name.clone(),
                    expected: len,
                    got: ch.len(),
                });
            }
        }
        if len == 0 {
            return Err(CoreError::RecordingTooShort { len, window: 1 });
        }
        Ok(Self {
            subject_id,
            label,
            fs_hz,
            channel_names: names,
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.fs_hz
    }
}
