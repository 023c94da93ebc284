use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::layout::ElectrodeLayout;
use crate::recording::{Label, Recording};

/// Reads a recording CSV: a header of channel names, then one row per
/// sample instant. Columns may appear in any order and are returned in
/// layout order. A channel that ends early leaves its trailing cells empty.
pub fn load_recording(
    path: impl AsRef<Path>,
    subject_id: u32,
    label: Label,
    fs_hz: f64,
    layout: &ElectrodeLayout,
) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CoreError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .buffer_capacity(1 << 20)
        .from_reader(file);

    let header = reader.headers()?.clone();
    let mut slot_of_column = Vec::with_capacity(header.len());
    let mut seen: HashMap<&str, usize> = HashMap::new();
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        let slot = layout
            .index_of(name)
            .ok_or_else(|| CoreError::UnknownChannel(name.to_string()))?;
        if seen.insert(layout.entries()[slot].name.as_str(), col).is_some() {
            return Err(CoreError::RecordingParse {
                path: path.to_path_buf(),
                row: 1,
                message: format!("channel {name} appears twice in the header"),
            });
        }
        slot_of_column.push(slot);
    }
    if let Some(missing) = layout.names().find(|n| !seen.contains_key(n)) {
        return Err(CoreError::MissingChannel(missing.to_string()));
    }

    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); layout.len()];
    let mut ended = vec![false; layout.len()];
    let mut record = csv::ByteRecord::new();
    let mut row = 1;
    while reader.read_byte_record(&mut record)? {
        row += 1;
        if record.len() > slot_of_column.len() {
            return Err(CoreError::RecordingParse {
                path: path.to_path_buf(),
                row,
                message: format!("{} fields for {} channels", record.len(), slot_of_column.len()),
            });
        }
        for (col, &slot) in slot_of_column.iter().enumerate() {
            let field = record.get(col).unwrap_or(b"");
            let text = std::str::from_utf8(field).unwrap_or("").trim();
            if text.is_empty() {
                ended[slot] = true;
                continue;
            }
            if ended[slot] {
                return Err(CoreError::RecordingParse {
                    path: path.to_path_buf(),
                    row,
                    message: format!("channel {} resumes after a gap", layout.entries()[slot].name),
                });
            }
            let value: f64 = text.parse().map_err(|_| CoreError::RecordingParse {
                path: path.to_path_buf(),
                row,
                message: format!("{text:?} is not a number"),
            })?;
            channels[slot].push(value);
        }
    }
    let longest = channels.iter().map(Vec::len).max().unwrap_or(0);
    for (slot, ch) in channels.iter().enumerate() {
        if ch.len() != longest {
            return Err(CoreError::RaggedChannel {
                channel: layout.entries()[slot].name.clone(),
                expected: longest,
                got: ch.len(),
            });
        }
    }
    Recording::new(subject_id, label, fs_hz, layout, channels)
}

/// Writes a recording in the format read by [`load_recording`], via a
/// temporary file renamed into place. Values use the shortest decimal form
/// that reads back to the same 64-bit float.
pub fn write_recording(path: impl AsRef<Path>, recording: &Recording) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CoreError::io(parent, e))?;
    }
    let tmp = path.with_extension(format!("csv.tmp{}", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut w = BufWriter::with_capacity(1 << 20, File::create(&tmp)?);
        writeln!(w, "{}", recording.channel_names.join(","))?;
        let mut line = String::with_capacity(32 * recording.n_channels());
        for t in 0..recording.len() {
            line.clear();
            for (c, ch) in recording.channels.iter().enumerate() {
                if c > 0 {
                    line.push(',');
                }
                use std::fmt::Write as _;
                let _ = write!(line, "{}", ch[t]);
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        CoreError::io(path, e)
    })
}
