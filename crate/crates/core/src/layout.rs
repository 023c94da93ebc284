//! Electrode placement on the scalp raster.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub const GRID_SIZE: usize = 15;
pub const N_ELECTRODES: usize = 34;

const DEFAULT_LAYOUT: &str = include_str!("../layouts/default_34.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Electrode {
    pub name: String,
    pub row: usize,
    pub col: usize,
}

/// Validated set of 34 named electrodes at distinct pixels of a 15×15 grid.
/// Entry order defines channel order everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElectrodeLayout {
    entries: Vec<Electrode>,
    grid_height: usize,
    grid_width: usize,
}

impl ElectrodeLayout {
    pub fn new(entries: Vec<Electrode>) -> Result<Self> {
        if entries.len() != N_ELECTRODES {
            return Err(CoreError::LayoutCount {
                found: entries.len(),
                expected: N_ELECTRODES,
            });
        }
        let mut names: HashMap<&str, usize> = HashMap::new();
        let mut pixels: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            if e.row >= GRID_SIZE || e.col >= GRID_SIZE {
                return Err(out_of_range(&e.name, e.row as i64, e.col as i64));
            }
            if names.insert(e.name.as_str(), i).is_some() {
                return Err(CoreError::DuplicateName(e.name.clone()));
            }
            if let Some(first) = pixels.insert((e.row, e.col), i) {
                return Err(CoreError::DuplicatePixel {
                    first: entries[first].name.clone(),
                    second: e.name.clone(),
                    row: e.row,
                    col: e.col,
                });
            }
        }
        Ok(Self {
            entries,
            grid_height: GRID_SIZE,
            grid_width: GRID_SIZE,
        })
    }

    /// Parses `name,row,col` lines; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| CoreError::LayoutParse {
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected name,row,col, got {line:?}")));
            }
            if fields[0].is_empty() {
                return Err(parse_err("empty electrode name".into()));
            }
            let coord = |s: &str| {
                s.parse::<i64>()
                    .map_err(|_| parse_err(format!("{s:?} is not an integer coordinate")))
            };
            let (row, col) = (coord(fields[1])?, coord(fields[2])?);
            if !(0..GRID_SIZE as i64).contains(&row) || !(0..GRID_SIZE as i64).contains(&col) {
                return Err(out_of_range(fields[0], row, col));
            }
            entries.push(Electrode {
                name: fields[0].to_string(),
                row: row as usize,
                col: col as usize,
            });
        }
        Self::new(entries)
    }

    pub fn default_layout() -> Self {
        Self::parse(DEFAULT_LAYOUT).expect("bundled layout is valid")
    }

    pub fn entries(&self) -> &[Electrode] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn grid_height(&self) -> usize {
        self.grid_height
    }

    pub fn grid_width(&self) -> usize {
        self.grid_width
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    pub fn pixels(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.row, e.col)).collect()
    }

    /// Serializes back to the text format accepted by [`ElectrodeLayout::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# name,row,col\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.name, e.row, e.col));
        }
        out
    }
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<ElectrodeLayout> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| CoreError::io(path, e))?;
    ElectrodeLayout::parse(&text)
}

fn out_of_range(name: &str, row: i64, col: i64) -> CoreError {
    CoreError::OutOfRange {
        name: name.to_string(),
        row,
        col,
        height: GRID_SIZE,
        width: GRID_SIZE,
    }
}
