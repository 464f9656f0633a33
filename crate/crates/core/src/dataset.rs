//! Line-delimited JSON dataset files: a header line, then one video per line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthworld::{Scenario, ScenarioConfig};

pub const DATASET_FORMAT: &str = "riskrnn-dataset";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub split: String,
    pub videos: usize,
    pub scenario: ScenarioConfig,
}

impl DatasetHeader {
    pub fn new(split: &str, videos: usize, scenario: ScenarioConfig) -> Self {
        Self {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            split: split.into(),
            videos,
            scenario,
        }
    }
}

pub fn write_dataset<W: Write>(
    mut out: W,
    header: &DatasetHeader,
    videos: &[Scenario],
) -> Result<()> {
    if header.videos != videos.len() {
        return Err(Error::Config(format!(
            "header announces {} videos, {} given",
            header.videos,
            videos.len()
        )));
    }
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n")?;
    for v in videos {
        serde_json::to_writer(&mut out, v)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<(DatasetHeader, Vec<Scenario>)> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty dataset file".into(),
    })?;
    let header: DatasetHeader = serde_json::from_str(&first?).map_err(|e| Error::Parse {
        line: 1,
        msg: format!("bad header: {e}"),
    })?;
    if header.format != DATASET_FORMAT || header.version != DATASET_VERSION {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "unsupported dataset {} v{} (expected {DATASET_FORMAT} v{DATASET_VERSION})",
                header.format, header.version
            ),
        });
    }
    let mut videos = Vec::with_capacity(header.videos);
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Scenario = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        videos.push(v);
    }
    if videos.len() != header.videos {
        return Err(Error::Parse {
            line: videos.len() + 1,
            msg: format!(
                "header announces {} videos, file holds {}",
                header.videos,
                videos.len()
            ),
        });
    }
    Ok((header, videos))
}
