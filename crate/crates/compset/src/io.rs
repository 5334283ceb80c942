//! Readers and writers for the on-disk formats: pages JSONL, glyph-box
//! JSONL, wordlist and attribution TSV, training-log JSONL, and the model
//! JSON document.
//!
//! Model weights serialize sparsely by feature name (zeros skipped) so a
//! model file stays valid across runs that intern features in a different
//! order. Loading resolves names against the caller's candidate table.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AlignedPair, GlyphBox, Page};
use crate::error::{Error, Result};
use crate::eval::Attribution;
use crate::model::{BasicProbs, CandidateTable, ModelParams, OrthoMode};

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Runs `f` on each nonblank line with its 1-based line number.
fn for_each_line<F>(path: &Path, mut f: F) -> Result<()>
where
    F: FnMut(usize, &str) -> Result<()>,
{
    let reader = open_reader(path)?;
    for (index, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        f(index + 1, &line)?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct PageRecord {
    page_id: String,
    pairs: Vec<(String, String)>,
    #[serde(default)]
    spacings: Vec<u32>,
}

pub fn read_pages(path: &Path) -> Result<Vec<Page>> {
    let mut pages = Vec::new();
    for_each_line(path, |lineno, line| {
        let record: PageRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        pages.push(Page {
            page_id: record.page_id,
            pairs: record
                .pairs
                .into_iter()
                .map(|(m, d)| AlignedPair::new(m, d))
                .collect(),
            spacings: record.spacings,
        });
        Ok(())
    })?;
    Ok(pages)
}

pub fn write_pages(path: &Path, pages: &[Page]) -> Result<()> {
    let mut out = open_writer(path)?;
    for page in pages {
        let record = PageRecord {
            page_id: page.page_id.clone(),
            pairs: page
                .pairs
                .iter()
                .map(|p| (p.modern.clone(), p.diplomatic.clone()))
                .collect(),
            spacings: page.spacings.clone(),
        };
        let json = serde_json::to_string(&record).expect("page record serializes");
        writeln!(out, "{json}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct GlyphRecord {
    page: String,
    line: u32,
    glyph: String,
    x0: u32,
    x1: u32,
}

pub fn read_glyph_boxes(path: &Path) -> Result<Vec<GlyphBox>> {
    let mut boxes = Vec::new();
    for_each_line(path, |lineno, line| {
        let record: GlyphRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        let mut chars = record.glyph.chars();
        let glyph = match (chars.next(), chars.next()) {
            (Some(g), None) => g,
            _ => {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("glyph {:?} is not a single character", record.glyph),
                ))
            }
        };
        if record.x1 < record.x0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("x1 {} precedes x0 {}", record.x1, record.x0),
            ));
        }
        boxes.push(GlyphBox {
            glyph,
            page_id: record.page,
            line_index: record.line,
            x_start: record.x0,
            x_end: record.x1,
        });
        Ok(())
    })?;
    Ok(boxes)
}

pub fn write_glyph_boxes(path: &Path, boxes: &[GlyphBox]) -> Result<()> {
    let mut out = open_writer(path)?;
    for b in boxes {
        let record = GlyphRecord {
            page: b.page_id.clone(),
            line: b.line_index,
            glyph: b.glyph.to_string(),
            x0: b.x_start,
            x1: b.x_end,
        };
        let json = serde_json::to_string(&record).expect("glyph record serializes");
        writeln!(out, "{json}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// TSV: modern word, tab, comma-joined diplomatic candidates.
pub fn read_wordlist(path: &Path) -> Result<crate::features::WordList> {
    let mut entries: Vec<(String, Vec<String>)> = Vec::new();
    for_each_line(path, |lineno, line| {
        let (word, candidates) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected two tab-separated fields"))?;
        let forms: Vec<String> = candidates
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(str::to_string)
            .collect();
        if word.trim().is_empty() || forms.is_empty() {
            return Err(Error::parse(path, lineno, "empty word or candidate list"));
        }
        entries.push((word.trim().to_string(), forms));
        Ok(())
    })?;
    Ok(crate::features::WordList::from_entries(
        entries.into_iter().map(|(m, ds)| (m, ds.into_iter())),
    ))
}

pub fn write_wordlist(path: &Path, wordlist: &crate::features::WordList) -> Result<()> {
    let mut out = open_writer(path)?;
    for (word, candidates) in wordlist.iter() {
        let joined: Vec<&str> = candidates.iter().map(String::as_str).collect();
        writeln!(out, "{word}\t{}", joined.join(",")).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// TSV: page id, tab, cluster index or gold class label.
pub fn read_attribution(path: &Path) -> Result<Attribution> {
    let mut labels = BTreeMap::new();
    for_each_line(path, |lineno, line| {
        let (page, label) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, lineno, "expected two tab-separated fields"))?;
        let page = page.trim();
        let label = label.trim();
        if page.is_empty() || label.is_empty() {
            return Err(Error::parse(path, lineno, "empty page id or label"));
        }
        if labels.insert(page.to_string(), label.to_string()).is_some() {
            return Err(Error::parse(
                path,
                lineno,
                format!("page {page:?} listed twice"),
            ));
        }
        Ok(())
    })?;
    Ok(Attribution { labels })
}

pub fn write_attribution(path: &Path, attribution: &Attribution) -> Result<()> {
    let mut out = open_writer(path)?;
    for (page, label) in &attribution.labels {
        writeln!(out, "{page}\t{label}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct TrainingLogRecord {
    pub restart: usize,
    pub iter: usize,
    pub ll: f64,
}

/// One JSONL record per (restart, iteration); `iter` is 1-based.
pub fn write_training_log(path: &Path, traces: &[Vec<f64>]) -> Result<()> {
    let mut out = open_writer(path)?;
    for (restart, trace) in traces.iter().enumerate() {
        for (i, &ll) in trace.iter().enumerate() {
            let record = TrainingLogRecord {
                restart,
                iter: i + 1,
                ll,
            };
            let json = serde_json::to_string(&record).expect("log record serializes");
            writeln!(out, "{json}").map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_training_log(path: &Path) -> Result<Vec<TrainingLogRecord>> {
    let mut records = Vec::new();
    for_each_line(path, |lineno, line| {
        let record: TrainingLogRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        records.push(record);
        Ok(())
    })?;
    Ok(records)
}

fn default_spacing_exponent() -> f64 {
    1.0
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "C")]
    num_compositors: usize,
    s_max: u32,
    ortho_mode: OrthoMode,
    prior: Vec<f64>,
    theta: Vec<Vec<f64>>,
    /// Per compositor, feature name to weight; zero weights omitted.
    weights: Vec<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    basic_probs: Vec<BasicProbs>,
    #[serde(default = "default_spacing_exponent")]
    spacing_exponent: f64,
}

pub fn save_model(path: &Path, params: &ModelParams, table: &CandidateTable) -> Result<()> {
    let names = table.registry().names();
    let weights = params
        .weights
        .iter()
        .map(|w| {
            w.iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (names[i].clone(), *v))
                .collect()
        })
        .collect();
    let file = ModelFile {
        num_compositors: params.num_compositors,
        s_max: params.s_max,
        ortho_mode: params.ortho_mode,
        prior: params.prior.clone(),
        theta: params.theta.clone(),
        weights,
        basic_probs: params.basic_probs.clone(),
        spacing_exponent: params.spacing_exponent,
    };
    let mut out = open_writer(path)?;
    serde_json::to_writer_pretty(&mut out, &file).map_err(|e| match e.io_error_kind() {
        Some(kind) => Error::io(path, kind.into()),
        None => Error::parse(path, 0, e.to_string()),
    })?;
    writeln!(out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Rebuilds dense weight vectors against `table`'s feature registry. Every
/// named feature must resolve; a miss means the model was trained with a
/// different wordlist or feature set than the table provides.
pub fn load_model(path: &Path, table: &CandidateTable) -> Result<ModelParams> {
    let reader = open_reader(path)?;
    let file: ModelFile =
        serde_json::from_reader(reader).map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
    if file.prior.len() != file.num_compositors
        || file.theta.len() != file.num_compositors
        || file.weights.len() != file.num_compositors
    {
        return Err(Error::parse(
            path,
            0,
            format!(
                "C={} but prior/theta/weights have lengths {}/{}/{}",
                file.num_compositors,
                file.prior.len(),
                file.theta.len(),
                file.weights.len()
            ),
        ));
    }
    let width = file.s_max as usize + 1;
    if let Some(row) = file.theta.iter().find(|row| row.len() != width) {
        return Err(Error::parse(
            path,
            0,
            format!("theta row has {} entries, expected {width}", row.len()),
        ));
    }
    let mut weights = vec![vec![0.0; table.num_features()]; file.num_compositors];
    for (c, row) in file.weights.iter().enumerate() {
        for (name, value) in row {
            let id = table.registry().lookup(name).ok_or_else(|| {
                Error::parse(
                    path,
                    0,
                    format!("feature {name:?} not present in the candidate table"),
                )
            })?;
            weights[c][id.index()] = *value;
        }
    }
    let params = ModelParams {
        num_compositors: file.num_compositors,
        s_max: file.s_max,
        ortho_mode: file.ortho_mode,
        prior: file.prior,
        weights,
        theta: file.theta,
        basic_probs: file.basic_probs,
        spacing_exponent: file.spacing_exponent,
    };
    params.validate()?;
    Ok(params)
}
