//! Append-only tuning checkpoint.
//!
//! ```text
//! format=skucast-tune<TAB>version=1<TAB>sku=…<TAB>seed=…<TAB>space=<sha256><TAB>check=…
//! trial=0<TAB>changepoint_prior_scale=…<TAB>…<TAB>mape=…<TAB>check=…
//! ```
//!
//! Every line ends with a checksum of its own content, so a torn or edited
//! line is detected on load.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::search::TrialRecord;
use crate::domain::SkuId;
use crate::error::{Error, Result};
use crate::model::Hyperparameters;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "skucast-tune";

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn seal(body: String) -> String {
    let check = &sha256_hex(body.as_bytes())[..16];
    format!("{body}\tcheck={check}\n")
}

/// An open checkpoint positioned for appending.
#[derive(Debug)]
pub struct Checkpoint {
    path: PathBuf,
    file: File,
}

impl Checkpoint {
    /// Open or create the checkpoint at `path` and return the trials it
    /// already holds. An existing file must carry the same SKU, seed and
    /// search fingerprint.
    pub fn open(path: &Path, sku: &SkuId, seed: u64, fingerprint: &str) -> Result<(Checkpoint, Vec<TrialRecord>)> {
        if sku.as_str().contains(['\t', '\n', '\r']) {
            return Err(Error::Config(format!("sku {sku:?} cannot be stored in a checkpoint")));
        }
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let records = if text.is_empty() {
            let mut file = File::create(path)?;
            let header = seal(format!(
                "format={MAGIC}\tversion={CHECKPOINT_VERSION}\tsku={sku}\tseed={seed}\tspace={fingerprint}"
            ));
            file.write_all(header.as_bytes())?;
            file.flush()?;
            Vec::new()
        } else {
            parse(path, &text, sku, seed, fingerprint)?
        };
        let file = OpenOptions::new().append(true).open(path)?;
        Ok((Checkpoint { path: path.to_path_buf(), file }, records))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &TrialRecord) -> Result<()> {
        self.file.write_all(encode(record).as_bytes())?;
        self.file.flush()?;
        Ok(())
    }
}

fn encode(r: &TrialRecord) -> String {
    let hp = &r.hp;
    seal(format!(
        "trial={}\tchangepoint_prior_scale={}\tseasonality_prior_scale={}\tholidays_prior_scale={}\t\
         seasonality_mode={}\tchangepoint_range={}\tn_changepoints={}\tmape={}",
        r.index,
        hp.changepoint_prior_scale,
        hp.seasonality_prior_scale,
        hp.holidays_prior_scale,
        hp.seasonality_mode,
        hp.changepoint_range,
        hp.n_changepoints,
        r.mape
    ))
}

/// Split a sealed line into its `key=value` fields, verifying the
/// checksum.
fn unseal(line: &str) -> std::result::Result<Vec<(&str, &str)>, String> {
    let (body, check) = line.rsplit_once("\tcheck=").ok_or("missing checksum")?;
    if sha256_hex(body.as_bytes())[..16] != *check {
        return Err("checksum mismatch".into());
    }
    body.split('\t').map(|f| f.split_once('=').ok_or_else(|| format!("field '{f}' is not key=value"))).collect()
}

fn expect_fields<'a>(fields: &[(&'a str, &'a str)], keys: &[&str]) -> std::result::Result<Vec<&'a str>, String> {
    if fields.len() != keys.len() || fields.iter().zip(keys).any(|((k, _), e)| k != e) {
        let got: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
        return Err(format!("expected fields {keys:?}, got {got:?}"));
    }
    Ok(fields.iter().map(|(_, v)| *v).collect())
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("bad {key} value '{v}'"))
}

fn parse(path: &Path, text: &str, sku: &SkuId, seed: u64, fingerprint: &str) -> Result<Vec<TrialRecord>> {
    let corrupt = |line: usize, message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        message: format!("line {line}: {message}"),
    };
    if !text.ends_with('\n') {
        let n = text.lines().count();
        return Err(corrupt(n, "last line is incomplete".into()));
    }
    let mut lines = text.lines();
    let header = unseal(lines.next().unwrap_or_default()).map_err(|m| corrupt(1, m))?;
    let h = expect_fields(&header, &["format", "version", "sku", "seed", "space"]).map_err(|m| corrupt(1, m))?;
    if h[0] != MAGIC {
        return Err(corrupt(1, format!("not a tuning checkpoint ({})", h[0])));
    }
    if h[1] != CHECKPOINT_VERSION.to_string() {
        return Err(corrupt(1, format!("unsupported version {}", h[1])));
    }
    if h[2] != sku.as_str() {
        return Err(corrupt(1, format!("checkpoint is for sku {}, not {sku}", h[2])));
    }
    if h[3] != seed.to_string() {
        return Err(corrupt(1, format!("checkpoint was written with seed {}, this run uses seed {seed}", h[3])));
    }
    if h[4] != fingerprint {
        return Err(corrupt(1, "search space or CV settings differ from the checkpoint".into()));
    }

    let keys = [
        "trial",
        "changepoint_prior_scale",
        "seasonality_prior_scale",
        "holidays_prior_scale",
        "seasonality_mode",
        "changepoint_range",
        "n_changepoints",
        "mape",
    ];
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let rec = (|| {
            let fields = unseal(line)?;
            let v = expect_fields(&fields, &keys)?;
            let index: usize = num(keys[0], v[0])?;
            if index != out.len() {
                return Err(format!("expected trial {}, found trial {index}", out.len()));
            }
            Ok(TrialRecord {
                index,
                hp: Hyperparameters {
                    changepoint_prior_scale: num(keys[1], v[1])?,
                    seasonality_prior_scale: num(keys[2], v[2])?,
                    holidays_prior_scale: num(keys[3], v[3])?,
                    seasonality_mode: num(keys[4], v[4])?,
                    changepoint_range: num(keys[5], v[5])?,
                    n_changepoints: num(keys[6], v[6])?,
                },
                mape: num(keys[7], v[7])?,
            })
        })()
        .map_err(|m| corrupt(lineno, m))?;
        out.push(rec);
    }
    Ok(out)
}
