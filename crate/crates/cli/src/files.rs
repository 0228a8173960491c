//! Split files: tab-separated events, propensities and id maps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cause_core::data::{Interaction, Origin, PropensityTable, SplitBundle};

use crate::error::{io_error, CliError};

pub const SPLIT_FORMAT: &str = "cause-split-tsv 1";
pub const EVENTS_HEADER: &str = "user\titem\tlabel\torigin";
pub const PROPENSITY_HEADER: &str = "item\tcontrol_prob\tweight";
pub const IDS_HEADER: &str = "index\ttoken";

pub const TRAIN_CONTROL: &str = "train_c.tsv";
pub const TRAIN_TREATMENT: &str = "train_t.tsv";
pub const VALIDATION: &str = "valid.tsv";
pub const TEST: &str = "test.tsv";
pub const PROPENSITY: &str = "propensity.tsv";
pub const USERS: &str = "users.tsv";
pub const ITEMS: &str = "items.tsv";
pub const SPLIT_MANIFEST: &str = "split_manifest.json";

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn events_to_tsv(events: &[Interaction]) -> String {
    let mut s = String::with_capacity(16 * (events.len() + 1));
    s.push_str(EVENTS_HEADER);
    s.push('\n');
    for e in events {
        let _ = writeln!(s, "{}\t{}\t{}\t{}", e.user, e.item, u8::from(e.label), e.origin.code());
    }
    s
}

fn malformed(path: &Path, line: usize, what: &str) -> CliError {
    CliError::runtime(format!("{}: line {line}: {what}", path.display()))
}

fn expect_header<'a>(
    path: &Path,
    text: &'a str,
    header: &str,
) -> Result<std::iter::Enumerate<std::str::Lines<'a>>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end_matches('\r') == header => Ok(lines),
        Some((_, h)) => Err(malformed(path, 1, &format!("expected header `{header}`, found `{h}`"))),
        None => Err(malformed(path, 1, "missing header")),
    }
}

/// Parses an events file, checking every index against the universe size.
pub fn parse_events(path: &Path, text: &str, n_users: usize, n_items: usize) -> Result<Vec<Interaction>, CliError> {
    let mut out = Vec::new();
    for (idx, raw) in expect_header(path, text, EVENTS_HEADER)? {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| malformed(path, idx + 1, what);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 {
            return Err(bad("expected 4 tab-separated fields"));
        }
        let user: u32 = f[0].parse().map_err(|_| bad("bad user index"))?;
        let item: u32 = f[1].parse().map_err(|_| bad("bad item index"))?;
        let label = match f[2] {
            "0" => false,
            "1" => true,
            _ => return Err(bad("label must be 0 or 1")),
        };
        let origin = Origin::from_code(f[3]).ok_or_else(|| bad("origin must be c or t"))?;
        if user as usize >= n_users || item as usize >= n_items {
            return Err(bad("index outside the id maps"));
        }
        out.push(Interaction::new(user, item, label, origin));
    }
    Ok(out)
}

pub fn propensity_to_tsv(table: &PropensityTable) -> String {
    let mut s = String::from(PROPENSITY_HEADER);
    s.push('\n');
    for (j, (p, w)) in table.control_prob.iter().zip(&table.weight).enumerate() {
        let _ = writeln!(s, "{j}\t{p:e}\t{w:e}");
    }
    s
}

pub fn parse_propensity(path: &Path, text: &str, n_items: usize) -> Result<PropensityTable, CliError> {
    let mut control_prob = Vec::with_capacity(n_items);
    let mut weight = Vec::with_capacity(n_items);
    for (idx, raw) in expect_header(path, text, PROPENSITY_HEADER)? {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| malformed(path, idx + 1, what);
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 || f[0].parse::<usize>().ok() != Some(control_prob.len()) {
            return Err(bad("expected `item control_prob weight` with items in order"));
        }
        control_prob.push(f[1].parse::<f64>().map_err(|_| bad("bad control_prob"))?);
        weight.push(f[2].parse::<f64>().map_err(|_| bad("bad weight"))?);
    }
    if control_prob.len() != n_items {
        return Err(CliError::runtime(format!(
            "{}: {} items, id map has {n_items}",
            path.display(),
            control_prob.len()
        )));
    }
    Ok(PropensityTable {
        control_prob,
        treatment_prob: vec![1.0 / n_items as f64; n_items],
        weight,
    })
}

pub fn ids_to_tsv(tokens: &[String]) -> String {
    let mut s = String::from(IDS_HEADER);
    s.push('\n');
    for (k, t) in tokens.iter().enumerate() {
        let _ = writeln!(s, "{k}\t{t}");
    }
    s
}

/// Number of entries in an id map file.
pub fn count_ids(path: &Path, text: &str) -> Result<usize, CliError> {
    let mut n = 0;
    for (idx, raw) in expect_header(path, text, IDS_HEADER)? {
        if raw.trim_end_matches('\r').is_empty() {
            continue;
        }
        let k = raw.split('\t').next().and_then(|k| k.parse::<usize>().ok());
        if k != Some(n) {
            return Err(malformed(path, idx + 1, "ids must be numbered 0, 1, 2, ..."));
        }
        n += 1;
    }
    Ok(n)
}

/// Paths of one prepared split.
#[derive(Clone, Debug)]
pub struct SplitDir(pub PathBuf);

impl SplitDir {
    pub fn file(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }

    pub fn load(&self) -> Result<SplitBundle, CliError> {
        let read = |name: &str| {
            let p = self.file(name);
            read_text(&p)
                .map(|t| (p, t))
                .map_err(|e| e.context("missing split; run `cause prepare` first"))
        };
        let (p, t) = read(USERS)?;
        let n_users = count_ids(&p, &t)?;
        let (p, t) = read(ITEMS)?;
        let n_items = count_ids(&p, &t)?;
        let events = |name: &str| -> Result<Vec<Interaction>, CliError> {
            let (p, t) = read(name)?;
            parse_events(&p, &t, n_users, n_items)
        };
        let (p, t) = read(PROPENSITY)?;
        Ok(SplitBundle {
            train_control: events(TRAIN_CONTROL)?,
            train_treatment: events(TRAIN_TREATMENT)?,
            validation: events(VALIDATION)?,
            test: events(TEST)?,
            propensity: parse_propensity(&p, &t, n_items)?,
            n_users,
            n_items,
        })
    }

    pub fn save(&self, bundle: &SplitBundle, users: &[String], items: &[String]) -> Result<(), CliError> {
        write_text(&self.file(TRAIN_CONTROL), &events_to_tsv(&bundle.train_control))?;
        write_text(&self.file(TRAIN_TREATMENT), &events_to_tsv(&bundle.train_treatment))?;
        write_text(&self.file(VALIDATION), &events_to_tsv(&bundle.validation))?;
        write_text(&self.file(TEST), &events_to_tsv(&bundle.test))?;
        write_text(&self.file(PROPENSITY), &propensity_to_tsv(&bundle.propensity))?;
        write_text(&self.file(USERS), &ids_to_tsv(users))?;
        write_text(&self.file(ITEMS), &ids_to_tsv(items))
    }
}
