//! Text serialization of a trained two-branch model.
//!
//! ```text
//! CAUSE-MODEL 1
//! <n_users> <n_items> <d>
//! LAYOUT <shared_users 0|1> <pooled_items 0|1>
//! GAMMA_C <rows> <cols>
//! <one line of cols values per row>
//! ...
//! ```
//!
//! Blocks follow in the fixed order of [`BLOCKS`]. Values use the shortest
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;

use cause_core::model::{Branch, EmbeddingModel, Layout};

pub const MAGIC: &str = "CAUSE-MODEL 1";

/// Block names in file order: the control branch, then the treatment branch.
pub const BLOCKS: [&str; 12] = [
    "GAMMA_C",
    "THETA_C",
    "USER_BIAS_C",
    "ITEM_BIAS_C",
    "GLOBAL_BIAS_C",
    "ALPHA_C",
    "GAMMA_T",
    "THETA_T",
    "USER_BIAS_T",
    "ITEM_BIAS_T",
    "GLOBAL_BIAS_T",
    "ALPHA_T",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("model file line {line}: {message}")]
pub struct ModelParseError {
    pub line: usize,
    pub message: String,
}

fn push_block(s: &mut String, name: &str, values: &[f64], cols: usize) {
    let rows = values.len() / cols;
    let _ = writeln!(s, "{name} {rows} {cols}");
    for row in values.chunks_exact(cols) {
        let mut first = true;
        for v in row {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{v:e}");
        }
        s.push('\n');
    }
}

fn push_branch(s: &mut String, b: &Branch, d: usize, suffix: &str) {
    push_block(s, &format!("GAMMA_{suffix}"), &b.gamma, d);
    push_block(s, &format!("THETA_{suffix}"), &b.theta, d);
    push_block(s, &format!("USER_BIAS_{suffix}"), &b.user_bias, 1);
    push_block(s, &format!("ITEM_BIAS_{suffix}"), &b.item_bias, 1);
    push_block(s, &format!("GLOBAL_BIAS_{suffix}"), &[b.global_bias], 1);
    push_block(s, &format!("ALPHA_{suffix}"), &[b.alpha], 1);
}

pub fn to_text(m: &EmbeddingModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "{} {} {}", m.n_users, m.n_items, m.d);
    let _ = writeln!(
        s,
        "LAYOUT {} {}",
        u8::from(m.layout.shared_users),
        u8::from(m.layout.pooled_items)
    );
    push_branch(&mut s, &m.control, m.d, "C");
    push_branch(&mut s, &m.treatment, m.d, "T");
    s
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn next(&mut self) -> Result<&'a str, ModelParseError> {
        match self.lines.next() {
            Some((k, l)) => {
                self.line = k + 1;
                Ok(l.trim_end_matches('\r'))
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> ModelParseError {
        ModelParseError {
            line: self.line.max(1),
            message: message.into(),
        }
    }

    fn numbers<T: std::str::FromStr>(&self, text: &str, n: usize) -> Result<Vec<T>, ModelParseError> {
        let v: Vec<T> = text
            .split_ascii_whitespace()
            .map(|t| t.parse().map_err(|_| self.err(format!("cannot parse `{t}`"))))
            .collect::<Result<_, _>>()?;
        if v.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", v.len())));
        }
        Ok(v)
    }

    fn block(&mut self, name: &str, rows: usize, cols: usize) -> Result<Vec<f64>, ModelParseError> {
        let header = self.next()?;
        let mut parts = header.splitn(2, ' ');
        if parts.next() != Some(name) {
            return Err(self.err(format!("expected block `{name}`, found `{header}`")));
        }
        let shape: Vec<usize> = self.numbers(parts.next().unwrap_or(""), 2)?;
        if shape != [rows, cols] {
            return Err(self.err(format!(
                "block `{name}` must be {rows}x{cols}, found {}x{}",
                shape[0], shape[1]
            )));
        }
        let mut out = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = self.next()?;
            out.extend(self.numbers::<f64>(line, cols)?);
        }
        Ok(out)
    }

    fn branch(&mut self, suffix: &str, n_users: usize, n_items: usize, d: usize) -> Result<Branch, ModelParseError> {
        Ok(Branch {
            gamma: self.block(&format!("GAMMA_{suffix}"), n_users, d)?,
            theta: self.block(&format!("THETA_{suffix}"), n_items, d)?,
            user_bias: self.block(&format!("USER_BIAS_{suffix}"), n_users, 1)?,
            item_bias: self.block(&format!("ITEM_BIAS_{suffix}"), n_items, 1)?,
            global_bias: self.block(&format!("GLOBAL_BIAS_{suffix}"), 1, 1)?[0],
            alpha: self.block(&format!("ALPHA_{suffix}"), 1, 1)?[0],
        })
    }
}

pub fn from_text(text: &str) -> Result<EmbeddingModel, ModelParseError> {
    let mut r = Reader {
        lines: text.lines().enumerate(),
        line: 0,
    };
    let magic = r.next()?;
    if magic != MAGIC {
        return Err(r.err(format!("expected `{MAGIC}`, found `{magic}`")));
    }
    let dims_line = r.next()?;
    let dims: Vec<usize> = r.numbers(dims_line, 3)?;
    let (n_users, n_items, d) = (dims[0], dims[1], dims[2]);
    if d == 0 {
        return Err(r.err("dimension must be positive"));
    }
    let layout_line = r.next()?;
    let flags = layout_line
        .strip_prefix("LAYOUT ")
        .ok_or_else(|| r.err(format!("expected `LAYOUT`, found `{layout_line}`")))?;
    let flags: Vec<u8> = r.numbers(flags, 2)?;
    if flags.iter().any(|&f| f > 1) {
        return Err(r.err("layout flags must be 0 or 1"));
    }
    let control = r.branch("C", n_users, n_items, d)?;
    let treatment = r.branch("T", n_users, n_items, d)?;
    if let Some((k, extra)) = r.lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(ModelParseError {
            line: k + 1,
            message: format!("trailing content `{extra}`"),
        });
    }
    Ok(EmbeddingModel {
        n_users,
        n_items,
        d,
        control,
        treatment,
        layout: Layout {
            shared_users: flags[0] == 1,
            pooled_items: flags[1] == 1,
        },
    })
}
