//! Ratings parsing and binarization.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::data::{Dataset, IdMap, Interaction, Origin};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("malformed ratings line {0}")]
    MalformedLine(usize),
    #[error("no ratings to build a dataset from")]
    EmptyInput,
}

/// Field delimiter of a ratings file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatingsFormat {
    /// `user::item::rating::timestamp`
    DoubleColon,
    /// `user,item,rating,timestamp`, optionally with one header line.
    Comma,
}

impl RatingsFormat {
    fn delimiter(self) -> &'static str {
        match self {
            RatingsFormat::DoubleColon => "::",
            RatingsFormat::Comma => ",",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawRating {
    pub user_token: String,
    pub item_token: String,
    pub rating: f64,
    pub timestamp: i64,
}

/// Parses a line-oriented ratings file. Blank lines are ignored; a first line
/// whose rating field is not numeric is treated as a header.
pub fn parse_ratings(text: &str, format: RatingsFormat) -> Result<Vec<RawRating>, IngestError> {
    let delim = format.delimiter();
    let mut out = Vec::new();
    let mut first = true;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let is_first = first;
        first = false;
        let fields: Vec<&str> = line.split(delim).collect();
        if fields.len() != 4 {
            return Err(IngestError::MalformedLine(line_no));
        }
        let rating = match fields[2].trim().parse::<f64>() {
            Ok(r) if r.is_finite() => r,
            _ if is_first && format == RatingsFormat::Comma => continue,
            _ => return Err(IngestError::MalformedLine(line_no)),
        };
        let timestamp = fields[3]
            .trim()
            .parse::<i64>()
            .map_err(|_| IngestError::MalformedLine(line_no))?;
        out.push(RawRating {
            user_token: fields[0].trim().to_string(),
            item_token: fields[1].trim().to_string(),
            rating,
            timestamp,
        });
    }
    Ok(out)
}

/// Five-star ratings are clicks; everything else is a view.
pub fn binarize(rating: f64) -> bool {
    libm::fabs(rating - 5.0) <= 1e-9
}

/// Registers ids in first-appearance order and binarizes every rating. All
/// events start out as control-origin; the splitter reassigns origins.
pub fn build_dataset(raw: &[RawRating]) -> Result<Dataset, IngestError> {
    if raw.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut user_map = IdMap::new();
    let mut item_map = IdMap::new();
    let interactions = raw
        .iter()
        .map(|r| {
            let user = user_map.register(&r.user_token);
            let item = item_map.register(&r.item_token);
            Interaction::new(user, item, binarize(r.rating), Origin::Control)
        })
        .collect();
    Ok(Dataset {
        interactions,
        n_users: user_map.len(),
        n_items: item_map.len(),
        user_map,
        item_map,
    })
}
