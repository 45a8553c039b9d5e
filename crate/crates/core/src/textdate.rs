//! Date-as-text baselines: injecting dates into the text before encoding.
//!
//! * Tag: queries get their date mention wrapped in place as
//!   `[S-DATE] <mention> [E-DATE]`; passages get ` [S-DATE] <date> [E-DATE]`
//!   appended.
//! * Token: both get ` [SEP] <date>` appended.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{render_passage_input, Passage, Query, SEP_TOKEN};
use crate::error::{Error, Result};
use crate::routing::find_date_mentions;

pub const START_DATE: &str = "[S-DATE]";
pub const END_DATE: &str = "[E-DATE]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InjectionMode {
    #[default]
    None,
    Tag,
    Token,
}

impl fmt::Display for InjectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::None => "none",
            Self::Tag => "tag",
            Self::Token => "token",
        })
    }
}

impl FromStr for InjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "tag" => Ok(Self::Tag),
            "token" => Ok(Self::Token),
            other => Err(Error::InvalidArgument(format!("unknown injection mode {other:?}"))),
        }
    }
}

fn has_markers(s: &str) -> bool {
    s.contains(START_DATE) || s.contains(END_DATE) || s.contains(SEP_TOKEN)
}

pub fn inject_query(q: &Query, mode: InjectionMode) -> Result<String> {
    if mode == InjectionMode::None {
        return Ok(q.text.clone());
    }
    if has_markers(&q.text) {
        return Err(Error::AlreadyInjected(q.text.clone()));
    }
    let date = q.explicit_date.ok_or_else(|| Error::MissingQueryDate(q.id.clone()))?;
    Ok(match mode {
        InjectionMode::Token => format!("{} {SEP_TOKEN} {date}", q.text),
        InjectionMode::Tag => match find_date_mentions(&q.text).first() {
            Some(m) => format!(
                "{}{START_DATE} {} {END_DATE}{}",
                &q.text[..m.span.start],
                &q.text[m.span.clone()],
                &q.text[m.span.end..]
            ),
            None => {
                log::warn!("query {:?}: no date mention found, appending the tagged date", q.id);
                format!("{} {START_DATE} {date} {END_DATE}", q.text)
            }
        },
        InjectionMode::None => unreachable!(),
    })
}

/// Renders `title [SEP] text` and appends the publication date per `mode`.
pub fn inject_passage(p: &Passage, mode: InjectionMode) -> Result<String> {
    if mode != InjectionMode::None && (has_markers(&p.text) || has_markers(&p.title)) {
        return Err(Error::AlreadyInjected(p.id.clone()));
    }
    let base = render_passage_input(p);
    Ok(match mode {
        InjectionMode::None => base,
        InjectionMode::Tag => format!("{base} {START_DATE} {} {END_DATE}", p.pub_date),
        InjectionMode::Token => format!("{base} {SEP_TOKEN} {}", p.pub_date),
    })
}

/// Undoes [`inject_query`] for in-place tags and token suffixes.
pub fn strip_query_injection(text: &str, mode: InjectionMode) -> String {
    match mode {
        InjectionMode::None => text.to_string(),
        InjectionMode::Tag => text
            .replacen(&format!("{START_DATE} "), "", 1)
            .replacen(&format!(" {END_DATE}"), "", 1),
        InjectionMode::Token => match text.rfind(&format!(" {SEP_TOKEN} ")) {
            Some(i) => text[..i].to_string(),
            None => text.to_string(),
        },
    }
}

/// Undoes the date suffix of [`inject_passage`], leaving `title [SEP] text`.
pub fn strip_passage_injection(text: &str, mode: InjectionMode) -> String {
    let marker = match mode {
        InjectionMode::None => return text.to_string(),
        InjectionMode::Tag => format!(" {START_DATE} "),
        InjectionMode::Token => format!(" {SEP_TOKEN} "),
    };
    match text.rfind(&marker) {
        Some(i) => text[..i].to_string(),
        None => text.to_string(),
    }
}
