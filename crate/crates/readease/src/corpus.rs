//! Streaming corpus readers.
//!
//! Two input shapes are supported. `jsonl` holds one JSON object per line
//! with fields `id`, `text` (required), `lang`, `lat`, `lon` (optional;
//! unknown fields ignored). `lines` is plain text where each line is a
//! message body and the 1-based line number becomes the id; such messages
//! have no language tag and no location. Readers hold one line in memory at
//! a time.
//!
//! Malformed jsonl lines, including records with junk coordinates, are
//! skipped and counted rather than aborting the run: a counting invariant,
//! read = emitted + skipped + filtered, is maintained by the pipeline so no
//! message silently disappears.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::geo::GeoPoint;

/// Corpus input shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    #[default]
    Jsonl,
    Lines,
}

/// One message, normalized from either input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: String,
    pub text: String,
    /// BCP-47-ish tag as found in the record, if any. Compared exactly.
    pub lang: Option<String>,
    pub geo: Option<GeoPoint>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to open corpus {path:?}: {source}")]
    Open {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("failed to read corpus line {line}: {source}")]
    Read { line: u64, source: std::io::Error },
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
}

/// Streaming reader over a corpus file; an iterator of well-formed
/// [`Message`]s that counts what it reads and skips.
pub struct MessageReader<R: BufRead> {
    lines: std::io::Lines<R>,
    format: CorpusFormat,
    line_no: u64,
    read: u64,
    skipped: u64,
    io_error: Option<CorpusError>,
}

/// Opens `path` for streaming. Open failures are fatal; per-line problems
/// are counted as the stream is consumed.
pub fn read_messages(
    path: &Path,
    format: CorpusFormat,
) -> Result<MessageReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Open {
        path: path.to_owned(),
        source,
    })?;
    Ok(MessageReader::new(BufReader::new(file), format))
}

impl<R: BufRead> MessageReader<R> {
    pub fn new(reader: R, format: CorpusFormat) -> Self {
        Self {
            lines: reader.lines(),
            format,
            line_no: 0,
            read: 0,
            skipped: 0,
            io_error: None,
        }
    }

    /// Lines consumed so far.
    pub fn read_count(&self) -> u64 {
        self.read
    }

    /// Malformed lines dropped so far.
    pub fn skipped_count(&self) -> u64 {
        self.skipped
    }

    /// I/O failure that ended the stream early, if any. Check after
    /// exhausting the iterator.
    pub fn take_io_error(&mut self) -> Option<CorpusError> {
        self.io_error.take()
    }

    fn parse_jsonl(&self, line: &str) -> Option<Message> {
        let raw: RawRecord = serde_json::from_str(line).ok()?;
        let geo = match (raw.lat, raw.lon) {
            (Some(lat), Some(lon)) => {
                let p = GeoPoint { lat, lon };
                if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                    return None;
                }
                Some(p)
            }
            (None, None) => None,
            // one coordinate without the other is junk
            _ => return None,
        };
        Some(Message {
            id: raw.id,
            text: raw.text,
            lang: raw.lang,
            geo,
        })
    }
}

impl<R: BufRead> Iterator for MessageReader<R> {
    type Item = Message;

    fn next(&mut self) -> Option<Message> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(source) => {
                    self.io_error = Some(CorpusError::Read {
                        line: self.line_no + 1,
                        source,
                    });
                    return None;
                }
            };
            self.line_no += 1;
            self.read += 1;
            match self.format {
                CorpusFormat::Lines => {
                    return Some(Message {
                        id: self.line_no.to_string(),
                        text: line,
                        lang: None,
                        geo: None,
                    });
                }
                CorpusFormat::Jsonl => match self.parse_jsonl(&line) {
                    Some(m) => return Some(m),
                    None => self.skipped += 1,
                },
            }
        }
    }
}

/// Keeps messages whose tag equals `code` exactly ("en" does not match
/// "en-gb"); messages without a tag are dropped.
pub fn filter_lang<'a>(
    messages: impl Iterator<Item = Message> + 'a,
    code: &'a str,
) -> impl Iterator<Item = Message> + 'a {
    messages.filter(move |m| m.lang.as_deref() == Some(code))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reader(data: &str, format: CorpusFormat) -> MessageReader<&[u8]> {
        MessageReader::new(data.as_bytes(), format)
    }

    #[test]
    fn reads_jsonl_records() {
        let data = r#"{"id":"a","text":"hi","lang":"en"}
{"id":"b","text":"yo","lat":40.75,"lon":-74.0}
"#;
        let mut r = reader(data, CorpusFormat::Jsonl);
        let msgs: Vec<Message> = r.by_ref().collect();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].id, "a");
        assert_eq!(msgs[0].lang.as_deref(), Some("en"));
        assert_eq!(msgs[0].geo, None);
        assert_eq!(msgs[1].geo, Some(GeoPoint { lat: 40.75, lon: -74.0 }));
        assert_eq!((r.read_count(), r.skipped_count()), (2, 0));
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let data = r#"{"id":"a","text":"hi","retweets":9,"user":{"name":"x"}}"#;
        let msgs: Vec<Message> = reader(data, CorpusFormat::Jsonl).collect();
        assert_eq!(msgs.len(), 1);
    }

    #[test]
    fn malformed_lines_are_skipped_and_counted() {
        let data = r#"{"id":"a","text":"ok","lang":"en"}
not json at all
{"id":7,"text":"numeric id"}
{"id":"b","lang":"en"}
{"id":"c","text":"lat only","lat":40.0}
{"id":"d","text":"bad lat","lat":95.0,"lon":0.0}
{"id":"e","text":"bad lon","lat":0.0,"lon":-190.5}
{"id":"f","text":"fine","lang":"en"}
"#;
        let mut r = reader(data, CorpusFormat::Jsonl);
        let ids: Vec<String> = r.by_ref().map(|m| m.id).collect();
        assert_eq!(ids, ["a", "f"]);
        assert_eq!(r.read_count(), 8);
        assert_eq!(r.skipped_count(), 6);
        assert_eq!(r.read_count(), ids.len() as u64 + r.skipped_count());
    }

    #[test]
    fn lines_format_numbers_from_one() {
        let mut r = reader("first message\n\nthird\n", CorpusFormat::Lines);
        let msgs: Vec<Message> = r.by_ref().collect();
        assert_eq!(msgs.len(), 3);
        assert_eq!(msgs[0].id, "1");
        assert_eq!(msgs[0].text, "first message");
        assert_eq!(msgs[1], Message { id: "2".into(), text: String::new(), lang: None, geo: None });
        assert_eq!(msgs[2].id, "3");
        assert_eq!(r.skipped_count(), 0);
    }

    #[test]
    fn filter_lang_matches_exactly() {
        let mk = |id: &str, lang: Option<&str>| Message {
            id: id.into(),
            text: String::new(),
            lang: lang.map(str::to_owned),
            geo: None,
        };
        let msgs = vec![
            mk("a", Some("en")),
            mk("b", Some("en-gb")),
            mk("c", None),
            mk("d", Some("fr")),
            mk("e", Some("en")),
        ];
        let kept: Vec<String> = filter_lang(msgs.into_iter(), "en").map(|m| m.id).collect();
        assert_eq!(kept, ["a", "e"]);
    }

    #[test]
    fn missing_file_is_fatal() {
        assert!(matches!(
            read_messages(Path::new("/nonexistent/corpus.jsonl"), CorpusFormat::Jsonl),
            Err(CorpusError::Open { .. })
        ));
    }
}
