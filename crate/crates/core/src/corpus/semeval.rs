use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{GoldCategory, Sentence, Stopwords};
use crate::error::{Error, Result};

fn line_of(bytes: &[u8], pos: usize) -> usize {
    1 + bytes[..pos.min(bytes.len())].iter().filter(|&&b| b == b'\n').count()
}

fn attr(e: &BytesStart<'_>, name: &str) -> std::result::Result<Option<String>, String> {
    match e.try_get_attribute(name) {
        Ok(Some(a)) => a.unescape_value().map(|v| Some(v.into_owned())).map_err(|err| err.to_string()),
        Ok(None) => Ok(None),
        Err(err) => Err(err.to_string()),
    }
}

/// Reads SemEval-2014 ABSA sentences:
/// `sentences/sentence[@id]/text` plus `aspectCategories/aspectCategory[@category]`.
///
/// Aspect-term spans and polarity attributes are ignored.
pub fn parse_semeval_xml(bytes: &[u8], stopwords: &Stopwords) -> Result<Vec<Sentence>> {
    let mut reader = Reader::from_reader(bytes);
    let mut buf = Vec::new();
    let mut out = Vec::new();

    let mut depth = 0usize;
    let mut current: Option<(String, String, Option<Vec<GoldCategory>>)> = None;
    let mut in_text = false;

    loop {
        let pos = reader.buffer_position() as usize;
        let err = |message: String| Error::Parse { line: line_of(bytes, pos), message };
        let event = reader.read_event_into(&mut buf).map_err(|e| err(e.to_string()))?;
        match event {
            Event::Start(e) => {
                depth += 1;
                match e.name().as_ref() {
                    b"sentence" => {
                        let id = attr(&e, "id").map_err(&err)?.unwrap_or_default();
                        current = Some((id, String::new(), None));
                    }
                    b"text" => in_text = true,
                    b"aspectCategories" => {
                        if let Some(cur) = current.as_mut() {
                            cur.2.get_or_insert_with(Vec::new);
                        }
                    }
                    b"aspectCategory" => push_category(&e, &mut current).map_err(&err)?,
                    _ => {}
                }
            }
            Event::Empty(e) => match e.name().as_ref() {
                b"aspectCategory" => push_category(&e, &mut current).map_err(&err)?,
                b"aspectCategories" => {
                    if let Some(cur) = current.as_mut() {
                        cur.2.get_or_insert_with(Vec::new);
                    }
                }
                _ => {}
            },
            Event::Text(t) if in_text => {
                let text = t.unescape().map_err(|e| err(e.to_string()))?;
                if let Some(cur) = current.as_mut() {
                    cur.1.push_str(&text);
                }
            }
            Event::CData(t) if in_text => {
                if let Some(cur) = current.as_mut() {
                    cur.1.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) => {
                depth = depth.saturating_sub(1);
                match e.name().as_ref() {
                    b"text" => in_text = false,
                    b"sentence" => {
                        if let Some((id, text, annotations)) = current.take() {
                            let mut s = Sentence::from_text(id, &text, stopwords);
                            s.annotations = annotations;
                            out.push(s);
                        }
                    }
                    _ => {}
                }
            }
            Event::Eof => {
                if depth != 0 {
                    return Err(err("unexpected end of document: unclosed element".into()));
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(out)
}

fn push_category(
    e: &BytesStart<'_>,
    current: &mut Option<(String, String, Option<Vec<GoldCategory>>)>,
) -> std::result::Result<(), String> {
    let Some(cur) = current.as_mut() else {
        return Ok(());
    };
    let Some(raw) = attr(e, "category")? else {
        return Err("aspectCategory without a category attribute".into());
    };
    let cat = GoldCategory::from_semeval(&raw)
        .map_err(|_| format!("unknown aspect category `{raw}` in sentence `{}`", cur.0))?;
    let cats = cur.2.get_or_insert_with(Vec::new);
    if !cats.contains(&cat) {
        cats.push(cat);
    }
    Ok(())
}
