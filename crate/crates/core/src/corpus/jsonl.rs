use serde::{Deserialize, Serialize};

use super::{tokenize, GoldCategory, Pos, Sentence, Stopwords, Token};
use crate::error::{Error, Result};

#[derive(Debug, Default, Serialize, Deserialize)]
struct Record {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pos: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
}

/// Reads one `{"text", "pos"?, "category"?}` object per line.
///
/// `id` defaults to the 1-based line number. `pos` may align either with the
/// tokens before stopword removal or with the final tokens. A multi-label
/// `categories` list is accepted as well.
pub fn parse_jsonl(bytes: &[u8], stopwords: &Stopwords) -> Result<Vec<Sentence>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8".into(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse { line: lineno, message };
        let rec: Record = serde_json::from_str(line).map_err(|e| perr(e.to_string()))?;
        let raw = rec.text.ok_or_else(|| perr("missing required field `text`".into()))?;
        let tokens = match rec.pos {
            None => tokenize(&raw, stopwords),
            Some(tags) => align_pos(&raw, &tags, stopwords).map_err(perr)?,
        };
        let annotations = match (rec.category, rec.categories) {
            (Some(c), _) => Some(vec![c.parse::<GoldCategory>().map_err(|e| perr(e.to_string()))?]),
            (None, Some(cs)) => {
                let mut cats = Vec::with_capacity(cs.len());
                for c in cs {
                    let c = c.parse::<GoldCategory>().map_err(|e| perr(e.to_string()))?;
                    if !cats.contains(&c) {
                        cats.push(c);
                    }
                }
                Some(cats)
            }
            (None, None) => None,
        };
        out.push(Sentence {
            id: rec.id.unwrap_or_else(|| lineno.to_string()),
            tokens,
            token_ids: Vec::new(),
            annotations,
        });
    }
    Ok(out)
}

fn align_pos(raw: &str, tags: &[String], stopwords: &Stopwords) -> std::result::Result<Vec<Token>, String> {
    let tags: Vec<Pos> = tags.iter().map(|t| Pos::coarsen(t)).collect();
    let all = tokenize(raw, &Stopwords::none());
    if tags.len() == all.len() {
        return Ok(all
            .into_iter()
            .zip(tags)
            .filter(|(t, _)| !stopwords.contains(&t.norm))
            .map(|(mut t, p)| {
                t.pos = Some(p);
                t
            })
            .collect());
    }
    let kept = tokenize(raw, stopwords);
    if tags.len() == kept.len() {
        return Ok(kept
            .into_iter()
            .zip(tags)
            .map(|(mut t, p)| {
                t.pos = Some(p);
                t
            })
            .collect());
    }
    Err(format!(
        "pos has {} tags but the text has {} tokens ({} after stopword removal)",
        tags.len(),
        all.len(),
        kept.len()
    ))
}

/// Writes sentences in the JSONL form read by [`parse_jsonl`]. Text is the
/// space-joined surviving tokens, so re-parsing reproduces the tokens.
pub fn to_jsonl(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let mut rec = Record { id: Some(s.id.clone()), text: Some(s.text()), ..Record::default() };
        if s.has_pos() {
            rec.pos = Some(s.tokens.iter().map(|t| t.pos.map_or("OTHER", Pos::as_str).to_string()).collect());
        }
        match s.annotations.as_deref() {
            Some([one]) => rec.category = Some(one.name().to_string()),
            Some(many) => rec.categories = Some(many.iter().map(|c| c.name().to_string()).collect()),
            None => {}
        }
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let sw = Stopwords::english();
        let s = parse_jsonl(br#"{"text":"great pizza","category":"Food"}"#, &sw).unwrap();
        assert_eq!(s[0].gold(), Some(GoldCategory::Food));
        assert_eq!(s[0].id, "1");

        let s = parse_jsonl(br#"{"text":"great pizza","pos":["ADJ","NOUN"]}"#, &sw).unwrap();
        assert_eq!(s[0].tokens[0].pos, Some(Pos::Adj));
        assert_eq!(s[0].tokens[1].pos, Some(Pos::Noun));
        assert_eq!(s[0].gold(), None);

        let err = parse_jsonl(br#"{"pos":["NOUN"]}"#, &sw).unwrap_err();
        assert!(err.to_string().contains("text"), "{err}");
    }

    #[test]
    fn pos_alignment() {
        let sw = Stopwords::english();
        // aligned with raw tokens: "the" is dropped together with its tag
        let s = parse_jsonl(br#"{"text":"the pizza","pos":["DET","NOUN"]}"#, &sw).unwrap();
        assert_eq!(s[0].tokens.len(), 1);
        assert_eq!(s[0].tokens[0].pos, Some(Pos::Noun));
        // aligned with kept tokens
        let s = parse_jsonl(br#"{"text":"the pizza","pos":["NOUN"]}"#, &sw).unwrap();
        assert_eq!(s[0].tokens[0].pos, Some(Pos::Noun));
        let err =
            parse_jsonl(b"\n{\"text\":\"great pizza\",\"pos\":[\"ADJ\",\"NOUN\",\"X\"]}", &sw).unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("3 tags"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_category() {
        let err = parse_jsonl(br#"{"text":"x","category":"Decor"}"#, &Stopwords::none());
        assert!(err.is_err());
    }

    fn arb_sentence() -> impl Strategy<Value = Sentence> {
        let word = "[a-z]{1,6}(-[a-z]{1,4})?";
        (
            "[A-Za-z0-9_]{1,8}",
            prop::collection::vec((word, prop::option::of(0..4usize)), 1..8),
            prop::option::of(prop::collection::vec(0..5usize, 0..3)),
            any::<bool>(),
        )
            .prop_map(|(id, words, cats, tagged)| {
                let tokens = words
                    .into_iter()
                    .map(|(w, p)| {
                        let mut t = Token::new(w);
                        if tagged {
                            t.pos = Some([Pos::Noun, Pos::Adj, Pos::Verb, Pos::Other][p.unwrap_or(3)]);
                        }
                        t
                    })
                    .collect();
                let annotations = cats.map(|cs| {
                    let mut v: Vec<GoldCategory> = Vec::new();
                    for c in cs {
                        if !v.contains(&GoldCategory::ALL[c]) {
                            v.push(GoldCategory::ALL[c]);
                        }
                    }
                    v
                });
                Sentence { id, tokens, token_ids: Vec::new(), annotations }
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip(sentences in prop::collection::vec(arb_sentence(), 0..6)) {
            let text = to_jsonl(&sentences);
            let back = parse_jsonl(text.as_bytes(), &Stopwords::none()).unwrap();
            prop_assert_eq!(back, sentences);
        }
    }
}
