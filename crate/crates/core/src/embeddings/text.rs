use super::EmbeddingMatrix;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};

/// `V d` header, then `word v1 … vd` per line. Floats use the shortest
/// representation that parses back to the same value.
pub fn save_text<S: Scalar>(emb: &EmbeddingMatrix<S>) -> String {
    let mut out = format!("{} {}\n", emb.len(), emb.dim());
    for (id, word) in emb.vocab().words().iter().enumerate() {
        out.push_str(word);
        for x in emb.vector(id) {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn load_text<S: Scalar>(bytes: &[u8]) -> Result<EmbeddingMatrix<S>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count(),
        message: "invalid UTF-8".into(),
    })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Empty("embedding file"))?;
    let perr = |line: usize, message: String| Error::Parse { line: line + 1, message };
    let mut fields = header.split_whitespace();
    let (v, d) = match (fields.next(), fields.next(), fields.next()) {
        (Some(v), Some(d), None) => (
            v.parse::<usize>().map_err(|_| perr(0, format!("bad vocabulary size `{v}`")))?,
            d.parse::<usize>().map_err(|_| perr(0, format!("bad dimension `{d}`")))?,
        ),
        _ => return Err(perr(0, "header must be `V d`".into())),
    };

    let mut words = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * d);
    for (i, line) in lines {
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-blank line has a field");
        let before = data.len();
        for f in fields {
            let x = <S as num_traits::Num>::from_str_radix(f, 10)
                .map_err(|_| perr(i, format!("non-numeric field `{f}`")))?;
            if !x.is_finite() {
                return Err(perr(i, format!("non-finite value `{f}`")));
            }
            data.push(x);
        }
        let got = data.len() - before;
        if got != d {
            return Err(perr(i, format!("`{word}` has {got} values, expected {d}")));
        }
        words.push(word.to_string());
    }
    if words.len() != v {
        return Err(Error::Parse {
            line: 1,
            message: format!("header declares {v} words but the file has {}", words.len()),
        });
    }
    let vocab = Vocabulary::from_words(words)?;
    EmbeddingMatrix::new(vocab, Matrix::from_vec(v, d, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let vocab = Vocabulary::from_words(["pizza", "waiter"].map(String::from)).unwrap();
        let m = Matrix::from_rows(&[[0.1, -1.0 / 3.0], [1e-12, 12345.678]]).unwrap();
        let e = EmbeddingMatrix::new(vocab, m).unwrap();
        let back: EmbeddingMatrix<f64> = load_text(save_text(&e).as_bytes()).unwrap();
        for (a, b) in e.vectors().as_slice().iter().zip(back.vectors().as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(back, e);
    }

    #[test]
    fn f32_round_trip_is_exact() {
        let vocab = Vocabulary::from_words(["a", "b"].map(String::from)).unwrap();
        let m = Matrix::from_rows(&[[0.1f32, 0.7], [1.0 / 3.0, -2.5e-7]]).unwrap();
        let e = EmbeddingMatrix::new(vocab, m).unwrap();
        let back: EmbeddingMatrix<f32> = load_text(save_text(&e).as_bytes()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn errors() {
        let short = "2 2\na 1 2\nb 1\n";
        let err = load_text::<f64>(short.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(load_text::<f64>(b"2 2\na 1 2\na 3 4\n").is_err());
        assert!(load_text::<f64>(b"1 2\na 1 x\n").is_err());
        assert!(load_text::<f64>(b"3 2\na 1 2\n").is_err());
        assert!(load_text::<f64>(b"1 2 3\na 1 2\n").is_err());
        assert!(load_text::<f64>(b"").is_err());
    }

    #[test]
    fn external_fixture_loads() {
        let text = include_str!("../../tests/data/external_vectors.txt");
        let e: EmbeddingMatrix<f64> = load_text(text.as_bytes()).unwrap();
        assert_eq!((e.len(), e.dim()), (4, 3));
        assert_eq!(e.lookup("pasta").unwrap(), &[0.25, -0.5, 1.0]);
        let near = e.nearest(e.lookup("pizza").unwrap(), 2).unwrap();
        assert_eq!(e.vocab().word(near[1].0), "pasta");
    }
}
