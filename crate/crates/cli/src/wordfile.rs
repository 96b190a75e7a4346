//! Word files: a `word n p m order=application` header, then one
//! operation per line in the order the operations act on a matrix.
//! Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use ffreduce::{ElementaryOp, FieldSpec, Word};

pub struct WordFile {
    pub field: Arc<FieldSpec>,
    pub word: Word,
}

pub fn parse(text: &str) -> Result<WordFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let Some((hline, header)) = lines.next() else {
        bail!("word file is empty");
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let ["word", n, p, m, "order=application"] = fields[..] else {
        bail!("line {hline}: header must be `word n p m order=application`");
    };
    let int = |s: &str, line: usize| -> Result<u32> {
        s.parse()
            .with_context(|| format!("line {line}: `{s}` is not a non-negative integer"))
    };
    let n = int(n, hline)? as usize;
    let field = Arc::new(FieldSpec::new(int(p, hline)?, int(m, hline)?)?);

    let mut applied = Vec::new();
    for (line, l) in lines {
        let tok: Vec<&str> = l.split_whitespace().collect();
        let op = match tok[..] {
            ["S", i, j] => ElementaryOp::swap(int(i, line)? as usize, int(j, line)? as usize),
            ["M", i, lambda] => {
                ElementaryOp::scale(int(i, line)? as usize, field.element(int(lambda, line)?)?)
            }
            ["A", src, dst, lambda] => ElementaryOp::add_mul(
                int(src, line)? as usize,
                int(dst, line)? as usize,
                field.element(int(lambda, line)?)?,
            ),
            _ => bail!("line {line}: expected `S i j`, `M i lambda` or `A src dst lambda`"),
        };
        let op = op.with_context(|| format!("line {line}"))?;
        op.validate(n, &field)
            .with_context(|| format!("line {line}"))?;
        applied.push(op);
    }
    Ok(WordFile {
        word: Word::from_application_order(n, applied),
        field,
    })
}

pub fn render(word: &Word, field: &FieldSpec) -> String {
    let mut s = format!(
        "word {} {} {} order=application\n",
        word.n(),
        field.characteristic(),
        field.degree()
    );
    for op in word.application_order() {
        let _ = writeln!(s, "{op}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ffreduce::FieldElement;

    #[test]
    fn reverses_into_product_order() {
        let wf = parse("word 3 3 1 order=application\nS 0 1\n\nM 2 2 # scale\nA 0 2 1\n").unwrap();
        assert_eq!(
            wf.word.ops(),
            &[
                ElementaryOp::add_mul(0, 2, FieldElement(1)).unwrap(),
                ElementaryOp::scale(2, FieldElement(2)).unwrap(),
                ElementaryOp::swap(0, 1).unwrap(),
            ]
        );
        assert_eq!(
            render(&wf.word, &wf.field),
            "word 3 3 1 order=application\nS 0 1\nM 2 2\nA 0 2 1\n"
        );
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "",
            "word 2 2 1\n",
            "word 2 4 1 order=application\n",
            "word 2 2 1 order=application\nS 0 0\n",
            "word 2 2 1 order=application\nS 0 2\n",
            "word 2 3 1 order=application\nM 0 1\n",
            "word 2 3 1 order=application\nA 0 1 3\n",
            "word 2 3 1 order=application\nX 0 1\n",
        ] {
            assert!(parse(text).is_err(), "{text:?}");
        }
    }
}
