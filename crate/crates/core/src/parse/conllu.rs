//! CoNLL-U reader and writer for the annotation layers the filters use.
//!
//! Sentence ids come from `# sent_id = …` comments. Records are joined to
//! annotations through the ids `<record-id>.long`, `<record-id>.s1` and
//! `<record-id>.s2` (see [`annotation_id`]).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::corpus::Sentence;
use crate::parse::DependencyGraph;

#[derive(Debug, Error)]
pub enum ConlluError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: duplicate sentence id `{id}`")]
    DuplicateId { line: usize, id: String },
}

/// Annotations of one CoNLL-U sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub sentence: Sentence,
    pub graph: DependencyGraph,
}

/// Which side of a pair a CoNLL-U sentence annotates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Long,
    First,
    Second,
}

impl Slot {
    fn suffix(self) -> &'static str {
        match self {
            Slot::Long => "long",
            Slot::First => "s1",
            Slot::Second => "s2",
        }
    }
}

pub fn annotation_id(record_id: &str, slot: Slot) -> String {
    format!("{record_id}.{}", slot.suffix())
}

pub fn read_conllu(path: impl AsRef<Path>) -> Result<BTreeMap<String, AnnotatedSentence>, ConlluError> {
    parse_conllu(BufReader::new(File::open(path)?))
}

#[derive(Default)]
struct Pending {
    id: Option<(String, usize)>,
    text: Option<String>,
    forms: Vec<String>,
    lemmas: Vec<String>,
    upos: Vec<String>,
    heads: Vec<usize>,
    deprels: Vec<String>,
    first_line: usize,
}

impl Pending {
    fn is_empty(&self) -> bool {
        self.id.is_none() && self.text.is_none() && self.forms.is_empty()
    }
}

pub fn parse_conllu<R: BufRead>(reader: R) -> Result<BTreeMap<String, AnnotatedSentence>, ConlluError> {
    let mut out = BTreeMap::new();
    let mut cur = Pending::default();
    let mut line_no = 0;
    for line in reader.lines() {
        let line = line?;
        line_no += 1;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            flush(&mut cur, &mut out, line_no)?;
            continue;
        }
        if cur.is_empty() {
            cur.first_line = line_no;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                match key.trim() {
                    "sent_id" => cur.id = Some((value.trim().to_owned(), line_no)),
                    "text" => cur.text = Some(value.trim().to_owned()),
                    _ => {}
                }
            }
            continue;
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Format {
                line: line_no,
                message: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }
        // multiword ranges (1-2) and empty nodes (1.1) carry no head
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let idx: usize = cols[0].parse().map_err(|_| ConlluError::Format {
            line: line_no,
            message: format!("bad token id `{}`", cols[0]),
        })?;
        if idx != cur.forms.len() + 1 {
            return Err(ConlluError::Format {
                line: line_no,
                message: format!("token id {idx} out of sequence"),
            });
        }
        let head: usize = cols[6].parse().map_err(|_| ConlluError::Format {
            line: line_no,
            message: format!("bad head `{}`", cols[6]),
        })?;
        cur.forms.push(cols[1].to_owned());
        cur.lemmas.push(cols[2].to_owned());
        cur.upos.push(cols[3].to_owned());
        cur.heads.push(head);
        cur.deprels.push(cols[7].to_owned());
    }
    flush(&mut cur, &mut out, line_no + 1)?;
    Ok(out)
}

fn flush(
    cur: &mut Pending,
    out: &mut BTreeMap<String, AnnotatedSentence>,
    line_no: usize,
) -> Result<(), ConlluError> {
    if cur.is_empty() {
        return Ok(());
    }
    let p = std::mem::take(cur);
    let (id, id_line) = p.id.ok_or_else(|| ConlluError::Format {
        line: p.first_line,
        message: "sentence without `# sent_id`".to_owned(),
    })?;
    if p.forms.is_empty() {
        return Err(ConlluError::Format { line: line_no, message: format!("sentence `{id}` has no tokens") });
    }
    let n = p.forms.len();
    if let Some(&bad) = p.heads.iter().find(|&&h| h > n) {
        return Err(ConlluError::Format {
            line: id_line,
            message: format!("sentence `{id}`: head {bad} beyond {n} tokens"),
        });
    }
    let graph = DependencyGraph { n, heads: p.heads.clone(), deprels: p.deprels.clone() };
    let sentence = Sentence {
        text: p.text.unwrap_or_else(|| p.forms.join(" ")),
        tokens: p.forms,
        lemmas: Some(p.lemmas),
        upos: Some(p.upos),
        heads: Some(p.heads),
        deprels: Some(p.deprels),
    };
    if out.contains_key(&id) {
        return Err(ConlluError::DuplicateId { line: id_line, id });
    }
    out.insert(id, AnnotatedSentence { sentence, graph });
    Ok(())
}

/// Renders one sentence as a CoNLL-U block. Missing layers become `_`;
/// missing heads form a chain onto the first token.
pub fn to_conllu(id: &str, sentence: &Sentence) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# sent_id = {id}");
    let _ = writeln!(s, "# text = {}", sentence.text);
    for (i, form) in sentence.tokens.iter().enumerate() {
        let lemma = sentence.lemmas.as_ref().map_or("_", |l| l[i].as_str());
        let upos = sentence.upos.as_ref().map_or("_", |u| u[i].as_str());
        let head = sentence.heads.as_ref().map_or(if i == 0 { 0 } else { 1 }, |h| h[i]);
        let rel = sentence.deprels.as_ref().map_or("_", |d| d[i].as_str());
        let _ = writeln!(s, "{}\t{form}\t{lemma}\t{upos}\t_\t_\t{head}\t{rel}\t_\t_", i + 1);
    }
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const THREE: &str = "# sent_id = r1.long\n# text = The cat sat\n\
1\tThe\tthe\tDET\tDT\t_\t2\tdet\t_\t_\n\
2\tcat\tcat\tNOUN\tNN\t_\t0\troot\t_\t_\n\
3\tsat\tsit\tVERB\tVBD\t_\t2\tdep\t_\t_\n\n";

    #[test]
    fn three_token_sentence() {
        let map = parse_conllu(THREE.as_bytes()).unwrap();
        let a = &map["r1.long"];
        assert_eq!(a.graph.n, 3);
        assert_eq!(a.graph.heads, [2, 0, 2]);
        assert_eq!(a.sentence.lemmas.as_deref().unwrap(), ["the", "cat", "sit"]);
        assert_eq!(a.sentence.upos.as_deref().unwrap(), ["DET", "NOUN", "VERB"]);
        assert_eq!(a.sentence.text, "The cat sat");
    }

    #[test]
    fn five_columns_is_a_format_error() {
        let input = "# sent_id = x\n1\tThe\tthe\tDET\tDT\n";
        match parse_conllu(input.as_bytes()) {
            Err(ConlluError::Format { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multiword_ranges_are_skipped() {
        let input = "# sent_id = m\n\
1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n\
1\tde\tde\tADP\t_\t_\t2\tcase\t_\t_\n\
2\tle\tle\tDET\t_\t_\t0\troot\t_\t_\n";
        let map = parse_conllu(input.as_bytes()).unwrap();
        assert_eq!(map["m"].sentence.tokens, ["de", "le"]);
    }

    #[test]
    fn duplicate_and_missing_ids() {
        let dup = format!("{THREE}{THREE}");
        assert!(matches!(parse_conllu(dup.as_bytes()), Err(ConlluError::DuplicateId { line: 7, .. })));
        let noid = "1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n";
        assert!(matches!(parse_conllu(noid.as_bytes()), Err(ConlluError::Format { line: 1, .. })));
        let badhead = "# sent_id = h\n1\ta\ta\tX\t_\t_\t4\troot\t_\t_\n";
        assert!(parse_conllu(badhead.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn rendered_blocks_round_trip(
            rows in prop::collection::vec(("[A-Za-z]{1,6}", "[a-z]{1,6}", "(NOUN|VERB|AUX|DET|PUNCT)"), 1..8),
            seed in 0usize..1000,
        ) {
            let n = rows.len();
            let heads: Vec<usize> = (0..n).map(|i| if i == 0 { 0 } else { (seed + i) % n }).collect();
            let mut s = Sentence::from_tokens(&rows.iter().map(|r| r.0.clone()).collect::<Vec<_>>())
                .with_lemmas(&rows.iter().map(|r| r.1.clone()).collect::<Vec<_>>())
                .with_upos(&rows.iter().map(|r| r.2.clone()).collect::<Vec<_>>())
                .with_heads(&heads);
            s.deprels = Some(vec!["dep".to_owned(); n]);
            let map = parse_conllu(to_conllu("p.s1", &s).as_bytes()).unwrap();
            prop_assert_eq!(&map["p.s1"].sentence, &s);
            prop_assert_eq!(&map["p.s1"].graph.heads, &heads);
        }
    }
}
