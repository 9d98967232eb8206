use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::write_atomic;
use crate::detect::{ClassScoreMatrix, ProgressionSequence};
use crate::error::{record, Error, Result};

/// Predicted progressions and class scores of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSequence {
    pub id: String,
    pub seq: ProgressionSequence,
    pub scores: ClassScoreMatrix,
}

impl VideoSequence {
    pub fn new(
        id: impl Into<String>,
        seq: ProgressionSequence,
        scores: ClassScoreMatrix,
    ) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::input(format!(
                "video id {id:?} must be non-empty without whitespace"
            )));
        }
        if seq.len() != scores.num_frames() {
            return Err(Error::LengthMismatch {
                left: seq.len(),
                right: scores.num_frames(),
            });
        }
        Ok(Self { id, seq, scores })
    }
}

/// Line-oriented text, one block per video:
///
/// ```text
/// video <id> <K> <T> <C>
/// p <T progression values>
/// s <C scores>        (T lines)
/// ```
///
/// Blank lines and lines starting with `#` are skipped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SequenceFile {
    pub videos: Vec<VideoSequence>,
}

struct Header {
    id: String,
    ranks: u32,
    frames: usize,
    classes: usize,
    line: usize,
}

fn parse_header(fields: &[&str], source: &str, line: usize) -> Result<Header> {
    let bad = |msg: String| record(source, line, msg);
    if fields.len() != 5 || fields[0] != "video" {
        return Err(bad("expected `video <id> <K> <T> <C>`".into()));
    }
    let num = |i: usize, what: &str| -> Result<usize> {
        fields[i].parse::<usize>().map_err(|_| {
            bad(format!(
                "{what} {:?} is not a non-negative integer",
                fields[i]
            ))
        })
    };
    let ranks = num(2, "K")?;
    let frames = num(3, "T")?;
    let classes = num(4, "C")?;
    if ranks == 0 || ranks > u32::MAX as usize || frames == 0 || classes == 0 {
        return Err(bad("K, T and C must be positive".into()));
    }
    Ok(Header {
        id: fields[1].to_string(),
        ranks: ranks as u32,
        frames,
        classes,
        line,
    })
}

fn parse_row(
    fields: &[&str],
    tag: &str,
    len: usize,
    source: &str,
    line: usize,
) -> Result<Vec<f64>> {
    if fields.first() != Some(&tag) {
        return Err(record(source, line, format!("expected a `{tag}` row")));
    }
    if fields.len() - 1 != len {
        return Err(record(
            source,
            line,
            format!("expected {len} values, found {}", fields.len() - 1),
        ));
    }
    fields[1..]
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| record(source, line, format!("{f:?} is not a number")))
        })
        .collect()
}

impl SequenceFile {
    pub fn parse(reader: impl BufRead, source: &str) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| {
                l.as_ref()
                    .map_or(true, |l| !l.trim().is_empty() && !l.starts_with('#'))
            });
        let mut next = |expect: &str| -> Result<Option<(usize, String)>> {
            match lines.next() {
                None => Ok(None),
                Some((n, Ok(l))) => Ok(Some((n, l))),
                Some((n, Err(e))) => Err(record(source, n, format!("{expect}: {e}"))),
            }
        };
        let mut videos: Vec<VideoSequence> = Vec::new();
        while let Some((n, line)) = next("header")? {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let h = parse_header(&fields, source, n)?;
            if videos.iter().any(|v| v.id == h.id) {
                return Err(record(source, n, format!("duplicate video id {:?}", h.id)));
            }
            let truncated = |what: &str| Error::Malformed {
                source_name: source.to_string(),
                message: format!("video {:?} (line {}) ends before its {what}", h.id, h.line),
            };
            let (pn, pline) = next("progressions")?.ok_or_else(|| truncated("progression row"))?;
            let pfields: Vec<&str> = pline.split_whitespace().collect();
            let values = parse_row(&pfields, "p", h.frames, source, pn)?;
            let seq = ProgressionSequence::new(values, h.ranks)
                .map_err(|e| record(source, pn, e.to_string()))?;
            let mut scores = Vec::with_capacity(h.frames * h.classes);
            for _ in 0..h.frames {
                let (sn, sline) = next("scores")?.ok_or_else(|| truncated("score rows"))?;
                let sfields: Vec<&str> = sline.split_whitespace().collect();
                let row = parse_row(&sfields, "s", h.classes, source, sn)?;
                if let Some(msg) = ClassScoreMatrix::row_problem(&row) {
                    return Err(record(source, sn, msg));
                }
                scores.extend(row);
            }
            let scores = ClassScoreMatrix::new(scores, h.classes)?;
            videos.push(
                VideoSequence::new(h.id, seq, scores)
                    .map_err(|e| record(source, n, e.to_string()))?,
            );
        }
        Ok(Self { videos })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        Self::parse(BufReader::new(file), &path.display().to_string())
    }

    /// Shortest decimal forms that read back bit-exactly.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for v in &self.videos {
            let c = v.scores.num_classes();
            let _ = writeln!(
                out,
                "video {} {} {} {}",
                v.id,
                v.seq.ranks(),
                v.seq.len(),
                c
            );
            out.push('p');
            for x in v.seq.values() {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
            for t in 0..v.seq.len() {
                out.push('s');
                for x in v.scores.row(t) {
                    let _ = write!(out, " {x}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SequenceFile {
        let seq = ProgressionSequence::new(vec![0.0, 33.3, 100.0, 1.0 / 3.0], 100).unwrap();
        let scores = ClassScoreMatrix::from_rows(&[
            vec![0.25, 0.75],
            vec![0.1, 0.9],
            vec![1.0, 0.0],
            vec![0.7, 0.3],
        ])
        .unwrap();
        SequenceFile {
            videos: vec![VideoSequence::new("clip-1", seq, scores).unwrap()],
        }
    }

    fn parse(text: &str) -> Result<SequenceFile> {
        SequenceFile::parse(text.as_bytes(), "seq.txt")
    }

    #[test]
    fn round_trip_is_exact() {
        let s = sample();
        assert_eq!(parse(&s.render()).unwrap(), s);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.seq");
        s.write(&path).unwrap();
        assert_eq!(SequenceFile::read(&path).unwrap(), s);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# two frames\n\nvideo a 10 2 1\np 0 10\ns 1\n\ns 1\n";
        let f = parse(text).unwrap();
        assert_eq!(f.videos[0].seq.values(), &[0.0, 10.0]);
    }

    #[test]
    fn errors_name_the_line() {
        let cases = [
            ("video a 10 2 1\np 0 11\ns 1\ns 1\n", 2),
            ("video a 10 2 1\np 0 1\ns 1\ns 0.5\n", 4),
            ("video a 10 2 1\np 0 1 2\n", 2),
            ("video a 10 2\n", 1),
            ("video a 10 2 1\np 0 x\n", 2),
            ("video a 10 1 1\np 0\ns 1\nvideo a 10 1 1\np 0\ns 1\n", 4),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(Error::Record { record, .. }) => assert_eq!(record, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert!(matches!(
            parse("video a 10 2 1\np 0 1\ns 1\n"),
            Err(Error::Malformed { .. })
        ));
    }
}
