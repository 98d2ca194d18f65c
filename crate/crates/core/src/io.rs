//! Text file formats: vocabulary TSV, sparse similarity matrix, model,
//! word-vector export and the training log.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{SimilarityMatrix, Vocabulary};
use crate::error::{Error, Result};
use crate::solver::{EmbeddingMatrix, TraceRecord};

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn werr(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn line_err(what: &str, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::input(format!("{what}, line {line}: {msg}"))
}

/// Nonempty lines with their 1-based line numbers.
fn lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(|e| Error::io("<input>", e)))
        .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty()))
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize, field: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| line_err(what, line, format!("missing {field}")))?;
    tok.parse()
        .map_err(|_| line_err(what, line, format!("bad {field} {tok:?}")))
}

/// `word<TAB>count` per line, in id order.
pub fn write_vocab<W: Write>(mut out: W, vocab: &Vocabulary) -> Result<()> {
    for (w, c) in vocab.words().iter().zip(vocab.counts()) {
        writeln!(out, "{w}\t{c}").map_err(werr)?;
    }
    out.flush().map_err(werr)
}

pub fn read_vocab<R: BufRead>(reader: R) -> Result<Vocabulary> {
    let mut entries = Vec::new();
    for item in lines(reader) {
        let (ln, line) = item?;
        let (word, count) = line
            .split_once('\t')
            .ok_or_else(|| line_err("vocabulary", ln, "expected word<TAB>count"))?;
        entries.push((
            word.to_owned(),
            parse(Some(count.trim()), "vocabulary", ln, "count")?,
        ));
    }
    Vocabulary::from_entries(entries)
}

/// Header `n nnz`, then `i j value` for each pair with `i < j`.
///
/// Matrices built from a corpus have no diagonal. A diagonal entry, if
/// present, is written with `i = j`.
pub fn write_similarity<W: Write>(mut out: W, s: &SimilarityMatrix) -> Result<()> {
    writeln!(out, "{} {}", s.n(), s.upper_nnz()).map_err(werr)?;
    for (i, j, v) in s.iter_upper() {
        writeln!(out, "{i} {j} {v}").map_err(werr)?;
    }
    out.flush().map_err(werr)
}

pub fn read_similarity<R: BufRead>(reader: R) -> Result<SimilarityMatrix> {
    const WHAT: &str = "similarity matrix";
    let mut it = lines(reader);
    let (ln, header) = it
        .next()
        .ok_or_else(|| Error::input("similarity matrix: empty file"))??;
    let mut h = header.split_whitespace();
    let n: usize = parse(h.next(), WHAT, ln, "dimension")?;
    let nnz: usize = parse(h.next(), WHAT, ln, "nonzero count")?;
    let mut triplets = Vec::with_capacity(nnz);
    for item in it {
        let (ln, line) = item?;
        let mut f = line.split_whitespace();
        let i: usize = parse(f.next(), WHAT, ln, "row")?;
        let j: usize = parse(f.next(), WHAT, ln, "column")?;
        let v: f64 = parse(f.next(), WHAT, ln, "value")?;
        triplets.push((i, j, v));
    }
    if triplets.len() != nnz {
        return Err(Error::input(format!(
            "similarity matrix: header announces {nnz} entries, found {}",
            triplets.len()
        )));
    }
    SimilarityMatrix::from_triplets_with_diagonal(n, &triplets)
}

/// Header `n r`, then one row of `r` values per line at 17 significant digits.
pub fn write_model<W: Write>(mut out: W, w: &EmbeddingMatrix) -> Result<()> {
    writeln!(out, "{} {}", w.n(), w.rank()).map_err(werr)?;
    for row in w.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", cells.join(" ")).map_err(werr)?;
    }
    out.flush().map_err(werr)
}

fn read_header<I>(it: &mut I, what: &str) -> Result<(usize, usize)>
where
    I: Iterator<Item = Result<(usize, String)>>,
{
    let (ln, header) = it
        .next()
        .ok_or_else(|| Error::input(format!("{what}: empty file")))??;
    let mut h = header.split_whitespace();
    Ok((
        parse(h.next(), what, ln, "row count")?,
        parse(h.next(), what, ln, "dimension")?,
    ))
}

fn parse_values<'a>(
    fields: impl Iterator<Item = &'a str>,
    r: usize,
    what: &str,
    ln: usize,
    data: &mut Vec<f64>,
) -> Result<()> {
    let before = data.len();
    for f in fields {
        data.push(parse(Some(f), what, ln, "value")?);
    }
    if data.len() - before != r {
        return Err(line_err(
            what,
            ln,
            format!("expected {r} values, found {}", data.len() - before),
        ));
    }
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R) -> Result<EmbeddingMatrix> {
    const WHAT: &str = "model";
    let mut it = lines(reader);
    let (n, r) = read_header(&mut it, WHAT)?;
    let mut data = Vec::with_capacity(n * r);
    let mut rows = 0;
    for item in it {
        let (ln, line) = item?;
        parse_values(line.split_whitespace(), r, WHAT, ln, &mut data)?;
        rows += 1;
    }
    if rows != n {
        return Err(Error::input(format!(
            "model: header announces {n} rows, found {rows}"
        )));
    }
    EmbeddingMatrix::from_vec(n, r, data)
}

/// Word-vector text format: header `n r`, then `word v1 ... vr`.
pub fn write_embeddings<W: Write>(mut out: W, vocab: &Vocabulary, w: &EmbeddingMatrix) -> Result<()> {
    if vocab.len() != w.n() {
        return Err(Error::input(format!(
            "model has {} rows but vocabulary has {} words",
            w.n(),
            vocab.len()
        )));
    }
    writeln!(out, "{} {}", w.n(), w.rank()).map_err(werr)?;
    for (word, row) in vocab.words().iter().zip(w.rows()) {
        write!(out, "{word}").map_err(werr)?;
        for v in row {
            write!(out, " {v}").map_err(werr)?;
        }
        writeln!(out).map_err(werr)?;
    }
    out.flush().map_err(werr)
}

pub fn read_embeddings<R: BufRead>(reader: R) -> Result<(Vec<String>, EmbeddingMatrix)> {
    const WHAT: &str = "embeddings";
    let mut it = lines(reader);
    let (n, r) = read_header(&mut it, WHAT)?;
    let mut words = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * r);
    for item in it {
        let (ln, line) = item?;
        let mut f = line.split_whitespace();
        let word = f.next().ok_or_else(|| line_err(WHAT, ln, "missing word"))?;
        words.push(word.to_owned());
        parse_values(f, r, WHAT, ln, &mut data)?;
    }
    if words.len() != n {
        return Err(Error::input(format!(
            "embeddings: header announces {n} rows, found {}",
            words.len()
        )));
    }
    Ok((words, EmbeddingMatrix::from_vec(n, r, data)?))
}

/// CSV `iter,objective,max_row_sum_err,max_delta`.
pub fn write_trace<W: Write>(mut out: W, trace: &[TraceRecord]) -> Result<()> {
    writeln!(out, "iter,objective,max_row_sum_err,max_delta").map_err(werr)?;
    for t in trace {
        writeln!(
            out,
            "{},{},{},{}",
            t.iter, t.objective, t.max_row_sum_err, t.max_delta
        )
        .map_err(werr)?;
    }
    out.flush().map_err(werr)
}

pub fn read_trace<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>> {
    const WHAT: &str = "training log";
    let mut out = Vec::new();
    for item in lines(reader).skip(1) {
        let (ln, line) = item?;
        let mut f = line.split(',');
        out.push(TraceRecord {
            iter: parse(f.next(), WHAT, ln, "iter")?,
            objective: parse(f.next(), WHAT, ln, "objective")?,
            max_row_sum_err: parse(f.next(), WHAT, ln, "max_row_sum_err")?,
            max_delta: parse(f.next(), WHAT, ln, "max_delta")?,
        });
    }
    Ok(out)
}
