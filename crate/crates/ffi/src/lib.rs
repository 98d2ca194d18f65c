//! C ABI over `dsembed`.
//!
//! Corpora and models cross the boundary as opaque handles. Each is released
//! with the matching `dse_*_free`. Every fallible
//! function returns a [`DseStatus`]; on failure a message describing the
//! error can be read with [`dse_last_error`] on the same thread.
//!
//! Strings passed in must be nul-terminated UTF-8. Strings handed out stay
//! valid until the owning handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dsembed::corpus::{self, Vocabulary};
use dsembed::io;
use dsembed::pipeline::{self, ModelPaths, Prepared};
use dsembed::query::{Index, Metric};
use dsembed::solver::{self, EmbeddingMatrix, TrainConfig};
use dsembed::Error;

/// Result codes. Values 2 to 5 match the command line tool's exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DseStatus {
    Ok = 0,
    /// Invalid parameter value.
    Config = 2,
    /// Malformed or unreadable input, including I/O failures.
    Input = 3,
    /// Numerical breakdown during training.
    Collapse = 4,
    /// Query word unknown or without an embedding.
    Lookup = 5,
    /// A required pointer argument was null.
    NullArgument = 10,
    /// A caller-provided buffer is shorter than required.
    BufferTooSmall = 11,
    /// An internal panic was caught at the boundary.
    Internal = 12,
}

impl From<&Error> for DseStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => DseStatus::Config,
            4 => DseStatus::Collapse,
            5 => DseStatus::Lookup,
            _ => DseStatus::Input,
        }
    }
}

struct Failure {
    status: DseStatus,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            status: DseStatus::from(&e),
            message: e.to_string(),
        }
    }
}

fn fail(status: DseStatus, message: impl Into<String>) -> Failure {
    Failure {
        status,
        message: message.into(),
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> DseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DseStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            DseStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(DseStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(DseStatus::Input, format!("{name} is not UTF-8: {e}")))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(DseStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Vocabulary and similarity matrix built from a corpus.
pub struct DseCorpus {
    prepared: Prepared,
}

/// Trained embedding with its vocabulary.
pub struct DseModel {
    w: EmbeddingMatrix,
    vocab: Vocabulary,
    pruned: Vocabulary,
    c_words: Vec<CString>,
}

impl DseModel {
    fn new(w: EmbeddingMatrix, vocab: Vocabulary, pruned: Vocabulary) -> Self {
        let c_words = vocab
            .words()
            .iter()
            .map(|w| CString::new(w.as_str()).expect("tokens contain no nul"))
            .collect();
        DseModel {
            w,
            vocab,
            pruned,
            c_words,
        }
    }

    fn index(&self) -> Result<Index<'_>, Failure> {
        Ok(Index::new(&self.w, &self.vocab)?.with_pruned(self.pruned.words().iter().cloned()))
    }
}

/// Solver parameters. Obtain defaults from [`dse_train_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DseTrainOptions {
    pub rank: usize,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub simplex_tol: f64,
    pub seed: u64,
    pub threads: usize,
}

impl From<DseTrainOptions> for TrainConfig {
    fn from(o: DseTrainOptions) -> Self {
        TrainConfig {
            rank: o.rank,
            max_iters: o.max_iters,
            conv_tol: o.conv_tol,
            simplex_tol: o.simplex_tol,
            seed: o.seed,
            objective_every: 1,
            threads: o.threads,
        }
    }
}

/// Message for the most recent failure on this thread, or null.
#[no_mangle]
pub extern "C" fn dse_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn dse_train_options_default() -> DseTrainOptions {
    let c = TrainConfig::default();
    DseTrainOptions {
        rank: c.rank,
        max_iters: c.max_iters,
        conv_tol: c.conv_tol,
        simplex_tol: c.simplex_tol,
        seed: c.seed,
        threads: c.threads,
    }
}

fn build_corpus(
    bytes: &[u8],
    max_vocab: usize,
    window: usize,
    lowercase: bool,
    out: *mut *mut DseCorpus,
) -> Result<(), Failure> {
    non_null(out, "out")?;
    if max_vocab == 0 || window == 0 {
        return Err(fail(DseStatus::Config, "max_vocab and window must be at least 1"));
    }
    let tokens = corpus::tokenize_bytes(bytes, lowercase)?;
    let prepared = pipeline::prepare(&tokens, max_vocab, window, 1)?;
    // SAFETY: checked non-null above; the caller provides a writable slot.
    unsafe { *out = Box::into_raw(Box::new(DseCorpus { prepared })) };
    Ok(())
}

/// Build from an in-memory nul-terminated text.
///
/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dse_corpus_from_text(
    text: *const c_char,
    max_vocab: usize,
    window: usize,
    lowercase: bool,
    out: *mut *mut DseCorpus,
) -> DseStatus {
    guard(|| {
        non_null(text, "text")?;
        let bytes = CStr::from_ptr(text).to_bytes();
        build_corpus(bytes, max_vocab, window, lowercase, out)
    })
}

/// Build from a UTF-8 corpus file.
///
/// # Safety
/// `path` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dse_corpus_from_file(
    path: *const c_char,
    max_vocab: usize,
    window: usize,
    lowercase: bool,
    out: *mut *mut DseCorpus,
) -> DseStatus {
    guard(|| {
        let path = PathBuf::from(str_arg(path, "path")?);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        build_corpus(&bytes, max_vocab, window, lowercase, out)
    })
}

/// Number of words kept for training, or 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dse_corpus_size(corpus: *const DseCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.prepared.similarity.n())
}

/// Distinct unordered word pairs with nonzero similarity.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dse_corpus_pairs(corpus: *const DseCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.prepared.similarity.upper_nnz())
}

/// Write `vocab.tsv`, `pruned.tsv` and `similarity.txt` into `dir`.
///
/// # Safety
/// `corpus` must be a live handle and `dir` a valid string.
#[no_mangle]
pub unsafe extern "C" fn dse_corpus_save(corpus: *const DseCorpus, dir: *const c_char) -> DseStatus {
    guard(|| {
        non_null(corpus, "corpus")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let p = &(*corpus).prepared;
        io::write_vocab(io::create(&dir.join(pipeline::VOCAB_FILE))?, &p.vocab)?;
        io::write_vocab(io::create(&dir.join(pipeline::PRUNED_FILE))?, &p.pruned)?;
        io::write_similarity(io::create(&dir.join(pipeline::SIMILARITY_FILE))?, &p.similarity)?;
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dse_corpus_free(corpus: *mut DseCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Train an embedding. `options` may be null for defaults; `iterations`
/// may be null.
///
/// # Safety
/// `corpus` must be a live handle; pointer arguments must be valid or null
/// where allowed.
#[no_mangle]
pub unsafe extern "C" fn dse_train(
    corpus: *const DseCorpus,
    options: *const DseTrainOptions,
    out: *mut *mut DseModel,
    iterations: *mut usize,
) -> DseStatus {
    guard(|| {
        non_null(corpus, "corpus")?;
        non_null(out, "out")?;
        let opts = options
            .as_ref()
            .copied()
            .unwrap_or_else(|| dse_train_options_default());
        let p = &(*corpus).prepared;
        let outcome = solver::train(&p.similarity, &opts.into())?;
        if !iterations.is_null() {
            *iterations = outcome.iterations;
        }
        *out = Box::into_raw(Box::new(DseModel::new(
            outcome.embedding,
            p.vocab.clone(),
            p.pruned.clone(),
        )));
        Ok(())
    })
}

/// Load `model.txt`, `vocab.tsv` and, if present, `pruned.tsv` from `dir`.
///
/// # Safety
/// `dir` must be a valid string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dse_model_load(dir: *const c_char, out: *mut *mut DseModel) -> DseStatus {
    guard(|| {
        non_null(out, "out")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        let paths = ModelPaths::in_dir(&dir);
        let (w, vocab, _) = paths.load()?;
        let pruned = match &paths.pruned {
            Some(p) => io::read_vocab(io::open(p)?)?,
            None => Vocabulary::from_entries(Vec::new())?,
        };
        *out = Box::into_raw(Box::new(DseModel::new(w, vocab, pruned)));
        Ok(())
    })
}

/// Write `model.txt`, `vocab.tsv` and `pruned.tsv` into `dir`.
///
/// # Safety
/// `model` must be a live handle and `dir` a valid string.
#[no_mangle]
pub unsafe extern "C" fn dse_model_save(model: *const DseModel, dir: *const c_char) -> DseStatus {
    guard(|| {
        non_null(model, "model")?;
        let dir = PathBuf::from(str_arg(dir, "dir")?);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let m = &*model;
        io::write_model(io::create(&dir.join(pipeline::MODEL_FILE))?, &m.w)?;
        io::write_vocab(io::create(&dir.join(pipeline::VOCAB_FILE))?, &m.vocab)?;
        io::write_vocab(io::create(&dir.join(pipeline::PRUNED_FILE))?, &m.pruned)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dse_model_size(model: *const DseModel) -> usize {
    model.as_ref().map_or(0, |m| m.w.n())
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dse_model_rank(model: *const DseModel) -> usize {
    model.as_ref().map_or(0, |m| m.w.rank())
}

/// Word with the given id, or null when out of range. Owned by the handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dse_model_word(model: *const DseModel, id: usize) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.c_words.get(id))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// Id of `word`; fails with `Lookup` for unknown or pruned words.
///
/// # Safety
/// `model` must be a live handle, `word` a valid string, `id` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dse_model_word_id(
    model: *const DseModel,
    word: *const c_char,
    id: *mut usize,
) -> DseStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(id, "id")?;
        let word = str_arg(word, "word")?;
        *id = (*model).index()?.resolve(word)?;
        Ok(())
    })
}

unsafe fn fill(out: *mut f64, len: usize, values: &[f64]) -> Result<(), Failure> {
    non_null(out, "out")?;
    if len < values.len() {
        return Err(fail(
            DseStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} required", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Copy the `rank` topic weights of word `id` into `out`.
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dse_model_row(
    model: *const DseModel,
    id: usize,
    out: *mut f64,
    len: usize,
) -> DseStatus {
    guard(|| {
        non_null(model, "model")?;
        let m = &*model;
        if id >= m.w.n() {
            return Err(fail(DseStatus::Input, format!("word id {id} out of range")));
        }
        fill(out, len, m.w.row(id))
    })
}

/// Copy the learned similarity of word `id` to every word (length = size).
///
/// # Safety
/// `model` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dse_model_similarity_row(
    model: *const DseModel,
    id: usize,
    out: *mut f64,
    len: usize,
) -> DseStatus {
    guard(|| {
        non_null(model, "model")?;
        let row = (*model).index()?.similarity_row(id)?;
        fill(out, len, &row)
    })
}

/// Up to `k` nearest neighbors of `word`, most similar first. Writes ids and
/// scores into arrays of length `k` and the number filled into `count`.
///
/// # Safety
/// `model` must be a live handle; `ids` and `scores` must hold `k` elements.
#[no_mangle]
pub unsafe extern "C" fn dse_model_knn(
    model: *const DseModel,
    word: *const c_char,
    k: usize,
    ids: *mut usize,
    scores: *mut f64,
    count: *mut usize,
) -> DseStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(ids, "ids")?;
        non_null(scores, "scores")?;
        non_null(count, "count")?;
        let word = str_arg(word, "word")?;
        let m = &*model;
        let list = m.index()?.knn_with(word, k, Metric::Learned)?;
        for (slot, (w, s)) in list.neighbors.iter().enumerate() {
            *ids.add(slot) = m.vocab.id_of(w).expect("neighbor comes from the vocabulary");
            *scores.add(slot) = *s;
        }
        *count = list.neighbors.len();
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dse_model_free(model: *mut DseModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
