//! C ABI for svaug.
//!
//! Every fallible function returns an [`SvaugStatus`]. On failure the message
//! is available from [`svaug_last_error`] until the next call on the same
//! thread. Strings returned through `char **` out-parameters must be released
//! with [`svaug_string_free`]; handles with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use serde::{Deserialize, Serialize};

use svaug::augment::{StubClient, Technique};
use svaug::corpus::{class_distribution, Corpus, CvssMetric, N_CLASSES};
use svaug::eval::{macro_f1, multiclass_mcc, wilcoxon_signed_rank, ConfusionMatrix, Magnitude, WilcoxonOutcome};
use svaug::features::TfIdfModel;
use svaug::forest::{train_forest, ForestParams, TrainedModel};
use svaug::harness::{augment_preview, ingest_feeds, load_corpus, AugmentationSettings, CorpusSource};
use svaug::textprep::{fit_vocabulary, preprocess, StopWordSet, TokenizedDoc};
use svaug::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvaugStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Bad input or configuration, unreadable file, parse failure.
    InputError = 3,
    /// Nothing left to work with, e.g. a corpus with no valid records.
    EmptyData = 4,
    /// A degenerate request such as deleting the only word of a text.
    Degenerate = 5,
    Internal = 6,
    Panic = 7,
}

/// Outcome kind of [`svaug_wilcoxon`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvaugWilcoxonKind {
    Tested = 0,
    NoDifference = 1,
    TooFewPairs = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvaugWilcoxon {
    pub kind: SvaugWilcoxonKind,
    /// Pairs with a nonzero difference.
    pub n: usize,
    pub z: f64,
    pub p_value: f64,
    pub r: f64,
    /// 0 negligible, 1 small, 2 medium, 3 large.
    pub magnitude: u32,
    /// `p_value` below 0.01.
    pub significant: bool,
}

/// Opaque corpus handle.
pub struct SvaugCorpus(Corpus);

/// Opaque classifier handle: TF-IDF features plus a random forest.
#[derive(Serialize, Deserialize)]
pub struct SvaugClassifier {
    tfidf: TfIdfModel,
    model: TrainedModel,
    #[serde(skip, default = "StopWordSet::bundled")]
    stop_words: StopWordSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> SvaugStatus {
    match e {
        Error::Degenerate(_) => SvaugStatus::Degenerate,
        Error::Unit { source, .. } => status_of(source),
        e => match e.exit_code() {
            2 => SvaugStatus::InputError,
            3 => SvaugStatus::EmptyData,
            _ => SvaugStatus::Internal,
        },
    }
}

struct Fail(SvaugStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SvaugStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SvaugStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SvaugStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(SvaugStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(SvaugStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(SvaugStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(SvaugStatus::Internal, "output contains a nul byte".into()))
}

fn metric_arg(metric: u32) -> Result<CvssMetric, Fail> {
    CvssMetric::from_index(metric as usize)
        .ok_or_else(|| Fail(SvaugStatus::InputError, format!("metric index {metric} is out of range 0..7")))
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn svaug_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Loads a corpus in the native CSV format.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn svaug_corpus_load_csv(path: *const c_char, out: *mut *mut SvaugCorpus) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let corpus = load_corpus(&CorpusSource::Csv(path.into()))?;
        *out = Box::into_raw(Box::new(SvaugCorpus(corpus)));
        Ok(())
    })
}

/// Loads and validates one NVD JSON 1.1 feed.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn svaug_corpus_load_nvd_json(path: *const c_char, out: *mut *mut SvaugCorpus) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let (corpus, _) = ingest_feeds(&[Path::new(path).to_path_buf()], Some(svaug::corpus::FeedFormat::NvdJson11))?;
        *out = Box::into_raw(Box::new(SvaugCorpus(corpus)));
        Ok(())
    })
}

/// Number of records; 0 for a null handle.
///
/// # Safety
/// `corpus` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svaug_corpus_len(corpus: *const SvaugCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.0.len())
}

/// Class counts of metric `metric` (0 access vector .. 6 severity), in class order.
///
/// # Safety
/// `corpus` must be a live handle and `out` point to three writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn svaug_corpus_class_counts(
    corpus: *const SvaugCorpus,
    metric: u32,
    out: *mut usize,
) -> SvaugStatus {
    guard(|| {
        non_null(corpus, "corpus")?;
        non_null(out, "out")?;
        let d = class_distribution(&(*corpus).0, metric_arg(metric)?);
        std::slice::from_raw_parts_mut(out, N_CLASSES).copy_from_slice(&d.counts);
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svaug_corpus_free(corpus: *mut SvaugCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// One synthetic variant of `text` made with `technique` (for example
/// "insertion" or "combination"). The frequent-word pool comes from `pool`,
/// or from the bundled mini corpus when `pool` is null.
///
/// # Safety
/// Strings must be nul-terminated, `pool` null or live, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn svaug_augment_text(
    pool: *const SvaugCorpus,
    text: *const c_char,
    technique: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = str_arg(text, "text")?;
        let technique: Technique = str_arg(technique, "technique")?.parse()?;
        let records = match pool.as_ref() {
            Some(c) => c.0.records().to_vec(),
            None => svaug::harness::preview_pool_corpus(None)?,
        };
        let sample = augment_preview(text, technique, seed, 1, &AugmentationSettings::default(), &records, &StubClient)?
            .remove(0);
        match sample.text {
            Some(t) => {
                *out = to_c_string(t)?;
                Ok(())
            }
            None => Err(Fail(SvaugStatus::Degenerate, sample.skipped.unwrap_or_default())),
        }
    })
}

/// Preprocessed tokens of `text` joined by single spaces.
///
/// # Safety
/// `text` must be nul-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn svaug_preprocess(text: *const c_char, out: *mut *mut c_char) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        let doc = preprocess(str_arg(text, "text")?, &StopWordSet::bundled());
        *out = to_c_string(doc.proc_tokens.join(" "))?;
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svaug_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn confusion(counts: *const u64) -> Result<ConfusionMatrix, Fail> {
    non_null(counts, "counts")?;
    let c = std::slice::from_raw_parts(counts, 9);
    Ok(ConfusionMatrix::new([[c[0], c[1], c[2]], [c[3], c[4], c[5]], [c[6], c[7], c[8]]]))
}

/// Multiclass MCC of a row-major 3x3 confusion matrix (rows are truth).
///
/// # Safety
/// `counts` must point to nine `uint64_t`, `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn svaug_multiclass_mcc(counts: *const u64, out: *mut f64) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = multiclass_mcc(&confusion(counts)?);
        Ok(())
    })
}

/// Macro F1 of a row-major 3x3 confusion matrix.
///
/// # Safety
/// As for [`svaug_multiclass_mcc`].
#[no_mangle]
pub unsafe extern "C" fn svaug_macro_f1(counts: *const u64, out: *mut f64) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = macro_f1(&confusion(counts)?);
        Ok(())
    })
}

/// Wilcoxon signed-rank test of paired samples `a` and `b` of length `n`.
///
/// # Safety
/// `a` and `b` must point to `n` doubles, `out` to a writable result.
#[no_mangle]
pub unsafe extern "C" fn svaug_wilcoxon(a: *const f64, b: *const f64, n: usize, out: *mut SvaugWilcoxon) -> SvaugStatus {
    guard(|| {
        non_null(a, "a")?;
        non_null(b, "b")?;
        non_null(out, "out")?;
        let a = std::slice::from_raw_parts(a, n);
        let b = std::slice::from_raw_parts(b, n);
        let empty = |kind, n| SvaugWilcoxon {
            kind,
            n,
            z: 0.0,
            p_value: 1.0,
            r: 0.0,
            magnitude: 0,
            significant: false,
        };
        *out = match wilcoxon_signed_rank(a, b)? {
            WilcoxonOutcome::Tested(r) => SvaugWilcoxon {
                kind: SvaugWilcoxonKind::Tested,
                n: r.n,
                z: r.z,
                p_value: r.p_value,
                r: r.r,
                magnitude: match r.magnitude {
                    Magnitude::Negligible => 0,
                    Magnitude::Small => 1,
                    Magnitude::Medium => 2,
                    Magnitude::Large => 3,
                },
                significant: r.significant,
            },
            WilcoxonOutcome::NoDifference => empty(SvaugWilcoxonKind::NoDifference, 0),
            WilcoxonOutcome::TooFewPairs { n } => empty(SvaugWilcoxonKind::TooFewPairs, n),
        };
        Ok(())
    })
}

/// Trains a TF-IDF random forest on `n` descriptions with class labels 0..3.
///
/// # Safety
/// `texts` must point to `n` nul-terminated strings, `labels` to `n` bytes,
/// `out` must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn svaug_classifier_train(
    texts: *const *const c_char,
    labels: *const u8,
    n: usize,
    n_trees: u32,
    max_depth: u32,
    max_leaf_nodes: u32,
    seed: u64,
    out: *mut *mut SvaugClassifier,
) -> SvaugStatus {
    guard(|| {
        non_null(texts, "texts")?;
        non_null(labels, "labels")?;
        non_null(out, "out")?;
        if n == 0 {
            return Err(Fail(SvaugStatus::EmptyData, "no training texts".into()));
        }
        let stop_words = StopWordSet::bundled();
        let texts = std::slice::from_raw_parts(texts, n);
        let docs: Vec<TokenizedDoc> = texts
            .iter()
            .map(|&t| str_arg(t, "texts[i]").map(|s| preprocess(s, &stop_words)))
            .collect::<Result<_, _>>()?;
        let y: Vec<usize> = std::slice::from_raw_parts(labels, n).iter().map(|&l| l as usize).collect();
        if let Some(bad) = y.iter().find(|&&l| l >= N_CLASSES) {
            return Err(Fail(SvaugStatus::InputError, format!("label {bad} is out of range 0..3")));
        }
        let tfidf = TfIdfModel::fit(&docs, fit_vocabulary(&docs, 0.0)?);
        let x: Vec<_> = docs.iter().map(|d| tfidf.transform(d)).collect();
        let params = ForestParams {
            seed,
            ..ForestParams::new(n_trees as usize, max_depth as usize, max_leaf_nodes as usize)
        };
        let model = train_forest(&x, &y, &params)?;
        *out = Box::into_raw(Box::new(SvaugClassifier { tfidf, model, stop_words }));
        Ok(())
    })
}

/// Predicted class of `text`.
///
/// # Safety
/// `classifier` must be live, `text` nul-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn svaug_classifier_predict(
    classifier: *const SvaugClassifier,
    text: *const c_char,
    out: *mut u32,
) -> SvaugStatus {
    guard(|| {
        non_null(classifier, "classifier")?;
        non_null(out, "out")?;
        let c = &*classifier;
        let x = c.tfidf.transform(&preprocess(str_arg(text, "text")?, &c.stop_words));
        *out = c.model.predict(&x)? as u32;
        Ok(())
    })
}

/// Writes the classifier as JSON.
///
/// # Safety
/// `classifier` must be live and `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn svaug_classifier_save(classifier: *const SvaugClassifier, path: *const c_char) -> SvaugStatus {
    guard(|| {
        non_null(classifier, "classifier")?;
        let path = str_arg(path, "path")?;
        let json = serde_json::to_vec(&*classifier).map_err(Error::from)?;
        std::fs::write(path, json).map_err(|e| Fail(SvaugStatus::InputError, format!("cannot write {path}: {e}")))
    })
}

/// Reads a classifier written by [`svaug_classifier_save`].
///
/// # Safety
/// `path` must be nul-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn svaug_classifier_load(path: *const c_char, out: *mut *mut SvaugClassifier) -> SvaugStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let bytes = std::fs::read(path).map_err(|e| Fail(SvaugStatus::InputError, format!("cannot read {path}: {e}")))?;
        let c: SvaugClassifier = serde_json::from_slice(&bytes)
            .map_err(|e| Fail(SvaugStatus::InputError, format!("malformed classifier file: {e}")))?;
        *out = Box::into_raw(Box::new(c));
        Ok(())
    })
}

/// # Safety
/// `classifier` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn svaug_classifier_free(classifier: *mut SvaugClassifier) {
    if !classifier.is_null() {
        drop(Box::from_raw(classifier));
    }
}
