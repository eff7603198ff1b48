//! Streaming N-Triples ingestion into per-language distinct-entity counts.
//!
//! An entity is a distinct subject term carrying at least one
//! language-tagged literal through a qualifying predicate. Counting is
//! either exact (a set of subject identifiers per tag) or approximate (a
//! HyperLogLog sketch per tag). Accumulators are single-writer; parallel
//! runs count disjoint shards and merge the results.

mod ntriples;
mod sketch;

pub use ntriples::{parse_ntriples_line, Literal, Object, Subject, SyntaxError, Triple};
pub use sketch::{HyperLogLog, DEFAULT_PRECISION, MAX_PRECISION, MIN_PRECISION};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use flate2::read::MultiGzDecoder;
use thiserror::Error;

use crate::langcodes::LanguageTag;

pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
pub const SKOS_PREF_LABEL: &str = "http://www.w3.org/2004/02/skos/core#prefLabel";
pub const SKOS_ALT_LABEL: &str = "http://www.w3.org/2004/02/skos/core#altLabel";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {source}")]
    Parse {
        line: u64,
        #[source]
        source: SyntaxError,
    },
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("cannot merge accumulators: {0}")]
    Mismatch(String),
    #[error("sketch precision {0} outside {MIN_PRECISION}..={MAX_PRECISION}")]
    Precision(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    Exact,
    Approximate { precision: u8, seed: u64 },
}

impl CountMode {
    pub fn approximate(precision: u8) -> Result<Self, IngestError> {
        if !(MIN_PRECISION..=MAX_PRECISION).contains(&precision) {
            return Err(IngestError::Precision(precision));
        }
        Ok(CountMode::Approximate { precision, seed: 0 })
    }
}

/// Which predicates qualify a language-tagged literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredicateFilter {
    Any,
    Only(BTreeSet<String>),
}

impl PredicateFilter {
    pub fn labels() -> Self {
        PredicateFilter::Only(
            [RDFS_LABEL, SKOS_PREF_LABEL, SKOS_ALT_LABEL]
                .into_iter()
                .map(String::from)
                .collect(),
        )
    }

    pub fn accepts(&self, predicate: &str) -> bool {
        match self {
            PredicateFilter::Any => true,
            PredicateFilter::Only(set) => set.contains(predicate),
        }
    }
}

impl Default for PredicateFilter {
    fn default() -> Self {
        PredicateFilter::labels()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountOptions {
    pub filter: PredicateFilter,
    /// Abort on the first malformed line instead of counting and skipping it.
    pub strict: bool,
}

#[derive(Debug, Clone)]
enum Tracker {
    Exact(HashSet<Box<str>>),
    Sketch(HyperLogLog),
}

impl Tracker {
    fn count(&self) -> u64 {
        match self {
            Tracker::Exact(set) => set.len() as u64,
            Tracker::Sketch(hll) => hll.count(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CountAccumulator {
    mode: CountMode,
    per_tag: BTreeMap<LanguageTag, Tracker>,
    lines_consumed: u64,
    triples_seen: u64,
    parse_errors: u64,
    skipped_lines: u64,
}

impl CountAccumulator {
    pub fn new(mode: CountMode) -> Self {
        CountAccumulator {
            mode,
            per_tag: BTreeMap::new(),
            lines_consumed: 0,
            triples_seen: 0,
            parse_errors: 0,
            skipped_lines: 0,
        }
    }

    pub fn exact() -> Self {
        Self::new(CountMode::Exact)
    }

    pub fn mode(&self) -> CountMode {
        self.mode
    }

    pub fn lines_consumed(&self) -> u64 {
        self.lines_consumed
    }

    pub fn triples_seen(&self) -> u64 {
        self.triples_seen
    }

    pub fn parse_errors(&self) -> u64 {
        self.parse_errors
    }

    /// Blank and comment lines.
    pub fn skipped_lines(&self) -> u64 {
        self.skipped_lines
    }

    pub fn tag_count(&self) -> usize {
        self.per_tag.len()
    }

    /// Records `subject` as an entity tagged with `tag`.
    pub fn add(&mut self, tag: &LanguageTag, subject: &str) {
        let mode = self.mode;
        let tracker = match self.per_tag.get_mut(tag) {
            Some(t) => t,
            None => self.per_tag.entry(tag.clone()).or_insert_with(|| match mode {
                CountMode::Exact => Tracker::Exact(HashSet::new()),
                CountMode::Approximate { precision, seed } => {
                    Tracker::Sketch(HyperLogLog::new(precision, seed))
                }
            }),
        };
        match tracker {
            Tracker::Exact(set) => {
                if !set.contains(subject) {
                    set.insert(subject.into());
                }
            }
            Tracker::Sketch(hll) => hll.insert(subject.as_bytes()),
        }
    }

    /// Feeds one line. Returns the syntax error in strict mode only; in
    /// lenient mode errors are counted.
    pub fn feed_line(&mut self, line: &str, opts: &CountOptions) -> Result<(), SyntaxError> {
        self.lines_consumed += 1;
        match parse_ntriples_line(line) {
            Ok(None) => self.skipped_lines += 1,
            Ok(Some(triple)) => {
                self.triples_seen += 1;
                if let Some(tag) = triple.language_tag() {
                    if opts.filter.accepts(&triple.predicate) {
                        self.add(tag, &triple.subject.key());
                    }
                }
            }
            Err(err) => {
                self.parse_errors += 1;
                if opts.strict {
                    return Err(err);
                }
            }
        }
        Ok(())
    }

    /// Exact counts, or sketch estimates in approximate mode.
    pub fn report_counts(&self) -> BTreeMap<LanguageTag, u64> {
        self.per_tag
            .iter()
            .map(|(tag, tracker)| (tag.clone(), tracker.count()))
            .collect()
    }

    /// Merges `other` into `self`: set union or register-wise maximum, with
    /// line counters summed.
    pub fn merge(&mut self, other: CountAccumulator) -> Result<(), IngestError> {
        if self.mode != other.mode {
            return Err(IngestError::Mismatch(format!(
                "{:?} vs {:?}",
                self.mode, other.mode
            )));
        }
        for (tag, tracker) in other.per_tag {
            match self.per_tag.get_mut(&tag) {
                None => {
                    self.per_tag.insert(tag, tracker);
                }
                Some(mine) => match (mine, tracker) {
                    (Tracker::Exact(a), Tracker::Exact(b)) => {
                        if a.len() < b.len() {
                            let small = std::mem::replace(a, b);
                            a.extend(small);
                        } else {
                            a.extend(b);
                        }
                    }
                    (Tracker::Sketch(a), Tracker::Sketch(b)) => {
                        if !a.merge(&b) {
                            return Err(IngestError::Mismatch("sketch parameters differ".into()));
                        }
                    }
                    _ => return Err(IngestError::Mismatch("tracker kinds differ".into())),
                },
            }
        }
        self.lines_consumed += other.lines_consumed;
        self.triples_seen += other.triples_seen;
        self.parse_errors += other.parse_errors;
        self.skipped_lines += other.skipped_lines;
        Ok(())
    }

    /// Sketch registers for `tag`, in approximate mode.
    pub fn sketch(&self, tag: &LanguageTag) -> Option<&HyperLogLog> {
        match self.per_tag.get(tag) {
            Some(Tracker::Sketch(h)) => Some(h),
            _ => None,
        }
    }
}

/// Merges two accumulators of the same mode.
pub fn merge_accumulators(
    mut a: CountAccumulator,
    b: CountAccumulator,
) -> Result<CountAccumulator, IngestError> {
    a.merge(b)?;
    Ok(a)
}

pub fn report_counts(acc: &CountAccumulator) -> BTreeMap<LanguageTag, u64> {
    acc.report_counts()
}

/// Counts an in-memory line sequence into `acc`.
pub fn count_entities<I, S>(
    lines: I,
    opts: &CountOptions,
    acc: &mut CountAccumulator,
) -> Result<(), IngestError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    for line in lines {
        acc.feed_line(line.as_ref(), opts)
            .map_err(|source| IngestError::Parse {
                line: acc.lines_consumed,
                source,
            })?;
    }
    Ok(())
}

/// Counts every line of `reader` into `acc`. Invalid UTF-8 lines count as
/// parse errors.
pub fn count_reader<R: BufRead>(
    mut reader: R,
    opts: &CountOptions,
    acc: &mut CountAccumulator,
) -> Result<(), IngestError> {
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            return Ok(());
        }
        feed_bytes(acc, &buf, opts).map_err(|source| IngestError::Parse {
            line: acc.lines_consumed,
            source,
        })?;
    }
}

fn feed_bytes(
    acc: &mut CountAccumulator,
    raw: &[u8],
    opts: &CountOptions,
) -> Result<(), SyntaxError> {
    match std::str::from_utf8(raw) {
        Ok(line) => acc.feed_line(line, opts),
        Err(e) => {
            acc.lines_consumed += 1;
            acc.parse_errors += 1;
            if opts.strict {
                Err(SyntaxError {
                    offset: e.valid_up_to(),
                    reason: "invalid UTF-8".into(),
                })
            } else {
                Ok(())
            }
        }
    }
}

const BATCH_LINES: usize = 16 * 1024;

/// Counts `reader` with `threads` worker accumulators and merges them.
///
/// Lines are dispatched in batches round-robin; in strict mode the error
/// with the lowest line number is reported.
pub fn count_reader_parallel<R: BufRead + Send>(
    mut reader: R,
    opts: &CountOptions,
    mode: CountMode,
    threads: usize,
) -> Result<CountAccumulator, IngestError> {
    let threads = threads.max(1);
    if threads == 1 {
        let mut acc = CountAccumulator::new(mode);
        count_reader(reader, opts, &mut acc)?;
        return Ok(acc);
    }
    let abort = AtomicBool::new(false);
    std::thread::scope(|scope| {
        let mut senders = Vec::with_capacity(threads);
        let mut handles = Vec::with_capacity(threads);
        for _ in 0..threads {
            let (tx, rx) = mpsc::sync_channel::<(u64, Vec<Vec<u8>>)>(2);
            senders.push(tx);
            let abort = &abort;
            handles.push(scope.spawn(move || {
                let mut acc = CountAccumulator::new(mode);
                let mut first_error: Option<IngestError> = None;
                for (first_line, batch) in rx {
                    if first_error.is_some() {
                        continue;
                    }
                    for (i, raw) in batch.iter().enumerate() {
                        if let Err(source) = feed_bytes(&mut acc, raw, opts) {
                            first_error = Some(IngestError::Parse {
                                line: first_line + i as u64,
                                source,
                            });
                            abort.store(true, Ordering::Relaxed);
                            break;
                        }
                    }
                }
                match first_error {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            }));
        }

        let mut read_result: Result<(), IngestError> = Ok(());
        let mut next_line = 1u64;
        let mut worker = 0usize;
        'read: loop {
            if abort.load(Ordering::Relaxed) {
                break;
            }
            let mut batch = Vec::with_capacity(BATCH_LINES);
            while batch.len() < BATCH_LINES {
                let mut buf = Vec::new();
                match reader.read_until(b'\n', &mut buf) {
                    Ok(0) => break,
                    Ok(_) => batch.push(buf),
                    Err(e) => {
                        read_result = Err(e.into());
                        break 'read;
                    }
                }
            }
            if batch.is_empty() {
                break;
            }
            let len = batch.len() as u64;
            if senders[worker].send((next_line, batch)).is_err() {
                break;
            }
            next_line += len;
            worker = (worker + 1) % threads;
        }
        drop(senders);

        let mut merged = CountAccumulator::new(mode);
        let mut parse_error: Option<IngestError> = None;
        for handle in handles {
            match handle.join().expect("counting worker panicked") {
                Ok(acc) => merged.merge(acc)?,
                Err(IngestError::Parse { line, source }) => {
                    let earlier = match &parse_error {
                        Some(IngestError::Parse { line: l, .. }) => line < *l,
                        _ => true,
                    };
                    if earlier {
                        parse_error = Some(IngestError::Parse { line, source });
                    }
                }
                Err(e) => return Err(e),
            }
        }
        read_result?;
        match parse_error {
            Some(e) => Err(e),
            None => Ok(merged),
        }
    })
}

/// Opens a dump file, transparently decompressing gzip (detected by magic
/// bytes, not by extension).
pub fn open_dump(path: &Path) -> io::Result<Box<dyn BufRead + Send>> {
    let file = std::fs::File::open(path)?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let is_gzip = reader.fill_buf()?.starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        Ok(Box::new(BufReader::with_capacity(
            1 << 20,
            MultiGzDecoder::new(reader),
        )))
    } else {
        Ok(Box::new(reader))
    }
}

/// Reads and decompresses a whole dump; convenient for small inputs.
pub fn read_dump_to_string(path: &Path) -> io::Result<String> {
    let mut s = String::new();
    open_dump(path)?.read_to_string(&mut s)?;
    Ok(s)
}
