//! The concurrent corpus-decoding pipeline.
//!
//! Three roles communicate over bounded queues and share nothing else:
//! a scheduler feeds sentences into a jobs queue, each of the W workers
//! owns an independent decoder+predictor replica and moves items from
//! jobs to results, and a collector reorders results back into input
//! order as they arrive. Parallelism is per sentence: one worker runs a
//! whole decode. The bounded queues provide backpressure, so a slow
//! stage throttles the stages upstream of it instead of buffering the
//! corpus.
//!
//! A worker panic marks that sentence failed and the pipeline keeps
//! going; the worker discards its replica (whose invariants may be
//! broken mid-search) and builds a fresh one for the next job. Every
//! submitted sentence is therefore delivered exactly once, decoded or
//! failed.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::thread;

use crossbeam_channel as channel;

use crate::decoders::{Decoder, SearchResult};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::vocab::SourceSentence;

/// One worker's private decoding machinery.
pub type Replica = (Ensemble, Box<dyn Decoder>);

/// Builds a fresh replica over shared read-only resources. Called once
/// per worker, and again whenever a worker discards a poisoned replica.
pub type ReplicaFactory<'a> = dyn Fn() -> Result<Replica> + Sync + 'a;

/// Outcome of one corpus sentence. `Err` carries the reason a decode
/// blew up (an engine error or a worker panic); an `Ok` result with an
/// empty n-best list is a regular search failure.
#[derive(Debug)]
pub struct SentenceRecord {
    /// The sentence's corpus position as carried by its source.
    pub id: usize,
    pub result: std::result::Result<SearchResult, String>,
}

impl SentenceRecord {
    /// True when the sentence produced no output hypothesis, whether by
    /// search failure, engine error, or worker panic.
    pub fn is_failure(&self) -> bool {
        match &self.result {
            Ok(result) => result.is_failure(),
            Err(_) => true,
        }
    }
}

/// Totals over one corpus run, summed in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSummary {
    pub sentences: usize,
    pub failed: usize,
    pub expansions: u64,
    pub pruned: u64,
    pub restarts: u64,
    /// Sentences whose search stopped on an exhausted node budget.
    pub truncated: usize,
}

impl CorpusSummary {
    fn absorb(&mut self, record: &SentenceRecord) {
        self.sentences += 1;
        if record.is_failure() {
            self.failed += 1;
        }
        if let Ok(result) = &record.result {
            self.expansions += result.stats.expansions;
            self.pruned += result.stats.pruned;
            self.restarts += result.stats.restarts;
            self.truncated += result.stats.truncated as usize;
        }
    }
}

struct Job {
    seq: usize,
    src: SourceSentence,
}

struct Delivery {
    seq: usize,
    record: SentenceRecord,
}

/// Decodes `sentences` on `workers` parallel replicas, calling `emit`
/// with each sentence's record in input order as soon as its prefix of
/// the corpus is complete. The emit order, and therefore any output
/// written from it, is independent of the worker count.
pub fn decode_corpus<F>(
    sentences: Vec<SourceSentence>,
    workers: usize,
    factory: &ReplicaFactory<'_>,
    mut emit: F,
) -> Result<CorpusSummary>
where
    F: FnMut(SentenceRecord),
{
    if workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    let total = sentences.len();
    let capacity = workers * 2;
    let mut summary = CorpusSummary::default();

    thread::scope(|scope| -> Result<()> {
        let (job_tx, job_rx) = channel::bounded::<Job>(capacity);
        let (result_tx, result_rx) = channel::bounded::<Delivery>(capacity);

        scope.spawn(move || {
            for (seq, src) in sentences.into_iter().enumerate() {
                // A send error means every worker is gone; the job-loss
                // check below will report the shortfall.
                if job_tx.send(Job { seq, src }).is_err() {
                    return;
                }
            }
        });
        for _ in 0..workers {
            let jobs = job_rx.clone();
            let results = result_tx.clone();
            scope.spawn(move || worker_loop(jobs, results, factory));
        }
        drop(job_rx);
        drop(result_tx);

        // Collector: hold out-of-order arrivals until their turn.
        let mut pending: BTreeMap<usize, SentenceRecord> = BTreeMap::new();
        let mut next = 0usize;
        for delivery in result_rx.iter() {
            pending.insert(delivery.seq, delivery.record);
            while let Some(record) = pending.remove(&next) {
                summary.absorb(&record);
                emit(record);
                next += 1;
            }
        }
        if next != total || !pending.is_empty() {
            return Err(Error::Usage(format!(
                "pipeline delivered {} of {total} sentences",
                next + pending.len()
            )));
        }
        Ok(())
    })?;
    Ok(summary)
}

fn worker_loop(
    jobs: channel::Receiver<Job>,
    results: channel::Sender<Delivery>,
    factory: &ReplicaFactory<'_>,
) {
    let mut replica: Option<Replica> = None;
    for job in jobs.iter() {
        let delivery = Delivery { seq: job.seq, record: run_job(&mut replica, factory, &job.src) };
        if results.send(delivery).is_err() {
            return;
        }
    }
}

fn run_job(
    replica: &mut Option<Replica>,
    factory: &ReplicaFactory<'_>,
    src: &SourceSentence,
) -> SentenceRecord {
    let id = src.id();
    if replica.is_none() {
        match factory() {
            Ok(fresh) => *replica = Some(fresh),
            Err(e) => {
                return SentenceRecord { id, result: Err(format!("replica construction: {e}")) }
            }
        }
    }
    let (ensemble, decoder) = replica.as_mut().expect("replica just ensured");
    match catch_unwind(AssertUnwindSafe(|| decoder.decode(ensemble, src))) {
        Ok(Ok(result)) => SentenceRecord { id, result: Ok(result) },
        Ok(Err(e)) => SentenceRecord { id, result: Err(e.to_string()) },
        Err(payload) => {
            // The replica may have been left mid-mutation; rebuild it.
            *replica = None;
            SentenceRecord { id, result: Err(panic_text(payload)) }
        }
    }
}

fn panic_text(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(text) = payload.downcast_ref::<&str>() {
        format!("worker panic: {text}")
    } else if let Some(text) = payload.downcast_ref::<String>() {
        format!("worker panic: {text}")
    } else {
        "worker panic".to_string()
    }
}
