//! Mesh job table and the bounded worker pool that fills it.

use std::collections::BTreeMap;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::JoinHandle;

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};

use crate::mesh::AssetMeta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Ready,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset_id: String,
    pub object_name: String,
    pub status: JobStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<AssetMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Default)]
pub struct JobTable {
    records: Mutex<BTreeMap<String, AssetRecord>>,
    idle: Condvar,
}

impl JobTable {
    pub fn insert(&self, record: AssetRecord) {
        self.records.lock().insert(record.asset_id.clone(), record);
        self.idle.notify_all();
    }

    pub fn get(&self, asset_id: &str) -> Option<AssetRecord> {
        self.records.lock().get(asset_id).cloned()
    }

    pub fn finish(&self, asset_id: &str, outcome: Result<AssetMeta, String>) {
        let mut records = self.records.lock();
        if let Some(r) = records.get_mut(asset_id) {
            match outcome {
                Ok(meta) => {
                    r.status = JobStatus::Ready;
                    r.meta = Some(meta);
                }
                Err(e) => {
                    r.status = JobStatus::Failed;
                    r.error = Some(e);
                }
            }
        }
        drop(records);
        self.idle.notify_all();
    }

    pub fn pending(&self) -> usize {
        self.records.lock().values().filter(|r| r.status == JobStatus::Pending).count()
    }

    /// Block until no job is pending.
    pub fn wait_idle(&self) {
        let mut records = self.records.lock();
        while records.values().any(|r| r.status == JobStatus::Pending) {
            self.idle.wait(&mut records);
        }
    }
}

type Job = Box<dyn FnOnce() + Send>;

/// Fixed number of worker threads; zero workers runs jobs inline.
pub struct WorkerPool {
    tx: Mutex<Option<mpsc::Sender<Job>>>,
    handles: Vec<JoinHandle<()>>,
}

impl WorkerPool {
    pub fn new(workers: usize) -> Self {
        if workers == 0 {
            return WorkerPool { tx: Mutex::new(None), handles: Vec::new() };
        }
        let (tx, rx) = mpsc::channel::<Job>();
        let rx = Arc::new(Mutex::new(rx));
        let handles = (0..workers)
            .map(|i| {
                let rx = Arc::clone(&rx);
                std::thread::Builder::new()
                    .name(format!("mesh-worker-{i}"))
                    .spawn(move || loop {
                        let job = rx.lock().recv();
                        match job {
                            Ok(job) => job(),
                            Err(_) => break,
                        }
                    })
                    .expect("spawn mesh worker")
            })
            .collect();
        WorkerPool { tx: Mutex::new(Some(tx)), handles }
    }

    pub fn submit(&self, job: impl FnOnce() + Send + 'static) {
        match self.tx.lock().as_ref() {
            Some(tx) => tx.send(Box::new(job)).expect("worker pool alive"),
            None => job(),
        }
    }
}

impl Drop for WorkerPool {
    fn drop(&mut self) {
        self.tx.lock().take();
        for h in self.handles.drain(..) {
            let _ = h.join();
        }
    }
}
