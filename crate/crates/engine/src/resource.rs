use std::collections::VecDeque;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(pub usize);

/// A pool of identical units with a FIFO wait queue. Waiting requests carry
/// the action to schedule once granted.
#[derive(Debug, Clone)]
pub struct Resource<A> {
    pub(crate) name: String,
    pub(crate) capacity: usize,
    pub(crate) holders: Vec<String>,
    pub(crate) queue: VecDeque<(String, i32, A)>,
    pub(crate) acquisitions: u64,
    pub(crate) releases: u64,
}

impl<A> Resource<A> {
    pub(crate) fn new(name: &str, capacity: usize) -> Resource<A> {
        Resource {
            name: name.to_string(),
            capacity,
            holders: Vec::new(),
            queue: VecDeque::new(),
            acquisitions: 0,
            releases: 0,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn holders(&self) -> &[String] {
        &self.holders
    }

    pub fn waiting(&self) -> impl Iterator<Item = &str> {
        self.queue.iter().map(|(w, _, _)| w.as_str())
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn acquisitions(&self) -> u64 {
        self.acquisitions
    }

    pub fn releases(&self) -> u64 {
        self.releases
    }
}

/// `waiter` is queued on `resource`, currently held by `holders`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WaitEdge {
    pub waiter: String,
    pub resource: String,
    pub holders: Vec<String>,
}
