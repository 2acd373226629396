//! Answers requests from a recorded transcript, keyed by request digest.
//! Repeated identical requests are answered in recording order.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Mutex;

use super::{Provider, ProviderError, ProviderRequest, ProviderResponse, TranscriptEntry};

pub struct ReplayProvider {
    id: String,
    queues: Mutex<BTreeMap<String, VecDeque<Result<ProviderResponse, String>>>>,
}

impl ReplayProvider {
    pub fn new(entries: &[TranscriptEntry]) -> Self {
        let mut queues: BTreeMap<String, VecDeque<_>> = BTreeMap::new();
        let mut id = None;
        for e in entries {
            let outcome = match (&e.response, &e.error) {
                (Some(r), _) => {
                    id.get_or_insert_with(|| r.provider_id.clone());
                    Ok(r.clone())
                }
                (None, Some(err)) => Err(err.clone()),
                (None, None) => Err("recorded exchange has no outcome".to_string()),
            };
            queues.entry(e.request_digest.clone()).or_default().push_back(outcome);
        }
        Self {
            id: id.unwrap_or_else(|| "replay".into()),
            queues: Mutex::new(queues),
        }
    }
}

impl Provider for ReplayProvider {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn send(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let digest = request.digest();
        let mut queues = self.queues.lock().unwrap_or_else(|p| p.into_inner());
        let next = queues.get_mut(&digest).and_then(VecDeque::pop_front);
        match next {
            Some(Ok(r)) => Ok(r),
            Some(Err(e)) => Err(ProviderError::Unavailable(format!("recorded failure: {e}"))),
            None => Err(ProviderError::NotRecorded {
                purpose: request.purpose,
                digest,
            }),
        }
    }
}
