use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// One trace line. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t_us: u64,
    pub ev: String,
    pub who: String,
    pub res: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, r: TraceRecord) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Trace { records })
    }

    /// Hex SHA-256 of the JSON-lines form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    /// Largest number of simultaneous holders of `res` seen in the trace.
    pub fn max_concurrent_holders(&self, res: &str) -> usize {
        let (mut cur, mut max) = (0usize, 0usize);
        for r in self.records.iter().filter(|r| r.res.as_deref() == Some(res)) {
            match r.ev.as_str() {
                "acquire" => {
                    cur += 1;
                    max = max.max(cur);
                }
                "release" => cur = cur.saturating_sub(1),
                _ => {}
            }
        }
        max
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let mut t = Trace::default();
        t.push(TraceRecord {
            t_us: 5,
            ev: "acquire".into(),
            who: "agv1".into(),
            res: Some("X1".into()),
        });
        t.push(TraceRecord {
            t_us: 9,
            ev: "arrive".into(),
            who: "agv1".into(),
            res: None,
        });
        let text = t.to_jsonl();
        assert_eq!(
            text,
            "{\"t_us\":5,\"ev\":\"acquire\",\"who\":\"agv1\",\"res\":\"X1\"}\n{\"t_us\":9,\"ev\":\"arrive\",\"who\":\"agv1\",\"res\":null}\n"
        );
        assert_eq!(Trace::from_jsonl(&text).unwrap(), t);
        assert_eq!(t.hash().len(), 64);
        assert_eq!(t.max_concurrent_holders("X1"), 1);
    }
}
