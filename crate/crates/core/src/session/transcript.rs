//! Session transcripts and their JSON Lines form.
//!
//! Line 1 is a [`SessionHeader`]; every later line is one [`TurnRecord`].

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{SessionConfig, SessionError};
use crate::constraint::{verify_instruction, InstructionVerdict};
use crate::script::TurnPlan;
use crate::synthesis::UserQuery;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    PatienceExhausted,
    CapReached,
    TransportFailure { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: u32,
    pub plan: TurnPlan,
    pub query: UserQuery,
    pub response: String,
    pub verdicts: InstructionVerdict,
    pub turn_success: bool,
    pub patience_after: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub session_id: String,
    pub seed: u64,
    pub adapter: String,
    pub config: SessionConfig,
    pub termination: Termination,
    pub turns: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub header: SessionHeader,
    pub records: Vec<TurnRecord>,
}

impl SessionTranscript {
    pub fn termination(&self) -> &Termination {
        &self.header.termination
    }

    pub fn success_flags(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.turn_success).collect()
    }

    /// Whether re-running the verifiers on stored responses reproduces the
    /// stored verdicts.
    pub fn replays(&self) -> bool {
        self.records.iter().all(|r| {
            let again = verify_instruction(&r.plan.instruction, &r.response);
            again == r.verdicts && again.all_satisfied == r.turn_success
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), SessionError> {
        serde_json::to_writer(&mut out, &self.header).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        for record in &self.records {
            serde_json::to_writer(&mut out, record).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<SessionTranscript, SessionError> {
        let mut lines = input.lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
        let parse_err = |line: usize, e: serde_json::Error| SessionError::Parse { line, message: e.to_string() };
        let (_, first) = lines.next().ok_or(SessionError::Parse { line: 1, message: "empty transcript".into() })?;
        let header: SessionHeader = serde_json::from_str(&first?).map_err(|e| parse_err(1, e))?;
        let mut records = Vec::new();
        for (i, line) in lines {
            let record: TurnRecord = serde_json::from_str(&line?).map_err(|e| parse_err(i + 1, e))?;
            records.push(record);
        }
        if records.len() != header.turns as usize {
            return Err(SessionError::Parse {
                line: records.len() + 1,
                message: format!("header declares {} turns, found {}", header.turns, records.len()),
            });
        }
        Ok(SessionTranscript { header, records })
    }

    /// Writes to a sibling temporary file, then renames it into place.
    pub fn save(&self, path: &Path) -> Result<(), SessionError> {
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = Path::new(&tmp);
        {
            let mut file = std::io::BufWriter::new(fs::File::create(tmp)?);
            self.write_jsonl(&mut file)?;
            file.flush()?;
        }
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SessionTranscript, SessionError> {
        SessionTranscript::read_jsonl(BufReader::new(fs::File::open(path)?))
    }
}
