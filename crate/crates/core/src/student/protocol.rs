//! Line protocol between the harness and an external student.
//!
//! Each request and reply is one JSON object on its own line:
//!
//! ```text
//! > {"cmd":"train","params":[1.2,4.5]}
//! < {"reward":-87.5}
//! > {"cmd":"eval","params":[0.3,5.1]}
//! < {"reward":212.0}
//! > {"cmd":"reset","mode":"scratch"}
//! < {"ok":true}
//! ```
//!
//! Parameters are raw task coordinates. A reply of `{"error":"..."}` aborts
//! the run.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{ResetMode, Student};
use crate::error::Result;
use crate::space::TaskParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Request {
    Train { params: Vec<f64> },
    Eval { params: Vec<f64> },
    Reset { mode: ResetMode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Reward { reward: f64 },
    Ok { ok: bool },
    Error { error: String },
}

/// Answers requests from `input` with `student` until end of input.
pub fn serve<S, R, W>(student: &mut S, input: R, mut output: W) -> Result<()>
where
    S: Student + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&line) {
            Err(e) => Reply::Error { error: format!("bad request: {e}") },
            Ok(request) => answer(student, request),
        };
        serde_json::to_writer(&mut output, &reply)?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

fn answer<S: Student + ?Sized>(student: &mut S, request: Request) -> Reply {
    let outcome = match request {
        Request::Train { params } => student.train_on(&TaskParams(params)).map(|reward| Reply::Reward { reward }),
        Request::Eval { params } => student.evaluate(&TaskParams(params)).map(|reward| Reply::Reward { reward }),
        Request::Reset { mode } => student.reset(mode).map(|()| Reply::Ok { ok: true }),
    };
    outcome.unwrap_or_else(|e| Reply::Error { error: e.to_string() })
}
