use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::experience::{ActionId, Real};
use crate::policy::Policy;

struct Session {
    child: Child,
    input: ChildStdin,
    output: BufReader<ChildStdout>,
    failed: bool,
}

/// A teacher living in a child process.
///
/// Each query writes the state as one line of space-separated numbers and
/// reads back one line holding the action id. The child is started once
/// through `sh -c` and reused. After the first protocol failure every later
/// query fails too.
pub struct ExternalTeacher {
    command: String,
    session: Mutex<Session>,
}

impl ExternalTeacher {
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| Error::ExternalTeacher(format!("cannot start `{command}`: {e}")))?;
        let input = child.stdin.take().expect("piped");
        let output = BufReader::new(child.stdout.take().expect("piped"));
        Ok(ExternalTeacher {
            command: command.to_string(),
            session: Mutex::new(Session {
                child,
                input,
                output,
                failed: false,
            }),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }
}

impl Session {
    fn query(&mut self, state: &[f64]) -> Result<ActionId> {
        let line: Vec<String> = state.iter().map(|&v| Real(v).to_string()).collect();
        writeln!(self.input, "{}", line.join(" "))
            .and_then(|_| self.input.flush())
            .map_err(|e| Error::ExternalTeacher(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = self
            .output
            .read_line(&mut reply)
            .map_err(|e| Error::ExternalTeacher(format!("read failed: {e}")))?;
        if n == 0 {
            return Err(Error::ExternalTeacher("child closed its output".into()));
        }
        reply
            .trim()
            .parse::<usize>()
            .map(ActionId)
            .map_err(|_| Error::ExternalTeacher(format!("bad reply {:?}", reply.trim_end())))
    }
}

impl Policy for ExternalTeacher {
    fn act(&self, state: &[f64]) -> Result<ActionId> {
        let mut session = self.session.lock().unwrap_or_else(|p| p.into_inner());
        if session.failed {
            return Err(Error::ExternalTeacher("teacher failed earlier".into()));
        }
        let answer = session.query(state);
        if answer.is_err() {
            session.failed = true;
            let _ = session.child.kill();
        }
        answer
    }
}

impl Drop for ExternalTeacher {
    fn drop(&mut self) {
        let session = self.session.get_mut().unwrap_or_else(|p| p.into_inner());
        let _ = session.child.kill();
        let _ = session.child.wait();
    }
}
