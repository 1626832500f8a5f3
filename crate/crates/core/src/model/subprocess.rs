//! Newline-delimited JSON model adapter: writes `{"x":[...]}` to the child's
//! stdin and reads `{"y":<number>}` from its stdout, one request per line.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Serialize)]
struct Request<'a> {
    x: &'a [f64],
}

#[derive(Deserialize)]
struct Response {
    y: f64,
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl Drop for Running {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct SubprocessModel {
    command: String,
    dimension: usize,
    timeout: Duration,
    process: Mutex<Option<Running>>,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
}

enum Exchange {
    Ok(f64),
    Eof,
}

impl SubprocessModel {
    /// `command` is run through `sh -c`.
    pub fn new(command: impl Into<String>, dimension: usize, timeout: Duration) -> Self {
        Self {
            command: command.into(),
            dimension,
            timeout,
            process: Mutex::new(None),
            cache: Mutex::new(HashMap::new()),
        }
    }

    fn spawn(&self) -> Result<Running> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Transport(format!("cannot start `{}`: {e}", self.command)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Running {
            child,
            stdin,
            lines: rx,
        })
    }

    fn exchange(&self, proc: &mut Running, payload: &str) -> Result<Exchange> {
        if writeln!(proc.stdin, "{payload}")
            .and_then(|_| proc.stdin.flush())
            .is_err()
        {
            return Ok(Exchange::Eof);
        }
        match proc.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => {
                let resp: Response = serde_json::from_str(line.trim())
                    .map_err(|e| Error::Transport(format!("malformed response `{}`: {e}", line.trim())))?;
                if !resp.y.is_finite() {
                    return Err(Error::Transport("model returned a non-finite y".into()));
                }
                Ok(Exchange::Ok(resp.y))
            }
            Ok(Err(e)) => Err(Error::Transport(format!("reading model output: {e}"))),
            Err(RecvTimeoutError::Disconnected) => Ok(Exchange::Eof),
            Err(RecvTimeoutError::Timeout) => Err(Error::Transport(format!("no response within {:?}", self.timeout))),
        }
    }

    fn query(&self, x: &[f64]) -> Result<f64> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(&y) = self.cache.lock().unwrap().get(&key) {
            return Ok(y);
        }
        let payload = serde_json::to_string(&Request { x })?;
        let mut guard = self.process.lock().unwrap();
        // one restart if the process hit EOF
        for attempt in 0..2 {
            if guard.is_none() {
                *guard = Some(self.spawn()?);
            }
            let outcome = self.exchange(guard.as_mut().unwrap(), &payload);
            match outcome {
                Ok(Exchange::Ok(y)) => {
                    self.cache.lock().unwrap().insert(key, y);
                    return Ok(y);
                }
                Ok(Exchange::Eof) if attempt == 0 => *guard = None,
                Ok(Exchange::Eof) => break,
                Err(e) => {
                    // the stream may be out of sync now
                    *guard = None;
                    return Err(e);
                }
            }
        }
        Err(Error::Transport(format!("`{}` closed its output", self.command)))
    }
}

impl<T: Scalar> Model<T> for SubprocessModel {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn predict(&self, x: &[T]) -> Result<T> {
        let xs: Vec<f64> = x.iter().map(|v| v.to_f64_lossy()).collect();
        self.query(&xs).map(T::of)
    }

    fn serial(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelHandle;

    const ECHO_SUM: &str = r#"python3 -u -c '
import sys, json
for line in sys.stdin:
    x = json.loads(line)["x"]
    print(json.dumps({"y": sum(x)}))
'"#;

    fn python_available() -> bool {
        Command::new("python3").arg("--version").output().is_ok()
    }

    #[test]
    fn round_trip_and_cache() {
        if !python_available() {
            return;
        }
        let m = ModelHandle::new(SubprocessModel::new(ECHO_SUM, 2, Duration::from_secs(10)));
        assert_eq!(m.evaluate(&[1.5, 2.0]).unwrap(), 3.5);
        assert_eq!(m.evaluate(&[1.5, 2.0]).unwrap(), 3.5);
        assert_eq!(m.evaluate(&[-1.0, 0.25]).unwrap(), -0.75);
        assert_eq!(m.query_count(), 3);
    }

    #[test]
    fn restarts_after_eof() {
        if !python_available() {
            return;
        }
        // answers a single request, then exits
        let cmd = r#"python3 -u -c '
import sys, json
line = sys.stdin.readline()
print(json.dumps({"y": 2*json.loads(line)["x"][0]}))
'"#;
        let m = SubprocessModel::new(cmd, 1, Duration::from_secs(10));
        assert_eq!(Model::<f64>::predict(&m, &[1.0]).unwrap(), 2.0);
        assert_eq!(Model::<f64>::predict(&m, &[4.0]).unwrap(), 8.0);
    }

    #[test]
    fn malformed_response_is_a_transport_error() {
        let m = SubprocessModel::new("while read l; do echo nope; done", 1, Duration::from_secs(10));
        let err = Model::<f64>::predict(&m, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Transport(_)), "{err}");
    }

    #[test]
    fn timeout_is_a_transport_error() {
        let m = SubprocessModel::new("sleep 5", 1, Duration::from_millis(100));
        let err = Model::<f64>::predict(&m, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Transport(_)), "{err}");
    }

    #[test]
    fn missing_program_is_a_transport_error() {
        let m = SubprocessModel::new("exit 0", 1, Duration::from_secs(1));
        let err = Model::<f64>::predict(&m, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::Transport(_)), "{err}");
    }
}
