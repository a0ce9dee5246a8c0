use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::str::FromStr;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::{self, MaskRequest, MaskResponse, PredictRequest, PredictResponse};
use super::{Candidate, MaskedLm, OracleError, Predictor, PROTOCOL_VERSION};
use crate::document::Document;

/// Where an oracle lives.
///
/// `tcp://host:port` (or bare `host:port`), `unix:///path/to/socket`, or
/// `exec:program arg ...` for a child process speaking over stdin/stdout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Unix(PathBuf),
    Exec(Vec<String>),
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("tcp://") {
            Ok(Endpoint::Tcp(rest.to_string()))
        } else if let Some(rest) = s.strip_prefix("unix://") {
            Ok(Endpoint::Unix(PathBuf::from(rest)))
        } else if let Some(rest) = s.strip_prefix("exec:") {
            let argv: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
            if argv.is_empty() {
                return Err("exec endpoint needs a program".into());
            }
            Ok(Endpoint::Exec(argv))
        } else if s.contains(':') {
            Ok(Endpoint::Tcp(s.to_string()))
        } else {
            Err(format!("unrecognised oracle endpoint `{s}`"))
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "tcp://{a}"),
            Endpoint::Unix(p) => write!(f, "unix://{}", p.display()),
            Endpoint::Exec(argv) => write!(f, "exec:{}", argv.join(" ")),
        }
    }
}

/// A bidirectional line channel. A timed-out read surfaces as `ErrorKind::TimedOut`.
pub trait LineChannel: Send {
    fn round_trip(&mut self, line: &str, timeout: Duration) -> io::Result<String>;
}

trait SocketLike: Read + Write + Send + Sized {
    fn set_read_deadline(&self, timeout: Duration) -> io::Result<()>;
    fn duplicate(&self) -> io::Result<Self>;
}

impl SocketLike for TcpStream {
    fn set_read_deadline(&self, timeout: Duration) -> io::Result<()> {
        self.set_read_timeout(Some(timeout))?;
        self.set_write_timeout(Some(timeout))
    }
    fn duplicate(&self) -> io::Result<Self> {
        self.try_clone()
    }
}

#[cfg(unix)]
impl SocketLike for std::os::unix::net::UnixStream {
    fn set_read_deadline(&self, timeout: Duration) -> io::Result<()> {
        self.set_read_timeout(Some(timeout))?;
        self.set_write_timeout(Some(timeout))
    }
    fn duplicate(&self) -> io::Result<Self> {
        self.try_clone()
    }
}

struct SocketChannel<S: SocketLike> {
    reader: BufReader<S>,
    writer: S,
}

impl<S: SocketLike> SocketChannel<S> {
    fn new(stream: S) -> io::Result<Self> {
        Ok(SocketChannel {
            reader: BufReader::new(stream.duplicate()?),
            writer: stream,
        })
    }
}

fn read_reply(reader: &mut impl BufRead) -> io::Result<String> {
    let mut buf = String::new();
    match reader.read_line(&mut buf) {
        Ok(0) => Err(io::Error::new(
            io::ErrorKind::UnexpectedEof,
            "oracle closed the connection",
        )),
        Ok(_) => Ok(buf),
        Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
            Err(io::Error::new(io::ErrorKind::TimedOut, e))
        }
        Err(e) => Err(e),
    }
}

impl<S: SocketLike> LineChannel for SocketChannel<S> {
    fn round_trip(&mut self, line: &str, timeout: Duration) -> io::Result<String> {
        self.writer.set_read_deadline(timeout)?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        read_reply(&mut self.reader)
    }
}

struct ProcessChannel {
    child: Child,
    stdin: ChildStdin,
    replies: Receiver<io::Result<String>>,
}

impl ProcessChannel {
    fn spawn(argv: &[String]) -> io::Result<Self> {
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let r = read_reply(&mut reader);
                let done = r.is_err();
                if tx.send(r).is_err() || done {
                    break;
                }
            }
        });
        Ok(ProcessChannel {
            child,
            stdin,
            replies,
        })
    }
}

impl LineChannel for ProcessChannel {
    fn round_trip(&mut self, line: &str, timeout: Duration) -> io::Result<String> {
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        match self.replies.recv_timeout(timeout) {
            Ok(r) => r,
            Err(RecvTimeoutError::Timeout) => {
                Err(io::Error::new(io::ErrorKind::TimedOut, "no reply"))
            }
            Err(RecvTimeoutError::Disconnected) => Err(io::Error::new(
                io::ErrorKind::UnexpectedEof,
                "oracle process exited",
            )),
        }
    }
}

impl Drop for ProcessChannel {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Opens a channel to `endpoint`.
pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<Box<dyn LineChannel>, OracleError> {
    let unreachable = |source| OracleError::Unreachable {
        endpoint: endpoint.to_string(),
        source,
    };
    match endpoint {
        Endpoint::Tcp(addr) => {
            let sock = addr
                .to_socket_addrs()
                .map_err(unreachable)?
                .next()
                .ok_or_else(|| {
                    unreachable(io::Error::new(io::ErrorKind::NotFound, "no address resolved"))
                })?;
            let stream = TcpStream::connect_timeout(&sock, timeout).map_err(unreachable)?;
            stream.set_nodelay(true).map_err(unreachable)?;
            Ok(Box::new(SocketChannel::new(stream).map_err(unreachable)?))
        }
        #[cfg(unix)]
        Endpoint::Unix(path) => {
            let stream = std::os::unix::net::UnixStream::connect(path).map_err(unreachable)?;
            Ok(Box::new(SocketChannel::new(stream).map_err(unreachable)?))
        }
        #[cfg(not(unix))]
        Endpoint::Unix(_) => Err(unreachable(io::Error::new(
            io::ErrorKind::Unsupported,
            "unix sockets are not available on this platform",
        ))),
        Endpoint::Exec(argv) => Ok(Box::new(ProcessChannel::spawn(argv).map_err(unreachable)?)),
    }
}

/// Client for either oracle protocol over any [`LineChannel`].
pub struct LineOracle {
    channel: Box<dyn LineChannel>,
    timeout: Duration,
    requests: u64,
}

impl LineOracle {
    pub fn new(channel: Box<dyn LineChannel>, timeout: Duration) -> Self {
        LineOracle {
            channel,
            timeout,
            requests: 0,
        }
    }

    pub fn connect(endpoint: &Endpoint, timeout: Duration) -> Result<Self, OracleError> {
        Ok(LineOracle::new(connect(endpoint, timeout)?, timeout))
    }

    fn call<Req: Serialize, Resp: DeserializeOwned>(
        &mut self,
        req: &Req,
        request: &str,
    ) -> Result<Resp, OracleError> {
        self.requests += 1;
        let line = serde_json::to_string(req).expect("request serialization is infallible");
        let reply = self.channel.round_trip(&line, self.timeout).map_err(|e| {
            if e.kind() == io::ErrorKind::TimedOut {
                OracleError::Timeout {
                    request: request.to_string(),
                    after: self.timeout,
                }
            } else {
                OracleError::Io {
                    request: request.to_string(),
                    source: e,
                }
            }
        })?;
        serde_json::from_str(reply.trim_end()).map_err(|e| OracleError::Protocol {
            request: request.to_string(),
            message: format!("malformed response: {e}"),
        })
    }
}

impl MaskedLm for LineOracle {
    fn fill_mask(
        &mut self,
        words: &[String],
        mask_index: usize,
        k: usize,
    ) -> Result<Vec<Candidate>, OracleError> {
        let request = format!("fill_mask request #{} (mask_index {mask_index})", self.requests + 1);
        let req = MaskRequest {
            version: PROTOCOL_VERSION,
            words: words.to_vec(),
            mask_index,
            k,
        };
        let resp: MaskResponse = self.call(&req, &request)?;
        protocol::check_version(resp.version, &request)?;
        if let Some(message) = resp.error {
            return Err(OracleError::Remote { request, message });
        }
        protocol::check_candidates(&resp.candidates, &request)?;
        Ok(resp.candidates)
    }
}

impl Predictor for LineOracle {
    fn predict(&mut self, doc: &Document) -> Result<Vec<String>, OracleError> {
        let request = format!("predict request #{} (document {})", self.requests + 1, doc.id);
        let req = PredictRequest::from_document(doc);
        let resp: PredictResponse = self.call(&req, &request)?;
        protocol::check_version(resp.version, &request)?;
        if let Some(message) = resp.error {
            return Err(OracleError::Remote { request, message });
        }
        if resp.labels.len() != req.words.len() {
            return Err(OracleError::Protocol {
                request,
                message: format!(
                    "{} labels for {} words",
                    resp.labels.len(),
                    req.words.len()
                ),
            });
        }
        Ok(resp.labels)
    }
}
