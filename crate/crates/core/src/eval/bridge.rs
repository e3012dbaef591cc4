//! Line protocol for decoders running in another process.
//!
//! Newline-delimited ASCII. For every frame the harness sends
//!
//! ```text
//! FRAME <id> <n> <n-k>
//! <n normalized reliabilities, space separated>
//! <n-k syndrome bits, space separated>
//! ```
//!
//! and the peer answers
//!
//! ```text
//! EPAT <id>
//! <n error-pattern bits, space separated or contiguous>
//! ```

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use crate::bits::BitVec;
use crate::code::LinearCode;
use crate::error::{Error, Result};
use crate::eval::{Decoder, Frame};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BridgeEndpoint {
    /// Spawn `program args..` and talk over its stdin/stdout.
    Command { program: String, args: Vec<String> },
    /// Connect to `host:port`.
    Tcp(String),
}

impl BridgeEndpoint {
    /// `tcp:HOST:PORT`, or a whitespace-separated command line.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(addr) = text.strip_prefix("tcp:") {
            return Ok(Self::Tcp(addr.to_string()));
        }
        let mut words = text.split_whitespace().map(str::to_string);
        let program = words
            .next()
            .ok_or_else(|| Error::InvalidParameter("empty bridge command".into()))?;
        Ok(Self::Command {
            program,
            args: words.collect(),
        })
    }
}

struct Connection {
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<io::Result<String>>,
    child: Option<Child>,
    tcp: Option<TcpStream>,
    broken: bool,
}

impl Drop for Connection {
    fn drop(&mut self) {
        self.writer.take();
        if let Some(s) = &self.tcp {
            let _ = s.shutdown(Shutdown::Both);
        }
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

fn spawn_reader<R: Read + Send + 'static>(read: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(read).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

/// Decoder that forwards every frame to a peer speaking the line protocol.
/// Requests are serialized, so parallel callers take turns.
pub struct BridgeDecoder {
    n: usize,
    r: usize,
    timeout: Duration,
    conn: Mutex<Connection>,
}

impl BridgeDecoder {
    pub fn connect(code: &LinearCode, endpoint: &BridgeEndpoint, timeout: Duration) -> Result<Self> {
        let conn = match endpoint {
            BridgeEndpoint::Command { program, args } => {
                let mut child = Command::new(program)
                    .args(args)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Connection {
                    writer: Some(Box::new(io::BufWriter::new(stdin))),
                    lines: spawn_reader(stdout),
                    child: Some(child),
                    tcp: None,
                    broken: false,
                }
            }
            BridgeEndpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr)?;
                stream.set_nodelay(true)?;
                Connection {
                    writer: Some(Box::new(io::BufWriter::new(stream.try_clone()?))),
                    lines: spawn_reader(stream.try_clone()?),
                    child: None,
                    tcp: Some(stream),
                    broken: false,
                }
            }
        };
        Ok(Self {
            n: code.n(),
            r: code.redundancy(),
            timeout,
            conn: Mutex::new(conn),
        })
    }

    fn exchange(&self, conn: &mut Connection, id: u64, reliab: &[f64], s: &BitVec) -> Result<BitVec> {
        let w = conn.writer.as_mut().expect("writer open");
        write_request(w, id, self.n, self.r, reliab, s)?;
        w.flush()?;
        let header = next_line(conn, id, self.timeout)?;
        let mut words = header.split_whitespace();
        match (words.next(), words.next().map(str::parse::<u64>), words.next()) {
            (Some("EPAT"), Some(Ok(got)), None) if got == id => {}
            (Some("EPAT"), Some(Ok(got)), None) => {
                return Err(Error::Protocol {
                    frame: id,
                    msg: format!("response for frame {got}, expected {id}"),
                })
            }
            _ => {
                return Err(Error::Protocol {
                    frame: id,
                    msg: format!("expected 'EPAT {id}', got '{}'", header.trim()),
                })
            }
        }
        let bits = next_line(conn, id, self.timeout)?;
        parse_bits(&bits, self.n, "error-pattern").map_err(|msg| Error::Protocol { frame: id, msg })
    }
}

fn next_line(conn: &mut Connection, id: u64, timeout: Duration) -> Result<String> {
    loop {
        match conn.lines.recv_timeout(timeout) {
            Ok(Ok(line)) if line.trim().is_empty() => continue,
            Ok(Ok(line)) => return Ok(line),
            Ok(Err(e)) => return Err(e.into()),
            Err(RecvTimeoutError::Timeout) => return Err(Error::Timeout { frame: id }),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::Protocol {
                    frame: id,
                    msg: "peer closed the connection".into(),
                })
            }
        }
    }
}

impl Decoder for BridgeDecoder {
    fn name(&self) -> &str {
        "bridge"
    }

    fn decode(&self, frame: &Frame<'_>) -> Result<BitVec> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if conn.broken {
            return Err(Error::Protocol {
                frame: frame.id,
                msg: "connection unusable after an earlier failure".into(),
            });
        }
        let out = self.exchange(&mut conn, frame.id, &frame.rx.reliab_norm, &frame.rx.s);
        conn.broken = out.is_err();
        out
    }
}

fn push_bits(out: &mut Vec<u8>, bits: &BitVec) {
    for (i, b) in bits.iter().enumerate() {
        if i > 0 {
            out.push(b' ');
        }
        out.push(if b { b'1' } else { b'0' });
    }
    out.push(b'\n');
}

fn write_request<W: Write + ?Sized>(
    out: &mut W,
    id: u64,
    n: usize,
    r: usize,
    reliab: &[f64],
    s: &BitVec,
) -> io::Result<()> {
    let mut buf = Vec::with_capacity(16 * n + 2 * r + 32);
    writeln!(buf, "FRAME {id} {n} {r}")?;
    for (i, v) in reliab.iter().enumerate() {
        if i > 0 {
            buf.push(b' ');
        }
        write!(buf, "{v:.8e}")?;
    }
    buf.push(b'\n');
    push_bits(&mut buf, s);
    out.write_all(&buf)
}

/// Parses `expected` bits given either as separate tokens or one contiguous
/// token.
fn parse_bits(line: &str, expected: usize, what: &str) -> std::result::Result<BitVec, String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let chars: Vec<char> = if tokens.len() == 1 {
        tokens[0].chars().collect()
    } else {
        tokens
            .iter()
            .map(|t| {
                let mut c = t.chars();
                match (c.next(), c.next()) {
                    (Some(ch), None) => ch,
                    _ => '?',
                }
            })
            .collect()
    };
    if chars.len() != expected {
        return Err(format!("expected {expected} {what} bits, got {}", chars.len()));
    }
    chars
        .iter()
        .map(|&c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(format!("{what} bits must be 0 or 1")),
        })
        .collect::<std::result::Result<Vec<bool>, String>>()
        .map(BitVec::from_bits)
}

/// Answers protocol requests read from `input` until end of input, using
/// `decode(reliab_norm, syndrome)` for every frame. Returns the number of
/// frames served.
pub fn serve_bridge<R, W, F>(code: &LinearCode, input: R, mut output: W, mut decode: F) -> Result<u64>
where
    R: BufRead,
    W: Write,
    F: FnMut(&[f64], &BitVec) -> Result<BitVec>,
{
    let (n, r) = (code.n(), code.redundancy());
    let mut lines = input.lines().filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()));
    let mut served = 0;
    while let Some(header) = lines.next() {
        let header = header?;
        let w: Vec<&str> = header.split_whitespace().collect();
        let id = match w.as_slice() {
            ["FRAME", id, fn_, fr] => {
                let id = id.parse::<u64>().map_err(|_| Error::Protocol {
                    frame: served,
                    msg: format!("bad frame id '{id}'"),
                })?;
                if fn_.parse::<usize>().ok() != Some(n) || fr.parse::<usize>().ok() != Some(r) {
                    return Err(Error::Protocol {
                        frame: id,
                        msg: format!("frame is ({fn_}, {fr}), code expects n={n}, n-k={r}"),
                    });
                }
                id
            }
            _ => {
                return Err(Error::Protocol {
                    frame: served,
                    msg: format!("expected 'FRAME <id> {n} {r}', got '{}'", header.trim()),
                })
            }
        };
        let mut body = || -> Result<String> {
            lines.next().transpose()?.ok_or_else(|| Error::Protocol {
                frame: id,
                msg: "input ended inside a frame".into(),
            })
        };
        let floats = body()?;
        let reliab: Vec<f64> = floats
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Protocol {
                frame: id,
                msg: format!("bad reliability value: {e}"),
            })?;
        if reliab.len() != n {
            return Err(Error::Protocol {
                frame: id,
                msg: format!("expected {n} reliabilities, got {}", reliab.len()),
            });
        }
        let s = parse_bits(&body()?, r, "syndrome").map_err(|msg| Error::Protocol { frame: id, msg })?;
        let e = decode(&reliab, &s)?;
        if e.len() != n {
            return Err(Error::LengthMismatch {
                what: "served error pattern",
                expected: n,
                actual: e.len(),
            });
        }
        let mut reply = format!("EPAT {id}\n").into_bytes();
        push_bits(&mut reply, &e);
        output.write_all(&reply)?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}
