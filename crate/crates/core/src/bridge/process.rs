use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{decode_response, encode, Request, Response};
use crate::dataset::BoundingBox;
use crate::error::{Error, Result};
use crate::tracker::{Frame, Tracker};

/// Environment variable carrying the adapter seed.
pub const SEED_ENV: &str = "TRACKER_SEED";

#[derive(Debug, Clone)]
pub struct BridgeConfig {
    /// Upper bound on the wait for any single response, the first `init`
    /// included.
    pub timeout: Duration,
    pub seed: u64,
    /// Where the adapter's stderr goes; a temporary file when unset.
    pub stderr_log: Option<PathBuf>,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(60),
            seed: 0,
            stderr_log: None,
        }
    }
}

/// A tracker living in a child process, driven over its stdin/stdout.
///
/// Requests and responses strictly alternate. Frames without an on-disk
/// path are written as PNG into a private directory during `prepare`, so the
/// recorded latency covers only the request round trip.
pub struct ExternalTracker {
    name: String,
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    config: BridgeConfig,
    stderr_path: PathBuf,
    _stderr_tmp: Option<tempfile::TempPath>,
    frames_dir: tempfile::TempDir,
    staged: Option<(usize, PathBuf)>,
    latencies: Vec<Duration>,
    initialized: bool,
}

impl ExternalTracker {
    /// Spawns `command` through the shell.
    pub fn spawn(command: &str, config: BridgeConfig) -> Result<Self> {
        let (stderr_file, stderr_path, stderr_tmp) = match &config.stderr_log {
            Some(p) => {
                if let Some(parent) = p.parent() {
                    fs::create_dir_all(parent)
                        .map_err(|e| Error::io(format!("creating {}", parent.display()), e))?;
                }
                let f = File::create(p)
                    .map_err(|e| Error::io(format!("creating {}", p.display()), e))?;
                (f, p.clone(), None)
            }
            None => {
                let tmp = tempfile::NamedTempFile::new()
                    .map_err(|e| Error::io("creating adapter stderr log", e))?;
                let f = tmp
                    .reopen()
                    .map_err(|e| Error::io("opening adapter stderr log", e))?;
                let path = tmp.into_temp_path();
                (f, path.to_path_buf(), Some(path))
            }
        };

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .env(SEED_ENV, config.seed.to_string())
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::from(stderr_file))
            .spawn()
            .map_err(|e| Error::Bridge(format!("cannot spawn `{command}`: {e}")))?;

        let stdout = child.stdout.take().expect("stdout piped");
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("adapter-reader".into())
            .spawn(move || {
                for line in BufReader::new(stdout).lines() {
                    let eof = line.is_err();
                    if tx.send(line).is_err() || eof {
                        return;
                    }
                }
                let _ = tx.send(Err(std::io::ErrorKind::UnexpectedEof.into()));
            })
            .map_err(|e| Error::io("starting adapter reader", e))?;

        let frames_dir = tempfile::Builder::new()
            .prefix("fpvtrack-frames-")
            .tempdir()
            .map_err(|e| Error::io("creating frame staging directory", e))?;

        Ok(Self {
            name: format!("external:{command}"),
            stdin: child.stdin.take(),
            child,
            lines: rx,
            config,
            stderr_path,
            _stderr_tmp: stderr_tmp,
            frames_dir,
            staged: None,
            latencies: Vec::new(),
            initialized: false,
        })
    }

    /// Round-trip time of every answered request, in order.
    pub fn latencies(&self) -> &[Duration] {
        &self.latencies
    }

    pub fn stderr_path(&self) -> &Path {
        &self.stderr_path
    }

    fn stderr_tail(&self) -> String {
        let text = fs::read_to_string(&self.stderr_path).unwrap_or_default();
        let lines: Vec<&str> = text.lines().collect();
        let tail = lines[lines.len().saturating_sub(20)..].join(" | ");
        if tail.is_empty() {
            String::new()
        } else {
            format!("; stderr: {tail}")
        }
    }

    fn died(&mut self, what: &str) -> Error {
        // give the child a moment to finish writing stderr and exit
        let deadline = Instant::now() + Duration::from_millis(500);
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(s)) => break Some(s),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => break None,
            }
        };
        let status = status.map_or_else(|| "still running".to_string(), |s| s.to_string());
        Error::Bridge(format!("adapter {what} ({status}){}", self.stderr_tail()))
    }

    fn request(&mut self, req: &Request) -> Result<BoundingBox> {
        let line = encode(req);
        let start = Instant::now();
        let written = match self.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{line}").and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        if written.is_err() {
            return Err(self.died("closed its input"));
        }
        let reply = match self.lines.recv_timeout(self.config.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => {
                return Err(self.died("exited before answering"));
            }
            Err(RecvTimeoutError::Timeout) => {
                let _ = self.child.kill();
                return Err(Error::Bridge(format!(
                    "adapter did not answer within {:?}{}",
                    self.config.timeout,
                    self.stderr_tail()
                )));
            }
        };
        self.latencies.push(start.elapsed());
        match decode_response(&reply)? {
            Response::Ok { bbox } => Ok(bbox),
            Response::Error { message } => Err(Error::Bridge(format!("adapter error: {message}"))),
        }
    }

    fn frame_path(&mut self, frame: &Frame<'_>) -> Result<String> {
        if !matches!(&self.staged, Some((i, _)) if *i == frame.index()) {
            self.stage(frame)?;
        }
        let (_, path) = self.staged.as_ref().expect("staged above");
        Ok(path.to_string_lossy().into_owned())
    }

    fn stage(&mut self, frame: &Frame<'_>) -> Result<()> {
        let path = match frame.path() {
            Some(p) => std::path::absolute(&p)
                .map_err(|e| Error::io(format!("resolving {}", p.display()), e))?,
            None => {
                let p = self
                    .frames_dir
                    .path()
                    .join(crate::dataset::PngDirectory::file_name(frame.index()));
                frame.image()?.save_png(&p)?;
                p
            }
        };
        self.staged = Some((frame.index(), path));
        Ok(())
    }
}

impl Tracker for ExternalTracker {
    fn name(&self) -> &str {
        &self.name
    }

    fn prepare(&mut self, frame: &Frame<'_>) -> Result<()> {
        self.stage(frame)
    }

    fn init(&mut self, frame: &Frame<'_>, target: BoundingBox) -> Result<()> {
        let frame = self.frame_path(frame)?;
        self.request(&Request::Init {
            frame,
            bbox: target,
        })?;
        self.initialized = true;
        Ok(())
    }

    fn update(&mut self, frame: &Frame<'_>) -> Result<BoundingBox> {
        if !self.initialized {
            return Err(crate::tracker::not_initialized(&self.name));
        }
        let frame = self.frame_path(frame)?;
        self.request(&Request::Update { frame })
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}

impl Drop for ExternalTracker {
    fn drop(&mut self) {
        // quit gets no response; the adapter is expected to exit
        if let Some(mut stdin) = self.stdin.take() {
            let _ = writeln!(stdin, "{}", encode(&Request::Quit));
            let _ = stdin.flush();
        }
        let deadline = Instant::now() + Duration::from_secs(2);
        loop {
            match self.child.try_wait() {
                Ok(Some(_)) => return,
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(5)),
                _ => break,
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
